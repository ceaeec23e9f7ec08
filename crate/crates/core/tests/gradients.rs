//! Finite-difference oracles for every analytic derivative in the crate.

use grokbench_core::kernel::{fit, KernelMachine, KernelSpec};
use grokbench_core::measures::mse;
use grokbench_core::nnet::QuadMlp;
use grokbench_core::{Mat, Rng64, SymMatrix};

const STEP: f64 = 1e-5;

fn random(r: &mut Rng64, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| r.normal())
}

/// Central difference of `f` with respect to every entry of `w`.
fn fd_matrix(w: &Mat, mut f: impl FnMut(&Mat) -> f64) -> Mat {
    let mut out = Mat::zeros(w.rows(), w.cols());
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            let mut plus = w.clone();
            plus[(i, j)] += STEP;
            let mut minus = w.clone();
            minus[(i, j)] -= STEP;
            out[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * STEP);
        }
    }
    out
}

fn rel_err(a: &Mat, b: &Mat) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(1e-300)
}

/// `(1/n) sum_x sum_l |grad_x f_l(x)|^2`, built from explicit per-sample Jacobians.
fn trace_oracle(w1: &Mat, w2: &Mat, x: &Mat) -> f64 {
    let mut total = 0.0;
    for s in 0..x.rows() {
        let h = w1.matvec(x.row(s));
        for l in 0..w2.rows() {
            for k in 0..w1.cols() {
                let g: f64 = (0..w1.rows()).map(|j| 2.0 * w1[(j, k)] * h[j] * w2[(l, j)]).sum();
                total += g * g;
            }
        }
    }
    total / x.rows() as f64
}

/// Jacobian of `x -> f(x)` by central differences, as a `d x p` matrix.
fn fd_jacobian(x: &[f64], p: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Mat {
    let mut j = Mat::zeros(x.len(), p);
    for k in 0..x.len() {
        let mut plus = x.to_vec();
        plus[k] += STEP;
        let mut minus = x.to_vec();
        minus[k] -= STEP;
        let (fp, fm) = (f(&plus), f(&minus));
        for l in 0..p {
            j[(k, l)] = (fp[l] - fm[l]) / (2.0 * STEP);
        }
    }
    j
}

fn outer_mean(jacobians: &[Mat]) -> Mat {
    let d = jacobians[0].rows();
    let mut g = Mat::zeros(d, d);
    for j in jacobians {
        g = g.add(&j.matmul_t(j));
    }
    g.scale(1.0 / jacobians.len() as f64)
}

#[test]
fn mlp_backward_matches_finite_differences() {
    let mut r = Rng64::new(11);
    for trial in 0..5 {
        let (d, m, p, n) = (10, 8, 5, 6);
        let net = QuadMlp::init(d, m, p, 100 + trial);
        let x = random(&mut r, n, d);
        let y = random(&mut r, n, p);
        let (g, _) = net.backward(&x, &y).unwrap();
        let loss = |w1: &Mat, w2: &Mat| {
            let net = QuadMlp::from_weights(w1.clone(), w2.clone()).unwrap();
            mse(&net.forward(&x).unwrap(), &y).unwrap()
        };
        let fd1 = fd_matrix(net.w1(), |w| loss(w, net.w2()));
        let fd2 = fd_matrix(net.w2(), |w| loss(net.w1(), w));
        assert!(rel_err(&g.w1, &fd1) < 1e-5, "W1 trial {trial}: {}", rel_err(&g.w1, &fd1));
        assert!(rel_err(&g.w2, &fd2) < 1e-5, "W2 trial {trial}: {}", rel_err(&g.w2, &fd2));
    }
}

#[test]
fn agop_trace_and_gradients_match_oracles() {
    let mut r = Rng64::new(12);
    let net = QuadMlp::init(7, 5, 4, 3);
    let x = random(&mut r, 9, 7);
    let (trace, g) = net.agop_trace(&x).unwrap();
    let direct = trace_oracle(net.w1(), net.w2(), &x);
    assert!((trace - direct).abs() < 1e-12 * direct);
    assert!((net.agop(&x).unwrap().trace() - direct).abs() < 1e-12 * direct);
    let fd1 = fd_matrix(net.w1(), |w| trace_oracle(w, net.w2(), &x));
    let fd2 = fd_matrix(net.w2(), |w| trace_oracle(net.w1(), w, &x));
    assert!(rel_err(&g.w1, &fd1) < 1e-4, "{}", rel_err(&g.w1, &fd1));
    assert!(rel_err(&g.w2, &fd2) < 1e-4, "{}", rel_err(&g.w2, &fd2));
}

#[test]
fn mlp_agop_matches_finite_difference_jacobians() {
    let mut r = Rng64::new(13);
    let net = QuadMlp::init(6, 8, 3, 9);
    let x = random(&mut r, 5, 6);
    let f = |v: &[f64]| net.forward(&Mat::from_vec(1, v.len(), v.to_vec()).unwrap()).unwrap().into_vec();
    let jac: Vec<Mat> = (0..5).map(|s| fd_jacobian(x.row(s), 3, f)).collect();
    let g = net.agop(&x).unwrap();
    assert!(rel_err(&g, &outer_mean(&jac)) < 1e-5);
    let e = grokbench_core::linalg::sym_eig(&g).unwrap();
    assert!(e.values[0] >= -1e-10 * e.values.last().unwrap());
}

fn random_machine(spec: KernelSpec, seed: u64) -> (KernelMachine, Rng64) {
    let mut r = Rng64::new(seed);
    let b = random(&mut r, 6, 6);
    let m = SymMatrix::new(b.t_matmul(&b).scale(0.2)).unwrap();
    let x = random(&mut r, 8, 6);
    let y = random(&mut r, 8, 3);
    (fit(&spec, &m, &x, &y).unwrap(), r)
}

#[test]
fn kernel_jacobians_match_finite_differences() {
    for spec in [KernelSpec::quadratic(), KernelSpec::gaussian(2.5).unwrap()] {
        let (km, mut r) = random_machine(spec, 21);
        let f = |v: &[f64]| km.predict(&Mat::from_vec(1, v.len(), v.to_vec()).unwrap()).unwrap().into_vec();
        for _ in 0..10 {
            let x: Vec<f64> = (0..6).map(|_| r.normal()).collect();
            let j = km.jacobian(&x).unwrap();
            let fd = fd_jacobian(&x, 3, f);
            assert!(rel_err(&j, &fd) < 1e-6, "{:?}: {}", spec.kind(), rel_err(&j, &fd));
        }
    }
}

#[test]
fn kernel_agop_matches_finite_difference_jacobians() {
    for spec in [KernelSpec::quadratic(), KernelSpec::gaussian(2.5).unwrap()] {
        let (km, mut r) = random_machine(spec, 22);
        let x = random(&mut r, 5, 6);
        let f = |v: &[f64]| km.predict(&Mat::from_vec(1, v.len(), v.to_vec()).unwrap()).unwrap().into_vec();
        let jac: Vec<Mat> = (0..5).map(|s| fd_jacobian(x.row(s), 3, f)).collect();
        let g = km.agop(&x).unwrap();
        assert!(rel_err(&g, &outer_mean(&jac)) < 1e-5);
    }
}

#[test]
fn adam_and_sgd_first_steps_descend() {
    use grokbench_core::nnet::{update_cosine, Grads, Optimizer, OptimizerKind, TrainConfig};
    let mut r = Rng64::new(31);
    let net = QuadMlp::init(6, 5, 3, 2);
    let x = random(&mut r, 8, 6);
    let y = random(&mut r, 8, 3);
    let (g, loss0) = net.backward(&x, &y).unwrap();
    let step = |kind: OptimizerKind| {
        let cfg = TrainConfig {
            optimizer: kind,
            learning_rate: 1e-6,
            weight_decay: 0.0,
            ..TrainConfig::adamw()
        };
        let mut moved = net.clone();
        Optimizer::new(&cfg, &net).apply(&mut moved, &g);
        let delta = Grads {
            w1: net.w1().sub(moved.w1()),
            w2: net.w2().sub(moved.w2()),
        };
        (moved, delta)
    };
    let (adam, d_adam) = step(OptimizerKind::AdamW);
    let (sgd, d_sgd) = step(OptimizerKind::Sgd);
    // SGD moves exactly along the gradient; Adam's first step is its sign.
    assert!((update_cosine(&d_sgd, &g).unwrap() - 1.0).abs() < 1e-9);
    let signs = Grads {
        w1: g.w1.map(|v| v.signum()),
        w2: g.w2.map(|v| v.signum()),
    };
    assert!(update_cosine(&d_adam, &signs).unwrap() > 0.999);
    assert!(update_cosine(&d_adam, &d_sgd).unwrap() > 0.0);
    for moved in [adam, sgd] {
        assert!(mse(&moved.forward(&x).unwrap(), &y).unwrap() < loss0);
    }
}
