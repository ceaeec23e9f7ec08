//! Mahalanobis kernels, ridgeless kernel machines and their AGOP.
//!
//! Both kernels depend on the inputs only through `x^T M x'`:
//!
//! - quadratic: `k(x, x') = (x^T M x')^2`
//! - Gaussian: `k(x, x') = exp(-(x - x')^T M (x - x') / L)`
//!
//! so kernel matrices reduce to one product `X1 M X2^T` plus a cheap
//! elementwise pass.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{solve_lu, solve_spd, SymMatrix};
use crate::matrix::{dot, gemm, gemm_acc_slices, Mat};

/// Bandwidth used throughout the experiments.
pub const DEFAULT_BANDWIDTH: f64 = 2.5;

/// Evaluation rows per AGOP accumulation chunk; bounds the scratch buffer to
/// `d * CHUNK * p` doubles.
const AGOP_CHUNK: usize = 384;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Quadratic,
    Gaussian,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Quadratic => "quadratic",
            KernelKind::Gaussian => "gaussian",
        }
    }

    pub fn from_name(name: &str) -> Option<KernelKind> {
        match name {
            "quadratic" => Some(KernelKind::Quadratic),
            "gaussian" => Some(KernelKind::Gaussian),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn quadratic() -> KernelSpec {
        KernelSpec {
            kind: KernelKind::Quadratic,
            bandwidth: DEFAULT_BANDWIDTH,
        }
    }

    pub fn gaussian(bandwidth: f64) -> Result<KernelSpec> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(KernelSpec {
            kind: KernelKind::Gaussian,
            bandwidth,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// `L`; carried but unused by the quadratic kernel.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Kernel value from `x^T M x'` and the two self-products.
    #[inline]
    fn from_products(&self, cross: f64, q1: f64, q2: f64) -> f64 {
        match self.kind {
            KernelKind::Quadratic => cross * cross,
            KernelKind::Gaussian => {
                let dist = (q1 + q2 - 2.0 * cross).max(0.0);
                libm::exp(-dist / self.bandwidth)
            }
        }
    }
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

pub fn k_eval(spec: &KernelSpec, m: &SymMatrix, x: &[f64], x2: &[f64]) -> Result<f64> {
    let d = m.dim();
    check_dim("kernel input", d, x.len())?;
    check_dim("kernel input", d, x2.len())?;
    Ok(match spec.kind {
        KernelKind::Quadratic => {
            let v = dot(x, &m.matvec(x2));
            v * v
        }
        KernelKind::Gaussian => {
            let diff: Vec<f64> = x.iter().zip(x2).map(|(a, b)| a - b).collect();
            libm::exp(-dot(&diff, &m.matvec(&diff)) / spec.bandwidth)
        }
    })
}

/// `X1 M X2^T`.
fn cross_products(m: &SymMatrix, x1: &Mat, x2: &Mat) -> Mat {
    let xm = x1.matmul(m);
    xm.matmul_t(x2)
}

/// Row-wise `x^T M x`.
fn self_products(m: &SymMatrix, x: &Mat) -> Vec<f64> {
    let xm = x.matmul(m);
    (0..x.rows()).map(|i| dot(xm.row(i), x.row(i))).collect()
}

pub fn kernel_matrix(spec: &KernelSpec, m: &SymMatrix, x1: &Mat, x2: &Mat) -> Result<Mat> {
    check_dim("kernel_matrix left inputs", m.dim(), x1.cols())?;
    check_dim("kernel_matrix right inputs", m.dim(), x2.cols())?;
    let mut k = cross_products(m, x1, x2);
    let same = core::ptr::eq(x1, x2);
    if same {
        // gemm rounding is not symmetric; copy the upper triangle down.
        let n = k.rows();
        for i in 1..n {
            for j in 0..i {
                k[(i, j)] = k[(j, i)];
            }
        }
    }
    match spec.kind {
        KernelKind::Quadratic => k.as_mut_slice().iter_mut().for_each(|v| *v *= *v),
        KernelKind::Gaussian => {
            let q1 = self_products(m, x1);
            let q2 = if same {
                q1.clone()
            } else {
                self_products(m, x2)
            };
            for (i, &qi) in q1.iter().enumerate() {
                for (v, &qj) in k.row_mut(i).iter_mut().zip(&q2) {
                    *v = spec.from_products(*v, qi, qj);
                }
            }
        }
    }
    Ok(k)
}

/// Ridgeless fit through a pivoted LU solve.
///
/// For feature matrices that are not PSD, where the kernel matrix can be
/// invertible without being positive definite.
pub fn fit_indefinite(spec: &KernelSpec, m: &SymMatrix, x_train: &Mat, y_train: &Mat) -> Result<KernelMachine> {
    if x_train.rows() == 0 {
        return Err(Error::EmptyInput("training inputs"));
    }
    check_dim("training labels", x_train.rows(), y_train.rows())?;
    let k = kernel_matrix(spec, m, x_train, x_train)?;
    let alpha = solve_lu(&k, y_train)?;
    KernelMachine::from_parts(*spec, m.clone(), x_train.clone(), alpha)
}

/// Fitted predictor `f(x) = k(x, X; M) alpha`.
#[derive(Debug, Clone)]
pub struct KernelMachine {
    spec: KernelSpec,
    m: SymMatrix,
    x_train: Mat,
    alpha: Mat,
    jitter: Option<f64>,
}

/// Ridgeless fit: `alpha = k(X, X; M)^{-1} Y`.
pub fn fit(spec: &KernelSpec, m: &SymMatrix, x_train: &Mat, y_train: &Mat) -> Result<KernelMachine> {
    if x_train.rows() == 0 {
        return Err(Error::EmptyInput("training inputs"));
    }
    check_dim("training labels", x_train.rows(), y_train.rows())?;
    let k = SymMatrix::new(kernel_matrix(spec, m, x_train, x_train)?)?;
    let sol = solve_spd(&k, y_train, 0.0)?;
    Ok(KernelMachine {
        spec: *spec,
        m: m.clone(),
        x_train: x_train.clone(),
        alpha: sol.alpha,
        jitter: sol.jitter_applied,
    })
}

impl KernelMachine {
    /// Assembles a machine from known coefficients without solving.
    pub fn from_parts(spec: KernelSpec, m: SymMatrix, x_train: Mat, alpha: Mat) -> Result<KernelMachine> {
        check_dim("kernel machine inputs", m.dim(), x_train.cols())?;
        check_dim("kernel machine coefficients", x_train.rows(), alpha.rows())?;
        Ok(KernelMachine {
            spec,
            m,
            x_train,
            alpha,
            jitter: None,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn feature_matrix(&self) -> &SymMatrix {
        &self.m
    }

    pub fn x_train(&self) -> &Mat {
        &self.x_train
    }

    pub fn alpha(&self) -> &Mat {
        &self.alpha
    }

    pub fn outputs(&self) -> usize {
        self.alpha.cols()
    }

    /// Diagonal ridge the solver had to add, if any.
    pub fn jitter(&self) -> Option<f64> {
        self.jitter
    }

    pub fn predict(&self, x: &Mat) -> Result<Mat> {
        let k = kernel_matrix(&self.spec, &self.m, x, &self.x_train)?;
        Ok(k.matmul(&self.alpha))
    }

    /// `d x p` matrix whose column `l` is the gradient of output `l` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Mat> {
        let d = self.m.dim();
        check_dim("jacobian point", d, x.len())?;
        let n = self.x_train.rows();
        let p = self.alpha.cols();
        let xm = self.m.matvec(x);
        // z = sum_j w_j x_j alpha_j^T, with the per-kernel weights below.
        let mut z = Mat::zeros(d, p);
        let mut s = vec![0.0; p];
        let qx = dot(&xm, x);
        for j in 0..n {
            let xj = self.x_train.row(j);
            let cross = dot(&xm, xj);
            let w = match self.spec.kind {
                KernelKind::Quadratic => cross,
                KernelKind::Gaussian => {
                    let qj = dot(&self.m.matvec(xj), xj);
                    self.spec.from_products(cross, qx, qj)
                }
            };
            let aj = self.alpha.row(j);
            for (sl, &a) in s.iter_mut().zip(aj) {
                *sl += w * a;
            }
            for (c, &xc) in xj.iter().enumerate() {
                if xc != 0.0 {
                    for (zl, &a) in z.row_mut(c).iter_mut().zip(aj) {
                        *zl += w * xc * a;
                    }
                }
            }
        }
        let inner = match self.spec.kind {
            KernelKind::Quadratic => z.scale(2.0),
            KernelKind::Gaussian => {
                let outer = Mat::from_fn(d, p, |c, l| x[c] * s[l]);
                outer.sub(&z).scale(-2.0 / self.spec.bandwidth)
            }
        };
        Ok(self.m.matmul(&inner))
    }

    /// `(1/n) sum_i J(x_i) J(x_i)^T` over the rows of `x`.
    ///
    /// Every Jacobian has the form `c M Z_i` with
    /// `Z_i = sum_j W_ij x_j alpha_j^T` (minus `x_i s_i^T` for the Gaussian
    /// kernel), so the sum is `c^2 M (sum_i Z_i Z_i^T) M / n`. The `Z_i` are
    /// built one input coordinate at a time from the rows where that
    /// coordinate is nonzero, which is cheap for one-hot data.
    pub fn agop(&self, x: &Mat) -> Result<SymMatrix> {
        let d = self.m.dim();
        check_dim("agop inputs", d, x.cols())?;
        let n_eval = x.rows();
        if n_eval == 0 {
            return Err(Error::EmptyInput("agop evaluation set"));
        }
        let p = self.alpha.cols();
        let n = self.x_train.rows();

        let mut w = cross_products(&self.m, x, &self.x_train);
        let scale = match self.spec.kind {
            KernelKind::Quadratic => 2.0,
            KernelKind::Gaussian => {
                let q1 = self_products(&self.m, x);
                let q2 = self_products(&self.m, &self.x_train);
                for (i, &qi) in q1.iter().enumerate() {
                    for (v, &qj) in w.row_mut(i).iter_mut().zip(&q2) {
                        *v = self.spec.from_products(*v, qi, qj);
                    }
                }
                2.0 / self.spec.bandwidth
            }
        };
        let s = match self.spec.kind {
            KernelKind::Quadratic => None,
            KernelKind::Gaussian => Some(w.matmul(&self.alpha)),
        };

        // Support of each input coordinate among the training rows, with the
        // matching rows of alpha pre-scaled by the coordinate value.
        let mut support: Vec<Vec<usize>> = vec![Vec::new(); d];
        for j in 0..n {
            for (c, &v) in self.x_train.row(j).iter().enumerate() {
                if v != 0.0 {
                    support[c].push(j);
                }
            }
        }
        let scaled_alpha: Vec<Vec<f64>> = support
            .iter()
            .enumerate()
            .map(|(c, rows)| {
                let mut buf = Vec::with_capacity(rows.len() * p);
                for &j in rows {
                    let xc = self.x_train[(j, c)];
                    buf.extend(self.alpha.row(j).iter().map(|a| xc * a));
                }
                buf
            })
            .collect();

        let mut g = Mat::zeros(d, d);
        let mut gathered = Vec::new();
        let mut b = Vec::new();
        let mut i0 = 0;
        while i0 < n_eval {
            let rows = AGOP_CHUNK.min(n_eval - i0);
            let width = rows * p;
            b.clear();
            b.resize(d * width, 0.0);
            for c in 0..d {
                let sup = &support[c];
                if sup.is_empty() {
                    continue;
                }
                let k = sup.len();
                gathered.clear();
                gathered.reserve(rows * k);
                for i in i0..i0 + rows {
                    let wi = w.row(i);
                    gathered.extend(sup.iter().map(|&j| wi[j]));
                }
                gemm_acc_slices(rows, k, p, &gathered, &scaled_alpha[c], &mut b[c * width..(c + 1) * width]);
            }
            if let Some(s) = &s {
                // Gaussian: B holds Z; replace with x s^T - Z.
                for c in 0..d {
                    let row = &mut b[c * width..(c + 1) * width];
                    for r in 0..rows {
                        let xc = x[(i0 + r, c)];
                        let sr = s.row(i0 + r);
                        for (v, &sl) in row[r * p..(r + 1) * p].iter_mut().zip(sr) {
                            *v = xc * sl - *v;
                        }
                    }
                }
            }
            let bm = Mat::from_vec(d, width, core::mem::take(&mut b)).expect("chunk shape");
            gemm(1.0, &bm, false, &bm, true, 1.0, &mut g);
            b = bm.into_vec();
            i0 += rows;
        }
        let mg = self.m.matmul(&g);
        let mut out = mg.matmul(&self.m);
        out.scale_in_place(scale * scale / n_eval as f64);
        SymMatrix::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ModTask, Operation};
    use crate::rng::Rng64;

    fn onehot_pair(a: usize, b: usize, p: usize) -> Vec<f64> {
        crate::dataset::encode_pair(a, b, p).unwrap()
    }

    #[test]
    fn k_eval_forced_values() {
        let i = SymMatrix::identity(4);
        let x = onehot_pair(1, 0, 2);
        assert_eq!(k_eval(&KernelSpec::quadratic(), &i, &x, &x).unwrap(), 4.0);
        let g = KernelSpec::gaussian(2.5).unwrap();
        assert_eq!(k_eval(&g, &i, &x, &x).unwrap(), 1.0);
        let y = onehot_pair(0, 1, 2);
        let v = k_eval(&g, &i, &x, &y).unwrap();
        assert!((v - libm::exp(-1.6)).abs() < 1e-15);
        assert!(matches!(
            k_eval(&g, &i, &x, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_bandwidth() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn kernel_matrix_matches_pointwise() {
        let mut r = Rng64::new(5);
        let b = Mat::from_fn(6, 6, |_, _| r.normal());
        let m = SymMatrix::new(b.t_matmul(&b)).unwrap();
        let x1 = Mat::from_fn(7, 6, |_, _| r.normal());
        let x2 = Mat::from_fn(4, 6, |_, _| r.normal());
        for spec in [KernelSpec::quadratic(), KernelSpec::gaussian(3.0).unwrap()] {
            let k = kernel_matrix(&spec, &m, &x1, &x2).unwrap();
            for _ in 0..5 {
                let (i, j) = (r.below(7), r.below(4));
                let e = k_eval(&spec, &m, x1.row(i), x2.row(j)).unwrap();
                assert!((k[(i, j)] - e).abs() <= 1e-10 * e.abs().max(1e-300));
            }
            let kk = kernel_matrix(&spec, &m, &x1, &x1).unwrap();
            assert_eq!(kk.max_abs_diff(&kk.transpose()), 0.0);
        }
    }

    #[test]
    fn single_point_fit_and_gradients() {
        let x0 = Mat::from_rows(&[vec![0.0, 1.0, 0.0]]).unwrap();
        let y0 = Mat::from_rows(&[vec![3.0]]).unwrap();
        let i = SymMatrix::identity(3);
        let km = fit(&KernelSpec::quadratic(), &i, &x0, &y0).unwrap();
        assert!((km.alpha()[(0, 0)] - 3.0).abs() < 1e-15);

        let unit = KernelMachine::from_parts(KernelSpec::quadratic(), i.clone(), x0.clone(), Mat::identity(1)).unwrap();
        let j = unit.jacobian(x0.row(0)).unwrap();
        assert_eq!(j.as_slice(), &[0.0, 2.0, 0.0]);

        let gauss = KernelMachine::from_parts(KernelSpec::gaussian(2.5).unwrap(), i, x0.clone(), Mat::identity(1)).unwrap();
        assert_eq!(gauss.jacobian(x0.row(0)).unwrap().max_abs(), 0.0);
        let pt = [0.5, 0.0, 1.0];
        let pred = gauss.predict(&Mat::from_rows(&[pt.to_vec()]).unwrap()).unwrap();
        let expect = k_eval(gauss.spec(), gauss.feature_matrix(), &pt, x0.row(0)).unwrap();
        assert_eq!(pred[(0, 0)], expect);
    }

    #[test]
    fn interpolates_full_addition_table() {
        let data = crate::Dataset::from_task(&ModTask::new(Operation::Add, 5).unwrap(), 1.0, 0).unwrap();
        let i = SymMatrix::identity(10);
        let km = fit(&KernelSpec::quadratic(), &i, &data.train_x(), &data.train_y()).unwrap();
        let pred = km.predict(&data.train_x()).unwrap();
        assert!(pred.max_abs_diff(&data.train_y()) < 1e-6);
        let again = km.predict(&data.train_x()).unwrap();
        assert_eq!(pred, again);
    }

    /// Jacobian by central differences of `predict`.
    fn fd_jacobian(km: &KernelMachine, x: &[f64], h: f64) -> Mat {
        let d = x.len();
        let p = km.outputs();
        let mut j = Mat::zeros(d, p);
        for c in 0..d {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[c] += h;
            minus[c] -= h;
            let pts = Mat::from_rows(&[plus, minus]).unwrap();
            let f = km.predict(&pts).unwrap();
            for l in 0..p {
                j[(c, l)] = (f[(0, l)] - f[(1, l)]) / (2.0 * h);
            }
        }
        j
    }

    fn random_machine(spec: KernelSpec, seed: u64) -> KernelMachine {
        let mut r = Rng64::new(seed);
        let d = 5;
        let b = Mat::from_fn(d, d, |_, _| r.normal() * 0.4);
        let m = SymMatrix::new(b.t_matmul(&b).add(&Mat::identity(d).scale(0.1))).unwrap();
        let x = Mat::from_fn(8, d, |_, _| r.normal());
        let alpha = Mat::from_fn(8, 3, |_, _| r.normal());
        KernelMachine::from_parts(spec, m, x, alpha).unwrap()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for spec in [KernelSpec::quadratic(), KernelSpec::gaussian(2.5).unwrap()] {
            let km = random_machine(spec, 11);
            let mut r = Rng64::new(12);
            for _ in 0..10 {
                let x: Vec<f64> = (0..5).map(|_| r.normal()).collect();
                let j = km.jacobian(&x).unwrap();
                let fd = fd_jacobian(&km, &x, 1e-5);
                let rel = j.sub(&fd).max_abs() / j.max_abs();
                assert!(rel < 1e-6, "{:?} rel {rel}", spec.kind());
            }
        }
    }

    #[test]
    fn agop_matches_jacobian_sum_and_fd() {
        for spec in [KernelSpec::quadratic(), KernelSpec::gaussian(2.5).unwrap()] {
            let km = random_machine(spec, 21);
            let mut r = Rng64::new(22);
            let x = Mat::from_fn(6, 5, |_, _| r.normal());
            let g = km.agop(&x).unwrap();
            let mut exact = Mat::zeros(5, 5);
            let mut fd = Mat::zeros(5, 5);
            for i in 0..6 {
                let j = km.jacobian(x.row(i)).unwrap();
                exact = exact.add(&j.matmul_t(&j));
                let jf = fd_jacobian(&km, x.row(i), 1e-5);
                fd = fd.add(&jf.matmul_t(&jf));
            }
            exact.scale_in_place(1.0 / 6.0);
            fd.scale_in_place(1.0 / 6.0);
            assert!(g.sub(&exact).frobenius_norm() / exact.frobenius_norm() < 1e-12);
            assert!(g.sub(&fd).frobenius_norm() / fd.frobenius_norm() < 1e-5);
        }
    }

    #[test]
    fn agop_single_sample_single_output_is_rank_one() {
        let mut km = random_machine(KernelSpec::quadratic(), 31);
        km.alpha = Mat::from_fn(8, 1, |i, _| i as f64 - 3.5);
        let x = km.x_train.block(0, 0, 1, 5);
        let g = km.agop(&x).unwrap();
        let e = crate::linalg::sym_eig(&g).unwrap();
        let top = e.values[4];
        assert!(e.values[..4].iter().all(|v| v.abs() < 1e-10 * top));
    }
}
