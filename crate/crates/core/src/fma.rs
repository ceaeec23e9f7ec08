//! The Fourier Multiplication Algorithm and kernel machines that implement it.
//!
//! For `x = x1 ⊕ x2` the algorithm scores class `l` as
//!
//! - addition: `sqrt(p) <F x1 ⊙ F x2, F e_l>`
//! - subtraction: `sqrt(p) <F x1 ⊙ F e_{(p-l) mod p}, F x2>`
//!
//! with `<u, v> = u^T conj(v)`. The per-class quadratic kernels below, whose
//! feature matrices have zero diagonal blocks and powers of the cyclic shift
//! off the diagonal, reproduce these scores on every one-hot input.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dataset::{ModTask, Operation};
use crate::error::{Error, Result};
use crate::kernel::{fit_indefinite, KernelMachine, KernelSpec};
use crate::linalg::{complex_inner, dft, sym_eig, Complex, DftMatrix, SymMatrix};
use crate::matrix::Mat;
use crate::measures::{find_generator, Generator};
use crate::rng::Rng64;

/// Imaginary parts above this on one-hot inputs indicate a broken transform.
pub const IMAG_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmaMode {
    Add,
    Sub,
}

#[derive(Debug, Clone)]
pub struct FmaModel {
    p: usize,
    f: DftMatrix,
    mode: FmaMode,
}

impl FmaModel {
    pub fn new(p: usize, mode: FmaMode) -> Result<FmaModel> {
        Ok(FmaModel { p, f: dft(p)?, mode })
    }

    pub fn modulus(&self) -> usize {
        self.p
    }

    pub fn mode(&self) -> FmaMode {
        self.mode
    }

    pub fn dft(&self) -> &DftMatrix {
        &self.f
    }

    fn split<'a>(&self, x: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        if x.len() % 2 == 1 {
            return Err(Error::OddLength(x.len()));
        }
        if x.len() != 2 * self.p {
            return Err(Error::DimensionMismatch {
                context: "fma input",
                expected: 2 * self.p,
                found: x.len(),
            });
        }
        Ok(x.split_at(self.p))
    }

    /// Complex score of class `l`, before the real part is taken.
    pub fn eval_complex(&self, x: &[f64], l: usize) -> Result<Complex> {
        let (x1, x2) = self.split(x)?;
        let p = self.p;
        let h1 = self.f.apply(x1);
        let h2 = self.f.apply(x2);
        let root = libm::sqrt(p as f64);
        let z = match self.mode {
            FmaMode::Add => {
                let prod: Vec<Complex> = h1.iter().zip(&h2).map(|(&a, &b)| a * b).collect();
                complex_inner(&prod, &self.f.column(l % p))
            }
            FmaMode::Sub => sub_score(&self.f, &h1, &h2, (p - l % p) % p),
        };
        Ok(z.scale(root))
    }

    /// All `p` class scores.
    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..self.p).map(|l| fma_eval(self, x, l)).collect()
    }
}

/// `<h1 ⊙ F e_m, h2>` without the `sqrt(p)` factor.
fn sub_score(f: &DftMatrix, h1: &[Complex], h2: &[Complex], m: usize) -> Complex {
    let fm = f.column(m);
    let prod: Vec<Complex> = h1.iter().zip(&fm).map(|(&a, &b)| a * b).collect();
    complex_inner(&prod, h2)
}

/// Real part of the class-`l` score.
pub fn fma_eval(model: &FmaModel, x: &[f64], l: usize) -> Result<f64> {
    Ok(model.eval_complex(x, l)?.re)
}

/// Whether the model reproduces every row of `task`'s table as a one-hot
/// vector to `1e-8` entrywise.
pub fn fma_table_check(model: &FmaModel, task: &ModTask) -> Result<bool> {
    let p = model.modulus();
    if task.modulus() != p {
        return Err(Error::ModulusMismatch(p, task.modulus()));
    }
    for row in task.make_table() {
        let x = crate::dataset::encode_pair(row.a, row.b, p)?;
        for l in 0..p {
            let z = model.eval_complex(&x, l)?;
            let target = if l == row.label { 1.0 } else { 0.0 };
            if (z.re - target).abs() > 1e-8 || z.im.abs() > IMAG_TOLERANCE {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `sqrt(p) <F x1 ⊙ F e_{p-l-1}, F x2>`, the subtraction score with the
/// frequency index written as `p - l - 1`. It peaks at `a - b = l + 1`.
pub fn sub_score_shifted_index(model: &FmaModel, x: &[f64], l: usize) -> Result<f64> {
    let (x1, x2) = model.split(x)?;
    let p = model.modulus();
    let h1 = model.f.apply(x1);
    let h2 = model.f.apply(x2);
    let m = (2 * p - l % p - 1) % p;
    Ok(sub_score(&model.f, &h1, &h2, m).scale(libm::sqrt(p as f64)).re)
}

/// Anti-diagonal reversal: first row `e_{p-1}`.
pub fn reversal(p: usize) -> Mat {
    Mat::from_fn(p, p, |i, j| if i + j == p - 1 { 1.0 } else { 0.0 })
}

/// `C^k` for the cyclic shift `C`, `k` taken mod `p` (negative allowed).
pub fn shift_power(p: usize, k: isize) -> Mat {
    let k = k.rem_euclid(p as isize) as usize;
    Mat::from_fn(p, p, |i, j| if j == (i + k) % p { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// Blocks `C^l`; fitted to `(a - b) mod p = l`.
    Sub,
    /// Blocks `C^l R`; fitted to `(a + b) mod p = l`.
    Add,
}

/// One quadratic kernel machine per output class.
#[derive(Debug, Clone)]
pub struct Theorem1Ensemble {
    p: usize,
    kind: EnsembleKind,
    blocks: Vec<Mat>,
    machines: Vec<KernelMachine>,
}

impl Theorem1Ensemble {
    pub fn modulus(&self) -> usize {
        self.p
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    /// Top-right block of `M_l`.
    pub fn block(&self, l: usize) -> &Mat {
        &self.blocks[l]
    }

    pub fn feature_matrix(&self, l: usize) -> &SymMatrix {
        self.machines[l].feature_matrix()
    }

    pub fn machine(&self, l: usize) -> &KernelMachine {
        &self.machines[l]
    }

    /// Coefficients of class `l` as a `p x p` matrix indexed by `(a, b)`.
    pub fn alpha_matrix(&self, l: usize) -> Mat {
        let p = self.p;
        Mat::from_vec(p, p, self.machines[l].alpha().as_slice().to_vec()).expect("p^2 coefficients")
    }

    /// `f_l(x)`.
    pub fn eval(&self, x: &[f64], l: usize) -> Result<f64> {
        let pts = Mat::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.machines[l].predict(&pts)?[(0, 0)])
    }
}

fn ensemble(q: usize, kind: EnsembleKind) -> Result<Theorem1Ensemble> {
    // Every (a, b) pair in row-major order, matching the coefficient layout.
    let mut x = Mat::zeros(q * q, 2 * q);
    for a in 0..q {
        for b in 0..q {
            x[(a * q + b, a)] = 1.0;
            x[(a * q + b, q + b)] = 1.0;
        }
    }
    let r = reversal(q);
    let mut blocks = Vec::with_capacity(q);
    let mut machines = Vec::with_capacity(q);
    for l in 0..q {
        let block = match kind {
            EnsembleKind::Sub => shift_power(q, l as isize),
            EnsembleKind::Add => shift_power(q, l as isize).matmul(&r),
        };
        let mut m = Mat::zeros(2 * q, 2 * q);
        m.set_block(0, q, &block);
        m.set_block(q, 0, &block.transpose());
        let y = Mat::from_fn(q * q, 1, |i, _| {
            let (a, b) = (i / q, i % q);
            let label = match kind {
                EnsembleKind::Sub => (a + q - b) % q,
                EnsembleKind::Add => (a + b) % q,
            };
            if label == l {
                1.0
            } else {
                0.0
            }
        });
        machines.push(fit_indefinite(&KernelSpec::quadratic(), &SymMatrix::new(m)?, &x, &y)?);
        blocks.push(block);
    }
    Ok(Theorem1Ensemble {
        p: q,
        kind,
        blocks,
        machines,
    })
}

/// Per-class kernels with blocks `C^l`, fitted on the full subtraction table.
pub fn theorem1_build(p: usize) -> Result<Theorem1Ensemble> {
    ModTask::new(Operation::Sub, p)?;
    ensemble(p, EnsembleKind::Sub)
}

/// The addition form, with blocks `C^l R`.
pub fn theorem1_addition_variant(p: usize) -> Result<Theorem1Ensemble> {
    ModTask::new(Operation::Add, p)?;
    ensemble(p, EnsembleKind::Add)
}

/// Maximum absolute errors of the equivalence checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub p: usize,
    /// (i) `f_l(x)` vs `x1^T C^{-l} x2` over all one-hot inputs.
    pub discrete_bilinear: f64,
    /// (ii) `f_l(x)` vs the FMA over all one-hot inputs.
    pub discrete_fma: f64,
    /// (ii) `f_l(x)` vs the FMA on random real inputs.
    pub random_fma: f64,
    /// `x1^T C^{-l} x2` vs the FMA on the same random real inputs.
    pub random_bilinear_fma: f64,
    /// (iii) residual of `C^{-l} α 11^T + 11^T α C^{-l} + 2 C^{-l} α C^{-l} = C^l`.
    pub system_residual: f64,
    /// Least-squares `λ` in `α ≈ C^{3l}/2 + λ 11^T`, averaged over classes.
    pub lambda_fit: f64,
    /// Worst deviation of `α` from the closed form at the fitted `λ`.
    pub closed_form: f64,
    pub random_inputs: usize,
}

impl Theorem1Report {
    pub fn lambda_matches(&self, candidate: f64) -> bool {
        (self.lambda_fit - candidate).abs() < 1e-8
    }

    /// Checks (i), (ii) and (iii) all under `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.discrete_bilinear < tol
            && self.discrete_fma < tol
            && self.random_fma < tol
            && self.system_residual < tol
    }
}

/// Exhaustive and random-input checks of a subtraction ensemble.
pub fn theorem1_verify(ens: &Theorem1Ensemble, random_inputs: usize, seed: u64) -> Result<Theorem1Report> {
    if ens.kind != EnsembleKind::Sub {
        return Err(Error::InvalidConfig("theorem1_verify expects the subtraction ensemble".into()));
    }
    let p = ens.p;
    let fma = FmaModel::new(p, FmaMode::Sub)?;
    let bilinear = |x: &[f64], l: usize| -> f64 {
        let c = shift_power(p, -(l as isize));
        crate::matrix::dot(&x[..p], &c.matvec(&x[p..]))
    };

    let mut discrete_bilinear: f64 = 0.0;
    let mut discrete_fma: f64 = 0.0;
    for a in 0..p {
        for b in 0..p {
            let x = crate::dataset::encode_pair(a, b, p)?;
            for l in 0..p {
                let f = ens.eval(&x, l)?;
                discrete_bilinear = discrete_bilinear.max((f - bilinear(&x, l)).abs());
                discrete_fma = discrete_fma.max((f - fma_eval(&fma, &x, l)?).abs());
            }
        }
    }

    let mut rng = Rng64::new(seed);
    let mut random_fma: f64 = 0.0;
    let mut random_bilinear_fma: f64 = 0.0;
    for _ in 0..random_inputs {
        let x: Vec<f64> = (0..2 * p).map(|_| rng.normal()).collect();
        for l in 0..p {
            let y = fma_eval(&fma, &x, l)?;
            random_fma = random_fma.max((ens.eval(&x, l)? - y).abs());
            random_bilinear_fma = random_bilinear_fma.max((bilinear(&x, l) - y).abs());
        }
    }

    let ones = Mat::from_fn(p, p, |_, _| 1.0);
    let mut system_residual: f64 = 0.0;
    let mut lambdas = Vec::with_capacity(p);
    for l in 0..p {
        let alpha = ens.alpha_matrix(l);
        let cinv = shift_power(p, -(l as isize));
        let lhs = cinv
            .matmul(&alpha)
            .matmul(&ones)
            .add(&ones.matmul(&alpha).matmul(&cinv))
            .add(&cinv.matmul(&alpha).matmul(&cinv).scale(2.0));
        system_residual = system_residual.max(lhs.max_abs_diff(&shift_power(p, l as isize)));
        let half = shift_power(p, 3 * l as isize).scale(0.5);
        let resid = alpha.sub(&half);
        lambdas.push(resid.as_slice().iter().sum::<f64>() / (p * p) as f64);
    }
    let lambda_fit = lambdas.iter().sum::<f64>() / p as f64;
    let mut closed_form: f64 = 0.0;
    for l in 0..p {
        let model = shift_power(p, 3 * l as isize).scale(0.5).map(|v| v + lambda_fit);
        closed_form = closed_form.max(ens.alpha_matrix(l).max_abs_diff(&model));
    }

    Ok(Theorem1Report {
        p,
        discrete_bilinear,
        discrete_fma,
        random_fma,
        random_bilinear_fma,
        system_residual,
        lambda_fit,
        closed_form,
        random_inputs,
    })
}

/// Worst error of the addition ensemble against the addition FMA over all
/// one-hot inputs.
pub fn addition_variant_error(ens: &Theorem1Ensemble) -> Result<f64> {
    if ens.kind != EnsembleKind::Add {
        return Err(Error::InvalidConfig("expected the addition ensemble".into()));
    }
    let p = ens.p;
    let fma = FmaModel::new(p, FmaMode::Add)?;
    let mut worst: f64 = 0.0;
    for a in 0..p {
        for b in 0..p {
            let x = crate::dataset::encode_pair(a, b, p)?;
            for l in 0..p {
                worst = worst.max((ens.eval(&x, l)? - fma_eval(&fma, &x, l)?).abs());
            }
        }
    }
    Ok(worst)
}

/// The multiplicative analogue: an ensemble over `Z_{p-1}` in discrete-log
/// coordinates (addition form for Mul, subtraction form for Div), checked on
/// every pair of nonzero residues. Returns the worst error against the
/// one-hot ground truth.
pub fn theorem1_dlog_error(p: usize, op: Operation) -> Result<f64> {
    let task = ModTask::new(op, p)?;
    let kind = match op {
        Operation::Mul => EnsembleKind::Add,
        Operation::Div => EnsembleKind::Sub,
        _ => return Err(Error::InvalidConfig("dlog ensemble needs mul or div".into())),
    };
    let gen = find_generator(p)?;
    let q = p - 1;
    let ens = ensemble(q, kind)?;
    // Residue r in Z_p^* sits at dlog coordinate φ(r) mod (p-1).
    let coord = |r: usize| gen.dlog(r) % q;
    let mut worst: f64 = 0.0;
    for a in 1..p {
        for b in 1..p {
            let label = task.apply(a, b).expect("nonzero divisor");
            let mut x = alloc::vec![0.0; 2 * q];
            x[coord(a)] = 1.0;
            x[q + coord(b)] = 1.0;
            for c in 1..p {
                let target = if c == label { 1.0 } else { 0.0 };
                worst = worst.max((ens.eval(&x, coord(c))? - target).abs());
            }
        }
    }
    Ok(worst)
}

/// Rank-4 construction: encode both digits as unit complex numbers, multiply,
/// and decode the phase.
#[derive(Debug, Clone)]
pub struct LowRankModel {
    p: usize,
    mode: FmaMode,
    gen: Option<Generator>,
    /// Rows: Re Φ(x1), Im Φ(x1), Re Φ(x2), Im Φ(x2).
    encoder: Mat,
}

/// Which operation the low-rank model implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowRankMode {
    Add,
    Mul,
}

pub fn lowrank_build(p: usize, mode: LowRankMode) -> Result<LowRankModel> {
    ModTask::new(Operation::Add, p)?;
    let (gen, phase): (Option<Generator>, Vec<Option<f64>>) = match mode {
        LowRankMode::Add => (None, (0..p).map(|k| Some(2.0 * PI * k as f64 / p as f64)).collect()),
        LowRankMode::Mul => {
            let g = find_generator(p)?;
            let q = (p - 1) as f64;
            let phase = (0..p)
                .map(|r| (r != 0).then(|| 2.0 * PI * (g.dlog(r) % (p - 1)) as f64 / q))
                .collect();
            (Some(g), phase)
        }
    };
    let mut encoder = Mat::zeros(4, 2 * p);
    for (k, ph) in phase.iter().enumerate() {
        if let Some(t) = *ph {
            let (s, c) = (libm::sin(t), libm::cos(t));
            encoder[(0, k)] = c;
            encoder[(1, k)] = s;
            encoder[(2, p + k)] = c;
            encoder[(3, p + k)] = s;
        }
    }
    Ok(LowRankModel {
        p,
        mode: match mode {
            LowRankMode::Add => FmaMode::Add,
            LowRankMode::Mul => FmaMode::Sub,
        },
        gen,
        encoder,
    })
}

impl LowRankModel {
    pub fn encoder(&self) -> &Mat {
        &self.encoder
    }

    pub fn mode(&self) -> LowRankMode {
        match self.mode {
            FmaMode::Add => LowRankMode::Add,
            FmaMode::Sub => LowRankMode::Mul,
        }
    }

    /// Singular values of the encoder, descending, padded with zeros to `2p`
    /// (the encoder viewed as a map into `R^{2p}`).
    pub fn encoder_singular_values(&self) -> Result<Vec<f64>> {
        let gram = SymMatrix::new(self.encoder.matmul_t(&self.encoder))?;
        let mut s: Vec<f64> = sym_eig(&gram)?
            .values
            .into_iter()
            .rev()
            .map(|v| libm::sqrt(v.max(0.0)))
            .collect();
        s.resize(2 * self.p, 0.0);
        Ok(s)
    }
}

pub fn lowrank_predict(model: &LowRankModel, a: usize, b: usize) -> Result<usize> {
    let p = model.p;
    let x = crate::dataset::encode_pair(a, b, p)?;
    let z = model.encoder.matvec(&x);
    let z1 = Complex::new(z[0], z[1]);
    let z2 = Complex::new(z[2], z[3]);
    let prod = z1 * z2;
    let (count, period) = match model.mode() {
        LowRankMode::Add => (p, p),
        LowRankMode::Mul => {
            if prod.abs() < 1e-12 {
                return Ok(0);
            }
            (p - 1, p - 1)
        }
    };
    // Hard argmax of <z, exp(2πik/period)> over the reference phases.
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for k in 0..count {
        let t = 2.0 * PI * k as f64 / period as f64;
        let score = prod.re * libm::cos(t) + prod.im * libm::sin(t);
        if score > best_score {
            best = k;
            best_score = score;
        }
    }
    Ok(match &model.gen {
        None => best,
        Some(g) => g.power(best),
    })
}
