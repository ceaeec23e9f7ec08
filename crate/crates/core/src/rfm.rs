//! The Recursive Feature Machine loop and the block-circulant constructions
//! built around it.
//!
//! Starting from `M_0 = I`, iteration `k` (1-based) fits a ridgeless kernel
//! machine with `M_{k-1}`, records its metrics, and sets
//! `M_k = AGOP(f)^s` computed over the training rows. History row `k`
//! therefore pairs the predictor of `M_{k-1}` with the structure of the
//! matrix it produced: its circulant deviation is measured on `M_k`, and its
//! alignment is `ρ(M_k, M_T)`.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{fit, KernelMachine, KernelSpec};
use crate::linalg::{circulant, cyclic_shift, psd_power, sym_eig, CirculantKind, CirculantSpec, SymMatrix};
use crate::matrix::Mat;
use crate::measures::{
    agop_alignment, block_deviation, dlog_interior, find_generator, off_diagonal_block, Generator,
    MetricsRecord, SplitMetrics, TaskMetrics,
};
use crate::rng::Rng64;

#[derive(Debug, Clone, PartialEq)]
pub struct RfmConfig {
    pub kernel: KernelSpec,
    pub iterations: usize,
    /// Exponent `s` applied to the AGOP.
    pub power: f64,
    /// Divide each new `M` by its largest absolute entry.
    pub normalize_m: bool,
    /// Measure circulant deviation after discrete-log reordering (Mul/Div).
    pub reorder_dlog: bool,
    pub seed: u64,
}

impl RfmConfig {
    pub fn new(kernel: KernelSpec, iterations: usize) -> RfmConfig {
        RfmConfig {
            kernel,
            iterations,
            power: 0.5,
            normalize_m: false,
            reorder_dlog: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::InvalidExponent(self.power));
        }
        Ok(())
    }
}

/// Everything an RFM run produces.
#[derive(Debug, Clone)]
pub struct RfmRun {
    /// Predictor of the last iteration, fitted with `M_{T-1}`.
    pub machine: KernelMachine,
    /// `M_T`.
    pub feature_matrix: SymMatrix,
    pub history: Vec<MetricsRecord>,
    /// `M_0, ..., M_T`.
    pub snapshots: Vec<SymMatrix>,
}

pub fn rfm_run(data: &Dataset, cfg: &RfmConfig) -> Result<RfmRun> {
    rfm_run_observed(data, cfg, |_| {})
}

/// [`rfm_run`] with a callback after each iteration (alignment still unset).
pub fn rfm_run_observed(
    data: &Dataset,
    cfg: &RfmConfig,
    mut observe: impl FnMut(&MetricsRecord),
) -> Result<RfmRun> {
    cfg.validate()?;
    if data.train_idx().is_empty() {
        return Err(Error::EmptyInput("training split"));
    }
    let x_train = data.train_x();
    let y_train = data.train_y();
    let eval = Evaluator::new(data)?;
    let mut m = SymMatrix::identity(data.input_dim());
    let mut snapshots = Vec::with_capacity(cfg.iterations + 1);
    snapshots.push(m.clone());
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut machine = None;
    for k in 1..=cfg.iterations {
        let step = || -> Result<(KernelMachine, MetricsRecord, SymMatrix)> {
            let km = fit(&cfg.kernel, &m, &x_train, &y_train)?;
            let mut rec = eval.record(k, &km)?;
            let g = km.agop(&x_train)?;
            let mut next = psd_power(&g, cfg.power)?;
            if cfg.normalize_m {
                let top = next.max_abs();
                if top > 0.0 {
                    next = SymMatrix::new(next.scale(1.0 / top))?;
                }
            }
            rec.circulant_deviation = feature_deviation(&next, data.modulus(), cfg.reorder_dlog)?;
            Ok((km, rec, next))
        };
        let (km, rec, next) = step().map_err(|e| e.at_iteration(k))?;
        observe(&rec);
        history.push(rec);
        snapshots.push(next.clone());
        m = next;
        machine = Some(km);
    }
    fill_alignment(&mut history, &snapshots[1..])?;
    Ok(RfmRun {
        machine: machine.expect("at least one iteration"),
        feature_matrix: m,
        history,
        snapshots,
    })
}

/// Sets `agop_alignment` of row `k` to `ρ(mats[k], mats.last())`.
pub fn fill_alignment(history: &mut [MetricsRecord], mats: &[SymMatrix]) -> Result<()> {
    let Some(last) = mats.last() else {
        return Ok(());
    };
    for (rec, mk) in history.iter_mut().zip(mats) {
        rec.agop_alignment = match agop_alignment(mk, last) {
            Ok(v) => v,
            Err(Error::ZeroMatrix(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
    }
    Ok(())
}

/// Circulant deviation of the bottom-left block (min over circulant/Hankel),
/// on the dlog-reordered interior when `reorder` is set; `NaN` for a zero block.
pub fn feature_deviation(m: &Mat, p: usize, reorder: bool) -> Result<f64> {
    let block = off_diagonal_block(m, p)?;
    let block = if reorder {
        dlog_interior(&block, &find_generator(p)?)?
    } else {
        block
    };
    match block_deviation(&block) {
        Ok(v) => Ok(v),
        Err(Error::ZeroMatrix(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

/// Precomputed evaluation splits of a dataset.
struct Evaluator {
    train_x: Mat,
    train_y: Mat,
    test_x: Mat,
    test_y: Mat,
    /// Per task: (test rows, their labels) as positions into `test_x`.
    task_rows: Vec<Vec<usize>>,
}

impl Evaluator {
    fn new(data: &Dataset) -> Result<Evaluator> {
        let mut task_rows = Vec::new();
        if data.is_multitask() {
            task_rows = alloc::vec![Vec::new(), Vec::new()];
            for (pos, &row) in data.test_idx().iter().enumerate() {
                task_rows[data.task_of(row)].push(pos);
            }
        }
        Ok(Evaluator {
            train_x: data.train_x(),
            train_y: data.train_y(),
            test_x: data.test_x(),
            test_y: data.test_y(),
            task_rows,
        })
    }

    fn record(&self, iter: usize, km: &KernelMachine) -> Result<MetricsRecord> {
        let train = SplitMetrics::evaluate(&km.predict(&self.train_x)?, &self.train_y)?;
        if self.test_x.rows() == 0 {
            return Ok(MetricsRecord::new(iter, train, SplitMetrics::EMPTY));
        }
        let pred = km.predict(&self.test_x)?;
        let mut rec = MetricsRecord::new(iter, train, SplitMetrics::evaluate(&pred, &self.test_y)?);
        for rows in &self.task_rows {
            let m = if rows.is_empty() {
                SplitMetrics::EMPTY
            } else {
                SplitMetrics::evaluate(&pred.select_rows(rows), &self.test_y.select_rows(rows))?
            };
            rec.tasks.push(TaskMetrics {
                loss: m.loss,
                acc: m.acc,
            });
        }
        Ok(rec)
    }
}

/// `C` with column `l` equal to `σ^l(c)`, i.e. `C[i][l] = c[(i - l) mod p]`.
pub fn circulant_from_column(c: &[f64]) -> Mat {
    let p = c.len();
    let mut out = Mat::zeros(p, p);
    for l in 0..p {
        for (i, v) in cyclic_shift(c, l as isize).into_iter().enumerate() {
            out[(i, l)] = v;
        }
    }
    out
}

/// `I - 11^T / p`.
pub fn centering(p: usize) -> Mat {
    Mat::from_fn(p, p, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / p as f64)
}

/// `[[A, C^T], [C, A]]`.
pub fn block_matrix(a: &Mat, c: &Mat) -> Result<SymMatrix> {
    let p = a.rows();
    let mut m = Mat::zeros(2 * p, 2 * p);
    m.set_block(0, 0, a);
    m.set_block(p, p, a);
    m.set_block(p, 0, c);
    m.set_block(0, p, &c.transpose());
    SymMatrix::new(m)
}

/// Projects `M` onto the block form with exactly circulant off-diagonal blocks.
///
/// `M` is first rescaled to unit diagonal, `D^{-1/2} M D^{-1/2}`; the diagonal
/// blocks become `I - 11^T/p`, and the bottom-left block becomes the
/// circulant generated by its own (rescaled) first column.
pub fn enforce_circulant(m: &SymMatrix, p: usize) -> Result<SymMatrix> {
    if m.dim() != 2 * p {
        return Err(Error::DimensionMismatch {
            context: "enforce_circulant",
            expected: 2 * p,
            found: m.dim(),
        });
    }
    let d: Vec<f64> = (0..2 * p).map(|i| m[(i, i)]).collect();
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::ZeroDiagonal(i));
    }
    let inv: Vec<f64> = d.iter().map(|&v| 1.0 / libm::sqrt(v)).collect();
    let first_col: Vec<f64> = (0..p).map(|i| m[(p + i, 0)] * inv[p + i] * inv[0]).collect();
    block_matrix(&centering(p), &circulant_from_column(&first_col))
}

/// Where the random circulant block lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CirculantPlacement {
    /// Directly in residue coordinates (addition/subtraction).
    Direct,
    /// A `(p-1) x (p-1)` circulant in discrete-log coordinates; row and
    /// column 0 of the block stay zero (multiplication/division).
    DiscreteLog(Generator),
}

/// Feature matrix `[[A, C^T], [C, A]]` with `A = c1 I + c2 11^T` and a random
/// circulant (or Hankel) `C` whose generating column is i.i.d. uniform on
/// `[0, 1]`.
pub fn random_circulant_m(
    p: usize,
    seed: u64,
    c1: f64,
    c2: f64,
    kind: CirculantKind,
    placement: &CirculantPlacement,
) -> Result<SymMatrix> {
    if p == 0 {
        return Err(Error::EmptyInput("random circulant modulus"));
    }
    let mut rng = Rng64::new(seed);
    let a = Mat::from_fn(p, p, |i, j| c1 * if i == j { 1.0 } else { 0.0 } + c2);
    let structured = |len: usize, rng: &mut Rng64| -> Result<Mat> {
        let c: Vec<f64> = (0..len).map(|_| rng.uniform()).collect();
        Ok(match kind {
            CirculantKind::Circulant => circulant_from_column(&c),
            CirculantKind::Hankel => circulant(&CirculantSpec {
                first_row: c,
                kind: CirculantKind::Hankel,
            })?,
        })
    };
    let c = match placement {
        CirculantPlacement::Direct => structured(p, &mut rng)?,
        CirculantPlacement::DiscreteLog(gen) => {
            if gen.modulus() != p {
                return Err(Error::ModulusMismatch(p, gen.modulus()));
            }
            let inner = structured(p - 1, &mut rng)?;
            let mut c = Mat::zeros(p, p);
            for i in 0..p - 1 {
                for j in 0..p - 1 {
                    c[(gen.power(i + 1), gen.power(j + 1))] = inner[(i, j)];
                }
            }
            c
        }
    };
    block_matrix(&a, &c)
}

/// Nearest PSD matrix at unit spectral scale: divide by `λ_max` and zero the
/// negative eigenvalues.
///
/// Random block-circulant matrices are indefinite, so their fractional powers
/// need this projection first.
pub fn psd_project(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(m)?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::NotPsd {
            min: eig.values.first().copied().unwrap_or(0.0),
            max: top,
        });
    }
    Ok(eig.reassemble(|l| l.max(0.0) / top))
}

/// `X (P(M)^{1/4})^T` with `P` the projection of [`psd_project`].
pub fn transform_inputs(m: &SymMatrix, x: &Mat) -> Result<Mat> {
    if x.cols() != m.dim() {
        return Err(Error::DimensionMismatch {
            context: "transform_inputs",
            expected: m.dim(),
            found: x.cols(),
        });
    }
    let root = psd_power(&psd_project(m)?, 0.25)?;
    Ok(x.matmul_t(&root))
}

/// Fits once with a fixed feature matrix and scores train/test.
pub fn evaluate_fixed(data: &Dataset, spec: &KernelSpec, m: &SymMatrix) -> Result<(KernelMachine, MetricsRecord)> {
    let eval = Evaluator::new(data)?;
    let km = fit(spec, m, &eval.train_x, &eval.train_y)?;
    let rec = eval.record(1, &km)?;
    Ok((km, rec))
}

/// Refits with `enforce_circulant(M_{k-1})` for every row `k` of a finished
/// run, so row `k` is directly comparable with the run's own row `k`.
///
/// A kernel that cannot be factored even with jitter is recorded as a row of
/// `NaN` metrics rather than aborting the sweep.
pub fn enforced_history(data: &Dataset, cfg: &RfmConfig, run: &RfmRun) -> Result<Vec<MetricsRecord>> {
    let eval = Evaluator::new(data)?;
    let p = data.modulus();
    let x_train = data.train_x();
    let y_train = data.train_y();
    let mut out = Vec::with_capacity(run.history.len());
    for k in 1..=run.history.len() {
        let mt = enforce_circulant(&run.snapshots[k - 1], p).map_err(|e| e.at_iteration(k))?;
        let rec = match fit(&cfg.kernel, &mt, &x_train, &y_train) {
            Ok(km) => {
                let mut rec = eval.record(k, &km).map_err(|e| e.at_iteration(k))?;
                rec.circulant_deviation = feature_deviation(&mt, p, false)?;
                rec
            }
            Err(Error::SingularKernel { .. }) => {
                MetricsRecord::new(k, SplitMetrics::EMPTY, SplitMetrics::EMPTY)
            }
            Err(e) => return Err(e.at_iteration(k)),
        };
        out.push(rec);
    }
    Ok(out)
}
