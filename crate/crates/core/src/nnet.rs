//! One-hidden-layer network `f(x) = W2 (W1 x)^2` with hand-written gradients.
//!
//! The AGOP of this network has a closed form. With `h = W1 x`,
//! `J(x) = 2 W1^T diag(h) W2^T`, so averaging over inputs gives
//!
//! ```text
//! G = 4 W1^T ((W2^T W2) ⊙ (W1 S W1^T)) W1,   S = mean of x x^T
//! ```
//!
//! and `tr G = 4 sum_ij (W1 W1^T)_ij (W2^T W2)_ij (W1 S W1^T)_ij`. Both the
//! AGOP and its trace penalty are computed from these identities instead of
//! per-sample Jacobians.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{psd_power, SymMatrix};
use crate::matrix::Mat;
use crate::measures::{agop_alignment, mse, pearson, MetricsRecord, SplitMetrics};
use crate::rfm::{feature_deviation, fill_alignment};
use crate::rng::Rng64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadMlp {
    w1: Mat,
    w2: Mat,
}

/// Weight gradients, shaped like the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub w1: Mat,
    pub w2: Mat,
}

impl QuadMlp {
    pub fn from_weights(w1: Mat, w2: Mat) -> Result<QuadMlp> {
        if w2.cols() != w1.rows() {
            return Err(Error::DimensionMismatch {
                context: "network widths",
                expected: w1.rows(),
                found: w2.cols(),
            });
        }
        Ok(QuadMlp { w1, w2 })
    }

    /// Entries uniform on `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, `W1` drawn
    /// first in row-major order, then `W2`.
    pub fn init(d: usize, m: usize, p: usize, seed: u64) -> QuadMlp {
        let mut rng = Rng64::new(seed);
        let b1 = 1.0 / libm::sqrt(d as f64);
        let w1 = Mat::from_fn(m, d, |_, _| rng.uniform_range(-b1, b1));
        let b2 = 1.0 / libm::sqrt(m as f64);
        let w2 = Mat::from_fn(p, m, |_, _| rng.uniform_range(-b2, b2));
        QuadMlp { w1, w2 }
    }

    pub fn w1(&self) -> &Mat {
        &self.w1
    }

    pub fn w2(&self) -> &Mat {
        &self.w2
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn width(&self) -> usize {
        self.w1.rows()
    }

    pub fn outputs(&self) -> usize {
        self.w2.rows()
    }

    fn check_inputs(&self, x: &Mat) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network inputs",
                expected: self.input_dim(),
                found: x.cols(),
            });
        }
        Ok(())
    }

    /// Rows of `x` in, rows of predictions out.
    pub fn forward(&self, x: &Mat) -> Result<Mat> {
        self.check_inputs(x)?;
        let h = x.matmul_t(&self.w1);
        Ok(h.map(|v| v * v).matmul_t(&self.w2))
    }

    /// Mean-squared-error gradients over the batch, plus the loss.
    pub fn backward(&self, x: &Mat, y: &Mat) -> Result<(Grads, f64)> {
        self.check_inputs(x)?;
        if y.rows() != x.rows() || y.cols() != self.outputs() {
            return Err(Error::DimensionMismatch {
                context: "network targets",
                expected: x.rows() * self.outputs(),
                found: y.rows() * y.cols(),
            });
        }
        let h = x.matmul_t(&self.w1);
        let u = h.map(|v| v * v);
        let out = u.matmul_t(&self.w2);
        let loss = mse(&out, y)?;
        let scale = 2.0 / (x.rows() * self.outputs()) as f64;
        let mut r = out.sub(y);
        r.scale_in_place(scale);
        let w2 = r.t_matmul(&u);
        let mut gh = r.matmul(&self.w2);
        for (g, &hv) in gh.as_mut_slice().iter_mut().zip(h.as_slice()) {
            *g *= 2.0 * hv;
        }
        let w1 = gh.t_matmul(x);
        Ok((Grads { w1, w2 }, loss))
    }

    /// `S = X^T X / n`.
    fn second_moment(x: &Mat) -> Mat {
        let mut s = x.t_matmul(x);
        s.scale_in_place(1.0 / x.rows() as f64);
        s
    }

    /// `(W1 W1^T, W2^T W2, W1 S W1^T)`.
    fn gram_terms(&self, s: &Mat) -> (Mat, Mat, Mat) {
        let a = self.w1.matmul_t(&self.w1);
        let b = self.w2.t_matmul(&self.w2);
        let h = self.w1.matmul(s).matmul_t(&self.w1);
        (a, b, h)
    }

    pub fn agop(&self, x: &Mat) -> Result<SymMatrix> {
        self.check_inputs(x)?;
        if x.rows() == 0 {
            return Err(Error::EmptyInput("agop inputs"));
        }
        let s = Self::second_moment(x);
        let b = self.w2.t_matmul(&self.w2);
        let h = self.w1.matmul(&s).matmul_t(&self.w1);
        let bh = hadamard(&b, &h);
        let mut g = self.w1.t_matmul(&bh.matmul(&self.w1));
        g.scale_in_place(4.0);
        SymMatrix::new(g)
    }

    /// `tr G` and its gradients with respect to `W1` and `W2`.
    pub fn agop_trace(&self, x: &Mat) -> Result<(f64, Grads)> {
        self.check_inputs(x)?;
        if x.rows() == 0 {
            return Err(Error::EmptyInput("agop inputs"));
        }
        let s = Self::second_moment(x);
        let (a, b, h) = self.gram_terms(&s);
        let trace = 4.0
            * a.as_slice()
                .iter()
                .zip(b.as_slice())
                .zip(h.as_slice())
                .map(|((a, b), h)| a * b * h)
                .sum::<f64>();
        // dT/dB = 4 A⊙H, dT/dA = 4 B⊙H, dT/dH = 4 A⊙B; all symmetric.
        let db = hadamard(&a, &h).scale(8.0);
        let da = hadamard(&b, &h).scale(8.0);
        let dh = hadamard(&a, &b).scale(8.0);
        let w2 = self.w2.matmul(&db);
        let w1 = da.matmul(&self.w1).add(&dh.matmul(&self.w1).matmul(&s));
        Ok((trace, Grads { w1, w2 }))
    }

    /// Neural feature matrix `W1^T W1`.
    pub fn nfm(&self) -> SymMatrix {
        SymMatrix::new(self.w1.t_matmul(&self.w1)).expect("square Gram matrix")
    }

    /// Pearson correlation of the NFM with `AGOP^{1/2}` over `x`.
    pub fn nfa_correlation(&self, x: &Mat) -> Result<f64> {
        let root = psd_power(&self.agop(x)?, 0.5)?;
        pearson(&self.nfm(), &root)
    }

    fn weights_mut(&mut self) -> [&mut Mat; 2] {
        [&mut self.w1, &mut self.w2]
    }
}

fn hadamard(a: &Mat, b: &Mat) -> Mat {
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).collect();
    Mat::from_vec(a.rows(), a.cols(), data).expect("same shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    AdamW,
    Sgd,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::AdamW => "adamw",
            OptimizerKind::Sgd => "sgd",
        }
    }

    pub fn from_name(name: &str) -> Option<OptimizerKind> {
        match name {
            "adamw" => Some(OptimizerKind::AdamW),
            "sgd" => Some(OptimizerKind::Sgd),
            _ => None,
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Decoupled for AdamW; added to the gradient for SGD.
    pub weight_decay: f64,
    /// Weight of the batch AGOP-trace penalty.
    pub agop_reg_weight: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub width: usize,
    pub seed: u64,
    /// Measure circulant deviation after discrete-log reordering.
    pub reorder_dlog: bool,
    /// Compute the NFA correlation every this many epochs (0 disables).
    pub nfa_every: usize,
}

impl TrainConfig {
    /// AdamW setting of the grokking runs.
    pub fn adamw() -> TrainConfig {
        TrainConfig {
            optimizer: OptimizerKind::AdamW,
            learning_rate: 1e-3,
            weight_decay: 1.0,
            agop_reg_weight: 0.0,
            batch_size: 32,
            epochs: 50,
            width: 1024,
            seed: 0,
            reorder_dlog: false,
            nfa_every: 1,
        }
    }

    /// SGD setting of the regularization ablation (AGOP penalty on).
    pub fn sgd_ablation() -> TrainConfig {
        TrainConfig {
            optimizer: OptimizerKind::Sgd,
            learning_rate: 1.0,
            weight_decay: 1e-5,
            agop_reg_weight: 1e-3,
            batch_size: 128,
            epochs: 200,
            width: 512,
            seed: 0,
            reorder_dlog: false,
            nfa_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.width == 0 {
            return bad("width must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be positive");
        }
        if !(self.weight_decay >= 0.0) || !(self.agop_reg_weight >= 0.0) {
            return bad("regularization weights must be non-negative");
        }
        Ok(())
    }
}

/// Optimizer state for both weight matrices.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    wd: f64,
    step: i32,
    m: [Vec<f64>; 2],
    v: [Vec<f64>; 2],
}

impl Optimizer {
    pub fn new(cfg: &TrainConfig, net: &QuadMlp) -> Optimizer {
        let sizes = [net.w1.as_slice().len(), net.w2.as_slice().len()];
        let zeros = |k: usize| alloc::vec![0.0; sizes[k]];
        Optimizer {
            kind: cfg.optimizer,
            lr: cfg.learning_rate,
            wd: cfg.weight_decay,
            step: 0,
            m: [zeros(0), zeros(1)],
            v: [zeros(0), zeros(1)],
        }
    }

    pub fn apply(&mut self, net: &mut QuadMlp, grads: &Grads) {
        self.step += 1;
        let grads = [&grads.w1, &grads.w2];
        let (lr, wd) = (self.lr, self.wd);
        match self.kind {
            OptimizerKind::Sgd => {
                for (w, g) in net.weights_mut().into_iter().zip(grads) {
                    for (wi, &gi) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
                        *wi -= lr * (gi + wd * *wi);
                    }
                }
            }
            OptimizerKind::AdamW => {
                let bc1 = 1.0 - libm::pow(ADAM_BETA1, self.step as f64);
                let bc2 = 1.0 - libm::pow(ADAM_BETA2, self.step as f64);
                for (k, (w, g)) in net.weights_mut().into_iter().zip(grads).enumerate() {
                    let (m, v) = (&mut self.m[k], &mut self.v[k]);
                    for (((wi, &gi), mi), vi) in w
                        .as_mut_slice()
                        .iter_mut()
                        .zip(g.as_slice())
                        .zip(m.iter_mut())
                        .zip(v.iter_mut())
                    {
                        *wi *= 1.0 - lr * wd;
                        *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * gi;
                        *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * gi * gi;
                        let mh = *mi / bc1;
                        let vh = *vi / bc2;
                        *wi -= lr * mh / (libm::sqrt(vh) + ADAM_EPS);
                    }
                }
            }
        }
    }
}

/// Output of [`train`].
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub net: QuadMlp,
    /// One row per epoch; circulant deviation and alignment are measured on
    /// the NFM (alignment against the final NFM).
    pub history: Vec<MetricsRecord>,
    /// `(epoch, correlation)` pairs; epoch 0 is the initialization.
    pub nfa: Vec<(usize, f64)>,
    /// NFM after each epoch.
    pub nfm_snapshots: Vec<SymMatrix>,
    /// NFM circulant deviation at initialization.
    pub initial_deviation: f64,
}

pub fn train(net: QuadMlp, data: &Dataset, cfg: &TrainConfig) -> Result<TrainRun> {
    train_observed(net, data, cfg, |_| {})
}

/// [`train`] with a callback after each epoch.
pub fn train_observed(
    mut net: QuadMlp,
    data: &Dataset,
    cfg: &TrainConfig,
    mut observe: impl FnMut(&MetricsRecord),
) -> Result<TrainRun> {
    cfg.validate()?;
    if data.train_idx().is_empty() {
        return Err(Error::EmptyInput("training split"));
    }
    if net.input_dim() != data.input_dim() || net.outputs() != data.modulus() {
        return Err(Error::DimensionMismatch {
            context: "network vs dataset",
            expected: data.input_dim(),
            found: net.input_dim(),
        });
    }
    let p = data.modulus();
    let (train_x, train_y) = (data.train_x(), data.train_y());
    let (test_x, test_y) = (data.test_x(), data.test_y());
    let mut opt = Optimizer::new(cfg, &net);
    let mut rng = Rng64::new(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_x.rows()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut nfa = Vec::new();
    let mut snapshots = Vec::with_capacity(cfg.epochs);
    let initial_deviation = feature_deviation(&net.nfm(), p, cfg.reorder_dlog)?;
    if cfg.nfa_every > 0 {
        nfa.push((0, net.nfa_correlation(&train_x)?));
    }

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let xb = train_x.select_rows(batch);
            let yb = train_y.select_rows(batch);
            let (mut grads, loss) = net.backward(&xb, &yb)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            if cfg.agop_reg_weight > 0.0 {
                let (_, reg) = net.agop_trace(&xb)?;
                grads.w1 = grads.w1.add(&reg.w1.scale(cfg.agop_reg_weight));
                grads.w2 = grads.w2.add(&reg.w2.scale(cfg.agop_reg_weight));
            }
            opt.apply(&mut net, &grads);
        }
        let train = SplitMetrics::evaluate(&net.forward(&train_x)?, &train_y)?;
        if !train.loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: train.loss,
            });
        }
        let test = if test_x.rows() == 0 {
            SplitMetrics::EMPTY
        } else {
            SplitMetrics::evaluate(&net.forward(&test_x)?, &test_y)?
        };
        let mut rec = MetricsRecord::new(epoch, train, test);
        let nfm = net.nfm();
        rec.circulant_deviation = feature_deviation(&nfm, p, cfg.reorder_dlog)?;
        if cfg.nfa_every > 0 && (epoch % cfg.nfa_every == 0 || epoch == cfg.epochs) {
            nfa.push((epoch, net.nfa_correlation(&train_x)?));
        }
        observe(&rec);
        history.push(rec);
        snapshots.push(nfm);
    }
    fill_alignment(&mut history, &snapshots)?;
    Ok(TrainRun {
        net,
        history,
        nfa,
        nfm_snapshots: snapshots,
        initial_deviation,
    })
}

/// Cosine similarity of two flattened weight updates.
pub fn update_cosine(a: &Grads, b: &Grads) -> Result<f64> {
    let cat = |g: &Grads| {
        let mut v = g.w1.as_slice().to_vec();
        v.extend_from_slice(g.w2.as_slice());
        Mat::from_vec(1, v.len(), v).expect("row vector")
    };
    agop_alignment(&cat(a), &cat(b))
}
