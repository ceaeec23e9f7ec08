//! Progress measures, classification metrics and discrete-log reordering.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{argmax, is_prime};
use crate::error::{Error, Result};
use crate::matrix::{dot, Mat};

/// Normalized total variance of the wrapped diagonals of a square block.
///
/// Row `i` is rotated left by `i` so that every wrapped diagonal of the block
/// becomes a column; an exact circulant therefore maps to constant columns
/// and scores 0. Variances are sums of squared deviations, and the total is
/// divided by `||A||_F^2`.
pub fn circulant_deviation(a: &Mat) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "circulant deviation",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let p = a.rows();
    let norm2: f64 = a.as_slice().iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(Error::ZeroMatrix("circulant deviation"));
    }
    let mut total = 0.0;
    for j in 0..p {
        // Column j of the shifted matrix is A[i][(i + j) mod p].
        // Offsets from the first entry, so a constant column gives exactly zero.
        let base = a[(0, j)];
        let off = |i: usize| a[(i, (i + j) % p)] - base;
        let mean = (0..p).map(off).sum::<f64>() / p as f64;
        total += (0..p)
            .map(|i| {
                let dv = off(i) - mean;
                dv * dv
            })
            .sum::<f64>();
    }
    Ok(total / norm2)
}

/// Rows in reverse order; turns a Hankel block into a circulant one.
pub fn reverse_rows(a: &Mat) -> Mat {
    let n = a.rows();
    Mat::from_fn(n, a.cols(), |i, j| a[(n - 1 - i, j)])
}

/// The smaller of the circulant and Hankel deviations of a block.
pub fn block_deviation(a: &Mat) -> Result<f64> {
    Ok(circulant_deviation(a)?.min(circulant_deviation(&reverse_rows(a))?))
}

/// Bottom-left `p x p` block of a `2p x 2p` (or `(2p+1)^2`) feature matrix.
pub fn off_diagonal_block(m: &Mat, p: usize) -> Result<Mat> {
    if m.rows() < 2 * p || m.cols() < 2 * p {
        return Err(Error::DimensionMismatch {
            context: "off-diagonal block",
            expected: 2 * p,
            found: m.rows().min(m.cols()),
        });
    }
    Ok(m.block(p, 0, p, p))
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = libm::sqrt(dot(a, a));
    let nb = libm::sqrt(dot(b, b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroMatrix("alignment"));
    }
    Ok(dot(a, b) / (na * nb))
}

/// Cosine similarity of the vectorized matrices.
pub fn agop_alignment(a: &Mat, b: &Mat) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "alignment",
            expected: a.rows() * a.cols(),
            found: b.rows() * b.cols(),
        });
    }
    cosine(a.as_slice(), b.as_slice())
}

/// Cosine similarity after subtracting each matrix's mean entry.
pub fn pearson(a: &Mat, b: &Mat) -> Result<f64> {
    let centered = |m: &Mat| {
        let n = m.as_slice().len().max(1) as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        m.map(|v| v - mean)
    };
    agop_alignment(&centered(a), &centered(b))
}

fn check_same_shape(pred: &Mat, y: &Mat) -> Result<()> {
    if pred.rows() != y.rows() || pred.cols() != y.cols() {
        return Err(Error::DimensionMismatch {
            context: "predictions vs labels",
            expected: y.rows() * y.cols(),
            found: pred.rows() * pred.cols(),
        });
    }
    if pred.rows() == 0 {
        return Err(Error::EmptyInput("metric rows"));
    }
    Ok(())
}

/// Fraction of rows whose argmax (lowest index on ties) matches the label's.
pub fn accuracy(pred: &Mat, y: &Mat) -> Result<f64> {
    check_same_shape(pred, y)?;
    let hits = (0..pred.rows())
        .filter(|&i| argmax(pred.row(i)) == argmax(y.row(i)))
        .count();
    Ok(hits as f64 / pred.rows() as f64)
}

/// Mean squared error over every entry.
pub fn mse(pred: &Mat, y: &Mat) -> Result<f64> {
    check_same_shape(pred, y)?;
    let s: f64 = pred
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(s / pred.as_slice().len() as f64)
}

/// Mean of `(pred[i, label_i] - 1)^2`.
pub fn correct_class_loss(pred: &Mat, y: &Mat) -> Result<f64> {
    check_same_shape(pred, y)?;
    let s: f64 = (0..pred.rows())
        .map(|i| {
            let v = pred[(i, argmax(y.row(i)))] - 1.0;
            v * v
        })
        .sum();
    Ok(s / pred.rows() as f64)
}

/// Metrics of one evaluation subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitMetrics {
    pub loss: f64,
    pub acc: f64,
    pub correct_class_loss: f64,
}

impl SplitMetrics {
    pub fn evaluate(pred: &Mat, y: &Mat) -> Result<SplitMetrics> {
        Ok(SplitMetrics {
            loss: mse(pred, y)?,
            acc: accuracy(pred, y)?,
            correct_class_loss: correct_class_loss(pred, y)?,
        })
    }

    /// Placeholder for an empty subset.
    pub const EMPTY: SplitMetrics = SplitMetrics {
        loss: f64::NAN,
        acc: f64::NAN,
        correct_class_loss: f64::NAN,
    };
}

/// Test loss and accuracy restricted to one task of a two-task dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskMetrics {
    pub loss: f64,
    pub acc: f64,
}

/// One row of a run history. `NaN` marks values that were not computed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub iter: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub correct_class_test_loss: f64,
    pub circulant_deviation: f64,
    pub agop_alignment: f64,
    pub tasks: Vec<TaskMetrics>,
}

impl MetricsRecord {
    pub fn new(iter: usize, train: SplitMetrics, test: SplitMetrics) -> MetricsRecord {
        MetricsRecord {
            iter,
            train_loss: train.loss,
            train_acc: train.acc,
            test_loss: test.loss,
            test_acc: test.acc,
            correct_class_test_loss: test.correct_class_loss,
            circulant_deviation: f64::NAN,
            agop_alignment: f64::NAN,
            tasks: Vec::new(),
        }
    }
}

/// A generator of `Z_p^*` with its discrete-log table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    g: usize,
    p: usize,
    /// `dlog[r] = i` with `g^i = r`, `i` in `1..=p-1`; `dlog[0]` is unused (0).
    dlog: Vec<usize>,
}

impl Generator {
    pub fn g(&self) -> usize {
        self.g
    }

    pub fn modulus(&self) -> usize {
        self.p
    }

    /// `φ_g(r)` for `r` in `1..p`.
    pub fn dlog(&self, r: usize) -> usize {
        self.dlog[r]
    }

    /// `g^i mod p`.
    pub fn power(&self, i: usize) -> usize {
        crate::dataset::pow_mod(self.g, i, self.p)
    }

    /// Builds the table for a given `g`, or `None` if `g` does not generate.
    pub fn with_base(g: usize, p: usize) -> Option<Generator> {
        if g == 0 || g >= p {
            return None;
        }
        let mut dlog = vec![0; p];
        let mut x = 1;
        for i in 1..p {
            x = x * g % p;
            if dlog[x] != 0 {
                return None;
            }
            dlog[x] = i;
        }
        Some(Generator { g, p, dlog })
    }
}

/// Smallest generator of `Z_p^*`.
pub fn find_generator(p: usize) -> Result<Generator> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Ok(Generator {
            g: 1,
            p,
            dlog: vec![0, 1],
        });
    }
    (2..p)
        .find_map(|g| Generator::with_base(g, p))
        .ok_or(Error::NotPrime(p))
}

/// Moves entry `(r, c)` with `r, c ≠ 0` to `(φ(r), φ(c))`; row and column 0
/// stay in place.
pub fn dlog_reorder(block: &Mat, gen: &Generator) -> Result<Mat> {
    let p = gen.modulus();
    if block.rows() != p || block.cols() != p {
        return Err(Error::DimensionMismatch {
            context: "dlog reorder",
            expected: p,
            found: block.rows(),
        });
    }
    let mut out = block.clone();
    for r in 1..p {
        for c in 1..p {
            out[(gen.dlog(r), gen.dlog(c))] = block[(r, c)];
        }
    }
    Ok(out)
}

/// The reordered `(p-1) x (p-1)` interior: entry `(i, j)` is the block entry
/// at `(g^{i+1}, g^{j+1})`.
pub fn dlog_interior(block: &Mat, gen: &Generator) -> Result<Mat> {
    let full = dlog_reorder(block, gen)?;
    let p = gen.modulus();
    Ok(full.block(1, 1, p - 1, p - 1))
}
