//! Modular-arithmetic tasks, their one-hot encodings and seeded splits.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::rng::Rng64;

/// Binary operation on residues modulo a prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operation {
    Add,
    Sub,
    Mul,
    Div,
    /// `a^2 + b^2 mod p`.
    SumOfSquares,
}

impl Operation {
    pub const ALL: [Operation; 5] = [
        Operation::Add,
        Operation::Sub,
        Operation::Mul,
        Operation::Div,
        Operation::SumOfSquares,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operation::Add => "add",
            Operation::Sub => "sub",
            Operation::Mul => "mul",
            Operation::Div => "div",
            Operation::SumOfSquares => "sumsq",
        }
    }

    pub fn from_name(name: &str) -> Option<Operation> {
        Operation::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Whether circulant structure appears only after discrete-log reordering.
    pub fn is_multiplicative(self) -> bool {
        matches!(self, Operation::Mul | Operation::Div)
    }
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn pow_mod(base: usize, mut exp: usize, modulus: usize) -> usize {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as usize
}

/// A modular operation with a prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModTask {
    op: Operation,
    p: usize,
}

/// One entry of a Cayley table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub a: usize,
    pub b: usize,
    pub label: usize,
}

impl ModTask {
    pub fn new(op: Operation, p: usize) -> Result<ModTask> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(ModTask { op, p })
    }

    pub fn op(&self) -> Operation {
        self.op
    }

    pub fn modulus(&self) -> usize {
        self.p
    }

    /// `g(a, b) mod p`, or `None` for division by zero.
    pub fn apply(&self, a: usize, b: usize) -> Option<usize> {
        let p = self.p;
        let (a, b) = (a % p, b % p);
        Some(match self.op {
            Operation::Add => (a + b) % p,
            Operation::Sub => (a + p - b) % p,
            Operation::Mul => a * b % p,
            Operation::Div => {
                if b == 0 {
                    return None;
                }
                a * pow_mod(b, p - 2, p) % p
            }
            Operation::SumOfSquares => (a * a + b * b) % p,
        })
    }

    /// Number of admissible input pairs: `p^2`, or `p(p-1)` for division.
    pub fn table_len(&self) -> usize {
        match self.op {
            Operation::Div => self.p * (self.p - 1),
            _ => self.p * self.p,
        }
    }

    /// The full Cayley table in row-major `(a, b)` order.
    pub fn make_table(&self) -> Vec<TableRow> {
        let mut rows = Vec::with_capacity(self.table_len());
        for a in 0..self.p {
            for b in 0..self.p {
                if let Some(label) = self.apply(a, b) {
                    rows.push(TableRow { a, b, label });
                }
            }
        }
        rows
    }
}

/// `e_a ⊕ e_b` in `R^{2p}`.
pub fn encode_pair(a: usize, b: usize, p: usize) -> Result<Vec<f64>> {
    for v in [a, b] {
        if v >= p {
            return Err(Error::ResidueOutOfRange { value: v, modulus: p });
        }
    }
    let mut x = alloc::vec![0.0; 2 * p];
    x[a] = 1.0;
    x[p + b] = 1.0;
    Ok(x)
}

/// Argmax of each half of a `2p` vector (lowest index on ties).
pub fn decode_pair(x: &[f64], p: usize) -> (usize, usize) {
    (argmax(&x[..p]), argmax(&x[p..2 * p]))
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Encoded rows plus a seeded train/test partition.
#[derive(Debug, Clone)]
pub struct Dataset {
    p: usize,
    x: Mat,
    y: Mat,
    rows: Vec<TableRow>,
    /// Task index per row; empty for single-task data.
    task_bits: Vec<u8>,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
    fraction: f64,
    seed: u64,
}

fn train_count(fraction: f64, total: usize) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    Ok(libm::round(fraction * total as f64) as usize)
}

/// Seeded permutation of `0..total`; the first `round(r·total)` entries train.
fn partition(total: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_train = train_count(fraction, total)?;
    let mut order: Vec<usize> = (0..total).collect();
    Rng64::new(seed).shuffle(&mut order);
    let test = order.split_off(n_train);
    Ok((order, test))
}

impl Dataset {
    /// Encodes a Cayley table and splits it with a uniform seeded shuffle.
    pub fn split(table: &[TableRow], p: usize, fraction: f64, seed: u64) -> Result<Dataset> {
        let (train_idx, test_idx) = partition(table.len(), fraction, seed)?;
        let mut x = Mat::zeros(table.len(), 2 * p);
        let mut y = Mat::zeros(table.len(), p);
        for (i, r) in table.iter().enumerate() {
            if r.a >= p || r.b >= p || r.label >= p {
                return Err(Error::ResidueOutOfRange {
                    value: r.a.max(r.b).max(r.label),
                    modulus: p,
                });
            }
            x[(i, r.a)] = 1.0;
            x[(i, p + r.b)] = 1.0;
            y[(i, r.label)] = 1.0;
        }
        Ok(Dataset {
            p,
            x,
            y,
            rows: table.to_vec(),
            task_bits: Vec::new(),
            train_idx,
            test_idx,
            fraction,
            seed,
        })
    }

    pub fn from_task(task: &ModTask, fraction: f64, seed: u64) -> Result<Dataset> {
        Dataset::split(&task.make_table(), task.modulus(), fraction, seed)
    }

    /// Two tasks over one `(a, b)` split, with a trailing task bit
    /// (0 for `task_a`, 1 for `task_b`) and a shared label space.
    pub fn encode_multitask(
        task_a: &ModTask,
        task_b: &ModTask,
        fraction: f64,
        seed: u64,
    ) -> Result<Dataset> {
        let p = task_a.modulus();
        if task_b.modulus() != p {
            return Err(Error::ModulusMismatch(p, task_b.modulus()));
        }
        let table_a = task_a.make_table();
        let table_b = task_b.make_table();
        if table_a.len() != table_b.len()
            || table_a.iter().zip(&table_b).any(|(r, s)| (r.a, r.b) != (s.a, s.b))
        {
            return Err(Error::InvalidConfig(
                "multitask operations must share the same input pairs".into(),
            ));
        }
        let pairs = table_a.len();
        let (train_pairs, test_pairs) = partition(pairs, fraction, seed)?;
        let d = 2 * p + 1;
        let mut x = Mat::zeros(2 * pairs, d);
        let mut y = Mat::zeros(2 * pairs, p);
        let mut rows = Vec::with_capacity(2 * pairs);
        let mut task_bits = Vec::with_capacity(2 * pairs);
        for (t, table) in [&table_a, &table_b].into_iter().enumerate() {
            for (k, r) in table.iter().enumerate() {
                let i = t * pairs + k;
                x[(i, r.a)] = 1.0;
                x[(i, p + r.b)] = 1.0;
                x[(i, 2 * p)] = t as f64;
                y[(i, r.label)] = 1.0;
                rows.push(*r);
                task_bits.push(t as u8);
            }
        }
        let widen = |idx: &[usize]| -> Vec<usize> {
            idx.iter().copied().chain(idx.iter().map(|&k| k + pairs)).collect()
        };
        Ok(Dataset {
            p,
            x,
            y,
            rows,
            task_bits,
            train_idx: widen(&train_pairs),
            test_idx: widen(&test_pairs),
            fraction,
            seed,
        })
    }

    pub fn modulus(&self) -> usize {
        self.p
    }

    pub fn input_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn y(&self) -> &Mat {
        &self.y
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn train_idx(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn test_idx(&self) -> &[usize] {
        &self.test_idx
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_multitask(&self) -> bool {
        !self.task_bits.is_empty()
    }

    /// Task index of a row (always 0 for single-task data).
    pub fn task_of(&self, row: usize) -> usize {
        self.task_bits.get(row).map_or(0, |&t| t as usize)
    }

    pub fn train_x(&self) -> Mat {
        self.x.select_rows(&self.train_idx)
    }

    pub fn train_y(&self) -> Mat {
        self.y.select_rows(&self.train_idx)
    }

    pub fn test_x(&self) -> Mat {
        self.x.select_rows(&self.test_idx)
    }

    pub fn test_y(&self) -> Mat {
        self.y.select_rows(&self.test_idx)
    }

    /// Same rows and split with every input replaced by `x_new`.
    pub fn with_inputs(&self, x_new: Mat) -> Result<Dataset> {
        if x_new.rows() != self.x.rows() {
            return Err(Error::DimensionMismatch {
                context: "replacement inputs",
                expected: self.x.rows(),
                found: x_new.rows(),
            });
        }
        Ok(Dataset {
            x: x_new,
            ..self.clone()
        })
    }
}
