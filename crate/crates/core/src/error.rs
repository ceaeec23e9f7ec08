use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(usize),

    #[error("residue {value} out of range for modulus {modulus}")]
    ResidueOutOfRange { value: usize, modulus: usize },

    #[error("training fraction {0} outside (0, 1]")]
    InvalidFraction(f64),

    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(usize, usize),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive semidefinite (lambda_min = {min:e}, lambda_max = {max:e})")]
    NotPsd { min: f64, max: f64 },

    #[error("invalid exponent {0}")]
    InvalidExponent(f64),

    #[error("kernel matrix is singular (pivot {pivot} of {size} after jitter {jitter:e})")]
    SingularKernel { pivot: usize, size: usize, jitter: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("zero matrix in {0}")]
    ZeroMatrix(&'static str),

    #[error("zero diagonal entry at index {0}")]
    ZeroDiagonal(usize),

    #[error("odd input length {0}")]
    OddLength(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("iteration {iteration}: {source}")]
    AtIteration { iteration: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Error {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
