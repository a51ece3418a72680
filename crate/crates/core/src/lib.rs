//! Finite-scale laboratory for the correlation and uniformity structure of
//! bounded multiplicative functions.

pub mod averaging;
pub mod correlations;
pub mod error;
pub mod furstenberg;
pub mod nilseq;
pub mod par;
pub mod phase;
pub mod pretentious;
pub mod scalar;
pub mod seqgen;
pub mod sum;
pub mod uniformity;

pub use error::{MulabError, Result};
pub use num_complex::Complex64;
