//! Value blocks of arithmetic sequences: Liouville, Möbius, Dirichlet
//! characters, custom multiplicative functions and synthetic test sequences.

mod block;
pub mod cache;
mod dirichlet;
pub mod primes;
mod sieve;
mod spec;

pub use block::{SequenceBlock, Storage};
pub use dirichlet::{euler_phi, DirichletCharacter};
pub use sieve::{sieve_liouville, sieve_liouville_with, sieve_mobius, sieve_mobius_with, SieveConfig};
pub use spec::{
    materialize, Completeness, Evaluator, MultFuncKind, MultFuncSpec, PrimePowerRule, SequenceSpec,
    SyntheticSpec, POLY_DEGREE_CAP,
};
