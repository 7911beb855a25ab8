//! Green's functions of one-dimensional periodic Schrödinger operators
//! `λ - H`, `H = -Δ + V`, under three discretizations: second-order finite
//! differences (`fd2`), pseudo-spectral (`ps`) and mollified pseudo-spectral
//! (`mps`), together with tools that measure and bound their off-diagonal
//! decay.

pub mod analysis;
pub mod error;
pub mod greens;
pub mod lattice;
pub mod linalg;
pub mod mollifier;
pub mod operators;

pub use error::{Error, Result};
pub use greens::{
    closed_form_ghat, solve_green_column, solve_green_matrix, GreensColumn, GreensSolver,
};
pub use lattice::{GridSpec, LatticeFunction, NormKind, SpectralFunction};
pub use mollifier::MollifierSpec;
pub use operators::{Hamiltonian, PotentialSpec, ProblemSpec, Scheme};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
