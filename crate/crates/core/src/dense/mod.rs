//! Exact dense simulation for small systems: state vectors up to 20 qubits,
//! density matrices up to dimension 256, and the distance measures built on
//! them. This is the oracle backend for the stabilizer engine and the
//! execution backend for circuits that consume non-stabilizer states.

mod density;
mod exec;
mod state;

pub use density::{hermitian_eigen, lemma2_maximizer, DensityMatrix, MAX_DENSITY_DIM};
pub use exec::{enumerate_branches, run_ops, Branch, DenseRun};
pub use state::{StateVector, ZBranches};

pub type C64 = num_complex::Complex64;

/// Tolerance for normalization, Hermiticity and unitarity checks.
pub const NORM_TOL: f64 = 1e-10;
