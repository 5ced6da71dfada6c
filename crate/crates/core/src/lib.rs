//! Positive semidefinite Procrustes problem: `inf_{A⪰0} ‖AX − B‖_F`.
//!
//! [`pipeline::an_fgm_solve`] is the main entry point. It reduces the problem
//! through the SVD of `X` to an r×r problem with diagonal positive `X`,
//! solves that with a warm-started fast gradient method, and assembles either
//! an exact minimizer or, when the infimum is not attained, a feasible
//! matrix within a chosen `ε` of it.

pub mod bench;
pub mod error;
pub mod init;
pub mod io;
pub mod matcore;
pub mod pipeline;
pub mod reduction;
pub mod solution;
pub mod solvers;

#[doc(hidden)]
pub mod testutil;

pub use error::{PsdpError, Result};
pub use matcore::DenseMatrix;
pub use pipeline::{an_fgm_solve, solve, InitKind, Method};
pub use solution::{IterateTrace, PsdpSolution};
pub use solvers::SolverConfig;
