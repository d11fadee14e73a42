//! Numerical study of the singular, superlinear quasilinear problem
//!
//! ```text
//! -Δp u = λ [ (u + ε)^-δ + f_n(u) ]  in (0, L),   u = 0 on the boundary
//! ```
//!
//! with a flux-form finite-difference discretization, Newton and monotone
//! solvers, the first p-Laplacian eigenpair, pseudo-arclength continuation
//! of the solution branch and a verification battery.

pub mod config;
pub mod continuation;
pub mod discretization;
pub mod eigen;
pub mod error;
pub mod export;
pub mod linalg;
pub mod problem;
pub mod solvers;
pub mod verify;

pub use config::{RunConfig, VerifyOptions};
pub use continuation::{Branch, BranchPoint, ContinuationConfig, Termination};
pub use discretization::{Grading, GridFunction, Mesh1D, MeshParams};
pub use eigen::EigenResult;
pub use error::{Error, Result};
pub use problem::{ProblemSpec, Truncation};
pub use solvers::SolveOptions;
pub use verify::VerificationReport;
