//! Shared inputs for the benchmarks.

use std::sync::Arc;

use sqbif_core::{Mesh1D, ProblemSpec};

/// Boundary-graded reference mesh with `n` interior nodes.
pub fn reference_mesh(n: usize) -> Arc<Mesh1D> {
    Arc::new(Mesh1D::graded(n, 1.0, 2.0).expect("valid mesh"))
}

pub fn reference_spec() -> ProblemSpec {
    ProblemSpec::default()
}
