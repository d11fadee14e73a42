use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Grading {
    Uniform,
    /// Symmetric power map `s ↦ (2s)^γ / 2` on each half of the interval,
    /// clustering nodes at both endpoints.
    BoundaryGraded { exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshParams {
    pub num_interior: usize,
    #[serde(default = "one")]
    pub length: f64,
    pub grading: Grading,
}

fn one() -> f64 {
    1.0
}

/// Node layout on `[0, L]` with `N` interior nodes and fixed zero values at
/// both endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshParams", into = "MeshParams")]
pub struct Mesh1D {
    params: MeshParams,
    /// All `N + 2` nodes including the endpoints.
    nodes: Vec<f64>,
    /// `x_{j+1} - x_j`, `j = 0..=N`.
    intervals: Vec<f64>,
    /// Control-volume widths of the interior nodes.
    volumes: Vec<f64>,
}

pub const MIN_INTERIOR: usize = 3;

impl Mesh1D {
    pub fn new(params: MeshParams) -> Result<Self> {
        let MeshParams {
            num_interior: n,
            length,
            grading,
        } = params;
        if n < MIN_INTERIOR {
            return Err(Error::InvalidMesh(format!(
                "need at least {MIN_INTERIOR} interior nodes, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidMesh(format!("length must be positive, got {length}")));
        }
        if let Grading::BoundaryGraded { exponent } = grading {
            if !(exponent.is_finite() && exponent >= 1.0) {
                return Err(Error::InvalidMesh(format!(
                    "grading exponent must be at least 1, got {exponent}"
                )));
            }
        }
        let cells = (n + 1) as f64;
        let map = |s: f64| -> f64 {
            match grading {
                Grading::Uniform => length * s,
                Grading::BoundaryGraded { exponent } => {
                    if s <= 0.5 {
                        0.5 * length * (2.0 * s).powf(exponent)
                    } else {
                        length - 0.5 * length * (2.0 * (1.0 - s)).powf(exponent)
                    }
                }
            }
        };
        let mut nodes: Vec<f64> = (0..=n + 1).map(|j| map(j as f64 / cells)).collect();
        nodes[0] = 0.0;
        nodes[n + 1] = length;
        let intervals: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if intervals.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidMesh("nodes are not strictly increasing".into()));
        }
        let volumes = intervals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            params,
            nodes,
            intervals,
            volumes,
        })
    }

    pub fn uniform(num_interior: usize, length: f64) -> Result<Self> {
        Self::new(MeshParams {
            num_interior,
            length,
            grading: Grading::Uniform,
        })
    }

    pub fn graded(num_interior: usize, length: f64, exponent: f64) -> Result<Self> {
        Self::new(MeshParams {
            num_interior,
            length,
            grading: Grading::BoundaryGraded { exponent },
        })
    }

    /// Boundary-graded with exponent 2 when `δ ≥ 1` (boundary layer of the
    /// strongly singular case), uniform otherwise.
    pub fn default_for(spec: &ProblemSpec, num_interior: usize) -> Result<Self> {
        if spec.delta >= 1.0 {
            Self::graded(num_interior, spec.domain_length, 2.0)
        } else {
            Self::uniform(num_interior, spec.domain_length)
        }
    }

    pub fn params(&self) -> MeshParams {
        self.params
    }

    pub fn num_interior(&self) -> usize {
        self.params.num_interior
    }

    pub fn length(&self) -> f64 {
        self.params.length
    }

    pub fn grading(&self) -> Grading {
        self.params.grading
    }

    /// Parameter spacing `L / (N + 1)`; the physical spacing on uniform meshes.
    pub fn spacing(&self) -> f64 {
        self.length() / (self.num_interior() + 1) as f64
    }

    pub fn all_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..=self.num_interior()]
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn min_interval(&self) -> f64 {
        self.intervals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Interior node index mirrored about `L / 2`.
    pub fn mirror(&self, k: usize) -> usize {
        self.num_interior() - 1 - k
    }
}

impl TryFrom<MeshParams> for Mesh1D {
    type Error = Error;

    fn try_from(params: MeshParams) -> Result<Self> {
        Self::new(params)
    }
}

impl From<Mesh1D> for MeshParams {
    fn from(mesh: Mesh1D) -> Self {
        mesh.params
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_layout() {
        let m = Mesh1D::uniform(4, 1.0).unwrap();
        assert_relative_eq!(m.spacing(), 0.2);
        assert_eq!(m.interior_nodes().len(), 4);
        assert_relative_eq!(m.interior_nodes()[0], 0.2);
        for v in m.volumes() {
            assert_relative_eq!(*v, 0.2, max_relative = 1e-12);
        }
    }

    #[test]
    fn graded_is_symmetric_and_clustered() {
        let m = Mesh1D::graded(101, 2.0, 2.0).unwrap();
        let x = m.all_nodes();
        for (a, b) in x.iter().zip(x.iter().rev()) {
            assert_relative_eq!(a + b, 2.0, max_relative = 1e-14);
        }
        assert!(m.intervals()[0] < 0.1 * m.intervals()[50]);
        let sum: f64 = m.intervals().iter().sum();
        assert_relative_eq!(sum, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Mesh1D::uniform(2, 1.0).is_err());
        assert!(Mesh1D::uniform(10, -1.0).is_err());
        assert!(Mesh1D::graded(10, 1.0, 0.5).is_err());
    }

    #[test]
    fn default_grading_follows_delta() {
        let weak = ProblemSpec::new(2.0, 3.0, 0.5).unwrap();
        let strong = ProblemSpec::new(2.0, 3.0, 1.5).unwrap();
        assert_eq!(Mesh1D::default_for(&weak, 10).unwrap().grading(), Grading::Uniform);
        assert_eq!(
            Mesh1D::default_for(&strong, 10).unwrap().grading(),
            Grading::BoundaryGraded { exponent: 2.0 }
        );
    }

    #[test]
    fn serde_round_trip_rebuilds_nodes() {
        let m = Mesh1D::graded(20, 1.0, 2.0).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: Mesh1D = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
