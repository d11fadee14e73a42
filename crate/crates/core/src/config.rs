//! Run configuration read from TOML.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [spec]
//! p = 2.0
//! q = 3.0
//! delta = 0.5
//!
//! [mesh]
//! num_interior = 400
//! grading = { kind = "boundary_graded", exponent = 2.0 }
//!
//! [continuation]
//! norm_cap = 1000.0
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::continuation::ContinuationConfig;
use crate::discretization::{Grading, Mesh1D, MeshParams};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::solvers::SolveOptions;

pub const DEFAULT_NUM_INTERIOR: usize = 400;
pub const DEFAULT_GRADING: Grading = Grading::BoundaryGraded { exponent: 2.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Multiplies every check tolerance. Zero makes the tolerance-based
    /// checks infeasible; they are then reported as skipped.
    pub tolerance_scale: f64,
    /// λ used by the nonexistence check. Defaults to `1.1 λ₁ / g_min`.
    pub lambda_query: Option<f64>,
    pub grid_p: Vec<f64>,
    pub grid_delta: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub n_list: Vec<u32>,
    /// ε used for the truncated problems.
    pub truncation_eps: f64,
    pub jacobian_samples: usize,
    pub uniqueness_starts: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance_scale: 1.0,
            lambda_query: None,
            grid_p: vec![1.5, 2.0, 3.0],
            grid_delta: vec![0.5, 1.5],
            eps_list: vec![1e-1, 1e-2, 1e-3, 1e-4],
            n_list: vec![5, 10, 20],
            truncation_eps: 0.1,
            jacobian_samples: 20,
            uniqueness_starts: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    /// Defaults to 400 interior nodes, boundary-graded with exponent 2.
    pub mesh: Option<MeshParams>,
    pub solve: SolveOptions,
    pub continuation: ContinuationConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub verify: VerifyOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spec: ProblemSpec::default(),
            mesh: None,
            solve: SolveOptions::default(),
            continuation: ContinuationConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            verify: VerifyOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn mesh_params(&self) -> MeshParams {
        self.mesh.unwrap_or(MeshParams {
            num_interior: DEFAULT_NUM_INTERIOR,
            length: self.spec.domain_length,
            grading: DEFAULT_GRADING,
        })
    }

    pub fn build_mesh(&self) -> Result<Arc<Mesh1D>> {
        Mesh1D::new(self.mesh_params()).map(Arc::new)
    }

    /// Checks every section and reports the offending key.
    pub fn validate(&self) -> Result<()> {
        let keyed = |key: &str, e: Error| Error::Config(format!("{key}: {e}"));
        self.spec.validate().map_err(|e| keyed("spec", e))?;
        self.solve.validate().map_err(|e| keyed("solve", e))?;
        self.continuation
            .validate()
            .map_err(|e| keyed("continuation", e))?;
        let mesh = self.mesh_params();
        if (mesh.length - self.spec.domain_length).abs() > 1e-12 * self.spec.domain_length {
            return Err(Error::Config(format!(
                "mesh.length: {} differs from spec.domain_length {}",
                mesh.length, self.spec.domain_length
            )));
        }
        let built = Mesh1D::new(mesh).map_err(|e| keyed("mesh", e))?;
        if self.spec.eps == 0.0 && built.grading() == Grading::Uniform && self.spec.delta >= 1.0 {
            return Err(Error::Config(
                "mesh.grading: ε = 0 with δ ≥ 1 needs a boundary-graded mesh".into(),
            ));
        }
        let v = &self.verify;
        if !(v.tolerance_scale.is_finite() && v.tolerance_scale >= 0.0) {
            return Err(Error::Config(format!(
                "verify.tolerance_scale: must be finite and nonnegative, got {}",
                v.tolerance_scale
            )));
        }
        if let Some(l) = v.lambda_query {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Config(format!(
                    "verify.lambda_query: must be positive, got {l}"
                )));
            }
        }
        if v.eps_list.windows(2).any(|w| !(w[0] > w[1])) || v.eps_list.iter().any(|&e| !(e >= 0.0)) {
            return Err(Error::Config(
                "verify.eps_list: must be strictly decreasing and nonnegative".into(),
            ));
        }
        if v.n_list.iter().any(|&n| n == 0) {
            return Err(Error::Config("verify.n_list: levels must be at least 1".into()));
        }
        if !(v.truncation_eps.is_finite() && v.truncation_eps >= 0.0) {
            return Err(Error::Config(format!(
                "verify.truncation_eps: must be nonnegative, got {}",
                v.truncation_eps
            )));
        }
        for &p in &v.grid_p {
            for &d in &v.grid_delta {
                ProblemSpec::new(p, self.spec.q, d)
                    .map_err(|e| keyed("verify.grid_p/grid_delta", e))?;
            }
        }
        Ok(())
    }
}
