//! Pseudo-arclength continuation of the solution branch in `(λ, u)`.

mod analysis;
mod fold;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use analysis::{
    epsilon_sweep, fit_asymptote, lower_branch_solution, max_location_trace, n_sweep,
    truncation_asymptote_estimate,
    upper_branch_fit, AsymptoteFit, EpsilonSweep, NSweepEntry, PowerFit, SweepEntry,
};
pub use fold::{count_solutions_at, detect_fold, FoldEstimate};

use crate::discretization::{
    residual_measure, weak_jacobian, weak_residual, GridFunction, Mesh1D, PLaplacian, Reaction,
};
use crate::error::{Error, Result};
use crate::linalg::solve_bordered;
use crate::problem::ProblemSpec;
use crate::solvers::{monotone_iteration_minimal, newton_solve, SolveOptions, POSITIVITY_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub ds_init: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Steps longer than this are retried shorter when they would cross
    /// the fold, so the fold is bracketed tightly.
    pub ds_fold: f64,
    pub max_steps: usize,
    pub lambda_floor: f64,
    pub norm_cap: f64,
    pub corrector_tol: f64,
    pub max_corrector: usize,
    /// Minimum cosine between consecutive secants.
    pub min_cos_angle: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            ds_init: 1e-2,
            ds_min: 1e-7,
            ds_max: 5e-2,
            ds_fold: 1e-3,
            max_steps: 2000,
            lambda_floor: 1e-7,
            norm_cap: 1e3,
            corrector_tol: 1e-9,
            max_corrector: 12,
            min_cos_angle: 0.9,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidOptions(m.to_string()));
        if !(self.ds_min > 0.0 && self.ds_min <= self.ds_init && self.ds_init <= self.ds_max) {
            return bad("need 0 < ds_min ≤ ds_init ≤ ds_max");
        }
        if !(self.ds_fold > 0.0) {
            return bad("ds_fold must be positive");
        }
        if !(self.lambda_floor > 0.0 && self.norm_cap > 0.0 && self.corrector_tol > 0.0) {
            return bad("lambda_floor, norm_cap and corrector_tol must be positive");
        }
        if self.max_steps == 0 || self.max_corrector == 0 {
            return bad("iteration caps must be at least 1");
        }
        if !(self.min_cos_angle > -1.0 && self.min_cos_angle < 1.0) {
            return bad("min_cos_angle must lie in (-1, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: GridFunction,
    pub sup_norm: f64,
    pub l2_norm: f64,
    pub arclength: f64,
    /// Sign of `dλ/ds` over the step that reached this point.
    pub tangent_lambda_sign: i8,
    pub argmax_location: f64,
    pub converged: bool,
}

impl BranchPoint {
    pub fn new(lambda: f64, u: GridFunction, arclength: f64, tangent_lambda_sign: i8) -> Self {
        Self {
            lambda,
            sup_norm: u.sup_norm(),
            l2_norm: u.l2_norm(),
            argmax_location: u.argmax_x(),
            u,
            arclength,
            tangent_lambda_sign,
            converged: true,
        }
    }

    /// `max(λ, sup u)`.
    pub fn pair_norm(&self) -> f64 {
        self.lambda.max(self.sup_norm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LambdaFloor,
    NormCap,
    StepFailure,
    MaxSteps,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMarker {
    pub lambda: f64,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub spec: ProblemSpec,
    pub points: Vec<BranchPoint>,
    /// First turning point, refined by a parabolic fit.
    pub fold: Option<FoldMarker>,
    pub termination: Termination,
    /// Number of sign changes of `dλ/ds`; fold-shaped branches have one.
    pub sign_changes: usize,
}

impl Branch {
    pub fn from_points(spec: ProblemSpec, points: Vec<BranchPoint>, termination: Termination) -> Self {
        let mut b = Self {
            spec,
            points,
            fold: None,
            termination,
            sign_changes: 0,
        };
        b.sign_changes = count_sign_changes(&b.points);
        b.fold = detect_fold(&b).ok().map(|f| FoldMarker {
            lambda: f.lambda,
            index: f.index,
        });
        b
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_sup_norm(&self) -> f64 {
        self.points.iter().map(|p| p.sup_norm).fold(0.0, f64::max)
    }

    pub fn mesh(&self) -> Option<&Arc<Mesh1D>> {
        self.points.first().map(|p| &p.u.mesh)
    }
}

fn count_sign_changes(points: &[BranchPoint]) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for w in points.windows(2) {
        let d = w[1].lambda - w[0].lambda;
        if d == 0.0 {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            changes += 1;
        }
        last = d;
    }
    changes
}

/// Weighted inner product: nodal values scaled by `1/(S √N)`, λ by 1.
#[derive(Clone, Copy, Debug)]
struct Metric {
    w: f64,
}

impl Metric {
    fn at(u: &[f64]) -> Self {
        let s = u.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        Self {
            w: 1.0 / (s * s * u.len() as f64),
        }
    }

    fn dot(&self, a: (&[f64], f64), b: (&[f64], f64)) -> f64 {
        let uu: f64 = a.0.iter().zip(b.0).map(|(x, y)| x * y).sum();
        self.w * uu + a.1 * b.1
    }

    fn norm(&self, a: (&[f64], f64)) -> f64 {
        self.dot(a, a).sqrt()
    }
}

struct Corrected {
    u: Vec<f64>,
    lambda: f64,
    iterations: usize,
}

struct Tracer<'a> {
    spec: &'a ProblemSpec,
    mesh: &'a Arc<Mesh1D>,
    op: PLaplacian,
    cfg: &'a ContinuationConfig,
}

impl Tracer<'_> {
    /// `∂G/∂λ` of the weak residual.
    fn lambda_column(&self, u: &[f64]) -> Result<Vec<f64>> {
        let reaction = Reaction::new(self.spec, 1.0);
        u.iter()
            .zip(self.mesh.volumes())
            .map(|(&ui, &v)| Ok(-v * reaction.unscaled(ui)?))
            .collect()
    }

    /// Unit tangent oriented to have positive product with `(dir_u, dir_l)`.
    fn tangent(&self, u: &[f64], lambda: f64, dir: (&[f64], f64)) -> Result<(Vec<f64>, f64)> {
        let metric = Metric::at(u);
        let jac = weak_jacobian(&self.op, self.mesh, u, &Reaction::new(self.spec, lambda))?;
        let col = self.lambda_column(u)?;
        let row: Vec<f64> = dir.0.iter().map(|d| metric.w * d).collect();
        let mut rhs = vec![0.0; u.len()];
        rhs.push(1.0);
        let x = solve_bordered(&jac, &col, &row, dir.1, &rhs).ok_or(Error::NoConvergence {
            solver: "tangent",
            iterations: 0,
            residual: f64::NAN,
        })?;
        let (tu, tl) = (&x[..u.len()], x[u.len()]);
        let nrm = metric.norm((tu, tl));
        Ok((tu.iter().map(|v| v / nrm).collect(), tl / nrm))
    }

    /// Newton on `G(u, λ) = 0`, `⟨d, (u - u_k, λ - λ_k)⟩ = ds`, with one
    /// extra step once the tolerances are met. Near a fold the residual
    /// tolerance alone leaves errors along the null direction far larger
    /// than small steps.
    fn correct(
        &self,
        base: (&[f64], f64),
        dir: (&[f64], f64),
        metric: Metric,
        ds: f64,
    ) -> Option<Corrected> {
        let shift = self.spec.eps;
        let mut u: Vec<f64> = base
            .0
            .iter()
            .zip(dir.0)
            .map(|(b, d)| {
                let pred = b + ds * d;
                // keep the predictor inside the domain of the singular term
                pred.max(0.5 * (b + shift) - shift)
            })
            .collect();
        let mut lambda = base.1 + ds * dir.1;
        let row: Vec<f64> = dir.0.iter().map(|d| metric.w * d).collect();
        let mut polished = false;
        for it in 0..=self.cfg.max_corrector + 1 {
            let source = Reaction::new(self.spec, lambda);
            let (r, scale) = weak_residual(&self.op, self.mesh, &u, &source).ok()?;
            let du_base: Vec<f64> = u.iter().zip(base.0).map(|(a, b)| a - b).collect();
            let constraint = metric.dot((&du_base, lambda - base.1), dir) - ds;
            let met = residual_measure(&r, scale) <= self.cfg.corrector_tol
                && constraint.abs() <= 1e-3 * ds;
            if met && polished {
                return Some(Corrected {
                    u,
                    lambda,
                    iterations: it,
                });
            }
            polished = met;
            if it == self.cfg.max_corrector + 1 || (it == self.cfg.max_corrector && !met) {
                break;
            }
            let jac = weak_jacobian(&self.op, self.mesh, &u, &source).ok()?;
            let col = self.lambda_column(&u).ok()?;
            let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            rhs.push(-constraint);
            let x = solve_bordered(&jac, &col, &row, dir.1, &rhs)?;
            let (du, dl) = (&x[..u.len()], x[u.len()]);
            let mut alpha: f64 = 1.0;
            for (ui, di) in u.iter().zip(du) {
                if *di < 0.0 {
                    alpha = alpha.min(0.5 * (ui + shift) / -di);
                }
            }
            for (ui, di) in u.iter_mut().zip(du) {
                *ui += alpha * di;
            }
            lambda += alpha * dl;
            if u.iter().any(|v| !(v + shift > POSITIVITY_FLOOR)) || !lambda.is_finite() {
                return None;
            }
        }
        None
    }
}

/// Traces the branch from the minimal solution at `λ = 10·lambda_floor`
/// until λ drops below the floor, the sup norm reaches the cap, or the step
/// budget runs out.
pub fn trace_branch(
    spec: &ProblemSpec,
    mesh: &Arc<Mesh1D>,
    cfg: &ContinuationConfig,
    opts: &SolveOptions,
) -> Result<Branch> {
    spec.validate()?;
    cfg.validate()?;
    opts.validate()?;
    let tracer = Tracer {
        spec,
        mesh,
        op: PLaplacian::new(spec.p),
        cfg,
    };
    let lambda0 = 10.0 * cfg.lambda_floor;
    let start = monotone_iteration_minimal(mesh, lambda0, spec, opts)?.solution;
    let start = newton_solve(&start, lambda0, spec, opts)?;

    let mut points = vec![BranchPoint::new(lambda0, start, 0.0, 1)];
    let zeros = vec![0.0; mesh.num_interior()];
    let (mut dir_u, mut dir_l) = tracer.tangent(&points[0].u.values, lambda0, (&zeros, 1.0))?;
    let mut ds = cfg.ds_init;
    let mut last_dl_sign = 1.0f64;
    let mut termination = Termination::MaxSteps;

    for _step in 0..cfg.max_steps {
        let cur = points.last().expect("branch has a start point");
        let metric = Metric::at(&cur.u.values);
        let base = (cur.u.values.as_slice(), cur.lambda);
        let outcome = loop {
            if ds < cfg.ds_min {
                break None;
            }
            let Some(c) = tracer.correct(base, (&dir_u, dir_l), metric, ds) else {
                ds *= 0.5;
                continue;
            };
            let sec_u: Vec<f64> = c.u.iter().zip(base.0).map(|(a, b)| a - b).collect();
            let sec_l = c.lambda - base.1;
            let nrm = metric.norm((&sec_u, sec_l));
            let cos = metric.dot((&sec_u, sec_l), (&dir_u, dir_l)) / nrm;
            if cos < cfg.min_cos_angle && ds > 10.0 * cfg.ds_min {
                ds *= 0.5;
                continue;
            }
            let crosses_fold = sec_l != 0.0 && sec_l.signum() != last_dl_sign;
            if crosses_fold && ds > cfg.ds_fold {
                ds = (ds / 4.0).max(0.5 * cfg.ds_fold);
                continue;
            }
            break Some((c, sec_u, sec_l, nrm));
        };
        let Some((c, sec_u, sec_l, nrm)) = outcome else {
            termination = Termination::StepFailure;
            break;
        };
        if c.lambda < cfg.lambda_floor {
            termination = Termination::LambdaFloor;
            break;
        }
        let arclength = cur.arclength + ds;
        if sec_l != 0.0 {
            last_dl_sign = sec_l.signum();
        }
        let u = GridFunction {
            mesh: Arc::clone(mesh),
            values: c.u,
        };
        let point = BranchPoint::new(c.lambda, u, arclength, last_dl_sign as i8);
        let at_cap = point.sup_norm >= cfg.norm_cap;
        points.push(point);
        if at_cap {
            termination = Termination::NormCap;
            break;
        }
        dir_u = sec_u.iter().map(|v| v / nrm).collect();
        dir_l = sec_l / nrm;
        if c.iterations <= 3 {
            ds = (1.5 * ds).min(cfg.ds_max);
        } else if c.iterations > 6 {
            ds = (0.7 * ds).max(cfg.ds_min);
        }
    }

    let branch = Branch::from_points(*spec, points, termination);
    if termination == Termination::StepFailure {
        let lambda = branch.points.last().map_or(f64::NAN, |p| p.lambda);
        return Err(Error::StepFailure {
            lambda,
            partial: Box::new(branch),
        });
    }
    Ok(branch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ContinuationConfig::default().validate().is_ok());
        let bad = ContinuationConfig {
            ds_min: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sign_changes_counted() {
        let mesh = Arc::new(Mesh1D::uniform(3, 1.0).unwrap());
        let u = GridFunction::new(mesh, vec![0.1, 0.2, 0.1]).unwrap();
        let pts: Vec<BranchPoint> = [0.1, 0.5, 0.9, 0.7, 0.3, 0.4]
            .iter()
            .enumerate()
            .map(|(k, &l)| BranchPoint::new(l, u.clone(), k as f64, 1))
            .collect();
        assert_eq!(count_sign_changes(&pts), 2);
    }

    #[test]
    fn default_branch_has_one_fold_below_the_bounds() {
        use crate::eigen::first_eigenpair;
        use crate::problem::{lambda_star_upper_bound, nonexistence_threshold};
        let spec = ProblemSpec::new(2.0, 3.0, 0.5).unwrap();
        let mesh = Arc::new(Mesh1D::graded(200, 1.0, 2.0).unwrap());
        let b = trace_branch(&spec, &mesh, &ContinuationConfig::default(), &SolveOptions::default()).unwrap();
        assert_eq!(b.termination, Termination::NormCap);
        assert_eq!(b.sign_changes, 1);
        let fold = b.fold.expect("fold");
        let l1 = first_eigenpair(&mesh, 2.0).unwrap().lambda1;
        let sharp = nonexistence_threshold(&spec, l1).unwrap();
        assert!(fold.lambda < sharp);
        assert!(sharp < lambda_star_upper_bound(&spec, l1));
        assert!(b.len() >= 100);
        for w in b.points.windows(2) {
            assert!(w[1].arclength > w[0].arclength);
        }
    }
}
