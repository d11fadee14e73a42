use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{detect_fold, trace_branch, Branch, ContinuationConfig, Termination};
use crate::discretization::{GridFunction, Mesh1D};
use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, Truncation};
use crate::solvers::{newton_solve, SolveOptions};

/// Allowed increase of the fold λ between consecutive, decreasing ε.
pub const EPS_MONOTONE_SLACK: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub fold: Option<f64>,
    pub points: usize,
    pub termination: Option<Termination>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweep {
    pub entries: Vec<SweepEntry>,
    /// Fold λ never increases by more than the slack as ε decreases.
    pub monotone: bool,
    /// Largest increase of the fold λ between consecutive entries.
    pub max_increase: f64,
    /// Aitken extrapolation over the last three fold values.
    pub limit_estimate: Option<f64>,
    /// λ at which solutions are compared across ε (half the smallest fold).
    pub matched_lambda: Option<f64>,
    /// `sup |u_{ε_k} - u_{ε_{k+1}}|` at the matched λ on the lower branch.
    pub matched_distances: Vec<f64>,
    pub distances_decrease: bool,
    #[serde(skip)]
    pub branches: Vec<Option<Branch>>,
}

fn aitken(x: &[f64]) -> Option<f64> {
    let [a, b, c] = x[x.len().checked_sub(3)?..] else {
        return None;
    };
    let denom = c - 2.0 * b + a;
    if denom.abs() <= 1e-14 * c.abs().max(1.0) {
        return Some(c);
    }
    Some(c - (c - b) * (c - b) / denom)
}

/// Lower-branch solution at exactly `lambda`, warm-started from the nearest
/// point before the fold.
pub fn lower_branch_solution(
    branch: &Branch,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    let end = detect_fold(branch)?.index;
    let pts = &branch.points[..=end];
    let k = pts
        .windows(2)
        .position(|w| w[0].lambda <= lambda && lambda <= w[1].lambda)
        .ok_or(Error::InvalidOptions(format!(
            "λ = {lambda} is not on the lower branch"
        )))?;
    let near = if lambda - pts[k].lambda < pts[k + 1].lambda - lambda {
        &pts[k]
    } else {
        &pts[k + 1]
    };
    newton_solve(&near.u, lambda, &branch.spec, opts)
}

/// Traces one branch per ε (in parallel) and checks how the fold and the
/// lower-branch solutions behave as ε decreases.
pub fn epsilon_sweep(
    spec_base: &ProblemSpec,
    mesh: &Arc<Mesh1D>,
    eps_list: &[f64],
    cfg: &ContinuationConfig,
    opts: &SolveOptions,
) -> Result<EpsilonSweep> {
    if eps_list.windows(2).any(|w| !(w[0] > w[1])) || eps_list.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::InvalidOptions(
            "ε list must be strictly decreasing and nonnegative".into(),
        ));
    }
    let traced: Vec<(f64, Result<Branch>)> = eps_list
        .par_iter()
        .map(|&eps| {
            let branch = spec_base
                .with_eps(eps)
                .and_then(|s| trace_branch(&s, mesh, cfg, opts));
            (eps, branch)
        })
        .collect();

    let mut sweep = EpsilonSweep::default();
    for (eps, res) in traced {
        let entry = match &res {
            Ok(b) => SweepEntry {
                eps,
                fold: detect_fold(b).ok().map(|f| f.lambda),
                points: b.len(),
                termination: Some(b.termination),
                error: None,
            },
            Err(Error::StepFailure { partial, .. }) => SweepEntry {
                eps,
                fold: detect_fold(partial).ok().map(|f| f.lambda),
                points: partial.len(),
                termination: Some(Termination::StepFailure),
                error: Some(res.as_ref().unwrap_err().to_string()),
            },
            Err(e) => SweepEntry {
                eps,
                fold: None,
                points: 0,
                termination: None,
                error: Some(e.to_string()),
            },
        };
        sweep.entries.push(entry);
        sweep.branches.push(match res {
            Ok(b) => Some(b),
            Err(Error::StepFailure { partial, .. }) => Some(*partial),
            Err(_) => None,
        });
    }

    let folds: Vec<f64> = sweep.entries.iter().filter_map(|e| e.fold).collect();
    let all_folds = folds.len() == sweep.entries.len();
    sweep.max_increase = folds
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    sweep.monotone = all_folds && sweep.max_increase <= EPS_MONOTONE_SLACK;
    sweep.limit_estimate = aitken(&folds);

    if all_folds && !folds.is_empty() {
        let lambda_m = 0.5 * folds.iter().copied().fold(f64::INFINITY, f64::min);
        sweep.matched_lambda = Some(lambda_m);
        let sols: Vec<Option<GridFunction>> = sweep
            .branches
            .par_iter()
            .map(|b| {
                b.as_ref()
                    .and_then(|b| lower_branch_solution(b, lambda_m, opts).ok())
            })
            .collect();
        sweep.matched_distances = sols
            .windows(2)
            .map(|w| match (&w[0], &w[1]) {
                (Some(a), Some(b)) => a.sup_distance(b),
                _ => f64::NAN,
            })
            .collect();
        sweep.distances_decrease = sweep.matched_distances.iter().all(|d| d.is_finite())
            && sweep.matched_distances.windows(2).all(|w| w[1] < w[0]);
    }
    Ok(sweep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteFit {
    /// Fitted `a` in `λ ≈ a + b / sup u`.
    pub asymptote: f64,
    pub coefficient: f64,
    pub tail_points: usize,
    pub sup_range: (f64, f64),
    pub fold: Option<f64>,
    pub termination: Termination,
}

pub const MIN_TAIL_POINTS: usize = 10;

/// Least-squares fit of `λ = a + b / sup u` over branch points with
/// `sup u ∈ [10 n, cap]`.
pub fn fit_asymptote(branch: &Branch, n: f64, cap: f64) -> Result<AsymptoteFit> {
    let tail: Vec<(f64, f64)> = branch
        .points
        .iter()
        .filter(|p| p.sup_norm >= 10.0 * n && p.sup_norm <= cap * (1.0 + 1e-9) + 1e-9 * cap)
        .map(|p| (1.0 / p.sup_norm, p.lambda))
        .collect();
    let tail = if tail.len() < MIN_TAIL_POINTS {
        // the final point may overshoot the cap slightly
        branch
            .points
            .iter()
            .filter(|p| p.sup_norm >= 10.0 * n)
            .map(|p| (1.0 / p.sup_norm, p.lambda))
            .collect()
    } else {
        tail
    };
    if tail.len() < MIN_TAIL_POINTS {
        return Err(Error::TailTooShort {
            found: tail.len(),
            needed: MIN_TAIL_POINTS,
        });
    }
    let (a, b) = least_squares_line(&tail);
    let lo = tail.iter().map(|t| 1.0 / t.0).fold(f64::INFINITY, f64::min);
    let hi = tail.iter().map(|t| 1.0 / t.0).fold(0.0, f64::max);
    Ok(AsymptoteFit {
        asymptote: a,
        coefficient: b,
        tail_points: tail.len(),
        sup_range: (lo, hi),
        fold: branch.fold.map(|f| f.lambda),
        termination: branch.termination,
    })
}

/// Intercept and slope of the least-squares line through `(x, y)`.
fn least_squares_line(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Traces the truncated problem to the norm cap and fits where the branch
/// turns vertical.
pub fn truncation_asymptote_estimate(
    spec: &ProblemSpec,
    mesh: &Arc<Mesh1D>,
    cfg: &ContinuationConfig,
    opts: &SolveOptions,
) -> Result<AsymptoteFit> {
    let Truncation::Finite(n) = spec.n_trunc else {
        return Err(Error::InvalidSpec(
            "asymptote estimate needs a finite truncation level".into(),
        ));
    };
    let n = n as f64;
    if cfg.norm_cap < 50.0 * n {
        return Err(Error::InvalidOptions(format!(
            "norm_cap {} is below 50·n = {}",
            cfg.norm_cap,
            50.0 * n
        )));
    }
    let branch = trace_branch(spec, mesh, cfg, opts)?;
    fit_asymptote(&branch, n, cfg.norm_cap)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NSweepEntry {
    pub n: u32,
    pub fit: Option<AsymptoteFit>,
    pub error: Option<String>,
}

pub fn n_sweep(
    spec_base: &ProblemSpec,
    mesh: &Arc<Mesh1D>,
    n_list: &[u32],
    cfg: &ContinuationConfig,
    opts: &SolveOptions,
) -> Vec<NSweepEntry> {
    n_list
        .par_iter()
        .map(|&n| {
            let res = spec_base
                .with_truncation(Truncation::Finite(n))
                .and_then(|s| truncation_asymptote_estimate(&s, mesh, cfg, opts));
            match res {
                Ok(fit) => NSweepEntry {
                    n,
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => NSweepEntry {
                    n,
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// Slope of `log sup u` against `log λ`.
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    /// `λ · sup u^(q-p+1)` at the last point.
    pub scaling_constant: f64,
}

/// Log-log fit of `sup u` against λ on the upper branch, over the last
/// `decades` decades of sup norm.
pub fn upper_branch_fit(branch: &Branch, decades: f64) -> Result<PowerFit> {
    let start = branch.fold.map_or(0, |f| f.index);
    let upper = &branch.points[start..];
    let top = upper.iter().map(|p| p.sup_norm).fold(0.0, f64::max);
    let lo = top / 10f64.powf(decades);
    let xy: Vec<(f64, f64)> = upper
        .iter()
        .filter(|p| p.sup_norm >= lo && p.lambda > 0.0)
        .map(|p| (p.lambda.ln(), p.sup_norm.ln()))
        .collect();
    if xy.len() < 3 {
        return Err(Error::TailTooShort {
            found: xy.len(),
            needed: 3,
        });
    }
    let (intercept, slope) = least_squares_line(&xy);
    let last = upper.last().expect("nonempty upper branch");
    Ok(PowerFit {
        slope,
        intercept,
        points: xy.len(),
        scaling_constant: last.lambda * last.sup_norm.powf(branch.spec.superlinearity()),
    })
}

/// Smallest distance from the location of `max u` to the boundary.
pub fn max_location_trace(branch: &Branch) -> f64 {
    let length = branch.spec.domain_length;
    branch
        .points
        .iter()
        .map(|p| p.argmax_location.min(length - p.argmax_location))
        .fold(f64::INFINITY, f64::min)
}
