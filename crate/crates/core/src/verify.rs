//! Verification battery: every claim the solver is expected to reproduce,
//! checked in dependency order (eigen, torsion, base problem, branch,
//! sweeps) and collected into a serializable report.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::continuation::{
    count_solutions_at, epsilon_sweep, lower_branch_solution, max_location_trace, n_sweep,
    trace_branch, upper_branch_fit, Branch, ContinuationConfig,
};
use crate::discretization::{assemble_jacobian, assemble_residual, GridFunction, Mesh1D, PLaplacian};
use crate::eigen::{first_eigenpair, lambda1_closed_form, EigenResult};
use crate::error::{Error, Result};
use crate::problem::{
    lambda_star_upper_bound, nonexistence_certificate, nonexistence_threshold, zeta, ProblemSpec,
    Truncation,
};
use crate::solvers::{
    monotone_iteration_minimal, newton_solve, sandwich_check, solve_singular_base,
    torsion_solution, Annulus,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The mathematical statement the check exercises.
    pub anchor: String,
    pub measured: Vec<f64>,
    pub target: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub skipped: Option<String>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub num_interior: usize,
    pub grading: String,
    pub tol_residual: f64,
    pub corrector_tol: f64,
    pub tolerance_scale: f64,
    pub seed: u64,
    pub version: String,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub environment: Environment,
    /// Seconds per battery stage.
    pub wall_times: BTreeMap<String, f64>,
}

impl VerificationReport {
    /// True when every check ran and passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass && c.skipped.is_none())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass || c.skipped.is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

const A_EIGEN: &str = "first eigenpair of the Dirichlet p-Laplacian";
const A_TORSION: &str = "p-Laplacian torsion problem";
const A_BASE: &str = "scaling of the purely singular problem in λ";
const A_FOLD: &str = "extremal parameter bounded by λ₁(ζ+1)^δ ζ^(p-1)";
const A_TWO: &str = "at least two solutions below the extremal parameter";
const A_NONE: &str = "no solution above the extremal parameter";
const A_INFINITY: &str = "branch bifurcates from infinity at λ = 0";
const A_TRUNC: &str = "unique bifurcation point from infinity of the truncated problem";
const A_EPS_MONO: &str = "extremal parameter monotone in ε";
const A_EPS_CONV: &str = "solutions converge as ε → 0";
const A_MONOTONE: &str = "monotone iteration from zero gives the minimal solution";
const A_SANDWICH: &str = "a priori two-sided envelope on solutions in an annulus";
const A_UNIQUE: &str = "at most one small solution";
const A_JACOBIAN: &str = "Jacobian of the discrete system";
const A_MAXLOC: &str = "maximum stays a uniform distance from the boundary";

struct Battery {
    scale: f64,
    checks: Vec<Check>,
    times: BTreeMap<String, f64>,
}

impl Battery {
    fn push(&mut self, name: impl Into<String>, anchor: &str, measured: Vec<f64>, target: Vec<f64>, tolerance: f64, pass: bool) {
        self.checks.push(Check {
            name: name.into(),
            anchor: anchor.into(),
            measured: measured.into_iter().filter(|v| v.is_finite()).collect(),
            target,
            tolerance,
            pass,
            skipped: None,
            note: None,
        });
    }

    /// A check with a tolerance; skipped when the tolerance is scaled to
    /// zero. `judge` receives the scaled tolerance.
    fn with_tol(
        &mut self,
        name: impl Into<String>,
        anchor: &str,
        measured: Vec<f64>,
        target: Vec<f64>,
        base_tol: f64,
        judge: impl FnOnce(f64) -> bool,
    ) {
        let tol = base_tol * self.scale;
        let name = name.into();
        if tol == 0.0 {
            self.skip(name, anchor, "tolerance scaled to zero; the check cannot be met");
            return;
        }
        let pass = judge(tol);
        self.push(name, anchor, measured, target, tol, pass);
    }

    fn relative(&mut self, name: impl Into<String>, anchor: &str, measured: f64, target: f64, base_tol: f64) {
        self.with_tol(name, anchor, vec![measured], vec![target], base_tol, |tol| {
            ((measured - target) / target).abs() <= tol
        });
    }

    fn absolute(&mut self, name: impl Into<String>, anchor: &str, measured: f64, target: f64, base_tol: f64) {
        self.with_tol(name, anchor, vec![measured], vec![target], base_tol, |tol| {
            (measured - target).abs() <= tol
        });
    }

    fn skip(&mut self, name: impl Into<String>, anchor: &str, reason: &str) {
        self.checks.push(Check {
            name: name.into(),
            anchor: anchor.into(),
            measured: vec![],
            target: vec![],
            tolerance: 0.0,
            pass: false,
            skipped: Some(reason.into()),
            note: None,
        });
    }

    fn failed(&mut self, name: impl Into<String>, anchor: &str, err: &Error) {
        self.checks.push(Check {
            name: name.into(),
            anchor: anchor.into(),
            measured: vec![],
            target: vec![],
            tolerance: 0.0,
            pass: false,
            skipped: None,
            note: Some(err.to_string()),
        });
    }

    fn noted(&mut self, note: String) {
        if let Some(c) = self.checks.last_mut() {
            c.note = Some(note);
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let t = Instant::now();
        let out = f(self);
        *self.times.entry(stage.into()).or_default() += t.elapsed().as_secs_f64();
        out
    }
}

/// Relative finite-difference error of the assembled Jacobian in a random
/// direction, using a fourth-order central stencil.
pub fn jacobian_fd_error(u: &GridFunction, lambda: f64, spec: &ProblemSpec, dir: &[f64]) -> Result<f64> {
    let mesh = &u.mesh;
    let jac = assemble_jacobian(u, lambda, spec)?;
    // relative perturbation keeps the state positive; the step is small
    // enough that no slope moves by more than 1%
    let scaled: Vec<f64> = u.values.iter().zip(dir).map(|(a, d)| a * d).collect();
    let s0 = PLaplacian::slopes(mesh, &u.values);
    let ds = PLaplacian::slopes(mesh, &scaled);
    let t = s0
        .iter()
        .zip(&ds)
        .map(|(a, b)| 0.01 * a.abs() / b.abs().max(1e-300))
        .fold(1e-4, f64::min);
    let r = |k: f64| {
        let vals = u.values.iter().zip(&scaled).map(|(a, d)| a + k * t * d).collect();
        assemble_residual(&u.with_values(vals), lambda, spec)
    };
    let (rp, rm, rp2, rm2) = (r(1.0)?, r(-1.0)?, r(2.0)?, r(-2.0)?);
    let jd = jac.mul_vec(&scaled);
    let floor = 1e-6 * jd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..jd.len() {
        let fd = (8.0 * (rp[i] - rm[i]) - (rp2[i] - rm2[i])) / (12.0 * t);
        worst = worst.max((fd - jd[i]).abs() / jd[i].abs().max(floor));
    }
    Ok(worst)
}

fn log_slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xy.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the whole battery for `cfg`.
pub fn run_battery(cfg: &RunConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let mesh = cfg.build_mesh()?;
    let spec = cfg.spec;
    let opts = cfg.solve;
    let cont = cfg.continuation;
    let v = &cfg.verify;
    let length = spec.domain_length;
    let mut b = Battery {
        scale: v.tolerance_scale,
        checks: Vec::new(),
        times: BTreeMap::new(),
    };

    // eigenpairs for every exponent in use
    let mut ps: Vec<f64> = vec![2.0, 3.0, spec.p];
    ps.extend(&v.grid_p);
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let eigen: BTreeMap<u64, Result<EigenResult>> = b.time("eigen", |_| {
        ps.par_iter()
            .map(|&p| (p.to_bits(), first_eigenpair(&mesh, p)))
            .collect()
    });
    let lambda1 = |p: f64| -> Option<f64> {
        eigen.get(&p.to_bits()).and_then(|r| r.as_ref().ok()).map(|e| e.lambda1)
    };
    for (p, tol) in [(2.0, 1e-3), (3.0, 5e-3)] {
        let name = format!("eigenvalue_p{p}");
        match &eigen[&f64::to_bits(p)] {
            Ok(e) => b.relative(name, A_EIGEN, e.lambda1, lambda1_closed_form(p, length), tol),
            Err(err) => b.failed(name, A_EIGEN, err),
        }
    }

    b.time("torsion", |b| {
        for (p, tol) in [(2.0, 1e-4), (3.0, 1e-3)] {
            let name = format!("torsion_sup_p{p}");
            let exact = (p - 1.0) / p * (0.5 * length).powf(p / (p - 1.0));
            match torsion_solution(&mesh, p) {
                Ok(e) => b.absolute(name, A_TORSION, e.sup_norm(), exact, tol),
                Err(err) => b.failed(name, A_TORSION, &err),
            }
        }
    });

    b.time("base", |b| {
        for &delta in &v.grid_delta {
            let name = format!("base_scaling_delta{delta}");
            let res = ProblemSpec::new(spec.p, spec.q, delta)
                .and_then(|s| s.with_length(length))
                .and_then(|s| {
                    [1e-4, 1e-3, 1e-2]
                        .iter()
                        .map(|&l| solve_singular_base(&mesh, l, 0.0, &s, &opts).map(|u| (l, u.sup_norm())))
                        .collect::<Result<Vec<_>>>()
                        .map(|xy| (s, xy))
                });
            match res {
                Ok((s, xy)) => b.relative(name, A_BASE, log_slope(&xy), s.base_scaling_exponent(), 1e-2),
                Err(err) => b.failed(name, A_BASE, &err),
            }
        }
    });

    // reference branch plus the (p, δ) grid, traced concurrently
    let mut cases: Vec<(f64, f64)> = vec![(spec.p, spec.delta)];
    for &p in &v.grid_p {
        for &d in &v.grid_delta {
            if (p, d) != (spec.p, spec.delta) {
                cases.push((p, d));
            }
        }
    }
    let traced: Vec<(ProblemSpec, Result<Branch>)> = b.time("branch", |_| {
        cases
            .par_iter()
            .map(|&(p, d)| {
                let s = ProblemSpec { p, delta: d, ..spec };
                (s, trace_branch(&s, &mesh, &cont, &opts))
            })
            .collect()
    });

    let mut maxloc = Vec::new();
    for (s, res) in &traced {
        let name = format!("fold_bound_p{}_delta{}", s.p, s.delta);
        let branch = match res {
            Ok(br) => br,
            Err(err) => {
                b.failed(name, A_FOLD, err);
                continue;
            }
        };
        maxloc.push(max_location_trace(branch));
        let (Some(l1), Some(fold)) = (lambda1(s.p), branch.fold) else {
            b.failed(name, A_FOLD, &Error::NoFold);
            continue;
        };
        let sharp = nonexistence_threshold(s, l1)?;
        let upper = lambda_star_upper_bound(s, l1);
        b.with_tol(name, A_FOLD, vec![fold.lambda, sharp, upper], vec![], 1e-2, |tol| {
            branch.sign_changes == 1 && fold.lambda <= (1.0 - tol) * sharp && sharp <= (1.0 - tol) * upper
        });
        b.noted(format!("sign changes {}", branch.sign_changes));
    }
    if !maxloc.is_empty() {
        let worst = maxloc.iter().copied().fold(f64::INFINITY, f64::min);
        let ok = maxloc.len() == traced.len() && worst >= 0.25 * length;
        b.push("max_location", A_MAXLOC, vec![worst], vec![0.25 * length], 0.0, ok);
    }

    let reference = match &traced[0].1 {
        Ok(br) if br.fold.is_some() => Some(br),
        _ => None,
    };
    let l1 = lambda1(spec.p).ok_or(Error::NoConvergence {
        solver: "inverse power iteration",
        iterations: 0,
        residual: f64::NAN,
    });

    match (reference, l1) {
        (Some(br), Ok(l1)) => reference_checks(&mut b, cfg, &mesh, br, l1, &eigen[&spec.p.to_bits()])?,
        _ => {
            for (name, anchor) in [
                ("two_solutions", A_TWO),
                ("nonexistence", A_NONE),
                ("upper_branch_slope", A_INFINITY),
                ("monotone_iteration", A_MONOTONE),
                ("sandwich", A_SANDWICH),
                ("small_solution_uniqueness", A_UNIQUE),
            ] {
                b.skip(name, anchor, "reference branch unavailable");
            }
        }
    }

    // truncated problems
    b.time("truncation", |b| {
        let Some(l1) = lambda1(spec.p) else {
            b.skip("truncation", A_TRUNC, "eigenvalue unavailable");
            return;
        };
        let Ok(base) = spec.with_eps(v.truncation_eps) else {
            b.skip("truncation", A_TRUNC, "invalid truncation ε");
            return;
        };
        let top = v.n_list.iter().copied().max().unwrap_or(1) as f64;
        let tcfg = ContinuationConfig {
            norm_cap: cont.norm_cap.max(50.0 * top),
            ..cont
        };
        let sweep = n_sweep(&base, &mesh, &v.n_list, &tcfg, &opts);
        let k = spec.superlinearity();
        for e in &sweep {
            let name = format!("truncation_asymptote_n{}", e.n);
            match &e.fit {
                Some(fit) => b.relative(name, A_TRUNC, fit.asymptote, l1 / f64::from(e.n).powf(k), 2e-2),
                None => b.failed(name, A_TRUNC, &Error::Config(e.error.clone().unwrap_or_default())),
            }
        }
        for w in sweep.windows(2) {
            if let (Some(a), Some(c)) = (&w[0].fit, &w[1].fit) {
                let target = (f64::from(w[1].n) / f64::from(w[0].n)).powf(k);
                b.relative(format!("truncation_ratio_n{}_n{}", w[0].n, w[1].n), A_TRUNC, a.asymptote / c.asymptote, target, 3e-2);
            }
        }
    });

    // ε sweep
    b.time("eps_sweep", |b| {
        if v.eps_list.len() < 2 {
            b.skip("eps_monotone", A_EPS_MONO, "need at least two ε values");
            return;
        }
        match epsilon_sweep(&spec, &mesh, &v.eps_list, &cont, &opts) {
            Ok(sw) => {
                let folds: Vec<f64> = sw.entries.iter().filter_map(|e| e.fold).collect();
                let complete = folds.len() == sw.entries.len();
                b.with_tol("eps_monotone", A_EPS_MONO, folds, vec![], 1e-4, |tol| {
                    complete && sw.max_increase <= tol
                });
                let d = sw.matched_distances.clone();
                b.push("eps_convergence", A_EPS_CONV, d, vec![], 0.0, sw.distances_decrease);
                if let (Some(lim), Some(l1)) = (sw.limit_estimate, lambda1(spec.p)) {
                    let upper = lambda_star_upper_bound(&spec, l1);
                    b.push("eps_limit_below_bound", A_FOLD, vec![lim], vec![upper], 0.0, lim <= upper);
                }
            }
            Err(err) => b.failed("eps_monotone", A_EPS_MONO, &err),
        }
    });

    // random states for the Jacobian check
    b.time("jacobian", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst = 0.0f64;
        let mut error = None;
        for k in 0..v.jacobian_samples {
            let p = v.grid_p[k % v.grid_p.len().max(1)];
            let d = v.grid_delta[(k / v.grid_p.len().max(1)) % v.grid_delta.len().max(1)];
            let eps = if rng.random::<bool>() { 0.0 } else { rng.random_range(1e-3..0.2) };
            let n_trunc = if rng.random::<bool>() {
                Truncation::Infinite
            } else {
                Truncation::Finite(rng.random_range(1..20))
            };
            let s = ProblemSpec { p, delta: d, eps, n_trunc, ..spec };
            let bump = rng.random_range(0.5..1.0);
            let amp = rng.random_range(0.1..5.0);
            let u = GridFunction::from_fn(Arc::clone(&mesh), |x| {
                amp * (x * (length - x)).powf(bump) * (1.0 + 0.5 * rng.random::<f64>())
            });
            let dir: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda = rng.random_range(0.1..10.0);
            match jacobian_fd_error(&u, lambda, &s, &dir) {
                Ok(e) => worst = worst.max(e),
                Err(e) => error = Some(e),
            }
        }
        match error {
            Some(e) => b.failed("jacobian_fd", A_JACOBIAN, &e),
            None => b.with_tol("jacobian_fd", A_JACOBIAN, vec![worst], vec![0.0], 1e-5, |tol| worst <= tol),
        }
    });

    Ok(VerificationReport {
        checks: b.checks,
        environment: Environment {
            num_interior: mesh.num_interior(),
            grading: format!("{:?}", mesh.grading()),
            tol_residual: opts.tol_residual,
            corrector_tol: cont.corrector_tol,
            tolerance_scale: v.tolerance_scale,
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            threads: rayon::current_num_threads(),
        },
        wall_times: b.times,
    })
}

/// Checks that need the reference branch.
fn reference_checks(
    b: &mut Battery,
    cfg: &RunConfig,
    mesh: &Arc<Mesh1D>,
    br: &Branch,
    l1: f64,
    eigen: &Result<EigenResult>,
) -> Result<()> {
    let spec = cfg.spec;
    let opts = cfg.solve;
    let fold = br.fold.expect("caller checks the fold").lambda;
    let sharp = nonexistence_threshold(&spec, l1)?;

    b.time("multiplicity", |b| {
        let mut counts = Vec::new();
        let mut err = None;
        for c in [0.25, 0.5, 0.75] {
            match count_solutions_at(c * fold, br) {
                Ok(n) => counts.push(n as f64),
                Err(e) => err = Some(e),
            }
        }
        match err {
            Some(e) => b.failed("two_solutions", A_TWO, &e),
            None => {
                let ok = counts.iter().all(|&c| c == 2.0);
                b.push("two_solutions", A_TWO, counts, vec![2.0; 3], 0.0, ok);
            }
        }
        match count_solutions_at(1.1 * sharp, br) {
            Ok(n) => b.push("no_crossing_above_threshold", A_NONE, vec![n as f64], vec![0.0], 0.0, n == 0),
            Err(e) => b.failed("no_crossing_above_threshold", A_NONE, &e),
        }
        // the minimal-solution iteration must fail above the threshold
        let lq = cfg.verify.lambda_query.unwrap_or(1.1 * sharp);
        let certified = nonexistence_certificate(lq, &spec, l1).unwrap_or(false);
        let outcome = monotone_iteration_minimal(mesh, lq, &spec, &opts);
        let failed = matches!(
            outcome,
            Err(Error::Divergence { .. } | Error::NoConvergence { .. } | Error::PositivityLoss { .. })
        );
        b.push("nonexistence", A_NONE, vec![lq], vec![sharp], 0.0, certified && failed);
        b.noted(match &outcome {
            Ok(r) => format!("iteration converged to sup {}", r.solution.sup_norm()),
            Err(e) => e.to_string(),
        });
    });

    match upper_branch_fit(br, 2.0) {
        Ok(fit) => b.relative("upper_branch_slope", A_INFINITY, fit.slope, -1.0 / spec.superlinearity(), 2e-2),
        Err(e) => b.failed("upper_branch_slope", A_INFINITY, &e),
    }

    b.time("monotone", |b| {
        let mut dists = Vec::new();
        let mut err = None;
        for k in 1..=5 {
            let lambda = fold * k as f64 / 12.0;
            let res = monotone_iteration_minimal(mesh, lambda, &spec, &opts).and_then(|rep| {
                let lower = lower_branch_solution(br, lambda, &opts)?;
                Ok(rep.solution.sup_distance(&lower))
            });
            match res {
                Ok(d) => dists.push(d),
                Err(e) => err = Some(e),
            }
        }
        match err {
            Some(e) => b.failed("monotone_iteration", A_MONOTONE, &e),
            None => {
                let worst = dists.iter().copied().fold(0.0, f64::max);
                b.with_tol("monotone_iteration", A_MONOTONE, dists, vec![0.0], 1e-6, |tol| worst <= tol);
            }
        }
    });

    b.time("sandwich", |b| {
        let res = eigen.as_ref().map_err(|e| Error::Config(e.to_string())).and_then(|e| {
            let ep = torsion_solution(mesh, spec.p)?;
            let norms: Vec<f64> = br.points.iter().map(|p| p.pair_norm()).collect();
            let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = norms.iter().copied().fold(0.0, f64::max);
            let ann = Annulus { varrho: 0.9 * lo, big_r: 1.1 * hi };
            let mut bad = 0usize;
            for p in &br.points {
                let out = sandwich_check(&p.u, p.lambda, &spec, &e.phi1, e.lambda1, &ep, ann, ann.varrho / 4.0)?;
                if !out.holds {
                    bad += 1;
                }
            }
            Ok((bad, br.points.len()))
        });
        match res {
            Ok((bad, n)) => b.push("sandwich", A_SANDWICH, vec![bad as f64, n as f64], vec![0.0], 0.0, bad == 0),
            Err(e) => b.failed("sandwich", A_SANDWICH, &e),
        }
    });

    b.time("uniqueness", |b| {
        let radius = 0.5 * zeta(&spec);
        let end = br.fold.map_or(br.len(), |f| f.index);
        let small: Vec<_> = br.points[..end].iter().filter(|p| p.sup_norm < radius).collect();
        if small.is_empty() {
            b.skip("small_solution_uniqueness", A_UNIQUE, "no lower-branch point inside the ball");
            return;
        }
        let stride = small.len().div_ceil(10);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        let mut worst = 0.0f64;
        let mut err = None;
        for p in small.iter().step_by(stride) {
            let base = match newton_solve(&p.u, p.lambda, &spec, &opts) {
                Ok(u) => u,
                Err(e) => {
                    err = Some(e);
                    continue;
                }
            };
            for _ in 0..cfg.verify.uniqueness_starts {
                let start: Vec<f64> = base
                    .values
                    .iter()
                    .map(|&x| x * (1.0 + rng.random_range(-0.3..0.3)))
                    .collect();
                match newton_solve(&base.with_values(start), p.lambda, &spec, &opts) {
                    Ok(u) => worst = worst.max(u.sup_distance(&base) / base.sup_norm().max(1.0)),
                    Err(e) => err = Some(e),
                }
            }
        }
        match err {
            Some(e) => b.failed("small_solution_uniqueness", A_UNIQUE, &e),
            None => {
                let base_tol = 10.0 * opts.tol_residual;
                b.with_tol("small_solution_uniqueness", A_UNIQUE, vec![worst], vec![0.0], base_tol, |tol| worst <= tol);
            }
        }
    });
    Ok(())
}
