//! Nonlinear solves for fixed λ.

mod newton;
mod sandwich;

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use newton::{newton, NewtonReport, NewtonStep, SolveOptions, POSITIVITY_FLOOR};
pub use sandwich::{
    k2_constant, sandwich_check, sandwich_constants, Annulus, Envelope, SandwichConstants,
    SandwichOutcome,
};

use crate::discretization::{
    integrate_flux, FixedRhs, FrozenSource, GridFunction, Mesh1D, PLaplacian, Reaction,
    SingularOnly,
};
use crate::error::{Error, Result};
use crate::problem::{zeta, ProblemSpec};

/// Solves the discrete problem at fixed λ starting from `u0`.
pub fn newton_solve(
    u0: &GridFunction,
    lambda: f64,
    spec: &ProblemSpec,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    newton_solve_report(u0, lambda, spec, opts).map(|(u, _)| u)
}

pub fn newton_solve_report(
    u0: &GridFunction,
    lambda: f64,
    spec: &ProblemSpec,
    opts: &SolveOptions,
) -> Result<(GridFunction, NewtonReport)> {
    spec.validate()?;
    let op = PLaplacian::new(spec.p);
    let rep = newton(&op, &u0.mesh, &u0.values, &Reaction::new(spec, lambda), opts)?;
    Ok((u0.with_values(rep.values.clone()), rep))
}

/// Torsion function: `-Δ_p e = 1` with zero boundary values.
pub fn torsion_solution(mesh: &Arc<Mesh1D>, p: f64) -> Result<GridFunction> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidSpec(format!("p must exceed 1, got {p}")));
    }
    let n = mesh.num_interior();
    let ones = vec![1.0; n];
    let start = integrate_flux(mesh, p, &ones);
    let rep = newton(
        &PLaplacian::new(p),
        mesh,
        &start,
        &FixedRhs(ones),
        &SolveOptions::default(),
    )?;
    GridFunction::new(Arc::clone(mesh), rep.values)
}

/// Unique positive solution of `-Δ_p u = λ(u+ε)^(-δ)`, with `ε` taken from
/// the argument rather than from `spec`.
pub fn solve_singular_base(
    mesh: &Arc<Mesh1D>,
    lambda: f64,
    eps: f64,
    spec: &ProblemSpec,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidOptions(format!("λ must be positive, got {lambda}")));
    }
    let spec = spec.with_eps(eps)?;
    let start = singular_base_guess(mesh, lambda, &spec);
    solve_singular_base_from(&start, lambda, &spec, opts)
}

/// As [`solve_singular_base`] with a caller-supplied positive start.
pub fn solve_singular_base_from(
    start: &GridFunction,
    lambda: f64,
    spec: &ProblemSpec,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    let op = PLaplacian::new(spec.p);
    let rep = newton(
        &op,
        &start.mesh,
        &start.values,
        &SingularOnly { spec, lambda },
        opts,
    )?;
    Ok(start.with_values(rep.values))
}

/// Half of `c ψ`, where `ψ = (e_p / sup e_p)^β` carries the boundary
/// behaviour of the solution and `c` balances `∫ψ A(cψ)` against
/// `λ ∫ψ (cψ+ε)^(-δ)`.
fn singular_base_guess(mesh: &Arc<Mesh1D>, lambda: f64, spec: &ProblemSpec) -> GridFunction {
    let (p, delta, eps) = (spec.p, spec.delta, spec.eps);
    let e = integrate_flux(mesh, p, &vec![1.0; mesh.num_interior()]);
    let emax = e.iter().copied().fold(0.0, f64::max);
    let beta = (p / (p - 1.0 + delta)).min(1.0);
    let psi: Vec<f64> = e.iter().map(|v| (v / emax).powf(beta)).collect();
    let energy = PLaplacian::pure(p).energy(mesh, &psi);
    let vol = mesh.volumes();
    let balance = |c: f64| -> f64 {
        let rhs: f64 = psi
            .iter()
            .zip(vol)
            .map(|(s, v)| v * s * (c * s + eps).powf(-delta))
            .sum();
        c.powf(p - 1.0) * energy - lambda * rhs
    };
    // balance is increasing in c
    let (mut lo, mut hi) = (1e-300f64, 1.0f64);
    while balance(hi) < 0.0 && hi < 1e300 {
        lo = hi;
        hi *= 10.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if balance(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-10 {
            break;
        }
    }
    GridFunction {
        mesh: Arc::clone(mesh),
        values: psi.iter().map(|s| 0.5 * hi * s).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneStep {
    pub iteration: usize,
    pub sup_norm: f64,
    /// `sup |u_k - u_{k-1}|`.
    pub increment: f64,
    /// `min (u_k - u_{k-1})`, nonnegative up to solver tolerance.
    pub min_increment: f64,
    pub newton_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct MonotoneReport {
    pub solution: GridFunction,
    pub iterations: usize,
    pub steps: Vec<MonotoneStep>,
}

/// Sup-norm cap in units of ζ beyond which the iteration is declared
/// divergent.
pub const DIVERGENCE_CAP_FACTOR: f64 = 1e3;

/// Minimal solution as the limit of `u_0 = 0`,
/// `-Δ_p u_k = λ(u_k+ε)^(-δ) + λ f_n(u_{k-1})`.
pub fn monotone_iteration_minimal(
    mesh: &Arc<Mesh1D>,
    lambda: f64,
    spec: &ProblemSpec,
    opts: &SolveOptions,
) -> Result<MonotoneReport> {
    spec.validate()?;
    opts.validate()?;
    let cap = DIVERGENCE_CAP_FACTOR * zeta(spec);
    let op = PLaplacian::new(spec.p);
    let mut prev = solve_singular_base(mesh, lambda, spec.eps, spec, opts)?;
    let mut steps = vec![MonotoneStep {
        iteration: 1,
        sup_norm: prev.sup_norm(),
        increment: prev.sup_norm(),
        min_increment: prev.min(),
        newton_iterations: 0,
    }];
    for k in 2..=opts.max_outer {
        let source = FrozenSource::new(spec, lambda, &prev.values);
        let rep = newton(&op, mesh, &prev.values, &source, opts)?;
        let next = prev.with_values(rep.values);
        let sup = next.sup_norm();
        if !(sup <= cap) {
            return Err(Error::Divergence { sup_norm: sup, cap });
        }
        let (mut inc, mut min_inc, mut node) = (0.0f64, f64::INFINITY, 0);
        for (i, (a, b)) in next.values.iter().zip(&prev.values).enumerate() {
            let d = a - b;
            inc = inc.max(d.abs());
            if d < min_inc {
                min_inc = d;
                node = i;
            }
        }
        // decreases below this are solver noise
        let slack = 1e3 * opts.tol_residual * (1.0 + sup);
        if min_inc < -slack {
            return Err(Error::MonotonicityViolation {
                step: k,
                node,
                decrease: -min_inc,
            });
        }
        steps.push(MonotoneStep {
            iteration: k,
            sup_norm: sup,
            increment: inc,
            min_increment: min_inc,
            newton_iterations: rep.iterations,
        });
        prev = next;
        if inc <= opts.tol_fixedpoint {
            return Ok(MonotoneReport {
                solution: prev,
                iterations: k,
                steps,
            });
        }
    }
    Err(Error::NoConvergence {
        solver: "monotone iteration",
        iterations: opts.max_outer,
        residual: steps.last().map_or(f64::NAN, |s| s.increment),
    })
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut w: W) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
