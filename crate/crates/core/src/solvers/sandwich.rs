//! Pointwise a priori envelope for solutions whose pair norm
//! `max(λ, sup u)` lies in an annulus `[ϱ, R]`:
//!
//! ```text
//! λ^(1/(p-1)) K₁ φ₁  ≤  u  ≤  r + λ^(1/(p-1)) K₂(r, R)^(1/(p-1)) e_p
//! ```

use serde::{Deserialize, Serialize};

use crate::discretization::GridFunction;
use crate::error::{Error, Result};
use crate::problem::{g_eps, g_eps_minimizer, ProblemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub varrho: f64,
    pub big_r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichConstants {
    pub r: f64,
    pub k2: f64,
    pub c_star: f64,
    pub k_tilde: f64,
    /// First crossing of `((t+1)^(-δ) + t^q) / t^(p-1)` with `K̃`.
    pub a: f64,
    /// Set when that function never drops to `K̃` and `a` falls back to `R + 1`.
    pub a_fallback: bool,
    pub k1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichOutcome {
    pub holds: bool,
    pub first_violation: Option<(usize, Envelope)>,
    /// `min_i (u_i - lower_i)`.
    pub lower_margin: f64,
    /// `min_i (upper_i - u_i)`.
    pub upper_margin: f64,
    /// Whether `λ > C_*`.
    pub above_c_star: bool,
    pub constants: SandwichConstants,
}

/// `max { t^(-δ) + t^q : r ≤ t ≤ R + 1 }`.
pub fn k2_constant(spec: &ProblemSpec, r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0 && big_r + 1.0 >= r) {
        return Err(Error::Domain {
            what: "K₂ interval lower end",
            value: r,
        });
    }
    let f = |t: f64| t.powf(-spec.delta) + t.powf(spec.q);
    let hi = big_r + 1.0;
    let mut best = f(r).max(f(hi));
    // the only critical point, (δ/q)^(1/(q+δ)), is a minimum
    let tc = (spec.delta / spec.q).powf(1.0 / (spec.q + spec.delta));
    if tc > r && tc < hi {
        best = best.max(f(tc));
    }
    Ok(best)
}

pub fn sandwich_constants(
    spec: &ProblemSpec,
    lambda1: f64,
    sup_phi1: f64,
    sup_ep: f64,
    annulus: Annulus,
    r: f64,
) -> Result<SandwichConstants> {
    let Annulus { varrho, big_r } = annulus;
    if !(varrho > 0.0 && big_r >= varrho) {
        return Err(Error::InvalidOptions(format!(
            "annulus must satisfy 0 < ϱ ≤ R, got ({varrho}, {big_r})"
        )));
    }
    let p = spec.p;
    let k2 = k2_constant(spec, r, big_r)?;
    let k2_quarter = k2_constant(spec, varrho / 4.0, big_r)?;
    let c_star = ((varrho / (4.0 * sup_ep)).powf(p - 1.0) / k2_quarter).min(varrho / 4.0);
    let k_tilde = 2.0 * big_r.max(lambda1 / c_star);

    let g_one = spec.with_eps(1.0)?;
    let g = |t: f64| g_eps(t, &g_one).unwrap_or(f64::INFINITY);
    let gmin = g_eps_minimizer(&g_one)?;
    let (a, a_fallback) = if gmin.g_min >= k_tilde {
        (big_r + 1.0, true)
    } else {
        // g is decreasing on (0, t_min) and blows up at 0
        let mut lo = gmin.t_min;
        while g(lo) < k_tilde {
            lo *= 0.5;
        }
        let mut hi = gmin.t_min;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) >= k_tilde {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, false)
    };
    let k1 = a / (2.0 * k_tilde.powf(1.0 / (p - 1.0)) * sup_phi1);
    Ok(SandwichConstants {
        r,
        k2,
        c_star,
        k_tilde,
        a,
        a_fallback,
        k1,
    })
}

/// Checks both envelopes node by node.
#[allow(clippy::too_many_arguments)]
pub fn sandwich_check(
    u: &GridFunction,
    lambda: f64,
    spec: &ProblemSpec,
    phi1: &GridFunction,
    lambda1: f64,
    e_p: &GridFunction,
    annulus: Annulus,
    r: f64,
) -> Result<SandwichOutcome> {
    let c = sandwich_constants(spec, lambda1, phi1.sup_norm(), e_p.sup_norm(), annulus, r)?;
    let root = 1.0 / (spec.p - 1.0);
    let scale = lambda.powf(root);
    let upper_coef = scale * c.k2.powf(root);
    let mut out = SandwichOutcome {
        holds: true,
        first_violation: None,
        lower_margin: f64::INFINITY,
        upper_margin: f64::INFINITY,
        above_c_star: lambda > c.c_star,
        constants: c,
    };
    for i in 0..u.len() {
        let ui = u.values[i];
        let lower = scale * c.k1 * phi1.values[i];
        let upper = r + upper_coef * e_p.values[i];
        let tol = 1e-12 * ui.abs().max(1.0);
        out.lower_margin = out.lower_margin.min(ui - lower);
        out.upper_margin = out.upper_margin.min(upper - ui);
        let violation = if ui < lower - tol {
            Some(Envelope::Lower)
        } else if ui > upper + tol {
            Some(Envelope::Upper)
        } else {
            None
        };
        if let (Some(v), None) = (violation, out.first_violation) {
            out.first_violation = Some((i, v));
            out.holds = false;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Mesh1D;
    use crate::solvers::{monotone_iteration_minimal, torsion_solution, SolveOptions};
    use std::sync::Arc;

    #[test]
    fn k2_is_endpoint_max() {
        let spec = ProblemSpec::new(2.0, 3.0, 1.0).unwrap();
        let k = k2_constant(&spec, 0.5, 1.0).unwrap();
        assert!((k - 8.5).abs() < 1e-12);
        let k = k2_constant(&spec, 0.01, 0.1).unwrap();
        assert!((k - 100.000001).abs() < 1e-9);
    }

    #[test]
    fn envelope_holds_for_minimal_solution_and_fails_when_inflated() {
        let spec = ProblemSpec::new(2.0, 3.0, 0.5).unwrap();
        let mesh = Arc::new(Mesh1D::graded(200, 1.0, 2.0).unwrap());
        let pi = std::f64::consts::PI;
        let phi = GridFunction::from_fn(mesh.clone(), |x| (pi * x).sin());
        let e = torsion_solution(&mesh, 2.0).unwrap();
        let lambda = 2.0;
        let u = monotone_iteration_minimal(&mesh, lambda, &spec, &SolveOptions::default())
            .unwrap()
            .solution;
        let norm = lambda.max(u.sup_norm());
        let ann = Annulus {
            varrho: 0.9 * norm,
            big_r: 1.1 * norm,
        };
        let r = ann.varrho / 4.0;
        let out = sandwich_check(&u, lambda, &spec, &phi, pi * pi, &e, ann, r).unwrap();
        assert!(out.holds, "{out:?}");
        assert!(out.above_c_star);
        let big = u.scaled(1e3);
        let out = sandwich_check(&big, lambda, &spec, &phi, pi * pi, &e, ann, r).unwrap();
        assert!(!out.holds);
        assert!(matches!(out.first_violation, Some((_, Envelope::Upper))));
    }
}
