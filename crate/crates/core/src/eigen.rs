//! First eigenpair of the 1D p-Laplacian by inverse power iteration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::{integrate_flux, GridFunction, Mesh1D, PLaplacian};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Normalized to `sup φ₁ = 1`.
    pub phi1: GridFunction,
    /// `sup |-Δ_p φ₁ - λ₁ φ₁^(p-1)|`.
    pub residual: f64,
    pub iterations: usize,
    /// Rayleigh quotient after each iteration.
    pub history: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1000,
        }
    }
}

/// `Σ |Δu/h|^p h / Σ |u_i|^p V_i`.
pub fn rayleigh_quotient(u: &GridFunction, p: f64) -> Result<f64> {
    let den: f64 = u
        .values
        .iter()
        .zip(u.mesh.volumes())
        .map(|(v, w)| v.abs().powf(p) * w)
        .sum();
    if den == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(PLaplacian::pure(p).energy(&u.mesh, &u.values) / den)
}

pub fn first_eigenpair(mesh: &Arc<Mesh1D>, p: f64) -> Result<EigenResult> {
    first_eigenpair_with(mesh, p, &EigenOptions::default())
}

/// Iterates `v ← w / sup w` with `-Δ_p w = v^(p-1)`. Each inner problem has
/// a fixed right-hand side and is solved exactly by flux integration.
/// Stops once both the Rayleigh quotient and the iterate have settled.
pub fn first_eigenpair_with(mesh: &Arc<Mesh1D>, p: f64, opts: &EigenOptions) -> Result<EigenResult> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidSpec(format!("p must exceed 1, got {p}")));
    }
    let n = mesh.num_interior();
    let mut v = integrate_flux(mesh, p, &vec![1.0; n]);
    normalize(&mut v);
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let rhs: Vec<f64> = v.iter().map(|x| x.abs().powf(p - 1.0)).collect();
        let mut w = integrate_flux(mesh, p, &rhs);
        normalize(&mut w);
        let change = w.iter().zip(&v).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        v = w;
        let rq = rayleigh_quotient(
            &GridFunction {
                mesh: Arc::clone(mesh),
                values: v.clone(),
            },
            p,
        )?;
        history.push(rq);
        if ((rq - prev) / rq).abs() < opts.tol && change < opts.tol {
            let phi1 = GridFunction::new(Arc::clone(mesh), v)?;
            let residual = eigen_residual(&phi1, rq, p);
            return Ok(EigenResult {
                lambda1: rq,
                phi1,
                residual,
                iterations: it,
                history,
            });
        }
        prev = rq;
    }
    Err(Error::NoConvergence {
        solver: "inverse power iteration",
        iterations: opts.max_iter,
        residual: history
            .windows(2)
            .last()
            .map_or(f64::NAN, |w| (w[1] - w[0]).abs()),
    })
}

fn normalize(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for x in v.iter_mut() {
        *x /= m;
    }
}

/// `sup |-Δ_p u - λ u^(p-1)|` with the unregularized flux.
pub fn eigen_residual(u: &GridFunction, lambda: f64, p: f64) -> f64 {
    PLaplacian::pure(p)
        .apply(&u.mesh, &u.values)
        .iter()
        .zip(&u.values)
        .map(|(a, v)| (a - lambda * v.abs().powf(p - 1.0)).abs())
        .fold(0.0, f64::max)
}

/// `λ₁` on `(0, L)` from the generalized sine: `(p-1)(π_p / L)^p` with
/// `π_p = 2π / (p sin(π/p))`.
pub fn lambda1_closed_form(p: f64, length: f64) -> f64 {
    let pi_p = 2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin());
    (p - 1.0) * (pi_p / length).powf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Shooting oracle: integrate `u' = |w|^(1/(p-1)) sgn w`,
    /// `w' = -λ|u|^(p-2)u` from `(0, 1)` and bisect on λ so that the flux
    /// `w` vanishes at `L/2`.
    fn shooting_lambda1(p: f64, length: f64) -> f64 {
        let rhs = |lambda: f64, y: [f64; 2]| -> [f64; 2] {
            let [u, w] = y;
            [
                w.abs().powf(1.0 / (p - 1.0)).copysign(w),
                -lambda * u.abs().powf(p - 1.0).copysign(u),
            ]
        };
        let flux_at_mid = |lambda: f64| -> f64 {
            let steps = 20_000;
            let h = 0.5 * length / steps as f64;
            let mut y = [0.0, 1.0];
            for _ in 0..steps {
                let k1 = rhs(lambda, y);
                let k2 = rhs(lambda, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
                let k3 = rhs(lambda, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
                let k4 = rhs(lambda, [y[0] + h * k3[0], y[1] + h * k3[1]]);
                for j in 0..2 {
                    y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
            y[1]
        };
        // flux at the midpoint decreases with λ
        let (mut lo, mut hi) = (1e-3, 1.0);
        while flux_at_mid(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if flux_at_mid(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn shooting_oracle_agrees_with_closed_form() {
        for &p in &[1.5, 2.0, 3.0] {
            assert_relative_eq!(shooting_lambda1(p, 1.0), lambda1_closed_form(p, 1.0), max_relative = 1e-6);
        }
        assert_relative_eq!(lambda1_closed_form(2.0, 1.0), std::f64::consts::PI.powi(2), max_relative = 1e-14);
    }

    #[test]
    fn p2_matches_pi_squared() {
        let mesh = Arc::new(Mesh1D::uniform(400, 1.0).unwrap());
        let e = first_eigenpair(&mesh, 2.0).unwrap();
        let pi = std::f64::consts::PI;
        assert!((e.lambda1 / (pi * pi) - 1.0).abs() < 1e-3);
        assert!(e.residual < 1e-8, "{}", e.residual);
        let shape = e
            .phi1
            .values
            .iter()
            .zip(mesh.interior_nodes())
            .map(|(v, x)| (v - (pi * x).sin()).abs())
            .fold(0.0, f64::max);
        assert!(shape < 1e-4);
    }

    #[test]
    fn p3_matches_shooting() {
        let mesh = Arc::new(Mesh1D::uniform(400, 1.0).unwrap());
        let e = first_eigenpair(&mesh, 3.0).unwrap();
        let oracle = shooting_lambda1(3.0, 1.0);
        assert!((e.lambda1 / oracle - 1.0).abs() < 5e-3, "{} vs {oracle}", e.lambda1);
        assert!((oracle - 28.294).abs() < 1e-2);
        assert!(e.residual < 1e-8, "{}", e.residual);
    }

    #[test]
    fn domain_scaling() {
        for &p in &[1.5, 2.0, 3.0] {
            let base = first_eigenpair(&Arc::new(Mesh1D::uniform(300, 1.0).unwrap()), p).unwrap().lambda1;
            for &l in &[0.5, 2.0] {
                let e = first_eigenpair(&Arc::new(Mesh1D::uniform(300, l).unwrap()), p).unwrap();
                assert!((e.lambda1 * l.powf(p) / base - 1.0).abs() < 2e-3);
            }
        }
    }

    #[test]
    fn symmetric_and_monotone_history() {
        let mesh = Arc::new(Mesh1D::graded(201, 1.0, 2.0).unwrap());
        for &p in &[1.5, 2.0, 3.0] {
            let e = first_eigenpair(&mesh, p).unwrap();
            for k in 0..201 {
                assert!((e.phi1.values[k] - e.phi1.values[mesh.mirror(k)]).abs() < 1e-6);
            }
            assert!(e.phi1.is_positive());
            assert_relative_eq!(e.phi1.sup_norm(), 1.0);
            for w in e.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0]);
            }
        }
    }

    #[test]
    fn hat_function_by_hand() {
        // N = 3, L = 1: slopes ±2 on four cells of width 1/4
        let mesh = Arc::new(Mesh1D::uniform(3, 1.0).unwrap());
        let hat = GridFunction::new(mesh, vec![0.5, 1.0, 0.5]).unwrap();
        // numerator 4·(2²·¼) = 4, denominator ¼·(¼ + 1 + ¼) = 3/8
        assert_relative_eq!(rayleigh_quotient(&hat, 2.0).unwrap(), 32.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(rayleigh_quotient(&hat.scaled(7.0), 2.0).unwrap(), 32.0 / 3.0, max_relative = 1e-14);
        let zero = hat.scaled(0.0);
        assert!(matches!(rayleigh_quotient(&zero, 2.0), Err(Error::ZeroFunction)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn quotient_bounded_below_by_lambda1(
            pi in 0usize..3,
            coeffs in proptest::collection::vec(0.0f64..1.0, 1..6),
            bump in 0.1f64..3.0,
        ) {
            let p = [1.5, 2.0, 3.0][pi];
            let mesh = Arc::new(Mesh1D::uniform(80, 1.0).unwrap());
            let l1 = first_eigenpair(&mesh, p).unwrap().lambda1;
            let v = GridFunction::from_fn(mesh, |x| {
                let base = (x * (1.0 - x)).powf(bump);
                let wiggle: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * (std::f64::consts::PI * (k + 1) as f64 * x).sin().abs())
                    .sum();
                base * (1.0 + wiggle)
            });
            prop_assert!(rayleigh_quotient(&v, p).unwrap() >= l1 * (1.0 - 1e-10));
        }
    }
}
