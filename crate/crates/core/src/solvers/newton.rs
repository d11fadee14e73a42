use serde::{Deserialize, Serialize};

use crate::discretization::{residual_measure, weak_jacobian, weak_residual, Mesh1D, PLaplacian, Source};
use crate::error::{Error, Result};

/// Smallest admissible value of `u + ε` during damped steps.
pub const POSITIVITY_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Bound on `‖r‖∞ / (1 + max|flux|)` for the weak residual `r`.
    pub tol_residual: f64,
    pub max_newton: usize,
    /// Backtracking factor applied to the step length.
    pub damping: f64,
    /// Sup-norm increment that stops the monotone iteration.
    pub tol_fixedpoint: f64,
    pub max_outer: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_newton: 50,
            damping: 0.5,
            tol_fixedpoint: 1e-8,
            max_outer: 500,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidOptions(m.to_string()));
        if !(self.tol_residual > 0.0 && self.tol_residual.is_finite()) {
            return bad("tol_residual must be positive");
        }
        if !(self.tol_fixedpoint > 0.0 && self.tol_fixedpoint.is_finite()) {
            return bad("tol_fixedpoint must be positive");
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad("damping must lie in (0, 1)");
        }
        if self.max_newton == 0 || self.max_outer == 0 {
            return bad("iteration caps must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual: f64,
    pub damping: f64,
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub trace: Vec<NewtonStep>,
}

fn norm2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn min_shifted(u: &[f64], shift: f64) -> (usize, f64) {
    u.iter()
        .enumerate()
        .map(|(i, &v)| (i, v + shift))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

/// Damped Newton on the weak system `A(u) = V s(u)`.
///
/// Steps are shortened so every node keeps at least half of its current
/// `u + ε` when the source carries a positivity constraint, then halved
/// until the residual 2-norm decreases. After convergence one more full
/// step is taken if it lowers the residual.
pub fn newton<S: Source + ?Sized>(
    op: &PLaplacian,
    mesh: &Mesh1D,
    u0: &[f64],
    source: &S,
    opts: &SolveOptions,
) -> Result<NewtonReport> {
    opts.validate()?;
    let shift = source.positivity_shift();
    if let Some(sig) = shift {
        let (node, m) = min_shifted(u0, sig);
        if !(m > 0.0) {
            return Err(Error::PositivityLoss { node, min_value: m });
        }
    }
    let mut u = u0.to_vec();
    let (mut r, mut scale) = weak_residual(op, mesh, &u, source)?;
    let mut meas = residual_measure(&r, scale);
    let mut trace = vec![NewtonStep {
        iteration: 0,
        residual: meas,
        damping: 0.0,
    }];
    let mut converged = meas <= opts.tol_residual;
    let mut it = 0;
    let mut polished = false;

    while !polished {
        if converged {
            // one polishing step, kept only if it helps
            polished = true;
        } else if it >= opts.max_newton {
            return Err(Error::NoConvergence {
                solver: "newton",
                iterations: it,
                residual: meas,
            });
        }
        let jac = weak_jacobian(op, mesh, &u, source)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let Some(du) = jac.solve(&rhs) else {
            if converged {
                break;
            }
            return Err(Error::NoConvergence {
                solver: "newton",
                iterations: it,
                residual: meas,
            });
        };
        let mut alpha: f64 = 1.0;
        if let Some(sig) = shift {
            for (ui, di) in u.iter().zip(&du) {
                if *di < 0.0 {
                    alpha = alpha.min(0.5 * (ui + sig) / -di);
                }
            }
        }
        let merit = norm2(&r);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + alpha * d).collect();
            let ok_positive = match shift {
                Some(sig) => min_shifted(&trial, sig).1 > POSITIVITY_FLOOR,
                None => true,
            };
            if ok_positive {
                if let Ok((rt, st)) = weak_residual(op, mesh, &trial, source) {
                    let mt = norm2(&rt);
                    let enough = if converged {
                        mt < merit
                    } else {
                        mt <= (1.0 - 1e-4 * alpha) * merit
                    };
                    if enough && mt.is_finite() {
                        accepted = Some((trial, rt, st));
                        break;
                    }
                }
            }
            if converged {
                break;
            }
            alpha *= opts.damping;
        }
        match accepted {
            Some((trial, rt, st)) => {
                u = trial;
                r = rt;
                scale = st;
                meas = residual_measure(&r, scale);
                it += 1;
                trace.push(NewtonStep {
                    iteration: it,
                    residual: meas,
                    damping: alpha,
                });
                converged = converged || meas <= opts.tol_residual;
            }
            None if converged => break,
            None => {
                if let Some(sig) = shift {
                    let (node, m) = min_shifted(&u, sig);
                    if m <= 2.0 * POSITIVITY_FLOOR {
                        return Err(Error::PositivityLoss { node, min_value: m });
                    }
                }
                return Err(Error::NoConvergence {
                    solver: "newton",
                    iterations: it,
                    residual: meas,
                });
            }
        }
    }
    Ok(NewtonReport {
        values: u,
        iterations: it,
        residual: meas,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{FixedRhs, Reaction};
    use crate::problem::ProblemSpec;

    #[test]
    fn options_validation() {
        assert!(SolveOptions::default().validate().is_ok());
        let bad = SolveOptions {
            tol_residual: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolveOptions {
            max_newton: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn linear_problem_in_one_step() {
        let mesh = Mesh1D::uniform(50, 1.0).unwrap();
        let op = PLaplacian::new(2.0);
        let rep = newton(&op, &mesh, &vec![0.0; 50], &FixedRhs(vec![1.0; 50]), &SolveOptions::default()).unwrap();
        assert!(rep.iterations <= 2);
        assert!(rep.residual < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_start() {
        let spec = ProblemSpec::default();
        let mesh = Mesh1D::uniform(5, 1.0).unwrap();
        let op = PLaplacian::new(2.0);
        let err = newton(&op, &mesh, &[0.1, 0.0, 0.1, 0.1, 0.1], &Reaction::new(&spec, 1.0), &SolveOptions::default());
        assert!(matches!(err, Err(Error::PositivityLoss { node: 1, .. })));
    }
}
