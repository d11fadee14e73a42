//! Scalar model of the regularized problem
//!
//! ```text
//! -Δp u = λ [ (u + ε)^-δ + f_n(u) ],   f_n(u) = min(u, n)^(q-p+1) u^(p-1)
//! ```
//!
//! together with the explicit constants that bound its solution set. Every
//! function here is a pure function of its arguments.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation level of the superlinear term. `Infinite` recovers `u^q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TruncationRepr", into = "TruncationRepr")]
pub enum Truncation {
    Finite(u32),
    Infinite,
}

impl Truncation {
    pub fn level(self) -> Option<f64> {
        match self {
            Truncation::Finite(n) => Some(f64::from(n)),
            Truncation::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Truncation::Finite(_))
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::Finite(n) => write!(f, "{n}"),
            Truncation::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TruncationRepr {
    Level(u32),
    Keyword(String),
}

impl TryFrom<TruncationRepr> for Truncation {
    type Error = String;

    fn try_from(repr: TruncationRepr) -> std::result::Result<Self, Self::Error> {
        match repr {
            TruncationRepr::Level(0) => Err("truncation level must be at least 1".into()),
            TruncationRepr::Level(n) => Ok(Truncation::Finite(n)),
            TruncationRepr::Keyword(s) if matches!(s.as_str(), "inf" | "infinity" | "none") => {
                Ok(Truncation::Infinite)
            }
            TruncationRepr::Keyword(s) => Err(format!(
                "truncation must be a positive integer or \"inf\", got {s:?}"
            )),
        }
    }
}

impl From<Truncation> for TruncationRepr {
    fn from(t: Truncation) -> Self {
        match t {
            Truncation::Finite(n) => TruncationRepr::Level(n),
            Truncation::Infinite => TruncationRepr::Keyword("inf".into()),
        }
    }
}

/// One instance of the problem family: exponents, regularization and
/// truncation, plus the interval length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "default_truncation")]
    pub n_trunc: Truncation,
    #[serde(default = "default_length")]
    pub domain_length: f64,
}

fn default_truncation() -> Truncation {
    Truncation::Infinite
}

fn default_length() -> f64 {
    1.0
}

impl Default for ProblemSpec {
    /// The reference instance `p = 2, q = 3, δ = 1/2, ε = 0` on `(0, 1)`.
    fn default() -> Self {
        Self {
            p: 2.0,
            q: 3.0,
            delta: 0.5,
            eps: 0.0,
            n_trunc: Truncation::Infinite,
            domain_length: 1.0,
        }
    }
}

impl ProblemSpec {
    pub fn new(p: f64, q: f64, delta: f64) -> Result<Self> {
        Self {
            p,
            q,
            delta,
            ..Self::default()
        }
        .validated()
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps = eps;
        self.validated()
    }

    pub fn with_truncation(mut self, n_trunc: Truncation) -> Result<Self> {
        self.n_trunc = n_trunc;
        self.validated()
    }

    pub fn with_length(mut self, length: f64) -> Result<Self> {
        self.domain_length = length;
        self.validated()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.p.is_finite() && self.p > 1.0) {
            return bad(format!("p must satisfy 1 < p < ∞, got {}", self.p));
        }
        if !(self.q.is_finite() && self.q > self.p - 1.0) {
            return bad(format!("q must exceed p - 1 = {}, got {}", self.p - 1.0, self.q));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return bad(format!("eps must be nonnegative, got {}", self.eps));
        }
        if let Truncation::Finite(0) = self.n_trunc {
            return bad("n_trunc must be at least 1".into());
        }
        if !(self.domain_length.is_finite() && self.domain_length > 0.0) {
            return bad(format!(
                "domain_length must be positive, got {}",
                self.domain_length
            ));
        }
        Ok(())
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// `q - p + 1`, the growth exponent of the superlinear term relative to
    /// the operator's homogeneity.
    pub fn superlinearity(&self) -> f64 {
        self.q - self.p + 1.0
    }

    /// Exponent of the small-λ scaling `ω_{λ,0} = λ^{1/(p-1+δ)} ω_{1,0}`.
    pub fn base_scaling_exponent(&self) -> f64 {
        1.0 / (self.p - 1.0 + self.delta)
    }
}

/// `(u + ε)^-δ`.
pub fn singular_term(u: f64, spec: &ProblemSpec) -> Result<f64> {
    let shifted = u + spec.eps;
    if !(shifted > 0.0) {
        return Err(Error::Domain {
            what: "u + eps",
            value: shifted,
        });
    }
    Ok(shifted.powf(-spec.delta))
}

/// Derivative of [`singular_term`] with respect to `u`.
pub fn singular_term_derivative(u: f64, spec: &ProblemSpec) -> Result<f64> {
    let shifted = u + spec.eps;
    if !(shifted > 0.0) {
        return Err(Error::Domain {
            what: "u + eps",
            value: shifted,
        });
    }
    Ok(-spec.delta * shifted.powf(-spec.delta - 1.0))
}

/// `f_n(u) = min(u, n)^(q-p+1) u^(p-1)`; `u^q` when untruncated.
///
/// Negative inputs are clamped to zero so the nonlinearity stays defined on
/// trial states that dip below the axis.
pub fn truncated_power(u: f64, spec: &ProblemSpec) -> f64 {
    let u = u.max(0.0);
    match spec.n_trunc.level() {
        Some(n) if u > n => n.powf(spec.superlinearity()) * u.powf(spec.p - 1.0),
        _ => u.powf(spec.q),
    }
}

/// Derivative of [`truncated_power`]; the left derivative is used at `u = n`.
pub fn truncated_power_derivative(u: f64, spec: &ProblemSpec) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    match spec.n_trunc.level() {
        Some(n) if u > n => {
            n.powf(spec.superlinearity()) * (spec.p - 1.0) * u.powf(spec.p - 2.0)
        }
        _ => spec.q * u.powf(spec.q - 1.0),
    }
}

/// `ζ = ((p - 1 + δ) / (q - p + 1))^(1/(q+δ))`.
pub fn zeta(spec: &ProblemSpec) -> f64 {
    ((spec.p - 1.0 + spec.delta) / spec.superlinearity()).powf(1.0 / (spec.q + spec.delta))
}

/// Upper bound `λ1 (ζ + 1)^δ ζ^(p-1)` on the extremal parameter.
pub fn lambda_star_upper_bound(spec: &ProblemSpec, lambda1: f64) -> f64 {
    let z = zeta(spec);
    lambda1 * (z + 1.0).powf(spec.delta) * z.powf(spec.p - 1.0)
}

/// `g_ε(t) = ((t + ε)^-δ + t^q) / t^(p-1)`.
pub fn g_eps(t: f64, spec: &ProblemSpec) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain {
            what: "t in g_eps",
            value: t,
        });
    }
    Ok(((t + spec.eps).powf(-spec.delta) + t.powf(spec.q)) / t.powf(spec.p - 1.0))
}

/// `h = g_ε'`, whose unique positive root is the minimizer of `g_ε`.
pub fn g_eps_derivative(t: f64, spec: &ProblemSpec) -> f64 {
    let (p, q, d, e) = (spec.p, spec.q, spec.delta, spec.eps);
    -d * (t + e).powf(-d - 1.0) * t.powf(1.0 - p)
        + (1.0 - p) * (t + e).powf(-d) * t.powf(-p)
        + (q - p + 1.0) * t.powf(q - p)
}

fn g_eps_second_derivative(t: f64, spec: &ProblemSpec) -> f64 {
    let (p, q, d, e) = (spec.p, spec.q, spec.delta, spec.eps);
    d * (d + 1.0) * (t + e).powf(-d - 2.0) * t.powf(1.0 - p)
        + 2.0 * d * (p - 1.0) * (t + e).powf(-d - 1.0) * t.powf(-p)
        + p * (p - 1.0) * (t + e).powf(-d) * t.powf(-p - 1.0)
        + (q - p + 1.0) * (q - p) * t.powf(q - p - 1.0)
}

/// Global minimum of [`g_eps`] on `(0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GMinimum {
    pub t_min: f64,
    pub g_min: f64,
    /// Whether `ζ - ε < t_min < ζ` holds (for `ε = 0`: `t_min = ζ` to
    /// root-find accuracy). The lower side can fail when `q(p-1+δ) < δ`.
    pub bracket_holds: bool,
}

const MINIMIZER_REL_TOL: f64 = 1e-12;
const MINIMIZER_MAX_BISECTIONS: usize = 400;

/// Locates the minimizer of `g_ε` by bisection on `h = g_ε'` over
/// `[10⁻³ ζ, 10³ ζ]`, followed by one Newton polish.
pub fn g_eps_minimizer(spec: &ProblemSpec) -> Result<GMinimum> {
    spec.validate()?;
    let z = zeta(spec);
    let (mut lo, mut hi) = (z * 1e-3, z * 1e3);
    if !(g_eps_derivative(lo, spec) < 0.0 && g_eps_derivative(hi, spec) > 0.0) {
        return Err(Error::NoConvergence {
            solver: "g_eps minimizer bracket",
            iterations: 0,
            residual: g_eps_derivative(lo, spec),
        });
    }
    let mut iterations = 0;
    while (hi - lo) > MINIMIZER_REL_TOL * hi {
        if iterations == MINIMIZER_MAX_BISECTIONS {
            return Err(Error::NoConvergence {
                solver: "g_eps minimizer",
                iterations,
                residual: g_eps_derivative(0.5 * (lo + hi), spec),
            });
        }
        let mid = 0.5 * (lo + hi);
        if g_eps_derivative(mid, spec) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mut t = 0.5 * (lo + hi);
    let curvature = g_eps_second_derivative(t, spec);
    if curvature > 0.0 {
        let polished = t - g_eps_derivative(t, spec) / curvature;
        if polished > lo * (1.0 - 1e-9)
            && polished < hi * (1.0 + 1e-9)
            && g_eps_derivative(polished, spec).abs() <= g_eps_derivative(t, spec).abs()
        {
            t = polished;
        }
    }
    let bracket_holds = if spec.eps == 0.0 {
        (t - z).abs() <= 1e-9 * z
    } else if spec.eps < z {
        z - spec.eps < t && t < z
    } else {
        t < z
    };
    Ok(GMinimum {
        t_min: t,
        g_min: g_eps(t, spec)?,
        bracket_holds,
    })
}

/// Lower bound `(ζ + 1)^-δ ζ^(1-p)` for `g_min` valid when `ε < 1`.
pub fn g_min_lower_bound(spec: &ProblemSpec) -> f64 {
    let z = zeta(spec);
    (z + 1.0).powf(-spec.delta) * z.powf(1.0 - spec.p)
}

/// Threshold `λ1 / g_min` above which no solution can exist.
pub fn nonexistence_threshold(spec: &ProblemSpec, lambda1: f64) -> Result<f64> {
    Ok(lambda1 / g_eps_minimizer(spec)?.g_min)
}

/// True iff `λ g_min > λ1`, i.e. the spectral comparison rules out any
/// positive solution at this `λ`.
pub fn nonexistence_certificate(lambda: f64, spec: &ProblemSpec, lambda1: f64) -> Result<bool> {
    Ok(lambda * g_eps_minimizer(spec)?.g_min > lambda1)
}

/// `ζ / 2`: radius of the sup-norm ball in which the solution is unique.
/// Only meaningful when `ε < ζ / 2`.
pub fn uniqueness_ball_radius(spec: &ProblemSpec) -> f64 {
    0.5 * zeta(spec)
}

/// Constants of the sub/supersolution construction near the bifurcation
/// point `λ1 / n^(q-p+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubSuperConstants {
    pub eps0: f64,
    pub n0: f64,
    pub m: f64,
}

/// `ε0 = 2^(-q/((q+δ)(p-1)) - 1)`,
/// `N0 = λ1^(1/(q-p+1)) (‖ω_{1,0}‖∞ / ε0)^((p-1+δ)/(q-p+1)) + 1`,
/// `M = 2^(1/(p-1))`.
pub fn subsuper_constants(spec: &ProblemSpec, omega10_sup: f64, lambda1: f64) -> SubSuperConstants {
    let (p, q, d) = (spec.p, spec.q, spec.delta);
    let s = spec.superlinearity();
    let eps0 = 2f64.powf(-q / ((q + d) * (p - 1.0)) - 1.0);
    let n0 = lambda1.powf(1.0 / s) * (omega10_sup / eps0).powf((p - 1.0 + d) / s) + 1.0;
    let m = 2f64.powf(1.0 / (p - 1.0));
    SubSuperConstants { eps0, n0, m }
}
