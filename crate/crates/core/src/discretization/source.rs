use crate::error::Result;
use crate::problem::{
    singular_term, singular_term_derivative, truncated_power, truncated_power_derivative,
    ProblemSpec,
};

/// Right-hand side `s_i(u_i)` of `-Δ_p u = s(u)`, node by node.
pub trait Source {
    /// Value and derivative with respect to `u` at node `i`.
    fn eval(&self, i: usize, u: f64) -> Result<(f64, f64)>;

    /// Iterates must keep `u + shift > 0`; `None` means no constraint.
    fn positivity_shift(&self) -> Option<f64> {
        None
    }
}

/// Full reaction `λ[(u+ε)^(-δ) + f_n(u)]`.
#[derive(Clone, Copy, Debug)]
pub struct Reaction<'a> {
    pub spec: &'a ProblemSpec,
    pub lambda: f64,
}

impl<'a> Reaction<'a> {
    pub fn new(spec: &'a ProblemSpec, lambda: f64) -> Self {
        Self { spec, lambda }
    }

    /// `(u+ε)^(-δ) + f_n(u)`, i.e. `∂s/∂λ`.
    pub fn unscaled(&self, u: f64) -> Result<f64> {
        Ok(singular_term(u, self.spec)? + truncated_power(u, self.spec))
    }
}

impl Source for Reaction<'_> {
    fn eval(&self, _i: usize, u: f64) -> Result<(f64, f64)> {
        let v = singular_term(u, self.spec)? + truncated_power(u, self.spec);
        let d = singular_term_derivative(u, self.spec)? + truncated_power_derivative(u, self.spec);
        Ok((self.lambda * v, self.lambda * d))
    }

    fn positivity_shift(&self) -> Option<f64> {
        Some(self.spec.eps)
    }
}

/// Singular part only: `λ(u+ε)^(-δ)`.
#[derive(Clone, Copy, Debug)]
pub struct SingularOnly<'a> {
    pub spec: &'a ProblemSpec,
    pub lambda: f64,
}

impl Source for SingularOnly<'_> {
    fn eval(&self, _i: usize, u: f64) -> Result<(f64, f64)> {
        Ok((
            self.lambda * singular_term(u, self.spec)?,
            self.lambda * singular_term_derivative(u, self.spec)?,
        ))
    }

    fn positivity_shift(&self) -> Option<f64> {
        Some(self.spec.eps)
    }
}

/// `λ(u+ε)^(-δ) + λ f_n(w)` with `w` held fixed.
#[derive(Clone, Debug)]
pub struct FrozenSource<'a> {
    pub spec: &'a ProblemSpec,
    pub lambda: f64,
    frozen: Vec<f64>,
}

impl<'a> FrozenSource<'a> {
    pub fn new(spec: &'a ProblemSpec, lambda: f64, previous: &[f64]) -> Self {
        let frozen = previous
            .iter()
            .map(|&w| lambda * truncated_power(w, spec))
            .collect();
        Self {
            spec,
            lambda,
            frozen,
        }
    }
}

impl Source for FrozenSource<'_> {
    fn eval(&self, i: usize, u: f64) -> Result<(f64, f64)> {
        Ok((
            self.lambda * singular_term(u, self.spec)? + self.frozen[i],
            self.lambda * singular_term_derivative(u, self.spec)?,
        ))
    }

    fn positivity_shift(&self) -> Option<f64> {
        Some(self.spec.eps)
    }
}

/// Prescribed nodal right-hand side.
#[derive(Clone, Debug)]
pub struct FixedRhs(pub Vec<f64>);

impl Source for FixedRhs {
    fn eval(&self, i: usize, _u: f64) -> Result<(f64, f64)> {
        Ok((self.0[i], 0.0))
    }
}
