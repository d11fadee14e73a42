use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use super::mesh::Mesh1D;
use super::source::{Reaction, Source};
use crate::error::Result;
use crate::linalg::Tridiagonal;
use crate::problem::ProblemSpec;

pub const DEFAULT_ETA: f64 = 1e-8;

/// Conservative 1D p-Laplacian with flux `φ_η(s) = (s² + η²)^((p-2)/2) s`.
///
/// "Weak" quantities are the flux balances over control volumes,
/// `F_{i-1/2} - F_{i+1/2}`; the strong form divides row `i` by the volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLaplacian {
    pub p: f64,
    pub eta: f64,
}

impl PLaplacian {
    pub fn new(p: f64) -> Self {
        Self { p, eta: DEFAULT_ETA }
    }

    /// Unregularized flux `|s|^(p-2) s`.
    pub fn pure(p: f64) -> Self {
        Self { p, eta: 0.0 }
    }

    pub fn flux(&self, s: f64) -> f64 {
        if self.p == 2.0 {
            return s;
        }
        if self.eta == 0.0 {
            return s.abs().powf(self.p - 1.0).copysign(s);
        }
        (s * s + self.eta * self.eta).powf(0.5 * (self.p - 2.0)) * s
    }

    pub fn flux_derivative(&self, s: f64) -> f64 {
        if self.p == 2.0 {
            return 1.0;
        }
        let e2 = self.eta * self.eta;
        let s2 = s * s;
        if e2 == 0.0 {
            return (self.p - 1.0) * s.abs().powf(self.p - 2.0);
        }
        (s2 + e2).powf(0.5 * (self.p - 4.0)) * ((self.p - 1.0) * s2 + e2)
    }

    /// Inverse of the unregularized flux.
    pub fn inverse_flux(&self, f: f64) -> f64 {
        f.abs().powf(1.0 / (self.p - 1.0)).copysign(f)
    }

    /// Difference quotients `(u_{j+1} - u_j) / h_{j+1/2}` on all `N + 1`
    /// intervals, with zero boundary values.
    pub fn slopes(mesh: &Mesh1D, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let h = mesh.intervals();
        (0..=n)
            .map(|j| {
                let left = if j == 0 { 0.0 } else { u[j - 1] };
                let right = if j == n { 0.0 } else { u[j] };
                (right - left) / h[j]
            })
            .collect()
    }

    pub fn fluxes(&self, mesh: &Mesh1D, u: &[f64]) -> Vec<f64> {
        Self::slopes(mesh, u).into_iter().map(|s| self.flux(s)).collect()
    }

    /// Weak operator: `F_{i-1/2} - F_{i+1/2}`.
    pub fn apply_weak(&self, mesh: &Mesh1D, u: &[f64]) -> Vec<f64> {
        let f = self.fluxes(mesh, u);
        f.windows(2).map(|w| w[0] - w[1]).collect()
    }

    pub fn apply(&self, mesh: &Mesh1D, u: &[f64]) -> Vec<f64> {
        let mut a = self.apply_weak(mesh, u);
        for (ai, v) in a.iter_mut().zip(mesh.volumes()) {
            *ai /= v;
        }
        a
    }

    /// Jacobian of [`apply_weak`](Self::apply_weak).
    pub fn jacobian_weak(&self, mesh: &Mesh1D, u: &[f64]) -> Tridiagonal {
        let n = u.len();
        let h = mesh.intervals();
        let c: Vec<f64> = Self::slopes(mesh, u)
            .iter()
            .zip(h)
            .map(|(&s, &hj)| self.flux_derivative(s) / hj)
            .collect();
        let mut t = Tridiagonal::zeros(n);
        for i in 0..n {
            t.diag[i] = c[i] + c[i + 1];
            t.lower[i] = -c[i];
            t.upper[i] = -c[i + 1];
        }
        t
    }

    /// `Σ_j |s_j|^p h_{j+1/2}`, the discrete `∫|u'|^p` (pure flux).
    pub fn energy(&self, mesh: &Mesh1D, u: &[f64]) -> f64 {
        Self::slopes(mesh, u)
            .iter()
            .zip(mesh.intervals())
            .map(|(s, h)| s.abs().powf(self.p) * h)
            .sum()
    }
}

/// Weak residual `F_{i-1/2} - F_{i+1/2} - V_i s_i(u_i)` together with the
/// largest flux magnitude, which sets the scale for convergence tests.
pub fn weak_residual<S: Source + ?Sized>(
    op: &PLaplacian,
    mesh: &Mesh1D,
    u: &[f64],
    source: &S,
) -> Result<(Vec<f64>, f64)> {
    let f = op.fluxes(mesh, u);
    let scale = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut r = Vec::with_capacity(u.len());
    for (i, (&ui, &vi)) in u.iter().zip(mesh.volumes()).enumerate() {
        let (s, _) = source.eval(i, ui)?;
        r.push(f[i] - f[i + 1] - vi * s);
    }
    Ok((r, scale))
}

pub fn weak_jacobian<S: Source + ?Sized>(
    op: &PLaplacian,
    mesh: &Mesh1D,
    u: &[f64],
    source: &S,
) -> Result<Tridiagonal> {
    let mut t = op.jacobian_weak(mesh, u);
    for (i, (&ui, &vi)) in u.iter().zip(mesh.volumes()).enumerate() {
        let (_, ds) = source.eval(i, ui)?;
        t.diag[i] -= vi * ds;
    }
    Ok(t)
}

/// Scale-free size of a weak residual: `‖r‖∞ / (1 + max|F|)`.
pub fn residual_measure(r: &[f64], flux_scale: f64) -> f64 {
    r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / (1.0 + flux_scale)
}

/// `-Δ_p u` at the interior nodes with the default flux regularization.
pub fn p_laplacian_apply(u: &GridFunction, p: f64) -> Vec<f64> {
    PLaplacian::new(p).apply(&u.mesh, &u.values)
}

/// Strong residual `-Δ_p u - λ[(u+ε)^(-δ) + f_n(u)]`.
pub fn assemble_residual(u: &GridFunction, lambda: f64, spec: &ProblemSpec) -> Result<Vec<f64>> {
    let op = PLaplacian::new(spec.p);
    let (mut r, _) = weak_residual(&op, &u.mesh, &u.values, &Reaction::new(spec, lambda))?;
    for (ri, v) in r.iter_mut().zip(u.mesh.volumes()) {
        *ri /= v;
    }
    Ok(r)
}

/// Exact derivative of [`assemble_residual`] with respect to the nodal values.
pub fn assemble_jacobian(u: &GridFunction, lambda: f64, spec: &ProblemSpec) -> Result<Tridiagonal> {
    let op = PLaplacian::new(spec.p);
    let mut t = weak_jacobian(&op, &u.mesh, &u.values, &Reaction::new(spec, lambda))?;
    let inv: Vec<f64> = u.mesh.volumes().iter().map(|v| 1.0 / v).collect();
    t.scale_rows(&inv);
    Ok(t)
}

/// Solves `-Δ_p u = f` exactly for the unregularized operator by integrating
/// the flux balance from the left endpoint and bisecting on the boundary
/// flux so that `u` vanishes at `x = L`.
pub fn integrate_flux(mesh: &Mesh1D, p: f64, f: &[f64]) -> Vec<f64> {
    let op = PLaplacian::pure(p);
    let n = f.len();
    let h = mesh.intervals();
    // F_{j+1/2} = F_{1/2} - c_j with c_0 = 0
    let mut c = vec![0.0; n + 1];
    for i in 0..n {
        c[i + 1] = c[i] + mesh.volumes()[i] * f[i];
    }
    let end_value = |f0: f64| -> f64 {
        c.iter()
            .zip(h)
            .map(|(&cj, &hj)| op.inverse_flux(f0 - cj) * hj)
            .sum()
    };
    let mut lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if end_value(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let f0 = 0.5 * (lo + hi);
    let mut u = Vec::with_capacity(n);
    let mut acc = 0.0;
    for j in 0..n {
        acc += op.inverse_flux(f0 - c[j]) * h[j];
        u.push(acc);
    }
    // the sweep accumulates drift toward x = L; remove it linearly in x
    let drift = acc + op.inverse_flux(f0 - c[n]) * h[n];
    let length = mesh.length();
    for (ui, x) in u.iter_mut().zip(mesh.interior_nodes()) {
        *ui -= drift * x / length;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Truncation;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn torsion_closed_form(p: f64, length: f64, x: f64) -> f64 {
        let e = p / (p - 1.0);
        (p - 1.0) / p * ((0.5 * length).powf(e) - (x - 0.5 * length).abs().powf(e))
    }

    #[test]
    fn second_difference_for_p2() {
        let mesh = Arc::new(Mesh1D::uniform(9, 1.0).unwrap());
        let h = mesh.spacing();
        let u = GridFunction::from_fn(mesh.clone(), |x| x * x);
        let a = p_laplacian_apply(&u, 2.0);
        // interior rows of -u'' for x² are -2; the last row sees u(1) = 0
        for ai in &a[..8] {
            assert_relative_eq!(*ai, -2.0, max_relative = 1e-10);
        }
        let j = assemble_jacobian(&u, 0.0, &ProblemSpec::default()).unwrap();
        for i in 1..9 {
            assert_relative_eq!(j.lower[i], -1.0 / (h * h), max_relative = 1e-12);
            assert_relative_eq!(j.upper[i - 1], -1.0 / (h * h), max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_torsion_gives_unit_operator() {
        for &p in &[1.5, 2.0, 3.0] {
            let mesh = Arc::new(Mesh1D::uniform(399, 1.0).unwrap());
            let e = GridFunction::from_fn(mesh, |x| torsion_closed_form(p, 1.0, x));
            let a = p_laplacian_apply(&e, p);
            // away from the kink at the centre the truncation error is small
            for (ai, x) in a.iter().zip(e.mesh.interior_nodes()) {
                if (x - 0.5).abs() > 0.05 {
                    assert!((ai - 1.0).abs() < 2e-3, "p={p} x={x} a={ai}");
                }
            }
        }
    }

    #[test]
    fn reaction_part_is_linear_in_lambda() {
        let spec = ProblemSpec::new(2.0, 3.0, 0.5).unwrap();
        let mesh = Arc::new(Mesh1D::uniform(20, 1.0).unwrap());
        let u = GridFunction::from_fn(mesh, |x| x * (1.0 - x) + 0.1);
        let r1 = assemble_residual(&u, 1.5, &spec).unwrap();
        let r2 = assemble_residual(&u, 3.0, &spec).unwrap();
        for ((a, b), &ui) in r1.iter().zip(&r2).zip(&u.values) {
            let reaction = ui.powf(-0.5) + ui.powi(3);
            assert_relative_eq!(b - a, -1.5 * reaction, max_relative = 1e-10);
        }
    }

    #[test]
    fn symmetric_for_p2() {
        let spec = ProblemSpec::new(2.0, 3.0, 1.0).unwrap().with_eps(0.1).unwrap();
        let mesh = Arc::new(Mesh1D::graded(30, 1.0, 2.0).unwrap());
        let u = GridFunction::from_fn(mesh.clone(), |x| (std::f64::consts::PI * x).sin());
        // the weak form is the symmetric one
        let j = weak_jacobian(
            &PLaplacian::new(2.0),
            &mesh,
            &u.values,
            &Reaction::new(&spec, 2.0),
        )
        .unwrap();
        for i in 1..30 {
            assert_relative_eq!(j.lower[i], j.upper[i - 1], max_relative = 1e-14);
        }
    }

    #[test]
    fn domain_error_at_zero() {
        let spec = ProblemSpec::default();
        let mesh = Arc::new(Mesh1D::uniform(5, 1.0).unwrap());
        let u = GridFunction::new(mesh, vec![0.1, 0.2, 0.0, 0.2, 0.1]).unwrap();
        assert!(assemble_residual(&u, 1.0, &spec).is_err());
    }

    #[test]
    fn truncated_jacobian_above_level() {
        let spec = ProblemSpec::new(2.0, 3.0, 1.0)
            .unwrap()
            .with_eps(0.1)
            .unwrap()
            .with_truncation(Truncation::Finite(2))
            .unwrap();
        let mesh = Arc::new(Mesh1D::uniform(3, 1.0).unwrap());
        let u = GridFunction::new(mesh.clone(), vec![1.0, 3.0, 1.0]).unwrap();
        let j = assemble_jacobian(&u, 1.0, &spec).unwrap();
        let op = PLaplacian::new(2.0).jacobian_weak(&mesh, &u.values);
        let v = mesh.volumes()[1];
        // f_n'(3) = n^(q-p+1) (p-1) u^(p-2) = 4
        let singular = -1.0 * (3.1f64).powf(-2.0);
        assert_relative_eq!(j.diag[1], op.diag[1] / v - (singular + 4.0), max_relative = 1e-12);
    }

    #[test]
    fn integrate_flux_reproduces_torsion() {
        for &p in &[1.5, 2.0, 3.0] {
            let mesh = Mesh1D::graded(101, 1.0, 2.0).unwrap();
            let u = integrate_flux(&mesh, p, &vec![1.0; 101]);
            let a = PLaplacian::pure(p).apply(&mesh, &u);
            for ai in &a {
                assert!((ai - 1.0).abs() < 1e-9, "p={p} {ai}");
            }
        }
        // p = 2 torsion is nodally exact
        let mesh = Mesh1D::graded(50, 1.0, 2.0).unwrap();
        let u = integrate_flux(&mesh, 2.0, &vec![1.0; 50]);
        for (ui, &x) in u.iter().zip(mesh.interior_nodes()) {
            assert_relative_eq!(*ui, 0.5 * x * (1.0 - x), max_relative = 1e-10);
        }
    }

    fn fd_check(p: f64, q: f64, delta: f64, eps: f64, seed: u64) -> f64 {
        let spec = ProblemSpec::new(p, q, delta).unwrap().with_eps(eps).unwrap();
        let mesh = Arc::new(Mesh1D::graded(40, 1.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = GridFunction::from_fn(mesh.clone(), |x| {
            (x * (1.0 - x)).powf(0.7) * (1.0 + 0.5 * rng.random::<f64>())
        });
        let dir: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lambda = 1.3;
        let jac = assemble_jacobian(&u, lambda, &spec).unwrap();
        // fourth-order central differences, step relative to each node so
        // the perturbed state stays positive; slopes move by at most 1% so
        // the stencil stays clear of the flux singularity at zero slope
        let scaled_dir: Vec<f64> = u.values.iter().zip(&dir).map(|(ui, di)| ui * di).collect();
        let s0 = PLaplacian::slopes(&mesh, &u.values);
        let ds = PLaplacian::slopes(&mesh, &scaled_dir);
        let t = s0
            .iter()
            .zip(&ds)
            .map(|(a, b)| 0.01 * a.abs() / b.abs().max(1e-300))
            .fold(1e-4, f64::min);
        let shift = |sign: f64| {
            let vals = u
                .values
                .iter()
                .zip(&scaled_dir)
                .map(|(ui, di)| ui + sign * t * di)
                .collect();
            u.with_values(vals)
        };
        let r = |k: f64| assemble_residual(&shift(k), lambda, &spec).unwrap();
        let (rp, rm, rp2, rm2) = (r(1.0), r(-1.0), r(2.0), r(-2.0));
        let jd = jac.mul_vec(&scaled_dir);
        let floor = 1e-6 * jd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut worst: f64 = 0.0;
        for i in 0..40 {
            let fd = (8.0 * (rp[i] - rm[i]) - (rp2[i] - rm2[i])) / (12.0 * t);
            worst = worst.max((fd - jd[i]).abs() / jd[i].abs().max(floor));
        }
        worst
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for &p in &[1.5, 2.0, 3.0] {
            for &delta in &[0.5, 1.0, 2.0] {
                let worst = fd_check(p, p + 1.0, delta, 0.0, 7);
                assert!(worst < 1e-5, "p={p} δ={delta}: {worst:e}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn jacobian_fd_randomized(seed in 0u64..1000, pi in 0usize..3, di in 0usize..3, eps in 0.0f64..0.2) {
            let p = [1.5, 2.0, 3.0][pi];
            let delta = [0.5, 1.0, 2.0][di];
            prop_assert!(fd_check(p, p + 0.5, delta, eps, seed) < 1e-5);
        }
    }
}
