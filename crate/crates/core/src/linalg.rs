//! Tridiagonal and bordered-tridiagonal solves.
//!
//! Both use Gaussian elimination with partial pivoting between adjacent rows
//! (the pivoted factor gains one extra superdiagonal). The bordered variant
//! eliminates the dense last row alongside and solves the trailing 2×2 block
//! with pivoting, so a singular tridiagonal block at a fold is harmless as long
//! as the bordered matrix itself is regular.

use serde::{Deserialize, Serialize};

/// Tridiagonal matrix: row `i` holds `lower[i]` at column `i-1`, `diag[i]` at
/// `i`, and `upper[i]` at `i+1`. `lower[0]` and `upper[n-1]` are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Multiplies row `i` by `w[i]`.
    pub fn scale_rows(&mut self, w: &[f64]) {
        for (i, &wi) in w.iter().enumerate() {
            self.lower[i] *= wi;
            self.diag[i] *= wi;
            self.upper[i] *= wi;
        }
    }

    /// Solves `A x = rhs`. Returns `None` if a pivot vanishes.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        let zeros = vec![0.0; n];
        let mut full = rhs.to_vec();
        full.push(0.0);
        let mut x = solve_bordered(self, &zeros, &zeros, 1.0, &full)?;
        x.pop();
        Some(x)
    }
}

/// Working row during elimination: coefficients at columns `k, k+1, k+2`,
/// the border column, and the right-hand side.
#[derive(Clone, Copy, Debug, Default)]
struct Row {
    a0: f64,
    a1: f64,
    a2: f64,
    border: f64,
    rhs: f64,
}

/// Solves the `(n+1)×(n+1)` system
///
/// ```text
/// [ T    col ] [x]   [rhs[..n]]
/// [ rowᵀ  c  ] [y] = [rhs[n]  ]
/// ```
///
/// with `T` tridiagonal. Returns `None` if the system is numerically singular.
pub fn solve_bordered(
    t: &Tridiagonal,
    col: &[f64],
    row: &[f64],
    corner: f64,
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = t.len();
    assert_eq!(col.len(), n);
    assert_eq!(row.len(), n);
    assert_eq!(rhs.len(), n + 1);
    if n == 0 {
        return (corner != 0.0).then(|| vec![rhs[0] / corner]);
    }

    let sup = |i: usize| if i + 1 < n { t.upper[i] } else { 0.0 };
    let mut bottom = row.to_vec();
    let mut bottom_corner = corner;
    let mut bottom_rhs = rhs[n];
    let mut factor: Vec<Row> = Vec::with_capacity(n);

    let mut cur = Row {
        a0: t.diag[0],
        a1: sup(0),
        a2: 0.0,
        border: col[0],
        rhs: rhs[0],
    };
    for k in 0..n - 1 {
        let mut nxt = Row {
            a0: t.lower[k + 1],
            a1: t.diag[k + 1],
            a2: sup(k + 1),
            border: col[k + 1],
            rhs: rhs[k + 1],
        };
        if nxt.a0.abs() > cur.a0.abs() {
            std::mem::swap(&mut cur, &mut nxt);
        }
        let piv = cur;
        if piv.a0 == 0.0 {
            return None;
        }
        let m = nxt.a0 / piv.a0;
        nxt.a1 -= m * piv.a1;
        nxt.a2 -= m * piv.a2;
        nxt.border -= m * piv.border;
        nxt.rhs -= m * piv.rhs;

        let mb = bottom[k] / piv.a0;
        if mb != 0.0 {
            bottom[k + 1] -= mb * piv.a1;
            if k + 2 < n {
                bottom[k + 2] -= mb * piv.a2;
            }
            bottom_corner -= mb * piv.border;
            bottom_rhs -= mb * piv.rhs;
        }
        factor.push(piv);
        cur = Row {
            a0: nxt.a1,
            a1: nxt.a2,
            a2: 0.0,
            border: nxt.border,
            rhs: nxt.rhs,
        };
    }

    // trailing 2×2 block in (x[n-1], y), pivoting on the larger first column
    let (mut r1, mut r2) = (
        [cur.a0, cur.border, cur.rhs],
        [bottom[n - 1], bottom_corner, bottom_rhs],
    );
    if r2[0].abs() > r1[0].abs() {
        std::mem::swap(&mut r1, &mut r2);
    }
    if r1[0] == 0.0 {
        return None;
    }
    let m = r2[0] / r1[0];
    let d = r2[1] - m * r1[1];
    let scale = r1[1].abs().max(r2[1].abs()).max(r1[0].abs());
    if d.abs() <= f64::EPSILON * 1e-3 * scale || !d.is_finite() {
        return None;
    }
    let y = (r2[2] - m * r1[2]) / d;
    let mut x = vec![0.0; n + 1];
    x[n] = y;
    x[n - 1] = (r1[2] - r1[1] * y) / r1[0];

    for k in (0..n - 1).rev() {
        let f = factor[k];
        let mut acc = f.rhs - f.border * y - f.a1 * x[k + 1];
        if k + 2 < n {
            acc -= f.a2 * x[k + 2];
        }
        x[k] = acc / f.a0;
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
