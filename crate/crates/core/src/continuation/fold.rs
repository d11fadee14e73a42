use serde::{Deserialize, Serialize};

use super::Branch;
use crate::discretization::GridFunction;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldEstimate {
    /// Parabolic vertex of λ(s) through the three points around the turn.
    pub lambda: f64,
    /// Index of the branch point with the largest λ near the turn.
    pub index: usize,
    pub u: GridFunction,
    /// Largest `|Δλ|` over the two segments adjacent to `index`.
    pub resolution: f64,
}

/// Locates the first turning point where λ stops increasing.
pub fn detect_fold(branch: &Branch) -> Result<FoldEstimate> {
    let pts = &branch.points;
    let mut last = 0.0f64;
    let mut idx = None;
    for k in 1..pts.len() {
        let d = pts[k].lambda - pts[k - 1].lambda;
        if d == 0.0 {
            continue;
        }
        if last > 0.0 && d < 0.0 {
            idx = Some(k - 1);
            break;
        }
        last = d;
    }
    let k = idx.ok_or(Error::NoFold)?;
    let (s0, s1, s2) = (pts[k - 1].arclength, pts[k].arclength, pts[k + 1].arclength);
    let (l0, l1, l2) = (pts[k - 1].lambda, pts[k].lambda, pts[k + 1].lambda);
    // divided differences of the interpolating parabola
    let d01 = (l1 - l0) / (s1 - s0);
    let d12 = (l2 - l1) / (s2 - s1);
    let curv = (d12 - d01) / (s2 - s0);
    let lambda = if curv < 0.0 {
        let s_star = 0.5 * (s0 + s1) - 0.5 * d01 / curv;
        let s_star = s_star.clamp(s0, s2);
        l0 + d01 * (s_star - s0) + curv * (s_star - s0) * (s_star - s1)
    } else {
        l1
    };
    Ok(FoldEstimate {
        lambda: lambda.max(l1),
        index: k,
        u: pts[k].u.clone(),
        resolution: (l1 - l0).abs().max((l2 - l1).abs()),
    })
}

/// Number of crossings of the line `λ = lambda_query` by the
/// `(λ, sup u)` polyline.
pub fn count_solutions_at(lambda_query: f64, branch: &Branch) -> Result<usize> {
    if let Ok(f) = detect_fold(branch) {
        if (lambda_query - f.lambda).abs() < 2.0 * f.resolution {
            return Err(Error::QueryTooCloseToFold {
                query: lambda_query,
                fold: f.lambda,
                resolution: f.resolution,
            });
        }
    }
    Ok(branch
        .points
        .windows(2)
        .filter(|w| (w[0].lambda < lambda_query) != (w[1].lambda < lambda_query))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::{BranchPoint, Termination};
    use crate::discretization::Mesh1D;
    use crate::problem::ProblemSpec;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn synthetic(lambdas: &[(f64, f64)]) -> Branch {
        let mesh = Arc::new(Mesh1D::uniform(3, 1.0).unwrap());
        let pts = lambdas
            .iter()
            .map(|&(s, l)| {
                let u = GridFunction::new(mesh.clone(), vec![s, 2.0 * s + 1e-3, s]).unwrap();
                BranchPoint::new(l, u, s, 1)
            })
            .collect();
        Branch::from_points(ProblemSpec::default(), pts, Termination::NormCap)
    }

    #[test]
    fn monotone_branch_has_no_fold() {
        let b = synthetic(&[(0.0, 0.1), (1.0, 0.2), (2.0, 0.4)]);
        assert!(matches!(detect_fold(&b), Err(Error::NoFold)));
        assert_eq!(count_solutions_at(0.3, &b).unwrap(), 1);
    }

    #[test]
    fn parabola_vertex_is_exact() {
        // λ = 3 - (s - 2.3)²
        let data: Vec<(f64, f64)> = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&s| (s, 3.0 - (s - 2.3f64).powi(2)))
            .collect();
        let b = synthetic(&data);
        let f = detect_fold(&b).unwrap();
        assert_relative_eq!(f.lambda, 3.0, max_relative = 1e-14);
        assert_eq!(f.index, 2);
        assert_eq!(b.fold.unwrap().index, 2);
    }

    #[test]
    fn counts_and_guard() {
        let data: Vec<(f64, f64)> = (0..=40)
            .map(|k| {
                let s = k as f64 * 0.1;
                (s, 3.0 - (s - 2.0).powi(2))
            })
            .collect();
        let b = synthetic(&data);
        assert_eq!(count_solutions_at(1.5, &b).unwrap(), 2);
        assert_eq!(count_solutions_at(3.3, &b).unwrap(), 0);
        assert!(matches!(
            count_solutions_at(2.99, &b),
            Err(Error::QueryTooCloseToFold { .. })
        ));
    }
}
