use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mesh::Mesh1D;
use crate::error::{Error, Result};

/// Interior nodal values on a mesh; the endpoint values are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub mesh: Arc<Mesh1D>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: Arc<Mesh1D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_interior() {
            return Err(Error::InvalidMesh(format!(
                "{} values for a mesh with {} interior nodes",
                values.len(),
                mesh.num_interior()
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh1D>) -> Self {
        let n = mesh.num_interior();
        Self {
            mesh,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(mesh: Arc<Mesh1D>, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = mesh.interior_nodes().iter().map(|&x| f(x)).collect();
        Self { mesh, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(Σ V_i u_i²)^(1/2)` with control-volume weights.
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.mesh.volumes())
            .map(|(u, v)| u * u * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Index of the largest value (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        best
    }

    pub fn argmax_x(&self) -> f64 {
        self.mesh.interior_nodes()[self.argmax()]
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            mesh: Arc::clone(&self.mesh),
            values,
        }
    }

    /// `max_i |u_i - v_i|`.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    /// Writes `x,u` rows including both endpoints.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "u"])?;
        let nodes = self.mesh.all_nodes();
        let n = self.len();
        for (j, &x) in nodes.iter().enumerate() {
            let u = if j == 0 || j == n + 1 {
                0.0
            } else {
                self.values[j - 1]
            };
            w.serialize((x, u))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s)?;
        Self::new(g.mesh, g.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norms_and_argmax() {
        let mesh = Arc::new(Mesh1D::uniform(3, 1.0).unwrap());
        let g = GridFunction::new(mesh, vec![1.0, 3.0, -2.0]).unwrap();
        assert_eq!(g.sup_norm(), 3.0);
        assert_eq!(g.argmax(), 1);
        assert_relative_eq!(g.argmax_x(), 0.5);
        assert_relative_eq!(g.l2_norm(), (0.25f64 * 14.0).sqrt());
        assert!(!g.is_positive());
    }

    #[test]
    fn csv_includes_endpoints() {
        let mesh = Arc::new(Mesh1D::uniform(3, 1.0).unwrap());
        let g = GridFunction::new(mesh, vec![1.0, 2.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x,u");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "0.0,0.0");
        assert_eq!(lines[3], "0.5,2.0");
    }

    #[test]
    fn json_round_trip() {
        let mesh = Arc::new(Mesh1D::graded(7, 1.0, 2.0).unwrap());
        let g = GridFunction::from_fn(mesh, |x| x * (1.0 - x));
        let back = GridFunction::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g, back);
        assert!(GridFunction::from_json(
            r#"{"mesh":{"num_interior":4,"length":1.0,"grading":{"kind":"uniform"}},"values":[1.0]}"#
        )
        .is_err());
    }
}
