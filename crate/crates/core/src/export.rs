//! Branch output: CSV rows, JSON manifest, SVG bifurcation diagram.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::continuation::{AsymptoteFit, Branch, ContinuationConfig, Termination};
use crate::discretization::MeshParams;
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub s: f64,
    pub lambda: f64,
    pub sup_norm: f64,
    pub l2_norm: f64,
    pub argmax_x: f64,
    pub tangent_sign: i8,
}

pub fn branch_rows(branch: &Branch) -> Vec<BranchRow> {
    branch
        .points
        .iter()
        .map(|p| BranchRow {
            s: p.arclength,
            lambda: p.lambda,
            sup_norm: p.sup_norm,
            l2_norm: p.l2_norm,
            argmax_x: p.argmax_location,
            tangent_sign: p.tangent_lambda_sign,
        })
        .collect()
}

pub fn write_branch_csv<W: Write>(branch: &Branch, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in branch_rows(branch) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_branch_csv<R: Read>(reader: R) -> Result<Vec<BranchRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<BranchRow>, _>>()?;
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub lambda: f64,
    pub index: usize,
    pub sup_norm: f64,
    /// The fold point is always computed; an actual solution at exactly
    /// this λ is only guaranteed in the convex regime.
    pub existence_guaranteed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lambda1: f64,
    /// `λ₁ / g_min`.
    pub sharp: f64,
    /// `λ₁ (ζ+1)^δ ζ^(p-1)`.
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchManifest {
    pub spec: ProblemSpec,
    pub mesh: MeshParams,
    pub config: ContinuationConfig,
    pub points: usize,
    pub termination: Termination,
    pub sign_changes: usize,
    pub fold: Option<FoldSummary>,
    pub max_sup_norm: f64,
    pub bounds: Option<Bounds>,
    pub asymptote: Option<AsymptoteFit>,
}

impl BranchManifest {
    pub fn new(branch: &Branch, config: ContinuationConfig) -> Result<Self> {
        let mesh = branch
            .mesh()
            .ok_or_else(|| Error::InvalidOptions("empty branch".into()))?
            .params();
        Ok(Self {
            spec: branch.spec,
            mesh,
            config,
            points: branch.len(),
            termination: branch.termination,
            sign_changes: branch.sign_changes,
            fold: branch.fold.map(|f| FoldSummary {
                lambda: f.lambda,
                index: f.index,
                sup_norm: branch.points[f.index].sup_norm,
                existence_guaranteed: false,
            }),
            max_sup_norm: branch.max_sup_norm(),
            bounds: None,
            asymptote: None,
        })
    }
}

/// Diagram with λ on the horizontal axis and `sup u` on a log10 vertical
/// axis.
#[derive(Clone, Debug, Default)]
pub struct Diagram {
    pub title: String,
    pub curves: Vec<Vec<(f64, f64)>>,
    pub fold: Option<(f64, f64)>,
    /// Vertical line, typically the existence bound.
    pub bound: Option<f64>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 36.0;
const PAD_B: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

impl Diagram {
    pub fn from_rows(title: impl Into<String>, rows: &[BranchRow]) -> Self {
        let curve = rows.iter().map(|r| (r.lambda, r.sup_norm)).collect();
        Self {
            title: title.into(),
            curves: vec![curve],
            ..Self::default()
        }
    }

    pub fn from_branch(title: impl Into<String>, branch: &Branch) -> Self {
        let mut d = Self::from_rows(title, &branch_rows(branch));
        d.fold = branch
            .fold
            .map(|f| (f.lambda, branch.points[f.index].sup_norm));
        d
    }

    pub fn to_svg(&self) -> String {
        let pts = self.curves.iter().flatten().filter(|p| p.1 > 0.0);
        let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in pts {
            x1 = x1.max(x);
            y0 = y0.min(y.log10());
            y1 = y1.max(y.log10());
        }
        if let Some(b) = self.bound {
            x1 = x1.max(b);
        }
        if x1 <= x0 {
            (x0, x1) = (0.0, 1.0);
        }
        if y1 <= y0 {
            (y0, y1) = (y0.min(0.0) - 1.0, y1.max(0.0) + 1.0);
        }
        x1 *= 1.05;
        let (y0, y1) = (y0.floor(), y1.ceil());
        let sx = |x: f64| PAD_L + (x - x0) / (x1 - x0) * (W - PAD_L - PAD_R);
        let sy = |y: f64| H - PAD_B - (y.log10() - y0) / (y1 - y0) * (H - PAD_T - PAD_B);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        // axes
        let (ax, ay) = (PAD_L, H - PAD_B);
        let _ = writeln!(
            s,
            r#"<path d="M{ax} {PAD_T} L{ax} {ay} L{} {ay}" stroke="black" fill="none"/>"#,
            W - PAD_R
        );
        for k in 0..=5 {
            let x = x0 + (x1 - x0) * k as f64 / 5.0;
            let px = sx(x);
            let _ = writeln!(
                s,
                r#"<line x1="{px:.1}" y1="{ay}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#,
                ay + 5.0,
                ay + 18.0,
                tick_label(x)
            );
        }
        for e in y0 as i32..=y1 as i32 {
            let py = sy(10f64.powi(e));
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{py:.1}" x2="{ax}" y2="{py:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">1e{e}</text>"#,
                ax - 5.0,
                ax - 8.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">λ</text>"#,
            (PAD_L + W - PAD_R) / 2.0,
            H - 12.0
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">sup u</text>"#,
            H / 2.0,
            H / 2.0
        );
        if let Some(b) = self.bound {
            let px = sx(b);
            let _ = writeln!(
                s,
                r#"<line x1="{px:.1}" y1="{PAD_T}" x2="{px:.1}" y2="{ay}" stroke="gray" stroke-dasharray="6 4"/>"#
            );
        }
        for (k, curve) in self.curves.iter().enumerate() {
            let mut d = String::new();
            for &(x, y) in curve.iter().filter(|p| p.1 > 0.0) {
                let cmd = if d.is_empty() { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{:.2} {:.2} ", sx(x), sy(y));
            }
            let _ = writeln!(
                s,
                r#"<path d="{}" stroke="{}" stroke-width="1.5" fill="none"/>"#,
                d.trim_end(),
                COLORS[k % COLORS.len()]
            );
        }
        if let Some((fx, fy)) = self.fold {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="black"/>"#,
                sx(fx),
                sy(fy)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick_label(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1e-2 && x.abs() < 1e4 {
        format!("{:.3}", x).trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::BranchPoint;
    use crate::discretization::{GridFunction, Mesh1D};
    use std::sync::Arc;

    fn tiny_branch() -> Branch {
        let mesh = Arc::new(Mesh1D::uniform(3, 1.0).unwrap());
        let pts = [(0.1, 0.01), (0.5, 0.1), (0.6, 1.0), (0.3, 10.0)]
            .iter()
            .enumerate()
            .map(|(k, &(l, s))| {
                let u = GridFunction::new(mesh.clone(), vec![0.5 * s, s, 0.5 * s]).unwrap();
                BranchPoint::new(l, u, k as f64, if k < 3 { 1 } else { -1 })
            })
            .collect();
        Branch::from_points(ProblemSpec::default(), pts, Termination::NormCap)
    }

    #[test]
    fn csv_round_trip() {
        let b = tiny_branch();
        let mut buf = Vec::new();
        write_branch_csv(&b, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("s,lambda,sup_norm,l2_norm,argmax_x,tangent_sign\n"));
        let rows = read_branch_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, branch_rows(&b));
    }

    #[test]
    fn manifest_json_round_trip() {
        let b = tiny_branch();
        let m = BranchManifest::new(&b, ContinuationConfig::default()).unwrap();
        assert_eq!(m.fold.unwrap().index, 2);
        let back: BranchManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn svg_has_curve_and_markers() {
        let b = tiny_branch();
        let mut d = Diagram::from_branch("test <branch>", &b);
        d.bound = Some(0.8);
        let svg = d.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;branch&gt;"));
        assert!(svg.contains("<circle"));
        assert!(svg.contains("stroke-dasharray"));
        assert_eq!(svg.matches("<path d=\"M").count(), 2);
    }
}
