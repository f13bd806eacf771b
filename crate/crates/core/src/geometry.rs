//! Smooth closed planar curves sampled on an equispaced parameter grid.

use crate::error::{Error, Result};
use crate::spectral;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub m: u32,
    pub cos: f64,
    pub sin: f64,
}

/// Shape families. Polar shapes use the polar angle as curve parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    Circle { radius: f64 },
    /// `(a cos t, b sin t)` with `a >= b > 0`.
    Ellipse { a: f64, b: f64 },
    /// `r(t) = r0 + sum (cos_m cos(m t) + sin_m sin(m t))`.
    FourierCurve { r0: f64, modes: Vec<FourierMode> },
    /// `r(t) = r0 + delta exp(-(2 sin((t - theta0)/2) / width)^2)`.
    BumpCircle { r0: f64, theta0: f64, delta: f64, width: f64 },
    /// Non-convex test curve `scale (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)`.
    Kite { scale: f64 },
}

impl ShapeSpec {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Contract(msg));
        match self {
            ShapeSpec::Circle { radius } if !(*radius > 0.0) => bad(format!("circle radius {radius} must be positive")),
            ShapeSpec::Ellipse { a, b } if !(*b > 0.0 && a >= b) => {
                bad(format!("ellipse semi-axes need a >= b > 0, got a={a}, b={b}"))
            }
            ShapeSpec::FourierCurve { r0, modes } => {
                if !(*r0 > 0.0) {
                    return bad(format!("fourier_curve r0 {r0} must be positive"));
                }
                let amp: f64 = modes.iter().map(|m| m.cos.abs() + m.sin.abs()).sum();
                if amp >= *r0 {
                    return bad(format!("fourier amplitudes (sum {amp}) must stay below r0 {r0}"));
                }
                Ok(())
            }
            ShapeSpec::BumpCircle { r0, delta, width, .. } => {
                if !(*r0 > 0.0) || !(*width > 0.0) || *delta <= -*r0 {
                    return bad(format!("bump_circle needs r0 > 0, width > 0, delta > -r0 (r0={r0}, delta={delta}, width={width})"));
                }
                Ok(())
            }
            ShapeSpec::Kite { scale } if !(*scale > 0.0) => bad(format!("kite scale {scale} must be positive")),
            _ => Ok(()),
        }
    }

    /// Point on the curve at parameter `t`.
    pub fn point(&self, t: f64) -> [f64; 2] {
        let polar = |r: f64| [r * t.cos(), r * t.sin()];
        match self {
            ShapeSpec::Circle { radius } => polar(*radius),
            ShapeSpec::Ellipse { a, b } => [a * t.cos(), b * t.sin()],
            ShapeSpec::FourierCurve { r0, modes } => {
                let r = r0
                    + modes
                        .iter()
                        .map(|md| md.cos * (md.m as f64 * t).cos() + md.sin * (md.m as f64 * t).sin())
                        .sum::<f64>();
                polar(r)
            }
            ShapeSpec::BumpCircle { r0, theta0, delta, width } => {
                let d = 2.0 * (0.5 * (t - theta0)).sin() / width;
                polar(r0 + delta * (-d * d).exp())
            }
            ShapeSpec::Kite { scale } => [
                scale * (t.cos() + 0.65 * (2.0 * t).cos() - 0.65),
                scale * 1.5 * t.sin(),
            ],
        }
    }
}

/// Discretized curve with geometry caches. Derivatives are with respect to the parameter `t`.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub nodes: Vec<[f64; 2]>,
    pub d1: Vec<[f64; 2]>,
    pub d2: Vec<[f64; 2]>,
    pub tangent: Vec<[f64; 2]>,
    pub normal: Vec<[f64; 2]>,
    pub jacobian: Vec<f64>,
    pub curvature: Vec<f64>,
    pub weights: Vec<f64>,
    pub total_length: f64,
    id: String,
}

fn check_n(n: usize) -> Result<()> {
    if n < 16 || n % 2 == 1 {
        return Err(Error::Discretization(format!("node count must be even and >= 16, got {n}")));
    }
    Ok(())
}

pub fn make_shape(spec: &ShapeSpec, n: usize) -> Result<BoundaryCurve> {
    check_n(n)?;
    spec.validate()?;
    let nodes: Vec<[f64; 2]> = (0..n).map(|j| spec.point(2.0 * PI * j as f64 / n as f64)).collect();
    BoundaryCurve::from_nodes(nodes)
}

impl BoundaryCurve {
    /// Builds all caches from node positions by spectral differentiation.
    pub fn from_nodes(nodes: Vec<[f64; 2]>) -> Result<Self> {
        let n = nodes.len();
        check_n(n)?;
        let xs: Vec<f64> = nodes.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = nodes.iter().map(|p| p[1]).collect();
        let (x1, y1) = (spectral::derivative(&xs, 1), spectral::derivative(&ys, 1));
        let (x2, y2) = (spectral::derivative(&xs, 2), spectral::derivative(&ys, 2));
        let mut jacobian = Vec::with_capacity(n);
        let mut tangent = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut curvature = Vec::with_capacity(n);
        for j in 0..n {
            let speed = x1[j].hypot(y1[j]);
            if !(speed > 1e-10) {
                return Err(Error::DegenerateCurve(format!("|X'| = {speed:e} at node {j}")));
            }
            jacobian.push(speed);
            tangent.push([x1[j] / speed, y1[j] / speed]);
            normal.push([y1[j] / speed, -x1[j] / speed]);
            let h = (x1[j] * y2[j] - y1[j] * x2[j]) / speed.powi(3);
            if !h.is_finite() {
                return Err(Error::DegenerateCurve(format!("non-finite curvature at node {j}")));
            }
            curvature.push(h);
        }
        let weights: Vec<f64> = jacobian.iter().map(|s| 2.0 * PI * s / n as f64).collect();
        let total_length = weights.iter().sum();
        let d1 = (0..n).map(|j| [x1[j], y1[j]]).collect();
        let d2 = (0..n).map(|j| [x2[j], y2[j]]).collect();
        let id = hash_nodes(&nodes);
        let curve = BoundaryCurve { nodes, d1, d2, tangent, normal, jacobian, curvature, weights, total_length, id };
        curve.check_simple()?;
        Ok(curve)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Content hash of the node coordinates.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn param(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len() as f64
    }

    pub fn max_radius(&self) -> f64 {
        self.nodes.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.nodes {
            for b in &self.nodes {
                d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        d
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.len() as f64;
        self.nodes
            .iter()
            .zip(&self.d1)
            .map(|(p, d)| 0.5 * (p[0] * d[1] - p[1] * d[0]) * 2.0 * PI / n)
            .sum()
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.len();
        if self.signed_area() <= 0.0 {
            return Err(Error::DegenerateCurve("curve is not counterclockwise".into()));
        }
        let dist = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        let min_spacing = (0..n)
            .map(|j| dist(&self.nodes[j], &self.nodes[(j + 1) % n]))
            .fold(f64::INFINITY, f64::min);
        let threshold = 0.1 * min_spacing;
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if dist(&self.nodes[i], &self.nodes[j]) < threshold {
                    return Err(Error::DegenerateCurve(format!(
                        "nodes {i} and {j} nearly coincide; the curve self-intersects"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Scaled by `scale`, rotated by `angle` and shifted by `shift`.
    pub fn transformed(&self, scale: f64, angle: f64, shift: [f64; 2]) -> Result<Self> {
        let (c, s) = (angle.cos(), angle.sin());
        let nodes = self
            .nodes
            .iter()
            .map(|p| [scale * (c * p[0] - s * p[1]) + shift[0], scale * (s * p[0] + c * p[1]) + shift[1]])
            .collect();
        BoundaryCurve::from_nodes(nodes)
    }

    /// Arclength derivative of nodal values.
    pub fn d_ds(&self, values: &[f64]) -> Vec<f64> {
        spectral::derivative(values, 1).iter().zip(&self.jacobian).map(|(d, j)| d / j).collect()
    }

    /// Integral over the curve with the trapezoid weights.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,y,nx,ny,H,w")?;
        for j in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.param(j),
                self.nodes[j][0],
                self.nodes[j][1],
                self.normal[j][0],
                self.normal[j][1],
                self.curvature[j],
                self.weights[j]
            )?;
        }
        Ok(())
    }
}

fn hash_nodes(nodes: &[[f64; 2]]) -> String {
    let mut hasher = Sha256::new();
    for p in nodes {
        hasher.update(p[0].to_le_bytes());
        hasher.update(p[1].to_le_bytes());
    }
    hasher.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// Normal displacement field `h` on a curve, with arclength derivatives.
#[derive(Debug, Clone)]
pub struct PerturbationField {
    pub values: Vec<f64>,
    pub ds: Vec<f64>,
    pub dss: Vec<f64>,
}

impl PerturbationField {
    pub fn from_values(curve: &BoundaryCurve, values: Vec<f64>) -> Result<Self> {
        if values.len() != curve.len() {
            return Err(Error::DimensionMismatch { expected: curve.len(), got: values.len() });
        }
        let ds = curve.d_ds(&values);
        let dss = curve.d_ds(&ds);
        Ok(PerturbationField { values, ds, dss })
    }

    /// Samples `f(t)` at the curve parameters.
    pub fn from_fn(curve: &BoundaryCurve, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..curve.len()).map(|j| f(curve.param(j))).collect();
        Self::from_values(curve, values).expect("length matches by construction")
    }

    pub fn constant(curve: &BoundaryCurve, c: f64) -> Self {
        Self::from_fn(curve, |_| c)
    }

    /// Periodic Gaussian bump centred at node `center`, width given in node spacings.
    pub fn node_bump(curve: &BoundaryCurve, center: usize, width_nodes: f64) -> Self {
        let t0 = curve.param(center);
        let w = width_nodes * 2.0 * PI / curve.len() as f64;
        Self::from_fn(curve, |t| {
            let d = 2.0 * (0.5 * (t - t0)).sin() / w;
            (-d * d).exp()
        })
    }

    /// `cos(m t)` when `sine` is false, `sin(m t)` otherwise.
    pub fn fourier(curve: &BoundaryCurve, m: u32, sine: bool) -> Self {
        let m = m as f64;
        if sine {
            Self::from_fn(curve, |t| (m * t).sin())
        } else {
            Self::from_fn(curve, |t| (m * t).cos())
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = |v: &Vec<f64>| v.iter().map(|x| x * c).collect();
        PerturbationField { values: f(&self.values), ds: f(&self.ds), dss: f(&self.dss) }
    }

    pub fn add(&self, other: &Self) -> Self {
        let f = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x + y).collect();
        PerturbationField {
            values: f(&self.values, &other.values),
            ds: f(&self.ds, &other.ds),
            dss: f(&self.dss, &other.dss),
        }
    }
}

/// Moves node `j` to `x_j + eps h_j nu_j` and recomputes the geometry.
pub fn perturb_curve(curve: &BoundaryCurve, h: &PerturbationField, eps: f64) -> Result<BoundaryCurve> {
    if h.values.len() != curve.len() {
        return Err(Error::DimensionMismatch { expected: curve.len(), got: h.values.len() });
    }
    let nodes = curve
        .nodes
        .iter()
        .zip(&curve.normal)
        .zip(&h.values)
        .map(|((p, nu), hv)| [p[0] + eps * hv * nu[0], p[1] + eps * hv * nu[1]])
        .collect();
    BoundaryCurve::from_nodes(nodes)
}

/// Pairs of cumulative arclength and curvature at each node.
pub fn curvature_profile(curve: &BoundaryCurve) -> Vec<(f64, f64)> {
    let s = spectral::antiderivative(&curve.jacobian);
    s.into_iter().zip(curve.curvature.iter().copied()).collect()
}
