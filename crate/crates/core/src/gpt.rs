//! Generalized polarization tensors in the complex harmonic basis `r^|m| e^{i m theta}`.

use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;
use crate::potentials::{c, eval_single_layer, ElectrostaticSolver, C64, I};
use crate::spectral;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// Nonzero harmonic orders `-K..=-1, 1..=K` in matrix index order.
pub fn orders(k: usize) -> Vec<i32> {
    let k = k as i32;
    (-k..=-1).chain(1..=k).collect()
}

/// Trace data of `f_m = (x + i sgn(m) y)^|m|` on the curve.
#[derive(Debug, Clone)]
pub struct HarmonicData {
    pub value: Vec<C64>,
    /// Normal derivative.
    pub dnu: Vec<C64>,
    /// Tangential derivative, equal to `d/ds` of the trace.
    pub ds: Vec<C64>,
    /// Second arclength derivative of the trace.
    pub dss: Vec<C64>,
}

pub fn harmonic_data(curve: &BoundaryCurve, m: i32) -> HarmonicData {
    let n = curve.len();
    let s = if m >= 0 { 1.0 } else { -1.0 };
    let p = m.unsigned_abs() as i32;
    let pf = p as f64;
    let mut out = HarmonicData {
        value: Vec::with_capacity(n),
        dnu: Vec::with_capacity(n),
        ds: Vec::with_capacity(n),
        dss: Vec::with_capacity(n),
    };
    for j in 0..n {
        let [x, y] = curve.nodes[j];
        let w = C64::new(x, s * y);
        let nu = curve.normal[j];
        let tau = curve.tangent[j];
        let value = if p == 0 { c(1.0) } else { w.powi(p) };
        let grad = if p == 0 { c(0.0) } else { w.powi(p - 1) * pf };
        let hess = if p < 2 { c(0.0) } else { w.powi(p - 2) * (pf * (pf - 1.0)) };
        let dnu = grad * (nu[0] + I * s * nu[1]);
        let dtau = grad * (tau[0] + I * s * tau[1]);
        let dtt = hess * (tau[0] + I * s * tau[1]).powi(2);
        out.value.push(value);
        out.dnu.push(dnu);
        out.ds.push(dtau);
        out.dss.push(dtt - dnu * curve.curvature[j]);
    }
    out
}

/// Trace and normal derivative of `r^|m| e^{i m theta}`.
pub fn harmonic_trace(curve: &BoundaryCurve, m: i32) -> Result<(Vec<C64>, Vec<C64>)> {
    if m == 0 {
        return Err(Error::Contract("harmonic order must be nonzero".into()));
    }
    let d = harmonic_data(curve, m);
    Ok((d.value, d.dnu))
}

#[derive(Debug, Clone)]
pub struct GptMatrix {
    pub order: usize,
    /// Row `index(m)`, column `index(n)`.
    pub entries: DMatrix<C64>,
    pub lambda: f64,
    pub curve_id: String,
}

#[derive(Serialize)]
struct Entry {
    m: i32,
    n: i32,
    re: f64,
    im: f64,
}

impl GptMatrix {
    pub fn index(&self, m: i32) -> usize {
        index_of(self.order, m)
    }

    pub fn get(&self, m: i32, n: i32) -> C64 {
        self.entries[(self.index(m), self.index(n))]
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.norm()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ord = orders(self.order);
        let mut entries = Vec::new();
        for &m in &ord {
            for &n in &ord {
                let z = self.get(m, n);
                entries.push(Entry { m, n, re: z.re, im: z.im });
            }
        }
        serde_json::json!({
            "order": self.order,
            "lambda": self.lambda,
            "curve_hash": self.curve_id,
            "entries": entries,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,n,re,im")?;
        let ord = orders(self.order);
        for &m in &ord {
            for &n in &ord {
                let z = self.get(m, n);
                writeln!(out, "{m},{n},{:.15e},{:.15e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn index_of(order: usize, m: i32) -> usize {
    let k = order as i32;
    assert!(m != 0 && m.abs() <= k, "order {m} outside 1..={k}");
    if m < 0 {
        (m + k) as usize
    } else {
        (m + k - 1) as usize
    }
}

fn check_order(curve: &BoundaryCurve, k: usize) -> Result<()> {
    if k == 0 || k > curve.len() / 8 {
        return Err(Error::Contract(format!("GPT order K must be in 1..={} (N/8), got {k}", curve.len() / 8)));
    }
    Ok(())
}

/// Densities `phi_n = (lambda I - K*)^{-1} d/dnu f_n` for all orders.
pub fn gpt_densities(solver: &ElectrostaticSolver, curve: &BoundaryCurve, k: usize) -> Vec<Vec<C64>> {
    orders(k)
        .par_iter()
        .map(|&n| solver.solve(&harmonic_data(curve, n).dnu))
        .collect()
}

pub fn compute_gpt_with(solver: &ElectrostaticSolver, curve: &BoundaryCurve, k: usize) -> Result<GptMatrix> {
    check_order(curve, k)?;
    let ord = orders(k);
    let phis = gpt_densities(solver, curve, k);
    let conj_traces: Vec<Vec<C64>> = ord.iter().map(|&m| harmonic_data(curve, -m).value).collect();
    let entries = DMatrix::from_fn(ord.len(), ord.len(), |a, b| {
        (0..curve.len()).map(|j| conj_traces[a][j] * phis[b][j] * curve.weights[j]).sum()
    });
    Ok(GptMatrix { order: k, entries, lambda: solver.lambda, curve_id: curve.id().to_string() })
}

/// `M[m][n] = int r^|m| e^{-i m theta} (lambda I - K*)^{-1}[d/dnu r^|n| e^{i n theta}] ds`.
pub fn compute_gpt(curve: &BoundaryCurve, lambda: f64, k: usize) -> Result<GptMatrix> {
    let solver = ElectrostaticSolver::new(curve, lambda)?;
    compute_gpt_with(&solver, curve, k)
}

/// Number of samples on the measurement circle.
const FAR_FIELD_SAMPLES: usize = 128;

/// GPTs read off the scattered potential on the circle `|x| = R`, using
/// `G(x - y) = (1/2pi) log|x| - sum_{m != 0} |y|^|m| / (4 pi |m| |x|^|m|) e^{i m (theta_x - theta_y)}`.
pub fn gpt_from_far_field(curve: &BoundaryCurve, lambda: f64, k: usize, radius: f64) -> Result<GptMatrix> {
    check_order(curve, k)?;
    let max_radius = curve.max_radius();
    if !(radius > max_radius) {
        return Err(Error::RadiusInsideHull { radius, max_radius });
    }
    let solver = ElectrostaticSolver::new(curve, lambda)?;
    let phis = gpt_densities(&solver, curve, k);
    let p = FAR_FIELD_SAMPLES.max(8 * k);
    let targets: Vec<[f64; 2]> = (0..p)
        .map(|l| {
            let t = 2.0 * PI * l as f64 / p as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    let ord = orders(k);
    let mut entries = DMatrix::zeros(ord.len(), ord.len());
    for (b, phi) in phis.iter().enumerate() {
        let field = eval_single_layer(curve, phi, &targets, None)?;
        let coeffs = spectral::forward(&field);
        for (a, &m) in ord.iter().enumerate() {
            let slot = if m >= 0 { m as usize } else { (p as i32 + m) as usize };
            let ma = m.abs() as f64;
            entries[(a, b)] = coeffs[slot] * (-4.0 * PI * ma * radius.powf(ma));
        }
    }
    Ok(GptMatrix { order: k, entries, lambda, curve_id: curve.id().to_string() })
}

/// `u - u0` at `targets` for the incident field `u0 = sum a_n r^|n| e^{i n theta}`.
pub fn scattered_potential(
    curve: &BoundaryCurve,
    lambda: f64,
    incident: &[(i32, C64)],
    targets: &[[f64; 2]],
) -> Result<Vec<C64>> {
    let solver = ElectrostaticSolver::new(curve, lambda)?;
    let mut g = vec![c(0.0); curve.len()];
    for &(n, a) in incident {
        if n == 0 {
            continue;
        }
        let d = harmonic_data(curve, n);
        for (gj, dj) in g.iter_mut().zip(&d.dnu) {
            *gj += a * dj;
        }
    }
    let phi = solver.solve(&g);
    eval_single_layer(curve, &phi, targets, None)
}
