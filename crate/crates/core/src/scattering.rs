//! Helmholtz scattering coefficients with Bessel incident modes `J_|m|(k0 r) e^{i m theta}`.
//!
//! Incident modes are normalized by `c_m = |m|! (2/k0)^|m|` so that `c_m J_|m|(k0 r) e^{i m theta}`
//! tends to `r^|m| e^{i m theta}` as `k0 -> 0`; with this normalization `W` tends to the GPT
//! matrix at the contrast `(mu0 + mu1) / (2 (mu0 - mu1))`.

use crate::bessel::{bessel_j, bessel_j_table, hankel1};
use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;
use crate::inversion::lb_eigenbasis;
use crate::potentials::{c, eval_single_layer, HelmholtzParams, TransmissionSolver, C64, I};
use crate::spectral;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// Orders `-K..=K`.
pub fn sc_orders(k: usize) -> Vec<i32> {
    let k = k as i32;
    (-k..=k).collect()
}

/// `|m|! (2/k)^|m|`.
pub fn mode_normalization(m: i32, k: f64) -> f64 {
    (1..=m.unsigned_abs()).fold(1.0, |acc, j| acc * j as f64 * 2.0 / k)
}

/// Trace and normal derivative of `J_|m|(k r) e^{i m theta}`.
pub fn wave_trace(curve: &BoundaryCurve, m: i32, k: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    if !(k > 0.0) {
        return Err(Error::Contract(format!("wavenumber must be positive, got {k}")));
    }
    let p = m.unsigned_abs() as usize;
    let mut value = Vec::with_capacity(curve.len());
    let mut dnu = Vec::with_capacity(curve.len());
    for (x, nu) in curve.nodes.iter().zip(&curve.normal) {
        let r = x[0].hypot(x[1]);
        let th = x[1].atan2(x[0]);
        let (er, et) = ([th.cos(), th.sin()], [-th.sin(), th.cos()]);
        let j = bessel_j_table(p + 1, k * r);
        let jm = if p == 0 { -j[1] } else { j[p - 1] };
        let jp = j[p + 1];
        // d/dr J_p(kr) = k (J_{p-1} - J_{p+1}) / 2, and J_p(kr)/r = k (J_{p-1} + J_{p+1}) / (2p)
        let dr = k * 0.5 * (jm - jp);
        let over_r = if p == 0 { 0.0 } else { k * (jm + jp) / (2.0 * p as f64) };
        let phase = C64::from_polar(1.0, m as f64 * th);
        let grad_n = c(dr * (er[0] * nu[0] + er[1] * nu[1])) + I * (m as f64 * over_r * (et[0] * nu[0] + et[1] * nu[1]));
        value.push(phase * j[p]);
        dnu.push(phase * grad_n);
    }
    Ok((value, dnu))
}

#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    pub order: usize,
    /// Row `m + K`, column `n + K`.
    pub entries: DMatrix<C64>,
    pub params: HelmholtzParams,
    pub k0: f64,
    pub k1: f64,
}

#[derive(Serialize)]
struct Entry {
    m: i32,
    n: i32,
    re: f64,
    im: f64,
}

impl ScatteringMatrix {
    pub fn get(&self, m: i32, n: i32) -> C64 {
        let k = self.order as i32;
        self.entries[((m + k) as usize, (n + k) as usize)]
    }

    /// Block over the nonzero orders, laid out like a [`crate::GptMatrix`].
    pub fn nonzero_block(&self) -> DMatrix<C64> {
        let ord = crate::gpt::orders(self.order);
        DMatrix::from_fn(ord.len(), ord.len(), |a, b| self.get(ord[a], ord[b]))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ord = sc_orders(self.order);
        let entries: Vec<Entry> = ord
            .iter()
            .flat_map(|&m| ord.iter().map(move |&n| (m, n)))
            .map(|(m, n)| {
                let z = self.get(m, n);
                Entry { m, n, re: z.re, im: z.im }
            })
            .collect();
        serde_json::json!({ "order": self.order, "params": self.params, "k0": self.k0, "k1": self.k1, "entries": entries })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,n,re,im")?;
        for &m in &sc_orders(self.order) {
            for &n in &sc_orders(self.order) {
                let z = self.get(m, n);
                writeln!(out, "{m},{n},{:.15e},{:.15e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

fn check_params(curve: &BoundaryCurve, params: &HelmholtzParams, k: usize) -> Result<()> {
    params.validate()?;
    if params.omega > 1.0 {
        return Err(Error::Contract(format!("omega must be <= 1 (quasi-static range), got {}", params.omega)));
    }
    if k == 0 || k > curve.len() / 8 {
        return Err(Error::Contract(format!("order K must be in 1..={} (N/8), got {k}", curve.len() / 8)));
    }
    Ok(())
}

/// Exterior densities `psi_n` for the normalized incident modes `n = -K..=K`.
fn exterior_densities(curve: &BoundaryCurve, solver: &TransmissionSolver, k0: f64, k: usize) -> Result<Vec<Vec<C64>>> {
    sc_orders(k)
        .par_iter()
        .map(|&n| {
            let (u0, du0) = wave_trace(curve, n, k0)?;
            let cn = mode_normalization(n, k0);
            let u0: Vec<C64> = u0.iter().map(|z| z * cn).collect();
            let du0: Vec<C64> = du0.iter().map(|z| z * cn).collect();
            Ok(solver.solve(&u0, &du0).1)
        })
        .collect()
}

/// `W[m][n] = c_m int J_|m|(k0 r) e^{-i m theta} psi_n ds`.
pub fn compute_sc(curve: &BoundaryCurve, params: HelmholtzParams, k: usize) -> Result<ScatteringMatrix> {
    check_params(curve, &params, k)?;
    let k0 = params.k0();
    let solver = TransmissionSolver::new(curve, params)?;
    let psis = exterior_densities(curve, &solver, k0, k)?;
    let ord = sc_orders(k);
    let tests: Vec<Vec<C64>> = ord
        .iter()
        .map(|&m| {
            let (v, _) = wave_trace(curve, -m, k0)?;
            let cm = mode_normalization(m, k0);
            Ok(v.iter().map(|z| z * cm).collect())
        })
        .collect::<Result<_>>()?;
    let entries = DMatrix::from_fn(ord.len(), ord.len(), |a, b| {
        (0..curve.len()).map(|j| tests[a][j] * psis[b][j] * curve.weights[j]).sum()
    });
    Ok(ScatteringMatrix { order: k, entries, params, k0, k1: params.k1() })
}

const FAR_FIELD_SAMPLES: usize = 128;

/// Fourier coefficients `a_m(R)` of the scattered field `S^{k0}[psi_n]` on `|x| = R`,
/// one column per incident order.
pub fn scattered_modes(curve: &BoundaryCurve, params: HelmholtzParams, k: usize, radius: f64) -> Result<DMatrix<C64>> {
    check_params(curve, &params, k)?;
    let max_radius = curve.max_radius();
    if !(radius > max_radius) {
        return Err(Error::RadiusInsideHull { radius, max_radius });
    }
    let k0 = params.k0();
    let solver = TransmissionSolver::new(curve, params)?;
    let psis = exterior_densities(curve, &solver, k0, k)?;
    let p = FAR_FIELD_SAMPLES.max(8 * k);
    let targets: Vec<[f64; 2]> = (0..p)
        .map(|l| {
            let t = 2.0 * PI * l as f64 / p as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    let ord = sc_orders(k);
    let mut out = DMatrix::zeros(ord.len(), ord.len());
    for (b, psi) in psis.iter().enumerate() {
        let coeffs = spectral::forward(&eval_single_layer(curve, psi, &targets, Some(k0))?);
        for (a, &m) in ord.iter().enumerate() {
            out[(a, b)] = coeffs[if m >= 0 { m as usize } else { (p as i32 + m) as usize }];
        }
    }
    Ok(out)
}

/// SCs from the scattered field on `|x| = R`, using
/// `G_k(x - y) = -(i/4) sum_m H_m(k|x|) J_m(k|y|) e^{i m (theta_x - theta_y)}`.
pub fn sc_from_far_field(curve: &BoundaryCurve, params: HelmholtzParams, k: usize, radius: f64) -> Result<ScatteringMatrix> {
    let modes = scattered_modes(curve, params, k, radius)?;
    let k0 = params.k0();
    let ord = sc_orders(k);
    let entries = DMatrix::from_fn(ord.len(), ord.len(), |a, b| {
        let m = ord[a];
        modes[(a, b)] * mode_normalization(m, k0) / (-0.25 * I * hankel1(m.abs(), k0 * radius))
    });
    Ok(ScatteringMatrix { order: k, entries, params, k0, k1: params.k1() })
}

#[derive(Debug, Clone)]
pub struct WaveBasisMaps {
    pub s: usize,
    /// Rows `L = -s..=s`, columns the first `2s + 1` Laplace-Beltrami eigenfunctions.
    pub u_inv: DMatrix<C64>,
    pub singular_values: Vec<f64>,
    pub condition: f64,
}

/// Orders `|L| <= s` whose Bessel factor vanishes somewhere on the curve: `J_|L|(k0 r)`
/// changes sign between neighbouring nodes, or is negligible relative to its largest value.
fn bessel_zero_modes(curve: &BoundaryCurve, s: usize, k0: f64) -> Vec<i32> {
    let n = curve.len();
    (0..=s as i32)
        .filter(|&l| {
            let vals: Vec<f64> = curve.nodes.iter().map(|x| bessel_j(l, k0 * x[0].hypot(x[1]))).collect();
            let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
            (0..n).any(|j| {
                let next = vals[(j + 1) % n];
                vals[j] * next < 0.0 || vals[j].abs() < 1e-12 * scale.max(f64::MIN_POSITIVE)
            })
        })
        .collect()
}

/// `U~^{-1}[L][p] = <J_|L|(k0 r) e^{i L theta}, eta_p>` and its condition number.
pub fn wave_change_of_basis(curve: &BoundaryCurve, s: usize, k0: f64) -> Result<WaveBasisMaps> {
    if s == 0 || s > curve.len() / 8 {
        return Err(Error::Contract(format!("resolution s must be in 1..={} (N/8), got {s}", curve.len() / 8)));
    }
    let zeros = bessel_zero_modes(curve, s, k0);
    if !zeros.is_empty() {
        return Err(Error::BesselZero { modes: zeros });
    }
    let eig = lb_eigenbasis(curve, 2 * s + 1)?;
    let ord = sc_orders(s);
    let mut u_inv = DMatrix::zeros(ord.len(), ord.len());
    for (a, &l) in ord.iter().enumerate() {
        let (v, _) = wave_trace(curve, l, k0)?;
        for p in 0..ord.len() {
            u_inv[(a, p)] = (0..curve.len()).map(|j| v[j] * eig.vectors[(j, p)] * curve.weights[j]).sum();
        }
    }
    let sv: Vec<f64> = u_inv.clone().singular_values().iter().copied().collect();
    let (hi, lo) = sv.iter().fold((0.0f64, f64::INFINITY), |(h, l), v| (h.max(*v), l.min(*v)));
    Ok(WaveBasisMaps { s, u_inv, singular_values: sv, condition: hi / lo })
}
