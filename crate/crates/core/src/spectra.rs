//! Spectrum of the Neumann-Poincare operator `K*`.

use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;
use crate::potentials::{assemble_np_adjoint, C64};
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Leading eigenvalues of `K*`, sorted by modulus (ties: larger real part first).
    pub eigenvalues: Vec<C64>,
    /// The same values scaled by 2 (eigenvalues of the Fredholm operator `2K*`).
    pub fredholm: Vec<C64>,
    /// Largest distance from `-lambda_i` to the full spectrum, over reported
    /// `lambda_i != 1/2` with `|lambda_i| > 1e-6`.
    pub twin_defect: f64,
    /// Log-log slope of `|lambda_j|` against `j` for `4 <= j <= count`, with `1/2` removed.
    pub decay_fit: f64,
    /// Number of computed eigenvalues within `1e-8` of `1/2`.
    pub half_count: usize,
    pub max_imag: f64,
}

fn sort_key(a: &C64, b: &C64) -> std::cmp::Ordering {
    b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re))
}

pub fn np_spectrum(curve: &BoundaryCurve, count: usize) -> Result<SpectrumReport> {
    if count == 0 || count > curve.len() / 4 {
        return Err(Error::Contract(format!(
            "count must be in 1..={} (N/4) for N = {}, got {count}",
            curve.len() / 4,
            curve.len()
        )));
    }
    let k = assemble_np_adjoint(curve).real_part();
    let mut all: Vec<C64> = k.complex_eigenvalues().iter().copied().collect();
    all.sort_by(sort_key);
    let max_imag = all.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let half_count = all.iter().filter(|z| (**z - 0.5).norm() < 1e-8).count();
    let eigenvalues: Vec<C64> = all[..count].to_vec();
    let half_idx = eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 0.5).norm().total_cmp(&(b.1 - 0.5).norm()))
        .map(|(i, _)| i);
    let mut twin_defect: f64 = 0.0;
    for (i, lam) in eigenvalues.iter().enumerate() {
        if Some(i) == half_idx || lam.norm() <= 1e-6 {
            continue;
        }
        let d = all.iter().map(|mu| (mu + lam).norm()).fold(f64::INFINITY, f64::min);
        twin_defect = twin_defect.max(d);
    }
    let rest: Vec<f64> = eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != half_idx)
        .map(|(_, z)| z.norm())
        .collect();
    let pts: Vec<(f64, f64)> = rest
        .iter()
        .enumerate()
        .map(|(j, m)| ((j + 1) as f64, *m))
        .filter(|(j, m)| *j >= 4.0 && *m > 0.0)
        .map(|(j, m)| (j.ln(), m.ln()))
        .collect();
    let decay_fit = slope(&pts);
    let fredholm = eigenvalues.iter().map(|z| z * 2.0).collect();
    Ok(SpectrumReport { eigenvalues, fredholm, twin_defect, decay_fit, half_count, max_imag })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// `max_j |sum_i w_i K*_ij - w_j / 2|`: the weight vector is the left eigenvector for `1/2`.
pub fn half_eigenvector_defect(curve: &BoundaryCurve) -> f64 {
    let k = assemble_np_adjoint(curve).real_part();
    (0..curve.len())
        .map(|j| {
            let s: f64 = (0..curve.len()).map(|i| curve.weights[i] * k[(i, j)]).sum();
            (s - 0.5 * curve.weights[j]).abs()
        })
        .fold(0.0, f64::max)
}

impl SpectrumReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "j,re,im,fredholm_re")?;
        for (j, (z, f)) in self.eigenvalues.iter().zip(&self.fredholm).enumerate() {
            writeln!(out, "{},{:.15e},{:.15e},{:.15e}", j + 1, z.re, z.im, f.re)?;
        }
        Ok(())
    }
}
