//! One runner per experiment kind. Each writes its tables into the output directory and
//! fills the report with results and checks.

use crate::config::{ExperimentConfig, HelmholtzConfig};
use crate::report::ExperimentReport;
use anyhow::{Context, Result};
use npsense::inversion::{add_noise, NewtonStatus};
use npsense::potentials::C64;
use npsense::scattering::wave_change_of_basis;
use npsense::sensitivity::{make_basis, spearman};
use npsense::{
    change_of_basis, compute_gpt, compute_sc, gpt_from_far_field, gpt_jacobian, gpt_sensitivity, make_shape,
    newton_reconstruct, np_spectrum, perturb_curve, recover_hh, sensitivity_map, BasisKind, BoundaryCurve, GptMatrix,
    NewtonOptions, PerturbationField, ShapeSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Entry-wise relative error with a floor of `1e-6 max|b|` for structurally zero entries.
pub fn max_rel_error<'a>(a: impl IntoIterator<Item = &'a C64>, b: &[C64]) -> f64 {
    let floor = 1e-6 * b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.into_iter().zip(b).map(|(x, y)| (x - y).norm() / y.norm().max(floor)).fold(0.0, f64::max)
}

fn entries(m: &GptMatrix) -> Vec<C64> {
    m.entries.iter().copied().collect()
}

/// Circular distance between node indices.
pub fn node_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, j| if v[j] > v[best] { j } else { best })
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, j| if v[j] < v[best] { j } else { best })
}

fn abs_curvature(curve: &BoundaryCurve) -> Vec<f64> {
    curve.curvature.iter().map(|h| h.abs()).collect()
}

fn has_curvature_contrast(curve: &BoundaryCurve) -> bool {
    let h = abs_curvature(curve);
    let (lo, hi) = h.iter().fold((f64::INFINITY, 0.0f64), |(l, u), v| (l.min(*v), u.max(*v)));
    hi - lo > 1e-8 * hi
}

/// `(distance between argmax of values and argmax |H| in nodes, Spearman(|H|, values))`.
pub fn localization_stats(curve: &BoundaryCurve, values: &[f64]) -> (usize, f64) {
    let h = abs_curvature(curve);
    (node_distance(argmax(values), argmax(&h), curve.len()), spearman(&h, values))
}

fn create(dir: &Path, name: &str, report: &mut ExperimentReport) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    report.files.push(name.to_string());
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?))
}

pub fn spectrum(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let curve = make_shape(&cfg.shape, cfg.n)?;
    let rep = np_spectrum(&curve, cfg.orders.count)?;
    report.stage("spectrum");
    rep.write_csv(create(dir, "spectrum.csv", report)?)?;
    let max_abs = rep.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    report.result("eigenvalues", rep.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
    report.result("decay_fit", rep.decay_fit);
    report.result("twin_defect", rep.twin_defect);
    report.check_le("spectrum_bound_excess", max_abs - 0.5, 1e-8);
    report.check_ge("half_eigenvalue_count", rep.half_count as f64, 1.0);
    report.check_le("twin_defect", rep.twin_defect, 1e-6);
    report.check_le("max_imag", rep.max_imag, 1e-6);
    if let ShapeSpec::Ellipse { a, b } = cfg.shape {
        let rho = (a - b) / (a + b);
        let pairs = ((cfg.orders.count - 1) / 2).min(6);
        let err = (1..=pairs)
            .flat_map(|j| [2 * j - 1, 2 * j].map(|i| (rep.fredholm[i].norm() - rho.powi(j as i32)).abs()))
            .fold(0.0, f64::max);
        report.result("ellipse_ratio", rho);
        report.check_le("ellipse_fredholm_error", err, 1e-6);
    }
    Ok(())
}

pub fn gpt(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let curve = make_shape(&cfg.shape, cfg.n)?;
    let k = cfg.orders.k;
    let m = compute_gpt(&curve, cfg.lambda, k)?;
    report.stage("gpt");
    let radius = cfg.gpt.radius.unwrap_or(2.0 * curve.max_radius());
    let far = gpt_from_far_field(&curve, cfg.lambda, k, radius)?;
    report.stage("far_field");
    m.write_csv(create(dir, "gpt.csv", report)?)?;
    far.write_csv(create(dir, "gpt_far_field.csv", report)?)?;
    report.result("radius", radius);
    report.result("frobenius", m.frobenius());
    report.check_le("far_field_rel_error", max_rel_error(far.entries.iter(), &entries(&m)), 1e-6);
    let herm = (&m.entries - m.entries.adjoint()).norm() / m.frobenius();
    report.check_le("hermitian_defect", herm, 1e-8);
    if let ShapeSpec::Circle { radius: r0 } = cfg.shape {
        let ord = npsense::gpt::orders(k);
        let (mut diag, mut off) = (0.0f64, 0.0f64);
        for &a in &ord {
            for &b in &ord {
                let z = m.get(a, b);
                if a == b {
                    let e = 2.0 * std::f64::consts::PI * a.abs() as f64 * r0.powi(2 * a.abs()) / cfg.lambda;
                    diag = diag.max((z - e).norm() / e.abs());
                } else {
                    off = off.max(z.norm());
                }
            }
        }
        report.check_le("disk_diagonal_rel_error", diag, 1e-8);
        report.check_le("disk_off_diagonal", off, 1e-10);
    }
    Ok(())
}

pub fn sensitivity(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let curve = make_shape(&cfg.shape, cfg.n)?;
    let basis = make_basis(&curve, BasisKind::NodeBumps { width_nodes: cfg.sensitivity.width_nodes });
    let jac = gpt_jacobian(&curve, cfg.lambda, cfg.orders.k, basis)?;
    let map = sensitivity_map(&curve, &jac)?;
    report.stage("jacobian");
    let mut out = create(dir, "sensitivity_map.csv", report)?;
    writeln!(out, "j,s,abs_H,sensitivity")?;
    for (j, (s, v)) in map.iter().enumerate() {
        writeln!(out, "{j},{s:.15e},{:.15e},{v:.15e}", curve.curvature[j].abs())?;
    }
    out.flush()?;
    let values: Vec<f64> = map.iter().map(|p| p.1).collect();
    if has_curvature_contrast(&curve) {
        let (dist, rho) = localization_stats(&curve, &values);
        report.result("argmax_node", argmax(&values));
        report.check_le("argmax_distance_nodes", dist as f64, 2.0);
        report.check_ge("spearman_abs_h", rho, 0.8);
    } else {
        let (lo, hi) = (values[argmin(&values)], values[argmax(&values)]);
        report.check_le("map_spread", (hi - lo) / hi, 1e-6);
    }
    Ok(())
}

/// `(||W(omega) - M(lambda)||_F per omega, fitted log-log slope)`, nonzero orders only.
pub fn low_freq_errors(curve: &BoundaryCurve, h: &HelmholtzConfig, k: usize, omegas: &[f64]) -> Result<(Vec<f64>, f64)> {
    let lambda = h.params(1.0).lambda();
    let m = compute_gpt(curve, lambda, k)?;
    let errs = omegas
        .iter()
        .map(|&w| Ok((compute_sc(curve, h.params(w), k)?.nonzero_block() - &m.entries).norm()))
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    Ok((errs, fit_slope(&xs, &ys)))
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

pub fn low_freq(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let curve = make_shape(&cfg.shape, cfg.n)?;
    let h = cfg.helmholtz.as_ref().context("low_freq_limit needs [helmholtz]")?;
    let omegas = h.omegas.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05]);
    let (errs, slope) = low_freq_errors(&curve, h, cfg.orders.k, &omegas)?;
    report.stage("scattering");
    let mut out = create(dir, "low_freq.csv", report)?;
    writeln!(out, "omega,error_norm")?;
    for (w, e) in omegas.iter().zip(&errs) {
        writeln!(out, "{w:.15e},{e:.15e}")?;
    }
    out.flush()?;
    report.result("static_lambda", h.params(1.0).lambda());
    report.check_in("log_log_slope", slope, 1.9, 2.1);
    Ok(())
}

pub fn condition(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let curve = make_shape(&cfg.shape, cfg.n)?;
    let k0 = cfg.helmholtz.as_ref().and_then(|h| h.omega.map(|w| w * (h.mu0 * h.eps0).sqrt()));
    let circle = match cfg.shape {
        ShapeSpec::Circle { radius } => Some(radius),
        _ => None,
    };
    let mut out = create(dir, "condition.csv", report)?;
    write!(out, "s,kappa")?;
    if k0.is_some() {
        write!(out, ",kappa_wave")?;
    }
    if circle.is_some() {
        write!(out, ",kappa_circle")?;
    }
    writeln!(out)?;
    let mut worst = 0.0f64;
    for s in 1..=cfg.orders.s {
        let kappa = change_of_basis(&curve, s)?.condition;
        write!(out, "{s},{kappa:.15e}")?;
        if let Some(k0) = k0 {
            let w = wave_change_of_basis(&curve, s, k0)?;
            write!(out, ",{:.15e}", w.condition)?;
        }
        if let Some(r0) = circle {
            let exact = r0.powi(-(s as i32)).max(r0.powi(s as i32));
            worst = worst.max((kappa / exact - 1.0).abs());
            write!(out, ",{exact:.15e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    report.stage("change_of_basis");
    if circle.is_some() {
        report.check_le("circle_formula_rel_error", worst, 1e-5);
    }
    Ok(())
}

/// Local RMS over 7 nodes centred at `c`.
fn local_rms(sq: &[f64], c: usize) -> f64 {
    let n = sq.len() as i64;
    ((-3i64..=3).map(|d| sq[(c as i64 + d).rem_euclid(n) as usize]).sum::<f64>() / 7.0).sqrt()
}

pub fn recover(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let curve = make_shape(&cfg.shape, cfg.n)?;
    let pert = cfg.perturbation.clone();
    let h = PerturbationField::from_fn(&curve, move |t| pert.eval(t));
    let m1 = gpt_sensitivity(&curve, cfg.lambda, &h, cfg.orders.k)?;
    let rec = recover_hh(&curve, cfg.lambda, &m1, cfg.orders.s)?;
    report.stage("noiseless");
    let sq = |v: &[f64]| -> Vec<f64> { v.iter().zip(&h.values).map(|(a, b)| (a - b).powi(2)).collect() };
    let norm: Vec<f64> = h.values.iter().map(|v| v * v).collect();
    let rel = (curve.integrate(&sq(&rec.h)) / curve.integrate(&norm)).sqrt();
    report.result("jacobian_condition", rec.condition);
    report.result("regularized", rec.regularized);
    report.check_le("noiseless_rel_error", rel, 1e-3);

    let n = curve.len();
    let mut noisy_sq = vec![0.0; n];
    if cfg.noise.level > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.noise.draws {
            let noisy = GptMatrix { entries: add_noise(&m1.entries, cfg.noise.level, &mut rng), ..m1.clone() };
            let r = recover_hh(&curve, cfg.lambda, &noisy, cfg.orders.s)?;
            for (acc, e) in noisy_sq.iter_mut().zip(sq(&r.h)) {
                *acc += e / cfg.noise.draws as f64;
            }
        }
        report.stage("noisy");
        if has_curvature_contrast(&curve) {
            let habs = abs_curvature(&curve);
            let (near, far) = (local_rms(&noisy_sq, argmax(&habs)), local_rms(&noisy_sq, argmin(&habs)));
            report.result("local_rms_high_curvature", near);
            report.result("local_rms_low_curvature", far);
            report.check_le("local_error_ratio", near / far, 0.7);
        }
    }
    let mut out = create(dir, "recover.csv", report)?;
    writeln!(out, "j,t,H,h_true,h_recovered,h_H_recovered,rms_noisy")?;
    for j in 0..n {
        writeln!(
            out,
            "{j},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
            curve.param(j),
            curve.curvature[j],
            h.values[j],
            rec.h[j],
            rec.h_curv[j],
            noisy_sq[j].sqrt()
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn newton_options(cfg: &ExperimentConfig) -> NewtonOptions {
    let nw = &cfg.newton;
    NewtonOptions {
        max_iters: nw.max_iters,
        alpha_rel: nw.alpha_rel,
        damping: nw.damping,
        tol: nw.tol,
        modes: nw.modes.unwrap_or(NewtonOptions::default().modes),
    }
}

/// Final boundary errors per draw for a bump added at the curvature maximum of `base`
/// and for the same bump at the antipode, each reconstructed from noisy GPTs.
#[allow(clippy::too_many_arguments)]
pub fn newton_localization(
    base: &BoundaryCurve,
    lambda: f64,
    k: usize,
    opts: NewtonOptions,
    height: f64,
    width: f64,
    level: f64,
    draws: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let peak = base.param(argmax(&abs_curvature(base)));
    let bump = |c: f64| {
        PerturbationField::from_fn(base, move |t| {
            let d = 2.0 * (0.5 * (t - c)).sin() / width;
            height * (-d * d).exp()
        })
    };
    let mut out = Vec::new();
    for c in [peak, peak + std::f64::consts::PI] {
        let target = perturb_curve(base, &bump(c), 1.0)?;
        let meas = compute_gpt(&target, lambda, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let errs = (0..draws)
            .map(|_| {
                let noisy = GptMatrix { entries: add_noise(&meas.entries, level, &mut rng), ..meas.clone() };
                let o = newton_reconstruct(&noisy, base, lambda, k, opts, Some(&target))?;
                Ok(o.last().boundary_error.unwrap_or(f64::NAN))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(errs);
    }
    let lo = out.pop().unwrap_or_default();
    let hi = out.pop().unwrap_or_default();
    Ok((hi, lo))
}

pub fn newton(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let d0 = make_shape(&cfg.shape, cfg.n)?;
    let opts = newton_options(cfg);
    report.result("options", opts);
    if let Some(loc) = &cfg.newton.localization {
        let draws = if cfg.noise.level > 0.0 { cfg.noise.draws } else { 1 };
        let (hi, lo) =
            newton_localization(&d0, cfg.lambda, cfg.orders.k, opts, loc.height, loc.width, cfg.noise.level, draws, cfg.seed)?;
        report.stage("localization");
        let mut out = create(dir, "localization.csv", report)?;
        writeln!(out, "draw,error_high_curvature,error_antipode")?;
        for (i, (a, b)) in hi.iter().zip(&lo).enumerate() {
            writeln!(out, "{i},{a:.15e},{b:.15e}")?;
        }
        out.flush()?;
        let (mh, ml) = (hi.iter().sum::<f64>() / hi.len() as f64, lo.iter().sum::<f64>() / lo.len() as f64);
        report.result("mean_error_high_curvature", mh);
        report.result("mean_error_antipode", ml);
        report.check_le("error_ratio", mh / ml, 0.8);
        return Ok(());
    }
    let target_spec = cfg.target.as_ref().context("newton needs [target]")?;
    let target = make_shape(target_spec, cfg.n)?;
    let mut meas = compute_gpt(&target, cfg.lambda, cfg.orders.k)?;
    if cfg.noise.level > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        meas.entries = add_noise(&meas.entries, cfg.noise.level, &mut rng);
    }
    let outcome = newton_reconstruct(&meas, &d0, cfg.lambda, cfg.orders.k, opts, Some(&target))?;
    report.stage("newton");
    let mut jl = create(dir, "newton_history.jsonl", report)?;
    for s in &outcome.history {
        writeln!(jl, "{}", serde_json::to_string(s)?)?;
    }
    jl.flush()?;
    let mut out = create(dir, "newton.csv", report)?;
    writeln!(out, "iterate,residual,step_norm,boundary_error")?;
    for s in &outcome.history {
        writeln!(out, "{},{:.15e},{:.15e},{:.15e}", s.iterate, s.residual, s.step_norm, s.boundary_error.unwrap_or(f64::NAN))?;
    }
    out.flush()?;
    outcome.last().curve.write_csv(create(dir, "final_curve.csv", report)?)?;
    let last = outcome.last();
    report.result("status", outcome.status);
    report.result("iterates", last.iterate);
    report.result("final_residual", last.residual);
    report.check_le("diverged", (outcome.status == NewtonStatus::Diverged) as u8 as f64, 0.0);
    if cfg.noise.level == 0.0 {
        report.check_le("final_boundary_error", last.boundary_error.unwrap_or(f64::INFINITY), cfg.newton.error_tol);
        let growth = outcome.history.windows(2).map(|w| w[1].residual / w[0].residual).fold(0.0, f64::max);
        report.check_le("max_residual_growth", growth, 1.0);
    }
    Ok(())
}
