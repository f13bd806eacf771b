//! Change of basis between harmonic traces and Laplace-Beltrami eigenfunctions, linear
//! recovery of `h` from GPT sensitivities, and Newton-type shape reconstruction.

use crate::error::{Error, Result};
use crate::geometry::{perturb_curve, BoundaryCurve, PerturbationField};
use crate::gpt::{compute_gpt, harmonic_data, GptMatrix};
use crate::potentials::C64;
use crate::sensitivity::{gpt_jacobian, make_basis, BasisKind};
use crate::spectral;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Eigenpairs of `-Delta` on the curve, orthonormal for `sum_j w_j u_j v_j`.
#[derive(Debug, Clone)]
pub struct LbEigen {
    /// Ascending eigenvalues `lambda_p^2`.
    pub values: Vec<f64>,
    /// Column `p` holds `eta_p` at the nodes.
    pub vectors: DMatrix<f64>,
}

pub fn lb_eigenbasis(curve: &BoundaryCurve, count: usize) -> Result<LbEigen> {
    let n = curve.len();
    if count == 0 || count > n / 4 {
        return Err(Error::Contract(format!("count must be in 1..={} (N/4), got {count}", n / 4)));
    }
    let d = spectral::diff_matrix(n);
    let scale = 2.0 * std::f64::consts::PI / n as f64;
    // stiffness D^T J^{-1} D (2 pi / N), symmetrized with W^{1/2}
    let dj = DMatrix::from_fn(n, n, |i, j| d[(i, j)] / curve.jacobian[i]);
    let stiff = d.transpose() * dj * scale;
    let rw: Vec<f64> = curve.weights.iter().map(|w| w.sqrt()).collect();
    let mut a = DMatrix::from_fn(n, n, |i, j| stiff[(i, j)] / (rw[i] * rw[j]));
    // the sawtooth (-1)^j lies in the kernel of the even-N difference matrix; push it to the top
    let saw: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { rw[j] } else { -rw[j] }).collect();
    let norm2: f64 = saw.iter().map(|v| v * v).sum();
    let beta = 1e3 * (n as f64 / curve.total_length).powi(2) * (1.0 + a.amax());
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += beta * saw[i] * saw[j] / norm2;
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
    let values = idx[..count].iter().map(|&p| eig.eigenvalues[p].max(0.0)).collect();
    let vectors = DMatrix::from_fn(n, count, |j, c| {
        let col = idx[c];
        // fix the sign so the output does not depend on the eigensolver's choice
        let v = eig.eigenvectors.column(col);
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() + 1e-12 { x } else { acc });
        v[j] / rw[j] * pivot.signum()
    });
    Ok(LbEigen { values, vectors })
}

/// `U^{-1}[L][p] = <r^|L| e^{i L theta}, eta_p>` for `L = -s..=s`, `p < 2s + 1`.
#[derive(Debug, Clone)]
pub struct BasisMaps {
    pub s: usize,
    pub eigen: LbEigen,
    pub u_inv: DMatrix<C64>,
    pub u_pinv: DMatrix<C64>,
    pub singular_values: Vec<f64>,
    pub condition: f64,
}

pub fn change_of_basis(curve: &BoundaryCurve, s: usize) -> Result<BasisMaps> {
    if s == 0 || s > curve.len() / 8 {
        return Err(Error::Contract(format!("resolution s must be in 1..={} (N/8), got {s}", curve.len() / 8)));
    }
    let size = 2 * s + 1;
    let eigen = lb_eigenbasis(curve, size)?;
    let ls: Vec<i32> = (-(s as i32)..=s as i32).collect();
    let mut u_inv = DMatrix::zeros(size, size);
    for (a, &l) in ls.iter().enumerate() {
        let f = harmonic_data(curve, l).value;
        for p in 0..size {
            u_inv[(a, p)] = (0..curve.len()).map(|j| f[j] * eigen.vectors[(j, p)] * curve.weights[j]).sum();
        }
    }
    let svd = u_inv.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let (hi, lo) = sv.iter().fold((0.0f64, f64::INFINITY), |(h, l), v| (h.max(*v), l.min(*v)));
    if !(lo > 1e-14 * hi) {
        return Err(Error::Singular(format!("change of basis at s = {s} is rank deficient (sigma_min/sigma_max = {})", lo / hi)));
    }
    let u_pinv = svd.pseudo_inverse(1e-14 * hi).map_err(|e| Error::Singular(e.to_string()))?;
    Ok(BasisMaps { s, eigen, u_inv, u_pinv, singular_values: sv, condition: hi / lo })
}

/// Real vector of `(Re, Im)` parts, row-major over `(m, n)`, matching
/// [`crate::SensitivityJacobian::real_matrix`].
fn stack(m: &DMatrix<C64>) -> DVector<f64> {
    let size = m.nrows();
    let rows = size * size;
    DVector::from_fn(2 * rows, |r, _| {
        let z = m[((r % rows) / size, r % size)];
        if r < rows {
            z.re
        } else {
            z.im
        }
    })
}

/// Least-squares solve; Tikhonov with `alpha = alpha_rel ||J||_F^2` when `alpha_rel > 0`.
fn solve_ls(j: &DMatrix<f64>, rhs: &DVector<f64>, alpha_rel: f64) -> Result<DVector<f64>> {
    if alpha_rel > 0.0 {
        let alpha = alpha_rel * j.norm_squared();
        let jt = j.transpose();
        let normal = &jt * j + DMatrix::identity(j.ncols(), j.ncols()) * alpha;
        normal
            .cholesky()
            .map(|ch| ch.solve(&(jt * rhs)))
            .ok_or_else(|| Error::Singular("regularized normal equations".into()))
    } else {
        let svd = j.clone().svd(true, true);
        let tol = 1e-15 * svd.singular_values.max();
        svd.solve(rhs, tol).map_err(|e| Error::Singular(e.to_string()))
    }
}

fn condition(j: &DMatrix<f64>) -> f64 {
    let sv = j.singular_values();
    sv.max() / sv.min()
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveredField {
    /// `h` at the nodes.
    pub h: Vec<f64>,
    /// `h H` at the nodes.
    pub h_curv: Vec<f64>,
    /// Coefficients on `1, cos t, sin t, ..., cos(s t), sin(s t)`.
    pub coefficients: Vec<f64>,
    pub condition: f64,
    pub regularized: bool,
}

/// Band-limited `h` (modes `<= s`) minimizing `||J h - M1||_F`.
pub fn recover_hh(curve: &BoundaryCurve, lambda: f64, m1: &GptMatrix, s: usize) -> Result<RecoveredField> {
    let basis = make_basis(curve, BasisKind::Fourier { max_mode: s as u32 });
    let jac = gpt_jacobian(curve, lambda, m1.order, basis)?;
    let jr = jac.real_matrix();
    let cond = condition(&jr);
    let regularized = !(cond < 1e14);
    let coeffs = solve_ls(&jr, &stack(&m1.entries), if regularized { 1e-8 } else { 0.0 })?;
    let mut h = vec![0.0; curve.len()];
    for (c, b) in coeffs.iter().zip(&jac.basis) {
        for (hj, bj) in h.iter_mut().zip(&b.values) {
            *hj += c * bj;
        }
    }
    let h_curv = h.iter().zip(&curve.curvature).map(|(a, b)| a * b).collect();
    Ok(RecoveredField { h, h_curv, coefficients: coeffs.iter().copied().collect(), condition: cond, regularized })
}

/// Adds complex Gaussian noise of standard deviation `level ||M||_F / sqrt(#entries)` per entry
/// (split evenly between real and imaginary parts).
pub fn add_noise<R: Rng + ?Sized>(m: &DMatrix<C64>, level: f64, rng: &mut R) -> DMatrix<C64> {
    let sigma = level * m.norm() / (m.len() as f64).sqrt() / 2f64.sqrt();
    m.map(|z| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        z + C64::new(a, b) * sigma
    })
}

/// `sqrt(sum_j w_j dist(x_j, target)^2)`, distances taken to a 16x refined polyline of the target.
pub fn boundary_l2_error(curve: &BoundaryCurve, target: &BoundaryCurve) -> f64 {
    let xs: Vec<f64> = target.nodes.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = target.nodes.iter().map(|p| p[1]).collect();
    let (xf, yf) = (spectral::upsample(&xs, 16), spectral::upsample(&ys, 16));
    let m = xf.len();
    let mut acc = 0.0;
    for (p, w) in curve.nodes.iter().zip(&curve.weights) {
        let mut best = f64::INFINITY;
        for i in 0..m {
            let (ax, ay) = (xf[i], yf[i]);
            let (bx, by) = (xf[(i + 1) % m], yf[(i + 1) % m]);
            let (dx, dy) = (bx - ax, by - ay);
            let t = (((p[0] - ax) * dx + (p[1] - ay) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            let d2 = (p[0] - ax - t * dx).powi(2) + (p[1] - ay - t * dy).powi(2);
            best = best.min(d2);
        }
        acc += w * best;
    }
    acc.sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Tikhonov parameter relative to `||J||_F^2`.
    pub alpha_rel: f64,
    pub damping: f64,
    /// Stop once `||M_meas - M(D^n)||_F <= tol ||M_meas||_F`.
    pub tol: f64,
    /// Highest Fourier mode in the update basis.
    pub modes: u32,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iters: 15, alpha_rel: 1e-8, damping: 0.5, tol: 1e-10, modes: 6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionState {
    pub iterate: usize,
    #[serde(skip)]
    pub curve: BoundaryCurve,
    pub residual: f64,
    /// `||h^n||` in the weighted L2 norm; zero on the final record.
    pub step_norm: f64,
    pub boundary_error: Option<f64>,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStatus {
    Converged,
    MaxIterations,
    /// Residual grew three iterates in a row.
    Diverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonOutcome {
    pub status: NewtonStatus,
    pub history: Vec<ReconstructionState>,
}

impl NewtonOutcome {
    pub fn last(&self) -> &ReconstructionState {
        self.history.last().expect("history holds the initial state")
    }
}

/// `D^{n+1} = D^n + damping * h^n nu`, where `h^n` solves the regularized
/// least-squares problem `J(D^n) h = M_meas - M(D^n)` over Fourier modes `<= opts.modes`.
pub fn newton_reconstruct(
    m_meas: &GptMatrix,
    d0: &BoundaryCurve,
    lambda: f64,
    k: usize,
    opts: NewtonOptions,
    target: Option<&BoundaryCurve>,
) -> Result<NewtonOutcome> {
    if m_meas.order != k {
        return Err(Error::DimensionMismatch { expected: 2 * k, got: 2 * m_meas.order });
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Contract(format!("damping must be in (0, 1], got {}", opts.damping)));
    }
    let scale = m_meas.frobenius();
    let mut curve = d0.clone();
    let mut history = Vec::new();
    let mut growth = 0;
    for it in 0..=opts.max_iters {
        let residual_m = &m_meas.entries - compute_gpt(&curve, lambda, k)?.entries;
        let residual = residual_m.norm();
        let err = target.map(|t| boundary_l2_error(&curve, t));
        if let Some(prev) = history.last().map(|s: &ReconstructionState| s.residual) {
            growth = if residual > prev { growth + 1 } else { 0 };
        }
        let mut state = ReconstructionState { iterate: it, curve: curve.clone(), residual, step_norm: 0.0, boundary_error: err, alpha: 0.0 };
        let status = if residual <= opts.tol * scale {
            Some(NewtonStatus::Converged)
        } else if growth >= 3 {
            Some(NewtonStatus::Diverged)
        } else if it == opts.max_iters {
            Some(NewtonStatus::MaxIterations)
        } else {
            None
        };
        if let Some(status) = status {
            history.push(state);
            return Ok(NewtonOutcome { status, history });
        }
        let basis = make_basis(&curve, BasisKind::Fourier { max_mode: opts.modes });
        let jac = gpt_jacobian(&curve, lambda, k, basis)?;
        let jr = jac.real_matrix();
        state.alpha = opts.alpha_rel * jr.norm_squared();
        let coeffs = solve_ls(&jr, &stack(&residual_m), opts.alpha_rel)?;
        let mut h = vec![0.0; curve.len()];
        for (c, b) in coeffs.iter().zip(&jac.basis) {
            for (hj, bj) in h.iter_mut().zip(&b.values) {
                *hj += c * bj;
            }
        }
        let h2: Vec<f64> = h.iter().map(|v| v * v).collect();
        state.step_norm = curve.integrate(&h2).sqrt();
        history.push(state);
        curve = perturb_curve(&curve, &PerturbationField::from_values(&curve, h)?, opts.damping)?;
    }
    unreachable!("loop returns on the last iterate")
}
