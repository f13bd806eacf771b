//! First-order shape derivatives of `K*` and of the GPTs under `x -> x + eps h(x) nu(x)`.

use crate::error::{Error, Result};
use crate::geometry::{curvature_profile, perturb_curve, BoundaryCurve, PerturbationField};
use crate::gpt::{compute_gpt, harmonic_data, orders, GptMatrix, HarmonicData};
use crate::potentials::{
    assemble_np_adjoint, c, interior_dtn, BoundaryOperator, ElectrostaticSolver, HelmholtzParams, OperatorKind, C64,
};
use crate::scattering::{compute_sc, ScatteringMatrix};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::f64::consts::PI;

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn check_len(curve: &BoundaryCurve, h: &PerturbationField) -> Result<()> {
    if h.values.len() != curve.len() {
        return Err(Error::DimensionMismatch { expected: curve.len(), got: h.values.len() });
    }
    Ok(())
}

/// Nystrom matrix of the derivative of the pulled-back `K*`:
///
/// `k1(x, y) = (1/2pi) [ <dr, nu_x>/r^2 - h_s(x) <r, tau_x>/r^2 - 2 <r, dr><r, nu_x>/r^4
///             + h(y) H(y) <r, nu_x>/r^2 ]`, `r = x - y`, `dr = h(x) nu(x) - h(y) nu(y)`,
///
/// with diagonal limit `-h_ss(x) / (4 pi)`.
pub fn assemble_k1(curve: &BoundaryCurve, h: &PerturbationField) -> Result<BoundaryOperator> {
    check_len(curve, h)?;
    let n = curve.len();
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return c(-h.dss[i] * curve.weights[i] / (4.0 * PI));
                    }
                    let x = curve.nodes[i];
                    let y = curve.nodes[j];
                    let r = [x[0] - y[0], x[1] - y[1]];
                    let r2 = dot(r, r);
                    let (nx, ny) = (curve.normal[i], curve.normal[j]);
                    let dr = [h.values[i] * nx[0] - h.values[j] * ny[0], h.values[i] * nx[1] - h.values[j] * ny[1]];
                    let rn = dot(r, nx);
                    let k = dot(dr, nx) / r2 - h.ds[i] * dot(r, curve.tangent[i]) / r2 - 2.0 * dot(r, dr) * rn / (r2 * r2)
                        + h.values[j] * curve.curvature[j] * rn / r2;
                    c(k / (2.0 * PI) * curve.weights[j])
                })
                .collect()
        })
        .collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(BoundaryOperator { matrix, curve_id: curve.id().to_string(), kind: OperatorKind::Composite, includes_weights: true })
}

/// Pieces of `K1 = diag(h) A + B diag(h) + diag(h_s) C - diag(h_ss w / 4pi)`.
struct K1Parts {
    a: DMatrix<C64>,
    b: DMatrix<C64>,
    c: DMatrix<C64>,
}

fn k1_parts(curve: &BoundaryCurve) -> K1Parts {
    let n = curve.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    let mut cm = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let x = curve.nodes[i];
            let y = curve.nodes[j];
            let r = [x[0] - y[0], x[1] - y[1]];
            let r2 = dot(r, r);
            let (nx, ny) = (curve.normal[i], curve.normal[j]);
            let rn = dot(r, nx);
            let s = curve.weights[j] / (2.0 * PI);
            a[(i, j)] = c((1.0 / r2 - 2.0 * rn * rn / (r2 * r2)) * s);
            b[(i, j)] = c((-dot(ny, nx) / r2 + 2.0 * dot(r, ny) * rn / (r2 * r2) + curve.curvature[j] * rn / r2) * s);
            cm[(i, j)] = c(-dot(r, curve.tangent[i]) / r2 * s);
        }
    }
    K1Parts { a, b, c: cm }
}

/// `max-row-sum` norm of `K*(D_eps) - K*(D) - eps K1`, with the perturbed operator pulled
/// back node by node.
pub fn k1_fd_residual(curve: &BoundaryCurve, h: &PerturbationField, eps: f64) -> Result<f64> {
    let k0 = assemble_np_adjoint(curve).matrix;
    let ke = assemble_np_adjoint(&perturb_curve(curve, h, eps)?).matrix;
    let k1 = assemble_k1(curve, h)?.matrix;
    let r = ke - k0 - k1 * c(eps);
    Ok((0..r.nrows()).map(|i| r.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max))
}

/// The four contributions to `M1`, each a `2K x 2K` matrix.
#[derive(Debug, Clone)]
pub struct GptSensitivityTerms {
    /// `int h (d/dnu conj f_m) phi_n`.
    pub boundary_motion: DMatrix<C64>,
    /// `<conj f_m, T^{-1} K1 phi_n>` with `T = lambda I - K*`.
    pub operator_variation: DMatrix<C64>,
    /// `<conj f_m, h H phi_n - T^{-1}(h H g_n)>`.
    pub commutator: DMatrix<C64>,
    /// `-<conj f_m, T^{-1} d/ds(h d/ds f_n)>`.
    pub surface: DMatrix<C64>,
}

impl GptSensitivityTerms {
    pub fn total(&self) -> DMatrix<C64> {
        &self.boundary_motion + &self.operator_variation + &self.commutator + &self.surface
    }
}

fn pair(curve: &BoundaryCurve, a: &[C64], b: &[C64]) -> C64 {
    (0..curve.len()).map(|j| a[j] * b[j] * curve.weights[j]).sum()
}

/// The four terms of `M1` assembled directly with an explicit `K1`.
pub fn gpt_sensitivity_terms(curve: &BoundaryCurve, lambda: f64, h: &PerturbationField, k: usize) -> Result<GptSensitivityTerms> {
    check_len(curve, h)?;
    let solver = ElectrostaticSolver::new(curve, lambda)?;
    let k1 = assemble_k1(curve, h)?;
    let ord = orders(k);
    let data: Vec<HarmonicData> = ord.iter().map(|&n| harmonic_data(curve, n)).collect();
    let conj: Vec<HarmonicData> = ord.iter().map(|&m| harmonic_data(curve, -m)).collect();
    let n_nodes = curve.len();
    let size = ord.len();
    let mut terms = GptSensitivityTerms {
        boundary_motion: DMatrix::zeros(size, size),
        operator_variation: DMatrix::zeros(size, size),
        commutator: DMatrix::zeros(size, size),
        surface: DMatrix::zeros(size, size),
    };
    for (b, d) in data.iter().enumerate() {
        let phi = solver.solve(&d.dnu);
        let hphi: Vec<C64> = (0..n_nodes).map(|j| phi[j] * h.values[j]).collect();
        let v2 = solver.solve(&k1.apply_slice(&phi));
        let hh_phi: Vec<C64> = (0..n_nodes).map(|j| phi[j] * h.values[j] * curve.curvature[j]).collect();
        let hh_g: Vec<C64> = (0..n_nodes).map(|j| d.dnu[j] * h.values[j] * curve.curvature[j]).collect();
        let v3 = solver.solve(&hh_g);
        let div: Vec<C64> = (0..n_nodes).map(|j| d.ds[j] * h.ds[j] + d.dss[j] * h.values[j]).collect();
        let v4 = solver.solve(&div);
        for (a, f) in conj.iter().enumerate() {
            terms.boundary_motion[(a, b)] = pair(curve, &f.dnu, &hphi);
            terms.operator_variation[(a, b)] = pair(curve, &f.value, &v2);
            terms.commutator[(a, b)] = pair(curve, &f.value, &hh_phi) - pair(curve, &f.value, &v3);
            terms.surface[(a, b)] = -pair(curve, &f.value, &v4);
        }
    }
    Ok(terms)
}

/// First-order variation `M1` of the GPT matrix in the direction `h`.
pub fn gpt_sensitivity(curve: &BoundaryCurve, lambda: f64, h: &PerturbationField, k: usize) -> Result<GptMatrix> {
    let terms = gpt_sensitivity_terms(curve, lambda, h, k)?;
    Ok(GptMatrix { order: k, entries: terms.total(), lambda, curve_id: curve.id().to_string() })
}

/// The boundary-motion term with `d/dnu conj f_m` replaced by the discrete interior DtN map
/// applied to the trace of `conj f_m`.
pub fn boundary_motion_via_dtn(curve: &BoundaryCurve, lambda: f64, h: &PerturbationField, k: usize) -> Result<DMatrix<C64>> {
    let solver = ElectrostaticSolver::new(curve, lambda)?;
    let dtn = interior_dtn(curve)?;
    let ord = orders(k);
    let mut out = DMatrix::zeros(ord.len(), ord.len());
    let lam_f: Vec<Vec<C64>> = ord.iter().map(|&m| dtn.apply_slice(&harmonic_data(curve, -m).value)).collect();
    for (b, &n) in ord.iter().enumerate() {
        let phi = solver.solve(&harmonic_data(curve, n).dnu);
        let hphi: Vec<C64> = (0..curve.len()).map(|j| phi[j] * h.values[j]).collect();
        for a in 0..ord.len() {
            out[(a, b)] = pair(curve, &lam_f[a], &hphi);
        }
    }
    Ok(out)
}

/// Central difference `(M(D_{+eps}) - M(D_{-eps})) / (2 eps)`.
pub fn gpt_sensitivity_fd(curve: &BoundaryCurve, lambda: f64, h: &PerturbationField, k: usize, eps: f64) -> Result<GptMatrix> {
    let plus = compute_gpt(&perturb_curve(curve, h, eps)?, lambda, k)?;
    let minus = compute_gpt(&perturb_curve(curve, h, -eps)?, lambda, k)?;
    let entries = (plus.entries - minus.entries) / c(2.0 * eps);
    Ok(GptMatrix { order: k, entries, lambda, curve_id: curve.id().to_string() })
}

/// Central difference of the scattering coefficients along `h`.
pub fn sc_sensitivity_fd(
    curve: &BoundaryCurve,
    params: HelmholtzParams,
    h: &PerturbationField,
    k: usize,
    eps: f64,
) -> Result<ScatteringMatrix> {
    let plus = compute_sc(&perturb_curve(curve, h, eps)?, params, k)?;
    let minus = compute_sc(&perturb_curve(curve, h, -eps)?, params, k)?;
    Ok(ScatteringMatrix { entries: (plus.entries - minus.entries) / c(2.0 * eps), ..plus })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    /// One periodic Gaussian bump per node, width in node spacings.
    NodeBumps { width_nodes: f64 },
    /// `1, cos t, sin t, ..., cos(s t), sin(s t)`.
    Fourier { max_mode: u32 },
}

pub fn make_basis(curve: &BoundaryCurve, kind: BasisKind) -> Vec<PerturbationField> {
    match kind {
        BasisKind::NodeBumps { width_nodes } => {
            (0..curve.len()).map(|b| PerturbationField::node_bump(curve, b, width_nodes)).collect()
        }
        BasisKind::Fourier { max_mode } => {
            let mut out = vec![PerturbationField::fourier(curve, 0, false)];
            for m in 1..=max_mode {
                out.push(PerturbationField::fourier(curve, m, false));
                out.push(PerturbationField::fourier(curve, m, true));
            }
            out
        }
    }
}

/// Linear map `h -> M1(h)`.
///
/// Every entry of `M1` is a nodal functional `sum_i a_i h_i + b_i h_s,i + c_i h_ss,i`; the
/// coefficient rows are computed once from forward and adjoint solves, after which any
/// direction (and every basis column) costs a dot product.
#[derive(Debug, Clone)]
pub struct SensitivityJacobian {
    pub order: usize,
    pub lambda: f64,
    pub basis: Vec<PerturbationField>,
    /// `columns[b]` is `M1` for `basis[b]`.
    pub columns: Vec<DMatrix<C64>>,
    coeff_h: DMatrix<C64>,
    coeff_hs: DMatrix<C64>,
    coeff_hss: DMatrix<C64>,
}

impl SensitivityJacobian {
    pub fn evaluate(&self, h: &PerturbationField) -> Result<DMatrix<C64>> {
        let n = self.coeff_h.ncols();
        if h.values.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.values.len() });
        }
        let to_c = |v: &Vec<f64>| DVector::from_iterator(n, v.iter().map(|x| c(*x)));
        let flat = &self.coeff_h * to_c(&h.values) + &self.coeff_hs * to_c(&h.ds) + &self.coeff_hss * to_c(&h.dss);
        let size = 2 * self.order;
        Ok(DMatrix::from_fn(size, size, |a, b| flat[a * size + b]))
    }

    /// Real matrix with one column per basis element: real parts of all entries
    /// (row-major over `(m, n)`) stacked above imaginary parts.
    pub fn real_matrix(&self) -> DMatrix<f64> {
        let size = 2 * self.order;
        let rows = size * size;
        DMatrix::from_fn(2 * rows, self.columns.len(), |r, b| {
            let z = self.columns[b][((r % rows) / size, r % size)];
            if r < rows {
                z.re
            } else {
                z.im
            }
        })
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.columns.iter().map(|m| m.norm()).collect()
    }
}

pub fn gpt_jacobian(curve: &BoundaryCurve, lambda: f64, k: usize, basis: Vec<PerturbationField>) -> Result<SensitivityJacobian> {
    for h in &basis {
        check_len(curve, h)?;
    }
    let solver = ElectrostaticSolver::new(curve, lambda)?;
    let parts = k1_parts(curve);
    let ord = orders(k);
    let size = ord.len();
    let n = curve.len();
    let data: Vec<HarmonicData> = ord.iter().map(|&m| harmonic_data(curve, m)).collect();
    let conj: Vec<HarmonicData> = ord.iter().map(|&m| harmonic_data(curve, -m)).collect();
    let phis: Vec<Vec<C64>> = data.iter().map(|d| solver.solve(&d.dnu)).collect();
    let chis: Vec<Vec<C64>> = conj
        .iter()
        .map(|f| {
            let wf: Vec<C64> = (0..n).map(|j| f.value[j] * curve.weights[j]).collect();
            solver.solve_transpose(&wf)
        })
        .collect();
    let a_phi: Vec<DVector<C64>> = phis.iter().map(|p| &parts.a * DVector::from_column_slice(p)).collect();
    let c_phi: Vec<DVector<C64>> = phis.iter().map(|p| &parts.c * DVector::from_column_slice(p)).collect();
    let bt = parts.b.transpose();
    let bt_chi: Vec<DVector<C64>> = chis.iter().map(|x| &bt * DVector::from_column_slice(x)).collect();

    let mut coeff_h = DMatrix::zeros(size * size, n);
    let mut coeff_hs = DMatrix::zeros(size * size, n);
    let mut coeff_hss = DMatrix::zeros(size * size, n);
    for a in 0..size {
        let f = &conj[a];
        let chi = &chis[a];
        for b in 0..size {
            let row = a * size + b;
            let d = &data[b];
            let phi = &phis[b];
            for i in 0..n {
                let w = curve.weights[i];
                let hcurv = curve.curvature[i];
                coeff_h[(row, i)] = f.dnu[i] * phi[i] * w + f.value[i] * phi[i] * (w * hcurv) - chi[i] * d.dnu[i] * hcurv
                    - chi[i] * d.dss[i]
                    + chi[i] * a_phi[b][i]
                    + bt_chi[a][i] * phi[i];
                coeff_hs[(row, i)] = -chi[i] * d.ds[i] + chi[i] * c_phi[b][i];
                coeff_hss[(row, i)] = -chi[i] * phi[i] * (w / (4.0 * PI));
            }
        }
    }
    let mut jac = SensitivityJacobian { order: k, lambda, basis: Vec::new(), columns: Vec::new(), coeff_h, coeff_hs, coeff_hss };
    let columns: Result<Vec<DMatrix<C64>>> = basis.iter().map(|h| jac.evaluate(h)).collect();
    jac.columns = columns?;
    jac.basis = basis;
    Ok(jac)
}

/// Pairs `(s_b, ||J[b]||_F)` for a node-bump Jacobian, `s_b` being the arclength at node `b`.
pub fn sensitivity_map(curve: &BoundaryCurve, jacobian: &SensitivityJacobian) -> Result<Vec<(f64, f64)>> {
    if jacobian.columns.len() != curve.len() {
        return Err(Error::Contract(format!(
            "sensitivity map needs the per-node bump basis ({} columns), got {}",
            curve.len(),
            jacobian.columns.len()
        )));
    }
    let profile = curvature_profile(curve);
    Ok(profile.iter().zip(jacobian.column_norms()).map(|((s, _), v)| (*s, v)).collect())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = 0.5 * (i + j) as f64;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_shape, ShapeSpec};

    #[test]
    fn k1_zero_for_zero_field() {
        let curve = make_shape(&ShapeSpec::Kite { scale: 1.0 }, 64).unwrap();
        let k1 = assemble_k1(&curve, &PerturbationField::constant(&curve, 0.0)).unwrap();
        assert!(k1.matrix.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn k1_vanishes_for_dilated_circle() {
        let curve = make_shape(&ShapeSpec::Circle { radius: 0.9 }, 128).unwrap();
        let k1 = assemble_k1(&curve, &PerturbationField::constant(&curve, 1.0)).unwrap();
        assert!(k1.matrix.iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn parts_reassemble_k1() {
        let curve = make_shape(&ShapeSpec::Ellipse { a: 1.0, b: 0.6 }, 64).unwrap();
        let h = PerturbationField::from_fn(&curve, |t| (2.0 * t).cos() + 0.3 * t.sin());
        let direct = assemble_k1(&curve, &h).unwrap().matrix;
        let p = k1_parts(&curve);
        let n = curve.len();
        for i in 0..n {
            for j in 0..n {
                let mut v = p.a[(i, j)] * h.values[i] + p.b[(i, j)] * h.values[j] + p.c[(i, j)] * h.ds[i];
                if i == j {
                    v -= c(h.dss[i] * curve.weights[i] / (4.0 * PI));
                }
                assert!((v - direct[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 1.0, 2.0], &[5.0, 5.0, 9.0]) - 1.0).abs() < 1e-15);
    }
}
