//! Laplace and Helmholtz boundary operators on a [`BoundaryCurve`] and the
//! transmission solvers built from them.
//!
//! Conventions: `G(x) = (1/2pi) log|x|` and `G_k(x) = -(i/4) H0(k|x|)`, so that
//! `d/dnu S[phi]^(+/-) = (+/- 1/2 + K*) phi` with
//! `K*[phi](x) = (1/2pi) int <x - y, nu_x> / |x - y|^2 phi(y) ds(y)`.

use crate::bessel::{self, EULER};
use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;
use crate::spectral;
use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

pub type C64 = Complex64;
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    SingleLayer,
    NpAdjoint,
    NpDirect,
    HelmholtzSingle { k: f64 },
    HelmholtzNpAdjoint { k: f64 },
    DtnInterior,
    SurfaceLaplacian,
    Composite,
}

/// Dense Nystrom matrix acting on nodal densities.
#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    pub matrix: DMatrix<C64>,
    pub curve_id: String,
    pub kind: OperatorKind,
    pub includes_weights: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    pub values: DVector<C64>,
    pub curve_id: String,
}

impl DensityVector {
    pub fn new(curve: &BoundaryCurve, values: Vec<C64>) -> Result<Self> {
        if values.len() != curve.len() {
            return Err(Error::DimensionMismatch { expected: curve.len(), got: values.len() });
        }
        Ok(DensityVector { values: DVector::from_vec(values), curve_id: curve.id().to_string() })
    }

    pub fn zeros(curve: &BoundaryCurve) -> Self {
        DensityVector { values: DVector::zeros(curve.len()), curve_id: curve.id().to_string() }
    }

    pub fn as_slice(&self) -> &[C64] {
        self.values.as_slice()
    }
}

impl BoundaryOperator {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &DensityVector) -> Result<DensityVector> {
        if x.values.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: x.values.len() });
        }
        if x.curve_id != self.curve_id {
            return Err(Error::Contract(format!(
                "density lives on curve {} but operator on {}",
                x.curve_id, self.curve_id
            )));
        }
        Ok(DensityVector { values: &self.matrix * &x.values, curve_id: self.curve_id.clone() })
    }

    pub fn apply_slice(&self, x: &[C64]) -> Vec<C64> {
        (&self.matrix * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.re)
    }

    /// Row-major complex little-endian dump plus a JSON sidecar describing it.
    pub fn write_dump(&self, bin_path: &Path, json_path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 * self.n() * self.n());
        for i in 0..self.n() {
            for j in 0..self.n() {
                let z = self.matrix[(i, j)];
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        std::fs::write(bin_path, bytes)?;
        let sidecar = serde_json::json!({
            "n": self.n(),
            "kind": self.kind,
            "curve_hash": self.curve_id,
            "includes_weights": self.includes_weights,
            "layout": "row-major, interleaved re/im f64 little-endian",
        });
        let mut f = std::fs::File::create(json_path)?;
        serde_json::to_writer_pretty(&mut f, &sidecar)?;
        writeln!(f)?;
        Ok(())
    }
}

fn assemble<F: Fn(usize, usize) -> C64 + Sync>(n: usize, f: F) -> DMatrix<C64> {
    let rows: Vec<Vec<C64>> = (0..n).into_par_iter().map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn op(curve: &BoundaryCurve, matrix: DMatrix<C64>, kind: OperatorKind) -> BoundaryOperator {
    BoundaryOperator { matrix, curve_id: curve.id().to_string(), kind, includes_weights: true }
}

/// Weights `R_k` of the periodic log quadrature for `int log(4 sin^2((t - s)/2)) f(s) ds`,
/// indexed by the node offset `k`.
pub fn kress_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    (0..n)
        .map(|k| {
            let d = 2.0 * PI * k as f64 / n as f64;
            let mut sum = 0.0;
            for m in 1..half {
                sum += (m as f64 * d).cos() / m as f64;
            }
            let nyq = if k % 2 == 0 { 1.0 } else { -1.0 };
            -(2.0 * PI / half as f64) * sum - PI / (half * half) as f64 * nyq
        })
        .collect()
}

fn log4sin2(n: usize, i: usize, j: usize) -> f64 {
    let d = PI * (i as f64 - j as f64) / n as f64;
    (4.0 * d.sin().powi(2)).ln()
}

fn diff(curve: &BoundaryCurve, i: usize, j: usize) -> [f64; 2] {
    [curve.nodes[i][0] - curve.nodes[j][0], curve.nodes[i][1] - curve.nodes[j][1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn laplace_green(r: f64) -> f64 {
    r.ln() / (2.0 * PI)
}

pub fn helmholtz_green(k: f64, r: f64) -> C64 {
    let [j0, _, y0, _] = bessel::bessel_jy01(k * r);
    -0.25 * I * j0 + 0.25 * y0
}

/// `K*` with the smooth diagonal limit `H w / (4 pi)`.
pub fn assemble_np_adjoint(curve: &BoundaryCurve) -> BoundaryOperator {
    let m = assemble(curve.len(), |i, j| {
        if i == j {
            return c(curve.curvature[i] * curve.weights[i] / (4.0 * PI));
        }
        let r = diff(curve, i, j);
        c(dot(r, curve.normal[i]) / (2.0 * PI * dot(r, r)) * curve.weights[j])
    });
    op(curve, m, OperatorKind::NpAdjoint)
}

/// The double layer trace `K`, the `L^2(ds)` adjoint of `K*`.
pub fn assemble_np_direct(curve: &BoundaryCurve) -> BoundaryOperator {
    let m = assemble(curve.len(), |i, j| {
        if i == j {
            return c(curve.curvature[i] * curve.weights[i] / (4.0 * PI));
        }
        let r = diff(curve, j, i);
        c(dot(r, curve.normal[j]) / (2.0 * PI * dot(r, r)) * curve.weights[j])
    });
    op(curve, m, OperatorKind::NpDirect)
}

pub fn assemble_single_layer(curve: &BoundaryCurve) -> BoundaryOperator {
    let n = curve.len();
    let rw = kress_weights(n);
    let h = 2.0 * PI / n as f64;
    let m = assemble(n, |i, j| {
        let sj = curve.jacobian[j];
        let smooth = if i == j {
            (sj * sj).ln()
        } else {
            let r = diff(curve, i, j);
            dot(r, r).ln() - log4sin2(n, i, j)
        };
        c((rw[(i + n - j) % n] + h * smooth) * sj / (4.0 * PI))
    });
    op(curve, m, OperatorKind::SingleLayer)
}

/// Helmholtz single layer `S^k` and adjoint NP operator `K^{k,*}`.
pub fn assemble_helmholtz_ops(curve: &BoundaryCurve, k: f64) -> Result<(BoundaryOperator, BoundaryOperator)> {
    if !(k > 0.0) {
        return Err(Error::Contract(format!("wavenumber must be positive, got {k}")));
    }
    let n = curve.len();
    let rw = kress_weights(n);
    let h = 2.0 * PI / n as f64;
    let diag_const = -0.25 * I + c(((0.5 * k).ln() + EULER) / (2.0 * PI));
    let pairs: Vec<Vec<(C64, C64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let sj = curve.jacobian[j];
                    let rk = rw[(i + n - j) % n];
                    if i == j {
                        let m2 = (diag_const + c((sj * sj).ln() / (4.0 * PI))) * sj;
                        let l2 = curve.curvature[i] * sj / (4.0 * PI);
                        return (c(rk * sj / (4.0 * PI)) + h * m2, c(h * l2));
                    }
                    let rv = diff(curve, i, j);
                    let r = dot(rv, rv).sqrt();
                    let [j0, j1, y0, y1] = bessel::bessel_jy01(k * r);
                    let lg = log4sin2(n, i, j);
                    let m1 = j0 / (4.0 * PI) * sj;
                    let green = -0.25 * I * j0 + 0.25 * y0;
                    let m2 = green * sj - c(m1 * lg);
                    let proj = dot(rv, curve.normal[i]) / r;
                    let l1 = -k / (4.0 * PI) * j1 * proj * sj;
                    let kern = 0.25 * I * k * C64::new(j1, y1) * proj * sj;
                    let l2 = kern - c(l1 * lg);
                    (c(rk * m1) + h * m2, c(rk * l1) + h * l2)
                })
                .collect()
        })
        .collect();
    let s = DMatrix::from_fn(n, n, |i, j| pairs[i][j].0);
    let kk = DMatrix::from_fn(n, n, |i, j| pairs[i][j].1);
    Ok((op(curve, s, OperatorKind::HelmholtzSingle { k }), op(curve, kk, OperatorKind::HelmholtzNpAdjoint { k })))
}

/// `d^2/ds^2` through the parameter grid.
pub fn surface_laplacian(curve: &BoundaryCurve) -> BoundaryOperator {
    let n = curve.len();
    let d = spectral::diff_matrix(n);
    let ds = DMatrix::from_fn(n, n, |i, j| d[(i, j)] / curve.jacobian[i]);
    let lap = &ds * &ds;
    BoundaryOperator {
        matrix: lap.map(c),
        curve_id: curve.id().to_string(),
        kind: OperatorKind::SurfaceLaplacian,
        includes_weights: false,
    }
}

/// Interior Dirichlet-to-Neumann map `(-1/2 + K*) S^{-1}`.
///
/// Curves with diameter above 1 are shrunk first so that `S` stays invertible;
/// the map is then scaled back with `Lambda_D = s Lambda_{sD}`.
pub fn interior_dtn(curve: &BoundaryCurve) -> Result<BoundaryOperator> {
    let diam = curve.diameter();
    let (scale, work) = if diam > 1.0 {
        (1.0 / diam, curve.transformed(1.0 / diam, 0.0, [0.0, 0.0])?)
    } else {
        (1.0, curve.clone())
    };
    let s = assemble_single_layer(&work).matrix;
    let k = assemble_np_adjoint(&work).matrix;
    let sinv = s.clone().try_inverse().ok_or(Error::CapacityDegenerate)?;
    if norm1(&s) * norm1(&sinv) > 1e12 {
        return Err(Error::CapacityDegenerate);
    }
    let n = curve.len();
    let mut lhs = k;
    for i in 0..n {
        lhs[(i, i)] -= c(0.5);
    }
    let m = (lhs * sinv) * c(scale);
    Ok(BoundaryOperator { matrix: m, curve_id: curve.id().to_string(), kind: OperatorKind::DtnInterior, includes_weights: true })
}

pub(crate) fn norm1(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `lambda = (eps_c + eps_m) / (2 (eps_c - eps_m))`.
pub fn contrast_from_permittivity(eps_c: f64, eps_m: f64) -> Result<f64> {
    if eps_c == eps_m {
        return Err(Error::Contract("equal permittivities give no inclusion (lambda infinite)".into()));
    }
    Ok((eps_c + eps_m) / (2.0 * (eps_c - eps_m)))
}

/// Factorization of `lambda I - K*` reused across right-hand sides.
pub struct ElectrostaticSolver {
    pub lambda: f64,
    pub kstar: BoundaryOperator,
    matrix: DMatrix<C64>,
    lu: LU<C64, Dyn, Dyn>,
    lu_t: OnceLock<LU<C64, Dyn, Dyn>>,
}

impl ElectrostaticSolver {
    pub fn new(curve: &BoundaryCurve, lambda: f64) -> Result<Self> {
        if !(lambda.abs() > 0.5) {
            return Err(Error::Contract(format!("|lambda| must exceed 1/2, got {lambda}")));
        }
        let kstar = assemble_np_adjoint(curve);
        let n = curve.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { c(lambda) } else { c(0.0) };
            id - kstar.matrix[(i, j)]
        });
        let lu = matrix.clone().lu();
        Ok(ElectrostaticSolver { lambda, kstar, matrix, lu, lu_t: OnceLock::new() })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn solve(&self, g: &[C64]) -> Vec<C64> {
        let b = DVector::from_column_slice(g);
        self.lu.solve(&b).expect("lambda I - K* is invertible for |lambda| > 1/2").as_slice().to_vec()
    }

    /// Solves `(lambda I - K*)^T x = g`.
    pub fn solve_transpose(&self, g: &[C64]) -> Vec<C64> {
        let lu_t = self.lu_t.get_or_init(|| self.matrix.transpose().lu());
        let b = DVector::from_column_slice(g);
        lu_t.solve(&b).expect("transpose is invertible").as_slice().to_vec()
    }

    pub fn residual(&self, phi: &[C64], g: &[C64]) -> f64 {
        let r = &self.matrix * DVector::from_column_slice(phi) - DVector::from_column_slice(g);
        r.camax()
    }
}

/// Solves `(lambda I - K*) phi = g`.
pub fn solve_electrostatic(curve: &BoundaryCurve, lambda: f64, g: &DensityVector) -> Result<DensityVector> {
    if g.values.len() != curve.len() {
        return Err(Error::DimensionMismatch { expected: curve.len(), got: g.values.len() });
    }
    let solver = ElectrostaticSolver::new(curve, lambda)?;
    DensityVector::new(curve, solver.solve(g.as_slice()))
}

/// Material parameters of the Helmholtz transmission problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelmholtzParams {
    pub mu0: f64,
    pub mu1: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub omega: f64,
}

impl HelmholtzParams {
    pub fn k0(&self) -> f64 {
        self.omega * (self.mu0 * self.eps0).sqrt()
    }

    pub fn k1(&self) -> f64 {
        self.omega * (self.mu1 * self.eps1).sqrt()
    }

    /// Static contrast `(mu0 + mu1) / (2 (mu0 - mu1))`.
    pub fn lambda(&self) -> f64 {
        (self.mu0 + self.mu1) / (2.0 * (self.mu0 - self.mu1))
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.mu0, self.mu1, self.eps0, self.eps1, self.omega];
        if pos.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Contract(format!("material parameters and omega must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Block system for the densities `(phi, psi)` with interior field `S^{k1} phi` and
/// exterior field `u0 + S^{k0} psi`.
pub struct TransmissionSolver {
    pub params: HelmholtzParams,
    pub condition: f64,
    n: usize,
    system: DMatrix<C64>,
    inverse: DMatrix<C64>,
}

impl TransmissionSolver {
    pub fn new(curve: &BoundaryCurve, params: HelmholtzParams) -> Result<Self> {
        params.validate()?;
        let n = curve.len();
        let (s0, k0) = assemble_helmholtz_ops(curve, params.k0())?;
        let (s1, k1) = if params.k1() == params.k0() {
            (s0.clone(), k0.clone())
        } else {
            assemble_helmholtz_ops(curve, params.k1())?
        };
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 0.5 } else { 0.0 };
                a[(i, j)] = s1.matrix[(i, j)];
                a[(i, n + j)] = -s0.matrix[(i, j)];
                a[(n + i, j)] = (k1.matrix[(i, j)] - c(id)) / params.mu1;
                a[(n + i, n + j)] = -(k0.matrix[(i, j)] + c(id)) / params.mu0;
            }
        }
        let inverse = a.clone().try_inverse().ok_or_else(|| Error::Singular("transmission system".into()))?;
        let condition = norm1(&a) * norm1(&inverse);
        if !(condition < 1e12) {
            return Err(Error::IllConditioned {
                condition,
                context: format!("k1 = {} is close to an interior resonance", params.k1()),
            });
        }
        Ok(TransmissionSolver { params, condition, n, system: a, inverse })
    }

    /// Returns `(phi, psi)` for incident trace `u0` and normal derivative `du0`.
    pub fn solve(&self, u0: &[C64], du0: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.n;
        let mut rhs = DVector::zeros(2 * n);
        for i in 0..n {
            rhs[i] = u0[i];
            rhs[n + i] = du0[i] / self.params.mu0;
        }
        let mut x = &self.inverse * &rhs;
        // one step of refinement keeps the residual at working precision
        let r = &rhs - &self.system * &x;
        x += &self.inverse * r;
        (x.rows(0, n).iter().copied().collect(), x.rows(n, n).iter().copied().collect())
    }

    pub fn residual(&self, phi: &[C64], psi: &[C64], u0: &[C64], du0: &[C64]) -> f64 {
        let n = self.n;
        let x = DVector::from_iterator(2 * n, phi.iter().chain(psi.iter()).copied());
        let mut rhs = DVector::zeros(2 * n);
        for i in 0..n {
            rhs[i] = u0[i];
            rhs[n + i] = du0[i] / self.params.mu0;
        }
        (&self.system * x - rhs).camax()
    }
}

pub fn solve_helmholtz_transmission(
    curve: &BoundaryCurve,
    params: HelmholtzParams,
    u0: &DensityVector,
    du0: &DensityVector,
) -> Result<(DensityVector, DensityVector)> {
    let solver = TransmissionSolver::new(curve, params)?;
    let (phi, psi) = solver.solve(u0.as_slice(), du0.as_slice());
    Ok((DensityVector::new(curve, phi)?, DensityVector::new(curve, psi)?))
}

/// Single layer potential at points away from the curve by the trapezoid rule.
/// `k = None` selects the Laplace kernel. Accuracy is spectral once a target is
/// a few node spacings from the curve; use [`NearEvaluator`] closer in.
pub fn eval_single_layer(curve: &BoundaryCurve, density: &[C64], targets: &[[f64; 2]], k: Option<f64>) -> Result<Vec<C64>> {
    if density.len() != curve.len() {
        return Err(Error::DimensionMismatch { expected: curve.len(), got: density.len() });
    }
    targets
        .iter()
        .map(|x| {
            let mut acc = c(0.0);
            for j in 0..curve.len() {
                let r = (x[0] - curve.nodes[j][0]).hypot(x[1] - curve.nodes[j][1]);
                if r < 1e-10 {
                    return Err(Error::TargetOnBoundary { distance: r });
                }
                let g = match k {
                    None => c(laplace_green(r)),
                    Some(k) => helmholtz_green(k, r),
                };
                acc += g * density[j] * curve.weights[j];
            }
            Ok(acc)
        })
        .collect()
}

/// Evaluates `S[phi]` (Laplace or Helmholtz) at `x_i + delta nu_i`, including `delta = 0`
/// and offsets much smaller than the node spacing.
///
/// The kernel is written as `L(r^2) log r^2 + Q(r^2)`. Near the foot point the distance
/// behaves like `A (4 sin^2(u/2) + c^2)`, whose logarithm has the closed-form Fourier series
/// `-log rho - 2 sum rho^k cos(k u) / k` with `rho + 1/rho = 2 + c^2`; that part is integrated
/// exactly against the trigonometric interpolant and the remainder by the trapezoid rule on
/// a refined grid.
pub struct NearEvaluator<'a> {
    curve: &'a BoundaryCurve,
    factor: usize,
    nodes: Vec<[f64; 2]>,
    speed: Vec<f64>,
    density: Vec<C64>,
    laplace_coeffs: Vec<C64>,
}

impl<'a> NearEvaluator<'a> {
    pub fn new(curve: &'a BoundaryCurve, density: &[C64], factor: usize) -> Result<Self> {
        if density.len() != curve.len() {
            return Err(Error::DimensionMismatch { expected: curve.len(), got: density.len() });
        }
        let col = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..curve.len()).map(f).collect() };
        let xs = spectral::upsample(&col(&|j| curve.nodes[j][0]), factor);
        let ys = spectral::upsample(&col(&|j| curve.nodes[j][1]), factor);
        let dx = spectral::upsample(&col(&|j| curve.d1[j][0]), factor);
        let dy = spectral::upsample(&col(&|j| curve.d1[j][1]), factor);
        let nodes: Vec<[f64; 2]> = xs.iter().zip(&ys).map(|(&x, &y)| [x, y]).collect();
        let speed: Vec<f64> = dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b)).collect();
        let density = spectral::upsample_complex(density, factor);
        let g: Vec<C64> = density.iter().zip(&speed).map(|(p, s)| p * s / (4.0 * PI)).collect();
        let laplace_coeffs = spectral::forward(&g);
        Ok(NearEvaluator { curve, factor, nodes, speed, density, laplace_coeffs })
    }

    pub fn eval(&self, node: usize, delta: f64, k: Option<f64>) -> C64 {
        let m = self.nodes.len();
        let l0 = node * self.factor;
        let t0 = 2.0 * PI * l0 as f64 / m as f64;
        let nu = self.curve.normal[node];
        let x0 = self.curve.nodes[node];
        let target = [x0[0] + delta * nu[0], x0[1] + delta * nu[1]];
        let d1 = self.curve.d1[node];
        let d2 = self.curve.d2[node];
        let a = dot(d1, d1) - delta * dot(d2, nu);
        let c2 = delta * delta / a;
        let log_rho = (0.5 * c2 - c2.sqrt() * (1.0 + 0.25 * c2).sqrt()).ln_1p();
        let log_a = a.ln();
        let h = 2.0 * PI / m as f64;

        let mut trap = c(0.0);
        let mut f_vals: Vec<C64> = Vec::new();
        if k.is_some() {
            f_vals.reserve(m);
        }
        for l in 0..m {
            let u = h * l as f64 - t0;
            let p = self.nodes[l];
            let r2 = (target[0] - p[0]).powi(2) + (target[1] - p[1]).powi(2);
            let g4 = 4.0 * (0.5 * u).sin().powi(2) + c2;
            let rem = if l == l0 && delta == 0.0 { 0.0 } else { (r2 / (a * g4)).ln() };
            let g = self.density[l] * self.speed[l];
            match k {
                None => trap += g * ((log_a + rem) / (4.0 * PI)),
                Some(k) => {
                    let (lcoef, q) = if r2 == 0.0 {
                        (1.0 / (4.0 * PI), -0.25 * I + c(((0.5 * k).ln() + EULER) / (2.0 * PI)))
                    } else {
                        let r = r2.sqrt();
                        let l = bessel::bessel_jy01(k * r)[0] / (4.0 * PI);
                        (l, helmholtz_green(k, r) - c(l * r2.ln()))
                    };
                    let f = g * lcoef;
                    f_vals.push(f);
                    trap += f * (log_a + rem) + g * q;
                }
            }
        }
        trap *= h;
        let coeffs = match k {
            None => self.laplace_coeffs.clone(),
            Some(_) => spectral::forward(&f_vals),
        };
        let mut exact = coeffs[0] * (-2.0 * PI * log_rho);
        for (idx, ck) in coeffs.iter().enumerate().skip(1) {
            let kk = spectral::wavenumber(idx, m);
            let ka = kk.unsigned_abs() as f64;
            let w = -2.0 * PI * (ka * log_rho).exp() / ka;
            if m % 2 == 0 && idx == m / 2 {
                exact += ck * w * (ka * t0).cos();
            } else {
                exact += ck * w * C64::from_polar(1.0, kk as f64 * t0);
            }
        }
        trap + exact
    }
}
