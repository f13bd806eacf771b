use nalgebra::{DMatrix, SymmetricEigen};
use npsense::bessel;
use npsense::geometry::{make_shape, ShapeSpec};
use npsense::potentials::*;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_density(curve: &npsense::BoundaryCurve, rng: &mut ChaCha8Rng, modes: i32) -> Vec<C64> {
    let coeffs: Vec<(i32, C64)> =
        (-modes..=modes).map(|m| (m, C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))).collect();
    (0..curve.len())
        .map(|j| coeffs.iter().map(|(m, a)| a * C64::from_polar(1.0, *m as f64 * curve.param(j))).sum())
        .collect()
}

// one-sided second-order difference quotient along the normal
fn normal_fd(ne: &NearEvaluator, i: usize, delta: f64, k: Option<f64>) -> C64 {
    let s0 = ne.eval(i, 0.0, k);
    let s1 = ne.eval(i, delta, k);
    let s2 = ne.eval(i, 2.0 * delta, k);
    (-3.0 * s0 + 4.0 * s1 - s2) / (2.0 * delta)
}

fn jump_errors(k: Option<f64>, draws: usize) -> f64 {
    let curve = make_shape(&ShapeSpec::Kite { scale: 0.5 }, 256).unwrap();
    let kstar = match k {
        None => assemble_np_adjoint(&curve),
        Some(k) => assemble_helmholtz_ops(&curve, k).unwrap().1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let phi = random_density(&curve, &mut rng, 6);
        let kphi = kstar.apply_slice(&phi);
        let ne = NearEvaluator::new(&curve, &phi, 8).unwrap();
        for i in (0..256).step_by(8) {
            let outer = normal_fd(&ne, i, 1e-4, k);
            let inner = normal_fd(&ne, i, -1e-4, k);
            worst = worst.max((outer - (kphi[i] + 0.5 * phi[i])).norm());
            worst = worst.max((inner - (kphi[i] - 0.5 * phi[i])).norm());
        }
    }
    worst
}

#[test]
fn laplace_jump_relation() {
    let err = jump_errors(None, 20);
    assert!(err < 1e-5, "jump error {err:e}");
}

#[test]
fn helmholtz_jump_relation() {
    let err = jump_errors(Some(0.8), 4);
    assert!(err < 1e-5, "jump error {err:e}");
}

#[test]
fn np_half_eigenvalue_and_bound() {
    for spec in [ShapeSpec::Kite { scale: 1.0 }, ShapeSpec::Ellipse { a: 2.0, b: 1.0 }] {
        let curve = make_shape(&spec, 128).unwrap();
        let k = assemble_np_adjoint(&curve).real_part();
        // left eigenvector is the weight vector: sum_i w_i K_ij = w_j / 2
        for j in 0..128 {
            let s: f64 = (0..128).map(|i| curve.weights[i] * k[(i, j)]).sum();
            assert!((s - 0.5 * curve.weights[j]).abs() < 1e-10);
        }
        let eig = k.complex_eigenvalues();
        assert!(eig.iter().all(|z| z.re <= 0.5 + 1e-8 && z.im.abs() < 1e-8));
    }
}

#[test]
fn np_direct_is_weighted_adjoint() {
    let curve = make_shape(&ShapeSpec::Kite { scale: 1.0 }, 64).unwrap();
    let ks = assemble_np_adjoint(&curve).real_part();
    let kd = npsense::potentials::assemble_np_direct(&curve).real_part();
    for i in 0..64 {
        for j in 0..64 {
            let lhs = curve.weights[i] * ks[(i, j)];
            let rhs = curve.weights[j] * kd[(j, i)];
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }
}

#[test]
fn dtn_reproduces_harmonic_polynomial_on_ellipse() {
    let curve = make_shape(&ShapeSpec::Ellipse { a: 2.0, b: 1.0 }, 256).unwrap();
    let dtn = interior_dtn(&curve).unwrap();
    // u = x^2 - y^2, grad u = (2x, -2y)
    let f: Vec<C64> = curve.nodes.iter().map(|p| C64::new(p[0] * p[0] - p[1] * p[1], 0.0)).collect();
    let out = dtn.apply_slice(&f);
    for j in 0..256 {
        let p = curve.nodes[j];
        let nu = curve.normal[j];
        let exact = 2.0 * p[0] * nu[0] - 2.0 * p[1] * nu[1];
        assert!((out[j].re - exact).abs() < 1e-8, "node {j}: {} vs {exact}", out[j].re);
    }
    let ones = vec![C64::new(1.0, 0.0); 256];
    assert!(dtn.apply_slice(&ones).iter().all(|z| z.norm() < 1e-9));
}

#[test]
fn dtn_is_self_adjoint() {
    let curve = make_shape(&ShapeSpec::Kite { scale: 1.0 }, 256).unwrap();
    let dtn = interior_dtn(&curve).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let f: Vec<C64> = random_density(&curve, &mut rng, 8).iter().map(|z| C64::new(z.re, 0.0)).collect();
        let g: Vec<C64> = random_density(&curve, &mut rng, 8).iter().map(|z| C64::new(z.re, 0.0)).collect();
        let lf = dtn.apply_slice(&f);
        let lg = dtn.apply_slice(&g);
        let a: C64 = (0..256).map(|j| f[j] * lg[j] * curve.weights[j]).sum();
        let b: C64 = (0..256).map(|j| lf[j] * g[j] * curve.weights[j]).sum();
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn weyl_count_for_ellipse_laplacian() {
    let curve = make_shape(&ShapeSpec::Ellipse { a: 2.0, b: 1.0 }, 256).unwrap();
    let lap = surface_laplacian(&curve).real_part();
    // symmetric form in the weighted inner product
    let n = curve.len();
    let sq: Vec<f64> = curve.weights.iter().map(|w| w.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| -sq[i] * lap[(i, j)] / sq[j]);
    let sym = 0.5 * (&b + b.transpose());
    let eig = SymmetricEigen::new(sym).eigenvalues;
    for cap in [25.0, 100.0, 225.0, 400.0] {
        let count = eig.iter().filter(|&&e| e < cap).count() as f64;
        let weyl = curve.total_length / PI * f64::sqrt(cap);
        assert!((count - weyl).abs() <= 2.0, "cap {cap}: {count} vs {weyl}");
    }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

#[test]
fn helmholtz_to_laplace_limit() {
    let curve = make_shape(&ShapeSpec::Ellipse { a: 1.0, b: 0.5 }, 128).unwrap();
    let k0 = assemble_np_adjoint(&curve).matrix;
    let s0 = assemble_single_layer(&curve).matrix;
    let n = curve.len();
    // projector onto mean-zero densities
    let total: f64 = curve.weights.iter().sum();
    let p = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        C64::new(id - curve.weights[j] / total, 0.0)
    });
    let omegas = [0.1, 0.05, 0.025, 0.0125];
    let mut dk = Vec::new();
    let mut ds = Vec::new();
    for &w in &omegas {
        let (sk, kk) = assemble_helmholtz_ops(&curve, w).unwrap();
        dk.push(((&kk.matrix - &k0) * &p).norm());
        ds.push((&p.transpose() * (&sk.matrix - &s0) * &p).norm());
    }
    let slope_k = fit_slope(&omegas[..3], &dk[..3]);
    let slope_s = fit_slope(&omegas[..3], &ds[..3]);
    println!("K^k* - K* slope {slope_k:.4}, S^k - S off-constant slope {slope_s:.4}");
    // The 2D kernels differ by k^2 r^2 (a log(k r) + b), so the decay is k^2 |log k| rather
    // than a clean k^2: the raw slope sits visibly below 2, and the two-term model fits exactly.
    for (slope, data) in [(slope_k, &dk), (slope_s, &ds)] {
        assert!(slope > 1.6 && slope < 1.95, "slope {slope}");
        assert!(log_model_misfit(&omegas, data) < 1e-3);
    }
}

// For matrices A, B the norm of w^2 (A log w + B) squared is a quadratic in log w. Fit it on
// the first three frequencies and return the relative misfit on the remaining ones.
fn log_model_misfit(ws: &[f64], ys: &[f64]) -> f64 {
    let l: Vec<f64> = ws.iter().map(|w| w.ln()).collect();
    let q: Vec<f64> = ws.iter().zip(ys).map(|(w, y)| (y / (w * w)).powi(2)).collect();
    let m = nalgebra::Matrix3::from_fn(|i, j| l[i].powi(j as i32));
    let coef = m.lu().solve(&nalgebra::Vector3::new(q[0], q[1], q[2])).unwrap();
    (3..ws.len())
        .map(|i| {
            let pred = coef[0] + coef[1] * l[i] + coef[2] * l[i] * l[i];
            (pred.sqrt() * ws[i] * ws[i] - ys[i]).abs() / ys[i]
        })
        .fold(0.0, f64::max)
}

#[test]
fn transmission_without_contrast_has_no_scattering() {
    let curve = make_shape(&ShapeSpec::Kite { scale: 0.5 }, 128).unwrap();
    let params = HelmholtzParams { mu0: 1.0, mu1: 1.0, eps0: 1.0, eps1: 1.0, omega: 0.4 };
    let u0: Vec<C64> = curve.nodes.iter().map(|p| C64::from_polar(1.0, 0.4 * p[0])).collect();
    let du0: Vec<C64> =
        curve.nodes.iter().zip(&curve.normal).map(|(p, nu)| C64::new(0.0, 0.4 * nu[0]) * C64::from_polar(1.0, 0.4 * p[0])).collect();
    let solver = TransmissionSolver::new(&curve, params).unwrap();
    let (phi, psi) = solver.solve(&u0, &du0);
    assert!(psi.iter().all(|z| z.norm() < 1e-10));
    assert!(solver.residual(&phi, &psi, &u0, &du0) < 1e-10);
}

#[test]
fn transmission_on_disk_matches_series() {
    let r0 = 0.8;
    let curve = make_shape(&ShapeSpec::Circle { radius: r0 }, 128).unwrap();
    let params = HelmholtzParams { mu0: 1.0, mu1: 2.0, eps0: 1.0, eps1: 3.0, omega: 0.6 };
    let (k0, k1) = (params.k0(), params.k1());
    let u0: Vec<C64> = vec![C64::new(bessel::bessel_j(0, k0 * r0), 0.0); 128];
    let du0: Vec<C64> = vec![C64::new(k0 * bessel::bessel_j_prime(0, k0 * r0), 0.0); 128];
    let solver = TransmissionSolver::new(&curve, params).unwrap();
    let (phi, psi) = solver.solve(&u0, &du0);
    assert!(solver.residual(&phi, &psi, &u0, &du0) < 1e-10);
    // A J0(k1 r0) = J0(k0 r0) + B H0(k0 r0), (k1/mu1) A J0'(k1 r0) = (k0/mu0)(J0' + B H0')
    let (j1, j1p) = (bessel::bessel_j(0, k1 * r0), bessel::bessel_j_prime(0, k1 * r0));
    let (j0, j0p) = (bessel::bessel_j(0, k0 * r0), bessel::bessel_j_prime(0, k0 * r0));
    let (h0, h0p) = (bessel::hankel1(0, k0 * r0), bessel::hankel1_prime(0, k0 * r0));
    let a11 = C64::new(j1, 0.0);
    let a12 = -h0;
    let a21 = C64::new(k1 / params.mu1 * j1p, 0.0);
    let a22 = -k0 / params.mu0 * h0p;
    let det = a11 * a22 - a12 * a21;
    let rhs1 = C64::new(j0, 0.0);
    let rhs2 = C64::new(k0 / params.mu0 * j0p, 0.0);
    let b = (a11 * rhs2 - a21 * rhs1) / det;
    let targets: Vec<[f64; 2]> = (0..8).map(|m| {
        let t = 2.0 * PI * m as f64 / 8.0;
        [2.0 * t.cos(), 2.0 * t.sin()]
    }).collect();
    let field = eval_single_layer(&curve, &psi, &targets, Some(k0)).unwrap();
    let exact = b * bessel::hankel1(0, 2.0 * k0);
    for v in field {
        assert!((v - exact).norm() < 1e-8 * exact.norm().max(1.0), "{v} vs {exact}");
    }
}

#[test]
fn operator_dump_round_trip() {
    let curve = make_shape(&ShapeSpec::Circle { radius: 1.0 }, 16).unwrap();
    let op = assemble_single_layer(&curve);
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("s.bin");
    let json = dir.path().join("s.json");
    op.write_dump(&bin, &json).unwrap();
    let bytes = std::fs::read(&bin).unwrap();
    assert_eq!(bytes.len(), 16 * 16 * 16);
    let re = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    assert_eq!(re, op.matrix[(0, 1)].re);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(meta["n"], 16);
    assert_eq!(meta["curve_hash"], curve.id());
    assert_eq!(meta["includes_weights"], true);
}
