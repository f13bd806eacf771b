//! Periodic spectral tools on the equispaced grid `t_j = 2 pi j / N`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Fourier coefficients `c_k` with `f(t_j) = sum_k c_k e^{i k t_j}`, stored in FFT order.
pub fn forward(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

pub fn inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Signed wavenumber of FFT slot `k` for length `n`.
pub fn wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// `order`-th derivative in `t`. The Nyquist mode is dropped for odd orders.
pub fn derivative_complex(values: &[Complex64], order: u32) -> Vec<Complex64> {
    let n = values.len();
    let mut c = forward(values);
    for (k, ck) in c.iter_mut().enumerate() {
        let m = wavenumber(k, n);
        if n % 2 == 0 && k == n / 2 && order % 2 == 1 {
            *ck = Complex64::new(0.0, 0.0);
            continue;
        }
        *ck *= Complex64::new(0.0, m as f64).powu(order);
    }
    inverse(&c)
}

pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    derivative_complex(&z, order).into_iter().map(|c| c.re).collect()
}

/// Antiderivative `F(t_j) = int_0^{t_j} f` of a periodic sample, including the linear part
/// coming from the mean of `f`.
pub fn antiderivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut c = forward(&z);
    let mean = c[0].re;
    c[0] = Complex64::new(0.0, 0.0);
    if n % 2 == 0 {
        c[n / 2] = Complex64::new(0.0, 0.0);
    }
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        let m = wavenumber(k, n) as f64;
        *ck /= Complex64::new(0.0, m);
    }
    let periodic = inverse(&c);
    let base = periodic[0].re;
    (0..n)
        .map(|j| mean * 2.0 * PI * j as f64 / n as f64 + periodic[j].re - base)
        .collect()
}

/// Trigonometric interpolation onto `factor * N` points. `N` must be even.
pub fn upsample_complex(values: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = values.len();
    let m = n * factor;
    if factor == 1 {
        return values.to_vec();
    }
    let c = forward(values);
    let mut big = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for k in 0..half {
        big[k] = c[k];
    }
    for k in half + 1..n {
        big[m - n + k] = c[k];
    }
    // split the Nyquist coefficient symmetrically
    big[half] = c[half] * 0.5;
    big[m - half] = c[half] * 0.5;
    inverse(&big)
}

pub fn upsample(values: &[f64], factor: usize) -> Vec<f64> {
    let z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    upsample_complex(&z, factor).into_iter().map(|c| c.re).collect()
}

/// First-derivative matrix for the periodic grid with `n` (even) points.
pub fn diff_matrix(n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let k = i as i64 - j as i64;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (0.5 * k as f64 * h).tan()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }

    #[test]
    fn derivative_of_trig_polynomial() {
        let t = grid(32);
        let f: Vec<f64> = t.iter().map(|&s| (3.0 * s).sin() + 0.5 * (5.0 * s).cos()).collect();
        let d1 = derivative(&f, 1);
        let d2 = derivative(&f, 2);
        for (j, &s) in t.iter().enumerate() {
            let e1 = 3.0 * (3.0 * s).cos() - 2.5 * (5.0 * s).sin();
            let e2 = -9.0 * (3.0 * s).sin() - 12.5 * (5.0 * s).cos();
            assert!((d1[j] - e1).abs() < 1e-12);
            assert!((d2[j] - e2).abs() < 1e-11);
        }
    }

    #[test]
    fn diff_matrix_agrees_with_fft() {
        let n = 24;
        let t = grid(n);
        let f: Vec<f64> = t.iter().map(|&s| (s.cos()).exp()).collect();
        let d = diff_matrix(n);
        let via_matrix = &d * nalgebra::DVector::from_vec(f.clone());
        let via_fft = derivative(&f, 1);
        for j in 0..n {
            assert!((via_matrix[j] - via_fft[j]).abs() < 1e-11);
        }
    }

    #[test]
    fn antiderivative_round_trip() {
        let t = grid(64);
        let f: Vec<f64> = t.iter().map(|&s| 2.0 + (2.0 * s).cos()).collect();
        let big_f = antiderivative(&f);
        for (j, &s) in t.iter().enumerate() {
            let expect = 2.0 * s + 0.5 * (2.0 * s).sin();
            assert!((big_f[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn upsampling_is_exact_for_band_limited() {
        let n = 16;
        let f: Vec<f64> = grid(n).iter().map(|&s| (2.0 * s).sin() + (3.0 * s).cos()).collect();
        let up = upsample(&f, 4);
        for (j, &s) in grid(4 * n).iter().enumerate() {
            assert!((up[j] - ((2.0 * s).sin() + (3.0 * s).cos())).abs() < 1e-13);
        }
    }
}
