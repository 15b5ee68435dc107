//! Small numerical building blocks: Gauss–Legendre rules, oscillatory
//! single-exponential integrals, least-squares slopes and FFT helpers.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Imaginary unit.
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Japanese bracket `⟨x⟩ = (1 + |x|²)^{1/2}`.
pub fn jbracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Japanese bracket of an integer vector.
pub fn jbracket_int(n: &[i64]) -> f64 {
    (1.0 + n.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt()
}

/// Euclidean norm of an integer vector.
pub fn norm_int(n: &[i64]) -> f64 {
    n.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
}

/// Integer dot product.
pub fn dot_int(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dot product of an integer vector with a real vector.
pub fn dot_mixed(a: &[i64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, y)| x as f64 * y).sum()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels of `order` nodes.
pub fn composite_gauss_legendre(
    a: f64,
    b: f64,
    order: usize,
    panels: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(order * panels);
    let mut weights = Vec::with_capacity(order * panels);
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// `(e^{ix} − 1)/(ix)`, accurate for small `x`.
pub fn phase_mean(x: f64) -> Complex64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        Complex64::new(1.0 - x2 / 6.0 + x2 * x2 / 120.0, x / 2.0 - x * x2 / 24.0)
    } else {
        (Complex64::from_polar(1.0, x) - 1.0) / (I * x)
    }
}

/// `∫_s^t e^{iau} du` in closed form.
pub fn exp_integral(a: f64, s: f64, t: f64) -> Complex64 {
    let tau = t - s;
    Complex64::from_polar(1.0, a * s) * phase_mean(a * tau) * tau
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// In-place FFT along every axis of a `d`-dimensional array with `n` points per axis
/// (row-major, last axis fastest). The forward transform uses `e^{-2πi jk/n}` and no scaling.
pub fn fft_nd(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = data.len();
    debug_assert_eq!(total, n.pow(dim as u32));
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        for start in 0..total {
            if (start / stride) % n != 0 {
                continue;
            }
            for k in 0..n {
                line[k] = data[start + k * stride];
            }
            fft.process(&mut line);
            for k in 0..n {
                data[start + k * stride] = line[k];
            }
        }
    }
}

/// Signed frequency associated with FFT bin `k` of an `n`-point transform.
pub fn fft_freq(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Maximum absolute entry of a complex slice.
pub fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Euclidean norm of a complex slice.
pub fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
