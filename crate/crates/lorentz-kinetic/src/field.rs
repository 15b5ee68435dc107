//! Phase-space layouts and the two field types acted on by the drivers: test
//! fields `ψ(ξ, p, κ)` and the co-moving field `T^ε(ξ, p, κ)`.
//!
//! Values are stored as `[ξ][κ][p]` with `ξ` from a lattice box, `κ` from a box
//! of `2κ` vectors and `p` from a uniform tensor grid.

use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::numeric::{fft_freq, I};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A uniform tensor grid `p = lo + i h` with `n` points per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PGrid {
    pub dim: usize,
    pub n: usize,
    pub lo: f64,
    pub h: f64,
}

impl PGrid {
    pub fn new(dim: usize, n: usize, lo: f64, h: f64) -> Self {
        PGrid { dim, n, lo, h }
    }

    /// `n` points per axis covering `[−L, L)`.
    pub fn centered(dim: usize, n: usize, half_width: f64) -> Self {
        PGrid {
            dim,
            n,
            lo: -half_width,
            h: 2.0 * half_width / n as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Quadrature weight `h^d`.
    pub fn weight(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    /// The point with linear index `idx` (row-major).
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        for k in (0..self.dim).rev() {
            p[k] = self.coord(idx % self.n);
            idx /= self.n;
        }
        p
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Stride of axis `axis` in the row-major layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }
}

/// The index sets of a phase-space field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseLayout {
    pub dim: usize,
    pub xi: LatticeBox,
    /// Box of the integer vectors `2κ`.
    pub kappa2: LatticeBox,
    pub p: PGrid,
}

impl PhaseLayout {
    pub fn new(dim: usize, xi_radius: i64, kappa2_radius: i64, p: PGrid) -> Self {
        assert_eq!(p.dim, dim);
        PhaseLayout {
            dim,
            xi: LatticeBox::new(dim, xi_radius),
            kappa2: LatticeBox::new(dim, kappa2_radius),
            p,
        }
    }

    pub fn len(&self) -> usize {
        self.n_blocks() * self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of `(ξ, κ)` blocks.
    pub fn n_blocks(&self) -> usize {
        self.xi.len() * self.kappa2.len()
    }

    pub fn block_index(&self, xi: usize, kappa: usize) -> usize {
        xi * self.kappa2.len() + kappa
    }

    /// `(ξ, 2κ)` of block `b`.
    pub fn block_labels(&self, b: usize) -> (Vec<i64>, Vec<i64>) {
        (
            self.xi.point(b / self.kappa2.len()),
            self.kappa2.point(b % self.kappa2.len()),
        )
    }

    /// Block of `(ξ, 2κ)`, or `None` outside the boxes.
    pub fn block_of(&self, xi: &[i64], kappa2: &[i64]) -> Option<usize> {
        Some(self.block_index(self.xi.index(xi)?, self.kappa2.index(kappa2)?))
    }

    /// Quadrature weight of one `p` sample.
    pub fn p_weight(&self) -> f64 {
        self.p.weight()
    }

    pub fn check_same(&self, other: &PhaseLayout) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch("phase layouts differ".into()));
        }
        Ok(())
    }
}

/// `⟨κ⟩ = (1 + |κ|²)^{1/2}` from `2κ`.
pub fn kappa_bracket(kappa2: &[i64]) -> f64 {
    (1.0 + kappa2
        .iter()
        .map(|&k| (k as f64 / 2.0).powi(2))
        .sum::<f64>())
    .sqrt()
}

/// A test function `ψ(ξ, p, κ)` together with the smoothness order it is certified for.
#[derive(Clone, Debug, PartialEq)]
pub struct TestField {
    pub layout: PhaseLayout,
    pub values: Vec<Complex64>,
    pub order: u8,
}

impl TestField {
    pub fn zeros(layout: &PhaseLayout, order: u8) -> Self {
        TestField {
            layout: layout.clone(),
            values: vec![Complex64::new(0.0, 0.0); layout.len()],
            order,
        }
    }

    /// Samples `f(ξ, 2κ, p)` on the layout.
    pub fn from_fn(
        layout: &PhaseLayout,
        order: u8,
        mut f: impl FnMut(&[i64], &[i64], &[f64]) -> Complex64,
    ) -> Self {
        let np = layout.p.len();
        let pts = layout.p.points();
        let mut values = Vec::with_capacity(layout.len());
        for b in 0..layout.n_blocks() {
            let (xi, k2) = layout.block_labels(b);
            for p in pts.iter().take(np) {
                values.push(f(&xi, &k2, p));
            }
        }
        TestField {
            layout: layout.clone(),
            values,
            order,
        }
    }

    /// The `p` samples of block `(ξ, 2κ)`, or `None` outside the boxes.
    pub fn block(&self, xi: &[i64], kappa2: &[i64]) -> Option<&[Complex64]> {
        let np = self.layout.p.len();
        self.layout
            .block_of(xi, kappa2)
            .map(|b| &self.values[b * np..(b + 1) * np])
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        TestField {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// `self + c·other` with the smaller certified order.
    pub fn axpy(&self, c: Complex64, other: &TestField) -> Self {
        assert_eq!(self.layout, other.layout);
        TestField {
            layout: self.layout.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
            order: self.order.min(other.order),
        }
    }

    /// Spectral `∂_{p_axis}` of every block on the periodic `p` box.
    pub fn grad_p(&self, axis: usize) -> Vec<Complex64> {
        spectral_derivative(&self.layout, &self.values, axis)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Spectral derivative along one `p` axis of a `[block][p]` array.
pub fn spectral_derivative(
    layout: &PhaseLayout,
    values: &[Complex64],
    axis: usize,
) -> Vec<Complex64> {
    let g = &layout.p;
    let n = g.n;
    let np = g.len();
    let stride = g.stride(axis);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let period = n as f64 * g.h;
    let mult: Vec<Complex64> = (0..n)
        .map(|k| {
            let f = fft_freq(k, n);
            if 2 * f.unsigned_abs() as usize == n {
                Complex64::new(0.0, 0.0)
            } else {
                I * (2.0 * PI * f as f64 / period) / n as f64
            }
        })
        .collect();
    let mut out = values.to_vec();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for block in out.chunks_mut(np) {
        for start in 0..np {
            if (start / stride) % n != 0 {
                continue;
            }
            for (i, l) in line.iter_mut().enumerate() {
                *l = block[start + i * stride];
            }
            fwd.process(&mut line);
            line.iter_mut().zip(&mult).for_each(|(l, m)| *l *= m);
            inv.process(&mut line);
            for (i, l) in line.iter().enumerate() {
                block[start + i * stride] = *l;
            }
        }
    }
    out
}

/// A field whose `p` dependence is a finite sum of plane waves,
/// `F(ξ, p, κ) = Σ_j a_j(ξ, κ) e^{−4πi s θ_j·p}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSpectrum {
    pub nodes: Vec<Vec<f64>>,
    /// The factor `s` multiplying `θ·p` (`1/ε` for rescaled fields).
    pub scale: f64,
    /// Amplitudes `[block][node]`.
    pub coeffs: Vec<Complex64>,
}

impl ThetaSpectrum {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// The amplitudes of block `b`.
    pub fn block(&self, b: usize) -> &[Complex64] {
        let m = self.n_nodes();
        &self.coeffs[b * m..(b + 1) * m]
    }

    /// Evaluates the sum, or its `p_axis` derivative, on the layout grid.
    pub fn synthesize(&self, layout: &PhaseLayout, derivative: Option<usize>) -> Vec<Complex64> {
        let np = layout.p.len();
        let pts = layout.p.points();
        let waves: Vec<Vec<Complex64>> = self
            .nodes
            .iter()
            .map(|th| {
                let factor = match derivative {
                    Some(ax) => -I * 4.0 * PI * self.scale * th[ax],
                    None => Complex64::new(1.0, 0.0),
                };
                pts.iter()
                    .map(|p| {
                        let ph: f64 = th.iter().zip(p).map(|(a, b)| a * b).sum();
                        factor * Complex64::from_polar(1.0, -4.0 * PI * self.scale * ph)
                    })
                    .collect()
            })
            .collect();
        let blocks = crate::par::map_range(layout.n_blocks(), |b| {
            let a = self.block(b);
            let mut out = vec![Complex64::new(0.0, 0.0); np];
            for (aj, w) in a.iter().zip(&waves) {
                if aj.norm_sqr() == 0.0 {
                    continue;
                }
                out.iter_mut().zip(w).for_each(|(o, wv)| *o += aj * wv);
            }
            out
        });
        blocks.into_iter().flatten().collect()
    }

    /// Evaluates block `b` at an arbitrary point.
    pub fn eval(&self, b: usize, p: &[f64]) -> Complex64 {
        self.block(b)
            .iter()
            .zip(&self.nodes)
            .map(|(a, th)| {
                let ph: f64 = th.iter().zip(p).map(|(x, y)| x * y).sum();
                a * Complex64::from_polar(1.0, -4.0 * PI * self.scale * ph)
            })
            .sum()
    }
}

/// The co-moving field `T^{ε,η}(t, ξ, p, κ)` on a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct TField {
    pub t: f64,
    pub eps: f64,
    pub eta: Vec<f64>,
    pub layout: PhaseLayout,
    pub values: Vec<Complex64>,
    /// Plane-wave representation in `p`, when the field was built from fibers.
    pub spectrum: Option<ThetaSpectrum>,
}

impl TField {
    /// A field given only by its grid samples.
    pub fn from_values(
        t: f64,
        eps: f64,
        eta: &[f64],
        layout: &PhaseLayout,
        values: Vec<Complex64>,
    ) -> Self {
        assert_eq!(values.len(), layout.len());
        TField {
            t,
            eps,
            eta: eta.to_vec(),
            layout: layout.clone(),
            values,
            spectrum: None,
        }
    }

    /// A field given by its plane-wave spectrum, sampled on the layout.
    pub fn from_spectrum(
        t: f64,
        eps: f64,
        eta: &[f64],
        layout: &PhaseLayout,
        spectrum: ThetaSpectrum,
    ) -> Self {
        let values = spectrum.synthesize(layout, None);
        TField {
            t,
            eps,
            eta: eta.to_vec(),
            layout: layout.clone(),
            values,
            spectrum: Some(spectrum),
        }
    }

    /// `∂_{p_axis} T`: exact from the spectrum when present, spectral on the grid otherwise.
    pub fn grad_p(&self, axis: usize) -> Vec<Complex64> {
        match &self.spectrum {
            Some(s) => s.synthesize(&self.layout, Some(axis)),
            None => spectral_derivative(&self.layout, &self.values, axis),
        }
    }

    /// `sup_{p,κ} ‖T(·, p, κ)‖_{ℓ²_ξ}` on the grid.
    pub fn sup_l2_xi(&self) -> f64 {
        let np = self.layout.p.len();
        let nk = self.layout.kappa2.len();
        let mut best = 0.0f64;
        for k in 0..nk {
            for p in 0..np {
                let s: f64 = (0..self.layout.xi.len())
                    .map(|x| self.values[self.layout.block_index(x, k) * np + p].norm_sqr())
                    .sum();
                best = best.max(s.sqrt());
            }
        }
        best
    }
}
