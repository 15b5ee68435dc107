//! The Bloch–Floquet–Zak transform, its inverse and the fiber Hamiltonian.
//!
//! A fiber at quasimomentum `θ` is the periodic function
//! `φ̃(θ, x) = Σ_m e^{2πiθ·(x−m)} φ(x−m)` on the torus. Its torus Fourier
//! coefficients are `φ̂(m − θ)`, and on the mode `e^{2πim·x}` the kinetic part of
//! the fiber Hamiltonian acts as `4π²|m−θ|²`.

use crate::error::{Error, Result};
use crate::lattice::PeriodicPotential;
use crate::numeric::{fft_freq, fft_nd, I};
use crate::par;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// A compactly supported wavefunction sampled on a uniform grid of `[−R, R)^d`.
#[derive(Clone, Debug)]
pub struct SampledWavefunction {
    pub dim: usize,
    /// Support radius `R` (an integer number of unit cells).
    pub radius: usize,
    /// Samples per unit cell and axis.
    pub per_cell: usize,
    /// Values at `x_i = −R + i/per_cell`, row-major.
    pub values: Vec<Complex64>,
}

impl SampledWavefunction {
    /// Samples `f` on the grid.
    pub fn from_fn(
        dim: usize,
        radius: usize,
        per_cell: usize,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Self {
        let side = 2 * radius * per_cell;
        let h = 1.0 / per_cell as f64;
        let len = side.pow(dim as u32);
        let values = (0..len)
            .map(|mut idx| {
                let mut x = vec![0.0; dim];
                for k in (0..dim).rev() {
                    x[k] = -(radius as f64) + (idx % side) as f64 * h;
                    idx /= side;
                }
                f(&x)
            })
            .collect();
        SampledWavefunction {
            dim,
            radius,
            per_cell,
            values,
        }
    }

    /// Points per axis.
    pub fn side(&self) -> usize {
        2 * self.radius * self.per_cell
    }

    /// Grid spacing.
    pub fn spacing(&self) -> f64 {
        1.0 / self.per_cell as f64
    }

    /// Coordinates of the sample with linear index `idx`.
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let side = self.side();
        let mut x = vec![0.0; self.dim];
        for k in (0..self.dim).rev() {
            x[k] = -(self.radius as f64) + (idx % side) as f64 * self.spacing();
            idx /= side;
        }
        x
    }

    /// `‖φ‖²_{L²}` by the trapezoid rule.
    pub fn norm_sqr(&self) -> f64 {
        self.spacing().powi(self.dim as i32) * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Linear index of the grid point `i` (per-axis indices), or `None` outside the grid.
    fn lin(&self, idx: &[i64]) -> Option<usize> {
        let side = self.side() as i64;
        let mut l = 0i64;
        for &c in idx {
            if c < 0 || c >= side {
                return None;
            }
            l = l * side + c;
        }
        Some(l as usize)
    }

    /// Value at the grid point with per-axis indices `idx` (zero outside the grid).
    pub fn at_index(&self, idx: &[i64]) -> Complex64 {
        self.lin(idx).map(|l| self.values[l]).unwrap_or_default()
    }

    /// Continuous Fourier transform `φ̂(k) = ∫ e^{−2πik·x} φ(x) dx` by the trapezoid rule.
    pub fn fourier(&self, k: &[f64]) -> Complex64 {
        let side = self.side();
        let h = self.spacing();
        // separable phase tables per axis
        let tables: Vec<Vec<Complex64>> = k
            .iter()
            .map(|&kk| {
                (0..side)
                    .map(|i| {
                        Complex64::from_polar(
                            h,
                            -2.0 * PI * kk * (-(self.radius as f64) + i as f64 * h),
                        )
                    })
                    .collect()
            })
            .collect();
        let mut s = Complex64::new(0.0, 0.0);
        for (idx, v) in self.values.iter().enumerate() {
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let mut rem = idx;
            let mut w = Complex64::new(1.0, 0.0);
            for ax in (0..self.dim).rev() {
                w *= tables[ax][rem % side];
                rem /= side;
            }
            s += w * v;
        }
        s
    }

    /// Band-limited (trigonometric) interpolation at an arbitrary point, treating the
    /// samples as one period of a `2R`-periodic function.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let side = self.side();
        let len = 2.0 * self.radius as f64;
        // coefficients along each axis are formed on the fly through a separable kernel
        let kernels: Vec<Vec<f64>> = x
            .iter()
            .map(|&xx| {
                let u = (xx + self.radius as f64) / len * side as f64;
                (0..side)
                    .map(|i| dirichlet_kernel(u - i as f64, side))
                    .collect()
            })
            .collect();
        let mut s = Complex64::new(0.0, 0.0);
        for (idx, v) in self.values.iter().enumerate() {
            let mut rem = idx;
            let mut w = 1.0;
            for ax in (0..self.dim).rev() {
                w *= kernels[ax][rem % side];
                rem /= side;
            }
            if w != 0.0 {
                s += v * w;
            }
        }
        s
    }
}

/// Periodic interpolation kernel of an even number `n` of samples, in units of samples.
fn dirichlet_kernel(u: f64, n: usize) -> f64 {
    let nf = n as f64;
    let r = u.rem_euclid(nf);
    if r.abs() < 1e-13 || (nf - r).abs() < 1e-13 {
        return 1.0;
    }
    let a = PI * r / nf;
    // symmetric Nyquist treatment for even n
    (PI * r).sin() / (nf * a.tan())
}

/// BFZ fibers at a list of quasimomenta, each sampled on `N^d` torus points `x_j = j/N`.
#[derive(Clone, Debug)]
pub struct BfzField {
    pub dim: usize,
    /// Torus points per axis.
    pub n: usize,
    /// Quasimomenta of the stored fibers.
    pub thetas: Vec<Vec<f64>>,
    /// `M` when the fibers form the uniform grid `θ_k = −1/2 + k/M`.
    pub uniform_m: Option<usize>,
    /// Values `[fiber][x]`, `x` row-major.
    pub values: Vec<Vec<Complex64>>,
}

impl BfzField {
    /// Torus points per fiber.
    pub fn torus_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Torus coordinates of linear index `idx`.
    pub fn torus_point(&self, mut idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for k in (0..self.dim).rev() {
            x[k] = (idx % self.n) as f64 / self.n as f64;
            idx /= self.n;
        }
        x
    }

    /// Locates a stored fiber `θ₀` with `θ = θ₀ + n`, `n ∈ Z^d`.
    pub fn locate(&self, theta: &[f64]) -> Option<(usize, Vec<i64>)> {
        if let Some(m) = self.uniform_m {
            let mut idx = 0usize;
            let mut shift = vec![0i64; self.dim];
            for (k, &th) in theta.iter().enumerate() {
                let u = (th + 0.5) * m as f64;
                let r = u.round();
                if (u - r).abs() > 1e-8 {
                    return None;
                }
                let r = r as i64;
                let j = r.rem_euclid(m as i64);
                shift[k] = (r - j) / m as i64;
                idx = idx * m + j as usize;
            }
            return Some((idx, shift));
        }
        for (i, t0) in self.thetas.iter().enumerate() {
            let d: Vec<f64> = theta.iter().zip(t0).map(|(a, b)| a - b).collect();
            if d.iter().all(|v| (v - v.round()).abs() < 1e-9) {
                return Some((i, d.iter().map(|v| v.round() as i64).collect()));
            }
        }
        None
    }

    /// `φ̃(θ, x_j)` using the equivariance `φ̃(θ₀+n, x) = e^{2πin·x} φ̃(θ₀, x)`.
    pub fn value(&self, theta: &[f64], j: usize) -> Option<Complex64> {
        let (i, shift) = self.locate(theta)?;
        let x = self.torus_point(j);
        let ph: f64 = shift.iter().zip(&x).map(|(&s, v)| s as f64 * v).sum();
        Some(self.values[i][j] * Complex64::from_polar(1.0, 2.0 * PI * ph))
    }

    /// Quadrature of `∫∫ |φ̃|² dθ dx` (uniform grids only).
    pub fn norm_sqr(&self) -> f64 {
        let nf = self.values.len() as f64 * self.torus_len() as f64;
        self.values
            .iter()
            .flatten()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            / nf
    }

    /// Torus Fourier coefficients `∫ e^{−2πim·x} φ̃(θ, x) dx` of fiber `i`, FFT-ordered.
    pub fn fiber_modes(&self, i: usize) -> Vec<Complex64> {
        let mut c = self.values[i].clone();
        fft_nd(&mut c, self.n, self.dim, false);
        let s = 1.0 / self.torus_len() as f64;
        c.iter_mut().for_each(|v| *v *= s);
        c
    }
}

/// The uniform grid `θ_k = −1/2 + k/M` on `[−1/2, 1/2)^d`, row-major.
pub fn uniform_thetas(dim: usize, m: usize) -> Vec<Vec<f64>> {
    (0..m.pow(dim as u32))
        .map(|mut idx| {
            let mut t = vec![0.0; dim];
            for k in (0..dim).rev() {
                t[k] = -0.5 + (idx % m) as f64 / m as f64;
                idx /= m;
            }
            t
        })
        .collect()
}

/// Quadrature nodes `θ'_j = −1/2 + (j + s)/M` per axis for the `θ` integral of the
/// Bloch–Wigner function at offset `η`, with `s = frac(Mη) ∈ {0, 1/2}` so that
/// `η ± θ'_j` lies on the uniform grid `−1/2 + Z/M`.
pub fn theta_nodes(eta: &[f64], m: usize) -> Result<Vec<Vec<f64>>> {
    let mut shifts = Vec::with_capacity(eta.len());
    for &e in eta {
        let u = 2.0 * m as f64 * e;
        if (u - u.round()).abs() > 1e-9 {
            return Err(Error::OffHalfGrid(eta.to_vec()));
        }
        shifts.push(if (u.round() as i64).rem_euclid(2) == 1 {
            0.5
        } else {
            0.0
        });
    }
    let dim = eta.len();
    Ok((0..m.pow(dim as u32))
        .map(|mut idx| {
            let mut t = vec![0.0; dim];
            for k in (0..dim).rev() {
                t[k] = -0.5 + ((idx % m) as f64 + shifts[k]) / m as f64;
                idx /= m;
            }
            t
        })
        .collect())
}

/// `η + θ` for each node, followed by `η − θ` for each node.
pub fn paired_thetas(eta: &[f64], nodes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let plus = nodes
        .iter()
        .map(|t| eta.iter().zip(t).map(|(e, x)| e + x).collect());
    let minus = nodes
        .iter()
        .map(|t| eta.iter().zip(t).map(|(e, x)| e - x).collect());
    plus.chain(minus).collect()
}

/// Forward BFZ transform on the uniform `M`-point quasimomentum grid and `N`-point torus grid.
pub fn bfz_forward(phi: &SampledWavefunction, m: usize, n: usize) -> Result<BfzField> {
    let mut f = bfz_forward_at(phi, &uniform_thetas(phi.dim, m), n)?;
    f.uniform_m = Some(m);
    Ok(f)
}

/// Forward BFZ transform at an arbitrary list of quasimomenta.
pub fn bfz_forward_at(
    phi: &SampledWavefunction,
    thetas: &[Vec<f64>],
    n: usize,
) -> Result<BfzField> {
    if n == 0 || phi.per_cell % n != 0 {
        return Err(Error::Incommensurate(format!(
            "{} torus points do not divide {} samples per cell",
            n, phi.per_cell
        )));
    }
    let dim = phi.dim;
    let stride = (phi.per_cell / n) as i64;
    let r = phi.radius as i64;
    let len = n.pow(dim as u32);
    let cells: Vec<Vec<i64>> = crate::lattice::LatticeBox::new(dim, r).points();
    let values = par::map_range(thetas.len(), |t| {
        let theta = &thetas[t];
        (0..len)
            .map(|mut j| {
                let mut jx = vec![0i64; dim];
                for k in (0..dim).rev() {
                    jx[k] = (j % n) as i64;
                    j /= n;
                }
                let mut s = Complex64::new(0.0, 0.0);
                for m in &cells {
                    let idx: Vec<i64> = jx
                        .iter()
                        .zip(m)
                        .map(|(&a, &mm)| a * stride + (r - mm) * phi.per_cell as i64)
                        .collect();
                    let v = phi.at_index(&idx);
                    if v.norm_sqr() == 0.0 {
                        continue;
                    }
                    let ph: f64 = theta
                        .iter()
                        .zip(jx.iter().zip(m))
                        .map(|(th, (&a, &mm))| th * (a as f64 / n as f64 - mm as f64))
                        .sum();
                    s += v * Complex64::from_polar(1.0, 2.0 * PI * ph);
                }
                s
            })
            .collect()
    });
    Ok(BfzField {
        dim,
        n,
        thetas: thetas.to_vec(),
        uniform_m: None,
        values,
    })
}

/// Inverse BFZ transform `φ(x) = ∫ e^{−2πiθ·x} φ̃(θ, x) dθ` onto `[−R, R)^d`.
pub fn bfz_inverse(field: &BfzField, radius: usize) -> Result<SampledWavefunction> {
    if field.uniform_m.is_none() {
        return Err(Error::InvalidInput(
            "inverse transform needs a uniform quasimomentum grid".into(),
        ));
    }
    let dim = field.dim;
    let n = field.n;
    let w = 1.0 / field.thetas.len() as f64;
    let out = SampledWavefunction::from_fn(dim, radius, n, |x| {
        let j: usize = x.iter().fold(0usize, |acc, &v| {
            acc * n + ((v.rem_euclid(1.0) * n as f64).round() as usize % n)
        });
        let mut s = Complex64::new(0.0, 0.0);
        for (th, vals) in field.thetas.iter().zip(&field.values) {
            let ph: f64 = th.iter().zip(x).map(|(a, b)| a * b).sum();
            s += vals[j] * Complex64::from_polar(w, -2.0 * PI * ph);
        }
        s
    });
    Ok(out)
}

/// Integer mode attached to FFT bin `idx` of an `n^d` torus grid.
pub fn mode_of_bin(mut idx: usize, n: usize, dim: usize) -> Vec<i64> {
    let mut m = vec![0; dim];
    for k in (0..dim).rev() {
        m[k] = fft_freq(idx % n, n);
        idx /= n;
    }
    m
}

/// FFT bin of mode `m` on an `n^d` torus grid, if representable.
pub fn bin_of_mode(m: &[i64], n: usize) -> Option<usize> {
    let half = n as i64 / 2;
    let mut idx = 0usize;
    for &c in m {
        if c < -half || c >= n as i64 - half {
            return None;
        }
        idx = idx * n + c.rem_euclid(n as i64) as usize;
    }
    Some(idx)
}

/// The fiber Hamiltonian `H_θ = 4π²|m−θ|² + ε^{1/2} V` as a dense matrix on the
/// truncated Fourier basis of an `n^d` torus grid (FFT-ordered modes).
pub fn fiber_matrix(
    theta: &[f64],
    v: &PeriodicPotential,
    eps: f64,
    n: usize,
) -> DMatrix<Complex64> {
    let dim = theta.len();
    let len = n.pow(dim as u32);
    let lambda = eps.sqrt();
    let modes: Vec<Vec<i64>> = (0..len).map(|i| mode_of_bin(i, n, dim)).collect();
    let mut h = DMatrix::<Complex64>::zeros(len, len);
    for (i, m) in modes.iter().enumerate() {
        let k: f64 = m
            .iter()
            .zip(theta)
            .map(|(&a, b)| (a as f64 - b).powi(2))
            .sum();
        h[(i, i)] = Complex64::new(4.0 * PI * PI * k, 0.0);
    }
    for (nv, c) in v.modes() {
        for (i, m) in modes.iter().enumerate() {
            let src: Vec<i64> = m.iter().zip(&nv).map(|(a, b)| a - b).collect();
            if let Some(j) = bin_of_mode(&src, n) {
                h[(i, j)] += c * lambda;
            }
        }
    }
    h
}

/// Applies `(−Δ_x + 4πiθ·∇_x + 4π²|θ|²) u + ε^{1/2} V u` to a periodic function sampled on the torus grid.
pub fn fiber_hamiltonian_apply(
    u: &[Complex64],
    n: usize,
    theta: &[f64],
    v: &PeriodicPotential,
    eps: f64,
) -> Vec<Complex64> {
    let dim = theta.len();
    let mut c = u.to_vec();
    fft_nd(&mut c, n, dim, false);
    let h = fiber_matrix(theta, v, eps, n);
    let cv = nalgebra::DVector::from_vec(c);
    let mut out: Vec<Complex64> = (h * cv).iter().copied().collect();
    fft_nd(&mut out, n, dim, true);
    let s = 1.0 / u.len() as f64;
    out.iter_mut().for_each(|z| *z *= s);
    out
}

/// Exact propagator `exp(−itH_θ)` through a Hermitian eigendecomposition.
#[derive(Clone, Debug)]
pub struct FiberPropagator {
    vectors: DMatrix<Complex64>,
    values: Vec<f64>,
}

impl FiberPropagator {
    pub fn new(h: DMatrix<Complex64>) -> Self {
        let eig = nalgebra::SymmetricEigen::new(h);
        FiberPropagator {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues.iter().copied().collect(),
        }
    }

    /// Coordinates of `c` in the eigenbasis.
    pub fn project(&self, c: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(c);
        (self.vectors.adjoint() * v).iter().copied().collect()
    }

    /// `exp(−itH) c` for `c` given by its eigenbasis coordinates `a`.
    pub fn evolve_projected(&self, a: &[Complex64], t: f64) -> Vec<Complex64> {
        let rotated: Vec<Complex64> = a
            .iter()
            .zip(&self.values)
            .map(|(x, &l)| x * Complex64::from_polar(1.0, -l * t))
            .collect();
        (&self.vectors * nalgebra::DVector::from_vec(rotated))
            .iter()
            .copied()
            .collect()
    }

    /// `exp(−itH) c`.
    pub fn evolve(&self, c: &[Complex64], t: f64) -> Vec<Complex64> {
        self.evolve_projected(&self.project(c), t)
    }
}

/// Evolves every fiber by `exp(−i t_micro H_θ)` with coupling `ε^{1/2}`.
pub fn evolve_fiber(
    field: &BfzField,
    v: &PeriodicPotential,
    eps: f64,
    t_micro: f64,
) -> Result<BfzField> {
    if t_micro < 0.0 {
        return Err(Error::InvalidInput("negative time".into()));
    }
    let n = field.n;
    let dim = field.dim;
    let values = par::map_range(field.thetas.len(), |i| {
        let c = field.fiber_modes(i);
        let prop = FiberPropagator::new(fiber_matrix(&field.thetas[i], v, eps, n));
        let mut out = prop.evolve(&c, t_micro);
        fft_nd(&mut out, n, dim, true);
        out
    });
    Ok(BfzField {
        values,
        ..field.clone()
    })
}

/// `e^{−4π² i |m−θ|² t}`: the free phase of mode `m` in fiber `θ`.
pub fn free_phase(m: &[i64], theta: &[f64], t: f64) -> Complex64 {
    let k: f64 = m
        .iter()
        .zip(theta)
        .map(|(&a, b)| (a as f64 - b).powi(2))
        .sum();
    (-I * 4.0 * PI * PI * k * t).exp()
}
