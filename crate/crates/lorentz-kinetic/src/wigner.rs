//! The Wigner transform, the Bloch–Wigner transform and the representation
//! formula connecting them.
//!
//! The Bloch–Wigner function is stored through its torus Fourier modes in `z`
//! and a plane-wave sum in `p`:
//! `W̃(z, p, η, κ) = Σ_ξ e^{2πiξ·z} Σ_j a_j(ξ, κ) e^{−4πiθ'_j·p}` with
//! `a_j(ξ, κ) = w c_{κ+ξ/2}(η+θ'_j) c*_{κ−ξ/2}(η−θ'_j)`, where `c_m(θ)` are the
//! torus Fourier coefficients of the fiber at `θ` and `w = M^{−d}`.

use crate::bfz::{bin_of_mode, theta_nodes, BfzField, SampledWavefunction};
use crate::error::{Error, Result};
use crate::lattice::{split_momentum, LatticeBox, PeriodicPotential};
use crate::numeric::I;
use crate::par;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Quadrature of `W(x, k) = ∫ e^{2πik·y} φ(x − y/2) φ*(x + y/2) dy`.
///
/// With `y = 2u` the integral becomes `2^d ∫ e^{4πik·u} φ(x−u) φ*(x+u) du`, summed
/// on the sample lattice of `φ` with off-grid values from trigonometric interpolation.
pub fn wigner_transform(phi: &SampledWavefunction, x: &[f64], k: &[f64]) -> Complex64 {
    let dim = phi.dim;
    let h = phi.spacing();
    let r = phi.radius as f64;
    let side = 2 * phi.side();
    let count = side.pow(dim as u32);
    let terms = par::map_range(count, |mut idx| {
        let mut u = vec![0.0; dim];
        for c in (0..dim).rev() {
            u[c] = ((idx % side) as f64 - phi.side() as f64) * h;
            idx /= side;
        }
        let minus: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - b).collect();
        let plus: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
        if minus.iter().chain(&plus).any(|v| v.abs() > r) {
            return Complex64::new(0.0, 0.0);
        }
        let ph: f64 = k.iter().zip(&u).map(|(a, b)| a * b).sum();
        Complex64::from_polar(1.0, 4.0 * PI * ph) * phi.eval(&minus) * phi.eval(&plus).conj()
    });
    terms.iter().sum::<Complex64>() * (2.0 * h).powi(dim as i32)
}

/// Plane-wave amplitudes `a_j(ξ, κ)` from the mode coefficients of the fibers at `η ± θ'_j`.
///
/// `plus[j]` and `minus[j]` hold FFT-ordered torus coefficients on an `n^d` grid.
/// The result is laid out `[ξ][κ][j]`.
pub fn pair_amplitudes(
    n: usize,
    plus: &[Vec<Complex64>],
    minus: &[Vec<Complex64>],
    xi: &LatticeBox,
    kappa2: &LatticeBox,
    weight: f64,
) -> Vec<Complex64> {
    let nodes = plus.len();
    let nk = kappa2.len();
    let blocks = par::map_range(xi.len() * nk, |b| {
        let xv = xi.point(b / nk);
        let kv = kappa2.point(b % nk);
        let mut out = vec![Complex64::new(0.0, 0.0); nodes];
        if xv.iter().zip(&kv).any(|(a, c)| (a + c).rem_euclid(2) != 0) {
            return out;
        }
        let m: Vec<i64> = xv.iter().zip(&kv).map(|(a, c)| (c + a) / 2).collect();
        let mp: Vec<i64> = xv.iter().zip(&kv).map(|(a, c)| (c - a) / 2).collect();
        if let (Some(i), Some(ip)) = (bin_of_mode(&m, n), bin_of_mode(&mp, n)) {
            for j in 0..nodes {
                out[j] = plus[j][i] * minus[j][ip].conj() * weight;
            }
        }
        out
    });
    blocks.into_iter().flatten().collect()
}

/// The Bloch–Wigner function at a fixed offset `η`.
#[derive(Clone, Debug)]
pub struct BlochWignerField {
    pub dim: usize,
    /// Points per axis of the `z` grid.
    pub n: usize,
    pub eta: Vec<f64>,
    /// The quadrature nodes `θ'_j`.
    pub nodes: Vec<Vec<f64>>,
    /// Box of `z` modes `ξ`.
    pub xi: LatticeBox,
    /// Box of `2κ`.
    pub kappa2: LatticeBox,
    pub p_samples: Vec<Vec<f64>>,
    /// Amplitudes `[ξ][κ][j]`.
    pub amplitudes: Vec<Complex64>,
    /// Samples `[z][p][κ]` on the `z` grid.
    pub values: Vec<Complex64>,
}

impl BlochWignerField {
    /// Assembles a field from amplitudes and samples it on the `z` grid and `p` list.
    pub fn from_amplitudes(
        n: usize,
        eta: &[f64],
        nodes: Vec<Vec<f64>>,
        xi: LatticeBox,
        kappa2: LatticeBox,
        p_samples: &[Vec<f64>],
        amplitudes: Vec<Complex64>,
    ) -> Self {
        let mut f = BlochWignerField {
            dim: eta.len(),
            n,
            eta: eta.to_vec(),
            nodes,
            xi,
            kappa2,
            p_samples: p_samples.to_vec(),
            amplitudes,
            values: Vec::new(),
        };
        f.values = f.sample();
        f
    }

    fn block(&self, xi: usize, kappa: usize) -> &[Complex64] {
        let m = self.nodes.len();
        let b = xi * self.kappa2.len() + kappa;
        &self.amplitudes[b * m..(b + 1) * m]
    }

    /// `Σ_j a_j(ξ, κ) e^{−4πiθ'_j·p}`.
    fn p_sum(&self, xi: usize, kappa: usize, p: &[f64]) -> Complex64 {
        self.block(xi, kappa)
            .iter()
            .zip(&self.nodes)
            .filter(|(a, _)| a.norm_sqr() != 0.0)
            .map(|(a, th)| {
                let ph: f64 = th.iter().zip(p).map(|(x, y)| x * y).sum();
                a * Complex64::from_polar(1.0, -4.0 * PI * ph)
            })
            .sum()
    }

    fn sample(&self) -> Vec<Complex64> {
        let nz = self.n.pow(self.dim as u32);
        let np = self.p_samples.len();
        let nk = self.kappa2.len();
        let nx = self.xi.len();
        let sums: Vec<Vec<Complex64>> = par::map_range(nx * nk, |b| {
            self.p_samples
                .iter()
                .map(|p| self.p_sum(b / nk, b % nk, p))
                .collect()
        });
        let xis: Vec<Vec<i64>> = self.xi.points();
        let out = par::map_range(nz, |mut zi| {
            let mut z = vec![0.0; self.dim];
            for c in (0..self.dim).rev() {
                z[c] = (zi % self.n) as f64 / self.n as f64;
                zi /= self.n;
            }
            let phases: Vec<Complex64> = xis
                .iter()
                .map(|x| {
                    let ph: f64 = x.iter().zip(&z).map(|(a, b)| *a as f64 * b).sum();
                    Complex64::from_polar(1.0, 2.0 * PI * ph)
                })
                .collect();
            let mut v = vec![Complex64::new(0.0, 0.0); np * nk];
            for pi in 0..np {
                for k in 0..nk {
                    v[pi * nk + k] = (0..nx).map(|x| phases[x] * sums[x * nk + k][pi]).sum();
                }
            }
            v
        });
        out.into_iter().flatten().collect()
    }

    /// Value at grid indices; `κ` outside the box gives zero.
    pub fn value(&self, z: usize, p: usize, kappa2: &[i64]) -> Complex64 {
        match self.kappa2.index(kappa2) {
            Some(k) => self.values[(z * self.p_samples.len() + p) * self.kappa2.len() + k],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Exact evaluation from the mode representation at any `(z, p)`.
    pub fn eval(&self, z: &[f64], p: &[f64], kappa2: &[i64]) -> Complex64 {
        let k = match self.kappa2.index(kappa2) {
            Some(k) => k,
            None => return Complex64::new(0.0, 0.0),
        };
        (0..self.xi.len())
            .map(|x| {
                let xv = self.xi.point(x);
                let ph: f64 = xv.iter().zip(z).map(|(a, b)| *a as f64 * b).sum();
                Complex64::from_polar(1.0, 2.0 * PI * ph) * self.p_sum(x, k, p)
            })
            .sum()
    }

    /// Largest sampled modulus.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// A copy with amplitudes mapped block-wise by `f(ξ, 2κ, node, amplitude lookup)`.
    pub fn map_amplitudes(&self, f: impl Fn(&[i64], &[i64], usize) -> Complex64 + Sync) -> Self {
        let m = self.nodes.len();
        let nk = self.kappa2.len();
        let amps = par::map_range(self.amplitudes.len(), |i| {
            let b = i / m;
            f(&self.xi.point(b / nk), &self.kappa2.point(b % nk), i % m)
        });
        BlochWignerField::from_amplitudes(
            self.n,
            &self.eta,
            self.nodes.clone(),
            self.xi.clone(),
            self.kappa2.clone(),
            &self.p_samples,
            amps,
        )
    }

    /// Amplitude of node `j` at `(ξ, 2κ)`, zero outside the boxes.
    pub fn amplitude(&self, xi: &[i64], kappa2: &[i64], j: usize) -> Complex64 {
        match (self.xi.index(xi), self.kappa2.index(kappa2)) {
            (Some(x), Some(k)) => self.block(x, k)[j],
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

/// FFT-ordered torus coefficients of the fiber at `θ`, using equivariance off the stored list.
fn fiber_coefficients(field: &BfzField, theta: &[f64]) -> Result<Vec<Complex64>> {
    let len = field.torus_len();
    let mut u = Vec::with_capacity(len);
    for j in 0..len {
        u.push(
            field
                .value(theta, j)
                .ok_or_else(|| Error::OffHalfGrid(theta.to_vec()))?,
        );
    }
    crate::numeric::fft_nd(&mut u, field.n, field.dim, false);
    let s = 1.0 / len as f64;
    u.iter_mut().for_each(|v| *v *= s);
    Ok(u)
}

/// The Bloch–Wigner transform of a fibered wavefunction at offset `η`.
///
/// The `θ` integral uses the `M^d` nodes of [`theta_nodes`]; the `y` integral over
/// the torus is carried out exactly on the Fourier modes of the fibers. The field
/// keeps every `z` mode `|ξ|_∞ ≤ n − 1` that the fibers can produce.
pub fn bloch_wigner_transform(
    field: &BfzField,
    eta: &[f64],
    kappa2: &LatticeBox,
    z_grid: usize,
    p_samples: &[Vec<f64>],
    m: usize,
) -> Result<BlochWignerField> {
    if z_grid != field.n {
        return Err(Error::GridMismatch(format!(
            "z grid {} differs from torus grid {}",
            z_grid, field.n
        )));
    }
    if eta.len() != field.dim {
        return Err(Error::InvalidInput("eta dimension".into()));
    }
    let nodes = theta_nodes(eta, m)?;
    let mut plus = Vec::with_capacity(nodes.len());
    let mut minus = Vec::with_capacity(nodes.len());
    for th in &nodes {
        let tp: Vec<f64> = eta.iter().zip(th).map(|(e, t)| e + t).collect();
        let tm: Vec<f64> = eta.iter().zip(th).map(|(e, t)| e - t).collect();
        plus.push(fiber_coefficients(field, &tp)?);
        minus.push(fiber_coefficients(field, &tm)?);
    }
    let xi = LatticeBox::new(field.dim, field.n as i64 - 1);
    let w = 1.0 / nodes.len() as f64;
    let amps = pair_amplitudes(field.n, &plus, &minus, &xi, kappa2, w);
    Ok(BlochWignerField::from_amplitudes(
        field.n,
        eta,
        nodes,
        xi,
        kappa2.clone(),
        p_samples,
        amps,
    ))
}

/// `W(x, k) = 2^d W̃(x − ⌊x⌋, x, η, κ)` with `k = κ − η`.
pub fn reconstruct_wigner(bw: &BlochWignerField, x: &[f64], k: &[f64]) -> Result<Complex64> {
    let split = split_momentum(k);
    if split
        .eta
        .iter()
        .zip(&bw.eta)
        .any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(Error::EtaMismatch {
            field: bw.eta.clone(),
            requested: split.eta,
        });
    }
    let z: Vec<f64> = x.iter().map(|v| v - v.floor()).collect();
    Ok(bw.eval(&z, x, &split.kappa2) * 2f64.powi(bw.dim as i32))
}

/// `−4π(κ−η)·∇_p W̃ − 4π(κ−η)·∇_z W̃ + iε^{1/2} Q W̃` with
/// `Q W̃(z, p, κ) = Σ_n e^{2πin·z} V̂(n) [W̃(κ + n/2) − W̃(κ − n/2)]`.
///
/// Derivatives act exactly on the mode representation: `∇_z` multiplies mode `ξ`
/// by `2πiξ` and `∇_p` multiplies node `j` by `−4πiθ'_j`.
pub fn bw_evolution_rhs(
    bw: &BlochWignerField,
    v: &PeriodicPotential,
    eps: f64,
) -> BlochWignerField {
    let lambda = eps.sqrt();
    let modes = v.modes();
    bw.map_amplitudes(|xi, k2, j| {
        let a = bw.amplitude(xi, k2, j);
        let th = &bw.nodes[j];
        let mut transport = 0.0;
        for c in 0..bw.dim {
            let kc = k2[c] as f64 / 2.0 - bw.eta[c];
            transport += kc * (4.0 * PI * th[c] - 2.0 * PI * xi[c] as f64);
        }
        let mut out = a * (I * 4.0 * PI * transport);
        for (n, vn) in &modes {
            let src: Vec<i64> = xi.iter().zip(n).map(|(x, m)| x - m).collect();
            let up: Vec<i64> = k2.iter().zip(n).map(|(k, m)| k + m).collect();
            let down: Vec<i64> = k2.iter().zip(n).map(|(k, m)| k - m).collect();
            out += I * lambda * vn * (bw.amplitude(&src, &up, j) - bw.amplitude(&src, &down, j));
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bfz::{bfz_forward, bfz_forward_at, paired_thetas};

    fn gaussian_packet(dim: usize, radius: usize, per_cell: usize, k0: f64) -> SampledWavefunction {
        SampledWavefunction::from_fn(dim, radius, per_cell, |x| {
            let r2: f64 = x.iter().map(|v| (v - 0.3).powi(2)).sum();
            Complex64::from_polar((-PI * r2 / 0.25).exp(), 2.0 * PI * k0 * x[0])
        })
    }

    #[test]
    fn gaussian_wigner_closed_form() {
        let phi = SampledWavefunction::from_fn(1, 4, 16, |x| {
            Complex64::new(2f64.powf(0.25) * (-PI * x[0] * x[0]).exp(), 0.0)
        });
        let w = wigner_transform(&phi, &[0.0], &[0.0]);
        assert!((w - 2.0).norm() < 1e-6);
        for &(x, k) in &[(0.3, -0.2), (-0.45, 0.6)] {
            let w = wigner_transform(&phi, &[x], &[k]);
            let want = 2.0 * (-2.0 * PI * (x * x + k * k)).exp();
            assert!((w.re - want).abs() < 1e-6 && w.im.abs() < 1e-10);
        }
    }

    #[test]
    fn zero_wavefunction_has_zero_wigner() {
        let phi = SampledWavefunction::from_fn(1, 1, 8, |_| Complex64::new(0.0, 0.0));
        assert_eq!(
            wigner_transform(&phi, &[0.2], &[0.4]),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn bloch_wigner_matches_nested_loop_oracle() {
        let phi = gaussian_packet(1, 2, 16, 0.4);
        let m = 8;
        let eta = [0.125];
        let f = bfz_forward(&phi, m, 16).unwrap();
        let kbox = LatticeBox::new(1, 4);
        let ps = vec![vec![-0.3], vec![0.0], vec![0.55]];
        let bw = bloch_wigner_transform(&f, &eta, &kbox, 16, &ps, m).unwrap();
        let nodes = theta_nodes(&eta, m).unwrap();
        for zi in 0..16 {
            for (pi, p) in ps.iter().enumerate() {
                for k2 in -4i64..=4 {
                    let kappa = k2 as f64 / 2.0;
                    let mut s = Complex64::new(0.0, 0.0);
                    for th in &nodes {
                        for yi in 0..16 {
                            let a = f.value(&[eta[0] + th[0]], (zi + yi) % 16).unwrap();
                            let b = f.value(&[eta[0] - th[0]], (zi + 16 - yi) % 16).unwrap();
                            let y = yi as f64 / 16.0;
                            s += Complex64::from_polar(1.0, -4.0 * PI * (th[0] * p[0] + kappa * y))
                                * a
                                * b.conj();
                        }
                    }
                    s /= (16 * m) as f64;
                    assert!(
                        (bw.value(zi, pi, &[k2]) - s).norm() < 1e-8,
                        "z {zi} p {pi} k {k2}"
                    );
                }
            }
        }
    }

    #[test]
    fn a_priori_bound_and_zero_field() {
        let phi = gaussian_packet(1, 2, 32, 0.2);
        let norm = phi.norm_sqr();
        let m = 16;
        let f = bfz_forward(&phi, m, 32).unwrap();
        let ps: Vec<Vec<f64>> = (0..21).map(|i| vec![-2.0 + 0.2 * i as f64]).collect();
        let bw = bloch_wigner_transform(&f, &[0.0], &LatticeBox::new(1, 6), 32, &ps, m).unwrap();
        assert!(bw.sup_abs() <= norm * (1.0 + 1e-6));
        let zero = SampledWavefunction::from_fn(1, 2, 32, |_| Complex64::new(0.0, 0.0));
        let fz = bfz_forward(&zero, m, 32).unwrap();
        let bz = bloch_wigner_transform(&fz, &[0.0], &LatticeBox::new(1, 2), 32, &ps, m).unwrap();
        assert_eq!(bz.sup_abs(), 0.0);
    }

    #[test]
    fn off_half_grid_eta_is_rejected() {
        let phi = gaussian_packet(1, 2, 16, 0.0);
        let f = bfz_forward(&phi, 8, 16).unwrap();
        let r = bloch_wigner_transform(&f, &[0.1], &LatticeBox::new(1, 2), 16, &[vec![0.0]], 8);
        assert!(matches!(r, Err(Error::OffHalfGrid(_))));
    }

    #[test]
    fn reconstruction_matches_wigner() {
        let phi = gaussian_packet(1, 2, 32, 0.3);
        let m = 16;
        let eta = [-0.1875];
        let f = bfz_forward_at(
            &phi,
            &paired_thetas(&eta, &theta_nodes(&eta, m).unwrap()),
            32,
        )
        .unwrap();
        let bw =
            bloch_wigner_transform(&f, &eta, &LatticeBox::new(1, 8), 32, &[vec![0.0]], m).unwrap();
        for &(x, kappa) in &[(0.3, 0.5), (1.2, 0.0), (-0.6, 1.0)] {
            let k = kappa - eta[0];
            let want = wigner_transform(&phi, &[x], &[k]);
            let got = reconstruct_wigner(&bw, &[x], &[k]).unwrap();
            assert!((got - want).norm() < 1e-8, "x {x} k {k}: {got} vs {want}");
        }
        assert!(matches!(
            reconstruct_wigner(&bw, &[0.0], &[0.2]),
            Err(Error::EtaMismatch { .. })
        ));
    }

    #[test]
    fn real_even_wavefunction_has_real_wigner() {
        let phi = SampledWavefunction::from_fn(1, 2, 16, |x| {
            Complex64::new((-4.0 * x[0] * x[0]).exp(), 0.0)
        });
        for &(x, k) in &[(0.1, 0.7), (-0.8, -0.3)] {
            assert!(wigner_transform(&phi, &[x], &[k]).im.abs() < 1e-10);
        }
    }
}
