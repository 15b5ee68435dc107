//! Time evolution: exact fiber propagation, the Bloch–Wigner evolution law, the
//! co-moving rescaled field `T^ε` and its dynamics.
//!
//! Fibers are simulated at microscopic time `τ = t/ε`. The rescaling
//! `p ↦ p/ε` turns the node waves `e^{−4πiθ'·p}` into `e^{−4πiθ'·p/ε}`, and the
//! co-moving frame multiplies `z` mode `ξ` by `e^{8π²iξ·(κ−η)t/ε}`.

use crate::bfz::{
    bfz_forward_at, fiber_matrix, paired_thetas, theta_nodes, FiberPropagator, SampledWavefunction,
};
use crate::error::{Error, Result};
use crate::field::{PGrid, PhaseLayout, TField, ThetaSpectrum};
use crate::lattice::{LatticeBox, PeriodicPotential};
use crate::numeric::I;
use crate::par;
use crate::wigner::{pair_amplitudes, BlochWignerField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use crate::bfz::evolve_fiber;

/// Initial wavefunction descriptors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `exp(−π|x−c|²/w²) e^{2πik₀·x}` sampled on `[−R, R)^d`.
    GaussianPacket {
        center: Vec<f64>,
        width: f64,
        k0: Vec<f64>,
        radius: usize,
        per_cell: usize,
    },
}

impl InitialData {
    pub fn sample(&self) -> SampledWavefunction {
        match self {
            InitialData::GaussianPacket {
                center,
                width,
                k0,
                radius,
                per_cell,
            } => SampledWavefunction::from_fn(center.len(), *radius, *per_cell, |x| {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                let ph: f64 = x.iter().zip(k0).map(|(a, k)| a * k).sum();
                Complex64::from_polar((-PI * r2 / (width * width)).exp(), 2.0 * PI * ph)
            }),
        }
    }
}

/// Parameters of a simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub eps: f64,
    pub t_final: f64,
    pub dt: f64,
    pub potential: PeriodicPotential,
    /// Torus points per axis.
    pub n: usize,
    /// Quasimomentum nodes per axis.
    pub m: usize,
    pub eta: Vec<f64>,
    pub kappa2_radius: i64,
    pub xi_radius: i64,
    pub p_grid: PGrid,
    pub initial: InitialData,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidInput(format!(
                "eps = {} outside (0, 1)",
                self.eps
            )));
        }
        if self.dt <= 0.0 || self.t_final < 0.0 {
            return Err(Error::InvalidInput("time step must be positive".into()));
        }
        if self.eta.len() != self.potential.dim || self.p_grid.dim != self.potential.dim {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        let InitialData::GaussianPacket { per_cell, .. } = &self.initial;
        if per_cell % self.n != 0 {
            return Err(Error::Incommensurate(format!(
                "{} torus points, {} samples per cell",
                self.n, per_cell
            )));
        }
        Ok(())
    }

    pub fn layout(&self) -> PhaseLayout {
        PhaseLayout::new(
            self.eta.len(),
            self.xi_radius,
            self.kappa2_radius,
            self.p_grid.clone(),
        )
    }
}

/// Exact propagation of the fibers at `η ± θ'_j` for one offset `η`.
#[derive(Clone, Debug)]
pub struct FiberSimulator {
    pub dim: usize,
    pub n: usize,
    pub eps: f64,
    pub eta: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub potential: PeriodicPotential,
    /// `‖φ₀‖²` on the sample grid.
    pub norm_sqr: f64,
    props: Vec<FiberPropagator>,
    projected: Vec<Vec<Complex64>>,
}

impl FiberSimulator {
    pub fn new(
        phi0: &SampledWavefunction,
        v: &PeriodicPotential,
        eps: f64,
        eta: &[f64],
        n: usize,
        m: usize,
    ) -> Result<Self> {
        let nodes = theta_nodes(eta, m)?;
        let thetas = paired_thetas(eta, &nodes);
        let field = bfz_forward_at(phi0, &thetas, n)?;
        let parts = par::map_range(thetas.len(), |i| {
            let prop = FiberPropagator::new(fiber_matrix(&thetas[i], v, eps, n));
            let a = prop.project(&field.fiber_modes(i));
            (prop, a)
        });
        let (props, projected) = parts.into_iter().unzip();
        Ok(FiberSimulator {
            dim: eta.len(),
            n,
            eps,
            eta: eta.to_vec(),
            nodes,
            potential: v.clone(),
            norm_sqr: phi0.norm_sqr(),
            props,
            projected,
        })
    }

    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        FiberSimulator::new(
            &cfg.initial.sample(),
            &cfg.potential,
            cfg.eps,
            &cfg.eta,
            cfg.n,
            cfg.m,
        )
    }

    /// Mode coefficients at microscopic time `τ` of the fibers at `η + θ'_j` and `η − θ'_j`.
    pub fn modes_at(&self, tau: f64) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        let all = par::map_range(self.props.len(), |i| {
            self.props[i].evolve_projected(&self.projected[i], tau)
        });
        let half = self.nodes.len();
        let mut it = all.into_iter();
        let plus: Vec<_> = it.by_ref().take(half).collect();
        let minus: Vec<_> = it.collect();
        (plus, minus)
    }

    fn weight(&self) -> f64 {
        1.0 / self.nodes.len() as f64
    }

    /// The Bloch–Wigner field at microscopic time `τ`.
    pub fn bloch_wigner(
        &self,
        tau: f64,
        kappa2: &LatticeBox,
        p_samples: &[Vec<f64>],
    ) -> BlochWignerField {
        let (plus, minus) = self.modes_at(tau);
        let xi = LatticeBox::new(self.dim, self.n as i64 - 1);
        let amps = pair_amplitudes(self.n, &plus, &minus, &xi, kappa2, self.weight());
        BlochWignerField::from_amplitudes(
            self.n,
            &self.eta,
            self.nodes.clone(),
            xi,
            kappa2.clone(),
            p_samples,
            amps,
        )
    }

    /// `T^{ε,η}` at macroscopic time `t` on `layout`.
    pub fn t_field(&self, t: f64, layout: &PhaseLayout) -> TField {
        let (plus, minus) = self.modes_at(t / self.eps);
        let amps = pair_amplitudes(
            self.n,
            &plus,
            &minus,
            &layout.xi,
            &layout.kappa2,
            self.weight(),
        );
        let spectrum = frame_spectrum(layout, &self.nodes, amps, &self.eta, t, self.eps);
        TField::from_spectrum(t, self.eps, &self.eta, layout, spectrum)
    }
}

/// Applies the co-moving phase `e^{8π²iξ·(κ−η)t/ε}` to `[ξ][κ][j]` amplitudes.
fn frame_spectrum(
    layout: &PhaseLayout,
    nodes: &[Vec<f64>],
    mut amps: Vec<Complex64>,
    eta: &[f64],
    t: f64,
    eps: f64,
) -> ThetaSpectrum {
    let m = nodes.len();
    for b in 0..layout.n_blocks() {
        let (xi, k2) = layout.block_labels(b);
        let s: f64 = xi
            .iter()
            .zip(&k2)
            .zip(eta)
            .map(|((x, k), e)| *x as f64 * (*k as f64 / 2.0 - e))
            .sum();
        let ph = Complex64::from_polar(1.0, 8.0 * PI * PI * s * t / eps);
        amps[b * m..(b + 1) * m].iter_mut().for_each(|a| *a *= ph);
    }
    ThetaSpectrum {
        nodes: nodes.to_vec(),
        scale: 1.0 / eps,
        coeffs: amps,
    }
}

/// `T(ξ) = e^{8π²iε^{−1}ξ·(κ−η)t} F_z W̃^ε(ξ)` from the microscopic field at `τ = t/ε`.
pub fn build_t_field(
    bw: &BlochWignerField,
    t: f64,
    eps: f64,
    layout: &PhaseLayout,
) -> Result<TField> {
    if layout.dim != bw.dim {
        return Err(Error::GridMismatch("dimension".into()));
    }
    let m = bw.nodes.len();
    let mut amps = vec![Complex64::new(0.0, 0.0); layout.n_blocks() * m];
    for b in 0..layout.n_blocks() {
        let (xi, k2) = layout.block_labels(b);
        for j in 0..m {
            amps[b * m + j] = bw.amplitude(&xi, &k2, j);
        }
    }
    let spectrum = frame_spectrum(layout, &bw.nodes, amps, &bw.eta, t, eps);
    Ok(TField::from_spectrum(t, eps, &bw.eta, layout, spectrum))
}

/// The two oscillatory sums of `Q_t^ε` applied to block-wise data `g(ξ, 2κ)`.
fn q_t_apply<T>(
    layout: &PhaseLayout,
    eta: &[f64],
    t: f64,
    eps: f64,
    v: &PeriodicPotential,
    lookup: impl Fn(&[i64], &[i64]) -> Option<T> + Sync,
    combine: impl Fn(&mut [Complex64], Complex64, &T) + Sync,
    width: usize,
) -> Vec<Complex64>
where
    T: Sync,
{
    let pref = I / eps.sqrt();
    let modes = v.modes();
    let blocks = par::map_range(layout.n_blocks(), |b| {
        let (xi, k2) = layout.block_labels(b);
        let mut out = vec![Complex64::new(0.0, 0.0); width];
        for (n, vn) in &modes {
            let src: Vec<i64> = xi.iter().zip(n).map(|(x, m)| x - m).collect();
            let nn: i64 = n.iter().map(|x| x * x).sum();
            let nxi: i64 = n.iter().zip(&xi).map(|(a, b)| a * b).sum();
            let nk: i64 = n.iter().zip(&k2).map(|(a, b)| a * b).sum();
            let neta: f64 = n.iter().zip(eta).map(|(a, e)| *a as f64 * e).sum();
            let up: Vec<i64> = k2.iter().zip(n).map(|(k, m)| k + m).collect();
            let down: Vec<i64> = k2.iter().zip(n).map(|(k, m)| k - m).collect();
            if let Some(g) = lookup(&src, &up) {
                let f = (nk + nn - nxi) as f64 - 2.0 * neta;
                let c = pref * vn * Complex64::from_polar(1.0, 4.0 * PI * PI * f * t / eps);
                combine(&mut out, c, &g);
            }
            if let Some(g) = lookup(&src, &down) {
                let f = (nk - nn + nxi) as f64 - 2.0 * neta;
                let c = -pref * vn * Complex64::from_polar(1.0, 4.0 * PI * PI * f * t / eps);
                combine(&mut out, c, &g);
            }
        }
        out
    });
    blocks.into_iter().flatten().collect()
}

/// `−4π(κ−η)·∇_p T + Q_t^ε T`.
///
/// Fields carrying a plane-wave spectrum are differentiated exactly and the
/// result keeps a spectrum; otherwise `∇_p` is the spectral derivative on the grid.
pub fn t_evolution_rhs(tf: &TField, v: &PeriodicPotential) -> TField {
    let layout = &tf.layout;
    let np = layout.p.len();
    match &tf.spectrum {
        Some(spec) => {
            let m = spec.n_nodes();
            let mut coeffs = q_t_apply(
                layout,
                &tf.eta,
                tf.t,
                tf.eps,
                v,
                |x, k| layout.block_of(x, k),
                |out, c, &b| {
                    out.iter_mut()
                        .zip(spec.block(b))
                        .for_each(|(o, a)| *o += c * a);
                },
                m,
            );
            for b in 0..layout.n_blocks() {
                let (_, k2) = layout.block_labels(b);
                for j in 0..m {
                    let s: f64 = k2
                        .iter()
                        .zip(&tf.eta)
                        .zip(&spec.nodes[j])
                        .map(|((k, e), th)| (*k as f64 / 2.0 - e) * th)
                        .sum();
                    coeffs[b * m + j] +=
                        spec.coeffs[b * m + j] * I * 16.0 * PI * PI * s * spec.scale;
                }
            }
            let out = ThetaSpectrum {
                nodes: spec.nodes.clone(),
                scale: spec.scale,
                coeffs,
            };
            TField::from_spectrum(tf.t, tf.eps, &tf.eta, layout, out)
        }
        None => {
            let mut values = q_t_apply(
                layout,
                &tf.eta,
                tf.t,
                tf.eps,
                v,
                |x, k| layout.block_of(x, k),
                |out, c, &b| {
                    out.iter_mut()
                        .zip(&tf.values[b * np..(b + 1) * np])
                        .for_each(|(o, a)| *o += c * a);
                },
                np,
            );
            for axis in 0..layout.dim {
                let g = tf.grad_p(axis);
                for b in 0..layout.n_blocks() {
                    let (_, k2) = layout.block_labels(b);
                    let kc = k2[axis] as f64 / 2.0 - tf.eta[axis];
                    for i in 0..np {
                        values[b * np + i] -= g[b * np + i] * 4.0 * PI * kc;
                    }
                }
            }
            TField::from_values(tf.t, tf.eps, &tf.eta, layout, values)
        }
    }
}

/// A source of `T^{ε,η}_t` at arbitrary times.
pub trait History: Sync {
    fn layout(&self) -> &PhaseLayout;
    fn eps(&self) -> f64;
    fn eta(&self) -> &[f64];
    fn at(&self, t: f64) -> TField;
}

/// A simulator paired with an output layout.
#[derive(Clone, Debug)]
pub struct SimulatedHistory {
    pub sim: FiberSimulator,
    pub layout: PhaseLayout,
}

impl History for SimulatedHistory {
    fn layout(&self) -> &PhaseLayout {
        &self.layout
    }
    fn eps(&self) -> f64 {
        self.sim.eps
    }
    fn eta(&self) -> &[f64] {
        &self.sim.eta
    }
    fn at(&self, t: f64) -> TField {
        self.sim.t_field(t, &self.layout)
    }
}

/// Snapshots `T_t` at `t = 0, dt, …, t_final`.
pub fn simulate(cfg: &SimConfig) -> Result<Vec<TField>> {
    let sim = FiberSimulator::from_config(cfg)?;
    let layout = cfg.layout();
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    Ok((0..=steps)
        .map(|k| sim.t_field(k as f64 * cfg.dt, &layout))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet() -> SampledWavefunction {
        InitialData::GaussianPacket {
            center: vec![0.2],
            width: 1.2,
            k0: vec![0.15],
            radius: 4,
            per_cell: 16,
        }
        .sample()
    }

    fn small_layout() -> PhaseLayout {
        PhaseLayout::new(1, 2, 4, PGrid::centered(1, 64, 2.0))
    }

    #[test]
    fn initial_field_is_fourier_transform_of_bloch_wigner() {
        let phi = packet();
        let v = PeriodicPotential::single_mode(1, 0, 0.3);
        let eta = [-0.125];
        let sim = FiberSimulator::new(&phi, &v, 0.1, &eta, 16, 16).unwrap();
        let layout = small_layout();
        let t0 = sim.t_field(0.0, &layout);
        // macroscopic p corresponds to microscopic p/ε, followed by a z-grid DFT
        let ps: Vec<Vec<f64>> = (0..4)
            .map(|i| vec![(-2.0 + 0.5 * i as f64) / 0.1])
            .collect();
        let bw = sim.bloch_wigner(0.0, &layout.kappa2, &ps);
        for (pi, p) in ps.iter().enumerate() {
            let pidx = ((p[0] * 0.1 + 2.0) / layout.p.h).round() as usize;
            for b in 0..layout.n_blocks() {
                let (xi, k2) = layout.block_labels(b);
                if xi[0].abs() >= 8 {
                    continue;
                }
                let mut s = Complex64::new(0.0, 0.0);
                for z in 0..16 {
                    s += bw.value(z, pi, &k2)
                        * Complex64::from_polar(
                            1.0 / 16.0,
                            -2.0 * PI * xi[0] as f64 * z as f64 / 16.0,
                        );
                }
                assert!((t0.values[b * 64 + pidx] - s).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn z_constant_field_has_only_zero_mode() {
        let layout = small_layout();
        let nodes = vec![vec![0.1]];
        let bw = BlochWignerField::from_amplitudes(
            8,
            &[0.0],
            nodes,
            LatticeBox::new(1, 2),
            layout.kappa2.clone(),
            &[vec![0.0]],
            (0..5 * 9)
                .map(|i| {
                    if i / 9 == 2 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect(),
        );
        let t = build_t_field(&bw, 0.3, 0.1, &layout).unwrap();
        for b in 0..layout.n_blocks() {
            let (xi, _) = layout.block_labels(b);
            let nz = t.values[b * 64..(b + 1) * 64]
                .iter()
                .any(|v| v.norm() > 0.0);
            assert_eq!(nz, xi[0] == 0);
        }
    }

    #[test]
    fn free_frame_phase_keeps_single_mode_modulus() {
        let phi = packet();
        let sim =
            FiberSimulator::new(&phi, &PeriodicPotential::zero(1), 0.1, &[0.0], 16, 8).unwrap();
        let layout = PhaseLayout::new(1, 1, 2, PGrid::centered(1, 8, 0.4));
        let a = sim.t_field(0.0, &layout);
        let b = sim.t_field(0.37, &layout);
        // V = 0 gives pure transport of every node: amplitudes keep their modulus
        let sa = a.spectrum.unwrap();
        let sb = b.spectrum.unwrap();
        for (x, y) in sa.coeffs.iter().zip(&sb.coeffs) {
            assert!((x.norm() - y.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_potential_rhs_is_pure_transport_and_eta_untouched() {
        let phi = packet();
        let sim =
            FiberSimulator::new(&phi, &PeriodicPotential::zero(1), 0.1, &[0.0625], 16, 8).unwrap();
        let layout = small_layout();
        let t = sim.t_field(0.2, &layout);
        let r = t_evolution_rhs(&t, &PeriodicPotential::zero(1));
        assert_eq!(r.eta, t.eta);
        let g = t.grad_p(0);
        for b in 0..layout.n_blocks() {
            let (_, k2) = layout.block_labels(b);
            for i in 0..64 {
                let want = -4.0 * PI * (k2[0] as f64 / 2.0 - 0.0625) * g[b * 64 + i];
                assert!((r.values[b * 64 + i] - want).norm() < 1e-9 * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn single_mode_q_couples_neighbouring_kappa_only() {
        let layout = PhaseLayout::new(1, 0, 6, PGrid::centered(1, 4, 1.0));
        let kbox = LatticeBox::new(1, 6);
        let xi = LatticeBox::new(1, 3);
        let amps: Vec<Complex64> = (0..xi.len() * kbox.len())
            .map(|b| {
                if b == 3 * kbox.len() + 6 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let bw = BlochWignerField::from_amplitudes(
            8,
            &[0.0],
            vec![vec![0.0]],
            xi,
            kbox,
            &[vec![0.0]],
            amps,
        );
        let r =
            crate::wigner::bw_evolution_rhs(&bw, &PeriodicPotential::single_mode(1, 0, 1.0), 0.04);
        let _ = layout;
        for x in -3i64..=3 {
            for k in -6i64..=6 {
                let a = r.amplitude(&[x], &[k], 0);
                let expect =
                    x.abs() == 1 && (k == 1 || k == -1) && (x + k) % 2 == 0 || (x == 0 && k == 0);
                if !expect {
                    assert_eq!(a, Complex64::new(0.0, 0.0), "xi {x} 2k {k}");
                }
            }
        }
    }

    #[test]
    fn a_priori_bound_holds_along_the_flow() {
        let phi = packet();
        let v = PeriodicPotential::single_mode(1, 0, 1.0);
        let sim = FiberSimulator::new(&phi, &v, 0.1, &[0.0], 16, 16).unwrap();
        let layout = small_layout();
        for t in [0.0, 0.1, 0.5] {
            assert!(sim.t_field(t, &layout).sup_l2_xi() <= sim.norm_sqr * (1.0 + 1e-6));
        }
    }
}
