//! Observables at the mode `ξ = 0`: the η-quadrature, the resonant set and its
//! line picture, the delta-approximating time kernel with the slab mass split, the
//! single-mode scenario and the non-resonant observable terms.

use crate::divisors::{in_a_eta, DivisorConfig};
use crate::drivers::{apply_a_star, apply_x1_star, apply_z_star};
use crate::dynamics::{FiberSimulator, SimConfig};
use crate::error::{Error, Result};
use crate::field::{PGrid, PhaseLayout, TField, TestField};
use crate::lattice::{LatticeBox, PeriodicPotential};
use crate::numeric::{composite_gauss_legendre, loglog_slope, norm_int};
use crate::par;
use crate::scale::{bump, dual_pairing, dual_pairing_values};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A source of `T^{ε,η}_t` for arbitrary offsets `η`.
pub trait FieldProvider: Sync {
    fn eps(&self) -> f64;
    fn layout(&self) -> &PhaseLayout;
    fn t_field(&self, eta: &[f64], t: f64) -> Result<TField>;
}

/// `T^{ε,η}` from the exact fiber simulation of a base configuration, with `η` replaced per call.
#[derive(Clone, Debug)]
pub struct SimulatedProvider {
    pub base: SimConfig,
    layout: PhaseLayout,
}

impl SimulatedProvider {
    pub fn new(base: SimConfig) -> Self {
        let layout = base.layout();
        SimulatedProvider { base, layout }
    }
}

impl FieldProvider for SimulatedProvider {
    fn eps(&self) -> f64 {
        self.base.eps
    }
    fn layout(&self) -> &PhaseLayout {
        &self.layout
    }
    fn t_field(&self, eta: &[f64], t: f64) -> Result<TField> {
        let cfg = SimConfig {
            eta: eta.to_vec(),
            ..self.base.clone()
        };
        Ok(FiberSimulator::from_config(&cfg)?.t_field(t, &self.layout))
    }
}

/// A frozen smooth profile
/// `T(ξ, p, η, κ) = a_{ξκ} e^{−π|p − c_{ξκ}|²}(1 + ½cos(2π w_{ξκ}·η))` with seeded
/// coefficients decaying like `2^{−|ξ|}⟨κ⟩^{−2}`, independent of `t` and `ε`.
#[derive(Clone, Debug)]
pub struct SmoothProfile {
    pub layout: PhaseLayout,
    pub eps: f64,
    amps: Vec<Complex64>,
    centers: Vec<Vec<f64>>,
    waves: Vec<Vec<f64>>,
}

impl SmoothProfile {
    pub fn new(layout: &PhaseLayout, eps: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = layout.dim;
        let mut amps = Vec::new();
        let mut centers = Vec::new();
        let mut waves = Vec::new();
        for b in 0..layout.n_blocks() {
            let (xi, k2) = layout.block_labels(b);
            let decay = 0.5f64.powf(norm_int(&xi))
                / (1.0 + k2.iter().map(|k| (*k as f64 / 2.0).powi(2)).sum::<f64>());
            amps.push(Complex64::new(rng.gen_range(0.5..1.0), rng.gen_range(-0.5..0.5)) * decay);
            centers.push((0..d).map(|_| rng.gen_range(-0.3..0.3)).collect());
            waves.push((0..d).map(|_| rng.gen_range(1..=3) as f64).collect());
        }
        SmoothProfile {
            layout: layout.clone(),
            eps,
            amps,
            centers,
            waves,
        }
    }
}

impl FieldProvider for SmoothProfile {
    fn eps(&self) -> f64 {
        self.eps
    }
    fn layout(&self) -> &PhaseLayout {
        &self.layout
    }
    fn t_field(&self, eta: &[f64], t: f64) -> Result<TField> {
        let pts = self.layout.p.points();
        let mut values = Vec::with_capacity(self.layout.len());
        for b in 0..self.layout.n_blocks() {
            let ph: f64 = self.waves[b].iter().zip(eta).map(|(w, e)| w * e).sum();
            let a = self.amps[b] * (1.0 + 0.5 * (2.0 * PI * ph).cos());
            for p in &pts {
                let r2: f64 = p
                    .iter()
                    .zip(&self.centers[b])
                    .map(|(x, c)| (x - c).powi(2))
                    .sum();
                values.push(a * (-PI * r2).exp());
            }
        }
        Ok(TField::from_values(t, self.eps, eta, &self.layout, values))
    }
}

/// Quadrature for `∫_{[−1/4,1/4]^d} dη` whose nodes all belong to `A_η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaQuadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Number of nodes moved to the nearest admissible point.
    pub perturbed: usize,
}

/// Searches outward from `eta` along the coordinate directions and diagonals for an admissible point.
fn nearest_admissible(eta: &[f64], step: f64, cfg: &DivisorConfig) -> Result<Vec<f64>> {
    let d = eta.len();
    let dirs: Vec<Vec<f64>> = LatticeBox::new(d, 1)
        .points()
        .into_iter()
        .filter(|v| v.iter().any(|&x| x != 0))
        .map(|v| v.iter().map(|&x| x as f64).collect())
        .collect();
    for k in 1..=10_000 {
        for dir in &dirs {
            let cand: Vec<f64> = eta
                .iter()
                .zip(dir)
                .map(|(e, u)| e + k as f64 * step * u)
                .collect();
            if cand.iter().all(|c| c.abs() <= 0.25) && in_a_eta(&cand, cfg)?.member {
                return Ok(cand);
            }
        }
    }
    Err(Error::InvalidInput(format!(
        "no admissible offset near {eta:?}"
    )))
}

impl EtaQuadrature {
    fn filtered(
        nodes: Vec<Vec<f64>>,
        weights: Vec<f64>,
        step: f64,
        cfg: &DivisorConfig,
    ) -> Result<Self> {
        let fixed = par::map_range(nodes.len(), |i| -> Result<(Vec<f64>, bool)> {
            if in_a_eta(&nodes[i], cfg)?.member {
                Ok((nodes[i].clone(), false))
            } else {
                Ok((nearest_admissible(&nodes[i], step, cfg)?, true))
            }
        });
        let mut out = Vec::with_capacity(nodes.len());
        let mut perturbed = 0;
        for f in fixed {
            let (n, p) = f?;
            perturbed += p as usize;
            out.push(n);
        }
        Ok(EtaQuadrature {
            nodes: out,
            weights,
            perturbed,
        })
    }

    /// Tensor composite Gauss–Legendre rule with `panels[a]` panels of `order` nodes on axis `a`.
    pub fn gauss(order: usize, panels: &[usize], cfg: &DivisorConfig) -> Result<Self> {
        let rules: Vec<(Vec<f64>, Vec<f64>)> = panels
            .iter()
            .map(|&p| composite_gauss_legendre(-0.25, 0.25, order, p))
            .collect();
        let total: usize = rules.iter().map(|r| r.0.len()).product();
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut x = vec![0.0; panels.len()];
            let mut w = 1.0;
            for a in (0..panels.len()).rev() {
                let n = rules[a].0.len();
                x[a] = rules[a].0[idx % n];
                w *= rules[a].1[idx % n];
                idx /= n;
            }
            nodes.push(x);
            weights.push(w);
        }
        let step = 1e-3 / panels.iter().copied().max().unwrap_or(1) as f64;
        Self::filtered(nodes, weights, step, cfg)
    }

    /// Trapezoid rule on the offsets `j/(2m)` (multiples of `stride`) of `[−1/4, 1/4]^d`,
    /// the offsets accepted by a fiber simulation with `m` quasimomentum nodes.
    pub fn half_grid(dim: usize, m: usize, stride: usize, cfg: &DivisorConfig) -> Result<Self> {
        if m % 2 != 0 || stride == 0 || (m / 2) % stride != 0 {
            return Err(Error::InvalidInput(format!(
                "m = {m} and stride = {stride} do not tile [-1/4, 1/4]"
            )));
        }
        let half = (m / 2 / stride) as i64;
        let h = stride as f64 / (2.0 * m as f64);
        let axis: Vec<(f64, f64)> = (-half..=half)
            .map(|j| (j as f64 * h, if j.abs() == half { h / 2.0 } else { h }))
            .collect();
        let total = axis.len().pow(dim as u32);
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut x = vec![0.0; dim];
            let mut w = 1.0;
            for a in (0..dim).rev() {
                let (xa, wa) = axis[idx % axis.len()];
                x[a] = xa;
                w *= wa;
                idx /= axis.len();
            }
            nodes.push(x);
            weights.push(w);
        }
        Self::filtered(nodes, weights, 1.0 / (2.0 * m as f64), cfg)
    }

    /// A single offset with unit weight.
    pub fn single(eta: &[f64]) -> Self {
        EtaQuadrature {
            nodes: vec![eta.to_vec()],
            weights: vec![1.0],
            perturbed: 0,
        }
    }
}

/// `ψ_F(ξ, p, κ) = I_{ξ=0} F(p, κ − η)`.
pub fn observable_test_field(
    layout: &PhaseLayout,
    eta: &[f64],
    f: &(impl Fn(&[f64], &[f64]) -> f64 + Sync),
) -> TestField {
    TestField::from_fn(layout, 2, |xi, k2, p| {
        if xi.iter().any(|&x| x != 0) {
            return Complex64::new(0.0, 0.0);
        }
        let k: Vec<f64> = k2
            .iter()
            .zip(eta)
            .map(|(k, e)| *k as f64 / 2.0 - e)
            .collect();
        Complex64::new(f(p, &k), 0.0)
    })
}

fn eta_sum(
    quad: &EtaQuadrature,
    term: impl Fn(&[f64]) -> Result<Complex64> + Sync,
) -> Result<Complex64> {
    let vals = par::map_range(quad.nodes.len(), |i| {
        term(&quad.nodes[i]).map(|v| v * quad.weights[i])
    });
    let mut s = Complex64::new(0.0, 0.0);
    for v in vals {
        s += v?;
    }
    Ok(s)
}

/// `O_t^ε = ∫dη ⟨T_t^ε, I_{ξ=0}F⟩` by the η-quadrature.
pub fn observable_xi0(
    provider: &dyn FieldProvider,
    f: &(impl Fn(&[f64], &[f64]) -> f64 + Sync),
    t: f64,
    quad: &EtaQuadrature,
) -> Result<Complex64> {
    let layout = provider.layout();
    if layout
        .block_of(&vec![0; layout.dim], &vec![0; layout.dim])
        .is_none()
    {
        return Err(Error::GridMismatch("layout has no xi = 0 mode".into()));
    }
    eta_sum(quad, |eta| {
        dual_pairing(
            &provider.t_field(eta, t)?,
            &observable_test_field(layout, eta, f),
        )
    })
}

/// The full `ξ`-sum of the observable for `|ξ|_∞ ≤ xi_radius`, with the oscillatory
/// prefactor `e^{2πiε^{−1}ξ·(p − 4π(κ−η)t)}`; returns the `ξ = 0` part and the rest.
pub fn observable_with_modes(
    provider: &dyn FieldProvider,
    f: &(impl Fn(&[f64], &[f64]) -> f64 + Sync),
    t: f64,
    quad: &EtaQuadrature,
    xi_radius: i64,
) -> Result<(Complex64, Complex64)> {
    let layout = provider.layout();
    let eps = provider.eps();
    let np = layout.p.len();
    let pts = layout.p.points();
    let parts = par::map_range(quad.nodes.len(), |i| -> Result<(Complex64, Complex64)> {
        let eta = &quad.nodes[i];
        let tf = provider.t_field(eta, t)?;
        let (mut zero, mut rest) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for b in 0..layout.n_blocks() {
            let (xi, k2) = layout.block_labels(b);
            if xi.iter().any(|x| x.abs() > xi_radius) {
                continue;
            }
            let km: Vec<f64> = k2
                .iter()
                .zip(eta)
                .map(|(k, e)| *k as f64 / 2.0 - e)
                .collect();
            let mut s = Complex64::new(0.0, 0.0);
            for (j, p) in pts.iter().enumerate() {
                let ph: f64 = xi
                    .iter()
                    .zip(p)
                    .zip(&km)
                    .map(|((x, pp), k)| *x as f64 * (pp - 4.0 * PI * k * t))
                    .sum();
                s += tf.values[b * np + j] * Complex64::from_polar(f(p, &km), 2.0 * PI * ph / eps);
            }
            if xi.iter().all(|&x| x == 0) {
                zero += s;
            } else {
                rest += s;
            }
        }
        let w = quad.weights[i] * layout.p_weight();
        Ok((zero * w, rest * w))
    });
    let mut out = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for p in parts {
        let (a, b) = p?;
        out.0 += a;
        out.1 += b;
    }
    Ok(out)
}

/// `∫dη ⟨T_s, A*_{st} I_{ξ=0}F⟩`.
pub fn observable_transport_term(
    provider: &dyn FieldProvider,
    f: &(impl Fn(&[f64], &[f64]) -> f64 + Sync),
    s: f64,
    t: f64,
    quad: &EtaQuadrature,
) -> Result<Complex64> {
    let layout = provider.layout();
    eta_sum(quad, |eta| {
        let psi = observable_test_field(layout, eta, f);
        dual_pairing(&provider.t_field(eta, s)?, &apply_a_star(&psi, s, t, eta)?)
    })
}

/// A segment of the line `{k : n·k = |n|²}` inside the view box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceLine {
    pub n: Vec<i64>,
    pub start: [f64; 2],
    pub end: [f64; 2],
}

/// Clips `{k : n·k = |n|²}` to `[−half, half]²`.
pub fn clip_line(n: &[i64], half: f64) -> Option<ResonanceLine> {
    let p = [n[0] as f64, n[1] as f64];
    let d = [-(n[1] as f64), n[0] as f64];
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for a in 0..2 {
        if d[a] == 0.0 {
            if p[a].abs() > half {
                return None;
            }
        } else {
            let u1 = (-half - p[a]) / d[a];
            let u2 = (half - p[a]) / d[a];
            lo = lo.max(u1.min(u2));
            hi = hi.min(u1.max(u2));
        }
    }
    if hi <= lo {
        return None;
    }
    Some(ResonanceLine {
        n: n.to_vec(),
        start: [p[0] + lo * d[0], p[1] + lo * d[1]],
        end: [p[0] + hi * d[0], p[1] + hi * d[1]],
    })
}

/// One clipped line per `n ∈ Z²\{0}` with `|n|_∞ ≤ n_radius`, in lattice-box order.
pub fn resonance_lines(n_radius: i64, half: f64) -> Result<Vec<ResonanceLine>> {
    if n_radius < 1 || !(half > 0.0) {
        return Err(Error::InvalidInput(
            "n_radius must be at least 1 and the view box positive".into(),
        ));
    }
    let ns: Vec<Vec<i64>> = LatticeBox::new(2, n_radius)
        .points()
        .into_iter()
        .filter(|n| n.iter().any(|&x| x != 0))
        .collect();
    Ok(resonance_lines_for(&ns, half))
}

/// The clipped lines of the given lattice vectors, e.g. the support of a potential.
pub fn resonance_lines_for(ns: &[Vec<i64>], half: f64) -> Vec<ResonanceLine> {
    ns.iter().filter_map(|n| clip_line(n, half)).collect()
}

/// A standalone SVG document drawing the lines in the view box `[−half, half]²`.
pub fn lines_svg(lines: &[ResonanceLine], half: f64) -> String {
    let size = 600.0;
    let map = |x: f64, y: f64| {
        (
            (x + half) / (2.0 * half) * size,
            (half - y) / (2.0 * half) * size,
        )
    };
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n");
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n"
    ));
    for l in lines {
        let (x1, y1) = map(l.start[0], l.start[1]);
        let (x2, y2) = map(l.end[0], l.end[1]);
        s.push_str(&format!("<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"black\" stroke-width=\"0.8\"/>\n"));
    }
    s.push_str("</svg>\n");
    s
}

/// Membership of `(κ, η)` in the slab `|n·(2κ − 2η − n)| ≤ r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantSlab {
    pub n: Vec<i64>,
    pub r: f64,
}

impl ResonantSlab {
    /// `n·(2κ − 2η − n)`.
    pub fn offset(&self, kappa2: &[i64], eta: &[f64]) -> f64 {
        self.n
            .iter()
            .zip(kappa2)
            .zip(eta)
            .map(|((m, k), e)| *m as f64 * (*k as f64 - 2.0 * e - *m as f64))
            .sum()
    }

    pub fn contains(&self, kappa2: &[i64], eta: &[f64]) -> bool {
        self.offset(kappa2, eta).abs() <= self.r
    }
}

/// `K = ε(1 − cos(4π²ε^{−1}c′τ))/(4π²c′)²`, with the limit `τ²/(2ε)` for small arguments.
pub fn delta_kernel(c_prime: f64, tau: f64, eps: f64) -> f64 {
    let lam = 4.0 * PI * PI * c_prime * tau / eps;
    if lam.abs() < 1e-6 {
        tau * tau / (2.0 * eps)
    } else {
        let h = (lam / 2.0).sin();
        eps * 2.0 * h * h / (4.0 * PI * PI * c_prime).powi(2)
    }
}

/// The resonant observable term split by slab membership.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantSplit {
    /// Signed partial sums on and off the slabs.
    pub on: (f64, f64),
    pub off: (f64, f64),
    /// Sums of absolute values of the summands.
    pub on_mass: f64,
    pub off_mass: f64,
}

impl ResonantSplit {
    pub fn total(&self) -> Complex64 {
        Complex64::new(self.on.0 + self.off.0, self.on.1 + self.off.1)
    }
}

/// `2 Σ_n |V̂(n)|² ∫dη ∫dp Σ_κ T_s(0, p, η, κ) K(n·(2κ−2η−n), t−s, ε)[F(p, κ−η−n) − F(p, κ−η)]`,
/// split by `|n·(2κ−2η−n)| ≤ r`.
pub fn resonant_mass_split(
    provider: &dyn FieldProvider,
    f: &(impl Fn(&[f64], &[f64]) -> f64 + Sync),
    s: f64,
    t: f64,
    quad: &EtaQuadrature,
    v: &PeriodicPotential,
    r: f64,
) -> Result<ResonantSplit> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(
            "slab half-width must be positive".into(),
        ));
    }
    let layout = provider.layout();
    let eps = provider.eps();
    let np = layout.p.len();
    let pts = layout.p.points();
    let modes = v.modes();
    let zero = vec![0i64; layout.dim];
    let parts = par::map_range(quad.nodes.len(), |i| -> Result<[f64; 6]> {
        let eta = &quad.nodes[i];
        let tf = provider.t_field(eta, s)?;
        let mut acc = [0.0; 6];
        for (kidx, k2) in layout.kappa2.points().iter().enumerate() {
            let b = layout.block_index(layout.xi.index(&zero).expect("xi = 0 present"), kidx);
            let km: Vec<f64> = k2
                .iter()
                .zip(eta)
                .map(|(k, e)| *k as f64 / 2.0 - e)
                .collect();
            for (n, vn) in &modes {
                let slab = ResonantSlab { n: n.clone(), r };
                let c = slab.offset(k2, eta);
                let kern = 2.0 * vn.norm_sqr() * delta_kernel(c, t - s, eps);
                let kn: Vec<f64> = km.iter().zip(n).map(|(k, m)| k - *m as f64).collect();
                let on = slab.contains(k2, eta);
                for (j, p) in pts.iter().enumerate() {
                    let diff = f(p, &kn) - f(p, &km);
                    if diff == 0.0 {
                        continue;
                    }
                    let term = tf.values[b * np + j] * (kern * diff);
                    let off = if on { 0 } else { 3 };
                    acc[off] += term.re;
                    acc[off + 1] += term.im;
                    acc[off + 2] += term.norm();
                }
            }
        }
        let w = quad.weights[i] * layout.p_weight();
        Ok(acc.map(|x| x * w))
    });
    let mut tot = [0.0; 6];
    for p in parts {
        let a = p?;
        tot.iter_mut().zip(a).for_each(|(t, x)| *t += x);
    }
    Ok(ResonantSplit {
        on: (tot[0], tot[1]),
        off: (tot[3], tot[4]),
        on_mass: tot[2],
        off_mass: tot[5],
    })
}

/// Outcome of the single-mode scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleModeReport {
    pub rho: f64,
    pub eps: Vec<f64>,
    /// `|resonant term|` for `F` supported in `S₁`.
    pub term: Vec<f64>,
    /// `|resonant term|` for the control `F` supported inside the band around `k₁ = 1/2`.
    pub control: Vec<f64>,
    /// `term[last] / term[0]`.
    pub ratio: f64,
    pub control_ratio: f64,
    /// The reduced resonance picture of the potential.
    pub lines: Vec<ResonanceLine>,
}

/// Settings of the single-mode scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleModeSetup {
    pub tau: f64,
    /// Panels of 8 Gauss nodes along `η₁` and `η₂`.
    pub panels: [usize; 2],
    pub kappa2_radius: i64,
    pub p_points: usize,
    pub seed: u64,
}

impl Default for SingleModeSetup {
    fn default() -> Self {
        SingleModeSetup {
            tau: 0.25,
            panels: [1024, 1],
            kappa2_radius: 3,
            p_points: 8,
            seed: 11,
        }
    }
}

/// The resonant observable term for `V̂` supported on `±e₁` in `d = 2`, evaluated along
/// `eps_list` against the frozen [`SmoothProfile`], for `F` with first-momentum support in
/// `S₁ = ([−½−ρ, −½+ρ] ∪ [½−ρ, ½+ρ])^c` and for a control `F` supported in `[½−ρ, ½+ρ]`.
pub fn single_mode_scenario(
    rho: f64,
    eps_list: &[f64],
    setup: &SingleModeSetup,
) -> Result<SingleModeReport> {
    if !(rho > 0.0 && rho < 0.1) {
        return Err(Error::InvalidInput(format!(
            "rho = {rho} must lie in (0, 0.1)"
        )));
    }
    let layout = PhaseLayout::new(
        2,
        0,
        setup.kappa2_radius,
        PGrid::centered(2, setup.p_points, 1.0),
    );
    let v = PeriodicPotential::single_mode(2, 0, 1.0);
    let cfg = DivisorConfig {
        delta: 0.1,
        n_radius: 4,
        dim: 2,
        gamma: 0.4,
    };
    let quad = EtaQuadrature::gauss(8, &setup.panels, &cfg)?;
    let inner = 0.5 - 2.0 * rho;
    let f_s1 = move |p: &[f64], k: &[f64]| {
        bump(&[p[0] / 0.9, p[1] / 0.9]) * bump(&[k[0] / inner]) * bump(&[k[1] / 0.9])
    };
    let f_band = move |p: &[f64], k: &[f64]| {
        bump(&[p[0] / 0.9, p[1] / 0.9]) * bump(&[(k[0] - 0.5) / rho]) * bump(&[k[1] / 0.9])
    };
    let mut term = Vec::new();
    let mut control = Vec::new();
    for &eps in eps_list {
        let prov = SmoothProfile::new(&layout, eps, setup.seed);
        term.push(
            resonant_mass_split(&prov, &f_s1, 0.0, setup.tau, &quad, &v, 1.0)?
                .total()
                .norm(),
        );
        control.push(
            resonant_mass_split(&prov, &f_band, 0.0, setup.tau, &quad, &v, 1.0)?
                .total()
                .norm(),
        );
    }
    let last = eps_list.len().saturating_sub(1);
    Ok(SingleModeReport {
        rho,
        eps: eps_list.to_vec(),
        ratio: term[last] / term[0],
        control_ratio: control[last] / control[0],
        term,
        control,
        lines: resonance_lines_for(&[vec![1, 0], vec![-1, 0]], 2.0),
    })
}

/// The non-resonant observable terms along an ε ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonResonantReport {
    pub eps: Vec<f64>,
    /// `|∫dη ⟨T_s, X¹*_{st} I_{ξ=0}F⟩|`.
    pub x1: Vec<f64>,
    /// `|∫dη ⟨T_s, Z*_{st} I_{ξ=0}F⟩|`.
    pub z: Vec<f64>,
    pub x1_slope: f64,
    pub z_slope: f64,
}

/// Evaluates the first-order and non-resonant second-order observable terms for each
/// provider of the ladder and fits their ε-slopes.
pub fn observable_nonresonant_bounds(
    providers: &[&dyn FieldProvider],
    f: &(impl Fn(&[f64], &[f64]) -> f64 + Sync),
    s: f64,
    t: f64,
    quad: &EtaQuadrature,
    v: &PeriodicPotential,
) -> Result<NonResonantReport> {
    let mut eps = Vec::new();
    let mut x1 = Vec::new();
    let mut z = Vec::new();
    for prov in providers {
        let e = prov.eps();
        let layout = prov.layout();
        let a = eta_sum(quad, |eta| {
            let psi = observable_test_field(layout, eta, f);
            let ts = prov.t_field(eta, s)?;
            Ok(dual_pairing_values(
                layout,
                &ts.values,
                &apply_x1_star(&psi, s, t, e, eta, v).values,
            ))
        })?;
        let b = eta_sum(quad, |eta| {
            let psi = observable_test_field(layout, eta, f);
            let ts = prov.t_field(eta, s)?;
            Ok(dual_pairing_values(
                layout,
                &ts.values,
                &apply_z_star(&psi, s, t, e, eta, v).values,
            ))
        })?;
        eps.push(e);
        x1.push(a.norm());
        z.push(b.norm());
    }
    let slope = |y: &[f64]| {
        if y.len() >= 2 && y.iter().all(|v| *v > 0.0) {
            loglog_slope(&eps, y)
        } else {
            f64::NAN
        }
    };
    Ok(NonResonantReport {
        x1_slope: slope(&x1),
        z_slope: slope(&z),
        eps,
        x1,
        z,
    })
}
