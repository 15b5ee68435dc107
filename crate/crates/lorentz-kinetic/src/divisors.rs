//! Small divisors: the function `c_δ(η)`, membership in the set `A_η` of admissible
//! offsets, and validators for the oscillatory-integral bounds that rely on them.
//!
//! `c_δ` is defined on `[−1/2, 1/2]^d` through `|n·η − a|`, while `A_η` lives on
//! `[−1/4, 1/4]^d` and uses `|2n·η − a|`; membership is decided by evaluating `c_δ`
//! at `2η`.

use crate::drivers::phi_st;
use crate::error::{Error, Result};
use crate::numeric::{exp_integral, jbracket_int, loglog_slope, norm_int};
use crate::par;
use crate::report::Report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Parameters of the small-divisor machinery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorConfig {
    /// `δ ∈ (0, 1/(d+3))`.
    pub delta: f64,
    /// Truncation `|n|_∞ ≤ n_radius` of the lattice sums.
    pub n_radius: i64,
    pub dim: usize,
    /// Hölder exponent `γ ∈ (1/3, 1/2)`.
    pub gamma: f64,
}

impl DivisorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let d0 = 1.0 / (self.dim as f64 + 3.0);
        if !(self.delta > 0.0 && self.delta < d0) {
            return Err(Error::InvalidInput(format!(
                "delta = {} outside (0, {d0})",
                self.delta
            )));
        }
        if !(self.gamma > 1.0 / 3.0 && self.gamma < 0.5) {
            return Err(Error::InvalidInput(format!(
                "gamma = {} outside (1/3, 1/2)",
                self.gamma
            )));
        }
        if self.n_radius < 1 {
            return Err(Error::InvalidInput("n_radius must be at least 1".into()));
        }
        Ok(())
    }
}

/// Value of the truncated `c_δ(η)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorResult {
    /// `max{c′_δ(η), 1}`, `+∞` when `n·η − a = 0` inside the truncation.
    pub c_delta_value: f64,
    pub truncation_radius: i64,
    pub eta: Vec<f64>,
    /// `Σ_{|n|_∞ > R} ⟨n⟩^{−d−δ}` estimated by its integral.
    pub tail_estimate: f64,
}

/// Outcome of the `A_η` membership scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    /// Largest `|2n·η − a|^{−1} / (c_δ(2η)^{1/(1−δ)} ⟨n⟩^{d+2})` over the scan.
    pub worst_ratio: f64,
    pub witness_n: Vec<i64>,
    pub witness_a: i64,
    pub c_delta: f64,
}

const RESONANCE_TOL: f64 = 1e-13;

/// Factor applied to the largest ratio of the calibration draws.
pub const CALIBRATION_MARGIN: f64 = 2.0;
/// Number of calibration draws taken from an independent stream before the checked samples.
pub const CALIBRATION_SAMPLES: usize = 5000;
const CALIBRATION_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

fn nonzero_box(dim: usize, r: i64) -> Vec<Vec<i64>> {
    crate::lattice::LatticeBox::new(dim, r)
        .points()
        .into_iter()
        .filter(|n| n.iter().any(|&x| x != 0))
        .collect()
}

/// Shared scan over `(n, a)`: the truncated `c′_δ` and the worst divisor ratio.
struct Scan {
    c_prime: f64,
    worst: f64,
    witness: (Vec<i64>, i64),
    resonant: bool,
}

fn scan(eta: &[f64], cfg: &DivisorConfig) -> Scan {
    let d = cfg.dim as f64;
    let sd = d.sqrt();
    let mut ns = nonzero_box(cfg.dim, cfg.n_radius);
    // witnesses prefer short n and then the coordinate directions with positive leading entry
    ns.sort_by_key(|n| {
        (
            n.iter().map(|x| x * x).sum::<i64>(),
            n.iter().map(|x| -x).collect::<Vec<_>>(),
        )
    });
    let mut out = Scan {
        c_prime: 0.0,
        worst: 0.0,
        witness: (ns[0].clone(), 0),
        resonant: false,
    };
    for n in &ns {
        let x: f64 = n.iter().zip(eta).map(|(a, b)| *a as f64 * b).sum();
        let nn = norm_int(n);
        let amax = 2.0 * sd * nn;
        let jb = jbracket_int(n);
        let w_sum = jb.powf(-d - 1.0 - cfg.delta);
        let w_div = jb.powf(d + 2.0);
        let ascan = amax.floor() as i64 + 1;
        for a in -ascan..=ascan {
            let dist = (x - a as f64).abs();
            if dist < RESONANCE_TOL {
                if !out.resonant {
                    out.resonant = true;
                    out.witness = (n.clone(), a);
                }
                continue;
            }
            if (a as f64).abs() <= amax {
                out.c_prime += w_sum * dist.powf(cfg.delta - 1.0);
            }
            let r = 1.0 / (dist * w_div);
            if !out.resonant && r > out.worst {
                out.worst = r;
                out.witness = (n.clone(), a);
            }
        }
    }
    out
}

fn tail_estimate(cfg: &DivisorConfig) -> f64 {
    let d = cfg.dim as f64;
    d * 2f64.powf(d) * (cfg.n_radius as f64 + 0.5).powf(-cfg.delta) / cfg.delta
}

/// The truncated `c_δ(η) = max{c′_δ(η), 1}` with
/// `c′_δ(η) = Σ_{0<|n|_∞≤R} Σ_{|a|≤2√d|n|} ⟨n⟩^{−d−1−δ} |n·η − a|^{δ−1}`, for `η ∈ [−1/2, 1/2]^d`.
pub fn c_delta(eta: &[f64], cfg: &DivisorConfig) -> Result<DivisorResult> {
    cfg.validate()?;
    check_box(eta, cfg.dim, 0.5)?;
    let s = scan(eta, cfg);
    let value = if s.resonant {
        f64::INFINITY
    } else {
        s.c_prime.max(1.0)
    };
    Ok(DivisorResult {
        c_delta_value: value,
        truncation_radius: cfg.n_radius,
        eta: eta.to_vec(),
        tail_estimate: tail_estimate(cfg),
    })
}

fn check_box(eta: &[f64], dim: usize, half: f64) -> Result<()> {
    if eta.len() != dim || eta.iter().any(|e| !(e.abs() <= half)) {
        return Err(Error::InvalidInput(format!(
            "eta {eta:?} outside [-{half}, {half}]^{dim}"
        )));
    }
    Ok(())
}

/// Membership of `η ∈ [−1/4, 1/4]^d` in `A_η`: `|2n·η − a|^{−1} ≤ c_δ(2η)^{1/(1−δ)} ⟨n⟩^{d+2}`
/// for `0 < |n|_∞ ≤ R` and `|a| ≤ 2√d|n| + 1`; larger `|a|` satisfy it automatically.
pub fn in_a_eta(eta: &[f64], cfg: &DivisorConfig) -> Result<Membership> {
    cfg.validate()?;
    check_box(eta, cfg.dim, 0.25)?;
    let eta2: Vec<f64> = eta.iter().map(|e| 2.0 * e).collect();
    let s = scan(&eta2, cfg);
    if s.resonant {
        return Ok(Membership {
            member: false,
            worst_ratio: f64::INFINITY,
            witness_n: s.witness.0,
            witness_a: s.witness.1,
            c_delta: f64::INFINITY,
        });
    }
    let c = s.c_prime.max(1.0);
    let ratio = s.worst / c.powf(1.0 / (1.0 - cfg.delta));
    Ok(Membership {
        member: ratio <= 1.0,
        worst_ratio: ratio,
        witness_n: s.witness.0,
        witness_a: s.witness.1,
        c_delta: c,
    })
}

/// Fraction of `samples` uniform offsets in `[−1/4, 1/4]^d` that fail membership.
pub fn a_eta_failure_fraction(cfg: &DivisorConfig, samples: usize, seed: u64) -> Result<f64> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let etas: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..cfg.dim).map(|_| rng.gen_range(-0.25..0.25)).collect())
        .collect();
    let fails = par::map_range(samples, |i| in_a_eta(&etas[i], cfg).map(|m| !m.member));
    let mut count = 0usize;
    for f in fails {
        if f? {
            count += 1;
        }
    }
    Ok(count as f64 / samples as f64)
}

/// Monte-Carlo mean of `min{c_δ(η), cap}` over uniform `η ∈ [−1/2, 1/2]^d`.
pub fn capped_mean(cfg: &DivisorConfig, samples: usize, cap: f64, seed: u64) -> Result<f64> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let etas: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..cfg.dim).map(|_| rng.gen_range(-0.5..0.5)).collect())
        .collect();
    let vals = par::map_range(samples, |i| {
        c_delta(&etas[i], cfg).map(|r| r.c_delta_value.min(cap))
    });
    let mut s = 0.0;
    for v in vals {
        s += v?;
    }
    Ok(s / samples as f64)
}

/// The oscillatory estimates checked by [`validate_osc_bounds`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OscBound {
    /// `φ_st(a, b)`: the symmetric bound for `a + b ≠ 0` and `|t−s|/|a|` for `b = −a`.
    PhiSt,
    /// `ε^{−1/2}|∫_s^t e^{iωu} du| ≲ c^{(1−γ)/(1−δ)} ε^{1/2−γ}|t−s|^γ ⟨n⟩^{(d+2)(1−γ)}`.
    FirstOrder,
    /// `ε^{−1}|φ_st(a, −a)| ≲ |t−s| c^{1/(1−δ)} ⟨n⟩^{d+2}`.
    ResonantPair,
    /// `ε^{−1}|φ_st(a, b)| ≲ ε^{1−2γ}|t−s|^{2γ} c^{(2−2γ)/(1−δ)} (⟨n⟩⟨n′⟩)^{2(d+2)}` for `a + b ≠ 0`.
    NonResonantPair,
}

impl OscBound {
    pub fn tag(&self) -> &'static str {
        match self {
            OscBound::PhiSt => "phi-st",
            OscBound::FirstOrder => "first-order",
            OscBound::ResonantPair => "resonant-pair",
            OscBound::NonResonantPair => "nonresonant-pair",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            OscBound::PhiSt,
            OscBound::FirstOrder,
            OscBound::ResonantPair,
            OscBound::NonResonantPair,
        ]
        .into_iter()
        .find(|b| b.tag() == tag)
    }
}

/// Symmetric bound on `|φ_st(a, b)|` without its constant, `a + b ≠ 0`.
pub fn phi_symmetric_bound(a: f64, b: f64, tau: f64, gamma: f64) -> f64 {
    let (a, b, c) = (a.abs(), b.abs(), (a + b).abs());
    tau.powf(2.0 * gamma)
        * (1.0 / (a.powf(1.0 - gamma) * b.powf(1.0 - gamma))
            + 1.0 / (b.sqrt() * a.powf(1.0 - gamma) * c.powf((1.0 - 2.0 * gamma) / 2.0))
            + 1.0 / (a.sqrt() * b.powf(1.0 - gamma) * c.powf((1.0 - 2.0 * gamma) / 2.0))
            + 1.0 / (b.sqrt() * a.sqrt() * c.powf(1.0 - 2.0 * gamma)))
}

/// `sup_{s<u≤t} |∫_s^u e^{iωr} dr|` in closed form.
pub fn single_phase_envelope(omega: f64, tau: f64) -> f64 {
    let w = omega.abs();
    if w * tau >= PI {
        2.0 / w
    } else if w == 0.0 {
        tau
    } else {
        2.0 * (w * tau / 2.0).sin() / w
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp()
}

fn random_nonzero(rng: &mut ChaCha8Rng, dim: usize, r: i64) -> Vec<i64> {
    loop {
        let n: Vec<i64> = (0..dim).map(|_| rng.gen_range(-r..=r)).collect();
        if n.iter().any(|&x| x != 0) {
            return n;
        }
    }
}

/// `n·(l − 2η)`.
fn lattice_phase(n: &[i64], l: &[i64], eta: &[f64]) -> f64 {
    n.iter()
        .zip(l)
        .zip(eta)
        .map(|((a, b), e)| *a as f64 * (*b as f64 - 2.0 * e))
        .sum()
}

/// Draws random configurations for one estimate, evaluates the exact left side against
/// the constant-free right side, calibrates the constant on [`CALIBRATION_SAMPLES`] independent
/// draws with [`CALIBRATION_MARGIN`] and fits the exponents of representative configurations.
pub fn validate_osc_bounds(
    cfg: &DivisorConfig,
    eta: &[f64],
    bound: OscBound,
    samples: usize,
    seed: u64,
) -> Result<Report> {
    let mem = in_a_eta(eta, cfg)?;
    if !mem.member {
        return Err(Error::InvalidInput(format!(
            "eta {eta:?} is not admissible"
        )));
    }
    let c = mem.c_delta;
    let (g, dl, d) = (cfg.gamma, cfg.delta, cfg.dim as f64);
    let w = 4.0 * PI * PI;
    let draw = |seed: u64, samples: usize| -> Vec<(f64, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ratios = Vec::with_capacity(samples);
        for k in 0..samples {
            let s = rng.gen_range(0.0..1.0);
            let tau = log_uniform(&mut rng, 1e-3, 1.0);
            let eps = log_uniform(&mut rng, 1e-3, 1e-1);
            let n = random_nonzero(&mut rng, cfg.dim, 3);
            let np = random_nonzero(&mut rng, cfg.dim, 3);
            let l: Vec<i64> = (0..cfg.dim).map(|_| rng.gen_range(-4..=4)).collect();
            let lp: Vec<i64> = (0..cfg.dim).map(|_| rng.gen_range(-4..=4)).collect();
            let (lhs, rhs, label) = match bound {
                OscBound::PhiSt => {
                    let a = log_uniform(&mut rng, 0.1, 1e4)
                        * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    if k % 4 == 0 {
                        (
                            phi_st(a, -a, s, s + tau).norm(),
                            tau / a.abs(),
                            format!("a={a:.4e} b=-a tau={tau:.3e}"),
                        )
                    } else {
                        let b = log_uniform(&mut rng, 0.1, 1e4)
                            * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        (
                            phi_st(a, b, s, s + tau).norm(),
                            phi_symmetric_bound(a, b, tau, g),
                            format!("a={a:.4e} b={b:.4e} tau={tau:.3e}"),
                        )
                    }
                }
                OscBound::FirstOrder => {
                    let om = w * lattice_phase(&n, &l, eta) / eps;
                    let lhs = exp_integral(om, s, s + tau).norm() / eps.sqrt();
                    let rhs = c.powf((1.0 - g) / (1.0 - dl))
                        * eps.powf(0.5 - g)
                        * tau.powf(g)
                        * jbracket_int(&n).powf((d + 2.0) * (1.0 - g));
                    (
                        lhs,
                        rhs,
                        format!("n={n:?} l={l:?} eps={eps:.3e} tau={tau:.3e}"),
                    )
                }
                OscBound::ResonantPair => {
                    let a = w * lattice_phase(&n, &l, eta) / eps;
                    let lhs = phi_st(a, -a, s, s + tau).norm() / eps;
                    let rhs = tau * c.powf(1.0 / (1.0 - dl)) * jbracket_int(&n).powf(d + 2.0);
                    (
                        lhs,
                        rhs,
                        format!("n={n:?} l={l:?} eps={eps:.3e} tau={tau:.3e}"),
                    )
                }
                OscBound::NonResonantPair => {
                    let a = w * lattice_phase(&n, &l, eta) / eps;
                    let b = w * lattice_phase(&np, &lp, eta) / eps;
                    let identically_zero = n.iter().zip(&np).all(|(x, y)| x + y == 0)
                        && n.iter().zip(&l).map(|(x, y)| x * y).sum::<i64>()
                            + np.iter().zip(&lp).map(|(x, y)| x * y).sum::<i64>()
                            == 0;
                    if identically_zero {
                        continue;
                    }
                    let lhs = phi_st(a, b, s, s + tau).norm() / eps;
                    let rhs = eps.powf(1.0 - 2.0 * g)
                        * tau.powf(2.0 * g)
                        * c.powf((2.0 - 2.0 * g) / (1.0 - dl))
                        * (jbracket_int(&n) * jbracket_int(&np)).powf(2.0 * (d + 2.0));
                    (
                        lhs,
                        rhs,
                        format!("n={n:?} l={l:?} n'={np:?} l'={lp:?} eps={eps:.3e} tau={tau:.3e}"),
                    )
                }
            };
            ratios.push((lhs / rhs, label));
        }
        ratios
    };
    let mut all = draw(seed ^ CALIBRATION_STREAM, CALIBRATION_SAMPLES);
    let n_cal = all.len();
    all.extend(draw(seed, samples));
    let mut rep = Report::new(bound.tag());
    rep.calibrate(&all, n_cal, CALIBRATION_MARGIN);
    rep.samples = all.len() - n_cal;
    let taus: Vec<f64> = (0..7).map(|k| 2f64.powi(-k)).collect();
    let epss = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let e1: Vec<i64> = (0..cfg.dim).map(|i| if i == 0 { 1 } else { 0 }).collect();
    let zero = vec![0i64; cfg.dim];
    match bound {
        OscBound::PhiSt => {
            let a = 1e4;
            let v: Vec<f64> = taus.iter().map(|&t| phi_st(a, -a, 0.0, t).norm()).collect();
            rep.fitted_exponents
                .insert("resonant_tau".into(), loglog_slope(&taus, &v));
            let avals = [1e2, 1e3, 1e4, 1e5];
            let v: Vec<f64> = avals
                .iter()
                .map(|&a| phi_st(a, -a, 0.0, 1.0).norm())
                .collect();
            rep.fitted_exponents
                .insert("resonant_a".into(), loglog_slope(&avals, &v));
        }
        OscBound::FirstOrder => {
            let p = lattice_phase(&e1, &zero, eta);
            let v: Vec<f64> = epss
                .iter()
                .map(|&e| single_phase_envelope(w * p / e, 1.0) / e.sqrt())
                .collect();
            rep.fitted_exponents
                .insert("eps".into(), loglog_slope(&epss, &v));
            let v: Vec<f64> = epss
                .iter()
                .map(|&e| single_phase_envelope(w * p / e, 1.0))
                .collect();
            rep.fitted_exponents
                .insert("eps_integral".into(), loglog_slope(&epss, &v));
            let v: Vec<f64> = taus
                .iter()
                .map(|&t| single_phase_envelope(w * p / 1e-3, t) / 1e-3f64.sqrt())
                .collect();
            rep.fitted_exponents
                .insert("tau".into(), loglog_slope(&taus, &v));
        }
        OscBound::ResonantPair => {
            let p = lattice_phase(&e1, &zero, eta);
            let v: Vec<f64> = epss
                .iter()
                .map(|&e| phi_st(w * p / e, -w * p / e, 0.0, 1.0).norm() / e)
                .collect();
            rep.fitted_exponents
                .insert("eps".into(), loglog_slope(&epss, &v));
            let v: Vec<f64> = taus
                .iter()
                .map(|&t| phi_st(w * p / 1e-3, -w * p / 1e-3, 0.0, t).norm() / 1e-3)
                .collect();
            rep.fitted_exponents
                .insert("tau".into(), loglog_slope(&taus, &v));
        }
        OscBound::NonResonantPair => {
            let p = lattice_phase(&e1, &zero, eta);
            let v: Vec<f64> = epss
                .iter()
                .map(|&e| phi_st(w * p / e, w * p / e, 0.0, 1.0).norm() / e)
                .collect();
            rep.fitted_exponents
                .insert("eps".into(), loglog_slope(&epss, &v));
        }
    }
    Ok(rep)
}

/// Which of the two phase pairs enters the η-integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairBranch {
    /// `α₁ = n·(2κ−2η+n′)`, `β₁ = n′·(2κ−2η−n)`.
    First,
    /// `α₂ = n·(2κ−2η−n′)`, `β₂ = n′·(2κ−2η+n)`.
    Second,
}

/// Value of one singular η-integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaIntegralReport {
    pub integral: f64,
    /// `⟨n⟩⁴⟨n′⟩⁴`.
    pub bound_unit: f64,
    pub ratio: f64,
    pub collinear: bool,
    /// The sum `α + β` vanishes identically, so the indicator removes the whole integrand.
    pub excluded: bool,
}

fn de(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, 1e-10).integral
}

/// `∫_a^b f` split at the given interior break points.
fn de_split(f: &impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    pts.windows(2).map(|w| de(f, w[0], w[1])).sum()
}

/// `∫_{[−1/4,1/4]^d} dη |β|^{−α}|α|^{−β}|β + α|^{−σ} I_{α+β≠0}` with the ε-free phases
/// `α, β` of the chosen branch (the common factor `4π²` dropped), for `d ∈ {1, 2}`.
///
/// After `2η → η` the phases are `n·η − k_α` and `n′·η − k_β`; the collinear case reduces
/// to one dimension with the projected density of the cube and the non-collinear case is
/// integrated along the lines `n·η = const`. Points with `|α + β| < exclusion_tol` are
/// removed from the integrand.
#[allow(clippy::too_many_arguments)]
pub fn validate_eta_integral(
    n: &[i64],
    n_prime: &[i64],
    kappa2: &[i64],
    branch: PairBranch,
    exponents: (f64, f64, f64),
    cfg: &DivisorConfig,
    exclusion_tol: f64,
) -> Result<EtaIntegralReport> {
    cfg.validate()?;
    let (ea, eb, es) = exponents;
    if (ea + eb + es - (2.0 - 2.0 * cfg.gamma)).abs() > 1e-12
        || !(ea > 0.0 && ea < 1.0 && eb > 0.0 && eb < 1.0 && (0.0..1.0).contains(&es))
    {
        return Err(Error::InvalidInput(format!(
            "exponents {exponents:?} violate the hypothesis"
        )));
    }
    let d = cfg.dim;
    if !(1..=2).contains(&d) || n.len() != d || n_prime.len() != d || kappa2.len() != d {
        return Err(Error::InvalidInput(
            "eta integral supports d in {1, 2}".into(),
        ));
    }
    if n.iter().all(|&x| x == 0) || n_prime.iter().all(|&x| x == 0) {
        return Err(Error::InvalidInput("n and n' must be nonzero".into()));
    }
    let dot = |a: &[i64], b: &[i64]| -> i64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let sgn = match branch {
        PairBranch::First => 1,
        PairBranch::Second => -1,
    };
    let ka = dot(n, kappa2) + sgn * dot(n, n_prime);
    let kb = dot(n_prime, kappa2) - sgn * dot(n_prime, n);
    let bound_unit = jbracket_int(n).powi(4) * jbracket_int(n_prime).powi(4);
    let cross = if d == 2 {
        n[0] * n_prime[1] - n[1] * n_prime[0]
    } else {
        0
    };
    let collinear = cross == 0;
    let excluded = n.iter().zip(n_prime).all(|(a, b)| a + b == 0) && ka + kb == 0;
    if excluded {
        return Ok(EtaIntegralReport {
            integral: 0.0,
            bound_unit,
            ratio: 0.0,
            collinear,
            excluded,
        });
    }
    let kernel = |la: f64, lb: f64| -> f64 {
        let s = la + lb;
        if s.abs() < exclusion_tol {
            return 0.0;
        }
        lb.abs().powf(-ea) * la.abs().powf(-eb) * s.abs().powf(-es)
    };
    let (ka, kb) = (ka as f64, kb as f64);
    let integral = if collinear {
        let nn = norm_int(n);
        let mp = dot(n_prime, n) as f64 / nn;
        // projected coordinate s = n·η/|n| of η uniform on the unit cube
        let widths: Vec<f64> = n.iter().map(|&x| (x as f64).abs() / nn).collect();
        let (w1, w2) = if d == 1 {
            (1.0, 0.0)
        } else {
            (widths[0].max(widths[1]), widths[0].min(widths[1]))
        };
        let half = (w1 + w2) / 2.0;
        let flat = (w1 - w2) / 2.0;
        let density = move |s: f64| -> f64 {
            let a = s.abs();
            if a >= half {
                0.0
            } else if a <= flat || w2 == 0.0 {
                1.0 / w1
            } else {
                (half - a) / (w1 * w2)
            }
        };
        let f = |s: f64| kernel(nn * s - ka, mp * s - kb) * density(s);
        let mut breaks = vec![ka / nn, kb / mp, -flat, flat];
        if (nn + mp).abs() > 1e-12 {
            breaks.push((ka + kb) / (nn + mp));
        }
        de_split(&f, -half, half, &breaks)
    } else {
        // integrate over lines n·η = t, parametrized by the free coordinate
        let (free, fixed) = if n[1] != 0 { (0usize, 1usize) } else { (1, 0) };
        let nf = n[free] as f64;
        let nx = n[fixed] as f64;
        let tmax = 0.5 * (n[0].abs() + n[1].abs()) as f64;
        let inner = |t: f64| -> f64 {
            // η_fixed = (t − n_free x)/n_fixed, both coordinates in [−1/2, 1/2]
            let (mut lo, mut hi) = (-0.5f64, 0.5f64);
            if nf != 0.0 {
                let x1 = (t - 0.5 * nx) / nf;
                let x2 = (t + 0.5 * nx) / nf;
                lo = lo.max(x1.min(x2));
                hi = hi.min(x1.max(x2));
            }
            if hi <= lo {
                return 0.0;
            }
            let lb = |x: f64| -> f64 {
                let y = (t - nf * x) / nx;
                let mut eta = [0.0; 2];
                eta[free] = x;
                eta[fixed] = y;
                n_prime[0] as f64 * eta[0] + n_prime[1] as f64 * eta[1] - kb
            };
            let la = t - ka;
            let slope = lb(1.0) - lb(0.0);
            let mut breaks = Vec::new();
            if slope.abs() > 1e-14 {
                breaks.push(-lb(0.0) / slope);
                breaks.push((-la - lb(0.0)) / slope);
            }
            de_split(&|x: f64| kernel(la, lb(x)), lo, hi, &breaks) / nx.abs()
        };
        let mut breaks = vec![ka];
        for sx in [-0.5, 0.5] {
            for sy in [-0.5, 0.5] {
                breaks.push(n[0] as f64 * sx + n[1] as f64 * sy);
            }
        }
        de_split(&inner, -tmax, tmax, &breaks)
    };
    // Jacobian of 2η → η
    let integral = integral / 2f64.powi(d as i32);
    Ok(EtaIntegralReport {
        integral,
        bound_unit,
        ratio: integral / bound_unit,
        collinear,
        excluded,
    })
}
