//! The rough difference equation for `T^ε`: phases, the double oscillatory
//! integral `φ_st`, the adjoint drivers acting on test fields and the remainder
//! functionals.
//!
//! Every phase is `4π²ε^{−1}` times an ε-free frequency of the form
//! `I − 2J·η` with integer `I` and integer vector `J`; [`Freq`] stores the pair
//! `(I, J)` so resonance tests are exact integer comparisons.

use crate::dynamics::History;
use crate::error::{Error, Result};
use crate::field::{PhaseLayout, TestField};
use crate::lattice::PeriodicPotential;
use crate::numeric::{composite_gauss_legendre, exp_integral, phase_mean, I};
use crate::par;
use crate::scale::dual_pairing_values;
use num_complex::Complex64;
use std::f64::consts::PI;

/// `g(A, B) = ∫_0^1 dx e^{iAx} ∫_0^x dy e^{iBy}`.
fn unit_simplex(a: f64, b: f64) -> Complex64 {
    if a.abs().max(b.abs()) < 0.5 {
        // Σ_{j,k} (iA)^j (iB)^k / (j! k! (k+1)(j+k+2))
        let ia = I * a;
        let ib = I * b;
        let mut s = Complex64::new(0.0, 0.0);
        let mut pa = Complex64::new(1.0, 0.0);
        for j in 0..30 {
            let mut pb = Complex64::new(1.0, 0.0);
            for k in 0..30 - j {
                s += pa * pb / ((k + 1) as f64 * (j + k + 2) as f64);
                pb = pb * ib / (k + 1) as f64;
            }
            pa = pa * ia / (j + 1) as f64;
        }
        s
    } else if a.abs() >= b.abs() {
        (Complex64::from_polar(1.0, a) * phase_mean(b) - phase_mean(a + b)) / (I * a)
    } else {
        (phase_mean(a + b) - phase_mean(a)) / (I * b)
    }
}

/// `φ_st(a, b) = ∫_s^t du ∫_s^u dv e^{iau} e^{ibv}` in closed form.
///
/// With `τ = t − s` this equals `τ² e^{i(a+b)s} g(aτ, bτ)`; the closed form of `g` is
/// chosen by the larger of `|aτ|`, `|bτ|` and a double series covers the case where
/// both are small, so the generic, resonant (`a + b = 0`) and degenerate (`a = 0`
/// or `b = 0`) configurations are all evaluated without cancellation.
pub fn phi_st(a: f64, b: f64, s: f64, t: f64) -> Complex64 {
    let tau = t - s;
    if tau == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(tau * tau, (a + b) * s) * unit_simplex(a * tau, b * tau)
}

/// An ε-free frequency `I − 2J·η`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Freq {
    pub int: i64,
    pub lin: Vec<i64>,
}

impl Freq {
    pub fn value(&self, eta: &[f64]) -> f64 {
        self.int as f64
            - 2.0
                * self
                    .lin
                    .iter()
                    .zip(eta)
                    .map(|(j, e)| *j as f64 * e)
                    .sum::<f64>()
    }

    /// The physical frequency `4π²ε^{−1}(I − 2J·η)`.
    pub fn omega(&self, eta: &[f64], eps: f64) -> f64 {
        4.0 * PI * PI * self.value(eta) / eps
    }

    pub fn add(&self, other: &Freq) -> Freq {
        Freq {
            int: self.int + other.int,
            lin: self
                .lin
                .iter()
                .zip(&other.lin)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Vanishes for every `η`.
    pub fn is_identically_zero(&self) -> bool {
        self.int == 0 && self.lin.iter().all(|&j| j == 0)
    }
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `n·(2κ − 2η − n − ξ)` for `σ = +1` and `n·(2κ − 2η + n + ξ)` for `σ = −1`.
pub fn a_freq(n: &[i64], xi: &[i64], kappa2: &[i64], sigma: i64) -> Freq {
    Freq {
        int: dot(n, kappa2) - sigma * (dot(n, n) + dot(n, xi)),
        lin: n.to_vec(),
    }
}

/// Primed phases (the ε-free factor `ε·c`) of one index configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSet {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl PhaseSet {
    pub fn new(n: &[i64], np: &[i64], xi: &[i64], kappa2: &[i64], eta: &[f64]) -> Self {
        let f = |fr: Freq| 4.0 * PI * PI * fr.value(eta);
        let shift = |s: i64| -> Vec<i64> { kappa2.iter().zip(n).map(|(k, m)| k - s * m).collect() };
        let xin: Vec<i64> = xi.iter().zip(n).map(|(a, b)| a + b).collect();
        let lin = |v: &[i64], w: i64| Freq {
            int: dot(v, kappa2) + w,
            lin: v.to_vec(),
        };
        PhaseSet {
            a1: f(a_freq(n, xi, kappa2, 1)),
            a2: f(a_freq(n, xi, kappa2, -1)),
            b1: f(a_freq(np, &xin, &shift(1), 1)),
            b2: f(a_freq(np, &xin, &shift(1), -1)),
            b3: f(a_freq(np, &xin, &shift(-1), 1)),
            b4: f(a_freq(np, &xin, &shift(-1), -1)),
            alpha1: f(lin(n, dot(n, np))),
            alpha2: f(lin(n, -dot(n, np))),
            beta1: f(lin(np, -dot(np, n))),
            beta2: f(lin(np, dot(np, n))),
            c1: f(lin(n, -dot(n, n))),
            c2: f(lin(n, dot(n, n))),
        }
    }
}

/// `A^{κ−η,*}ψ = 4π(κ−η)·∇_p ψ`, one order of smoothness lower.
pub fn apply_transport_generator(psi: &TestField, eta: &[f64]) -> Result<TestField> {
    if psi.order < 1 {
        return Err(Error::Smoothness {
            need: 1,
            have: psi.order,
        });
    }
    let layout = &psi.layout;
    let np = layout.p.len();
    let mut out = TestField::zeros(layout, psi.order - 1);
    for axis in 0..layout.dim {
        let g = psi.grad_p(axis);
        for b in 0..layout.n_blocks() {
            let (_, k2) = layout.block_labels(b);
            let c = 4.0 * PI * (k2[axis] as f64 / 2.0 - eta[axis]);
            for i in 0..np {
                out.values[b * np + i] += g[b * np + i] * c;
            }
        }
    }
    Ok(out)
}

/// `A*_{st}ψ = 4π(t−s)(κ−η)·∇_p ψ`.
pub fn apply_a_star(psi: &TestField, s: f64, t: f64, eta: &[f64]) -> Result<TestField> {
    Ok(apply_transport_generator(psi, eta)?.scaled(Complex64::new(t - s, 0.0)))
}

/// Sums `Σ_{n,σ} σ V̂(n) w(n, σ, ξ, 2κ) ψ(ξ+n, p, κ − σn/2)` block-wise.
fn single_shift_sum(
    psi: &TestField,
    v: &PeriodicPotential,
    weight: impl Fn(&Freq) -> Complex64 + Sync,
) -> TestField {
    let layout = &psi.layout;
    let np = layout.p.len();
    let modes = v.modes();
    let blocks = par::map_range(layout.n_blocks(), |b| {
        let (xi, k2) = layout.block_labels(b);
        let mut out = vec![Complex64::new(0.0, 0.0); np];
        for (n, vn) in &modes {
            let src: Vec<i64> = xi.iter().zip(n).map(|(a, c)| a + c).collect();
            for sigma in [1i64, -1] {
                let tgt: Vec<i64> = k2.iter().zip(n).map(|(k, m)| k - sigma * m).collect();
                if let Some(block) = psi.block(&src, &tgt) {
                    let c = vn * weight(&a_freq(n, &xi, &k2, sigma)) * sigma as f64;
                    out.iter_mut().zip(block).for_each(|(o, x)| *o += c * x);
                }
            }
        }
        out
    });
    TestField {
        layout: layout.clone(),
        values: blocks.into_iter().flatten().collect(),
        order: psi.order,
    }
}

/// `Q_u^{ε,η,*}ψ = iε^{−1/2} Σ_n V̂(n)[e^{ia'_1u} ψ(ξ+n, κ−n/2) − e^{ia'_2u} ψ(ξ+n, κ+n/2)]`.
pub fn apply_q_star(
    psi: &TestField,
    u: f64,
    eps: f64,
    eta: &[f64],
    v: &PeriodicPotential,
) -> TestField {
    let pref = I / eps.sqrt();
    single_shift_sum(psi, v, |f| {
        pref * Complex64::from_polar(1.0, f.omega(eta, eps) * u)
    })
}

/// `X^{1,ε,*}_{st}ψ = ∫_s^t Q_u^{ε,η,*}ψ du` with the time integrals in closed form.
pub fn apply_x1_star(
    psi: &TestField,
    s: f64,
    t: f64,
    eps: f64,
    eta: &[f64],
    v: &PeriodicPotential,
) -> TestField {
    let pref = I / eps.sqrt();
    single_shift_sum(psi, v, |f| pref * exp_integral(f.omega(eta, eps), s, t))
}

/// Which part of the second-order driver to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecondOrderPart {
    /// Pairs `n' = −n` whose frequencies cancel identically.
    Resonant,
    /// All remaining pairs.
    NonResonant,
    Both,
}

/// `X^{2,ε,*}_{st}ψ = ∫_s^t du ∫_s^u dv Q_v^* Q_u^* ψ`, or one of its two parts.
///
/// The term with indices `(n, σ, n', σ')` reads
/// `−ε^{−1} σσ' V̂(n)V̂(n') φ_st(A, B) ψ(ξ+n+n', κ − σn/2 − σ'n'/2)` with
/// `B = a_σ(n; ξ, κ)` and `A = a_{σ'}(n'; ξ+n, κ−σn/2)`.
pub fn apply_x2_part(
    psi: &TestField,
    s: f64,
    t: f64,
    eps: f64,
    eta: &[f64],
    v: &PeriodicPotential,
    part: SecondOrderPart,
) -> TestField {
    let layout = &psi.layout;
    let np = layout.p.len();
    let modes = v.modes();
    let blocks = par::map_range(layout.n_blocks(), |b| {
        let (xi, k2) = layout.block_labels(b);
        let mut out = vec![Complex64::new(0.0, 0.0); np];
        for (n, vn) in &modes {
            let xin: Vec<i64> = xi.iter().zip(n).map(|(a, c)| a + c).collect();
            for sigma in [1i64, -1] {
                let fb = a_freq(n, &xi, &k2, sigma);
                let k2n: Vec<i64> = k2.iter().zip(n).map(|(k, m)| k - sigma * m).collect();
                for (n2, vn2) in &modes {
                    let src: Vec<i64> = xin.iter().zip(n2).map(|(a, c)| a + c).collect();
                    let opposite = n.iter().zip(n2).all(|(a, c)| a + c == 0);
                    for sigma2 in [1i64, -1] {
                        let fa = a_freq(n2, &xin, &k2n, sigma2);
                        let resonant = opposite && fa.add(&fb).is_identically_zero();
                        let keep = match part {
                            SecondOrderPart::Resonant => resonant,
                            SecondOrderPart::NonResonant => !resonant,
                            SecondOrderPart::Both => true,
                        };
                        if !keep {
                            continue;
                        }
                        let tgt: Vec<i64> =
                            k2n.iter().zip(n2).map(|(k, m)| k - sigma2 * m).collect();
                        if let Some(block) = psi.block(&src, &tgt) {
                            let phi = phi_st(fa.omega(eta, eps), fb.omega(eta, eps), s, t);
                            let c = -(vn * vn2) * phi * (sigma * sigma2) as f64 / eps;
                            out.iter_mut().zip(block).for_each(|(o, x)| *o += c * x);
                        }
                    }
                }
            }
        }
        out
    });
    TestField {
        layout: layout.clone(),
        values: blocks.into_iter().flatten().collect(),
        order: psi.order,
    }
}

/// `X^{2,ε,*}_{st}ψ`.
pub fn apply_x2_star(
    psi: &TestField,
    s: f64,
    t: f64,
    eps: f64,
    eta: &[f64],
    v: &PeriodicPotential,
) -> TestField {
    apply_x2_part(psi, s, t, eps, eta, v, SecondOrderPart::Both)
}

/// `Y^{ε,η,*}_{st}ψ`: the resonant pairs of the second-order driver.
pub fn apply_y_eps_star(
    psi: &TestField,
    s: f64,
    t: f64,
    eps: f64,
    eta: &[f64],
    v: &PeriodicPotential,
) -> TestField {
    apply_x2_part(psi, s, t, eps, eta, v, SecondOrderPart::Resonant)
}

/// `Z^{ε,η,*}_{st}ψ`: the non-resonant pairs of the second-order driver.
pub fn apply_z_star(
    psi: &TestField,
    s: f64,
    t: f64,
    eps: f64,
    eta: &[f64],
    v: &PeriodicPotential,
) -> TestField {
    apply_x2_part(psi, s, t, eps, eta, v, SecondOrderPart::NonResonant)
}

/// `2∫_s^t du ∫_s^u dv cos(a(v−u))`: the combined `n`, `−n` resonant kernel.
pub fn resonant_cosine_kernel(a: f64, s: f64, t: f64) -> f64 {
    2.0 * phi_st(-a, a, s, t).re
}

/// Time quadrature for the remainder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemainderQuadrature {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Panels; `None` picks enough panels for the fastest phase in the layout.
    pub panels: Option<usize>,
}

impl Default for RemainderQuadrature {
    fn default() -> Self {
        RemainderQuadrature {
            order: 32,
            panels: None,
        }
    }
}

/// Largest physical frequency present in the dynamics on `layout`.
pub fn max_frequency(layout: &PhaseLayout, eps: f64, v: &PeriodicPotential) -> f64 {
    let kmax = layout.kappa2.radius as f64 / 2.0 + 0.25;
    let ximax = layout.xi.radius as f64;
    let nmax = v.radius().max(1) as f64;
    let d = layout.dim as f64;
    let transport = 16.0 * PI * PI * 0.5 * kmax * d;
    let coupling = 4.0 * PI * PI * nmax * d * (2.0 * kmax + nmax + ximax + 0.5);
    2.0 * (transport + coupling) / eps
}

/// `⟨T^♮_{st}, ψ⟩` through the reduction to a single time integral,
/// `∫_s^t dw ⟨T_w, (t−w)(A* + Q_w*)A*ψ + A*X¹_{wt}ψ + (A* + Q_w*)X²_{wt}ψ⟩`,
/// where `A* = 4π(κ−η)·∇_p`.
pub fn remainder_natural(
    history: &dyn History,
    psi: &TestField,
    s: f64,
    t: f64,
    v: &PeriodicPotential,
    quad: RemainderQuadrature,
) -> Result<Complex64> {
    if psi.order < 2 {
        return Err(Error::Smoothness {
            need: 2,
            have: psi.order,
        });
    }
    history.layout().check_same(&psi.layout)?;
    if t == s {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let eps = history.eps();
    let eta = history.eta().to_vec();
    let a1 = apply_transport_generator(psi, &eta)?;
    let aa = apply_transport_generator(&a1, &eta)?;
    let panels = quad.panels.unwrap_or_else(|| {
        ((max_frequency(&psi.layout, eps, v) * (t - s) / 30.0).ceil() as usize).max(1)
    });
    let (nodes, weights) = composite_gauss_legendre(s, t, quad.order, panels);
    let terms = par::map_range(nodes.len(), |k| -> Result<Complex64> {
        let w = nodes[k];
        let tw = history.at(w);
        let mut g = aa.scaled(Complex64::new(t - w, 0.0));
        g = g.axpy(
            Complex64::new(t - w, 0.0),
            &apply_q_star(&a1, w, eps, &eta, v),
        );
        let x1 = apply_x1_star(psi, w, t, eps, &eta, v);
        g = g.axpy(
            Complex64::new(1.0, 0.0),
            &apply_transport_generator(&x1, &eta)?,
        );
        let x2 = apply_x2_star(psi, w, t, eps, &eta, v);
        g = g.axpy(
            Complex64::new(1.0, 0.0),
            &apply_transport_generator(&x2, &eta)?,
        );
        g = g.axpy(
            Complex64::new(1.0, 0.0),
            &apply_q_star(&x2, w, eps, &eta, v),
        );
        Ok(dual_pairing_values(&psi.layout, &tw.values, &g.values) * weights[k])
    });
    terms.into_iter().sum()
}

/// `⟨δT_{st}, ψ⟩ − ⟨T_s, (A*_{st} + X¹_{st} + X²_{st})ψ⟩`, the remainder read off the balance of the rough equation.
pub fn remainder_balance(
    history: &dyn History,
    psi: &TestField,
    s: f64,
    t: f64,
    v: &PeriodicPotential,
) -> Result<Complex64> {
    history.layout().check_same(&psi.layout)?;
    let eps = history.eps();
    let eta = history.eta().to_vec();
    let ts = history.at(s);
    let tt = history.at(t);
    let drive = apply_a_star(psi, s, t, &eta)?
        .axpy(
            Complex64::new(1.0, 0.0),
            &apply_x1_star(psi, s, t, eps, &eta, v),
        )
        .axpy(
            Complex64::new(1.0, 0.0),
            &apply_x2_star(psi, s, t, eps, &eta, v),
        );
    let delta: Vec<Complex64> = tt
        .values
        .iter()
        .zip(&ts.values)
        .map(|(a, b)| a - b)
        .collect();
    Ok(dual_pairing_values(&psi.layout, &delta, &psi.values)
        - dual_pairing_values(&psi.layout, &ts.values, &drive.values))
}

/// `⟨T^♯_{st}, ψ⟩ = ⟨δT_{st}, ψ⟩ − ⟨T_s, X¹_{st}ψ⟩`.
pub fn remainder_sharp(
    history: &dyn History,
    psi: &TestField,
    s: f64,
    t: f64,
    v: &PeriodicPotential,
) -> Result<Complex64> {
    if psi.order < 1 {
        return Err(Error::Smoothness {
            need: 1,
            have: psi.order,
        });
    }
    history.layout().check_same(&psi.layout)?;
    let eps = history.eps();
    let eta = history.eta().to_vec();
    let ts = history.at(s);
    let tt = history.at(t);
    let x1 = apply_x1_star(psi, s, t, eps, &eta, v);
    let delta: Vec<Complex64> = tt
        .values
        .iter()
        .zip(&ts.values)
        .map(|(a, b)| a - b)
        .collect();
    Ok(dual_pairing_values(&psi.layout, &delta, &psi.values)
        - dual_pairing_values(&psi.layout, &ts.values, &x1.values))
}
