//! The graded scale `E_m`, its pairing with `T^ε`, the smoothing operators `J_ν`
//! and empirical operator-norm probes.
//!
//! `‖ψ‖_{E_m} = Σ_{|β|≤m} ∫ dp Σ_κ ⟨κ⟩^m ‖D_p^β ψ(·, p, κ)‖_{ℓ²_ξ}` with fourth-order
//! centered differences for `D_p^β` and zero extension beyond the `p` box.

use crate::error::{Error, Result};
use crate::field::{kappa_bracket, PhaseLayout, TField, TestField};
use crate::par;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Order of the scale level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub m: u8,
}

/// Smoothing parameter `ν ∈ (0, 1)` of `J_ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub nu: f64,
}

/// Multi-indices `β ∈ N^d` with `|β| ≤ m`.
pub fn multi_indices(dim: usize, m: u8) -> Vec<Vec<u8>> {
    let mut out = vec![vec![0u8; dim]];
    for _ in 0..m {
        let mut next = out.clone();
        for b in &out {
            for a in 0..dim {
                let mut c = b.clone();
                c[a] += 1;
                if !next.contains(&c) {
                    next.push(c);
                }
            }
        }
        out = next;
    }
    out
}

/// Fourth-order centered difference of order `k ∈ {1, 2}` along `axis` of a `[block][p]` array.
pub fn fd_derivative(
    layout: &PhaseLayout,
    values: &[Complex64],
    axis: usize,
    k: u8,
) -> Vec<Complex64> {
    let g = &layout.p;
    let n = g.n as i64;
    let np = g.len();
    let stride = g.stride(axis);
    let (coef, scale): ([f64; 5], f64) = match k {
        1 => ([1.0, -8.0, 0.0, 8.0, -1.0], 12.0 * g.h),
        2 => ([-1.0, 16.0, -30.0, 16.0, -1.0], 12.0 * g.h * g.h),
        _ => panic!("derivative order {k} not supported"),
    };
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    par::for_each_chunk(&mut out, np, |b, chunk| {
        let base = &values[b * np..(b + 1) * np];
        for (i, o) in chunk.iter_mut().enumerate() {
            let pos = ((i / stride) % g.n) as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, c) in coef.iter().enumerate() {
                let off = j as i64 - 2;
                let q = pos + off;
                if *c != 0.0 && (0..n).contains(&q) {
                    acc += base[(i as i64 + off * stride as i64) as usize] * *c;
                }
            }
            *o = acc / scale;
        }
    });
    out
}

/// `D_p^β` applied block-wise.
pub fn fd_multi(layout: &PhaseLayout, values: &[Complex64], beta: &[u8]) -> Vec<Complex64> {
    let mut cur = values.to_vec();
    for (axis, &k) in beta.iter().enumerate() {
        match k {
            0 => {}
            1 | 2 => cur = fd_derivative(layout, &cur, axis, k),
            _ => {
                for _ in 0..k {
                    cur = fd_derivative(layout, &cur, axis, 1);
                }
            }
        }
    }
    cur
}

/// `∫ dp Σ_κ w(κ) ‖f(·, p, κ)‖_{ℓ²_ξ}` of a `[block][p]` array.
pub fn weighted_l1_l2(
    layout: &PhaseLayout,
    values: &[Complex64],
    weight: impl Fn(&[i64]) -> f64 + Sync,
) -> f64 {
    let np = layout.p.len();
    let nk = layout.kappa2.len();
    let nx = layout.xi.len();
    let per_kappa = par::map_range(nk, |k| {
        let w = weight(&layout.kappa2.point(k));
        let mut s = 0.0;
        for p in 0..np {
            let l2: f64 = (0..nx)
                .map(|x| values[layout.block_index(x, k) * np + p].norm_sqr())
                .sum();
            s += l2.sqrt();
        }
        w * s
    });
    per_kappa.iter().sum::<f64>() * layout.p_weight()
}

/// `‖ψ‖_{E_m}`.
pub fn em_norm(psi: &TestField, spec: ScaleSpec) -> Result<f64> {
    if psi.order < spec.m {
        return Err(Error::Smoothness {
            need: spec.m,
            have: psi.order,
        });
    }
    Ok(em_norm_values(&psi.layout, &psi.values, spec.m))
}

/// `‖·‖_{E_m}` of raw samples, without smoothness bookkeeping.
pub fn em_norm_values(layout: &PhaseLayout, values: &[Complex64], m: u8) -> f64 {
    multi_indices(layout.dim, m)
        .iter()
        .map(|beta| {
            weighted_l1_l2(layout, &fd_multi(layout, values, beta), |k2| {
                kappa_bracket(k2).powi(m as i32)
            })
        })
        .sum()
}

/// `Σ_{ξ,κ} ∫ dp a·b` of two arrays on the same layout.
pub fn dual_pairing_values(layout: &PhaseLayout, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<Complex64>() * layout.p_weight()
}

/// `⟨T, ψ⟩`.
pub fn dual_pairing(t: &TField, psi: &TestField) -> Result<Complex64> {
    t.layout.check_same(&psi.layout)?;
    Ok(dual_pairing_values(&psi.layout, &t.values, &psi.values))
}

/// The standard bump `exp(−1/(1−|x|²))` on `|x| < 1`, not normalized.
pub fn bump(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// Discrete samples of `φ_ν` on the offsets of the `p` grid within the support, normalized to unit quadrature mass.
fn mollifier_stencil(layout: &PhaseLayout, nu: f64) -> Result<(i64, Vec<f64>)> {
    let g = &layout.p;
    let radius = nu.sqrt();
    if radius < 2.0 * g.h {
        return Err(Error::UnderResolved {
            radius,
            spacing: g.h,
        });
    }
    let r = (radius / g.h).floor() as i64;
    let side = (2 * r + 1) as usize;
    let total = side.pow(layout.dim as u32);
    let mut w = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rest = idx;
        let mut x = vec![0.0; layout.dim];
        for a in (0..layout.dim).rev() {
            x[a] = ((rest % side) as i64 - r) as f64 * g.h / radius;
            rest /= side;
        }
        w.push(bump(&x));
    }
    let mass: f64 = w.iter().sum::<f64>() * g.weight();
    w.iter_mut().for_each(|v| *v /= mass);
    Ok((r, w))
}

/// `J_ν ψ = e^{−ν^{1/2}⟨κ⟩}(ψ *_p φ_ν)` with `φ_ν(p) = ν^{−d/2}φ(p/ν^{1/2})` and `φ` the
/// unit-mass bump; the convolution is the discrete one on the `p` grid with zero extension.
pub fn smoothing_apply(psi: &TestField, spec: SmoothingSpec) -> Result<TestField> {
    if !(spec.nu > 0.0 && spec.nu < 1.0) {
        return Err(Error::InvalidInput(format!(
            "nu = {} outside (0, 1)",
            spec.nu
        )));
    }
    let layout = &psi.layout;
    let (r, stencil) = mollifier_stencil(layout, spec.nu)?;
    let g = &layout.p;
    let d = layout.dim;
    let side = (2 * r + 1) as usize;
    let np = g.len();
    let offsets: Vec<(Vec<i64>, f64)> = stencil
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(idx, w)| {
            let mut rest = idx;
            let mut o = vec![0i64; d];
            for a in (0..d).rev() {
                o[a] = (rest % side) as i64 - r;
                rest /= side;
            }
            (o, *w * g.weight())
        })
        .collect();
    let mut out = TestField::zeros(layout, 2);
    let sq = spec.nu.sqrt();
    par::for_each_chunk(&mut out.values, np, |b, chunk| {
        let (_, k2) = layout.block_labels(b);
        let damp = (-sq * kappa_bracket(&k2)).exp();
        let src = &psi.values[b * np..(b + 1) * np];
        for (i, o) in chunk.iter_mut().enumerate() {
            let mut pos = vec![0i64; d];
            let mut rest = i;
            for a in (0..d).rev() {
                pos[a] = (rest % g.n) as i64;
                rest /= g.n;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            'off: for (o, w) in &offsets {
                let mut lin = 0usize;
                for a in 0..d {
                    let q = pos[a] - o[a];
                    if q < 0 || q >= g.n as i64 {
                        continue 'off;
                    }
                    lin = lin * g.n + q as usize;
                }
                acc += src[lin] * *w;
            }
            *o = acc * damp;
        }
    });
    Ok(out)
}

/// A seeded dictionary of normalized probe fields: tensor bumps or smoothed plateaus in `p`
/// placed at a single `(ξ, κ)`.
#[derive(Clone, Debug)]
pub struct ProbeDictionary {
    pub probes: Vec<TestField>,
}

/// Shape parameters of one probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeShape {
    pub xi: Vec<i64>,
    pub kappa2: Vec<i64>,
    pub center: Vec<f64>,
    pub width: f64,
    /// Relative width of the plateau edges; `None` for a plain bump.
    pub edge: Option<f64>,
}

/// Samples one probe on the layout.
pub fn probe_field(layout: &PhaseLayout, shape: &ProbeShape) -> TestField {
    let profile = |x: f64| -> f64 {
        match shape.edge {
            None => bump(&[x]),
            Some(e) => {
                let a = x.abs();
                if a <= 1.0 - e {
                    1.0
                } else if a >= 1.0 {
                    0.0
                } else {
                    let s = (a - (1.0 - e)) / e;
                    let f = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
                    f(1.0 - s) / (f(1.0 - s) + f(s))
                }
            }
        }
    };
    TestField::from_fn(layout, 2, |xi, k2, p| {
        if xi != shape.xi.as_slice() || k2 != shape.kappa2.as_slice() {
            return Complex64::new(0.0, 0.0);
        }
        let v: f64 = p
            .iter()
            .zip(&shape.center)
            .map(|(x, c)| profile((x - c) / shape.width))
            .product();
        Complex64::new(v, 0.0)
    })
}

impl ProbeDictionary {
    /// `count` probes drawn from `seed`, each normalized to unit `E_m` norm.
    pub fn seeded(layout: &PhaseLayout, m: u8, count: usize, seed: u64) -> Self {
        let shapes = Self::shapes(layout, count, seed);
        let probes = par::map_range(shapes.len(), |i| {
            let f = probe_field(layout, &shapes[i]);
            let nrm = em_norm_values(layout, &f.values, m);
            f.scaled(Complex64::new(1.0 / nrm, 0.0))
        });
        ProbeDictionary { probes }
    }

    /// The shapes drawn by [`ProbeDictionary::seeded`].
    pub fn shapes(layout: &PhaseLayout, count: usize, seed: u64) -> Vec<ProbeShape> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = &layout.p;
        let span = g.n as f64 * g.h;
        let wmin = 6.0 * g.h;
        let wmax = span / 4.0;
        (0..count)
            .map(|_| {
                let xi = layout.xi.point(rng.gen_range(0..layout.xi.len()));
                let kappa2 = layout.kappa2.point(rng.gen_range(0..layout.kappa2.len()));
                let width = (wmin.ln() + rng.gen::<f64>() * (wmax / wmin).ln()).exp();
                let center = (0..layout.dim)
                    .map(|_| {
                        g.lo + span / 2.0
                            + rng.gen_range(-0.25..0.25) * (span - 2.0 * width).max(0.0)
                    })
                    .collect();
                let edge = if rng.gen_bool(0.5) {
                    Some(rng.gen_range((4.0 * g.h / width).min(0.45)..0.5))
                } else {
                    None
                };
                ProbeShape {
                    xi,
                    kappa2,
                    center,
                    width,
                    edge,
                }
            })
            .collect()
    }

    /// Probes at explicitly given shapes, normalized in `E_m`.
    pub fn from_shapes(layout: &PhaseLayout, m: u8, shapes: &[ProbeShape]) -> Self {
        let probes = par::map_range(shapes.len(), |i| {
            let f = probe_field(layout, &shapes[i]);
            let nrm = em_norm_values(layout, &f.values, m);
            f.scaled(Complex64::new(1.0 / nrm, 0.0))
        });
        ProbeDictionary { probes }
    }
}

/// `max_probe ‖op(probe)‖_{E_{m'}}` over a dictionary normalized in `E_m`: a lower bound on `‖op‖_{E_m → E_{m'}}`.
pub fn operator_norm_probe(
    op: impl Fn(&TestField) -> Result<TestField> + Sync + Send,
    codomain: u8,
    probes: &ProbeDictionary,
) -> Result<f64> {
    let vals = par::map_range(probes.probes.len(), |i| -> Result<f64> {
        let out = op(&probes.probes[i])?;
        Ok(em_norm_values(&out.layout, &out.values, codomain))
    });
    let mut best = 0.0f64;
    for v in vals {
        best = best.max(v?);
    }
    Ok(best)
}
