//! The limiting collision operator, the linear Boltzmann evolution it generates
//! together with free transport, and the comparison of `T^ε` with that limit.

use crate::drivers::{a_freq, apply_y_eps_star};
use crate::dynamics::{simulate, SimConfig};
use crate::error::{Error, Result};
use crate::field::{PhaseLayout, TField, TestField, ThetaSpectrum};
use crate::lattice::PeriodicPotential;
use crate::numeric::{fft_freq, fft_nd, loglog_slope, I};
use crate::par;
use crate::scale::{dual_pairing_values, em_norm_values};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Denominators below this magnitude are treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Largest admissible `dt·‖Y‖` for the explicit fourth-order collision step.
pub const STEP_BOUND: f64 = 2.5;

/// One coupling `ψ(ξ, κ′) ↦ (Y^{η,*}ψ)(ξ, κ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionEntry {
    /// Block index of `(ξ, κ′)`.
    pub source: usize,
    pub weight: Complex64,
    /// `κ′ ≠ κ`, present only for `n ⊥ ξ`.
    pub perpendicular: bool,
}

/// The assembled kernel of `Y^{η,*}` on a layout; couplings leaving the `κ` box are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionKernel {
    pub layout: PhaseLayout,
    pub eta: Vec<f64>,
    /// `rows[b]`: the couplings feeding block `b`, one entry per source block.
    pub rows: Vec<Vec<CollisionEntry>>,
}

impl CollisionKernel {
    /// Collects the pairs `n′ = −n` whose phases cancel identically: the diagonal
    /// terms `σ′ = σ` and, for `n ⊥ ξ`, the shifts `κ ↦ κ − σn`, each with weight
    /// `iσσ′V̂(n)V̂(−n) / (4π² a_σ)`.
    pub fn build(layout: &PhaseLayout, eta: &[f64], v: &PeriodicPotential) -> Result<Self> {
        if eta.len() != layout.dim || v.dim != layout.dim {
            return Err(Error::GridMismatch("dimension".into()));
        }
        let modes = v.modes();
        let rows = par::map_range(layout.n_blocks(), |b| -> Result<Vec<CollisionEntry>> {
            let (xi, k2) = layout.block_labels(b);
            let mut acc: BTreeMap<usize, (Complex64, bool)> = BTreeMap::new();
            for (n, vn) in &modes {
                let m: Vec<i64> = n.iter().map(|x| -x).collect();
                let vm = v.coeff(&m);
                let xin: Vec<i64> = xi.iter().zip(n).map(|(a, c)| a + c).collect();
                for sigma in [1i64, -1] {
                    let fb = a_freq(n, &xi, &k2, sigma);
                    let k2n: Vec<i64> = k2.iter().zip(n).map(|(k, c)| k - sigma * c).collect();
                    for sigma2 in [1i64, -1] {
                        let fa = a_freq(&m, &xin, &k2n, sigma2);
                        if !fa.add(&fb).is_identically_zero() {
                            continue;
                        }
                        let tgt: Vec<i64> =
                            k2n.iter().zip(n).map(|(k, c)| k + sigma2 * c).collect();
                        let Some(src) = layout.block_of(&xi, &tgt) else {
                            continue;
                        };
                        let den = fb.value(eta);
                        if den.abs() < RESONANCE_TOL {
                            return Err(Error::Resonant {
                                n: n.clone(),
                                xi: xi.clone(),
                                kappa2: k2.clone(),
                            });
                        }
                        let w = I * (sigma * sigma2) as f64 * vn * vm / (4.0 * PI * PI * den);
                        let e = acc
                            .entry(src)
                            .or_insert((Complex64::new(0.0, 0.0), sigma2 != sigma));
                        e.0 += w;
                    }
                }
            }
            Ok(acc
                .into_iter()
                .map(|(source, (weight, perpendicular))| CollisionEntry {
                    source,
                    weight,
                    perpendicular,
                })
                .collect())
        });
        Ok(CollisionKernel {
            layout: layout.clone(),
            eta: eta.to_vec(),
            rows: rows.into_iter().collect::<Result<_>>()?,
        })
    }

    /// `Y^{η,*}` on `[block][width]` data.
    pub fn apply_adjoint_values(&self, values: &[Complex64], width: usize) -> Vec<Complex64> {
        let blocks = par::map_range(self.rows.len(), |b| {
            let mut out = vec![Complex64::new(0.0, 0.0); width];
            for e in &self.rows[b] {
                let src = &values[e.source * width..(e.source + 1) * width];
                out.iter_mut()
                    .zip(src)
                    .for_each(|(o, x)| *o += e.weight * x);
            }
            out
        });
        blocks.into_iter().flatten().collect()
    }

    /// The forward operator `Y`: the transpose of the adjoint kernel under the bilinear pairing.
    pub fn apply_forward_values(&self, values: &[Complex64], width: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
        for (b, row) in self.rows.iter().enumerate() {
            let src = &values[b * width..(b + 1) * width];
            for e in row {
                let dst = &mut out[e.source * width..(e.source + 1) * width];
                dst.iter_mut()
                    .zip(src)
                    .for_each(|(o, x)| *o += e.weight * x);
            }
        }
        out
    }

    pub fn apply_adjoint(&self, psi: &TestField) -> Result<TestField> {
        self.layout.check_same(&psi.layout)?;
        let values = self.apply_adjoint_values(&psi.values, psi.layout.p.len());
        Ok(TestField {
            layout: psi.layout.clone(),
            values,
            order: psi.order,
        })
    }

    /// Schur bound `(max row sum · max column sum)^{1/2}` on the `ℓ²` norm of the block matrix.
    pub fn norm_bound(&self) -> f64 {
        let mut cols = vec![0.0; self.rows.len()];
        let mut row_max = 0.0f64;
        for row in &self.rows {
            let mut s = 0.0;
            for e in row {
                s += e.weight.norm();
                cols[e.source] += e.weight.norm();
            }
            row_max = row_max.max(s);
        }
        (row_max * cols.iter().copied().fold(0.0, f64::max)).sqrt()
    }
}

/// `Y^{η,*}ψ`.
pub fn limit_collision_apply(
    psi: &TestField,
    eta: &[f64],
    v: &PeriodicPotential,
) -> Result<TestField> {
    CollisionKernel::build(&psi.layout, eta, v)?.apply_adjoint(psi)
}

/// `‖Y^{ε,η,*}_{st}ψ − (t−s)Y^{η,*}ψ‖_{E_0}` along an ε ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YConvergence {
    pub eps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Log-log slope of the errors in ε.
    pub slope: f64,
}

pub fn y_eps_convergence(
    psi: &TestField,
    s: f64,
    t: f64,
    eta: &[f64],
    v: &PeriodicPotential,
    eps_list: &[f64],
) -> Result<YConvergence> {
    let limit = limit_collision_apply(psi, eta, v)?.scaled(Complex64::new(t - s, 0.0));
    let errors: Vec<f64> = eps_list
        .iter()
        .map(|&eps| {
            let d =
                apply_y_eps_star(psi, s, t, eps, eta, v).axpy(Complex64::new(-1.0, 0.0), &limit);
            em_norm_values(&d.layout, &d.values, 0)
        })
        .collect();
    let slope = if eps_list.len() >= 2 && errors.iter().all(|e| *e > 0.0) {
        loglog_slope(eps_list, &errors)
    } else {
        f64::NAN
    };
    Ok(YConvergence {
        eps: eps_list.to_vec(),
        errors,
        slope,
    })
}

/// Coefficients of a field in a plane-wave basis `e^{i w_j·p}` shared by all blocks.
struct WaveForm {
    coeffs: Vec<Complex64>,
    waves: Vec<Vec<f64>>,
}

fn wave_form(t0: &TField) -> WaveForm {
    let layout = &t0.layout;
    match &t0.spectrum {
        Some(s) => WaveForm {
            coeffs: s.coeffs.clone(),
            waves: s
                .nodes
                .iter()
                .map(|th| th.iter().map(|x| -4.0 * PI * s.scale * x).collect())
                .collect(),
        },
        None => {
            let np = layout.p.len();
            let n = layout.p.n;
            let d = layout.dim;
            let mut coeffs = t0.values.clone();
            for blk in coeffs.chunks_mut(np) {
                fft_nd(blk, n, d, false);
                blk.iter_mut().for_each(|c| *c /= np as f64);
            }
            let len = n as f64 * layout.p.h;
            let waves = (0..np)
                .map(|mut idx| {
                    let mut w = vec![0.0; d];
                    for ax in (0..d).rev() {
                        w[ax] = 2.0 * PI * fft_freq(idx % n, n) as f64 / len;
                        idx /= n;
                    }
                    w
                })
                .collect();
            WaveForm { coeffs, waves }
        }
    }
}

/// Solves `∂_t T = A^{κ−η}T + Y^η T` with `A^{κ−η}T = −4π(κ−η)·∇_p T`.
///
/// Transport acts on each plane wave by an exact phase, so `T(t, p) = T₀(p − 4π(κ−η)t)`
/// when `V = 0`; the collision part is integrated with the fourth-order Lawson
/// (integrating-factor) Runge–Kutta scheme. Fields without a plane-wave spectrum are
/// expanded in the discrete Fourier basis of the periodic `p` box. Returns the
/// snapshots at `t = 0, dt, …, t_final`.
pub fn boltzmann_evolve(
    t0: &TField,
    eta: &[f64],
    v: &PeriodicPotential,
    t_final: f64,
    dt: f64,
) -> Result<Vec<TField>> {
    if t0.eta.len() != eta.len() || t0.eta.iter().zip(eta).any(|(a, b)| (a - b).abs() > 1e-14) {
        return Err(Error::EtaMismatch {
            field: t0.eta.clone(),
            requested: eta.to_vec(),
        });
    }
    if !(dt > 0.0) || t_final < 0.0 {
        return Err(Error::InvalidInput("time step must be positive".into()));
    }
    let steps = (t_final / dt).round() as usize;
    if (steps as f64 * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "t_final = {t_final} is not a multiple of dt = {dt}"
        )));
    }
    let layout = &t0.layout;
    let kernel = CollisionKernel::build(layout, eta, v)?;
    let bound = dt * kernel.norm_bound();
    if bound > STEP_BOUND {
        return Err(Error::StepBound(bound));
    }
    let form = wave_form(t0);
    let width = form.waves.len();
    let rates: Vec<f64> = (0..layout.n_blocks())
        .flat_map(|b| {
            let (_, k2) = layout.block_labels(b);
            let c: Vec<f64> = k2
                .iter()
                .zip(eta)
                .map(|(k, e)| 4.0 * PI * (*k as f64 / 2.0 - e))
                .collect();
            form.waves
                .iter()
                .map(move |w| -w.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>())
                .collect::<Vec<_>>()
        })
        .collect();
    let phase = |x: &[Complex64], tau: f64| -> Vec<Complex64> {
        x.iter()
            .zip(&rates)
            .map(|(c, r)| c * Complex64::from_polar(1.0, r * tau))
            .collect()
    };
    let y = |x: &[Complex64]| kernel.apply_forward_values(x, width);
    let axpy = |x: &[Complex64], a: f64, z: &[Complex64]| -> Vec<Complex64> {
        x.iter().zip(z).map(|(p, q)| p + a * q).collect()
    };
    let h = dt;
    let mut c = form.coeffs.clone();
    let mut snaps = vec![snapshot(t0, c.clone(), 0.0)];
    for k in 1..=steps {
        let k1 = y(&c);
        let k2 = phase(&y(&phase(&axpy(&c, h / 2.0, &k1), h / 2.0)), -h / 2.0);
        let k3 = phase(&y(&phase(&axpy(&c, h / 2.0, &k2), h / 2.0)), -h / 2.0);
        let k4 = phase(&y(&phase(&axpy(&c, h, &k3), h)), -h);
        let next: Vec<Complex64> = (0..c.len())
            .map(|i| c[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        c = phase(&next, h);
        snaps.push(snapshot(t0, c.clone(), k as f64 * dt));
    }
    Ok(snaps)
}

fn snapshot(t0: &TField, coeffs: Vec<Complex64>, t: f64) -> TField {
    let layout = &t0.layout;
    match &t0.spectrum {
        Some(s) => TField::from_spectrum(
            t,
            t0.eps,
            &t0.eta,
            layout,
            ThetaSpectrum {
                nodes: s.nodes.clone(),
                scale: s.scale,
                coeffs,
            },
        ),
        None => {
            let np = layout.p.len();
            let mut values = coeffs;
            for blk in values.chunks_mut(np) {
                fft_nd(blk, layout.p.n, layout.dim, true);
            }
            TField::from_values(t, t0.eps, &t0.eta, layout, values)
        }
    }
}

/// `|⟨T^ε_t − T_t, ψ⟩|` per snapshot for each `ψ`: `[psi][snapshot]`.
pub fn compare_to_limit(
    sim: &[TField],
    limit: &[TField],
    psis: &[TestField],
) -> Result<Vec<Vec<f64>>> {
    if sim.len() != limit.len() {
        return Err(Error::GridMismatch(format!(
            "{} simulated and {} limit snapshots",
            sim.len(),
            limit.len()
        )));
    }
    for (a, b) in sim.iter().zip(limit) {
        a.layout.check_same(&b.layout)?;
        if (a.t - b.t).abs() > 1e-12 || a.eta != b.eta {
            return Err(Error::GridMismatch(format!(
                "snapshot at t = {} against t = {}",
                a.t, b.t
            )));
        }
    }
    for psi in psis {
        if let Some(a) = sim.first() {
            a.layout.check_same(&psi.layout)?;
        }
    }
    Ok(psis
        .iter()
        .map(|psi| {
            sim.iter()
                .zip(limit)
                .map(|(a, b)| {
                    let diff: Vec<Complex64> =
                        a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
                    dual_pairing_values(&a.layout, &diff, &psi.values).norm()
                })
                .collect()
        })
        .collect())
}

/// One line of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub eps: f64,
    pub psi_id: usize,
    pub t: f64,
    pub pairing_gap: f64,
}

/// The ε-ladder comparison of `T^ε` with the Boltzmann limit started from `T^ε_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitComparison {
    pub rows: Vec<GapRow>,
    /// `sup_t` gaps, `[eps][psi]`.
    pub sup_gaps: Vec<Vec<f64>>,
    pub eps: Vec<f64>,
    /// For each `ψ`, whether the sup gap strictly decreases along the ladder.
    pub monotone: Vec<bool>,
}

impl LimitComparison {
    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().all(|m| *m)
    }
}

/// Runs the simulation for every configuration of the ladder, evolves the limit
/// equation from each initial snapshot with collision step `collision_dt` (a divisor
/// of the snapshot spacing) and tabulates the pairing gaps.
pub fn compare_ladder(
    cfgs: &[SimConfig],
    psis: &[TestField],
    collision_dt: f64,
) -> Result<LimitComparison> {
    let runs = par::map_range(cfgs.len(), |i| -> Result<Vec<Vec<f64>>> {
        let cfg = &cfgs[i];
        let sim = simulate(cfg)?;
        let sub = (cfg.dt / collision_dt).round().max(1.0) as usize;
        let fine = boltzmann_evolve(
            &sim[0],
            &cfg.eta,
            &cfg.potential,
            cfg.t_final,
            cfg.dt / sub as f64,
        )?;
        let limit: Vec<TField> = fine.into_iter().step_by(sub).collect();
        compare_to_limit(&sim, &limit, psis)
    });
    let mut rows = Vec::new();
    let mut sup_gaps = Vec::new();
    for (cfg, run) in cfgs.iter().zip(runs) {
        let gaps = run?;
        let mut sups = Vec::new();
        for (pid, g) in gaps.iter().enumerate() {
            for (k, v) in g.iter().enumerate() {
                rows.push(GapRow {
                    eps: cfg.eps,
                    psi_id: pid,
                    t: k as f64 * cfg.dt,
                    pairing_gap: *v,
                });
            }
            sups.push(g.iter().copied().fold(0.0, f64::max));
        }
        sup_gaps.push(sups);
    }
    let monotone = (0..psis.len())
        .map(|p| sup_gaps.windows(2).all(|w| w[1][p] < w[0][p]))
        .collect();
    Ok(LimitComparison {
        rows,
        sup_gaps,
        eps: cfgs.iter().map(|c| c.eps).collect(),
        monotone,
    })
}
