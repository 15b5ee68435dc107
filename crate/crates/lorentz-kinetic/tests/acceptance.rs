//! One PASS/FAIL line per acceptance criterion.
//!
//! Set `ACCEPTANCE_ONLY=3,7` to run a subset.

use lorentz_kinetic::bfz::{
    bfz_forward, bfz_forward_at, bfz_inverse, paired_thetas, theta_nodes, SampledWavefunction,
};
use lorentz_kinetic::boltzmann::{compare_ladder, limit_collision_apply, y_eps_convergence};
use lorentz_kinetic::divisors::{
    a_eta_failure_fraction, c_delta, in_a_eta, validate_eta_integral, DivisorConfig, PairBranch,
};
use lorentz_kinetic::drivers::{
    apply_a_star, apply_x1_star, apply_y_eps_star, apply_z_star, phi_st, remainder_balance,
};
use lorentz_kinetic::dynamics::{
    t_evolution_rhs, FiberSimulator, InitialData, SimConfig, SimulatedHistory,
};
use lorentz_kinetic::field::{PGrid, PhaseLayout, TestField};
use lorentz_kinetic::lattice::{LatticeBox, PeriodicPotential};
use lorentz_kinetic::numeric::{composite_gauss_legendre, loglog_slope};
use lorentz_kinetic::resonance::{
    delta_kernel, observable_nonresonant_bounds, resonance_lines, resonant_mass_split,
    single_mode_scenario, EtaQuadrature, FieldProvider, SingleModeSetup, SmoothProfile,
};
use lorentz_kinetic::scale::{
    bump, operator_norm_probe, smoothing_apply, ProbeDictionary, ProbeShape, SmoothingSpec,
};
use lorentz_kinetic::wigner::{bw_evolution_rhs, reconstruct_wigner, wigner_transform};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

type Outcome = (bool, String);

const GAMMA: f64 = 0.4;

fn c1_bfz_unitarity() -> Outcome {
    let phi = SampledWavefunction::from_fn(1, 2, 128, |x| {
        let b = bump(&[(x[0] - 0.1) / 0.95]);
        Complex64::from_polar(b, 2.0 * PI * 0.7 * x[0])
            + Complex64::new(0.0, 0.4 * bump(&[(x[0] + 0.2) / 0.7]))
    });
    let f = bfz_forward(&phi, 64, 128).unwrap();
    let norm = phi.norm_sqr().sqrt();
    let unit = (f.norm_sqr().sqrt() - norm).abs() / norm;
    let back = bfz_inverse(&f, 2).unwrap();
    let diff: f64 = phi
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        * phi.spacing();
    let round = diff.sqrt() / norm;
    (
        unit <= 1e-8 && round <= 1e-8,
        format!("norm error {unit:.2e}, round trip {round:.2e}"),
    )
}

fn c2_representation() -> Outcome {
    let phi = SampledWavefunction::from_fn(1, 2, 32, |x| {
        Complex64::from_polar(
            (-PI * (x[0] - 0.3).powi(2) / 0.25).exp(),
            2.0 * PI * 0.3 * x[0],
        )
    });
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let etas = [-0.25, -0.125, 0.0, 0.125];
    let points: Vec<(f64, i64, usize)> = (0..20)
        .map(|_| {
            (
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-4i64..=4),
                rng.gen_range(0..etas.len()),
            )
        })
        .collect();
    let exact: Vec<Complex64> = points
        .iter()
        .map(|&(x, k2, e)| wigner_transform(&phi, &[x], &[k2 as f64 / 2.0 - etas[e]]))
        .collect();
    let ms = [4usize, 8, 16, 32];
    let mut errs = Vec::new();
    for &m in &ms {
        let mut worst = 0.0f64;
        for (e, eta) in etas.iter().enumerate() {
            let eta = [*eta];
            let f = bfz_forward_at(
                &phi,
                &paired_thetas(&eta, &theta_nodes(&eta, m).unwrap()),
                32,
            )
            .unwrap();
            let bw = lorentz_kinetic::wigner::bloch_wigner_transform(
                &f,
                &eta,
                &LatticeBox::new(1, 8),
                32,
                &[vec![0.0]],
                m,
            )
            .unwrap();
            for (i, &(x, k2, ei)) in points.iter().enumerate() {
                if ei == e {
                    let got = reconstruct_wigner(&bw, &[x], &[k2 as f64 / 2.0 - eta[0]]).unwrap();
                    worst = worst.max((got - exact[i]).norm());
                }
            }
        }
        errs.push(worst.max(1e-16));
    }
    let mf: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let order = -loglog_slope(&mf, &errs);
    let fine = *errs.last().unwrap();
    (
        fine <= 1e-5 && order >= 1.0,
        format!("max error {fine:.2e} at M = 32, errors {errs:?}, order {order:.2}"),
    )
}

fn c3_gaussian_wigner() -> Outcome {
    let phi = SampledWavefunction::from_fn(1, 4, 16, |x| {
        Complex64::new(2f64.powf(0.25) * (-PI * x[0] * x[0]).exp(), 0.0)
    });
    let w0 = (wigner_transform(&phi, &[0.0], &[0.0]) - 2.0).norm();
    let (nodes, weights) = composite_gauss_legendre(-3.0, 3.0, 16, 8);
    let mut worst = 0.0f64;
    for x in [0.0, 0.37, -0.8] {
        let m: Complex64 = nodes
            .iter()
            .zip(&weights)
            .map(|(k, w)| wigner_transform(&phi, &[x], &[*k]) * *w)
            .sum();
        worst = worst.max((m.re - 2f64.sqrt() * (-2.0 * PI * x * x).exp()).abs() + m.im.abs());
    }
    (
        w0 <= 1e-6 && worst <= 1e-6,
        format!("|W(0,0) - 2| = {w0:.2e}, marginal error {worst:.2e}"),
    )
}

fn c4_evolution() -> Outcome {
    let eps = 0.04;
    let v = PeriodicPotential::single_mode(1, 0, 1.0);
    let phi = InitialData::GaussianPacket {
        center: vec![0.2],
        width: 1.2,
        k0: vec![0.15],
        radius: 4,
        per_cell: 16,
    }
    .sample();
    let sim = FiberSimulator::new(&phi, &v, eps, &[0.125], 16, 16).unwrap();
    let layout = PhaseLayout::new(1, 3, 8, PGrid::centered(1, 64, 2.0));
    let dt = 1e-4;
    let t = 0.3;
    let rel_err = |a: &[Complex64], b: &[Complex64]| {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    };
    // T field in macroscopic time, interior blocks only
    let rhs = t_evolution_rhs(&sim.t_field(t, &layout), &v);
    let np = layout.p.len();
    let t_error = |dt: f64| {
        let fp = sim.t_field(t + dt, &layout);
        let fm = sim.t_field(t - dt, &layout);
        let (mut fd, mut rr) = (Vec::new(), Vec::new());
        for b in 0..layout.n_blocks() {
            let (xi, k2) = layout.block_labels(b);
            if xi[0].abs() < 3 && k2[0].abs() < 8 {
                for i in b * np..(b + 1) * np {
                    fd.push((fp.values[i] - fm.values[i]) / (2.0 * dt));
                    rr.push(rhs.values[i]);
                }
            }
        }
        rel_err(&fd, &rr)
    };
    let e_t = t_error(dt);
    let e_fine = t_error(dt / 10.0);
    // Bloch–Wigner field in microscopic time
    let kbox = LatticeBox::new(1, 8);
    let ps: Vec<Vec<f64>> = (0..5).map(|i| vec![-10.0 + 5.0 * i as f64]).collect();
    let tau = t / eps;
    let bp = sim.bloch_wigner(tau + dt, &kbox, &ps);
    let bm = sim.bloch_wigner(tau - dt, &kbox, &ps);
    let br = bw_evolution_rhs(&sim.bloch_wigner(tau, &kbox, &ps), &v, eps);
    let (mut fd, mut rr) = (Vec::new(), Vec::new());
    for x in -6i64..=6 {
        for k in -7i64..=7 {
            for j in 0..br.nodes.len() {
                fd.push((bp.amplitude(&[x], &[k], j) - bm.amplitude(&[x], &[k], j)) / (2.0 * dt));
                rr.push(br.amplitude(&[x], &[k], j));
            }
        }
    }
    let e_w = rel_err(&fd, &rr);
    (
        e_t <= 1e-4 && e_w <= 1e-4,
        format!("T field {e_t:.2e} (step 1e-5: {e_fine:.2e}), Bloch-Wigner field {e_w:.2e}"),
    )
}

fn phi_oracle(a: f64, b: f64, s: f64, t: f64) -> Complex64 {
    let panels = ((a.abs() + b.abs()) * (t - s) / 4.0).ceil().max(1.0) as usize;
    let (nu, wu) = composite_gauss_legendre(s, t, 16, panels);
    nu.iter()
        .zip(&wu)
        .map(|(u, w)| {
            let (nv, wv) = composite_gauss_legendre(s, *u, 16, panels);
            let inner: Complex64 = nv
                .iter()
                .zip(&wv)
                .map(|(v, x)| Complex64::from_polar(*x, b * v))
                .sum();
            Complex64::from_polar(*w, a * u) * inner
        })
        .sum()
}

fn c5_phi_st() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let s = rng.gen_range(0.0..1.0);
        let t = s + rng.gen_range(0.0..1.0);
        let a: f64 = rng.gen_range(-40.0..40.0);
        let b = match i % 4 {
            0 => -a,
            1 => 0.0,
            _ => rng.gen_range(-40.0..40.0),
        };
        let (a, b) = if i % 8 == 5 { (0.0, b) } else { (a, b) };
        worst = worst.max((phi_st(a, b, s, t) - phi_oracle(a, b, s, t)).norm());
    }
    let r1 = (phi_st(2.0 * PI, -2.0 * PI, 0.0, 1.0) - Complex64::new(0.0, 1.0 / (2.0 * PI))).norm();
    let r2 = phi_st(2.0 * PI, 2.0 * PI, 0.0, 1.0).norm();
    (
        worst <= 1e-10 && r1 <= 1e-12 && r2 <= 1e-12,
        format!("max error {worst:.2e}, reference values {r1:.1e} {r2:.1e}"),
    )
}

fn c6_small_divisors() -> Outcome {
    let cfg = DivisorConfig {
        delta: 0.1,
        n_radius: 20,
        dim: 2,
        gamma: GAMMA,
    };
    let fail = a_eta_failure_fraction(&cfg, 10_000, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let finite = (0..200).all(|_| {
        let eta = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        c_delta(&eta, &cfg).unwrap().c_delta_value.is_finite()
    });
    let zero_rejected = !in_a_eta(&[0.0, 0.0], &cfg).unwrap().member;
    (
        fail <= 0.02 && finite && zero_rejected,
        format!(
            "member fraction {:.4}, c_delta finite {finite}, eta = 0 rejected {zero_rejected}",
            1.0 - fail
        ),
    )
}

fn driver_layout() -> PhaseLayout {
    PhaseLayout::new(1, 2, 8, PGrid::centered(1, 64, 1.0))
}

fn c7_driver_scalings() -> Outcome {
    let layout = driver_layout();
    let eta = [0.118];
    let v = PeriodicPotential::single_mode(1, 0, 1.0);
    let p1 = ProbeDictionary::seeded(&layout, 1, 24, 71);
    let p2 = ProbeDictionary::seeded(&layout, 2, 24, 72);
    let epss = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let (s, t) = (0.0, 0.5);
    fn norm(f: &(dyn Fn(&TestField) -> TestField + Sync), probes: &ProbeDictionary) -> f64 {
        operator_norm_probe(|psi| Ok(f(psi)), 0, probes).unwrap()
    }
    let x1e: Vec<f64> = epss
        .iter()
        .map(|&e| norm(&|p| apply_x1_star(p, s, t, e, &eta, &v), &p1))
        .collect();
    let ye: Vec<f64> = epss
        .iter()
        .map(|&e| norm(&|p| apply_y_eps_star(p, s, t, e, &eta, &v), &p2))
        .collect();
    let ze: Vec<f64> = epss
        .iter()
        .map(|&e| norm(&|p| apply_z_star(p, s, t, e, &eta, &v), &p2))
        .collect();
    let sx = loglog_slope(&epss, &x1e);
    let sy = loglog_slope(&epss, &ye);
    let sz = loglog_slope(&epss, &ze);
    let taus: Vec<f64> = (1..=12).map(|k| 0.5f64.powi(k)).collect();
    let tau_slope = |f: &(dyn Fn(&TestField, f64, f64) -> TestField + Sync),
                     probes: &ProbeDictionary| {
        let vals: Vec<f64> = taus
            .iter()
            .map(|&tau| norm(&|p| f(p, 0.1, 0.1 + tau), probes))
            .collect();
        loglog_slope(&taus, &vals)
    };
    let ta = tau_slope(&|p, s, t| apply_a_star(p, s, t, &eta).unwrap(), &p1);
    let ty = tau_slope(&|p, s, t| apply_y_eps_star(p, s, t, 1e-3, &eta, &v), &p2);
    let tx = tau_slope(&|p, s, t| apply_x1_star(p, s, t, 1e-1, &eta, &v), &p1);
    let tz = tau_slope(&|p, s, t| apply_z_star(p, s, t, 1e-1, &eta, &v), &p2);
    let pass = sx >= 0.5 - GAMMA
        && sz >= 1.0 - 2.0 * GAMMA
        && sy.abs() <= 0.05
        && (ta - 1.0).abs() <= 0.02
        && (ty - 1.0).abs() <= 0.05
        && (GAMMA - 0.1..=1.05).contains(&tx)
        && (2.0 * GAMMA - 0.1..=2.05).contains(&tz);
    (
        pass,
        format!("eps slopes X1 {sx:.3} Y {sy:.3} Z {sz:.3}; tau slopes A {ta:.3} Y {ty:.3} X1 {tx:.3} Z {tz:.3}"),
    )
}

fn c8_smoothing() -> Outcome {
    let layout = PhaseLayout::new(1, 0, 200, PGrid::centered(1, 256, 0.75));
    let h = layout.p.h;
    let mut shapes = Vec::new();
    for k2 in [0i64, 2, 6, 12, 24, 40, 60, 90, 130, 200] {
        for w in [6.0 * h, 12.0 * h, 24.0 * h, 0.3] {
            shapes.push(ProbeShape {
                xi: vec![0],
                kappa2: vec![k2],
                center: vec![0.0],
                width: w,
                edge: None,
            });
        }
    }
    let d1 = ProbeDictionary::from_shapes(&layout, 1, &shapes);
    let d2 = ProbeDictionary::from_shapes(&layout, 2, &shapes);
    let nus = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let up: Vec<f64> = nus
        .iter()
        .map(|&nu| {
            operator_norm_probe(|p| smoothing_apply(p, SmoothingSpec { nu }), 2, &d1).unwrap()
        })
        .collect();
    let down: Vec<f64> =
        nus.iter()
            .map(|&nu| {
                operator_norm_probe(
                    |p| {
                        Ok(smoothing_apply(p, SmoothingSpec { nu })?
                            .axpy(Complex64::new(-1.0, 0.0), p))
                    },
                    1,
                    &d2,
                )
                .unwrap()
            })
            .collect();
    let su = loglog_slope(&nus, &up);
    let sd = loglog_slope(&nus, &down);
    (
        (su + 1.0).abs() <= 0.1 && (sd - 0.5).abs() <= 0.1,
        format!("E1->E2 slope {su:.3}, (J - Id) E2->E1 slope {sd:.3}"),
    )
}

fn history_for(eps: f64, eta: f64) -> SimulatedHistory {
    let cfg = SimConfig {
        eps,
        t_final: 1.0,
        dt: 0.1,
        potential: PeriodicPotential::single_mode(1, 0, 0.5),
        n: 8,
        m: 64,
        eta: vec![eta],
        kappa2_radius: 8,
        xi_radius: 4,
        p_grid: PGrid::centered(1, 256, 2.0),
        initial: InitialData::GaussianPacket {
            center: vec![0.0],
            width: 4.0,
            k0: vec![0.0],
            radius: 16,
            per_cell: 16,
        },
    };
    SimulatedHistory {
        sim: FiberSimulator::from_config(&cfg).unwrap(),
        layout: cfg.layout(),
    }
}

fn c9_remainder() -> Outcome {
    let eta = 15.0 / 128.0;
    let cfg = DivisorConfig {
        delta: 0.1,
        n_radius: 20,
        dim: 1,
        gamma: GAMMA,
    };
    let admissible = in_a_eta(&[eta], &cfg).unwrap().member;
    let taus: Vec<f64> = (2..=7).map(|k| 0.5f64.powi(k)).collect();
    let epss = [0.1, 0.03, 0.01];
    let s = 0.2;
    let mut slopes = Vec::new();
    let mut table = Vec::new();
    for &eps in &epss {
        let h = history_for(eps, eta);
        let shapes: Vec<ProbeShape> = [
            (0i64, 0i64, 0.6),
            (0, 1, 0.4),
            (1, 1, 0.5),
            (0, -2, 0.3),
            (-1, 1, 0.8),
        ]
        .iter()
        .map(|&(xi, k2, w)| ProbeShape {
            xi: vec![xi],
            kappa2: vec![k2],
            center: vec![0.0],
            width: w,
            edge: None,
        })
        .collect();
        let probes = ProbeDictionary::from_shapes(&h.layout, 2, &shapes);
        let vals: Vec<f64> = taus
            .iter()
            .map(|&tau| {
                probes
                    .probes
                    .iter()
                    .map(|p| {
                        remainder_balance(&h, p, s, s + tau, &h.sim.potential)
                            .unwrap()
                            .norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        slopes.push(loglog_slope(&taus, &vals));
        table.push(vals);
    }
    // common constant for |t-s|^{3γ}, calibrated on the largest ε with a factor 2
    let c = 2.0
        * taus
            .iter()
            .zip(&table[0])
            .map(|(t, v)| v / t.powf(3.0 * GAMMA))
            .fold(0.0, f64::max);
    let common = table.iter().all(|vals| {
        taus.iter()
            .zip(vals)
            .all(|(t, v)| *v <= c * t.powf(3.0 * GAMMA))
    });
    let cn = 2.0
        * taus
            .iter()
            .zip(&table[0])
            .map(|(t, v)| v / (0.1f64.powf(-1.5) * t * t))
            .fold(0.0, f64::max);
    let naive = epss.iter().zip(&table).all(|(e, vals)| {
        taus.iter()
            .zip(vals)
            .all(|(t, v)| *v <= cn * e.powf(-1.5) * t * t)
    });
    let pass = admissible && slopes.iter().all(|s| *s >= 3.0 * GAMMA - 0.1) && common && naive;
    (pass, format!("slopes {slopes:.3?}, common constant {common}, naive bound {naive}, eta admissible {admissible}"))
}

fn c10_limit_operator() -> Outcome {
    let layout = PhaseLayout::new(1, 3, 10, PGrid::centered(1, 32, 1.0));
    let eta = [0.118];
    let v = PeriodicPotential::new(
        1,
        &[
            (vec![1], Complex64::new(0.7, 0.2)),
            (vec![2], Complex64::new(-0.3, 0.1)),
        ],
        true,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let psi = TestField::from_fn(&layout, 2, |_, _, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let y = limit_collision_apply(&psi, &eta, &v).unwrap();
        for b in 0..layout.n_blocks() {
            if layout.block_labels(b).0[0] == 0 {
                let np = layout.p.len();
                worst = worst.max(
                    y.values[b * np..(b + 1) * np]
                        .iter()
                        .map(|z| z.norm())
                        .fold(0.0, f64::max),
                );
            }
        }
    }
    let psi = TestField::from_fn(&layout, 2, |xi, k2, p| {
        Complex64::new(
            bump(&[p[0] / 0.8]) / (1.0 + (k2[0] * k2[0]) as f64),
            0.2 * xi[0] as f64 * bump(&[p[0] / 0.8]),
        )
    });
    let ladder: Vec<f64> = (0..16)
        .map(|i| 1e-5 * 10f64.powf(3.0 * i as f64 / 15.0))
        .collect();
    let r = y_eps_convergence(&psi, 0.1, 0.6, &eta, &v, &ladder).unwrap();
    (
        worst <= 1e-14 && (r.slope - 1.0).abs() <= 0.2,
        format!(
            "max |Y psi| at xi = 0 {worst:.1e}, eps slope {:.3}",
            r.slope
        ),
    )
}

fn c11_boltzmann() -> Outcome {
    let eta = 15.0 / 128.0;
    let cfg = DivisorConfig {
        delta: 0.1,
        n_radius: 20,
        dim: 1,
        gamma: GAMMA,
    };
    let admissible = in_a_eta(&[eta], &cfg).unwrap().member;
    let make = |eps: f64, v: PeriodicPotential| SimConfig {
        eps,
        t_final: 0.5,
        dt: 0.05,
        potential: v,
        n: 8,
        m: 64,
        eta: vec![eta],
        kappa2_radius: 6,
        xi_radius: 2,
        p_grid: PGrid::centered(1, 64, 2.0),
        initial: InitialData::GaussianPacket {
            center: vec![0.0],
            width: 4.0,
            k0: vec![0.0],
            radius: 16,
            per_cell: 16,
        },
    };
    let epss = [0.1, 0.05, 0.025];
    let cfgs: Vec<SimConfig> = epss
        .iter()
        .map(|&e| make(e, PeriodicPotential::single_mode(1, 0, 0.5)))
        .collect();
    let layout = cfgs[0].layout();
    let psis: Vec<TestField> = [
        (0i64, 0i64, 0.0),
        (1, -1, 0.3),
        (0, 2, -0.2),
        (-1, 1, 0.0),
        (2, -2, 0.5),
    ]
    .iter()
    .map(|&(xi0, k0, c)| {
        TestField::from_fn(&layout, 2, |xi, k2, p| {
            if xi[0] == xi0 && k2[0] == k0 {
                Complex64::new(bump(&[(p[0] - c) / 0.8]), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    })
    .collect();
    let cmp = compare_ladder(&cfgs, &psis, 0.005).unwrap();
    let free: Vec<SimConfig> = epss
        .iter()
        .map(|&e| make(e, PeriodicPotential::zero(1)))
        .collect();
    let control = compare_ladder(&free, &psis, 0.005).unwrap();
    let ctrl = control
        .sup_gaps
        .iter()
        .flatten()
        .fold(0.0f64, |a, b| a.max(*b));
    let gaps: Vec<String> = cmp
        .sup_gaps
        .iter()
        .map(|g| format!("{:.1e}", g.iter().fold(0.0f64, |a, b| a.max(*b))))
        .collect();
    (
        admissible && cmp.all_monotone() && ctrl <= 1e-8,
        format!("strictly decreasing for all 5 test fields {}, worst gaps {gaps:?}, V = 0 control {ctrl:.1e}", cmp.all_monotone()),
    )
}

fn c12_resonant_layer() -> Outcome {
    // kernel mass: closed-form tail beyond |c'| = C plus Gauss–Legendre on [-C, C]
    let (tau, eps) = (0.3, 0.01);
    let cmax = 50.0;
    let lam = 4.0 * PI * PI * tau / eps;
    let (x, w) = composite_gauss_legendre(0.0, cmax, 16, (lam * cmax / 2.0).ceil() as usize);
    let body: f64 = 2.0
        * x.iter()
            .zip(&w)
            .map(|(c, wi)| wi * delta_kernel(*c, tau, eps))
            .sum::<f64>();
    let mass = body + 2.0 * eps / (16.0 * PI.powi(4) * cmax);
    let mass_err = (mass - tau / (4.0 * PI)).abs() / (tau / (4.0 * PI));
    // off-slab mass along an ε ladder
    let layout = PhaseLayout::new(1, 0, 6, PGrid::centered(1, 32, 1.0));
    let v = PeriodicPotential::single_mode(1, 0, 1.0);
    let cfg = DivisorConfig {
        delta: 0.1,
        n_radius: 6,
        dim: 1,
        gamma: GAMMA,
    };
    let quad = EtaQuadrature::gauss(8, &[64], &cfg).unwrap();
    let f = |p: &[f64], k: &[f64]| bump(&[p[0] / 0.9]) * bump(&[k[0] / 2.6]);
    let epss = [1e-2, 3e-3, 1e-3, 3e-4];
    let off: Vec<f64> = epss
        .iter()
        .map(|&e| {
            resonant_mass_split(
                &SmoothProfile::new(&layout, e, 12),
                &f,
                0.0,
                0.25,
                &quad,
                &v,
                0.1,
            )
            .unwrap()
            .off_mass
        })
        .collect();
    let slope = loglog_slope(&epss, &off);
    let lines = resonance_lines(3, 4.0).unwrap();
    let line_err = lines
        .iter()
        .flat_map(|l| {
            let nn = (l.n[0] * l.n[0] + l.n[1] * l.n[1]) as f64;
            [l.start, l.end].map(|e| (l.n[0] as f64 * e[0] + l.n[1] as f64 * e[1] - nn).abs())
        })
        .fold(0.0, f64::max);
    (
        mass_err <= 1e-4 && (slope - 1.0).abs() <= 0.1 && line_err <= 1e-12,
        format!("kernel mass error {mass_err:.1e}, off-slab slope {slope:.3}, line residual {line_err:.1e}"),
    )
}

fn c13_single_mode() -> Outcome {
    let r = single_mode_scenario(0.05, &[1e-2, 1e-3], &SingleModeSetup::default()).unwrap();
    let two_lines = r.lines.len() == 2
        && r.lines
            .iter()
            .all(|l| (l.start[0] - l.end[0]).abs() == 0.0 && (l.start[0].abs() - 1.0).abs() == 0.0)
        && r.lines[0].start[0] != r.lines[1].start[0];
    (
        r.ratio <= 0.2 && r.control_ratio >= 0.5 && two_lines,
        format!(
            "S1 ratio {:.3}, control ratio {:.3}, lines k1 = +-1 {two_lines}",
            r.ratio, r.control_ratio
        ),
    )
}

fn c14_observable() -> Outcome {
    let layout = PhaseLayout::new(1, 2, 8, PGrid::centered(1, 32, 1.0));
    let v = PeriodicPotential::single_mode(1, 0, 1.0);
    let cfg = DivisorConfig {
        delta: 0.1,
        n_radius: 6,
        dim: 1,
        gamma: GAMMA,
    };
    let quad = EtaQuadrature::gauss(8, &[8], &cfg).unwrap();
    let epss = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let provs: Vec<SmoothProfile> = epss
        .iter()
        .map(|&e| SmoothProfile::new(&layout, e, 14))
        .collect();
    let refs: Vec<&dyn FieldProvider> = provs.iter().map(|p| p as &dyn FieldProvider).collect();
    let f = |p: &[f64], k: &[f64]| bump(&[p[0] / 0.9]) * bump(&[k[0] / 3.0]);
    let r = observable_nonresonant_bounds(&refs, &f, 0.0, 0.5, &quad, &v).unwrap();
    let c2 = DivisorConfig { dim: 2, ..cfg };
    let e = (0.6, 0.5, 0.1);
    let cases: [(&[i64], &[i64], &[i64], PairBranch); 6] = [
        (&[1, 0], &[0, 1], &[0, 0], PairBranch::First),
        (&[1, 0], &[-2, 0], &[1, 0], PairBranch::First),
        (&[1, 1], &[1, 1], &[5, 4], PairBranch::Second),
        (&[2, -1], &[1, 3], &[3, -2], PairBranch::First),
        (&[1, 2], &[2, 4], &[-1, 2], PairBranch::Second),
        (&[3, 1], &[-1, 2], &[6, 6], PairBranch::Second),
    ];
    let reps: Vec<_> = cases
        .iter()
        .map(|(n, np, k, br)| validate_eta_integral(n, np, k, *br, e, &c2, 0.0).unwrap())
        .collect();
    let c = 2.0 * reps[0].ratio;
    let bounded = reps.iter().all(|r| r.ratio <= c);
    let both = reps.iter().any(|r| r.collinear && !r.excluded) && reps.iter().any(|r| !r.collinear);
    let pass =
        r.x1_slope >= 0.5 - GAMMA - 0.1 && r.z_slope >= 1.0 - 2.0 * GAMMA - 0.1 && bounded && both;
    let ratios: Vec<String> = reps.iter().map(|r| format!("{:.2e}", r.ratio)).collect();
    (
        pass,
        format!(
            "X1 slope {:.3}, Z slope {:.3}, eta-integral ratios {ratios:?} vs C = {c:.2e}",
            r.x1_slope, r.z_slope
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("BFZ unitarity and inversion", c1_bfz_unitarity),
        ("representation formula", c2_representation),
        ("Gaussian Wigner function", c3_gaussian_wigner),
        ("evolution consistency", c4_evolution),
        ("phi_st closed forms", c5_phi_st),
        ("small divisors", c6_small_divisors),
        ("driver norm scalings", c7_driver_scalings),
        ("smoothing operators", c8_smoothing),
        ("remainder regularity", c9_remainder),
        ("limit collision operator", c10_limit_operator),
        ("Boltzmann comparison", c11_boltzmann),
        ("resonant-set layer", c12_resonant_layer),
        ("single-mode example", c13_single_mode),
        ("observable non-resonant bounds", c14_observable),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = run();
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
    }
}
