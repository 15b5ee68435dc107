//! One function per subcommand; each returns the report, the table and a one-line summary.

use crate::config::ExperimentConfig;
use crate::output::{num, CliError, RunOutput, Table};
use lorentz_kinetic::boltzmann::compare_ladder;
use lorentz_kinetic::divisors::{c_delta, in_a_eta, validate_osc_bounds, DivisorConfig, OscBound};
use lorentz_kinetic::drivers::remainder_balance;
use lorentz_kinetic::dynamics::{
    simulate as run_simulation, FiberSimulator, SimConfig, SimulatedHistory,
};
use lorentz_kinetic::field::{PGrid, PhaseLayout, TestField};
use lorentz_kinetic::numeric::loglog_slope;
use lorentz_kinetic::resonance::{
    lines_svg, observable_xi0, resonance_lines, single_mode_scenario, EtaQuadrature,
    SimulatedProvider, SingleModeSetup,
};
use lorentz_kinetic::scale::{
    bump, operator_norm_probe, smoothing_apply, ProbeDictionary, ProbeShape, SmoothingSpec,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn sim_at(cfg: &ExperimentConfig, eps: f64) -> SimConfig {
    SimConfig {
        eps,
        ..cfg.sim.clone()
    }
}

/// The five single-block bumps used by the limit comparison.
pub fn comparison_suite(layout: &PhaseLayout) -> Vec<TestField> {
    [
        (0i64, 0i64, 0.0),
        (1, -1, 0.3),
        (0, 2, -0.2),
        (-1, 1, 0.0),
        (2, -2, 0.5),
    ]
    .iter()
    .map(|&(xi0, k0, c)| {
        TestField::from_fn(layout, 2, |xi, k2, p| {
            if xi[0] == xi0 && k2[0] == k0 {
                Complex64::new(bump(&[(p[0] - c) / 0.8]), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    })
    .collect()
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let snaps = run_simulation(&cfg.sim)?;
    let layout = cfg.sim.layout();
    let np = layout.p.len();
    let w = layout.p_weight();
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for snap in &snaps {
        let mut total = 0.0;
        for b in 0..layout.n_blocks() {
            let sq: f64 = snap.values[b * np..(b + 1) * np]
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                * w;
            total += sq;
            let (xi, k2) = layout.block_labels(b);
            rows.push(vec![
                num(snap.t),
                format!("{xi:?}"),
                format!("{k2:?}"),
                num(sq.sqrt()),
            ]);
        }
        totals.push(total.sqrt());
    }
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    Ok(RunOutput {
        command: "simulate",
        anchor: "co-moving field block norms".into(),
        report: json!({ "eps": cfg.sim.eps, "eta": cfg.sim.eta, "t": times, "l2_norm": totals }),
        table: Table {
            header: vec!["t", "xi", "kappa2", "block_l2"],
            rows,
        },
        svg: None,
        summary: format!(
            "simulate: {} snapshots, l2 norm {:.6e} -> {:.6e}",
            snaps.len(),
            totals[0],
            totals[totals.len() - 1]
        ),
    })
}

pub fn validate_bounds(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let bound = OscBound::from_tag(&cfg.bounds.lemma).ok_or_else(|| {
        CliError::Config(format!(
            "unknown bound '{}'; expected phi-st, first-order, resonant-pair or nonresonant-pair",
            cfg.bounds.lemma
        ))
    })?;
    let eta = &cfg.bounds.eta;
    let dcfg = DivisorConfig {
        dim: eta.len(),
        ..cfg.divisors.clone()
    };
    dcfg.validate()?;
    let report = validate_osc_bounds(&dcfg, eta, bound, cfg.bounds.samples, cfg.seed)?;
    let mut rows = vec![
        vec!["max_ratio".to_string(), num(report.max_ratio)],
        vec!["constant".to_string(), num(report.constant)],
        vec!["failures".to_string(), report.failures.len().to_string()],
    ];
    for (k, v) in &report.fitted_exponents {
        rows.push(vec![format!("exponent {k}"), num(*v)]);
    }
    let summary = format!(
        "validate-bounds {}: {} samples, max ratio {:.4e}, constant {:.4e}, {} failures",
        bound.tag(),
        report.samples,
        report.max_ratio,
        report.constant,
        report.failures.len()
    );
    Ok(RunOutput {
        command: "validate-bounds",
        anchor: bound.tag().into(),
        report: serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?,
        table: Table {
            header: vec!["quantity", "value"],
            rows,
        },
        svg: None,
        summary,
    })
}

pub fn divisors(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let d = &cfg.divisors;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut failures = 0usize;
    let mut values = Vec::new();
    for i in 0..cfg.bounds.samples {
        let eta: Vec<f64> = (0..d.dim).map(|_| rng.gen_range(-0.25..0.25)).collect();
        let c = c_delta(&eta, d)?;
        let m = in_a_eta(&eta, d)?;
        failures += (!m.member) as usize;
        values.push(c.c_delta_value);
        rows.push(vec![
            i.to_string(),
            format!("{eta:?}"),
            num(c.c_delta_value),
            m.member.to_string(),
            num(m.worst_ratio),
        ]);
    }
    let n = cfg.bounds.samples.max(1) as f64;
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let mean = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
    Ok(RunOutput {
        command: "divisors",
        anchor: "small-divisor constant and admissible offsets".into(),
        report: json!({ "samples": cfg.bounds.samples, "failure_fraction": failures as f64 / n, "mean_c_delta": mean, "config": d }),
        table: Table {
            header: vec!["sample", "eta", "c_delta", "member", "worst_ratio"],
            rows,
        },
        svg: None,
        summary: format!(
            "divisors: {} samples, A_eta failure fraction {:.4}, mean c_delta {:.4e}",
            cfg.bounds.samples,
            failures as f64 / n,
            mean
        ),
    })
}

pub fn smoothing(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let sc = &cfg.scale;
    if sc.nu_list.len() < 2 || sc.nu_list.iter().any(|nu| !(*nu > 0.0 && *nu < 1.0)) {
        return Err(CliError::Config(
            "scale.nu_list needs at least two values in (0, 1)".into(),
        ));
    }
    let layout = PhaseLayout::new(
        1,
        0,
        sc.kappa2_radius,
        PGrid::centered(1, sc.p_points, sc.p_half_width),
    );
    let h = layout.p.h;
    let r = sc.kappa2_radius as f64;
    let mut k2s: Vec<i64> = [0.0, 0.01, 0.03, 0.06, 0.12, 0.2, 0.3, 0.45, 0.65, 1.0]
        .iter()
        .map(|f| (f * r).round() as i64)
        .collect();
    k2s.dedup();
    let mut shapes = Vec::new();
    for &k2 in &k2s {
        for w in [6.0 * h, 12.0 * h, 24.0 * h, 0.4 * sc.p_half_width] {
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
    let mut up = Vec::new();
    let mut down = Vec::new();
    for &nu in &sc.nu_list {
        up.push(operator_norm_probe(
            |p| smoothing_apply(p, SmoothingSpec { nu }),
            2,
            &d1,
        )?);
        down.push(operator_norm_probe(
            |p| Ok(smoothing_apply(p, SmoothingSpec { nu })?.axpy(Complex64::new(-1.0, 0.0), p)),
            1,
            &d2,
        )?);
    }
    let su = loglog_slope(&sc.nu_list, &up);
    let sd = loglog_slope(&sc.nu_list, &down);
    let rows = sc
        .nu_list
        .iter()
        .zip(&up)
        .zip(&down)
        .map(|((n, u), d)| vec![num(*n), num(*u), num(*d)])
        .collect();
    Ok(RunOutput {
        command: "smoothing",
        anchor: "smoothing operator norms".into(),
        report: json!({ "nu": sc.nu_list, "e1_to_e2": up, "j_minus_id_e2_to_e1": down, "slope_up": su, "slope_down": sd, "probes": shapes.len() }),
        table: Table {
            header: vec!["nu", "e1_to_e2", "j_minus_id_e2_to_e1"],
            rows,
        },
        svg: None,
        summary: format!("smoothing: E1->E2 slope {su:.3}, (J - Id) E2->E1 slope {sd:.3}"),
    })
}

pub fn remainder(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let rc = &cfg.remainder;
    if rc.tau_list.len() < 2 {
        return Err(CliError::Config(
            "remainder.tau_list needs at least two values".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut table = Vec::new();
    for &eps in &cfg.eps_list {
        let sc = sim_at(cfg, eps);
        let layout = sc.layout();
        let h = SimulatedHistory {
            sim: FiberSimulator::from_config(&sc)?,
            layout: layout.clone(),
        };
        let shapes: Vec<ProbeShape> = [
            (0i64, 0i64, 0.6),
            (0, 1, 0.4),
            (1, 1, 0.5),
            (0, -2, 0.3),
            (-1, 1, 0.8),
        ]
        .iter()
        .filter(|&&(xi, k2, _)| layout.block_of(&[xi], &[k2]).is_some())
        .map(|&(xi, k2, w)| ProbeShape {
            xi: vec![xi],
            kappa2: vec![k2],
            center: vec![0.0],
            width: w,
            edge: None,
        })
        .collect();
        let probes = ProbeDictionary::from_shapes(&layout, 2, &shapes);
        let mut vals = Vec::new();
        for &tau in &rc.tau_list {
            let mut best = 0.0f64;
            for p in &probes.probes {
                best = best.max(remainder_balance(&h, p, rc.s, rc.s + tau, &sc.potential)?.norm());
            }
            rows.push(vec![num(eps), num(tau), num(best)]);
            vals.push(best);
        }
        slopes.push(loglog_slope(&rc.tau_list, &vals));
        table.push(vals);
    }
    Ok(RunOutput {
        command: "remainder",
        anchor: "rough-path remainder".into(),
        report: json!({ "eps": cfg.eps_list, "tau": rc.tau_list, "s": rc.s, "max_remainder": table, "tau_slopes": slopes, "reference_exponent": 3.0 * rc.gamma }),
        table: Table {
            header: vec!["eps", "tau", "max_remainder"],
            rows,
        },
        svg: None,
        summary: format!(
            "remainder: tau slopes {slopes:?} against 3 gamma = {:.2}",
            3.0 * rc.gamma
        ),
    })
}

pub fn boltzmann_compare(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    if cfg.sim.eta.len() != 1 {
        return Err(CliError::Config(
            "boltzmann-compare uses the one-dimensional test-field suite".into(),
        ));
    }
    let cfgs: Vec<SimConfig> = cfg.eps_list.iter().map(|&e| sim_at(cfg, e)).collect();
    let psis = comparison_suite(&cfgs[0].layout());
    let cmp = compare_ladder(&cfgs, &psis, cfg.boltzmann.collision_dt)?;
    let rows = cmp
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.eps),
                r.psi_id.to_string(),
                num(r.t),
                num(r.pairing_gap),
            ]
        })
        .collect();
    let worst: Vec<f64> = cmp
        .sup_gaps
        .iter()
        .map(|g| g.iter().copied().fold(0.0, f64::max))
        .collect();
    Ok(RunOutput {
        command: "boltzmann-compare",
        anchor: "linear Boltzmann limit".into(),
        summary: format!(
            "boltzmann-compare: worst sup gaps {worst:?}, decreasing for every test field {}",
            cmp.all_monotone()
        ),
        report: serde_json::to_value(&cmp).map_err(|e| CliError::Io(e.to_string()))?,
        table: Table {
            header: vec!["eps", "psi_id", "t", "pairing_gap"],
            rows,
        },
        svg: None,
    })
}

pub fn resonance_map(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let rc = &cfg.resonance;
    let lines = resonance_lines(rc.n_radius, rc.box_half)?;
    let rows = lines
        .iter()
        .map(|l| {
            vec![
                l.n[0].to_string(),
                l.n[1].to_string(),
                num(l.start[0]),
                num(l.start[1]),
                num(l.end[0]),
                num(l.end[1]),
            ]
        })
        .collect();
    Ok(RunOutput {
        command: "resonance-map",
        anchor: "resonance lines n.k = |n|^2".into(),
        summary: format!(
            "resonance-map: {} lines in [-{h}, {h}]^2",
            lines.len(),
            h = rc.box_half
        ),
        report: json!({ "n_radius": rc.n_radius, "box_half": rc.box_half, "lines": lines }),
        table: Table {
            header: vec!["n1", "n2", "x1", "y1", "x2", "y2"],
            rows,
        },
        svg: Some(lines_svg(&lines, rc.box_half)),
    })
}

pub fn observable(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let dim = cfg.sim.eta.len();
    let dcfg = DivisorConfig {
        dim,
        ..cfg.divisors.clone()
    };
    let quad = EtaQuadrature::half_grid(dim, cfg.sim.m, cfg.observable.eta_stride, &dcfg)?;
    let f = |p: &[f64], k: &[f64]| {
        let x: Vec<f64> = p.iter().map(|v| v / 0.9).collect();
        let y: Vec<f64> = k.iter().map(|v| v / 0.9).collect();
        bump(&x) * bump(&y)
    };
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &eps in &cfg.eps_list {
        let prov = SimulatedProvider::new(sim_at(cfg, eps));
        let v = observable_xi0(&prov, &f, cfg.observable.t, &quad)?;
        rows.push(vec![num(eps), num(v.re), num(v.im)]);
        values.push([v.re, v.im]);
    }
    Ok(RunOutput {
        command: "observable",
        anchor: "zero-mode observable".into(),
        summary: format!(
            "observable: {} eps values, {} eta nodes ({} moved to admissible points)",
            values.len(),
            quad.nodes.len(),
            quad.perturbed
        ),
        report: json!({ "eps": cfg.eps_list, "t": cfg.observable.t, "value": values, "eta_nodes": quad.nodes.len(), "perturbed": quad.perturbed }),
        table: Table {
            header: vec!["eps", "re", "im"],
            rows,
        },
        svg: None,
    })
}

pub fn single_mode(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let rc = &cfg.resonance;
    let setup = SingleModeSetup {
        tau: rc.tau,
        panels: [rc.eta_panels, 1],
        seed: cfg.seed,
        ..SingleModeSetup::default()
    };
    let rep = single_mode_scenario(rc.rho, &cfg.eps_list, &setup)?;
    let rows = rep
        .eps
        .iter()
        .zip(&rep.term)
        .zip(&rep.control)
        .map(|((e, t), c)| vec![num(*e), num(*t), num(*c)])
        .collect();
    Ok(RunOutput {
        command: "single-mode",
        anchor: "single-mode resonant term".into(),
        summary: format!(
            "single-mode: term ratio {:.4}, control ratio {:.4}",
            rep.ratio, rep.control_ratio
        ),
        svg: Some(lines_svg(&rep.lines, 2.0)),
        report: serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?,
        table: Table {
            header: vec!["eps", "term", "control"],
            rows,
        },
    })
}
