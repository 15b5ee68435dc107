//! Rayon pool against a single-thread pool on the simulation and Boltzmann kernels.
//!
//! Build with `--no-default-features` to time the sequential fallback itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lorentz_kinetic::boltzmann::boltzmann_evolve;
use lorentz_kinetic::dynamics::{simulate, InitialData, SimConfig};
use lorentz_kinetic::field::PGrid;
use lorentz_kinetic::lattice::PeriodicPotential;
use std::hint::black_box;
use std::time::Duration;

fn config() -> SimConfig {
    SimConfig {
        eps: 0.05,
        t_final: 0.5,
        dt: 0.05,
        potential: PeriodicPotential::single_mode(1, 0, 0.5),
        n: 8,
        m: 64,
        eta: vec![15.0 / 128.0],
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
    }
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![
        (
            "single",
            rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .expect("pool"),
        ),
        (
            "pool",
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("pool"),
        ),
    ]
}

fn bench_modes(c: &mut Criterion) {
    let cfg = config();
    let t0 = simulate(&cfg).expect("simulation")[0].clone();
    let mut group = c.benchmark_group("modes");
    group
        .measurement_time(Duration::from_secs(5))
        .sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("simulate", name), &cfg, |b, cfg| {
            b.iter(|| pool.install(|| black_box(simulate(cfg).expect("simulation"))))
        });
        group.bench_with_input(BenchmarkId::new("boltzmann", name), &t0, |b, t0| {
            b.iter(|| {
                pool.install(|| {
                    black_box(
                        boltzmann_evolve(t0, &cfg.eta, &cfg.potential, 0.5, 0.005).expect("evolve"),
                    )
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_modes);
criterion_main!(benches);
