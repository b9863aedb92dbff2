use aclab_bench::{chain, dense_mdp, tilted_kernel, tilted_policy};
use aclab_core::ode::{integrate, OdeOptions};
use aclab_core::policy::ThetaTable;
use aclab_core::sim::{run, AcConfig};
use aclab_core::solvers::{mixing_profile, stationary_distribution, value_functions};
use aclab_core::table::Table;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    for n in [4usize, 16, 64] {
        let spec = dense_mdp(n);
        let kernel = tilted_kernel(&spec);
        group.bench_function(format!("stationary_{n}states"), |b| {
            b.iter(|| stationary_distribution(black_box(&kernel)).unwrap())
        });
        let f = tilted_policy(&spec);
        group.bench_function(format!("value_functions_{n}states"), |b| {
            b.iter(|| value_functions(black_box(&spec), black_box(&f)).unwrap())
        });
    }
    let spec = dense_mdp(8);
    let kernel = tilted_kernel(&spec);
    group.bench_function("mixing_profile_8states_n30", |b| {
        b.iter(|| mixing_profile(black_box(&kernel), 30).unwrap())
    });
    group.finish();
}

fn bench_sim(c: &mut Criterion) {
    let spec = chain();
    c.bench_function("sim_run_2000_steps", |b| {
        b.iter(|| {
            let config = AcConfig::from_zero(&spec, 1000, 2.0, 1.0, 5);
            run(black_box(&spec), black_box(&config)).unwrap()
        })
    });
}

fn bench_ode(c: &mut Criterion) {
    let spec = chain();
    c.bench_function("ode_integrate_t1_h0.01", |b| {
        b.iter(|| {
            let opts = OdeOptions::new(1.0, 0.01, 1.0, vec![1.0]);
            integrate(
                black_box(&spec),
                &ThetaTable::zeros(2, 2),
                &Table::zeros(2, 2),
                &opts,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_solvers, bench_sim, bench_ode);
criterion_main!(benches);
