use criterion::{criterion_group, criterion_main, Criterion};
use rydberg_bench::{ring, selective_pair};
use rydberg_core::dynamics::{evolve_lindblad, evolve_nonhermitian, Observable, StepOptions, TimeGrid};
use rydberg_core::models::{build_distillation_nh, build_selective_pair_full, LossOptions};
use rydberg_core::{Level, PureState};

fn lindblad(c: &mut Criterion) {
    let m = build_selective_pair_full(&selective_pair(), &LossOptions::default()).unwrap();
    let upup = m.basis.index_of(&[Level::Up, Level::Up]).unwrap();
    let rho = PureState::basis_state(m.basis.clone(), upup).unwrap().to_density();
    let grid = TimeGrid::new(0.0, 0.1, 10).unwrap();
    let obs = [Observable::BasisPopulation { index: upup, label: "upup".into() }];
    let opts = StepOptions { substeps: Some(10), ..Default::default() };
    c.bench_function("lindblad/selective_pair_100_steps", |b| {
        b.iter(|| evolve_lindblad(&m, &rho, &grid, &obs, &opts).unwrap())
    });
}

fn nonhermitian(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonhermitian");
    for n in [3, 5] {
        let h = build_distillation_nh(&ring(n)).unwrap();
        let basis = h.basis().as_tensor().unwrap().clone();
        let mut cfg = vec![Level::Down; n];
        cfg[0] = Level::Up;
        let psi = PureState::from_config(&basis, &cfg).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let opts = StepOptions { substeps: Some(100), ..Default::default() };
        group.bench_function(format!("ring{n}_1000_steps"), |b| {
            b.iter(|| evolve_nonhermitian(&h, &psi, &grid, &[Observable::Norm], &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, lindblad, nonhermitian);
criterion_main!(benches);
