use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rydberg_bench::selective_pair;
use rydberg_core::spectra::{locate_ep, Family, FamilyKind, DEFAULT_COARSE_POINTS, DEFAULT_EP_TOL};

fn spectra(c: &mut Criterion) {
    for kind in [FamilyKind::PairExchange, FamilyKind::SelectiveReduced, FamilyKind::SelectiveFull] {
        let fam = Family::new(kind, selective_pair());
        c.bench_function(&format!("spectrum/{kind:?}"), |b| b.iter(|| black_box(&fam).spectrum().unwrap()));
    }
    let single = Family::new(FamilyKind::SingleAtom, selective_pair());
    c.bench_function("locate_ep/single_atom", |b| {
        b.iter(|| locate_ep(&single, "w_over_gamma", 0.0, 1.0, DEFAULT_COARSE_POINTS, DEFAULT_EP_TOL).unwrap())
    });
}

criterion_group!(benches, spectra);
criterion_main!(benches);
