//! Property tests over random parameters.

use proptest::prelude::*;

use rydberg_core::dynamics::{evolve_lindblad, Observable, StepOptions, TimeGrid};
use rydberg_core::measurement::SpamParams;
use rydberg_core::models::{build_pair_exchange_lindblad, LossOptions, PairParams};
use rydberg_core::spectra::{Family, FamilyKind};
use rydberg_core::states::{antisymmetric_pair_state, symmetric_pair_state};
use rydberg_core::units::angular;
use rydberg_core::{Level, C64};

fn pair(w: f64, gamma: f64, v: f64) -> PairParams {
    PairParams { w, gamma, v, ..Default::default() }
}

fn selective(w: f64, w0: f64, gamma: f64, v_up: f64, v_down: f64, delta: f64) -> PairParams {
    PairParams { w, w0, gamma, v_up, v_down, delta, ..Default::default() }
}

fn kinds() -> impl Strategy<Value = FamilyKind> {
    prop_oneof![
        Just(FamilyKind::SingleAtom),
        Just(FamilyKind::PairExchange),
        Just(FamilyKind::SelectiveReduced),
        Just(FamilyKind::SelectiveFull),
    ]
}

fn params() -> impl Strategy<Value = PairParams> {
    (0.0..2.0, 0.0..2.0, 0.01..2.0, -20.0..20.0, -20.0..20.0, -20.0..20.0)
        .prop_map(|(w, w0, g, vu, vd, d)| PairParams { v: vu, ..selective(w, w0, g, vu, vd, d) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The eigenvalues add up to the trace.
    #[test]
    fn eigenvalue_sum_rule(kind in kinds(), p in params()) {
        let fam = Family::new(kind, p);
        let h = fam.build().unwrap();
        let s = fam.spectrum().unwrap();
        let scale = h.frobenius_norm().max(1.0);
        prop_assert!((s.sum() - h.trace()).norm() < 1e-9 * scale);
    }

    /// Scaling every rate scales the spectrum: only ratios matter.
    #[test]
    fn rescaling_rates_rescales_spectrum(kind in kinds(), p in params(), s in 0.1f64..10.0) {
        let scaled = PairParams {
            w: s * p.w, w0: s * p.w0, gamma: s * p.gamma, v: s * p.v,
            v_up: s * p.v_up, v_down: s * p.v_down, delta: s * p.delta,
        };
        let a = Family::new(kind, p).spectrum().unwrap();
        let b = Family::new(kind, scaled).spectrum().unwrap();
        // compared as sets: near-ties in Im λ may swap order
        for x in &a.eigenvalues {
            let d = b.eigenvalues.iter().map(|y| (x * s - y).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-8 * (1.0 + s * x.norm()), "{x} has no partner in {:?}", b.eigenvalues);
        }
    }

    /// Loss only drains: every Im λ sits in [−γ, 0] (angular units, one γ/2 per lossy atom).
    #[test]
    fn decay_rates_are_bounded(kind in kinds(), p in params()) {
        let s = Family::new(kind, p).spectrum().unwrap();
        let g = angular(p.gamma);
        for z in &s.eigenvalues {
            prop_assert!(z.im <= 1e-9 * (1.0 + g) && z.im >= -g - 1e-9, "{z}");
        }
    }

    #[test]
    fn spam_round_trip(a in 0.0f64..1.0, b in 0.0f64..1.0, p in 0.0f64..=1.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let s = SpamParams::new(a.max(b), a.min(b)).unwrap();
        let back = s.renormalize(s.forward_bare(p)).unwrap().value;
        prop_assert!((back - p).abs() < 1e-12);
    }

    /// Pair Lindblad dynamics keep ρ a density matrix, and the singlet
    /// never leaks into the symmetric sector.
    #[test]
    fn pair_dynamics_stay_physical(w in 0.0f64..0.5, gamma in 0.0f64..0.5, v in -5.0f64..5.0) {
        let m = build_pair_exchange_lindblad(&pair(w, gamma, v), &LossOptions::default()).unwrap();
        let plus = symmetric_pair_state(Level::Zero, Level::One, &m.basis).unwrap();
        let singlet = antisymmetric_pair_state(Level::Zero, Level::One, &m.basis).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let opts = StepOptions { diagnostics: true, ..Default::default() };
        let obs = [Observable::overlap("plus", plus), Observable::Norm];
        let s = evolve_lindblad(&m, &singlet.to_density(), &grid, &obs, &opts).unwrap();
        for (i, _) in s.times.iter().enumerate() {
            prop_assert!(s.track("overlap_plus").unwrap()[i] <= 1e-10);
            prop_assert!((s.track("diag_trace").unwrap()[i] - 1.0).abs() < 1e-10);
            prop_assert!(s.track("diag_hermiticity").unwrap()[i] <= 1e-10);
            prop_assert!(s.track("diag_min_eigenvalue").unwrap()[i] >= -1e-8);
        }
    }
}

#[test]
fn trace_of_complex_scalars_is_consistent() {
    // guards the sum rule above against a silently real-only trace
    let fam = Family::new(FamilyKind::PairExchange, pair(0.3, 0.2, 1.0));
    let t = fam.build().unwrap().trace();
    assert!((t - C64::new(angular(1.0), -angular(0.2) * 1.5)).norm() < 1e-12, "{t}");
}
