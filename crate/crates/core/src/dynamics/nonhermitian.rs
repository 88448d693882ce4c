//! dψ/dt = −i H_eff ψ without renormalization; ‖ψ‖² is the no-loss probability.

use log::{debug, warn};
use nalgebra::DVector;

use super::observables::{compile_all, Observable};
use super::rk4::Rk4;
use super::sparse::Csr;
use super::{resolve_substeps, StepOptions, TimeGrid, TimeSeries};
use crate::eig::hermitian_eigenvalues;
use crate::error::{Error, Result};
use crate::operator::{Operator, C64, I};
use crate::states::PureState;

/// Norm growth between output times tolerated for a dissipative generator.
const GROWTH_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct NonHermitianRun {
    pub series: TimeSeries,
    pub final_state: PureState,
    pub snapshots: Vec<PureState>,
}

/// True when H_eff = H − iK with K ⪰ 0, i.e. the evolution cannot gain norm.
pub(crate) fn is_dissipative(h_eff: &Operator) -> bool {
    // antihermitian part is −iK
    let k = h_eff.antihermitian_part().scale(I);
    let ev = hermitian_eigenvalues(k.matrix());
    let scale = h_eff.frobenius_norm().max(1.0);
    ev.first().is_none_or(|&m| m >= -1e-12 * scale)
}

pub fn run_nonhermitian(
    h_eff: &Operator,
    psi0: &PureState,
    grid: &TimeGrid,
    observables: &[Observable],
    opts: &StepOptions,
) -> Result<NonHermitianRun> {
    grid.validate()?;
    if psi0.basis() != h_eff.basis() {
        return Err(Error::BasisMismatch("initial state and generator use different bases".into()));
    }
    let dissipative = is_dissipative(h_eff);
    if !dissipative {
        warn!("generator has gain: its anti-Hermitian part is not negative semidefinite");
    }
    let compiled = compile_all(observables, h_eff.basis())?;
    let substeps = resolve_substeps(grid, opts, h_eff.inf_norm());
    let h = grid.dt() / substeps as f64;
    debug!("nonhermitian: dim {}, {} substeps of {h:e} us", h_eff.dim(), substeps);

    let a = Csr::from_dense(h_eff.matrix(), -I);
    let mut f = |y: &DVector<C64>, out: &mut DVector<C64>| a.mul_vec(y, out);
    let times = grid.times();
    let mut psi = psi0.clone();
    psi.time = times[0];
    let mut rk = Rk4::new(psi.amplitudes());
    let mut prev = psi.norm_sqr();

    let mut values = vec![Vec::with_capacity(times.len()); compiled.len()];
    let mut norms = Vec::new();
    let mut snapshots = Vec::new();
    for (n, &t) in times.iter().enumerate() {
        if n > 0 {
            for _ in 0..substeps {
                rk.step(psi.amplitudes_mut(), h, &mut f);
            }
            psi.time = t;
        }
        let nrm = psi.norm_sqr();
        if !nrm.is_finite() {
            return Err(Error::Unstable { time: t, what: "non-finite state".into() });
        }
        if dissipative && nrm > prev * (1.0 + GROWTH_TOL) {
            return Err(Error::Unstable { time: t, what: format!("norm grew from {prev} to {nrm}") });
        }
        prev = nrm;
        for (vals, (_, c)) in values.iter_mut().zip(&compiled) {
            vals.push(c.eval(&psi));
        }
        if opts.diagnostics {
            norms.push(nrm);
        }
        if opts.store_states {
            snapshots.push(psi.clone());
        }
    }

    let mut series = TimeSeries::new(times);
    series.substeps = substeps;
    for ((name, _), vals) in compiled.into_iter().zip(values) {
        series.push_track(name, vals);
    }
    if opts.diagnostics {
        series.push_track("diag_norm", norms);
    }
    Ok(NonHermitianRun { series, final_state: psi, snapshots })
}

/// [`run_nonhermitian`] keeping only the recorded observables.
pub fn evolve_nonhermitian(
    h_eff: &Operator,
    psi0: &PureState,
    grid: &TimeGrid,
    observables: &[Observable],
    opts: &StepOptions,
) -> Result<TimeSeries> {
    run_nonhermitian(h_eff, psi0, grid, observables, opts).map(|r| r.series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Basis;
    use crate::models::build_single_atom_nh;
    use crate::units::angular;

    #[test]
    fn strong_loss_norm_decays_monotonically() {
        let h = build_single_atom_nh(0.05, 1.0).unwrap();
        let psi = PureState::basis_state(h.basis().clone(), 0).unwrap();
        let grid = TimeGrid::new(0.0, 5.0, 50).unwrap();
        let s = evolve_nonhermitian(&h, &psi, &grid, &[Observable::Norm], &StepOptions::default()).unwrap();
        let n = s.track("norm").unwrap();
        assert!(n.windows(2).all(|w| w[1] <= w[0]));
        assert!(n[50] < n[0]);
    }

    #[test]
    fn hermitian_limit_conserves_norm() {
        let h = build_single_atom_nh(0.3, 0.0).unwrap();
        let psi = PureState::basis_state(h.basis().clone(), 0).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let obs = [Observable::BasisPopulation { index: 1, label: "0".into() }, Observable::Norm];
        let s = evolve_nonhermitian(&h, &psi, &grid, &obs, &StepOptions::default()).unwrap();
        for (t, p) in s.times.iter().zip(s.track("P_0").unwrap()) {
            assert!((p - (angular(0.3) * t).sin().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn gain_is_flagged_but_allowed() {
        let g = Operator::from_rows(Basis::named(&["a"]), &[C64::new(0.0, 1.0)]).unwrap();
        assert!(!is_dissipative(&g));
        let psi = PureState::basis_state(g.basis().clone(), 0).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let s = evolve_nonhermitian(&g, &psi, &grid, &[Observable::Norm], &StepOptions::default()).unwrap();
        assert!((s.track("norm").unwrap()[4] - 2f64.exp()).abs() < 1e-9);
    }
}
