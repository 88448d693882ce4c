//! Quantum-jump Monte Carlo: an independent check on the Lindblad engine.
//!
//! Each trajectory evolves under H_eff until ‖ψ‖² falls below a uniform
//! threshold, then applies one collapse operator chosen with probability
//! ∝ ‖L_k ψ‖² and draws a fresh threshold. Jumps resolve to the RK4 substep.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::observables::{compile_all, Compiled, Observable};
use super::rk4::Rk4;
use super::sparse::Csr;
use super::{resolve_substeps, StepOptions, TimeGrid, TimeSeries};
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::models::LindbladModel;
use crate::operator::{re, C64, I};
use crate::states::PureState;

/// The random stream of trajectory `index` under `seed`; independent of the
/// thread that runs it.
pub fn trajectory_seed_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Shared<'a> {
    a: Csr,
    jumps: Vec<Csr>,
    compiled: &'a [(String, Compiled)],
    n_times: usize,
    substeps: usize,
    h: f64,
}

impl Shared<'_> {
    /// Observables at each output time, flattened time-major.
    fn run(&self, psi0: &PureState, mut rng: ChaCha8Rng) -> Result<Vec<f64>> {
        let mut psi = psi0.normalized();
        let mut rk = Rk4::new(psi.amplitudes());
        let mut scratch = DVector::zeros(psi.dim());
        let mut threshold: f64 = rng.random();
        let mut out = Vec::with_capacity(self.n_times * self.compiled.len());
        let mut f = |y: &DVector<C64>, o: &mut DVector<C64>| self.a.mul_vec(y, o);
        for n in 0..self.n_times {
            if n > 0 {
                for _ in 0..self.substeps {
                    rk.step(psi.amplitudes_mut(), self.h, &mut f);
                    let nrm = psi.norm_sqr();
                    if !nrm.is_finite() {
                        return Err(Error::Unstable { time: psi.time, what: "trajectory diverged".into() });
                    }
                    if nrm < threshold {
                        self.jump(&mut psi, &mut scratch, &mut rng);
                        threshold = rng.random();
                    }
                }
            }
            let unit = psi.normalized();
            out.extend(self.compiled.iter().map(|(_, c)| c.eval(&unit)));
        }
        Ok(out)
    }

    fn jump(&self, psi: &mut PureState, scratch: &mut DVector<C64>, rng: &mut ChaCha8Rng) {
        let weights: Vec<f64> = self
            .jumps
            .iter()
            .map(|l| {
                l.mul_vec(psi.amplitudes(), scratch);
                scratch.norm_squared()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            // nothing can jump; keep the no-jump branch
            *psi = psi.normalized();
            return;
        }
        let mut r = rng.random::<f64>() * total;
        let mut k = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if r < *w {
                k = i;
                break;
            }
            r -= w;
        }
        self.jumps[k].mul_vec(psi.amplitudes(), scratch);
        let s = re(1.0 / weights[k].sqrt());
        psi.amplitudes_mut().iter_mut().zip(scratch.iter()).for_each(|(a, b)| *a = b * s);
    }
}

/// Mean of each observable over `n_traj` trajectories, plus a
/// `<name>_stderr` track holding the standard error of that mean.
pub fn trajectory_oracle(
    model: &LindbladModel,
    psi0: &PureState,
    grid: &TimeGrid,
    n_traj: usize,
    seed: u64,
    observables: &[Observable],
    opts: &StepOptions,
) -> Result<TimeSeries> {
    grid.validate()?;
    if n_traj < 2 {
        return Err(Error::InvalidParameter { name: "n_traj", reason: "need at least 2 trajectories".into() });
    }
    let basis = Basis::Tensor(model.basis.clone());
    if psi0.basis() != &basis {
        return Err(Error::BasisMismatch("initial state and model use different bases".into()));
    }
    let compiled = compile_all(observables, &basis)?;
    let heff = model.effective_hamiltonian();
    let substeps = resolve_substeps(grid, opts, heff.inf_norm());
    let times = grid.times();
    let shared = Shared {
        a: Csr::from_dense(heff.matrix(), -I),
        jumps: model.collapse_ops.iter().map(|l| Csr::from_dense(l.matrix(), re(1.0))).collect(),
        compiled: &compiled,
        n_times: times.len(),
        substeps,
        h: grid.dt() / substeps as f64,
    };
    let runs: Vec<Vec<f64>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| shared.run(psi0, trajectory_seed_stream(seed, i)))
        .collect::<Result<_>>()?;

    let m = compiled.len();
    let nt = n_traj as f64;
    let mut series = TimeSeries::new(times.clone());
    series.substeps = substeps;
    for (k, (name, _)) in compiled.iter().enumerate() {
        let mut mean = Vec::with_capacity(times.len());
        let mut stderr = Vec::with_capacity(times.len());
        for n in 0..times.len() {
            let xs = runs.iter().map(|r| r[n * m + k]);
            let mu = xs.clone().sum::<f64>() / nt;
            let var = xs.map(|x| (x - mu).powi(2)).sum::<f64>() / (nt - 1.0);
            mean.push(mu);
            stderr.push((var / nt).sqrt());
        }
        series.push_track(name.clone(), mean);
        series.push_track(format!("{name}_stderr"), stderr);
    }
    Ok(series)
}
