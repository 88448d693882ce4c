//! dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ_k L_k ρ L_k†

use log::debug;
use nalgebra::DMatrix;

use super::observables::{compile_all, Observable};
use super::rk4::Rk4;
use super::sparse::Csr;
use super::{resolve_substeps, StepOptions, TimeGrid, TimeSeries};
use crate::error::{Error, Result};
use crate::models::LindbladModel;
use crate::operator::{C64, I};
use crate::states::DensityMatrix;

/// Trace drift tolerated before a run is declared unstable.
const TRACE_TOL: f64 = 1e-6;
/// Most negative eigenvalue tolerated in ρ.
const POSITIVITY_TOL: f64 = -1e-8;
/// Largest dimension at which positivity is checked at every output time.
const FULL_CHECK_DIM: usize = 64;

#[derive(Clone, Debug)]
pub struct LindbladRun {
    pub series: TimeSeries,
    pub final_state: DensityMatrix,
    /// One state per output time when requested.
    pub snapshots: Vec<DensityMatrix>,
}

struct Generator {
    a: Csr,
    jumps: Vec<Csr>,
    x: DMatrix<C64>,
    xd: DMatrix<C64>,
}

impl Generator {
    fn new(model: &LindbladModel) -> Self {
        let d = model.basis.total_dim();
        let heff = model.effective_hamiltonian();
        Self {
            a: Csr::from_dense(heff.matrix(), -I),
            jumps: model
                .collapse_ops
                .iter()
                .map(|l| Csr::from_dense(l.matrix(), C64::new(1.0, 0.0)))
                .filter(|c| c.nnz() > 0)
                .collect(),
            x: DMatrix::zeros(d, d),
            xd: DMatrix::zeros(d, d),
        }
    }

    fn apply(&mut self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let d = rho.nrows();
        // −iH_eff ρ + h.c.
        self.a.mul_mat(rho, &mut self.x);
        for j in 0..d {
            for i in 0..d {
                out[(i, j)] = self.x[(i, j)] + self.x[(j, i)].conj();
            }
        }
        // L ρ L† = L (L ρ)†
        for l in &self.jumps {
            l.mul_mat(rho, &mut self.x);
            self.x.adjoint_to(&mut self.xd);
            l.mul_mat(&self.xd, &mut self.x);
            *out += &self.x;
        }
    }
}

pub fn run_lindblad(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observables: &[Observable],
    opts: &StepOptions,
) -> Result<LindbladRun> {
    grid.validate()?;
    let basis = crate::basis::Basis::Tensor(model.basis.clone());
    if rho0.basis() != &basis {
        return Err(Error::BasisMismatch("initial state and model use different bases".into()));
    }
    let compiled = compile_all(observables, &basis)?;
    let norm = model.effective_hamiltonian().inf_norm();
    let substeps = resolve_substeps(grid, opts, norm);
    let h = grid.dt() / substeps as f64;
    debug!("lindblad: dim {}, {} substeps of {h:e} us", basis.dim(), substeps);

    let times = grid.times();
    let mut gen = Generator::new(model);
    let mut rho = rho0.clone();
    rho.time = times[0];
    let tr0 = rho.trace();
    let full_check = basis.dim() <= FULL_CHECK_DIM;
    let mut rk = Rk4::new(rho.matrix());

    let mut values = vec![Vec::with_capacity(times.len()); compiled.len()];
    let mut diag = [Vec::new(), Vec::new(), Vec::new()];
    let mut snapshots = Vec::new();

    for (n, &t) in times.iter().enumerate() {
        if n > 0 {
            let mut f = |y: &DMatrix<C64>, out: &mut DMatrix<C64>| gen.apply(y, out);
            for _ in 0..substeps {
                rk.step(rho.matrix_mut(), h, &mut f);
            }
            rho.time = t;
        }
        let tr = rho.trace();
        if !tr.is_finite() || rho.matrix().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Unstable { time: t, what: "non-finite density matrix".into() });
        }
        if (tr - tr0).abs() > TRACE_TOL {
            return Err(Error::Unstable { time: t, what: format!("trace drifted to {tr}") });
        }
        let check_here = full_check || n + 1 == times.len();
        let min_ev = if check_here || opts.diagnostics { rho.min_eigenvalue() } else { f64::NAN };
        if check_here && min_ev < POSITIVITY_TOL {
            return Err(Error::Positivity { time: t, min_eigenvalue: min_ev });
        }
        for (vals, (_, c)) in values.iter_mut().zip(&compiled) {
            vals.push(c.eval(&rho));
        }
        if opts.diagnostics {
            diag[0].push(tr);
            diag[1].push(rho.hermiticity_error());
            diag[2].push(min_ev);
        }
        if opts.store_states {
            snapshots.push(rho.clone());
        }
    }

    let mut series = TimeSeries::new(times);
    series.substeps = substeps;
    for ((name, _), vals) in compiled.into_iter().zip(values) {
        series.push_track(name, vals);
    }
    if opts.diagnostics {
        let [a, b, c] = diag;
        series.push_track("diag_trace", a);
        series.push_track("diag_hermiticity", b);
        series.push_track("diag_min_eigenvalue", c);
    }
    Ok(LindbladRun { series, final_state: rho, snapshots })
}

/// [`run_lindblad`] keeping only the recorded observables.
pub fn evolve_lindblad(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observables: &[Observable],
    opts: &StepOptions,
) -> Result<TimeSeries> {
    run_lindblad(model, rho0, grid, observables, opts).map(|r| r.series)
}
