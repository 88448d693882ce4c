//! Time evolution: Lindblad density matrices, non-Hermitian pure states and a
//! quantum-jump Monte Carlo oracle, all stepped with classical fixed-step RK4.
//!
//! The output grid and the integration step are separate: each grid interval
//! is split into `substeps` equal RK4 steps, chosen from the generator norm
//! unless the caller pins them.

mod lindblad;
mod nonhermitian;
mod observables;
mod rk4;
pub(crate) mod sparse;
mod trajectory;

pub use lindblad::{evolve_lindblad, run_lindblad, LindbladRun};
pub use nonhermitian::{evolve_nonhermitian, run_nonhermitian, NonHermitianRun};
pub use observables::{
    loss_fraction, manifold_loss, overlap, population, total_up_fraction, Observable, StateView,
};
pub use trajectory::{trajectory_oracle, trajectory_seed_stream};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// μs
    pub t0: f64,
    /// μs
    pub t1: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        let g = Self { t0, t1, n_steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t1.is_finite()) || self.t1 <= self.t0 {
            return Err(Error::TimeGrid(format!("need t1 > t0, got [{}, {}]", self.t0, self.t1)));
        }
        if self.n_steps == 0 {
            return Err(Error::TimeGrid("n_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    /// The `n_steps + 1` output times.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps).map(|i| self.t0 + i as f64 * dt).collect()
    }
}

/// Integration controls shared by every engine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepOptions {
    /// Upper bound on the RK4 step (μs); default from the generator norm.
    pub max_step: Option<f64>,
    /// RK4 steps per output interval; overrides `max_step`.
    pub substeps: Option<usize>,
    /// Append `diag_trace`, `diag_hermiticity`, `diag_min_eigenvalue` tracks.
    pub diagnostics: bool,
    /// Keep the state at every output time.
    pub store_states: bool,
}

/// Default RK4 step bound: 0.2/ν with ν = ‖generator‖_∞ (rad/μs), and at
/// least 1000 steps across the span.
pub fn default_max_step(generator_norm: f64, span: f64) -> f64 {
    let by_rate = if generator_norm > 0.0 { 0.2 / generator_norm } else { f64::INFINITY };
    by_rate.min(span / 1000.0)
}

/// RK4 steps per output interval for a generator of the given ∞-norm.
pub fn resolve_substeps(grid: &TimeGrid, opts: &StepOptions, generator_norm: f64) -> usize {
    if let Some(m) = opts.substeps {
        return m.max(1);
    }
    let span = grid.t1 - grid.t0;
    let h = opts.max_step.unwrap_or_else(|| default_max_step(generator_norm, span));
    ((grid.dt() / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub name: String,
    pub values: Vec<f64>,
}

/// Output times plus named real-valued tracks of equal length.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub tracks: Vec<Track>,
    /// RK4 steps per output interval actually used.
    pub substeps: usize,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>) -> Self {
        Self { times, tracks: Vec::new(), substeps: 0 }
    }

    pub fn push_track(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.times.len(), "track length must match the time axis");
        self.tracks.push(Track { name: name.into(), values });
    }

    pub fn track(&self, name: &str) -> Option<&[f64]> {
        self.tracks.iter().find(|t| t.name == name).map(|t| t.values.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tracks.iter().map(|t| t.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest absolute difference between same-named tracks.
    pub fn max_abs_diff(&self, other: &TimeSeries) -> f64 {
        let mut worst = 0.0f64;
        for t in &self.tracks {
            if let Some(o) = other.track(&t.name) {
                for (a, b) in t.values.iter().zip(o) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

/// π time 1/(4w) in μs for a coupling w in MHz.
pub fn pi_time(w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::InvalidParameter { name: "w", reason: format!("must be > 0, got {w}") });
    }
    Ok(1.0 / (4.0 * w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_times() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn pi_time_values() {
        assert!((pi_time(0.15).unwrap() - 1.0 / 0.6).abs() < 1e-15);
        assert!((pi_time(0.25).unwrap() - 1.0).abs() < 1e-15);
        assert!((pi_time(0.3).unwrap() - pi_time(0.15).unwrap() / 2.0).abs() < 1e-15);
        assert!(pi_time(0.0).is_err());
    }

    #[test]
    fn substep_resolution() {
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let o = StepOptions { max_step: Some(0.01), ..Default::default() };
        assert_eq!(resolve_substeps(&g, &o, 0.0), 10);
        let o = StepOptions { substeps: Some(7), ..Default::default() };
        assert_eq!(resolve_substeps(&g, &o, 1e9), 7);
        // default: at least 1000 steps over the span
        assert_eq!(resolve_substeps(&g, &StepOptions::default(), 0.0), 100);
    }
}
