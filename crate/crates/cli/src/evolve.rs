//! `evolve`: time series for one scenario, optionally scanned over a
//! parameter, followed by the post-processing chain
//! simulate → jitter average → SPAM forward → shot sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use rydberg_core::dynamics::{
    evolve_lindblad, evolve_nonhermitian, resolve_substeps, trajectory_oracle, StepOptions, TimeGrid, TimeSeries,
};
use rydberg_core::measurement::sample_shots_with;

use crate::config::{Engine, Parameters, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv_bytes, fmt_num, OutputDir};
use crate::scenario::{self, prepare, Generator};

/// Random streams under the run seed; trajectories use streams 0..n_traj.
const JITTER_STREAM: u64 = 1 << 40;
const SHOT_STREAM: u64 = 1 << 41;

/// One evolve point: the scan coordinate (if any) and its series.
#[derive(Clone, Debug)]
pub struct EvolvePoint {
    pub coord: Option<f64>,
    pub series: TimeSeries,
}

#[derive(Clone, Debug)]
pub struct EvolveOutput {
    pub scan_axis: Option<String>,
    pub points: Vec<EvolvePoint>,
}

/// The parameter sets of a run: one, or one per scan value.
pub fn scan_points(cfg: &ScenarioConfig) -> CliResult<Vec<(Option<f64>, Parameters)>> {
    let Some(axis) = &cfg.scan else {
        return Ok(vec![(None, cfg.parameters.clone())]);
    };
    let kind = cfg.scenario.ok_or_else(|| CliError::config("scenario", "missing"))?;
    axis.values("scan")?
        .into_iter()
        .map(|x| {
            let mut p = cfg.parameters.clone();
            p.assign(&axis.name, x)?;
            scenario::check_parameters(kind, &p)
                .map_err(|e| CliError::config("scan", format!("point {x}: {e}")))?;
            Ok((Some(x), p))
        })
        .collect()
}

/// The exchange scale factors averaged over, one per jitter sample.
pub fn jitter_scales(cfg: &ScenarioConfig) -> CliResult<Vec<f64>> {
    let Some(j) = &cfg.jitter else { return Ok(vec![1.0]) };
    let normal = Normal::new(1.0, j.sigma).map_err(|e| CliError::config("jitter.sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(JITTER_STREAM);
    Ok((0..j.samples).map(|_| normal.sample(&mut rng)).collect())
}

fn grid_of(cfg: &ScenarioConfig) -> CliResult<TimeGrid> {
    let g = cfg.grid.as_ref().ok_or_else(|| CliError::config("grid", "missing"))?;
    TimeGrid::new(g.t0, g.t1, g.n_steps).map_err(|e| CliError::config("grid", e.to_string()))
}

fn run_once(cfg: &ScenarioConfig, p: &Parameters, scale: f64, substep_factor: usize) -> CliResult<TimeSeries> {
    let prep = prepare(cfg, p, scale)?;
    let grid = grid_of(cfg)?;
    let mut opts = StepOptions {
        max_step: cfg.step.max_step_us,
        substeps: cfg.step.substeps,
        diagnostics: cfg.step.diagnostics,
        store_states: false,
    };
    if substep_factor > 1 {
        let s = resolve_substeps(&grid, &opts, prep.generator.inf_norm());
        opts.substeps = Some(s * substep_factor);
    }
    let obs = &prep.observables;
    Ok(match (&prep.generator, cfg.engine) {
        (Generator::Lindblad(m), Engine::Trajectories) => {
            let n = cfg.n_traj.ok_or_else(|| CliError::config("n_traj", "missing"))?;
            trajectory_oracle(m, &prep.psi0, &grid, n, cfg.seed, obs, &opts)?
        }
        (Generator::Lindblad(m), _) => evolve_lindblad(m, &prep.psi0.to_density(), &grid, obs, &opts)?,
        (Generator::NonHermitian(h), _) => evolve_nonhermitian(h, &prep.psi0, &grid, obs, &opts)?,
    })
}

/// Mean over jitter samples; the positivity and Hermiticity diagnostics
/// keep their worst case instead.
fn combine(runs: Vec<TimeSeries>) -> TimeSeries {
    let first = &runs[0];
    let mut out = TimeSeries::new(first.times.clone());
    out.substeps = runs.iter().map(|r| r.substeps).max().unwrap_or(0);
    for (k, track) in first.tracks.iter().enumerate() {
        let column = |i: usize| runs.iter().map(move |r| r.tracks[k].values[i]);
        let values = (0..first.times.len())
            .map(|i| match track.name.as_str() {
                "diag_min_eigenvalue" => column(i).fold(f64::INFINITY, f64::min),
                "diag_hermiticity" => column(i).fold(0.0, f64::max),
                _ => column(i).sum::<f64>() / runs.len() as f64,
            })
            .collect();
        out.push_track(track.name.clone(), values);
    }
    out
}

/// The simulated tracks for one parameter set, averaged over jitter but
/// before any readout modelling. `substep_factor` multiplies the number of
/// RK4 steps per output interval.
pub fn simulate(cfg: &ScenarioConfig, p: &Parameters, substep_factor: usize) -> CliResult<TimeSeries> {
    let scales = jitter_scales(cfg)?;
    let mut runs = scales
        .par_iter()
        .map(|&s| run_once(cfg, p, s, substep_factor))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(if runs.len() == 1 { runs.pop().expect("one run") } else { combine(runs) })
}

fn spam_targets(cfg: &ScenarioConfig) -> Vec<String> {
    match &cfg.spam {
        Some(s) if !s.tracks.is_empty() => s.tracks.clone(),
        _ => cfg.outputs.clone(),
    }
}

fn as_probability(x: f64, track: &str) -> CliResult<f64> {
    const SLACK: f64 = 1e-9;
    if (-SLACK..=1.0 + SLACK).contains(&x) {
        Ok(x.clamp(0.0, 1.0))
    } else {
        Err(CliError::config("shots", format!("track `{track}` value {x} is not a probability")))
    }
}

/// Appends `<track>_bare` (SPAM forward), and `<track>_meas`,
/// `<track>_meas_stderr` and, with SPAM, `<track>_meas_renorm` (shots).
/// `stream` separates the shot noise of different scan points.
pub fn post_process(cfg: &ScenarioConfig, series: &mut TimeSeries, stream: u64) -> CliResult<()> {
    if cfg.spam.is_none() && cfg.shots.is_none() {
        return Ok(());
    }
    let spam = cfg.spam.as_ref().map(|s| s.params()).transpose()?;
    let targets = spam_targets(cfg);
    let mut sources = Vec::new();
    for t in &targets {
        let values = series
            .track(t)
            .ok_or_else(|| CliError::config("spam.tracks", format!("`{t}` is not an output")))?
            .to_vec();
        match spam {
            Some(s) => {
                let name = format!("{t}_bare");
                series.push_track(name.clone(), values.iter().map(|&v| s.forward_bare(v)).collect());
                sources.push((t.clone(), name));
            }
            None => sources.push((t.clone(), t.clone())),
        }
    }
    if let Some(shots) = &cfg.shots {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(SHOT_STREAM + stream);
        for (t, src) in sources {
            let values = series.track(&src).expect("just added").to_vec();
            let (mut meas, mut err, mut renorm) = (Vec::new(), Vec::new(), Vec::new());
            for v in values {
                let e = sample_shots_with(as_probability(v, &src)?, shots.n, &mut rng)?;
                meas.push(e.estimate);
                err.push(e.std_error);
                if let Some(s) = spam {
                    renorm.push(s.renormalize(e.estimate)?.value);
                }
            }
            series.push_track(format!("{t}_meas"), meas);
            series.push_track(format!("{t}_meas_stderr"), err);
            if spam.is_some() {
                series.push_track(format!("{t}_meas_renorm"), renorm);
            }
        }
    }
    Ok(())
}

/// Runs every scan point, post-processed.
pub fn evolve(cfg: &ScenarioConfig) -> CliResult<EvolveOutput> {
    cfg.scenario.ok_or_else(|| CliError::config("scenario", "missing"))?;
    let points = scan_points(cfg)?;
    scenario::validate(cfg, &points[0].1)?;
    let points = points
        .par_iter()
        .enumerate()
        .map(|(i, (coord, p))| {
            let mut series = simulate(cfg, p, 1)?;
            post_process(cfg, &mut series, i as u64)?;
            Ok(EvolvePoint { coord: *coord, series })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(EvolveOutput { scan_axis: cfg.scan.as_ref().map(|a| a.name.clone()), points })
}

impl EvolveOutput {
    /// `t_us` then every track; under a scan each track is suffixed with
    /// `@<axis>=<value>`.
    pub fn timeseries_csv(&self) -> CliResult<Vec<u8>> {
        let first = &self.points[0].series;
        let mut header = vec!["t_us".to_string()];
        for pt in &self.points {
            for name in pt.series.names() {
                header.push(match (&self.scan_axis, pt.coord) {
                    (Some(a), Some(x)) => format!("{name}@{a}={x}"),
                    _ => name.to_string(),
                });
            }
        }
        let rows = (0..first.times.len()).map(|i| {
            let mut row = vec![fmt_num(first.times[i])];
            for pt in &self.points {
                row.extend(pt.series.tracks.iter().map(|t| fmt_num(t.values[i])));
            }
            row
        });
        csv_bytes(&header, rows)
    }

    /// Final-time value of every track against the scan coordinate.
    pub fn scan_csv(&self) -> CliResult<Option<Vec<u8>>> {
        let Some(axis) = &self.scan_axis else { return Ok(None) };
        let mut header = vec![axis.clone()];
        header.extend(self.points[0].series.names().map(|n| format!("{n}_final")));
        let rows = self.points.iter().map(|pt| {
            let mut row = vec![fmt_num(pt.coord.unwrap_or(f64::NAN))];
            row.extend(pt.series.tracks.iter().map(|t| fmt_num(*t.values.last().unwrap_or(&f64::NAN))));
            row
        });
        csv_bytes(&header, rows).map(Some)
    }

    pub fn write(&self, out: &mut OutputDir) -> CliResult<()> {
        out.write("timeseries.csv", &self.timeseries_csv()?)?;
        if let Some(scan) = self.scan_csv()? {
            out.write("scan.csv", &scan)?;
        }
        Ok(())
    }
}
