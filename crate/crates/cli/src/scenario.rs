//! The scenario registry: which builder each scenario uses, the parameters it
//! requires, and how initial states and output names are resolved against
//! its basis.

use std::f64::consts::PI;

use rydberg_core::basis::{Level, TensorBasis};
use rydberg_core::dynamics::Observable;
use rydberg_core::models::{
    build_chain_nh, build_distillation_model, build_distillation_nh, build_pair_effective_nh,
    build_pair_exchange_lindblad, build_selective_pair_full, build_selective_single_atom, build_single_atom_lossy,
    ChainParams, LindbladModel, LossOptions, PairParams,
};
use rydberg_core::states::{bloch_state, symmetric_pair_state};
use rydberg_core::{Operator, PureState};

use crate::config::{Engine, Parameters, ScenarioConfig, ScenarioKind};
use crate::error::{CliError, CliResult};

/// What a scenario needs from `[parameters]`.
pub struct Requirements {
    pub required: Vec<&'static str>,
    pub optional: Vec<&'static str>,
}

pub fn requirements(kind: ScenarioKind, p: &Parameters) -> Requirements {
    let (required, optional) = match kind {
        ScenarioKind::SingleAtomLoss => (vec!["w", "gamma"], vec![]),
        ScenarioKind::PairExchange => (vec!["w", "gamma", "v"], vec![]),
        ScenarioKind::SelectivePair => {
            if p.atoms == Some(1) {
                (vec!["w", "w0", "gamma", "delta"], vec!["atoms"])
            } else {
                (vec!["w", "w0", "gamma", "delta", "v_up", "v_down"], vec!["atoms"])
            }
        }
        ScenarioKind::EffectivePair => (vec!["w", "gamma_eff"], vec![]),
        ScenarioKind::Chain => (vec!["n", "w", "gamma_eff"], vec!["boundary", "connectivity"]),
        ScenarioKind::Distillation => {
            (vec!["n", "w0", "gamma", "v", "delta"], vec!["w", "boundary", "connectivity"])
        }
    };
    Requirements { required, optional }
}

pub fn supports(kind: ScenarioKind, engine: Engine) -> bool {
    !matches!((kind, engine), (ScenarioKind::EffectivePair | ScenarioKind::Chain, Engine::Lindblad | Engine::Trajectories))
}

/// Field-level validation of everything an evolve run reads, with `p` the
/// parameters of one run (the config's own, or a scan point).
pub fn validate(cfg: &ScenarioConfig, p: &Parameters) -> CliResult<ScenarioKind> {
    let kind = cfg.scenario.ok_or_else(|| {
        let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.id()).collect();
        CliError::config("scenario", format!("missing; one of {}", names.join(", ")))
    })?;
    if !supports(kind, cfg.engine) {
        return Err(CliError::config("engine", format!("`{}` runs only on the nonhermitian engine", kind.id())));
    }
    check_parameters(kind, p)?;
    if let Some(atoms) = p.atoms {
        if !(1..=2).contains(&atoms) {
            return Err(CliError::config("parameters.atoms", "must be 1 or 2"));
        }
    }
    if cfg.initial_state.is_none() {
        return Err(CliError::config("initial_state", "missing"));
    }
    if cfg.outputs.is_empty() {
        return Err(CliError::config("outputs", "list at least one observable"));
    }
    if cfg.grid.is_none() {
        return Err(CliError::config("grid", "missing [grid] with t1 and n_steps"));
    }
    if cfg.engine == Engine::Trajectories {
        match cfg.n_traj {
            Some(n) if n >= 2 => {}
            _ => return Err(CliError::config("n_traj", "trajectories need n_traj ≥ 2")),
        }
        if cfg.jitter.is_some() {
            return Err(CliError::config("jitter", "not supported with the trajectories engine"));
        }
    }
    if let Some(j) = &cfg.jitter {
        if !(j.sigma >= 0.0) || j.samples == 0 {
            return Err(CliError::config("jitter", "need sigma ≥ 0 and samples ≥ 1"));
        }
    }
    if let Some(s) = &cfg.shots {
        if s.n == 0 {
            return Err(CliError::config("shots.n", "must be positive"));
        }
    }
    if let Some(s) = &cfg.spam {
        s.params()?;
    }
    if cfg.step.max_step_us.is_some_and(|h| !(h > 0.0)) {
        return Err(CliError::config("step.max_step_us", "must be positive"));
    }
    // resolves the initial state and every output once, so errors surface
    // before any integration starts
    prepare(cfg, p, 1.0)?;
    Ok(kind)
}

pub fn check_parameters(kind: ScenarioKind, p: &Parameters) -> CliResult<()> {
    let req = requirements(kind, p);
    let present = p.present();
    for name in &req.required {
        if !present.contains(name) {
            return Err(CliError::config(format!("parameters.{name}"), format!("required by `{}`", kind.id())));
        }
    }
    for name in present {
        if !req.required.contains(&name) && !req.optional.contains(&name) {
            return Err(CliError::config(format!("parameters.{name}"), format!("not used by `{}`", kind.id())));
        }
    }
    for name in Parameters::REAL_NAMES {
        if let Some(x) = p.get(name) {
            if !x.is_finite() {
                return Err(CliError::config(format!("parameters.{name}"), "must be finite"));
            }
        }
    }
    Ok(())
}

fn val(p: &Parameters, name: &str) -> f64 {
    p.get(name).unwrap_or(0.0)
}

pub fn pair_params(p: &Parameters) -> PairParams {
    PairParams {
        w: val(p, "w"),
        w0: val(p, "w0"),
        gamma: val(p, "gamma"),
        v: val(p, "v"),
        v_up: val(p, "v_up"),
        v_down: val(p, "v_down"),
        delta: val(p, "delta"),
    }
}

pub fn chain_params(p: &Parameters) -> ChainParams {
    ChainParams {
        n: p.n.unwrap_or(2),
        v: val(p, "v"),
        w: val(p, "w"),
        w0: val(p, "w0"),
        gamma: val(p, "gamma"),
        delta: val(p, "delta"),
        gamma_eff: val(p, "gamma_eff"),
        boundary: p.boundary.unwrap_or_default(),
        connectivity: p.connectivity.unwrap_or_default(),
    }
}

/// The generator an engine integrates.
#[derive(Clone, Debug)]
pub enum Generator {
    Lindblad(LindbladModel),
    NonHermitian(Operator),
}

impl Generator {
    pub fn basis(&self) -> CliResult<TensorBasis> {
        match self {
            Generator::Lindblad(m) => Ok(m.basis.clone()),
            Generator::NonHermitian(h) => Ok(h.basis().as_tensor()?.clone()),
        }
    }

    pub fn inf_norm(&self) -> f64 {
        match self {
            Generator::Lindblad(m) => m.effective_hamiltonian().inf_norm(),
            Generator::NonHermitian(h) => h.inf_norm(),
        }
    }
}

/// A scenario resolved into a generator, an initial state and observables.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub generator: Generator,
    pub psi0: PureState,
    pub observables: Vec<Observable>,
}

fn lindblad_model(kind: ScenarioKind, p: &Parameters, loss: &LossOptions) -> CliResult<LindbladModel> {
    Ok(match kind {
        ScenarioKind::SingleAtomLoss => {
            if *loss != LossOptions::default() {
                return Err(CliError::config("loss", "single_atom_loss has no loss options"));
            }
            build_single_atom_lossy(val(p, "w"), val(p, "gamma"))?
        }
        ScenarioKind::PairExchange => build_pair_exchange_lindblad(&pair_params(p), loss)?,
        ScenarioKind::SelectivePair => {
            if p.atoms == Some(1) {
                build_selective_single_atom(&pair_params(p), loss)?
            } else {
                build_selective_pair_full(&pair_params(p), loss)?
            }
        }
        ScenarioKind::Distillation => build_distillation_model(&chain_params(p), loss)?,
        ScenarioKind::EffectivePair | ScenarioKind::Chain => {
            return Err(CliError::config("engine", format!("`{}` has no master-equation form", kind.id())));
        }
    })
}

/// Builds the generator for `kind` with every exchange strength scaled by
/// `exchange_scale`.
pub fn generator(cfg: &ScenarioConfig, p: &Parameters, exchange_scale: f64) -> CliResult<Generator> {
    let kind = cfg.scenario.ok_or_else(|| CliError::config("scenario", "missing"))?;
    let mut p = p.clone();
    for name in ["v", "v_up", "v_down"] {
        if let Some(slot) = p.slot(name) {
            if let Some(x) = slot.as_mut() {
                *x *= exchange_scale;
            }
        }
    }
    let loss = LossOptions { collapse: cfg.loss.collapse, rydberg_decay: cfg.loss.rydberg_decay };
    Ok(match (cfg.engine, kind) {
        (Engine::Lindblad | Engine::Trajectories, _) => Generator::Lindblad(lindblad_model(kind, &p, &loss)?),
        (Engine::Nonhermitian, ScenarioKind::EffectivePair) => {
            Generator::NonHermitian(build_pair_effective_nh(val(&p, "w"), val(&p, "gamma_eff"))?)
        }
        (Engine::Nonhermitian, ScenarioKind::Chain) => Generator::NonHermitian(build_chain_nh(&chain_params(&p))?),
        (Engine::Nonhermitian, ScenarioKind::Distillation) if loss.rydberg_decay == 0.0 => {
            // built directly so long chains never allocate the |g⟩ sector
            Generator::NonHermitian(build_distillation_nh(&chain_params(&p))?)
        }
        (Engine::Nonhermitian, _) => {
            Generator::NonHermitian(lindblad_model(kind, &p, &loss)?.without_level(Level::G)?)
        }
    })
}

pub fn prepare(cfg: &ScenarioConfig, p: &Parameters, exchange_scale: f64) -> CliResult<Prepared> {
    let generator = generator(cfg, p, exchange_scale)?;
    let basis = generator.basis()?;
    let spec = cfg.initial_state.as_deref().ok_or_else(|| CliError::config("initial_state", "missing"))?;
    let psi0 = parse_state(spec, &basis).map_err(|e| CliError::config("initial_state", e))?;
    let observables = cfg
        .outputs
        .iter()
        .map(|name| parse_output(name, &basis).map_err(|e| CliError::config(format!("outputs.{name}"), e)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Prepared { generator, psi0, observables })
}

/// Reads a momentum such as `0`, `2pi/3`, `-2π/3`, `pi` or `1.5`.
pub fn parse_momentum(s: &str) -> Result<f64, String> {
    let t = s.trim().replace('π', "pi").replace('*', "");
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let (head, tail) = t.split_once("pi").ok_or_else(|| format!("cannot read momentum `{s}`"))?;
    let coef = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| format!("cannot read momentum `{s}`"))?,
    };
    let div = match tail {
        "" => 1.0,
        d => d
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(|| format!("cannot read momentum `{s}`"))?,
    };
    Ok(coef * PI / div)
}

fn all_up_except(basis: &TensorBasis, flipped: Option<usize>) -> Result<PureState, String> {
    let n = basis.n_sites();
    let mut config = vec![Level::Up; n];
    if let Some(j) = flipped {
        if j >= n {
            return Err(format!("site {j} out of range for {n} sites"));
        }
        config[j] = Level::Down;
    }
    PureState::from_config(basis, &config).map_err(|e| e.to_string())
}

/// Resolves a named state or configuration string on `basis`.
///
/// Besides configurations (`"00"`, `"upup"`, `"down-up-down"`) this knows
/// `polarized` (all up), `single-flip:<j>`, `plus:<r>-<s>` (symmetric pair
/// state), `W:k=<momentum>` and the aliases `W0`, `W+`, `W-`, `W<n>` for
/// k = 2πn/N.
pub fn parse_state(spec: &str, basis: &TensorBasis) -> Result<PureState, String> {
    let n = basis.n_sites();
    let bloch = |k: f64| bloch_state(basis, k, Level::Up, Level::Down).map_err(|e| e.to_string());
    let spec = spec.trim();
    if spec == "polarized" {
        return all_up_except(basis, None);
    }
    if let Some(j) = spec.strip_prefix("single-flip:") {
        let j = j.parse::<usize>().map_err(|_| format!("bad site in `{spec}`"))?;
        return all_up_except(basis, Some(j));
    }
    if let Some(pair) = spec.strip_prefix("plus:") {
        let levels = basis.parse_config(pair).map_err(|e| e.to_string())?;
        return symmetric_pair_state(levels[0], levels[1], basis).map_err(|e| e.to_string());
    }
    if let Some(k) = spec.strip_prefix("W:k=") {
        return bloch(parse_momentum(k)?);
    }
    if let Some(m) = spec.strip_prefix('W') {
        let idx = match m {
            "+" => Some(1.0),
            "-" | "−" => Some(-1.0),
            _ => m.parse::<i64>().ok().map(|i| i as f64),
        };
        if let Some(i) = idx {
            return bloch(2.0 * PI * i / n as f64);
        }
    }
    let config = basis.parse_config(spec).map_err(|e| e.to_string())?;
    PureState::from_config(basis, &config).map_err(|e| e.to_string())
}

/// Maps an output name to an observable on `basis`; the observable's track
/// name is the output name.
pub fn parse_output(name: &str, basis: &TensorBasis) -> Result<Observable, String> {
    let n = basis.n_sites();
    let site = |s: &str| -> Result<usize, String> {
        let j = s.parse::<usize>().map_err(|_| format!("bad site index `{s}`"))?;
        if j >= n {
            return Err(format!("site {j} out of range for {n} sites"));
        }
        Ok(j)
    };
    let has = |l: Level| basis.levels().contains(l);
    let obs = match name {
        "loss" => {
            if !has(Level::G) {
                return Err("`loss` needs the |g> level; use `manifold_loss` on this engine".into());
            }
            Observable::LossFraction
        }
        "manifold_loss" => Observable::ManifoldLoss,
        "norm" => Observable::Norm,
        "n_up_tot" | "n_up_tot_normalized" => {
            if !has(Level::Up) {
                return Err("basis has no up level".into());
            }
            Observable::TotalUpFraction { normalized: name.ends_with("normalized") }
        }
        _ => {
            if let Some(state) = name.strip_prefix("overlap_") {
                Observable::overlap(state, parse_state(state, basis)?)
            } else if let Some(j) = name.strip_prefix("share_up_site") {
                Observable::UpShare { site: site(j)? }
            } else if let Some(rest) = name.strip_prefix("P_") {
                match rest.split_once("_site") {
                    Some((level, j)) => {
                        let level: Level = level.parse().map_err(|_| format!("unknown level in `{name}`"))?;
                        if !has(level) {
                            return Err(format!("level {level} is not in this basis"));
                        }
                        Observable::Population { level, site: site(j)? }
                    }
                    None => {
                        let config = basis.parse_config(rest).map_err(|e| e.to_string())?;
                        let index = basis.index_of(&config).map_err(|e| e.to_string())?;
                        Observable::BasisPopulation { index, label: rest.to_string() }
                    }
                }
            } else {
                return Err(format!("unknown output `{name}`"));
            }
        }
    };
    debug_assert_eq!(obs.name(), name);
    Ok(obs)
}
