//! Run configuration: one TOML file per run, echoed verbatim into the manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rydberg_core::measurement::SpamParams;
use rydberg_core::models::{Boundary, CollapseMode, Connectivity};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SingleAtomLoss,
    PairExchange,
    SelectivePair,
    EffectivePair,
    Chain,
    Distillation,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::SingleAtomLoss,
        ScenarioKind::PairExchange,
        ScenarioKind::SelectivePair,
        ScenarioKind::EffectivePair,
        ScenarioKind::Chain,
        ScenarioKind::Distillation,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ScenarioKind::SingleAtomLoss => "single_atom_loss",
            ScenarioKind::PairExchange => "pair_exchange",
            ScenarioKind::SelectivePair => "selective_pair",
            ScenarioKind::EffectivePair => "effective_pair",
            ScenarioKind::Chain => "chain",
            ScenarioKind::Distillation => "distillation",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Lindblad,
    Nonhermitian,
    Trajectories,
}

/// Physical parameters in MHz. Each scenario declares which it needs; a
/// parameter the scenario does not use is rejected rather than ignored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub w: Option<f64>,
    pub w0: Option<f64>,
    pub gamma: Option<f64>,
    pub v: Option<f64>,
    pub v_up: Option<f64>,
    pub v_down: Option<f64>,
    pub delta: Option<f64>,
    pub gamma_eff: Option<f64>,
    pub n: Option<usize>,
    /// 1 or 2 atoms for `selective_pair`.
    pub atoms: Option<usize>,
    pub boundary: Option<Boundary>,
    pub connectivity: Option<Connectivity>,
}

impl Parameters {
    pub const REAL_NAMES: [&'static str; 8] = ["w", "w0", "gamma", "v", "v_up", "v_down", "delta", "gamma_eff"];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "w" => self.w,
            "w0" => self.w0,
            "gamma" => self.gamma,
            "v" => self.v,
            "v_up" => self.v_up,
            "v_down" => self.v_down,
            "delta" => self.delta,
            "gamma_eff" => self.gamma_eff,
            _ => None,
        }
    }

    pub fn slot(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "w" => &mut self.w,
            "w0" => &mut self.w0,
            "gamma" => &mut self.gamma,
            "v" => &mut self.v,
            "v_up" => &mut self.v_up,
            "v_down" => &mut self.v_down,
            "delta" => &mut self.delta,
            "gamma_eff" => &mut self.gamma_eff,
            _ => return None,
        })
    }

    /// Names of the parameters that are set.
    pub fn present(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Self::REAL_NAMES.iter().copied().filter(|n| self.get(n).is_some()).collect();
        if self.n.is_some() {
            out.push("n");
        }
        if self.atoms.is_some() {
            out.push("atoms");
        }
        if self.boundary.is_some() {
            out.push("boundary");
        }
        if self.connectivity.is_some() {
            out.push("connectivity");
        }
        out
    }

    /// Sets one parameter from a scan or sweep coordinate. Besides the bare
    /// MHz names this accepts the ratio conventions `<p>_over_gamma`,
    /// `wc_over_gamma` (w_c = √2 w) and `wc_over_w0` (which sets w0).
    pub fn assign(&mut self, axis: &str, x: f64) -> CliResult<()> {
        let need = |p: &Parameters, name: &str| {
            p.get(name).ok_or_else(|| CliError::config(axis, format!("ratio axis needs `parameters.{name}`")))
        };
        match axis {
            "wc_over_gamma" => self.w = Some(x * need(self, "gamma")? / std::f64::consts::SQRT_2),
            "wc_over_w0" => {
                if x <= 0.0 {
                    return Err(CliError::config(axis, "ratio must be positive"));
                }
                self.w0 = Some(std::f64::consts::SQRT_2 * need(self, "w")? / x);
            }
            _ => {
                if let Some(base) = axis.strip_suffix("_over_gamma") {
                    let g = need(self, "gamma")?;
                    let name = base.to_ascii_lowercase();
                    let slot = self
                        .slot(&name)
                        .filter(|_| name != "gamma")
                        .ok_or_else(|| CliError::config(axis, "unknown ratio axis"))?;
                    *slot = Some(x * g);
                } else {
                    let slot = self.slot(axis).ok_or_else(|| CliError::config(axis, "unknown parameter"))?;
                    *slot = Some(x);
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub max_step_us: Option<f64>,
    pub substeps: Option<usize>,
    #[serde(default)]
    pub diagnostics: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    #[serde(default)]
    pub collapse: CollapseMode,
    #[serde(default)]
    pub rydberg_decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamConfig {
    pub p_u: f64,
    pub p_l: f64,
    /// Tracks to push through the readout model; all outputs when empty.
    #[serde(default)]
    pub tracks: Vec<String>,
}

impl SpamConfig {
    pub fn params(&self) -> CliResult<SpamParams> {
        SpamParams::new(self.p_u, self.p_l).map_err(|e| CliError::config("spam", e.to_string()))
    }
}

/// Shared relative jitter of the exchange strengths, e.g. from thermal
/// motion of the atoms; the run is averaged over `samples` draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    pub sigma: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotsConfig {
    pub n: u64,
}

/// An axis given either as explicit values or as an inclusive linspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: String,
    pub values: Option<Vec<f64>>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n: Option<usize>,
}

impl AxisConfig {
    pub fn values(&self, field: &str) -> CliResult<Vec<f64>> {
        let vals = match (&self.values, self.lo, self.hi, self.n) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(lo), Some(hi), Some(n)) => {
                if n < 2 {
                    return Err(CliError::config(format!("{field}.n"), "need at least 2 points"));
                }
                let step = (hi - lo) / (n - 1) as f64;
                (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * step }).collect()
            }
            _ => {
                return Err(CliError::config(field, "give either `values` or all of `lo`, `hi`, `n`"));
            }
        };
        if vals.is_empty() {
            return Err(CliError::config(field, "axis is empty"));
        }
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config(field, "axis values must be finite"));
        }
        Ok(vals)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: String,
    pub axes: Vec<AxisConfig>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpMethod {
    /// Minimum of the smallest eigenvalue gap.
    #[default]
    GapMinimum,
    /// Onset of the imaginary-part spread.
    PtThreshold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpConfig {
    pub family: String,
    pub axis: String,
    pub lo: f64,
    pub hi: f64,
    pub coarse_points: Option<usize>,
    pub tol: Option<f64>,
    #[serde(default)]
    pub method: EpMethod,
    /// Im-spread threshold in MHz for `pt_threshold`.
    pub spread_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<ScenarioKind>,
    #[serde(default)]
    pub engine: Engine,
    pub initial_state: Option<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    pub n_traj: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub parameters: Parameters,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default)]
    pub loss: LossConfig,
    pub spam: Option<SpamConfig>,
    pub jitter: Option<JitterConfig>,
    pub shots: Option<ShotsConfig>,
    /// Repeats an evolve run over one parameter.
    pub scan: Option<AxisConfig>,
    pub sweep: Option<SweepConfig>,
    pub ep: Option<EpConfig>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_else(|| "config".into());
            CliError::config(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("--config", format!("{}: {e}", path.display())))?;
        Ok((Self::from_toml(&text)?, text))
    }

    /// The config as TOML, suitable for re-running.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
