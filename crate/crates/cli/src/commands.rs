//! The `sweep`, `ep` and `fit` commands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rydberg_core::measurement::{fit_cosine, fit_exponential_loss, FitData, FitResult};
use rydberg_core::spectra::{
    locate_ep, pt_breaking_threshold, sweep_spectrum, EPEstimate, Family, FamilyKind, ParamAxis, SweepGrid,
    DEFAULT_COARSE_POINTS, DEFAULT_EP_TOL,
};

use crate::config::{EpConfig, EpMethod, Parameters, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv_bytes, fmt_num};
use crate::scenario::pair_params;

fn family(name: &str, p: &Parameters) -> CliResult<Family> {
    let kind = FamilyKind::from_id(name).map_err(|e| CliError::config("family", e.to_string()))?;
    for field in ["n", "atoms", "boundary", "connectivity"] {
        if p.present().contains(&field) {
            return Err(CliError::config(format!("parameters.{field}"), "not used by spectral families"));
        }
    }
    if p.gamma_eff.is_some() {
        return Err(CliError::config("parameters.gamma_eff", "not used by spectral families"));
    }
    Ok(Family::new(kind, pair_params(p)))
}

/// The grid and the number of eigenvalue branches per point.
pub fn sweep(cfg: &ScenarioConfig) -> CliResult<(SweepGrid, usize)> {
    let s = cfg.sweep.as_ref().ok_or_else(|| CliError::config("sweep", "missing [sweep] section"))?;
    let fam = family(&s.family, &cfg.parameters).map_err(|e| match e {
        CliError::Config { field, message } if field == "family" => CliError::config("sweep.family", message),
        e => e,
    })?;
    if s.axes.is_empty() || s.axes.len() > 2 {
        return Err(CliError::config("sweep.axes", "give one or two axes"));
    }
    let axes = s
        .axes
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let field = format!("sweep.axes[{i}]");
            let values = a.values(&field)?;
            ParamAxis::new(a.name.clone(), values).map_err(|e| CliError::config(field, e.to_string()))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let grid = sweep_spectrum(&fam, &axes).map_err(|e| CliError::config("sweep.axes", e.to_string()))?;
    Ok((grid, fam.dim()))
}

/// Long format: one row per grid point and eigenvalue branch, eigenvalues
/// in MHz. Failed points are written as NaN.
pub fn sweep_csv(grid: &SweepGrid, dim: usize) -> CliResult<Vec<u8>> {
    let mut header: Vec<String> = grid.axes.iter().map(|a| a.name.clone()).collect();
    header.extend(["branch_index", "re_lambda_MHz", "im_lambda_MHz"].map(String::from));
    let rows = grid.points.iter().flat_map(|pt| {
        (0..dim).map(move |b| {
            let mut row: Vec<String> = pt.coords.iter().map(|&c| fmt_num(c)).collect();
            row.push(b.to_string());
            let (re, im) = pt.eigenvalues_mhz.as_ref().map_or((f64::NAN, f64::NAN), |ev| ev[b]);
            row.push(fmt_num(re));
            row.push(fmt_num(im));
            row
        })
    });
    csv_bytes(&header, rows)
}

/// Onset of PT breaking along one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub axis: String,
    pub threshold: f64,
    /// Im-spread criterion in MHz.
    pub spread_tol: f64,
    pub range: (f64, f64),
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpReport {
    Gap(EPEstimate),
    Threshold(ThresholdEstimate),
}

fn ep_section(cfg: &ScenarioConfig) -> CliResult<&EpConfig> {
    cfg.ep.as_ref().ok_or_else(|| CliError::config("ep", "missing [ep] section"))
}

pub fn ep(cfg: &ScenarioConfig) -> CliResult<EpReport> {
    let e = ep_section(cfg)?;
    let fam = family(&e.family, &cfg.parameters)?;
    // surfaces a bad axis name as a config error rather than as "no EP"
    fam.with(&e.axis, e.lo).map_err(|err| CliError::config("ep.axis", err.to_string()))?;
    if !(e.hi > e.lo) {
        return Err(CliError::config("ep", format!("need lo < hi, got [{}, {}]", e.lo, e.hi)));
    }
    let coarse = e.coarse_points.unwrap_or(DEFAULT_COARSE_POINTS);
    let tol = e.tol.unwrap_or(DEFAULT_EP_TOL);
    Ok(match e.method {
        EpMethod::GapMinimum => EpReport::Gap(locate_ep(&fam, &e.axis, e.lo, e.hi, coarse, tol)?),
        EpMethod::PtThreshold => {
            let gamma = fam.params.gamma;
            let spread_tol = e.spread_tol.unwrap_or(if gamma > 0.0 { 1e-6 * gamma } else { 1e-9 });
            let threshold = pt_breaking_threshold(&fam, &e.axis, e.lo, e.hi, coarse, spread_tol, tol)?;
            EpReport::Threshold(ThresholdEstimate {
                axis: e.axis.clone(),
                threshold,
                spread_tol,
                range: (e.lo, e.hi),
                method: "scan+bisection".into(),
            })
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// A·exp(−2πγ t)
    ExpLoss,
    /// B + C·cos(4πν t + φ)
    Cosine,
}

/// Columns of a `t_us,...` CSV.
#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::Input(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.first().map(String::as_str) != Some("t_us") {
        return Err(CliError::Input("first column must be `t_us`".into()));
    }
    if header.len() < 2 {
        return Err(CliError::Input("need `t_us` and at least one track".into()));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            let x = field
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("row {}: `{field}` is not a number", line + 2)))?;
            col.push(x);
        }
    }
    Ok(Table { header, columns })
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub input: String,
    pub track: String,
    pub sigma_track: Option<String>,
    pub n_points: usize,
    #[serde(flatten)]
    pub result: FitResult,
}

/// Fits `track` (default: the first column after `t_us`), weighted by
/// `sigma_track` when given.
pub fn fit(table: &Table, model: FitModel, track: Option<&str>, sigma_track: Option<&str>) -> CliResult<(String, FitResult)> {
    let name = track.unwrap_or(&table.header[1]).to_string();
    let y = table.column(&name).ok_or_else(|| CliError::Input(format!("no column `{name}`")))?;
    let t = table.column("t_us").expect("checked on read");
    let mut data = FitData::new(t, y);
    if let Some(s) = sigma_track {
        data = data.with_sigma(table.column(s).ok_or_else(|| CliError::Input(format!("no column `{s}`")))?);
    }
    let result = match model {
        FitModel::ExpLoss => fit_exponential_loss(&data)?,
        FitModel::Cosine => fit_cosine(&data)?,
    };
    Ok((name, result))
}
