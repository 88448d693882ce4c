//! Spectral sweeps of the non-Hermitian generators and exceptional-point
//! search.
//!
//! Eigenvalues are sorted per grid point rather than tracked as continuous
//! branches. The EP detector works on the smallest pairwise eigenvalue gap,
//! which does not care about branch labels.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{eig_general, Spectrum, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::models::{
    build_pair_exchange_nh, build_pair_spin_nh_full, build_pair_spin_nh_reduced, build_single_atom_nh,
    PairParams,
};
use crate::operator::Operator;
use crate::units::ordinary;

/// Points in the default coarse scan.
pub const DEFAULT_COARSE_POINTS: usize = 400;
/// Default refinement tolerance in the swept ratio.
pub const DEFAULT_EP_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl ParamAxis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() < 2 {
            return Err(Error::InvalidParameter { name: "axis", reason: format!("`{name}` needs at least 2 points") });
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "axis",
                reason: format!("`{name}` must be finite and strictly increasing"),
            });
        }
        Ok(Self { name, values })
    }

    /// `n` evenly spaced points from `lo` to `hi` inclusive.
    pub fn linspace(name: impl Into<String>, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
        Self::new(name, (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * step }).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// 2×2 single-atom generator on {1, 0}.
    SingleAtom,
    /// 3×3 symmetric-sector pair generator on {00, +, 11}.
    PairExchange,
    /// 4×4 selective pair generator.
    SelectiveReduced,
    /// 6×6 selective pair generator.
    SelectiveFull,
}

impl FamilyKind {
    pub fn id(self) -> &'static str {
        match self {
            FamilyKind::SingleAtom => "single_atom",
            FamilyKind::PairExchange => "pair_exchange",
            FamilyKind::SelectiveReduced => "selective_reduced",
            FamilyKind::SelectiveFull => "selective_full",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        [Self::SingleAtom, Self::PairExchange, Self::SelectiveReduced, Self::SelectiveFull]
            .into_iter()
            .find(|k| k.id() == id)
            .ok_or_else(|| Error::InvalidParameter { name: "family", reason: format!("unknown family `{id}`") })
    }
}

/// A model family: a builder plus base parameters that axes override.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub params: PairParams,
}

/// Axis names accepted by [`Family::with`]. Ratios use the dimensionless
/// conventions of the figures; bare names are MHz.
pub const AXIS_NAMES: [&str; 15] = [
    "w_over_gamma",
    "wc_over_gamma",
    "V_over_gamma",
    "V_up_over_gamma",
    "V_down_over_gamma",
    "delta_over_gamma",
    "w0_over_gamma",
    "wc_over_w0",
    "w",
    "w0",
    "gamma",
    "v",
    "v_up",
    "v_down",
    "delta",
];

impl Family {
    pub fn new(kind: FamilyKind, params: PairParams) -> Self {
        Self { kind, params }
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    /// Copy with one parameter set from an axis coordinate.
    pub fn with(&self, axis: &str, x: f64) -> Result<Self> {
        let mut p = self.params;
        let g = p.gamma;
        match axis {
            "w_over_gamma" => p.w = x * g,
            "wc_over_gamma" => p.w = x * g / SQRT_2,
            "V_over_gamma" => p.v = x * g,
            "V_up_over_gamma" => p.v_up = x * g,
            "V_down_over_gamma" => p.v_down = x * g,
            "delta_over_gamma" => p.delta = x * g,
            "w0_over_gamma" => p.w0 = x * g,
            "wc_over_w0" => {
                if !(x > 0.0) {
                    return Err(Error::InvalidParameter { name: "wc_over_w0", reason: format!("must be > 0, got {x}") });
                }
                p.w0 = SQRT_2 * p.w / x;
            }
            "w" => p.w = x,
            "w0" => p.w0 = x,
            "gamma" => p.gamma = x,
            "v" => p.v = x,
            "v_up" => p.v_up = x,
            "v_down" => p.v_down = x,
            "delta" => p.delta = x,
            other => {
                return Err(Error::InvalidParameter { name: "axis", reason: format!("unknown axis `{other}`") })
            }
        }
        Ok(Self { kind: self.kind, params: p })
    }

    pub fn with_all(&self, coords: &[(&str, f64)]) -> Result<Self> {
        coords.iter().try_fold(*self, |f, (a, x)| f.with(a, *x))
    }

    /// The generator in rad/μs.
    pub fn build(&self) -> Result<Operator> {
        match self.kind {
            FamilyKind::SingleAtom => build_single_atom_nh(self.params.w, self.params.gamma),
            FamilyKind::PairExchange => build_pair_exchange_nh(&self.params),
            FamilyKind::SelectiveReduced => build_pair_spin_nh_reduced(&self.params),
            FamilyKind::SelectiveFull => build_pair_spin_nh_full(&self.params),
        }
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        eig_general(&self.build()?, DEFAULT_TOL)
    }

    /// Dimension of the generator.
    pub fn dim(&self) -> usize {
        match self.kind {
            FamilyKind::SingleAtom => 2,
            FamilyKind::PairExchange => 3,
            FamilyKind::SelectiveReduced => 4,
            FamilyKind::SelectiveFull => 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// One coordinate per axis.
    pub coords: Vec<f64>,
    /// Eigenvalues in MHz (λ/2π) or the reason the point failed.
    pub eigenvalues_mhz: std::result::Result<Vec<(f64, f64)>, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub builder_id: String,
    pub axes: Vec<ParamAxis>,
    /// Row-major over the axes (first axis slowest).
    pub points: Vec<SweepPoint>,
}

impl SweepGrid {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.eigenvalues_mhz.is_err()).count()
    }
}

/// Spectrum at every grid point; points are independent and run in
/// parallel, but the output order is fixed by grid index.
pub fn sweep_spectrum(family: &Family, axes: &[ParamAxis]) -> Result<SweepGrid> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidParameter { name: "axes", reason: format!("need 1 or 2 axes, got {}", axes.len()) });
    }
    for a in axes {
        family.with(&a.name, a.values[0])?;
    }
    let total: usize = axes.iter().map(ParamAxis::len).product();
    let points = (0..total)
        .into_par_iter()
        .map(|idx| {
            let coords: Vec<f64> = if axes.len() == 1 {
                vec![axes[0].values[idx]]
            } else {
                let n2 = axes[1].len();
                vec![axes[0].values[idx / n2], axes[1].values[idx % n2]]
            };
            let assign: Vec<(&str, f64)> = axes.iter().map(|a| a.name.as_str()).zip(coords.iter().copied()).collect();
            let eigenvalues_mhz = family
                .with_all(&assign)
                .and_then(|f| f.spectrum())
                .map(|s| s.eigenvalues.iter().map(|z| (ordinary(z.re), ordinary(z.im))).collect())
                .map_err(|e| e.to_string());
            SweepPoint { coords, eigenvalues_mhz }
        })
        .collect();
    Ok(SweepGrid { builder_id: family.id().to_string(), axes: axes.to_vec(), points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EPEstimate {
    pub axis: String,
    pub location: f64,
    /// Smallest pairwise eigenvalue distance at `location`, in MHz.
    pub gap_at_location: f64,
    pub bracket: (f64, f64),
    pub method: String,
}

fn gap_at(family: &Family, axis: &str, x: f64) -> Result<f64> {
    Ok(ordinary(family.with(axis, x)?.spectrum()?.min_gap()))
}

fn scan<F: Fn(f64) -> Result<f64> + Sync>(lo: f64, hi: f64, n: usize, f: F) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(hi > lo) || n < 3 {
        return Err(Error::InvalidParameter { name: "range", reason: format!("need lo < hi and ≥ 3 points, got [{lo}, {hi}] × {n}") });
    }
    let xs = ParamAxis::linspace("scan", lo, hi, n)?.values;
    let ys = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    Ok((xs, ys))
}

/// Minimize the smallest eigenvalue gap over `axis ∈ [lo, hi]`: coarse scan,
/// then golden-section refinement until the bracket is narrower than `tol`.
pub fn locate_ep(family: &Family, axis: &str, lo: f64, hi: f64, coarse_points: usize, tol: f64) -> Result<EPEstimate> {
    let g = |x: f64| gap_at(family, axis, x);
    let (xs, ys) = scan(lo, hi, coarse_points, g)?;
    let i = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("scan has points");
    if i == 0 || i + 1 == xs.len() {
        return Err(Error::NoExceptionalPoint { lo, hi });
    }
    let (mut a, mut b) = (xs[i - 1], xs[i + 1]);
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    while b - a > tol {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = g(d)?;
        }
    }
    // best evaluated point, never worse than the coarse minimum
    let mut best = (xs[i], ys[i]);
    for (x, y) in [(c, gc), (d, gd)] {
        if y < best.1 {
            best = (x, y);
        }
    }
    // a Hermitian matrix has no exceptional points, only crossings
    if family.with(axis, best.0)?.build()?.is_hermitian(1e-12) {
        return Err(Error::NoExceptionalPoint { lo, hi });
    }
    Ok(EPEstimate {
        axis: axis.to_string(),
        location: best.0,
        gap_at_location: best.1,
        bracket: (xs[i - 1], xs[i + 1]),
        method: "scan+golden-section".into(),
    })
}

/// Spread max Im λ − min Im λ in MHz.
pub fn im_spread_at(family: &Family, axis: &str, x: f64) -> Result<f64> {
    Ok(ordinary(family.with(axis, x)?.spectrum()?.im_spread()))
}

/// Smallest `axis` value in `[lo, hi]` where the Im-part spread exceeds its
/// value at `lo` by more than `spread_tol` (MHz), located by coarse scan and
/// bisection to `tol`.
pub fn pt_breaking_threshold(
    family: &Family,
    axis: &str,
    lo: f64,
    hi: f64,
    coarse_points: usize,
    spread_tol: f64,
    tol: f64,
) -> Result<f64> {
    let s = |x: f64| im_spread_at(family, axis, x);
    let (xs, ys) = scan(lo, hi, coarse_points, s)?;
    let base = ys[0];
    let broken = |y: f64| y - base > spread_tol;
    let j = ys.iter().position(|&y| broken(y)).ok_or(Error::NoThreshold { lo, hi })?;
    if j == 0 {
        return Ok(lo);
    }
    let (mut a, mut b) = (xs[j - 1], xs[j]);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if broken(s(m)?) {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(gamma: f64) -> Family {
        Family::new(FamilyKind::SingleAtom, PairParams { gamma, ..Default::default() })
    }

    fn pair(gamma: f64, v_over_gamma: f64) -> Family {
        Family::new(FamilyKind::PairExchange, PairParams { gamma, v: v_over_gamma * gamma, ..Default::default() })
    }

    #[test]
    fn axis_validation() {
        assert!(ParamAxis::new("x", vec![0.0]).is_err());
        assert!(ParamAxis::new("x", vec![0.0, 0.0]).is_err());
        let a = ParamAxis::linspace("x", 0.0, 1.0, 5).unwrap();
        assert_eq!(a.values, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn single_atom_ep() {
        let ep = locate_ep(&single(0.3), "w_over_gamma", 0.0, 1.0, DEFAULT_COARSE_POINTS, DEFAULT_EP_TOL).unwrap();
        assert!((ep.location - 0.25).abs() < 1e-6, "{ep:?}");
        assert!(ep.bracket.0 <= ep.location && ep.location <= ep.bracket.1);
    }

    #[test]
    fn hermitian_family_has_no_ep() {
        let r = locate_ep(&single(0.0).with("gamma", 0.0).unwrap(), "w", 0.0, 1.0, 50, 1e-6);
        assert!(matches!(r, Err(Error::NoExceptionalPoint { .. })), "{r:?}");
    }

    #[test]
    fn sweep_shape_and_sum_rule() {
        let f = pair(0.13, 5.0);
        let axes = [ParamAxis::linspace("wc_over_gamma", 0.0, 3.0, 7).unwrap(), ParamAxis::linspace("V_over_gamma", 0.0, 10.0, 4).unwrap()];
        let grid = sweep_spectrum(&f, &axes).unwrap();
        assert_eq!(grid.points.len(), 28);
        assert_eq!(grid.failures(), 0);
        for p in &grid.points {
            let im: f64 = p.eigenvalues_mhz.as_ref().unwrap().iter().map(|z| z.1).sum();
            assert!((im + 1.5 * 0.13).abs() < 1e-10);
        }
        assert_eq!(grid.points[5].coords, vec![axes[0].values[1], axes[1].values[1]]);
    }

    #[test]
    fn pt_threshold_matches_ep() {
        let f = pair(1.0, 0.0).with("wc_over_gamma", 3.5).unwrap();
        let tol = 1e-6;
        let th = pt_breaking_threshold(&f, "V_over_gamma", 0.0, 100.0, 400, 1e-6, tol).unwrap();
        let ep = locate_ep(&f, "V_over_gamma", 0.0, 100.0, 400, tol).unwrap();
        assert!((th - ep.location).abs() <= 2.0 * tol, "{th} vs {ep:?}");
    }
}
