//! Hamiltonians and loss models for the dissipative Rydberg schemes.
//!
//! Every parameter is an ordinary frequency in MHz; every matrix element is
//! the corresponding angular frequency in rad/us (see [`crate::units`]).

use std::f64::consts::SQRT_2;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, Level, LevelSet, TensorBasis};
use crate::error::{Error, Result};
use crate::operator::{embed, embed_product, pauli, re, transition, Operator, C64, I};
use crate::states::{symmetric_pair_state, PureState};
use crate::units::angular;

/// Couplings of the two-atom schemes, all in MHz.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairParams {
    /// microwave coupling
    pub w: f64,
    /// loss-channel coupling
    pub w0: f64,
    /// effective loss rate γ/h
    pub gamma: f64,
    /// exchange for the {0, 1} scheme
    pub v: f64,
    pub v_up: f64,
    pub v_down: f64,
    /// loss-channel detuning
    pub delta: f64,
}

impl PairParams {
    /// Collective coupling w_c = √2·w.
    pub fn wc(&self) -> f64 {
        SQRT_2 * self.w
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("w", self.w),
            ("w0", self.w0),
            ("gamma", self.gamma),
            ("v", self.v),
            ("v_up", self.v_up),
            ("v_down", self.v_down),
            ("delta", self.delta),
        ];
        for (name, x) in fields {
            if !x.is_finite() {
                return Err(Error::InvalidParameter { name: static_name(name), reason: "not finite".into() });
            }
        }
        check_gamma(self.gamma)
    }

    /// Scales every exchange strength, as a shared jitter of R would.
    pub fn with_exchange_scale(mut self, s: f64) -> Self {
        self.v *= s;
        self.v_up *= s;
        self.v_down *= s;
        self
    }
}

fn static_name(name: &str) -> &'static str {
    match name {
        "w" => "w",
        "w0" => "w0",
        "gamma" => "gamma",
        "v" => "v",
        "v_up" => "v_up",
        "v_down" => "v_down",
        "delta" => "delta",
        _ => "parameter",
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidParameter { name: "gamma", reason: format!("must be ≥ 0, got {gamma}") });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    /// MHz·μm³
    pub c3: f64,
    /// μm
    pub r: f64,
}

/// V = C₃/(2R³) in MHz.
pub fn exchange_strength(g: GeometryParams) -> Result<f64> {
    if !(g.r > 0.0) {
        return Err(Error::InvalidParameter { name: "r", reason: format!("must be > 0, got {}", g.r) });
    }
    Ok(g.c3 / (2.0 * g.r.powi(3)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    #[default]
    NearestNeighbor,
    AllToAll,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainParams {
    pub n: usize,
    pub v: f64,
    pub w: f64,
    pub w0: f64,
    pub gamma: f64,
    pub delta: f64,
    pub gamma_eff: f64,
    pub boundary: Boundary,
    pub connectivity: Connectivity,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            n: 2,
            v: 0.0,
            w: 0.0,
            w0: 0.0,
            gamma: 0.0,
            delta: 0.0,
            gamma_eff: 0.0,
            boundary: Boundary::Periodic,
            connectivity: Connectivity::NearestNeighbor,
        }
    }
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter { name: "n", reason: format!("need n ≥ 2, got {}", self.n) });
        }
        if self.gamma_eff < 0.0 {
            return Err(Error::InvalidParameter { name: "gamma_eff", reason: "must be ≥ 0".into() });
        }
        check_gamma(self.gamma)
    }

    /// Interacting pairs (i < j). A two-site ring has a single bond.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        match self.connectivity {
            Connectivity::AllToAll => {
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
            }
            Connectivity::NearestNeighbor => {
                let mut b: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
                if self.boundary == Boundary::Periodic && n > 2 {
                    b.push((0, n - 1));
                }
                b
            }
        }
    }

    pub fn with_exchange_scale(mut self, s: f64) -> Self {
        self.v *= s;
        self
    }
}

/// How the loss on level `0` enters the master equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseMode {
    /// One operator L₀ = √γ Σ_α |g⟩_α⟨0|.
    #[default]
    Collective,
    /// One operator √γ |g⟩_α⟨0| per atom.
    Independent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossOptions {
    pub collapse: CollapseMode,
    /// Extra per-atom decay (MHz) of every non-lossy Rydberg level to |g⟩; off by default.
    pub rydberg_decay: f64,
}

/// H plus collapse operators over a product basis that contains |g⟩.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub h: Operator,
    pub collapse_ops: Vec<Operator>,
    pub basis: TensorBasis,
}

impl LindbladModel {
    pub fn new(h: Operator, collapse_ops: Vec<Operator>) -> Result<Self> {
        let basis = h.basis().as_tensor()?.clone();
        if !h.is_hermitian(1e-12) {
            return Err(Error::InvalidParameter { name: "h", reason: "Hamiltonian is not Hermitian".into() });
        }
        for l in &collapse_ops {
            if l.basis() != h.basis() {
                return Err(Error::BasisMismatch("collapse operator basis differs from H".into()));
            }
        }
        Ok(Self { h, collapse_ops, basis })
    }

    /// Σ L†L
    pub fn loss_operator(&self) -> Operator {
        let mut acc = Operator::zeros(self.basis.clone());
        for l in &self.collapse_ops {
            acc = &acc + &(&l.adjoint() * l);
        }
        acc
    }

    /// No-jump generator H − (i/2) Σ L†L.
    pub fn effective_hamiltonian(&self) -> Operator {
        &self.h - &self.loss_operator().scale(I * 0.5)
    }

    /// The no-jump generator on configurations free of `dark`, expressed in
    /// the product basis over the remaining levels. Exact for manifold
    /// observables whenever `dark` is terminal.
    pub fn without_level(&self, dark: Level) -> Result<Operator> {
        let levels = self.basis.levels();
        levels.index(dark)?;
        let kept: Vec<Level> = levels.labels().iter().copied().filter(|&l| l != dark).collect();
        let reduced = TensorBasis::new(self.basis.n_sites(), LevelSet::new(&kept)?)?;
        let heff = self.effective_hamiltonian();
        let map: Vec<usize> = (0..reduced.total_dim())
            .map(|i| self.basis.index_of(&reduced.config_of(i)))
            .collect::<Result<_>>()?;
        let d = reduced.total_dim();
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| heff.get(map[i], map[j]));
        Operator::new(reduced, m)
    }
}

/// Per-site operator builder over a fixed product basis.
struct Sites {
    levels: LevelSet,
    basis: TensorBasis,
}

impl Sites {
    fn new(n: usize, labels: &[Level]) -> Result<Self> {
        let levels = LevelSet::new(labels)?;
        let basis = TensorBasis::new(n, levels.clone())?;
        Ok(Self { levels, basis })
    }

    fn t(&self, to: Level, from: Level) -> Operator {
        transition(&self.levels, to, from).expect("levels belong to the set")
    }

    fn one(&self, site: usize, to: Level, from: Level) -> Operator {
        embed(&self.t(to, from), site, &self.basis).expect("site in range")
    }

    fn two(&self, a: usize, ta: (Level, Level), b: usize, tb: (Level, Level)) -> Operator {
        let oa = self.t(ta.0, ta.1);
        let ob = self.t(tb.0, tb.1);
        embed_product(&[(a, &oa), (b, &ob)], &self.basis).expect("distinct sites in range")
    }

    fn zero(&self) -> Operator {
        Operator::zeros(self.basis.clone())
    }

    /// Collapse operators for decay of `from` into |g⟩ at `rate` MHz.
    fn decay(&self, from: Level, rate: f64, mode: CollapseMode) -> Vec<Operator> {
        let amp = angular(rate).sqrt();
        let n = self.basis.n_sites();
        let per_site: Vec<Operator> = (0..n).map(|a| self.one(a, Level::G, from).scale_real(amp)).collect();
        match mode {
            CollapseMode::Collective => vec![per_site.into_iter().sum()],
            CollapseMode::Independent => per_site,
        }
    }

    fn collapse(&self, lossy: Level, gamma: f64, opts: &LossOptions) -> Vec<Operator> {
        let mut ops = if gamma > 0.0 { self.decay(lossy, gamma, opts.collapse) } else { vec![] };
        if opts.rydberg_decay > 0.0 {
            for &l in self.levels.labels() {
                if l != lossy && l != Level::G {
                    ops.extend(self.decay(l, opts.rydberg_decay, CollapseMode::Independent));
                }
            }
        }
        ops
    }
}

fn plus_hc(op: Operator) -> Operator {
    let dag = op.adjoint();
    op + dag
}

/// Single atom on {1, 0, g}: H = w(|0⟩⟨1| + h.c.), L₀ = √γ |g⟩⟨0|.
pub fn build_single_atom_lossy(w: f64, gamma: f64) -> Result<LindbladModel> {
    check_gamma(gamma)?;
    let s = Sites::new(1, &[Level::One, Level::Zero, Level::G])?;
    let h = plus_hc(s.one(0, Level::Zero, Level::One).scale_real(angular(w)));
    LindbladModel::new(h, s.collapse(Level::Zero, gamma, &LossOptions::default()))
}

/// [[0, w], [w, −iγ/2]] on {|1⟩, |0⟩}.
pub fn build_single_atom_nh(w: f64, gamma: f64) -> Result<Operator> {
    let (w, g) = (re(angular(w)), angular(gamma));
    let z = re(0.0);
    Operator::from_rows(Basis::named(&["1", "0"]), &[z, w, w, C64::new(0.0, -g / 2.0)])
}

pub const PAIR_EXCHANGE_LABELS: [&str; 3] = ["00", "+", "11"];

/// Symmetric-sector pair Hamiltonian on {|00⟩, |+⟩, |11⟩}.
pub fn build_pair_exchange_nh(p: &PairParams) -> Result<Operator> {
    p.validate()?;
    let wc = re(angular(p.wc()));
    let g = angular(p.gamma);
    let v = angular(p.v);
    let z = re(0.0);
    Operator::from_rows(
        Basis::named(&PAIR_EXCHANGE_LABELS),
        &[
            C64::new(0.0, -g), wc, z,
            wc, C64::new(v, -g / 2.0), wc,
            z, wc, z,
        ],
    )
}

/// Two atoms on {1, 0, g}; exchange V|0⟩_A⟨1|⊗|1⟩_B⟨0| + h.c.
pub fn build_pair_exchange_lindblad(p: &PairParams, opts: &LossOptions) -> Result<LindbladModel> {
    p.validate()?;
    let s = Sites::new(2, &[Level::One, Level::Zero, Level::G])?;
    let w = angular(p.w);
    let drive = (0..2).map(|a| s.one(a, Level::Zero, Level::One).scale_real(w)).sum::<Operator>();
    let exchange = s
        .two(0, (Level::Zero, Level::One), 1, (Level::One, Level::Zero))
        .scale_real(angular(p.v));
    let h = plus_hc(drive + exchange);
    LindbladModel::new(h, s.collapse(Level::Zero, p.gamma, opts))
}

/// |00⟩, |+⟩₀₁, |11⟩ embedded in the 9-dimensional pair basis.
pub fn pair_exchange_manifold(basis: &TensorBasis) -> Result<[PureState; 3]> {
    Ok([
        symmetric_pair_state(Level::Zero, Level::Zero, basis)?,
        symmetric_pair_state(Level::Zero, Level::One, basis)?,
        symmetric_pair_state(Level::One, Level::One, basis)?,
    ])
}

fn selective(p: &PairParams, n: usize, opts: &LossOptions) -> Result<LindbladModel> {
    p.validate()?;
    let s = Sites::new(n, &[Level::Up, Level::Down, Level::Zero, Level::G])?;
    let (w, w0, delta) = (angular(p.w), angular(p.w0), angular(p.delta));
    let mut coupling = s.zero();
    let mut detuning = s.zero();
    for a in 0..n {
        coupling = coupling + s.one(a, Level::Up, Level::Down).scale_real(w);
        coupling = coupling + s.one(a, Level::Zero, Level::Down).scale_real(w0);
        detuning = detuning + s.one(a, Level::Zero, Level::Zero).scale_real(-delta);
    }
    if n == 2 {
        coupling = coupling
            + s.two(0, (Level::Up, Level::Zero), 1, (Level::Zero, Level::Up)).scale_real(angular(p.v_up))
            + s.two(0, (Level::Down, Level::Zero), 1, (Level::Zero, Level::Down))
                .scale_real(angular(p.v_down));
    }
    let h = plus_hc(coupling) + detuning;
    LindbladModel::new(h, s.collapse(Level::Zero, p.gamma, opts))
}

/// Two atoms on {up, down, 0, g} with the loss channel on |0⟩.
pub fn build_selective_pair_full(p: &PairParams, opts: &LossOptions) -> Result<LindbladModel> {
    selective(p, 2, opts)
}

/// The single-atom counterpart of [`build_selective_pair_full`].
pub fn build_selective_single_atom(p: &PairParams, opts: &LossOptions) -> Result<LindbladModel> {
    selective(p, 1, opts)
}

pub const PAIR_SPIN_FULL_LABELS: [&str; 6] = ["upup", "+updown", "downdown", "+up0", "+down0", "00"];
pub const PAIR_SPIN_REDUCED_LABELS: [&str; 4] = ["upup", "+updown", "downdown", "+up0"];

/// Six-state symmetric-sector Hamiltonian of the selective pair.
pub fn build_pair_spin_nh_full(p: &PairParams) -> Result<Operator> {
    p.validate()?;
    let a = |x: f64| re(angular(x));
    let (wc, w, w0) = (a(p.wc()), a(p.w), a(p.w0));
    let s2w0 = a(SQRT_2 * p.w0);
    let g = angular(p.gamma);
    let z = re(0.0);
    let up0 = C64::new(angular(p.v_up - p.delta), -g / 2.0);
    let down0 = C64::new(angular(p.v_down - p.delta), -g / 2.0);
    let zz = C64::new(angular(-2.0 * p.delta), -g);
    Operator::from_rows(
        Basis::named(&PAIR_SPIN_FULL_LABELS),
        &[
            z, wc, z, z, z, z,
            wc, z, wc, w0, z, z,
            z, wc, z, z, s2w0, z,
            z, w0, z, up0, w, z,
            z, z, s2w0, w, down0, s2w0,
            z, z, z, z, s2w0, zz,
        ],
    )
}

/// Four-state reduction valid for |V↑−V↓| ≫ w, γ and |Δ−V↓| ≫ w₀, γ.
pub fn build_pair_spin_nh_reduced(p: &PairParams) -> Result<Operator> {
    p.validate()?;
    const MARGIN: f64 = 10.0;
    if (p.v_up - p.v_down).abs() < MARGIN * p.w.max(p.gamma)
        || (p.delta - p.v_down).abs() < MARGIN * p.w0.max(p.gamma)
    {
        warn!("reduced pair Hamiltonian used outside its validity regime: {p:?}");
    }
    let a = |x: f64| re(angular(x));
    let (wc, w0) = (a(p.wc()), a(p.w0));
    let z = re(0.0);
    let corner = C64::new(angular(p.v_up - p.delta), -angular(p.gamma) / 2.0);
    Operator::from_rows(
        Basis::named(&PAIR_SPIN_REDUCED_LABELS),
        &[
            z, wc, z, z,
            wc, z, wc, w0,
            z, wc, z, z,
            z, w0, z, corner,
        ],
    )
}

/// Adiabatic-elimination rate 4w₀²/γ (MHz).
pub fn gamma_eff(w0: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter { name: "gamma", reason: "must be > 0".into() });
    }
    Ok(4.0 * w0 * w0 / gamma)
}

fn spin_sites(n: usize) -> Result<(LevelSet, TensorBasis, [Operator; 3])> {
    let levels = LevelSet::new(&[Level::Up, Level::Down])?;
    let basis = TensorBasis::new(n, levels.clone())?;
    let paulis = pauli(&levels)?;
    Ok((levels, basis, paulis))
}

/// w(σˣ_A + σˣ_B) − i·g_eff |+⟩⟨+| on two spin-1/2s.
pub fn build_pair_effective_nh(w: f64, g_eff: f64) -> Result<Operator> {
    let (_, basis, [sx, _, _]) = spin_sites(2)?;
    let drive = (embed(&sx, 0, &basis)? + embed(&sx, 1, &basis)?).scale_real(angular(w));
    let plus = symmetric_pair_state(Level::Up, Level::Down, &basis)?;
    let proj = plus.to_density();
    let loss = Operator::new(basis, proj.matrix().clone())?.scale(-I * angular(g_eff));
    Ok(drive + loss)
}

/// w Σσˣ − (i g_eff/4) Σ_bonds (σˣσˣ + σʸσʸ + II − σᶻσᶻ).
pub fn build_chain_nh(p: &ChainParams) -> Result<Operator> {
    p.validate()?;
    let (_, basis, [sx, sy, sz]) = spin_sites(p.n)?;
    let mut h = Operator::zeros(basis.clone());
    for j in 0..p.n {
        h = h + embed(&sx, j, &basis)?.scale_real(angular(p.w));
    }
    let id = Operator::identity(basis.clone());
    for (i, j) in p.bonds() {
        let xx = embed_product(&[(i, &sx), (j, &sx)], &basis)?;
        let yy = embed_product(&[(i, &sy), (j, &sy)], &basis)?;
        let zz = embed_product(&[(i, &sz), (j, &sz)], &basis)?;
        let bond = xx + yy + id.clone() - zz;
        h = h + bond.scale(-I * (angular(p.gamma_eff) / 4.0));
    }
    Ok(h)
}

fn distillation_sites(p: &ChainParams, labels: &[Level]) -> Result<(Sites, Operator)> {
    p.validate()?;
    if p.connectivity == Connectivity::AllToAll && p.n > 3 {
        return Err(Error::InvalidParameter {
            name: "connectivity",
            reason: format!("uniform all-to-all exchange needs n ≤ 3, got {}", p.n),
        });
    }
    let s = Sites::new(p.n, labels)?;
    let (v, w, w0, delta) = (angular(p.v), angular(p.w), angular(p.w0), angular(p.delta));
    let mut coupling = s.zero();
    for (a, b) in p.bonds() {
        coupling = coupling + s.two(a, (Level::Up, Level::Down), b, (Level::Down, Level::Up)).scale_real(v);
    }
    let mut detuning = s.zero();
    for a in 0..p.n {
        if w != 0.0 {
            coupling = coupling + s.one(a, Level::Up, Level::Down).scale_real(w);
        }
        coupling = coupling + s.one(a, Level::Zero, Level::Up).scale_real(w0);
        detuning = detuning + s.one(a, Level::Zero, Level::Zero).scale_real(-delta);
    }
    let h = plus_hc(coupling) + detuning;
    Ok((s, h))
}

/// Multi-atom chain on {up, down, 0, g} with resonant exchange V between
/// bonded atoms and the loss channel |↑⟩ ↔ |0⟩ → |g⟩.
pub fn build_distillation_model(p: &ChainParams, opts: &LossOptions) -> Result<LindbladModel> {
    let (s, h) = distillation_sites(p, &[Level::Up, Level::Down, Level::Zero, Level::G])?;
    LindbladModel::new(h, s.collapse(Level::Zero, p.gamma, opts))
}

/// No-jump generator of [`build_distillation_model`] on {up, down, 0}; built
/// directly so long chains never materialize the |g⟩ sector.
pub fn build_distillation_nh(p: &ChainParams) -> Result<Operator> {
    let (s, h) = distillation_sites(p, &[Level::Up, Level::Down, Level::Zero])?;
    let mut loss = s.zero();
    for a in 0..p.n {
        loss = loss + s.one(a, Level::Zero, Level::Zero);
    }
    Ok(h - loss.scale(I * (angular(p.gamma) / 2.0)))
}
