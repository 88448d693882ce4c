//! Observables recorded along a trajectory.
//!
//! Populations are diagonal sums in the product basis. Pure states are not
//! renormalized: under non-Hermitian evolution the norm is the survival
//! probability, and populations carry it.

use crate::basis::{Basis, Level, TensorBasis};
use crate::error::{Error, Result};
use crate::states::{DensityMatrix, PureState};

/// Read access shared by density matrices and (unnormalized) pure states.
pub trait StateView {
    fn basis(&self) -> &Basis;
    /// Probability weight of basis state `index`.
    fn weight(&self, index: usize) -> f64;
    /// ⟨t|ρ|t⟩ or |⟨t|ψ⟩|².
    fn overlap_with(&self, target: &PureState) -> Result<f64>;
    /// Tr ρ or ‖ψ‖².
    fn total(&self) -> f64;
}

impl StateView for DensityMatrix {
    fn basis(&self) -> &Basis {
        DensityMatrix::basis(self)
    }
    fn weight(&self, index: usize) -> f64 {
        self.diagonal(index)
    }
    fn overlap_with(&self, target: &PureState) -> Result<f64> {
        self.overlap(target)
    }
    fn total(&self) -> f64 {
        self.trace()
    }
}

impl StateView for PureState {
    fn basis(&self) -> &Basis {
        PureState::basis(self)
    }
    fn weight(&self, index: usize) -> f64 {
        self.amplitudes()[index].norm_sqr()
    }
    fn overlap_with(&self, target: &PureState) -> Result<f64> {
        Ok(target.inner(self)?.norm_sqr())
    }
    fn total(&self) -> f64 {
        self.norm_sqr()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// Population of `level` on `site`.
    Population { level: Level, site: usize },
    /// Share of the total |↑⟩ population sitting on `site`.
    UpShare { site: usize },
    /// Mean ground-level population per atom.
    LossFraction,
    /// Population outside the |g⟩-free configurations.
    ManifoldLoss,
    /// (1/N) Σ_j P(↑ on j); divided by the surviving norm when `normalized`.
    TotalUpFraction { normalized: bool },
    Overlap { name: String, target: PureState },
    /// Weight of one basis state.
    BasisPopulation { index: usize, label: String },
    /// Tr ρ or ‖ψ‖².
    Norm,
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Population { level, site } => format!("P_{level}_site{site}"),
            Observable::UpShare { site } => format!("share_up_site{site}"),
            Observable::LossFraction => "loss".into(),
            Observable::ManifoldLoss => "manifold_loss".into(),
            Observable::TotalUpFraction { normalized: false } => "n_up_tot".into(),
            Observable::TotalUpFraction { normalized: true } => "n_up_tot_normalized".into(),
            Observable::Overlap { name, .. } => format!("overlap_{name}"),
            Observable::BasisPopulation { label, .. } => format!("P_{label}"),
            Observable::Norm => "norm".into(),
        }
    }

    pub fn overlap(name: impl Into<String>, target: PureState) -> Self {
        Observable::Overlap { name: name.into(), target }
    }

    /// Per-state weights for the linear diagonal observables, ready for
    /// repeated evaluation.
    pub(crate) fn compile(&self, basis: &Basis) -> Result<Compiled> {
        let tensor = || basis.as_tensor();
        Ok(match self {
            Observable::Population { level, site } => {
                Compiled::Linear(population_weights(tensor()?, *level, Some(*site))?)
            }
            Observable::UpShare { site } => {
                let t = tensor()?;
                Compiled::Ratio(
                    population_weights(t, Level::Up, Some(*site))?,
                    population_weights(t, Level::Up, None)?,
                )
            }
            Observable::LossFraction => {
                let t = tensor()?;
                let mut w = population_weights(t, Level::G, None)?;
                let n = t.n_sites() as f64;
                w.iter_mut().for_each(|x| x.1 /= n);
                Compiled::Linear(w)
            }
            Observable::ManifoldLoss => match basis {
                Basis::Tensor(t) if t.levels().contains(Level::G) => {
                    let g = t.levels().index(Level::G)?;
                    let w = (0..t.total_dim())
                        .filter(|&i| t.digits(i).contains(&g))
                        .map(|i| (i, 1.0))
                        .collect();
                    Compiled::Linear(w)
                }
                _ => Compiled::OneMinusTotal,
            },
            Observable::TotalUpFraction { normalized } => {
                let t = tensor()?;
                let mut w = population_weights(t, Level::Up, None)?;
                let n = t.n_sites() as f64;
                w.iter_mut().for_each(|x| x.1 /= n);
                if *normalized {
                    Compiled::PerTotal(w)
                } else {
                    Compiled::Linear(w)
                }
            }
            Observable::Overlap { target, .. } => {
                if target.basis() != basis {
                    return Err(Error::BasisMismatch(format!("overlap target for `{}`", self.name())));
                }
                Compiled::Overlap(target.clone())
            }
            Observable::BasisPopulation { index, .. } => {
                if *index >= basis.dim() {
                    return Err(Error::Dimension { expected: basis.dim(), found: *index });
                }
                Compiled::Linear(vec![(*index, 1.0)])
            }
            Observable::Norm => Compiled::Total,
        })
    }
}

/// Σ over configurations with `level` on `site` (any site when `None`,
/// counted with multiplicity).
fn population_weights(t: &TensorBasis, level: Level, site: Option<usize>) -> Result<Vec<(usize, f64)>> {
    let li = t.levels().index(level)?;
    if let Some(s) = site {
        if s >= t.n_sites() {
            return Err(Error::SiteOutOfRange { site: s, n_sites: t.n_sites() });
        }
    }
    Ok((0..t.total_dim())
        .filter_map(|i| {
            let count = match site {
                Some(s) => (t.digit(i, s) == li) as usize,
                None => t.digits(i).iter().filter(|&&d| d == li).count(),
            };
            (count > 0).then_some((i, count as f64))
        })
        .collect())
}

#[derive(Clone, Debug)]
pub(crate) enum Compiled {
    Linear(Vec<(usize, f64)>),
    Ratio(Vec<(usize, f64)>, Vec<(usize, f64)>),
    PerTotal(Vec<(usize, f64)>),
    Overlap(PureState),
    OneMinusTotal,
    Total,
}

fn weighted<S: StateView + ?Sized>(s: &S, w: &[(usize, f64)]) -> f64 {
    w.iter().map(|&(i, c)| c * s.weight(i)).sum()
}

impl Compiled {
    pub(crate) fn eval<S: StateView + ?Sized>(&self, s: &S) -> f64 {
        match self {
            Compiled::Linear(w) => weighted(s, w),
            Compiled::Ratio(num, den) => {
                let d = weighted(s, den);
                if d > 0.0 { weighted(s, num) / d } else { f64::NAN }
            }
            Compiled::PerTotal(w) => {
                let t = s.total();
                if t > 0.0 { weighted(s, w) / t } else { f64::NAN }
            }
            Compiled::Overlap(target) => s.overlap_with(target).unwrap_or(f64::NAN),
            Compiled::OneMinusTotal => 1.0 - s.total(),
            Compiled::Total => s.total(),
        }
    }
}

pub(crate) fn compile_all(obs: &[Observable], basis: &Basis) -> Result<Vec<(String, Compiled)>> {
    obs.iter().map(|o| Ok((o.name(), o.compile(basis)?))).collect()
}

/// Population of `level` on `site`.
pub fn population<S: StateView + ?Sized>(state: &S, level: Level, site: usize) -> Result<f64> {
    Ok(Observable::Population { level, site }.compile(state.basis())?.eval(state))
}

/// Mean ground-level population per atom.
pub fn loss_fraction<S: StateView + ?Sized>(state: &S) -> Result<f64> {
    Ok(Observable::LossFraction.compile(state.basis())?.eval(state))
}

/// Population that has left the |g⟩-free manifold.
pub fn manifold_loss<S: StateView + ?Sized>(state: &S) -> Result<f64> {
    Ok(Observable::ManifoldLoss.compile(state.basis())?.eval(state))
}

pub fn overlap<S: StateView + ?Sized>(state: &S, target: &PureState) -> Result<f64> {
    if target.basis() != state.basis() {
        return Err(Error::BasisMismatch("overlap across bases".into()));
    }
    state.overlap_with(target)
}

/// (1/N) Σ_j P(↑ on j).
pub fn total_up_fraction<S: StateView + ?Sized>(state: &S) -> Result<f64> {
    Ok(Observable::TotalUpFraction { normalized: false }.compile(state.basis())?.eval(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bloch_state, ring_momenta};
    use Level::*;

    #[test]
    fn self_overlap_is_one() {
        let b = TensorBasis::from_levels(3, &[Up, Down]).unwrap();
        let w = bloch_state(&b, 0.0, Up, Down).unwrap();
        assert!((overlap(&w, &w).unwrap() - 1.0).abs() < 1e-15);
        assert!((overlap(&w.to_density(), &w).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn local_flip_overlaps() {
        let b = TensorBasis::from_levels(3, &[Up, Down, Zero, G]).unwrap();
        let dud = PureState::from_config(&b, &[Down, Up, Down]).unwrap();
        let rho = dud.to_density();
        for k in ring_momenta(3) {
            let w = bloch_state(&b, k, Up, Down).unwrap();
            assert!((overlap(&rho, &w).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(population(&rho, Up, 1).unwrap(), 1.0);
        assert_eq!(population(&rho, Up, 0).unwrap(), 0.0);
        assert!((total_up_fraction(&rho).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(loss_fraction(&rho).unwrap(), 0.0);
    }

    #[test]
    fn polarized_chain_is_fully_up() {
        let b = TensorBasis::from_levels(7, &[Up, Down]).unwrap();
        let s = PureState::from_config(&b, &[Up; 7]).unwrap();
        assert_eq!(total_up_fraction(&s).unwrap(), 1.0);
    }

    #[test]
    fn loss_observables_on_lost_atom() {
        let b = TensorBasis::from_levels(2, &[One, Zero, G]).unwrap();
        let s = PureState::from_config(&b, &[G, Zero]).unwrap();
        assert_eq!(loss_fraction(&s).unwrap(), 0.5);
        assert_eq!(manifold_loss(&s).unwrap(), 1.0);
        let nog = TensorBasis::from_levels(2, &[One, Zero]).unwrap();
        let s = PureState::from_config(&nog, &[One, Zero]).unwrap();
        assert!(loss_fraction(&s).is_err());
        assert_eq!(manifold_loss(&s).unwrap(), 0.0);
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let a = TensorBasis::from_levels(2, &[Up, Down]).unwrap();
        let c = TensorBasis::from_levels(2, &[One, Zero]).unwrap();
        let s = PureState::from_config(&a, &[Up, Up]).unwrap();
        let t = PureState::from_config(&c, &[One, One]).unwrap();
        assert!(overlap(&s, &t).is_err());
        assert!(population(&s, Zero, 0).is_err());
    }
}
