//! Pure states and density matrices, plus the named states used throughout:
//! symmetric pair triplets and single-excitation Bloch (W) states.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::basis::{Basis, Level, TensorBasis};
use crate::eig::hermitian_eigenvalues;
use crate::error::{Error, Result};
use crate::operator::{re, Operator, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    basis: Basis,
    amplitudes: DVector<C64>,
    /// μs
    pub time: f64,
}

impl PureState {
    pub fn new(basis: impl Into<Basis>, amplitudes: DVector<C64>) -> Result<Self> {
        let basis = basis.into();
        if amplitudes.len() != basis.dim() {
            return Err(Error::Dimension { expected: basis.dim(), found: amplitudes.len() });
        }
        Ok(Self { basis, amplitudes, time: 0.0 })
    }

    pub fn basis_state(basis: impl Into<Basis>, index: usize) -> Result<Self> {
        let basis = basis.into();
        let d = basis.dim();
        if index >= d {
            return Err(Error::Dimension { expected: d, found: index });
        }
        let mut a = DVector::zeros(d);
        a[index] = re(1.0);
        Self::new(basis, a)
    }

    pub fn from_config(basis: &TensorBasis, config: &[Level]) -> Result<Self> {
        Self::basis_state(basis.clone(), basis.index_of(config)?)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn normalized(&self) -> Self {
        let n = self.amplitudes.norm();
        Self { basis: self.basis.clone(), amplitudes: &self.amplitudes / re(n), time: self.time }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch("inner product across bases".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { basis: self.basis.clone(), matrix: m, time: self.time }
    }

    /// Superposition Σ c_i |s_i⟩ over states sharing one basis.
    pub fn superpose(terms: &[(C64, &PureState)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::Dimension { expected: 1, found: 0 })?;
        let mut a = DVector::zeros(first.dim());
        for (c, s) in terms {
            if s.basis != first.basis {
                return Err(Error::BasisMismatch("superposition across bases".into()));
            }
            a += &s.amplitudes * *c;
        }
        Self::new(first.basis.clone(), a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    basis: Basis,
    matrix: DMatrix<C64>,
    /// μs
    pub time: f64,
}

impl DensityMatrix {
    pub fn new(basis: impl Into<Basis>, matrix: DMatrix<C64>) -> Result<Self> {
        let basis = basis.into();
        let d = basis.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension { expected: d, found: matrix.nrows() });
        }
        Ok(Self { basis, matrix, time: 0.0 })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// max |ρ − ρ†|
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * re(0.5);
        hermitian_eigenvalues(&h).first().copied().unwrap_or(0.0)
    }

    /// Tr(ρ O)
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.basis() != &self.basis {
            return Err(Error::BasisMismatch("expectation across bases".into()));
        }
        Ok((op.matrix() * &self.matrix).trace())
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn overlap(&self, target: &PureState) -> Result<f64> {
        if target.basis() != &self.basis {
            return Err(Error::BasisMismatch("overlap across bases".into()));
        }
        let v = target.amplitudes();
        Ok(v.dotc(&(&self.matrix * v)).re)
    }

    pub fn diagonal(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }
}

/// (|rs⟩ + |sr⟩)/√2 on a two-site basis, or |rr⟩ when r = s.
pub fn symmetric_pair_state(r: Level, s: Level, basis: &TensorBasis) -> Result<PureState> {
    pair_state(r, s, basis, 1.0)
}

/// (|rs⟩ − |sr⟩)/√2 on a two-site basis.
pub fn antisymmetric_pair_state(r: Level, s: Level, basis: &TensorBasis) -> Result<PureState> {
    if r == s {
        return Err(Error::BadConfiguration(format!("singlet of {r}{r} vanishes")));
    }
    pair_state(r, s, basis, -1.0)
}

fn pair_state(r: Level, s: Level, basis: &TensorBasis, sign: f64) -> Result<PureState> {
    if basis.n_sites() != 2 {
        return Err(Error::Dimension { expected: 2, found: basis.n_sites() });
    }
    let rs = PureState::from_config(basis, &[r, s])?;
    if r == s {
        return Ok(rs);
    }
    let sr = PureState::from_config(basis, &[s, r])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState::superpose(&[(re(h), &rs), (re(sign * h), &sr)])
}

/// Returns n′ with k = 2πn′/N, folded into (−N/2, N/2].
pub fn momentum_index(k: f64, n: usize) -> Result<i64> {
    let x = k * n as f64 / (2.0 * PI);
    let m = x.round();
    if (x - m).abs() > 1e-9 {
        return Err(Error::Incommensurate { k, n });
    }
    let nn = n as i64;
    let mut idx = (m as i64).rem_euclid(nn);
    if 2 * idx > nn {
        idx -= nn;
    }
    Ok(idx)
}

/// All momenta 2πn′/N of an N-site ring, n′ ascending in (−N/2, N/2].
pub fn ring_momenta(n: usize) -> Vec<f64> {
    let nn = n as i64;
    let lo = -(nn - 1) / 2;
    (lo..lo + nn).map(|m| 2.0 * PI * m as f64 / n as f64).collect()
}

/// Σ_j e^{ijk}/√N |background … excited_j … background⟩.
pub fn bloch_state(
    basis: &TensorBasis,
    k: f64,
    excited: Level,
    background: Level,
) -> Result<PureState> {
    let n = basis.n_sites();
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n_sites", reason: "Bloch states need n ≥ 2".into() });
    }
    momentum_index(k, n)?;
    let mut amps = DVector::zeros(basis.total_dim());
    let norm = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        let mut config = vec![background; n];
        config[j] = excited;
        let idx = basis.index_of(&config)?;
        amps[idx] += C64::from_polar(norm, j as f64 * k);
    }
    PureState::new(basis.clone(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Level::*;

    fn spins(n: usize) -> TensorBasis {
        TensorBasis::from_levels(n, &[Up, Down]).unwrap()
    }

    #[test]
    fn triplet_amplitudes() {
        let b = spins(2);
        let p = symmetric_pair_state(Up, Down, &b).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.amplitudes()[1] - re(h)).norm() < 1e-15);
        assert!((p.amplitudes()[2] - re(h)).norm() < 1e-15);
        assert!((p.norm_sqr() - 1.0).abs() < 1e-15);

        let uu = symmetric_pair_state(Up, Up, &b).unwrap();
        assert_eq!(uu, PureState::from_config(&b, &[Up, Up]).unwrap());

        let m = antisymmetric_pair_state(Up, Down, &b).unwrap();
        assert!(p.inner(&m).unwrap().norm() < 1e-15);
    }

    #[test]
    fn three_site_w_state() {
        let b = spins(3);
        let w0 = bloch_state(&b, 0.0, Up, Down).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for cfg in ["up-down-down", "down-up-down", "down-down-up"] {
            let idx = b.index_of(&b.parse_config(cfg).unwrap()).unwrap();
            assert!((w0.amplitudes()[idx] - re(s)).norm() < 1e-15);
        }
        assert!((w0.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bloch_states_are_orthonormal() {
        let b = spins(5);
        let ks = ring_momenta(5);
        assert_eq!(ks.len(), 5);
        for (i, &k) in ks.iter().enumerate() {
            for (j, &q) in ks.iter().enumerate() {
                let a = bloch_state(&b, k, Up, Down).unwrap();
                let c = bloch_state(&b, q, Up, Down).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(&c).unwrap() - re(want)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn local_excitation_has_one_third_weight_on_each_w() {
        let b = spins(3);
        let dud = PureState::from_config(&b, &[Down, Up, Down]).unwrap();
        for k in ring_momenta(3) {
            let w = bloch_state(&b, k, Up, Down).unwrap();
            assert!((w.inner(&dud).unwrap().norm_sqr() - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn incommensurate_momentum_rejected() {
        let b = spins(3);
        assert!(matches!(bloch_state(&b, 1.0, Up, Down), Err(Error::Incommensurate { .. })));
        assert_eq!(momentum_index(-2.0 * PI / 3.0, 3).unwrap(), -1);
        assert_eq!(momentum_index(4.0 * PI / 3.0, 3).unwrap(), -1);
    }
}
