//! Dense complex operators over a [`Basis`].

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{Basis, Level, LevelSet, TensorBasis};
use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// A square complex matrix tied to the basis it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    basis: Basis,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn new(basis: impl Into<Basis>, matrix: DMatrix<C64>) -> Result<Self> {
        let basis = basis.into();
        if !matrix.is_square() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() != basis.dim() {
            return Err(Error::Dimension {
                expected: basis.dim(),
                found: matrix.nrows(),
            });
        }
        Ok(Self { basis, matrix })
    }

    pub fn zeros(basis: impl Into<Basis>) -> Self {
        let basis = basis.into();
        let d = basis.dim();
        Self { basis, matrix: DMatrix::zeros(d, d) }
    }

    pub fn identity(basis: impl Into<Basis>) -> Self {
        let basis = basis.into();
        let d = basis.dim();
        Self { basis, matrix: DMatrix::identity(d, d) }
    }

    /// Builds an operator from a real or complex row-major table.
    pub fn from_rows(basis: impl Into<Basis>, rows: &[C64]) -> Result<Self> {
        let basis = basis.into();
        let d = basis.dim();
        if rows.len() != d * d {
            return Err(Error::Dimension { expected: d * d, found: rows.len() });
        }
        Self::new(basis, DMatrix::from_row_slice(d, d, rows))
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { basis: self.basis.clone(), matrix: self.matrix.adjoint() }
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        let m = (&self.matrix + self.matrix.adjoint()) * re(0.5);
        Self { basis: self.basis.clone(), matrix: m }
    }

    /// (M − M†)/2
    pub fn antihermitian_part(&self) -> Self {
        let m = (&self.matrix - self.matrix.adjoint()) * re(0.5);
        Self { basis: self.basis.clone(), matrix: m }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// max |M − M†| ≤ tol · max(1, ‖M‖_F).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.frobenius_norm().max(1.0);
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().all(|z| z.norm() <= tol * scale)
    }

    /// Largest row sum of absolute values; bounds the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { basis: self.basis.clone(), matrix: &self.matrix * c }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(re(x))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    fn check_same_basis(&self, other: &Self) {
        assert!(
            self.basis == other.basis,
            "operator basis mismatch ({} vs {})",
            self.basis.dim(),
            other.basis.dim()
        );
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.check_same_basis(rhs);
        Operator { basis: self.basis.clone(), matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.check_same_basis(rhs);
        Operator { basis: self.basis.clone(), matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.check_same_basis(rhs);
        Operator { basis: self.basis.clone(), matrix: &self.matrix * &rhs.matrix }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { basis: self.basis, matrix: -self.matrix }
    }
}

impl std::iter::Sum for Operator {
    fn sum<It: Iterator<Item = Operator>>(mut iter: It) -> Operator {
        let first = iter.next().expect("sum of an empty operator list");
        iter.fold(first, |acc, x| acc + x)
    }
}

/// Single-site basis for a level set.
pub fn site_basis(levels: &LevelSet) -> TensorBasis {
    TensorBasis::new(1, levels.clone()).expect("one site always fits")
}

/// Single-atom `|to><from|`.
pub fn transition(levels: &LevelSet, to: Level, from: Level) -> Result<Operator> {
    let b = site_basis(levels);
    let mut op = Operator::zeros(b);
    op.matrix[(levels.index(to)?, levels.index(from)?)] = re(1.0);
    Ok(op)
}

/// Single-atom projector `|l><l|`.
pub fn projector(levels: &LevelSet, l: Level) -> Result<Operator> {
    transition(levels, l, l)
}

/// Pauli matrices on a two-level set `[a, b]`, with `sigma_z = |a><a| − |b><b|`.
pub fn pauli(levels: &LevelSet) -> Result<[Operator; 3]> {
    if levels.dim() != 2 {
        return Err(Error::LevelSet("Pauli matrices need exactly two levels".into()));
    }
    let b = site_basis(levels);
    let z = C64::new(0.0, 0.0);
    let o = re(1.0);
    let x = Operator::from_rows(b.clone(), &[z, o, o, z])?;
    let y = Operator::from_rows(b.clone(), &[z, -I, I, z])?;
    let zz = Operator::from_rows(b, &[o, z, z, -o])?;
    Ok([x, y, zz])
}

/// Tensor product with site 0 of `a` leftmost: entry ((i,k),(j,l)) = a[i,j]·b[k,l].
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let ta = a.basis.as_tensor()?;
    let tb = b.basis.as_tensor()?;
    if ta.levels() != tb.levels() {
        return Err(Error::BasisMismatch("kron of different level sets".into()));
    }
    let basis = TensorBasis::new(ta.n_sites() + tb.n_sites(), ta.levels().clone())?;
    let m = a.matrix.kronecker(&b.matrix);
    Operator::new(basis, m)
}

/// Identity on every site except `site`, where `op` acts.
pub fn embed(op: &Operator, site: usize, basis: &TensorBasis) -> Result<Operator> {
    embed_product(&[(site, op)], basis)
}

/// Product of single-site operators on distinct sites, identity elsewhere.
pub fn embed_product(factors: &[(usize, &Operator)], basis: &TensorBasis) -> Result<Operator> {
    let d = basis.site_dim();
    let n = basis.n_sites();
    for (k, &(site, op)) in factors.iter().enumerate() {
        if site >= n {
            return Err(Error::SiteOutOfRange { site, n_sites: n });
        }
        if op.dim() != d {
            return Err(Error::Dimension { expected: d, found: op.dim() });
        }
        if let Basis::Tensor(t) = op.basis() {
            if t.levels() != basis.levels() {
                return Err(Error::BasisMismatch("single-site level set differs".into()));
            }
        }
        if factors[..k].iter().any(|&(s, _)| s == site) {
            return Err(Error::BasisMismatch(format!("site {site} appears twice")));
        }
    }

    let total = basis.total_dim();
    let stride: Vec<usize> = (0..n).map(|s| d.pow((n - 1 - s) as u32)).collect();
    let mut m = DMatrix::<C64>::zeros(total, total);
    for col in 0..total {
        // Expand the column configuration through each factor in turn.
        let mut terms: Vec<(usize, C64)> = vec![(col, re(1.0))];
        for &(site, op) in factors {
            let from = basis.digit(col, site);
            let mut next = Vec::with_capacity(terms.len() * d);
            for &(row, amp) in &terms {
                let base = row - from * stride[site];
                for to in 0..d {
                    let e = op.matrix[(to, from)];
                    if e != C64::new(0.0, 0.0) {
                        next.push((base + to * stride[site], amp * e));
                    }
                }
            }
            terms = next;
        }
        for (row, amp) in terms {
            m[(row, col)] += amp;
        }
    }
    Operator::new(basis.clone(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Level::*;

    fn spin() -> LevelSet {
        LevelSet::new(&[Up, Down]).unwrap()
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = Operator::identity(site_basis(&spin()));
        let i4 = kron(&i2, &i2).unwrap();
        assert_eq!(i4.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn kron_orders_site_zero_leftmost() {
        let [sx, _, _] = pauli(&spin()).unwrap();
        let i2 = Operator::identity(site_basis(&spin()));
        let op = kron(&sx, &i2).unwrap();
        // column 0 is |up up>; σx on site 0 sends it to |down up> = index 2
        assert_eq!(op.get(2, 0), re(1.0));
        assert_eq!(op.get(1, 0), re(0.0));
    }

    #[test]
    fn kron_dimension() {
        let ls = LevelSet::new(&[One, Zero, G]).unwrap();
        let i3 = Operator::identity(site_basis(&ls));
        assert_eq!(kron(&i3, &i3).unwrap().dim(), 9);
    }

    #[test]
    fn embed_matches_kron() {
        let [sx, sy, _] = pauli(&spin()).unwrap();
        let i2 = Operator::identity(site_basis(&spin()));
        let b2 = TensorBasis::new(2, spin()).unwrap();
        assert_eq!(embed(&sx, 0, &b2).unwrap(), kron(&sx, &i2).unwrap());
        assert_eq!(embed(&sx, 1, &b2).unwrap(), kron(&i2, &sx).unwrap());
        assert_eq!(
            embed_product(&[(0, &sy), (1, &sx)], &b2).unwrap(),
            kron(&sy, &sx).unwrap()
        );
        assert_eq!(embed(&i2, 1, &b2).unwrap(), Operator::identity(b2.clone()));
        assert!(matches!(
            embed(&sx, 2, &b2),
            Err(Error::SiteOutOfRange { site: 2, n_sites: 2 })
        ));
    }

    #[test]
    fn hermitian_and_antihermitian_parts_recompose() {
        let b = Basis::named(&["a", "b"]);
        let m = Operator::from_rows(b, &[re(1.0), C64::new(2.0, 1.0), re(-3.0), C64::new(0.0, -0.5)])
            .unwrap();
        let back = &m.hermitian_part() + &m.antihermitian_part();
        assert_eq!(back, m);
        assert!(m.hermitian_part().is_hermitian(0.0));
    }
}
