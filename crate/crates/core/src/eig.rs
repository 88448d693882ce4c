//! Eigenvalues of general (non-normal) complex matrices.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{Error, Result};
use crate::operator::{Operator, C64};

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Eigenvalues (rad/us) sorted by imaginary part descending, then real part
/// ascending, with the residual ‖Mv − λv‖₂ of a unit eigenvector for each.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Smallest distance between any two eigenvalues.
    pub fn min_gap(&self) -> f64 {
        let ev = &self.eigenvalues;
        let mut best = f64::INFINITY;
        for i in 0..ev.len() {
            for j in i + 1..ev.len() {
                best = best.min((ev[i] - ev[j]).norm());
            }
        }
        best
    }

    /// max Im(λ) − min Im(λ).
    pub fn im_spread(&self) -> f64 {
        let (lo, hi) = self
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| (lo.min(z.im), hi.max(z.im)));
        hi - lo
    }

    pub fn sum(&self) -> C64 {
        self.eigenvalues.iter().sum()
    }
}

fn spectral_order(a: &C64, b: &C64) -> Ordering {
    b.im.total_cmp(&a.im).then(a.re.total_cmp(&b.re))
}

/// QR iteration stalls on some exactly structured matrices (real symmetric
/// with a zero eigenvalue is one); a complex diagonal shift breaks the
/// symmetry without changing the eigenvectors. Returns Q and T with the shift
/// removed from diag(T).
fn schur_with_shifts(m: &DMatrix<C64>, norm: f64, budget: usize) -> Option<(DMatrix<C64>, DMatrix<C64>)> {
    const SHIFTS: [(f64, f64); 4] = [(0.0, 0.0), (0.1, 0.1), (0.37, 0.23), (-0.21, 0.41)];
    SHIFTS.iter().find_map(|&(re, im)| {
        let sigma = C64::new(re, im) * norm;
        let mut a = m.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += sigma;
        }
        let (q, mut t) = Schur::try_new(a, f64::EPSILON, budget)?.unpack();
        for i in 0..t.nrows() {
            t[(i, i)] -= sigma;
        }
        Some((q, t))
    })
}

pub fn eig_general(m: &Operator, tol: f64) -> Result<Spectrum> {
    eig_matrix(m.matrix(), tol)
}

/// Complex Schur factorization M = Q T Q†; eigenvalues are diag(T) and
/// eigenvectors come from back-substitution in T. Fails rather than return
/// pairs whose residual exceeds `tol · ‖M‖_F`.
pub fn eig_matrix(m: &DMatrix<C64>, tol: f64) -> Result<Spectrum> {
    let n = m.nrows();
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    if n == 0 {
        return Ok(Spectrum { eigenvalues: vec![], residuals: vec![] });
    }
    let norm = m.norm();
    if norm == 0.0 {
        return Ok(Spectrum { eigenvalues: vec![C64::new(0.0, 0.0); n], residuals: vec![0.0; n] });
    }
    let budget = 200 * n.max(10);
    let (q, t) = schur_with_shifts(m, norm, budget).ok_or(Error::EigenNoConvergence { iterations: budget })?;

    // keeps |d|² representable in the complex division below
    let tiny = (f64::EPSILON * norm).max(1e-150);
    let mut pairs: Vec<(C64, f64)> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = DVector::<C64>::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: C64 = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if d.norm() < tiny {
                d = C64::new(tiny, 0.0);
            }
            y[i] = -s / d;
            let yn = y.norm();
            if yn > 1e100 {
                y /= C64::new(yn, 0.0);
            }
        }
        let v = &q * y;
        let v = &v / C64::new(v.norm(), 0.0);
        let r = (m * &v - &v * lambda).norm();
        if !r.is_finite() || r > tol * norm {
            return Err(Error::EigenNoConvergence { iterations: budget });
        }
        pairs.push((lambda, r));
    }
    pairs.sort_by(|a, b| spectral_order(&a.0, &b.0));
    Ok(Spectrum {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mat(n: usize, rows: &[C64]) -> DMatrix<C64> {
        DMatrix::from_row_slice(n, n, rows)
    }

    fn single_atom(w: f64, gamma: f64) -> DMatrix<C64> {
        mat(2, &[c(0.0, 0.0), c(w, 0.0), c(w, 0.0), c(0.0, -gamma / 2.0)])
    }

    #[test]
    fn diagonal_input() {
        let z = c(0.0, 0.0);
        let m = mat(3, &[c(1.0, 0.0), z, z, z, c(0.0, -1.0), z, z, z, c(2.0, 3.0)]);
        let s = eig_matrix(&m, DEFAULT_TOL).unwrap();
        assert_eq!(s.eigenvalues, vec![c(2.0, 3.0), c(1.0, 0.0), c(0.0, -1.0)]);
        assert!(s.residuals.iter().all(|&r| r < 1e-14));
    }

    #[test]
    fn exceptional_point_double_root() {
        // λ = −iγ/4 ± sqrt(w² − γ²/16), coalescing at w = γ/4
        let gamma = 1.3;
        let s = eig_matrix(&single_atom(gamma / 4.0, gamma), DEFAULT_TOL).unwrap();
        for z in &s.eigenvalues {
            assert!((z - c(0.0, -gamma / 4.0)).norm() < 1e-7, "{z}");
        }
    }

    #[test]
    fn unbroken_phase_roots() {
        let gamma = 0.7;
        let s = eig_matrix(&single_atom(gamma / 2.0, gamma), DEFAULT_TOL).unwrap();
        let r = gamma * 3f64.sqrt() / 4.0;
        // equal imaginary parts up to rounding, so order by real part here
        let mut ev = s.eigenvalues.clone();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - c(-r, -gamma / 4.0)).norm() < 1e-13, "{ev:?}");
        assert!((ev[1] - c(r, -gamma / 4.0)).norm() < 1e-13, "{ev:?}");
    }

    #[test]
    fn jordan_block_keeps_residual_contract() {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let m = mat(3, &[c(0.5, 0.0), o, z, z, c(0.5, 0.0), o, z, z, c(0.5, 0.0)]);
        let s = eig_matrix(&m, DEFAULT_TOL).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.eigenvalues.iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn symmetric_matrix_with_zero_eigenvalue() {
        // unshifted complex QR stalls on this one
        let (a, d) = (0.8885765876316734, -6.283185307179586);
        let z = c(0.0, 0.0);
        let m = mat(3, &[z, c(a, 0.0), z, c(a, 0.0), c(d, 0.0), c(a, 0.0), z, c(a, 0.0), z]);
        let s = eig_matrix(&m, DEFAULT_TOL).unwrap();
        let mut re: Vec<f64> = s.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let r = (d * d / 4.0 + 2.0 * a * a).sqrt();
        for (got, want) in re.iter().zip([d / 2.0 - r, 0.0, d / 2.0 + r]) {
            assert!((got - want).abs() < 1e-12, "{re:?}");
        }
    }
}
