//! Compressed-row copies of generator matrices; model operators are dense
//! but mostly zero, and the integrators only ever need M·x.

use nalgebra::{DMatrix, DVector};

use crate::operator::C64;

#[derive(Clone, Debug)]
pub(crate) struct Csr {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    pub(crate) fn from_dense(m: &DMatrix<C64>, scale: C64) -> Self {
        let n = m.nrows();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for i in 0..n {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v * scale);
                }
            }
            row_start.push(cols.len());
        }
        Self { n, row_start, cols, vals }
    }

    pub(crate) fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// out = M·x
    pub(crate) fn mul_vec(&self, x: &DVector<C64>, out: &mut DVector<C64>) {
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_start[i]..self.row_start[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            out[i] = acc;
        }
    }

    /// out = M·X for a dense square X.
    pub(crate) fn mul_mat(&self, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let d = x.ncols();
        for j in 0..d {
            let col = x.column(j);
            let col = col.as_slice();
            let mut dst = out.column_mut(j);
            for i in 0..self.n {
                let mut acc = C64::new(0.0, 0.0);
                for p in self.row_start[i]..self.row_start[i + 1] {
                    acc += self.vals[p] * col[self.cols[p]];
                }
                dst[i] = acc;
            }
        }
    }
}
