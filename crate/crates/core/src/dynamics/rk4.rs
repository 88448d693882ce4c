//! Classical fixed-step RK4 over nalgebra vectors and matrices.

use nalgebra::{DMatrix, DVector};

use crate::operator::C64;

pub(crate) trait Vector: Clone {
    fn zeros_like(&self) -> Self;
    /// self = a·x + self
    fn add_scaled(&mut self, a: f64, x: &Self);
    fn assign(&mut self, x: &Self);
}

impl Vector for DMatrix<C64> {
    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        for (y, x) in self.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *y += x * a;
        }
    }
    fn assign(&mut self, x: &Self) {
        self.copy_from(x);
    }
}

impl Vector for DVector<C64> {
    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        for (y, x) in self.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *y += x * a;
        }
    }
    fn assign(&mut self, x: &Self) {
        self.copy_from(x);
    }
}

/// Stage buffers reused across steps.
pub(crate) struct Rk4<T: Vector> {
    k1: T,
    k2: T,
    k3: T,
    k4: T,
    tmp: T,
}

impl<T: Vector> Rk4<T> {
    pub(crate) fn new(like: &T) -> Self {
        let z = like.zeros_like();
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// One step of size `h` for the autonomous system y′ = f(y).
    pub(crate) fn step<F: FnMut(&T, &mut T)>(&mut self, y: &mut T, h: f64, f: &mut F) {
        f(y, &mut self.k1);
        self.tmp.assign(y);
        self.tmp.add_scaled(0.5 * h, &self.k1);
        f(&self.tmp, &mut self.k2);
        self.tmp.assign(y);
        self.tmp.add_scaled(0.5 * h, &self.k2);
        f(&self.tmp, &mut self.k3);
        self.tmp.assign(y);
        self.tmp.add_scaled(h, &self.k3);
        f(&self.tmp, &mut self.k4);
        y.add_scaled(h / 6.0, &self.k1);
        y.add_scaled(h / 3.0, &self.k2);
        y.add_scaled(h / 3.0, &self.k3);
        y.add_scaled(h / 6.0, &self.k4);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_on_rotation() {
        // y′ = −i y, y(1) = e^{−i}
        let exact = C64::from_polar(1.0, -1.0);
        let err = |n: usize| {
            let mut y = DVector::from_element(1, C64::new(1.0, 0.0));
            let mut rk = Rk4::new(&y);
            let mut f = |x: &DVector<C64>, out: &mut DVector<C64>| out[0] = x[0] * C64::new(0.0, -1.0);
            for _ in 0..n {
                rk.step(&mut y, 1.0 / n as f64, &mut f);
            }
            (y[0] - exact).norm()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }
}
