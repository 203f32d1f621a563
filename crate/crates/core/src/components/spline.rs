//! Quadratic B-spline quasi-interpolants on `[-1, 1]` and `[-1, 1]²`.
//!
//! Samples sit at the nodes `t_i = -1 + 2i/(n-1)`, each node carrying a
//! quadratic B-spline `B((x - t_i)/h)` centred on it (knots at the node
//! midpoints). The coefficients `(-v_{i-1} + 10v_i - v_{i+1})/8` reproduce
//! quadratics exactly, so the sup error is `O(h³)` for smooth data. Values
//! outside the grid come from quadratic extrapolation, which keeps the
//! reproduction property up to the boundary.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Cardinal quadratic B-spline, supported on `[-1.5, 1.5]`.
pub fn bspline2<T: Real>(u: T) -> T {
    let a = u.abs();
    if a <= T::lit(0.5) {
        T::lit(0.75) - a * a
    } else if a < T::lit(1.5) {
        let s = T::lit(1.5) - a;
        T::lit(0.5) * s * s
    } else {
        T::zero()
    }
}

/// `∫_{-∞}^{u} B`.
pub fn bspline2_cdf<T: Real>(u: T) -> T {
    let six = T::lit(6.0);
    if u <= T::lit(-1.5) {
        T::zero()
    } else if u <= T::lit(-0.5) {
        let s = u + T::lit(1.5);
        s * s * s / six
    } else if u <= T::lit(0.5) {
        T::lit(0.5) + T::lit(0.75) * u - u * u * u / T::lit(3.0)
    } else if u < T::lit(1.5) {
        let s = T::lit(1.5) - u;
        T::one() - s * s * s / six
    } else {
        T::one()
    }
}

/// Basis layout shared by the 1-D and 2-D fits: basis `j` is centred on node `j - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis<T> {
    pub n: usize,
    pub h: T,
}

impl<T: Real> Basis<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Fit(format!("need at least 3 nodes per axis, got {n}")));
        }
        Ok(Self { n, h: T::lit(2.0 / (n - 1) as f64) })
    }

    /// Number of basis functions, `n + 2`.
    pub fn len(&self) -> usize {
        self.n + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: isize) -> T {
        T::lit(-1.0) + T::lit(i as f64) * self.h
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n as isize).map(|i| self.node(i)).collect()
    }

    /// Knot vector: the node midpoints, extended to cover every basis support.
    pub fn knots(&self) -> Vec<T> {
        (-2..=self.n as isize).map(|i| self.node(i) + T::lit(0.5) * self.h).collect()
    }

    /// `(first basis index, values)` of the at most 3 basis functions nonzero at `x`.
    pub fn active(&self, x: T) -> (usize, [T; 3]) {
        let pos = ((x + T::one()) / self.h).round().to_isize().unwrap_or(0).clamp(0, self.n as isize - 1);
        let mut vals = [T::zero(); 3];
        for (k, v) in vals.iter_mut().enumerate() {
            let node = pos - 1 + k as isize;
            *v = bspline2((x - self.node(node)) / self.h);
        }
        (pos as usize, vals)
    }

    /// `w_j = E[B_j]` under the uniform density on `[-1, 1]`.
    pub fn weights(&self) -> Vec<T> {
        (0..self.len())
            .map(|j| {
                let c = self.node(j as isize - 1);
                let half = T::lit(0.5) * self.h;
                half * (bspline2_cdf((T::one() - c) / self.h) - bspline2_cdf((-T::one() - c) / self.h))
            })
            .collect()
    }

    /// Coefficient map `c = A v` from node values to basis coefficients.
    pub fn operator(&self) -> Matrix<T> {
        let n = self.n;
        // ghost values v_{-1}, v_{-2} (and mirrored) by quadratic extrapolation, as rows over v
        let mut ext = Matrix::zeros(n + 4, n);
        for i in 0..n {
            ext.set(i + 2, i, T::one());
        }
        let three = T::lit(3.0);
        for j in 0..n {
            let v = three * ext.get(2, j) - three * ext.get(3, j) + ext.get(4, j);
            ext.set(1, j, v);
            let w = three * ext.get(n + 1, j) - three * ext.get(n, j) + ext.get(n - 1, j);
            ext.set(n + 2, j, w);
        }
        for j in 0..n {
            let v = three * ext.get(1, j) - three * ext.get(2, j) + ext.get(3, j);
            ext.set(0, j, v);
            let w = three * ext.get(n + 2, j) - three * ext.get(n + 1, j) + ext.get(n, j);
            ext.set(n + 3, j, w);
        }
        let eighth = T::lit(0.125);
        Matrix::from_fn(n + 2, n, |r, j| {
            // basis r sits on node r - 1, i.e. extended row r + 1
            (T::lit(10.0) * ext.get(r + 1, j) - ext.get(r, j) - ext.get(r + 2, j)) * eighth
        })
    }
}

/// Curve `Σ c_j B_j(x)` on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spline1<T> {
    pub basis: Basis<T>,
    pub coeffs: Vec<T>,
}

impl<T: Real> Spline1<T> {
    pub fn fit(values: &[T]) -> Result<Self> {
        let basis = Basis::new(values.len())?;
        let coeffs = basis.operator().mul_vec(values);
        Ok(Self { basis, coeffs })
    }

    pub fn eval(&self, x: T) -> T {
        let (j, b) = self.basis.active(x);
        (0..3).fold(T::zero(), |acc, k| acc + self.coeffs[j + k] * b[k])
    }

    /// Exact `E[s]` under the uniform density.
    pub fn mean(&self) -> T {
        self.basis.weights().iter().zip(&self.coeffs).fold(T::zero(), |a, (&w, &c)| a + w * c)
    }

    /// Subtracts a constant (the basis is a partition of unity on `[-1, 1]`).
    pub fn shift(&mut self, c: T) {
        for v in &mut self.coeffs {
            *v = *v - c;
        }
    }
}

/// Tensor-product surface `Σ C_ij B_i(x) B_j(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spline2<T> {
    pub basis: Basis<T>,
    pub coeffs: Matrix<T>,
}

impl<T: Real> Spline2<T> {
    /// `values[i][j]` is the sample at `(t_i, t_j)`.
    pub fn fit(values: &Matrix<T>) -> Result<Self> {
        if values.rows() != values.cols() {
            return Err(Error::Fit(format!("grid must be square, got {}x{}", values.rows(), values.cols())));
        }
        let basis = Basis::new(values.rows())?;
        let a = basis.operator();
        let n = basis.n;
        let m = basis.len();
        // C = A V Aᵀ
        let av = Matrix::from_fn(m, n, |i, j| (0..n).fold(T::zero(), |s, k| s + a.get(i, k) * values.get(k, j)));
        let coeffs = Matrix::from_fn(m, m, |i, j| (0..n).fold(T::zero(), |s, k| s + av.get(i, k) * a.get(j, k)));
        Ok(Self { basis, coeffs })
    }

    pub fn eval(&self, x: T, y: T) -> T {
        let (i0, bx) = self.basis.active(x);
        let (j0, by) = self.basis.active(y);
        let mut acc = T::zero();
        for (a, &u) in bx.iter().enumerate() {
            for (b, &v) in by.iter().enumerate() {
                acc = acc + u * v * self.coeffs.get(i0 + a, j0 + b);
            }
        }
        acc
    }

    /// Coefficients of `E_y s(·, y)`, a curve in `x`.
    pub fn mean_over_second(&self) -> Vec<T> {
        let w = self.basis.weights();
        (0..self.basis.len()).map(|i| (0..w.len()).fold(T::zero(), |s, j| s + self.coeffs.get(i, j) * w[j])).collect()
    }

    /// Coefficients of `E_x s(x, ·)`, a curve in `y`.
    pub fn mean_over_first(&self) -> Vec<T> {
        let w = self.basis.weights();
        (0..self.basis.len()).map(|j| (0..w.len()).fold(T::zero(), |s, i| s + self.coeffs.get(i, j) * w[i])).collect()
    }

    pub fn mean(&self) -> T {
        let w = self.basis.weights();
        self.mean_over_second().iter().zip(&w).fold(T::zero(), |a, (&c, &wi)| a + c * wi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Rule;

    fn nodes(n: usize) -> Vec<f64> {
        Basis::<f64>::new(n).unwrap().nodes()
    }

    #[test]
    fn reproduces_quadratics() {
        let f = |x: f64| 1.0 - 2.0 * x + 3.0 * x * x;
        let s = Spline1::fit(&nodes(7).iter().map(|&x| f(x)).collect::<Vec<_>>()).unwrap();
        for i in 0..=200 {
            let x = -1.0 + i as f64 / 100.0;
            assert!((s.eval(x) - f(x)).abs() < 1e-12);
        }
        assert!((s.mean() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn partition_of_unity_and_weights() {
        let b = Basis::<f64>::new(9).unwrap();
        for i in 0..=100 {
            let (_, v) = b.active(-1.0 + i as f64 / 50.0);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert!((b.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(b.knots().len(), b.len() + 1);
    }

    #[test]
    fn cdf_matches_quadrature() {
        let r = Rule::<f64>::composite(60, 4);
        // ∫_{-1.5}^{u} B on a grid of u
        for &u in &[-1.0, -0.2, 0.3, 1.1] {
            let len = u + 1.5;
            let num = len * r.expect(|t| bspline2(-1.5 + (t + 1.0) * 0.5 * len));
            assert!((num - bspline2_cdf(u)).abs() < 1e-6, "{u}");
        }
    }

    #[test]
    fn tensor_fit_reproduces_bilinear_terms() {
        let n = 6;
        let t = nodes(n);
        let v = Matrix::from_fn(n, n, |i, j| 4.0 * t[i] * t[j] + t[i] * t[i]);
        let s = Spline2::fit(&v).unwrap();
        assert!((s.eval(0.37, -0.81) - (4.0 * 0.37 * -0.81 + 0.37 * 0.37)).abs() < 1e-12);
        assert!((s.mean() - 1.0 / 3.0).abs() < 1e-12);
    }
}
