//! Small dense linear algebra: row-major matrices, products and least squares.

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `out = A x`.
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `A x` for a vector supported on `support` (values listed in the same order).
    pub fn mul_sparse(&self, support: &[usize], values: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                support.iter().zip(values).fold(T::zero(), |acc, (&j, &v)| acc + row[j] * v)
            })
            .collect()
    }

    /// `out = Aᵀ y`.
    pub fn t_mul_vec_into(&self, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.rows);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, &yi) in y.iter().enumerate() {
            if yi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * yi;
            }
        }
    }

    pub fn t_mul_vec(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.t_mul_vec_into(y, &mut out);
        out
    }

    /// `A Aᵀ`.
    pub fn gram_rows(&self) -> Self {
        let mut g = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Least squares `min ‖A[:, cols] z − y‖₂` by Householder QR.
/// Returns `None` when the selected columns are numerically rank deficient.
pub fn lstsq_columns<T: Real>(a: &Matrix<T>, cols: &[usize], y: &[T]) -> Option<Vec<T>> {
    let m = a.rows();
    let s = cols.len();
    if s == 0 {
        return Some(Vec::new());
    }
    if s > m {
        return None;
    }
    // column-major copy of the selected block
    let mut q = vec![T::zero(); m * s];
    for (c, &j) in cols.iter().enumerate() {
        for i in 0..m {
            q[c * m + i] = a.get(i, j);
        }
    }
    let mut rhs = y.to_vec();
    let mut scale = T::zero();
    for c in 0..s {
        let col = &mut q[c * m..(c + 1) * m];
        let alpha = norm2(&col[c..]);
        scale = scale.max(alpha);
        if alpha == T::zero() {
            return None;
        }
        let alpha = if col[c] > T::zero() { -alpha } else { alpha };
        col[c] = col[c] - alpha;
        let vnorm2 = dot(&col[c..], &col[c..]);
        let v: Vec<T> = col[c..].to_vec();
        col[c] = alpha;
        for x in col[c + 1..].iter_mut() {
            *x = T::zero();
        }
        let two = T::lit(2.0);
        if vnorm2 > T::zero() {
            for c2 in c + 1..s {
                let other = &mut q[c2 * m + c..(c2 + 1) * m];
                let f = two * dot(&v, other) / vnorm2;
                for (o, &vi) in other.iter_mut().zip(&v) {
                    *o = *o - f * vi;
                }
            }
            let f = two * dot(&v, &rhs[c..]) / vnorm2;
            for (o, &vi) in rhs[c..].iter_mut().zip(&v) {
                *o = *o - f * vi;
            }
        }
    }
    let tol = scale * T::epsilon() * T::from_usize_lossy(m.max(s)) * T::lit(10.0);
    let mut z = vec![T::zero(); s];
    for c in (0..s).rev() {
        let r = q[c * m + c];
        if r.abs() <= tol {
            return None;
        }
        let mut acc = rhs[c];
        for c2 in c + 1..s {
            acc = acc - q[c2 * m + c] * z[c2];
        }
        z[c] = acc / r;
    }
    Some(z)
}

/// Cholesky factor `L` (row-major, lower) of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s = s - l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= T::zero() {
                    return None;
                }
                l.set(i, i, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor.
pub fn cholesky_solve<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s = s - l.get(i, k) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s = s - l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_solves_overdetermined_consistent_system() {
        let a = Matrix::from_fn(5, 3, |i, j| ((i + 1) as f64).powi(j as i32));
        let z_true = [1.0, -2.0, 0.5];
        let y = a.mul_vec(&z_true);
        let z = lstsq_columns(&a, &[0, 1, 2], &y).unwrap();
        for (u, v) in z.iter().zip(&z_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn lstsq_detects_rank_deficiency() {
        let a = Matrix::from_fn(4, 2, |i, _| i as f64 + 1.0);
        assert!(lstsq_columns(&a, &[0, 1], &[1.0, 2.0, 3.0, 4.0]).is_none());
    }

    #[test]
    fn lstsq_matches_normal_equations() {
        let a = Matrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = [0.1, 0.9, 2.2, 2.8, 4.1, 5.2];
        let z = lstsq_columns(&a, &[0, 1], &y).unwrap();
        let g = a.transpose().gram_rows();
        let rhs = a.t_mul_vec(&y);
        let l = cholesky(&g).unwrap();
        let z2 = cholesky_solve(&l, &rhs);
        assert!((z[0] - z2[0]).abs() < 1e-10 && (z[1] - z2[1]).abs() < 1e-10);
    }

    #[test]
    fn transposed_product_agrees_with_transpose() {
        let a = Matrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 5.0);
        let y = [1.0, -1.0, 2.0];
        assert_eq!(a.t_mul_vec(&y), a.transpose().mul_vec(&y));
    }
}
