use rand::Rng;

use crate::linalg::Matrix;
use crate::scalar::Real;

/// `m × d` matrix with i.i.d. entries `±1/√m`. Row `j` is the direction `v_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliEnsemble<T> {
    pub matrix: Matrix<T>,
}

pub fn draw_ensemble<T: Real, R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> BernoulliEnsemble<T> {
    assert!(m >= 1 && d >= 1, "ensemble needs m, d >= 1");
    let a = T::one() / T::from_usize_lossy(m).sqrt();
    let mut data = Vec::with_capacity(m * d);
    let mut word = 0u64;
    for k in 0..m * d {
        if k % 64 == 0 {
            word = rng.gen();
        }
        data.push(if word >> (k % 64) & 1 == 1 { a } else { -a });
    }
    BernoulliEnsemble { matrix: Matrix::from_vec(m, d, data) }
}

impl<T: Real> BernoulliEnsemble<T> {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn direction(&self, j: usize) -> &[T] {
        self.matrix.row(j)
    }

    /// Ensemble restricted to the given columns (used for `V_P`).
    pub fn restrict(&self, cols: &[usize]) -> Self {
        Self { matrix: self.matrix.select_columns(cols) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use crate::rng;

    #[test]
    fn entries_and_column_norms() {
        let v = draw_ensemble::<f64, _>(4, 10, &mut rng::stream(1, 1));
        assert!(v.matrix.as_slice().iter().all(|&x| x == 0.5 || x == -0.5));
        for j in 0..10 {
            assert!((norm2(&v.matrix.column(j)) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn signs_are_balanced() {
        let (m, d) = (100, 1000);
        let v = draw_ensemble::<f64, _>(m, d, &mut rng::stream(2, 1));
        let mean = v.matrix.as_slice().iter().sum::<f64>() / (m * d) as f64;
        let bound = 3.0 * (1.0 / (m as f64).sqrt()) / ((m * d) as f64).sqrt();
        assert!(mean.abs() <= bound, "{mean} vs {bound}");
    }

    #[test]
    fn reproducible_from_seed() {
        let a = draw_ensemble::<f32, _>(7, 9, &mut rng::stream(3, 4));
        let b = draw_ensemble::<f32, _>(7, 9, &mut rng::stream(3, 4));
        assert_eq!(a, b);
    }
}
