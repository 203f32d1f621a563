use crate::error::{Error, Result};
use crate::model::QueryOracle;
use crate::rng;
use crate::scalar::Real;
use crate::sensing::BernoulliEnsemble;

/// Linear measurements of an unknown gradient or Hessian row.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementVector<T> {
    pub values: Vec<T>,
    pub step: T,
    pub base_point: Vec<T>,
    pub restriction: Option<Vec<usize>>,
}

/// Central differences `(f(x + μv_j) − f(x − μv_j)) / 2μ` for every row `v_j` of `v`.
///
/// With a restriction `P`, probes are `(x ± μv_j)_P`: coordinates outside `P`
/// are set to zero. `key` selects the noise streams, so repeated calls with
/// the same key see the same noise.
pub fn gradient_measurements<T: Real>(
    oracle: &QueryOracle<T>,
    x: &[T],
    v: &BernoulliEnsemble<T>,
    mu: T,
    restriction: Option<&[usize]>,
    resamples: usize,
    key: u64,
) -> Result<MeasurementVector<T>> {
    let d = oracle.d();
    if x.len() != d || v.cols() != d {
        return Err(Error::Dimension(format!("point {} / ensemble {} / model {d}", x.len(), v.cols())));
    }
    if !(mu > T::zero()) {
        return Err(Error::Config(format!("step size must be positive, got {mu}")));
    }
    if let Some(p) = restriction {
        if p.is_empty() {
            return Err(Error::Config("restriction set is empty".into()));
        }
    }
    let mut inside = vec![restriction.is_none(); d];
    if let Some(p) = restriction {
        for &i in p {
            inside[i] = true;
        }
    }
    let two_mu = mu + mu;
    let mut probe = vec![T::zero(); d];
    let mut values = Vec::with_capacity(v.rows());
    for j in 0..v.rows() {
        let dir = v.direction(j);
        let mut eval = |sign: T, tag: u64| -> Result<T> {
            for i in 0..d {
                probe[i] = if inside[i] { x[i] + sign * mu * dir[i] } else { T::zero() };
            }
            oracle
                .query_keyed(&probe, resamples, rng::key(&[key, j as u64, tag]))
                .map_err(|e| Error::ProbeOutOfDomain { probe: j, source: Box::new(e) })
        };
        let plus = eval(T::one(), 0)?;
        let minus = eval(-T::one(), 1)?;
        values.push((plus - minus) / two_mu);
    }
    Ok(MeasurementVector { values, step: mu, base_point: x.to_vec(), restriction: restriction.map(<[usize]>::to_vec) })
}

/// Row `q` of the Hessian seen through `V'`: `((∇̂f(x + μ1 v'_j) − ∇̂f(x))_q / μ1)_j`.
pub fn hessian_row_measurements<T: Real>(
    grad_at_x: &[T],
    grads_at_offsets: &[Vec<T>],
    mu1: T,
    q: usize,
) -> Result<MeasurementVector<T>> {
    let d = grad_at_x.len();
    if q >= d {
        return Err(Error::IndexOutOfRange { index: q, size: d });
    }
    if let Some(g) = grads_at_offsets.iter().find(|g| g.len() != d) {
        return Err(Error::Dimension(format!("offset gradient has length {}, expected {d}", g.len())));
    }
    if !(mu1 > T::zero()) {
        return Err(Error::Config(format!("step size must be positive, got {mu1}")));
    }
    let values = grads_at_offsets.iter().map(|g| (g[q] - grad_at_x[q]) / mu1).collect();
    Ok(MeasurementVector { values, step: mu1, base_point: Vec::new(), restriction: None })
}
