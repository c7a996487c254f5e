//! Distance and divergence measures between opinions.
//!
//! [`rmsd`] is the root-mean-square deviation that drives the consensual
//! weighting rule; it is a true metric on the probability simplex.
//! [`kl_divergence`] is the (asymmetric) Kullback-Leibler divergence used by
//! the BMS baseline pool.

use thiserror::Error;

use crate::opinion::Opinion;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceError {
    #[error("opinions have different dimensions: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("divergence undefined: component {index} has mass {mass} but zero reference mass")]
    UndefinedDivergence { index: usize, mass: f64 },
}

/// Root-mean-square deviation `sqrt(sum_k (a_k - b_k)^2 / z)`.
///
/// Symmetric, zero exactly when `a == b`, and bounded by `sqrt(2/z)` on
/// probability vectors (attained by disjoint point masses).
pub fn rmsd(a: &Opinion, b: &Opinion) -> Result<f64, DistanceError> {
    check_dims(a, b)?;
    Ok(rmsd_unchecked(a.as_slice(), b.as_slice()))
}

pub(crate) fn rmsd_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let sum_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum_sq / a.len() as f64).sqrt()
}

/// Kullback-Leibler divergence `sum_k a_k ln(a_k / b_k)` in nats.
///
/// Terms with `a_k = 0` contribute nothing (the `0 ln 0` convention); a
/// positive `a_k` over a zero `b_k` makes the divergence undefined, which is
/// why the BMS pool clamps zeros before calling this. Not symmetric.
pub fn kl_divergence(a: &Opinion, b: &Opinion) -> Result<f64, DistanceError> {
    check_dims(a, b)?;
    let mut total = 0.0;
    for (index, (&x, &y)) in a.as_slice().iter().zip(b.as_slice()).enumerate() {
        if x > 0.0 {
            if y == 0.0 {
                return Err(DistanceError::UndefinedDivergence { index, mass: x });
            }
            total += x * (x / y).ln();
        }
    }
    Ok(total)
}

fn check_dims(a: &Opinion, b: &Opinion) -> Result<(), DistanceError> {
    if a.len() != b.len() {
        return Err(DistanceError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn op(v: &[f64]) -> Opinion {
        Opinion::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rmsd_golden_values() {
        assert_abs_diff_eq!(
            rmsd(&op(&[0.9, 0.1]), &op(&[0.05, 0.95])).unwrap(),
            0.85,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            rmsd(&op(&[0.9, 0.1]), &op(&[0.2, 0.8])).unwrap(),
            0.7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rmsd_of_identical_is_zero() {
        let a = op(&[0.3, 0.2, 0.5]);
        assert_eq!(rmsd(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn rmsd_dimension_mismatch() {
        let a = op(&[0.5, 0.5]);
        let b = op(&[0.2, 0.3, 0.5]);
        assert_eq!(
            rmsd(&a, &b),
            Err(DistanceError::DimensionMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn kl_examples() {
        let a = op(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&a, &a).unwrap(), 0.0);
        // 0.5 ln 2 + 0.5 ln(2/3)
        assert_abs_diff_eq!(
            kl_divergence(&op(&[0.5, 0.5]), &op(&[0.25, 0.75])).unwrap(),
            0.1438,
            epsilon = 1e-4
        );
        // 0.98 ln 99
        assert_abs_diff_eq!(
            kl_divergence(&op(&[0.99, 0.01]), &op(&[0.01, 0.99])).unwrap(),
            0.98 * 99f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn kl_undefined_on_unsupported_mass() {
        let a = op(&[0.5, 0.5]);
        let b = op(&[1.0, 0.0]);
        assert_eq!(
            kl_divergence(&a, &b),
            Err(DistanceError::UndefinedDivergence {
                index: 1,
                mass: 0.5
            })
        );
        // 0 ln 0 convention: zero mass over zero reference is fine
        let c = op(&[0.0, 1.0]);
        let d = op(&[0.0, 1.0]);
        assert_eq!(kl_divergence(&c, &d).unwrap(), 0.0);
    }
}
