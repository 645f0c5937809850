//! Capon (MVDR) power estimates and a noise-floor estimate, used when the
//! MMSE design has to run on estimated powers.

use serde::{Deserialize, Serialize};

use super::mmse::PowerPrior;
use crate::error::{Error, Result};
use crate::geometry::virtual_steering_vector;
use crate::numerics::{hermitian_min_eigenvalue, svd, ComplexMatrix, C64};

const CONDITION_LIMIT: f64 = 1e12;
const LOADING: f64 = 1e-8;
/// Estimates below this fraction of the average diagonal power are floored.
const POWER_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseEstimator {
    /// Square root of the smallest eigenvalue of `Ẑ Ẑᴴ`, i.e. the smallest
    /// singular value of `Ẑ`.
    #[default]
    SmallestSingularValue,
    /// Smallest eigenvalue of the Hermitian part of `Ẑ`.
    SmallestEigenvalue,
}

/// `d̂_k = (v(θ̂_k)ᴴ Ẑ⁻¹ v(θ̂_k))⁻¹` plus a noise estimate.
pub fn estimate_powers_capon(z_avg: &ComplexMatrix, thetas: &[f64], noise: NoiseEstimator) -> Result<PowerPrior> {
    let n = z_avg.nrows();
    if z_avg.ncols() != n || n == 0 {
        return Err(Error::shape("square smoothed matrix", format!("{:?}", z_avg.shape())));
    }
    let decomposition = svd(z_avg)?;
    let s = &decomposition.singular_values;
    let trace = z_avg.trace().re.abs();
    let floor = POWER_FLOOR * (trace / n as f64).max(f64::MIN_POSITIVE);

    let mut z = z_avg.clone();
    let smin = *s.last().unwrap();
    if !(smin > 0.0) || s[0] / smin > CONDITION_LIMIT {
        let load = LOADING * trace / n as f64;
        for i in 0..n {
            z[(i, i)] += C64::new(load, 0.0);
        }
    }
    let inv = z.try_inverse().ok_or(Error::SingularMatrix)?;
    if inv.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularMatrix);
    }

    let d = thetas
        .iter()
        .map(|&t| {
            let v = virtual_steering_vector(n, t);
            let denom = (v.adjoint() * &inv * &v)[(0, 0)].re;
            let est = 1.0 / denom;
            if est.is_finite() && est > floor {
                est
            } else {
                floor
            }
        })
        .collect();

    let sigma2 = match noise {
        NoiseEstimator::SmallestSingularValue => smin,
        NoiseEstimator::SmallestEigenvalue => hermitian_min_eigenvalue(z_avg),
    };
    let sigma2 = if sigma2.is_finite() && sigma2 > floor { sigma2 } else { floor };
    Ok(PowerPrior::Estimated { d, sigma2 })
}
