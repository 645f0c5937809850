//! Applying combiners to estimated autocorrelations, and everything needed
//! to design the MMSE combiner.

pub mod expectation;
pub mod io;
pub mod mmse;
pub mod power;

pub use expectation::{
    build_factor_v, build_factor_v_entrywise, build_g_e, build_h_e, build_vtilde_e, factor_a, gamma,
    identity_vec, w_moments, ExpectationMatrices, Powers,
};
pub use io::{read_combiner, write_combiner};
pub use mmse::{
    design_mmse_combiner, expectation_matrices, solve_mmse_combiner, MmseDesign, MmseDesignInputs, PowerPrior,
    RankDeficiencyWarning,
};
pub use power::{estimate_powers_capon, NoiseEstimator};

use crate::error::{Error, Result};
use crate::geometry::{Combiner, CombinerKind};
use crate::numerics::ComplexVector;

/// Coarray autocorrelation estimate from `r̂`.
///
/// Selection and averaging return `Eᵀ r̂`. The MMSE combiner solves the
/// normal equations of `min E‖Eᴴ r̂ - r_co‖²`, so it is applied as `Eᴴ r̂`.
pub fn apply_combiner(e: &Combiner, r_hat: &ComplexVector) -> Result<ComplexVector> {
    let m = e.matrix();
    if m.nrows() != r_hat.len() {
        return Err(Error::shape(
            format!("autocorrelation vector of length {}", m.nrows()),
            format!("length {}", r_hat.len()),
        ));
    }
    Ok(match e.kind() {
        CombinerKind::Mmse => m.ad_mul(r_hat),
        CombinerKind::Selection | CombinerKind::Averaging => m.tr_mul(r_hat),
    })
}
