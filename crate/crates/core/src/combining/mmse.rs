//! Designing the MMSE combiner from the expectation matrices.

use serde::{Deserialize, Serialize};

use super::expectation::{lookup_range, ExpectationMatrices, Powers};
use crate::distributions::CharacteristicIntegralTable;
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Combiner, CombinerKind};
use crate::numerics::{svd, ComplexMatrix};

/// Singular values at or below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// What the receiver knows about the powers when designing the combiner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PowerPrior {
    KnownPowers { d: Vec<f64>, sigma2: f64 },
    /// `d_k / d_1` for `k = 2..K` and `σ² / d_1`.
    KnownRatios { ratios: Vec<f64>, noise_ratio: f64 },
    Estimated { d: Vec<f64>, sigma2: f64 },
}

impl PowerPrior {
    pub fn validate(&self) -> Result<()> {
        let (vals, noise) = match self {
            PowerPrior::KnownPowers { d, sigma2 } | PowerPrior::Estimated { d, sigma2 } => (d, *sigma2),
            PowerPrior::KnownRatios { ratios, noise_ratio } => (ratios, *noise_ratio),
        };
        if vals.iter().chain(std::iter::once(&noise)).any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidScene("power prior values must be positive".into()));
        }
        Ok(())
    }

    pub fn num_sources(&self) -> usize {
        match self {
            PowerPrior::KnownPowers { d, .. } | PowerPrior::Estimated { d, .. } => d.len(),
            PowerPrior::KnownRatios { ratios, .. } => ratios.len() + 1,
        }
    }

    /// Powers fed to the design; ratios are taken relative to `d_1 = 1`.
    pub fn powers(&self) -> Powers {
        match self {
            PowerPrior::KnownPowers { d, sigma2 } | PowerPrior::Estimated { d, sigma2 } => {
                Powers::new(d.clone(), *sigma2)
            }
            PowerPrior::KnownRatios { ratios, noise_ratio } => {
                let mut d = vec![1.0];
                d.extend_from_slice(ratios);
                Powers::new(d, *noise_ratio)
            }
        }
    }
}

/// Everything the MMSE design depends on.
#[derive(Debug, Clone)]
pub struct MmseDesignInputs<'a> {
    pub geometry: &'a ArrayGeometry,
    pub sources: usize,
    pub prior: &'a CharacteristicIntegralTable,
    pub power: PowerPrior,
    pub snapshots: usize,
    pub selection: &'a Combiner,
}

/// Raised (not as an error) when `G_E` is rank deficient and the
/// least-squares branch was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficiencyWarning {
    pub rank: usize,
    pub dimension: usize,
}

#[derive(Debug, Clone)]
pub struct MmseDesign {
    pub combiner: Combiner,
    pub rank: usize,
    /// `‖G_E e_i - c_i‖₂` per column.
    pub residuals: Vec<f64>,
}

impl MmseDesign {
    pub fn rank_deficiency(&self) -> Option<RankDeficiencyWarning> {
        let dimension = self.combiner.matrix().nrows();
        (self.rank < dimension).then_some(RankDeficiencyWarning {
            rank: self.rank,
            dimension,
        })
    }
}

/// Solves `G_E E = H_E E_sel` column by column with the minimum-norm
/// pseudo-inverse; rank-deficient systems fall back to least squares.
pub fn solve_mmse_combiner(g_e: &ComplexMatrix, h_e: &ComplexMatrix, e_sel: &Combiner) -> Result<MmseDesign> {
    let n = g_e.nrows();
    if g_e.ncols() != n || h_e.shape() != (n, n) || e_sel.matrix().nrows() != n {
        return Err(Error::shape(
            format!("G_E, H_E of {n}x{n} and E_sel with {n} rows"),
            format!(
                "G_E {:?}, H_E {:?}, E_sel {:?}",
                g_e.shape(),
                h_e.shape(),
                e_sel.matrix().shape()
            ),
        ));
    }
    let rhs = h_e * e_sel.matrix();
    let decomposition = svd(g_e)?;
    let rank = decomposition.rank(RANK_TOLERANCE);
    let e = decomposition.pseudo_solve(&rhs, RANK_TOLERANCE);
    let residual = g_e * &e - &rhs;
    let residuals = residual.column_iter().map(|c| c.norm()).collect();
    Ok(MmseDesign {
        combiner: Combiner::new(e, CombinerKind::Mmse),
        rank,
        residuals,
    })
}

pub fn expectation_matrices(inputs: &MmseDesignInputs<'_>) -> Result<ExpectationMatrices> {
    if inputs.power.num_sources() != inputs.sources {
        return Err(Error::InvalidScene(format!(
            "power prior describes {} sources, design expects {}",
            inputs.power.num_sources(),
            inputs.sources
        )));
    }
    if inputs.sources >= inputs.geometry.num_virtual() {
        return Err(Error::InvalidScene(format!(
            "K = {} must be below L' = {}",
            inputs.sources,
            inputs.geometry.num_virtual()
        )));
    }
    inputs.power.validate()?;
    let lookup = inputs.prior.integer_lookup(lookup_range(inputs.geometry))?;
    ExpectationMatrices::build(inputs.geometry, &inputs.power.powers(), &lookup, inputs.snapshots)
}

pub fn design_mmse_combiner(inputs: &MmseDesignInputs<'_>) -> Result<MmseDesign> {
    let m = expectation_matrices(inputs)?;
    solve_mmse_combiner(&m.g_e, &m.h_e, inputs.selection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DoAPriorDistribution;
    use crate::geometry::{averaging_combiner, coarray_lag_sets, make_coprime_array, selection_combiner, Picker};
    use crate::numerics::{max_abs, C64};

    #[test]
    fn identity_system_returns_rhs() {
        let g = make_coprime_array(2, 3).unwrap();
        let sel = selection_combiner(&coarray_lag_sets(&g), Picker::Smallest);
        let eye = ComplexMatrix::identity(36, 36);
        let h = ComplexMatrix::from_fn(36, 36, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let design = solve_mmse_combiner(&eye, &h, &sel).unwrap();
        assert!(max_abs(&(design.combiner.matrix() - &h * sel.matrix())) < 1e-10);
        assert_eq!(design.rank, 36);
        assert!(design.rank_deficiency().is_none());
    }

    #[test]
    fn rank_deficient_system_warns_and_solves_least_squares() {
        let g = make_coprime_array(2, 3).unwrap();
        let sel = selection_combiner(&coarray_lag_sets(&g), Picker::Smallest);
        let mut gm = ComplexMatrix::identity(36, 36);
        gm[(35, 35)] = C64::new(0.0, 0.0);
        let design = solve_mmse_combiner(&gm, &ComplexMatrix::identity(36, 36), &sel).unwrap();
        assert_eq!(
            design.rank_deficiency(),
            Some(RankDeficiencyWarning {
                rank: 35,
                dimension: 36
            })
        );
        // the minimum-norm solution leaves the null direction untouched
        assert!(design.combiner.matrix().row(35).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = make_coprime_array(2, 3).unwrap();
        let sel = selection_combiner(&coarray_lag_sets(&g), Picker::Smallest);
        let bad = ComplexMatrix::identity(10, 10);
        assert!(matches!(solve_mmse_combiner(&bad, &bad, &sel), Err(Error::ShapeMismatch { .. })));
    }

    fn design_for(powers: PowerPrior, q: usize) -> MmseDesign {
        let g = make_coprime_array(2, 3).unwrap();
        let sel = selection_combiner(&coarray_lag_sets(&g), Picker::Smallest);
        let table = CharacteristicIntegralTable::new(DoAPriorDistribution::uniform(-0.7, 0.5).unwrap());
        let k = powers.num_sources();
        design_mmse_combiner(&MmseDesignInputs {
            geometry: &g,
            sources: k,
            prior: &table,
            power: powers,
            snapshots: q,
            selection: &sel,
        })
        .unwrap()
    }

    #[test]
    fn power_scaling_leaves_combiner_unchanged() {
        let base = design_for(PowerPrior::KnownPowers { d: vec![10.0, 3.0], sigma2: 1.0 }, 10);
        let scaled = design_for(PowerPrior::KnownPowers { d: vec![100.0, 30.0], sigma2: 10.0 }, 10);
        let ratios = design_for(PowerPrior::KnownRatios { ratios: vec![0.3], noise_ratio: 0.1 }, 10);
        let scale = max_abs(base.combiner.matrix());
        assert!(max_abs(&(base.combiner.matrix() - scaled.combiner.matrix())) < 1e-8 * scale);
        assert!(max_abs(&(base.combiner.matrix() - ratios.combiner.matrix())) < 1e-8 * scale);
    }

    #[test]
    fn full_rank_design_has_tiny_residuals() {
        let design = design_for(PowerPrior::KnownPowers { d: vec![10.0, 10.0], sigma2: 1.0 }, 10);
        assert_eq!(design.rank, 36);
        let g = make_coprime_array(2, 3).unwrap();
        let sel = selection_combiner(&coarray_lag_sets(&g), Picker::Smallest);
        let table = CharacteristicIntegralTable::new(DoAPriorDistribution::uniform(-0.7, 0.5).unwrap());
        let m = expectation_matrices(&MmseDesignInputs {
            geometry: &g,
            sources: 2,
            prior: &table,
            power: PowerPrior::KnownPowers { d: vec![10.0, 10.0], sigma2: 1.0 },
            snapshots: 10,
            selection: &sel,
        })
        .unwrap();
        let c = &m.h_e * sel.matrix();
        for (col, res) in design.residuals.iter().enumerate() {
            assert!(*res < 1e-8 * c.column(col).norm().max(1e-300));
        }
    }

    #[test]
    fn selection_and_averaging_targets_coincide() {
        let g = make_coprime_array(2, 3).unwrap();
        let map = coarray_lag_sets(&g);
        let sel = selection_combiner(&map, Picker::Smallest);
        let avg = averaging_combiner(&map);
        let table = CharacteristicIntegralTable::new(DoAPriorDistribution::full_range_uniform());
        let m = expectation_matrices(&MmseDesignInputs {
            geometry: &g,
            sources: 3,
            prior: &table,
            power: PowerPrior::KnownPowers { d: vec![10.0; 3], sigma2: 1.0 },
            snapshots: 10,
            selection: &sel,
        })
        .unwrap();
        let a = &m.h_e * sel.matrix();
        let b = &m.h_e * avg.matrix();
        assert!(max_abs(&(a - b)) < 1e-10 * max_abs(&m.h_e));
    }

    #[test]
    fn mismatched_source_count_rejected() {
        let g = make_coprime_array(2, 3).unwrap();
        let sel = selection_combiner(&coarray_lag_sets(&g), Picker::Smallest);
        let table = CharacteristicIntegralTable::new(DoAPriorDistribution::full_range_uniform());
        let r = design_mmse_combiner(&MmseDesignInputs {
            geometry: &g,
            sources: 2,
            prior: &table,
            power: PowerPrior::KnownPowers { d: vec![1.0], sigma2: 1.0 },
            snapshots: 10,
            selection: &sel,
        });
        assert!(r.is_err());
    }
}
