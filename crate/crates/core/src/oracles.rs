//! Closed-form MSE of the selection and averaging estimators, and the
//! Monte-Carlo estimators used to check them.

use rayon::prelude::*;
use serde::Serialize;

use crate::coarray::{nominal_coarray_matrix, nominal_coarray_vector, spatial_smooth};
use crate::combining::apply_combiner;
use crate::error::{Error, Result};
use crate::geometry::{phase, ArrayGeometry, Combiner, LagIndexMap};
use crate::numerics::{frobenius_sq, ComplexVector, C64};
use crate::simulation::{generate_snapshots_with, sample_autocorrelation_of, trial_rng, SourceScene};
use crate::stats::RunningStats;

/// Trials per rayon work item. Results are merged in chunk order.
pub const CHUNK: usize = 256;

fn check_q(q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidScene("Q must be at least 1".into()));
    }
    Ok(q as f64)
}

/// MSE of any single entry of `r̂`: `(1ᵀd + σ²)² / Q`.
pub fn mse_entry_selection(scene: &SourceScene, q: usize) -> Result<f64> {
    let s = scene.total_power() + scene.noise_power();
    Ok(s * s / check_q(q)?)
}

pub fn mse_vector_selection(scene: &SourceScene, g: &ArrayGeometry, q: usize) -> Result<f64> {
    Ok(g.num_lags() as f64 * mse_entry_selection(scene, q)?)
}

pub fn mse_matrix_selection(scene: &SourceScene, g: &ArrayGeometry, q: usize) -> Result<f64> {
    let lv = g.num_virtual() as f64;
    Ok(lv * lv * mse_entry_selection(scene, q)?)
}

/// MSE of the averaged estimate at lag `n`.
pub fn mse_entry_averaging(scene: &SourceScene, map: &LagIndexMap, g: &ArrayGeometry, n: i64, q: usize) -> Result<f64> {
    let q = check_q(q)?;
    let set = map.get(n)?;
    let size = set.len() as f64;
    let (sum_d, s2) = (scene.total_power(), scene.noise_power());
    let mut cross = 0.0;
    for &i in set {
        for &j in set {
            let diff = (g.inner_position(i) - g.inner_position(j)) as f64;
            let z: C64 = scene
                .thetas()
                .iter()
                .zip(scene.powers())
                .map(|(t, d)| phase(*t, diff) * *d)
                .sum();
            cross += z.norm_sqr();
        }
    }
    Ok(((2.0 * s2 * sum_d + s2 * s2) / size + cross / (size * size)) / q)
}

/// `e_n` for every lag, ordered from `1 - L'`.
pub fn mse_entries_averaging(scene: &SourceScene, map: &LagIndexMap, g: &ArrayGeometry, q: usize) -> Result<Vec<f64>> {
    map.lags().map(|n| mse_entry_averaging(scene, map, g, n, q)).collect()
}

pub fn mse_vector_averaging(scene: &SourceScene, map: &LagIndexMap, g: &ArrayGeometry, q: usize) -> Result<f64> {
    Ok(mse_entries_averaging(scene, map, g, q)?.iter().sum())
}

/// Column `m` of `Z` covers lags `1-m ..= L'-m`, so lag `n` appears `L' - |n|` times.
pub fn mse_matrix_averaging(scene: &SourceScene, map: &LagIndexMap, g: &ArrayGeometry, q: usize) -> Result<f64> {
    let lv = g.num_virtual() as i64;
    let e = mse_entries_averaging(scene, map, g, q)?;
    Ok(map.lags().zip(&e).map(|(n, e)| (lv - n.abs()) as f64 * e).sum())
}

/// Lower bound on `e - e_n`.
pub fn beta_bound(scene: &SourceScene, map: &LagIndexMap, n: i64, q: usize) -> Result<f64> {
    let q = check_q(q)?;
    let size = map.get(n)?.len() as f64;
    let s2 = scene.noise_power();
    Ok((size - 1.0) / (size * q) * (2.0 * s2 * scene.total_power() + s2 * s2))
}

pub fn beta_bounds(scene: &SourceScene, map: &LagIndexMap, q: usize) -> Result<Vec<f64>> {
    map.lags().map(|n| beta_bound(scene, map, n, q)).collect()
}

/// The closed forms as a swappable set, so a harness can be pointed at a
/// deliberately wrong implementation.
pub trait MseFormulas: Sync {
    fn entry_selection(&self, scene: &SourceScene, q: usize) -> Result<f64> {
        mse_entry_selection(scene, q)
    }
    fn vector_selection(&self, scene: &SourceScene, g: &ArrayGeometry, q: usize) -> Result<f64> {
        Ok(g.num_lags() as f64 * self.entry_selection(scene, q)?)
    }
    fn matrix_selection(&self, scene: &SourceScene, g: &ArrayGeometry, q: usize) -> Result<f64> {
        let lv = g.num_virtual() as f64;
        Ok(lv * lv * self.entry_selection(scene, q)?)
    }
    fn entry_averaging(&self, scene: &SourceScene, map: &LagIndexMap, g: &ArrayGeometry, n: i64, q: usize) -> Result<f64> {
        mse_entry_averaging(scene, map, g, n, q)
    }
    fn vector_averaging(&self, scene: &SourceScene, map: &LagIndexMap, g: &ArrayGeometry, q: usize) -> Result<f64> {
        map.lags().map(|n| self.entry_averaging(scene, map, g, n, q)).sum()
    }
    fn matrix_averaging(&self, scene: &SourceScene, map: &LagIndexMap, g: &ArrayGeometry, q: usize) -> Result<f64> {
        let lv = g.num_virtual() as i64;
        map.lags()
            .map(|n| Ok((lv - n.abs()) as f64 * self.entry_averaging(scene, map, g, n, q)?))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm;

impl MseFormulas for ClosedForm {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Empirical {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl From<&RunningStats> for Empirical {
    fn from(s: &RunningStats) -> Self {
        Empirical {
            mean: s.mean(),
            std_error: s.std_error(),
            trials: s.count(),
        }
    }
}

impl Empirical {
    /// `|mean - value|` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.mean - value).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MseReport {
    pub e_entry: f64,
    pub e_n: Vec<f64>,
    pub e_r_sel: f64,
    pub e_r_avg: f64,
    pub e_z_sel: f64,
    pub e_z_avg: f64,
    pub beta: Vec<f64>,
    pub empirical_r_sel: Option<Empirical>,
    pub empirical_r_avg: Option<Empirical>,
    pub empirical_z_sel: Option<Empirical>,
    pub empirical_z_avg: Option<Empirical>,
}

impl MseReport {
    pub fn closed_form(scene: &SourceScene, g: &ArrayGeometry, map: &LagIndexMap, q: usize) -> Result<Self> {
        let e_n = mse_entries_averaging(scene, map, g, q)?;
        let lv = g.num_virtual() as i64;
        Ok(MseReport {
            e_entry: mse_entry_selection(scene, q)?,
            e_r_sel: mse_vector_selection(scene, g, q)?,
            e_r_avg: e_n.iter().sum(),
            e_z_sel: mse_matrix_selection(scene, g, q)?,
            e_z_avg: map.lags().zip(&e_n).map(|(n, e)| (lv - n.abs()) as f64 * e).sum(),
            e_n,
            beta: beta_bounds(scene, map, q)?,
            empirical_r_sel: None,
            empirical_r_avg: None,
            empirical_z_sel: None,
            empirical_z_avg: None,
        })
    }
}

/// What squared error a Monte-Carlo run measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MseTarget {
    /// `|[r]_j - [r̂]_j|²` on the raw vectorized autocorrelation.
    RawEntry(usize),
    /// `|r_co(n) - r̂_co(n)|²` after combining.
    Lag(i64),
    /// `‖r_co - r̂_co‖²`.
    Vector,
    /// `‖Z - Ẑ‖²_F`.
    Matrix,
}

/// Runs `trials` independent snapshot draws for a fixed scene and feeds each
/// `r̂` to `measure`, which returns one value per tracked quantity.
/// Trial `t` uses [`trial_rng`]`(seed, t)`, so results do not depend on the
/// number of worker threads.
pub fn monte_carlo<F>(
    scene: &SourceScene,
    g: &ArrayGeometry,
    q: usize,
    trials: usize,
    seed: u64,
    width: usize,
    measure: F,
) -> Result<Vec<RunningStats>>
where
    F: Fn(&ComplexVector) -> Vec<f64> + Sync,
{
    check_q(q)?;
    scene.check_against(g)?;
    let chunks: Vec<Vec<RunningStats>> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![RunningStats::default(); width];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = trial_rng(seed, t as u64);
                let y = generate_snapshots_with(scene, g, q, &mut rng);
                let (_, r_hat) = sample_autocorrelation_of(&y);
                for (a, v) in acc.iter_mut().zip(measure(&r_hat)) {
                    a.push(v);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![RunningStats::default(); width];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.merge(c);
        }
    }
    Ok(total)
}

/// Mean squared error and its standard error for one target and combiner.
pub fn empirical_mse(
    target: MseTarget,
    combiner: &Combiner,
    scene: &SourceScene,
    g: &ArrayGeometry,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<Empirical> {
    if trials < 2 {
        return Err(Error::config("trials", "at least two trials are needed for a standard error"));
    }
    let lv = g.num_virtual();
    let r_co = nominal_coarray_vector(scene, lv);
    let z = nominal_coarray_matrix(scene, lv);
    let (_, r) = crate::simulation::nominal_autocorrelation(scene, g);
    match target {
        MseTarget::RawEntry(j) if j >= r.len() => {
            return Err(Error::shape(format!("index below {}", r.len()), j.to_string()))
        }
        MseTarget::Lag(n) if n.unsigned_abs() as usize >= lv => {
            return Err(Error::LagOutOfRange {
                lag: n,
                max: lv as i64 - 1,
            })
        }
        _ => {}
    }
    apply_combiner(combiner, &r)?;
    let stats = monte_carlo(scene, g, q, trials, seed, 1, |r_hat| {
        let value = match target {
            MseTarget::RawEntry(j) => (r[j] - r_hat[j]).norm_sqr(),
            MseTarget::Lag(n) => {
                let est = apply_combiner(combiner, r_hat).expect("shape checked");
                let idx = (n + lv as i64 - 1) as usize;
                (r_co[idx] - est[idx]).norm_sqr()
            }
            MseTarget::Vector => {
                let est = apply_combiner(combiner, r_hat).expect("shape checked");
                (&r_co - est).norm_squared()
            }
            MseTarget::Matrix => {
                let est = apply_combiner(combiner, r_hat).expect("shape checked");
                frobenius_sq(&(&z - spatial_smooth(&est).expect("odd length")))
            }
        };
        vec![value]
    })?;
    Ok(Empirical::from(&stats[0]))
}
