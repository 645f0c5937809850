//! Monte-Carlo experiment runners: NMSE CDFs, NMSE and DoA RMSE versus
//! sample support, the closed-form MSE check and single-trial spectra.

mod config;
mod output;

pub use config::{ExperimentConfig, PowerMode};
pub use output::{
    write_cdf_csv, write_csv, write_nmse_csv, write_oracle_csv, write_rmse_csv, write_spectrum_csv, Metadata, PAIRING,
};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::coarray::{estimate_doas, music_spectrum, nominal_coarray_matrix, spatial_smooth, MusicResult};
use crate::combining::{
    apply_combiner, build_g_e, build_h_e, build_vtilde_e, estimate_powers_capon, expectation::lookup_range,
    solve_mmse_combiner, ExpectationMatrices, Powers,
};
use crate::distributions::{CharacteristicIntegralTable, IntegerLookup};
use crate::error::Result;
use crate::geometry::{
    averaging_combiner, coarray_lag_sets, selection_combiner, ArrayGeometry, Combiner, CombinerKind, LagIndexMap,
};
use crate::numerics::{frobenius_sq, ComplexMatrix};
use crate::oracles::{
    beta_bounds, monte_carlo, ClosedForm, Empirical, MseFormulas, MseReport,
};
use crate::simulation::{generate_snapshots_with, sample_autocorrelation_of, trial_rng, SourceScene};
use crate::stats::RunningStats;

/// One combiner's outcome on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub q: usize,
    pub trial: usize,
    pub seed: u64,
    pub combiner: CombinerKind,
    /// `‖Z - Ẑ‖²_F / ‖Z‖²_F`.
    pub nmse: f64,
    /// Sorted truth, paired positionally with `estimates`.
    pub truth: Vec<f64>,
    pub estimates: Vec<f64>,
    pub squared_errors: Vec<f64>,
    /// MUSIC found fewer than `K` minima.
    pub padded: bool,
    /// Closed-form expected NMSE for this trial's directions, where one exists.
    pub closed_form_nmse: Option<f64>,
}

impl TrialRecord {
    /// Mean squared DoA error over the sources, in rad².
    pub fn doa_mse(&self) -> f64 {
        if self.squared_errors.is_empty() {
            0.0
        } else {
            self.squared_errors.iter().sum::<f64>() / self.squared_errors.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrialOptions {
    pub doas: bool,
    pub closed_form: bool,
}

/// Per-run state shared by all trials.
pub struct Experiment {
    cfg: ExperimentConfig,
    map: LagIndexMap,
    selection: Combiner,
    averaging: Combiner,
    table: CharacteristicIntegralTable,
    lookup: Option<IntegerLookup>,
    /// `(H_E, Ṽ_E)` for the configured powers.
    expectations: Option<(ComplexMatrix, ComplexMatrix)>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let g = &cfg.geometry;
        let map = coarray_lag_sets(g);
        let selection = selection_combiner(&map, cfg.picker);
        let averaging = averaging_combiner(&map);
        let table = CharacteristicIntegralTable::new(cfg.prior.clone());
        let needs_mmse = cfg.combiners.contains(&CombinerKind::Mmse);
        let lookup = if needs_mmse {
            Some(table.integer_lookup(lookup_range(g))?)
        } else {
            None
        };
        let expectations = match (&lookup, cfg.power_mode) {
            (Some(lookup), PowerMode::Oracle | PowerMode::Ratios) => {
                let powers = design_powers(&cfg);
                Some((build_h_e(g, &powers, lookup), build_vtilde_e(g, &powers, lookup)))
            }
            _ => None,
        };
        Ok(Experiment {
            cfg,
            map,
            selection,
            averaging,
            table,
            lookup,
            expectations,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.cfg.geometry
    }

    pub fn lag_map(&self) -> &LagIndexMap {
        &self.map
    }

    pub fn prior_table(&self) -> &CharacteristicIntegralTable {
        &self.table
    }

    /// MMSE combiner for `Q` snapshots with the configured powers, if the
    /// power mode allows designing it ahead of the trials.
    pub fn fixed_mmse_combiner(&self, q: usize) -> Result<Option<Combiner>> {
        match &self.expectations {
            Some((h, vt)) => {
                let g_e = build_g_e(h, vt, q)?;
                Ok(Some(solve_mmse_combiner(&g_e, h, &self.selection)?.combiner))
            }
            None => Ok(None),
        }
    }

    fn estimated_mmse_combiner(&self, z_avg: &ComplexMatrix, q: usize) -> Result<Combiner> {
        let grid = self.cfg.grid();
        let thetas = estimate_doas(z_avg, self.cfg.sources, &grid)?.thetas;
        let prior = estimate_powers_capon(z_avg, &thetas, self.cfg.noise_estimator)?;
        let lookup = self.lookup.as_ref().expect("lookup built when mmse is requested");
        let m = ExpectationMatrices::build(self.geometry(), &prior.powers(), lookup, q)?;
        Ok(solve_mmse_combiner(&m.g_e, &m.h_e, &self.selection)?.combiner)
    }

    fn scene_for(&self, thetas: Vec<f64>) -> Result<SourceScene> {
        SourceScene::equal_power(thetas, self.cfg.source_power(), self.cfg.noise_power())
    }

    /// Directions first, then snapshots, so trial `t` sees the same
    /// directions for every `Q`.
    fn draw(&self, q: usize, trial: usize) -> Result<(SourceScene, ComplexMatrix)> {
        let mut rng = trial_rng(self.cfg.seed, trial as u64);
        let thetas = self.cfg.prior.sample_doas(self.cfg.sources, &mut rng);
        let scene = self.scene_for(thetas)?;
        let y = generate_snapshots_with(&scene, self.geometry(), q, &mut rng);
        Ok((scene, y))
    }

    fn trial(&self, q: usize, trial: usize, mmse: Option<&Combiner>, opts: TrialOptions) -> Result<Vec<TrialRecord>> {
        let (scene, y) = self.draw(q, trial)?;
        let (_, r_hat) = sample_autocorrelation_of(&y);
        let lv = self.geometry().num_virtual();
        let z = nominal_coarray_matrix(&scene, lv);
        let z_norm = frobenius_sq(&z);
        let mut truth = scene.thetas().to_vec();
        truth.sort_by(f64::total_cmp);
        let grid = self.cfg.grid();

        let closed = if opts.closed_form {
            Some(MseReport::closed_form(&scene, self.geometry(), &self.map, q)?)
        } else {
            None
        };

        let smooth = |e: &Combiner| -> Result<ComplexMatrix> { spatial_smooth(&apply_combiner(e, &r_hat)?) };
        let z_avg = smooth(&self.averaging)?;

        let mut out = Vec::with_capacity(self.cfg.combiners.len());
        for &kind in &self.cfg.combiners {
            let z_hat = match kind {
                CombinerKind::Selection => smooth(&self.selection)?,
                CombinerKind::Averaging => z_avg.clone(),
                CombinerKind::Mmse => match mmse {
                    Some(e) => smooth(e)?,
                    None => smooth(&self.estimated_mmse_combiner(&z_avg, q)?)?,
                },
            };
            let nmse = frobenius_sq(&(&z - &z_hat)) / z_norm;
            let (estimates, squared_errors, padded) = if opts.doas {
                let est = estimate_doas(&z_hat, self.cfg.sources, &grid)?;
                let errs = est.thetas.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).collect();
                (est.thetas, errs, est.padded)
            } else {
                (Vec::new(), Vec::new(), false)
            };
            let closed_form_nmse = closed.as_ref().and_then(|c| match kind {
                CombinerKind::Selection => Some(c.e_z_sel / z_norm),
                CombinerKind::Averaging => Some(c.e_z_avg / z_norm),
                CombinerKind::Mmse => None,
            });
            out.push(TrialRecord {
                q,
                trial,
                seed: self.cfg.seed,
                combiner: kind,
                nmse,
                truth: truth.clone(),
                estimates,
                squared_errors,
                padded,
                closed_form_nmse,
            });
        }
        Ok(out)
    }

    /// All trials at one sample support, ordered by trial then by the
    /// configured combiner order.
    pub fn run_trials(&self, q: usize, opts: TrialOptions) -> Result<Vec<TrialRecord>> {
        let mmse = if self.cfg.combiners.contains(&CombinerKind::Mmse) {
            self.fixed_mmse_combiner(q)?
        } else {
            None
        };
        let per_trial: Vec<Vec<TrialRecord>> = (0..self.cfg.trials)
            .into_par_iter()
            .map(|t| self.trial(q, t, mmse.as_ref(), opts))
            .collect::<Result<_>>()?;
        Ok(per_trial.into_iter().flatten().collect())
    }

    /// MUSIC spectrum of trial 0 at `cfg.snapshots`, using the first
    /// configured combiner.
    pub fn spectrum(&self) -> Result<(SourceScene, CombinerKind, MusicResult)> {
        let q = self.cfg.snapshots;
        let kind = self.cfg.combiners[0];
        let (scene, y) = self.draw(q, 0)?;
        let (_, r_hat) = sample_autocorrelation_of(&y);
        let z_avg = spatial_smooth(&apply_combiner(&self.averaging, &r_hat)?)?;
        let combiner = match kind {
            CombinerKind::Selection => self.selection.clone(),
            CombinerKind::Averaging => self.averaging.clone(),
            CombinerKind::Mmse => match self.fixed_mmse_combiner(q)? {
                Some(e) => e,
                None => self.estimated_mmse_combiner(&z_avg, q)?,
            },
        };
        let z_hat = spatial_smooth(&apply_combiner(&combiner, &r_hat)?)?;
        let music = music_spectrum(&z_hat, self.cfg.sources, &self.cfg.grid())?;
        Ok((scene, kind, music))
    }
}

fn design_powers(cfg: &ExperimentConfig) -> Powers {
    match cfg.power_mode {
        PowerMode::Ratios => {
            let d = cfg.source_power();
            Powers::new(vec![1.0; cfg.sources], cfg.noise_power() / d)
        }
        _ => cfg.powers(),
    }
}

/// Records grouped per combiner, each in trial order.
pub fn by_combiner(records: &[TrialRecord]) -> BTreeMap<CombinerKind, Vec<&TrialRecord>> {
    let mut map: BTreeMap<CombinerKind, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.combiner).or_default().push(r);
    }
    map
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfRow {
    pub combiner: CombinerKind,
    pub nmse: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone)]
pub struct CdfResult {
    pub records: Vec<TrialRecord>,
    pub rows: Vec<CdfRow>,
}

pub fn run_cdf_experiment(cfg: &ExperimentConfig) -> Result<CdfResult> {
    let exp = Experiment::new(cfg.clone())?;
    let records = exp.run_trials(cfg.snapshots, TrialOptions::default())?;
    let grouped = by_combiner(&records);
    let mut rows = Vec::new();
    for kind in &cfg.combiners {
        let mut values: Vec<f64> = grouped[kind].iter().map(|r| r.nmse).collect();
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        rows.extend(values.into_iter().enumerate().map(|(i, nmse)| CdfRow {
            combiner: *kind,
            nmse,
            cdf: (i + 1) as f64 / n,
        }));
    }
    Ok(CdfResult { records, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseRow {
    pub q: usize,
    pub combiner: CombinerKind,
    pub mean_nmse: f64,
    pub stderr: f64,
    /// Mean closed-form NMSE over the same directions; absent for MMSE.
    pub closed_form: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult<R> {
    /// One block of records per `Q`, in `q_list` order.
    pub records: Vec<Vec<TrialRecord>>,
    pub rows: Vec<R>,
}

pub fn run_nmse_vs_q(cfg: &ExperimentConfig) -> Result<SweepResult<NmseRow>> {
    let exp = Experiment::new(cfg.clone())?;
    let mut blocks = Vec::new();
    let mut rows = Vec::new();
    for &q in &cfg.q_list {
        let records = exp.run_trials(
            q,
            TrialOptions {
                doas: false,
                closed_form: true,
            },
        )?;
        let grouped = by_combiner(&records);
        for kind in &cfg.combiners {
            let group = &grouped[kind];
            let stats: RunningStats = group.iter().map(|r| r.nmse).collect();
            let closed: Option<RunningStats> = group.iter().map(|r| r.closed_form_nmse).collect();
            rows.push(NmseRow {
                q,
                combiner: *kind,
                mean_nmse: stats.mean(),
                stderr: if stats.count() > 1 { stats.std_error() } else { 0.0 },
                closed_form: closed.map(|c| c.mean()),
            });
        }
        blocks.push(records);
    }
    Ok(SweepResult { records: blocks, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseRow {
    pub q: usize,
    pub combiner: CombinerKind,
    pub rmse_deg: f64,
    pub padded_trials: usize,
}

/// RMSE in degrees: square root of the mean over trials and sources.
pub fn rmse_degrees<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> f64 {
    let (sum, count) = records.into_iter().fold((0.0, 0usize), |(s, n), r| {
        (s + r.squared_errors.iter().sum::<f64>(), n + r.squared_errors.len())
    });
    (sum / count.max(1) as f64).sqrt().to_degrees()
}

pub fn run_rmse_vs_q(cfg: &ExperimentConfig) -> Result<SweepResult<RmseRow>> {
    let exp = Experiment::new(cfg.clone())?;
    let mut blocks = Vec::new();
    let mut rows = Vec::new();
    for &q in &cfg.q_list {
        let records = exp.run_trials(
            q,
            TrialOptions {
                doas: true,
                closed_form: false,
            },
        )?;
        let grouped = by_combiner(&records);
        for kind in &cfg.combiners {
            let group = &grouped[kind];
            rows.push(RmseRow {
                q,
                combiner: *kind,
                rmse_deg: rmse_degrees(group.iter().copied()),
                padded_trials: group.iter().filter(|r| r.padded).count(),
            });
        }
        blocks.push(records);
    }
    Ok(SweepResult { records: blocks, rows })
}

/// Z-score limit for the Monte-Carlo assertions.
pub const ORACLE_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub scene: SourceScene,
    pub rows: Vec<CheckRow>,
}

impl OracleCheck {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub fn run_oracle_check(cfg: &ExperimentConfig) -> Result<OracleCheck> {
    run_oracle_check_with(cfg, &ClosedForm)
}

/// Every closed-form MSE against one shared Monte-Carlo run at `Q = cfg.snapshots`,
/// plus the two gap bounds.
pub fn run_oracle_check_with(cfg: &ExperimentConfig, formulas: &dyn MseFormulas) -> Result<OracleCheck> {
    cfg.validate()?;
    let g = &cfg.geometry;
    let q = cfg.snapshots;
    let map = coarray_lag_sets(g);
    let sel = selection_combiner(&map, cfg.picker);
    let avg = averaging_combiner(&map);
    let mut rng = trial_rng(cfg.seed, u64::MAX);
    let scene = SourceScene::equal_power(
        cfg.prior.sample_doas(cfg.sources, &mut rng),
        cfg.source_power(),
        cfg.noise_power(),
    )?;
    let lv = g.num_virtual();
    let (_, r) = crate::simulation::nominal_autocorrelation(&scene, g);
    let r_co = crate::coarray::nominal_coarray_vector(&scene, lv);
    let z = nominal_coarray_matrix(&scene, lv);
    let l2 = r.len();

    // columns: raw entries, vector/matrix for sel, per-lag/vector/matrix for avg
    let stats = monte_carlo(&scene, g, q, cfg.oracle_trials, cfg.seed, l2 + 2 + r_co.len() + 2, |r_hat| {
        let mut v: Vec<f64> = (0..l2).map(|j| (r[j] - r_hat[j]).norm_sqr()).collect();
        let est_sel = apply_combiner(&sel, r_hat).expect("shape");
        let est_avg = apply_combiner(&avg, r_hat).expect("shape");
        v.push((&r_co - &est_sel).norm_squared());
        v.push(frobenius_sq(&(&z - spatial_smooth(&est_sel).expect("odd"))));
        v.extend(r_co.iter().zip(est_avg.iter()).map(|(a, b)| (a - b).norm_sqr()));
        v.push((&r_co - &est_avg).norm_squared());
        v.push(frobenius_sq(&(&z - spatial_smooth(&est_avg).expect("odd"))));
        v
    })?;

    let mut rows = Vec::new();
    let mut push = |check: String, closed: f64, s: &RunningStats| {
        let emp = Empirical::from(s);
        let z_score = emp.z_score(closed);
        rows.push(CheckRow {
            check,
            closed_form: closed,
            empirical: emp.mean,
            std_error: emp.std_error,
            z_score,
            pass: z_score < ORACLE_SIGMAS,
        });
    };
    let e = formulas.entry_selection(&scene, q)?;
    for j in 0..l2 {
        push(format!("entry_selection[j={j}]"), e, &stats[j]);
    }
    push("vector_selection".into(), formulas.vector_selection(&scene, g, q)?, &stats[l2]);
    push("matrix_selection".into(), formulas.matrix_selection(&scene, g, q)?, &stats[l2 + 1]);
    for (idx, n) in map.lags().enumerate() {
        push(
            format!("entry_averaging[n={n}]"),
            formulas.entry_averaging(&scene, &map, g, n, q)?,
            &stats[l2 + 2 + idx],
        );
    }
    let base = l2 + 2 + r_co.len();
    push("vector_averaging".into(), formulas.vector_averaging(&scene, &map, g, q)?, &stats[base]);
    push("matrix_averaging".into(), formulas.matrix_averaging(&scene, &map, g, q)?, &stats[base + 1]);

    let beta = beta_bounds(&scene, &map, q)?;
    let lvi = lv as i64;
    let gap_r = formulas.vector_selection(&scene, g, q)? - formulas.vector_averaging(&scene, &map, g, q)?;
    let gap_z = formulas.matrix_selection(&scene, g, q)? - formulas.matrix_averaging(&scene, &map, g, q)?;
    let bound_r: f64 = beta.iter().sum();
    let bound_z: f64 = map.lags().zip(&beta).map(|(n, b)| (lvi - n.abs()) as f64 * b).sum();
    for (name, gap, bound) in [("gap_vector", gap_r, bound_r), ("gap_matrix", gap_z, bound_z)] {
        rows.push(CheckRow {
            check: name.into(),
            closed_form: bound,
            empirical: gap,
            std_error: 0.0,
            z_score: 0.0,
            pass: gap >= bound - 1e-12 * gap.abs().max(1.0),
        });
    }
    Ok(OracleCheck { scene, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DoAPriorDistribution;
    use crate::simulation::SourceScene;

    fn small(trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            q_list: vec![10, 1000],
            grid_points: 401,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_trial_cdf() {
        let res = run_cdf_experiment(&small(1)).unwrap();
        assert_eq!(res.rows.len(), 3);
        assert!(res.rows.iter().all(|r| r.cdf == 1.0 && r.nmse >= 0.0));
    }

    #[test]
    fn cdf_is_sorted_and_ends_at_one() {
        let res = run_cdf_experiment(&small(20)).unwrap();
        for kind in [CombinerKind::Selection, CombinerKind::Averaging, CombinerKind::Mmse] {
            let rows: Vec<_> = res.rows.iter().filter(|r| r.combiner == kind).collect();
            assert_eq!(rows.len(), 20);
            assert!(rows.windows(2).all(|w| w[0].nmse <= w[1].nmse && w[0].cdf < w[1].cdf));
            assert_eq!(rows.last().unwrap().cdf, 1.0);
        }
    }

    #[test]
    fn directions_are_paired_across_q() {
        let exp = Experiment::new(small(4)).unwrap();
        let a = exp.run_trials(10, TrialOptions::default()).unwrap();
        let b = exp.run_trials(1000, TrialOptions::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.truth, y.truth);
        }
    }

    #[test]
    fn nmse_sweep_has_overlay_for_closed_forms() {
        let res = run_nmse_vs_q(&small(10)).unwrap();
        assert_eq!(res.rows.len(), 6);
        for row in &res.rows {
            assert_eq!(row.closed_form.is_some(), row.combiner != CombinerKind::Mmse);
        }
    }

    #[test]
    fn high_support_single_source_rmse_below_grid_step() {
        let cfg = ExperimentConfig {
            sources: 1,
            trials: 20,
            q_list: vec![10_000],
            ..ExperimentConfig::default()
        };
        let step = cfg.grid().step().to_degrees();
        let res = run_rmse_vs_q(&cfg).unwrap();
        for row in &res.rows {
            assert!(row.rmse_deg < step, "{row:?} vs step {step}");
            assert_eq!(row.padded_trials, 0);
        }
    }

    #[test]
    fn rmse_conversion_is_degrees() {
        let rec = TrialRecord {
            q: 1,
            trial: 0,
            seed: 0,
            combiner: CombinerKind::Selection,
            nmse: 0.0,
            truth: vec![0.0, 0.0],
            estimates: vec![0.01, -0.01],
            squared_errors: vec![1e-4, 1e-4],
            padded: false,
            closed_form_nmse: None,
        };
        assert!((rmse_degrees([&rec]) - 0.01f64.to_degrees()).abs() < 1e-12);
    }

    #[test]
    fn estimated_power_mode_runs() {
        let cfg = ExperimentConfig {
            power_mode: PowerMode::Estimated,
            trials: 3,
            grid_points: 401,
            ..ExperimentConfig::default()
        };
        let res = run_cdf_experiment(&cfg).unwrap();
        assert_eq!(res.rows.len(), 9);
    }

    #[test]
    fn ratio_mode_matches_oracle_mode() {
        let oracle = run_cdf_experiment(&small(5)).unwrap();
        let ratios = run_cdf_experiment(&ExperimentConfig {
            power_mode: PowerMode::Ratios,
            ..small(5)
        })
        .unwrap();
        for (a, b) in oracle.rows.iter().zip(&ratios.rows) {
            assert!((a.nmse - b.nmse).abs() < 1e-8 * a.nmse.max(1e-12));
        }
    }

    struct Corrupted;

    impl MseFormulas for Corrupted {
        fn entry_selection(&self, scene: &SourceScene, q: usize) -> Result<f64> {
            Ok(1.2 * crate::oracles::mse_entry_selection(scene, q)?)
        }
    }

    #[test]
    fn oracle_check_passes_and_catches_a_bad_formula() {
        let cfg = ExperimentConfig {
            sources: 2,
            oracle_trials: 20_000,
            prior: DoAPriorDistribution::uniform(-1.0, 1.0).unwrap(),
            ..ExperimentConfig::default()
        };
        let good = run_oracle_check(&cfg).unwrap();
        assert_eq!(good.rows.len(), 36 + 2 + 15 + 2 + 2);
        assert!(good.all_pass(), "{:?}", good.rows.iter().filter(|r| !r.pass).collect::<Vec<_>>());
        let bad = run_oracle_check_with(&cfg, &Corrupted).unwrap();
        assert!(!bad.all_pass());
        assert_eq!(bad.rows.len(), good.rows.len());
    }
}
