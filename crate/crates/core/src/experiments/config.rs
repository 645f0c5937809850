//! Experiment configuration, read from JSON.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coarray::{AngleGrid, DEFAULT_GRID_POINTS};
use crate::combining::{NoiseEstimator, Powers};
use crate::distributions::DoAPriorDistribution;
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, CombinerKind, Picker};

/// Source powers handed to the MMSE design.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerMode {
    /// True `d` and `σ²`.
    #[default]
    Oracle,
    /// Capon estimates at the MUSIC directions of the averaged estimate.
    Estimated,
    /// True power ratios only.
    Ratios,
}

impl PowerMode {
    pub fn name(self) -> &'static str {
        match self {
            PowerMode::Oracle => "oracle",
            PowerMode::Estimated => "estimated",
            PowerMode::Ratios => "ratios",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: ArrayGeometry,
    /// Number of sources `K`.
    pub sources: usize,
    /// Per-source SNR `d / σ²`.
    pub snr_db: f64,
    pub sigma2_db: f64,
    /// `Q` for the CDF and spectrum runs.
    pub snapshots: usize,
    pub q_list: Vec<usize>,
    pub trials: usize,
    /// Trials per Monte-Carlo assertion in `oracle-check`.
    pub oracle_trials: usize,
    pub prior: DoAPriorDistribution,
    pub combiners: Vec<CombinerKind>,
    pub power_mode: PowerMode,
    pub noise_estimator: NoiseEstimator,
    pub picker: Picker,
    pub grid_points: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            geometry: ArrayGeometry::coprime(2, 3).expect("valid pair"),
            sources: 5,
            snr_db: 10.0,
            sigma2_db: 0.0,
            snapshots: 10,
            q_list: vec![1, 10, 100, 1000, 10000],
            trials: 500,
            oracle_trials: 100_000,
            prior: DoAPriorDistribution::full_range_uniform(),
            combiners: vec![CombinerKind::Selection, CombinerKind::Averaging, CombinerKind::Mmse],
            power_mode: PowerMode::Oracle,
            noise_estimator: NoiseEstimator::default(),
            picker: Picker::Smallest,
            grid_points: DEFAULT_GRID_POINTS,
            seed: 0,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let lv = self.geometry.num_virtual();
        if self.sources == 0 || self.sources >= lv {
            return Err(Error::config("sources", format!("need 1 <= K < L' = {lv}, got {}", self.sources)));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db", "must be finite"));
        }
        if !self.sigma2_db.is_finite() {
            return Err(Error::config("sigma2_db", "must be finite"));
        }
        if self.snapshots == 0 {
            return Err(Error::config("snapshots", "must be at least 1"));
        }
        if self.q_list.is_empty() || self.q_list.contains(&0) {
            return Err(Error::config("q_list", "must be nonempty with every Q >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.oracle_trials < 2 {
            return Err(Error::config("oracle_trials", "must be at least 2"));
        }
        self.prior
            .validate()
            .map_err(|e| Error::config("prior", e.to_string()))?;
        if self.combiners.is_empty() {
            return Err(Error::config("combiners", "list is empty"));
        }
        for (i, c) in self.combiners.iter().enumerate() {
            if self.combiners[..i].contains(c) {
                return Err(Error::config("combiners", format!("`{c}` listed twice")));
            }
        }
        if self.grid_points < 3 {
            return Err(Error::config("grid_points", "need at least 3 points"));
        }
        Ok(())
    }

    pub fn noise_power(&self) -> f64 {
        10f64.powf(self.sigma2_db / 10.0)
    }

    pub fn source_power(&self) -> f64 {
        10f64.powf((self.snr_db + self.sigma2_db) / 10.0)
    }

    pub fn powers(&self) -> Powers {
        Powers::new(vec![self.source_power(); self.sources], self.noise_power())
    }

    pub fn grid(&self) -> AngleGrid {
        let (lo, hi) = self.prior.support();
        AngleGrid {
            lo,
            hi,
            points: self.grid_points,
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
