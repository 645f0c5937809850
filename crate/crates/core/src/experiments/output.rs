//! CSV emission with a `#` metadata header.

use std::io::Write;

use super::config::ExperimentConfig;
use super::{CdfResult, NmseRow, OracleCheck, RmseRow, SweepResult};
use crate::coarray::MusicResult;
use crate::geometry::CombinerKind;
use crate::simulation::SourceScene;

/// How estimated directions are matched to the truth.
pub const PAIRING: &str = "sorted-ascending";

#[derive(Debug, Clone)]
pub struct Metadata {
    pub command: String,
    pub lines: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let lines = vec![
            ("config_sha256".to_string(), cfg.hash()),
            ("seed".to_string(), cfg.seed.to_string()),
            ("pairing".to_string(), PAIRING.to_string()),
            ("power_mode".to_string(), cfg.power_mode.name().to_string()),
            ("trials".to_string(), cfg.trials.to_string()),
        ];
        Metadata {
            command: command.to_string(),
            lines,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }
}

/// Writes the header, a column line and one line per row.
pub fn write_csv<W, R>(mut out: W, meta: &Metadata, columns: &[&str], rows: R) -> std::io::Result<()>
where
    W: Write,
    R: IntoIterator<Item = Vec<String>>,
{
    writeln!(out, "# coprime-mmse {}", meta.command)?;
    for (k, v) in &meta.lines {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn joined(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_cdf_csv<W: Write>(out: W, cfg: &ExperimentConfig, res: &CdfResult) -> std::io::Result<()> {
    let meta = Metadata::new("cdf", cfg).with("snapshots", cfg.snapshots);
    let rows = res
        .rows
        .iter()
        .map(|r| vec![r.combiner.to_string(), r.nmse.to_string(), r.cdf.to_string()]);
    write_csv(out, &meta, &["combiner", "nmse", "cdf"], rows)
}

pub fn write_nmse_csv<W: Write>(out: W, cfg: &ExperimentConfig, res: &SweepResult<NmseRow>) -> std::io::Result<()> {
    let meta = Metadata::new("nmse-vs-q", cfg);
    let rows = res.rows.iter().map(|r| {
        vec![
            r.q.to_string(),
            r.combiner.to_string(),
            r.mean_nmse.to_string(),
            r.stderr.to_string(),
            r.closed_form.map(|c| c.to_string()).unwrap_or_default(),
        ]
    });
    write_csv(out, &meta, &["q", "combiner", "mean_nmse", "stderr", "closed_form"], rows)
}

pub fn write_rmse_csv<W: Write>(out: W, cfg: &ExperimentConfig, res: &SweepResult<RmseRow>) -> std::io::Result<()> {
    let meta = Metadata::new("rmse-vs-q", cfg).with("grid_points", cfg.grid_points);
    let rows = res.rows.iter().map(|r| {
        vec![
            r.q.to_string(),
            r.combiner.to_string(),
            r.rmse_deg.to_string(),
            r.padded_trials.to_string(),
        ]
    });
    write_csv(out, &meta, &["q", "combiner", "rmse_deg", "padded_trials"], rows)
}

pub fn write_oracle_csv<W: Write>(out: W, cfg: &ExperimentConfig, res: &OracleCheck) -> std::io::Result<()> {
    let meta = Metadata::new("oracle-check", cfg)
        .with("oracle_trials", cfg.oracle_trials)
        .with("snapshots", cfg.snapshots)
        .with("doas_rad", joined(res.scene.thetas()));
    let rows = res.rows.iter().map(|r| {
        vec![
            r.check.clone(),
            r.closed_form.to_string(),
            r.empirical.to_string(),
            r.std_error.to_string(),
            r.z_score.to_string(),
            if r.pass { "pass" } else { "fail" }.to_string(),
        ]
    });
    write_csv(
        out,
        &meta,
        &["check", "closed_form", "empirical", "std_error", "z_score", "result"],
        rows,
    )
}

pub fn write_spectrum_csv<W: Write>(
    out: W,
    cfg: &ExperimentConfig,
    scene: &SourceScene,
    kind: CombinerKind,
    music: &MusicResult,
) -> std::io::Result<()> {
    let meta = Metadata::new("spectrum", cfg)
        .with("combiner", kind)
        .with("snapshots", cfg.snapshots)
        .with("doas_rad", joined(scene.thetas()))
        .with("estimates_rad", joined(&music.estimates))
        .with("too_few_minima", music.too_few_minima);
    let rows = music
        .grid
        .iter()
        .zip(&music.spectrum)
        .map(|(t, p)| vec![t.to_string(), p.to_string()]);
    write_csv(out, &meta, &["theta_rad", "p_music"], rows)
}
