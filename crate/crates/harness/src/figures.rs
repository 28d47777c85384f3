//! Drivers that produce one CSV per figure.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use jsdm::Approach;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::scenario::{run_experiment, run_fixed_threshold, sort_rows, write_csv, ResultRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// Sum-rate against SNR, scheduled and unscheduled.
    Rate,
    /// Jain index against SNR, scheduled and unscheduled.
    Fairness,
    /// Both outer precoders against SNR.
    Precoders,
    /// Sum-rate against the clustering threshold at a few SNRs.
    Threshold,
}

impl FigureKind {
    pub const ALL: [FigureKind; 4] = [FigureKind::Rate, FigureKind::Fairness, FigureKind::Precoders, FigureKind::Threshold];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureKind::Rate => "rate",
            FigureKind::Fairness => "fairness",
            FigureKind::Precoders => "precoders",
            FigureKind::Threshold => "threshold",
        }
    }

    pub fn file_name(self) -> String {
        format!("fig_{}.csv", self.as_str())
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        FigureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| HarnessError::config(format!("unknown figure kind '{s}'")))
    }
}

pub fn figure_rows(kind: FigureKind, config: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    match kind {
        FigureKind::Rate => run_experiment(config, config.approach, "rate"),
        FigureKind::Fairness => run_experiment(config, config.approach, "fairness"),
        FigureKind::Precoders => figure_precoders(config),
        FigureKind::Threshold => figure_threshold(config),
    }
}

pub fn figure_precoders(config: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    let mut rows = run_experiment(config, Approach::Matched, "precoders")?;
    rows.extend(run_experiment(config, Approach::ApproxBd, "precoders")?);
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn figure_threshold(config: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        for &th in &config.threshold_sweep {
            rows.extend(run_fixed_threshold(config, seed, th, config.approach, &config.threshold_snr_db, "threshold")?);
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Runs one figure and writes `fig_<kind>.csv` under `out_dir`.
pub fn write_figure(kind: FigureKind, config: &ScenarioConfig, out_dir: &Path) -> Result<(PathBuf, Vec<ResultRow>)> {
    let rows = figure_rows(kind, config)?;
    let path = out_dir.join(kind.file_name());
    write_csv(&path, &rows)?;
    Ok((path, rows))
}

/// Mean of `value` over seeds for the rows of one series, keyed by `x`.
pub fn seed_mean(
    rows: &[ResultRow],
    filter: impl Fn(&ResultRow) -> bool,
    x: impl Fn(&ResultRow) -> f64,
    value: impl Fn(&ResultRow) -> f64,
) -> Vec<(f64, f64)> {
    let mut acc: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows.iter().filter(|r| filter(r)) {
        let key = x(r);
        match acc.iter_mut().find(|(k, _, _)| *k == key) {
            Some(e) => {
                e.1 += value(r);
                e.2 += 1;
            }
            None => acc.push((key, value(r), 1)),
        }
    }
    acc.sort_by(|a, b| a.0.total_cmp(&b.0));
    acc.into_iter().map(|(k, s, n)| (k, s / n as f64)).collect()
}
