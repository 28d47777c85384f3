//! Scenario configuration: defaults, `key=value` files and overrides.

use std::path::Path;
use std::str::FromStr;

use jsdm::{Approach, InterferenceSum};

use crate::error::{HarnessError, Result};

/// Where per-slot rates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    /// Deterministic-equivalent rates of the chosen schedule.
    Deterministic,
    /// One Rayleigh channel draw per slot with zero-forcing inner precoding.
    MonteCarlo,
}

impl FromStr for RateModel {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(RateModel::Deterministic),
            "monte_carlo" => Ok(RateModel::MonteCarlo),
            other => Err(HarnessError::config(format!("unknown rate_model `{other}`"))),
        }
    }
}

impl RateModel {
    pub fn as_str(self) -> &'static str {
        match self {
            RateModel::Deterministic => "deterministic",
            RateModel::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_antennas: usize,
    pub num_users: usize,
    pub sector_min_deg: f64,
    pub sector_max_deg: f64,
    pub angular_spread_deg: f64,
    pub snr_db: Vec<f64>,
    pub dol_th: f64,
    pub adaptive_threshold: bool,
    pub threshold_step: f64,
    pub alphas: Vec<f64>,
    pub approach: Approach,
    pub num_slots: usize,
    pub seeds: Vec<u64>,
    pub interference_sum: InterferenceSum,
    pub energy_fraction: f64,
    pub lp_size_cap: usize,
    pub quadrature_points: usize,
    pub rounding_repetitions: usize,
    pub rate_model: RateModel,
    pub record_timing: bool,
    pub threshold_sweep: Vec<f64>,
    pub threshold_snr_db: Vec<f64>,
    pub validate_angles_deg: Vec<f64>,
    pub validate_spread_deg: f64,
    pub validate_users_per_group: usize,
    pub validate_snr_db: Vec<f64>,
    pub mc_draws: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_antennas: 32,
            num_users: 12,
            sector_min_deg: -60.0,
            sector_max_deg: 60.0,
            angular_spread_deg: 5.0,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            dol_th: 0.9,
            adaptive_threshold: false,
            threshold_step: 0.05,
            alphas: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
            approach: Approach::Matched,
            num_slots: 200,
            seeds: vec![0, 1, 2, 3, 4],
            interference_sum: InterferenceSum::PerGroup,
            energy_fraction: 0.9999,
            lp_size_cap: 40,
            quadrature_points: 512,
            rounding_repetitions: 10,
            rate_model: RateModel::Deterministic,
            record_timing: false,
            threshold_sweep: vec![0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95],
            threshold_snr_db: vec![0.0, 25.0],
            validate_angles_deg: vec![0.0, 30.0],
            validate_spread_deg: 20.0,
            validate_users_per_group: 4,
            validate_snr_db: vec![0.0, 10.0, 20.0],
            mc_draws: 500,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(HarnessError::config(format!("invalid boolean `{other}` for `{key}`"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ScenarioConfig {
    /// Paper-scale array and user count.
    pub fn paper_scale() -> Self {
        Self { num_antennas: 128, num_users: 80, ..Self::default() }
    }

    /// Sets one key. Dashes in keys are treated as underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "num_antennas" => self.num_antennas = parse(k, value)?,
            "num_users" => self.num_users = parse(k, value)?,
            "sector_min_deg" => self.sector_min_deg = parse(k, value)?,
            "sector_max_deg" => self.sector_max_deg = parse(k, value)?,
            "angular_spread_deg" => self.angular_spread_deg = parse(k, value)?,
            "snr_db" => self.snr_db = parse_list(k, value)?,
            "dol_th" => self.dol_th = parse(k, value)?,
            "adaptive_threshold" => self.adaptive_threshold = parse_bool(k, value)?,
            "threshold_step" => self.threshold_step = parse(k, value)?,
            "alphas" => self.alphas = parse_list(k, value)?,
            "approach" => {
                self.approach = value
                    .trim()
                    .parse()
                    .map_err(|e: jsdm::Error| HarnessError::config(e.to_string()))?
            }
            "num_slots" => self.num_slots = parse(k, value)?,
            "seeds" => self.seeds = parse_list(k, value)?,
            "seed" => self.seeds = vec![parse(k, value)?],
            "interference_sum" => {
                self.interference_sum = value
                    .trim()
                    .parse()
                    .map_err(|e: jsdm::Error| HarnessError::config(e.to_string()))?
            }
            "energy_fraction" => self.energy_fraction = parse(k, value)?,
            "lp_size_cap" => self.lp_size_cap = parse(k, value)?,
            "quadrature_points" => self.quadrature_points = parse(k, value)?,
            "rounding_repetitions" => self.rounding_repetitions = parse(k, value)?,
            "rate_model" => self.rate_model = value.trim().parse()?,
            "record_timing" => self.record_timing = parse_bool(k, value)?,
            "threshold_sweep" => self.threshold_sweep = parse_list(k, value)?,
            "threshold_snr_db" => self.threshold_snr_db = parse_list(k, value)?,
            "validate_angles_deg" => self.validate_angles_deg = parse_list(k, value)?,
            "validate_spread_deg" => self.validate_spread_deg = parse(k, value)?,
            "validate_users_per_group" => self.validate_users_per_group = parse(k, value)?,
            "validate_snr_db" => self.validate_snr_db = parse_list(k, value)?,
            "mc_draws" => self.mc_draws = parse(k, value)?,
            other => return Err(HarnessError::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(key, value)
                .map_err(|e| HarnessError::config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        self.apply_str(&text)
    }

    /// Applies `--key value` pairs.
    pub fn apply_flags(&mut self, args: &[String]) -> Result<()> {
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .ok_or_else(|| HarnessError::config(format!("expected `--key value`, got `{flag}`")))?;
            if let Some((k, v)) = key.split_once('=') {
                self.set(k, v)?;
                continue;
            }
            let value = it
                .next()
                .ok_or_else(|| HarnessError::config(format!("missing value for `--{key}`")))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(HarnessError::config(m.to_string()));
        if self.num_antennas == 0 || self.num_users == 0 {
            return fail("num_antennas and num_users must be positive");
        }
        if self.sector_min_deg >= self.sector_max_deg {
            return fail("sector_min_deg must be below sector_max_deg");
        }
        if !(self.angular_spread_deg > 0.0) || !(self.validate_spread_deg > 0.0) {
            return fail("angular spreads must be positive");
        }
        if self.snr_db.is_empty() || self.threshold_snr_db.is_empty() || self.validate_snr_db.is_empty() {
            return fail("SNR grids must be nonempty");
        }
        if self.snr_db.iter().chain(&self.threshold_snr_db).chain(&self.validate_snr_db).any(|s| !s.is_finite()) {
            return fail("SNR values must be finite");
        }
        if !(self.dol_th > 0.0 && self.dol_th <= 1.0) || self.threshold_sweep.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return fail("clustering thresholds must lie in (0, 1]");
        }
        if !(self.threshold_step > 0.0 && self.threshold_step <= 0.2) {
            return fail("threshold_step must lie in (0, 0.2]");
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0)) {
            return fail("alphas must be a nonempty list of positive values");
        }
        if self.num_slots == 0 || self.seeds.is_empty() {
            return fail("num_slots and seeds must be nonempty");
        }
        if !(self.energy_fraction > 0.0 && self.energy_fraction <= 1.0) {
            return fail("energy_fraction must lie in (0, 1]");
        }
        if self.quadrature_points < jsdm::channel::MIN_QUADRATURE_POINTS {
            return fail("quadrature_points below the minimum of 64");
        }
        if self.rounding_repetitions == 0 || self.mc_draws == 0 || self.validate_users_per_group == 0 {
            return fail("rounding_repetitions, mc_draws and validate_users_per_group must be positive");
        }
        if self.validate_angles_deg.is_empty() {
            return fail("validate_angles_deg must be nonempty");
        }
        Ok(())
    }

    /// The configuration as `key = value` lines, accepted by [`apply_str`].
    ///
    /// [`apply_str`]: ScenarioConfig::apply_str
    pub fn to_key_values(&self) -> String {
        let lines = [
            ("num_antennas", self.num_antennas.to_string()),
            ("num_users", self.num_users.to_string()),
            ("sector_min_deg", self.sector_min_deg.to_string()),
            ("sector_max_deg", self.sector_max_deg.to_string()),
            ("angular_spread_deg", self.angular_spread_deg.to_string()),
            ("snr_db", join(&self.snr_db)),
            ("dol_th", self.dol_th.to_string()),
            ("adaptive_threshold", self.adaptive_threshold.to_string()),
            ("threshold_step", self.threshold_step.to_string()),
            ("alphas", join(&self.alphas)),
            ("approach", self.approach.to_string()),
            ("num_slots", self.num_slots.to_string()),
            ("seeds", join(&self.seeds)),
            ("interference_sum", self.interference_sum.as_str().to_string()),
            ("energy_fraction", self.energy_fraction.to_string()),
            ("lp_size_cap", self.lp_size_cap.to_string()),
            ("quadrature_points", self.quadrature_points.to_string()),
            ("rounding_repetitions", self.rounding_repetitions.to_string()),
            ("rate_model", self.rate_model.as_str().to_string()),
            ("record_timing", self.record_timing.to_string()),
            ("threshold_sweep", join(&self.threshold_sweep)),
            ("threshold_snr_db", join(&self.threshold_snr_db)),
            ("validate_angles_deg", join(&self.validate_angles_deg)),
            ("validate_spread_deg", self.validate_spread_deg.to_string()),
            ("validate_users_per_group", self.validate_users_per_group.to_string()),
            ("validate_snr_db", join(&self.validate_snr_db)),
            ("mc_draws", self.mc_draws.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
