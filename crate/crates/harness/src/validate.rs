//! Deterministic-equivalent SINR against Monte-Carlo simulation.

use std::path::Path;

use jsdm::channel::{one_ring_covariance_with, AntennaArray};
use jsdm::clustering::Clustering;
use jsdm::sinr::monte_carlo_sinr;
use jsdm::{System, UserProfile};

use crate::config::ScenarioConfig;
use crate::error::{Context, HarnessError, Result};
use crate::scenario::stream;

const VALIDATE_STREAM: u64 = 1 << 24;

pub const VALIDATE_HEADER: [&str; 10] = [
    "seed",
    "snr_db",
    "user",
    "group",
    "de_sinr",
    "mc_mean_sinr",
    "mc_ratio_of_means",
    "rel_err_mean",
    "rel_err_ratio",
    "draws",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub seed: u64,
    pub snr_db: f64,
    pub user: usize,
    pub group: usize,
    pub de_sinr: f64,
    pub mc_mean_sinr: f64,
    pub mc_ratio_of_means: f64,
    pub draws: usize,
}

impl ValidationRow {
    pub fn rel_err_mean(&self) -> f64 {
        (self.mc_mean_sinr - self.de_sinr).abs() / self.mc_mean_sinr.abs()
    }

    pub fn rel_err_ratio(&self) -> f64 {
        (self.mc_ratio_of_means - self.de_sinr).abs() / self.mc_ratio_of_means.abs()
    }
}

/// Groups of co-located users, one per angle in `validate_angles_deg`, all
/// served together with the configured outer precoder.
pub fn validation_system(config: &ScenarioConfig) -> Result<System> {
    let array = AntennaArray::half_wavelength_ula(config.num_antennas).context(|| "antenna array".into())?;
    let per = config.validate_users_per_group;
    let mut covs = Vec::new();
    let mut labels = Vec::new();
    for (g, angle) in config.validate_angles_deg.iter().enumerate() {
        let user = UserProfile::new(g * per, angle.to_radians(), config.validate_spread_deg.to_radians())
            .context(|| format!("validation group at {angle} deg"))?;
        let cov = one_ring_covariance_with(&array, &user, config.quadrature_points, config.energy_fraction)
            .context(|| format!("validation covariance at {angle} deg"))?;
        for _ in 0..per {
            covs.push(cov.clone());
            labels.push(g);
        }
    }
    let mut system = System::new(covs, Clustering::from_labels(&labels), config.approach).context(|| "validation system".into())?;
    system.interference_sum = config.interference_sum;
    Ok(system)
}

pub fn validate_sinr(config: &ScenarioConfig) -> Result<Vec<ValidationRow>> {
    config.validate()?;
    if config.validate_angles_deg.is_empty() || config.validate_users_per_group == 0 {
        return Err(HarnessError::config("validation needs at least one group and one user per group"));
    }
    let system = validation_system(config)?;
    let everyone: Vec<usize> = (0..system.num_users()).collect();
    let eval = system.evaluate(&everyone, 1.0).context(|| "deterministic equivalent".into())?;
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        for (i, &snr) in config.validate_snr_db.iter().enumerate() {
            let power = 10f64.powf(snr / 10.0);
            let de = system.report_at(&eval, power);
            let mut rng = stream(seed, VALIDATE_STREAM + i as u64);
            let mc = monte_carlo_sinr(&eval.members, &eval.precoders, system.covariances(), power, config.mc_draws, &mut rng)
                .context(|| format!("monte carlo at {snr} dB"))?;
            let ratio = mc.ratio_of_means();
            for (k, &u) in mc.users.iter().enumerate() {
                rows.push(ValidationRow {
                    seed,
                    snr_db: snr,
                    user: u,
                    group: system.group_of(u),
                    de_sinr: de.sinr[u],
                    mc_mean_sinr: mc.mean_sinr[k],
                    mc_ratio_of_means: ratio[k],
                    draws: config.mc_draws,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_validation(path: &Path, rows: &[ValidationRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(VALIDATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.snr_db.to_string(),
            r.user.to_string(),
            r.group.to_string(),
            r.de_sinr.to_string(),
            r.mc_mean_sinr.to_string(),
            r.mc_ratio_of_means.to_string(),
            r.rel_err_mean().to_string(),
            r.rel_err_ratio().to_string(),
            r.draws.to_string(),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}
