//! Seeded multi-slot simulation and result rows.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use jsdm::channel::{generate_users, one_ring_covariance_with, AntennaArray};
use jsdm::clustering::{adapt_threshold, cluster_users, ClusterOutcome, ClusteringOptions};
use jsdm::scheduler::{jain_index, schedule_users, select_schedule, update_weights, ScheduleSet};
use jsdm::system::Evaluation;
use jsdm::{Approach, CovarianceMatrix, SimilarityMatrix, System, UserProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RateModel, ScenarioConfig};
use crate::error::{Context, HarnessError, Result};

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "seed",
    "snr_db",
    "alpha",
    "dol_th",
    "approach",
    "sum_rate",
    "jain_index",
    "num_schedules",
    "num_clusters",
    "elapsed_ms",
];

/// One line of experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub seed: u64,
    pub snr_db: f64,
    /// SIR tolerance; 0 for the no-scheduling baseline.
    pub alpha: f64,
    pub dol_th: f64,
    pub approach: Approach,
    pub sum_rate: f64,
    pub jain_index: f64,
    pub num_schedules: usize,
    pub num_clusters: usize,
    pub elapsed_ms: u64,
}

impl ResultRow {
    fn record(&self) -> [String; 11] {
        [
            self.experiment.clone(),
            self.seed.to_string(),
            self.snr_db.to_string(),
            self.alpha.to_string(),
            self.dol_th.to_string(),
            self.approach.to_string(),
            self.sum_rate.to_string(),
            self.jain_index.to_string(),
            self.num_schedules.to_string(),
            self.num_clusters.to_string(),
            self.elapsed_ms.to_string(),
        ]
    }

    fn sort_key(&self) -> (String, String, u64) {
        (self.experiment.clone(), self.approach.to_string(), self.seed)
    }
}

/// Stable ordering used before writing: experiment, approach, seed, then
/// threshold, SNR and alpha.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then(a.dol_th.total_cmp(&b.dol_th))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.alpha.total_cmp(&b.alpha))
    });
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: "<csv>".into(), source })?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    }
    let file = std::fs::File::create(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    write_rows(std::io::BufWriter::new(file), rows)
}

const USERS_STREAM: u64 = 1;
const CLUSTER_STREAM: u64 = 2;
pub const COLOR_STREAM: u64 = 1 << 8;
const CHANNEL_STREAM: u64 = 1 << 16;

/// Independent ChaCha stream for one purpose within a seed.
pub fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// Users and covariances of one random drop.
#[derive(Debug, Clone)]
pub struct UserDrop {
    pub users: Vec<UserProfile>,
    pub covariances: Vec<CovarianceMatrix>,
    pub similarity: SimilarityMatrix,
}

pub fn generate_drop(config: &ScenarioConfig, seed: u64) -> Result<UserDrop> {
    let array = AntennaArray::half_wavelength_ula(config.num_antennas).context(|| "antenna array".into())?;
    let mut rng = stream(seed, USERS_STREAM);
    let users = generate_users(
        config.num_users,
        (config.sector_min_deg.to_radians(), config.sector_max_deg.to_radians()),
        config.angular_spread_deg.to_radians(),
        &mut rng,
    )
    .context(|| format!("seed {seed}: user placement"))?;
    let covariances = users
        .iter()
        .map(|u| one_ring_covariance_with(&array, u, config.quadrature_points, config.energy_fraction))
        .collect::<jsdm::Result<Vec<_>>>()
        .context(|| format!("seed {seed}: covariance generation"))?;
    let similarity = SimilarityMatrix::dol(&covariances).context(|| format!("seed {seed}: similarity"))?;
    Ok(UserDrop { users, covariances, similarity })
}

pub fn cluster_drop(drop: &UserDrop, config: &ScenarioConfig, seed: u64, dol_th: f64) -> Result<ClusterOutcome> {
    let options = ClusteringOptions { lp_size_cap: config.lp_size_cap, repetitions: config.rounding_repetitions };
    let mut rng = stream(seed, CLUSTER_STREAM);
    cluster_users(&drop.similarity, dol_th, options, &mut rng).context(|| format!("seed {seed}: clustering at dol_th {dol_th}"))
}

pub fn build_system(drop: &UserDrop, outcome: &ClusterOutcome, approach: Approach, config: &ScenarioConfig) -> Result<System> {
    let mut system = System::new(drop.covariances.clone(), outcome.clustering.clone(), approach)
        .context(|| "group centroids".into())?;
    system.interference_sum = config.interference_sum;
    Ok(system)
}

/// Long-run metrics of one scheduling policy at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub sum_rate: f64,
    pub jain_index: f64,
    pub num_schedules: usize,
}

impl Metrics {
    fn from_average(avg: &[f64], num_schedules: usize) -> Self {
        Self { sum_rate: avg.iter().sum(), jain_index: jain_index(avg), num_schedules }
    }
}

/// Metrics of the no-scheduling baseline and of every alpha, per SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub no_scheduling: Vec<Metrics>,
    /// `sweep[alpha][snr]`.
    pub sweep: Vec<Vec<Metrics>>,
}

impl GridResult {
    /// Index of the best alpha at one SNR; ties go to the first alpha.
    pub fn best_alpha(&self, snr: usize) -> usize {
        let mut best = 0;
        for a in 1..self.sweep.len() {
            if self.sweep[a][snr].sum_rate > self.sweep[best][snr].sum_rate {
                best = a;
            }
        }
        best
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Runs the slot loop: each slot picks the schedule with the largest
/// weighted rate and accumulates its users' rates.
fn simulate(
    system: &System,
    set: &ScheduleSet,
    evals: &[Evaluation<f64>],
    power: f64,
    config: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> jsdm::Result<Vec<f64>> {
    let rates: Vec<Vec<f64>> = evals.iter().map(|e| system.report_at(e, power).rate).collect();
    let mut acc = vec![0.0; system.num_users()];
    for slot in 0..config.num_slots {
        let weights: Vec<f64> = update_weights(slot, set.len(), &set.membership);
        let Some(chosen) = select_schedule(&rates, &weights) else { break };
        let slot_rates = match config.rate_model {
            RateModel::Deterministic => rates[chosen].clone(),
            RateModel::MonteCarlo => system.sample_rates(&evals[chosen], power, 1, rng)?,
        };
        for (a, r) in acc.iter_mut().zip(slot_rates) {
            *a += r;
        }
    }
    let n = config.num_slots as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Baseline that serves every user in every slot.
fn no_scheduling(system: &System, all: &Evaluation<f64>, power: f64, config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> jsdm::Result<Vec<f64>> {
    let set = ScheduleSet::from_schedules(system.num_users(), vec![(0..system.num_users()).collect()]);
    simulate(system, &set, std::slice::from_ref(all), power, config, rng)
}

/// Evaluates the baseline and every alpha over an SNR grid.
pub fn evaluate_grid(system: &System, config: &ScenarioConfig, seed: u64, snrs: &[f64]) -> Result<GridResult> {
    let everyone: Vec<usize> = (0..system.num_users()).collect();
    let all = system.evaluate(&everyone, 1.0).context(|| format!("seed {seed}: serving all users"))?;
    let mut no_sched = Vec::with_capacity(snrs.len());
    for (i, &snr) in snrs.iter().enumerate() {
        let mut rng = stream(seed, CHANNEL_STREAM + (i as u64) * 64);
        let avg = no_scheduling(system, &all, db_to_linear(snr), config, &mut rng)
            .context(|| format!("seed {seed}: no-scheduling baseline at {snr} dB"))?;
        no_sched.push(Metrics::from_average(&avg, 1));
    }
    let mut sweep = Vec::with_capacity(config.alphas.len());
    for (a, &alpha) in config.alphas.iter().enumerate() {
        let mut rng = stream(seed, COLOR_STREAM + a as u64);
        let outcome = schedule_users(system, alpha, &mut rng).context(|| format!("seed {seed}: scheduling at alpha {alpha}"))?;
        let set = outcome.schedules;
        let evals = set
            .schedules
            .iter()
            .map(|s| system.evaluate(s, 1.0))
            .collect::<jsdm::Result<Vec<_>>>()
            .context(|| format!("seed {seed}: schedule evaluation at alpha {alpha}"))?;
        let mut per_snr = Vec::with_capacity(snrs.len());
        for (i, &snr) in snrs.iter().enumerate() {
            let mut rng = stream(seed, CHANNEL_STREAM + (i as u64) * 64 + a as u64 + 1);
            let avg = simulate(system, &set, &evals, db_to_linear(snr), config, &mut rng)
                .context(|| format!("seed {seed}: slot simulation at {snr} dB, alpha {alpha}"))?;
            per_snr.push(Metrics::from_average(&avg, set.len()));
        }
        sweep.push(per_snr);
    }
    Ok(GridResult { no_scheduling: no_sched, sweep })
}

fn elapsed(config: &ScenarioConfig, start: Instant) -> u64 {
    if config.record_timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

/// Rows for one seed at a fixed clustering threshold: `<prefix>.sweep` for
/// every alpha, `<prefix>.best` for the best alpha and `<prefix>.nosched`
/// for the baseline, at every SNR.
pub fn run_fixed_threshold(
    config: &ScenarioConfig,
    seed: u64,
    dol_th: f64,
    approach: Approach,
    snrs: &[f64],
    prefix: &str,
) -> Result<Vec<ResultRow>> {
    let start = Instant::now();
    let drop = generate_drop(config, seed)?;
    let outcome = cluster_drop(&drop, config, seed, dol_th)?;
    let system = build_system(&drop, &outcome, approach, config)?;
    let grid = evaluate_grid(&system, config, seed, snrs)?;
    let ms = elapsed(config, start);
    let clusters = system.num_groups();
    let row = |kind: &str, snr: f64, alpha: f64, m: Metrics| ResultRow {
        experiment: format!("{prefix}.{kind}"),
        seed,
        snr_db: snr,
        alpha,
        dol_th,
        approach,
        sum_rate: m.sum_rate,
        jain_index: m.jain_index,
        num_schedules: m.num_schedules,
        num_clusters: clusters,
        elapsed_ms: ms,
    };
    let mut rows = Vec::new();
    for (i, &snr) in snrs.iter().enumerate() {
        rows.push(row("nosched", snr, 0.0, grid.no_scheduling[i]));
        for (a, &alpha) in config.alphas.iter().enumerate() {
            rows.push(row("sweep", snr, alpha, grid.sweep[a][i]));
        }
        let b = grid.best_alpha(i);
        rows.push(row("best", snr, config.alphas[b], grid.sweep[b][i]));
    }
    Ok(rows)
}

/// Picks the clustering threshold for one seed and SNR by lowering it from 1
/// until the best-alpha sum-rate drops.
pub fn adaptive_threshold(config: &ScenarioConfig, seed: u64, approach: Approach, snr: f64) -> Result<f64> {
    let drop = generate_drop(config, seed)?;
    let search = adapt_threshold(
        |th| -> Result<f64> {
            let outcome = cluster_drop(&drop, config, seed, th)?;
            let system = build_system(&drop, &outcome, approach, config)?;
            let grid = evaluate_grid(&system, config, seed, &[snr])?;
            Ok(grid.sweep[grid.best_alpha(0)][0].sum_rate)
        },
        config.threshold_step,
    )?;
    Ok(search.threshold)
}

/// Full scenario over all seeds and SNRs with the configured approach.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    run_experiment(config, config.approach, "run")
}

pub fn run_experiment(config: &ScenarioConfig, approach: Approach, prefix: &str) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        if config.adaptive_threshold {
            for &snr in &config.snr_db {
                let th = adaptive_threshold(config, seed, approach, snr)?;
                rows.extend(run_fixed_threshold(config, seed, th, approach, &[snr], prefix)?);
            }
        } else {
            rows.extend(run_fixed_threshold(config, seed, config.dol_th, approach, &config.snr_db, prefix)?);
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}
