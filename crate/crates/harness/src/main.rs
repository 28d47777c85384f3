use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jsdm::scheduler::schedule_users;
use jsdm_harness::config::ScenarioConfig;
use jsdm_harness::error::{Context, HarnessError, Result};
use jsdm_harness::figures::{write_figure, FigureKind};
use jsdm_harness::reduction::{random_corpus, verify_file, verify_formula, ReductionReport, DEFAULT_DELTA};
use jsdm_harness::scenario::{build_system, cluster_drop, generate_drop, run_scenario, stream, write_csv, COLOR_STREAM};
use jsdm_harness::validate::{validate_sinr, write_validation};

#[derive(Debug, Parser)]
#[command(name = "jsdm", version, about = "JSDM clustering, scheduling and SINR experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster one drop of users per seed.
    Cluster(Common),
    /// Print the schedules produced for every alpha.
    Schedule(Common),
    /// Write the CSV behind one figure.
    Figure {
        kind: String,
        #[command(flatten)]
        common: Common,
    },
    /// Compare deterministic-equivalent SINR with Monte-Carlo draws.
    ValidateSinr(Common),
    /// SAT reduction checks.
    Reduction {
        #[command(subcommand)]
        command: ReductionCommand,
    },
    /// Full scenario with the configured approach.
    Run(Common),
}

#[derive(Debug, Subcommand)]
enum ReductionCommand {
    /// Decide scheduling instances built from DIMACS files or a random corpus.
    Verify {
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        /// Also verify this many random irreducible formulas.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Start from N_t = 128, K = 80.
    #[arg(long)]
    paper_scale: bool,
    /// Further `--key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut config = if self.paper_scale { ScenarioConfig::paper_scale() } else { ScenarioConfig::default() };
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        config.apply_flags(&self.overrides)?;
        if let Some(seed) = self.seed {
            config.seeds = vec![seed];
        }
        config.validate()?;
        Ok(config)
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    }
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

fn flush(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

fn cluster(common: &Common) -> Result<()> {
    let config = common.load()?;
    let path = common.out.join("clusters.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["seed", "user", "azimuth_deg", "cluster"])?;
    for &seed in &config.seeds {
        let drop = generate_drop(&config, seed)?;
        let outcome = cluster_drop(&drop, &config, seed, config.dol_th)?;
        for (u, user) in drop.users.iter().enumerate() {
            w.write_record([
                seed.to_string(),
                u.to_string(),
                user.azimuth.to_degrees().to_string(),
                outcome.clustering.cluster_of(u).to_string(),
            ])?;
        }
        let lp = outcome.lp_objective.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!("seed {seed}: {} clusters, cost {}, lp {lp}", outcome.clustering.num_clusters(), outcome.cost);
    }
    flush(w, &path)
}

fn schedule(common: &Common) -> Result<()> {
    let config = common.load()?;
    let path = common.out.join("schedules.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["seed", "alpha", "schedule", "users"])?;
    for &seed in &config.seeds {
        let drop = generate_drop(&config, seed)?;
        let outcome = cluster_drop(&drop, &config, seed, config.dol_th)?;
        let system = build_system(&drop, &outcome, config.approach, &config)?;
        for (a, &alpha) in config.alphas.iter().enumerate() {
            let mut rng = stream(seed, COLOR_STREAM + a as u64);
            let out = schedule_users(&system, alpha, &mut rng).context(|| format!("seed {seed}: alpha {alpha}"))?;
            for (i, s) in out.schedules.schedules.iter().enumerate() {
                let users = s.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
                w.write_record([seed.to_string(), alpha.to_string(), i.to_string(), users])?;
            }
            println!("seed {seed} alpha {alpha}: {} schedules", out.schedules.len());
        }
    }
    flush(w, &path)
}

fn figure(kind: &str, common: &Common) -> Result<()> {
    let kind: FigureKind = kind.parse()?;
    let config = common.load()?;
    let (path, rows) = write_figure(kind, &config, &common.out)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn validate(common: &Common) -> Result<()> {
    let config = common.load()?;
    let rows = validate_sinr(&config)?;
    let path = common.out.join("validate_sinr.csv");
    write_validation(&path, &rows)?;
    for &snr in &config.validate_snr_db {
        let at: Vec<_> = rows.iter().filter(|r| r.snr_db == snr).collect();
        let worst_ratio = at.iter().map(|r| r.rel_err_ratio()).fold(0.0, f64::max);
        let worst_mean = at.iter().map(|r| r.rel_err_mean()).fold(0.0, f64::max);
        println!("{snr} dB: max relative error {worst_ratio:.4} (ratio of means), {worst_mean:.4} (mean of ratios)");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn reduction(files: &[PathBuf], delta: f64, random: usize, seed: u64) -> Result<()> {
    let mut reports: Vec<ReductionReport> = Vec::new();
    for path in files {
        reports.push(verify_file(path, delta)?);
    }
    let mut rng = stream(seed, 0);
    for (i, f) in random_corpus(random, 3, 3, &mut rng).iter().enumerate() {
        reports.push(verify_formula(&format!("random#{i}"), f, delta)?);
    }
    if reports.is_empty() {
        return Err(HarnessError::config("no formulas given; pass DIMACS files or --random N"));
    }
    for r in &reports {
        println!("{r}");
    }
    let agree = reports.iter().filter(|r| r.agrees()).count();
    println!("{agree}/{} decisions agree with satisfiability", reports.len());
    Ok(())
}

fn run(common: &Common) -> Result<()> {
    let config = common.load()?;
    let rows = run_scenario(&config)?;
    let path = common.out.join("run.csv");
    write_csv(&path, &rows)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cluster(c) => cluster(c),
        Command::Schedule(c) => schedule(c),
        Command::Figure { kind, common } => figure(kind, common),
        Command::ValidateSinr(c) => validate(c),
        Command::Reduction { command: ReductionCommand::Verify { files, delta, random, seed } } => {
            reduction(files, *delta, *random, *seed)
        }
        Command::Run(c) => run(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
