//! `ignlab`: runs experiments of the ignition laboratory from TOML
//! configuration files and writes CSV/JSON results with a manifest.

pub mod cache;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ignition_core::cache::{ClassificationCache, DiskCache};

pub use config::ExperimentConfig;
pub use error::{exit, CliError};
pub use manifest::{CacheStats, Manifest, MANIFEST_FILE};

use crate::cache::CountingCache;
use crate::experiments::Context;
use crate::output::Outputs;

const DEFAULT_OUT: &str = "ignlab-out";

#[derive(Debug, Parser)]
#[command(name = "ignlab", version, about = "Ignition reaction-diffusion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output` in the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent cells.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Neither read nor write the classification cache.
    #[arg(long)]
    pub no_cache: bool,
    /// Accepted for interface stability; every experiment is deterministic.
    #[arg(long)]
    pub seedless: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Re-runs the configuration of a manifest without the cache and
    /// compares the hashes of all outputs.
    Replay {
        manifest: PathBuf,
        /// Where to write the re-run (default: `<manifest dir>/replay`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// Options of a single run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub jobs: usize,
    pub cache: bool,
    pub seedless: bool,
}

/// Runs `cfg` into `opts.out`. The manifest is written whenever the
/// experiment itself finished, including partially failed sweeps.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest, CliError> {
    let out = Outputs::new(&opts.out)?;
    let disk = if opts.cache && cfg.cache {
        Some(DiskCache::open(opts.out.join(".cache")).map_err(error::in_module("cache"))?)
    } else {
        None
    };
    let cache = CountingCache::new(disk);
    let jobs = opts.jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::config(format!("--jobs {jobs}: {e}")))?;
    let mut ctx = Context { out, pool, cache: &cache, tolerances: BTreeMap::new(), failures: Vec::new(), cells: 0 };
    experiments::run(cfg, &mut ctx)?;
    let mut outputs = ctx.out.files.clone();
    outputs.sort_by(|a, b| a.file.cmp(&b.file));
    let manifest = Manifest {
        tool: "ignlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: ignition_core::cache::CACHE_VERSION.to_string(),
        config: cfg.clone(),
        tolerances: ctx.tolerances.clone(),
        outputs,
        cache: CacheStats {
            enabled: cache.enabled(),
            lookups: cache.lookups(),
            hits: cache.hits(),
            simulations: cache.stores(),
        },
        failures: ctx.failures.clone(),
        jobs,
        seedless: opts.seedless,
    };
    manifest.write(&opts.out)?;
    if !ctx.failures.is_empty() {
        return Err(CliError::PartialSweep { failed: ctx.failures.len(), total: ctx.cells });
    }
    Ok(manifest)
}

/// Re-runs a manifest without the cache; fails when any output differs.
pub fn replay(manifest: &Path, out: Option<PathBuf>, jobs: usize) -> Result<Manifest, CliError> {
    let m = Manifest::read(manifest)?;
    let out = out.unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).join("replay"));
    let opts = RunOptions { out, jobs, cache: false, seedless: m.seedless };
    let again = match run_experiment(&m.config, &opts) {
        Ok(r) => r,
        Err(CliError::PartialSweep { .. }) => Manifest::read(&opts.out.join(MANIFEST_FILE))?,
        Err(e) => return Err(e),
    };
    let diff = m.differences(&again);
    if diff.is_empty() {
        Ok(again)
    } else {
        Err(CliError::Replay(format!("outputs differ: {}", diff.join(", "))))
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Some(Command::Replay { manifest, out, jobs }) => replay(&manifest, out, jobs).map(|m| {
            println!("replay ok: {} outputs identical", m.outputs.len());
        }),
        None => run_cli(&cli.run).map(|m| {
            println!("{} outputs written; {} classifications simulated, {} cache hits", m.outputs.len(), m.cache.simulations, m.cache.hits);
        }),
    };
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("ignlab: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(args: &RunArgs) -> Result<Manifest, CliError> {
    let path = args.config.as_ref().ok_or_else(|| CliError::config("--config PATH is required"))?;
    let cfg = ExperimentConfig::load(path)?;
    let out = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    run_experiment(&cfg, &RunOptions { out, jobs: args.jobs, cache: !args.no_cache, seedless: args.seedless })
}
