//! The `ucdi` command line: dataset curation, preprocessing and damage analysis.

pub mod analysis;
pub mod config;
pub mod curate;
pub mod files;
pub mod fixtures;
pub mod overlay;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, CONFIG_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ANALYSIS: i32 = 3;

/// An error paired with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

pub type CmdResult = Result<(), Failure>;

pub trait ExitCode<T> {
    /// Bad arguments, unreadable inputs, invalid configuration.
    fn usage(self) -> Result<T, Failure>;
    /// A pipeline stage failed on valid input.
    fn analysis(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitCode<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: EXIT_USAGE, error: e.into() })
    }
    fn analysis(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: EXIT_ANALYSIS, error: e.into() })
    }
}

#[derive(Debug, Parser)]
#[command(name = "ucdi", version, about = "Banknote damage analysis and dataset curation")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// INI config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Config override `section.key=value`; repeatable, wins over the file.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perceptual-hash deduplication of class-per-subdirectory datasets.
    Dedup(curate::DedupArgs),
    /// Stratified train/val/test split of a dedup manifest.
    Split(curate::SplitArgs),
    /// Runs the enhancement chain over an image or a directory.
    Preprocess(curate::PreprocessArgs),
    /// Writes randomized training views of one image.
    Augment(curate::AugmentArgs),
    /// Scores one damaged note against its reference.
    Analyze(analysis::AnalyzeArgs),
    /// Scores many notes, one NDJSON line each.
    Batch(analysis::BatchArgs),
}

/// Parses `args` and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    let config = RunConfig::load(cli.global.config.as_deref(), &cli.global.overrides).usage()?;
    match cli.command {
        Command::Dedup(a) => curate::dedup(&a, &config),
        Command::Split(a) => curate::split(&a),
        Command::Preprocess(a) => curate::preprocess(&a, &config),
        Command::Augment(a) => curate::augment(&a, &config),
        Command::Analyze(a) => analysis::analyze(&a, &config),
        Command::Batch(a) => analysis::batch(&a, &config),
    }
}

/// Runs `f` on a rayon pool of `workers` threads; 0 picks the default.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(f))
}
