//! Command-line front end for the pore-probability pipeline.
//!
//! `pkde synth` writes a synthetic build, `label` turns its CT volumes into
//! pore-probability labels, `train` and `tune` fit the network, `eval`
//! scores predictions and `report` regroups the scores. Every command is
//! seeded and writes byte-identical artifacts for identical inputs; wall
//! times and timestamps go only to `run_metadata_<command>.json`.

pub mod args;
mod commands;
pub mod config;
mod error;
mod metadata;
mod paths;

use std::path::PathBuf;

use serde_json::Value;

pub use args::{Cli, Command};
pub use commands::{eval::EvalSummary, label::LabelSummary, synth::SynthSummary};
pub use error::CliError;
pub use metadata::metadata_file;
pub use paths::{layer_file, layer_stem};

/// Environment variable consulted when `--threads` is not given.
pub const THREADS_ENV: &str = "PKDE_THREADS";

/// Global options after merging flags, config file and environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub verbose: u8,
}

impl RunConfig {
    pub fn require_seed(&self, command: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Usage(format!("{command} needs --seed")))
    }

    pub fn require_out(&self, command: &str) -> Result<PathBuf, CliError> {
        self.out.clone().ok_or_else(|| CliError::Usage(format!("{command} needs --out")))
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v} is not a thread count")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // a second run in the same process keeps the first logger
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.global.config {
        Some(p) => config::load_config(p)?,
        None => Default::default(),
    };
    let global: args::GlobalArgs = config::merge(&cli.global, config::global_section(&file), "global options")?;
    let rc = RunConfig {
        seed: global.seed,
        out: global.out,
        threads: resolve_threads(global.threads)?,
        verbose: global.verbose,
    };
    init_logging(rc.verbose);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(rc.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let name = cli.command.name();
    let section = config::command_section(&file, name)?;
    pool.install(|| match &cli.command {
        Command::Synth(a) => commands::synth::run(&rc, &config::merge(a, section, name)?).map(drop),
        Command::Label(a) => commands::label::run(&rc, &config::merge(a, section, name)?).map(drop),
        Command::Train(a) => commands::train::run(&rc, &config::merge(a, section, name)?),
        Command::Tune(a) => commands::tune::run(&rc, &config::merge(a, section, name)?),
        Command::Eval(a) => commands::eval::run(&rc, &config::merge(a, section, name)?).map(drop),
        Command::Report(a) => commands::report::run(&rc, &config::merge(a, section, name)?),
    })
}

/// Parses `argv` and runs it, returning the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn options_value<T: serde::Serialize>(options: &T) -> Value {
    serde_json::to_value(options).expect("options serialize")
}
