//! `causal-harness` command line.
//!
//! Exit codes: 0 success, 2 input error (unreadable or malformed files,
//! invalid gold rows in `validate`), 3 backend error (missing credentials,
//! bad model config, every request failed), 4 id alignment error in
//! `evaluate`.

pub mod commands;
pub mod manifest;
pub mod settings;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use causal_harness::evalkit::ReportFormat;
use causal_harness::llmclient::API_KEY_ENV;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use commands::{EvaluateJob, PredictJob};
use manifest::RunManifest;
use settings::{Layer, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Backend(String),
    #[error("{0}")]
    Alignment(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Alignment(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "causal-harness", version, about = "Cause/effect span extraction and scoring")]
pub struct Cli {
    /// TOML settings file (flags and CAUSAL_HARNESS_* variables take precedence)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Document count, duplicates and token-length summaries
    Stats {
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// List rows whose gold spans are not substrings of their text
    Validate {
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Extract cause/effect pairs for every row of a corpus
    Predict(PredictArgs),
    /// Score a predictions file against gold
    Evaluate(EvaluateArgs),
    /// Combine saved JSON reports into one comparison table
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Row labels, in input order
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
    },
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Input corpus (`Index; Text` with optional `Cause; Effect`)
    #[arg(required_unless_present = "manifest")]
    pub corpus: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    /// Re-run with the settings recorded in a manifest
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// gen | task | cot
    #[arg(long)]
    pub prompt: Option<String>,
    /// remote | mock-oracle | mock-canned | cue
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Write raw extracted strings instead of spans mapped onto the text
    #[arg(long)]
    pub no_ground: bool,
    /// Gold corpus for mock-oracle (defaults to the input corpus)
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// JSON array of responses for mock-canned
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub concurrency: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub predictions: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// pooled | per-row-macro
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub json: bool,
    /// Also write the report to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Row label in the report table (defaults to the file name)
    #[arg(long)]
    pub label: Option<String>,
}

impl PredictArgs {
    fn layer(&self) -> Layer {
        Layer {
            backend: self.backend.clone(),
            model: self.model.clone(),
            endpoint: self.endpoint.clone(),
            prompt: self.prompt.clone(),
            cache_dir: self.cache_dir.clone(),
            ground: self.no_ground.then_some(false),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            timeout_secs: self.timeout_secs,
            max_retries: self.max_retries,
            concurrency: self.concurrency,
            ..Layer::default()
        }
    }
}

/// Environment and config-file layers, in that order of precedence.
fn base_layer(config: Option<&PathBuf>) -> Result<Layer, CliError> {
    let env = Layer::from_env(|k| std::env::var(k).ok())?;
    let file = match config {
        Some(path) => Layer::from_file(path)?,
        None => Layer::default(),
    };
    Ok(env.over(file))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Stats { corpus, json } => commands::cmd_stats(&corpus, json, stdout).map(|_| ()),
        Command::Validate { corpus, json } => commands::cmd_validate(&corpus, json, stdout),
        Command::Predict(args) => {
            let (lower, recorded) = match &args.manifest {
                Some(path) => {
                    let m = RunManifest::load(path)?;
                    (m.layer(), Some(m))
                }
                None => (base_layer(cli.config.as_ref())?, None),
            };
            let settings = Settings::resolve(args.layer().over(lower))?;
            let pick = |flag: &Option<PathBuf>, f: fn(&RunManifest) -> Option<PathBuf>| {
                flag.clone().or_else(|| recorded.as_ref().and_then(f))
            };
            let job = PredictJob {
                corpus: pick(&args.corpus, |m| Some(m.corpus.clone())).expect("clap requires corpus"),
                out: pick(&args.out, |m| Some(m.output.clone())).expect("clap requires out"),
                gold: pick(&args.gold, |m| m.gold.clone()),
                script: pick(&args.script, |m| m.script.clone()),
                settings,
            };
            let summary = commands::cmd_predict(&job, std::env::var(API_KEY_ENV).ok())?;
            eprintln!(
                "{} rows -> {} ({} cached, {} backend errors, {} unparsed, {} ungrounded)",
                summary.rows,
                job.out.display(),
                summary.cache_hits,
                summary.backend_failures,
                summary.parse_failures,
                summary.not_grounded
            );
            Ok(())
        }
        Command::Evaluate(args) => {
            let flags = Layer {
                metric: args.metric.clone(),
                ..Layer::default()
            };
            let settings = Settings::resolve(flags.over(base_layer(cli.config.as_ref())?))?;
            let job = EvaluateJob {
                predictions: args.predictions,
                gold: args.gold,
                metric: settings.metric,
                json: args.json,
                out: args.out,
                label: args.label,
            };
            commands::cmd_evaluate(&job, stdout).map(|_| ())
        }
        Command::Report {
            reports,
            labels,
            format,
        } => commands::cmd_report(&reports, &labels, format, stdout),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("CAUSAL_HARNESS_LOG")
        .try_init();

    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match dispatch(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn no_ground_flag_maps_to_layer() {
        let cli = Cli::try_parse_from(["causal-harness", "predict", "c.csv", "--out", "o.csv", "--no-ground"]).unwrap();
        let Command::Predict(args) = cli.command else { panic!() };
        assert_eq!(args.layer().ground, Some(false));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Input(String::new()).exit_code(), 2);
        assert_eq!(CliError::Backend(String::new()).exit_code(), 3);
        assert_eq!(CliError::Alignment(String::new()).exit_code(), 4);
    }
}
