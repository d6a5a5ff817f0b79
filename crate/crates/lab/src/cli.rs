//! Command-line front end of the `parabolic` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{LabError, Result};
use crate::experiments::run_experiment;
use crate::fixtures::list_builtin_fixtures;
use crate::io::write_file;
use crate::report::json_bytes;
use crate::runner::RayonRunner;

#[derive(Debug, Parser)]
#[command(
    name = "parabolic",
    version,
    about = "Numerical experiments for degenerate parabolic equations and their diffusions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for path simulation; all cores by default.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    Norms,
    Embed,
    Variational,
    Pde,
    Degiorgi,
    Sde,
    /// Runs the acceptance suite; a config file is optional.
    Acceptance,
    /// Prints the catalog of named coefficient families and test functions.
    Fixtures,
}

impl Command {
    fn kind(self) -> Option<Kind> {
        Some(match self {
            Command::Norms => Kind::Norms,
            Command::Embed => Kind::Embed,
            Command::Variational => Kind::Variational,
            Command::Pde => Kind::Pde,
            Command::Degiorgi => Kind::Degiorgi,
            Command::Sde => Kind::Sde,
            Command::Acceptance => Kind::Acceptance,
            Command::Fixtures => return None,
        })
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out_hint = cli.out.clone();
    match run(&cli) {
        Ok(()) => 0,
        Err((err, out)) => {
            let record = err.record();
            let text = String::from_utf8(json_bytes(&record)).expect("utf-8");
            eprint!("{text}");
            if let Some(dir) = out.or(out_hint) {
                let _ = write_file(&dir.join("error.json"), text.as_bytes());
            }
            record.exit_code
        }
    }
}

type Failure = (LabError, Option<PathBuf>);

fn load(cli: &Cli, kind: Kind) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, kind) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Kind::Acceptance) => ExperimentConfig::acceptance(0, PathBuf::from("runs")),
        (None, _) => {
            return Err(LabError::config(format!(
                "`{}` needs --config <path>",
                kind.name()
            )))
        }
    };
    if cfg.experiment.kind() != kind {
        return Err(LabError::config(format!(
            "configuration is for `{}` but the subcommand is `{}`",
            cfg.experiment.kind().name(),
            kind.name()
        )));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let Some(kind) = cli.command.kind() else {
        print!(
            "{}",
            String::from_utf8(json_bytes(&list_builtin_fixtures())).expect("utf-8")
        );
        return Ok(());
    };
    let cfg = load(cli, kind).map_err(|e| (e, None))?;
    let root = cfg.output_dir.clone();
    let fail = |e: LabError| (e, Some(root.clone()));
    let runner = RayonRunner::new(cli.threads).map_err(fail)?;
    let threads = cli.threads.unwrap_or_else(rayon::current_num_threads);
    let out = run_experiment(&cfg, &runner).map_err(fail)?;
    if kind == Kind::Acceptance {
        print_acceptance(&out.files[0].bytes);
    }
    let dir = out.write(&root, threads).map_err(fail)?;
    println!("wrote {}", dir.display());
    match &out.failure {
        Some(msg) => Err((LabError::Acceptance(msg.clone()), Some(dir))),
        None => Ok(()),
    }
}

fn print_acceptance(report: &[u8]) {
    let v: serde_json::Value = serde_json::from_slice(report).expect("report is JSON");
    for c in v["result"].as_array().into_iter().flatten() {
        let verdict = if c["passed"].as_bool() == Some(true) {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "criterion {:>2} {verdict}  {}: {}",
            c["id"],
            c["title"].as_str().unwrap_or(""),
            c["detail"].as_str().unwrap_or("")
        );
    }
}

/// Convenience for tests and scripts: the run directory of `cfg` below `root`.
pub fn run_dir(root: &Path, cfg: &ExperimentConfig) -> PathBuf {
    root.join(format!(
        "{}-{}",
        cfg.experiment.kind().name(),
        &cfg.hash()[..12]
    ))
}
