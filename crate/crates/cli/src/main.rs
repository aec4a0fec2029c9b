//! `nesslab`: profiles, exact and closed-form two-point functions,
//! simulation, verification and parameter sweeps from one binary.
//!
//! Exit status is 0 on success, 1 when a computation fails (or `verify`
//! finds a failing check) and 2 on a usage error.

mod commands;
mod config;
mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config_text, Command, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "nesslab",
    version,
    about = "Stationary two-point functions of a boundary-driven redistribution chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Stationary mean profile E_N(i), i = 0..N+1.
    Profile {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Exact two-point function from the stationarity linear system.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Closed-form coefficients and tables under the second-moment prescription.
    ClosedForm {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monte Carlo estimates with batch-means standard errors.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Runs the built-in consistency checks over the default grid.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Report format: text or json.
        #[arg(long, value_name = "FORMAT")]
        report: Option<String>,
    },
    /// Tabulates scalar observables over one or two swept parameters.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// `name=start:stop:step` or `name=v1,v2,...`; at most twice.
        #[arg(long = "sweep", value_name = "AXIS")]
        sweep: Vec<String>,
        /// Comma list from prefactor, corr_mid, fit_residual, l2, r2.
        #[arg(long, value_name = "LIST")]
        observables: Option<String>,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Flat key=value file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file. Defaults to stdout, or to a file in the output directory.
    #[arg(long, value_name = "PATH")]
    output: Option<String>,
    /// Directory for outputs when --output is not given.
    #[arg(long, env = "NESSLAB_OUT_DIR", value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// csv or json.
    #[arg(long, value_name = "FORMAT")]
    out: Option<String>,
    /// Largest accepted N.
    #[arg(long, value_name = "N")]
    max_n: Option<String>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Number of sites (at least 3).
    #[arg(long)]
    n: Option<String>,
    /// Retained fraction, in [0, 1).
    #[arg(long)]
    lambda: Option<String>,
    /// E[ε(1−ε)], in (0, 1/4]. May be combined with --nu if consistent.
    #[arg(long)]
    alpha: Option<String>,
    /// Law of ε: uniform, delta-half, beta:K or two-atom:P.
    #[arg(long, value_name = "LAW")]
    nu: Option<String>,
    /// Left reservoir mean.
    #[arg(long)]
    tl: Option<String>,
    /// Right reservoir mean.
    #[arg(long)]
    tr: Option<String>,
    /// Left reservoir second moment.
    #[arg(long)]
    l2: Option<String>,
    /// Right reservoir second moment.
    #[arg(long)]
    r2: Option<String>,
    /// Use the second moments for which the two-point function is multilinear.
    #[arg(long)]
    prescribed: bool,
    /// Left boundary rate.
    #[arg(long)]
    gamma_l: Option<String>,
    /// Right boundary rate.
    #[arg(long)]
    gamma_r: Option<String>,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// gamma, two-atom or deterministic.
    #[arg(long, value_name = "KIND")]
    reservoir_left: Option<String>,
    /// gamma, two-atom or deterministic.
    #[arg(long, value_name = "KIND")]
    reservoir_right: Option<String>,
    /// Events per replica, burn-in included.
    #[arg(long)]
    events: Option<String>,
    /// Events discarded at the start (default 20% of --events).
    #[arg(long)]
    burn_in: Option<String>,
    /// Batches per replica.
    #[arg(long)]
    batches: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Independent trajectories, run in parallel.
    #[arg(long)]
    replicas: Option<String>,
}

type Pairs = Vec<(&'static str, String)>;

fn collect(pairs: &mut Pairs, entries: impl IntoIterator<Item = (&'static str, Option<String>)>) {
    pairs.extend(entries.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
}

impl CommonArgs {
    fn pairs(&self, out: &mut Pairs) {
        collect(
            out,
            [
                ("output", self.output.clone()),
                ("out", self.out.clone()),
                ("max-n", self.max_n.clone()),
            ],
        );
    }
}

impl ModelArgs {
    fn pairs(&self, out: &mut Pairs) {
        collect(
            out,
            [
                ("n", self.n.clone()),
                ("lambda", self.lambda.clone()),
                ("alpha", self.alpha.clone()),
                ("nu", self.nu.clone()),
                ("tl", self.tl.clone()),
                ("tr", self.tr.clone()),
                ("l2", self.l2.clone()),
                ("r2", self.r2.clone()),
                ("prescribed", self.prescribed.then(|| "true".to_string())),
                ("gamma-l", self.gamma_l.clone()),
                ("gamma-r", self.gamma_r.clone()),
            ],
        );
    }
}

impl SimArgs {
    fn pairs(&self, out: &mut Pairs) {
        collect(
            out,
            [
                ("reservoir-left", self.reservoir_left.clone()),
                ("reservoir-right", self.reservoir_right.clone()),
                ("events", self.events.clone()),
                ("burn-in", self.burn_in.clone()),
                ("batches", self.batches.clone()),
                ("seed", self.seed.clone()),
                ("replicas", self.replicas.clone()),
            ],
        );
    }
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config entries or parameter values.
    Usage(anyhow::Error),
    /// Numerical failure, I/O failure or a failed verification.
    Compute(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }

    /// Parameter problems found by the core library count as usage errors.
    pub fn classify(e: anyhow::Error) -> Self {
        use nesslab::Error as E;
        let usage = e.chain().any(|c| {
            c.is::<nesslab::ParamError>()
                || matches!(
                    c.downcast_ref::<E>(),
                    Some(
                        E::Param(_)
                            | E::InsufficientEvents { .. }
                            | E::UnitRatesRequired { .. }
                            | E::IndexOutOfRange { .. }
                    )
                )
        });
        if usage {
            Failure::Usage(e)
        } else {
            Failure::Compute(e)
        }
    }
}

/// The text to write, and whether the run counts as a success.
pub struct Outcome {
    pub body: String,
    pub extension: &'static str,
    pub ok: bool,
}

fn resolve(cli: Cli) -> Result<(RunConfig, Option<PathBuf>), Failure> {
    let mut pairs = Pairs::new();
    let (command, common) = match &cli.command {
        Sub::Profile { common, model } => {
            model.pairs(&mut pairs);
            (Command::Profile, common)
        }
        Sub::Solve { common, model } => {
            model.pairs(&mut pairs);
            (Command::Solve, common)
        }
        Sub::ClosedForm { common, model } => {
            model.pairs(&mut pairs);
            (Command::ClosedForm, common)
        }
        Sub::Simulate { common, model, sim } => {
            model.pairs(&mut pairs);
            sim.pairs(&mut pairs);
            (Command::Simulate, common)
        }
        Sub::Verify { common, report } => {
            collect(&mut pairs, [("report", report.clone())]);
            (Command::Verify, common)
        }
        Sub::Sweep {
            common,
            model,
            sweep,
            observables,
        } => {
            model.pairs(&mut pairs);
            if !sweep.is_empty() {
                pairs.push(("sweep", sweep.join(";")));
            }
            collect(&mut pairs, [("observables", observables.clone())]);
            (Command::Sweep, common)
        }
    };
    common.pairs(&mut pairs);

    let mut file_entries = Vec::new();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(anyhow::anyhow!("cannot read config {}: {e}", path.display())))?;
        file_entries =
            parse_config_text(&text).map_err(|e| Failure::Usage(e.context(format!("config {}", path.display()))))?;
        // The subcommand on the command line decides what runs.
        file_entries.retain(|(k, _)| k != "command");
    }
    let config = RunConfig::from_pairs(
        command,
        file_entries
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .chain(pairs.iter().map(|(k, v)| (*k, v.as_str()))),
    )
    .map_err(Failure::Usage)?;
    Ok((config, common.out_dir.clone()))
}

fn destination(config: &RunConfig, out_dir: Option<&Path>, extension: &str) -> Option<PathBuf> {
    match (&config.output, out_dir) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(format!("{}.{extension}", config.command.name()))),
        (None, None) => None,
    }
}

fn write_output(path: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match path {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", parent.display()))?;
            }
            std::fs::write(path, body).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Parses `argv`, runs the subcommand and writes its output.
pub fn dispatch<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    let result = resolve(cli).and_then(|(config, out_dir)| {
        let outcome = commands::run(&config)?;
        let path = destination(&config, out_dir.as_deref(), outcome.extension);
        write_output(path.as_deref(), &outcome.body).map_err(Failure::Compute)?;
        if outcome.ok {
            Ok(())
        } else {
            Err(Failure::Compute(anyhow::anyhow!("verification failed")))
        }
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Compute(e)) = &f;
            eprintln!("nesslab: error: {e:#}");
            f.code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(dispatch(std::env::args_os()))
}
