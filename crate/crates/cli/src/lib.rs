//! `irsa`: two-step IRSA simulation, analytic energy model and stopping-set
//! tools.

pub mod config;
pub mod output;

use std::fs::File;
use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use irsa_core::energy::{analytic_energy_report, gamma_of};
use irsa_core::frame::build_frame;
use irsa_core::mc::{run_sweep, trial_rng};
use irsa_core::sic::run_two_step;
use irsa_core::stopset::{self, builtin_table, compare, enumerate, label_like, DiffStatus, EnumerationBounds};
use irsa_core::{Report, StoppingSet};
use serde::Serialize;

use config::{CatalogSource, ExperimentConfig, Format};
use output::{write_rows, AnalyticRow, SimRow};

#[derive(Parser)]
#[command(name = "irsa", version, about = "Two-step IRSA simulator and energy model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML, or a JSON result / echo)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores
    #[arg(long, global = true, env = "IRSA_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Comma-separated channel loads
    #[arg(long, global = true, value_delimiter = ',')]
    loads: Option<Vec<f64>>,
    /// Comma-separated first-part lengths
    #[arg(long, global = true, value_delimiter = ',')]
    alphas: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep; one row per (scheme, alpha, G)
    Simulate,
    /// Analytic energy model over the same grid
    Analyze,
    /// Enumerate minimal stopping sets and diff them against the built-in table
    Stopsets {
        #[arg(long, default_value_t = EnumerationBounds::TABLE.max_users)]
        max_users: usize,
        #[arg(long, default_value_t = EnumerationBounds::TABLE.max_slots)]
        max_slots: usize,
        #[arg(long, default_value_t = EnumerationBounds::TABLE.max_degree)]
        max_degree: usize,
    },
    /// Print the first-part degree distribution Γ(x)
    Gamma {
        /// Comma-separated Λ_r, r = 0, 1, ...
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        alpha: Option<usize>,
    },
    /// Print the effective configuration (file plus flags) as TOML
    Config,
    /// Decode one frame and dump it as JSON
    Trace {
        #[arg(long)]
        load: f64,
        #[arg(long)]
        alpha: usize,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn usage(e: anyhow::Error) -> Failure {
    Failure::Usage(e)
}

fn runtime(e: anyhow::Error) -> Failure {
    Failure::Runtime(e)
}

/// Runs the command line `args` (program name first), writing results that
/// have no `--out` file to `out`. Returns the process exit code: 0 success,
/// 1 usage or configuration error, 2 runtime error.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(Failure::Runtime(e)) if broken_pipe(&e) => 0,
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

/// A closed stdout (`irsa ... | head`) is not a failure.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        cause.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            || cause
                .downcast_ref::<serde_json::Error>()
                .and_then(|j| j.io_error_kind())
                .is_some_and(|k| k == io::ErrorKind::BrokenPipe)
            || cause
                .downcast_ref::<csv::Error>()
                .is_some_and(|c| matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe))
    })
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Outcome {
    let config = load_config(&cli.common).map_err(usage)?;
    match cli.command {
        Command::Simulate => simulate(&config, out),
        Command::Analyze => analyze(&config, out),
        Command::Stopsets {
            max_users,
            max_slots,
            max_degree,
        } => stopsets(&config, EnumerationBounds { max_users, max_slots, max_degree }, out),
        Command::Gamma { lambda, n, alpha } => gamma(&config, lambda, n, alpha, out),
        Command::Trace { load, alpha, trial } => trace(&config, load, alpha, trial, out),
        Command::Config => {
            config.validate().map_err(usage)?;
            write!(out, "{}", config.to_toml()).map_err(|e| runtime(e.into()))
        }
    }
}

/// Config file (or defaults) with command-line overrides applied.
fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        config.output.path = Some(out.clone());
    }
    if let Some(format) = common.format {
        config.output.format = format;
    }
    if let Some(seed) = common.seed {
        config.sweep.seed = seed;
    }
    if let Some(workers) = common.workers {
        config.sweep.workers = workers;
    }
    if let Some(trials) = common.trials {
        config.sweep.trials = trials;
    }
    if let Some(loads) = &common.loads {
        config.sweep.loads = loads.clone();
    }
    if let Some(alphas) = &common.alphas {
        config.sweep.alphas = alphas.clone();
    }
    Ok(config)
}

fn sink<'a>(config: &ExperimentConfig, out: &'a mut dyn Write) -> anyhow::Result<Box<dyn Write + 'a>> {
    Ok(match &config.output.path {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(out),
    })
}

fn emit<R: Serialize>(config: &ExperimentConfig, command: &str, rows: &[R], out: &mut dyn Write) -> Outcome {
    let out = sink(config, out).map_err(runtime)?;
    write_rows(out, config.output.format, command, config, rows).map_err(runtime)
}

fn simulate(config: &ExperimentConfig, out: &mut dyn Write) -> Outcome {
    config.validate().map_err(usage)?;
    let spec = config.sweep_spec().map_err(usage)?;
    let stats = run_sweep(&spec).map_err(|e| runtime(e.into()))?;
    let rows: Vec<SimRow> = stats.iter().map(SimRow::from_stats).collect();
    emit(config, "simulate", &rows, out)
}

fn catalog(config: &ExperimentConfig) -> anyhow::Result<Vec<StoppingSet>> {
    Ok(match config.analysis.catalog {
        CatalogSource::Builtin => builtin_table(),
        CatalogSource::Enumerate => label_like(enumerate(EnumerationBounds::TABLE)?, &builtin_table()),
        CatalogSource::File => {
            let path = config
                .analysis
                .catalog_path
                .as_ref()
                .ok_or_else(|| anyhow!("analysis.catalog_path is not set"))?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            stopset::from_text(&text).with_context(|| format!("parsing {}", path.display()))?
        }
    })
}

fn analyze(config: &ExperimentConfig, out: &mut dyn Write) -> Outcome {
    config.validate().map_err(usage)?;
    let base = config.frame_config().map_err(usage)?;
    let catalog = catalog(config).map_err(usage)?;
    let options = config.analytic_options();
    let mut rows = Vec::new();
    for scheme in config.schemes() {
        let frame = base.clone().with_alpha(scheme.alpha(base.n)).map_err(|e| usage(e.into()))?;
        for &load in &config.sweep.loads {
            let report: Report =
                analytic_energy_report(&frame, &load, &catalog, options).map_err(|e| runtime(e.into()))?;
            let mut row = AnalyticRow::from_report(&report, scheme, config.sweep.seed);
            if config.output.format == Format::Csv {
                row.gamma = None;
            }
            rows.push(row);
        }
    }
    emit(config, "analyze", &rows, out)
}

#[derive(Serialize)]
struct DiffLine {
    label: Option<u32>,
    profile: Vec<u32>,
    slots: usize,
    users: usize,
    multiplicity: u64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    enumerated_multiplicity: Option<u64>,
}

fn stopsets(config: &ExperimentConfig, bounds: EnumerationBounds, out: &mut dyn Write) -> Outcome {
    bounds.validate().map_err(|e| usage(e.into()))?;
    let reference: Vec<StoppingSet> = builtin_table()
        .into_iter()
        .filter(|s| s.users() <= bounds.max_users && s.slots() <= bounds.max_slots && s.max_degree() <= bounds.max_degree)
        .collect();
    let found = label_like(enumerate(bounds).map_err(|e| runtime(e.into()))?, &builtin_table());
    let diff = compare(&found, &reference);

    if let Some(path) = &config.output.path {
        std::fs::write(path, stopset::to_text(&found))
            .with_context(|| format!("writing {}", path.display()))
            .map_err(runtime)?;
    }

    let lines: Vec<DiffLine> = diff
        .rows
        .iter()
        .map(|row| {
            let (status, enumerated_multiplicity) = match row.status {
                DiffStatus::Matched => ("matched", None),
                DiffStatus::Missing => ("missing", None),
                DiffStatus::Extra => ("extra", None),
                DiffStatus::MultiplicityMismatch { enumerated, .. } => ("c-mismatch", Some(enumerated)),
            };
            DiffLine {
                label: row.label,
                profile: row.set.profile().to_vec(),
                slots: row.set.slots(),
                users: row.set.users(),
                multiplicity: row.set.multiplicity(),
                status,
                enumerated_multiplicity,
            }
        })
        .collect();
    let count = |s: &str| lines.iter().filter(|l| l.status == s).count();
    let written = match config.output.format {
        Format::Json => serde_json::to_writer_pretty(&mut *out, &lines)
            .map_err(anyhow::Error::from)
            .and_then(|_| Ok(writeln!(out)?)),
        Format::Csv => (|| {
            for l in &lines {
                let label = l.label.map_or_else(|| "-".to_string(), |s| format!("s{s}"));
                let extra = l.enumerated_multiplicity.map_or_else(String::new, |c| format!(" (enumerated c={c})"));
                writeln!(
                    out,
                    "{label:>4} nu={:?} mu={} omega={} c={} {}{extra}",
                    l.profile, l.slots, l.users, l.multiplicity, l.status
                )?;
            }
            writeln!(
                out,
                "{} matched, {} missing, {} extra, {} c-mismatch",
                count("matched"),
                count("missing"),
                count("extra"),
                count("c-mismatch")
            )?;
            Ok(())
        })(),
    };
    written.map_err(runtime)
}

#[derive(Serialize)]
struct GammaLine {
    n: usize,
    alpha: usize,
    lambda: Vec<f64>,
    gamma: Vec<f64>,
    mean_first_part: f64,
}

fn gamma(
    config: &ExperimentConfig,
    lambda: Option<String>,
    n: Option<usize>,
    alpha: Option<usize>,
    out: &mut dyn Write,
) -> Outcome {
    let lambda = match lambda {
        Some(text) => irsa_core::Distribution::parse(&text)
            .and_then(|d| irsa_core::Distribution::base(d.coeffs().to_vec()))
            .map_err(|e| usage(e.into()))?,
        None => config.distribution().map_err(usage)?,
    };
    let n = n.unwrap_or(config.frame.n);
    let alphas = match alpha {
        Some(a) => vec![a],
        None => config.sweep.alphas.clone(),
    };
    let mut lines = Vec::new();
    for alpha in alphas {
        let split = gamma_of(&lambda, n, alpha).map_err(|e| usage(e.into()))?;
        lines.push(GammaLine {
            n,
            alpha,
            lambda: lambda.coeffs().to_vec(),
            gamma: split.coeffs().to_vec(),
            mean_first_part: split.mean_first_part(),
        });
    }
    let written: anyhow::Result<()> = match config.output.format {
        Format::Json => serde_json::to_writer_pretty(&mut *out, &lines)
            .map_err(anyhow::Error::from)
            .and_then(|_| Ok(writeln!(out)?)),
        Format::Csv => lines.iter().try_for_each(|l| {
            let coeffs: Vec<String> = l.gamma.iter().map(|g| format!("{g:.4}")).collect();
            Ok(writeln!(out, "n={} alpha={} gamma=[{}]", l.n, l.alpha, coeffs.join(", "))?)
        }),
    };
    written.map_err(runtime)
}

#[derive(Serialize)]
struct TraceDump {
    n: usize,
    alpha: usize,
    load: f64,
    seed: u64,
    trial: u64,
    /// 1-based slots per user.
    placements: Vec<Vec<u32>>,
    first_part: Vec<usize>,
    first_decoded: Vec<usize>,
    feedback_hex: String,
    transmitted: Vec<usize>,
    final_decoded: Vec<usize>,
    energy_first: f64,
    energy_second: f64,
}

fn trace(config: &ExperimentConfig, load: f64, alpha: usize, trial: u64, out: &mut dyn Write) -> Outcome {
    let base = config.frame_config().map_err(usage)?;
    let users = irsa_core::frame::users_at_load(base.n, load).map_err(|e| usage(e.into()))?;
    let frame = base.with_users(users).with_alpha(alpha).map_err(|e| usage(e.into()))?;
    let seed = config.sweep.seed;
    let graph = build_frame(&frame, &mut trial_rng(seed, 0, trial));
    let decoded = run_two_step(&graph, alpha, frame.energy_unit()).map_err(|e| runtime(e.into()))?;
    let dump = TraceDump {
        n: frame.n,
        alpha,
        load,
        seed,
        trial,
        placements: graph.placements().iter().map(|p| p.iter().map(|s| s + 1).collect()).collect(),
        first_part: decoded.first_part.clone(),
        first_decoded: decoded.first_decoded.clone(),
        feedback_hex: decoded.feedback.to_hex(),
        transmitted: decoded.transmitted.clone(),
        final_decoded: decoded.final_decoded().to_vec(),
        energy_first: decoded.energy_first,
        energy_second: decoded.energy_second,
    };
    let mut sink = sink(config, out).map_err(runtime)?;
    serde_json::to_writer_pretty(&mut sink, &dump)
        .map_err(anyhow::Error::from)
        .and_then(|_| Ok(writeln!(sink)?))
        .map_err(runtime)
}
