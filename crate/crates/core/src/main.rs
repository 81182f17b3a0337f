use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use calibench::bench::{
    build_report, emit_report, load_all_records, run_dynamics, run_experiment, DatasetConfig, ExperimentConfig,
    RunOptions, RunSummary,
};
use calibench::dataset::write_canonical;
use calibench::eval::{footprint, BinSpec};
use calibench::{Error, MethodKind, TrainedModel};

const ENV_WORKERS: &str = "CALIBENCH_WORKERS";

#[derive(Parser)]
#[command(name = "calibench", version, about = "Calibration benchmarks for chemical multisensor arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a raw archive and write it in the canonical CSV layout.
    Ingest {
        /// `loader:path`, e.g. `enea:AirQualityUCI.csv`.
        #[arg(long)]
        dataset: String,
        /// Column schema for the generic loader.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Destination CSV; metadata is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the grid-search protocol.
    Run(RunArgs),
    /// Continue an interrupted run from its output directory.
    Resume {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Rebuild the report tables from stored trial records.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Derivative-binned error and step-response analysis of the winners.
    Dynamics {
        #[arg(long)]
        out: PathBuf,
        /// Minimum set-point change counted as a step, in target units.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Storage and compute cost of serialized models.
    Footprint {
        /// Model files; defaults to every winner under `--out`.
        models: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (TOML); its keys take precedence over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated: mlr,mlp,svr,gpr,esn.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Comma-separated partitions such as `504-168-7002` or `504-168-rest`.
    #[arg(long, value_delimiter = ',')]
    tsl: Option<Vec<String>>,
    /// Comma-separated window lengths such as `1h,3h`.
    #[arg(long, value_delimiter = ',')]
    tdl: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, short)]
    quiet: bool,
}

enum Failure {
    Usage(String),
    Data(String),
    Incomplete(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Incomplete(cells)) => {
            eprintln!("incomplete: {} cell(s) without a successful trial: {}", cells.len(), cells.join(", "));
            ExitCode::from(3)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Ingest { dataset, schema, out } => {
            let mut d = DatasetConfig::from_reference(&dataset)?;
            d.schema = schema;
            let ds = d.load()?;
            let meta = write_canonical(&ds, &out)?;
            let missing = ds.missing_mask().iter().filter(|m| **m).count();
            println!(
                "{}: {} rows, {} channels, targets [{}], period {} s, {} rows with a missing sensor",
                ds.name,
                ds.len(),
                ds.n_channels(),
                ds.targets().iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", "),
                ds.sampling_period,
                missing
            );
            println!("wrote {} and {}", out.display(), meta.display());
            Ok(())
        }
        Command::Run(args) => {
            let quiet = args.quiet;
            let cfg = resolve_config(args)?;
            finish(run_experiment(&cfg, &RunOptions { verbose: !quiet })?, &cfg.out)
        }
        Command::Resume { out, workers } => {
            let mut cfg = ExperimentConfig::load(out.join("config.toml"))?;
            cfg.out = out;
            if let Some(w) = env_workers()?.or(workers) {
                cfg.workers = w;
            }
            finish(run_experiment(&cfg, &RunOptions { verbose: true })?, &cfg.out)
        }
        Command::Report { out } => {
            let report = build_report(&load_all_records(&out)?);
            emit_report(&report, &out)?;
            print_table(&out)
        }
        Command::Dynamics { out, threshold, bins } => {
            if bins == 0 {
                return Err(Failure::Usage("--bins must be positive".into()));
            }
            run_dynamics(&out, threshold, &BinSpec::Quantile(bins))?;
            println!("wrote {} and {}", out.join("derivative_bins.csv").display(), out.join("transient.csv").display());
            Ok(())
        }
        Command::Footprint { models, out } => {
            let paths = if models.is_empty() {
                let out = out.ok_or_else(|| Failure::Usage("give model files or --out".into()))?;
                winner_models(&out)?
            } else {
                models
            };
            println!("model,kind,stored,macs,nonlinear,class");
            for p in paths {
                let text = std::fs::read_to_string(&p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
                let f = footprint(&TrainedModel::from_text(&text)?);
                println!("{},{},{},{},{},{}", p.display(), f.kind, f.stored, f.macs, f.nonlinear, f.class);
            }
            Ok(())
        }
    }
}

fn env_workers() -> Result<Option<usize>, Failure> {
    match std::env::var(ENV_WORKERS) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{ENV_WORKERS}={v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

/// Preset for the dataset loader, then flags, then the config file; the
/// output directory flag always applies last.
fn resolve_config(a: RunArgs) -> Result<ExperimentConfig, Failure> {
    let file = match &a.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let file_value: Option<toml::Value> = match &file {
        Some(t) => Some(toml::from_str(t).map_err(|e| Failure::Usage(format!("config: {e}")))?),
        None => None,
    };
    let file_dataset = file_value.as_ref().and_then(|v| v.get("dataset")).cloned();
    let dataset = match (&a.dataset, file_dataset) {
        (_, Some(d)) => d.try_into::<DatasetConfig>().map_err(|e| Failure::Usage(format!("config [dataset]: {e}")))?,
        (Some(r), None) => DatasetConfig::from_reference(r)?,
        (None, None) => return Err(Failure::Usage("no dataset: pass --dataset loader:path or a config file".into())),
    };
    let mut cfg = ExperimentConfig::preset(dataset);
    if let Some(t) = a.target {
        cfg.target = t;
    }
    if let Some(m) = a.methods {
        cfg.methods = m
            .iter()
            .map(|s| s.parse::<MethodKind>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(t) = a.tsl {
        cfg.splits = t;
    }
    if let Some(t) = a.tdl {
        cfg.tdl = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(text) = &file {
        cfg = cfg.overlay_toml(text)?;
    }
    let file_sets_workers = file_value.as_ref().is_some_and(|v| v.get("workers").is_some());
    if !file_sets_workers {
        if let Some(w) = env_workers()?.or(a.workers) {
            cfg.workers = w;
        }
    }
    if let Some(o) = a.out {
        cfg.out = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(s: RunSummary, out: &Path) -> Result<(), Failure> {
    println!("{} trials run, {} reused from earlier records", s.trials_run, s.trials_reused);
    print_table(out)?;
    if s.complete() {
        Ok(())
    } else {
        Err(Failure::Incomplete(s.empty_cells))
    }
}

fn print_table(out: &Path) -> Result<(), Failure> {
    let p = out.join("table2.txt");
    let text = std::fs::read_to_string(&p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
    print!("{text}");
    Ok(())
}

fn winner_models(out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let cells = out.join("cells");
    let entries = std::fs::read_dir(&cells).map_err(|e| Failure::Data(format!("{}: {e}", cells.display())))?;
    let mut v: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("winner").join("model.txt"))
        .filter(|p| p.exists())
        .collect();
    v.sort();
    Ok(v)
}
