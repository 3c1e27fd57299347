use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use impact_subtype::evaluation::Task;

use crate::commands;
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;
use crate::meta::RunMeta;

#[derive(Debug, Parser)]
#[command(name = "impact-subtype", version, about = "Head impact subtyping and brain strain regression")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat a previous invocation from its run_meta.json.
    #[arg(long, global = true, conflicts_with = "config")]
    pub from_meta: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of processors.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Dataset manifest CSV.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the feature matrix to CSV (cached by dataset content).
    Extract {
        /// Output file; defaults to <out>/features.csv.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Robust K-means labels for every impact.
    Cluster {
        /// `temporal-16` or comma-separated feature names.
        #[arg(long)]
        subset: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Train one method on the whole dataset and save the model.
    Train {
        #[arg(long)]
        method: Option<String>,
    },
    /// Run the configured evaluation task.
    Run {
        /// Comma-separated method tokens.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long, value_parser = parse_task)]
        task: Option<Task>,
        #[arg(long)]
        partitions: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        holdouts: Option<Vec<String>>,
    },
    /// Rank the 16 peak features by single-feature pipeline performance.
    CriticalPoints {
        #[arg(long)]
        partitions: Option<usize>,
    },
    /// Generate the synthetic two-regime benchmark.
    Synth {
        #[arg(long)]
        per_source: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Equal regime maps and no noise.
        #[arg(long)]
        negative_control: bool,
    },
}

fn parse_task(s: &str) -> Result<Task, String> {
    match s {
        "mixed-test" => Ok(Task::MixedTest),
        "lodo" => Ok(Task::Lodo),
        _ => Err(format!("unknown task `{s}` (mixed-test or lodo)")),
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Extract { .. } => "extract",
            Command::Cluster { .. } => "cluster",
            Command::Train { .. } => "train",
            Command::Run { .. } => "run",
            Command::CriticalPoints { .. } => "critical-points",
            Command::Synth { .. } => "synth",
        }
    }
}

fn overrides(cli: &Cli) -> Overrides {
    let g = &cli.global;
    let mut o = Overrides { manifest: g.manifest.clone(), out_dir: g.out.clone(), seed: g.seed, ..Overrides::default() };
    match &cli.command {
        Command::Cluster { subset, k, repeats } => {
            o.subset = subset.clone();
            o.k = *k;
            o.repeats = *repeats;
        }
        Command::Train { method } => o.methods = method.clone().map(|m| vec![m]),
        Command::Run { methods, task, partitions, holdouts } => {
            o.methods = methods.clone();
            o.task = *task;
            o.partitions = *partitions;
            o.holdouts = holdouts.clone();
        }
        Command::CriticalPoints { partitions } => o.partitions = *partitions,
        Command::Extract { .. } | Command::Synth { .. } => {}
    }
    o
}

/// Resolves the configuration for `cli` without running anything.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.global.from_meta {
        Some(p) => {
            let meta = RunMeta::load(p)?;
            if meta.command != cli.command.name() {
                return Err(CliError::Config(format!("{} records `{}`, not `{}`", p.display(), meta.command, cli.command.name())));
            }
            let mut c = meta.config;
            c.apply(&overrides(cli));
            c
        }
        None => RunConfig::resolve(cli.global.config.as_deref(), &overrides(cli))?,
    };
    if let Command::Synth { per_source, sigma, negative_control } = &cli.command {
        if let Some(n) = per_source {
            cfg.synth.sources.iter_mut().for_each(|s| s.count = *n);
        }
        if let Some(s) = sigma {
            cfg.synth.sigma = *s;
        }
        if *negative_control {
            cfg.synth = cfg.synth.negative_control();
        }
    }
    if let Some(m) = &cfg.manifest {
        // recorded absolute so reruns work from any directory
        if let Ok(abs) = std::fs::canonicalize(m) {
            cfg.manifest = Some(abs);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one invocation and returns the text to print.
pub fn run_app(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve_config(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.global.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Extract { output } => commands::extract(&cfg, output.as_deref()).map(|o| o.summary()),
        Command::Cluster { .. } => commands::cluster(&cfg).map(|o| o.summary()),
        Command::Train { .. } => commands::train(&cfg).map(|o| o.summary()),
        Command::Run { .. } => commands::run(&cfg).map(|o| o.summary()),
        Command::CriticalPoints { .. } => commands::critical_points(&cfg).map(|o| o.summary()),
        Command::Synth { .. } => commands::synth(&cfg).map(|o| o.summary()),
    })
}
