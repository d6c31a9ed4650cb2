use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scanfs::baselines::Method;
use scanfs::config::RunConfig;
use scanfs::harness::{cmd_baseline, cmd_eval, cmd_rank, cmd_repro, cmd_select, MaskFile};
use scanfs::synthetic::planted;
use scanfs::Result;

/// Scanning deep Q-learning feature selection.
#[derive(Parser)]
#[command(name = "scanfs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV (data.path).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label column name or 0-based index (data.label).
    #[arg(long)]
    label: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Episode count (dqn.episodes).
    #[arg(long)]
    episodes: Option<usize>,
    /// Any configuration key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut overrides = Vec::new();
        if let Some(p) = &self.data {
            overrides.push(format!("data.path={}", p.display()));
        }
        if let Some(l) = &self.label {
            overrides.push(format!("data.label={l}"));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(o) = &self.out {
            overrides.push(format!("output.dir={}", o.display()));
        }
        if let Some(k) = self.episodes {
            overrides.push(format!("dqn.episodes={k}"));
        }
        overrides.extend(self.set.iter().cloned());
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the agent and write a run directory.
    Select(Common),
    /// Run a baseline selector and print its result as JSON.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// ig_topk, mrmr or sfs.
        #[arg(long)]
        method: String,
        /// Subset size (maximum size for sfs).
        #[arg(long)]
        k: Option<usize>,
        /// Take K from this report's best subset.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a saved subset mask and print metrics as JSON.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mask: PathBuf,
    },
    /// Write the information-gain ranking and correlation table.
    Rank(Common),
    /// Run the relevance/redundancy and index-encoding grids.
    Repro {
        #[command(flatten)]
        common: Common,
        /// Comma-separated master seeds.
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        seeds: Vec<u64>,
    },
    /// Write the planted synthetic dataset as CSV.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 12)]
        noise: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Select(common) => {
            let report = cmd_select(&common.load()?)?;
            match &report.best {
                Some(b) => println!("best subset {:?}, validation accuracy {}", b.features, b.accuracy),
                None => println!("no subset recorded ({} episodes)", report.episodes.len()),
            }
        }
        Command::Baseline { common, method, k, report } => {
            let result = cmd_baseline(&common.load()?, Method::parse(&method)?, k, report.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
        Command::Eval { common, mask } => {
            let out = cmd_eval(&common.load()?, &MaskFile::load(&mask)?)?;
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Rank(common) => {
            let config = common.load()?;
            let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            cmd_rank(&config, &dir)?;
            println!("wrote {} and {}", dir.join("ranking.csv").display(), dir.join("correlation.csv").display());
        }
        Command::Repro { common, seeds } => {
            let rows = cmd_repro(&common.load()?, &seeds)?;
            println!("{} runs recorded", rows.len());
        }
        Command::Synth { out, samples, noise, seed } => {
            planted(samples, noise, seed)?.save_csv(&out, "label")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
