use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use hidden_rewards::agents::AgentMode;
use hidden_rewards::config::{load_config, parse_seeds, ExperimentConfig, Preset};
use hidden_rewards::experiment::{estimate_replay, run_experiment, summary_table};
use hidden_rewards::golden::run_golden_checks;
use hidden_rewards::report::{fmt_sig, read_replay};

#[derive(Parser)]
#[command(name = "hidden-rewards", version, about = "Incentive design against agents with hidden rewards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the epsilon-greedy principal over a set of seeds.
    Run(RunArgs),
    /// Check the worked examples against their published values.
    VerifyExamples,
    /// Replay a recorded (incentives, choice) history through the estimator.
    Estimate(EstimateArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Built-in instance (table1_n5, table1_n10, example1, example2).
    #[arg(long, conflicts_with = "config")]
    preset: Option<Preset>,
    /// JSON experiment config; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Horizon.
    #[arg(long = "T", visible_alias = "horizon")]
    horizon: Option<u64>,
    /// Seeds, e.g. `1..5`, `1..=3` or `7,9`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    agent: Option<AgentMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    varsigma: Option<f64>,
    /// Comma-separated checkpoint rounds.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
    /// Write a per-round CSV for each seed.
    #[arg(long)]
    rounds_log: bool,
    #[arg(long)]
    setting_id: Option<String>,
}

#[derive(clap::Args)]
struct EstimateArgs {
    /// CSV with `chosen` and `pi_1..pi_n` columns.
    #[arg(long)]
    replay: PathBuf,
    /// Take the reward box from a preset.
    #[arg(long, conflicts_with = "half_width")]
    preset: Option<Preset>,
    /// Half-width of the normalized reward box.
    #[arg(long)]
    half_width: Option<f64>,
    /// Write the compressed constraint set as JSON.
    #[arg(long)]
    save_polytope: Option<PathBuf>,
}

fn build_config(args: RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&args.config, args.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(p)) => ExperimentConfig::for_preset(p, 0),
        (None, None) => bail!("either --preset or --config is required"),
    };
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if cfg.horizon == 0 {
        bail!("a horizon is required (--T)");
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(a) = args.agent {
        cfg.agent = a;
    }
    if let Some(o) = args.out {
        cfg.out_dir = o;
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(v) = args.varsigma {
        cfg.varsigma = v;
    }
    if args.checkpoints.is_some() {
        cfg.checkpoints = args.checkpoints;
    }
    if args.setting_id.is_some() {
        cfg.setting_id = args.setting_id;
    }
    cfg.rounds_log |= args.rounds_log;
    Ok(cfg)
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = build_config(args)?;
    let outcome = run_experiment(&cfg)?;
    print!("{}", summary_table(&outcome));
    println!("wrote {}", outcome.csv_path.display());
    println!("wrote {}", outcome.manifest_path.display());
    Ok(ExitCode::SUCCESS)
}

fn verify_examples() -> anyhow::Result<ExitCode> {
    let checks = run_golden_checks()?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!("{c}");
    }
    println!("{} checks, {} failed", checks.len(), failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn estimate(args: EstimateArgs) -> anyhow::Result<ExitCode> {
    let half_width = match (args.preset, args.half_width) {
        (Some(p), _) => p.instance().box_half_width(),
        (None, Some(w)) => w,
        (None, None) => bail!("either --preset or --half-width is required"),
    };
    let file = File::open(&args.replay).with_context(|| format!("opening {}", args.replay.display()))?;
    let rows = read_replay(file)?;
    let (polytope, bounds) = estimate_replay(&rows, half_width)?;
    println!("{:>6}  {:>12}  {:>12}  {:>12}", "action", "lower", "upper", "estimate");
    let est = bounds.point_estimate();
    for a in 0..bounds.lower.len() {
        println!(
            "{:>6}  {:>12}  {:>12}  {:>12}",
            a + 1,
            fmt_sig(bounds.lower[a]),
            fmt_sig(bounds.upper[a]),
            fmt_sig(est[a])
        );
    }
    println!("observations {}", polytope.obs_count());
    println!("diameter {}", fmt_sig(bounds.diameter()));
    if let Some(path) = args.save_polytope {
        std::fs::write(&path, serde_json::to_string_pretty(&polytope)?)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::VerifyExamples => verify_examples(),
        Command::Estimate(args) => estimate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
