//! End-to-end experiment orchestration and replay estimation.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::agents::{rent_gain, AgentBehavior};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::estimator::{ConstraintPolytope, CoordinateBounds};
use crate::harness::{aggregate, median, run_game, RunOptions, RunResult, Summary};
use crate::report::{fmt_sig, write_results_csv, write_rounds_csv, Manifest, RentSummary, ReplayRow};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub setting_id: String,
    pub results: Vec<RunResult>,
    pub summary: Summary,
    pub rent_gain: Option<f64>,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Validate, run every seed, and write the results CSV and manifest.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let instance = config.validate()?;
    let agent = AgentBehavior::for_mode(&instance, config.agent)?;
    let policy = config.policy();
    let checkpoints = config.checkpoint_grid();
    let setting_id = config.setting_id();

    let results = {
        use rayon::prelude::*;
        config
            .seeds
            .par_iter()
            .map(|&seed| {
                let opts = RunOptions {
                    horizon: config.horizon,
                    seed,
                    checkpoints: checkpoints.clone(),
                    keep_records: config.rounds_log,
                };
                run_game(&instance, &agent, &policy, &opts)
            })
            .collect::<Result<Vec<_>>>()?
    };
    let summary = aggregate(&results)?;

    fs::create_dir_all(&config.out_dir)?;
    let csv_path = config.out_dir.join(RESULTS_FILE);
    write_results_csv(BufWriter::new(File::create(&csv_path)?), &setting_id, &results)?;
    if config.rounds_log {
        for run in &results {
            if let Some(records) = &run.records {
                let path = config.out_dir.join(format!("rounds_seed{}.csv", run.seed));
                write_rounds_csv(BufWriter::new(File::create(path)?), instance.n(), records)?;
            }
        }
    }

    let rent = agent.rent().map(|c| RentSummary {
        construction: c,
        gain: rent_gain(&instance, c),
    });
    let rent_gain_value = rent.as_ref().map(|r| r.gain);
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        setting_id: &setting_id,
        config,
        instance: &instance,
        policy: &policy,
        checkpoints: &checkpoints,
        rent,
        results_csv: RESULTS_FILE,
    };
    let manifest_path = config.out_dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    Ok(ExperimentOutcome {
        setting_id,
        results,
        summary,
        rent_gain: rent_gain_value,
        csv_path,
        manifest_path,
    })
}

/// Human-readable per-checkpoint table.
pub fn summary_table(outcome: &ExperimentOutcome) -> String {
    let s = &outcome.summary;
    let mut out = String::new();
    let _ = writeln!(out, "setting {} ({} runs)", outcome.setting_id, s.runs);
    let _ = writeln!(out, "{:>10}  {:>14}  {:>12}  {:>12}", "t", "regret_mean", "regret_sd", "l1_median");
    for (i, t) in s.checkpoints.iter().enumerate() {
        let l1: Vec<f64> = outcome
            .results
            .iter()
            .filter_map(|r| r.checkpoints[i].l1_to_oracle)
            .collect();
        let _ = writeln!(
            out,
            "{:>10}  {:>14}  {:>12}  {:>12}",
            t,
            fmt_sig(s.regret_mean[i]),
            fmt_sig(s.regret_sd[i]),
            fmt_sig(median(&l1))
        );
    }
    let _ = writeln!(out, "final l1: mean {} median {}", fmt_sig(s.l1_mean), fmt_sig(s.l1_median));
    if let Some(gain) = outcome.rent_gain {
        let _ = writeln!(out, "rent_gain {}", fmt_sig(gain));
    }
    out
}

/// Feed a recorded history through the estimator.
pub fn estimate_replay(rows: &[ReplayRow], half_width: f64) -> Result<(ConstraintPolytope, CoordinateBounds)> {
    let Some(first) = rows.first() else {
        return crate::error::domain("empty replay");
    };
    let mut polytope = ConstraintPolytope::new(first.pi.len(), half_width);
    for row in rows {
        polytope.observe(&row.pi, row.chosen)?;
    }
    let bounds = polytope.solve()?;
    Ok((polytope, bounds))
}
