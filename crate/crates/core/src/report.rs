//! CSV and JSON artifacts.
//!
//! Results CSV columns, in order:
//! `setting_id,seed,t,phase,chosen,sum_incentives,regret_cum,diameter,l1_to_oracle`.
//! One row per (seed, checkpoint). Floats carry 9 significant digits with a
//! `.` decimal separator; a missing value is written as `nan`.
//!
//! Round logs (and replay input) use
//! `t,phase,chosen,reward,regret_inc,diameter,clamped,pi_1,...,pi_n`. Replay
//! only needs `chosen` and the `pi_*` columns.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::harness::{RoundRecord, RunResult};
use crate::model::{ActionIndex, IncentiveVector};

pub const RESULTS_HEADER: [&str; 9] = [
    "setting_id",
    "seed",
    "t",
    "phase",
    "chosen",
    "sum_incentives",
    "regret_cum",
    "diameter",
    "l1_to_oracle",
];

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_else(|| "nan".into())
}

pub fn write_results_csv<W: Write>(out: W, setting_id: &str, results: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for run in results {
        for cp in &run.checkpoints {
            w.write_record([
                setting_id.to_string(),
                run.seed.to_string(),
                cp.t.to_string(),
                cp.phase.to_string(),
                cp.chosen.one_based().to_string(),
                fmt_sig(cp.sum_incentives),
                fmt_sig(cp.regret_cum),
                fmt_sig(cp.diameter),
                opt(cp.l1_to_oracle),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_rounds_csv<W: Write>(out: W, n: usize, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "t",
        "phase",
        "chosen",
        "reward",
        "regret_inc",
        "diameter",
        "clamped",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=n).map(|a| format!("pi_{a}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.t.to_string(),
            r.phase.to_string(),
            r.chosen.one_based().to_string(),
            fmt_sig(r.reward),
            fmt_sig(r.regret_inc),
            opt(r.diameter),
            r.clamped.to_string(),
        ];
        row.extend(r.pi.as_slice().iter().map(|&p| fmt_sig(p)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One recorded (incentives, choice) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub pi: IncentiveVector,
    pub chosen: ActionIndex,
}

/// Parse a recorded history; the action count is the number of `pi_*` columns.
pub fn read_replay<R: Read>(input: R) -> Result<Vec<ReplayRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let chosen_col = headers
        .iter()
        .position(|h| h == "chosen")
        .ok_or_else(|| Error::Domain("replay file lacks a 'chosen' column".into()))?;
    let mut pi_cols = Vec::new();
    for a in 1.. {
        match headers.iter().position(|h| h == format!("pi_{a}")) {
            Some(c) => pi_cols.push(c),
            None => break,
        }
    }
    let n = pi_cols.len();
    if n < 2 {
        return domain("replay file needs columns pi_1..pi_n with n >= 2");
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |c: usize| -> Result<&str> {
            rec.get(c)
                .ok_or_else(|| Error::Domain(format!("row {}: missing field", line + 1)))
        };
        let chosen: usize = field(chosen_col)?
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("row {}: bad chosen action", line + 1)))?;
        let chosen = ActionIndex::from_one_based(chosen, n)?;
        let pi = pi_cols
            .iter()
            .map(|&c| {
                field(c)?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("row {}: bad incentive", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(ReplayRow {
            pi: IncentiveVector::new(pi),
            chosen,
        });
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Domain(format!("csv: {e}"))
}

/// Provenance record written next to every results CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub software: &'static str,
    pub version: &'static str,
    pub created_unix: u64,
    pub setting_id: &'a str,
    pub config: &'a crate::config::ExperimentConfig,
    pub instance: &'a crate::model::ProblemInstance,
    pub policy: &'a crate::policy::PolicyConfig,
    pub checkpoints: &'a [u64],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rent: Option<RentSummary<'a>>,
    pub results_csv: &'a str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RentSummary<'a> {
    pub construction: &'a crate::agents::RentConstruction,
    pub gain: f64,
}
