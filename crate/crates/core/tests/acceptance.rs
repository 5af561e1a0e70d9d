//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hidden_rewards::agents::AgentBehavior;
use hidden_rewards::config::Preset;
use hidden_rewards::estimator::ConstraintPolytope;
use hidden_rewards::golden::run_golden_checks;
use hidden_rewards::harness::{exploration_diameters, median, run_game, run_replications, RunOptions};
use hidden_rewards::model::{best_response, ActionIndex, IncentiveVector, NormalizedRewardVector};
use hidden_rewards::policy::{oracle_incentives, plan_from_estimates, PolicyConfig};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn golden_examples() -> Outcome {
    let start = Instant::now();
    let checks = match run_golden_checks() {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.to_string()).collect();
    let fast = elapsed < Duration::from_secs(1);
    outcome(
        failed.is_empty() && fast,
        format!(
            "{}/{} checks within 1e-9 in {:?}{}",
            checks.len() - failed.len(),
            checks.len(),
            elapsed,
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", failed.join(" | "))
            }
        ),
    )
}

/// Exact per-coordinate extrema of the feasible grid points, in hundredths.
/// `gaps` holds `(i, a, g)`: `s[a] - s[i] <= g`.
fn brute_force_extrema(n: usize, half: i64, gaps: &[(usize, usize, i64)]) -> Option<(Vec<i64>, Vec<i64>)> {
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    lo[0] = 0;
    hi[0] = 0;
    let mut s = vec![0i64; n];
    let ok_upto = |s: &[i64], k: usize| {
        gaps.iter()
            .filter(|&&(i, a, _)| i <= k && a <= k)
            .all(|&(i, a, g)| s[a] - s[i] <= g)
    };
    fn rec(
        k: usize,
        n: usize,
        half: i64,
        s: &mut Vec<i64>,
        lo: &mut [i64],
        hi: &mut [i64],
        ok_upto: &dyn Fn(&[i64], usize) -> bool,
    ) {
        if k == n - 1 {
            // innermost coordinate: the feasible set is an interval, scan in from both ends
            let mut first = None;
            for v in -half..=half {
                s[k] = v;
                if ok_upto(s, k) {
                    first = Some(v);
                    break;
                }
            }
            let Some(first) = first else { return };
            let mut last = first;
            for v in (first..=half).rev() {
                s[k] = v;
                if ok_upto(s, k) {
                    last = v;
                    break;
                }
            }
            for j in 1..k {
                lo[j] = lo[j].min(s[j]);
                hi[j] = hi[j].max(s[j]);
            }
            lo[k] = lo[k].min(first);
            hi[k] = hi[k].max(last);
            return;
        }
        for v in -half..=half {
            s[k] = v;
            if ok_upto(s, k) {
                rec(k + 1, n, half, s, lo, hi, ok_upto);
            }
        }
    }
    rec(1, n, half, &mut s, &mut lo, &mut hi, &ok_upto);
    (lo[1] != i64::MAX).then_some((lo, hi))
}

fn estimator_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let instances = 500;
    let (mut mismatches, mut false_inconsistent, mut empty_grid) = (0, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=4usize);
        // everything on the 0.01 grid so vertices are grid points
        let width = rng.random_range(120..=160i64);
        let r_min = -rng.random_range(0..=width / 2);
        let r_max = r_min + width;
        let gamma = rng.random_range(1..=width - 100);
        let (c_lo, c_hi) = (r_min, r_max + gamma);
        let r: Vec<i64> = (0..n).map(|_| rng.random_range(r_min..=r_max)).collect();
        let s0 = NormalizedRewardVector::new(
            r.iter().map(|&x| (x - r[0]) as f64 / 100.0).collect(),
            width as f64 / 100.0,
        )
        .expect("grid reward vector fits the box");
        let mut polytope = ConstraintPolytope::new(n, width as f64 / 100.0);
        let mut gaps: Vec<(usize, usize, i64)> = Vec::new();
        for _ in 0..rng.random_range(0..=6) {
            let pi_c: Vec<i64> = (0..n).map(|_| rng.random_range(c_lo..=c_hi)).collect();
            let pi = IncentiveVector::new(pi_c.iter().map(|&p| p as f64 / 100.0).collect());
            let chosen = best_response(&s0, &pi).expect("lengths match");
            polytope.observe(&pi, chosen).expect("valid observation");
            let i = chosen.index();
            gaps.extend((0..n).filter(|&a| a != i).map(|a| (i, a, pi_c[i] - pi_c[a])));
        }
        let bounds = match polytope.solve() {
            Ok(b) => b,
            Err(_) => {
                false_inconsistent += 1;
                continue;
            }
        };
        let Some((lo, hi)) = brute_force_extrema(n, width, &gaps) else {
            empty_grid += 1;
            continue;
        };
        for a in 0..n {
            let d = (bounds.lower[a] - lo[a] as f64 / 100.0)
                .abs()
                .max((bounds.upper[a] - hi[a] as f64 / 100.0).abs());
            worst = worst.max(d);
            if d > 0.01 {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && false_inconsistent == 0 && empty_grid == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{instances} instances, worst bound error {worst:.2e}, {mismatches} mismatches, \
             {false_inconsistent} false inconsistencies, {empty_grid} empty grids, {elapsed:?}"
        ),
    )
}

fn truthful_membership() -> Outcome {
    let start = Instant::now();
    let inst = Preset::Table1N5.instance();
    let agent = AgentBehavior::truthful(&inst);
    let config = PolicyConfig::default();
    let (mut violations, mut growths, mut phases_seen) = (0u64, 0u64, [false; 3]);
    for seed in 1..=50 {
        let opts = RunOptions {
            keep_records: true,
            ..RunOptions::new(5000, seed)
        };
        let run = match run_game(&inst, &agent, &config, &opts) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        // replay the recorded history so every intermediate polytope is checked
        let mut p = ConstraintPolytope::new(inst.n(), inst.box_half_width());
        let mut prev = f64::INFINITY;
        for rec in run.records.as_deref().unwrap_or_default() {
            phases_seen[rec.phase as usize] = true;
            p.observe(&rec.pi, rec.chosen).expect("valid observation");
            if !p.contains(inst.s0()) {
                violations += 1;
            }
            let d = match p.solve() {
                Ok(b) => b.diameter(),
                Err(_) => {
                    violations += 1;
                    continue;
                }
            };
            if d > prev + 1e-9 {
                growths += 1;
            }
            prev = d;
        }
        if p != run.polytope {
            return outcome(false, format!("seed {seed}: replayed polytope differs from the run's"));
        }
    }
    let elapsed = start.elapsed();
    let mixed = phases_seen.iter().all(|&b| b);
    outcome(
        violations == 0 && growths == 0 && mixed && elapsed < Duration::from_secs(120),
        format!(
            "50 runs x 5000 rounds: {violations} membership failures, {growths} diameter increases, \
             all phases seen: {mixed}, {elapsed:?}"
        ),
    )
}

fn regret_sublinearity() -> Outcome {
    let start = Instant::now();
    let inst = Preset::Table1N5.instance();
    let agent = AgentBehavior::truthful(&inst);
    let grid = [1000, 4000, 16000];
    let runs = match run_replications(&inst, &agent, &PolicyConfig::default(), 16000, &[1, 2, 3, 4, 5], &grid) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let mean: Vec<f64> = (0..grid.len())
        .map(|k| runs.iter().map(|r| r.checkpoints[k].regret_cum).sum::<f64>() / runs.len() as f64)
        .collect();
    let ratios = [mean[1] / mean[0], mean[2] / mean[1]];
    let elapsed = start.elapsed();
    outcome(
        ratios.iter().all(|&q| q <= 2.6) && elapsed < Duration::from_secs(300),
        format!(
            "mean regret {:.1} / {:.1} / {:.1} at T = 1e3 / 4e3 / 1.6e4, ratios {:.3} and {:.3} (limit 2.6), {elapsed:?}",
            mean[0], mean[1], mean[2], ratios[0], ratios[1]
        ),
    )
}

fn l1_convergence() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in [Preset::Table1N5, Preset::Table1N10] {
        let inst = preset.instance();
        let agent = AgentBehavior::truthful(&inst);
        let oracle_arm = oracle_incentives(&inst).arm;
        let runs = match run_replications(&inst, &agent, &PolicyConfig::default(), 20_000, &[1, 2, 3, 4, 5], &[100, 20_000]) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("{preset}: {e}")),
        };
        let l1_at = |k: usize| -> Option<Vec<f64>> { runs.iter().map(|r| r.checkpoints[k].l1_to_oracle).collect() };
        let (Some(early), Some(late)) = (l1_at(0), l1_at(1)) else {
            pass = false;
            parts.push(format!("{preset}: some seed had not exploited by the checkpoint"));
            continue;
        };
        let (m_early, m_late) = (median(&early), median(&late));
        let hits = runs.iter().filter(|r| r.final_exploit_arm == Some(oracle_arm)).count();
        pass &= m_late < m_early && hits >= 4;
        parts.push(format!(
            "{preset}: median l1 {m_early:.3} -> {m_late:.3}, final arm = oracle arm in {hits}/5"
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    outcome(pass, format!("{}, {elapsed:?}", parts.join("; ")))
}

fn corollary_diameter_decay() -> Outcome {
    let inst = Preset::Table1N5.instance();
    let seeds = 200u64;
    let (mut wide_50, mut wide_400) = (0u64, 0u64);
    for seed in 1..=seeds {
        let d = match exploration_diameters(&inst, seed, &[50, 400]) {
            Ok(d) => d,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        wide_50 += (d[0] > 1.0) as u64;
        wide_400 += (d[1] > 1.0) as u64;
    }
    let (f50, f400) = (wide_50 as f64 / seeds as f64, wide_400 as f64 / seeds as f64);
    outcome(
        f400 < f50 && f400 < 0.2,
        format!("frequency of diameter > 1: {f50:.3} after 50 steps, {f400:.3} after 400 steps (limit 0.2)"),
    )
}

fn exploitation_targeting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 10_000;
    let mut misses = 0;
    for _ in 0..trials {
        let n = rng.random_range(2..=10usize);
        let half = 70.0;
        let beta = rng.random_range(0.01..5.0);
        let mut s0 = vec![0.0];
        let mut s_hat = vec![0.0];
        for _ in 1..n {
            let v: f64 = rng.random_range(-half + beta..half - beta);
            s0.push(v);
            s_hat.push(v + rng.random_range(-beta..beta));
        }
        let s0 = NormalizedRewardVector::new(s0, half).expect("in box");
        let s_hat = NormalizedRewardVector::new(s_hat, half).expect("in box");
        let theta_hat: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        // wide enough that the premise, not clamping, is what gets tested
        let plan = plan_from_estimates(&theta_hat, &s_hat, 2.0 * beta, -1e6, 1e6);
        let chosen: ActionIndex = best_response(&s0, &plan.incentives).expect("lengths match");
        if chosen != plan.j_star || plan.clamped {
            misses += 1;
        }
    }
    outcome(
        misses == 0,
        format!("{} of {trials} triples steered onto the targeted arm", trials - misses),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("golden examples", golden_examples),
        ("estimator oracle equivalence", estimator_oracle),
        ("truthful membership", truthful_membership),
        ("regret sublinearity", regret_sublinearity),
        ("l1 convergence", l1_convergence),
        ("pure-exploration diameter decay", corollary_diameter_decay),
        ("exploitation targeting", exploitation_targeting),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
