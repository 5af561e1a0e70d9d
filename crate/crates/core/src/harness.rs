//! The repeated game loop, pseudo-regret accounting, and replication.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::agents::AgentBehavior;
use crate::error::{domain, Result};
use crate::estimator::ConstraintPolytope;
use crate::model::{ActionIndex, IncentiveVector, ProblemInstance};
use crate::policy::{oracle_incentives, Decision, Phase, PolicyConfig, PolicyState};

/// Draws the principal's realized reward around its mean.
pub trait RewardSampler: Sync {
    fn sample(&self, mean: f64, rng: &mut ChaCha8Rng) -> f64;
}

/// `Normal(mean, sd)` rewards; `sd = 0` returns the mean exactly.
#[derive(Debug, Clone, Copy)]
pub struct GaussianRewards {
    pub sd: f64,
}

impl RewardSampler for GaussianRewards {
    fn sample(&self, mean: f64, rng: &mut ChaCha8Rng) -> f64 {
        if self.sd == 0.0 {
            return mean;
        }
        Normal::new(mean, self.sd)
            .expect("finite sd")
            .sample(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub t: u64,
    pub phase: Phase,
    pub pi: IncentiveVector,
    pub chosen: ActionIndex,
    pub reward: f64,
    pub regret_inc: f64,
    /// Polytope diameter behind the exploitation estimate.
    pub diameter: Option<f64>,
    pub clamped: bool,
}

/// State of a run right after round `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: u64,
    pub phase: Phase,
    pub chosen: ActionIndex,
    pub sum_incentives: f64,
    pub regret_cum: f64,
    pub realized_regret_cum: f64,
    pub diameter: f64,
    /// L1 distance from the latest exploitation incentives to the oracle's.
    pub l1_to_oracle: Option<f64>,
    pub exploit_arm: Option<ActionIndex>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub horizon: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub regret_total: f64,
    pub l1_final: Option<f64>,
    /// Arm targeted by the last exploitation round.
    pub final_exploit_arm: Option<ActionIndex>,
    pub eta: u64,
    pub records: Option<Vec<RoundRecord>>,
    pub polytope: ConstraintPolytope,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub horizon: u64,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub keep_records: bool,
}

impl RunOptions {
    pub fn new(horizon: u64, seed: u64) -> Self {
        RunOptions {
            horizon,
            seed,
            checkpoints: geometric_checkpoints(horizon),
            keep_records: false,
        }
    }
}

/// `{100, 1000, ...}` below `horizon`, then `horizon` itself.
pub fn geometric_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(100u64), |c| c.checked_mul(10))
        .take_while(|&c| c < horizon)
        .collect();
    out.push(horizon);
    out
}

/// Oracle per-round value minus the expected net reward of offering `pi`
/// and seeing `chosen`.
pub fn regret_increment(instance: &ProblemInstance, pi: &IncentiveVector, chosen: ActionIndex) -> f64 {
    let oracle_value = oracle_incentives(instance).value;
    oracle_value - (instance.theta0()[chosen.index()] - pi.total())
}

/// Separate streams for the policy and for reward noise.
fn seeded_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let policy = ChaCha8Rng::seed_from_u64(seed);
    let mut rewards = ChaCha8Rng::seed_from_u64(seed);
    rewards.set_stream(1);
    (policy, rewards)
}

pub fn run_game(
    instance: &ProblemInstance,
    agent: &AgentBehavior,
    config: &PolicyConfig,
    opts: &RunOptions,
) -> Result<RunResult> {
    let sampler = GaussianRewards {
        sd: instance.reward_noise_sd(),
    };
    run_game_with(instance, agent, config, opts, &sampler)
}

/// Plays `opts.horizon` rounds of the epsilon-greedy principal against
/// `agent`. Identical inputs give bit-identical results.
pub fn run_game_with(
    instance: &ProblemInstance,
    agent: &AgentBehavior,
    config: &PolicyConfig,
    opts: &RunOptions,
    sampler: &dyn RewardSampler,
) -> Result<RunResult> {
    let n = instance.n() as u64;
    if opts.horizon < n {
        return domain(format!(
            "horizon {} shorter than the {n} initialization rounds",
            opts.horizon
        ));
    }
    if let Some(&bad) = opts.checkpoints.iter().find(|&&c| c == 0 || c > opts.horizon) {
        return domain(format!("checkpoint {bad} outside 1..={}", opts.horizon));
    }
    let (policy_rng, mut reward_rng) = seeded_streams(opts.seed);
    let mut policy = PolicyState::new(instance, config.clone(), policy_rng)?;
    let oracle = oracle_incentives(instance);
    let theta0 = instance.theta0();

    let mut checkpoints_sorted = opts.checkpoints.clone();
    checkpoints_sorted.sort_unstable();
    checkpoints_sorted.dedup();
    let mut next_cp = checkpoints_sorted.iter().peekable();

    let mut regret_cum = 0.0;
    let mut realized_cum = 0.0;
    let mut last_exploit: Option<(ActionIndex, IncentiveVector)> = None;
    let mut records = opts.keep_records.then(Vec::new);
    let mut checkpoints = Vec::with_capacity(checkpoints_sorted.len());

    for t in 1..=opts.horizon {
        let decision = policy.decide()?;
        let pi = decision.incentives().clone();
        let chosen = agent.act(&pi)?;
        let reward = sampler.sample(theta0[chosen.index()], &mut reward_rng);
        let total = pi.total();
        let regret_inc = oracle.value - (theta0[chosen.index()] - total);
        regret_cum += regret_inc;
        realized_cum += oracle.value - (reward - total);
        policy.record(&pi, chosen, reward)?;

        let (diameter, clamped) = match &decision {
            Decision::Exploit(plan) => {
                last_exploit = Some((plan.j_star, plan.incentives.clone()));
                (plan.diameter, plan.clamped)
            }
            _ => (None, false),
        };
        if let Some(log) = records.as_mut() {
            log.push(RoundRecord {
                t,
                phase: decision.phase(),
                pi: pi.clone(),
                chosen,
                reward,
                regret_inc,
                diameter,
                clamped,
            });
        }
        if next_cp.peek() == Some(&&t) {
            next_cp.next();
            checkpoints.push(Checkpoint {
                t,
                phase: decision.phase(),
                chosen,
                sum_incentives: total,
                regret_cum,
                realized_regret_cum: realized_cum,
                diameter: policy.polytope().solve()?.diameter(),
                l1_to_oracle: last_exploit
                    .as_ref()
                    .map(|(_, p)| p.l1_distance(&oracle.incentives)),
                exploit_arm: last_exploit.as_ref().map(|(a, _)| *a),
            });
        }
    }

    Ok(RunResult {
        seed: opts.seed,
        horizon: opts.horizon,
        checkpoints,
        regret_total: regret_cum,
        l1_final: last_exploit
            .as_ref()
            .map(|(_, p)| p.l1_distance(&oracle.incentives)),
        final_exploit_arm: last_exploit.map(|(a, _)| a),
        eta: policy.eta(),
        records,
        polytope: policy.polytope().clone(),
    })
}

/// Independent runs, one per seed, in parallel. Results keep seed order.
pub fn run_replications(
    instance: &ProblemInstance,
    agent: &AgentBehavior,
    config: &PolicyConfig,
    horizon: u64,
    seeds: &[u64],
    checkpoints: &[u64],
) -> Result<Vec<RunResult>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let opts = RunOptions {
                horizon,
                seed,
                checkpoints: checkpoints.to_vec(),
                keep_records: false,
            };
            run_game(instance, agent, config, &opts)
        })
        .collect()
}

/// Polytope diameter after each of `steps` rounds of pure uniform
/// exploration against a truthful agent (no initialization rounds).
pub fn exploration_diameters(instance: &ProblemInstance, seed: u64, steps: &[u64]) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = instance.n();
    let (lo, hi) = (instance.incentive_low(), instance.incentive_high());
    let agent = AgentBehavior::truthful(instance);
    let mut polytope = ConstraintPolytope::new(n, instance.box_half_width());
    let last = steps.iter().copied().max().unwrap_or(0);
    let mut out = Vec::with_capacity(steps.len());
    let mut at = vec![f64::NAN; (last + 1) as usize];
    for step in 1..=last {
        let pi = IncentiveVector::new((0..n).map(|_| rng.random_range(lo..=hi)).collect());
        polytope.observe(&pi, agent.act(&pi)?)?;
        if steps.contains(&step) {
            at[step as usize] = polytope.solve()?.diameter();
        }
    }
    for &s in steps {
        out.push(if s == 0 {
            2.0 * instance.box_half_width()
        } else {
            at[s as usize]
        });
    }
    Ok(out)
}

/// Cross-replicate statistics at shared checkpoints. Standard deviations use
/// the population convention (divide by the number of runs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub checkpoints: Vec<u64>,
    pub regret_mean: Vec<f64>,
    pub regret_sd: Vec<f64>,
    pub l1_mean: f64,
    pub l1_median: f64,
}

pub fn aggregate(results: &[RunResult]) -> Result<Summary> {
    let Some(first) = results.first() else {
        return domain("aggregate needs at least one run");
    };
    let ts: Vec<u64> = first.checkpoints.iter().map(|c| c.t).collect();
    for r in results {
        let other: Vec<u64> = r.checkpoints.iter().map(|c| c.t).collect();
        if other != ts {
            return domain(format!("run with seed {} has mismatched checkpoints", r.seed));
        }
    }
    let mut regret_mean = Vec::with_capacity(ts.len());
    let mut regret_sd = Vec::with_capacity(ts.len());
    for i in 0..ts.len() {
        let values: Vec<f64> = results.iter().map(|r| r.checkpoints[i].regret_cum).collect();
        let (m, sd) = mean_sd(&values);
        regret_mean.push(m);
        regret_sd.push(sd);
    }
    let l1: Vec<f64> = results.iter().filter_map(|r| r.l1_final).collect();
    let l1_mean = if l1.is_empty() {
        f64::NAN
    } else {
        l1.iter().sum::<f64>() / l1.len() as f64
    };
    Ok(Summary {
        runs: results.len(),
        checkpoints: ts,
        regret_mean,
        regret_sd,
        l1_mean,
        l1_median: median(&l1),
    })
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    (mean, var.sqrt())
}

/// Median, NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InstanceParams;
    use crate::policy::{init_incentives, ExploitMargin, KnownModel};

    fn instance(theta: &[f64], r: &[f64], sd: f64) -> ProblemInstance {
        ProblemInstance::new(InstanceParams {
            theta0: theta.to_vec(),
            r0: r.to_vec(),
            reward_min: -20.0,
            reward_max: 50.0,
            gamma: 10.0,
            theta_min: 0.0,
            theta_max: 100.0,
            reward_noise_sd: sd,
            varsigma: 0.1,
            incentive_range: None,
        })
        .unwrap()
    }

    fn table1_n5(sd: f64) -> ProblemInstance {
        ProblemInstance::new(InstanceParams {
            reward_noise_sd: sd,
            ..crate::config::Preset::Table1N5.params()
        })
        .unwrap()
    }

    #[test]
    fn regret_increment_examples() {
        let inst = table1_n5(5.0);
        let o = oracle_incentives(&inst);
        assert_eq!(regret_increment(&inst, &o.incentives, o.arm), 0.0);
        let pi = init_incentives(5, 1, 60.0).unwrap();
        assert!((regret_increment(&inst, &pi, ActionIndex::new(0)) - (47.0 - 0.1)).abs() < 1e-12);
        let ex1 = instance(&[1.0, 8.0, 2.0], &[0.0, 4.0, 3.0], 5.0);
        let pi = IncentiveVector::new(vec![0.0, 0.0, 60.0]);
        assert!((regret_increment(&ex1, &pi, ActionIndex::new(2)) - (66.0 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn horizon_equal_to_n_only_initializes() {
        let inst = table1_n5(5.0);
        let agent = AgentBehavior::truthful(&inst);
        let mut opts = RunOptions::new(5, 1);
        opts.keep_records = true;
        let res = run_game(&inst, &agent, &PolicyConfig::default(), &opts).unwrap();
        let recs = res.records.unwrap();
        assert!(recs.iter().all(|r| r.phase == Phase::Init));
        let chosen: Vec<usize> = recs.iter().map(|r| r.chosen.one_based()).collect();
        assert_eq!(chosen, vec![1, 2, 3, 4, 5]);
        assert_eq!(res.l1_final, None);
    }

    #[test]
    fn horizon_shorter_than_n_is_rejected() {
        let inst = table1_n5(5.0);
        let agent = AgentBehavior::truthful(&inst);
        assert!(run_game(&inst, &agent, &PolicyConfig::default(), &RunOptions::new(4, 1)).is_err());
    }

    #[test]
    fn same_seed_same_run() {
        let inst = table1_n5(5.0);
        let agent = AgentBehavior::truthful(&inst);
        let opts = RunOptions::new(2000, 9);
        let a = run_game(&inst, &agent, &PolicyConfig::default(), &opts).unwrap();
        let b = run_game(&inst, &agent, &PolicyConfig::default(), &opts).unwrap();
        assert_eq!(a.checkpoints, b.checkpoints);
        assert_eq!(a.regret_total.to_bits(), b.regret_total.to_bits());
    }

    #[test]
    fn regret_matches_sum_of_net_rewards() {
        let inst = table1_n5(5.0);
        let agent = AgentBehavior::truthful(&inst);
        let mut opts = RunOptions::new(3000, 4);
        opts.keep_records = true;
        let res = run_game(&inst, &agent, &PolicyConfig::default(), &opts).unwrap();
        let v = oracle_incentives(&inst).value;
        let recs = res.records.as_ref().unwrap();
        let net: f64 = recs
            .iter()
            .map(|r| inst.theta0()[r.chosen.index()] - r.pi.total())
            .sum();
        let expected = 3000.0 * v - net;
        assert!((res.regret_total - expected).abs() < 1e-6);
        assert_eq!(res.checkpoints.last().unwrap().regret_cum, res.regret_total);
        let explore = recs.iter().filter(|r| r.phase == Phase::Explore).count() as u64;
        assert_eq!(explore, res.eta);
    }

    #[test]
    fn informed_policy_has_zero_exploitation_regret() {
        let inst = table1_n5(0.0);
        let agent = AgentBehavior::truthful(&inst);
        let cfg = PolicyConfig {
            margin: ExploitMargin::Fixed(inst.varsigma()),
            known: Some(KnownModel {
                theta: inst.theta0().to_vec(),
                s: inst.s0().clone(),
            }),
            ..PolicyConfig::default()
        };
        let mut opts = RunOptions::new(2000, 5);
        opts.keep_records = true;
        let res = run_game(&inst, &agent, &cfg, &opts).unwrap();
        let recs = res.records.unwrap();
        let exploits: Vec<&RoundRecord> = recs.iter().filter(|r| r.phase == Phase::Exploit).collect();
        assert!(exploits.len() > 1000);
        assert!(exploits.iter().all(|r| r.regret_inc == 0.0));
    }

    #[test]
    fn aggregate_statistics() {
        let inst = table1_n5(5.0);
        let agent = AgentBehavior::truthful(&inst);
        let run = run_game(&inst, &agent, &PolicyConfig::default(), &RunOptions::new(200, 1)).unwrap();
        let single = aggregate(std::slice::from_ref(&run)).unwrap();
        assert_eq!(single.regret_mean.last().copied(), Some(run.regret_total));
        assert_eq!(single.regret_sd, vec![0.0; single.checkpoints.len()]);

        let mut a = run.clone();
        let mut b = run.clone();
        a.checkpoints.last_mut().unwrap().regret_cum = 10.0;
        b.checkpoints.last_mut().unwrap().regret_cum = 14.0;
        let two = aggregate(&[a, b]).unwrap();
        assert_eq!(two.regret_mean.last().copied(), Some(12.0));
        assert_eq!(two.regret_sd.last().copied(), Some(2.0));
    }

    #[test]
    fn aggregate_rejects_mismatched_checkpoints() {
        let inst = table1_n5(5.0);
        let agent = AgentBehavior::truthful(&inst);
        let a = run_game(&inst, &agent, &PolicyConfig::default(), &RunOptions::new(200, 1)).unwrap();
        let b = run_game(&inst, &agent, &PolicyConfig::default(), &RunOptions::new(300, 1)).unwrap();
        assert!(aggregate(&[a, b]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(geometric_checkpoints(10_000), vec![100, 1000, 10_000]);
        assert_eq!(geometric_checkpoints(20_000), vec![100, 1000, 10_000, 20_000]);
        assert_eq!(geometric_checkpoints(50), vec![50]);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
