//! The principal's side of the game: sample-mean tracking of its own rewards,
//! the epsilon-greedy incentive policy, and the full-information oracle.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimator::ConstraintPolytope;
use crate::model::{
    argmax_lowest, steered_net_values, ActionIndex, IncentiveVector, NormalizedRewardVector,
    ProblemInstance,
};

pub const DEFAULT_M: f64 = 30.0;
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Safety margin added on top of the estimated minimal steering incentive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExploitMargin {
    /// `2 * beta_t`, shrinking with the number of exploration steps.
    #[default]
    ConfidenceWidth,
    /// A constant margin; with a known model and margin equal to the oracle's
    /// tie-breaking margin the policy reproduces the oracle incentives.
    Fixed(f64),
}

/// Model knowledge handed to the policy instead of learning it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownModel {
    pub theta: Vec<f64>,
    pub s: NormalizedRewardVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub m: f64,
    pub alpha: f64,
    #[serde(default)]
    pub margin: ExploitMargin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known: Option<KnownModel>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            m: DEFAULT_M,
            alpha: DEFAULT_ALPHA,
            margin: ExploitMargin::ConfidenceWidth,
            known: None,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.m >= 4.0) {
            return domain(format!("m >= 4 violated (m = {})", self.m));
        }
        if !(self.alpha > 0.0) {
            return domain(format!("alpha > 0 violated (alpha = {})", self.alpha));
        }
        if let ExploitMargin::Fixed(v) = self.margin {
            if !(v >= 0.0) {
                return domain(format!("fixed margin must be >= 0, got {v}"));
            }
        }
        if let Some(k) = &self.known {
            if k.theta.len() != n || k.s.len() != n {
                return domain("known model does not match the action count");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Explore,
    Exploit,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Init => "init",
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
        })
    }
}

/// Targeted arm and single-arm incentive for an exploitation round.
#[derive(Debug, Clone, PartialEq)]
pub struct ExploitationPlan {
    pub j_star: ActionIndex,
    pub incentives: IncentiveVector,
    /// Estimated net reward of steering onto each arm.
    pub v_tilde: Vec<f64>,
    pub beta: f64,
    /// Diameter of the feasible polytope the estimate came from.
    pub diameter: Option<f64>,
    /// Whether the targeted incentive was clamped into the admissible range.
    pub clamped: bool,
}

/// What the principal offers in the next round.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Init(IncentiveVector),
    Explore(IncentiveVector),
    Exploit(ExploitationPlan),
}

impl Decision {
    pub fn phase(&self) -> Phase {
        match self {
            Decision::Init(_) => Phase::Init,
            Decision::Explore(_) => Phase::Explore,
            Decision::Exploit(_) => Phase::Exploit,
        }
    }

    pub fn incentives(&self) -> &IncentiveVector {
        match self {
            Decision::Init(pi) | Decision::Explore(pi) => pi,
            Decision::Exploit(plan) => &plan.incentives,
        }
    }
}

/// Initialization offer for round `t` (1-based): the maximal incentive on
/// arm `t`, zero elsewhere.
pub fn init_incentives(n: usize, t: usize, c_high: f64) -> Result<IncentiveVector> {
    if t == 0 || t > n {
        return domain(format!("initialization round {t} outside 1..={n}"));
    }
    Ok(IncentiveVector::single(n, ActionIndex::new(t - 1), c_high))
}

/// Exploration probability `min(1, m / t)`.
pub fn epsilon_schedule(t: u64, m: f64) -> f64 {
    (m / t as f64).min(1.0)
}

/// Confidence width `sqrt(ln(eta - 1) / (alpha (eta - 1)))`; needs `eta >= 3`
/// so the logarithm is positive.
pub fn beta_width(eta: u64, alpha: f64) -> Result<f64> {
    if eta < 3 {
        return Err(Error::Guard { eta });
    }
    let k = (eta - 1) as f64;
    Ok((k.ln() / (alpha * k)).sqrt())
}

/// Steering plan from point estimates: target the arm with the best
/// estimated net reward and pay it the estimated minimal incentive plus
/// `margin`, clamped into `[c_low, c_high]`.
pub fn plan_from_estimates(
    theta_hat: &[f64],
    s_hat: &NormalizedRewardVector,
    margin: f64,
    c_low: f64,
    c_high: f64,
) -> ExploitationPlan {
    let n = theta_hat.len();
    let v_tilde: Vec<f64> = steered_net_values(theta_hat, s_hat)
        .into_iter()
        .map(|v| v - margin)
        .collect();
    let j_star = argmax_lowest(&v_tilde);
    let raw = (s_hat.max() - s_hat[j_star.index()]) + margin;
    let value = raw.clamp(c_low, c_high);
    ExploitationPlan {
        j_star,
        incentives: IncentiveVector::single(n, j_star, value),
        v_tilde,
        beta: 0.5 * margin,
        diameter: None,
        clamped: value != raw,
    }
}

/// Full-information benchmark incentives.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub arm: ActionIndex,
    pub incentives: IncentiveVector,
    /// Per-round expected net reward to the principal.
    pub value: f64,
    pub net_values: Vec<f64>,
}

/// Oracle incentives: steer onto the arm maximizing
/// `theta0[j] - (max s0 - s0[j])` with margin `varsigma`.
pub fn oracle_incentives(instance: &ProblemInstance) -> OracleSolution {
    let s0 = instance.s0();
    let net_values = steered_net_values(instance.theta0(), s0);
    let arm = argmax_lowest(&net_values);
    let c = (s0.max() - s0[arm.index()]) + instance.varsigma();
    let incentives = IncentiveVector::single(instance.n(), arm, c);
    OracleSolution {
        arm,
        value: instance.theta0()[arm.index()] - incentives.total(),
        incentives,
        net_values,
    }
}

/// Running state of the epsilon-greedy principal for one game.
#[derive(Debug, Clone)]
pub struct PolicyState {
    config: PolicyConfig,
    n: usize,
    c_low: f64,
    c_high: f64,
    theta_hat: Vec<f64>,
    pulls: Vec<u64>,
    eta: u64,
    t: u64,
    polytope: ConstraintPolytope,
    rng: ChaCha8Rng,
}

impl PolicyState {
    pub fn new(instance: &ProblemInstance, config: PolicyConfig, rng: ChaCha8Rng) -> Result<Self> {
        let n = instance.n();
        config.validate(n)?;
        let theta_hat = match &config.known {
            Some(k) => k.theta.clone(),
            None => vec![0.0; n],
        };
        Ok(PolicyState {
            n,
            c_low: instance.incentive_low(),
            c_high: instance.incentive_high(),
            theta_hat,
            pulls: vec![0; n],
            eta: 0,
            t: 0,
            polytope: ConstraintPolytope::new(n, instance.box_half_width()),
            rng,
            config,
        })
    }

    pub fn seeded(instance: &ProblemInstance, config: PolicyConfig, seed: u64) -> Result<Self> {
        Self::new(instance, config, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    /// Number of exploration rounds played so far.
    pub fn eta(&self) -> u64 {
        self.eta
    }

    /// Number of completed rounds.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn polytope(&self) -> &ConstraintPolytope {
        &self.polytope
    }

    /// Fold one realized reward on `chosen` into its sample mean.
    pub fn update_theta(&mut self, chosen: ActionIndex, reward: f64) {
        let a = chosen.index();
        self.pulls[a] += 1;
        if self.config.known.is_none() {
            self.theta_hat[a] += (reward - self.theta_hat[a]) / self.pulls[a] as f64;
        }
    }

    /// Uniform draws on `[c_low, c_high]` for every arm.
    pub fn explore_incentives(&mut self) -> IncentiveVector {
        let (lo, hi) = (self.c_low, self.c_high);
        IncentiveVector::new((0..self.n).map(|_| self.rng.random_range(lo..=hi)).collect())
    }

    /// Exploitation plan from the current estimates.
    pub fn exploit_plan(&self) -> Result<ExploitationPlan> {
        let margin = match self.config.margin {
            ExploitMargin::ConfidenceWidth => 2.0 * beta_width(self.eta, self.config.alpha)?,
            ExploitMargin::Fixed(v) => v,
        };
        let (s_hat, diameter) = match &self.config.known {
            Some(k) => (k.s.clone(), None),
            None => {
                let bounds = self.polytope.solve()?;
                (bounds.point_estimate(), Some(bounds.diameter()))
            }
        };
        let mut plan = plan_from_estimates(&self.theta_hat, &s_hat, margin, self.c_low, self.c_high);
        plan.diameter = diameter;
        if self.config.margin == ExploitMargin::ConfidenceWidth {
            plan.beta = 0.5 * margin;
        }
        Ok(plan)
    }

    /// Decide the offer for round `t() + 1`. Exploration rounds are counted
    /// here; rounds drawn as exploitation before three exploration steps
    /// exist are played as exploration instead.
    pub fn decide(&mut self) -> Result<Decision> {
        let t = self.t + 1;
        let n = self.n as u64;
        if t <= n {
            return Ok(Decision::Init(init_incentives(self.n, t as usize, self.c_high)?));
        }
        let eps = epsilon_schedule(t, self.config.m);
        let explore = self.rng.random_bool(eps);
        let guarded =
            self.config.margin == ExploitMargin::ConfidenceWidth && self.eta < 3;
        if explore || guarded {
            let pi = self.explore_incentives();
            self.eta += 1;
            return Ok(Decision::Explore(pi));
        }
        Ok(Decision::Exploit(self.exploit_plan()?))
    }

    /// Record the outcome of the round just played.
    pub fn record(&mut self, pi: &IncentiveVector, chosen: ActionIndex, reward: f64) -> Result<()> {
        self.polytope.observe(pi, chosen)?;
        self.update_theta(chosen, reward);
        self.t += 1;
        Ok(())
    }
}
