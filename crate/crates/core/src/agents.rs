//! Agent behaviors: truthful play on the true normalized rewards, and
//! strategic play on a fixed pretended vector that extracts information rent
//! from the principal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{
    argmax_lowest, best_response, steered_net_values, ActionIndex, IncentiveVector,
    NormalizedRewardVector, ProblemInstance, TOL,
};
use crate::policy::oracle_incentives;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    Truthful,
    Strategic,
}

impl fmt::Display for AgentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentMode::Truthful => "truthful",
            AgentMode::Strategic => "strategic",
        })
    }
}

impl FromStr for AgentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truthful" => Ok(AgentMode::Truthful),
            "strategic" => Ok(AgentMode::Strategic),
            other => domain(format!("unknown agent mode '{other}'")),
        }
    }
}

/// A perfect maximizer playing a fixed normalized reward vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBehavior {
    mode: AgentMode,
    s_play: NormalizedRewardVector,
    rent: Option<RentConstruction>,
}

impl AgentBehavior {
    pub fn truthful(instance: &ProblemInstance) -> Self {
        AgentBehavior {
            mode: AgentMode::Truthful,
            s_play: instance.s0().clone(),
            rent: None,
        }
    }

    /// Plays the pretended vector of [`construct_rent`].
    pub fn strategic(instance: &ProblemInstance) -> Result<Self> {
        let rent = construct_rent(instance)?;
        Ok(AgentBehavior {
            mode: AgentMode::Strategic,
            s_play: rent.s_pretend.clone(),
            rent: Some(rent),
        })
    }

    /// Strategic play on an arbitrary fixed vector.
    pub fn pretending(s_play: NormalizedRewardVector) -> Self {
        AgentBehavior {
            mode: AgentMode::Strategic,
            s_play,
            rent: None,
        }
    }

    pub fn for_mode(instance: &ProblemInstance, mode: AgentMode) -> Result<Self> {
        match mode {
            AgentMode::Truthful => Ok(Self::truthful(instance)),
            AgentMode::Strategic => Self::strategic(instance),
        }
    }

    pub fn mode(&self) -> AgentMode {
        self.mode
    }

    pub fn s_play(&self) -> &NormalizedRewardVector {
        &self.s_play
    }

    pub fn rent(&self) -> Option<&RentConstruction> {
        self.rent.as_ref()
    }

    pub fn act(&self, pi: &IncentiveVector) -> Result<ActionIndex> {
        best_response(&self.s_play, pi)
    }
}

/// Which constructive case produced the pretended vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RentCase {
    /// The principal's best arm is also the agent's favorite. The agent
    /// inflates the principal's runner-up arm `q0_bar`.
    SameArgmax { q0: ActionIndex, q0_bar: ActionIndex },
    /// The favorites differ. The agent inflates its own favorite `kappa0`,
    /// raising the price of the oracle arm `j_star`.
    DifferentArgmax { j_star: ActionIndex, kappa0: ActionIndex },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RentConstruction {
    pub case: RentCase,
    /// Rent quantity before the `2 * varsigma` margin.
    pub q: f64,
    pub s_pretend: NormalizedRewardVector,
    pub pi_expected: IncentiveVector,
}

impl RentConstruction {
    /// The arm the principal is driven to pay for.
    pub fn target(&self) -> ActionIndex {
        match self.case {
            RentCase::SameArgmax { q0, .. } => q0,
            RentCase::DifferentArgmax { j_star, .. } => j_star,
        }
    }
}

/// Whether `(s, pi)` is a feasible pretended-vector/incentive pair: `pi` pays
/// a single arm `a` at least `varsigma` (and nothing elsewhere), `a` is the
/// principal's best steering target under `s`, and the agent playing `s`
/// picks `a` under `pi`.
pub fn rent_feasible(
    instance: &ProblemInstance,
    s: &NormalizedRewardVector,
    pi: &IncentiveVector,
) -> Result<bool> {
    let n = instance.n();
    if s.len() != n || pi.len() != n {
        return domain("rent check: length mismatch");
    }
    let positive: Vec<usize> = (0..n).filter(|&a| pi[a] > 0.0).collect();
    if positive.len() > 1 {
        return domain(format!(
            "rent check: incentives pay {} arms, at most one allowed",
            positive.len()
        ));
    }
    if !pi.within(instance.incentive_low(), instance.incentive_high()) {
        return domain("rent check: incentives outside the admissible range");
    }
    let Some(&a) = positive.first() else {
        return Ok(false);
    };
    if pi.as_slice().iter().enumerate().any(|(j, &p)| j != a && p != 0.0) {
        return Ok(false);
    }
    if pi[a] < instance.varsigma() - TOL {
        return Ok(false);
    }
    let values = steered_net_values(instance.theta0(), s);
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let principal_ok = values[a] >= best - TOL;
    let agent_ok = best_response(s, pi)?.index() == a;
    Ok(principal_ok && agent_ok)
}

/// Pretended vector and induced incentives from the two constructive cases.
pub fn construct_rent(instance: &ProblemInstance) -> Result<RentConstruction> {
    let n = instance.n();
    let theta = instance.theta0();
    let s0 = instance.s0();
    let varsigma = instance.varsigma();
    let kappa0 = s0.argmax();
    let q0 = argmax_lowest(theta);

    let (case, q, inflated, new_value, paid) = if kappa0 == q0 {
        let q0_bar = second_best(theta, q0);
        let q1 = theta[q0.index()] - theta[q0_bar.index()];
        let new_value = s0[q0.index()] + q1 - 2.0 * varsigma;
        (
            RentCase::SameArgmax { q0, q0_bar },
            q1,
            q0_bar,
            new_value,
            q1 - varsigma,
        )
    } else {
        let oracle = oracle_incentives(instance);
        let j_star = oracle.arm;
        let runner_up = second_best(&oracle.net_values, j_star);
        let q2 = oracle.net_values[j_star.index()] - oracle.net_values[runner_up.index()];
        let new_value = s0[kappa0.index()] + q2 - 2.0 * varsigma;
        let paid = s0[kappa0.index()] - s0[j_star.index()] + q2 - varsigma;
        (
            RentCase::DifferentArgmax { j_star, kappa0 },
            q2,
            kappa0,
            new_value,
            paid,
        )
    };
    if q <= 2.0 * varsigma {
        return Err(Error::NoRent { gap: q, varsigma });
    }

    let mut raw = s0.as_slice().to_vec();
    raw[inflated.index()] = new_value;
    // inflating arm 1 moves the reference; re-anchor it at zero
    let anchor = raw[0];
    let shifted: Vec<f64> = raw.iter().map(|v| v - anchor).collect();
    let s_pretend = NormalizedRewardVector::new(shifted, instance.box_half_width())
        .map_err(|e| Error::Domain(format!("pretended vector leaves the admissible set: {e}")))?;

    let target = match case {
        RentCase::SameArgmax { q0, .. } => q0,
        RentCase::DifferentArgmax { j_star, .. } => j_star,
    };
    if paid > instance.incentive_high() + TOL {
        return domain(format!(
            "induced incentive {paid} exceeds C_high = {}",
            instance.incentive_high()
        ));
    }
    Ok(RentConstruction {
        case,
        q,
        s_pretend,
        pi_expected: IncentiveVector::single(n, target, paid),
    })
}

/// Agent's true utility under the construction minus its utility under
/// truthful play against the oracle.
pub fn rent_gain(instance: &ProblemInstance, construction: &RentConstruction) -> f64 {
    let s0 = instance.s0();
    let a = construction.target().index();
    let strategic = s0[a] + construction.pi_expected[a];
    let oracle = oracle_incentives(instance);
    let j = oracle.arm.index();
    let truthful = s0[j] + oracle.incentives[j];
    strategic - truthful
}

/// Best index other than `skip`, lowest index on ties.
fn second_best(values: &[f64], skip: ActionIndex) -> ActionIndex {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if i == skip.index() {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    ActionIndex::new(best.expect("at least two actions"))
}
