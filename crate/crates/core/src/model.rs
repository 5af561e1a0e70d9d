//! Shared domain types: problem instances, normalized reward vectors,
//! incentive vectors, and the agent's argmax choice rule.
//!
//! Actions are stored 0-based. Everything user-facing (CSV, JSON, CLI,
//! `Display`) uses 1-based action numbers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance for float comparisons against model bounds.
pub const TOL: f64 = 1e-9;

/// Default oracle tie-breaking margin.
pub const DEFAULT_VARSIGMA: f64 = 0.1;

/// Closed interval of admissible mean rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRange {
    pub min: f64,
    pub max: f64,
}

impl RewardRange {
    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min - TOL && x <= self.max + TOL
    }
}

/// An action, stored 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionIndex(usize);

impl ActionIndex {
    pub fn new(index: usize) -> Self {
        ActionIndex(index)
    }

    pub fn from_one_based(a: usize, n: usize) -> Result<Self> {
        if a == 0 || a > n {
            return domain(format!("action {a} outside 1..={n}"));
        }
        Ok(ActionIndex(a - 1))
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn one_based(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for ActionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.one_based())
    }
}

impl Serialize for ActionIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.one_based() as u64)
    }
}

impl<'de> Deserialize<'de> for ActionIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = u64::deserialize(d)? as usize;
        if a == 0 {
            return Err(serde::de::Error::custom("actions are 1-based"));
        }
        Ok(ActionIndex::new(a - 1))
    }
}

/// Mean rewards shifted so the first coordinate is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedRewardVector(Vec<f64>);

impl NormalizedRewardVector {
    /// Validates `s[0] == 0` and `|s[a]| <= half_width` for every coordinate.
    pub fn new(s: Vec<f64>, half_width: f64) -> Result<Self> {
        if s.len() < 2 {
            return domain("normalized reward vector needs at least 2 actions");
        }
        if s[0].abs() > TOL {
            return domain(format!("first coordinate must be 0, got {}", s[0]));
        }
        if let Some((a, v)) = s
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > half_width + TOL)
        {
            return domain(format!(
                "s[{}] = {v} outside [-{half_width}, {half_width}]",
                a + 1
            ));
        }
        Ok(NormalizedRewardVector(s))
    }

    pub(crate) fn from_vec_unchecked(s: Vec<f64>) -> Self {
        NormalizedRewardVector(s)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest coordinate, lowest index on ties.
    pub fn argmax(&self) -> ActionIndex {
        argmax_lowest(&self.0)
    }

    pub fn max_abs_diff(&self, other: &NormalizedRewardVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for NormalizedRewardVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One incentive per action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IncentiveVector(Vec<f64>);

impl IncentiveVector {
    pub fn new(pi: Vec<f64>) -> Self {
        IncentiveVector(pi)
    }

    pub fn zeros(n: usize) -> Self {
        IncentiveVector(vec![0.0; n])
    }

    /// `value` on `arm`, zero elsewhere.
    pub fn single(n: usize, arm: ActionIndex, value: f64) -> Self {
        let mut pi = vec![0.0; n];
        pi[arm.index()] = value;
        IncentiveVector(pi)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn l1_distance(&self, other: &IncentiveVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn within(&self, low: f64, high: f64) -> bool {
        self.0.iter().all(|&p| p >= low - TOL && p <= high + TOL)
    }
}

impl std::ops::Index<usize> for IncentiveVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Index of the maximum, lowest index on ties.
pub fn argmax_lowest(values: &[f64]) -> ActionIndex {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    ActionIndex(best)
}

/// Shift `r` so its first coordinate is zero.
pub fn normalize(r: &[f64], range: RewardRange) -> Result<NormalizedRewardVector> {
    if let Some((a, v)) = r.iter().enumerate().find(|(_, &v)| !range.contains(v)) {
        return domain(format!(
            "r[{}] = {v} outside [{}, {}]",
            a + 1,
            range.min,
            range.max
        ));
    }
    let Some(&first) = r.first() else {
        return domain("empty reward vector");
    };
    NormalizedRewardVector::new(r.iter().map(|v| v - first).collect(), range.width())
}

/// The action maximizing `s[a] + pi[a]`, lowest index on ties.
pub fn best_response(s: &NormalizedRewardVector, pi: &IncentiveVector) -> Result<ActionIndex> {
    if s.len() != pi.len() {
        return domain(format!(
            "length mismatch: {} rewards vs {} incentives",
            s.len(),
            pi.len()
        ));
    }
    let mut best = 0;
    let mut best_u = s[0] + pi[0];
    for a in 1..s.len() {
        let u = s[a] + pi[a];
        if u > best_u {
            best = a;
            best_u = u;
        }
    }
    Ok(ActionIndex(best))
}

/// Net value to the principal of steering the agent onto each arm with the
/// minimal incentive: `theta[j] - (max s - s[j])`.
pub fn steered_net_values(theta: &[f64], s: &NormalizedRewardVector) -> Vec<f64> {
    let top = s.max();
    theta
        .iter()
        .zip(s.as_slice())
        .map(|(t, sj)| t - (top - sj))
        .collect()
}

/// Serializable parameters of a [`ProblemInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParams {
    pub theta0: Vec<f64>,
    pub r0: Vec<f64>,
    pub reward_min: f64,
    pub reward_max: f64,
    pub gamma: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    #[serde(default = "default_noise_sd")]
    pub reward_noise_sd: f64,
    #[serde(default = "default_varsigma")]
    pub varsigma: f64,
    /// Explicit incentive range `[C_low, C_high]`, replacing
    /// `[reward_min, reward_max + gamma]`. It must contain 0 and be at least
    /// as wide as the reward range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incentive_range: Option<[f64; 2]>,
}

fn default_noise_sd() -> f64 {
    5.0
}

fn default_varsigma() -> f64 {
    DEFAULT_VARSIGMA
}

/// A validated game instance. Incentives live in
/// `[reward_min, reward_max + gamma]` unless an explicit range is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceParams", into = "InstanceParams")]
pub struct ProblemInstance {
    params: InstanceParams,
    s0: NormalizedRewardVector,
}

impl TryFrom<InstanceParams> for ProblemInstance {
    type Error = Error;
    fn try_from(p: InstanceParams) -> Result<Self> {
        ProblemInstance::new(p)
    }
}

impl From<ProblemInstance> for InstanceParams {
    fn from(p: ProblemInstance) -> Self {
        p.params
    }
}

impl ProblemInstance {
    pub fn new(params: InstanceParams) -> Result<Self> {
        let p = &params;
        let n = p.theta0.len();
        if n < 2 {
            return domain(format!("need at least 2 actions, got {n}"));
        }
        if p.r0.len() != n {
            return domain(format!("theta0 has {n} entries but r0 has {}", p.r0.len()));
        }
        let width = p.reward_max - p.reward_min;
        if !(width >= 1.0) {
            return domain(format!(
                "R_max - R_min >= 1 violated (R = [{}, {}])",
                p.reward_min, p.reward_max
            ));
        }
        if !(p.gamma > 0.0 && p.gamma <= width - 1.0) {
            return domain(format!(
                "0 < gamma <= R_max - R_min - 1 = {} violated (gamma = {})",
                width - 1.0,
                p.gamma
            ));
        }
        match p.incentive_range {
            None if p.reward_min > 0.0 => {
                return domain(format!(
                    "C_low = R_min <= 0 violated (R_min = {}); zero incentives must be admissible",
                    p.reward_min
                ));
            }
            Some([lo, hi]) if !(lo <= 0.0 && hi > 0.0 && hi - lo >= width) => {
                return domain(format!(
                    "incentive range [{lo}, {hi}] must contain 0 and be at least R_max - R_min = {width} wide"
                ));
            }
            _ => {}
        }
        if !(p.theta_min <= p.theta_max) {
            return domain("theta_min <= theta_max violated");
        }
        let range = RewardRange {
            min: p.reward_min,
            max: p.reward_max,
        };
        let s0 = normalize(&p.r0, range)?;
        if let Some((a, t)) = p
            .theta0
            .iter()
            .enumerate()
            .find(|(_, &t)| !(t >= p.theta_min && t <= p.theta_max))
        {
            return domain(format!(
                "theta0[{}] = {t} outside Theta = [{}, {}]",
                a + 1,
                p.theta_min,
                p.theta_max
            ));
        }
        if !(p.reward_noise_sd >= 0.0 && p.reward_noise_sd.is_finite()) {
            return domain(format!("reward_noise_sd = {} must be >= 0", p.reward_noise_sd));
        }
        if !(p.varsigma > 0.0) {
            return domain(format!("varsigma > 0 violated (varsigma = {})", p.varsigma));
        }
        let values = steered_net_values(&p.theta0, &s0);
        if let Some(gap) = min_positive_gap(&values) {
            if p.varsigma >= gap {
                return domain(format!(
                    "varsigma < min positive gap of steered net values = {gap} violated (varsigma = {})",
                    p.varsigma
                ));
            }
        }
        Ok(ProblemInstance { params, s0 })
    }

    pub fn params(&self) -> &InstanceParams {
        &self.params
    }

    pub fn with_varsigma(&self, varsigma: f64) -> Result<Self> {
        ProblemInstance::new(InstanceParams {
            varsigma,
            ..self.params.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.params.theta0.len()
    }

    pub fn theta0(&self) -> &[f64] {
        &self.params.theta0
    }

    pub fn r0(&self) -> &[f64] {
        &self.params.r0
    }

    pub fn s0(&self) -> &NormalizedRewardVector {
        &self.s0
    }

    pub fn reward_range(&self) -> RewardRange {
        RewardRange {
            min: self.params.reward_min,
            max: self.params.reward_max,
        }
    }

    /// Half-width of the per-coordinate box on normalized rewards.
    pub fn box_half_width(&self) -> f64 {
        self.params.reward_max - self.params.reward_min
    }

    pub fn incentive_low(&self) -> f64 {
        match self.params.incentive_range {
            Some([lo, _]) => lo,
            None => self.params.reward_min,
        }
    }

    pub fn incentive_high(&self) -> f64 {
        match self.params.incentive_range {
            Some([_, hi]) => hi,
            None => self.params.reward_max + self.params.gamma,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn varsigma(&self) -> f64 {
        self.params.varsigma
    }

    pub fn reward_noise_sd(&self) -> f64 {
        self.params.reward_noise_sd
    }
}

/// Smallest strictly positive difference between sorted values.
fn min_positive_gap(values: &[f64]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > TOL)
        .min_by(f64::total_cmp)
}
