//! Set-membership estimation of the agent's normalized mean rewards.
//!
//! Every observed choice `i` under incentives `pi` says the agent preferred
//! `i` to each other arm `a`, i.e. `s[a] - s[i] <= pi[i] - pi[a]`. For a
//! fixed ordered pair only the smallest right-hand side matters, so the whole
//! history compresses to an `n x n` matrix of pairwise gaps. Together with the
//! per-coordinate box and `s[0] = 0` this is a system of difference
//! constraints; per-coordinate bounds are shortest-path distances to and from
//! the reference node, and a negative cycle means no reward vector explains
//! the history.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ActionIndex, IncentiveVector, NormalizedRewardVector, TOL};

/// Feasible set of normalized reward vectors consistent with the observed
/// (incentive, choice) history.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintPolytope {
    n: usize,
    /// Row-major `gap[i * n + a]`: upper bound on `s[a] - s[i]`.
    gap: Vec<f64>,
    box_lo: f64,
    box_hi: f64,
    obs_count: u64,
}

/// Tight per-coordinate bounds of a feasible polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ConstraintPolytope {
    /// Empty history over `n` actions with box `[-half_width, half_width]`.
    pub fn new(n: usize, half_width: f64) -> Self {
        ConstraintPolytope {
            n,
            gap: vec![f64::INFINITY; n * n],
            box_lo: -half_width,
            box_hi: half_width,
            obs_count: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn obs_count(&self) -> u64 {
        self.obs_count
    }

    pub fn box_bounds(&self) -> (f64, f64) {
        (self.box_lo, self.box_hi)
    }

    /// Tightest known bound on `s[a] - s[i]`; infinite when `i` was never chosen.
    pub fn gap(&self, i: ActionIndex, a: ActionIndex) -> f64 {
        self.gap[i.index() * self.n + a.index()]
    }

    /// Absorb one observation: `chosen` was the agent's argmax under `pi`.
    pub fn observe(&mut self, pi: &IncentiveVector, chosen: ActionIndex) -> Result<()> {
        if pi.len() != self.n || chosen.index() >= self.n {
            return domain(format!(
                "observation does not fit a {}-action polytope",
                self.n
            ));
        }
        let i = chosen.index();
        for a in (0..self.n).filter(|&a| a != i) {
            let w = pi[i] - pi[a];
            let slot = &mut self.gap[i * self.n + a];
            if w < *slot {
                *slot = w;
            }
        }
        self.obs_count += 1;
        Ok(())
    }

    fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let mut edges = Vec::with_capacity(n * n + 2 * n);
        for a in 1..n {
            edges.push((0, a, self.box_hi));
            edges.push((a, 0, -self.box_lo));
        }
        for i in 0..n {
            for a in 0..n {
                let w = self.gap[i * n + a];
                if i != a && w.is_finite() {
                    edges.push((i, a, w));
                }
            }
        }
        edges
    }

    /// Tight per-coordinate bounds, or [`Error::InconsistentHistory`] when the
    /// constraint graph has a negative cycle.
    pub fn solve(&self) -> Result<CoordinateBounds> {
        let edges = self.edges();
        let inconsistent = || Error::InconsistentHistory {
            obs_count: self.obs_count,
        };
        let upper = shortest_from_reference(self.n, edges.iter().copied()).ok_or_else(inconsistent)?;
        let to_ref = shortest_from_reference(self.n, edges.iter().map(|&(u, v, w)| (v, u, w)))
            .ok_or_else(inconsistent)?;
        let mut lower: Vec<f64> = to_ref.iter().map(|d| -d).collect();
        let mut upper = upper;
        lower[0] = 0.0;
        upper[0] = 0.0;
        for (lo, hi) in lower.iter_mut().zip(&upper) {
            // roundoff-sized cycles are tolerated; keep the interval ordered
            if *lo > *hi {
                *lo = *hi;
            }
        }
        Ok(CoordinateBounds { lower, upper })
    }

    /// True iff `s` satisfies every stored constraint and the box, i.e. the
    /// set-membership loss of `s` is finite.
    pub fn contains(&self, s: &NormalizedRewardVector) -> bool {
        let n = self.n;
        if s.len() != n || s[0].abs() > TOL {
            return false;
        }
        let v = s.as_slice();
        if v.iter().any(|&x| x < self.box_lo - TOL || x > self.box_hi + TOL) {
            return false;
        }
        (0..n).all(|i| (0..n).all(|a| i == a || v[a] - v[i] <= self.gap[i * n + a] + TOL))
    }
}

/// Bellman-Ford from node 0. `None` if some edge still relaxes by more than
/// `TOL` after `n - 1` passes.
fn shortest_from_reference(
    n: usize,
    edges: impl Iterator<Item = (usize, usize, f64)> + Clone,
) -> Option<Vec<f64>> {
    let mut dist = vec![f64::INFINITY; n];
    dist[0] = 0.0;
    for _ in 1..n {
        let mut changed = false;
        for (u, v, w) in edges.clone() {
            let cand = dist[u] + w;
            if cand < dist[v] {
                dist[v] = cand;
                changed = true;
            }
        }
        if !changed {
            return Some(dist);
        }
    }
    for (u, v, w) in edges {
        if dist[u] + w < dist[v] - TOL {
            return None;
        }
    }
    Some(dist)
}

impl CoordinateBounds {
    /// Per-coordinate midpoint. Feasible as the midpoint of the all-lower and
    /// all-upper corner assignments, both of which are feasible.
    pub fn point_estimate(&self) -> NormalizedRewardVector {
        let mid = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect();
        NormalizedRewardVector::from_vec_unchecked(mid)
    }

    /// Largest per-coordinate interval width; bounds the sup-norm error of
    /// [`Self::point_estimate`] against any feasible vector.
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolytopeWire {
    n: usize,
    gaps: Vec<(usize, usize, f64)>,
    #[serde(rename = "box")]
    bounds: (f64, f64),
    obs_count: u64,
}

impl Serialize for ConstraintPolytope {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n;
        let mut gaps = Vec::new();
        for i in 0..n {
            for a in 0..n {
                let w = self.gap[i * n + a];
                if i != a && w.is_finite() {
                    gaps.push((i + 1, a + 1, w));
                }
            }
        }
        PolytopeWire {
            n,
            gaps,
            bounds: (self.box_lo, self.box_hi),
            obs_count: self.obs_count,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ConstraintPolytope {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = PolytopeWire::deserialize(deserializer)?;
        let n = wire.n;
        if n < 2 {
            return Err(D::Error::custom("polytope needs at least 2 actions"));
        }
        let (lo, hi) = wire.bounds;
        if !(lo <= 0.0 && 0.0 <= hi) {
            return Err(D::Error::custom("box must contain 0"));
        }
        let mut gap = vec![f64::INFINITY; n * n];
        for (i, a, w) in wire.gaps {
            if i == 0 || a == 0 || i > n || a > n || i == a {
                return Err(D::Error::custom(format!("bad gap entry ({i}, {a})")));
            }
            let slot = &mut gap[(i - 1) * n + (a - 1)];
            *slot = slot.min(w);
        }
        Ok(ConstraintPolytope {
            n,
            gap,
            box_lo: lo,
            box_hi: hi,
            obs_count: wire.obs_count,
        })
    }
}
