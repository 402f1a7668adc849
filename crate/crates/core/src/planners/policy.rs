use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bt::{Observation, Planner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Deterministic,
    Stochastic,
}

/// Table of action distributions, one row per state key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub kind: PolicyKind,
    pub n_actions: usize,
    pub rows: Vec<Vec<f64>>,
}

impl Policy {
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Policy {
            kind: PolicyKind::Stochastic,
            n_actions,
            rows: vec![vec![1.0 / n_actions as f64; n_actions]; n_states],
        }
    }

    /// One-hot rows from a chosen action per state.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let rows = actions
            .iter()
            .map(|a| {
                let mut row = vec![0.0; n_actions];
                row[*a] = 1.0;
                row
            })
            .collect();
        Policy {
            kind: PolicyKind::Deterministic,
            n_actions,
            rows,
        }
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    /// Most likely action; ties go to the lowest index.
    pub fn argmax(&self, state: usize) -> usize {
        let row = &self.rows[state];
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.iter().position(|p| *p == best).unwrap_or(0)
    }

    pub fn sample(&self, state: usize, rng: &mut ChaCha8Rng) -> usize {
        match WeightedIndex::new(&self.rows[state]) {
            Ok(dist) => dist.sample(rng),
            Err(_) => self.argmax(state),
        }
    }

    /// Whether every row is nonnegative and sums to one within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.rows.iter().all(|row| {
            row.len() == self.n_actions
                && row.iter().all(|p| *p >= 0.0)
                && (row.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }
}

/// Reinforces the state-action pairs of one trace segment.
///
/// Pair `t` of an `m+1`-long segment moves `p(a_t | s_t)` by `mu^(m-t) * b`,
/// all against the pre-update table. Touched rows are then floored at
/// `floor` and renormalized.
pub fn feedback_update(policy: &mut Policy, pairs: &[(usize, usize)], b: f64, mu: f64, floor: f64) {
    if pairs.is_empty() {
        return;
    }
    let m = pairs.len() - 1;
    let mut deltas: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (t, &(s, a)) in pairs.iter().enumerate() {
        let row = deltas
            .entry(s)
            .or_insert_with(|| vec![0.0; policy.n_actions]);
        row[a] += mu.powi((m - t) as i32) * b;
    }
    for (s, delta) in deltas {
        let row = &mut policy.rows[s];
        for (p, d) in row.iter_mut().zip(&delta) {
            *p = (*p + d).max(floor);
        }
        let total: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= total;
        }
    }
    policy.kind = PolicyKind::Stochastic;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Sample,
    Argmax,
}

/// Action runner backed by a policy table indexed by the environment's
/// state key.
#[derive(Debug, Clone)]
pub struct PolicyPlanner {
    policy: Arc<Policy>,
    selection: Selection,
    rng: ChaCha8Rng,
}

impl PolicyPlanner {
    pub fn new(policy: Arc<Policy>, selection: Selection, seed: u64) -> Self {
        PolicyPlanner {
            policy,
            selection,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Planner for PolicyPlanner {
    fn next_command(&mut self, obs: &Observation<'_>) -> usize {
        let state = obs.key as usize;
        match (self.selection, self.policy.kind) {
            (Selection::Argmax, _) | (_, PolicyKind::Deterministic) => self.policy.argmax(state),
            (Selection::Sample, PolicyKind::Stochastic) => self.policy.sample(state, &mut self.rng),
        }
    }

    fn box_clone(&self) -> Box<dyn Planner> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_update_on_uniform_row() {
        let mut p = Policy::uniform(1, 4);
        feedback_update(&mut p, &[(0, 0)], 1.0, 0.9, 1e-3);
        let want = [0.625, 0.125, 0.125, 0.125];
        for (got, want) in p.row(0).iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_update_hits_the_floor() {
        let mut p = Policy::uniform(1, 4);
        feedback_update(&mut p, &[(0, 2)], -1.0, 0.9, 1e-3);
        let total = 0.75 + 1e-3;
        assert!((p.row(0)[2] - 1e-3 / total).abs() < 1e-12);
        assert!((p.row(0)[0] - 0.25 / total).abs() < 1e-12);
        assert!(p.is_valid(1e-12));
    }

    #[test]
    fn discount_ladder() {
        let mut p = Policy::uniform(3, 4);
        feedback_update(&mut p, &[(0, 1), (1, 1), (2, 1)], 1.0, 0.9, 1e-3);
        for (s, inc) in [(0, 0.81), (1, 0.9), (2, 1.0)] {
            let total = 1.0 + inc;
            assert!((p.row(s)[1] - (0.25 + inc) / total).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let p = Policy::uniform(1, 4);
        assert_eq!(p.argmax(0), 0);
        let d = Policy::deterministic(&[3], 4);
        assert_eq!(d.argmax(0), 3);
    }

    #[test]
    fn sampling_follows_the_row() {
        let mut p = Policy::uniform(1, 4);
        p.rows[0] = vec![0.0, 0.0, 1.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..50).all(|_| p.sample(0, &mut rng) == 2));
    }
}
