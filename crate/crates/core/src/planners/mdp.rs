use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::PlannerError;

/// Finite MDP with an explicit kernel and expected rewards `R(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    /// `P(t | s, a)` at `(s * n_actions + a) * n_states + t`.
    transitions: Vec<f64>,
    rewards: Vec<f64>,
}

impl Mdp {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Mdp {
            n_states,
            n_actions,
            transitions: vec![0.0; n_states * n_actions * n_states],
            rewards: vec![0.0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn at(&self, s: usize, a: usize, t: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + t
    }

    pub fn transition(&self, s: usize, a: usize, t: usize) -> f64 {
        self.transitions[self.at(s, a, t)]
    }

    pub fn set_transition(&mut self, s: usize, a: usize, t: usize, p: f64) {
        let i = self.at(s, a, t);
        self.transitions[i] = p;
    }

    pub fn add_transition(&mut self, s: usize, a: usize, t: usize, p: f64) {
        let i = self.at(s, a, t);
        self.transitions[i] += p;
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    pub fn set_reward(&mut self, s: usize, a: usize, r: f64) {
        self.rewards[s * self.n_actions + a] = r;
    }

    /// `R(s, a) + gamma * sum_t P(t | s, a) V(t)`.
    pub fn q_value(&self, s: usize, a: usize, values: &[f64], gamma: f64) -> f64 {
        let row = &self.transitions[self.at(s, a, 0)..self.at(s, a, 0) + self.n_states];
        self.reward(s, a) + gamma * row.iter().zip(values).map(|(p, v)| p * v).sum::<f64>()
    }

    /// Checks that every row is a probability distribution.
    pub fn check_stochastic(&self) -> Result<(), PlannerError> {
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let start = self.at(s, a, 0);
                let row = &self.transitions[start..start + self.n_states];
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(PlannerError::NonStochasticKernel {
                        state: s,
                        action: a,
                        sum,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Lowest-index action whose value is within `1e-9` of the best.
pub fn greedy_action(mdp: &Mdp, s: usize, values: &[f64], gamma: f64) -> usize {
    let q: Vec<f64> = (0..mdp.n_actions)
        .map(|a| mdp.q_value(s, a, values, gamma))
        .collect();
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    q.iter().position(|v| *v >= best - 1e-9).unwrap_or(0)
}

/// Solves `(I - gamma P_pi) V = R_pi` exactly.
pub fn evaluate_deterministic(
    mdp: &Mdp,
    actions: &[usize],
    gamma: f64,
) -> Result<Vec<f64>, PlannerError> {
    let n = mdp.n_states;
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for s in 0..n {
        for t in 0..n {
            a[(s, t)] -= gamma * mdp.transition(s, actions[s], t);
        }
        r[s] = mdp.reward(s, actions[s]);
    }
    let v = a.lu().solve(&r).ok_or(PlannerError::SingularSystem)?;
    Ok(v.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyIterationResult {
    /// Chosen action per state.
    pub actions: Vec<usize>,
    pub values: Vec<f64>,
    pub iterations: usize,
}

/// Howard's policy iteration with exact evaluation, starting from action 0
/// everywhere. Stops when greedy improvement leaves the policy unchanged.
pub fn policy_iteration(
    mdp: &Mdp,
    gamma: f64,
    max_iters: usize,
) -> Result<PolicyIterationResult, PlannerError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(PlannerError::InvalidDiscount(gamma));
    }
    mdp.check_stochastic()?;
    let mut actions = vec![0; mdp.n_states];
    for iteration in 1..=max_iters {
        let values = evaluate_deterministic(mdp, &actions, gamma)?;
        let improved: Vec<usize> = (0..mdp.n_states)
            .map(|s| {
                let current = mdp.q_value(s, actions[s], &values, gamma);
                let greedy = greedy_action(mdp, s, &values, gamma);
                // Only switch on a real improvement, so ties cannot cycle.
                if mdp.q_value(s, greedy, &values, gamma) > current + 1e-9 {
                    greedy
                } else {
                    actions[s]
                }
            })
            .collect();
        if improved == actions {
            let actions = (0..mdp.n_states)
                .map(|s| greedy_action(mdp, s, &values, gamma))
                .collect();
            return Ok(PolicyIterationResult {
                actions,
                values,
                iterations: iteration,
            });
        }
        actions = improved;
    }
    Err(PlannerError::NoConvergence(max_iters))
}
