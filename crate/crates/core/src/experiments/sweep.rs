use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gridworld::{GridConfig, Phase, Rewards};
use crate::planners::{
    derive_seed, evaluate_policy, policy_iteration, EvalConfig, PlannerError, Policy, Selection,
};

/// Reward and slip grid for the policy-iteration sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub r_other: Vec<f64>,
    pub r_good: Vec<f64>,
    pub r_fire: Vec<f64>,
    pub p_in: Vec<f64>,
    pub n_trials: usize,
    pub max_trace: usize,
    pub gamma: f64,
    pub theta: u32,
    pub seed: u64,
    /// Cells, start and absorbing flag; rewards and p_in are overridden.
    pub grid: GridConfig,
}

fn steps(from: f64, to: f64, by: f64) -> Vec<f64> {
    let n = ((to - from) / by).round() as i64;
    (0..=n)
        .map(|i| ((from + i as f64 * by) * 1e6).round() / 1e6)
        .collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        let mut r_other = steps(-1.5, -0.1, 0.1);
        r_other.push(-0.04);
        SweepConfig {
            r_other,
            r_good: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
            r_fire: vec![-10.0, -5.0, -2.0, -1.0, -0.5, -0.1],
            p_in: steps(0.4, 0.95, 0.05),
            n_trials: 50,
            max_trace: 50,
            gamma: 0.9,
            theta: 0,
            seed: 0,
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub rewards: Rewards,
    pub p_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub r_other: f64,
    pub r_good: f64,
    pub r_fire: f64,
    pub p_in: f64,
    pub n_trials: usize,
    pub success_probability: f64,
    pub mean_trace_length: f64,
    pub violations: usize,
    pub seed: u64,
    #[serde(skip)]
    pub counterexample: Option<String>,
}

impl SweepConfig {
    /// Cells in row-major order over (r_other, r_good, r_fire, p_in).
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &other in &self.r_other {
            for &good in &self.r_good {
                for &fire in &self.r_fire {
                    for &p_in in &self.p_in {
                        out.push(SweepCell {
                            rewards: Rewards { other, good, fire },
                            p_in,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Plans both tasks by policy iteration and runs `n_trials` missions from
/// the grid's start with the greedy policies.
pub fn run_cell(
    cfg: &SweepConfig,
    index: usize,
    cell: SweepCell,
    seed: u64,
) -> Result<SweepRow, PlannerError> {
    let grid = GridConfig {
        rewards: cell.rewards,
        p_in: cell.p_in,
        ..cfg.grid.clone()
    };
    grid.validate()?;
    let plan = |phase| -> Result<Policy, PlannerError> {
        let result = policy_iteration(&grid.analytic_mdp(phase), cfg.gamma, 1000)?;
        Ok(Policy::deterministic(&result.actions, 4))
    };
    let (cheese, home) = (plan(Phase::Cheese)?, plan(Phase::Home)?);
    let (success_probability, mean_trace_length, violations, counterexample) = if cfg.n_trials == 0
    {
        (0.0, 0.0, 0, None)
    } else {
        let eval = EvalConfig {
            n_trials: cfg.n_trials,
            max_trace: cfg.max_trace,
            theta: cfg.theta,
            randomize_start: false,
            selection: Selection::Argmax,
            seed,
        };
        let out = evaluate_policy(&grid, &cheese, &home, &eval)?;
        (
            out.success_rate,
            out.mean_trace_len,
            out.violations,
            out.counterexample,
        )
    };
    Ok(SweepRow {
        cell: index,
        r_other: cell.rewards.other,
        r_good: cell.rewards.good,
        r_fire: cell.rewards.fire,
        p_in: cell.p_in,
        n_trials: cfg.n_trials,
        success_probability,
        mean_trace_length,
        violations,
        seed,
        counterexample,
    })
}

/// Every cell of the sweep, in cell order. With zero trials no rows are
/// produced.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, PlannerError> {
    if cfg.n_trials == 0 {
        return Ok(Vec::new());
    }
    cfg.cells()
        .into_par_iter()
        .enumerate()
        .map(|(i, cell)| run_cell(cfg, i, cell, derive_seed(cfg.seed, i as u64)))
        .collect()
}
