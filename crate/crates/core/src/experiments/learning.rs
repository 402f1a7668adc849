use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gridworld::GridConfig;
use crate::planners::{
    derive_seed, evaluate_policy, learn, EvalConfig, LearnOutcome, LearnerConfig, PlannerError,
};

/// Independent learning runs per slip level, each followed by an
/// inference evaluation of the learned tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningConfig {
    pub p_in: Vec<f64>,
    pub runs: usize,
    pub learner: LearnerConfig,
    pub eval: EvalConfig,
    pub grid: GridConfig,
    pub seed: u64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            p_in: vec![0.6, 0.8, 0.95],
            runs: 50,
            learner: LearnerConfig::default(),
            eval: EvalConfig::default(),
            grid: GridConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRow {
    pub p_in: f64,
    pub run: usize,
    pub seed: u64,
    pub learning_success: f64,
    pub learning_trace_length: f64,
    pub inference_success: f64,
    pub inference_trace_length: f64,
    pub violations: usize,
    #[serde(skip)]
    pub counterexample: Option<String>,
}

/// One learning run and its evaluation, fully determined by `seed`.
pub fn run_learning_once(
    cfg: &LearningConfig,
    p_in: f64,
    run: usize,
    seed: u64,
) -> Result<(LearningRow, LearnOutcome), PlannerError> {
    let grid = GridConfig {
        p_in,
        ..cfg.grid.clone()
    };
    let learner = LearnerConfig {
        seed,
        ..cfg.learner.clone()
    };
    let outcome = learn(&grid, &learner)?;
    let eval = EvalConfig {
        seed: derive_seed(seed, u64::MAX),
        ..cfg.eval.clone()
    };
    let inference = evaluate_policy(&grid, &outcome.cheese, &outcome.home, &eval)?;
    let row = LearningRow {
        p_in,
        run,
        seed,
        learning_success: outcome.success_rate(),
        learning_trace_length: outcome.mean_trace_len(),
        inference_success: inference.success_rate,
        inference_trace_length: inference.mean_trace_len,
        violations: outcome.violations + inference.violations,
        counterexample: outcome.counterexample.clone().or(inference.counterexample),
    };
    Ok((row, outcome))
}

/// Rows ordered by slip level, then run.
pub fn run_learning(cfg: &LearningConfig) -> Result<Vec<LearningRow>, PlannerError> {
    Ok(run_learning_outcomes(cfg)?
        .into_iter()
        .map(|(row, _)| row)
        .collect())
}

/// Like [`run_learning`], keeping each run's learned tables and curve.
pub fn run_learning_outcomes(
    cfg: &LearningConfig,
) -> Result<Vec<(LearningRow, LearnOutcome)>, PlannerError> {
    let jobs: Vec<(usize, f64, usize)> = cfg
        .p_in
        .iter()
        .enumerate()
        .flat_map(|(i, p)| (0..cfg.runs).map(move |r| (i, *p, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(i, p_in, run)| {
            let seed = derive_seed(cfg.seed, (i * cfg.runs + run) as u64);
            run_learning_once(cfg, p_in, run, seed)
        })
        .collect()
}

/// Mean learning and inference figures of the rows for one slip level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningSummary {
    pub p_in: f64,
    pub runs: usize,
    pub learning_success: f64,
    pub learning_trace_length: f64,
    pub inference_success: f64,
    pub inference_trace_length: f64,
    pub violations: usize,
}

pub fn summarize(rows: &[LearningRow]) -> Vec<LearningSummary> {
    let mut levels: Vec<f64> = rows.iter().map(|r| r.p_in).collect();
    levels.dedup();
    levels
        .into_iter()
        .map(|p_in| {
            let group: Vec<&LearningRow> = rows.iter().filter(|r| r.p_in == p_in).collect();
            let n = group.len() as f64;
            let avg = |f: fn(&LearningRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            LearningSummary {
                p_in,
                runs: group.len(),
                learning_success: avg(|r| r.learning_success),
                learning_trace_length: avg(|r| r.learning_trace_length),
                inference_success: avg(|r| r.inference_success),
                inference_trace_length: avg(|r| r.inference_trace_length),
                violations: group.iter().map(|r| r.violations).sum(),
            }
        })
        .collect()
}
