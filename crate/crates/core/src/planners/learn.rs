use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::{feedback_update, Policy, PolicyPlanner, Selection};
use super::{derive_seed, PlannerError};
use crate::bt::{run_to_completion, BehaviorTree, Episode, NodeId, Planner, Status};
use crate::compiler::compile_mission;
use crate::gridworld::{c2h_mission, Cell, GridConfig, GridEnv};
use crate::ltlf::{CompiledFormula, Trace};
use crate::mission::{expand_mission, MissionConfig};

const CHEESE: &str = "cheese";
const HOME: &str = "home";

/// The fetch-and-return mission compiled for one grid, ready to be bound
/// to a pair of planners.
#[derive(Clone)]
pub struct GridMission {
    tree: BehaviorTree,
    formula: Arc<CompiledFormula>,
    cheese_boundary: NodeId,
    max_trace: usize,
}

/// One run of the mission, audited against the mission formula.
#[derive(Debug, Clone)]
pub struct GridEpisode {
    pub episode: Episode,
    /// Tick on which the cheese subtree first succeeded.
    pub cheese_success: Option<u64>,
    /// False when a successful run violated the mission formula.
    pub sound: bool,
}

impl GridEpisode {
    pub fn success(&self) -> bool {
        self.episode.status == Status::Success
    }

    pub fn trace_len(&self) -> usize {
        self.episode.trace.len()
    }

    /// `(state key, action)` pairs issued by `task`'s action, in order.
    pub fn pairs(&self, task: &str) -> Vec<(usize, usize)> {
        self.episode
            .log
            .commands()
            .filter(|c| c.task == task)
            .map(|c| (c.key as usize, c.choice))
            .collect()
    }
}

impl GridMission {
    /// Compiles the mission with tick budget `max_trace` and `theta` resets
    /// per Finally node.
    pub fn new(grid: &GridConfig, max_trace: usize, theta: u32) -> Result<Self, PlannerError> {
        let expr = c2h_mission(grid)?;
        let config = MissionConfig::new(max_trace as u32, theta, grid.alphabet())?;
        let tree = compile_mission(&expr, &config)?;
        let formula = CompiledFormula::new(&expand_mission(&expr)?, tree.trace_alphabet())?;
        let cheese_boundary = tree.root().task_boundaries(CHEESE)[0];
        Ok(GridMission {
            tree,
            formula: Arc::new(formula),
            cheese_boundary,
            max_trace,
        })
    }

    pub fn tree(&self) -> &BehaviorTree {
        &self.tree
    }

    pub fn audit(&self, trace: &Trace, status: Status) -> Result<bool, PlannerError> {
        Ok(status != Status::Success || self.formula.eval_at(trace, 0)?)
    }

    /// Runs one episode from the environment's current state.
    pub fn run(
        &self,
        env: &mut GridEnv,
        cheese: &dyn Planner,
        home: &dyn Planner,
    ) -> Result<GridEpisode, PlannerError> {
        let mut tree = self.tree.clone();
        tree.bind(CHEESE, cheese);
        tree.bind(HOME, home);
        let episode = run_to_completion(&mut tree, env, self.max_trace)?;
        let sound = self.audit(&episode.trace, episode.status)?;
        Ok(GridEpisode {
            cheese_success: episode.log.first_success(self.cheese_boundary),
            sound,
            episode,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    /// Episodes per learning run.
    pub episodes: usize,
    /// Trace bound and mission tick budget.
    pub max_trace: usize,
    /// Credit decay along a trace segment.
    pub discount: f64,
    /// Smallest probability kept after an update.
    pub floor: f64,
    pub theta: u32,
    pub start: Cell,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            episodes: 200,
            max_trace: 50,
            discount: 0.9,
            floor: 1e-3,
            theta: 0,
            start: Cell::new(4, 1),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub success: bool,
    pub trace_len: usize,
    pub cheese_reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub cheese: Policy,
    pub home: Policy,
    pub curve: Vec<EpisodeSummary>,
    /// Successful episodes whose trace violated the mission formula.
    pub violations: usize,
    /// The first violating trace, if any.
    #[serde(default)]
    pub counterexample: Option<String>,
}

impl LearnOutcome {
    pub fn success_rate(&self) -> f64 {
        mean(self.curve.iter().map(|e| e.success as u8 as f64))
    }

    pub fn mean_trace_len(&self) -> f64 {
        mean(self.curve.iter().map(|e| e.trace_len as f64))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn status_sign(success: bool) -> f64 {
    if success {
        1.0
    } else {
        -1.0
    }
}

/// Learns one policy per task from the mission's return status.
///
/// Each episode starts at `cfg.start` with uniform-sampling planners over
/// the current tables. If the cheese subtree never succeeded, its pairs are
/// updated with the mission status. Otherwise the cheese pairs are
/// reinforced and the home pairs get the mission status.
pub fn learn(grid: &GridConfig, cfg: &LearnerConfig) -> Result<LearnOutcome, PlannerError> {
    let mission = GridMission::new(grid, cfg.max_trace, cfg.theta)?;
    let n = grid.n_cells();
    let mut cheese = Policy::uniform(n, 4);
    let mut home = Policy::uniform(n, 4);
    let env_cfg = GridConfig {
        start: cfg.start,
        ..grid.clone()
    };
    env_cfg.validate()?;
    let mut env = GridEnv::with_rng(env_cfg, ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0)));
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut violations = 0;
    let mut counterexample = None;
    for episode in 0..cfg.episodes {
        env.reset_to(cfg.start);
        let seed = derive_seed(cfg.seed, 1 + episode as u64);
        let c = PolicyPlanner::new(Arc::new(cheese.clone()), Selection::Sample, seed);
        let h = PolicyPlanner::new(Arc::new(home.clone()), Selection::Sample, seed ^ 1);
        let run = mission.run(&mut env, &c, &h)?;
        if !run.sound {
            violations += 1;
            counterexample.get_or_insert_with(|| run.episode.trace.to_string());
        }
        let b = status_sign(run.success());
        if run.cheese_success.is_none() {
            feedback_update(&mut cheese, &run.pairs(CHEESE), b, cfg.discount, cfg.floor);
        } else {
            feedback_update(
                &mut cheese,
                &run.pairs(CHEESE),
                1.0,
                cfg.discount,
                cfg.floor,
            );
            feedback_update(&mut home, &run.pairs(HOME), b, cfg.discount, cfg.floor);
        }
        curve.push(EpisodeSummary {
            episode,
            success: run.success(),
            trace_len: run.trace_len(),
            cheese_reached: run.cheese_success.is_some(),
        });
    }
    Ok(LearnOutcome {
        cheese,
        home,
        curve,
        violations,
        counterexample,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_trials: usize,
    pub max_trace: usize,
    pub theta: u32,
    /// Draw each trial's start cell uniformly (fire excluded); otherwise
    /// start at the grid's configured start.
    pub randomize_start: bool,
    pub selection: Selection,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_trials: 50,
            max_trace: 50,
            theta: 0,
            randomize_start: true,
            selection: Selection::Sample,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub n_trials: usize,
    pub success_rate: f64,
    pub mean_trace_len: f64,
    pub violations: usize,
    #[serde(default)]
    pub counterexample: Option<String>,
}

/// Success fraction and mean trace length of the mission under fixed
/// policies. Trials are independent and run in parallel; trial `i` uses
/// seeds derived from `(cfg.seed, i)`.
pub fn evaluate_policy(
    grid: &GridConfig,
    cheese: &Policy,
    home: &Policy,
    cfg: &EvalConfig,
) -> Result<EvalOutcome, PlannerError> {
    grid.validate()?;
    let mission = GridMission::new(grid, cfg.max_trace, cfg.theta)?;
    let cheese = Arc::new(cheese.clone());
    let home = Arc::new(home.clone());
    let runs: Vec<GridEpisode> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, i as u64);
            let mut env = GridEnv::with_rng(grid.clone(), ChaCha8Rng::seed_from_u64(seed));
            if cfg.randomize_start {
                env.reset_random();
            }
            let c = PolicyPlanner::new(cheese.clone(), cfg.selection, seed ^ 0x5a5a);
            let h = PolicyPlanner::new(home.clone(), cfg.selection, seed ^ 0xa5a5);
            mission.run(&mut env, &c, &h)
        })
        .collect::<Result<_, _>>()?;
    Ok(EvalOutcome {
        n_trials: cfg.n_trials,
        success_rate: mean(runs.iter().map(|r| r.success() as u8 as f64)),
        mean_trace_len: mean(runs.iter().map(|r| r.trace_len() as f64)),
        violations: runs.iter().filter(|r| !r.sound).count(),
        counterexample: runs
            .iter()
            .find(|r| !r.sound)
            .map(|r| r.episode.trace.to_string()),
    })
}
