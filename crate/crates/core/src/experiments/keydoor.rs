//! Symbolic key-door-prize block world with scripted plans and one-off
//! human disturbances.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bt::{run_to_completion, BtError, Command, Environment, Observation, Planner, Status};
use crate::compiler::{bind_actions, compile_mission, CompileError};
use crate::ltlf::{Alphabet, StateVector};
use crate::mission::{parse_mission_file, MissionConfig, MissionError};

pub const KD_MISSION: &str = "\
props NoErr KeyStacked IsKeyDoor VisibleKeyDoor KeyDoorPassive PrizePassive PrizeVisible;
task(key, post=KeyStacked, pre=IsKeyDoor, gc=NoErr, tc=VisibleKeyDoor, action=stack_key);
task(door, post=KeyDoorPassive, pre=KeyStacked, gc=NoErr, tc=KeyStacked, action=move_key_door);
task(prize, post=PrizePassive, pre=PrizeVisible, gc=NoErr, tc=KeyDoorPassive, action=move_prize);
U (F key) (U (F door) (F prize))
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Key,
    Door,
    Prize,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Key, Stage::Door, Stage::Prize];

    pub fn binding(self) -> &'static str {
        match self {
            Stage::Key => "stack_key",
            Stage::Door => "move_key_door",
            Stage::Prize => "move_prize",
        }
    }

    fn from_binding(binding: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.binding() == binding)
    }
}

/// A human undoing part of a stage's plan: once the stage has made
/// `after_steps` steps of progress, that progress is lost and the robot
/// reports an error, for one step if `reversible`, for good otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub stage: Stage,
    pub after_steps: u32,
    pub reversible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Plans chained with if-else checks and no retry.
    Baseline,
    /// The compiled mission tree.
    Bt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioScript {
    /// Plan steps each stage needs.
    pub steps_per_stage: u32,
    /// Tick budget of the whole mission.
    pub t_task_max: u32,
    pub theta: u32,
    pub undisturbed_trials: usize,
    /// Disturbed trials per stage.
    pub disturbed_per_stage: usize,
    pub reversible: bool,
    pub seed: u64,
}

impl Default for ScenarioScript {
    fn default() -> Self {
        ScenarioScript {
            steps_per_stage: 4,
            t_task_max: 60,
            theta: 1,
            undisturbed_trials: 10,
            disturbed_per_stage: 5,
            reversible: true,
            seed: 0,
        }
    }
}

impl ScenarioScript {
    /// Undisturbed trials first, then disturbed ones cycling through the
    /// stages. Disturbance points are drawn from the script's seed.
    pub fn trials(&self) -> Vec<Option<Perturbation>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = vec![None; self.undisturbed_trials];
        for _ in 0..self.disturbed_per_stage {
            for stage in Stage::ALL {
                out.push(Some(Perturbation {
                    stage,
                    after_steps: rng.random_range(1..self.steps_per_stage.max(2)),
                    reversible: self.reversible,
                }));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct KeyDoorWorld {
    alphabet: Arc<Alphabet>,
    steps_per_stage: u32,
    progress: [u32; 3],
    key_stacked: bool,
    key_door_passive: bool,
    prize_passive: bool,
    error: bool,
    error_sticky: bool,
    perturbation: Option<Perturbation>,
    fired: bool,
}

impl KeyDoorWorld {
    pub fn new(
        alphabet: Arc<Alphabet>,
        steps_per_stage: u32,
        perturbation: Option<Perturbation>,
    ) -> Self {
        KeyDoorWorld {
            alphabet,
            steps_per_stage,
            progress: [0; 3],
            key_stacked: false,
            key_door_passive: false,
            prize_passive: false,
            error: false,
            error_sticky: false,
            perturbation,
            fired: false,
        }
    }

    pub fn disturbed(&self) -> bool {
        self.fired
    }

    fn stage_done(&self, stage: Stage) -> bool {
        match stage {
            Stage::Key => self.key_stacked,
            Stage::Door => self.key_door_passive,
            Stage::Prize => self.prize_passive,
        }
    }

    /// One plan step of `stage`. A robot in error cannot act.
    fn advance(&mut self, stage: Stage) {
        if self.error || self.stage_done(stage) {
            return;
        }
        let i = stage as usize;
        self.progress[i] += 1;
        if let Some(p) = self.perturbation {
            if !self.fired && p.stage == stage && self.progress[i] >= p.after_steps {
                self.fired = true;
                self.progress[i] = 0;
                self.error = true;
                self.error_sticky = !p.reversible;
                return;
            }
        }
        if self.progress[i] >= self.steps_per_stage {
            match stage {
                Stage::Key => self.key_stacked = true,
                Stage::Door => self.key_door_passive = true,
                Stage::Prize => self.prize_passive = true,
            }
        }
    }
}

impl Environment for KeyDoorWorld {
    fn observe(&self) -> StateVector {
        let values = vec![
            !self.error,
            self.key_stacked,
            true,
            !self.key_stacked,
            self.key_door_passive,
            self.prize_passive,
            !self.prize_passive,
        ];
        StateVector::from_values(self.alphabet.clone(), values).expect("key-door alphabet")
    }

    fn apply(&mut self, commands: &[Command]) -> Result<(), BtError> {
        if self.error && !self.error_sticky {
            self.error = false;
            return Ok(());
        }
        for cmd in commands {
            let stage = Stage::from_binding(&cmd.binding)
                .ok_or_else(|| BtError::Environment(format!("unknown plan `{}`", cmd.binding)))?;
            self.advance(stage);
        }
        Ok(())
    }
}

/// Plan runner that asks for the next scripted step every tick.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedPlan;

impl Planner for ScriptedPlan {
    fn next_command(&mut self, _obs: &Observation<'_>) -> usize {
        0
    }

    fn box_clone(&self) -> Box<dyn Planner> {
        Box::new(*self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub perturbation: Option<Perturbation>,
    pub success: bool,
    pub ticks: usize,
    pub resets: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyDoorReport {
    pub mode: Mode,
    pub trials: Vec<TrialResult>,
    pub undisturbed: usize,
    pub undisturbed_successes: usize,
    pub disturbed: usize,
    pub disturbed_successes: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KeyDoorError {
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Bt(#[from] BtError),
}

fn baseline_trial(world: &mut KeyDoorWorld, budget: u32) -> Result<(bool, usize), BtError> {
    let mut ticks = 0usize;
    let ok = |w: &KeyDoorWorld, name: &str| w.observe().get(name).unwrap_or(false);
    for (stage, pre, post) in [
        (Stage::Key, "IsKeyDoor", "KeyStacked"),
        (Stage::Door, "KeyStacked", "KeyDoorPassive"),
        (Stage::Prize, "PrizeVisible", "PrizePassive"),
    ] {
        if !ok(world, pre) {
            return Ok((false, ticks));
        }
        while !ok(world, post) {
            if !ok(world, "NoErr") || ticks as u32 >= budget {
                return Ok((false, ticks));
            }
            world.apply(&[Command {
                node: 0,
                binding: stage.binding().into(),
                task: format!("{stage:?}"),
                key: 0,
                choice: 0,
            }])?;
            ticks += 1;
        }
    }
    Ok((true, ticks))
}

/// Runs every trial of `script` in `mode`.
pub fn run_keydoor(script: &ScenarioScript, mode: Mode) -> Result<KeyDoorReport, KeyDoorError> {
    let file = parse_mission_file(KD_MISSION)?;
    let alphabet = Arc::new(file.alphabet.clone());
    let config = MissionConfig::new(script.t_task_max, script.theta, file.alphabet.clone())?;
    let mut template = compile_mission(&file.mission, &config)?;
    let planners: std::collections::HashMap<String, Box<dyn Planner>> = Stage::ALL
        .iter()
        .map(|s| {
            (
                s.binding().to_string(),
                Box::new(ScriptedPlan) as Box<dyn Planner>,
            )
        })
        .collect();
    bind_actions(&mut template, &file.alphabet, &planners)?;

    let mut trials = Vec::new();
    for (i, perturbation) in script.trials().into_iter().enumerate() {
        let mut world = KeyDoorWorld::new(alphabet.clone(), script.steps_per_stage, perturbation);
        let (success, ticks, resets) = match mode {
            Mode::Baseline => {
                let (ok, ticks) = baseline_trial(&mut world, script.t_task_max)?;
                (ok, ticks, 0)
            }
            Mode::Bt => {
                let mut tree = template.clone();
                let ep = run_to_completion(&mut tree, &mut world, script.t_task_max as usize + 1)?;
                (
                    ep.status == Status::Success,
                    ep.trace.len(),
                    ep.log.total_resets(),
                )
            }
        };
        trials.push(TrialResult {
            trial: i,
            perturbation,
            success,
            ticks,
            resets,
        });
    }
    let count = |disturbed: bool, success: bool| {
        trials
            .iter()
            .filter(|t| t.perturbation.is_some() == disturbed && (!success || t.success))
            .count()
    };
    Ok(KeyDoorReport {
        mode,
        undisturbed: count(false, false),
        undisturbed_successes: count(false, true),
        disturbed: count(true, false),
        disturbed_successes: count(true, true),
        trials,
    })
}
