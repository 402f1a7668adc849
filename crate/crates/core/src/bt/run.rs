use std::io::Write;

use serde::{Deserialize, Serialize};

use super::engine::{BehaviorTree, Command, TickRecord};
use super::{BtError, NodeId, Status};
use crate::ltlf::{StateVector, Trace};

/// A world the tree can observe and act on.
pub trait Environment {
    fn observe(&self) -> StateVector;

    /// Index of the current state, handed to planners. Defaults to 0.
    fn state_key(&self) -> u64 {
        0
    }

    /// Advances one step. Called after every Running tick, possibly with no
    /// commands.
    fn apply(&mut self, commands: &[Command]) -> Result<(), BtError>;

    /// Whether more than one command per step is acceptable.
    fn allows_concurrent(&self) -> bool {
        false
    }
}

/// Replays a fixed state sequence and ignores commands. The last state
/// repeats once the script runs out.
#[derive(Debug, Clone)]
pub struct ScriptedEnv {
    states: Vec<StateVector>,
    cursor: usize,
}

impl ScriptedEnv {
    pub fn new(states: Vec<StateVector>) -> Self {
        assert!(!states.is_empty(), "script needs at least one state");
        ScriptedEnv { states, cursor: 0 }
    }

    pub fn position(&self) -> usize {
        self.cursor
    }
}

impl Environment for ScriptedEnv {
    fn observe(&self) -> StateVector {
        self.states[self.cursor.min(self.states.len() - 1)].clone()
    }

    fn state_key(&self) -> u64 {
        self.cursor as u64
    }

    fn apply(&mut self, _commands: &[Command]) -> Result<(), BtError> {
        self.cursor += 1;
        Ok(())
    }

    fn allows_concurrent(&self) -> bool {
        true
    }
}

/// Per-tick records of one episode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub records: Vec<TickRecord>,
}

impl EpisodeLog {
    /// One JSON object per tick.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// First tick on which `node` returned Success.
    pub fn first_success(&self, node: NodeId) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.status_of(node) == Some(Status::Success))
            .map(|r| r.tick)
    }

    pub fn total_resets(&self) -> usize {
        self.records.iter().map(|r| r.resets.len()).sum()
    }

    pub fn commands(&self) -> impl Iterator<Item = &Command> {
        self.records.iter().flat_map(|r| r.commands.iter())
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub status: Status,
    /// Observed states extended with the action propositions, one per tick.
    pub trace: Trace,
    pub log: EpisodeLog,
    /// The trace bound was hit while the root was still Running.
    pub timed_out: bool,
}

/// Observes, ticks and applies commands until the root halts or the trace
/// reaches `max_len` states. A timeout counts as Failure.
pub fn run_to_completion(
    tree: &mut BehaviorTree,
    env: &mut dyn Environment,
    max_len: usize,
) -> Result<Episode, BtError> {
    if max_len == 0 {
        return Err(BtError::InvalidTree(
            "trace bound must be at least 1".into(),
        ));
    }
    let mut states = Vec::new();
    let mut log = EpisodeLog::default();
    let (status, timed_out) = loop {
        let observed = env.observe();
        states.push(tree.augment(&observed)?);
        let record = tree.tick(&observed, env.state_key())?;
        let status = record.status;
        let tick = record.tick;
        let commands = record.commands.clone();
        log.records.push(record);
        if status != Status::Running {
            break (status, false);
        }
        if states.len() >= max_len {
            break (Status::Failure, true);
        }
        if commands.len() > 1 && !env.allows_concurrent() {
            return Err(BtError::ConcurrentActionConflict {
                tick,
                bindings: commands.into_iter().map(|c| c.binding).collect(),
            });
        }
        env.apply(&commands)?;
    };
    Ok(Episode {
        status,
        trace: Trace::new(states, max_len)?,
        log,
        timed_out,
    })
}
