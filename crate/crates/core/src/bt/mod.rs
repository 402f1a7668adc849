//! Behavior trees: node types, a tick interpreter and an episode runner.
//!
//! Control nodes are reactive: every tick re-enters them from the leftmost
//! child. All memory (latches, reset counters, action clocks) lives in the
//! [`Blackboard`], keyed by node id.

mod dot;
mod engine;
mod run;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltlf::{Formula, LtlfError};

pub use dot::export_dot;
pub use engine::{
    reset_descendant_decorators, ActionRunner, BehaviorTree, Command, Observation, Planner,
    ResetEvent, TickRecord,
};
pub use run::{run_to_completion, Environment, Episode, EpisodeLog, ScriptedEnv};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Failure,
    Running,
}

/// What a condition node checks, as assigned by the compiler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionRole {
    Postcondition,
    Precondition,
    GlobalConstraint,
    TaskConstraint,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decorator", rename_all = "snake_case")]
pub enum DecoratorKind {
    /// Swaps Success and Failure.
    Negation,
    /// Succeeds for good once its child has succeeded in the current attempt.
    PreconditionLatch,
    /// Latches child success; on child failure resets the subtree, up to
    /// `theta` times, and reports Running.
    FinallyReset { theta: u32 },
    /// Passes its child's status through until `t_task_max` ticks have run.
    MissionRoot { t_task_max: u32 },
    /// Passes its child's status through; marks where a task tree begins.
    TaskBoundary { task: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Sequence {
        children: Vec<BtNode>,
    },
    Selector {
        children: Vec<BtNode>,
    },
    Parallel {
        children: Vec<BtNode>,
    },
    Condition {
        formula: Formula,
        role: ConditionRole,
    },
    /// Runs the planner bound to `binding` until `postcondition` holds.
    Action {
        binding: String,
        task: String,
        postcondition: Formula,
    },
    Decorator {
        #[serde(flatten)]
        kind: DecoratorKind,
        child: Box<BtNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BtNode {
    pub id: NodeId,
    #[serde(flatten)]
    pub kind: NodeKind,
}

impl BtNode {
    pub fn children(&self) -> Vec<&BtNode> {
        match &self.kind {
            NodeKind::Sequence { children }
            | NodeKind::Selector { children }
            | NodeKind::Parallel { children } => children.iter().collect(),
            NodeKind::Decorator { child, .. } => vec![child],
            NodeKind::Condition { .. } | NodeKind::Action { .. } => Vec::new(),
        }
    }

    /// Nodes of the subtree in pre-order.
    pub fn preorder(&self) -> Vec<&BtNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children().into_iter().rev());
        }
        out
    }

    pub fn size(&self) -> usize {
        self.preorder().len()
    }

    pub fn find(&self, id: NodeId) -> Option<&BtNode> {
        self.preorder().into_iter().find(|n| n.id == id)
    }

    /// Ids of the `TaskBoundary` nodes for `task`.
    pub fn task_boundaries(&self, task: &str) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|n| {
                matches!(&n.kind, NodeKind::Decorator { kind: DecoratorKind::TaskBoundary { task: t }, .. } if t == task)
            })
            .map(|n| n.id)
            .collect()
    }

    /// Checks that ids are unique and control nodes have children.
    pub fn validate(&self) -> Result<(), BtError> {
        let mut ids = HashSet::new();
        for node in self.preorder() {
            if !ids.insert(node.id) {
                return Err(BtError::InvalidTree(format!(
                    "duplicate node id {}",
                    node.id
                )));
            }
            match &node.kind {
                NodeKind::Sequence { children }
                | NodeKind::Selector { children }
                | NodeKind::Parallel { children }
                    if children.is_empty() =>
                {
                    return Err(BtError::InvalidTree(format!(
                        "control node {} has no children",
                        node.id
                    )))
                }
                NodeKind::Condition { formula, .. } if !formula.is_propositional() => {
                    return Err(BtError::InvalidTree(format!(
                        "condition node {} holds a temporal formula",
                        node.id
                    )))
                }
                NodeKind::Decorator {
                    kind: DecoratorKind::MissionRoot { t_task_max: 0 },
                    ..
                } => {
                    return Err(BtError::InvalidTree(
                        "mission root needs t_task_max >= 1".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Assigns consecutive ids in construction order.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    next: NodeId,
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder::default()
    }

    fn node(&mut self, kind: NodeKind) -> BtNode {
        let id = self.next;
        self.next += 1;
        BtNode { id, kind }
    }

    pub fn sequence(&mut self, children: Vec<BtNode>) -> BtNode {
        self.node(NodeKind::Sequence { children })
    }

    pub fn selector(&mut self, children: Vec<BtNode>) -> BtNode {
        self.node(NodeKind::Selector { children })
    }

    pub fn parallel(&mut self, children: Vec<BtNode>) -> BtNode {
        self.node(NodeKind::Parallel { children })
    }

    pub fn condition(&mut self, formula: Formula, role: ConditionRole) -> BtNode {
        self.node(NodeKind::Condition { formula, role })
    }

    pub fn action(&mut self, binding: &str, task: &str, postcondition: Formula) -> BtNode {
        self.node(NodeKind::Action {
            binding: binding.into(),
            task: task.into(),
            postcondition,
        })
    }

    pub fn decorator(&mut self, kind: DecoratorKind, child: BtNode) -> BtNode {
        self.node(NodeKind::Decorator {
            kind,
            child: Box::new(child),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BtError {
    #[error("no runner bound for action `{0}`")]
    UnboundAction(String),
    #[error("actions {bindings:?} issued commands in the same tick {tick}")]
    ConcurrentActionConflict { tick: u64, bindings: Vec<String> },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("environment error: {0}")]
    Environment(String),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
}

/// Per-node memory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMemory {
    /// Latched success of a precondition latch or Finally node.
    pub latched: bool,
    /// Resets issued by a Finally node.
    pub resets: u32,
    /// Ticks seen by a mission root or an action node in the current attempt.
    pub elapsed: u32,
}

/// Global key-value store plus per-node memory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Blackboard {
    entries: BTreeMap<String, serde_json::Value>,
    memory: HashMap<NodeId, NodeMemory>,
}

impl Blackboard {
    pub fn new() -> Self {
        Blackboard::default()
    }

    pub fn get(&self, key: &str) -> Option<&serde_json::Value> {
        self.entries.get(key)
    }

    pub fn set(&mut self, key: impl Into<String>, value: serde_json::Value) {
        self.entries.insert(key.into(), value);
    }

    pub fn memory(&self, id: NodeId) -> NodeMemory {
        self.memory.get(&id).copied().unwrap_or_default()
    }

    pub fn memory_mut(&mut self, id: NodeId) -> &mut NodeMemory {
        self.memory.entry(id).or_default()
    }

    pub fn forget(&mut self, id: NodeId) {
        self.memory.remove(&id);
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.memory.clear();
    }
}
