use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Blackboard, BtError, BtNode, DecoratorKind, NodeId, NodeKind, Status};
use crate::ltlf::{Alphabet, LtlfError, Prop, StateVector};

/// What a planner sees when its action node is ticked.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub state: &'a StateVector,
    /// Environment-specific state index (a grid cell, a script position).
    pub key: u64,
    pub tick: u64,
    /// Ticks this action has already run in the current attempt.
    pub elapsed: u32,
}

/// Source of commands for an action node.
pub trait Planner: Send + Sync {
    /// Index of the environment command to issue this tick.
    fn next_command(&mut self, obs: &Observation<'_>) -> usize;

    /// Forgets plan progress; called when a Finally node resets the subtree.
    fn reset(&mut self) {}

    fn box_clone(&self) -> Box<dyn Planner>;
}

impl Clone for Box<dyn Planner> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// A command issued by an action node, applied after the tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub node: NodeId,
    pub binding: String,
    pub task: String,
    pub key: u64,
    pub choice: usize,
}

/// Executable side of an action node.
///
/// Succeeds iff the postcondition holds in the observed state and the
/// action's clock is within `t_task_max`; otherwise issues the planner's
/// command and reports Running while time remains, Failure after.
#[derive(Clone)]
pub struct ActionRunner {
    pub binding: String,
    pub postcondition: Prop,
    pub t_task_max: u32,
    pub planner: Box<dyn Planner>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetEvent {
    pub node: NodeId,
    /// Resets issued by `node` so far, including this one.
    pub count: u32,
}

/// Everything that happened in one root tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub status: Status,
    /// Status of every node ticked, in completion order.
    pub nodes: Vec<(NodeId, Status)>,
    pub commands: Vec<Command>,
    pub resets: Vec<ResetEvent>,
}

impl TickRecord {
    pub fn status_of(&self, id: NodeId) -> Option<Status> {
        self.nodes.iter().find(|(n, _)| *n == id).map(|(_, s)| *s)
    }
}

#[derive(Debug)]
struct ActionInfo {
    binding: String,
    task: String,
    postcondition: Prop,
}

/// A tree bound to an alphabet, with its planners and blackboard.
///
/// Cloning is cheap for the immutable parts and deep for the mutable ones,
/// which lets exhaustive search fork a running tree.
#[derive(Clone)]
pub struct BehaviorTree {
    root: Arc<BtNode>,
    alphabet: Arc<Alphabet>,
    trace_alphabet: Arc<Alphabet>,
    conditions: Arc<HashMap<NodeId, Prop>>,
    actions: Arc<HashMap<NodeId, ActionInfo>>,
    /// Postcondition of each action proposition, in trace-alphabet order.
    action_atoms: Arc<Vec<Prop>>,
    action_budget: u32,
    runners: HashMap<NodeId, ActionRunner>,
    blackboard: Blackboard,
    ticks: u64,
    halted: Option<Status>,
}

impl BehaviorTree {
    /// Resolves every condition against `alphabet`. Action nodes start
    /// unbound; their budget is the mission root's, or unlimited without one.
    pub fn new(root: BtNode, alphabet: Arc<Alphabet>) -> Result<Self, BtError> {
        root.validate()?;
        let mut conditions = HashMap::new();
        let mut actions = HashMap::new();
        let mut atom_names: Vec<String> = Vec::new();
        let mut action_atoms = Vec::new();
        let mut action_budget = u32::MAX;
        for node in root.preorder() {
            match &node.kind {
                NodeKind::Condition { formula, .. } => {
                    conditions.insert(node.id, Prop::compile(formula, &alphabet)?);
                }
                NodeKind::Action {
                    binding,
                    task,
                    postcondition,
                } => {
                    let post = Prop::compile(postcondition, &alphabet)?;
                    let atom = format!("{}{task}", crate::mission::ACTION_PREFIX);
                    if !atom_names.contains(&atom) {
                        atom_names.push(atom);
                        action_atoms.push(post.clone());
                    }
                    actions.insert(
                        node.id,
                        ActionInfo {
                            binding: binding.clone(),
                            task: task.clone(),
                            postcondition: post,
                        },
                    );
                }
                NodeKind::Decorator {
                    kind: DecoratorKind::MissionRoot { t_task_max },
                    ..
                } => action_budget = action_budget.min(*t_task_max),
                _ => {}
            }
        }
        let trace_alphabet = Arc::new(alphabet.extended(atom_names)?);
        Ok(BehaviorTree {
            root: Arc::new(root),
            alphabet,
            trace_alphabet,
            conditions: Arc::new(conditions),
            actions: Arc::new(actions),
            action_atoms: Arc::new(action_atoms),
            action_budget,
            runners: HashMap::new(),
            blackboard: Blackboard::new(),
            ticks: 0,
            halted: None,
        })
    }

    /// Overrides the per-action tick budget.
    pub fn with_action_budget(mut self, t_task_max: u32) -> Self {
        self.action_budget = t_task_max;
        for runner in self.runners.values_mut() {
            runner.t_task_max = t_task_max;
        }
        self
    }

    /// Gives every action node with `binding` its own copy of `planner`.
    /// Returns how many nodes were bound.
    pub fn bind(&mut self, binding: &str, planner: &dyn Planner) -> usize {
        let mut bound = 0;
        for (id, info) in self.actions.iter() {
            if info.binding == binding {
                self.runners.insert(
                    *id,
                    ActionRunner {
                        binding: binding.to_string(),
                        postcondition: info.postcondition.clone(),
                        t_task_max: self.action_budget,
                        planner: planner.box_clone(),
                    },
                );
                bound += 1;
            }
        }
        bound
    }

    /// Bindings of action nodes that have no runner yet, sorted.
    pub fn unbound_actions(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .actions
            .iter()
            .filter(|(id, _)| !self.runners.contains_key(id))
            .map(|(_, info)| info.binding.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// All action bindings of the tree, sorted.
    pub fn action_bindings(&self) -> Vec<String> {
        let mut out: Vec<String> = self.actions.values().map(|a| a.binding.clone()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn root(&self) -> &BtNode {
        &self.root
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    /// Environment alphabet followed by one action proposition per task.
    pub fn trace_alphabet(&self) -> &Arc<Alphabet> {
        &self.trace_alphabet
    }

    pub fn blackboard(&self) -> &Blackboard {
        &self.blackboard
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Final status once the root has returned Success or Failure.
    pub fn halted(&self) -> Option<Status> {
        self.halted
    }

    /// Clears all memory so the tree can run a fresh episode.
    pub fn restart(&mut self) {
        self.blackboard.clear();
        self.ticks = 0;
        self.halted = None;
        for runner in self.runners.values_mut() {
            runner.planner.reset();
        }
    }

    /// `state` extended with the action propositions. An action proposition
    /// holds exactly when its task's postcondition holds.
    pub fn augment(&self, state: &StateVector) -> Result<StateVector, BtError> {
        self.check_alphabet(state)?;
        let mut values = state.values().to_vec();
        values.extend(self.action_atoms.iter().map(|p| p.eval(state.values())));
        Ok(StateVector::from_values(
            self.trace_alphabet.clone(),
            values,
        )?)
    }

    fn check_alphabet(&self, state: &StateVector) -> Result<(), BtError> {
        if state.values().len() != self.alphabet.len() {
            return Err(LtlfError::AlphabetMismatch.into());
        }
        Ok(())
    }

    /// Ticks the root once against `state`. After the root has halted this
    /// returns the final status and leaves all memory untouched.
    pub fn tick(&mut self, state: &StateVector, key: u64) -> Result<TickRecord, BtError> {
        if let Some(status) = self.halted {
            return Ok(TickRecord {
                tick: self.ticks,
                status,
                nodes: Vec::new(),
                commands: Vec::new(),
                resets: Vec::new(),
            });
        }
        self.check_alphabet(state)?;
        let root = self.root.clone();
        let conditions = self.conditions.clone();
        let actions = self.actions.clone();
        let mut cx = Cx {
            state,
            key,
            tick: self.ticks,
            blackboard: &mut self.blackboard,
            conditions: &conditions,
            actions: &actions,
            runners: &mut self.runners,
            nodes: Vec::new(),
            commands: Vec::new(),
            resets: Vec::new(),
        };
        let status = tick_node(&root, &mut cx)?;
        let record = TickRecord {
            tick: self.ticks,
            status,
            nodes: cx.nodes,
            commands: cx.commands,
            resets: cx.resets,
        };
        self.ticks += 1;
        if status != Status::Running {
            self.halted = Some(status);
        }
        Ok(record)
    }
}

struct Cx<'a> {
    state: &'a StateVector,
    key: u64,
    tick: u64,
    blackboard: &'a mut Blackboard,
    conditions: &'a HashMap<NodeId, Prop>,
    actions: &'a HashMap<NodeId, ActionInfo>,
    runners: &'a mut HashMap<NodeId, ActionRunner>,
    nodes: Vec<(NodeId, Status)>,
    commands: Vec<Command>,
    resets: Vec<ResetEvent>,
}

fn from_bool(ok: bool) -> Status {
    if ok {
        Status::Success
    } else {
        Status::Failure
    }
}

fn tick_node(node: &BtNode, cx: &mut Cx<'_>) -> Result<Status, BtError> {
    let status = match &node.kind {
        NodeKind::Sequence { children } => {
            let mut out = Status::Success;
            for child in children {
                let s = tick_node(child, cx)?;
                if s != Status::Success {
                    out = s;
                    break;
                }
            }
            out
        }
        NodeKind::Selector { children } => {
            let mut out = Status::Failure;
            for child in children {
                let s = tick_node(child, cx)?;
                if s != Status::Failure {
                    out = s;
                    break;
                }
            }
            out
        }
        NodeKind::Parallel { children } => {
            let mut statuses = Vec::with_capacity(children.len());
            for child in children {
                statuses.push(tick_node(child, cx)?);
            }
            if statuses.contains(&Status::Failure) {
                Status::Failure
            } else if statuses.iter().all(|s| *s == Status::Success) {
                Status::Success
            } else {
                Status::Running
            }
        }
        NodeKind::Condition { .. } => {
            let prop = &cx.conditions[&node.id];
            from_bool(prop.eval(cx.state.values()))
        }
        NodeKind::Action { binding, .. } => tick_action(node.id, binding, cx)?,
        NodeKind::Decorator { kind, child } => tick_decorator(node.id, kind, child, cx)?,
    };
    cx.nodes.push((node.id, status));
    Ok(status)
}

fn tick_action(id: NodeId, binding: &str, cx: &mut Cx<'_>) -> Result<Status, BtError> {
    let runner = cx
        .runners
        .get_mut(&id)
        .ok_or_else(|| BtError::UnboundAction(binding.to_string()))?;
    let memory = cx.blackboard.memory_mut(id);
    let elapsed = memory.elapsed;
    memory.elapsed = elapsed.saturating_add(1);
    let post = runner.postcondition.eval(cx.state.values());
    if post && elapsed <= runner.t_task_max {
        return Ok(Status::Success);
    }
    if !post && elapsed < runner.t_task_max {
        let choice = runner.planner.next_command(&Observation {
            state: cx.state,
            key: cx.key,
            tick: cx.tick,
            elapsed,
        });
        cx.commands.push(Command {
            node: id,
            binding: binding.to_string(),
            task: cx.actions[&id].task.clone(),
            key: cx.key,
            choice,
        });
        return Ok(Status::Running);
    }
    Ok(Status::Failure)
}

fn tick_decorator(
    id: NodeId,
    kind: &DecoratorKind,
    child: &BtNode,
    cx: &mut Cx<'_>,
) -> Result<Status, BtError> {
    Ok(match kind {
        DecoratorKind::Negation => match tick_node(child, cx)? {
            Status::Success => Status::Failure,
            Status::Failure => Status::Success,
            Status::Running => Status::Running,
        },
        DecoratorKind::TaskBoundary { .. } => tick_node(child, cx)?,
        DecoratorKind::PreconditionLatch => {
            if cx.blackboard.memory(id).latched {
                return Ok(Status::Success);
            }
            let s = tick_node(child, cx)?;
            if s == Status::Success {
                cx.blackboard.memory_mut(id).latched = true;
            }
            s
        }
        DecoratorKind::FinallyReset { theta } => {
            if cx.blackboard.memory(id).latched {
                return Ok(Status::Success);
            }
            match tick_node(child, cx)? {
                Status::Success => {
                    cx.blackboard.memory_mut(id).latched = true;
                    Status::Success
                }
                Status::Running => Status::Running,
                Status::Failure => {
                    let resets = cx.blackboard.memory(id).resets;
                    if resets < *theta {
                        for action in reset_descendant_decorators(child, cx.blackboard) {
                            if let Some(runner) = cx.runners.get_mut(&action) {
                                runner.planner.reset();
                            }
                        }
                        cx.blackboard.memory_mut(id).resets = resets + 1;
                        cx.resets.push(ResetEvent {
                            node: id,
                            count: resets + 1,
                        });
                        Status::Running
                    } else {
                        Status::Failure
                    }
                }
            }
        }
        DecoratorKind::MissionRoot { t_task_max } => {
            let s = tick_node(child, cx)?;
            let memory = cx.blackboard.memory_mut(id);
            memory.elapsed = memory.elapsed.saturating_add(1);
            if s == Status::Running && memory.elapsed >= *t_task_max {
                Status::Failure
            } else {
                s
            }
        }
    })
}

/// Clears the memory of every node in the subtree rooted at `node`:
/// precondition latches, Finally latches and counters, and action clocks.
/// Returns the action nodes whose planners should forget their progress.
pub fn reset_descendant_decorators(node: &BtNode, blackboard: &mut Blackboard) -> Vec<NodeId> {
    let mut actions = Vec::new();
    for n in node.preorder() {
        blackboard.forget(n.id);
        if matches!(n.kind, NodeKind::Action { .. }) {
            actions.push(n.id);
        }
    }
    actions
}
