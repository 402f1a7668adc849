//! Bounded checks that successful tree executions satisfy their formula.
//!
//! The checker runs a tree on every proposition stream up to a length
//! bound. Action propositions are not enumerated freely: they follow the
//! action's postcondition, exactly as in a live run.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bt::{
    BehaviorTree, BtError, BtNode, ConditionRole, NodeKind, Observation, Planner, Status,
};
use crate::compiler::{compile_mission, CompileError};
use crate::ltlf::{Alphabet, CompiledFormula, Formula, LtlfError, StateVector, Trace};
use crate::mission::{expand_mission, MissionConfig, MissionExpr, PpaTaskSpec};

/// Largest number of traces the enumerators will visit.
pub const MAX_ENUMERATED: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("enumerating {alphabet} atoms up to length {bound} is too large")]
    BoundTooLarge { alphabet: usize, bound: usize },
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
    #[error(transparent)]
    Bt(#[from] BtError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// True unless the run succeeded on a trace that violates `formula`.
/// Failed runs may or may not satisfy it.
pub fn audit_trace(formula: &Formula, trace: &Trace, status: Status) -> Result<bool, LtlfError> {
    if status != Status::Success {
        return Ok(true);
    }
    crate::ltlf::evaluate(formula, trace, 0)
}

fn traces_up_to(alphabet_len: usize, max_len: usize) -> u64 {
    let per_state = 1u64 << alphabet_len;
    (1..=max_len as u32)
        .map(|l| per_state.saturating_pow(l))
        .fold(0u64, u64::saturating_add)
}

/// Every trace of length 1..=`max_len` over `alphabet` that satisfies
/// `formula`, shortest first.
pub fn enumerate_language(
    formula: &Formula,
    alphabet: &Arc<Alphabet>,
    max_len: usize,
) -> Result<Vec<Trace>, VerifyError> {
    let too_large = VerifyError::BoundTooLarge {
        alphabet: alphabet.len(),
        bound: max_len,
    };
    if alphabet.len() > 5 || max_len > 6 || traces_up_to(alphabet.len(), max_len) > MAX_ENUMERATED {
        return Err(too_large);
    }
    let compiled = CompiledFormula::new(formula, alphabet)?;
    let per_state = 1u64 << alphabet.len();
    let mut out = Vec::new();
    for len in 1..=max_len {
        let total = per_state.pow(len as u32);
        for code in 0..total {
            let mut rest = code;
            let states = (0..len)
                .map(|_| {
                    let s = StateVector::from_bits(alphabet.clone(), rest % per_state);
                    rest /= per_state;
                    s
                })
                .collect();
            let trace = Trace::new(states, max_len)?;
            if compiled.eval_at(&trace, 0)? {
                out.push(trace);
            }
        }
    }
    Ok(out)
}

/// Outcome of a bounded inclusion check.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InclusionReport {
    pub bound: usize,
    pub alphabet_size: usize,
    /// Proposition streams explored, counting each prefix once.
    pub n_runs: u64,
    pub n_bt_success_traces: u64,
    pub n_violations: u64,
    pub counterexamples: Vec<Trace>,
}

impl InclusionReport {
    fn merge(mut self, other: InclusionReport) -> InclusionReport {
        self.n_runs += other.n_runs;
        self.n_bt_success_traces += other.n_bt_success_traces;
        self.n_violations += other.n_violations;
        self.counterexamples.extend(other.counterexamples);
        self
    }

    /// One row per counterexample state: `trace,step,true atoms`.
    pub fn counterexamples_csv(&self) -> String {
        let mut out = String::from("trace,step,atoms\n");
        for (i, trace) in self.counterexamples.iter().enumerate() {
            for (t, state) in trace.states().iter().enumerate() {
                out.push_str(&format!("{i},{t},{}\n", state.true_atoms().join(" ")));
            }
        }
        out
    }
}

/// Planner for scripted worlds, where commands have no effect.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdlePlanner;

impl Planner for IdlePlanner {
    fn next_command(&mut self, _obs: &Observation<'_>) -> usize {
        0
    }

    fn box_clone(&self) -> Box<dyn Planner> {
        Box::new(*self)
    }
}

/// Binds every action of `tree` to [`IdlePlanner`].
pub fn bind_idle(tree: &mut BehaviorTree) {
    for binding in tree.action_bindings() {
        tree.bind(&binding, &IdlePlanner);
    }
}

struct Search<'a> {
    formula: &'a CompiledFormula,
    alphabet: &'a Arc<Alphabet>,
    bound: usize,
    per_state: u64,
}

impl Search<'_> {
    /// Ticks `tree` on `observed` after the prefix `trace`, then branches over
    /// every next state while the root is still Running. Mirrors the
    /// episode loop against a scripted environment: a tree still Running at
    /// the bound counts as a timeout, not a success.
    fn visit(
        &self,
        mut tree: BehaviorTree,
        trace: &mut Vec<StateVector>,
        observed: StateVector,
        report: &mut InclusionReport,
    ) -> Result<(), VerifyError> {
        trace.push(tree.augment(&observed)?);
        let key = trace.len() as u64 - 1;
        report.n_runs += 1;
        match tree.tick(&observed, key)?.status {
            Status::Success => {
                report.n_bt_success_traces += 1;
                let t = Trace::new(trace.clone(), self.bound)?;
                if !self.formula.eval_at(&t, 0)? {
                    report.n_violations += 1;
                    report.counterexamples.push(t);
                }
            }
            Status::Running if trace.len() < self.bound => {
                for bits in 0..self.per_state {
                    let next = StateVector::from_bits(self.alphabet.clone(), bits);
                    self.visit(tree.clone(), trace, next, report)?;
                }
            }
            _ => {}
        }
        trace.pop();
        Ok(())
    }
}

/// Runs `tree` on every stream of environment states of length up to
/// `bound` and checks each successful trace against `formula`, which ranges
/// over the tree's trace alphabet. Actions must already be bound; their
/// commands are ignored.
pub fn check_inclusion(
    tree: &BehaviorTree,
    formula: &Formula,
    bound: usize,
) -> Result<InclusionReport, VerifyError> {
    let alphabet = tree.alphabet().clone();
    if bound == 0 || traces_up_to(alphabet.len(), bound) > MAX_ENUMERATED * 16 {
        return Err(VerifyError::BoundTooLarge {
            alphabet: alphabet.len(),
            bound,
        });
    }
    if let Some(binding) = tree.unbound_actions().into_iter().next() {
        return Err(BtError::UnboundAction(binding).into());
    }
    let compiled = CompiledFormula::new(formula, tree.trace_alphabet())?;
    let search = Search {
        formula: &compiled,
        alphabet: &alphabet,
        bound,
        per_state: 1u64 << alphabet.len(),
    };
    let mut fresh = tree.clone();
    fresh.restart();
    let shards: Vec<InclusionReport> = (0..search.per_state)
        .into_par_iter()
        .map(|bits| {
            let mut report = InclusionReport::default();
            let first = StateVector::from_bits(alphabet.clone(), bits);
            search.visit(fresh.clone(), &mut Vec::new(), first, &mut report)?;
            Ok(report)
        })
        .collect::<Result<_, VerifyError>>()?;
    let mut report = shards.into_iter().fold(
        InclusionReport {
            bound,
            alphabet_size: alphabet.len(),
            ..Default::default()
        },
        InclusionReport::merge,
    );
    report.counterexamples.sort_by_key(|t| t.len());
    Ok(report)
}

/// Compiles `expr`, binds idle planners and checks it against its own
/// expansion.
pub fn check_mission(
    expr: &MissionExpr,
    config: &MissionConfig,
    bound: usize,
) -> Result<InclusionReport, VerifyError> {
    let mut tree = compile_mission(expr, config)?;
    bind_idle(&mut tree);
    let formula = expand_mission(expr).map_err(CompileError::from)?;
    check_inclusion(&tree, &formula, bound)
}

/// Copy of `root` without the condition nodes that have `role`. Control
/// nodes left with a single child keep it.
pub fn remove_conditions(root: &BtNode, role: ConditionRole) -> BtNode {
    fn keep(node: &BtNode, role: ConditionRole) -> bool {
        !matches!(&node.kind, NodeKind::Condition { role: r, .. } if *r == role)
    }
    fn strip(children: &[BtNode], role: ConditionRole) -> Vec<BtNode> {
        let kept: Vec<BtNode> = children
            .iter()
            .filter(|c| keep(c, role))
            .map(|c| remove_conditions(c, role))
            .collect();
        if kept.is_empty() {
            children.iter().take(1).cloned().collect()
        } else {
            kept
        }
    }
    let kind = match &root.kind {
        NodeKind::Sequence { children } => NodeKind::Sequence {
            children: strip(children, role),
        },
        NodeKind::Selector { children } => NodeKind::Selector {
            children: strip(children, role),
        },
        NodeKind::Parallel { children } => NodeKind::Parallel {
            children: strip(children, role),
        },
        NodeKind::Decorator { kind, child } => NodeKind::Decorator {
            kind: kind.clone(),
            child: Box::new(remove_conditions(child, role)),
        },
        other => other.clone(),
    };
    BtNode { id: root.id, kind }
}

/// Atoms shared by every fuzzed mission.
pub const FUZZ_ATOMS: [&str; 3] = ["p", "q", "r"];

fn random_condition<R: Rng>(rng: &mut R, allow_true: bool) -> Formula {
    let atom = |rng: &mut R| Formula::atom(*FUZZ_ATOMS.choose(rng).unwrap());
    let literal = |rng: &mut R| {
        let a = atom(rng);
        if rng.random_bool(0.3) {
            Formula::not(a)
        } else {
            a
        }
    };
    match rng.random_range(0..if allow_true { 5 } else { 4 }) {
        0 | 1 => literal(rng),
        2 => Formula::and(literal(rng), literal(rng)),
        3 => Formula::or(literal(rng), literal(rng)),
        _ => Formula::tt(),
    }
}

fn random_task<R: Rng>(rng: &mut R, index: usize) -> PpaTaskSpec {
    let name = format!("t{index}");
    PpaTaskSpec::new(
        &name,
        random_condition(rng, false),
        random_condition(rng, true),
        random_condition(rng, true),
        random_condition(rng, true),
        &name,
    )
    .expect("generated task is valid")
}

fn random_expr<R: Rng>(rng: &mut R, tasks: &[PpaTaskSpec]) -> MissionExpr {
    let expr = if tasks.len() == 1 {
        MissionExpr::task(tasks[0].clone())
    } else {
        let split = rng.random_range(1..tasks.len());
        let lhs = random_expr(rng, &tasks[..split]);
        let rhs = random_expr(rng, &tasks[split..]);
        match rng.random_range(0..3) {
            0 => MissionExpr::or(lhs, rhs),
            1 => MissionExpr::and(lhs, rhs),
            _ => MissionExpr::until(lhs, rhs),
        }
    };
    if rng.random_bool(0.35) {
        MissionExpr::finally(expr)
    } else {
        expr
    }
}

/// Random mission of 1..=`max_tasks` tasks whose conditions range over
/// [`FUZZ_ATOMS`].
pub fn random_mission<R: Rng>(rng: &mut R, max_tasks: usize) -> MissionExpr {
    let n = rng.random_range(1..=max_tasks.max(1));
    let tasks: Vec<PpaTaskSpec> = (0..n).map(|i| random_task(rng, i)).collect();
    random_expr(rng, &tasks)
}

pub fn fuzz_alphabet() -> Alphabet {
    Alphabet::new(FUZZ_ATOMS).expect("valid atoms")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::compile_mission_tree;
    use crate::ltlf::parse_formula;
    use crate::mission::parse_mission;

    fn atoms(names: &[&str]) -> Arc<Alphabet> {
        Arc::new(Alphabet::new(names.iter().copied()).unwrap())
    }

    #[test]
    fn audit_only_blames_successes() {
        let a = atoms(&["a"]);
        let f = Formula::atom("a");
        let yes = Trace::from_states(vec![StateVector::from_bits(a.clone(), 1)]).unwrap();
        let no = Trace::from_states(vec![StateVector::from_bits(a, 0)]).unwrap();
        assert!(audit_trace(&f, &yes, Status::Success).unwrap());
        assert!(!audit_trace(&f, &no, Status::Success).unwrap());
        assert!(audit_trace(&f, &yes, Status::Failure).unwrap());
        assert!(audit_trace(&f, &no, Status::Failure).unwrap());
    }

    #[test]
    fn language_of_an_atom() {
        let lang = enumerate_language(&Formula::atom("a"), &atoms(&["a"]), 1).unwrap();
        assert_eq!(lang.len(), 1);
        assert!(lang[0].states()[0].get("a").unwrap());
    }

    #[test]
    fn language_of_globally() {
        let lang = enumerate_language(&parse_formula("G a").unwrap(), &atoms(&["a"]), 2).unwrap();
        let lens: Vec<usize> = lang.iter().map(Trace::len).collect();
        assert_eq!(lens, [1, 2]);
        assert!(lang
            .iter()
            .all(|t| t.states().iter().all(|s| s.get("a").unwrap())));
    }

    #[test]
    fn enumeration_guard() {
        let f = Formula::atom("a");
        assert!(matches!(
            enumerate_language(&f, &atoms(&["a", "b", "c", "d", "e", "f"]), 2),
            Err(VerifyError::BoundTooLarge { .. })
        ));
        assert!(matches!(
            enumerate_language(&f, &atoms(&["a"]), 7),
            Err(VerifyError::BoundTooLarge { .. })
        ));
    }

    fn abc() -> Alphabet {
        Alphabet::new(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn single_task_is_sound() {
        let expr = parse_mission("task(t, post=a, pre=b, gc=!c, tc=b)", &abc()).unwrap();
        let cfg = MissionConfig::new(4, 0, abc()).unwrap();
        let report = check_mission(&expr, &cfg, 4).unwrap();
        assert!(report.n_bt_success_traces > 0);
        assert_eq!(
            report.n_violations,
            0,
            "{:?}",
            report.counterexamples.first()
        );
    }

    #[test]
    fn until_of_finally_tasks_is_sound() {
        let expr = parse_mission(
            "U (F task(x, post=a, gc=!c)) (F task(y, post=b, pre=a, gc=!c))",
            &abc(),
        )
        .unwrap();
        let cfg = MissionConfig::new(5, 1, abc()).unwrap();
        let report = check_mission(&expr, &cfg, 5).unwrap();
        assert!(report.n_bt_success_traces > 0);
        assert_eq!(
            report.n_violations,
            0,
            "{:?}",
            report.counterexamples.first()
        );
    }

    #[test]
    fn dropping_global_constraints_is_caught() {
        let expr = parse_mission("task(t, post=a, gc=!c)", &abc()).unwrap();
        let cfg = MissionConfig::new(4, 0, abc()).unwrap();
        let root = compile_mission_tree(&expr, &cfg).unwrap();
        let mutated = remove_conditions(&root, ConditionRole::GlobalConstraint);
        assert!(mutated.size() < root.size());
        let mut tree = BehaviorTree::new(mutated, Arc::new(abc())).unwrap();
        bind_idle(&mut tree);
        let report = check_inclusion(&tree, &expand_mission(&expr).unwrap(), 4).unwrap();
        assert!(report.n_violations > 0);
        assert_eq!(report.n_violations as usize, report.counterexamples.len());
    }

    #[test]
    fn fuzzed_missions_compile() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let cfg = MissionConfig::new(5, 1, fuzz_alphabet()).unwrap();
        for _ in 0..50 {
            let m = random_mission(&mut rng, 3);
            assert!(m.tasks().len() <= 3);
            compile_mission(&m, &cfg).unwrap();
        }
    }
}
