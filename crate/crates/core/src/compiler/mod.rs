//! Mission expressions to behavior trees.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::bt::{
    BehaviorTree, BtError, BtNode, ConditionRole, DecoratorKind, Planner, TreeBuilder,
};
use crate::ltlf::Alphabet;
use crate::mission::{MissionConfig, MissionError, MissionExpr, PpaTaskSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error(transparent)]
    Bt(#[from] BtError),
    #[error("no planner supplied for action `{0}`")]
    UnboundAction(String),
    #[error("tree alphabet {tree:?} differs from environment alphabet {env:?}")]
    AlphabetMismatch { tree: Vec<String>, env: Vec<String> },
}

/// Tree of a single task:
///
/// ```text
/// ?
/// ├── ⇉ [gc, post]
/// └── ⇉
///     ├── ⇉ [gc, latch(pre)]
///     └── → [tc, → [action, gc]]
/// ```
///
/// The first branch succeeds when the task is already done; the second
/// runs the action while the constraints hold. 14 nodes.
pub fn compile_task(spec: &PpaTaskSpec, b: &mut TreeBuilder) -> Result<BtNode, CompileError> {
    spec.validate()?;
    let gc1 = b.condition(spec.gc.clone(), ConditionRole::GlobalConstraint);
    let poc = b.condition(spec.poc.clone(), ConditionRole::Postcondition);
    let done = b.parallel(vec![gc1, poc]);

    let gc2 = b.condition(spec.gc.clone(), ConditionRole::GlobalConstraint);
    let prc = b.condition(spec.prc.clone(), ConditionRole::Precondition);
    let latch = b.decorator(DecoratorKind::PreconditionLatch, prc);
    let guard = b.parallel(vec![gc2, latch]);

    let tc = b.condition(spec.tc.clone(), ConditionRole::TaskConstraint);
    let action = b.action(&spec.action, &spec.name, spec.poc.clone());
    let gc3 = b.condition(spec.gc.clone(), ConditionRole::GlobalConstraint);
    let act = b.sequence(vec![action, gc3]);
    let run = b.sequence(vec![tc, act]);
    let attempt = b.parallel(vec![guard, run]);

    Ok(b.selector(vec![done, attempt]))
}

fn compile_expr(
    expr: &MissionExpr,
    config: &MissionConfig,
    b: &mut TreeBuilder,
) -> Result<BtNode, CompileError> {
    Ok(match expr {
        MissionExpr::Task { task } => {
            let tree = compile_task(task, b)?;
            b.decorator(
                DecoratorKind::TaskBoundary {
                    task: task.name.clone(),
                },
                tree,
            )
        }
        MissionExpr::Or { lhs, rhs } => {
            let l = compile_expr(lhs, config, b)?;
            let r = compile_expr(rhs, config, b)?;
            b.selector(vec![l, r])
        }
        MissionExpr::And { lhs, rhs } => {
            let l = compile_expr(lhs, config, b)?;
            let r = compile_expr(rhs, config, b)?;
            b.parallel(vec![l, r])
        }
        MissionExpr::Until { lhs, rhs } => {
            let l = compile_expr(lhs, config, b)?;
            let r = compile_expr(rhs, config, b)?;
            b.sequence(vec![l, r])
        }
        MissionExpr::Finally { arg } => {
            let child = compile_expr(arg, config, b)?;
            b.decorator(
                DecoratorKind::FinallyReset {
                    theta: config.theta,
                },
                child,
            )
        }
    })
}

/// Node tree of a whole mission, under a mission root carrying the budget.
pub fn compile_mission_tree(
    expr: &MissionExpr,
    config: &MissionConfig,
) -> Result<BtNode, CompileError> {
    if config.t_task_max == 0 {
        return Err(MissionError::InvalidConfig.into());
    }
    expr.validate(&config.alphabet)?;
    let mut b = TreeBuilder::new();
    let body = compile_expr(expr, config, &mut b)?;
    Ok(b.decorator(
        DecoratorKind::MissionRoot {
            t_task_max: config.t_task_max,
        },
        body,
    ))
}

/// Executable tree of a mission, with every action still unbound.
pub fn compile_mission(
    expr: &MissionExpr,
    config: &MissionConfig,
) -> Result<BehaviorTree, CompileError> {
    let root = compile_mission_tree(expr, config)?;
    Ok(BehaviorTree::new(root, Arc::new(config.alphabet.clone()))?)
}

/// Binds one planner per action name. Fails without binding anything if
/// the alphabets differ or a binding has no planner.
pub fn bind_actions(
    tree: &mut BehaviorTree,
    env_alphabet: &Alphabet,
    planners: &HashMap<String, Box<dyn Planner>>,
) -> Result<(), CompileError> {
    if tree.alphabet().as_ref() != env_alphabet {
        return Err(CompileError::AlphabetMismatch {
            tree: tree.alphabet().names().to_vec(),
            env: env_alphabet.names().to_vec(),
        });
    }
    let bindings = tree.action_bindings();
    if let Some(missing) = bindings.iter().find(|b| !planners.contains_key(*b)) {
        return Err(CompileError::UnboundAction(missing.clone()));
    }
    for binding in &bindings {
        tree.bind(binding, planners[binding].as_ref());
    }
    Ok(())
}
