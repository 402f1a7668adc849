//! Task and mission language.
//!
//! A task is a postcondition/precondition/action tuple guarded by a global
//! constraint and a task constraint. Missions combine tasks with prefix
//! `|`, `&`, `U` and `F`; every mission expands to an LTLf formula.

mod parser;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltlf::{is_identifier, Alphabet, Formula, LtlfError, FALSE, TRUE};

pub use parser::{parse_mission, parse_mission_file, MissionFile};

/// Prefix of the reserved propositions that stand for action success.
pub const ACTION_PREFIX: &str = "__action_";

const RESERVED_WORDS: [&str; 4] = ["task", "props", "U", "F"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MissionError {
    #[error("syntax error at {line}:{column}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("task `{0}` is defined more than once")]
    DuplicateTaskName(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("reference to undefined task `{0}`")]
    UnknownTask(String),
    #[error("`{0}` is not a valid task or action name")]
    InvalidName(String),
    #[error("`{0}` uses the reserved action prefix")]
    ReservedAtom(String),
    #[error("field `{field}` of task `{task}` contains a temporal operator")]
    TemporalOperatorInCondition { task: String, field: &'static str },
    #[error("t_task_max must be at least 1")]
    InvalidConfig,
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
}

/// One postcondition-precondition-action task.
///
/// `poc`, `prc`, `gc` and `tc` are the postcondition, precondition, global
/// constraint and task constraint; `action` names the planner that drives
/// the task's action node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PpaTaskSpec {
    pub name: String,
    pub poc: Formula,
    pub prc: Formula,
    pub gc: Formula,
    pub tc: Formula,
    pub action: String,
}

impl PpaTaskSpec {
    pub fn new(
        name: impl Into<String>,
        poc: Formula,
        prc: Formula,
        gc: Formula,
        tc: Formula,
        action: impl Into<String>,
    ) -> Result<Self, MissionError> {
        let spec = PpaTaskSpec {
            name: name.into(),
            poc,
            prc,
            gc,
            tc,
            action: action.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks names and that every condition is propositional and free of
    /// action atoms.
    pub fn validate(&self) -> Result<(), MissionError> {
        for name in [&self.name, &self.action] {
            if !is_identifier(name)
                || name.starts_with(ACTION_PREFIX)
                || RESERVED_WORDS.contains(&name.as_str())
                || name == TRUE
                || name == FALSE
            {
                return Err(MissionError::InvalidName(name.clone()));
            }
        }
        for (field, cond) in self.conditions() {
            if !cond.is_propositional() {
                return Err(MissionError::TemporalOperatorInCondition {
                    task: self.name.clone(),
                    field,
                });
            }
            if let Some(atom) = cond
                .atoms()
                .into_iter()
                .find(|a| a.starts_with(ACTION_PREFIX))
            {
                return Err(MissionError::ReservedAtom(atom));
            }
        }
        Ok(())
    }

    /// Validation plus a check of every condition atom against `alphabet`.
    pub fn validate_against(&self, alphabet: &Alphabet) -> Result<(), MissionError> {
        self.validate()?;
        for (_, cond) in self.conditions() {
            cond.check_atoms(alphabet).map_err(|e| match e {
                LtlfError::UnknownAtom(a) => MissionError::UnknownAtom(a),
                other => other.into(),
            })?;
        }
        Ok(())
    }

    pub fn conditions(&self) -> [(&'static str, &Formula); 4] {
        [
            ("post", &self.poc),
            ("pre", &self.prc),
            ("gc", &self.gc),
            ("tc", &self.tc),
        ]
    }

    /// Name of the reserved proposition standing for this task's action.
    pub fn action_atom(&self) -> String {
        format!("{ACTION_PREFIX}{}", self.name)
    }
}

/// Mission expression tree; leaves are tasks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum MissionExpr {
    Task {
        task: PpaTaskSpec,
    },
    Or {
        lhs: Box<MissionExpr>,
        rhs: Box<MissionExpr>,
    },
    And {
        lhs: Box<MissionExpr>,
        rhs: Box<MissionExpr>,
    },
    Until {
        lhs: Box<MissionExpr>,
        rhs: Box<MissionExpr>,
    },
    Finally {
        arg: Box<MissionExpr>,
    },
}

impl MissionExpr {
    pub fn task(task: PpaTaskSpec) -> Self {
        MissionExpr::Task { task }
    }

    pub fn or(lhs: MissionExpr, rhs: MissionExpr) -> Self {
        MissionExpr::Or {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn and(lhs: MissionExpr, rhs: MissionExpr) -> Self {
        MissionExpr::And {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn until(lhs: MissionExpr, rhs: MissionExpr) -> Self {
        MissionExpr::Until {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn finally(arg: MissionExpr) -> Self {
        MissionExpr::Finally { arg: Box::new(arg) }
    }

    /// Task leaves in left-to-right order, repeats included.
    pub fn tasks(&self) -> Vec<&PpaTaskSpec> {
        let mut out = Vec::new();
        self.collect_tasks(&mut out);
        out
    }

    fn collect_tasks<'a>(&'a self, out: &mut Vec<&'a PpaTaskSpec>) {
        match self {
            MissionExpr::Task { task } => out.push(task),
            MissionExpr::Finally { arg } => arg.collect_tasks(out),
            MissionExpr::Or { lhs, rhs }
            | MissionExpr::And { lhs, rhs }
            | MissionExpr::Until { lhs, rhs } => {
                lhs.collect_tasks(out);
                rhs.collect_tasks(out);
            }
        }
    }

    /// Number of operator and task nodes.
    pub fn size(&self) -> usize {
        match self {
            MissionExpr::Task { .. } => 1,
            MissionExpr::Finally { arg } => 1 + arg.size(),
            MissionExpr::Or { lhs, rhs }
            | MissionExpr::And { lhs, rhs }
            | MissionExpr::Until { lhs, rhs } => 1 + lhs.size() + rhs.size(),
        }
    }

    /// Validates every task and rejects two different tasks sharing a name.
    pub fn validate(&self, alphabet: &Alphabet) -> Result<(), MissionError> {
        let mut seen: Vec<&PpaTaskSpec> = Vec::new();
        for task in self.tasks() {
            task.validate_against(alphabet)?;
            match seen.iter().find(|t| t.name == task.name) {
                Some(prev) if *prev != task => {
                    return Err(MissionError::DuplicateTaskName(task.name.clone()))
                }
                Some(_) => {}
                None => seen.push(task),
            }
        }
        for name in alphabet.names() {
            if name.starts_with(ACTION_PREFIX) {
                return Err(MissionError::ReservedAtom(name.clone()));
            }
        }
        Ok(())
    }

    /// Action propositions of all tasks, without duplicates.
    pub fn action_atoms(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.tasks()
            .into_iter()
            .map(|t| t.action_atom())
            .filter(|a| seen.insert(a.clone()))
            .collect()
    }

    /// `alphabet` followed by this mission's action propositions.
    pub fn trace_alphabet(&self, alphabet: &Alphabet) -> Result<Alphabet, MissionError> {
        Ok(alphabet.extended(self.action_atoms())?)
    }
}

/// Surface syntax. The first occurrence of each task is written as a literal
/// and later occurrences as references, so the text parses back to `self`.
impl fmt::Display for MissionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut seen = HashSet::new();
        write_mission(f, self, &mut seen)
    }
}

fn write_mission(
    f: &mut fmt::Formatter<'_>,
    expr: &MissionExpr,
    seen: &mut HashSet<String>,
) -> fmt::Result {
    fn operand(
        f: &mut fmt::Formatter<'_>,
        expr: &MissionExpr,
        seen: &mut HashSet<String>,
    ) -> fmt::Result {
        if matches!(expr, MissionExpr::Task { .. }) {
            write_mission(f, expr, seen)
        } else {
            f.write_str("(")?;
            write_mission(f, expr, seen)?;
            f.write_str(")")
        }
    }
    match expr {
        MissionExpr::Task { task } => {
            if seen.insert(task.name.clone()) {
                write!(
                    f,
                    "task({}, post={}, pre={}, gc={}, tc={}, action={})",
                    task.name,
                    infix(&task.poc),
                    infix(&task.prc),
                    infix(&task.gc),
                    infix(&task.tc),
                    task.action
                )
            } else {
                f.write_str(&task.name)
            }
        }
        MissionExpr::Finally { arg } => {
            f.write_str("F ")?;
            operand(f, arg, seen)
        }
        MissionExpr::Or { lhs, rhs }
        | MissionExpr::And { lhs, rhs }
        | MissionExpr::Until { lhs, rhs } => {
            let op = match expr {
                MissionExpr::Or { .. } => "|",
                MissionExpr::And { .. } => "&",
                _ => "U",
            };
            write!(f, "{op} ")?;
            operand(f, lhs, seen)?;
            f.write_str(" ")?;
            operand(f, rhs, seen)
        }
    }
}

/// Infix text of a propositional formula, parenthesizing binary operands.
pub fn infix(formula: &Formula) -> String {
    fn operand(f: &Formula) -> String {
        match f {
            Formula::And { .. } | Formula::Or { .. } => format!("({})", infix(f)),
            _ => infix(f),
        }
    }
    match formula {
        Formula::Atom { name } => name.clone(),
        Formula::Not { arg } => format!("!{}", operand(arg)),
        Formula::And { lhs, rhs } => format!("{} & {}", operand(lhs), operand(rhs)),
        Formula::Or { lhs, rhs } => format!("{} | {}", operand(lhs), operand(rhs)),
        // not reachable for validated task conditions; fall back to prefix text
        other => format!("<{other}>"),
    }
}

/// Execution parameters shared by every node of a mission tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissionConfig {
    /// Tick budget of the mission root and of every action node.
    pub t_task_max: u32,
    /// How many resets each Finally node may issue.
    pub theta: u32,
    pub alphabet: Alphabet,
}

impl MissionConfig {
    pub fn new(t_task_max: u32, theta: u32, alphabet: Alphabet) -> Result<Self, MissionError> {
        if t_task_max == 0 {
            return Err(MissionError::InvalidConfig);
        }
        Ok(MissionConfig {
            t_task_max,
            theta,
            alphabet,
        })
    }
}

/// LTLf formula of a task:
/// `| (& (G gc) poc) (& (& (G gc) (F prc)) (U tc (& action (G gc))))`.
pub fn expand_task(spec: &PpaTaskSpec) -> Result<Formula, MissionError> {
    spec.validate()?;
    let g_gc = || Formula::globally(spec.gc.clone());
    let done_already = Formula::and(g_gc(), spec.poc.clone());
    let act = Formula::and(
        Formula::and(g_gc(), Formula::finally(spec.prc.clone())),
        Formula::until(
            spec.tc.clone(),
            Formula::and(Formula::atom(spec.action_atom()), g_gc()),
        ),
    );
    Ok(Formula::or(done_already, act))
}

/// Replaces every operator by its LTLf counterpart and every task by its
/// expanded formula.
pub fn expand_mission(expr: &MissionExpr) -> Result<Formula, MissionError> {
    Ok(match expr {
        MissionExpr::Task { task } => expand_task(task)?,
        MissionExpr::Or { lhs, rhs } => Formula::or(expand_mission(lhs)?, expand_mission(rhs)?),
        MissionExpr::And { lhs, rhs } => Formula::and(expand_mission(lhs)?, expand_mission(rhs)?),
        MissionExpr::Until { lhs, rhs } => {
            Formula::until(expand_mission(lhs)?, expand_mission(rhs)?)
        }
        MissionExpr::Finally { arg } => Formula::finally(expand_mission(arg)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltlf::parse_formula;

    fn atom(n: &str) -> Formula {
        Formula::atom(n)
    }

    fn cheese() -> PpaTaskSpec {
        PpaTaskSpec::new(
            "cheese",
            atom("Cheese"),
            Formula::tt(),
            Formula::not(atom("Fire")),
            Formula::tt(),
            "Cheese",
        )
        .unwrap()
    }

    /// Drops every `G` and `F` wrapper, leaving the propositional skeleton.
    fn strip(f: &Formula) -> Formula {
        match f {
            Formula::Globally { arg } | Formula::Finally { arg } => strip(arg),
            Formula::Atom { .. } => f.clone(),
            Formula::Not { arg } => Formula::not(strip(arg)),
            Formula::Next { arg } => Formula::next(strip(arg)),
            Formula::And { lhs, rhs } => Formula::and(strip(lhs), strip(rhs)),
            Formula::Or { lhs, rhs } => Formula::or(strip(lhs), strip(rhs)),
            Formula::Until { lhs, rhs } => Formula::until(strip(lhs), strip(rhs)),
        }
    }

    #[test]
    fn cheese_task_matches_published_skeleton() {
        let f = expand_task(&cheese()).unwrap();
        // the published cheese formula omits the G and F wrappers of the template
        let published = parse_formula(
            "| (& (! Fire) Cheese) (& (& (! Fire) True) (U True (& __action_cheese (! Fire))))",
        )
        .unwrap();
        assert_eq!(strip(&f), published);
        assert_eq!(
            f.to_string(),
            "| (& (G (! Fire)) Cheese) (& (& (G (! Fire)) (F True)) (U True (& __action_cheese (G (! Fire)))))"
        );
    }

    #[test]
    fn key_task_shape() {
        let key = PpaTaskSpec::new(
            "key",
            atom("KeyStacked"),
            atom("IsKeyDoor"),
            atom("NoErr"),
            atom("VisibleKeyDoor"),
            "KeyStacked",
        )
        .unwrap();
        let published = parse_formula(
            "| (& NoErr KeyStacked) (& (& NoErr IsKeyDoor) (U VisibleKeyDoor (& __action_key NoErr)))",
        )
        .unwrap();
        assert_eq!(strip(&expand_task(&key).unwrap()), published);
    }

    #[test]
    fn temporal_condition_rejected() {
        let err = PpaTaskSpec::new(
            "t",
            Formula::finally(atom("a")),
            Formula::tt(),
            Formula::tt(),
            Formula::tt(),
            "t",
        )
        .unwrap_err();
        assert_eq!(
            err,
            MissionError::TemporalOperatorInCondition {
                task: "t".into(),
                field: "post"
            }
        );
    }

    #[test]
    fn action_atoms_cannot_appear_in_conditions() {
        let err = PpaTaskSpec::new(
            "t",
            atom("__action_t"),
            Formula::tt(),
            Formula::tt(),
            Formula::tt(),
            "t",
        )
        .unwrap_err();
        assert_eq!(err, MissionError::ReservedAtom("__action_t".into()));
    }

    #[test]
    fn expand_mission_substitutes_structurally() {
        let a = cheese();
        let mut b = cheese();
        b.name = "other".into();
        let m = MissionExpr::and(MissionExpr::task(a.clone()), MissionExpr::task(b.clone()));
        assert_eq!(
            expand_mission(&m).unwrap(),
            Formula::and(expand_task(&a).unwrap(), expand_task(&b).unwrap())
        );
        let f = MissionExpr::finally(MissionExpr::task(a.clone()));
        assert_eq!(
            expand_mission(&f).unwrap(),
            Formula::finally(expand_task(&a).unwrap())
        );
    }

    #[test]
    fn json_round_trip() {
        let m = MissionExpr::until(
            MissionExpr::finally(MissionExpr::task(cheese())),
            MissionExpr::task(cheese()),
        );
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"op\":\"until\""));
        let back: MissionExpr = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn infix_printing() {
        let f = parse_formula("| (! a) (& b (| c d))").unwrap();
        assert_eq!(infix(&f), "!a | (b & (c | d))");
    }
}
