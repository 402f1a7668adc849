//! Linear temporal logic over finite traces.
//!
//! Formulas are written in prefix notation (`| a (& b c)`), parsed by an
//! LL(1) recursive-descent parser whose levels mirror the precedence of the
//! operators (unary > `U` > `&` > `|`), and judged against finite traces of
//! proposition valuations.

mod eval;
mod parser;
mod prop;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{evaluate, next_at_end, CompiledFormula};
pub use parser::{parse_formula, parse_ltlf};
pub use prop::Prop;

/// Atom that always evaluates to true.
pub const TRUE: &str = "True";
/// Atom that always evaluates to false.
pub const FALSE: &str = "False";

/// Identifiers that lex as temporal operators and so can never name an atom.
pub const OPERATOR_KEYWORDS: [&str; 4] = ["U", "F", "G", "X"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlfError {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("`{0}` is not a valid proposition name")]
    InvalidIdentifier(String),
    #[error("proposition `{0}` declared twice")]
    DuplicateAtom(String),
    #[error("traces must contain at least one state")]
    EmptyTrace,
    #[error("trace of length {len} exceeds the maximum length {max}")]
    TraceTooLong { len: usize, max: usize },
    #[error("states of a trace must share one alphabet")]
    AlphabetMismatch,
    #[error("index {index} out of range for trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("formula is not propositional: {0}")]
    NotPropositional(String),
}

/// LTLf abstract syntax tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Formula {
    Atom {
        name: String,
    },
    Not {
        arg: Box<Formula>,
    },
    Next {
        arg: Box<Formula>,
    },
    Finally {
        arg: Box<Formula>,
    },
    Globally {
        arg: Box<Formula>,
    },
    And {
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
    Or {
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
    Until {
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom { name: name.into() }
    }

    pub fn tt() -> Self {
        Formula::atom(TRUE)
    }

    pub fn ff() -> Self {
        Formula::atom(FALSE)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(arg: Formula) -> Self {
        Formula::Not { arg: Box::new(arg) }
    }

    pub fn next(arg: Formula) -> Self {
        Formula::Next { arg: Box::new(arg) }
    }

    pub fn finally(arg: Formula) -> Self {
        Formula::Finally { arg: Box::new(arg) }
    }

    pub fn globally(arg: Formula) -> Self {
        Formula::Globally { arg: Box::new(arg) }
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Self {
        Formula::And {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Self {
        Formula::Or {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn until(lhs: Formula, rhs: Formula) -> Self {
        Formula::Until {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom { .. })
    }

    /// True when no temporal operator occurs anywhere in the tree.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::Atom { .. } => true,
            Formula::Not { arg } => arg.is_propositional(),
            Formula::And { lhs, rhs } | Formula::Or { lhs, rhs } => {
                lhs.is_propositional() && rhs.is_propositional()
            }
            Formula::Next { .. }
            | Formula::Finally { .. }
            | Formula::Globally { .. }
            | Formula::Until { .. } => false,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom { .. } => 1,
            Formula::Not { arg }
            | Formula::Next { arg }
            | Formula::Finally { arg }
            | Formula::Globally { arg } => 1 + arg.size(),
            Formula::And { lhs, rhs } | Formula::Or { lhs, rhs } | Formula::Until { lhs, rhs } => {
                1 + lhs.size() + rhs.size()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom { .. } => 1,
            Formula::Not { arg }
            | Formula::Next { arg }
            | Formula::Finally { arg }
            | Formula::Globally { arg } => 1 + arg.depth(),
            Formula::And { lhs, rhs } | Formula::Or { lhs, rhs } | Formula::Until { lhs, rhs } => {
                1 + lhs.depth().max(rhs.depth())
            }
        }
    }

    /// Atom names in first-occurrence order, without duplicates.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<String>) {
        match self {
            Formula::Atom { name } => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            Formula::Not { arg }
            | Formula::Next { arg }
            | Formula::Finally { arg }
            | Formula::Globally { arg } => arg.collect_atoms(out),
            Formula::And { lhs, rhs } | Formula::Or { lhs, rhs } | Formula::Until { lhs, rhs } => {
                lhs.collect_atoms(out);
                rhs.collect_atoms(out);
            }
        }
    }

    /// Checks every atom against `alphabet`; `True`/`False` are always allowed.
    pub fn check_atoms(&self, alphabet: &Alphabet) -> Result<(), LtlfError> {
        for name in self.atoms() {
            if name != TRUE && name != FALSE && !alphabet.contains(&name) {
                return Err(LtlfError::UnknownAtom(name));
            }
        }
        Ok(())
    }
}

/// Canonical prefix text. Non-atomic operands are always parenthesized, so the
/// output parses back to a structurally equal tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(f: &mut fmt::Formatter<'_>, arg: &Formula) -> fmt::Result {
            if arg.is_atomic() {
                write!(f, "{arg}")
            } else {
                write!(f, "({arg})")
            }
        }
        let (op, args): (&str, [Option<&Formula>; 2]) = match self {
            Formula::Atom { name } => return f.write_str(name),
            Formula::Not { arg } => ("!", [Some(arg), None]),
            Formula::Next { arg } => ("X", [Some(arg), None]),
            Formula::Finally { arg } => ("F", [Some(arg), None]),
            Formula::Globally { arg } => ("G", [Some(arg), None]),
            Formula::And { lhs, rhs } => ("&", [Some(lhs), Some(rhs)]),
            Formula::Or { lhs, rhs } => ("|", [Some(lhs), Some(rhs)]),
            Formula::Until { lhs, rhs } => ("U", [Some(lhs), Some(rhs)]),
        };
        f.write_str(op)?;
        for arg in args.into_iter().flatten() {
            f.write_str(" ")?;
            operand(f, arg)?;
        }
        Ok(())
    }
}

/// Canonical prefix text of `formula`.
pub fn format(formula: &Formula) -> String {
    formula.to_string()
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Ordered set of proposition names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, LtlfError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut alphabet = Alphabet {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for name in names {
            alphabet.insert(name.into())?;
        }
        Ok(alphabet)
    }

    fn insert(&mut self, name: String) -> Result<(), LtlfError> {
        if !is_identifier(&name)
            || name == TRUE
            || name == FALSE
            || OPERATOR_KEYWORDS.contains(&name.as_str())
        {
            return Err(LtlfError::InvalidIdentifier(name));
        }
        if self.index.contains_key(&name) {
            return Err(LtlfError::DuplicateAtom(name));
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        Ok(())
    }

    /// A new alphabet with `extra` appended after the existing names.
    pub fn extended<I, S>(&self, extra: I) -> Result<Self, LtlfError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = self.clone();
        for name in extra {
            out.insert(name.into())?;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = LtlfError;

    fn try_from(names: Vec<String>) -> Result<Self, Self::Error> {
        Alphabet::new(names)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(alphabet: Alphabet) -> Self {
        alphabet.names
    }
}

/// Total assignment of truth values to the propositions of an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVector {
    alphabet: Arc<Alphabet>,
    values: Vec<bool>,
}

impl StateVector {
    /// All propositions false.
    pub fn all_false(alphabet: Arc<Alphabet>) -> Self {
        let values = vec![false; alphabet.len()];
        StateVector { alphabet, values }
    }

    pub fn from_values(alphabet: Arc<Alphabet>, values: Vec<bool>) -> Result<Self, LtlfError> {
        if values.len() != alphabet.len() {
            return Err(LtlfError::AlphabetMismatch);
        }
        Ok(StateVector { alphabet, values })
    }

    /// Bit `i` of `bits` is the value of the `i`-th proposition.
    pub fn from_bits(alphabet: Arc<Alphabet>, bits: u64) -> Self {
        let values = (0..alphabet.len()).map(|i| bits >> i & 1 == 1).collect();
        StateVector { alphabet, values }
    }

    /// Builds a state from `(name, value)` pairs; unnamed propositions are false.
    pub fn from_pairs<'a, I>(alphabet: Arc<Alphabet>, pairs: I) -> Result<Self, LtlfError>
    where
        I: IntoIterator<Item = (&'a str, bool)>,
    {
        let mut state = StateVector::all_false(alphabet);
        for (name, value) in pairs {
            state.set(name, value)?;
        }
        Ok(state)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Value of `name`. `True`/`False` are constants; undeclared names are errors.
    pub fn get(&self, name: &str) -> Result<bool, LtlfError> {
        match name {
            TRUE => Ok(true),
            FALSE => Ok(false),
            _ => self
                .alphabet
                .index_of(name)
                .map(|i| self.values[i])
                .ok_or_else(|| LtlfError::UnknownAtom(name.to_string())),
        }
    }

    pub fn set(&mut self, name: &str, value: bool) -> Result<(), LtlfError> {
        let i = self
            .alphabet
            .index_of(name)
            .ok_or_else(|| LtlfError::UnknownAtom(name.to_string()))?;
        self.values[i] = value;
        Ok(())
    }

    pub fn value_at(&self, index: usize) -> bool {
        self.values[index]
    }

    /// Names of the propositions that hold.
    pub fn true_atoms(&self) -> Vec<&str> {
        self.alphabet
            .names()
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| **v)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.true_atoms().join(","))
    }
}

/// Finite, nonempty sequence of states over one alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    states: Vec<StateVector>,
    max_len: usize,
}

impl Trace {
    pub fn new(states: Vec<StateVector>, max_len: usize) -> Result<Self, LtlfError> {
        if states.is_empty() {
            return Err(LtlfError::EmptyTrace);
        }
        if states.len() > max_len {
            return Err(LtlfError::TraceTooLong {
                len: states.len(),
                max: max_len,
            });
        }
        let first = &states[0].alphabet;
        if states
            .iter()
            .any(|s| !Arc::ptr_eq(&s.alphabet, first) && s.alphabet != *first)
        {
            return Err(LtlfError::AlphabetMismatch);
        }
        Ok(Trace { states, max_len })
    }

    /// A trace whose bound is its own length.
    pub fn from_states(states: Vec<StateVector>) -> Result<Self, LtlfError> {
        let len = states.len();
        Trace::new(states, len.max(1))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.states[0].alphabet
    }

    /// Copy of `states[from..]`, keeping the same bound.
    pub fn suffix(&self, from: usize) -> Result<Trace, LtlfError> {
        if from >= self.len() {
            return Err(LtlfError::IndexOutOfRange {
                index: from,
                len: self.len(),
            });
        }
        Trace::new(self.states[from..].to_vec(), self.max_len)
    }
}

/// Serialized as the list of atoms that hold.
impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.true_atoms().serialize(serializer)
    }
}

/// Serialized as one list of true atoms per state.
impl Serialize for Trace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.states.serialize(serializer)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.states.iter().map(|s| s.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}
