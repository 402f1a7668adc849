use super::{Alphabet, Formula, LtlfError, StateVector, FALSE, TRUE};

/// Propositional formula with atoms resolved to alphabet indices, for
/// evaluation against one state at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prop {
    Const(bool),
    Atom(usize),
    Not(Box<Prop>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
}

impl Prop {
    pub fn compile(formula: &Formula, alphabet: &Alphabet) -> Result<Prop, LtlfError> {
        Ok(match formula {
            Formula::Atom { name } => match name.as_str() {
                TRUE => Prop::Const(true),
                FALSE => Prop::Const(false),
                _ => Prop::Atom(
                    alphabet
                        .index_of(name)
                        .ok_or_else(|| LtlfError::UnknownAtom(name.clone()))?,
                ),
            },
            Formula::Not { arg } => Prop::Not(Box::new(Prop::compile(arg, alphabet)?)),
            Formula::And { lhs, rhs } => Prop::And(
                Box::new(Prop::compile(lhs, alphabet)?),
                Box::new(Prop::compile(rhs, alphabet)?),
            ),
            Formula::Or { lhs, rhs } => Prop::Or(
                Box::new(Prop::compile(lhs, alphabet)?),
                Box::new(Prop::compile(rhs, alphabet)?),
            ),
            _ => return Err(LtlfError::NotPropositional(formula.to_string())),
        })
    }

    pub fn eval(&self, values: &[bool]) -> bool {
        match self {
            Prop::Const(v) => *v,
            Prop::Atom(i) => values[*i],
            Prop::Not(p) => !p.eval(values),
            Prop::And(l, r) => l.eval(values) && r.eval(values),
            Prop::Or(l, r) => l.eval(values) || r.eval(values),
        }
    }

    pub fn eval_state(&self, state: &StateVector) -> bool {
        self.eval(state.values())
    }
}
