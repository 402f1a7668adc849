use super::{Alphabet, Formula, LtlfError, Trace, FALSE, TRUE};

#[derive(Debug, Clone, Copy)]
enum Node {
    Const(bool),
    Atom(usize),
    Not(usize),
    Next(usize),
    Finally(usize),
    Globally(usize),
    And(usize, usize),
    Or(usize, usize),
    Until(usize, usize),
}

/// A formula resolved against an alphabet and flattened into post-order, so
/// every subformula is evaluated once per trace position.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    nodes: Vec<Node>,
    alphabet_len: usize,
}

impl CompiledFormula {
    pub fn new(formula: &Formula, alphabet: &Alphabet) -> Result<Self, LtlfError> {
        let mut nodes = Vec::with_capacity(formula.size());
        flatten(formula, alphabet, &mut nodes)?;
        Ok(CompiledFormula {
            nodes,
            alphabet_len: alphabet.len(),
        })
    }

    /// Truth value at every position of `trace`.
    ///
    /// Temporal operators range over `[i, |trace| - 1]`; the realized end of
    /// the trace plays the role of the maximum length.
    pub fn eval_all(&self, trace: &Trace) -> Result<Vec<bool>, LtlfError> {
        if trace.alphabet().len() != self.alphabet_len {
            return Err(LtlfError::AlphabetMismatch);
        }
        let n = trace.len();
        let mut table: Vec<Vec<bool>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let row = match *node {
                Node::Const(v) => vec![v; n],
                Node::Atom(i) => trace.states().iter().map(|s| s.value_at(i)).collect(),
                Node::Not(c) => table[c].iter().map(|v| !v).collect(),
                Node::And(l, r) => (0..n).map(|i| table[l][i] && table[r][i]).collect(),
                Node::Or(l, r) => (0..n).map(|i| table[l][i] || table[r][i]).collect(),
                Node::Next(c) => (0..n).map(|i| next_at(&table[c], i)).collect(),
                Node::Finally(c) => {
                    let mut row = vec![false; n];
                    let mut acc = false;
                    for i in (0..n).rev() {
                        acc = acc || table[c][i];
                        row[i] = acc;
                    }
                    row
                }
                Node::Globally(c) => {
                    let mut row = vec![false; n];
                    let mut acc = true;
                    for i in (0..n).rev() {
                        acc = acc && table[c][i];
                        row[i] = acc;
                    }
                    row
                }
                Node::Until(l, r) => {
                    let mut row = vec![false; n];
                    let mut acc = false;
                    for i in (0..n).rev() {
                        acc = table[r][i] || (table[l][i] && acc);
                        row[i] = acc;
                    }
                    row
                }
            };
            table.push(row);
        }
        Ok(table.pop().expect("formula has at least one node"))
    }

    pub fn eval_at(&self, trace: &Trace, index: usize) -> Result<bool, LtlfError> {
        if index >= trace.len() {
            return Err(LtlfError::IndexOutOfRange {
                index,
                len: trace.len(),
            });
        }
        Ok(self.eval_all(trace)?[index])
    }
}

/// Strong next: at the last position there is no successor, so `X ψ` is false.
fn next_at(child: &[bool], i: usize) -> bool {
    child.get(i + 1).copied().unwrap_or(false)
}

/// Value of `X ψ` at the final position of a trace, whatever `ψ` is.
pub fn next_at_end() -> bool {
    next_at(&[true], 0)
}

fn flatten(f: &Formula, alphabet: &Alphabet, out: &mut Vec<Node>) -> Result<usize, LtlfError> {
    let node = match f {
        Formula::Atom { name } => match name.as_str() {
            TRUE => Node::Const(true),
            FALSE => Node::Const(false),
            _ => Node::Atom(
                alphabet
                    .index_of(name)
                    .ok_or_else(|| LtlfError::UnknownAtom(name.clone()))?,
            ),
        },
        Formula::Not { arg } => Node::Not(flatten(arg, alphabet, out)?),
        Formula::Next { arg } => Node::Next(flatten(arg, alphabet, out)?),
        Formula::Finally { arg } => Node::Finally(flatten(arg, alphabet, out)?),
        Formula::Globally { arg } => Node::Globally(flatten(arg, alphabet, out)?),
        Formula::And { lhs, rhs } => {
            let l = flatten(lhs, alphabet, out)?;
            Node::And(l, flatten(rhs, alphabet, out)?)
        }
        Formula::Or { lhs, rhs } => {
            let l = flatten(lhs, alphabet, out)?;
            Node::Or(l, flatten(rhs, alphabet, out)?)
        }
        Formula::Until { lhs, rhs } => {
            let l = flatten(lhs, alphabet, out)?;
            Node::Until(l, flatten(rhs, alphabet, out)?)
        }
    };
    out.push(node);
    Ok(out.len() - 1)
}

/// Whether `trace` satisfies `formula` from position `index`.
pub fn evaluate(formula: &Formula, trace: &Trace, index: usize) -> Result<bool, LtlfError> {
    CompiledFormula::new(formula, trace.alphabet())?.eval_at(trace, index)
}
