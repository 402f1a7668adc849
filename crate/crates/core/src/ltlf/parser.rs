//! Prefix-notation parser.
//!
//! ```text
//! psi ::= l1 | '|' psi l1
//! l1  ::= l2 | '&' l1 l2
//! l2  ::= l3 | 'U' l2 l3
//! l3  ::= l4 | '!' l3 | 'X' l3 | 'F' l3 | 'G' l3
//! l4  ::= atom | '(' psi ')'
//! ```
//!
//! The right operand of every binary operator sits one level below the
//! operator, which is what forces left associativity: `& a & b c` is
//! rejected while `& & a b c` parses as `(a & b) & c`.

use super::{Alphabet, Formula, LtlfError, OPERATOR_KEYWORDS};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Or,
    And,
    Not,
    Until,
    Finally,
    Globally,
    Next,
    LParen,
    RParen,
    Ident(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Or => "`|`".into(),
            Tok::And => "`&`".into(),
            Tok::Not => "`!`".into(),
            Tok::Until => "`U`".into(),
            Tok::Finally => "`F`".into(),
            Tok::Globally => "`G`".into(),
            Tok::Next => "`X`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Ident(name) => format!("atom `{name}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlfError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            b'|' => Tok::Or,
            b'&' => Tok::And,
            b'!' => Tok::Not,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "U" => Tok::Until,
                    "F" => Tok::Finally,
                    "G" => Tok::Globally,
                    "X" => Tok::Next,
                    _ => Tok::Ident(word.to_string()),
                };
                debug_assert!(
                    !matches!(&tok, Tok::Ident(w) if OPERATOR_KEYWORDS.contains(&w.as_str()))
                );
                out.push((start, tok));
                continue;
            }
            _ => {
                let found = text[i..].chars().next().unwrap_or('?');
                return Err(LtlfError::Syntax {
                    position: i,
                    expected: "operator, atom or parenthesis".into(),
                    found: format!("`{found}`"),
                });
            }
        };
        out.push((i, tok));
        i += 1;
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].1.clone();
        if tok != Tok::Eof {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &str) -> LtlfError {
        let (position, tok) = &self.toks[self.pos];
        LtlfError::Syntax {
            position: *position,
            expected: expected.into(),
            found: tok.describe(),
        }
    }

    fn psi(&mut self) -> Result<Formula, LtlfError> {
        if *self.peek() == Tok::Or {
            self.bump();
            let lhs = self.psi()?;
            let rhs = self.l1()?;
            return Ok(Formula::or(lhs, rhs));
        }
        self.l1()
    }

    fn l1(&mut self) -> Result<Formula, LtlfError> {
        if *self.peek() == Tok::And {
            self.bump();
            let lhs = self.l1()?;
            let rhs = self.l2()?;
            return Ok(Formula::and(lhs, rhs));
        }
        self.l2()
    }

    fn l2(&mut self) -> Result<Formula, LtlfError> {
        if *self.peek() == Tok::Until {
            self.bump();
            let lhs = self.l2()?;
            let rhs = self.l3()?;
            return Ok(Formula::until(lhs, rhs));
        }
        self.l3()
    }

    fn l3(&mut self) -> Result<Formula, LtlfError> {
        let wrap: fn(Formula) -> Formula = match self.peek() {
            Tok::Not => Formula::not,
            Tok::Next => Formula::next,
            Tok::Finally => Formula::finally,
            Tok::Globally => Formula::globally,
            _ => return self.l4(),
        };
        self.bump();
        Ok(wrap(self.l3()?))
    }

    fn l4(&mut self) -> Result<Formula, LtlfError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::atom(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.psi()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error("atom or `(`")),
        }
    }
}

/// Parses prefix text without checking atoms against an alphabet.
pub fn parse_formula(text: &str) -> Result<Formula, LtlfError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let formula = parser.psi()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.error("end of input"));
    }
    Ok(formula)
}

/// Parses prefix text and checks that every atom belongs to `alphabet`.
pub fn parse_ltlf(text: &str, alphabet: &Alphabet) -> Result<Formula, LtlfError> {
    let formula = parse_formula(text)?;
    formula.check_atoms(alphabet)?;
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Formula {
        Formula::atom(n)
    }

    fn abc() -> Alphabet {
        Alphabet::new(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let f = parse_ltlf("| a & b c", &abc()).unwrap();
        assert_eq!(f, Formula::or(a("a"), Formula::and(a("b"), a("c"))));
    }

    #[test]
    fn binary_operators_associate_left() {
        let f = parse_ltlf("& & a b c", &abc()).unwrap();
        assert_eq!(f, Formula::and(Formula::and(a("a"), a("b")), a("c")));
        // the right operand of `&` is an l2, so a nested `&` needs parentheses
        assert!(parse_ltlf("& a & b c", &abc()).is_err());
        assert!(parse_ltlf("U a U b c", &abc()).is_err());
        assert!(parse_ltlf("U a (U b c)", &abc()).is_ok());
    }

    #[test]
    fn unary_operand_must_be_atomic_or_parenthesized() {
        let err = parse_ltlf("F & a b", &abc()).unwrap_err();
        assert!(
            matches!(err, LtlfError::Syntax { position: 2, .. }),
            "{err}"
        );
        let f = parse_ltlf("F (& a b)", &abc()).unwrap();
        assert_eq!(f, Formula::finally(Formula::and(a("a"), a("b"))));
        // unary chains are l3 and need no parentheses
        let g = parse_ltlf("G ! F a", &abc()).unwrap();
        assert_eq!(g, Formula::globally(Formula::not(Formula::finally(a("a")))));
    }

    #[test]
    fn unknown_atom_rejected() {
        assert_eq!(
            parse_ltlf("& a d", &abc()),
            Err(LtlfError::UnknownAtom("d".into()))
        );
        assert!(parse_ltlf("& a True", &abc()).is_ok());
    }

    #[test]
    fn syntax_errors_report_position() {
        match parse_formula("& a") {
            Err(LtlfError::Syntax {
                position, found, ..
            }) => {
                assert_eq!(position, 3);
                assert_eq!(found, "end of input");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_formula("(a").is_err());
        assert!(parse_formula("a b").is_err());
        assert!(parse_formula("").is_err());
        assert!(parse_formula("a $").is_err());
    }
}
