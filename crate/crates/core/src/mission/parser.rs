//! Mission files.
//!
//! ```text
//! file      ::= [ 'props' ident* ';' ] ( task ';' )* mission
//! mission   ::= l1 | '|' mission l1
//! l1        ::= l2 | '&' l1 l2
//! l2        ::= l3 | 'U' l2 l3
//! l3        ::= 'F' unit | unit
//! unit      ::= task | ident | '(' mission ')'
//! task      ::= 'task' '(' ident { ',' field } ')'
//! field     ::= ('post' | 'pre' | 'gc' | 'tc') '=' cond | 'action' '=' ident
//! cond      ::= conj { '|' conj }
//! conj      ::= neg { '&' neg }
//! neg       ::= '!' neg | atom | '(' cond ')'
//! ```
//!
//! Mission operators are prefix; conditions inside task fields are infix.
//! A bare identifier in a mission refers to a task defined earlier. `pre`,
//! `gc` and `tc` default to `True`; `action` defaults to the task name.

use std::collections::HashMap;

use super::{MissionError, MissionExpr, PpaTaskSpec, ACTION_PREFIX};
use crate::ltlf::{Alphabet, Formula, FALSE, TRUE};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Semi,
    Bar,
    Amp,
    Bang,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<(Pos, Tok)>, MissionError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                chars.next();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            out.push((pos, Tok::Ident(word)));
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            ';' => Tok::Semi,
            '|' => Tok::Bar,
            '&' => Tok::Amp,
            '!' => Tok::Bang,
            other => {
                return Err(MissionError::Syntax {
                    line,
                    column,
                    expected: "mission operator, task or identifier".into(),
                    found: format!("`{other}`"),
                })
            }
        };
        chars.next();
        column += 1;
        out.push((pos, tok));
    }
    out.push((Pos { line, column }, Tok::Eof));
    Ok(out)
}

/// A parsed mission file: its declared propositions and the mission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissionFile {
    pub alphabet: Alphabet,
    pub mission: MissionExpr,
}

struct Parser {
    toks: Vec<(Pos, Tok)>,
    pos: usize,
    alphabet: Option<Alphabet>,
    /// Whether a `props` statement may define the alphabet.
    defines_alphabet: bool,
    tasks: HashMap<String, PpaTaskSpec>,
}

impl Parser {
    fn new(text: &str, alphabet: Option<Alphabet>) -> Result<Self, MissionError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            defines_alphabet: alphabet.is_none(),
            alphabet,
            tasks: HashMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].1.clone();
        if tok != Tok::Eof {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &str) -> MissionError {
        let (pos, tok) = &self.toks[self.pos];
        MissionError::Syntax {
            line: pos.line,
            column: pos.column,
            expected: expected.into(),
            found: tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), MissionError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, MissionError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn is_word(&self, offset: usize, word: &str) -> bool {
        matches!(self.peek_at(offset), Tok::Ident(w) if w == word)
    }

    fn file(&mut self) -> Result<MissionExpr, MissionError> {
        if self.is_word(0, "props") {
            self.props()?;
        }
        if self.alphabet.is_none() {
            return Err(self.error("`props` declaration"));
        }
        loop {
            let expr = self.mission()?;
            match self.peek() {
                Tok::Eof => return Ok(expr),
                Tok::Semi if matches!(expr, MissionExpr::Task { .. }) => {
                    self.bump();
                }
                _ => return Err(self.error("end of input")),
            }
        }
    }

    fn props(&mut self) -> Result<(), MissionError> {
        self.bump();
        let mut names = Vec::new();
        while let Tok::Ident(name) = self.peek().clone() {
            if name.starts_with(ACTION_PREFIX) {
                return Err(MissionError::ReservedAtom(name));
            }
            names.push(name);
            self.bump();
        }
        self.expect(Tok::Semi)?;
        if self.defines_alphabet {
            self.alphabet = Some(Alphabet::new(names)?);
        } else {
            let alphabet = self.alphabet.as_ref().expect("alphabet given");
            if let Some(missing) = names.into_iter().find(|n| !alphabet.contains(n)) {
                return Err(MissionError::UnknownAtom(missing));
            }
        }
        Ok(())
    }

    fn mission(&mut self) -> Result<MissionExpr, MissionError> {
        if *self.peek() == Tok::Bar {
            self.bump();
            let lhs = self.mission()?;
            let rhs = self.l1()?;
            return Ok(MissionExpr::or(lhs, rhs));
        }
        self.l1()
    }

    fn l1(&mut self) -> Result<MissionExpr, MissionError> {
        if *self.peek() == Tok::Amp {
            self.bump();
            let lhs = self.l1()?;
            let rhs = self.l2()?;
            return Ok(MissionExpr::and(lhs, rhs));
        }
        self.l2()
    }

    fn l2(&mut self) -> Result<MissionExpr, MissionError> {
        if self.is_word(0, "U") {
            self.bump();
            let lhs = self.l2()?;
            let rhs = self.l3()?;
            return Ok(MissionExpr::until(lhs, rhs));
        }
        self.l3()
    }

    fn l3(&mut self) -> Result<MissionExpr, MissionError> {
        if self.is_word(0, "F") {
            self.bump();
            return Ok(MissionExpr::finally(self.unit()?));
        }
        self.unit()
    }

    fn unit(&mut self) -> Result<MissionExpr, MissionError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.mission()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(word) if word == "task" && *self.peek_at(1) == Tok::LParen => {
                Ok(MissionExpr::task(self.task_literal()?))
            }
            Tok::Ident(word) if !matches!(word.as_str(), "U" | "F" | "task" | "props") => {
                self.bump();
                self.tasks
                    .get(&word)
                    .cloned()
                    .map(MissionExpr::task)
                    .ok_or(MissionError::UnknownTask(word))
            }
            _ => Err(self.error("task, task name or `(`")),
        }
    }

    fn task_literal(&mut self) -> Result<PpaTaskSpec, MissionError> {
        self.bump();
        self.expect(Tok::LParen)?;
        let name = self.ident("task name")?;
        let mut fields: HashMap<String, Formula> = HashMap::new();
        let mut action = None;
        while *self.peek() == Tok::Comma {
            self.bump();
            let field = self.ident("field name")?;
            if fields.contains_key(&field) || (field == "action" && action.is_some()) {
                self.pos -= 1;
                return Err(self.error("a field not given before"));
            }
            self.expect(Tok::Eq)?;
            match field.as_str() {
                "post" | "pre" | "gc" | "tc" => {
                    let cond = self.cond()?;
                    fields.insert(field, cond);
                }
                "action" => action = Some(self.ident("action name")?),
                _ => {
                    self.pos -= 2;
                    return Err(self.error("`post`, `pre`, `gc`, `tc` or `action`"));
                }
            }
        }
        if !fields.contains_key("post") {
            return Err(self.error("field `post`"));
        }
        self.expect(Tok::RParen)?;
        let mut take = |k: &str| fields.remove(k).unwrap_or_else(Formula::tt);
        let spec = PpaTaskSpec::new(
            name.clone(),
            take("post"),
            take("pre"),
            take("gc"),
            take("tc"),
            action.unwrap_or_else(|| name.clone()),
        )?;
        if self.tasks.contains_key(&name) {
            return Err(MissionError::DuplicateTaskName(name));
        }
        self.tasks.insert(name, spec.clone());
        Ok(spec)
    }

    fn cond(&mut self) -> Result<Formula, MissionError> {
        let mut lhs = self.conj()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            lhs = Formula::or(lhs, self.conj()?);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Formula, MissionError> {
        let mut lhs = self.neg()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = Formula::and(lhs, self.neg()?);
        }
        Ok(lhs)
    }

    fn neg(&mut self) -> Result<Formula, MissionError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.neg()?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.cond()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if name.starts_with(ACTION_PREFIX) {
                    return Err(MissionError::ReservedAtom(name));
                }
                let alphabet = self.alphabet.as_ref().expect("alphabet known before tasks");
                if name != TRUE && name != FALSE && !alphabet.contains(&name) {
                    return Err(MissionError::UnknownAtom(name));
                }
                Ok(Formula::atom(name))
            }
            _ => Err(self.error("proposition, `!` or `(`")),
        }
    }
}

/// Parses mission text whose conditions range over `alphabet`.
pub fn parse_mission(text: &str, alphabet: &Alphabet) -> Result<MissionExpr, MissionError> {
    Parser::new(text, Some(alphabet.clone()))?.file()
}

/// Parses mission text that declares its own propositions with `props`.
pub fn parse_mission_file(text: &str) -> Result<MissionFile, MissionError> {
    let mut parser = Parser::new(text, None)?;
    let mission = parser.file()?;
    let alphabet = parser.alphabet.expect("file() requires props");
    Ok(MissionFile { alphabet, mission })
}
