//! Text format for programs, multiset EDBs, atoms and algebra expressions.
//!
//! Variables start with an uppercase letter or `_`; constants are lowercase
//! identifiers, integers or double-quoted strings. `%` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::analysis;
use crate::model::{sym, Atom, CmpOp, Comparison, Constant, ModelError, MultisetInstance, Predicate, Program, Rule, Symbol, Term};
use crate::mra::{Condition, MraExpr, Operand};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub file: String,
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("predicate `{name}` used with arity {first} and {second}")]
    ArityConflict { name: String, first: usize, second: usize },
    #[error("existential variable `{0}` occurs in the rule body")]
    ExistentialInBody(String),
    #[error("existential variable `{0}` does not occur in the head")]
    ExistentialNotInHead(String),
    #[error("unsafe rule `{rule}`: {detail}")]
    Unsafe { rule: String, detail: String },
    #[error("fact `{0}` is not ground")]
    NotGround(String),
    #[error("multiplicity must be a positive integer")]
    BadMultiplicity,
    #[error("reserved name `{0}`")]
    Reserved(String),
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Str(String),
    Null(u32),
    Tid(u32),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Semi,
    Colon,
    Implies,
    Dollar,
    Cmp(CmpOp),
    Gt,
    Ge,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Null(k) => write!(f, "`_n{k}`"),
            Tok::Tid(k) => write!(f, "`!i{k}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Implies => f.write_str("`:-`"),
            Tok::Dollar => f.write_str("`$`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol()),
            Tok::Gt => f.write_str("`>`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }
}

fn tokenize(file: &str, text: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let mut lx = Lexer { chars: text.chars().peekable(), line: 1, column: 1 };
    let mut out = Vec::new();
    loop {
        while let Some(c) = lx.peek() {
            if c.is_whitespace() {
                lx.bump();
            } else if c == '%' {
                while let Some(c) = lx.peek() {
                    if c == '\n' {
                        break;
                    }
                    lx.bump();
                }
            } else {
                break;
            }
        }
        let span = SourceSpan { file: file.to_string(), line: lx.line, column: lx.column };
        let err = |msg: String, span: &SourceSpan| ParseError { span: span.clone(), kind: ParseErrorKind::Syntax(msg) };
        let Some(c) = lx.bump() else {
            out.push((Tok::Eof, span));
            return Ok(out);
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            ';' => Tok::Semi,
            '$' => Tok::Dollar,
            '=' => Tok::Cmp(CmpOp::Eq),
            ':' => {
                if lx.peek() == Some('-') {
                    lx.bump();
                    Tok::Implies
                } else {
                    Tok::Colon
                }
            }
            '<' => {
                if lx.peek() == Some('=') {
                    lx.bump();
                    Tok::Cmp(CmpOp::Le)
                } else {
                    Tok::Cmp(CmpOp::Lt)
                }
            }
            '>' => {
                if lx.peek() == Some('=') {
                    lx.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '!' => match lx.peek() {
                Some('=') => {
                    lx.bump();
                    Tok::Cmp(CmpOp::Ne)
                }
                Some('i') => {
                    lx.bump();
                    let digits = take_while(&mut lx, |c| c.is_ascii_digit());
                    match digits.parse::<u32>() {
                        Ok(k) if k > 0 => Tok::Tid(k),
                        _ => return Err(err("malformed tid".into(), &span)),
                    }
                }
                _ => return Err(err("unexpected `!`".into(), &span)),
            },
            '"' => {
                let mut s = String::new();
                loop {
                    match lx.bump() {
                        None => return Err(err("unterminated string".into(), &span)),
                        Some('"') => break,
                        Some('\\') => match lx.bump() {
                            Some('n') => s.push('\n'),
                            Some(c) => s.push(c),
                            None => return Err(err("unterminated string".into(), &span)),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            '-' => {
                if !lx.peek().is_some_and(|c| c.is_ascii_digit()) {
                    return Err(err("unexpected `-`".into(), &span));
                }
                let digits = take_while(&mut lx, |c| c.is_ascii_digit());
                match format!("-{digits}").parse::<i64>() {
                    Ok(i) => Tok::Int(i),
                    Err(_) => return Err(err("integer out of range".into(), &span)),
                }
            }
            c if c.is_ascii_digit() => {
                let mut digits = c.to_string();
                digits.push_str(&take_while(&mut lx, |c| c.is_ascii_digit()));
                match digits.parse::<i64>() {
                    Ok(i) => Tok::Int(i),
                    Err(_) => return Err(err("integer out of range".into(), &span)),
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut name = c.to_string();
                name.push_str(&take_while(&mut lx, |c| c.is_alphanumeric() || c == '_'));
                if let Some(k) = name.strip_prefix("_n").and_then(|d| d.parse::<u32>().ok()) {
                    if k == 0 {
                        return Err(err("null indices start at 1".into(), &span));
                    }
                    Tok::Null(k)
                } else if c.is_uppercase() || c == '_' {
                    Tok::Var(name)
                } else {
                    Tok::Ident(name)
                }
            }
            other => return Err(err(format!("unexpected character `{other}`"), &span)),
        };
        out.push((tok, span));
    }
}

fn take_while(lx: &mut Lexer<'_>, pred: impl Fn(char) -> bool) -> String {
    let mut s = String::new();
    while let Some(c) = lx.peek() {
        if !pred(c) {
            break;
        }
        s.push(c);
        lx.bump();
    }
    s
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    anon: u32,
}

impl Parser {
    fn new(file: &str, text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(file, text)?, pos: 0, anon: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1.clone()
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { span: self.span(), kind: ParseErrorKind::Syntax(msg.into()) })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            let found = self.peek().clone();
            self.error(format!("expected {tok}, found {found}"))
        }
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.next() {
            Tok::Var(v) if v == "_" => {
                self.anon += 1;
                Ok(Term::Var(sym(&format!("_V{}", self.anon))))
            }
            Tok::Var(v) => Ok(Term::Var(sym(&v))),
            Tok::Ident(s) => Ok(Term::Const(Constant::Sym(sym(&s)))),
            Tok::Str(s) => Ok(Term::Const(Constant::Sym(sym(&s)))),
            Tok::Int(i) => Ok(Term::Const(Constant::Int(i))),
            Tok::Null(k) => Ok(Term::Null(k)),
            Tok::Tid(k) => Ok(Term::Tid(k)),
            other => {
                self.pos -= 1;
                self.error(format!("expected a term, found {other}"))
            }
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let name = match self.next() {
            Tok::Ident(s) => s,
            other => {
                self.pos -= 1;
                return self.error(format!("expected a predicate name, found {other}"));
            }
        };
        if *self.peek() != Tok::LParen {
            return Ok(Atom::new(&name, Vec::new()));
        }
        self.next();
        let first = self.term()?;
        let mut tidded = matches!(first, Term::Tid(_));
        let mut args = vec![first];
        if *self.peek() == Tok::Semi {
            self.next();
            tidded = true;
            if *self.peek() == Tok::RParen {
                self.next();
                return Ok(Atom::tidded(sym(&name), args.pop().unwrap(), Vec::new()));
            }
            args.push(self.term()?);
        }
        while *self.peek() == Tok::Comma {
            self.next();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        if tidded {
            let tid = args.remove(0);
            Ok(Atom::tidded(sym(&name), tid, args))
        } else {
            Ok(Atom::new(&name, args))
        }
    }

    fn cmp_op(&mut self) -> Option<(CmpOp, bool)> {
        let r = match self.peek() {
            Tok::Cmp(op) => Some((*op, false)),
            Tok::Gt => Some((CmpOp::Lt, true)),
            Tok::Ge => Some((CmpOp::Le, true)),
            _ => None,
        };
        if r.is_some() {
            self.next();
        }
        r
    }

    fn is_comparison_start(&self) -> bool {
        let op_at = |k: usize| matches!(self.peek_at(k), Tok::Cmp(_) | Tok::Gt | Tok::Ge);
        match self.peek() {
            Tok::Var(_) | Tok::Int(_) | Tok::Str(_) | Tok::Null(_) | Tok::Tid(_) => true,
            Tok::Ident(_) => op_at(1),
            _ => false,
        }
    }

    fn comparison(&mut self) -> Result<Comparison, ParseError> {
        let left = self.term()?;
        let Some((op, flip)) = self.cmp_op() else {
            let found = self.peek().clone();
            return self.error(format!("expected a comparison operator, found {found}"));
        };
        let right = self.term()?;
        Ok(if flip { Comparison { left: right, op, right: left } } else { Comparison { left, op, right } })
    }
}

enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Comparison),
}

struct RawRule {
    span: SourceSpan,
    label: Option<String>,
    existentials: Vec<String>,
    head: Atom,
    body: Vec<Literal>,
}

enum Statement {
    Rule(RawRule),
    Distinct(String),
}

fn statement(p: &mut Parser) -> Result<Statement, ParseError> {
    let span = p.span();
    if let (Tok::Ident(kw), Tok::Ident(name), Tok::Dot) = (p.peek(), p.peek_at(1), p.peek_at(2)) {
        if kw == "distinct" {
            let name = name.clone();
            p.next();
            p.next();
            p.next();
            return Ok(Statement::Distinct(name));
        }
    }
    let mut label = None;
    if let (Tok::Ident(l), Tok::Colon) = (p.peek(), p.peek_at(1)) {
        label = Some(l.clone());
        p.next();
        p.next();
    }
    let mut existentials = Vec::new();
    if let (Tok::Ident(kw), Tok::Var(_)) = (p.peek(), p.peek_at(1)) {
        if kw == "exists" {
            p.next();
            loop {
                match p.next() {
                    Tok::Var(v) => existentials.push(v),
                    other => {
                        p.pos -= 1;
                        return p.error(format!("expected a variable, found {other}"));
                    }
                }
                if *p.peek() == Tok::Comma {
                    p.next();
                } else {
                    break;
                }
            }
            p.expect(Tok::Colon)?;
        }
    }
    let head = p.atom()?;
    let mut body = Vec::new();
    if *p.peek() == Tok::Implies {
        p.next();
        loop {
            let lit = match (p.peek(), p.peek_at(1)) {
                (Tok::Ident(kw), Tok::Ident(_)) if kw == "not" => {
                    p.next();
                    Literal::Neg(p.atom()?)
                }
                _ if p.is_comparison_start() => Literal::Cmp(p.comparison()?),
                _ => Literal::Pos(p.atom()?),
            };
            body.push(lit);
            if *p.peek() == Tok::Comma {
                p.next();
            } else {
                break;
            }
        }
    }
    p.expect(Tok::Dot)?;
    Ok(Statement::Rule(RawRule { span, label, existentials, head, body }))
}

fn is_reserved_tid_var(v: &str) -> bool {
    v.strip_prefix("Z_").is_some_and(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
}

/// Predicate names produced by rewriting: `aux_<rule>_<i>` from lifting and
/// `<rule>_aux<k>` from normalization.
pub fn is_internal_predicate(name: &str) -> bool {
    if name.starts_with("aux_") {
        return true;
    }
    match name.rfind("_aux") {
        Some(i) => {
            let d = &name[i + 4..];
            i > 0 && !d.is_empty() && d.chars().all(|c| c.is_ascii_digit())
        }
        None => false,
    }
}

fn build_rule(raw: RawRule, index: usize) -> Result<Rule, ParseError> {
    let span = raw.span.clone();
    let fail = |kind: ParseErrorKind| ParseError { span: span.clone(), kind };
    let label = raw.label.unwrap_or_else(|| format!("r{index}"));
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut comparisons = Vec::new();
    for lit in raw.body {
        match lit {
            Literal::Pos(a) => positive.push(a),
            Literal::Neg(a) => negative.push(a),
            Literal::Cmp(c) => comparisons.push(c),
        }
    }
    let body_atoms = positive.iter().chain(&negative);
    let mut body_vars: BTreeSet<&str> = BTreeSet::new();
    for a in body_atoms {
        body_vars.extend(a.vars().map(|v| &**v));
    }
    for c in &comparisons {
        body_vars.extend(c.vars().map(|v| &**v));
    }
    for e in &raw.existentials {
        if body_vars.contains(e.as_str()) {
            return Err(fail(ParseErrorKind::ExistentialInBody(e.clone())));
        }
        if !raw.head.vars().any(|v| **v == **e) {
            return Err(fail(ParseErrorKind::ExistentialNotInHead(e.clone())));
        }
    }
    let all_atoms = std::iter::once(&raw.head).chain(&positive).chain(&negative);
    for a in all_atoms {
        for (i, t) in a.args.iter().enumerate() {
            let tid_slot = a.pred.tidded && i == 0;
            match t {
                Term::Var(v) if is_reserved_tid_var(v) && !tid_slot => {
                    return Err(fail(ParseErrorKind::Reserved(v.to_string())));
                }
                Term::Null(_) | Term::Tid(_) => {
                    return Err(fail(ParseErrorKind::Syntax(format!("labelled null in rule `{a}`"))));
                }
                _ => {}
            }
        }
    }
    let rule = Rule {
        label: sym(&label),
        head: raw.head,
        existentials: raw.existentials.iter().map(|e| sym(e)).collect(),
        positive,
        negative,
        comparisons,
    };
    if let Some(detail) = analysis::rule_safety_violations(&rule).into_iter().next() {
        return Err(fail(ParseErrorKind::Unsafe { rule: label, detail }));
    }
    Ok(rule)
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_program_named("<input>", text)
}

pub fn parse_program_named(file: &str, text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(file, text)?;
    let mut rules = Vec::new();
    let mut distinct = BTreeSet::new();
    let mut arities: BTreeMap<Symbol, (Predicate, SourceSpan)> = BTreeMap::new();
    let mut labels: BTreeSet<Symbol> = BTreeSet::new();
    let mut first_internal: Option<(String, SourceSpan)> = None;
    while !p.at_eof() {
        match statement(&mut p)? {
            Statement::Distinct(name) => {
                distinct.insert(sym(&name));
            }
            Statement::Rule(raw) => {
                let span = raw.span.clone();
                let rule = build_rule(raw, rules.len() + 1)?;
                if !labels.insert(rule.label.clone()) {
                    return Err(ParseError { span, kind: ParseErrorKind::Model(format!("duplicate rule label `{}`", rule.label)) });
                }
                let atoms = std::iter::once(&rule.head).chain(&rule.positive).chain(&rule.negative);
                for a in atoms {
                    if first_internal.is_none() && a.name().starts_with("aux_") {
                        first_internal = Some((a.name().to_string(), span.clone()));
                    }
                    match arities.get(&a.pred.name) {
                        None => {
                            arities.insert(a.pred.name.clone(), (a.pred.clone(), span.clone()));
                        }
                        Some((q, _)) if q.arity != a.pred.arity || q.tidded != a.pred.tidded => {
                            let kind = if q.tidded != a.pred.tidded {
                                ParseErrorKind::Model(format!("predicate `{}` used both with and without a tid position", a.name()))
                            } else {
                                ParseErrorKind::ArityConflict { name: a.name().to_string(), first: q.arity, second: a.pred.arity }
                            };
                            return Err(ParseError { span, kind });
                        }
                        Some(_) => {}
                    }
                }
                rules.push(rule);
            }
        }
    }
    let tidded = arities.values().any(|(p, _)| p.tidded);
    if let Some((name, span)) = first_internal {
        if !tidded {
            return Err(ParseError { span, kind: ParseErrorKind::Reserved(name) });
        }
    }
    let eof = p.span();
    Program::with_distinct(rules, distinct).map_err(|e| ParseError { span: eof, kind: ParseErrorKind::Model(e.to_string()) })
}

/// Parse ground facts with optional `x n` multiplicity suffixes; repeated
/// facts add up.
pub fn parse_edb(text: &str) -> Result<MultisetInstance, ParseError> {
    parse_edb_named("<input>", text)
}

pub fn parse_edb_named(file: &str, text: &str) -> Result<MultisetInstance, ParseError> {
    let mut p = Parser::new(file, text)?;
    let mut m = MultisetInstance::new();
    while !p.at_eof() {
        let span = p.span();
        let atom = p.atom()?;
        let mut n: u64 = 1;
        if let (Tok::Ident(x), Tok::Int(k)) = (p.peek().clone(), p.peek_at(1).clone()) {
            if x == "x" {
                if k <= 0 {
                    p.next();
                    return Err(ParseError { span: p.span(), kind: ParseErrorKind::BadMultiplicity });
                }
                p.next();
                p.next();
                n = k as u64;
            }
        }
        p.expect(Tok::Dot)?;
        if !atom.is_ground() {
            return Err(ParseError { span, kind: ParseErrorKind::NotGround(atom.to_string()) });
        }
        if let Some(a) = m.atoms().find(|a| a.pred.name == atom.pred.name && a.pred.arity != atom.pred.arity) {
            let kind = ParseErrorKind::ArityConflict { name: atom.name().to_string(), first: a.pred.arity, second: atom.pred.arity };
            return Err(ParseError { span, kind });
        }
        m.add(atom, n).map_err(|e: ModelError| ParseError { span, kind: ParseErrorKind::Model(e.to_string()) })?;
    }
    Ok(m)
}

/// Parse a single atom, e.g. a query target `p(1,2)`. A trailing `.` is
/// optional.
pub fn parse_atom(text: &str) -> Result<Atom, ParseError> {
    let mut p = Parser::new("<atom>", text)?;
    let a = p.atom()?;
    if *p.peek() == Tok::Dot {
        p.next();
    }
    if !p.at_eof() {
        let found = p.peek().clone();
        return p.error(format!("unexpected {found} after atom"));
    }
    Ok(a)
}

/// Parse a tidded instance, one `p(!i1; a, b).` per fact.
pub fn parse_tidded(text: &str) -> Result<crate::model::TiddedInstance, ParseError> {
    let mut p = Parser::new("<input>", text)?;
    let mut atoms = Vec::new();
    while !p.at_eof() {
        atoms.push((p.span(), p.atom()?));
        p.expect(Tok::Dot)?;
    }
    let mut inst = crate::model::TiddedInstance::new();
    for (span, a) in atoms {
        inst.insert(a).map_err(|e| ParseError { span, kind: ParseErrorKind::Model(e.to_string()) })?;
    }
    Ok(inst)
}

pub fn serialize_program(program: &Program) -> String {
    program.to_string()
}

pub fn serialize_instance(instance: &MultisetInstance) -> String {
    instance.to_string()
}

pub fn serialize_tidded(instance: &crate::model::TiddedInstance) -> String {
    instance.to_string()
}

/// Parse an algebra expression in prefix form, e.g.
/// `project([1,2], join(r, s, [(3,1)]))`.
pub fn parse_mra(text: &str) -> Result<MraExpr, ParseError> {
    parse_mra_named("<expr>", text)
}

pub fn parse_mra_named(file: &str, text: &str) -> Result<MraExpr, ParseError> {
    let mut p = Parser::new(file, text)?;
    let e = mra_expr(&mut p)?;
    if *p.peek() == Tok::Dot {
        p.next();
    }
    if !p.at_eof() {
        let found = p.peek().clone();
        return p.error(format!("unexpected {found} after expression"));
    }
    Ok(e)
}

fn mra_expr(p: &mut Parser) -> Result<MraExpr, ParseError> {
    let name = match p.next() {
        Tok::Ident(s) => s,
        other => {
            p.pos -= 1;
            return p.error(format!("expected an expression, found {other}"));
        }
    };
    if *p.peek() != Tok::LParen {
        return Ok(MraExpr::Rel(sym(&name)));
    }
    p.next();
    let boxed = |e: MraExpr| Box::new(e);
    let e = match name.as_str() {
        "union" | "diff" | "monus" | "minintersect" => {
            let a = mra_expr(p)?;
            p.expect(Tok::Comma)?;
            let b = mra_expr(p)?;
            match name.as_str() {
                "union" => MraExpr::Union(boxed(a), boxed(b)),
                "diff" => MraExpr::Diff(boxed(a), boxed(b)),
                "monus" => MraExpr::Monus(boxed(a), boxed(b)),
                _ => MraExpr::MinIntersect(boxed(a), boxed(b)),
            }
        }
        "dedup" => MraExpr::Dedup(boxed(mra_expr(p)?)),
        "select" => {
            let a = mra_expr(p)?;
            p.expect(Tok::Comma)?;
            let conds = bracketed(p, condition)?;
            MraExpr::Select(boxed(a), conds)
        }
        "project" => {
            let cols = bracketed(p, position)?;
            p.expect(Tok::Comma)?;
            MraExpr::Project(boxed(mra_expr(p)?), cols)
        }
        "join" => {
            let a = mra_expr(p)?;
            p.expect(Tok::Comma)?;
            let b = mra_expr(p)?;
            let mut pairs = Vec::new();
            if *p.peek() == Tok::Comma {
                p.next();
                pairs = bracketed(p, |p| {
                    p.expect(Tok::LParen)?;
                    let i = position(p)?;
                    p.expect(Tok::Comma)?;
                    let j = position(p)?;
                    p.expect(Tok::RParen)?;
                    Ok((i, j))
                })?;
            }
            MraExpr::Join(boxed(a), boxed(b), pairs)
        }
        other => return p.error(format!("unknown operator `{other}`")),
    };
    p.expect(Tok::RParen)?;
    Ok(e)
}

fn bracketed<T>(p: &mut Parser, mut item: impl FnMut(&mut Parser) -> Result<T, ParseError>) -> Result<Vec<T>, ParseError> {
    p.expect(Tok::LBrack)?;
    let mut out = Vec::new();
    if *p.peek() == Tok::RBrack {
        p.next();
        return Ok(out);
    }
    loop {
        out.push(item(p)?);
        match p.next() {
            Tok::Comma => {}
            Tok::RBrack => return Ok(out),
            other => {
                p.pos -= 1;
                return p.error(format!("expected `,` or `]`, found {other}"));
            }
        }
    }
}

fn position(p: &mut Parser) -> Result<usize, ParseError> {
    match p.next() {
        Tok::Int(i) if i >= 1 => Ok(i as usize),
        other => {
            p.pos -= 1;
            p.error(format!("expected a position (1-based), found {other}"))
        }
    }
}

fn operand(p: &mut Parser) -> Result<Operand, ParseError> {
    if *p.peek() == Tok::Dollar {
        p.next();
        return Ok(Operand::Pos(position(p)?));
    }
    match p.term()? {
        Term::Const(c) => Ok(Operand::Const(c)),
        _ => {
            p.pos -= 1;
            p.error("expected `$k` or a constant")
        }
    }
}

fn condition(p: &mut Parser) -> Result<Condition, ParseError> {
    let left = operand(p)?;
    let Some((op, flip)) = p.cmp_op() else {
        let found = p.peek().clone();
        return p.error(format!("expected a comparison operator, found {found}"));
    };
    let right = operand(p)?;
    Ok(if flip { Condition { left: right, op, right: left } } else { Condition { left, op, right } })
}
