//! Terms, atoms, rules, programs, bag and tidded instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

pub type Symbol = Arc<str>;

pub fn sym(s: &str) -> Symbol {
    Arc::from(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate rule label `{0}`")]
    DuplicateLabel(String),
    #[error("predicate `{name}` used with arity {first} and {second}")]
    ArityConflict { name: String, first: usize, second: usize },
    #[error("predicate `{0}` used both with and without a tid position")]
    TidConflict(String),
    #[error("atom `{0}` is not ground")]
    NotGround(String),
    #[error("multiplicity must be positive for `{0}`")]
    ZeroMultiplicity(String),
    #[error("multiplicity overflow for `{0}`")]
    Overflow(String),
    #[error("atom `{0}` does not carry a tid in position 0")]
    MissingTid(String),
    #[error("tid {0} occurs in more than one atom")]
    DuplicateTid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constant {
    Int(i64),
    Sym(Symbol),
}

impl Constant {
    pub fn sym(s: &str) -> Self {
        Constant::Sym(sym(s))
    }
}

fn is_plain_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(i) => write!(f, "{i}"),
            Constant::Sym(s) if is_plain_symbol(s) => write!(f, "{s}"),
            Constant::Sym(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// A term. Ordinary nulls and tids use disjoint index spaces starting at 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Constant),
    Var(Symbol),
    Null(u32),
    Tid(u32),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(sym(name))
    }

    pub fn sym(name: &str) -> Self {
        Term::Const(Constant::sym(name))
    }

    pub fn int(i: i64) -> Self {
        Term::Const(Constant::Int(i))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_labelled_null(&self) -> bool {
        matches!(self, Term::Null(_) | Term::Tid(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Null(k) => write!(f, "_n{k}"),
            Term::Tid(k) => write!(f, "!i{k}"),
        }
    }
}

/// Predicate signature. `arity` counts payload positions only; a tidded
/// predicate has one extra position 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    pub name: Symbol,
    pub arity: usize,
    pub tidded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: Predicate,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: &str, args: Vec<Term>) -> Self {
        Atom::with_symbol(sym(name), args)
    }

    pub fn with_symbol(name: Symbol, args: Vec<Term>) -> Self {
        Atom { pred: Predicate { name, arity: args.len(), tidded: false }, args }
    }

    pub fn tidded(name: Symbol, tid: Term, payload: Vec<Term>) -> Self {
        let arity = payload.len();
        let mut args = Vec::with_capacity(arity + 1);
        args.push(tid);
        args.extend(payload);
        Atom { pred: Predicate { name, arity, tidded: true }, args }
    }

    pub fn name(&self) -> &str {
        &self.pred.name
    }

    pub fn payload(&self) -> &[Term] {
        if self.pred.tidded {
            &self.args[1..]
        } else {
            &self.args
        }
    }

    pub fn tid(&self) -> Option<&Term> {
        if self.pred.tidded {
            self.args.first()
        } else {
            None
        }
    }

    /// All arguments, including any tid, are constants.
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_const)
    }

    pub fn payload_is_ground(&self) -> bool {
        self.payload().iter().all(Term::is_const)
    }

    pub fn has_nulls(&self) -> bool {
        self.args.iter().any(|t| matches!(t, Term::Null(_)))
    }

    /// Ordinary nulls in first-occurrence order.
    pub fn nulls(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for t in &self.args {
            if let Term::Null(k) = t {
                if !out.contains(k) {
                    out.push(*k);
                }
            }
        }
        out
    }

    pub fn vars(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(Term::as_var)
    }

    /// Drop position 0 of a tidded atom.
    pub fn strip_tid(&self) -> Atom {
        Atom::with_symbol(self.pred.name.clone(), self.payload().to_vec())
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.iter().map(&mut f).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred.name)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        let mut rest: &[Term] = &self.args;
        if self.pred.tidded {
            write!(f, "{}", self.args[0])?;
            rest = &self.args[1..];
            f.write_str(if rest.is_empty() { ";" } else { "; " })?;
        }
        for (i, t) in rest.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }

    /// Equality tests compare terms structurally; order tests only hold
    /// between constants.
    pub fn holds(self, left: &Term, right: &Term) -> bool {
        match self {
            CmpOp::Eq => left == right,
            CmpOp::Ne => left != right,
            CmpOp::Lt | CmpOp::Le => match (left, right) {
                (Term::Const(a), Term::Const(b)) => {
                    if self == CmpOp::Lt {
                        a < b
                    } else {
                        a <= b
                    }
                }
                _ => false,
            },
        }
    }
}

/// Built-in comparison literal in a rule body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparison {
    pub left: Term,
    pub op: CmpOp,
    pub right: Term,
}

impl Comparison {
    pub fn vars(&self) -> impl Iterator<Item = &Symbol> {
        [&self.left, &self.right].into_iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op.symbol(), self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub label: Symbol,
    pub head: Atom,
    pub existentials: Vec<Symbol>,
    pub positive: Vec<Atom>,
    pub negative: Vec<Atom>,
    pub comparisons: Vec<Comparison>,
}

impl Rule {
    pub fn new(label: &str, head: Atom, positive: Vec<Atom>) -> Self {
        Rule {
            label: sym(label),
            head,
            existentials: Vec::new(),
            positive,
            negative: Vec::new(),
            comparisons: Vec::new(),
        }
    }

    pub fn is_existential(&self, v: &str) -> bool {
        self.existentials.iter().any(|e| &**e == v)
    }

    /// Variables of the positive body in first-occurrence order.
    pub fn body_vars(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Vec::new();
        for a in &self.positive {
            for v in a.vars() {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Head variables that are not existential.
    pub fn frontier(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Vec::new();
        for v in self.head.vars() {
            if !self.is_existential(v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }

    pub fn body_len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.label)?;
        if !self.existentials.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in self.existentials.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(v)?;
            }
            f.write_str(": ")?;
        }
        write!(f, "{}", self.head)?;
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if first {
                first = false;
                f.write_str(" :- ")
            } else {
                f.write_str(", ")
            }
        };
        for a in &self.positive {
            sep(f)?;
            write!(f, "{a}")?;
        }
        for a in &self.negative {
            sep(f)?;
            write!(f, "not {a}")?;
        }
        for c in &self.comparisons {
            sep(f)?;
            write!(f, "{c}")?;
        }
        f.write_str(".")
    }
}

/// A rule set together with its predicate table. Predicates declared
/// `distinct` carry set semantics: every derivable tuple counts once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    rules: Vec<Rule>,
    distinct: BTreeSet<Symbol>,
    preds: BTreeMap<Symbol, Predicate>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Result<Self, ModelError> {
        Program::with_distinct(rules, BTreeSet::new())
    }

    pub fn with_distinct(rules: Vec<Rule>, distinct: BTreeSet<Symbol>) -> Result<Self, ModelError> {
        let mut labels = BTreeSet::new();
        let mut preds: BTreeMap<Symbol, Predicate> = BTreeMap::new();
        for r in &rules {
            if !labels.insert(r.label.clone()) {
                return Err(ModelError::DuplicateLabel(r.label.to_string()));
            }
            let atoms = std::iter::once(&r.head).chain(&r.positive).chain(&r.negative);
            for a in atoms {
                register(&mut preds, &a.pred)?;
            }
        }
        Ok(Program { rules, distinct, preds })
    }

    pub fn empty() -> Self {
        Program { rules: Vec::new(), distinct: BTreeSet::new(), preds: BTreeMap::new() }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, label: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &*r.label == label)
    }

    pub fn distinct(&self) -> &BTreeSet<Symbol> {
        &self.distinct
    }

    pub fn is_distinct(&self, name: &str) -> bool {
        self.distinct.contains(name)
    }

    pub fn predicates(&self) -> &BTreeMap<Symbol, Predicate> {
        &self.preds
    }

    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.preds.get(name)
    }

    /// A predicate is intensional when it heads some rule.
    pub fn is_idb(&self, name: &str) -> bool {
        self.rules.iter().any(|r| r.head.name() == name)
    }

    pub fn idb_predicates(&self) -> BTreeSet<Symbol> {
        self.rules.iter().map(|r| r.head.pred.name.clone()).collect()
    }

    pub fn edb_predicates(&self) -> BTreeSet<Symbol> {
        let idb = self.idb_predicates();
        self.preds.keys().filter(|p| !idb.contains(*p)).cloned().collect()
    }

    pub fn is_tidded(&self) -> bool {
        self.preds.values().any(|p| p.tidded)
    }

    pub fn has_negation(&self) -> bool {
        self.rules.iter().any(|r| !r.negative.is_empty())
    }

    pub fn has_existentials(&self) -> bool {
        self.rules.iter().any(|r| !r.existentials.is_empty())
    }

    pub fn max_body_len(&self) -> usize {
        self.rules.iter().map(|r| r.positive.len()).max().unwrap_or(0)
    }

    pub fn constants(&self) -> BTreeSet<Constant> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            let atoms = std::iter::once(&r.head).chain(&r.positive).chain(&r.negative);
            for a in atoms {
                for t in &a.args {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
            for c in &r.comparisons {
                for t in [&c.left, &c.right] {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
        }
        out
    }
}

fn register(preds: &mut BTreeMap<Symbol, Predicate>, p: &Predicate) -> Result<(), ModelError> {
    match preds.get(&p.name) {
        None => {
            preds.insert(p.name.clone(), p.clone());
            Ok(())
        }
        Some(q) if q.arity != p.arity => Err(ModelError::ArityConflict {
            name: p.name.to_string(),
            first: q.arity,
            second: p.arity,
        }),
        Some(q) if q.tidded != p.tidded => Err(ModelError::TidConflict(p.name.to_string())),
        Some(_) => Ok(()),
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.distinct {
            writeln!(f, "distinct {d}.")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Ground atoms with positive multiplicities.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultisetInstance {
    entries: BTreeMap<Atom, u64>,
}

impl MultisetInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, atom: Atom, n: u64) -> Result<(), ModelError> {
        if n == 0 {
            return Err(ModelError::ZeroMultiplicity(atom.to_string()));
        }
        if !atom.is_ground() {
            return Err(ModelError::NotGround(atom.to_string()));
        }
        if let Some(slot) = self.entries.get_mut(&atom) {
            *slot = slot.checked_add(n).ok_or_else(|| ModelError::Overflow(atom.to_string()))?;
        } else {
            self.entries.insert(atom, n);
        }
        Ok(())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Atom, u64)>>(pairs: I) -> Result<Self, ModelError> {
        let mut m = MultisetInstance::new();
        for (a, n) in pairs {
            m.add(a, n)?;
        }
        Ok(m)
    }

    pub fn mult(&self, atom: &Atom) -> u64 {
        self.entries.get(atom).copied().unwrap_or(0)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.entries.contains_key(atom)
    }

    pub fn remove(&mut self, atom: &Atom) -> Option<u64> {
        self.entries.remove(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, u64)> {
        self.entries.iter().map(|(a, n)| (a, *n))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.entries.keys()
    }

    /// Number of distinct atoms.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all multiplicities.
    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn constants(&self) -> BTreeSet<Constant> {
        let mut out = BTreeSet::new();
        for a in self.entries.keys() {
            for t in &a.args {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }

    /// Restrict to the atoms of one predicate.
    pub fn restrict_to(&self, name: &str) -> MultisetInstance {
        MultisetInstance {
            entries: self.entries.iter().filter(|(a, _)| a.name() == name).map(|(a, n)| (a.clone(), *n)).collect(),
        }
    }

    /// Copy-indexed expansion: an atom of multiplicity n yields indices 1..=n.
    pub fn expand_colored(&self) -> Vec<(Atom, u32)> {
        let mut out = Vec::new();
        for (a, n) in &self.entries {
            for k in 1..=*n {
                out.push((a.clone(), k as u32));
            }
        }
        out
    }

    /// Forget copy indices and count.
    pub fn collapse_colored<'a, I: IntoIterator<Item = &'a (Atom, u32)>>(colored: I) -> Self {
        let mut m = MultisetInstance::new();
        for (a, _) in colored {
            *m.entries.entry(a.clone()).or_insert(0) += 1;
        }
        m
    }
}

impl fmt::Display for MultisetInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, n) in &self.entries {
            if *n == 1 {
                writeln!(f, "{a}.")?;
            } else {
                writeln!(f, "{a} x {n}.")?;
            }
        }
        Ok(())
    }
}

/// Atoms whose position 0 holds a tid. Each tid occurs in at most one atom.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TiddedInstance {
    atoms: Vec<Atom>,
    tids: BTreeSet<u32>,
}

impl TiddedInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, atom: Atom) -> Result<(), ModelError> {
        let k = match atom.tid() {
            Some(Term::Tid(k)) => *k,
            _ => return Err(ModelError::MissingTid(atom.to_string())),
        };
        if !self.tids.insert(k) {
            return Err(ModelError::DuplicateTid(format!("!i{k}")));
        }
        self.atoms.push(atom);
        Ok(())
    }

    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Result<Self, ModelError> {
        let mut t = TiddedInstance::new();
        for a in atoms {
            t.insert(a)?;
        }
        Ok(t)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn max_tid(&self) -> u32 {
        self.tids.iter().next_back().copied().unwrap_or(0)
    }
}

impl fmt::Display for TiddedInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.atoms {
            writeln!(f, "{a}.")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Multiplicity {
    Finite(BigUint),
    Infinite,
}

impl Multiplicity {
    pub fn finite(n: u64) -> Self {
        Multiplicity::Finite(BigUint::from(n))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Multiplicity::Finite(_))
    }

    pub fn value(&self) -> Option<&BigUint> {
        match self {
            Multiplicity::Finite(n) => Some(n),
            Multiplicity::Infinite => None,
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(n) => write!(f, "{n}"),
            Multiplicity::Infinite => f.write_str("inf"),
        }
    }
}

/// Issues fresh tids and ordinary nulls, each from its own counter.
#[derive(Debug, Clone, Default)]
pub struct NullSupply {
    last_tid: u32,
    last_null: u32,
}

impl NullSupply {
    pub fn new() -> Self {
        Self::default()
    }

    /// Continue numbering after every tid and null already present in `atoms`.
    pub fn after<'a, I: IntoIterator<Item = &'a Atom>>(atoms: I) -> Self {
        let mut s = NullSupply::new();
        for a in atoms {
            for t in &a.args {
                match t {
                    Term::Tid(k) => s.last_tid = s.last_tid.max(*k),
                    Term::Null(k) => s.last_null = s.last_null.max(*k),
                    _ => {}
                }
            }
        }
        s
    }

    pub fn fresh_tid(&mut self) -> Term {
        self.last_tid += 1;
        Term::Tid(self.last_tid)
    }

    pub fn fresh_null(&mut self) -> Term {
        self.last_null += 1;
        Term::Null(self.last_null)
    }

    pub fn last_tid(&self) -> u32 {
        self.last_tid
    }

    pub fn last_null(&self) -> u32 {
        self.last_null
    }
}

/// Issue the tid following `counter`, advancing it.
pub fn fresh_tid(counter: &mut NullSupply) -> Term {
    counter.fresh_tid()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(name: &str, args: &[&str]) -> Atom {
        Atom::new(name, args.iter().map(|s| Term::sym(s)).collect())
    }

    #[test]
    fn tid_counter_is_monotone() {
        let mut s = NullSupply::new();
        assert_eq!(fresh_tid(&mut s), Term::Tid(1));
        assert_eq!(fresh_tid(&mut s), Term::Tid(2));
        let mut t = NullSupply::after([&Atom::tidded(sym("p"), Term::Tid(6), vec![])]);
        assert_eq!(t.fresh_tid(), Term::Tid(7));
        assert_eq!(t.fresh_null(), Term::Null(1));
    }

    #[test]
    fn colored_expansion() {
        let m = MultisetInstance::from_pairs([(a("a", &[]), 3), (a("b", &[]), 2), (a("c", &[]), 1)]).unwrap();
        let col = m.expand_colored();
        assert_eq!(col.len(), 6);
        assert_eq!(col[0], (a("a", &[]), 1));
        assert_eq!(col[2], (a("a", &[]), 3));
        assert_eq!(MultisetInstance::collapse_colored(&col), m);
        assert!(MultisetInstance::new().expand_colored().is_empty());
        let t = MultisetInstance::from_pairs([(a("t", &["4", "1", "2"]), 2)]).unwrap();
        let col = t.expand_colored();
        assert_eq!(col.iter().map(|(_, k)| *k).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn rendering() {
        let t = Atom::tidded(sym("p"), Term::Tid(13), vec![Term::int(1), Term::int(2)]);
        assert_eq!(t.to_string(), "p(!i13; 1, 2)");
        assert_eq!(Term::Null(4).to_string(), "_n4");
        assert_eq!(Term::sym("Hello world").to_string(), "\"Hello world\"");
        assert_eq!(Atom::new("q", vec![]).to_string(), "q");
    }

    #[test]
    fn program_checks_arity_and_labels() {
        let r1 = Rule::new("r1", a("p", &["a"]), vec![]);
        let r2 = Rule::new("r1", a("q", &["a"]), vec![]);
        assert!(matches!(Program::new(vec![r1.clone(), r2]), Err(ModelError::DuplicateLabel(_))));
        let r3 = Rule::new("r2", a("p", &["a", "b"]), vec![]);
        assert!(matches!(Program::new(vec![r1, r3]), Err(ModelError::ArityConflict { .. })));
    }

    #[test]
    fn multiset_rejects_bad_entries() {
        let mut m = MultisetInstance::new();
        assert!(m.add(a("p", &["a"]), 0).is_err());
        assert!(m.add(Atom::new("p", vec![Term::var("X")]), 1).is_err());
        m.add(a("p", &["a"]), 2).unwrap();
        m.add(a("p", &["a"]), 1).unwrap();
        assert_eq!(m.mult(&a("p", &["a"])), 3);
        assert_eq!(m.total(), 3);
    }

    #[test]
    fn tidded_instance_rejects_reused_tid() {
        let mut t = TiddedInstance::new();
        t.insert(Atom::tidded(sym("p"), Term::Tid(1), vec![Term::sym("a")])).unwrap();
        assert!(t.insert(Atom::tidded(sym("q"), Term::Tid(1), vec![])).is_err());
        assert!(t.insert(a("p", &["a"])).is_err());
    }
}
