//! Multiset relational algebra: expressions, a direct bag evaluator and a
//! compiler of the expressible operators into stratified Datalog.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{sym, Atom, CmpOp, Comparison, Constant, MultisetInstance, Program, Rule, Symbol, Term, TiddedInstance};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    /// 1-based column.
    Pos(usize),
    Const(Constant),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Pos(k) => write!(f, "${k}"),
            Operand::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Condition {
    pub left: Operand,
    pub op: CmpOp,
    pub right: Operand,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op.symbol(), self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MraExpr {
    Rel(Symbol),
    Union(Box<MraExpr>, Box<MraExpr>),
    Select(Box<MraExpr>, Vec<Condition>),
    /// Output columns, 1-based; repetition allowed.
    Project(Box<MraExpr>, Vec<usize>),
    /// Positional join: output is the left row followed by the right row,
    /// restricted to pairs `(i, j)` with `left[i] = right[j]`.
    Join(Box<MraExpr>, Box<MraExpr>, Vec<(usize, usize)>),
    /// All-or-nothing difference.
    Diff(Box<MraExpr>, Box<MraExpr>),
    Dedup(Box<MraExpr>),
    /// Truncated difference.
    Monus(Box<MraExpr>, Box<MraExpr>),
    /// Per-tuple minimum multiplicity.
    MinIntersect(Box<MraExpr>, Box<MraExpr>),
}

impl MraExpr {
    pub fn rel(name: &str) -> Self {
        MraExpr::Rel(sym(name))
    }

    pub fn union(a: MraExpr, b: MraExpr) -> Self {
        MraExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn select(a: MraExpr, conds: Vec<Condition>) -> Self {
        MraExpr::Select(Box::new(a), conds)
    }

    pub fn project(a: MraExpr, cols: Vec<usize>) -> Self {
        MraExpr::Project(Box::new(a), cols)
    }

    pub fn join(a: MraExpr, b: MraExpr, pairs: Vec<(usize, usize)>) -> Self {
        MraExpr::Join(Box::new(a), Box::new(b), pairs)
    }

    pub fn diff(a: MraExpr, b: MraExpr) -> Self {
        MraExpr::Diff(Box::new(a), Box::new(b))
    }

    pub fn dedup(a: MraExpr) -> Self {
        MraExpr::Dedup(Box::new(a))
    }

    pub fn monus(a: MraExpr, b: MraExpr) -> Self {
        MraExpr::Monus(Box::new(a), Box::new(b))
    }

    pub fn min_intersect(a: MraExpr, b: MraExpr) -> Self {
        MraExpr::MinIntersect(Box::new(a), Box::new(b))
    }

    /// Relation names in first-occurrence order.
    pub fn relations(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_relations(&mut out);
        out
    }

    fn collect_relations(&self, out: &mut Vec<Symbol>) {
        match self {
            MraExpr::Rel(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            MraExpr::Select(a, _) | MraExpr::Project(a, _) | MraExpr::Dedup(a) => a.collect_relations(out),
            MraExpr::Union(a, b)
            | MraExpr::Join(a, b, _)
            | MraExpr::Diff(a, b)
            | MraExpr::Monus(a, b)
            | MraExpr::MinIntersect(a, b) => {
                a.collect_relations(out);
                b.collect_relations(out);
            }
        }
    }

    pub fn is_compilable(&self) -> bool {
        match self {
            MraExpr::Rel(_) => true,
            MraExpr::Monus(..) | MraExpr::MinIntersect(..) => false,
            MraExpr::Select(a, _) | MraExpr::Project(a, _) | MraExpr::Dedup(a) => a.is_compilable(),
            MraExpr::Union(a, b) | MraExpr::Join(a, b, _) | MraExpr::Diff(a, b) => a.is_compilable() && b.is_compilable(),
        }
    }
}

impl fmt::Display for MraExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
            f.write_str("[")?;
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("]")
        }
        match self {
            MraExpr::Rel(n) => write!(f, "{n}"),
            MraExpr::Union(a, b) => write!(f, "union({a}, {b})"),
            MraExpr::Diff(a, b) => write!(f, "diff({a}, {b})"),
            MraExpr::Monus(a, b) => write!(f, "monus({a}, {b})"),
            MraExpr::MinIntersect(a, b) => write!(f, "minintersect({a}, {b})"),
            MraExpr::Dedup(a) => write!(f, "dedup({a})"),
            MraExpr::Select(a, conds) => {
                write!(f, "select({a}, ")?;
                list(f, conds)?;
                f.write_str(")")
            }
            MraExpr::Project(a, cols) => {
                f.write_str("project(")?;
                list(f, cols)?;
                write!(f, ", {a})")
            }
            MraExpr::Join(a, b, pairs) => {
                write!(f, "join({a}, {b}, [")?;
                for (i, (l, r)) in pairs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "({l}, {r})")?;
                }
                f.write_str("])")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MraError {
    #[error("relation `{0}` is not bound")]
    Unbound(String),
    #[error("relation `{0}` mixes tuples of different arity")]
    MixedArity(String),
    #[error("arity mismatch in `{expr}`: {left} vs {right}")]
    ArityMismatch { expr: String, left: usize, right: usize },
    #[error("column {col} out of range for arity {arity} in `{expr}`")]
    ColumnOutOfRange { expr: String, col: usize, arity: usize },
    #[error("multiplicity overflow in `{0}`")]
    Overflow(String),
    #[error("`{0}` is not expressible in stratified Datalog (truncated difference and minimum intersection are outside the compilable fragment)")]
    NotCompilable(String),
}

/// A bag of tuples. `arity` is unknown only for an empty input relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bag {
    pub arity: Option<usize>,
    pub rows: BTreeMap<Vec<Constant>, u64>,
}

impl Bag {
    /// Read the tuples of an instance, ignoring predicate names.
    pub fn from_instance(name: &str, inst: &MultisetInstance) -> Result<Bag, MraError> {
        let mut bag = Bag::default();
        for (a, n) in inst.iter() {
            let row: Vec<Constant> = a
                .payload()
                .iter()
                .map(|t| match t {
                    Term::Const(c) => c.clone(),
                    _ => unreachable!("instances hold ground atoms"),
                })
                .collect();
            match bag.arity {
                Some(k) if k != row.len() => return Err(MraError::MixedArity(name.to_string())),
                _ => bag.arity = Some(row.len()),
            }
            *bag.rows.entry(row).or_insert(0) += n;
        }
        Ok(bag)
    }

    pub fn to_instance(&self, pred: &str) -> MultisetInstance {
        let mut m = MultisetInstance::new();
        for (row, n) in &self.rows {
            let atom = Atom::new(pred, row.iter().cloned().map(Term::Const).collect());
            m.add(atom, *n).expect("bag rows are ground with positive counts");
        }
        m
    }

    pub fn mult(&self, row: &[Constant]) -> u64 {
        self.rows.get(row).copied().unwrap_or(0)
    }
}

pub type Env = BTreeMap<Symbol, MultisetInstance>;

/// Evaluate under bag semantics. The result instance uses predicate `ans`.
pub fn eval(e: &MraExpr, env: &Env) -> Result<MultisetInstance, MraError> {
    Ok(eval_bag(e, env)?.to_instance("ans"))
}

pub fn eval_bag(e: &MraExpr, env: &Env) -> Result<Bag, MraError> {
    let expr = || e.to_string();
    let same_arity = |a: &Bag, b: &Bag| -> Result<Option<usize>, MraError> {
        match (a.arity, b.arity) {
            (Some(x), Some(y)) if x != y => Err(MraError::ArityMismatch { expr: expr(), left: x, right: y }),
            (x, y) => Ok(x.or(y)),
        }
    };
    let check_col = |col: usize, arity: Option<usize>| -> Result<(), MraError> {
        match arity {
            Some(k) if col == 0 || col > k => Err(MraError::ColumnOutOfRange { expr: expr(), col, arity: k }),
            _ => Ok(()),
        }
    };
    match e {
        MraExpr::Rel(n) => {
            let inst = env.get(n).ok_or_else(|| MraError::Unbound(n.to_string()))?;
            Bag::from_instance(n, inst)
        }
        MraExpr::Union(a, b) => {
            let (a, b) = (eval_bag(a, env)?, eval_bag(b, env)?);
            let arity = same_arity(&a, &b)?;
            let mut rows = a.rows;
            for (row, n) in b.rows {
                let slot = rows.entry(row).or_insert(0);
                *slot = slot.checked_add(n).ok_or_else(|| MraError::Overflow(expr()))?;
            }
            Ok(Bag { arity, rows })
        }
        MraExpr::Select(a, conds) => {
            let a = eval_bag(a, env)?;
            for c in conds {
                for o in [&c.left, &c.right] {
                    if let Operand::Pos(k) = o {
                        check_col(*k, a.arity)?;
                    }
                }
            }
            let rows = a.rows.into_iter().filter(|(row, _)| conds.iter().all(|c| condition_holds(c, row))).collect();
            Ok(Bag { arity: a.arity, rows })
        }
        MraExpr::Project(a, cols) => {
            let a = eval_bag(a, env)?;
            for c in cols {
                check_col(*c, a.arity)?;
            }
            let mut rows: BTreeMap<Vec<Constant>, u64> = BTreeMap::new();
            for (row, n) in a.rows {
                let out: Vec<Constant> = cols.iter().map(|c| row[c - 1].clone()).collect();
                let slot = rows.entry(out).or_insert(0);
                *slot = slot.checked_add(n).ok_or_else(|| MraError::Overflow(expr()))?;
            }
            Ok(Bag { arity: Some(cols.len()), rows })
        }
        MraExpr::Join(a, b, pairs) => {
            let (a, b) = (eval_bag(a, env)?, eval_bag(b, env)?);
            for (i, j) in pairs {
                check_col(*i, a.arity)?;
                check_col(*j, b.arity)?;
            }
            let mut rows: BTreeMap<Vec<Constant>, u64> = BTreeMap::new();
            for (r, m) in &a.rows {
                for (s, n) in &b.rows {
                    if pairs.iter().all(|(i, j)| r[i - 1] == s[j - 1]) {
                        let mut out = r.clone();
                        out.extend(s.iter().cloned());
                        let prod = m.checked_mul(*n).ok_or_else(|| MraError::Overflow(expr()))?;
                        let slot = rows.entry(out).or_insert(0);
                        *slot = slot.checked_add(prod).ok_or_else(|| MraError::Overflow(expr()))?;
                    }
                }
            }
            let arity = match (a.arity, b.arity) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            };
            Ok(Bag { arity, rows })
        }
        MraExpr::Diff(a, b) => {
            let (a, b) = (eval_bag(a, env)?, eval_bag(b, env)?);
            let arity = same_arity(&a, &b)?;
            let rows = a.rows.into_iter().filter(|(row, _)| !b.rows.contains_key(row)).collect();
            Ok(Bag { arity, rows })
        }
        MraExpr::Dedup(a) => {
            let a = eval_bag(a, env)?;
            Ok(Bag { arity: a.arity, rows: a.rows.into_keys().map(|r| (r, 1)).collect() })
        }
        MraExpr::Monus(a, b) => {
            let (a, b) = (eval_bag(a, env)?, eval_bag(b, env)?);
            let arity = same_arity(&a, &b)?;
            let rows = a
                .rows
                .into_iter()
                .filter_map(|(row, m)| {
                    let left = m.saturating_sub(b.mult(&row));
                    (left > 0).then_some((row, left))
                })
                .collect();
            Ok(Bag { arity, rows })
        }
        MraExpr::MinIntersect(a, b) => {
            let (a, b) = (eval_bag(a, env)?, eval_bag(b, env)?);
            let arity = same_arity(&a, &b)?;
            let rows = a
                .rows
                .into_iter()
                .filter_map(|(row, m)| {
                    let k = m.min(b.mult(&row));
                    (k > 0).then_some((row, k))
                })
                .collect();
            Ok(Bag { arity, rows })
        }
    }
}

fn condition_holds(c: &Condition, row: &[Constant]) -> bool {
    let value = |o: &Operand| match o {
        Operand::Pos(k) => Term::Const(row[k - 1].clone()),
        Operand::Const(c) => Term::Const(c.clone()),
    };
    c.op.holds(&value(&c.left), &value(&c.right))
}

/// Result arity of `e` given the arities of the relations it reads.
pub fn arity_of(e: &MraExpr, schema: &BTreeMap<Symbol, usize>) -> Result<usize, MraError> {
    let expr = || e.to_string();
    let bound = |col: usize, arity: usize| {
        if col == 0 || col > arity {
            Err(MraError::ColumnOutOfRange { expr: expr(), col, arity })
        } else {
            Ok(())
        }
    };
    let same = |a: usize, b: usize| {
        if a == b {
            Ok(a)
        } else {
            Err(MraError::ArityMismatch { expr: expr(), left: a, right: b })
        }
    };
    match e {
        MraExpr::Rel(n) => schema.get(n).copied().ok_or_else(|| MraError::Unbound(n.to_string())),
        MraExpr::Union(a, b) | MraExpr::Diff(a, b) | MraExpr::Monus(a, b) | MraExpr::MinIntersect(a, b) => {
            same(arity_of(a, schema)?, arity_of(b, schema)?)
        }
        MraExpr::Dedup(a) => arity_of(a, schema),
        MraExpr::Select(a, conds) => {
            let k = arity_of(a, schema)?;
            for c in conds {
                for o in [&c.left, &c.right] {
                    if let Operand::Pos(p) = o {
                        bound(*p, k)?;
                    }
                }
            }
            Ok(k)
        }
        MraExpr::Project(a, cols) => {
            let k = arity_of(a, schema)?;
            for c in cols {
                bound(*c, k)?;
            }
            Ok(cols.len())
        }
        MraExpr::Join(a, b, pairs) => {
            let (x, y) = (arity_of(a, schema)?, arity_of(b, schema)?);
            for (i, j) in pairs {
                bound(*i, x)?;
                bound(*j, y)?;
            }
            Ok(x + y)
        }
    }
}

/// Arities of the relations bound in `env`. Empty relations are skipped.
pub fn schema_of(env: &Env) -> Result<BTreeMap<Symbol, usize>, MraError> {
    let mut out = BTreeMap::new();
    for (name, inst) in env {
        if let Some(k) = Bag::from_instance(name, inst)?.arity {
            out.insert(name.clone(), k);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compiled {
    pub program: Program,
    pub answer: Symbol,
}

/// Translate into a non-recursive program with one fresh predicate per
/// operator node. The root predicate is `ans`.
pub fn compile(e: &MraExpr, schema: &BTreeMap<Symbol, usize>) -> Result<Compiled, MraError> {
    if !e.is_compilable() {
        let bad = first_uncompilable(e).expect("checked above");
        return Err(MraError::NotCompilable(bad.to_string()));
    }
    arity_of(e, schema)?;
    let mut c = Compiler { schema, taken: schema.keys().cloned().collect(), rules: Vec::new(), distinct: BTreeSet::new(), next: 0 };
    let answer = c.fresh("ans");
    c.node(e, Some(answer.clone()))?;
    let program = Program::with_distinct(c.rules, c.distinct).expect("compiled predicates are consistent");
    Ok(Compiled { program, answer })
}

fn first_uncompilable(e: &MraExpr) -> Option<&MraExpr> {
    match e {
        MraExpr::Rel(_) => None,
        MraExpr::Monus(..) | MraExpr::MinIntersect(..) => Some(e),
        MraExpr::Select(a, _) | MraExpr::Project(a, _) | MraExpr::Dedup(a) => first_uncompilable(a),
        MraExpr::Union(a, b) | MraExpr::Join(a, b, _) | MraExpr::Diff(a, b) => {
            first_uncompilable(a).or_else(|| first_uncompilable(b))
        }
    }
}

struct Compiler<'a> {
    schema: &'a BTreeMap<Symbol, usize>,
    taken: BTreeSet<Symbol>,
    rules: Vec<Rule>,
    distinct: BTreeSet<Symbol>,
    next: usize,
}

fn vars(prefix: &str, n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::var(&format!("{prefix}{i}"))).collect()
}

impl Compiler<'_> {
    fn fresh(&mut self, base: &str) -> Symbol {
        let mut name = sym(base);
        while !self.taken.insert(name.clone()) {
            self.next += 1;
            name = sym(&format!("{base}_{}", self.next));
        }
        name
    }

    fn push(&mut self, head: Atom, positive: Vec<Atom>, negative: Vec<Atom>, comparisons: Vec<Comparison>) {
        let label = format!("m{}", self.rules.len() + 1);
        let mut r = Rule::new(&label, head, positive);
        r.negative = negative;
        r.comparisons = comparisons;
        self.rules.push(r);
    }

    /// Emit rules for `e`; return its predicate and arity. `target` names
    /// the predicate to define, forcing a copy rule for bare relations.
    fn node(&mut self, e: &MraExpr, target: Option<Symbol>) -> Result<(Symbol, usize), MraError> {
        if let MraExpr::Rel(n) = e {
            let k = self.schema[n];
            if let Some(t) = target {
                let xs = vars("X", k);
                self.push(Atom::with_symbol(t.clone(), xs.clone()), vec![Atom::with_symbol(n.clone(), xs)], vec![], vec![]);
                return Ok((t, k));
            }
            return Ok((n.clone(), k));
        }
        let me = match target {
            Some(t) => t,
            None => {
                self.next += 1;
                let base = format!("q{}", self.next);
                self.fresh(&base)
            }
        };
        let atom = |p: &Symbol, args: Vec<Term>| Atom::with_symbol(p.clone(), args);
        let arity = match e {
            MraExpr::Rel(_) => unreachable!(),
            MraExpr::Union(a, b) => {
                let (pa, k) = self.node(a, None)?;
                let (pb, _) = self.node(b, None)?;
                let xs = vars("X", k);
                self.push(atom(&me, xs.clone()), vec![atom(&pa, xs.clone())], vec![], vec![]);
                self.push(atom(&me, xs.clone()), vec![atom(&pb, xs)], vec![], vec![]);
                k
            }
            MraExpr::Select(a, conds) => {
                let (pa, k) = self.node(a, None)?;
                let xs = vars("X", k);
                let term = |o: &Operand| match o {
                    Operand::Pos(p) => xs[p - 1].clone(),
                    Operand::Const(c) => Term::Const(c.clone()),
                };
                let cmps = conds.iter().map(|c| Comparison { left: term(&c.left), op: c.op, right: term(&c.right) }).collect();
                self.push(atom(&me, xs.clone()), vec![atom(&pa, xs.clone())], vec![], cmps);
                k
            }
            MraExpr::Project(a, cols) => {
                let (pa, k) = self.node(a, None)?;
                let xs = vars("X", k);
                let head = cols.iter().map(|c| xs[c - 1].clone()).collect();
                self.push(atom(&me, head), vec![atom(&pa, xs)], vec![], vec![]);
                cols.len()
            }
            MraExpr::Join(a, b, pairs) => {
                let (pa, k) = self.node(a, None)?;
                let (pb, l) = self.node(b, None)?;
                let xs = vars("X", k);
                let mut ys = vars("Y", l);
                let mut cmps = Vec::new();
                let mut bound = vec![false; l];
                for (i, j) in pairs {
                    if bound[j - 1] {
                        cmps.push(Comparison { left: ys[j - 1].clone(), op: CmpOp::Eq, right: xs[i - 1].clone() });
                    } else {
                        bound[j - 1] = true;
                        ys[j - 1] = xs[i - 1].clone();
                    }
                }
                let mut head = xs.clone();
                head.extend(ys.iter().cloned());
                self.push(atom(&me, head), vec![atom(&pa, xs), atom(&pb, ys)], vec![], cmps);
                k + l
            }
            MraExpr::Diff(a, b) => {
                let (pa, k) = self.node(a, None)?;
                let (pb, _) = self.node(b, None)?;
                let xs = vars("X", k);
                self.push(atom(&me, xs.clone()), vec![atom(&pa, xs.clone())], vec![atom(&pb, xs)], vec![]);
                k
            }
            MraExpr::Dedup(a) => {
                let (pa, k) = self.node(a, None)?;
                let xs = vars("X", k);
                self.push(atom(&me, xs.clone()), vec![atom(&pa, xs)], vec![], vec![]);
                self.distinct.insert(me.clone());
                k
            }
            MraExpr::Monus(..) | MraExpr::MinIntersect(..) => return Err(MraError::NotCompilable(e.to_string())),
        };
        Ok((me, arity))
    }
}

/// Tid-level minimum intersection: for each payload tuple keep the tidded
/// atoms of whichever side holds fewer tids for it, the first side on a
/// tie. Predicate names are ignored. Not part of the compilable fragment.
pub fn min_intersect_tidded(p: &TiddedInstance, q: &TiddedInstance) -> TiddedInstance {
    let group = |inst: &TiddedInstance| {
        let mut g: BTreeMap<Vec<Term>, Vec<Atom>> = BTreeMap::new();
        for a in inst.iter() {
            g.entry(a.payload().to_vec()).or_default().push(a.clone());
        }
        g
    };
    let (gp, gq) = (group(p), group(q));
    let mut out = Vec::new();
    let keys: BTreeSet<&Vec<Term>> = gp.keys().chain(gq.keys()).collect();
    for k in keys {
        let left = gp.get(k).map_or(&[][..], |v| v.as_slice());
        let right = gq.get(k).map_or(&[][..], |v| v.as_slice());
        out.extend(if left.len() <= right.len() { left } else { right }.iter().cloned());
    }
    TiddedInstance::from_atoms(out).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_edb, parse_mra};

    fn env(pairs: &[(&str, &str)]) -> Env {
        pairs.iter().map(|(n, facts)| (sym(n), parse_edb(facts).unwrap())).collect()
    }

    fn row(items: &[&str]) -> Vec<Constant> {
        items.iter().map(|s| Constant::sym(s)).collect()
    }

    #[test]
    fn intersections() {
        let env = env(&[("r", "x(a) x 2. x(b)."), ("s", "x(a) x 3. x(c).")]);
        let mb = eval_bag(&parse_mra("minintersect(r, s)").unwrap(), &env).unwrap();
        assert_eq!(mb.rows, BTreeMap::from([(row(&["a"]), 2)]));
        let m = eval_bag(&parse_mra("project([1], join(r, s, [(1,1)]))").unwrap(), &env).unwrap();
        assert_eq!(m.rows, BTreeMap::from([(row(&["a"]), 6)]));
    }

    #[test]
    fn differences() {
        let env = env(&[("r", "x(r) x 2."), ("s", "x(r).")]);
        assert!(eval_bag(&parse_mra("diff(r, s)").unwrap(), &env).unwrap().rows.is_empty());
        let m = eval_bag(&parse_mra("monus(r, s)").unwrap(), &env).unwrap();
        assert_eq!(m.mult(&row(&["r"])), 1);
    }

    #[test]
    fn union_select_project() {
        let env = env(&[("r", "t(1,2) x 2. t(2,2)."), ("s", "t(1,2).")]);
        let u = eval_bag(&parse_mra("union(r, s)").unwrap(), &env).unwrap();
        assert_eq!(u.mult(&[Constant::Int(1), Constant::Int(2)]), 3);
        let sel = eval_bag(&parse_mra("select(r, [$1 < $2])").unwrap(), &env).unwrap();
        assert_eq!(sel.rows.len(), 1);
        let p = eval_bag(&parse_mra("project([2], r)").unwrap(), &env).unwrap();
        assert_eq!(p.mult(&[Constant::Int(2)]), 3);
        let d = eval_bag(&parse_mra("dedup(project([2], r))").unwrap(), &env).unwrap();
        assert_eq!(d.mult(&[Constant::Int(2)]), 1);
    }

    #[test]
    fn eval_errors() {
        let env = env(&[("r", "t(1,2)."), ("s", "t(1).")]);
        assert!(matches!(eval_bag(&parse_mra("union(r, s)").unwrap(), &env), Err(MraError::ArityMismatch { .. })));
        assert!(matches!(eval_bag(&parse_mra("q").unwrap(), &env), Err(MraError::Unbound(_))));
        assert!(matches!(eval_bag(&parse_mra("project([3], r)").unwrap(), &env), Err(MraError::ColumnOutOfRange { .. })));
    }

    #[test]
    fn compile_shapes() {
        let schema = BTreeMap::from([(sym("r"), 2), (sym("s"), 2)]);
        let c = compile(&parse_mra("union(r, s)").unwrap(), &schema).unwrap();
        let text = c.program.to_string();
        assert_eq!(text, "m1: ans(X1, X2) :- r(X1, X2).\nm2: ans(X1, X2) :- s(X1, X2).\n");
        let c = compile(&parse_mra("diff(r, s)").unwrap(), &schema).unwrap();
        assert_eq!(c.program.to_string(), "m1: ans(X1, X2) :- r(X1, X2), not s(X1, X2).\n");
        let e = compile(&parse_mra("union(r, monus(r, s))").unwrap(), &schema).unwrap_err();
        assert!(matches!(e, MraError::NotCompilable(_)));
        assert!(matches!(compile(&parse_mra("minintersect(r, s)").unwrap(), &schema), Err(MraError::NotCompilable(_))));
    }

    #[test]
    fn tid_level_intersection_prefers_first_on_tie() {
        let a = |k: u32, c: &str| Atom::tidded(sym("p"), Term::Tid(k), vec![Term::sym(c)]);
        let p = TiddedInstance::from_atoms([a(1, "a")]).unwrap();
        let q = TiddedInstance::from_atoms([a(2, "a")]).unwrap();
        assert_eq!(min_intersect_tidded(&p, &q).atoms(), &[a(1, "a")]);
        assert_eq!(min_intersect_tidded(&q, &p).atoms(), &[a(2, "a")]);
        let p3 = TiddedInstance::from_atoms([a(1, "a"), a(3, "a")]).unwrap();
        assert_eq!(min_intersect_tidded(&p3, &q).atoms(), &[a(2, "a")]);
    }
}
