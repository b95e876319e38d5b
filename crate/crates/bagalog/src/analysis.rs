//! Static checks over programs: affected positions, variable classes, wards,
//! safety, stratification, ground negation, and the rule-splitting
//! normalization used before top-down counting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{sym, Atom, Program, Rule, Symbol, Term};

/// `P[i]`. Payload positions count from 1; index 0 is the tid slot of a
/// tidded predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub pred: Symbol,
    pub index: usize,
}

impl Position {
    pub fn new(pred: &str, index: usize) -> Self {
        Position { pred: sym(pred), index }
    }

    /// Position of argument slot `arg` of `atom`.
    pub fn of(atom: &Atom, arg: usize) -> Self {
        let index = if atom.pred.tidded { arg } else { arg + 1 };
        Position { pred: atom.pred.name.clone(), index }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.pred, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarClass {
    Harmless,
    Harmful,
    Dangerous,
}

impl VarClass {
    pub fn is_harmful(self) -> bool {
        self != VarClass::Harmless
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VarClass::Harmless => "harmless",
            VarClass::Harmful => "harmful",
            VarClass::Dangerous => "dangerous",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub rule: Option<Symbol>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Some(r) => write!(f, "{r}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("program is not stratifiable: `{0}` depends negatively on itself")]
    NotStratifiable(String),
}

pub fn all_positions(program: &Program) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    for p in program.predicates().values() {
        let first = if p.tidded { 0 } else { 1 };
        for i in first..=p.arity {
            out.insert(Position { pred: p.name.clone(), index: i });
        }
    }
    out
}

/// Least fixpoint of: existential head slots are affected; a head slot is
/// affected when its variable occurs in the positive body only at affected
/// positions. Negated atoms are ignored.
pub fn affected_positions(program: &Program) -> BTreeSet<Position> {
    let mut aff = BTreeSet::new();
    for r in program.rules() {
        for (i, t) in r.head.args.iter().enumerate() {
            if let Term::Var(v) = t {
                if r.is_existential(v) {
                    aff.insert(Position::of(&r.head, i));
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for r in program.rules() {
            for (i, t) in r.head.args.iter().enumerate() {
                let Term::Var(v) = t else { continue };
                if r.is_existential(v) {
                    continue;
                }
                let occ = body_occurrences(r, v);
                if !occ.is_empty() && occ.iter().all(|p| aff.contains(p)) && aff.insert(Position::of(&r.head, i)) {
                    changed = true;
                }
            }
        }
        if !changed {
            return aff;
        }
    }
}

fn body_occurrences(rule: &Rule, v: &str) -> Vec<Position> {
    let mut out = Vec::new();
    for a in &rule.positive {
        for (i, t) in a.args.iter().enumerate() {
            if matches!(t, Term::Var(w) if &**w == v) {
                out.push(Position::of(a, i));
            }
        }
    }
    out
}

/// Class of every positive-body variable, in first-occurrence order.
pub fn classify_variables(rule: &Rule, aff: &BTreeSet<Position>) -> Vec<(Symbol, VarClass)> {
    let head_vars: BTreeSet<&Symbol> = rule.head.vars().collect();
    rule.body_vars()
        .into_iter()
        .map(|v| {
            let harmless = body_occurrences(rule, &v).iter().any(|p| !aff.contains(p));
            let class = if harmless {
                VarClass::Harmless
            } else if head_vars.contains(&v) {
                VarClass::Dangerous
            } else {
                VarClass::Harmful
            };
            (v, class)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleWard {
    pub label: Symbol,
    pub classes: Vec<(Symbol, VarClass)>,
    /// Index into the positive body of the chosen ward.
    pub ward: Option<usize>,
    pub failure: Option<String>,
}

impl RuleWard {
    pub fn is_warded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn class_of(&self, v: &str) -> Option<VarClass> {
        self.classes.iter().find(|(w, _)| &**w == v).map(|(_, c)| *c)
    }

    pub fn dangerous(&self) -> Vec<Symbol> {
        self.classes.iter().filter(|(_, c)| *c == VarClass::Dangerous).map(|(v, _)| v.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WardReport {
    pub rules: Vec<RuleWard>,
    pub warded: bool,
    pub affected: BTreeSet<Position>,
    pub non_affected: BTreeSet<Position>,
}

impl WardReport {
    pub fn rule(&self, label: &str) -> Option<&RuleWard> {
        self.rules.iter().find(|r| &*r.label == label)
    }
}

pub fn is_warded(program: &Program) -> WardReport {
    let affected = affected_positions(program);
    let non_affected = all_positions(program).difference(&affected).cloned().collect();
    let rules: Vec<RuleWard> = program.rules().iter().map(|r| ward_rule(r, &affected)).collect();
    let warded = rules.iter().all(RuleWard::is_warded);
    WardReport { rules, warded, affected, non_affected }
}

fn ward_rule(rule: &Rule, aff: &BTreeSet<Position>) -> RuleWard {
    let classes = classify_variables(rule, aff);
    let class: BTreeMap<&Symbol, VarClass> = classes.iter().map(|(v, c)| (v, *c)).collect();
    let dangerous: Vec<&Symbol> = classes.iter().filter(|(_, c)| *c == VarClass::Dangerous).map(|(v, _)| v).collect();
    let mut out = RuleWard { label: rule.label.clone(), classes: classes.clone(), ward: None, failure: None };
    if dangerous.is_empty() {
        return out;
    }
    for (i, a) in rule.positive.iter().enumerate() {
        let vars: BTreeSet<&Symbol> = a.vars().collect();
        if !dangerous.iter().all(|d| vars.contains(d)) {
            continue;
        }
        let others: BTreeSet<&Symbol> =
            rule.positive.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, b)| b.vars()).collect();
        if vars.iter().filter(|v| others.contains(*v)).all(|v| class[v] == VarClass::Harmless) {
            out.ward = Some(i);
            return out;
        }
    }
    let names: Vec<&str> = dangerous.iter().map(|v| &***v).collect();
    out.failure = Some(format!("no body atom can serve as ward for dangerous variables {{{}}}", names.join(", ")));
    out
}

/// Violations of range restriction for one rule, as readable messages.
pub fn rule_safety_violations(rule: &Rule) -> Vec<String> {
    let pos: BTreeSet<&Symbol> = rule.positive.iter().flat_map(|a| a.vars()).collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for v in rule.head.vars() {
        if !rule.is_existential(v) && !pos.contains(v) && seen.insert(v.clone()) {
            out.push(format!("head variable `{v}` does not occur in a positive body atom"));
        }
    }
    for a in &rule.negative {
        for v in a.vars() {
            if !pos.contains(v) && seen.insert(v.clone()) {
                out.push(format!("variable `{v}` of negated atom `{a}` does not occur in a positive body atom"));
            }
        }
    }
    for c in &rule.comparisons {
        for v in c.vars() {
            if !pos.contains(v) && seen.insert(v.clone()) {
                out.push(format!("variable `{v}` of comparison `{c}` does not occur in a positive body atom"));
            }
        }
    }
    out
}

pub fn check_safety(program: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for r in program.rules() {
        for m in rule_safety_violations(r) {
            out.push(Diagnostic { rule: Some(r.label.clone()), message: m });
        }
    }
    out
}

/// Each predicate gets the length of the longest path below it that
/// crosses negative edges, counting only those edges.
pub fn stratify(program: &Program) -> Result<BTreeMap<Symbol, usize>, AnalysisError> {
    let mut stratum: BTreeMap<Symbol, usize> = program.predicates().keys().map(|p| (p.clone(), 0)).collect();
    let bound = stratum.len();
    loop {
        let mut changed = false;
        for r in program.rules() {
            let mut s = stratum[&r.head.pred.name];
            for a in &r.positive {
                s = s.max(stratum[&a.pred.name]);
            }
            for a in &r.negative {
                s = s.max(stratum[&a.pred.name] + 1);
            }
            if s > bound {
                return Err(AnalysisError::NotStratifiable(r.head.name().to_string()));
            }
            if s > stratum[&r.head.pred.name] {
                stratum.insert(r.head.pred.name.clone(), s);
                changed = true;
            }
        }
        if !changed {
            return Ok(stratum);
        }
    }
}

/// Rules grouped by the stratum of their head predicate, lowest first.
pub fn rules_by_stratum<'a>(program: &'a Program, strata: &BTreeMap<Symbol, usize>) -> Vec<Vec<&'a Rule>> {
    let top = strata.values().copied().max().unwrap_or(0);
    let mut out = vec![Vec::new(); top + 1];
    for r in program.rules() {
        out[strata[&r.head.pred.name]].push(r);
    }
    out
}

pub fn check_ground_negation(program: &Program) -> Vec<Diagnostic> {
    let aff = affected_positions(program);
    let mut out = Vec::new();
    for r in program.rules() {
        let classes = classify_variables(r, &aff);
        for a in &r.negative {
            for t in &a.args {
                let ok = match t {
                    Term::Const(_) => true,
                    Term::Var(v) => classes.iter().any(|(w, c)| w == v && *c == VarClass::Harmless),
                    _ => false,
                };
                if !ok {
                    out.push(Diagnostic {
                        rule: Some(r.label.clone()),
                        message: format!("negated atom `{a}` has non-ground argument `{t}`"),
                    });
                }
            }
        }
    }
    out
}

/// Every head term is a constant or a harmless variable.
pub fn is_head_grounded(rule: &Rule, aff: &BTreeSet<Position>) -> bool {
    let classes = classify_variables(rule, aff);
    rule.head.args.iter().all(|t| match t {
        Term::Const(_) => true,
        Term::Var(v) => classes.iter().any(|(w, c)| w == v && *c == VarClass::Harmless),
        _ => false,
    })
}

/// At most one positive body atom carries a harmful variable.
pub fn is_semi_body_grounded(rule: &Rule, aff: &BTreeSet<Position>) -> bool {
    let classes = classify_variables(rule, aff);
    let harmful: BTreeSet<&Symbol> = classes.iter().filter(|(_, c)| c.is_harmful()).map(|(v, _)| v).collect();
    rule.positive.iter().filter(|a| a.vars().any(|v| harmful.contains(v))).count() <= 1
}

pub fn is_normalized(program: &Program) -> bool {
    let aff = affected_positions(program);
    program.rules().iter().all(|r| is_head_grounded(r, &aff) || is_semi_body_grounded(r, &aff))
}

/// Split rules with more than one body atom carrying harmful variables. The
/// body atoms with harmful variables are grouped by shared harmful
/// variables; every group other than the ward is moved into a fresh rule
/// `<label>_aux<k>(shared vars) :- group.` whose head carries exactly the
/// variables the group shares with the rest of the rule.
pub fn normalize(program: &Program) -> Program {
    let aff = affected_positions(program);
    let report = is_warded(program);
    let mut taken: BTreeSet<Symbol> = program.predicates().keys().cloned().collect();
    let mut rules = Vec::new();
    for (r, w) in program.rules().iter().zip(&report.rules) {
        if is_semi_body_grounded(r, &aff) {
            rules.push(r.clone());
            continue;
        }
        let harmful: BTreeSet<&Symbol> = w.classes.iter().filter(|(_, c)| c.is_harmful()).map(|(v, _)| v).collect();
        let groups = harmful_groups(r, &harmful);
        let movable: Vec<&Vec<usize>> = groups.iter().filter(|g| w.ward.is_none_or(|i| !g.contains(&i))).collect();
        let whole_body = groups.len() == 1 && groups[0].len() == r.positive.len();
        if movable.is_empty() || whole_body {
            rules.push(r.clone());
            continue;
        }
        let mut replaced: BTreeMap<usize, Atom> = BTreeMap::new();
        let mut removed: BTreeSet<usize> = BTreeSet::new();
        let mut k = 0;
        for g in movable {
            let inside: BTreeSet<usize> = g.iter().copied().collect();
            let outside: BTreeSet<&Symbol> = std::iter::once(&r.head)
                .chain(r.positive.iter().enumerate().filter(|(i, _)| !inside.contains(i)).map(|(_, a)| a))
                .chain(&r.negative)
                .flat_map(|a| a.vars())
                .chain(r.comparisons.iter().flat_map(|c| c.vars()))
                .collect();
            let mut shared: Vec<Symbol> = Vec::new();
            for i in g {
                for v in r.positive[*i].vars() {
                    if outside.contains(v) && !shared.contains(v) {
                        shared.push(v.clone());
                    }
                }
            }
            let name = loop {
                k += 1;
                let candidate = sym(&format!("{}_aux{k}", r.label));
                if taken.insert(candidate.clone()) {
                    break candidate;
                }
            };
            let head = Atom::with_symbol(name.clone(), shared.iter().map(|v| Term::Var(v.clone())).collect());
            let body: Vec<Atom> = g.iter().map(|i| r.positive[*i].clone()).collect();
            rules.push(Rule::new(&name, head.clone(), body));
            replaced.insert(g[0], head);
            removed.extend(g.iter().skip(1).copied());
        }
        let mut positive = Vec::new();
        for (i, a) in r.positive.iter().enumerate() {
            if let Some(h) = replaced.get(&i) {
                positive.push(h.clone());
            } else if !removed.contains(&i) {
                positive.push(a.clone());
            }
        }
        rules.push(Rule { positive, ..r.clone() });
    }
    Program::with_distinct(rules, program.distinct().clone()).expect("fresh predicate names do not clash")
}

/// Connected groups (by shared harmful variables) of the body atoms that
/// carry at least one harmful variable, as sorted body indices.
fn harmful_groups(rule: &Rule, harmful: &BTreeSet<&Symbol>) -> Vec<Vec<usize>> {
    let carriers: Vec<usize> =
        (0..rule.positive.len()).filter(|i| rule.positive[*i].vars().any(|v| harmful.contains(v))).collect();
    let mut group: Vec<usize> = (0..carriers.len()).collect();
    fn find(g: &mut Vec<usize>, i: usize) -> usize {
        if g[i] != i {
            let root = find(g, g[i]);
            g[i] = root;
        }
        g[i]
    }
    for a in 0..carriers.len() {
        for b in a + 1..carriers.len() {
            let va: BTreeSet<&Symbol> = rule.positive[carriers[a]].vars().filter(|v| harmful.contains(v)).collect();
            if rule.positive[carriers[b]].vars().any(|v| va.contains(v)) {
                let (ra, rb) = (find(&mut group, a), find(&mut group, b));
                group[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in carriers.iter().enumerate() {
        let root = find(&mut group, i);
        out.entry(root).or_default().push(c);
    }
    out.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    const EX4: &str = "exists Z1: r(Y1,Z1) :- p(X1,Y1).\n\
                       exists Z2: p(X2,Z2) :- s(U2,X2,X2), r(U2,Y2).\n\
                       exists Z3: s(X3,Y3,Z3) :- p(X3,Y3), u(X3).";

    const EX8: &str = "r1: q(X,W) :- r(X,Y), s(Y,Z), t(X,W).\n\
                       r2: exists Z: r(X,Z) :- p(X,Y).\n\
                       r3: exists Z: s(X,Z) :- r(W,X), t(W,Y).\n\
                       r4: t(X,Y) :- p(X,Y).\n\
                       r5: t(X,Y) :- p(X,Z), t(Z,Y).";

    fn positions(list: &[(&str, usize)]) -> BTreeSet<Position> {
        list.iter().map(|(p, i)| Position::new(p, *i)).collect()
    }

    #[test]
    fn affected_positions_of_mutual_recursion() {
        let p = parse_program(EX4).unwrap();
        let aff = affected_positions(&p);
        assert_eq!(aff, positions(&[("p", 1), ("p", 2), ("r", 1), ("r", 2), ("s", 2), ("s", 3)]));
        let non: BTreeSet<Position> = all_positions(&p).difference(&aff).cloned().collect();
        assert_eq!(non, positions(&[("s", 1), ("u", 1)]));
    }

    #[test]
    fn affected_positions_of_join_program() {
        let p = parse_program(EX8).unwrap();
        assert_eq!(affected_positions(&p), positions(&[("r", 2), ("s", 1), ("s", 2)]));
        let plain = parse_program("p(X) :- q(X,Y), r(Y).").unwrap();
        assert!(affected_positions(&plain).is_empty());
    }

    #[test]
    fn variable_classes() {
        let p = parse_program(EX4).unwrap();
        let aff = affected_positions(&p);
        let c1 = classify_variables(&p.rules()[0], &aff);
        assert_eq!(c1, vec![(sym("X1"), VarClass::Harmful), (sym("Y1"), VarClass::Dangerous)]);
        let c2: BTreeMap<Symbol, VarClass> = classify_variables(&p.rules()[1], &aff).into_iter().collect();
        assert_eq!(c2[&sym("U2")], VarClass::Harmless);
        assert_eq!(c2[&sym("X2")], VarClass::Dangerous);
        assert_eq!(c2[&sym("Y2")], VarClass::Harmful);
        let c3: BTreeMap<Symbol, VarClass> = classify_variables(&p.rules()[2], &aff).into_iter().collect();
        assert_eq!(c3[&sym("X3")], VarClass::Harmless);
        assert_eq!(c3[&sym("Y3")], VarClass::Dangerous);
    }

    #[test]
    fn wards() {
        let p = parse_program(EX4).unwrap();
        let rep = is_warded(&p);
        assert!(rep.warded);
        assert_eq!(rep.rules[1].ward, Some(0));
        assert_eq!(rep.rules[2].ward, Some(0));
        let p = parse_program(EX8).unwrap();
        let rep = is_warded(&p);
        assert!(rep.warded);
        let r3 = rep.rule("r3").unwrap();
        assert_eq!(r3.ward, Some(0));
        assert_eq!(r3.dangerous(), vec![sym("X")]);
        assert_eq!(rep.rule("r1").unwrap().ward, None);
    }

    #[test]
    fn unwarded_rule_is_reported() {
        let text = "exists Z: a(X,Z) :- e(X).\nb(Y,W) :- a(X,Y), a(X,W).";
        let rep = is_warded(&parse_program(text).unwrap());
        assert!(!rep.warded);
        assert!(rep.rules[1].failure.is_some());
    }

    #[test]
    fn stratification() {
        let p = parse_program("p(X,Y) :- r(X,Y), not s(X,Y).\nr(X,Y) :- q(X,Y,Z).\ns(X,Y) :- t(Z,X,Y).").unwrap();
        let s = stratify(&p).unwrap();
        for q in ["q", "r", "s", "t"] {
            assert_eq!(s[q], 0);
        }
        assert_eq!(s["p"], 1);
        assert!(stratify(&parse_program("p(X) :- q(X), not p(X).").unwrap()).is_err());
        let pos = parse_program("p(X) :- q(X).\nq(X) :- p(X).").unwrap();
        assert!(stratify(&pos).unwrap().values().all(|s| *s == 0));
    }

    #[test]
    fn ground_negation() {
        let p = parse_program("exists Z: a(X,Z) :- e(X).\nb(X) :- a(X,Y), not c(Y).\nc(X) :- e(X).").unwrap();
        assert_eq!(check_ground_negation(&p).len(), 1);
        let p = parse_program("p(X,Y) :- r(X,Y), not s(X,Y).").unwrap();
        assert!(check_ground_negation(&p).is_empty());
    }

    #[test]
    fn normalization_splits_harmful_join() {
        let p = parse_program(EX8).unwrap();
        assert!(is_normalized(&p));
        assert!(!is_semi_body_grounded(&p.rules()[0], &affected_positions(&p)));
        let n = normalize(&p);
        assert!(is_normalized(&n));
        assert_eq!(n.rule("r1_aux1").unwrap().to_string(), "r1_aux1: r1_aux1(X) :- r(X, Y), s(Y, Z).");
        assert_eq!(n.rule("r1").unwrap().to_string(), "r1: q(X, W) :- r1_aux1(X), t(X, W).");
        assert_eq!(normalize(&n), n);
        let plain = parse_program("p(X) :- q(X,Y), r(Y).").unwrap();
        assert_eq!(normalize(&plain), plain);
    }
}
