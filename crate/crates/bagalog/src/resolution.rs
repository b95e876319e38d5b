//! Top-down resolution steps over ground goals and goals with nulls. Shared
//! by the proof-tree oracle and the multiplicity engine so both see the same
//! instantiations.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::analysis::{self, Position};
use crate::model::{Atom, MultisetInstance, Program, Rule, Symbol, Term};

/// One way of resolving a goal with a rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Step {
    pub rule: usize,
    /// Body variables and existentials.
    pub binding: BTreeMap<Symbol, Term>,
    /// Nulls of the goal introduced by this step.
    pub created: Vec<u32>,
    /// Nulls issued for body-only variables.
    pub fresh: Vec<u32>,
    pub body: Vec<Atom>,
    pub negated: Vec<Atom>,
}

pub(crate) struct Resolver<'a> {
    pub program: &'a Program,
    constants: Vec<Term>,
    edb: HashMap<Symbol, Vec<Vec<Term>>>,
    affected: HashSet<Position>,
    by_head: HashMap<Symbol, Vec<usize>>,
}

impl<'a> Resolver<'a> {
    pub fn new<'b, I: IntoIterator<Item = &'b Atom>>(program: &'a Program, d: &MultisetInstance, extra: I) -> Self {
        let mut consts: BTreeSet<Term> = program.constants().into_iter().map(Term::Const).collect();
        consts.extend(d.constants().into_iter().map(Term::Const));
        for a in extra {
            consts.extend(a.args.iter().filter(|t| t.is_const()).cloned());
        }
        let mut by_head: HashMap<Symbol, Vec<usize>> = HashMap::new();
        for (i, r) in program.rules().iter().enumerate() {
            by_head.entry(r.head.pred.name.clone()).or_default().push(i);
        }
        let mut edb: HashMap<Symbol, Vec<Vec<Term>>> = HashMap::new();
        for a in d.atoms() {
            if !by_head.contains_key(&a.pred.name) {
                edb.entry(a.pred.name.clone()).or_default().push(a.args.clone());
            }
        }
        Resolver {
            program,
            constants: consts.into_iter().collect(),
            edb,
            affected: analysis::affected_positions(program).into_iter().collect(),
            by_head,
        }
    }

    pub fn rule(&self, i: usize) -> &'a Rule {
        &self.program.rules()[i]
    }

    /// Whether some rule defines `pred`.
    pub fn has_rules(&self, pred: &str) -> bool {
        self.by_head.contains_key(pred)
    }

    /// Nulls may only sit at affected positions.
    pub fn nulls_well_placed(&self, a: &Atom) -> bool {
        a.args.iter().enumerate().all(|(i, t)| !matches!(t, Term::Null(_)) || self.affected.contains(&Position::of(a, i)))
    }

    /// All resolution steps for `goal`. Fresh nulls are numbered from
    /// `next_null` within each step.
    pub fn steps(&self, goal: &Atom, next_null: u32) -> Vec<Step> {
        let mut out = Vec::new();
        if !self.nulls_well_placed(goal) {
            return out;
        }
        let Some(rules) = self.by_head.get(&goal.pred.name) else { return out };
        for &ri in rules {
            let r = self.rule(ri);
            let Some((binding, created)) = match_head(r, goal) else { continue };
            let edb_atoms: Vec<usize> =
                (0..r.positive.len()).filter(|&i| !self.has_rules(r.positive[i].name())).collect();
            let mut joined = Vec::new();
            self.join_edb(r, &edb_atoms, 0, &mut binding.clone(), &mut joined);
            for b in joined {
                let rest: Vec<Symbol> = r.body_vars().into_iter().filter(|v| !b.contains_key(v)).collect();
                let passed: Vec<u32> = goal.nulls().into_iter().filter(|n| !created.contains(n)).collect();
                let mut ctx = Fill { r, ri, rest: &rest, passed: &passed, created: &created, next_null, out: &mut out };
                self.fill(&mut ctx, 0, &mut b.clone(), 0);
            }
        }
        out
    }

    fn join_edb(&self, r: &Rule, idx: &[usize], k: usize, b: &mut BTreeMap<Symbol, Term>, out: &mut Vec<BTreeMap<Symbol, Term>>) {
        if k == idx.len() {
            out.push(b.clone());
            return;
        }
        let pat = &r.positive[idx[k]];
        let Some(rows) = self.edb.get(&pat.pred.name) else { return };
        for row in rows {
            let mut trail = Vec::new();
            let mut ok = true;
            for (p, t) in pat.args.iter().zip(row) {
                match p {
                    Term::Var(v) => match b.get(v) {
                        Some(x) if x != t => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            b.insert(v.clone(), t.clone());
                            trail.push(v.clone());
                        }
                    },
                    other if other != t => {
                        ok = false;
                        break;
                    }
                    _ => {}
                }
            }
            if ok {
                self.join_edb(r, idx, k + 1, b, out);
            }
            for v in trail {
                b.remove(&v);
            }
        }
    }

    fn null_allowed(&self, r: &Rule, v: &Symbol) -> bool {
        if r.negative.iter().any(|a| a.vars().any(|w| w == v)) {
            return false;
        }
        r.positive.iter().all(|a| {
            a.args.iter().enumerate().all(|(i, t)| t.as_var() != Some(v) || self.affected.contains(&Position::of(a, i)))
        })
    }

    fn fill(&self, ctx: &mut Fill<'_, '_>, k: usize, b: &mut BTreeMap<Symbol, Term>, fresh_used: u32) {
        if k == ctx.rest.len() {
            self.finish(ctx, b, fresh_used);
            return;
        }
        let v = ctx.rest[k].clone();
        let mut cands: Vec<(Term, u32)> = self.constants.iter().map(|c| (c.clone(), fresh_used)).collect();
        if self.null_allowed(ctx.r, &v) {
            cands.extend(ctx.passed.iter().map(|n| (Term::Null(*n), fresh_used)));
            for f in 0..fresh_used {
                cands.push((Term::Null(ctx.next_null + f), fresh_used));
            }
            cands.push((Term::Null(ctx.next_null + fresh_used), fresh_used + 1));
        }
        for (t, used) in cands {
            b.insert(v.clone(), t);
            self.fill(ctx, k + 1, b, used);
        }
        b.remove(&v);
    }

    fn finish(&self, ctx: &mut Fill<'_, '_>, b: &BTreeMap<Symbol, Term>, fresh_used: u32) {
        let r = ctx.r;
        let subst = |t: &Term| match t {
            Term::Var(v) => b.get(v).cloned().unwrap_or_else(|| t.clone()),
            other => other.clone(),
        };
        if !r.comparisons.iter().all(|c| c.op.holds(&subst(&c.left), &subst(&c.right))) {
            return;
        }
        let body: Vec<Atom> = r.positive.iter().map(|a| a.map_terms(subst)).collect();
        if !body.iter().all(|a| self.nulls_well_placed(a)) {
            return;
        }
        let negated: Vec<Atom> = r.negative.iter().map(|a| a.map_terms(subst)).collect();
        if !negated.iter().all(Atom::is_ground) {
            return;
        }
        if !joins_explain_shared_nulls(r, &body, b) {
            return;
        }
        ctx.out.push(Step {
            rule: ctx.ri,
            binding: b.clone(),
            created: ctx.created.clone(),
            fresh: (0..fresh_used).map(|f| ctx.next_null + f).collect(),
            body,
            negated,
        });
    }
}

struct Fill<'c, 'o> {
    r: &'c Rule,
    ri: usize,
    rest: &'c [Symbol],
    passed: &'c [u32],
    created: &'c Vec<u32>,
    next_null: u32,
    out: &'o mut Vec<Step>,
}

/// Bind head variables against `goal`. Existential variables must meet
/// nulls that occur nowhere else in the goal.
fn match_head(r: &Rule, goal: &Atom) -> Option<(BTreeMap<Symbol, Term>, Vec<u32>)> {
    if r.head.args.len() != goal.args.len() {
        return None;
    }
    let mut b = BTreeMap::new();
    let mut created = Vec::new();
    for (h, g) in r.head.args.iter().zip(&goal.args) {
        match h {
            Term::Var(v) => {
                if r.is_existential(v) {
                    let Term::Null(n) = g else { return None };
                    if !created.contains(n) {
                        created.push(*n);
                    }
                }
                match b.get(v) {
                    Some(x) if x != g => return None,
                    Some(_) => {}
                    None => {
                        b.insert(v.clone(), g.clone());
                    }
                }
            }
            other if other != g => return None,
            _ => {}
        }
    }
    for (h, g) in r.head.args.iter().zip(&goal.args) {
        if let Term::Null(n) = g {
            let ex = matches!(h, Term::Var(v) if r.is_existential(v));
            if created.contains(n) != ex {
                return None;
            }
        }
    }
    Some((b, created))
}

/// Two body atoms may share a null only through a common variable bound
/// to it.
fn joins_explain_shared_nulls(r: &Rule, body: &[Atom], b: &BTreeMap<Symbol, Term>) -> bool {
    for i in 0..body.len() {
        let ni = body[i].nulls();
        if ni.is_empty() {
            continue;
        }
        for (j, bj) in body.iter().enumerate().skip(i + 1) {
            for n in bj.nulls() {
                if !ni.contains(&n) {
                    continue;
                }
                let joined = r.positive[i]
                    .vars()
                    .any(|x| r.positive[j].vars().any(|y| y == x) && b.get(x) == Some(&Term::Null(n)));
                if !joined {
                    return false;
                }
            }
        }
    }
    true
}

/// Rename nulls so that those of `atom` become 1..k in first-occurrence
/// order. Returns the renamed atom and the original null of each new index.
pub(crate) fn canonical_atom(atom: &Atom) -> (Atom, Vec<u32>) {
    let order = atom.nulls();
    let renamed = atom.map_terms(|t| match t {
        Term::Null(n) => Term::Null(order.iter().position(|m| m == n).expect("collected") as u32 + 1),
        other => other.clone(),
    });
    (renamed, order)
}
