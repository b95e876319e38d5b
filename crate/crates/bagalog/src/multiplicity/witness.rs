//! Witness trees: proof trees regrouped level by level into the states the
//! multiplicity engine counts, and the conversions in both directions.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::model::{Atom, Program, Symbol, Term};
use crate::trees::{NodeKind, ProofTree};

use super::{group_indices, PairSR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("no rule labelled `{0}`")]
    UnknownRule(String),
    #[error("node `{atom}` does not match rule `{rule}`")]
    Mismatch { atom: String, rule: String },
    #[error("pruned node `{0}` has no earlier creator")]
    UnknownCreator(String),
    #[error("negated leaf `{0}` outside a rule node")]
    StrayNegation(String),
    #[error("witness node lacks a subtree for `{0}`")]
    MissingChild(String),
}

/// How one atom of a witness node is justified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessStep {
    /// Introduced its nulls higher up; not resolved again.
    Known,
    Edb { copy: u64 },
    Rule { rule: Symbol, binding: BTreeMap<Symbol, Term> },
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessTree {
    pub pair: PairSR,
    /// One per atom of `pair`.
    pub steps: Vec<WitnessStep>,
    pub children: Vec<WitnessTree>,
}

impl WitnessTree {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(WitnessTree::size).sum::<usize>()
    }
}

pub fn tree_to_witness(program: &Program, t: &ProofTree) -> Result<WitnessTree, WitnessError> {
    to_witness(program, &[t], BTreeMap::new())
}

fn to_witness(program: &Program, group: &[&ProofTree], creators: BTreeMap<u32, Option<Atom>>) -> Result<WitnessTree, WitnessError> {
    let mut atoms: Vec<Atom> = Vec::new();
    let mut firsts: Vec<&ProofTree> = Vec::new();
    for n in group {
        if !n.atom.is_ground() && atoms.contains(&n.atom) {
            continue;
        }
        atoms.push(n.atom.clone());
        firsts.push(n);
    }
    let known = |a: &Atom| creators.values().any(|c| c.as_ref() == Some(a));
    let mut next = creators.clone();
    let mut steps = Vec::with_capacity(firsts.len());
    let mut below: Vec<&ProofTree> = Vec::new();
    for n in &firsts {
        if known(&n.atom) {
            steps.push(WitnessStep::Known);
            continue;
        }
        let step = match &n.kind {
            NodeKind::Pruned => return Err(WitnessError::UnknownCreator(n.atom.to_string())),
            NodeKind::Negated => return Err(WitnessError::StrayNegation(n.atom.to_string())),
            NodeKind::Edb { copy } => WitnessStep::Edb { copy: *copy },
            NodeKind::Distinct => WitnessStep::Distinct,
            NodeKind::Rule(label) => {
                let binding = reconstruct(program, label, n)?;
                for z in n.created() {
                    next.insert(z, Some(n.atom.clone()));
                }
                below.extend(n.children.iter().filter(|c| c.kind != NodeKind::Negated).map(|c| c.as_ref()));
                WitnessStep::Rule { rule: label.clone(), binding }
            }
        };
        steps.push(step);
    }
    let labels: Vec<Atom> = below.iter().map(|c| c.atom.clone()).collect();
    let mut children = Vec::new();
    for g in group_indices(&labels) {
        let members: Vec<&ProofTree> = g.iter().map(|&i| below[i]).collect();
        let mut local = BTreeMap::new();
        for m in &members {
            for z in m.atom.nulls() {
                local.insert(z, next.get(&z).cloned().flatten());
            }
        }
        children.push(to_witness(program, &members, local)?);
    }
    Ok(WitnessTree { pair: PairSR { atoms, creators }, steps, children })
}

/// Variable binding of `label` that maps its head and body onto the node
/// and its children.
fn reconstruct(program: &Program, label: &Symbol, n: &ProofTree) -> Result<BTreeMap<Symbol, Term>, WitnessError> {
    let r = program.rule(label).ok_or_else(|| WitnessError::UnknownRule(label.to_string()))?;
    let mismatch = || WitnessError::Mismatch { atom: n.atom.to_string(), rule: label.to_string() };
    let pos: Vec<&Atom> = n.children.iter().filter(|c| c.kind != NodeKind::Negated).map(|c| &c.atom).collect();
    let neg: Vec<&Atom> = n.children.iter().filter(|c| c.kind == NodeKind::Negated).map(|c| &c.atom).collect();
    if pos.len() != r.positive.len() || neg.len() != r.negative.len() {
        return Err(mismatch());
    }
    let mut b = BTreeMap::new();
    let pairs = std::iter::once((&r.head, &n.atom))
        .chain(r.positive.iter().zip(pos))
        .chain(r.negative.iter().zip(neg));
    for (pat, a) in pairs {
        if pat.pred.name != a.pred.name || pat.args.len() != a.args.len() {
            return Err(mismatch());
        }
        for (p, t) in pat.args.iter().zip(&a.args) {
            match p {
                Term::Var(v) => match b.get(v) {
                    Some(x) if x != t => return Err(mismatch()),
                    Some(_) => {}
                    None => {
                        b.insert(v.clone(), t.clone());
                    }
                },
                other if other != t => return Err(mismatch()),
                _ => {}
            }
        }
    }
    Ok(b)
}

pub fn witness_to_tree(program: &Program, w: &WitnessTree) -> Result<ProofTree, WitnessError> {
    let mut out = to_trees(program, w)?;
    if out.len() != 1 {
        return Err(WitnessError::MissingChild(w.pair.to_string()));
    }
    Ok(out.remove(0))
}

/// One tree per atom of the witness node.
fn to_trees(program: &Program, w: &WitnessTree) -> Result<Vec<ProofTree>, WitnessError> {
    let mut ground: VecDeque<ProofTree> = VecDeque::new();
    let mut shared: HashMap<Atom, ProofTree> = HashMap::new();
    for c in &w.children {
        let trees = to_trees(program, c)?;
        for (a, t) in c.pair.atoms.iter().zip(trees) {
            if a.is_ground() {
                ground.push_back(t);
            } else {
                shared.insert(a.clone(), t);
            }
        }
    }
    let mut used: HashSet<Atom> = HashSet::new();
    let mut out = Vec::with_capacity(w.pair.atoms.len());
    for (a, step) in w.pair.atoms.iter().zip(&w.steps) {
        let t = match step {
            WitnessStep::Known => ProofTree::leaf(a.clone(), NodeKind::Pruned),
            WitnessStep::Edb { copy } => ProofTree::leaf(a.clone(), NodeKind::Edb { copy: *copy }),
            WitnessStep::Distinct => ProofTree::leaf(a.clone(), NodeKind::Distinct),
            WitnessStep::Rule { rule, binding } => {
                let r = program.rule(rule).ok_or_else(|| WitnessError::UnknownRule(rule.to_string()))?;
                let subst = |t: &Term| match t {
                    Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
                    other => other.clone(),
                };
                let mut kids = Vec::with_capacity(r.positive.len() + r.negative.len());
                for b in r.positive.iter().map(|b| b.map_terms(subst)) {
                    let sub = if b.is_ground() {
                        ground.pop_front().filter(|t| t.atom == b)
                    } else {
                        shared.get(&b).map(|t| {
                            if used.contains(&b) && !t.created().is_empty() {
                                ProofTree::leaf(b.clone(), NodeKind::Pruned)
                            } else {
                                t.clone()
                            }
                        })
                    };
                    let sub = sub.ok_or_else(|| WitnessError::MissingChild(b.to_string()))?;
                    used.insert(b);
                    kids.push(Arc::new(sub));
                }
                kids.extend(r.negative.iter().map(|n| Arc::new(ProofTree::leaf(n.map_terms(subst), NodeKind::Negated))));
                ProofTree { atom: a.clone(), kind: NodeKind::Rule(rule.clone()), children: kids }
            }
        };
        out.push(t);
    }
    Ok(out)
}
