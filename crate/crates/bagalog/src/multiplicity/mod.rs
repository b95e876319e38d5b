//! Exact multiplicities of ground atoms under the proof-tree bag semantics,
//! by top-down resolution over canonical `(S, R_S)` states.

mod canonical;
mod negation;
mod witness;

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::chase::ChaseError;
use crate::model::{Atom, Multiplicity, MultisetInstance, Program, Term};
use crate::parser::is_internal_predicate;
use crate::resolution::{Resolver, Step};

pub use canonical::{canonical_form, canonicalize, CanonicalKey, PairSR};
pub use negation::{eliminate_negation, Positive};
pub use witness::{tree_to_witness, witness_to_tree, WitnessError, WitnessStep, WitnessTree};

/// Chase depth used when building the model behind negation elimination.
pub const NEGATION_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultiplicityError {
    #[error("atom `{0}` is not ground")]
    NonGround(String),
    #[error("`{0}` is an internal predicate")]
    Internal(String),
    #[error("multiplicities are computed over untidded programs")]
    Tidded,
    #[error(transparent)]
    NotStratifiable(#[from] AnalysisError),
    #[error("negated atoms must be ground: {0}")]
    NonGroundNegation(String),
    #[error("the model needed to remove negation did not saturate within depth {0}")]
    UnsaturatedNegation(usize),
    #[error(transparent)]
    Chase(#[from] ChaseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    /// Split rules that are not semi-body-grounded before resolving.
    pub normalize: bool,
    pub negation_depth: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { normalize: true, negation_depth: NEGATION_DEPTH }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    /// Distinct canonical states reached from the query.
    pub states: usize,
    pub productions: usize,
    pub resolution_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub atom: Atom,
    pub multiplicity: Multiplicity,
    pub stats: Stats,
}

/// A program and EDB prepared for multiplicity queries: negation removed
/// and, unless disabled, normalized.
#[derive(Debug, Clone)]
pub struct Engine {
    program: Program,
    instance: MultisetInstance,
}

impl Engine {
    pub fn new(program: &Program, d: &MultisetInstance) -> Result<Self, MultiplicityError> {
        Self::with_options(program, d, &EngineOptions::default())
    }

    pub fn with_options(program: &Program, d: &MultisetInstance, opts: &EngineOptions) -> Result<Self, MultiplicityError> {
        if program.is_tidded() {
            return Err(MultiplicityError::Tidded);
        }
        analysis::stratify(program)?;
        let pos = eliminate_negation(program, d, opts.negation_depth)?;
        let program = if opts.normalize { analysis::normalize(&pos.program) } else { pos.program };
        Ok(Engine { program, instance: pos.instance })
    }

    /// The positive (and possibly normalized) program queries run on.
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn instance(&self) -> &MultisetInstance {
        &self.instance
    }

    fn check(&self, atom: &Atom) -> Result<(), MultiplicityError> {
        if is_internal_predicate(atom.name()) {
            return Err(MultiplicityError::Internal(atom.name().to_string()));
        }
        if !atom.is_ground() {
            return Err(MultiplicityError::NonGround(atom.to_string()));
        }
        Ok(())
    }

    pub fn graph(&self, atom: &Atom) -> Result<PairGraph, MultiplicityError> {
        self.check(atom)?;
        Ok(PairGraph::explore(&self.program, &self.instance, PairSR::root(atom.clone())))
    }

    pub fn multiplicity(&self, atom: &Atom) -> Result<Report, MultiplicityError> {
        let g = self.graph(atom)?;
        let multiplicity = if g.is_finite() { Multiplicity::Finite(g.count()) } else { Multiplicity::Infinite };
        Ok(Report { atom: atom.clone(), multiplicity, stats: g.stats() })
    }

    pub fn is_finite(&self, atom: &Atom) -> Result<bool, MultiplicityError> {
        Ok(self.graph(atom)?.is_finite())
    }

    /// Number of trees for an arbitrary state, assuming it is finite.
    pub fn ptt(&self, pair: &PairSR) -> BigUint {
        PairGraph::explore(&self.program, &self.instance, pair.clone()).count()
    }
}

pub fn multiplicity(program: &Program, d: &MultisetInstance, atom: &Atom) -> Result<Multiplicity, MultiplicityError> {
    Ok(Engine::new(program, d)?.multiplicity(atom)?.multiplicity)
}

pub fn is_finite(program: &Program, d: &MultisetInstance, atom: &Atom) -> Result<bool, MultiplicityError> {
    Engine::new(program, d)?.is_finite(atom)
}

/// Multiplicity of every ground atom of the chase model that belongs to a
/// user predicate. Atoms with infinitely many trees are listed separately.
pub fn bag(program: &Program, d: &MultisetInstance, max_depth: usize) -> Result<(MultisetInstance, Vec<Atom>), MultiplicityError> {
    let engine = Engine::new(program, d)?;
    let model = crate::chase::standard_model(program, d, max_depth)?;
    let mut out = MultisetInstance::new();
    let mut infinite = Vec::new();
    let mut targets: Vec<&Atom> = model.atoms().iter().filter(|a| a.is_ground() && !is_internal_predicate(a.name())).collect();
    targets.sort();
    targets.dedup();
    for a in targets {
        match engine.multiplicity(a)?.multiplicity {
            Multiplicity::Infinite => infinite.push(a.clone()),
            Multiplicity::Finite(n) if n.is_zero() => {}
            Multiplicity::Finite(n) => {
                let n = u64::try_from(n).unwrap_or(u64::MAX);
                out.add(a.clone(), n).expect("ground");
            }
        }
    }
    Ok((out, infinite))
}

#[derive(Debug, Clone)]
struct Production {
    /// Child state and, per canonical null of the child, the null it stands
    /// for in this production.
    children: Vec<(usize, Vec<u32>)>,
}

#[derive(Debug, Clone)]
struct Node {
    pair: PairSR,
    base: BigUint,
    distinct: bool,
    productions: Vec<Production>,
}

/// Every canonical state reachable from a root state, with the ways each
/// one resolves into child states.
#[derive(Debug, Clone)]
pub struct PairGraph {
    nodes: Vec<Node>,
    root: usize,
    steps: usize,
}

impl PairGraph {
    fn explore(program: &Program, d: &MultisetInstance, root: PairSR) -> PairGraph {
        let resolver = Resolver::new(program, d, root.atoms.iter());
        let mut g = PairGraph { nodes: Vec::new(), root: 0, steps: 0 };
        let mut index: HashMap<CanonicalKey, usize> = HashMap::new();
        let (key, pair, _) = canonical_form(&root);
        g.root = g.intern(&mut index, key, pair, program, d);
        let mut next = 0;
        while next < g.nodes.len() {
            let (prods, steps) = expand(&resolver, &g.nodes[next].pair);
            g.steps += steps;
            let mut built = Vec::with_capacity(prods.len());
            for children in prods {
                let mut ids = Vec::with_capacity(children.len());
                for comp in children {
                    let (key, pair, order) = canonical_form(&comp);
                    ids.push((g.intern(&mut index, key, pair, program, d), order));
                }
                built.push(Production { children: ids });
            }
            g.nodes[next].productions = built;
            next += 1;
        }
        g
    }

    fn intern(&mut self, index: &mut HashMap<CanonicalKey, usize>, key: CanonicalKey, pair: PairSR, program: &Program, d: &MultisetInstance) -> usize {
        if let Some(&i) = index.get(&key) {
            return i;
        }
        let single = pair.atoms.len() == 1;
        let base = if pair.is_ground_singleton() { BigUint::from(d.mult(&pair.atoms[0])) } else { BigUint::zero() };
        let distinct = single && program.is_distinct(pair.atoms[0].name());
        self.nodes.push(Node { pair, base, distinct, productions: Vec::new() });
        index.insert(key, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    pub fn root(&self) -> &PairSR {
        &self.nodes[self.root].pair
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn stats(&self) -> Stats {
        Stats {
            states: self.nodes.len(),
            productions: self.nodes.iter().map(|n| n.productions.len()).sum(),
            resolution_steps: self.steps,
        }
    }

    pub fn productive(&self) -> Vec<bool> {
        let mut prod: Vec<bool> = self.nodes.iter().map(|n| !n.base.is_zero()).collect();
        loop {
            let mut changed = false;
            for (i, n) in self.nodes.iter().enumerate() {
                if !prod[i] && n.productions.iter().any(|p| p.children.iter().all(|(c, _)| prod[*c])) {
                    prod[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return prod;
            }
        }
    }

    /// False when a cycle of productive states is reachable from the root,
    /// which yields trees of unbounded height.
    pub fn is_finite(&self) -> bool {
        let prod = self.productive();
        if !prod[self.root] {
            return true;
        }
        let succ = |i: usize| -> Vec<usize> {
            let n = &self.nodes[i];
            if n.distinct {
                return Vec::new();
            }
            n.productions
                .iter()
                .filter(|p| p.children.iter().all(|(c, _)| prod[*c]))
                .flat_map(|p| p.children.iter().map(|(c, _)| *c))
                .collect()
        };
        // 0 unseen, 1 on the stack, 2 done
        let mut color = vec![0u8; self.nodes.len()];
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(self.root, succ(self.root), 0)];
        color[self.root] = 1;
        while let Some((_, kids, pos)) = stack.last_mut() {
            if *pos < kids.len() {
                let c = kids[*pos];
                *pos += 1;
                match color[c] {
                    1 => return false,
                    0 => {
                        color[c] = 1;
                        let s = succ(c);
                        stack.push((c, s, 0));
                    }
                    _ => {}
                }
            } else {
                let (n, _, _) = stack.pop().expect("non-empty");
                color[n] = 2;
            }
        }
        true
    }

    /// Number of trees of the root state. States met again on the current
    /// path contribute nothing, so the result is exact only for finite
    /// graphs.
    pub fn count(&self) -> BigUint {
        let prod = self.productive();
        let mut memo: Vec<Option<BigUint>> = vec![None; self.nodes.len()];
        let mut on_stack = vec![false; self.nodes.len()];
        self.count_from(self.root, &prod, &mut memo, &mut on_stack)
    }

    fn count_from(&self, i: usize, prod: &[bool], memo: &mut [Option<BigUint>], on_stack: &mut [bool]) -> BigUint {
        if on_stack[i] {
            return BigUint::zero();
        }
        if let Some(v) = &memo[i] {
            return v.clone();
        }
        let n = &self.nodes[i];
        if n.distinct {
            let v = if prod[i] { BigUint::one() } else { BigUint::zero() };
            memo[i] = Some(v.clone());
            return v;
        }
        on_stack[i] = true;
        let mut total = n.base.clone();
        for p in &n.productions {
            if !p.children.iter().all(|(c, _)| prod[*c]) {
                continue;
            }
            let mut v = BigUint::one();
            for (c, _) in &p.children {
                v *= self.count_from(*c, prod, memo, on_stack);
                if v.is_zero() {
                    break;
                }
            }
            total += v;
        }
        on_stack[i] = false;
        memo[i] = Some(total.clone());
        total
    }
}

/// All ways to resolve one state, each given as its list of child
/// components, plus the number of single-atom resolution steps tried.
fn expand(resolver: &Resolver<'_>, pair: &PairSR) -> (Vec<Vec<PairSR>>, usize) {
    if pair.is_ground_singleton() && !resolver.has_rules(pair.atoms[0].name()) {
        return (Vec::new(), 0);
    }
    let known = |a: &Atom| pair.creators.values().any(|c| c.as_ref() == Some(a));
    let open: Vec<&Atom> = pair.atoms.iter().filter(|a| !known(a)).collect();
    let top = pair.nulls().into_iter().max().unwrap_or(0);
    let mut per_atom: Vec<Vec<Step>> = Vec::with_capacity(open.len());
    let mut tried = 0;
    for a in &open {
        let steps: Vec<Step> = resolver
            .steps(a, top + 1)
            .into_iter()
            .filter(|s| s.created.iter().all(|z| !matches!(pair.creators.get(z), Some(Some(_)))))
            .collect();
        tried += steps.len();
        if steps.is_empty() {
            return (Vec::new(), tried);
        }
        per_atom.push(steps);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; per_atom.len()];
    loop {
        if let Some(children) = combine(pair, &open, &per_atom, &idx, top) {
            out.push(children);
        }
        if !bump(&mut idx, &per_atom) {
            break;
        }
    }
    (out, tried)
}

fn bump(idx: &mut [usize], lists: &[Vec<Step>]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < lists[i].len() {
            return true;
        }
        idx[i] = 0;
    }
    false
}

fn combine(pair: &PairSR, open: &[&Atom], per_atom: &[Vec<Step>], idx: &[usize], top: u32) -> Option<Vec<PairSR>> {
    let mut creators = pair.creators.clone();
    let mut claimed: BTreeMap<u32, usize> = BTreeMap::new();
    let mut body: Vec<Atom> = Vec::new();
    let mut counter = top;
    for (k, (a, steps)) in open.iter().zip(per_atom).enumerate() {
        let s = &steps[idx[k]];
        for z in &s.created {
            if claimed.insert(*z, k).is_some() {
                return None;
            }
            creators.insert(*z, Some((*a).clone()));
        }
        let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
        for f in &s.fresh {
            counter += 1;
            remap.insert(*f, counter);
            creators.insert(counter, None);
        }
        for b in &s.body {
            body.push(b.map_terms(|t| match t {
                Term::Null(n) => Term::Null(*remap.get(n).unwrap_or(n)),
                other => other.clone(),
            }));
        }
    }
    Some(components(&body, &creators))
}

/// Split a multiset of body atoms into states: ground atoms each on their
/// own, the rest grouped by shared nulls.
fn components(body: &[Atom], creators: &BTreeMap<u32, Option<Atom>>) -> Vec<PairSR> {
    group_indices(body)
        .into_iter()
        .map(|g| {
            let atoms: Vec<Atom> = g.into_iter().map(|i| body[i].clone()).collect();
            let mut local = BTreeMap::new();
            for a in &atoms {
                for z in a.nulls() {
                    local.insert(z, creators.get(&z).cloned().flatten());
                }
            }
            PairSR { atoms, creators: local }
        })
        .collect()
}

/// Indices of `atoms` grouped as in [`components`], groups ordered by first
/// occurrence. Repeats of a non-ground atom keep only the first index.
pub(crate) fn group_indices(atoms: &[Atom]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of: BTreeMap<u32, usize> = BTreeMap::new();
    let mut order: Vec<usize> = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        if a.is_ground() {
            groups.push(vec![i]);
            order.push(groups.len() - 1);
            continue;
        }
        let mut hits: Vec<usize> = a.nulls().iter().filter_map(|z| group_of.get(z).copied()).collect();
        hits.sort();
        hits.dedup();
        let target = match hits.first() {
            Some(&g) => g,
            None => {
                groups.push(Vec::new());
                order.push(groups.len() - 1);
                groups.len() - 1
            }
        };
        for &g in hits.iter().skip(1) {
            let moved = std::mem::take(&mut groups[g]);
            for &m in &moved {
                for z in atoms[m].nulls() {
                    group_of.insert(z, target);
                }
            }
            groups[target].extend(moved);
            order.retain(|&o| o != g);
        }
        if !groups[target].iter().any(|&j| atoms[j] == *a) {
            groups[target].push(i);
        }
        for z in a.nulls() {
            group_of.insert(z, target);
        }
    }
    order
        .into_iter()
        .map(|g| {
            let mut members = std::mem::take(&mut groups[g]);
            members.sort();
            members
        })
        .collect()
}
