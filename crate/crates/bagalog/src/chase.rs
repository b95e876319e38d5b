//! Oblivious chase, evaluated stratum by stratum with semi-naive rounds and a
//! per-atom derivation depth bound.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::model::{Atom, Comparison, MultisetInstance, NullSupply, Program, Rule, Symbol, Term, TiddedInstance};
use crate::transform::{self, TransformError};

pub const DEFAULT_MAX_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChaseError {
    #[error(transparent)]
    NotStratifiable(#[from] AnalysisError),
    #[error("negated predicate `{0}` belongs to a stratum that did not saturate within the depth bound")]
    UnsaturatedNegation(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChaseOptions {
    pub max_depth: usize,
    /// Stop once the instance holds this many atoms.
    pub max_atoms: Option<usize>,
    pub record_steps: bool,
}

impl Default for ChaseOptions {
    fn default() -> Self {
        ChaseOptions { max_depth: DEFAULT_MAX_DEPTH, max_atoms: None, record_steps: true }
    }
}

impl ChaseOptions {
    pub fn depth(max_depth: usize) -> Self {
        ChaseOptions { max_depth, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaseStep {
    pub index: usize,
    pub stratum: usize,
    pub rule: Symbol,
    /// Body variables plus existentials, in binding order.
    pub hom: Vec<(Symbol, Term)>,
    pub atom: Atom,
    /// False when the atom was already present.
    pub added: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaseResult {
    atoms: Vec<Atom>,
    depth: Vec<usize>,
    pub steps: Vec<ChaseStep>,
    pub saturated: bool,
    pub depth_reached: usize,
}

impl ChaseResult {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn depth_of(&self, atom: &Atom) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom).map(|i| self.depth[i])
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    /// The atoms carrying a tid.
    pub fn tidded(&self) -> TiddedInstance {
        TiddedInstance::from_atoms(self.atoms.iter().filter(|a| a.pred.tidded).cloned()).expect("chase issues each tid once")
    }

    /// The atoms without a tid position.
    pub fn plain(&self) -> Vec<Atom> {
        self.atoms.iter().filter(|a| !a.pred.tidded).cloned().collect()
    }
}

/// Indexed atom store. Atoms keep insertion order.
struct Store {
    atoms: Vec<Atom>,
    depth: Vec<usize>,
    set: HashSet<Atom>,
    by_pred: HashMap<Symbol, Vec<usize>>,
    by_arg: HashMap<(Symbol, usize, Term), Vec<usize>>,
}

impl Store {
    fn new() -> Self {
        Store { atoms: Vec::new(), depth: Vec::new(), set: HashSet::new(), by_pred: HashMap::new(), by_arg: HashMap::new() }
    }

    fn insert(&mut self, a: Atom, depth: usize) -> bool {
        if self.set.contains(&a) {
            return false;
        }
        let i = self.atoms.len();
        self.by_pred.entry(a.pred.name.clone()).or_default().push(i);
        for (p, t) in a.args.iter().enumerate() {
            self.by_arg.entry((a.pred.name.clone(), p, t.clone())).or_default().push(i);
        }
        self.set.insert(a.clone());
        self.atoms.push(a);
        self.depth.push(depth);
        true
    }

    /// Candidate indices for `pattern` under `binding`, in insertion order.
    fn candidates(&self, pattern: &Atom, binding: &Binding) -> &[usize] {
        for (p, t) in pattern.args.iter().enumerate() {
            let key = match t {
                Term::Var(v) => match binding.get(v) {
                    Some(b) => b.clone(),
                    None => continue,
                },
                other => other.clone(),
            };
            return self.by_arg.get(&(pattern.pred.name.clone(), p, key)).map_or(&[], |v| v.as_slice());
        }
        self.by_pred.get(&pattern.pred.name).map_or(&[], |v| v.as_slice())
    }
}

type Binding = HashMap<Symbol, Term>;

fn unify(pattern: &Atom, atom: &Atom, binding: &mut Binding, trail: &mut Vec<Symbol>) -> bool {
    if pattern.pred != atom.pred {
        return false;
    }
    for (p, t) in pattern.args.iter().zip(&atom.args) {
        match p {
            Term::Var(v) => match binding.get(v) {
                Some(b) => {
                    if b != t {
                        return false;
                    }
                }
                None => {
                    binding.insert(v.clone(), t.clone());
                    trail.push(v.clone());
                }
            },
            other => {
                if other != t {
                    return false;
                }
            }
        }
    }
    true
}

fn apply(t: &Term, binding: &Binding) -> Term {
    match t {
        Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    }
}

fn comparisons_hold(cmps: &[Comparison], binding: &Binding) -> bool {
    cmps.iter().all(|c| c.op.holds(&apply(&c.left, binding), &apply(&c.right, binding)))
}

/// Index ranges per body atom: the delta atom uses `[lo, hi)`; atoms before
/// it use `[0, lo)`; atoms after it use `[0, hi)`.
#[derive(Clone, Copy)]
struct Window {
    delta_at: usize,
    lo: usize,
    hi: usize,
}

impl Window {
    fn range(&self, i: usize) -> (usize, usize) {
        use std::cmp::Ordering::*;
        match i.cmp(&self.delta_at) {
            Less => (0, self.lo),
            Equal => (self.lo, self.hi),
            Greater => (0, self.hi),
        }
    }
}

fn search(
    store: &Store,
    body: &[Atom],
    window: Option<Window>,
    i: usize,
    binding: &mut Binding,
    used: &mut Vec<usize>,
    out: &mut dyn FnMut(&Binding, &[usize]),
) {
    if i == body.len() {
        out(binding, used);
        return;
    }
    let (lo, hi) = window.map_or((0, usize::MAX), |w| w.range(i));
    for &k in store.candidates(&body[i], binding) {
        if k < lo {
            continue;
        }
        if k >= hi {
            break;
        }
        let mut trail = Vec::new();
        if unify(&body[i], &store.atoms[k], binding, &mut trail) {
            used.push(k);
            search(store, body, window, i + 1, binding, used, out);
            used.pop();
        }
        for v in trail {
            binding.remove(&v);
        }
    }
}

/// All homomorphisms from `body` into `instance`, ordered by body atom and
/// then by instance position.
pub fn find_homomorphisms(body: &[Atom], instance: &[Atom]) -> Vec<BTreeMap<Symbol, Term>> {
    let mut store = Store::new();
    for a in instance {
        store.insert(a.clone(), 0);
    }
    let mut out = Vec::new();
    let mut binding = Binding::new();
    search(&store, body, None, 0, &mut binding, &mut Vec::new(), &mut |b, _| {
        out.push(b.iter().map(|(k, v)| (k.clone(), v.clone())).collect());
    });
    out
}

/// Chase `instance` with `program` under the default depth bound.
pub fn chase(instance: &[Atom], program: &Program, max_depth: usize) -> Result<ChaseResult, ChaseError> {
    chase_with(instance, program, &ChaseOptions::depth(max_depth))
}

pub fn chase_with(instance: &[Atom], program: &Program, opts: &ChaseOptions) -> Result<ChaseResult, ChaseError> {
    let strata = analysis::stratify(program)?;
    let layers = analysis::rules_by_stratum(program, &strata);
    let mut store = Store::new();
    for a in instance {
        store.insert(a.clone(), 0);
    }
    let mut supply = NullSupply::after(instance);
    let mut steps = Vec::new();
    let mut saturated = true;
    let mut unsaturated_strata: Vec<usize> = Vec::new();
    let full = |store: &Store| opts.max_atoms.is_some_and(|m| store.atoms.len() >= m);
    'strata: for (s, rules) in layers.iter().enumerate() {
        for r in rules {
            for b in &r.negative {
                let bs = strata[&b.pred.name];
                if unsaturated_strata.contains(&bs) {
                    return Err(ChaseError::UnsaturatedNegation(b.name().to_string()));
                }
            }
        }
        let mut layer_saturated = true;
        let mut lo = 0;
        let mut hi = store.atoms.len();
        let mut first = true;
        loop {
            let mut fired = false;
            for r in rules {
                let mut found: Vec<(Binding, usize)> = Vec::new();
                let mut collect = |b: &Binding, used: &[usize]| {
                    if !comparisons_hold(&r.comparisons, b) {
                        return;
                    }
                    let d = used.iter().map(|k| store.depth[*k]).max().map_or(1, |m| m + 1);
                    found.push((b.clone(), d));
                };
                if r.positive.is_empty() {
                    if first {
                        collect(&Binding::new(), &[]);
                    }
                } else {
                    for j in 0..r.positive.len() {
                        let w = Window { delta_at: j, lo, hi };
                        search(&store, &r.positive, Some(w), 0, &mut Binding::new(), &mut Vec::new(), &mut collect);
                    }
                }
                for (mut binding, d) in found {
                    let blocked = r.negative.iter().any(|b| store.set.contains(&b.map_terms(|t| apply(t, &binding))));
                    if blocked {
                        continue;
                    }
                    if d > opts.max_depth {
                        layer_saturated = false;
                        continue;
                    }
                    if full(&store) {
                        layer_saturated = false;
                        break;
                    }
                    let atom = instantiate_head(r, &mut binding, &mut supply);
                    let added = store.insert(atom.clone(), d);
                    fired |= added;
                    if opts.record_steps {
                        let mut hom: Vec<(Symbol, Term)> = Vec::new();
                        for v in r.body_vars().into_iter().chain(r.existentials.iter().cloned()) {
                            if let Some(t) = binding.get(&v) {
                                hom.push((v, t.clone()));
                            }
                        }
                        steps.push(ChaseStep { index: steps.len() + 1, stratum: s, rule: r.label.clone(), hom, atom, added });
                    }
                }
            }
            first = false;
            lo = hi;
            hi = store.atoms.len();
            if !fired || lo == hi {
                break;
            }
            if full(&store) {
                saturated = false;
                break 'strata;
            }
        }
        if !layer_saturated {
            saturated = false;
            unsaturated_strata.push(s);
        }
    }
    let depth_reached = store.depth.iter().copied().max().unwrap_or(0);
    Ok(ChaseResult { atoms: store.atoms, depth: store.depth, steps, saturated, depth_reached })
}

fn instantiate_head(r: &Rule, binding: &mut Binding, supply: &mut NullSupply) -> Atom {
    for v in &r.existentials {
        let is_tid = r.head.pred.tidded && matches!(&r.head.args[0], Term::Var(w) if w == v);
        let fresh = if is_tid { supply.fresh_tid() } else { supply.fresh_null() };
        binding.insert(v.clone(), fresh);
    }
    r.head.map_terms(|t| apply(t, binding))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pbbs {
    pub bag: MultisetInstance,
    pub saturated: bool,
    pub chase_size: usize,
}

/// Bag semantics through lifting: chase the lifted program on the lifted
/// EDB and count tids per ground tuple. Distinct predicates count once per
/// tuple; auxiliary predicates are left out.
pub fn pbbs_bounded(program: &Program, d: &MultisetInstance, max_depth: usize) -> Result<Pbbs, ChaseError> {
    pbbs_with(program, d, &ChaseOptions { record_steps: false, ..ChaseOptions::depth(max_depth) })
}

pub fn pbbs_with(program: &Program, d: &MultisetInstance, opts: &ChaseOptions) -> Result<Pbbs, ChaseError> {
    let lifted = transform::lift_program(program)?;
    let edb = transform::lift_edb_for(program, d)?;
    let res = chase_with(edb.atoms(), &lifted, opts)?;
    let mut bag = transform::de_identify(res.atoms().iter());
    for a in res.atoms().iter().filter(|a| !a.pred.tidded && program.is_distinct(a.name()) && a.is_ground()) {
        bag.add(a.clone(), 1).expect("ground atom");
    }
    Ok(Pbbs { bag, saturated: res.saturated, chase_size: res.len() })
}

/// Set-semantics evaluation of an untidded program: the chase of `program`
/// over the atoms of `d`.
pub fn standard_model(program: &Program, d: &MultisetInstance, max_depth: usize) -> Result<ChaseResult, ChaseError> {
    let atoms: Vec<Atom> = d.atoms().cloned().collect();
    chase_with(&atoms, program, &ChaseOptions { record_steps: false, ..ChaseOptions::depth(max_depth) })
}
