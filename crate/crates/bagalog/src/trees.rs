//! Derivation trees and proof trees, used as a counting oracle.
//!
//! Trees are enumerated by a bounded fixpoint over a goal graph whose nodes
//! are goal atoms with nulls renumbered. Round `k` yields every tree of
//! depth at most `k`; enumeration stops at the first round that adds
//! nothing.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::chase::{self, ChaseError, ChaseOptions};
use crate::model::{Atom, MultisetInstance, Program, Symbol, Term};
use crate::parser::is_internal_predicate;
use crate::resolution::{canonical_atom, Resolver};

pub const DEFAULT_TREE_DEPTH: usize = 16;
pub const DEFAULT_TREE_LIMIT: usize = 100_000;
const NEGATION_CHASE_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    /// Copy `copy` (from 1) of an EDB fact.
    Edb { copy: u64 },
    /// Derived with the rule of this label.
    Rule(Symbol),
    /// Negated ground atom that has no tree.
    Negated,
    /// Repeat of a null-introducing subtree, dropped by [`reduce`].
    Pruned,
    /// Atom of a predicate declared `distinct`.
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProofTree {
    pub atom: Atom,
    pub kind: NodeKind,
    /// Positive body atoms in rule order, then negated leaves.
    pub children: Vec<Arc<ProofTree>>,
}

impl ProofTree {
    pub fn leaf(atom: Atom, kind: NodeKind) -> Self {
        ProofTree { atom, kind, children: Vec::new() }
    }

    pub fn rule(&self) -> Option<&Symbol> {
        match &self.kind {
            NodeKind::Rule(l) => Some(l),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn has_nulls(&self) -> bool {
        self.atom.has_nulls() || self.children.iter().any(|c| c.has_nulls())
    }

    /// All nulls in pre-order, first occurrence.
    pub fn nulls(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            for z in n.atom.nulls() {
                if !out.contains(&z) {
                    out.push(z);
                }
            }
        });
        out
    }

    /// Nulls introduced at this node by its rule application.
    pub fn created(&self) -> Vec<u32> {
        if !matches!(self.kind, NodeKind::Rule(_)) {
            return Vec::new();
        }
        let below: HashSet<u32> = self.children.iter().flat_map(|c| c.atom.nulls()).collect();
        self.atom.nulls().into_iter().filter(|n| !below.contains(n)).collect()
    }

    /// Pre-order walk.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a ProofTree)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }

    pub fn map_nulls(&self, f: &mut impl FnMut(u32) -> u32) -> ProofTree {
        let atom = self.atom.map_terms(|t| match t {
            Term::Null(n) => Term::Null(f(*n)),
            other => other.clone(),
        });
        let children = self.children.iter().map(|c| Arc::new(c.map_nulls(f))).collect();
        ProofTree { atom, kind: self.kind.clone(), children }
    }

    /// Rename nulls 1, 2, ... in pre-order of first occurrence.
    pub fn normalized(&self) -> ProofTree {
        let order = self.nulls();
        self.map_nulls(&mut |n| order.iter().position(|m| *m == n).expect("collected") as u32 + 1)
    }

    /// Leaf atoms with their copy index, left to right.
    pub fn leaves(&self) -> Vec<(&Atom, &NodeKind)> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if n.children.is_empty() {
                out.push((&n.atom, &n.kind));
            }
        });
        out
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        write!(f, "{:width$}", "", width = indent * 2)?;
        match &self.kind {
            NodeKind::Edb { copy } => write!(f, "{} @{copy}", self.atom)?,
            NodeKind::Rule(l) => write!(f, "{}  [{l}]", self.atom)?,
            NodeKind::Negated => write!(f, "not {}", self.atom)?,
            NodeKind::Pruned => write!(f, "{}  (pruned)", self.atom)?,
            NodeKind::Distinct => write!(f, "{}  (distinct)", self.atom)?,
        }
        writeln!(f)?;
        for c in &self.children {
            c.write_indented(f, indent + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

/// Canonical serialization: nulls renumbered in pre-order, so trees that
/// differ only by a renaming of nulls get equal keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeKey(String);

impl TreeKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TreeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn tree_key(t: &ProofTree) -> TreeKey {
    TreeKey(serialize(t, &BTreeSet::new()))
}

/// Serialize with the nulls in `fixed` kept by identity and all other
/// nulls renumbered.
fn serialize(t: &ProofTree, fixed: &BTreeSet<u32>) -> String {
    let mut out = String::new();
    let mut names: HashMap<u32, u32> = HashMap::new();
    write_key(t, fixed, &mut names, &mut out);
    out
}

fn write_key(t: &ProofTree, fixed: &BTreeSet<u32>, names: &mut HashMap<u32, u32>, out: &mut String) {
    match &t.kind {
        NodeKind::Edb { .. } | NodeKind::Rule(_) => {}
        NodeKind::Negated => out.push('!'),
        NodeKind::Pruned => out.push('~'),
        NodeKind::Distinct => out.push('^'),
    }
    out.push_str(&t.atom.pred.name);
    out.push('(');
    for (i, a) in t.atom.args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        match a {
            Term::Null(n) if fixed.contains(n) => write!(out, "_f{n}").unwrap(),
            Term::Null(n) => {
                let next = names.len() as u32 + 1;
                let k = *names.entry(*n).or_insert(next);
                write!(out, "_n{k}").unwrap();
            }
            other => write!(out, "{other}").unwrap(),
        }
    }
    out.push(')');
    match &t.kind {
        NodeKind::Edb { copy } => write!(out, "@{copy}").unwrap(),
        NodeKind::Rule(l) => write!(out, "<{l}>").unwrap(),
        _ => {}
    }
    if !t.children.is_empty() {
        out.push('[');
        for (i, c) in t.children.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_key(c, fixed, names, out);
        }
        out.push(']');
    }
}

/// Keep the root-closest node introducing nulls via each atom (leftmost in
/// breadth-first order on ties); other nodes with that atom lose their
/// subtrees.
pub fn reduce(t: &ProofTree) -> ProofTree {
    let mut keepers: HashMap<Atom, Vec<usize>> = HashMap::new();
    let mut queue: VecDeque<(&ProofTree, Vec<usize>)> = VecDeque::from([(t, Vec::new())]);
    while let Some((n, path)) = queue.pop_front() {
        if !n.created().is_empty() {
            keepers.entry(n.atom.clone()).or_insert_with(|| path.clone());
        }
        for (i, c) in n.children.iter().enumerate() {
            let mut p = path.clone();
            p.push(i);
            queue.push_back((c, p));
        }
    }
    prune(t, &mut Vec::new(), &keepers)
}

fn prune(t: &ProofTree, path: &mut Vec<usize>, keepers: &HashMap<Atom, Vec<usize>>) -> ProofTree {
    if !t.created().is_empty() && keepers.get(&t.atom).is_some_and(|k| k != path) {
        return ProofTree::leaf(t.atom.clone(), NodeKind::Pruned);
    }
    let mut children = Vec::with_capacity(t.children.len());
    for (i, c) in t.children.iter().enumerate() {
        path.push(i);
        children.push(Arc::new(prune(c, path, keepers)));
        path.pop();
    }
    ProofTree { atom: t.atom.clone(), kind: t.kind.clone(), children }
}

/// Nodes introducing a common null carry identical subtrees.
pub fn creators_agree(t: &ProofTree) -> bool {
    let mut by_null: HashMap<u32, &ProofTree> = HashMap::new();
    let mut ok = true;
    t.visit(&mut |n| {
        for z in n.created() {
            match by_null.get(&z) {
                Some(first) => ok &= *first == n,
                None => {
                    by_null.insert(z, n);
                }
            }
        }
    });
    ok
}

/// Graphviz rendering, one cluster per tree, root at the top, edges
/// labelled with rules.
pub fn to_dot<'a, I: IntoIterator<Item = &'a ProofTree>>(trees: I) -> String {
    let mut out = String::from("digraph trees {\n  node [shape=box, fontname=\"monospace\"];\n");
    for (ti, t) in trees.into_iter().enumerate() {
        writeln!(out, "  subgraph cluster_{ti} {{\n    label=\"tree {}\";", ti + 1).unwrap();
        let mut next = 0usize;
        dot_node(t, ti, &mut next, &mut out);
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn dot_node(t: &ProofTree, ti: usize, next: &mut usize, out: &mut String) -> String {
    let id = format!("t{ti}n{next}");
    *next += 1;
    let label = match &t.kind {
        NodeKind::Edb { copy } => format!("{}:{copy}", t.atom),
        NodeKind::Negated => format!("not {}", t.atom),
        NodeKind::Pruned => format!("{} (pruned)", t.atom),
        _ => t.atom.to_string(),
    };
    writeln!(out, "    {id} [label=\"{}\"];", label.replace('"', "\\\"")).unwrap();
    for c in &t.children {
        let cid = dot_node(c, ti, next, out);
        let edge = t.rule().map(|l| l.to_string()).unwrap_or_default();
        writeln!(out, "    {id} -> {cid} [label=\"{edge}\"];").unwrap();
    }
    id
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeOptions {
    /// Maximum tree depth, counted in node levels.
    pub max_depth: usize,
    /// Maximum number of trees kept per goal.
    pub limit: usize,
}

impl Default for TreeOptions {
    fn default() -> Self {
        TreeOptions { max_depth: DEFAULT_TREE_DEPTH, limit: DEFAULT_TREE_LIMIT }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("derivation trees need a program without existential variables")]
    Existential,
    #[error("trees are built over untidded programs")]
    Tidded,
    #[error("target `{0}` is not ground")]
    NonGround(String),
    #[error(transparent)]
    NotStratifiable(#[from] AnalysisError),
    #[error(transparent)]
    Chase(#[from] ChaseError),
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub target: Atom,
    pub trees: Vec<Arc<ProofTree>>,
    /// False when the depth bound, the count limit, or an unsaturated
    /// negation check may have cut trees off.
    pub complete: bool,
}

impl Enumeration {
    pub fn count(&self) -> usize {
        self.trees.len()
    }

    /// Reduced trees, deduplicated by key.
    pub fn reduced(&self) -> Vec<ProofTree> {
        let mut seen = HashSet::new();
        self.trees.iter().map(|t| reduce(t)).filter(|t| seen.insert(tree_key(t))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeBag {
    pub bag: MultisetInstance,
    pub trees: usize,
    pub complete: bool,
}

/// Derivation trees of `target` for a program without existentials.
pub fn enumerate_dts(program: &Program, d: &MultisetInstance, target: &Atom, opts: &TreeOptions) -> Result<Enumeration, TreeError> {
    if program.has_existentials() {
        return Err(TreeError::Existential);
    }
    enumerate_pts(program, d, target, opts)
}

/// Pairwise non-equivalent proof trees of `target`.
pub fn enumerate_pts(program: &Program, d: &MultisetInstance, target: &Atom, opts: &TreeOptions) -> Result<Enumeration, TreeError> {
    if !target.is_ground() {
        return Err(TreeError::NonGround(target.to_string()));
    }
    let mut oracle = Oracle::new(program, d, std::slice::from_ref(target), opts)?;
    let root = oracle.intern(target.clone());
    oracle.discover();
    let (mut lists, complete) = oracle.run();
    Ok(Enumeration { target: target.clone(), trees: std::mem::take(&mut lists[root]), complete })
}

/// Derivation-tree bag semantics.
pub fn dtbs(program: &Program, d: &MultisetInstance, opts: &TreeOptions) -> Result<TreeBag, TreeError> {
    if program.has_existentials() {
        return Err(TreeError::Existential);
    }
    ptbs(program, d, opts)
}

/// Proof-tree bag semantics: every ground atom counted once per tree.
/// Atoms of internal predicates are left out.
pub fn ptbs(program: &Program, d: &MultisetInstance, opts: &TreeOptions) -> Result<TreeBag, TreeError> {
    if program.is_tidded() {
        return Err(TreeError::Tidded);
    }
    let depth = if program.has_existentials() { NEGATION_CHASE_DEPTH } else { usize::MAX };
    let model = chase::standard_model(program, d, depth)?;
    let targets: BTreeSet<Atom> = model
        .atoms()
        .iter()
        .filter(|a| a.is_ground() && !is_internal_predicate(a.name()))
        .cloned()
        .collect();
    let targets: Vec<Atom> = targets.into_iter().collect();
    let mut oracle = Oracle::new(program, d, &targets, opts)?;
    let ids: Vec<usize> = targets.iter().map(|t| oracle.intern(t.clone())).collect();
    oracle.discover();
    let (lists, complete) = oracle.run();
    let mut bag = MultisetInstance::new();
    let mut trees = 0;
    for (t, id) in targets.iter().zip(ids) {
        let n = lists[id].len();
        trees += n;
        if n > 0 {
            bag.add(t.clone(), n as u64).expect("ground");
        }
    }
    Ok(TreeBag { bag, trees, complete: complete && model.saturated })
}

struct Production {
    rule: Symbol,
    /// Child goal and, per canonical null of the child, the production null.
    children: Vec<(usize, Vec<u32>)>,
    negated: Vec<Atom>,
    body_nulls: BTreeSet<u32>,
    fresh_base: u32,
}

struct Goal {
    atom: Atom,
    copies: u64,
    distinct: bool,
    productions: Vec<Production>,
}

struct Oracle<'a> {
    program: &'a Program,
    resolver: Resolver<'a>,
    d: &'a MultisetInstance,
    opts: TreeOptions,
    model: Option<(HashSet<Atom>, bool)>,
    goals: Vec<Goal>,
    index: HashMap<Atom, usize>,
    pending: VecDeque<usize>,
    uncertain: bool,
}

#[derive(Clone)]
struct Listed {
    tree: Arc<ProofTree>,
    nulls: bool,
}

impl<'a> Oracle<'a> {
    fn new(program: &'a Program, d: &'a MultisetInstance, extra: &[Atom], opts: &TreeOptions) -> Result<Self, TreeError> {
        if program.is_tidded() {
            return Err(TreeError::Tidded);
        }
        analysis::stratify(program)?;
        let model = if program.has_negation() {
            let depth = if program.has_existentials() { NEGATION_CHASE_DEPTH } else { usize::MAX };
            let res = chase::chase_with(
                &d.atoms().cloned().collect::<Vec<_>>(),
                program,
                &ChaseOptions { record_steps: false, ..ChaseOptions::depth(depth) },
            )?;
            Some((res.atoms().iter().cloned().collect(), res.saturated))
        } else {
            None
        };
        Ok(Oracle {
            program,
            resolver: Resolver::new(program, d, extra),
            d,
            opts: *opts,
            model,
            goals: Vec::new(),
            index: HashMap::new(),
            pending: VecDeque::new(),
            uncertain: false,
        })
    }

    fn intern(&mut self, canonical: Atom) -> usize {
        if let Some(&i) = self.index.get(&canonical) {
            return i;
        }
        let i = self.goals.len();
        let copies = if canonical.is_ground() { self.d.mult(&canonical) } else { 0 };
        let distinct = self.program.is_distinct(canonical.name());
        self.goals.push(Goal { atom: canonical.clone(), copies, distinct, productions: Vec::new() });
        self.index.insert(canonical, i);
        self.pending.push_back(i);
        i
    }

    fn discover(&mut self) {
        while let Some(g) = self.pending.pop_front() {
            let atom = self.goals[g].atom.clone();
            let k = atom.nulls().len() as u32;
            let steps = self.resolver.steps(&atom, k + 1);
            let mut prods = Vec::new();
            for s in steps {
                if let Some((model, saturated)) = &self.model {
                    if s.negated.iter().any(|a| model.contains(a)) {
                        continue;
                    }
                    if !saturated && !s.negated.is_empty() {
                        self.uncertain = true;
                    }
                }
                let mut children = Vec::new();
                let mut body_nulls = BTreeSet::new();
                for b in &s.body {
                    body_nulls.extend(b.nulls());
                    let (c, order) = canonical_atom(b);
                    children.push((self.intern(c), order));
                }
                let fresh_base = body_nulls.iter().copied().max().unwrap_or(0).max(k) + 1;
                let rule = self.resolver.rule(s.rule).label.clone();
                prods.push(Production { rule, children, negated: s.negated, body_nulls, fresh_base });
            }
            self.goals[g].productions = prods;
        }
    }

    fn productive(&self) -> Vec<bool> {
        let mut prod: Vec<bool> = self.goals.iter().map(|g| g.copies > 0).collect();
        loop {
            let mut changed = false;
            for (i, g) in self.goals.iter().enumerate() {
                if !prod[i] && g.productions.iter().any(|p| p.children.iter().all(|(c, _)| prod[*c])) {
                    prod[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return prod;
            }
        }
    }

    fn run(&self) -> (Vec<Vec<Arc<ProofTree>>>, bool) {
        let productive = self.productive();
        let mut cur: Vec<Vec<Listed>> = vec![Vec::new(); self.goals.len()];
        let mut complete = !self.uncertain;
        let mut converged = false;
        for _ in 0..self.opts.max_depth {
            let mut truncated = false;
            let next: Vec<Vec<Listed>> = (0..self.goals.len())
                .map(|g| if productive[g] { self.build(g, &cur, &productive, &mut truncated) } else { Vec::new() })
                .collect();
            complete &= !truncated;
            let same = next.iter().zip(&cur).all(|(a, b)| a.len() == b.len());
            cur = next;
            if same {
                converged = true;
                break;
            }
        }
        let lists = cur.into_iter().map(|l| l.into_iter().map(|x| x.tree).collect()).collect();
        (lists, complete && converged)
    }

    fn build(&self, g: usize, cur: &[Vec<Listed>], productive: &[bool], truncated: &mut bool) -> Vec<Listed> {
        let goal = &self.goals[g];
        if goal.distinct {
            return vec![Listed { tree: Arc::new(ProofTree::leaf(goal.atom.clone(), NodeKind::Distinct)), nulls: false }];
        }
        let mut out: Vec<Listed> = (1..=goal.copies)
            .map(|copy| Listed { tree: Arc::new(ProofTree::leaf(goal.atom.clone(), NodeKind::Edb { copy })), nulls: false })
            .collect();
        let mut seen: HashSet<TreeKey> = HashSet::new();
        for p in &goal.productions {
            if !p.children.iter().all(|(c, _)| productive[*c]) {
                continue;
            }
            let lists: Vec<&Vec<Listed>> = p.children.iter().map(|(c, _)| &cur[*c]).collect();
            if lists.iter().any(|l| l.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; lists.len()];
            loop {
                if let Some(t) = self.combine(goal, p, &lists, &idx) {
                    let keep = !t.nulls || seen.insert(tree_key(&t.tree));
                    if keep {
                        if out.len() >= self.opts.limit {
                            *truncated = true;
                            return out;
                        }
                        out.push(t);
                    }
                }
                if !advance(&mut idx, &lists) {
                    break;
                }
            }
        }
        out
    }

    fn combine(&self, goal: &Goal, p: &Production, lists: &[&Vec<Listed>], idx: &[usize]) -> Option<Listed> {
        let mut fresh = p.fresh_base;
        let mut kids: Vec<Arc<ProofTree>> = Vec::with_capacity(lists.len() + p.negated.len());
        let mut any_nulls = goal.atom.has_nulls();
        for (ci, (_, order)) in p.children.iter().enumerate() {
            let item = &lists[ci][idx[ci]];
            if item.nulls {
                any_nulls = true;
                let mut internal: HashMap<u32, u32> = HashMap::new();
                let renamed = item.tree.map_nulls(&mut |n| {
                    if (n as usize) <= order.len() {
                        order[n as usize - 1]
                    } else {
                        *internal.entry(n).or_insert_with(|| {
                            fresh += 1;
                            fresh - 1
                        })
                    }
                });
                kids.push(Arc::new(renamed));
            } else {
                kids.push(item.tree.clone());
            }
        }
        if !p.body_nulls.is_empty() {
            kids = unify(kids, &p.body_nulls)?;
        }
        kids.extend(p.negated.iter().map(|a| Arc::new(ProofTree::leaf(a.clone(), NodeKind::Negated))));
        let node = ProofTree { atom: goal.atom.clone(), kind: NodeKind::Rule(p.rule.clone()), children: kids };
        if any_nulls {
            Some(Listed { tree: Arc::new(node.normalized()), nulls: true })
        } else {
            Some(Listed { tree: Arc::new(node), nulls: false })
        }
    }
}

fn advance(idx: &mut [usize], lists: &[&Vec<Listed>]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < lists[i].len() {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// Make sibling subtrees agree on shared nulls: every null is introduced
/// through a single atom, and all nodes carrying the same atom with such
/// nulls get one common subtree. `None` when the subtrees cannot agree.
fn unify(kids: Vec<Arc<ProofTree>>, shared: &BTreeSet<u32>) -> Option<Vec<Arc<ProofTree>>> {
    let mut creators: HashMap<u32, Atom> = HashMap::new();
    let mut first: HashMap<Atom, (Arc<ProofTree>, String)> = HashMap::new();
    let mut repeated = false;
    let mut ok = true;
    for k in &kids {
        walk_arcs(k, &mut |n: &Arc<ProofTree>| {
            for z in n.created() {
                if shared.contains(&z) {
                    match creators.get(&z) {
                        Some(a) if *a != n.atom => ok = false,
                        Some(_) => {}
                        None => {
                            creators.insert(z, n.atom.clone());
                        }
                    }
                }
            }
            if n.atom.has_nulls() && n.atom.nulls().iter().all(|z| shared.contains(z)) {
                let key = serialize(n, shared);
                match first.get(&n.atom) {
                    Some((_, k)) => {
                        repeated = true;
                        ok &= *k == key;
                    }
                    None => {
                        first.insert(n.atom.clone(), (n.clone(), key));
                    }
                }
            }
        });
    }
    if !ok {
        return None;
    }
    if !repeated {
        return Some(kids);
    }
    Some(kids.iter().map(|k| share(k, &first)).collect())
}

fn walk_arcs(t: &Arc<ProofTree>, f: &mut impl FnMut(&Arc<ProofTree>)) {
    f(t);
    for c in &t.children {
        walk_arcs(c, f);
    }
}

fn share(t: &Arc<ProofTree>, first: &HashMap<Atom, (Arc<ProofTree>, String)>) -> Arc<ProofTree> {
    if let Some((f, _)) = first.get(&t.atom) {
        if !Arc::ptr_eq(f, t) {
            return f.clone();
        }
    }
    let children: Vec<Arc<ProofTree>> = t.children.iter().map(|c| share(c, first)).collect();
    if children.iter().zip(&t.children).all(|(a, b)| Arc::ptr_eq(a, b)) {
        t.clone()
    } else {
        Arc::new(ProofTree { atom: t.atom.clone(), kind: t.kind.clone(), children })
    }
}
