//! Tid lifting of programs and bag EDBs, and the maps back from tidded
//! instances to bags and sets.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::analysis::{self, AnalysisError, Diagnostic};
use crate::model::{sym, Atom, MultisetInstance, NullSupply, Program, Rule, Symbol, Term, TiddedInstance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("program is already tidded")]
    AlreadyTidded,
    #[error("unsafe program: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Unsafe(Vec<Diagnostic>),
    #[error(transparent)]
    NotStratifiable(#[from] AnalysisError),
    #[error("predicate `{0}` is declared distinct but has facts in the EDB")]
    DistinctFact(String),
}

/// Name of the tid variable for body atom `i` (1-based); 0 is the head.
pub fn tid_var(i: usize) -> Symbol {
    sym(&format!("Z_{i}"))
}

pub fn aux_name(label: &str, i: usize) -> String {
    format!("aux_{label}_{i}")
}

/// Add a tid position to every predicate that is not declared distinct.
/// Negated atoms are routed through untidded `aux_<rule>_<i>` predicates.
pub fn lift_program(program: &Program) -> Result<Program, TransformError> {
    if program.is_tidded() {
        return Err(TransformError::AlreadyTidded);
    }
    let unsafe_rules = analysis::check_safety(program);
    if !unsafe_rules.is_empty() {
        return Err(TransformError::Unsafe(unsafe_rules));
    }
    analysis::stratify(program)?;
    let tidded = |a: &Atom, tid: Term| -> Atom {
        if program.is_distinct(a.name()) {
            a.clone()
        } else {
            Atom::tidded(a.pred.name.clone(), tid, a.args.clone())
        }
    };
    let mut rules = Vec::new();
    for r in program.rules() {
        let mut existentials = Vec::new();
        let head = if program.is_distinct(r.head.name()) {
            r.head.clone()
        } else {
            existentials.push(tid_var(0));
            tidded(&r.head, Term::Var(tid_var(0)))
        };
        existentials.extend(r.existentials.iter().cloned());
        let positive: Vec<Atom> =
            r.positive.iter().enumerate().map(|(i, a)| tidded(a, Term::Var(tid_var(i + 1)))).collect();
        let mut negative = Vec::new();
        let mut companions = Vec::new();
        for (i, b) in r.negative.iter().enumerate() {
            let name = aux_name(&r.label, i + 1);
            let aux = Atom::new(&name, b.args.clone());
            companions.push(Rule::new(&name, aux.clone(), vec![tidded(b, Term::Var(tid_var(1)))]));
            negative.push(aux);
        }
        rules.push(Rule {
            label: r.label.clone(),
            head,
            existentials,
            positive,
            negative,
            comparisons: r.comparisons.clone(),
        });
        rules.extend(companions);
    }
    Ok(Program::with_distinct(rules, program.distinct().clone()).expect("lifting keeps arities consistent"))
}

/// One tidded atom per copy, tids issued in atom order starting at 1.
pub fn lift_edb(d: &MultisetInstance) -> TiddedInstance {
    lift_edb_from(d, &mut NullSupply::new())
}

pub fn lift_edb_from(d: &MultisetInstance, supply: &mut NullSupply) -> TiddedInstance {
    let mut out = TiddedInstance::new();
    for (a, n) in d.iter() {
        for _ in 0..n {
            out.insert(Atom::tidded(a.pred.name.clone(), supply.fresh_tid(), a.args.clone()))
                .expect("fresh tids are unique");
        }
    }
    out
}

/// Lift an EDB for use with the lifted form of `program`; facts of
/// distinct predicates are rejected.
pub fn lift_edb_for(program: &Program, d: &MultisetInstance) -> Result<TiddedInstance, TransformError> {
    if let Some(a) = d.atoms().find(|a| program.is_distinct(a.name())) {
        return Err(TransformError::DistinctFact(a.name().to_string()));
    }
    Ok(lift_edb(d))
}

/// Count tids per payload tuple. Atoms whose payload is not ground are
/// skipped.
pub fn de_identify<'a, I: IntoIterator<Item = &'a Atom>>(atoms: I) -> MultisetInstance {
    let mut m = MultisetInstance::new();
    let mut seen: BTreeSet<&Atom> = BTreeSet::new();
    for a in atoms {
        if a.pred.tidded && a.payload_is_ground() && seen.insert(a) {
            m.add(a.strip_tid(), 1).expect("ground payload");
        }
    }
    m
}

pub fn set_project<'a, I: IntoIterator<Item = &'a Atom>>(atoms: I) -> BTreeSet<Atom> {
    atoms.into_iter().map(|a| if a.pred.tidded { a.strip_tid() } else { a.clone() }).collect()
}

/// Keep the atoms whose payload is ground.
pub fn restrict_down(inst: &TiddedInstance) -> TiddedInstance {
    TiddedInstance::from_atoms(inst.iter().filter(|a| a.payload_is_ground()).cloned()).expect("subset of a valid instance")
}

/// Predicates introduced by lifting or normalization.
pub fn is_internal(name: &str) -> bool {
    crate::parser::is_internal_predicate(name)
}

/// Group a bag by predicate name.
pub fn by_predicate(m: &MultisetInstance) -> BTreeMap<Symbol, MultisetInstance> {
    let mut out: BTreeMap<Symbol, MultisetInstance> = BTreeMap::new();
    for (a, n) in m.iter() {
        out.entry(a.pred.name.clone()).or_default().add(a.clone(), n).expect("copied from a valid bag");
    }
    out
}
