//! Replace negated atoms by positive atoms over complement facts.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::analysis;
use crate::chase::{self, ChaseOptions};
use crate::model::{sym, Atom, MultisetInstance, Program, Rule, Symbol, Term};

use super::MultiplicityError;

/// A negation-free program and its EDB, extended with one fact per tuple
/// the original program needed to be absent.
#[derive(Debug, Clone)]
pub struct Positive {
    pub program: Program,
    pub instance: MultisetInstance,
    /// Negated predicate and the predicate standing for its complement.
    pub renamed: BTreeMap<Symbol, Symbol>,
}

/// Each `not p(t)` becomes `not_p(t)`, and `not_p` receives, with
/// multiplicity one, every tuple of a body match over the model in which
/// the `p` atom is absent.
pub fn eliminate_negation(program: &Program, d: &MultisetInstance, max_depth: usize) -> Result<Positive, MultiplicityError> {
    if !program.has_negation() {
        return Ok(Positive { program: program.clone(), instance: d.clone(), renamed: BTreeMap::new() });
    }
    let bad = analysis::check_ground_negation(program);
    if let Some(first) = bad.first() {
        return Err(MultiplicityError::NonGroundNegation(first.to_string()));
    }
    let depth = if program.has_existentials() { max_depth } else { usize::MAX };
    let atoms: Vec<Atom> = d.atoms().cloned().collect();
    let model = chase::chase_with(&atoms, program, &ChaseOptions { record_steps: false, ..ChaseOptions::depth(depth) })?;
    if !model.saturated {
        return Err(MultiplicityError::UnsaturatedNegation(max_depth));
    }
    let present: HashSet<&Atom> = model.atoms().iter().collect();

    let mut taken: BTreeSet<Symbol> = program.predicates().keys().cloned().collect();
    taken.extend(d.atoms().map(|a| a.pred.name.clone()));
    let mut renamed: BTreeMap<Symbol, Symbol> = BTreeMap::new();
    for r in program.rules() {
        for a in &r.negative {
            if renamed.contains_key(&a.pred.name) {
                continue;
            }
            let mut name = format!("not_{}", a.pred.name);
            let mut k = 1;
            while taken.contains(name.as_str()) {
                k += 1;
                name = format!("not_{}_{k}", a.pred.name);
            }
            taken.insert(sym(&name));
            renamed.insert(a.pred.name.clone(), sym(&name));
        }
    }

    let mut instance = d.clone();
    let mut rules = Vec::with_capacity(program.rules().len());
    for r in program.rules() {
        if r.negative.is_empty() {
            rules.push(r.clone());
            continue;
        }
        for h in chase::find_homomorphisms(&r.positive, model.atoms()) {
            let subst = |t: &Term| match t {
                Term::Var(v) => h.get(v).cloned().unwrap_or_else(|| t.clone()),
                other => other.clone(),
            };
            if !r.comparisons.iter().all(|c| c.op.holds(&subst(&c.left), &subst(&c.right))) {
                continue;
            }
            for a in &r.negative {
                let g = a.map_terms(subst);
                if !g.is_ground() || present.contains(&g) {
                    continue;
                }
                let fact = Atom::with_symbol(renamed[&a.pred.name].clone(), g.args);
                if !instance.contains(&fact) {
                    instance.add(fact, 1).expect("ground");
                }
            }
        }
        let mut positive = r.positive.clone();
        positive.extend(r.negative.iter().map(|a| Atom::with_symbol(renamed[&a.pred.name].clone(), a.args.clone())));
        rules.push(Rule { positive, negative: Vec::new(), ..r.clone() });
    }
    let program = Program::with_distinct(rules, program.distinct().clone()).expect("fresh predicate names");
    Ok(Positive { program, instance, renamed })
}
