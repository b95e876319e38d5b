//! Seeded random programs, facts and algebra expressions.

use std::collections::{BTreeMap, BTreeSet};

use bagalog::model::{CmpOp, Constant, MultisetInstance, Program};
use bagalog::mra::{Condition, MraExpr, Operand};
use bagalog::parser::{parse_edb, parse_program};
use rand::rngs::StdRng;
use rand::Rng;

const EDB: [(&str, usize); 3] = [("e", 2), ("f", 1), ("g", 2)];
const IDB: [(&str, usize); 3] = [("p", 2), ("q", 1), ("s", 2)];
const VARS: [&str; 4] = ["X", "Y", "Z", "W"];

#[derive(Debug, Clone)]
pub struct Case {
    pub text: String,
    pub facts_text: String,
    pub program: Program,
    pub facts: MultisetInstance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Positive,
    /// Negated body atoms over predicates of lower strata.
    Stratified,
    /// Heads may carry existential variables.
    Existential,
}

fn atom(rng: &mut StdRng, name: &str, arity: usize, nvars: usize, domain: i64) -> (String, Vec<String>) {
    let mut args = Vec::with_capacity(arity);
    let mut vars = Vec::new();
    for _ in 0..arity {
        if rng.gen_bool(0.1) {
            args.push(rng.gen_range(1..=domain).to_string());
        } else {
            let v = VARS[rng.gen_range(0..nvars)].to_string();
            vars.push(v.clone());
            args.push(v);
        }
    }
    (format!("{name}({})", args.join(",")), vars)
}

fn facts(rng: &mut StdRng, domain: i64) -> String {
    let mut out = String::new();
    for (name, arity) in EDB {
        let mut rows: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
        for _ in 0..rng.gen_range(1..=4) {
            let row: Vec<i64> = (0..arity).map(|_| rng.gen_range(1..=domain)).collect();
            rows.insert(row, rng.gen_range(1..=3));
        }
        for (row, n) in rows {
            let args: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("{name}({}) x {n}.\n", args.join(",")));
        }
    }
    out
}

/// A safe program over a domain of at most five constants: at most five
/// rules with at most three positive body atoms each.
pub fn program(rng: &mut StdRng, flavor: Flavor) -> Case {
    let domain = rng.gen_range(2..=5);
    let nrules = rng.gen_range(1..=5);
    let mut text = String::new();
    // IDB predicates are ranked so that negation only looks down
    let rank: BTreeMap<&str, usize> = IDB.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();
    for k in 0..nrules {
        let nvars = rng.gen_range(1..=3);
        let (head_name, head_arity) = IDB[rng.gen_range(0..IDB.len())];
        let mut body = Vec::new();
        let mut bound: BTreeSet<String> = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=3) {
            let (name, arity) = if rng.gen_bool(0.6) { EDB[rng.gen_range(0..EDB.len())] } else { IDB[rng.gen_range(0..IDB.len())] };
            let (a, vars) = atom(rng, name, arity, nvars, domain);
            bound.extend(vars);
            body.push(a);
        }
        let bound: Vec<String> = bound.into_iter().collect();
        if flavor == Flavor::Stratified && !bound.is_empty() && rng.gen_bool(0.5) {
            let lower: Vec<(&str, usize)> = EDB
                .iter()
                .copied()
                .chain(IDB.iter().copied().filter(|(n, _)| rank[n] < rank[head_name]))
                .collect();
            let (name, arity) = lower[rng.gen_range(0..lower.len())];
            let args: Vec<&str> = (0..arity).map(|_| bound[rng.gen_range(0..bound.len())].as_str()).collect();
            body.push(format!("not {name}({})", args.join(",")));
        }
        let mut exists = Vec::new();
        let head_args: Vec<String> = (0..head_arity)
            .map(|_| {
                if flavor == Flavor::Existential && rng.gen_bool(0.3) {
                    let z = format!("Z{}", exists.len() + 1);
                    exists.push(z.clone());
                    z
                } else if bound.is_empty() {
                    rng.gen_range(1..=domain).to_string()
                } else {
                    bound[rng.gen_range(0..bound.len())].clone()
                }
            })
            .collect();
        let quant = if exists.is_empty() { String::new() } else { format!("exists {}: ", exists.join(", ")) };
        text.push_str(&format!("r{}: {quant}{head_name}({}) :- {}.\n", k + 1, head_args.join(","), body.join(", ")));
    }
    let facts_text = facts(rng, domain);
    let program = parse_program(&text).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{text}"));
    let facts = parse_edb(&facts_text).unwrap_or_else(|e| panic!("generated facts do not parse: {e}\n{facts_text}"));
    Case { text, facts_text, program, facts }
}

const RELS: [(&str, usize); 3] = [("r", 2), ("s", 2), ("t", 1)];
const DOMAIN: [&str; 3] = ["a", "b", "c"];

/// Bindings for `r/2`, `s/2` and `t/1`, each non-empty.
pub fn env_text(rng: &mut StdRng) -> BTreeMap<&'static str, String> {
    let mut out = BTreeMap::new();
    for (name, arity) in RELS {
        let mut rows: BTreeMap<Vec<&str>, u64> = BTreeMap::new();
        for _ in 0..rng.gen_range(1..=4) {
            let row: Vec<&str> = (0..arity).map(|_| DOMAIN[rng.gen_range(0..DOMAIN.len())]).collect();
            rows.insert(row, rng.gen_range(1..=3));
        }
        let text: String = rows.iter().map(|(row, n)| format!("{name}({}) x {n}.\n", row.join(","))).collect();
        out.insert(name, text);
    }
    out
}

fn operand(rng: &mut StdRng, arity: usize) -> Operand {
    if rng.gen_bool(0.3) {
        Operand::Const(Constant::sym(DOMAIN[rng.gen_range(0..DOMAIN.len())]))
    } else {
        Operand::Pos(rng.gen_range(1..=arity))
    }
}

/// An expression of the given arity without monus or min-intersection.
pub fn expr(rng: &mut StdRng, arity: usize, depth: usize) -> MraExpr {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        let fits: Vec<&str> = RELS.iter().filter(|(_, k)| *k == arity).map(|(n, _)| *n).collect();
        if !fits.is_empty() {
            return MraExpr::rel(fits[rng.gen_range(0..fits.len())]);
        }
        let (name, k) = RELS[rng.gen_range(0..RELS.len())];
        return MraExpr::project(MraExpr::rel(name), (0..arity).map(|_| rng.gen_range(1..=k)).collect());
    }
    match rng.gen_range(0..6) {
        0 => MraExpr::union(expr(rng, arity, depth - 1), expr(rng, arity, depth - 1)),
        1 => {
            let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le];
            let conds = (0..rng.gen_range(1..=2))
                .map(|_| {
                    let left = Operand::Pos(rng.gen_range(1..=arity));
                    Condition { left, op: ops[rng.gen_range(0..ops.len())], right: operand(rng, arity) }
                })
                .collect();
            MraExpr::select(expr(rng, arity, depth - 1), conds)
        }
        2 => {
            let inner = rng.gen_range(1..=3);
            MraExpr::project(expr(rng, inner, depth - 1), (0..arity).map(|_| rng.gen_range(1..=inner)).collect())
        }
        3 if arity >= 2 => {
            let left = rng.gen_range(1..arity);
            let right = arity - left;
            let pairs = (0..rng.gen_range(0..=1)).map(|_| (rng.gen_range(1..=left), rng.gen_range(1..=right))).collect();
            MraExpr::join(expr(rng, left, depth - 1), expr(rng, right, depth - 1), pairs)
        }
        4 => MraExpr::diff(expr(rng, arity, depth - 1), expr(rng, arity, depth - 1)),
        _ => MraExpr::dedup(expr(rng, arity, depth - 1)),
    }
}
