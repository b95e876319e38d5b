//! Resolution states `(S, R_S)` and their canonical form under renaming of
//! nulls.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::model::{Atom, Term};

/// Above this many candidate orderings the first one is taken as is.
const MAX_ORDERINGS: usize = 40_320;

/// A set of goal atoms plus, for each of their nulls, the atom that
/// introduced it (`None` while unknown).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairSR {
    pub atoms: Vec<Atom>,
    pub creators: BTreeMap<u32, Option<Atom>>,
}

impl PairSR {
    pub fn root(atom: Atom) -> Self {
        PairSR { atoms: vec![atom], creators: BTreeMap::new() }
    }

    pub fn nulls(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for a in &self.atoms {
            for z in a.nulls() {
                if !out.contains(&z) {
                    out.push(z);
                }
            }
        }
        for z in self.creators.keys() {
            if !out.contains(z) {
                out.push(*z);
            }
        }
        out
    }

    pub fn is_ground_singleton(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].is_ground()
    }

    pub fn rename(&self, f: &impl Fn(u32) -> u32) -> PairSR {
        let ren = |a: &Atom| {
            a.map_terms(|t| match t {
                Term::Null(n) => Term::Null(f(*n)),
                other => other.clone(),
            })
        };
        PairSR {
            atoms: self.atoms.iter().map(ren).collect(),
            creators: self.creators.iter().map(|(z, c)| (f(*z), c.as_ref().map(ren))).collect(),
        }
    }
}

impl fmt::Display for PairSR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("({")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}, {")?;
        for (i, (z, c)) in self.creators.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match c {
                Some(a) => write!(f, "(_n{z}, {a})")?,
                None => write!(f, "(_n{z}, eps)")?,
            }
        }
        f.write_str("})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(String);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn canonicalize(p: &PairSR) -> CanonicalKey {
    canonical_form(p).0
}

/// Key, the pair with nulls renamed to 1..n and atoms sorted, and the
/// original null behind each new index.
pub fn canonical_form(p: &PairSR) -> (CanonicalKey, PairSR, Vec<u32>) {
    let nulls = p.nulls();
    let mut sig: Vec<(String, u32)> = nulls.iter().map(|z| (signature(p, *z), *z)).collect();
    sig.sort();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    for (i, (s, z)) in sig.iter().enumerate() {
        if i > 0 && sig[i - 1].0 == *s {
            blocks.last_mut().expect("non-empty").push(*z);
        } else {
            blocks.push(vec![*z]);
        }
    }
    let total = blocks.iter().try_fold(1usize, |acc, b| acc.checked_mul(factorial(b.len())));
    let mut best: Option<(String, Vec<u32>)> = None;
    if total.is_some_and(|t| t <= MAX_ORDERINGS) {
        for_each_ordering(&blocks, &mut Vec::new(), &mut |order| {
            let s = render(p, order);
            if best.as_ref().is_none_or(|(b, _)| s < *b) {
                best = Some((s, order.to_vec()));
            }
        });
    } else {
        let order: Vec<u32> = blocks.concat();
        best = Some((render(p, &order), order));
    }
    let (key, order) = best.unwrap_or_else(|| (render(p, &[]), Vec::new()));
    let pos = |z: u32| order.iter().position(|m| *m == z).expect("known null") as u32 + 1;
    let mut pair = p.rename(&pos);
    pair.atoms.sort_by_cached_key(|a| a.to_string());
    pair.atoms.dedup();
    (CanonicalKey(key), pair, order)
}

fn factorial(n: usize) -> usize {
    (1..=n).try_fold(1usize, |a, b| a.checked_mul(b)).unwrap_or(usize::MAX)
}

fn for_each_ordering(blocks: &[Vec<u32>], prefix: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    let Some((first, rest)) = blocks.split_first() else {
        f(prefix);
        return;
    };
    let mut items = first.clone();
    permute(&mut items, 0, &mut |perm| {
        let n = prefix.len();
        prefix.extend_from_slice(perm);
        for_each_ordering(rest, prefix, f);
        prefix.truncate(n);
    });
}

fn permute(items: &mut Vec<u32>, k: usize, f: &mut impl FnMut(&[u32])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Renaming-invariant description of one null.
fn signature(p: &PairSR, z: u32) -> String {
    let abs = |a: &Atom| -> String {
        let mut s = format!("{}(", a.pred.name);
        for t in &a.args {
            match t {
                Term::Null(n) if *n == z => s.push('*'),
                Term::Null(_) => s.push('_'),
                other => write!(s, "{other}").unwrap(),
            }
            s.push(',');
        }
        s.push(')');
        s
    };
    let mut occ: Vec<String> = p.atoms.iter().filter(|a| a.nulls().contains(&z)).map(abs).collect();
    occ.sort();
    let creator = match p.creators.get(&z) {
        Some(Some(a)) => abs(a),
        Some(None) => "eps".to_string(),
        None => "-".to_string(),
    };
    format!("{}|{creator}", occ.join(";"))
}

fn render(p: &PairSR, order: &[u32]) -> String {
    let name = |z: u32| order.iter().position(|m| *m == z).map_or(0, |i| i + 1);
    let atom = |a: &Atom| -> String {
        let mut s = format!("{}(", a.pred.name);
        for (i, t) in a.args.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            match t {
                Term::Null(n) => write!(s, "_{}", name(*n)).unwrap(),
                other => write!(s, "{other}").unwrap(),
            }
        }
        s.push(')');
        s
    };
    let atoms: BTreeSet<String> = p.atoms.iter().map(atom).collect();
    let mut creators: Vec<(usize, String)> = p
        .creators
        .iter()
        .map(|(z, c)| (name(*z), c.as_ref().map_or("eps".to_string(), atom)))
        .collect();
    creators.sort();
    let mut out = atoms.into_iter().collect::<Vec<_>>().join(";");
    out.push('|');
    for (z, c) in creators {
        write!(out, "{z}={c};").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sym;

    fn pair(u: u32, v: u32) -> PairSR {
        let r = Atom::new("r", vec![Term::sym("a"), Term::Null(u)]);
        let s = Atom::new("s", vec![Term::Null(u), Term::Null(v)]);
        PairSR { atoms: vec![r.clone(), s], creators: BTreeMap::from([(u, Some(r)), (v, None)]) }
    }

    #[test]
    fn renaming_does_not_change_the_key() {
        assert_eq!(canonicalize(&pair(1, 2)), canonicalize(&pair(9, 4)));
        let (_, c, order) = canonical_form(&pair(9, 4));
        assert_eq!(order, vec![9, 4]);
        assert_eq!(c.to_string(), "({r(a, _n1), s(_n1, _n2)}, {(_n1, r(a, _n1)), (_n2, eps)})");
    }

    #[test]
    fn creators_are_part_of_the_key() {
        let mut other = pair(1, 2);
        other.creators.insert(1, None);
        assert_ne!(canonicalize(&pair(1, 2)), canonicalize(&other));
    }

    #[test]
    fn ground_pairs() {
        let t = PairSR::root(Atom::with_symbol(sym("t"), vec![Term::sym("a"), Term::sym("c")]));
        assert_eq!(canonicalize(&t).as_str(), "t(a,c)|");
        assert!(t.is_ground_singleton());
    }

    #[test]
    fn symmetric_nulls_pick_the_least_rendering() {
        let e = |a, b| Atom::new("e", vec![Term::Null(a), Term::Null(b)]);
        let p = PairSR { atoms: vec![e(5, 6), e(6, 5)], creators: BTreeMap::from([(5, None), (6, None)]) };
        let q = PairSR { atoms: vec![e(2, 1), e(1, 2)], creators: BTreeMap::from([(1, None), (2, None)]) };
        assert_eq!(canonicalize(&p), canonicalize(&q));
    }
}
