//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use bagalog::analysis;
use bagalog::chase::{self, ChaseError, ChaseOptions};
use bagalog::cli::{path_facts, PATH_PROGRAM};
use bagalog::model::{sym, Atom, Multiplicity, MultisetInstance, Program};
use bagalog::mra::{self, Env, MraError, MraExpr};

use bagalog::multiplicity::{self as mult, tree_to_witness, witness_to_tree, Engine};
use bagalog::parser::{parse_atom, parse_edb, parse_program};
use bagalog::transform::{self, is_internal};
use bagalog::trees::{self, TreeOptions};
use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::SeedableRng;
use support::{Case, Flavor};

const EX2_BAG: &str = "p(1,2) x 4. r(1,2) x 2. r(2,3) x 2. s(1,2) x 2. q(1,2,3). q(1,2,5). q(2,3,4) x 2. t(4,1,2) x 2.";

/// Collects mismatches instead of stopping at the first.
#[derive(Default)]
struct Checks {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Checks {
    fn eq<T: PartialEq + Debug>(&mut self, what: &str, got: T, want: T) {
        if got != want {
            self.failures.push(format!("{what}: got {got:?}, want {want:?}"));
        }
    }

    fn ok(&mut self, what: &str, cond: bool) {
        if !cond {
            self.failures.push(what.to_string());
        }
    }

    fn within(&mut self, what: &str, took: Duration, limit: Duration) {
        self.notes.push(format!("{what} {:.3}s", took.as_secs_f64()));
        if took >= limit {
            self.failures.push(format!("{what} took {:.3}s, limit {:.0}s", took.as_secs_f64(), limit.as_secs_f64()));
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self) -> Result<String, String> {
        if self.failures.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            Err(format!("{} [observed: {}]", self.failures.join("; "), self.notes.join("; ")))
        }
    }
}

fn samples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(samples().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn program(name: &str) -> Program {
    parse_program(&read(name)).unwrap()
}

fn facts(name: &str) -> MultisetInstance {
    parse_edb(&read(name)).unwrap()
}

fn atom(s: &str) -> Atom {
    parse_atom(s).unwrap()
}

fn finite(n: u64) -> Multiplicity {
    Multiplicity::Finite(BigUint::from(n))
}

/// Runs the installed binary from the samples directory.
fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bagalog")).args(args).current_dir(samples()).output().expect("spawn bagalog");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn tree_opts() -> TreeOptions {
    TreeOptions { max_depth: 256, limit: 1 << 20 }
}

fn ex2_bag() -> Result<String, String> {
    let mut c = Checks::default();
    let start = Instant::now();
    let p = program("ex2.dlg");
    let d = facts("ex2.facts");
    let want = parse_edb(EX2_BAG).unwrap();
    let tb = trees::dtbs(&p, &d, &TreeOptions::default()).unwrap();
    c.eq("derivation trees", tb.trees, 16);
    c.eq("dtbs bag", &tb.bag, &want);
    c.eq("trees of p(1,2)", trees::enumerate_dts(&p, &d, &atom("p(1,2)"), &TreeOptions::default()).unwrap().count(), 4);
    let engine = Engine::new(&p, &d).unwrap();
    for (a, n) in [("p(1,2)", 4), ("r(1,2)", 2), ("r(2,3)", 2), ("s(1,2)", 2)] {
        c.eq(&format!("mult {a}"), engine.multiplicity(&atom(a)).unwrap().multiplicity, finite(n));
    }
    let (bag, infinite) = mult::bag(&p, &d, chase::DEFAULT_MAX_DEPTH).unwrap();
    c.eq("bag-eval", &bag, &want);
    c.ok("no infinite atoms", infinite.is_empty());
    c.within("library", start.elapsed(), Duration::from_secs(1));

    let (code, out, _) = cli(&["mult", "ex2.dlg", "ex2.facts", "--atom", "p(1,2)"]);
    c.eq("mult command", (code, out.as_str()), (0, "finite 4\n"));
    let (code, out, _) = cli(&["bag-eval", "ex2.dlg", "ex2.facts"]);
    c.eq("bag-eval command", (code, parse_edb(&out).ok()), (0, Some(want)));
    let (_, out, _) = cli(&["trees", "ex2.dlg", "ex2.facts"]);
    c.ok("trees command reports 16", out.ends_with("% trees 16\n"));
    c.note("16 trees, p(1,2)=4, r(1,2)=2, r(2,3)=2, s(1,2)=2");
    c.finish()
}

fn ex3_negation() -> Result<String, String> {
    let mut c = Checks::default();
    let start = Instant::now();
    let p = program("ex3.dlg");
    let d = facts("ex3.facts");
    let tb = trees::dtbs(&p, &d, &TreeOptions::default()).unwrap();
    c.eq("derivation trees", tb.trees, 12);
    let engine = Engine::new(&p, &d).unwrap();
    for (a, n) in [("p(2,3)", 2), ("p(1,2)", 0), ("s(1,2)", 1)] {
        c.eq(&format!("mult {a}"), engine.multiplicity(&atom(a)).unwrap().multiplicity, finite(n));
        c.eq(&format!("dtbs {a}"), tb.bag.mult(&atom(a)), n);
    }
    let (bag, _) = mult::bag(&p, &d, chase::DEFAULT_MAX_DEPTH).unwrap();
    c.eq("bag-eval agrees with dtbs", &bag, &tb.bag);
    c.within("library", start.elapsed(), Duration::from_secs(1));
    let (code, out, _) = cli(&["bag-eval", "ex3.dlg", "ex3.facts"]);
    c.eq("bag-eval command", (code, parse_edb(&out).ok()), (0, Some(tb.bag.clone())));
    c.note("12 trees, p(2,3)=2, p(1,2)=0, s(1,2)=1");
    c.finish()
}

fn ex7_lifted_chase() -> Result<String, String> {
    let mut c = Checks::default();
    let start = Instant::now();
    let p = program("ex2.dlg");
    let d = facts("ex2.facts");
    let lifted = transform::lift_program(&p).unwrap();
    let edb = transform::lift_edb_for(&p, &d).unwrap();
    let res = chase::chase(edb.atoms(), &lifted, chase::DEFAULT_MAX_DEPTH).unwrap();
    c.ok("chase saturates", res.saturated);
    c.eq("chase size", res.len(), 16);
    c.eq("de_identify", transform::de_identify(res.atoms()), parse_edb(EX2_BAG).unwrap());
    c.within("library", start.elapsed(), Duration::from_secs(1));
    c.note("16 atoms");
    c.finish()
}

fn ex8_witnesses() -> Result<String, String> {
    let mut c = Checks::default();
    let start = Instant::now();
    let p = program("pt.dlg");
    let d = facts("pt.facts");
    let engine = Engine::new(&p, &d).unwrap();
    let q = engine.multiplicity(&atom("q(a,c)")).unwrap().multiplicity;
    let t = engine.multiplicity(&atom("t(a,c)")).unwrap().multiplicity;
    c.note(format!("q(a,c)={q}, t(a,c)={t}"));
    c.eq("mult q(a,c)", q, finite(8));
    c.eq("mult t(a,c)", t, finite(2));
    let e = trees::enumerate_pts(&p, &d, &atom("q(a,c)"), &TreeOptions::default()).unwrap();
    let reduced = e.reduced();
    c.note(format!("{} reduced trees", reduced.len()));
    c.eq("reduced trees of q(a,c)", reduced.len(), 8);
    let mut identity = 0;
    for tree in &reduced {
        let back = tree_to_witness(&p, tree).and_then(|w| witness_to_tree(&p, &w));
        if back.as_ref() == Ok(tree) {
            identity += 1;
        }
    }
    c.note(format!("round trip identity on {identity}/{}", reduced.len()));
    c.eq("round trips", identity, reduced.len());
    let (_, out, _) = cli(&["trees", "pt.dlg", "pt.facts", "--atom", "q(a,c)", "--reduced"]);
    c.eq("trees --reduced command", out.lines().next().map(str::to_string), Some(format!("% q(a, c): {} reduced trees", reduced.len())));
    c.within("library", start.elapsed(), Duration::from_secs(5));
    c.finish()
}

fn ex11_scaling() -> Result<String, String> {
    let mut c = Checks::default();
    let p = parse_program(PATH_PROGRAM).unwrap();
    for n in 1..=12usize {
        let d = parse_edb(&path_facts(n, false)).unwrap();
        let target = atom(&format!("p(a0,a{n})"));
        let want = 1u64 << (n - 1);
        c.eq(&format!("mult n={n}"), mult::multiplicity(&p, &d, &target).unwrap(), finite(want));
        let e = trees::enumerate_pts(&p, &d, &target, &tree_opts()).unwrap();
        c.eq(&format!("oracle n={n}"), (e.count() as u64, e.complete), (want, true));
    }
    let d = parse_edb(&path_facts(30, false)).unwrap();
    let start = Instant::now();
    let m = mult::multiplicity(&p, &d, &atom("p(a0,a30)")).unwrap();
    c.within("n=30", start.elapsed(), Duration::from_secs(1));
    c.eq("mult n=30", m, finite(536_870_912));
    let d = parse_edb(&path_facts(12, true)).unwrap();
    let engine = Engine::new(&p, &d).unwrap();
    for i in 1..=12 {
        c.eq(&format!("finite p(a0,a{i}) with loop"), engine.is_finite(&atom(&format!("p(a0,a{i})"))).unwrap(), false);
    }
    let (_, out, _) = cli(&["finite", "path.dlg", "path-5-loop.facts", "--atom", "p(a0,a3)"]);
    c.eq("finite command", out.as_str(), "false\n");
    c.note("2^(n-1) for n=1..12, 536870912 at n=30");
    c.finish()
}

fn positions(p: &Program) -> BTreeSet<String> {
    analysis::affected_positions(p).iter().map(|x| x.to_string()).collect()
}

fn wardedness() -> Result<String, String> {
    let mut c = Checks::default();
    let ex4 = program("warded.dlg");
    let ex8 = program("pt.dlg");
    let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    c.eq("Aff of the warded sample", positions(&ex4), set(&["p[1]", "p[2]", "r[1]", "r[2]", "s[2]", "s[3]"]));
    c.eq("Aff of the proof-tree sample", positions(&ex8), set(&["r[2]", "s[1]", "s[2]"]));
    let w4 = analysis::is_warded(&ex4);
    c.ok("warded sample is warded", w4.warded);
    c.eq("wards of the warded sample", (w4.rules[1].ward, w4.rules[2].ward), (Some(0), Some(0)));
    let w8 = analysis::is_warded(&ex8);
    let rho3 = w8.rule("rho3").unwrap();
    c.eq("ward of rho3", rho3.ward.map(|i| ex8.rule("rho3").unwrap().positive[i].to_string()), Some("r(W, X)".into()));

    let mut rng = StdRng::seed_from_u64(6);
    let (mut plain, mut negated, mut tries) = (0, 0, 0);
    while plain + negated < 50 && tries < 10_000 {
        tries += 1;
        let case = support::program(&mut rng, Flavor::Stratified);
        if analysis::stratify(&case.program).is_err() || !analysis::check_safety(&case.program).is_empty() {
            continue;
        }
        if case.program.has_negation() {
            negated += 1;
        } else {
            plain += 1;
        }
        let lifted = transform::lift_program(&case.program).unwrap();
        c.ok(&format!("lift is warded:\n{}", case.text), analysis::is_warded(&lifted).warded);
        c.ok(&format!("lift has ground negation:\n{}", case.text), analysis::check_ground_negation(&lifted).is_empty());
    }
    c.eq("stratified programs lifted", plain + negated, 50);
    let mut existential = 0;
    tries = 0;
    while existential < 20 && tries < 10_000 {
        tries += 1;
        let case = support::program(&mut rng, Flavor::Existential);
        if !case.program.has_existentials() || !analysis::is_warded(&case.program).warded {
            continue;
        }
        existential += 1;
        let lifted = transform::lift_program(&case.program).unwrap();
        c.ok(&format!("lift stays warded:\n{}", case.text), analysis::is_warded(&lifted).warded);
    }
    c.eq("warded existential programs lifted", existential, 20);
    c.note(format!("{negated} with negation, {plain} without, {existential} existential"));
    c.finish()
}

const MAX_TOTAL: u64 = 5_000;

/// The positive corpus: programs whose every atom has finitely many
/// trees, with the number of candidates dropped as infinite.
fn corpus() -> &'static (Vec<Case>, usize, Duration) {
    static CORPUS: OnceLock<(Vec<Case>, usize, Duration)> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let start = Instant::now();
        let mut rng = StdRng::seed_from_u64(7);
        let mut out = Vec::new();
        let mut infinite = 0;
        while out.len() < 200 {
            let case = support::program(&mut rng, Flavor::Positive);
            let engine = Engine::new(&case.program, &case.facts).unwrap();
            let model = chase::standard_model(&case.program, &case.facts, usize::MAX).unwrap();
            if !model.atoms().iter().any(|a| case.program.is_idb(a.name())) {
                continue;
            }
            let mut total = BigUint::from(0u32);
            let mut all_finite = true;
            for a in model.atoms() {
                if !engine.is_finite(a).unwrap() {
                    all_finite = false;
                    break;
                }
                total += engine.multiplicity(a).unwrap().multiplicity.value().cloned().unwrap_or_default();
            }
            if !all_finite {
                infinite += 1;
                continue;
            }
            if total > BigUint::from(MAX_TOTAL) {
                continue;
            }
            out.push(case);
        }
        (out, infinite, start.elapsed())
    })
}

fn equivalence() -> Result<String, String> {
    let mut c = Checks::default();
    let start = Instant::now();
    let (cases, infinite, _) = corpus();
    let mut atoms = 0;
    for case in cases {
        let (p, d) = (&case.program, &case.facts);
        let tb = trees::dtbs(p, d, &tree_opts()).unwrap();
        let pb = chase::pbbs_bounded(p, d, usize::MAX).unwrap();
        let (bag, inf) = mult::bag(p, d, usize::MAX).unwrap();
        atoms += bag.len();
        let ctx = format!("\n{}{}", case.text, case.facts_text);
        c.ok(&format!("tree enumeration incomplete{ctx}"), tb.complete);
        c.ok(&format!("lifted chase unsaturated{ctx}"), pb.saturated);
        c.ok(&format!("infinite atoms left{ctx}"), inf.is_empty());
        c.eq(&format!("dtbs vs pbbs{ctx}"), &tb.bag, &pb.bag);
        c.eq(&format!("dtbs vs mult{ctx}"), &tb.bag, &bag);
    }
    c.eq("programs", cases.len(), 200);
    c.within("suite", start.elapsed() + corpus().2, Duration::from_secs(60));
    c.note(format!("{} programs, {atoms} atoms, {infinite} candidates dropped as infinite", cases.len()));
    c.finish()
}

fn user_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<Atom> {
    atoms.into_iter().filter(|a| !is_internal(a.name())).cloned().collect()
}

/// Compares the set projection of the lifted chase with the standard
/// model. `None` when the lifted chase hit its bounds.
fn set_projection_matches(case: &Case) -> Option<Result<(), String>> {
    let (p, d) = (&case.program, &case.facts);
    let lifted = transform::lift_program(p).unwrap();
    let edb = transform::lift_edb_for(p, d).unwrap();
    let opts = ChaseOptions { max_depth: 64, max_atoms: Some(20_000), record_steps: false };
    let res = match chase::chase_with(edb.atoms(), &lifted, &opts) {
        Ok(res) if res.saturated => res,
        Ok(_) | Err(ChaseError::UnsaturatedNegation(_)) => return None,
        Err(e) => return Some(Err(e.to_string())),
    };
    let projected = user_atoms(transform::set_project(res.atoms()).iter());
    let model = chase::standard_model(p, d, usize::MAX).unwrap();
    let want = user_atoms(model.atoms());
    Some(if projected == want {
        Ok(())
    } else {
        let extra: Vec<String> = projected.difference(&want).map(|a| a.to_string()).collect();
        let missing: Vec<String> = want.difference(&projected).map(|a| a.to_string()).collect();
        Err(format!("extra {extra:?}, missing {missing:?}\n{}{}", case.text, case.facts_text))
    })
}

fn set_projection() -> Result<String, String> {
    let mut c = Checks::default();
    for case in &corpus().0 {
        match set_projection_matches(case) {
            Some(r) => c.eq("positive corpus", r, Ok(())),
            None => c.ok(&format!("lifted chase unsaturated\n{}", case.text), false),
        }
    }
    let mut rng = StdRng::seed_from_u64(8);
    let (mut accepted, mut tries, mut bounded) = (0, 0, 0);
    while accepted < 100 && tries < 20_000 {
        tries += 1;
        let case = support::program(&mut rng, Flavor::Stratified);
        if !case.program.has_negation() || analysis::stratify(&case.program).is_err() {
            continue;
        }
        match set_projection_matches(&case) {
            Some(r) => {
                accepted += 1;
                c.eq("stratified program", r, Ok(()));
            }
            None => bounded += 1,
        }
    }
    c.eq("stratified programs", accepted, 100);
    c.note(format!("{} positive and {accepted} stratified programs, {bounded} skipped at the chase bound", corpus().0.len()));
    c.finish()
}

fn env_of(texts: &BTreeMap<&str, String>) -> (Env, MultisetInstance) {
    let mut env = Env::new();
    let mut all = MultisetInstance::new();
    for (name, text) in texts {
        let inst = parse_edb(text).unwrap();
        for (a, n) in inst.iter() {
            all.add(a.clone(), n).unwrap();
        }
        env.insert(sym(name), inst);
    }
    (env, all)
}

fn compiled_bag(e: &MraExpr, env: &Env, facts: &MultisetInstance) -> Result<MultisetInstance, String> {
    let schema = mra::schema_of(env).map_err(|x| x.to_string())?;
    let compiled = mra::compile(e, &schema).map_err(|x| x.to_string())?;
    let pb = chase::pbbs_bounded(&compiled.program, facts, usize::MAX).map_err(|x| x.to_string())?;
    if !pb.saturated {
        return Err("chase of the compiled program did not saturate".into());
    }
    Ok(pb.bag.restrict_to(&compiled.answer))
}

fn mra_soundness() -> Result<String, String> {
    let mut c = Checks::default();
    let mut rng = StdRng::seed_from_u64(9);
    let mut nonempty = 0;
    for _ in 0..500 {
        let (env, all) = env_of(&support::env_text(&mut rng));
        let arity = rand::Rng::gen_range(&mut rng, 1..=3);
        let e = support::expr(&mut rng, arity, 3);
        c.ok(&format!("generated expression is compilable: {e}"), e.is_compilable());
        let want = mra::eval(&e, &env).map_err(|x| x.to_string());
        if want.as_ref().is_ok_and(|b| !b.is_empty()) {
            nonempty += 1;
        }
        c.eq(&format!("compile({e})"), compiled_bag(&e, &env, &all), want);
    }

    let (env, _) = env_of(&BTreeMap::from([("r", "r(a) x 2. r(b).".to_string()), ("s", "s(a) x 3. s(c).".to_string())]));
    let schema = mra::schema_of(&env).unwrap();
    let (r, s) = (MraExpr::rel("r"), MraExpr::rel("s"));
    for e in [MraExpr::monus(r.clone(), s.clone()), MraExpr::min_intersect(r.clone(), s.clone()), MraExpr::dedup(MraExpr::monus(r.clone(), s.clone()))] {
        c.ok(&format!("{e} refused"), matches!(mra::compile(&e, &schema), Err(MraError::NotCompilable(_))));
    }
    let ans = |text: &str| parse_edb(text).unwrap();
    c.eq("min-intersection", mra::eval(&MraExpr::min_intersect(r.clone(), s.clone()), &env).unwrap(), ans("ans(a) x 2."));
    let joined = MraExpr::project(MraExpr::join(r, s, vec![(1, 1)]), vec![1]);
    c.eq("join then project", mra::eval(&joined, &env).unwrap(), ans("ans(a) x 6."));
    let (_, all) = env_of(&BTreeMap::from([("r", "r(a) x 2. r(b).".to_string()), ("s", "s(a) x 3. s(c).".to_string())]));
    c.eq("join then project, compiled", compiled_bag(&joined, &env, &all), Ok(ans("ans(a) x 6.")));
    c.note(format!("500 expressions, {nonempty} with non-empty results"));
    c.finish()
}

fn invocations() -> Vec<Vec<&'static str>> {
    let mut v: Vec<Vec<&str>> = Vec::new();
    let bounded = ["--max-depth", "6", "--limit", "2000"];
    let pairs = [
        ("ex2.dlg", "ex2.facts", "p(1,2)", &[][..]),
        ("ex3.dlg", "ex3.facts", "p(2,3)", &[]),
        ("pt.dlg", "pt.facts", "q(a,c)", &[]),
        ("warded.dlg", "warded.facts", "p(a,b)", &[]),
        ("sparql.dlg", "sparql.facts", "ans(bob)", &[]),
        ("path.dlg", "path-5.facts", "p(a0,a5)", &[]),
        // the loop makes the lifted chase and the tree enumeration unbounded
        ("path.dlg", "path-5-loop.facts", "p(a0,a3)", &bounded),
    ];
    for (p, f, a, flags) in pairs {
        let with = |args: &[&'static str]| flags.iter().copied().chain(args.iter().copied()).collect::<Vec<_>>();
        v.push(with(&["check", p]));
        v.push(with(&["transform", p]));
        v.push(with(&["transform", p, "--edb", f]));
        v.push(with(&["chase", p, f, "--trace"]));
        v.push(with(&["chase", p, f, "--plain"]));
        v.push(with(&["--json", "chase", p, f]));
        v.push(with(&["trees", p, f]));
        v.push(with(&["trees", p, f, "--atom", a, "--reduced"]));
        v.push(with(&["--json", "trees", p, f, "--atom", a]));
        v.push(with(&["mult", p, f, "--atom", a, "--stats"]));
        v.push(with(&["mult", p, f, "--atom", a, "--no-normalize"]));
        v.push(with(&["--json", "mult", p, f, "--atom", a]));
        v.push(with(&["finite", p, f, "--atom", a]));
        v.push(with(&["bag-eval", p, f, "--allow-infinite"]));
        v.push(with(&["--json", "bag-eval", p, f, "--allow-infinite"]));
    }
    v.push(vec!["mra", "query.mra", "--env", "r=r.facts", "--env", "s=s.facts"]);
    v.push(vec!["mra", "query.mra", "--env", "r=r.facts", "--env", "s=s.facts", "--compile"]);
    v.push(vec!["--json", "mra", "query.mra", "--env", "r=r.facts", "--env", "s=s.facts"]);
    v.push(vec!["gen-path", "30"]);
    v.push(vec!["gen-path", "5", "--self-loop"]);
    v.push(vec!["gen-path", "3", "--program"]);
    v.push(vec!["mult", "path.dlg", "missing.facts", "--atom", "p(a0,a1)"]);
    v
}

fn determinism() -> Result<String, String> {
    let mut c = Checks::default();
    let dir = std::env::temp_dir().join(format!("bagalog-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let dot = dir.join("trees.dot");
    let dot_arg = dot.to_string_lossy().into_owned();
    let mut calls = invocations();
    calls.push(vec!["trees", "pt.dlg", "pt.facts", "--atom", "q(a,c)", "--dot", &dot_arg]);
    let run_all = || -> Vec<(i32, String, String, String)> {
        calls
            .iter()
            .map(|args| {
                let _ = std::fs::remove_file(&dot);
                let (code, out, err) = cli(args);
                (code, out, err, std::fs::read_to_string(&dot).unwrap_or_default())
            })
            .collect()
    };
    let first = run_all();
    for round in 2..=3 {
        let again = run_all();
        for ((args, a), b) in calls.iter().zip(&first).zip(&again) {
            c.ok(&format!("run {round} differs: bagalog {}", args.join(" ")), a == b);
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    let commands: BTreeSet<&str> = calls.iter().filter_map(|a| a.iter().find(|s| bagalog::cli::subcommands().iter().any(|c| &**c == **s)).copied()).collect();
    c.eq("subcommands covered", commands.len(), bagalog::cli::subcommands().len());
    c.note(format!("{} invocations x 3", calls.len()));
    c.finish()
}

type Criterion = fn() -> Result<String, String>;

fn message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("join of projections", ex2_bag),
        ("stratified negation", ex3_negation),
        ("lifted chase", ex7_lifted_chase),
        ("shared nulls and witnesses", ex8_witnesses),
        ("doubling path", ex11_scaling),
        ("wardedness", wardedness),
        ("bag semantics agree", equivalence),
        ("set projection of the lifted chase", set_projection),
        ("algebra compiler", mra_soundness),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| Err(format!("panicked: {}", message(p))));
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.2}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.2}s) {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
