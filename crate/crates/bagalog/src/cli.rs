//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and writes its output; `main` only forwards the exit code.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::analysis::{self, VarClass};
use crate::chase::{self, ChaseOptions, DEFAULT_MAX_DEPTH};
use crate::model::{sym, Atom, Multiplicity, MultisetInstance, Program, Symbol};
use crate::multiplicity::{self, Engine, EngineOptions};
use crate::parser::{self, is_internal_predicate};
use crate::transform;
use crate::trees::{self, ProofTree, TreeKey, TreeOptions, DEFAULT_TREE_LIMIT};
use crate::mra;

/// Exit code for domain errors: unsafe or unstratifiable programs,
/// uncompilable expressions, refused queries.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit code for malformed invocations and unreadable files.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bagalog", version, about = "Bag semantics for warded Datalog with existential rules")]
struct Cli {
    /// Print a JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Depth bound for chases and tree enumeration.
    #[arg(long, global = true, value_name = "N")]
    max_depth: Option<usize>,
    /// Maximum number of trees kept per atom.
    #[arg(long, global = true, value_name = "K")]
    limit: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Safety, wardedness, affected positions and strata of a program.
    Check { program: PathBuf },
    /// Print the tid-lifted program, or with --edb the lifted facts.
    Transform {
        program: Option<PathBuf>,
        #[arg(long, value_name = "FACTS")]
        edb: Option<PathBuf>,
    },
    /// Chase the lifted program over the lifted facts.
    Chase {
        program: PathBuf,
        facts: PathBuf,
        /// One line per rule application.
        #[arg(long)]
        trace: bool,
        /// Chase the program and facts as given, without lifting.
        #[arg(long)]
        plain: bool,
    },
    /// Enumerate derivation or proof trees.
    Trees {
        program: PathBuf,
        facts: PathBuf,
        #[arg(long)]
        atom: Option<String>,
        /// Write the trees as Graphviz DOT to this file.
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
        /// Prune repeated null-introducing subtrees and drop duplicates.
        #[arg(long)]
        reduced: bool,
    },
    /// Exact multiplicity of a ground atom.
    Mult {
        program: PathBuf,
        facts: PathBuf,
        #[arg(long)]
        atom: String,
        #[command(flatten)]
        engine: EngineArgs,
        /// Report the number of states and resolution steps.
        #[arg(long)]
        stats: bool,
    },
    /// Whether a ground atom has finitely many proof trees.
    Finite {
        program: PathBuf,
        facts: PathBuf,
        #[arg(long)]
        atom: String,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Multiplicity of every derivable atom.
    BagEval {
        program: PathBuf,
        facts: PathBuf,
        /// Print atoms with infinitely many trees as `x inf` instead of failing.
        #[arg(long)]
        allow_infinite: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Evaluate or compile a multiset relational algebra expression.
    Mra {
        script: PathBuf,
        /// Bind a relation name to a facts file.
        #[arg(long = "env", value_name = "NAME=FILE")]
        env: Vec<String>,
        /// Print the equivalent Datalog program instead of the result.
        #[arg(long)]
        compile: bool,
    },
    /// Facts for the doubling path family.
    GenPath {
        n: usize,
        /// Add the loop e(a1,a1).
        #[arg(long)]
        self_loop: bool,
        /// Print the program instead of the facts.
        #[arg(long)]
        program: bool,
    },
}

#[derive(Debug, Args)]
struct EngineArgs {
    /// Resolve over the program as written, without splitting rules.
    #[arg(long)]
    no_normalize: bool,
}

impl EngineArgs {
    fn options(&self, max_depth: Option<usize>) -> EngineOptions {
        EngineOptions {
            normalize: !self.no_normalize,
            negation_depth: max_depth.unwrap_or(multiplicity::NEGATION_DEPTH),
        }
    }
}

/// The rule set behind `gen-path`.
pub const PATH_PROGRAM: &str = "% P(a0,an) has 2^(n-1) proof trees over a path of length n\nrho: p(X,Y) :- p(X,Z), e(Z,Y), c(W).\n";

/// Facts `p(a0,a1)`, `c(b0)`, `c(b1)` and a path `e(a1,a2) ... e(a(n-1),an)`.
pub fn path_facts(n: usize, self_loop: bool) -> String {
    let mut s = String::from("p(a0, a1).\nc(b0).\nc(b1).\n");
    for i in 1..n {
        s.push_str(&format!("e(a{i}, a{}).\n", i + 1));
    }
    if self_loop {
        s.push_str("e(a1, a1).\n");
    }
    s
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn domain(m: impl ToString) -> Self {
        Failure { code: EXIT_DOMAIN, message: m.to_string() }
    }

    fn usage(m: impl ToString) -> Self {
        Failure { code: EXIT_USAGE, message: m.to_string() }
    }
}

struct Output {
    text: String,
    json: Value,
    warnings: Vec<String>,
}

/// Run one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(o) => {
            for w in &o.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            let text = if cli.json {
                let mut s = serde_json::to_string_pretty(&o.json).expect("serializable");
                s.push('\n');
                s
            } else {
                o.text
            };
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(f) => {
            if cli.json {
                let doc = json!({ "command": command_name(&cli.command), "error": f.message, "diagnostics": [] });
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            }
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check { .. } => "check",
        Command::Transform { .. } => "transform",
        Command::Chase { .. } => "chase",
        Command::Trees { .. } => "trees",
        Command::Mult { .. } => "mult",
        Command::Finite { .. } => "finite",
        Command::BagEval { .. } => "bag-eval",
        Command::Mra { .. } => "mra",
        Command::GenPath { .. } => "gen-path",
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parser::parse_program_named(&path.display().to_string(), &read(path)?).map_err(Failure::domain)
}

fn load_facts(path: &Path) -> Result<MultisetInstance, Failure> {
    parser::parse_edb_named(&path.display().to_string(), &read(path)?).map_err(Failure::domain)
}

fn load_atom(text: &str) -> Result<Atom, Failure> {
    parser::parse_atom(text).map_err(Failure::usage)
}

fn dispatch(cli: &Cli) -> Result<Output, Failure> {
    let name = command_name(&cli.command);
    match &cli.command {
        Command::Check { program } => check(&load_program(program)?),
        Command::Transform { program, edb } => transform_cmd(program.as_deref(), edb.as_deref()),
        Command::Chase { program, facts, trace, plain } => {
            chase_cmd(&load_program(program)?, &load_facts(facts)?, cli.max_depth.unwrap_or(DEFAULT_MAX_DEPTH), *trace, *plain)
        }
        Command::Trees { program, facts, atom, dot, reduced } => {
            let opts = TreeOptions {
                max_depth: cli.max_depth.unwrap_or(trees::DEFAULT_TREE_DEPTH),
                limit: cli.limit.unwrap_or(DEFAULT_TREE_LIMIT),
            };
            let p = load_program(program)?;
            let d = load_facts(facts)?;
            match atom {
                Some(a) => trees_cmd(&p, &d, &load_atom(a)?, &opts, dot.as_deref(), *reduced),
                None => tree_bag_cmd(&p, &d, &opts),
            }
        }
        Command::Mult { program, facts, atom, engine, stats } => {
            let e = Engine::with_options(&load_program(program)?, &load_facts(facts)?, &engine.options(cli.max_depth))
                .map_err(Failure::domain)?;
            let atom = load_atom(atom)?;
            let r = e.multiplicity(&atom).map_err(Failure::domain)?;
            let mut text = format!("{}\n", render_multiplicity(&r.multiplicity));
            if *stats {
                text.push_str(&format!("states {}\nresolution-steps {}\n", r.stats.states, r.stats.resolution_steps));
            }
            let mut doc = json!({
                "command": name,
                "atom": atom.to_string(),
                "multiplicity": multiplicity_json(&r.multiplicity),
                "diagnostics": [],
            });
            if *stats {
                doc["stats"] = json!({ "states": r.stats.states, "productions": r.stats.productions, "resolution_steps": r.stats.resolution_steps });
            }
            Ok(Output { text, json: doc, warnings: Vec::new() })
        }
        Command::Finite { program, facts, atom, engine } => {
            let e = Engine::with_options(&load_program(program)?, &load_facts(facts)?, &engine.options(cli.max_depth))
                .map_err(Failure::domain)?;
            let atom = load_atom(atom)?;
            let fin = e.is_finite(&atom).map_err(Failure::domain)?;
            Ok(Output {
                text: format!("{fin}\n"),
                json: json!({ "command": name, "atom": atom.to_string(), "finite": fin, "diagnostics": [] }),
                warnings: Vec::new(),
            })
        }
        Command::BagEval { program, facts, allow_infinite, engine } => bag_eval(
            &load_program(program)?,
            &load_facts(facts)?,
            &engine.options(cli.max_depth),
            cli.max_depth.unwrap_or(DEFAULT_MAX_DEPTH),
            *allow_infinite,
        ),
        Command::Mra { script, env, compile } => mra_cmd(script, env, *compile),
        Command::GenPath { n, self_loop, program } => {
            if *n == 0 {
                return Err(Failure::usage("path length must be at least 1"));
            }
            let text = if *program { PATH_PROGRAM.to_string() } else { path_facts(*n, *self_loop) };
            Ok(Output {
                json: json!({ "command": name, "text": text, "diagnostics": [] }),
                text,
                warnings: Vec::new(),
            })
        }
    }
}

fn check(p: &Program) -> Result<Output, Failure> {
    let mut diagnostics: Vec<String> = analysis::check_safety(p).iter().map(|d| d.to_string()).collect();
    diagnostics.extend(analysis::check_ground_negation(p).iter().map(|d| d.to_string()));
    let strata = analysis::stratify(p);
    if let Err(e) = &strata {
        diagnostics.push(e.to_string());
    }
    let report = analysis::is_warded(p);
    let normalized = analysis::is_normalized(p);
    let mut text = String::new();
    let mut rules_json = Vec::new();
    text.push_str("rule       ward                  dangerous   harmful     status\n");
    for (r, w) in p.rules().iter().zip(&report.rules) {
        let ward = w.ward.map(|i| r.positive[i].to_string()).unwrap_or_else(|| "-".into());
        let of = |c: VarClass| -> Vec<String> {
            w.classes.iter().filter(|(_, k)| *k == c).map(|(v, _)| v.to_string()).collect()
        };
        let dangerous = of(VarClass::Dangerous);
        let harmful = of(VarClass::Harmful);
        let status = match &w.failure {
            None => "warded".to_string(),
            Some(f) => format!("not warded: {f}"),
        };
        let list = |v: &[String]| if v.is_empty() { "-".to_string() } else { v.join(",") };
        text.push_str(&format!("{:<10} {:<21} {:<11} {:<11} {status}\n", r.label, ward, list(&dangerous), list(&harmful)));
        rules_json.push(json!({
            "rule": r.label.to_string(),
            "ward": w.ward.map(|i| r.positive[i].to_string()),
            "classes": w.classes.iter().map(|(v, c)| json!({ "var": v.to_string(), "class": c.as_str() })).collect::<Vec<_>>(),
            "warded": w.is_warded(),
            "failure": w.failure,
        }));
    }
    let show = |s: &BTreeSet<analysis::Position>| s.iter().map(|p| p.to_string()).collect::<Vec<_>>();
    text.push_str(&format!("affected: {}\n", show(&report.affected).join(", ")));
    text.push_str(&format!("non-affected: {}\n", show(&report.non_affected).join(", ")));
    let strata_json = match &strata {
        Ok(s) => {
            let mut by_level: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for (pred, k) in s {
                by_level.entry(*k).or_default().push(pred.to_string());
            }
            for (k, preds) in &by_level {
                text.push_str(&format!("stratum {k}: {}\n", preds.join(", ")));
            }
            json!(s.iter().map(|(p, k)| (p.to_string(), *k)).collect::<BTreeMap<_, _>>())
        }
        Err(_) => Value::Null,
    };
    text.push_str(&format!("warded: {}\nnormalized: {normalized}\n", report.warded));
    for d in &diagnostics {
        text.push_str(&format!("diagnostic: {d}\n"));
    }
    let doc = json!({
        "command": "check",
        "rules": rules_json,
        "affected": show(&report.affected),
        "non_affected": show(&report.non_affected),
        "strata": strata_json,
        "warded": report.warded,
        "normalized": normalized,
        "diagnostics": diagnostics,
    });
    Ok(Output { text, json: doc, warnings: Vec::new() })
}

fn transform_cmd(program: Option<&Path>, edb: Option<&Path>) -> Result<Output, Failure> {
    if program.is_none() && edb.is_none() {
        return Err(Failure::usage("transform needs a program, --edb FACTS, or both"));
    }
    let mut text = String::new();
    let mut doc = json!({ "command": "transform", "diagnostics": [] });
    let mut prog = None;
    if let Some(p) = program {
        let lifted = transform::lift_program(&load_program(p)?).map_err(Failure::domain)?;
        let s = parser::serialize_program(&lifted);
        text.push_str(&s);
        doc["program"] = json!(s);
        prog = Some(load_program(p)?);
    }
    if let Some(f) = edb {
        let d = load_facts(f)?;
        let lifted = match &prog {
            Some(p) => transform::lift_edb_for(p, &d).map_err(Failure::domain)?,
            None => transform::lift_edb(&d),
        };
        let s = parser::serialize_tidded(&lifted);
        text.push_str(&s);
        doc["edb"] = json!(s);
    }
    Ok(Output { text, json: doc, warnings: Vec::new() })
}

fn chase_cmd(p: &Program, d: &MultisetInstance, depth: usize, trace: bool, plain: bool) -> Result<Output, Failure> {
    let (program, start): (Program, Vec<Atom>) = if plain {
        (p.clone(), d.atoms().cloned().collect())
    } else if p.is_tidded() {
        (p.clone(), transform::lift_edb(d).atoms().to_vec())
    } else {
        let lifted = transform::lift_program(p).map_err(Failure::domain)?;
        let edb = transform::lift_edb_for(p, d).map_err(Failure::domain)?;
        (lifted, edb.atoms().to_vec())
    };
    let opts = ChaseOptions { record_steps: trace, ..ChaseOptions::depth(depth) };
    let res = chase::chase_with(&start, &program, &opts).map_err(Failure::domain)?;
    let mut text = String::new();
    if trace {
        for s in &res.steps {
            let hom: Vec<String> = s.hom.iter().map(|(v, t)| format!("{v}->{t}")).collect();
            text.push_str(&format!("{}, {}, {}, {{{}}}, {}\n", s.index, s.stratum, s.rule, hom.join(", "), s.atom));
        }
    }
    for a in res.atoms() {
        text.push_str(&format!("{a}.\n"));
    }
    let bag = transform::de_identify(res.atoms());
    text.push_str(&format!(
        "% atoms {}, depth {}, saturated {}\n",
        res.len(),
        res.depth_reached,
        res.saturated
    ));
    let mut warnings = Vec::new();
    let mut diagnostics = Vec::new();
    if !res.saturated {
        let w = format!("chase stopped at depth {depth} before saturating");
        diagnostics.push(w.clone());
        warnings.push(w);
    }
    let doc = json!({
        "command": "chase",
        "atoms": res.atoms().iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        "saturated": res.saturated,
        "depth": res.depth_reached,
        "bag": bag_json(&bag),
        "diagnostics": diagnostics,
    });
    Ok(Output { text, json: doc, warnings })
}

fn trees_cmd(p: &Program, d: &MultisetInstance, atom: &Atom, opts: &TreeOptions, dot: Option<&Path>, reduced: bool) -> Result<Output, Failure> {
    let e = trees::enumerate_pts(p, d, atom, opts).map_err(Failure::domain)?;
    let list: Vec<ProofTree> = if reduced {
        let mut seen: BTreeSet<TreeKey> = BTreeSet::new();
        e.reduced().into_iter().filter(|t| seen.insert(trees::tree_key(t))).collect()
    } else {
        e.trees.iter().map(|t| t.as_ref().clone()).collect()
    };
    let kind = if reduced { "reduced trees" } else { "trees" };
    let mut text = format!("% {atom}: {} {kind}{}\n", list.len(), if e.complete { "" } else { " (incomplete)" });
    for (i, t) in list.iter().enumerate() {
        text.push_str(&format!("% tree {}\n{t}", i + 1));
    }
    let mut warnings = Vec::new();
    if !e.complete {
        warnings.push("enumeration hit the depth or size bound; the count is a lower bound".to_string());
    }
    if let Some(path) = dot {
        fs::write(path, trees::to_dot(list.iter())).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    let doc = json!({
        "command": "trees",
        "atom": atom.to_string(),
        "count": list.len(),
        "complete": e.complete,
        "trees": list.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "diagnostics": warnings,
    });
    Ok(Output { text, json: doc, warnings })
}

fn tree_bag_cmd(p: &Program, d: &MultisetInstance, opts: &TreeOptions) -> Result<Output, Failure> {
    let b = trees::ptbs(p, d, opts).map_err(Failure::domain)?;
    let mut text = parser::serialize_instance(&b.bag);
    text.push_str(&format!("% trees {}{}\n", b.trees, if b.complete { "" } else { " (incomplete)" }));
    let warnings = if b.complete { Vec::new() } else { vec!["enumeration hit the depth or size bound".to_string()] };
    let doc = json!({
        "command": "trees",
        "count": b.trees,
        "complete": b.complete,
        "bag": bag_json(&b.bag),
        "diagnostics": warnings,
    });
    Ok(Output { text, json: doc, warnings })
}

fn bag_eval(p: &Program, d: &MultisetInstance, opts: &EngineOptions, depth: usize, allow_infinite: bool) -> Result<Output, Failure> {
    let engine = Engine::with_options(p, d, opts).map_err(Failure::domain)?;
    let model = chase::standard_model(p, d, depth).map_err(Failure::domain)?;
    let mut warnings = Vec::new();
    if !model.saturated {
        warnings.push(format!("chase stopped at depth {depth}; atoms beyond it are not listed"));
    }
    let targets: BTreeSet<&Atom> = model.atoms().iter().filter(|a| a.is_ground() && !is_internal_predicate(a.name())).collect();
    let mut rows: Vec<(String, Multiplicity)> = Vec::new();
    for a in targets {
        let m = engine.multiplicity(a).map_err(Failure::domain)?.multiplicity;
        if m == Multiplicity::Finite(BigUint::zero()) {
            continue;
        }
        if !m.is_finite() && !allow_infinite {
            return Err(Failure::domain(format!("`{a}` has infinitely many proof trees; pass --allow-infinite to list it")));
        }
        rows.push((a.to_string(), m));
    }
    let mut text = String::new();
    for (a, m) in &rows {
        match m {
            Multiplicity::Finite(n) if n.is_one() => text.push_str(&format!("{a}.\n")),
            Multiplicity::Finite(n) => text.push_str(&format!("{a} x {n}.\n")),
            Multiplicity::Infinite => text.push_str(&format!("{a} x inf.\n")),
        }
    }
    let doc = json!({
        "command": "bag-eval",
        "bag": rows.iter().map(|(a, m)| json!({ "atom": a, "mult": m.to_string() })).collect::<Vec<_>>(),
        "diagnostics": warnings,
    });
    Ok(Output { text, json: doc, warnings })
}

fn mra_cmd(script: &Path, env: &[String], compile: bool) -> Result<Output, Failure> {
    let expr = parser::parse_mra_named(&script.display().to_string(), read(script)?.trim()).map_err(Failure::domain)?;
    let mut bound: mra::Env = BTreeMap::new();
    for b in env {
        let (name, file) = b.split_once('=').ok_or_else(|| Failure::usage(format!("--env expects NAME=FILE, got `{b}`")))?;
        bound.insert(sym(name), load_facts(Path::new(file))?);
    }
    if compile {
        let schema = mra::schema_of(&bound).map_err(Failure::domain)?;
        let c = mra::compile(&expr, &schema).map_err(Failure::domain)?;
        let text = parser::serialize_program(&c.program);
        let doc = json!({ "command": "mra", "program": text, "answer": c.answer.to_string(), "diagnostics": [] });
        return Ok(Output { text, json: doc, warnings: Vec::new() });
    }
    let result = mra::eval(&expr, &bound).map_err(Failure::domain)?;
    Ok(Output {
        text: parser::serialize_instance(&result),
        json: json!({ "command": "mra", "bag": bag_json(&result), "diagnostics": [] }),
        warnings: Vec::new(),
    })
}

fn bag_json(m: &MultisetInstance) -> Value {
    Value::Array(m.iter().map(|(a, n)| json!({ "atom": a.to_string(), "mult": n.to_string() })).collect())
}

fn multiplicity_json(m: &Multiplicity) -> Value {
    match m {
        Multiplicity::Finite(n) => json!({ "finite": true, "value": n.to_string() }),
        Multiplicity::Infinite => json!({ "finite": false }),
    }
}

/// `finite N` or `infinite`; values above 10^6 get a power-of-two or
/// scientific gloss.
pub fn render_multiplicity(m: &Multiplicity) -> String {
    match m {
        Multiplicity::Infinite => "infinite".to_string(),
        Multiplicity::Finite(n) => {
            if *n <= BigUint::from(1_000_000u32) {
                return format!("finite {n}");
            }
            let bits = n.bits();
            if n.count_ones() == 1 {
                return format!("finite {n} (2^{})", bits - 1);
            }
            let digits = n.to_string();
            let mantissa = format!("{}.{}", &digits[..1], &digits[1..4.min(digits.len())]);
            format!("finite {n} (~{mantissa}e{})", digits.len() - 1)
        }
    }
}

/// Names of every subcommand, in help order.
pub fn subcommands() -> Vec<Symbol> {
    ["check", "transform", "chase", "trees", "mult", "finite", "bag-eval", "mra", "gen-path"].iter().map(|s| sym(s)).collect()
}
