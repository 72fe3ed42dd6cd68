//! `accrel`: decide relevance and containment under access limitations from
//! `.alp` problem files, emit JSON verdicts on standard output.

mod fuzz;
mod report;

use std::collections::BTreeSet;
use std::io::Read as _;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use accrel_core::certificate::{check_certificate, Claim};
use accrel_core::format::{format_access, format_fact, parse_access, parse_problem, print_problem};
use accrel_core::generators::{gen_random_instance, gen_tiling_corridor, gen_tiling_grid, DependencyMix, RandomLimits, TilingSpec};
use accrel_core::model::Access;
use accrel_core::oracle::{
    oracle_certain, oracle_cm, oracle_containment, oracle_ir, oracle_ltr, oracle_reachable, OracleLimits,
};
use accrel_core::query::{certain, classical_contains, eval, Query};
use accrel_core::reductions::{
    boolean_arity_reduction, cm_to_config, config_to_cm, containment_to_ltr, ltr_to_containment, ltr_via_containment_cq,
    Lang, ProblemInstance,
};
use accrel_core::relevance::{
    decide_ir, decide_ltr, decide_ltr_independent, decide_ltr_single_occurrence, Certificate, Outcome, Stats, Verdict,
};
use accrel_core::witness::{decide_containment_bounded, decide_ltr_dependent_bounded, Budget};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value as Json};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] accrel_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Input(String),
}

#[derive(Parser, Debug)]
#[command(name = "accrel", version, about = "Relevance and containment under access limitations")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
#[command(next_help_heading = "Global options")]
struct Flags {
    /// Facts the witness search may add.
    #[arg(long, global = true)]
    budget_facts: Option<usize>,
    /// Fresh values the witness search may mint.
    #[arg(long, global = true)]
    budget_fresh: Option<usize>,
    /// Support depth below a target value.
    #[arg(long, global = true)]
    budget_depth: Option<usize>,
    /// Facts in the first response of a relevance witness.
    #[arg(long, global = true)]
    budget_first_response: Option<usize>,
    /// Seed for generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit for the witness search.
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,
    /// Admit query constants instead of rejecting them.
    #[arg(long, global = true)]
    admit_query_constants: bool,
    /// Restrict witness supports to linear chains (incomplete, faster).
    #[arg(long, global = true)]
    chain_heuristic: bool,
    /// Zero the timing fields so identical inputs give identical output.
    #[arg(long, global = true)]
    deterministic: bool,
}

impl Flags {
    fn budget(&self, q: &Query) -> Budget {
        let mut b = Budget::for_query(q);
        if let Some(x) = self.budget_facts {
            b.max_facts = x;
        }
        if let Some(x) = self.budget_fresh {
            b.max_fresh = x;
        }
        if let Some(x) = self.budget_depth {
            b.max_depth = x;
        }
        if let Some(x) = self.budget_first_response {
            b.max_first_response = x;
        }
        b.time_limit = self.timeout_ms.map(Duration::from_millis);
        b.chain_heuristic = self.chain_heuristic;
        b
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate a query on the configuration.
    Eval(QueryArgs),
    /// Certain answer of a query given the configuration.
    Certain(QueryArgs),
    /// Immediate relevance of an access.
    Ir(AccessArgs),
    /// Long-term relevance of an access.
    Ltr(LtrArgs),
    /// Containment of two queries under access limitations.
    Contain(PairArgs),
    /// Classical containment, ignoring access limitations.
    ClassicContain(PairArgs),
    /// Print a transformed instance.
    #[command(subcommand)]
    Reduce(ReduceKind),
    /// Print a generated instance.
    #[command(subcommand)]
    Gen(GenKind),
    /// Brute-force oracles for differential checks.
    Oracle(OracleArgs),
    /// Compare deciders with the oracles on random instances.
    Fuzz(fuzz::FuzzArgs),
    /// Re-validate the certificate of a JSON verdict.
    #[command(hide = true)]
    CheckCertificate(CheckArgs),
}

#[derive(Args, Debug)]
struct QueryArgs {
    /// Problem file, or `-` for standard input.
    file: String,
    /// Query name; defaults to the only query of the file.
    #[arg(long)]
    query: Option<String>,
}

#[derive(Args, Debug)]
struct AccessArgs {
    #[command(flatten)]
    q: QueryArgs,
    /// Access expression such as `R(?, 5) via mR`; defaults to the target line.
    #[arg(long)]
    access: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Procedure {
    Auto,
    Independent,
    SingleOccurrence,
    Bounded,
    ViaContainment,
}

#[derive(Args, Debug)]
struct LtrArgs {
    #[command(flatten)]
    a: AccessArgs,
    #[arg(long, value_enum, default_value = "auto")]
    procedure: Procedure,
}

#[derive(Args, Debug)]
struct PairArgs {
    file: String,
    #[arg(long, default_value = "Q1")]
    q1: String,
    #[arg(long, default_value = "Q2")]
    q2: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum LangArg {
    Pq,
    Cq,
}

impl From<LangArg> for Lang {
    fn from(l: LangArg) -> Lang {
        match l {
            LangArg::Pq => Lang::Pq,
            LangArg::Cq => Lang::Cq,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MixArg {
    Independent,
    Dependent,
    Mixed,
}

impl From<MixArg> for DependencyMix {
    fn from(m: MixArg) -> DependencyMix {
        match m {
            MixArg::Independent => DependencyMix::Independent,
            MixArg::Dependent => DependencyMix::Dependent,
            MixArg::Mixed => DependencyMix::Mixed,
        }
    }
}

#[derive(Subcommand, Debug)]
enum ReduceKind {
    /// One Boolean instance per tuple of head values.
    Arity {
        file: String,
        #[arg(long)]
        query: String,
        /// Print only the instance with this 0-based index.
        #[arg(long)]
        index: Option<usize>,
    },
    /// Non-containment as relevance of an access.
    ContainmentToLtr {
        #[command(flatten)]
        p: PairArgs,
        #[arg(long, value_enum, default_value = "pq")]
        lang: LangArg,
    },
    /// Relevance of an access as non-containment.
    LtrToContainment(AccessArgs),
    /// Containment with exact accesses read as a configuration instance.
    CmToConfig { file: String },
    /// Configuration folded into the queries of a containment instance.
    ConfigToCm {
        #[command(flatten)]
        p: PairArgs,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, value_enum, default_value = "pq")]
        lang: LangArg,
    },
}

#[derive(Args, Debug)]
struct TilingArgs {
    /// Size parameter: grid side 2^n, or corridor width n.
    #[arg(long)]
    n: usize,
    /// Number of tile types.
    #[arg(long)]
    tiles: usize,
    /// Allowed horizontal pairs, `all` or a list like `1-2,2-1` (1-based).
    #[arg(long, default_value = "all")]
    h: String,
    /// Allowed vertical pairs, same syntax as `--h`.
    #[arg(long, default_value = "all")]
    v: String,
    /// Initial row as 1-based tile numbers, e.g. `1,2`; defaults to tile 1.
    #[arg(long)]
    initial: Option<String>,
    /// Final corridor row; defaults to tile 1.
    #[arg(long = "final")]
    final_row: Option<String>,
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Exponential grid tiling as non-containment.
    TilingGrid(TilingArgs),
    /// Corridor tiling as non-containment.
    TilingCorridor {
        #[command(flatten)]
        t: TilingArgs,
        /// Conjunctive violation query instead of a union.
        #[arg(long)]
        cq: bool,
    },
    /// Random small instance with queries Q1, Q2 and a target access.
    Random(RandomArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RandomArgs {
    #[arg(long, default_value_t = 3)]
    relations: usize,
    #[arg(long, default_value_t = 3)]
    arity: usize,
    #[arg(long, default_value_t = 2)]
    domains: usize,
    #[arg(long, default_value_t = 1)]
    methods: usize,
    #[arg(long, default_value_t = 4)]
    facts: usize,
    #[arg(long, default_value_t = 4)]
    atoms: usize,
    #[arg(long, default_value_t = 3)]
    values: usize,
    #[arg(long, value_enum, default_value = "pq")]
    lang: LangArg,
    #[arg(long, value_enum, default_value = "mixed")]
    mix: MixArg,
}

impl RandomArgs {
    pub fn limits(&self) -> RandomLimits {
        RandomLimits {
            relations: self.relations,
            arity: self.arity,
            domains: self.domains,
            methods: self.methods,
            facts: self.facts,
            atoms: self.atoms,
            values: self.values,
            lang: self.lang.into(),
            mix: self.mix.into(),
        }
    }
}

#[derive(Args, Debug, Clone)]
#[command(next_help_heading = "Oracle bounds")]
pub struct LimitArgs {
    #[arg(long, global = true, default_value_t = 3)]
    max_path_len: usize,
    #[arg(long, global = true, default_value_t = 2)]
    max_fresh: usize,
    #[arg(long, global = true, default_value_t = 2)]
    max_response: usize,
    #[arg(long, global = true, default_value_t = 3)]
    max_extension: usize,
    #[arg(long, global = true, default_value_t = 500_000)]
    max_states: usize,
}

impl LimitArgs {
    pub fn limits(&self) -> OracleLimits {
        OracleLimits {
            max_path_len: self.max_path_len,
            max_fresh: self.max_fresh,
            max_response: self.max_response,
            max_extension: self.max_extension,
            max_states: self.max_states,
        }
    }
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    limits: LimitArgs,
    #[command(subcommand)]
    verb: OracleVerb,
}

#[derive(Subcommand, Debug)]
enum OracleVerb {
    Eval(QueryArgs),
    Certain(QueryArgs),
    Ir(AccessArgs),
    Ltr(AccessArgs),
    Contain(PairArgs),
    /// Configurations reachable within the path bound.
    Reachable { file: String },
    /// Containment with exact accesses; admitted constants are the constant set.
    Cm(PairArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Problem file the verdict was computed on.
    file: String,
    /// JSON verdict, or `-` for standard input.
    #[arg(long)]
    verdict: String,
}

fn read_input(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))
    }
}

struct Loaded {
    inst: ProblemInstance,
    digest: String,
}

fn load(path: &str, flags: &Flags) -> Result<Loaded, CliError> {
    let inst = parse_problem(&read_input(path)?, flags.admit_query_constants)?;
    let digest = hex::encode(Sha256::digest(print_problem(&inst).as_bytes()));
    Ok(Loaded { inst, digest })
}

impl Loaded {
    fn query_name(&self, name: &Option<String>) -> Result<String, CliError> {
        match name {
            Some(n) => Ok(n.clone()),
            None => match self.inst.queries.as_slice() {
                [q] => Ok(q.name.to_string()),
                _ => Err(CliError::Input("several queries in the file; pick one with --query".into())),
            },
        }
    }

    fn query(&self, name: &str) -> Result<&Query, CliError> {
        Ok(&self.inst.query_or_err(name)?.body)
    }

    fn access(&self, text: &Option<String>) -> Result<Access, CliError> {
        match text {
            Some(t) => Ok(parse_access(t, &self.inst.schema)?),
            None => self.inst.target.clone().ok_or_else(|| CliError::Input("no --access given and no target line".into())),
        }
    }
}

/// A finished command: JSON on standard output, summary on standard error.
struct Report {
    json: Map<String, Json>,
    summary: String,
    outcome: Outcome,
}

impl Report {
    fn decided(command: &str, l: &Loaded, v: &Verdict, flags: &Flags) -> Report {
        let mut json = report::verdict(command, &l.digest, v.outcome);
        json.insert("certificate".into(), v.certificate.as_ref().map_or(Json::Null, report::certificate_json));
        json.insert("stats".into(), report::stats_json(&v.stats, flags.deterministic));
        json.insert("budgets".into(), Json::Null);
        let summary = format!(
            "{command}: {} ({} nodes{})",
            v.outcome,
            v.stats.nodes,
            if v.stats.exhaustive { ", exhaustive" } else { "" }
        );
        Report { json, summary, outcome: v.outcome }
    }

    fn with(mut self, key: &str, value: Json) -> Report {
        self.json.insert(key.into(), value);
        self
    }
}

fn boolean(b: bool) -> Outcome {
    if b {
        Outcome::Yes
    } else {
        Outcome::No
    }
}

fn exact(outcome: Outcome, certificate: Option<Certificate>, start: Instant) -> Verdict {
    Verdict {
        outcome,
        certificate,
        stats: Stats { nodes: 1, millis: start.elapsed().as_millis() as u64, exhaustive: true },
    }
}

fn run_eval(command: &str, a: &QueryArgs, flags: &Flags, use_certain: bool) -> Result<Report, CliError> {
    let l = load(&a.file, flags)?;
    let name = l.query_name(&a.query)?;
    let q = l.query(&name)?;
    let start = Instant::now();
    let h = eval(q, &l.inst.conf);
    let outcome = boolean(if use_certain { certain(q, &l.inst.conf) } else { h.is_some() });
    let v = exact(outcome, h.map(Certificate::Homomorphism), start);
    Ok(Report::decided(command, &l, &v, flags).with("query", json!(name)))
}

fn run_ir(a: &AccessArgs, flags: &Flags) -> Result<Report, CliError> {
    let l = load(&a.q.file, flags)?;
    let name = l.query_name(&a.q.query)?;
    let access = l.access(&a.access)?;
    let v = decide_ir(&l.inst.schema, &l.inst.conf, l.query(&name)?, &access)?;
    Ok(Report::decided("ir", &l, &v, flags)
        .with("query", json!(name))
        .with("access", json!(format_access(&access, &l.inst.schema))))
}

fn run_ltr(a: &LtrArgs, flags: &Flags) -> Result<Report, CliError> {
    let l = load(&a.a.q.file, flags)?;
    let name = l.query_name(&a.a.q.query)?;
    let access = l.access(&a.a.access)?;
    let (s, c, q) = (&l.inst.schema, &l.inst.conf, l.query(&name)?);
    let budget = flags.budget(q);
    let v = match a.procedure {
        Procedure::Auto => decide_ltr(s, c, q, &access, &budget)?,
        Procedure::Independent => decide_ltr_independent(s, c, q, &access)?,
        Procedure::SingleOccurrence => decide_ltr_single_occurrence(s, c, q, &access)?,
        Procedure::Bounded => decide_ltr_dependent_bounded(s, c, q, &access, &budget)?,
        Procedure::ViaContainment => ltr_via_containment_cq(s, c, q, &access, &mut |a, b| {
            decide_containment_bounded(s, c, a, b, &flags.budget(a))
        })?,
    };
    let mut r = Report::decided("ltr", &l, &v, flags)
        .with("query", json!(name))
        .with("access", json!(format_access(&access, s)));
    if matches!(a.procedure, Procedure::Auto | Procedure::Bounded | Procedure::ViaContainment) && !s.all_independent() {
        r = r.with("budgets", report::budget_json(&budget));
    }
    Ok(r)
}

fn run_contain(a: &PairArgs, flags: &Flags) -> Result<Report, CliError> {
    let l = load(&a.file, flags)?;
    let (q1, q2) = (l.query(&a.q1)?, l.query(&a.q2)?);
    let budget = flags.budget(q1);
    let v = decide_containment_bounded(&l.inst.schema, &l.inst.conf, q1, q2, &budget)?;
    Ok(Report::decided("contain", &l, &v, flags)
        .with("q1", json!(a.q1))
        .with("q2", json!(a.q2))
        .with("budgets", report::budget_json(&budget)))
}

fn run_classic(a: &PairArgs, flags: &Flags) -> Result<Report, CliError> {
    let l = load(&a.file, flags)?;
    let start = Instant::now();
    let v = exact(boolean(classical_contains(l.query(&a.q1)?, l.query(&a.q2)?)), None, start);
    Ok(Report::decided("classic-contain", &l, &v, flags).with("q1", json!(a.q1)).with("q2", json!(a.q2)))
}

fn run_oracle(o: &OracleArgs, flags: &Flags) -> Result<Report, CliError> {
    let limits = o.limits.limits();
    let start = Instant::now();
    let (l, outcome, extra): (Loaded, Outcome, Vec<(&str, Json)>) = match &o.verb {
        OracleVerb::Eval(a) | OracleVerb::Certain(a) => {
            let l = load(&a.file, flags)?;
            let name = l.query_name(&a.query)?;
            let q = l.query(&name)?;
            let b = match o.verb {
                OracleVerb::Eval(_) => accrel_core::oracle::holds(q, &l.inst.conf),
                _ => oracle_certain(&l.inst.schema, q, &l.inst.conf, &limits)?,
            };
            (l, boolean(b), vec![("query", json!(name))])
        }
        OracleVerb::Ir(a) | OracleVerb::Ltr(a) => {
            let l = load(&a.q.file, flags)?;
            let name = l.query_name(&a.q.query)?;
            let access = l.access(&a.access)?;
            let (s, c, q) = (&l.inst.schema, &l.inst.conf, l.query(&name)?);
            let b = match o.verb {
                OracleVerb::Ir(_) => oracle_ir(s, c, q, &access, &limits)?,
                _ => oracle_ltr(s, c, q, &access, &limits)?,
            };
            let acc = format_access(&access, s);
            (l, boolean(b), vec![("query", json!(name)), ("access", json!(acc))])
        }
        OracleVerb::Contain(a) | OracleVerb::Cm(a) => {
            let l = load(&a.file, flags)?;
            let (q1, q2) = (l.query(&a.q1)?, l.query(&a.q2)?);
            let b = match o.verb {
                OracleVerb::Contain(_) => oracle_containment(&l.inst.schema, &l.inst.conf, q1, q2, &limits)?,
                _ => {
                    let constants: BTreeSet<_> = l.inst.conf.admitted().clone();
                    oracle_cm(&l.inst.schema, &constants, &l.inst.conf, q1, q2, &limits)?
                }
            };
            (l, boolean(b), vec![("q1", json!(a.q1)), ("q2", json!(a.q2))])
        }
        OracleVerb::Reachable { file } => {
            let l = load(file, flags)?;
            let confs = oracle_reachable(&l.inst.schema, &l.inst.conf, &limits)?;
            let listed: Vec<Vec<String>> = confs.iter().map(|c| c.facts().map(|f| format_fact(&f)).collect()).collect();
            (l, Outcome::Yes, vec![("configurations", json!(listed))])
        }
    };
    let verb = match &o.verb {
        OracleVerb::Eval(_) => "eval",
        OracleVerb::Certain(_) => "certain",
        OracleVerb::Ir(_) => "ir",
        OracleVerb::Ltr(_) => "ltr",
        OracleVerb::Contain(_) => "contain",
        OracleVerb::Reachable { .. } => "reachable",
        OracleVerb::Cm(_) => "cm",
    };
    let command = format!("oracle {verb}");
    let v = exact(outcome, None, start);
    let mut r = Report::decided(&command, &l, &v, flags);
    r.json.insert(
        "limits".into(),
        json!({
            "max_path_len": limits.max_path_len,
            "max_fresh": limits.max_fresh,
            "max_response": limits.max_response,
            "max_extension": limits.max_extension,
            "max_states": limits.max_states,
        }),
    );
    for (k, val) in extra {
        r.json.insert(k.into(), val);
    }
    Ok(r)
}

fn run_check(a: &CheckArgs, flags: &Flags) -> Result<Report, CliError> {
    if a.file == "-" && a.verdict == "-" {
        return Err(CliError::Input("only one of the problem and the verdict can come from standard input".into()));
    }
    let l = load(&a.file, flags)?;
    let v: Json = serde_json::from_str(&read_input(&a.verdict)?).map_err(|e| CliError::Input(format!("verdict: {e}")))?;
    let field = |k: &str| v[k].as_str().ok_or_else(|| CliError::Input(format!("verdict has no `{k}` field")));
    if field("instance")? != l.digest {
        return Err(CliError::Input("verdict was computed on a different instance".into()));
    }
    let command = field("command")?;
    let result = field("result")?;
    if v["certificate"].is_null() {
        return Err(CliError::Input("verdict carries no certificate".into()));
    }
    let (s, c) = (&l.inst.schema, &l.inst.conf);
    let q = if v["query"].is_string() { Some(l.query(field("query")?)?) } else { None };
    let access = if v["access"].is_string() { Some(parse_access(field("access")?, s)?) } else { None };
    let cert = report::decode_certificate(&v["certificate"], s, c, q, access.as_ref())?;
    let need_q = || q.ok_or_else(|| CliError::Input("verdict has no query".into()));
    let need_a = || access.as_ref().ok_or_else(|| CliError::Input("verdict has no access".into()));
    let claim = match (command, result) {
        ("eval" | "certain", "yes") => Claim::Holds { q: need_q()? },
        ("ir", "yes") => Claim::ImmediatelyRelevant { q: need_q()?, access: need_a()? },
        ("ltr", "yes") => Claim::LongTermRelevant { q: need_q()?, access: need_a()? },
        ("contain", "no") => Claim::NotContained { q1: l.query(field("q1")?)?, q2: l.query(field("q2")?)? },
        _ => return Err(CliError::Input(format!("no certificate claim for {command} with result {result}"))),
    };
    let checked = check_certificate(s, c, claim, &cert);
    let mut json = report::verdict("check-certificate", &l.digest, boolean(checked.is_ok()));
    json.insert("checked".into(), json!(command));
    json.insert("reason".into(), checked.as_ref().err().map_or(Json::Null, |e| json!(e)));
    let summary = match &checked {
        Ok(()) => format!("certificate for {command} is valid"),
        Err(e) => format!("certificate for {command} is invalid: {e}"),
    };
    Ok(Report { json, summary, outcome: boolean(checked.is_ok()) })
}

fn parse_pairs(text: &str, tiles: usize) -> Result<BTreeSet<(usize, usize)>, CliError> {
    if text == "all" {
        return Ok(TilingSpec::all_pairs(tiles));
    }
    let mut out = BTreeSet::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (a, b) = item.split_once('-').ok_or_else(|| CliError::Input(format!("bad tile pair `{item}`")))?;
        out.insert((tile(a, tiles)?, tile(b, tiles)?));
    }
    Ok(out)
}

fn tile(text: &str, tiles: usize) -> Result<usize, CliError> {
    match text.trim().parse::<usize>() {
        Ok(t) if (1..=tiles).contains(&t) => Ok(t - 1),
        _ => Err(CliError::Input(format!("tile `{text}` is not in 1..={tiles}"))),
    }
}

fn parse_row(text: &Option<String>, len: usize, tiles: usize) -> Result<Vec<usize>, CliError> {
    match text {
        None => Ok(vec![0; len]),
        Some(t) => t.split(',').map(|x| tile(x, tiles)).collect(),
    }
}

fn tiling_spec(t: &TilingArgs, default_len: usize) -> Result<TilingSpec, CliError> {
    Ok(TilingSpec {
        n: t.n,
        tiles: t.tiles,
        h: parse_pairs(&t.h, t.tiles)?,
        v: parse_pairs(&t.v, t.tiles)?,
        initial: parse_row(&t.initial, default_len, t.tiles)?,
        final_row: parse_row(&t.final_row, default_len, t.tiles)?,
    })
}

/// Commands that print problem text rather than a verdict.
fn run_text(cmd: &Cmd, flags: &Flags) -> Result<String, CliError> {
    let inst = |file: &str| -> Result<ProblemInstance, CliError> { Ok(load(file, flags)?.inst) };
    let out = match cmd {
        Cmd::Reduce(ReduceKind::Arity { file, query, index }) => {
            let all = boolean_arity_reduction(&inst(file)?, query)?;
            match index {
                Some(i) => print_problem(all.get(*i).ok_or_else(|| CliError::Input(format!("only {} instances", all.len())))?),
                None => all
                    .iter()
                    .enumerate()
                    .map(|(i, x)| format!("# instance {i} of {}\n{}", all.len(), print_problem(x)))
                    .collect::<Vec<_>>()
                    .join("\n"),
            }
        }
        Cmd::Reduce(ReduceKind::ContainmentToLtr { p, lang }) => {
            print_problem(&containment_to_ltr(&inst(&p.file)?, &p.q1, &p.q2, (*lang).into())?)
        }
        Cmd::Reduce(ReduceKind::LtrToContainment(a)) => {
            let l = load(&a.q.file, flags)?;
            let name = l.query_name(&a.q.query)?;
            let access = l.access(&a.access)?;
            print_problem(&ltr_to_containment(&l.inst, &name, &access)?)
        }
        Cmd::Reduce(ReduceKind::CmToConfig { file }) => print_problem(&cm_to_config(&inst(file)?)?),
        Cmd::Reduce(ReduceKind::ConfigToCm { p, k, lang }) => {
            print_problem(&config_to_cm(&inst(&p.file)?, &p.q1, &p.q2, *k, (*lang).into())?)
        }
        Cmd::Gen(GenKind::TilingGrid(t)) => print_problem(&gen_tiling_grid(&tiling_spec(t, 2)?)?),
        Cmd::Gen(GenKind::TilingCorridor { t, cq }) => print_problem(&gen_tiling_corridor(&tiling_spec(t, t.n)?, *cq)?),
        Cmd::Gen(GenKind::Random(r)) => print_problem(&gen_random_instance(flags.seed, &r.limits())?),
        _ => unreachable!("not a text command"),
    };
    Ok(out)
}

fn run(cli: &Cli) -> Result<Option<Report>, CliError> {
    let f = &cli.flags;
    let r = match &cli.cmd {
        Cmd::Eval(a) => run_eval("eval", a, f, false)?,
        Cmd::Certain(a) => run_eval("certain", a, f, true)?,
        Cmd::Ir(a) => run_ir(a, f)?,
        Cmd::Ltr(a) => run_ltr(a, f)?,
        Cmd::Contain(a) => run_contain(a, f)?,
        Cmd::ClassicContain(a) => run_classic(a, f)?,
        Cmd::Oracle(o) => run_oracle(o, f)?,
        Cmd::Fuzz(a) => {
            let (json, summary, outcome) = fuzz::run(a, f.seed, f.deterministic)?;
            Report { json, summary, outcome }
        }
        Cmd::CheckCertificate(a) => run_check(a, f)?,
        Cmd::Reduce(_) | Cmd::Gen(_) => {
            print!("{}", run_text(&cli.cmd, f)?);
            return Ok(None);
        }
    };
    Ok(Some(r))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(r)) => {
            println!("{}", serde_json::to_string_pretty(&Json::Object(r.json)).expect("serializable"));
            eprintln!("{}", r.summary);
            match r.outcome {
                Outcome::Unknown => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
