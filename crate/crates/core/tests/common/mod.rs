//! Differential and biconditional runs shared by the test targets. Each run
//! returns a tally; the callers decide how many cases they need.
#![allow(dead_code)]

use std::fmt;

use accrel_core::certificate::{check_certificate, Claim};
use accrel_core::error::Error;
use accrel_core::format::{parse_problem, print_problem};
use accrel_core::generators::{gen_random_instance, gen_tiling_corridor, gen_tiling_grid, DependencyMix, RandomLimits, TilingSpec};
use accrel_core::model::{is_well_formed, truncate_path, validate_path, Access, Configuration, Mode, Path, Response, Schema, Tuple, Value};
use accrel_core::oracle::{
    oracle_cm, oracle_containment, oracle_corridor_tileable, oracle_grid_tileable, oracle_ir, oracle_ltr, OracleLimits,
};
use accrel_core::query::Query;
use accrel_core::reductions::{
    cm_to_config, config_to_cm, containment_to_ltr, ltr_to_containment, ltr_via_containment_cq, Lang, ProblemInstance,
};
use accrel_core::relevance::{decide_ir, decide_ltr, decide_ltr_independent, decide_ltr_single_occurrence, Outcome, Verdict};
use accrel_core::witness::{decide_containment_bounded, Budget};

#[derive(Default, Debug)]
pub struct Tally {
    pub agreed: usize,
    pub disagreed: usize,
    /// Cases outside the run's precondition or not decided within budget.
    pub skipped: usize,
    /// Cases where the reference answer was yes.
    pub positive: usize,
    pub certificates: usize,
    pub bad_certificates: usize,
    pub first_failure: Option<String>,
}

impl Tally {
    fn record(&mut self, agree: bool, positive: bool, detail: impl FnOnce() -> String) {
        if positive {
            self.positive += 1;
        }
        if agree {
            self.agreed += 1;
        } else {
            self.disagreed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    fn certificate(&mut self, schema: &Schema, conf: &Configuration, claim: Claim<'_>, v: &Verdict) {
        if let Some(c) = &v.certificate {
            self.certificates += 1;
            if let Err(e) = check_certificate(schema, conf, claim, c) {
                self.bad_certificates += 1;
                if self.first_failure.is_none() {
                    self.first_failure = Some(format!("bad certificate: {e}"));
                }
            }
        }
    }

    pub fn absorb(&mut self, other: &Tally) {
        self.agreed += other.agreed;
        self.disagreed += other.disagreed;
        self.skipped += other.skipped;
        self.positive += other.positive;
        self.certificates += other.certificates;
        self.bad_certificates += other.bad_certificates;
        if self.first_failure.is_none() {
            self.first_failure.clone_from(&other.first_failure);
        }
    }

    /// Every decided case agreed, at least `min` cases were decided, both
    /// answers occurred and every certificate re-validated.
    pub fn passes(&self, min: usize) -> bool {
        self.disagreed == 0
            && self.bad_certificates == 0
            && self.agreed >= min
            && self.positive > 0
            && self.positive < self.agreed
    }
}

impl fmt::Display for Tally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} agreed ({} positive), {} disagreed, {} skipped, {} certificates ({} bad)",
            self.agreed, self.positive, self.disagreed, self.skipped, self.certificates, self.bad_certificates
        )?;
        if let Some(x) = &self.first_failure {
            write!(f, "; first failure: {x}")?;
        }
        Ok(())
    }
}

pub fn fuzz_limits(mix: DependencyMix) -> RandomLimits {
    RandomLimits { mix, ..RandomLimits::default() }
}

pub fn small(lang: Lang, mix: DependencyMix) -> RandomLimits {
    RandomLimits { relations: 2, arity: 2, domains: 2, methods: 1, facts: 3, atoms: 3, values: 2, lang, mix }
}

pub fn budget() -> Budget {
    Budget { max_facts: 5, max_fresh: 4, max_depth: 3, max_first_response: 3, time_limit: None, chain_heuristic: false }
}

fn body<'a>(inst: &'a ProblemInstance, q: &str) -> &'a Query {
    &inst.query(q).unwrap().body
}

fn target(inst: &ProblemInstance) -> Access {
    inst.target.clone().unwrap()
}

/// The first response cannot carry a value that a dependent method consumes.
pub fn no_probe(schema: &Schema, access: &Access) -> bool {
    let m = schema.method(&access.method).unwrap();
    let r = schema.relation(&m.relation).unwrap();
    let doms: Vec<_> = (0..r.arity()).map(|p| r.domain(p).clone()).collect();
    schema.methods.iter().filter(|m| m.mode == Mode::Dependent).all(|dm| {
        let dr = schema.relation(&dm.relation).unwrap();
        dm.inputs.iter().all(|&p| !doms.contains(dr.domain(p)))
    })
}

fn detail(seed: u64, what: String, inst: &ProblemInstance) -> String {
    format!("seed {seed}: {what}\n{}", print_problem(inst))
}

pub fn ir_vs_oracle(seeds: std::ops::Range<u64>) -> Tally {
    let limits = OracleLimits { max_fresh: 1, max_response: 4, max_states: 5_000_000, ..OracleLimits::default() };
    let mut t = Tally::default();
    for seed in seeds {
        let inst = gen_random_instance(seed, &fuzz_limits(DependencyMix::Mixed)).unwrap();
        let (s, c, q, a) = (&inst.schema, &inst.conf, body(&inst, "Q1"), target(&inst));
        let v = decide_ir(s, c, q, &a).unwrap();
        let o = oracle_ir(s, c, q, &a, &limits).unwrap();
        t.record(v.is_yes() == o, o, || detail(seed, format!("decide_ir={:?} oracle={o}", v.outcome), &inst));
        t.certificate(s, c, Claim::ImmediatelyRelevant { q, access: &a }, &v);
    }
    t
}

pub fn ltr_vs_oracle(seeds: std::ops::Range<u64>) -> Tally {
    ltr_vs_oracle_with(seeds, &OracleLimits { max_path_len: 3, max_fresh: 1, max_response: 2, ..OracleLimits::default() })
}

pub fn ltr_vs_oracle_with(seeds: std::ops::Range<u64>, limits: &OracleLimits) -> Tally {
    let mut t = Tally::default();
    for seed in seeds {
        let inst = gen_random_instance(seed, &fuzz_limits(DependencyMix::Independent)).unwrap();
        let (s, c, q, a) = (&inst.schema, &inst.conf, body(&inst, "Q1"), target(&inst));
        let v = decide_ltr_independent(s, c, q, &a).unwrap();
        let o = match oracle_ltr(s, c, q, &a, limits) {
            Err(Error::Cap(_)) => {
                t.skipped += 1;
                continue;
            }
            r => r.unwrap(),
        };
        t.record(v.is_yes() == o, o, || detail(seed, format!("decide_ltr={:?} oracle={o}", v.outcome), &inst));
        t.certificate(s, c, Claim::LongTermRelevant { q, access: &a }, &v);
    }
    t
}

pub fn containment_vs_oracle(seeds: std::ops::Range<u64>) -> Tally {
    let limits = OracleLimits { max_path_len: 3, max_fresh: 2, max_response: 1, ..OracleLimits::default() };
    let mut t = Tally::default();
    for seed in seeds {
        let inst = gen_random_instance(seed, &small(Lang::Pq, DependencyMix::Mixed)).unwrap();
        let (s, c, q1, q2) = (&inst.schema, &inst.conf, body(&inst, "Q1"), body(&inst, "Q2"));
        let v = decide_containment_bounded(s, c, q1, q2, &budget()).unwrap();
        if v.outcome == Outcome::Unknown {
            t.skipped += 1;
            continue;
        }
        let o = oracle_containment(s, c, q1, q2, &limits).unwrap();
        t.record(v.is_yes() == o, o, || detail(seed, format!("contained={:?} oracle={o}", v.outcome), &inst));
        t.certificate(s, c, Claim::NotContained { q1, q2 }, &v);
    }
    t
}

/// Instances meeting the single-occurrence precondition, until `want` of
/// them have been compared or `max_seeds` seeds were tried.
pub fn single_occurrence_vs_independent(want: usize, max_seeds: u64) -> Tally {
    let mut t = Tally::default();
    for seed in 0..max_seeds {
        if t.agreed + t.disagreed >= want {
            break;
        }
        let limits = RandomLimits { lang: Lang::Cq, ..fuzz_limits(DependencyMix::Independent) };
        let inst = gen_random_instance(seed, &limits).unwrap();
        let (s, c, q, a) = (&inst.schema, &inst.conf, body(&inst, "Q1"), target(&inst));
        let fast = match decide_ltr_single_occurrence(s, c, q, &a) {
            Err(Error::Unsupported(_)) => {
                t.skipped += 1;
                continue;
            }
            r => r.unwrap(),
        };
        let full = decide_ltr_independent(s, c, q, &a).unwrap();
        t.record(fast.outcome == full.outcome, full.is_yes(), || {
            detail(seed, format!("single={:?} independent={:?}", fast.outcome, full.outcome), &inst)
        });
        t.certificate(s, c, Claim::LongTermRelevant { q, access: &a }, &fast);
    }
    t
}

fn contained(inst: &ProblemInstance, q1: &str, q2: &str) -> Verdict {
    decide_containment_bounded(&inst.schema, &inst.conf, body(inst, q1), body(inst, q2), &budget()).unwrap()
}

fn ltr(inst: &ProblemInstance, q: &str, access: &Access) -> Verdict {
    decide_ltr(&inst.schema, &inst.conf, body(inst, q), access, &budget()).unwrap()
}

/// Non-containment of Q1 in Q2 iff the produced access is relevant. The CQ
/// gadget is only sound for independent methods.
pub fn containment_to_ltr_biconditional(lang: Lang, seeds: std::ops::Range<u64>) -> Tally {
    let mix = if lang == Lang::Cq { DependencyMix::Independent } else { DependencyMix::Mixed };
    let mut t = Tally::default();
    for seed in seeds {
        let inst = gen_random_instance(seed, &small(lang, mix)).unwrap();
        let c = contained(&inst, "Q1", "Q2");
        let red = containment_to_ltr(&inst, "Q1", "Q2", lang).unwrap();
        red.validate().unwrap();
        let a = target(&red);
        let l = ltr(&red, "Q", &a);
        if c.outcome == Outcome::Unknown || l.outcome == Outcome::Unknown {
            t.skipped += 1;
            continue;
        }
        t.record(c.is_yes() == l.is_no(), c.is_no(), || {
            detail(seed, format!("contained={:?} ltr={:?}", c.outcome, l.outcome), &inst)
        });
        t.certificate(&red.schema, &red.conf, Claim::LongTermRelevant { q: body(&red, "Q"), access: &a }, &l);
    }
    t
}

/// Relevance iff the widened query is not contained in the original, on
/// instances whose first response cannot feed a dependent method.
pub fn ltr_to_containment_biconditional(seeds: std::ops::Range<u64>) -> Tally {
    let mut t = Tally::default();
    for seed in seeds {
        let inst = gen_random_instance(seed, &small(Lang::Pq, DependencyMix::Mixed)).unwrap();
        let a = target(&inst);
        if !no_probe(&inst.schema, &a) {
            t.skipped += 1;
            continue;
        }
        let l = ltr(&inst, "Q1", &a);
        let red = ltr_to_containment(&inst, "Q1", &a).unwrap();
        red.validate().unwrap();
        let c = contained(&red, "Q1", "Q2");
        if c.outcome == Outcome::Unknown || l.outcome == Outcome::Unknown {
            t.skipped += 1;
            continue;
        }
        t.record(c.is_yes() == l.is_no(), l.is_yes(), || {
            detail(seed, format!("contained={:?} ltr={:?}", c.outcome, l.outcome), &inst)
        });
        t.certificate(&red.schema, &red.conf, Claim::NotContained { q1: body(&red, "Q1"), q2: body(&red, "Q2") }, &c);
    }
    t
}

/// Relevance for conjunctive queries through the containment decider agrees
/// with the direct procedure, on the same no-probe instances.
pub fn ltr_via_containment_biconditional(seeds: std::ops::Range<u64>) -> Tally {
    let mut t = Tally::default();
    for seed in seeds {
        let inst = gen_random_instance(seed, &small(Lang::Cq, DependencyMix::Mixed)).unwrap();
        let a = target(&inst);
        if !no_probe(&inst.schema, &a) {
            t.skipped += 1;
            continue;
        }
        let (s, c, q) = (&inst.schema, &inst.conf, body(&inst, "Q1"));
        let l = ltr(&inst, "Q1", &a);
        let mut dec = |x: &Query, y: &Query| decide_containment_bounded(s, c, x, y, &budget());
        let v = ltr_via_containment_cq(s, c, q, &a, &mut dec).unwrap();
        if v.outcome == Outcome::Unknown || l.outcome == Outcome::Unknown {
            t.skipped += 1;
            continue;
        }
        t.record(v.outcome == l.outcome, l.is_yes(), || {
            detail(seed, format!("via containment={:?} ltr={:?}", v.outcome, l.outcome), &inst)
        });
        t.certificate(s, c, Claim::LongTermRelevant { q, access: &a }, &v);
    }
    t
}

fn cm_limits() -> OracleLimits {
    OracleLimits { max_path_len: 3, max_fresh: 1, max_response: 2, max_extension: 3, max_states: 2_000_000 }
}

/// A CM instance: no facts on accessible relations, their values admitted.
fn cm_instance(seed: u64) -> ProblemInstance {
    let mut inst = gen_random_instance(seed, &small(Lang::Pq, DependencyMix::Mixed)).unwrap();
    let mut conf = Configuration::new();
    for v in inst.conf.admitted() {
        conf.admit(v.clone());
    }
    for f in inst.conf.facts() {
        if inst.schema.has_method(&f.relation) {
            f.values.into_iter().for_each(|v| conf.admit(v));
        } else {
            conf.insert(f);
        }
    }
    inst.conf = conf;
    inst.target = None;
    inst
}

/// CM containment (oracle) iff containment of the configuration reading.
pub fn cm_to_config_biconditional(seeds: std::ops::Range<u64>) -> Tally {
    let mut t = Tally::default();
    for seed in seeds {
        let cm = cm_instance(seed);
        let o = oracle_cm(&cm.schema, &cm.conf.adom(), &cm.conf, body(&cm, "Q1"), body(&cm, "Q2"), &cm_limits()).unwrap();
        let conf = cm_to_config(&cm).unwrap();
        let c = contained(&conf, "Q1", "Q2");
        if c.outcome == Outcome::Unknown {
            t.skipped += 1;
            continue;
        }
        t.record(c.is_yes() == o, o, || detail(seed, format!("cm oracle={o} contained={:?}", c.outcome), &cm));
    }
    t
}

/// Containment on a configuration iff CM containment (oracle) of the
/// encoded instance.
pub fn config_to_cm_biconditional(seeds: std::ops::Range<u64>) -> Tally {
    let mut t = Tally::default();
    for seed in seeds {
        let inst = gen_random_instance(seed, &small(Lang::Pq, DependencyMix::Mixed)).unwrap();
        let c = contained(&inst, "Q1", "Q2");
        if c.outcome == Outcome::Unknown {
            t.skipped += 1;
            continue;
        }
        let cm = config_to_cm(&inst, "Q1", "Q2", 2, Lang::Pq).unwrap();
        let mut fixed = Configuration::new();
        cm.conf.facts().for_each(|f| {
            fixed.insert(f);
        });
        let o = oracle_cm(&cm.schema, cm.conf.admitted(), &fixed, body(&cm, "Q1"), body(&cm, "Q2"), &cm_limits()).unwrap();
        t.record(c.is_yes() == o, o, || detail(seed, format!("contained={:?} cm oracle={o}", c.outcome), &inst));
    }
    t
}

pub fn grid_spec(tiles: usize, h: &[(usize, usize)], v: &[(usize, usize)], initial: &[usize]) -> TilingSpec {
    TilingSpec {
        n: 1,
        tiles,
        h: h.iter().copied().collect(),
        v: v.iter().copied().collect(),
        initial: initial.to_vec(),
        final_row: Vec::new(),
    }
}

pub fn corridor_spec(tiles: usize, h: &[(usize, usize)], v: &[(usize, usize)], initial: &[usize], last: &[usize]) -> TilingSpec {
    TilingSpec {
        n: 2,
        tiles,
        h: h.iter().copied().collect(),
        v: v.iter().copied().collect(),
        initial: initial.to_vec(),
        final_row: last.to_vec(),
    }
}

/// 2x2 grids: plain, constrained checkerboards and a few dead ends.
pub fn grid_specs() -> Vec<TilingSpec> {
    let one: Vec<_> = TilingSpec::all_pairs(1).into_iter().collect();
    let two: Vec<_> = TilingSpec::all_pairs(2).into_iter().collect();
    vec![
        grid_spec(1, &one, &one, &[0, 0]),
        grid_spec(1, &[], &one, &[0, 0]),
        grid_spec(1, &one, &[], &[0, 0]),
        grid_spec(2, &[(0, 1), (1, 0)], &[(0, 1), (1, 0)], &[0, 1]),
        grid_spec(2, &[(0, 1), (1, 0)], &[(0, 0), (1, 1)], &[0, 1]),
        grid_spec(2, &[(0, 0), (1, 1)], &[(0, 1), (1, 1)], &[0, 1]),
        grid_spec(2, &[(0, 1), (1, 1)], &[(0, 1), (1, 1)], &[0, 1]),
        grid_spec(2, &two, &[(0, 0)], &[0, 1]),
        grid_spec(2, &[(0, 1), (1, 0), (0, 0)], &[(0, 1), (1, 1)], &[0, 1]),
    ]
}

/// Width-2 corridors between an initial and a final row.
pub fn corridor_specs() -> Vec<TilingSpec> {
    let two: Vec<_> = TilingSpec::all_pairs(2).into_iter().collect();
    vec![
        corridor_spec(2, &two, &two, &[0, 0], &[1, 1]),
        corridor_spec(2, &two, &[], &[0, 0], &[1, 1]),
        corridor_spec(2, &two, &[(0, 1), (1, 0)], &[0, 1], &[1, 0]),
        corridor_spec(2, &[(0, 1), (1, 0)], &[(0, 1), (1, 0)], &[0, 1], &[0, 1]),
        corridor_spec(2, &[(0, 1), (1, 0), (1, 1)], &[(0, 1), (1, 1)], &[0, 1], &[1, 1]),
        corridor_spec(2, &[(0, 0), (1, 1)], &[(0, 1), (1, 0)], &[0, 0], &[1, 0]),
    ]
}

pub struct TilingRun {
    pub tileable: bool,
    pub verdict: Verdict,
    /// Containment according to the reachability oracle.
    pub oracle_contained: bool,
    pub certificate_ok: bool,
    pub elapsed: std::time::Duration,
}

impl TilingRun {
    /// Exhaustive verdict, non-containment iff tileable, confirmed by the
    /// reachability oracle, valid certificate.
    pub fn sound(&self) -> bool {
        self.verdict.stats.exhaustive
            && self.verdict.outcome != Outcome::Unknown
            && self.verdict.is_no() == self.tileable
            && self.oracle_contained == self.verdict.is_yes()
            && self.certificate_ok
    }
}

impl fmt::Display for TilingRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tileable={} verdict={} exhaustive={} oracle_contained={} certificate_ok={} in {:?}",
            self.tileable,
            self.verdict.outcome,
            self.verdict.stats.exhaustive,
            self.oracle_contained,
            self.certificate_ok,
            self.elapsed
        )
    }
}

fn tiling_run(inst: &ProblemInstance, tileable: bool, budget: &Budget) -> TilingRun {
    let start = std::time::Instant::now();
    let (s, c, q1, q2) = (&inst.schema, &inst.conf, body(inst, "Q1"), body(inst, "Q2"));
    let verdict = decide_containment_bounded(s, c, q1, q2, budget).unwrap();
    let elapsed = start.elapsed();
    let limits = OracleLimits { max_path_len: 2, max_fresh: 2, max_response: 1, max_extension: 0, max_states: 2_000_000 };
    let oracle_contained = oracle_containment(s, c, q1, q2, &limits).unwrap();
    let certificate_ok = verdict
        .certificate
        .as_ref()
        .is_none_or(|cert| check_certificate(s, c, Claim::NotContained { q1, q2 }, cert).is_ok());
    TilingRun { tileable, verdict, oracle_contained, certificate_ok, elapsed }
}

pub fn run_grid(spec: &TilingSpec) -> TilingRun {
    let inst = gen_tiling_grid(spec).unwrap();
    let budget = Budget { max_facts: 4, max_fresh: 4, max_depth: 4, max_first_response: 1, time_limit: None, chain_heuristic: false };
    tiling_run(&inst, oracle_grid_tileable(spec), &budget)
}

pub fn run_corridor(spec: &TilingSpec, as_cq: bool) -> TilingRun {
    let inst = gen_tiling_corridor(spec, as_cq).unwrap();
    let budget = Budget { max_facts: 6, max_fresh: 6, max_depth: 6, max_first_response: 1, time_limit: None, chain_heuristic: false };
    tiling_run(&inst, oracle_corridor_tileable(spec), &budget)
}

const CRITICALITY_HEADER: &str = "domain D
relation R(a:D, b:D)
access mR on R inputs(a, b) independent
const 0:D
const 1:D
const 2:D
";

/// Distinct conjunctive queries over one binary relation: one to three
/// atoms, terms drawn from three variables and the constants 0, 1, 2.
pub fn criticality_instances(count: usize, seed: u64) -> Vec<ProblemInstance> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let terms = ["x", "y", "z", "0", "1", "2"];
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < count {
        let atoms: Vec<String> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let mut term = || if rng.gen_bool(0.75) { terms[rng.gen_range(0..3)] } else { terms[rng.gen_range(3..6)] };
                format!("R({}, {})", term(), term())
            })
            .collect();
        let q = atoms.join(" & ");
        if seen.insert(q.clone()) {
            out.push(parse_problem(&format!("{CRITICALITY_HEADER}query Q = {q}\n"), false).unwrap());
        }
    }
    out
}

/// Relevance of the Boolean access `R(t)?` in the constants-only
/// configuration against the add-one-tuple criterion, for every tuple over
/// the three constants.
pub fn criticality_vs_oracle(instances: &[ProblemInstance]) -> Tally {
    let mut t = Tally::default();
    for (i, inst) in instances.iter().enumerate() {
        let q = body(inst, "Q");
        let limits = OracleLimits {
            max_extension: q.atoms().len(),
            max_fresh: q.vars().len(),
            max_states: 5_000_000,
            ..OracleLimits::default()
        };
        let values: Vec<Value> = ["0", "1", "2"].iter().map(|v| Value::new(v, "D")).collect();
        for a in &values {
            for b in &values {
                let fact = accrel_core::model::Fact::new("R", vec![a.clone(), b.clone()]);
                let access = Access::new("mR", fact.values.clone());
                let v = decide_ltr_independent(&inst.schema, &inst.conf, q, &access).unwrap();
                let o = accrel_core::oracle::oracle_critical(&inst.schema, q, &fact, &limits).unwrap();
                t.record(v.is_yes() == o, o, || format!("query {i} ({q}), tuple {fact}: ltr={:?} critical={o}", v.outcome));
                t.certificate(&inst.schema, &inst.conf, Claim::LongTermRelevant { q, access: &access }, &v);
            }
        }
    }
    t
}

/// The loan-officer schema with about `n` facts and no loan officer in an
/// Illinois office, so the query stays false and needs a full search.
pub fn bank_instance(n: usize) -> ProblemInstance {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/examples/bank.alp");
    let mut inst = parse_problem(&std::fs::read_to_string(path).unwrap(), false).unwrap();
    let v = |t: &str, d: &str| Value::new(t, d);
    let offices = (n / 4).max(1);
    let states = ["Illinois", "Ohio", "Iowa", "Texas"];
    for o in 0..offices {
        let state = states[o % states.len()];
        let f = vec![v(&format!("off{o}"), "OffId"), v(&format!("addr{o}"), "Address"), v(state, "State"), v(&format!("ph{o}"), "Phone")];
        inst.conf.insert(accrel_core::model::Fact::new("Office", f));
    }
    for e in 0..n / 2 {
        let o = e % offices;
        // loan officers only work outside Illinois
        let title = if states[o % states.len()] != "Illinois" && e % 3 == 0 { "loan officer" } else { "teller" };
        let f = vec![
            v(&format!("emp{e}"), "EmpId"),
            v(title, "Title"),
            v(&format!("last{e}"), "Name"),
            v(&format!("first{e}"), "Name"),
            v(&format!("off{o}"), "OffId"),
        ];
        inst.conf.insert(accrel_core::model::Fact::new("Employee", f));
    }
    for a in 0..n / 4 {
        let f = vec![v(states[1 + a % 3], "State"), v(&format!("plan{a}"), "Offering")];
        inst.conf.insert(accrel_core::model::Fact::new("Approval", f));
    }
    inst.validate().unwrap();
    inst
}

/// One step per pick: method, value choices, response size.
pub type Pick = (usize, Vec<usize>, usize);

fn universe(inst: &ProblemInstance, domain: &str) -> Vec<Value> {
    let mut vs: std::collections::BTreeSet<Value> = inst.conf.adom().into_iter().filter(|v| &*v.domain == domain).collect();
    vs.insert(Value::new("p1", domain));
    vs.insert(Value::new("p2", domain));
    vs.into_iter().collect()
}

/// A valid path built from `picks` over the known values and two fresh
/// ones. Dependent steps whose binding is not yet available are dropped.
pub fn random_path(inst: &ProblemInstance, picks: &[Pick]) -> Path {
    let s = &inst.schema;
    let mut path = Path::new(inst.conf.clone());
    let mut conf = inst.conf.clone();
    if s.methods.is_empty() {
        return path;
    }
    for (mi, choices, size) in picks {
        let m = &s.methods[mi % s.methods.len()];
        let r = s.relation(&m.relation).unwrap();
        let tuple = |k: usize| -> Tuple {
            (0..r.arity())
                .map(|p| {
                    let u = universe(inst, r.domain(p));
                    let at = if m.is_input(p) { p } else { p + k * r.arity() };
                    u[choices[at % choices.len()] % u.len()].clone()
                })
                .collect()
        };
        let binding: Vec<Value> = m.inputs.iter().map(|&p| tuple(0)[p].clone()).collect();
        if m.mode == Mode::Dependent && !binding.iter().all(|v| conf.in_adom(v)) {
            continue;
        }
        let resp = Response::of((0..*size).map(tuple));
        for t in &resp.tuples {
            conf.insert_tuple(&r.name, t.clone());
        }
        path.push(Access::new(&m.name, binding), resp);
    }
    path
}

pub fn small_budget() -> Budget {
    Budget { max_facts: 3, max_fresh: 2, max_depth: 2, max_first_response: 2, time_limit: None, chain_heuristic: false }
}

/// The truncation of a non-empty valid path is a valid proper suffix of it
/// whose final configuration is contained in the path's.
pub fn truncation_is_a_subset(inst: &ProblemInstance, path: &Path) -> Result<(), String> {
    let s = &inst.schema;
    validate_path(path, s).map_err(|e| format!("generated path invalid: {e}"))?;
    if path.steps.is_empty() {
        return Ok(());
    }
    let trunc = truncate_path(path, s).map_err(|e| e.to_string())?;
    validate_path(&trunc, s).map_err(|e| format!("truncation invalid: {e}"))?;
    if trunc.steps.len() >= path.steps.len() || trunc.steps[..] != path.steps[1..=trunc.steps.len()] {
        return Err("truncation is not a proper suffix".into());
    }
    let full = path.final_configuration(s).unwrap();
    if !trunc.final_configuration(s).unwrap().is_subset(&full) {
        return Err("truncation reaches facts the path does not".into());
    }
    Ok(())
}

/// Splitting every response into singleton responses to the same access
/// keeps the path valid and reaches the same configuration.
pub fn singleton_responses_agree(inst: &ProblemInstance, path: &Path) -> Result<(), String> {
    let mut split = Path::new(inst.conf.clone());
    for st in &path.steps {
        if st.response.tuples.is_empty() {
            split.push(st.access.clone(), Response::empty());
        }
        for t in &st.response.tuples {
            split.push(st.access.clone(), Response::of([t.clone()]));
        }
    }
    validate_path(&split, &inst.schema).map_err(|e| format!("split path invalid: {e}"))?;
    if split.final_configuration(&inst.schema).unwrap() != path.final_configuration(&inst.schema).unwrap() {
        return Err("split path reaches a different configuration".into());
    }
    Ok(())
}

/// Returns whether the premise applied (the access is immediately relevant).
pub fn ir_implies_ltr(inst: &ProblemInstance) -> Result<bool, String> {
    let (s, c, q, a) = (&inst.schema, &inst.conf, body(inst, "Q1"), target(inst));
    if !is_well_formed(&a, c, s).unwrap() || !decide_ir(s, c, q, &a).unwrap().is_yes() {
        return Ok(false);
    }
    let ltr_not_no = if s.all_independent() {
        decide_ltr_independent(s, c, q, &a).unwrap().is_yes()
    } else {
        !accrel_core::witness::decide_ltr_dependent_bounded(s, c, q, &a, &small_budget()).unwrap().is_no()
    };
    if ltr_not_no { Ok(true) } else { Err("immediately relevant but not long-term relevant".into()) }
}

/// A decided answer under a small budget survives a larger one.
pub fn budgets_are_monotone(inst: &ProblemInstance) -> Result<(), String> {
    let (s, c) = (&inst.schema, &inst.conf);
    let (q1, q2) = (body(inst, "Q1"), body(inst, "Q2"));
    let lo = decide_containment_bounded(s, c, q1, q2, &small_budget()).unwrap().outcome;
    let hi = decide_containment_bounded(s, c, q1, q2, &budget()).unwrap().outcome;
    if lo != Outcome::Unknown && lo != hi {
        return Err(format!("containment {lo:?} under the small budget, {hi:?} under the large one"));
    }
    let a = target(inst);
    let lo = accrel_core::witness::decide_ltr_dependent_bounded(s, c, q1, &a, &small_budget()).unwrap().outcome;
    let hi = accrel_core::witness::decide_ltr_dependent_bounded(s, c, q1, &a, &budget()).unwrap().outcome;
    if lo != Outcome::Unknown && lo != hi {
        return Err(format!("relevance {lo:?} under the small budget, {hi:?} under the large one"));
    }
    Ok(())
}

/// All four invariants on the instances of `seeds`, with paths drawn from
/// the same seed. `positive` counts instances where IR held.
pub fn invariants(seeds: std::ops::Range<u64>) -> Tally {
    use rand::{Rng, SeedableRng};
    let mut t = Tally::default();
    for seed in seeds {
        let inst = gen_random_instance(seed, &fuzz_limits(DependencyMix::Mixed)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let picks: Vec<Pick> = (0..rng.gen_range(1..5))
            .map(|_| (rng.gen_range(0..8), (0..12).map(|_| rng.gen_range(0..8)).collect(), rng.gen_range(0..3)))
            .collect();
        let path = random_path(&inst, &picks);
        let small_inst = gen_random_instance(seed, &small(Lang::Pq, DependencyMix::Mixed)).unwrap();
        let mut positive = false;
        let result = truncation_is_a_subset(&inst, &path)
            .and_then(|()| singleton_responses_agree(&inst, &path))
            .and_then(|()| ir_implies_ltr(&inst).map(|p| positive = p))
            .and_then(|()| budgets_are_monotone(&small_inst));
        let ok = result.is_ok();
        t.record(ok, positive, || detail(seed, result.unwrap_err(), &inst));
    }
    t
}
