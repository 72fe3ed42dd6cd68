//! Differential runs of the deciders against the brute-force oracles.

use accrel_core::certificate::{check_certificate, Claim};
use accrel_core::generators::{gen_random_instance, DependencyMix};
use accrel_core::oracle::{oracle_containment, oracle_ir, oracle_ltr};
use accrel_core::relevance::{decide_ir, decide_ltr_independent, decide_ltr_single_occurrence, Outcome, Verdict};
use accrel_core::witness::{decide_containment_bounded, Budget};
use accrel_core::Error;
use clap::{Args, ValueEnum};
use serde_json::{json, Map, Value as Json};

use crate::{CliError, LimitArgs, RandomArgs};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Ir,
    Ltr,
    SingleOccurrence,
    Contain,
}

#[derive(Args, Debug)]
pub struct FuzzArgs {
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long, default_value_t = 100)]
    count: u64,
    #[command(flatten)]
    random: RandomArgs,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Default)]
struct Tally {
    agreed: u64,
    skipped: u64,
    disagreements: Vec<u64>,
    bad_certificates: Vec<u64>,
}

/// Instances come from `gen_random_instance(seed + i)`; relevance targets use
/// query Q1 and the generated target access, containment uses Q1 and Q2.
/// Independent-only procedures force independent methods.
pub fn run(a: &FuzzArgs, seed: u64, deterministic: bool) -> Result<(Map<String, Json>, String, Outcome), CliError> {
    let start = std::time::Instant::now();
    let mut limits = a.random.limits();
    if matches!(a.target, Target::Ltr | Target::SingleOccurrence) {
        limits.mix = DependencyMix::Independent;
    }
    let oracle = a.limits.limits();
    let mut t = Tally::default();
    for i in 0..a.count {
        let s = seed.wrapping_add(i);
        let inst = gen_random_instance(s, &limits)?;
        let (schema, conf) = (&inst.schema, &inst.conf);
        let q = &inst.query_or_err("Q1")?.body;
        let access = inst.target.clone().ok_or_else(|| CliError::Input("generated instance has no target".into()))?;
        let (verdict, expected, claim): (Verdict, bool, Claim<'_>) = match a.target {
            Target::Ir => (
                decide_ir(schema, conf, q, &access)?,
                oracle_ir(schema, conf, q, &access, &oracle)?,
                Claim::ImmediatelyRelevant { q, access: &access },
            ),
            Target::Ltr => (
                decide_ltr_independent(schema, conf, q, &access)?,
                oracle_ltr(schema, conf, q, &access, &oracle)?,
                Claim::LongTermRelevant { q, access: &access },
            ),
            Target::SingleOccurrence => {
                let v = match decide_ltr_single_occurrence(schema, conf, q, &access) {
                    Err(Error::Unsupported(_)) => {
                        t.skipped += 1;
                        continue;
                    }
                    r => r?,
                };
                let exact = decide_ltr_independent(schema, conf, q, &access)?.is_yes();
                (v, exact, Claim::LongTermRelevant { q, access: &access })
            }
            Target::Contain => {
                let q2 = &inst.query_or_err("Q2")?.body;
                let v = decide_containment_bounded(schema, conf, q, q2, &Budget::for_query(q))?;
                if v.outcome == Outcome::Unknown {
                    t.skipped += 1;
                    continue;
                }
                // Containment holds iff the decider says yes; the certificate
                // is a counterexample, so compare on non-containment.
                let contained = oracle_containment(schema, conf, q, q2, &oracle)?;
                let v = Verdict { outcome: if v.is_yes() { Outcome::No } else { Outcome::Yes }, ..v };
                (v, !contained, Claim::NotContained { q1: q, q2 })
            }
        };
        if verdict.is_yes() == expected {
            t.agreed += 1;
        } else {
            t.disagreements.push(s);
        }
        if let Some(c) = &verdict.certificate {
            if check_certificate(schema, conf, claim, c).is_err() {
                t.bad_certificates.push(s);
            }
        }
    }
    let ok = t.disagreements.is_empty() && t.bad_certificates.is_empty();
    let outcome = if ok { Outcome::Yes } else { Outcome::No };
    let mut json = Map::new();
    json.insert("command".into(), json!("fuzz"));
    json.insert("target".into(), json!(format!("{:?}", a.target).to_lowercase()));
    json.insert("seed".into(), json!(seed));
    json.insert("result".into(), json!(outcome.as_str()));
    json.insert("cases".into(), json!(a.count));
    json.insert("agreed".into(), json!(t.agreed));
    json.insert("skipped".into(), json!(t.skipped));
    json.insert("disagreements".into(), json!(t.disagreements));
    json.insert("bad_certificates".into(), json!(t.bad_certificates));
    let millis = if deterministic { 0 } else { start.elapsed().as_millis() as u64 };
    json.insert("stats".into(), json!({ "millis": millis }));
    let summary = format!(
        "fuzz: {} agreed, {} skipped, {} disagreements, {} bad certificates",
        t.agreed,
        t.skipped,
        t.disagreements.len(),
        t.bad_certificates.len()
    );
    Ok((json, summary, outcome))
}
