//! JSON encoding of verdicts and certificates, and decoding of certificates
//! for re-validation.

use accrel_core::model::{check_access, Access, Path, Response, Schema, Value};
use accrel_core::query::{var_domains, Homomorphism, Query};
use accrel_core::relevance::{Certificate, Outcome, Stats};
use accrel_core::witness::Budget;
use serde_json::{json, Map, Value as Json};

use crate::CliError;

fn tokens(vs: &[Value]) -> Vec<String> {
    vs.iter().map(|v| v.token.to_string()).collect()
}

fn steps_json(p: &Path) -> Json {
    p.steps
        .iter()
        .map(|s| {
            json!({
                "method": s.access.method.to_string(),
                "binding": tokens(&s.access.binding),
                "response": s.response.tuples.iter().map(|t| tokens(t)).collect::<Vec<_>>(),
            })
        })
        .collect()
}

pub fn certificate_json(c: &Certificate) -> Json {
    match c {
        Certificate::Response(r) => json!({
            "kind": "response",
            "response": r.tuples.iter().map(|t| tokens(t)).collect::<Vec<_>>(),
        }),
        Certificate::Path(p) => json!({ "kind": "path", "steps": steps_json(p) }),
        Certificate::Homomorphism(h) => json!({ "kind": "homomorphism", "assignment": homomorphism_json(h) }),
        Certificate::Guess { guess, path } => json!({
            "kind": "guess",
            "disjunct": guess.disjunct,
            "classes": guess.classes.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
            "steps": steps_json(path),
        }),
    }
}

fn homomorphism_json(h: &Homomorphism) -> Json {
    let m: Map<String, Json> = h.iter().map(|(x, v)| (x.to_string(), Json::String(v.token.to_string()))).collect();
    Json::Object(m)
}

pub fn budget_json(b: &Budget) -> Json {
    json!({
        "facts": b.max_facts,
        "fresh": b.max_fresh,
        "depth": b.max_depth,
        "first_response": b.max_first_response,
        "timeout_ms": b.time_limit.map(|d| d.as_millis() as u64),
        "chain_heuristic": b.chain_heuristic,
    })
}

pub fn stats_json(s: &Stats, deterministic: bool) -> Json {
    json!({
        "nodes": s.nodes,
        "millis": if deterministic { 0 } else { s.millis },
        "exhaustive": s.exhaustive,
    })
}

/// Fields shared by every verdict: command, digest, result.
pub fn verdict(command: &str, digest: &str, outcome: Outcome) -> Map<String, Json> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("instance".into(), json!(digest));
    m.insert("result".into(), json!(outcome.as_str()));
    m
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn str_list(v: &Json, what: &str) -> Result<Vec<String>, CliError> {
    v.as_array()
        .ok_or_else(|| bad(format!("{what} must be a list")))?
        .iter()
        .map(|t| t.as_str().map(str::to_string).ok_or_else(|| bad(format!("{what} must hold strings"))))
        .collect()
}

fn decode_steps(steps: &Json, schema: &Schema, initial: accrel_core::model::Configuration) -> Result<Path, CliError> {
    let mut path = Path::new(initial);
    for s in steps.as_array().ok_or_else(|| bad("steps must be a list"))? {
        let method = s["method"].as_str().ok_or_else(|| bad("step without method"))?;
        let binding = str_list(&s["binding"], "binding")?;
        let probe = Access::new(method, Vec::new());
        let m = schema.method(method).ok_or_else(|| bad(format!("unknown method {method}")))?;
        let r = schema.relation_or_err(&m.relation)?;
        if binding.len() != m.inputs.len() {
            return Err(bad(format!("binding of {method} has the wrong length")));
        }
        let binding = m.inputs.iter().zip(&binding).map(|(&p, t)| Value::new(t, r.domain(p))).collect();
        let access = Access { binding, ..probe };
        check_access(&access, schema)?;
        let response = decode_tuples(&s["response"], schema, &m.relation)?;
        path.push(access, response);
    }
    Ok(path)
}

fn decode_tuples(v: &Json, schema: &Schema, rel: &str) -> Result<Response, CliError> {
    let r = schema.relation_or_err(rel)?;
    let mut tuples = Vec::new();
    for t in v.as_array().ok_or_else(|| bad("response must be a list"))? {
        let toks = str_list(t, "response tuple")?;
        if toks.len() != r.arity() {
            return Err(bad(format!("response tuple for {rel} has the wrong arity")));
        }
        tuples.push(toks.iter().enumerate().map(|(p, tok)| Value::new(tok, r.domain(p))).collect());
    }
    Ok(Response::of(tuples))
}

/// Rebuilds a certificate from its JSON form. Value domains come from the
/// schema positions they occupy (or the variable domains of `q`).
pub fn decode_certificate(
    v: &Json,
    schema: &Schema,
    conf: &accrel_core::model::Configuration,
    q: Option<&Query>,
    access: Option<&Access>,
) -> Result<Certificate, CliError> {
    match v["kind"].as_str() {
        Some("response") => {
            let access = access.ok_or_else(|| bad("response certificate without an access"))?;
            let m = check_access(access, schema)?;
            Ok(Certificate::Response(decode_tuples(&v["response"], schema, &m.relation)?))
        }
        Some("path") | Some("guess") => Ok(Certificate::Path(decode_steps(&v["steps"], schema, conf.clone())?)),
        Some("homomorphism") => {
            let q = q.ok_or_else(|| bad("homomorphism certificate without a query"))?;
            let doms = var_domains(q, schema)?;
            let obj = v["assignment"].as_object().ok_or_else(|| bad("assignment must be an object"))?;
            let mut h = Homomorphism::new();
            for (x, t) in obj {
                let d = doms.get(x.as_str()).ok_or_else(|| bad(format!("unknown variable {x}")))?;
                let t = t.as_str().ok_or_else(|| bad("assignment values must be strings"))?;
                h.insert(accrel_core::model::name(x), Value::new(t, d));
            }
            Ok(Certificate::Homomorphism(h))
        }
        _ => Err(bad("certificate has no known kind")),
    }
}
