//! Independent re-validation of certificates returned by the deciders.

use crate::model::{apply_response, truncate_path, validate_path, Access, Configuration, Path, Schema};
use crate::query::{to_dnf, Homomorphism, Prepared, Query};
use crate::relevance::Certificate;

/// The statement a certificate is supposed to justify.
#[derive(Clone, Copy, Debug)]
pub enum Claim<'a> {
    /// `q` is true in the configuration.
    Holds { q: &'a Query },
    /// Some response to `access` makes `q` true.
    ImmediatelyRelevant { q: &'a Query, access: &'a Access },
    /// Some path starting with `access` makes `q` true while its truncation
    /// leaves it false.
    LongTermRelevant { q: &'a Query, access: &'a Access },
    /// Some reachable configuration satisfies `q1` but not `q2`.
    NotContained { q1: &'a Query, q2: &'a Query },
}

/// `Ok(())` when `cert` proves `claim` from `conf`; otherwise the reason.
pub fn check_certificate(schema: &Schema, conf: &Configuration, claim: Claim<'_>, cert: &Certificate) -> Result<(), String> {
    match (claim, cert) {
        (Claim::Holds { q }, Certificate::Homomorphism(h)) => check_homomorphism(q, conf, h),
        (Claim::ImmediatelyRelevant { q, access }, Certificate::Response(resp)) => {
            let p = Prepared::new(q);
            if p.holds(conf) {
                return Err("query already holds before the access".into());
            }
            let after = apply_response(conf, access, resp, schema).map_err(|e| e.to_string())?;
            if !p.holds(&after) {
                return Err("query does not hold after the response".into());
            }
            Ok(())
        }
        (Claim::LongTermRelevant { q, access }, Certificate::Path(path) | Certificate::Guess { path, .. }) => {
            check_path_start(path, conf, schema)?;
            match path.steps.first() {
                Some(s) if s.access == *access => {}
                _ => return Err("path does not start with the claimed access".into()),
            }
            let p = Prepared::new(q);
            if !p.holds(&final_conf(path, schema)?) {
                return Err("query does not hold at the end of the path".into());
            }
            let trunc = truncate_path(path, schema).map_err(|e| e.to_string())?;
            if p.holds(&final_conf(&trunc, schema)?) {
                return Err("query also holds at the end of the truncated path".into());
            }
            Ok(())
        }
        (Claim::NotContained { q1, q2 }, Certificate::Path(path)) => {
            check_path_start(path, conf, schema)?;
            let end = final_conf(path, schema)?;
            if !Prepared::new(q1).holds(&end) {
                return Err("first query does not hold at the end of the path".into());
            }
            if Prepared::new(q2).holds(&end) {
                return Err("second query holds at the end of the path".into());
            }
            Ok(())
        }
        _ => Err("certificate kind does not match the claim".into()),
    }
}

fn check_homomorphism(q: &Query, conf: &Configuration, h: &Homomorphism) -> Result<(), String> {
    let ok = to_dnf(q)
        .iter()
        .any(|d| d.atoms.iter().all(|a| a.ground(h).is_some_and(|f| conf.contains(&f))));
    if ok {
        Ok(())
    } else {
        Err("no disjunct maps into the configuration under the assignment".into())
    }
}

fn check_path_start(path: &Path, conf: &Configuration, schema: &Schema) -> Result<(), String> {
    if path.initial != *conf {
        return Err("path does not start at the given configuration".into());
    }
    validate_path(path, schema).map_err(|e| e.to_string())
}

fn final_conf(path: &Path, schema: &Schema) -> Result<Configuration, String> {
    path.final_configuration(schema).map_err(|e| e.to_string())
}
