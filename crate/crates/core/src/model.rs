//! Schemas with access methods, configurations, accesses and access paths.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// A constant together with its abstract domain. `3` in domain `D` and `3` in
/// domain `E` are different values.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Value {
    pub token: Name,
    pub domain: Name,
}

impl Value {
    pub fn new(token: &str, domain: &str) -> Self {
        Value { token: name(token), domain: name(domain) }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token)
    }
}

pub type Tuple = Vec<Value>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Fact {
    pub relation: Name,
    pub values: Tuple,
}

impl Fact {
    pub fn new(relation: &str, values: Tuple) -> Self {
        Fact { relation: name(relation), values }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Attribute {
    pub name: Name,
    pub domain: Name,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Relation {
    pub name: Name,
    pub attributes: Vec<Attribute>,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn position(&self, attr: &str) -> Option<usize> {
        self.attributes.iter().position(|a| &*a.name == attr)
    }

    pub fn domain(&self, pos: usize) -> &Name {
        &self.attributes[pos].domain
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Mode {
    Dependent,
    Independent,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AccessMethod {
    pub name: Name,
    pub relation: Name,
    /// Input positions of the relation, strictly increasing.
    pub inputs: Vec<usize>,
    pub mode: Mode,
}

impl AccessMethod {
    pub fn is_free(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn is_input(&self, pos: usize) -> bool {
        self.inputs.binary_search(&pos).is_ok()
    }

    /// Can a response of this method bring a value into the active domain
    /// at position `pos`? Dependent inputs must already be known.
    pub fn introduces(&self, pos: usize) -> bool {
        self.mode == Mode::Independent || !self.is_input(pos)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Schema {
    pub domains: BTreeSet<Name>,
    pub relations: Vec<Relation>,
    pub methods: Vec<AccessMethod>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_domain(&mut self, d: &str) -> &mut Self {
        self.domains.insert(name(d));
        self
    }

    pub fn add_relation(&mut self, rel: &str, attrs: &[(&str, &str)]) -> Result<&mut Self> {
        if self.relation(rel).is_some() {
            return Err(Error::Schema(format!("duplicate relation `{rel}`")));
        }
        let mut seen = BTreeSet::new();
        let mut attributes = Vec::new();
        for (a, d) in attrs {
            if !seen.insert(*a) {
                return Err(Error::Schema(format!("duplicate attribute `{a}` in `{rel}`")));
            }
            if !self.domains.contains(*d) {
                return Err(Error::Schema(format!("undeclared domain `{d}` in `{rel}`")));
            }
            attributes.push(Attribute { name: name(a), domain: name(d) });
        }
        self.relations.push(Relation { name: name(rel), attributes });
        Ok(self)
    }

    pub fn add_method(&mut self, m: &str, rel: &str, inputs: &[&str], mode: Mode) -> Result<&mut Self> {
        if self.method(m).is_some() {
            return Err(Error::Schema(format!("duplicate access method `{m}`")));
        }
        let r = self.relation(rel).ok_or_else(|| Error::UnknownRelation(rel.into()))?;
        let mut pos = Vec::new();
        for a in inputs {
            let p = r
                .position(a)
                .ok_or_else(|| Error::Schema(format!("`{a}` is not an attribute of `{rel}`")))?;
            pos.push(p);
        }
        pos.sort_unstable();
        pos.dedup();
        let method = AccessMethod { name: name(m), relation: r.name.clone(), inputs: pos, mode };
        self.methods.push(method);
        Ok(self)
    }

    pub fn relation(&self, rel: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| &*r.name == rel)
    }

    pub fn relation_or_err(&self, rel: &str) -> Result<&Relation> {
        self.relation(rel).ok_or_else(|| Error::UnknownRelation(rel.into()))
    }

    pub fn method(&self, m: &str) -> Option<&AccessMethod> {
        self.methods.iter().find(|x| &*x.name == m)
    }

    pub fn method_or_err(&self, m: &str) -> Result<&AccessMethod> {
        self.method(m).ok_or_else(|| Error::UnknownMethod(m.into()))
    }

    pub fn methods_on<'a>(&'a self, rel: &'a str) -> impl Iterator<Item = &'a AccessMethod> + 'a {
        self.methods.iter().filter(move |m| &*m.relation == rel)
    }

    pub fn has_method(&self, rel: &str) -> bool {
        self.methods_on(rel).next().is_some()
    }

    pub fn all_independent(&self) -> bool {
        self.methods.iter().all(|m| m.mode == Mode::Independent)
    }

    pub fn validate(&self) -> Result<()> {
        let mut rels = BTreeSet::new();
        for r in &self.relations {
            if !rels.insert(&r.name) {
                return Err(Error::Schema(format!("duplicate relation `{}`", r.name)));
            }
            let mut attrs = BTreeSet::new();
            for a in &r.attributes {
                if !attrs.insert(&a.name) {
                    return Err(Error::Schema(format!("duplicate attribute `{}` in `{}`", a.name, r.name)));
                }
                if !self.domains.contains(&a.domain) {
                    return Err(Error::Schema(format!("undeclared domain `{}`", a.domain)));
                }
            }
        }
        let mut ms = BTreeSet::new();
        for m in &self.methods {
            if !ms.insert(&m.name) {
                return Err(Error::Schema(format!("duplicate access method `{}`", m.name)));
            }
            let r = self.relation_or_err(&m.relation)?;
            if m.inputs.iter().any(|&p| p >= r.arity()) || m.inputs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Schema(format!("bad input positions for `{}`", m.name)));
            }
        }
        Ok(())
    }

    /// Checks arity and per-position domains of a tuple.
    pub fn check_tuple(&self, rel: &str, t: &[Value]) -> Result<()> {
        let r = self.relation_or_err(rel)?;
        if r.arity() != t.len() {
            return Err(Error::Type(format!("{rel} has arity {} but got {} values", r.arity(), t.len())));
        }
        for (a, v) in r.attributes.iter().zip(t) {
            if a.domain != v.domain {
                return Err(Error::Type(format!(
                    "value {} of domain {} at attribute {}.{} of domain {}",
                    v.token, v.domain, rel, a.name, a.domain
                )));
            }
        }
        Ok(())
    }
}

/// Known facts plus admitted constants.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Configuration {
    facts: BTreeMap<Name, BTreeSet<Tuple>>,
    admitted: BTreeSet<Value>,
}

impl Configuration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, f: Fact) -> bool {
        self.facts.entry(f.relation).or_default().insert(f.values)
    }

    pub fn insert_tuple(&mut self, rel: &Name, t: Tuple) -> bool {
        self.facts.entry(rel.clone()).or_default().insert(t)
    }

    pub fn admit(&mut self, v: Value) {
        self.admitted.insert(v);
    }

    pub fn admitted(&self) -> &BTreeSet<Value> {
        &self.admitted
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.contains_tuple(&f.relation, &f.values)
    }

    pub fn contains_tuple(&self, rel: &str, t: &[Value]) -> bool {
        self.facts.get(rel).is_some_and(|s| s.contains(t))
    }

    pub fn tuples<'a>(&'a self, rel: &str) -> impl Iterator<Item = &'a Tuple> + 'a {
        self.facts.get(rel).into_iter().flatten()
    }

    pub fn relations(&self) -> impl Iterator<Item = (&Name, &BTreeSet<Tuple>)> {
        self.facts.iter().filter(|(_, s)| !s.is_empty())
    }

    /// All facts in (relation, tuple) order.
    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.relations()
            .flat_map(|(r, s)| s.iter().map(move |t| Fact { relation: r.clone(), values: t.clone() }))
    }

    pub fn len(&self) -> usize {
        self.facts.values().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn adom(&self) -> BTreeSet<Value> {
        let mut out = self.admitted.clone();
        for s in self.facts.values() {
            for t in s {
                out.extend(t.iter().cloned());
            }
        }
        out
    }

    pub fn in_adom(&self, v: &Value) -> bool {
        self.admitted.contains(v) || self.facts.values().flatten().any(|t| t.contains(v))
    }

    pub fn with_facts<'a>(&self, extra: impl IntoIterator<Item = &'a Fact>) -> Configuration {
        let mut c = self.clone();
        for f in extra {
            c.insert(f.clone());
        }
        c
    }

    /// Facts only; admitted constants are compared separately.
    pub fn is_subset(&self, other: &Configuration) -> bool {
        self.facts.iter().all(|(r, s)| s.iter().all(|t| other.contains_tuple(r, t)))
    }

    pub fn check(&self, schema: &Schema) -> Result<()> {
        for (r, s) in &self.facts {
            for t in s {
                schema.check_tuple(r, t)?;
            }
        }
        for v in &self.admitted {
            if !schema.domains.contains(&v.domain) {
                return Err(Error::Type(format!("constant {} has undeclared domain {}", v.token, v.domain)));
            }
        }
        Ok(())
    }
}

pub fn adom(conf: &Configuration) -> BTreeSet<Value> {
    conf.adom()
}

/// A method together with values for its input positions, in position order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Access {
    pub method: Name,
    pub binding: Vec<Value>,
}

impl Access {
    pub fn new(method: &str, binding: Vec<Value>) -> Self {
        Access { method: name(method), binding }
    }

    /// The access whose binding is the projection of `t` on the method's inputs.
    pub fn for_tuple(m: &AccessMethod, t: &[Value]) -> Self {
        Access { method: m.name.clone(), binding: m.inputs.iter().map(|&p| t[p].clone()).collect() }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Response {
    pub tuples: BTreeSet<Tuple>,
}

impl Response {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn of(tuples: impl IntoIterator<Item = Tuple>) -> Self {
        Response { tuples: tuples.into_iter().collect() }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Step {
    pub access: Access,
    pub response: Response,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Path {
    pub initial: Configuration,
    pub steps: Vec<Step>,
}

impl Path {
    pub fn new(initial: Configuration) -> Self {
        Path { initial, steps: Vec::new() }
    }

    pub fn push(&mut self, access: Access, response: Response) {
        self.steps.push(Step { access, response });
    }

    /// Configuration after replaying every response (no well-formedness check).
    pub fn final_configuration(&self, schema: &Schema) -> Result<Configuration> {
        let mut c = self.initial.clone();
        for s in &self.steps {
            c = apply_response(&c, &s.access, &s.response, schema)?;
        }
        Ok(c)
    }
}

/// Resolves the method and checks the binding's length and domains.
pub fn check_access<'a>(access: &Access, schema: &'a Schema) -> Result<&'a AccessMethod> {
    let m = schema.method_or_err(&access.method)?;
    let r = schema.relation_or_err(&m.relation)?;
    if access.binding.len() != m.inputs.len() {
        return Err(Error::Type(format!(
            "access {} expects {} bound values, got {}",
            m.name,
            m.inputs.len(),
            access.binding.len()
        )));
    }
    for (&p, v) in m.inputs.iter().zip(&access.binding) {
        if *r.domain(p) != v.domain {
            return Err(Error::Type(format!(
                "binding value {} of domain {} for {}.{} of domain {}",
                v.token,
                v.domain,
                r.name,
                r.attributes[p].name,
                r.domain(p)
            )));
        }
    }
    Ok(m)
}

pub fn is_well_formed(access: &Access, conf: &Configuration, schema: &Schema) -> Result<bool> {
    let m = check_access(access, schema)?;
    Ok(match m.mode {
        Mode::Independent => true,
        Mode::Dependent => {
            let ad = conf.adom();
            access.binding.iter().all(|v| ad.contains(v))
        }
    })
}

fn check_response(access: &Access, resp: &Response, schema: &Schema) -> Result<()> {
    let m = check_access(access, schema)?;
    for t in &resp.tuples {
        schema.check_tuple(&m.relation, t)?;
        for (&p, v) in m.inputs.iter().zip(&access.binding) {
            if t[p] != *v {
                return Err(Error::Type(format!(
                    "response tuple disagrees with the binding at position {p}: {} vs {}",
                    t[p], v
                )));
            }
        }
    }
    Ok(())
}

pub fn apply_response(conf: &Configuration, access: &Access, resp: &Response, schema: &Schema) -> Result<Configuration> {
    check_response(access, resp, schema)?;
    let rel = schema.method_or_err(&access.method)?.relation.clone();
    let mut c = conf.clone();
    for t in &resp.tuples {
        c.insert_tuple(&rel, t.clone());
    }
    Ok(c)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PathFailure {
    pub step: usize,
    pub reason: String,
}

impl fmt::Display for PathFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.reason)
    }
}

/// Every access is well-formed in the configuration reached so far and every
/// response agrees with its binding.
pub fn validate_path(path: &Path, schema: &Schema) -> Result<(), PathFailure> {
    let mut c = path.initial.clone();
    for (i, s) in path.steps.iter().enumerate() {
        let fail = |reason: String| PathFailure { step: i, reason };
        match is_well_formed(&s.access, &c, schema) {
            Ok(true) => {}
            Ok(false) => return Err(fail(format!("access {} uses an unavailable value", s.access.method))),
            Err(e) => return Err(fail(e.to_string())),
        }
        c = apply_response(&c, &s.access, &s.response, schema).map_err(|e| fail(e.to_string()))?;
    }
    Ok(())
}

/// Drops the first step, then keeps the longest prefix of the remaining steps
/// that stays well-formed when replayed from the initial configuration.
pub fn truncate_path(path: &Path, schema: &Schema) -> Result<Path> {
    let (_, rest) = path
        .steps
        .split_first()
        .ok_or_else(|| Error::Path("cannot truncate an empty path".into()))?;
    let mut c = path.initial.clone();
    let mut kept = Vec::new();
    for s in rest {
        if !is_well_formed(&s.access, &c, schema)? {
            break;
        }
        c = apply_response(&c, &s.access, &s.response, schema)?;
        kept.push(s.clone());
    }
    Ok(Path { initial: path.initial.clone(), steps: kept })
}

/// Mints canonical fresh values `f<domain><index>`, skipping tokens already
/// taken in that domain.
#[derive(Clone, Debug, Default)]
pub struct FreshSupply {
    next: BTreeMap<Name, usize>,
    used: BTreeMap<Name, usize>,
}

impl FreshSupply {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, domain: &str) -> usize {
        self.used.get(domain).copied().unwrap_or(0)
    }

    pub fn mint(&mut self, domain: &Name, avoid: &BTreeSet<Value>) -> Value {
        let i = self.next.entry(domain.clone()).or_insert(1);
        loop {
            let v = Value { token: name(&format!("f{domain}{i}")), domain: domain.clone() };
            *i += 1;
            if !avoid.contains(&v) {
                *self.used.entry(domain.clone()).or_insert(0) += 1;
                return v;
            }
        }
    }
}
