//! Problem instances and the reductions between relevance, containment and
//! containment with exact accesses over a constant set.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{
    check_access, name, truncate_path, validate_path, Access, AccessMethod, Configuration, Fact, FreshSupply, Mode, Name,
    Path, Relation, Response, Schema, Tuple, Value,
};
use crate::query::{check_query, eval, var_domains, Atom, Query, Term};
use crate::relevance::{Certificate, Outcome, Verdict};

/// A query with an optional answer tuple; Boolean when `head` is empty.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NamedQuery {
    pub name: Name,
    pub head: Vec<Name>,
    pub body: Query,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ProblemInstance {
    pub schema: Schema,
    pub conf: Configuration,
    pub queries: Vec<NamedQuery>,
    /// The distinguished access, if any.
    pub target: Option<Access>,
}

impl ProblemInstance {
    pub fn query(&self, name: &str) -> Option<&NamedQuery> {
        self.queries.iter().find(|q| &*q.name == name)
    }

    pub fn query_or_err(&self, name: &str) -> Result<&NamedQuery> {
        self.query(name).ok_or_else(|| Error::Query(format!("no query named `{name}`")))
    }

    /// Runs every validator: schema, facts, queries (constants must be
    /// admitted), head variables and the target access.
    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        self.conf.check(&self.schema)?;
        for q in &self.queries {
            check_query(&q.body, &self.schema, &self.conf, false)
                .map_err(|e| Error::Query(format!("{}: {e}", q.name)))?;
            let vars = q.body.vars();
            if let Some(x) = q.head.iter().find(|x| !vars.contains(*x)) {
                return Err(Error::Query(format!("{}: head variable {x} does not occur in the body", q.name)));
            }
        }
        if let Some(a) = &self.target {
            check_access(a, &self.schema)?;
        }
        Ok(())
    }
}

impl ProblemInstance {
    /// Rough encoding size: schema symbols, fact values and query nodes.
    pub fn size(&self) -> usize {
        let schema: usize = self.schema.relations.iter().map(|r| 1 + r.arity()).sum::<usize>()
            + self.schema.methods.iter().map(|m| 1 + m.inputs.len()).sum::<usize>()
            + self.schema.domains.len();
        let facts: usize = self.conf.facts().map(|f| 1 + f.values.len()).sum::<usize>() + self.conf.admitted().len();
        let queries: usize = self.queries.iter().map(|q| q.body.size() + q.head.len()).sum();
        schema + facts + queries + self.target.as_ref().map_or(0, |a| 1 + a.binding.len())
    }
}

/// `base`, or `base` followed by the smallest suffix making it unused.
fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}{i}")).find(|n| !taken.contains(n)).expect("unbounded")
}

fn schema_names(schema: &Schema) -> BTreeSet<String> {
    let mut s: BTreeSet<String> = schema.domains.iter().map(|d| d.to_string()).collect();
    s.extend(schema.relations.iter().map(|r| r.name.to_string()));
    s.extend(schema.methods.iter().map(|m| m.name.to_string()));
    s
}

/// Renames every variable of `q` to a name outside `taken`.
fn rename_apart(q: &Query, taken: &BTreeSet<Name>) -> Query {
    let mut used: BTreeSet<String> = taken.iter().map(|n| n.to_string()).collect();
    used.extend(q.vars().iter().map(|n| n.to_string()));
    let mut map: BTreeMap<Name, Name> = BTreeMap::new();
    for x in q.vars() {
        if taken.contains(&x) {
            let n = fresh_name(&format!("{x}_"), &used);
            used.insert(n.clone());
            map.insert(x, name(&n));
        }
    }
    q.map_atoms(&mut |a| {
        let terms = a
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(x) => Term::Var(map.get(x).cloned().unwrap_or_else(|| x.clone())),
                c => c.clone(),
            })
            .collect();
        Query::Atom(Atom { relation: a.relation.clone(), terms })
    })
}

fn fresh_var(base: &str, taken: &BTreeSet<Name>) -> Name {
    let used: BTreeSet<String> = taken.iter().map(|n| n.to_string()).collect();
    name(&fresh_name(base, &used))
}

/// Boolean instances for a query with answer variables: one per tuple of
/// head values drawn from the active domain plus one new constant per head
/// position. Each new constant is admitted in its instance.
pub fn boolean_arity_reduction(inst: &ProblemInstance, query: &str) -> Result<Vec<ProblemInstance>> {
    let q = inst.query_or_err(query)?;
    if q.head.is_empty() {
        return Ok(vec![inst.clone()]);
    }
    let doms = var_domains(&q.body, &inst.schema)?;
    let adom = inst.conf.adom();
    let mut avoid = adom.clone();
    avoid.extend(q.body.constants());
    let mut fresh = FreshSupply::new();
    let mut choices: Vec<Vec<Value>> = Vec::new();
    for x in &q.head {
        let d = doms.get(x).ok_or_else(|| Error::Query(format!("head variable {x} does not occur in the body")))?;
        let c = fresh.mint(d, &avoid);
        avoid.insert(c.clone());
        let mut vals: Vec<Value> = adom.iter().filter(|v| &v.domain == d).cloned().collect();
        vals.push(c);
        choices.push(vals);
    }
    let sizes: Vec<usize> = choices.iter().map(Vec::len).collect();
    let mut code = vec![0; sizes.len()];
    let mut out = Vec::new();
    loop {
        let h: BTreeMap<Name, Value> = q.head.iter().zip(&code).enumerate().map(|(i, (x, &k))| (x.clone(), choices[i][k].clone())).collect();
        let mut next = inst.clone();
        for v in h.values() {
            if !adom.contains(v) {
                next.conf.admit(v.clone());
            }
        }
        let nq = next.queries.iter_mut().find(|n| n.name == q.name).expect("query exists");
        nq.body = q.body.substitute(&h);
        nq.head.clear();
        out.push(next);
        if !odometer(&mut code, &sizes) {
            break;
        }
    }
    Ok(out)
}

fn odometer(code: &mut [usize], sizes: &[usize]) -> bool {
    for i in (0..code.len()).rev() {
        code[i] += 1;
        if code[i] < sizes[i] {
            return true;
        }
        code[i] = 0;
    }
    false
}

/// Which fragment of positive queries a reduction must stay in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Lang {
    Pq,
    Cq,
}

/// Non-containment of `q1` in `q2` as relevance of an access to a fresh
/// Boolean relation `A`: the produced query is `((∃x A(x)) ∨ q2) ∧ q1` and
/// the target access is `A(1)?`, which is relevant iff `q1` is not contained
/// in `q2`. In CQ mode the disjunction is then removed with
/// [`encode_disjunction_as_cq`].
pub fn containment_to_ltr(inst: &ProblemInstance, q1: &str, q2: &str, lang: Lang) -> Result<ProblemInstance> {
    let a = inst.query_or_err(q1)?.body.clone();
    let b = inst.query_or_err(q2)?.body.clone();
    if lang == Lang::Cq && !(a.is_cq() && b.is_cq()) {
        return Err(Error::Unsupported("CQ mode needs conjunctive queries".into()));
    }
    let mut taken = schema_names(&inst.schema);
    let bool_dom = fresh_name("Bool", &taken);
    taken.insert(bool_dom.clone());
    let flag = fresh_name("A", &taken);
    taken.insert(flag.clone());
    let method = fresh_name("mA", &taken);
    let mut out = ProblemInstance { schema: inst.schema.clone(), conf: inst.conf.clone(), queries: Vec::new(), target: None };
    out.schema.add_domain(&bool_dom);
    out.schema.add_relation(&flag, &[("b", &bool_dom)])?;
    out.schema.add_method(&method, &flag, &["b"], Mode::Dependent)?;
    let one = Value::new("1", &bool_dom);
    out.conf.admit(one.clone());
    let b = rename_apart(&b, &a.vars());
    let mut vars = a.vars();
    vars.extend(b.vars());
    let x = fresh_var("x", &vars);
    let body = Query::And(vec![Query::Or(vec![Query::atom(&flag, vec![Term::Var(x)]), b]), a]);
    out.queries.push(NamedQuery { name: name("Q"), head: Vec::new(), body });
    out.target = Some(Access::new(&method, vec![one]));
    match lang {
        Lang::Pq => Ok(out),
        Lang::Cq => encode_disjunction_as_cq(&out),
    }
}

/// Removes the disjunction from an instance produced by
/// [`containment_to_ltr`] in PQ mode. Every other relation gains a Boolean
/// place: existing facts get 1, and padding facts with 0 let the second query
/// hold trivially once the flag is set. `Or` and `P` are fixed relations
/// computing the disjunction and forcing the first query onto 1-facts.
pub fn encode_disjunction_as_cq(inst: &ProblemInstance) -> Result<ProblemInstance> {
    let shape = || Error::Unsupported("expected a query of the form ((∃x A(x)) | Q2) & Q1 and a target on A".into());
    let target = inst.target.as_ref().ok_or_else(shape)?;
    let flag_m = inst.schema.method_or_err(&target.method)?;
    let flag = flag_m.relation.clone();
    let [nq] = inst.queries.as_slice() else { return Err(shape()) };
    let Query::And(top) = &nq.body else { return Err(shape()) };
    let [Query::Or(alt), q1] = top.as_slice() else { return Err(shape()) };
    let [Query::Atom(fa), q2] = alt.as_slice() else { return Err(shape()) };
    if fa.relation != flag || !q1.is_cq() || !q2.is_cq() {
        return Err(shape());
    }
    let bool_dom = inst.schema.relation_or_err(&flag)?.domain(0).clone();
    let bv = |t: &str| Value::new(t, &bool_dom);

    let mut taken = schema_names(&inst.schema);
    let or_rel = fresh_name("Or", &taken);
    taken.insert(or_rel.clone());
    let p_rel = fresh_name("P", &taken);

    let mut schema = Schema::new();
    for d in &inst.schema.domains {
        schema.add_domain(d);
    }
    for r in &inst.schema.relations {
        let mut attrs: Vec<(String, String)> = r.attributes.iter().map(|a| (a.name.to_string(), a.domain.to_string())).collect();
        if r.name != flag {
            let used: BTreeSet<String> = attrs.iter().map(|(a, _)| a.clone()).collect();
            attrs.push((fresh_name("flag", &used), bool_dom.to_string()));
        }
        let pairs: Vec<(&str, &str)> = attrs.iter().map(|(a, d)| (a.as_str(), d.as_str())).collect();
        schema.add_relation(&r.name, &pairs)?;
    }
    schema.add_relation(&or_rel, &[("l", &bool_dom), ("r", &bool_dom)])?;
    schema.add_relation(&p_rel, &[("b", &bool_dom)])?;
    for m in &inst.schema.methods {
        let r = inst.schema.relation_or_err(&m.relation)?;
        let inputs: Vec<&str> = m.inputs.iter().map(|&p| &*r.attributes[p].name).collect();
        schema.add_method(&m.name, &m.relation, &inputs, m.mode)?;
    }

    let mut conf = Configuration::new();
    for v in inst.conf.admitted() {
        conf.admit(v.clone());
    }
    for f in inst.conf.facts() {
        let mut values = f.values.clone();
        if f.relation != flag {
            values.push(bv("1"));
        }
        conf.insert(Fact { relation: f.relation, values });
    }
    for (l, r) in [("1", "0"), ("0", "1"), ("1", "1")] {
        conf.insert(Fact::new(&or_rel, vec![bv(l), bv(r)]));
    }
    conf.insert(Fact::new(&p_rel, vec![bv("1")]));
    conf.insert(Fact::new(&flag, vec![bv("0")]));
    // one padding constant per domain, shared across relations
    let mut pad: BTreeMap<Name, Value> = BTreeMap::new();
    let mut avoid = inst.conf.adom();
    avoid.extend(q1.constants());
    avoid.extend(q2.constants());
    let mut supply = FreshSupply::new();
    for d in &inst.schema.domains {
        let v = match inst.conf.adom().into_iter().find(|v| &v.domain == d) {
            Some(v) => v,
            None => supply.mint(d, &avoid),
        };
        pad.insert(d.clone(), v);
    }
    for r in inst.schema.relations.iter().filter(|r| r.name != flag) {
        let mut values: Vec<Value> = (0..r.arity()).map(|p| pad[r.domain(p)].clone()).collect();
        values.push(bv("0"));
        conf.insert(Fact { relation: r.name.clone(), values });
    }
    // atoms of the second query with constants need their own padding
    for a in q2.atoms() {
        if a.terms.iter().any(|t| matches!(t, Term::Const(_))) {
            let r = inst.schema.relation_or_err(&a.relation)?;
            let mut values: Vec<Value> = a
                .terms
                .iter()
                .enumerate()
                .map(|(p, t)| match t {
                    Term::Const(c) => c.clone(),
                    Term::Var(_) => pad[r.domain(p)].clone(),
                })
                .collect();
            values.push(bv("0"));
            conf.insert(Fact { relation: a.relation.clone(), values });
        }
    }

    let mut vars = nq.body.vars();
    let b1 = fresh_var("b1", &vars);
    vars.insert(b1.clone());
    let b2 = fresh_var("b2", &vars);
    vars.insert(b2.clone());
    let b = fresh_var("b", &vars);
    let tag = |q: &Query, v: &Name| -> Vec<Atom> {
        q.atoms()
            .into_iter()
            .map(|a| {
                let mut terms = a.terms.clone();
                terms.push(Term::Var(v.clone()));
                Atom { relation: a.relation.clone(), terms }
            })
            .collect()
    };
    let mut atoms = vec![Atom::new(&flag, vec![Term::Var(b1.clone())])];
    atoms.extend(tag(q2, &b2));
    atoms.push(Atom::new(&or_rel, vec![Term::Var(b1), Term::Var(b2)]));
    atoms.extend(tag(q1, &b));
    atoms.push(Atom::new(&p_rel, vec![Term::Var(b)]));
    let out = ProblemInstance {
        schema,
        conf,
        queries: vec![NamedQuery { name: nq.name.clone(), head: Vec::new(), body: Query::conj(atoms) }],
        target: inst.target.clone(),
    };
    Ok(out)
}

/// Relevance of `access` for `query` as non-containment: the result holds
/// `Q1`, the query with each atom on the accessed relation widened to
/// `R(i, o) | IsBind(i)`, and `Q2`, the original query, with the single fact
/// `IsBind(binding)` added. The access is relevant iff `Q1` is not contained
/// in `Q2`.
pub fn ltr_to_containment(inst: &ProblemInstance, query: &str, access: &Access) -> Result<ProblemInstance> {
    let q = inst.query_or_err(query)?.body.clone();
    let m = check_access(access, &inst.schema)?.clone();
    let r = inst.schema.relation_or_err(&m.relation)?.clone();
    let taken = schema_names(&inst.schema);
    let is_bind = fresh_name("IsBind", &taken);
    let mut out = ProblemInstance { schema: inst.schema.clone(), conf: inst.conf.clone(), queries: Vec::new(), target: None };
    let attrs: Vec<(String, String)> = m.inputs.iter().map(|&p| (r.attributes[p].name.to_string(), r.domain(p).to_string())).collect();
    let pairs: Vec<(&str, &str)> = attrs.iter().map(|(a, d)| (a.as_str(), d.as_str())).collect();
    out.schema.add_relation(&is_bind, &pairs)?;
    out.conf.insert(Fact::new(&is_bind, access.binding.clone()));
    let widened = q
        .map_atoms(&mut |a| {
            if a.relation == m.relation {
                let inputs = m.inputs.iter().map(|&p| a.terms[p].clone()).collect();
                Query::Or(vec![Query::Atom(a.clone()), Query::Atom(Atom { relation: name(&is_bind), terms: inputs })])
            } else {
                Query::Atom(a.clone())
            }
        })
        .normalized();
    out.queries.push(NamedQuery { name: name("Q1"), head: Vec::new(), body: widened });
    out.queries.push(NamedQuery { name: name("Q2"), head: Vec::new(), body: q });
    Ok(out)
}

fn unify_atom(a: &Atom, m: &AccessMethod, binding: &[Value], sigma: &mut BTreeMap<Name, Value>) -> bool {
    if a.relation != m.relation {
        return false;
    }
    for (&p, b) in m.inputs.iter().zip(binding) {
        match &a.terms[p] {
            Term::Const(c) if c != b => return false,
            Term::Const(_) => {}
            Term::Var(x) => match sigma.get(x) {
                Some(v) if v != b => return false,
                Some(_) => {}
                None => {
                    sigma.insert(x.clone(), b.clone());
                }
            },
        }
    }
    true
}

/// Relevance of `access` for a conjunctive query through a containment
/// decider. Splits the query into the subgoals compatible with the access
/// and the rest; for every proper subset kept (smallest first), the dropped
/// subgoals are the ones the access would witness, so their unifier with the
/// binding is applied before asking whether the remainder is contained in
/// the query. Any non-containment makes the access relevant.
pub fn ltr_via_containment_cq(
    schema: &Schema,
    conf: &Configuration,
    q: &Query,
    access: &Access,
    decider: &mut dyn FnMut(&Query, &Query) -> Result<Verdict>,
) -> Result<Verdict> {
    let start = Instant::now();
    if !q.is_cq() {
        return Err(Error::Unsupported("ltr_via_containment_cq needs a conjunctive query".into()));
    }
    let m = check_access(access, schema)?.clone();
    let atoms: Vec<Atom> = q.atoms().into_iter().cloned().collect();
    let compatible: Vec<usize> =
        (0..atoms.len()).filter(|&i| unify_atom(&atoms[i], &m, &access.binding, &mut BTreeMap::new())).collect();
    let mut nodes = 0;
    let mut unknown = false;
    let n = compatible.len();
    let mut subsets: Vec<u64> = (0..(1u64 << n)).filter(|&s| s != (1u64 << n) - 1).collect();
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    for kept in subsets {
        let dropped: Vec<usize> = (0..n).filter(|i| kept >> i & 1 == 0).map(|i| compatible[i]).collect();
        let mut sigma = BTreeMap::new();
        if !dropped.iter().all(|&i| unify_atom(&atoms[i], &m, &access.binding, &mut sigma)) {
            continue;
        }
        let rest: Vec<Atom> = (0..atoms.len()).filter(|i| !dropped.contains(i)).map(|i| atoms[i].substitute(&sigma)).collect();
        let sub = Query::conj(rest);
        let v = decider(&sub, q)?;
        nodes += v.stats.nodes;
        match v.outcome {
            Outcome::No => {
                let cert = v.certificate.as_ref().and_then(|c| c.path()).and_then(|p| {
                    relevance_path(schema, conf, q, &m, access, p, &atoms, &dropped, &sigma, &sub)
                });
                let mut out = Verdict::exact(Outcome::Yes, cert.map(Certificate::Path), nodes, start);
                out.stats.exhaustive = true;
                return Ok(out);
            }
            Outcome::Unknown => unknown = true,
            Outcome::Yes => {}
        }
    }
    let mut out = Verdict::exact(if unknown { Outcome::Unknown } else { Outcome::No }, None, nodes, start);
    out.stats.exhaustive = !unknown;
    Ok(out)
}

/// Prepends the facts of the dropped subgoals, returned by `access`, to a
/// non-containment path; kept only if it re-validates as a relevance witness.
#[allow(clippy::too_many_arguments)]
fn relevance_path(
    schema: &Schema,
    conf: &Configuration,
    q: &Query,
    m: &AccessMethod,
    access: &Access,
    p: &Path,
    atoms: &[Atom],
    dropped: &[usize],
    sigma: &BTreeMap<Name, Value>,
    sub: &Query,
) -> Option<Path> {
    let end = p.final_configuration(schema).ok()?;
    let mut h = eval(sub, &end)?;
    h.extend(sigma.iter().map(|(k, v)| (k.clone(), v.clone())));
    let doms = var_domains(q, schema).ok()?;
    let mut avoid = end.adom();
    avoid.extend(access.binding.iter().cloned());
    let mut supply = FreshSupply::new();
    for x in q.vars() {
        if !h.contains_key(&x) {
            h.insert(x.clone(), supply.mint(&doms[&x], &avoid));
        }
    }
    let response = Response::of(dropped.iter().map(|&i| atoms[i].ground(&h).expect("total").values));
    let mut path = Path::new(conf.clone());
    path.push(Access { method: m.name.clone(), binding: access.binding.clone() }, response);
    path.steps.extend(p.steps.iter().cloned());
    let full = path.final_configuration(schema).ok()?;
    let trunc = truncate_path(&path, schema).ok()?.final_configuration(schema).ok()?;
    (validate_path(&path, schema).is_ok() && eval(q, &full).is_some() && eval(q, &trunc).is_none()).then_some(path)
}

fn one_method_per_relation(schema: &Schema) -> Result<()> {
    for r in &schema.relations {
        if schema.methods_on(&r.name).count() > 1 {
            return Err(Error::Unsupported(format!("{} has more than one access method", r.name)));
        }
    }
    Ok(())
}

/// A containment-with-exact-accesses instance (one method per relation, a
/// constant set, fixed facts only on relations without methods) read as a
/// configuration: the constants become admitted constants.
pub fn cm_to_config(cm: &ProblemInstance) -> Result<ProblemInstance> {
    one_method_per_relation(&cm.schema)?;
    if let Some(f) = cm.conf.facts().find(|f| cm.schema.has_method(&f.relation)) {
        return Err(Error::Unsupported(format!("fact {f} on a relation with an access method")));
    }
    let out = cm.clone();
    out.validate()?;
    Ok(out)
}

/// Encodes a configuration into the contained query. Facts on accessible
/// relations are conjoined to `q1`. Each non-monadic relation without
/// methods becomes accessible through a Boolean dependent method; its
/// columns are guarded by fixed monadic projections, its known facts are
/// conjoined to `q1`, and the known-false tuples over the projections are
/// disjoined to `q2`. The constants are the active domain.
pub fn config_to_cm(inst: &ProblemInstance, q1: &str, q2: &str, k: usize, lang: Lang) -> Result<ProblemInstance> {
    if lang == Lang::Cq {
        return Err(Error::Unsupported("config_to_cm is implemented for positive queries only".into()));
    }
    one_method_per_relation(&inst.schema)?;
    let a = inst.query_or_err(q1)?.body.clone();
    let b = inst.query_or_err(q2)?.body.clone();
    let fixed: Vec<&Relation> = inst.schema.relations.iter().filter(|r| !inst.schema.has_method(&r.name)).collect();
    if let Some(r) = fixed.iter().find(|r| r.arity() > k) {
        return Err(Error::Unsupported(format!("{} has arity {} above the bound {k}", r.name, r.arity())));
    }
    let wide: Vec<&Relation> = fixed.into_iter().filter(|r| r.arity() > 1).collect();
    let mut taken = schema_names(&inst.schema);
    let mut out = ProblemInstance { schema: inst.schema.clone(), ..ProblemInstance::default() };
    for v in inst.conf.adom() {
        out.conf.admit(v);
    }
    let mut extra_q1: Vec<Query> = Vec::new();
    let mut extra_q2: Vec<Query> = Vec::new();
    let mut guards: BTreeMap<Name, Vec<String>> = BTreeMap::new();
    for f in inst.conf.facts() {
        if inst.schema.has_method(&f.relation) {
            extra_q1.push(ground_atom(&f));
        } else if !wide.iter().any(|r| r.name == f.relation) {
            out.conf.insert(f);
        }
    }
    for r in &wide {
        let mname = fresh_name(&format!("acc{}", r.name), &taken);
        taken.insert(mname.clone());
        let all: Vec<&str> = r.attributes.iter().map(|a| &*a.name).collect();
        out.schema.add_method(&mname, &r.name, &all, Mode::Dependent)?;
        let mut cols = Vec::new();
        let mut projections: Vec<BTreeSet<Value>> = Vec::new();
        for (p, attr) in r.attributes.iter().enumerate() {
            let pname = fresh_name(&format!("{}_{}", r.name, attr.name), &taken);
            taken.insert(pname.clone());
            out.schema.add_relation(&pname, &[("v", &attr.domain)])?;
            let vals: BTreeSet<Value> = inst.conf.tuples(&r.name).map(|t| t[p].clone()).collect();
            for v in &vals {
                out.conf.insert(Fact::new(&pname, vec![v.clone()]));
            }
            projections.push(vals);
            cols.push(pname);
        }
        let mut tuples: Vec<Tuple> = vec![Vec::new()];
        for vals in &projections {
            tuples = tuples.iter().flat_map(|t| vals.iter().map(move |v| [t.clone(), vec![v.clone()]].concat())).collect();
        }
        for t in tuples {
            let f = Fact { relation: r.name.clone(), values: t };
            if inst.conf.contains(&f) {
                extra_q1.push(ground_atom(&f));
            } else {
                extra_q2.push(ground_atom(&f));
            }
        }
        guards.insert(r.name.clone(), cols);
    }
    let guard = |q: &Query| {
        q.map_atoms(&mut |at| match guards.get(&at.relation) {
            Some(cols) => {
                let mut parts = vec![Query::Atom(at.clone())];
                parts.extend(cols.iter().zip(&at.terms).map(|(c, t)| Query::Atom(Atom { relation: name(c), terms: vec![t.clone()] })));
                Query::And(parts)
            }
            None => Query::Atom(at.clone()),
        })
    };
    let mut body1 = vec![guard(&a)];
    body1.extend(extra_q1);
    let mut body2 = vec![guard(&b)];
    body2.extend(extra_q2);
    out.queries.push(NamedQuery { name: name("Q1"), head: Vec::new(), body: Query::And(body1).normalized() });
    out.queries.push(NamedQuery { name: name("Q2"), head: Vec::new(), body: Query::Or(body2).normalized() });
    out.validate()?;
    Ok(out)
}

fn ground_atom(f: &Fact) -> Query {
    Query::Atom(Atom { relation: f.relation.clone(), terms: f.values.iter().cloned().map(Term::Const).collect() })
}
