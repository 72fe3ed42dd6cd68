//! Exact procedures for independent accesses: immediate relevance, its
//! first-order rewriting for Boolean accesses, long-term relevance by guessing
//! which subgoals the access witnesses, and the single-occurrence fast path.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{check_access, Access, AccessMethod, Configuration, Fact, FreshSupply, Name, Path, Response, Schema, Value};
use crate::query::{
    to_dnf, var_domains, CTerm, CompiledCq, Cq, FactIndex, Homomorphism, Matcher, Prepared, Query, Term, VirtualAccess,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Outcome {
    Yes,
    No,
    Unknown,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Yes => "yes",
            Outcome::No => "no",
            Outcome::Unknown => "unknown_within_budget",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum SubgoalClass {
    NotWitnessed,
    ByConfig,
    ByFirstAccess,
    ByFurtherAccess,
}

impl SubgoalClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SubgoalClass::NotWitnessed => "not_witnessed",
            SubgoalClass::ByConfig => "by_config",
            SubgoalClass::ByFirstAccess => "by_first_access",
            SubgoalClass::ByFurtherAccess => "by_further_access",
        }
    }
}

/// Class of each subgoal of one DNF disjunct; subgoals of the other
/// disjuncts are not witnessed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubgoalGuess {
    pub disjunct: usize,
    pub classes: Vec<SubgoalClass>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Certificate {
    /// Response to the decided access.
    Response(Response),
    Path(Path),
    Homomorphism(Homomorphism),
    Guess { guess: SubgoalGuess, path: Path },
}

impl Certificate {
    pub fn path(&self) -> Option<&Path> {
        match self {
            Certificate::Path(p) | Certificate::Guess { path: p, .. } => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Stats {
    pub nodes: u64,
    pub millis: u64,
    /// The search covered the whole canonical space, so the outcome is exact.
    pub exhaustive: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Verdict {
    pub outcome: Outcome,
    pub certificate: Option<Certificate>,
    pub stats: Stats,
}

impl Verdict {
    pub(crate) fn exact(outcome: Outcome, certificate: Option<Certificate>, nodes: u64, start: Instant) -> Self {
        Verdict { outcome, certificate, stats: Stats { nodes, millis: start.elapsed().as_millis() as u64, exhaustive: true } }
    }

    pub fn is_yes(&self) -> bool {
        self.outcome == Outcome::Yes
    }

    pub fn is_no(&self) -> bool {
        self.outcome == Outcome::No
    }
}

/// Variable-to-binding assignment that makes atom `a` agree with the access on
/// its input positions, if one exists.
pub(crate) fn unify_with_binding(
    cq: &CompiledCq,
    atom: usize,
    m: &AccessMethod,
    binding: &[Value],
    assign: &mut [Option<Value>],
) -> bool {
    let a = &cq.atoms[atom];
    if a.relation != m.relation {
        return false;
    }
    for (&p, b) in m.inputs.iter().zip(binding) {
        match &a.terms[p] {
            CTerm::Const(c) => {
                if c != b {
                    return false;
                }
            }
            CTerm::Var(i) => match &assign[*i] {
                Some(v) if v != b => return false,
                Some(_) => {}
                None => assign[*i] = Some(b.clone()),
            },
        }
    }
    true
}

/// Maps every unassigned variable to its own fresh value.
fn complete_fresh(cq: &CompiledCq, assign: &mut [Option<Value>], doms: &BTreeMap<Name, Name>, avoid: &BTreeSet<Value>) {
    let mut fresh = FreshSupply::new();
    for (i, x) in cq.vars.iter().enumerate() {
        if assign[i].is_none() {
            assign[i] = Some(fresh.mint(&doms[x], avoid));
        }
    }
}

fn relation_of<'a>(schema: &'a Schema, access: &Access) -> Result<&'a AccessMethod> {
    check_access(access, schema)
}

/// Is there a response to `access` after which `q` becomes certain?
///
/// Searches one homomorphism per disjunct in which atoms over the accessed
/// relation may be matched by the access itself (inputs equal to the binding,
/// outputs free). Free outputs get one fresh value per domain. Well-formedness
/// of the access is not checked here.
pub fn decide_ir(schema: &Schema, conf: &Configuration, q: &Query, access: &Access) -> Result<Verdict> {
    let start = Instant::now();
    let m = relation_of(schema, access)?;
    let doms = var_domains(q, schema)?;
    let index = FactIndex::new(conf);
    let prepared = Prepared::new(q);
    if prepared.eval_index(&index).is_some() {
        return Ok(Verdict::exact(Outcome::No, None, 1, start));
    }
    let mut avoid = conf.adom();
    avoid.extend(access.binding.iter().cloned());
    let mut nodes = 0;
    for d in &prepared.disjuncts {
        let all: Vec<usize> = (0..d.atoms.len()).collect();
        let virt = VirtualAccess { relation: &m.relation, inputs: &m.inputs, binding: &access.binding };
        let mut matcher = Matcher::new(&index, d).with_virtual(virt);
        let found = matcher.first(&all, Vec::new());
        nodes += matcher.nodes;
        let Some((mut assign, by_access)) = found else { continue };
        let mut fresh = FreshSupply::new();
        let mut per_domain: BTreeMap<Name, Value> = BTreeMap::new();
        for (i, x) in d.vars.iter().enumerate() {
            if assign[i].is_none() {
                let dom = &doms[x];
                let v = per_domain.entry(dom.clone()).or_insert_with(|| fresh.mint(dom, &avoid));
                assign[i] = Some(v.clone());
            }
        }
        let tuples = (0..d.atoms.len())
            .filter(|&a| by_access[a])
            .map(|a| d.ground(a, &assign).expect("fully assigned").values);
        let resp = Response::of(tuples);
        return Ok(Verdict::exact(Outcome::Yes, Some(Certificate::Response(resp)), nodes, start));
    }
    Ok(Verdict::exact(Outcome::No, None, nodes, start))
}

/// `¬q ∧ (d₁ ∨ … ∨ dₖ)`: true on a configuration iff the access is immediately
/// relevant there.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IrRewriting {
    pub negated: Query,
    pub disjuncts: Vec<Query>,
}

impl IrRewriting {
    pub fn eval(&self, conf: &Configuration) -> bool {
        !Prepared::new(&self.negated).holds(conf) && self.disjuncts.iter().any(|d| Prepared::new(d).holds(conf))
    }
}

impl fmt::Display for IrRewriting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not ({}) & (", self.negated)?;
        if self.disjuncts.is_empty() {
            f.write_str("false")?;
        }
        for (i, d) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "({d})")?;
        }
        f.write_str(")")
    }
}

/// First-order rewriting for an access that binds every attribute: for each
/// nonempty set of subgoals unifiable with the bound tuple, the query with the
/// binding pushed through those subgoals and the subgoals removed.
pub fn ir_rewriting(schema: &Schema, q: &Query, access: &Access) -> Result<IrRewriting> {
    let m = relation_of(schema, access)?;
    let arity = schema.relation_or_err(&m.relation)?.arity();
    if m.inputs.len() != arity {
        return Err(Error::Unsupported(format!(
            "rewriting needs a method binding every attribute; {} has outputs",
            m.name
        )));
    }
    let tuple = &access.binding;
    let mut unifiable = Vec::new();
    for a in q.atoms() {
        if a.relation == m.relation && !unifiable.contains(a) && unifier(&a.terms, tuple).is_some() {
            unifiable.push(a.clone());
        }
    }
    if unifiable.len() > 20 {
        return Err(Error::Cap(format!("{} unifiable subgoals", unifiable.len())));
    }
    let mut disjuncts = Vec::new();
    for mask in 1u32..(1 << unifiable.len()) {
        let chosen: Vec<&crate::query::Atom> =
            unifiable.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a).collect();
        let mut sigma = BTreeMap::new();
        let ok = chosen.iter().all(|a| {
            unifier(&a.terms, tuple).is_some_and(|s| {
                s.into_iter().all(|(x, v)| match sigma.get(&x) {
                    Some(w) => *w == v,
                    None => {
                        sigma.insert(x, v);
                        true
                    }
                })
            })
        });
        if !ok {
            continue;
        }
        let removed = q.map_atoms(&mut |a| if chosen.contains(&a) { Query::truth() } else { Query::Atom(a.clone()) });
        disjuncts.push(removed.substitute(&sigma).simplified());
    }
    Ok(IrRewriting { negated: q.clone(), disjuncts })
}

fn unifier(terms: &[Term], tuple: &[Value]) -> Option<BTreeMap<Name, Value>> {
    let mut s = BTreeMap::new();
    for (t, v) in terms.iter().zip(tuple) {
        match t {
            Term::Const(c) if c != v => return None,
            Term::Const(_) => {}
            Term::Var(x) => {
                if s.insert(x.clone(), v.clone()).is_some_and(|w| w != *v) {
                    return None;
                }
            }
        }
    }
    Some(s)
}

/// Advances a little-endian-last odometer; false once it wraps around.
pub(crate) fn next_code(code: &mut [usize], base: usize) -> bool {
    for i in (0..code.len()).rev() {
        code[i] += 1;
        if code[i] < base {
            return true;
        }
        code[i] = 0;
    }
    false
}

/// Path: the access returning `first`, then one singleton access per fact of
/// `further` through the first method of its relation.
pub(crate) fn independent_path(schema: &Schema, conf: &Configuration, access: &Access, first: Vec<Fact>, further: &[Fact]) -> Path {
    let mut p = Path::new(conf.clone());
    p.push(access.clone(), Response::of(first.into_iter().map(|f| f.values)));
    for f in further {
        let m = schema.methods_on(&f.relation).next().expect("further facts have a method");
        p.push(Access::for_tuple(m, &f.values), Response::of([f.values.clone()]));
    }
    p
}

/// Long-term relevance when every method is independent.
///
/// Guesses, for one disjunct, which subgoals hold in the configuration, which
/// the first access returns and which later accesses return. Later facts are
/// the images of their subgoals with every otherwise unconstrained variable
/// sent to its own fresh value (the most general choice). The guess succeeds
/// when those later facts alone, added to the configuration, leave the query
/// false; the truncated path is exactly those later accesses.
pub fn decide_ltr_independent(schema: &Schema, conf: &Configuration, q: &Query, access: &Access) -> Result<Verdict> {
    let start = Instant::now();
    if let Some(m) = schema.methods.iter().find(|m| m.mode == crate::model::Mode::Dependent) {
        return Err(Error::Unsupported(format!("dependent method {} present", m.name)));
    }
    let m = relation_of(schema, access)?;
    let doms = var_domains(q, schema)?;
    let prepared = Prepared::new(q);
    let index = FactIndex::new(conf);
    if prepared.eval_index(&index).is_some() {
        return Ok(Verdict::exact(Outcome::No, None, 1, start));
    }
    let mut avoid = conf.adom();
    avoid.extend(access.binding.iter().cloned());
    let mut nodes = 0u64;
    for (di, d) in prepared.disjuncts.iter().enumerate() {
        let n = d.atoms.len();
        let can_first: Vec<bool> = (0..n)
            .map(|a| unify_with_binding(d, a, m, &access.binding, &mut vec![None; d.vars.len()]))
            .collect();
        let can_further: Vec<bool> = d.atoms.iter().map(|a| schema.has_method(&a.relation)).collect();
        let choices = [SubgoalClass::ByConfig, SubgoalClass::ByFirstAccess, SubgoalClass::ByFurtherAccess];
        let mut code = vec![0usize; n];
        loop {
            let classes: Vec<SubgoalClass> = code.iter().map(|&c| choices[c]).collect();
            let valid = classes.contains(&SubgoalClass::ByFirstAccess)
                && classes.iter().enumerate().all(|(a, c)| match c {
                    SubgoalClass::ByFirstAccess => can_first[a],
                    SubgoalClass::ByFurtherAccess => can_further[a],
                    _ => true,
                });
            if valid {
                nodes += 1;
                let mut init = vec![None; d.vars.len()];
                let consistent = (0..n)
                    .filter(|&a| classes[a] == SubgoalClass::ByFirstAccess)
                    .all(|a| unify_with_binding(d, a, m, &access.binding, &mut init));
                if consistent {
                    let config_atoms: Vec<usize> = (0..n).filter(|&a| classes[a] == SubgoalClass::ByConfig).collect();
                    let mut found = None;
                    let mut matcher = Matcher::new(&index, d);
                    matcher.for_each(&config_atoms, init, &mut |assign, _| {
                        nodes += 1;
                        let mut assign = assign.to_vec();
                        complete_fresh(d, &mut assign, &doms, &avoid);
                        let ground = |c: SubgoalClass| -> Vec<Fact> {
                            let set: BTreeSet<Fact> = (0..n)
                                .filter(|&a| classes[a] == c)
                                .map(|a| d.ground(a, &assign).expect("complete"))
                                .collect();
                            set.into_iter().collect()
                        };
                        let further: Vec<Fact> =
                            ground(SubgoalClass::ByFurtherAccess).into_iter().filter(|f| !conf.contains(f)).collect();
                        if !prepared.holds(&conf.with_facts(&further)) {
                            found = Some((ground(SubgoalClass::ByFirstAccess), further));
                            return false;
                        }
                        true
                    });
                    if let Some((first, further)) = found {
                        let path = independent_path(schema, conf, access, first, &further);
                        let guess = SubgoalGuess { disjunct: di, classes };
                        return Ok(Verdict::exact(Outcome::Yes, Some(Certificate::Guess { guess, path }), nodes, start));
                    }
                }
            }
            if !next_code(&mut code, choices.len()) {
                break;
            }
        }
    }
    Ok(Verdict::exact(Outcome::No, None, nodes, start))
}

/// Fast path for conjunctive queries in which the accessed relation occurs
/// once, all methods independent and every relation of the query accessible.
///
/// After pushing the binding into the accessed subgoal, the query splits into
/// components connected by shared variables. The access is relevant iff the
/// accessed subgoal's component is not already satisfied and the most
/// general facts for the unsatisfied components (fresh values everywhere) do not satisfy the query
/// without the accessed subgoal.
pub fn decide_ltr_single_occurrence(schema: &Schema, conf: &Configuration, q: &Query, access: &Access) -> Result<Verdict> {
    let start = Instant::now();
    if !schema.all_independent() {
        return Err(Error::Unsupported("single-occurrence fast path needs independent methods".into()));
    }
    if !q.is_cq() {
        return Err(Error::Unsupported("single-occurrence fast path needs a conjunctive query".into()));
    }
    if let Some(r) = q.relations().into_iter().find(|r| !schema.has_method(r)) {
        return Err(Error::Unsupported(format!("relation {r} of the query has no access method")));
    }
    let m = relation_of(schema, access)?;
    let doms = var_domains(q, schema)?;
    let cq = Cq { atoms: to_dnf(q).into_iter().next().map(|c| c.atoms).unwrap_or_default() };
    let occurrences: Vec<usize> = (0..cq.atoms.len()).filter(|&i| cq.atoms[i].relation == m.relation).collect();
    if occurrences.len() != 1 {
        return Err(Error::Unsupported(format!(
            "{} occurs {} times in the query",
            m.relation,
            occurrences.len()
        )));
    }
    let g = occurrences[0];
    let compiled = CompiledCq::new(&cq);
    let mut sigma = vec![None; compiled.vars.len()];
    if !unify_with_binding(&compiled, g, m, &access.binding, &mut sigma) {
        return Ok(Verdict::exact(Outcome::No, None, 1, start));
    }
    let n = compiled.atoms.len();
    // components over variables not fixed by the binding
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while c[r] != r {
            r = c[r];
        }
        c[i] = r;
        r
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let shares = compiled.atoms[a].terms.iter().any(|t| match t {
                CTerm::Var(i) => sigma[*i].is_none() && compiled.atoms[b].terms.contains(t),
                CTerm::Const(_) => false,
            });
            if shares {
                let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                comp[ra] = rb;
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|a| find(&mut comp, a)).collect();
    let index = FactIndex::new(conf);
    let mut nodes = 0;
    let mut unsatisfied = BTreeSet::new();
    for &r in roots.iter().collect::<BTreeSet<_>>() {
        let members: Vec<usize> = (0..n).filter(|&a| roots[a] == r).collect();
        let mut matcher = Matcher::new(&index, &compiled);
        let sat = matcher.first(&members, sigma.clone()).is_some();
        nodes += matcher.nodes;
        if !sat {
            unsatisfied.insert(r);
        }
    }
    if !unsatisfied.contains(&roots[g]) {
        return Ok(Verdict::exact(Outcome::No, None, nodes, start));
    }
    let mut avoid = conf.adom();
    avoid.extend(access.binding.iter().cloned());
    let mut assign = sigma;
    complete_fresh(&compiled, &mut assign, &doms, &avoid);
    let further: Vec<Fact> = (0..n)
        .filter(|&a| a != g && unsatisfied.contains(&roots[a]))
        .map(|a| compiled.ground(a, &assign).expect("complete"))
        .filter(|f| !conf.contains(f))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if Prepared::new(q).holds(&conf.with_facts(&further)) {
        return Ok(Verdict::exact(Outcome::No, None, nodes, start));
    }
    let first = vec![compiled.ground(g, &assign).expect("complete")];
    let path = independent_path(schema, conf, access, first, &further);
    Ok(Verdict::exact(Outcome::Yes, Some(Certificate::Path(path)), nodes, start))
}

/// Long-term relevance in general: exact for independent methods, budgeted
/// search otherwise.
pub fn decide_ltr(
    schema: &Schema,
    conf: &Configuration,
    q: &Query,
    access: &Access,
    budget: &crate::witness::Budget,
) -> Result<Verdict> {
    if schema.all_independent() {
        decide_ltr_independent(schema, conf, q, access)
    } else {
        crate::witness::decide_ltr_dependent_bounded(schema, conf, q, access, budget)
    }
}
