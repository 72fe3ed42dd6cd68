//! Budgeted witness search for dependent accesses: non-containment under
//! access limitations and long-term relevance.
//!
//! A candidate witness starts from the image of one disjunct of the goal
//! query. Facts whose dependent inputs are not yet available get support
//! facts that introduce the missing values, recursively, so every fresh value
//! is produced by exactly one access and supports form trees. A branch dies
//! as soon as the forbidden query becomes true, which is sound because
//! queries are monotone.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::model::{
    check_access, is_well_formed, truncate_path, validate_path, Access, AccessMethod, Configuration, Fact, FreshSupply, Mode,
    Name, Path, Response, Schema, Value,
};
use crate::query::{var_domains, CompiledCq, Prepared, Query};
use crate::relevance::{next_code, unify_with_binding, Certificate, Outcome, Stats, Verdict};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Budget {
    /// Facts added beyond the initial configuration (targets and supports).
    pub max_facts: usize,
    pub max_fresh: usize,
    /// Longest chain of support facts below a target value.
    pub max_depth: usize,
    pub max_first_response: usize,
    pub time_limit: Option<Duration>,
    /// Restrict supports to linear chains, at most one per query atom.
    pub chain_heuristic: bool,
}

impl Budget {
    pub fn for_query(q: &Query) -> Budget {
        let atoms = q.atoms().len().max(1);
        let depth = q.vars().len().max(1);
        Budget {
            max_facts: atoms * (1 + depth),
            max_fresh: depth + atoms,
            max_depth: depth,
            max_first_response: atoms,
            time_limit: None,
            chain_heuristic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        const CAP: usize = 4096;
        if self.max_facts > CAP || self.max_fresh > CAP || self.max_depth > CAP || self.max_first_response > CAP {
            return Err(Error::Budget(format!("every budget must be at most {CAP}")));
        }
        if self.time_limit == Some(Duration::ZERO) {
            return Err(Error::Budget("time limit must be positive".into()));
        }
        Ok(())
    }
}

/// Orders `facts` so that every dependent binding is available when used.
/// Facts already in `conf` are skipped. Greedy is complete because
/// availability only grows.
pub fn producible_closure(schema: &Schema, conf: &Configuration, facts: &[Fact]) -> Result<Option<Support>> {
    for f in facts {
        if !schema.has_method(&f.relation) {
            return Err(Error::Unsupported(format!("{} has no access method", f.relation)));
        }
    }
    let mut avail = conf.adom();
    let mut pending: Vec<&Fact> = facts.iter().filter(|f| !conf.contains(f)).collect::<BTreeSet<_>>().into_iter().collect();
    let mut order = Vec::new();
    loop {
        let before = pending.len();
        pending.retain(|f| match usable_method(schema, f, &avail) {
            Some(m) => {
                avail.extend(f.values.iter().cloned());
                order.push(((*f).clone(), m.name.clone()));
                false
            }
            None => true,
        });
        if pending.is_empty() {
            return Ok(Some(order));
        }
        if pending.len() == before {
            return Ok(None);
        }
    }
}

fn usable_method<'a>(schema: &'a Schema, f: &Fact, avail: &BTreeSet<Value>) -> Option<&'a AccessMethod> {
    schema
        .methods
        .iter()
        .filter(|m| m.relation == f.relation)
        .find(|m| m.mode == Mode::Independent || m.inputs.iter().all(|&p| avail.contains(&f.values[p])))
}

fn order_to_path(schema: &Schema, path: &mut Path, order: &[(Fact, Name)]) {
    for (f, m) in order {
        let m = schema.method(m).expect("method from closure");
        path.push(Access::for_tuple(m, &f.values), Response::of([f.values.clone()]));
    }
}

#[derive(Clone)]
struct State {
    facts: BTreeSet<Fact>,
    levels: BTreeMap<Value, usize>,
    fresh: FreshSupply,
    heads: usize,
    /// Values that already have a support fact.
    supplied: BTreeSet<Value>,
}

enum Slot {
    Known(Value),
    Supported,
    Filler,
}

/// Facts in production order, each with the method that produces it.
pub type Support = Vec<(Fact, Name)>;

/// Needed facts, fresh-value supports and pending values of a visited node.
type SeenKey = (Vec<Fact>, Vec<(Value, usize)>, Vec<Value>);

struct Search<'a> {
    schema: &'a Schema,
    budget: &'a Budget,
    deadline: Option<Instant>,
    nodes: u64,
    cut: bool,
    seen: HashSet<SeenKey>,
    producible: BTreeSet<Name>,
    chain_limit: usize,
}

#[allow(clippy::type_complexity, clippy::too_many_arguments)]
impl<'a> Search<'a> {
    fn new(schema: &'a Schema, budget: &'a Budget, chain_limit: usize) -> Self {
        let mut producible = BTreeSet::new();
        for m in &schema.methods {
            let r = schema.relation(&m.relation).expect("validated schema");
            for p in 0..r.arity() {
                if m.introduces(p) {
                    producible.insert(r.domain(p).clone());
                }
            }
        }
        Search {
            schema,
            budget,
            deadline: budget.time_limit.map(|d| Instant::now() + d),
            nodes: 0,
            cut: false,
            seen: HashSet::new(),
            producible,
            chain_limit,
        }
    }

    fn out_of_time(&mut self) -> bool {
        if self.deadline.is_some_and(|d| Instant::now() > d) {
            self.cut = true;
            return true;
        }
        false
    }

    fn fresh_ok(&mut self, st: &State, domain: &Name, extra: usize) -> bool {
        if st.fresh.count(domain) + extra > self.budget.max_fresh {
            self.cut = true;
            false
        } else {
            true
        }
    }

    /// Completes `st.facts` with supports until every fact is producible from
    /// `base`. `reject` sees `base` plus the current facts.
    fn extend(
        &mut self,
        base: &Configuration,
        st: State,
        reject: &dyn Fn(&Configuration) -> bool,
        avoid: &BTreeSet<Value>,
    ) -> Option<Support> {
        self.nodes += 1;
        if self.out_of_time() {
            return None;
        }
        let key = (
            st.facts.iter().cloned().collect(),
            st.levels.iter().map(|(v, l)| (v.clone(), *l)).collect(),
            st.supplied.iter().cloned().collect(),
        );
        if self.seen.len() > 2_000_000 {
            self.seen.clear();
        }
        if !self.seen.insert(key) {
            return None;
        }
        let conf = base.with_facts(&st.facts);
        if reject(&conf) {
            return None;
        }
        let target: Vec<Fact> = st.facts.iter().cloned().collect();
        let mut avail = base.adom();
        let mut order = Vec::new();
        let mut blocked: Vec<&Fact> = target.iter().filter(|f| !base.contains(f)).collect();
        loop {
            let before = blocked.len();
            blocked.retain(|f| match usable_method(self.schema, f, &avail) {
                Some(m) => {
                    avail.extend(f.values.iter().cloned());
                    order.push(((*f).clone(), m.name.clone()));
                    false
                }
                None => true,
            });
            if blocked.is_empty() {
                return Some(order);
            }
            if blocked.len() == before {
                break;
            }
        }
        // Branch on one blocked fact whose needs are not all supplied yet: any
        // completion supports the first unsupplied need of the method it uses.
        let mut missing: Option<BTreeSet<Value>> = None;
        for f in &blocked {
            let mut possible = false;
            let mut firsts = BTreeSet::new();
            let mut waiting = false;
            for m in self.schema.methods_on(&f.relation) {
                let need: Vec<&Value> = m.inputs.iter().map(|&p| &f.values[p]).filter(|v| !avail.contains(*v)).collect();
                if need.iter().all(|v| self.producible.contains(&v.domain)) {
                    possible = true;
                    match need.into_iter().find(|v| !st.supplied.contains(*v)) {
                        Some(v) => {
                            firsts.insert(v.clone());
                        }
                        None => waiting = true,
                    }
                }
            }
            if !possible {
                return None;
            }
            if missing.is_none() && !waiting {
                missing = Some(firsts);
            }
        }
        let missing = missing?;
        for u in &missing {
            let level = st.levels.get(u).copied().unwrap_or(0);
            if level + 1 > self.budget.max_depth {
                self.cut = true;
                continue;
            }
            if level == 0 && st.heads >= self.chain_limit {
                self.cut = true;
                continue;
            }
            for m in &self.schema.methods {
                let r = self.schema.relation(&m.relation).expect("validated schema");
                for p in 0..r.arity() {
                    if *r.domain(p) != u.domain || !m.introduces(p) {
                        continue;
                    }
                    let mut options: Vec<Vec<Slot>> = Vec::new();
                    for q in 0..r.arity() {
                        let d = r.domain(q);
                        if q == p {
                            options.push(vec![Slot::Known(u.clone())]);
                        } else if m.mode == Mode::Dependent && m.is_input(q) {
                            let mut o: Vec<Slot> =
                                avail.iter().filter(|v| &v.domain == d).cloned().map(Slot::Known).collect();
                            if self.producible.contains(d) {
                                o.push(Slot::Supported);
                            }
                            options.push(o);
                        } else {
                            options.push(vec![Slot::Filler]);
                        }
                    }
                    if options.iter().any(Vec::is_empty) {
                        continue;
                    }
                    let sizes: Vec<usize> = options.iter().map(Vec::len).collect();
                    let mut code = vec![0usize; sizes.len()];
                    loop {
                        if let Some(found) =
                            self.try_producer(base, &st, reject, avoid, r.arity(), &options, &code, &m.relation, level, u)
                        {
                            return Some(found);
                        }
                        if self.out_of_time() {
                            return None;
                        }
                        if !advance(&mut code, &sizes) {
                            break;
                        }
                    }
                }
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn try_producer(
        &mut self,
        base: &Configuration,
        st: &State,
        reject: &dyn Fn(&Configuration) -> bool,
        avoid: &BTreeSet<Value>,
        arity: usize,
        options: &[Vec<Slot>],
        code: &[usize],
        relation: &Name,
        level: usize,
        supplies: &Value,
    ) -> Option<Support> {
        let supported = (0..arity).filter(|&q| matches!(options[q][code[q]], Slot::Supported)).count();
        if self.budget.chain_heuristic && supported > 1 {
            self.cut = true;
            return None;
        }
        let mut next = st.clone();
        let mut values = Vec::with_capacity(arity);
        let r = self.schema.relation(relation).expect("validated schema");
        for q in 0..arity {
            let v = match &options[q][code[q]] {
                Slot::Known(v) => v.clone(),
                Slot::Supported | Slot::Filler => {
                    let d = r.domain(q).clone();
                    if !self.fresh_ok(&next, &d, 1) {
                        return None;
                    }
                    let v = next.fresh.mint(&d, avoid);
                    if matches!(options[q][code[q]], Slot::Supported) {
                        next.levels.insert(v.clone(), level + 1);
                    }
                    v
                }
            };
            values.push(v);
        }
        let g = Fact { relation: relation.clone(), values };
        if base.contains(&g) || !next.facts.insert(g) {
            return None;
        }
        if level == 0 {
            next.heads += 1;
        }
        next.supplied.insert(supplies.clone());
        self.extend(base, next, reject, avoid)
    }

    /// Enumerates images of `cq` over the values of `pool` plus canonical
    /// fresh values, starting from `init`. `visit` returns true to stop.
    fn images(
        &mut self,
        cq: &CompiledCq,
        doms: &BTreeMap<Name, Name>,
        pool: &BTreeSet<Value>,
        init: Vec<Option<Value>>,
        fresh: FreshSupply,
        keep: &dyn Fn(&Fact) -> bool,
        avoid: &BTreeSet<Value>,
        visit: &mut dyn FnMut(&mut Self, &[Option<Value>], &FreshSupply) -> bool,
    ) -> bool {
        // atoms become checkable once their last variable is assigned
        let mut ready: Vec<Vec<usize>> = vec![Vec::new(); cq.vars.len() + 1];
        for (a, atom) in cq.atoms.iter().enumerate() {
            let last = atom
                .terms
                .iter()
                .filter_map(|t| match t {
                    crate::query::CTerm::Var(i) if init[*i].is_none() => Some(*i + 1),
                    _ => None,
                })
                .max()
                .unwrap_or(0);
            ready[last].push(a);
        }
        if ready[0].iter().any(|&a| !keep(&cq.ground(a, &init).expect("ground"))) {
            return false;
        }
        let mut assign = init;
        self.images_rec(cq, doms, pool, 0, &mut assign, fresh, &ready, keep, avoid, visit)
    }

    #[allow(clippy::too_many_arguments)]
    fn images_rec(
        &mut self,
        cq: &CompiledCq,
        doms: &BTreeMap<Name, Name>,
        pool: &BTreeSet<Value>,
        i: usize,
        assign: &mut Vec<Option<Value>>,
        fresh: FreshSupply,
        ready: &[Vec<usize>],
        keep: &dyn Fn(&Fact) -> bool,
        avoid: &BTreeSet<Value>,
        visit: &mut dyn FnMut(&mut Self, &[Option<Value>], &FreshSupply) -> bool,
    ) -> bool {
        if self.out_of_time() {
            return true;
        }
        if i == cq.vars.len() {
            return visit(self, assign, &fresh);
        }
        if assign[i].is_some() {
            return self.images_rec(cq, doms, pool, i + 1, assign, fresh, ready, keep, avoid, visit);
        }
        let d = &doms[&cq.vars[i]];
        let mut cands: Vec<(Value, FreshSupply)> =
            pool.iter().filter(|v| &v.domain == d).map(|v| (v.clone(), fresh.clone())).collect();
        // fresh values already used in this image, then one new one
        let used: BTreeSet<Value> =
            assign.iter().flatten().filter(|v| &v.domain == d && !pool.contains(*v)).cloned().collect();
        cands.extend(used.into_iter().map(|v| (v, fresh.clone())));
        if fresh.count(d) < self.budget.max_fresh {
            let mut f = fresh.clone();
            let v = f.mint(d, avoid);
            cands.push((v, f));
        } else {
            self.cut = true;
        }
        for (v, f) in cands {
            assign[i] = Some(v);
            let ok = ready[i + 1].iter().all(|&a| keep(&cq.ground(a, assign).expect("ground")));
            if ok && self.images_rec(cq, doms, pool, i + 1, assign, f, ready, keep, avoid, visit) {
                assign[i] = None;
                return true;
            }
        }
        assign[i] = None;
        false
    }

    fn stats(&self, start: Instant) -> Stats {
        Stats { nodes: self.nodes, millis: start.elapsed().as_millis() as u64, exhaustive: !self.cut }
    }
}

fn advance(code: &mut [usize], sizes: &[usize]) -> bool {
    for i in (0..code.len()).rev() {
        code[i] += 1;
        if code[i] < sizes[i] {
            return true;
        }
        code[i] = 0;
    }
    false
}

/// Is there a configuration reachable from `conf` where `q1` holds and `q2`
/// does not? `no` comes with such a path; `yes` only when the search
/// finished without hitting any budget.
pub fn decide_containment_bounded(
    schema: &Schema,
    conf: &Configuration,
    q1: &Query,
    q2: &Query,
    budget: &Budget,
) -> Result<Verdict> {
    let start = Instant::now();
    budget.validate()?;
    let doms = var_domains(q1, schema)?;
    var_domains(q2, schema)?;
    let p1 = Prepared::new(q1);
    let p2 = Prepared::new(q2);
    if p2.holds(conf) {
        return Ok(Verdict::exact(Outcome::Yes, None, 1, start));
    }
    let reject = |c: &Configuration| p2.holds(c);
    let mut search = Search::new(schema, budget, usize::MAX);
    if budget.chain_heuristic {
        search.chain_limit = q1.atoms().len().max(1);
    }
    let pool = conf.adom();
    let avoid = pool.clone();
    let keep = |f: &Fact| conf.contains(f) || schema.has_method(&f.relation);
    let mut found: Option<Support> = None;
    for d in &p1.disjuncts {
        let init = vec![None; d.vars.len()];
        search.images(d, &doms, &pool, init, FreshSupply::new(), &keep, &avoid, &mut |s, assign, fresh| {
            let facts: BTreeSet<Fact> =
                (0..d.atoms.len()).map(|a| d.ground(a, assign).expect("ground")).filter(|f| !conf.contains(f)).collect();
            if facts.len() > budget.max_facts {
                s.cut = true;
                return false;
            }
            let st = State { facts, levels: BTreeMap::new(), fresh: fresh.clone(), heads: 0, supplied: BTreeSet::new() };
            if let Some(order) = s.extend(conf, st, &reject, &avoid) {
                found = Some(order);
                return true;
            }
            false
        });
        if found.is_some() {
            break;
        }
    }
    let stats = search.stats(start);
    if let Some(order) = found {
        let mut path = Path::new(conf.clone());
        order_to_path(schema, &mut path, &order);
        let end = path.final_configuration(schema)?;
        if validate_path(&path, schema).is_err() || !p1.holds(&end) || p2.holds(&end) {
            return Err(Error::Path("internal: containment certificate failed to re-validate".into()));
        }
        return Ok(Verdict { outcome: Outcome::No, certificate: Some(Certificate::Path(path)), stats });
    }
    let outcome = if stats.exhaustive { Outcome::Yes } else { Outcome::Unknown };
    Ok(Verdict { outcome, certificate: None, stats })
}

/// A dependent access that can use a value first introduced by the access
/// under test, with its remaining inputs drawn from `known`.
fn find_probe(schema: &Schema, new: &BTreeSet<Value>, known: &BTreeSet<Value>) -> Option<Access> {
    for m in schema.methods.iter().filter(|m| m.mode == Mode::Dependent) {
        let r = schema.relation(&m.relation).expect("validated schema");
        for (k, &p) in m.inputs.iter().enumerate() {
            let Some(v) = new.iter().find(|v| &v.domain == r.domain(p)) else { continue };
            let mut binding = Vec::new();
            for (j, &q) in m.inputs.iter().enumerate() {
                if j == k {
                    binding.push(v.clone());
                } else if let Some(w) = known.iter().find(|w| &w.domain == r.domain(q)) {
                    binding.push(w.clone());
                } else {
                    break;
                }
            }
            if binding.len() == m.inputs.len() {
                return Some(Access { method: m.name.clone(), binding });
            }
        }
    }
    None
}

/// Long-term relevance under arbitrary methods, searched within a budget.
///
/// Paths start with `access` and its response (several facts allowed).
/// When that response can introduce a value that some dependent method
/// consumes, an access using it (with an empty response) right after the
/// first step cuts the truncated path down to nothing, so relevance reduces
/// to reaching the query from the first response. Otherwise the truncated
/// path keeps every later step and the search looks for later facts that
/// keep the query false without the first response.
pub fn decide_ltr_dependent_bounded(
    schema: &Schema,
    conf: &Configuration,
    q: &Query,
    access: &Access,
    budget: &Budget,
) -> Result<Verdict> {
    let start = Instant::now();
    budget.validate()?;
    let m = check_access(access, schema)?;
    let doms = var_domains(q, schema)?;
    let prepared = Prepared::new(q);
    if !is_well_formed(access, conf, schema)? || prepared.holds(conf) {
        return Ok(Verdict::exact(Outcome::No, None, 1, start));
    }
    let r = schema.relation_or_err(&m.relation)?;
    let adom = conf.adom();
    let mut avoid = adom.clone();
    avoid.extend(access.binding.iter().cloned());

    // most general single response: binding plus fresh outputs
    let mut fresh0 = FreshSupply::new();
    let mut generic = Vec::with_capacity(r.arity());
    for p in 0..r.arity() {
        match m.inputs.iter().position(|&i| i == p) {
            Some(k) => generic.push(access.binding[k].clone()),
            None => generic.push(fresh0.mint(r.domain(p), &avoid)),
        }
    }
    avoid.extend(generic.iter().cloned());
    let new_values: BTreeSet<Value> = generic.iter().filter(|v| !adom.contains(*v)).cloned().collect();
    let mut known = adom.clone();
    known.extend(generic.iter().cloned());
    let probe = find_probe(schema, &new_values, &known);
    let consumable = new_values.iter().any(|v| {
        schema.methods.iter().any(|mm| {
            mm.mode == Mode::Dependent && mm.inputs.iter().any(|&p| schema.relation(&mm.relation).expect("validated").domain(p) == &v.domain)
        })
    });

    let mut search = Search::new(schema, budget, usize::MAX);
    if budget.chain_heuristic {
        search.chain_limit = q.atoms().len().max(1);
    }
    let mut found: Option<(Vec<Fact>, Support)> = None;
    let generic_fact = Fact { relation: m.relation.clone(), values: generic.clone() };

    for d in &prepared.disjuncts {
        let n = d.atoms.len();
        let can_first: Vec<bool> =
            (0..n).map(|a| unify_with_binding(d, a, m, &access.binding, &mut vec![None; d.vars.len()])).collect();
        let mut code = vec![0usize; n];
        loop {
            let first: Vec<usize> = (0..n).filter(|&a| code[a] == 1).collect();
            let valid = first.iter().all(|&a| can_first[a]) && (probe.is_some() || !first.is_empty());
            let mut init = vec![None; d.vars.len()];
            if valid && first.iter().all(|&a| unify_with_binding(d, a, m, &access.binding, &mut init)) {
                let mut pool = adom.clone();
                pool.extend(access.binding.iter().cloned());
                if probe.is_some() {
                    pool.extend(generic.iter().cloned());
                }
                let is_first = |a: usize| code[a] == 1;
                let keep_ok = |_: &Fact| true;
                search.images(d, &doms, &pool, init, FreshSupply::new(), &keep_ok, &avoid, &mut |s, assign, fresh| {
                    let r0: BTreeSet<Fact> =
                        (0..n).filter(|&a| is_first(a)).map(|a| d.ground(a, assign).expect("ground")).collect();
                    if r0.len() > budget.max_first_response {
                        s.cut = true;
                        return false;
                    }
                    let mut response: Vec<Fact> = r0.into_iter().collect();
                    let base = if probe.is_some() {
                        if !response.contains(&generic_fact) {
                            response.push(generic_fact.clone());
                        }
                        conf.with_facts(&response)
                    } else {
                        conf.clone()
                    };
                    let targets: BTreeSet<Fact> = (0..n)
                        .filter(|&a| !is_first(a))
                        .map(|a| d.ground(a, assign).expect("ground"))
                        .filter(|f| !base.contains(f))
                        .collect();
                    if targets.iter().any(|f| !schema.has_method(&f.relation)) {
                        return false;
                    }
                    if targets.len() > budget.max_facts {
                        s.cut = true;
                        return false;
                    }
                    let st = State { facts: targets, levels: BTreeMap::new(), fresh: fresh.clone(), heads: 0, supplied: BTreeSet::new() };
                    // the memo is only valid for one base configuration
                    s.seen.clear();
                    let order = if probe.is_some() {
                        s.extend(&base, st, &|_| false, &avoid)
                    } else {
                        s.extend(&base, st, &|c| prepared.holds(c), &avoid)
                    };
                    match order {
                        Some(order) => {
                            found = Some((response, order));
                            true
                        }
                        None => false,
                    }
                });
                if found.is_some() || search.out_of_time() {
                    break;
                }
            }
            if !next_code(&mut code, 2) {
                break;
            }
        }
        if found.is_some() {
            break;
        }
    }
    if probe.is_none() && consumable {
        // a later step could still consume a first-response value; not covered
        search.cut = true;
    }
    let stats = search.stats(start);
    let Some((response, order)) = found else {
        let outcome = if stats.exhaustive { Outcome::No } else { Outcome::Unknown };
        return Ok(Verdict { outcome, certificate: None, stats });
    };
    let build = |with_probe: bool| {
        let mut path = Path::new(conf.clone());
        path.push(access.clone(), Response::of(response.iter().map(|f| f.values.clone())));
        if with_probe {
            path.push(probe.clone().expect("probe"), Response::empty());
        }
        order_to_path(schema, &mut path, &order);
        path
    };
    let mut path = build(false);
    let check = |p: &Path| -> Result<bool> {
        let end = p.final_configuration(schema)?;
        let trunc = truncate_path(p, schema)?.final_configuration(schema)?;
        Ok(validate_path(p, schema).is_ok() && prepared.holds(&end) && !prepared.holds(&trunc))
    };
    if !check(&path)? && probe.is_some() {
        path = build(true);
    }
    if !check(&path)? {
        return Err(Error::Path("internal: relevance certificate failed to re-validate".into()));
    }
    Ok(Verdict { outcome: Outcome::Yes, certificate: Some(Certificate::Path(path)), stats })
}
