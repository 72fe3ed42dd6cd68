//! Brute-force baselines that unfold the definitions directly over tiny
//! bounded universes. They share only data types with the search modules and
//! carry their own query evaluator.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::model::{is_well_formed, name, Configuration, Fact, Mode, Name, Schema, Tuple, Value};
use crate::query::{Atom, Query, Term};

/// Bounds for the oracles. Every oracle is exponential in all of them; keep
/// instances to a handful of facts and at most three fresh values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    /// Steps per path, counting the first access for the relevance oracle.
    pub max_path_len: usize,
    pub max_fresh: usize,
    /// Facts in a response whose size is not fixed to one.
    pub max_response: usize,
    /// Facts added on top of a configuration, or hidden facts for the CM oracle.
    pub max_extension: usize,
    /// Explicit failure once this many states have been seen.
    pub max_states: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_path_len: 3, max_fresh: 2, max_response: 2, max_extension: 3, max_states: 500_000 }
    }
}

/// Naive evaluation: expand to disjuncts, then backtrack atom by atom.
pub fn holds(q: &Query, conf: &Configuration) -> bool {
    disjuncts(q).iter().any(|d| satisfy(d, 0, &mut BTreeMap::new(), conf))
}

fn disjuncts(q: &Query) -> Vec<Vec<Atom>> {
    match q {
        Query::Atom(a) => vec![vec![a.clone()]],
        Query::Or(cs) => cs.iter().flat_map(disjuncts).collect(),
        Query::And(cs) => {
            let mut acc = vec![Vec::new()];
            for c in cs {
                let ds = disjuncts(c);
                acc = acc.iter().flat_map(|a| ds.iter().map(move |d| [a.clone(), d.clone()].concat())).collect();
            }
            acc
        }
    }
}

fn satisfy(atoms: &[Atom], i: usize, assign: &mut BTreeMap<Name, Value>, conf: &Configuration) -> bool {
    let Some(atom) = atoms.get(i) else { return true };
    for t in conf.tuples(&atom.relation) {
        let mut bound = Vec::new();
        let mut ok = true;
        for (term, v) in atom.terms.iter().zip(t) {
            match term {
                Term::Const(c) => ok = c == v,
                Term::Var(x) => match assign.get(x) {
                    Some(w) => ok = w == v,
                    None => {
                        assign.insert(x.clone(), v.clone());
                        bound.push(x.clone());
                    }
                },
            }
            if !ok {
                break;
            }
        }
        if ok && satisfy(atoms, i + 1, assign, conf) {
            return true;
        }
        for x in bound {
            assign.remove(&x);
        }
    }
    false
}

/// `n` fresh values per domain, disjoint from `taken`.
fn fresh_pool(schema: &Schema, taken: &BTreeSet<Value>, n: usize) -> BTreeSet<Value> {
    let mut pool = BTreeSet::new();
    for d in &schema.domains {
        let mut i = 0;
        while pool.iter().filter(|v: &&Value| &v.domain == d).count() < n {
            let v = Value { token: name(&format!("o{d}{i}")), domain: d.clone() };
            if !taken.contains(&v) {
                pool.insert(v);
            }
            i += 1;
        }
    }
    pool
}

/// Every permutation of the pool within each domain.
fn renamings(pool: &BTreeSet<Value>) -> Vec<BTreeMap<Value, Value>> {
    let mut by_domain: BTreeMap<&Name, Vec<&Value>> = BTreeMap::new();
    for v in pool {
        by_domain.entry(&v.domain).or_default().push(v);
    }
    let mut out = vec![BTreeMap::new()];
    for vals in by_domain.values() {
        let perms = permutations(vals.len());
        out = out
            .iter()
            .flat_map(|base| {
                perms.iter().map(move |p| {
                    let mut m = base.clone();
                    for (i, &j) in p.iter().enumerate() {
                        m.insert(vals[i].clone(), vals[j].clone());
                    }
                    m
                })
            })
            .collect();
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest renamed form of a tuple of configurations, so that states equal
/// up to renaming fresh values collide.
fn canonical(confs: &[&Configuration], ren: &[BTreeMap<Value, Value>]) -> Vec<Vec<Fact>> {
    ren.iter()
        .map(|m| {
            confs
                .iter()
                .map(|c| {
                    let mut fs: Vec<Fact> = c
                        .facts()
                        .map(|f| Fact {
                            relation: f.relation.clone(),
                            values: f.values.iter().map(|v| m.get(v).unwrap_or(v).clone()).collect(),
                        })
                        .collect();
                    fs.sort();
                    fs
                })
                .collect()
        })
        .min()
        .expect("identity renaming")
}

/// All tuples of `rel` over `universe` that agree with the fixed positions.
fn tuples_over(schema: &Schema, rel: &str, fixed: &[Option<Value>], universe: &BTreeSet<Value>) -> Vec<Tuple> {
    let r = schema.relation(rel).expect("known relation");
    let mut out: Vec<Tuple> = vec![Vec::new()];
    for (p, fixed) in fixed.iter().enumerate().take(r.arity()) {
        let choices: Vec<Value> = match fixed {
            Some(v) => vec![v.clone()],
            None => universe.iter().filter(|v| &v.domain == r.domain(p)).cloned().collect(),
        };
        out = out.iter().flat_map(|t| choices.iter().map(move |v| [t.clone(), vec![v.clone()]].concat())).collect();
    }
    out
}

/// Subsets of `items` with between `lo` and `hi` elements.
fn subsets<T: Clone>(items: &[T], lo: usize, hi: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    any_subset(items, lo, hi, &mut |s| {
        out.push(s.to_vec());
        false
    });
    out
}

/// Visits the subsets of size `lo..=hi` in order until `f` returns true.
fn any_subset<T: Clone>(items: &[T], lo: usize, hi: usize, f: &mut dyn FnMut(&[T]) -> bool) -> bool {
    fn go<T: Clone>(items: &[T], start: usize, lo: usize, hi: usize, cur: &mut Vec<T>, f: &mut dyn FnMut(&[T]) -> bool) -> bool {
        if cur.len() >= lo && f(cur) {
            return true;
        }
        if cur.len() == hi {
            return false;
        }
        for i in start..items.len() {
            cur.push(items[i].clone());
            let stop = go(items, i + 1, lo, hi, cur, f);
            cur.pop();
            if stop {
                return true;
            }
        }
        false
    }
    go(items, 0, lo, hi, &mut Vec::new(), f)
}

/// Facts obtainable by one well-formed access with a singleton response.
fn one_step(schema: &Schema, conf: &Configuration, pool: &BTreeSet<Value>) -> BTreeSet<Fact> {
    let avail = conf.adom();
    let universe: BTreeSet<Value> = avail.union(pool).cloned().collect();
    let mut out = BTreeSet::new();
    for m in &schema.methods {
        let arity = schema.relation(&m.relation).expect("known relation").arity();
        for t in tuples_over(schema, &m.relation, &vec![None; arity], &universe) {
            let ok = m.mode == Mode::Independent || m.inputs.iter().all(|&p| avail.contains(&t[p]));
            let f = Fact { relation: m.relation.clone(), values: t };
            if ok && !conf.contains(&f) {
                out.insert(f);
            }
        }
    }
    out
}

fn cap(seen: usize, limits: &OracleLimits) -> Result<()> {
    if seen > limits.max_states {
        return Err(Error::Cap(format!("oracle explored more than {} states", limits.max_states)));
    }
    Ok(())
}

/// Configurations reachable by at most `max_path_len` singleton accesses,
/// one representative per renaming class of the fresh values.
pub fn oracle_reachable(schema: &Schema, conf: &Configuration, limits: &OracleLimits) -> Result<Vec<Configuration>> {
    let pool = fresh_pool(schema, &conf.adom(), limits.max_fresh);
    let ren = renamings(&pool);
    let mut seen = HashSet::new();
    seen.insert(canonical(&[conf], &ren));
    let mut all = vec![conf.clone()];
    let mut frontier = vec![conf.clone()];
    for _ in 0..limits.max_path_len {
        let mut next = Vec::new();
        for c in &frontier {
            for f in one_step(schema, c, &pool) {
                let mut c2 = c.clone();
                c2.insert(f);
                if seen.insert(canonical(&[&c2], &ren)) {
                    cap(seen.len(), limits)?;
                    next.push(c2);
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(all)
}

/// Does every bounded reachable configuration satisfying `q1` satisfy `q2`?
pub fn oracle_containment(schema: &Schema, conf: &Configuration, q1: &Query, q2: &Query, limits: &OracleLimits) -> Result<bool> {
    Ok(oracle_reachable(schema, conf, limits)?.iter().all(|c| !holds(q1, c) || holds(q2, c)))
}

/// Is there a response of at most `max_response` facts making `q` true when
/// it was false? Well-formedness of the access is not required.
pub fn oracle_ir(schema: &Schema, conf: &Configuration, q: &Query, access: &crate::model::Access, limits: &OracleLimits) -> Result<bool> {
    let m = schema.method_or_err(&access.method)?;
    if holds(q, conf) {
        return Ok(false);
    }
    let facts = response_facts(schema, conf, m, access, limits);
    let mut count = 0;
    let mut capped = Ok(());
    let found = any_subset(&facts, 0, limits.max_response, &mut |r| {
        count += 1;
        if let Err(e) = cap(count, limits) {
            capped = Err(e);
            return true;
        }
        holds(q, &conf.with_facts(r))
    });
    capped.map(|()| found)
}

fn first_responses(
    schema: &Schema,
    conf: &Configuration,
    m: &crate::model::AccessMethod,
    access: &crate::model::Access,
    limits: &OracleLimits,
) -> Vec<Vec<Fact>> {
    subsets(&response_facts(schema, conf, m, access, limits), 0, limits.max_response)
}

/// Facts a response to `access` may contain that are not yet known.
fn response_facts(
    schema: &Schema,
    conf: &Configuration,
    m: &crate::model::AccessMethod,
    access: &crate::model::Access,
    limits: &OracleLimits,
) -> Vec<Fact> {
    let mut known = conf.adom();
    known.extend(access.binding.iter().cloned());
    let pool = fresh_pool(schema, &known, limits.max_fresh);
    let universe: BTreeSet<Value> = known.union(&pool).cloned().collect();
    let arity = schema.relation(&m.relation).expect("known relation").arity();
    let mut fixed = vec![None; arity];
    for (k, &p) in m.inputs.iter().enumerate() {
        fixed[p] = Some(access.binding[k].clone());
    }
    tuples_over(schema, &m.relation, &fixed, &universe)
        .into_iter()
        .map(|t| Fact { relation: m.relation.clone(), values: t })
        .filter(|f| !conf.contains(f))
        .collect()
}

/// Is there a path starting with `access` (at most `max_path_len` steps,
/// later responses empty or singleton) after which `q` holds while it fails
/// after the truncated path?
pub fn oracle_ltr(schema: &Schema, conf: &Configuration, q: &Query, access: &crate::model::Access, limits: &OracleLimits) -> Result<bool> {
    let m = schema.method_or_err(&access.method)?;
    if !is_well_formed(access, conf, schema)? || holds(q, conf) {
        return Ok(false);
    }
    let mut known = conf.adom();
    known.extend(access.binding.iter().cloned());
    let pool = fresh_pool(schema, &known, limits.max_fresh);
    let ren = renamings(&pool);
    // (full path, truncated path, truncation still growing)
    let mut frontier: Vec<(Configuration, Configuration, bool)> = Vec::new();
    let mut seen = HashSet::new();
    for r0 in first_responses(schema, conf, m, access, limits) {
        let p = conf.with_facts(&r0);
        if seen.insert((canonical(&[&p, conf], &ren), true)) {
            frontier.push((p, conf.clone(), true));
        }
    }
    for depth in 1..=limits.max_path_len {
        if frontier.iter().any(|(p, t, _)| holds(q, p) && !holds(q, t)) {
            return Ok(true);
        }
        if depth == limits.max_path_len {
            break;
        }
        let mut next = Vec::new();
        for (p, t, alive) in &frontier {
            let avail_p = p.adom();
            let avail_t = t.adom();
            let mut universe: BTreeSet<Value> = avail_p.union(&pool).cloned().collect();
            universe.extend(access.binding.iter().cloned());
            for mm in &schema.methods {
                let arity = schema.relation(&mm.relation).expect("known relation").arity();
                for tuple in tuples_over(schema, &mm.relation, &vec![None; arity], &universe) {
                    let binding: Vec<&Value> = mm.inputs.iter().map(|&i| &tuple[i]).collect();
                    if mm.mode == Mode::Dependent && !binding.iter().all(|v| avail_p.contains(*v)) {
                        continue;
                    }
                    let wf_t = mm.mode == Mode::Independent || binding.iter().all(|v| avail_t.contains(*v));
                    let f = Fact { relation: mm.relation.clone(), values: tuple.clone() };
                    // the same binding with an empty response
                    let mut outcomes = vec![None, Some(f)];
                    if *alive && wf_t {
                        outcomes.remove(0);
                    }
                    for o in outcomes {
                        let mut p2 = p.clone();
                        let mut t2 = t.clone();
                        let keep = *alive && wf_t;
                        if let Some(f) = o {
                            p2.insert(f.clone());
                            if keep {
                                t2.insert(f);
                            }
                        }
                        if seen.insert((canonical(&[&p2, &t2], &ren), keep)) {
                            cap(seen.len(), limits)?;
                            next.push((p2, t2, keep));
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(false)
}

/// Does `q` hold in every extension of `conf` by at most `max_extension`
/// facts over its values, the query constants and `max_fresh` fresh values
/// per domain?
pub fn oracle_certain(schema: &Schema, q: &Query, conf: &Configuration, limits: &OracleLimits) -> Result<bool> {
    let mut known = conf.adom();
    known.extend(q.constants());
    let pool = fresh_pool(schema, &known, limits.max_fresh);
    let universe: BTreeSet<Value> = known.union(&pool).cloned().collect();
    let mut facts = Vec::new();
    for r in &schema.relations {
        for t in tuples_over(schema, &r.name, &vec![None; r.arity()], &universe) {
            let f = Fact { relation: r.name.clone(), values: t };
            if !conf.contains(&f) {
                facts.push(f);
            }
        }
    }
    if !holds(q, conf) {
        return Ok(false);
    }
    let mut count = 0;
    let mut capped = Ok(());
    let refuted = any_subset(&facts, 1, limits.max_extension, &mut |ext| {
        count += 1;
        if let Err(e) = cap(count, limits) {
            capped = Err(e);
            return true;
        }
        !holds(q, &conf.with_facts(ext))
    });
    capped.map(|()| !refuted)
}

/// Containment with exact accesses over a fixed hidden instance: for every
/// hidden instance of at most `max_extension` facts over the constants and
/// fresh values, `q1` on the accessible part implies `q2` there. Relations
/// without methods keep the facts of `fixed`; their values count as known.
pub fn oracle_cm(
    schema: &Schema,
    constants: &BTreeSet<Value>,
    fixed: &Configuration,
    q1: &Query,
    q2: &Query,
    limits: &OracleLimits,
) -> Result<bool> {
    let mut known = constants.clone();
    known.extend(fixed.adom());
    known.extend(q1.constants());
    known.extend(q2.constants());
    let pool = fresh_pool(schema, &known, limits.max_fresh);
    let universe: BTreeSet<Value> = known.union(&pool).cloned().collect();
    let mut facts = Vec::new();
    for r in schema.relations.iter().filter(|r| schema.has_method(&r.name)) {
        for t in tuples_over(schema, &r.name, &vec![None; r.arity()], &universe) {
            facts.push(Fact { relation: r.name.clone(), values: t });
        }
    }
    let mut start = constants.clone();
    start.extend(fixed.adom());
    let mut count = 0;
    for hidden in subsets(&facts, 0, limits.max_extension) {
        count += 1;
        cap(count, limits)?;
        let mut acc = fixed.clone();
        let mut avail = start.clone();
        loop {
            let mut grew = false;
            for f in &hidden {
                if acc.contains(f) {
                    continue;
                }
                let reachable = schema.methods_on(&f.relation).any(|m| {
                    m.mode == Mode::Independent || m.inputs.iter().all(|&p| avail.contains(&f.values[p]))
                });
                if reachable {
                    avail.extend(f.values.iter().cloned());
                    acc.insert(f.clone());
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        if holds(q1, &acc) && !holds(q2, &acc) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Is `t` critical for `q`: is there an instance `I` of at most
/// `max_extension` facts over the query constants, the values of `t` and
/// `max_fresh` fresh values per domain with `q(I + t)` and not `q(I)`?
pub fn oracle_critical(schema: &Schema, q: &Query, t: &Fact, limits: &OracleLimits) -> Result<bool> {
    schema.check_tuple(&t.relation, &t.values)?;
    let mut known = q.constants();
    known.extend(t.values.iter().cloned());
    let pool = fresh_pool(schema, &known, limits.max_fresh);
    let universe: BTreeSet<Value> = known.union(&pool).cloned().collect();
    let mut facts = Vec::new();
    for r in &schema.relations {
        for tuple in tuples_over(schema, &r.name, &vec![None; r.arity()], &universe) {
            let f = Fact { relation: r.name.clone(), values: tuple };
            if f != *t {
                facts.push(f);
            }
        }
    }
    let mut count = 0;
    let mut capped = Ok(());
    let found = any_subset(&facts, 0, limits.max_extension, &mut |inst| {
        count += 1;
        if let Err(e) = cap(count, limits) {
            capped = Err(e);
            return true;
        }
        let mut c = Configuration::new();
        inst.iter().for_each(|f| {
            c.insert(f.clone());
        });
        if holds(q, &c) {
            return false;
        }
        c.insert(t.clone());
        holds(q, &c)
    });
    capped.map(|()| found)
}

/// Can the `2^n x 2^n` grid be tiled with the given first-row prefix?
/// Plain backtracking in row-major order.
pub fn oracle_grid_tileable(spec: &crate::generators::TilingSpec) -> bool {
    let side = spec.grid_side();
    let mut cells = vec![0usize; side * side];
    fn fill(spec: &crate::generators::TilingSpec, side: usize, cells: &mut Vec<usize>, at: usize) -> bool {
        if at == cells.len() {
            return true;
        }
        let (r, c) = (at / side, at % side);
        for t in 0..spec.tiles {
            if r == 0 && c < spec.initial.len() && spec.initial[c] != t {
                continue;
            }
            if c > 0 && !spec.h.contains(&(cells[at - 1], t)) {
                continue;
            }
            if r > 0 && !spec.v.contains(&(cells[at - side], t)) {
                continue;
            }
            cells[at] = t;
            if fill(spec, side, cells, at + 1) {
                return true;
            }
        }
        false
    }
    fill(spec, side, &mut cells, 0)
}

/// Is there a sequence of rows of width `n`, each respecting the horizontal
/// constraints and each consecutive pair the vertical ones, from the initial
/// to the final row? Depth-first search over rows.
pub fn oracle_corridor_tileable(spec: &crate::generators::TilingSpec) -> bool {
    let n = spec.n;
    let row_ok = |row: &[usize]| row.windows(2).all(|w| spec.h.contains(&(w[0], w[1])));
    if !row_ok(&spec.initial) {
        return false;
    }
    let mut seen = BTreeSet::from([spec.initial.clone()]);
    let mut queue = vec![spec.initial.clone()];
    while let Some(row) = queue.pop() {
        if row == spec.final_row {
            return true;
        }
        let mut next = vec![0usize; n];
        loop {
            if row_ok(&next) && (0..n).all(|j| spec.v.contains(&(row[j], next[j]))) && seen.insert(next.clone()) {
                queue.push(next.clone());
            }
            let mut j = 0;
            while j < n {
                next[j] += 1;
                if next[j] < spec.tiles {
                    break;
                }
                next[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
        }
    }
    false
}
