//! Positive Boolean queries, evaluation by homomorphism search, certain
//! answers and classical containment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{name, Configuration, Fact, Name, Schema, Tuple, Value};

/// Receives an assignment and the virtual-match flags; returns false to stop.
pub type MatchVisitor<'f> = dyn FnMut(&[Option<Value>], &[bool]) -> bool + 'f;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Name),
    Const(Value),
}

impl Term {
    pub fn var(x: &str) -> Self {
        Term::Var(name(x))
    }

    pub fn constant(token: &str, domain: &str) -> Self {
        Term::Const(Value::new(token, domain))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Term::Var(x) => Some(x),
            Term::Const(_) => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub relation: Name,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(relation: &str, terms: Vec<Term>) -> Self {
        Atom { relation: name(relation), terms }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.terms.iter().filter_map(Term::as_var)
    }

    pub fn substitute(&self, h: &BTreeMap<Name, Value>) -> Atom {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(x) => h.get(x).map_or_else(|| t.clone(), |v| Term::Const(v.clone())),
                Term::Const(_) => t.clone(),
            })
            .collect();
        Atom { relation: self.relation.clone(), terms }
    }

    /// The fact this atom denotes under `h`, if every variable is mapped.
    pub fn ground(&self, h: &BTreeMap<Name, Value>) -> Option<Fact> {
        let values = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(x) => h.get(x).cloned(),
                Term::Const(c) => Some(c.clone()),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Fact { relation: self.relation.clone(), values })
    }
}

/// Positive existential query: atoms under `And`/`Or`. `And([])` is true,
/// `Or([])` is false. Every variable is existentially quantified.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Query {
    Atom(Atom),
    And(Vec<Query>),
    Or(Vec<Query>),
}

impl Query {
    pub fn truth() -> Self {
        Query::And(Vec::new())
    }

    pub fn falsity() -> Self {
        Query::Or(Vec::new())
    }

    pub fn atom(relation: &str, terms: Vec<Term>) -> Self {
        Query::Atom(Atom::new(relation, terms))
    }

    pub fn conj(atoms: impl IntoIterator<Item = Atom>) -> Self {
        Query::And(atoms.into_iter().map(Query::Atom).collect())
    }

    pub fn is_cq(&self) -> bool {
        match self {
            Query::Atom(_) => true,
            Query::And(cs) => cs.iter().all(Query::is_cq),
            Query::Or(_) => false,
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Query::Atom(a) => out.push(a),
            Query::And(cs) | Query::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        self.atoms().into_iter().flat_map(|a| a.vars().cloned()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Value> {
        let mut out = BTreeSet::new();
        for a in self.atoms() {
            for t in &a.terms {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }

    pub fn relations(&self) -> BTreeSet<Name> {
        self.atoms().into_iter().map(|a| a.relation.clone()).collect()
    }

    pub fn substitute(&self, h: &BTreeMap<Name, Value>) -> Query {
        self.map_atoms(&mut |a| Query::Atom(a.substitute(h)))
    }

    /// Rebuilds the tree, replacing every atom by `f(atom)`.
    pub fn map_atoms(&self, f: &mut dyn FnMut(&Atom) -> Query) -> Query {
        match self {
            Query::Atom(a) => f(a),
            Query::And(cs) => Query::And(cs.iter().map(|c| c.map_atoms(f)).collect()),
            Query::Or(cs) => Query::Or(cs.iter().map(|c| c.map_atoms(f)).collect()),
        }
    }

    /// Drops `true`/`false` children and collapses single-child nodes.
    pub fn simplified(&self) -> Query {
        match self {
            Query::Atom(_) => self.clone(),
            Query::And(cs) => {
                let mut out = Vec::new();
                for c in cs.iter().map(Query::simplified) {
                    match c {
                        Query::And(ref d) if d.is_empty() => {}
                        Query::Or(ref d) if d.is_empty() => return Query::falsity(),
                        c => out.push(c),
                    }
                }
                if out.len() == 1 {
                    out.pop().expect("one child")
                } else {
                    Query::And(out)
                }
            }
            Query::Or(cs) => {
                let mut out = Vec::new();
                for c in cs.iter().map(Query::simplified) {
                    match c {
                        Query::Or(ref d) if d.is_empty() => {}
                        Query::And(ref d) if d.is_empty() => return Query::truth(),
                        c => out.push(c),
                    }
                }
                if out.len() == 1 {
                    out.pop().expect("one child")
                } else {
                    Query::Or(out)
                }
            }
        }
    }

    /// Collapses single-child nodes so that printing and parsing agree.
    pub fn normalized(&self) -> Query {
        match self {
            Query::Atom(_) => self.clone(),
            Query::And(cs) | Query::Or(cs) if cs.len() == 1 => cs[0].normalized(),
            Query::And(cs) => Query::And(cs.iter().map(Query::normalized).collect()),
            Query::Or(cs) => Query::Or(cs.iter().map(Query::normalized).collect()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Query::Atom(a) => 1 + a.terms.len(),
            Query::And(cs) | Query::Or(cs) => 1 + cs.iter().map(Query::size).sum::<usize>(),
        }
    }
}

pub(crate) fn fmt_token(tok: &str) -> String {
    let numeric = {
        let digits = tok.strip_prefix('-').unwrap_or(tok);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if numeric {
        tok.to_string()
    } else {
        let mut s = String::with_capacity(tok.len() + 2);
        s.push('"');
        for ch in tok.chars() {
            if ch == '"' || ch == '\\' {
                s.push('\\');
            }
            s.push(ch);
        }
        s.push('"');
        s
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match t {
                Term::Var(x) => f.write_str(x)?,
                Term::Const(c) => f.write_str(&fmt_token(&c.token))?,
            }
        }
        f.write_str(")")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Atom(a) => write!(f, "{a}"),
            Query::And(cs) if cs.is_empty() => f.write_str("true"),
            Query::Or(cs) if cs.is_empty() => f.write_str("false"),
            Query::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    match c {
                        Query::Or(ds) if !ds.is_empty() => write!(f, "({c})")?,
                        Query::And(ds) if ds.len() > 1 => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
            Query::Or(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    match c {
                        Query::Or(ds) if ds.len() > 1 => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

/// A conjunction of atoms; one disjunct of a DNF.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Cq {
    pub atoms: Vec<Atom>,
}

impl Cq {
    pub fn to_query(&self) -> Query {
        Query::conj(self.atoms.iter().cloned())
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        self.atoms.iter().flat_map(|a| a.vars().cloned()).collect()
    }
}

pub fn to_dnf(q: &Query) -> Vec<Cq> {
    match q {
        Query::Atom(a) => vec![Cq { atoms: vec![a.clone()] }],
        Query::Or(cs) => cs.iter().flat_map(to_dnf).collect(),
        Query::And(cs) => {
            let mut acc = vec![Cq::default()];
            for c in cs {
                let d = to_dnf(c);
                let mut next = Vec::with_capacity(acc.len() * d.len());
                for left in &acc {
                    for right in &d {
                        let mut atoms = left.atoms.clone();
                        for a in &right.atoms {
                            if !atoms.contains(a) {
                                atoms.push(a.clone());
                            }
                        }
                        next.push(Cq { atoms });
                    }
                }
                acc = next;
            }
            acc
        }
    }
}

/// Domain of every variable, read off the positions where it occurs.
pub fn var_domains(q: &Query, schema: &Schema) -> Result<BTreeMap<Name, Name>> {
    let mut out: BTreeMap<Name, Name> = BTreeMap::new();
    for a in q.atoms() {
        let r = schema.relation_or_err(&a.relation)?;
        if r.arity() != a.terms.len() {
            return Err(Error::Query(format!("{} expects {} terms, got {}", a.relation, r.arity(), a.terms.len())));
        }
        for (p, t) in a.terms.iter().enumerate() {
            if let Term::Var(x) = t {
                let d = r.domain(p);
                match out.get(x) {
                    Some(prev) if prev != d => {
                        return Err(Error::Query(format!("variable {x} is used in domains {prev} and {d}")))
                    }
                    _ => {
                        out.insert(x.clone(), d.clone());
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All problems with `q` against the schema and configuration. Constants must
/// be in the active domain unless `admit_constants` is set.
pub fn validate_query(q: &Query, schema: &Schema, conf: &Configuration, admit_constants: bool) -> Vec<String> {
    let mut diags = Vec::new();
    let mut doms: BTreeMap<&Name, &Name> = BTreeMap::new();
    let ad = conf.adom();
    for a in q.atoms() {
        let Some(r) = schema.relation(&a.relation) else {
            diags.push(format!("unknown relation {}", a.relation));
            continue;
        };
        if r.arity() != a.terms.len() {
            diags.push(format!("{} expects {} terms, got {}", a.relation, r.arity(), a.terms.len()));
            continue;
        }
        for (p, t) in a.terms.iter().enumerate() {
            let d = r.domain(p);
            match t {
                Term::Var(x) => match doms.get(x) {
                    Some(prev) if *prev != d => {
                        diags.push(format!("variable {x} is used in domains {prev} and {d}"));
                    }
                    _ => {
                        doms.insert(x, d);
                    }
                },
                Term::Const(c) => {
                    if &c.domain != d {
                        diags.push(format!("constant {} has domain {} but {}.{} has domain {d}", c.token, c.domain, r.name, r.attributes[p].name));
                    } else if !admit_constants && !ad.contains(c) {
                        diags.push(format!("constant {}:{} is not admitted in the configuration", c.token, c.domain));
                    }
                }
            }
        }
    }
    diags
}

pub fn check_query(q: &Query, schema: &Schema, conf: &Configuration, admit_constants: bool) -> Result<()> {
    let d = validate_query(q, schema, conf, admit_constants);
    if d.is_empty() {
        Ok(())
    } else {
        Err(Error::Query(d.join("; ")))
    }
}

pub type Homomorphism = BTreeMap<Name, Value>;

struct RelIndex {
    tuples: Vec<Tuple>,
    all: Vec<u32>,
    by_pos: Vec<HashMap<Value, Vec<u32>>>,
}

/// Per-relation, per-position hash index over a set of facts.
pub struct FactIndex {
    rels: HashMap<Name, RelIndex>,
}

impl FactIndex {
    pub fn new(conf: &Configuration) -> Self {
        let mut rels = HashMap::new();
        for (r, set) in conf.relations() {
            let tuples: Vec<Tuple> = set.iter().cloned().collect();
            let arity = tuples.first().map_or(0, |t| t.len());
            let mut by_pos = vec![HashMap::<Value, Vec<u32>>::new(); arity];
            for (i, t) in tuples.iter().enumerate() {
                for (p, v) in t.iter().enumerate() {
                    by_pos[p].entry(v.clone()).or_default().push(i as u32);
                }
            }
            let all = (0..tuples.len() as u32).collect();
            rels.insert(r.clone(), RelIndex { tuples, all, by_pos });
        }
        FactIndex { rels }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CTerm {
    Var(usize),
    Const(Value),
}

#[derive(Clone, Debug)]
pub struct CAtom {
    pub relation: Name,
    pub terms: Vec<CTerm>,
}

/// A conjunction with variables numbered densely, ready for matching.
#[derive(Clone, Debug)]
pub struct CompiledCq {
    pub vars: Vec<Name>,
    pub atoms: Vec<CAtom>,
}

impl CompiledCq {
    pub fn new(cq: &Cq) -> Self {
        let mut vars: Vec<Name> = Vec::new();
        let mut ids: HashMap<Name, usize> = HashMap::new();
        let atoms = cq
            .atoms
            .iter()
            .map(|a| CAtom {
                relation: a.relation.clone(),
                terms: a
                    .terms
                    .iter()
                    .map(|t| match t {
                        Term::Const(c) => CTerm::Const(c.clone()),
                        Term::Var(x) => CTerm::Var(*ids.entry(x.clone()).or_insert_with(|| {
                            vars.push(x.clone());
                            vars.len() - 1
                        })),
                    })
                    .collect(),
            })
            .collect();
        CompiledCq { vars, atoms }
    }

    pub fn var_id(&self, x: &str) -> Option<usize> {
        self.vars.iter().position(|v| &**v == x)
    }

    pub fn homomorphism(&self, assign: &[Option<Value>]) -> Homomorphism {
        self.vars
            .iter()
            .zip(assign)
            .filter_map(|(x, v)| v.clone().map(|v| (x.clone(), v)))
            .collect()
    }

    pub fn ground(&self, atom: usize, assign: &[Option<Value>]) -> Option<Fact> {
        let a = &self.atoms[atom];
        let values = a
            .terms
            .iter()
            .map(|t| match t {
                CTerm::Const(c) => Some(c.clone()),
                CTerm::Var(i) => assign[*i].clone(),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Fact { relation: a.relation.clone(), values })
    }
}

/// Lets atoms over one relation be satisfied by a pending access: input
/// positions must equal the binding, other positions stay unconstrained.
#[derive(Clone, Copy)]
pub struct VirtualAccess<'a> {
    pub relation: &'a str,
    pub inputs: &'a [usize],
    pub binding: &'a [Value],
}

/// Backtracking homomorphism search. At each step the pending atom with the
/// fewest candidate facts is expanded; an atom with no candidate fails the
/// branch immediately.
pub struct Matcher<'a> {
    index: &'a FactIndex,
    cq: &'a CompiledCq,
    virt: Option<VirtualAccess<'a>>,
    pub nodes: u64,
}

impl<'a> Matcher<'a> {
    pub fn new(index: &'a FactIndex, cq: &'a CompiledCq) -> Self {
        Matcher { index, cq, virt: None, nodes: 0 }
    }

    pub fn with_virtual(mut self, v: VirtualAccess<'a>) -> Self {
        self.virt = Some(v);
        self
    }

    /// Calls `f` for every match of the atoms in `subset`, starting from the
    /// partial assignment `init`. `f` receives the assignment and, per atom,
    /// whether it was matched by the virtual access. Returning `false` from
    /// `f` stops the search; the result tells whether it was stopped.
    pub fn for_each(
        &mut self,
        subset: &[usize],
        init: Vec<Option<Value>>,
        f: &mut MatchVisitor<'_>,
    ) -> bool {
        let mut assign = init;
        assign.resize(self.cq.vars.len(), None);
        let mut pending = subset.to_vec();
        let mut virt = vec![false; self.cq.atoms.len()];
        self.rec(&mut pending, &mut assign, &mut virt, f)
    }

    pub fn first(&mut self, subset: &[usize], init: Vec<Option<Value>>) -> Option<(Vec<Option<Value>>, Vec<bool>)> {
        let mut out = None;
        self.for_each(subset, init, &mut |a, v| {
            out = Some((a.to_vec(), v.to_vec()));
            false
        });
        out
    }

    fn known(&self, t: &CTerm, assign: &[Option<Value>]) -> Option<Value> {
        match t {
            CTerm::Const(c) => Some(c.clone()),
            CTerm::Var(i) => assign[*i].clone(),
        }
    }

    fn candidates(&self, atom: usize, assign: &[Option<Value>]) -> &'a [u32] {
        let a = &self.cq.atoms[atom];
        let Some(ri) = self.index.rels.get(&a.relation) else {
            return &[];
        };
        let mut best: &'a [u32] = &ri.all;
        for (p, t) in a.terms.iter().enumerate() {
            if let Some(v) = self.known(t, assign) {
                let Some(col) = ri.by_pos.get(p) else { return &[] };
                match col.get(&v) {
                    Some(l) if l.len() < best.len() => best = l,
                    Some(_) => {}
                    None => return &[],
                }
            }
        }
        best
    }

    fn virtual_ok(&self, atom: usize, assign: &[Option<Value>]) -> bool {
        let Some(v) = self.virt else { return false };
        let a = &self.cq.atoms[atom];
        if &*a.relation != v.relation {
            return false;
        }
        v.inputs.iter().zip(v.binding).all(|(&p, b)| match self.known(&a.terms[p], assign) {
            Some(x) => &x == b,
            None => true,
        })
    }

    fn rec(
        &mut self,
        pending: &mut Vec<usize>,
        assign: &mut Vec<Option<Value>>,
        virt: &mut Vec<bool>,
        f: &mut MatchVisitor<'_>,
    ) -> bool {
        self.nodes += 1;
        if pending.is_empty() {
            return !f(assign, virt);
        }
        let mut best: Option<(usize, usize)> = None;
        for (k, &a) in pending.iter().enumerate() {
            let n = self.candidates(a, assign).len() + usize::from(self.virtual_ok(a, assign));
            if n == 0 {
                return false;
            }
            if best.is_none_or(|(_, m)| n < m) {
                best = Some((k, n));
            }
        }
        let (k, _) = best.expect("pending is non-empty");
        let atom = pending.swap_remove(k);
        let cands = self.candidates(atom, assign);
        let mut stopped = false;
        let mut bound = Vec::new();
        for &ti in cands {
            let t = &self.index.rels[&self.cq.atoms[atom].relation].tuples[ti as usize];
            if self.bind(atom, |p| Some(&t[p]), assign, &mut bound) && self.rec(pending, assign, virt, f) {
                stopped = true;
            }
            for i in bound.drain(..) {
                assign[i] = None;
            }
            if stopped {
                break;
            }
        }
        if !stopped && self.virtual_ok(atom, assign) {
            let v = self.virt.expect("checked");
            let bind_at = |p: usize| v.inputs.iter().position(|&q| q == p).map(|i| &v.binding[i]);
            if self.bind(atom, bind_at, assign, &mut bound) {
                virt[atom] = true;
                stopped = self.rec(pending, assign, virt, f);
                virt[atom] = false;
            }
            for i in bound.drain(..) {
                assign[i] = None;
            }
        }
        pending.push(atom);
        let last = pending.len() - 1;
        pending.swap(k, last);
        stopped
    }

    /// Unifies the atom with the values given per position (`None` leaves the
    /// position free). Newly bound variables are recorded in `bound`.
    fn bind<'v>(
        &self,
        atom: usize,
        value_at: impl Fn(usize) -> Option<&'v Value>,
        assign: &mut [Option<Value>],
        bound: &mut Vec<usize>,
    ) -> bool {
        for (p, t) in self.cq.atoms[atom].terms.iter().enumerate() {
            let Some(v) = value_at(p) else { continue };
            match t {
                CTerm::Const(c) => {
                    if c != v {
                        return false;
                    }
                }
                CTerm::Var(i) => match &assign[*i] {
                    Some(x) => {
                        if x != v {
                            return false;
                        }
                    }
                    None => {
                        assign[*i] = Some(v.clone());
                        bound.push(*i);
                    }
                },
            }
        }
        true
    }
}

/// Query plus its compiled DNF, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub disjuncts: Vec<CompiledCq>,
}

impl Prepared {
    pub fn new(q: &Query) -> Self {
        Prepared { disjuncts: to_dnf(q).iter().map(CompiledCq::new).collect() }
    }

    pub fn eval_index(&self, index: &FactIndex) -> Option<Homomorphism> {
        for d in &self.disjuncts {
            let all: Vec<usize> = (0..d.atoms.len()).collect();
            if let Some((a, _)) = Matcher::new(index, d).first(&all, Vec::new()) {
                return Some(d.homomorphism(&a));
            }
        }
        None
    }

    pub fn eval(&self, conf: &Configuration) -> Option<Homomorphism> {
        self.eval_index(&FactIndex::new(conf))
    }

    pub fn holds(&self, conf: &Configuration) -> bool {
        self.eval(conf).is_some()
    }
}

pub fn eval(q: &Query, conf: &Configuration) -> Option<Homomorphism> {
    Prepared::new(q).eval(conf)
}

/// Certain answer of a positive Boolean query: every instance containing the
/// configuration satisfies it iff the configuration itself does.
pub fn certain(q: &Query, conf: &Configuration) -> bool {
    eval(q, conf).is_some()
}

fn frozen(x: &str) -> Value {
    Value { token: name(&format!("?{x}")), domain: name("\u{1}") }
}

/// `q1 ⊑ q2` over all instances: every disjunct of `q1`, read as a canonical
/// database, satisfies `q2`.
pub fn classical_contains(q1: &Query, q2: &Query) -> bool {
    let p2 = Prepared::new(q2);
    to_dnf(q1).iter().all(|d| {
        let mut c = Configuration::new();
        for a in &d.atoms {
            let values = a
                .terms
                .iter()
                .map(|t| match t {
                    Term::Var(x) => frozen(x),
                    Term::Const(v) => v.clone(),
                })
                .collect();
            c.insert(Fact { relation: a.relation.clone(), values });
        }
        p2.holds(&c)
    })
}
