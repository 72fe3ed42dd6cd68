use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{name, Access, Configuration, Fact, Mode, Schema, Value};
use crate::query::{Atom, Query, Term};
use crate::reductions::{Lang, NamedQuery, ProblemInstance};

/// Which modes the random methods get.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DependencyMix {
    Independent,
    Dependent,
    Mixed,
}

/// Upper bounds for [`gen_random_instance`]. Counts are drawn uniformly from
/// `1..=max` (facts and methods from `0..=max`).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RandomLimits {
    pub relations: usize,
    pub arity: usize,
    pub domains: usize,
    /// Methods per relation.
    pub methods: usize,
    pub facts: usize,
    /// Atoms per query.
    pub atoms: usize,
    /// Distinct values per domain.
    pub values: usize,
    pub lang: Lang,
    pub mix: DependencyMix,
}

impl Default for RandomLimits {
    fn default() -> Self {
        RandomLimits { relations: 3, arity: 3, domains: 2, methods: 1, facts: 4, atoms: 4, values: 3, lang: Lang::Pq, mix: DependencyMix::Mixed }
    }
}

impl RandomLimits {
    fn validate(&self) -> Result<()> {
        if [self.relations, self.arity, self.domains, self.atoms, self.values].contains(&0) {
            return Err(Error::Unsupported("random limits must be positive".into()));
        }
        Ok(())
    }
}

const VARS: [&str; 4] = ["x", "y", "z", "w"];

/// A random instance with queries `Q1` and `Q2` and a target access, all
/// determined by `seed`. Query constants are admitted, the target binding is
/// drawn from the known values most of the time, and at least one relation
/// has a method.
pub fn gen_random_instance(seed: u64, limits: &RandomLimits) -> Result<ProblemInstance> {
    limits.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schema = Schema::new();
    let doms: Vec<String> = (1..=rng.gen_range(1..=limits.domains)).map(|i| format!("D{i}")).collect();
    for d in &doms {
        schema.add_domain(d);
    }
    let nrel = rng.gen_range(1..=limits.relations);
    let mut rels: Vec<(String, Vec<usize>)> = Vec::new();
    for r in 0..nrel {
        let rname = format!("R{}", r + 1);
        let sig: Vec<usize> = (0..rng.gen_range(1..=limits.arity)).map(|_| rng.gen_range(0..doms.len())).collect();
        let attrs: Vec<(String, &str)> = sig.iter().enumerate().map(|(p, &d)| (format!("a{}", p + 1), doms[d].as_str())).collect();
        let pairs: Vec<(&str, &str)> = attrs.iter().map(|(a, d)| (a.as_str(), *d)).collect();
        schema.add_relation(&rname, &pairs)?;
        rels.push((rname, sig));
    }
    let mut counts: Vec<usize> = (0..nrel).map(|_| rng.gen_range(0..=limits.methods)).collect();
    if counts.iter().all(|&c| c == 0) {
        counts[rng.gen_range(0..nrel)] = 1;
    }
    for (r, (rname, sig)) in rels.iter().enumerate() {
        for m in 0..counts[r] {
            let inputs: Vec<String> = (0..sig.len()).filter(|_| rng.gen_bool(0.5)).map(|p| format!("a{}", p + 1)).collect();
            let inputs: Vec<&str> = inputs.iter().map(String::as_str).collect();
            let mode = match limits.mix {
                DependencyMix::Independent => Mode::Independent,
                DependencyMix::Dependent => Mode::Dependent,
                DependencyMix::Mixed if rng.gen_bool(0.5) => Mode::Dependent,
                DependencyMix::Mixed => Mode::Independent,
            };
            schema.add_method(&format!("m{}{}", rname, m + 1), rname, &inputs, mode)?;
        }
    }

    let value = |d: usize, i: usize| Value::new(&i.to_string(), &doms[d]);
    let mut conf = Configuration::new();
    for _ in 0..rng.gen_range(0..=limits.facts) {
        let (rname, sig) = rels.choose(&mut rng).expect("nonempty");
        let vals = sig.iter().map(|&d| value(d, rng.gen_range(0..limits.values))).collect();
        conf.insert(Fact::new(rname, vals));
    }

    let mut queries = Vec::new();
    for qn in ["Q1", "Q2"] {
        let size = rng.gen_range(1..=limits.atoms);
        let mut atom = |rng: &mut ChaCha8Rng| {
            let (rname, sig) = rels.choose(rng).expect("nonempty");
            let terms = sig
                .iter()
                .map(|&d| {
                    if rng.gen_bool(0.2) {
                        let v = value(d, rng.gen_range(0..limits.values));
                        conf.admit(v.clone());
                        Term::Const(v)
                    } else {
                        // variables carry their domain in the name so typing always holds
                        let x = VARS[rng.gen_range(0..VARS.len().min(limits.atoms + 1))];
                        Term::var(&format!("{x}{}", d + 1))
                    }
                })
                .collect();
            Atom::new(rname, terms)
        };
        let body = match limits.lang {
            Lang::Cq => Query::conj((0..size).map(|_| atom(&mut rng))),
            Lang::Pq => random_tree(&mut rng, size, &mut atom),
        };
        queries.push(NamedQuery { name: name(qn), head: Vec::new(), body: body.normalized() });
    }

    let methods: Vec<_> = schema.methods.clone();
    let m = methods.choose(&mut rng).expect("at least one method");
    let r = schema.relation_or_err(&m.relation)?.clone();
    let adom = conf.adom();
    let binding = m
        .inputs
        .iter()
        .map(|&p| {
            let known: Vec<&Value> = adom.iter().filter(|v| &v.domain == r.domain(p)).collect();
            if !known.is_empty() && rng.gen_bool(0.8) {
                known[rng.gen_range(0..known.len())].clone()
            } else {
                Value::new(&rng.gen_range(0..limits.values).to_string(), r.domain(p))
            }
        })
        .collect();
    let target = Some(Access { method: m.name.clone(), binding });
    let inst = ProblemInstance { schema, conf, queries, target };
    inst.validate()?;
    Ok(inst)
}

fn random_tree(rng: &mut ChaCha8Rng, size: usize, atom: &mut dyn FnMut(&mut ChaCha8Rng) -> Atom) -> Query {
    if size <= 1 {
        return Query::Atom(atom(rng));
    }
    let left = rng.gen_range(1..size);
    let (a, b) = (random_tree(rng, left, atom), random_tree(rng, size - left, atom));
    if rng.gen_bool(0.5) {
        Query::And(vec![a, b])
    } else {
        Query::Or(vec![a, b])
    }
}
