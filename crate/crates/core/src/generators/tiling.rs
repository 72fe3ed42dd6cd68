use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{name, Configuration, Fact, Mode, Schema, Value};
use crate::query::{Atom, Query, Term};
use crate::reductions::{NamedQuery, ProblemInstance};

/// A tiling problem. Tile types are `0..tiles` and print as `t1`, `t2`, ...
/// `h` holds the allowed (left, right) pairs and `v` the allowed
/// (lower row, next row) pairs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TilingSpec {
    /// Address bits for the grid, corridor width for the corridor.
    pub n: usize,
    pub tiles: usize,
    pub h: BTreeSet<(usize, usize)>,
    pub v: BTreeSet<(usize, usize)>,
    pub initial: Vec<usize>,
    /// Last row of the corridor; unused by the grid.
    pub final_row: Vec<usize>,
}

impl TilingSpec {
    /// Every pair of `0..tiles`.
    pub fn all_pairs(tiles: usize) -> BTreeSet<(usize, usize)> {
        (0..tiles).flat_map(|i| (0..tiles).map(move |j| (i, j))).collect()
    }

    fn check_common(&self) -> Result<()> {
        if self.tiles == 0 {
            return Err(Error::Unsupported("tiling needs at least one tile type".into()));
        }
        let bad = |t: usize| t >= self.tiles;
        if self.h.iter().chain(&self.v).any(|&(a, b)| bad(a) || bad(b)) {
            return Err(Error::Unsupported("constraint mentions an unknown tile type".into()));
        }
        if self.initial.iter().chain(&self.final_row).any(|&t| bad(t)) {
            return Err(Error::Unsupported("row mentions an unknown tile type".into()));
        }
        Ok(())
    }

    /// Side length of the grid, `2^n`.
    pub fn grid_side(&self) -> usize {
        1usize << self.n
    }

    pub fn validate_grid(&self) -> Result<()> {
        self.check_common()?;
        if self.n == 0 || self.n > 16 {
            return Err(Error::Unsupported("grid needs 1 <= n <= 16".into()));
        }
        if self.initial.len() < 2 || self.initial.len() > self.grid_side() {
            return Err(Error::Unsupported(format!("grid needs between 2 and {} initial tiles", self.grid_side())));
        }
        Ok(())
    }

    pub fn validate_corridor(&self) -> Result<()> {
        self.check_common()?;
        if self.n < 2 {
            return Err(Error::Unsupported("corridor needs width at least 2".into()));
        }
        if self.initial.len() != self.n || self.final_row.len() != self.n {
            return Err(Error::Unsupported(format!("initial and final rows need exactly {} tiles", self.n)));
        }
        Ok(())
    }
}

fn tile(t: usize) -> String {
    format!("t{}", t + 1)
}

/// Boolean gates over the fixed `And`, `Or` and `Eq` tables, with
/// deterministically numbered output variables.
struct Circuit {
    atoms: Vec<Atom>,
    counters: BTreeMap<String, usize>,
    bool_dom: String,
}

impl Circuit {
    fn new(bool_dom: &str) -> Self {
        Circuit { atoms: Vec::new(), counters: BTreeMap::new(), bool_dom: bool_dom.to_string() }
    }

    fn bit(&self, b: bool) -> Term {
        Term::constant(if b { "1" } else { "0" }, &self.bool_dom)
    }

    fn var(&mut self, prefix: &str) -> Term {
        let c = self.counters.entry(prefix.to_string()).or_insert(0);
        *c += 1;
        Term::var(&format!("{prefix}_{c}"))
    }

    fn gate(&mut self, rel: &str, a: Term, b: Term, prefix: &str) -> Term {
        let out = self.var(prefix);
        self.atoms.push(Atom::new(rel, vec![a, b, out.clone()]));
        out
    }

    fn eq(&mut self, a: Term, b: Term, prefix: &str) -> Term {
        self.gate("Eq", a, b, prefix)
    }

    fn not(&mut self, a: Term, prefix: &str) -> Term {
        let zero = self.bit(false);
        self.gate("Eq", a, zero, prefix)
    }

    fn fold(&mut self, rel: &str, items: Vec<Term>, unit: bool, prefix: &str) -> Term {
        let mut it = items.into_iter();
        let Some(mut acc) = it.next() else { return self.bit(unit) };
        for t in it {
            acc = self.gate(rel, acc, t, prefix);
        }
        acc
    }

    fn and_all(&mut self, items: Vec<Term>, prefix: &str) -> Term {
        self.fold("And", items, true, prefix)
    }

    fn or_all(&mut self, items: Vec<Term>, prefix: &str) -> Term {
        self.fold("Or", items, false, prefix)
    }

    fn vec_eq(&mut self, xs: &[Term], ys: &[Term], prefix: &str) -> Term {
        let eqs = xs.iter().zip(ys).map(|(x, y)| self.eq(x.clone(), y.clone(), prefix)).collect();
        self.and_all(eqs, prefix)
    }

    /// 1 iff `xs` is the big-endian encoding of `value`.
    fn vec_is(&mut self, xs: &[Term], value: usize, prefix: &str) -> Term {
        let bits = encode(value, xs.len());
        let eqs = xs
            .iter()
            .zip(bits)
            .map(|(x, b)| {
                let c = self.bit(b);
                self.eq(x.clone(), c, prefix)
            })
            .collect();
        self.and_all(eqs, prefix)
    }

    /// 1 iff `ys` encodes the successor of `xs`: for some position, the
    /// prefixes agree, `xs` has 0 and `ys` has 1 there, and below it `xs` is
    /// all ones and `ys` all zeros.
    fn succ(&mut self, xs: &[Term], ys: &[Term], prefix: &str) -> Term {
        let len = xs.len();
        let mut cases = Vec::with_capacity(len);
        for i in 0..len {
            let p = format!("{prefix}_{}", i + 1);
            let mut conds = Vec::new();
            for j in 0..i {
                conds.push(self.eq(xs[j].clone(), ys[j].clone(), &p));
            }
            let (zero, one) = (self.bit(false), self.bit(true));
            conds.push(self.eq(xs[i].clone(), zero, &p));
            conds.push(self.eq(ys[i].clone(), one, &p));
            for j in i + 1..len {
                let (zero, one) = (self.bit(false), self.bit(true));
                conds.push(self.eq(xs[j].clone(), one, &p));
                conds.push(self.eq(ys[j].clone(), zero, &p));
            }
            cases.push(self.and_all(conds, &p));
        }
        self.or_all(cases, prefix)
    }
}

/// Big-endian `width`-bit encoding, most significant bit first.
fn encode(value: usize, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| value >> i & 1 == 1).collect()
}

fn bit_vars(prefix: &str, n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::var(&format!("{prefix}{i}"))).collect()
}

/// Containment instance for tiling the `2^n x 2^n` grid: tiles are facts
/// `Tile(type, row bits, column bits, in, out)` produced through one
/// dependent method whose output links to the next tile in row-major order.
/// `Q1` asks for the last cell and `Q2` detects a defect among the produced
/// tiles, so the grid is tileable iff `Q1` is not contained in `Q2`.
pub fn gen_tiling_grid(spec: &TilingSpec) -> Result<ProblemInstance> {
    spec.validate_grid()?;
    let n = spec.n;
    let (b, t, c) = ("B", "T", "C");
    let bv = |x: bool| Value::new(if x { "1" } else { "0" }, b);
    let tv = |i: usize| Value::new(&tile(i), t);

    let mut schema = Schema::new();
    for d in [b, t, c] {
        schema.add_domain(d);
    }
    schema.add_relation("Bool", &[("b", b)])?;
    schema.add_relation("TileType", &[("t", t)])?;
    for r in ["SameTile", "Horiz", "Vert"] {
        schema.add_relation(r, &[("t1", t), ("t2", t), ("b", b)])?;
    }
    for r in ["And", "Or", "Eq"] {
        schema.add_relation(r, &[("l", b), ("r", b), ("o", b)])?;
    }
    let mut attrs: Vec<(String, &str)> = vec![("type".into(), t)];
    attrs.extend((1..=n).map(|i| (format!("row{i}"), b)));
    attrs.extend((1..=n).map(|i| (format!("col{i}"), b)));
    attrs.push(("in".into(), c));
    attrs.push(("out".into(), c));
    let pairs: Vec<(&str, &str)> = attrs.iter().map(|(a, d)| (a.as_str(), *d)).collect();
    schema.add_relation("Tile", &pairs)?;
    let inputs: Vec<&str> = pairs[..pairs.len() - 1].iter().map(|(a, _)| *a).collect();
    schema.add_method("tileAcc", "Tile", &inputs, Mode::Dependent)?;

    let mut conf = Configuration::new();
    for x in [false, true] {
        conf.insert(Fact::new("Bool", vec![bv(x)]));
    }
    for i in 0..spec.tiles {
        conf.insert(Fact::new("TileType", vec![tv(i)]));
    }
    for i in 0..spec.tiles {
        for j in 0..spec.tiles {
            conf.insert(Fact::new("SameTile", vec![tv(i), tv(j), bv(i == j)]));
            conf.insert(Fact::new("Horiz", vec![tv(i), tv(j), bv(spec.h.contains(&(i, j)))]));
            conf.insert(Fact::new("Vert", vec![tv(i), tv(j), bv(spec.v.contains(&(i, j)))]));
        }
    }
    for x in [false, true] {
        for y in [false, true] {
            conf.insert(Fact::new("And", vec![bv(x), bv(y), bv(x && y)]));
            conf.insert(Fact::new("Or", vec![bv(x), bv(y), bv(x || y)]));
            conf.insert(Fact::new("Eq", vec![bv(x), bv(y), bv(x == y)]));
        }
    }
    let seed = |ty: usize, col: usize, i: usize| {
        let mut vals = vec![tv(ty)];
        vals.extend(encode(0, n).into_iter().map(bv));
        vals.extend(encode(col, n).into_iter().map(bv));
        vals.push(Value::new(&format!("c{i}"), c));
        vals.push(Value::new(&format!("c{}", i + 1), c));
        Fact::new("Tile", vals)
    };
    conf.insert(seed(spec.initial[0], 0, 0));
    conf.insert(seed(spec.initial[1], 1, 1));

    let last = spec.grid_side() - 1;
    let tile_atom = |ty: &str, row: &[Term], col: &[Term], i: &str, o: &str| {
        let mut terms = vec![Term::var(ty)];
        terms.extend(row.iter().cloned());
        terms.extend(col.iter().cloned());
        terms.push(Term::var(i));
        terms.push(Term::var(o));
        Atom::new("Tile", terms)
    };
    let ones: Vec<Term> = encode(last, n).into_iter().map(|x| Term::constant(if x { "1" } else { "0" }, b)).collect();
    let q1 = Query::conj([tile_atom("u", &ones, &ones, "x", "y")]);

    let (rb, cb) = (bit_vars("b", n), bit_vars("c", n));
    let (rd, ce) = (bit_vars("d", n), bit_vars("e", n));
    let (rf, cg) = (bit_vars("f", n), bit_vars("g", n));
    let (rk, ch) = (bit_vars("k", n), bit_vars("h", n));
    let mut atoms = vec![
        tile_atom("u", &rb, &cb, "x", "y"),
        tile_atom("v", &rd, &ce, "y", "z"),
        tile_atom("w", &rf, &cg, "y2", "z2"),
        tile_atom("q", &rk, &ch, "y2", "z3"),
    ];
    let mut circ = Circuit::new(b);
    // the two tiles sharing an input agree on their address
    let fd: Vec<Term> = rf.iter().chain(&cg).zip(rk.iter().chain(&ch)).map(|(x, y)| circ.eq(x.clone(), y.clone(), "fd_a")).collect();
    let i1 = circ.and_all(fd, "fd_r");
    // linked tiles have consecutive addresses
    let lhs: Vec<Term> = rb.iter().chain(&cb).cloned().collect();
    let rhs: Vec<Term> = rd.iter().chain(&ce).cloned().collect();
    let i2 = circ.succ(&lhs, &rhs, "succ");
    // adjacency violations between a tile with a successor and any later
    // tile; a tile linked from another one could never be the first seed
    let mut viol = Vec::new();
    let same_row = circ.vec_eq(&rb, &rf, "hz_row");
    let next_col = circ.succ(&cb, &cg, "hz_col");
    let hz = circ.var("hz_ok");
    circ.atoms.push(Atom::new("Horiz", vec![Term::var("u"), Term::var("w"), hz.clone()]));
    let hz_bad = circ.not(hz, "hz_bad");
    viol.push(circ.and_all(vec![same_row, next_col, hz_bad], "hz"));
    let next_row = circ.succ(&rb, &rf, "vt_row");
    let same_col = circ.vec_eq(&cb, &cg, "vt_col");
    let vt = circ.var("vt_ok");
    circ.atoms.push(Atom::new("Vert", vec![Term::var("u"), Term::var("w"), vt.clone()]));
    let vt_bad = circ.not(vt, "vt_bad");
    viol.push(circ.and_all(vec![next_row, same_col, vt_bad], "vt"));
    // initial-row violations on any tile
    for (i, &ty) in spec.initial.iter().enumerate() {
        let p = format!("init{}", i + 1);
        let row0 = circ.vec_is(&rf, 0, &p);
        let coli = circ.vec_is(&cg, i, &p);
        let same = circ.var(&format!("{p}_same"));
        circ.atoms.push(Atom::new("SameTile", vec![Term::var("w"), Term::constant(&tile(ty), t), same.clone()]));
        let wrong = circ.not(same, &p);
        viol.push(circ.and_all(vec![row0, coli, wrong], &p));
    }
    let any = circ.or_all(viol, "viol");
    let i3 = circ.not(any, "ok");
    let j = circ.gate("And", i1, i2, "j");
    circ.atoms.push(Atom::new("And", vec![j, i3, circ.bit(false)]));
    atoms.extend(circ.atoms);
    let q2 = Query::conj(atoms);

    Ok(ProblemInstance {
        schema,
        conf,
        queries: vec![
            NamedQuery { name: name("Q1"), head: Vec::new(), body: q1.normalized() },
            NamedQuery { name: name("Q2"), head: Vec::new(), body: q2.normalized() },
        ],
        target: None,
    })
}

fn rel(i: usize, j: usize) -> String {
    format!("C{}_{}", i + 1, j + 1)
}

fn label(i: usize, j: usize) -> String {
    format!("t{}c{}", i + 1, j + 1)
}

/// Containment instance for tiling a corridor of width `n` from the initial
/// to the final row. Cells are produced one at a time through dependent
/// accesses, each linking to the previous cell in row-major order. `Q1`
/// asks for the final row and `Q2` detects a defect, so the corridor is
/// tileable iff some reachable configuration satisfies `Q1` but not `Q2`.
///
/// The UCQ form has one binary relation `C{i}_{j}` per tile type and column.
/// The CQ form uses a single `Cell(prev, cur, label)` relation whose label
/// (tile type and column) is an input, and computes the defect with fixed
/// arity-3 tables and an `Or` chain over a generic window of cells. A padding
/// self-loop lets the window always match.
pub fn gen_tiling_corridor(spec: &TilingSpec, as_cq: bool) -> Result<ProblemInstance> {
    spec.validate_corridor()?;
    if as_cq {
        corridor_cq(spec)
    } else {
        corridor_ucq(spec)
    }
}

fn corridor_ucq(spec: &TilingSpec) -> Result<ProblemInstance> {
    let (n, k) = (spec.n, spec.tiles);
    let d = "D";
    let mut schema = Schema::new();
    schema.add_domain(d);
    for i in 0..k {
        for j in 0..n {
            let r = rel(i, j);
            schema.add_relation(&r, &[("prev", d), ("cur", d)])?;
            schema.add_method(&format!("acc{r}"), &r, &["prev"], Mode::Dependent)?;
        }
    }
    let cv = |i: usize| Value::new(&format!("c{i}"), d);
    let mut conf = Configuration::new();
    for (j, &ty) in spec.initial.iter().enumerate() {
        conf.insert(Fact::new(&rel(ty, j), vec![cv(j), cv(j + 1)]));
    }
    let at = |i: usize, j: usize, x: &str, y: &str| Query::atom(&rel(i, j), vec![Term::var(x), Term::var(y)]);
    let q1 = Query::And((0..n).map(|j| at(spec.final_row[j], j, &format!("y{j}"), &format!("y{}", j + 1))).collect());

    let cells: Vec<(usize, usize)> = (0..k).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut disj = Vec::new();
    for (a, &(i, m)) in cells.iter().enumerate() {
        for &(j, l) in &cells[a + 1..] {
            disj.push(Query::And(vec![at(i, m, "x", "y"), at(j, l, "x", "w")]));
            disj.push(Query::And(vec![at(i, m, "x", "y"), at(j, l, "w", "y")]));
        }
    }
    for &(i, m) in &cells {
        let next = if m + 1 < n { m + 1 } else { 0 };
        for &(kk, m2) in &cells {
            if m2 != next {
                disj.push(Query::And(vec![at(i, m, "x", "y"), at(kk, m2, "y", "z")]));
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            if spec.h.contains(&(i, j)) {
                continue;
            }
            for m in 0..n - 1 {
                disj.push(Query::And(vec![at(i, m, "x", "y"), at(j, m + 1, "y", "z")]));
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            if spec.v.contains(&(i, j)) {
                continue;
            }
            for m in 0..n {
                let mut parts = vec![at(i, m, "x", "y1")];
                for s in 1..n {
                    let col = (m + s) % n;
                    let (a, b) = (format!("y{s}"), format!("y{}", s + 1));
                    parts.push(Query::Or((0..k).map(|t| at(t, col, &a, &b)).collect()).normalized());
                }
                parts.push(at(j, m, &format!("y{n}"), "z"));
                disj.push(Query::And(parts));
            }
        }
    }
    let q2 = Query::Or(disj).normalized();
    Ok(ProblemInstance {
        schema,
        conf,
        queries: vec![
            NamedQuery { name: name("Q1"), head: Vec::new(), body: q1.normalized() },
            NamedQuery { name: name("Q2"), head: Vec::new(), body: q2.normalized() },
        ],
        target: None,
    })
}

fn corridor_cq(spec: &TilingSpec) -> Result<ProblemInstance> {
    let (n, k) = (spec.n, spec.tiles);
    let (d, b, l) = ("D", "B", "L");
    let mut schema = Schema::new();
    for x in [d, b, l] {
        schema.add_domain(x);
    }
    schema.add_relation("Cell", &[("prev", d), ("cur", d), ("label", l)])?;
    schema.add_method("accCell", "Cell", &["prev", "label"], Mode::Dependent)?;
    for r in ["Diff", "BadStep", "BadHoriz", "BadVert"] {
        schema.add_relation(r, &[("l1", l), ("l2", l), ("b", b)])?;
    }
    schema.add_relation("Or", &[("l", b), ("r", b), ("o", b)])?;

    let bv = |x: bool| Value::new(if x { "1" } else { "0" }, b);
    let pad = "pad";
    let lv = |s: &str| Value::new(s, l);
    let mut labels: Vec<(Option<(usize, usize)>, String)> = vec![(None, pad.to_string())];
    for i in 0..k {
        for j in 0..n {
            labels.push((Some((i, j)), label(i, j)));
        }
    }
    let mut conf = Configuration::new();
    for x in [false, true] {
        for y in [false, true] {
            conf.insert(Fact::new("Or", vec![bv(x), bv(y), bv(x || y)]));
        }
    }
    for (a, la) in &labels {
        for (c, lc) in &labels {
            let diff = la != lc;
            // a padded cell next to a real one counts as a bad step
            let (step, horiz, vert) = match (a, c) {
                (Some((i, m)), Some((j, m2))) => {
                    let step = *m2 != (m + 1) % n;
                    let horiz = m + 1 < n && *m2 == m + 1 && !spec.h.contains(&(*i, *j));
                    let vert = m == m2 && !spec.v.contains(&(*i, *j));
                    (step, horiz, vert)
                }
                (None, None) => (false, false, false),
                _ => (true, false, false),
            };
            conf.insert(Fact::new("Diff", vec![lv(la), lv(lc), bv(diff)]));
            conf.insert(Fact::new("BadStep", vec![lv(la), lv(lc), bv(step)]));
            conf.insert(Fact::new("BadHoriz", vec![lv(la), lv(lc), bv(horiz)]));
            conf.insert(Fact::new("BadVert", vec![lv(la), lv(lc), bv(vert)]));
        }
    }
    let cv = |i: usize| Value::new(&format!("c{i}"), d);
    for (j, &ty) in spec.initial.iter().enumerate() {
        conf.insert(Fact::new("Cell", vec![cv(j), cv(j + 1), lv(&label(ty, j))]));
    }
    let pv = Value::new(pad, d);
    conf.insert(Fact::new("Cell", vec![pv.clone(), pv, lv(pad)]));

    let cell = |x: &str, y: &str, lab: Term| Atom::new("Cell", vec![Term::var(x), Term::var(y), lab]);
    let q1 = Query::conj(
        (0..n).map(|j| cell(&format!("y{j}"), &format!("y{}", j + 1), Term::constant(&label(spec.final_row[j], j), l))),
    );

    // window: a chain w0 -> ... -> w(n+1) and two pairs sharing an end
    let mut atoms = Vec::new();
    for s in 0..=n {
        atoms.push(cell(&format!("w{s}"), &format!("w{}", s + 1), Term::var(&format!("l{s}"))));
    }
    atoms.push(cell("x", "y", Term::var("p1")));
    atoms.push(cell("x", "y2", Term::var("p2")));
    atoms.push(cell("x2", "z", Term::var("r1")));
    atoms.push(cell("x3", "z", Term::var("r2")));
    let mut circ = Circuit::new(b);
    let mut table = |r: &str, a: &str, c: &str, out: &str| {
        circ.atoms.push(Atom::new(r, vec![Term::var(a), Term::var(c), Term::var(out)]));
        Term::var(out)
    };
    let lastl = format!("l{n}");
    let viol = [
        table("Diff", "p1", "p2", "same_prev"),
        table("Diff", "r1", "r2", "same_cur"),
        table("BadStep", "l0", "l1", "step"),
        table("BadHoriz", "l0", "l1", "horiz"),
        table("BadVert", "l0", &lastl, "vert"),
    ];
    let mut acc = viol[0].clone();
    for (i, t) in viol.iter().enumerate().skip(1) {
        let out = if i + 1 == viol.len() { circ.bit(true) } else { circ.var("viol") };
        circ.atoms.push(Atom::new("Or", vec![acc, t.clone(), out.clone()]));
        acc = out;
    }
    atoms.extend(circ.atoms);
    let q2 = Query::conj(atoms);
    Ok(ProblemInstance {
        schema,
        conf,
        queries: vec![
            NamedQuery { name: name("Q1"), head: Vec::new(), body: q1.normalized() },
            NamedQuery { name: name("Q2"), head: Vec::new(), body: q2.normalized() },
        ],
        target: None,
    })
}
