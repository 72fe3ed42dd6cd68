//! The line-oriented `.alp` problem format.
//!
//! ```text
//! domain D
//! relation R(a:D, b:D)
//! access mR on R inputs(b) independent
//! const 5:D
//! fact R(3, 5)
//! query Q = R(x, 5) & (S(x) | T(x))
//! target R(?, 5) via mR
//! ```
//!
//! In queries, lowercase-initial identifiers are variables; numbers, quoted
//! strings and other identifiers are constants. `true` and `false` are the
//! empty conjunction and disjunction.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{name, Access, Configuration, Fact, Mode, Schema, Value};
use crate::query::{fmt_token, Atom, Query, Term};
use crate::reductions::{NamedQuery, ProblemInstance};

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Lexeme {
    tok: Tok,
    col: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

fn lex(text: &str, line: usize) -> Result<Vec<Lexeme>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Lexeme { tok: Tok::Ident(chars[start..i].iter().collect()), col });
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Lexeme { tok: Tok::Num(chars[start..i].iter().collect()), col });
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(line, col, "unterminated string")),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let Some(&e) = chars.get(i + 1) else { return Err(err(line, col, "unterminated string")) };
                        s.push(e);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Lexeme { tok: Tok::Str(s), col });
        } else if "(),:&|=?".contains(c) {
            out.push(Lexeme { tok: Tok::Sym(c), col });
            i += 1;
        } else {
            return Err(err(line, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Lexeme],
    i: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Lexeme], line: usize, len: usize) -> Self {
        Cursor { toks, i: 0, line, end_col: len + 1 }
    }

    fn col(&self) -> usize {
        self.toks.get(self.i).map_or(self.end_col, |l| l.col)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|l| &l.tok)
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        err(self.line, self.col(), msg)
    }

    fn at_sym(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Sym(c))
    }

    fn sym(&mut self, c: char) -> Result<()> {
        if self.at_sym(c) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.i += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected `{kw}`"))),
        }
    }

    fn done(&self) -> Result<()> {
        if self.i < self.toks.len() {
            Err(self.error("unexpected trailing input"))
        } else {
            Ok(())
        }
    }

    /// A constant token: identifier, number or string.
    fn token(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s) | Tok::Num(s) | Tok::Str(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => Err(self.error("expected a constant")),
        }
    }

    /// Comma-separated items between parentheses.
    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        self.sym('(')?;
        let mut out = Vec::new();
        if self.at_sym(')') {
            self.i += 1;
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.at_sym(',') {
                self.i += 1;
            } else {
                self.sym(')')?;
                return Ok(out);
            }
        }
    }
}

fn typed(schema: &Schema, rel: &str, pos: usize, token: String, cur: &Cursor) -> Result<Value> {
    let r = schema.relation(rel).ok_or_else(|| cur.error(format!("unknown relation `{rel}`")))?;
    if pos >= r.arity() {
        return Err(cur.error(format!("{rel} has arity {}", r.arity())));
    }
    Ok(Value { token: name(&token), domain: r.domain(pos).clone() })
}

fn parse_expr(cur: &mut Cursor, schema: &Schema) -> Result<Query> {
    let mut parts = vec![parse_conj(cur, schema)?];
    while cur.at_sym('|') {
        cur.i += 1;
        parts.push(parse_conj(cur, schema)?);
    }
    Ok(if parts.len() == 1 { parts.pop().expect("one part") } else { Query::Or(parts) })
}

fn parse_conj(cur: &mut Cursor, schema: &Schema) -> Result<Query> {
    let mut parts = vec![parse_primary(cur, schema)?];
    while cur.at_sym('&') {
        cur.i += 1;
        parts.push(parse_primary(cur, schema)?);
    }
    Ok(if parts.len() == 1 { parts.pop().expect("one part") } else { Query::And(parts) })
}

fn parse_primary(cur: &mut Cursor, schema: &Schema) -> Result<Query> {
    if cur.at_sym('(') {
        cur.i += 1;
        let q = parse_expr(cur, schema)?;
        cur.sym(')')?;
        return Ok(q);
    }
    let col = cur.col();
    let rel = cur.ident("an atom")?;
    if !cur.at_sym('(') {
        match rel.as_str() {
            "true" => return Ok(Query::truth()),
            "false" => return Ok(Query::falsity()),
            _ => return Err(cur.error("expected `(`")),
        }
    }
    if schema.relation(&rel).is_none() {
        return Err(err(cur.line, col, format!("unknown relation `{rel}`")));
    }
    let mut pos = 0;
    let terms = cur.list(|c| {
        let t = match c.peek() {
            Some(Tok::Ident(s)) if s.starts_with(|ch: char| ch.is_lowercase()) => {
                let s = s.clone();
                c.i += 1;
                Term::Var(name(&s))
            }
            _ => {
                let tok = c.token()?;
                Term::Const(typed(schema, &rel, pos, tok, c)?)
            }
        };
        pos += 1;
        Ok(t)
    })?;
    let arity = schema.relation(&rel).expect("checked").arity();
    if terms.len() != arity {
        return Err(err(cur.line, col, format!("{rel} expects {arity} terms, got {}", terms.len())));
    }
    Ok(Query::Atom(Atom { relation: name(&rel), terms }))
}

fn parse_access_at(cur: &mut Cursor, schema: &Schema) -> Result<Access> {
    let col = cur.col();
    let rel = cur.ident("a relation")?;
    let r = schema.relation(&rel).ok_or_else(|| err(cur.line, col, format!("unknown relation `{rel}`")))?.clone();
    let mut pos = 0;
    let items = cur.list(|c| {
        let v = if c.at_sym('?') {
            c.i += 1;
            None
        } else {
            let tok = c.token()?;
            Some(typed(schema, &rel, pos, tok, c)?)
        };
        pos += 1;
        Ok(v)
    })?;
    if items.len() != r.arity() {
        return Err(err(cur.line, col, format!("{rel} expects {} positions, got {}", r.arity(), items.len())));
    }
    let inputs: Vec<usize> = (0..items.len()).filter(|&p| items[p].is_some()).collect();
    let method = if matches!(cur.peek(), Some(Tok::Ident(s)) if s == "via") {
        cur.i += 1;
        let mcol = cur.col();
        let m = cur.ident("a method name")?;
        let am = schema.method(&m).ok_or_else(|| err(cur.line, mcol, format!("unknown access method `{m}`")))?;
        if *am.relation != *rel || am.inputs != inputs {
            return Err(err(cur.line, mcol, format!("`{m}` does not match the bound positions of {rel}")));
        }
        am.name.clone()
    } else {
        let mut fits = schema.methods_on(&rel).filter(|m| m.inputs == inputs);
        match (fits.next(), fits.next()) {
            (Some(m), None) => m.name.clone(),
            (None, _) => return Err(err(cur.line, col, format!("no access method on {rel} with these inputs"))),
            _ => return Err(err(cur.line, col, "several methods fit; add `via METHOD`")),
        }
    };
    let binding = items.into_iter().flatten().collect();
    Ok(Access { method, binding })
}

/// Parses one access expression such as `R(?, 5) via mR`.
pub fn parse_access(text: &str, schema: &Schema) -> Result<Access> {
    let toks = lex(text, 1)?;
    let mut cur = Cursor::new(&toks, 1, text.chars().count());
    let a = parse_access_at(&mut cur, schema)?;
    cur.done()?;
    Ok(a)
}

/// Parses a query expression against a schema.
pub fn parse_query(text: &str, schema: &Schema) -> Result<Query> {
    let toks = lex(text, 1)?;
    let mut cur = Cursor::new(&toks, 1, text.chars().count());
    let q = parse_expr(&mut cur, schema)?;
    cur.done()?;
    Ok(q)
}

/// Parses and validates a problem file. With `admit_query_constants`, query
/// constants are added to the admitted constants instead of being rejected.
pub fn parse_problem(text: &str, admit_query_constants: bool) -> Result<ProblemInstance> {
    let mut inst = ProblemInstance::default();
    let mut query_lines = Vec::new();
    let mut target_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = lex(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(&toks, line, raw.chars().count());
        let kw = cur.ident("a declaration")?;
        let at = |e: Error, col: usize| match e {
            Error::Parse { .. } => e,
            other => err(line, col, other.to_string()),
        };
        match kw.as_str() {
            "domain" => {
                let d = cur.ident("a domain name")?;
                inst.schema.add_domain(&d);
            }
            "relation" => {
                let col = cur.col();
                let rel = cur.ident("a relation name")?;
                let attrs = cur.list(|c| {
                    let a = c.ident("an attribute name")?;
                    c.sym(':')?;
                    let d = c.ident("a domain name")?;
                    Ok((a, d))
                })?;
                let pairs: Vec<(&str, &str)> = attrs.iter().map(|(a, d)| (a.as_str(), d.as_str())).collect();
                inst.schema.add_relation(&rel, &pairs).map_err(|e| at(e, col))?;
            }
            "access" => {
                let col = cur.col();
                let m = cur.ident("a method name")?;
                cur.keyword("on")?;
                let rel = cur.ident("a relation name")?;
                cur.keyword("inputs")?;
                let inputs = cur.list(|c| c.ident("an attribute name"))?;
                let mcol = cur.col();
                let mode = match cur.ident("`dependent` or `independent`")?.as_str() {
                    "dependent" => Mode::Dependent,
                    "independent" => Mode::Independent,
                    _ => return Err(err(line, mcol, "expected `dependent` or `independent`")),
                };
                let names: Vec<&str> = inputs.iter().map(String::as_str).collect();
                inst.schema.add_method(&m, &rel, &names, mode).map_err(|e| at(e, col))?;
            }
            "const" => {
                let tok = cur.token()?;
                cur.sym(':')?;
                let col = cur.col();
                let d = cur.ident("a domain name")?;
                if !inst.schema.domains.contains(d.as_str()) {
                    return Err(err(line, col, format!("undeclared domain `{d}`")));
                }
                inst.conf.admit(Value::new(&tok, &d));
            }
            "fact" => {
                let col = cur.col();
                let rel = cur.ident("a relation name")?;
                if inst.schema.relation(&rel).is_none() {
                    return Err(err(line, col, format!("unknown relation `{rel}`")));
                }
                let mut pos = 0;
                let schema = &inst.schema;
                let values = cur.list(|c| {
                    let tok = c.token()?;
                    let v = typed(schema, &rel, pos, tok, c);
                    pos += 1;
                    v
                })?;
                inst.schema.check_tuple(&rel, &values).map_err(|e| at(e, col))?;
                inst.conf.insert(Fact::new(&rel, values));
            }
            "query" => {
                let qname = cur.ident("a query name")?;
                let head = if cur.at_sym('(') { cur.list(|c| c.ident("a head variable"))? } else { Vec::new() };
                cur.sym('=')?;
                let body = parse_expr(&mut cur, &inst.schema)?;
                if inst.query(&qname).is_some() {
                    return Err(err(line, 1, format!("duplicate query `{qname}`")));
                }
                inst.queries.push(NamedQuery {
                    name: name(&qname),
                    head: head.iter().map(|h| name(h)).collect(),
                    body,
                });
                query_lines.push(line);
            }
            "target" => {
                inst.target = Some(parse_access_at(&mut cur, &inst.schema)?);
                target_line = line;
            }
            other => return Err(err(line, 1, format!("unknown declaration `{other}`"))),
        }
        cur.done()?;
    }
    if admit_query_constants {
        for q in &inst.queries {
            for c in q.body.constants() {
                inst.conf.admit(c);
            }
        }
    }
    let probe = ProblemInstance { queries: Vec::new(), target: None, ..inst.clone() };
    probe.validate().map_err(|e| err(1, 1, e.to_string()))?;
    for (q, &line) in inst.queries.iter().zip(&query_lines) {
        let single = ProblemInstance { queries: vec![q.clone()], ..probe.clone() };
        single.validate().map_err(|e| err(line, 1, e.to_string()))?;
    }
    inst.validate().map_err(|e| err(target_line.max(1), 1, e.to_string()))?;
    Ok(inst)
}

/// Constant token as written in facts and access expressions.
fn fmt_value(tok: &str) -> String {
    let ident = tok.starts_with(|c: char| c.is_alphabetic() || c == '_')
        && tok.chars().all(|c| c.is_alphanumeric() || c == '_')
        && !matches!(tok, "via" | "true" | "false");
    if ident {
        tok.to_string()
    } else {
        fmt_token(tok)
    }
}

pub fn format_access(access: &Access, schema: &Schema) -> String {
    let Some(m) = schema.method(&access.method) else { return format!("{}(?)", access.method) };
    let arity = schema.relation(&m.relation).map_or(0, |r| r.arity());
    let items: Vec<String> = (0..arity)
        .map(|p| match m.inputs.iter().position(|&i| i == p) {
            Some(k) => access.binding.get(k).map_or("?".into(), |v| fmt_value(&v.token)),
            None => "?".into(),
        })
        .collect();
    format!("{}({}) via {}", m.relation, items.join(", "), m.name)
}

pub fn format_fact(f: &Fact) -> String {
    let vals: Vec<String> = f.values.iter().map(|v| fmt_value(&v.token)).collect();
    format!("{}({})", f.relation, vals.join(", "))
}

fn print_conf(out: &mut String, conf: &Configuration) {
    for v in conf.admitted() {
        let _ = writeln!(out, "const {}:{}", fmt_value(&v.token), v.domain);
    }
    for f in conf.facts() {
        let _ = writeln!(out, "fact {}", format_fact(&f));
    }
}

/// Prints an instance so that `parse_problem` gives it back unchanged, for
/// queries without single-child nodes.
pub fn print_problem(inst: &ProblemInstance) -> String {
    let mut out = String::new();
    for d in &inst.schema.domains {
        let _ = writeln!(out, "domain {d}");
    }
    for r in &inst.schema.relations {
        let attrs: Vec<String> = r.attributes.iter().map(|a| format!("{}:{}", a.name, a.domain)).collect();
        let _ = writeln!(out, "relation {}({})", r.name, attrs.join(", "));
    }
    for m in &inst.schema.methods {
        let r = inst.schema.relation(&m.relation).expect("validated schema");
        let inputs: Vec<&str> = m.inputs.iter().map(|&p| &*r.attributes[p].name).collect();
        let mode = match m.mode {
            Mode::Dependent => "dependent",
            Mode::Independent => "independent",
        };
        let _ = writeln!(out, "access {} on {} inputs({}) {mode}", m.name, m.relation, inputs.join(", "));
    }
    print_conf(&mut out, &inst.conf);
    for q in &inst.queries {
        let head = if q.head.is_empty() { String::new() } else { format!("({})", q.head.join(", ")) };
        let _ = writeln!(out, "query {}{head} = {}", q.name, q.body);
    }
    if let Some(a) = &inst.target {
        let _ = writeln!(out, "target {}", format_access(a, &inst.schema));
    }
    out
}
