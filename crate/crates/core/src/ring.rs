//! Finite local commutative rings presented as truncated quotients of
//! `Z/p^m[x_1..x_v]`, plus truncated power series over them and
//! Weierstrass preparation/division.

use crate::linalg::{Howell, LinalgError, Mat, Modulus, Solver};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("presentation is inconsistent: 1 lies in the ideal")]
    Inconsistent,
    #[error("multiplication is not {0} on the basis")]
    BadStructure(&'static str),
    #[error("element is not a unit")]
    NotUnit,
    #[error("cannot parse polynomial `{0}`: {1}")]
    Parse(String, String),
    #[error("series is not distinguished: every coefficient lies in the maximal ideal")]
    NotDistinguished,
    #[error("truncation {t} too short for distinguished degree {n} (need at least {need})")]
    TruncationTooShort { t: usize, n: usize, need: usize },
    #[error("elements from different rings")]
    RingMismatch,
}

/// Polynomial with integer coefficients, keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Poly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, i64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: i64) -> Self {
        let mut p = Poly::zero(nvars);
        if c != 0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, 1);
        p
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            *r.terms.entry(e.clone()).or_insert(0) += c;
        }
        r.terms.retain(|_, c| *c != 0);
        r
    }

    pub fn neg(&self) -> Poly {
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *r.terms.entry(e).or_insert(0) += c1 * c2;
            }
        }
        r.terms.retain(|_, c| *c != 0);
        r
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut r = Poly::constant(self.nvars, 1);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// Parses expressions such as `t2*t3*(2+t3)` or `x^2 - 3x + 1`.
    pub fn parse(src: &str, vars: &[&str]) -> Result<Poly, RingError> {
        let toks = tokenize(src).map_err(|e| RingError::Parse(src.into(), e))?;
        let mut p = Parser { toks, pos: 0, vars, src };
        let r = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(RingError::Parse(src.into(), "trailing input".into()));
        }
        Ok(r)
    }

    pub fn format(&self, vars: &[&str]) -> String {
        let mut out = String::new();
        for (e, c) in self.terms.iter().rev() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { vars[i].to_string() } else { format!("{}^{}", vars[i], k) })
                .collect();
            match (out.is_empty(), *c < 0) {
                (true, true) => out.push('-'),
                (false, true) => out.push_str(" - "),
                (false, false) => out.push_str(" + "),
                (true, false) => {}
            }
            let a = c.abs();
            if mono.is_empty() || a != 1 {
                out.push_str(&a.to_string());
                if !mono.is_empty() {
                    out.push('*');
                }
            }
            out.push_str(&mono.join("*"));
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(i64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let mut out = vec![];
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let n: String = cs[st..i].iter().collect();
            out.push(Tok::Num(n.parse().map_err(|_| "number too large".to_string())?));
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
    src: &'a str,
}

impl Parser<'_> {
    fn err(&self, m: &str) -> RingError {
        RingError::Parse(self.src.into(), m.into())
    }
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }
    fn expr(&mut self) -> Result<Poly, RingError> {
        let n = self.vars.len();
        let mut acc = Poly::zero(n);
        let mut sign = 1;
        if self.peek() == Some(&Tok::Op('-')) {
            self.pos += 1;
            sign = -1;
        }
        loop {
            let t = self.term()?;
            acc = acc.add(&if sign < 0 { t.neg() } else { t });
            match self.peek() {
                Some(Tok::Op('+')) => sign = 1,
                Some(Tok::Op('-')) => sign = -1,
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }
    fn term(&mut self) -> Result<Poly, RingError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::Op('(')) => {
                    acc = acc.mul(&self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }
    fn factor(&mut self) -> Result<Poly, RingError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Op('^')) {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Num(k)) => {
                    self.pos += 1;
                    Ok(base.pow(k as u32))
                }
                _ => Err(self.err("expected exponent")),
            }
        } else {
            Ok(base)
        }
    }
    fn atom(&mut self) -> Result<Poly, RingError> {
        let n = self.vars.len();
        match self.peek().cloned() {
            Some(Tok::Num(k)) => {
                self.pos += 1;
                Ok(Poly::constant(n, k))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let i = self
                    .vars
                    .iter()
                    .position(|v| *v == name)
                    .ok_or_else(|| self.err(&format!("unknown variable `{name}`")))?;
                Ok(Poly::var(n, i))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::Op(')')) {
                    return Err(self.err("missing `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            _ => Err(self.err("unexpected end of input")),
        }
    }
}

/// Presentation of a truncated quotient ring, as read from JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingPresentation {
    pub modulus: Modulus,
    pub variables: Vec<String>,
    #[serde(rename = "truncationDegree")]
    pub truncation_degree: u32,
    /// Each relation maps a monomial such as `"t2*t3^2"` (or `"1"`) to its coefficient.
    pub relations: Vec<BTreeMap<String, i64>>,
}

impl RingPresentation {
    pub fn build(&self, name: &str) -> Result<Ring, RingError> {
        let vars: Vec<&str> = self.variables.iter().map(|s| s.as_str()).collect();
        let mut rels = vec![];
        for r in &self.relations {
            let mut p = Poly::zero(vars.len());
            for (mono, c) in r {
                let m = if mono.trim() == "1" { Poly::constant(vars.len(), 1) } else { Poly::parse(mono, &vars)? };
                p = p.add(&m.mul(&Poly::constant(vars.len(), *c)));
            }
            rels.push(p);
        }
        Ring::quotient(name, self.modulus, &vars, self.truncation_degree, &rels)
    }
}

/// Ring element: canonical coordinate vector in the ring's basis.
pub type Elem = Vec<u64>;

#[derive(Debug, PartialEq, Eq)]
struct RingData {
    name: String,
    md: Modulus,
    vars: Vec<String>,
    labels: Vec<String>,
    monos: Vec<Vec<u32>>,
    rel: Howell,
    // table[i][j] = e_i * e_j
    table: Vec<Vec<Elem>>,
    one: Elem,
    var_elems: Vec<Elem>,
    max_ideal: Howell,
    nilpotency: usize,
    presentation: RingPresentation,
}

/// Shared handle to a finite local ring.
#[derive(Clone, Debug)]
pub struct Ring(Arc<RingData>);

impl PartialEq for Ring {
    fn eq(&self, o: &Ring) -> bool {
        Arc::ptr_eq(&self.0, &o.0) || self.0 == o.0
    }
}
impl Eq for Ring {}

fn monomials(nvars: usize, below: u32) -> Vec<Vec<u32>> {
    // all exponent vectors of total degree < below, highest degree first
    let mut out = vec![];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    if below == 0 {
        return out;
    }
    rec(0, below - 1, &mut vec![0; nvars], &mut out);
    out.sort_by(|a, b| {
        let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
        db.cmp(&da).then_with(|| b.cmp(a))
    });
    out
}

fn mono_label(e: &[u32], vars: &[String]) -> String {
    let parts: Vec<String> = e
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(i, &k)| if k == 1 { vars[i].clone() } else { format!("{}^{}", vars[i], k) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

impl Ring {
    /// `Z/p^m[vars] / (relations + (vars)^trunc)`.
    pub fn quotient(name: &str, md: Modulus, vars: &[&str], trunc: u32, relations: &[Poly]) -> Result<Ring, RingError> {
        let nv = vars.len();
        let trunc = if nv == 0 { 1 } else { trunc.max(1) };
        let monos = monomials(nv, trunc);
        let idx: BTreeMap<Vec<u32>, usize> = monos.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let n = monos.len();
        let to_vec = |p: &Poly| -> Vec<u64> {
            let mut v = vec![0u64; n];
            for (e, c) in &p.terms {
                if let Some(&i) = idx.get(e) {
                    v[i] = md.add(v[i], md.from_i64(*c));
                }
            }
            v
        };
        let mut rows = vec![];
        for r in relations {
            assert_eq!(r.nvars, nv, "relation arity");
            for e in &monos {
                let mut m = Poly::zero(nv);
                m.terms.insert(e.clone(), 1);
                rows.push(to_vec(&r.mul(&m)));
            }
        }
        let ideal = Howell::of_rows(md, n, rows);
        let mut unit_piv = vec![false; n];
        for (j, &c) in ideal.pivots.iter().enumerate() {
            if ideal.matrix.get(j, c) == 1 {
                unit_piv[c] = true;
            }
        }
        let basis: Vec<usize> = (0..n).filter(|&c| !unit_piv[c]).collect();
        let const_col = n - 1;
        if unit_piv[const_col] {
            return Err(RingError::Inconsistent);
        }
        let bpos: BTreeMap<usize, usize> = basis.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let nb = basis.len();
        let project = |v: &[u64]| -> Elem { basis.iter().map(|&c| v[c]).collect() };
        let rel_rows: Vec<Vec<u64>> = (0..ideal.nrows())
            .filter(|&j| !unit_piv[ideal.pivots[j]])
            .map(|j| project(ideal.matrix.row(j)))
            .collect();
        let rel = Howell::of_rows(md, nb, rel_rows);
        let normal = |e: &[u32]| -> Elem {
            let mut v = vec![0u64; n];
            if let Some(&i) = idx.get(e) {
                v[i] = 1;
            }
            rel.reduce(&project(&ideal.reduce(&v)))
        };
        let bmonos: Vec<Vec<u32>> = basis.iter().map(|&c| monos[c].clone()).collect();
        let mut table = vec![vec![vec![]; nb]; nb];
        for i in 0..nb {
            for j in 0..nb {
                let e: Vec<u32> = bmonos[i].iter().zip(&bmonos[j]).map(|(a, b)| a + b).collect();
                table[i][j] = normal(&e);
            }
        }
        let one = normal(&vec![0; nv]);
        if one.iter().all(|&x| x == 0) {
            return Err(RingError::Inconsistent);
        }
        let var_elems = (0..nv)
            .map(|i| {
                let mut e = vec![0; nv];
                e[i] = 1;
                normal(&e)
            })
            .collect();
        let cpos = bpos[&const_col];
        let mut mrows: Vec<Vec<u64>> = (0..nb)
            .filter(|&i| i != cpos)
            .map(|i| {
                let mut v = vec![0; nb];
                v[i] = 1;
                v
            })
            .collect();
        let mut pv = vec![0; nb];
        pv[cpos] = md.red(md.p());
        mrows.push(pv);
        let max_ideal = rel.add_rows(mrows);
        let labels = bmonos.iter().map(|e| mono_label(e, &vars.iter().map(|s| s.to_string()).collect::<Vec<_>>())).collect();
        let data = RingData {
            name: name.into(),
            md,
            vars: vars.iter().map(|s| s.to_string()).collect(),
            labels,
            monos: bmonos,
            rel,
            table,
            one,
            var_elems,
            max_ideal,
            nilpotency: 0,
            presentation: RingPresentation {
                modulus: md,
                variables: vars.iter().map(|s| s.to_string()).collect(),
                truncation_degree: trunc,
                relations: relations
                    .iter()
                    .map(|r| {
                        r.terms
                            .iter()
                            .map(|(e, c)| (mono_label(e, &vars.iter().map(|s| s.to_string()).collect::<Vec<_>>()), *c))
                            .collect()
                    })
                    .collect(),
            },
        };
        let ring = Ring(Arc::new(data));
        ring.check_axioms()?;
        let nil = ring.compute_nilpotency();
        let mut data = Arc::try_unwrap(ring.0).expect("fresh handle");
        data.nilpotency = nil;
        Ok(Ring(Arc::new(data)))
    }

    /// `Z/p^m`.
    pub fn zq(p: u64, m: u32) -> Result<Ring, RingError> {
        let md = Modulus::new(p, m)?;
        let name = if m == 1 { format!("F{p}") } else { format!("Z/{}", md.q()) };
        Ring::quotient(&name, md, &[], 1, &[])
    }

    /// `Z/p^m[x]/(x^n)`.
    pub fn truncated_poly(p: u64, m: u32, var: &str, n: u32) -> Result<Ring, RingError> {
        let md = Modulus::new(p, m)?;
        let base = if m == 1 { format!("F{p}") } else { format!("Z/{}", md.q()) };
        Ring::quotient(&format!("{base}[{var}]/({var}^{n})"), md, &[var], n, &[])
    }

    /// `F_p[eps]/(eps^2)`.
    pub fn dual_numbers(p: u64) -> Result<Ring, RingError> {
        Ring::truncated_poly(p, 1, "eps", 2)
    }

    /// The fixed suite of small test rings in residue characteristic 2.
    pub fn default_test_rings() -> Vec<Ring> {
        let z4 = Modulus::new(2, 2).unwrap();
        let vars = ["u"];
        let r = |s: &str| Poly::parse(s, &vars).unwrap();
        vec![
            Ring::zq(2, 1).unwrap(),
            Ring::dual_numbers(2).unwrap(),
            Ring::zq(2, 2).unwrap(),
            Ring::truncated_poly(2, 1, "u", 3).unwrap(),
            Ring::quotient("Z/4[u]/(u^2,2u)", z4, &vars, 2, &[r("2*u")]).unwrap(),
        ]
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }
    pub fn md(&self) -> Modulus {
        self.0.md
    }
    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.0.labels.len()
    }
    /// Exponent vectors of the basis monomials.
    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.0.monos
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }
    pub fn vars(&self) -> &[String] {
        &self.0.vars
    }
    pub fn rel(&self) -> &Howell {
        &self.0.rel
    }
    pub fn presentation(&self) -> &RingPresentation {
        &self.0.presentation
    }
    pub fn max_ideal(&self) -> &Howell {
        &self.0.max_ideal
    }
    pub fn nilpotency(&self) -> usize {
        self.0.nilpotency
    }
    /// `log_p |A|`.
    pub fn length(&self) -> u32 {
        self.md().m() * self.dim() as u32 - self.0.rel.log_size()
    }
    pub fn size(&self) -> u64 {
        self.md().p().pow(self.length())
    }

    pub fn zero(&self) -> Elem {
        vec![0; self.dim()]
    }
    pub fn one(&self) -> Elem {
        self.0.one.clone()
    }
    pub fn var(&self, i: usize) -> Elem {
        self.0.var_elems[i].clone()
    }
    pub fn from_int(&self, c: i64) -> Elem {
        let md = self.md();
        let k = md.from_i64(c);
        self.canon(self.0.one.iter().map(|&x| md.mul(x, k)).collect())
    }

    pub fn canon(&self, v: Elem) -> Elem {
        self.0.rel.reduce(&v)
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Elem {
        let md = self.md();
        self.canon(a.iter().zip(b).map(|(&x, &y)| md.add(x, y)).collect())
    }
    pub fn sub(&self, a: &[u64], b: &[u64]) -> Elem {
        let md = self.md();
        self.canon(a.iter().zip(b).map(|(&x, &y)| md.sub(x, y)).collect())
    }
    pub fn neg(&self, a: &[u64]) -> Elem {
        let md = self.md();
        self.canon(a.iter().map(|&x| md.neg(x)).collect())
    }
    pub fn scale(&self, a: &[u64], k: u64) -> Elem {
        let md = self.md();
        self.canon(a.iter().map(|&x| md.mul(x, k)).collect())
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Elem {
        let md = self.md();
        let n = self.dim();
        let mut out = vec![0u64; n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                let xy = md.mul(x, y);
                for (o, &t) in out.iter_mut().zip(&self.0.table[i][j]) {
                    if t != 0 {
                        *o = md.red(*o + xy * t);
                    }
                }
            }
        }
        self.canon(out)
    }

    pub fn pow(&self, a: &[u64], e: u64) -> Elem {
        let mut r = self.one();
        for _ in 0..e {
            r = self.mul(&r, a);
        }
        r
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&x| x == 0)
    }

    /// Image in the residue field `Z/p`.
    pub fn residue(&self, a: &[u64]) -> u64 {
        let c = self.0.monos.iter().position(|e| e.iter().all(|&k| k == 0)).expect("constant");
        a[c] % self.md().p()
    }

    pub fn is_unit(&self, a: &[u64]) -> bool {
        self.residue(a) != 0
    }

    pub fn in_max_ideal(&self, a: &[u64]) -> bool {
        self.0.max_ideal.contains(a)
    }

    /// Matrix of `x -> x * a` on coordinates.
    pub fn reg(&self, a: &[u64]) -> Mat {
        let n = self.dim();
        let mut m = Mat::zeros(self.md(), n, n);
        for k in 0..n {
            let mut e = vec![0; n];
            e[k] = 1;
            let r = self.mul(&e, a);
            for j in 0..n {
                m.set(k, j, r[j]);
            }
        }
        m
    }

    pub fn inv(&self, a: &[u64]) -> Result<Elem, RingError> {
        if !self.is_unit(a) {
            return Err(RingError::NotUnit);
        }
        let n = self.dim();
        let m = self.reg(a).vstack(&self.0.rel.matrix);
        let x = Solver::new(&m).solve(&self.0.one)?.ok_or(RingError::NotUnit)?;
        Ok(self.canon(x[..n].to_vec()))
    }

    /// Solves `x * a = b` if possible.
    pub fn divide(&self, b: &[u64], a: &[u64]) -> Option<Elem> {
        let n = self.dim();
        let m = self.reg(a).vstack(&self.0.rel.matrix);
        let x = Solver::new(&m).solve(b).ok()??;
        Some(self.canon(x[..n].to_vec()))
    }

    /// Evaluates an integer polynomial at the given elements.
    pub fn eval(&self, p: &Poly, vals: &[Elem]) -> Elem {
        assert_eq!(p.nvars, vals.len());
        let mut acc = self.zero();
        for (e, c) in &p.terms {
            let mut t = self.from_int(*c);
            for (v, &k) in vals.iter().zip(e) {
                for _ in 0..k {
                    t = self.mul(&t, v);
                }
            }
            acc = self.add(&acc, &t);
        }
        acc
    }

    /// All elements, in a deterministic order. Small rings only.
    pub fn elements(&self) -> Vec<Elem> {
        let md = self.md();
        let n = self.dim();
        let mut set: BTreeSet<Elem> = BTreeSet::new();
        set.insert(self.zero());
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 1;
            let mut next = set.clone();
            for v in &set {
                let mut w = v.clone();
                for _ in 1..md.q() {
                    w[i] = md.add(w[i], 1);
                    next.insert(self.canon(w.clone()));
                }
            }
            set = next;
        }
        set.into_iter().collect()
    }

    pub fn max_ideal_elements(&self) -> Vec<Elem> {
        self.elements().into_iter().filter(|a| !self.is_unit(a)).collect()
    }

    pub fn units(&self) -> Vec<Elem> {
        self.elements().into_iter().filter(|a| self.is_unit(a)).collect()
    }

    pub fn fmt_elem(&self, a: &[u64]) -> String {
        let md = self.md();
        let mut parts = vec![];
        for (i, &c) in a.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let s = md.signed(c);
            let lab = &self.0.labels[i];
            let body = if lab == "1" {
                s.abs().to_string()
            } else if s.abs() == 1 {
                lab.clone()
            } else {
                format!("{}{}", s.abs(), lab)
            };
            parts.push((s < 0, body));
        }
        if parts.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (negative, body)) in parts.iter().rev().enumerate() {
            match (k, negative) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            out.push_str(body);
        }
        out
    }

    /// Span of products of `k` elements of the maximal ideal.
    pub fn max_ideal_power(&self, k: usize) -> Howell {
        let n = self.dim();
        let mut cur = Howell::full(self.md(), n);
        let gens = self.0.max_ideal.rows();
        for _ in 0..k {
            let mut rows = vec![];
            for a in cur.rows() {
                for g in &gens {
                    rows.push(self.mul(&a, g));
                }
            }
            cur = self.0.rel.add_rows(rows);
        }
        cur
    }

    fn compute_nilpotency(&self) -> usize {
        let mut k = 1;
        loop {
            if self.0.rel.contains_span(&self.max_ideal_power(k)) {
                return k;
            }
            k += 1;
        }
    }

    fn check_axioms(&self) -> Result<(), RingError> {
        let n = self.dim();
        let basis: Vec<Elem> = (0..n)
            .map(|i| {
                let mut e = vec![0; n];
                e[i] = 1;
                e
            })
            .collect();
        for a in &basis {
            if self.mul(a, &self.0.one) != self.canon(a.clone()) {
                return Err(RingError::BadStructure("unital"));
            }
            for b in &basis {
                let ab = self.mul(a, b);
                if ab != self.mul(b, a) {
                    return Err(RingError::BadStructure("commutative"));
                }
                for c in &basis {
                    if self.mul(&ab, c) != self.mul(a, &self.mul(b, c)) {
                        return Err(RingError::BadStructure("associative"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.name)
    }
}

/// Matrix with entries in a finite local ring, row convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AMat {
    pub ring: Ring,
    pub rows: usize,
    pub cols: usize,
    pub e: Vec<Elem>,
}

impl AMat {
    pub fn zeros(ring: &Ring, rows: usize, cols: usize) -> Self {
        AMat { ring: ring.clone(), rows, cols, e: vec![ring.zero(); rows * cols] }
    }
    pub fn identity(ring: &Ring, n: usize) -> Self {
        let mut m = AMat::zeros(ring, n, n);
        for i in 0..n {
            m.e[i * n + i] = ring.one();
        }
        m
    }
    /// Builds from integer entries.
    pub fn from_ints(ring: &Ring, rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let e = rows.iter().flat_map(|r| r.iter().map(|&c| ring.from_int(c))).collect();
        AMat { ring: ring.clone(), rows: rows.len(), cols, e }
    }
    pub fn from_elems(ring: &Ring, rows: usize, cols: usize, e: Vec<Elem>) -> Self {
        assert_eq!(e.len(), rows * cols);
        AMat { ring: ring.clone(), rows, cols, e }
    }
    pub fn get(&self, i: usize, j: usize) -> &Elem {
        &self.e[i * self.cols + j]
    }
    pub fn set(&mut self, i: usize, j: usize, x: Elem) {
        self.e[i * self.cols + j] = x;
    }
    pub fn mul(&self, o: &AMat) -> AMat {
        assert_eq!(self.cols, o.rows);
        let r = &self.ring;
        let mut out = AMat::zeros(r, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if r.is_zero(a) {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if r.is_zero(b) {
                        continue;
                    }
                    let v = r.add(out.get(i, j), &r.mul(a, b));
                    out.set(i, j, v);
                }
            }
        }
        out
    }
    pub fn add(&self, o: &AMat) -> AMat {
        let r = &self.ring;
        AMat { ring: r.clone(), rows: self.rows, cols: self.cols, e: self.e.iter().zip(&o.e).map(|(a, b)| r.add(a, b)).collect() }
    }
    pub fn sub(&self, o: &AMat) -> AMat {
        let r = &self.ring;
        AMat { ring: r.clone(), rows: self.rows, cols: self.cols, e: self.e.iter().zip(&o.e).map(|(a, b)| r.sub(a, b)).collect() }
    }
    pub fn scale(&self, s: &[u64]) -> AMat {
        let r = &self.ring;
        AMat { ring: r.clone(), rows: self.rows, cols: self.cols, e: self.e.iter().map(|a| r.mul(a, s)).collect() }
    }
    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|a| self.ring.is_zero(a))
    }
    pub fn transpose(&self) -> AMat {
        let mut t = AMat::zeros(&self.ring, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }
    pub fn pow(&self, k: u64) -> AMat {
        let mut r = AMat::identity(&self.ring, self.rows);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }
    /// Reduction modulo the maximal ideal, as a matrix over `Z/p`.
    pub fn residue(&self) -> Mat {
        let md = Modulus::new(self.ring.md().p(), 1).unwrap();
        let d: Vec<Vec<u64>> =
            (0..self.rows).map(|i| (0..self.cols).map(|j| self.ring.residue(self.get(i, j))).collect()).collect();
        Mat::from_rows(md, self.cols, &d)
    }
    /// `Z/q`-linear map on coordinate vectors: block `(i, j)` is the regular
    /// representation of entry `(i, j)`.
    pub fn to_zq(&self) -> Mat {
        let n = self.ring.dim();
        let mut m = Mat::zeros(self.ring.md(), self.rows * n, self.cols * n);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if !self.ring.is_zero(a) {
                    m.put_block(i * n, j * n, &self.ring.reg(a));
                }
            }
        }
        m
    }
    pub fn fmt_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.ring.fmt_elem(self.get(i, j))).collect()).collect()
    }
}

impl fmt::Display for AMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.fmt_rows() {
            writeln!(f, "[{}]", r.join(", "))?;
        }
        Ok(())
    }
}

/// Element of `A[[x]] / (x^T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    pub ring: Ring,
    pub c: Vec<Elem>,
}

impl Series {
    pub fn zero(ring: &Ring, t: usize) -> Self {
        Series { ring: ring.clone(), c: vec![ring.zero(); t] }
    }
    pub fn one(ring: &Ring, t: usize) -> Self {
        let mut s = Series::zero(ring, t);
        if t > 0 {
            s.c[0] = ring.one();
        }
        s
    }
    pub fn monomial(ring: &Ring, t: usize, k: usize) -> Self {
        let mut s = Series::zero(ring, t);
        if k < t {
            s.c[k] = ring.one();
        }
        s
    }
    /// From integer coefficients, low degree first.
    pub fn from_ints(ring: &Ring, t: usize, cs: &[i64]) -> Self {
        let mut s = Series::zero(ring, t);
        for (i, &c) in cs.iter().enumerate().take(t) {
            s.c[i] = ring.from_int(c);
        }
        s
    }
    pub fn from_elems(ring: &Ring, t: usize, cs: &[Elem]) -> Self {
        let mut s = Series::zero(ring, t);
        for (i, c) in cs.iter().enumerate().take(t) {
            s.c[i] = ring.canon(c.clone());
        }
        s
    }
    pub fn trunc(&self) -> usize {
        self.c.len()
    }
    pub fn add(&self, o: &Series) -> Series {
        let r = &self.ring;
        Series { ring: r.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| r.add(a, b)).collect() }
    }
    pub fn sub(&self, o: &Series) -> Series {
        let r = &self.ring;
        Series { ring: r.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| r.sub(a, b)).collect() }
    }
    pub fn mul(&self, o: &Series) -> Series {
        let r = &self.ring;
        let t = self.trunc().min(o.trunc());
        let mut out = Series::zero(r, t);
        for i in 0..t {
            if r.is_zero(&self.c[i]) {
                continue;
            }
            for j in 0..t - i {
                if r.is_zero(&o.c[j]) {
                    continue;
                }
                out.c[i + j] = r.add(&out.c[i + j], &r.mul(&self.c[i], &o.c[j]));
            }
        }
        out
    }
    /// Truncates or pads to `t` coefficients.
    pub fn with_trunc(&self, t: usize) -> Series {
        let mut c = self.c.clone();
        c.resize(t, self.ring.zero());
        Series { ring: self.ring.clone(), c }
    }
    pub fn inv(&self) -> Result<Series, RingError> {
        let r = &self.ring;
        let t = self.trunc();
        let c0inv = r.inv(&self.c[0])?;
        let mut out = Series::zero(r, t);
        out.c[0] = c0inv.clone();
        for k in 1..t {
            let mut acc = r.zero();
            for i in 1..=k {
                acc = r.add(&acc, &r.mul(&self.c[i], &out.c[k - i]));
            }
            out.c[k] = r.neg(&r.mul(&acc, &c0inv));
        }
        Ok(out)
    }
    /// Lowest degree with a unit coefficient.
    pub fn distinguished_degree(&self) -> Option<usize> {
        self.c.iter().position(|a| self.ring.is_unit(a))
    }
    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|a| self.ring.is_zero(a))
    }
    /// Degree of the last nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.c.iter().rposition(|a| !self.ring.is_zero(a))
    }
    pub fn fmt(&self) -> String {
        let mut parts = vec![];
        for (i, a) in self.c.iter().enumerate() {
            if self.ring.is_zero(a) {
                continue;
            }
            let s = self.ring.fmt_elem(a);
            let s = if s.contains(' ') { format!("({s})") } else { s };
            parts.push(match i {
                0 => s,
                1 if s == "1" => "x".into(),
                1 => format!("{s}*x"),
                _ if s == "1" => format!("x^{i}"),
                _ => format!("{s}*x^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// `f = h * u` with `h` monic of degree `n`, lower coefficients in `m_A`, `u` a unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weierstrass {
    pub n: usize,
    /// Coefficients `h_0..h_n`, with `h_n = 1`.
    pub h: Series,
    /// Unit factor, given to the precision that `f mod x^T` determines.
    pub u: Series,
}

fn check_distinguished(f: &Series) -> Result<usize, RingError> {
    let n = f.distinguished_degree().ok_or(RingError::NotDistinguished)?;
    let t = f.trunc();
    let need = n * (f.ring.nilpotency() + 1);
    if n > 0 && t < need.max(n + 1) {
        return Err(RingError::TruncationTooShort { t, n, need });
    }
    Ok(n)
}

/// Division `g = q f + r` with `deg r < n`, exact modulo `x^T`.
pub fn weierstrass_divide(g: &Series, f: &Series) -> Result<(Series, Series), RingError> {
    if g.ring != f.ring {
        return Err(RingError::RingMismatch);
    }
    let n = check_distinguished(f)?;
    let r = &f.ring;
    let t = f.trunc().min(g.trunc());
    let f = f.with_trunc(t);
    // f = low + x^n * hi
    let mut hi = Series::zero(r, t);
    for i in n..t {
        hi.c[i - n] = f.c[i].clone();
    }
    let hi_inv = hi.inv()?;
    let mut low = Series::zero(r, t);
    low.c[..n].clone_from_slice(&f.c[..n]);
    let mut rem = g.with_trunc(t);
    let mut quot = Series::zero(r, t);
    // each round moves the high part one step down the m_A-adic filtration
    for _ in 0..=r.nilpotency() + 1 {
        let mut alpha = Series::zero(r, t);
        for i in n..t {
            alpha.c[i - n] = rem.c[i].clone();
        }
        if alpha.is_zero() {
            break;
        }
        let qk = alpha.mul(&hi_inv);
        quot = quot.add(&qk);
        let mut next = qk.mul(&low);
        for i in 0..n {
            next.c[i] = r.sub(&rem.c[i], &next.c[i]);
        }
        for i in n..t {
            next.c[i] = r.neg(&next.c[i]);
        }
        rem = next;
    }
    debug_assert!(rem.c[n.min(t)..].iter().all(|a| r.is_zero(a)));
    Ok((quot, rem))
}

/// Weierstrass preparation of a distinguished truncated series.
pub fn weierstrass(f: &Series) -> Result<Weierstrass, RingError> {
    let n = check_distinguished(f)?;
    let r = &f.ring;
    let t = f.trunc();
    if n == 0 {
        return Ok(Weierstrass { n, h: Series::one(r, 1), u: f.clone() });
    }
    let xn = Series::monomial(r, t, n);
    let (q, rem) = weierstrass_divide(&xn, f)?;
    let mut h = xn.sub(&rem);
    h.c.truncate(n + 1);
    let u = q.inv()?;
    let prec = t - n * r.nilpotency();
    Ok(Weierstrass { n, h, u: u.with_trunc(prec) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zq_basics() {
        let z4 = Ring::zq(2, 2).unwrap();
        assert_eq!(z4.dim(), 1);
        let units: Vec<Elem> = z4.units();
        assert_eq!(units, vec![vec![1], vec![3]]);
        assert_eq!(z4.inv(&[3]).unwrap(), vec![3]);
        assert_eq!(z4.inv(&[1]).unwrap(), vec![1]);
        assert_eq!(z4.nilpotency(), 2);
    }

    #[test]
    fn truncated_u_cubed() {
        let r = Ring::truncated_poly(2, 1, "u", 3).unwrap();
        assert_eq!(r.dim(), 3);
        assert_eq!(r.nilpotency(), 3);
        assert!(!r.is_unit(&r.var(0)));
        assert_eq!(r.elements().len(), 8);
    }

    #[test]
    fn torsion_relation_survives() {
        let md = Modulus::new(2, 2).unwrap();
        let r = Ring::quotient("t", md, &["u"], 2, &[Poly::parse("2*u", &["u"]).unwrap()]).unwrap();
        assert_eq!(r.size(), 8);
        let u = r.var(0);
        assert!(r.is_zero(&r.scale(&u, 2)));
        assert!(r.is_zero(&r.mul(&u, &u)));
        assert_eq!(r.nilpotency(), 2);
    }

    #[test]
    fn inconsistent_presentation() {
        let md = Modulus::new(2, 1).unwrap();
        let e = Ring::quotient("x", md, &["x"], 4, &[Poly::parse("1+x", &["x"]).unwrap()]);
        assert_eq!(e, Err(RingError::Inconsistent));
    }

    #[test]
    fn parse_roundtrip() {
        let v = ["t2", "t3"];
        let p = Poly::parse("t2*t3*(2+t3)", &v).unwrap();
        let q = Poly::parse("2t2 t3 + t2*t3^2", &v).unwrap();
        assert_eq!(p, q);
        assert!(Poly::parse("t4", &v).is_err());
    }

    #[test]
    fn preparation_of_product() {
        let z4 = Ring::zq(2, 2).unwrap();
        let h = Series::from_ints(&z4, 8, &[2, 2, 1]);
        let u = Series::from_ints(&z4, 8, &[1, 1]);
        let f = h.mul(&u);
        let w = weierstrass(&f).unwrap();
        assert_eq!(w.n, 2);
        assert_eq!(w.h, Series::from_ints(&z4, 3, &[2, 2, 1]));
        assert_eq!(w.u, Series::from_ints(&z4, w.u.trunc(), &[1, 1]));
    }

    #[test]
    fn already_distinguished_and_unit() {
        let z4 = Ring::zq(2, 2).unwrap();
        let f = Series::from_ints(&z4, 8, &[2, 2, 1]);
        let w = weierstrass(&f).unwrap();
        assert_eq!(w.h, Series::from_ints(&z4, 3, &[2, 2, 1]));
        assert_eq!(w.u, Series::one(&z4, w.u.trunc()));
        let g = Series::from_ints(&z4, 8, &[3, 2, 1]);
        let w = weierstrass(&g).unwrap();
        assert_eq!(w.n, 0);
        assert_eq!(w.u, g);
    }

    #[test]
    fn non_distinguished_rejected() {
        let z4 = Ring::zq(2, 2).unwrap();
        let f = Series::from_ints(&z4, 6, &[2, 0, 2]);
        assert_eq!(weierstrass(&f), Err(RingError::NotDistinguished));
    }

    #[test]
    fn divide_trivial_cases() {
        let z4 = Ring::zq(2, 2).unwrap();
        let f = Series::from_ints(&z4, 8, &[2, 2, 1]);
        let (q, r) = weierstrass_divide(&f, &f).unwrap();
        assert_eq!(q, Series::one(&z4, 8));
        assert!(r.is_zero());
        let (q, r) = weierstrass_divide(&Series::zero(&z4, 8), &f).unwrap();
        assert!(q.is_zero() && r.is_zero());
    }
}
