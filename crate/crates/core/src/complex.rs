//! Modules with group action, complexes, cohomology, cones and
//! quasi-isomorphism certificates.
//!
//! Two representations coexist. [`GComplex`] has `A`-free terms with
//! matrices over `A`. [`FComplex`] is the workhorse: every term is a finite
//! `Z/q`-module `S/R` cut out of some `(Z/q)^n`, with a list of operators
//! (multiplication by a `Z/q`-basis of `A`, then the group generators) and
//! maps given by ambient matrices. Anything finite fits the second form,
//! which is what the perfection pipeline needs.

use crate::group::GroupModel;
use crate::linalg::{quotient_structure, Howell, LinalgError, Mat, Modulus, Solver};
use crate::ring::{AMat, Elem, Ring, RingPresentation};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("d d is not zero starting in degree {0}")]
    NotComplex(i32),
    #[error("differential in degree {0} is not equivariant for generator {1}")]
    NotEquivariant(i32, String),
    #[error("action in degree {0}: {1}")]
    BadAction(i32, String),
    #[error("map does not commute with differentials in degree {0}")]
    NotChainMap(i32),
    #[error("map in degree {0} does not respect the module structure")]
    NotHom(i32),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("module is not free over the coefficient ring")]
    NotFree,
}

/// Finite module `S/R` inside `(Z/q)^dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FMod {
    pub md: Modulus,
    pub dim: usize,
    pub sub: Howell,
    pub rel: Howell,
    /// `dim x dim` operators preserving `sub` and `rel`.
    pub ops: Vec<Mat>,
    /// The first `n_ring_ops` operators are multiplications by the
    /// `Z/q`-basis of the coefficient ring.
    pub n_ring_ops: usize,
}

fn unit_rows(n: usize) -> Vec<Vec<u64>> {
    (0..n)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = 1;
            v
        })
        .collect()
}

/// Multiplication by each `Z/q`-basis element of `A`, block-diagonally on `A^rank`.
pub fn ring_ops(ring: &Ring, rank: usize) -> Vec<Mat> {
    let n = ring.dim();
    unit_rows(n)
        .into_iter()
        .map(|e| {
            let r = ring.reg(&ring.canon(e));
            let mut m = Mat::zeros(ring.md(), rank * n, rank * n);
            for k in 0..rank {
                m.put_block(k * n, k * n, &r);
            }
            m
        })
        .collect()
}

/// Relations of `A^rank` in coordinates.
pub fn free_rel(ring: &Ring, rank: usize) -> Howell {
    let n = ring.dim();
    let mut rows = vec![];
    for k in 0..rank {
        for r in ring.rel().rows() {
            let mut v = vec![0; rank * n];
            v[k * n..(k + 1) * n].copy_from_slice(&r);
            rows.push(v);
        }
    }
    Howell::of_rows(ring.md(), rank * n, rows)
}

impl FMod {
    pub fn zero(md: Modulus, nops: usize, n_ring_ops: usize) -> FMod {
        FMod {
            md,
            dim: 0,
            sub: Howell::zero(md, 0),
            rel: Howell::zero(md, 0),
            ops: vec![Mat::zeros(md, 0, 0); nops],
            n_ring_ops,
        }
    }

    /// `A^rank` with the given group actions (row convention).
    pub fn free(ring: &Ring, rank: usize, actions: &[AMat]) -> FMod {
        let dim = rank * ring.dim();
        let mut ops = ring_ops(ring, rank);
        let n_ring_ops = ops.len();
        ops.extend(actions.iter().map(|a| a.to_zq()));
        FMod { md: ring.md(), dim, sub: Howell::full(ring.md(), dim), rel: free_rel(ring, rank), ops, n_ring_ops }
    }

    pub fn log_size(&self) -> u32 {
        self.sub.log_size() - self.rel.log_size()
    }

    pub fn is_zero(&self) -> bool {
        self.log_size() == 0
    }

    pub fn n_group_ops(&self) -> usize {
        self.ops.len() - self.n_ring_ops
    }

    pub fn group_ops(&self) -> &[Mat] {
        &self.ops[self.n_ring_ops..]
    }

    /// Smallest span containing `rows` and `rel`, closed under all operators.
    pub fn closure(&self, rows: Vec<Vec<u64>>) -> Howell {
        close_under(&self.rel, rows, &self.ops)
    }

    /// `m_A M + R` for the maximal ideal of `ring`.
    pub fn max_ideal_times(&self, ring: &Ring) -> Howell {
        let mut rows = vec![];
        let gens = ring.max_ideal().rows();
        let srows = self.sub.rows();
        for g in &gens {
            let op = scalar_op(ring, g, self.dim);
            for s in &srows {
                rows.push(op.apply(s));
            }
        }
        self.rel.add_rows(rows)
    }

    /// `dim_k M / m M`.
    pub fn min_generators(&self, ring: &Ring) -> u32 {
        self.sub.log_size() - self.max_ideal_times(ring).log_size()
    }

    pub fn is_a_free(&self, ring: &Ring) -> bool {
        self.log_size() == self.min_generators(ring) * ring.length()
    }

    /// Elements of `sub` whose classes form an `A`-basis, if `M` is `A`-free.
    pub fn a_basis(&self, ring: &Ring) -> Option<Vec<Vec<u64>>> {
        if !self.is_a_free(ring) {
            return None;
        }
        let mm = self.max_ideal_times(ring);
        let mut chosen: Vec<Vec<u64>> = vec![];
        let mut span = mm;
        let target = self.sub.log_size();
        for s in self.sub.rows() {
            if span.log_size() == target {
                break;
            }
            if !span.contains(&s) {
                span = span.add_rows(vec![s.clone()]);
                chosen.push(s);
            }
        }
        // p M lies in mM, so each accepted row adds exactly one dimension
        let r = self.min_generators(ring) as usize;
        (chosen.len() == r).then_some(chosen)
    }

    pub fn quotient(&self, extra: &Howell) -> FMod {
        FMod { rel: self.rel.sum(extra), ..self.clone() }
    }

    pub fn submodule(&self, sub: Howell) -> FMod {
        FMod { sub: sub.sum(&self.rel), ..self.clone() }
    }

    /// Checks that the operators preserve `sub` and `rel`.
    pub fn validate(&self) -> bool {
        self.rel.ncols() == self.dim
            && self.sub.contains_span(&self.rel)
            && self.ops.iter().all(|op| {
                self.sub.contains_span(&self.sub.image_under(op)) && self.rel.contains_span(&self.rel.image_under(op))
            })
    }
}

/// Operator `x -> x * a` on `A^k` in coordinates (`dim = k * dim A`).
pub fn scalar_op(ring: &Ring, a: &[u64], dim: usize) -> Mat {
    let n = ring.dim();
    let r = ring.reg(a);
    let mut m = Mat::zeros(ring.md(), dim, dim);
    for k in 0..dim / n {
        m.put_block(k * n, k * n, &r);
    }
    m
}

/// Closes `base + span(rows)` under the operators.
pub fn close_under(base: &Howell, rows: Vec<Vec<u64>>, ops: &[Mat]) -> Howell {
    let mut cur = base.add_rows(rows);
    loop {
        let mut extra = vec![];
        for r in cur.rows() {
            for op in ops {
                let v = op.apply(&r);
                if !cur.contains(&v) {
                    extra.push(v);
                }
            }
        }
        if extra.is_empty() {
            return cur;
        }
        cur = cur.add_rows(extra);
    }
}

/// Bounded complex of finite modules; `diffs[k]` maps `terms[k]` to `terms[k+1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FComplex {
    pub md: Modulus,
    pub lo: i32,
    pub terms: Vec<FMod>,
    pub diffs: Vec<Mat>,
    pub nops: usize,
    pub n_ring_ops: usize,
}

impl FComplex {
    pub fn zero(md: Modulus, nops: usize, n_ring_ops: usize) -> FComplex {
        FComplex { md, lo: 0, terms: vec![], diffs: vec![], nops, n_ring_ops }
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.terms.len() as i32 - 1
    }

    pub fn term(&self, i: i32) -> FMod {
        if i < self.lo || i > self.hi() {
            FMod::zero(self.md, self.nops, self.n_ring_ops)
        } else {
            self.terms[(i - self.lo) as usize].clone()
        }
    }

    pub fn term_ref(&self, i: i32) -> Option<&FMod> {
        if i < self.lo || i > self.hi() {
            None
        } else {
            Some(&self.terms[(i - self.lo) as usize])
        }
    }

    pub fn dim(&self, i: i32) -> usize {
        self.term_ref(i).map_or(0, |t| t.dim)
    }

    /// `d^i : C^i -> C^{i+1}`.
    pub fn diff(&self, i: i32) -> Mat {
        if i >= self.lo && i < self.hi() {
            self.diffs[(i - self.lo) as usize].clone()
        } else {
            Mat::zeros(self.md, self.dim(i), self.dim(i + 1))
        }
    }

    pub fn sub(&self, i: i32) -> Howell {
        self.term_ref(i).map_or(Howell::zero(self.md, 0), |t| t.sub.clone())
    }

    pub fn rel(&self, i: i32) -> Howell {
        self.term_ref(i).map_or(Howell::zero(self.md, 0), |t| t.rel.clone())
    }

    pub fn validate(&self) -> Result<(), ComplexError> {
        for i in self.lo..=self.hi() {
            let t = self.term(i);
            if !t.validate() {
                return Err(ComplexError::BadAction(i, "operators do not preserve the term".into()));
            }
            let d = self.diff(i);
            let (tn, tn1) = (self.term(i + 1), self.term(i + 2));
            if !is_hom(&t, &tn, &d) {
                return Err(ComplexError::NotHom(i));
            }
            let dd = d.mul(&self.diff(i + 1));
            if t.sub.rows().iter().any(|s| !tn1.rel.contains(&dd.apply(s))) {
                return Err(ComplexError::NotComplex(i));
            }
            for (k, (a, b)) in t.ops.iter().zip(&tn.ops).enumerate() {
                let lhs = a.mul(&d);
                let rhs = d.mul(b);
                if t.sub.rows().iter().any(|s| !tn.rel.contains(&lhs.sub(&rhs).apply(s))) {
                    return Err(ComplexError::NotEquivariant(i, format!("op {k}")));
                }
            }
        }
        Ok(())
    }

    /// `Z^i` (contains `R^i`).
    pub fn cycles(&self, i: i32) -> Howell {
        let t = match self.term_ref(i) {
            Some(t) => t,
            None => return Howell::zero(self.md, 0),
        };
        preimage(&t.sub, &self.diff(i), &self.rel(i + 1)).sum(&t.rel)
    }

    /// `B^i + R^i`.
    pub fn boundaries(&self, i: i32) -> Howell {
        let rel = self.rel(i);
        let s = self.sub(i - 1);
        if s.is_zero() {
            return rel;
        }
        s.image_under(&self.diff(i - 1)).sum(&rel)
    }

    pub fn cohomology_group(&self, i: i32) -> HGroup {
        HGroup::new(&self.cycles(i), &self.boundaries(i), self.term_ref(i).map(|t| t.ops.as_slice()).unwrap_or(&[]))
    }

    pub fn is_acyclic(&self) -> bool {
        (self.lo..=self.hi()).all(|i| self.cycles(i) == self.boundaries(i))
    }

    /// `C[n]`: `(C[n])^i = C^{i+n}` with differential `(-1)^n d`.
    pub fn shift(&self, n: i32) -> FComplex {
        let sign = if n % 2 == 0 { 1 } else { self.md.q() - 1 };
        FComplex { lo: self.lo - n, diffs: self.diffs.iter().map(|d| d.scale(sign)).collect(), ..self.clone() }
    }

    /// Restricts to degrees `[lo, hi]` by dropping terms (no quotienting).
    pub fn window(&self, lo: i32, hi: i32) -> FComplex {
        let terms: Vec<FMod> = (lo..=hi).map(|i| self.term(i)).collect();
        let diffs: Vec<Mat> = (lo..hi).map(|i| self.diff(i)).collect();
        FComplex { lo, terms, diffs, ..self.clone() }
    }

    /// Replaces `C^n` by `C^n / B^n` and drops everything below `n`.
    pub fn truncate_below(&self, n: i32) -> FComplex {
        let mut c = self.window(n, self.hi().max(n));
        let b = self.boundaries(n);
        c.terms[0] = c.terms[0].quotient(&b);
        c
    }

    /// Total `log_p` size of all terms.
    pub fn log_size(&self) -> u32 {
        self.terms.iter().map(|t| t.log_size()).sum()
    }
}

/// `{x in S : x * f in T}` for a span `S`.
pub fn preimage(s: &Howell, f: &Mat, t: &Howell) -> Howell {
    let md = f.md;
    if s.is_zero() {
        return s.clone();
    }
    let sf = s.matrix.mul(f);
    let k = s.nrows();
    let stacked = if t.is_zero() { sf.clone() } else { sf.vstack(&t.matrix) };
    let ker = crate::linalg::kernel(&stacked);
    let rows: Vec<Vec<u64>> = ker.rows().into_iter().map(|r| s.matrix.apply(&r[..k])).collect();
    Howell::of_rows(md, s.ncols(), rows)
}

/// Whether an ambient matrix induces an operator-compatible map `X -> Y`.
pub fn is_hom(x: &FMod, y: &FMod, f: &Mat) -> bool {
    if f.rows != x.dim || f.cols != y.dim {
        return false;
    }
    if x.dim == 0 {
        return true;
    }
    if !y.sub.contains_span(&x.sub.image_under(f)) || !y.rel.contains_span(&x.rel.image_under(f)) {
        return false;
    }
    x.ops.iter().zip(&y.ops).all(|(a, b)| {
        let diff = a.mul(f).sub(&f.mul(b));
        x.sub.rows().iter().all(|s| y.rel.contains(&diff.apply(s)))
    })
}

/// A finite abelian group `Z/B` with generator classes and induced operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HGroup {
    /// Orders of the cyclic factors, trivial ones omitted.
    pub invariants: Vec<u64>,
    pub log_size: u32,
    /// Generators of `Z` (ambient vectors).
    pub gens: Vec<Vec<u64>>,
    /// For each operator, an integer matrix on `gens` inducing it modulo `B`.
    pub ops: Vec<Mat>,
}

impl HGroup {
    pub fn new(z: &Howell, b: &Howell, ops: &[Mat]) -> HGroup {
        let md = z.md();
        let gens = z.rows();
        let k = gens.len();
        let log_size = z.log_size() - b.log_size();
        if k == 0 {
            return HGroup { invariants: vec![], log_size: 0, gens, ops: vec![Mat::zeros(md, 0, 0); ops.len()] };
        }
        // relations among generators modulo B
        let zm = z.matrix.clone();
        let rel = preimage(&Howell::full(md, k), &zm, b);
        let invariants = quotient_structure(&rel, k);
        let stacked = if b.is_zero() { zm.clone() } else { zm.vstack(&b.matrix) };
        let solver = Solver::new(&stacked);
        let mut hops = vec![];
        for op in ops {
            let mut m = Mat::zeros(md, k, k);
            for (i, g) in gens.iter().enumerate() {
                let img = op.apply(g);
                let x = solver.solve(&img).ok().flatten().expect("operator preserves cycles");
                for j in 0..k {
                    m.set(i, j, x[j]);
                }
            }
            hops.push(m);
        }
        HGroup { invariants, log_size, gens, ops: hops }
    }

    pub fn is_zero(&self) -> bool {
        self.log_size == 0
    }
}

/// Per-degree cohomology summary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohomologyReport {
    pub degrees: Vec<DegreeReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub degree: i32,
    pub invariants: Vec<u64>,
    pub log_size: u32,
    /// Induced actions of the group generators on the generator classes.
    pub actions: Vec<Vec<Vec<u64>>>,
}

pub fn cohomology(c: &FComplex) -> CohomologyReport {
    let degrees = (c.lo..=c.hi())
        .map(|i| {
            let h = c.cohomology_group(i);
            let actions = h.ops[c.n_ring_ops.min(h.ops.len())..].iter().map(|m| m.row_vecs()).collect();
            DegreeReport { degree: i, invariants: h.invariants, log_size: h.log_size, actions }
        })
        .collect();
    CohomologyReport { degrees }
}

/// Chain map between finite complexes, `maps[k]` in degree `lo + k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainMap {
    pub src: FComplex,
    pub dst: FComplex,
    pub lo: i32,
    pub maps: Vec<Mat>,
}

impl ChainMap {
    /// Degree range covering both complexes.
    fn range(src: &FComplex, dst: &FComplex) -> (i32, i32) {
        let lo = match (src.terms.is_empty(), dst.terms.is_empty()) {
            (true, true) => 0,
            (true, false) => dst.lo,
            (false, true) => src.lo,
            _ => src.lo.min(dst.lo),
        };
        let hi = match (src.terms.is_empty(), dst.terms.is_empty()) {
            (true, true) => -1,
            (true, false) => dst.hi(),
            (false, true) => src.hi(),
            _ => src.hi().max(dst.hi()),
        };
        (lo, hi)
    }

    pub fn new(src: &FComplex, dst: &FComplex, f: impl Fn(i32) -> Mat) -> ChainMap {
        let (lo, hi) = ChainMap::range(src, dst);
        let maps = (lo..=hi).map(|i| f(i)).collect();
        ChainMap { src: src.clone(), dst: dst.clone(), lo, maps }
    }

    pub fn identity(c: &FComplex) -> ChainMap {
        ChainMap::new(c, c, |i| Mat::identity(c.md, c.dim(i)))
    }

    pub fn zero(src: &FComplex, dst: &FComplex) -> ChainMap {
        ChainMap::new(src, dst, |i| Mat::zeros(src.md, src.dim(i), dst.dim(i)))
    }

    pub fn at(&self, i: i32) -> Mat {
        let k = i - self.lo;
        if k >= 0 && (k as usize) < self.maps.len() {
            self.maps[k as usize].clone()
        } else {
            Mat::zeros(self.src.md, self.src.dim(i), self.dst.dim(i))
        }
    }

    pub fn validate(&self) -> Result<(), ComplexError> {
        let (lo, hi) = ChainMap::range(&self.src, &self.dst);
        for i in lo..=hi {
            let f = self.at(i);
            let (x, y) = (self.src.term(i), self.dst.term(i));
            if f.rows != x.dim || f.cols != y.dim {
                return Err(ComplexError::Shape(format!("map in degree {i}")));
            }
            if !is_hom(&x, &y, &f) {
                return Err(ComplexError::NotHom(i));
            }
            let lhs = self.src.diff(i).mul(&self.at(i + 1));
            let rhs = f.mul(&self.dst.diff(i));
            let yn = self.dst.term(i + 1);
            if x.sub.rows().iter().any(|s| !yn.rel.contains(&lhs.sub(&rhs).apply(s))) {
                return Err(ComplexError::NotChainMap(i));
            }
        }
        Ok(())
    }

    pub fn compose(&self, g: &ChainMap) -> ChainMap {
        ChainMap::new(&self.src, &g.dst, |i| self.at(i).mul(&g.at(i)))
    }
}

/// Mapping cone: `cone^i = C^{i+1} + D^i`, `(c, x) -> (-c d_C, c f + x d_D)`.
pub fn cone(f: &ChainMap) -> Result<FComplex, ComplexError> {
    f.validate()?;
    let (c, d) = (&f.src, &f.dst);
    let md = c.md;
    let (lo0, hi0) = ChainMap::range(c, d);
    let (lo, hi) = (lo0 - 1, hi0);
    let mut terms = vec![];
    let mut diffs = vec![];
    for i in lo..=hi {
        let (x, y) = (c.term(i + 1), d.term(i));
        terms.push(direct_sum(&x, &y));
        if i < hi {
            let (a, b) = (c.dim(i + 1), d.dim(i));
            let (a2, b2) = (c.dim(i + 2), d.dim(i + 1));
            let mut m = Mat::zeros(md, a + b, a2 + b2);
            m.put_block(0, 0, &c.diff(i + 1).neg());
            m.put_block(0, a2, &f.at(i + 1));
            m.put_block(a, a2, &d.diff(i));
            diffs.push(m);
        }
    }
    Ok(FComplex { md, lo, terms, diffs, nops: c.nops.max(d.nops), n_ring_ops: c.n_ring_ops.max(d.n_ring_ops) })
}

pub fn direct_sum(x: &FMod, y: &FMod) -> FMod {
    let md = x.md;
    let dim = x.dim + y.dim;
    let embed = |h: &Howell, off: usize| -> Vec<Vec<u64>> {
        h.rows()
            .into_iter()
            .map(|r| {
                let mut v = vec![0; dim];
                v[off..off + r.len()].copy_from_slice(&r);
                v
            })
            .collect()
    };
    let mut srows = embed(&x.sub, 0);
    srows.extend(embed(&y.sub, x.dim));
    let mut rrows = embed(&x.rel, 0);
    rrows.extend(embed(&y.rel, x.dim));
    let nops = x.ops.len().max(y.ops.len());
    let ops = (0..nops)
        .map(|k| {
            let a = x.ops.get(k).cloned().unwrap_or_else(|| Mat::zeros(md, x.dim, x.dim));
            let b = y.ops.get(k).cloned().unwrap_or_else(|| Mat::zeros(md, y.dim, y.dim));
            a.dsum(&b)
        })
        .collect();
    FMod {
        md,
        dim,
        sub: Howell::of_rows(md, dim, srows),
        rel: Howell::of_rows(md, dim, rrows),
        ops,
        n_ring_ops: x.n_ring_ops.max(y.n_ring_ops),
    }
}

/// Per-degree evidence that a chain map induces a bijection on cohomology.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiIsoCertificate {
    pub degrees: Vec<DegreeWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeWitness {
    pub degree: i32,
    pub log_size: u32,
    /// For each generator `z` of `Z(D)`: a cycle `c` of `C` with `c f - z` in `B(D)`.
    pub preimages: Vec<Vec<u64>>,
    /// Generators of `{c in Z(C) : c f in B(D)}`; these must lie in `B(C)`.
    pub kernel: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuasiIsoRefutation {
    NotInjective { degree: i32, class: Vec<u64> },
    NotSurjective { degree: i32, class: Vec<u64> },
}

pub fn check_quasi_iso(f: &ChainMap) -> Result<Result<QuasiIsoCertificate, QuasiIsoRefutation>, ComplexError> {
    check_quasi_iso_above(f, i32::MIN)
}

/// Quasi-isomorphism check restricted to degrees `>= from`.
pub fn check_quasi_iso_above(f: &ChainMap, from: i32) -> Result<Result<QuasiIsoCertificate, QuasiIsoRefutation>, ComplexError> {
    f.validate()?;
    let (lo, hi) = ChainMap::range(&f.src, &f.dst);
    let lo = lo.max(from);
    let mut degrees = vec![];
    for i in lo..=hi {
        let (zc, bc) = (f.src.cycles(i), f.src.boundaries(i));
        let (zd, bd) = (f.dst.cycles(i), f.dst.boundaries(i));
        let fi = f.at(i);
        // injectivity
        let ker = preimage(&zc, &fi, &bd);
        if let Some(c) = ker.rows().into_iter().find(|c| !bc.contains(c)) {
            return Ok(Err(QuasiIsoRefutation::NotInjective { degree: i, class: c }));
        }
        // surjectivity, with explicit preimages
        let mut preimages = vec![];
        let img = if zc.is_zero() { Mat::zeros(f.src.md, 0, f.dst.dim(i)) } else { zc.matrix.mul(&fi) };
        let stacked = if bd.is_zero() { img.clone() } else { img.vstack(&bd.matrix) };
        let solver = (stacked.rows > 0).then(|| Solver::new(&stacked));
        for z in zd.rows() {
            let sol = solver.as_ref().and_then(|s| s.solve(&z).ok().flatten());
            match sol {
                Some(y) => preimages.push(if zc.is_zero() { vec![0; f.src.dim(i)] } else { zc.matrix.apply(&y[..zc.nrows()]) }),
                None => return Ok(Err(QuasiIsoRefutation::NotSurjective { degree: i, class: z })),
            }
        }
        degrees.push(DegreeWitness { degree: i, log_size: zd.log_size() - bd.log_size(), preimages, kernel: ker.rows() });
    }
    Ok(Ok(QuasiIsoCertificate { degrees }))
}

/// Re-checks a certificate against the map without recomputing it from scratch.
pub fn verify_certificate(f: &ChainMap, cert: &QuasiIsoCertificate) -> bool {
    verify_certificate_above(f, cert, i32::MIN)
}

pub fn verify_certificate_above(f: &ChainMap, cert: &QuasiIsoCertificate, from: i32) -> bool {
    if f.validate().is_err() {
        return false;
    }
    let (lo, hi) = ChainMap::range(&f.src, &f.dst);
    let lo = lo.max(from);
    if cert.degrees.iter().enumerate().any(|(k, w)| w.degree != lo + k as i32) {
        return false;
    }
    if cert.degrees.len() != (hi - lo + 1).max(0) as usize {
        return false;
    }
    for w in &cert.degrees {
        let i = w.degree;
        let (zc, bc) = (f.src.cycles(i), f.src.boundaries(i));
        let (zd, bd) = (f.dst.cycles(i), f.dst.boundaries(i));
        let fi = f.at(i);
        let zrows = zd.rows();
        if zrows.len() != w.preimages.len() {
            return false;
        }
        for (z, c) in zrows.iter().zip(&w.preimages) {
            let img = fi.apply(c);
            let md = f.src.md;
            let diff: Vec<u64> = img.iter().zip(z).map(|(&a, &b)| md.sub(a, b)).collect();
            if !zc.contains(c) || !bd.contains(&diff) {
                return false;
            }
        }
        // the kernel witness must be all of the kernel and lie in B(C)
        let ker = preimage(&zc, &fi, &bd);
        let claimed = Howell::of_rows(f.src.md, f.src.dim(i), w.kernel.clone());
        if claimed != ker || !bc.contains_span(&ker) {
            return false;
        }
    }
    true
}

/// `A[G]`-module with `A`-free underlying module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GModule {
    pub rank: usize,
    pub actions: Vec<AMat>,
}

/// Bounded complex of `A`-free modules with group action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GComplex {
    pub ring: Ring,
    pub group: Arc<GroupModel>,
    pub lo: i32,
    pub terms: Vec<GModule>,
    pub diffs: Vec<AMat>,
}

impl GComplex {
    pub fn new(ring: &Ring, group: &GroupModel, lo: i32, terms: Vec<GModule>, diffs: Vec<AMat>) -> Result<GComplex, ComplexError> {
        let c = GComplex { ring: ring.clone(), group: Arc::new(group.clone()), lo, terms, diffs };
        c.validate()?;
        Ok(c)
    }

    pub fn zero(ring: &Ring, group: &GroupModel) -> GComplex {
        GComplex { ring: ring.clone(), group: Arc::new(group.clone()), lo: 0, terms: vec![], diffs: vec![] }
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.terms.len() as i32 - 1
    }

    pub fn rank(&self, i: i32) -> usize {
        if i < self.lo || i > self.hi() {
            0
        } else {
            self.terms[(i - self.lo) as usize].rank
        }
    }

    pub fn diff(&self, i: i32) -> AMat {
        if i >= self.lo && i < self.hi() {
            self.diffs[(i - self.lo) as usize].clone()
        } else {
            AMat::zeros(&self.ring, self.rank(i), self.rank(i + 1))
        }
    }

    pub fn validate(&self) -> Result<(), ComplexError> {
        if self.diffs.len() + 1 != self.terms.len().max(1) {
            return Err(ComplexError::Shape("need one differential between consecutive terms".into()));
        }
        for i in self.lo..=self.hi() {
            let t = &self.terms[(i - self.lo) as usize];
            if t.rank > 0 {
                self.group.check_continuous_action(&t.actions).map_err(|e| ComplexError::BadAction(i, e))?;
            }
            let d = self.diff(i);
            if d.rows != self.rank(i) || d.cols != self.rank(i + 1) {
                return Err(ComplexError::Shape(format!("d^{i}")));
            }
            if !d.mul(&self.diff(i + 1)).is_zero() {
                return Err(ComplexError::NotComplex(i));
            }
            if i < self.hi() {
                let tn = &self.terms[(i + 1 - self.lo) as usize];
                for (k, g) in self.group.gens.iter().enumerate() {
                    let lhs = if t.rank == 0 { continue } else { t.actions[k].mul(&d) };
                    let rhs = if tn.rank == 0 { AMat::zeros(&self.ring, t.rank, 0) } else { d.mul(&tn.actions[k]) };
                    if lhs != rhs {
                        return Err(ComplexError::NotEquivariant(i, g.name.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_fcomplex(&self) -> FComplex {
        let md = self.ring.md();
        let n_ring_ops = self.ring.dim();
        let nops = n_ring_ops + self.group.ngens();
        let terms = self
            .terms
            .iter()
            .map(|t| {
                if t.rank == 0 {
                    FMod::zero(md, nops, n_ring_ops)
                } else {
                    FMod::free(&self.ring, t.rank, &t.actions)
                }
            })
            .collect();
        let diffs = self.diffs.iter().map(|d| d.to_zq()).collect();
        FComplex { md, lo: self.lo, terms, diffs, nops, n_ring_ops }
    }

    /// `S (x)_A C` for the cyclic module `S = A / (a)`.
    pub fn tensor_cyclic(&self, a: &[u64]) -> FComplex {
        let mut c = self.to_fcomplex();
        for (k, t) in c.terms.iter_mut().enumerate() {
            let rank = self.terms[k].rank;
            let op = scalar_op(&self.ring, a, rank * self.ring.dim());
            let extra = Howell::full(self.ring.md(), t.dim).image_under(&op);
            t.rel = t.rel.sum(&extra);
        }
        c
    }

    pub fn shift(&self, n: i32) -> GComplex {
        let r = &self.ring;
        let diffs = if n % 2 == 0 { self.diffs.clone() } else { self.diffs.iter().map(|d| d.scale(&r.from_int(-1))).collect() };
        GComplex { lo: self.lo - n, diffs, ..self.clone() }
    }

    /// Reduction modulo the maximal ideal, as a complex over the residue field.
    pub fn residue(&self) -> GComplex {
        let k = Ring::zq(self.ring.md().p(), 1).unwrap();
        let conv = |m: &AMat| -> AMat {
            let r = m.residue();
            let e = r.data.iter().map(|&x| vec![x]).collect();
            AMat::from_elems(&k, m.rows, m.cols, e)
        };
        GComplex {
            ring: k.clone(),
            group: self.group.clone(),
            lo: self.lo,
            terms: self.terms.iter().map(|t| GModule { rank: t.rank, actions: t.actions.iter().map(conv).collect() }).collect(),
            diffs: self.diffs.iter().map(conv).collect(),
        }
    }

    pub fn to_json(&self) -> GComplexJson {
        let enc = |m: &AMat| -> Vec<Vec<Elem>> { (0..m.rows).map(|i| (0..m.cols).map(|j| m.get(i, j).clone()).collect()).collect() };
        GComplexJson {
            ring: self.ring.presentation().clone(),
            ring_name: self.ring.name().to_string(),
            group: self.group.spec(),
            lo: self.lo,
            terms: self
                .terms
                .iter()
                .map(|t| TermJson {
                    rank: t.rank,
                    actions: self.group.gens.iter().zip(&t.actions).map(|(g, a)| (g.name.clone(), enc(a))).collect(),
                })
                .collect(),
            diffs: self.diffs.iter().map(enc).collect(),
        }
    }

    pub fn from_json(j: &GComplexJson) -> Result<GComplex, String> {
        let ring = j.ring.build(&j.ring_name).map_err(|e| e.to_string())?;
        let group = j.group.build().map_err(|e| e.to_string())?;
        let dec = |rows: &Vec<Vec<Elem>>, r: usize, c: usize| -> Result<AMat, String> {
            if rows.len() != r || rows.iter().any(|x| x.len() != c) {
                return Err("matrix shape".into());
            }
            let e: Vec<Elem> = rows.iter().flatten().map(|x| ring.canon(x.iter().map(|&v| ring.md().red(v)).collect())).collect();
            if e.iter().any(|x| x.len() != ring.dim()) {
                return Err("entry length".into());
            }
            Ok(AMat::from_elems(&ring, r, c, e))
        };
        let mut terms = vec![];
        for t in &j.terms {
            let mut actions = vec![];
            for g in &group.gens {
                let m = t.actions.iter().find(|(n, _)| *n == g.name).map(|(_, m)| m);
                actions.push(match m {
                    Some(m) => dec(m, t.rank, t.rank)?,
                    None => AMat::identity(&ring, t.rank),
                });
            }
            terms.push(GModule { rank: t.rank, actions });
        }
        let mut diffs = vec![];
        for (k, d) in j.diffs.iter().enumerate() {
            diffs.push(dec(d, terms[k].rank, terms[k + 1].rank)?);
        }
        GComplex::new(&ring, &group, j.lo, terms, diffs).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub rank: usize,
    pub actions: Vec<(String, Vec<Vec<Elem>>)>,
}

/// JSON form of a [`GComplex`]; ring elements are coordinate vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GComplexJson {
    pub ring: RingPresentation,
    pub ring_name: String,
    pub group: crate::group::GroupSpec,
    pub lo: i32,
    pub terms: Vec<TermJson>,
    pub diffs: Vec<Vec<Vec<Elem>>>,
}

/// Representatives of the principal ideals of `A`.
pub fn principal_ideal_generators(ring: &Ring) -> Vec<Elem> {
    let mut seen: Vec<Howell> = vec![];
    let mut out = vec![];
    for a in ring.elements() {
        let ideal = Howell::full(ring.md(), ring.dim()).image_under(&ring.reg(&a)).sum(ring.rel());
        if !seen.contains(&ideal) {
            seen.push(ideal);
            out.push(a);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorWitness {
    pub degree: i32,
    /// Coordinates of `a`, with test module `A/(a)`.
    pub generator: Elem,
}

/// Finite tor dimension at `n`: `H^i(S (x) C) = 0` for `i < n` and every cyclic `S`.
pub fn check_tor_dimension(c: &GComplex, n: i32) -> Result<(), TorWitness> {
    check_tor_dimension_from(c, c.lo, n)
}

/// As [`check_tor_dimension`], looking only at degrees `>= from`; used when
/// `C` is a truncated resolution whose lowest degrees carry artifacts.
pub fn check_tor_dimension_from(c: &GComplex, from: i32, n: i32) -> Result<(), TorWitness> {
    for a in principal_ideal_generators(&c.ring) {
        let t = c.tensor_cyclic(&a);
        for i in t.lo.max(from)..n.min(t.hi() + 1) {
            if t.cycles(i) != t.boundaries(i) {
                return Err(TorWitness { degree: i, generator: a });
            }
        }
    }
    Ok(())
}

/// Converts an `A`-free finite module with group operators into a
/// [`GModule`], returning the chosen basis vectors (ambient coordinates).
pub fn to_gmodule(m: &FMod, ring: &Ring) -> Result<(GModule, Vec<Vec<u64>>), ComplexError> {
    let basis = m.a_basis(ring).ok_or(ComplexError::NotFree)?;
    let coords = AFreeCoords::new(m, ring, &basis);
    let mut actions = vec![];
    for op in m.group_ops() {
        let rows: Vec<Vec<u64>> = basis.iter().map(|b| op.apply(b)).collect();
        actions.push(coords.express_rows(&rows)?);
    }
    Ok((GModule { rank: basis.len(), actions }, basis))
}

/// Solves for `A`-coordinates with respect to an `A`-basis of a free module.
pub struct AFreeCoords {
    ring: Ring,
    rank: usize,
    solver: Solver,
}

impl AFreeCoords {
    pub fn new(m: &FMod, ring: &Ring, basis: &[Vec<u64>]) -> AFreeCoords {
        let n = ring.dim();
        let mut rows = vec![];
        for b in basis {
            for k in 0..n {
                let mut e = vec![0; n];
                e[k] = 1;
                let op = scalar_op(ring, &ring.canon(e), m.dim);
                rows.push(op.apply(b));
            }
        }
        let mut mat = Mat::from_rows(ring.md(), m.dim, &rows);
        if !m.rel.is_zero() {
            mat = mat.vstack(&m.rel.matrix);
        }
        AFreeCoords { ring: ring.clone(), rank: basis.len(), solver: Solver::new(&mat) }
    }

    pub fn express(&self, v: &[u64]) -> Result<Vec<Elem>, ComplexError> {
        let n = self.ring.dim();
        let x = self.solver.solve(v)?.ok_or(ComplexError::NotFree)?;
        Ok((0..self.rank).map(|i| self.ring.canon(x[i * n..(i + 1) * n].to_vec())).collect())
    }

    pub fn express_rows(&self, rows: &[Vec<u64>]) -> Result<AMat, ComplexError> {
        let mut e = vec![];
        for r in rows {
            e.extend(self.express(r)?);
        }
        Ok(AMat::from_elems(&self.ring, rows.len(), self.rank, e))
    }
}

/// Converts an `A`-free finite complex to a [`GComplex`].
pub fn to_gcomplex(c: &FComplex, ring: &Ring, group: &GroupModel) -> Result<GComplex, ComplexError> {
    let mut terms = vec![];
    let mut bases = vec![];
    for t in &c.terms {
        if t.is_zero() {
            terms.push(GModule { rank: 0, actions: vec![AMat::zeros(ring, 0, 0); group.ngens()] });
            bases.push(vec![]);
        } else {
            let (g, b) = to_gmodule(t, ring)?;
            terms.push(g);
            bases.push(b);
        }
    }
    let mut diffs = vec![];
    for k in 0..c.diffs.len() {
        let rows: Vec<Vec<u64>> = bases[k].iter().map(|b| c.diffs[k].apply(b)).collect();
        if bases[k + 1].is_empty() {
            diffs.push(AMat::zeros(ring, rows.len(), 0));
            continue;
        }
        let coords = AFreeCoords::new(&c.terms[k + 1], ring, &bases[k + 1]);
        diffs.push(coords.express_rows(&rows)?);
    }
    GComplex::new(ring, group, c.lo, terms, diffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> Ring {
        Ring::zq(2, 1).unwrap()
    }

    #[test]
    fn zero_complex_has_no_cohomology() {
        let c = FComplex::zero(f2().md(), 0, 0);
        assert!(cohomology(&c).degrees.is_empty());
        assert!(c.is_acyclic());
    }

    #[test]
    fn cone_of_identity_is_acyclic() {
        let g = GroupModel::z2_times_z2(1);
        let k = f2();
        let s = AMat::from_ints(&k, &[&[0, 1], &[1, 0]]);
        let i2 = AMat::identity(&k, 2);
        let d = AMat::from_ints(&k, &[&[1, 1], &[1, 1]]);
        let c = GComplex::new(
            &k,
            &g,
            -1,
            vec![GModule { rank: 2, actions: vec![i2.clone(), s.clone()] }, GModule { rank: 2, actions: vec![i2, s] }],
            vec![d],
        )
        .unwrap();
        let fc = c.to_fcomplex();
        let cone_id = cone(&ChainMap::identity(&fc)).unwrap();
        assert!(cone_id.is_acyclic());
        let cert = check_quasi_iso(&ChainMap::identity(&fc)).unwrap().unwrap();
        assert!(verify_certificate(&ChainMap::identity(&fc), &cert));
        let zero = ChainMap::zero(&fc, &fc);
        assert!(matches!(check_quasi_iso(&zero).unwrap(), Err(QuasiIsoRefutation::NotInjective { degree: -1, .. })));
    }
}
