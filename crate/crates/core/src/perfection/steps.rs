use super::trace::TraceBuilder;
use super::{algebra_op, distinguished_annihilator, identity, kills, poly_eval, PerfectionError};
use crate::complex::{close_under, preimage, ring_ops, to_gcomplex, check_tor_dimension_from, FComplex, FMod, free_rel};
use crate::group::{Case, GElem, GenKind, GroupAlgebra, GroupModel};
use crate::linalg::{kernel, Howell, Mat, Solver};
use crate::resolution::{group_ring_cover, group_ring_free, hartshorne, ResolutionError};
use crate::ring::Ring;
use serde::{Deserialize, Serialize};

/// `(w^N - 1)^N'` kills the module; `order` is the order of `w` on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnihilatorWitness {
    pub n: u64,
    pub n_prime: u32,
    pub order: u64,
}

/// Scans `N` over the divisors of the order of `w`, and for each `N` the
/// exponents `N' <=` the number of `A`-generators; falls back to
/// `(order, 1)`. The zero module gets `(1, 0)`.
pub fn find_annihilator(m: &FMod, ring: &Ring, w: &Mat) -> AnnihilatorWitness {
    if m.is_zero() {
        return AnnihilatorWitness { n: 1, n_prime: 0, order: 1 };
    }
    let id = identity(m);
    let mut order = 1u64;
    let mut pw = w.clone();
    while !kills(m, &pw.sub(&id)) {
        pw = pw.mul(w);
        order += 1;
    }
    let rank = m.min_generators(ring).max(1);
    for n in (1..=order).filter(|n| order % n == 0) {
        let e = w.pow(n).sub(&id);
        let mut acc = e.clone();
        for np in 1..=rank {
            if kills(m, &acc) {
                return AnnihilatorWitness { n, n_prime: np, order };
            }
            acc = acc.mul(&e);
        }
    }
    AnnihilatorWitness { n: order, n_prime: 1, order }
}

/// The ideal `J = (w_2^N - 1)^N'` produced by the annihilation pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JIdeal {
    pub n: u64,
    pub n_prime: u32,
}

impl JIdeal {
    pub fn element(&self, alg: &GroupAlgebra, w2: usize) -> GElem {
        let e = alg.minus_one(alg.group.pow(w2, self.n));
        alg.pow(&e, self.n_prime as u64)
    }
}

/// The complement `M' = I^{q+1} M`, with `T` meeting it trivially.
#[derive(Clone, Debug)]
pub struct ComplementWitness {
    pub q: usize,
    pub complement: Howell,
}

/// First `q` with `T cap I^{q+1} M = 0`, where `I` is generated by the
/// operators `elems` (which commute with the module structure).
pub fn ar_complement(m: &FMod, t: &Howell, elems: &[Mat]) -> Result<ComplementWitness, PerfectionError> {
    let mut s = m.sub.clone();
    for q in 0.. {
        let rows: Vec<Vec<u64>> = elems.iter().flat_map(|e| s.image_under(e).rows()).collect();
        let next = m.closure(rows);
        if m.rel.contains_span(&t.intersect(&next)) {
            return Ok(ComplementWitness { q, complement: next });
        }
        if next == s {
            return Err(PerfectionError::Invariant("I-adic filtration is stuck above T".into()));
        }
        s = next;
    }
    unreachable!()
}

fn quotient_map(src: &FComplex, dst: &FComplex) -> crate::complex::ChainMap {
    crate::complex::ChainMap::new(src, dst, |i| {
        if i >= dst.lo && i <= dst.hi() && src.dim(i) == dst.dim(i) {
            Mat::identity(src.md, src.dim(i))
        } else {
            Mat::zeros(src.md, src.dim(i), dst.dim(i))
        }
    })
}

fn set_rel(c: &mut FComplex, i: i32, rel: Howell) {
    let k = (i - c.lo) as usize;
    c.terms[k].rel = rel;
}

/// Standard basis of a free `A[Gamma_L]`-module laid out as in
/// [`group_ring_free`] (as produced by group-ring covers and their sums).
fn free_basis(m: &FMod, ring: &Ring, group: &GroupModel) -> Result<Vec<Vec<u64>>, PerfectionError> {
    let block = group.order() * ring.dim();
    let bad = || PerfectionError::Invariant("term is not a standard free group-ring module".into());
    if m.dim % block != 0 {
        return Err(bad());
    }
    let r = m.dim / block;
    if m.sub != Howell::full(m.md, m.dim) || m.rel != free_rel(ring, r * group.order()) || m.ops != group_ring_free(ring, group, r).ops {
        return Err(bad());
    }
    let one = ring.one();
    Ok((0..r)
        .map(|k| {
            let mut v = vec![0; m.dim];
            v[k * block..k * block + one.len()].copy_from_slice(&one);
            v
        })
        .collect())
}

/// Generators of the left annihilator `{a : a g = 0}` as a left ideal.
fn left_annihilator(alg: &GroupAlgebra, g: &GElem) -> Vec<GElem> {
    let (n, na) = (alg.group.order(), alg.ring.dim());
    let md = alg.ring.md();
    let mut rows = vec![];
    for x in 0..n {
        for c in 0..na {
            let mut e = vec![0; na];
            e[c] = 1;
            let mut b = alg.zero();
            b[x] = alg.ring.canon(e);
            rows.push(alg.coords(&alg.mul(&b, g)));
        }
    }
    let rel = alg.rel();
    let mut mat = Mat::from_rows(md, n * na, &rows);
    if !rel.is_zero() {
        mat = mat.vstack(&rel.matrix);
    }
    let cands: Vec<Vec<u64>> = kernel(&mat).rows().into_iter().map(|r| r[..n * na].to_vec()).collect();
    // left multiplication by generators, and scalars
    let mut ops = ring_ops(&alg.ring, n);
    for j in 0..alg.group.ngens() {
        let h = alg.group.gen(j);
        let mut op = Mat::zeros(md, n * na, n * na);
        for x in 0..n {
            let y = alg.group.mul(h, x);
            for c in 0..na {
                op.set(x * na + c, y * na + c, 1);
            }
        }
        ops.push(op);
    }
    let mut span = rel;
    let mut out = vec![];
    for a in cands {
        if !span.contains(&a) {
            span = close_under(&span, vec![a.clone()], &ops);
            out.push(alg.from_coords(&a));
        }
    }
    out
}

/// Case A: truncation at `n1` (`J = 0`). Case B: bounded annihilation
/// degree by degree from the top, then truncation.
pub(crate) fn annihilation_pass(tb: &mut TraceBuilder, ring: &Ring, group: &GroupModel, n1: i32) -> Result<Option<JIdeal>, PerfectionError> {
    if group.case == Case::A {
        let cur = tb.current().clone();
        let t = cur.truncate_below(n1);
        let map = quotient_map(&cur, &t);
        tb.forward("annihilate/truncate", t, map)?;
        return Ok(None);
    }
    let alg = GroupAlgebra::new(ring, group);
    let w2 = group.gen(2);
    let lowest = tb.current().lo;
    let hi = tb.current().hi();
    let nr = tb.current().n_ring_ops;
    // factors[k]: annihilator of H^{hi - k}
    let mut factors: Vec<AnnihilatorWitness> = vec![];
    let mut j = hi;
    loop {
        let q = tb.current().clone();
        let t = q.term(j);
        let h = FMod { sub: q.cycles(j), rel: q.boundaries(j), ..t.clone() };
        let w = if h.is_zero() { AnnihilatorWitness { n: 1, n_prime: 0, order: 1 } } else { find_annihilator(&h, ring, &h.ops[nr + 2]) };
        factors.push(w);
        if j <= n1 {
            break;
        }
        let g = factors.iter().fold(alg.one(), |acc, f| alg.mul(&acc, &JIdeal { n: f.n, n_prime: f.n_prime }.element(&alg, w2)));
        bounded_annihilation(tb, ring, group, &alg, &g, j, lowest)?;
        j -= 1;
    }
    let cur = tb.current().clone();
    let t = cur.truncate_below(n1);
    let map = quotient_map(&cur, &t);
    tb.forward("annihilate/truncate", t, map)?;
    // J_i kills Q^i, and J = (w2^{prod N} - 1)^{sum N'} lies in every J_i
    let q = tb.current().clone();
    let big = JIdeal { n: factors.iter().map(|f| f.n).product(), n_prime: factors.iter().map(|f| f.n_prime).sum() };
    let gj = big.element(&alg, w2);
    let lj = alg.left_ideal(&gj);
    let mut gi = alg.one();
    for (k, f) in factors.iter().enumerate() {
        let i = hi - k as i32;
        gi = alg.mul(&gi, &JIdeal { n: f.n, n_prime: f.n_prime }.element(&alg, w2));
        if i < n1 {
            continue;
        }
        let qi = q.term(i);
        if !kills(&qi, &algebra_op(&qi, group, &gi)) || !kills(&qi, &algebra_op(&qi, group, &gj)) {
            return Err(PerfectionError::Invariant(format!("Q^{i} is not annihilated by J_{i}")));
        }
        if !alg.left_ideal(&gi).contains_span(&lj) {
            return Err(PerfectionError::Invariant(format!("J is not contained in J_{i}")));
        }
    }
    Ok(Some(big))
}

/// One step of the descent: kill `J_j Q^j` with an acyclic pair, then
/// replace the lower part by a free resolution mapping onto it.
fn bounded_annihilation(
    tb: &mut TraceBuilder,
    ring: &Ring,
    group: &GroupModel,
    alg: &GroupAlgebra,
    g: &GElem,
    j: i32,
    lowest: i32,
) -> Result<(), PerfectionError> {
    let q = tb.current().clone();
    let md = q.md;
    let qj = q.term(j);
    let basis = free_basis(&qj, ring, group)?;
    let gop = algebra_op(&qj, group, g);
    let targets: Vec<Vec<u64>> = basis.iter().map(|e| gop.apply(e)).collect();
    let jq = qj.closure(targets.clone());
    if jq == qj.rel {
        return Ok(());
    }
    // y_k with d y_k = g e_k and ann(g) y_k = 0
    let qm = q.term(j - 1);
    let d = q.diff(j - 1);
    let srows = qm.sub.rows();
    let mut dmat = Mat::from_rows(md, d.cols, &srows.iter().map(|s| d.apply(s)).collect::<Vec<_>>());
    let relj = q.rel(j);
    if !relj.is_zero() {
        dmat = dmat.vstack(&relj.matrix);
    }
    let dsolve = Solver::new(&dmat);
    let ann = left_annihilator(alg, g);
    let aops: Vec<Mat> = ann.iter().map(|a| algebra_op(&qm, group, a)).collect();
    let zc = q.cycles(j - 1);
    let zrows = zc.rows();
    let relm = qm.rel.rows();
    let (na_, dim) = (aops.len(), qm.dim);
    let mut crows = vec![];
    for z in &zrows {
        let mut r = vec![0; na_ * dim];
        for (a, op) in aops.iter().enumerate() {
            r[a * dim..(a + 1) * dim].copy_from_slice(&op.apply(z));
        }
        crows.push(r);
    }
    for a in 0..na_ {
        for rr in &relm {
            let mut r = vec![0; na_ * dim];
            r[a * dim..(a + 1) * dim].copy_from_slice(rr);
            crows.push(r);
        }
    }
    let csolve = (!crows.is_empty()).then(|| Solver::new(&Mat::from_rows(md, na_ * dim, &crows)));
    let mut ys = vec![];
    for t in &targets {
        let x = dsolve.solve(t)?.ok_or(PerfectionError::SectionFailed(j))?;
        let mut y = vec![0; dim];
        for (k, s) in srows.iter().enumerate() {
            if x[k] != 0 {
                for (yi, si) in y.iter_mut().zip(s) {
                    *yi = md.add(*yi, md.mul(x[k], *si));
                }
            }
        }
        if na_ > 0 {
            let rhs: Vec<u64> = aops.iter().flat_map(|op| op.apply(&y).into_iter().map(|v| md.neg(v))).collect();
            let beta = match &csolve {
                Some(s) => s.solve(&rhs)?.ok_or(PerfectionError::SectionFailed(j))?,
                None if rhs.iter().all(|&v| v == 0) => vec![],
                None => return Err(PerfectionError::SectionFailed(j)),
            };
            for (k, z) in zrows.iter().enumerate() {
                if beta[k] != 0 {
                    for (yi, zi) in y.iter_mut().zip(z) {
                        *yi = md.add(*yi, md.mul(beta[k], *zi));
                    }
                }
            }
        }
        ys.push(y);
    }
    let s = qm.closure(ys);
    if !qm.rel.contains_span(&s.intersect(&zc)) {
        return Err(PerfectionError::Invariant(format!("section in degree {} meets the cycles", j - 1)));
    }
    let mut q1 = q.clone();
    set_rel(&mut q1, j, jq);
    set_rel(&mut q1, j - 1, s);
    let map = quotient_map(&q, &q1);
    tb.forward("annihilate/quotient", q1.clone(), map)?;
    // free resolution of the part below j, spliced back in
    let low = q1.window(lowest, j - 1);
    let (l, rho) = hartshorne(&low, lowest, &mut |m| group_ring_cover(m, ring, group))?;
    let mut terms = l.terms.clone();
    let mut diffs = l.diffs.clone();
    diffs.push(rho.at(j - 1).mul(&q1.diff(j - 1)));
    for i in j..=q1.hi() {
        terms.push(q1.term(i));
        if i < q1.hi() {
            diffs.push(q1.diff(i));
        }
    }
    let t = FComplex { md, lo: lowest, terms, diffs, nops: q1.nops, n_ring_ops: q1.n_ring_ops };
    t.validate()?;
    let tau = crate::complex::ChainMap::new(&t, &q1, |i| if i < j { rho.at(i) } else { Mat::identity(md, q1.dim(i)) });
    tb.backward("annihilate/resolve", t, tau)
}

/// Operators generating the ideal `I` on `m`, from monic annihilators of
/// `T` (case A: one per procyclic generator; case B: in `w_1^z`).
fn ideal_ops(m: &FMod, t: &Howell, ring: &Ring, group: &GroupModel) -> Result<Vec<Mat>, PerfectionError> {
    let nr = m.n_ring_ops;
    let id = identity(m);
    let tm = FMod { sub: t.clone(), ..m.clone() };
    let mut out = vec![];
    match group.case {
        Case::A => {
            for (j, g) in group.gens.iter().enumerate() {
                if g.kind != GenKind::Procyclic {
                    continue;
                }
                let x = m.ops[nr + j].sub(&id);
                let h = distinguished_annihilator(&tm, ring, &x)?;
                out.push(poly_eval(m, &h, &x));
            }
        }
        Case::B => {
            let w1 = &m.ops[nr];
            let mut wz = w1.clone();
            let commutes = |a: &Mat| m.group_ops().iter().all(|o| kills(m, &a.mul(o).sub(&o.mul(a))));
            let mut z = 1;
            while !commutes(&wz) {
                wz = wz.mul(w1);
                z += 1;
                if z > 1 << 20 {
                    return Err(PerfectionError::Invariant("no central power of w1".into()));
                }
            }
            let x = wz.sub(&id);
            let h = distinguished_annihilator(&tm, ring, &x)?;
            out.push(poly_eval(m, &h, &x));
        }
    }
    Ok(out)
}

/// Ascending Artin-Rees sweep: in each degree, quotient by an acyclic pair
/// `[M' -> d M']` with `M'` a complement to the cycles.
pub(crate) fn finiteness_pass(tb: &mut TraceBuilder, ring: &Ring, group: &GroupModel, n1: i32, ideal: Option<JIdeal>) -> Result<(), PerfectionError> {
    let hi = tb.current().hi();
    for n0 in n1..=hi {
        let q = tb.current().clone();
        let m = q.term(n0);
        if m.is_zero() {
            continue;
        }
        let t = q.cycles(n0);
        let mprime = match ideal {
            Some(jd) if jd.n_prime > 1 => epsilon_chain(&m, &t, ring, group, jd)?,
            _ => {
                let ops = ideal_ops(&m, &t, ring, group)?;
                ar_complement(&m, &t, &ops)?.complement
            }
        };
        if mprime == m.rel {
            continue;
        }
        if !m.rel.contains_span(&t.intersect(&mprime)) {
            return Err(PerfectionError::Invariant(format!("complement meets the cycles in degree {n0}")));
        }
        let mut q1 = q.clone();
        set_rel(&mut q1, n0, mprime.clone());
        if n0 < hi {
            let d = q.diff(n0);
            let next = q.term(n0 + 1);
            let img = next.closure(mprime.image_under(&d).rows());
            set_rel(&mut q1, n0 + 1, img);
        }
        let map = quotient_map(&q, &q1);
        tb.forward("finite/complement", q1, map)?;
    }
    Ok(())
}

/// Case B with `N' > 1`: grow `M_n` through the `epsilon`-torsion layers
/// `M(epsilon) = {x : epsilon x in M_n}` until the layer complement vanishes.
fn epsilon_chain(m: &FMod, t: &Howell, ring: &Ring, group: &GroupModel, jd: JIdeal) -> Result<Howell, PerfectionError> {
    let nr = m.n_ring_ops;
    let eps = m.ops[nr + 2].pow(jd.n).sub(&identity(m));
    let mut mn = m.rel.clone();
    loop {
        let meps = preimage(&m.sub, &eps, &mn).sum(&mn);
        let layer = FMod { sub: meps.clone(), rel: mn.clone(), ..m.clone() };
        if layer.closure(meps.rows()) != meps {
            return Err(PerfectionError::Invariant("epsilon-torsion is not a submodule".into()));
        }
        if layer.is_zero() {
            return Ok(mn);
        }
        let t1 = t.sum(&mn).intersect(&meps);
        let ops = ideal_ops(&layer, &t1, ring, group)?;
        let y = ar_complement(&layer, &t1, &ops)?.complement;
        if mn.contains_span(&y) {
            return Ok(mn);
        }
        mn = y.sum(&mn);
    }
}

/// Hartshorne over `A`-free covers, then truncation at `n1`; skipped when
/// the terms are already `A`-free.
pub(crate) fn free_terms_pass(tb: &mut TraceBuilder, ring: &Ring, group: &GroupModel, n1: i32) -> Result<(), PerfectionError> {
    let q = tb.current().clone();
    if (q.lo..=q.hi()).all(|i| q.term(i).is_a_free(ring)) {
        return Ok(());
    }
    let lowest = n1 - 2;
    let (l, rho) = hartshorne(&q, lowest, &mut |m| super::free_cover(m, ring, group).map_err(|e| ResolutionError::Cover(e.to_string())))?;
    let gl = to_gcomplex(&l, ring, group)?;
    if let Err(w) = check_tor_dimension_from(&gl, lowest + 1, n1) {
        return Err(PerfectionError::Hypothesis(format!("free replacement has H^{} != 0 after reduction", w.degree)));
    }
    tb.backward("free/resolve", l.clone(), rho)?;
    let t = l.truncate_below(n1);
    let map = quotient_map(&l, &t);
    tb.forward("free/truncate", t, map)
}
