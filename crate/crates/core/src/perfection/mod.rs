//! Replacing a bounded-above complex of free modules over the truncated
//! group ring by a quasi-isomorphic bounded complex of `A`-free, `A`-finite
//! modules with group action.
//!
//! Three passes, each recorded as legs of a [`PipelineTrace`]:
//! annihilation (terms killed by a fixed ideal `J`), finiteness (Artin-Rees
//! complements), and free terms (covers by `A`-free modules). Cohomology of
//! the input below `exact_from` is treated as an artifact of truncating a
//! resolution, so all quasi-isomorphism certificates are checked in degrees
//! `>= n1`.

mod cover;
mod seeds;
mod steps;
mod trace;

pub use cover::free_cover;
pub use seeds::{random_seed, resolve_seed, Seed, SeedShape};
pub use steps::{ar_complement, find_annihilator, AnnihilatorWitness, ComplementWitness, JIdeal};
pub use trace::{hash_complex, ComplexJson, Direction, Leg, MatJson, ModJson, PipelineTrace, TraceError};

use crate::complex::{check_tor_dimension_from, close_under, ComplexError, FMod, GComplex, QuasiIsoRefutation};
use crate::group::{Case, GElem, GroupModel};
use crate::linalg::{LinalgError, Mat, Solver};
use crate::resolution::ResolutionError;
use crate::ring::{weierstrass, Elem, Ring, RingError, Series};
use thiserror::Error;
use trace::TraceBuilder;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerfectionError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Resolution(#[from] ResolutionError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("hypothesis fails: {0}")]
    Hypothesis(String),
    #[error("no monic annihilator of degree <= {0}")]
    NoAnnihilator(usize),
    #[error("no section of the annihilated part compatible with its relations in degree {0}")]
    SectionFailed(i32),
    #[error("{stage}: not a quasi-isomorphism ({refutation:?})")]
    NotQuasiIso { stage: String, refutation: QuasiIsoRefutation },
    #[error("internal check failed: {0}")]
    Invariant(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Output of [`perfect`].
#[derive(Clone, Debug)]
pub struct Perfected {
    pub complex: GComplex,
    pub n1: i32,
    pub n2: i32,
    /// Case B: `J = A[[Delta]] (w_2^N - 1)^N'`.
    pub ideal: Option<JIdeal>,
    pub trace: PipelineTrace,
}

impl Perfected {
    /// `A`-ranks of the terms, degree by degree.
    pub fn ranks(&self) -> Vec<(i32, usize)> {
        (self.complex.lo..=self.complex.hi()).map(|i| (i, self.complex.rank(i))).collect()
    }

    /// Smallest interval containing every nonzero term.
    pub fn support(&self) -> Option<(i32, i32)> {
        let nz: Vec<i32> = self.ranks().into_iter().filter(|&(_, r)| r > 0).map(|(i, _)| i).collect();
        Some((*nz.first()?, *nz.last()?))
    }
}

/// Runs the three passes on `p`, a complex of free `A[Gamma_L]`-modules
/// whose cohomology is genuine in degrees `>= exact_from`, with finite tor
/// dimension at `n1`.
pub fn perfect(p: &GComplex, n1: i32, exact_from: i32) -> Result<Perfected, PerfectionError> {
    let ring = &p.ring;
    let group: &GroupModel = &p.group;
    let n2 = p.hi();
    if p.terms.is_empty() || n1 > n2 {
        return Err(PerfectionError::Hypothesis(format!("need a nonempty complex with n1 <= {n2}")));
    }
    let input = p.to_fcomplex();
    // already strictly perfect: the identity is the whole zig-zag
    let in_range = (p.lo..=n2).all(|i| i >= n1 || p.rank(i) == 0);
    if in_range && input.terms.iter().all(|t| t.is_a_free(ring)) {
        let (_, trace) = TraceBuilder::new(&input, n1).finish();
        return Ok(Perfected { complex: p.clone(), n1, n2, ideal: None, trace });
    }
    if exact_from > n1 {
        return Err(PerfectionError::Hypothesis("cohomology must be genuine from degree n1 - 1 on".into()));
    }
    if let Err(w) = check_tor_dimension_from(p, exact_from, n1) {
        return Err(PerfectionError::Hypothesis(format!(
            "H^{}(A/({}) (x) P) is not zero, so P does not have tor dimension at {n1}",
            w.degree,
            ring.fmt_elem(&w.generator)
        )));
    }
    if group.case == Case::B && group.w2_orders.len() != 1 {
        return Err(PerfectionError::Unsupported("case B with more than one w2 generator".into()));
    }
    let mut tb = TraceBuilder::new(&input, n1);
    let ideal = steps::annihilation_pass(&mut tb, ring, group, n1)?;
    steps::finiteness_pass(&mut tb, ring, group, n1, ideal)?;
    steps::free_terms_pass(&mut tb, ring, group, n1)?;
    let (out, trace) = tb.finish();
    let complex = crate::complex::to_gcomplex(&out, ring, group)?;
    Ok(Perfected { complex, n1, n2, ideal, trace })
}

// ---- helpers shared by the passes ----

pub(crate) fn identity(m: &FMod) -> Mat {
    Mat::identity(m.md, m.dim)
}

/// Multiplication by `a in A` on the ambient space of `m`.
pub(crate) fn ring_scalar(m: &FMod, a: &[u64]) -> Mat {
    let mut out = Mat::zeros(m.md, m.dim, m.dim);
    for (k, &c) in a.iter().enumerate() {
        if c != 0 {
            out = out.add(&m.ops[k].scale(c));
        }
    }
    out
}

pub(crate) fn is_p_power(mut n: u64, p: u64) -> bool {
    while n > 1 && n % p == 0 {
        n /= p;
    }
    n == 1
}

/// Whether `op` maps `M` into its relations.
pub(crate) fn kills(m: &FMod, op: &Mat) -> bool {
    m.sub.rows().iter().all(|s| m.rel.contains(&op.apply(s)))
}

/// `f(X)` for coefficients low degree first.
pub(crate) fn poly_eval(m: &FMod, f: &[Elem], x: &Mat) -> Mat {
    let mut acc = Mat::zeros(m.md, m.dim, m.dim);
    for c in f.iter().rev() {
        acc = acc.mul(x).add(&ring_scalar(m, c));
    }
    acc
}

/// Operator of a group element, from the generator operators.
pub(crate) fn group_element_op(m: &FMod, group: &GroupModel, g: usize) -> Mat {
    let nr = m.n_ring_ops;
    let mut out = identity(m);
    for (i, k) in group.word(g) {
        out = m.ops[nr + i].pow(k).mul(&out);
    }
    out
}

/// Operator of an element of `A[Gamma_L]`.
pub(crate) fn algebra_op(m: &FMod, group: &GroupModel, a: &GElem) -> Mat {
    let mut out = Mat::zeros(m.md, m.dim, m.dim);
    for (g, c) in a.iter().enumerate() {
        if c.iter().any(|&x| x != 0) {
            out = out.add(&group_element_op(m, group, g).mul(&ring_scalar(m, c)));
        }
    }
    out
}

/// Monic `f` of least degree with `f(X) M = 0`; coefficients low degree
/// first, leading `1` included.
pub fn min_monic_annihilator(m: &FMod, ring: &Ring, x: &Mat) -> Result<Vec<Elem>, PerfectionError> {
    let na = ring.dim();
    let md = m.md;
    // generators as an A[X]-module suffice
    let mut ops: Vec<Mat> = m.ops[..m.n_ring_ops].to_vec();
    ops.push(x.clone());
    let mut span = m.rel.clone();
    let mut gens = vec![];
    for s in m.sub.rows() {
        if !span.contains(&s) {
            span = close_under(&span, vec![s.clone()], &ops);
            gens.push(s);
        }
    }
    if gens.is_empty() {
        return Ok(vec![ring.one()]);
    }
    let (g, dim) = (gens.len(), m.dim);
    let rel_rows = m.rel.rows();
    let bound = m.log_size() as usize * ring.length().max(1) as usize + 1;
    let mut pw: Vec<Vec<Vec<u64>>> = vec![gens];
    for n in 1..=bound {
        let next: Vec<Vec<u64>> = pw[n - 1].iter().map(|v| x.apply(v)).collect();
        pw.push(next);
        let mut rows = vec![];
        for t in 0..n {
            for k in 0..na {
                let mut r = vec![0; g * dim];
                for i in 0..g {
                    r[i * dim..(i + 1) * dim].copy_from_slice(&m.ops[k].apply(&pw[t][i]));
                }
                rows.push(r);
            }
        }
        for i in 0..g {
            for rr in &rel_rows {
                let mut r = vec![0; g * dim];
                r[i * dim..(i + 1) * dim].copy_from_slice(rr);
                rows.push(r);
            }
        }
        let rhs: Vec<u64> = pw[n].iter().flat_map(|v| v.iter().map(|&a| md.neg(a))).collect();
        let mat = Mat::from_rows(md, g * dim, &rows);
        if let Some(sol) = Solver::new(&mat).solve(&rhs)? {
            let mut f: Vec<Elem> = (0..n).map(|t| ring.canon(sol[t * na..(t + 1) * na].to_vec())).collect();
            f.push(ring.one());
            return Ok(f);
        }
    }
    Err(PerfectionError::NoAnnihilator(bound))
}

/// Distinguished polynomial generating the same ideal of `A[[x]]` as the
/// monic `f`.
pub fn prepare(ring: &Ring, f: &[Elem]) -> Result<Vec<Elem>, PerfectionError> {
    let n = f.len() - 1;
    if n == 0 {
        return Ok(vec![ring.one()]);
    }
    let t = n * (ring.nilpotency() + 1) + 1;
    let s = Series::from_elems(ring, t, f);
    let w = weierstrass(&s)?;
    Ok(w.h.c)
}

/// Prepared minimal monic annihilator, checked against `M`.
pub(crate) fn distinguished_annihilator(m: &FMod, ring: &Ring, x: &Mat) -> Result<Vec<Elem>, PerfectionError> {
    let f = min_monic_annihilator(m, ring, x)?;
    let h = prepare(ring, &f)?;
    if !kills(m, &poly_eval(m, &h, x)) {
        return Err(PerfectionError::Invariant("prepared annihilator does not annihilate".into()));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::AMat;

    #[test]
    fn annihilator_of_jordan_block() {
        let k = Ring::zq(2, 1).unwrap();
        // x acting as a nilpotent Jordan block of size 3
        let j = AMat::from_ints(&k, &[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        let m = FMod::free(&k, 3, &[j.clone()]);
        let x = m.ops[1].clone();
        let f = min_monic_annihilator(&m, &k, &x).unwrap();
        assert_eq!(f.len(), 4);
        assert!(f[..3].iter().all(|c| k.is_zero(c)));
    }

    #[test]
    fn annihilator_over_z4_is_prepared() {
        let z4 = Ring::zq(2, 2).unwrap();
        // x acting by the scalar 2: minimal monic is x - 2, already distinguished
        let m = FMod::free(&z4, 1, &[AMat::from_ints(&z4, &[&[2]])]);
        let x = m.ops[1].clone();
        let h = distinguished_annihilator(&m, &z4, &x).unwrap();
        assert_eq!(h, vec![z4.from_int(-2), z4.one()]);
    }
}
