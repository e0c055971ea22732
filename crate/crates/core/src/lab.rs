//! Quasi-lifts of the two-term complexes `V_y` over `Gamma = Z_2 x Z/2`.
//!
//! `V_y` is `k[G_y] -> k[G_l]` (augmentation followed by the trace line)
//! in degrees `-1, 0`, where `G_x` is the quotient of `Gamma` cutting out
//! `Q_l(sqrt x)`. Lifts over a small test ring `A` are enumerated in a
//! normal form, sorted into isomorphism classes by a derived test, and the
//! classes are compared with the morphisms out of the candidate versal rings.
//!
//! Matrices act on row vectors, like everywhere else in the crate; the
//! normal forms below are written for column vectors and transposed.

use crate::complex::{ComplexError, GComplex, GModule};
use crate::group::{GroupError, GroupModel};
use crate::linalg::{kernel, Howell, Mat, Modulus};
use crate::resolution::{hom_complex, hyper_ext, hypercochains, kummer_character, KoszulResolution, LModule, ResolutionError};
use crate::ring::{AMat, Elem, Poly, Ring, RingError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabError {
    #[error("l = {0} must be a prime congruent to 3 mod 4")]
    InvalidEll(u64),
    #[error("unknown y '{0}' (expected l, -1 or -l)")]
    UnknownY(String),
    #[error("the extension class vanishes: the complex is split")]
    Split,
    #[error("H^-1 and H^0 of the base complex must both be k, got sizes p^{0}, p^{1}")]
    BadCohomology(u32, u32),
    #[error("test ring {0} is not a quotient of W = Z/8 with residue field F_2")]
    BadRing(String),
    #[error("search budget of {0} candidates exceeded")]
    Budget(u64),
    #[error("normal form produced an invalid complex: {0}")]
    NormalForm(ComplexError),
    #[error(transparent)]
    Resolution(#[from] ResolutionError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// The three square classes `l, -1, -l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Y {
    #[serde(rename = "l")]
    Ell,
    #[serde(rename = "-1")]
    MinusOne,
    #[serde(rename = "-l")]
    MinusEll,
}

impl Y {
    pub const ALL: [Y; 3] = [Y::Ell, Y::MinusEll, Y::MinusOne];

    pub fn value(self, ell: u64) -> i64 {
        match self {
            Y::Ell => ell as i64,
            Y::MinusOne => -1,
            Y::MinusEll => -(ell as i64),
        }
    }

    pub fn parse(s: &str) -> Result<Y, LabError> {
        match s.trim() {
            "l" | "ell" => Ok(Y::Ell),
            "-1" => Ok(Y::MinusOne),
            "-l" | "-ell" => Ok(Y::MinusEll),
            _ => Err(LabError::UnknownY(s.into())),
        }
    }
}

impl fmt::Display for Y {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Y::Ell => "l",
            Y::MinusOne => "-1",
            Y::MinusEll => "-l",
        })
    }
}

/// `V_y` together with its group and extension class.
#[derive(Clone, Debug)]
pub struct DeformationProblem {
    pub y: Y,
    pub ell: u64,
    pub group: GroupModel,
    /// `V_y` over `F_2`, degrees `-1, 0`.
    pub base: GComplex,
    /// Class in `H^2(Gamma, k)` of `0 -> k -> V^-1 -> V^0 -> k -> 0`.
    pub beta: Vec<u64>,
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn permutation(k: &Ring, swap: bool) -> AMat {
    if swap {
        AMat::from_ints(k, &[&[0, 1], &[1, 0]])
    } else {
        AMat::identity(k, 2)
    }
}

/// `k[G_inner] -> k[G_outer]` for characters of `Z_2 x Z/2` given by
/// which generators move the square root.
pub fn two_term_complex(group: &GroupModel, outer: &[u64], inner: &[u64]) -> Result<GComplex, LabError> {
    let k = Ring::zq(2, 1)?;
    let acts = |chi: &[u64]| -> Vec<AMat> {
        (0..group.ngens()).map(|j| permutation(&k, chi.get(j).copied().unwrap_or(0) % 2 == 1)).collect()
    };
    let terms = vec![GModule { rank: 2, actions: acts(inner) }, GModule { rank: 2, actions: acts(outer) }];
    let d = AMat::from_ints(&k, &[&[1, 1], &[1, 1]]);
    Ok(GComplex::new(&k, group, -1, terms, vec![d])?)
}

/// Class of the 2-extension `0 -> H^-1 -> C^-1 -> C^0 -> H^0 -> 0` of a
/// two-term complex over `F_p` with `H^-1 = H^0 = k`, by comparison with
/// the minimal resolution.
pub fn extension_class(res: &KoszulResolution, c: &GComplex) -> Result<Vec<u64>, LabError> {
    let md = Modulus::new(res.p, 1).map_err(ResolutionError::from)?;
    let nv = res.gens[1].len();
    let fc = c.to_fcomplex();
    let (h1, h0) = (fc.cohomology_group(-1).log_size, fc.cohomology_group(0).log_size);
    if h1 != 1 || h0 != 1 {
        return Err(LabError::BadCohomology(h1, h0));
    }
    let module = |i: i32| -> LModule {
        let t = &c.terms[(i - c.lo) as usize];
        let n = t.rank;
        LModule { dim: n, xs: t.actions[..nv].iter().map(|w| w.residue().sub(&Mat::identity(md, n))).collect() }
    };
    let d = c.diff(-1).residue();
    let ker = kernel(&d).rows();
    let inc = Mat::from_rows(md, c.rank(-1), &ker[..1]);
    let image = Howell::of_rows(md, c.rank(0), d.row_vecs());
    let f0 = (0..c.rank(0))
        .map(|i| {
            let mut e = vec![0; c.rank(0)];
            e[i] = 1;
            e
        })
        .find(|e| !image.contains(e))
        .expect("H^0 is nonzero");
    let spaces = [module(0), module(-1), LModule::trivial(md, nv)];
    let maps = res.compare(&spaces, &[Mat::zeros(md, 0, 0), d, inc], &f0, 2)?;
    Ok(maps[2].iter().map(|v| v[0]).collect())
}

/// Builds `V_y` for `l = 3 mod 4` at the given truncation level of `Z_2`.
pub fn build_vy(y: Y, ell: u64, level: u32) -> Result<DeformationProblem, LabError> {
    if !is_prime(ell) || ell % 4 != 3 {
        return Err(LabError::InvalidEll(ell));
    }
    let group = GroupModel::z2_times_z2(level);
    let base = two_term_complex(&group, &kummer_character(ell as i64, ell), &kummer_character(y.value(ell), ell))?;
    let res = KoszulResolution::new(&group, 2)?;
    let beta = extension_class(&res, &base)?;
    if beta.iter().all(|&b| b == 0) {
        return Err(LabError::Split);
    }
    Ok(DeformationProblem { y, ell, group, base, beta })
}

impl DeformationProblem {
    /// The same problem for `Gamma x Z/order`, the new factor acting trivially.
    pub fn with_extra_factor(&self, order: u64) -> Result<DeformationProblem, LabError> {
        let name = format!("z{}", self.group.ngens() + 1 - self.core_gens());
        let group = self.group.times_cyclic(order, &name)?;
        let k = self.base.ring.clone();
        let terms = self
            .base
            .terms
            .iter()
            .map(|t| {
                let mut actions = t.actions.clone();
                actions.push(AMat::identity(&k, t.rank));
                GModule { rank: t.rank, actions }
            })
            .collect();
        let base = GComplex::new(&k, &group, self.base.lo, terms, self.base.diffs.clone())?;
        Ok(DeformationProblem { group, base, ..self.clone() })
    }

    /// Number of generators of `Z_2 x Z/2` (the rest are adjoined factors).
    fn core_gens(&self) -> usize {
        2
    }
}

// ---------------------------------------------------------------------------
// small-ring tables

type M2 = [usize; 4];

/// Addition and multiplication tables of a small ring.
struct Tables {
    ring: Ring,
    elems: Vec<Elem>,
    index: HashMap<Elem, usize>,
    add: Vec<Vec<usize>>,
    mul: Vec<Vec<usize>>,
    neg: Vec<usize>,
    inv: Vec<Option<usize>>,
    residue: Vec<u64>,
    zero: usize,
    one: usize,
}

impl Tables {
    fn new(ring: &Ring) -> Tables {
        let elems = ring.elements();
        let index: HashMap<Elem, usize> = elems.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let id = |e: Elem| index[&ring.canon(e)];
        let add = elems.iter().map(|a| elems.iter().map(|b| id(ring.add(a, b))).collect()).collect();
        let mul: Vec<Vec<usize>> = elems.iter().map(|a| elems.iter().map(|b| id(ring.mul(a, b))).collect()).collect();
        let neg = elems.iter().map(|a| id(ring.neg(a))).collect();
        let one = id(ring.one());
        let inv = (0..elems.len()).map(|a| (0..elems.len()).find(|&b| mul[a][b] == one)).collect();
        let residue = elems.iter().map(|a| ring.residue(a)).collect();
        Tables { ring: ring.clone(), zero: id(ring.zero()), one, elems, index, add, mul, neg, inv, residue }
    }

    fn size(&self) -> usize {
        self.elems.len()
    }

    fn int(&self, c: i64) -> usize {
        self.index[&self.ring.from_int(c)]
    }

    fn a(&self, x: usize, y: usize) -> usize {
        self.add[x][y]
    }

    fn s(&self, x: usize, y: usize) -> usize {
        self.add[x][self.neg[y]]
    }

    fn m(&self, x: usize, y: usize) -> usize {
        self.mul[x][y]
    }

    fn units(&self) -> Vec<usize> {
        (0..self.size()).filter(|&x| self.residue[x] != 0).collect()
    }

    fn maximal(&self) -> Vec<usize> {
        (0..self.size()).filter(|&x| self.residue[x] == 0).collect()
    }

    fn lifts_of(&self, r: u64) -> Vec<usize> {
        (0..self.size()).filter(|&x| self.residue[x] == r).collect()
    }

    fn mm(&self, x: &M2, y: &M2) -> M2 {
        let e = |i: usize, j: usize| self.a(self.m(x[2 * i], y[j]), self.m(x[2 * i + 1], y[2 + j]));
        [e(0, 0), e(0, 1), e(1, 0), e(1, 1)]
    }

    fn ident(&self) -> M2 {
        [self.one, self.zero, self.zero, self.one]
    }

    fn transpose(x: &M2) -> M2 {
        [x[0], x[2], x[1], x[3]]
    }

    fn minv(&self, x: &M2) -> Option<M2> {
        let det = self.s(self.m(x[0], x[3]), self.m(x[1], x[2]));
        let u = self.inv[det]?;
        Some([self.m(u, x[3]), self.m(u, self.neg[x[1]]), self.m(u, self.neg[x[2]]), self.m(u, x[0])])
    }

    fn order_divides(&self, x: &M2, n: u64) -> bool {
        let mut acc = self.ident();
        for _ in 0..n {
            acc = self.mm(&acc, x);
        }
        acc == self.ident()
    }

    fn order_is_p_power(&self, x: &M2, p: u64) -> bool {
        let mut acc = *x;
        for _ in 0..64 {
            if acc == self.ident() {
                return true;
            }
            let mut next = self.ident();
            for _ in 0..p {
                next = self.mm(&next, &acc);
            }
            acc = next;
        }
        false
    }

    fn to_amat(&self, x: &M2) -> AMat {
        AMat::from_elems(&self.ring, 2, 2, x.iter().map(|&i| self.elems[i].clone()).collect())
    }

    fn fmt(&self, x: usize) -> String {
        self.ring.fmt_elem(&self.elems[x])
    }

    /// All lifts of a residue matrix.
    fn matrix_lifts(&self, base: &[u64; 4]) -> Vec<M2> {
        let choices: Vec<Vec<usize>> = base.iter().map(|&r| self.lifts_of(r)).collect();
        let mut out = vec![];
        for &a in &choices[0] {
            for &b in &choices[1] {
                for &c in &choices[2] {
                    for &d in &choices[3] {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
        out
    }

    /// `I + x E_ij`, `x` in the maximal ideal: they generate the matrices
    /// congruent to the identity.
    fn congruence_generators(&self) -> Vec<M2> {
        let mut out = vec![];
        for x in self.maximal().into_iter().filter(|&x| x != self.zero) {
            for pos in 0..4 {
                let mut g = self.ident();
                g[pos] = self.a(g[pos], x);
                out.push(g);
            }
        }
        out
    }

    /// First generator, in element order, of the principal ideal `(x)`.
    fn canonical_generator(&self, x: usize) -> usize {
        let ideal: BTreeSet<usize> = (0..self.size()).map(|a| self.m(a, x)).collect();
        (0..self.size())
            .find(|&g| (0..self.size()).map(|a| self.m(a, g)).collect::<BTreeSet<_>>() == ideal)
            .expect("x generates its own ideal")
    }

    fn annihilator_size(&self, x: usize) -> usize {
        (0..self.size()).filter(|&a| self.m(a, x) == self.zero).count()
    }

    fn log2(n: usize) -> u32 {
        n.trailing_zeros()
    }
}

/// A lift of `V_y` by matrices: actions on `P^-1` and `P^0` (one per
/// generator) and the differential, all for row vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Lift {
    minus: Vec<M2>,
    zero: Vec<M2>,
    d: M2,
}

impl Lift {
    fn complex(&self, t: &Tables, group: &GroupModel) -> Result<GComplex, ComplexError> {
        let term = |ws: &[M2]| GModule { rank: 2, actions: ws.iter().map(|w| t.to_amat(w)).collect() };
        GComplex::new(&t.ring, group, -1, vec![term(&self.minus), term(&self.zero)], vec![t.to_amat(&self.d)])
    }

    /// Transport along the basis changes `(g_-1, g_0)`.
    fn transform(&self, t: &Tables, g: &[(M2, M2); 2]) -> Lift {
        let conj = |w: &M2, (gi, gi_inv): &(M2, M2)| t.mm(&t.mm(gi_inv, w), gi);
        Lift {
            minus: self.minus.iter().map(|w| conj(w, &g[0])).collect(),
            zero: self.zero.iter().map(|w| conj(w, &g[1])).collect(),
            d: t.mm(&t.mm(&g[0].1, &self.d), &g[1].0),
        }
    }

    fn equivariant(&self, t: &Tables) -> bool {
        self.minus.iter().zip(&self.zero).all(|(wm, w0)| t.mm(wm, &self.d) == t.mm(&self.d, w0))
    }
}

fn residue_matrix(m: &AMat) -> [u64; 4] {
    let r = m.residue();
    [r.get(0, 0), r.get(0, 1), r.get(1, 0), r.get(1, 1)]
}

// ---------------------------------------------------------------------------
// normal forms

/// Names of the free parameters of the normal form, in key order.
pub fn parameter_names(y: Y) -> &'static [&'static str] {
    match y {
        Y::Ell | Y::MinusEll => &["s1", "s2", "a"],
        Y::MinusOne => &["s1", "s2", "e", "gamma"],
    }
}

/// Column-convention normal form (P^-1 actions, P^0 actions, d) for the
/// parameter key, or `None` if the defining equations fail.
fn normal_form(y: Y, t: &Tables, key: &[usize]) -> Option<(Lift, Vec<(&'static str, usize)>)> {
    let (one, neg) = (t.one, |x: usize| t.neg[x]);
    let swap = [t.zero, one, one, t.zero];
    let (s1, s2) = (key[0], key[1]);
    if t.residue[s1] == 0 || t.residue[s2] == 0 {
        return None;
    }
    let one_minus_s2sq = t.s(one, t.m(s2, s2));
    let scalar = |s: usize| [s, t.zero, t.zero, s];
    match y {
        Y::Ell | Y::MinusEll => {
            let a = key[2];
            let unit_a = t.residue[a] != 0;
            if unit_a != (y == Y::Ell) {
                return None;
            }
            // (a - s1)(1 - s2^2) = 0, b = s2 (a - s1)
            if t.m(t.s(a, s1), one_minus_s2sq) != t.zero {
                return None;
            }
            let b = t.m(s2, t.s(a, s1));
            let d = [neg(s2), one, one, neg(s2)];
            let w1m = [a, b, b, a];
            let lambda = t.canonical_generator(one_minus_s2sq);
            let lift = Lift { minus: vec![w1m, swap], zero: vec![scalar(s1), swap], d };
            Some((lift, vec![("s1", s1), ("s2", s2), ("a", a), ("b", b), ("lambda", lambda)]))
        }
        Y::MinusOne => {
            let (e, g) = (key[2], key[3]);
            if t.residue[e] != 0 || t.residue[g] != 0 || one_minus_s2sq != t.zero {
                return None;
            }
            let two = t.int(2);
            // gamma (2 s2 + 2 gamma s1 - gamma e) = 0
            let inner = t.s(t.a(t.m(two, s2), t.m(two, t.m(g, s1))), t.m(g, e));
            if t.m(g, inner) != t.zero {
                return None;
            }
            let c = t.m(s1, t.s(s1, e));
            let alpha = t.s(neg(s2), t.m(g, s1));
            let w1m = [t.zero, c, one, e];
            let w2m = [alpha, t.m(g, c), g, t.a(alpha, t.m(g, e))];
            let d = [neg(s2), neg(t.m(s1, s2)), one, s1];
            let lift = Lift { minus: vec![w1m, w2m], zero: vec![scalar(s1), swap], d };
            Some((lift, vec![("s1", s1), ("s2", s2), ("e", e), ("gamma", g), ("c", c), ("lambda", t.zero)]))
        }
    }
}

fn to_rows(l: Lift) -> Lift {
    Lift {
        minus: l.minus.iter().map(Tables::transpose).collect(),
        zero: l.zero.iter().map(Tables::transpose).collect(),
        d: Tables::transpose(&l.d),
    }
}

fn parameter_keys(y: Y, t: &Tables) -> Vec<Vec<usize>> {
    let (u, m) = (t.units(), t.maximal());
    let third = if y == Y::Ell { &u } else { &m };
    let mut out = vec![];
    for &s1 in &u {
        for &s2 in &u {
            for &x in third {
                if y == Y::MinusOne {
                    for &g in &m {
                        out.push(vec![s1, s2, x, g]);
                    }
                } else {
                    out.push(vec![s1, s2, x]);
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// isomorphism of quasi-lifts

/// Decides whether two lifts are isomorphic quasi-lifts: some morphism in
/// the derived category (a degree-0 cocycle of the hypercochains of
/// `Hom_A`) reduces to a map homotopic to the identity of `V_y`.
struct Classifier {
    group: GroupModel,
    k_boundaries: Howell,
    identity: Vec<u64>,
    reps: Vec<(GComplex, Vec<u64>)>,
}

fn cohomology_key(c: &GComplex) -> Vec<u64> {
    let f = c.to_fcomplex();
    let mut key = f.cohomology_group(-1).invariants;
    key.push(0);
    key.extend(f.cohomology_group(0).invariants);
    key
}

/// Scalars by which the generators act on `H^0` (through the image of the
/// first basis vector) and on `H^-1` when it is free: both are invariants
/// of the quasi-lift.
fn scalar_key(t: &Tables, l: &Lift) -> Vec<usize> {
    let n = t.size();
    let d = &l.d;
    let mut image = std::collections::HashSet::new();
    for a in 0..n {
        for b in 0..n {
            image.insert((t.a(t.m(a, d[0]), t.m(b, d[2])), t.a(t.m(a, d[1]), t.m(b, d[3]))));
        }
    }
    let mut key = vec![];
    for w in &l.zero {
        key.push((0..n).find(|&c| image.contains(&(t.s(w[0], c), w[1]))).unwrap_or(usize::MAX));
    }
    let free_cycle = (0..n * n).map(|i| (i / n, i % n)).find(|&(a, b)| {
        (t.residue[a] != 0 || t.residue[b] != 0) && t.a(t.m(a, d[0]), t.m(b, d[2])) == t.zero && t.a(t.m(a, d[1]), t.m(b, d[3])) == t.zero
    });
    if let Some((a, b)) = free_cycle {
        for w in &l.minus {
            let v = (t.a(t.m(a, w[0]), t.m(b, w[2])), t.a(t.m(a, w[1]), t.m(b, w[3])));
            key.push((0..n).find(|&c| v == (t.m(c, a), t.m(c, b))).unwrap_or(usize::MAX));
        }
    }
    key
}

impl Classifier {
    fn new(problem: &DeformationProblem) -> Result<Classifier, LabError> {
        let v = &problem.base;
        let hom = hom_complex(v, v)?;
        let tot = hypercochains(&hom, &problem.group, 1)?;
        // the Hom^0 component with trivial group degree comes last in Tot^0
        let off = tot.dim(0) - hom.dim(0);
        let mut identity = vec![0; tot.dim(0)];
        let mut block = 0;
        for i in v.lo..=v.hi() {
            let r = v.rank(i);
            for j in 0..r {
                identity[off + block + j * r + j] = 1;
            }
            block += r * r;
        }
        debug_assert!(tot.cycles(0).contains(&identity));
        Ok(Classifier { group: problem.group.clone(), k_boundaries: tot.boundaries(0), identity, reps: vec![] })
    }

    fn iso(&self, a: &GComplex, b: &GComplex) -> Result<bool, LabError> {
        let hom = hom_complex(a, b)?;
        let tot = hypercochains(&hom, &self.group, 1)?;
        let ring = &a.ring;
        let na = ring.dim();
        let rows = tot.cycles(0).rows().iter().map(|r| r.chunks(na).map(|c| ring.residue(c)).collect()).collect();
        Ok(self.k_boundaries.add_rows(rows).contains(&self.identity))
    }

    /// Class index of `c`, creating a new class if needed. Only lifts with
    /// equal invariant keys are compared.
    fn locate(&mut self, c: &GComplex, lift: &Lift, t: &Tables) -> Result<(usize, bool), LabError> {
        let mut key = cohomology_key(c);
        key.extend(scalar_key(t, lift).into_iter().map(|x| x as u64));
        for (i, (r, k)) in self.reps.iter().enumerate() {
            if *k == key && self.iso(c, r)? {
                return Ok((i, false));
            }
        }
        self.reps.push((c.clone(), key));
        Ok((self.reps.len() - 1, true))
    }
}

// ---------------------------------------------------------------------------
// enumeration

/// One enumerated quasi-lift in normal form.
#[derive(Clone, Debug)]
pub struct QuasiLift {
    /// Normal-form parameters (free and derived).
    pub params: Vec<(String, Elem)>,
    /// Extra generators' matrices on `P^-1`, `P^0` (row convention).
    pub extra: Vec<(AMat, AMat)>,
    pub complex: GComplex,
    pub lambda: Elem,
    pub h0_log_size: u32,
    pub hm1_log_size: u32,
}

/// Isomorphism classes of quasi-lifts over one test ring.
#[derive(Clone, Debug)]
pub struct LiftClasses {
    pub y: Y,
    pub ring: Ring,
    pub lifts: Vec<QuasiLift>,
    /// Class index of each lift.
    pub class_of: Vec<usize>,
    /// First lift of each class.
    pub reps: Vec<usize>,
    keys: HashMap<Vec<usize>, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassReport {
    pub index: usize,
    pub parameters: BTreeMap<String, String>,
    pub matrices: BTreeMap<String, Vec<Vec<String>>>,
    pub lambda: String,
    pub proflat: bool,
    pub h0_log_size: u32,
    pub h_minus1_log_size: u32,
    /// Number of normal-form parameter tuples in the class.
    pub tuples: usize,
}

impl LiftClasses {
    pub fn class_count(&self) -> usize {
        self.reps.len()
    }

    pub fn is_proflat(&self, class: usize) -> bool {
        self.ring.is_zero(&self.lifts[self.reps[class]].lambda)
    }

    pub fn class_of_key(&self, key: &[usize]) -> Option<usize> {
        self.keys.get(key).map(|&i| self.class_of[i])
    }

    pub fn report(&self) -> Vec<ClassReport> {
        let r = &self.ring;
        self.reps
            .iter()
            .enumerate()
            .map(|(index, &li)| {
                let l = &self.lifts[li];
                let mut matrices = BTreeMap::new();
                for (deg, t) in [(-1, &l.complex.terms[0]), (0, &l.complex.terms[1])] {
                    for (g, w) in t.actions.iter().enumerate() {
                        matrices.insert(format!("{}[{deg}]", l.complex.group.gens[g].name), w.fmt_rows());
                    }
                }
                matrices.insert("d".into(), l.complex.diffs[0].fmt_rows());
                ClassReport {
                    index,
                    parameters: l.params.iter().map(|(n, e)| (n.clone(), r.fmt_elem(e))).collect(),
                    matrices,
                    lambda: r.fmt_elem(&l.lambda),
                    proflat: r.is_zero(&l.lambda),
                    h0_log_size: l.h0_log_size,
                    h_minus1_log_size: l.hm1_log_size,
                    tuples: self.class_of.iter().filter(|&&c| c == index).count(),
                }
            })
            .collect()
    }
}

fn check_ring(ring: &Ring) -> Result<(), LabError> {
    let md = ring.md();
    if md.p() != 2 || 8 % md.q() != 0 {
        return Err(LabError::BadRing(ring.name().into()));
    }
    Ok(())
}

/// Matrices for the adjoined factors: congruent to the identity, of the
/// right order, commuting with the other actions, compatible with `d`.
fn extra_actions(t: &Tables, group: &GroupModel, core: usize, lift: &Lift) -> Vec<Vec<(M2, M2)>> {
    let congruent = t.matrix_lifts(&[1, 0, 0, 1]);
    let mut out: Vec<Vec<(M2, M2)>> = vec![vec![]];
    for g in core..group.ngens() {
        let order = group.gens[g].order;
        let ok = |w: &M2, others: &[M2]| t.order_divides(w, order) && others.iter().all(|o| t.mm(o, w) == t.mm(w, o));
        let mut next = vec![];
        for prev in &out {
            let mut om = lift.minus.clone();
            let mut oz = lift.zero.clone();
            om.extend(prev.iter().map(|p| p.0));
            oz.extend(prev.iter().map(|p| p.1));
            let cm: Vec<&M2> = congruent.iter().filter(|w| ok(w, &om)).collect();
            let cz: Vec<&M2> = congruent.iter().filter(|w| ok(w, &oz)).collect();
            for wm in &cm {
                for wz in &cz {
                    if t.mm(wm, &lift.d) == t.mm(&lift.d, wz) {
                        let mut v = prev.clone();
                        v.push((**wm, **wz));
                        next.push(v);
                    }
                }
            }
        }
        out = next;
    }
    out
}

/// All normal-form quasi-lifts over `ring` and their isomorphism classes.
pub fn enumerate_lifts(problem: &DeformationProblem, ring: &Ring, budget: u64) -> Result<LiftClasses, LabError> {
    check_ring(ring)?;
    let t = Tables::new(ring);
    let keys = parameter_keys(problem.y, &t);
    if keys.len() as u64 > budget {
        return Err(LabError::Budget(budget));
    }
    let core = problem.core_gens();
    let mut classifier = Classifier::new(problem)?;
    let mut out = LiftClasses { y: problem.y, ring: ring.clone(), lifts: vec![], class_of: vec![], reps: vec![], keys: HashMap::new() };
    let base: Vec<[u64; 4]> = problem.base.terms.iter().flat_map(|m| m.actions.iter().map(residue_matrix)).collect();
    let mut spent = keys.len() as u64;
    for key in keys {
        let Some((col, params)) = normal_form(problem.y, &t, &key) else { continue };
        let lift = to_rows(col);
        for extra in extra_actions(&t, &problem.group, core, &lift) {
            spent += 1;
            if spent > budget {
                return Err(LabError::Budget(budget));
            }
            let mut full = lift.clone();
            full.minus.extend(extra.iter().map(|e| e.0));
            full.zero.extend(extra.iter().map(|e| e.1));
            let complex = full.complex(&t, &problem.group).map_err(LabError::NormalForm)?;
            let red: Vec<[u64; 4]> = complex.terms.iter().flat_map(|m| m.actions.iter().map(residue_matrix)).collect();
            if red != base || complex.diffs[0].residue() != problem.base.diffs[0].residue() {
                return Err(LabError::NormalForm(ComplexError::Shape("reduction differs from V_y".into())));
            }
            let lambda = params.iter().find(|p| p.0 == "lambda").map_or(t.zero, |p| p.1);
            let fc = complex.to_fcomplex();
            let (h0, hm1) = (fc.cohomology_group(0).log_size, fc.cohomology_group(-1).log_size);
            let expect_h0 = Tables::log2(t.size()) - Tables::log2(t.size() / t.annihilator_size(lambda));
            let expect_hm1 = Tables::log2(t.annihilator_size(lambda));
            if h0 != expect_h0 || hm1 != expect_hm1 {
                return Err(LabError::NormalForm(ComplexError::Shape(format!(
                    "cohomology sizes {hm1}, {h0} do not match lambda = {}",
                    t.fmt(lambda)
                ))));
            }
            let (class, new) = classifier.locate(&complex, &full, &t)?;
            let idx = out.lifts.len();
            if extra.is_empty() {
                out.keys.insert(key.clone(), idx);
            }
            if new {
                out.reps.push(idx);
            }
            out.class_of.push(class);
            out.lifts.push(QuasiLift {
                params: params.iter().map(|(n, e)| (n.to_string(), t.elems[*e].clone())).collect(),
                extra: extra.iter().map(|(a, b)| (t.to_amat(a), t.to_amat(b))).collect(),
                complex,
                lambda: t.elems[lambda].clone(),
                h0_log_size: h0,
                hm1_log_size: hm1,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// raw enumeration

/// Unconstrained enumeration of all equivariant lifts of `V_y` with
/// `A`-free terms of rank 2, cross-checked against the normal forms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RawReport {
    pub y: Y,
    pub ring: String,
    pub candidates: u64,
    pub equivariant: usize,
    /// Orbits under basis changes congruent to the identity.
    pub strict_orbits: usize,
    /// Derived isomorphism classes among all raw lifts.
    pub classes: usize,
    pub normal_form_classes: usize,
    /// Raw classes not isomorphic to any normal form.
    pub unmatched: usize,
    /// Every normal-form lift occurs among the raw lifts.
    pub normal_forms_contained: bool,
}

fn term_candidates(t: &Tables, group: &GroupModel, base: &[AMat]) -> Vec<Vec<M2>> {
    let mut out: Vec<Vec<M2>> = vec![vec![]];
    for (g, w) in base.iter().enumerate() {
        let gen = &group.gens[g];
        let lifts: Vec<M2> = t
            .matrix_lifts(&residue_matrix(w))
            .into_iter()
            .filter(|m| match gen.kind {
                crate::group::GenKind::Finite => t.order_divides(m, gen.order),
                crate::group::GenKind::Procyclic => t.order_is_p_power(m, group.p),
            })
            .collect();
        let mut next = vec![];
        for prev in &out {
            for m in &lifts {
                if prev.iter().all(|o| t.mm(o, m) == t.mm(m, o)) {
                    let mut v = prev.clone();
                    v.push(*m);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn raw_cross_check(problem: &DeformationProblem, ring: &Ring, budget: u64) -> Result<RawReport, LabError> {
    check_ring(ring)?;
    let t = Tables::new(ring);
    let v = &problem.base;
    let tm = term_candidates(&t, &problem.group, &v.terms[0].actions);
    let t0 = term_candidates(&t, &problem.group, &v.terms[1].actions);
    let ds = t.matrix_lifts(&residue_matrix(&v.diffs[0]));
    let per_entry = t.maximal().len() as u64;
    let ngens = problem.group.ngens() as u32;
    let candidates = per_entry.pow(4 * (2 * ngens + 1));
    let work = (tm.len() * t0.len() * ds.len()) as u64;
    if work > budget {
        return Err(LabError::Budget(budget));
    }
    let mut lifts = vec![];
    for m in &tm {
        for z in &t0 {
            for d in &ds {
                let l = Lift { minus: m.clone(), zero: z.clone(), d: *d };
                if l.equivariant(&t) {
                    lifts.push(l);
                }
            }
        }
    }
    let index: HashMap<Lift, usize> = lifts.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
    let mut parent: Vec<usize> = (0..lifts.len()).collect();
    let gens: Vec<(M2, M2)> = t.congruence_generators().into_iter().map(|g| (g, t.minv(&g).expect("congruent to 1"))).collect();
    let id = (t.ident(), t.ident());
    for (i, l) in lifts.iter().enumerate() {
        for g in &gens {
            for pair in [[*g, id], [id, *g]] {
                let j = index[&l.transform(&t, &pair)];
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let roots: BTreeSet<usize> = (0..lifts.len()).map(|i| find(&mut parent, i)).collect();
    let nf = enumerate_lifts(problem, ring, budget)?;
    let mut classifier = Classifier::new(problem)?;
    let conv = |m: &AMat| -> M2 {
        let e: Vec<usize> = m.e.iter().map(|x| t.index[x]).collect();
        [e[0], e[1], e[2], e[3]]
    };
    let as_lift = |c: &GComplex| Lift {
        minus: c.terms[0].actions.iter().map(conv).collect(),
        zero: c.terms[1].actions.iter().map(conv).collect(),
        d: conv(&c.diffs[0]),
    };
    let normal_forms_contained = nf.lifts.iter().all(|q| index.contains_key(&as_lift(&q.complex)));
    for &r in &nf.reps {
        let c = &nf.lifts[r].complex;
        classifier.locate(c, &as_lift(c), &t)?;
    }
    let mut hit = BTreeSet::new();
    let mut unmatched = 0;
    for &r in &roots {
        let c = lifts[r].complex(&t, &problem.group)?;
        let (k, new) = classifier.locate(&c, &lifts[r], &t)?;
        if new {
            unmatched += 1;
        }
        hit.insert(k);
    }
    Ok(RawReport {
        y: problem.y,
        ring: ring.name().into(),
        candidates,
        equivariant: lifts.len(),
        strict_orbits: roots.len(),
        classes: hit.len(),
        normal_form_classes: nf.class_count(),
        unmatched,
        normal_forms_contained,
    })
}

// ---------------------------------------------------------------------------
// tangent space

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TangentReport {
    pub y: Y,
    pub ring: String,
    pub count: usize,
    pub dimension: u32,
    pub power_of_two: bool,
    /// `dim Ext^1(V_y, V_y)` from the hypercochain model.
    pub ext1_dimension: u32,
    pub agrees: bool,
}

pub fn tangent_space(problem: &DeformationProblem) -> Result<TangentReport, LabError> {
    let ring = Ring::dual_numbers(2)?;
    let classes = enumerate_lifts(problem, &ring, 1 << 20)?;
    let count = classes.class_count();
    let ext = hyper_ext(&problem.base, &problem.base, 1, 2)?;
    let dimension = count.trailing_zeros();
    Ok(TangentReport {
        y: problem.y,
        ring: ring.name().into(),
        count,
        dimension,
        power_of_two: count.is_power_of_two(),
        ext1_dimension: ext.log_size,
        agrees: count.is_power_of_two() && dimension == ext.log_size,
    })
}

// ---------------------------------------------------------------------------
// versality

/// `W[[t_1..t_n]]/(relations)` with `W` truncated to `Z/2^w_exponent`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VersalRingSpec {
    pub name: String,
    pub vars: Vec<String>,
    pub relations: Vec<String>,
    pub w_exponent: u32,
}

impl VersalRingSpec {
    fn new(name: &str, nvars: usize, relations: &[&str]) -> VersalRingSpec {
        VersalRingSpec {
            name: name.into(),
            vars: (1..=nvars).map(|i| format!("t{i}")).collect(),
            relations: relations.iter().map(|s| s.to_string()).collect(),
            w_exponent: 3,
        }
    }

    fn polys(&self) -> Result<Vec<Poly>, LabError> {
        let vars: Vec<&str> = self.vars.iter().map(|s| s.as_str()).collect();
        Ok(self.relations.iter().map(|r| Poly::parse(r, &vars)).collect::<Result<_, _>>()?)
    }

    /// All `t in m_A^n` satisfying the relations (the local `W`-algebra
    /// maps to `A`).
    fn morphisms(&self, t: &Tables) -> Result<Vec<Vec<usize>>, LabError> {
        let polys = self.polys()?;
        let m = t.maximal();
        let n = self.vars.len();
        let mut out = vec![];
        let mut idx = vec![0usize; n];
        loop {
            let vals: Vec<Elem> = idx.iter().map(|&i| t.elems[m[i]].clone()).collect();
            if polys.iter().all(|p| t.ring.is_zero(&t.ring.eval(p, &vals))) {
                out.push(idx.iter().map(|&i| m[i]).collect());
            }
            let mut j = 0;
            loop {
                if j == n {
                    return Ok(out);
                }
                idx[j] += 1;
                if idx[j] < m.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }
}

pub fn versal_ring(y: Y) -> VersalRingSpec {
    match y {
        Y::Ell => VersalRingSpec::new("R(V_l)", 3, &["t2*t3*(2+t3)"]),
        Y::MinusEll => VersalRingSpec::new("R(V_-l)", 3, &["t3*(2+t3)"]),
        Y::MinusOne => VersalRingSpec::new("R(V_-1)", 4, &["t2*(2+t2)", "t4*(2+2*t2-t3*t4)"]),
    }
}

pub fn proflat_ring(y: Y) -> VersalRingSpec {
    match y {
        Y::Ell => VersalRingSpec::new("Rfl(V_l)", 3, &["t3*(2+t3)"]),
        Y::MinusEll => VersalRingSpec::new("Rfl(V_-l)", 3, &["t3*(2+t3)"]),
        Y::MinusOne => VersalRingSpec::new("Rfl(V_-1)", 4, &["t2*(2+t2)", "t4*(2+2*t2-t3*t4)"]),
    }
}

/// Normal-form key of the specialization along `t`.
fn dictionary(y: Y, t: &Tables, tv: &[usize]) -> Vec<usize> {
    let one = t.one;
    let s1 = t.a(one, tv[0]);
    match y {
        // s1 = 1 + t1, a = s1 + t2, s2 = 1 + t3
        Y::Ell => vec![s1, t.a(one, tv[2]), t.a(s1, tv[1])],
        // a = t2 itself: a - s1 is a unit here
        Y::MinusEll => vec![s1, t.a(one, tv[2]), tv[1]],
        // s2 = 1 + t2, e = t3 + 2 s1, gamma = t4
        Y::MinusOne => vec![s1, t.a(one, tv[1]), t.a(tv[2], t.m(t.int(2), s1)), tv[3]],
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NonProflatWitness {
    pub class: usize,
    pub lambda: String,
    /// A morphism from the full ring hitting the class.
    pub morphism: Option<Vec<String>>,
    pub hit_by_proflat: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VersalityReport {
    pub ring_spec: VersalRingSpec,
    pub proflat_spec: VersalRingSpec,
    pub morphisms: usize,
    pub proflat_morphisms: usize,
    pub surjective: bool,
    /// Distinct morphisms give distinct classes.
    pub injective: bool,
    pub bijective: bool,
    /// Classes not hit by the full ring.
    pub misses: Vec<usize>,
    /// Morphisms whose specialization leaves the normal form (must be empty).
    pub invalid_images: Vec<Vec<String>>,
    pub proflat_classes: Vec<usize>,
    pub proflat_hits: Vec<usize>,
    /// The proflat ring hits exactly the proflat classes.
    pub proflat_exact: bool,
    pub non_proflat: Vec<NonProflatWitness>,
}

pub fn verify_versality(problem: &DeformationProblem, classes: &LiftClasses) -> Result<VersalityReport, LabError> {
    let t = Tables::new(&classes.ring);
    let (full, fl) = (versal_ring(problem.y), proflat_ring(problem.y));
    let fmt = |tv: &[usize]| tv.iter().map(|&x| t.fmt(x)).collect::<Vec<_>>();
    let mut invalid_images = vec![];
    let mut images = |spec: &VersalRingSpec| -> Result<Vec<(Vec<usize>, usize)>, LabError> {
        let mut out = vec![];
        for tv in spec.morphisms(&t)? {
            match classes.class_of_key(&dictionary(problem.y, &t, &tv)) {
                Some(c) => out.push((tv, c)),
                None => invalid_images.push(fmt(&tv)),
            }
        }
        Ok(out)
    };
    let (hits, fl_hits) = (images(&full)?, images(&fl)?);
    let n = classes.class_count();
    let hit: BTreeSet<usize> = hits.iter().map(|h| h.1).collect();
    let fl_hit: BTreeSet<usize> = fl_hits.iter().map(|h| h.1).collect();
    let misses: Vec<usize> = (0..n).filter(|c| !hit.contains(c)).collect();
    let proflat_classes: Vec<usize> = (0..n).filter(|&c| classes.is_proflat(c)).collect();
    let injective = hit.len() == hits.len();
    let non_proflat = (0..n)
        .filter(|&c| !classes.is_proflat(c))
        .map(|c| NonProflatWitness {
            class: c,
            lambda: classes.ring.fmt_elem(&classes.lifts[classes.reps[c]].lambda),
            morphism: hits.iter().find(|h| h.1 == c).map(|h| fmt(&h.0)),
            hit_by_proflat: fl_hit.contains(&c),
        })
        .collect();
    Ok(VersalityReport {
        morphisms: hits.len(),
        proflat_morphisms: fl_hits.len(),
        surjective: misses.is_empty() && invalid_images.is_empty(),
        injective,
        bijective: misses.is_empty() && injective && invalid_images.is_empty(),
        misses,
        invalid_images,
        proflat_exact: fl_hit.iter().copied().collect::<Vec<_>>() == proflat_classes,
        proflat_hits: fl_hit.into_iter().collect(),
        proflat_classes,
        non_proflat,
        ring_spec: full,
        proflat_spec: fl,
    })
}

/// The lab's per-ring artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabReport {
    pub y: Y,
    pub ring: String,
    pub class_count: usize,
    pub classes: Vec<ClassReport>,
    pub versality: VersalityReport,
}

pub fn lab_report(problem: &DeformationProblem, ring: &Ring, budget: u64) -> Result<LabReport, LabError> {
    let classes = enumerate_lifts(problem, ring, budget)?;
    let versality = verify_versality(problem, &classes)?;
    Ok(LabReport {
        y: problem.y,
        ring: ring.name().into(),
        class_count: classes.class_count(),
        classes: classes.report(),
        versality,
    })
}

// ---------------------------------------------------------------------------
// inflation

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InflationRow {
    pub ring: String,
    pub base_count: usize,
    pub extended_count: usize,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InflationReport {
    pub y: Y,
    pub extra_order: u64,
    pub rows: Vec<InflationRow>,
    pub agree: bool,
}

/// Class counts for `Gamma` and `Gamma x Z/order` over each ring.
pub fn inflation_check(problem: &DeformationProblem, order: u64, rings: &[Ring], budget: u64) -> Result<InflationReport, LabError> {
    let ext = problem.with_extra_factor(order)?;
    let mut rows = vec![];
    for ring in rings {
        let a = enumerate_lifts(problem, ring, budget)?.class_count();
        let b = enumerate_lifts(&ext, ring, budget)?.class_count();
        rows.push(InflationRow { ring: ring.name().into(), base_count: a, extended_count: b, agree: a == b });
    }
    Ok(InflationReport { y: problem.y, extra_order: order, agree: rows.iter().all(|r| r.agree), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_complex_is_rejected() {
        let group = GroupModel::z2_times_z2(3);
        let res = KoszulResolution::new(&group, 2).unwrap();
        let c = two_term_complex(&group, &[0, 1], &[0, 0]).unwrap();
        assert!(extension_class(&res, &c).unwrap().iter().all(|&b| b == 0));
        assert!(matches!(build_vy(Y::Ell, 7, 3), Ok(_)));
        assert_eq!(build_vy(Y::Ell, 5, 3).unwrap_err(), LabError::InvalidEll(5));
    }

    #[test]
    fn trivial_ring_has_one_class() {
        for y in Y::ALL {
            let p = build_vy(y, 3, 3).unwrap();
            let c = enumerate_lifts(&p, &Ring::zq(2, 1).unwrap(), 1 << 20).unwrap();
            assert_eq!(c.class_count(), 1, "{y}");
        }
    }

    #[test]
    fn dual_number_counts() {
        let counts: Vec<usize> = Y::ALL
            .iter()
            .map(|&y| enumerate_lifts(&build_vy(y, 3, 3).unwrap(), &Ring::dual_numbers(2).unwrap(), 1 << 20).unwrap().class_count())
            .collect();
        assert_eq!(counts, vec![8, 8, 16]);
    }

    #[test]
    fn tangent_matches_ext1() {
        for y in Y::ALL {
            let r = tangent_space(&build_vy(y, 7, 3).unwrap()).unwrap();
            assert!(r.agrees, "{r:?}");
        }
    }

    #[test]
    fn extension_class_is_the_cup_product() {
        let table = crate::resolution::cup_table(3, 3).unwrap();
        for (y, name) in [(Y::Ell, "beta_l"), (Y::MinusOne, "beta_-1"), (Y::MinusEll, "beta_-l")] {
            let beta = &table.extension_classes.iter().find(|c| c.name == name).unwrap().vector;
            assert_eq!(&build_vy(y, 3, 3).unwrap().beta, beta);
        }
    }

    #[test]
    fn derived_test_separates_representatives() {
        let p = build_vy(Y::Ell, 3, 3).unwrap();
        let c = enumerate_lifts(&p, &Ring::dual_numbers(2).unwrap(), 1 << 20).unwrap();
        let cl = Classifier::new(&p).unwrap();
        for (i, &a) in c.reps.iter().enumerate() {
            for (j, &b) in c.reps.iter().enumerate() {
                assert_eq!(cl.iso(&c.lifts[a].complex, &c.lifts[b].complex).unwrap(), i == j);
            }
        }
    }

    #[test]
    fn raw_enumeration_agrees_over_dual_numbers() {
        let p = build_vy(Y::Ell, 3, 3).unwrap();
        let r = raw_cross_check(&p, &Ring::dual_numbers(2).unwrap(), 1 << 22).unwrap();
        assert_eq!((r.classes, r.normal_form_classes, r.unmatched), (8, 8, 0));
        assert!(r.normal_forms_contained);
        // strict basis changes do not see homotopies
        assert!(r.strict_orbits > r.classes);
    }

    #[test]
    fn non_proflat_lift_over_truncated_polynomials() {
        let p = build_vy(Y::Ell, 3, 3).unwrap();
        let ring = Ring::truncated_poly(2, 1, "u", 3).unwrap();
        let c = enumerate_lifts(&p, &ring, 1 << 20).unwrap();
        let u2 = ring.mul(&ring.var(0), &ring.var(0));
        let l = c.lifts.iter().find(|l| l.lambda == u2).expect("lambda = u^2 occurs");
        // H^0 = A/(u^2), H^-1 = Ann(u^2) = (u): both of order 4
        assert_eq!((l.h0_log_size, l.hm1_log_size), (2, 2));
        let v = verify_versality(&p, &c).unwrap();
        assert!(v.surjective && v.proflat_exact);
        assert!(v.non_proflat.iter().all(|w| w.morphism.is_some() && !w.hit_by_proflat));
    }

    #[test]
    fn inflation_with_z3_over_dual_numbers() {
        let p = build_vy(Y::MinusEll, 3, 3).unwrap();
        let r = inflation_check(&p, 3, &[Ring::dual_numbers(2).unwrap()], 1 << 22).unwrap();
        assert!(r.agree);
        assert_eq!(r.rows[0].extended_count, 8);
    }
}
