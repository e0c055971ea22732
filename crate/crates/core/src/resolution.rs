//! Continuous group cohomology, hyper-Ext, cup products and free
//! resolutions over finite group algebras.
//!
//! Cohomology of an abelian model uses the tensor product of the small
//! resolutions of its cyclic factors: `[M --(g-1)--> M]` for a procyclic
//! generator (continuous cohomology of `Z_p` with finite coefficients) and
//! the periodic `(g-1), N, (g-1), ...` complex for a finite cyclic one.
//! Cup products are Yoneda composites over `Lambda = F_p[x_j]/(...)`,
//! `x_j = w_j - 1`, using the matching free resolution of `F_p`.

use crate::complex::{
    check_quasi_iso_above, close_under, direct_sum, free_rel, preimage, ring_ops, ChainMap, ComplexError, FComplex,
    FMod, GComplex, QuasiIsoCertificate, QuasiIsoRefutation,
};
use crate::group::{Case, GenKind, GroupModel};
use crate::linalg::{Howell, LinalgError, Mat, Modulus, Solver};
use crate::ring::{AMat, Elem, Poly, Ring, RingError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolutionError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("the cochain model needs an abelian (case A) group")]
    NotAbelian,
    #[error("generator {0} does not have p-power order")]
    NotPGroup(String),
    #[error("chain map lift failed in degree {0}; raise the truncation")]
    LiftFailed(usize),
    #[error("cohomology in degree {0} changed between depths {1} and {2}")]
    Unstable(i32, usize, usize),
    #[error("resolution map is not a quasi-isomorphism: {0:?}")]
    NotQuasiIso(QuasiIsoRefutation),
    #[error("cover: {0}")]
    Cover(String),
    #[error("the two complexes live over different rings or groups")]
    Mismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Factor {
    Procyclic,
    Cyclic(u64),
}

fn factors(group: &GroupModel) -> Result<Vec<Factor>, ResolutionError> {
    if group.case != Case::A {
        return Err(ResolutionError::NotAbelian);
    }
    Ok(group
        .gens
        .iter()
        .map(|g| match g.kind {
            GenKind::Procyclic => Factor::Procyclic,
            GenKind::Finite => Factor::Cyclic(g.order),
        })
        .collect())
}

/// Multi-indices of total degree `s`; procyclic entries are at most 1.
fn multi_indices(f: &[Factor], s: usize) -> Vec<Vec<usize>> {
    fn rec(f: &[Factor], j: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if j == f.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let max = match f[j] {
            Factor::Procyclic => left.min(1),
            Factor::Cyclic(_) => left,
        };
        for a in (0..=max).rev() {
            cur[j] = a;
            rec(f, j + 1, left - a, cur, out);
        }
        cur[j] = 0;
    }
    let mut out = vec![];
    rec(f, 0, s, &mut vec![0; f.len()], &mut out);
    out
}

fn norm_op(w: &Mat, order: u64) -> Mat {
    let mut acc = Mat::zeros(w.md, w.rows, w.cols);
    let mut pw = Mat::identity(w.md, w.rows);
    for _ in 0..order {
        acc = acc.add(&pw);
        pw = pw.mul(w);
    }
    acc
}

fn signed(m: Mat, odd: bool) -> Mat {
    if odd {
        m.neg()
    } else {
        m
    }
}

/// Total complex of `C` tensored with the cochain model of the group, in
/// total degrees `[C.lo, top]`. Its cohomology in degrees `< top` is the
/// continuous hypercohomology `H^n(Gamma, C)`.
pub fn hypercochains(c: &FComplex, group: &GroupModel, top: i32) -> Result<FComplex, ResolutionError> {
    let f = factors(group)?;
    let md = c.md;
    let nr = c.n_ring_ops;
    if c.terms.is_empty() || top < c.lo {
        return Ok(FComplex::zero(md, c.nops, nr));
    }
    let lo = c.lo;
    let comps = |n: i32| -> Vec<(i32, Vec<usize>)> {
        let mut v = vec![];
        for i in c.lo..=c.hi().min(n) {
            for q in multi_indices(&f, (n - i) as usize) {
                v.push((i, q));
            }
        }
        v
    };
    let all: Vec<Vec<(i32, Vec<usize>)>> = (lo..=top).map(comps).collect();
    let offsets = |cs: &[(i32, Vec<usize>)]| -> (Vec<usize>, usize) {
        let mut o = vec![];
        let mut acc = 0;
        for (i, _) in cs {
            o.push(acc);
            acc += c.dim(*i);
        }
        (o, acc)
    };
    let mut terms = vec![];
    for cs in &all {
        let mut t = FMod::zero(md, c.nops, nr);
        for (i, _) in cs {
            t = direct_sum(&t, &c.term(*i));
        }
        terms.push(t);
    }
    let mut diffs = vec![];
    for n in lo..top {
        let (src, dst) = (&all[(n - lo) as usize], &all[(n + 1 - lo) as usize]);
        let ((so, rows), (dof, cols)) = (offsets(src), offsets(dst));
        let mut m = Mat::zeros(md, rows, cols);
        for (a, (i, q)) in src.iter().enumerate() {
            let t = c.term(*i);
            if t.dim == 0 {
                continue;
            }
            for j in 0..f.len() {
                let mut q2 = q.clone();
                q2[j] += 1;
                if f[j] == Factor::Procyclic && q2[j] > 1 {
                    continue;
                }
                let b = dst.iter().position(|x| x.0 == *i && x.1 == q2).expect("target component");
                let w = &t.ops[nr + j];
                let op = match f[j] {
                    Factor::Cyclic(o) if q[j] % 2 == 1 => norm_op(w, o),
                    _ => w.sub(&Mat::identity(md, t.dim)),
                };
                let odd = q[..j].iter().sum::<usize>() % 2 == 1;
                m.put_block(so[a], dof[b], &signed(op, odd));
            }
            if *i < c.hi() && c.dim(i + 1) > 0 {
                let b = dst.iter().position(|x| x.0 == i + 1 && x.1 == *q).expect("target component");
                let odd = q.iter().sum::<usize>() % 2 == 1;
                m.put_block(so[a], dof[b], &signed(c.diff(*i), odd));
            }
        }
        diffs.push(m);
    }
    Ok(FComplex { md, lo, terms, diffs, nops: c.nops, n_ring_ops: nr })
}

/// `log_p |H^s(Gamma, M)|` for `s = 0..=max_degree`, computed at two
/// truncation depths which must agree.
pub fn group_cohomology(group: &GroupModel, m: &FMod, max_degree: usize) -> Result<Vec<u32>, ResolutionError> {
    let c = FComplex { md: m.md, lo: 0, terms: vec![m.clone()], diffs: vec![], nops: m.ops.len(), n_ring_ops: m.n_ring_ops };
    let top = max_degree as i32 + 1;
    let (a, b) = (hypercochains(&c, group, top)?, hypercochains(&c, group, top + 2)?);
    let mut out = vec![];
    for s in 0..=max_degree as i32 {
        let (x, y) = (a.cohomology_group(s).log_size, b.cohomology_group(s).log_size);
        if x != y {
            return Err(ResolutionError::Unstable(s, top as usize, top as usize + 2));
        }
        out.push(x);
    }
    Ok(out)
}

fn action_inverse(w: &AMat) -> AMat {
    let id = AMat::identity(&w.ring, w.rows);
    let mut prev = id.clone();
    let mut cur = w.clone();
    for _ in 0..1 << 16 {
        if cur == id {
            return prev;
        }
        prev = cur.clone();
        cur = cur.mul(w);
    }
    panic!("action matrix of infinite order")
}

fn unit_elem(ring: &Ring, c: usize) -> Elem {
    let mut e = vec![0; ring.dim()];
    e[c] = 1;
    ring.canon(e)
}

/// `Hom_A(X, Y)` as a complex of finite modules with the conjugation action
/// `g f = W_X(g)^-1 f W_Y(g)`; `d f = f d_Y - (-1)^q d_X f` in degree `q`.
/// Its degree-0 cycles are the chain maps.
pub fn hom_complex(x: &GComplex, y: &GComplex) -> Result<FComplex, ResolutionError> {
    if x.ring != y.ring || *x.group != *y.group {
        return Err(ResolutionError::Mismatch);
    }
    let ring = &x.ring;
    let md = ring.md();
    let na = ring.dim();
    let ng = x.group.ngens();
    let nr = na;
    if x.terms.is_empty() || y.terms.is_empty() {
        return Ok(FComplex::zero(md, nr + ng, nr));
    }
    let (qlo, qhi) = (y.lo - x.hi(), y.hi() - x.lo);
    // layout of Hom^q: components i with an (rank X^i) x (rank Y^{i+q}) block
    let layout = |q: i32| -> (Vec<(i32, usize, usize, usize)>, usize) {
        let mut v = vec![];
        let mut off = 0;
        for i in x.lo..=x.hi() {
            let (rx, ry) = (x.rank(i), y.rank(i + q));
            if rx * ry > 0 {
                v.push((i, rx, ry, off));
                off += rx * ry;
            }
        }
        (v, off)
    };
    let coords = |m: &AMat, ring: &Ring, out: &mut [u64], off: usize| {
        for r in 0..m.rows {
            for c in 0..m.cols {
                let e = m.get(r, c);
                let k = (off + r * m.cols + c) * ring.dim();
                out[k..k + ring.dim()].copy_from_slice(e);
            }
        }
    };
    let inv_x: Vec<Vec<AMat>> = x.terms.iter().map(|t| t.actions.iter().map(action_inverse).collect()).collect();
    let mut terms = vec![];
    let mut diffs = vec![];
    for q in qlo..=qhi {
        let (lay, entries) = layout(q);
        let dim = entries * na;
        let mut ops = ring_ops(ring, entries);
        for g in 0..ng {
            let mut op = Mat::zeros(md, dim, dim);
            for &(i, rx, ry, off) in &lay {
                let wi = &inv_x[(i - x.lo) as usize][g];
                let wy = &y.terms[(i + q - y.lo) as usize].actions[g];
                for r in 0..rx {
                    for c in 0..ry {
                        for a in 0..na {
                            let mut e = AMat::zeros(ring, rx, ry);
                            e.set(r, c, unit_elem(ring, a));
                            let img = wi.mul(&e).mul(wy);
                            let mut row = vec![0; dim];
                            coords(&img, ring, &mut row, off);
                            let k = (off + r * ry + c) * na + a;
                            for (j, v) in row.into_iter().enumerate() {
                                op.set(k, j, v);
                            }
                        }
                    }
                }
            }
            ops.push(op);
        }
        terms.push(FMod { md, dim, sub: Howell::full(md, dim), rel: free_rel(ring, entries), ops, n_ring_ops: nr });
        if q < qhi {
            let (lay2, entries2) = layout(q + 1);
            let dim2 = entries2 * na;
            let mut d = Mat::zeros(md, dim, dim2);
            let sign = if q % 2 == 0 { ring.from_int(-1) } else { ring.one() };
            for &(i, rx, ry, off) in &lay {
                for r in 0..rx {
                    for c in 0..ry {
                        for a in 0..na {
                            let mut e = AMat::zeros(ring, rx, ry);
                            e.set(r, c, unit_elem(ring, a));
                            let mut row = vec![0; dim2];
                            // f d_Y lands in component i
                            if let Some(&(_, _, _, o2)) = lay2.iter().find(|l| l.0 == i) {
                                coords(&e.mul(&y.diff(i + q)), ring, &mut row, o2);
                            }
                            // -(-1)^q d_X f lands in component i - 1
                            if let Some(&(_, _, _, o2)) = lay2.iter().find(|l| l.0 == i - 1) {
                                let t = x.diff(i - 1).mul(&e).scale(&sign);
                                let mut tmp = vec![0; dim2];
                                coords(&t, ring, &mut tmp, o2);
                                for (u, v) in row.iter_mut().zip(tmp) {
                                    *u = md.add(*u, v);
                                }
                            }
                            let k = (off + r * ry + c) * na + a;
                            for (j, v) in row.into_iter().enumerate() {
                                d.set(k, j, v);
                            }
                        }
                    }
                }
            }
            diffs.push(d);
        }
    }
    Ok(FComplex { md, lo: qlo, terms, diffs, nops: nr + ng, n_ring_ops: nr })
}

/// `Ext^n` in the derived category of continuous modules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtReport {
    pub degree: i32,
    pub log_size: u32,
    pub invariants: Vec<u64>,
    /// Depths at which the group was computed (they agree).
    pub depths: (usize, usize),
    /// Cocycles of the total complex representing generators.
    pub representatives: Vec<Vec<u64>>,
}

/// `Ext^n(X, Y) = H^n(Gamma, Hom_A(X, Y))`, valid because `X` is `A`-free.
pub fn hyper_ext(x: &GComplex, y: &GComplex, n: i32, depth: usize) -> Result<ExtReport, ResolutionError> {
    let depth = depth.max(1);
    let hom = hom_complex(x, y)?;
    let a = hypercochains(&hom, &x.group, n + depth as i32)?;
    let b = hypercochains(&hom, &x.group, n + depth as i32 + 2)?;
    let (ha, hb) = (a.cohomology_group(n), b.cohomology_group(n));
    if ha.log_size != hb.log_size {
        return Err(ResolutionError::Unstable(n, depth, depth + 2));
    }
    Ok(ExtReport { degree: n, log_size: ha.log_size, invariants: ha.invariants, depths: (depth, depth + 2), representatives: ha.gens })
}

/// Minimal free resolution of `F_p` over `Lambda = F_p[Gamma]` for an
/// abelian `p`-group model: Koszul in the procyclic variables (truncated
/// at total degree `trunc`), periodic in the finite ones.
#[derive(Clone, Debug)]
pub struct KoszulResolution {
    pub lambda: Ring,
    pub p: u64,
    /// Generators of `F_s`, as multi-indices.
    pub gens: Vec<Vec<Vec<usize>>>,
    /// `diffs[s] : F_s -> F_{s-1}` for `s >= 1` (`diffs[0]` is empty).
    pub diffs: Vec<AMat>,
    factors: Vec<Factor>,
}

impl KoszulResolution {
    pub fn new(group: &GroupModel, max_degree: usize) -> Result<KoszulResolution, ResolutionError> {
        let f = factors(group)?;
        let p = group.p;
        for g in &group.gens {
            let mut o = g.order;
            while o % p == 0 {
                o /= p;
            }
            if o != 1 {
                return Err(ResolutionError::NotPGroup(g.name.clone()));
            }
        }
        let nv = f.len();
        let names: Vec<String> = (1..=nv).map(|j| format!("x{j}")).collect();
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let mut rels = vec![];
        for (j, fj) in f.iter().enumerate() {
            if let Factor::Cyclic(o) = fj {
                rels.push(Poly::var(nv, j).pow(*o as u32));
            }
        }
        let trunc = 2 * max_degree as u32 + 4;
        let lambda = Ring::quotient("Lambda", Modulus::new(p, 1)?, &vars, trunc, &rels)?;
        let gens: Vec<Vec<Vec<usize>>> = (0..=max_degree).map(|s| multi_indices(&f, s)).collect();
        let mut diffs = vec![AMat::zeros(&lambda, 0, 0)];
        for s in 1..=max_degree {
            let mut d = AMat::zeros(&lambda, gens[s].len(), gens[s - 1].len());
            for (a, q) in gens[s].iter().enumerate() {
                for j in 0..nv {
                    if q[j] == 0 {
                        continue;
                    }
                    let mut q2 = q.clone();
                    q2[j] -= 1;
                    let b = gens[s - 1].iter().position(|x| *x == q2).expect("source index");
                    let x = lambda.var(j);
                    let c = match f[j] {
                        Factor::Cyclic(o) if q[j] % 2 == 0 => lambda.pow(&x, o - 1),
                        _ => x,
                    };
                    let odd = q[..j].iter().sum::<usize>() % 2 == 1;
                    d.set(a, b, if odd { lambda.neg(&c) } else { c });
                }
            }
            diffs.push(d);
        }
        Ok(KoszulResolution { lambda, p, gens, diffs, factors: f })
    }

    pub fn max_degree(&self) -> usize {
        self.gens.len() - 1
    }

    pub fn rank(&self, s: usize) -> usize {
        self.gens[s].len()
    }

    /// Human-readable name of the basis class of `H^s` at `index`.
    pub fn class_label(&self, s: usize, index: usize) -> String {
        let q = &self.gens[s][index];
        let parts: Vec<String> = q
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(j, &k)| if k == 1 { format!("u{}", j + 1) } else { format!("u{}^{}", j + 1, k) })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    fn solver_for(&self, i: usize) -> Solver {
        let d = self.diffs[i].to_zq();
        let rel = free_rel(&self.lambda, self.rank(i - 1));
        Solver::new(&if rel.is_zero() { d } else { d.vstack(&rel.matrix) })
    }

    /// Yoneda product `a . b` of `a in H^s`, `b in H^t` (vectors over the
    /// basis classes); lands in `H^{s+t}`.
    pub fn cup(&self, a: &[u64], s: usize, b: &[u64], t: usize) -> Result<Vec<u64>, ResolutionError> {
        let lam = &self.lambda;
        let nl = lam.dim();
        let md = Modulus::new(self.p, 1)?;
        if s + t > self.max_degree() {
            return Err(ResolutionError::LiftFailed(s + t));
        }
        // lift b : F_t -> k to a chain map F_{t+i} -> F_i
        let mut lift = AMat::zeros(lam, self.rank(t), 1);
        for (g, &bg) in b.iter().enumerate() {
            lift.set(g, 0, lam.from_int(bg as i64));
        }
        for i in 1..=s {
            let rhs = self.diffs[t + i].mul(&lift);
            let solver = self.solver_for(i);
            let mut next = AMat::zeros(lam, self.rank(t + i), self.rank(i));
            for r in 0..rhs.rows {
                let mut v = vec![];
                for c in 0..rhs.cols {
                    v.extend(rhs.get(r, c));
                }
                let x = solver.solve(&v)?.ok_or(ResolutionError::LiftFailed(i))?;
                for c in 0..self.rank(i) {
                    next.set(r, c, lam.canon(x[c * nl..(c + 1) * nl].to_vec()));
                }
            }
            lift = next;
        }
        Ok((0..self.rank(s + t))
            .map(|g| {
                (0..self.rank(s)).fold(0, |acc, h| md.add(acc, md.mul(a[h] % self.p, lam.residue(lift.get(g, h)))))
            })
            .collect())
    }

    /// Operator of `lambda` on a module given by the operators of the `x_j`.
    fn lambda_op(&self, l: &[u64], xs: &[Mat], dim: usize, md: Modulus) -> Mat {
        let mut acc = Mat::zeros(md, dim, dim);
        for (c, e) in self.lambda.monomials().iter().enumerate() {
            if l[c] == 0 {
                continue;
            }
            let mut m = Mat::identity(md, dim);
            for (j, &k) in e.iter().enumerate() {
                m = m.mul(&xs[j].pow(k as u64));
            }
            acc = acc.add(&m.scale(l[c]));
        }
        acc
    }

    /// Comparison map from this resolution to an exact complex
    /// `... -> E_1 -> E_0` of `Lambda`-modules, extending `f0` (the image of
    /// the generator of `F_0`). Returns the images of the generators of each
    /// `F_i`, `i <= upto`.
    pub fn compare(&self, spaces: &[LModule], diffs: &[Mat], f0: &[u64], upto: usize) -> Result<Vec<Vec<Vec<u64>>>, ResolutionError> {
        let md = Modulus::new(self.p, 1)?;
        let mut out = vec![vec![f0.to_vec()]];
        for i in 1..=upto {
            let e = &spaces[i - 1];
            let solver = Solver::new(&diffs[i]);
            let mut imgs = vec![];
            for g in 0..self.rank(i) {
                let mut rhs = vec![0; e.dim];
                for h in 0..self.rank(i - 1) {
                    let l = self.diffs[i].get(g, h);
                    if self.lambda.is_zero(l) {
                        continue;
                    }
                    let v = self.lambda_op(l, &e.xs, e.dim, md).transpose().mul(&Mat::from_rows(md, 1, &out[i - 1][h].iter().map(|&x| vec![x]).collect::<Vec<_>>()));
                    for (r, k) in rhs.iter_mut().zip(0..) {
                        *r = md.add(*r, v.get(k, 0));
                    }
                }
                imgs.push(solver.solve(&rhs)?.ok_or(ResolutionError::LiftFailed(i))?);
            }
            out.push(imgs);
        }
        Ok(out)
    }

    /// Restriction of a class in `H^s` to the subgroup generated by the
    /// listed generators (a direct factor).
    pub fn restrict(&self, class: &[u64], s: usize, subgroup: &[usize]) -> Vec<(Vec<usize>, u64)> {
        self.gens[s]
            .iter()
            .zip(class)
            .filter(|(q, _)| q.iter().enumerate().all(|(j, &k)| k == 0 || subgroup.contains(&j)))
            .map(|(q, &c)| (q.clone(), c))
            .collect()
    }

    pub fn is_procyclic(&self, j: usize) -> bool {
        self.factors[j] == Factor::Procyclic
    }
}

/// A finite-dimensional `Lambda`-module: the operators of the `x_j`.
#[derive(Clone, Debug)]
pub struct LModule {
    pub dim: usize,
    pub xs: Vec<Mat>,
}

impl LModule {
    pub fn trivial(md: Modulus, nvars: usize) -> LModule {
        LModule { dim: 1, xs: vec![Mat::zeros(md, 1, 1); nvars] }
    }

    /// `F_p[Z/p]` on which generator `j` acts by `chi[j]` steps of the cycle.
    pub fn character(md: Modulus, chi: &[u64]) -> LModule {
        let p = md.p() as usize;
        let mut shift = Mat::zeros(md, p, p);
        for i in 0..p {
            shift.set(i, (i + 1) % p, 1);
        }
        let xs = chi.iter().map(|&c| shift.pow(c).sub(&Mat::identity(md, p))).collect();
        LModule { dim: p, xs }
    }
}

/// Class in `H^1(Gamma, F_p)` of the extension `0 -> k -> k[G_chi] -> k -> 0`.
pub fn character_class(res: &KoszulResolution, chi: &[u64]) -> Result<Vec<u64>, ResolutionError> {
    let md = Modulus::new(res.p, 1)?;
    let p = res.p as usize;
    let nv = chi.len();
    let e0 = LModule::character(md, chi);
    let e1 = LModule::trivial(md, nv);
    let norm = Mat::from_rows(md, p, &[vec![1; p]]);
    let mut f0 = vec![0; p];
    f0[0] = 1;
    let maps = res.compare(&[e0, e1], &[Mat::zeros(md, 0, 0), norm], &f0, 1)?;
    Ok(maps[1].iter().map(|v| v[0]).collect())
}

/// Class in `H^2(Gamma, F_p)` of the spliced extension
/// `0 -> k -> k[G_inner] -> k[G_outer] -> k -> 0`.
pub fn splice_class(res: &KoszulResolution, outer: &[u64], inner: &[u64]) -> Result<Vec<u64>, ResolutionError> {
    let md = Modulus::new(res.p, 1)?;
    let p = res.p as usize;
    let nv = outer.len();
    let e0 = LModule::character(md, outer);
    let e1 = LModule::character(md, inner);
    let e2 = LModule::trivial(md, nv);
    // k[G_inner] -> k -> k[G_outer]: augmentation followed by the norm line
    let d1 = Mat::from_rows(md, p, &vec![vec![1; p]; p]);
    let d2 = Mat::from_rows(md, p, &[vec![1; p]]);
    let mut f0 = vec![0; p];
    f0[0] = 1;
    let maps = res.compare(&[e0, e1, e2], &[Mat::zeros(md, 0, 0), d1, d2], &f0, 2)?;
    Ok(maps[2].iter().map(|v| v[0]).collect())
}

fn legendre(a: i64, ell: u64) -> i8 {
    let a = a.rem_euclid(ell as i64) as u64;
    let mut r = 1u64;
    let (mut b, mut e) = (a, (ell - 1) / 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % ell;
        }
        b = b * b % ell;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

/// Hilbert symbol `(a, b)` over `Q_l` for odd `l` and nonzero integers.
pub fn hilbert_symbol(a: i64, b: i64, ell: u64) -> i8 {
    let split = |mut x: i64| -> (u32, i64) {
        let mut v = 0;
        while x % ell as i64 == 0 {
            x /= ell as i64;
            v += 1;
        }
        (v, x)
    };
    let ((al, u), (be, v)) = (split(a), split(b));
    let eps = ((ell - 1) / 2) as u32;
    let mut s: i8 = if (al * be * eps) % 2 == 1 { -1 } else { 1 };
    if be % 2 == 1 {
        s *= legendre(u, ell);
    }
    if al % 2 == 1 {
        s *= legendre(v, ell);
    }
    s
}

/// Cup products of the Kummer classes of `l, -1, -l` for the tame
/// quotient `Z_2 x Z/2` of `Gal(Qbar_l/Q_l)`, `l = 3 mod 4`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CupTable {
    pub ell: u64,
    /// Basis labels of `H^2(Gamma, F_2)`.
    pub h2_basis: Vec<String>,
    pub classes: Vec<ClassEntry>,
    pub products: Vec<ProductEntry>,
    /// Inflation to `H^2(Gal(Qbar_l/Q_l), F_2) = Z/2` as a functional on
    /// the basis, solved from the Hilbert symbols.
    pub inflation: Vec<u64>,
    /// Classes of the 2-extensions `k -> k[G_y] -> k[G_l] -> k`.
    pub extension_classes: Vec<ClassEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub name: String,
    pub vector: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductEntry {
    pub left: String,
    pub right: String,
    pub vector: Vec<u64>,
    pub nonzero: bool,
    pub inflated: u64,
    pub hilbert_symbol: i8,
    /// Restriction to the finite factor `<w2>`.
    pub restricted_to_w2: u64,
}

/// Characters of `Gamma = <w1> x <w2>` cutting out `Q_l(sqrt x)`: the
/// Frobenius-type generator `w1` moves `sqrt(-1)`, inertia `w2` moves `sqrt(l)`.
pub fn kummer_character(x: i64, ell: u64) -> Vec<u64> {
    let l = ell as i64;
    match x {
        v if v == l => vec![0, 1],
        -1 => vec![1, 0],
        v if v == -l => vec![1, 1],
        _ => vec![0, 0],
    }
}

pub fn cup_table(ell: u64, level: u32) -> Result<CupTable, ResolutionError> {
    let group = GroupModel::z2_times_z2(level);
    let res = KoszulResolution::new(&group, 2)?;
    let l = ell as i64;
    let xs = [("l", l), ("-1", -1), ("-l", -l)];
    let mut classes = vec![];
    for (name, x) in xs {
        classes.push(ClassEntry { name: format!("h_{name}"), vector: character_class(&res, &kummer_character(x, ell))? });
    }
    let mut raw = vec![];
    for (i, (na, a)) in xs.iter().enumerate() {
        for (j, (nb, b)) in xs.iter().enumerate() {
            let v = res.cup(&classes[i].vector, 1, &classes[j].vector, 1)?;
            raw.push((na.to_string(), nb.to_string(), v, hilbert_symbol(*a, *b, ell)));
        }
    }
    // solve phi . v = [symbol = -1] over F_2
    let md = Modulus::new(2, 1)?;
    let r2 = res.rank(2);
    let a = Mat::from_rows(md, r2, &raw.iter().map(|x| x.2.clone()).collect::<Vec<_>>());
    let rhs: Vec<u64> = raw.iter().map(|x| u64::from(x.3 == -1)).collect();
    let phi = Solver::new(&a.transpose())
        .solve(&rhs)?
        .ok_or_else(|| ResolutionError::Cover("Hilbert symbols are not a functional on H^2".into()))?;
    let phi: Vec<u64> = phi[..r2].to_vec();
    let w2_index = res.gens[2].iter().position(|q| q == &vec![0, 2]);
    let products = raw
        .into_iter()
        .map(|(na, nb, v, h)| ProductEntry {
            left: format!("h_{na}"),
            right: format!("h_{nb}"),
            nonzero: v.iter().any(|&c| c != 0),
            inflated: v.iter().zip(&phi).map(|(a, b)| a * b).sum::<u64>() % 2,
            restricted_to_w2: w2_index.map_or(0, |k| v[k]),
            vector: v,
            hilbert_symbol: h,
        })
        .collect();
    let mut extension_classes = vec![];
    for (name, x) in xs {
        extension_classes.push(ClassEntry {
            name: format!("beta_{name}"),
            vector: splice_class(&res, &kummer_character(l, ell), &kummer_character(x, ell))?,
        });
    }
    Ok(CupTable {
        ell,
        h2_basis: (0..r2).map(|k| res.class_label(2, k)).collect(),
        classes,
        products,
        inflation: phi,
        extension_classes,
    })
}

/// A free module mapping onto a target module (ambient coordinates).
#[derive(Clone, Debug)]
pub struct Cover {
    pub module: FMod,
    pub map: Mat,
}

/// Hartshorne's construction: a complex `L` of covers with a map `L -> Q`
/// that is a quasi-isomorphism in degrees `> lowest` and surjective in
/// every degree `>= lowest`.
pub fn hartshorne(
    q: &FComplex,
    lowest: i32,
    cover: &mut dyn FnMut(&FMod) -> Result<Cover, ResolutionError>,
) -> Result<(FComplex, ChainMap), ResolutionError> {
    let md = q.md;
    let (nops, nr) = (q.nops, q.n_ring_ops);
    let hi = q.hi();
    if q.terms.is_empty() || hi < lowest {
        let z = FComplex::zero(md, nops, nr);
        let m = ChainMap::zero(&z, q);
        return Ok((z, m));
    }
    // built from the top down
    let mut terms: Vec<FMod> = vec![];
    let mut diffs: Vec<Mat> = vec![];
    let mut pis: Vec<Mat> = vec![];
    let zero = FMod::zero(md, nops, nr);
    for n in (lowest..=hi).rev() {
        let qn = q.term(n);
        let (ln1, pi1, d1) = match terms.last() {
            Some(t) => (t.clone(), pis.last().unwrap().clone(), diffs.last().cloned()),
            None => (zero.clone(), Mat::zeros(md, 0, q.dim(n + 1)), None),
        };
        let ln2rel = if terms.len() >= 2 { terms[terms.len() - 2].rel.clone() } else { Howell::zero(md, d1.as_ref().map_or(0, |d| d.cols)) };
        // Z^{n+1}(L)
        let zl = match &d1 {
            Some(d) => preimage(&ln1.sub, d, &ln2rel).sum(&ln1.rel),
            None => ln1.sub.clone(),
        };
        // pullback {(x, l) : x d_Q = l pi}
        let (a, b) = (qn.dim, ln1.dim);
        let mut f = Mat::zeros(md, a + b, q.dim(n + 1));
        if a > 0 {
            f.put_block(0, 0, &q.diff(n));
        }
        if b > 0 {
            f.put_block(a, 0, &pi1.neg());
        }
        let s = direct_sum(&qn.submodule(qn.sub.clone()), &FMod { sub: zl, ..ln1.clone() });
        let msub = if s.dim == 0 { s.sub.clone() } else { preimage(&s.sub, &f, &q.rel(n + 1)).sum(&s.rel) };
        let pull = FMod { sub: msub, ..s.clone() };
        let c2 = if pull.is_zero() { Cover { module: zero.clone(), map: Mat::zeros(md, 0, a + b) } } else { cover(&pull)? };
        let pi2 = c2.map.block(0, 0, c2.map.rows, a);
        let dl2 = c2.map.block(0, a, c2.map.rows, b);
        // cycles of Q not yet hit in cohomology
        let zq = q.cycles(n);
        let z2 = if c2.module.dim == 0 {
            Howell::zero(md, 0)
        } else {
            preimage(&c2.module.sub, &dl2, &ln1.rel)
        };
        let mut hit = q.boundaries(n);
        if !z2.is_zero() {
            hit = hit.sum(&z2.image_under(&pi2));
        }
        let mut gens = vec![];
        for z in zq.rows() {
            if !hit.contains(&z) {
                gens.push(z.clone());
                hit = close_under(&hit, vec![z], &qn.ops);
            }
        }
        let c1 = if gens.is_empty() {
            Cover { module: zero.clone(), map: Mat::zeros(md, 0, a) }
        } else {
            let w = close_under(&qn.rel, gens, &qn.ops);
            cover(&qn.submodule(w))?
        };
        let ln = direct_sum(&c1.module, &c2.module);
        let mut dn = Mat::zeros(md, ln.dim, b);
        if c2.module.dim > 0 && b > 0 {
            dn.put_block(c1.module.dim, 0, &dl2);
        }
        let pin = c1.map.vstack(&pi2);
        terms.push(ln);
        diffs.push(dn);
        pis.push(pin);
    }
    terms.reverse();
    diffs.reverse();
    pis.reverse();
    diffs.pop(); // the map out of the top term
    let l = FComplex { md, lo: lowest, terms, diffs, nops, n_ring_ops: nr };
    let map = ChainMap::new(&l, q, |i| if i >= lowest && i <= hi { pis[(i - lowest) as usize].clone() } else { Mat::zeros(md, l.dim(i), q.dim(i)) });
    Ok((l, map))
}

/// Generators of a module over `A[Gamma]`, minimal when the group algebra
/// is local modulo its prime-to-`p` part.
pub fn module_generators(m: &FMod, ring: &Ring, group: &GroupModel) -> Vec<Vec<u64>> {
    let p = group.p;
    let nr = m.n_ring_ops;
    let mut rad_rows = vec![];
    for (j, g) in group.gens.iter().enumerate() {
        let mut o = g.order;
        while o % p == 0 {
            o /= p;
        }
        if o != 1 && g.kind == GenKind::Finite {
            continue;
        }
        let w = m.ops[nr + j].sub(&Mat::identity(m.md, m.dim));
        rad_rows.extend(m.sub.image_under(&w).rows());
    }
    let base = m.max_ideal_times(ring).add_rows(rad_rows);
    let mut span = close_under(&base, vec![], &m.ops);
    let mut gens = vec![];
    for s in m.sub.rows() {
        if !span.contains(&s) {
            gens.push(s.clone());
            span = close_under(&span, vec![s], &m.ops);
        }
    }
    gens
}

/// Orbit of vectors `v_gamma = gamma . v` over all group elements, indexed
/// by the group's element numbering.
fn orbit(v: &[u64], ops: &[Mat], group: &GroupModel) -> Result<Vec<Vec<u64>>, ResolutionError> {
    let n = group.order();
    let mut out: Vec<Option<Vec<u64>>> = vec![None; n];
    out[group.identity()] = Some(v.to_vec());
    let mut queue = vec![group.identity()];
    while let Some(x) = queue.pop() {
        let vx = out[x].clone().unwrap();
        for (j, op) in ops.iter().enumerate() {
            let y = group.mul(group.gen(j), x);
            let vy = op.apply(&vx);
            match &out[y] {
                None => {
                    out[y] = Some(vy);
                    queue.push(y);
                }
                Some(old) if *old != vy => {}
                _ => {}
            }
        }
    }
    Ok(out.into_iter().map(|x| x.expect("group is generated")).collect())
}

/// `A[Gamma]^r` with its ring and left-regular operators.
pub fn group_ring_free(ring: &Ring, group: &GroupModel, r: usize) -> FMod {
    let md = ring.md();
    let (na, n) = (ring.dim(), group.order());
    let dim = r * n * na;
    let mut ops = ring_ops(ring, r * n);
    for j in 0..group.ngens() {
        let g = group.gen(j);
        let mut op = Mat::zeros(md, dim, dim);
        for i in 0..r {
            for x in 0..n {
                let y = group.mul(g, x);
                for c in 0..na {
                    op.set((i * n + x) * na + c, (i * n + y) * na + c, 1);
                }
            }
        }
        ops.push(op);
    }
    FMod { md, dim, sub: Howell::full(md, dim), rel: free_rel(ring, r * n), ops, n_ring_ops: na }
}

/// Free `A[Gamma_L]`-module mapping onto `m`; `m` must be a module over
/// the finite level.
pub fn group_ring_cover(m: &FMod, ring: &Ring, group: &GroupModel) -> Result<Cover, ResolutionError> {
    let nr = m.n_ring_ops;
    for (j, g) in group.gens.iter().enumerate() {
        let w = &m.ops[nr + j];
        let pw = w.pow(g.order);
        let id = Mat::identity(m.md, m.dim);
        if m.sub.rows().iter().any(|s| !m.rel.contains(&pw.sub(&id).apply(s))) {
            return Err(ResolutionError::Cover(format!("{} acts with order above the level", g.name)));
        }
    }
    let gens = module_generators(m, ring, group);
    let f = group_ring_free(ring, group, gens.len());
    let (na, n) = (ring.dim(), group.order());
    let mut map = Mat::zeros(m.md, f.dim, m.dim);
    for (i, v) in gens.iter().enumerate() {
        let orb = orbit(v, &m.ops[nr..], group)?;
        for (x, vx) in orb.iter().enumerate() {
            for c in 0..na {
                let row = m.ops[c].apply(vx);
                for (k, &val) in row.iter().enumerate() {
                    map.set((i * n + x) * na + c, k, val);
                }
            }
        }
    }
    Ok(Cover { module: f, map })
}

/// Whether a finite module is free over `A[Gamma_L]`.
pub fn is_group_ring_free(m: &FMod, ring: &Ring, group: &GroupModel) -> bool {
    let r = module_generators(m, ring, group).len() as u32;
    m.log_size() == r * group.order() as u32 * ring.length()
}

/// Free resolution with its augmentation and quasi-isomorphism certificate.
#[derive(Clone, Debug)]
pub struct FreeResolution {
    pub complex: FComplex,
    pub map: ChainMap,
    pub certificate: QuasiIsoCertificate,
    /// The map is a quasi-isomorphism in degrees `>= exact_from`.
    pub exact_from: i32,
}

impl FreeResolution {
    pub fn ranks(&self, ring: &Ring, group: &GroupModel) -> Vec<(i32, usize)> {
        let unit = group.order() as u32 * ring.length();
        (self.complex.lo..=self.complex.hi()).map(|i| (i, (self.complex.term(i).log_size() / unit.max(1)) as usize)).collect()
    }
}

fn certify(l: FComplex, map: ChainMap, from: i32) -> Result<FreeResolution, ResolutionError> {
    match check_quasi_iso_above(&map, from)? {
        Ok(certificate) => Ok(FreeResolution { complex: l, map, certificate, exact_from: from }),
        Err(r) => Err(ResolutionError::NotQuasiIso(r)),
    }
}

/// Free `A[Gamma_L]`-resolution of a module, in degrees `[-depth, 0]`.
pub fn resolve_module(m: &FMod, ring: &Ring, group: &GroupModel, depth: usize) -> Result<FreeResolution, ResolutionError> {
    let q = FComplex { md: m.md, lo: 0, terms: vec![m.clone()], diffs: vec![], nops: m.ops.len(), n_ring_ops: m.n_ring_ops };
    let lowest = -(depth as i32);
    let (l, map) = hartshorne(&q, lowest, &mut |x| group_ring_cover(x, ring, group))?;
    certify(l, map, lowest + 1)
}

/// Free `A[Gamma_L]`-resolution of a bounded complex, down to degree
/// `hi - depth`; complexes with free terms are returned unchanged.
pub fn resolve_complex(c: &GComplex, depth: usize) -> Result<FreeResolution, ResolutionError> {
    let q = c.to_fcomplex();
    if q.terms.iter().all(|t| is_group_ring_free(t, &c.ring, &c.group)) {
        let map = ChainMap::identity(&q);
        return certify(q.clone(), map, q.lo);
    }
    let lowest = c.hi() - depth as i32;
    let (l, map) = hartshorne(&q, lowest, &mut |x| group_ring_cover(x, &c.ring, &c.group))?;
    certify(l, map, lowest + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::GModule;

    fn k2() -> Ring {
        Ring::zq(2, 1).unwrap()
    }

    fn trivial(ring: &Ring, group: &GroupModel) -> FMod {
        let id = AMat::identity(ring, 1);
        FMod::free(ring, 1, &vec![id; group.ngens()])
    }

    #[test]
    fn cohomology_of_small_groups() {
        let k = k2();
        let g = GroupModel::z2_times_z2(2);
        assert_eq!(group_cohomology(&g, &trivial(&k, &g), 3).unwrap(), vec![1, 2, 2, 2]);
        let z2 = GroupModel::case_a(2, &[], &[2], &[]).unwrap();
        assert_eq!(group_cohomology(&z2, &trivial(&k, &z2), 3).unwrap(), vec![1, 1, 1, 1]);
        let zp = GroupModel::case_a(2, &[3], &[], &[]).unwrap();
        assert_eq!(group_cohomology(&zp, &trivial(&k, &zp), 3).unwrap(), vec![1, 1, 0, 0]);
    }

    #[test]
    fn koszul_resolution_is_a_complex() {
        let res = KoszulResolution::new(&GroupModel::z2_times_z2(2), 4).unwrap();
        for s in 2..=4 {
            assert!(res.diffs[s].mul(&res.diffs[s - 1]).is_zero());
        }
        assert_eq!((0..=4).map(|s| res.rank(s)).collect::<Vec<_>>(), vec![1, 2, 2, 2, 2]);
    }

    #[test]
    fn resolution_of_trivial_module_over_cyclic_group() {
        let k = k2();
        let g = GroupModel::case_a(2, &[], &[2], &[]).unwrap();
        let r = resolve_module(&trivial(&k, &g), &k, &g, 3).unwrap();
        let ranks: Vec<usize> = r.ranks(&k, &g).into_iter().map(|x| x.1).collect();
        assert_eq!(ranks, vec![1, 1, 1, 1]);
    }

    #[test]
    fn free_complex_resolves_to_itself() {
        let k = k2();
        let g = GroupModel::case_a(2, &[], &[2], &[]).unwrap();
        let f = group_ring_free(&k, &g, 1);
        let (gm, _) = crate::complex::to_gmodule(&f, &k).unwrap();
        let c = GComplex::new(&k, &g, 0, vec![GModule { rank: gm.rank, actions: gm.actions }], vec![]).unwrap();
        let r = resolve_complex(&c, 2).unwrap();
        assert_eq!(r.complex.terms.len(), 1);
    }
}

#[cfg(test)]
mod cup_tests {
    use super::*;

    #[test]
    fn extension_classes_are_products_with_h_l() {
        let t = cup_table(3, 2).unwrap();
        for (k, beta) in t.extension_classes.iter().enumerate() {
            assert_eq!(beta.vector, t.products[k].vector, "{}", beta.name);
        }
    }
}
