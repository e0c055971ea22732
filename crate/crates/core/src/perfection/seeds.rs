//! Random bounded complexes of `A`-free modules with small group actions,
//! and their free resolutions over the truncated group ring.
//!
//! The actions only use generator orders that exist at every level, so a
//! seed drawn from a fixed RNG state is the same complex at every level.

use super::PerfectionError;
use crate::complex::{check_quasi_iso_above, to_gcomplex, GComplex, GModule};
use crate::group::{GenKind, GroupModel};
use crate::linalg::{kernel, Mat};
use crate::resolution::{group_ring_cover, hartshorne, ResolutionError};
use crate::ring::{AMat, Elem, Ring};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedShape {
    /// One module in degree 0.
    Single,
    /// `Y (+) X' -> Y` in degrees `[-1, 0]`, surjective.
    Surjective,
    /// Any equivariant map in degrees `[-1, 0]`.
    TwoTerm,
    /// Degrees `[-2, 0]`.
    ThreeTerm,
}

impl SeedShape {
    pub const ALL: [SeedShape; 4] = [SeedShape::Single, SeedShape::Surjective, SeedShape::TwoTerm, SeedShape::ThreeTerm];
}

/// A complex of `A`-free modules, and the degree `n1` it starts in.
#[derive(Clone, Debug)]
pub struct Seed {
    pub complex: GComplex,
    pub n1: i32,
}

fn cycle(ring: &Ring, k: usize, e: usize, sign: i64) -> AMat {
    let mut m = AMat::zeros(ring, k, k);
    for i in 0..k {
        m.set(i, (i + e) % k, ring.from_int(sign));
    }
    m
}

fn order_divides(m: &AMat, n: u64) -> bool {
    m.pow(n) == AMat::identity(&m.ring, m.rows)
}

/// Largest order a generator may act with at every level.
fn seed_order(group: &GroupModel, j: usize) -> u64 {
    let g = &group.gens[j];
    match g.kind {
        GenKind::Procyclic => group.p,
        GenKind::Finite => g.order,
    }
}

/// A block of rank 1, 2 or 3 on which every generator acts by a signed
/// power of the cyclic permutation.
fn random_block(ring: &Ring, group: &GroupModel, rng: &mut impl Rng) -> GModule {
    let k = [1, 1, 2, 2, 3][rng.gen_range(0..5)];
    let actions = (0..group.ngens())
        .map(|j| {
            let cands: Vec<AMat> = (0..k)
                .flat_map(|e| [1, -1].map(|s| cycle(ring, k, e, s)))
                .filter(|m| order_divides(m, seed_order(group, j)))
                .collect();
            cands[rng.gen_range(0..cands.len())].clone()
        })
        .collect();
    GModule { rank: k, actions }
}

fn dsum(ring: &Ring, a: &AMat, b: &AMat) -> AMat {
    let mut m = AMat::zeros(ring, a.rows + b.rows, a.cols + b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            m.set(i, j, a.get(i, j).clone());
        }
    }
    for i in 0..b.rows {
        for j in 0..b.cols {
            m.set(a.rows + i, a.cols + j, b.get(i, j).clone());
        }
    }
    m
}

fn sum_modules(ring: &Ring, a: &GModule, b: &GModule) -> GModule {
    GModule { rank: a.rank + b.rank, actions: a.actions.iter().zip(&b.actions).map(|(x, y)| dsum(ring, x, y)).collect() }
}

pub(crate) fn random_module(ring: &Ring, group: &GroupModel, rng: &mut impl Rng) -> GModule {
    let mut m = random_block(ring, group, rng);
    if rng.gen_bool(0.5) {
        m = sum_modules(ring, &m, &random_block(ring, group, rng));
    }
    m
}

fn coords(m: &AMat) -> Vec<u64> {
    m.e.iter().flatten().copied().collect()
}

/// Random `F: X -> Y` with `W^X F = F W^Y`, and `pre F = 0` if given.
pub(crate) fn random_hom(ring: &Ring, x: &GModule, y: &GModule, pre: Option<&AMat>, rng: &mut impl Rng) -> AMat {
    let (na, rx, ry) = (ring.dim(), x.rank, y.rank);
    let n = rx * ry * na;
    if n == 0 {
        return AMat::zeros(ring, rx, ry);
    }
    let unit = |k: usize| -> AMat {
        let mut e = AMat::zeros(ring, rx, ry);
        let mut c = vec![0; na];
        c[k % na] = 1;
        e.set(k / na / ry, (k / na) % ry, ring.canon(c));
        e
    };
    let mut rows = vec![];
    for k in 0..n {
        let e = unit(k);
        let mut r = vec![];
        for (wx, wy) in x.actions.iter().zip(&y.actions) {
            r.extend(coords(&wx.mul(&e).sub(&e.mul(wy))));
        }
        if let Some(d) = pre {
            r.extend(coords(&d.mul(&e)));
        }
        rows.push(r);
    }
    let width = rows[0].len();
    let ker = kernel(&Mat::from_rows(ring.md(), width, &rows));
    let md = ring.md();
    let mut c = vec![0u64; n];
    for v in ker.rows() {
        let s = rng.gen_range(0..md.q());
        for (ci, &vi) in c.iter_mut().zip(&v) {
            *ci = md.add(*ci, md.mul(s, vi));
        }
    }
    let e: Vec<Elem> = c.chunks(na).map(|ch| ring.canon(ch.to_vec())).collect();
    AMat::from_elems(ring, rx, ry, e)
}

/// Draws a seed of the given shape.
pub fn random_seed(ring: &Ring, group: &GroupModel, shape: SeedShape, rng: &mut impl Rng) -> Result<Seed, PerfectionError> {
    let (lo, terms, diffs) = match shape {
        SeedShape::Single => (0, vec![random_module(ring, group, rng)], vec![]),
        SeedShape::Surjective => {
            let y = random_module(ring, group, rng);
            let xp = random_block(ring, group, rng);
            let h = random_hom(ring, &xp, &y, None, rng);
            let mut d = AMat::zeros(ring, y.rank + xp.rank, y.rank);
            for i in 0..y.rank {
                d.set(i, i, ring.one());
            }
            for i in 0..xp.rank {
                for j in 0..y.rank {
                    d.set(y.rank + i, j, h.get(i, j).clone());
                }
            }
            (-1, vec![sum_modules(ring, &y, &xp), y], vec![d])
        }
        SeedShape::TwoTerm => {
            let (x, y) = (random_module(ring, group, rng), random_module(ring, group, rng));
            let d = random_hom(ring, &x, &y, None, rng);
            (-1, vec![x, y], vec![d])
        }
        SeedShape::ThreeTerm => {
            let x = random_block(ring, group, rng);
            let y = random_module(ring, group, rng);
            let z = random_block(ring, group, rng);
            let d1 = random_hom(ring, &x, &y, None, rng);
            let d2 = random_hom(ring, &y, &z, Some(&d1), rng);
            (-2, vec![x, y, z], vec![d1, d2])
        }
    };
    let complex = GComplex::new(ring, group, lo, terms, diffs)?;
    Ok(Seed { complex, n1: lo })
}

/// Free resolution `P -> seed` over the truncated group ring, in degrees
/// `>= n1 - 2`; returns `P` and the degree `n1 - 1` from which its
/// cohomology is genuine.
pub fn resolve_seed(seed: &Seed) -> Result<(GComplex, i32), PerfectionError> {
    let c = &seed.complex;
    let q = c.to_fcomplex();
    let lowest = seed.n1 - 2;
    let (l, map) = hartshorne(&q, lowest, &mut |x| group_ring_cover(x, &c.ring, &c.group))?;
    if let Err(r) = check_quasi_iso_above(&map, lowest + 1)? {
        return Err(ResolutionError::NotQuasiIso(r).into());
    }
    Ok((to_gcomplex(&l, &c.ring, &c.group)?, lowest + 1))
}
