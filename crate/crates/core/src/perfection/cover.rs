use super::steps::find_annihilator;
use super::{distinguished_annihilator, identity, is_p_power, PerfectionError};
use crate::complex::{is_hom, FMod};
use crate::group::{Case, GenKind, GroupModel};
use crate::linalg::Mat;
use crate::resolution::{module_generators, Cover};
use crate::ring::{AMat, Elem, Ring};

/// `A`-free module with group action mapping onto `m`.
///
/// `A`-free modules cover themselves. Otherwise, case A uses copies of
/// `A[x_1..x_s]/(h_j(x_j)) (x) A[Q x Q']` with `w_1j = 1 + x_j`; case B
/// uses `A_J[x_1]/(h(x_1))` over `tilde Delta = <w_1, w_2>`, induced up to
/// the whole group. Each `h` is the distinguished polynomial of the least
/// monic annihilator of `w - 1` on `m`.
pub fn free_cover(m: &FMod, ring: &Ring, group: &GroupModel) -> Result<Cover, PerfectionError> {
    if m.is_a_free(ring) {
        return Ok(Cover { module: m.clone(), map: identity(m) });
    }
    let gens = module_generators(m, ring, group);
    let (module, map) = match group.case {
        Case::A => cover_a(m, ring, group, &gens)?,
        Case::B => cover_b(m, ring, group, &gens)?,
    };
    if !is_hom(&module, m, &map) {
        return Err(PerfectionError::Invariant("cover map is not a homomorphism".into()));
    }
    let img = m.rel.sum(&module.sub.image_under(&map));
    if !img.contains_span(&m.sub) {
        return Err(PerfectionError::Invariant("cover map is not surjective".into()));
    }
    Ok(Cover { module, map })
}

/// Mixed-radix digits, least significant first.
fn digits(mut i: usize, radix: &[usize]) -> Vec<usize> {
    radix
        .iter()
        .map(|&r| {
            let d = i % r;
            i /= r;
            d
        })
        .collect()
}

fn undigits(d: &[usize], radix: &[usize]) -> usize {
    d.iter().zip(radix).rev().fold(0, |acc, (&x, &r)| acc * r + x)
}

fn add_entry(a: &mut AMat, i: usize, j: usize, x: &[u64]) {
    let v = a.ring.add(a.get(i, j), x);
    a.set(i, j, v);
}

/// Block-diagonal sum of `copies` copies.
fn repeat(a: &AMat, copies: usize) -> AMat {
    let n = a.rows;
    let mut out = AMat::zeros(&a.ring, n * copies, n * copies);
    for c in 0..copies {
        for i in 0..n {
            for j in 0..n {
                out.set(c * n + i, c * n + j, a.get(i, j).clone());
            }
        }
    }
    out
}

/// Multiplication by `x` on `A[x]/(h)`, basis `1, x, .., x^{n-1}`.
fn companion(ring: &Ring, h: &[Elem]) -> AMat {
    let n = h.len() - 1;
    let mut c = AMat::zeros(ring, n, n);
    for t in 0..n {
        if t + 1 < n {
            c.set(t, t + 1, ring.one());
        } else {
            for s in 0..n {
                c.set(t, s, ring.neg(&h[s]));
            }
        }
    }
    c
}

/// Builds the map rows: for copy `i` and basis element `b`, the vector
/// `image(i, b)`; each ring basis element then acts on it.
fn map_from(m: &FMod, ring: &Ring, rank1: usize, copies: usize, image: impl Fn(usize, usize) -> Vec<u64>) -> Mat {
    let na = ring.dim();
    let mut map = Mat::zeros(m.md, copies * rank1 * na, m.dim);
    for i in 0..copies {
        for b in 0..rank1 {
            let v = image(i, b);
            for c in 0..na {
                let row = m.ops[c].apply(&v);
                for (k, &x) in row.iter().enumerate() {
                    map.set((i * rank1 + b) * na + c, k, x);
                }
            }
        }
    }
    map
}

fn apply_pow(op: &Mat, v: &[u64], k: usize) -> Vec<u64> {
    let mut v = v.to_vec();
    for _ in 0..k {
        v = op.apply(&v);
    }
    v
}

fn cover_a(m: &FMod, ring: &Ring, group: &GroupModel, gens: &[Vec<u64>]) -> Result<(FMod, Mat), PerfectionError> {
    let nr = m.n_ring_ops;
    let id = identity(m);
    let procyclic: Vec<usize> = (0..group.ngens()).filter(|&j| group.gens[j].kind == GenKind::Procyclic).collect();
    let finite: Vec<usize> = (0..group.ngens()).filter(|&j| group.gens[j].kind == GenKind::Finite).collect();
    let xs: Vec<Mat> = procyclic.iter().map(|&j| m.ops[nr + j].sub(&id)).collect();
    let hs = xs.iter().map(|x| distinguished_annihilator(m, ring, x)).collect::<Result<Vec<_>, _>>()?;
    let degs: Vec<usize> = hs.iter().map(|h| h.len() - 1).collect();
    let forders: Vec<usize> = finite.iter().map(|&j| group.gens[j].order as usize).collect();
    let ne: usize = degs.iter().product();
    let nf: usize = forders.iter().product();
    let rank1 = ne * nf;
    // basis index e * nf + f
    let mut actions = vec![AMat::identity(ring, rank1); group.ngens()];
    for (jj, &j) in procyclic.iter().enumerate() {
        let comp = companion(ring, &hs[jj]);
        let mut a = AMat::identity(ring, rank1);
        for b in 0..rank1 {
            let (e, f) = (b / nf, b % nf);
            let ed = digits(e, &degs);
            for t in 0..degs[jj] {
                let c = comp.get(ed[jj], t);
                if !ring.is_zero(c) {
                    let mut e2 = ed.clone();
                    e2[jj] = t;
                    add_entry(&mut a, b, undigits(&e2, &degs) * nf + f, c);
                }
            }
        }
        actions[j] = a;
    }
    for (tt, &j) in finite.iter().enumerate() {
        let mut a = AMat::zeros(ring, rank1, rank1);
        for b in 0..rank1 {
            let (e, f) = (b / nf, b % nf);
            let mut fd = digits(f, &forders);
            fd[tt] = (fd[tt] + 1) % forders[tt];
            a.set(b, e * nf + undigits(&fd, &forders), ring.one());
        }
        actions[j] = a;
    }
    let copies = gens.len();
    let full: Vec<AMat> = actions.iter().map(|a| repeat(a, copies)).collect();
    let module = FMod::free(ring, copies * rank1, &full);
    let map = map_from(m, ring, rank1, copies, |i, b| {
        let (e, f) = (b / nf, b % nf);
        let mut v = gens[i].clone();
        for (tt, &k) in digits(f, &forders).iter().enumerate() {
            v = apply_pow(&m.ops[nr + finite[tt]], &v, k);
        }
        for (jj, &k) in digits(e, &degs).iter().enumerate() {
            v = apply_pow(&xs[jj], &v, k);
        }
        v
    });
    Ok((module, map))
}

/// Multiplicative order of a unipotent-times-finite matrix.
fn amat_order(a: &AMat) -> u64 {
    let id = AMat::identity(&a.ring, a.rows);
    let mut x = a.clone();
    let mut o = 1;
    while x != id {
        x = x.mul(a);
        o += 1;
    }
    o
}

fn inv_mod(a: u64, m: u64) -> u64 {
    (1..=m).find(|&x| (a % m) * x % m == 1 % m).unwrap_or(1)
}

fn cover_b(m: &FMod, ring: &Ring, group: &GroupModel, gens: &[Vec<u64>]) -> Result<(FMod, Mat), PerfectionError> {
    let nr = m.n_ring_ops;
    let id = identity(m);
    let r = group.w2_orders.len();
    let xi_orders: Vec<usize> = group.xi_orders.iter().map(|&o| o as usize).collect();
    let d = group.d as usize;
    let x1 = m.ops[nr].sub(&id);
    let f1 = distinguished_annihilator(m, ring, &x1)?;
    let n = f1.len() - 1;
    // A_J = tensor over j of A[y_j]/(((1+y_j)^{N_j} - 1)^{N'_j})
    let mut pdeg = vec![];
    let mut ypolys: Vec<Vec<Elem>> = vec![];
    let mut ys: Vec<Mat> = vec![];
    for j in 0..r {
        let w = &m.ops[nr + 2 + j];
        let a = find_annihilator(m, ring, w);
        if !is_p_power(a.n, group.p) {
            return Err(PerfectionError::Invariant("w2 annihilator exponent is not a p-power".into()));
        }
        // ((1+y)^N - 1)^{N'}
        let mut base = vec![ring.zero(); a.n as usize + 1];
        for (k, c) in base.iter_mut().enumerate().skip(1) {
            *c = ring.from_int(binom(a.n, k as u64));
        }
        let mut pol = vec![ring.one()];
        for _ in 0..a.n_prime {
            pol = poly_mul(ring, &pol, &base);
        }
        pdeg.push(pol.len() - 1);
        ypolys.push(pol);
        ys.push(w.sub(&id));
    }
    let ra: usize = pdeg.iter().product();
    let ycomp: Vec<AMat> = ypolys.iter().map(|p| companion(ring, p)).collect();
    // multiplication by y_j on A_J
    let ymul: Vec<AMat> = (0..r)
        .map(|j| {
            let mut a = AMat::zeros(ring, ra, ra);
            for c in 0..ra {
                let cd = digits(c, &pdeg);
                for t in 0..pdeg[j] {
                    let v = ycomp[j].get(cd[j], t);
                    if !ring.is_zero(v) {
                        let mut c2 = cd.clone();
                        c2[j] = t;
                        add_entry(&mut a, c, undigits(&c2, &pdeg), v);
                    }
                }
            }
            a
        })
        .collect();
    let iden = AMat::identity(ring, ra);
    let w2mul: Vec<AMat> = ymul.iter().map(|y| iden.add(y)).collect();
    let ords: Vec<u64> = w2mul.iter().map(amat_order).collect();
    // conjugation by w1 on A_J: y_j -> (1+y_j)^k - 1
    let phis: Vec<AMat> = (0..r).map(|j| w2mul[j].pow(group.conjugation_exponent(0, 2 + j, ords[j])).sub(&iden)).collect();
    let mut phi = AMat::zeros(ring, ra, ra);
    for c in 0..ra {
        let mut v = AMat::zeros(ring, 1, ra);
        v.set(0, 0, ring.one());
        for (j, &k) in digits(c, &pdeg).iter().enumerate() {
            v = v.mul(&phis[j].pow(k as u64));
        }
        for c2 in 0..ra {
            phi.set(c, c2, v.get(0, c2).clone());
        }
    }
    // tilde D = A_J[x_1]/(f_1), basis a_c x_1^t at index c * n + t
    let rd = ra * n;
    let mut w1d = AMat::zeros(ring, rd, rd);
    for c in 0..ra {
        for c2 in 0..ra {
            let pc = phi.get(c, c2);
            if ring.is_zero(pc) {
                continue;
            }
            for t in 0..n {
                add_entry(&mut w1d, c * n + t, c2 * n + t, pc);
                if t + 1 < n {
                    add_entry(&mut w1d, c * n + t, c2 * n + t + 1, pc);
                } else {
                    for s in 0..n {
                        add_entry(&mut w1d, c * n + t, c2 * n + s, &ring.neg(&ring.mul(pc, &f1[s])));
                    }
                }
            }
        }
    }
    let w2d: Vec<AMat> = w2mul
        .iter()
        .map(|w| {
            let mut a = AMat::zeros(ring, rd, rd);
            for c in 0..ra {
                for c2 in 0..ra {
                    let v = w.get(c, c2);
                    if !ring.is_zero(v) {
                        for t in 0..n {
                            a.set(c * n + t, c2 * n + t, v.clone());
                        }
                    }
                }
            }
            a
        })
        .collect();
    // induce: coset representatives xi sigma^u, index (xi * d + u)
    let nxi: usize = xi_orders.iter().product();
    let nrep = nxi * d;
    let copies = gens.len();
    let blk = copies * rd;
    let rank = nrep * blk;
    let w1c: Vec<u64> = (0..xi_orders.len()).map(|t| group.conjugation_exponent(0, 2 + r + t, xi_orders[t] as u64)).collect();
    let sgc: Vec<u64> = (0..xi_orders.len()).map(|t| group.conjugation_exponent(1, 2 + r + t, xi_orders[t] as u64)).collect();
    let conj = |xi: usize, c: &[u64]| -> usize {
        let xd: Vec<usize> = digits(xi, &xi_orders).iter().zip(c).zip(&xi_orders).map(|((&x, &k), &o)| (x * k as usize) % o).collect();
        undigits(&xd, &xi_orders)
    };
    let put = |a: &mut AMat, from: usize, to: usize, blockm: &AMat| {
        for i in 0..blk {
            for j in 0..blk {
                let v = blockm.get(i, j);
                if !ring.is_zero(v) {
                    a.set(from * blk + i, to * blk + j, v.clone());
                }
            }
        }
    };
    let ib = AMat::identity(ring, blk);
    let mut actions = vec![];
    for g in 0..group.ngens() {
        let mut a = AMat::zeros(ring, rank, rank);
        for xi in 0..nxi {
            for u in 0..d {
                let from = xi * d + u;
                match g {
                    0 => put(&mut a, from, conj(xi, &w1c) * d + u, &repeat(&w1d, copies)),
                    1 => put(&mut a, from, conj(xi, &sgc) * d + (u + 1) % d, &ib),
                    g if g < 2 + r => {
                        let j = g - 2;
                        let cs = group.conjugation_exponent(1, g, ords[j]);
                        let k = powmod(inv_mod(cs, ords[j]), u as u64, ords[j]);
                        put(&mut a, from, from, &repeat(&w2d[j].pow(k), copies));
                    }
                    g => {
                        let t = g - 2 - r;
                        let mut xd = digits(xi, &xi_orders);
                        xd[t] = (xd[t] + 1) % xi_orders[t];
                        put(&mut a, from, undigits(&xd, &xi_orders) * d + u, &ib);
                    }
                }
            }
        }
        actions.push(a);
    }
    let module = FMod::free(ring, rank, &actions);
    // (xi sigma^u) (x) v  ->  xi sigma^u . phi(v)
    let na = ring.dim();
    let inner = map_from(m, ring, rd, copies, |i, b| {
        let (c, t) = (b / n, b % n);
        let mut v = apply_pow(&x1, &gens[i], t);
        for (j, &k) in digits(c, &pdeg).iter().enumerate() {
            v = apply_pow(&ys[j], &v, k);
        }
        v
    });
    let mut map = Mat::zeros(m.md, rank * na, m.dim);
    for xi in 0..nxi {
        for u in 0..d {
            let mut op = m.ops[nr + 1].pow(u as u64);
            for (t, &k) in digits(xi, &xi_orders).iter().enumerate() {
                op = op.mul(&m.ops[nr + 2 + r + t].pow(k as u64));
            }
            map.put_block((xi * d + u) * blk * na, 0, &inner.mul(&op));
        }
    }
    Ok((module, map))
}

fn binom(n: u64, k: u64) -> i64 {
    let mut r: i128 = 1;
    for i in 0..k {
        r = r * (n - i) as i128 / (i + 1) as i128;
    }
    // reduced later modulo q; keep it small
    (r % (1i128 << 62)) as i64
}

fn poly_mul(ring: &Ring, a: &[Elem], b: &[Elem]) -> Vec<Elem> {
    let mut out = vec![ring.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = ring.add(&out[i + j], &ring.mul(x, y));
        }
    }
    out
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * a % m;
        }
        a = a * a % m;
        e >>= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::to_gmodule;

    fn check(m: &FMod, ring: &Ring, group: &GroupModel) {
        let c = free_cover(m, ring, group).unwrap();
        let (g, _) = to_gmodule(&c.module, ring).unwrap();
        group.check_continuous_action(&g.actions).unwrap();
    }

    #[test]
    fn case_a_cover_of_nonfree_module() {
        // Z/2 with trivial action, over Z/4: not A-free
        let z4 = Ring::zq(2, 2).unwrap();
        let g = GroupModel::z2_times_z2(2);
        let m = FMod::free(&z4, 1, &[AMat::identity(&z4, 1), AMat::identity(&z4, 1)]);
        let two = crate::linalg::Howell::full(m.md, 1).image_under(&Mat::scalar(m.md, 1, 2));
        let m = m.quotient(&two);
        assert!(!m.is_a_free(&z4));
        check(&m, &z4, &g);
        let c = free_cover(&m, &z4, &g).unwrap();
        // A[x]/(x) (x) A[Z/2], one copy
        assert_eq!(c.module.dim, 2);
    }

    #[test]
    fn case_b_induced_cover() {
        let z4 = Ring::zq(2, 2).unwrap();
        let g = GroupModel::case_b(2, 5, 1, 3, 1, &[2], &[3]).unwrap();
        let ones = vec![AMat::identity(&z4, 1); g.ngens()];
        let m = FMod::free(&z4, 1, &ones);
        let two = crate::linalg::Howell::full(m.md, 1).image_under(&Mat::scalar(m.md, 1, 2));
        let m = m.quotient(&two);
        check(&m, &z4, &g);
        let c = free_cover(&m, &z4, &g).unwrap();
        // induced from tilde Delta: index d * |xi| = 9
        assert_eq!(c.module.dim, 9);
    }
}
