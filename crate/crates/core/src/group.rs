//! Finite-level models of the groups the pipeline works over.
//!
//! Case A is a finite abelian group `Z/p^{L_1} x .. x Q x Q'` in which some
//! cyclic factors are flagged as truncations of a procyclic `Z_p`. Case B is
//! the metabelian group `(prod_j <w_2j> x Xi) . <Phi>`, where `Phi` acts on
//! the normal abelian part by the `l^f`-th power map; `w_1 = Phi^d` and
//! `sigma` is the element of order `d` in `<Phi>` whose image in the
//! `Z_p`-part is trivial.

use crate::linalg::{Howell, Mat, Modulus};
use crate::ring::{AMat, Elem, Ring};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("{0}")]
    Invalid(String),
    #[error("level violates the congruence condition: {ell}^({f}*{order}) is not 1 modulo {modulus}")]
    Congruence { ell: u64, f: u32, order: u64, modulus: u64 },
    #[error("normal-form basis is only defined for case B")]
    NotCaseB,
    #[error("group too large to realise ({0} elements)")]
    TooLarge(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenKind {
    /// Truncation of a `Z_p` factor.
    Procyclic,
    /// Finite cyclic factor.
    Finite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub order: u64,
    pub kind: GenKind,
}

/// JSON form of a group model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupSpec {
    pub case: Case,
    pub p: u64,
    #[serde(default)]
    pub ell: u64,
    #[serde(default = "one_u32")]
    pub f: u32,
    #[serde(default = "one_u64")]
    pub d: u64,
    #[serde(default = "one_usize")]
    pub r: usize,
    /// `w_1` (case B) or every procyclic factor (case A) has order `p^level`.
    pub level: u32,
    /// Case B: each `w_2j` has order `p^w2_level`.
    #[serde(default)]
    pub w2_level: u32,
    /// Case A: number of procyclic factors.
    #[serde(default = "one_usize")]
    pub s: usize,
    #[serde(default, rename = "tildeDelta1")]
    pub tilde_delta1: Vec<u64>,
    #[serde(default, rename = "Q")]
    pub q: Vec<u64>,
    #[serde(default, rename = "Qprime")]
    pub qprime: Vec<u64>,
}

fn one_u32() -> u32 {
    1
}
fn one_u64() -> u64 {
    1
}
fn one_usize() -> usize {
    1
}

impl GroupSpec {
    pub fn build(&self) -> Result<GroupModel, GroupError> {
        match self.case {
            Case::A => {
                let levels = vec![self.level; self.s];
                GroupModel::case_a(self.p, &levels, &self.q, &self.qprime)
            }
            Case::B => GroupModel::case_b(
                self.p,
                self.ell,
                self.f,
                self.d,
                self.level,
                &vec![self.w2_level; self.r],
                &self.tilde_delta1,
            ),
        }
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * a as u128 % m as u128) as u64;
        }
        a = (a as u128 * a as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i64, (a % m) as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i64) as u64)
}

/// Finite group given by exponent tuples.
///
/// Case A tuples are the exponents of the generators. Case B tuples are
/// `(e, b_1..b_r, xi_1..xi_k)` standing for `w_2^b xi Phi^e`, with `e`
/// taken modulo `p^L d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupModel {
    pub case: Case,
    pub p: u64,
    pub gens: Vec<Generator>,
    pub ell: u64,
    pub f: u32,
    pub d: u64,
    pub level: u32,
    /// Case B: orders of the `w_2j` and of the factors of `tilde Delta_1`.
    pub w2_orders: Vec<u64>,
    pub xi_orders: Vec<u64>,
    radix: Vec<u64>,
    /// Case B: exponent of `Phi` giving `sigma`.
    e_sigma: u64,
}

impl GroupModel {
    /// Abelian model: procyclic factors truncated at the given levels, a
    /// finite `p`-group `Q` and a `p'`-group `Q'`, all as cyclic factors.
    pub fn case_a(p: u64, levels: &[u32], q: &[u64], qprime: &[u64]) -> Result<GroupModel, GroupError> {
        if !is_prime(p) {
            return Err(GroupError::Invalid(format!("{p} is not prime")));
        }
        let mut gens = vec![];
        for (j, &l) in levels.iter().enumerate() {
            let name = if levels.len() == 1 { "w1".to_string() } else { format!("w1_{}", j + 1) };
            gens.push(Generator { name, order: p.pow(l), kind: GenKind::Procyclic });
        }
        for (j, &o) in q.iter().enumerate() {
            let mut k = o;
            while k % p == 0 {
                k /= p;
            }
            if k != 1 {
                return Err(GroupError::Invalid(format!("Q factor {o} is not a power of {p}")));
            }
            let name = if q.len() == 1 { "w2".to_string() } else { format!("w2_{}", j + 1) };
            gens.push(Generator { name, order: o, kind: GenKind::Finite });
        }
        for (j, &o) in qprime.iter().enumerate() {
            if o % p == 0 {
                return Err(GroupError::Invalid(format!("Q' factor {o} is divisible by {p}")));
            }
            gens.push(Generator { name: format!("z{}", j + 1), order: o, kind: GenKind::Finite });
        }
        let radix = gens.iter().map(|g| g.order).collect();
        Ok(GroupModel {
            case: Case::A,
            p,
            gens,
            ell: 0,
            f: 0,
            d: 1,
            level: levels.first().copied().unwrap_or(0),
            w2_orders: vec![],
            xi_orders: vec![],
            radix,
            e_sigma: 0,
        })
    }

    /// `Z_2 x Z/2` at level `L`, the group of the worked example.
    pub fn z2_times_z2(level: u32) -> GroupModel {
        GroupModel::case_a(2, &[level], &[2], &[]).unwrap()
    }

    /// Metabelian model with `w_1` of order `p^l1`, each `w_2j` of order
    /// `p^{l2_j}`, and `tilde Delta_1 = prod Z/xi_i`.
    pub fn case_b(p: u64, ell: u64, f: u32, d: u64, l1: u32, l2: &[u32], xi: &[u64]) -> Result<GroupModel, GroupError> {
        if !is_prime(p) || !is_prime(ell) || ell == p {
            return Err(GroupError::Invalid(format!("need distinct primes p={p}, l={ell}")));
        }
        if d == 0 || d % p == 0 {
            return Err(GroupError::Invalid(format!("d={d} must be prime to p")));
        }
        for &x in xi {
            if x == 0 || x % p == 0 || x % ell == 0 {
                return Err(GroupError::Invalid(format!("tilde Delta_1 factor {x} must be prime to p and l")));
            }
        }
        let pl = p.pow(l1);
        let phi_order = pl * d;
        let q = ell.pow(f);
        let w2_orders: Vec<u64> = l2.iter().map(|&s| p.pow(s)).collect();
        for &m in w2_orders.iter().chain(xi) {
            if powmod(q, phi_order, m) != 1 % m {
                return Err(GroupError::Congruence { ell, f, order: phi_order, modulus: m });
            }
        }
        // sigma = Phi^e with e = 0 mod p^L and e = 1 mod d
        let e_sigma = (0..phi_order).step_by(pl as usize).find(|e| e % d == 1 % d).unwrap_or(0);
        let mut gens = vec![
            Generator { name: "w1".into(), order: pl, kind: GenKind::Procyclic },
            Generator { name: "sigma".into(), order: d, kind: GenKind::Finite },
        ];
        for (j, &o) in w2_orders.iter().enumerate() {
            let name = if w2_orders.len() == 1 { "w2".to_string() } else { format!("w2_{}", j + 1) };
            gens.push(Generator { name, order: o, kind: GenKind::Procyclic });
        }
        for (j, &o) in xi.iter().enumerate() {
            gens.push(Generator { name: format!("xi{}", j + 1), order: o, kind: GenKind::Finite });
        }
        let mut radix = vec![phi_order];
        radix.extend(&w2_orders);
        radix.extend(xi);
        Ok(GroupModel {
            case: Case::B,
            p,
            gens,
            ell,
            f,
            d,
            level: l1,
            w2_orders,
            xi_orders: xi.to_vec(),
            radix,
            e_sigma,
        })
    }

    /// Adjoins a trivially-interacting cyclic factor of order prime to `p`.
    pub fn times_cyclic(&self, order: u64, name: &str) -> Result<GroupModel, GroupError> {
        if order % self.p == 0 {
            return Err(GroupError::Invalid(format!("extra factor {order} not prime to p")));
        }
        if self.case == Case::B {
            return Err(GroupError::Invalid("direct factors are only adjoined to case A models".into()));
        }
        let mut g = self.clone();
        g.gens.push(Generator { name: name.into(), order, kind: GenKind::Finite });
        g.radix.push(order);
        Ok(g)
    }

    pub fn order(&self) -> usize {
        self.radix.iter().product::<u64>() as usize
    }

    pub fn ngens(&self) -> usize {
        self.gens.len()
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn decode(&self, mut i: usize) -> Vec<u64> {
        let mut t = Vec::with_capacity(self.radix.len());
        for &r in &self.radix {
            t.push((i as u64) % r);
            i /= r as usize;
        }
        t
    }

    pub fn encode(&self, t: &[u64]) -> usize {
        let mut i = 0u64;
        for (k, &r) in self.radix.iter().enumerate().rev() {
            i = i * r + t[k] % r;
        }
        i as usize
    }

    /// `x -> x^(l^(f e))` on the normal abelian part, case B.
    fn twist(&self, t: &[u64], e: u64) -> Vec<u64> {
        let mut out = t.to_vec();
        let q = self.ell.pow(self.f);
        for k in 1..self.radix.len() {
            let m = self.radix[k];
            out[k] = (t[k] as u128 * powmod(q, e, m) as u128 % m as u128) as u64;
        }
        out
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        let (x, y) = (self.decode(a), self.decode(b));
        match self.case {
            Case::A => {
                let t: Vec<u64> = x.iter().zip(&y).zip(&self.radix).map(|((u, v), r)| (u + v) % r).collect();
                self.encode(&t)
            }
            Case::B => {
                // (n1 Phi^e1)(n2 Phi^e2) = n1 (Phi^e1 n2 Phi^-e1) Phi^(e1+e2)
                let y2 = self.twist(&y, x[0]);
                let mut t = vec![(x[0] + y[0]) % self.radix[0]];
                for k in 1..self.radix.len() {
                    t.push((x[k] + y2[k]) % self.radix[k]);
                }
                self.encode(&t)
            }
        }
    }

    pub fn inv(&self, a: usize) -> usize {
        let x = self.decode(a);
        match self.case {
            Case::A => {
                let t: Vec<u64> = x.iter().zip(&self.radix).map(|(u, r)| (r - u) % r).collect();
                self.encode(&t)
            }
            Case::B => {
                // (n Phi^e)^-1 = Phi^-e n^-1 = (Phi^-e n^-1 Phi^e) Phi^-e
                let e = (self.radix[0] - x[0]) % self.radix[0];
                let mut ninv = vec![0];
                for k in 1..self.radix.len() {
                    ninv.push((self.radix[k] - x[k]) % self.radix[k]);
                }
                let mut t = self.twist(&ninv, e);
                t[0] = e;
                self.encode(&t)
            }
        }
    }

    pub fn pow(&self, a: usize, e: u64) -> usize {
        let mut r = self.identity();
        for _ in 0..e {
            r = self.mul(r, a);
        }
        r
    }

    /// The `Phi` element (case B).
    pub fn phi(&self) -> usize {
        let mut t = vec![0; self.radix.len()];
        t[0] = 1;
        self.encode(&t)
    }

    pub fn gen(&self, i: usize) -> usize {
        let mut t = vec![0; self.radix.len()];
        match self.case {
            Case::A => t[i] = 1,
            Case::B => match i {
                0 => t[0] = self.d % self.radix[0],
                1 => t[0] = self.e_sigma,
                k => t[k - 1] = 1,
            },
        }
        self.encode(&t)
    }

    /// Writes an element as a word `prod gen_i^k_i` in generator order
    /// (case B: `w_2^b xi w_1^x sigma^y`).
    pub fn word(&self, a: usize) -> Vec<(usize, u64)> {
        let t = self.decode(a);
        match self.case {
            Case::A => t.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i, k)).collect(),
            Case::B => {
                let mut w: Vec<(usize, u64)> =
                    (1..t.len()).filter(|&k| t[k] > 0).map(|k| (k + 1, t[k])).collect();
                // Phi = w1^(d^-1 mod p^L) sigma
                let pl = self.radix[0] / self.d;
                let dinv = inv_mod(self.d % pl, pl).unwrap_or(0);
                let x = (t[0] % pl) * dinv % pl.max(1);
                let y = t[0] % self.d;
                if x > 0 {
                    w.push((0, x));
                }
                if y > 0 {
                    w.push((1, y));
                }
                w
            }
        }
    }

    /// Checks every defining relation in the realised group.
    pub fn verify(&self) -> Result<(), GroupError> {
        if self.order() > 1 << 16 {
            return Err(GroupError::TooLarge(self.order()));
        }
        let n = self.ngens();
        for i in 0..n {
            let g = self.gen(i);
            let o = self.gens[i].order;
            if self.pow(g, o) != self.identity() {
                return Err(GroupError::Invalid(format!("{} does not have order dividing {o}", self.gens[i].name)));
            }
            for k in 1..o {
                if o % k == 0 && self.pow(g, k) == self.identity() {
                    return Err(GroupError::Invalid(format!("{} has order below {o}", self.gens[i].name)));
                }
            }
        }
        for (i, j, rhs) in self.relations() {
            let (g, h) = (self.gen(i), self.gen(j));
            let lhs = self.mul(self.mul(g, h), self.inv(g));
            if lhs != self.pow(h, rhs) {
                return Err(GroupError::Invalid(format!(
                    "{} {} {}^-1 != {}^{}",
                    self.gens[i].name, self.gens[j].name, self.gens[i].name, self.gens[j].name, rhs
                )));
            }
        }
        // words reproduce elements
        for a in 0..self.order() {
            let mut x = self.identity();
            for (i, k) in self.word(a) {
                x = self.mul(x, self.pow(self.gen(i), k));
            }
            if x != a {
                return Err(GroupError::Invalid(format!("word of element {a} is wrong")));
            }
        }
        Ok(())
    }

    /// Conjugation relations `g_i g_j g_i^-1 = g_j^k`, as `(i, j, k)`.
    pub fn relations(&self) -> Vec<(usize, usize, u64)> {
        let n = self.ngens();
        let mut out = vec![];
        for i in 0..n {
            for j in 0..n {
                // w2/xi conjugating w1/sigma is implied by the twist relations
                if i == j || (self.case == Case::B && i >= 2 && j <= 1) {
                    continue;
                }
                let k = match self.case {
                    Case::A => 1,
                    Case::B => {
                        if j <= 1 || i >= 2 {
                            1
                        } else {
                            let e = if i == 0 { self.d } else { self.e_sigma };
                            powmod(self.ell.pow(self.f), e, self.gens[j].order)
                        }
                    }
                };
                out.push((i, j, k));
            }
        }
        out
    }

    /// Checks that matrices (row convention, `W_gh = W_h W_g`) satisfy the
    /// presentation.
    pub fn check_action(&self, w: &[AMat]) -> Result<(), String> {
        if w.len() != self.ngens() {
            return Err(format!("expected {} action matrices, got {}", self.ngens(), w.len()));
        }
        let ring = &w[0].ring;
        let n = w[0].rows;
        let id = AMat::identity(ring, n);
        for (i, g) in self.gens.iter().enumerate() {
            if w[i].pow(g.order) != id {
                return Err(format!("action of {} does not have order dividing {}", g.name, g.order));
            }
        }
        for (i, j, k) in self.relations() {
            // g_i g_j = g_j^k g_i  <=>  W_j W_i = W_i W_j^k
            if w[j].mul(&w[i]) != w[i].mul(&w[j].pow(k)) {
                return Err(format!("relation {} {} {}^-1 = {}^{} fails", self.gens[i].name, self.gens[j].name, self.gens[i].name, self.gens[j].name, k));
            }
        }
        Ok(())
    }

    /// Exponent `k` with `g_i g_j g_i^-1 = g_j^k` when `g_j` acts with order
    /// dividing `modulus` (a `p`-power for procyclic `g_j`, which may exceed
    /// the model's level).
    pub fn conjugation_exponent(&self, i: usize, j: usize, modulus: u64) -> u64 {
        if self.case == Case::A || j <= 1 || i >= 2 {
            return 1 % modulus;
        }
        let q = self.ell.pow(self.f);
        if i == 0 {
            return powmod(q, self.d, modulus);
        }
        // sigma is the prime-to-p part of Phi: exponent 0 mod p^big, 1 mod d
        let pbig = modulus.max(self.radix[0] / self.d);
        let e = (0..pbig * self.d).step_by(pbig as usize).find(|e| e % self.d == 1 % self.d).unwrap_or(0);
        powmod(q, e, modulus)
    }

    /// Like `check_action`, but procyclic generators may act with any
    /// `p`-power order: such modules are continuous modules of the profinite
    /// group that do not factor through this level.
    pub fn check_continuous_action(&self, w: &[AMat]) -> Result<(), String> {
        if w.len() != self.ngens() {
            return Err(format!("expected {} action matrices, got {}", self.ngens(), w.len()));
        }
        let ring = &w[0].ring;
        let id = AMat::identity(ring, w[0].rows);
        let mut orders = vec![];
        for (i, g) in self.gens.iter().enumerate() {
            let o = match g.kind {
                GenKind::Finite => {
                    if w[i].pow(g.order) != id {
                        return Err(format!("action of {} does not have order dividing {}", g.name, g.order));
                    }
                    g.order
                }
                GenKind::Procyclic => {
                    let mut o = 1u64;
                    let mut m = w[i].clone();
                    while m != id {
                        if o > 1 << 40 {
                            return Err(format!("action of {} does not have p-power order", g.name));
                        }
                        m = m.pow(self.p);
                        o *= self.p;
                    }
                    o
                }
            };
            orders.push(o);
        }
        for (i, j, _) in self.relations() {
            let k = self.conjugation_exponent(i, j, orders[j]);
            if w[j].mul(&w[i]) != w[i].mul(&w[j].pow(k)) {
                return Err(format!("relation {} {} {}^-1 = {}^{} fails", self.gens[i].name, self.gens[j].name, self.gens[i].name, self.gens[j].name, k));
            }
        }
        Ok(())
    }

    /// Matrix of an arbitrary element from generator matrices.
    pub fn element_matrix(&self, a: usize, w: &[AMat]) -> AMat {
        let ring = &w[0].ring;
        let mut m = AMat::identity(ring, w[0].rows);
        // word g_1^k_1 ... g_t^k_t acts by W_t^k_t ... W_1^k_1
        for (i, k) in self.word(a) {
            m = w[i].pow(k).mul(&m);
        }
        m
    }

    /// Permutation matrix of right multiplication `x -> x g` on `Z/q[G]`.
    pub fn right_regular(&self, md: Modulus, g: usize) -> Mat {
        let n = self.order();
        let mut m = Mat::zeros(md, n, n);
        for x in 0..n {
            m.set(x, self.mul(x, g), 1);
        }
        m
    }

    pub fn spec(&self) -> GroupSpec {
        match self.case {
            Case::A => {
                let procyclic: Vec<&Generator> = self.gens.iter().filter(|g| g.kind == GenKind::Procyclic).collect();
                let finite: Vec<u64> = self.gens.iter().filter(|g| g.kind == GenKind::Finite).map(|g| g.order).collect();
                GroupSpec {
                    case: Case::A,
                    p: self.p,
                    ell: 0,
                    f: 1,
                    d: 1,
                    r: 1,
                    level: self.level,
                    w2_level: 0,
                    s: procyclic.len(),
                    tilde_delta1: vec![],
                    q: finite.iter().copied().filter(|o| o % self.p == 0).collect(),
                    qprime: finite.iter().copied().filter(|o| o % self.p != 0).collect(),
                }
            }
            Case::B => {
                let o = self.w2_orders.first().copied().unwrap_or(1);
                let mut w2_level = 0;
                let mut k = o;
                while k > 1 {
                    k /= self.p;
                    w2_level += 1;
                }
                GroupSpec {
                    case: Case::B,
                    p: self.p,
                    ell: self.ell,
                    f: self.f,
                    d: self.d,
                    r: self.w2_orders.len(),
                    level: self.level,
                    w2_level,
                    s: 1,
                    tilde_delta1: self.xi_orders.clone(),
                    q: vec![],
                    qprime: vec![],
                }
            }
        }
    }
}

/// `A[G]`, elements as coefficient vectors indexed by group elements.
#[derive(Clone, Debug)]
pub struct GroupAlgebra {
    pub ring: Ring,
    pub group: Arc<GroupModel>,
}

pub type GElem = Vec<Elem>;

impl GroupAlgebra {
    pub fn new(ring: &Ring, group: &GroupModel) -> Self {
        GroupAlgebra { ring: ring.clone(), group: Arc::new(group.clone()) }
    }

    pub fn zero(&self) -> GElem {
        vec![self.ring.zero(); self.group.order()]
    }

    pub fn basis(&self, g: usize) -> GElem {
        let mut x = self.zero();
        x[g] = self.ring.one();
        x
    }

    pub fn one(&self) -> GElem {
        self.basis(self.group.identity())
    }

    pub fn add(&self, a: &GElem, b: &GElem) -> GElem {
        a.iter().zip(b).map(|(x, y)| self.ring.add(x, y)).collect()
    }

    pub fn sub(&self, a: &GElem, b: &GElem) -> GElem {
        a.iter().zip(b).map(|(x, y)| self.ring.sub(x, y)).collect()
    }

    pub fn scale(&self, a: &GElem, s: &[u64]) -> GElem {
        a.iter().map(|x| self.ring.mul(x, s)).collect()
    }

    pub fn mul(&self, a: &GElem, b: &GElem) -> GElem {
        let r = &self.ring;
        let mut out = self.zero();
        for (g, x) in a.iter().enumerate() {
            if r.is_zero(x) {
                continue;
            }
            for (h, y) in b.iter().enumerate() {
                if r.is_zero(y) {
                    continue;
                }
                let gh = self.group.mul(g, h);
                out[gh] = r.add(&out[gh], &r.mul(x, y));
            }
        }
        out
    }

    pub fn pow(&self, a: &GElem, k: u64) -> GElem {
        let mut r = self.one();
        for _ in 0..k {
            r = self.mul(&r, a);
        }
        r
    }

    /// `g - 1`.
    pub fn minus_one(&self, g: usize) -> GElem {
        let mut x = self.basis(g);
        let e = self.group.identity();
        x[e] = self.ring.sub(&x[e], &self.ring.one());
        x
    }

    pub fn augmentation(&self, a: &GElem) -> Elem {
        a.iter().fold(self.ring.zero(), |acc, x| self.ring.add(&acc, x))
    }

    pub fn is_zero(&self, a: &GElem) -> bool {
        a.iter().all(|x| self.ring.is_zero(x))
    }

    /// Flattened `Z/q` coordinates.
    pub fn coords(&self, a: &GElem) -> Vec<u64> {
        a.iter().flatten().copied().collect()
    }

    pub fn from_coords(&self, v: &[u64]) -> GElem {
        let n = self.ring.dim();
        v.chunks(n).map(|c| self.ring.canon(c.to_vec())).collect()
    }

    /// Relation span of the underlying `Z/q`-module.
    pub fn rel(&self) -> Howell {
        let n = self.ring.dim();
        let g = self.group.order();
        let mut rows = vec![];
        for k in 0..g {
            for r in self.ring.rel().rows() {
                let mut v = vec![0; n * g];
                v[k * n..(k + 1) * n].copy_from_slice(&r);
                rows.push(v);
            }
        }
        Howell::of_rows(self.ring.md(), n * g, rows)
    }

    /// Two-sided ideal spans, as `Z/q`-submodules of the coordinate space.
    pub fn left_ideal(&self, x: &GElem) -> Howell {
        let rows = self.spanning_products(|b| self.mul(b, x));
        self.rel().add_rows(rows)
    }

    pub fn right_ideal(&self, x: &GElem) -> Howell {
        let rows = self.spanning_products(|b| self.mul(x, b));
        self.rel().add_rows(rows)
    }

    fn spanning_products(&self, f: impl Fn(&GElem) -> GElem) -> Vec<Vec<u64>> {
        let n = self.ring.dim();
        let mut rows = vec![];
        for g in 0..self.group.order() {
            for k in 0..n {
                let mut e = vec![0; n];
                e[k] = 1;
                let mut b = self.zero();
                b[g] = self.ring.canon(e);
                rows.push(self.coords(&f(&b)));
            }
        }
        rows
    }
}

/// One label `sigma^u (w1-1)^a xi w2^b (w2^{p^s}-1)^c` of the normal-form basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub u: u64,
    pub a: u64,
    pub xi: usize,
    pub b: u64,
    pub c: u64,
}

/// Normal-form basis of `A[Gamma]` for a case-B model with one `w_2`.
pub struct NormalForm {
    pub alg: GroupAlgebra,
    pub s: u32,
    pub labels: Vec<Label>,
    /// Row `i`: group-element coefficients (integers mod q) of label `i`.
    pub to_group: Mat,
    pub from_group: Mat,
    pub right_handed: bool,
}

impl NormalForm {
    /// Left-handed form `sigma^u (w1-1)^a xi w2^b (w2^{p^s}-1)^c`, or with
    /// `right_handed` the mirror `(w2^{p^s}-1)^c w2^b xi (w1-1)^a sigma^u`.
    pub fn new(ring: &Ring, group: &GroupModel, s: u32, right_handed: bool) -> Result<NormalForm, GroupError> {
        if group.case != Case::B || group.w2_orders.len() != 1 {
            return Err(GroupError::NotCaseB);
        }
        let p = group.p;
        let ps = p.pow(s);
        let w2o = group.w2_orders[0];
        if w2o % ps != 0 {
            return Err(GroupError::Invalid(format!("p^s = {ps} does not divide the order {w2o} of w2")));
        }
        // integer structure: work over Z/q with the trivial coefficient ring
        let md = ring.md();
        let zq = Ring::zq(md.p(), md.m()).map_err(|e| GroupError::Invalid(e.to_string()))?;
        let alg = GroupAlgebra::new(&zq, group);
        let g = |name: &str| group.gen(group.gen_index(name).unwrap());
        let sigma = alg.basis(g("sigma"));
        let x1 = alg.minus_one(g("w1"));
        let w2 = alg.basis(g("w2"));
        let y = alg.minus_one(group.pow(g("w2"), ps));
        let xis: Vec<usize> = xi_elements(group);
        let mut labels = vec![];
        let mut rows = vec![];
        let a_max = group.gens[0].order;
        let c_max = w2o / ps;
        for u in 0..group.d {
            for a in 0..a_max {
                for (xk, &xe) in xis.iter().enumerate() {
                    for b in 0..ps {
                        for c in 0..c_max {
                            let parts = [
                                alg.pow(&sigma, u),
                                alg.pow(&x1, a),
                                alg.basis(xe),
                                alg.pow(&w2, b),
                                alg.pow(&y, c),
                            ];
                            let prod = if right_handed {
                                parts.iter().rev().fold(alg.one(), |acc, x| alg.mul(&acc, x))
                            } else {
                                parts.iter().fold(alg.one(), |acc, x| alg.mul(&acc, x))
                            };
                            labels.push(Label { u, a, xi: xk, b, c });
                            rows.push(alg.coords(&prod));
                        }
                    }
                }
            }
        }
        let n = group.order();
        let to_group = Mat::from_rows(md, n, &rows);
        let from_group = invert(&to_group).ok_or_else(|| GroupError::Invalid("normal-form change of basis is singular".into()))?;
        Ok(NormalForm { alg: GroupAlgebra::new(ring, group), s, labels, to_group, from_group, right_handed })
    }

    pub fn label_index(&self, l: &Label) -> Option<usize> {
        self.labels.iter().position(|x| x == l)
    }

    /// Coordinates (in `A`) on the labels.
    pub fn to_normal_form(&self, x: &GElem) -> Vec<Elem> {
        apply_int_matrix(&self.alg.ring, x, &self.from_group)
    }

    pub fn from_normal_form(&self, z: &[Elem]) -> GElem {
        apply_int_matrix(&self.alg.ring, z, &self.to_group)
    }
}

/// Elements of `tilde Delta_1` in tuple order.
fn xi_elements(group: &GroupModel) -> Vec<usize> {
    let k = group.xi_orders.len();
    let total: u64 = group.xi_orders.iter().product();
    let off = 1 + group.w2_orders.len();
    (0..total)
        .map(|mut i| {
            let mut t = vec![0; off + k];
            for j in 0..k {
                t[off + j] = i % group.xi_orders[j];
                i /= group.xi_orders[j];
            }
            group.encode(&t)
        })
        .collect()
}

/// `x * M` where `x` has entries in `A` and `M` is an integer matrix.
fn apply_int_matrix(ring: &Ring, x: &[Elem], m: &Mat) -> Vec<Elem> {
    let mut out = vec![ring.zero(); m.cols];
    for (i, xi) in x.iter().enumerate() {
        if ring.is_zero(xi) {
            continue;
        }
        for j in 0..m.cols {
            let c = m.get(i, j);
            if c != 0 {
                out[j] = ring.add(&out[j], &ring.scale(xi, c));
            }
        }
    }
    out
}

/// Inverse of a square matrix over `Z/q`, if it exists.
pub fn invert(m: &Mat) -> Option<Mat> {
    let n = m.rows;
    let solver = crate::linalg::Solver::new(m);
    if !solver.kernel().is_zero() {
        return None;
    }
    let mut rows = vec![];
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 1;
        rows.push(solver.solve(&e).ok()??);
    }
    Some(Mat::from_rows(m.md, n, &rows))
}

/// Both sides of the commutation identity for `J = B (w_2^N - 1)^{N'}`.
#[derive(Clone, Debug, Serialize)]
pub struct CommuteCertificate {
    pub n: u64,
    pub n_prime: u64,
    /// `(w2^N-1)^N' Phi^-1 = Phi^-1 (w2^{l^f N}-1)^N'`.
    pub holds: bool,
    /// Whether the variant with `Phi` (not `Phi^-1`) on the right also holds.
    pub variant_with_phi_holds: bool,
    /// `(w2^{l^f N}-1) = (sum_i w2^{iN}) (w2^N - 1)`.
    pub factorisation_holds: bool,
}

pub fn commute_ideal_generator(alg: &GroupAlgebra, n: u64, n_prime: u64) -> Result<CommuteCertificate, GroupError> {
    let g = &alg.group;
    if g.case != Case::B {
        return Err(GroupError::NotCaseB);
    }
    let w2 = g.gen(g.gen_index("w2").ok_or(GroupError::NotCaseB)?);
    let phi = g.phi();
    let phi_inv = g.inv(phi);
    let q = g.ell.pow(g.f);
    let lhs_gen = alg.pow(&alg.minus_one(g.pow(w2, n)), n_prime);
    let rhs_gen = alg.pow(&alg.minus_one(g.pow(w2, q * n)), n_prime);
    let lhs = alg.mul(&lhs_gen, &alg.basis(phi_inv));
    let rhs = alg.mul(&alg.basis(phi_inv), &rhs_gen);
    let rhs_variant = alg.mul(&alg.basis(phi), &rhs_gen);
    let mut sum = alg.zero();
    for i in 0..q {
        sum = alg.add(&sum, &alg.basis(g.pow(w2, i * n)));
    }
    let fact = alg.mul(&sum, &alg.minus_one(g.pow(w2, n)));
    Ok(CommuteCertificate {
        n,
        n_prime,
        holds: lhs == rhs,
        variant_with_phi_holds: lhs == rhs_variant,
        factorisation_holds: fact == alg.minus_one(g.pow(w2, q * n)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_of_the_example() {
        let g = GroupModel::z2_times_z2(3);
        assert_eq!(g.order(), 16);
        g.verify().unwrap();
    }

    #[test]
    fn trivial_group() {
        let g = GroupModel::case_a(2, &[], &[], &[]).unwrap();
        assert_eq!(g.order(), 1);
        g.verify().unwrap();
    }

    #[test]
    fn metabelian_example() {
        // w1 w2 w1^-1 = w2^3 with w2 of order 4
        let g = GroupModel::case_b(2, 3, 1, 1, 1, &[2], &[]).unwrap();
        g.verify().unwrap();
        assert_eq!(g.order(), 8);
        let (w1, w2) = (g.gen(0), g.gen(2));
        assert_eq!(g.mul(g.mul(w1, w2), g.inv(w1)), g.pow(w2, 3));
        assert_ne!(g.mul(w1, w2), g.mul(w2, w1));
    }

    #[test]
    fn congruence_violation_rejected() {
        // 3^2 = 9 is not 1 mod 16
        let e = GroupModel::case_b(2, 3, 1, 1, 1, &[4], &[]);
        assert!(matches!(e, Err(GroupError::Congruence { .. })));
    }

    #[test]
    fn case_b_with_sigma_and_xi() {
        // p = 2, l = 3, f = 1, d = 1 needs nothing of sigma; take l = 5, d = 3
        let g = GroupModel::case_b(2, 5, 1, 3, 1, &[2], &[3]).unwrap();
        g.verify().unwrap();
        assert_eq!(g.order(), 2 * 3 * 4 * 3);
    }
}
