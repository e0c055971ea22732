//! Exact linear algebra over `Z/p^m`.
//!
//! Row vectors act on the left of matrices throughout the crate: a matrix
//! with `r` rows and `c` columns is the map `x -> x * M` from `(Z/q)^r` to
//! `(Z/q)^c`. Submodules of `(Z/q)^n` are carried as Howell forms, whose rows
//! are a canonical representative of the row span.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("exponent must be at least 1")]
    ZeroExponent,
    #[error("modulus {0}^{1} is too large for 64-bit products")]
    TooLarge(u64, u32),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },
    #[error("matrices over different moduli")]
    ModulusMismatch,
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The coefficient ring `Z/p^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ModulusSpec", into = "ModulusSpec")]
pub struct Modulus {
    p: u64,
    m: u32,
    q: u64,
    mask: u64,
}

#[derive(Serialize, Deserialize)]
struct ModulusSpec {
    p: u64,
    m: u32,
}

impl TryFrom<ModulusSpec> for Modulus {
    type Error = LinalgError;
    fn try_from(s: ModulusSpec) -> Result<Self, LinalgError> {
        Modulus::new(s.p, s.m)
    }
}

impl From<Modulus> for ModulusSpec {
    fn from(md: Modulus) -> Self {
        ModulusSpec { p: md.p, m: md.m }
    }
}

impl Modulus {
    pub fn new(p: u64, m: u32) -> Result<Self, LinalgError> {
        if !is_prime(p) {
            return Err(LinalgError::NotPrime(p));
        }
        if m == 0 {
            return Err(LinalgError::ZeroExponent);
        }
        let q = p
            .checked_pow(m)
            .filter(|q| *q < (1 << 31))
            .ok_or(LinalgError::TooLarge(p, m))?;
        // power-of-two moduli reduce with a mask
        let mask = if p == 2 { q - 1 } else { 0 };
        Ok(Modulus { p, m, q, mask })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn q(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn red(&self, x: u64) -> u64 {
        if self.mask != 0 {
            x & self.mask
        } else {
            x % self.q
        }
    }
    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        self.red(a + b)
    }
    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.red(a + self.q - b)
    }
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.red(a * b)
    }
    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        self.red(self.q - a)
    }

    /// Reduces a signed integer into `[0, q)`.
    pub fn from_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.q as i64) as u64
    }

    /// Symmetric lift into `(-q/2, q/2]`, used for display only.
    pub fn signed(&self, a: u64) -> i64 {
        if a > self.q / 2 {
            a as i64 - self.q as i64
        } else {
            a as i64
        }
    }

    /// p-adic valuation; `m` for zero.
    pub fn val(&self, mut a: u64) -> u32 {
        a = self.red(a);
        if a == 0 {
            return self.m;
        }
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }

    pub fn pow_p(&self, v: u32) -> u64 {
        self.p.pow(v)
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = self.red(1);
        a = self.red(a);
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    pub fn is_unit(&self, a: u64) -> bool {
        self.red(a) % self.p != 0
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        if !self.is_unit(a) {
            return None;
        }
        // extended Euclid on (a, q)
        let (mut r0, mut r1) = (self.q as i64, self.red(a) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let k = r0 / r1;
            (r0, r1) = (r1, r0 - k * r1);
            (t0, t1) = (t1, t0 - k * t1);
        }
        Some(self.from_i64(t0))
    }

    /// Writes a nonzero `a` as `p^v * u` and returns `(v, u^{-1})`.
    fn split(&self, a: u64) -> (u32, u64) {
        let v = self.val(a);
        let u = a / self.pow_p(v);
        (v, self.inv(u).expect("unit part"))
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 1 {
            write!(f, "Z/{}", self.p)
        } else {
            write!(f, "Z/{}^{}", self.p, self.m)
        }
    }
}

/// Dense matrix over `Z/q`, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mat {
    pub md: Modulus,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl Mat {
    pub fn zeros(md: Modulus, rows: usize, cols: usize) -> Self {
        Mat { md, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(md: Modulus, n: usize) -> Self {
        let mut m = Mat::zeros(md, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn scalar(md: Modulus, n: usize, s: u64) -> Self {
        let mut m = Mat::zeros(md, n, n);
        for i in 0..n {
            m.data[i * n + i] = md.red(s);
        }
        m
    }

    pub fn from_rows(md: Modulus, cols: usize, rows: &[Vec<u64>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged row");
            data.extend(r.iter().map(|&x| md.red(x)));
        }
        Mat { md, rows: rows.len(), cols, data }
    }

    /// Builds from signed entries, convenient in tests.
    pub fn from_i64(md: Modulus, rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let v: Vec<Vec<u64>> =
            rows.iter().map(|r| r.iter().map(|&x| md.from_i64(x)).collect()).collect();
        Mat::from_rows(md, cols, &v)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.data[i * self.cols + j] = self.md.red(x);
    }
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn row_vecs(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.md, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "product shape");
        assert_eq!(self.md, other.md);
        let md = self.md;
        let mut out = vec![0u64; self.rows * other.cols];
        let n = other.cols;
        for i in 0..self.rows {
            let orow = &mut out[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for j in 0..n {
                    orow[j] = md.red(orow[j] + a * brow[j]);
                }
            }
        }
        Mat { md, rows: self.rows, cols: n, data: out }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let md = self.md;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| md.add(a, b)).collect();
        Mat { md, rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let md = self.md;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| md.sub(a, b)).collect();
        Mat { md, rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: u64) -> Mat {
        let md = self.md;
        Mat { md, rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| md.mul(a, s)).collect() }
    }

    pub fn neg(&self) -> Mat {
        self.scale(self.md.q() - 1)
    }

    pub fn pow(&self, mut e: u64) -> Mat {
        assert_eq!(self.rows, self.cols);
        let mut r = Mat::identity(self.md, self.rows);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        r
    }

    /// `x * M` for a row vector `x`.
    pub fn apply(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.rows, "vector length");
        let md = self.md;
        let mut out = vec![0u64; self.cols];
        for (k, &a) in x.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let brow = self.row(k);
            for j in 0..self.cols {
                out[j] = md.red(out[j] + a * brow[j]);
            }
        }
        out
    }

    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Mat { md: self.md, rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn hstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Mat { md: self.md, rows: self.rows, cols, data }
    }

    /// Block-diagonal sum.
    pub fn dsum(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.md, self.rows + other.rows, self.cols + other.cols);
        out.put_block(0, 0, self);
        out.put_block(self.rows, self.cols, other);
        out
    }

    pub fn put_block(&mut self, r0: usize, c0: usize, b: &Mat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.data[(r0 + i) * self.cols + c0 + j] = b.get(i, j);
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat {
        let mut out = Mat::zeros(self.md, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.data[i * cols + j] = self.get(r0 + i, c0 + j);
            }
        }
        out
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Mat) -> Mat {
        let md = self.md;
        let mut out = Mat::zeros(md, self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == 0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * out.cols + j * other.cols + l] =
                            md.mul(a, other.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// Reinterprets the entries modulo a divisor `p^k` of `q`.
    pub fn reduce_to(&self, md: Modulus) -> Mat {
        assert_eq!(md.p(), self.md.p());
        assert!(md.m() <= self.md.m());
        Mat { md, rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| md.red(a)).collect() }
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let r: Vec<String> = self.row(i).iter().map(|&x| self.md.signed(x).to_string()).collect();
            writeln!(f, "[{}]", r.join(" "))?;
        }
        Ok(())
    }
}

/// Howell normal form of a row span.
///
/// Rows are sorted by strictly increasing pivot column, every pivot is a
/// power of `p`, entries above a pivot are reduced modulo it, and for every
/// column `c` the rows with pivot `>= c` span all span elements vanishing in
/// columns `< c`. Zero rows are dropped, so the zero span has no rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Howell {
    pub matrix: Mat,
    pub pivots: Vec<usize>,
}

fn axpy(md: &Modulus, dst: &mut [u64], k: u64, src: &[u64]) {
    // dst -= k * src
    let nk = md.neg(md.red(k));
    if nk == 0 {
        return;
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d = md.red(*d + nk * s);
        }
    }
}

/// Core elimination. Returns rows in Howell shape and their pivot columns.
fn howell_rows(md: &Modulus, mut work: Vec<Vec<u64>>, ncols: usize) -> (Vec<Vec<u64>>, Vec<usize>) {
    work.retain(|r| r.iter().any(|&x| x != 0));
    let mut out: Vec<Vec<u64>> = Vec::new();
    let mut piv: Vec<usize> = Vec::new();
    for c in 0..ncols {
        if work.is_empty() {
            break;
        }
        let mut best: Option<(usize, u32)> = None;
        for (i, r) in work.iter().enumerate() {
            if r[c] != 0 {
                let v = md.val(r[c]);
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((i, v));
                    if v == 0 {
                        break;
                    }
                }
            }
        }
        let Some((bi, v)) = best else { continue };
        let mut pr = work.swap_remove(bi);
        let (_, uinv) = md.split(pr[c]);
        if uinv != 1 {
            for x in pr.iter_mut() {
                *x = md.mul(*x, uinv);
            }
        }
        let pv = md.pow_p(v);
        for r in work.iter_mut() {
            if r[c] != 0 {
                let k = r[c] / pv;
                axpy(md, r, k, &pr);
            }
        }
        if v > 0 {
            let s = md.pow_p(md.m() - v);
            let extra: Vec<u64> = pr.iter().map(|&x| md.mul(x, s)).collect();
            work.push(extra);
        }
        work.retain(|r| r.iter().any(|&x| x != 0));
        out.push(pr);
        piv.push(c);
    }
    // reduce above pivots, pivots in increasing column order
    for j in 0..out.len() {
        let c = piv[j];
        let pv = out[j][c];
        let (head, tail) = out.split_at_mut(j);
        let prow = &tail[0];
        for r in head.iter_mut() {
            let k = r[c] / pv;
            if k > 0 {
                axpy(md, r, k, prow);
            }
        }
    }
    (out, piv)
}

impl Howell {
    pub fn zero(md: Modulus, cols: usize) -> Self {
        Howell { matrix: Mat::zeros(md, 0, cols), pivots: vec![] }
    }

    /// The whole of `(Z/q)^n`.
    pub fn full(md: Modulus, n: usize) -> Self {
        Howell { matrix: Mat::identity(md, n), pivots: (0..n).collect() }
    }

    pub fn of_rows(md: Modulus, cols: usize, rows: Vec<Vec<u64>>) -> Self {
        let (out, pivots) = howell_rows(&md, rows, cols);
        Howell { matrix: Mat::from_rows(md, cols, &out), pivots }
    }

    pub fn md(&self) -> Modulus {
        self.matrix.md
    }
    pub fn ncols(&self) -> usize {
        self.matrix.cols
    }
    pub fn nrows(&self) -> usize {
        self.matrix.rows
    }
    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.matrix.row_vecs()
    }
    pub fn is_zero(&self) -> bool {
        self.matrix.rows == 0
    }

    /// `log_p` of the number of elements of the span.
    pub fn log_size(&self) -> u32 {
        let md = self.md();
        (0..self.nrows()).map(|j| md.m() - md.val(self.matrix.get(j, self.pivots[j]))).sum()
    }

    /// Canonical representative of `v` modulo the span.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let md = self.md();
        let mut v: Vec<u64> = v.iter().map(|&x| md.red(x)).collect();
        for j in 0..self.nrows() {
            let c = self.pivots[j];
            let pv = self.matrix.get(j, c);
            let k = v[c] / pv;
            if k > 0 {
                axpy(&md, &mut v, k, self.matrix.row(j));
            }
        }
        v
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    pub fn contains_span(&self, other: &Howell) -> bool {
        (0..other.nrows()).all(|i| self.contains(other.matrix.row(i)))
    }

    pub fn sum(&self, other: &Howell) -> Howell {
        let mut rows = self.rows();
        rows.extend(other.rows());
        Howell::of_rows(self.md(), self.ncols(), rows)
    }

    pub fn add_rows(&self, extra: Vec<Vec<u64>>) -> Howell {
        let mut rows = self.rows();
        rows.extend(extra);
        Howell::of_rows(self.md(), self.ncols(), rows)
    }

    pub fn intersect(&self, other: &Howell) -> Howell {
        let md = self.md();
        if self.is_zero() || other.is_zero() {
            return Howell::zero(md, self.ncols());
        }
        let stacked = self.matrix.vstack(&other.matrix);
        let k = kernel(&stacked);
        let a = self.nrows();
        let rows: Vec<Vec<u64>> = k
            .rows()
            .into_iter()
            .map(|r| self.matrix.apply(&r[..a]))
            .collect();
        Howell::of_rows(md, self.ncols(), rows)
    }

    /// Image of the span under `x -> x * f`.
    pub fn image_under(&self, f: &Mat) -> Howell {
        Howell::of_rows(self.md(), f.cols, self.matrix.mul(f).row_vecs())
    }
}

/// Canonical Howell form of the row span of `m`.
pub fn howell(m: &Mat) -> Howell {
    Howell::of_rows(m.md, m.cols, m.row_vecs())
}

/// Howell form of `[M | I]`; splits into the image part (with transforms)
/// and the left kernel.
struct Augmented {
    image: Vec<Vec<u64>>,
    image_piv: Vec<usize>,
    transforms: Vec<Vec<u64>>,
    kernel: Howell,
}

fn augmented(m: &Mat) -> Augmented {
    let md = m.md;
    let (r, c) = (m.rows, m.cols);
    let rows: Vec<Vec<u64>> = (0..r)
        .map(|i| {
            let mut v = m.row(i).to_vec();
            v.extend((0..r).map(|j| u64::from(i == j)));
            v
        })
        .collect();
    let (out, piv) = howell_rows(&md, rows, c + r);
    let mut image = vec![];
    let mut image_piv = vec![];
    let mut transforms = vec![];
    let mut krows = vec![];
    let mut kpiv = vec![];
    for (row, p) in out.into_iter().zip(piv) {
        if p < c {
            transforms.push(row[c..].to_vec());
            image.push(row[..c].to_vec());
            image_piv.push(p);
        } else {
            krows.push(row[c..].to_vec());
            kpiv.push(p - c);
        }
    }
    let kernel = Howell { matrix: Mat::from_rows(md, r, &krows), pivots: kpiv };
    Augmented { image, image_piv, transforms, kernel }
}

/// Left kernel `{x : x * M = 0}` in Howell form.
pub fn kernel(m: &Mat) -> Howell {
    if m.rows == 0 {
        return Howell::zero(m.md, 0);
    }
    augmented(m).kernel
}

/// Reusable solver for `x * M = b`.
pub struct Solver {
    md: Modulus,
    rows: usize,
    cols: usize,
    image: Vec<Vec<u64>>,
    piv: Vec<usize>,
    transforms: Vec<Vec<u64>>,
    kernel: Howell,
}

impl Solver {
    pub fn new(m: &Mat) -> Self {
        let a = augmented(m);
        Solver {
            md: m.md,
            rows: m.rows,
            cols: m.cols,
            image: a.image,
            piv: a.image_piv,
            transforms: a.transforms,
            kernel: a.kernel,
        }
    }

    pub fn kernel(&self) -> &Howell {
        &self.kernel
    }

    pub fn image(&self) -> Howell {
        Howell {
            matrix: Mat::from_rows(self.md, self.cols, &self.image),
            pivots: self.piv.clone(),
        }
    }

    pub fn solve(&self, b: &[u64]) -> Result<Option<Vec<u64>>, LinalgError> {
        if b.len() != self.cols {
            return Err(LinalgError::Dim { expected: self.cols, got: b.len() });
        }
        let md = &self.md;
        let mut b: Vec<u64> = b.iter().map(|&x| md.red(x)).collect();
        let mut x = vec![0u64; self.rows];
        let mut j = 0;
        for c in 0..self.cols {
            if j < self.piv.len() && self.piv[j] == c {
                let pv = self.image[j][c];
                if b[c] % pv != 0 {
                    return Ok(None);
                }
                let k = b[c] / pv;
                if k > 0 {
                    axpy(md, &mut b, k, &self.image[j]);
                    let nk = md.neg(k);
                    axpy(md, &mut x, nk, &self.transforms[j]);
                }
                j += 1;
            } else if b[c] != 0 {
                return Ok(None);
            }
        }
        Ok(Some(x))
    }
}

/// Solves `x * M = b`.
pub fn solve(m: &Mat, b: &[u64]) -> Result<Option<Vec<u64>>, LinalgError> {
    Solver::new(m).solve(b)
}

/// Invariant factors of `(Z/q)^n / span`, as the orders `d_i` of the cyclic
/// factors `Z/d_i` (trivial factors omitted), in increasing order.
pub fn quotient_structure(span: &Howell, ambient: usize) -> Vec<u64> {
    let md = span.md();
    assert_eq!(span.ncols(), ambient, "ambient rank");
    let diag = smith_valuations(&span.matrix);
    let mut out: Vec<u64> = diag.iter().filter(|&&v| v > 0).map(|&v| md.pow_p(v)).collect();
    for _ in diag.len()..ambient {
        out.push(md.q());
    }
    out.sort_unstable();
    out
}

/// Valuations of the Smith diagonal (nonzero entries only).
pub fn smith_valuations(m: &Mat) -> Vec<u32> {
    let md = m.md;
    let mut a: Vec<Vec<u64>> = m.row_vecs();
    let (r, c) = (m.rows, m.cols);
    let mut out = vec![];
    let mut k = 0;
    while k < r.min(c) {
        let mut best: Option<(usize, usize, u32)> = None;
        'scan: for i in k..r {
            for j in k..c {
                if a[i][j] != 0 {
                    let v = md.val(a[i][j]);
                    if best.map_or(true, |b| v < b.2) {
                        best = Some((i, j, v));
                        if v == 0 {
                            break 'scan;
                        }
                    }
                }
            }
        }
        let Some((bi, bj, v)) = best else { break };
        a.swap(k, bi);
        for row in a.iter_mut() {
            row.swap(k, bj);
        }
        let (_, uinv) = md.split(a[k][k]);
        for x in a[k].iter_mut() {
            *x = md.mul(*x, uinv);
        }
        let pv = md.pow_p(v);
        let pivot_row = a[k].clone();
        for row in a.iter_mut().skip(k + 1) {
            if row[k] != 0 {
                let f = row[k] / pv;
                axpy(&md, row, f, &pivot_row);
            }
        }
        // columns: every entry in row k is divisible by pv
        for j in k + 1..c {
            a[k][j] = 0;
        }
        out.push(v);
        k += 1;
    }
    out
}

/// Enumerates the row span exhaustively. Only for small oracles.
pub fn span_elements(m: &Mat) -> std::collections::BTreeSet<Vec<u64>> {
    let md = m.md;
    let mut set = std::collections::BTreeSet::new();
    set.insert(vec![0u64; m.cols]);
    for i in 0..m.rows {
        let r = m.row(i).to_vec();
        let mut next = set.clone();
        for v in &set {
            let mut w = v.clone();
            for _ in 1..md.q() {
                for (x, &y) in w.iter_mut().zip(&r) {
                    *x = md.add(*x, y);
                }
                next.insert(w.clone());
            }
        }
        set = next;
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(p: u64, m: u32) -> Modulus {
        Modulus::new(p, m).unwrap()
    }

    #[test]
    fn identity_is_its_own_form() {
        let md = z(2, 3);
        let h = howell(&Mat::identity(md, 2));
        assert_eq!(h.matrix, Mat::identity(md, 2));
    }

    #[test]
    fn zero_matrix_has_empty_form() {
        let h = howell(&Mat::zeros(z(2, 3), 3, 2));
        assert!(h.is_zero());
    }

    #[test]
    fn howell_of_two_four_block_matches_span() {
        let md = z(2, 3);
        let m = Mat::from_i64(md, &[&[2, 4], &[0, 4]]);
        let h = howell(&m);
        assert_eq!(span_elements(&m), span_elements(&h.matrix));
        assert_eq!(h.matrix, Mat::from_i64(md, &[&[2, 0], &[0, 4]]));
    }

    #[test]
    fn howell_adds_saturation_row() {
        let md = z(2, 2);
        let h = howell(&Mat::from_i64(md, &[&[2, 1]]));
        assert_eq!(h.matrix, Mat::from_i64(md, &[&[2, 1], &[0, 2]]));
    }

    #[test]
    fn solve_examples() {
        let md = z(2, 2);
        let m = Mat::from_i64(md, &[&[2]]);
        let x = solve(&m, &[2]).unwrap().unwrap();
        assert_eq!(m.apply(&x), vec![2]);
        assert_eq!(solve(&m, &[1]).unwrap(), None);
        let id = Mat::identity(md, 3);
        assert_eq!(solve(&id, &[1, 2, 3]).unwrap(), Some(vec![1, 2, 3]));
        assert!(solve(&id, &[1]).is_err());
    }

    #[test]
    fn kernel_examples() {
        let md = z(2, 2);
        assert!(kernel(&Mat::identity(md, 2)).is_zero());
        let k = kernel(&Mat::from_i64(md, &[&[2]]));
        assert_eq!(k.matrix, Mat::from_i64(md, &[&[2]]));
        let f2 = z(2, 1);
        let k = kernel(&Mat::from_i64(f2, &[&[1, 1], &[1, 1]]));
        assert_eq!(k.matrix, Mat::from_i64(f2, &[&[1, 1]]));
    }

    #[test]
    fn quotient_examples() {
        let md = z(2, 2);
        assert!(quotient_structure(&Howell::full(md, 2), 2).is_empty());
        assert_eq!(quotient_structure(&Howell::zero(md, 1), 1), vec![4]);
        let h = howell(&Mat::from_i64(md, &[&[2]]));
        assert_eq!(quotient_structure(&h, 1), vec![2]);
    }

    #[test]
    fn modulus_rejects_composites() {
        assert_eq!(Modulus::new(4, 1), Err(LinalgError::NotPrime(4)));
        assert_eq!(Modulus::new(3, 0), Err(LinalgError::ZeroExponent));
    }

    #[test]
    fn inverse_mod_nine() {
        let md = z(3, 2);
        for a in 0..9 {
            match md.inv(a) {
                Some(b) => assert_eq!(md.mul(a, b), 1),
                None => assert_eq!(a % 3, 0),
            }
        }
    }
}
