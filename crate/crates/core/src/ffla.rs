//! Exact prime-field arithmetic, dense linear algebra over `F_p`, subspace
//! enumeration, and exact rational interpolation of point counts.
//!
//! Everything here is small-scale by construction: moduli fit in 16 bits, so
//! products of two residues fit in a `u64` without reduction tricks.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest modulus accepted by [`PrimeField::new`].
pub const MAX_MODULUS: u32 = u16::MAX as u32;

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The field `F_p` together with a primitive root and a table of fixed roots
/// of unity, one per divisor of `p - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u32,
    primitive_root: u32,
    roots: BTreeMap<u32, u32>,
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self> {
        if !is_prime(p) || p > MAX_MODULUS {
            return Err(Error::InvalidModulus(p));
        }
        let primitive_root = if p == 2 {
            1
        } else {
            let factors = prime_factors(p - 1);
            (2..p)
                .find(|&g| factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1))
                .expect("every prime field has a primitive root")
        };
        let roots = (1..p)
            .filter(|n| (p - 1).is_multiple_of(*n))
            .map(|n| (n, pow_mod(primitive_root, (p - 1) / n, p)))
            .collect();
        Ok(Self {
            p,
            primitive_root,
            roots,
        })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn primitive_root(&self) -> u32 {
        self.primitive_root
    }

    /// The cached element of exact multiplicative order `n`, if `n | p - 1`.
    pub fn root_of_unity(&self, n: u32) -> Option<u32> {
        self.roots.get(&n).copied()
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        pow_mod_u64(a, e, self.p)
    }

    /// Multiplicative inverse. Panics on zero, which is always a logic error
    /// in the callers (pivots and group orders coprime to `p`).
    pub fn inv(&self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.p), "inverse of zero in F_{}", self.p);
        self.pow(a, (self.p - 2) as u64)
    }

    pub fn div(&self, a: u32, b: u32) -> u32 {
        self.mul(a, self.inv(b))
    }

    pub fn from_i64(&self, a: i64) -> u32 {
        a.rem_euclid(self.p as i64) as u32
    }

    pub fn from_u64(&self, a: u64) -> u32 {
        (a % self.p as u64) as u32
    }

    /// Smallest non-negative residue whose square is `a`.
    pub fn sqrt(&self, a: u32) -> Option<u32> {
        let a = a % self.p;
        (0..self.p).find(|&r| self.mul(r, r) == a)
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: u32) -> u32 {
        assert!(a != 0);
        let mut n = 1;
        let mut x = a;
        while x != 1 {
            x = self.mul(x, a);
            n += 1;
        }
        n
    }

    /// Lift a residue to the representative in `(-p/2, p/2]`.
    pub fn signed_lift(&self, a: u32) -> i64 {
        let a = a as i64;
        let p = self.p as i64;
        if a > p / 2 {
            a - p
        } else {
            a
        }
    }
}

fn pow_mod(a: u32, e: u32, p: u32) -> u32 {
    pow_mod_u64(a, e as u64, p)
}

fn pow_mod_u64(a: u32, mut e: u64, p: u32) -> u32 {
    let p = p as u64;
    let mut base = a as u64 % p;
    let mut acc = 1u64 % p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc as u32
}

/// Dense matrix over `F_p`, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FpMatrix(p={}, {}x{}) [", self.p, self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "{:?}", self.row(r))?;
            if r + 1 < self.rows {
                write!(f, ", ")?;
            }
        }
        write!(f, "]")
    }
}

/// Result of row reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub matrix: FpMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl FpMatrix {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        Self {
            p,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % p;
        }
        m
    }

    /// Build from raw entries, reducing each one mod `p`.
    pub fn from_fn(p: u32, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c).rem_euclid(p as i64) as u32);
            }
        }
        Self { p, rows, cols, data }
    }

    pub fn from_rows(p: u32, rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_fn(p, rows.len(), cols, |r, c| rows[r][c])
    }

    /// Build from residues that are already reduced.
    pub fn from_residues(p: u32, rows: usize, cols: usize, data: Vec<u32>) -> Self {
        assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|&x| x < p));
        Self { p, rows, cols, data }
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        debug_assert!(v < self.p);
        self.data[r * self.cols + c] = v;
    }
    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
    pub fn entries(&self) -> &[u32] {
        &self.data
    }
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    fn field_ops(&self) -> Ops {
        Ops(self.p)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.p, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        assert_eq!(self.p, other.p);
        let p = self.p as u64;
        let mut out = Self::zeros(self.p, self.rows, other.cols);
        let mut acc = vec![0u64; other.cols];
        for r in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.cols {
                let a = self.get(r, k) as u64;
                if a == 0 {
                    continue;
                }
                for (c, slot) in acc.iter_mut().enumerate() {
                    *slot += a * other.get(k, c) as u64;
                }
                // keep well below u64 overflow: 2^16 * 2^16 * k terms
                if k % 4096 == 4095 {
                    acc.iter_mut().for_each(|x| *x %= p);
                }
            }
            for (c, v) in acc.iter().enumerate() {
                out.data[r * other.cols + c] = (v % p) as u32;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let ops = self.field_ops();
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| ops.add(a, b))
            .collect();
        Self { data, ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let ops = self.field_ops();
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| ops.sub(a, b))
            .collect();
        Self { data, ..self.clone() }
    }

    pub fn scale(&self, s: u32) -> Self {
        let ops = self.field_ops();
        let data = self.data.iter().map(|&a| ops.mul(a, s)).collect();
        Self { data, ..self.clone() }
    }

    pub fn apply(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols);
        let p = self.p as u64;
        (0..self.rows)
            .map(|r| {
                let s: u64 = self
                    .row(r)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a as u64 * b as u64 % p)
                    .sum();
                (s % p) as u32
            })
            .collect()
    }

    pub fn trace(&self) -> u32 {
        let ops = self.field_ops();
        (0..self.rows.min(self.cols)).fold(0, |acc, i| ops.add(acc, self.get(i, i)))
    }

    /// Determinant by elimination (square matrices only).
    pub fn det(&self) -> u32 {
        assert_eq!(self.rows, self.cols);
        let ops = self.field_ops();
        let n = self.rows;
        let mut m = self.data.clone();
        let mut det = 1 % self.p;
        for c in 0..n {
            let Some(piv) = (c..n).find(|&r| m[r * n + c] != 0) else {
                return 0;
            };
            if piv != c {
                for k in 0..n {
                    m.swap(piv * n + k, c * n + k);
                }
                det = ops.neg(det);
            }
            let pv = m[c * n + c];
            det = ops.mul(det, pv);
            let inv = ops.inv(pv);
            for r in c + 1..n {
                let f = ops.mul(m[r * n + c], inv);
                if f == 0 {
                    continue;
                }
                for k in c..n {
                    m[r * n + k] = ops.sub(m[r * n + k], ops.mul(f, m[c * n + k]));
                }
            }
        }
        det
    }

    /// Reduced row echelon form with rank and pivot columns.
    pub fn rref(&self) -> Rref {
        let ops = self.field_ops();
        let (rows, cols) = (self.rows, self.cols);
        let mut m = self.data.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(piv) = (r..rows).find(|&i| m[i * cols + c] != 0) else {
                continue;
            };
            if piv != r {
                for k in 0..cols {
                    m.swap(piv * cols + k, r * cols + k);
                }
            }
            let inv = ops.inv(m[r * cols + c]);
            for k in c..cols {
                m[r * cols + k] = ops.mul(m[r * cols + k], inv);
            }
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let f = m[i * cols + c];
                if f == 0 {
                    continue;
                }
                for k in c..cols {
                    m[i * cols + k] = ops.sub(m[i * cols + k], ops.mul(f, m[r * cols + k]));
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref {
            matrix: Self {
                p: self.p,
                rows,
                cols,
                data: m,
            },
            rank: pivots.len(),
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Basis of `{v : self * v = 0}`, one vector per row.
    pub fn nullspace(&self) -> FpMatrix {
        let Rref { matrix, pivots, .. } = self.rref();
        let ops = self.field_ops();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = FpMatrix::zeros(self.p, free.len(), self.cols);
        for (k, &f) in free.iter().enumerate() {
            out.set(k, f, 1 % self.p);
            for (r, &pc) in pivots.iter().enumerate() {
                out.set(k, pc, ops.neg(matrix.get(r, f)));
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Self {
            p: self.p,
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self {
            p: self.p,
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn from_row_vecs(p: u32, cols: usize, rows: &[Vec<u32>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend_from_slice(r);
        }
        Self {
            p,
            rows: rows.len(),
            cols,
            data,
        }
    }
}

#[derive(Clone, Copy)]
struct Ops(u32);

impl Ops {
    #[inline]
    fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }
    #[inline]
    fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }
    #[inline]
    fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }
    #[inline]
    fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }
    fn inv(self, a: u32) -> u32 {
        pow_mod(a, self.0 - 2, self.0)
    }
}

/// A subspace of `F_p^n` held as an RREF row basis. Supports membership,
/// reduction to normal form, and coordinates in the basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    basis: FpMatrix,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(p: u32, n: usize) -> Self {
        Self {
            basis: FpMatrix::zeros(p, 0, n),
            pivots: Vec::new(),
        }
    }

    pub fn full(p: u32, n: usize) -> Self {
        Self {
            basis: FpMatrix::identity(p, n),
            pivots: (0..n).collect(),
        }
    }

    /// Span of the rows of `m`.
    pub fn span(m: &FpMatrix) -> Self {
        let Rref {
            matrix,
            rank,
            pivots,
        } = m.rref();
        let keep: Vec<usize> = (0..rank).collect();
        Self {
            basis: matrix.select_rows(&keep),
            pivots,
        }
    }

    pub fn span_vecs(p: u32, n: usize, vecs: &[Vec<u32>]) -> Self {
        Self::span(&FpMatrix::from_row_vecs(p, n, vecs))
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }
    pub fn ambient_dim(&self) -> usize {
        self.basis.cols()
    }
    pub fn basis(&self) -> &FpMatrix {
        &self.basis
    }
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }
    pub fn p(&self) -> u32 {
        self.basis.p()
    }

    /// Columns not used as pivots: the standard complement coordinates.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ambient_dim())
            .filter(|c| !self.pivots.contains(c))
            .collect()
    }

    /// Normal form of `v` modulo the subspace (pivot entries cleared).
    pub fn reduce(&self, v: &[u32]) -> Vec<u32> {
        let ops = Ops(self.p());
        let mut out = v.to_vec();
        for (r, &pc) in self.pivots.iter().enumerate() {
            let f = out[pc];
            if f == 0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(self.basis.row(r)) {
                if b != 0 {
                    *o = ops.sub(*o, ops.mul(f, b));
                }
            }
        }
        out
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Coordinates of `v` in the RREF basis, if `v` lies in the subspace.
    pub fn coordinates(&self, v: &[u32]) -> Option<Vec<u32>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&c| v[c]).collect())
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        (0..other.dim()).all(|r| self.contains(other.basis.row(r)))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::span(&self.basis.vstack(&other.basis))
    }

    pub fn with_vectors(&self, vecs: &[Vec<u32>]) -> Subspace {
        let extra = FpMatrix::from_row_vecs(self.p(), self.ambient_dim(), vecs);
        Subspace::span(&self.basis.vstack(&extra))
    }

    /// Intersection via the kernel of `[A; -B]^T`.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let p = self.p();
        let n = self.ambient_dim();
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(p, n);
        }
        let stacked = self.basis.vstack(&other.basis.scale(p - 1));
        let kernel = stacked.transpose().nullspace();
        let k = self.dim();
        let vecs: Vec<Vec<u32>> = (0..kernel.rows())
            .map(|r| {
                let coeffs = &kernel.row(r)[..k];
                combine(p, &self.basis, coeffs)
            })
            .collect();
        Subspace::span_vecs(p, n, &vecs)
    }

    /// Trace of a linear map on this subspace; the subspace must be stable
    /// under `m` (acting on column vectors).
    pub fn restricted_trace(&self, m: &FpMatrix) -> u32 {
        // the coordinate of an image along basis row r is its pivot entry
        let p = self.p() as u64;
        let mut tr = 0u64;
        for (r, &pc) in self.pivots.iter().enumerate() {
            let row = self.basis.row(r);
            debug_assert!(self.contains(&m.apply(row)), "subspace not stable under map");
            let dot: u64 = m.row(pc).iter().zip(row).map(|(&a, &b)| a as u64 * b as u64 % p).sum();
            tr = (tr + dot) % p;
        }
        tr as u32
    }

    /// Trace of a stable linear map on the quotient by this subspace, in the
    /// basis of free columns.
    pub fn quotient_trace(&self, m: &FpMatrix) -> u32 {
        let ops = Ops(self.p());
        let mut tr = 0;
        for c in self.free_columns() {
            let column: Vec<u32> = (0..m.rows()).map(|r| m.get(r, c)).collect();
            tr = ops.add(tr, self.reduce(&column)[c]);
        }
        tr
    }

    /// Matrix of a stable linear map restricted to the subspace, in the RREF
    /// basis (column `j` holds the coordinates of the image of basis vector `j`).
    pub fn restricted_matrix(&self, m: &FpMatrix) -> FpMatrix {
        let k = self.dim();
        let mut out = FpMatrix::zeros(self.p(), k, k);
        for j in 0..k {
            let image = m.apply(self.basis.row(j));
            let coords = self
                .coordinates(&image)
                .expect("subspace not stable under map");
            for (i, c) in coords.into_iter().enumerate() {
                out.set(i, j, c);
            }
        }
        out
    }
}

/// A span grown one vector at a time. Rows are kept in semi-echelon form:
/// each row vanishes at the pivots of all earlier rows.
#[derive(Clone, Debug)]
pub struct IncrementalSpan {
    p: u32,
    n: usize,
    rows: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl IncrementalSpan {
    pub fn new(p: u32, n: usize) -> Self {
        Self {
            p,
            n,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn reduce(&self, v: &[u32]) -> Vec<u32> {
        let ops = Ops(self.p);
        let mut out = v.to_vec();
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            let f = out[pc];
            if f == 0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(row) {
                if b != 0 {
                    *o = ops.sub(*o, ops.mul(f, b));
                }
            }
        }
        out
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Adds `v`; returns the new normalized row when `v` was independent.
    pub fn insert(&mut self, v: &[u32]) -> Option<&[u32]> {
        let mut r = self.reduce(v);
        let pc = r.iter().position(|&x| x != 0)?;
        let ops = Ops(self.p);
        let s = ops.inv(r[pc]);
        for x in r.iter_mut() {
            *x = ops.mul(*x, s);
        }
        self.rows.push(r);
        self.pivots.push(pc);
        self.rows.last().map(|r| r.as_slice())
    }

    pub fn to_subspace(&self) -> Subspace {
        Subspace::span_vecs(self.p, self.n, &self.rows)
    }
}

/// `Σ coeffs[i] * rows[i]`.
pub fn combine(p: u32, rows: &FpMatrix, coeffs: &[u32]) -> Vec<u32> {
    let ops = Ops(p);
    let mut out = vec![0; rows.cols()];
    for (r, &c) in coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(rows.row(r)) {
            *o = ops.add(*o, ops.mul(c, x));
        }
    }
    out
}

/// Number of `k`-dimensional subspaces of `F_q^n`.
pub fn gaussian_binomial(n: usize, k: usize, q: u64) -> u128 {
    if k > n {
        return 0;
    }
    let q = q as u128;
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..k {
        num *= q.pow((n - i) as u32) - 1;
        den *= q.pow((k - i) as u32) - 1;
    }
    num / den
}

/// Streams every `sub_dim`-dimensional subspace of `F_p^ambient_dim` once,
/// as its RREF basis. Pivot sets are visited in lexicographic order, and for
/// each pivot set the free entries run through `F_p` like an odometer.
pub struct SubspaceIter {
    p: u32,
    n: usize,
    k: usize,
    pivot_sets: Vec<Vec<usize>>,
    set_idx: usize,
    free_slots: Vec<(usize, usize)>,
    counter: Vec<u32>,
    exhausted_set: bool,
}

pub fn enumerate_subspaces(ambient_dim: usize, sub_dim: usize, field: &PrimeField) -> Result<SubspaceIter> {
    if sub_dim > ambient_dim {
        return Err(Error::DimensionOutOfRange {
            sub: sub_dim,
            ambient: ambient_dim,
        });
    }
    let pivot_sets: Vec<Vec<usize>> = (0..ambient_dim).combinations(sub_dim).collect();
    let mut it = SubspaceIter {
        p: field.p(),
        n: ambient_dim,
        k: sub_dim,
        pivot_sets,
        set_idx: 0,
        free_slots: Vec::new(),
        counter: Vec::new(),
        exhausted_set: false,
    };
    it.load_set();
    Ok(it)
}

impl SubspaceIter {
    fn load_set(&mut self) {
        self.free_slots.clear();
        if let Some(piv) = self.pivot_sets.get(self.set_idx) {
            for (r, &pc) in piv.iter().enumerate() {
                for c in pc + 1..self.n {
                    if !piv.contains(&c) {
                        self.free_slots.push((r, c));
                    }
                }
            }
        }
        self.counter = vec![0; self.free_slots.len()];
        self.exhausted_set = false;
    }

    fn current(&self) -> FpMatrix {
        let piv = &self.pivot_sets[self.set_idx];
        let mut m = FpMatrix::zeros(self.p, self.k, self.n);
        for (r, &pc) in piv.iter().enumerate() {
            m.set(r, pc, 1 % self.p);
        }
        for (&(r, c), &v) in self.free_slots.iter().zip(&self.counter) {
            m.set(r, c, v);
        }
        m
    }

    fn advance(&mut self) {
        for d in self.counter.iter_mut() {
            *d += 1;
            if *d < self.p {
                return;
            }
            *d = 0;
        }
        self.exhausted_set = true;
    }
}

impl Iterator for SubspaceIter {
    type Item = FpMatrix;

    fn next(&mut self) -> Option<FpMatrix> {
        loop {
            if self.set_idx >= self.pivot_sets.len() {
                return None;
            }
            if self.exhausted_set {
                self.set_idx += 1;
                self.load_set();
                continue;
            }
            let m = self.current();
            self.advance();
            return Some(m);
        }
    }
}

/// A polynomial in `q` with exact rational coefficients (lowest degree first)
/// that interpolates recorded point counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalPolynomial {
    #[serde(serialize_with = "ser_rationals")]
    coefficients: Vec<BigRational>,
    provenance: Vec<(u64, u64)>,
}

fn ser_rationals<S: serde::Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&rational_to_string(r))?;
    }
    seq.end()
}

pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl RationalPolynomial {
    pub fn coefficients(&self) -> &[BigRational] {
        &self.coefficients
    }

    pub fn provenance(&self) -> &[(u64, u64)] {
        &self.provenance
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coefficients
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_int(&self, x: i64) -> BigRational {
        self.eval(&BigRational::from_integer(BigInt::from(x)))
    }

    pub fn value_at_one(&self) -> BigRational {
        self.coefficients.iter().cloned().sum()
    }

    /// Whether the prediction at `q` equals `count` exactly.
    pub fn predicts(&self, q: u64, count: u64) -> bool {
        self.eval_int(q as i64) == BigRational::from_integer(BigInt::from(count))
    }

    /// Human-readable form such as `q^2 + q + 1`.
    pub fn pretty(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut terms = Vec::new();
        for (i, c) in self.coefficients.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let coef = if mag.is_one() && i > 0 {
                String::new()
            } else {
                rational_to_string(&mag)
            };
            let mono = match i {
                0 => String::new(),
                1 => "q".into(),
                _ => format!("q^{i}"),
            };
            let body = match (coef.is_empty(), mono.is_empty()) {
                (true, _) => mono,
                (false, true) => coef,
                (false, false) => format!("{coef}*{mono}"),
            };
            let sign = if c.is_negative() { "-" } else { "+" };
            terms.push((sign, body));
        }
        let mut out = String::new();
        for (k, (sign, body)) in terms.into_iter().enumerate() {
            if k == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(&format!(" {sign} "));
            }
            out.push_str(&body);
        }
        out
    }
}

/// The unique polynomial of degree `< points.len()` through the given
/// `(q, count)` points, by Lagrange interpolation over `Q`.
pub fn interpolate_counts(points: &[(u64, u64)]) -> Result<RationalPolynomial> {
    if points.is_empty() {
        return Err(Error::Interpolation("no points".into()));
    }
    if !points.iter().map(|p| p.0).all_unique() {
        return Err(Error::Interpolation("duplicate abscissae".into()));
    }
    let n = points.len();
    let mut coeffs = vec![BigRational::zero(); n];
    for (i, &(qi, ci)) in points.iter().enumerate() {
        // basis polynomial prod_{j != i} (q - qj) / (qi - qj)
        let mut basis = vec![BigRational::one()];
        let mut denom = BigRational::one();
        for (j, &(qj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let qj = BigRational::from_integer(BigInt::from(qj));
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (k, b) in basis.iter().enumerate() {
                next[k + 1] += b;
                next[k] -= b * &qj;
            }
            basis = next;
            denom *= BigRational::from_integer(BigInt::from(qi)) - qj;
        }
        let scale = BigRational::from_integer(BigInt::from(ci)) / denom;
        for (k, b) in basis.into_iter().enumerate() {
            coeffs[k] += b * &scale;
        }
    }
    while coeffs.last().is_some_and(Zero::is_zero) {
        coeffs.pop();
    }
    Ok(RationalPolynomial {
        coefficients: coeffs,
        provenance: points.to_vec(),
    })
}

/// Exact integer value of a rational, if it is one and fits in `i64`.
pub fn as_integer(r: &BigRational) -> Option<i64> {
    if r.is_integer() {
        r.numer().to_i64()
    } else {
        None
    }
}

/// Rank of a dense rational matrix by fraction-free elimination.
pub fn rational_rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..ncols {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let pv = m[rank][c].clone();
        for r in 0..m.len() {
            if r == rank || m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &pv;
            for k in c..ncols {
                let delta = &f * &m[rank][k];
                m[r][k] -= delta;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Determinant of an integer matrix via exact rational elimination.
pub fn integer_det(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect())
        .collect();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return BigInt::zero();
        };
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        let pv = a[c][c].clone();
        det *= &pv;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &pv;
            for k in c..n {
                let delta = &f * &a[c][k];
                a[r][k] -= delta;
            }
        }
    }
    det.to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn rejects_composite_and_large_moduli() {
        assert!(PrimeField::new(15).is_err());
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(65537).is_err());
    }

    #[test]
    fn primitive_root_and_roots_of_unity() {
        for p in [2, 3, 5, 7, 13, 61, 73] {
            let k = f(p);
            assert_eq!(k.order(k.primitive_root()), p - 1);
            for n in 1..p {
                if (p - 1) % n == 0 {
                    assert_eq!(k.order(k.root_of_unity(n).unwrap()), n);
                } else {
                    assert!(k.root_of_unity(n).is_none());
                }
            }
        }
    }

    #[test]
    fn sqrt_is_smallest_residue() {
        let k = f(13);
        assert_eq!(k.sqrt(12), Some(5)); // 5^2 = 25 = -1
        assert_eq!(k.sqrt(2), None);
        let k = f(61);
        let s = k.sqrt(5).unwrap();
        assert_eq!(k.mul(s, s), 5);
        assert!((0..s).all(|r| k.mul(r, r) != 5));
    }

    #[test]
    fn rref_examples() {
        let id = FpMatrix::identity(5, 3);
        let r = id.rref();
        assert_eq!(r.matrix, id);
        assert_eq!(r.rank, 3);

        let z = FpMatrix::zeros(5, 2, 4);
        let r = z.rref();
        assert_eq!(r.matrix, z);
        assert_eq!(r.rank, 0);
        assert!(r.pivots.is_empty());

        let m = FpMatrix::from_rows(5, &[vec![2, 4], vec![1, 2]]);
        let r = m.rref();
        assert_eq!(r.matrix, FpMatrix::from_rows(5, &[vec![1, 2], vec![0, 0]]));
        assert_eq!(r.rank, 1);
        assert_eq!(r.pivots, vec![0]);
    }

    #[test]
    fn nullspace_is_annihilated() {
        let m = FpMatrix::from_rows(7, &[vec![1, 2, 3, 4], vec![2, 4, 6, 1]]);
        let ns = m.nullspace();
        assert_eq!(ns.rows(), 4 - m.rank());
        for r in 0..ns.rows() {
            assert!(m.apply(ns.row(r)).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn det_matches_two_by_two_formula() {
        let m = FpMatrix::from_rows(13, &[vec![3, 5], vec![7, 11]]);
        assert_eq!(m.det(), (3 * 11 - 5 * 7i64).rem_euclid(13) as u32);
    }

    #[test]
    fn subspace_intersection_and_trace() {
        let p = 7;
        let a = Subspace::span_vecs(p, 3, &[vec![1, 0, 0], vec![0, 1, 0]]);
        let b = Subspace::span_vecs(p, 3, &[vec![0, 1, 0], vec![0, 0, 1]]);
        let i = a.intersect(&b);
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&[0, 3, 0]));
        let m = FpMatrix::from_rows(p, &[vec![2, 0, 0], vec![0, 3, 0], vec![0, 0, 5]]);
        assert_eq!(a.restricted_trace(&m), 5);
    }

    #[test]
    fn subspace_examples() {
        assert_eq!(enumerate_subspaces(2, 1, &f(3)).unwrap().count(), 4);
        assert_eq!(enumerate_subspaces(2, 1, &f(2)).unwrap().count(), 3);
        for n in 0..4 {
            let v: Vec<_> = enumerate_subspaces(n, 0, &f(5)).unwrap().collect();
            assert_eq!(v.len(), 1);
            assert_eq!(v[0].rows(), 0);
        }
        assert!(enumerate_subspaces(2, 3, &f(2)).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let p = interpolate_counts(&[(2, 3), (3, 4), (5, 6)]).unwrap();
        assert_eq!(p.pretty(), "q + 1");
        assert_eq!(p.value_at_one(), BigRational::from_integer(2.into()));

        let p = interpolate_counts(&[(2, 1), (3, 1), (5, 1)]).unwrap();
        assert_eq!(p.degree(), Some(0));
        assert_eq!(p.value_at_one(), BigRational::one());

        let p = interpolate_counts(&[(2, 7), (3, 13), (5, 31)]).unwrap();
        assert_eq!(p.pretty(), "q^2 + q + 1");
        assert_eq!(p.value_at_one(), BigRational::from_integer(3.into()));
        assert!(p.predicts(7, 57));
    }

    #[test]
    fn interpolation_rejects_bad_input() {
        assert!(interpolate_counts(&[]).is_err());
        assert!(interpolate_counts(&[(2, 1), (2, 3)]).is_err());
    }

    #[test]
    fn integer_det_small() {
        assert_eq!(integer_det(&[vec![2, -1], vec![-1, 2]]), BigInt::from(3));
        assert_eq!(
            integer_det(&[vec![2, -1, -1], vec![-1, 2, -1], vec![-1, -1, 2]]),
            BigInt::zero()
        );
    }
}
