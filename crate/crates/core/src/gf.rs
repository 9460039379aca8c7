//! Prime-field arithmetic and rank machinery over F_q.
//!
//! Everything in the crate that talks about "rank" or "span" goes through
//! this module: [`GfMatrix::rank`] for one-shot rank queries and
//! [`EchelonBasis`] for incremental span tests during search. Field elements
//! are stored as `u8`, which is enough for every prime up to 251.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by field and matrix operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("field order must be prime (got {0})")]
    NotPrime(u32),
    #[error("field order {0} outside the supported range 2..=251")]
    OrderOutOfRange(u32),
    #[error("zero has no multiplicative inverse")]
    InverseOfZero,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("field mismatch: F_{expected} vs F_{found}")]
    FieldMismatch { expected: u8, found: u8 },
}

/// Order of a prime field F_q with 2 <= q <= 251.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct FieldOrder(u8);

impl FieldOrder {
    pub const BINARY: FieldOrder = FieldOrder(2);

    pub fn new(q: u32) -> Result<Self, GfError> {
        if !(2..=251).contains(&q) {
            return Err(if q < 2 || is_prime(q) {
                GfError::OrderOutOfRange(q)
            } else {
                GfError::NotPrime(q)
            });
        }
        if !is_prime(q) {
            return Err(GfError::NotPrime(q));
        }
        Ok(FieldOrder(q as u8))
    }

    #[inline]
    pub fn get(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn reduce(self, a: i64) -> u8 {
        a.rem_euclid(self.0 as i64) as u8
    }

    #[inline]
    pub fn add(self, a: u8, b: u8) -> u8 {
        ((a as u16 + b as u16) % self.0 as u16) as u8
    }

    #[inline]
    pub fn sub(self, a: u8, b: u8) -> u8 {
        ((a as u16 + self.0 as u16 - b as u16) % self.0 as u16) as u8
    }

    #[inline]
    pub fn neg(self, a: u8) -> u8 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u8, b: u8) -> u8 {
        ((a as u16 * b as u16) % self.0 as u16) as u8
    }

    pub fn inv(self, a: u8) -> Result<u8, GfError> {
        field_inv(a, self)
    }

    /// Number of field elements raised to `exp`, or `None` on overflow.
    pub fn checked_pow(self, exp: u32) -> Option<u128> {
        (self.0 as u128).checked_pow(exp)
    }

    /// All field elements in ascending order.
    pub fn elements(self) -> impl Iterator<Item = u8> {
        0..self.0
    }
}

impl TryFrom<u32> for FieldOrder {
    type Error = GfError;

    fn try_from(q: u32) -> Result<Self, Self::Error> {
        FieldOrder::new(q)
    }
}

impl From<FieldOrder> for u32 {
    fn from(q: FieldOrder) -> u32 {
        q.0 as u32
    }
}

impl fmt::Display for FieldOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.0)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Multiplicative inverse of `a` in F_q.
pub fn field_inv(a: u8, q: FieldOrder) -> Result<u8, GfError> {
    let a = a % q.0;
    if a == 0 {
        return Err(GfError::InverseOfZero);
    }
    // extended Euclid on (a, q)
    let (mut r0, mut r1) = (q.0 as i32, a as i32);
    let (mut t0, mut t1) = (0i32, 1i32);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    Ok(q.reduce(t0 as i64))
}

/// A vector over F_q with every coordinate reduced into `[0, q)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GfVector {
    q: FieldOrder,
    coords: Vec<u8>,
}

impl GfVector {
    /// Builds a vector, reducing each coordinate modulo q.
    pub fn new<I: IntoIterator<Item = i64>>(q: FieldOrder, coords: I) -> Self {
        GfVector {
            q,
            coords: coords.into_iter().map(|c| q.reduce(c)).collect(),
        }
    }

    /// Wraps already-reduced coordinates.
    pub(crate) fn from_reduced(q: FieldOrder, coords: Vec<u8>) -> Self {
        debug_assert!(coords.iter().all(|&c| c < q.get()));
        GfVector { q, coords }
    }

    pub fn zero(q: FieldOrder, len: usize) -> Self {
        GfVector {
            q,
            coords: vec![0; len],
        }
    }

    /// The unit vector `e_i` (0-based `i`).
    pub fn unit(q: FieldOrder, len: usize, i: usize) -> Self {
        let mut v = Self::zero(q, len);
        v.coords[i] = 1;
        v
    }

    /// Sum of unit vectors over `indices`.
    pub fn indicator(q: FieldOrder, len: usize, indices: &[usize]) -> Self {
        let mut v = Self::zero(q, len);
        for &i in indices {
            v.coords[i] = q.add(v.coords[i], 1);
        }
        v
    }

    pub fn field(&self) -> FieldOrder {
        self.q
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[u8] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> u8 {
        self.coords[i]
    }

    pub fn set(&mut self, i: usize, value: i64) {
        self.coords[i] = self.q.reduce(value);
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Indices of the nonzero coordinates, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.coords
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c != 0).then_some(i))
            .collect()
    }

    /// `true` when every nonzero coordinate lies in the sorted index set `set`.
    pub fn supported_in(&self, set: &[usize]) -> bool {
        self.coords
            .iter()
            .enumerate()
            .all(|(i, &c)| c == 0 || set.binary_search(&i).is_ok())
    }

    pub fn scaled(&self, a: u8) -> Self {
        GfVector {
            q: self.q,
            coords: self.coords.iter().map(|&c| self.q.mul(c, a)).collect(),
        }
    }

    pub fn add(&self, other: &GfVector) -> Result<Self, GfError> {
        self.check_compatible(other)?;
        Ok(GfVector {
            q: self.q,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| self.q.add(a, b))
                .collect(),
        })
    }

    pub fn dot(&self, other: &GfVector) -> Result<u8, GfError> {
        self.check_compatible(other)?;
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .fold(0u8, |acc, (&a, &b)| self.q.add(acc, self.q.mul(a, b))))
    }

    /// Scales so the first nonzero coordinate is 1. Zero stays zero.
    pub fn projective_normal(&self) -> Self {
        match self.coords.iter().find(|&&c| c != 0) {
            Some(&lead) => self.scaled(field_inv(lead, self.q).expect("nonzero lead")),
            None => self.clone(),
        }
    }

    fn check_compatible(&self, other: &GfVector) -> Result<(), GfError> {
        if self.q != other.q {
            return Err(GfError::FieldMismatch {
                expected: self.q.get(),
                found: other.q.get(),
            });
        }
        if self.len() != other.len() {
            return Err(GfError::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for GfVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.q.get() > 9 { " " } else { "" };
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(sep))
    }
}

/// A dense row-major matrix over F_q.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GfMatrix {
    q: FieldOrder,
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl GfMatrix {
    pub fn new(
        q: FieldOrder,
        rows: usize,
        cols: usize,
        entries: Vec<i64>,
    ) -> Result<Self, GfError> {
        if entries.len() != rows * cols {
            return Err(GfError::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(GfMatrix {
            q,
            rows,
            cols,
            entries: entries.into_iter().map(|e| q.reduce(e)).collect(),
        })
    }

    pub fn zeros(q: FieldOrder, rows: usize, cols: usize) -> Self {
        GfMatrix {
            q,
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(q: FieldOrder, n: usize) -> Self {
        let mut m = Self::zeros(q, n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    /// Stacks vectors as rows. All vectors must share `q` and length `cols`.
    pub fn from_rows(q: FieldOrder, cols: usize, rows: &[GfVector]) -> Result<Self, GfError> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.field() != q {
                return Err(GfError::FieldMismatch {
                    expected: q.get(),
                    found: r.field().get(),
                });
            }
            if r.len() != cols {
                return Err(GfError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            entries.extend_from_slice(r.coords());
        }
        Ok(GfMatrix {
            q,
            rows: rows.len(),
            cols,
            entries,
        })
    }

    /// Places vectors side by side as columns.
    pub fn from_columns(q: FieldOrder, rows: usize, columns: &[GfVector]) -> Result<Self, GfError> {
        Ok(Self::from_rows(q, rows, columns)?.transpose())
    }

    pub fn field(&self) -> FieldOrder {
        self.q
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: i64) {
        self.entries[r * self.cols + c] = self.q.reduce(value);
    }

    pub fn row(&self, r: usize) -> GfVector {
        GfVector::from_reduced(
            self.q,
            self.entries[r * self.cols..(r + 1) * self.cols].to_vec(),
        )
    }

    pub fn column(&self, c: usize) -> GfVector {
        GfVector::from_reduced(self.q, (0..self.rows).map(|r| self.get(r, c)).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.q, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.entries[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    /// Row rank over F_q.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.forward_eliminate()
    }

    // Forward elimination with normalized pivots; returns the rank. The pivot
    // in each column is the first nonzero entry at or below the current row.
    fn forward_eliminate(&mut self) -> usize {
        let q = self.q;
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| self.get(r, c) != 0) else {
                continue;
            };
            self.swap_rows(p, rank);
            let inv = field_inv(self.get(rank, c), q).expect("pivot is nonzero");
            self.scale_row(rank, inv);
            for r in rank + 1..self.rows {
                let f = self.get(r, c);
                if f != 0 {
                    self.axpy_row(r, rank, q.neg(f));
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.entries.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn scale_row(&mut self, r: usize, a: u8) {
        for c in 0..self.cols {
            let i = r * self.cols + c;
            self.entries[i] = self.q.mul(self.entries[i], a);
        }
    }

    // row[dst] += a * row[src]
    fn axpy_row(&mut self, dst: usize, src: usize, a: u8) {
        for c in 0..self.cols {
            let s = self.entries[src * self.cols + c];
            if s != 0 {
                let i = dst * self.cols + c;
                self.entries[i] = self.q.add(self.entries[i], self.q.mul(a, s));
            }
        }
    }

    /// One solution `x` of `self · x = b`, with every free variable set to
    /// zero, or `None` when the system is inconsistent.
    pub fn solve(&self, b: &GfVector) -> Result<Option<GfVector>, GfError> {
        if b.len() != self.rows {
            return Err(GfError::DimensionMismatch {
                expected: self.rows,
                found: b.len(),
            });
        }
        let q = self.q;
        let n = self.cols;
        let mut aug = GfMatrix::zeros(q, self.rows, n + 1);
        for r in 0..self.rows {
            for c in 0..n {
                aug.entries[r * (n + 1) + c] = self.get(r, c);
            }
            aug.entries[r * (n + 1) + n] = b.get(r);
        }
        let mut pivots = Vec::new();
        let mut rank = 0;
        for c in 0..n {
            let Some(p) = (rank..aug.rows).find(|&r| aug.get(r, c) != 0) else {
                continue;
            };
            aug.swap_rows(p, rank);
            let inv = field_inv(aug.get(rank, c), q)?;
            aug.scale_row(rank, inv);
            for r in 0..aug.rows {
                if r != rank {
                    let f = aug.get(r, c);
                    if f != 0 {
                        aug.axpy_row(r, rank, q.neg(f));
                    }
                }
            }
            pivots.push(c);
            rank += 1;
        }
        if (rank..aug.rows).any(|r| aug.get(r, n) != 0) {
            return Ok(None);
        }
        let mut x = vec![0u8; n];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, n);
        }
        Ok(Some(GfVector::from_reduced(q, x)))
    }
}

impl fmt::Display for GfMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            writeln!(f, "{}", self.row(r))?;
        }
        Ok(())
    }
}

/// Row-reduced echelon basis of a subspace of F_q^dim, grown one vector at a
/// time.
///
/// Rows are kept sorted by pivot column, each with a leading 1 and zeros in
/// every other row's pivot column, so a span test is a single reduction pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EchelonBasis {
    q: FieldOrder,
    dim: usize,
    rows: Vec<Vec<u8>>,
    pivots: Vec<usize>,
}

impl EchelonBasis {
    pub fn new(q: FieldOrder, dim: usize) -> Self {
        EchelonBasis {
            q,
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn field(&self) -> FieldOrder {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis_rows(&self) -> impl Iterator<Item = GfVector> + '_ {
        self.rows
            .iter()
            .map(|r| GfVector::from_reduced(self.q, r.clone()))
    }

    fn check(&self, v: &GfVector) -> Result<(), GfError> {
        if v.field() != self.q {
            return Err(GfError::FieldMismatch {
                expected: self.q.get(),
                found: v.field().get(),
            });
        }
        if v.len() != self.dim {
            return Err(GfError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    fn reduce(&self, v: &[u8]) -> Vec<u8> {
        let q = self.q;
        let mut out = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let f = out[p];
            if f != 0 {
                let nf = q.neg(f);
                for (o, &r) in out.iter_mut().zip(row) {
                    if r != 0 {
                        *o = q.add(*o, q.mul(nf, r));
                    }
                }
            }
        }
        out
    }

    /// Whether `v` is an F_q-combination of the basis rows.
    pub fn in_span(&self, v: &GfVector) -> Result<bool, GfError> {
        self.check(v)?;
        Ok(self.reduce(v.coords()).iter().all(|&c| c == 0))
    }

    /// Adds `v` to the basis; returns whether the rank grew.
    pub fn insert(&mut self, v: &GfVector) -> Result<bool, GfError> {
        self.check(v)?;
        let mut r = self.reduce(v.coords());
        let Some(lead) = r.iter().position(|&c| c != 0) else {
            return Ok(false);
        };
        let q = self.q;
        let inv = field_inv(r[lead], q)?;
        for c in r.iter_mut() {
            *c = q.mul(*c, inv);
        }
        for row in &mut self.rows {
            let f = row[lead];
            if f != 0 {
                let nf = q.neg(f);
                for (x, &y) in row.iter_mut().zip(&r) {
                    if y != 0 {
                        *x = q.add(*x, q.mul(nf, y));
                    }
                }
            }
        }
        let at = self.pivots.partition_point(|&p| p < lead);
        self.pivots.insert(at, lead);
        self.rows.insert(at, r);
        Ok(true)
    }

    /// Non-mutating form of [`insert`](Self::insert).
    pub fn inserted(&self, v: &GfVector) -> Result<(EchelonBasis, bool), GfError> {
        let mut next = self.clone();
        let grew = next.insert(v)?;
        Ok((next, grew))
    }
}

/// Rank of `m` over its field.
pub fn rank(m: &GfMatrix) -> usize {
    m.rank()
}
