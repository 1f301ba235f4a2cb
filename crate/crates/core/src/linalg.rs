//! Dense exact linear algebra over `Q`: rank, nullspace, determinant,
//! linear solves, and the minimal-norm solve used by the counterexample
//! constructions. Matrices here stay small (at most a few hundred columns),
//! so plain fraction arithmetic with partial pivoting is all we need.

use num_traits::{One, Signed, Zero};

use crate::rational::Q;

/// Row-major dense matrix of rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![Q::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self {
            nrows,
            ncols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Q]> {
        self.data.chunks(self.ncols.max(1))
    }

    pub fn push_row(&mut self, row: Vec<Q>) {
        assert_eq!(row.len(), self.ncols, "row length mismatch");
        self.data.extend(row);
        self.nrows += 1;
    }

    /// Vertically stacks `self` over `other`.
    pub fn vstack(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.ncols, other.ncols, "column count mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        QMatrix {
            nrows: self.nrows + other.nrows,
            ncols: self.ncols,
            data,
        }
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.ncols, other.nrows, "inner dimension mismatch");
        let mut out = QMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.ncols {
                    let term = a * &other[(k, j)];
                    out[(i, j)] += term;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.ncols, v.len(), "vector length mismatch");
        self.rows().map(|r| dot(r, v)).collect()
    }

    /// In-place Gauss–Jordan reduction to reduced row echelon form.
    /// Returns the pivot column of each pivot row.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.ncols {
            if r == self.nrows {
                break;
            }
            let Some(p) = (r..self.nrows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].recip();
            for j in c..self.ncols {
                let v = &self[(r, j)] * &inv;
                self[(r, j)] = v;
            }
            for i in 0..self.nrows {
                if i != r && !self[(i, c)].is_zero() {
                    let factor = self[(i, c)].clone();
                    for j in c..self.ncols {
                        let v = &self[(i, j)] - &factor * &self[(r, j)];
                        self[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of `{x : Ax = 0}`, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: Vec<Option<usize>> = {
            let mut v = vec![None; self.ncols];
            for (row, &col) in pivots.iter().enumerate() {
                v[col] = Some(row);
            }
            v
        };
        let mut basis = Vec::new();
        for free in 0..self.ncols {
            if pivot_set[free].is_some() {
                continue;
            }
            let mut x = vec![Q::zero(); self.ncols];
            x[free] = Q::one();
            for (col, row) in pivot_set.iter().enumerate() {
                if let Some(row) = row {
                    x[col] = -m[(*row, free)].clone();
                }
            }
            basis.push(x);
        }
        basis
    }

    /// Determinant by fraction Gaussian elimination. Panics off-square.
    pub fn determinant(&self) -> Q {
        assert_eq!(self.nrows, self.ncols, "determinant of non-square matrix");
        let mut m = self.clone();
        let n = m.nrows;
        let mut det = Q::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Q::zero();
            };
            if p != c {
                m.swap_rows(c, p);
                det = -det;
            }
            det *= m[(c, c)].clone();
            let inv = m[(c, c)].recip();
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let factor = &m[(i, c)] * &inv;
                for j in c..n {
                    let v = &m[(i, j)] - &factor * &m[(c, j)];
                    m[(i, j)] = v;
                }
            }
        }
        det
    }

    /// One solution of `Ax = b`, or `None` when inconsistent.
    pub fn solve(&self, b: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(b.len(), self.nrows, "rhs length mismatch");
        let mut aug = QMatrix::zeros(self.nrows, self.ncols + 1);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.ncols)] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.last().is_some_and(|&c| c == self.ncols) {
            return None; // pivot in the rhs column
        }
        let mut x = vec![Q::zero(); self.ncols];
        for (row, &col) in pivots.iter().enumerate() {
            x[col] = aug[(row, self.ncols)].clone();
        }
        Some(x)
    }

    /// Minimal Euclidean-norm solution of a consistent (possibly
    /// underdetermined) system `Ax = b`: restrict to the row space,
    /// i.e. `x = A'ᵀ y` with `(A'A'ᵀ) y = b'` over independent rows.
    pub fn solve_min_norm(&self, b: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(b.len(), self.nrows, "rhs length mismatch");
        // Consistency check over the full system.
        let augmented: Vec<Vec<Q>> = (0..self.nrows)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.push(b[i].clone());
                r
            })
            .collect();
        if rank_of(&augmented) != self.rank() {
            return None;
        }
        // Keep a maximal independent subset of rows (with their rhs entries).
        let mut rows: Vec<Vec<Q>> = Vec::new();
        let mut rhs: Vec<Q> = Vec::new();
        let mut rank = 0;
        for i in 0..self.nrows {
            let mut candidate = rows.clone();
            candidate.push(self.row(i).to_vec());
            if rank_of(&candidate) > rank {
                rank += 1;
                rows = candidate;
                rhs.push(b[i].clone());
            }
        }
        if rows.is_empty() {
            return Some(vec![Q::zero(); self.ncols]);
        }
        let a = QMatrix::from_rows(rows);
        let gram = a.mul(&a.transpose());
        let y = gram.solve(&rhs)?;
        Some(a.transpose().mul_vec(&y))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.ncols {
            self.data.swap(a * self.ncols + j, b * self.ncols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.ncols + j]
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn is_zero_vec(v: &[Q]) -> bool {
    v.iter().all(Q::is_zero)
}

/// Scales a rational vector to small integer entries (clears denominators,
/// divides by the gcd, makes the first nonzero entry positive). Handy for
/// readable witnesses; never changes any span or verdict.
pub fn normalize_vec(v: &[Q]) -> Vec<Q> {
    use num_bigint::BigInt;
    use num_integer::Integer;
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut gcd = BigInt::zero();
    for n in &ints {
        gcd = gcd.gcd(n);
    }
    if gcd.is_zero() {
        return v.to_vec();
    }
    let sign = ints
        .iter()
        .find(|n| !n.is_zero())
        .map_or(BigInt::one(), |n| {
            if n.is_negative() {
                -BigInt::one()
            } else {
                BigInt::one()
            }
        });
    ints.into_iter()
        .map(|n| Q::from_integer(n / &gcd * &sign))
        .collect()
}

/// Exact rank of a list of coefficient vectors.
pub fn rank_of(vectors: &[Vec<Q>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    QMatrix::from_rows(vectors.to_vec()).rank()
}

/// Is `v` in the span of `basis`? Decided by an exact rank comparison.
pub fn in_span(basis: &[Vec<Q>], v: &[Q]) -> bool {
    let r = rank_of(basis);
    let mut all = basis.to_vec();
    all.push(v.to_vec());
    rank_of(&all) == r
}

/// Do two generator lists span the same subspace?
pub fn same_span(a: &[Vec<Q>], b: &[Vec<Q>]) -> bool {
    let ra = rank_of(a);
    let rb = rank_of(b);
    if ra != rb {
        return false;
    }
    let mut all = a.to_vec();
    all.extend(b.iter().cloned());
    rank_of(&all) == ra
}
