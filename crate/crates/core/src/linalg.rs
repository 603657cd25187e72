//! Dense exact matrices over the rationals.

use std::fmt;

use num_traits::{One, Zero};

use crate::rational::{fmt_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        QMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        QMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| crate::rational::qi(v)).collect())
                .collect(),
        )
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(rows: usize, cols: &[Vec<Rational>]) -> Self {
        let mut m = QMatrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `vᵀ M`.
    pub fn left_mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        self.transpose().mul_vec(v)
    }

    pub fn add(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// Stacks `blocks` vertically; all must share the column count.
    pub fn vstack(blocks: &[QMatrix]) -> QMatrix {
        let cols = blocks.first().map_or(0, |b| b.cols);
        assert!(blocks.iter().all(|b| b.cols == cols));
        QMatrix {
            rows: blocks.iter().map(|b| b.rows).sum(),
            cols,
            data: blocks.iter().flat_map(|b| b.data.iter().cloned()).collect(),
        }
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.eliminate(None);
        (m, pivots)
    }

    /// In-place Gauss-Jordan elimination; row operations are mirrored on
    /// `track` when given.
    fn eliminate(&mut self, mut track: Option<&mut QMatrix>) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            if let Some(t) = track.as_deref_mut() {
                t.swap_rows(r, p);
            }
            let inv = Rational::one() / self.get(r, c);
            self.scale_row(r, &inv);
            if let Some(t) = track.as_deref_mut() {
                t.scale_row(r, &inv);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                self.axpy_row(i, r, &f);
                if let Some(t) = track.as_deref_mut() {
                    t.axpy_row(i, r, &f);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, i: usize, f: &Rational) {
        for j in 0..self.cols {
            let idx = i * self.cols + j;
            if !self.data[idx].is_zero() {
                self.data[idx] *= f;
            }
        }
    }

    /// `row_i -= f · row_src`.
    fn axpy_row(&mut self, i: usize, src: usize, f: &Rational) {
        for j in 0..self.cols {
            let s = &self.data[src * self.cols + j];
            if !s.is_zero() {
                let d = f * s;
                self.data[i * self.cols + j] -= d;
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{x : M x = 0}`.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    /// Basis of the column space (the pivot columns of `M`).
    pub fn column_space(&self) -> Vec<Vec<Rational>> {
        let (_, pivots) = self.rref();
        pivots.iter().map(|&c| self.column(c)).collect()
    }

    /// Exact solve of `M x = b` with a row-combination certificate when
    /// inconsistent.
    pub fn solve(&self, b: &[Rational], order: PivotOrder) -> Solve {
        assert_eq!(b.len(), self.rows);
        let (row_perm, col_perm) = order.permutations(self.rows, self.cols);
        let mut aug = QMatrix::zeros(self.rows, self.cols + 1);
        for (i, &ri) in row_perm.iter().enumerate() {
            for (j, &cj) in col_perm.iter().enumerate() {
                aug.set(i, j, self.get(ri, cj).clone());
            }
            aug.set(i, self.cols, b[ri].clone());
        }
        let mut track = QMatrix::identity(self.rows);
        let pivots = aug.eliminate(Some(&mut track));
        if pivots.last() == Some(&self.cols) {
            let row = pivots.len() - 1;
            let mut lambda = vec![Rational::zero(); self.rows];
            for (i, &ri) in row_perm.iter().enumerate() {
                lambda[ri] = track.get(row, i).clone();
            }
            return Solve::Infeasible { lambda };
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[col_perm[pc]] = aug.get(row, self.cols).clone();
        }
        Solve::Feasible {
            x,
            rank: pivots.len(),
            nullity: self.cols - pivots.len(),
        }
    }
}

/// Column/row processing order for elimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotOrder {
    Natural,
    Reversed,
}

impl PivotOrder {
    fn permutations(self, rows: usize, cols: usize) -> (Vec<usize>, Vec<usize>) {
        match self {
            PivotOrder::Natural => ((0..rows).collect(), (0..cols).collect()),
            PivotOrder::Reversed => ((0..rows).rev().collect(), (0..cols).rev().collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solve {
    Feasible {
        x: Vec<Rational>,
        rank: usize,
        nullity: usize,
    },
    /// `λᵀ M = 0` and `λᵀ b ≠ 0`.
    Infeasible { lambda: Vec<Rational> },
}

/// Basis of `span(u) ∩ span(w)` for bases of vectors in the same space.
pub fn intersect(dim: usize, u: &[Vec<Rational>], w: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    if u.is_empty() || w.is_empty() {
        return Vec::new();
    }
    let mut cols: Vec<Vec<Rational>> = u.to_vec();
    cols.extend(w.iter().map(|v| v.iter().map(|x| -x).collect::<Vec<_>>()));
    let m = QMatrix::from_columns(dim, &cols);
    let vecs: Vec<Vec<Rational>> = m
        .nullspace()
        .into_iter()
        .map(|coef| {
            let mut v = vec![Rational::zero(); dim];
            for (c, basis) in coef.iter().zip(u) {
                for (acc, b) in v.iter_mut().zip(basis) {
                    *acc += c * b;
                }
            }
            v
        })
        .collect();
    if vecs.is_empty() {
        return vecs;
    }
    QMatrix::from_columns(dim, &vecs).column_space()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(fmt_rational)
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use proptest::prelude::*;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| qi(x)).collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let m = QMatrix::from_i64(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(m.mul_vec(&ns[0]).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = QMatrix::from_i64(&[&[1, 1], &[1, -1], &[2, 0]]);
        match m.solve(&v(&[3, 1, 4]), PivotOrder::Natural) {
            Solve::Feasible { x, rank, nullity } => {
                assert_eq!(x, v(&[2, 1]));
                assert_eq!((rank, nullity), (2, 0));
            }
            other => panic!("{other:?}"),
        }
        let b = v(&[3, 1, 5]);
        for order in [PivotOrder::Natural, PivotOrder::Reversed] {
            match m.solve(&b, order) {
                Solve::Infeasible { lambda } => {
                    assert!(m.left_mul_vec(&lambda).iter().all(|x| x.is_zero()));
                    assert!(!dot(&lambda, &b).is_zero());
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn intersection_of_planes() {
        // span{e1,e2} ∩ span{e2,e3} = span{e2}
        let u = vec![v(&[1, 0, 0]), v(&[0, 1, 0])];
        let w = vec![v(&[0, 1, 0]), v(&[0, 0, 1])];
        let i = intersect(3, &u, &w);
        assert_eq!(i.len(), 1);
        assert!(i[0][0].is_zero() && i[0][2].is_zero() && !i[0][1].is_zero());
        assert!(intersect(3, &u, &[v(&[0, 0, 1])]).is_empty());
    }

    #[test]
    fn product_and_transpose() {
        let a = QMatrix::from_rows(vec![vec![q(1, 2), qi(1)], vec![qi(0), qi(2)]]);
        let i = QMatrix::identity(2);
        assert_eq!(a.mul(&i), a);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.to_string(), "[1/2 1; 0 2]");
    }

    proptest! {
        #[test]
        fn solve_outcome_is_independent_of_order(
            entries in proptest::collection::vec(-3i64..=3, 12),
            rhs in proptest::collection::vec(-3i64..=3, 4),
        ) {
            let rows: Vec<Vec<Rational>> = entries.chunks(3).map(v).collect();
            let m = QMatrix::from_rows(rows);
            let b = v(&rhs);
            let a = m.solve(&b, PivotOrder::Natural);
            let r = m.solve(&b, PivotOrder::Reversed);
            match (&a, &r) {
                (Solve::Feasible { x, nullity, .. }, Solve::Feasible { x: x2, nullity: n2, .. }) => {
                    prop_assert_eq!(nullity, n2);
                    prop_assert_eq!(m.mul_vec(x), b.clone());
                    prop_assert_eq!(m.mul_vec(x2), b);
                }
                (Solve::Infeasible { lambda }, Solve::Infeasible { lambda: l2 }) => {
                    for l in [lambda, l2] {
                        prop_assert!(m.left_mul_vec(l).iter().all(|x| x.is_zero()));
                        prop_assert!(!dot(l, &b).is_zero());
                    }
                }
                _ => prop_assert!(false, "orders disagree"),
            }
        }
    }
}
