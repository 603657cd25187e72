use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::greens::{DerivExpr, DerivMatrix};
use crate::linalg::QMatrix;
use crate::opsym::PolyMatrix;
use crate::poly::{ExactValue, MultiIndex, MultiPoly};
use crate::rational::{fmt_rational, Rational};

/// `Σ c · y^m ⊗ ∂^β Φ_n` with every `β` reduced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tensor {
    terms: BTreeMap<(MultiIndex, MultiIndex), Rational>,
}

impl Tensor {
    pub fn zero() -> Self {
        Tensor::default()
    }

    /// `p(y) ⊗ e(x)`.
    pub fn product(e: &DerivExpr, p: &MultiPoly) -> Tensor {
        let mut out = Tensor::zero();
        for (beta, c) in e.terms() {
            for (m, d) in p.terms() {
                out.add_term(m.clone(), beta.clone(), c * d);
            }
        }
        out
    }

    pub fn unit(m: MultiIndex, beta: MultiIndex) -> Tensor {
        let mut t = Tensor::zero();
        t.add_term(m, beta, Rational::one());
        t
    }

    pub fn add_term(&mut self, m: MultiIndex, beta: MultiIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        let key = (m, beta);
        let entry = self.terms.entry(key.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> &BTreeMap<(MultiIndex, MultiIndex), Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        let mut out = self.clone();
        for ((m, b), c) in &other.terms {
            out.add_term(m.clone(), b.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Tensor {
        let mut out = Tensor::zero();
        for ((m, b), v) in &self.terms {
            out.add_term(m.clone(), b.clone(), v * c);
        }
        out
    }

    /// `∂^α_y`, acting on the polynomial factor.
    pub fn diff_y(&self, alpha: &MultiIndex) -> Tensor {
        let mut out = Tensor::zero();
        for ((m, b), c) in &self.terms {
            let d = MultiPoly::monomial(m.clone(), c.clone()).diff_multi(alpha);
            for (m2, c2) in d.terms() {
                out.add_term(m2.clone(), b.clone(), c2.clone());
            }
        }
        out
    }

    /// Groups by `β`: the x-part attached to each y-monomial.
    pub fn by_monomial(&self, n: usize) -> BTreeMap<MultiIndex, DerivExpr> {
        let mut out: BTreeMap<MultiIndex, DerivExpr> = BTreeMap::new();
        for ((m, b), c) in &self.terms {
            let e = out.entry(m.clone()).or_insert_with(|| DerivExpr::zero(n));
            *e = e.add(&DerivExpr::partial(b.clone()).scale(c));
        }
        out
    }

    /// Exact value at `(x, y)` when all parts share a parity and carry no
    /// logarithm (true for every derivative of order ≥ 1).
    pub fn eval_exact(&self, n: usize, x: &[Rational], y: &[Rational]) -> Option<ExactValue> {
        let mut acc: Option<ExactValue> = None;
        for (m, e) in self.by_monomial(n) {
            let yv = MultiPoly::monomial(m, Rational::one()).eval(y);
            let v = e.eval_exact(x).ok()?;
            if !v.log_coeff.is_zero() {
                return None;
            }
            acc = Some(match acc {
                None => ExactValue {
                    rational: v.rational * &yv,
                    ..v
                },
                Some(a) => {
                    if a.odd != v.odd && !v.rational.is_zero() && !a.rational.is_zero() {
                        return None;
                    }
                    let odd = if a.rational.is_zero() { v.odd } else { a.odd };
                    ExactValue {
                        rational: a.rational + v.rational * &yv,
                        odd,
                        ..a
                    }
                }
            });
        }
        Some(acc.unwrap_or(ExactValue {
            log_coeff: Rational::zero(),
            norm_sq: x.iter().map(|v| v * v).sum(),
            rational: Rational::zero(),
            odd: false,
        }))
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|((m, b), c)| {
                let mono = crate::poly::MultiPoly::monomial(m.clone(), Rational::one()).to_string();
                let sign = if c.is_negative() { "-" } else { "" };
                let mag = fmt_rational(&c.abs());
                let mono = mono.trim_start_matches("1*");
                format!("{sign}{mag}*{mono}*d^{b}")
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Matrix of tensors; the unknown `Q(x, y) = T(x)P(y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeQ {
    n: usize,
    entries: Vec<Vec<Tensor>>,
}

impl CompositeQ {
    pub fn zeros(n: usize, rows: usize, cols: usize) -> Self {
        CompositeQ {
            n,
            entries: vec![vec![Tensor::zero(); cols]; rows],
        }
    }

    pub fn new(n: usize, entries: Vec<Vec<Tensor>>) -> Self {
        let cols = entries.first().map_or(0, |r| r.len());
        assert!(entries.iter().all(|r| r.len() == cols));
        CompositeQ { n, entries }
    }

    /// `G(x) K(y)` with `G` a derivative matrix and `K` a polynomial matrix.
    pub fn product(g: &DerivMatrix, k: &PolyMatrix) -> CompositeQ {
        assert_eq!(g.cols(), k.rows(), "shape mismatch in G K");
        let mut out = CompositeQ::zeros(g.n(), g.rows(), k.cols());
        for i in 0..g.rows() {
            for j in 0..k.cols() {
                let mut t = Tensor::zero();
                for l in 0..g.cols() {
                    t = t.add(&Tensor::product(g.entry(i, l), k.entry(l, j)));
                }
                out.entries[i][j] = t;
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, |r| r.len())
    }

    pub fn entry(&self, i: usize, j: usize) -> &Tensor {
        &self.entries[i][j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut Tensor {
        &mut self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<Tensor>] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|t| t.is_zero())
    }

    pub fn add(&self, other: &CompositeQ) -> CompositeQ {
        assert_eq!((self.rows(), self.cols()), (other.rows(), other.cols()));
        CompositeQ {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.add(y)).collect())
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> CompositeQ {
        self.map(|t| t.scale(c))
    }

    pub fn diff_y(&self, alpha: &MultiIndex) -> CompositeQ {
        self.map(|t| t.diff_y(alpha))
    }

    pub fn map(&self, f: impl Fn(&Tensor) -> Tensor) -> CompositeQ {
        CompositeQ {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(&f).collect())
                .collect(),
        }
    }

    /// `Q · M` for a constant matrix `M`.
    pub fn mul_const(&self, m: &QMatrix) -> CompositeQ {
        assert_eq!(self.cols(), m.rows());
        let mut out = CompositeQ::zeros(self.n, self.rows(), m.cols());
        for i in 0..self.rows() {
            for j in 0..m.cols() {
                let mut t = Tensor::zero();
                for l in 0..self.cols() {
                    let c = m.get(l, j);
                    if !c.is_zero() {
                        t = t.add(&self.entries[i][l].scale(c));
                    }
                }
                out.entries[i][j] = t;
            }
        }
        out
    }

    /// Distinct y-degrees and β-orders appearing, for degree discipline.
    pub fn degrees(&self) -> (Vec<u32>, Vec<u32>) {
        let mut ys: Vec<u32> = Vec::new();
        let mut bs: Vec<u32> = Vec::new();
        for t in self.entries.iter().flatten() {
            for (m, b) in t.terms.keys() {
                ys.push(m.order());
                bs.push(b.order());
            }
        }
        ys.sort_unstable();
        ys.dedup();
        bs.sort_unstable();
        bs.dedup();
        (ys, bs)
    }
}

impl fmt::Display for CompositeQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|t| t.to_string())
                    .collect::<Vec<_>>()
                    .join(" | ")
            })
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

/// Rank factorization `Q = T(x) P(y)` through `M = ℝ^{dim_m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub t: DerivMatrix,
    pub p: PolyMatrix,
    pub dim_m: usize,
    /// Shape of `Q`, kept for the empty factorization.
    pub shape: (usize, usize),
}

impl Factorization {
    pub fn rebuild(&self) -> CompositeQ {
        if self.dim_m == 0 {
            return CompositeQ::zeros(self.t.n(), self.shape.0, self.shape.1);
        }
        CompositeQ::product(&self.t, &self.p)
    }
}

/// Arranges the coefficients of `Q` as rows `(v, β)` by columns `(f, m)` and
/// splits the matrix as (pivot columns) × (reduced rows).
pub fn factor_composite(q: &CompositeQ) -> Factorization {
    let n = q.n;
    let mut row_keys: BTreeMap<(usize, MultiIndex), usize> = BTreeMap::new();
    let mut col_keys: BTreeMap<(usize, MultiIndex), usize> = BTreeMap::new();
    for (v, row) in q.entries.iter().enumerate() {
        for (f, t) in row.iter().enumerate() {
            for (m, b) in t.terms.keys() {
                let rl = row_keys.len();
                row_keys.entry((v, b.clone())).or_insert(rl);
                let cl = col_keys.len();
                col_keys.entry((f, m.clone())).or_insert(cl);
            }
        }
    }
    if row_keys.is_empty() {
        return Factorization {
            t: DerivMatrix::new(n, vec![Vec::new(); q.rows()]),
            p: PolyMatrix::new(n, Vec::new()),
            dim_m: 0,
            shape: (q.rows(), q.cols()),
        };
    }
    let mut c = QMatrix::zeros(row_keys.len(), col_keys.len());
    for (v, row) in q.entries.iter().enumerate() {
        for (f, t) in row.iter().enumerate() {
            for ((m, b), val) in &t.terms {
                c.set(row_keys[&(v, b.clone())], col_keys[&(f, m.clone())], val.clone());
            }
        }
    }
    let (rref, pivots) = c.rref();
    let r = pivots.len();
    let mut t_entries = vec![vec![DerivExpr::zero(n); r]; q.rows()];
    for ((v, b), &ri) in &row_keys {
        for (j, &pc) in pivots.iter().enumerate() {
            let val = c.get(ri, pc);
            if !val.is_zero() {
                t_entries[*v][j] = t_entries[*v][j].add(&DerivExpr::partial(b.clone()).scale(val));
            }
        }
    }
    let mut p_entries = vec![vec![MultiPoly::zero(n); q.cols()]; r];
    for ((f, m), &ci) in &col_keys {
        for (j, row) in p_entries.iter_mut().enumerate() {
            let val = rref.get(j, ci);
            if !val.is_zero() {
                row[*f].add_term(m.clone(), val.clone());
            }
        }
    }
    Factorization {
        t: DerivMatrix::new(n, t_entries),
        p: PolyMatrix::new(n, p_entries),
        dim_m: r,
        shape: (q.rows(), q.cols()),
    }
}
