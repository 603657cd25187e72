//! Constant-coefficient homogeneous operators `Σ_{|α|=k} A_α ∂^α` held by
//! their coefficient matrices, and the structural checks on them.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{intersect, QMatrix};
use crate::poly::{MultiIndex, MultiPoly, RootCertificate, UniPoly};
use crate::rational::{fmt_rational, q, Rational};

pub const DEFAULT_BUDGET: usize = 32;
pub const DEFAULT_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpsymError {
    #[error("multi-index {alpha} has order {got}, expected {expected}")]
    WrongOrder {
        alpha: String,
        got: u32,
        expected: u32,
    },
    #[error("multi-index {alpha} has {got} entries, expected {expected}")]
    WrongDimension {
        alpha: String,
        got: usize,
        expected: usize,
    },
    #[error("coefficient for {alpha} is {rows}x{cols}, expected {dim_e}x{dim_v}")]
    Shape {
        alpha: String,
        rows: usize,
        cols: usize,
        dim_e: usize,
        dim_v: usize,
    },
    #[error("all coefficient matrices vanish")]
    ZeroOperator,
    #[error("frequency has {got} entries, expected {expected}")]
    FrequencyDimension { got: usize, expected: usize },
    #[error("cannot compose: {0}")]
    Compose(String),
}

/// `A(D) = Σ_{|α|=k} A_α ∂^α` from `V = ℝ^{dim_v}` to `E = ℝ^{dim_e}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSymbol {
    n: usize,
    k: u32,
    dim_v: usize,
    dim_e: usize,
    coeffs: BTreeMap<MultiIndex, QMatrix>,
}

impl OperatorSymbol {
    pub fn new(
        n: usize,
        k: u32,
        dim_v: usize,
        dim_e: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, QMatrix)>,
    ) -> Result<Self, OpsymError> {
        let mut map = BTreeMap::new();
        for (alpha, m) in coeffs {
            if alpha.dim() != n {
                return Err(OpsymError::WrongDimension {
                    alpha: alpha.to_string(),
                    got: alpha.dim(),
                    expected: n,
                });
            }
            if alpha.order() != k {
                return Err(OpsymError::WrongOrder {
                    alpha: alpha.to_string(),
                    got: alpha.order(),
                    expected: k,
                });
            }
            if m.rows() != dim_e || m.cols() != dim_v {
                return Err(OpsymError::Shape {
                    alpha: alpha.to_string(),
                    rows: m.rows(),
                    cols: m.cols(),
                    dim_e,
                    dim_v,
                });
            }
            if !m.is_zero() {
                map.insert(alpha, m);
            }
        }
        if map.is_empty() {
            return Err(OpsymError::ZeroOperator);
        }
        Ok(OperatorSymbol {
            n,
            k,
            dim_v,
            dim_e,
            coeffs: map,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, QMatrix> {
        &self.coeffs
    }

    /// `A_α`, zero when not stored.
    pub fn coeff(&self, alpha: &MultiIndex) -> QMatrix {
        self.coeffs
            .get(alpha)
            .cloned()
            .unwrap_or_else(|| QMatrix::zeros(self.dim_e, self.dim_v))
    }

    /// `A(ξ) = Σ A_α ξ^α`.
    pub fn symbol_at(&self, xi: &[Rational]) -> Result<QMatrix, OpsymError> {
        if xi.len() != self.n {
            return Err(OpsymError::FrequencyDimension {
                got: xi.len(),
                expected: self.n,
            });
        }
        let mut out = QMatrix::zeros(self.dim_e, self.dim_v);
        for (alpha, m) in &self.coeffs {
            let mut w = Rational::one();
            for (x, &e) in xi.iter().zip(alpha.entries()) {
                for _ in 0..e {
                    w *= x;
                }
            }
            if !w.is_zero() {
                out = out.add(&m.scale(&w));
            }
        }
        Ok(out)
    }

    /// `A(ξ)` as a `dim_e × dim_v` matrix of forms in `ξ`.
    pub fn symbol_poly(&self) -> PolyMatrix {
        let mut entries = vec![vec![MultiPoly::zero(self.n); self.dim_v]; self.dim_e];
        for (alpha, m) in &self.coeffs {
            for (i, row) in entries.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    let c = m.get(i, j);
                    if !c.is_zero() {
                        e.add_term(alpha.clone(), c.clone());
                    }
                }
            }
        }
        PolyMatrix::new(self.n, entries)
    }

    /// `M A(D)` for a constant matrix `M` acting on the target.
    pub fn left_mul(&self, m: &QMatrix) -> Result<OperatorSymbol, OpsymError> {
        OperatorSymbol::new(
            self.n,
            self.k,
            self.dim_v,
            m.rows(),
            self.coeffs.iter().map(|(a, c)| (a.clone(), m.mul(c))),
        )
    }
}

impl fmt::Display for OperatorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(a, m)| format!("{m} d^{a}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Matrix of polynomials in a common number of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    n: usize,
    entries: Vec<Vec<MultiPoly>>,
}

impl PolyMatrix {
    pub fn new(n: usize, entries: Vec<Vec<MultiPoly>>) -> Self {
        let cols = entries.first().map_or(0, |r| r.len());
        assert!(entries.iter().all(|r| r.len() == cols), "ragged rows");
        assert!(entries.iter().flatten().all(|p| p.n() == n));
        PolyMatrix { n, entries }
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, |r| r.len())
    }

    pub fn entry(&self, i: usize, j: usize) -> &MultiPoly {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<MultiPoly>] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|p| p.is_zero())
    }

    pub fn mul(&self, other: &PolyMatrix) -> Result<PolyMatrix, OpsymError> {
        if self.cols() != other.rows() || self.n != other.n {
            return Err(OpsymError::Compose(format!(
                "{}x{} times {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        let mut out = vec![vec![MultiPoly::zero(self.n); other.cols()]; self.rows()];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for k in 0..self.cols() {
                    *e = &*e + &(&self.entries[i][k] * &other.entries[k][j]);
                }
            }
        }
        Ok(PolyMatrix::new(self.n, out))
    }

    pub fn eval(&self, xi: &[Rational]) -> QMatrix {
        QMatrix::from_rows(
            self.entries
                .iter()
                .map(|r| r.iter().map(|p| p.eval(xi)).collect())
                .collect(),
        )
    }

    /// `p · Id_d`.
    pub fn scalar_identity(p: &MultiPoly, d: usize) -> PolyMatrix {
        let mut entries = vec![vec![MultiPoly::zero(p.n()); d]; d];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = p.clone();
        }
        PolyMatrix::new(p.n(), entries)
    }

    /// Determinant by cofactor expansion (small matrices only).
    pub fn det(&self) -> MultiPoly {
        assert_eq!(self.rows(), self.cols(), "determinant of non-square matrix");
        let idx: Vec<usize> = (0..self.rows()).collect();
        det_rec(&self.entries, &idx, 0, self.n)
    }

    /// All `size × size` minors taken over row subsets (columns fixed).
    pub fn maximal_row_minors(&self) -> Vec<MultiPoly> {
        let size = self.cols();
        row_subsets(self.rows(), size)
            .into_iter()
            .map(|rows| {
                let sub: Vec<Vec<MultiPoly>> =
                    rows.iter().map(|&r| self.entries[r].clone()).collect();
                PolyMatrix::new(self.n, sub).det()
            })
            .collect()
    }
}

fn det_rec(m: &[Vec<MultiPoly>], cols: &[usize], row: usize, n: usize) -> MultiPoly {
    if cols.is_empty() {
        return MultiPoly::one(n);
    }
    let mut acc = MultiPoly::zero(n);
    for (pos, &c) in cols.iter().enumerate() {
        let e = &m[row][c];
        if e.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let term = e * &det_rec(m, &rest, row + 1, n);
        acc = if pos % 2 == 0 {
            &acc + &term
        } else {
            &acc - &term
        };
    }
    acc
}

fn row_subsets(total: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, total: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..total {
            cur.push(i);
            go(i + 1, total, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, total, size, &mut Vec::new(), &mut out);
    out
}

/// `L(ξ)A(ξ)` as a polynomial matrix.
pub fn compose_symbols(l: &OperatorSymbol, a: &OperatorSymbol) -> Result<PolyMatrix, OpsymError> {
    if l.n != a.n {
        return Err(OpsymError::Compose(format!("dimensions {} and {}", l.n, a.n)));
    }
    if l.dim_v != a.dim_e {
        return Err(OpsymError::Compose(format!(
            "L acts on R^{} but A maps into R^{}",
            l.dim_v, a.dim_e
        )));
    }
    l.symbol_poly().mul(&a.symbol_poly())
}

/// Deterministic frequency sequence: `e_1, …, e_n`, `(1, …, 1)`, then
/// seeded nonzero vectors with entries `p/q`, `|p| ≤ 5`, `1 ≤ q ≤ 4`.
pub fn frequency_sequence(n: usize, count: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut out: Vec<Vec<Rational>> = Vec::with_capacity(count);
    for i in 0..n {
        let mut v = vec![Rational::zero(); n];
        v[i] = Rational::one();
        out.push(v);
    }
    out.push(vec![Rational::one(); n]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let v: Vec<Rational> = (0..n)
            .map(|_| q(rng.gen_range(-5..=5), rng.gen_range(1..=4)))
            .collect();
        if v.iter().any(|x| !x.is_zero()) {
            out.push(v);
        }
    }
    out.truncate(count);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    Elliptic,
    Canceling,
    Cocanceling,
    ComposeZero,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::Elliptic => "elliptic",
            Property::Canceling => "canceling",
            Property::Cocanceling => "cocanceling",
            Property::ComposeZero => "compose-zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A nonzero vector in a common kernel.
    Vector(Vec<Rational>),
    /// A frequency where the property breaks, with a kernel vector there.
    Frequency {
        xi: Vec<Rational>,
        kernel: Vec<Rational>,
    },
    /// A real root of the minor GCD on the line `ξ_{fixed_axis} = 1`.
    Root {
        fixed_axis: usize,
        root: RootCertificate,
    },
    /// Basis of a nonzero candidate subspace.
    Subspace(Vec<Vec<Rational>>),
    /// Dimensions alone rule the property out.
    Shape(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    HoldsCertified { argument: String },
    HoldsSampled { samples: usize },
    Fails(Witness),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyVerdict {
    pub property: Property,
    pub verdict: Verdict,
    /// Frequencies examined, for independent re-checking.
    pub samples: Vec<Vec<Rational>>,
    pub notes: String,
}

impl PropertyVerdict {
    pub fn holds(&self) -> bool {
        !matches!(self.verdict, Verdict::Fails(_))
    }

    pub fn is_certified(&self) -> bool {
        matches!(self.verdict, Verdict::HoldsCertified { .. })
    }

    pub fn label(&self) -> &'static str {
        match self.verdict {
            Verdict::HoldsCertified { .. } => "holds-certified",
            Verdict::HoldsSampled { .. } => "holds-sampled",
            Verdict::Fails(_) => "fails",
        }
    }
}

pub fn fmt_vector(v: &[Rational]) -> String {
    format!(
        "({})",
        v.iter().map(fmt_rational).collect::<Vec<_>>().join(", ")
    )
}

/// Trivial common kernel of the stacked `L_α`.
pub fn check_cocanceling(l: &OperatorSymbol) -> PropertyVerdict {
    let blocks: Vec<QMatrix> = l.coeffs.values().cloned().collect();
    let stacked = QMatrix::vstack(&blocks);
    let kernel = stacked.nullspace();
    let verdict = match kernel.into_iter().next() {
        None => Verdict::HoldsCertified {
            argument: format!(
                "stacked coefficient matrix ({}x{}) has rank {}",
                stacked.rows(),
                stacked.cols(),
                stacked.cols()
            ),
        },
        Some(e) => Verdict::Fails(Witness::Vector(e)),
    };
    PropertyVerdict {
        property: Property::Cocanceling,
        verdict,
        samples: Vec::new(),
        notes: String::new(),
    }
}

pub fn check_injectively_elliptic(a: &OperatorSymbol, budget: usize) -> PropertyVerdict {
    check_injectively_elliptic_seeded(a, budget, DEFAULT_SEED)
}

pub fn check_injectively_elliptic_seeded(
    a: &OperatorSymbol,
    budget: usize,
    seed: u64,
) -> PropertyVerdict {
    let mk = |verdict, samples, notes: &str| PropertyVerdict {
        property: Property::Elliptic,
        verdict,
        samples,
        notes: notes.to_string(),
    };
    if a.dim_e < a.dim_v {
        return mk(
            Verdict::Fails(Witness::Shape(format!(
                "dim E = {} < dim V = {}: A(ξ) always has a kernel",
                a.dim_e, a.dim_v
            ))),
            Vec::new(),
            "",
        );
    }
    if a.n == 2 {
        return elliptic_binary(a);
    }
    let samples = frequency_sequence(a.n, budget, seed);
    for xi in &samples {
        let m = a.symbol_at(xi).expect("sample has dimension n");
        if let Some(kernel) = m.nullspace().into_iter().next() {
            return mk(
                Verdict::Fails(Witness::Frequency {
                    xi: xi.clone(),
                    kernel,
                }),
                samples.clone(),
                "",
            );
        }
    }
    let count = samples.len();
    mk(
        Verdict::HoldsSampled { samples: count },
        samples,
        "n >= 3: trivial kernel verified only at the sampled frequencies",
    )
}

/// n = 2: real roots of the GCD of the maximal minors, on both affine charts.
fn elliptic_binary(a: &OperatorSymbol) -> PropertyVerdict {
    let minors = a.symbol_poly().maximal_row_minors();
    let mut arguments = Vec::new();
    for fixed_axis in [1usize, 0] {
        let g = minors
            .iter()
            .map(|m| UniPoly::dehomogenize(m, fixed_axis))
            .fold(UniPoly::zero(), |acc, p| acc.gcd(&p));
        let root = if g.is_zero() {
            // every minor vanishes identically on this chart
            Some(RootCertificate {
                lo: Rational::zero(),
                hi: Rational::zero(),
                exact: Some(Rational::zero()),
            })
        } else {
            g.isolate_root(64)
        };
        if let Some(root) = root {
            let verdict = match &root.exact {
                Some(t) => {
                    let mut xi = vec![Rational::one(); 2];
                    xi[1 - fixed_axis] = t.clone();
                    let kernel = a
                        .symbol_at(&xi)
                        .expect("n = 2")
                        .nullspace()
                        .into_iter()
                        .next()
                        .unwrap_or_default();
                    Verdict::Fails(Witness::Frequency { xi, kernel })
                }
                None => Verdict::Fails(Witness::Root { fixed_axis, root }),
            };
            return PropertyVerdict {
                property: Property::Elliptic,
                verdict,
                samples: Vec::new(),
                notes: format!("minor gcd on chart xi{} = 1: {:?}", fixed_axis + 1, g.coeffs()),
            };
        }
        arguments.push(format!(
            "gcd of {} maximal minors on chart xi{}=1 has degree {} and no real root (Sturm count)",
            minors.len(),
            fixed_axis + 1,
            g.degree().unwrap_or(0)
        ));
    }
    PropertyVerdict {
        property: Property::Elliptic,
        verdict: Verdict::HoldsCertified {
            argument: arguments.join("; "),
        },
        samples: Vec::new(),
        notes: String::new(),
    }
}

pub fn check_canceling(a: &OperatorSymbol, budget: usize) -> PropertyVerdict {
    check_canceling_seeded(a, budget, DEFAULT_SEED)
}

/// Intersects `Image A(ξ_j)` along the frequency sequence.
pub fn check_canceling_seeded(a: &OperatorSymbol, budget: usize, seed: u64) -> PropertyVerdict {
    let seq = frequency_sequence(a.n, budget.max(a.n + 1), seed);
    let mut current: Option<Vec<Vec<Rational>>> = None;
    let mut stable = 0;
    let mut used = Vec::new();
    for xi in seq {
        let image = a.symbol_at(&xi).expect("sample has dimension n").column_space();
        used.push(xi);
        let next = match &current {
            None => image,
            Some(c) => intersect(a.dim_e, c, &image),
        };
        if next.is_empty() {
            return PropertyVerdict {
                property: Property::Canceling,
                verdict: Verdict::HoldsCertified {
                    argument: format!(
                        "images at the {} listed frequencies intersect in {{0}}",
                        used.len()
                    ),
                },
                samples: used,
                notes: String::new(),
            };
        }
        if current.as_ref().is_some_and(|c| c.len() == next.len()) {
            stable += 1;
        } else {
            stable = 0;
        }
        current = Some(next);
        if stable >= 3 {
            break;
        }
    }
    PropertyVerdict {
        property: Property::Canceling,
        verdict: Verdict::Fails(Witness::Subspace(current.unwrap_or_default())),
        samples: used,
        notes: "witness validity certified only on sampled frequencies".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;
    use proptest::prelude::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    fn dsym() -> OperatorSymbol {
        OperatorSymbol::new(
            2,
            1,
            2,
            3,
            [
                (mi(&[1, 0]), QMatrix::from_i64(&[&[1, 0], &[0, 1], &[0, 0]])),
                (mi(&[0, 1]), QMatrix::from_i64(&[&[0, 0], &[1, 0], &[0, 1]])),
            ],
        )
        .unwrap()
    }

    fn dsym_l() -> OperatorSymbol {
        OperatorSymbol::new(
            2,
            2,
            3,
            1,
            [
                (mi(&[0, 2]), QMatrix::from_i64(&[&[1, 0, 0]])),
                (mi(&[1, 1]), QMatrix::from_i64(&[&[0, -1, 0]])),
                (mi(&[2, 0]), QMatrix::from_i64(&[&[0, 0, 1]])),
            ],
        )
        .unwrap()
    }

    fn grad3() -> OperatorSymbol {
        OperatorSymbol::new(
            3,
            1,
            1,
            3,
            (0..3).map(|i| {
                let mut m = QMatrix::zeros(3, 1);
                m.set(i, 0, qi(1));
                (MultiIndex::unit(3, i), m)
            }),
        )
        .unwrap()
    }

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| qi(x)).collect()
    }

    #[test]
    fn symbol_examples() {
        let a = dsym();
        assert_eq!(
            a.symbol_at(&v(&[1, 0])).unwrap(),
            QMatrix::from_i64(&[&[1, 0], &[0, 1], &[0, 0]])
        );
        assert!(a.symbol_at(&v(&[0, 0])).unwrap().is_zero());
        assert_eq!(
            dsym_l().symbol_at(&v(&[1, 1])).unwrap(),
            QMatrix::from_i64(&[&[1, -1, 1]])
        );
        assert!(a.symbol_at(&v(&[1, 0, 0])).is_err());
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(
            OperatorSymbol::new(2, 1, 1, 1, [(mi(&[2, 0]), QMatrix::from_i64(&[&[1]]))]),
            Err(OpsymError::WrongOrder { .. })
        ));
        assert!(matches!(
            OperatorSymbol::new(2, 1, 1, 1, [(mi(&[1, 0]), QMatrix::from_i64(&[&[0]]))]),
            Err(OpsymError::ZeroOperator)
        ));
    }

    #[test]
    fn composition_examples() {
        let c = compose_symbols(&dsym_l(), &dsym()).unwrap();
        assert_eq!((c.rows(), c.cols()), (1, 2));
        assert!(c.is_zero());
        // ∂₁·Id composed with A gives ξ₁ A(ξ)
        let d1 = OperatorSymbol::new(2, 1, 3, 3, [(mi(&[1, 0]), QMatrix::identity(3))]).unwrap();
        let c = compose_symbols(&d1, &dsym()).unwrap();
        let xi1 = MultiPoly::var(2, 0);
        let expected: Vec<Vec<MultiPoly>> = dsym()
            .symbol_poly()
            .entries()
            .iter()
            .map(|r| r.iter().map(|p| p * &xi1).collect())
            .collect();
        assert_eq!(c.entries(), &expected[..]);
        assert!(compose_symbols(&dsym(), &dsym()).is_err());
    }

    #[test]
    fn cocanceling_examples() {
        assert!(check_cocanceling(&dsym_l()).is_certified());
        let l = OperatorSymbol::new(2, 1, 2, 1, [(mi(&[1, 0]), QMatrix::from_i64(&[&[1, 0]]))])
            .unwrap();
        match check_cocanceling(&l).verdict {
            Verdict::Fails(Witness::Vector(e)) => {
                assert!(e[0].is_zero() && !e[1].is_zero());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ellipticity_examples() {
        assert!(check_injectively_elliptic(&dsym(), DEFAULT_BUDGET).is_certified());
        let d1 = OperatorSymbol::new(2, 1, 1, 1, [(mi(&[1, 0]), QMatrix::from_i64(&[&[1]]))])
            .unwrap();
        match check_injectively_elliptic(&d1, DEFAULT_BUDGET).verdict {
            Verdict::Fails(Witness::Frequency { xi, .. }) => {
                assert!(xi[0].is_zero() && !xi[1].is_zero());
            }
            other => panic!("{other:?}"),
        }
        let g = check_injectively_elliptic(&grad3(), 1);
        assert_eq!(g.verdict, Verdict::HoldsSampled { samples: 1 });
        // ξ₁² - 2ξ₂² vanishes on an irrational direction
        let irr = OperatorSymbol::new(
            2,
            2,
            1,
            1,
            [
                (mi(&[2, 0]), QMatrix::from_i64(&[&[1]])),
                (mi(&[0, 2]), QMatrix::from_i64(&[&[-2]])),
            ],
        )
        .unwrap();
        assert!(matches!(
            check_injectively_elliptic(&irr, DEFAULT_BUDGET).verdict,
            Verdict::Fails(Witness::Root { .. })
        ));
    }

    #[test]
    fn canceling_examples() {
        let c = check_canceling(&dsym(), DEFAULT_BUDGET);
        assert!(c.is_certified());
        assert_eq!(c.samples.len(), 3);
        let lap = OperatorSymbol::new(
            2,
            2,
            1,
            1,
            [
                (mi(&[2, 0]), QMatrix::from_i64(&[&[1]])),
                (mi(&[0, 2]), QMatrix::from_i64(&[&[1]])),
            ],
        )
        .unwrap();
        let c = check_canceling(&lap, DEFAULT_BUDGET);
        match &c.verdict {
            Verdict::Fails(Witness::Subspace(b)) => assert_eq!(b.len(), 1),
            other => panic!("{other:?}"),
        }
        assert!(c.notes.contains("sampled"));
        assert!(check_canceling(&grad3(), DEFAULT_BUDGET).is_certified());
    }

    #[test]
    fn certified_canceling_rechecks_by_rank() {
        let c = check_canceling(&dsym(), DEFAULT_BUDGET);
        // independent check: dim ∩ images = 0 via the rank of stacked complements
        let mut cur: Vec<Vec<Rational>> = Vec::new();
        for (j, xi) in c.samples.iter().enumerate() {
            let img = dsym().symbol_at(xi).unwrap().column_space();
            cur = if j == 0 { img } else { intersect(3, &cur, &img) };
        }
        assert!(cur.is_empty());
    }

    #[test]
    fn frequency_sequence_is_deterministic() {
        let a = frequency_sequence(3, 10, 7);
        assert_eq!(a, frequency_sequence(3, 10, 7));
        assert_eq!(a[0], v(&[1, 0, 0]));
        assert_eq!(a[3], v(&[1, 1, 1]));
        assert!(a.iter().all(|x| x.iter().any(|c| !c.is_zero())));
    }

    fn arb_rat() -> impl Strategy<Value = Rational> {
        (-6i64..=6, 1i64..=4).prop_map(|(a, b)| q(a, b))
    }

    proptest! {
        #[test]
        fn symbol_is_homogeneous(t in arb_rat(), x in arb_rat(), y in arb_rat()) {
            for a in [dsym(), dsym_l()] {
                let xi = vec![x.clone(), y.clone()];
                let scaled: Vec<Rational> = xi.iter().map(|c| c * &t).collect();
                let mut tk = Rational::one();
                for _ in 0..a.order() { tk *= &t; }
                prop_assert_eq!(a.symbol_at(&scaled).unwrap(), a.symbol_at(&xi).unwrap().scale(&tk));
            }
        }

        #[test]
        fn composition_matches_pointwise_product(seed in any::<u64>()) {
            let c = compose_symbols(&dsym_l(), &dsym()).unwrap();
            let d1 = OperatorSymbol::new(2, 1, 3, 2, [
                (mi(&[1, 0]), QMatrix::from_i64(&[&[1, 0, 2], &[0, -1, 1]])),
                (mi(&[0, 1]), QMatrix::from_i64(&[&[0, 3, 0], &[1, 1, 1]])),
            ]).unwrap();
            let c2 = compose_symbols(&d1, &dsym()).unwrap();
            for xi in frequency_sequence(2, 20, seed) {
                let l = dsym_l().symbol_at(&xi).unwrap();
                let a = dsym().symbol_at(&xi).unwrap();
                prop_assert_eq!(c.eval(&xi), l.mul(&a));
                prop_assert_eq!(c2.eval(&xi), d1.symbol_at(&xi).unwrap().mul(&a));
            }
        }

        #[test]
        fn cocanceling_invariant_under_change_of_basis(
            a in -3i64..=3, b in -3i64..=3, c in -3i64..=3, d in -3i64..=3,
        ) {
            prop_assume!(a * d - b * c != 0);
            let l = OperatorSymbol::new(2, 1, 2, 2, [
                (mi(&[1, 0]), QMatrix::from_i64(&[&[1, 0], &[0, 0]])),
                (mi(&[0, 1]), QMatrix::from_i64(&[&[0, 0], &[2, 0]])),
            ]).unwrap();
            let m = QMatrix::from_i64(&[&[a, b], &[c, d]]);
            let lm = l.left_mul(&m).unwrap();
            prop_assert_eq!(check_cocanceling(&l).holds(), check_cocanceling(&lm).holds());
            prop_assert_eq!(check_cocanceling(&dsym_l()).holds(),
                check_cocanceling(&dsym_l().left_mul(&QMatrix::from_i64(&[&[a + 7]])).unwrap()).holds());
        }
    }
}
