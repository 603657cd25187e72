//! Exact multivariate polynomials over the rationals.
//!
//! [`MultiPoly`] is a sparse map from exponent vectors to nonzero rational
//! coefficients. [`LogRadialExpr`] extends it to the closed forms
//! `c log|x| + p(x) |x|^{-s}` that derivatives of the fundamental solution
//! take, and [`UniPoly`] carries the univariate work needed for real-root
//! counting of binary forms.

mod radial;
mod univariate;

pub use radial::{ExactValue, LogRadialExpr};
pub use univariate::{RootCertificate, UniPoly};

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::{fmt_rational, qi, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("axis {axis} out of range for dimension {n}")]
    BadAxis { axis: usize, n: usize },
    #[error("the zero polynomial has no degree")]
    Zero,
}

/// Exponent vector `(α_1, …, α_n)`; also used for derivative multi-indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        assert!(!entries.is_empty(), "multi-index needs n >= 1");
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex::new(vec![0; n])
    }

    /// The unit index `e_axis` (0-based axis).
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut e = vec![0; n];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other`, or `None` unless `other <= self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn with_entry(&self, axis: usize, value: u32) -> MultiIndex {
        let mut e = self.0.clone();
        e[axis] = value;
        MultiIndex(e)
    }

    pub fn bumped(&self, axis: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[axis] += 1;
        MultiIndex(e)
    }

    /// `α!` as an integer.
    pub fn factorial(&self) -> num_bigint::BigInt {
        self.0
            .iter()
            .fold(num_bigint::BigInt::one(), |acc, &a| acc * crate::rational::factorial(a))
    }

    /// All indices of dimension `n` and order `k`, in descending lexicographic
    /// order (`(k,0,…)` first).
    pub fn all_of_order(n: usize, k: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            let n = cur.len();
            if pos == n - 1 {
                cur[pos] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for v in (0..=left).rev() {
                cur[pos] = v;
                rec(pos + 1, left - v, cur, out);
            }
        }
        rec(0, k, &mut cur, &mut out);
        out
    }

    pub fn pow_f64(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Result of [`MultiPoly::homogeneous_degree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Homogeneity {
    Homogeneous(u32),
    /// Two terms of different order.
    Mixed(MultiIndex, MultiIndex),
}

/// Sparse polynomial in `n` variables with exact rational coefficients.
/// No zero coefficient is ever stored, so equality is term-map equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    n: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        MultiPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        Self::monomial(MultiIndex::zeros(n), c)
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Rational::one())
    }

    /// The coordinate `x_axis` (0-based).
    pub fn var(n: usize, axis: usize) -> Self {
        Self::monomial(MultiIndex::unit(n, axis), Rational::one())
    }

    pub fn monomial(index: MultiIndex, c: Rational) -> Self {
        let mut p = MultiPoly::zero(index.dim());
        p.add_term(index, c);
        p
    }

    /// Builds from `(exponents, coefficient)` pairs, merging duplicates.
    pub fn from_terms<I>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, Rational)>,
    {
        let mut p = MultiPoly::zero(n);
        for (idx, c) in terms {
            assert_eq!(idx.dim(), n, "exponent vector of wrong dimension");
            p.add_term(idx, c);
        }
        p
    }

    /// `Σ_i x_i²`.
    pub fn norm_sq(n: usize) -> Self {
        Self::from_terms(
            n,
            (0..n).map(|i| (MultiIndex::zeros(n).with_entry(i, 2), Rational::one())),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Rational> {
        &self.terms
    }

    pub fn coeff(&self, index: &MultiIndex) -> Rational {
        self.terms.get(index).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, index: MultiIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(index);
        match slot {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_dim(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.n != other.n {
            return Err(PolyError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_term(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_term(idx.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_dim(other)?;
        let mut out = MultiPoly::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.n);
        }
        MultiPoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(i, v)| (i.clone(), v * c))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        (0..e).fold(MultiPoly::one(self.n), |acc, _| &acc * self)
    }

    /// Exact partial derivative along `axis` (0-based).
    pub fn diff(&self, axis: usize) -> MultiPoly {
        assert!(axis < self.n, "axis {axis} out of range for n = {}", self.n);
        let mut out = MultiPoly::zero(self.n);
        for (idx, c) in &self.terms {
            let a = idx.get(axis);
            if a > 0 {
                out.add_term(idx.with_entry(axis, a - 1), c * qi(a as i64));
            }
        }
        out
    }

    pub fn checked_diff(&self, axis: usize) -> Result<MultiPoly, PolyError> {
        if axis >= self.n {
            return Err(PolyError::BadAxis { axis, n: self.n });
        }
        Ok(self.diff(axis))
    }

    /// `∂^α p`.
    pub fn diff_multi(&self, alpha: &MultiIndex) -> MultiPoly {
        let mut out = MultiPoly::zero(self.n);
        for (idx, c) in &self.terms {
            if let Some(rest) = idx.checked_sub(alpha) {
                // falling factorial a!/(a-α)! per axis
                let mut f = c.clone();
                for (axis, &al) in alpha.entries().iter().enumerate() {
                    let a = idx.get(axis);
                    for j in 0..al {
                        f *= qi((a - j) as i64);
                    }
                }
                out.add_term(rest, f);
            }
        }
        out
    }

    /// Degree if every term has the same order.
    pub fn homogeneous_degree(&self) -> Result<Homogeneity, PolyError> {
        let mut iter = self.terms.keys();
        let first = iter.next().ok_or(PolyError::Zero)?;
        for other in iter {
            if other.order() != first.order() {
                return Ok(Homogeneity::Mixed(first.clone(), other.clone()));
            }
        }
        Ok(Homogeneity::Homogeneous(first.order()))
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|i| i.order()).max()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.n);
        let mut acc = Rational::zero();
        for (idx, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &a) in x.iter().zip(idx.entries()) {
                for _ in 0..a {
                    t *= xi;
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(idx, c)| to_f64(c) * idx.pow_f64(x))
            .sum()
    }

    /// Leading term in lexicographic order with `x_1` highest.
    fn leading(&self) -> Option<(&MultiIndex, &Rational)> {
        self.terms.iter().next_back()
    }

    /// `Some(self / d)` when `d` divides `self` exactly.
    ///
    /// Single-divisor multivariate division with the lexicographic order;
    /// the remainder is unique, so a zero remainder decides divisibility.
    pub fn div_exact(&self, d: &MultiPoly) -> Option<MultiPoly> {
        assert_eq!(self.n, d.n);
        let (dl, dc) = d.leading()?;
        let (dl, dc) = (dl.clone(), dc.clone());
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero(self.n);
        while let Some((rl, rc)) = rem.leading() {
            let shift = rl.checked_sub(&dl)?;
            let c = rc / &dc;
            let step = MultiPoly::monomial(shift, c);
            rem = &rem - &(&step * d);
            quot = &quot + &step;
        }
        Some(quot)
    }

    /// Substitutes `x_axis = value`, keeping the dimension.
    pub fn substitute(&self, axis: usize, value: &Rational) -> MultiPoly {
        let mut out = MultiPoly::zero(self.n);
        for (idx, c) in &self.terms {
            let a = idx.get(axis);
            let mut f = c.clone();
            for _ in 0..a {
                f *= value;
            }
            out.add_term(idx.with_entry(axis, 0), f);
        }
        out
    }
}

impl std::ops::Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_add(rhs).expect("polynomial dimension mismatch")
    }
}

impl std::ops::Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_sub(rhs).expect("polynomial dimension mismatch")
    }
}

impl std::ops::Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_mul(rhs).expect("polynomial dimension mismatch")
    }
}

impl std::ops::Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Rational::one())
    }
}

fn var_name(axis: usize, n: usize) -> String {
    if n <= 9 {
        format!("y{}", axis + 1)
    } else {
        format!("y{}_", axis + 1)
    }
}

/// Writes the monomial part, e.g. `y1^2*y2`; empty for the constant.
pub(crate) fn fmt_monomial(idx: &MultiIndex) -> String {
    let n = idx.dim();
    idx.entries()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(i, &a)| {
            if a == 1 {
                var_name(i, n)
            } else {
                format!("{}^{}", var_name(i, n), a)
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

impl fmt::Display for MultiPoly {
    /// Terms in descending lexicographic order, as `c*y1^a*y2^b + …`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (idx, c) in self.terms.iter().rev() {
            let mono = fmt_monomial(idx);
            let coef = fmt_rational(c);
            let body = if mono.is_empty() {
                coef
            } else {
                format!("{coef}*{mono}")
            };
            if first {
                write!(f, "{body}")?;
                first = false;
            } else {
                write!(f, " + {body}")?;
            }
        }
        Ok(())
    }
}

/// Parses the [`Display`](fmt::Display) form: `c*y1^a*y2 + c2*y3 + c3`,
/// with `c` a `p/q` rational (optional, default 1, leading `-` allowed).
pub fn parse_poly(n: usize, text: &str) -> Result<MultiPoly, String> {
    let text = text.trim();
    if text == "0" {
        return Ok(MultiPoly::zero(n));
    }
    let mut out = MultiPoly::zero(n);
    for raw in text.split('+') {
        let term = raw.trim();
        if term.is_empty() {
            return Err(format!("empty term in `{text}`"));
        }
        let mut coef = Rational::one();
        let mut idx = vec![0u32; n];
        for (k, factor) in term.split('*').map(str::trim).enumerate() {
            if let Some(var) = factor.strip_prefix('y') {
                let (v, e) = match var.split_once('^') {
                    Some((v, e)) => (v, e.parse::<u32>().map_err(|_| format!("bad exponent in `{factor}`"))?),
                    None => (var, 1),
                };
                let v = v.trim_end_matches('_');
                let axis: usize = v.parse().map_err(|_| format!("bad variable `{factor}`"))?;
                if axis == 0 || axis > n {
                    return Err(format!("variable `{factor}` out of range for n = {n}"));
                }
                idx[axis - 1] += e;
            } else if k == 0 {
                coef = crate::rational::parse_rational(factor)
                    .ok_or_else(|| format!("malformed rational `{factor}`"))?;
            } else {
                return Err(format!("unexpected factor `{factor}`"));
            }
        }
        out.add_term(MultiIndex::new(idx), coef);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn y(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i)
    }

    fn mono(e: &[u32], c: Rational) -> MultiPoly {
        MultiPoly::monomial(MultiIndex::new(e.to_vec()), c)
    }

    #[test]
    fn addition_of_halves() {
        let a = mono(&[0, 2], q(1, 2));
        let b = mono(&[2, 0], q(1, 2));
        let s = a.checked_add(&b).unwrap();
        assert_eq!(s, MultiPoly::norm_sq(2).scale(&q(1, 2)));
    }

    #[test]
    fn negation_and_product() {
        let y1y2 = &y(2, 0) * &y(2, 1);
        assert_eq!(y1y2.scale(&qi(-1)), mono(&[1, 1], qi(-1)));
        let prod = y(2, 0).checked_mul(&mono(&[0, 2], q(1, 2))).unwrap();
        assert_eq!(prod, mono(&[1, 2], q(1, 2)));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = y(2, 0).checked_add(&y(3, 0)).unwrap_err();
        assert_eq!(err, PolyError::DimensionMismatch { left: 2, right: 3 });
        assert!(y(2, 0).checked_diff(2).is_err());
    }

    #[test]
    fn derivative_examples() {
        // y2^3/6 - y1^2 y2/2
        let p = &mono(&[0, 3], q(1, 6)) - &mono(&[2, 1], q(1, 2));
        assert_eq!(p.diff(0), mono(&[1, 1], qi(-1)));
        assert_eq!(mono(&[0, 2], q(1, 2)).diff(1), y(2, 1));
        assert!(MultiPoly::constant(2, qi(5)).diff(0).is_zero());
    }

    #[test]
    fn multi_derivative_matches_repeated() {
        let p = &mono(&[3, 2], q(2, 3)) + &mono(&[1, 4], qi(5));
        let alpha = MultiIndex::new(vec![1, 2]);
        assert_eq!(p.diff_multi(&alpha), p.diff(0).diff(1).diff(1));
    }

    #[test]
    fn homogeneity() {
        let k1_first = mono(&[1, 2], q(1, 2));
        assert_eq!(
            k1_first.homogeneous_degree().unwrap(),
            Homogeneity::Homogeneous(3)
        );
        let mixed = &y(2, 0) + &mono(&[0, 2], qi(1));
        match mixed.homogeneous_degree().unwrap() {
            Homogeneity::Mixed(a, b) => {
                assert_ne!(a.order(), b.order());
            }
            h => panic!("expected mixed, got {h:?}"),
        }
        assert_eq!(
            mono(&[0, 2], q(1, 2)).homogeneous_degree().unwrap(),
            Homogeneity::Homogeneous(2)
        );
        assert_eq!(MultiPoly::zero(2).homogeneous_degree(), Err(PolyError::Zero));
    }

    #[test]
    fn exact_division_by_norm_square() {
        let r2 = MultiPoly::norm_sq(3);
        let p = &mono(&[1, 0, 1], q(3, 2)) + &mono(&[0, 0, 0], qi(-2));
        let prod = &p * &r2;
        assert_eq!(prod.div_exact(&r2), Some(p));
        assert_eq!(y(3, 0).div_exact(&r2), None);
        assert_eq!(MultiPoly::zero(3).div_exact(&r2), Some(MultiPoly::zero(3)));
    }

    #[test]
    fn display_parse_round_trip() {
        let p = &(&mono(&[1, 2], q(1, 2)) - &mono(&[0, 3], q(1, 6))) + &mono(&[0, 0], qi(4));
        let text = p.to_string();
        assert_eq!(parse_poly(2, &text).unwrap(), p);
        assert!(parse_poly(2, "y3").is_err());
        assert!(parse_poly(2, "0.5*y1").is_err());
    }

    #[test]
    fn enumerates_indices_of_given_order() {
        assert_eq!(MultiIndex::all_of_order(2, 2).len(), 3);
        assert_eq!(MultiIndex::all_of_order(3, 3).len(), 10);
        assert_eq!(MultiIndex::all_of_order(3, 2)[0], MultiIndex::new(vec![2, 0, 0]));
    }

    pub(crate) fn arb_poly(n: usize) -> impl Strategy<Value = MultiPoly> {
        prop::collection::vec(
            (prop::collection::vec(0u32..4, n), -6i64..7, 1i64..5),
            0..6,
        )
        .prop_map(move |terms| {
            MultiPoly::from_terms(
                n,
                terms
                    .into_iter()
                    .map(|(e, a, b)| (MultiIndex::new(e), q(a, b))),
            )
        })
    }

    proptest! {
        #[test]
        fn leibniz_rule(p in arb_poly(3), r in arb_poly(3), axis in 0usize..3) {
            let lhs = (&p * &r).diff(axis);
            let rhs = &(&p.diff(axis) * &r) + &(&p * &r.diff(axis));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn no_zero_coefficients_stored(p in arb_poly(2), r in arb_poly(2)) {
            let s = &(&p - &r) + &r;
            prop_assert_eq!(&s, &p);
            prop_assert!(s.terms().values().all(|c| !c.is_zero()));
        }
    }
}
