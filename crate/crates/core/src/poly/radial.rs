use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{MultiIndex, MultiPoly};
use crate::rational::{qi, to_f64, Rational};

/// `log_coeff · log|x| + p(x) · |x|^{-s}` on `ℝⁿ \ {0}`.
///
/// Every derivative of `log|x|` (n = 2) or `|x|^{-1}` (n = 3) stays in this
/// form: `∂_i [p |x|^{-s}] = [(∂_i p)|x|² − s x_i p] |x|^{-(s+2)}`.
/// A nonzero `p` fixes the parity of `s`; a log term forces it even.
#[derive(Debug, Clone)]
pub struct LogRadialExpr {
    n: usize,
    log_coeff: Rational,
    p: MultiPoly,
    s: u32,
}

impl LogRadialExpr {
    pub fn new(log_coeff: Rational, p: MultiPoly, s: u32) -> Self {
        let n = p.n();
        if !log_coeff.is_zero() {
            assert_eq!(n, 2, "log|x| only appears for n = 2");
            assert!(p.is_zero() || s.is_multiple_of(2), "log term needs an even power");
        }
        let mut e = LogRadialExpr {
            n,
            log_coeff,
            p,
            s,
        };
        if e.p.is_zero() {
            e.s = 0;
        }
        e
    }

    /// `log|x|` on ℝ².
    pub fn log_norm() -> Self {
        LogRadialExpr::new(Rational::one(), MultiPoly::zero(2), 0)
    }

    /// `|x|^{-1}` on ℝⁿ.
    pub fn inverse_norm(n: usize) -> Self {
        LogRadialExpr::new(Rational::zero(), MultiPoly::one(n), 1)
    }

    pub fn zero(n: usize) -> Self {
        LogRadialExpr::new(Rational::zero(), MultiPoly::zero(n), 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_coeff(&self) -> &Rational {
        &self.log_coeff
    }

    pub fn numerator(&self) -> &MultiPoly {
        &self.p
    }

    pub fn power(&self) -> u32 {
        self.s
    }

    pub fn is_zero(&self) -> bool {
        self.log_coeff.is_zero() && self.p.is_zero()
    }

    /// Numerator lifted to `|x|^{-target}`; `target >= s` with equal parity.
    fn lifted(&self, target: u32) -> MultiPoly {
        if self.p.is_zero() {
            return self.p.clone();
        }
        assert!(target >= self.s && (target - self.s).is_multiple_of(2), "parity mismatch");
        let k = (target - self.s) / 2;
        &self.p * &MultiPoly::norm_sq(self.n).pow(k)
    }

    fn common_power(&self, other: &LogRadialExpr) -> u32 {
        match (self.p.is_zero(), other.p.is_zero()) {
            (true, true) => 0,
            (false, true) => self.s,
            (true, false) => other.s,
            (false, false) => self.s.max(other.s),
        }
    }

    pub fn add(&self, other: &LogRadialExpr) -> LogRadialExpr {
        assert_eq!(self.n, other.n);
        let s = self.common_power(other);
        LogRadialExpr::new(
            &self.log_coeff + &other.log_coeff,
            &self.lifted(s) + &other.lifted(s),
            s,
        )
    }

    pub fn scale(&self, c: &Rational) -> LogRadialExpr {
        LogRadialExpr::new(&self.log_coeff * c, self.p.scale(c), self.s)
    }

    /// Exact partial derivative along `axis`.
    pub fn diff(&self, axis: usize) -> LogRadialExpr {
        let n = self.n;
        let x_i = MultiPoly::var(n, axis);
        let mut out = LogRadialExpr::zero(n);
        if !self.p.is_zero() {
            let r2 = MultiPoly::norm_sq(n);
            let num = &(&self.p.diff(axis) * &r2) - &(&x_i * &self.p).scale(&qi(self.s as i64));
            out = LogRadialExpr::new(Rational::zero(), num, self.s + 2);
        }
        if !self.log_coeff.is_zero() {
            let from_log = LogRadialExpr::new(Rational::zero(), x_i.scale(&self.log_coeff), 2);
            out = out.add(&from_log);
        }
        out
    }

    pub fn diff_multi(&self, beta: &MultiIndex) -> LogRadialExpr {
        let mut e = self.clone();
        for (axis, &b) in beta.entries().iter().enumerate() {
            for _ in 0..b {
                e = e.diff(axis);
            }
        }
        e
    }

    /// Divides out `|x|²` from the numerator while it divides exactly.
    pub fn canonical(&self) -> LogRadialExpr {
        let r2 = MultiPoly::norm_sq(self.n);
        let mut p = self.p.clone();
        let mut s = self.s;
        while s >= 2 && !p.is_zero() {
            match p.div_exact(&r2) {
                Some(d) => {
                    p = d;
                    s -= 2;
                }
                None => break,
            }
        }
        LogRadialExpr::new(self.log_coeff.clone(), p, s)
    }

    /// Homogeneity degree of the rational part, if it has one.
    pub fn degree(&self) -> Option<i64> {
        if !self.log_coeff.is_zero() {
            return None;
        }
        match self.p.homogeneous_degree().ok()? {
            super::Homogeneity::Homogeneous(d) => Some(d as i64 - self.s as i64),
            super::Homogeneity::Mixed(..) => None,
        }
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Option<ExactValue> {
        assert_eq!(x.len(), self.n);
        let norm_sq: Rational = x.iter().map(|v| v * v).sum();
        if norm_sq.is_zero() {
            return None;
        }
        let mut rational = self.p.eval(x);
        for _ in 0..self.s / 2 {
            rational /= &norm_sq;
        }
        Some(ExactValue {
            log_coeff: self.log_coeff.clone(),
            norm_sq,
            rational,
            odd: self.s % 2 == 1,
        })
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let mut v = 0.0;
        if !self.log_coeff.is_zero() {
            v += to_f64(&self.log_coeff) * 0.5 * r2.ln();
        }
        if !self.p.is_zero() {
            v += self.p.eval_f64(x) * r2.powf(-(self.s as f64) / 2.0);
        }
        v
    }
}

impl PartialEq for LogRadialExpr {
    /// Cross-multiplies to a common power before comparing numerators.
    fn eq(&self, other: &Self) -> bool {
        if self.n != other.n || self.log_coeff != other.log_coeff {
            return false;
        }
        match (self.p.is_zero(), other.p.is_zero()) {
            (true, true) => true,
            (true, false) | (false, true) => false,
            (false, false) => {
                if self.s % 2 != other.s % 2 {
                    return false;
                }
                let s = self.s.max(other.s);
                self.lifted(s) == other.lifted(s)
            }
        }
    }
}

impl fmt::Display for LogRadialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.log_coeff.is_zero() {
            parts.push(format!("{}*log|x|", crate::rational::fmt_rational(&self.log_coeff)));
        }
        if !self.p.is_zero() {
            parts.push(format!("({})*|x|^-{}", self.p, self.s));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Exact value `log_coeff·log|x| + rational · |x|^{-1 if odd}` at a point
/// with `|x|² = norm_sq`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactValue {
    pub log_coeff: Rational,
    pub norm_sq: Rational,
    pub rational: Rational,
    pub odd: bool,
}

impl ExactValue {
    pub fn to_f64(&self) -> f64 {
        let r2 = to_f64(&self.norm_sq);
        let mut v = to_f64(&self.rational);
        if self.odd {
            v /= r2.sqrt();
        }
        if !self.log_coeff.is_zero() {
            v += to_f64(&self.log_coeff) * 0.5 * r2.ln();
        }
        v
    }

    /// Exact test of `other == factor · self` for log-free values, squaring
    /// away the `|x|^{-1}` radicals.
    pub fn is_multiple(&self, other: &ExactValue, factor: &Rational) -> bool {
        if !self.log_coeff.is_zero() || !other.log_coeff.is_zero() {
            return false;
        }
        let lhs = &self.rational * factor;
        let rhs = &other.rational;
        if lhs.is_zero() || rhs.is_zero() {
            return lhs.is_zero() && rhs.is_zero();
        }
        if lhs.is_positive() != rhs.is_positive() || self.odd != other.odd {
            return false;
        }
        if !self.odd {
            return &lhs == rhs;
        }
        // lhs / sqrt(a) == rhs / sqrt(b)  <=>  lhs² b == rhs² a  (same sign)
        &lhs * &lhs * &other.norm_sq == rhs * rhs * &self.norm_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn mono(e: &[u32], c: Rational) -> MultiPoly {
        MultiPoly::monomial(MultiIndex::new(e.to_vec()), c)
    }

    #[test]
    fn derivative_of_log() {
        let d = LogRadialExpr::log_norm().diff(0);
        assert_eq!(d, LogRadialExpr::new(qi(0), MultiPoly::var(2, 0), 2));
    }

    #[test]
    fn second_derivative_of_log() {
        let d = LogRadialExpr::log_norm().diff(0).diff(0);
        let expected = LogRadialExpr::new(
            qi(0),
            &mono(&[0, 2], qi(1)) - &mono(&[2, 0], qi(1)),
            4,
        );
        assert_eq!(d, expected);
    }

    #[test]
    fn derivative_of_inverse_norm() {
        let d = LogRadialExpr::inverse_norm(3).diff(2);
        assert_eq!(d, LogRadialExpr::new(qi(0), mono(&[0, 0, 1], qi(-1)), 3));
    }

    #[test]
    fn equality_across_representations() {
        let a = LogRadialExpr::new(qi(0), MultiPoly::var(2, 0), 2);
        let b = LogRadialExpr::new(qi(0), &MultiPoly::var(2, 0) * &MultiPoly::norm_sq(2), 4);
        assert_eq!(a, b);
        assert_eq!(b.canonical().power(), 2);
        assert_ne!(a, LogRadialExpr::new(qi(0), MultiPoly::var(2, 1), 2));
    }

    #[test]
    fn laplacian_of_log_vanishes() {
        let l = LogRadialExpr::log_norm();
        let lap = l.diff(0).diff(0).add(&l.diff(1).diff(1));
        assert!(lap.is_zero());
        let l3 = LogRadialExpr::inverse_norm(3);
        let lap3 = (0..3).fold(LogRadialExpr::zero(3), |acc, i| acc.add(&l3.diff(i).diff(i)));
        assert!(lap3.is_zero());
    }

    #[test]
    fn exact_evaluation() {
        let d = LogRadialExpr::log_norm().diff(0).diff(0);
        let v = d.eval_exact(&[qi(0), qi(1)]).unwrap();
        assert_eq!(v.rational, qi(1));
        assert!(!v.odd);
        let d3 = LogRadialExpr::inverse_norm(3).diff(0);
        let v3 = d3.eval_exact(&[qi(1), qi(0), qi(0)]).unwrap();
        assert_eq!(v3.to_f64(), -1.0);
        assert!(d3.eval_exact(&[qi(0), qi(0), qi(0)]).is_none());
    }

    #[test]
    fn radical_multiples() {
        let d3 = LogRadialExpr::inverse_norm(3).diff(1);
        let x = [qi(1), q(2, 3), qi(-2)];
        let x2: Vec<Rational> = x.iter().map(|v| v * qi(2)).collect();
        let a = d3.eval_exact(&x).unwrap();
        let b = d3.eval_exact(&x2).unwrap();
        // degree -2
        assert!(a.is_multiple(&b, &q(1, 4)));
        assert!(!a.is_multiple(&b, &q(1, 2)));
    }

    fn arb_expr2() -> impl Strategy<Value = LogRadialExpr> {
        (
            -3i64..4,
            prop::collection::vec((prop::collection::vec(0u32..3, 2), -4i64..5), 0..4),
            0u32..3,
        )
            .prop_map(|(c, terms, half_s)| {
                let p = MultiPoly::from_terms(
                    2,
                    terms.into_iter().map(|(e, a)| (MultiIndex::new(e), qi(a))),
                );
                LogRadialExpr::new(qi(c), p, 2 * half_s)
            })
    }

    proptest! {
        #[test]
        fn mixed_partials_commute(e in arb_expr2(), i in 0usize..2, j in 0usize..2) {
            prop_assert_eq!(e.diff(i).diff(j), e.diff(j).diff(i));
        }

        #[test]
        fn derivative_matches_central_difference(
            e in arb_expr2(),
            axis in 0usize..2,
            a in -20i64..21, b in -20i64..21,
        ) {
            prop_assume!(a != 0 || b != 0);
            let x = [a as f64 / 7.0 + 0.05, b as f64 / 5.0 - 0.03];
            let h = 1e-4 * (x[0] * x[0] + x[1] * x[1]).sqrt();
            let mut xp = x; xp[axis] += h;
            let mut xm = x; xm[axis] -= h;
            let fd = (e.eval_f64(&xp) - e.eval_f64(&xm)) / (2.0 * h);
            let exact = e.diff(axis).eval_f64(&x);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let scale = exact.abs() + (e.eval_f64(&x).abs() + to_f64(e.log_coeff()).abs()) / r + 1e-12;
            prop_assert!((fd - exact).abs() / scale < 1e-6, "fd {} exact {}", fd, exact);
        }

        #[test]
        fn canonical_form_is_equal(e in arb_expr2()) {
            let lifted = LogRadialExpr::new(
                e.log_coeff().clone(),
                &e.numerator().clone() * &MultiPoly::norm_sq(2),
                e.power() + 2,
            );
            prop_assert_eq!(&lifted.canonical(), &e);
        }
    }
}
