use num_traits::{One, Signed, Zero};

use super::MultiPoly;
use crate::rational::{qi, sign, Rational};

/// Dense univariate polynomial, `coeffs[i]` multiplying `t^i`; no trailing
/// zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<Rational>,
}

/// Location of one real root: an exact rational root when bisection hits it,
/// otherwise an isolating interval `(lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootCertificate {
    pub lo: Rational,
    pub hi: Rational,
    pub exact: Option<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    /// Restricts a bivariate form to the line `x_{fixed} = 1`, keeping the
    /// other coordinate as the variable.
    pub fn dehomogenize(form: &MultiPoly, fixed_axis: usize) -> Self {
        assert_eq!(form.n(), 2, "binary forms only");
        let free = 1 - fixed_axis;
        let mut coeffs: Vec<Rational> = Vec::new();
        for (idx, c) in form.terms() {
            let e = idx.get(free) as usize;
            if coeffs.len() <= e {
                coeffs.resize(e + 1, Rational::zero());
            }
            coeffs[e] += c;
        }
        UniPoly::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * qi(i as i64))
                .collect(),
        )
    }

    pub fn monic(&self) -> UniPoly {
        match self.leading() {
            None => self.clone(),
            Some(lc) => {
                let lc = lc.clone();
                UniPoly::new(self.coeffs.iter().map(|c| c / &lc).collect())
            }
        }
    }

    /// Remainder of Euclidean division by a nonzero `d`.
    pub fn rem(&self, d: &UniPoly) -> UniPoly {
        let dd = d.degree().expect("division by zero polynomial");
        let dl = d.leading().unwrap().clone();
        let mut r = self.coeffs.clone();
        while r.len() > dd && !r.is_empty() {
            let shift = r.len() - 1 - dd;
            let f = r.last().unwrap() / &dl;
            for (i, c) in d.coeffs.iter().enumerate() {
                r[shift + i] -= &f * c;
            }
            r.pop();
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
        }
        UniPoly::new(r)
    }

    /// Monic GCD (zero only if both inputs are zero).
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Sturm chain `p, p', -rem(p, p'), …`.
    pub fn sturm_chain(&self) -> Vec<UniPoly> {
        let mut chain = vec![self.clone()];
        if self.degree().unwrap_or(0) == 0 {
            return chain;
        }
        chain.push(self.derivative());
        loop {
            let len = chain.len();
            let r = chain[len - 2].rem(&chain[len - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(UniPoly::new(r.coeffs.iter().map(|c| -c).collect()));
        }
        chain
    }

    fn variations(signs: impl Iterator<Item = i32>) -> usize {
        let mut count = 0;
        let mut last = 0;
        for s in signs.filter(|&s| s != 0) {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    fn variations_at(chain: &[UniPoly], t: &Rational) -> usize {
        Self::variations(chain.iter().map(|p| sign(&p.eval(t))))
    }

    fn variations_at_infinity(chain: &[UniPoly], positive: bool) -> usize {
        Self::variations(chain.iter().map(|p| {
            let lc = p.leading().map(sign).unwrap_or(0);
            let deg = p.degree().unwrap_or(0);
            if positive || deg % 2 == 0 {
                lc
            } else {
                -lc
            }
        }))
    }

    /// Number of distinct real roots (sign-variation count of the Sturm
    /// chain between `-∞` and `+∞`).
    pub fn count_real_roots(&self) -> usize {
        if self.is_zero() {
            panic!("zero polynomial has infinitely many roots");
        }
        let chain = self.sturm_chain();
        Self::variations_at_infinity(&chain, false) - Self::variations_at_infinity(&chain, true)
    }

    /// Distinct real roots in `(lo, hi]`.
    pub fn count_roots_in(&self, lo: &Rational, hi: &Rational) -> usize {
        let chain = self.sturm_chain();
        Self::variations_at(&chain, lo) - Self::variations_at(&chain, hi)
    }

    /// Cauchy bound: every root lies in `(-B, B)`.
    pub fn cauchy_bound(&self) -> Rational {
        let lc = self.leading().expect("nonzero polynomial").abs();
        let m = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| c.abs() / &lc)
            .max()
            .unwrap_or_else(Rational::zero);
        m + Rational::one()
    }

    /// Isolates one real root by Sturm bisection, if any exists.
    pub fn isolate_root(&self, iterations: usize) -> Option<RootCertificate> {
        if self.is_zero() || self.count_real_roots() == 0 {
            return None;
        }
        let b = self.cauchy_bound();
        let mut lo = -b.clone();
        let mut hi = b;
        let two = qi(2);
        for _ in 0..iterations {
            let mid = (&lo + &hi) / &two;
            if self.eval(&mid).is_zero() {
                return Some(RootCertificate {
                    lo: mid.clone(),
                    hi: mid.clone(),
                    exact: Some(mid),
                });
            }
            if self.count_roots_in(&lo, &mid) > 0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let exact = self.eval(&hi).is_zero().then(|| hi.clone());
        Some(RootCertificate { lo, hi, exact })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn up(c: &[i64]) -> UniPoly {
        UniPoly::new(c.iter().map(|&v| qi(v)).collect())
    }

    #[test]
    fn counts_real_roots() {
        assert_eq!(up(&[-2, 0, 1]).count_real_roots(), 2); // t² - 2
        assert_eq!(up(&[1, 0, 1]).count_real_roots(), 0); // t² + 1
        assert_eq!(up(&[0, 0, 1]).count_real_roots(), 1); // t²
        assert_eq!(up(&[5]).count_real_roots(), 0);
        assert_eq!(up(&[-6, 11, -6, 1]).count_real_roots(), 3);
    }

    #[test]
    fn gcd_of_shared_factor() {
        // (t-1)(t+2) and (t-1)(t²+1)
        let a = up(&[-2, 1, 1]);
        let b = up(&[-1, 1, -1, 1]);
        assert_eq!(a.gcd(&b), up(&[-1, 1]));
        assert_eq!(up(&[1]).gcd(&up(&[0, 1])), up(&[1]));
    }

    #[test]
    fn isolates_roots() {
        let cert = up(&[0, 1]).isolate_root(64).unwrap();
        assert_eq!(cert.exact, Some(qi(0)));
        let irr = up(&[-2, 0, 1]).isolate_root(40).unwrap();
        assert!(irr.exact.is_none());
        let lo = crate::rational::to_f64(&irr.lo);
        let hi = crate::rational::to_f64(&irr.hi);
        assert!(lo < hi && (lo.abs() - 2f64.sqrt()).abs() < 1e-9);
        assert!(up(&[1, 0, 1]).isolate_root(10).is_none());
    }

    #[test]
    fn dehomogenization() {
        use crate::poly::{MultiIndex, MultiPoly};
        // ξ1² + 3 ξ1 ξ2
        let f = MultiPoly::from_terms(
            2,
            [
                (MultiIndex::new(vec![2, 0]), qi(1)),
                (MultiIndex::new(vec![1, 1]), qi(3)),
            ],
        );
        assert_eq!(UniPoly::dehomogenize(&f, 1), up(&[0, 3, 1]));
        assert_eq!(UniPoly::dehomogenize(&f, 0), up(&[1, 3]));
        assert_eq!(up(&[1, 2]).eval(&q(1, 2)), qi(2));
    }
}
