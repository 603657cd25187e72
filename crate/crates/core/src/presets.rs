//! Bundled operators and the data the identity and C6 checks run on.

use crate::greens::{greens_preset, DerivExpr, DerivMatrix, GreensMatrix};
use crate::linalg::QMatrix;
use crate::opsym::{OperatorSymbol, PolyMatrix};
use crate::poly::{parse_poly, MultiIndex, MultiPoly};
use crate::rational::{q, Rational};

/// `(∂₁u₁, ∂₂u₁ + ∂₁u₂, ∂₂u₂)`.
pub fn dsym_operator() -> OperatorSymbol {
    OperatorSymbol::new(
        2,
        1,
        2,
        3,
        [
            (unit(2, 0), QMatrix::from_i64(&[&[1, 0], &[0, 1], &[0, 0]])),
            (unit(2, 1), QMatrix::from_i64(&[&[0, 0], &[1, 0], &[0, 1]])),
        ],
    )
    .expect("valid preset")
}

/// Gradient of a scalar on ℝⁿ.
pub fn grad_operator(n: usize) -> OperatorSymbol {
    OperatorSymbol::new(
        n,
        1,
        1,
        n,
        (0..n).map(|i| {
            let mut m = QMatrix::zeros(n, 1);
            m.set(i, 0, Rational::from_integer(1.into()));
            (unit(n, i), m)
        }),
    )
    .expect("valid preset")
}

fn unit(n: usize, i: usize) -> MultiIndex {
    MultiIndex::unit(n, i)
}

fn mi(e: &[u32]) -> MultiIndex {
    MultiIndex::new(e.to_vec())
}

fn poly(n: usize, s: &str) -> MultiPoly {
    parse_poly(n, s).expect("valid preset polynomial")
}

/// Column of polynomials.
fn column(n: usize, entries: &[&str]) -> PolyMatrix {
    PolyMatrix::new(n, entries.iter().map(|s| vec![poly(n, s)]).collect())
}

fn d(beta: &[u32]) -> DerivExpr {
    DerivExpr::partial(mi(beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C6Mode {
    Strict,
    Weak,
}

impl C6Mode {
    pub fn name(self) -> &'static str {
        match self {
            C6Mode::Strict => "strict",
            C6Mode::Weak => "weak",
        }
    }

    pub fn parse(s: &str) -> Option<C6Mode> {
        match s {
            "strict" => Some(C6Mode::Strict),
            "weak" => Some(C6Mode::Weak),
            _ => None,
        }
    }
}

/// What a preset is expected to produce; test data, not solver input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Verified,
    Refuted,
    Feasible,
    Infeasible,
    /// Any exact verdict is acceptable.
    Definitive,
}

impl Expectation {
    pub fn name(self) -> &'static str {
        match self {
            Expectation::Verified => "verified",
            Expectation::Refuted => "refuted",
            Expectation::Feasible => "feasible",
            Expectation::Infeasible => "infeasible",
            Expectation::Definitive => "definitive",
        }
    }
}

/// How the magic identity is posed for a bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MagicForm {
    /// `∂_{x_1}G K_1 = ∂_{x_2}G K_2 = … = ∂_{x_n}G K_n`.
    Antiderivatives,
    /// `∂_{x_a}G K_{e_b} = ∂_{x_b}G K_{e_a}` for a first-order `L`.
    Swapped { a: usize, b: usize },
}

/// Everything needed to run the identity ledger and the C6 solver.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub name: String,
    pub a: OperatorSymbol,
    pub l: OperatorSymbol,
    /// `K(y)`, `dim_e × dim_f`, homogeneous of degree `ℓ`.
    pub k: PolyMatrix,
    /// `K_i` with `∂_{y_i} K_i = K`.
    pub ks: Vec<PolyMatrix>,
    pub greens: GreensMatrix,
    pub magic: MagicForm,
    /// Expected status of compose-zero, partition, antiderivatives, magic,
    /// greens-symbol.
    pub identity_expectations: [Expectation; 5],
    /// Known composite solution `T(x)P(y)`, if any.
    pub known_tp: Option<(DerivMatrix, PolyMatrix)>,
}

impl Bundle {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    /// `K_α` as the coefficient of `y^α` in `K(y)`.
    pub fn k_alpha(&self, alpha: &MultiIndex) -> QMatrix {
        QMatrix::from_rows(
            self.k
                .entries()
                .iter()
                .map(|r| r.iter().map(|p| p.coeff(alpha)).collect())
                .collect(),
        )
    }
}

pub const BUNDLES: [&str; 4] = ["dsym-r2", "grad-r2", "curl-r3", "open-question-r3"];

/// C6 runs: (case name, bundle, mode, expected outcome).
pub const C6_CASES: [(&str, &str, C6Mode, Expectation); 4] = [
    ("grad-r2-strict", "grad-r2", C6Mode::Strict, Expectation::Feasible),
    ("dsym-r2-weak", "dsym-r2", C6Mode::Weak, Expectation::Feasible),
    ("curl-r3-strict", "curl-r3", C6Mode::Strict, Expectation::Infeasible),
    (
        "open-question-r3-weak",
        "open-question-r3",
        C6Mode::Weak,
        Expectation::Definitive,
    ),
];

pub fn c6_case(name: &str) -> Option<(&'static str, C6Mode, Expectation)> {
    C6_CASES
        .iter()
        .find(|c| c.0 == name)
        .map(|&(_, b, m, e)| (b, m, e))
}

pub fn bundle(name: &str) -> Option<Bundle> {
    match name {
        "dsym-r2" => Some(dsym_bundle()),
        "grad-r2" => Some(grad_r2_bundle()),
        "curl-r3" => Some(curl_r3_bundle()),
        "open-question-r3" => Some(open_question_bundle()),
        _ => None,
    }
}

const ALL_VERIFIED: [Expectation; 5] = [Expectation::Verified; 5];
const MAGIC_REFUTED: [Expectation; 5] = [
    Expectation::Verified,
    Expectation::Verified,
    Expectation::Verified,
    Expectation::Refuted,
    Expectation::Verified,
];

/// Second-order cocanceling annihilator of the symmetric gradient.
pub fn dsym_cocanceling() -> OperatorSymbol {
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
    .expect("valid preset")
}

fn dsym_bundle() -> Bundle {
    let (greens, a) = greens_preset("dsym-r2").expect("preset");
    Bundle {
        name: "dsym-r2".into(),
        a,
        l: dsym_cocanceling(),
        k: column(2, &["1/2*y2^2", "-1*y1*y2", "1/2*y1^2"]),
        ks: vec![
            column(2, &["1/2*y1*y2^2", "1/6*y2^3 + -1/2*y1^2*y2", "1/6*y1^3"]),
            column(2, &["1/6*y2^3", "1/6*y1^3 + -1/2*y1*y2^2", "1/2*y1^2*y2"]),
        ],
        greens,
        magic: MagicForm::Antiderivatives,
        identity_expectations: ALL_VERIFIED,
        known_tp: None,
    }
}

fn grad_r2_bundle() -> Bundle {
    let (greens, a) = greens_preset("grad-r2").expect("preset");
    let l = OperatorSymbol::new(
        2,
        1,
        2,
        1,
        [
            (unit(2, 1), QMatrix::from_i64(&[&[1, 0]])),
            (unit(2, 0), QMatrix::from_i64(&[&[0, -1]])),
        ],
    )
    .expect("valid preset");
    let p = PolyMatrix::new(
        2,
        vec![vec![poly(2, "1*y1*y2")], vec![poly(2, "1/2*y2^2 + -1/2*y1^2")]],
    );
    let t = DerivMatrix::new(2, vec![vec![d(&[2, 0]), d(&[1, 1])]]);
    Bundle {
        name: "grad-r2".into(),
        a,
        l,
        k: column(2, &["1*y2", "-1*y1"]),
        ks: vec![
            column(2, &["1*y1*y2", "1/2*y2^2 + -1/2*y1^2"]),
            column(2, &["1/2*y2^2 + -1/2*y1^2", "-1*y1*y2"]),
        ],
        greens,
        magic: MagicForm::Antiderivatives,
        identity_expectations: ALL_VERIFIED,
        known_tp: Some((t, p)),
    }
}

/// `½ curl` on ℝ³, annihilating the gradient.
pub fn half_curl() -> OperatorSymbol {
    let h = q(1, 2);
    let m = |rows: &[&[i64]]| QMatrix::from_i64(rows).scale(&h);
    OperatorSymbol::new(
        3,
        1,
        3,
        3,
        [
            (unit(3, 0), m(&[&[0, 0, 0], &[0, 0, -1], &[0, 1, 0]])),
            (unit(3, 1), m(&[&[0, 0, 1], &[0, 0, 0], &[-1, 0, 0]])),
            (unit(3, 2), m(&[&[0, -1, 0], &[1, 0, 0], &[0, 0, 0]])),
        ],
    )
    .expect("valid preset")
}

fn curl_r3_bundle() -> Bundle {
    let (greens, a) = greens_preset("grad-r3").expect("preset");
    let k = PolyMatrix::new(
        3,
        vec![
            vec![poly(3, "0"), poly(3, "1*y3"), poly(3, "-1*y2")],
            vec![poly(3, "-1*y3"), poly(3, "0"), poly(3, "1*y1")],
            vec![poly(3, "1*y2"), poly(3, "-1*y1"), poly(3, "0")],
        ],
    );
    // K_i = y_i K(y) - (y_i²/2) K_{e_i}
    let ks = (0..3)
        .map(|i| {
            let yi = MultiPoly::var(3, i);
            let half_sq = (&yi * &yi).scale(&q(1, 2));
            let ke = k
                .entries()
                .iter()
                .map(|r| r.iter().map(|p| p.diff(i)).collect::<Vec<_>>())
                .collect::<Vec<_>>();
            let entries = k
                .entries()
                .iter()
                .zip(&ke)
                .map(|(r, er)| {
                    r.iter()
                        .zip(er)
                        .map(|(p, e)| &(&yi * p) - &(&half_sq * e))
                        .collect()
                })
                .collect();
            PolyMatrix::new(3, entries)
        })
        .collect();
    Bundle {
        name: "curl-r3".into(),
        a,
        l: half_curl(),
        k,
        ks,
        greens,
        magic: MagicForm::Swapped { a: 0, b: 1 },
        identity_expectations: MAGIC_REFUTED,
        known_tp: None,
    }
}

/// `[∂₂∂₃, ∂₁∂₃, -2∂₁∂₂]`.
pub fn open_question_cocanceling() -> OperatorSymbol {
    OperatorSymbol::new(
        3,
        2,
        3,
        1,
        [
            (mi(&[0, 1, 1]), QMatrix::from_i64(&[&[1, 0, 0]])),
            (mi(&[1, 0, 1]), QMatrix::from_i64(&[&[0, 1, 0]])),
            (mi(&[1, 1, 0]), QMatrix::from_i64(&[&[0, 0, -2]])),
        ],
    )
    .expect("valid preset")
}

fn open_question_bundle() -> Bundle {
    let (greens, a) = greens_preset("grad-r3").expect("preset");
    Bundle {
        name: "open-question-r3".into(),
        a,
        l: open_question_cocanceling(),
        k: column(3, &["1*y2*y3", "1*y1*y3", "-1/2*y1*y2"]),
        ks: vec![
            column(3, &["1*y1*y2*y3", "1/2*y1^2*y3", "-1/4*y1^2*y2"]),
            column(3, &["1/2*y2^2*y3", "1*y1*y2*y3", "-1/4*y1*y2^2"]),
            column(3, &["1/2*y2*y3^2", "1/2*y1*y3^2", "-1/2*y1*y2*y3"]),
        ],
        greens,
        magic: MagicForm::Antiderivatives,
        identity_expectations: MAGIC_REFUTED,
        known_tp: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundles_build_with_consistent_shapes() {
        for name in BUNDLES {
            let b = bundle(name).unwrap();
            assert_eq!(b.l.dim_v(), b.a.dim_e(), "{name}");
            assert_eq!(b.k.rows(), b.a.dim_e(), "{name}");
            assert_eq!(b.k.cols(), b.l.dim_e(), "{name}");
            assert_eq!(b.ks.len(), b.n(), "{name}");
            assert_eq!(b.greens.matrix.rows(), b.a.dim_v(), "{name}");
        }
        assert!(bundle("nope").is_none());
    }

    #[test]
    fn curl_antiderivatives_differentiate_back() {
        let b = bundle("curl-r3").unwrap();
        for (i, ki) in b.ks.iter().enumerate() {
            for (r, row) in ki.entries().iter().enumerate() {
                for (c, p) in row.iter().enumerate() {
                    assert_eq!(&p.diff(i), b.k.entry(r, c));
                }
            }
        }
    }

    #[test]
    fn cases_resolve() {
        for (case, bundle_name, _, _) in C6_CASES {
            assert_eq!(c6_case(case).unwrap().0, bundle_name);
            assert!(bundle(bundle_name).is_some());
        }
    }
}
