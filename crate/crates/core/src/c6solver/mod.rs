//! Feasibility of the composite conditions as an exact linear problem.
//!
//! The unknown is `Q(x, y) = T(x)P(y)`, a `dim V × dim F` matrix whose
//! entries are combinations of `y^m ⊗ ∂^β Φ_n` with `|m| = ℓ + 1` and `β`
//! reduced of order `|β_G| + 1`. Strict mode asks, for every `|α| = ℓ`,
//!
//! `∂^α_y Q = Σ_{i: α_i ≥ 1} α_i ∂_{x_i}G(x) ∂^{α-e_i}_y K(y)`,
//!
//! weak mode only the sum of both sides against `L_α`.

mod composite;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

pub use composite::{factor_composite, CompositeQ, Factorization, Tensor};

use crate::cert::{verify_compose_zero, verify_partition, CertError};
use crate::greens::{reduced_basis, GreensMatrix};
use crate::linalg::{dot, PivotOrder, QMatrix, Solve};
use crate::opsym::{OperatorSymbol, PolyMatrix};
use crate::poly::{Homogeneity, MultiIndex};
use crate::presets::{bundle, c6_case, Bundle, C6Mode, Expectation, MagicForm};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum C6Error {
    #[error("Green's matrix mixes derivative orders")]
    MixedGreens,
    #[error("Green's matrix has degree {got:?}, expected k - n = {expected}")]
    GreensDegree { got: Option<i64>, expected: i64 },
    #[error("K entry ({row}, {col}) is not homogeneous of degree {expected}")]
    KDegree { row: usize, col: usize, expected: u32 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
}

/// Row/column index of the linear system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Unknown {
    pub v: usize,
    pub f: usize,
    pub monomial: MultiIndex,
    pub beta: MultiIndex,
}

#[derive(Debug, Clone)]
pub struct C6System {
    pub mode: C6Mode,
    pub n: usize,
    pub dim_v: usize,
    pub dim_f: usize,
    pub unknowns: Vec<Unknown>,
    /// Equation labels: `(block, row-of-V, column, y-monomial, β)`, where the
    /// block is `α` in strict mode and empty in weak mode.
    pub equations: Vec<(Option<MultiIndex>, usize, usize, MultiIndex, MultiIndex)>,
    pub matrix: QMatrix,
    pub rhs: Vec<Rational>,
    l: OperatorSymbol,
}

impl C6System {
    /// Coordinates of `q` in the unknown basis, if it lies in the ansatz space.
    pub fn coordinates(&self, q: &CompositeQ) -> Option<Vec<Rational>> {
        let index: BTreeMap<&Unknown, usize> =
            self.unknowns.iter().enumerate().map(|(i, u)| (u, i)).collect();
        let mut x = vec![Rational::zero(); self.unknowns.len()];
        if (q.rows(), q.cols()) != (self.dim_v, self.dim_f) {
            return None;
        }
        for (v, row) in q.entries().iter().enumerate() {
            for (f, t) in row.iter().enumerate() {
                for ((m, b), c) in t.terms() {
                    let key = Unknown {
                        v,
                        f,
                        monomial: m.clone(),
                        beta: b.clone(),
                    };
                    x[*index.get(&key)?] = c.clone();
                }
            }
        }
        Some(x)
    }

    pub fn composite(&self, x: &[Rational]) -> CompositeQ {
        let mut q = CompositeQ::zeros(self.n, self.dim_v, self.dim_f);
        for (u, c) in self.unknowns.iter().zip(x) {
            q.entry_mut(u.v, u.f)
                .add_term(u.monomial.clone(), u.beta.clone(), c.clone());
        }
        q
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        self.matrix.mul_vec(x) == self.rhs
    }

    /// Whether `q` solves the system.
    pub fn contains(&self, q: &CompositeQ) -> bool {
        self.coordinates(q).is_some_and(|x| self.satisfied_by(&x))
    }

    pub fn cocanceling(&self) -> &OperatorSymbol {
        &self.l
    }
}

/// `Σ_{i: α_i ≥ 1} α_i ∂_{x_i}G ∂^{α-e_i}_y K`.
pub fn product_rule_rhs(g: &GreensMatrix, k: &PolyMatrix, alpha: &MultiIndex) -> CompositeQ {
    let n = g.matrix.n();
    let mut out = CompositeQ::zeros(n, g.matrix.rows(), k.cols());
    for i in 0..n {
        let ai = alpha.get(i);
        if ai == 0 {
            continue;
        }
        let rest = alpha.with_entry(i, ai - 1);
        let dk = PolyMatrix::new(
            n,
            k.entries()
                .iter()
                .map(|r| r.iter().map(|p| p.diff_multi(&rest)).collect())
                .collect(),
        );
        let term = CompositeQ::product(&g.matrix.diff(i), &dk);
        out = out.add(&term.scale(&Rational::from_integer(ai.into())));
    }
    out
}

/// Assembles the strict or weak system for `(A, L, K, G)`.
pub fn build_c6_system(
    a: &OperatorSymbol,
    l: &OperatorSymbol,
    k: &PolyMatrix,
    g: &GreensMatrix,
    mode: C6Mode,
) -> Result<C6System, C6Error> {
    let n = a.n();
    let ell = l.order();
    if l.dim_v() != a.dim_e() || k.rows() != a.dim_e() || k.cols() != l.dim_e() {
        return Err(C6Error::Shape(format!(
            "A: R^{} -> R^{}, L: R^{} -> R^{}, K is {}x{}",
            a.dim_v(),
            a.dim_e(),
            l.dim_v(),
            l.dim_e(),
            k.rows(),
            k.cols()
        )));
    }
    if g.matrix.rows() != a.dim_v() || g.matrix.cols() != a.dim_e() || g.matrix.n() != n {
        return Err(C6Error::Shape("G must map E to V".into()));
    }
    if !verify_compose_zero(l, a)?.verified() {
        return Err(C6Error::Precondition("L(D)A(D) != 0".into()));
    }
    if !verify_partition(k, l)?.verified() {
        return Err(C6Error::Precondition("sum d^a K L_a != Id".into()));
    }
    let orders: Vec<u32> = {
        let mut o: Vec<u32> = g
            .matrix
            .entries()
            .iter()
            .flatten()
            .flat_map(|e| e.orders())
            .collect();
        o.sort_unstable();
        o.dedup();
        o
    };
    let g_order = match orders[..] {
        [m] => m,
        [] => 1,
        _ => return Err(C6Error::MixedGreens),
    };
    let expected = a.order() as i64 - n as i64;
    if !orders.is_empty() && g.degree() != Some(expected) {
        return Err(C6Error::GreensDegree {
            got: g.degree(),
            expected,
        });
    }
    for (r, row) in k.entries().iter().enumerate() {
        for (c, p) in row.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            if p.homogeneous_degree() != Ok(Homogeneity::Homogeneous(ell)) {
                return Err(C6Error::KDegree {
                    row: r,
                    col: c,
                    expected: ell,
                });
            }
        }
    }

    let dim_v = a.dim_v();
    let dim_f = l.dim_e();
    let dim_e = a.dim_e();
    let monomials = MultiIndex::all_of_order(n, ell + 1);
    let betas = reduced_basis(n, g_order + 1);
    let mut unknowns = Vec::new();
    for v in 0..dim_v {
        for f in 0..dim_f {
            for m in &monomials {
                for b in &betas {
                    unknowns.push(Unknown {
                        v,
                        f,
                        monomial: m.clone(),
                        beta: b.clone(),
                    });
                }
            }
        }
    }
    let alphas = MultiIndex::all_of_order(n, ell);
    let linear = MultiIndex::all_of_order(n, 1);
    // (block, v, column, monomial, β) → row
    let blocks: Vec<Option<MultiIndex>> = match mode {
        C6Mode::Strict => alphas.iter().cloned().map(Some).collect(),
        C6Mode::Weak => vec![None],
    };
    let width = match mode {
        C6Mode::Strict => dim_f,
        C6Mode::Weak => dim_e,
    };
    let mut equations = Vec::new();
    for blk in &blocks {
        for v in 0..dim_v {
            for c in 0..width {
                for m in &linear {
                    for b in &betas {
                        equations.push((blk.clone(), v, c, m.clone(), b.clone()));
                    }
                }
            }
        }
    }
    let row_of: BTreeMap<_, usize> = equations
        .iter()
        .enumerate()
        .map(|(i, e)| (e.clone(), i))
        .collect();

    // columns are assembled independently
    let columns: Vec<Vec<(usize, Rational)>> = unknowns
        .par_iter()
        .map(|u| {
            let unit = {
                let mut q = CompositeQ::zeros(n, dim_v, dim_f);
                q.entry_mut(u.v, u.f)
                    .add_term(u.monomial.clone(), u.beta.clone(), Rational::from_integer(1.into()));
                q
            };
            let mut col = Vec::new();
            match mode {
                C6Mode::Strict => {
                    for alpha in &alphas {
                        let d = unit.diff_y(alpha);
                        push_entries(&mut col, &row_of, Some(alpha), &d);
                    }
                }
                C6Mode::Weak => {
                    let mut acc = CompositeQ::zeros(n, dim_v, dim_e);
                    for alpha in &alphas {
                        acc = acc.add(&unit.diff_y(alpha).mul_const(&l.coeff(alpha)));
                    }
                    push_entries(&mut col, &row_of, None, &acc);
                }
            }
            col
        })
        .collect();
    let mut matrix = QMatrix::zeros(equations.len(), unknowns.len());
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col {
            matrix.set(i, j, v);
        }
    }

    let mut rhs = vec![Rational::zero(); equations.len()];
    let mut place = |blk: Option<&MultiIndex>, q: &CompositeQ| -> Result<(), C6Error> {
        for (v, row) in q.entries().iter().enumerate() {
            for (c, t) in row.iter().enumerate() {
                for ((m, b), val) in t.terms() {
                    let key = (blk.cloned(), v, c, m.clone(), b.clone());
                    let i = *row_of.get(&key).ok_or_else(|| {
                        C6Error::Precondition(format!(
                            "right-hand side term y^{m} d^{b} outside the ansatz degrees"
                        ))
                    })?;
                    rhs[i] += val;
                }
            }
        }
        Ok(())
    };
    match mode {
        C6Mode::Strict => {
            for alpha in &alphas {
                place(Some(alpha), &product_rule_rhs(g, k, alpha))?;
            }
        }
        C6Mode::Weak => {
            let mut acc = CompositeQ::zeros(n, dim_v, dim_e);
            for alpha in &alphas {
                acc = acc.add(&product_rule_rhs(g, k, alpha).mul_const(&l.coeff(alpha)));
            }
            place(None, &acc)?;
        }
    }
    Ok(C6System {
        mode,
        n,
        dim_v,
        dim_f,
        unknowns,
        equations,
        matrix,
        rhs,
        l: l.clone(),
    })
}

type RowKey = (Option<MultiIndex>, usize, usize, MultiIndex, MultiIndex);

fn push_entries(
    col: &mut Vec<(usize, Rational)>,
    row_of: &BTreeMap<RowKey, usize>,
    blk: Option<&MultiIndex>,
    q: &CompositeQ,
) {
    for (v, row) in q.entries().iter().enumerate() {
        for (c, t) in row.iter().enumerate() {
            for ((m, b), val) in t.terms() {
                let key = (blk.cloned(), v, c, m.clone(), b.clone());
                col.push((row_of[&key], val.clone()));
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum C6Status {
    Feasible {
        q: CompositeQ,
        factorization: Factorization,
    },
    /// `λᵀM = 0`, `λᵀb ≠ 0`.
    Infeasible { lambda: Vec<Rational> },
}

#[derive(Debug, Clone)]
pub struct C6Outcome {
    pub status: C6Status,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
    /// Dimension of the solution space (feasible only).
    pub nullity: Option<usize>,
    /// Particular solution or certificate re-verified exactly.
    pub verified: bool,
    /// Same status and nullity with reversed row and column order.
    pub reversed_agrees: bool,
}

impl C6Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, C6Status::Feasible { .. })
    }

    pub fn status_name(&self) -> &'static str {
        if self.is_feasible() {
            "feasible"
        } else {
            "infeasible"
        }
    }

    /// Smallest `dim M` over all solutions when known: with a unique
    /// solution it is the rank of that solution.
    pub fn min_dim_m(&self) -> Option<usize> {
        match (&self.status, self.nullity) {
            (C6Status::Feasible { factorization, .. }, Some(0)) => Some(factorization.dim_m),
            _ => None,
        }
    }
}

fn run_order(sys: &C6System, order: PivotOrder) -> (Solve, usize) {
    let rank = sys.matrix.rank();
    (sys.matrix.solve(&sys.rhs, order), rank)
}

pub fn solve_feasibility(sys: &C6System) -> C6Outcome {
    let (natural, rank) = run_order(sys, PivotOrder::Natural);
    let reversed = sys.matrix.solve(&sys.rhs, PivotOrder::Reversed);
    let reversed_agrees = match (&natural, &reversed) {
        (Solve::Feasible { nullity: a, .. }, Solve::Feasible { nullity: b, x, .. }) => {
            a == b && sys.satisfied_by(x)
        }
        (Solve::Infeasible { .. }, Solve::Infeasible { lambda }) => certificate_holds(sys, lambda),
        _ => false,
    };
    match natural {
        Solve::Feasible { x, nullity, .. } => {
            let q = sys.composite(&x);
            let factorization = factor_composite(&q);
            let verified = sys.satisfied_by(&x) && factorization.rebuild() == q;
            C6Outcome {
                status: C6Status::Feasible { q, factorization },
                unknowns: sys.unknowns.len(),
                equations: sys.equations.len(),
                rank,
                nullity: Some(nullity),
                verified,
                reversed_agrees,
            }
        }
        Solve::Infeasible { lambda } => C6Outcome {
            verified: certificate_holds(sys, &lambda),
            status: C6Status::Infeasible { lambda },
            unknowns: sys.unknowns.len(),
            equations: sys.equations.len(),
            rank,
            nullity: None,
            reversed_agrees,
        },
    }
}

pub fn certificate_holds(sys: &C6System, lambda: &[Rational]) -> bool {
    sys.matrix.left_mul_vec(lambda).iter().all(|v| v.is_zero()) && !dot(lambda, &sys.rhs).is_zero()
}

/// A candidate composite and whether it solves the system.
#[derive(Debug, Clone)]
pub struct CandidateCheck {
    pub label: String,
    pub q: CompositeQ,
    pub in_ansatz: bool,
    pub solves: bool,
}

#[derive(Debug, Clone)]
pub struct CaseReport {
    pub case: String,
    pub bundle: String,
    pub mode: C6Mode,
    pub expectation: Expectation,
    pub outcome: C6Outcome,
    pub candidates: Vec<CandidateCheck>,
    /// Strict solutions also solve the weak system (strict mode only).
    pub strict_implies_weak: Option<bool>,
    pub elapsed: Duration,
}

impl CaseReport {
    pub fn meets_expectation(&self) -> bool {
        let status_ok = match self.expectation {
            Expectation::Feasible => self.outcome.is_feasible(),
            Expectation::Infeasible => !self.outcome.is_feasible(),
            _ => true,
        };
        status_ok && self.outcome.verified && self.outcome.reversed_agrees
    }
}

/// Composites suggested by the construction: `Σ_i ∂_{x_i}G K_i`, and for
/// n = 2 also `2 ∂_{x_1}G K_1`, plus any known `T P`.
pub fn candidates(b: &Bundle) -> Vec<(String, CompositeQ)> {
    let mut out = Vec::new();
    let n = b.n();
    if b.ks.len() == n {
        let mut sum = CompositeQ::product(&b.greens.matrix.diff(0), &b.ks[0]);
        for i in 1..n {
            sum = sum.add(&CompositeQ::product(&b.greens.matrix.diff(i), &b.ks[i]));
        }
        out.push(("sum_i d_xi G K_i".to_string(), sum));
        if n == 2 && b.magic == MagicForm::Antiderivatives {
            let q = CompositeQ::product(&b.greens.matrix.diff(0), &b.ks[0])
                .scale(&Rational::from_integer(2.into()));
            out.push(("2 d_x1 G K_1".to_string(), q));
        }
    }
    if let Some((t, p)) = &b.known_tp {
        out.push(("T P".to_string(), CompositeQ::product(t, p)));
    }
    out
}

pub fn run_bundle(b: &Bundle, mode: C6Mode, case: &str, expectation: Expectation) -> Result<CaseReport, C6Error> {
    let start = Instant::now();
    let sys = build_c6_system(&b.a, &b.l, &b.k, &b.greens, mode)?;
    let outcome = solve_feasibility(&sys);
    let candidates = candidates(b)
        .into_iter()
        .map(|(label, q)| CandidateCheck {
            in_ansatz: sys.coordinates(&q).is_some(),
            solves: sys.contains(&q),
            label,
            q,
        })
        .collect();
    let strict_implies_weak = match (&outcome.status, mode) {
        (C6Status::Feasible { q, .. }, C6Mode::Strict) => {
            let weak = build_c6_system(&b.a, &b.l, &b.k, &b.greens, C6Mode::Weak)?;
            Some(weak.contains(q))
        }
        _ => None,
    };
    Ok(CaseReport {
        case: case.to_string(),
        bundle: b.name.clone(),
        mode,
        expectation,
        outcome,
        candidates,
        strict_implies_weak,
        elapsed: start.elapsed(),
    })
}

/// Runs one of the named cases (`grad-r2-strict`, `dsym-r2-weak`,
/// `curl-r3-strict`, `open-question-r3-weak`).
pub fn run_case(case: &str) -> Result<CaseReport, C6Error> {
    let (bundle_name, mode, expectation) =
        c6_case(case).ok_or_else(|| C6Error::UnknownCase(case.to_string()))?;
    let b = bundle(bundle_name).expect("registered bundle");
    run_bundle(&b, mode, case, expectation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{greens_preset, DerivMatrix};
    use crate::presets::C6_CASES;

    fn system(name: &str, mode: C6Mode) -> C6System {
        let b = bundle(name).unwrap();
        build_c6_system(&b.a, &b.l, &b.k, &b.greens, mode).unwrap()
    }

    #[test]
    fn system_sizes() {
        assert_eq!(system("grad-r2", C6Mode::Strict).unknowns.len(), 6);
        let curl = system("curl-r3", C6Mode::Strict);
        assert_eq!(curl.unknowns.len(), 3 * 6 * 5);
        let oq = system("open-question-r3", C6Mode::Weak);
        assert_eq!(oq.unknowns.len(), 50);
        assert_eq!(oq.equations.len(), 3 * 3 * 5);
    }

    #[test]
    fn grad_r2_strict_contains_known_pair() {
        let r = run_case("grad-r2-strict").unwrap();
        assert!(r.outcome.is_feasible() && r.outcome.verified && r.outcome.reversed_agrees);
        let tp = r.candidates.iter().find(|c| c.label == "T P").unwrap();
        assert!(tp.solves);
        assert_eq!(r.strict_implies_weak, Some(true));
        assert_eq!(r.outcome.nullity, Some(0));
        assert_eq!(r.outcome.min_dim_m(), Some(2));
    }

    #[test]
    fn curl_r3_strict_is_infeasible_with_certificate() {
        let r = run_case("curl-r3-strict").unwrap();
        assert!(!r.outcome.is_feasible());
        assert!(r.outcome.verified && r.outcome.reversed_agrees);
        assert!(r.meets_expectation());
    }

    #[test]
    fn dsym_weak_contains_magic_composite() {
        let r = run_case("dsym-r2-weak").unwrap();
        assert!(r.outcome.is_feasible());
        let c = r.candidates.iter().find(|c| c.label == "2 d_x1 G K_1").unwrap();
        assert!(c.solves);
    }

    #[test]
    fn open_question_is_definitive_and_reproducible() {
        let a = run_case("open-question-r3-weak").unwrap();
        let b = run_case("open-question-r3-weak").unwrap();
        assert!(a.outcome.verified && a.outcome.reversed_agrees);
        assert_eq!(a.outcome.status_name(), b.outcome.status_name());
        assert_eq!(a.outcome.rank, b.outcome.rank);
    }

    #[test]
    fn zero_right_hand_side_gives_zero_solution() {
        let b = bundle("grad-r2").unwrap();
        let (mut g, _) = greens_preset("grad-r2").unwrap();
        let zero = g.matrix.map(|e| e.scale(&Rational::zero()));
        g.matrix = DerivMatrix::new(2, zero.entries().to_vec());
        let sys = build_c6_system(&b.a, &b.l, &b.k, &g, C6Mode::Strict).unwrap();
        assert!(sys.rhs.iter().all(|v| v.is_zero()));
        let out = solve_feasibility(&sys);
        match out.status {
            C6Status::Feasible { q, factorization } => {
                assert!(q.is_zero());
                assert_eq!(factorization.dim_m, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_cases_meet_expectations_and_factor() {
        for (case, ..) in C6_CASES {
            let r = run_case(case).unwrap();
            assert!(r.meets_expectation(), "{case}");
            if let C6Status::Feasible { q, factorization } = &r.outcome.status {
                assert_eq!(&factorization.rebuild(), q);
            }
        }
    }

    #[test]
    fn rejects_wrong_degree_k() {
        let b = bundle("grad-r2").unwrap();
        let ks = b.ks[0].clone();
        assert!(build_c6_system(&b.a, &b.l, &ks, &b.greens, C6Mode::Strict).is_err());
    }
}
