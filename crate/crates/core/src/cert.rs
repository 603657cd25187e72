//! Exact certification of the identities behind the first-order
//! cancellation argument, with an independent pointwise re-check.

use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::c6solver::CompositeQ;
use crate::greens::{DerivMatrix, GreensMatrix};
use crate::linalg::QMatrix;
use crate::opsym::{compose_symbols, OperatorSymbol, OpsymError, PolyMatrix};
use crate::poly::{ExactValue, MultiIndex, MultiPoly};
use crate::presets::{Bundle, MagicForm};
use crate::rational::{q, Rational};

pub const RECHECK_POINTS: usize = 10;
pub const RECHECK_SEED: u64 = 0x1d_e471;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error(transparent)]
    Shape(#[from] OpsymError),
    #[error("derivative d^{alpha} K is not constant (K must have degree {order})")]
    Degree { alpha: String, order: u32 },
    #[error("{0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdentityStatus {
    Verified,
    /// Both sides after reduction, for inspection.
    Refuted { lhs: String, rhs: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityReport {
    pub name: String,
    pub status: IdentityStatus,
    pub elapsed: Duration,
    /// Labelled textual forms of the objects involved.
    pub objects: Vec<(String, String)>,
    /// Whether evaluation at sample points agrees with the exact status.
    pub recheck: bool,
}

impl IdentityReport {
    pub fn verified(&self) -> bool {
        self.status == IdentityStatus::Verified
    }

    pub fn status_name(&self) -> &'static str {
        match self.status {
            IdentityStatus::Verified => "verified",
            IdentityStatus::Refuted { .. } => "refuted",
        }
    }
}

fn report(
    name: &str,
    start: Instant,
    equal: bool,
    lhs: String,
    rhs: String,
    objects: Vec<(String, String)>,
    pointwise_equal: bool,
) -> IdentityReport {
    IdentityReport {
        name: name.to_string(),
        status: if equal {
            IdentityStatus::Verified
        } else {
            IdentityStatus::Refuted { lhs, rhs }
        },
        elapsed: start.elapsed(),
        objects,
        recheck: pointwise_equal == equal,
    }
}

/// Deterministic rational sample points with nonzero entries.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let mut p = 0;
                    while p == 0 {
                        p = rng.gen_range(-7..=7);
                    }
                    q(p, rng.gen_range(1..=5))
                })
                .collect()
        })
        .collect()
}

fn fmt_poly_matrix(m: &PolyMatrix) -> String {
    let rows: Vec<String> = m
        .entries()
        .iter()
        .map(|r| r.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "))
        .collect();
    format!("[{}]", rows.join("; "))
}

fn fmt_deriv_matrix(m: &DerivMatrix) -> String {
    let rows: Vec<String> = m
        .entries()
        .iter()
        .map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "))
        .collect();
    format!("[{}]", rows.join("; "))
}

/// `L(ξ)A(ξ) = 0`.
pub fn verify_compose_zero(l: &OperatorSymbol, a: &OperatorSymbol) -> Result<IdentityReport, CertError> {
    let start = Instant::now();
    let c = compose_symbols(l, a)?;
    let pointwise = sample_points(a.n(), RECHECK_POINTS, RECHECK_SEED)
        .iter()
        .all(|xi| {
            let prod = l.symbol_at(xi).unwrap().mul(&a.symbol_at(xi).unwrap());
            prod.is_zero()
        });
    Ok(report(
        "compose-zero",
        start,
        c.is_zero(),
        fmt_poly_matrix(&c),
        "0".into(),
        vec![("L".into(), l.to_string()), ("A".into(), a.to_string())],
        pointwise,
    ))
}

/// `Σ_{|α|=ℓ} ∂^α_y K(y) L_α = Id_E`.
pub fn verify_partition(k: &PolyMatrix, l: &OperatorSymbol) -> Result<IdentityReport, CertError> {
    let start = Instant::now();
    let dim_e = l.dim_v();
    if k.rows() != dim_e || k.cols() != l.dim_e() {
        return Err(CertError::Mismatch(format!(
            "K is {}x{}, expected {}x{}",
            k.rows(),
            k.cols(),
            dim_e,
            l.dim_e()
        )));
    }
    let mut sum = QMatrix::zeros(dim_e, dim_e);
    for alpha in MultiIndex::all_of_order(l.n(), l.order()) {
        let mut dk = QMatrix::zeros(k.rows(), k.cols());
        for i in 0..k.rows() {
            for j in 0..k.cols() {
                let d = k.entry(i, j).diff_multi(&alpha);
                if d.total_degree().unwrap_or(0) > 0 {
                    return Err(CertError::Degree {
                        alpha: alpha.to_string(),
                        order: l.order(),
                    });
                }
                dk.set(i, j, d.coeff(&MultiIndex::zeros(l.n())));
            }
        }
        sum = sum.add(&dk.mul(&l.coeff(&alpha)));
    }
    let id = QMatrix::identity(dim_e);
    // re-check through lattice values of K instead of symbolic derivatives
    let pointwise = recheck_partition(k, l);
    Ok(report(
        "partition",
        start,
        sum == id,
        sum.to_string(),
        id.to_string(),
        vec![("K".into(), fmt_poly_matrix(k)), ("L".into(), l.to_string())],
        pointwise,
    ))
}

/// Recovers `∂^α K` from values of `K` on a lattice via exact finite
/// differences (exact for polynomials of degree ℓ).
fn recheck_partition(k: &PolyMatrix, l: &OperatorSymbol) -> bool {
    let n = l.n();
    let dim_e = l.dim_v();
    let mut sum = QMatrix::zeros(dim_e, dim_e);
    for alpha in MultiIndex::all_of_order(n, l.order()) {
        let mut dk = QMatrix::zeros(k.rows(), k.cols());
        for i in 0..k.rows() {
            for j in 0..k.cols() {
                dk.set(i, j, forward_difference(k.entry(i, j), &alpha));
            }
        }
        sum = sum.add(&dk.mul(&l.coeff(&alpha)));
    }
    sum == QMatrix::identity(dim_e)
}

/// `Δ^α p(0)` with unit steps; equals `∂^α p` for `p` homogeneous of order `|α|`.
fn forward_difference(p: &MultiPoly, alpha: &MultiIndex) -> Rational {
    let n = alpha.dim();
    let mut total = Rational::zero();
    let ranges: Vec<u32> = alpha.entries().to_vec();
    let mut idx = vec![0u32; n];
    loop {
        let mut sign = Rational::one();
        let mut weight = Rational::one();
        for a in 0..n {
            weight *= crate::rational::binomial(ranges[a], idx[a]);
            if (ranges[a] - idx[a]) % 2 == 1 {
                sign = -sign;
            }
        }
        let point: Vec<Rational> = idx.iter().map(|&v| Rational::from_integer(v.into())).collect();
        total += sign * weight * p.eval(&point);
        let mut a = 0;
        loop {
            if a == n {
                return total;
            }
            idx[a] += 1;
            if idx[a] <= ranges[a] {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// `∂_{y_i} K_i = K` for every `i`.
pub fn verify_antiderivatives(ks: &[PolyMatrix], k: &PolyMatrix) -> Result<IdentityReport, CertError> {
    let start = Instant::now();
    let n = k.entries().iter().flatten().next().map_or(0, |p| p.n());
    if ks.len() != n {
        return Err(CertError::Mismatch(format!("{} antiderivatives for n = {n}", ks.len())));
    }
    let mut equal = true;
    let mut lhs = Vec::new();
    for (i, ki) in ks.iter().enumerate() {
        if (ki.rows(), ki.cols()) != (k.rows(), k.cols()) {
            return Err(CertError::Mismatch(format!("K_{} has the wrong shape", i + 1)));
        }
        let d = PolyMatrix::new(
            n,
            ki.entries()
                .iter()
                .map(|r| r.iter().map(|p| p.diff(i)).collect())
                .collect(),
        );
        if &d != k {
            equal = false;
        }
        lhs.push(format!("d{} K{} = {}", i + 1, i + 1, fmt_poly_matrix(&d)));
    }
    // re-check: interpolate K_i along e_i through exact values
    let pointwise = sample_points(n, RECHECK_POINTS, RECHECK_SEED).iter().all(|y| {
        ks.iter().enumerate().all(|(i, ki)| {
            (0..k.rows()).all(|r| {
                (0..k.cols()).all(|c| {
                    derivative_by_interpolation(ki.entry(r, c), i, y) == k.entry(r, c).eval(y)
                })
            })
        })
    });
    let mut objects = vec![("K".into(), fmt_poly_matrix(k))];
    for (i, ki) in ks.iter().enumerate() {
        objects.push((format!("K{}", i + 1), fmt_poly_matrix(ki)));
    }
    Ok(report(
        "antiderivatives",
        start,
        equal,
        lhs.join("; "),
        fmt_poly_matrix(k),
        objects,
        pointwise,
    ))
}

/// `d/dt p(y + t e_axis)` at `t = 0` from exact values at `t = 0..=deg`
/// via the Lagrange derivative weights.
fn derivative_by_interpolation(p: &MultiPoly, axis: usize, y: &[Rational]) -> Rational {
    let deg = p.total_degree().unwrap_or(0) as i64;
    if deg == 0 {
        return Rational::zero();
    }
    let nodes: Vec<Rational> = (0..=deg).map(|t| Rational::from_integer(t.into())).collect();
    let mut total = Rational::zero();
    for (j, tj) in nodes.iter().enumerate() {
        // l_j'(0)
        let mut w = Rational::zero();
        for (m, tm) in nodes.iter().enumerate() {
            if m == j {
                continue;
            }
            let mut term = Rational::one() / (tj - tm);
            for (k, tk) in nodes.iter().enumerate() {
                if k != j && k != m {
                    term *= (Rational::zero() - tk) / (tj - tk);
                }
            }
            w += term;
        }
        let mut pt = y.to_vec();
        pt[axis] += tj;
        total += w * p.eval(&pt);
    }
    total
}

fn composite_text(q: &CompositeQ) -> String {
    q.to_string()
}

/// Exact value of `Σ_l ∂_{x_axis}[G_{il}](x) · M_{lj}(y)` computed by raw
/// differentiation of the closed forms, without harmonic reduction.
fn raw_product(g: &DerivMatrix, axis: Option<usize>, m: &PolyMatrix, i: usize, j: usize, x: &[Rational], y: &[Rational]) -> ExactValue {
    let mut acc: Option<ExactValue> = None;
    for l in 0..g.cols() {
        let mut r = g.entry(i, l).to_radial();
        if let Some(a) = axis {
            r = r.diff(a);
        }
        let v = r.eval_exact(x).expect("x is nonzero");
        let factor = m.entry(l, j).eval(y);
        acc = Some(match acc {
            None => ExactValue {
                rational: &v.rational * &factor,
                ..v
            },
            Some(a) => {
                let odd = if a.rational.is_zero() { v.odd } else { a.odd };
                ExactValue {
                    rational: a.rational + &v.rational * &factor,
                    odd,
                    ..a
                }
            }
        });
    }
    acc.expect("G has at least one column")
}

fn exact_equal(a: &ExactValue, b: &ExactValue) -> bool {
    a.is_multiple(b, &Rational::one())
}

/// The magic identity in normal form.
pub fn verify_magic(
    g: &GreensMatrix,
    k: &PolyMatrix,
    ks: &[PolyMatrix],
    form: &MagicForm,
) -> Result<IdentityReport, CertError> {
    let start = Instant::now();
    let n = g.matrix.n();
    // (axis of ∂_x, y-polynomial matrix) pairs that must give equal products
    let sides: Vec<(usize, PolyMatrix, String)> = match form {
        MagicForm::Antiderivatives => {
            if ks.len() != n {
                return Err(CertError::Mismatch(format!("{} antiderivatives for n = {n}", ks.len())));
            }
            ks.iter()
                .enumerate()
                .map(|(i, ki)| (i, ki.clone(), format!("d_x{} G K{}", i + 1, i + 1)))
                .collect()
        }
        MagicForm::Swapped { a, b } => {
            let ke = |axis: usize| {
                PolyMatrix::new(
                    n,
                    k.entries()
                        .iter()
                        .map(|r| r.iter().map(|p| p.diff(axis)).collect())
                        .collect(),
                )
            };
            vec![
                (*a, ke(*b), format!("d_x{} G K_e{}", a + 1, b + 1)),
                (*b, ke(*a), format!("d_x{} G K_e{}", b + 1, a + 1)),
            ]
        }
    };
    let products: Vec<CompositeQ> = sides
        .iter()
        .map(|(axis, m, _)| CompositeQ::product(&g.matrix.diff(*axis), m))
        .collect();
    let equal = products.windows(2).all(|w| w[0] == w[1]);
    let xs = sample_points(n, RECHECK_POINTS, RECHECK_SEED);
    let ys = sample_points(n, RECHECK_POINTS, RECHECK_SEED + 1);
    let pointwise = xs.iter().zip(&ys).all(|(x, y)| {
        (0..g.matrix.rows()).all(|i| {
            (0..k.cols()).all(|j| {
                let first = raw_product(&g.matrix, Some(sides[0].0), &sides[0].1, i, j, x, y);
                sides[1..].iter().all(|(axis, m, _)| {
                    exact_equal(&first, &raw_product(&g.matrix, Some(*axis), m, i, j, x, y))
                })
            })
        })
    });
    let (lhs, rhs) = if equal {
        (String::new(), String::new())
    } else {
        let i = products
            .windows(2)
            .position(|w| w[0] != w[1])
            .expect("some pair differs");
        (
            format!("{} = {}", sides[i].2, composite_text(&products[i])),
            format!("{} = {}", sides[i + 1].2, composite_text(&products[i + 1])),
        )
    };
    let mut objects = vec![("G".into(), fmt_deriv_matrix(&g.matrix))];
    for (_, m, label) in &sides {
        objects.push((label.clone(), fmt_poly_matrix(m)));
    }
    Ok(report("magic", start, equal, lhs, rhs, objects, pointwise))
}

/// `B(ξ)A(ξ) = |ξ|² Id_V`.
pub fn verify_greens_symbol(g: &GreensMatrix, a: &OperatorSymbol) -> Result<IdentityReport, CertError> {
    let start = Instant::now();
    let b = g.matrix.symbol();
    let prod = b.mul(&a.symbol_poly())?;
    let lap = PolyMatrix::scalar_identity(&MultiPoly::norm_sq(a.n()), a.dim_v());
    let pointwise = sample_points(a.n(), RECHECK_POINTS, RECHECK_SEED)
        .iter()
        .all(|xi| {
            let lhs = b.eval(xi).mul(&a.symbol_at(xi).unwrap());
            let r2: Rational = xi.iter().map(|v| v * v).sum();
            lhs == QMatrix::identity(a.dim_v()).scale(&r2)
        });
    Ok(report(
        "greens-symbol",
        start,
        prod == lap,
        fmt_poly_matrix(&prod),
        fmt_poly_matrix(&lap),
        vec![("G".into(), fmt_deriv_matrix(&g.matrix)), ("A".into(), a.to_string())],
        pointwise,
    ))
}

/// `∂_{x_i}G(x) K(y) = ∂_{y_i}(T(x)P(y))` for every `i`.
pub fn verify_tp(
    g: &GreensMatrix,
    k: &PolyMatrix,
    t: &DerivMatrix,
    p: &PolyMatrix,
) -> Result<IdentityReport, CertError> {
    let start = Instant::now();
    let n = g.matrix.n();
    if t.cols() != p.rows() {
        return Err(CertError::Mismatch("T and P do not compose".into()));
    }
    let tp = CompositeQ::product(t, p);
    let mut equal = true;
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n {
        let l = CompositeQ::product(&g.matrix.diff(i), k);
        let r = tp.diff_y(&MultiIndex::unit(n, i));
        if l != r {
            equal = false;
            lhs.push(composite_text(&l));
            rhs.push(composite_text(&r));
        }
    }
    Ok(report(
        "tp-derivatives",
        start,
        equal,
        lhs.join("; "),
        rhs.join("; "),
        vec![
            ("T".into(), fmt_deriv_matrix(t)),
            ("P".into(), fmt_poly_matrix(p)),
        ],
        equal,
    ))
}

/// The five identities of a bundle, in ledger order.
pub fn certify_bundle(b: &Bundle) -> Result<Vec<IdentityReport>, CertError> {
    Ok(vec![
        verify_compose_zero(&b.l, &b.a)?,
        verify_partition(&b.k, &b.l)?,
        verify_antiderivatives(&b.ks, &b.k)?,
        verify_magic(&b.greens, &b.k, &b.ks, &b.magic)?,
        verify_greens_symbol(&b.greens, &b.a)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{bundle, dsym_operator, Expectation, BUNDLES};
    use crate::rational::qi;

    #[test]
    fn bundles_match_expectations() {
        for name in BUNDLES {
            let b = bundle(name).unwrap();
            let reports = certify_bundle(&b).unwrap();
            for (r, e) in reports.iter().zip(b.identity_expectations) {
                let want = e == Expectation::Verified;
                assert_eq!(r.verified(), want, "{name}: {} {:?}", r.name, r.status);
                assert!(r.recheck, "{name}: {} pointwise re-check disagrees", r.name);
            }
        }
    }

    #[test]
    fn compose_zero_refuted_for_full_gradient() {
        // full gradient of a planar field: (∂₁u₁, ∂₂u₁, ∂₁u₂, ∂₂u₂)
        let grad = OperatorSymbol::new(
            2,
            1,
            2,
            4,
            [
                (MultiIndex::unit(2, 0), QMatrix::from_i64(&[&[1, 0], &[0, 0], &[0, 1], &[0, 0]])),
                (MultiIndex::unit(2, 1), QMatrix::from_i64(&[&[0, 0], &[1, 0], &[0, 0], &[0, 1]])),
            ],
        )
        .unwrap();
        // L reading the first three rows as the symmetric-gradient slots
        let l = OperatorSymbol::new(
            2,
            2,
            4,
            1,
            [
                (MultiIndex::new(vec![0, 2]), QMatrix::from_i64(&[&[1, 0, 0, 0]])),
                (MultiIndex::new(vec![1, 1]), QMatrix::from_i64(&[&[0, -1, 0, 0]])),
                (MultiIndex::new(vec![2, 0]), QMatrix::from_i64(&[&[0, 0, 0, 1]])),
            ],
        )
        .unwrap();
        let r = verify_compose_zero(&l, &grad).unwrap();
        assert!(!r.verified());
        assert!(r.recheck);
        assert!(verify_compose_zero(&l, &dsym_operator()).is_err());
    }

    #[test]
    fn scaled_k_is_refuted() {
        let b = bundle("dsym-r2").unwrap();
        let k2 = PolyMatrix::new(
            2,
            b.k.entries()
                .iter()
                .map(|r| r.iter().map(|p| p.scale(&qi(2))).collect())
                .collect(),
        );
        let r = verify_partition(&k2, &b.l).unwrap();
        match &r.status {
            IdentityStatus::Refuted { lhs, .. } => assert_eq!(lhs, "[2 0 0; 0 2 0; 0 0 2]"),
            other => panic!("{other:?}"),
        }
        assert!(r.recheck);
    }

    #[test]
    fn flipped_antiderivative_is_refuted() {
        let b = bundle("dsym-r2").unwrap();
        let mut ks = b.ks.clone();
        let flipped: Vec<Vec<MultiPoly>> = ks[0]
            .entries()
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().map(|p| if i == 0 { -p } else { p.clone() }).collect())
            .collect();
        ks[0] = PolyMatrix::new(2, flipped);
        let r = verify_antiderivatives(&ks, &b.k).unwrap();
        assert!(!r.verified() && r.recheck);
    }

    #[test]
    fn negated_k2_breaks_magic() {
        let b = bundle("dsym-r2").unwrap();
        let mut ks = b.ks.clone();
        ks[1] = PolyMatrix::new(
            2,
            ks[1].entries().iter().map(|r| r.iter().map(|p| -p).collect()).collect(),
        );
        let r = verify_magic(&b.greens, &b.k, &ks, &b.magic).unwrap();
        assert!(!r.verified() && r.recheck);
    }

    #[test]
    fn zeroed_greens_row_is_refuted() {
        let b = bundle("dsym-r2").unwrap();
        let mut g = b.greens.clone();
        let entries: Vec<Vec<_>> = g
            .matrix
            .entries()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .map(|e| if i == 1 { e.scale(&qi(0)) } else { e.clone() })
                    .collect()
            })
            .collect();
        g.matrix = DerivMatrix::new(2, entries);
        let r = verify_greens_symbol(&g, &b.a).unwrap();
        assert!(!r.verified() && r.recheck);
    }

    #[test]
    fn grad_r2_tp_pair() {
        let b = bundle("grad-r2").unwrap();
        let (t, p) = b.known_tp.clone().unwrap();
        assert!(verify_tp(&b.greens, &b.k, &t, &p).unwrap().verified());
    }

    #[test]
    fn curl_swapped_identity_shows_both_sides() {
        let b = bundle("curl-r3").unwrap();
        let r = verify_magic(&b.greens, &b.k, &b.ks, &b.magic).unwrap();
        match r.status {
            IdentityStatus::Refuted { lhs, rhs } => {
                assert!(lhs.starts_with("d_x1 G K_e2"));
                assert!(rhs.starts_with("d_x2 G K_e1"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let b = bundle("dsym-r2").unwrap();
        let strip = |v: Vec<IdentityReport>| {
            v.into_iter()
                .map(|r| (r.name, r.status, r.objects, r.recheck))
                .collect::<Vec<_>>()
        };
        assert_eq!(
            strip(certify_bundle(&b).unwrap()),
            strip(certify_bundle(&b).unwrap())
        );
    }
}
