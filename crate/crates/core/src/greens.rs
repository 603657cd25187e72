//! Derivatives of the fundamental solution `Φ_n` (`log|x|` on ℝ², `|x|^{-1}`
//! on ℝ³) in harmonic normal form, and Green's matrices built from them.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::opsym::{OperatorSymbol, PolyMatrix};
use crate::poly::{ExactValue, LogRadialExpr, MultiIndex, MultiPoly};
use crate::rational::{fmt_rational, q, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GreensError {
    #[error("unknown Green's preset `{0}`")]
    UnknownPreset(String),
    #[error("evaluation at the origin")]
    Origin,
    #[error("unsupported dimension {0}")]
    Dimension(usize),
}

/// `Σ c_β ∂^β Φ_n` with every stored `β` satisfying `β_n ≤ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivExpr {
    n: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl DerivExpr {
    pub fn zero(n: usize) -> Self {
        assert!(n == 2 || n == 3, "fundamental solution only for n = 2, 3");
        DerivExpr {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// `∂^β Φ_n`, reduced.
    pub fn partial(beta: MultiIndex) -> Self {
        let n = beta.dim();
        DerivExpr::reduce_normal_form(n, [(beta, Rational::one())])
    }

    /// Rewrites `β` with `β_n ≥ 2` as `-Σ_{i<n} (β - 2e_n + 2e_i)` until
    /// every index is reduced.
    pub fn reduce_normal_form<I>(n: usize, raw: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, Rational)>,
    {
        let mut out = DerivExpr::zero(n);
        let mut work: Vec<(MultiIndex, Rational)> = raw.into_iter().collect();
        while let Some((beta, c)) = work.pop() {
            assert_eq!(beta.dim(), n);
            if c.is_zero() {
                continue;
            }
            let last = beta.get(n - 1);
            if last <= 1 {
                out.add_term(beta, c);
                continue;
            }
            let base = beta.with_entry(n - 1, last - 2);
            for i in 0..n - 1 {
                let moved = base.with_entry(i, base.get(i) + 2);
                work.push((moved, -c.clone()));
            }
        }
        out
    }

    fn add_term(&mut self, beta: MultiIndex, c: Rational) {
        let entry = self.terms.entry(beta.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&beta);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Rational> {
        &self.terms
    }

    pub fn coeff(&self, beta: &MultiIndex) -> Rational {
        self.terms.get(beta).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &DerivExpr) -> DerivExpr {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(b.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &DerivExpr) -> DerivExpr {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> DerivExpr {
        if c.is_zero() {
            return DerivExpr::zero(self.n);
        }
        DerivExpr {
            n: self.n,
            terms: self.terms.iter().map(|(b, v)| (b.clone(), v * c)).collect(),
        }
    }

    /// `∂_axis` of the expression, reduced.
    pub fn diff(&self, axis: usize) -> DerivExpr {
        assert!(axis < self.n, "axis out of range");
        DerivExpr::reduce_normal_form(
            self.n,
            self.terms.iter().map(|(b, c)| (b.bumped(axis), c.clone())),
        )
    }

    /// Derivative orders present; more than one means mixed homogeneity.
    pub fn orders(&self) -> Vec<u32> {
        let mut o: Vec<u32> = self.terms.keys().map(|b| b.order()).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    pub fn is_mixed(&self) -> bool {
        self.orders().len() > 1
    }

    /// Homogeneity degree of the represented function, if unmixed.
    pub fn degree(&self) -> Option<i64> {
        match self.orders()[..] {
            [m] => Some(base_degree(self.n) - m as i64),
            _ => None,
        }
    }

    /// `Σ c_β ξ^β` for the stored (reduced) indices.
    pub fn symbol(&self) -> MultiPoly {
        MultiPoly::from_terms(self.n, self.terms.iter().map(|(b, c)| (b.clone(), c.clone())))
    }

    /// Closed form `c·log|x| + p(x)|x|^{-s}`.
    pub fn to_radial(&self) -> LogRadialExpr {
        let base = fundamental(self.n);
        self.terms
            .iter()
            .fold(LogRadialExpr::zero(self.n), |acc, (b, c)| {
                acc.add(&base.diff_multi(b).scale(c))
            })
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Result<ExactValue, GreensError> {
        self.to_radial().eval_exact(x).ok_or(GreensError::Origin)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.to_radial().eval_f64(x)
    }

    pub fn compile(&self) -> CompiledExpr {
        CompiledExpr::new(&self.to_radial())
    }
}

impl fmt::Display for DerivExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(b, c)| format!("{}*d^{}", fmt_rational(c), b))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn base_degree(n: usize) -> i64 {
    if n == 2 {
        0
    } else {
        2 - n as i64
    }
}

/// `log|x|` for n = 2, `|x|^{-1}` for n = 3.
pub fn fundamental(n: usize) -> LogRadialExpr {
    match n {
        2 => LogRadialExpr::log_norm(),
        3 => LogRadialExpr::inverse_norm(3),
        _ => panic!("fundamental solution only for n = 2, 3"),
    }
}

/// Reduced indices of order `m` (`β_n ≤ 1`): 2 for n = 2, `2m+1` for n = 3.
pub fn reduced_basis(n: usize, m: u32) -> Vec<MultiIndex> {
    MultiIndex::all_of_order(n, m)
        .into_iter()
        .filter(|b| b.get(n - 1) <= 1)
        .collect()
}

/// Floating-point evaluator of a closed form, for use on quadrature grids.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    log_coeff: f64,
    terms: Vec<(f64, Vec<i32>)>,
    s: f64,
}

impl CompiledExpr {
    pub fn new(e: &LogRadialExpr) -> Self {
        CompiledExpr {
            log_coeff: to_f64(e.log_coeff()),
            terms: e
                .numerator()
                .terms()
                .iter()
                .map(|(m, c)| (to_f64(c), m.entries().iter().map(|&v| v as i32).collect()))
                .collect(),
            s: e.power() as f64,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let mut p = 0.0;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e) {
                t *= xi.powi(k);
            }
            p += t;
        }
        let mut v = if self.terms.is_empty() {
            0.0
        } else {
            p * r2.powf(-self.s / 2.0)
        };
        if self.log_coeff != 0.0 {
            v += self.log_coeff * 0.5 * r2.ln();
        }
        v
    }
}

/// Rectangular matrix of derivative expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivMatrix {
    n: usize,
    entries: Vec<Vec<DerivExpr>>,
}

impl DerivMatrix {
    pub fn new(n: usize, entries: Vec<Vec<DerivExpr>>) -> Self {
        let cols = entries.first().map_or(0, |r| r.len());
        assert!(entries.iter().all(|r| r.len() == cols));
        assert!(entries.iter().flatten().all(|e| e.n() == n));
        DerivMatrix { n, entries }
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

    pub fn entry(&self, i: usize, j: usize) -> &DerivExpr {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<DerivExpr>] {
        &self.entries
    }

    pub fn diff(&self, axis: usize) -> DerivMatrix {
        self.map(|e| e.diff(axis))
    }

    pub fn scale(&self, c: &Rational) -> DerivMatrix {
        self.map(|e| e.scale(c))
    }

    pub fn map(&self, f: impl Fn(&DerivExpr) -> DerivExpr) -> DerivMatrix {
        DerivMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(&f).collect())
                .collect(),
        }
    }

    pub fn symbol(&self) -> PolyMatrix {
        PolyMatrix::new(
            self.n,
            self.entries
                .iter()
                .map(|r| r.iter().map(|e| e.symbol()).collect())
                .collect(),
        )
    }

    pub fn compile(&self) -> Vec<Vec<CompiledExpr>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(|e| e.compile()).collect())
            .collect()
    }
}

/// `G = c_n · B(D)Φ_n` with `c_n` held as the rational multiplier of `π⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreensMatrix {
    pub name: String,
    pub matrix: DerivMatrix,
    pub normalization: Rational,
}

impl GreensMatrix {
    /// `c_n` as a float.
    pub fn constant(&self) -> f64 {
        to_f64(&self.normalization) / std::f64::consts::PI
    }

    pub fn degree(&self) -> Option<i64> {
        let degrees: Vec<Option<i64>> = self
            .matrix
            .entries()
            .iter()
            .flatten()
            .filter(|e| !e.is_zero())
            .map(|e| e.degree())
            .collect();
        let first = *degrees.first()?;
        degrees.iter().all(|d| *d == first).then_some(first).flatten()
    }

    /// Numeric kernel `x ↦ G(x)` and its first derivatives.
    pub fn kernel(&self) -> KernelEval {
        let c = self.constant();
        KernelEval {
            n: self.matrix.n(),
            rows: self.matrix.rows(),
            cols: self.matrix.cols(),
            scale: c,
            g: self.matrix.compile(),
            dg: (0..self.matrix.n())
                .map(|i| self.matrix.diff(i).compile())
                .collect(),
        }
    }
}

/// `Φ_2` normalization `1/(2π)` and `Φ_3` normalization `-1/(4π)`.
pub fn normalization(n: usize) -> Rational {
    match n {
        2 => q(1, 2),
        3 => q(-1, 4),
        _ => panic!("fundamental solution only for n = 2, 3"),
    }
}

/// Floating-point Green's kernel with its gradient.
#[derive(Debug, Clone)]
pub struct KernelEval {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    scale: f64,
    g: Vec<Vec<CompiledExpr>>,
    dg: Vec<Vec<Vec<CompiledExpr>>>,
}

impl KernelEval {
    /// Row-major `G(x)`.
    pub fn g(&self, x: &[f64]) -> Vec<f64> {
        self.g
            .iter()
            .flat_map(|r| r.iter().map(|e| self.scale * e.eval(x)))
            .collect()
    }

    /// Row-major `∂_{x_axis} G(x)`.
    pub fn dg(&self, axis: usize, x: &[f64]) -> Vec<f64> {
        self.dg[axis]
            .iter()
            .flat_map(|r| r.iter().map(|e| self.scale * e.eval(x)))
            .collect()
    }
}

fn d(n: usize, axis: usize, sign: i64) -> DerivExpr {
    DerivExpr::partial(MultiIndex::unit(n, axis)).scale(&Rational::from_integer(sign.into()))
}

pub const GREENS_PRESETS: [&str; 3] = ["dsym-r2", "grad-r2", "grad-r3"];

/// Green's matrix and the operator it inverts.
pub fn greens_preset(name: &str) -> Result<(GreensMatrix, OperatorSymbol), GreensError> {
    use crate::presets::{dsym_operator, grad_operator};
    let (n, entries, op) = match name {
        "dsym-r2" => (
            2,
            vec![
                vec![d(2, 0, 1), d(2, 1, 1), d(2, 0, -1)],
                vec![d(2, 1, -1), d(2, 0, 1), d(2, 1, 1)],
            ],
            dsym_operator(),
        ),
        "grad-r2" => (2, vec![vec![d(2, 0, 1), d(2, 1, 1)]], grad_operator(2)),
        "grad-r3" => (
            3,
            vec![vec![d(3, 0, 1), d(3, 1, 1), d(3, 2, 1)]],
            grad_operator(3),
        ),
        other => return Err(GreensError::UnknownPreset(other.to_string())),
    };
    Ok((
        GreensMatrix {
            name: name.to_string(),
            matrix: DerivMatrix::new(n, entries),
            normalization: normalization(n),
        },
        op,
    ))
}
