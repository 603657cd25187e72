use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::cutoff::{CutoffProfile, KernelSplit};
use super::field::{make_test_field, Family, FieldError, FieldSpec, TestField};
use super::grid::{GridSpec, Node, PolarGrid};
use crate::greens::{greens_preset, KernelEval};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("weight power {0} is not integrable at the origin (need w > -2)")]
    Weight(f64),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("degenerate field: both integrals below 1e-14")]
    Degenerate,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("a convergence table needs at least two levels")]
    Levels,
}

/// Exponents with `b = q(1+a) - 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityParams {
    pub q: f64,
    pub a: f64,
    pub b: f64,
    /// `1 ≤ a < 2`.
    pub theorem_regime: bool,
}

impl InequalityParams {
    pub fn new(q: f64, a: f64) -> Result<Self, NumError> {
        if !(1.0..2.0).contains(&q) {
            return Err(NumError::Params(format!("q = {q} outside [1, 2)")));
        }
        let b = q * (1.0 + a) - 2.0;
        if a <= -2.0 || b <= -2.0 {
            return Err(NumError::Params(format!("need a, b > -2 (a = {a}, b = {b})")));
        }
        Ok(InequalityParams {
            q,
            a,
            b,
            theorem_regime: (1.0..2.0).contains(&a),
        })
    }
}

pub const SWEEP_A: [f64; 5] = [1.0, 1.25, 1.5, 1.75, 1.9];
pub const SWEEP_Q: [f64; 3] = [1.0, 1.2, 1.5];

pub fn default_sweep() -> Vec<InequalityParams> {
    SWEEP_A
        .iter()
        .flat_map(|&a| SWEEP_Q.iter().map(move |&q| InequalityParams::new(q, a).expect("admissible")))
        .collect()
}

/// Per-level values of one check and its verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub subject: String,
    pub params: BTreeMap<String, f64>,
    pub levels: Vec<f64>,
    pub extrapolated: Option<f64>,
    pub order: Option<f64>,
    pub metric: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl CheckReport {
    fn new(name: &str, subject: impl Into<String>, levels: Vec<f64>) -> Self {
        let table = convergence_report(&levels).ok();
        CheckReport {
            name: name.to_string(),
            subject: subject.into(),
            params: BTreeMap::new(),
            extrapolated: table.as_ref().map(|t| t.extrapolated),
            order: table.as_ref().and_then(|t| t.order),
            notes: table.map(|t| t.notes).unwrap_or_default(),
            levels,
            metric: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            runtime: Duration::ZERO,
        }
    }

    fn param(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.to_string(), v);
        self
    }

    fn verdict(mut self, metric: f64, tolerance: f64, passed: bool, start: Instant) -> Self {
        self.metric = metric;
        self.tolerance = tolerance;
        self.passed = passed;
        self.runtime = start.elapsed();
        self
    }
}

/// Richardson table for a sequence of refinements by a factor of two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub order: Option<f64>,
    pub notes: Vec<String>,
}

const NOISE: f64 = 1e-12;

pub fn convergence_report(values: &[f64]) -> Result<Convergence, NumError> {
    let k = values.len();
    if k < 2 {
        return Err(NumError::Levels);
    }
    let mut notes = Vec::new();
    let d1 = values[k - 1] - values[k - 2];
    let order = (k >= 3)
        .then(|| {
            let d0 = values[k - 2] - values[k - 3];
            if d0.abs() < NOISE || d1.abs() < NOISE {
                notes.push("differences at the noise floor; order not estimated".to_string());
                None
            } else {
                if d0.signum() != d1.signum() {
                    notes.push("non-monotone refinement sequence".to_string());
                }
                Some((d0.abs() / d1.abs()).log2())
            }
        })
        .flatten();
    let extrapolated = match order {
        Some(p) if p > 0.5 => values[k - 1] + d1 / (2f64.powf(p) - 1.0),
        _ => values[k - 1],
    };
    Ok(Convergence {
        values: values.to_vec(),
        extrapolated,
        order,
        notes,
    })
}

/// Radial cells of width `feature / GRID_DIVISIONS` at level 0.
pub const GRID_DIVISIONS: f64 = 16.0;

/// Origin-centered grid covering the support of `u`.
pub fn field_grid(u: &TestField, level: u32) -> PolarGrid {
    PolarGrid::new(field_grid_spec(u), level)
}

pub fn field_grid_spec(u: &TestField) -> GridSpec {
    GridSpec::disk([0.0, 0.0], u.outer_radius(), u.feature_size() / GRID_DIVISIONS)
}

/// `∫|x|^w |f|^q` over the grid, raised to `1/q` when `root` is set.
pub fn quad_weighted<F>(f: F, w: f64, q: f64, grid: &PolarGrid, root: bool) -> Result<f64, NumError>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    if w <= -2.0 {
        return Err(NumError::Weight(w));
    }
    let center = grid.spec.center;
    let s = grid.integrate_scalar(|n| {
        let v = f(n.x);
        if v == 0.0 {
            return 0.0;
        }
        let r = (n.x[0] - center[0]).hypot(n.x[1] - center[1]);
        r.powf(w) * v.abs().powf(q)
    });
    Ok(if root { s.powf(1.0 / q) } else { s })
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn norm3(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub const IBP_TOLERANCE: f64 = 1e-3;

/// `∫|u| / ∫|x||∂₁u|` at `level` and `level + 1`; passes when the finer
/// ratio is at most `1 + 10⁻³`.
pub fn check_ibp_lemma(u: &TestField, level: u32) -> Result<CheckReport, NumError> {
    let start = Instant::now();
    let grid = field_grid(u, level);
    let mut ratios = Vec::new();
    for g in [grid.clone(), grid.refined()] {
        let s = g.integrate(2, |n, out| {
            let (v, j) = u.eval(n.x);
            out[0] = norm2(v);
            out[1] = n.r * j[0][0].hypot(j[1][0]);
        });
        if s[0] < 1e-14 && s[1] < 1e-14 {
            return Err(NumError::Degenerate);
        }
        ratios.push(s[0] / s[1]);
    }
    let fine = ratios[1];
    let change = (ratios[1] - ratios[0]).abs() / ratios[1];
    let mut report = CheckReport::new("ibp-lemma", u.to_string(), ratios)
        .param("level", f64::from(level))
        .param("refinement-change", change);
    report.notes.push(format!("ratio changes by {:.2e} under refinement", change));
    Ok(report.verdict(fine, 1.0 + IBP_TOLERANCE, fine.is_finite() && fine <= 1.0 + IBP_TOLERANCE, start))
}

/// `(LHS, RHS)` of the main inequality for each parameter set on one grid.
pub fn theorem_sides(u: &TestField, params: &[InequalityParams], grid: &PolarGrid) -> Vec<(f64, f64)> {
    let p = params.len();
    let sums = grid.integrate(2 * p, |n, out| {
        let (v, j) = u.eval(n.x);
        let un = norm2(v);
        let off = 0.5 * (j[0][1] + j[1][0]);
        let dn = (j[0][0] * j[0][0] + 2.0 * off * off + j[1][1] * j[1][1]).sqrt();
        if un == 0.0 && dn == 0.0 {
            return;
        }
        for (k, pr) in params.iter().enumerate() {
            out[2 * k] = n.r.powf(pr.b) * un.powf(pr.q);
            out[2 * k + 1] = n.r.powf(pr.a) * dn;
        }
    });
    params
        .iter()
        .enumerate()
        .map(|(k, pr)| (sums[2 * k].powf(1.0 / pr.q), sums[2 * k + 1]))
        .collect()
}

pub const REFINEMENT_TOLERANCE: f64 = 0.05;
pub const INVARIANCE_TOLERANCE: f64 = 0.01;
/// Rotation applied in the invariance check.
pub const ROTATION_ANGLE: f64 = 0.6;

/// Ratio for one field and parameter set under refinement, dilation by 2
/// and rotation.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub field: String,
    pub params: InequalityParams,
    pub ratio: f64,
    pub ratio_refined: f64,
    pub ratio_dilated: f64,
    pub ratio_rotated: f64,
    pub refinement_change: f64,
    pub dilation_change: f64,
    pub rotation_change: f64,
    pub counterexample_flag: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSupremum {
    pub a: f64,
    pub q: f64,
    pub b: f64,
    pub supremum: f64,
    pub field: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub level: u32,
    pub entries: Vec<SweepEntry>,
    pub suprema: Vec<SweepSupremum>,
    pub passed: bool,
    #[serde(skip)]
    pub runtime: Duration,
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Main inequality over a battery of fields and parameter sets. The dilated
/// field is integrated with the undilated cell width, so invariance also
/// exercises the quadrature.
pub fn inequality_sweep(
    fields: &[TestField],
    params: &[InequalityParams],
    level: u32,
) -> Result<SweepReport, NumError> {
    let start = Instant::now();
    let mut entries = Vec::new();
    for u in fields {
        let spec = field_grid_spec(u);
        let base = PolarGrid::new(spec.clone(), level);
        let at = theorem_sides(u, params, &base);
        let refined = theorem_sides(u, params, &base.refined());
        let v = u.dilated(2.0)?;
        let mut dspec = spec.clone();
        dspec.r_max = v.outer_radius();
        let dilated = theorem_sides(&v, params, &PolarGrid::new(dspec, level));
        let w = u.rotated(ROTATION_ANGLE);
        let mut rspec = spec.clone();
        rspec.r_max = w.outer_radius();
        let rotated = theorem_sides(&w, params, &PolarGrid::new(rspec, level));
        for (k, pr) in params.iter().enumerate() {
            let ratio_of = |s: (f64, f64)| s.0 / s.1;
            let flag = at[k].1 < 1e-14 && at[k].0 > 0.0;
            let (r0, r1, rd, rr) = (
                ratio_of(at[k]),
                ratio_of(refined[k]),
                ratio_of(dilated[k]),
                ratio_of(rotated[k]),
            );
            let (cr, cd, crot) = (rel_change(r0, r1), rel_change(r0, rd), rel_change(r0, rr));
            let finite = [r0, r1, rd, rr].iter().all(|r| r.is_finite() && *r > 0.0);
            entries.push(SweepEntry {
                field: u.to_string(),
                params: *pr,
                ratio: r0,
                ratio_refined: r1,
                ratio_dilated: rd,
                ratio_rotated: rr,
                refinement_change: cr,
                dilation_change: cd,
                rotation_change: crot,
                counterexample_flag: flag,
                passed: finite
                    && !flag
                    && cr < REFINEMENT_TOLERANCE
                    && cd < INVARIANCE_TOLERANCE
                    && crot < INVARIANCE_TOLERANCE,
            });
        }
    }
    let suprema = params
        .iter()
        .map(|pr| {
            let best = entries
                .iter()
                .filter(|e| e.params == *pr)
                .max_by(|x, y| x.ratio_refined.total_cmp(&y.ratio_refined))
                .expect("non-empty battery");
            SweepSupremum {
                a: pr.a,
                q: pr.q,
                b: pr.b,
                supremum: best.ratio_refined,
                field: best.field.clone(),
            }
        })
        .collect();
    Ok(SweepReport {
        level,
        passed: entries.iter().all(|e| e.passed),
        entries,
        suprema,
        runtime: start.elapsed(),
    })
}

/// Single-field form of the sweep.
pub fn check_main_inequality(
    u: &TestField,
    params: InequalityParams,
    level: u32,
) -> Result<CheckReport, NumError> {
    let start = Instant::now();
    let sweep = inequality_sweep(std::slice::from_ref(u), &[params], level)?;
    let e = &sweep.entries[0];
    let mut report = CheckReport::new("main-inequality", u.to_string(), vec![e.ratio, e.ratio_refined])
        .param("a", params.a)
        .param("q", params.q)
        .param("b", params.b)
        .param("dilation-change", e.dilation_change)
        .param("rotation-change", e.rotation_change);
    if e.counterexample_flag {
        report
            .notes
            .push("right-hand side vanishes with nonzero left-hand side: potential counterexample".into());
    }
    Ok(report.verdict(e.refinement_change, REFINEMENT_TOLERANCE, e.passed, start))
}

/// Fields for the integration-by-parts lemma.
pub fn ibp_battery() -> Vec<TestField> {
    let specs = [
        FieldSpec::new(Family::RadialBump),
        FieldSpec::new(Family::RadialBump).vector([0.0, 1.0]).radius(2.0),
        FieldSpec::new(Family::OscillatoryBump),
        FieldSpec::new(Family::OscillatoryBump).vector([1.0, 3.0]),
        FieldSpec::new(Family::RigidPerturbation),
        FieldSpec::new(Family::TranslatedBump),
        FieldSpec::new(Family::TranslatedBump).center([2.0, -1.0]).vector([0.6, 0.8]),
        FieldSpec::new(Family::RandomMixture).seed(1),
        FieldSpec::new(Family::RandomMixture).seed(2),
        FieldSpec::new(Family::RandomMixture).seed(3),
        FieldSpec::new(Family::RandomMixture).seed(4),
    ];
    specs.iter().map(|s| make_test_field(s).expect("valid battery field")).collect()
}

/// Fields for the main inequality sweep.
pub fn theorem_battery() -> Vec<TestField> {
    let specs = [
        FieldSpec::new(Family::RadialBump),
        FieldSpec::new(Family::OscillatoryBump),
        FieldSpec::new(Family::RigidPerturbation),
        FieldSpec::new(Family::TranslatedBump).center([3.0, 1.0]),
        FieldSpec::new(Family::RandomMixture).seed(1),
        FieldSpec::new(Family::RandomMixture).seed(2),
    ];
    specs.iter().map(|s| make_test_field(s).expect("valid battery field")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaOrder {
    Zeroth,
    First,
}

impl LemmaOrder {
    pub fn name(self) -> &'static str {
        match self {
            LemmaOrder::Zeroth => "zeroth",
            LemmaOrder::First => "first",
        }
    }
}

fn dsym_kernel() -> KernelEval {
    greens_preset("dsym-r2").expect("registered preset").0.kernel()
}

/// `(|∫ k(y) A(D)u(y) ρ(|y|/|x|) dy|, ∫_{|x|/4≤|y|≤|x|/2} |A(D)u|, ∫ |k(y) A(D)u(y)| ρ dy)`
/// with `k = Id` (zeroth order) or `k = (y·D)G(x)` (first order).
fn key_lemma_integrals(
    u: &TestField,
    x: [f64; 2],
    rho: &CutoffProfile,
    order: LemmaOrder,
    grid: &PolarGrid,
) -> (f64, f64, f64) {
    let rx = norm2(x);
    let (lo, hi) = (rho.plateau * rx, rho.support * rx);
    let kernel = dsym_kernel();
    let dg = [kernel.dg(0, &x), kernel.dg(1, &x)];
    let dim = match order {
        LemmaOrder::Zeroth => 3,
        LemmaOrder::First => 2,
    };
    let s = grid.integrate(dim + 2, |n: &Node, out| {
        let au = u.a_of_d(n.x);
        if au == [0.0; 3] {
            return;
        }
        let r = n.r;
        if (lo..=hi).contains(&r) {
            out[dim] = norm3(&au);
        }
        let weight = rho.value(r / rx);
        if weight == 0.0 {
            return;
        }
        let mut k = [0.0; 3];
        match order {
            LemmaOrder::Zeroth => k = au,
            LemmaOrder::First => {
                for i in 0..2 {
                    for c in 0..3 {
                        k[i] += (n.x[0] * dg[0][3 * i + c] + n.x[1] * dg[1][3 * i + c]) * au[c];
                    }
                }
            }
        }
        for c in 0..dim {
            out[c] = weight * k[c];
        }
        out[dim + 1] = weight * norm3(&k[..dim]);
    });
    (norm3(&s[..dim]), s[dim], s[dim + 1])
}

fn lemma_grid_spec(u: &TestField, x: [f64; 2], h: f64, rho: &CutoffProfile) -> GridSpec {
    let rx = norm2(x);
    GridSpec::disk([0.0, 0.0], u.outer_radius().max(rho.support * rx), h)
        .with_breaks(&[rho.plateau * rx, rho.support * rx])
}

/// `lhs / rhs` with `rhs = (1 or 1/|x|)·∫_{annulus}|A(D)u|` at two levels.
pub fn check_key_lemma(
    u: &TestField,
    x: [f64; 2],
    rho: &CutoffProfile,
    order: LemmaOrder,
    level: u32,
    h: f64,
) -> Result<CheckReport, NumError> {
    let start = Instant::now();
    let rx = norm2(x);
    if rx == 0.0 {
        return Err(NumError::Precondition("x = 0".into()));
    }
    let factor = match order {
        LemmaOrder::Zeroth => 1.0,
        LemmaOrder::First => 1.0 / rx,
    };
    let grid = PolarGrid::new(lemma_grid_spec(u, x, h, rho), level);
    let mut ratios = Vec::new();
    for g in [grid.clone(), grid.refined()] {
        let (lhs, annulus, _) = key_lemma_integrals(u, x, rho, order, &g);
        if annulus < 1e-14 {
            return Err(NumError::Precondition(
                "field vanishes on the annulus |x|/4 <= |y| <= |x|/2".into(),
            ));
        }
        ratios.push(lhs / (factor * annulus));
    }
    let change = rel_change(ratios[0], ratios[1]);
    let fine = ratios[1];
    let report = CheckReport::new(&format!("key-lemma-{}", order.name()), u.to_string(), ratios)
        .param("x1", x[0])
        .param("x2", x[1])
        .param("refinement-change", change);
    Ok(report.verdict(fine, f64::INFINITY, fine.is_finite(), start))
}

pub const KEY_LEMMA_RADII: [f64; 3] = [4.0, 8.0, 16.0];
pub const KEY_LEMMA_SCALE_TOLERANCE: f64 = 0.10;

/// Field for the key-lemma checks: a bump of radius 3 whose support meets
/// both the inner disk and the annulus for `x = (4, 0)`. It sits off-center so
/// the zeroth-order integral does not vanish by symmetry.
pub fn key_lemma_field() -> TestField {
    make_test_field(
        &FieldSpec::new(Family::RadialBump)
            .radius(3.0)
            .center([0.5, 0.25])
            .vector([1.0, 0.5]),
    )
    .expect("valid field")
}

/// Ratios at `|x| ∈ {4, 8, 16}` with `u` dilated by `|x|/4` and a fixed cell
/// width; passes when finite and within 10% of each other.
pub fn key_lemma_scaling(
    u: &TestField,
    order: LemmaOrder,
    level: u32,
) -> Result<CheckReport, NumError> {
    let start = Instant::now();
    let rho = CutoffProfile::default();
    let h = u.feature_size() / GRID_DIVISIONS;
    let mut ratios = Vec::new();
    let mut notes = Vec::new();
    for &rx in &KEY_LEMMA_RADII {
        let v = u.dilated(rx / KEY_LEMMA_RADII[0])?;
        let r = check_key_lemma(&v, [rx, 0.0], &rho, order, level, h)?;
        notes.push(format!("|x| = {rx}: ratio {:.6e} (refined {:.6e})", r.levels[0], r.levels[1]));
        ratios.push(r.levels[1]);
    }
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    let spread = (max - min) / max;
    let (d1, d2) = rho.derivative_bounds();
    let mut report = CheckReport::new(
        &format!("key-lemma-{}-scaling", order.name()),
        u.to_string(),
        ratios,
    )
    .param("constant", max)
    .param("rho-d1-sup", d1)
    .param("rho-d2-sup", d2);
    report.notes = notes;
    let ok = max.is_finite() && min > 0.0 && spread < KEY_LEMMA_SCALE_TOLERANCE;
    Ok(report.verdict(spread, KEY_LEMMA_SCALE_TOLERANCE, ok, start))
}

pub const CANCELLATION_TOLERANCE: f64 = 1e-6;

/// With `u` supported in `|y| ≤ |x|/4` the weighted integral vanishes;
/// reports `|∫ k A(D)u ρ| / ∫ |k A(D)u| ρ`.
pub fn check_cancellation(
    u: &TestField,
    x: [f64; 2],
    order: LemmaOrder,
    level: u32,
) -> Result<CheckReport, NumError> {
    let start = Instant::now();
    let rho = CutoffProfile::default();
    if u.outer_radius() > rho.plateau * norm2(x) {
        return Err(NumError::Precondition("support must lie in |y| <= |x|/4".into()));
    }
    let h = u.feature_size() / GRID_DIVISIONS;
    let grid = PolarGrid::new(lemma_grid_spec(u, x, h, &rho), level);
    let mut rel = Vec::new();
    for g in [grid.clone(), grid.refined()] {
        let (lhs, _, unsigned) = key_lemma_integrals(u, x, &rho, order, &g);
        if unsigned < 1e-14 {
            return Err(NumError::Degenerate);
        }
        rel.push(lhs / unsigned);
    }
    let worst = rel.iter().copied().fold(0.0, f64::max);
    let report = CheckReport::new(&format!("cancellation-{}", order.name()), u.to_string(), rel)
        .param("x1", x[0])
        .param("x2", x[1]);
    Ok(report.verdict(worst, CANCELLATION_TOLERANCE, worst < CANCELLATION_TOLERANCE, start))
}

pub fn cancellation_field() -> TestField {
    make_test_field(
        &FieldSpec::new(Family::RadialBump)
            .radius(0.8)
            .center([0.1, 0.05])
            .vector([0.6, -0.8]),
    )
    .expect("valid field")
}

pub const MOMENT_TOLERANCE: f64 = 1e-8;

/// `|∫ A(D)u| / ∫ |A(D)u|` on a grid centered at the field, judged on the
/// refined level.
pub fn check_vanishing_moment(u: &TestField, level: u32) -> Result<CheckReport, NumError> {
    let start = Instant::now();
    let spec = GridSpec::disk(u.center, u.local_radius(), u.feature_size() / GRID_DIVISIONS);
    let grid = PolarGrid::new(spec, level);
    let mut rel = Vec::new();
    for g in [grid.clone(), grid.refined()] {
        let s = g.integrate(4, |n, out| {
            let au = u.a_of_d(n.x);
            out[..3].copy_from_slice(&au);
            out[3] = norm3(&au);
        });
        if s[3] < 1e-14 {
            return Err(NumError::Degenerate);
        }
        rel.push(norm3(&s[..3]) / s[3]);
    }
    let fine = rel[1];
    let report = CheckReport::new("vanishing-moment", u.to_string(), rel);
    Ok(report.verdict(fine, MOMENT_TOLERANCE, fine < MOMENT_TOLERANCE, start))
}

pub const REMAINDER_SAMPLES: usize = 10_000;
pub const REMAINDER_SEED: u64 = 0x9e37_79b9;
pub const REMAINDER_TOLERANCE: f64 = 0.10;

/// Largest `|K(x,y)|·|x|³/|y|²` over deterministic pairs with
/// `0 < |y| < |x|/2`, split by regime `(all, |y|/|x| ≤ 1/8, |y|/|x| ≥ 1/4)`.
pub fn remainder_supremum(samples: usize, seed: u64) -> [f64; 3] {
    let split = KernelSplit::new(dsym_kernel(), CutoffProfile::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<([f64; 2], [f64; 2], f64)> = (0..samples)
        .map(|_| {
            let r = rng.gen_range(0.5f64.ln()..20f64.ln()).exp();
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let t: f64 = rng.gen_range(1e-4..0.5);
            let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            (
                [r * th.cos(), r * th.sin()],
                [r * t * ph.cos(), r * t * ph.sin()],
                t,
            )
        })
        .collect();
    let mut sup = [0.0f64; 3];
    for (x, y, t) in pairs {
        let k = split.far(&x, &y);
        let rx = norm2(x);
        let ry = norm2(y);
        let v = norm3(&k) * rx.powi(3) / (ry * ry);
        sup[0] = sup[0].max(v);
        if t <= 0.125 {
            sup[1] = sup[1].max(v);
        }
        if t >= 0.25 {
            sup[2] = sup[2].max(v);
        }
    }
    sup
}

pub fn check_remainder_bound(samples: usize, seed: u64) -> CheckReport {
    let start = Instant::now();
    let base = remainder_supremum(samples, seed);
    let more = remainder_supremum(4 * samples, seed);
    let change = rel_change(base[0], more[0]);
    let ok = base[0].is_finite() && more[0].is_finite() && change < REMAINDER_TOLERANCE;
    let report = CheckReport::new("remainder-bound", "dsym-r2 kernel", vec![base[0], more[0]])
        .param("samples", samples as f64)
        .param("seed", seed as f64)
        .param("sup-deep", more[1])
        .param("sup-annulus", more[2]);
    report.verdict(change, REMAINDER_TOLERANCE, ok, start)
}

pub const REPRODUCTION_TOLERANCE: f64 = 1e-2;
/// Cell width of the probe-centered grids is `feature / REPRODUCTION_DIVISIONS`.
pub const REPRODUCTION_DIVISIONS: f64 = 8.0;

/// 5×5 lattice of probes across the inner part of the support.
pub fn reproduction_probes(u: &TestField) -> Vec<[f64; 2]> {
    let s = 0.6 * u.local_radius();
    let mut out = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            let t = |k: usize| (k as f64 - 2.0) / 2.0 * s;
            // a slight shear keeps probes off the symmetry axes
            out.push([u.center[0] + t(i) + 0.013 * s, u.center[1] + t(j) + 0.007 * s]);
        }
    }
    out
}

/// `max |u(x) - ∫G(x-y)A(D)u(y)dy| / max|u|` over the probes, with the
/// kernel carrying the normalization `1/(2π)`.
pub fn reproduction_error(u: &TestField, level: u32) -> f64 {
    let kernel = dsym_kernel();
    let probes = reproduction_probes(u);
    let h = u.feature_size() / REPRODUCTION_DIVISIONS;
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in probes {
        let dist = (p[0] - u.center[0]).hypot(p[1] - u.center[1]);
        let grid = PolarGrid::new(GridSpec::disk(p, dist + u.local_radius(), h), level);
        let s = grid.integrate(2, |n, out| {
            let au = u.a_of_d(n.x);
            if au == [0.0; 3] {
                return;
            }
            let g = kernel.g(&[p[0] - n.x[0], p[1] - n.x[1]]);
            for i in 0..2 {
                out[i] = (0..3).map(|c| g[3 * i + c] * au[c]).sum();
            }
        });
        let v = u.value(p);
        scale = scale.max(norm2(v));
        err = err.max(norm2([v[0] - s[0], v[1] - s[1]]));
    }
    err / scale
}

/// Passes when the error is below `10⁻²` and at least halves under
/// refinement (or reaches the noise floor).
pub fn check_reproduction(u: &TestField, level: u32) -> CheckReport {
    let start = Instant::now();
    let e0 = reproduction_error(u, level);
    let e1 = reproduction_error(u, level + 1);
    let decreasing = e1 <= 0.5 * e0 || e1 < NOISE;
    let mut report = CheckReport::new("reproduction", u.to_string(), vec![e0, e1])
        .param("level", f64::from(level))
        .param("probes", 25.0);
    if e1 < NOISE && e1 > 0.5 * e0 {
        report.notes.push("refined error at the noise floor".into());
    }
    report.verdict(e0, REPRODUCTION_TOLERANCE, e0 < REPRODUCTION_TOLERANCE && decreasing, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn radial() -> TestField {
        make_test_field(&FieldSpec::new(Family::RadialBump)).unwrap()
    }

    #[test]
    fn params_coupling() {
        let p = InequalityParams::new(1.5, 1.0).unwrap();
        assert_eq!(p.b, 1.0);
        assert!((2.0 + p.b) / p.q == 1.0 + p.a && p.theorem_regime);
        assert!(InequalityParams::new(2.0, 1.0).is_err());
        assert!(InequalityParams::new(1.0, -2.5).is_err());
        assert!(!InequalityParams::new(1.0, 0.5).unwrap().theorem_regime);
        assert_eq!(default_sweep().len(), 15);
    }

    #[test]
    fn quad_weighted_examples() {
        let tiny = PolarGrid::new(GridSpec::disk([0.0, 0.0], 0.01, 0.005), 0);
        let area = quad_weighted(|_| 1.0, 0.0, 1.0, &tiny, false).unwrap();
        assert!((area - PI * 1e-4).abs() < 1e-15);
        let spec = GridSpec::disk([0.0, 0.0], 2.5, 0.3).with_breaks(&[1.0, 2.0]);
        let g = PolarGrid::new(spec, 0);
        let annulus = |x: [f64; 2]| if (1.0..=2.0).contains(&x[0].hypot(x[1])) { 1.0 } else { 0.0 };
        let v = quad_weighted(annulus, -1.0, 1.0, &g, false).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-12);
        assert!(matches!(quad_weighted(annulus, -2.0, 1.0, &g, false), Err(NumError::Weight(_))));
    }

    #[test]
    fn quad_weighted_converges_at_order_two_or_better() {
        // ∫_{|x|<2} |x|^{-1} e^{-|x|} dx = 2π(1 - e^{-2})
        let exact = 2.0 * PI * (1.0 - (-2.0f64).exp());
        let mut spec = GridSpec::disk([0.0, 0.0], 2.0, 1.0).without_geometric();
        spec.gl_order = 1;
        let values: Vec<f64> = (0..3)
            .map(|l| {
                let g = PolarGrid::new(spec.clone(), l);
                quad_weighted(|x| (-x[0].hypot(x[1])).exp(), -1.0, 1.0, &g, false).unwrap()
            })
            .collect();
        let table = convergence_report(&values).unwrap();
        assert!(table.order.unwrap() >= 1.9, "{table:?}");
        assert!((table.extrapolated - exact).abs() < (values[2] - exact).abs());
    }

    #[test]
    fn convergence_of_constant_is_exact() {
        let t = convergence_report(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(t.extrapolated, 2.0);
        assert!(t.order.is_none() && !t.notes.is_empty());
        assert!(matches!(convergence_report(&[1.0]), Err(NumError::Levels)));
    }

    #[test]
    fn ibp_radial_and_translated() {
        let r = check_ibp_lemma(&radial(), 0).unwrap();
        assert!(r.passed && r.metric < 1.0);
        let far = make_test_field(&FieldSpec::new(Family::TranslatedBump)).unwrap();
        let t = check_ibp_lemma(&far, 0).unwrap();
        assert!(t.passed && t.metric < 1.0);
        assert!(t.params["refinement-change"] < 0.01);
    }

    #[test]
    fn ibp_zero_field_is_degenerate() {
        let mut zero = radial();
        zero.components[0].amplitude = 0.0;
        assert!(matches!(check_ibp_lemma(&zero, 0), Err(NumError::Degenerate)));
    }

    #[test]
    fn main_inequality_examples() {
        let r = check_main_inequality(&radial(), InequalityParams::new(1.0, 1.0).unwrap(), 0).unwrap();
        assert!(r.passed, "{r:?}");
        let rigid = make_test_field(&FieldSpec::new(Family::RigidPerturbation)).unwrap();
        let s = check_main_inequality(&rigid, InequalityParams::new(1.2, 1.5).unwrap(), 0).unwrap();
        assert!(s.passed && s.levels[1].is_finite(), "{s:?}");
        assert!(s.params["dilation-change"] < INVARIANCE_TOLERANCE);
    }

    #[test]
    fn cancellation_and_moments() {
        let u = cancellation_field();
        for order in [LemmaOrder::Zeroth, LemmaOrder::First] {
            let r = check_cancellation(&u, [4.0, 0.0], order, 0).unwrap();
            assert!(r.passed, "{r:?}");
        }
        assert!(check_cancellation(&key_lemma_field(), [4.0, 0.0], LemmaOrder::First, 0).is_err());
        assert!(check_vanishing_moment(&key_lemma_field(), 0).unwrap().passed);
    }

    #[test]
    fn key_lemma_precondition() {
        let u = cancellation_field();
        let rho = CutoffProfile::default();
        let r = check_key_lemma(&u, [4.0, 0.0], &rho, LemmaOrder::First, 0, 0.05);
        assert!(matches!(r, Err(NumError::Precondition(_))));
    }

    #[test]
    fn remainder_regimes_bounded() {
        let s = remainder_supremum(2000, 7);
        assert!(s.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(s[0] >= s[1] && s[0] >= s[2]);
    }
}
