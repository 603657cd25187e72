//! Subcommand pipelines, operator documents and run reports.

mod document;
mod report;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use document::{
    parse_operator_document, CompanionL, DocError, OperatorDocument, ParseError, PolyEntries,
};
pub use report::{case_json, check_json, identity_json, property_json, sweep_json};

use crate::c6solver::{run_bundle, run_case, C6Error};
use crate::cert::{certify_bundle, verify_tp, CertError, RECHECK_SEED};
use crate::greens::greens_preset;
use crate::numverify::{
    cancellation_field, check_cancellation, check_ibp_lemma, check_remainder_bound,
    check_reproduction, check_vanishing_moment, default_sweep, ibp_battery, inequality_sweep,
    key_lemma_field, key_lemma_scaling, make_test_field, theorem_battery, Family, FieldSpec,
    LemmaOrder, NumError, REMAINDER_SAMPLES, REMAINDER_SEED,
};
use crate::opsym::{
    check_canceling_seeded, check_cocanceling, check_injectively_elliptic_seeded, compose_symbols,
    OperatorSymbol, OpsymError, PropertyVerdict, DEFAULT_BUDGET, DEFAULT_SEED,
};
use crate::presets::{bundle, c6_case, Bundle, C6Mode, Expectation, BUNDLES, C6_CASES};

pub const TOOL: &str = "kornhardy";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SUBCOMMANDS: [&str; 5] = [
    "check-operator",
    "verify-identities",
    "solve-c6",
    "verify-inequalities",
    "full-suite",
];

/// Operator presets accepted by `check-operator`.
pub const OPERATOR_PRESETS: [&str; 5] = ["dsym-r2", "grad-r2", "grad-r3", "curl-r3", "open-question-r3"];

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("unknown subcommand `{0}`")]
    Subcommand(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown preset `{0}`")]
    Preset(String),
    #[error("operator document:\n{0}")]
    Document(#[from] DocError),
    #[error(transparent)]
    Operator(#[from] OpsymError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    C6(#[from] C6Error),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepChoice {
    Default,
    #[default]
    None,
}

impl SweepChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "default" => Some(SweepChoice::Default),
            "none" => Some(SweepChoice::None),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepChoice::Default => "default",
            SweepChoice::None => "none",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    pub preset: Option<String>,
    /// Contents of `--operator-file`.
    pub operator_document: Option<String>,
    pub grid_level: u32,
    pub sweep: SweepChoice,
    pub seed: Option<u64>,
    pub mode: Option<C6Mode>,
}

impl Config {
    fn sampling_seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn remainder_seed(&self) -> u64 {
        self.seed.unwrap_or(REMAINDER_SEED)
    }

    fn document(&self) -> Result<Option<OperatorDocument>, DriverError> {
        self.operator_document
            .as_deref()
            .map(|t| parse_operator_document(t).map_err(|e| DriverError::Document(DocError::Parse(e))))
            .transpose()
    }
}

/// One structured report per run; timings stay out of it so repeated runs
/// are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub input_digest: String,
    pub config: BTreeMap<String, Value>,
    pub seeds: BTreeMap<String, u64>,
    pub checks: Vec<Value>,
    pub status: String,
    #[serde(skip)]
    pub timings: Vec<(String, Duration)>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Default)]
struct Collector {
    checks: Vec<Value>,
    passed: bool,
    timings: Vec<(String, Duration)>,
}

impl Collector {
    fn new() -> Self {
        Collector {
            passed: true,
            ..Default::default()
        }
    }

    fn push(&mut self, value: Value, passed: bool, label: String, elapsed: Duration) {
        self.passed &= passed;
        self.checks.push(value);
        self.timings.push((label, elapsed));
    }
}

fn digest(subcommand: &str, config: &BTreeMap<String, Value>, document: Option<&OperatorDocument>) -> String {
    let mut h = Sha256::new();
    h.update(subcommand.as_bytes());
    h.update(serde_json::to_string(config).expect("config serializes").as_bytes());
    if let Some(d) = document {
        h.update(d.serialize().as_bytes());
    }
    hex::encode(h.finalize())
}

/// Runs a subcommand; the report's status is `pass` iff every selected
/// check meets its expectation.
pub fn run_subcommand(name: &str, config: &Config) -> Result<RunReport, DriverError> {
    if !SUBCOMMANDS.contains(&name) {
        return Err(DriverError::Subcommand(name.to_string()));
    }
    if config.preset.is_some() && config.operator_document.is_some() {
        return Err(DriverError::Config("--preset and --operator-file are exclusive".into()));
    }
    let document = config.document()?;
    let mut out = Collector::new();
    match name {
        "check-operator" => check_operator(config, document.as_ref(), &mut out)?,
        "verify-identities" => verify_identities(config, document.as_ref(), &mut out)?,
        "solve-c6" => solve_c6(config, document.as_ref(), &mut out)?,
        "verify-inequalities" => {
            if document.is_some() || config.preset.is_some() {
                return Err(DriverError::Config("verify-inequalities takes no operator".into()));
            }
            verify_inequalities(config, &mut out)?
        }
        _ => {
            if document.is_some() || config.preset.is_some() {
                return Err(DriverError::Config("full-suite runs every preset".into()));
            }
            for p in OPERATOR_PRESETS {
                check_operator(&preset_config(config, p), None, &mut out)?;
            }
            for b in BUNDLES {
                verify_identities(&preset_config(config, b), None, &mut out)?;
            }
            for (case, ..) in C6_CASES {
                solve_c6(&preset_config(config, case), None, &mut out)?;
            }
            let mut inequality = config.clone();
            inequality.sweep = SweepChoice::Default;
            verify_inequalities(&inequality, &mut out)?;
        }
    }

    let mut cfg = BTreeMap::new();
    cfg.insert("preset".to_string(), json!(config.preset));
    cfg.insert(
        "operator_file".to_string(),
        json!(document.as_ref().map(|d| d.name.clone())),
    );
    cfg.insert("grid_level".to_string(), json!(config.grid_level));
    cfg.insert("sweep".to_string(), json!(config.sweep.name()));
    cfg.insert("mode".to_string(), json!(config.mode.map(C6Mode::name)));
    let mut seeds = BTreeMap::new();
    seeds.insert("frequency-sampling".to_string(), config.sampling_seed());
    seeds.insert("identity-recheck".to_string(), RECHECK_SEED);
    seeds.insert("remainder-pairs".to_string(), config.remainder_seed());
    seeds.insert("random-mixture-fields".to_string(), 1);
    Ok(RunReport {
        tool: TOOL,
        version: VERSION,
        subcommand: name.to_string(),
        input_digest: digest(name, &cfg, document.as_ref()),
        config: cfg,
        seeds,
        checks: out.checks,
        status: if out.passed { "pass" } else { "fail" }.to_string(),
        timings: out.timings,
    })
}

fn preset_config(base: &Config, preset: &str) -> Config {
    let mut c = base.clone();
    c.preset = Some(preset.to_string());
    c.mode = None;
    c
}

fn require_preset(config: &Config) -> Result<&str, DriverError> {
    config
        .preset
        .as_deref()
        .ok_or_else(|| DriverError::Config("need --preset or --operator-file".into()))
}

/// Operator and optional companion for `check-operator`.
pub fn operator_preset(name: &str) -> Option<(OperatorSymbol, Option<OperatorSymbol>)> {
    if let Some(b) = bundle(name) {
        return Some((b.a, Some(b.l)));
    }
    greens_preset(name).ok().map(|(_, a)| (a, None))
}

fn check_operator(
    config: &Config,
    document: Option<&OperatorDocument>,
    out: &mut Collector,
) -> Result<(), DriverError> {
    let (label, a, l) = match document {
        Some(d) => (d.name.clone(), d.operator()?, d.cocanceling().transpose()?),
        None => {
            let name = require_preset(config)?;
            let (a, l) = operator_preset(name).ok_or_else(|| DriverError::Preset(name.to_string()))?;
            (name.to_string(), a, l)
        }
    };
    let seed = config.sampling_seed();
    let mut verdicts: Vec<(String, PropertyVerdict, Duration)> = Vec::new();
    let timed = |f: &dyn Fn() -> PropertyVerdict| {
        let start = Instant::now();
        let v = f();
        (v, start.elapsed())
    };
    let (v, t) = timed(&|| check_injectively_elliptic_seeded(&a, DEFAULT_BUDGET, seed));
    verdicts.push((format!("{label}: A"), v, t));
    let (v, t) = timed(&|| check_canceling_seeded(&a, DEFAULT_BUDGET, seed));
    verdicts.push((format!("{label}: A"), v, t));
    if let Some(l) = &l {
        let (v, t) = timed(&|| check_cocanceling(l));
        verdicts.push((format!("{label}: L"), v, t));
        let start = Instant::now();
        let composed = compose_symbols(l, &a)?;
        let zero = composed.is_zero();
        out.push(
            json!({
                "kind": "property",
                "operator": format!("{label}: L∘A"),
                "property": "compose-zero",
                "verdict": if zero { "holds-certified" } else { "fails" },
                "certified": true,
                "detail": if zero { "L(ξ)A(ξ) = 0 as a polynomial matrix".to_string() } else { "L(ξ)A(ξ) has nonzero entries".to_string() },
                "passed": zero,
            }),
            zero,
            format!("{label} compose-zero"),
            start.elapsed(),
        );
    }
    for (operator, v, t) in verdicts {
        let passed = v.holds();
        let tag = format!("{operator} {}", v.property.name());
        out.push(property_json(&operator, &v, passed), passed, tag, t);
    }
    Ok(())
}

fn identity_bundle(config: &Config, document: Option<&OperatorDocument>) -> Result<Bundle, DriverError> {
    match document {
        Some(d) => Ok(d.to_bundle()?),
        None => {
            let name = require_preset(config)?;
            bundle(name).ok_or_else(|| DriverError::Preset(name.to_string()))
        }
    }
}

fn verify_identities(
    config: &Config,
    document: Option<&OperatorDocument>,
    out: &mut Collector,
) -> Result<(), DriverError> {
    let b = identity_bundle(config, document)?;
    let reports = certify_bundle(&b)?;
    for (r, expected) in reports.iter().zip(b.identity_expectations) {
        let meets = match expected {
            Expectation::Verified => r.verified(),
            Expectation::Refuted => !r.verified(),
            _ => true,
        } && r.recheck;
        out.push(
            identity_json(&b.name, r, expected, meets),
            meets,
            format!("{} {}", b.name, r.name),
            r.elapsed,
        );
    }
    if let Some((t, p)) = &b.known_tp {
        let r = verify_tp(&b.greens, &b.k, t, p)?;
        let meets = r.verified() && r.recheck;
        out.push(
            identity_json(&b.name, &r, Expectation::Verified, meets),
            meets,
            format!("{} {}", b.name, r.name),
            r.elapsed,
        );
    }
    Ok(())
}

fn solve_c6(
    config: &Config,
    document: Option<&OperatorDocument>,
    out: &mut Collector,
) -> Result<(), DriverError> {
    let report = match document {
        Some(d) => {
            let b = d.to_bundle()?;
            let mode = config
                .mode
                .ok_or_else(|| DriverError::Config("--mode is required with --operator-file".into()))?;
            let case = format!("{}-{}", d.name, mode.name());
            run_bundle(&b, mode, &case, Expectation::Definitive)?
        }
        None => {
            let name = require_preset(config)?;
            let (b, mode) = match (c6_case(name), config.mode) {
                (Some((_, mode, _)), m) if m.is_none_or(|m| m == mode) => {
                    let report = run_case(name)?;
                    let passed = report.meets_expectation();
                    let elapsed = report.elapsed;
                    out.push(case_json(&report), passed, format!("solve-c6 {name}"), elapsed);
                    return Ok(());
                }
                (Some((b, ..)), Some(m)) => (bundle(b).expect("registered bundle"), m),
                (None, m) => {
                    let b = bundle(name).ok_or_else(|| DriverError::Preset(name.to_string()))?;
                    let m = m.ok_or_else(|| DriverError::Config("--mode is required for a bundle name".into()))?;
                    (b, m)
                }
                (Some(_), None) => unreachable!("handled by the first arm"),
            };
            let case = format!("{}-{}", b.name, mode.name());
            let expectation = C6_CASES
                .iter()
                .find(|c| c.0 == case)
                .map_or(Expectation::Definitive, |c| c.3);
            run_bundle(&b, mode, &case, expectation)?
        }
    };
    let passed = report.meets_expectation();
    let label = format!("solve-c6 {}", report.case);
    let elapsed = report.elapsed;
    out.push(case_json(&report), passed, label, elapsed);
    Ok(())
}

fn verify_inequalities(config: &Config, out: &mut Collector) -> Result<(), DriverError> {
    let level = config.grid_level;
    let push = |r: crate::numverify::CheckReport, out: &mut Collector| {
        let label = format!("{} {}", r.name, r.subject);
        let (passed, t) = (r.passed, r.runtime);
        out.push(check_json(&r), passed, label, t);
    };
    let battery = ibp_battery();
    for u in &battery {
        push(check_ibp_lemma(u, level)?, out);
    }
    for u in &battery {
        push(check_vanishing_moment(u, level)?, out);
    }
    let bump = make_test_field(&FieldSpec::new(Family::RadialBump)).map_err(NumError::from)?;
    push(check_reproduction(&bump, level), out);
    for order in [LemmaOrder::Zeroth, LemmaOrder::First] {
        push(key_lemma_scaling(&key_lemma_field(), order, level)?, out);
        push(check_cancellation(&cancellation_field(), [4.0, 0.0], order, level)?, out);
    }
    push(check_remainder_bound(REMAINDER_SAMPLES, config.remainder_seed()), out);
    if config.sweep == SweepChoice::Default {
        let sweep = inequality_sweep(&theorem_battery(), &default_sweep(), level)?;
        let passed = sweep.passed;
        let t = sweep.runtime;
        out.push(sweep_json(&sweep), passed, "main-inequality sweep".into(), t);
    }
    Ok(())
}
