//! JSON forms of module results.

use serde_json::{json, Map, Value};

use crate::c6solver::{C6Status, CaseReport};
use crate::cert::{IdentityReport, IdentityStatus};
use crate::greens::DerivMatrix;
use crate::numverify::{CheckReport, SweepReport};
use crate::opsym::{fmt_vector, PolyMatrix, PropertyVerdict, Verdict, Witness};
use crate::presets::Expectation;
use crate::rational::fmt_rational;

fn poly_matrix(m: &PolyMatrix) -> Value {
    json!(m
        .entries()
        .iter()
        .map(|r| r.iter().map(|p| p.to_string()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn deriv_matrix(m: &DerivMatrix) -> Value {
    json!(m
        .entries()
        .iter()
        .map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn witness_text(w: &Witness) -> String {
    match w {
        Witness::Vector(v) => format!("common kernel vector {}", fmt_vector(v)),
        Witness::Frequency { xi, kernel } => {
            format!("at ξ = {} kernel contains {}", fmt_vector(xi), fmt_vector(kernel))
        }
        Witness::Root { fixed_axis, root } => {
            let at = match &root.exact {
                Some(r) => fmt_rational(r),
                None => format!("({}, {}]", fmt_rational(&root.lo), fmt_rational(&root.hi)),
            };
            format!("minor gcd vanishes at t = {at} on the line ξ_{} = 1", fixed_axis + 1)
        }
        Witness::Subspace(basis) => format!(
            "common image spanned by {}",
            basis.iter().map(|v| fmt_vector(v)).collect::<Vec<_>>().join(", ")
        ),
        Witness::Shape(s) => s.clone(),
    }
}

pub fn property_json(operator: &str, v: &PropertyVerdict, passed: bool) -> Value {
    let detail = match &v.verdict {
        Verdict::HoldsCertified { argument } => argument.clone(),
        Verdict::HoldsSampled { samples } => format!("no failure on {samples} sampled frequencies"),
        Verdict::Fails(w) => witness_text(w),
    };
    json!({
        "kind": "property",
        "operator": operator,
        "property": v.property.name(),
        "verdict": v.label(),
        "certified": v.is_certified(),
        "detail": detail,
        "samples": v.samples.len(),
        "notes": v.notes,
        "passed": passed,
    })
}

pub fn identity_json(bundle: &str, r: &IdentityReport, expected: Expectation, meets: bool) -> Value {
    let objects: Map<String, Value> = r
        .objects
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    let mut out = json!({
        "kind": "identity",
        "bundle": bundle,
        "identity": r.name,
        "status": r.status_name(),
        "expected": expected.name(),
        "pointwise_recheck": r.recheck,
        "objects": objects,
        "passed": meets,
    });
    if let IdentityStatus::Refuted { lhs, rhs } = &r.status {
        out["lhs"] = json!(lhs);
        out["rhs"] = json!(rhs);
    }
    out
}

pub fn case_json(r: &CaseReport) -> Value {
    let o = &r.outcome;
    let mut out = json!({
        "kind": "c6",
        "case": r.case,
        "bundle": r.bundle,
        "mode": r.mode.name(),
        "expected": r.expectation.name(),
        "status": o.status_name(),
        "unknowns": o.unknowns,
        "equations": o.equations,
        "rank": o.rank,
        "nullity": o.nullity,
        "verified": o.verified,
        "reversed_order_agrees": o.reversed_agrees,
        "min_dim_m": o.min_dim_m(),
        "strict_implies_weak": r.strict_implies_weak,
        "candidates": r.candidates.iter().map(|c| json!({
            "label": c.label,
            "composite": c.q.to_string(),
            "in_ansatz": c.in_ansatz,
            "solves": c.solves,
        })).collect::<Vec<_>>(),
        "passed": r.meets_expectation(),
    });
    match &o.status {
        C6Status::Feasible { q, factorization } => {
            out["solution"] = json!({
                "q": q.to_string(),
                "dim_m": factorization.dim_m,
                "t": deriv_matrix(&factorization.t),
                "p": poly_matrix(&factorization.p),
            });
        }
        C6Status::Infeasible { lambda } => {
            out["certificate"] = json!({
                "lambda": lambda
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !num_traits::Zero::is_zero(*v))
                    .map(|(i, v)| json!([i, fmt_rational(v)]))
                    .collect::<Vec<_>>(),
                "equations": o.equations,
            });
        }
    }
    out
}

pub fn check_json(r: &CheckReport) -> Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    v["kind"] = json!("numeric");
    v
}

pub fn sweep_json(s: &SweepReport) -> Value {
    let mut v = serde_json::to_value(s).expect("report serializes");
    v["kind"] = json!("sweep");
    v["name"] = json!("main-inequality");
    v
}
