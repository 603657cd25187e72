//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line and then asserts it.
//!
//! Run with `cargo test -p kornhardy --test acceptance -- --nocapture`.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use kornhardy::c6solver::{build_c6_system, run_case, solve_feasibility, C6Status, CompositeQ};
use kornhardy::cert::certify_bundle;
use kornhardy::numverify::{
    cancellation_field, check_cancellation, check_ibp_lemma, check_remainder_bound, check_reproduction,
    default_sweep, ibp_battery, inequality_sweep, key_lemma_field, key_lemma_scaling, make_test_field,
    theorem_battery, Family, FieldSpec, LemmaOrder, INVARIANCE_TOLERANCE, REFINEMENT_TOLERANCE, REMAINDER_SAMPLES,
    REMAINDER_SEED, SWEEP_A, SWEEP_Q,
};
use kornhardy::opsym::{check_canceling, check_cocanceling, check_injectively_elliptic, DEFAULT_BUDGET};
use kornhardy::presets::{bundle, grad_operator, C6Mode};

// Criteria run one at a time so the wall-clock limits measure a single check.
static SERIAL: Mutex<()> = Mutex::new(());

fn report(n: u32, title: &str, limit: Option<Duration>, start: Instant, failures: &[String]) {
    let elapsed = start.elapsed();
    let mut failures = failures.to_vec();
    if let Some(limit) = limit {
        if elapsed > limit {
            failures.push(format!("took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs()));
        }
    }
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "{verdict} criterion {n}: {title} ({:.2}s){}",
        elapsed.as_secs_f64(),
        if failures.is_empty() { String::new() } else { format!(" -- {}", failures.join("; ")) }
    );
    assert!(failures.is_empty(), "criterion {n} failed: {}", failures.join("; "));
}

fn require(failures: &mut Vec<String>, ok: bool, what: impl Into<String>) {
    if !ok {
        failures.push(what.into());
    }
}

#[test]
fn criterion_1_symbolic_identities() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let b = bundle("dsym-r2").unwrap();
    let reports = certify_bundle(&b).unwrap();
    let mut failures = Vec::new();
    require(&mut failures, reports.len() == 5, format!("{} identities", reports.len()));
    for r in &reports {
        require(&mut failures, r.verified(), format!("{} is {}", r.name, r.status_name()));
        require(&mut failures, r.recheck, format!("{} pointwise re-check disagrees", r.name));
    }
    report(1, "dsym-r2 identity suite", Some(Duration::from_secs(5)), start, &failures);
}

#[test]
fn criterion_2_property_checks() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut failures = Vec::new();
    let b = bundle("dsym-r2").unwrap();
    let ell = check_injectively_elliptic(&b.a, DEFAULT_BUDGET);
    require(&mut failures, ell.is_certified(), format!("dsym-r2 elliptic: {}", ell.label()));
    let can = check_canceling(&b.a, DEFAULT_BUDGET);
    require(&mut failures, can.is_certified(), format!("dsym-r2 canceling: {}", can.label()));
    let coc = check_cocanceling(&b.l);
    require(&mut failures, coc.is_certified(), format!("dsym-r2 L cocanceling: {}", coc.label()));
    let grad = grad_operator(3);
    let ell = check_injectively_elliptic(&grad, DEFAULT_BUDGET);
    require(&mut failures, ell.holds(), format!("grad-r3 elliptic: {}", ell.label()));
    let can = check_canceling(&grad, DEFAULT_BUDGET);
    require(&mut failures, can.is_certified(), format!("grad-r3 canceling: {}", can.label()));
    report(2, "operator property checks", Some(Duration::from_secs(5)), start, &failures);
}

#[test]
fn criterion_3_c6_solver() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut failures = Vec::new();

    let grad = run_case("grad-r2-strict").unwrap();
    require(&mut failures, grad.outcome.is_feasible(), "grad-r2-strict not feasible");
    let b = bundle("grad-r2").unwrap();
    let (t, p) = b.known_tp.clone().unwrap();
    let sys = build_c6_system(&b.a, &b.l, &b.k, &b.greens, C6Mode::Strict).unwrap();
    require(&mut failures, sys.contains(&CompositeQ::product(&t, &p)), "known T P not in solution set");
    let dims = match &grad.outcome.status {
        C6Status::Feasible { factorization, .. } => Some(factorization.dim_m),
        C6Status::Infeasible { .. } => None,
    };
    let min_dim = grad.outcome.min_dim_m();
    require(
        &mut failures,
        min_dim.is_some_and(|d| d <= 1),
        format!("dimM = 1 not achievable: solution dimM {dims:?}, nullity {:?}", grad.outcome.nullity),
    );

    let curl = run_case("curl-r3-strict").unwrap();
    require(
        &mut failures,
        matches!(curl.outcome.status, C6Status::Infeasible { .. }) && curl.outcome.verified,
        format!("curl-r3-strict: {} verified={}", curl.outcome.status_name(), curl.outcome.verified),
    );

    let dsym = run_case("dsym-r2-weak").unwrap();
    let two_d1 = dsym.candidates.iter().find(|c| c.label == "2 d_x1 G K_1");
    require(&mut failures, dsym.outcome.is_feasible(), "dsym-r2-weak not feasible");
    require(
        &mut failures,
        two_d1.is_some_and(|c| c.in_ansatz && c.solves),
        "2 d_x1 G K_1 does not solve dsym-r2-weak",
    );

    let open = run_case("open-question-r3-weak").unwrap();
    let ob = bundle("open-question-r3").unwrap();
    let sys = build_c6_system(&ob.a, &ob.l, &ob.k, &ob.greens, C6Mode::Weak).unwrap();
    let again = solve_feasibility(&sys);
    require(&mut failures, open.outcome.verified, "open-question-r3-weak verdict not verified");
    require(&mut failures, open.outcome.reversed_agrees, "pivot orders disagree");
    require(
        &mut failures,
        again.status_name() == open.outcome.status_name()
            && again.rank == open.outcome.rank
            && again.nullity == open.outcome.nullity,
        "repeat solve differs",
    );
    println!(
        "  open-question-r3-weak: {} ({} unknowns, {} equations, rank {}, nullity {:?})",
        open.outcome.status_name(),
        open.outcome.unknowns,
        open.outcome.equations,
        open.outcome.rank,
        open.outcome.nullity
    );
    report(3, "C6 feasibility cases", Some(Duration::from_secs(60)), start, &failures);
}

#[test]
fn criterion_4_reproduction() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut failures = Vec::new();
    let u = make_test_field(&FieldSpec::new(Family::RadialBump)).unwrap();
    let r = check_reproduction(&u, 0);
    let (e0, e1) = (r.levels[0], r.levels[1]);
    println!("  reproduction error {e0:.3e} -> {e1:.3e}");
    require(&mut failures, e0 < 1e-2, format!("error {e0:.3e} >= 1e-2"));
    require(&mut failures, e1 <= 0.5 * e0, format!("refined error {e1:.3e} not halved"));
    report(4, "reproduction identity", Some(Duration::from_secs(120)), start, &failures);
}

#[test]
fn criterion_5_ibp_lemma() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut failures = Vec::new();
    let battery = ibp_battery();
    require(&mut failures, battery.len() >= 10, format!("battery has {} fields", battery.len()));
    let mut worst: f64 = 0.0;
    for u in &battery {
        let r = check_ibp_lemma(u, 0).unwrap();
        for &ratio in &r.levels {
            worst = worst.max(ratio);
            require(&mut failures, ratio.is_finite() && ratio <= 1.0 + 1e-3, format!("{u}: ratio {ratio:.6}"));
        }
    }
    println!("  worst ratio {worst:.6} over {} fields", battery.len());
    report(5, "integration-by-parts lemma", Some(Duration::from_secs(60)), start, &failures);
}

#[test]
fn criterion_6_main_inequality() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut failures = Vec::new();
    let sweep = inequality_sweep(&theorem_battery(), &default_sweep(), 0).unwrap();
    for e in &sweep.entries {
        let tag = format!("{} a={} q={}", e.field, e.params.a, e.params.q);
        let finite = [e.ratio, e.ratio_refined, e.ratio_dilated].iter().all(|r| r.is_finite());
        require(&mut failures, finite, format!("{tag}: non-finite ratio"));
        require(
            &mut failures,
            e.dilation_change < INVARIANCE_TOLERANCE,
            format!("{tag}: dilation change {:.3e}", e.dilation_change),
        );
        require(
            &mut failures,
            e.refinement_change < REFINEMENT_TOLERANCE,
            format!("{tag}: refinement change {:.3e}", e.refinement_change),
        );
    }
    for a in SWEEP_A {
        for q in SWEEP_Q {
            let s = sweep.suprema.iter().find(|s| s.a == a && s.q == q);
            match s {
                Some(s) => println!("  a={a} q={q} b={:.3}: supremum {:.6} ({})", s.b, s.supremum, s.field),
                None => failures.push(format!("no supremum for a={a} q={q}")),
            }
        }
    }
    report(6, "main inequality sweep", None, start, &failures);
}

#[test]
fn criterion_7_key_lemma() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut failures = Vec::new();
    for order in [LemmaOrder::Zeroth, LemmaOrder::First] {
        let r = key_lemma_scaling(&key_lemma_field(), order, 0).unwrap();
        println!("  {} order: ratios {:?}, spread {:.3e}", order.name(), r.levels, r.metric);
        require(
            &mut failures,
            r.levels.iter().all(|v| v.is_finite() && *v > 0.0) && r.metric < 0.10,
            format!("{} order spread {:.3e}", order.name(), r.metric),
        );
        let c = check_cancellation(&cancellation_field(), [4.0, 0.0], order, 0).unwrap();
        println!("  {} order cancellation {:.3e}", order.name(), c.metric);
        require(&mut failures, c.metric < 1e-6, format!("{} order cancellation {:.3e}", order.name(), c.metric));
    }
    report(7, "key lemma scaling and cancellation", Some(Duration::from_secs(120)), start, &failures);
}

#[test]
fn criterion_8_remainder_bound() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut failures = Vec::new();
    require(&mut failures, REMAINDER_SAMPLES >= 10_000, "too few samples");
    let r = check_remainder_bound(REMAINDER_SAMPLES, REMAINDER_SEED);
    let (s0, s1) = (r.levels[0], r.levels[1]);
    println!("  supremum {s0:.6} ({REMAINDER_SAMPLES} pairs) -> {s1:.6} ({} pairs)", 4 * REMAINDER_SAMPLES);
    require(&mut failures, s0.is_finite() && s1.is_finite(), "non-finite supremum");
    require(&mut failures, (s0 - s1).abs() / s0.max(s1) < 0.10, format!("change {:.3e}", r.metric));
    report(8, "remainder bound", Some(Duration::from_secs(30)), start, &failures);
}
