//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any FAIL.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use wlab_core::verify::{default_suite, run_check, run_suite, CheckSpec, Status, VerificationReport};

struct Verdict {
    ok: bool,
    detail: String,
}

fn spec(name: &str) -> CheckSpec {
    default_suite().into_iter().find(|s| s.name == name).unwrap_or_else(|| panic!("no canonical check {name}"))
}

fn run(name: &str) -> VerificationReport {
    run_check(&spec(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn brief(r: &VerificationReport) -> String {
    let mut s = format!("{} {} sup={:.2e}", r.name, r.status.name(), r.sup_residual);
    if let Some(m) = r.min_margin {
        s.push_str(&format!(" margin={m:.2e}"));
    }
    if !r.refinement_ratios.is_empty() {
        s.push_str(&format!(" ratio={:.1}", r.refinement_ratios[0]));
    }
    if !r.notes.is_empty() {
        s.push_str(&format!(" [{}]", r.notes.join("; ")));
    }
    s
}

/// All named checks pass (and those listed in `ratio` refine by ≥ 3).
fn all_pass(names: &[&str], ratio: &[&str]) -> Verdict {
    let reps: Vec<VerificationReport> = names.iter().map(|n| run(n)).collect();
    let mut ok = reps.iter().all(|r| r.pass);
    for n in ratio {
        let r = reps.iter().find(|r| r.name == *n).unwrap();
        ok &= r.refinement_ratios.first().is_some_and(|&x| x >= 3.0);
    }
    Verdict { ok, detail: reps.iter().map(brief).collect::<Vec<_>>().join(" | ") }
}

fn extra(r: &VerificationReport, key: &str) -> f64 {
    *r.extra.get(key).unwrap_or_else(|| panic!("{}: no extra `{key}`", r.name))
}

fn sign_anchor() -> Verdict {
    let good = run("model_residual");
    let mut s = spec("model_residual");
    s.params.wrong_sign = true;
    let bad = run_check(&s).unwrap();
    let bad_transport = bad.rows.iter().map(|r| r.lhs).fold(0.0, f64::max);
    let ok = good.pass && good.rows.len() == 600 && !bad.pass && bad_transport >= 0.1;
    Verdict { ok, detail: format!("{} | flipped sign: transport sup={bad_transport:.3}", brief(&good)) }
}

fn model_identity() -> Verdict {
    let r = run("model_identity");
    let abs = extra(&r, "sup_abs_residual");
    Verdict { ok: r.pass && abs <= 1e-6, detail: format!("{} abs={abs:.2e}", brief(&r)) }
}

fn hamiltonian() -> Verdict {
    let mut v = all_pass(&["hamiltonian_2nd", "hamiltonian_1st"], &[]);
    let alt = extra(&run("hamiltonian_1st"), "alt_form_sup_residual");
    v.detail.push_str(&format!(" | c²-weighted form (reported only) sup={alt:.2e}"));
    v
}

fn eks() -> Verdict {
    let mut v = all_pass(&["eks_geo", "eks_grad", "eks_langevin"], &[]);
    let r = run("eks_langevin");
    let sharp = extra(&r, "sharp_form_min_margin");
    v.ok &= sharp >= -1e-6;
    let fwd = extra(&run("eks_grad"), "forward_time_min_margin");
    v.detail.push_str(&format!(" | sharp form margin={sharp:.2e} | forward-time reading (reported only) margin={fwd:.2e}"));
    v
}

fn closed_forms() -> Verdict {
    let r = run("closed_forms");
    // rows: Fisher, partition function, model entropy, against full-precision closed forms
    let want = [1.0 - 0.75f64.sqrt(), 7.954_926_521_012_845, -(1.0 + (4.0 * PI).ln())];
    let tol = [1e-8, 1e-8, 1e-10];
    let mut ok = r.pass && r.rows.len() == 3;
    for i in 0..3 {
        ok &= (r.rows[i].lhs - want[i]).abs() <= tol[i];
    }
    let printed = [0.1339746, 7.954927, -3.531024];
    let gaps: Vec<String> = (0..3).map(|i| format!("{:.1e}", r.rows[i].lhs - printed[i])).collect();
    Verdict { ok, detail: format!("{} | vs printed digits: {}", brief(&r), gaps.join(", ")) }
}

fn full_suite() -> Verdict {
    let specs = default_suite();
    let outputs = || {
        let o = run_suite(&specs);
        let files: BTreeMap<String, (String, String)> = o.reports.iter().map(|r| (r.name.clone(), (r.json(), r.csv()))).collect();
        (o.all_pass(), o.count(Status::Fail), o.errors.len(), files, o.summary_json())
    };
    let t = Instant::now();
    let first = outputs();
    let once = t.elapsed();
    let second = outputs();
    let same = first.3 == second.3 && first.4 == second.4;
    let ok = first.0 && second.0 && same && once <= Duration::from_secs(300);
    Verdict {
        ok,
        detail: format!(
            "{} checks, {} fail, {} error, one pass {:.1}s, outputs identical across runs: {same}",
            first.3.len(),
            first.1,
            first.2,
            once.as_secs_f64()
        ),
    }
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Verdict>)> = vec![
        ("sign-convention anchor on the Gaussian model", Duration::from_secs(1), Box::new(sign_anchor)),
        ("model identity, c = 1, m = 1, 2", Duration::from_secs(1), Box::new(model_identity)),
        (
            "geodesic W-entropy identity with refinement",
            Duration::from_secs(30),
            Box::new(|| all_pass(&["geo_wm", "geo_dissipation"], &["geo_wm"])),
        ),
        (
            "heat W-entropy identity, reversed-time curvature form and bound",
            Duration::from_secs(30),
            Box::new(|| all_pass(&["heat_wm", "heat_cdkm", "cs_bound"], &["heat_wm"])),
        ),
        (
            "Langevin identity, reference-ODE and affine alpha",
            Duration::from_secs(60),
            Box::new(|| all_pass(&["langevin_mf3_ode", "langevin_mf3_affine", "w_comparison", "w_exp"], &[])),
        ),
        ("Hamiltonian first and second derivatives", Duration::from_secs(60), Box::new(hamiltonian)),
        (
            "monotonicity with f = 0",
            Duration::from_secs(60),
            Box::new(|| all_pass(&["geo_monotone", "heat_monotone", "whc_monotone", "w_comparison_monotone"], &[])),
        ),
        (
            "Euler / Hamilton-Jacobi equivalence and potential recovery",
            Duration::from_secs(60),
            Box::new(|| all_pass(&["euler_equivalence", "potential_recovery"], &[])),
        ),
        ("Hopf-Lax oracle", Duration::from_secs(60), Box::new(|| all_pass(&["hopf_lax"], &[]))),
        (
            "vorticity: closedness and decay bound",
            Duration::from_secs(180),
            Box::new(|| all_pass(&["closedness", "vorticity_decay"], &[])),
        ),
        (
            "finite-dimensional identities and matrix-exponential oracle",
            Duration::from_secs(60),
            Box::new(|| all_pass(&["fd_langevin", "fd_vh", "fd_w", "finite_dim_oracle"], &[])),
        ),
        ("entropic curvature-dimension inequalities", Duration::from_secs(60), Box::new(eks)),
        ("closed-form values", Duration::from_secs(1), Box::new(closed_forms)),
        ("full default suite, twice, deterministic", Duration::from_secs(600), Box::new(full_suite)),
    ];
    let mut failed = 0;
    for (i, (label, budget, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = f();
        let took = t.elapsed();
        let ok = v.ok && took <= *budget;
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {label} ({:.2}s / {:.0}s): {}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            budget.as_secs_f64(),
            v.detail
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
