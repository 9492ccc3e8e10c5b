use lmpkit::lmp::{check_certificate, JumpVector, MultiplierSet, Support, Tolerances, Verdict};
use lmpkit::measures::SignedMeasure;
use lmpkit::problem::{builtin_example, ContactSplit, Example, ExampleParams, Fixture};

const ORDER: [&str; 11] = [
    "alpha0_sign",
    "lambda_sign",
    "eta_sign",
    "slackness",
    "eta_support",
    "nontriviality",
    "jump_inclusion",
    "jump_support",
    "adjoint",
    "transversality",
    "stationarity",
];

fn ex1(n: usize) -> Fixture {
    builtin_example(Example::Ex1, &ExampleParams::ex1(0.0, 1.0, n)).unwrap()
}

fn ex2(n: usize) -> Fixture {
    builtin_example(Example::Ex2, &ExampleParams::ex2(1.0, 0.5, n)).unwrap()
}

fn failures(fx: &Fixture, ms: &MultiplierSet) -> Vec<String> {
    let r = check_certificate(&fx.problem, &fx.trajectory, ms, &Tolerances::default());
    r.failed().into_iter().map(String::from).collect()
}

#[test]
fn report_lists_every_condition_in_order() {
    let fx = ex1(20);
    let r = check_certificate(&fx.problem, &fx.trajectory, &fx.certificate, &Tolerances::default());
    let names: Vec<&str> = r.entries.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ORDER);
    assert!(r.entries.iter().all(|e| e.verdict == Verdict::Pass));
    assert!((r.diagnostics.nu - 3.0).abs() < 1e-12);
    let table = r.to_table();
    assert!(ORDER.iter().all(|n| table.contains(n)) && table.contains("overall: PASS"), "{table}");
}

#[test]
fn positive_rescaling_is_accepted() {
    for fx in [ex1(50), ex2(80)] {
        for c in [1e-3, 0.5, 7.0] {
            assert!(failures(&fx, &fx.certificate.scaled(c)).is_empty(), "scale {c}");
        }
        let normalized = fx.certificate.normalized().unwrap();
        assert!((normalized.nu() - 1.0).abs() < 1e-12);
        assert!(failures(&fx, &normalized).is_empty());
    }
}

#[test]
fn both_contact_splits_pass() {
    for split in [ContactSplit::Half, ContactSplit::EtaOnly] {
        let fx = builtin_example(Example::Ex2, &ExampleParams::ex2(1.0, 0.5, 120).with_split(split)).unwrap();
        assert!(failures(&fx, &fx.certificate).is_empty(), "{split:?}");
    }
}

#[test]
fn negative_alpha0_is_a_sign_failure() {
    let fx = ex1(20);
    let mut ms = fx.certificate.clone();
    ms.alpha0 = -1.0;
    let failed = failures(&fx, &ms);
    assert!(failed.contains(&"alpha0_sign".to_string()), "{failed:?}");
}

#[test]
fn negative_lambda_is_a_sign_failure() {
    let fx = ex2(60);
    let mut ms = fx.certificate.clone();
    ms.lambda[0] = -0.5;
    assert!(failures(&fx, &ms).contains(&"lambda_sign".to_string()));
}

#[test]
fn lambda_off_the_active_set_breaks_slackness() {
    // Example 2 with the trajectory lifted off G = 0: x + 1 makes G < 0 everywhere.
    let fx = ex2(60);
    let lifted = fx.trajectory.shifted_state(&[0.0, 1.0]);
    let r = check_certificate(&fx.problem, &lifted, &fx.certificate, &Tolerances::default());
    assert!(!r.entry("slackness").unwrap().passed());
    assert!(!r.entry("eta_support").unwrap().passed());
}

#[test]
fn zero_certificate_is_trivial() {
    let fx = ex1(20);
    let zero = fx.certificate.scaled(0.0);
    assert_eq!(failures(&fx, &zero), vec!["nontriviality".to_string()]);
}

#[test]
fn flipped_direction_fails_inclusion() {
    let fx = ex1(20);
    let mut ms = fx.certificate.clone();
    ms.s.insert(Support::Atom(0), JumpVector::Vector(vec![1.0]));
    let failed = failures(&fx, &ms);
    assert!(failed.contains(&"jump_inclusion".to_string()), "{failed:?}");
    assert!(!failed.contains(&"jump_support".to_string()));
}

#[test]
fn atom_inside_an_arc_fails_support() {
    let fx = ex2(80);
    let ms = &fx.certificate;
    let k = 2;
    let mut atoms = ms.eta.atoms().to_vec();
    atoms[k] = 0.1;
    let eta = SignedMeasure::nonnegative(ms.grid().clone(), atoms, ms.eta.density().to_vec()).unwrap();
    let mut s = ms.s.clone();
    s.insert(Support::Atom(k), JumpVector::Vector(vec![0.0, 0.0]));
    let moved = MultiplierSet::new(ms.alpha0, ms.lambda.clone(), eta, s, ms.p.clone()).unwrap();
    let failed = failures(&fx, &moved);
    assert!(failed.contains(&"eta_support".to_string()), "{failed:?}");
    assert!(failed.contains(&"jump_support".to_string()), "{failed:?}");
}

#[test]
fn constant_costate_shift_fails_only_transversality() {
    let fx = ex1(20);
    let ms = &fx.certificate;
    let n = ms.grid().num_nodes();
    let p = lmpkit::measures::BVFunction::from_left_limits(
        ms.grid().clone(),
        ms.p.node_values().iter().map(|v| vec![v[0] + 0.25]).collect(),
        ms.p.atoms().to_vec(),
    )
    .unwrap();
    assert_eq!(p.node_values().len(), n);
    let shifted = MultiplierSet { p, ..ms.clone() };
    let failed = failures(&fx, &shifted);
    assert_eq!(failed, vec!["transversality".to_string()]);
}

#[test]
fn residuals_do_not_grow_under_refinement() {
    let mut prev = f64::INFINITY;
    for n in [50, 100, 200, 400] {
        let fx = ex2(n);
        let r = check_certificate(&fx.problem, &fx.trajectory, &fx.certificate, &Tolerances::default());
        assert!(r.passed(), "N = {n}: {:?}", r.failed());
        let h = r.diagnostics.h_max;
        let adjoint = r.entry("adjoint").unwrap().residual;
        assert!(adjoint <= prev + 10.0 * h * h, "N = {n}: {adjoint} after {prev}");
        prev = adjoint;
    }
}

#[test]
fn certificate_on_another_grid_fails_every_line_but_nontriviality() {
    let a = ex1(20);
    let b = ex1(21);
    let failed = failures(&a, &b.certificate);
    assert_eq!(failed.len(), 10, "{failed:?}");
    assert!(!failed.contains(&"nontriviality".to_string()));
}

#[test]
fn fixed_integral_threshold_overrides_the_grid_scaled_one() {
    let fx = ex2(40);
    let tol = Tolerances { integral_override: Some(1e-30), ..Tolerances::default() };
    let r = check_certificate(&fx.problem, &fx.trajectory, &fx.certificate, &tol);
    assert_eq!(r.entry("adjoint").unwrap().tolerance, 1e-30);
}
