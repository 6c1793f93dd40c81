use mdsa::gf::Field;
use mdsa::transform::algorithm2;
use mdsa::vbk::{construct, VbkParams};
use mdsa::verify::*;

fn base() -> mdsa::ArrayCode {
    let params = VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap();
    construct(&params, 0).unwrap().0
}

#[test]
fn mds_check_finds_a_broken_block() {
    let code = base();
    assert!(check_mds(&code, &Coverage::Exhaustive).passed);
    // two nodes with identical columns cannot both be erased
    let mut broken = code.clone();
    for t in 0..3 {
        broken = broken.with_block(t, 4, code.block(t, 5).clone());
    }
    let report = check_mds(&broken, &Coverage::Exhaustive);
    assert!(!report.passed);
    assert!(report.counterexample.is_some());
    assert!(report.to_line().starts_with("FAIL"));
}

#[test]
fn c2_fails_without_keys() {
    let code = base().without_keys();
    let report = check_c2(&code, &[0, 1], &Coverage::Exhaustive);
    assert!(!report.passed, "{}", report.to_line());
}

#[test]
fn repair_bound_on_the_final_code() {
    let code = algorithm2(base()).unwrap();
    let report = check_repair_bound(&code, &Coverage::Sample { count: 6, seed: 1 }, 2);
    assert!(report.passed, "{}", report.to_line());
}

#[test]
fn subset_picking() {
    let pool: Vec<usize> = (0..6).collect();
    let (all, scope) = pick_subsets(&pool, 3, &Coverage::Exhaustive);
    assert_eq!(all.len(), 20);
    assert_eq!(scope, Scope::Exhaustive { cases: 20 });
    let (some, scope) = pick_subsets(&pool, 3, &Coverage::Sample { count: 5, seed: 3 });
    assert_eq!(some.len(), 5);
    assert!(matches!(scope, Scope::Sampled { cases: 5, total: 20, seed: 3 }));
    let (auto, _) = pick_subsets(&pool, 3, &Coverage::auto(0));
    assert_eq!(auto.len(), 20);
}

#[test]
fn reports_render_as_json_lines() {
    let reports = check_lemma5(2, 3);
    let text = render_json_lines(&reports);
    assert_eq!(text.lines().count(), reports.len());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("name").is_some() && v.get("passed").is_some());
    }
}

#[test]
fn zeta_on_a_lambda_breaks_c2_only() {
    let params = VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap();
    let (_, constants) = construct(&params, 0).unwrap();
    let bad = fixtures::zeta_collision(&params, &constants, 2);
    let code = mdsa::vbk::build_code(&params, &bad).unwrap();
    assert!(check_mds(&code, &Coverage::Exhaustive).passed);
    assert!(check_c2(&code, &[0, 1], &Coverage::Exhaustive).passed);
    let report = check_c2(&code, &[2, 3], &Coverage::Exhaustive);
    assert!(!report.passed);
    assert!(report.counterexample.unwrap().contains("node 2"));
}

#[test]
fn zeroed_parity_block_is_not_mds() {
    let code = fixtures::zeroed_block(&base(), 1, 3);
    let report = check_mds(&code, &Coverage::Exhaustive);
    assert!(!report.passed);
    assert!(report.counterexample.unwrap().contains('3'));
}
