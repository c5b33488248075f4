//! The acceptance suite: one test per criterion, each printing its
//! pass/fail line. `cargo test --test acceptance -- --nocapture` shows the
//! full table; `lltk selftest` runs the same checks from the command line.

use lltk_core::selftest::run_all;

fn run(id: usize) {
    let results = run_all(Some(&id.to_string()));
    assert_eq!(results.len(), 1, "criterion {id} did not run");
    let r = &results[0];
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_01_identity_admissibility() {
    run(1);
}

#[test]
fn criterion_02_consistency() {
    run(2);
}

#[test]
fn criterion_03_soundness_fuzz() {
    run(3);
}

#[test]
fn criterion_04_conservativity() {
    run(4);
}

#[test]
fn criterion_05_focusing_completeness() {
    run(5);
}

#[test]
fn criterion_06_cut_admissibility() {
    run(6);
}

#[test]
fn criterion_07_modal_laws() {
    run(7);
}

#[test]
fn criterion_08_biology_oracle_agreement() {
    run(8);
}

#[test]
fn criterion_09_sell_confinement() {
    run(9);
}

#[test]
fn criterion_10_promotion_side_condition() {
    run(10);
}

#[test]
fn criterion_11_encoding_preservation() {
    run(11);
}
