//! Full verification suite; one test per criterion so failures are
//! attributable and the criteria run in parallel. Each test prints its
//! pass/fail line.

use treecap::acceptance as acc;

fn check(result: acc::CriterionResult) {
    println!("{} [{:.2}s]", result.line(), result.runtime.as_secs_f64());
    assert!(result.passed, "{}", result.line());
}

#[test]
fn criterion_01_oracle_equivalence() {
    check(acc::criterion_01_oracle_equivalence());
}

#[test]
fn criterion_02_closed_forms() {
    check(acc::criterion_02_closed_forms());
}

#[test]
fn criterion_03_point_capacity() {
    check(acc::criterion_03_point_capacity());
}

#[test]
fn criterion_04_equilibrium_diagnostics() {
    check(acc::criterion_04_equilibrium_diagnostics());
}

#[test]
fn criterion_05_cmcap() {
    check(acc::criterion_05_cmcap());
}

#[test]
fn criterion_06_monotonicity() {
    check(acc::criterion_06_monotonicity());
}

#[test]
fn criterion_07_testing_capacitary() {
    check(acc::criterion_07_testing_capacitary());
}

#[test]
fn criterion_08_ball_capacities() {
    check(acc::criterion_08_ball_capacities());
}

#[test]
fn criterion_09_energy_and_transfer() {
    check(acc::criterion_09_energy_and_transfer());
}

#[test]
fn criterion_10_mww() {
    check(acc::criterion_10_mww());
}

#[test]
fn criterion_11_monotonicity_of_capacity() {
    check(acc::criterion_11_monotonicity_of_capacity());
}

#[test]
fn criterion_12_round_trip() {
    check(acc::criterion_12_round_trip());
}
