//! One test per acceptance criterion. Each prints a PASS/FAIL line to stderr
//! (bypassing output capture) with the measured values and its runtime budget.
//! The checks share the machine, so they run one at a time.

use std::io::Write;
use std::sync::Mutex;

use cwglauber_harness::verify::{VerifyOptions, CHECKS};
use cwglauber_harness::Status;

static SERIAL: Mutex<()> = Mutex::new(());

fn criterion(id: u8) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let check = CHECKS.iter().find(|c| c.id == id).expect("registered check");
    let (v, _) = check.execute(&VerifyOptions::default());
    let status = if v.status == Status::Pass { "PASS" } else { "FAIL" };
    let line = format!(
        "{status} criterion {id:>2} {}: {:.1} s of {:.0} s budget; {}\n",
        check.name,
        v.elapsed_s.unwrap_or(f64::NAN),
        check.budget_s,
        v.detail
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert_eq!(v.status, Status::Pass, "{line}");
}

#[test]
fn criterion_01_all_plus_equivalence() {
    criterion(1);
}

#[test]
fn criterion_02_gap_equality() {
    criterion(2);
}

#[test]
fn criterion_03_stationary_routes() {
    criterion(3);
}

#[test]
fn criterion_04_drift_identity() {
    criterion(4);
}

#[test]
fn criterion_05_commute_time() {
    criterion(5);
}

#[test]
fn criterion_06_subcritical_cutoff() {
    criterion(6);
}

#[test]
fn criterion_07_critical_scaling() {
    criterion(7);
}

#[test]
fn criterion_08_limit_law() {
    criterion(8);
}

#[test]
fn criterion_09_supercritical_order() {
    criterion(9);
}

#[test]
fn criterion_10_tau0_tail() {
    criterion(10);
}

#[test]
fn criterion_11_monte_carlo() {
    criterion(11);
}

#[test]
fn criterion_12_censored() {
    criterion(12);
}
