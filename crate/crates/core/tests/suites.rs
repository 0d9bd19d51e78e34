use ctlab::hypgeo::Horoball;
use ctlab::suites::{run_suite, run_suite_with, Ops, Suite};
use ctlab::{H3Point, Result};

#[test]
fn default_suites_pass() {
    let report = run_suite(Suite::All, 0, 2000);
    for c in &report.checks {
        assert!(c.passed(), "{} failed: {:?}", c.name, c.witness);
    }
    assert!(report.checks.len() >= 15);
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"suite\":\"all\""));
}

#[test]
fn reports_are_reproducible() {
    let a = serde_json::to_string(&run_suite(Suite::Moebius, 9, 300)).unwrap();
    let b = serde_json::to_string(&run_suite(Suite::Moebius, 9, 300)).unwrap();
    assert_eq!(a, b);
}

fn distance_off_by_a_bit(p: &H3Point, q: &H3Point) -> f64 {
    // Correct up to a small error that depends on the heights.
    ctlab::dist_h3(p, q) + 1e-6 * (p.t / q.t).ln().abs()
}

fn surface_length_stretched(h: &Horoball, p: &H3Point, q: &H3Point) -> Result<f64> {
    ctlab::hypgeo::horoball_surface_dist(h, p, q).map(|l| l * l.max(1.0).sqrt())
}

#[test]
fn broken_distance_is_caught_with_a_witness() {
    let ops = Ops { dist_h3: distance_off_by_a_bit, ..Ops::default() };
    let report = run_suite_with(Suite::Moebius, 0, 500, &ops);
    assert!(!report.passed());
    let failed: Vec<_> = report.failures().collect();
    assert!(failed.iter().any(|c| c.name == "isometry_invariance"));
    let witness = failed[0].witness.as_ref().expect("witness recorded");
    assert!(witness.values.contains_key("before") && witness.values.contains_key("after"));
}

#[test]
fn broken_surface_length_is_caught() {
    let ops = Ops { horoball_surface_dist: surface_length_stretched, ..Ops::default() };
    let report = run_suite_with(Suite::Hypgeo, 0, 200, &ops);
    let c = report.checks.iter().find(|c| c.name == "horosphere_length_identity").unwrap();
    assert!(!c.passed() && c.witness.is_some());
}
