//! Re-measures the calibrated constants and checks that the frozen values
//! still cover what the samplers observe.

use ctlab::constants::{HOROBALL_PENETRATION_C, TUBE_LENGTH_RATIO_WINDOW, TUBE_PENETRATION_C};
use ctlab::hypgeo::{horoball_penetration_check_with, Horoball};
use ctlab::suites::{horoball_margins, tube_length_ratios, tube_margins};
use ctlab::{BoundaryPoint, H3Point, C64};

const SEED: u64 = 2024;
const CONFIGS: usize = 100_000;

/// Basepoint on the horosphere `{t ≥ 1}` midway between two boundary points
/// at flat distance `x` from it: the family where the margin peaks.
fn symmetric_margin(x: f64) -> f64 {
    let h = Horoball::new(BoundaryPoint::Infinity, 1.0).unwrap();
    let o = H3Point::new(C64::new(0.0, 0.0), 1.0);
    let p1 = H3Point::new(C64::new(-x, 0.0), 1.0);
    let p2 = H3Point::new(C64::new(x, 0.0), 1.0);
    horoball_penetration_check_with(&h, &o, &p1, &p2, 0.0).unwrap().margin()
}

#[test]
fn horoball_constant_covers_observed_margins() {
    let sampled = horoball_margins(SEED, CONFIGS).iter().map(|c| c.margin()).fold(f64::NEG_INFINITY, f64::max);
    let scanned = (0..2000).map(|i| symmetric_margin((i as f64 / 200.0 - 5.0).exp())).fold(f64::NEG_INFINITY, f64::max);
    let worst = sampled.max(scanned);
    println!("horoball: sampled max margin {sampled:.5}, symmetric scan {scanned:.5}");
    // Closed form on the symmetric family: asinh(x/2)/2 − log(1 + x²)/2.
    assert!((scanned - 0.0320).abs() < 1e-3, "{scanned}");
    assert!(2.0 * worst <= HOROBALL_PENETRATION_C, "{worst}");
}

#[test]
fn tube_constant_covers_observed_margins() {
    let (checks, rejected) = tube_margins(SEED, CONFIGS);
    let worst = checks.iter().map(|c| c.margin()).fold(f64::NEG_INFINITY, f64::max);
    println!("tube: max margin {worst:.5}, {rejected} configurations rejected by the surface-path hypothesis");
    assert!(rejected > 0, "sampler never exercises the surface-path hypothesis");
    assert!(2.0 * worst.max(0.0) <= TUBE_PENETRATION_C, "{worst}");
}

#[test]
fn tube_length_ratio_window_covers_samples() {
    let r = tube_length_ratios(SEED, CONFIGS);
    let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = r.iter().cloned().fold(0.0, f64::max);
    println!("tube length ratio range [{lo:.4}, {hi:.4}]");
    assert!(lo >= TUBE_LENGTH_RATIO_WINDOW[0] && hi <= TUBE_LENGTH_RATIO_WINDOW[1]);
    // Large radius, antipodal angle: the ratio tends to π/2.
    assert!(hi > 1.5 && hi < std::f64::consts::FRAC_PI_2 + 1e-9);
}
