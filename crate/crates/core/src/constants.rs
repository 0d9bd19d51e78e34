//! Frozen numerical constants. Values marked "calibrated" were measured by
//! `tests/calibration.rs`, which re-checks them on every run. Penetration
//! constants carry a safety factor of two over the largest observed margin.

/// Additive constant in the horoball penetration inequality (calibrated).
/// The largest margin found is about 0.032, attained with the basepoint on
/// the horosphere and the two boundary points at flat distance 0.25 on
/// either side of it.
pub const HOROBALL_PENETRATION_C: f64 = 0.07;

/// Additive constant in the tube penetration inequality (calibrated).
/// No admissible configuration has shown a positive margin; margins approach
/// 0 only as a boundary point approaches the basepoint. The value is a floor
/// that absorbs rounding.
pub const TUBE_PENETRATION_C: f64 = 0.05;

/// Samples used when checking that a tube surface path avoids a ball.
pub const SURFACE_PATH_SAMPLES: usize = 512;

/// Largest distance between a greedy lattice walk on a flat horosphere and
/// the straight segment it follows.
pub const HOROSPHERE_TRACKING_D: f64 = 1.0;

/// Window for `l / e^{d/2}` on tube boundaries with radius at least 0.5,
/// axial separation at most 2 and distance at least 0.5 (calibrated: the
/// observed range is [0.390, 1.5702], the upper end approaching π/2).
pub const TUBE_LENGTH_RATIO_WINDOW: [f64; 2] = [0.35, 1.75];
