//! Seeded randomized verification suites for the geometry layer and the
//! Floyd bounds.
//!
//! Every trial draws from its own ChaCha stream derived from
//! `(seed, check, trial)`, so results do not depend on thread scheduling.
//! A failing check reports the lowest-numbered failing trial as a witness.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants;
use crate::ctmap::{floyd_fit, FloydLower};
use crate::error::{Error, Result};
use crate::families::{fuchsian_333, symmetric_schottky, Representation};
use crate::hypgeo::{
    horoball_penetration_check_with, horoball_surface_dist, point_to_geodesic, tube_penetration_check_with,
    tube_surface_length, Geodesic, Horoball, PenetrationCheck, Tube,
};
use crate::moebius::{
    ball_dist, ball_dist_to_boundary, chordal_dist, dist_h3, BoundaryPoint, FixedPoints, H3Point, Mobius, C64,
};
use crate::words::{inverse_letter, Letter, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Moebius,
    Hypgeo,
    Floyd,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moebius" => Ok(Suite::Moebius),
            "hypgeo" => Ok(Suite::Hypgeo),
            "floyd" => Ok(Suite::Floyd),
            "all" => Ok(Suite::All),
            _ => Err(Error::Precondition(format!("unknown suite {s:?} (expected moebius, hypgeo, floyd or all)"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Moebius => "moebius",
            Suite::Hypgeo => "hypgeo",
            Suite::Floyd => "floyd",
            Suite::All => "all",
        })
    }
}

/// The configuration that made a check fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: Suite,
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// The check's summary statistic (worst error, fitted slope, ...).
    pub statistic: f64,
    /// Closed interval the statistic must lie in.
    pub accept: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<CheckReport>,
    pub warnings: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// The library operations exercised by the suites. Swapping one out lets
/// tests confirm that the suites actually detect a broken implementation.
#[derive(Clone, Copy)]
pub struct Ops {
    pub compose: fn(&Mobius, &Mobius) -> Mobius,
    pub dist_h3: fn(&H3Point, &H3Point) -> f64,
    pub act_boundary: fn(&Mobius, &BoundaryPoint) -> BoundaryPoint,
    pub fixed_points: fn(&Mobius) -> Result<FixedPoints>,
    pub horoball_surface_dist: fn(&Horoball, &H3Point, &H3Point) -> Result<f64>,
}

impl Default for Ops {
    fn default() -> Self {
        Ops {
            compose: Mobius::compose,
            dist_h3,
            act_boundary: Mobius::act_boundary,
            fixed_points: Mobius::fixed_points,
            horoball_surface_dist,
        }
    }
}

/// Samples used by the slope fits, whatever the trial count.
pub const FIT_SAMPLES: usize = 1000;
/// Factors in each random product of the determinant check.
pub const PRODUCT_LENGTH: usize = 1000;
/// Accepted slope windows for the escape-rate fits.
pub const BALL_ESCAPE_SLOPE: [f64; 2] = [-1.1, -0.9];
pub const ORBIT_FIXED_POINT_SLOPE: [f64; 2] = [-0.55, -0.45];

pub fn run_suite(suite: Suite, seed: u64, trials: usize) -> SuiteReport {
    run_suite_with(suite, seed, trials, &Ops::default())
}

pub fn run_suite_with(suite: Suite, seed: u64, trials: usize, ops: &Ops) -> SuiteReport {
    let mut report = SuiteReport { suite, seed, trials, checks: Vec::new(), warnings: Vec::new() };
    if trials == 0 {
        report.warnings.push("trials = 0: no checks were run".into());
        return report;
    }
    let ctx = Ctx { seed, trials, ops };
    if matches!(suite, Suite::Moebius | Suite::All) {
        report.checks.extend(moebius_checks(&ctx));
    }
    if matches!(suite, Suite::Hypgeo | Suite::All) {
        report.checks.extend(hypgeo_checks(&ctx));
    }
    if matches!(suite, Suite::Floyd | Suite::All) {
        match floyd_checks(&ctx) {
            Ok(c) => report.checks.extend(c),
            Err(e) => report.checks.push(CheckReport {
                suite: Suite::Floyd,
                name: "floyd_setup".into(),
                trials: 1,
                failures: 1,
                statistic: f64::NAN,
                accept: [0.0, 0.0],
                witness: Some(Witness { trial: 0, values: BTreeMap::new(), note: Some(e.to_string()) }),
            }),
        }
    }
    if trials < FIT_SAMPLES {
        report.warnings.push(format!("slope fits use {} samples; they are noisy below {FIT_SAMPLES}", trials.max(10)));
    }
    report
}

struct Ctx<'a> {
    seed: u64,
    trials: usize,
    ops: &'a Ops,
}

/// Independent stream for one trial of one check.
pub fn trial_rng(seed: u64, check: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(check);
    rng
}

/// Per-trial outcome: the statistic and, when the trial fails, its values.
type Outcome = (f64, Option<BTreeMap<String, f64>>);

fn vals(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Runs `trial` in parallel and folds the outcomes: the statistic is the
/// maximum, the witness the first failing trial.
fn run_trials<F>(suite: Suite, name: &str, check: u64, ctx: &Ctx, n: usize, accept: [f64; 2], trial: F) -> CheckReport
where
    F: Fn(&mut ChaCha8Rng) -> Outcome + Sync,
{
    let outcomes: Vec<Outcome> = (0..n).into_par_iter().map(|i| trial(&mut trial_rng(ctx.seed, check, i))).collect();
    let statistic = outcomes.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    let failures = outcomes.iter().filter(|o| o.1.is_some()).count();
    let witness = outcomes
        .iter()
        .enumerate()
        .find_map(|(i, o)| o.1.clone().map(|values| Witness { trial: i, values, note: None }));
    CheckReport { suite, name: name.into(), trials: n, failures, statistic, accept, witness }
}

fn fail_unless(ok: bool, stat: f64, values: impl FnOnce() -> BTreeMap<String, f64>) -> Outcome {
    (stat, if ok { None } else { Some(values()) })
}

// ---------------------------------------------------------------------------
// Samplers

fn cplx(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

/// Uniformly distributed rotation about the basepoint `(0, 1)`.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Mobius {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            let alpha = C64::new(q[0], q[1]) / n;
            let beta = C64::new(q[2], q[3]) / n;
            return Mobius::rotation(alpha, beta).expect("unit quaternion");
        }
    }
}

/// A random isometry moving the basepoint at most `spread` away.
pub fn random_isometry(rng: &mut ChaCha8Rng, spread: f64) -> Mobius {
    let p = H3Point::new(cplx(rng, spread.sinh() / 2.0), (rng.gen_range(-spread..=spread) / 2.0).exp());
    Mobius::moving_origin_to(&p).compose(&random_rotation(rng))
}

fn random_point(rng: &mut ChaCha8Rng, spread: f64) -> H3Point {
    random_isometry(rng, spread).orbit_origin()
}

/// A loxodromic with translation length in `[0.2, 3]`, moved by a random
/// isometry.
fn random_loxodromic(rng: &mut ChaCha8Rng) -> Mobius {
    let mu = C64::new(rng.gen_range(0.2..3.0), rng.gen_range(-PI..PI)) / 2.0;
    let core = Mobius::diagonal(mu.exp()).expect("nonzero");
    let g = random_isometry(rng, 2.0);
    g.compose(&core).compose(&g.inverse())
}

/// A rotation followed by a short random step. Products of these drift
/// slowly, so a thousand-fold product keeps entries near 1 and its
/// determinant stays measurable at 1e-12.
fn short_step(rng: &mut ChaCha8Rng) -> Mobius {
    let one = C64::new(1.0, 0.0);
    let step = loop {
        let e = 0.01;
        if let Ok(m) = Mobius::new(one + cplx(rng, e), cplx(rng, e), cplx(rng, e), one + cplx(rng, e)) {
            break m;
        }
    };
    random_rotation(rng).compose(&step)
}

/// A horoball with two points on its boundary at hyperbolic distance at
/// least `0.5`, moved by a random isometry. Returns the flat distance too.
pub fn sample_horosphere_pair(rng: &mut ChaCha8Rng) -> (Horoball, H3Point, H3Point, f64) {
    let min_flat = 2.0 * 0.25f64.sinh() * 1.001;
    let flat = (rng.gen_range(min_flat.ln()..50f64.ln())).exp();
    let w1 = cplx(rng, 2.0);
    let w2 = w1 + C64::from_polar(flat, rng.gen_range(-PI..PI));
    let g = random_isometry(rng, 1.5);
    let h = Horoball::new(BoundaryPoint::Infinity, 1.0).expect("positive size").transform(&g);
    (h, g.act_h3(&H3Point::new(w1, 1.0)), g.act_h3(&H3Point::new(w2, 1.0)), flat)
}

/// Two points `X, Y` on a geodesic at distance exactly `r` from the
/// basepoint, with `P` the foot of the perpendicular from the basepoint.
/// Every point of the geodesic, and so of `[X, Y]`, lies outside
/// `B(O; r)`.
pub fn sample_far_segment(rng: &mut ChaCha8Rng, r: f64) -> (H3Point, H3Point, H3Point) {
    let k = random_rotation(rng);
    let e = r.exp();
    let on = |s: f64| k.act_h3(&H3Point::new(C64::new(e * s.tanh(), 0.0), e / s.cosh()));
    let (s1, s2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    (on(s1), on(s2), on(0.0))
}

/// A loxodromic `A` with `d(O, A·O) = r` whose axis stays far from the
/// basepoint: translation length in `[0.3, 1.5]`, and the distance `D` from
/// `O` to the axis solving `cosh r = cosh²D (cosh ℓ − cos θ) + cos θ`.
/// This is the regime where the orbit point sits at Euclidean distance
/// `≍ e^{−r/2}` from the attracting fixed point.
pub fn sample_far_axis_loxodromic(rng: &mut ChaCha8Rng, r: f64) -> Mobius {
    let ell: f64 = rng.gen_range(0.3..1.5);
    let theta: f64 = rng.gen_range(-PI..PI);
    let ch2 = (r.cosh() - theta.cos()) / (ell.cosh() - theta.cos());
    let dist = ch2.sqrt().max(1.0).acosh();
    let core = Mobius::diagonal((C64::new(ell, theta) / 2.0).exp()).expect("nonzero");
    let side = H3Point::new(C64::from_polar(dist.sinh(), rng.gen_range(-PI..PI)), 1.0);
    let m = Mobius::moving_origin_to(&side);
    let k = random_rotation(rng);
    k.compose(&m.inverse()).compose(&core).compose(&m).compose(&k.inverse())
}

/// A tube with radius in `[0.5, 8]` and two boundary points with axial
/// separation at most 2 and hyperbolic distance at least 0.5.
pub fn sample_tube_pair(rng: &mut ChaCha8Rng) -> (Tube, H3Point, H3Point) {
    let g = random_isometry(rng, 1.0);
    loop {
        let radius = rng.gen_range(0.5..8.0);
        let axis = Geodesic::new(BoundaryPoint::finite(0.0, 0.0), BoundaryPoint::Infinity).expect("distinct");
        let tube = Tube::new(axis, radius).expect("positive radius").transform(&g);
        let u1 = rng.gen_range(-1.0..1.0);
        let theta1 = rng.gen_range(-PI..PI);
        let p1 = tube.surface_point(u1, theta1);
        let p2 = tube.surface_point(u1 + rng.gen_range(-2.0..=2.0), theta1 + rng.gen_range(-PI..=PI));
        if dist_h3(&p1, &p2) >= 0.5 {
            return (tube, p1, p2);
        }
    }
}

/// A horoball, a basepoint outside it, and two points on its boundary, in
/// a random position. The flat spread of the boundary points is drawn on a
/// log scale so that `d(O, Pᵢ)` ranges from near 0 up to about 30.
pub fn sample_horoball_config(rng: &mut ChaCha8Rng) -> (Horoball, H3Point, H3Point, H3Point) {
    let g = random_isometry(rng, 1.0);
    // Squaring puts half the basepoints within depth 2 of the horosphere,
    // where the inequality is tightest.
    let depth = 8.0 * rng.gen_range(0.0f64..1.0).powi(2);
    let o = H3Point::new(C64::new(0.0, 0.0), (-depth).exp());
    let mut flat = || C64::from_polar(rng.gen_range(-4.0f64..8.0).exp(), rng.gen_range(-PI..PI));
    let (w1, w2) = (flat(), flat());
    let h = Horoball::new(BoundaryPoint::Infinity, 1.0).expect("positive size").transform(&g);
    (h, g.act_h3(&o), g.act_h3(&H3Point::new(w1, 1.0)), g.act_h3(&H3Point::new(w2, 1.0)))
}

/// A tube, a basepoint outside it, and two points on its boundary, in a
/// random position. Configurations may violate the surface-path
/// hypothesis; the check rejects those.
pub fn sample_tube_config(rng: &mut ChaCha8Rng) -> (Tube, H3Point, H3Point, H3Point) {
    let g = random_isometry(rng, 1.0);
    let radius = rng.gen_range(0.1..5.0);
    let axis = Geodesic::new(BoundaryPoint::finite(0.0, 0.0), BoundaryPoint::Infinity).expect("distinct");
    let tube = Tube::new(axis, radius).expect("positive radius");
    let o = tube.point_at(radius + 8.0 * rng.gen_range(0.0f64..1.0).powi(2), 0.0, 0.0);
    let mut surf = || tube.surface_point(rng.gen_range(-12.0..12.0), rng.gen_range(-PI..PI));
    let (p1, p2) = (surf(), surf());
    (tube.transform(&g), g.act_h3(&o), g.act_h3(&p1), g.act_h3(&p2))
}

/// Boundary points `P₁, P₂` coplanar with the tube axis and a basepoint at
/// the midpoint of the surface path between them.
pub fn coplanar_midpoint_config(radius: f64, half_length: f64) -> (Tube, H3Point, H3Point, H3Point) {
    let axis = Geodesic::new(BoundaryPoint::finite(0.0, 0.0), BoundaryPoint::Infinity).expect("distinct");
    let tube = Tube::new(axis, radius).expect("positive radius");
    let p1 = tube.surface_point(-half_length, 0.0);
    let p2 = tube.surface_point(half_length, PI);
    let o = tube.surface_point(0.0, PI / 2.0);
    (tube, o, p1, p2)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `(R, log d_E(X, Y))` samples for segments outside `B(O; R)`,
/// `R ∈ [3, 12]`.
pub fn ball_escape_samples(seed: u64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let rng = &mut trial_rng(seed, 101, i);
            let r = rng.gen_range(3.0..12.0);
            let (x, y, _) = sample_far_segment(rng, r);
            (r, ball_dist(&x, &y).ln())
        })
        .collect()
}

/// `(d(O, A·O), log d_E(A·O, A⁺))` samples, `d(O, A·O) ∈ [4, 16]`.
pub fn orbit_fixed_point_samples(seed: u64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let rng = &mut trial_rng(seed, 102, i);
            let r = rng.gen_range(4.0..16.0);
            let a = sample_far_axis_loxodromic(rng, r);
            let plus = a.fixed_points().expect("loxodromic").attracting;
            (a.displacement_origin(), ball_dist_to_boundary(&a.orbit_origin(), &plus).ln())
        })
        .collect()
}

/// Penetration margins `N/4 − min d(O, [P₁, P₂])` over random admissible
/// configurations. Tube configurations rejected by the surface-path
/// hypothesis are resampled; the second value counts rejections.
pub fn horoball_margins(seed: u64, n: usize) -> Vec<PenetrationCheck> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let rng = &mut trial_rng(seed, 103, i);
            loop {
                let (h, o, p1, p2) = sample_horoball_config(rng);
                if let Ok(c) = horoball_penetration_check_with(&h, &o, &p1, &p2, 0.0) {
                    return c;
                }
            }
        })
        .collect()
}

pub fn tube_margins(seed: u64, n: usize) -> (Vec<PenetrationCheck>, usize) {
    let out: Vec<(PenetrationCheck, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let rng = &mut trial_rng(seed, 104, i);
            let mut rejected = 0;
            loop {
                let (t, o, p1, p2) = sample_tube_config(rng);
                match tube_penetration_check_with(&t, &o, &p1, &p2, 0.0) {
                    Ok(c) => return (c, rejected),
                    Err(_) => rejected += 1,
                }
            }
        })
        .collect();
    let rejected = out.iter().map(|o| o.1).sum();
    (out.into_iter().map(|o| o.0).collect(), rejected)
}

/// `l / e^{d/2}` for tube boundary pairs from [`sample_tube_pair`].
pub fn tube_length_ratios(seed: u64, n: usize) -> Vec<f64> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let rng = &mut trial_rng(seed, 105, i);
            let (t, p1, p2) = sample_tube_pair(rng);
            let l = tube_surface_length(&t, &p1, &p2).expect("points on the tube").length;
            l / (dist_h3(&p1, &p2) / 2.0).exp()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Möbius checks

fn moebius_checks(ctx: &Ctx) -> Vec<CheckReport> {
    let ops = ctx.ops;
    let s = Suite::Moebius;
    let products = ctx.trials.div_ceil(PRODUCT_LENGTH).max(1);
    let mut out = vec![run_trials(s, "determinant_after_products", 1, ctx, products, [0.0, 1e-12], |rng| {
        let mut m = Mobius::identity();
        let mut worst: f64 = 0.0;
        for _ in 0..PRODUCT_LENGTH {
            m = (ops.compose)(&m, &short_step(rng));
            worst = worst.max((m.det() - 1.0).norm());
        }
        fail_unless(worst < 1e-12, worst, || vals(&[("det_error", worst), ("max_entry", m.max_entry())]))
    })];

    out.push(run_trials(s, "isometry_invariance", 2, ctx, ctx.trials, [0.0, 1e-10], |rng| {
        let m = random_isometry(rng, 3.0);
        let (p, q) = (random_point(rng, 3.0), random_point(rng, 3.0));
        let before = (ops.dist_h3)(&p, &q);
        let after = (ops.dist_h3)(&m.act_h3(&p), &m.act_h3(&q));
        let err = (before - after).abs();
        fail_unless(err < 1e-10, err, || vals(&[("before", before), ("after", after)]))
    }));

    out.push(run_trials(s, "conjugation_preserves_class", 3, ctx, ctx.trials, [0.0, 1e-9], |rng| {
        let m = random_loxodromic(rng);
        let n = random_isometry(rng, 2.0);
        let conj = (ops.compose)(&(ops.compose)(&n, &m), &n.inverse());
        let (c0, c1) = (m.classify(crate::moebius::EPS_PARABOLIC), conj.classify(crate::moebius::EPS_PARABOLIC));
        let (l0, l1) = (c0.translation_length(), c1.translation_length());
        let (r0, r1) = (c0.rotation_angle(), c1.rotation_angle());
        let rot = (C64::from_polar(1.0, r0) - C64::from_polar(1.0, r1)).norm();
        let err = (l0 - l1).abs().max(rot);
        let ok = c1.is_loxodromic() && err < 1e-9;
        fail_unless(ok, err, || {
            vals(&[("length", l0), ("conjugate_length", l1), ("angle", r0), ("conjugate_angle", r1)])
        })
    }));

    out.push(run_trials(s, "fixed_points_and_attraction", 4, ctx, ctx.trials, [0.0, 1e-9], |rng| {
        let m = random_loxodromic(rng);
        let fp = match (ops.fixed_points)(&m) {
            Ok(fp) => fp,
            Err(_) => return (f64::INFINITY, Some(vals(&[("trace_re", m.trace().re), ("trace_im", m.trace().im)]))),
        };
        let moved = chordal_dist(&(ops.act_boundary)(&m, &fp.attracting), &fp.attracting);
        let moved_rep = fp.repelling.map_or(0.0, |r| chordal_dist(&(ops.act_boundary)(&m, &r), &r));
        let mut z = BoundaryPoint::Finite(cplx(rng, 3.0));
        for _ in 0..400 {
            z = (ops.act_boundary)(&m, &z);
        }
        let gap = chordal_dist(&z, &fp.attracting);
        let err = moved.max(moved_rep).max(gap);
        fail_unless(err < 1e-9, err, || {
            vals(&[("attracting_moved", moved), ("repelling_moved", moved_rep), ("iterate_gap", gap)])
        })
    }));

    out.push(slope_check(
        s,
        "orbit_to_fixed_point_slope",
        orbit_fixed_point_samples(ctx.seed, fit_samples(ctx)),
        ORBIT_FIXED_POINT_SLOPE,
    ));
    out
}

fn fit_samples(ctx: &Ctx) -> usize {
    ctx.trials.clamp(10, FIT_SAMPLES)
}

fn slope_check(suite: Suite, name: &str, samples: Vec<(f64, f64)>, accept: [f64; 2]) -> CheckReport {
    let (slope, intercept) = linear_fit(&samples);
    let ok = slope >= accept[0] && slope <= accept[1];
    CheckReport {
        suite,
        name: name.into(),
        trials: samples.len(),
        failures: usize::from(!ok),
        statistic: slope,
        accept,
        witness: (!ok).then(|| Witness {
            trial: 0,
            values: vals(&[("slope", slope), ("intercept", intercept), ("samples", samples.len() as f64)]),
            note: Some("log-linear fit outside the accepted window".into()),
        }),
    }
}

// ---------------------------------------------------------------------------
// Hyperbolic geometry checks

fn hypgeo_checks(ctx: &Ctx) -> Vec<CheckReport> {
    let ops = ctx.ops;
    let s = Suite::Hypgeo;
    let mut out = vec![run_trials(s, "horosphere_length_identity", 11, ctx, ctx.trials, [0.0, 1e-10], |rng| {
        let (h, p1, p2, flat) = sample_horosphere_pair(rng);
        let d = (ops.dist_h3)(&p1, &p2);
        match (ops.horoball_surface_dist)(&h, &p1, &p2) {
            Ok(l) => {
                let err = (l - 2.0 * (d / 2.0).sinh()).abs() / l;
                fail_unless(err < 1e-10, err, || vals(&[("surface_length", l), ("distance", d), ("flat", flat)]))
            }
            Err(_) => (f64::INFINITY, Some(vals(&[("distance", d), ("flat", flat)]))),
        }
    })];

    out.push(slope_check(s, "ball_escape_slope", ball_escape_samples(ctx.seed, fit_samples(ctx)), BALL_ESCAPE_SLOPE));

    out.push(run_trials(s, "right_triangle_angle", 12, ctx, ctx.trials, [0.0, 1e-9], |rng| {
        let r = rng.gen_range(0.5..12.0);
        let (x, _, p) = sample_far_segment(rng, r);
        let (xb, pb) = (x.to_ball(), p.to_ball());
        let cross = [xb[1] * pb[2] - xb[2] * pb[1], xb[2] * pb[0] - xb[0] * pb[2], xb[0] * pb[1] - xb[1] * pb[0]];
        let dot: f64 = (0..3).map(|i| xb[i] * pb[i]).sum();
        let norm = cross.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tan = norm / dot;
        let o = H3Point::origin();
        let expected = (ops.dist_h3)(&x, &p).tanh() / (ops.dist_h3)(&o, &p).sinh();
        let err = (tan - expected).abs();
        fail_unless(err < 1e-9, err, || vals(&[("tan_angle", tan), ("expected", expected), ("r", r)]))
    }));

    let window = constants::TUBE_LENGTH_RATIO_WINDOW;
    out.push(run_trials(s, "tube_length_window", 13, ctx, ctx.trials, window, |rng| {
        let (t, p1, p2) = sample_tube_pair(rng);
        let path = match tube_surface_length(&t, &p1, &p2) {
            Ok(p) => p,
            Err(_) => return (f64::INFINITY, Some(vals(&[("radius", t.radius)]))),
        };
        let d = (ops.dist_h3)(&p1, &p2);
        let ratio = path.length / (d / 2.0).exp();
        let ok = ratio >= window[0] && ratio <= window[1];
        fail_unless(ok, ratio, || {
            vals(&[("ratio", ratio), ("radius", t.radius), ("h", path.h), ("phi", path.phi), ("distance", d)])
        })
    }));

    out.push(run_trials(s, "horoball_penetration", 14, ctx, ctx.trials, [f64::NEG_INFINITY, 0.0], |rng| {
        let (h, o, p1, p2) = sample_horoball_config(rng);
        match horoball_penetration_check_with(&h, &o, &p1, &p2, constants::HOROBALL_PENETRATION_C) {
            Ok(c) => {
                let excess = c.bound - c.min_dist;
                fail_unless(c.holds(), excess, || vals(&[("n", c.n), ("min_dist", c.min_dist), ("bound", c.bound)]))
            }
            Err(_) => (f64::INFINITY, Some(vals(&[("precondition_failed", 1.0)]))),
        }
    }));

    out.push(run_trials(s, "tube_penetration", 15, ctx, ctx.trials, [f64::NEG_INFINITY, 0.0], |rng| loop {
        let (t, o, p1, p2) = sample_tube_config(rng);
        match tube_penetration_check_with(&t, &o, &p1, &p2, constants::TUBE_PENETRATION_C) {
            Ok(c) => {
                let excess = c.bound - c.min_dist;
                return fail_unless(c.holds(), excess, || {
                    vals(&[("n", c.n), ("min_dist", c.min_dist), ("bound", c.bound), ("radius", t.radius)])
                });
            }
            Err(Error::SurfacePathTooClose { .. }) => continue,
            Err(_) => return (f64::INFINITY, Some(vals(&[("radius", t.radius)]))),
        }
    }));

    let rejected = [(0.5, 2.0), (1.0, 0.0), (2.0, 5.0)]
        .iter()
        .filter(|(r, u)| {
            let (t, o, p1, p2) = coplanar_midpoint_config(*r, *u);
            matches!(
                tube_penetration_check_with(&t, &o, &p1, &p2, constants::TUBE_PENETRATION_C),
                Err(Error::SurfacePathTooClose { .. })
            )
        })
        .count();
    out.push(CheckReport {
        suite: s,
        name: "coplanar_midpoint_rejected".into(),
        trials: 3,
        failures: 3 - rejected,
        statistic: rejected as f64,
        accept: [3.0, 3.0],
        witness: (rejected < 3).then(|| Witness {
            trial: 0,
            values: vals(&[("rejected", rejected as f64)]),
            note: Some("a coplanar configuration with the basepoint on the surface path was accepted".into()),
        }),
    });

    out.push(run_trials(s, "geodesic_distance_equivariance", 16, ctx, ctx.trials, [0.0, 1e-8], |rng| {
        let (x, y) = (random_point(rng, 3.0), random_point(rng, 3.0));
        let p = random_point(rng, 3.0);
        let Ok(g) = Geodesic::through(&x, &y) else { return (0.0, None) };
        let m = random_isometry(rng, 2.0);
        let (d0, _) = point_to_geodesic(&p, &g);
        let (d1, foot) = point_to_geodesic(&m.act_h3(&p), &g.transform(&m));
        let foot_err = (ops.dist_h3)(&m.act_h3(&p), &foot) - d1;
        let err = (d0 - d1).abs().max(foot_err.abs());
        fail_unless(err < 1e-8, err, || vals(&[("distance", d0), ("moved_distance", d1)]))
    }));
    out
}

// ---------------------------------------------------------------------------
// Floyd checks

/// Depth at which the Floyd constants are fitted before being tested on
/// longer random words.
pub const FLOYD_FIT_DEPTH: usize = 8;

fn random_word(rng: &mut ChaCha8Rng, rank: usize, len: usize) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = rng.gen_range(0..2 * rank) as Letter;
        if letters.last().is_none_or(|&p| p != inverse_letter(l)) {
            letters.push(l);
        }
    }
    Word::from_reduced(letters)
}

fn floyd_checks(ctx: &Ctx) -> Result<Vec<CheckReport>> {
    let s = Suite::Floyd;
    let schottky = symmetric_schottky(2, 2.0, 1.0)?;
    let fit = floyd_fit(&schottky, FLOYD_FIT_DEPTH)?;
    let FloydLower::Linear { b } = fit.lower else {
        return Err(Error::Mistagged("Schottky group fitted with a logarithmic bound".into()));
    };
    let a_gen = generator_max(&schottky);
    let mut out = vec![run_trials(s, "linear_bounds_beyond_fit", 21, ctx, ctx.trials, [0.9 * b, a_gen], |rng| {
        let len = rng.gen_range(FLOYD_FIT_DEPTH + 1..=30);
        let w = random_word(rng, 2, len);
        let ratio = schottky.eval(&w).displacement_origin() / len as f64;
        let ok = ratio >= 0.9 * b && ratio <= a_gen * (1.0 + 1e-12);
        fail_unless(ok, ratio, || vals(&[("ratio", ratio), ("length", len as f64), ("b", b), ("a", a_gen)]))
    })];

    let fuchsian = fuchsian_333();
    let pfit = floyd_fit(&fuchsian, FLOYD_FIT_DEPTH)?;
    let FloydLower::Logarithmic { k } = pfit.lower else {
        return Err(Error::Mistagged("cusped group fitted with a linear bound".into()));
    };
    out.push(run_trials(s, "logarithmic_bound_beyond_fit", 22, ctx, ctx.trials, [f64::NEG_INFINITY, 0.5], |rng| {
        let len = rng.gen_range(FLOYD_FIT_DEPTH + 1..=30);
        let w = random_word(rng, 2, len);
        let d = fuchsian.eval(&w).displacement_origin();
        let excess = 2.0 * (len as f64).ln() - k - d;
        fail_unless(excess <= 0.5, excess, || vals(&[("distance", d), ("length", len as f64), ("k", k)]))
    }));

    let cusp = fuchsian.eval(&fuchsian.parabolic()[0]);
    let limit = residual(&cusp, 10_000);
    out.push(run_trials(s, "cusp_residual_bounded", 23, ctx, ctx.trials, [0.0, 0.1], |rng| {
        let j = rng.gen_range(10..=10_000);
        let err = (residual(&cusp, j) - limit).abs();
        fail_unless(err < 0.1, err, || vals(&[("power", j as f64), ("residual", residual(&cusp, j)), ("limit", limit)]))
    }));
    Ok(out)
}

fn generator_max(rep: &Representation) -> f64 {
    rep.generators.iter().map(Mobius::displacement_origin).fold(0.0, f64::max)
}

fn residual(p: &Mobius, j: i64) -> f64 {
    p.pow(j).displacement_origin() - 2.0 * (j as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_pass_vacuously() {
        let r = run_suite(Suite::All, 1, 0);
        assert!(r.passed() && r.checks.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Moebius, Suite::Hypgeo, Suite::Floyd, Suite::All] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("geometry".parse::<Suite>().is_err());
    }

    #[test]
    fn fit_recovers_slope() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        let (m, c) = linear_fit(&pts);
        assert!((m + 0.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
    }

    #[test]
    fn samplers_respect_their_constraints() {
        for i in 0..200 {
            let rng = &mut trial_rng(7, 0, i);
            let r = rng.gen_range(3.0..12.0);
            let (x, y, p) = sample_far_segment(rng, r);
            let o = H3Point::origin();
            assert!((dist_h3(&o, &p) - r).abs() < 1e-9);
            assert!(dist_h3(&o, &x) >= r - 1e-9 && dist_h3(&o, &y) >= r - 1e-9);
            let r = rng.gen_range(4.0..16.0);
            let a = sample_far_axis_loxodromic(rng, r);
            assert!((a.displacement_origin() - r).abs() < 1e-6, "{} vs {r}", a.displacement_origin());
            let (h, p1, p2, flat) = sample_horosphere_pair(rng);
            assert!(h.offset(&p1).abs() < 1e-9 && h.offset(&p2).abs() < 1e-9);
            assert!(dist_h3(&p1, &p2) >= 0.5 && flat > 0.5);
        }
    }
}
