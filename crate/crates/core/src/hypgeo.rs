//! Geodesics, horoballs and equidistant tubes in upper half-space.
//!
//! Everything is computed by first normalizing the configuration with a
//! Möbius map: geodesics to the vertical axis over `0`, horoballs to
//! `{t ≥ 1}`. Tube boundaries are then Euclidean cones `|z| = t sinh R`, on
//! which the induced metric `sinh²R dθ² + cosh²R du²` (`u` the log of the
//! Euclidean distance to the origin) is flat.

use serde::{Deserialize, Serialize};

use crate::constants;
use crate::error::{Error, Result};
use crate::moebius::{dist_h3, BoundaryPoint, H3Point, Mobius, C64};

/// Tolerance for "point lies on a horosphere / tube boundary".
pub const SURFACE_TOL: f64 = 1e-9;

/// Tangency tolerance for crossing detection.
pub const TANGENT_TOL: f64 = 1e-9;

/// Oriented geodesic between two distinct points at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub from: BoundaryPoint,
    pub to: BoundaryPoint,
}

impl Geodesic {
    pub fn new(from: BoundaryPoint, to: BoundaryPoint) -> Result<Self> {
        if crate::moebius::chordal_dist(&from, &to) < 1e-12 {
            return Err(Error::Degenerate("geodesic endpoints coincide".into()));
        }
        Ok(Geodesic { from, to })
    }

    /// The geodesic through `x` and `y`, oriented from `x` towards `y`.
    pub fn through(x: &H3Point, y: &H3Point) -> Result<Self> {
        let to_origin = Mobius::moving_origin_to(x).inverse();
        let yy = to_origin.act_h3(y);
        let s = yy.z.norm();
        let back = to_origin.inverse();
        if s <= 1e-15 * yy.t.max(1.0) {
            if (yy.t - 1.0).abs() < 1e-15 {
                return Err(Error::Degenerate("geodesic through coincident points".into()));
            }
            let (from, to) = if yy.t > 1.0 {
                (BoundaryPoint::finite(0.0, 0.0), BoundaryPoint::Infinity)
            } else {
                (BoundaryPoint::Infinity, BoundaryPoint::finite(0.0, 0.0))
            };
            return Geodesic::new(back.act_boundary(&from), back.act_boundary(&to));
        }
        let u = yy.z / s;
        // Circle through (0, 1) and (s, t) centred on the real line of the
        // vertical plane: s0² + 1 = (s0 − s)² + t².
        let s0 = (s * s + yy.t * yy.t - 1.0) / (2.0 * s);
        let r = (s0 * s0 + 1.0).sqrt();
        // s0 − r = −1 / (s0 + r) avoids cancellation when s0 ≫ 1.
        let (lo, hi) = if s0 >= 0.0 { (-1.0 / (s0 + r), s0 + r) } else { (s0 - r, 1.0 / (r - s0)) };
        let from = BoundaryPoint::Finite(u * lo);
        let to = BoundaryPoint::Finite(u * hi);
        Geodesic::new(back.act_boundary(&from), back.act_boundary(&to))
    }

    /// A map sending `from ↦ 0` and `to ↦ ∞`.
    pub fn normalizer(&self) -> Mobius {
        Mobius::sending_to_zero_infinity(self.from, self.to).expect("geodesic endpoints are distinct")
    }

    pub fn transform(&self, m: &Mobius) -> Geodesic {
        Geodesic { from: m.act_boundary(&self.from), to: m.act_boundary(&self.to) }
    }

    pub fn reversed(&self) -> Geodesic {
        Geodesic { from: self.to, to: self.from }
    }
}

/// Distance from `p` to the geodesic and the foot of the perpendicular.
pub fn point_to_geodesic(p: &H3Point, g: &Geodesic) -> (f64, H3Point) {
    let n = g.normalizer();
    let q = n.act_h3(p);
    let dist = (q.z.norm() / q.t).asinh();
    let foot = H3Point { z: C64::new(0.0, 0.0), t: q.z.norm().hypot(q.t) };
    (dist, n.inverse().act_h3(&foot))
}

/// Distance from `p` to the segment `[x, y]` and the closest point on it.
pub fn point_to_segment(p: &H3Point, x: &H3Point, y: &H3Point) -> (f64, H3Point) {
    let g = match Geodesic::through(x, y) {
        Ok(g) => g,
        Err(_) => return (dist_h3(p, x), *x),
    };
    let n = g.normalizer();
    let (hx, hy) = (n.act_h3(x).t, n.act_h3(y).t);
    let q = n.act_h3(p);
    let hf = q.z.norm().hypot(q.t);
    if hf >= hx && hf <= hy {
        let foot = H3Point { z: C64::new(0.0, 0.0), t: hf };
        ((q.z.norm() / q.t).asinh(), n.inverse().act_h3(&foot))
    } else {
        let (dx, dy) = (dist_h3(p, x), dist_h3(p, y));
        if dx <= dy {
            (dx, *x)
        } else {
            (dy, *y)
        }
    }
}

/// The point at fraction `s ∈ [0, 1]` of hyperbolic arclength along `[x, y]`.
pub fn segment_point(x: &H3Point, y: &H3Point, s: f64) -> H3Point {
    let g = match Geodesic::through(x, y) {
        Ok(g) => g,
        Err(_) => return *x,
    };
    let n = g.normalizer();
    let (hx, hy) = (n.act_h3(x).t, n.act_h3(y).t);
    let h = hx * (hy / hx).powf(s);
    n.inverse().act_h3(&H3Point { z: C64::new(0.0, 0.0), t: h })
}

/// Distance between two geodesics (zero when they meet or share an endpoint).
pub fn geodesic_distance(g1: &Geodesic, g2: &Geodesic) -> f64 {
    let n = g1.normalizer();
    let (u, v) = (n.act_boundary(&g2.from), n.act_boundary(&g2.to));
    let (u, v) = match (u.as_finite(), v.as_finite()) {
        (Some(u), Some(v)) => (u, v),
        _ => return 0.0,
    };
    if u.norm() == 0.0 || v.norm() == 0.0 {
        return 0.0;
    }
    let f = min_axis_ratio_sq(u, v);
    f.sqrt().asinh()
}

/// Minimum of `|z|²/t²` along the semicircle from `u` to `v`.
fn min_axis_ratio_sq(u: C64, v: C64) -> f64 {
    let c = (u + v) / 2.0;
    let r = (v - u).norm() / 2.0;
    let dir = (v - u) / (2.0 * r);
    let beta = (c.conj() * dir).re;
    let s = r * r + c.norm_sqr();
    // Stationary points of the ratio along x = cos α solve
    // rβ x² + (r² + |c|²) x + rβ = 0; the root inside (−1, 1) is the minimum.
    let x = if beta.abs() < 1e-300 {
        0.0
    } else {
        let disc = (s * s - 4.0 * r * r * beta * beta).max(0.0);
        // Product of roots is 1, so the small root is 2rβ / (−s − √disc).
        2.0 * r * beta / (-s - disc.sqrt())
    };
    let z = c + dir * (r * x);
    let t2 = r * r * (1.0 - x * x);
    z.norm_sqr() / t2
}

/// A horoball. For base `∞` it is `{t ≥ size}`; for a finite base it is the
/// Euclidean ball of diameter `size` tangent to the plane at the base.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Horoball {
    pub base: BoundaryPoint,
    pub size: f64,
}

impl Horoball {
    pub fn new(base: BoundaryPoint, size: f64) -> Result<Self> {
        if !(size > 0.0) || !size.is_finite() {
            return Err(Error::Degenerate(format!("horoball size must be positive, got {size}")));
        }
        Ok(Horoball { base, size })
    }

    /// A map taking this horoball onto `{t ≥ 1}`.
    pub fn normalizer(&self) -> Mobius {
        match self.base {
            BoundaryPoint::Infinity => {
                let r = self.size.sqrt();
                Mobius::new(C64::new(1.0 / r, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(r, 0.0))
                    .expect("diagonal")
            }
            BoundaryPoint::Finite(z0) => {
                let r = self.size.sqrt();
                Mobius::new(C64::new(0.0, 0.0), C64::new(-r, 0.0), C64::new(1.0 / r, 0.0), -z0 / r)
                    .expect("unit determinant")
            }
        }
    }

    /// Signed distance to the horosphere, positive inside.
    pub fn offset(&self, p: &H3Point) -> f64 {
        self.normalizer().act_h3(p).t.ln()
    }

    pub fn contains(&self, p: &H3Point) -> bool {
        self.offset(p) > SURFACE_TOL
    }

    /// The boundary point with flat coordinate `w` in the normalized picture.
    pub fn surface_point(&self, w: C64) -> H3Point {
        self.normalizer().inverse().act_h3(&H3Point { z: w, t: 1.0 })
    }

    pub fn transform(&self, m: &Mobius) -> Horoball {
        let base = m.act_boundary(&self.base);
        let p = m.act_h3(&self.surface_point(C64::new(0.0, 0.0)));
        let size = match base {
            BoundaryPoint::Infinity => p.t,
            BoundaryPoint::Finite(z0) => ((p.z - z0).norm_sqr() + p.t * p.t) / p.t,
        };
        Horoball { base, size }
    }

    /// Distance from a point outside (zero inside).
    pub fn distance_to(&self, p: &H3Point) -> f64 {
        (-self.offset(p)).max(0.0)
    }
}

/// Equidistant tube of radius `radius` about a geodesic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub axis: Geodesic,
    pub radius: f64,
}

/// Cylindrical coordinates relative to a tube axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisCoords {
    /// Distance to the axis.
    pub rho: f64,
    /// Signed arclength of the projection along the axis.
    pub u: f64,
    pub theta: f64,
}

impl Tube {
    pub fn new(axis: Geodesic, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Degenerate(format!("tube radius must be positive, got {radius}")));
        }
        Ok(Tube { axis, radius })
    }

    pub fn coords(&self, p: &H3Point) -> AxisCoords {
        let q = self.axis.normalizer().act_h3(p);
        AxisCoords { rho: (q.z.norm() / q.t).asinh(), u: q.z.norm().hypot(q.t).ln(), theta: q.z.arg() }
    }

    /// The point at distance `rho` from the axis with axial coordinate `u`
    /// and angle `theta`.
    pub fn point_at(&self, rho: f64, u: f64, theta: f64) -> H3Point {
        let e = u.exp();
        let q = H3Point { z: C64::from_polar(e * rho.tanh(), theta), t: e / rho.cosh() };
        self.axis.normalizer().inverse().act_h3(&q)
    }

    pub fn surface_point(&self, u: f64, theta: f64) -> H3Point {
        self.point_at(self.radius, u, theta)
    }

    pub fn contains(&self, p: &H3Point) -> bool {
        self.coords(p).rho < self.radius - SURFACE_TOL * self.radius.max(1.0)
    }

    pub fn distance_to(&self, p: &H3Point) -> f64 {
        (self.coords(p).rho - self.radius).max(0.0)
    }

    pub fn transform(&self, m: &Mobius) -> Tube {
        Tube { axis: self.axis.transform(m), radius: self.radius }
    }
}

/// A thin-part component: a horoball about a cusp or a tube about a short
/// geodesic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThinPart {
    Horoball(Horoball),
    Tube(Tube),
}

impl ThinPart {
    pub fn contains(&self, p: &H3Point) -> bool {
        match self {
            ThinPart::Horoball(h) => h.contains(p),
            ThinPart::Tube(t) => t.contains(p),
        }
    }

    pub fn distance_to(&self, p: &H3Point) -> f64 {
        match self {
            ThinPart::Horoball(h) => h.distance_to(p),
            ThinPart::Tube(t) => t.distance_to(p),
        }
    }

    pub fn transform(&self, m: &Mobius) -> ThinPart {
        match self {
            ThinPart::Horoball(h) => ThinPart::Horoball(h.transform(m)),
            ThinPart::Tube(t) => ThinPart::Tube(t.transform(m)),
        }
    }

    /// Distance between two thin parts (zero when they overlap).
    pub fn distance(&self, other: &ThinPart) -> f64 {
        match (self, other) {
            (ThinPart::Horoball(a), ThinPart::Horoball(b)) => {
                let n = a.normalizer();
                let b = b.transform(&n);
                match b.base {
                    BoundaryPoint::Infinity => 0.0,
                    BoundaryPoint::Finite(_) => (-b.size.ln()).max(0.0),
                }
            }
            (ThinPart::Tube(a), ThinPart::Tube(b)) => {
                (geodesic_distance(&a.axis, &b.axis) - a.radius - b.radius).max(0.0)
            }
            (ThinPart::Horoball(h), ThinPart::Tube(t)) | (ThinPart::Tube(t), ThinPart::Horoball(h)) => {
                let g = t.axis.transform(&h.normalizer());
                let top = match (g.from.as_finite(), g.to.as_finite()) {
                    (Some(p), Some(q)) => (p - q).norm() / 2.0,
                    _ => f64::INFINITY,
                };
                ((-top.ln()).max(0.0) - t.radius).max(0.0)
            }
        }
    }
}

/// A thin part together with the word of the element stabilizing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedThinPart {
    pub word: String,
    pub part: ThinPart,
}

/// A collection of thin parts built with Margulis parameter `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinPartSystem {
    pub epsilon: f64,
    pub parts: Vec<TaggedThinPart>,
    /// Smallest pairwise distance, recorded at construction.
    pub separation: f64,
}

impl ThinPartSystem {
    pub fn new(epsilon: f64, parts: Vec<TaggedThinPart>) -> Self {
        let mut separation = f64::INFINITY;
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                separation = separation.min(parts[i].part.distance(&parts[j].part));
            }
        }
        ThinPartSystem { epsilon, parts, separation }
    }

    pub fn find(&self, word: &str) -> Option<&ThinPart> {
        self.parts.iter().find(|p| p.word == word).map(|p| &p.part)
    }
}

/// The thin part `{x : d(x, m·x) ≤ ε}` of a parabolic or loxodromic element
/// (for loxodromics the union over powers `1..=max_power`). `None` when the
/// element moves every point more than `ε`.
pub fn thin_part_of(m: &Mobius, epsilon: f64, max_power: u32) -> Option<ThinPart> {
    use crate::moebius::MapClass;
    match m.classify(crate::moebius::EPS_PARABOLIC) {
        MapClass::Parabolic => {
            let fp = m.fixed_points().ok()?.attracting;
            // Conjugate to z ↦ z + τ; displacement at height t is
            // 2 asinh(|τ| / 2t).
            let s = match fp {
                BoundaryPoint::Infinity => Mobius::identity(),
                BoundaryPoint::Finite(z0) => {
                    Mobius::new(C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), -z0).ok()?
                }
            };
            let conj = m.conjugate_by(&s);
            let tau = (conj.b() / conj.d()).norm();
            let height = tau / (2.0 * (epsilon / 2.0).sinh());
            let hb = Horoball::new(BoundaryPoint::Infinity, height).ok()?;
            Some(ThinPart::Horoball(hb.transform(&s.inverse())))
        }
        MapClass::Loxodromic { .. } => {
            let fp = m.fixed_points().ok()?;
            let axis = Geodesic::new(fp.repelling?, fp.attracting).ok()?;
            let mut best: f64 = -1.0;
            let mut power = *m;
            for _ in 0..max_power.max(1) {
                let class = power.classify(crate::moebius::EPS_PARABOLIC);
                if let MapClass::Loxodromic { multiplier } = class {
                    let ell = multiplier.norm().ln();
                    let theta = multiplier.arg();
                    // cosh d(x, A x) = cosh ℓ cosh² r − cos θ sinh² r.
                    let num = epsilon.cosh() - ell.cosh();
                    let den = ell.cosh() - theta.cos();
                    if num > 0.0 && den > 0.0 {
                        best = best.max((num / den).sqrt().asinh());
                    }
                }
                power = power.compose(m);
            }
            if best > 0.0 {
                Some(ThinPart::Tube(Tube { axis, radius: best }))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Shortest path on a horosphere (flat in the normalized picture).
pub fn horoball_surface_dist(h: &Horoball, p1: &H3Point, p2: &H3Point) -> Result<f64> {
    let n = h.normalizer();
    let (q1, q2) = (n.act_h3(p1), n.act_h3(p2));
    for q in [q1, q2] {
        let off = q.t.ln();
        if off.abs() > SURFACE_TOL {
            return Err(Error::OffSurface { offset: off });
        }
    }
    Ok((q1.z - q2.z).norm())
}

/// Shortest path on a tube boundary in the flat metric
/// `sinh²R dθ² + cosh²R du²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubePath {
    pub length: f64,
    /// Axial distance between the projections.
    pub h: f64,
    /// Unwrapped rotation angle in `[0, π]`.
    pub phi: f64,
}

pub fn tube_surface_length(t: &Tube, p1: &H3Point, p2: &H3Point) -> Result<TubePath> {
    let (c1, c2) = (t.coords(p1), t.coords(p2));
    for c in [c1, c2] {
        let off = c.rho - t.radius;
        if off.abs() > SURFACE_TOL * t.radius.max(1.0) {
            return Err(Error::OffSurface { offset: off });
        }
    }
    let h = (c1.u - c2.u).abs();
    let phi = unwrap_angle(c2.theta - c1.theta).abs();
    let length = (phi * t.radius.sinh()).hypot(h * t.radius.cosh());
    Ok(TubePath { length, h, phi })
}

/// Wraps an angle into `(−π, π]`.
fn unwrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut x = a.rem_euclid(TAU);
    if x > PI {
        x -= TAU;
    }
    x
}

/// Points of the shortest surface path between two points on the tube.
fn tube_surface_path(t: &Tube, p1: &H3Point, p2: &H3Point, samples: usize) -> Vec<H3Point> {
    let (c1, c2) = (t.coords(p1), t.coords(p2));
    let dtheta = unwrap_angle(c2.theta - c1.theta);
    (0..=samples)
        .map(|i| {
            let s = i as f64 / samples as f64;
            t.surface_point(c1.u + s * (c2.u - c1.u), c1.theta + s * dtheta)
        })
        .collect()
}

/// How a geodesic meets a horoball or tube, in order along the geodesic.
/// `None` entry (exit) means the geodesic starts (ends) inside, at an ideal
/// point in the closure of the region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Crossing {
    Miss,
    Tangent(H3Point),
    Contained,
    Through { entry: Option<H3Point>, exit: Option<H3Point> },
}

pub fn geodesic_thinpart_crossing(g: &Geodesic, part: &ThinPart) -> Crossing {
    match part {
        ThinPart::Horoball(h) => horoball_crossing(g, h),
        ThinPart::Tube(t) => tube_crossing(g, t),
    }
}

fn horoball_crossing(g: &Geodesic, h: &Horoball) -> Crossing {
    let n = h.normalizer();
    let back = n.inverse();
    let map = |z: C64, t: f64| back.act_h3(&H3Point { z, t });
    let gg = g.transform(&n);
    match (gg.from.as_finite(), gg.to.as_finite()) {
        (None, None) => Crossing::Contained,
        (None, Some(q)) => Crossing::Through { entry: None, exit: Some(map(q, 1.0)) },
        (Some(p), None) => Crossing::Through { entry: Some(map(p, 1.0)), exit: None },
        (Some(p), Some(q)) => {
            let c = (p + q) / 2.0;
            let r = (q - p).norm() / 2.0;
            let dir = (q - p) / (2.0 * r);
            if (r - 1.0).abs() <= TANGENT_TOL {
                Crossing::Tangent(map(c, r))
            } else if r < 1.0 {
                Crossing::Miss
            } else {
                let s = (r * r - 1.0).sqrt();
                Crossing::Through { entry: Some(map(c - dir * s, 1.0)), exit: Some(map(c + dir * s, 1.0)) }
            }
        }
    }
}

fn tube_crossing(g: &Geodesic, tube: &Tube) -> Crossing {
    let n = tube.axis.normalizer();
    let back = n.inverse();
    let sh = tube.radius.sinh();
    let gg = g.transform(&n);
    let is_zero = |p: &BoundaryPoint| p.as_finite().is_some_and(|z| z.norm() == 0.0);
    let on_axis = |p: &BoundaryPoint| p.is_infinite() || is_zero(p);
    if on_axis(&gg.from) && on_axis(&gg.to) {
        return Crossing::Contained;
    }
    let map = |z: C64, t: f64| back.act_h3(&H3Point { z, t });
    match (gg.from.as_finite(), gg.to.as_finite()) {
        (None, Some(q)) => {
            // Vertical line over q, travelled downwards.
            Crossing::Through { entry: None, exit: Some(map(q, q.norm() / sh)) }
        }
        (Some(p), None) => Crossing::Through { entry: Some(map(p, p.norm() / sh)), exit: None },
        (Some(p), Some(q)) => {
            let c = (p + q) / 2.0;
            let r = (q - p).norm() / 2.0;
            let dir = (q - p) / (2.0 * r);
            let beta = (c.conj() * dir).re;
            // |c + r x u|² = r² (1 − x²) sinh²R with x = cos α running from
            // −1 at `from` to +1 at `to`.
            let qa = r * r * (1.0 + sh * sh);
            let qb = 2.0 * r * beta;
            let qc = c.norm_sqr() - r * r * sh * sh;
            let disc = qb * qb - 4.0 * qa * qc;
            let point = |x: f64| map(c + dir * (r * x), r * (1.0 - x * x).max(0.0).sqrt());
            let scale = qb * qb + (4.0 * qa * qc).abs();
            if disc < -TANGENT_TOL * scale {
                return Crossing::Miss;
            }
            let sq = disc.max(0.0).sqrt();
            let (x1, x2) = if qb >= 0.0 {
                let qq = -(qb + sq) / 2.0;
                let a = qq / qa;
                let b = if qq != 0.0 { qc / qq } else { -a };
                (a.min(b), a.max(b))
            } else {
                let qq = -(qb - sq) / 2.0;
                let a = qq / qa;
                let b = if qq != 0.0 { qc / qq } else { -a };
                (a.min(b), a.max(b))
            };
            if is_zero(&gg.from) {
                return Crossing::Through { entry: None, exit: Some(point(x2)) };
            }
            if is_zero(&gg.to) {
                return Crossing::Through { entry: Some(point(x1)), exit: None };
            }
            if sq <= TANGENT_TOL * qa {
                let x = (x1 + x2) / 2.0;
                if x.abs() < 1.0 {
                    return Crossing::Tangent(point(x));
                }
                return Crossing::Miss;
            }
            if x1 > -1.0 && x2 < 1.0 {
                Crossing::Through { entry: Some(point(x1)), exit: Some(point(x2)) }
            } else {
                Crossing::Miss
            }
        }
        (None, None) => Crossing::Contained,
    }
}

/// Whether the segment `[x, y]` meets the closed thin part.
pub fn segment_meets(x: &H3Point, y: &H3Point, part: &ThinPart) -> bool {
    if part.contains(x) || part.contains(y) {
        return true;
    }
    let g = match Geodesic::through(x, y) {
        Ok(g) => g,
        Err(_) => return false,
    };
    let n = g.normalizer();
    let param = |p: &H3Point| n.act_h3(p).t.ln();
    let (lo, hi) = (param(x), param(y));
    let (a, b) = match geodesic_thinpart_crossing(&g, part) {
        Crossing::Miss => return false,
        Crossing::Contained => return true,
        Crossing::Tangent(p) => (param(&p), param(&p)),
        Crossing::Through { entry, exit } => {
            (entry.map_or(f64::NEG_INFINITY, |p| param(&p)), exit.map_or(f64::INFINITY, |p| param(&p)))
        }
    };
    a <= hi && b >= lo
}

/// Outcome of a penetration inequality check: the segment `[P₁, P₂]` should
/// stay at distance at least `bound = n/4 − c` from `O`, where
/// `n = min d(O, Pᵢ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenetrationCheck {
    pub min_dist: f64,
    pub bound: f64,
    pub n: f64,
    /// Closest approach of the surface path to `O` (tubes only).
    pub surface_path_min: Option<f64>,
}

impl PenetrationCheck {
    pub fn holds(&self) -> bool {
        self.min_dist >= self.bound
    }

    /// `n/4 − min_dist`: the smallest constant for which the inequality holds.
    pub fn margin(&self) -> f64 {
        self.n / 4.0 - self.min_dist
    }
}

pub fn horoball_penetration_check(h: &Horoball, o: &H3Point, p1: &H3Point, p2: &H3Point) -> Result<PenetrationCheck> {
    horoball_penetration_check_with(h, o, p1, p2, constants::HOROBALL_PENETRATION_C)
}

pub fn horoball_penetration_check_with(
    h: &Horoball,
    o: &H3Point,
    p1: &H3Point,
    p2: &H3Point,
    c: f64,
) -> Result<PenetrationCheck> {
    if h.offset(o) > SURFACE_TOL {
        return Err(Error::Precondition("basepoint lies inside the horoball".into()));
    }
    for p in [p1, p2] {
        let off = h.offset(p);
        if off.abs() > SURFACE_TOL {
            return Err(Error::OffSurface { offset: off });
        }
    }
    let n = dist_h3(o, p1).min(dist_h3(o, p2));
    let (min_dist, _) = point_to_segment(o, p1, p2);
    Ok(PenetrationCheck { min_dist, bound: n / 4.0 - c, n, surface_path_min: None })
}

pub fn tube_penetration_check(t: &Tube, o: &H3Point, p1: &H3Point, p2: &H3Point) -> Result<PenetrationCheck> {
    tube_penetration_check_with(t, o, p1, p2, constants::TUBE_PENETRATION_C)
}

pub fn tube_penetration_check_with(
    t: &Tube,
    o: &H3Point,
    p1: &H3Point,
    p2: &H3Point,
    c: f64,
) -> Result<PenetrationCheck> {
    if t.contains(o) {
        return Err(Error::Precondition("basepoint lies inside the tube".into()));
    }
    for p in [p1, p2] {
        let off = t.coords(p).rho - t.radius;
        if off.abs() > SURFACE_TOL * t.radius.max(1.0) {
            return Err(Error::OffSurface { offset: off });
        }
    }
    let n = dist_h3(o, p1).min(dist_h3(o, p2));
    let path_min = tube_surface_path(t, p1, p2, constants::SURFACE_PATH_SAMPLES)
        .iter()
        .map(|p| dist_h3(o, p))
        .fold(f64::INFINITY, f64::min);
    if path_min < n - 1e-9 * n.max(1.0) {
        return Err(Error::SurfacePathTooClose { n, min: path_min });
    }
    let (min_dist, _) = point_to_segment(o, p1, p2);
    Ok(PenetrationCheck { min_dist, bound: n / 4.0 - c, n, surface_path_min: Some(path_min) })
}
