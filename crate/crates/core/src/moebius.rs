//! PSL(2,C) arithmetic: normalized matrices, classification, fixed points,
//! and the actions on the Riemann sphere and on upper half-space.
//!
//! Upper half-space points are `(z, t)` with `t > 0`. The ball model is
//! reached through the isometry
//!
//! ```text
//! (x, y, t)  ->  (2x, 2y, x² + y² + t² − 1) / (x² + y² + (t + 1)²)
//! ```
//!
//! which sends the basepoint `(0, 1)` to the ball centre and restricts to
//! inverse stereographic projection on the boundary, so the Euclidean metric
//! on the boundary sphere is exactly the chordal metric.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default threshold on `|tr² − 4|` below which a map counts as parabolic.
pub const EPS_PARABOLIC: f64 = 1e-9;

/// Entries above this magnitude mark a product as badly conditioned.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative tolerance on `Im tr²` when deciding that a trace square is real.
const REAL_TRACE_TOL: f64 = 1e-13;

const IDENTITY_TOL: f64 = 1e-12;

#[inline]
fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Finite(C64),
    Infinity,
}

impl BoundaryPoint {
    pub fn finite(re: f64, im: f64) -> Self {
        BoundaryPoint::Finite(c(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }

    pub fn as_finite(&self) -> Option<C64> {
        match *self {
            BoundaryPoint::Finite(z) => Some(z),
            BoundaryPoint::Infinity => None,
        }
    }

    /// Inverse stereographic projection onto the unit sphere; `0` goes to the
    /// south pole and `∞` to the north pole.
    pub fn to_sphere(&self) -> [f64; 3] {
        match *self {
            BoundaryPoint::Infinity => [0.0, 0.0, 1.0],
            BoundaryPoint::Finite(z) => {
                let r2 = z.norm_sqr();
                if !r2.is_finite() {
                    return [0.0, 0.0, 1.0];
                }
                let den = 1.0 + r2;
                [2.0 * z.re / den, 2.0 * z.im / den, (r2 - 1.0) / den]
            }
        }
    }

    /// Stereographic projection from the unit sphere. The input is
    /// renormalized to unit length first.
    pub fn from_sphere(q: [f64; 3]) -> Self {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        let (u, v, w) = (q[0] / n, q[1] / n, q[2] / n);
        let h2 = u * u + v * v;
        if w > 0.0 {
            if h2 == 0.0 {
                return BoundaryPoint::Infinity;
            }
            // 1 − w = (u² + v²) / (1 + w) on the sphere; avoids cancellation.
            let s = (1.0 + w) / h2;
            BoundaryPoint::Finite(c(u * s, v * s))
        } else {
            BoundaryPoint::Finite(c(u / (1.0 - w), v / (1.0 - w)))
        }
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Infinity => write!(f, "inf"),
            BoundaryPoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

/// Chordal distance on the Riemann sphere, bounded by 2.
pub fn chordal_dist(p: &BoundaryPoint, q: &BoundaryPoint) -> f64 {
    match (*p, *q) {
        (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => 0.0,
        (BoundaryPoint::Finite(z), BoundaryPoint::Infinity) | (BoundaryPoint::Infinity, BoundaryPoint::Finite(z)) => {
            let r2 = z.norm_sqr();
            if r2.is_finite() {
                2.0 / (1.0 + r2).sqrt()
            } else {
                0.0
            }
        }
        (BoundaryPoint::Finite(z), BoundaryPoint::Finite(w)) => {
            let (a, b) = (z.norm_sqr(), w.norm_sqr());
            if !a.is_finite() || !b.is_finite() {
                return euclid3(&p.to_sphere(), &q.to_sphere());
            }
            (2.0 * (z - w).norm() / ((1.0 + a).sqrt() * (1.0 + b).sqrt())).min(2.0)
        }
    }
}

pub(crate) fn euclid3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// A point of upper half-space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H3Point {
    pub z: C64,
    pub t: f64,
}

impl H3Point {
    pub fn new(z: C64, t: f64) -> Self {
        debug_assert!(t > 0.0, "height must be positive, got {t}");
        H3Point { z, t }
    }

    pub fn from_parts(x: f64, y: f64, t: f64) -> Self {
        H3Point::new(c(x, y), t)
    }

    /// The basepoint, i.e. the centre of the ball model.
    pub fn origin() -> Self {
        H3Point { z: c(0.0, 0.0), t: 1.0 }
    }

    pub fn to_ball(&self) -> [f64; 3] {
        let r2 = self.z.norm_sqr() + self.t * self.t;
        let den = self.z.norm_sqr() + (self.t + 1.0).powi(2);
        [2.0 * self.z.re / den, 2.0 * self.z.im / den, (r2 - 1.0) / den]
    }

    pub fn from_ball(q: [f64; 3]) -> Self {
        let r2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
        let den = q[0] * q[0] + q[1] * q[1] + (1.0 - q[2]).powi(2);
        H3Point { z: c(2.0 * q[0] / den, 2.0 * q[1] / den), t: (1.0 - r2) / den }
    }

    /// Radial projection from the ball centre onto the sphere at infinity.
    /// The centre itself has no shadow.
    pub fn shadow(&self) -> Option<BoundaryPoint> {
        let q = self.to_ball();
        let n = euclid3(&q, &[0.0; 3]);
        if n == 0.0 {
            None
        } else {
            Some(BoundaryPoint::from_sphere(q))
        }
    }
}

/// Hyperbolic distance in upper half-space.
pub fn dist_h3(p: &H3Point, q: &H3Point) -> f64 {
    // cosh d = 1 + 2 sinh²(d/2); the half-angle form keeps precision for
    // nearby points.
    let num = (p.z - q.z).norm_sqr() + (p.t - q.t).powi(2);
    2.0 * (num.sqrt() / (2.0 * (p.t * q.t).sqrt())).asinh()
}

/// Euclidean distance between two points in the ball model.
pub fn ball_dist(p: &H3Point, q: &H3Point) -> f64 {
    euclid3(&p.to_ball(), &q.to_ball())
}

/// Euclidean distance in the ball model between an interior point and a
/// point of the boundary sphere.
pub fn ball_dist_to_boundary(p: &H3Point, xi: &BoundaryPoint) -> f64 {
    euclid3(&p.to_ball(), &xi.to_sphere())
}

/// Classification of a Möbius map by its trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapClass {
    Identity,
    Parabolic,
    Elliptic { rotation: f64 },
    Loxodromic { multiplier: C64 },
}

impl MapClass {
    pub fn is_loxodromic(&self) -> bool {
        matches!(self, MapClass::Loxodromic { .. })
    }

    pub fn is_parabolic(&self) -> bool {
        matches!(self, MapClass::Parabolic)
    }

    /// `log |λ|` for loxodromics, zero otherwise.
    pub fn translation_length(&self) -> f64 {
        match self {
            MapClass::Loxodromic { multiplier } => multiplier.norm().ln(),
            _ => 0.0,
        }
    }

    pub fn rotation_angle(&self) -> f64 {
        match self {
            MapClass::Loxodromic { multiplier } => multiplier.arg(),
            MapClass::Elliptic { rotation } => *rotation,
            _ => 0.0,
        }
    }
}

/// Fixed points of a non-identity map. Parabolics have no repelling point;
/// for elliptics both points are reported but `labeled` is false.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoints {
    pub attracting: BoundaryPoint,
    pub repelling: Option<BoundaryPoint>,
    pub labeled: bool,
}

/// An element of PSL(2,C), stored with determinant one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    a: C64,
    b: C64,
    c: C64,
    d: C64,
}

impl Mobius {
    /// Builds the map from an arbitrary invertible matrix, rescaling by a
    /// square root of the determinant.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if !(det.norm() > 1e-14 * scale * scale) || !det.is_finite() {
            return Err(Error::Singular);
        }
        let s = det.sqrt();
        Ok(Mobius { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    /// Real-entry convenience constructor.
    pub fn real(a: f64, b: f64, c_: f64, d: f64) -> Result<Self> {
        Mobius::new(c(a, 0.0), c(b, 0.0), c(c_, 0.0), c(d, 0.0))
    }

    pub fn identity() -> Self {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        Mobius { a: one, b: zero, c: zero, d: one }
    }

    /// `z ↦ μ² z` with attracting fixed point ∞ when `|μ| > 1`.
    pub fn diagonal(mu: C64) -> Result<Self> {
        Mobius::new(mu, c(0.0, 0.0), c(0.0, 0.0), mu.inv())
    }

    /// `z ↦ z + s`.
    pub fn translation(s: C64) -> Self {
        Mobius { a: c(1.0, 0.0), b: s, c: c(0.0, 0.0), d: c(1.0, 0.0) }
    }

    /// An isometry taking the basepoint `(0, 1)` to `p`.
    pub fn moving_origin_to(p: &H3Point) -> Self {
        let r = p.t.sqrt();
        Mobius { a: c(r, 0.0), b: p.z / r, c: c(0.0, 0.0), d: c(1.0 / r, 0.0) }
    }

    /// The rotation about the basepoint given by a unit quaternion
    /// `(α, β)`, i.e. the SU(2) matrix `[[α, β], [−β̄, ᾱ]]`.
    pub fn rotation(alpha: C64, beta: C64) -> Result<Self> {
        Mobius::new(alpha, beta, -beta.conj(), alpha.conj())
    }

    /// The loxodromic with the given attracting and repelling fixed points and
    /// multiplier `λ` (derivative `1/λ` at the attracting point).
    pub fn with_fixed_points(attracting: BoundaryPoint, repelling: BoundaryPoint, multiplier: C64) -> Result<Self> {
        if !(multiplier.norm() > 1.0) {
            return Err(Error::Degenerate("multiplier must have modulus > 1".into()));
        }
        let s = Mobius::sending_to_zero_infinity(repelling, attracting)?;
        let mu = multiplier.sqrt();
        let core = Mobius::diagonal(mu)?;
        Ok(s.inverse().compose(&core).compose(&s))
    }

    /// A map sending `p ↦ 0` and `q ↦ ∞`.
    pub fn sending_to_zero_infinity(p: BoundaryPoint, q: BoundaryPoint) -> Result<Self> {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        match (p, q) {
            (BoundaryPoint::Finite(p), BoundaryPoint::Finite(q)) => Mobius::new(one, -p, one, -q),
            (BoundaryPoint::Finite(p), BoundaryPoint::Infinity) => Ok(Mobius::translation(-p)),
            (BoundaryPoint::Infinity, BoundaryPoint::Finite(q)) => Mobius::new(zero, one, -one, q),
            (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => {
                Err(Error::Degenerate("cannot separate a point from itself".into()))
            }
        }
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn a(&self) -> C64 {
        self.a
    }
    pub fn b(&self) -> C64 {
        self.b
    }
    pub fn c(&self) -> C64 {
        self.c
    }
    pub fn d(&self) -> C64 {
        self.d
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn max_entry(&self) -> f64 {
        self.a.norm().max(self.b.norm()).max(self.c.norm()).max(self.d.norm())
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.max_entry() > CONDITION_LIMIT
    }

    /// Matrix product `self · other`, renormalized to determinant one.
    pub fn compose(&self, o: &Mobius) -> Mobius {
        let m = Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        };
        m.renormalized()
    }

    fn renormalized(self) -> Mobius {
        let det = self.det();
        // For large entries `ad − bc` is lost in rounding; only correct drift
        // that is visible above that noise.
        let noise = 8.0 * f64::EPSILON * ((self.a * self.d).norm() + (self.b * self.c).norm());
        if (det - 1.0).norm() <= noise.max(1e-15) {
            return self;
        }
        let s = det.sqrt();
        if s.norm() == 0.0 || !s.is_finite() {
            return self;
        }
        Mobius { a: self.a / s, b: self.b / s, c: self.c / s, d: self.d / s }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, n: i64) -> Mobius {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Mobius::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// `h · self · h⁻¹`.
    pub fn conjugate_by(&self, h: &Mobius) -> Mobius {
        h.compose(self).compose(&h.inverse())
    }

    /// `min(‖M − N‖∞, ‖M + N‖∞)` over entries: the distance in PSL(2,C).
    pub fn projective_distance(&self, o: &Mobius) -> f64 {
        let minus =
            (self.a - o.a).norm().max((self.b - o.b).norm()).max((self.c - o.c).norm()).max((self.d - o.d).norm());
        let plus =
            (self.a + o.a).norm().max((self.b + o.b).norm()).max((self.c + o.c).norm()).max((self.d + o.d).norm());
        minus.min(plus)
    }

    pub fn approx_eq(&self, o: &Mobius, tol: f64) -> bool {
        self.projective_distance(o) < tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.projective_distance(&Mobius::identity()) < tol
    }

    /// Action on the Riemann sphere.
    pub fn act_boundary(&self, p: &BoundaryPoint) -> BoundaryPoint {
        match *p {
            BoundaryPoint::Infinity => {
                if self.c == c(0.0, 0.0) {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(self.a / self.c)
                }
            }
            BoundaryPoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den == c(0.0, 0.0) {
                    BoundaryPoint::Infinity
                } else {
                    let w = (self.a * z + self.b) / den;
                    if w.is_finite() {
                        BoundaryPoint::Finite(w)
                    } else {
                        BoundaryPoint::Infinity
                    }
                }
            }
        }
    }

    /// Poincaré extension to upper half-space.
    pub fn act_h3(&self, p: &H3Point) -> H3Point {
        let w = self.c * p.z + self.d;
        let t2 = p.t * p.t;
        let denom = w.norm_sqr() + self.c.norm_sqr() * t2;
        let z = ((self.a * p.z + self.b) * w.conj() + self.a * self.c.conj() * t2) / denom;
        H3Point { z, t: p.t / denom }
    }

    /// Orbit of the basepoint.
    pub fn orbit_origin(&self) -> H3Point {
        // Specialization of act_h3 at (0, 1).
        let denom = self.c.norm_sqr() + self.d.norm_sqr();
        let z = (self.b * self.d.conj() + self.a * self.c.conj()) / denom;
        H3Point { z, t: 1.0 / denom }
    }

    /// `d(O, M·O)`, computed from the Frobenius norm:
    /// `cosh d = ‖M‖² / 2`.
    pub fn displacement_origin(&self) -> f64 {
        // |a − d̄|² + |b + c̄|² = ‖M‖² − 2, so this is sinh²(d/2) without
        // the cancellation of acosh near zero.
        let s2 = ((self.a - self.d.conj()).norm_sqr() + (self.b + self.c.conj()).norm_sqr()) / 4.0;
        2.0 * s2.sqrt().asinh()
    }

    pub fn classify(&self, eps_par: f64) -> MapClass {
        if self.is_identity(IDENTITY_TOL) {
            return MapClass::Identity;
        }
        let tr = self.trace();
        let tr2 = tr * tr;
        if (tr2 - 4.0).norm() < eps_par {
            return MapClass::Parabolic;
        }
        if tr2.im.abs() <= REAL_TRACE_TOL * tr2.norm().max(1.0) && tr2.re >= 0.0 && tr2.re < 4.0 {
            let half = (tr.re.abs() / 2.0).min(1.0);
            return MapClass::Elliptic { rotation: 2.0 * half.acos() };
        }
        let disc = (tr2 - 4.0).sqrt();
        let mut mu = (tr + disc) / 2.0;
        if mu.norm() < 1.0 {
            mu = (tr - disc) / 2.0;
        }
        MapClass::Loxodromic { multiplier: mu * mu }
    }

    pub fn fixed_points(&self) -> Result<FixedPoints> {
        self.fixed_points_eps(EPS_PARABOLIC)
    }

    /// Fixed points; the attracting one is selected by eigenvalue modulus.
    pub fn fixed_points_eps(&self, eps_par: f64) -> Result<FixedPoints> {
        let class = self.classify(eps_par);
        match class {
            MapClass::Identity => Err(Error::NoFixedPoints),
            MapClass::Parabolic => {
                let scale = self.max_entry();
                let p = if self.c.norm() <= 1e-14 * scale {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((self.a - self.d) / (2.0 * self.c))
                };
                Ok(FixedPoints { attracting: p, repelling: None, labeled: true })
            }
            MapClass::Elliptic { .. } | MapClass::Loxodromic { .. } => {
                let (p, q) = self.two_fixed_points();
                // Eigenvalue at a fixed point z is c z + d (or a at ∞).
                let ev = |x: &BoundaryPoint| match *x {
                    BoundaryPoint::Infinity => self.a.norm(),
                    BoundaryPoint::Finite(z) => (self.c * z + self.d).norm(),
                };
                let labeled = class.is_loxodromic();
                let (att, rep) = if ev(&p) >= ev(&q) { (p, q) } else { (q, p) };
                Ok(FixedPoints { attracting: att, repelling: Some(rep), labeled })
            }
        }
    }

    fn two_fixed_points(&self) -> (BoundaryPoint, BoundaryPoint) {
        let scale = self.max_entry();
        let (a, b, cc, d) = (self.a, self.b, self.c, self.d);
        if cc.norm() <= 1e-14 * scale {
            let other =
                if (d - a).norm() == 0.0 { BoundaryPoint::Infinity } else { BoundaryPoint::Finite(b / (d - a)) };
            return (BoundaryPoint::Infinity, other);
        }
        // c z² + (d − a) z − b = 0, discriminant tr² − 4.
        let bq = d - a;
        let tr = a + d;
        let disc = (tr * tr - 4.0).sqrt();
        let sgn = if (bq.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
        let q = -(bq + sgn * disc) / 2.0;
        if q.norm() == 0.0 {
            let z = (a - d) / (2.0 * cc);
            return (BoundaryPoint::Finite(z), BoundaryPoint::Finite(z));
        }
        let z1 = q / cc;
        let z2 = -b / q;
        (BoundaryPoint::Finite(z1), BoundaryPoint::Finite(z2))
    }

    /// Centre `−d/c` and radius `1/|c|` of the isometric circle `|cz + d| = 1`.
    pub fn isometric_circle(&self) -> Result<(C64, f64)> {
        if self.c.norm() <= 1e-14 * self.max_entry() {
            return Err(Error::Degenerate("fixes ∞; no isometric circle".into()));
        }
        Ok((-self.d / self.c, 1.0 / self.c.norm()))
    }
}

impl Mul for Mobius {
    type Output = Mobius;
    fn mul(self, rhs: Mobius) -> Mobius {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a Mobius> for &'a Mobius {
    type Output = Mobius;
    fn mul(self, rhs: &'a Mobius) -> Mobius {
        self.compose(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut impl Rng, s: f64) -> C64 {
        c(rng.gen_range(-s..s), rng.gen_range(-s..s))
    }

    fn rand_mobius(rng: &mut impl Rng) -> Mobius {
        loop {
            if let Ok(m) = Mobius::new(rand_c(rng, 2.0), rand_c(rng, 2.0), rand_c(rng, 2.0), rand_c(rng, 2.0)) {
                return m;
            }
        }
    }

    fn rand_h3(rng: &mut impl Rng) -> H3Point {
        H3Point::new(rand_c(rng, 3.0), rng.gen_range(0.1..3.0))
    }

    #[test]
    fn compose_examples() {
        let t = Mobius::real(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(t.compose(&t).approx_eq(&Mobius::real(1.0, 2.0, 0.0, 1.0).unwrap(), 1e-14));
        let m = Mobius::real(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!(m.compose(&m.inverse()).is_identity(1e-14));
        let n = Mobius::real(1.0, -1.0, -1.0, 2.0).unwrap();
        assert!((m.compose(&n).trace() - 3.0).norm() < 1e-14);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(Mobius::real(1.0, 1.0, 0.0, 1.0).unwrap().classify(EPS_PARABOLIC), MapClass::Parabolic);
        let d = Mobius::real(2.0, 0.0, 0.0, 0.5).unwrap().classify(EPS_PARABOLIC);
        match d {
            MapClass::Loxodromic { multiplier } => assert!((multiplier - 4.0).norm() < 1e-14),
            other => panic!("expected loxodromic, got {other:?}"),
        }
        assert!((d.translation_length() - 4f64.ln()).abs() < 1e-14);
        assert!(matches!(
            Mobius::real(0.0, -1.0, 1.0, 0.0).unwrap().classify(EPS_PARABOLIC),
            MapClass::Elliptic { .. }
        ));
        assert_eq!(Mobius::identity().classify(EPS_PARABOLIC), MapClass::Identity);
        let minus_i = Mobius::real(-1.0, 0.0, 0.0, -1.0).unwrap();
        assert_eq!(minus_i.classify(EPS_PARABOLIC), MapClass::Identity);
    }

    #[test]
    fn fixed_point_examples() {
        let fp = Mobius::real(1.0, 1.0, 0.0, 1.0).unwrap().fixed_points().unwrap();
        assert_eq!(fp.attracting, BoundaryPoint::Infinity);
        assert!(fp.repelling.is_none());

        let fp = Mobius::real(2.0, 0.0, 0.0, 0.5).unwrap().fixed_points().unwrap();
        assert_eq!(fp.attracting, BoundaryPoint::Infinity);
        assert_eq!(fp.repelling, Some(BoundaryPoint::finite(0.0, 0.0)));

        let m = Mobius::real(1.0, 1.0, 1.0, 2.0).unwrap();
        let fp = m.fixed_points().unwrap();
        let s5 = 5f64.sqrt();
        let att = fp.attracting.as_finite().unwrap();
        let rep = fp.repelling.unwrap().as_finite().unwrap();
        assert!((att - (s5 - 1.0) / 2.0).norm() < 1e-14);
        assert!((rep + (s5 + 1.0) / 2.0).norm() < 1e-14);
        // Direct evaluation oracle.
        for p in [fp.attracting, fp.repelling.unwrap()] {
            assert!(chordal_dist(&m.act_boundary(&p), &p) < 1e-14);
        }

        assert!(matches!(Mobius::identity().fixed_points(), Err(Error::NoFixedPoints)));
    }

    #[test]
    fn act_examples() {
        let p = BoundaryPoint::finite(0.5, 0.5);
        assert_eq!(Mobius::identity().act_boundary(&p), p);
        let t = Mobius::real(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(t.act_boundary(&BoundaryPoint::Infinity), BoundaryPoint::Infinity);
        let j = Mobius::real(0.0, -1.0, 1.0, 0.0).unwrap();
        assert_eq!(j.act_boundary(&BoundaryPoint::finite(0.0, 0.0)), BoundaryPoint::Infinity);

        let o = H3Point::origin();
        assert_eq!(Mobius::identity().act_h3(&o), o);
        let q = t.act_h3(&o);
        assert!((q.z - 1.0).norm() < 1e-15 && (q.t - 1.0).abs() < 1e-15);
        let q = j.act_h3(&o);
        assert!(q.z.norm() < 1e-15 && (q.t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let o = H3Point::origin();
        let e = H3Point::from_parts(0.0, 0.0, std::f64::consts::E);
        assert!((dist_h3(&o, &e) - 1.0).abs() < 1e-14);
        let p = H3Point::from_parts(1.0, 0.0, 1.0);
        assert!((dist_h3(&o, &p) - 1.5f64.acosh()).abs() < 1e-14);
        assert!((dist_h3(&o, &p) - 0.9624236501192069).abs() < 1e-12);
        assert_eq!(dist_h3(&p, &p), 0.0);
    }

    #[test]
    fn chordal_examples() {
        let z = BoundaryPoint::finite(0.0, 0.0);
        assert_eq!(chordal_dist(&z, &z), 0.0);
        assert!((chordal_dist(&z, &BoundaryPoint::Infinity) - 2.0).abs() < 1e-15);
        let (p, q) = (BoundaryPoint::finite(1.0, 0.0), BoundaryPoint::finite(-1.0, 0.0));
        assert!((chordal_dist(&p, &q) - 2.0).abs() < 1e-15);
        // Chordal distance equals Euclidean distance on the unit sphere.
        let (p, q) = (BoundaryPoint::finite(0.3, -2.0), BoundaryPoint::finite(5.0, 1.5));
        assert!((chordal_dist(&p, &q) - euclid3(&p.to_sphere(), &q.to_sphere())).abs() < 1e-15);
    }

    #[test]
    fn isometric_circle_examples() {
        let (ctr, r) = Mobius::real(0.0, -1.0, 1.0, 0.0).unwrap().isometric_circle().unwrap();
        assert!(ctr.norm() < 1e-15 && (r - 1.0).abs() < 1e-15);
        assert!(Mobius::real(2.0, 0.0, 0.0, 0.5).unwrap().isometric_circle().is_err());
        let (ctr, r) = Mobius::real(1.0, 1.0, 1.0, 2.0).unwrap().isometric_circle().unwrap();
        assert!((ctr + 2.0).norm() < 1e-15 && (r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ball_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(euclid3(&H3Point::origin().to_ball(), &[0.0; 3]) < 1e-16);
        for _ in 0..1000 {
            let p = rand_h3(&mut rng);
            let q = p.to_ball();
            assert!(euclid3(&q, &[0.0; 3]) < 1.0);
            let back = H3Point::from_ball(q);
            assert!((back.z - p.z).norm() < 1e-12 && (back.t - p.t).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let z = rand_c(&mut rng, 50.0);
            let p = BoundaryPoint::Finite(z);
            let back = BoundaryPoint::from_sphere(p.to_sphere()).as_finite().unwrap();
            assert!((back - z).norm() < 1e-12 * (1.0 + z.norm_sqr()));
        }
    }

    #[test]
    fn long_products_stay_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gens: Vec<Mobius> = (0..4)
            .map(|_| {
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let a: f64 = rng.gen_range(0.0..1.0);
                Mobius::rotation(C64::from_polar(a.sqrt(), th), C64::from_polar((1.0 - a).sqrt(), ph)).unwrap()
            })
            .collect();
        let mut m = Mobius::identity();
        for _ in 0..1000 {
            m = m.compose(&gens[rng.gen_range(0..4)]);
            assert!((m.det() - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn with_fixed_points_round_trip() {
        let att = BoundaryPoint::finite(0.3, 0.1);
        let rep = BoundaryPoint::finite(-1.0, 2.0);
        let m = Mobius::with_fixed_points(att, rep, C64::from_polar(3.0, 0.7)).unwrap();
        let fp = m.fixed_points().unwrap();
        assert!(chordal_dist(&fp.attracting, &att) < 1e-12);
        assert!(chordal_dist(&fp.repelling.unwrap(), &rep) < 1e-12);
        let mult = match m.classify(EPS_PARABOLIC) {
            MapClass::Loxodromic { multiplier } => multiplier,
            other => panic!("{other:?}"),
        };
        assert!((mult - C64::from_polar(3.0, 0.7)).norm() < 1e-12);
    }

    #[test]
    fn displacement_matches_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..500 {
            let m = rand_mobius(&mut rng);
            let d = dist_h3(&H3Point::origin(), &m.orbit_origin());
            assert!((m.displacement_origin() - d).abs() < 1e-9 * d.max(1.0));
            let p = m.act_h3(&H3Point::origin());
            assert!((p.z - m.orbit_origin().z).norm() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_c(s: f64) -> impl Strategy<Value = C64> {
            (-s..s, -s..s).prop_map(|(x, y)| c(x, y))
        }

        fn arb_mobius() -> impl Strategy<Value = Mobius> {
            (arb_c(2.0), arb_c(2.0), arb_c(2.0), arb_c(2.0))
                .prop_filter_map("singular", |(a, b, cc, d)| Mobius::new(a, b, cc, d).ok())
                .prop_filter("badly scaled", |m| m.max_entry() < 50.0)
        }

        fn arb_h3() -> impl Strategy<Value = H3Point> {
            (arb_c(3.0), 0.05f64..4.0).prop_map(|(z, t)| H3Point::new(z, t))
        }

        proptest! {
            #[test]
            fn isometry_invariance(m in arb_mobius(), p in arb_h3(), q in arb_h3()) {
                let d0 = dist_h3(&p, &q);
                let d1 = dist_h3(&m.act_h3(&p), &m.act_h3(&q));
                prop_assert!((d0 - d1).abs() < 1e-10 * d0.max(1.0), "{d0} vs {d1}");
            }

            #[test]
            fn conjugation_preserves_class(m in arb_mobius(), h in arb_mobius()) {
                let k0 = m.classify(EPS_PARABOLIC);
                let k1 = m.conjugate_by(&h).classify(EPS_PARABOLIC);
                if let (MapClass::Loxodromic { multiplier: a }, MapClass::Loxodromic { multiplier: b }) = (k0, k1) {
                    prop_assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
                } else {
                    // Borderline traces may straddle a threshold after roundoff.
                    let tr2 = m.trace() * m.trace();
                    prop_assume!((tr2 - 4.0).norm() > 1e-6 && tr2.im.abs() > 1e-6);
                    prop_assert_eq!(std::mem::discriminant(&k0), std::mem::discriminant(&k1));
                }
            }

            #[test]
            fn fixed_points_are_fixed(m in arb_mobius(), z in arb_c(3.0)) {
                prop_assume!(m.classify(EPS_PARABOLIC).is_loxodromic());
                let fp = m.fixed_points().unwrap();
                prop_assert!(chordal_dist(&m.act_boundary(&fp.attracting), &fp.attracting) < 1e-9);
                let rep = fp.repelling.unwrap();
                prop_assert!(chordal_dist(&m.act_boundary(&rep), &rep) < 1e-9);
                // Forward iteration from a generic point converges to the
                // attracting point.
                let lam = m.classify(EPS_PARABOLIC).translation_length();
                prop_assume!(lam > 0.05);
                prop_assume!(chordal_dist(&BoundaryPoint::Finite(z), &rep) > 1e-3);
                let mut x = BoundaryPoint::Finite(z);
                let steps = (60.0 / lam).ceil() as usize;
                for _ in 0..steps.min(5000) {
                    x = m.act_boundary(&x);
                }
                prop_assert!(chordal_dist(&x, &fp.attracting) < 1e-6);
            }

            #[test]
            fn chordal_is_bounded_metric(a in arb_c(10.0), b in arb_c(10.0), cc in arb_c(10.0)) {
                let (p, q, r) = (BoundaryPoint::Finite(a), BoundaryPoint::Finite(b), BoundaryPoint::Finite(cc));
                let pq = chordal_dist(&p, &q);
                prop_assert!(pq <= 2.0 + 1e-15);
                prop_assert!((pq - chordal_dist(&q, &p)).abs() < 1e-15);
                prop_assert!(pq <= chordal_dist(&p, &r) + chordal_dist(&r, &q) + 1e-12);
            }
        }
    }
}
