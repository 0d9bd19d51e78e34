//! Finite samples of limit sets, chordal Hausdorff distance between them,
//! and a small rasterizer.

use std::collections::HashMap;

use kiddo::{KdTree, SquaredEuclidean};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::Representation;
use crate::moebius::{dist_h3, BoundaryPoint, H3Point, MapClass, EPS_PARABOLIC};
use crate::words::{enumerate_range, Word};

/// Chordal tolerance below which sample points are merged.
pub const DEDUP_TOL: f64 = 1e-6;

/// Default depth for fixed-point samples of rank-2 groups.
pub const DEFAULT_FIXED_POINT_DEPTH: usize = 12;

/// Default depth for orbit samples of rank-2 groups.
pub const DEFAULT_ORBIT_DEPTH: usize = 14;

/// Sample size below which Hausdorff distances are computed pairwise.
pub const BRUTE_FORCE_LIMIT: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    FixedPoint,
    Orbit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Attracting,
    Repelling,
    Parabolic,
    Shadow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub point: BoundaryPoint,
    pub word: Word,
    pub kind: PointKind,
    /// `d(O, ρ(w)·O)` for orbit shadows.
    pub orbit_dist: Option<f64>,
}

impl SamplePoint {
    pub fn depth(&self) -> usize {
        self.word.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub points: Vec<SamplePoint>,
    pub depth: usize,
    pub mode: SampleMode,
    pub dedup_tol: f64,
    /// Words skipped because their image is elliptic (or the identity).
    pub elliptic_skipped: Vec<Word>,
}

impl LimitSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn boundary_points(&self) -> impl Iterator<Item = &BoundaryPoint> {
        self.points.iter().map(|p| &p.point)
    }

    /// A sample made of the given points (provenance left empty).
    pub fn from_points(points: &[BoundaryPoint]) -> Self {
        LimitSample {
            points: points
                .iter()
                .map(|&point| SamplePoint { point, word: Word::empty(), kind: PointKind::Attracting, orbit_dist: None })
                .collect(),
            depth: 0,
            mode: SampleMode::FixedPoint,
            dedup_tol: DEDUP_TOL,
            elliptic_skipped: Vec::new(),
        }
    }

    fn sphere_points(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| p.point.to_sphere()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub include_repelling: bool,
    pub dedup_tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { include_repelling: true, dedup_tol: DEDUP_TOL }
    }
}

/// Fixed points of `ρ(w)` for cyclically reduced `1 ≤ |w| ≤ n`, in
/// length-lexicographic order of first occurrence.
pub fn sample_fixed_points(rep: &Representation, n: usize, opts: &FixedPointOptions) -> Result<LimitSample> {
    let words: Vec<Word> = enumerate_range(rep.rank(), 1, n)?.filter(|w| w.is_cyclically_reduced()).collect();
    let found: Vec<Option<Vec<(BoundaryPoint, PointKind)>>> = words
        .par_iter()
        .map(|w| {
            let m = rep.eval(w);
            match m.classify(EPS_PARABOLIC) {
                MapClass::Loxodromic { .. } => {
                    let fp = m.fixed_points().ok()?;
                    let mut v = vec![(fp.attracting, PointKind::Attracting)];
                    if opts.include_repelling {
                        if let Some(r) = fp.repelling {
                            v.push((r, PointKind::Repelling));
                        }
                    }
                    Some(v)
                }
                MapClass::Parabolic => {
                    let fp = m.fixed_points().ok()?;
                    Some(vec![(fp.attracting, PointKind::Parabolic)])
                }
                _ => None,
            }
        })
        .collect();
    let mut dedup = Dedup::new(opts.dedup_tol);
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (w, f) in words.into_iter().zip(found) {
        match f {
            None => skipped.push(w),
            Some(v) => {
                for (point, kind) in v {
                    if dedup.insert(point.to_sphere()) {
                        points.push(SamplePoint { point, word: w.clone(), kind, orbit_dist: None });
                    }
                }
            }
        }
    }
    Ok(LimitSample {
        points,
        depth: n,
        mode: SampleMode::FixedPoint,
        dedup_tol: opts.dedup_tol,
        elliptic_skipped: skipped,
    })
}

/// Radial shadows of the orbit points `ρ(w)·O` with `|w| = n`.
pub fn sample_orbit(rep: &Representation, n: usize, dedup_tol: f64) -> Result<LimitSample> {
    let words: Vec<Word> = enumerate_range(rep.rank(), n, n)?.collect();
    let o = H3Point::origin();
    let found: Vec<Option<(BoundaryPoint, f64)>> = words
        .par_iter()
        .map(|w| {
            let p = rep.orbit(w);
            p.shadow().map(|s| (s, dist_h3(&o, &p)))
        })
        .collect();
    let mut dedup = Dedup::new(dedup_tol);
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (w, f) in words.into_iter().zip(found) {
        match f {
            Some((point, d)) => {
                if dedup.insert(point.to_sphere()) {
                    points.push(SamplePoint { point, word: w, kind: PointKind::Shadow, orbit_dist: Some(d) });
                }
            }
            None => skipped.push(w),
        }
    }
    Ok(LimitSample { points, depth: n, mode: SampleMode::Orbit, dedup_tol, elliptic_skipped: skipped })
}

type Cell = (i64, i64, i64);

fn cell_of(q: &[f64; 3], h: f64) -> Cell {
    ((q[0] / h).floor() as i64, (q[1] / h).floor() as i64, (q[2] / h).floor() as i64)
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Grid-hashed set of sphere points merging anything within `tol`.
struct Dedup {
    tol: f64,
    cells: HashMap<Cell, Vec<[f64; 3]>>,
}

impl Dedup {
    fn new(tol: f64) -> Self {
        Dedup { tol: tol.max(1e-15), cells: HashMap::new() }
    }

    /// Inserts unless a stored point lies within `tol`; returns whether it
    /// was inserted.
    fn insert(&mut self, q: [f64; 3]) -> bool {
        let (i, j, k) = cell_of(&q, self.tol);
        for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    if let Some(v) = self.cells.get(&(i + di, j + dj, k + dk)) {
                        if v.iter().any(|p| dist3(p, &q) < self.tol) {
                            return false;
                        }
                    }
                }
            }
        }
        self.cells.entry((i, j, k)).or_default().push(q);
        true
    }
}

/// Rotation by a generic angle about a generic axis. Limit sets often lie on
/// coordinate planes, and the kd-tree build breaks on large groups of equal
/// coordinates, so points are rotated before indexing.
fn generic_rotation(p: &[f64; 3]) -> [f64; 3] {
    const N: [f64; 3] = [0.267_261_241_912_424_4, 0.534_522_483_824_848_8, 0.801_783_725_737_273_2];
    let (s, c) = 0.713_f64.sin_cos();
    let d = N[0] * p[0] + N[1] * p[1] + N[2] * p[2];
    let x = [N[1] * p[2] - N[2] * p[1], N[2] * p[0] - N[0] * p[2], N[0] * p[1] - N[1] * p[0]];
    std::array::from_fn(|i| p[i] * c + x[i] * s + N[i] * d * (1.0 - c))
}

fn nearest_index(pts: &[[f64; 3]]) -> KdTree<f64, 3> {
    let mut tree: KdTree<f64, 3> = KdTree::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        tree.add(&generic_rotation(p), i as u64);
    }
    tree
}

fn nearest_dist(tree: &KdTree<f64, 3>, q: &[f64; 3]) -> f64 {
    tree.nearest_one::<SquaredEuclidean>(&generic_rotation(q)).distance.sqrt()
}

fn directed(from: &[[f64; 3]], to: &[[f64; 3]]) -> f64 {
    if from.len().max(to.len()) < BRUTE_FORCE_LIMIT {
        from.par_iter().map(|p| to.iter().map(|q| dist3(p, q)).fold(f64::INFINITY, f64::min)).reduce(|| 0.0, f64::max)
    } else {
        let tree = nearest_index(to);
        from.par_iter().map(|p| nearest_dist(&tree, p)).reduce(|| 0.0, f64::max)
    }
}

/// Hausdorff distance in the chordal metric.
pub fn hausdorff_chordal(s1: &LimitSample, s2: &LimitSample) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptySample);
    }
    let (a, b) = (s1.sphere_points(), s2.sphere_points());
    Ok(directed(&a, &b).max(directed(&b, &a)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Projection {
    /// Window of the plane centred at `(cx, cy)` with horizontal half-width
    /// `half_width`; `∞` is not drawn.
    Plane { cx: f64, cy: f64, half_width: f64 },
    /// Azimuthal view of the whole sphere: radius is chordal distance from
    /// `0`, so `∞` lies on the rim.
    Sphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSpec {
    pub width: usize,
    pub height: usize,
    pub projection: Projection,
    /// Pixels drawn around each point (0 = single pixel).
    pub point_radius: usize,
}

impl Default for ImageSpec {
    fn default() -> Self {
        ImageSpec { width: 512, height: 512, projection: Projection::Sphere, point_radius: 0 }
    }
}

/// 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

pub const BACKGROUND: [u8; 3] = [0, 0, 0];

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn is_lit(&self, x: usize, y: usize) -> bool {
        self.pixel(x, y) != BACKGROUND
    }

    /// Binary PPM (P6), with optional comment lines in the header.
    pub fn to_ppm(&self, comments: &[String]) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.rgb.len() + 64);
        out.extend_from_slice(b"P6\n");
        for c in comments {
            for line in c.lines() {
                out.extend_from_slice(format!("# {line}\n").as_bytes());
            }
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend_from_slice(&self.rgb);
        out
    }

    /// Number of 8-connected components of lit pixels.
    pub fn lit_components(&self) -> usize {
        let mut seen = vec![false; self.width * self.height];
        let mut count = 0;
        for start in 0..self.width * self.height {
            if seen[start] || !self.is_lit(start % self.width, start / self.width) {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % self.width) as i64, (i / self.width) as i64);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
                            continue;
                        }
                        let j = ny as usize * self.width + nx as usize;
                        if !seen[j] && self.is_lit(nx as usize, ny as usize) {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        count
    }
}

/// Pixel coordinates (possibly off-image) of a boundary point.
pub fn project(spec: &ImageSpec, p: &BoundaryPoint) -> Option<(f64, f64)> {
    let (w, h) = (spec.width as f64, spec.height as f64);
    match spec.projection {
        Projection::Plane { cx, cy, half_width } => {
            let z = p.as_finite()?;
            let scale = w / (2.0 * half_width);
            Some((w / 2.0 + (z.re - cx) * scale, h / 2.0 - (z.im - cy) * scale))
        }
        Projection::Sphere => {
            let radius_px = (w.min(h) / 2.0 - 1.0) / 2.0;
            let (r, ang) = match p {
                BoundaryPoint::Infinity => (2.0, 0.0),
                BoundaryPoint::Finite(z) => {
                    (crate::moebius::chordal_dist(p, &BoundaryPoint::finite(0.0, 0.0)), z.arg())
                }
            };
            Some((w / 2.0 + r * ang.cos() * radius_px, h / 2.0 - r * ang.sin() * radius_px))
        }
    }
}

/// Colour ramp from blue (shallow) to red (deep).
fn depth_color(depth: usize, max_depth: usize) -> [u8; 3] {
    let t = if max_depth == 0 { 1.0 } else { depth as f64 / max_depth as f64 };
    [(55.0 + 200.0 * t).round() as u8, 96, (255.0 - 200.0 * t).round() as u8]
}

/// Rasterizes the sample; deeper points are drawn last.
pub fn render(sample: &LimitSample, spec: &ImageSpec) -> Result<Image> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::Degenerate("image has zero size".into()));
    }
    let mut img = Image { width: spec.width, height: spec.height, rgb: vec![0; 3 * spec.width * spec.height] };
    let max_depth = sample.points.iter().map(SamplePoint::depth).max().unwrap_or(0);
    let mut order: Vec<&SamplePoint> = sample.points.iter().collect();
    order.sort_by_key(|p| p.depth());
    let r = spec.point_radius as i64;
    for p in order {
        let Some((x, y)) = project(spec, &p.point) else { continue };
        let (px, py) = (x.floor() as i64, y.floor() as i64);
        let color = depth_color(p.depth(), max_depth);
        for dx in -r..=r {
            for dy in -r..=r {
                let (qx, qy) = (px + dx, py + dy);
                if qx < 0 || qy < 0 || qx >= spec.width as i64 || qy >= spec.height as i64 {
                    continue;
                }
                let i = 3 * (qy as usize * spec.width + qx as usize);
                img.rgb[i..i + 3].copy_from_slice(&color);
            }
        }
    }
    Ok(img)
}
