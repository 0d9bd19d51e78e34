//! Cannon-Thurston maps between marked groups and the escape diagnostics
//! used to judge whether a sequence of representations has converging CT
//! maps.
//!
//! Infima over all words or all Cayley-graph geodesics are replaced by
//! minima over exhaustive enumeration up to a depth cap, a deterministic
//! beam search beyond it, and seeded segment sampling. Every table records
//! the caps it was computed with.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{RepSequence, Representation};
use crate::hypgeo::{point_to_segment, segment_meets, thin_part_of, ThinPart};
use crate::limitset::{sample_fixed_points, FixedPointOptions, PointKind};
use crate::moebius::{chordal_dist, dist_h3, BoundaryPoint, H3Point, Mobius, EPS_PARABOLIC};
use crate::words::{
    ball_size, inverse_letter, parse_parabolic_blocks, BoundaryWordPath, Letter, ParabolicBlock, Segment, Word,
    DEFAULT_REMAINDER_BOUND,
};

/// Default acceptance threshold for the chordal spread of a path's tail.
pub const TOL_CT: f64 = 1e-6;

/// Number of final path steps whose shadows must agree.
pub const TAIL_WINDOW: usize = 10;

/// How close the source orbit must end to the path's target.
pub const PATH_TARGET_TOL: f64 = 1e-3;

/// A table column counts as growing when its last value exceeds the value at
/// half the range by more than this.
pub const GROWTH_MIN: f64 = 1.0;

/// Number of final sequence indices inspected by the convergence verdict.
pub const VERDICT_WINDOW: usize = 5;

// ---------------------------------------------------------------------------
// Tables

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub family: String,
    pub tool_version: String,
    pub spec_hash: Option<String>,
    pub seed: Option<u64>,
    pub caps: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Rows indexed by an integer (`N` or `n`), with named numeric columns and
/// string-valued flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsTable {
    pub metadata: TableMetadata,
    pub index_name: String,
    pub index: Vec<usize>,
    pub columns: Vec<Column>,
    pub flags: BTreeMap<String, String>,
}

impl DiagnosticsTable {
    pub fn new(family: &str, index_name: &str, index: Vec<usize>) -> Self {
        DiagnosticsTable {
            metadata: TableMetadata {
                family: family.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                ..TableMetadata::default()
            },
            index_name: index_name.to_string(),
            index,
            columns: Vec::new(),
            flags: BTreeMap::new(),
        }
    }

    pub fn push_column(&mut self, name: &str, values: Vec<Option<f64>>) {
        debug_assert_eq!(values.len(), self.index.len());
        self.columns.push(Column { name: name.to_string(), values });
    }

    pub fn with_cap(mut self, key: &str, value: u64) -> Self {
        self.metadata.caps.insert(key.to_string(), value);
        self
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    /// Column values with missing entries as NaN.
    pub fn values(&self, name: &str) -> Vec<f64> {
        self.column(name).map(|v| v.iter().map(|x| x.unwrap_or(f64::NAN)).collect()).unwrap_or_default()
    }

    /// CSV with metadata as leading `#` lines. Missing values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        out.push_str(&format!("# family: {}\n# tool_version: {}\n", m.family, m.tool_version));
        if let Some(h) = &m.spec_hash {
            out.push_str(&format!("# spec_hash: {h}\n"));
        }
        if let Some(s) = m.seed {
            out.push_str(&format!("# seed: {s}\n"));
        }
        for (k, v) in &m.caps {
            out.push_str(&format!("# cap.{k}: {v}\n"));
        }
        for (k, v) in &self.flags {
            out.push_str(&format!("# flag.{k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once(self.index_name.clone()).chain(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(header).expect("in-memory csv");
        for (row, idx) in self.index.iter().enumerate() {
            let fields = std::iter::once(idx.to_string())
                .chain(self.columns.iter().map(|c| c.values[row].map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(fields).expect("in-memory csv");
        }
        let body = w.into_inner().expect("in-memory csv");
        out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }
}

// ---------------------------------------------------------------------------
// CT evaluation

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CtMethod {
    /// Limit of the orbit shadows along the path.
    Tail,
    /// The path ends in a designated parabolic period; the value is the
    /// fixed point of its image.
    ParabolicFixedPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CtEvaluation {
    pub source: BoundaryPoint,
    pub path: Word,
    /// `ρ_dst(g_r)·O` for `r = 1..=depth`.
    pub images: Vec<H3Point>,
    pub shadows: Vec<BoundaryPoint>,
    pub value: BoundaryPoint,
    /// Chordal diameter of the last `TAIL_WINDOW` shadows (zero for the
    /// parabolic branch).
    pub residual: f64,
    pub method: CtMethod,
}

fn is_rotation(c: &[Letter], p: &[Letter]) -> bool {
    let n = p.len();
    c.len() == n && (0..n.max(1)).any(|s| c[s..] == p[..n - s] && c[..s] == p[n - s..])
}

/// The final period of the path, as it appears in the last letters, when it
/// is conjugate to a designated parabolic word or its inverse.
fn parabolic_tail(path: &BoundaryWordPath, depth: usize, parabolic: &[Word]) -> Option<Word> {
    let c = path.eventual_period()?;
    let n = c.len();
    if n == 0 || depth < n {
        return None;
    }
    let designated = parabolic.iter().any(|p| {
        let (_, core) = p.cyclic_split();
        !core.is_empty()
            && (is_rotation(c.letters(), core.letters()) || is_rotation(c.letters(), core.inverse().letters()))
    });
    if !designated {
        return None;
    }
    let tail = &path.letters.letters()[depth - n..depth];
    is_rotation(tail, c.letters()).then(|| Word::reduce(tail))
}

/// Evaluates the CT map `Λ(src) → Λ(dst)` at `path.target` by following
/// `ρ_dst` along the first `depth` letters of the path.
pub fn ct_eval(
    src: &Representation,
    dst: &Representation,
    path: &BoundaryWordPath,
    depth: usize,
    tol: f64,
) -> Result<CtEvaluation> {
    if src.rank() != dst.rank() {
        return Err(Error::Precondition(format!("ranks differ: {} vs {}", src.rank(), dst.rank())));
    }
    let depth = depth.min(path.depth());
    let letters = &path.letters.letters()[..depth];
    let mut images = Vec::with_capacity(depth);
    let mut shadows = Vec::with_capacity(depth);
    let mut m = Mobius::identity();
    for &l in letters {
        m = m.compose(dst.letter(l));
        let p = m.orbit_origin();
        images.push(p);
        shadows.push(p.shadow().unwrap_or(BoundaryPoint::Infinity));
    }
    let source = path.target;
    if let Some(c) = parabolic_tail(path, depth, src.parabolic()) {
        let fp = dst.eval(&c).fixed_points()?.attracting;
        return Ok(CtEvaluation {
            source,
            path: Word::reduce(letters),
            images,
            shadows,
            value: m.act_boundary(&fp),
            residual: 0.0,
            method: CtMethod::ParabolicFixedPoint,
        });
    }
    if depth <= TAIL_WINDOW {
        return Err(Error::PathTooShort(format!("need more than {TAIL_WINDOW} letters, have {depth}")));
    }
    let src_end = src.eval(&Word::reduce(letters)).orbit_origin().shadow().unwrap_or(BoundaryPoint::Infinity);
    let miss = chordal_dist(&src_end, &source);
    if miss > PATH_TARGET_TOL {
        return Err(Error::Precondition(format!("path ends {miss:.3e} away from its target under the source")));
    }
    let tail = &shadows[depth - TAIL_WINDOW..];
    let mut spread: f64 = 0.0;
    for i in 0..tail.len() {
        for j in i + 1..tail.len() {
            spread = spread.max(chordal_dist(&tail[i], &tail[j]));
        }
    }
    if !(spread < tol) {
        return Err(Error::NotConverged { spread, depth });
    }
    Ok(CtEvaluation {
        source,
        path: Word::reduce(letters),
        images,
        value: shadows[depth - 1],
        shadows,
        residual: spread,
        method: CtMethod::Tail,
    })
}

/// Largest chordal defect `d(î(w·ξ), ρ_dst(w)·î(ξ))` over the pairs
/// `(w, path to ξ)`.
pub fn equivariance_check(
    src: &Representation,
    dst: &Representation,
    samples: &[(Word, BoundaryWordPath)],
    depth: usize,
    tol: f64,
) -> Result<f64> {
    let residuals = samples
        .par_iter()
        .map(|(w, path)| {
            let eta = ct_eval(src, dst, path, depth, tol)?.value;
            let moved = src.eval(w).act_boundary(&path.target);
            let translated = path.translate(w, moved);
            let eta_w = ct_eval(src, dst, &translated, depth, tol)?.value;
            Ok(chordal_dist(&eta_w, &dst.eval(w).act_boundary(&eta)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// Ball traversal

/// Calls `visit` on every nonempty reduced word of length at most `max_len`
/// together with its image, in parallel over subtrees, and merges the
/// per-subtree accumulators in a fixed order.
fn fold_ball<T, I, V, M>(rep: &Representation, max_len: usize, init: I, visit: V, merge: M) -> T
where
    T: Send,
    I: Fn() -> T + Sync,
    V: Fn(&mut T, &[Letter], &Mobius) + Sync,
    M: Fn(T, T) -> T,
{
    let top = (2 * rep.rank()) as Letter;
    if max_len == 0 || top == 0 {
        return init();
    }
    // Split at the shallowest level with enough subtrees to keep workers busy.
    let mut split = 1;
    while split < max_len && ball_size(rep.rank(), split) < 64 {
        split += 1;
    }
    let mut head = init();
    let mut roots: Vec<(Vec<Letter>, Mobius)> = Vec::new();
    let mut frontier: Vec<(Vec<Letter>, Mobius)> = vec![(Vec::new(), Mobius::identity())];
    for len in 1..=split {
        let mut next = Vec::with_capacity(frontier.len() * top as usize);
        for (w, m) in &frontier {
            for x in 0..top {
                if w.last().is_some_and(|&l| x == inverse_letter(l)) {
                    continue;
                }
                let mut v = w.clone();
                v.push(x);
                next.push((v, m.compose(rep.letter(x))));
            }
        }
        if len < split {
            for (w, m) in &next {
                visit(&mut head, w, m);
            }
        }
        frontier = next;
    }
    roots.extend(frontier);
    let parts: Vec<T> = roots
        .par_iter()
        .map(|(root, rm)| {
            let mut acc = init();
            let mut letters = root.clone();
            let mut stack: Vec<(usize, Letter, Mobius)> = vec![(root.len(), *root.last().unwrap(), *rm)];
            while let Some((len, l, m)) = stack.pop() {
                letters.truncate(len - 1);
                letters.push(l);
                visit(&mut acc, &letters, &m);
                if len < max_len {
                    for x in (0..top).rev() {
                        if x != inverse_letter(l) {
                            stack.push((len + 1, x, m.compose(rep.letter(x))));
                        }
                    }
                }
            }
            acc
        })
        .collect();
    parts.into_iter().fold(head, merge)
}

// ---------------------------------------------------------------------------
// Floyd constants

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub len: usize,
    pub count: u64,
    pub min_dist: f64,
    pub max_dist: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FloydLower {
    /// `b|g| ≤ d(O, g·O)`.
    Linear { b: f64 },
    /// `2 log|g| − k ≤ d(O, g·O)`.
    Logarithmic { k: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloydFit {
    /// `d(O, g·O) ≤ a|g|`.
    pub a: f64,
    pub lower: FloydLower,
    pub depth: usize,
    pub per_length: Vec<LengthStats>,
}

impl FloydFit {
    /// Whether a word of length `len` with displacement `d` satisfies the
    /// fitted inequalities (up to rounding).
    pub fn holds(&self, len: usize, d: f64) -> bool {
        let l = len as f64;
        let slack = 1e-9 * (1.0 + d);
        let upper = d <= self.a * l + slack;
        let lower = match self.lower {
            FloydLower::Linear { b } => b * l <= d + slack,
            FloydLower::Logarithmic { k } => len < 2 || 2.0 * l.ln() - k <= d + slack,
        };
        upper && lower
    }

    /// The window `[min, max]` of `d(O, g·O)/|g|`.
    pub fn ratio_window(&self) -> (f64, f64) {
        let lo = self.per_length.iter().map(|s| s.min_dist / s.len as f64).fold(f64::INFINITY, f64::min);
        (lo, self.a)
    }
}

#[derive(Clone, Debug)]
struct BallStats {
    per_length: Vec<LengthStats>,
    non_loxodromic: Option<Vec<Letter>>,
}

fn ball_stats(rep: &Representation, n: usize, classify: bool) -> BallStats {
    let init = || BallStats {
        per_length: (1..=n).map(|len| LengthStats { len, count: 0, min_dist: f64::INFINITY, max_dist: 0.0 }).collect(),
        non_loxodromic: None,
    };
    fold_ball(
        rep,
        n,
        init,
        |acc, w, m| {
            let d = m.displacement_origin();
            let s = &mut acc.per_length[w.len() - 1];
            s.count += 1;
            s.min_dist = s.min_dist.min(d);
            s.max_dist = s.max_dist.max(d);
            if classify && acc.non_loxodromic.is_none() && !m.classify(EPS_PARABOLIC).is_loxodromic() {
                acc.non_loxodromic = Some(w.to_vec());
            }
        },
        |mut a, b| {
            for (x, y) in a.per_length.iter_mut().zip(b.per_length) {
                x.count += y.count;
                x.min_dist = x.min_dist.min(y.min_dist);
                x.max_dist = x.max_dist.max(y.max_dist);
            }
            a.non_loxodromic = a.non_loxodromic.or(b.non_loxodromic);
            a
        },
    )
}

/// Fits the orbit-growth constants over all reduced words of length
/// `1..=n`. Families without designated parabolics get a linear lower bound
/// and are checked for being convex cocompact; others get the logarithmic
/// one.
pub fn floyd_fit(rep: &Representation, n: usize) -> Result<FloydFit> {
    if n == 0 {
        return Err(Error::InsufficientDepth("fit needs words of length at least 1".into()));
    }
    let cocompact = rep.parabolic().is_empty();
    let stats = ball_stats(rep, n, cocompact);
    let per_length = stats.per_length;
    let a = per_length.iter().map(|s| s.max_dist / s.len as f64).fold(0.0, f64::max);
    let lower = if cocompact {
        if let Some(w) = stats.non_loxodromic {
            return Err(Error::Mistagged(format!(
                "family mistagged or non-discrete: {} is not loxodromic",
                Word::from_reduced(w)
            )));
        }
        if n >= 4 {
            let last = per_length[n - 1].min_dist;
            let half = per_length[n.div_ceil(2) - 1].min_dist;
            // Linear growth roughly doubles between N/2 and N; bounded
            // displacement (ratio decaying like 1/|g|) does not.
            if last < 1.25 * half {
                return Err(Error::Mistagged(format!(
                    "family mistagged or non-discrete: minimal displacement {last:.3} at length {n} vs {half:.3} at length {}",
                    n.div_ceil(2)
                )));
            }
        }
        FloydLower::Linear { b: per_length.iter().map(|s| s.min_dist / s.len as f64).fold(f64::INFINITY, f64::min) }
    } else {
        let k = per_length
            .iter()
            .filter(|s| s.len >= 2)
            .map(|s| 2.0 * (s.len as f64).ln() - s.min_dist)
            .fold(f64::NEG_INFINITY, f64::max);
        FloydLower::Logarithmic { k: if k.is_finite() { k } else { 0.0 } }
    };
    Ok(FloydFit { a, lower, depth: n, per_length })
}

/// `(j, d(O, ρ(p^j)·O), d − 2 log j)` along powers of `p`.
pub fn parabolic_profile(rep: &Representation, p: &Word, powers: &[i64]) -> Vec<(i64, f64, f64)> {
    let m = rep.eval(p);
    powers
        .par_iter()
        .map(|&j| {
            let d = m.pow(j).displacement_origin();
            (j, d, d - 2.0 * (j.unsigned_abs() as f64).ln())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Escape tables

/// Caps for the word searches behind `u_N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UepOptions {
    /// Longest words considered.
    pub depth_cap: usize,
    /// Words up to this length are enumerated exhaustively.
    pub exhaustive_depth: usize,
    /// Beam width for longer words.
    pub beam_width: usize,
}

impl UepOptions {
    /// Exhaustive as far as a ball of about 2¹⁸ words allows.
    pub fn for_rank(rank: usize, depth_cap: usize) -> Self {
        let mut ex = 1;
        while ex < depth_cap && ball_size(rank, ex + 1) <= 1 << 18 {
            ex += 1;
        }
        UepOptions { depth_cap, exhaustive_depth: ex.min(depth_cap), beam_width: 4096 }
    }
}

/// Smallest displacement per word length `1..=cap`: exact up to the
/// exhaustive depth, a beam-search upper bound beyond.
pub fn min_displacement_by_length(rep: &Representation, opts: &UepOptions) -> Vec<f64> {
    let cap = opts.depth_cap;
    let ex = opts.exhaustive_depth.min(cap);
    let mut out: Vec<f64> = ball_stats(rep, ex, false).per_length.iter().map(|s| s.min_dist).collect();
    if cap > ex {
        let top = (2 * rep.rank()) as Letter;
        let mut beam: Vec<(f64, Vec<Letter>, Mobius)> = vec![(0.0, Vec::new(), Mobius::identity())];
        for len in 1..=cap {
            let mut next: Vec<(f64, Vec<Letter>, Mobius)> = beam
                .par_iter()
                .flat_map_iter(|(_, w, m)| {
                    (0..top).filter(|&x| w.last().is_none_or(|&l| x != inverse_letter(l))).map(move |x| {
                        let mx = m.compose(rep.letter(x));
                        let mut v = w.clone();
                        v.push(x);
                        (mx.displacement_origin(), v, mx)
                    })
                })
                .collect();
            next.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            next.truncate(opts.beam_width);
            if len > ex {
                out.push(next[0].0);
            }
            beam = next;
        }
    }
    out
}

fn suffix_min(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].min(out[i + 1]);
    }
    out
}

fn growth_flag(col: &[f64]) -> &'static str {
    let n = col.len();
    if n < 2 {
        return "undetermined";
    }
    if col[n - 1] - col[(n - 1) / 2] > GROWTH_MIN {
        "consistent"
    } else {
        "violating"
    }
}

/// `u_N = min d(ρ_n(g)·O, O)` over all members and words `N < |g| ≤ cap`,
/// for `N = 1..=n_max`. Flag `uep` is `consistent` when the column grows.
pub fn uep_table(seq: &RepSequence, n_max: usize, opts: &UepOptions) -> Result<DiagnosticsTable> {
    if n_max >= opts.depth_cap {
        return Err(Error::InsufficientDepth(format!(
            "N up to {n_max} needs words longer than the depth cap {}",
            opts.depth_cap
        )));
    }
    let per_member: Vec<Vec<f64>> = seq.members.par_iter().map(|r| min_displacement_by_length(r, opts)).collect();
    let mut u = Vec::with_capacity(n_max);
    let mut arg_n = Vec::with_capacity(n_max);
    let mut arg_len = Vec::with_capacity(n_max);
    for big_n in 1..=n_max {
        let mut best = (f64::INFINITY, 0, 0);
        for (i, mins) in per_member.iter().enumerate() {
            for (l, &d) in mins.iter().enumerate().skip(big_n) {
                if d < best.0 {
                    best = (d, i + 1, l + 1);
                }
            }
        }
        u.push(best.0);
        arg_n.push(Some(best.1 as f64));
        arg_len.push(Some(best.2 as f64));
    }
    let mut t = DiagnosticsTable::new(&seq.name, "N", (1..=n_max).collect())
        .with_cap("depth_cap", opts.depth_cap as u64)
        .with_cap("exhaustive_depth", opts.exhaustive_depth as u64)
        .with_cap("beam_width", opts.beam_width as u64)
        .with_cap("members", seq.len() as u64);
    t.flags.insert("uep".into(), growth_flag(&u).into());
    t.push_column("u_N", u.into_iter().map(Some).collect());
    t.push_column("argmin_n", arg_n);
    t.push_column("argmin_len", arg_len);
    Ok(t)
}

/// Seeded sampling of Cayley-graph geodesic segments outside a ball: a
/// random word `c` with `|c| = N + 1` and two random extensions of `c`
/// shorter than `spread`. Every vertex of the segment keeps the prefix `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSampler {
    pub samples: usize,
    pub spread: usize,
    pub seed: u64,
}

impl Default for SegmentSampler {
    fn default() -> Self {
        SegmentSampler { samples: 256, spread: 4, seed: 0 }
    }
}

fn random_extension(rng: &mut ChaCha8Rng, top: Letter, start: &[Letter], len: usize) -> Vec<Letter> {
    let mut w = start.to_vec();
    for _ in 0..len {
        let last = w.last().copied();
        loop {
            let x = rng.gen_range(0..top);
            if last.is_none_or(|l| x != inverse_letter(l)) {
                w.push(x);
                break;
            }
        }
    }
    w
}

/// Segments `(u, v)` sampled for level `N`.
pub fn sample_segments(rank: usize, big_n: usize, sampler: &SegmentSampler) -> Vec<(Word, Word)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    rng.set_stream(big_n as u64);
    let top = (2 * rank) as Letter;
    (0..sampler.samples)
        .map(|_| {
            let c = random_extension(&mut rng, top, &[], big_n + 1);
            let lu = rng.gen_range(0..sampler.spread.max(1));
            let lv = rng.gen_range(0..sampler.spread.max(1));
            let u = random_extension(&mut rng, top, &c, lu);
            let v = random_extension(&mut rng, top, &c, lv);
            (Word::reduce(&u), Word::reduce(&v))
        })
        .collect()
}

/// Distance from `O` to `[ρ(u)·O, ρ(v)·O]`, computed after translating by
/// the common prefix `c` so the endpoints stay near the basepoint: the
/// segment `[ρ(c⁻¹u)·O, ρ(c⁻¹v)·O]` against the point `ρ(c⁻¹)·O`.
fn segment_escape(rep: &Representation, u: &Word, v: &Word) -> f64 {
    let common = u.letters().iter().zip(v.letters()).take_while(|(a, b)| a == b).count();
    let c = u.prefix(common);
    let back = c.inverse();
    let p = rep.orbit(&back);
    let x = rep.orbit(&back.mul(u));
    if u == v {
        return dist_h3(&p, &x);
    }
    point_to_segment(&p, &x, &rep.orbit(&back.mul(v))).0
}

fn min_segment_escape(rep: &Representation, segments: &[(Word, Word)]) -> f64 {
    segments.iter().map(|(u, v)| segment_escape(rep, u, v)).fold(f64::INFINITY, f64::min)
}

/// `f(N)`: smallest distance from `O` to `[ρ(u)·O, ρ(v)·O]` over sampled
/// segments outside the ball of radius `N`, for `N = 0..=n_max`. Column
/// `f_raw` is the per-level minimum; `f` takes the minimum over all levels
/// `≥ N`, which is also a valid bound for level `N`.
pub fn exclusion_profile(rep: &Representation, n_max: usize, sampler: &SegmentSampler) -> DiagnosticsTable {
    let raw: Vec<f64> = (0..=n_max)
        .into_par_iter()
        .map(|big_n| min_segment_escape(rep, &sample_segments(rep.rank(), big_n, sampler)))
        .collect();
    let mut t = DiagnosticsTable::new(&rep.family, "N", (0..=n_max).collect())
        .with_cap("samples", sampler.samples as u64)
        .with_cap("spread", sampler.spread as u64);
    t.metadata.seed = Some(sampler.seed);
    t.push_column("f", suffix_min(&raw).into_iter().map(Some).collect());
    t.push_column("f_raw", raw.into_iter().map(Some).collect());
    t
}

/// `v_N`: the sampled escape of orbit geodesics, minimized over all
/// members, for `N = 1..=n_max`. Flag `uepp` as for `uep_table`.
pub fn uepp_table(seq: &RepSequence, n_max: usize, sampler: &SegmentSampler) -> DiagnosticsTable {
    let raw: Vec<f64> = (1..=n_max)
        .into_par_iter()
        .map(|big_n| {
            let segs = sample_segments(seq.rank(), big_n, sampler);
            seq.members.iter().map(|r| min_segment_escape(r, &segs)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let v = suffix_min(&raw);
    let mut t = DiagnosticsTable::new(&seq.name, "N", (1..=n_max).collect())
        .with_cap("samples", sampler.samples as u64)
        .with_cap("spread", sampler.spread as u64)
        .with_cap("members", seq.len() as u64);
    t.metadata.seed = Some(sampler.seed);
    t.flags.insert("uepp".into(), growth_flag(&v).into());
    t.push_column("v_N", v.into_iter().map(Some).collect());
    t.push_column("v_raw", raw.into_iter().map(Some).collect());
    t
}

// ---------------------------------------------------------------------------
// Pointwise escape along a path

/// How a path towards `ξ` meets the parabolic subgroups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathCase {
    /// Parabolic blocks stay bounded in length.
    BoundedBlocks,
    /// Parabolic blocks keep getting longer.
    GrowingBlocks,
    /// The path ends in an infinite parabolic block: `ξ` is a parabolic
    /// fixed point.
    InfiniteBlock,
}

/// Classifies a path by its parabolic blocks (runs of at least `k0`).
/// Blocks are growing when the longest block starting in the second half
/// of the path is longer than every block in the first half.
pub fn classify_path(path: &BoundaryWordPath, parabolic: &[Word], k0: usize) -> (PathCase, Vec<ParabolicBlock>) {
    let segments = parse_parabolic_blocks(&path.letters, parabolic, k0, DEFAULT_REMAINDER_BOUND);
    let blocks: Vec<ParabolicBlock> = segments
        .into_iter()
        .filter_map(|s| match s {
            Segment::Block(b) => Some(b),
            Segment::Gap { .. } => None,
        })
        .collect();
    if parabolic_tail(path, path.depth(), parabolic).is_some() {
        return (PathCase::InfiniteBlock, blocks);
    }
    let half = path.depth() / 2;
    let longest = |early: bool| blocks.iter().filter(|b| (b.start < half) == early).map(|b| b.length()).max();
    let case = match (longest(true), longest(false)) {
        (e, Some(l)) if l > e.unwrap_or(0) => PathCase::GrowingBlocks,
        _ => PathCase::BoundedBlocks,
    };
    (case, blocks)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpReport {
    pub case: PathCase,
    pub block_lengths: Vec<usize>,
    /// Absent for the infinite-block case, where convergence at `ξ` follows
    /// from algebraic convergence of the parabolic images.
    pub table: Option<DiagnosticsTable>,
}

/// Pointwise escape along the prefixes `g_r` of the path. For each `N`,
/// `f_ξ(N)` is half the limit's escape `min_{r ≥ N} d(ρ_∞(g_r)·O, O)` and
/// `M_ξ(N)` is the smallest index from which every member escapes at least
/// that far on prefixes of length `≥ N` (missing if even the last fails).
pub fn ep_diagnostic(seq: &RepSequence, path: &BoundaryWordPath, n_max: usize, k0: usize) -> Result<EpReport> {
    if n_max == 0 || path.depth() < n_max {
        return Err(Error::PathTooShort(format!("path of {} letters, N up to {n_max}", path.depth())));
    }
    let (case, blocks) = classify_path(path, seq.limit.parabolic(), k0);
    let block_lengths = blocks.iter().map(|b| b.length()).collect();
    if case == PathCase::InfiniteBlock {
        return Ok(EpReport { case, block_lengths, table: None });
    }
    let escape = |rep: &Representation| -> Vec<f64> {
        let mut m = Mobius::identity();
        let d: Vec<f64> = path
            .letters
            .letters()
            .iter()
            .map(|&l| {
                m = m.compose(rep.letter(l));
                m.displacement_origin()
            })
            .collect();
        suffix_min(&d)
    };
    let limit = escape(&seq.limit);
    let members: Vec<Vec<f64>> = seq.members.par_iter().map(escape).collect();
    let (mut f, mut big_m, mut f_lim) = (Vec::new(), Vec::new(), Vec::new());
    for big_n in 1..=n_max {
        let target = limit[big_n - 1] / 2.0;
        let mut worst = f64::INFINITY;
        let mut from = None;
        for n in (1..=members.len()).rev() {
            worst = worst.min(members[n - 1][big_n - 1]);
            if worst >= target {
                from = Some(n as f64);
            } else {
                break;
            }
        }
        f.push(Some(target));
        big_m.push(from);
        f_lim.push(Some(limit[big_n - 1]));
    }
    let mut t = DiagnosticsTable::new(&seq.name, "N", (1..=n_max).collect())
        .with_cap("path_depth", path.depth() as u64)
        .with_cap("members", seq.len() as u64);
    t.push_column("f_xi", f);
    t.push_column("M_xi", big_m);
    t.push_column("f_limit", f_lim);
    Ok(EpReport { case, block_lengths, table: Some(t) })
}

// ---------------------------------------------------------------------------
// Convergence of CT maps along a sequence

/// A sample point of the source limit set with the path used to reach it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub word: Word,
    pub point: BoundaryPoint,
    pub path: BoundaryWordPath,
}

/// `size` attracting or parabolic fixed points of `src` (words up to
/// `word_depth`), chosen with a seeded draw and kept in sample order, each
/// with its power path of `path_depth` letters.
pub fn fixed_point_grid(
    src: &Representation,
    word_depth: usize,
    size: usize,
    path_depth: usize,
    seed: u64,
) -> Result<Vec<GridPoint>> {
    let opts = FixedPointOptions { include_repelling: false, ..FixedPointOptions::default() };
    let sample = sample_fixed_points(src, word_depth, &opts)?;
    let candidates: Vec<_> =
        sample.points.iter().filter(|p| matches!(p.kind, PointKind::Attracting | PointKind::Parabolic)).collect();
    if candidates.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut chosen: Vec<usize> = if candidates.len() <= size {
        (0..candidates.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, candidates.len(), size).into_vec()
    };
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|i| {
            let p = candidates[i];
            Ok(GridPoint {
                word: p.word.clone(),
                point: p.point,
                path: BoundaryWordPath::powers(&p.word, path_depth, p.point)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    UniformConsistent,
    PointwiseOnlyConsistent,
    Inconsistent,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::UniformConsistent => "uniform-consistent",
            Verdict::PointwiseOnlyConsistent => "pointwise-only-consistent",
            Verdict::Inconsistent => "inconsistent",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Per member: sup over the grid and the number of failed cells.
    pub table: DiagnosticsTable,
    pub grid: Vec<String>,
    /// `pointwise[n-1][i]`: chordal distance at grid point `i` for member
    /// `n`; missing where either evaluation failed.
    pub pointwise: Vec<Vec<Option<f64>>>,
    pub limit_failures: usize,
    pub verdict: Verdict,
}

/// Non-increasing over the last `VERDICT_WINDOW` entries, up to `tol`.
fn tail_decreasing(v: &[f64], tol: f64) -> bool {
    let start = v.len().saturating_sub(VERDICT_WINDOW);
    v[start..].windows(2).all(|w| w[1] <= w[0] + tol)
}

/// Compares `î_n` with `î_∞` on the grid. The verdict is
/// `uniform-consistent` when the sup column is non-increasing over the last
/// `VERDICT_WINDOW` members, `pointwise-only-consistent` when only every
/// grid column is, and `inconsistent` otherwise.
pub fn convergence_report(
    seq: &RepSequence,
    src: &Representation,
    grid: &[GridPoint],
    depth: usize,
    tol: f64,
) -> ConvergenceReport {
    let limit: Vec<Option<BoundaryPoint>> =
        grid.par_iter().map(|g| ct_eval(src, &seq.limit, &g.path, depth, tol).ok().map(|e| e.value)).collect();
    let pointwise: Vec<Vec<Option<f64>>> = seq
        .members
        .par_iter()
        .map(|rep| {
            grid.iter()
                .zip(&limit)
                .map(|(g, lim)| {
                    let lim = (*lim)?;
                    let v = ct_eval(src, rep, &g.path, depth, tol).ok()?.value;
                    Some(chordal_dist(&v, &lim))
                })
                .collect()
        })
        .collect();
    let sup: Vec<f64> = pointwise.iter().map(|row| row.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))).collect();
    let failures: Vec<Option<f64>> =
        pointwise.iter().map(|row| Some(row.iter().filter(|x| x.is_none()).count() as f64)).collect();
    let uniform = !sup.is_empty() && tail_decreasing(&sup, tol);
    let columns_ok = !sup.is_empty()
        && (0..grid.len()).all(|i| {
            let col: Vec<f64> = pointwise.iter().filter_map(|row| row[i]).collect();
            col.len() == pointwise.len() && tail_decreasing(&col, tol)
        });
    let verdict = if uniform {
        Verdict::UniformConsistent
    } else if columns_ok {
        Verdict::PointwiseOnlyConsistent
    } else {
        Verdict::Inconsistent
    };
    let mut table = DiagnosticsTable::new(&seq.name, "n", (1..=seq.len()).collect())
        .with_cap("grid", grid.len() as u64)
        .with_cap("path_depth", depth as u64);
    table.flags.insert("verdict".into(), verdict.to_string());
    table.push_column("sup", sup.into_iter().map(Some).collect());
    table.push_column("failures", failures);
    ConvergenceReport {
        table,
        grid: grid.iter().map(|g| g.word.to_string()).collect(),
        pointwise,
        limit_failures: limit.iter().filter(|l| l.is_none()).count(),
        verdict,
    }
}

// ---------------------------------------------------------------------------
// Geometric limits and thin parts

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitMatch {
    pub candidate: usize,
    /// All words within `δ₀`, closest first.
    pub matches: Vec<(Word, f64)>,
}

impl LimitMatch {
    pub fn unique(&self) -> Option<&Word> {
        match self.matches.as_slice() {
            [(w, _)] => Some(w),
            _ => None,
        }
    }

    pub fn ambiguous(&self) -> bool {
        self.matches.len() > 1
    }
}

/// For each candidate `h`, the words `g` with `|g| ≤ depth` and
/// `d(ρ_n(g)·O, h·O) < δ₀`. More than one match means `δ₀` is too coarse.
pub fn geometric_limit_match(
    seq: &RepSequence,
    n: usize,
    candidates: &[Mobius],
    delta0: f64,
    depth: usize,
) -> Result<Vec<LimitMatch>> {
    if n == 0 || n > seq.len() {
        return Err(Error::Precondition(format!("member {n} out of range 1..={}", seq.len())));
    }
    let rep = seq.member(n);
    let targets: Vec<H3Point> = candidates.iter().map(Mobius::orbit_origin).collect();
    let hits = |m: &Mobius| -> Vec<(usize, f64)> {
        let p = m.orbit_origin();
        targets.iter().enumerate().map(|(i, t)| (i, dist_h3(&p, t))).filter(|(_, d)| *d < delta0).collect()
    };
    let mut found: Vec<Vec<(Word, f64)>> = vec![Vec::new(); candidates.len()];
    for (i, d) in hits(&Mobius::identity()) {
        found[i].push((Word::empty(), d));
    }
    let more = fold_ball(
        rep,
        depth,
        || vec![Vec::new(); candidates.len()],
        |acc: &mut Vec<Vec<(Word, f64)>>, w, m| {
            for (i, d) in hits(m) {
                acc[i].push((Word::from_reduced(w.to_vec()), d));
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.extend(y);
            }
            a
        },
    );
    for (f, m) in found.iter_mut().zip(more) {
        f.extend(m);
        f.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    }
    Ok(found.into_iter().enumerate().map(|(candidate, matches)| LimitMatch { candidate, matches }).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenetrationWitness {
    pub penetrates: bool,
    pub thin_part: Option<ThinPart>,
    /// `ρ_n(p^k y)·O`; the segment starts at `O = ρ_n(1)·O`.
    pub endpoint: H3Point,
}

/// Whether the segment from `ρ_n(1)·O` to `ρ_n(p^k y)·O` enters the
/// `ε`-thin part of `ρ_n(p)`. A block with `k = 0` never penetrates.
pub fn penetration_witness(
    seq: &RepSequence,
    n: usize,
    block: &ParabolicBlock,
    epsilon: f64,
    max_power: u32,
) -> Result<PenetrationWitness> {
    if n == 0 || n > seq.len() {
        return Err(Error::Precondition(format!("member {n} out of range 1..={}", seq.len())));
    }
    let rep = seq.member(n);
    let endpoint = rep.orbit(&Word::reduce(&block.expand()));
    if block.power == 0 {
        return Ok(PenetrationWitness { penetrates: false, thin_part: None, endpoint });
    }
    let p = rep.eval(&block.base);
    let part = thin_part_of(&p, epsilon, max_power)
        .ok_or_else(|| Error::NoThinPart(format!("{} has no {epsilon}-thin part in member {n}", block.base)))?;
    let penetrates = segment_meets(&H3Point::origin(), &endpoint, &part);
    Ok(PenetrationWitness { penetrates, thin_part: Some(part), endpoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{
        cyclic_limits, cyclic_sequence, fuchsian_333, punctured_torus, schottky_interpolation, strong_sequence,
        symmetric_schottky, CyclicParams, RootChoice, Schedule,
    };
    use crate::words::enumerate_ball;
    use crate::C64;

    fn deformed() -> Representation {
        punctured_torus(C64::new(3.0, 0.15), C64::new(3.0, 0.0), RootChoice::Smaller).unwrap()
    }

    fn power_path(rep: &Representation, w: &str, depth: usize) -> BoundaryWordPath {
        let w: Word = w.parse().unwrap();
        let xi = rep.eval(&w).fixed_points().unwrap().attracting;
        BoundaryWordPath::powers(&w, depth, xi).unwrap()
    }

    fn strong_seq(n: usize) -> RepSequence {
        schottky_interpolation(3.0, 2.0, 1.0, n, Schedule::InversePower { p: 2.0 }).unwrap()
    }

    #[test]
    fn identity_pair_is_identity() {
        for rep in [symmetric_schottky(2, 2.0, 1.0).unwrap(), fuchsian_333()] {
            for g in fixed_point_grid(&rep, 4, 40, 48, 1).unwrap() {
                let e = ct_eval(&rep, &rep, &g.path, 48, TOL_CT).unwrap();
                assert!(chordal_dist(&e.value, &g.point) < 1e-9, "{}", g.word);
            }
        }
    }

    #[test]
    fn hyperbolic_point_goes_to_deformed_fixed_point() {
        let (src, dst) = (fuchsian_333(), deformed());
        let e = ct_eval(&src, &dst, &power_path(&src, "a", 40), 40, TOL_CT).unwrap();
        let oracle = dst.generators[0].fixed_points().unwrap().attracting;
        assert_eq!(e.method, CtMethod::Tail);
        assert!(e.residual < TOL_CT);
        assert!(chordal_dist(&e.value, &oracle) < 1e-6);
        assert_eq!(e.images.len(), 40);
    }

    #[test]
    fn parabolic_point_uses_fixed_point() {
        let (src, dst) = (fuchsian_333(), deformed());
        let e = ct_eval(&src, &dst, &power_path(&src, "abAB", 40), 40, TOL_CT).unwrap();
        let oracle = dst.eval(&"abAB".parse().unwrap()).fixed_points().unwrap().attracting;
        assert_eq!(e.method, CtMethod::ParabolicFixedPoint);
        assert!(chordal_dist(&e.value, &oracle) < 1e-9);
        // A conjugate of the commutator takes the same branch.
        let e = ct_eval(&src, &dst, &power_path(&src, "babABB", 40), 40, TOL_CT).unwrap();
        let oracle = dst.eval(&"babABB".parse().unwrap()).fixed_points().unwrap().attracting;
        assert_eq!(e.method, CtMethod::ParabolicFixedPoint);
        assert!(chordal_dist(&e.value, &oracle) < 1e-9);
    }

    #[test]
    fn ct_eval_errors() {
        let (src, dst) = (fuchsian_333(), deformed());
        let path = power_path(&src, "ab", 40);
        assert!(matches!(ct_eval(&src, &dst, &path, 14, 1e-15), Err(Error::NotConverged { .. })));
        assert!(matches!(ct_eval(&src, &dst, &path, 8, TOL_CT), Err(Error::PathTooShort(_))));
        let cyc = cyclic_sequence(2, &CyclicParams::default()).unwrap();
        assert!(matches!(ct_eval(&src, cyc.member(1), &path, 40, TOL_CT), Err(Error::Precondition(_))));
    }

    #[test]
    fn fixed_point_compatibility_on_short_words() {
        let (src, dst) = (fuchsian_333(), deformed());
        for w in enumerate_ball(2, 4).unwrap().filter(|w| !w.is_empty()) {
            if !src.eval(&w).classify(EPS_PARABOLIC).is_loxodromic() {
                continue;
            }
            let xi = src.eval(&w).fixed_points().unwrap().attracting;
            let path = BoundaryWordPath::powers(&w, 60, xi).unwrap();
            let e = ct_eval(&src, &dst, &path, 60, TOL_CT).unwrap();
            let oracle = dst.eval(&w).fixed_points().unwrap().attracting;
            assert!(chordal_dist(&e.value, &oracle) < 1e-6, "{w}");
        }
    }

    #[test]
    fn equivariance() {
        let (src, dst) = (fuchsian_333(), deformed());
        let paths = ["a", "b", "aB", "abb", "AAb"].map(|w| power_path(&src, w, 40));
        let words = ["", "a", "B", "ab", "BAb"].map(|w| w.parse::<Word>().unwrap());
        let pairs: Vec<(Word, BoundaryWordPath)> =
            words.iter().flat_map(|w| paths.iter().map(move |p| (w.clone(), p.clone()))).collect();
        assert!(equivariance_check(&src, &src, &pairs, 40, TOL_CT).unwrap() < 1e-9);
        assert!(equivariance_check(&src, &dst, &pairs, 40, TOL_CT).unwrap() < 1e-5);
        let trivial: Vec<_> = paths.iter().map(|p| (Word::empty(), p.clone())).collect();
        assert_eq!(equivariance_check(&src, &dst, &trivial, 40, TOL_CT).unwrap(), 0.0);
    }

    #[test]
    fn floyd_schottky() {
        let rep = symmetric_schottky(2, 2.0, 1.0).unwrap();
        let gen_min = rep.generators.iter().map(|g| g.displacement_origin()).fold(f64::INFINITY, f64::min);
        let gen_max = rep.generators.iter().map(|g| g.displacement_origin()).fold(0.0, f64::max);
        let one = floyd_fit(&rep, 1).unwrap();
        assert!((one.a - gen_max).abs() < 1e-12);
        let mut bs = Vec::new();
        for n in 6..=10 {
            let fit = floyd_fit(&rep, n).unwrap();
            let FloydLower::Linear { b } = fit.lower else { panic!("expected linear lower bound") };
            assert!(b >= 0.5 * gen_min, "{b}");
            assert_eq!(fit.per_length.iter().map(|s| s.count).sum::<u64>(), ball_size(2, n) - 1);
            for s in &fit.per_length {
                assert!(fit.holds(s.len, s.min_dist) && fit.holds(s.len, s.max_dist));
            }
            bs.push(b);
        }
        assert!(bs.windows(2).all(|w| (w[1] - w[0]).abs() < 0.05 * w[0]), "{bs:?}");
    }

    #[test]
    fn floyd_parabolic_and_mistag() {
        let rep = fuchsian_333();
        let fit = floyd_fit(&rep, 8).unwrap();
        assert!(matches!(fit.lower, FloydLower::Logarithmic { .. }));
        // Closed form for powers of the cusp: d(O, P^j O) = 2 log j + O(1).
        let prof = parabolic_profile(&rep, &"abAB".parse().unwrap(), &[10, 100, 1000, 10_000]);
        let r: Vec<f64> = prof.iter().map(|p| p.2).collect();
        assert!(r.iter().all(|x| (x - r[3]).abs() < 0.05), "{r:?}");
        let untagged = Representation::new("untagged", rep.generators.clone(), vec![], rep.evidence.clone()).unwrap();
        assert!(matches!(floyd_fit(&untagged, 6), Err(Error::Mistagged(_))));
    }

    #[test]
    fn uep_growth_and_failure() {
        let rep = symmetric_schottky(2, 2.0, 1.0).unwrap();
        let t = uep_table(&RepSequence::constant(&rep, 3), 14, &UepOptions::for_rank(2, 16)).unwrap();
        let u = t.values("u_N");
        assert_eq!(t.flags["uep"], "consistent");
        assert!(u.windows(2).all(|w| w[1] > w[0]));
        let slopes: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(slopes.iter().all(|s| *s > 1.0 && *s < 3.0), "{slopes:?}");

        let cyc = cyclic_sequence(20, &CyclicParams::default()).unwrap();
        let t = uep_table(&cyc, 30, &UepOptions::for_rank(1, 120)).unwrap();
        assert_eq!(t.flags["uep"], "violating");
        let (_, q) = cyclic_limits(&CyclicParams::default());
        let bound = q.displacement_origin() + 0.5;
        assert!(t.values("u_N").iter().all(|&x| x < bound));

        assert!(matches!(uep_table(&cyc, 30, &UepOptions::for_rank(1, 30)), Err(Error::InsufficientDepth(_))));
    }

    #[test]
    fn uepp_and_exclusion() {
        let seq = strong_seq(8);
        let sampler = SegmentSampler { samples: 64, spread: 3, seed: 5 };
        let v = uepp_table(&seq, 12, &sampler);
        assert_eq!(v.flags["uepp"], "consistent");
        assert_eq!(v, uepp_table(&seq, 12, &sampler));
        let u = uep_table(&seq, 12, &UepOptions::for_rank(2, 14)).unwrap();
        for (vn, un) in v.values("v_N").iter().zip(u.values("u_N")) {
            assert!(*vn <= un + 10.0);
        }

        let rep = symmetric_schottky(2, 2.0, 1.0).unwrap();
        let f = exclusion_profile(&rep, 6, &SegmentSampler { samples: 400, ..sampler });
        let fv = f.values("f");
        assert!(fv.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(f.to_csv(), exclusion_profile(&rep, 6, &SegmentSampler { samples: 400, ..sampler }).to_csv());
        // Brute force over all short segments avoiding the identity bounds the
        // sampled level-0 value from below; the single vertex at a generator
        // bounds it from above.
        let o = H3Point::origin();
        let mut brute = f64::INFINITY;
        let words: Vec<Word> = enumerate_ball(2, 3).unwrap().filter(|w| !w.is_empty()).collect();
        for u in &words {
            for v in &words {
                if u.letters()[0] == v.letters()[0] {
                    let d = if u == v {
                        dist_h3(&o, &rep.orbit(u))
                    } else {
                        point_to_segment(&o, &rep.orbit(u), &rep.orbit(v)).0
                    };
                    brute = brute.min(d);
                }
            }
        }
        let gen_min = rep.generators.iter().map(|g| g.displacement_origin()).fold(f64::INFINITY, f64::min);
        let f0 = f.values("f_raw")[0];
        assert!(f0 >= brute - 1e-9 && f0 <= gen_min + 1e-9, "{brute} {f0} {gen_min}");
    }

    #[test]
    fn ep_cases() {
        let seq = strong_seq(10);
        let path = power_path(&seq.limit, "a", 20);
        let rep = ep_diagnostic(&seq, &path, 12, 2).unwrap();
        assert_eq!(rep.case, PathCase::BoundedBlocks);
        let t = rep.table.unwrap();
        assert!(t.values("M_xi").iter().all(|&m| m == 1.0));
        let f = t.values("f_xi");
        assert!(f.windows(2).all(|w| w[1] > w[0]));

        let fuchs = RepSequence::constant(&fuchsian_333(), 3);
        let cusp = power_path(&fuchs.limit, "abAB", 24);
        let rep = ep_diagnostic(&fuchs, &cusp, 10, 2).unwrap();
        assert_eq!(rep.case, PathCase::InfiniteBlock);
        assert!(rep.table.is_none());

        let mut raw = String::new();
        for k in 1..=4 {
            raw.push('b');
            raw.push_str(&"abAB".repeat(k));
        }
        let letters: Word = raw.parse().unwrap();
        let growing = BoundaryWordPath { letters, period: None, target: BoundaryPoint::Infinity, stats: None };
        assert_eq!(ep_diagnostic(&fuchs, &growing, 10, 1).unwrap().case, PathCase::GrowingBlocks);
        assert!(matches!(ep_diagnostic(&fuchs, &growing, 100, 1), Err(Error::PathTooShort(_))));
    }

    #[test]
    fn convergence_reports() {
        let rep = symmetric_schottky(2, 2.0, 1.0).unwrap();
        let grid = fixed_point_grid(&rep, 6, 30, 48, 3).unwrap();
        assert_eq!(grid.len(), 30);
        let r = convergence_report(&RepSequence::constant(&rep, 4), &rep, &grid, 48, TOL_CT);
        assert_eq!(r.verdict, Verdict::UniformConsistent);
        assert!(r.pointwise.iter().flatten().all(|d| d.unwrap() < TOL_CT));

        let seq = strong_seq(16);
        let r = convergence_report(&seq, &seq.limit, &grid, 48, TOL_CT);
        assert_eq!(r.verdict, Verdict::UniformConsistent);
        let sup = r.table.values("sup");
        assert!(sup[15] * 1.5 <= sup[7], "{sup:?}");

        let cyc = cyclic_sequence(30, &CyclicParams::default()).unwrap();
        let src = cyc.member(1).clone();
        let grid = fixed_point_grid(&src, 1, 10, 20, 0).unwrap();
        assert_eq!(grid.len(), 2);
        let r = convergence_report(&cyc, &src, &grid, 20, TOL_CT);
        let last = r.pointwise.last().unwrap();
        assert!(last.iter().all(|d| d.unwrap() < 2.5 / 900.0));
        assert_ne!(r.verdict, Verdict::Inconsistent);
    }

    #[test]
    fn limit_matching() {
        let seq = strong_seq(12);
        let m = geometric_limit_match(&seq, 12, &seq.limit.generators, 1.0, 3).unwrap();
        for (i, lm) in m.iter().enumerate() {
            assert_eq!(lm.unique().unwrap(), &Word::generator(i));
        }
        let coarse = geometric_limit_match(&seq, 12, &seq.limit.generators, 10.0, 3).unwrap();
        assert!(coarse.iter().all(LimitMatch::ambiguous));

        let params = CyclicParams::default();
        let cyc = cyclic_sequence(6, &params).unwrap();
        let (_, q) = cyclic_limits(&params);
        // `Q` moves `O` by about 0.5, so the radius must be smaller than that.
        let m = geometric_limit_match(&cyc, 6, &[q], 0.2, 60).unwrap();
        assert_eq!(m[0].unique(), cyc.designated[5].as_ref());
    }

    #[test]
    fn penetration() {
        let seq = strong_sequence("torus-deformation", 20, Schedule::InversePower { p: 1.0 }, |s| {
            punctured_torus(C64::new(3.0, 0.15 * (1.0 - s)), C64::new(3.0, 0.0), RootChoice::Smaller)
        })
        .unwrap();
        let block = |power| ParabolicBlock { base: "abAB".parse().unwrap(), power, remainder: Word::empty(), start: 0 };
        let w = penetration_witness(&seq, 20, &block(8), 1.0, 1).unwrap();
        assert!(w.penetrates);
        assert!(matches!(w.thin_part, Some(ThinPart::Horoball(_))));
        assert!(!penetration_witness(&seq, 20, &block(0), 1.0, 1).unwrap().penetrates);

        let schottky = RepSequence::constant(&symmetric_schottky(2, 2.0, 1.0).unwrap(), 1);
        let lox = ParabolicBlock { base: "ab".parse().unwrap(), power: 3, remainder: Word::empty(), start: 0 };
        assert!(matches!(penetration_witness(&schottky, 1, &lox, 0.01, 1), Err(Error::NoThinPart(_))));
    }

    #[test]
    fn table_exports() {
        let mut t = DiagnosticsTable::new("fam", "N", vec![1, 2]).with_cap("depth", 5);
        t.metadata.spec_hash = Some("abc".into());
        t.push_column("x", vec![Some(0.5), None]);
        let csv = t.to_csv();
        assert!(csv.contains("# spec_hash: abc\n"));
        assert!(csv.ends_with("N,x\n1,0.5\n2,\n"));
        let back: DiagnosticsTable = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }
}
