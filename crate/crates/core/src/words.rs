//! Reduced words in free groups, Cayley-graph balls and geodesics, parabolic
//! block parsing, and word paths converging to boundary points.
//!
//! Generator `i` is written as the ASCII letter `'a' + i`, its inverse as
//! `'A' + i`. Internally a letter is `2i` (generator) or `2i + 1` (inverse),
//! which makes the numeric order `a < A < b < B < …` the lexicographic order
//! used everywhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::moebius::{BoundaryPoint, H3Point, Mobius};

pub type Letter = u8;

/// Largest supported rank (one ASCII letter per generator).
pub const MAX_RANK: usize = 26;

/// Largest number of words `enumerate_ball` will produce.
pub const BALL_SIZE_LIMIT: u64 = 25_000_000;

#[inline]
pub fn inverse_letter(l: Letter) -> Letter {
    l ^ 1
}

#[inline]
pub fn generator_of(l: Letter) -> usize {
    (l >> 1) as usize
}

#[inline]
pub fn is_inverse(l: Letter) -> bool {
    l & 1 == 1
}

pub fn letter_char(l: Letter) -> char {
    let base = if is_inverse(l) { b'A' } else { b'a' };
    (base + (l >> 1)) as char
}

pub fn char_letter(ch: char) -> Result<Letter> {
    match ch {
        'a'..='z' => Ok(2 * (ch as u8 - b'a')),
        'A'..='Z' => Ok(2 * (ch as u8 - b'A') + 1),
        _ => Err(Error::InvalidWord(format!("unexpected character {ch:?}"))),
    }
}

/// A freely reduced word.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn generator(i: usize) -> Self {
        Word(vec![(2 * i) as Letter])
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce(raw: &[Letter]) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(raw.len());
        for &l in raw {
            if out.last() == Some(&inverse_letter(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Wraps letters already known to be reduced.
    pub(crate) fn from_reduced(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[1] != inverse_letter(w[0])));
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of distinct generators needed to spell the word.
    pub fn min_rank(&self) -> usize {
        self.0.iter().map(|&l| generator_of(l) + 1).max().unwrap_or(0)
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|&l| inverse_letter(l)).collect())
    }

    pub fn mul(&self, other: &Word) -> Self {
        let mut raw = self.0.clone();
        raw.extend_from_slice(&other.0);
        Word::reduce(&raw)
    }

    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut raw = Vec::with_capacity(base.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            raw.extend_from_slice(&base.0);
        }
        Word::reduce(&raw)
    }

    pub fn prefix(&self, n: usize) -> Self {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.0.first(), self.0.last()) {
            (Some(&f), Some(&l)) => self.0.len() < 2 || f != inverse_letter(l),
            _ => true,
        }
    }

    /// Splits `w = u c u⁻¹` with `c` cyclically reduced; returns `(u, c)`.
    pub fn cyclic_split(&self) -> (Word, Word) {
        let n = self.0.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.0[k] == inverse_letter(self.0[n - 1 - k]) {
            k += 1;
        }
        (Word(self.0[..k].to_vec()), Word(self.0[k..n - k].to_vec()))
    }

    /// Evaluates the word with the given generator matrices.
    pub fn eval(&self, gens: &[Mobius]) -> Mobius {
        let inv: Vec<Mobius> = gens.iter().map(Mobius::inverse).collect();
        self.eval_with(gens, &inv)
    }

    pub fn eval_with(&self, gens: &[Mobius], inverses: &[Mobius]) -> Mobius {
        let mut m = Mobius::identity();
        for &l in &self.0 {
            let g = if is_inverse(l) { &inverses[generator_of(l)] } else { &gens[generator_of(l)] };
            m = m.compose(g);
        }
        m
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for &l in &self.0 {
            write!(f, "{}", letter_char(l))?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses and reduces; `""` and `"1"` denote the identity.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(Word::empty());
        }
        let raw = s.chars().map(char_letter).collect::<Result<Vec<_>>>()?;
        Ok(Word::reduce(&raw))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Generators of a free group together with the designated parabolic words.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub rank: usize,
    pub parabolic: Vec<Word>,
}

impl Alphabet {
    pub fn new(rank: usize, parabolic: Vec<Word>) -> Result<Self> {
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::InvalidWord(format!("rank must be in 1..={MAX_RANK}, got {rank}")));
        }
        for p in &parabolic {
            if p.is_empty() || p.min_rank() > rank {
                return Err(Error::InvalidWord(format!("parabolic word {p} not over rank {rank}")));
            }
        }
        Ok(Alphabet { rank, parabolic })
    }

    pub fn contains(&self, w: &Word) -> bool {
        w.min_rank() <= self.rank
    }
}

/// `1 + Σ_{j=1..n} 2k(2k−1)^{j−1}`, saturating.
pub fn ball_size(rank: usize, n: usize) -> u64 {
    let k2 = 2 * rank as u64;
    let mut total: u64 = 1;
    let mut sphere: u64 = k2;
    for _ in 0..n {
        total = total.saturating_add(sphere);
        sphere = sphere.saturating_mul(k2 - 1);
    }
    total
}

/// Largest radius whose ball stays below `BALL_SIZE_LIMIT` words.
pub fn depth_cap(rank: usize) -> usize {
    if rank == 1 {
        return ((BALL_SIZE_LIMIT - 1) / 2) as usize;
    }
    let mut n = 0;
    while ball_size(rank, n + 1) <= BALL_SIZE_LIMIT {
        n += 1;
    }
    n
}

/// Length-lexicographic iterator over the ball of radius `n`.
#[derive(Clone, Debug)]
pub struct BallIter {
    rank: usize,
    max_len: usize,
    current: Option<Vec<Letter>>,
}

pub fn enumerate_ball(rank: usize, n: usize) -> Result<BallIter> {
    enumerate_range(rank, 0, n)
}

/// Words with `min_len ≤ |w| ≤ max_len`, length-lexicographically.
pub fn enumerate_range(rank: usize, min_len: usize, max_len: usize) -> Result<BallIter> {
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::InvalidWord(format!("rank must be in 1..={MAX_RANK}, got {rank}")));
    }
    let cap = depth_cap(rank);
    if max_len > cap {
        return Err(Error::DepthCap { requested: max_len, cap });
    }
    let current = if min_len > max_len { None } else { Some(first_of_length(min_len)) };
    Ok(BallIter { rank, max_len, current })
}

/// Reduced words of length exactly `n`.
pub fn enumerate_sphere(rank: usize, n: usize) -> Result<BallIter> {
    enumerate_range(rank, n, n)
}

fn first_of_length(n: usize) -> Vec<Letter> {
    // "aaaa…" is the smallest reduced word of each length.
    vec![0; n]
}

fn smallest_after(prev: Option<Letter>) -> Letter {
    match prev {
        Some(1) => 1,
        _ => 0,
    }
}

impl BallIter {
    fn successor(&self, w: &[Letter]) -> Option<Vec<Letter>> {
        let top = (2 * self.rank) as Letter;
        let mut w = w.to_vec();
        let n = w.len();
        for i in (0..n).rev() {
            let forbidden = if i > 0 { Some(inverse_letter(w[i - 1])) } else { None };
            let mut next = w[i] + 1;
            if Some(next) == forbidden {
                next += 1;
            }
            if next < top {
                w[i] = next;
                for j in i + 1..n {
                    w[j] = smallest_after(Some(w[j - 1]));
                }
                return Some(w);
            }
        }
        if n < self.max_len {
            Some(first_of_length(n + 1))
        } else {
            None
        }
    }
}

impl Iterator for BallIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let cur = self.current.take()?;
        self.current = self.successor(&cur);
        Some(Word(cur))
    }
}

/// The vertices of the Cayley-graph geodesic from `u` to `v`.
pub fn geodesic_word(u: &Word, v: &Word) -> Vec<Word> {
    let step = u.inverse().mul(v);
    let mut path = Vec::with_capacity(step.len() + 1);
    path.push(u.clone());
    let mut raw = u.0.clone();
    for &l in step.letters() {
        raw.push(l);
        path.push(Word::reduce(&raw));
    }
    path
}

pub fn word_distance(u: &Word, v: &Word) -> usize {
    u.inverse().mul(v).len()
}

/// A maximal run `p^k` followed by a short remainder `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParabolicBlock {
    pub base: Word,
    pub power: i64,
    pub remainder: Word,
    /// Letter offset of the block in the parsed word.
    pub start: usize,
}

impl ParabolicBlock {
    pub fn length(&self) -> usize {
        self.power.unsigned_abs() as usize
    }

    pub fn letter_len(&self) -> usize {
        self.base.len() * self.length() + self.remainder.len()
    }

    pub fn expand(&self) -> Vec<Letter> {
        let mut out = self.base.pow(self.power).0;
        out.extend_from_slice(&self.remainder.0);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Block(ParabolicBlock),
    Gap { letters: String },
}

/// Default bound on block remainders.
pub const DEFAULT_REMAINDER_BOUND: usize = 2;

/// Splits `w` into maximal parabolic blocks (`|k| ≥ k0`) and gaps.
///
/// At each position the longest run of any `p ∈ parabolic` or its inverse is
/// taken (earlier entries win ties, positive powers before negative). The
/// remainder is the longest proper prefix of the repeated word that follows
/// the run, if it has length at most `remainder_bound`.
pub fn parse_parabolic_blocks(w: &Word, parabolic: &[Word], k0: usize, remainder_bound: usize) -> Vec<Segment> {
    let k0 = k0.max(1);
    let letters = w.letters();
    let mut out = Vec::new();
    let mut gap: Vec<Letter> = Vec::new();
    let mut i = 0;
    let flush = |gap: &mut Vec<Letter>, out: &mut Vec<Segment>| {
        if !gap.is_empty() {
            out.push(Segment::Gap { letters: Word(std::mem::take(gap)).to_string() });
        }
    };
    while i < letters.len() {
        let mut best: Option<(usize, &Word, i64, Word)> = None;
        for p in parabolic {
            if p.is_empty() {
                continue;
            }
            for sign in [1i64, -1] {
                let q = if sign > 0 { p.clone() } else { p.inverse() };
                let ql = q.letters();
                let mut k = 0;
                while i + (k + 1) * ql.len() <= letters.len()
                    && &letters[i + k * ql.len()..i + (k + 1) * ql.len()] == ql
                {
                    k += 1;
                }
                if k < k0 {
                    continue;
                }
                let after = i + k * ql.len();
                let mut r = 0;
                while r < ql.len() - 1
                    && r < remainder_bound
                    && after + r < letters.len()
                    && letters[after + r] == ql[r]
                {
                    r += 1;
                }
                let total = k * ql.len() + r;
                if best.as_ref().is_none_or(|b| total > b.0) {
                    best = Some((total, p, sign * k as i64, Word(letters[after..after + r].to_vec())));
                }
            }
        }
        match best {
            Some((total, p, power, remainder)) => {
                flush(&mut gap, &mut out);
                out.push(Segment::Block(ParabolicBlock { base: p.clone(), power, remainder, start: i }));
                i += total;
            }
            None => {
                gap.push(letters[i]);
                i += 1;
            }
        }
    }
    flush(&mut gap, &mut out);
    out
}

/// Concatenates parsed segments back into letters.
pub fn recompose(segments: &[Segment]) -> Result<Vec<Letter>> {
    let mut out = Vec::new();
    for s in segments {
        match s {
            Segment::Block(b) => out.extend(b.expand()),
            Segment::Gap { letters } => {
                for ch in letters.chars() {
                    out.push(char_letter(ch)?);
                }
            }
        }
    }
    Ok(out)
}

/// Observed comparison constants of a word path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    /// Smallest `L` with `(b−a)/L ≤ |g_a⁻¹ g_b| ≤ L (b−a)` along the path.
    pub word_constant: f64,
    /// Range of `d(g_a·O, g_b·O) / (b − a)` over sampled pairs.
    pub ambient_min: f64,
    pub ambient_max: f64,
}

/// Prefix of a reduced infinite word `g₁, g₂, …` converging to `target`,
/// optionally known to be eventually periodic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWordPath {
    pub letters: Word,
    pub period: Option<Word>,
    pub target: BoundaryPoint,
    pub stats: Option<PathStats>,
}

impl BoundaryWordPath {
    /// The path `w, w², w³, …` (after stripping the conjugating part of `w`)
    /// converging to the attracting fixed point of `w`.
    pub fn powers(w: &Word, depth: usize, target: BoundaryPoint) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWord("powers of the identity do not converge".into()));
        }
        let (u, c) = w.cyclic_split();
        let mut raw = u.0.clone();
        while raw.len() < depth {
            raw.extend_from_slice(&c.0);
        }
        raw.truncate(depth);
        Ok(BoundaryWordPath { letters: Word(raw), period: Some(c), target, stats: None })
    }

    pub fn depth(&self) -> usize {
        self.letters.len()
    }

    pub fn element(&self, r: usize) -> Word {
        self.letters.prefix(r)
    }

    /// The path towards `g·ξ`: reduce `g` followed by this path.
    pub fn translate(&self, g: &Word, target: BoundaryPoint) -> Self {
        let mut raw = g.0.clone();
        raw.extend_from_slice(&self.letters.0);
        let reduced = Word::reduce(&raw);
        // Cancellation only eats into the front; keep what is still
        // determined by the original prefix.
        BoundaryWordPath { letters: reduced, period: self.period.clone(), target, stats: None }
    }

    /// If the path is eventually `… p p p` for a word `p`, returns the
    /// shortest such period.
    pub fn eventual_period(&self) -> Option<&Word> {
        self.period.as_ref()
    }
}

/// Greedy tracking of the ray from `O` to `target` by orbit points.
///
/// At each step every one-letter extension is scored by the distance of its
/// orbit point to the ray (with a two-letter lookahead); the best extension
/// is taken, ties going to the smaller letter. The walk stalls when `2k`
/// consecutive steps fail to advance the projection onto the ray.
pub fn standard_path_to(gens: &[Mobius], target: BoundaryPoint, depth: usize) -> Result<BoundaryWordPath> {
    let rank = gens.len();
    if rank == 0 {
        return Err(Error::InvalidWord("empty generating set".into()));
    }
    let cap = depth_cap(rank).max(64);
    if depth > cap * 64 {
        return Err(Error::DepthCap { requested: depth, cap: cap * 64 });
    }
    let inverses: Vec<Mobius> = gens.iter().map(Mobius::inverse).collect();
    let letter_map = |l: Letter| if is_inverse(l) { &inverses[generator_of(l)] } else { &gens[generator_of(l)] };
    // Work with the full geodesic through O ending at the target, normalized
    // to the vertical axis; this keeps deep orbit points well conditioned.
    let q = target.to_sphere();
    let antipode = BoundaryPoint::from_sphere([-q[0], -q[1], -q[2]]);
    let axis = crate::hypgeo::Geodesic::new(antipode, target)?;
    let norm = axis.normalizer();
    let h0 = norm.act_h3(&H3Point::origin()).t;
    // Signed position of the foot along the ray and distance to the ray.
    let score = |m: &Mobius| -> (f64, f64) {
        let p = norm.act_h3(&m.orbit_origin());
        let along = (p.z.norm().hypot(p.t) / h0).ln();
        let dist = (p.z.norm() / p.t).asinh();
        if along < 0.0 {
            (along, crate::moebius::dist_h3(&p, &H3Point { z: p.z * 0.0, t: h0 }))
        } else {
            (along, dist)
        }
    };
    let mut letters: Vec<Letter> = Vec::with_capacity(depth);
    let mut m = Mobius::identity();
    let mut progress = 0.0f64;
    let mut stalled = 0usize;
    let top = (2 * rank) as Letter;
    while letters.len() < depth {
        let prev = letters.last().copied();
        let mut best: Option<(f64, Letter, Mobius, f64)> = None;
        for x in 0..top {
            if prev.is_some_and(|p| x == inverse_letter(p)) {
                continue;
            }
            let mx = m.compose(letter_map(x));
            let (along, dist) = score(&mx);
            let mut look = dist;
            for y in 0..top {
                if y == inverse_letter(x) {
                    continue;
                }
                let (_, d2) = score(&mx.compose(letter_map(y)));
                look = look.min(d2.max(dist));
            }
            let key = look;
            if best.as_ref().is_none_or(|b| key < b.0 - 1e-12) {
                best = Some((key, x, mx, along));
            }
        }
        let (_, x, mx, along) = best.expect("rank ≥ 1 leaves an extension");
        if along > progress + 1e-12 {
            progress = along;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 2 * rank {
                return Err(Error::TrackingStalled { depth: letters.len() });
            }
        }
        letters.push(x);
        m = mx;
    }
    let path = Word(letters);
    let stats = path_stats(gens, &path);
    Ok(BoundaryWordPath { letters: path, period: None, target, stats: Some(stats) })
}

/// Comparison constants for the prefixes of `w` (pairs up to 64 apart).
pub fn path_stats(gens: &[Mobius], w: &Word) -> PathStats {
    let mut pts: Vec<H3Point> = Vec::with_capacity(w.len() + 1);
    let mut m = Mobius::identity();
    let inverses: Vec<Mobius> = gens.iter().map(Mobius::inverse).collect();
    pts.push(m.orbit_origin());
    for &l in w.letters() {
        let g = if is_inverse(l) { &inverses[generator_of(l)] } else { &gens[generator_of(l)] };
        m = m.compose(g);
        pts.push(m.orbit_origin());
    }
    let mut word_constant: f64 = 1.0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for a in 0..pts.len() {
        for b in a + 1..pts.len().min(a + 65) {
            let span = (b - a) as f64;
            let wl = word_distance(&w.prefix(a), &w.prefix(b)) as f64;
            word_constant = word_constant.max(span / wl.max(1e-300)).max(wl / span);
            let r = crate::moebius::dist_h3(&pts[a], &pts[b]) / span;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if pts.len() < 2 {
        lo = 0.0;
    }
    PathStats { word_constant, ambient_min: lo, ambient_max: hi }
}

/// Greedy lattice walk on a flat horosphere: from `0`, step by `±steps[i]`
/// towards `target`, always choosing the step that keeps the walk closest to
/// the straight segment while advancing. Returns the visited points and the
/// largest distance from the segment.
pub fn horosphere_walk(
    steps: &[crate::moebius::C64],
    target: crate::moebius::C64,
    max_steps: usize,
) -> (Vec<crate::moebius::C64>, f64) {
    use crate::moebius::C64;
    let len = target.norm();
    let u = if len > 0.0 { target / len } else { C64::new(1.0, 0.0) };
    let mut pos = C64::new(0.0, 0.0);
    let mut visited = vec![pos];
    let mut dev: f64 = 0.0;
    let seg_dist = |p: C64| {
        let s = (p.conj() * u).re.clamp(0.0, len);
        (p - u * s).norm()
    };
    for _ in 0..max_steps {
        if (pos - target).norm() < 1e-9 {
            break;
        }
        let here = (target - pos).norm();
        let mut best: Option<(f64, C64)> = None;
        for &s in steps {
            for cand in [pos + s, pos - s] {
                if (target - cand).norm() >= here - 1e-12 {
                    continue;
                }
                let d = seg_dist(cand);
                if best.is_none_or(|b| d < b.0 - 1e-12) {
                    best = Some((d, cand));
                }
            }
        }
        match best {
            Some((d, cand)) => {
                pos = cand;
                dev = dev.max(d);
                visited.push(pos);
            }
            None => break,
        }
    }
    (visited, dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::{chordal_dist, C64};
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w("aA"), Word::empty());
        assert_eq!(w("abB"), w("a"));
        assert_eq!(w("ab").to_string(), "ab");
        assert_eq!(w("1"), Word::empty());
        assert_eq!(Word::empty().to_string(), "1");
        assert!("a3".parse::<Word>().is_err());
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(enumerate_ball(2, 0).unwrap().count(), 1);
        assert_eq!(enumerate_ball(2, 1).unwrap().count(), 5);
        assert_eq!(enumerate_ball(2, 2).unwrap().count(), 17);
        for n in 0..=7 {
            assert_eq!(enumerate_ball(2, n).unwrap().count() as u64, ball_size(2, n));
            assert_eq!(enumerate_ball(3, n.min(5)).unwrap().count() as u64, ball_size(3, n.min(5)));
        }
        assert_eq!(enumerate_ball(1, 10).unwrap().count(), 21);
        assert!(matches!(enumerate_ball(2, 40), Err(Error::DepthCap { .. })));
        assert_eq!(depth_cap(2), 14);
    }

    #[test]
    fn ball_is_length_lex_and_distinct() {
        let words: Vec<Word> = enumerate_ball(2, 6).unwrap().collect();
        for pair in words.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert!(a.len() < b.len() || (a.len() == b.len() && a.letters() < b.letters()));
        }
        for x in &words {
            assert_eq!(Word::reduce(x.letters()), *x);
        }
        let first: Vec<String> = words.iter().take(5).map(|w| w.to_string()).collect();
        assert_eq!(first, ["1", "a", "A", "b", "B"]);
    }

    #[test]
    fn geodesic_examples() {
        assert_eq!(geodesic_word(&w("ab"), &w("ab")), vec![w("ab")]);
        assert_eq!(geodesic_word(&Word::empty(), &w("ab")), vec![Word::empty(), w("a"), w("ab")]);
        assert_eq!(word_distance(&w("a"), &w("b")), 2);
        let p = geodesic_word(&w("ab"), &w("aB"));
        assert_eq!(p, vec![w("ab"), w("a"), w("aB")]);
    }

    #[test]
    fn cyclic_split_examples() {
        assert_eq!(w("abbA").cyclic_split(), (w("a"), w("bb")));
        assert_eq!(w("ab").cyclic_split(), (Word::empty(), w("ab")));
        assert_eq!(w("a").cyclic_split(), (Word::empty(), w("a")));
        assert_eq!(w("abcBA").cyclic_split(), (w("ab"), w("c")));
    }

    #[test]
    fn parse_examples() {
        let p = vec![w("p")];
        let segs = parse_parabolic_blocks(&w("pppab"), &p, 2, 2);
        assert_eq!(segs.len(), 2);
        match &segs[0] {
            Segment::Block(b) => assert_eq!((b.power, b.remainder.len()), (3, 0)),
            s => panic!("{s:?}"),
        }
        assert_eq!(segs[1], Segment::Gap { letters: "ab".into() });

        assert_eq!(parse_parabolic_blocks(&w("ab"), &p, 2, 2), vec![Segment::Gap { letters: "ab".into() }]);

        let segs = parse_parabolic_blocks(&w("pppppaPPP"), &p, 2, 2);
        let powers: Vec<i64> =
            segs.iter().filter_map(|s| if let Segment::Block(b) = s { Some(b.power) } else { None }).collect();
        assert_eq!(powers, [5, -3]);
        assert_eq!(segs[1], Segment::Gap { letters: "a".into() });
    }

    #[test]
    fn parse_commutator_blocks_with_remainder() {
        let p = vec![w("abAB")];
        let x = w("bb").mul(&w("abAB").pow(3)).mul(&w("abb"));
        let segs = parse_parabolic_blocks(&x, &p, 2, 2);
        let blocks: Vec<&ParabolicBlock> =
            segs.iter().filter_map(|s| if let Segment::Block(b) = s { Some(b) } else { None }).collect();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].power, 3);
        assert_eq!(blocks[0].remainder, w("ab"));
        assert_eq!(recompose(&segs).unwrap(), x.letters());
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent_and_subadditive(a in "[abAB]{0,20}", b in "[abAB]{0,20}") {
            let (u, v) = (w(&a), w(&b));
            prop_assert_eq!(Word::reduce(u.letters()), u.clone());
            prop_assert!(u.mul(&v).len() <= u.len() + v.len());
            prop_assert_eq!(u.mul(&u.inverse()), Word::empty());
        }

        #[test]
        fn parse_round_trips(s in "[pPab]{0,40}", k0 in 1usize..4) {
            let x = w(&s);
            let segs = parse_parabolic_blocks(&x, &[w("p"), w("ab")], k0, 2);
            prop_assert_eq!(recompose(&segs).unwrap(), x.letters().to_vec());
        }

        #[test]
        fn geodesic_path_has_unit_steps(a in "[abAB]{0,12}", b in "[abAB]{0,12}") {
            let (u, v) = (w(&a), w(&b));
            let path = geodesic_word(&u, &v);
            prop_assert_eq!(path.len(), word_distance(&u, &v) + 1);
            for pair in path.windows(2) {
                prop_assert_eq!(word_distance(&pair[0], &pair[1]), 1);
            }
        }
    }

    #[test]
    fn powers_path_of_conjugate() {
        let x = w("abbA");
        let p = BoundaryWordPath::powers(&x, 9, BoundaryPoint::Infinity).unwrap();
        assert_eq!(p.letters, w("abbbbbbbb"));
        assert_eq!(p.period, Some(w("bb")));
    }

    #[test]
    fn tracking_follows_axis() {
        let a = Mobius::diagonal(C64::new(2.0, 0.0)).unwrap();
        let b = Mobius::real(3.0, 4.0, 2.0, 3.0).unwrap();
        let target = a.fixed_points().unwrap().attracting;
        let p = standard_path_to(&[a, b], target, 6).unwrap();
        assert_eq!(p.letters, w("aaaaaa"));
        let empty = standard_path_to(&[a, b], target, 0).unwrap();
        assert!(empty.letters.is_empty());
    }

    #[test]
    fn tracked_orbit_converges_to_target() {
        // Schottky pair with well-separated disks.
        let a = Mobius::real(3.0, 8.0, 1.0, 3.0).unwrap();
        let b = Mobius::new(C64::new(0.0, 3.0), C64::new(-10.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 3.0)).unwrap();
        let ab = a.compose(&b);
        let target = ab.fixed_points().unwrap().attracting;
        let p = standard_path_to(&[a, b], target, 16).unwrap();
        let m = p.letters.eval(&[a, b]);
        let shadow = m.orbit_origin().shadow().unwrap();
        assert!(chordal_dist(&shadow, &target) < 1e-3, "{}", p.letters);
        assert!(p.stats.unwrap().ambient_min > 0.0);
    }

    #[test]
    fn horosphere_walk_stays_near_segment() {
        let steps = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        for (x, y) in [(7.0, 3.0), (-5.0, 11.0), (13.0, -13.0), (0.0, 9.0)] {
            let (pts, dev) = horosphere_walk(&steps, C64::new(x, y), 100);
            assert_eq!(*pts.last().unwrap(), C64::new(x, y));
            assert!(dev <= crate::constants::HOROSPHERE_TRACKING_D, "{dev}");
        }
    }
}
