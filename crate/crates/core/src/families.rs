//! Explicit marked Kleinian groups and sequences of representations:
//! Schottky groups with ping-pong certificates, once-punctured-torus groups
//! from trace coordinates, interpolated sequences, and a cyclic loxodromic
//! family whose powers converge to a second parabolic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moebius::{BoundaryPoint, H3Point, Mobius, C64};
use crate::words::{Alphabet, Word};

/// Slack allowed when checking that boundary circles map onto each other.
pub const PING_PONG_SLACK: f64 = 1e-9;

/// Boundary points sampled per disk when verifying a ping-pong certificate.
pub const PING_PONG_SAMPLES: usize = 64;

/// Jørgensen threshold slack.
pub const JORGENSEN_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: C64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: C64, radius: f64) -> Self {
        Disk { center, radius }
    }

    pub fn contains(&self, z: C64, slack: f64) -> bool {
        (z - self.center).norm() <= self.radius + slack
    }

    pub fn boundary_point(&self, i: usize, n: usize) -> C64 {
        let theta = std::f64::consts::TAU * i as f64 / n as f64;
        self.center + C64::from_polar(self.radius, theta)
    }
}

/// The Möbius map taking the exterior of `from` onto the interior of `to`,
/// `z ↦ c₂ − r₁r₂ / (z − c₁)`.
pub fn circle_pairing(from: &Disk, to: &Disk) -> Result<Mobius> {
    let (c1, c2) = (from.center, to.center);
    let rr = C64::new(from.radius * to.radius, 0.0);
    Mobius::new(c2, -c1 * c2 - rr, C64::new(1.0, 0.0), -c1)
}

/// Disk pairs witnessing discreteness via ping-pong.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PingPongCertificate {
    /// `(D_i, D_i')`: generator `i` maps the exterior of `D_i` into `D_i'`.
    pub pairs: Vec<(Disk, Disk)>,
    /// Smallest gap between two disks.
    pub min_gap: f64,
    /// Largest deviation of a mapped boundary sample from the partner circle.
    pub max_boundary_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JorgensenResult {
    pub value: f64,
    /// Commutator trace 2: the pair has a common fixed point and the
    /// inequality does not apply.
    pub elementary: bool,
}

impl JorgensenResult {
    pub fn passes(&self) -> bool {
        self.elementary || self.value >= 1.0 - JORGENSEN_SLACK
    }
}

/// `|tr²A − 4| + |tr[A,B] − 2|`, a necessary condition for discreteness of
/// a non-elementary two-generator group.
pub fn jorgensen_filter(a: &Mobius, b: &Mobius) -> JorgensenResult {
    let comm = a.compose(b).compose(&a.inverse()).compose(&b.inverse());
    let tc = comm.trace();
    let ta = a.trace();
    let value = (ta * ta - 4.0).norm() + (tc - 2.0).norm();
    JorgensenResult { value, elementary: (tc - 2.0).norm() < 1e-9 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    PingPong(PingPongCertificate),
    Jorgensen(JorgensenResult),
    /// Cyclic or otherwise elementary groups, discrete by inspection.
    Elementary,
    Unchecked,
}

impl Evidence {
    pub fn passes(&self) -> bool {
        match self {
            Evidence::Jorgensen(j) => j.passes(),
            _ => true,
        }
    }
}

/// A marked representation of a free group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Representation {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub alphabet: Alphabet,
    pub generators: Vec<Mobius>,
    #[serde(skip)]
    inverses: Vec<Mobius>,
    pub evidence: Evidence,
    pub warnings: Vec<String>,
}

impl Representation {
    pub fn new(family: &str, generators: Vec<Mobius>, parabolic: Vec<Word>, evidence: Evidence) -> Result<Self> {
        let alphabet = Alphabet::new(generators.len(), parabolic)?;
        let inverses = generators.iter().map(Mobius::inverse).collect();
        Ok(Representation {
            family: family.to_string(),
            params: BTreeMap::new(),
            alphabet,
            generators,
            inverses,
            evidence,
            warnings: Vec::new(),
        })
    }

    /// Generators given directly; discreteness evidence from the Jørgensen
    /// filter for rank two, none otherwise.
    pub fn from_generators(family: &str, generators: Vec<Mobius>, parabolic: Vec<Word>) -> Result<Self> {
        let evidence = match generators.len() {
            1 => Evidence::Elementary,
            2 => Evidence::Jorgensen(jorgensen_filter(&generators[0], &generators[1])),
            _ => Evidence::Unchecked,
        };
        let mut rep = Representation::new(family, generators, parabolic, evidence)?;
        if !rep.evidence.passes() {
            rep.warnings.push("likely non-discrete: Jørgensen inequality fails".into());
        }
        Ok(rep)
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn rank(&self) -> usize {
        self.alphabet.rank
    }

    pub fn parabolic(&self) -> &[Word] {
        &self.alphabet.parabolic
    }

    pub fn inverses(&self) -> &[Mobius] {
        &self.inverses
    }

    pub fn eval(&self, w: &Word) -> Mobius {
        w.eval_with(&self.generators, &self.inverses)
    }

    /// Image of a single letter.
    pub fn letter(&self, l: crate::words::Letter) -> &Mobius {
        let g = crate::words::generator_of(l);
        if crate::words::is_inverse(l) {
            &self.inverses[g]
        } else {
            &self.generators[g]
        }
    }

    pub fn orbit(&self, w: &Word) -> H3Point {
        self.eval(w).orbit_origin()
    }

    /// Which designated parabolic words actually map to parabolics.
    pub fn parabolic_flags(&self) -> Vec<bool> {
        self.parabolic().iter().map(|p| self.eval(p).classify(crate::moebius::EPS_PARABOLIC).is_parabolic()).collect()
    }

    /// Largest projective distance between corresponding generators.
    pub fn generator_distance(&self, other: &Representation) -> f64 {
        self.generators.iter().zip(&other.generators).map(|(a, b)| a.projective_distance(b)).fold(0.0, f64::max)
    }
}

/// Builds a Schottky group from disk pairs and the pairing maps, verifying
/// the ping-pong configuration.
pub fn schottky(pairs: &[(Disk, Disk)], maps: &[Mobius]) -> Result<Representation> {
    if pairs.len() != maps.len() || pairs.is_empty() {
        return Err(Error::Degenerate("need one map per disk pair".into()));
    }
    let disks: Vec<Disk> = pairs.iter().flat_map(|(d, e)| [*d, *e]).collect();
    let mut min_gap = f64::INFINITY;
    for i in 0..disks.len() {
        if !(disks[i].radius > 0.0) {
            return Err(Error::Degenerate(format!("disk {i} has non-positive radius")));
        }
        for j in i + 1..disks.len() {
            let gap = (disks[i].center - disks[j].center).norm() - disks[i].radius - disks[j].radius;
            if gap <= 0.0 {
                return Err(Error::DisksOverlap(i, j));
            }
            min_gap = min_gap.min(gap);
        }
    }
    let mut max_err: f64 = 0.0;
    for (g, ((from, to), m)) in pairs.iter().zip(maps).enumerate() {
        let scale = to.radius.max(1.0);
        for k in 0..PING_PONG_SAMPLES {
            let z = from.boundary_point(k, PING_PONG_SAMPLES);
            let w = m.act_boundary(&BoundaryPoint::Finite(z));
            let err = match w.as_finite() {
                Some(w) => ((w - to.center).norm() - to.radius).abs(),
                None => f64::INFINITY,
            };
            if err > PING_PONG_SLACK * scale {
                return Err(Error::MappingCondition { generator: g, witness: BoundaryPoint::Finite(z) });
            }
            max_err = max_err.max(err);
        }
        // The boundary circle maps onto the partner circle; the exterior
        // goes inside exactly when ∞ does.
        let inf = m.act_boundary(&BoundaryPoint::Infinity);
        if !inf.as_finite().is_some_and(|w| to.contains(w, -PING_PONG_SLACK)) {
            return Err(Error::MappingCondition { generator: g, witness: BoundaryPoint::Infinity });
        }
    }
    let cert = PingPongCertificate { pairs: pairs.to_vec(), min_gap, max_boundary_error: max_err };
    Representation::new("schottky", maps.to_vec(), Vec::new(), Evidence::PingPong(cert))
}

/// Rank-`k` Schottky group with unit-free disks of radius `radius` centred
/// at `±center·e^{iπj/k}`, paired by `circle_pairing`.
pub fn symmetric_schottky(rank: usize, center: f64, radius: f64) -> Result<Representation> {
    let mut pairs = Vec::with_capacity(rank);
    let mut maps = Vec::with_capacity(rank);
    for j in 0..rank {
        let dir = C64::from_polar(center, std::f64::consts::PI * j as f64 / rank as f64);
        let (from, to) = (Disk::new(-dir, radius), Disk::new(dir, radius));
        maps.push(circle_pairing(&from, &to)?);
        pairs.push((from, to));
    }
    Ok(schottky(&pairs, &maps)?.with_param("center", center).with_param("radius", radius))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootChoice {
    #[default]
    Smaller,
    Larger,
}

/// The once-punctured-torus group with `tr A = x`, `tr B = y` and parabolic
/// commutator.
pub fn punctured_torus(x: C64, y: C64, root: RootChoice) -> Result<Representation> {
    // x² + y² + z² = xyz, solved for z.
    let disc = (x * y * x * y - 4.0 * (x * x + y * y)).sqrt();
    let (z1, z2) = ((x * y + disc) / 2.0, (x * y - disc) / 2.0);
    let (small, large) = if z1.norm() <= z2.norm() { (z1, z2) } else { (z2, z1) };
    let z = match root {
        RootChoice::Smaller => small,
        RootChoice::Larger => large,
    };
    // ζ² + zζ + 1 = 0 gives tr AB = −(ζ + 1/ζ) = z.
    let zeta = (-z + (z * z - 4.0).sqrt()) / 2.0;
    if zeta.norm() < 1e-300 {
        return Err(Error::Degenerate("degenerate trace triple".into()));
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let am = [[x, one], [-one, zero]];
    let bm = [[zero, zeta], [-one / zeta, y]];
    let mul = |p: [[C64; 2]; 2], q: [[C64; 2]; 2]| {
        [
            [p[0][0] * q[0][0] + p[0][1] * q[1][0], p[0][0] * q[0][1] + p[0][1] * q[1][1]],
            [p[1][0] * q[0][0] + p[1][1] * q[1][0], p[1][0] * q[0][1] + p[1][1] * q[1][1]],
        ]
    };
    let inv = |p: [[C64; 2]; 2]| [[p[1][1], -p[0][1]], [-p[1][0], p[0][0]]];
    let tr = |p: [[C64; 2]; 2]| p[0][0] + p[1][1];
    let comm = mul(mul(am, bm), mul(inv(am), inv(bm)));
    let scale = 1.0 + x.norm() * y.norm() * z.norm();
    let checks = [
        ("tr AB", (tr(mul(am, bm)) - z).norm()),
        ("Markov", (x * x + y * y + z * z - x * y * z).norm()),
        ("tr[A,B]", (tr(comm) + 2.0).norm()),
    ];
    for (name, residual) in checks {
        if residual > 1e-9 * scale {
            return Err(Error::TraceCheck(format!("{name} residual {residual:e}")));
        }
    }
    let a = Mobius::new(am[0][0], am[0][1], am[1][0], am[1][1])?;
    let b = Mobius::new(bm[0][0], bm[0][1], bm[1][0], bm[1][1])?;
    let mut rep = Representation::from_generators("punctured_torus", vec![a, b], vec!["abAB".parse()?])?;
    rep.family = "punctured_torus".into();
    Ok(rep
        .with_param("x_re", x.re)
        .with_param("x_im", x.im)
        .with_param("y_re", y.re)
        .with_param("y_im", y.im)
        .with_param("z_re", z.re)
        .with_param("z_im", z.im))
}

/// The Fuchsian punctured-torus group with all three traces equal to 3.
pub fn fuchsian_333() -> Representation {
    let mut rep = punctured_torus(C64::new(3.0, 0.0), C64::new(3.0, 0.0), RootChoice::Smaller)
        .expect("the (3,3,3) triple lies on the Markov variety");
    rep.family = "fuchsian_333".into();
    rep
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceMode {
    StrongClaimed,
    AlgebraicOnlyClaimed,
}

/// Interpolation parameter `s_n ∈ [0, 1]` along a path from base (`s = 0`)
/// to target (`s = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `s_n = 1 − n^{−p}`.
    InversePower { p: f64 },
    /// Every member equals the target.
    Constant,
}

impl Schedule {
    pub fn param(&self, n: usize) -> Result<f64> {
        match *self {
            Schedule::InversePower { p } => {
                if !(p > 0.0) {
                    return Err(Error::Schedule(format!("exponent must be positive, got {p}")));
                }
                Ok(1.0 - (n as f64).powf(-p))
            }
            Schedule::Constant => Ok(1.0),
        }
    }
}

/// `ρ_1, …, ρ_N` together with the limit `ρ_∞`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepSequence {
    pub name: String,
    pub members: Vec<Representation>,
    pub limit: Representation,
    pub mode: ConvergenceMode,
    /// Path parameter of each member, when the sequence is interpolated.
    pub params: Vec<f64>,
    /// Designated word per member (the power `p^{m_n}` for the cyclic family).
    pub designated: Vec<Option<Word>>,
}

impl RepSequence {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member `n`, counted from 1.
    pub fn member(&self, n: usize) -> &Representation {
        &self.members[n - 1]
    }

    pub fn rank(&self) -> usize {
        self.limit.rank()
    }

    /// Largest generator distance to the limit, per member.
    pub fn algebraic_gaps(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.generator_distance(&self.limit)).collect()
    }

    /// The constant sequence at `rep`.
    pub fn constant(rep: &Representation, n_max: usize) -> Self {
        RepSequence {
            name: format!("constant-{}", rep.family),
            members: vec![rep.clone(); n_max],
            limit: rep.clone(),
            mode: ConvergenceMode::StrongClaimed,
            params: vec![1.0; n_max],
            designated: vec![None; n_max],
        }
    }
}

/// Sequence along a one-parameter family `build(s)`, `ρ_∞ = build(1)`.
/// Members are built in parallel; the first failing index is reported.
pub fn strong_sequence<F>(name: &str, n_max: usize, schedule: Schedule, build: F) -> Result<RepSequence>
where
    F: Fn(f64) -> Result<Representation> + Sync,
{
    use rayon::prelude::*;
    let params = (1..=n_max).map(|n| schedule.param(n)).collect::<Result<Vec<f64>>>()?;
    let built: Vec<Result<Representation>> = params.par_iter().map(|&s| build(s)).collect();
    let mut members = Vec::with_capacity(n_max);
    for (i, r) in built.into_iter().enumerate() {
        match r {
            Ok(rep) if rep.evidence.passes() => members.push(rep),
            Ok(_) => return Err(Error::SequenceMember { index: i + 1, reason: "discreteness evidence fails".into() }),
            Err(e) => return Err(Error::SequenceMember { index: i + 1, reason: e.to_string() }),
        }
    }
    let limit = build(1.0).map_err(|e| Error::SequenceMember { index: 0, reason: e.to_string() })?;
    Ok(RepSequence {
        name: name.to_string(),
        members,
        limit,
        mode: ConvergenceMode::StrongClaimed,
        params,
        designated: vec![None; n_max],
    })
}

/// Symmetric rank-2 Schottky groups whose disk centres move from `from` to
/// `to` along the schedule.
pub fn schottky_interpolation(
    from: f64,
    to: f64,
    radius: f64,
    n_max: usize,
    schedule: Schedule,
) -> Result<RepSequence> {
    strong_sequence("schottky-interpolation", n_max, schedule, |s| {
        symmetric_schottky(2, from + s * (to - from), radius)
    })
}

/// Parameters of the cyclic loxodromic family: `m_n = round(n^exponent)`,
/// fixed points `±1/m_n`, rotation `2π/m_n`, translation length
/// `σ / m_n²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclicParams {
    pub exponent: f64,
    pub sigma: f64,
}

impl Default for CyclicParams {
    fn default() -> Self {
        CyclicParams { exponent: 2.0, sigma: 1.0 }
    }
}

impl CyclicParams {
    fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0) || !self.exponent.is_finite() {
            return Err(Error::Schedule("fixed points must collide: exponent must be positive".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Schedule("power limit needs a positive finite sigma".into()));
        }
        Ok(())
    }

    pub fn power(&self, n: usize) -> u64 {
        ((n as f64).powf(self.exponent).round() as u64).max(1)
    }
}

/// `A_n` with fixed points `±ε_n`, multiplier `exp(ℓ_n + iθ_n)`, and the
/// designated power `m_n`. `A_n → P = [[1, 0], [−iπ, 1]]` while
/// `A_n^{m_n} → Q = [[1, 0], [−σ/2, 1]]`.
pub fn cyclic_divergent_family(n: usize, params: &CyclicParams) -> Result<(Mobius, u64)> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Schedule("index starts at 1".into()));
    }
    let m = params.power(n);
    let mf = m as f64;
    let eps = 1.0 / mf;
    let theta = std::f64::consts::TAU / mf;
    let ell = params.sigma * eps / mf;
    let h = C64::new(ell, theta) / 2.0;
    let (ch, sh) = (h.cosh(), h.sinh());
    let a = Mobius::new(ch, -sh * eps, -sh / eps, ch)?;
    Ok((a, m))
}

/// The limits `(P, Q)` of `A_n` and `A_n^{m_n}`.
pub fn cyclic_limits(params: &CyclicParams) -> (Mobius, Mobius) {
    let p =
        Mobius::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -std::f64::consts::PI), C64::new(1.0, 0.0))
            .expect("unit determinant");
    let q = Mobius::real(1.0, 0.0, -params.sigma / 2.0, 1.0).expect("unit determinant");
    (p, q)
}

/// The cyclic family as a rank-one sequence with limit `P`; member `n`
/// designates the word `a^{m_n}`.
pub fn cyclic_sequence(n_max: usize, params: &CyclicParams) -> Result<RepSequence> {
    let mut members = Vec::with_capacity(n_max);
    let mut designated = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let (a, m) = cyclic_divergent_family(n, params)
            .map_err(|e| Error::SequenceMember { index: n, reason: e.to_string() })?;
        let rep = Representation::new("cyclic", vec![a], vec![Word::generator(0)], Evidence::Elementary)?
            .with_param("n", n as f64)
            .with_param("m", m as f64);
        members.push(rep);
        designated.push(Some(Word::generator(0).pow(m as i64)));
    }
    let (p, _) = cyclic_limits(params);
    let limit = Representation::new("cyclic", vec![p], vec![Word::generator(0)], Evidence::Elementary)?
        .with_param("exponent", params.exponent)
        .with_param("sigma", params.sigma);
    Ok(RepSequence {
        name: "cyclic".into(),
        members,
        limit,
        mode: ConvergenceMode::AlgebraicOnlyClaimed,
        params: (1..=n_max).map(|n| n as f64).collect(),
        designated,
    })
}
