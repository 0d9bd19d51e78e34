//! Running experiments and writing their artifacts.
//!
//! Artifacts are collected in memory and written by one owner at the end of
//! a run, named `<spec name>-<artifact>.<ext>`. Every artifact carries the
//! spec hash and tool version: `#` lines in CSV, top-level fields in JSON,
//! header comments in PPM and text chunks in PNG.

use std::io::Write;
use std::path::{Path, PathBuf};

use ctlab::ctmap::{
    convergence_report, ep_diagnostic, fixed_point_grid, floyd_fit, parabolic_profile, uep_table, uepp_table,
    DiagnosticsTable, FloydLower, SegmentSampler, UepOptions, TOL_CT,
};
use ctlab::families::{RepSequence, Representation};
use ctlab::limitset::{
    hausdorff_chordal, render, sample_fixed_points, sample_orbit, FixedPointOptions, Image, ImageSpec, LimitSample,
    SampleMode, DEDUP_TOL,
};
use ctlab::suites::{run_suite, Suite, SuiteReport};
use ctlab::words::{BoundaryWordPath, Word};
use ctlab::BoundaryPoint;
use rayon::prelude::*;
use serde::Serialize;

use crate::spec::{ExperimentKind, ExperimentSpec, Family, GridSource};
use crate::{CliError, TOOL_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Ppm,
    Png,
}

/// Formats written when none are requested.
pub const DEFAULT_FORMATS: &[Format] = &[Format::Csv, Format::Json, Format::Ppm];

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Empty means `DEFAULT_FORMATS`.
    pub formats: Vec<Format>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        RunOptions { out_dir: out_dir.into(), formats: Vec::new() }
    }
}

/// Provenance written into every artifact.
#[derive(Clone, Debug, Serialize)]
struct Stamp {
    tool_version: String,
    spec_hash: String,
    seed: u64,
    family: String,
}

impl Stamp {
    fn lines(&self) -> Vec<String> {
        vec![
            format!("family: {}", self.family),
            format!("tool_version: {}", self.tool_version),
            format!("spec_hash: {}", self.spec_hash),
            format!("seed: {}", self.seed),
        ]
    }

    fn table(&self, mut t: DiagnosticsTable) -> DiagnosticsTable {
        t.metadata.tool_version = self.tool_version.clone();
        t.metadata.spec_hash = Some(self.spec_hash.clone());
        t.metadata.seed = Some(self.seed);
        t
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    experiment: &'a str,
    report: T,
}

struct Artifacts {
    dir: PathBuf,
    prefix: String,
    formats: Vec<Format>,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    fn new(dir: &Path, prefix: &str, formats: &[Format]) -> Self {
        let formats = if formats.is_empty() { DEFAULT_FORMATS.to_vec() } else { formats.to_vec() };
        Artifacts { dir: dir.to_path_buf(), prefix: prefix.to_string(), formats, files: Vec::new() }
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn add(&mut self, name: &str, ext: &str, bytes: Vec<u8>) {
        let path = self.dir.join(format!("{}-{name}.{ext}", self.prefix));
        // Experiments sharing an artifact (converge and uep) write it once.
        self.files.retain(|(p, _)| *p != path);
        self.files.push((path, bytes));
    }

    fn table(&mut self, name: &str, t: &DiagnosticsTable) {
        if self.wants(Format::Csv) {
            self.add(name, "csv", t.to_csv().into_bytes());
        }
        if self.wants(Format::Json) {
            self.add(name, "json", t.to_json().into_bytes());
        }
    }

    fn json<T: Serialize>(&mut self, name: &str, stamp: &Stamp, experiment: &str, report: T) {
        if self.wants(Format::Json) {
            let env = Envelope { stamp, experiment, report };
            let mut bytes = serde_json::to_vec_pretty(&env).expect("reports serialize");
            bytes.push(b'\n');
            self.add(name, "json", bytes);
        }
    }

    fn write(self) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&self.dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (path, bytes) in self.files {
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

struct Run<'a> {
    spec: &'a ExperimentSpec,
    family: Family,
    stamp: Stamp,
    art: Artifacts,
    log: &'a mut dyn Write,
    failed_checks: Vec<String>,
}

/// Runs `kinds` (the list in the spec file when `None`) and writes the artifacts.
/// Returns the written paths. A failing `geom-verify` still writes its
/// report before the error is returned.
pub fn run_experiments(
    spec: &ExperimentSpec,
    kinds: Option<&[ExperimentKind]>,
    opts: &RunOptions,
    log: &mut dyn Write,
) -> Result<Vec<PathBuf>, CliError> {
    let family = spec.family.build().map_err(CliError::Family)?;
    let stamp = Stamp {
        tool_version: TOOL_VERSION.to_string(),
        spec_hash: spec.hash(),
        seed: spec.seed,
        family: family.name().to_string(),
    };
    writeln!(log, "spec {} ({})", spec.name, stamp.spec_hash)?;
    let mut run = Run {
        spec,
        family,
        stamp,
        art: Artifacts::new(&opts.out_dir, &spec.name, &opts.formats),
        log,
        failed_checks: Vec::new(),
    };
    for kind in kinds.unwrap_or(&spec.experiments) {
        match kind {
            ExperimentKind::Render => run.render()?,
            ExperimentKind::HausdorffCurve => run.hausdorff()?,
            ExperimentKind::CtConverge => run.converge()?,
            ExperimentKind::Uep => run.uep()?,
            ExperimentKind::Uepp => run.uepp()?,
            ExperimentKind::Ep => run.ep()?,
            ExperimentKind::Floyd => run.floyd()?,
            ExperimentKind::GeomVerify => run.verify()?,
        }
    }
    let failed = std::mem::take(&mut run.failed_checks);
    let written = run.art.write()?;
    for p in &written {
        writeln!(run.log, "wrote {}", p.display())?;
    }
    if failed.is_empty() {
        Ok(written)
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn sequence(family: &Family, kind: ExperimentKind) -> Result<&RepSequence, CliError> {
    match family {
        Family::Sequence(s) => Ok(s),
        Family::Single(_) => Err(CliError::Spec(format!("experiment {kind} needs a sequence family"))),
    }
}

/// The group itself, or a sequence member (1-based) or the limit.
fn group(family: &Family, member: Option<usize>) -> Result<&Representation, CliError> {
    match (family, member) {
        (Family::Single(r), None) => Ok(r),
        (Family::Single(_), Some(_)) => Err(CliError::Spec("member is set but the family is a single group".into())),
        (Family::Sequence(s), None) => Ok(&s.limit),
        (Family::Sequence(s), Some(n)) if (1..=s.len()).contains(&n) => Ok(s.member(n)),
        (Family::Sequence(s), Some(n)) => Err(CliError::Spec(format!("member {n} out of range 1..={}", s.len()))),
    }
}

impl Run<'_> {
    fn render(&mut self) -> Result<(), CliError> {
        let r = &self.spec.render;
        let rep = group(&self.family, r.member)?;
        let sample = match r.mode {
            SampleMode::FixedPoint => {
                let opts = FixedPointOptions { include_repelling: r.include_repelling, ..FixedPointOptions::default() };
                sample_fixed_points(rep, r.depth, &opts)?
            }
            SampleMode::Orbit => sample_orbit(rep, r.depth, DEDUP_TOL)?,
        };
        if sample.is_empty() {
            return Err(CliError::Empty(format!("no limit points for {} at depth {}", rep.family, r.depth)));
        }
        let spec =
            ImageSpec { width: r.width, height: r.height, projection: r.projection, point_radius: r.point_radius };
        let img = render(&sample, &spec)?;
        let lit = img.rgb.chunks(3).filter(|p| *p != ctlab::limitset::BACKGROUND).count();
        let components = img.lit_components();
        writeln!(self.log, "render: {} points, {lit} lit pixels, {components} components", sample.len())?;
        if self.art.wants(Format::Ppm) {
            self.art.add("render", "ppm", img.to_ppm(&self.stamp.lines()));
        }
        if self.art.wants(Format::Png) {
            let bytes = encode_png(&img, &self.stamp)?;
            self.art.add("render", "png", bytes);
        }
        if self.art.wants(Format::Csv) {
            self.art.add("points", "csv", points_csv(&sample, &self.stamp));
        }
        #[derive(Serialize)]
        struct Summary {
            points: usize,
            depth: usize,
            lit_pixels: usize,
            components: usize,
            elliptic_skipped: Vec<String>,
        }
        let summary = Summary {
            points: sample.len(),
            depth: sample.depth,
            lit_pixels: lit,
            components,
            elliptic_skipped: sample.elliptic_skipped.iter().map(Word::to_string).collect(),
        };
        self.art.json("render", &self.stamp, "render", summary);
        Ok(())
    }

    fn hausdorff(&mut self) -> Result<(), CliError> {
        let h = &self.spec.hausdorff;
        let seq = sequence(&self.family, ExperimentKind::HausdorffCurve)?;
        if h.from == 0 || h.from > seq.len() {
            return Err(CliError::Spec(format!("hausdorff.from {} out of range 1..={}", h.from, seq.len())));
        }
        let opts = FixedPointOptions::default();
        let limit = sample_fixed_points(&seq.limit, h.depth, &opts)?;
        let index: Vec<usize> = (h.from..=seq.len()).collect();
        let dists = index
            .par_iter()
            .map(|&n| hausdorff_chordal(&sample_fixed_points(seq.member(n), h.depth, &opts)?, &limit))
            .collect::<ctlab::Result<Vec<f64>>>()?;
        let tail = &dists[dists.len().saturating_sub(8)..];
        let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
        let mut t = DiagnosticsTable::new(&seq.name, "n", index).with_cap("depth", h.depth as u64);
        t.flags.insert("tail_decreasing".into(), decreasing.to_string());
        t.push_column("hausdorff", dists.iter().copied().map(Some).collect());
        writeln!(
            self.log,
            "hausdorff: {:.3e} at n = {}, tail decreasing: {decreasing}",
            dists.last().copied().unwrap_or(f64::NAN),
            seq.len()
        )?;
        let t = self.stamp.table(t);
        self.art.table("hausdorff", &t);
        Ok(())
    }

    fn uep_for(&self, seq: &RepSequence) -> Result<DiagnosticsTable, CliError> {
        let u = &self.spec.uep;
        Ok(self.stamp.table(uep_table(seq, u.n_max, &UepOptions::for_rank(seq.rank(), u.depth_cap))?))
    }

    fn converge(&mut self) -> Result<(), CliError> {
        let c = &self.spec.converge;
        let seq = sequence(&self.family, ExperimentKind::CtConverge)?;
        let src = match c.source {
            GridSource::Limit => &seq.limit,
            GridSource::FirstMember => seq.member(1),
        };
        let grid = fixed_point_grid(src, c.word_depth, c.grid_size, c.path_depth, self.spec.seed)?;
        let mut report = convergence_report(seq, src, &grid, c.path_depth, TOL_CT);
        report.table.push_column("algebraic_gap", seq.algebraic_gaps().into_iter().map(Some).collect());
        let uep = self.uep_for(seq)?;
        let uep_flag = uep.flags.get("uep").cloned().unwrap_or_default();
        report.table.flags.insert("uep".into(), uep_flag.clone());
        report.table = self.stamp.table(report.table);
        writeln!(self.log, "verdict: {}", report.verdict)?;
        writeln!(self.log, "uep: {uep_flag}")?;
        if report.limit_failures > 0 {
            writeln!(self.log, "warning: {} grid points failed to evaluate for the limit", report.limit_failures)?;
        }
        if self.art.wants(Format::Csv) {
            self.art.add("converge", "csv", report.table.to_csv().into_bytes());
        }
        self.art.json("converge", &self.stamp, "ct-converge", &report);
        self.art.table("uep", &uep);
        Ok(())
    }

    fn uep(&mut self) -> Result<(), CliError> {
        let seq = sequence(&self.family, ExperimentKind::Uep)?;
        let t = self.uep_for(seq)?;
        writeln!(self.log, "uep: {}", t.flags.get("uep").map(String::as_str).unwrap_or(""))?;
        self.art.table("uep", &t);
        Ok(())
    }

    fn uepp(&mut self) -> Result<(), CliError> {
        let u = &self.spec.uepp;
        let seq = sequence(&self.family, ExperimentKind::Uepp)?;
        let sampler = SegmentSampler { samples: u.samples, spread: u.spread, seed: self.spec.seed };
        let t = self.stamp.table(uepp_table(seq, u.n_max, &sampler));
        writeln!(self.log, "uepp: {}", t.flags.get("uepp").map(String::as_str).unwrap_or(""))?;
        self.art.table("uepp", &t);
        Ok(())
    }

    fn ep(&mut self) -> Result<(), CliError> {
        let e = &self.spec.ep;
        let seq = sequence(&self.family, ExperimentKind::Ep)?;
        let word: Word = e.word.parse()?;
        let fp = seq.limit.eval(&word).fixed_points()?;
        let path = BoundaryWordPath::powers(&word, e.path_depth, fp.attracting)?;
        let mut report = ep_diagnostic(seq, &path, e.n_max, e.k0)?;
        report.table = report.table.map(|t| self.stamp.table(t));
        writeln!(self.log, "ep: path case {:?}, blocks {:?}", report.case, report.block_lengths)?;
        if let (Some(t), true) = (&report.table, self.art.wants(Format::Csv)) {
            self.art.add("ep", "csv", t.to_csv().into_bytes());
        }
        self.art.json("ep", &self.stamp, "ep", &report);
        Ok(())
    }

    fn floyd(&mut self) -> Result<(), CliError> {
        let f = &self.spec.floyd;
        let rep = group(&self.family, f.member)?;
        let fit = floyd_fit(rep, f.depth)?;
        let (lo, hi) = fit.ratio_window();
        let index: Vec<usize> = fit.per_length.iter().map(|s| s.len).collect();
        let mut t = DiagnosticsTable::new(&rep.family, "len", index).with_cap("depth", f.depth as u64);
        t.flags.insert("a".into(), fit.a.to_string());
        let lower = match fit.lower {
            FloydLower::Linear { b } => format!("linear b={b}"),
            FloydLower::Logarithmic { k } => format!("logarithmic k={k}"),
        };
        t.flags.insert("lower".into(), lower.clone());
        t.flags.insert("ratio_window".into(), format!("[{lo}, {hi}]"));
        let col = |g: &dyn Fn(&ctlab::ctmap::LengthStats) -> f64| fit.per_length.iter().map(|s| Some(g(s))).collect();
        t.push_column("count", col(&|s| s.count as f64));
        t.push_column("min_dist", col(&|s| s.min_dist));
        t.push_column("max_dist", col(&|s| s.max_dist));
        t.push_column("min_ratio", col(&|s| s.min_dist / s.len as f64));
        t.push_column("max_ratio", col(&|s| s.max_dist / s.len as f64));
        writeln!(self.log, "floyd: ratio window [{lo:.4}, {hi:.4}], {lower}")?;
        let t = self.stamp.table(t);
        self.art.table("floyd", &t);

        if !rep.parabolic().is_empty() && f.cusp_powers > 0 {
            let powers: Vec<i64> = (1..=f.cusp_powers as i64).collect();
            let mut cusp = DiagnosticsTable::new(&rep.family, "j", (1..=f.cusp_powers).collect());
            for p in rep.parabolic() {
                let profile = parabolic_profile(rep, p, &powers);
                let tail: Vec<f64> = profile.iter().filter(|r| r.0 >= 10).map(|r| r.2).collect();
                let spread = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    - tail.iter().copied().fold(f64::INFINITY, f64::min);
                cusp.flags.insert(format!("residual_spread.{p}"), spread.to_string());
                writeln!(self.log, "floyd: cusp {p} residual spread {spread:.4} over j in [10, {}]", f.cusp_powers)?;
                cusp.push_column(&format!("d_{p}"), profile.iter().map(|r| Some(r.1)).collect());
                cusp.push_column(&format!("residual_{p}"), profile.iter().map(|r| Some(r.2)).collect());
            }
            let cusp = self.stamp.table(cusp);
            self.art.table("cusp", &cusp);
        }
        Ok(())
    }

    fn verify(&mut self) -> Result<(), CliError> {
        let v = &self.spec.verify;
        let report = run_suite(v.suite, self.spec.seed, v.trials);
        print_suite(&report, self.log)?;
        self.failed_checks.extend(report.failures().map(|c| c.name.clone()));
        suite_artifacts(&mut self.art, &self.stamp, &report);
        Ok(())
    }
}

/// `ctlab verify`: runs a suite, prints one line per check and a JSON
/// witness line per failure, and writes the report when `out_dir` is set.
pub fn run_verify(
    suite: Suite,
    seed: u64,
    trials: usize,
    out: Option<&RunOptions>,
    log: &mut dyn Write,
) -> Result<SuiteReport, CliError> {
    let report = run_suite(suite, seed, trials);
    print_suite(&report, log)?;
    if let Some(opts) = out {
        #[derive(Serialize)]
        struct Params {
            suite: Suite,
            seed: u64,
            trials: usize,
        }
        let params = serde_json::to_vec(&Params { suite, seed, trials }).expect("params serialize");
        let hash = {
            use sha2::{Digest, Sha256};
            Sha256::digest(&params).iter().map(|b| format!("{b:02x}")).collect()
        };
        let stamp = Stamp { tool_version: TOOL_VERSION.to_string(), spec_hash: hash, seed, family: "none".into() };
        let mut art = Artifacts::new(&opts.out_dir, &format!("verify-{suite}"), &opts.formats);
        suite_artifacts(&mut art, &stamp, &report);
        for p in art.write()? {
            writeln!(log, "wrote {}", p.display())?;
        }
    }
    if report.passed() {
        Ok(report)
    } else {
        let names: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
        Err(CliError::Verification(names.join(", ")))
    }
}

fn print_suite(report: &SuiteReport, log: &mut dyn Write) -> Result<(), CliError> {
    for w in &report.warnings {
        writeln!(log, "warning: {w}")?;
    }
    for c in &report.checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        writeln!(
            log,
            "{status} {}/{}: {} failures in {} trials, statistic {:.4e} (accept [{:.4e}, {:.4e}])",
            c.suite, c.name, c.failures, c.trials, c.statistic, c.accept[0], c.accept[1]
        )?;
        if !c.passed() {
            writeln!(log, "witness {}", serde_json::to_string(c).expect("checks serialize"))?;
        }
    }
    let failed = report.failures().count();
    writeln!(log, "{}: {} checks, {failed} failed", report.suite, report.checks.len())?;
    Ok(())
}

fn suite_artifacts(art: &mut Artifacts, stamp: &Stamp, report: &SuiteReport) {
    if art.wants(Format::Csv) {
        let mut out = comment_lines(stamp);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["suite", "check", "trials", "failures", "statistic", "accept_lo", "accept_hi", "passed"])
            .expect("in-memory csv");
        for c in &report.checks {
            w.write_record([
                c.suite.to_string(),
                c.name.clone(),
                c.trials.to_string(),
                c.failures.to_string(),
                c.statistic.to_string(),
                c.accept[0].to_string(),
                c.accept[1].to_string(),
                c.passed().to_string(),
            ])
            .expect("in-memory csv");
        }
        out.extend(w.into_inner().expect("in-memory csv"));
        art.add("verify", "csv", out);
    }
    art.json("verify", stamp, "geom-verify", report);
}

fn comment_lines(stamp: &Stamp) -> Vec<u8> {
    stamp.lines().iter().flat_map(|l| format!("# {l}\n").into_bytes()).collect()
}

fn points_csv(sample: &LimitSample, stamp: &Stamp) -> Vec<u8> {
    let mut out = comment_lines(stamp);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["re", "im", "isInf", "depth", "word"]).expect("in-memory csv");
    for p in &sample.points {
        let (re, im, inf) = match p.point {
            BoundaryPoint::Finite(z) => (z.re.to_string(), z.im.to_string(), "false"),
            BoundaryPoint::Infinity => (String::new(), String::new(), "true"),
        };
        w.write_record([re, im, inf.to_string(), p.depth().to_string(), p.word.to_string()]).expect("in-memory csv");
    }
    out.extend(w.into_inner().expect("in-memory csv"));
    out
}

fn encode_png(img: &Image, stamp: &Stamp) -> Result<Vec<u8>, CliError> {
    let io = |e: png::EncodingError| CliError::Io(std::io::Error::other(e));
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, img.width as u32, img.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        for line in stamp.lines() {
            let (k, v) = line.split_once(": ").expect("stamp lines are key: value");
            enc.add_text_chunk(k.to_string(), v.to_string()).map_err(io)?;
        }
        let mut w = enc.write_header().map_err(io)?;
        w.write_image_data(&img.rgb).map_err(io)?;
    }
    Ok(buf)
}
