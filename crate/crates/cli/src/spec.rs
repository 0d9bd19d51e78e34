//! Experiment spec files: TOML, unknown keys rejected, every section but
//! `family` optional. See the README for the grammar.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ctlab::families::{
    cyclic_sequence, fuchsian_333, punctured_torus, schottky_interpolation, symmetric_schottky, CyclicParams,
    RepSequence, Representation, RootChoice, Schedule,
};
use ctlab::limitset::{Projection, SampleMode};
use ctlab::suites::Suite;
use ctlab::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Render,
    HausdorffCurve,
    CtConverge,
    Uep,
    Uepp,
    Ep,
    Floyd,
    GeomVerify,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Render => "render",
            ExperimentKind::HausdorffCurve => "hausdorff-curve",
            ExperimentKind::CtConverge => "ct-converge",
            ExperimentKind::Uep => "uep",
            ExperimentKind::Uepp => "uepp",
            ExperimentKind::Ep => "ep",
            ExperimentKind::Floyd => "floyd",
            ExperimentKind::GeomVerify => "geom-verify",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    #[serde(rename = "fuchsian-333")]
    Fuchsian333 {},
    /// Symmetric Schottky group with disks centred at `±center`, `±i·center`, ...
    Schottky {
        #[serde(default = "default_rank")]
        rank: usize,
        center: f64,
        radius: f64,
    },
    /// Traces given as `[re, im]`.
    PuncturedTorus {
        x: [f64; 2],
        y: [f64; 2],
        #[serde(default)]
        root: RootChoice,
    },
    /// Rank-2 Schottky sequence with centres `from + s_n (to − from)`,
    /// `s_n = 1 − n^{−p}`.
    SchottkyInterpolation { from: f64, to: f64, radius: f64, n_max: usize, p: f64 },
    /// `n_max` copies of a single group.
    Constant { n_max: usize, base: Box<FamilySpec> },
    Cyclic {
        n_max: usize,
        #[serde(default = "default_exponent")]
        exponent: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
}

fn default_rank() -> usize {
    2
}

fn default_exponent() -> f64 {
    CyclicParams::default().exponent
}

fn default_sigma() -> f64 {
    CyclicParams::default().sigma
}

/// A built family: one group, or a sequence with its limit.
pub enum Family {
    Single(Representation),
    Sequence(RepSequence),
}

impl Family {
    pub fn name(&self) -> &str {
        match self {
            Family::Single(r) => &r.family,
            Family::Sequence(s) => &s.name,
        }
    }
}

impl FamilySpec {
    pub fn build(&self) -> ctlab::Result<Family> {
        Ok(match self {
            FamilySpec::Fuchsian333 {} => Family::Single(fuchsian_333()),
            FamilySpec::Schottky { rank, center, radius } => {
                Family::Single(symmetric_schottky(*rank, *center, *radius)?)
            }
            FamilySpec::PuncturedTorus { x, y, root } => {
                Family::Single(punctured_torus(C64::new(x[0], x[1]), C64::new(y[0], y[1]), *root)?)
            }
            FamilySpec::SchottkyInterpolation { from, to, radius, n_max, p } => {
                Family::Sequence(schottky_interpolation(*from, *to, *radius, *n_max, Schedule::InversePower { p: *p })?)
            }
            FamilySpec::Constant { n_max, base } => match base.build()? {
                Family::Single(rep) => Family::Sequence(RepSequence::constant(&rep, *n_max)),
                Family::Sequence(_) => {
                    return Err(ctlab::Error::Precondition("a constant sequence needs a single-group base".into()))
                }
            },
            FamilySpec::Cyclic { n_max, exponent, sigma } => {
                Family::Sequence(cyclic_sequence(*n_max, &CyclicParams { exponent: *exponent, sigma: *sigma })?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSpec {
    pub depth: usize,
    pub mode: SampleMode,
    pub include_repelling: bool,
    /// Sequence member to draw (1-based); the limit when absent.
    pub member: Option<usize>,
    pub width: usize,
    pub height: usize,
    pub projection: Projection,
    pub point_radius: usize,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            depth: 10,
            mode: SampleMode::FixedPoint,
            include_repelling: true,
            member: None,
            width: 512,
            height: 512,
            projection: Projection::Sphere,
            point_radius: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HausdorffSpec {
    pub depth: usize,
    /// First member compared with the limit.
    pub from: usize,
}

impl Default for HausdorffSpec {
    fn default() -> Self {
        HausdorffSpec { depth: 10, from: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridSource {
    Limit,
    FirstMember,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSpec {
    pub source: GridSource,
    pub word_depth: usize,
    pub grid_size: usize,
    pub path_depth: usize,
}

impl Default for ConvergeSpec {
    fn default() -> Self {
        ConvergeSpec { source: GridSource::Limit, word_depth: 12, grid_size: 200, path_depth: 48 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UepSpec {
    pub n_max: usize,
    pub depth_cap: usize,
}

impl Default for UepSpec {
    fn default() -> Self {
        UepSpec { n_max: 30, depth_cap: 34 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UeppSpec {
    pub n_max: usize,
    pub samples: usize,
    pub spread: usize,
}

impl Default for UeppSpec {
    fn default() -> Self {
        UeppSpec { n_max: 30, samples: 256, spread: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpSpec {
    /// The path runs through powers of this word.
    pub word: String,
    pub path_depth: usize,
    pub n_max: usize,
    pub k0: usize,
}

impl Default for EpSpec {
    fn default() -> Self {
        EpSpec { word: "ab".into(), path_depth: 40, n_max: 20, k0: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloydSpec {
    pub depth: usize,
    pub member: Option<usize>,
    /// Largest power `j` in the cusp profile.
    pub cusp_powers: usize,
}

impl Default for FloydSpec {
    fn default() -> Self {
        FloydSpec { depth: 10, member: None, cusp_powers: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub suite: Suite,
    pub trials: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { suite: Suite::All, trials: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Used as the prefix of every artifact name.
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub experiments: Vec<ExperimentKind>,
    /// Output directory when `--out` is not given.
    #[serde(default)]
    pub out_dir: Option<String>,
    pub family: FamilySpec,
    #[serde(default)]
    pub render: RenderSpec,
    #[serde(default)]
    pub hausdorff: HausdorffSpec,
    #[serde(default)]
    pub converge: ConvergeSpec,
    #[serde(default)]
    pub uep: UepSpec,
    #[serde(default)]
    pub uepp: UeppSpec,
    #[serde(default)]
    pub ep: EpSpec,
    #[serde(default)]
    pub floyd: FloydSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

impl FromStr for ExperimentSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let spec: ExperimentSpec = toml::from_str(s).map_err(|e| CliError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

impl ExperimentSpec {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
        text.parse().map_err(|e| match e {
            CliError::Spec(m) => CliError::Spec(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let text =
            PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
                CliError::Spec(format!("unknown preset {name:?} (known: {})", preset_names().join(", ")))
            })?;
        text.parse()
    }

    fn validate(&self) -> Result<(), CliError> {
        let ok_name =
            !self.name.is_empty() && self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok_name {
            return Err(CliError::Spec(format!(
                "name {:?} must be non-empty ASCII letters, digits, - or _",
                self.name
            )));
        }
        if self.experiments.is_empty() {
            return Err(CliError::Spec("experiments list is empty".into()));
        }
        if self.render.width == 0 || self.render.height == 0 {
            return Err(CliError::Spec("render width and height must be positive".into()));
        }
        if self.ep.word.parse::<ctlab::words::Word>().is_err() {
            return Err(CliError::Spec(format!("ep.word {:?} is not a word in a, A, b, B, ...", self.ep.word)));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical form: the parsed spec, defaults filled
    /// in, serialized as JSON. Formatting and comments in the file do not
    /// change it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("specs serialize");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fuchsian-333", include_str!("../presets/fuchsian-333.toml")),
    ("schottky-strong", include_str!("../presets/schottky-strong.toml")),
    ("cyclic-remark57", include_str!("../presets/cyclic-remark57.toml")),
    ("constant-seq", include_str!("../presets/constant-seq.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
