//! Run configuration.
//!
//! A TOML file with a few top-level keys and one table per concern. Every
//! constrained value is a newtype validated during deserialization, so bad
//! values are reported with the line and column of the offending key.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hypharm::estimates::{natural_weights, EstimateGrid, SmoothingConfig};
use hypharm::evolution::{Multiplier, TimeGrid};
use hypharm::geometry::PolarGrid;
use hypharm::transforms::{HorocycleGrid, SpectralGrid};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

pub const MIN_COUNT: usize = 8;
pub const MAX_R: f64 = 12.0;

/// A grid count, at least [`MIN_COUNT`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Count(pub usize);

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = usize::deserialize(d)?;
        if n < MIN_COUNT {
            return Err(D::Error::custom(format!(
                "counts must be at least {MIN_COUNT} (got {n})"
            )));
        }
        Ok(Count(n))
    }
}

/// Outer geodesic radius of the polar grid, in `(0, 12]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RMax(pub f64);

impl<'de> Deserialize<'de> for RMax {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = f64::deserialize(d)?;
        if !(r > 0.0 && r <= MAX_R) {
            return Err(D::Error::custom(format!(
                "r_max must lie in (0, {MAX_R}] (got {r})"
            )));
        }
        Ok(RMax(r))
    }
}

/// A finite positive real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Positive(pub f64);

impl<'de> Deserialize<'de> for Positive {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(D::Error::custom(format!(
                "expected a finite positive number (got {x})"
            )));
        }
        Ok(Positive(x))
    }
}

/// The weight exponent of the smoothing estimates, strictly above 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Delta(pub f64);

impl Delta {
    pub fn new(delta: f64) -> Result<Self, String> {
        if delta > 0.5 && delta.is_finite() {
            Ok(Delta(delta))
        } else {
            Err(format!("δ must exceed 1/2 (got {delta})"))
        }
    }
}

impl Default for Delta {
    fn default() -> Self {
        Delta(0.6)
    }
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Delta::new(f64::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// A multiplier spec that parses: `schrodinger`, `poly:c0,c1,..` or
/// `homogeneous:m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MultiplierSpec(pub String);

impl MultiplierSpec {
    pub fn parse(&self) -> Multiplier {
        Multiplier::parse(&self.0).expect("validated at load")
    }
}

impl<'de> Deserialize<'de> for MultiplierSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Multiplier::parse(&s).map_err(D::Error::custom)?;
        Ok(MultiplierSpec(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Ctable,
    Transform,
    Propagate,
    Smoothing,
    Gain,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::Ctable => "ctable",
            Experiment::Transform => "transform",
            Experiment::Propagate => "propagate",
            Experiment::Smoothing => "smoothing",
            Experiment::Gain => "gain",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Gaussian,
    Modulated,
    Annular,
    Offcenter,
    /// Gaussians with seeded random centres and widths.
    Random,
}

impl FamilyName {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyName::Gaussian => "gaussian",
            FamilyName::Modulated => "modulated",
            FamilyName::Annular => "annular",
            FamilyName::Offcenter => "offcenter",
            FamilyName::Random => "random",
        }
    }
}

/// Grid keys; unset keys take per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<RMax>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_r: Option<Count>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<Count>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_lambda: Option<Count>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_max: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_h: Option<Count>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<Count>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// Horizon `T`; times run over `[−T, T]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<Positive>,
    /// Number of time steps over `[−T, T]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t: Option<Count>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSection {
    #[serde(default = "schrodinger")]
    pub a: MultiplierSpec,
    /// Homogeneous weight; `|a'|^{1/2}` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<MultiplierSpec>,
    /// Inhomogeneous weight; `a'` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<MultiplierSpec>,
}

fn schrodinger() -> MultiplierSpec {
    MultiplierSpec("schrodinger".into())
}

impl Default for MultiplierSection {
    fn default() -> Self {
        Self {
            a: schrodinger(),
            p: None,
            q: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSection {
    #[serde(default)]
    pub delta: Delta,
    #[serde(default = "one")]
    pub chi_inner: f64,
    #[serde(default = "two")]
    pub chi_outer: f64,
    #[serde(default = "seven")]
    pub family_size: usize,
    #[serde(default = "shipped")]
    pub families: Vec<FamilyName>,
    /// Gain orders.
    #[serde(default = "gain_orders")]
    pub k: Vec<u32>,
    /// Skip the refinement-stability pass.
    #[serde(default)]
    pub skip_refinement: bool,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn seven() -> usize {
    7
}
fn shipped() -> Vec<FamilyName> {
    vec![
        FamilyName::Gaussian,
        FamilyName::Modulated,
        FamilyName::Annular,
        FamilyName::Offcenter,
    ]
}
fn gain_orders() -> Vec<u32> {
    vec![1, 2]
}

impl Default for SmoothingSection {
    fn default() -> Self {
        Self {
            delta: Delta::default(),
            chi_inner: 1.0,
            chi_outer: 2.0,
            family_size: 7,
            families: shipped(),
            k: gain_orders(),
            skip_refinement: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSection {
    /// `gaussian_bump`, `zero`, `radial`, or the stem of a `.csv`/`.json`
    /// table pair holding a function on the disc.
    #[serde(default = "bump")]
    pub input: String,
}

fn bump() -> String {
    "gaussian_bump".into()
}

impl Default for TransformSection {
    fn default() -> Self {
        Self { input: bump() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Double every grid count and the time horizon.
    #[serde(default)]
    pub refine: bool,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub multiplier: MultiplierSection,
    #[serde(default)]
    pub smoothing: SmoothingSection,
    #[serde(default)]
    pub transform: TransformSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Cross-field checks that a single key cannot express.
    pub fn check(&self) -> anyhow::Result<()> {
        let s = &self.smoothing;
        if !(s.chi_inner >= 0.0 && s.chi_inner < s.chi_outer) {
            anyhow::bail!(
                "smoothing: need 0 ≤ chi_inner < chi_outer (got {}, {})",
                s.chi_inner,
                s.chi_outer
            );
        }
        if s.family_size < 2 {
            anyhow::bail!("smoothing: family_size must be at least 2");
        }
        if s.families.is_empty() {
            anyhow::bail!("smoothing: no families selected");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn a(&self) -> Multiplier {
        self.multiplier.a.parse()
    }

    /// `(p, q)`, falling back to `(|a'|^{1/2}, a')`.
    pub fn weights(&self) -> anyhow::Result<(Multiplier, Multiplier)> {
        let a = self.a();
        let (p, q) = match (&self.multiplier.p, &self.multiplier.q) {
            (Some(p), Some(q)) => return Ok((p.parse(), q.parse())),
            _ => natural_weights(&a)?,
        };
        Ok((
            self.multiplier.p.as_ref().map_or(p, |m| m.parse()),
            self.multiplier.q.as_ref().map_or(q, |m| m.parse()),
        ))
    }

    fn factor(&self) -> usize {
        if self.refine {
            2
        } else {
            1
        }
    }

    fn count(&self, v: Option<Count>, default: usize) -> usize {
        self.factor() * v.map_or(default, |c| c.0)
    }

    /// Polar, spectral and horocycle grids for `ctable` and `transform`.
    pub fn transform_grids(&self) -> anyhow::Result<TransformGrids> {
        let g = &self.grid;
        let r_max = g.r_max.map_or(3.2, |r| r.0);
        let n_b = self.count(g.n_b, 128);
        Ok(TransformGrids {
            polar: PolarGrid::new(r_max, self.count(g.n_r, 256), self.count(g.n_theta, 128))?,
            spectral: SpectralGrid::new(
                g.lambda_max.map_or(16.0, |l| l.0),
                self.count(g.n_lambda, 256),
                n_b,
            )?,
            horocycle: HorocycleGrid::new(
                g.h_max.map_or(8.0, |h| h.0),
                self.count(g.n_h, 256),
                n_b,
            )?,
        })
    }

    /// λ range and sample count for the c-function table.
    pub fn ctable_lambda(&self) -> (f64, usize) {
        (
            self.grid.lambda_max.map_or(20.0, |l| l.0),
            self.count(self.grid.n_lambda, 256),
        )
    }

    /// The estimate grid. `n_H` and `n_λ` follow from `(Λ_max, H_max, T)`
    /// on evolution grids, so `n_lambda` and `n_h` are not consulted.
    pub fn estimate_grid(&self) -> EstimateGrid {
        let g = &self.grid;
        let d = EstimateGrid::default();
        let t_max = self.t_max();
        let n_t = self.time.n_t.map_or(0, |n| n.0);
        EstimateGrid {
            r_max: g.r_max.map_or(d.r_max, |r| r.0),
            n_r: self.count(g.n_r, d.n_r),
            n_theta: self.count(g.n_theta, d.n_theta),
            lambda_max: g.lambda_max.map_or(d.lambda_max, |l| l.0),
            n_b: self.count(g.n_b, d.n_b),
            h0: g.h_max.map_or(d.h0, |h| h.0),
            dt: if n_t > 0 {
                2.0 * t_max / (self.factor() * n_t) as f64
            } else {
                d.dt
            },
            h_refinements: 0,
        }
    }

    pub fn t_max(&self) -> f64 {
        let default = match self.experiment {
            Some(Experiment::Gain) | Some(Experiment::Propagate) => 2.0,
            _ => 1.0,
        };
        self.factor() as f64 * self.time.t_max.map_or(default, |t| t.0)
    }

    pub fn time_grid(&self) -> anyhow::Result<TimeGrid> {
        Ok(self.estimate_grid().time(self.t_max())?)
    }

    pub fn smoothing_config(&self) -> anyhow::Result<SmoothingConfig> {
        let s = &self.smoothing;
        let cfg = SmoothingConfig {
            delta: s.delta.0,
            chi_inner: s.chi_inner,
            chi_outer: s.chi_outer,
            time_horizon: self.t_max(),
            family_size: s.family_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct TransformGrids {
    pub polar: PolarGrid,
    pub spectral: SpectralGrid,
    pub horocycle: HorocycleGrid,
}

impl TransformGrids {
    pub fn refined(&self) -> Self {
        Self {
            polar: self.polar.refined(),
            spectral: self.spectral.refined(),
            horocycle: self.horocycle.refined(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_file() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.smoothing.delta.0, 0.6);
        assert_eq!(cfg.a(), Multiplier::Schrodinger);
        let g = cfg.transform_grids().unwrap();
        assert_eq!((g.polar.n_r(), g.polar.n_theta()), (256, 128));
        assert_eq!(
            (g.spectral.n_lambda, g.horocycle.n_h, g.horocycle.n_b),
            (256, 256, 128)
        );
    }

    #[test]
    fn small_delta_is_rejected_with_position() {
        let err = RunConfig::from_toml("[smoothing]\ndelta = 0.4\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("δ must exceed 1/2"), "{err}");
        assert!(err.contains("line 2"), "{err}");
        assert!(RunConfig::from_toml("[smoothing]\ndelta = 0.5\n").is_err());
    }

    #[test]
    fn counts_radius_and_keys_are_validated() {
        assert!(RunConfig::from_toml("[grid]\nn_r = 4\n").is_err());
        assert!(RunConfig::from_toml("[grid]\nr_max = 13.0\n").is_err());
        assert!(RunConfig::from_toml("[grid]\nnr = 64\n").is_err());
        assert!(RunConfig::from_toml("[multiplier]\na = \"sin\"\n").is_err());
        assert!(RunConfig::from_toml("[smoothing]\nchi_inner = 3.0\n").is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = RunConfig::from_toml("seed = 1").unwrap();
        let b = RunConfig::from_toml("seed = 2").unwrap();
        let c = RunConfig::from_toml("seed = 1\n[grid]\nn_r = 64").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash(), RunConfig::from_toml("seed = 1").unwrap().hash());
    }

    #[test]
    fn refine_doubles_grids_and_horizon() {
        let base = RunConfig::from_toml("").unwrap();
        let mut fine = base.clone();
        fine.refine = true;
        let (g0, g1) = (base.estimate_grid(), fine.estimate_grid());
        assert_eq!(2 * g0.n_r, g1.n_r);
        assert_eq!(2 * g0.n_b, g1.n_b);
        assert_eq!(2.0 * base.t_max(), fine.t_max());
        assert_eq!(
            base.time_grid().unwrap().len() * 2 - 1,
            fine.time_grid().unwrap().len()
        );
    }

    #[test]
    fn natural_weights_fill_gaps() {
        let cfg = RunConfig::from_toml("[multiplier]\nq = \"homogeneous:1\"\n").unwrap();
        let (p, q) = cfg.weights().unwrap();
        assert!((p.eval(2.0) - 2.0).abs() < 1e-12);
        assert_eq!(q, Multiplier::Homogeneous(1.0));
    }
}
