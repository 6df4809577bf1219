//! Experiment configuration: one TOML document per invocation.
//!
//! Every table rejects unknown keys. Physics inputs are SI; fields holding a
//! frequency take either a bare number in rad/s or `{ value, unit }` with
//! `unit = "rad/s"` or `"Hz"`.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};

use ebqi_core::couplings::{CavityParams, FreeSpaceGeometry};
use ebqi_core::distributions::{NumberDistribution, DEFAULT_TRUNCATION_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    #[serde(rename = "rad/s")]
    RadPerSecond,
    #[serde(rename = "Hz")]
    Hertz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    RadPerSecond(f64),
    Tagged(TaggedFrequency),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedFrequency {
    pub value: f64,
    pub unit: FrequencyUnit,
}

impl Frequency {
    /// Angular frequency in rad/s.
    pub fn rad_per_s(self) -> f64 {
        match self {
            Frequency::RadPerSecond(w) => w,
            Frequency::Tagged(TaggedFrequency { value, unit: FrequencyUnit::RadPerSecond }) => value,
            Frequency::Tagged(TaggedFrequency { value, unit: FrequencyUnit::Hertz }) => TAU * value,
        }
    }
}

/// A single number, an explicit list, or `count` evenly spaced points
/// from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Values {
    pub fn expand(&self) -> anyhow::Result<Vec<f64>> {
        let v = match self {
            Values::One(x) => vec![*x],
            Values::List(xs) => xs.clone(),
            Values::Range(RangeSpec { start, stop, count }) => match count {
                0 => bail!("range count must be positive"),
                1 => vec![*start],
                _ => (0..*count).map(|k| start + (stop - start) * k as f64 / (*count - 1) as f64).collect(),
            },
        };
        ensure!(!v.is_empty(), "empty value list");
        ensure!(v.iter().all(|x| x.is_finite()), "non-finite value in list");
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeSpaceConfig {
    pub r_perp: f64,
    pub v: f64,
    pub omega_0: Frequency,
    #[serde(default)]
    pub alpha: f64,
}

impl FreeSpaceConfig {
    pub fn geometry(&self) -> FreeSpaceGeometry<f64> {
        FreeSpaceGeometry { r_perp: self.r_perp, v: self.v, omega_0: self.omega_0.rad_per_s(), alpha: self.alpha }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub g: Frequency,
    #[serde(default)]
    pub g_phase: f64,
    pub g_el: Frequency,
    #[serde(default)]
    pub g_el_phase: f64,
    pub delta: Frequency,
    pub gamma: Frequency,
    /// Electron–cavity interaction time, s.
    pub t_int: f64,
    #[serde(default = "zero_frequency")]
    pub gamma_sp: Frequency,
}

fn zero_frequency() -> Frequency {
    Frequency::RadPerSecond(0.0)
}

impl CavityConfig {
    pub fn params(&self) -> CavityParams<f64> {
        CavityParams {
            g_mag: self.g.rad_per_s(),
            g_phase: self.g_phase,
            g_el_mag: self.g_el.rad_per_s(),
            g_el_phase: self.g_el_phase,
            delta: self.delta.rad_per_s(),
            gamma: self.gamma.rad_per_s(),
            t_int: self.t_int,
            gamma_sp: self.gamma_sp.rad_per_s(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub free_space: Option<FreeSpaceConfig>,
    pub cavity: Option<CavityConfig>,
    /// Minimum ratio for every dispersive-regime margin.
    pub threshold: Option<f64>,
    /// Number of passes of the same electron pulse past the qubit.
    pub passes: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Fock,
    Poisson,
    Thermal,
    File,
    Weights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionConfig {
    pub kind: DistributionKind,
    /// Fock level for `fock`.
    pub n: Option<usize>,
    /// Mean count for `poisson` and `thermal`.
    pub mean: Option<f64>,
    pub n_max: Option<usize>,
    /// Largest tail mass allowed beyond `n_max`.
    pub truncation_cap: Option<f64>,
    /// Weight file for `file`, relative to the config file.
    pub path: Option<PathBuf>,
    /// Inline weights for `weights`; normalized on load.
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fock,
    Poisson,
    Thermal,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Fock => "fock",
            Family::Poisson => "poisson",
            Family::Thermal => "thermal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscriminateConfig {
    /// Interaction strengths; falls back to the `[coupling]` result.
    pub phi: Option<Values>,
    /// Sweep a family over `means` instead of using `[distribution]`.
    pub family: Option<Family>,
    pub means: Option<Values>,
    pub n_max: Option<usize>,
    pub truncation_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Exact,
    Limited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverConfig {
    pub grid: GridKind,
    pub phi_max: Option<f64>,
    /// Grid points for `limited`; defaults to `n_max + 1`.
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Binary,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    #[default]
    PostSelect,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `Σ p(n)|n⟩⟨n|`
    #[default]
    Mixed,
    /// `Σ √p(n)|n⟩`
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub target: usize,
    pub schedule: ScheduleKind,
    /// Per-round strength for `uniform`.
    pub phi: Option<f64>,
    /// Number of rounds for `uniform`.
    pub steps: Option<usize>,
    pub stop_at_fidelity: Option<f64>,
    #[serde(default)]
    pub mode: BranchPolicy,
    #[serde(default)]
    pub retry: bool,
    pub max_attempts: Option<usize>,
    #[serde(default)]
    pub initial_state: InitialState,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    /// Monte-Carlo shots per readout point; 0 or absent means noiseless.
    pub shots: Option<u64>,
    pub format: Option<Format>,
    /// Refuse to run outside the dispersive regime.
    pub strict: Option<bool>,
    pub coupling: Option<CouplingConfig>,
    pub distribution: Option<DistributionConfig>,
    pub discriminate: Option<DiscriminateConfig>,
    pub recover: Option<RecoverConfig>,
    pub project: Option<ProjectConfig>,
    /// Directory that relative paths are resolved against; not part of
    /// the schema.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Weight-file layout accepted by `kind = "file"`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightDocument {
    n_max: usize,
    weights: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Loads a TOML config, or the `config` object of a run manifest when
    /// the file ends in `.json`.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            let mut manifest: serde_json::Value = serde_json::from_str(&text)?;
            let config = manifest.get_mut("config").map(serde_json::Value::take).context("manifest has no config")?;
            serde_json::from_value(config)?
        } else {
            Self::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn shots(&self) -> u64 {
        self.shots.unwrap_or(0)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn strict(&self) -> bool {
        self.strict.unwrap_or(false)
    }

    /// Builds the `[distribution]` section.
    pub fn distribution(&self) -> anyhow::Result<NumberDistribution<f64>> {
        let d = self.distribution.as_ref().context("missing [distribution] section")?;
        load_distribution(d, &self.base_dir)
    }
}

fn need<T: Copy>(v: Option<T>, kind: &str, field: &str) -> anyhow::Result<T> {
    v.with_context(|| format!("distribution kind '{kind}' needs '{field}'"))
}

pub fn family_distribution(family: Family, mean: f64, n_max: usize, cap: f64) -> anyhow::Result<NumberDistribution<f64>> {
    Ok(match family {
        Family::Fock => {
            ensure!(mean >= 0.0 && mean.fract() == 0.0, "fock mean {mean} is not a non-negative integer");
            NumberDistribution::fock(mean as usize, n_max)?
        }
        Family::Poisson => NumberDistribution::poisson_with_cap(mean, n_max, cap)?,
        Family::Thermal => NumberDistribution::thermal_with_cap(mean, n_max, cap)?,
    })
}

fn load_distribution(d: &DistributionConfig, base: &Path) -> anyhow::Result<NumberDistribution<f64>> {
    let cap = d.truncation_cap.unwrap_or(DEFAULT_TRUNCATION_CAP);
    let weights = match d.kind {
        DistributionKind::Fock => {
            let n = need(d.n, "fock", "n")?;
            return Ok(NumberDistribution::fock(n, d.n_max.unwrap_or(n))?);
        }
        DistributionKind::Poisson => {
            let mean = need(d.mean, "poisson", "mean")?;
            return family_distribution(Family::Poisson, mean, need(d.n_max, "poisson", "n_max")?, cap);
        }
        DistributionKind::Thermal => {
            let mean = need(d.mean, "thermal", "mean")?;
            return family_distribution(Family::Thermal, mean, need(d.n_max, "thermal", "n_max")?, cap);
        }
        DistributionKind::Weights => d.weights.clone().context("distribution kind 'weights' needs 'weights'")?,
        DistributionKind::File => {
            let path = base.join(d.path.as_ref().context("distribution kind 'file' needs 'path'")?);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            parse_weight_file(&text).with_context(|| format!("parsing {}", path.display()))?
        }
    };
    if let Some(n_max) = d.n_max {
        ensure!(weights.len() == n_max + 1, "{} weights given but n_max = {n_max}", weights.len());
    }
    Ok(NumberDistribution::from_weights(weights)?)
}

/// Plain text with one weight per line (`#` starts a comment), or a JSON
/// object `{"n_max": .., "weights": [..]}`.
pub fn parse_weight_file(text: &str) -> anyhow::Result<Vec<f64>> {
    if text.trim_start().starts_with('{') {
        let doc: WeightDocument = serde_json::from_str(text)?;
        ensure!(doc.weights.len() == doc.n_max + 1, "{} weights given but n_max = {}", doc.weights.len(), doc.n_max);
        return Ok(doc.weights);
    }
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| l.parse::<f64>().with_context(|| format!("line {}: '{l}' is not a number", i + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_units() {
        let f: Frequency = serde_json::from_str(r#"{"value": 1.0, "unit": "Hz"}"#).unwrap();
        assert_eq!(f.rad_per_s(), TAU);
        let f: Frequency = serde_json::from_str("3.5").unwrap();
        assert_eq!(f.rad_per_s(), 3.5);
        assert!(serde_json::from_str::<Frequency>(r#"{"value": 1.0, "unit": "kHz"}"#).is_err());
    }

    #[test]
    fn values_expand() {
        assert_eq!(Values::One(2.0).expand().unwrap(), vec![2.0]);
        let r = Values::Range(RangeSpec { start: 0.0, stop: 1.0, count: 5 }).expand().unwrap();
        assert_eq!(r, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(Values::List(vec![]).expand().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml_str("sede = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("[project]\ntarget = 1\nschedule = \"binary\"\nfoo = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[distribution]\nkind = \"gauss\"").is_err());
    }

    #[test]
    fn weight_files() {
        assert_eq!(parse_weight_file("0.5\n# c\n\n0.5 # x\n").unwrap(), vec![0.5, 0.5]);
        assert_eq!(parse_weight_file(r#"{"n_max": 1, "weights": [1, 3]}"#).unwrap(), vec![1.0, 3.0]);
        assert!(parse_weight_file(r#"{"n_max": 2, "weights": [1, 3]}"#).is_err());
        assert!(parse_weight_file("0.5\nabc").is_err());
    }

    #[test]
    fn distribution_kinds() {
        let cfg = ExperimentConfig::from_toml_str("[distribution]\nkind = \"weights\"\nweights = [1, 1, 2]").unwrap();
        assert_eq!(cfg.distribution().unwrap().weights(), &[0.25, 0.25, 0.5]);
        let cfg = ExperimentConfig::from_toml_str("[distribution]\nkind = \"poisson\"\nmean = 3.0").unwrap();
        assert!(cfg.distribution().is_err());
        let cfg = ExperimentConfig::from_toml_str("[distribution]\nkind = \"fock\"\nn = 4\nn_max = 9").unwrap();
        assert_eq!(cfg.distribution().unwrap().weight(4), 1.0);
        assert!(family_distribution(Family::Fock, 2.5, 9, 1e-9).is_err());
    }
}
