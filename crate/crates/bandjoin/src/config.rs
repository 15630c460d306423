//! Experiment configuration documents.
//!
//! A config is a single JSON object. Unknown keys are rejected so that a typo
//! does not silently fall back to a default.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bandjoin_core::cost_model::CostModel;
use bandjoin_core::datagen::{Distribution, REVERSE_PARETO_OFFSET};
use bandjoin_core::optimizer::Termination;
use bandjoin_core::sampling::SamplingConfig;
use bandjoin_core::BandSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataSource,
    /// Band width per dimension; `"inf"` is accepted for an unbounded band.
    pub eps: Vec<Eps>,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_beta3")]
    pub beta3: f64,
    pub workers: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub termination: TerminationKind,
    /// Running-time model for applied termination and grid search.
    #[serde(default)]
    pub cost_model: Option<CostModelConfig>,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub quantile: QuantileSection,
    /// Compare every run against the nested-loop join.
    #[serde(default)]
    pub verify_oracle: bool,
}

fn default_beta2() -> f64 {
    4.0
}

fn default_beta3() -> f64 {
    1.0
}

fn default_methods() -> Vec<Method> {
    vec![Method::RecPart]
}

/// A band width: a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Eps {
    Value(f64),
    Named(InfName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfName {
    #[serde(rename = "inf")]
    Inf,
}

impl Eps {
    pub fn value(self) -> f64 {
        match self {
            Eps::Value(v) => v,
            Eps::Named(InfName::Inf) => f64::INFINITY,
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v == f64::INFINITY {
            Eps::Named(InfName::Inf)
        } else {
            Eps::Value(v)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    Generate { dims: usize, s: GenRelation, t: GenRelation },
    Csv { s: CsvRelation, t: CsvRelation },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenRelation {
    pub distribution: DistributionConfig,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionConfig {
    Pareto {
        z: f64,
    },
    ReversePareto {
        z: f64,
        #[serde(default = "default_offset")]
        offset: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Adversarial {
        corner: f64,
        side: f64,
    },
}

fn default_offset() -> f64 {
    REVERSE_PARETO_OFFSET
}

impl From<DistributionConfig> for Distribution {
    fn from(d: DistributionConfig) -> Self {
        match d {
            DistributionConfig::Pareto { z } => Distribution::Pareto { z },
            DistributionConfig::ReversePareto { z, offset } => Distribution::ReversePareto { z, offset },
            DistributionConfig::Uniform { lo, hi } => Distribution::Uniform { lo, hi },
            DistributionConfig::Adversarial { corner, side } => Distribution::Adversarial { corner, side },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvRelation {
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
    pub columns: Vec<usize>,
    #[serde(default)]
    pub limit: Option<usize>,
    #[serde(default)]
    pub has_header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[serde(rename = "recpart")]
    #[value(name = "recpart")]
    RecPart,
    #[serde(rename = "recpart-s")]
    #[value(name = "recpart-s")]
    RecPartS,
    OneBucket,
    Grid,
    GridStar,
    Quantile,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::RecPart, Method::RecPartS, Method::OneBucket, Method::Grid, Method::GridStar, Method::Quantile];

    pub fn name(self) -> &'static str {
        match self {
            Method::RecPart => "recpart",
            Method::RecPartS => "recpart-s",
            Method::OneBucket => "one-bucket",
            Method::Grid => "grid",
            Method::GridStar => "grid-star",
            Method::Quantile => "quantile",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationKind {
    #[default]
    Theoretical,
    Applied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModelConfig {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl From<CostModel> for CostModelConfig {
    fn from(m: CostModel) -> Self {
        Self { beta0: m.beta0, beta1: m.beta1, beta2: m.beta2, beta3: m.beta3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub input_budget: usize,
    pub output_cap: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = SamplingConfig::default();
        Self { input_budget: d.input_budget, output_cap: d.output_cap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub window_fraction: Option<f64>,
    pub min_improvement: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Cell size multiplier of the plain grid.
    pub multiplier: u32,
    /// Largest multiplier the grid search tries.
    pub j_max: u32,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { multiplier: 1, j_max: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantileSection {
    pub size_per_block: usize,
}

impl Default for QuantileSection {
    fn default() -> Self {
        Self { size_per_block: 10_000 }
    }
}

impl ExperimentConfig {
    /// Parses a config document; `base` is the directory relative CSV paths
    /// are resolved against.
    pub fn from_json(text: &str, base: &Path) -> anyhow::Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)?;
        if let DataSource::Csv { s, t } = &mut cfg.data {
            for rel in [s, t] {
                if rel.path.is_relative() {
                    rel.path = base.join(&rel.path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.workers == 0 {
            bail!("`workers` must be at least 1");
        }
        if self.eps.is_empty() {
            bail!("`eps` needs one band width per join attribute");
        }
        if self.methods.is_empty() {
            bail!("`methods` must name at least one partitioning method");
        }
        let dims = self.eps.len();
        match &self.data {
            DataSource::Generate { dims: d, .. } if *d != dims => {
                bail!("`data.dims` is {d} but `eps` has {dims} entries")
            }
            DataSource::Csv { s, t } => {
                for (name, rel) in [("s", s), ("t", t)] {
                    if rel.columns.len() != dims {
                        bail!("`data.{name}.columns` selects {} columns but `eps` has {dims} entries", rel.columns.len());
                    }
                }
            }
            _ => {}
        }
        self.band_spec()?;
        if self.grid.multiplier == 0 || self.grid.j_max == 0 {
            bail!("`grid.multiplier` and `grid.j_max` must be at least 1");
        }
        if self.quantile.size_per_block == 0 {
            bail!("`quantile.size_per_block` must be at least 1");
        }
        if self.sampling.input_budget < 2 {
            bail!("`sampling.input_budget` must be at least 2");
        }
        Ok(())
    }

    pub fn band_spec(&self) -> anyhow::Result<BandSpec> {
        let eps = self.eps.iter().map(|e| e.value()).collect();
        Ok(BandSpec::new(eps, self.beta2, self.beta3)?)
    }

    pub fn cost_model(&self) -> anyhow::Result<CostModel> {
        match self.cost_model {
            Some(m) => Ok(CostModel::new(m.beta0, m.beta1, m.beta2, m.beta3)?),
            None => Ok(CostModel::default()),
        }
    }

    pub fn termination(&self) -> anyhow::Result<Termination> {
        Ok(match self.termination {
            TerminationKind::Theoretical => Termination::Theoretical,
            TerminationKind::Applied => Termination::Applied { model: self.cost_model()? },
        })
    }

    pub fn sampling_config(&self) -> SamplingConfig {
        SamplingConfig { input_budget: self.sampling.input_budget, output_cap: self.sampling.output_cap }
    }
}
