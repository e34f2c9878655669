//! JSON run configuration. Every section is optional; command-line flags
//! override the values read here, which override the built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spparafac::simgen::ScenarioSpec;
use spparafac::study::DEFAULT_FAR_NULL;
use spparafac::inference::DEFAULT_BINS;
use spparafac::{Error, GibbsConfig, PriorConfig, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub fit: FitSection,
    pub summarize: SummarizeSection,
    pub prior_sim: PriorSimSection,
    pub simulate: SimulateSection,
    pub replicate: ReplicateSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub data: Option<PathBuf>,
    /// Declared level counts, one per column.
    pub levels: Option<Vec<usize>>,
    pub gibbs: GibbsConfig,
    /// Whether `gibbs.prior.gamma` was given; otherwise it becomes `0.2 p`.
    #[serde(skip)]
    pub gamma_given: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRequest {
    /// 1-based positions.
    pub variables: Vec<usize>,
    /// 1-based codes, one per variable.
    pub codes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalRequest {
    pub variable: usize,
    pub code: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummarizeSection {
    /// Directory holding `draws.jsonl` and `run_meta.json`; defaults to the output directory.
    pub run: Option<PathBuf>,
    pub cramers_v: bool,
    /// Binary variable sets (1-based) whose log-linear coefficients are summarized.
    pub beta: Vec<Vec<usize>>,
    pub cells: Vec<CellRequest>,
    pub marginals: Vec<MarginalRequest>,
    pub bins: usize,
}

impl Default for SummarizeSection {
    fn default() -> Self {
        Self {
            run: None,
            cramers_v: false,
            beta: Vec::new(),
            cells: Vec::new(),
            marginals: Vec::new(),
            bins: DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSimSection {
    pub p: usize,
    pub d: usize,
    pub draws: usize,
    pub bins: usize,
    pub prior: PriorConfig,
}

impl Default for PriorSimSection {
    fn default() -> Self {
        Self { p: 3, d: 2, draws: 10_000, bins: DEFAULT_BINS, prior: PriorConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Defaults to the log-linear scenario.
    pub scenario: Option<ScenarioSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplicateSection {
    pub scenario: Option<ScenarioSpec>,
    pub gibbs: GibbsConfig,
    pub replicates: usize,
    pub base_seed: u64,
    pub far_null: Vec<usize>,
    #[serde(skip)]
    pub gamma_given: bool,
}

impl Default for ReplicateSection {
    fn default() -> Self {
        Self {
            scenario: None,
            gibbs: GibbsConfig::default(),
            replicates: 20,
            base_seed: 0,
            far_null: DEFAULT_FAR_NULL.to_vec(),
            gamma_given: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut config: RunConfig = serde_json::from_value(raw.clone()).map_err(|e| Error::Config(e.to_string()))?;
        config.fit.gamma_given = raw.pointer("/fit/gibbs/prior/gamma").is_some();
        config.replicate.gamma_given = raw.pointer("/replicate/gibbs/prior/gamma").is_some();
        Ok(config)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
