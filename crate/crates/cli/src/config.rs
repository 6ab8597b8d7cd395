//! Settings file. Every key is optional; command-line flags win over the
//! file and the file wins over built-in defaults.
//!
//! ```toml
//! [cache]
//! alpha = 1.5
//! beta = 1.0
//! capacity = "10GiB"
//! n_layers = 3
//!
//! [budget]
//! size_limit = "2MiB"
//! step_limit = 200
//! pod_limit = 500
//!
//! [simulate]
//! policy = "IMPORTANCE"
//! io_cost_per_byte = 4e-9
//! cache_read_cost_per_byte = 1e-9
//! parallelism = 8
//!
//! [synth]
//! baseline_score = 0.8
//! max_rounds = 3
//! top_k = 3
//! lake = "lake/"
//! client = "mock:script.json"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

/// A byte count written either as an integer or as text like `"10GiB"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SizeValue {
    Bytes(u64),
    Text(String),
}

impl SizeValue {
    pub fn bytes(&self) -> Result<u64> {
        match self {
            SizeValue::Bytes(b) => Ok(*b),
            SizeValue::Text(t) => parse_bytes(t),
        }
    }
}

pub fn parse_bytes(text: &str) -> Result<u64> {
    parse_size::Config::new()
        .with_binary()
        .parse_size(text.trim())
        .with_context(|| format!("invalid size `{text}`"))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub capacity: Option<SizeValue>,
    pub n_layers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub size_limit: Option<SizeValue>,
    pub step_limit: Option<u64>,
    pub pod_limit: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub policy: Option<String>,
    pub io_cost_per_byte: Option<f64>,
    pub cache_read_cost_per_byte: Option<f64>,
    pub parallelism: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub baseline_score: Option<f64>,
    pub max_rounds: Option<u32>,
    pub top_k: Option<usize>,
    pub lake: Option<PathBuf>,
    pub client: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub cache: CacheSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub synth: SynthSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// First present value of flag, file, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
