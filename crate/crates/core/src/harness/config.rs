//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 7
//! metric = "sq"
//! fractions = [0.05, 0.1, 0.2, 0.3]
//! jl = "auto"          # "off", "auto" or a dimension
//! jl_eps = 0.3
//! output = "out/ensemble"
//!
//! [dataset]
//! kind = "ensemble"
//! items = 500
//! k = 10
//! dims = 5
//! solutions = 200
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::{DEFAULT_SEPARATION, DEFAULT_TOTAL_WEIGHT};
use crate::coreset::{CostMode, DEFAULT_ALPHA, DEFAULT_SIZE_CONSTANT, DEFAULT_TRIALS};
use crate::error::{Error, Result};
use crate::matching::Metric;
use crate::prototype::{SolverConfig, DEFAULT_MAX_ROUNDS, DEFAULT_REL_TOL};
use crate::reduce::DEFAULT_JL_CONSTANT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSpec {
    /// Pattern file, optionally with a JSON array of item labels.
    File {
        path: PathBuf,
        #[serde(default)]
        labels: Option<PathBuf>,
    },
    Ensemble {
        items: usize,
        k: usize,
        dims: usize,
        solutions: usize,
        #[serde(default = "default_separation")]
        separation: f64,
    },
    Images {
        count: usize,
        k: usize,
        #[serde(default = "default_side")]
        side: usize,
        #[serde(default = "default_total_weight")]
        total_weight: u64,
        #[serde(default = "default_noise_fraction")]
        noise_fraction: f64,
        #[serde(default)]
        glyph: usize,
    },
    /// Directory of PGM images.
    Pgm {
        path: PathBuf,
        k: usize,
        #[serde(default = "default_total_weight")]
        total_weight: u64,
    },
    Gaussian {
        n: usize,
        k: usize,
        d: usize,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    /// `n` copies of one clustering of `items` items into `k` groups.
    Identical { n: usize, items: usize, k: usize },
}

fn default_separation() -> f64 {
    DEFAULT_SEPARATION
}
fn default_side() -> usize {
    28
}
fn default_total_weight() -> u64 {
    DEFAULT_TOTAL_WEIGHT
}
fn default_noise_fraction() -> f64 {
    0.1
}
fn default_spread() -> f64 {
    10.0
}
fn default_noise() -> f64 {
    1.0
}

/// Random projection setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "JlRaw", into = "String")]
pub enum Jl {
    #[default]
    Off,
    Auto,
    Dim(usize),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JlRaw {
    Num(usize),
    Text(String),
}

impl TryFrom<JlRaw> for Jl {
    type Error = Error;

    fn try_from(raw: JlRaw) -> Result<Self> {
        match raw {
            JlRaw::Num(0) => Err(Error::invalid("jl", "dimension must be at least 1")),
            JlRaw::Num(m) => Ok(Jl::Dim(m)),
            JlRaw::Text(s) => s.parse(),
        }
    }
}

impl FromStr for Jl {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Jl::Off),
            "auto" | "on" => Ok(Jl::Auto),
            other => match other.parse::<usize>() {
                Ok(m) if m > 0 => Ok(Jl::Dim(m)),
                _ => Err(Error::invalid("jl", format!("expected a dimension, `auto` or `off`, got `{other}`"))),
            },
        }
    }
}

impl fmt::Display for Jl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Jl::Off => f.write_str("off"),
            Jl::Auto => f.write_str("auto"),
            Jl::Dim(m) => write!(f, "{m}"),
        }
    }
}

impl From<Jl> for String {
    fn from(j: Jl) -> String {
        j.to_string()
    }
}

/// How the time columns are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    /// Elapsed wall-clock seconds.
    #[default]
    Wall,
    /// Deterministic operation count of the matchings performed, scaled to
    /// nominal seconds. Makes the CSV reproducible byte for byte.
    Work,
}

impl FromStr for Clock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(Clock::Wall),
            "work" => Ok(Clock::Work),
            other => Err(Error::invalid("clock", format!("expected `wall` or `work`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub seed: u64,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// When set, one extra coreset row uses the recommended size for this eps.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_size_constant")]
    pub size_constant: f64,
    #[serde(default)]
    pub jl: Jl,
    #[serde(default = "default_jl_eps")]
    pub jl_eps: f64,
    #[serde(default = "default_jl_constant")]
    pub jl_constant: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default)]
    pub cost_mode: CostMode,
    #[serde(default)]
    pub clock: Clock,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Also write the generated dataset as a pattern file.
    #[serde(default)]
    pub write_dataset: bool,
}

fn default_metric() -> Metric {
    Metric::SquaredL2
}
fn default_fractions() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3]
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_trials() -> usize {
    DEFAULT_TRIALS
}
fn default_size_constant() -> f64 {
    DEFAULT_SIZE_CONSTANT
}
fn default_jl_eps() -> f64 {
    0.3
}
fn default_jl_constant() -> f64 {
    DEFAULT_JL_CONSTANT
}
fn default_max_rounds() -> usize {
    DEFAULT_MAX_ROUNDS
}
fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}
fn default_output() -> PathBuf {
    PathBuf::from("protoset-out")
}

impl ExperimentConfig {
    /// Config with every optional field at its default.
    pub fn new(dataset: DatasetSpec, seed: u64) -> Self {
        Self {
            dataset,
            seed,
            metric: default_metric(),
            fractions: default_fractions(),
            alpha: default_alpha(),
            trials: default_trials(),
            eps: None,
            size_constant: default_size_constant(),
            jl: Jl::Off,
            jl_eps: default_jl_eps(),
            jl_constant: default_jl_constant(),
            max_rounds: default_max_rounds(),
            rel_tol: default_rel_tol(),
            cost_mode: CostMode::Exact,
            clock: Clock::Wall,
            output: default_output(),
            write_dataset: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validated()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { max_rounds: self.max_rounds, rel_tol: self.rel_tol }
    }

    /// Checks ranges and sorts the fractions.
    pub fn validated(mut self) -> Result<Self> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return bad(format!("fractions must lie in (0, 1], got {:?}", self.fractions));
        }
        self.fractions.sort_by(f64::total_cmp);
        self.fractions.dedup();
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 1, got {}", self.alpha));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return bad(format!("eps must lie in (0, 1), got {eps}"));
            }
        }
        if !(self.size_constant > 0.0 && self.size_constant.is_finite()) {
            return bad("size_constant must be positive".into());
        }
        if self.jl != Jl::Off {
            if self.metric == Metric::L1 {
                return bad("random projection is not available for the l1 metric".into());
            }
            if !(self.jl_eps > 0.0 && self.jl_eps < 1.0) {
                return bad(format!("jl_eps must lie in (0, 1), got {}", self.jl_eps));
            }
            if !(self.jl_constant > 0.0 && self.jl_constant.is_finite()) {
                return bad("jl_constant must be positive".into());
            }
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1".into());
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return bad("rel_tol must be non-negative".into());
        }
        let weighted_data = matches!(self.dataset, DatasetSpec::Images { .. } | DatasetSpec::Pgm { .. });
        let generated = !matches!(self.dataset, DatasetSpec::File { .. });
        if generated && weighted_data != self.metric.is_weighted() {
            return bad(format!("metric {} does not fit the {} dataset", self.metric, dataset_kind(&self.dataset)));
        }
        Ok(self)
    }
}

pub fn dataset_kind(spec: &DatasetSpec) -> &'static str {
    match spec {
        DatasetSpec::File { .. } => "file",
        DatasetSpec::Ensemble { .. } => "ensemble",
        DatasetSpec::Images { .. } => "images",
        DatasetSpec::Pgm { .. } => "pgm",
        DatasetSpec::Gaussian { .. } => "gaussian",
        DatasetSpec::Identical { .. } => "identical",
    }
}
