//! The TOML run document. Every field is optional; command-line flags
//! override whatever the document sets.
//!
//! ```toml
//! [discover]
//! measure = "ncd"
//! tau = 0.005
//! restarts = 2
//!
//! [ncd]
//! outer_steps = 20
//! regressor = { depth = 3, width = 40 }
//!
//! [[bench.cells]]
//! model = "pnl-gp"
//! nodes = 10
//! degree = 2.0
//! samples = 1000
//! measure = "rcd"
//! seeds = [0, 1, 2, 3, 4]
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use ncdges::experiments::{BenchCell, MeasureKind};
use ncdges::ncd::{NcdConfig, Preset};
use ncdges::synth::Model;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub discover: DiscoverSection,
    pub ncd: Option<NcdConfig>,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub oracle_check: OracleCheckSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub model: Option<Model>,
    pub nodes: Option<usize>,
    pub degree: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub graph_out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverSection {
    pub data: Option<PathBuf>,
    pub measure: Option<MeasureKind>,
    pub preset: Option<Preset>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub max_aux_size: Option<usize>,
    pub truth: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default)]
    pub cells: Vec<BenchCell>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckSection {
    pub exhaustive_max_nodes: Option<usize>,
    pub random_trials: Option<usize>,
    pub random_nodes: Option<usize>,
    pub degree: Option<f64>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// NCD settings: the preset if one is named, else the `[ncd]` table,
    /// else the sparse preset.
    pub fn ncd_config(&self, preset: Option<Preset>) -> NcdConfig {
        match (preset, self.ncd) {
            (Some(p), _) => NcdConfig::preset(p),
            (None, Some(c)) => c,
            (None, None) => NcdConfig::default(),
        }
    }
}

/// Default threshold for a measure, preferring the NCD configuration's.
pub fn default_tau(measure: MeasureKind, ncd: &NcdConfig) -> f64 {
    match measure {
        MeasureKind::Ncd => ncd.tau,
        other => other.default_tau(),
    }
}
