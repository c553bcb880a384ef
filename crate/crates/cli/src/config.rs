//! Run configuration: one JSON document per run, archivable and replayable.
//! Command-line flags override individual fields; the effective config is
//! written back as `run.json` next to every command's outputs.

use lissnas_core::{
    default_synthetic_space, BenchmarkOracle, Error, Result, ShrinkConfig, SpaceSpec,
    SyntheticOracle, SyntheticParams, TabularOracle,
};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::path::{Path, PathBuf};

/// Full description of a run. Every field has a default except the master
/// seed, which must come from the config file or `--seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Path to a space spec JSON. Omitted means the built-in synthetic
    /// default space; required when the oracle is a CSV table.
    pub space: Option<PathBuf>,
    pub oracle: OracleConfig,
    pub predictor: PredictorConfig,
    pub shrink: ShrinkConfig,
    pub metrics: MetricConfig,
    /// Output directory; created on demand.
    pub out: PathBuf,
    /// Master seed for every randomized step.
    pub seed: Option<u64>,
    /// Worker threads for the global pool; omitted uses all cores. Results
    /// do not depend on this.
    pub threads: Option<usize>,
    /// Also render SVG plots.
    pub plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            space: None,
            oracle: OracleConfig::default(),
            predictor: PredictorConfig::default(),
            shrink: ShrinkConfig::default(),
            metrics: MetricConfig::default(),
            out: PathBuf::from("lissnas-out"),
            seed: None,
            threads: None,
            plots: false,
        }
    }
}

impl RunConfig {
    /// Reads a config JSON file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let file = File::open(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot open config {}: {e}", path.display()))
        })?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// The mandatory master seed.
    pub fn master_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidConfig("a master seed is required (config \"seed\" or --seed)".into())
        })
    }

    /// Loads the space spec: the configured path, or the built-in synthetic
    /// default space. CSV oracles must name a spec explicitly since the
    /// table does not carry one.
    pub fn load_space(&self) -> Result<SpaceSpec> {
        match &self.space {
            Some(path) => SpaceSpec::load(path),
            None => {
                if matches!(self.oracle, OracleConfig::Csv { .. }) {
                    return Err(Error::InvalidConfig(
                        "a csv oracle needs an explicit space spec path".into(),
                    ));
                }
                Ok(default_synthetic_space())
            }
        }
    }

    /// Builds the benchmark oracle for `spec`.
    pub fn build_oracle(&self, spec: &SpaceSpec) -> Result<BenchmarkOracle> {
        match &self.oracle {
            OracleConfig::Csv { path } => {
                Ok(BenchmarkOracle::tabular(TabularOracle::load_csv(path, spec)?))
            }
            OracleConfig::Synthetic {
                locality_strength,
                noise_sigma,
                seed,
                ..
            } => {
                let params = SyntheticParams {
                    locality_strength: *locality_strength,
                    noise_sigma: *noise_sigma,
                    seed: seed.unwrap_or(self.master_seed()?),
                };
                Ok(BenchmarkOracle::synthetic(SyntheticOracle::new(spec, params)?))
            }
        }
    }
}

/// Where true accuracies come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleConfig {
    /// A benchmark table (`architecture_text,accuracy,flops,params`).
    Csv { path: PathBuf },
    /// The built-in synthetic benchmark.
    Synthetic {
        #[serde(default = "default_locality_strength")]
        locality_strength: f64,
        #[serde(default = "default_noise_sigma")]
        noise_sigma: f64,
        /// Weight seed; omitted derives it from the master seed.
        #[serde(default)]
        seed: Option<u64>,
        /// Rows gen-synthetic samples when the space is too large to
        /// enumerate.
        #[serde(default = "default_sample_rows")]
        sample_rows: usize,
    },
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig::Synthetic {
            locality_strength: default_locality_strength(),
            noise_sigma: default_noise_sigma(),
            seed: None,
            sample_rows: default_sample_rows(),
        }
    }
}

fn default_locality_strength() -> f64 {
    SyntheticParams::default().locality_strength
}

fn default_noise_sigma() -> f64 {
    SyntheticParams::default().noise_sigma
}

fn default_sample_rows() -> usize {
    100_000
}

/// How predicted accuracies are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorConfig {
    /// Ridge regression fit on a uniform training sample queried from the
    /// oracle.
    Ridge {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_train_size")]
        train_size: usize,
    },
    /// The oracle itself (isolates search behaviour from predictor error).
    OracleLookup,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig::Ridge {
            lambda: default_lambda(),
            train_size: default_train_size(),
        }
    }
}

fn default_lambda() -> f64 {
    1e-3
}

fn default_train_size() -> usize {
    1000
}

/// Measurement parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub num_walks: u32,
    pub walk_length: u32,
    /// Omitted means ceil(total_edit_distance / 3).
    pub max_lag: Option<u32>,
    pub aad_pairs: u32,
    /// Omitted means ceil(total_edit_distance / 3) + 2.
    pub aad_max_distance: Option<u32>,
    /// Histogram bins per resource axis.
    pub bins: usize,
    /// Good-network accuracy threshold; omitted uses the 80th percentile of
    /// the initial sample's true accuracies.
    pub shrink_threshold: Option<f64>,
    /// Draw count for the shrink-index tail probabilities.
    pub shrink_n: u64,
    /// Required successes; 4 of 20 means at least 20% good draws.
    pub shrink_k: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            num_walks: 200,
            walk_length: 30,
            max_lag: None,
            aad_pairs: 1000,
            aad_max_distance: None,
            bins: 20,
            shrink_threshold: None,
            shrink_n: lissnas_core::metrics::SHRINK_INDEX_DEFAULT_N,
            shrink_k: lissnas_core::metrics::SHRINK_INDEX_DEFAULT_K,
        }
    }
}
