//! Multi-seed experiments: one dataset, several independently seeded
//! trainings, a rank-averaged relevance profile and a correlation table.
//!
//! Config files are JSON:
//!
//! ```json
//! {
//!   "name": "circle",
//!   "dataset": { "generator": "circle", "n": 10000, "r": 10.0 },
//!   "data_seed": 1,
//!   "train": { "latent_dim": 4 },
//!   "seeds": [1, 2, 3],
//!   "output_dir": "out/circle"
//! }
//! ```
//!
//! `train` accepts every [`TrainConfig`] field except `seed`; each run
//! takes its seed from `seeds`. A relative `output_dir` is resolved
//! against the directory holding the config file.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    aggregate_runs, default_probes, latent_feature_correlations, relevance, CorrelationMatrix,
    LatentStats, RelevanceReport,
};
use crate::datagen::{standardize, Dataset, DatasetSpec, Standardizer};
use crate::numerics::Matrix;
use crate::report::{render_figures, write_atomic};
use crate::vae::{posterior_stats, train, TrainConfig, TrainTrace, VaeModel};
use crate::{Error, Result};

/// Environment variable capping the number of worker threads; `0` runs seeds serially.
pub const THREADS_ENV: &str = "SYMPROBE_THREADS";
/// At most this many events are kept in a report for plotting.
pub const PLOT_SAMPLE: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSpec,
    pub data_seed: u64,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment needs at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("seed {} is listed twice", w[0])));
        }
        if self.train.seed != 0 {
            return Err(Error::Config(
                "set per-run seeds in `seeds`, not `train.seed`".into(),
            ));
        }
        self.train.validate()
    }

    /// Reads and validates a config file, resolving `output_dir` against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        if let Some(dir) = &cfg.output_dir {
            if dir.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.output_dir = Some(base.join(dir));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn run_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub generator: String,
    pub events: usize,
    pub names: Vec<String>,
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub relevance: RelevanceReport,
    pub trace: TrainTrace,
}

/// Evenly strided events with raw features and posterior means of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSample {
    pub seed: u64,
    pub indices: Vec<usize>,
    pub features: Matrix,
    pub z_mean: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Absent for single-model reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    pub dataset: DatasetSummary,
    pub runs: Vec<RunSummary>,
    pub aggregate: RelevanceReport,
    /// Correlations for the first listed seed.
    pub correlations: CorrelationMatrix,
    pub sample: PlotSample,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let report: ExperimentReport = serde_json::from_str(s)?;
        report.check()?;
        Ok(report)
    }

    fn check(&self) -> Result<()> {
        let d = self.aggregate.latent_dim();
        if d == 0 {
            return Err(Error::Data("report has no latents".into()));
        }
        if self.sample.z_mean.cols() != d || self.correlations.r.rows() != d {
            return Err(Error::Data(
                "report sections disagree on the latent dimension".into(),
            ));
        }
        if self.sample.features.cols() != self.dataset.names.len() {
            return Err(Error::Data(
                "sample features do not match dataset columns".into(),
            ));
        }
        if self.sample.features.rows() != self.sample.z_mean.rows() {
            return Err(Error::Data(
                "sample features and latents have different lengths".into(),
            ));
        }
        Ok(())
    }
}

/// Worker count from [`THREADS_ENV`]; unset or unparsable means rayon's default.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

struct Run {
    summary: RunSummary,
    stats: LatentStats,
}

fn run_one(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<Run> {
    let stage = |stage: &'static str| {
        move |e: Error| Error::Stage {
            stage,
            seed,
            source: Box::new(e),
        }
    };
    let (model, trace) = train(data, &cfg.run_config(seed)).map_err(stage("train"))?;
    let stats = posterior_stats(&model, data).map_err(stage("encode"))?;
    let relevance = relevance(&stats).map_err(stage("relevance"))?;
    Ok(Run {
        summary: RunSummary {
            seed,
            relevance,
            trace,
        },
        stats,
    })
}

/// Runs every seed and assembles the report.
///
/// `threads`: `None` uses rayon's global pool, `Some(0)` runs serially,
/// `Some(k)` uses a dedicated pool of `k` workers. Results are joined in
/// listed-seed order, so the report does not depend on this choice.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data_stage = |stage: &'static str| {
        let seed = cfg.data_seed;
        move |e: Error| Error::Stage {
            stage,
            seed,
            source: Box::new(e),
        }
    };
    let raw = cfg
        .dataset
        .generate(cfg.data_seed)
        .map_err(data_stage("generate"))?;
    let (data, _) = standardize(&raw).map_err(data_stage("standardize"))?;

    let runs: Vec<Result<Run>> = match threads {
        Some(0) => cfg.seeds.iter().map(|&s| run_one(cfg, &data, s)).collect(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {k} worker threads: {e}")))?
            .install(|| {
                cfg.seeds
                    .par_iter()
                    .map(|&s| run_one(cfg, &data, s))
                    .collect()
            }),
        None => cfg
            .seeds
            .par_iter()
            .map(|&s| run_one(cfg, &data, s))
            .collect(),
    };
    let runs = runs.into_iter().collect::<Result<Vec<Run>>>()?;
    assemble(Some(cfg.clone()), &raw, &data, runs)
}

/// A trained model with what is needed to apply it to raw data again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub train: TrainConfig,
    pub names: Vec<String>,
    pub standardizer: Standardizer,
    pub trace: TrainTrace,
    pub model: VaeModel,
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.names.len() != file.model.input_dim()
            || file.standardizer.dim() != file.model.input_dim()
        {
            return Err(Error::Data(
                "model file: column names, standardizer and model disagree".into(),
            ));
        }
        if file.train.latent_dim != file.model.latent_dim() {
            return Err(Error::Data(
                "model file: latent_dim does not match the model".into(),
            ));
        }
        Ok(file)
    }
}

/// Standardizes `raw` and trains one model on it.
pub fn train_model(raw: &Dataset, cfg: &TrainConfig) -> Result<ModelFile> {
    let (data, standardizer) = standardize(raw)?;
    let (model, trace) = train(&data, cfg)?;
    Ok(ModelFile {
        train: cfg.clone(),
        names: raw.names.clone(),
        standardizer,
        trace,
        model,
    })
}

/// Single-run report for a saved model evaluated on `raw`.
pub fn analyze_model(file: &ModelFile, raw: &Dataset) -> Result<ExperimentReport> {
    if raw.names != file.names {
        return Err(Error::Data(format!(
            "dataset columns {:?} do not match the model's {:?}",
            raw.names, file.names
        )));
    }
    let data = file.standardizer.apply_to(raw)?;
    let stats = posterior_stats(&file.model, &data)?;
    let run = Run {
        summary: RunSummary {
            seed: file.train.seed,
            relevance: relevance(&stats)?,
            trace: file.trace.clone(),
        },
        stats,
    };
    assemble(None, raw, &data, vec![run])
}

fn assemble(
    config: Option<ExperimentConfig>,
    raw: &Dataset,
    data: &Dataset,
    mut runs: Vec<Run>,
) -> Result<ExperimentReport> {
    let summaries: Vec<RunSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    let reports: Vec<RelevanceReport> = summaries.iter().map(|s| s.relevance.clone()).collect();
    let aggregate = aggregate_runs(&reports)?;

    let first = runs.swap_remove(0);
    let seed = first.summary.seed;
    let correlations = latent_feature_correlations(&first.stats, data, &default_probes(data))
        .map_err(|e| Error::Stage {
            stage: "correlate",
            seed,
            source: Box::new(e),
        })?;
    let indices = strided_indices(raw.len(), PLOT_SAMPLE);
    let sample = PlotSample {
        seed,
        features: raw.features.select_rows(&indices),
        z_mean: first.stats.z_mean().select_rows(&indices),
        indices,
    };

    Ok(ExperimentReport {
        config,
        dataset: DatasetSummary {
            generator: raw.meta.generator.clone(),
            events: raw.len(),
            names: raw.names.clone(),
            constraints: raw.constraints.iter().map(|c| c.id().to_string()).collect(),
        },
        runs: summaries,
        aggregate,
        correlations,
        sample,
    })
}

fn strided_indices(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    (0..max).map(|i| i * n / max).collect()
}

/// Paths written by [`write_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutputs {
    pub report: PathBuf,
    pub figures: Vec<PathBuf>,
}

/// Writes `report.json` and the figures into `dir`, creating it if needed.
pub fn write_experiment(report: &ExperimentReport, dir: &Path) -> Result<ExperimentOutputs> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("report.json");
    write_atomic(&path, report.to_json()?.as_bytes())?;
    let figures = render_figures(report, dir)?;
    Ok(ExperimentOutputs {
        report: path,
        figures,
    })
}
