//! Config-driven experiment runner behind the command-line interface.
//!
//! Run configs are strict JSON (unknown keys rejected) so a typo fails
//! loudly before any compute. All randomness flows from each run seed
//! through named sub-streams: `init` for parameter initialization, `split`
//! for masks, `csbm` for synthetic data, so adding a consumer never
//! perturbs existing streams. Multi-seed and grid runs fan out over a
//! bounded worker pool and aggregate in seed order, never completion order.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    gen_csbm_with_ratios, load_dataset, save_dataset, CsbmParams, Dataset, SplitRatios,
};
use crate::error::{Error, Result};
use crate::linalg::Prng;
use crate::model::{LayerKind, LayerSpec, Model};
use crate::spectral::{compute_spectrum_with_cap, frequency_response, FrequencyResponse};
use crate::training::{
    ablation_grid, evaluate, train, AblationResult, Evaluation, TrainConfig, TrainHistory,
};

/// Where a run's dataset comes from: an on-disk directory or synthetic
/// contextual-SBM parameters (exactly one).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Path { path: PathBuf },
    Csbm(CsbmConfig),
}

/// Contextual-SBM knobs without a seed; each run derives its generator
/// seed from the run seed's `csbm` sub-stream.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsbmConfig {
    pub n: usize,
    pub c: usize,
    pub f: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub mu: f64,
}

impl CsbmConfig {
    pub fn with_seed(&self, seed: u64) -> CsbmParams {
        CsbmParams {
            n: self.n,
            c: self.c,
            f: self.f,
            p_in: self.p_in,
            p_out: self.p_out,
            mu: self.mu,
            seed,
        }
    }
}

fn default_eps() -> f64 {
    1e-6
}

fn default_r() -> usize {
    3
}

fn default_hidden() -> usize {
    32
}

fn default_layers() -> usize {
    2
}

/// Architecture knobs: `layers` stacked layers of one `kind`, `hidden`
/// units between them; input and output widths come from the dataset.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: LayerKind,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("model.layers must be at least 1".into()));
        }
        if self.layers > 1 && self.hidden == 0 {
            return Err(Error::Config("model.hidden must be at least 1".into()));
        }
        if self.r == 0 {
            return Err(Error::Config("model.r must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("model.eps must be positive".into()));
        }
        Ok(())
    }

    /// Expands to per-layer specs for a dataset with `in_dim` features and
    /// `classes` labels.
    pub fn specs(&self, in_dim: usize, classes: usize) -> Vec<LayerSpec> {
        let mut dims = Vec::with_capacity(self.layers + 1);
        dims.push(in_dim);
        for _ in 1..self.layers {
            dims.push(self.hidden);
        }
        dims.push(classes);
        dims.windows(2)
            .map(|pair| LayerSpec {
                kind: self.kind,
                in_dim: pair[0],
                out_dim: pair[1],
                r: self.r,
                eps: self.eps,
            })
            .collect()
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// A full experiment description; see the module docs for seeding.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub row_normalize_features: bool,
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if let DatasetSource::Csbm(c) = &self.dataset {
            c.with_seed(0).validate()?;
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses and validates a run config file.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Materializes the dataset one run seed sees.
///
/// Synthetic sources regenerate per seed from the `csbm` sub-stream. Loaded
/// datasets are shared; when the directory carries no explicit
/// `splits.csv`, masks are re-drawn per seed from the `split` sub-stream so
/// multi-seed summaries average over splits.
pub fn dataset_for_seed(
    source: &DatasetSource,
    base: Option<&Dataset>,
    seed: u64,
    row_normalize: bool,
) -> Result<Dataset> {
    let mut ds = match source {
        DatasetSource::Csbm(c) => {
            let params = c.with_seed(Prng::substream_seed(seed, "csbm"));
            gen_csbm_with_ratios(&params, SplitRatios::default())?
        }
        DatasetSource::Path { path } => {
            let mut ds = match base {
                Some(ds) => ds.clone(),
                None => load_dataset(path)?,
            };
            if !ds.split_from_file() {
                let ratios = ds.ratios();
                ds.resplit(ratios, Prng::substream_seed(seed, "split"))?;
            }
            ds
        }
    };
    if row_normalize {
        ds.row_normalize_features();
    }
    Ok(ds)
}

/// One seed's training artifacts, serialized to `seed_<s>/metrics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub history: TrainHistory,
    pub final_eval: Evaluation,
    pub wall_time_s: f64,
}

/// Aggregate of a multi-seed run, serialized to `summary.json`. Timing is
/// deliberately excluded so the file is byte-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub test_accuracies: Vec<f64>,
    pub mean_test_acc: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub std_test_acc: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

fn build_pool(jobs: Option<usize>, tasks: usize) -> Result<rayon::ThreadPool> {
    let default_jobs = std::thread::available_parallelism().map_or(1, usize::from);
    let jobs = jobs.unwrap_or(default_jobs).min(tasks.max(1));
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// Runs one seed of a config end to end: dataset, init, train, evaluate.
pub fn run_single_seed(cfg: &RunConfig, base: Option<&Dataset>, seed: u64) -> Result<(Model, SeedMetrics)> {
    let started = Instant::now();
    let ds = dataset_for_seed(&cfg.dataset, base, seed, cfg.row_normalize_features)?;
    let specs = cfg.model.specs(ds.feature_dim(), ds.class_count);
    let mut init_prng = Prng::substream(seed, "init");
    let model = Model::init(&specs, &mut init_prng)?;
    let train_cfg = TrainConfig { seed, ..cfg.train };
    let (best, history) = train(model, &ds.graph, &ds, &train_cfg)?;
    let final_eval = evaluate(&best, &ds.graph, &ds)?;
    Ok((
        best,
        SeedMetrics {
            seed,
            history,
            final_eval,
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    ))
}

/// Multi-seed training: writes `seed_<s>/metrics.json` and
/// `seed_<s>/model.json` per seed plus an aggregate `summary.json` under
/// `out_dir`, and returns the summary.
pub fn run_train(cfg: &RunConfig, out_dir: &Path) -> Result<TrainSummary> {
    cfg.validate()?;
    let base = match &cfg.dataset {
        DatasetSource::Path { path } => Some(load_dataset(path)?),
        DatasetSource::Csbm(_) => None,
    };
    let pool = build_pool(cfg.jobs, cfg.seeds.len())?;
    let results: Vec<(Model, SeedMetrics)> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| run_single_seed(cfg, base.as_ref(), seed))
            .collect::<Result<Vec<_>>>()
    })?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut test_accuracies = Vec::with_capacity(results.len());
    for (model, metrics) in &results {
        let seed_dir = out_dir.join(format!("seed_{}", metrics.seed));
        std::fs::create_dir_all(&seed_dir).map_err(|e| Error::io(&seed_dir, e))?;
        let metrics_path = seed_dir.join("metrics.json");
        std::fs::write(
            &metrics_path,
            serde_json::to_string_pretty(metrics).expect("metrics serialize"),
        )
        .map_err(|e| Error::io(&metrics_path, e))?;
        let model_path = seed_dir.join("model.json");
        std::fs::write(&model_path, model.to_json(metrics.seed))
            .map_err(|e| Error::io(&model_path, e))?;
        test_accuracies.push(metrics.final_eval.test_acc);
    }
    let (mean_test_acc, std_test_acc) = mean_std(&test_accuracies);
    let summary = TrainSummary {
        config: cfg.clone(),
        seeds: cfg.seeds.clone(),
        test_accuracies,
        mean_test_acc,
        std_test_acc,
    };
    let summary_path = out_dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("summary serialize"),
    )
    .map_err(|e| Error::io(&summary_path, e))?;
    Ok(summary)
}

/// Generates and saves a synthetic dataset; returns its edge homophily
/// (`None` when the draw produced no edges).
pub fn run_gen_data(params: &CsbmParams, ratios: SplitRatios, out: &Path) -> Result<Option<f64>> {
    let ds = gen_csbm_with_ratios(params, ratios)?;
    save_dataset(&ds, out)?;
    match ds.graph.edge_homophily(&ds.y) {
        Ok(h) => Ok(Some(h)),
        Err(_) => Ok(None),
    }
}

/// Evaluates a saved model on a dataset directory.
pub fn run_eval(model_path: &Path, data_dir: &Path, row_normalize: bool) -> Result<Evaluation> {
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", model_path.display())))?;
    let (model, _) = Model::from_json(&text)?;
    let mut ds = load_dataset(data_dir)?;
    if row_normalize {
        ds.row_normalize_features();
    }
    evaluate(&model, &ds.graph, &ds)
}

/// Exports per-layer frequency responses of a saved model's learned
/// filters against the spectrum of each layer's operative shift matrix.
pub fn run_freq(model_path: &Path, data_dir: &Path, out: &Path, cap: usize) -> Result<()> {
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", model_path.display())))?;
    let (model, _) = Model::from_json(&text)?;
    let ds = load_dataset(data_dir)?;
    let csv = layer_responses_csv(&model, &ds, cap)?;
    std::fs::write(out, csv).map_err(|e| Error::io(out, e))
}

/// Renders the per-layer response CSV for every layer with learned
/// coefficients. Fails when the model has none (fixed or absent filters).
pub fn layer_responses_csv(model: &Model, ds: &Dataset, cap: usize) -> Result<String> {
    if !model
        .layers()
        .iter()
        .any(|l| l.spec.kind.has_filter_coefficients())
    {
        return Err(Error::Invalid(
            "model has no learned filter coefficients: its aggregation is fixed (gcn), \
             per-hop matrices (fbgcn), or absent (mlp), so there is no scalar frequency response"
                .into(),
        ));
    }
    let mut raw_spectrum = None;
    let mut sym_spectrum = None;
    let mut responses: Vec<(String, FrequencyResponse)> = Vec::new();
    for (idx, layer) in model.layers().iter().enumerate() {
        let Some(h) = layer.params.h.as_ref() else {
            continue;
        };
        let spectrum = match layer.spec.kind {
            LayerKind::AagcnNormAdj => {
                if sym_spectrum.is_none() {
                    sym_spectrum =
                        Some(compute_spectrum_with_cap(&ds.graph.normalize_adjacency()?, cap)?);
                }
                sym_spectrum.as_ref().unwrap()
            }
            _ => {
                if raw_spectrum.is_none() {
                    raw_spectrum = Some(compute_spectrum_with_cap(&ds.graph, cap)?);
                }
                raw_spectrum.as_ref().unwrap()
            }
        };
        let resp = frequency_response(h, spectrum)?;
        responses.push((format!("layer_{idx}"), resp));
    }
    let refs: Vec<(String, &FrequencyResponse)> = responses
        .iter()
        .map(|(label, resp)| (label.clone(), resp))
        .collect();
    crate::spectral::render_response_csv(&refs)
}

/// Runs the inner-iteration ablation from a config; the dataset is fixed
/// across the grid (generated from the first seed's `csbm` sub-stream for
/// synthetic sources) and the config seeds vary model initialization.
pub fn run_ablate(
    cfg: &RunConfig,
    i_h_grid: &[usize],
    i_w_grid: &[usize],
    out: &Path,
) -> Result<AblationResult> {
    cfg.validate()?;
    let ds = dataset_for_seed(
        &cfg.dataset,
        None,
        cfg.seeds[0],
        cfg.row_normalize_features,
    )?;
    let specs = cfg.model.specs(ds.feature_dim(), ds.class_count);
    let pool = build_pool(cfg.jobs, i_h_grid.len() * i_w_grid.len())?;
    let result = pool.install(|| {
        ablation_grid(
            &cfg.train,
            &specs,
            i_h_grid,
            i_w_grid,
            &ds.graph,
            &ds,
            &cfg.seeds,
        )
    })?;
    result.write_csv(out)?;
    Ok(result)
}

/// Edge homophily of a dataset directory.
pub fn run_homophily(data_dir: &Path) -> Result<f64> {
    let ds = load_dataset(data_dir)?;
    ds.graph.edge_homophily(&ds.y)
}
