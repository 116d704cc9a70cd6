//! The training objective and the alternating-minimization trainer.
//!
//! The objective is masked softmax cross-entropy over the training nodes.
//! The trainer is plain full-batch gradient descent with a fixed step: in
//! alternating mode each outer epoch runs `i_h` steps that update only the
//! filter coefficients (weights frozen), then `i_w` steps that update only
//! the weights (coefficients frozen); joint mode spends the same
//! `i_h + i_w` step budget updating everything at once, which is the
//! baseline the ablation grid compares against. Training stops after
//! `max_outer` epochs or when validation accuracy has not improved for
//! `patience` epochs, and returns the parameters from the best-validation
//! epoch.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::linalg::{DenseMatrix, Prng};
use crate::model::{predict, LayerSpec, Model, ParamGroup, ShiftOperators};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Algorithm: `i_h` coefficient steps then `i_w` weight steps per epoch.
    Alternating,
    /// Same step budget, all parameters updated together.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Gradient-descent step size.
    pub lr: f64,
    /// Maximum number of outer epochs K.
    pub max_outer: usize,
    /// Inner steps on the filter coefficients per outer epoch.
    pub i_h: usize,
    /// Inner steps on the weight matrices per outer epoch.
    pub i_w: usize,
    /// Outer epochs without validation improvement before stopping.
    pub patience: usize,
    /// L2 penalty coefficient on weight matrices (never on coefficients).
    pub l2: f64,
    pub seed: u64,
    pub mode: TrainMode,
    /// Return the final-epoch parameters instead of the best-validation
    /// checkpoint (filter-analysis runs want the converged filter).
    pub return_last: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.05,
            max_outer: 1000,
            i_h: 5,
            i_w: 5,
            patience: 100,
            l2: 0.0,
            seed: 0,
            mode: TrainMode::Alternating,
            return_last: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("lr={} must be finite and >= 0", self.lr)));
        }
        if self.i_h + self.i_w == 0 {
            return Err(Error::Config("i_h + i_w must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return Err(Error::Config(format!("l2={} must be finite and >= 0", self.l2)));
        }
        Ok(())
    }
}

/// Metrics recorded after each outer epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based outer epoch whose parameters were returned; 0 means the
    /// initial parameters were never improved upon.
    pub best_epoch: usize,
}

/// Masked mean cross-entropy with a numerically stable log-softmax, plus
/// the logit gradient: `(softmax - onehot) / |mask|` on masked rows, zero
/// elsewhere.
pub fn cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[bool],
) -> Result<(f64, DenseMatrix)> {
    let n = logits.rows();
    let c = logits.cols();
    if labels.len() != n || mask.len() != n {
        return Err(Error::Shape(format!(
            "cross_entropy: {n} logit rows, {} labels, {} mask entries",
            labels.len(),
            mask.len()
        )));
    }
    let count = mask.iter().filter(|&&b| b).count();
    if count == 0 {
        return Err(Error::Invalid("cross_entropy over an empty mask".into()));
    }
    let inv = 1.0 / count as f64;
    let mut loss = 0.0;
    let mut dlogits = DenseMatrix::zeros(n, c);
    for i in 0..n {
        if !mask[i] {
            continue;
        }
        let y = labels[i];
        if y >= c {
            return Err(Error::Invalid(format!(
                "label {y} at node {i} exceeds {c} classes"
            )));
        }
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &v in row {
            sum += (v - max).exp();
        }
        let log_sum = sum.ln();
        loss += log_sum - (row[y] - max);
        let drow = dlogits.row_mut(i);
        for (j, &v) in row.iter().enumerate() {
            let softmax = (v - max).exp() / sum;
            drow[j] = (softmax - if j == y { 1.0 } else { 0.0 }) * inv;
        }
    }
    Ok((loss * inv, dlogits))
}

/// Fraction of masked nodes whose prediction matches the label.
pub fn accuracy(preds: &[usize], labels: &[usize], mask: &[bool]) -> Result<f64> {
    if preds.len() != labels.len() || mask.len() != labels.len() {
        return Err(Error::Shape("accuracy: length mismatch".into()));
    }
    let count = mask.iter().filter(|&&b| b).count();
    if count == 0 {
        return Err(Error::Invalid("accuracy over an empty mask".into()));
    }
    let hits = (0..preds.len())
        .filter(|&i| mask[i] && preds[i] == labels[i])
        .count();
    Ok(hits as f64 / count as f64)
}

/// Held-out metrics of a model on a dataset. `loss` is the training-mask
/// cross-entropy, matching the objective the trainer descends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub loss: f64,
}

pub fn evaluate(model: &Model, g: &SparseGraph, data: &Dataset) -> Result<Evaluation> {
    let ops = ShiftOperators::for_model(g, model)?;
    evaluate_with_ops(model, &ops, data)
}

fn evaluate_with_ops(model: &Model, ops: &ShiftOperators, data: &Dataset) -> Result<Evaluation> {
    let (logits, _) = model.forward(ops, &data.x)?;
    let (loss, _) = cross_entropy(&logits, &data.y, &data.train_mask)?;
    let preds = predict(&logits);
    Ok(Evaluation {
        train_acc: accuracy(&preds, &data.y, &data.train_mask)?,
        val_acc: accuracy(&preds, &data.y, &data.val_mask)?,
        test_acc: accuracy(&preds, &data.y, &data.test_mask)?,
        loss,
    })
}

/// Which parameter block a just-applied inner step updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepPhase {
    FilterCoeffs,
    Weights,
    Joint,
}

/// Observation hook invoked after every inner gradient step; used by tests
/// to assert the frozen-block semantics of alternating training.
pub type StepHook<'a> = dyn FnMut(usize, StepPhase, &Model) + 'a;

/// Trains and returns the model at the best-validation checkpoint with the
/// per-epoch history. Fully deterministic given `(model, data, cfg)`.
pub fn train(
    model: Model,
    g: &SparseGraph,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    train_with_hook(model, g, data, cfg, &mut |_, _, _| {})
}

pub fn train_with_hook(
    mut model: Model,
    g: &SparseGraph,
    data: &Dataset,
    cfg: &TrainConfig,
    hook: &mut StepHook<'_>,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    data.validate()?;
    if model.input_dim() != data.feature_dim() {
        return Err(Error::Shape(format!(
            "model expects {} input features, dataset has {}",
            model.input_dim(),
            data.feature_dim()
        )));
    }
    if model.class_count() < data.class_count {
        return Err(Error::Shape(format!(
            "model outputs {} classes, dataset has {}",
            model.class_count(),
            data.class_count
        )));
    }
    let ops = ShiftOperators::for_model(g, &model)?;

    // Non-finite intermediates surface as numerical errors from the kernel;
    // inside the training loop they mean divergence, labeled with the epoch.
    let as_divergence = |err: Error, epoch: usize| match err {
        Error::Numerical(message) => Error::Diverged { epoch, message },
        other => other,
    };
    let step = |model: &mut Model, group: ParamGroup, epoch: usize| -> Result<()> {
        let (logits, cache) = model
            .forward(&ops, &data.x)
            .map_err(|e| as_divergence(e, epoch))?;
        let (loss, dlogits) = cross_entropy(&logits, &data.y, &data.train_mask)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                message: "training loss is not finite".into(),
            });
        }
        let grads = model
            .backward(&ops, &cache, &dlogits)
            .map_err(|e| as_divergence(e, epoch))?;
        model.apply_step(&grads, cfg.lr, group, cfg.l2);
        Ok(())
    };

    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
    };
    let mut best_model = model.clone();
    let mut best_val = f64::NEG_INFINITY;
    for epoch in 1..=cfg.max_outer {
        match cfg.mode {
            TrainMode::Alternating => {
                for i in 0..cfg.i_h {
                    step(&mut model, ParamGroup::FilterCoeffs, epoch)?;
                    hook(i, StepPhase::FilterCoeffs, &model);
                }
                for i in 0..cfg.i_w {
                    step(&mut model, ParamGroup::Weights, epoch)?;
                    hook(i, StepPhase::Weights, &model);
                }
            }
            TrainMode::Joint => {
                for i in 0..(cfg.i_h + cfg.i_w) {
                    step(&mut model, ParamGroup::All, epoch)?;
                    hook(i, StepPhase::Joint, &model);
                }
            }
        }
        let eval = evaluate_with_ops(&model, &ops, data).map_err(|e| as_divergence(e, epoch))?;
        if !eval.loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                message: "evaluation loss is not finite".into(),
            });
        }
        history.epochs.push(EpochRecord {
            train_loss: eval.loss,
            train_acc: eval.train_acc,
            val_acc: eval.val_acc,
            test_acc: eval.test_acc,
        });
        if eval.val_acc > best_val {
            best_val = eval.val_acc;
            best_model = model.clone();
            history.best_epoch = epoch;
        }
        if epoch - history.best_epoch >= cfg.patience {
            break;
        }
    }
    if cfg.return_last {
        return Ok((model, history));
    }
    Ok((best_model, history))
}

/// Result of [`ablation_grid`]: mean test-accuracy advantage of alternating
/// over budget-matched joint training per `(i_h, i_w)` cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationResult {
    pub i_h_values: Vec<usize>,
    pub i_w_values: Vec<usize>,
    /// `deltas[row][col]` for `i_h_values[row]` and `i_w_values[col]`.
    pub deltas: Vec<Vec<f64>>,
}

/// Runs the inner-iteration ablation: for every grid cell and seed, trains
/// once alternating and once joint with an equal total step budget, and
/// records the mean difference in test accuracy (alternating minus joint).
/// Seeds vary the model initialization; cells run in parallel.
pub fn ablation_grid(
    base: &TrainConfig,
    specs: &[LayerSpec],
    i_h_values: &[usize],
    i_w_values: &[usize],
    g: &SparseGraph,
    data: &Dataset,
    seeds: &[u64],
) -> Result<AblationResult> {
    if i_h_values.is_empty() || i_w_values.is_empty() {
        return Err(Error::Config("ablation grid must be nonempty".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    use rayon::prelude::*;
    let cells: Vec<(usize, usize)> = i_h_values
        .iter()
        .flat_map(|&ih| i_w_values.iter().map(move |&iw| (ih, iw)))
        .collect();
    let deltas: Vec<f64> = cells
        .par_iter()
        .map(|&(i_h, i_w)| -> Result<f64> {
            let mut sum = 0.0;
            for &seed in seeds {
                let mut prng = Prng::substream(seed, "init");
                let model = Model::init(specs, &mut prng)?;
                let alt_cfg = TrainConfig {
                    i_h,
                    i_w,
                    seed,
                    mode: TrainMode::Alternating,
                    ..*base
                };
                let joint_cfg = TrainConfig {
                    mode: TrainMode::Joint,
                    ..alt_cfg
                };
                let (alt_model, _) = train(model.clone(), g, data, &alt_cfg)?;
                let (joint_model, _) = train(model, g, data, &joint_cfg)?;
                let alt_acc = evaluate(&alt_model, g, data)?.test_acc;
                let joint_acc = evaluate(&joint_model, g, data)?.test_acc;
                sum += alt_acc - joint_acc;
            }
            Ok(sum / seeds.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let rows = deltas
        .chunks(i_w_values.len())
        .map(<[f64]>::to_vec)
        .collect();
    Ok(AblationResult {
        i_h_values: i_h_values.to_vec(),
        i_w_values: i_w_values.to_vec(),
        deltas: rows,
    })
}

impl AblationResult {
    /// CSV rendering: header row of `i_w` values, first column the `i_h`
    /// values, cells to 4 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i_h/i_w");
        for iw in &self.i_w_values {
            let _ = write!(out, ",{iw}");
        }
        out.push('\n');
        for (ih, row) in self.i_h_values.iter().zip(&self.deltas) {
            let _ = write!(out, "{ih}");
            for v in row {
                let _ = write!(out, ",{v:.4}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn cell(&self, i_h: usize, i_w: usize) -> Option<f64> {
        let row = self.i_h_values.iter().position(|&v| v == i_h)?;
        let col = self.i_w_values.iter().position(|&v| v == i_w)?;
        Some(self.deltas[row][col])
    }
}
