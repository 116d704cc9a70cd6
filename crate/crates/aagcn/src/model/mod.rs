//! The convolutional layer family and the model built from it.
//!
//! Every layer computes `X' = sigma(M(X) W)` where `M` is the layer's
//! aggregation:
//!
//! - adaptive aggregation (`aagcn`): `M(X) = sum_r h_r A^r X` with a learned
//!   coefficient per hop and one shared weight matrix, so a layer carries
//!   `R + F_in * F_out` trainables;
//! - `aagcn_na`: same with the degree-normalized adjacency;
//! - `aagcn_nh`: same with the learned filter itself degree-normalized,
//!   `D_H^{-1/2} (sum_r h_r A^r) D_H^{-1/2}`, `D_H = diag(|H 1| + eps)`;
//! - `gcn`: the single-hop baseline over the self-loop-normalized operator;
//! - `fbgcn` / `fbgcn_na`: a filter bank with an independent weight matrix
//!   per hop (`R * F_in * F_out` trainables);
//! - `mlp`: graph-agnostic, `M(X) = X`.
//!
//! `sigma` is ReLU between layers and identity after the last; softmax lives
//! in the loss. Gradients for both parameter groups are hand-derived
//! reverse-mode in [`backward`](Model::backward).
//!
//! # Model JSON format
//!
//! [`Model::to_json`] emits a versioned document with exactly these fields:
//! `{"version": 1, "seed": <u64>, "layers": [{"kind", "operator", "in_dim",
//! "out_dim", "r", "eps", "h": [..]|null, "w": [[..row-major..], ..]}]}`.
//! `w` holds one row-major `in_dim x out_dim` array per weight matrix (one
//! for most kinds, `r` of them for filter banks). Round-trips are bit-exact
//! for all parameters.

mod backward;
mod forward;

pub use backward::{Gradients, LayerGrads, ParamGroup};
pub use forward::{ForwardCache, LayerCache};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::linalg::{glorot_uniform, DenseMatrix, Prng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    #[serde(rename = "aagcn")]
    Aagcn,
    #[serde(rename = "aagcn_na")]
    AagcnNormAdj,
    #[serde(rename = "aagcn_nh")]
    AagcnNormFilter,
    #[serde(rename = "gcn")]
    Gcn,
    #[serde(rename = "fbgcn")]
    FbGcn,
    #[serde(rename = "fbgcn_na")]
    FbGcnNormAdj,
    #[serde(rename = "mlp")]
    Mlp,
}

impl LayerKind {
    /// Kinds whose aggregation applies a learned-coefficient filter.
    pub fn has_filter_coefficients(self) -> bool {
        matches!(
            self,
            LayerKind::Aagcn | LayerKind::AagcnNormAdj | LayerKind::AagcnNormFilter
        )
    }

    /// Kinds carrying one weight matrix per hop.
    pub fn is_filter_bank(self) -> bool {
        matches!(self, LayerKind::FbGcn | LayerKind::FbGcnNormAdj)
    }

    /// Which shift operator the aggregation runs on.
    pub fn operator(self) -> OperatorKind {
        match self {
            LayerKind::Aagcn | LayerKind::AagcnNormFilter | LayerKind::FbGcn => OperatorKind::Raw,
            LayerKind::AagcnNormAdj | LayerKind::FbGcnNormAdj => OperatorKind::SymNorm,
            LayerKind::Gcn => OperatorKind::Gcn,
            LayerKind::Mlp => OperatorKind::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Aagcn => "aagcn",
            LayerKind::AagcnNormAdj => "aagcn_na",
            LayerKind::AagcnNormFilter => "aagcn_nh",
            LayerKind::Gcn => "gcn",
            LayerKind::FbGcn => "fbgcn",
            LayerKind::FbGcnNormAdj => "fbgcn_na",
            LayerKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "aagcn" => Ok(LayerKind::Aagcn),
            "aagcn_na" => Ok(LayerKind::AagcnNormAdj),
            "aagcn_nh" => Ok(LayerKind::AagcnNormFilter),
            "gcn" => Ok(LayerKind::Gcn),
            "fbgcn" => Ok(LayerKind::FbGcn),
            "fbgcn_na" => Ok(LayerKind::FbGcnNormAdj),
            "mlp" => Ok(LayerKind::Mlp),
            other => Err(Error::Config(format!(
                "unknown layer kind {other:?}; expected one of aagcn, aagcn_na, aagcn_nh, gcn, fbgcn, fbgcn_na, mlp"
            ))),
        }
    }
}

impl std::fmt::Display for LayerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "sym_norm")]
    SymNorm,
    #[serde(rename = "gcn")]
    Gcn,
    #[serde(rename = "none")]
    None,
}

/// Static description of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_dim: usize,
    pub out_dim: usize,
    /// Filter order R; ignored by `gcn` and `mlp`.
    pub r: usize,
    /// Filter-normalization epsilon, used by `aagcn_nh` only.
    pub eps: f64,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::Invalid("layer dimensions must be at least 1".into()));
        }
        let needs_r = self.kind.has_filter_coefficients() || self.kind.is_filter_bank();
        if needs_r && self.r == 0 {
            return Err(Error::Invalid(format!(
                "{} layer needs filter order r >= 1",
                self.kind
            )));
        }
        if self.kind == LayerKind::AagcnNormFilter && !(self.eps > 0.0) {
            return Err(Error::Invalid("aagcn_nh needs eps > 0".into()));
        }
        Ok(())
    }

    /// Number of trainable scalars in a layer with this spec.
    pub fn param_count(&self) -> usize {
        let wsize = self.in_dim * self.out_dim;
        match self.kind {
            LayerKind::Aagcn | LayerKind::AagcnNormAdj | LayerKind::AagcnNormFilter => {
                self.r + wsize
            }
            LayerKind::FbGcn | LayerKind::FbGcnNormAdj => self.r * wsize,
            LayerKind::Gcn | LayerKind::Mlp => wsize,
        }
    }
}

/// Trainable parameters of one layer: filter coefficients (when the kind
/// has them) and one or `R` weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub h: Option<Vec<f64>>,
    pub w: Vec<DenseMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub params: LayerParams,
}

impl Layer {
    fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let expected_w = if self.spec.kind.is_filter_bank() {
            self.spec.r
        } else {
            1
        };
        if self.params.w.len() != expected_w {
            return Err(Error::Invalid(format!(
                "{} layer expects {expected_w} weight matrices, has {}",
                self.spec.kind,
                self.params.w.len()
            )));
        }
        for w in &self.params.w {
            if w.rows() != self.spec.in_dim || w.cols() != self.spec.out_dim {
                return Err(Error::Shape(format!(
                    "weight matrix is {}x{}, spec says {}x{}",
                    w.rows(),
                    w.cols(),
                    self.spec.in_dim,
                    self.spec.out_dim
                )));
            }
            w.ensure_finite("layer weights")?;
        }
        match (&self.params.h, self.spec.kind.has_filter_coefficients()) {
            (Some(h), true) => {
                if h.len() != self.spec.r {
                    return Err(Error::Shape(format!(
                        "filter has {} coefficients, spec says {}",
                        h.len(),
                        self.spec.r
                    )));
                }
                if !h.iter().all(|v| v.is_finite()) {
                    return Err(Error::Numerical("non-finite filter coefficient".into()));
                }
            }
            (None, false) => {}
            (Some(_), false) => {
                return Err(Error::Invalid(format!(
                    "{} layer does not take filter coefficients",
                    self.spec.kind
                )))
            }
            (None, true) => {
                return Err(Error::Invalid(format!(
                    "{} layer is missing filter coefficients",
                    self.spec.kind
                )))
            }
        }
        Ok(())
    }
}

/// A stack of layers with chained dimensions; the last layer outputs
/// class-count logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    layers: Vec<Layer>,
}

impl Model {
    /// Initializes a model: weights via Glorot uniform in layer order,
    /// filter coefficients at `(1, 1, 0, ..., 0)` truncated to `R` so every
    /// filter layer starts as the `A + I` aggregation.
    pub fn init(specs: &[LayerSpec], prng: &mut Prng) -> Result<Model> {
        if specs.is_empty() {
            return Err(Error::Invalid("model needs at least one layer".into()));
        }
        for pair in specs.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Shape(format!(
                    "layer dims do not chain: {} out vs {} in",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            spec.validate()?;
            let w_count = if spec.kind.is_filter_bank() { spec.r } else { 1 };
            let w: Vec<DenseMatrix> = (0..w_count)
                .map(|_| glorot_uniform(spec.in_dim, spec.out_dim, prng))
                .collect();
            let h = if spec.kind.has_filter_coefficients() {
                let mut h = vec![0.0; spec.r];
                h[0] = 1.0;
                if spec.r > 1 {
                    h[1] = 1.0;
                }
                Some(h)
            } else {
                None
            };
            layers.push(Layer {
                spec: *spec,
                params: LayerParams { h, w },
            });
        }
        let model = Model { layers };
        model.validate()?;
        Ok(model)
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Model> {
        let model = Model { layers };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Invalid("model has no layers".into()));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        for pair in self.layers.windows(2) {
            if pair[0].spec.out_dim != pair[1].spec.in_dim {
                return Err(Error::Shape("layer dims do not chain".into()));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access to layers, for freezing or hand-setting parameters.
    /// Call [`Model::validate`] after structural edits.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.in_dim
    }

    /// Output width of the last layer, i.e. the class count.
    pub fn class_count(&self) -> usize {
        self.layers.last().unwrap().spec.out_dim
    }

    /// Total trainable scalars across layers.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.spec.param_count()).sum()
    }

    /// Serializes parameters and specs; see the module docs for the format.
    pub fn to_json(&self, seed: u64) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            seed,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    kind: l.spec.kind,
                    operator: l.spec.kind.operator(),
                    in_dim: l.spec.in_dim,
                    out_dim: l.spec.out_dim,
                    r: l.spec.r,
                    eps: l.spec.eps,
                    h: l.params.h.clone(),
                    w: l.params.w.iter().map(|m| m.data().to_vec()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    /// Parses [`Model::to_json`] output; returns the model and the recorded
    /// seed.
    pub fn from_json(text: &str) -> Result<(Model, u64)> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("model JSON: {e}")))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                file.version
            )));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for lf in file.layers {
            if lf.operator != lf.kind.operator() {
                return Err(Error::Config(format!(
                    "layer kind {} is inconsistent with recorded operator",
                    lf.kind
                )));
            }
            let w = lf
                .w
                .into_iter()
                .map(|data| DenseMatrix::from_vec(lf.in_dim, lf.out_dim, data))
                .collect::<Result<Vec<_>>>()?;
            layers.push(Layer {
                spec: LayerSpec {
                    kind: lf.kind,
                    in_dim: lf.in_dim,
                    out_dim: lf.out_dim,
                    r: lf.r,
                    eps: lf.eps,
                },
                params: LayerParams { h: lf.h, w },
            });
        }
        let model = Model::from_layers(layers)?;
        Ok((model, file.seed))
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    seed: u64,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    kind: LayerKind,
    operator: OperatorKind,
    in_dim: usize,
    out_dim: usize,
    r: usize,
    eps: f64,
    h: Option<Vec<f64>>,
    w: Vec<Vec<f64>>,
}

/// The shift operators a model's layers aggregate over, prepared once per
/// graph. Normalized variants are built only when some layer needs them.
#[derive(Debug, Clone)]
pub struct ShiftOperators {
    raw: SparseGraph,
    sym: Option<SparseGraph>,
    gcn: Option<SparseGraph>,
}

impl ShiftOperators {
    pub fn for_model(g: &SparseGraph, model: &Model) -> Result<ShiftOperators> {
        let kinds: Vec<LayerKind> = model.layers.iter().map(|l| l.spec.kind).collect();
        Self::for_kinds(g, &kinds)
    }

    pub fn for_kinds(g: &SparseGraph, kinds: &[LayerKind]) -> Result<ShiftOperators> {
        let needs_sym = kinds.iter().any(|k| k.operator() == OperatorKind::SymNorm);
        let needs_gcn = kinds.iter().any(|k| k.operator() == OperatorKind::Gcn);
        Ok(ShiftOperators {
            raw: g.clone(),
            sym: if needs_sym {
                Some(g.normalize_adjacency()?)
            } else {
                None
            },
            gcn: if needs_gcn { Some(g.gcn_operator()?) } else { None },
        })
    }

    pub fn n(&self) -> usize {
        self.raw.n()
    }

    pub fn raw(&self) -> &SparseGraph {
        &self.raw
    }

    pub(crate) fn get(&self, kind: OperatorKind) -> Result<&SparseGraph> {
        match kind {
            OperatorKind::Raw => Ok(&self.raw),
            OperatorKind::SymNorm => self.sym.as_ref().ok_or_else(|| {
                Error::Invalid("normalized adjacency was not prepared for this model".into())
            }),
            OperatorKind::Gcn => self.gcn.as_ref().ok_or_else(|| {
                Error::Invalid("gcn operator was not prepared for this model".into())
            }),
            OperatorKind::None => Ok(&self.raw),
        }
    }
}

/// Per-row argmax over logits; ties resolve to the lowest class index.
pub fn predict(logits: &DenseMatrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
