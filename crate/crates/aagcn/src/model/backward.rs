//! Hand-derived reverse-mode gradients for both parameter groups.
//!
//! With `G` the loss gradient at a layer's pre-activation (the incoming
//! gradient masked by ReLU'), `P_r` the cached shifted inputs and `M` the
//! cached pre-weight aggregate:
//!
//! - `dW = M^T G`
//! - `dh_r = <P_r, G W^T>` (Frobenius inner product; for `aagcn_nh` the
//!   product is additionally row-scaled by the frozen `d^{-1/2}`)
//! - input gradient `sum_r h_r A^r (G W^T)`, reusing the filter because the
//!   shift operator is symmetric; filter banks use the per-hop analogue.
//!
//! The `aagcn_nh` degrees `d = |H 1| + eps` depend on `h` but are treated
//! as constants here (they are recomputed every forward pass). The exact
//! derivative through `|H 1|^{-1/2}` is ill-conditioned near zero degrees;
//! gradient checks therefore difference the loss with the degrees frozen
//! via [`Model::forward_with_frozen_degrees`].

use super::forward::ForwardCache;
use super::{LayerKind, Model, ShiftOperators};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Loss gradients for one layer, shaped like its parameters.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub h: Option<Vec<f64>>,
    pub w: Vec<DenseMatrix>,
}

/// Loss gradients for every layer, in layer order.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

/// Which parameter block an update step touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    /// Filter coefficients `h` only.
    FilterCoeffs,
    /// Weight matrices `W` only.
    Weights,
    /// Everything at once.
    All,
}

impl Model {
    /// Exact reverse-mode gradients of the scalar loss whose logit gradient
    /// is `dlogits`, under the frozen-degree convention for `aagcn_nh`.
    pub fn backward(
        &self,
        ops: &ShiftOperators,
        cache: &ForwardCache,
        dlogits: &DenseMatrix,
    ) -> Result<Gradients> {
        self.check_cache(cache)?;
        if dlogits.rows() != cache.n || dlogits.cols() != self.class_count() {
            return Err(Error::Shape(format!(
                "dlogits is {}x{}, expected {}x{}",
                dlogits.rows(),
                dlogits.cols(),
                cache.n,
                self.class_count()
            )));
        }

        let last = self.layers().len() - 1;
        let mut grads: Vec<LayerGrads> = Vec::with_capacity(self.layers().len());
        let mut upstream = dlogits.clone();
        for (idx, layer) in self.layers().iter().enumerate().rev() {
            let lc = cache.layer(idx);
            // Pre-activation gradient: identity after the last layer, ReLU'
            // elsewhere (zero subgradient at exactly zero).
            let g = if idx == last {
                upstream
            } else {
                relu_mask(&upstream, &lc.pre_activation)
            };
            let op = ops.get(layer.spec.kind.operator())?;

            let lg = match layer.spec.kind {
                LayerKind::Mlp => {
                    let agg = lc.aggregated.as_ref().unwrap();
                    let dw = agg.transpose().matmul(&g)?;
                    if idx > 0 {
                        upstream = g.matmul(&layer.params.w[0].transpose())?;
                    } else {
                        upstream = g;
                    }
                    LayerGrads {
                        h: None,
                        w: vec![dw],
                    }
                }
                LayerKind::Gcn => {
                    let agg = lc.aggregated.as_ref().unwrap();
                    let dw = agg.transpose().matmul(&g)?;
                    if idx > 0 {
                        let gw = g.matmul(&layer.params.w[0].transpose())?;
                        upstream = op.spmm(&gw)?;
                    } else {
                        upstream = g;
                    }
                    LayerGrads {
                        h: None,
                        w: vec![dw],
                    }
                }
                LayerKind::Aagcn | LayerKind::AagcnNormAdj => {
                    let h = layer.params.h.as_ref().unwrap();
                    let agg = lc.aggregated.as_ref().unwrap();
                    let dw = agg.transpose().matmul(&g)?;
                    let gw = g.matmul(&layer.params.w[0].transpose())?;
                    let dh = lc
                        .shifted
                        .iter()
                        .map(|p| p.frobenius_inner(&gw))
                        .collect::<Result<Vec<_>>>()?;
                    if idx > 0 {
                        upstream = op.apply_filter(h, &gw)?;
                    } else {
                        upstream = g;
                    }
                    LayerGrads {
                        h: Some(dh),
                        w: vec![dw],
                    }
                }
                LayerKind::AagcnNormFilter => {
                    let h = layer.params.h.as_ref().unwrap();
                    let s = lc.nh_scale.as_ref().unwrap();
                    let agg = lc.aggregated.as_ref().unwrap();
                    let dw = agg.transpose().matmul(&g)?;
                    let gw = g.matmul(&layer.params.w[0].transpose())?;
                    let sgw = gw.scale_rows(s)?;
                    // Cached P_r are shifts of the prescaled input, so the
                    // same inner product applies.
                    let dh = lc
                        .shifted
                        .iter()
                        .map(|p| p.frobenius_inner(&sgw))
                        .collect::<Result<Vec<_>>>()?;
                    if idx > 0 {
                        let du = op.apply_filter(h, &sgw)?;
                        upstream = du.scale_rows(s)?;
                    } else {
                        upstream = g;
                    }
                    LayerGrads {
                        h: Some(dh),
                        w: vec![dw],
                    }
                }
                LayerKind::FbGcn | LayerKind::FbGcnNormAdj => {
                    let dws = lc
                        .shifted
                        .iter()
                        .map(|p| p.transpose().matmul(&g))
                        .collect::<Result<Vec<_>>>()?;
                    if idx > 0 {
                        // Horner form of sum_r A^r (G W_r^T).
                        let r = layer.params.w.len();
                        let mut acc = g.matmul(&layer.params.w[r - 1].transpose())?;
                        for w in layer.params.w[..r - 1].iter().rev() {
                            acc = op.spmm(&acc)?;
                            acc.add_scaled(&g.matmul(&w.transpose())?, 1.0)?;
                        }
                        upstream = acc;
                    } else {
                        upstream = g;
                    }
                    LayerGrads { h: None, w: dws }
                }
            };
            grads.push(lg);
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// One plain gradient-descent step on the selected parameter group.
    /// The optional L2 penalty `l2 * ||W||_F^2 / 2` applies to weight
    /// matrices only, never to filter coefficients.
    pub fn apply_step(&mut self, grads: &Gradients, lr: f64, group: ParamGroup, l2: f64) {
        assert_eq!(grads.layers.len(), self.layers().len());
        let update_h = matches!(group, ParamGroup::FilterCoeffs | ParamGroup::All);
        let update_w = matches!(group, ParamGroup::Weights | ParamGroup::All);
        for (layer, lg) in self.layers_mut().iter_mut().zip(&grads.layers) {
            if update_h {
                if let (Some(h), Some(dh)) = (layer.params.h.as_mut(), lg.h.as_ref()) {
                    for (v, &d) in h.iter_mut().zip(dh) {
                        *v -= lr * d;
                    }
                }
            }
            if update_w {
                for (w, dw) in layer.params.w.iter_mut().zip(&lg.w) {
                    let data = w.data_mut();
                    for (v, &d) in data.iter_mut().zip(dw.data()) {
                        *v -= lr * (d + l2 * *v);
                    }
                }
            }
        }
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.layers.len() != self.layers().len() {
            return Err(Error::Invalid(format!(
                "cache has {} layers, model has {}",
                cache.layers.len(),
                self.layers().len()
            )));
        }
        for (layer, lc) in self.layers().iter().zip(&cache.layers) {
            if lc.kind != layer.spec.kind {
                return Err(Error::Invalid(
                    "cache does not match model: layer kinds differ".into(),
                ));
            }
            if lc.pre_activation.rows() != cache.n || lc.pre_activation.cols() != layer.spec.out_dim
            {
                return Err(Error::Invalid(
                    "cache does not match model: activation shapes differ".into(),
                ));
            }
            let expect_shifted = match layer.spec.kind {
                LayerKind::Gcn | LayerKind::Mlp => 0,
                _ => layer.spec.r,
            };
            if lc.shifted.len() != expect_shifted {
                return Err(Error::Invalid(
                    "cache does not match model: shift stacks differ".into(),
                ));
            }
        }
        Ok(())
    }
}

fn relu_mask(upstream: &DenseMatrix, pre_activation: &DenseMatrix) -> DenseMatrix {
    let mut out = upstream.clone();
    for (g, &z) in out.data_mut().iter_mut().zip(pre_activation.data()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    out
}
