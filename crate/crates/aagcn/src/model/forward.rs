//! Forward evaluation with the bookkeeping backward needs.

use super::{LayerKind, Model, ShiftOperators};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Everything backward needs about one layer's forward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub(crate) kind: LayerKind,
    /// Shifted inputs `P_r = A^r X` (for `aagcn_nh`, shifts of the
    /// prescaled input). Empty for `gcn`/`mlp`.
    pub(crate) shifted: Vec<DenseMatrix>,
    /// The pre-weight aggregate `M` with `Z = M W`; `None` for filter
    /// banks, which have no single aggregate.
    pub(crate) aggregated: Option<DenseMatrix>,
    pub(crate) pre_activation: DenseMatrix,
    /// `d^{-1/2}` row scaling used by `aagcn_nh`.
    pub(crate) nh_scale: Option<Vec<f64>>,
    /// Filter degrees `d = |H 1| + eps` used by `aagcn_nh`.
    pub(crate) nh_degrees: Option<Vec<f64>>,
}

impl LayerCache {
    /// Filter degrees recorded by an `aagcn_nh` layer's forward pass.
    pub fn filter_degrees(&self) -> Option<&[f64]> {
        self.nh_degrees.as_deref()
    }
}

/// Cache of one forward pass, valid only for the `(operators, input,
/// params)` triple that produced it.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) layers: Vec<LayerCache>,
    pub(crate) n: usize,
}

impl ForwardCache {
    pub fn layer(&self, index: usize) -> &LayerCache {
        &self.layers[index]
    }
}

impl Model {
    /// Runs the model over a raw graph, preparing the needed shift
    /// operators internally. Prefer [`Model::forward`] with prepared
    /// [`ShiftOperators`] inside loops.
    pub fn forward_on_graph(
        &self,
        g: &crate::graph::SparseGraph,
        x: &DenseMatrix,
    ) -> Result<(DenseMatrix, ForwardCache)> {
        let ops = ShiftOperators::for_model(g, self)?;
        self.forward(&ops, x)
    }

    /// Forward pass; returns raw logits (softmax lives in the loss) and the
    /// cache for [`Model::backward`]. Fails on shape mismatches and on
    /// non-finite intermediates, which signal divergence.
    pub fn forward(
        &self,
        ops: &ShiftOperators,
        x: &DenseMatrix,
    ) -> Result<(DenseMatrix, ForwardCache)> {
        self.forward_impl(ops, x, None)
    }

    /// Forward pass with the `aagcn_nh` filter degrees pinned to the given
    /// vectors (one entry per layer, `None` for layers without them).
    ///
    /// Training treats those degrees as constants during backpropagation,
    /// so gradient checks must difference a loss whose degrees are frozen
    /// the same way; this entry point exists for exactly that.
    pub fn forward_with_frozen_degrees(
        &self,
        ops: &ShiftOperators,
        x: &DenseMatrix,
        degrees: &[Option<Vec<f64>>],
    ) -> Result<(DenseMatrix, ForwardCache)> {
        if degrees.len() != self.layers().len() {
            return Err(Error::Shape(format!(
                "{} frozen degree slots for {} layers",
                degrees.len(),
                self.layers().len()
            )));
        }
        self.forward_impl(ops, x, Some(degrees))
    }

    fn forward_impl(
        &self,
        ops: &ShiftOperators,
        x: &DenseMatrix,
        frozen_degrees: Option<&[Option<Vec<f64>>]>,
    ) -> Result<(DenseMatrix, ForwardCache)> {
        if x.rows() != ops.n() {
            return Err(Error::Shape(format!(
                "input has {} rows for a {}-node graph",
                x.rows(),
                ops.n()
            )));
        }
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, first layer expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let last = self.layers().len() - 1;
        let mut caches = Vec::with_capacity(self.layers().len());
        let mut current = x.clone();
        for (idx, layer) in self.layers().iter().enumerate() {
            let spec = &layer.spec;
            let op = ops.get(spec.kind.operator())?;
            let mut nh_scale = None;
            let mut nh_degrees = None;
            let mut aggregated = None;
            let mut shifted: Vec<DenseMatrix> = Vec::new();

            let pre_activation = match spec.kind {
                LayerKind::Mlp => {
                    let agg = current.clone();
                    let z = agg.matmul(&layer.params.w[0])?;
                    aggregated = Some(agg);
                    z
                }
                LayerKind::Gcn => {
                    let agg = op.spmm(&current)?;
                    let z = agg.matmul(&layer.params.w[0])?;
                    aggregated = Some(agg);
                    z
                }
                LayerKind::Aagcn | LayerKind::AagcnNormAdj => {
                    let h = layer.params.h.as_ref().unwrap();
                    shifted = shift_stack(op, &current, spec.r)?;
                    let agg = weighted_sum(&shifted, h)?;
                    let z = agg.matmul(&layer.params.w[0])?;
                    aggregated = Some(agg);
                    z
                }
                LayerKind::AagcnNormFilter => {
                    let h = layer.params.h.as_ref().unwrap();
                    let d = match frozen_degrees.and_then(|f| f[idx].clone()) {
                        Some(d) => {
                            if d.len() != ops.n() {
                                return Err(Error::Shape(
                                    "frozen degree vector has wrong length".into(),
                                ));
                            }
                            d
                        }
                        None => op.filter_degrees(h, spec.eps)?,
                    };
                    let s: Vec<f64> = d.iter().map(|&v| 1.0 / v.sqrt()).collect();
                    let scaled_in = current.scale_rows(&s)?;
                    shifted = shift_stack(op, &scaled_in, spec.r)?;
                    let filtered = weighted_sum(&shifted, h)?;
                    let agg = filtered.scale_rows(&s)?;
                    let z = agg.matmul(&layer.params.w[0])?;
                    nh_scale = Some(s);
                    nh_degrees = Some(d);
                    aggregated = Some(agg);
                    z
                }
                LayerKind::FbGcn | LayerKind::FbGcnNormAdj => {
                    shifted = shift_stack(op, &current, spec.r)?;
                    let mut z = shifted[0].matmul(&layer.params.w[0])?;
                    for (p, w) in shifted.iter().zip(&layer.params.w).skip(1) {
                        z.add_scaled(&p.matmul(w)?, 1.0)?;
                    }
                    z
                }
            };
            pre_activation.ensure_finite("layer pre-activation")?;

            current = if idx == last {
                pre_activation.clone()
            } else {
                relu(&pre_activation)
            };
            caches.push(LayerCache {
                kind: spec.kind,
                shifted,
                aggregated,
                pre_activation,
                nh_scale,
                nh_degrees,
            });
        }
        Ok((
            current,
            ForwardCache {
                layers: caches,
                n: ops.n(),
            },
        ))
    }
}

/// `P_0 = X, P_r = A P_{r-1}` for `r < order`.
fn shift_stack(
    op: &crate::graph::SparseGraph,
    x: &DenseMatrix,
    order: usize,
) -> Result<Vec<DenseMatrix>> {
    let mut stack = Vec::with_capacity(order);
    stack.push(x.clone());
    for _ in 1..order {
        let next = op.spmm(stack.last().unwrap())?;
        stack.push(next);
    }
    Ok(stack)
}

/// `sum_r h[r] P_r`, accumulated in hop order.
fn weighted_sum(stack: &[DenseMatrix], h: &[f64]) -> Result<DenseMatrix> {
    let mut acc = stack[0].clone();
    acc.scale(h[0]);
    for (p, &c) in stack.iter().zip(h).skip(1) {
        acc.add_scaled(p, c)?;
    }
    Ok(acc)
}

pub(crate) fn relu(z: &DenseMatrix) -> DenseMatrix {
    let mut out = z.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{LayerKind, LayerParams, LayerSpec, Model};
    use super::*;
    use crate::graph::SparseGraph;
    use crate::linalg::{glorot_uniform, DenseMatrix, Prng};

    fn spec(kind: LayerKind, in_dim: usize, out_dim: usize, r: usize) -> LayerSpec {
        LayerSpec {
            kind,
            in_dim,
            out_dim,
            r,
            eps: 1e-6,
        }
    }

    fn random_graph(n: usize, density: f64, prng: &mut Prng) -> SparseGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if prng.next_f64() < density {
                    edges.push((i, j, 1.0));
                }
            }
        }
        SparseGraph::from_edge_list(&edges, n, true).unwrap()
    }

    #[test]
    fn identity_filter_identity_weights_pass_through() {
        let g = random_graph(5, 0.4, &mut Prng::new(1));
        let mut model = Model::init(&[spec(LayerKind::Aagcn, 5, 5, 2)], &mut Prng::new(2)).unwrap();
        model.layers_mut()[0].params.h = Some(vec![1.0, 0.0]);
        model.layers_mut()[0].params.w = vec![DenseMatrix::identity(5)];
        let x = glorot_uniform(5, 5, &mut Prng::new(3));
        let (logits, _) = model.forward_on_graph(&g, &x).unwrap();
        assert_eq!(logits, x);
    }

    #[test]
    fn aagcn_order_one_is_mlp_bitwise() {
        let g = random_graph(8, 0.3, &mut Prng::new(4));
        let x = glorot_uniform(8, 3, &mut Prng::new(5));
        let specs_a = [spec(LayerKind::Aagcn, 3, 4, 1), spec(LayerKind::Aagcn, 4, 2, 1)];
        let specs_m = [spec(LayerKind::Mlp, 3, 4, 1), spec(LayerKind::Mlp, 4, 2, 1)];
        let aagcn = Model::init(&specs_a, &mut Prng::new(6)).unwrap();
        let mlp = Model::init(&specs_m, &mut Prng::new(6)).unwrap();
        let (la, _) = aagcn.forward_on_graph(&g, &x).unwrap();
        let (lm, _) = mlp.forward_on_graph(&g, &x).unwrap();
        assert_eq!(la, lm);
    }

    #[test]
    fn pure_shift_on_gcn_operator_reproduces_gcn_bitwise() {
        // The gcn layer computes sigma(A~ X W); an adaptive layer over the
        // same operator with h = (0, 1) applies exactly that one-hop shift.
        let g = random_graph(9, 0.3, &mut Prng::new(7));
        let gcn_graph = g.gcn_operator().unwrap();
        let x = glorot_uniform(9, 3, &mut Prng::new(8));
        let mut aagcn = Model::init(
            &[spec(LayerKind::Aagcn, 3, 4, 2), spec(LayerKind::Aagcn, 4, 2, 2)],
            &mut Prng::new(9),
        )
        .unwrap();
        for layer in aagcn.layers_mut() {
            layer.params.h = Some(vec![0.0, 1.0]);
        }
        let gcn = {
            let m = Model::init(
                &[spec(LayerKind::Gcn, 3, 4, 1), spec(LayerKind::Gcn, 4, 2, 1)],
                &mut Prng::new(9),
            )
            .unwrap();
            m
        };
        let (la, _) = aagcn.forward_on_graph(&gcn_graph, &x).unwrap();
        let (lg, _) = gcn.forward_on_graph(&g, &x).unwrap();
        assert_eq!(la, lg);
    }

    #[test]
    fn two_layer_aagcn_matches_dense_reimplementation() {
        // Dense oracle: materialize A, apply h0 I + h1 A + h2 A^2 by dense
        // products, multiply by W, ReLU between layers.
        let n = 12;
        let mut prng = Prng::new(10);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if prng.next_f64() < 0.35 {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let g = SparseGraph::from_edge_list(&edges, n, true).unwrap();
        let mut a = vec![vec![0.0f64; n]; n];
        for &(i, j, w) in &edges {
            a[i][j] += w;
            a[j][i] += w;
        }
        let x = glorot_uniform(n, 4, &mut prng);
        let model = Model::init(
            &[spec(LayerKind::Aagcn, 4, 6, 3), spec(LayerKind::Aagcn, 6, 3, 3)],
            &mut Prng::new(11),
        )
        .unwrap();
        let (got, _) = model.forward_on_graph(&g, &x).unwrap();

        let dense_mul = |m: &[Vec<f64>], x: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            let f = x[0].len();
            let mut out = vec![vec![0.0; f]; n];
            for i in 0..n {
                for k in 0..n {
                    for c in 0..f {
                        out[i][c] += m[i][k] * x[k][c];
                    }
                }
            }
            out
        };
        let mut cur: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).to_vec()).collect();
        for (li, layer) in model.layers().iter().enumerate() {
            let h = layer.params.h.as_ref().unwrap();
            let mut acc: Vec<Vec<f64>> = cur
                .iter()
                .map(|row| row.iter().map(|&v| v * h[0]).collect())
                .collect();
            let mut power = cur.clone();
            for &c in &h[1..] {
                power = dense_mul(&a, &power);
                for i in 0..n {
                    for (av, pv) in acc[i].iter_mut().zip(&power[i]) {
                        *av += c * pv;
                    }
                }
            }
            let w = &layer.params.w[0];
            let mut z = vec![vec![0.0; w.cols()]; n];
            for i in 0..n {
                for k in 0..w.rows() {
                    for c in 0..w.cols() {
                        z[i][c] += acc[i][k] * w.get(k, c);
                    }
                }
            }
            if li + 1 < model.layers().len() {
                for row in z.iter_mut() {
                    for v in row.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                }
            }
            cur = z;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for c in 0..got.cols() {
                worst = worst.max((got.get(i, c) - cur[i][c]).abs());
            }
        }
        assert!(worst < 1e-10, "max abs diff {worst}");
    }

    #[test]
    fn frozen_degrees_match_default_forward_when_equal() {
        let g = random_graph(10, 0.3, &mut Prng::new(12));
        let x = glorot_uniform(10, 3, &mut Prng::new(13));
        let model =
            Model::init(&[spec(LayerKind::AagcnNormFilter, 3, 2, 3)], &mut Prng::new(14)).unwrap();
        let ops = ShiftOperators::for_model(&g, &model).unwrap();
        let (logits, cache) = model.forward(&ops, &x).unwrap();
        let d = cache.layer(0).filter_degrees().unwrap().to_vec();
        let (frozen_logits, _) = model
            .forward_with_frozen_degrees(&ops, &x, &[Some(d)])
            .unwrap();
        assert_eq!(logits, frozen_logits);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let g = random_graph(6, 0.4, &mut Prng::new(15));
        let model = Model::init(&[spec(LayerKind::Aagcn, 3, 2, 2)], &mut Prng::new(16)).unwrap();
        // wrong node count
        let x = glorot_uniform(5, 3, &mut Prng::new(17));
        assert!(model.forward_on_graph(&g, &x).is_err());
        // wrong feature count
        let x = glorot_uniform(6, 4, &mut Prng::new(18));
        assert!(model.forward_on_graph(&g, &x).is_err());
    }

    #[test]
    fn mixed_kind_stack_runs() {
        let g = random_graph(7, 0.4, &mut Prng::new(19));
        let x = glorot_uniform(7, 3, &mut Prng::new(20));
        let model = Model::init(
            &[
                spec(LayerKind::FbGcn, 3, 5, 2),
                spec(LayerKind::AagcnNormAdj, 5, 4, 2),
                spec(LayerKind::Gcn, 4, 2, 1),
            ],
            &mut Prng::new(21),
        )
        .unwrap();
        let (logits, cache) = model.forward_on_graph(&g, &x).unwrap();
        assert_eq!(logits.rows(), 7);
        assert_eq!(logits.cols(), 2);
        assert_eq!(cache.layer(0).shifted.len(), 2);
        assert!(cache.layer(2).shifted.is_empty());
    }
}
