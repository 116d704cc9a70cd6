//! Acceptance suite: one test per release criterion, each printing its
//! measured numbers. Run with
//! `cargo test -p aagcn --test acceptance -- --nocapture`.

mod common;

use std::time::Instant;

use aagcn::cli::{dataset_for_seed, CsbmConfig, DatasetSource};
use aagcn::data::{gen_csbm, CsbmParams, Dataset};
use aagcn::graph::SparseGraph;
use aagcn::linalg::{glorot_uniform, sym_eig, DenseMatrix, Prng};
use aagcn::model::{LayerKind, LayerSpec, Model, ShiftOperators};
use aagcn::spectral::{band_energy_ratio, compute_spectrum, frequency_response, Band};
use aagcn::training::{ablation_grid, cross_entropy, evaluate, train, TrainConfig, TrainMode};

use common::*;

fn spec(kind: LayerKind, in_dim: usize, out_dim: usize, r: usize) -> LayerSpec {
    LayerSpec {
        kind,
        in_dim,
        out_dim,
        r,
        eps: 1e-6,
    }
}

const ALL_KINDS: [LayerKind; 7] = [
    LayerKind::Aagcn,
    LayerKind::AagcnNormAdj,
    LayerKind::AagcnNormFilter,
    LayerKind::Gcn,
    LayerKind::FbGcn,
    LayerKind::FbGcnNormAdj,
    LayerKind::Mlp,
];

/// Criterion 1: sparse polynomial filtering matches the densified
/// `sum_r h_r A^r X` on 50 random instances to 1e-10, in under 5 s.
#[test]
fn criterion_1_filter_matches_dense_oracle() {
    let started = Instant::now();
    let mut prng = Prng::new(0xF117E5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 5 + prng.next_range(36) as usize; // up to 40
        let density = 0.05 + 0.25 * prng.next_f64(); // up to 0.3
        let edges = random_edges(n, density, &mut prng);
        let g = SparseGraph::from_edge_list(&edges, n, true).unwrap();
        let a = dense_from_edges(&edges, n);
        let r = 1 + prng.next_range(5) as usize;
        let h: Vec<f64> = (0..r).map(|_| 2.0 * prng.next_f64() - 1.0).collect();
        let f = 1 + prng.next_range(8) as usize;
        let x = glorot_uniform(n, f, &mut prng);
        let got = g.apply_filter(&h, &x).unwrap();
        let want = dense_filter(&a, &h, &x);
        worst = worst.max(got.max_abs_diff(&want));
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!("criterion 1: max abs error {worst:.3e} over 50 graphs in {elapsed:.2} s");
    assert!(worst < 1e-10, "filter oracle error {worst}");
    assert!(elapsed < 5.0, "took {elapsed:.2} s, budget 5 s");
}

/// Criterion 2: permutation equivariance `f(PX | PAP^T) = P f(X | A)` for
/// every layer kind, 10 random triples at N = 30, to 1e-9.
#[test]
fn criterion_2_permutation_equivariance() {
    let n = 30;
    let mut worst_overall: f64 = 0.0;
    for kind in ALL_KINDS {
        let mut prng = Prng::new(0x9E12 + kind as u64);
        for _ in 0..10 {
            let g = random_graph(n, 0.2, &mut prng);
            let x = glorot_uniform(n, 5, &mut prng);
            let model = Model::init(
                &[spec(kind, 5, 7, 3), spec(kind, 7, 3, 3)],
                &mut Prng::new(prng.next_u64()),
            )
            .unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            prng.shuffle(&mut perm);

            let (logits, _) = model.forward_on_graph(&g, &x).unwrap();
            let permuted_graph = g.permute(&perm).unwrap();
            let permuted_x = permute_rows(&x, &perm);
            let (permuted_logits, _) =
                model.forward_on_graph(&permuted_graph, &permuted_x).unwrap();
            let diff = permuted_logits.max_abs_diff(&permute_rows(&logits, &perm));
            worst_overall = worst_overall.max(diff);
            assert!(diff < 1e-9, "{kind}: equivariance gap {diff}");
        }
    }
    println!("criterion 2: worst equivariance gap {worst_overall:.3e} across {} kinds", ALL_KINDS.len());
}

/// Criterion 3: analytic gradients match central finite differences
/// (step 1e-6) over every coordinate for every layer kind, max relative
/// error < 1e-4, in under 30 s. `aagcn_nh` differences the loss with the
/// degree vectors frozen, matching its straight-through gradient.
#[test]
fn criterion_3_gradients_match_finite_differences() {
    let started = Instant::now();
    let n = 12;
    let step = 1e-6;
    for kind in ALL_KINDS {
        let mut prng = Prng::new(0x6AD0 + kind as u64);
        let g = random_graph(n, 0.35, &mut prng);
        let x = glorot_uniform(n, 4, &mut prng);
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let mask = vec![true; n];
        let model = Model::init(
            &[spec(kind, 4, 5, 3), spec(kind, 5, 3, 3)],
            &mut Prng::new(prng.next_u64()),
        )
        .unwrap();
        let ops = ShiftOperators::for_model(&g, &model).unwrap();
        let (logits, cache) = model.forward(&ops, &x).unwrap();
        let (_, dlogits) = cross_entropy(&logits, &labels, &mask).unwrap();
        let grads = model.backward(&ops, &cache, &dlogits).unwrap();
        let frozen: Vec<Option<Vec<f64>>> = (0..model.layers().len())
            .map(|i| cache.layer(i).filter_degrees().map(<[f64]>::to_vec))
            .collect();
        let loss_of = |m: &Model| -> f64 {
            let (logits, _) = m.forward_with_frozen_degrees(&ops, &x, &frozen).unwrap();
            cross_entropy(&logits, &labels, &mask).unwrap().0
        };
        let mut worst: f64 = 0.0;
        for li in 0..model.layers().len() {
            if model.layers()[li].params.h.is_some() {
                for k in 0..model.layers()[li].spec.r {
                    let mut plus = model.clone();
                    plus.layers_mut()[li].params.h.as_mut().unwrap()[k] += step;
                    let mut minus = model.clone();
                    minus.layers_mut()[li].params.h.as_mut().unwrap()[k] -= step;
                    let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * step);
                    let got = grads.layers[li].h.as_ref().unwrap()[k];
                    worst = worst.max((got - fd).abs() / got.abs().max(fd.abs()).max(1e-4));
                }
            }
            for wi in 0..model.layers()[li].params.w.len() {
                let (rows, cols) = {
                    let w = &model.layers()[li].params.w[wi];
                    (w.rows(), w.cols())
                };
                for i in 0..rows {
                    for j in 0..cols {
                        let base = model.layers()[li].params.w[wi].get(i, j);
                        let mut plus = model.clone();
                        plus.layers_mut()[li].params.w[wi].set(i, j, base + step);
                        let mut minus = model.clone();
                        minus.layers_mut()[li].params.w[wi].set(i, j, base - step);
                        let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * step);
                        let got = grads.layers[li].w[wi].get(i, j);
                        worst = worst.max((got - fd).abs() / got.abs().max(fd.abs()).max(1e-4));
                    }
                }
            }
        }
        println!("criterion 3: {kind} max relative gradient error {worst:.3e}");
        assert!(worst < 1e-4, "{kind}: gradient error {worst}");
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!("criterion 3: all kinds checked in {elapsed:.2} s");
    assert!(elapsed < 30.0, "took {elapsed:.2} s, budget 30 s");
}

/// Criterion 4: the Jacobi eigensolver reconstructs 20 random symmetric
/// 50x50 matrices within 1e-8 relative Frobenius error with orthonormal
/// eigenvectors to 1e-8.
#[test]
fn criterion_4_eigensolver_reconstruction() {
    let mut prng = Prng::new(0xE16E);
    let n = 50;
    let mut worst_recon: f64 = 0.0;
    let mut worst_ortho: f64 = 0.0;
    for _ in 0..20 {
        let raw = glorot_uniform(n, n, &mut prng);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, 0.5 * (raw.get(i, j) + raw.get(j, i)));
            }
        }
        let eig = sym_eig(&m).unwrap();
        let v = &eig.eigenvectors;
        let mut recon_sq = 0.0;
        let mut norm_sq = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += v.get(i, k) * eig.eigenvalues[k] * v.get(j, k);
                }
                recon_sq += (s - m.get(i, j)).powi(2);
                norm_sq += m.get(i, j).powi(2);
            }
        }
        worst_recon = worst_recon.max((recon_sq / norm_sq).sqrt());
        for i in 0..n {
            for j in 0..n {
                let mut dot = 0.0;
                for k in 0..n {
                    dot += v.get(k, i) * v.get(k, j);
                }
                let want = if i == j { 1.0 } else { 0.0 };
                worst_ortho = worst_ortho.max((dot - want).abs());
            }
        }
    }
    println!(
        "criterion 4: worst relative reconstruction {worst_recon:.3e}, worst orthonormality {worst_ortho:.3e}"
    );
    assert!(worst_recon < 1e-8);
    assert!(worst_ortho < 1e-8);
}

/// Criterion 5: collapse identities. An order-1 adaptive layer is an MLP
/// bitwise; a pure one-hop filter over the self-loop-normalized operator
/// is the GCN layer bitwise; parameter counts are exactly `R + F_in F_out`
/// per adaptive layer and `R F_in F_out` per filter-bank layer.
#[test]
fn criterion_5_collapse_identities_and_param_counts() {
    let mut prng = Prng::new(0xC0117);
    let g = random_graph(14, 0.3, &mut prng);
    let x = glorot_uniform(14, 4, &mut prng);

    // order-1 adaptive init (h = (1)) versus MLP, same weight seed
    let aagcn = Model::init(
        &[spec(LayerKind::Aagcn, 4, 6, 1), spec(LayerKind::Aagcn, 6, 3, 1)],
        &mut Prng::new(42),
    )
    .unwrap();
    let mlp = Model::init(
        &[spec(LayerKind::Mlp, 4, 6, 1), spec(LayerKind::Mlp, 6, 3, 1)],
        &mut Prng::new(42),
    )
    .unwrap();
    let (la, _) = aagcn.forward_on_graph(&g, &x).unwrap();
    let (lm, _) = mlp.forward_on_graph(&g, &x).unwrap();
    assert_eq!(la, lm, "order-1 adaptive layer is not bitwise an MLP");

    // pure shift h = (0, 1) over the gcn operator versus the gcn layer
    let mut shifted = Model::init(
        &[spec(LayerKind::Aagcn, 4, 6, 2), spec(LayerKind::Aagcn, 6, 3, 2)],
        &mut Prng::new(43),
    )
    .unwrap();
    for layer in shifted.layers_mut() {
        layer.params.h = Some(vec![0.0, 1.0]);
    }
    let gcn = Model::init(
        &[spec(LayerKind::Gcn, 4, 6, 1), spec(LayerKind::Gcn, 6, 3, 1)],
        &mut Prng::new(43),
    )
    .unwrap();
    let gcn_graph = g.gcn_operator().unwrap();
    let (ls, _) = shifted.forward_on_graph(&gcn_graph, &x).unwrap();
    let (lg, _) = gcn.forward_on_graph(&g, &x).unwrap();
    assert_eq!(ls, lg, "one-hop filter over the gcn operator is not bitwise gcn");

    // exact parameter counts
    for (f_in, f_out, r) in [(4usize, 6usize, 1usize), (9, 5, 3), (16, 32, 4)] {
        assert_eq!(
            spec(LayerKind::Aagcn, f_in, f_out, r).param_count(),
            r + f_in * f_out
        );
        assert_eq!(
            spec(LayerKind::FbGcn, f_in, f_out, r).param_count(),
            r * f_in * f_out
        );
    }
    let model = Model::init(
        &[spec(LayerKind::Aagcn, 16, 32, 3), spec(LayerKind::Aagcn, 32, 2, 3)],
        &mut Prng::new(44),
    )
    .unwrap();
    assert_eq!(model.param_count(), (3 + 16 * 32) + (3 + 32 * 2));
    println!("criterion 5: collapse identities bitwise, parameter counts exact");
}

const HET_CSBM: CsbmConfig = CsbmConfig {
    n: 500,
    c: 2,
    f: 16,
    p_in: 0.005,
    p_out: 0.05,
    mu: 0.8,
};

const HOM_CSBM: CsbmConfig = CsbmConfig {
    n: 500,
    c: 2,
    f: 16,
    p_in: 0.05,
    p_out: 0.005,
    mu: 0.8,
};

/// Mean test accuracy of a kind over seeds on a cSBM regime. Adaptive
/// kinds train with the alternating schedule; kinds without filter
/// coefficients spend the identical step budget jointly.
fn mean_accuracy_over_seeds(
    regime: &CsbmConfig,
    kind: LayerKind,
    seeds: std::ops::RangeInclusive<u64>,
) -> f64 {
    use rayon::prelude::*;
    let seeds: Vec<u64> = seeds.collect();
    let accs: Vec<f64> = seeds
        .par_iter()
        .map(|&seed| {
            let ds = dataset_for_seed(&DatasetSource::Csbm(*regime), None, seed, false).unwrap();
            let specs = [spec(kind, 16, 32, 3), spec(kind, 32, 2, 3)];
            let model = Model::init(&specs, &mut Prng::substream(seed, "init")).unwrap();
            let mode = if kind.has_filter_coefficients() {
                TrainMode::Alternating
            } else {
                TrainMode::Joint
            };
            let cfg = TrainConfig {
                lr: 0.2,
                max_outer: 300,
                i_h: 5,
                i_w: 5,
                patience: 50,
                l2: 0.0,
                seed,
                mode,
                return_last: false,
            };
            let (best, _) = train(model, &ds.graph, &ds, &cfg).unwrap();
            evaluate(&best, &ds.graph, &ds).unwrap().test_acc
        })
        .collect();
    accs.iter().sum::<f64>() / accs.len() as f64
}

/// Criterion 6: heterophily advantage. On the pinned heterophilic cSBM the
/// degree-normalized adaptive model must beat the GCN baseline by at least
/// 0.10 mean test accuracy over 10 seeds; on the homophilic mirror the two
/// must agree within 0.05. Budget 5 minutes.
#[test]
fn criterion_6_heterophily_advantage() {
    let started = Instant::now();
    let aagcn_het = mean_accuracy_over_seeds(&HET_CSBM, LayerKind::AagcnNormAdj, 1..=10);
    let gcn_het = mean_accuracy_over_seeds(&HET_CSBM, LayerKind::Gcn, 1..=10);
    let aagcn_hom = mean_accuracy_over_seeds(&HOM_CSBM, LayerKind::AagcnNormAdj, 1..=10);
    let gcn_hom = mean_accuracy_over_seeds(&HOM_CSBM, LayerKind::Gcn, 1..=10);
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 6: heterophilic aagcn_na {aagcn_het:.4} vs gcn {gcn_het:.4} (gap {:+.4}); \
         homophilic aagcn_na {aagcn_hom:.4} vs gcn {gcn_hom:.4} (gap {:+.4}); {elapsed:.1} s",
        aagcn_het - gcn_het,
        aagcn_hom - gcn_hom,
    );
    assert!(elapsed < 300.0, "took {elapsed:.1} s, budget 300 s");
    assert!(
        (aagcn_hom - gcn_hom).abs() <= 0.05,
        "homophilic mirror: |{aagcn_hom:.4} - {gcn_hom:.4}| > 0.05"
    );
    // Known-failing as specified: a two-class anti-homophilic SBM at these
    // densities is decodable by plain neighbor averaging (a sign flip in W
    // absorbs the anti-correlation), so the GCN baseline is not handicapped
    // here the way it is on mixed-neighborhood multi-class graphs, and no
    // fair shared training protocol produces a 0.10 gap. Measured anchors:
    // graph-free MLP ≈ 0.675, both graph models ≈ 0.96-0.99.
    assert!(
        aagcn_het - gcn_het >= 0.10,
        "heterophilic advantage not met: aagcn_na {aagcn_het:.4} vs gcn {gcn_het:.4} \
         (gap {:+.4} < 0.10); see the assertion comment and docs/ledger for the analysis",
        aagcn_het - gcn_het
    );
}

/// Trains a 2-layer filter-normalized adaptive model on one cSBM seed and
/// returns the low- and high-band energy ratios (q = 0.25) of the first
/// layer's learned filter response over the raw adjacency spectrum.
fn nh_band_ratios(regime: &CsbmConfig, seed: u64) -> (f64, f64) {
    let ds = dataset_for_seed(&DatasetSource::Csbm(*regime), None, seed, false).unwrap();
    let specs = [
        spec(LayerKind::AagcnNormFilter, 16, 32, 3),
        spec(LayerKind::AagcnNormFilter, 32, 2, 3),
    ];
    let model = Model::init(&specs, &mut Prng::substream(seed, "init")).unwrap();
    // Weight decay keeps the softmax from saturating, so the coefficient
    // block keeps feeling signal-to-noise pressure and adapts past its
    // low-pass initialization instead of idling at 100% train accuracy.
    let cfg = TrainConfig {
        lr: 0.2,
        max_outer: 100,
        i_h: 5,
        i_w: 5,
        patience: 100,
        l2: 2e-2,
        seed,
        mode: TrainMode::Alternating,
        return_last: true,
    };
    let (best, _) = train(model, &ds.graph, &ds, &cfg).unwrap();
    let spectrum = compute_spectrum(&ds.graph).unwrap();
    let h = best.layers()[0].params.h.as_ref().unwrap();
    let resp = frequency_response(h, &spectrum).unwrap();
    (
        band_energy_ratio(&resp, 0.25, Band::Low).unwrap(),
        band_energy_ratio(&resp, 0.25, Band::High).unwrap(),
    )
}

/// Criterion 7: trained filter-normalized models are low-pass on the
/// homophilic cSBM and high-pass on the heterophilic one, in at least 4 of
/// 5 seeds each.
#[test]
fn criterion_7_frequency_response_tracks_homophily() {
    use rayon::prelude::*;
    let seeds: Vec<u64> = (1..=5).collect();
    let hom: Vec<(f64, f64)> = seeds.par_iter().map(|&s| nh_band_ratios(&HOM_CSBM, s)).collect();
    let het: Vec<(f64, f64)> = seeds.par_iter().map(|&s| nh_band_ratios(&HET_CSBM, s)).collect();
    let hom_low = hom.iter().filter(|(low, high)| low > high).count();
    let het_high = het.iter().filter(|(low, high)| high > low).count();
    println!("criterion 7: homophilic low-pass in {hom_low}/5 seeds {hom:?}");
    println!("criterion 7: heterophilic high-pass in {het_high}/5 seeds {het:?}");
    assert!(hom_low >= 4, "low-pass in only {hom_low}/5 homophilic seeds: {hom:?}");
    assert!(het_high >= 4, "high-pass in only {het_high}/5 heterophilic seeds: {het:?}");
}

/// Criterion 8: the 5x5 inner-iteration ablation grid on the heterophilic
/// cSBM runs deterministically per seed and shows the monotone-corner
/// trend: the (50, 50) mean delta is at least the (1, 1) mean delta over 5
/// seeds. Deltas are alternating minus budget-matched joint test accuracy.
#[test]
fn criterion_8_ablation_grid_trend() {
    let ds = dataset_for_seed(&DatasetSource::Csbm(HET_CSBM), None, 1, false).unwrap();
    let specs = [
        spec(LayerKind::AagcnNormAdj, 16, 32, 3),
        spec(LayerKind::AagcnNormAdj, 32, 2, 3),
    ];
    let base = TrainConfig {
        lr: 0.2,
        max_outer: 10,
        patience: 10,
        l2: 0.0,
        seed: 0,
        i_h: 1,
        i_w: 1,
        mode: TrainMode::Alternating,
        return_last: false,
    };
    let grid = [1usize, 5, 10, 25, 50];
    let seeds = [1u64, 2, 3, 4, 5];
    let result = ablation_grid(&base, &specs, &grid, &grid, &ds.graph, &ds, &seeds).unwrap();
    println!("criterion 8 grid:\n{}", result.to_csv());
    let corner = result.cell(50, 50).unwrap();
    let origin = result.cell(1, 1).unwrap();
    for row in &result.deltas {
        for &v in row {
            assert!((-1.0..=1.0).contains(&v));
        }
    }
    // determinism spot check on the cheapest cell
    let again = ablation_grid(&base, &specs, &[1], &[1], &ds.graph, &ds, &seeds).unwrap();
    assert_eq!(again.deltas[0][0], origin, "ablation cell is not deterministic");
    println!("criterion 8: corner (50,50) delta {corner:+.4} vs origin (1,1) delta {origin:+.4}");
    assert!(
        corner >= origin,
        "monotone-corner trend missing: (50,50) {corner:+.4} < (1,1) {origin:+.4}"
    );
}

/// Criterion 9: exact desk-scale values. Uniform-logit cross-entropy is
/// ln C to 1e-12, homophily extremes are exactly 1.0 and 0.0, and dataset
/// save/load round-trips bitwise.
#[test]
fn criterion_9_exact_desk_scale_values() {
    for c in [2usize, 3, 5, 10] {
        let logits = DenseMatrix::zeros(7, c);
        let labels: Vec<usize> = (0..7).map(|i| i % c).collect();
        let (loss, _) = cross_entropy(&logits, &labels, &[true; 7]).unwrap();
        assert!((loss - (c as f64).ln()).abs() < 1e-12, "c={c}: loss {loss}");
    }

    let path = SparseGraph::from_edge_list(&[(0, 1, 1.0), (1, 2, 1.0)], 3, true).unwrap();
    assert_eq!(path.edge_homophily(&[1, 1, 1]).unwrap(), 1.0);
    let bipartite = SparseGraph::from_edge_list(
        &[(0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0)],
        4,
        true,
    )
    .unwrap();
    assert_eq!(bipartite.edge_homophily(&[0, 0, 1, 1]).unwrap(), 0.0);

    let ds = gen_csbm(&CsbmParams {
        n: 80,
        c: 3,
        f: 5,
        p_in: 0.15,
        p_out: 0.05,
        mu: 1.0,
        seed: 9,
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    aagcn::data::save_dataset(&ds, dir.path()).unwrap();
    let back = aagcn::data::load_dataset(dir.path()).unwrap();
    assert_eq!(ds.graph, back.graph);
    assert_eq!(ds.x, back.x);
    assert_eq!(ds.y, back.y);
    assert_eq!(ds.train_mask, back.train_mask);
    assert_eq!(ds.val_mask, back.val_mask);
    assert_eq!(ds.test_mask, back.test_mask);
    println!("criterion 9: ln C exact, homophily extremes exact, round-trip bitwise");
}

/// Criterion 10 (optional): converted real datasets. Looks for
/// `$AAGCN_CONVERTED_DATA/texas` and `$AAGCN_CONVERTED_DATA/cora` in the
/// documented directory format; skips silently when the variable is unset.
#[test]
fn criterion_10_converted_datasets_if_supplied() {
    let Ok(root) = std::env::var("AAGCN_CONVERTED_DATA") else {
        println!("criterion 10: skipped (AAGCN_CONVERTED_DATA not set)");
        return;
    };
    let root = std::path::PathBuf::from(root);

    let texas = aagcn::data::load_dataset(&root.join("texas")).unwrap();
    let texas_h = texas.graph.edge_homophily(&texas.y).unwrap();
    println!("criterion 10: texas homophily {texas_h:.4} (expect 0.11 ± 0.03)");
    assert!((texas_h - 0.11).abs() <= 0.03);

    let cora = aagcn::data::load_dataset(&root.join("cora")).unwrap();
    let cora_h = cora.graph.edge_homophily(&cora.y).unwrap();
    println!("criterion 10: cora homophily {cora_h:.4} (expect 0.81 ± 0.03)");
    assert!((cora_h - 0.81).abs() <= 0.03);

    // Filter-normalized adaptive model on texas over 10 splits.
    use rayon::prelude::*;
    let seeds: Vec<u64> = (1..=10).collect();
    let accs: Vec<f64> = seeds
        .par_iter()
        .map(|&seed| {
            let mut ds = texas.clone();
            if !ds.split_from_file() {
                let ratios = ds.ratios();
                ds.resplit(ratios, Prng::substream_seed(seed, "split")).unwrap();
            }
            let specs = [
                spec(LayerKind::AagcnNormFilter, ds.feature_dim(), 32, 3),
                spec(LayerKind::AagcnNormFilter, 32, ds.class_count, 3),
            ];
            let model = Model::init(&specs, &mut Prng::substream(seed, "init")).unwrap();
            let cfg = TrainConfig {
                lr: 0.2,
                max_outer: 300,
                i_h: 5,
                i_w: 5,
                patience: 50,
                l2: 0.0,
                seed,
                mode: TrainMode::Alternating,
                return_last: false,
            };
            let (best, _) = train(model, &ds.graph, &ds, &cfg).unwrap();
            evaluate(&best, &ds.graph, &ds).unwrap().test_acc
        })
        .collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    println!("criterion 10: texas aagcn_nh mean accuracy {mean:.4} (expect 0.857 ± 0.08)");
    assert!((mean - 0.857).abs() <= 0.08);
}
