//! Shared oracles for the integration suites: dense re-implementations
//! that never touch the sparse code paths they check.

use aagcn::graph::SparseGraph;
use aagcn::linalg::{DenseMatrix, Prng};

/// Dense adjacency built straight from an edge list, independent of the
/// CSR construction under test.
pub fn dense_from_edges(edges: &[(usize, usize, f64)], n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j, w) in edges {
        a[i][j] += w;
        if i != j {
            a[j][i] += w;
        }
    }
    a
}

/// Dense `A * X` with explicit loops.
pub fn dense_shift(a: &[Vec<f64>], x: &DenseMatrix) -> DenseMatrix {
    let n = a.len();
    let f = x.cols();
    let mut out = DenseMatrix::zeros(n, f);
    for i in 0..n {
        for k in 0..n {
            let w = a[i][k];
            if w != 0.0 {
                for c in 0..f {
                    out.set(i, c, out.get(i, c) + w * x.get(k, c));
                }
            }
        }
    }
    out
}

/// Dense polynomial filter `sum_r h[r] A^r X` via repeated dense shifts.
pub fn dense_filter(a: &[Vec<f64>], h: &[f64], x: &DenseMatrix) -> DenseMatrix {
    let mut acc = x.clone();
    acc.scale(h[0]);
    let mut power = x.clone();
    for &c in &h[1..] {
        power = dense_shift(a, &power);
        acc.add_scaled(&power, c).unwrap();
    }
    acc
}

/// Random undirected unit-weight graph as an edge list.
pub fn random_edges(n: usize, density: f64, prng: &mut Prng) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if prng.next_f64() < density {
                edges.push((i, j, 1.0));
            }
        }
    }
    edges
}

pub fn random_graph(n: usize, density: f64, prng: &mut Prng) -> SparseGraph {
    SparseGraph::from_edge_list(&random_edges(n, density, prng), n, true).unwrap()
}

/// Row-permuted copy of a matrix: row `i` of the input lands on row
/// `perm[i]`.
pub fn permute_rows(x: &DenseMatrix, perm: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            out.set(perm[i], j, x.get(i, j));
        }
    }
    out
}
