//! Sparse undirected graphs and shift-operator machinery.
//!
//! [`SparseGraph`] is CSR storage for the symmetric adjacency matrix that
//! acts as the graph shift operator. Polynomial filters are applied by
//! iterated sparse shifts so a filter of order `R` costs `O(R * nnz * F)`
//! and never materializes a matrix power.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// CSR symmetric adjacency matrix.
///
/// Invariants maintained by every constructor and operation:
/// entry `(i, j)` with value `v` exists iff `(j, i)` does with the same
/// value, column indices are sorted and duplicate-free within a row, and
/// all stored values are finite and nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Per-node weighted degrees (row sums of the adjacency matrix).
#[derive(Debug, Clone)]
pub struct DegreeVector(Vec<f64>);

impl DegreeVector {
    /// Plain weighted row sums. Fails if any degree is negative, which can
    /// happen with signed edge weights and makes `d^{-1/2}` undefined.
    pub fn weighted(g: &SparseGraph) -> Result<Self> {
        let mut d = vec![0.0; g.n];
        for i in 0..g.n {
            let (_, vals) = g.row(i);
            d[i] = vals.iter().sum();
            if d[i] < 0.0 {
                return Err(Error::Invalid(format!(
                    "negative weighted degree {} at node {i}",
                    d[i]
                )));
            }
        }
        Ok(DegreeVector(d))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `d_i^{-1/2}` with the scale of isolated nodes (`d_i = 0`) defined as
    /// zero so their rows simply stay zero.
    pub fn inv_sqrt(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect()
    }
}

impl SparseGraph {
    /// Builds a graph from `(src, dst, weight)` triples.
    ///
    /// With `symmetrize`, every off-diagonal edge also inserts its mirror
    /// (self-loops are inserted once). Without it, the input must already
    /// be exactly symmetric. Duplicate edges are summed; entries that sum
    /// to exactly zero are dropped.
    pub fn from_edge_list(
        edges: &[(usize, usize, f64)],
        n: usize,
        symmetrize: bool,
    ) -> Result<SparseGraph> {
        let mut triples: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Invalid(format!(
                    "edge ({i},{j}) out of range for n={n}"
                )));
            }
            if !w.is_finite() {
                return Err(Error::Invalid(format!("non-finite weight on edge ({i},{j})")));
            }
            triples.push((i, j, w));
            if symmetrize && i != j {
                triples.push((j, i, w));
            }
        }
        // Stable sort keeps duplicate contributions in input order, so the
        // summed value for (i, j) and (j, i) is bitwise identical.
        triples.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triples.len());
        let mut values = Vec::with_capacity(triples.len());
        let mut iter = triples.into_iter().peekable();
        while let Some((i, j, mut w)) = iter.next() {
            while let Some(&(i2, j2, w2)) = iter.peek() {
                if i2 == i && j2 == j {
                    w += w2;
                    iter.next();
                } else {
                    break;
                }
            }
            if w != 0.0 {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(w);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let g = SparseGraph {
            n,
            row_ptr,
            col_idx,
            values,
        };
        if !symmetrize {
            g.check_symmetric()?;
        }
        Ok(g)
    }

    fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if self.value_at(j, i) != Some(v) {
                    return Err(Error::Invalid(format!(
                        "asymmetric input: ({i},{j}) has no matching ({j},{i}) entry"
                    )));
                }
            }
        }
        Ok(())
    }

    fn value_at(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries (each undirected edge counts twice).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    /// Iterates stored entries of the upper triangle plus the diagonal,
    /// i.e. one representative per undirected edge.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .filter(move |(&j, _)| j >= i)
                .map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Shift a node-feature matrix: computes `A * X` in `O(nnz * F)`.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.n {
            return Err(Error::Shape(format!(
                "spmm: graph has {} nodes, signal has {} rows",
                self.n,
                x.rows()
            )));
        }
        let f = x.cols();
        let mut out = DenseMatrix::zeros(self.n, f);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let orow = &mut out.data_mut()[i * f..(i + 1) * f];
            for (&j, &v) in cols.iter().zip(vals) {
                let xrow = &x.data()[j * f..(j + 1) * f];
                for k in 0..f {
                    orow[k] += v * xrow[k];
                }
            }
        }
        out.ensure_finite("spmm")?;
        Ok(out)
    }

    /// Degree-normalized adjacency `D^{-1/2} A D^{-1/2}`.
    pub fn normalize_adjacency(&self) -> Result<SparseGraph> {
        let s = DegreeVector::weighted(self)?.inv_sqrt();
        self.scale_symmetric(&s)
    }

    /// The self-loop-normalized operator
    /// `D~^{-1/2} (A + I) D~^{-1/2}` with `D~ = diag((A + I) 1)`.
    pub fn gcn_operator(&self) -> Result<SparseGraph> {
        let with_loops = self.add_self_loops(1.0);
        with_loops.normalize_adjacency()
    }

    fn add_self_loops(&self, w: f64) -> SparseGraph {
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.nnz() + self.n);
        let mut values = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut inserted = false;
            for (&j, &v) in cols.iter().zip(vals) {
                if !inserted && j >= i {
                    if j == i {
                        col_idx.push(i);
                        values.push(v + w);
                    } else {
                        col_idx.push(i);
                        values.push(w);
                        col_idx.push(j);
                        values.push(v);
                    }
                    inserted = true;
                    continue;
                }
                col_idx.push(j);
                values.push(v);
            }
            if !inserted {
                col_idx.push(i);
                values.push(w);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        SparseGraph {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Rescales entry `(i, j)` by `s[i] * s[j]`, dropping entries that
    /// become exactly zero (rows of isolated nodes stay empty).
    fn scale_symmetric(&self, s: &[f64]) -> Result<SparseGraph> {
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                // s[i] * s[j] commutes bitwise, so (i, j) and (j, i) scale
                // identically and symmetry survives exactly.
                let scaled = v * (s[i] * s[j]);
                if scaled != 0.0 {
                    col_idx.push(j);
                    values.push(scaled);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        let g = SparseGraph {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        };
        if !g.values.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("normalization produced non-finite weights".into()));
        }
        Ok(g)
    }

    /// Applies the polynomial filter `sum_r h[r] A^r` to `x` by iterated
    /// shifts: `P_0 = X`, `P_r = A P_{r-1}`, accumulating `h[r] P_r`.
    pub fn apply_filter(&self, h: &[f64], x: &DenseMatrix) -> Result<DenseMatrix> {
        if h.is_empty() {
            return Err(Error::Invalid("filter needs at least one coefficient".into()));
        }
        if x.rows() != self.n {
            return Err(Error::Shape(format!(
                "apply_filter: graph has {} nodes, signal has {} rows",
                self.n,
                x.rows()
            )));
        }
        let mut shifted = x.clone();
        let mut acc = x.clone();
        acc.scale(h[0]);
        for &coeff in &h[1..] {
            shifted = self.spmm(&shifted)?;
            acc.add_scaled(&shifted, coeff)?;
        }
        acc.ensure_finite("apply_filter")?;
        Ok(acc)
    }

    /// Degrees of the filter normalization: `|(H 1)_i| + eps` where
    /// `H = sum_r h[r] A^r`. The absolute value keeps the scaling real for
    /// unconstrained (possibly sign-changing) coefficients.
    pub fn filter_degrees(&self, h: &[f64], eps: f64) -> Result<Vec<f64>> {
        if eps <= 0.0 {
            return Err(Error::Invalid("filter normalization eps must be positive".into()));
        }
        let ones = DenseMatrix::from_vec(self.n, 1, vec![1.0; self.n])?;
        let h1 = self.apply_filter(h, &ones)?;
        Ok(h1.data().iter().map(|&v| v.abs() + eps).collect())
    }

    /// Applies the degree-normalized filter
    /// `D_H^{-1/2} H D_H^{-1/2} X` with `D_H = diag(|H 1| + eps)`,
    /// without ever materializing `H`.
    pub fn apply_normalized_filter(
        &self,
        h: &[f64],
        x: &DenseMatrix,
        eps: f64,
    ) -> Result<DenseMatrix> {
        let d = self.filter_degrees(h, eps)?;
        let s: Vec<f64> = d.iter().map(|&v| 1.0 / v.sqrt()).collect();
        let scaled_in = x.scale_rows(&s)?;
        let filtered = self.apply_filter(h, &scaled_in)?;
        filtered.scale_rows(&s)
    }

    /// Fraction of unordered, non-self-loop edges whose endpoints share a
    /// label. 1.0 means fully homophilic, 0.0 fully heterophilic.
    pub fn edge_homophily(&self, labels: &[usize]) -> Result<f64> {
        if labels.len() != self.n {
            return Err(Error::Shape(format!(
                "edge_homophily: {} labels for {} nodes",
                labels.len(),
                self.n
            )));
        }
        let mut total = 0usize;
        let mut same = 0usize;
        for (i, j, _) in self.upper_entries() {
            if i == j {
                continue;
            }
            total += 1;
            if labels[i] == labels[j] {
                same += 1;
            }
        }
        if total == 0 {
            return Err(Error::Invalid(
                "edge homophily is undefined on a graph without edges".into(),
            ));
        }
        Ok(same as f64 / total as f64)
    }

    /// Relabels nodes: edge `(i, j, w)` maps to `(perm[i], perm[j], w)`.
    pub fn permute(&self, perm: &[usize]) -> Result<SparseGraph> {
        if perm.len() != self.n {
            return Err(Error::Invalid(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::Invalid("permutation is not a bijection".into()));
            }
            seen[p] = true;
        }
        let mut triples = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                triples.push((perm[i], perm[j], v));
            }
        }
        triples.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(triples.len());
        let mut values = Vec::with_capacity(triples.len());
        for (i, j, v) in triples {
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseGraph {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Densifies the adjacency matrix (spectral analysis only; everything
    /// else stays sparse).
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m.set(i, j, v);
            }
        }
        m
    }

    #[cfg(test)]
    pub(crate) fn assert_invariants(&self) {
        assert_eq!(self.row_ptr.len(), self.n + 1);
        assert_eq!(*self.row_ptr.last().unwrap(), self.values.len());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for w in cols.windows(2) {
                assert!(w[0] < w[1], "row {i} not strictly sorted");
            }
            for (&j, &v) in cols.iter().zip(vals) {
                assert!(v.is_finite() && v != 0.0);
                assert_eq!(self.value_at(j, i), Some(v), "asymmetric at ({i},{j})");
            }
        }
    }
}
