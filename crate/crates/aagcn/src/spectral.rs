//! Frequency-domain analysis of graph filters.
//!
//! The shift operator's eigendecomposition `A = V diag(lambda) V^T` defines
//! the graph frequencies. A filter with coefficients `h` has frequency
//! response `h~ = Psi h` where `Psi[i][j] = lambda_i^j` is the Vandermonde
//! matrix of the eigenvalues. Frequencies are ordered by total variation
//! `|lambda_max - lambda|` ascending, so the lowest frequency is the largest
//! eigenvalue; the x-axis is normalized to `[0, 1]` for plotting.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::linalg::{sym_eig, DenseMatrix};

/// Largest node count the densifying eigensolver will accept by default.
pub const DEFAULT_SPECTRAL_CAP: usize = 5000;

/// Eigendecomposition of a shift operator plus the total-variation
/// frequency ordering.
#[derive(Debug, Clone)]
pub struct Spectrum {
    lambdas: Vec<f64>,
    v: DenseMatrix,
    tv_order: Vec<usize>,
}

impl Spectrum {
    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambdas
    }

    /// Orthonormal eigenvectors, one per column, matching [`eigenvalues`].
    ///
    /// [`eigenvalues`]: Spectrum::eigenvalues
    pub fn eigenvectors(&self) -> &DenseMatrix {
        &self.v
    }

    /// Indices into [`eigenvalues`] ordered low frequency to high, i.e. by
    /// `|lambda_max - lambda|` ascending with ties broken by eigenvalue
    /// descending, then index.
    ///
    /// [`eigenvalues`]: Spectrum::eigenvalues
    pub fn tv_order(&self) -> &[usize] {
        &self.tv_order
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Filter magnitudes `|h~|` in total-variation order with the normalized
/// frequency axis.
#[derive(Debug, Clone)]
pub struct FrequencyResponse {
    magnitudes: Vec<f64>,
    xaxis: Vec<f64>,
}

impl FrequencyResponse {
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn xaxis(&self) -> &[f64] {
        &self.xaxis
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }
}

/// Which end of the ordered frequencies a band ratio measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Low,
    High,
}

/// Full eigendecomposition of the densified shift matrix with the default
/// size cap.
pub fn compute_spectrum(g: &SparseGraph) -> Result<Spectrum> {
    compute_spectrum_with_cap(g, DEFAULT_SPECTRAL_CAP)
}

/// As [`compute_spectrum`] with an explicit node-count cap. The cap guards
/// the cubic eigensolver; raise it deliberately via `--spectral-cap`.
pub fn compute_spectrum_with_cap(g: &SparseGraph, cap: usize) -> Result<Spectrum> {
    if g.n() > cap {
        return Err(Error::Resource(format!(
            "graph has {} nodes, over the spectral cap {cap}; raise --spectral-cap to densify anyway",
            g.n()
        )));
    }
    let eig = sym_eig(&g.to_dense())?;
    let tv_order = total_variation_order(&eig.eigenvalues);
    Ok(Spectrum {
        lambdas: eig.eigenvalues,
        v: eig.eigenvectors,
        tv_order,
    })
}

fn total_variation_order(lambdas: &[f64]) -> Vec<usize> {
    let lmax = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&i, &j| {
        let tvi = (lmax - lambdas[i]).abs();
        let tvj = (lmax - lambdas[j]).abs();
        tvi.total_cmp(&tvj)
            .then(lambdas[j].total_cmp(&lambdas[i]))
            .then(i.cmp(&j))
    });
    order
}

/// Evaluates `h~_i = sum_j h[j] lambda_i^j` and returns `|h~|` in
/// total-variation order with the `[0, 1]` frequency axis.
pub fn frequency_response(h: &[f64], spectrum: &Spectrum) -> Result<FrequencyResponse> {
    if h.is_empty() {
        return Err(Error::Invalid("filter needs at least one coefficient".into()));
    }
    if spectrum.is_empty() {
        return Err(Error::Invalid("empty spectrum".into()));
    }
    let n = spectrum.len();
    let magnitudes: Vec<f64> = spectrum
        .tv_order
        .iter()
        .map(|&i| {
            let lambda = spectrum.lambdas[i];
            // Horner evaluation of the response polynomial.
            let mut acc = 0.0;
            for &c in h.iter().rev() {
                acc = acc * lambda + c;
            }
            acc.abs()
        })
        .collect();
    let xaxis: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    };
    Ok(FrequencyResponse { magnitudes, xaxis })
}

/// Fraction of squared response energy in the first (`Low`) or last
/// (`High`) `ceil(q * N)` ordered frequencies.
pub fn band_energy_ratio(resp: &FrequencyResponse, q: f64, band: Band) -> Result<f64> {
    if resp.is_empty() {
        return Err(Error::Invalid("empty frequency response".into()));
    }
    if !(0.0..1.0).contains(&q) || q == 0.0 {
        return Err(Error::Invalid(format!("band fraction q={q} outside (0, 1)")));
    }
    let n = resp.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    let total: f64 = resp.magnitudes.iter().map(|&m| m * m).sum();
    if total == 0.0 {
        return Err(Error::Invalid(
            "band energy ratio is undefined for an all-zero response".into(),
        ));
    }
    let band_sum: f64 = match band {
        Band::Low => resp.magnitudes[..k].iter().map(|&m| m * m).sum(),
        Band::High => resp.magnitudes[n - k..].iter().map(|&m| m * m).sum(),
    };
    Ok(band_sum / total)
}

fn valid_label(label: &str) -> bool {
    !label.is_empty() && !label.contains([',', '"', '\n', '\r'])
}

/// Renders labeled responses as CSV text: header `x,<label>,...`, one row
/// per frequency, floats at 17 significant digits so parsing round-trips
/// exactly.
pub fn render_response_csv(responses: &[(String, &FrequencyResponse)]) -> Result<String> {
    let Some((_, first)) = responses.first() else {
        return Err(Error::Invalid("no responses to export".into()));
    };
    let n = first.len();
    let mut csv = String::from("x");
    for (label, resp) in responses {
        if !valid_label(label) {
            return Err(Error::Invalid(format!(
                "label {label:?} is empty or contains CSV delimiters"
            )));
        }
        if resp.len() != n {
            return Err(Error::Shape(format!(
                "response {label:?} has length {} but expected {n}",
                resp.len()
            )));
        }
        let _ = write!(csv, ",{label}");
    }
    csv.push('\n');
    for i in 0..n {
        let _ = write!(csv, "{:.16e}", first.xaxis[i]);
        for (_, resp) in responses {
            let _ = write!(csv, ",{:.16e}", resp.magnitudes[i]);
        }
        csv.push('\n');
    }
    Ok(csv)
}

/// Writes [`render_response_csv`] output to `path`.
pub fn export_response(responses: &[(String, &FrequencyResponse)], path: &Path) -> Result<()> {
    let csv = render_response_csv(responses)?;
    std::fs::write(path, csv).map_err(|e| Error::io(path, e))
}
