//! Datasets: in-memory model, on-disk format, deterministic splits, and a
//! contextual stochastic-block-model generator.
//!
//! # Directory format
//!
//! A dataset directory holds:
//!
//! - `manifest.json`: `{"name", "n", "f", "c", "ratios": [train, val,
//!   test], "split_seed"}`
//! - `edges.csv`: header `src,dst,weight`, one undirected edge per line,
//!   0-based ids; edges are symmetrized at load
//! - `features.csv`: `n` rows of `f` comma-separated floats, no header
//! - `labels.csv`: `n` rows, one integer class id per line
//! - `splits.csv` (optional): `n` rows of `train|val|test|none`
//!
//! Floats are written with 17 significant digits, so `load(save(ds))`
//! reproduces every field bitwise. A missing `splits.csv` triggers a
//! stratified [`random_split`] with the manifest's ratios and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::linalg::{DenseMatrix, Prng};

/// A node-classification dataset: graph, features, labels, and disjoint
/// train/val/test masks.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SparseGraph,
    pub x: DenseMatrix,
    pub y: Vec<usize>,
    pub train_mask: Vec<bool>,
    pub val_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
    pub class_count: usize,
    pub name: String,
    ratios: SplitRatios,
    split_seed: u64,
    split_from_file: bool,
}

/// Train/val fractions for stratified splitting; whatever each class has
/// left after the train and val shares goes to test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = SplitRatios { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Invalid("split ratios must be positive".into()));
        }
        if self.train + self.val + self.test > 1.0 + 1e-12 {
            return Err(Error::Invalid("split ratios must sum to at most 1".into()));
        }
        Ok(())
    }
}

impl Default for SplitRatios {
    /// The 48/32/20 protocol common for desk-scale heterophily benchmarks.
    fn default() -> Self {
        SplitRatios {
            train: 0.48,
            val: 0.32,
            test: 0.20,
        }
    }
}

/// Contextual stochastic-block-model parameters.
///
/// Labels are assigned round-robin and shuffled; each unordered node pair
/// draws an edge with probability `p_in` (same label) or `p_out`
/// (different). Features are `mu * m_c` plus standard Gaussian noise, where
/// the class means `m_c` are fixed orthogonal unit vectors (requires
/// `f >= c`). `p_in > p_out` gives homophilic graphs, `p_in < p_out`
/// heterophilic ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsbmParams {
    pub n: usize,
    pub c: usize,
    pub f: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub mu: f64,
    pub seed: u64,
}

impl CsbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.n < self.c {
            return Err(Error::Invalid(format!(
                "csbm needs n >= c >= 1, got n={} c={}",
                self.n, self.c
            )));
        }
        if self.f < self.c {
            return Err(Error::Invalid(format!(
                "csbm needs f >= c to build orthogonal class means, got f={} c={}",
                self.f, self.c
            )));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("{name}={p} outside [0, 1]")));
            }
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Invalid(format!("mu={} must be >= 0", self.mu)));
        }
        Ok(())
    }
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn ratios(&self) -> SplitRatios {
        self.ratios
    }

    /// Whether the masks came from an explicit `splits.csv` rather than a
    /// seeded split.
    pub fn split_from_file(&self) -> bool {
        self.split_from_file
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if self.graph.n() != n || self.x.rows() != n {
            return Err(Error::Shape(format!(
                "graph has {} nodes, features {} rows, labels {} entries",
                self.graph.n(),
                self.x.rows(),
                n
            )));
        }
        if self.train_mask.len() != n || self.val_mask.len() != n || self.test_mask.len() != n {
            return Err(Error::Shape("mask lengths differ from node count".into()));
        }
        for i in 0..n {
            let picks =
                self.train_mask[i] as u8 + self.val_mask[i] as u8 + self.test_mask[i] as u8;
            if picks > 1 {
                return Err(Error::Invalid(format!("node {i} is in more than one mask")));
            }
        }
        if let Some((i, &label)) = self.y.iter().enumerate().find(|(_, &y)| y >= self.class_count)
        {
            return Err(Error::Invalid(format!(
                "label {label} at node {i} exceeds class count {}",
                self.class_count
            )));
        }
        let mut train_classes = vec![false; self.class_count];
        for i in 0..n {
            if self.train_mask[i] {
                train_classes[self.y[i]] = true;
            }
        }
        if let Some(missing) = train_classes.iter().position(|&p| !p) {
            return Err(Error::Invalid(format!(
                "class {missing} has no training nodes"
            )));
        }
        Ok(())
    }

    /// Replaces the masks with a fresh stratified split.
    pub fn resplit(&mut self, ratios: SplitRatios, seed: u64) -> Result<()> {
        let (train, val, test) = random_split(self.n(), &self.y, ratios, seed)?;
        self.train_mask = train;
        self.val_mask = val;
        self.test_mask = test;
        self.ratios = ratios;
        self.split_seed = seed;
        self.split_from_file = false;
        Ok(())
    }

    /// L1-normalizes each feature row in place; all-zero rows are left
    /// untouched.
    pub fn row_normalize_features(&mut self) {
        for i in 0..self.x.rows() {
            let sum: f64 = self.x.row(i).iter().map(|v| v.abs()).sum();
            if sum > 0.0 {
                for v in self.x.row_mut(i) {
                    *v /= sum;
                }
            }
        }
    }
}

/// Stratified split: per class, a seeded shuffle hands the first
/// `floor(ratio * count)` nodes to train, the next block to val, and the
/// remainder to test. Every class must land at least one node in each mask.
pub fn random_split(
    n: usize,
    labels: &[usize],
    ratios: SplitRatios,
    seed: u64,
) -> Result<(Vec<bool>, Vec<bool>, Vec<bool>)> {
    ratios.validate()?;
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    let class_count = labels.iter().map(|&y| y + 1).max().unwrap_or(0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &y) in labels.iter().enumerate() {
        members[y].push(i);
    }
    let mut train = vec![false; n];
    let mut val = vec![false; n];
    let mut test = vec![false; n];
    let mut prng = Prng::substream(seed, "split");
    for (class, ids) in members.iter_mut().enumerate() {
        if ids.is_empty() {
            return Err(Error::Invalid(format!("class {class} has no nodes")));
        }
        let count = ids.len();
        let n_train = (ratios.train * count as f64).floor() as usize;
        let n_val = (ratios.val * count as f64).floor() as usize;
        let n_test = count - n_train - n_val;
        if n_train == 0 || n_val == 0 || n_test == 0 {
            return Err(Error::Invalid(format!(
                "class {class} has {count} nodes, too few for at least one node per mask"
            )));
        }
        prng.shuffle(ids);
        for (pos, &i) in ids.iter().enumerate() {
            if pos < n_train {
                train[i] = true;
            } else if pos < n_train + n_val {
                val[i] = true;
            } else {
                test[i] = true;
            }
        }
    }
    Ok((train, val, test))
}

/// Generates a contextual-SBM dataset with the default split ratios.
pub fn gen_csbm(params: &CsbmParams) -> Result<Dataset> {
    gen_csbm_with_ratios(params, SplitRatios::default())
}

/// Generates a contextual-SBM dataset; fully deterministic per seed via the
/// `csbm` sub-stream (labels, then edges, then features, then the split).
pub fn gen_csbm_with_ratios(params: &CsbmParams, ratios: SplitRatios) -> Result<Dataset> {
    params.validate()?;
    ratios.validate()?;
    let CsbmParams {
        n, c, f, p_in, p_out, mu, seed,
    } = *params;

    let mut prng = Prng::substream(seed, "csbm");
    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    prng.shuffle(&mut labels);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            // Always draw so the edge pattern is independent of shortcuts.
            let u = prng.next_f64();
            if u < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    let graph = SparseGraph::from_edge_list(&edges, n, true)?;

    // Class means are the first c standard basis vectors scaled by mu.
    let mut x = DenseMatrix::zeros(n, f);
    for i in 0..n {
        let row = x.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = prng.next_gaussian() + if j == labels[i] { mu } else { 0.0 };
        }
    }

    // random_split derives its own "split" sub-stream, disjoint from "csbm".
    let split_seed = seed;
    let (train_mask, val_mask, test_mask) = random_split(n, &labels, ratios, split_seed)?;
    let ds = Dataset {
        graph,
        x,
        y: labels,
        train_mask,
        val_mask,
        test_mask,
        class_count: c,
        name: format!("csbm-n{n}-c{c}-seed{seed}"),
        ratios,
        split_seed,
        split_from_file: false,
    };
    ds.validate()?;
    Ok(ds)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    name: String,
    n: usize,
    f: usize,
    c: usize,
    ratios: [f64; 3],
    split_seed: u64,
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the dataset in the directory format `load_dataset` reads,
/// creating `dir` if needed. Masks always go to `splits.csv` so reloading
/// reproduces them bitwise.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let manifest = Manifest {
        name: ds.name.clone(),
        n: ds.n(),
        f: ds.feature_dim(),
        c: ds.class_count,
        ratios: [ds.ratios.train, ds.ratios.val, ds.ratios.test],
        split_seed: ds.split_seed,
    };
    let manifest_path = dir.join("manifest.json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail"),
    )
    .map_err(|e| Error::io(&manifest_path, e))?;

    let mut edges = String::from("src,dst,weight\n");
    for (i, j, w) in ds.graph.upper_entries() {
        let _ = writeln!(edges, "{i},{j},{}", fmt_float(w));
    }
    let edges_path = dir.join("edges.csv");
    fs::write(&edges_path, edges).map_err(|e| Error::io(&edges_path, e))?;

    let mut features = String::new();
    for i in 0..ds.n() {
        let row: Vec<String> = ds.x.row(i).iter().map(|&v| fmt_float(v)).collect();
        let _ = writeln!(features, "{}", row.join(","));
    }
    let features_path = dir.join("features.csv");
    fs::write(&features_path, features).map_err(|e| Error::io(&features_path, e))?;

    let mut labels = String::new();
    for &y in &ds.y {
        let _ = writeln!(labels, "{y}");
    }
    let labels_path = dir.join("labels.csv");
    fs::write(&labels_path, labels).map_err(|e| Error::io(&labels_path, e))?;

    let mut splits = String::new();
    for i in 0..ds.n() {
        let tag = if ds.train_mask[i] {
            "train"
        } else if ds.val_mask[i] {
            "val"
        } else if ds.test_mask[i] {
            "test"
        } else {
            "none"
        };
        let _ = writeln!(splits, "{tag}");
    }
    let splits_path = dir.join("splits.csv");
    fs::write(&splits_path, splits).map_err(|e| Error::io(&splits_path, e))?;
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::Invalid(format!("missing file {}", path.display())));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_field<T: std::str::FromStr>(
    field: &str,
    what: &str,
    path: &Path,
    line: usize,
) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse {what} from {field:?}"),
    })
}

/// Loads a dataset directory; see the module docs for the format. Errors
/// name the offending file and 1-based line.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(&read_to_string(&manifest_path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest_path.display())))?;
    let n = manifest.n;
    let ratios = SplitRatios::new(manifest.ratios[0], manifest.ratios[1], manifest.ratios[2])?;

    let edges_path = dir.join("edges.csv");
    let edges_text = read_to_string(&edges_path)?;
    let mut edges = Vec::new();
    let mut lines = edges_text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "src,dst,weight" => {}
        _ => {
            return Err(Error::Malformed {
                path: edges_path,
                line: 1,
                message: "expected header src,dst,weight".into(),
            })
        }
    }
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Malformed {
                path: edges_path,
                line: lineno,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let src: usize = parse_field(fields[0], "source id", &edges_path, lineno)?;
        let dst: usize = parse_field(fields[1], "destination id", &edges_path, lineno)?;
        let w: f64 = parse_field(fields[2], "weight", &edges_path, lineno)?;
        if src >= n || dst >= n {
            return Err(Error::Malformed {
                path: edges_path,
                line: lineno,
                message: format!("edge ({src},{dst}) out of range for n={n}"),
            });
        }
        edges.push((src, dst, w));
    }
    let graph = SparseGraph::from_edge_list(&edges, n, true)?;

    let features_path = dir.join("features.csv");
    let features_text = read_to_string(&features_path)?;
    let mut data = Vec::with_capacity(n * manifest.f);
    let mut row_count = 0usize;
    for (idx, line) in features_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != manifest.f {
            return Err(Error::Malformed {
                path: features_path,
                line: lineno,
                message: format!(
                    "expected {} features, found {}",
                    manifest.f,
                    fields.len()
                ),
            });
        }
        for field in fields {
            data.push(parse_field::<f64>(field, "feature", &features_path, lineno)?);
        }
        row_count += 1;
    }
    if row_count != n {
        return Err(Error::Invalid(format!(
            "features.csv has {row_count} rows but manifest declares n={n}"
        )));
    }
    let x = DenseMatrix::from_vec(n, manifest.f, data)?;

    let labels_path = dir.join("labels.csv");
    let labels_text = read_to_string(&labels_path)?;
    let mut y = Vec::with_capacity(n);
    for (idx, line) in labels_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let label: usize = parse_field(line, "label", &labels_path, idx + 1)?;
        if label >= manifest.c {
            return Err(Error::Malformed {
                path: labels_path,
                line: idx + 1,
                message: format!("label {label} exceeds class count {}", manifest.c),
            });
        }
        y.push(label);
    }
    if y.len() != n {
        return Err(Error::Invalid(format!(
            "labels.csv has {} rows but manifest declares n={n}",
            y.len()
        )));
    }

    let splits_path = dir.join("splits.csv");
    let (train_mask, val_mask, test_mask, split_from_file) = if splits_path.exists() {
        let text = read_to_string(&splits_path)?;
        let mut train = vec![false; n];
        let mut val = vec![false; n];
        let mut test = vec![false; n];
        let mut count = 0usize;
        for (idx, line) in text.lines().enumerate() {
            let tag = line.trim();
            if tag.is_empty() {
                continue;
            }
            if count >= n {
                return Err(Error::Malformed {
                    path: splits_path,
                    line: idx + 1,
                    message: format!("more than n={n} split rows"),
                });
            }
            match tag {
                "train" => train[count] = true,
                "val" => val[count] = true,
                "test" => test[count] = true,
                "none" => {}
                other => {
                    return Err(Error::Malformed {
                        path: splits_path,
                        line: idx + 1,
                        message: format!("expected train|val|test|none, found {other:?}"),
                    })
                }
            }
            count += 1;
        }
        if count != n {
            return Err(Error::Invalid(format!(
                "splits.csv has {count} rows but manifest declares n={n}"
            )));
        }
        (train, val, test, true)
    } else {
        let (train, val, test) = random_split(n, &y, ratios, manifest.split_seed)?;
        (train, val, test, false)
    };

    let ds = Dataset {
        graph,
        x,
        y,
        train_mask,
        val_mask,
        test_mask,
        class_count: manifest.c,
        name: manifest.name,
        ratios,
        split_seed: manifest.split_seed,
        split_from_file,
    };
    ds.validate()?;
    Ok(ds)
}

/// Hand-assembles a dataset from parts (fixtures and generators outside
/// this module).
#[allow(clippy::too_many_arguments)]
pub fn assemble_dataset(
    graph: SparseGraph,
    x: DenseMatrix,
    y: Vec<usize>,
    train_mask: Vec<bool>,
    val_mask: Vec<bool>,
    test_mask: Vec<bool>,
    class_count: usize,
    name: impl Into<String>,
) -> Result<Dataset> {
    let ds = Dataset {
        graph,
        x,
        y,
        train_mask,
        val_mask,
        test_mask,
        class_count,
        name: name.into(),
        ratios: SplitRatios::default(),
        split_seed: 0,
        split_from_file: true,
    };
    ds.validate()?;
    Ok(ds)
}
