//! Data handling: labeled CSV datasets, synthetic points with known ground
//! truth divergences, triplet sampling, and fold splitting.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A feature matrix with one integer class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Distinct label strings in first-appearance order; `labels` index here.
    pub label_names: Vec<String>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map(|f| f.len()).unwrap_or(0)
    }

    /// Largest feature magnitude, the `R` appearing in the bound formulas.
    pub fn radius(&self) -> f64 {
        self.features
            .iter()
            .flat_map(|f| f.iter())
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Rows whose positions appear in `idx`.
    pub fn subset(&self, idx: &[usize]) -> Result<LabeledDataset> {
        for &i in idx {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange { index: i, len: self.len() });
            }
        }
        Ok(LabeledDataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            label_names: self.label_names.clone(),
        })
    }
}

/// Load a headered CSV file, taking every column except `label_column` as a
/// numeric feature.
pub fn load_csv(path: &Path, label_column: &str) -> Result<LabeledDataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut feats = Vec::with_capacity(headers.len() - 1);
        for (col, cell) in record.iter().enumerate() {
            if col == label_at {
                let label = match label_names.iter().position(|n| n == cell) {
                    Some(i) => i,
                    None => {
                        label_names.push(cell.to_string());
                        label_names.len() - 1
                    }
                };
                labels.push(label);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| Error::CsvCell {
                    row: row + 2, // 1-based, counting the header line
                    col: headers.get(col).unwrap_or("?").to_string(),
                    message: format!("expected a number, found {cell:?}"),
                })?;
                feats.push(v);
            }
        }
        if record.len() != headers.len() {
            return Err(Error::CsvCell {
                row: row + 2,
                col: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        features.push(feats);
    }
    if features.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no data rows", path.display())));
    }
    Ok(LabeledDataset { features, labels, label_names })
}

/// Ground-truth divergence families for synthetic experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    /// KL divergence between 2-category probability vectors.
    KlDirichlet,
    /// LogDet divergence between 2x2 covariance matrices stored as
    /// `(s11, s22, s12)`.
    LogdetWishart,
    /// Itakura-Saito divergence on positive 2-vectors.
    ItakuraSaito,
    /// Mahalanobis distance under a fixed matrix `[[2, 0.5], [0.5, 1]]`.
    Mahalanobis,
    /// Plain squared Euclidean distance on 2-vectors.
    SquaredEuclidean,
}

impl DivergenceKind {
    pub fn all() -> [DivergenceKind; 5] {
        [
            DivergenceKind::KlDirichlet,
            DivergenceKind::LogdetWishart,
            DivergenceKind::ItakuraSaito,
            DivergenceKind::Mahalanobis,
            DivergenceKind::SquaredEuclidean,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            DivergenceKind::KlDirichlet => "kl_dirichlet",
            DivergenceKind::LogdetWishart => "logdet_wishart",
            DivergenceKind::ItakuraSaito => "itakura_saito",
            DivergenceKind::Mahalanobis => "mahalanobis",
            DivergenceKind::SquaredEuclidean => "squared_euclidean",
        }
    }

    pub fn parse(s: &str) -> Result<DivergenceKind> {
        Self::all()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown divergence kind {s:?}")))
    }

    pub fn dim(&self) -> usize {
        match self {
            DivergenceKind::LogdetWishart => 3,
            _ => 2,
        }
    }
}

const SIMPLEX_FLOOR: f64 = 1e-9;
const POSITIVE_FLOOR: f64 = 0.1;
const MAHALANOBIS_MATRIX: [[f64; 2]; 2] = [[2.0, 0.5], [0.5, 1.0]];

/// Specification of a synthetic point sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: DivergenceKind,
    pub n: usize,
    /// Standard deviation of the Gaussian noise added to targets.
    pub sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(kind: DivergenceKind, n: usize, seed: u64) -> Self {
        SyntheticSpec { kind, n, sigma: 0.05, seed }
    }
}

/// Sample `n` points from the natural domain of the divergence family.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<Vec<f64>>> {
    if spec.n == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pts = (0..spec.n)
        .map(|_| match spec.kind {
            DivergenceKind::KlDirichlet => {
                // Dirichlet(1, 1) is uniform over the 1-simplex.
                let p: f64 = rng.gen::<f64>().clamp(SIMPLEX_FLOOR, 1.0 - SIMPLEX_FLOOR);
                vec![p, 1.0 - p]
            }
            DivergenceKind::LogdetWishart => {
                // Wishart(I, 10): a sum of ten Gaussian outer products.
                let mut s = [0.0f64; 3];
                for _ in 0..10 {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    s[0] += a * a;
                    s[1] += b * b;
                    s[2] += a * b;
                }
                s.to_vec()
            }
            DivergenceKind::ItakuraSaito => (0..2)
                .map(|_| rng.gen_range(-0.4..1.6f64).max(POSITIVE_FLOOR))
                .collect(),
            DivergenceKind::Mahalanobis | DivergenceKind::SquaredEuclidean => {
                (0..2).map(|_| rng.gen_range(-0.4..1.6f64)).collect()
            }
        })
        .collect();
    Ok(pts)
}

/// The exact divergence of the family, with no noise.
pub fn oracle_divergence(kind: DivergenceKind, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = kind.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: x.len() });
    }
    if y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: y.len() });
    }
    let v = match kind {
        DivergenceKind::KlDirichlet => x
            .iter()
            .zip(y)
            .map(|(p, q)| p * (p / q).ln())
            .sum(),
        DivergenceKind::LogdetWishart => {
            // D(X, Y) = tr(X Y^{-1}) - ln det(X Y^{-1}) - 2 for 2x2 SPD.
            let det_x = x[0] * x[1] - x[2] * x[2];
            let det_y = y[0] * y[1] - y[2] * y[2];
            if det_x <= 0.0 || det_y <= 0.0 || x[0] <= 0.0 || y[0] <= 0.0 {
                return Err(Error::InvalidArgument(
                    "logdet divergence needs positive definite inputs".into(),
                ));
            }
            let trace = (x[0] * y[1] - 2.0 * x[2] * y[2] + x[1] * y[0]) / det_y;
            trace - (det_x / det_y).ln() - 2.0
        }
        DivergenceKind::ItakuraSaito => x
            .iter()
            .zip(y)
            .map(|(p, q)| p / q - (p / q).ln() - 1.0)
            .sum(),
        DivergenceKind::Mahalanobis => {
            let u = [x[0] - y[0], x[1] - y[1]];
            let m = MAHALANOBIS_MATRIX;
            u[0] * (m[0][0] * u[0] + m[0][1] * u[1]) + u[1] * (m[1][0] * u[0] + m[1][1] * u[1])
        }
        DivergenceKind::SquaredEuclidean => {
            x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
        }
    };
    Ok(v)
}

/// Oracle divergences for the given pairs plus Gaussian observation noise.
pub fn noisy_targets(
    kind: DivergenceKind,
    points: &[Vec<f64>],
    pairs: &[[usize; 2]],
    sigma: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if sigma < 0.0 {
        return Err(Error::InvalidArgument("sigma must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pairs
        .iter()
        .map(|&[i, j]| {
            if i >= points.len() || j >= points.len() {
                return Err(Error::IndexOutOfRange { index: i.max(j), len: points.len() });
            }
            let y = oracle_divergence(kind, &points[i], &points[j])?;
            Ok(if sigma > 0.0 { y + noise.sample(&mut rng) } else { y })
        })
        .collect()
}

/// Sampling cap: give up on a triplet after this many rejected draws.
/// Sample `m` class-consistent triplets `(i, j, k)`: `j` shares the class of
/// `i`, `k` does not. Requires at least one class with two members and one
/// point outside it.
pub fn sample_triplets(labels: &[usize], m: usize, seed: u64) -> Result<Vec<[usize; 3]>> {
    let n = labels.len();
    if n < 3 {
        return Err(Error::InvalidArgument("triplet sampling needs at least 3 points".into()));
    }
    // Classes are drawn uniformly (not by frequency), so small classes get
    // the same share of supervision as large ones.
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| (0..n).filter(|&i| labels[i] == c).collect())
        .collect();
    let anchors: Vec<usize> = (0..classes.len()).filter(|&c| members[c].len() >= 2).collect();
    if anchors.is_empty() || classes.len() < 2 {
        return Err(Error::InvalidArgument(
            "could not sample triplets: classes too small or missing".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let c = anchors[rng.gen_range(0..anchors.len())];
        let i = members[c][rng.gen_range(0..members[c].len())];
        let mut j = i;
        while j == i {
            j = members[c][rng.gen_range(0..members[c].len())];
        }
        let mut other = c;
        while other == c {
            other = rng.gen_range(0..classes.len());
        }
        let k = members[other][rng.gen_range(0..members[other].len())];
        out.push([i, j, k]);
    }
    Ok(out)
}

/// Split `0..n` into `folds` disjoint index sets of sizes differing by at
/// most one, after a seeded shuffle.
pub fn split_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds == 0 || folds > n {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} items into {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(order[at..at + len].to_vec());
        at += len;
    }
    Ok(out)
}
