//! End-to-end evaluation protocols: repeated train/test splits scored with
//! clustering, ranking, and nearest-neighbor metrics, and regression curves
//! against a Mahalanobis least-squares baseline on synthetic families.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{
    generate_synthetic, noisy_targets, oracle_divergence, sample_triplets, split_folds,
    DivergenceKind, LabeledDataset, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::learn::{
    cross_validate, train_pbdl, train_pbdl_partitioned, train_regression, CvConfig, QuadrupletSet,
    RegressionSet, TrainConfig,
};
use crate::partition::farthest_point_partition;
use crate::solver::{solve_qp, QuadraticProgram, Residual};
use crate::tasks::{
    accuracy, bregman_kmeans, knn_classify, purity, rand_index, rank_all, QuerySide,
};

/// Mean of repeated measurements with a 95% normal confidence half-width.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// `1.96 * stderr`; zero when only one value was observed.
    pub half_width: f64,
    pub values: Vec<f64>,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let half_width = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            1.96 * (var / n).sqrt()
        } else {
            0.0
        };
        MetricSummary { mean, half_width, values }
    }
}

/// Settings for the relative-similarity protocol.
#[derive(Debug, Clone)]
pub struct RelativeConfig {
    pub repeats: usize,
    /// The data is split into this many folds; each repeat holds out one of
    /// them (rotating) and trains on the rest.
    pub outer_folds: usize,
    /// Triplets sampled from the training split per repeat.
    pub triplets: usize,
    pub margin: f64,
    /// Train with this many shared hyperplanes from a farthest-point
    /// partition; `None` uses the full one-hyperplane-per-point program.
    pub partition_k: Option<usize>,
    pub kmeans_restarts: usize,
    pub knn_k: usize,
    pub train: TrainConfig,
    /// Inner cross-validation for `lambda`; `None` keeps `train.lambda`.
    pub cv: Option<CvConfig>,
    pub seed: u64,
}

impl Default for RelativeConfig {
    fn default() -> Self {
        RelativeConfig {
            repeats: 20,
            outer_folds: 3,
            triplets: 2000,
            margin: 1.0,
            partition_k: None,
            kmeans_restarts: 5,
            knn_k: 5,
            train: TrainConfig::default(),
            cv: Some(CvConfig::default()),
            seed: 0,
        }
    }
}

/// Aggregated scores of the relative-similarity protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelativeSummary {
    pub rand_index: MetricSummary,
    pub purity: MetricSummary,
    pub auc: MetricSummary,
    pub average_precision: MetricSummary,
    pub knn_accuracy: MetricSummary,
    /// Regularization weight used in each repeat.
    pub lambdas: Vec<f64>,
}

/// Repeatedly split the dataset, learn a divergence from training triplets,
/// and score clustering, ranking, and k-NN on the held-out fold.
pub fn run_relative_protocol(
    dataset: &LabeledDataset,
    config: &RelativeConfig,
) -> Result<RelativeSummary> {
    if config.repeats == 0 || config.outer_folds < 2 {
        return Err(Error::InvalidArgument(
            "need at least one repeat and two outer folds".into(),
        ));
    }
    let n = dataset.len();
    let mut rand_vals = Vec::with_capacity(config.repeats);
    let mut purity_vals = Vec::with_capacity(config.repeats);
    let mut auc_vals = Vec::with_capacity(config.repeats);
    let mut ap_vals = Vec::with_capacity(config.repeats);
    let mut knn_vals = Vec::with_capacity(config.repeats);
    let mut lambdas = Vec::with_capacity(config.repeats);

    for r in 0..config.repeats {
        let seed = config.seed.wrapping_add(1000 * r as u64);
        let folds = split_folds(n, config.outer_folds, seed)?;
        let held = r % config.outer_folds;
        let test_idx = &folds[held];
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != held)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let train = dataset.subset(&train_idx)?;
        let test = dataset.subset(test_idx)?;

        let triplets = sample_triplets(&train.labels, config.triplets, seed ^ 0x5eed)?;
        let quads = QuadrupletSet::from_triplets(&triplets, config.margin)?;
        let partition = match config.partition_k {
            Some(k) => Some(farthest_point_partition(
                &train.features,
                k.min(train.len()),
                seed ^ 0xce11,
            )?),
            None => None,
        };

        let mut train_cfg = config.train.clone();
        if let Some(cv) = &config.cv {
            let mut cv = cv.clone();
            cv.seed = seed ^ 0xcf0d;
            let res =
                cross_validate(&train.features, &quads, partition.as_ref(), &train_cfg, &cv)?;
            train_cfg.lambda = res.best_lambda;
        }
        lambdas.push(train_cfg.lambda);
        let outcome = match &partition {
            Some(p) => train_pbdl_partitioned(&train.features, p, &quads, &train_cfg)?,
            None => train_pbdl(&train.features, &quads, &train_cfg)?,
        };
        let model = &outcome.model;

        let mut classes = test.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        let clustering = bregman_kmeans(
            model,
            &test.features,
            classes.len(),
            config.kmeans_restarts,
            seed ^ 0x4a3a,
        )?;
        rand_vals.push(rand_index(&clustering.assignment, &test.labels)?);
        purity_vals.push(purity(&clustering.assignment, &test.labels)?);

        // Queries sit in the divergence's second argument, matching the role
        // of centers in Bregman k-means.
        let ranking = rank_all(model, &test.features, &test.labels, QuerySide::Second)?;
        auc_vals.push(ranking.auc);
        ap_vals.push(ranking.average_precision);

        let predicted = knn_classify(
            model,
            &train.features,
            &train.labels,
            &test.features,
            config.knn_k,
        )?;
        knn_vals.push(accuracy(&predicted, &test.labels)?);
    }

    Ok(RelativeSummary {
        rand_index: MetricSummary::from_values(rand_vals),
        purity: MetricSummary::from_values(purity_vals),
        auc: MetricSummary::from_values(auc_vals),
        average_precision: MetricSummary::from_values(ap_vals),
        knn_accuracy: MetricSummary::from_values(knn_vals),
        lambdas,
    })
}

/// Settings for the synthetic regression protocol.
#[derive(Debug, Clone)]
pub struct RegressionConfig {
    pub kind: DivergenceKind,
    /// Training pair counts, e.g. `[20, 80, 320]`.
    pub schedule: Vec<usize>,
    /// Independent repetitions per schedule entry.
    pub seeds: usize,
    /// Observation noise on training targets.
    pub sigma: f64,
    /// Points the training pairs are drawn between; raised automatically when
    /// a schedule entry needs more ordered pairs than this allows.
    pub train_points: usize,
    pub test_points: usize,
    pub test_pairs: usize,
    pub train: TrainConfig,
    pub base_seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            kind: DivergenceKind::SquaredEuclidean,
            schedule: vec![20, 80, 320],
            seeds: 10,
            sigma: 0.05,
            train_points: 100,
            test_points: 100,
            test_pairs: 1000,
            train: TrainConfig::default(),
            base_seed: 0,
        }
    }
}

/// Test errors at one training size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionPoint {
    pub m: usize,
    pub pbdl_mse: MetricSummary,
    pub mahalanobis_mse: MetricSummary,
}

/// One divergence family's error curve over the training schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionCurve {
    pub kind: DivergenceKind,
    pub points: Vec<RegressionPoint>,
}

/// Smallest `p` with `p (p - 1) >= m` ordered pairs available.
fn points_for_pairs(m: usize) -> usize {
    let mut p = 2;
    while p * (p - 1) < m {
        p += 1;
    }
    p
}

/// Learn the divergence from noisy value observations at increasing sample
/// sizes and report held-out mean squared error against the noiseless oracle,
/// next to a least-squares Mahalanobis baseline.
pub fn run_regression_protocol(config: &RegressionConfig) -> Result<RegressionCurve> {
    if config.schedule.is_empty() || config.seeds == 0 {
        return Err(Error::InvalidArgument("schedule and seeds must be non-empty".into()));
    }
    let kind = config.kind;
    let mut points = Vec::with_capacity(config.schedule.len());
    for &m in &config.schedule {
        if m == 0 {
            return Err(Error::InvalidArgument("schedule entries must be positive".into()));
        }
        let mut pbdl_mse = Vec::with_capacity(config.seeds);
        let mut maha_mse = Vec::with_capacity(config.seeds);
        for s in 0..config.seeds {
            let seed = config.base_seed.wrapping_add(7919 * s as u64);
            let p = config.train_points.max(points_for_pairs(m));
            let train_pts =
                generate_synthetic(&SyntheticSpec { kind, n: p, sigma: config.sigma, seed })?;
            let mut pairs: Vec<[usize; 2]> = (0..p)
                .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| [i, j]))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a17);
            pairs.shuffle(&mut rng);
            pairs.truncate(m);
            let targets = noisy_targets(kind, &train_pts, &pairs, config.sigma, seed ^ 0x0153)?;
            let set = RegressionSet::new(pairs.clone(), targets.clone())?;
            let outcome = train_regression(&train_pts, &set, &config.train)?;

            let maha = fit_mahalanobis(&train_pts, &pairs, &targets)?;

            let test_pts = generate_synthetic(&SyntheticSpec {
                kind,
                n: config.test_points,
                sigma: 0.0,
                seed: seed ^ 0x7e57,
            })?;
            let mut test_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a19);
            let mut err_pbdl = 0.0;
            let mut err_maha = 0.0;
            for _ in 0..config.test_pairs {
                let i = rand::Rng::gen_range(&mut test_rng, 0..test_pts.len());
                let mut j = rand::Rng::gen_range(&mut test_rng, 0..test_pts.len());
                while j == i {
                    j = rand::Rng::gen_range(&mut test_rng, 0..test_pts.len());
                }
                let truth = oracle_divergence(kind, &test_pts[i], &test_pts[j])?;
                let d1 = outcome.model.divergence(&test_pts[i], &test_pts[j])?;
                let d2 = mahalanobis_eval(&maha, &test_pts[i], &test_pts[j]);
                err_pbdl += (d1 - truth) * (d1 - truth);
                err_maha += (d2 - truth) * (d2 - truth);
            }
            pbdl_mse.push(err_pbdl / config.test_pairs as f64);
            maha_mse.push(err_maha / config.test_pairs as f64);
        }
        points.push(RegressionPoint {
            m,
            pbdl_mse: MetricSummary::from_values(pbdl_mse),
            mahalanobis_mse: MetricSummary::from_values(maha_mse),
        });
    }
    Ok(RegressionCurve { kind, points })
}

/// Least-squares fit of a symmetric matrix `M` to targets
/// `y ~ (x - x')^T M (x - x')`, returned as the upper triangle in row order.
pub fn fit_mahalanobis(
    points: &[Vec<f64>],
    pairs: &[[usize; 2]],
    targets: &[f64],
) -> Result<Vec<f64>> {
    if pairs.is_empty() || pairs.len() != targets.len() {
        return Err(Error::InvalidArgument("pairs and targets must be non-empty and equal".into()));
    }
    let d = points.first().map(|p| p.len()).unwrap_or(0);
    let vars = d * (d + 1) / 2;
    let mut qp = QuadraticProgram::new(vars);
    qp.residual_weight = 1.0 / pairs.len() as f64;
    for (&[i, j], &y) in pairs.iter().zip(targets) {
        let u: Vec<f64> = (0..d).map(|f| points[i][f] - points[j][f]).collect();
        let mut terms = Vec::with_capacity(vars);
        let mut at = 0;
        for a in 0..d {
            for b in a..d {
                let coeff = if a == b { u[a] * u[a] } else { 2.0 * u[a] * u[b] };
                terms.push((at, coeff));
                at += 1;
            }
        }
        qp.residuals.push(Residual { terms, constant: -y });
    }
    let rep = solve_qp(&qp, &Default::default())?;
    Ok(rep.solution)
}

/// Evaluate the quadratic form fit by [`fit_mahalanobis`].
pub fn mahalanobis_eval(upper: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let u: Vec<f64> = (0..d).map(|f| x[f] - y[f]).collect();
    let mut at = 0;
    let mut out = 0.0;
    for a in 0..d {
        for b in a..d {
            let coeff = if a == b { u[a] * u[a] } else { 2.0 * u[a] * u[b] };
            out += upper[at] * coeff;
            at += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> LabeledDataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..12 {
            let t = (i % 4) as f64 * 0.1;
            if i < 6 {
                features.push(vec![t, 0.1 * (i as f64 % 3.0)]);
                labels.push(0);
            } else {
                features.push(vec![2.0 + t, 2.0 + 0.1 * (i as f64 % 3.0)]);
                labels.push(1);
            }
        }
        LabeledDataset { features, labels, label_names: vec!["a".into(), "b".into()] }
    }

    #[test]
    fn relative_protocol_runs_and_separates_blobs() {
        let cfg = RelativeConfig {
            repeats: 2,
            outer_folds: 3,
            triplets: 40,
            kmeans_restarts: 2,
            cv: None,
            ..RelativeConfig::default()
        };
        let summary = run_relative_protocol(&blobs(), &cfg).unwrap();
        assert_eq!(summary.lambdas.len(), 2);
        assert!(summary.auc.mean > 0.9, "auc = {}", summary.auc.mean);
        assert!(summary.knn_accuracy.mean > 0.9);
        assert!(summary.rand_index.mean > 0.9);
    }

    #[test]
    fn metric_summary_half_width() {
        let s = MetricSummary::from_values(vec![1.0, 2.0, 3.0]);
        assert!((s.mean - 2.0).abs() < 1e-12);
        // sd = 1, stderr = 1/sqrt(3)
        assert!((s.half_width - 1.96 / 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn mahalanobis_fit_recovers_exact_form() {
        // Targets generated by M = [[2, 0.5], [0.5, 1]].
        let pts = generate_synthetic(&SyntheticSpec::new(DivergenceKind::Mahalanobis, 10, 4))
            .unwrap();
        let pairs: Vec<[usize; 2]> = (0..10)
            .flat_map(|i| (0..10).filter(move |&j| j != i).map(move |j| [i, j]))
            .collect();
        let targets = noisy_targets(DivergenceKind::Mahalanobis, &pts, &pairs, 0.0, 0).unwrap();
        let m = fit_mahalanobis(&pts, &pairs, &targets).unwrap();
        assert!((m[0] - 2.0).abs() < 1e-5, "{m:?}");
        assert!((m[1] - 0.5).abs() < 1e-5, "{m:?}");
        assert!((m[2] - 1.0).abs() < 1e-5, "{m:?}");
    }

    #[test]
    fn points_for_pairs_is_minimal() {
        assert_eq!(points_for_pairs(20), 5);
        assert_eq!(points_for_pairs(80), 10);
        assert_eq!(points_for_pairs(320), 19);
        assert_eq!(points_for_pairs(1), 2);
    }

    #[test]
    fn regression_protocol_beats_baseline_on_curved_family() {
        let cfg = RegressionConfig {
            kind: DivergenceKind::ItakuraSaito,
            schedule: vec![60],
            seeds: 2,
            train_points: 20,
            test_points: 40,
            test_pairs: 200,
            ..RegressionConfig::default()
        };
        let curve = run_regression_protocol(&cfg).unwrap();
        let point = &curve.points[0];
        assert!(point.pbdl_mse.mean.is_finite());
        assert!(point.mahalanobis_mse.mean.is_finite());
        assert!(
            point.pbdl_mse.mean < point.mahalanobis_mse.mean,
            "pbdl {} vs mahalanobis {}",
            point.pbdl_mse.mean,
            point.mahalanobis_mse.mean
        );
    }
}
