//! Consumers of a learned divergence: Bregman k-means, similarity ranking,
//! and nearest-neighbor classification, plus the agreement metrics used to
//! score them against reference labels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::MaxAffineModel;

/// Output of [`bregman_kmeans`].
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Final sum of divergences to assigned centroids.
    pub objective: f64,
    /// Objective after each assignment step of the best restart; non-increasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// K-means under the model's divergence: points are assigned to the centroid
/// minimizing `D(x_i, mu_c)` and centroids update to cluster means, which is
/// the exact minimizer for any Bregman divergence in its second argument.
///
/// Runs `restarts` seeded initializations and keeps the best objective.
/// Emptied clusters are re-seeded to the point farthest from its centroid.
pub fn bregman_kmeans(
    model: &MaxAffineModel,
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusteringResult> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count must satisfy 1 <= k <= n (k = {k}, n = {n})"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let d = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusteringResult> = None;
    for _ in 0..restarts {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let centroids: Vec<Vec<f64>> = order[..k].iter().map(|&i| points[i].clone()).collect();
        let run = lloyd(model, points, centroids, d)?;
        let better = match &best {
            Some(b) => run.objective < b.objective,
            None => true,
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

const KMEANS_MAX_ITER: usize = 200;

fn lloyd(
    model: &MaxAffineModel,
    points: &[Vec<f64>],
    mut centroids: Vec<Vec<f64>>,
    d: usize,
) -> Result<ClusteringResult> {
    let n = points.len();
    let k = centroids.len();
    let mut assignment = vec![0usize; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        // Assignment step; ties go to the lowest cluster index.
        let mut objective = 0.0;
        let mut per_point = vec![0.0; n];
        for i in 0..n {
            let mut best = f64::INFINITY;
            let mut at = 0;
            for (c, mu) in centroids.iter().enumerate() {
                let v = model.divergence(&points[i], mu)?;
                if v < best {
                    best = v;
                    at = c;
                }
            }
            assignment[i] = at;
            per_point[i] = best;
            objective += best;
        }

        // Re-seed empty clusters to the worst-served point.
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| per_point[a].partial_cmp(&per_point[b]).unwrap())
                    .unwrap();
                centroids[c] = points[far].clone();
                assignment[far] = c;
                counts[assignment[far]] += 1;
                per_point[far] = 0.0;
                reseeded = true;
            }
        }
        if reseeded {
            iterations += 1;
            if iterations >= KMEANS_MAX_ITER {
                trace.push(objective);
                return Ok(ClusteringResult {
                    assignment,
                    centroids,
                    objective,
                    objective_trace: trace,
                    iterations,
                });
            }
            continue;
        }
        trace.push(objective);

        // Update step.
        let mut next = vec![vec![0.0; d]; k];
        let mut sizes = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            sizes[c] += 1;
            for f in 0..d {
                next[c][f] += points[i][f];
            }
        }
        for c in 0..k {
            for f in 0..d {
                next[c][f] /= sizes[c] as f64;
            }
        }
        iterations += 1;
        let converged = next == centroids || iterations >= KMEANS_MAX_ITER;
        centroids = next;
        if converged {
            return Ok(ClusteringResult {
                assignment,
                centroids,
                objective,
                objective_trace: trace,
                iterations,
            });
        }
    }
}

/// Which argument of `D` the query occupies when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuerySide {
    /// Rank by `D(x_q, x_i)`.
    First,
    /// Rank by `D(x_i, x_q)`.
    Second,
}

/// Mean ranking quality over all queries.
#[derive(Debug, Clone)]
pub struct RankingResult {
    /// Mean pairwise AUC: probability a same-class point outranks a
    /// different-class one, ties counted half.
    pub auc: f64,
    /// Mean average precision of the same-class positions in each ranking.
    pub average_precision: f64,
    pub queries_evaluated: usize,
    /// Queries skipped because no other point shares their class.
    pub queries_skipped: usize,
}

/// Use each point in turn as a query and rank all remaining points by
/// divergence to it, scoring against class labels.
pub fn rank_all(
    model: &MaxAffineModel,
    points: &[Vec<f64>],
    labels: &[usize],
    side: QuerySide,
) -> Result<RankingResult> {
    let n = points.len();
    if labels.len() != n {
        return Err(Error::InvalidArgument("labels must match points".into()));
    }
    let mut auc_sum = 0.0;
    let mut ap_sum = 0.0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for q in 0..n {
        let mut scored: Vec<(f64, bool)> = Vec::with_capacity(n - 1);
        for i in 0..n {
            if i == q {
                continue;
            }
            let dist = match side {
                QuerySide::First => model.divergence(&points[q], &points[i])?,
                QuerySide::Second => model.divergence(&points[i], &points[q])?,
            };
            scored.push((dist, labels[i] == labels[q]));
        }
        let positives = scored.iter().filter(|s| s.1).count();
        if positives == 0 || positives == scored.len() {
            skipped += 1;
            continue;
        }
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        auc_sum += pairwise_auc(&scored);
        ap_sum += average_precision(&scored.iter().map(|s| s.1).collect::<Vec<_>>());
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::InvalidArgument("no query had both classes present".into()));
    }
    Ok(RankingResult {
        auc: auc_sum / evaluated as f64,
        average_precision: ap_sum / evaluated as f64,
        queries_evaluated: evaluated,
        queries_skipped: skipped,
    })
}

/// AUC over a score-sorted list: fraction of (positive, negative) pairs where
/// the positive has the smaller score, ties at equal scores counted half.
fn pairwise_auc(sorted: &[(f64, bool)]) -> f64 {
    let mut concordant = 0.0;
    let mut total = 0usize;
    for (i, a) in sorted.iter().enumerate() {
        if !a.1 {
            continue;
        }
        for b in sorted {
            if b.1 {
                continue;
            }
            total += 1;
            if a.0 < b.0 {
                concordant += 1.0;
            } else if a.0 == b.0 {
                concordant += 0.5;
            }
        }
        let _ = i;
    }
    concordant / total as f64
}

/// Average precision of a relevance list ordered best-first.
pub fn average_precision(relevant: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &r) in relevant.iter().enumerate() {
        if r {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// Classify each test point by majority vote among its `k` nearest training
/// points under `D(test, train)`. Vote ties go to the smallest label;
/// distance ties at the neighborhood boundary go to the lower point index.
pub fn knn_classify(
    model: &MaxAffineModel,
    train: &[Vec<f64>],
    train_labels: &[usize],
    test: &[Vec<f64>],
    k: usize,
) -> Result<Vec<usize>> {
    if train.is_empty() || k == 0 {
        return Err(Error::InvalidArgument("need k >= 1 and non-empty training data".into()));
    }
    if train_labels.len() != train.len() {
        return Err(Error::InvalidArgument("labels must match training points".into()));
    }
    let k = k.min(train.len());
    let mut out = Vec::with_capacity(test.len());
    for x in test {
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.len());
        for (i, t) in train.iter().enumerate() {
            dist.push((model.divergence(x, t)?, i));
        }
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut votes: Vec<(usize, usize)> = Vec::new();
        for &(_, i) in &dist[..k] {
            let label = train_labels[i];
            match votes.iter_mut().find(|v| v.0 == label) {
                Some(v) => v.1 += 1,
                None => votes.push((label, 1)),
            }
        }
        votes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out.push(votes[0].0);
    }
    Ok(out)
}

/// Rand index between two labelings: fraction of point pairs on which they
/// agree (together in both or apart in both). A single point scores 1.
pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("labelings must have equal length".into()));
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidArgument("labelings must be non-empty".into()));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}

/// Cluster purity: each cluster counts its most common reference label.
pub fn purity(clusters: &[usize], labels: &[usize]) -> Result<f64> {
    if clusters.len() != labels.len() {
        return Err(Error::InvalidArgument("labelings must have equal length".into()));
    }
    if clusters.is_empty() {
        return Err(Error::InvalidArgument("labelings must be non-empty".into()));
    }
    let mut counts: Vec<(usize, usize, usize)> = Vec::new(); // (cluster, label, count)
    for (&c, &l) in clusters.iter().zip(labels) {
        match counts.iter_mut().find(|e| e.0 == c && e.1 == l) {
            Some(e) => e.2 += 1,
            None => counts.push((c, l, 1)),
        }
    }
    let mut clusters_seen: Vec<usize> = clusters.to_vec();
    clusters_seen.sort_unstable();
    clusters_seen.dedup();
    let mut total = 0usize;
    for c in clusters_seen {
        total += counts.iter().filter(|e| e.0 == c).map(|e| e.2).max().unwrap_or(0);
    }
    Ok(total as f64 / clusters.len() as f64)
}

/// Fraction of predictions matching the reference labels.
pub fn accuracy(predicted: &[usize], reference: &[usize]) -> Result<f64> {
    if predicted.len() != reference.len() || predicted.is_empty() {
        return Err(Error::InvalidArgument("label lists must be non-empty and equal".into()));
    }
    let hits = predicted.iter().zip(reference).filter(|(p, r)| p == r).count();
    Ok(hits as f64 / predicted.len() as f64)
}
