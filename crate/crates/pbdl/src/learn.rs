//! Fitting max-affine Bregman generators from relative comparisons or
//! divergence regression targets.
//!
//! The relative-similarity programs minimize hinge loss over quadruplet
//! constraints `D(i, j) + margin <= D(k, l)` subject to the pairwise convexity
//! constraints on the generator values, with the l1 Lipschitz constant of the
//! slopes regularized at weight `lambda`. The regression program replaces the
//! hinge terms with squared residuals against observed divergence values.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{bounds, BoundInputs};
use crate::error::{Error, Result};
use crate::interpolant::InterpolantSolution;
use crate::model::{FeatureScale, MaxAffineModel};
use crate::partition::Partition;
use crate::solver::{
    solve_lp, solve_qp, Constraint, LinearProgram, QuadraticProgram, Residual, SolveStatus,
    SolverConfig, VarBounds,
};

/// Relative-similarity supervision: each quadruplet `[i, j, k, l]` states that
/// `x_i` is more similar to `x_j` than `x_k` is to `x_l`, enforced with the
/// given margin. A triplet `(i, j, k)` is the quadruplet `[i, j, i, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupletSet {
    pub quads: Vec<[usize; 4]>,
    pub margin: f64,
}

impl QuadrupletSet {
    pub fn new(quads: Vec<[usize; 4]>, margin: f64) -> Result<Self> {
        if !(margin > 0.0) || !margin.is_finite() {
            return Err(Error::InvalidArgument("margin must be positive and finite".into()));
        }
        Ok(QuadrupletSet { quads, margin })
    }

    pub fn from_triplets(triplets: &[[usize; 3]], margin: f64) -> Result<Self> {
        Self::new(triplets.iter().map(|&[i, j, k]| [i, j, i, k]).collect(), margin)
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for q in &self.quads {
            for &idx in q {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, len: n });
                }
            }
        }
        Ok(())
    }

    /// Sorted unique point indices referenced by the quadruplets.
    pub fn support(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.quads.iter().flatten().copied().collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    fn subset(&self, keep: &[usize]) -> QuadrupletSet {
        QuadrupletSet {
            quads: keep.iter().map(|&t| self.quads[t]).collect(),
            margin: self.margin,
        }
    }
}

/// Divergence regression supervision: observed values `y_t ~ D(x_i, x_j)` for
/// index pairs `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSet {
    pub pairs: Vec<[usize; 2]>,
    pub targets: Vec<f64>,
}

impl RegressionSet {
    pub fn new(pairs: Vec<[usize; 2]>, targets: Vec<f64>) -> Result<Self> {
        if pairs.len() != targets.len() {
            return Err(Error::InvalidArgument("pairs and targets must have equal length".into()));
        }
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidArgument("non-finite regression target".into()));
        }
        Ok(RegressionSet { pairs, targets })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Settings for a single training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Weight of the Lipschitz regularizer. Zero drops the regularizer and the
    /// `L` variable entirely.
    pub lambda: f64,
    /// Rescale features to `[-1, 1]` before solving; the transform is stored
    /// on the returned model.
    pub feature_scale: bool,
    /// Hard Lipschitz cap for regression training; `None` leaves the slopes
    /// unconstrained.
    pub lipschitz: Option<f64>,
    pub solver: SolverConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.01,
            feature_scale: false,
            lipschitz: None,
            solver: SolverConfig::default(),
        }
    }
}

/// A trained model together with solve diagnostics.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MaxAffineModel,
    /// Objective value of the underlying program.
    pub objective: f64,
    /// Mean hinge loss of the returned model on the training quadruplets
    /// (zero for regression training).
    pub mean_hinge: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().map(|p| p.len()).unwrap_or(0);
    if d == 0 {
        return Err(Error::InvalidArgument("points must be non-empty with dim >= 1".into()));
    }
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite point coordinate".into()));
        }
    }
    Ok(d)
}

fn scaled_points(points: &[Vec<f64>], enabled: bool) -> (Vec<Vec<f64>>, Option<FeatureScale>) {
    if enabled {
        if let Some(fs) = FeatureScale::fit(points) {
            let rows = points.iter().map(|p| fs.apply(p)).collect();
            return (rows, Some(fs));
        }
    }
    (points.to_vec(), None)
}

/// Train the full interpolant model: one hyperplane per distinct point
/// referenced by the quadruplets.
///
/// Variables are the generator values `z_i` (the first pinned to zero, since
/// the program is invariant under a uniform shift of `z`), the subgradients
/// `a_i`, slack `zeta_t` per quadruplet, and when `lambda > 0` the slope
/// l1-norm surrogates `s_i` and the budget `L`.
pub fn train_pbdl(
    points: &[Vec<f64>],
    quads: &QuadrupletSet,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let d = check_points(points)?;
    quads.validate(points.len())?;
    let (rows, fs) = scaled_points(points, config.feature_scale);
    if quads.is_empty() {
        let mut model = MaxAffineModel::constant(d, 0.0);
        if let Some(fs) = fs {
            model = model.with_feature_scale(fs);
        }
        return Ok(TrainOutcome {
            model,
            objective: 0.0,
            mean_hinge: 0.0,
            iterations: 0,
            status: SolveStatus::Optimal,
        });
    }
    if config.lambda < 0.0 || !config.lambda.is_finite() {
        return Err(Error::InvalidArgument("lambda must be non-negative and finite".into()));
    }

    let support = quads.support();
    let n = support.len();
    let mut compact = vec![usize::MAX; points.len()];
    for (c, &i) in support.iter().enumerate() {
        compact[i] = c;
    }
    let x: Vec<&[f64]> = support.iter().map(|&i| rows[i].as_slice()).collect();
    let m = quads.len();
    let with_reg = config.lambda > 0.0;

    // Layout: z_1..z_{n-1} | a (n*d) | [s (n*d) | L] | zeta (m).
    let off_a = n - 1;
    let off_s = off_a + n * d;
    let (off_l, off_zeta, num_vars) = if with_reg {
        (off_s + n * d, off_s + n * d + 1, off_s + n * d + 1 + m)
    } else {
        (0, off_s, off_s + m)
    };

    let mut lp = LinearProgram::new(num_vars);
    for t in 0..m {
        lp.objective[off_zeta + t] = 1.0;
    }
    if with_reg {
        lp.objective[off_l] = config.lambda;
    }

    // Appends the terms of sign * D(i, j) = sign * (z_i - z_j - a_j^T (x_i - x_j)).
    let push_div = |terms: &mut Vec<(usize, f64)>, i: usize, j: usize, sign: f64| {
        if i > 0 {
            terms.push((i - 1, sign));
        }
        if j > 0 {
            terms.push((j - 1, -sign));
        }
        for f in 0..d {
            terms.push((off_a + j * d + f, -sign * (x[i][f] - x[j][f])));
        }
    };

    for (t, q) in quads.quads.iter().enumerate() {
        let [i, j, k, l] = q.map(|idx| compact[idx]);
        let mut terms = Vec::with_capacity(4 + 2 * d + 1);
        push_div(&mut terms, i, j, 1.0);
        push_div(&mut terms, k, l, -1.0);
        terms.push((off_zeta + t, -1.0));
        lp.constraints.push(Constraint::new(terms, -quads.margin));
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // z_i - z_j >= a_j^T (x_i - x_j)
            let mut terms = Vec::with_capacity(2 + d);
            push_div(&mut terms, i, j, -1.0);
            lp.constraints.push(Constraint::new(terms, 0.0));
        }
    }
    if with_reg {
        for i in 0..n {
            let mut sum = Vec::with_capacity(d + 1);
            for f in 0..d {
                let a = off_a + i * d + f;
                let s = off_s + i * d + f;
                lp.constraints.push(Constraint::new(vec![(a, 1.0), (s, -1.0)], 0.0));
                lp.constraints.push(Constraint::new(vec![(a, -1.0), (s, -1.0)], 0.0));
                sum.push((s, 1.0));
            }
            sum.push((off_l, -1.0));
            lp.constraints.push(Constraint::new(sum, 0.0));
        }
    }
    lp.bounds = vec![VarBounds::default(); num_vars];
    for t in 0..m {
        lp.bounds[off_zeta + t].lower = Some(0.0);
    }
    if with_reg {
        lp.bounds[off_l].lower = Some(0.0);
    }

    let rep = solve_lp(&lp, &config.solver)?;
    if rep.status == SolveStatus::Infeasible {
        return Err(Error::Solver("relative-similarity program reported infeasible".into()));
    }
    let sol = &rep.solution;
    let values: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { sol[i - 1] }).collect();
    let subgradients: Vec<Vec<f64>> =
        (0..n).map(|i| sol[off_a + i * d..off_a + (i + 1) * d].to_vec()).collect();
    let interp = InterpolantSolution::new(x.iter().map(|p| p.to_vec()).collect(), values, subgradients)?;
    let mut model = interp.to_model()?;
    if let Some(fs) = fs {
        model = model.with_feature_scale(fs);
    }
    let mean_hinge = quadruplet_hinge(&model, points, quads)?;
    Ok(TrainOutcome {
        model,
        objective: rep.objective,
        mean_hinge,
        iterations: rep.iterations,
        status: rep.status,
    })
}

/// Train with a fixed partition of the points into `K` cells, sharing one
/// hyperplane per cell.
///
/// With the cell of point `i` written `p_i`, the divergence becomes
/// `D(i, j) = b_{p_i} - b_{p_j} + (a_{p_i} - a_{p_j})^T x_i` and the convexity
/// constraints require the assigned hyperplane to attain the max at each
/// point: `b_{p_j} + a_{p_j}^T x_j >= b_k + a_k^T x_j` for all `j`, `k`.
pub fn train_pbdl_partitioned(
    points: &[Vec<f64>],
    partition: &Partition,
    quads: &QuadrupletSet,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let d = check_points(points)?;
    let n = points.len();
    quads.validate(n)?;
    if partition.assignment.len() != n {
        return Err(Error::InvalidArgument("partition does not cover the point set".into()));
    }
    let k = partition.k();
    if k == 0 || partition.assignment.iter().any(|&c| c >= k) {
        return Err(Error::InvalidArgument("partition has out-of-range cells".into()));
    }
    let (rows, fs) = scaled_points(points, config.feature_scale);
    if quads.is_empty() {
        let mut model = MaxAffineModel::constant(d, 0.0);
        if let Some(fs) = fs {
            model = model.with_feature_scale(fs);
        }
        return Ok(TrainOutcome {
            model,
            objective: 0.0,
            mean_hinge: 0.0,
            iterations: 0,
            status: SolveStatus::Optimal,
        });
    }
    if config.lambda < 0.0 || !config.lambda.is_finite() {
        return Err(Error::InvalidArgument("lambda must be non-negative and finite".into()));
    }
    let m = quads.len();
    let with_reg = config.lambda > 0.0;
    let p = &partition.assignment;

    // Layout: b_1..b_{K-1} | a (K*d) | [s (K*d) | L] | zeta (m).
    let off_a = k - 1;
    let off_s = off_a + k * d;
    let (off_l, off_zeta, num_vars) = if with_reg {
        (off_s + k * d, off_s + k * d + 1, off_s + k * d + 1 + m)
    } else {
        (0, off_s, off_s + m)
    };

    let mut lp = LinearProgram::new(num_vars);
    for t in 0..m {
        lp.objective[off_zeta + t] = 1.0;
    }
    if with_reg {
        lp.objective[off_l] = config.lambda;
    }

    // Appends sign * (b_{ci} - b_{cj} + (a_{ci} - a_{cj})^T x).
    let push_div = |terms: &mut Vec<(usize, f64)>, ci: usize, cj: usize, x: &[f64], sign: f64| {
        if ci == cj {
            return;
        }
        if ci > 0 {
            terms.push((ci - 1, sign));
        }
        if cj > 0 {
            terms.push((cj - 1, -sign));
        }
        for f in 0..d {
            terms.push((off_a + ci * d + f, sign * x[f]));
            terms.push((off_a + cj * d + f, -sign * x[f]));
        }
    };

    for (t, q) in quads.quads.iter().enumerate() {
        let [i, j, kk, l] = *q;
        let mut terms = Vec::with_capacity(4 + 4 * d + 1);
        push_div(&mut terms, p[i], p[j], &rows[i], 1.0);
        push_div(&mut terms, p[kk], p[l], &rows[kk], -1.0);
        terms.push((off_zeta + t, -1.0));
        lp.constraints.push(Constraint::new(terms, -quads.margin));
    }
    for j in 0..n {
        for c in 0..k {
            if c == p[j] {
                continue;
            }
            // b_c + a_c^T x_j <= b_{p_j} + a_{p_j}^T x_j
            let mut terms = Vec::with_capacity(2 + 2 * d);
            push_div(&mut terms, c, p[j], &rows[j], 1.0);
            lp.constraints.push(Constraint::new(terms, 0.0));
        }
    }
    if with_reg {
        for c in 0..k {
            let mut sum = Vec::with_capacity(d + 1);
            for f in 0..d {
                let a = off_a + c * d + f;
                let s = off_s + c * d + f;
                lp.constraints.push(Constraint::new(vec![(a, 1.0), (s, -1.0)], 0.0));
                lp.constraints.push(Constraint::new(vec![(a, -1.0), (s, -1.0)], 0.0));
                sum.push((s, 1.0));
            }
            sum.push((off_l, -1.0));
            lp.constraints.push(Constraint::new(sum, 0.0));
        }
    }
    lp.bounds = vec![VarBounds::default(); num_vars];
    for t in 0..m {
        lp.bounds[off_zeta + t].lower = Some(0.0);
    }
    if with_reg {
        lp.bounds[off_l].lower = Some(0.0);
    }

    let rep = solve_lp(&lp, &config.solver)?;
    if rep.status == SolveStatus::Infeasible {
        return Err(Error::Solver("relative-similarity program reported infeasible".into()));
    }
    let sol = &rep.solution;
    let offsets: Vec<f64> = (0..k).map(|c| if c == 0 { 0.0 } else { sol[c - 1] }).collect();
    let slopes: Vec<Vec<f64>> =
        (0..k).map(|c| sol[off_a + c * d..off_a + (c + 1) * d].to_vec()).collect();
    let lipschitz = slopes
        .iter()
        .map(|a| a.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut model = MaxAffineModel::new(slopes, offsets, lipschitz)?;
    if let Some(fs) = fs {
        model = model.with_feature_scale(fs);
    }
    let mean_hinge = quadruplet_hinge(&model, points, quads)?;
    Ok(TrainOutcome {
        model,
        objective: rep.objective,
        mean_hinge,
        iterations: rep.iterations,
        status: rep.status,
    })
}

/// Fit the generator to observed divergence values by least squares, subject
/// to the convexity constraints and an optional Lipschitz cap.
pub fn train_regression(
    points: &[Vec<f64>],
    set: &RegressionSet,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let d = check_points(points)?;
    if set.is_empty() {
        return Err(Error::InvalidArgument("regression needs at least one pair".into()));
    }
    for pair in &set.pairs {
        for &idx in pair {
            if idx >= points.len() {
                return Err(Error::IndexOutOfRange { index: idx, len: points.len() });
            }
        }
    }
    let (rows, fs) = scaled_points(points, config.feature_scale);

    let mut support: Vec<usize> = set.pairs.iter().flatten().copied().collect();
    support.sort_unstable();
    support.dedup();
    let n = support.len();
    let mut compact = vec![usize::MAX; points.len()];
    for (c, &i) in support.iter().enumerate() {
        compact[i] = c;
    }
    let x: Vec<&[f64]> = support.iter().map(|&i| rows[i].as_slice()).collect();
    let m = set.len();
    let capped = config.lipschitz.is_some();
    if let Some(l) = config.lipschitz {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidArgument("lipschitz cap must be positive and finite".into()));
        }
    }

    // Layout: z_1..z_{n-1} | a (n*d) | [s (n*d)].
    let off_a = n - 1;
    let off_s = off_a + n * d;
    let num_vars = if capped { off_s + n * d } else { off_s };

    let mut qp = QuadraticProgram::new(num_vars);
    qp.residual_weight = 1.0 / m as f64;

    let push_div = |terms: &mut Vec<(usize, f64)>, i: usize, j: usize, sign: f64| {
        if i > 0 {
            terms.push((i - 1, sign));
        }
        if j > 0 {
            terms.push((j - 1, -sign));
        }
        for f in 0..d {
            terms.push((off_a + j * d + f, -sign * (x[i][f] - x[j][f])));
        }
    };

    for (t, pair) in set.pairs.iter().enumerate() {
        let (i, j) = (compact[pair[0]], compact[pair[1]]);
        let mut terms = Vec::with_capacity(2 + d);
        push_div(&mut terms, i, j, 1.0);
        qp.residuals.push(Residual { terms, constant: -set.targets[t] });
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut terms = Vec::with_capacity(2 + d);
            push_div(&mut terms, i, j, -1.0);
            qp.constraints.push(Constraint::new(terms, 0.0));
        }
    }
    if let Some(l) = config.lipschitz {
        for i in 0..n {
            let mut sum = Vec::with_capacity(d);
            for f in 0..d {
                let a = off_a + i * d + f;
                let s = off_s + i * d + f;
                qp.constraints.push(Constraint::new(vec![(a, 1.0), (s, -1.0)], 0.0));
                qp.constraints.push(Constraint::new(vec![(a, -1.0), (s, -1.0)], 0.0));
                sum.push((s, 1.0));
            }
            qp.constraints.push(Constraint::new(sum, l));
        }
    }

    let rep = solve_qp(&qp, &config.solver)?;
    if rep.status == SolveStatus::Infeasible {
        return Err(Error::Solver("regression program reported infeasible".into()));
    }
    let sol = &rep.solution;
    let values: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { sol[i - 1] }).collect();
    let subgradients: Vec<Vec<f64>> =
        (0..n).map(|i| sol[off_a + i * d..off_a + (i + 1) * d].to_vec()).collect();
    let interp =
        InterpolantSolution::new(x.iter().map(|p| p.to_vec()).collect(), values, subgradients)?;
    let mut model = interp.to_model()?;
    if let Some(fs) = fs {
        model = model.with_feature_scale(fs);
    }
    Ok(TrainOutcome {
        model,
        objective: rep.objective,
        mean_hinge: 0.0,
        iterations: rep.iterations,
        status: rep.status,
    })
}

/// Mean hinge loss `max(0, margin + D(i, j) - D(k, l)) / m` of a model on a
/// quadruplet set.
pub fn quadruplet_hinge(
    model: &MaxAffineModel,
    points: &[Vec<f64>],
    quads: &QuadrupletSet,
) -> Result<f64> {
    if quads.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &[i, j, k, l] in &quads.quads {
        let near = model.divergence(&points[i], &points[j])?;
        let far = model.divergence(&points[k], &points[l])?;
        total += (quads.margin + near - far).max(0.0);
    }
    Ok(total / quads.len() as f64)
}

/// Fraction of quadruplets ordered incorrectly: `D(i, j) >= D(k, l)`.
pub fn quadruplet_error(
    model: &MaxAffineModel,
    points: &[Vec<f64>],
    quads: &QuadrupletSet,
) -> Result<f64> {
    if quads.is_empty() {
        return Ok(0.0);
    }
    let mut wrong = 0usize;
    for &[i, j, k, l] in &quads.quads {
        let near = model.divergence(&points[i], &points[j])?;
        let far = model.divergence(&points[k], &points[l])?;
        if near >= far {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / quads.len() as f64)
}

/// Fraction of quadruplets satisfied with full margin:
/// `D(i, j) + margin <= D(k, l)`.
pub fn margin_satisfaction(
    model: &MaxAffineModel,
    points: &[Vec<f64>],
    quads: &QuadrupletSet,
) -> Result<f64> {
    if quads.is_empty() {
        return Ok(1.0);
    }
    let mut ok = 0usize;
    for &[i, j, k, l] in &quads.quads {
        let near = model.divergence(&points[i], &points[j])?;
        let far = model.divergence(&points[k], &points[l])?;
        if near + quads.margin <= far {
            ok += 1;
        }
    }
    Ok(ok as f64 / quads.len() as f64)
}

/// Cross-validation settings for choosing `lambda`.
#[derive(Debug, Clone)]
pub struct CvConfig {
    /// Candidate regularization weights, tried in the given order.
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

/// The default grid `10^-8, 10^-7, ..., 10^4`.
pub fn default_lambda_grid() -> Vec<f64> {
    (-8..=4).map(|e| 10f64.powi(e)).collect()
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { lambda_grid: default_lambda_grid(), folds: 3, seed: 0 }
    }
}

/// Per-lambda cross-validation scores and the selected value.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub best_lambda: f64,
    /// Mean held-out margin-satisfaction rate per grid entry.
    pub scores: Vec<(f64, f64)>,
}

/// Select `lambda` by k-fold cross-validation over the quadruplets, scoring
/// each candidate by the held-out margin-satisfaction rate. Ties go to the
/// earliest (smallest) candidate.
///
/// Training uses the partitioned program when a partition is supplied.
pub fn cross_validate(
    points: &[Vec<f64>],
    quads: &QuadrupletSet,
    partition: Option<&Partition>,
    config: &TrainConfig,
    cv: &CvConfig,
) -> Result<CvResult> {
    if cv.lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("lambda grid must be non-empty".into()));
    }
    if cv.folds < 2 {
        return Err(Error::InvalidArgument("cross-validation needs at least 2 folds".into()));
    }
    if quads.len() < cv.folds {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} quadruplets into {} folds",
            quads.len(),
            cv.folds
        )));
    }
    let mut order: Vec<usize> = (0..quads.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cv.seed);
    order.shuffle(&mut rng);
    let folds = chunk_indices(&order, cv.folds);

    let mut scores = Vec::with_capacity(cv.lambda_grid.len());
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &lambda in &cv.lambda_grid {
        let mut cfg = config.clone();
        cfg.lambda = lambda;
        let mut total = 0.0;
        for held in &folds {
            let train_idx: Vec<usize> = order
                .iter()
                .copied()
                .filter(|t| !held.contains(t))
                .collect();
            let train_set = quads.subset(&train_idx);
            let held_set = quads.subset(held);
            let outcome = match partition {
                Some(p) => train_pbdl_partitioned(points, p, &train_set, &cfg)?,
                None => train_pbdl(points, &train_set, &cfg)?,
            };
            total += margin_satisfaction(&outcome.model, points, &held_set)?;
        }
        let score = total / folds.len() as f64;
        scores.push((lambda, score));
        if score > best.0 {
            best = (score, lambda);
        }
    }
    Ok(CvResult { best_lambda: best.1, scores })
}

fn chunk_indices(order: &[usize], folds: usize) -> Vec<Vec<usize>> {
    let n = order.len();
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(order[at..at + len].to_vec());
        at += len;
    }
    out
}

/// Empirical train/test quantities next to the relative-comparison
/// generalization bound evaluated at the trained model's `K` and `L`.
#[derive(Debug, Clone)]
pub struct GeneralizationReport {
    pub train_hinge: f64,
    pub test_error: f64,
    pub complexity_term: f64,
    /// NaN when `L <= 1`, where the bound's confidence term is undefined.
    pub confidence_term: f64,
    /// Sum of the three right-hand-side terms.
    pub rhs: f64,
}

/// Compare held-out misclassification against the bound
/// `train hinge + complexity + confidence` at confidence level `1 - delta`.
pub fn generalization_diagnostic(
    model: &MaxAffineModel,
    points: &[Vec<f64>],
    train: &QuadrupletSet,
    test: &QuadrupletSet,
    delta: f64,
) -> Result<GeneralizationReport> {
    let d = check_points(points)?;
    train.validate(points.len())?;
    test.validate(points.len())?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("diagnostic needs training quadruplets".into()));
    }
    let radius = points
        .iter()
        .flat_map(|p| p.iter())
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let train_hinge = quadruplet_hinge(model, points, train)?;
    let test_error = quadruplet_error(model, points, test)?;
    let rep = bounds(BoundInputs {
        beta: 1.0,
        radius,
        k: model.k,
        dim: d,
        lipschitz: model.lipschitz.max(f64::MIN_POSITIVE),
        m: train.len(),
        delta,
        sigma: 0.0,
    })?;
    let complexity_term = rep.gen_bound_terms[1];
    let confidence_term = rep.gen_bound_terms[2];
    Ok(GeneralizationReport {
        train_hinge,
        test_error,
        complexity_term,
        confidence_term,
        rhs: train_hinge + complexity_term + confidence_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{farthest_point_partition_from, Partition};

    fn line_points() -> Vec<Vec<f64>> {
        vec![vec![0.0], vec![0.2], vec![1.0], vec![1.3], vec![2.4]]
    }

    /// Quadruplets consistent with squared distance on the line.
    fn line_quads() -> QuadrupletSet {
        QuadrupletSet::new(
            vec![[0, 1, 0, 2], [0, 1, 3, 0], [2, 3, 2, 4], [1, 0, 4, 1], [3, 2, 0, 4]],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn separable_quadruplets_reach_zero_hinge() {
        let out = train_pbdl(&line_points(), &line_quads(), &TrainConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(out.mean_hinge < 1e-4, "hinge = {}", out.mean_hinge);
        assert_eq!(margin_satisfaction(&out.model, &line_points(), &line_quads()).unwrap(), 1.0);
    }

    #[test]
    fn trained_model_is_valid_and_nonnegative() {
        let pts = line_points();
        let out = train_pbdl(&pts, &line_quads(), &TrainConfig::default()).unwrap();
        out.model.validate().unwrap();
        for i in &pts {
            for j in &pts {
                assert!(out.model.divergence(i, j).unwrap() >= -1e-9);
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let a = train_pbdl(&line_points(), &line_quads(), &TrainConfig::default()).unwrap();
        let b = train_pbdl(&line_points(), &line_quads(), &TrainConfig::default()).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn empty_quadruplets_give_constant_model() {
        let quads = QuadrupletSet::new(vec![], 1.0).unwrap();
        let out = train_pbdl(&line_points(), &quads, &TrainConfig::default()).unwrap();
        assert_eq!(out.model.k, 1);
        assert_eq!(out.model.divergence(&[0.3], &[1.8]).unwrap(), 0.0);
    }

    #[test]
    fn lambda_zero_skips_regularizer() {
        let mut cfg = TrainConfig::default();
        cfg.lambda = 0.0;
        let out = train_pbdl(&line_points(), &line_quads(), &cfg).unwrap();
        assert!(out.mean_hinge < 1e-4);
    }

    #[test]
    fn partitioned_identity_matches_margins() {
        let pts = line_points();
        let part = Partition::identity(pts.len());
        let out =
            train_pbdl_partitioned(&pts, &part, &line_quads(), &TrainConfig::default()).unwrap();
        assert!(out.mean_hinge < 1e-4, "hinge = {}", out.mean_hinge);
    }

    #[test]
    fn partitioned_fewer_cells_than_points() {
        let pts = line_points();
        let part = farthest_point_partition_from(&pts, 3, 0).unwrap();
        let out =
            train_pbdl_partitioned(&pts, &part, &line_quads(), &TrainConfig::default()).unwrap();
        assert_eq!(out.model.k, 3);
        out.model.validate().unwrap();
    }

    #[test]
    fn regression_recovers_squared_distance() {
        let pts = line_points();
        let mut pairs = Vec::new();
        let mut targets = Vec::new();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    pairs.push([i, j]);
                    targets.push((pts[i][0] - pts[j][0]).powi(2));
                }
            }
        }
        let set = RegressionSet::new(pairs.clone(), targets.clone()).unwrap();
        let out = train_regression(&pts, &set, &TrainConfig::default()).unwrap();
        let mse: f64 = pairs
            .iter()
            .zip(&targets)
            .map(|(p, y)| {
                (out.model.divergence(&pts[p[0]], &pts[p[1]]).unwrap() - y).powi(2)
            })
            .sum::<f64>()
            / pairs.len() as f64;
        assert!(mse < 1e-6, "mse = {mse}");
    }

    #[test]
    fn regression_respects_lipschitz_cap() {
        let pts = line_points();
        let set = RegressionSet::new(vec![[0, 4], [4, 0]], vec![10.0, 10.0]).unwrap();
        let mut cfg = TrainConfig::default();
        cfg.lipschitz = Some(0.5);
        let out = train_regression(&pts, &set, &cfg).unwrap();
        assert!(out.model.lipschitz <= 0.5 + 1e-6);
    }

    #[test]
    fn cross_validation_picks_from_grid() {
        let pts = line_points();
        let quads = line_quads();
        let cv = CvConfig {
            lambda_grid: vec![1e-4, 1e-2, 1.0],
            folds: 2,
            seed: 7,
        };
        let res = cross_validate(&pts, &quads, None, &TrainConfig::default(), &cv).unwrap();
        assert!(cv.lambda_grid.contains(&res.best_lambda));
        assert_eq!(res.scores.len(), 3);
        let res2 = cross_validate(&pts, &quads, None, &TrainConfig::default(), &cv).unwrap();
        assert_eq!(res.best_lambda, res2.best_lambda);
    }

    #[test]
    fn diagnostic_bound_dominates_test_error_when_separable() {
        let pts = line_points();
        let quads = line_quads();
        let out = train_pbdl(&pts, &quads, &TrainConfig::default()).unwrap();
        let rep = generalization_diagnostic(&out.model, &pts, &quads, &quads, 0.05).unwrap();
        assert!(rep.train_hinge < 1e-4);
        assert!(rep.test_error <= 1.0);
        assert!(rep.complexity_term > 0.0);
    }

    #[test]
    fn triplets_lower_to_quadruplets() {
        let q = QuadrupletSet::from_triplets(&[[0, 1, 2]], 1.0).unwrap();
        assert_eq!(q.quads, vec![[0, 1, 0, 2]]);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let quads = QuadrupletSet::new(vec![[0, 1, 2, 9]], 1.0).unwrap();
        assert!(train_pbdl(&line_points(), &quads, &TrainConfig::default()).is_err());
    }
}
