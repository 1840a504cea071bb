//! Shared oracles for the integration tests: dense linear algebra, exhaustive
//! vertex enumeration for small LPs, and KKT residual checks for QPs.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pbdl::solver::{
    solve_lp, solve_qp, Constraint, LinearProgram, QuadraticProgram, Residual, SolveStatus,
    SolverConfig, VarBounds,
};

/// Dense row-echelon solve of a p x p system; `None` when singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let p = b.len();
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..p {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            for k in col..p {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    Some((0..p).map(|i| b[i] / a[i][i]).collect())
}

/// All constraints of the LP as dense rows `(coeffs, upper)`, bounds included.
pub fn dense_rows(lp: &LinearProgram) -> Vec<(Vec<f64>, f64)> {
    let p = lp.num_vars;
    let mut rows = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![0.0; p];
        for &(j, v) in &c.terms {
            coeffs[j] += v;
        }
        rows.push((coeffs, c.upper));
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if let Some(u) = b.upper {
            let mut coeffs = vec![0.0; p];
            coeffs[j] = 1.0;
            rows.push((coeffs, u));
        }
        if let Some(l) = b.lower {
            let mut coeffs = vec![0.0; p];
            coeffs[j] = -1.0;
            rows.push((coeffs, -l));
        }
    }
    rows
}

/// Minimum objective over all vertices (intersections of `p` active rows that
/// satisfy every other row). Assumes the LP is bounded with a vertex optimum,
/// which holds here because every instance carries box bounds.
pub fn vertex_enumeration_optimum(lp: &LinearProgram) -> Option<f64> {
    let p = lp.num_vars;
    let rows = dense_rows(lp);
    let q = rows.len();
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; p];
    fn rec(
        rows: &[(Vec<f64>, f64)],
        obj: &[f64],
        pick: &mut Vec<usize>,
        depth: usize,
        start: usize,
        q: usize,
        best: &mut Option<f64>,
    ) {
        let p = obj.len();
        if depth == p {
            let a: Vec<Vec<f64>> = pick.iter().map(|&r| rows[r].0.clone()).collect();
            let b: Vec<f64> = pick.iter().map(|&r| rows[r].1).collect();
            if let Some(x) = solve_square(a, b) {
                let feasible = rows.iter().all(|(coeffs, upper)| {
                    let lhs: f64 = coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
                    lhs <= upper + 1e-7
                });
                if feasible {
                    let v: f64 = obj.iter().zip(&x).map(|(c, v)| c * v).sum();
                    *best = Some(match best {
                        Some(b) => b.min(v),
                        None => v,
                    });
                }
            }
            return;
        }
        for r in start..q {
            pick[depth] = r;
            rec(rows, obj, pick, depth + 1, r + 1, q, best);
        }
    }
    rec(&rows, &lp.objective, &mut pick, 0, 0, q, &mut best);
    best
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let p = rng.gen_range(1..=6);
    let q = rng.gen_range(0..=12);
    let mut lp = LinearProgram::new(p);
    lp.objective = (0..p).map(|_| rng.gen_range(-2.0..2.0f64)).collect();
    for _ in 0..q {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for j in 0..p {
            if rng.gen_bool(0.7) {
                terms.push((j, rng.gen_range(-2.0..2.0f64)));
            }
        }
        if terms.is_empty() {
            continue;
        }
        lp.constraints.push(Constraint::new(terms, rng.gen_range(-1.0..3.0f64)));
    }
    // Box bounds keep every instance bounded; wide enough to leave room for
    // interior optima and narrow enough that most instances are feasible.
    lp.bounds = (0..p)
        .map(|_| {
            let lo = rng.gen_range(-3.0..0.0f64);
            let hi = lo + rng.gen_range(0.5..4.0f64);
            VarBounds { lower: Some(lo), upper: Some(hi) }
        })
        .collect();
    lp
}

pub fn random_qp(rng: &mut ChaCha8Rng) -> QuadraticProgram {
    let p = rng.gen_range(1..=5);
    let mut qp = QuadraticProgram::new(p);
    // At least p dense residuals so the Hessian is almost surely positive
    // definite and the optimum unique.
    let t = p + rng.gen_range(1..=4);
    for _ in 0..t {
        let terms: Vec<(usize, f64)> = (0..p).map(|j| (j, rng.gen_range(-2.0..2.0f64))).collect();
        qp.residuals.push(Residual { terms, constant: rng.gen_range(-2.0..2.0f64) });
    }
    let q = rng.gen_range(0..=6);
    for _ in 0..q {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for j in 0..p {
            if rng.gen_bool(0.7) {
                terms.push((j, rng.gen_range(-2.0..2.0f64)));
            }
        }
        if terms.is_empty() {
            continue;
        }
        qp.constraints.push(Constraint::new(terms, rng.gen_range(0.0..2.0f64)));
    }
    qp
}

/// Solve random bounded LPs until `instances` feasible ones have been matched
/// against vertex enumeration within 1e-5 relative.
pub fn lp_oracle_check(instances: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SolverConfig::default();
    let mut checked = 0;
    let mut attempts = 0;
    while checked < instances {
        attempts += 1;
        if attempts >= 10 * instances {
            return Err("too many degenerate random instances".into());
        }
        let lp = random_lp(&mut rng);
        let oracle = vertex_enumeration_optimum(&lp);
        let rep = solve_lp(&lp, &cfg).map_err(|e| e.to_string())?;
        match oracle {
            None => {
                // Infeasible instance: it must not be reported as solved.
                if rep.status == SolveStatus::Optimal && rep.max_violation <= 1e-6 {
                    return Err(
                        "oracle found no vertex but solver claimed a feasible optimum".into()
                    );
                }
            }
            Some(best) => {
                if rep.status != SolveStatus::Optimal {
                    return Err(format!("instance {checked}: status {:?}", rep.status));
                }
                let scale = best.abs().max(1.0);
                if (rep.objective - best).abs() > 1e-5 * scale {
                    return Err(format!(
                        "instance {checked}: solver {} vs oracle {best}",
                        rep.objective
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(())
}

/// Solve random QPs and verify KKT stationarity and primal feasibility to 1e-6.
pub fn qp_kkt_check(instances: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SolverConfig { feas_tol: 1e-9, opt_tol: 1e-9, ..SolverConfig::default() };
    for instance in 0..instances {
        let qp = random_qp(&mut rng);
        let rep = solve_qp(&qp, &cfg).map_err(|e| e.to_string())?;
        if rep.status != SolveStatus::Optimal {
            return Err(format!("instance {instance}: status {:?}", rep.status));
        }
        let x = &rep.solution;
        let p = qp.num_vars;

        // gradient of the objective at x
        let mut grad = qp.linear.clone();
        for r in &qp.residuals {
            let val: f64 = r.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>() + r.constant;
            for &(j, c) in &r.terms {
                grad[j] += 2.0 * qp.residual_weight * val * c;
            }
        }

        // dual estimate: least-squares fit of grad = -A^T y over rows active
        // within 1e-6, then KKT stationarity residual.
        let active: Vec<&Constraint> = qp
            .constraints
            .iter()
            .filter(|c| {
                let lhs: f64 = c.terms.iter().map(|&(j, v)| v * x[j]).sum();
                lhs >= c.upper - 1e-6
            })
            .collect();
        let k = active.len();
        let mut stationarity = grad.clone();
        if k > 0 {
            // Solve (A_a A_a^T) y = -A_a grad for the active rows.
            let mut aat = vec![vec![0.0; k]; k];
            let mut rhs = vec![0.0; k];
            let dense: Vec<Vec<f64>> = active
                .iter()
                .map(|c| {
                    let mut row = vec![0.0; p];
                    for &(j, v) in &c.terms {
                        row[j] += v;
                    }
                    row
                })
                .collect();
            for a in 0..k {
                for b in 0..k {
                    aat[a][b] = dense[a].iter().zip(&dense[b]).map(|(u, v)| u * v).sum();
                }
                aat[a][a] += 1e-12;
                rhs[a] = -dense[a].iter().zip(&grad).map(|(u, v)| u * v).sum::<f64>();
            }
            if let Some(y) = solve_square(aat, rhs) {
                for (a, row) in dense.iter().enumerate() {
                    let dual = y[a].max(0.0); // multipliers must be non-negative
                    for j in 0..p {
                        stationarity[j] += dual * row[j];
                    }
                }
            }
        }
        let stat_norm = stationarity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if stat_norm > 1e-6 {
            return Err(format!("instance {instance}: stationarity {stat_norm}"));
        }

        // primal feasibility
        for c in &qp.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, v)| v * x[j]).sum();
            if lhs > c.upper + 1e-6 {
                return Err(format!("instance {instance}: infeasible row"));
            }
        }
    }
    Ok(())
}

/// A dense tangent-plane model of ‖x‖² in one dimension, so divergences are
/// squared distances up to grid error.
pub fn euclid_model() -> pbdl::MaxAffineModel {
    let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
    pbdl::MaxAffineModel::new(
        grid.iter().map(|&g| vec![2.0 * g]).collect(),
        grid.iter().map(|&g| -g * g).collect(),
        20.0,
    )
    .unwrap()
}

pub fn brute_auc(scored: &[(f64, bool)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for a in scored.iter().filter(|s| s.1) {
        for b in scored.iter().filter(|s| !s.1) {
            den += 1.0;
            if a.0 < b.0 {
                num += 1.0;
            } else if a.0 == b.0 {
                num += 0.5;
            }
        }
    }
    num / den
}

pub fn brute_avep(sorted_relevance: &[bool]) -> f64 {
    let mut hits = 0;
    let mut sum = 0.0;
    for (i, &r) in sorted_relevance.iter().enumerate() {
        if r {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / hits as f64
}

/// Compare `rank_all` against per-query brute force on random instances.
/// Returns the number of instances actually scored.
pub fn rank_all_oracle_check(instances: usize, seed: u64) -> Result<usize, String> {
    use pbdl::tasks::{rank_all, QuerySide};
    let model = euclid_model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scored_instances = 0;
    for _ in 0..instances {
        let n = rng.gen_range(3..=8);
        let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-5.0..5.0)]).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let ones = labels.iter().filter(|&&l| l == 1).count();
        if ones == 0 || ones == n {
            continue;
        }

        // independent per-query brute force
        let mut auc_sum = 0.0;
        let mut ap_sum = 0.0;
        let mut evaluated = 0;
        for q in 0..n {
            let mut scored: Vec<(f64, bool)> = Vec::new();
            for i in 0..n {
                if i == q {
                    continue;
                }
                let d = model.divergence(&points[q], &points[i]).unwrap();
                scored.push((d, labels[i] == labels[q]));
            }
            let pos = scored.iter().filter(|s| s.1).count();
            if pos == 0 || pos == scored.len() {
                continue;
            }
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            auc_sum += brute_auc(&scored);
            ap_sum += brute_avep(&scored.iter().map(|s| s.1).collect::<Vec<_>>());
            evaluated += 1;
        }
        if evaluated == 0 {
            continue;
        }

        let res = rank_all(&model, &points, &labels, QuerySide::First)
            .map_err(|e| e.to_string())?;
        if res.queries_evaluated != evaluated {
            return Err(format!(
                "evaluated {} queries, oracle {evaluated}",
                res.queries_evaluated
            ));
        }
        if (res.auc - auc_sum / evaluated as f64).abs() >= 1e-12 {
            return Err(format!("auc {} vs oracle {}", res.auc, auc_sum / evaluated as f64));
        }
        if (res.average_precision - ap_sum / evaluated as f64).abs() >= 1e-12 {
            return Err(format!(
                "avep {} vs oracle {}",
                res.average_precision,
                ap_sum / evaluated as f64
            ));
        }
        scored_instances += 1;
    }
    Ok(scored_instances)
}
