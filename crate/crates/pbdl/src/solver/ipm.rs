//! Primal-dual interior-point method (Mehrotra predictor-corrector) for
//! `min 1/2 x^T Q x + c^T x  s.t.  A x <= u` with free variables and sparse
//! rows.
//!
//! The normal matrix `Q + A^T D A` is reduced to a dense Schur complement
//! over "coupled" columns; columns that appear in few rows and nowhere in `Q`
//! (the hinge and auxiliary slacks of the training programs) are eliminated
//! exactly through small per-group blocks of the normal matrix. Columns that
//! share a row are grouped into one block so the elimination stays exact.
//! This keeps the factorization size at the number of structural variables
//! rather than the full variable count.

use crate::error::{Error, Result};
use crate::solver::{Constraint, Residual, SolveReport, SolveStatus, SolverConfig, VarBounds};

const STATIC_REG: f64 = 1e-9;
const STEP_SCALE: f64 = 0.995;
const DIVERGE_PRIMAL: f64 = 1e9;
const DUAL_RAY_NORM: f64 = 1e7;
/// Columns appearing in more rows than this stay in the dense block.
const ELIM_MAX_ROWS: usize = 4;
/// Elimination groups larger than this (columns or rows) stay dense.
const GROUP_MAX_COLS: usize = 16;
const GROUP_MAX_ROWS: usize = 48;

struct Row {
    /// Dense-block terms as (dense index, coefficient), ascending by index.
    dense: Vec<(usize, f64)>,
    upper: f64,
    /// Original sparse terms over the full variable set.
    full: Vec<(usize, f64)>,
}

/// A connected component of eliminated columns and the rows touching them.
struct EGroup {
    /// Global variable indices of the eliminated columns.
    cols: Vec<usize>,
    /// Constraint rows in which any of the columns appears.
    row_ids: Vec<usize>,
    /// Dense-block columns coupled to the group through those rows.
    idxs: Vec<usize>,
    /// Per row: eliminated terms as (local column, coefficient).
    row_elim: Vec<Vec<(usize, f64)>>,
    /// Per row: dense terms as (position in `idxs`, coefficient).
    row_dense: Vec<Vec<(usize, f64)>>,
}

/// Dot product with four independent accumulators, so the reduction pipelines
/// instead of serializing on one register.
#[inline]
fn dot_unrolled(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut s = (s0 + s2) + (s1 + s3);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

/// Packed lower-triangular dense matrix, row-major.
struct Packed {
    n: usize,
    a: Vec<f64>,
}

impl Packed {
    fn zeros(n: usize) -> Self {
        Packed { n, a: vec![0.0; n * (n + 1) / 2] }
    }

    #[inline]
    fn idx(i: usize, j: usize) -> usize {
        debug_assert!(j <= i);
        i * (i + 1) / 2 + j
    }

    /// In-place Cholesky; returns false if a pivot drops below `min_pivot`.
    fn cholesky(&mut self, min_pivot: f64) -> bool {
        let n = self.n;
        for i in 0..n {
            let (head, tail) = self.a.split_at_mut(Packed::idx(i, 0));
            let row_i = &mut tail[..i + 1];
            for j in 0..i {
                let row_j = &head[Packed::idx(j, 0)..Packed::idx(j, 0) + j + 1];
                let s = row_i[j] - dot_unrolled(&row_i[..j], &row_j[..j]);
                row_i[j] = s / row_j[j];
            }
            let s = row_i[i] - dot_unrolled(&row_i[..i], &row_i[..i]);
            if s < min_pivot {
                return false;
            }
            row_i[i] = s.sqrt();
        }
        true
    }

    /// Solve `L L^T x = b` in place.
    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.a[Packed::idx(i, 0)..Packed::idx(i, 0) + i + 1];
            let mut s = b[i];
            for k in 0..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
        for i in (0..n).rev() {
            let row = &self.a[Packed::idx(i, 0)..Packed::idx(i, 0) + i + 1];
            b[i] /= row[i];
            let xi = b[i];
            for k in 0..i {
                b[k] -= row[k] * xi;
            }
        }
    }
}

pub(super) fn solve(
    num_vars: usize,
    linear: &[f64],
    residuals: &[Residual],
    weight: f64,
    constraints: &[Constraint],
    bounds: &[VarBounds],
    config: &SolverConfig,
) -> Result<SolveReport> {
    // Effective linear term: c + 2w * sum_t r0_t g_t (gradient of the
    // least-squares part at x = 0).
    let mut c_eff = linear.to_vec();
    for r in residuals {
        for &(j, v) in &r.terms {
            c_eff[j] += 2.0 * weight * r.constant * v;
        }
    }

    // Expand variable bounds into plain rows.
    let mut rows_in: Vec<(Vec<(usize, f64)>, f64)> = constraints
        .iter()
        .map(|c| (coalesce(&c.terms), c.upper))
        .collect();
    for (j, b) in bounds.iter().enumerate() {
        if let Some(ub) = b.upper {
            rows_in.push((vec![(j, 1.0)], ub));
        }
        if let Some(lb) = b.lower {
            rows_in.push((vec![(j, -1.0)], -lb));
        }
    }

    if rows_in.is_empty() {
        return solve_unconstrained(num_vars, linear, &c_eff, residuals, weight, config);
    }

    // --- column classification -------------------------------------------
    let mut in_q = vec![false; num_vars];
    for r in residuals {
        for &(j, _) in &r.terms {
            in_q[j] = true;
        }
    }
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); num_vars];
    for (r, (terms, _)) in rows_in.iter().enumerate() {
        for &(j, v) in terms {
            if v != 0.0 {
                col_rows[j].push(r);
            }
        }
    }
    // Eliminable columns that share a row must leave the dense block together,
    // so collect them into connected components with a union-find pass.
    let mut candidate = vec![false; num_vars];
    for j in 0..num_vars {
        let nr = col_rows[j].len();
        candidate[j] = !in_q[j] && nr > 0 && nr <= ELIM_MAX_ROWS;
    }
    fn find_root(parent: &mut [usize], mut j: usize) -> usize {
        while parent[j] != j {
            parent[j] = parent[parent[j]];
            j = parent[j];
        }
        j
    }
    let mut parent: Vec<usize> = (0..num_vars).collect();
    for (terms, _) in &rows_in {
        let mut first: Option<usize> = None;
        for &(j, v) in terms {
            if v != 0.0 && candidate[j] {
                match first {
                    None => first = Some(j),
                    Some(f) => {
                        let a = find_root(&mut parent, f);
                        let b = find_root(&mut parent, j);
                        if a != b {
                            parent[a] = b;
                        }
                    }
                }
            }
        }
    }
    let mut comp: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for j in 0..num_vars {
        if candidate[j] {
            comp.entry(find_root(&mut parent, j)).or_default().push(j);
        }
    }
    let mut comps: Vec<Vec<usize>> = comp.into_values().collect();
    // Hash-map iteration order is unstable; sort so runs are reproducible.
    comps.sort_by_key(|c| c[0]);
    let mut eliminated = vec![false; num_vars];
    let mut group_cols: Vec<Vec<usize>> = Vec::new();
    for cols in comps {
        let mut rset: Vec<usize> =
            cols.iter().flat_map(|&j| col_rows[j].iter().copied()).collect();
        rset.sort_unstable();
        rset.dedup();
        if cols.len() <= GROUP_MAX_COLS && rset.len() <= GROUP_MAX_ROWS {
            for &j in &cols {
                eliminated[j] = true;
            }
            group_cols.push(cols);
        }
    }
    let mut dense_of = vec![usize::MAX; num_vars];
    let mut dense_cols = Vec::new();
    for j in 0..num_vars {
        if !eliminated[j] {
            dense_of[j] = dense_cols.len();
            dense_cols.push(j);
        }
    }
    let nb = dense_cols.len();

    let rows: Vec<Row> = rows_in
        .into_iter()
        .map(|(terms, upper)| {
            let mut dense: Vec<(usize, f64)> = terms
                .iter()
                .filter(|&&(j, _)| !eliminated[j])
                .map(|&(j, v)| (dense_of[j], v))
                .collect();
            dense.sort_by_key(|t| t.0);
            Row { dense, upper, full: terms }
        })
        .collect();
    let q = rows.len();

    let mut groups: Vec<EGroup> = Vec::with_capacity(group_cols.len());
    let mut local_of = vec![usize::MAX; num_vars];
    let mut pos_scratch = vec![usize::MAX; nb];
    for cols in group_cols {
        for (c, &j) in cols.iter().enumerate() {
            local_of[j] = c;
        }
        let mut row_ids: Vec<usize> =
            cols.iter().flat_map(|&j| col_rows[j].iter().copied()).collect();
        row_ids.sort_unstable();
        row_ids.dedup();
        let mut idxs: Vec<usize> =
            row_ids.iter().flat_map(|&r| rows[r].dense.iter().map(|t| t.0)).collect();
        idxs.sort_unstable();
        idxs.dedup();
        for (p, &a) in idxs.iter().enumerate() {
            pos_scratch[a] = p;
        }
        let row_elim: Vec<Vec<(usize, f64)>> = row_ids
            .iter()
            .map(|&r| {
                rows[r]
                    .full
                    .iter()
                    .filter(|&&(j, _)| eliminated[j])
                    .map(|&(j, v)| (local_of[j], v))
                    .collect()
            })
            .collect();
        let row_dense: Vec<Vec<(usize, f64)>> = row_ids
            .iter()
            .map(|&r| rows[r].dense.iter().map(|&(a, v)| (pos_scratch[a], v)).collect())
            .collect();
        for &a in &idxs {
            pos_scratch[a] = usize::MAX;
        }
        groups.push(EGroup { cols, row_ids, idxs, row_elim, row_dense });
    }

    // Static part of the Schur complement: the dense block of Q.
    let mut q_bb = Packed::zeros(nb);
    for r in residuals {
        let terms: Vec<(usize, f64)> = r.terms.iter().map(|&(j, v)| (dense_of[j], v)).collect();
        for (i, &(a, va)) in terms.iter().enumerate() {
            for &(b, vb) in &terms[..=i] {
                let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                q_bb.a[Packed::idx(hi, lo)] += 2.0 * weight * va * vb;
            }
        }
    }

    // --- starting point ---------------------------------------------------
    let mut x = vec![0.0; num_vars];
    let ax0 = mat_vec(&rows, &x);
    let mut w: Vec<f64> = (0..q).map(|r| (rows[r].upper - ax0[r]).max(1.0)).collect();
    let mut y = vec![1.0; q];

    let u_norm = rows.iter().map(|r| r.upper.abs()).fold(0.0, f64::max);
    let c_norm = c_eff.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stall = 0usize;
    let max_iter = config.max_iter.min(500);

    let mut iter = 0;
    while iter < max_iter {
        iter += 1;

        // Residuals of the KKT system.
        let ax = mat_vec(&rows, &x);
        let qx = q_apply(residuals, weight, &x, num_vars);
        let aty = mat_t_vec(&rows, &y, num_vars);
        let r_d: Vec<f64> = (0..num_vars).map(|j| qx[j] + c_eff[j] + aty[j]).collect();
        let r_p: Vec<f64> = (0..q).map(|r| ax[r] + w[r] - rows[r].upper).collect();
        let gap: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
        let mu = gap / q as f64;

        let obj = objective(linear, residuals, weight, &x);
        let pinf = inf_norm(&r_p) / (1.0 + u_norm);
        let dinf = inf_norm(&r_d) / (1.0 + c_norm);
        let rel_gap = gap / (1.0 + obj.abs());

        if pinf <= config.feas_tol && dinf <= config.opt_tol && rel_gap <= config.opt_tol {
            let max_violation = max_violation(&rows, &x);
            return Ok(SolveReport {
                solution: x,
                objective: obj,
                max_violation,
                iterations: iter,
                status: SolveStatus::Optimal,
                certificate: None,
            });
        }

        // Track the best iterate by a simple merit in case we stop early.
        let merit = pinf + dinf + rel_gap;
        match &best {
            Some((m, _)) if *m <= merit * 0.9999 => stall += 1,
            _ => {
                best = Some((merit, x.clone()));
                stall = 0;
            }
        }

        // Primal infeasibility: the dual ray y/‖y‖ certifies A^T y ≈ 0 with
        // u^T y < 0.
        if inf_norm(&y) > DUAL_RAY_NORM {
            let s: f64 = y.iter().sum();
            let ray: Vec<f64> = y.iter().map(|v| v / s).collect();
            let at_ray = mat_t_vec(&rows, &ray, num_vars);
            let ut_ray: f64 = ray.iter().zip(&rows).map(|(v, r)| v * r.upper).sum();
            if inf_norm(&at_ray) <= 1e-7 && ut_ray < -1e-5 {
                let max_violation = max_violation(&rows, &x);
                return Ok(SolveReport {
                    solution: x,
                    objective: obj,
                    max_violation,
                    iterations: iter,
                    status: SolveStatus::Infeasible,
                    certificate: Some(ray),
                });
            }
        }
        if inf_norm(&x) > DIVERGE_PRIMAL && obj < -1e7 * (1.0 + u_norm + c_norm) {
            return Err(Error::Solver("problem appears unbounded below".into()));
        }
        if stall > 40 {
            break;
        }

        // --- assemble and factor the reduced normal matrix ----------------
        // Clamped so degenerate active rows cannot destroy the factorization
        // through cancellation in the Schur downdates.
        let d: Vec<f64> = (0..q).map(|r| (y[r] / w[r]).clamp(1e-14, 1e14)).collect();
        let mut s_mat = Packed::zeros(nb);
        for i in 0..nb {
            s_mat.a[Packed::idx(i, i)] = STATIC_REG;
        }
        for k in 0..q_bb.a.len() {
            s_mat.a[k] += q_bb.a[k];
        }
        for (r, row) in rows.iter().enumerate() {
            let dr = d[r];
            for (i, &(a, va)) in row.dense.iter().enumerate() {
                let w_a = dr * va;
                for &(b, vb) in &row.dense[..=i] {
                    s_mat.a[Packed::idx(a, b)] += w_a * vb;
                }
            }
        }
        // Per-group eliminated blocks M_ee and coupling matrices V, followed
        // by the exact Schur downdates S -= V^T M_ee^{-1} V.
        let mut g_store: Vec<(Packed, Vec<f64>)> = Vec::with_capacity(groups.len());
        let mut col = vec![0.0; GROUP_MAX_COLS];
        for grp in &groups {
            let kc = grp.cols.len();
            let pn = grp.idxs.len();
            let mut m_ee = Packed::zeros(kc);
            for i in 0..kc {
                m_ee.a[Packed::idx(i, i)] = STATIC_REG;
            }
            let mut v = vec![0.0; kc * pn];
            for (t, &r) in grp.row_ids.iter().enumerate() {
                let dr = d[r];
                let el = &grp.row_elim[t];
                for (i, &(c1, g1)) in el.iter().enumerate() {
                    let w1 = dr * g1;
                    for &(c2, g2) in &el[..=i] {
                        let (hi, lo) = if c1 >= c2 { (c1, c2) } else { (c2, c1) };
                        m_ee.a[Packed::idx(hi, lo)] += w1 * g2;
                    }
                    for &(p, va) in &grp.row_dense[t] {
                        v[c1 * pn + p] += w1 * va;
                    }
                }
            }
            // The static regularization keeps the block positive definite.
            if !m_ee.cholesky(1e-300) {
                return Err(Error::Solver("eliminated block factorization failed".into()));
            }
            let mut w_mat = vec![0.0; kc * pn];
            for p in 0..pn {
                for c in 0..kc {
                    col[c] = v[c * pn + p];
                }
                m_ee.solve(&mut col[..kc]);
                for c in 0..kc {
                    w_mat[c * pn + p] = col[c];
                }
            }
            for p in 0..pn {
                let a = grp.idxs[p];
                for (qq, &b) in grp.idxs.iter().enumerate() {
                    if b <= a {
                        let mut s = 0.0;
                        for c in 0..kc {
                            s += v[c * pn + p] * w_mat[c * pn + qq];
                        }
                        s_mat.a[Packed::idx(a, b)] -= s;
                    }
                }
            }
            g_store.push((m_ee, v));
        }

        let mut extra = 0.0;
        let mut attempts = 0;
        let factor = loop {
            let mut trial = Packed { n: nb, a: s_mat.a.clone() };
            if extra > 0.0 {
                for i in 0..nb {
                    trial.a[Packed::idx(i, i)] += extra;
                }
            }
            if trial.cholesky(1e-300) {
                break trial;
            }
            attempts += 1;
            if attempts > 6 {
                return Err(Error::Solver("normal matrix factorization failed".into()));
            }
            extra = if extra == 0.0 { 1e-8 } else { extra * 100.0 };
        };

        let solve_m = |rhs: &[f64]| -> Vec<f64> {
            // rhs is over all variables; returns the Newton direction.
            let mut rhs_b: Vec<f64> = dense_cols.iter().map(|&j| rhs[j]).collect();
            for (g, grp) in groups.iter().enumerate() {
                let (fact, v) = &g_store[g];
                let kc = grp.cols.len();
                let pn = grp.idxs.len();
                let mut f: Vec<f64> = grp.cols.iter().map(|&j| rhs[j]).collect();
                fact.solve(&mut f);
                for (p, &a) in grp.idxs.iter().enumerate() {
                    let mut s = 0.0;
                    for c in 0..kc {
                        s += v[c * pn + p] * f[c];
                    }
                    rhs_b[a] -= s;
                }
            }
            factor.solve(&mut rhs_b);
            let mut out = vec![0.0; num_vars];
            for (i, &j) in dense_cols.iter().enumerate() {
                out[j] = rhs_b[i];
            }
            for (g, grp) in groups.iter().enumerate() {
                let (fact, v) = &g_store[g];
                let pn = grp.idxs.len();
                let mut s: Vec<f64> = grp.cols.iter().map(|&j| rhs[j]).collect();
                for (c, sv) in s.iter_mut().enumerate() {
                    for (p, &a) in grp.idxs.iter().enumerate() {
                        *sv -= v[c * pn + p] * rhs_b[a];
                    }
                }
                fact.solve(&mut s);
                for (c, &j) in grp.cols.iter().enumerate() {
                    out[j] = s[c];
                }
            }
            out
        };

        // --- affine (predictor) step --------------------------------------
        let rhs_affine: Vec<f64> = {
            // rhs = -r_d - A^T [ (y r_p - r_c) / w ] with r_c = W Y e.
            let scale: Vec<f64> = (0..q).map(|r| (y[r] * r_p[r] - w[r] * y[r]) / w[r]).collect();
            let at_s = mat_t_vec_weighted(&rows, &scale, num_vars);
            (0..num_vars).map(|j| -r_d[j] - at_s[j]).collect()
        };
        let dx_aff = solve_m(&rhs_affine);
        let adx = mat_vec(&rows, &dx_aff);
        let dw_aff: Vec<f64> = (0..q).map(|r| -r_p[r] - adx[r]).collect();
        let dy_aff: Vec<f64> =
            (0..q).map(|r| (-(w[r] * y[r]) - y[r] * dw_aff[r]) / w[r]).collect();

        let ap_aff = max_step(&w, &dw_aff);
        let ad_aff = max_step(&y, &dy_aff);
        let mu_aff: f64 = (0..q)
            .map(|r| (w[r] + ap_aff * dw_aff[r]) * (y[r] + ad_aff * dy_aff[r]))
            .sum::<f64>()
            / q as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 1.0);

        // --- corrector step -----------------------------------------------
        let r_c: Vec<f64> =
            (0..q).map(|r| w[r] * y[r] - sigma * mu + dw_aff[r] * dy_aff[r]).collect();
        let rhs_corr: Vec<f64> = {
            let scale: Vec<f64> = (0..q).map(|r| (y[r] * r_p[r] - r_c[r]) / w[r]).collect();
            let at_s = mat_t_vec_weighted(&rows, &scale, num_vars);
            (0..num_vars).map(|j| -r_d[j] - at_s[j]).collect()
        };
        let dx = solve_m(&rhs_corr);
        let adx = mat_vec(&rows, &dx);
        let dw: Vec<f64> = (0..q).map(|r| -r_p[r] - adx[r]).collect();
        let dy: Vec<f64> = (0..q).map(|r| (-r_c[r] - y[r] * dw[r]) / w[r]).collect();

        let ap = (STEP_SCALE * max_step(&w, &dw)).min(1.0);
        let ad = (STEP_SCALE * max_step(&y, &dy)).min(1.0);
        for j in 0..num_vars {
            x[j] += ap * dx[j];
        }
        for r in 0..q {
            w[r] = (w[r] + ap * dw[r]).max(1e-300);
            y[r] = (y[r] + ad * dy[r]).max(1e-300);
        }
    }

    let x = best.map(|(_, v)| v).unwrap_or(x);
    let obj = objective(linear, residuals, weight, &x);
    let max_violation = max_violation(&rows, &x);
    Ok(SolveReport {
        solution: x,
        objective: obj,
        max_violation,
        iterations: iter,
        status: SolveStatus::MaxIter,
        certificate: None,
    })
}

/// Newton solve for the unconstrained least-squares case (and the degenerate
/// constraint-free LP).
fn solve_unconstrained(
    num_vars: usize,
    linear: &[f64],
    c_eff: &[f64],
    residuals: &[Residual],
    weight: f64,
    _config: &SolverConfig,
) -> Result<SolveReport> {
    if residuals.is_empty() {
        if linear.iter().any(|&v| v != 0.0) {
            return Err(Error::Solver("problem appears unbounded below".into()));
        }
        return Ok(SolveReport {
            solution: vec![0.0; num_vars],
            objective: 0.0,
            max_violation: 0.0,
            iterations: 0,
            status: SolveStatus::Optimal,
            certificate: None,
        });
    }
    let mut m = Packed::zeros(num_vars);
    for i in 0..num_vars {
        m.a[Packed::idx(i, i)] = STATIC_REG;
    }
    for r in residuals {
        for (i, &(a, va)) in r.terms.iter().enumerate() {
            for &(b, vb) in &r.terms[..=i] {
                let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                m.a[Packed::idx(hi, lo)] += 2.0 * weight * va * vb;
            }
        }
    }
    if !m.cholesky(1e-300) {
        return Err(Error::Solver("singular normal matrix".into()));
    }
    let mut x: Vec<f64> = c_eff.iter().map(|v| -v).collect();
    m.solve(&mut x);
    // The static regularization leaves a residual along singular directions of
    // Q; a large one means the objective is unbounded below.
    let qx = q_apply(residuals, weight, &x, num_vars);
    let r_d: Vec<f64> = (0..num_vars).map(|j| qx[j] + c_eff[j]).collect();
    let c_norm = c_eff.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if inf_norm(&r_d) > 1e-4 * (1.0 + c_norm) {
        return Err(Error::Solver("problem appears unbounded below".into()));
    }
    Ok(SolveReport {
        objective: objective(linear, residuals, weight, &x),
        solution: x,
        max_violation: 0.0,
        iterations: 1,
        status: SolveStatus::Optimal,
        certificate: None,
    })
}

fn coalesce(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut sorted: Vec<(usize, f64)> = terms.iter().copied().filter(|t| t.1 != 0.0).collect();
    sorted.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(sorted.len());
    for (j, v) in sorted {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    // Duplicates can merge to exactly zero; drop them so downstream column
    // bookkeeping never sees a structurally absent term.
    out.retain(|t| t.1 != 0.0);
    out
}

fn mat_vec(rows: &[Row], x: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|r| r.full.iter().map(|&(j, v)| v * x[j]).sum())
        .collect()
}

fn mat_t_vec(rows: &[Row], y: &[f64], num_vars: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_vars];
    for (r, row) in rows.iter().enumerate() {
        let yr = y[r];
        if yr != 0.0 {
            for &(j, v) in &row.full {
                out[j] += v * yr;
            }
        }
    }
    out
}

fn mat_t_vec_weighted(rows: &[Row], scale: &[f64], num_vars: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_vars];
    for (r, row) in rows.iter().enumerate() {
        let s = scale[r];
        for &(j, v) in &row.full {
            out[j] += v * s;
        }
    }
    out
}

fn q_apply(residuals: &[Residual], weight: f64, x: &[f64], num_vars: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_vars];
    for r in residuals {
        let gx: f64 = r.terms.iter().map(|&(j, v)| v * x[j]).sum();
        for &(j, v) in &r.terms {
            out[j] += 2.0 * weight * gx * v;
        }
    }
    out
}

fn objective(linear: &[f64], residuals: &[Residual], weight: f64, x: &[f64]) -> f64 {
    let mut obj: f64 = linear.iter().zip(x).map(|(c, v)| c * v).sum();
    for r in residuals {
        let val: f64 = r.terms.iter().map(|&(j, v)| v * x[j]).sum::<f64>() + r.constant;
        obj += weight * val * val;
    }
    obj
}

fn max_violation(rows: &[Row], x: &[f64]) -> f64 {
    rows.iter()
        .map(|r| r.full.iter().map(|&(j, v)| v * x[j]).sum::<f64>() - r.upper)
        .fold(0.0, f64::max)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Largest α in (0, 1] with `v + α Δ ≥ 0`.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    let mut a = 1.0f64;
    for (x, d) in v.iter().zip(dv) {
        if *d < 0.0 {
            a = a.min(-x / d);
        }
    }
    a
}
