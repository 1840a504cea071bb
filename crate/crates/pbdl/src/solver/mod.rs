//! Linear and quadratic program types plus a self-contained primal-dual
//! interior-point solver.
//!
//! Only the two program shapes the learner needs are supported: a sparse
//! `min c^T x  s.t.  A x <= u` and a least-squares objective
//! `min w * sum_t r_t(x)^2 + c^T x` under the same constraint form.

mod ipm;

use crate::error::{Error, Result};

/// One inequality row `sum_j coeff_j * x_{col_j} <= upper`, stored sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub upper: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, f64)>, upper: f64) -> Self {
        Constraint { terms, upper }
    }
}

/// Optional per-variable bounds; `None` means free on that side.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VarBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// `min c^T x  s.t.  A x <= u`, with optional variable bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Empty, or one entry per variable.
    pub bounds: Vec<VarBounds>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            bounds: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::InvalidArgument("objective length != num_vars".into()));
        }
        if !self.bounds.is_empty() && self.bounds.len() != self.num_vars {
            return Err(Error::InvalidArgument("bounds must be empty or one per variable".into()));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite objective coefficient".into()));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.upper.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite bound in row {r}")));
            }
            for &(j, v) in &c.terms {
                if j >= self.num_vars {
                    return Err(Error::IndexOutOfRange { index: j, len: self.num_vars });
                }
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!("non-finite coefficient in row {r}")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump for external cross-checking: a header line
    /// `lp <num_vars> <num_rows>`, one `obj` line with the dense objective, and
    /// one line per row of the form `row <col>:<coeff> ... <= <upper>`.
    pub fn dump(&self) -> String {
        let mut out = format!("lp {} {}\n", self.num_vars, self.constraints.len());
        out.push_str("obj");
        for v in &self.objective {
            out.push_str(&format!(" {v:.17e}"));
        }
        out.push('\n');
        for c in &self.constraints {
            out.push_str("row");
            for &(j, v) in &c.terms {
                out.push_str(&format!(" {j}:{v:.17e}"));
            }
            out.push_str(&format!(" <= {:.17e}\n", c.upper));
        }
        out
    }
}

/// One affine residual `r(x) = sum_j coeff_j x_{col_j} + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

/// `min weight * sum_t r_t(x)^2 + c^T x  s.t.  A x <= u`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub num_vars: usize,
    pub residuals: Vec<Residual>,
    pub residual_weight: f64,
    pub linear: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBounds>,
}

impl QuadraticProgram {
    pub fn new(num_vars: usize) -> Self {
        QuadraticProgram {
            num_vars,
            residuals: Vec::new(),
            residual_weight: 1.0,
            linear: vec![0.0; num_vars],
            constraints: Vec::new(),
            bounds: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.residuals.is_empty() {
            return Err(Error::InvalidArgument("residual list must be non-empty".into()));
        }
        if self.residual_weight <= 0.0 || !self.residual_weight.is_finite() {
            return Err(Error::InvalidArgument("residual weight must be positive".into()));
        }
        let as_lp = LinearProgram {
            num_vars: self.num_vars,
            objective: self.linear.clone(),
            constraints: self.constraints.clone(),
            bounds: self.bounds.clone(),
        };
        as_lp.validate()?;
        for (t, r) in self.residuals.iter().enumerate() {
            if !r.constant.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite constant in residual {t}")));
            }
            for &(j, v) in &r.terms {
                if j >= self.num_vars {
                    return Err(Error::IndexOutOfRange { index: j, len: self.num_vars });
                }
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite coefficient in residual {t}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump in the same format as [`LinearProgram::dump`], with
    /// residual lines `res <col>:<coeff> ... + <constant>` before the rows.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "qp {} {} {}\n",
            self.num_vars,
            self.residuals.len(),
            self.constraints.len()
        );
        for r in &self.residuals {
            out.push_str("res");
            for &(j, v) in &r.terms {
                out.push_str(&format!(" {j}:{v:.17e}"));
            }
            out.push_str(&format!(" + {:.17e}\n", r.constant));
        }
        let as_lp = LinearProgram {
            num_vars: self.num_vars,
            objective: self.linear.clone(),
            constraints: self.constraints.clone(),
            bounds: self.bounds.clone(),
        };
        let lp_dump = as_lp.dump();
        out.push_str(lp_dump.splitn(2, '\n').nth(1).unwrap_or(""));
        out
    }
}

/// Solver settings. The defaults match the contract used throughout the crate.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { feas_tol: 1e-7, opt_tol: 1e-6, max_iter: 50_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// Solution and diagnostics of a solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Farkas-style certificate (a dual ray) when `status == Infeasible`.
    pub certificate: Option<Vec<f64>>,
}

/// Solve a linear program to the configured tolerances.
pub fn solve_lp(lp: &LinearProgram, config: &SolverConfig) -> Result<SolveReport> {
    lp.validate()?;
    ipm::solve(
        lp.num_vars,
        &lp.objective,
        &[],
        1.0,
        &lp.constraints,
        &lp.bounds,
        config,
    )
}

/// Solve a least-squares quadratic program to the configured tolerances.
pub fn solve_qp(qp: &QuadraticProgram, config: &SolverConfig) -> Result<SolveReport> {
    qp.validate()?;
    ipm::solve(
        qp.num_vars,
        &qp.linear,
        &qp.residuals,
        qp.residual_weight,
        &qp.constraints,
        &qp.bounds,
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn lp_single_constraint() {
        // min x s.t. -x <= -1
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.constraints.push(Constraint::new(vec![(0, -1.0)], -1.0));
        let rep = solve_lp(&lp, &cfg()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!((rep.solution[0] - 1.0).abs() < 1e-6);
        assert!((rep.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lp_box_vertex() {
        // min -x - y s.t. x <= 1, y <= 1, x, y >= 0
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.constraints.push(Constraint::new(vec![(0, 1.0)], 1.0));
        lp.constraints.push(Constraint::new(vec![(1, 1.0)], 1.0));
        lp.bounds = vec![
            VarBounds { lower: Some(0.0), upper: None },
            VarBounds { lower: Some(0.0), upper: None },
        ];
        let rep = solve_lp(&lp, &cfg()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!((rep.solution[0] - 1.0).abs() < 1e-6);
        assert!((rep.solution[1] - 1.0).abs() < 1e-6);
        assert!((rep.objective + 2.0).abs() < 1e-6);
    }

    #[test]
    fn lp_infeasible_contradiction() {
        // min x s.t. x <= 0, -x <= -1
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.constraints.push(Constraint::new(vec![(0, 1.0)], 0.0));
        lp.constraints.push(Constraint::new(vec![(0, -1.0)], -1.0));
        let rep = solve_lp(&lp, &cfg()).unwrap();
        assert_eq!(rep.status, SolveStatus::Infeasible);
        assert!(rep.certificate.is_some());
    }

    #[test]
    fn lp_unbounded_detected() {
        // min x s.t. x <= 0
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.constraints.push(Constraint::new(vec![(0, 1.0)], 0.0));
        assert!(solve_lp(&lp, &cfg()).is_err());
    }

    #[test]
    fn lp_determinism() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![1.0, -2.0, 0.5];
        lp.constraints.push(Constraint::new(vec![(0, 1.0), (1, 2.0)], 3.0));
        lp.constraints.push(Constraint::new(vec![(1, 1.0), (2, -1.0)], 1.0));
        lp.bounds = vec![VarBounds { lower: Some(-1.0), upper: Some(1.0) }; 3];
        let a = solve_lp(&lp, &cfg()).unwrap();
        let b = solve_lp(&lp, &cfg()).unwrap();
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn qp_unconstrained_parabola() {
        // min (x - 3)^2
        let mut qp = QuadraticProgram::new(1);
        qp.residuals.push(Residual { terms: vec![(0, 1.0)], constant: -3.0 });
        let rep = solve_qp(&qp, &cfg()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!((rep.solution[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn qp_active_bound() {
        // min (x - 3)^2 s.t. x <= 1
        let mut qp = QuadraticProgram::new(1);
        qp.residuals.push(Residual { terms: vec![(0, 1.0)], constant: -3.0 });
        qp.constraints.push(Constraint::new(vec![(0, 1.0)], 1.0));
        let rep = solve_qp(&qp, &cfg()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!((rep.solution[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn qp_halfspace_projection() {
        // min (x-1)^2 + (y-2)^2 s.t. x + y <= 1 -> (0, 1), objective 2
        let mut qp = QuadraticProgram::new(2);
        qp.residuals.push(Residual { terms: vec![(0, 1.0)], constant: -1.0 });
        qp.residuals.push(Residual { terms: vec![(1, 1.0)], constant: -2.0 });
        qp.constraints.push(Constraint::new(vec![(0, 1.0), (1, 1.0)], 1.0));
        let rep = solve_qp(&qp, &cfg()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!((rep.solution[0] - 0.0).abs() < 1e-6);
        assert!((rep.solution[1] - 1.0).abs() < 1e-6);
        assert!((rep.objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn objective_scaling_covariance() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -0.5];
        lp.constraints.push(Constraint::new(vec![(0, 1.0), (1, 1.0)], 2.0));
        lp.bounds = vec![VarBounds { lower: Some(0.0), upper: Some(1.5) }; 2];
        let base = solve_lp(&lp, &cfg()).unwrap();
        let gamma = 7.5;
        let mut scaled = lp.clone();
        for c in &mut scaled.objective {
            *c *= gamma;
        }
        let rep = solve_lp(&scaled, &cfg()).unwrap();
        for (a, b) in rep.solution.iter().zip(&base.solution) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((rep.objective - gamma * base.objective).abs() < 1e-5 * gamma);
    }

    #[test]
    fn dump_format() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.constraints.push(Constraint::new(vec![(0, 1.0), (1, -2.0)], 3.0));
        let d = lp.dump();
        assert!(d.starts_with("lp 2 1\n"));
        assert!(d.contains("row 0:"));
        assert!(d.contains("<="));
    }
}
