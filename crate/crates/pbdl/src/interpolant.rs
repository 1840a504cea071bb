use crate::error::{Error, Result};
use crate::model::{dot, MaxAffineModel};

/// Absolute slack allowed on the convexity constraints
/// `z_i - z_j >= a_j^T (x_i - x_j)`.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Per-point values and subgradients of a convex interpolant: `z_i` and `a_i`
/// anchored at `x_i`, subject to the pairwise convexity constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolantSolution {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub subgradients: Vec<Vec<f64>>,
}

impl InterpolantSolution {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>, subgradients: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() != values.len() || points.len() != subgradients.len() {
            return Err(Error::InvalidArgument(
                "points, values and subgradients must have equal length".into(),
            ));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("interpolant needs at least one point".into()));
        }
        Ok(InterpolantSolution { points, values, subgradients })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Worst violation of the convexity constraints, as `(i, j, violation)`.
    /// A non-positive violation means the solution is feasible.
    pub fn worst_violation(&self) -> (usize, usize, f64) {
        let n = self.len();
        let mut worst = (0, 0, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                let mut lhs = self.values[i] - self.values[j];
                for f in 0..self.dim() {
                    lhs -= self.subgradients[j][f] * (self.points[i][f] - self.points[j][f]);
                }
                if -lhs > worst.2 {
                    worst = (i, j, -lhs);
                }
            }
        }
        worst
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.worst_violation().2 <= tol
    }

    /// Lower the interpolant to a max-affine model with one hyperplane per
    /// anchor: slope `a_i`, offset `z_i - a_i^T x_i`, `L = max_i ‖a_i‖₁`.
    pub fn to_model(&self) -> Result<MaxAffineModel> {
        let (i, j, violation) = self.worst_violation();
        if violation > FEASIBILITY_TOL {
            return Err(Error::InfeasibleInterpolant { i, j, violation });
        }
        let slopes: Vec<Vec<f64>> = self.subgradients.clone();
        let offsets: Vec<f64> = (0..self.len())
            .map(|i| self.values[i] - dot(&self.subgradients[i], &self.points[i]))
            .collect();
        let lipschitz = slopes
            .iter()
            .map(|a| a.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        MaxAffineModel::new(slopes, offsets, lipschitz)
    }
}

/// Convenience wrapper matching the operation name used elsewhere.
pub fn interpolant_to_model(sol: &InterpolantSolution) -> Result<MaxAffineModel> {
    sol.to_model()
}
