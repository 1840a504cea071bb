//! Covering-grid construction and tangent-plane approximation of smooth
//! convex generators by max-affine models.

use crate::error::{Error, Result};
use crate::model::{dot, MaxAffineModel};

type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A smooth convex generator `φ` on the ∞-norm ball of radius `R`, with
/// smoothness `β` in the sense `‖∇φ(x) - ∇φ(y)‖₁ ≤ β ‖x - y‖∞`.
pub struct SmoothConvexSpec {
    pub dim: usize,
    pub radius: f64,
    pub beta: f64,
    phi: ScalarFn,
    grad: GradFn,
}

impl SmoothConvexSpec {
    pub fn new(dim: usize, radius: f64, beta: f64, phi: ScalarFn, grad: GradFn) -> Result<Self> {
        if radius <= 0.0 || beta <= 0.0 || dim == 0 {
            return Err(Error::InvalidArgument("R > 0, β > 0 and d ≥ 1 required".into()));
        }
        Ok(SmoothConvexSpec { dim, radius, beta, phi, grad })
    }

    /// `φ(x) = ‖x‖₂²`, which has smoothness `β = 2d` under the l1/l∞ pairing.
    pub fn squared_norm(dim: usize, radius: f64) -> Self {
        SmoothConvexSpec {
            dim,
            radius,
            beta: 2.0 * dim as f64,
            phi: Box::new(|x| x.iter().map(|v| v * v).sum()),
            grad: Box::new(|x| x.iter().map(|v| 2.0 * v).collect()),
        }
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        (self.phi)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

/// Number of grid cells per axis for a budget of `K` cells in dimension `d`,
/// i.e. `⌊K^{1/d}⌋` computed robustly against floating-point error.
fn cells_per_axis(k: usize, d: usize) -> usize {
    let mut g = ((k as f64).powf(1.0 / d as f64) + 1e-9).floor() as usize;
    g = g.max(1);
    while (g + 1).pow(d as u32) <= k {
        g += 1;
    }
    while g > 1 && g.pow(d as u32) > k {
        g -= 1;
    }
    g
}

/// Axis-aligned hypercube centers covering the ∞-ball of radius `R`.
///
/// Uses `⌊K^{1/d}⌋` cells per axis, so every point of the ball is within
/// `ε = R / ⌊K^{1/d}⌋` of some center in the ∞-norm.
pub fn covering_grid(radius: f64, dim: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    if radius <= 0.0 || k == 0 || dim == 0 {
        return Err(Error::InvalidArgument("R > 0, K ≥ 1 and d ≥ 1 required".into()));
    }
    let g = cells_per_axis(k, dim);
    let eps = radius / g as f64;
    let axis: Vec<f64> = (0..g).map(|i| -radius + eps * (2 * i + 1) as f64).collect();
    let mut centers = Vec::with_capacity(g.pow(dim as u32));
    let mut idx = vec![0usize; dim];
    loop {
        centers.push(idx.iter().map(|&i| axis[i]).collect());
        let mut f = 0;
        loop {
            idx[f] += 1;
            if idx[f] < g {
                break;
            }
            idx[f] = 0;
            f += 1;
            if f == dim {
                return Ok(centers);
            }
        }
    }
}

/// Covering radius `ε = R / ⌊K^{1/d}⌋` of the grid built by [`covering_grid`].
pub fn covering_radius(radius: f64, dim: usize, k: usize) -> f64 {
    radius / cells_per_axis(k, dim) as f64
}

/// Max-affine minorant of `φ` built from one tangent plane per covering-grid
/// center. Satisfies `h(x) ≤ φ(x)` everywhere on the ball by convexity.
pub fn grid_approximator(spec: &SmoothConvexSpec, k: usize) -> Result<MaxAffineModel> {
    let centers = covering_grid(spec.radius, spec.dim, k)?;
    let mut slopes = Vec::with_capacity(centers.len());
    let mut offsets = Vec::with_capacity(centers.len());
    for c in &centers {
        let v = spec.phi(c);
        let g = spec.grad(c);
        if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGenerator { point: c.clone() });
        }
        offsets.push(v - dot(&g, c));
        slopes.push(g);
    }
    let lipschitz = slopes
        .iter()
        .map(|a| a.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    MaxAffineModel::new(slopes, offsets, lipschitz)
}
