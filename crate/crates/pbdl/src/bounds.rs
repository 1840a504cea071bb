//! Closed-form approximation and generalization bound formulas, evaluated as
//! numeric diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs to the bound formulas.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundInputs {
    pub beta: f64,
    pub radius: f64,
    pub k: usize,
    pub dim: usize,
    pub lipschitz: f64,
    pub m: usize,
    pub delta: f64,
    pub sigma: f64,
}

/// Evaluated bound formulas for a given parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    /// `4 β R² K^{-2/d}`: sup-norm error of the grid approximator.
    pub value_bound: f64,
    /// `16 β R K^{-1/d}`: gradient sup error away from the boundary.
    pub grad_bound: f64,
    /// `36 β R² K^{-1/d}`: divergence sup error away from the boundary.
    pub breg_bound: f64,
    /// `8 R K^{-1/d}`: boundary margin excluded by the gradient bound.
    pub epsilon_margin: f64,
    /// `4 K L R √(2 ln(2d+2) / m)`: Rademacher complexity of the divergence class.
    pub rademacher: f64,
    /// The three right-hand-side terms of the relative-comparison
    /// generalization bound: [mean train hinge placeholder (0; supplied by the
    /// diagnostic), complexity term, confidence term].
    pub gen_bound_terms: [f64; 3],
    /// `⌈m^{d/(4+2d)}⌉`: hyperplane count suggested for the regression setting.
    pub regression_k: usize,
}

/// Evaluate every closed-form bound. Pure arithmetic.
pub fn bounds(inputs: BoundInputs) -> Result<BoundReport> {
    let BoundInputs { beta, radius: r, k, dim, lipschitz: l, m, delta, sigma } = inputs;
    if beta <= 0.0 || r <= 0.0 || k == 0 || dim == 0 || l <= 0.0 || m == 0 || sigma < 0.0 {
        return Err(Error::InvalidArgument("bound inputs must be positive".into()));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidArgument("δ must lie in (0, 1)".into()));
    }
    let kf = k as f64;
    let d = dim as f64;
    let mf = m as f64;
    let k_inv_d = kf.powf(-1.0 / d);

    let complexity_term = 32.0 * kf * l * r * (2.0 * (2.0 * d + 2.0).ln()).sqrt() / mf.sqrt();
    // log₂L can be ≤ 0 for small L; the confidence term is only meaningful for
    // L > 1 and reported as NaN otherwise.
    let confidence_term = (4.0 * (4.0 * l.log2()).ln() + (1.0 / delta).ln()).sqrt() / mf.sqrt();

    Ok(BoundReport {
        inputs,
        value_bound: 4.0 * beta * r * r * kf.powf(-2.0 / d),
        grad_bound: 16.0 * beta * r * k_inv_d,
        breg_bound: 36.0 * beta * r * r * k_inv_d,
        epsilon_margin: 8.0 * r * k_inv_d,
        rademacher: 4.0 * kf * l * r * (2.0 * (2.0 * d + 2.0).ln() / mf).sqrt(),
        gen_bound_terms: [0.0, complexity_term, confidence_term],
        regression_k: mf.powf(d / (4.0 + 2.0 * d)).ceil() as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(beta: f64, r: f64, k: usize, dim: usize, l: f64, m: usize) -> BoundInputs {
        BoundInputs { beta, radius: r, k, dim, lipschitz: l, m, delta: 0.05, sigma: 0.05 }
    }

    #[test]
    fn value_bound_arithmetic() {
        let rep = bounds(inputs(2.0, 1.0, 4, 1, 1.0, 100)).unwrap();
        assert!((rep.value_bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn value_bound_decreases_in_k() {
        let mut prev = f64::INFINITY;
        for k in [1, 2, 4, 8, 16, 64] {
            let rep = bounds(inputs(2.0, 1.0, k, 2, 1.0, 100)).unwrap();
            assert!(rep.value_bound < prev);
            prev = rep.value_bound;
        }
    }

    #[test]
    fn rademacher_arithmetic() {
        let rep = bounds(inputs(1.0, 1.0, 10, 1, 1.0, 100)).unwrap();
        let expect = 4.0 * 10.0 * (2.0 * 4.0f64.ln() / 100.0).sqrt();
        assert!((rep.rademacher - expect).abs() < 1e-12);
        assert!((rep.rademacher - 6.6604).abs() < 1e-3);
    }

    #[test]
    fn regression_k_heuristic() {
        let rep = bounds(inputs(1.0, 1.0, 4, 2, 1.0, 320)).unwrap();
        // ⌈320^{2/8}⌉ = ⌈4.23⌉ = 5
        assert_eq!(rep.regression_k, 5);
    }

    #[test]
    fn delta_must_be_in_unit_interval() {
        let mut inp = inputs(1.0, 1.0, 4, 1, 1.0, 10);
        inp.delta = 0.0;
        assert!(bounds(inp).is_err());
    }
}
