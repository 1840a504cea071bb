use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope-norm slack allowed when validating `‖a_k‖₁ ≤ L`.
pub const LIPSCHITZ_TOL: f64 = 1e-7;

/// Per-feature affine rescaling applied before evaluating the generator.
///
/// A model trained on rescaled features records the transform here so callers
/// can keep passing data in original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    /// Subtracted from each feature.
    pub shift: Vec<f64>,
    /// Multiplies each shifted feature.
    pub scale: Vec<f64>,
}

impl FeatureScale {
    /// Rescale that maps the per-feature ranges observed in `rows` onto `[-1, 1]`.
    /// Constant features are left untouched apart from centering.
    pub fn fit(rows: &[Vec<f64>]) -> Option<Self> {
        let d = rows.first()?.len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for f in 0..d {
                lo[f] = lo[f].min(r[f]);
                hi[f] = hi[f].max(r[f]);
            }
        }
        let shift: Vec<f64> = (0..d).map(|f| 0.5 * (lo[f] + hi[f])).collect();
        let scale: Vec<f64> = (0..d)
            .map(|f| {
                let half = 0.5 * (hi[f] - lo[f]);
                if half > 0.0 {
                    1.0 / half
                } else {
                    1.0
                }
            })
            .collect();
        Some(FeatureScale { shift, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (s, c))| (v - s) * c)
            .collect()
    }
}

/// A max-affine convex generator `h(x) = max_k a_k^T x + b_k` with an
/// l1 Lipschitz budget `L` on the slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAffineModel {
    pub dim: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub slopes: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_scale: Option<FeatureScale>,
}

/// A Bregman divergence evaluation `D(x, x')` together with the hyperplane
/// active at each argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanEvaluation {
    pub value: f64,
    pub active_first: usize,
    pub active_second: usize,
}

impl MaxAffineModel {
    pub fn new(slopes: Vec<Vec<f64>>, offsets: Vec<f64>, lipschitz: f64) -> Result<Self> {
        let k = slopes.len();
        let dim = slopes.first().map(|s| s.len()).unwrap_or(0);
        let model = MaxAffineModel { dim, k, lipschitz, slopes, offsets, feature_scale: None };
        model.validate()?;
        Ok(model)
    }

    /// Constant model `h ≡ c` in dimension `d` (a single zero-slope hyperplane).
    pub fn constant(dim: usize, c: f64) -> Self {
        MaxAffineModel {
            dim,
            k: 1,
            lipschitz: 0.0,
            slopes: vec![vec![0.0; dim]],
            offsets: vec![c],
            feature_scale: None,
        }
    }

    pub fn with_feature_scale(mut self, scale: FeatureScale) -> Self {
        self.feature_scale = Some(scale);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.dim == 0 {
            return Err(Error::InvalidModel("K and dim must be at least 1".into()));
        }
        if self.slopes.len() != self.k || self.offsets.len() != self.k {
            return Err(Error::InvalidModel("slope/offset counts disagree with K".into()));
        }
        if !self.lipschitz.is_finite() || self.lipschitz < 0.0 {
            return Err(Error::InvalidModel("L must be finite and non-negative".into()));
        }
        for (k, (a, b)) in self.slopes.iter().zip(&self.offsets).enumerate() {
            if a.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, actual: a.len() });
            }
            if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("non-finite entry in hyperplane {k}")));
            }
            let l1: f64 = a.iter().map(|v| v.abs()).sum();
            if l1 > self.lipschitz + LIPSCHITZ_TOL {
                return Err(Error::InvalidModel(format!(
                    "hyperplane {k} has ‖a‖₁ = {l1} exceeding L = {}",
                    self.lipschitz
                )));
            }
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        Ok(())
    }

    /// `h(x)` together with the attaining hyperplane index.
    ///
    /// Ties are broken to the lowest index so evaluation is deterministic.
    pub fn evaluate(&self, x: &[f64]) -> Result<(f64, usize)> {
        self.check_dim(x)?;
        Ok(match &self.feature_scale {
            Some(fs) => self.evaluate_scaled(&fs.apply(x)),
            None => self.evaluate_scaled(x),
        })
    }

    fn evaluate_scaled(&self, x: &[f64]) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut active = 0;
        for k in 0..self.k {
            let v = dot(&self.slopes[k], x) + self.offsets[k];
            if v > best {
                best = v;
                active = k;
            }
        }
        (best, active)
    }

    /// The Bregman divergence `D(x, x') = h(x) - h(x') - a_{p(x')}^T (x - x')`
    /// induced by the generator, where `p(x')` is the active hyperplane at `x'`.
    pub fn bregman(&self, x: &[f64], x2: &[f64]) -> Result<BregmanEvaluation> {
        self.check_dim(x)?;
        self.check_dim(x2)?;
        let (xs, x2s) = match &self.feature_scale {
            Some(fs) => (fs.apply(x), fs.apply(x2)),
            None => (x.to_vec(), x2.to_vec()),
        };
        let (hx, active_first) = self.evaluate_scaled(&xs);
        let (hx2, active_second) = self.evaluate_scaled(&x2s);
        let a = &self.slopes[active_second];
        let mut value = hx - hx2;
        for f in 0..self.dim {
            value -= a[f] * (xs[f] - x2s[f]);
        }
        Ok(BregmanEvaluation { value, active_first, active_second })
    }

    /// Shorthand for the divergence value alone.
    pub fn divergence(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        Ok(self.bregman(x, x2)?.value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: MaxAffineModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vee() -> MaxAffineModel {
        MaxAffineModel::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0], 1.0).unwrap()
    }

    /// Tangents to x² at {-1, 0, 1}.
    fn quad_tangents() -> MaxAffineModel {
        MaxAffineModel::new(
            vec![vec![-2.0], vec![0.0], vec![2.0]],
            vec![-1.0, 0.0, -1.0],
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn evaluate_max_of_two() {
        assert_eq!(vee().evaluate(&[2.0]).unwrap(), (2.0, 0));
    }

    #[test]
    fn evaluate_tie_breaks_low() {
        assert_eq!(vee().evaluate(&[0.0]).unwrap(), (0.0, 0));
    }

    #[test]
    fn evaluate_quadratic_tangents() {
        let (v, k) = quad_tangents().evaluate(&[0.5]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(k, 1);
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let err = vee().evaluate(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 1, actual: 2 }));
    }

    #[test]
    fn bregman_identity_is_zero() {
        let m = quad_tangents();
        for x in [-0.9, 0.0, 0.3, 1.0] {
            assert_eq!(m.divergence(&[x], &[x]).unwrap(), 0.0);
        }
    }

    #[test]
    fn bregman_affine_model_is_zero() {
        let m = MaxAffineModel::new(vec![vec![3.0, -1.0]], vec![0.5], 4.0).unwrap();
        assert!(m.divergence(&[1.0, 2.0], &[-4.0, 0.1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bregman_matches_quadratic() {
        // D_{x²}(1, -1) = 4 and the tangent model reproduces it exactly.
        let e = quad_tangents().bregman(&[1.0], &[-1.0]).unwrap();
        assert_eq!(e.value, 4.0);
        assert_eq!(e.active_first, 2);
        assert_eq!(e.active_second, 0);
    }

    #[test]
    fn lipschitz_invariant_enforced() {
        let err = MaxAffineModel::new(vec![vec![1.0, 1.0]], vec![0.0], 1.5).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut m = quad_tangents();
        m.slopes[0][0] = -2.0 + 1e-16;
        m.offsets[1] = 0.1 + 0.2; // not representable exactly
        let back = MaxAffineModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn feature_scale_maps_to_unit_box() {
        let rows = vec![vec![0.0, -2.0], vec![4.0, 2.0]];
        let fs = FeatureScale::fit(&rows).unwrap();
        assert_eq!(fs.apply(&[0.0, -2.0]), vec![-1.0, -1.0]);
        assert_eq!(fs.apply(&[4.0, 2.0]), vec![1.0, 1.0]);
        assert_eq!(fs.apply(&[2.0, 0.0]), vec![0.0, 0.0]);
    }
}
