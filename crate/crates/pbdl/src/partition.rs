//! Farthest-point (Gonzalez) clustering, used to fix point-to-hyperplane
//! assignments when training with fewer hyperplanes than points.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A partition of `n` points into `K` cells around data-point centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Cell index of each point.
    pub assignment: Vec<usize>,
    /// Indices of the points chosen as centers, one per cell.
    pub center_indices: Vec<usize>,
    /// Largest ∞-norm distance from a point to its center.
    pub max_radius: f64,
}

impl Partition {
    pub fn k(&self) -> usize {
        self.center_indices.len()
    }

    /// The identity partition: every point is its own cell.
    pub fn identity(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            center_indices: (0..n).collect(),
            max_radius: 0.0,
        }
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Greedy K-center: seed the first center randomly, then repeatedly add the
/// point farthest (∞-norm) from the current center set. 2-approximation of
/// the optimal K-center radius.
pub fn farthest_point_partition(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Partition> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "K must satisfy 1 <= K <= n (K = {k}, n = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    let mut centers = vec![first];
    let mut dist: Vec<f64> = points.iter().map(|p| linf(p, &points[first])).collect();
    let mut assignment = vec![0usize; n];
    while centers.len() < k {
        let next = (0..n)
            .max_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap())
            .unwrap();
        let c = centers.len();
        centers.push(next);
        for i in 0..n {
            let d = linf(&points[i], &points[next]);
            if d < dist[i] {
                dist[i] = d;
                assignment[i] = c;
            }
        }
    }
    let max_radius = dist.iter().copied().fold(0.0, f64::max);
    Ok(Partition { assignment, center_indices: centers, max_radius })
}

/// As [`farthest_point_partition`] but with an explicit first center,
/// bypassing the seeded choice.
pub fn farthest_point_partition_from(points: &[Vec<f64>], k: usize, first: usize) -> Result<Partition> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "K must satisfy 1 <= K <= n (K = {k}, n = {n})"
        )));
    }
    if first >= n {
        return Err(Error::IndexOutOfRange { index: first, len: n });
    }
    let mut centers = vec![first];
    let mut dist: Vec<f64> = points.iter().map(|p| linf(p, &points[first])).collect();
    let mut assignment = vec![0usize; n];
    while centers.len() < k {
        let next = (0..n)
            .max_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap())
            .unwrap();
        let c = centers.len();
        centers.push(next);
        for i in 0..n {
            let d = linf(&points[i], &points[next]);
            if d < dist[i] {
                dist[i] = d;
                assignment[i] = c;
            }
        }
    }
    let max_radius = dist.iter().copied().fold(0.0, f64::max);
    Ok(Partition { assignment, center_indices: centers, max_radius })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_trace_1d() {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 10.0].iter().map(|&x| vec![x]).collect();
        let p = farthest_point_partition_from(&pts, 2, 0).unwrap();
        assert_eq!(p.center_indices, vec![0, 3]);
        assert_eq!(p.assignment, vec![0, 0, 0, 1]);
        assert_eq!(p.max_radius, 2.0);
    }

    #[test]
    fn k_equals_n_radius_zero() {
        let pts: Vec<Vec<f64>> = [0.0, 3.0, -1.0].iter().map(|&x| vec![x]).collect();
        let p = farthest_point_partition(&pts, 3, 42).unwrap();
        assert_eq!(p.max_radius, 0.0);
        let mut centers = p.center_indices.clone();
        centers.sort();
        assert_eq!(centers, vec![0, 1, 2]);
    }

    #[test]
    fn k_larger_than_n_rejected() {
        let pts = vec![vec![0.0]];
        assert!(farthest_point_partition(&pts, 2, 0).is_err());
    }

    #[test]
    fn seed_determinism() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![(i * i % 7) as f64, i as f64]).collect();
        let a = farthest_point_partition(&pts, 3, 9).unwrap();
        let b = farthest_point_partition(&pts, 3, 9).unwrap();
        assert_eq!(a, b);
    }
}
