//! Weighted k-means on the coreset, and clustering costs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boxes::build_boxes;
use crate::error::{Error, Result};
use crate::oracle::nearest;
use crate::relational::{JoinTree, Point, Table};
use crate::sampler::assignment_cost_grouped;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_RESTARTS: usize = 3;

/// Points with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl WeightedPointSet {
    /// Drops entries whose weight is not positive.
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Self {
        assert_eq!(points.len(), weights.len(), "one weight per point");
        let (points, weights) = points.into_iter().zip(weights).filter(|(_, w)| *w > 0.0 && w.is_finite()).unzip();
        Self { points, weights }
    }

    pub fn unit(points: Vec<Point>) -> Self {
        let w = vec![1.0; points.len()];
        Self::new(points, w)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distinct_points(&self) -> usize {
        let mut keys: Vec<Vec<u64>> = self.points.iter().map(|p| p.iter().map(|v| v.to_bits()).collect()).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    }

    /// `Σ w · min_c ‖p − c‖²`.
    pub fn cost(&self, centers: &[Point]) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * nearest(p, centers).1).sum()
    }
}

fn pick<R: Rng + ?Sized>(mass: &[f64], rng: &mut R) -> usize {
    let total: f64 = mass.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &m) in mass.iter().enumerate() {
        if u < m {
            return i;
        }
        u -= m;
    }
    mass.iter().rposition(|&m| m > 0.0).unwrap_or(0)
}

/// k-means++ seeding where every point's mass is scaled by its weight.
pub fn weighted_kmeanspp_seed<R: Rng + ?Sized>(ps: &WeightedPointSet, k: usize, rng: &mut R) -> Result<Vec<Point>> {
    let distinct = ps.distinct_points();
    if k == 0 || k > distinct {
        return Err(Error::InsufficientDistinctPoints { k, distinct });
    }
    let mut centers = vec![ps.points[pick(&ps.weights, rng)].clone()];
    let mut d2: Vec<f64> = ps.points.iter().map(|p| nearest(p, &centers).1).collect();
    while centers.len() < k {
        let mass: Vec<f64> = d2.iter().zip(&ps.weights).map(|(d, w)| d * w).collect();
        let c = ps.points[pick(&mass, rng)].clone();
        for (d, p) in d2.iter_mut().zip(&ps.points) {
            *d = d.min(crate::relational::squared_distance(p, &c));
        }
        centers.push(c);
    }
    Ok(centers)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LloydResult {
    pub centers: Vec<Point>,
    pub cost: f64,
    pub iterations: usize,
    /// Cost after each assignment step.
    pub history: Vec<f64>,
}

/// Weighted Lloyd iterations. An empty cluster is moved to the point with the
/// largest weighted squared distance to its center.
pub fn weighted_lloyd(ps: &WeightedPointSet, centers: Vec<Point>, max_iters: usize, tol: f64) -> LloydResult {
    assert!(!centers.is_empty(), "need at least one center");
    let dim = centers[0].len();
    let k = centers.len();
    let mut centers = centers;
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let assign: Vec<(usize, f64)> = ps.points.iter().map(|p| nearest(p, &centers)).collect();
        let cost: f64 = assign.iter().zip(&ps.weights).map(|((_, d), w)| w * d).sum();
        let converged = match history.last() {
            Some(&prev) => prev - cost <= tol * prev,
            None => false,
        };
        history.push(cost);
        if converged || iterations >= max_iters || cost == 0.0 {
            return LloydResult { centers, cost, iterations, history };
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut mass = vec![0.0; k];
        for ((p, w), &(c, _)) in ps.points.iter().zip(&ps.weights).zip(&assign) {
            mass[c] += w;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += w * v;
            }
        }
        let mut spread: Vec<f64> = assign.iter().zip(&ps.weights).map(|((_, d), w)| w * d).collect();
        for c in 0..k {
            if mass[c] > 0.0 {
                centers[c] = sums[c].iter().map(|s| s / mass[c]).collect();
            } else {
                let far = (0..spread.len()).fold(0, |b, i| if spread[i] > spread[b] { i } else { b });
                centers[c] = ps.points[far].clone();
                spread[far] = 0.0;
            }
        }
    }
}

/// Best of `restarts` runs of seeding plus Lloyd; ties keep the earliest run.
pub fn solve_weighted_kmeans(ps: &WeightedPointSet, k: usize, restarts: usize, seed: u64) -> Result<LloydResult> {
    let runs: Vec<Result<LloydResult>> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let init = weighted_kmeanspp_seed(ps, k, &mut rng)?;
            Ok(weighted_lloyd(ps, init, DEFAULT_MAX_ITERS, DEFAULT_TOL))
        })
        .collect();
    let mut best: Option<LloydResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// `Σ_x R(x)`: each join point charged to the representative of its smallest
/// laminar box around `centers`. An upper bound on the exact cost.
pub fn relational_cost(tree: &JoinTree, tables: &[Table], centers: &[Point]) -> f64 {
    let forest = build_boxes(centers);
    assignment_cost_grouped(tree, tables, &forest, 0, &[]).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_cost, materialize};
    use crate::relational::fixtures::two_table_join;
    use crate::relational::Database;

    #[test]
    fn zero_weights_are_dropped() {
        let ps = WeightedPointSet::new(vec![vec![0.0], vec![1.0]], vec![0.0, 2.0]);
        assert_eq!(ps.len(), 1);
    }

    #[test]
    fn seeding_all_points_gives_zero_cost() {
        let ps = WeightedPointSet::unit(vec![vec![0.0], vec![5.0], vec![9.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = weighted_kmeanspp_seed(&ps, 3, &mut rng).unwrap();
        assert_eq!(ps.cost(&c), 0.0);
        assert!(matches!(
            weighted_kmeanspp_seed(&ps, 4, &mut rng),
            Err(Error::InsufficientDistinctPoints { k: 4, distinct: 3 })
        ));
    }

    #[test]
    fn heavy_point_is_chosen_first() {
        let ps = WeightedPointSet::new(vec![vec![0.0], vec![1.0]], vec![1e-300, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(weighted_kmeanspp_seed(&ps, 1, &mut rng).unwrap(), vec![vec![1.0]]);
        }
    }

    #[test]
    fn lloyd_finds_weighted_blob_means() {
        let ps = WeightedPointSet::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![100.0, 0.0], vec![100.0, 4.0]],
            vec![3.0, 1.0, 1.0, 1.0],
        );
        let r = weighted_lloyd(&ps, vec![vec![0.0, 0.0], vec![100.0, 0.0]], 100, 1e-9);
        assert_eq!(r.centers, vec![vec![0.25, 0.0], vec![100.0, 2.0]]);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn optimal_centers_stay_put() {
        let ps = WeightedPointSet::unit(vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]]);
        let r = weighted_lloyd(&ps, vec![vec![1.0], vec![11.0]], 100, 1e-6);
        assert_eq!(r.centers, vec![vec![1.0], vec![11.0]]);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        let ps = WeightedPointSet::unit(vec![vec![0.0], vec![1.0], vec![10.0]]);
        let r = weighted_lloyd(&ps, vec![vec![0.5], vec![-100.0]], 100, 1e-9);
        assert_eq!(r.cost, 0.5);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn solver_is_deterministic() {
        let pts: Vec<Point> = (0..40).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let ps = WeightedPointSet::unit(pts);
        assert_eq!(solve_weighted_kmeans(&ps, 3, 3, 9).unwrap(), solve_weighted_kmeans(&ps, 3, 3, 9).unwrap());
    }

    #[test]
    fn surrogate_cost_cases() {
        let db = Database::from_tables(vec![("T", vec!["x"], vec![vec![7.0], vec![9.0], vec![12.0]])]).unwrap();
        let tree = db.join_tree().unwrap();
        assert_eq!(relational_cost(&tree, db.tables(), &[vec![0.0], vec![16.0]]), 114.0);

        let db = two_table_join();
        let tree = db.join_tree().unwrap();
        let j = materialize(&db, 100).unwrap();
        let one = [vec![1.0, 2.0, 3.0]];
        assert!((relational_cost(&tree, db.tables(), &one) - exact_cost(&j, &one)).abs() < 1e-9);
        let two = [vec![1.0, 1.0, 1.0], vec![4.0, 2.0, 3.0]];
        assert!(relational_cost(&tree, db.tables(), &two) >= exact_cost(&j, &two) - 1e-9);
    }
}
