//! Exact k-means++ on the join by rejection sampling.
//!
//! Candidates are drawn from `Q(x) = R(x) / Z`, where `R(x)` is the squared
//! distance from `x` to the representative of its smallest laminar box, one
//! table row at a time. A candidate is accepted with probability
//! `L(x) / R(x)`, which makes accepted samples follow `L(x) / Y` exactly.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boxes::{build_boxes, LaminarForest};
use crate::error::{Error, Result};
use crate::oracle::nearest;
use crate::relational::{assemble_point, condition_on_prefix, filter_by_box_indexed, JoinTree, Point, Table};
use crate::sequential::PrefixSampler;
use crate::sumprod::{eval_sumprod_grouped, Counting, SquaredDistance};

/// A join point together with the row it took from each table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidatePoint {
    pub coords: Point,
    pub rows: Vec<usize>,
}

fn candidate(tables: &[Table], rows: Vec<usize>, dim: usize) -> CandidatePoint {
    let coords = assemble_point(tables, &rows, dim).expect("sampled rows must join");
    CandidatePoint { coords, rows }
}

/// Uniform join rows, drawn table by table from grouped counts.
pub struct UniformSampler<'a> {
    tables: &'a [Table],
    dim: usize,
    inner: PrefixSampler<'a>,
}

impl<'a> UniformSampler<'a> {
    pub fn new(tree: &'a JoinTree, tables: &'a [Table]) -> Self {
        let inner = PrefixSampler::new(tables.len(), move |prefix: &[usize]| {
            let cond = condition_on_prefix(tables, prefix);
            eval_sumprod_grouped(tree, &cond, &Counting, prefix.len()).values.into_iter().map(|c| c as f64).collect()
        });
        Self { tables, dim: tree.dim(), inner }
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CandidatePoint> {
        let rows = self.inner.draw(rng).ok_or(Error::EmptyJoin)?;
        Ok(candidate(self.tables, rows, self.dim))
    }
}

pub fn sample_uniform_row<R: Rng + ?Sized>(tree: &JoinTree, tables: &[Table], rng: &mut R) -> Result<CandidatePoint> {
    UniformSampler::new(tree, tables).draw(rng)
}

/// For each row `r` of `group`, `Σ R(x)` over join points `x` that extend
/// `r` and the rows pinned by `fixed_rows`.
///
/// Uses `H = G(root, y_root) + Σ_b [G(b, y_b) − G(b, y_parent(b))]`, where
/// `G(b, y)` is the grouped squared distance to `y` over points in `b`:
/// each point ends up charged to the representative of its smallest box.
pub fn assignment_cost_grouped(
    tree: &JoinTree,
    tables: &[Table],
    forest: &LaminarForest,
    group: usize,
    fixed_rows: &[usize],
) -> Vec<f64> {
    let cond = condition_on_prefix(tables, fixed_rows);
    let grouped = |tabs: &[Table], y: &[f64]| -> Vec<f64> {
        let s = SquaredDistance::new(y.to_vec());
        eval_sumprod_grouped(tree, tabs, &s, group).values.into_iter().map(|p| p.cost).collect()
    };
    let root = forest.root();
    let mut h = grouped(&cond, forest.representative(root));
    let mut scale = h.clone();
    for (e, entry) in forest.entries().iter().enumerate() {
        let Some(parent) = entry.parent else { continue };
        let (inside, kept): (Vec<Table>, Vec<Vec<usize>>) = filter_by_box_indexed(&cond, &entry.rect).into_iter().unzip();
        if inside.iter().any(Table::is_empty) {
            continue;
        }
        let own = grouped(&inside, forest.representative(e));
        let theirs = grouped(&inside, forest.representative(parent));
        for ((&r, a), b) in kept[group].iter().zip(own).zip(theirs) {
            h[r] += a - b;
            scale[r] += a + b;
        }
    }
    // cancellation leaves rounding noise where every point sits on its representative
    for (v, s) in h.iter_mut().zip(scale) {
        if *v <= 1e-12 * s {
            *v = 0.0;
        }
    }
    h
}

/// Candidate draws from `Q` for a fixed forest.
pub struct QSampler<'a> {
    tables: &'a [Table],
    dim: usize,
    inner: PrefixSampler<'a>,
}

impl<'a> QSampler<'a> {
    pub fn new(tree: &'a JoinTree, tables: &'a [Table], forest: Arc<LaminarForest>) -> Self {
        let inner = PrefixSampler::new(tables.len(), move |prefix: &[usize]| {
            assignment_cost_grouped(tree, tables, &forest, prefix.len(), prefix)
        });
        Self { tables, dim: tree.dim(), inner }
    }

    /// `Z`, the total assignment cost.
    pub fn total(&mut self) -> f64 {
        self.inner.total()
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CandidatePoint> {
        let rows = self.inner.draw(rng).ok_or(Error::DegenerateDistribution)?;
        Ok(candidate(self.tables, rows, self.dim))
    }
}

pub fn sample_from_q<R: Rng + ?Sized>(
    tree: &JoinTree,
    tables: &[Table],
    forest: &LaminarForest,
    rng: &mut R,
) -> Result<CandidatePoint> {
    QSampler::new(tree, tables, Arc::new(forest.clone())).draw(rng)
}

/// Proposal and acceptance counts for one center.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RejectionStats {
    pub proposals: u64,
    pub accepted: u64,
    /// Largest `R(x) / L(x)` among proposals.
    pub max_cost_ratio: f64,
}

impl RejectionStats {
    pub fn rejections(&self) -> u64 {
        self.proposals - self.accepted
    }

    pub fn mean_rejections(&self) -> f64 {
        if self.accepted == 0 {
            return self.proposals as f64;
        }
        self.rejections() as f64 / self.accepted as f64
    }
}

/// Draws the next center given the current ones, exactly from `L(x) / Y`.
pub struct NextCenterSampler<'a> {
    centers: Vec<Point>,
    forest: Arc<LaminarForest>,
    q: QSampler<'a>,
    budget: usize,
    pub stats: RejectionStats,
}

impl<'a> NextCenterSampler<'a> {
    /// `budget` bounds consecutive rejections; `None` means `64 i² d`
    /// for the `i`-th center.
    pub fn new(tree: &'a JoinTree, tables: &'a [Table], centers: &[Point], budget: Option<usize>) -> Self {
        assert!(!centers.is_empty(), "need at least one center");
        let forest = Arc::new(build_boxes(centers));
        let i = centers.len() + 1;
        let budget = budget.unwrap_or(64 * i * i * tree.dim().max(1));
        Self {
            centers: centers.to_vec(),
            q: QSampler::new(tree, tables, forest.clone()),
            forest,
            budget,
            stats: RejectionStats::default(),
        }
    }

    pub fn forest(&self) -> &LaminarForest {
        &self.forest
    }

    pub fn total_assignment_cost(&mut self) -> f64 {
        self.q.total()
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CandidatePoint> {
        for _ in 0..self.budget {
            let x = self.q.draw(rng)?;
            let r = self.forest.assignment_cost(&x.coords);
            let l = nearest(&x.coords, &self.centers).1;
            debug_assert!(l <= r * (1.0 + 1e-12), "L(x) = {l} exceeds R(x) = {r}");
            self.stats.proposals += 1;
            if l > 0.0 {
                self.stats.max_cost_ratio = self.stats.max_cost_ratio.max(r / l);
            }
            if r > 0.0 && rng.random::<f64>() * r < l {
                self.stats.accepted += 1;
                return Ok(x);
            }
        }
        Err(Error::RejectionBudgetExceeded { center: self.centers.len() + 1, attempts: self.budget })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KmeansppRun {
    pub centers: Vec<CandidatePoint>,
    /// One entry per center after the first.
    pub stats: Vec<RejectionStats>,
}

impl KmeansppRun {
    pub fn points(&self) -> Vec<Point> {
        self.centers.iter().map(|c| c.coords.clone()).collect()
    }
}

/// Up to `k_prime` centers by k-means++. Stops early when every join point
/// coincides with a chosen center.
pub fn run_kmeanspp(tree: &JoinTree, tables: &[Table], k_prime: usize, seed: u64) -> Result<KmeansppRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = KmeansppRun { centers: Vec::with_capacity(k_prime), stats: Vec::new() };
    if k_prime == 0 {
        return Ok(run);
    }
    run.centers.push(sample_uniform_row(tree, tables, &mut rng)?);
    while run.centers.len() < k_prime {
        let mut next = NextCenterSampler::new(tree, tables, &run.points(), None);
        if next.total_assignment_cost() <= 0.0 {
            log::info!("every join point is a center; stopping at {} centers", run.centers.len());
            break;
        }
        let c = next.draw(&mut rng)?;
        run.centers.push(c);
        run.stats.push(next.stats);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_kmeanspp_distribution, materialize};
    use crate::relational::fixtures::two_table_join;
    use crate::relational::{squared_distance, Database};

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
    }

    fn freq(rows: &[Point], draws: &[Point]) -> Vec<f64> {
        let mut f = vec![0.0; rows.len()];
        for d in draws {
            f[rows.iter().position(|r| r == d).unwrap()] += 1.0 / draws.len() as f64;
        }
        f
    }

    #[test]
    fn uniform_rows_on_two_table_join() {
        let db = two_table_join();
        let tree = db.join_tree().unwrap();
        let j = materialize(&db, 100).unwrap();
        let mut s = UniformSampler::new(&tree, db.tables());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<Point> = (0..50_000).map(|_| s.draw(&mut rng).unwrap().coords).collect();
        assert!(tv(&freq(&j.rows, &draws), &[0.2; 5]) < 0.02);
    }

    #[test]
    fn uniform_on_empty_join_errors() {
        let db = Database::from_tables(vec![("A", vec!["a"], vec![vec![1.0]]), ("B", vec!["a"], vec![vec![2.0]])]).unwrap();
        let tree = db.join_tree().unwrap();
        let err = sample_uniform_row(&tree, db.tables(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::EmptyJoin));
    }

    #[test]
    fn assignment_costs_for_two_box_forest() {
        let db = Database::from_tables(vec![("T", vec!["x"], vec![vec![7.0], vec![9.0], vec![12.0]])]).unwrap();
        let tree = db.join_tree().unwrap();
        let forest = build_boxes(&[vec![0.0], vec![16.0]]);
        let h = assignment_cost_grouped(&tree, db.tables(), &forest, 0, &[]);
        assert_eq!(h, vec![49.0, 49.0, 16.0]);
    }

    #[test]
    fn single_center_costs_are_plain_distances() {
        let db = two_table_join();
        let tree = db.join_tree().unwrap();
        let c = vec![1.0, 2.0, 0.5];
        let forest = build_boxes(&[c.clone()]);
        let h = assignment_cost_grouped(&tree, db.tables(), &forest, 0, &[]);
        let j = materialize(&db, 100).unwrap();
        let total: f64 = j.rows.iter().map(|p| squared_distance(p, &c)).sum();
        assert!((h.iter().sum::<f64>() - total).abs() < 1e-9);
    }

    #[test]
    fn conditioned_sums_telescope() {
        let db = two_table_join();
        let tree = db.join_tree().unwrap();
        let forest = build_boxes(&[vec![1.0, 1.0, 1.0], vec![3.0, 2.0, 3.0]]);
        let first = assignment_cost_grouped(&tree, db.tables(), &forest, 0, &[]);
        for (r, &h) in first.iter().enumerate() {
            let second: f64 = assignment_cost_grouped(&tree, db.tables(), &forest, 1, &[r]).iter().sum();
            assert!((second - h).abs() <= 1e-9 * h.max(1.0));
        }
    }

    #[test]
    fn next_center_matches_exact_distribution() {
        let db = two_table_join();
        let tree = db.join_tree().unwrap();
        let j = materialize(&db, 100).unwrap();
        let centers = vec![vec![2.0, 1.0, 1.0]];
        let exact = exact_kmeanspp_distribution(&j, &centers);
        let mut s = NextCenterSampler::new(&tree, db.tables(), &centers, None);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws: Vec<Point> = (0..50_000).map(|_| s.draw(&mut rng).unwrap().coords).collect();
        assert!(tv(&freq(&j.rows, &draws), &exact) < 0.02);
        assert!(s.stats.max_cost_ratio >= 1.0);
    }

    #[test]
    fn two_point_join_picks_the_other_point() {
        let db = Database::from_tables(vec![("T", vec!["x", "y"], vec![vec![0.0, 0.0], vec![3.0, 4.0]])]).unwrap();
        let tree = db.join_tree().unwrap();
        let mut s = NextCenterSampler::new(&tree, db.tables(), &[vec![0.0, 0.0]], None);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert_eq!(s.draw(&mut rng).unwrap().coords, vec![3.0, 4.0]);
        }
    }

    #[test]
    fn run_is_deterministic_and_stops_when_exhausted() {
        let db = two_table_join();
        let tree = db.join_tree().unwrap();
        let a = run_kmeanspp(&tree, db.tables(), 3, 11).unwrap();
        let b = run_kmeanspp(&tree, db.tables(), 3, 11).unwrap();
        assert_eq!(a.centers, b.centers);
        let all = run_kmeanspp(&tree, db.tables(), 10, 5).unwrap();
        assert_eq!(all.centers.len(), 5);
        assert_eq!(run_kmeanspp(&tree, db.tables(), 1, 5).unwrap().centers.len(), 1);
    }
}
