mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relkm::boxes::build_boxes;
use relkm::cluster::relational_cost;
use relkm::oracle::{exact_cost, materialize, materialize_tables};
use relkm::relational::{filter_by_box, squared_distance, BoxRect};
use relkm::sampler::assignment_cost_grouped;
use relkm::sumprod::{boxed_cost_grouped, eval_sumprod_grouped, Counting};
use relkm::Point;

/// Join rows whose projection onto `t` equals row `r`, shared among the
/// identical copies of that row.
fn share_of<'a>(j: &'a [Point], t: &relkm::relational::Table, r: usize) -> (impl Iterator<Item = &'a Point>, f64) {
    let row = t.row(r).to_vec();
    let copies = t.rows().filter(|x| *x == row.as_slice()).count() as f64;
    let feats = t.features().to_vec();
    (j.iter().filter(move |p| feats.iter().zip(&row).all(|(&f, &v)| p[f] == v)), copies)
}

fn db_from(seed: u64) -> relkm::Database {
    common::random_acyclic(&mut ChaCha8Rng::seed_from_u64(seed), 5, 7, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn join_trees_have_running_intersection(seed in any::<u64>()) {
        let db = db_from(seed);
        let tree = db.join_tree().unwrap();
        prop_assert!(tree.satisfies_running_intersection());
        for f in 0..db.dim() {
            prop_assert!(tree.node_features(tree.owner(f)).contains(&f));
        }
    }

    #[test]
    fn box_filter_matches_filtered_join(seed in any::<u64>(), lo in -1i32..3, width in 0i32..3) {
        let db = db_from(seed);
        let d = db.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let f = rng.random_range(0..d);
        let mut low = vec![f64::NEG_INFINITY; d];
        let mut high = vec![f64::INFINITY; d];
        low[f] = lo as f64;
        high[f] = (lo + width) as f64;
        let b = BoxRect::closed(low, high);
        let all = materialize(&db, u64::MAX).unwrap();
        let mut want: Vec<Point> = all.rows.into_iter().filter(|p| b.contains(p)).collect();
        let mut got = materialize_tables(&filter_by_box(db.tables(), &b), d, u64::MAX).unwrap().rows;
        let cmp = |a: &Point, b: &Point| a.partial_cmp(b).unwrap();
        want.sort_by(cmp);
        got.sort_by(cmp);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn grouped_counts_match_brute_force(seed in any::<u64>()) {
        let db = db_from(seed);
        let tree = db.join_tree().unwrap();
        let j = materialize(&db, u64::MAX).unwrap();
        for g in 0..db.tables().len() {
            let t = &db.tables()[g];
            let got = eval_sumprod_grouped(&tree, db.tables(), &Counting, g).values;
            for (r, &count) in got.iter().enumerate() {
                let (matches, copies) = share_of(&j.rows, t, r);
                prop_assert_eq!(count as f64, matches.count() as f64 / copies);
            }
        }
    }

    #[test]
    fn boxed_costs_match_brute_force(seed in any::<u64>()) {
        let db = db_from(seed);
        let tree = db.join_tree().unwrap();
        let d = db.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let low: Vec<f64> = (0..d).map(|_| rng.random_range(-1..2) as f64).collect();
        let high: Vec<f64> = low.iter().map(|l| l + rng.random_range(0..3) as f64).collect();
        let b = BoxRect::half_open(low, high);
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let j = materialize(&db, u64::MAX).unwrap();
        let t = &db.tables()[0];
        let got = boxed_cost_grouped(&tree, db.tables(), &b, &y, 0);
        for (r, &cost) in got.iter().enumerate() {
            let (matches, copies) = share_of(&j.rows, t, r);
            let want = matches.filter(|p| b.contains(p)).map(|p| squared_distance(p, &y)).sum::<f64>() / copies;
            prop_assert!((cost - want).abs() <= 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn assignment_costs_match_pointwise_sum(seed in any::<u64>(), k in 1usize..6) {
        let db = db_from(seed);
        let tree = db.join_tree().unwrap();
        let j = materialize(&db, u64::MAX).unwrap();
        prop_assume!(!j.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<Point> = (0..k).map(|_| j.rows[rng.random_range(0..j.len())].clone()).collect();
        let forest = build_boxes(&centers);
        let total: f64 = j.rows.iter().map(|p| forest.assignment_cost(p)).sum();
        let h = assignment_cost_grouped(&tree, db.tables(), &forest, 0, &[]);
        prop_assert!((h.iter().sum::<f64>() - total).abs() <= 1e-9 * total.max(1.0));
        let surrogate = relational_cost(&tree, db.tables(), &centers);
        prop_assert!(surrogate >= exact_cost(&j, &centers) - 1e-9);

        // fixing the first table's row telescopes into the next table's groups
        if db.tables().len() > 1 {
            for (r, &hr) in h.iter().enumerate() {
                let next: f64 = assignment_cost_grouped(&tree, db.tables(), &forest, 1, &[r]).iter().sum();
                prop_assert!((next - hr).abs() <= 1e-9 * hr.max(1.0));
            }
        }
    }

    #[test]
    fn smallest_box_cost_dominates_nearest_center(seed in any::<u64>(), n in 1usize..30, d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<Point> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-20.0..20.0)).collect()).collect();
        let forest = build_boxes(&centers);
        prop_assert!(forest.is_laminar());
        for _ in 0..50 {
            let p: Point = (0..d).map(|_| rng.random_range(-40.0..40.0)).collect();
            let l = centers.iter().map(|c| squared_distance(&p, c)).fold(f64::INFINITY, f64::min);
            prop_assert!(forest.assignment_cost(&p) >= l);
        }
    }
}
