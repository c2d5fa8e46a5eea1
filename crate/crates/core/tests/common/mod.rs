#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use relkm::Database;

/// Random acyclic schema built by attaching each table to an earlier one
/// through a subset of its features. Join keys come from a tiny integer
/// domain so joins are rarely empty.
pub fn random_acyclic<R: Rng>(rng: &mut R, max_tables: usize, max_rows: usize, max_features: usize) -> Database {
    random_schema(rng, max_tables, max_rows, max_features, false)
}

/// Like [`random_acyclic`], but every table gets at least one private
/// feature with continuous values, so join points are distinct and rarely
/// tie on distance.
pub fn random_acyclic_continuous<R: Rng>(rng: &mut R, max_tables: usize, max_rows: usize, max_features: usize) -> Database {
    random_schema(rng, max_tables, max_rows, max_features, true)
}

fn random_schema<R: Rng>(rng: &mut R, max_tables: usize, max_rows: usize, max_features: usize, continuous: bool) -> Database {
    let m = rng.random_range(1..=max_tables);
    let mut table_features: Vec<Vec<usize>> = Vec::new();
    let mut private: Vec<usize> = Vec::new();
    let mut next_feature = 0usize;
    for t in 0..m {
        let mut feats = Vec::new();
        if t > 0 {
            let parent = &table_features[rng.random_range(0..t)];
            let shared = rng.random_range(0..=parent.len().min(2));
            let mut pool: Vec<usize> = parent.iter().copied().filter(|f| !private.contains(f)).collect();
            pool.shuffle(rng);
            feats.extend(pool.into_iter().take(shared));
        }
        let room = max_features.saturating_sub(next_feature);
        let fresh = if continuous || feats.is_empty() { rng.random_range(1..=room.clamp(1, 2)).min(room) } else { rng.random_range(0..=room.min(2)) };
        if continuous && fresh > 0 {
            private.push(next_feature);
        }
        for _ in 0..fresh {
            feats.push(next_feature);
            next_feature += 1;
        }
        if feats.is_empty() {
            // out of fresh features: reuse one from the parent side
            feats.push(table_features[t - 1][0]);
        }
        table_features.push(feats);
    }
    let mut degree = vec![0usize; next_feature.max(1)];
    for feats in &table_features {
        for &f in feats {
            degree[f] += 1;
        }
    }
    let names: Vec<String> = (0..m).map(|t| format!("T{t}")).collect();
    let specs = table_features
        .iter()
        .enumerate()
        .map(|(t, feats)| {
            let rows = rng.random_range(0..=max_rows);
            let data = (0..rows)
                .map(|_| {
                    feats
                        .iter()
                        .map(|&f| if continuous && degree[f] == 1 { rng.random_range(-10.0..10.0) } else { rng.random_range(0..3) as f64 })
                        .collect()
                })
                .collect();
            (names[t].as_str(), feats.iter().map(|f| format!("f{f}")).collect::<Vec<_>>(), data)
        })
        .collect();
    Database::from_tables(specs).expect("generated schema is valid")
}

/// Path join `A(x, k) ⋈ B(k, y) ⋈ C(y', ...)`-style instance with planted
/// clusters: cluster `g` owns key value `g`, and its rows scatter around
/// per-table means.
pub fn planted_path<R: Rng>(rng: &mut R, clusters: usize, rows_per_key: usize, spread: f64) -> Database {
    let means: Vec<[f64; 3]> = (0..clusters).map(|_| [rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)]).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    for (g, mu) in means.iter().enumerate() {
        for r in 0..rows_per_key {
            a.push(vec![mu[0] + spread * gauss(rng), g as f64]);
            // second key: cluster-local sub key keeps the join a path
            b.push(vec![g as f64, mu[1] + spread * gauss(rng), (g * rows_per_key + r % 3) as f64]);
            c.push(vec![(g * rows_per_key + r % 3) as f64, mu[2] + spread * gauss(rng)]);
        }
    }
    Database::from_tables(vec![
        ("A", vec!["x1", "k1"], a),
        ("B", vec!["k1", "x2", "k2"], b),
        ("C", vec!["k2", "x3"], c),
    ])
    .unwrap()
}

/// Star join: a fact table of key triples and three dimension tables.
pub fn planted_star<R: Rng>(rng: &mut R, clusters: usize, facts_per_key: usize, dim_rows: usize, spread: f64) -> Database {
    let mut fact = Vec::new();
    let mut dims: Vec<Vec<Vec<f64>>> = vec![Vec::new(); 3];
    for g in 0..clusters {
        let mu: Vec<f64> = (0..3).map(|_| rng.random_range(-100.0..100.0)).collect();
        for _ in 0..facts_per_key {
            fact.push(vec![g as f64, g as f64, g as f64, mu[0] / 10.0 + spread * gauss(rng)]);
        }
        for (d, rows) in dims.iter_mut().enumerate() {
            for _ in 0..dim_rows {
                rows.push(vec![g as f64, mu[d] + spread * gauss(rng)]);
            }
        }
    }
    Database::from_tables(vec![
        ("F", vec!["k1", "k2", "k3", "v"], fact),
        ("D1", vec!["k1", "x1"], dims[0].clone()),
        ("D2", vec!["k2", "x2"], dims[1].clone()),
        ("D3", vec!["k3", "x3"], dims[2].clone()),
    ])
    .unwrap()
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}
