//! Brute-force ground truth over a materialized join.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::relational::{gyo_reduce, squared_distance, Database, GyoOutcome, Point, SchemaGraph, Table};
use crate::sumprod::join_size;

pub const DEFAULT_GUARD: u64 = 100_000;

/// Every join row as a point in global feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterializedJoin {
    pub rows: Vec<Point>,
    pub guard: u64,
}

impl MaterializedJoin {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn materialize(db: &Database, guard: u64) -> Result<MaterializedJoin> {
    materialize_tables(db.tables(), db.dim(), guard)
}

/// Materializes the join of `tables`. Rows come out in nested-loop order
/// over the tables as listed, so the order is deterministic.
pub fn materialize_tables(tables: &[Table], dim: usize, guard: u64) -> Result<MaterializedJoin> {
    let graph = SchemaGraph {
        vertices: dim,
        hyperedges: tables.iter().map(|t| t.features().iter().copied().collect()).collect(),
    };
    let size = match gyo_reduce(&graph) {
        GyoOutcome::Acyclic(tree) => join_size(&tree, tables),
        GyoOutcome::Cyclic(v) => return Err(Error::Cyclic(v)),
    };
    if size > guard {
        return Err(Error::MaterializationGuard { rows: size, guard });
    }

    // per table: columns bound by earlier tables, and an index on them
    let mut bound = vec![false; dim];
    let mut plans = Vec::with_capacity(tables.len());
    for t in tables {
        let key_cols: Vec<usize> = (0..t.arity()).filter(|&c| bound[t.features()[c]]).collect();
        let mut index: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
        for r in 0..t.len() {
            let row = t.row(r);
            index.entry(key_cols.iter().map(|&c| row[c].to_bits()).collect()).or_default().push(r);
        }
        for &f in t.features() {
            bound[f] = true;
        }
        plans.push((key_cols, index));
    }

    let mut rows = Vec::with_capacity(size as usize);
    let mut point = vec![0.0; dim];
    extend(tables, &plans, 0, &mut point, &mut rows);
    Ok(MaterializedJoin { rows, guard })
}

type Plan = (Vec<usize>, HashMap<Vec<u64>, Vec<usize>>);

fn extend(tables: &[Table], plans: &[Plan], i: usize, point: &mut Point, out: &mut Vec<Point>) {
    if i == tables.len() {
        out.push(point.clone());
        return;
    }
    let t = &tables[i];
    let (key_cols, index) = &plans[i];
    let key: Vec<u64> = key_cols.iter().map(|&c| point[t.features()[c]].to_bits()).collect();
    if let Some(matches) = index.get(&key) {
        for &r in matches {
            for (&f, &v) in t.features().iter().zip(t.row(r)) {
                point[f] = v;
            }
            extend(tables, plans, i + 1, point, out);
        }
    }
}

/// Index of the nearest center; ties go to the lowest index.
pub fn nearest(p: &[f64], centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// `P(x) = L(x) / Y` per join row. Uniform with no centers; all zero when `Y = 0`.
pub fn exact_kmeanspp_distribution(j: &MaterializedJoin, centers: &[Point]) -> Vec<f64> {
    if j.is_empty() {
        return Vec::new();
    }
    if centers.is_empty() {
        return vec![1.0 / j.len() as f64; j.len()];
    }
    let l: Vec<f64> = j.rows.iter().map(|p| nearest(p, centers).1).collect();
    let y: f64 = l.iter().sum();
    if y == 0.0 {
        return vec![0.0; j.len()];
    }
    l.into_iter().map(|v| v / y).collect()
}

/// Number of join rows whose nearest center is each center.
pub fn exact_weights(j: &MaterializedJoin, centers: &[Point]) -> Vec<u64> {
    let mut w = vec![0u64; centers.len()];
    for p in &j.rows {
        w[nearest(p, centers).0] += 1;
    }
    w
}

/// `Σ_x min_c ‖x − c‖²`.
pub fn exact_cost(j: &MaterializedJoin, centers: &[Point]) -> f64 {
    j.rows.iter().map(|p| nearest(p, centers).1).sum()
}

/// Path schema encoding a knapsack-counting instance: for every weight `w_i`
/// tables `(f_{2i-1}, f_{2i}) = {(0,0), (0,w_i)}` and
/// `(f_{2i}, f_{2i+1}) = {(0,0), (w_i,0)}`. Join rows correspond to subsets
/// and their coordinate sum is the subset weight.
pub fn knapsack_database(weights: &[u64]) -> Result<Database> {
    let mut specs = Vec::with_capacity(2 * weights.len());
    let names: Vec<String> = (0..2 * weights.len()).map(|t| format!("T{}", t + 1)).collect();
    for (i, &w) in weights.iter().enumerate() {
        let w = w as f64;
        let f = |k: usize| format!("f{k}");
        specs.push((names[2 * i].as_str(), vec![f(2 * i + 1), f(2 * i + 2)], vec![vec![0., 0.], vec![0., w]]));
        specs.push((names[2 * i + 1].as_str(), vec![f(2 * i + 2), f(2 * i + 3)], vec![vec![0., 0.], vec![w, 0.]]));
    }
    Database::from_tables(specs)
}

/// Two centers on the all-ones diagonal whose bisector is
/// `Σ_i x_i = capacity + 1/2`: the first center's cluster is exactly the
/// subsets of weight at most `capacity`.
pub fn knapsack_centers(dim: usize, capacity: u64) -> [Point; 2] {
    let far = (2 * capacity + 1) as f64 / dim as f64;
    [vec![0.0; dim], vec![far; dim]]
}
