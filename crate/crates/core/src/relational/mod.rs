//! Tables, their join hypergraph, join trees, and box filtering.
//!
//! A [`Database`] owns a global feature list and a set of [`Table`]s whose
//! columns reference features by index. The design matrix is the natural
//! join of all tables; each join row is a point in `R^d` with coordinates in
//! global feature order.

mod gyo;
mod load;
mod rect;

pub use gyo::{gyo_reduce, CyclicVerdict, GyoOutcome, JoinTree};
pub use load::{load_database, parse_schema_doc, SchemaEntry};
pub use rect::{filter_by_box, filter_by_box_indexed, BoxRect, UpperFace};

use std::collections::BTreeSet;

use crate::error::{Error, Result};

pub type Point = Vec<f64>;

/// A named column of the design matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureId {
    pub name: String,
    pub index: usize,
}

/// A table of real-valued rows over a subset of the global features.
///
/// Rows are stored flat; row `r` occupies `values[r * arity .. (r + 1) * arity]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    features: Vec<usize>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(name: impl Into<String>, features: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        let arity = features.len();
        let distinct: BTreeSet<_> = features.iter().collect();
        if distinct.len() != arity {
            return Err(Error::Schema(format!("table '{name}' repeats a column")));
        }
        let mut values = Vec::with_capacity(rows.len() * arity);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != arity {
                return Err(Error::Schema(format!(
                    "table '{name}' row {i} has {} values, expected {arity}",
                    row.len()
                )));
            }
            for v in row {
                if !v.is_finite() {
                    return Err(Error::Schema(format!("table '{name}' row {i} has a non-finite value")));
                }
                values.push(normalize_zero(v));
            }
        }
        Ok(Self { name, features, values })
    }

    pub(crate) fn from_flat(name: String, features: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert!(features.is_empty() || values.len() % features.len() == 0);
        Self { name, features, values }
    }

    /// Global feature indices of the columns, in column order.
    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn arity(&self) -> usize {
        self.features.len()
    }

    pub fn len(&self) -> usize {
        match self.arity() {
            0 => 0,
            a => self.values.len() / a,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let a = self.arity();
        &self.values[r * a..(r + 1) * a]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |r| self.row(r))
    }

    /// Column position of a global feature, if this table has it.
    pub fn column_of(&self, feature: usize) -> Option<usize> {
        self.features.iter().position(|&f| f == feature)
    }

    /// A copy of this table holding only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        let mut values = Vec::with_capacity(rows.len() * self.arity());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Table::from_flat(self.name.clone(), self.features.clone(), values)
    }
}

/// `-0.0` and `0.0` must hash identically when used as join keys.
fn normalize_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// The join hypergraph: one vertex per feature, one hyperedge per table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaGraph {
    pub vertices: usize,
    pub hyperedges: Vec<BTreeSet<usize>>,
}

impl SchemaGraph {
    pub fn degree(&self, feature: usize) -> usize {
        self.hyperedges.iter().filter(|e| e.contains(&feature)).count()
    }
}

/// Feature catalogue plus tables.
#[derive(Debug, Clone)]
pub struct Database {
    features: Vec<FeatureId>,
    tables: Vec<Table>,
}

impl Database {
    /// Builds a database from `(table name, column names, rows)` triples.
    /// Global feature order is the order of first appearance.
    pub fn from_tables<S: AsRef<str>>(specs: Vec<(&str, Vec<S>, Vec<Vec<f64>>)>) -> Result<Self> {
        let mut features: Vec<FeatureId> = Vec::new();
        let mut tables = Vec::with_capacity(specs.len());
        for (name, cols, rows) in specs {
            if tables.iter().any(|t: &Table| t.name == name) {
                return Err(Error::DuplicateTable(name.to_string()));
            }
            let mut idx = Vec::with_capacity(cols.len());
            for c in &cols {
                let c = c.as_ref();
                let i = match features.iter().position(|f| f.name == c) {
                    Some(i) => i,
                    None => {
                        features.push(FeatureId { name: c.to_string(), index: features.len() });
                        features.len() - 1
                    }
                };
                idx.push(i);
            }
            tables.push(Table::new(name, idx, rows)?);
        }
        if tables.is_empty() {
            return Err(Error::Schema("no tables".into()));
        }
        Ok(Self { features, tables })
    }

    pub fn features(&self) -> &[FeatureId] {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn schema_graph(&self) -> SchemaGraph {
        SchemaGraph {
            vertices: self.features.len(),
            hyperedges: self.tables.iter().map(|t| t.features.iter().copied().collect()).collect(),
        }
    }

    pub fn join_tree(&self) -> Result<JoinTree> {
        match gyo_reduce(&self.schema_graph()) {
            GyoOutcome::Acyclic(tree) => Ok(tree),
            GyoOutcome::Cyclic(v) => Err(Error::Cyclic(v)),
        }
    }
}

/// Tables with the first `prefix.len()` tables pinned to the single rows in `prefix`.
pub fn condition_on_prefix(tables: &[Table], prefix: &[usize]) -> Vec<Table> {
    tables
        .iter()
        .enumerate()
        .map(|(i, t)| match prefix.get(i) {
            Some(&r) => t.select_rows(&[r]),
            None => t.clone(),
        })
        .collect()
}

/// Assembles the join point formed by one row per table. Returns `None` when
/// the rows disagree on a shared feature.
pub fn assemble_point(tables: &[Table], rows: &[usize], dim: usize) -> Option<Point> {
    let mut point = vec![f64::NAN; dim];
    for (t, &r) in tables.iter().zip(rows) {
        for (&f, &v) in t.features().iter().zip(t.row(r)) {
            if point[f].is_nan() {
                point[f] = v;
            } else if point[f].to_bits() != v.to_bits() {
                return None;
            }
        }
    }
    Some(point)
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Closed-ball membership on squared distances, with a relative slack that
/// absorbs summation-order rounding between independently computed distances.
pub fn within_sq_radius(sq_dist: f64, sq_radius: f64) -> bool {
    sq_dist <= sq_radius + 1e-9 * sq_radius.abs().max(1e-300) + 1e-12
}
