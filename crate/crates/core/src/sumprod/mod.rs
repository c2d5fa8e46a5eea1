//! SumProd evaluation over a join tree by message passing.
//!
//! A query folds `⊕` over join rows of `⊗` over features of `q_f(x_f)`.
//! Evaluation orients the join tree towards a root table; each non-root node
//! sends its parent one semiring element per separator value, aggregated
//! over its rows. The root's per-row values are the query grouped by the
//! root table, and their sum is the scalar query.

mod semiring;

pub use semiring::{CostPair, Counting, Semiring, SquaredDistance};

#[cfg(test)]
pub(crate) use semiring::axioms;

use std::collections::HashMap;

use crate::relational::{filter_by_box_indexed, BoxRect, JoinTree, Table};

/// Per-row query values for one table, aligned with its row order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedResult<E> {
    pub table: usize,
    pub values: Vec<E>,
}

impl<E> GroupedResult<E> {
    pub fn fold<S: Semiring<Elem = E>>(&self, s: &S) -> E {
        let mut acc = s.zero();
        for v in &self.values {
            s.add_assign(&mut acc, v);
        }
        acc
    }
}

type Key = Vec<u64>;

fn key_of(row: &[f64], cols: &[usize]) -> Key {
    cols.iter().map(|&c| row[c].to_bits()).collect()
}

/// Uncompacted per-row values of `group` with every other table folded in.
fn root_values<S: Semiring>(tree: &JoinTree, tables: &[Table], s: &S, group: usize) -> Vec<S::Elem> {
    let rooted = tree.rooted_at(group);
    let mut messages: Vec<Option<HashMap<Key, S::Elem>>> = vec![None; tree.len()];
    let mut out = Vec::new();

    for &u in &rooted.post_order {
        let table = &tables[u];
        let owned: Vec<(usize, usize)> = table
            .features()
            .iter()
            .enumerate()
            .filter(|(_, &f)| tree.owner(f) == u)
            .map(|(c, &f)| (c, f))
            .collect();
        let cols = |sep: &[usize]| -> Vec<usize> {
            sep.iter().map(|&f| table.column_of(f).expect("separator feature missing from table")).collect()
        };
        let children: Vec<(Vec<usize>, HashMap<Key, S::Elem>)> = rooted.children[u]
            .iter()
            .map(|&c| (cols(&rooted.separator[c]), messages[c].take().expect("child visited before parent")))
            .collect();
        let to_parent = rooted.parent[u].map(|_| cols(&rooted.separator[u]));

        let mut message: HashMap<Key, S::Elem> = HashMap::new();
        if u == group {
            out.reserve(table.len());
        }
        for row in table.rows() {
            let mut val = s.one();
            let mut alive = true;
            for (child_cols, msg) in &children {
                match msg.get(&key_of(row, child_cols)) {
                    Some(m) => val = s.mul(&val, m),
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
            if !alive {
                if u == group {
                    out.push(s.zero());
                }
                continue;
            }
            for &(c, f) in &owned {
                val = s.mul(&val, &s.lift(f, row[c]));
            }
            match &to_parent {
                None => out.push(val),
                Some(pcols) => match message.entry(key_of(row, pcols)) {
                    std::collections::hash_map::Entry::Occupied(mut e) => s.add_assign(e.get_mut(), &val),
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(val);
                    }
                },
            }
        }
        if rooted.parent[u].is_some() {
            let compacted = message.into_iter().map(|(k, v)| (k, s.compact(v))).collect();
            messages[u] = Some(compacted);
        }
    }
    out
}

/// `⊕_{x ∈ J} ⊗_f q_f(x_f)`; zero on an empty join.
pub fn eval_sumprod<S: Semiring>(tree: &JoinTree, tables: &[Table], s: &S) -> S::Elem {
    let mut acc = s.zero();
    for v in root_values(tree, tables, s, tree.root()) {
        s.add_assign(&mut acc, &v);
    }
    s.compact(acc)
}

/// The query grouped by `group`: entry `r` is the query over join rows
/// that extend row `r` of that table. One message pass rooted at `group`.
pub fn eval_sumprod_grouped<S: Semiring>(tree: &JoinTree, tables: &[Table], s: &S, group: usize) -> GroupedResult<S::Elem> {
    let values = root_values(tree, tables, s, group).into_iter().map(|v| s.compact(v)).collect();
    GroupedResult { table: group, values }
}

/// Number of join rows.
pub fn join_size(tree: &JoinTree, tables: &[Table]) -> u64 {
    eval_sumprod(tree, tables, &Counting)
}

/// For each row `r` of `group`, `Σ ‖p − y‖²` over join points `p ∈ b` extending `r`.
pub fn boxed_cost_grouped(tree: &JoinTree, tables: &[Table], b: &BoxRect, y: &[f64], group: usize) -> Vec<f64> {
    let (filtered, kept): (Vec<Table>, Vec<Vec<usize>>) = filter_by_box_indexed(tables, b).into_iter().unzip();
    let mut out = vec![0.0; tables[group].len()];
    if filtered.iter().any(Table::is_empty) {
        return out;
    }
    let s = SquaredDistance::new(y.to_vec());
    for (&r, p) in kept[group].iter().zip(eval_sumprod_grouped(tree, &filtered, &s, group).values) {
        out[r] = p.cost;
    }
    out
}
