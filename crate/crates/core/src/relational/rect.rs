use super::Table;

/// Whether the upper faces of a box belong to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperFace {
    Closed,
    Open,
}

/// Axis-parallel box `{x : low_j <= x_j <= high_j}` (or `< high_j` with
/// open upper faces). Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRect {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub upper: UpperFace,
}

impl BoxRect {
    pub fn closed(low: Vec<f64>, high: Vec<f64>) -> Self {
        debug_assert!(low.iter().zip(&high).all(|(l, h)| l <= h));
        Self { low, high, upper: UpperFace::Closed }
    }

    pub fn half_open(low: Vec<f64>, high: Vec<f64>) -> Self {
        debug_assert!(low.iter().zip(&high).all(|(l, h)| l <= h));
        Self { low, high, upper: UpperFace::Open }
    }

    pub fn whole_space(dim: usize) -> Self {
        Self::half_open(vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim])
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn is_whole_space(&self) -> bool {
        self.low.iter().all(|l| *l == f64::NEG_INFINITY) && self.high.iter().all(|h| *h == f64::INFINITY)
    }

    pub fn contains_coord(&self, dim: usize, v: f64) -> bool {
        let below_top = match self.upper {
            UpperFace::Closed => v <= self.high[dim],
            UpperFace::Open => v < self.high[dim] || self.high[dim] == f64::INFINITY,
        };
        self.low[dim] <= v && below_top
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        (0..self.dim()).all(|j| self.contains_coord(j, p[j]))
    }

    /// Set containment, assuming both boxes share the same face convention.
    pub fn contains_box(&self, other: &BoxRect) -> bool {
        (0..self.dim()).all(|j| self.low[j] <= other.low[j] && other.high[j] <= self.high[j])
    }

    /// Whether the two boxes share a point. Half-open boxes that only touch
    /// along a face do not intersect.
    pub fn intersects(&self, other: &BoxRect) -> bool {
        let strict = self.upper == UpperFace::Open || other.upper == UpperFace::Open;
        (0..self.dim()).all(|j| {
            if strict {
                self.low[j] < other.high[j] && other.low[j] < self.high[j]
            } else {
                self.low[j] <= other.high[j] && other.low[j] <= self.high[j]
            }
        })
    }
}

/// Keeps, in every table, the rows whose values lie inside `b` on each
/// feature the table holds. The join of the result is `J ∩ b`.
pub fn filter_by_box(tables: &[Table], b: &BoxRect) -> Vec<Table> {
    filter_by_box_indexed(tables, b).into_iter().map(|(t, _)| t).collect()
}

/// [`filter_by_box`] plus, per table, the original indices of the kept rows.
pub fn filter_by_box_indexed(tables: &[Table], b: &BoxRect) -> Vec<(Table, Vec<usize>)> {
    tables
        .iter()
        .map(|t| {
            let constrained: Vec<(usize, usize)> = t
                .features()
                .iter()
                .enumerate()
                .filter(|(_, &f)| b.low[f] > f64::NEG_INFINITY || b.high[f] < f64::INFINITY)
                .map(|(c, &f)| (c, f))
                .collect();
            let keep: Vec<usize> = (0..t.len())
                .filter(|&r| {
                    let row = t.row(r);
                    constrained.iter().all(|&(c, f)| b.contains_coord(f, row[c]))
                })
                .collect();
            if keep.len() == t.len() {
                return (t.clone(), keep);
            }
            (t.select_rows(&keep), keep)
        })
        .collect()
}
