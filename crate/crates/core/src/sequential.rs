use std::collections::HashMap;

use rand::Rng;

/// Samples one row per table, table by table, each proportional to a weight
/// that depends on the rows already fixed for earlier tables.
///
/// Weight vectors are cached per prefix, so repeated draws from the same
/// distribution only pay for each distinct prefix once.
pub(crate) struct PrefixSampler<'a> {
    levels: usize,
    weights: Box<dyn FnMut(&[usize]) -> Vec<f64> + Send + 'a>,
    cache: HashMap<Vec<usize>, Vec<f64>>,
}

impl<'a> PrefixSampler<'a> {
    pub fn new(levels: usize, weights: impl FnMut(&[usize]) -> Vec<f64> + Send + 'a) -> Self {
        Self { levels, weights: Box::new(weights), cache: HashMap::new() }
    }

    fn cumulative(&mut self, prefix: &[usize]) -> &[f64] {
        if !self.cache.contains_key(prefix) {
            let mut acc = 0.0;
            let cum = (self.weights)(prefix)
                .into_iter()
                .map(|w| {
                    acc += w.max(0.0);
                    acc
                })
                .collect();
            self.cache.insert(prefix.to_vec(), cum);
        }
        &self.cache[prefix]
    }

    /// Total weight of the first level.
    pub fn total(&mut self) -> f64 {
        self.cumulative(&[]).last().copied().unwrap_or(0.0)
    }

    /// One row index per level, or `None` if some level has zero total weight.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Vec<usize>> {
        let mut prefix = Vec::with_capacity(self.levels);
        for _ in 0..self.levels {
            let cum = self.cumulative(&prefix);
            let total = cum.last().copied().unwrap_or(0.0);
            if !(total > 0.0) {
                return None;
            }
            let u = rng.random::<f64>() * total;
            let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
            prefix.push(idx);
        }
        Some(prefix)
    }
}
