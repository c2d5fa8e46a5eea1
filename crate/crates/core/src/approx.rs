//! Approximate counting of join points inside a ball, and near-uniform
//! sampling from it.
//!
//! The distance multiset semiring tracks, per aggregated element, how many
//! join points sit at each squared distance from a center. Left alone it
//! grows with the number of distinct distances, so messages are compacted
//! onto count quantiles: ranks are cut at `⌈(1+δ)^j⌉` and each point is moved
//! down to the smallest squared distance of its group. A compaction can only
//! overcount the points within any radius, by at most a factor `1+δ`, and
//! the factors multiply over the `m` compactions a query performs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::relational::{assemble_point, condition_on_prefix, squared_distance, within_sq_radius, JoinTree, Point, Table};
use crate::sampler::CandidatePoint;
use crate::sequential::PrefixSampler;
use crate::sumprod::{eval_sumprod, eval_sumprod_grouped, Semiring};

/// Sparse multiset of squared distances as `(value, count)` sorted by value.
pub type Multiset = Vec<(f64, u64)>;

/// Semiring over distance multisets: `⊕` is multiset union, `⊗` adds
/// distances pairwise (convolution).
#[derive(Debug, Clone)]
pub struct DistanceMultiset {
    center: Vec<f64>,
    delta: Option<f64>,
    cap: Option<f64>,
}

impl DistanceMultiset {
    /// `delta = None` keeps every distinct distance.
    pub fn new(center: Vec<f64>, delta: Option<f64>) -> Self {
        Self { center, delta, cap: None }
    }

    /// Drops distances beyond `sq_radius`. Distances only grow under `⊗`,
    /// so counts within the radius are unaffected.
    pub fn capped(mut self, sq_radius: f64) -> Self {
        self.cap = Some(sq_radius);
        self
    }

    fn keep(&self, v: f64) -> bool {
        self.cap.is_none_or(|c| within_sq_radius(v, c))
    }
}

fn merge_sorted(mut all: Vec<(f64, u64)>) -> Multiset {
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Multiset = Vec::with_capacity(all.len());
    for (v, c) in all {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += c,
            _ => out.push((v, c)),
        }
    }
    out
}

/// Next rank cut `⌈(1+δ)^j⌉` strictly above `prev`.
struct RankCuts {
    base: f64,
    pow: f64,
}

impl RankCuts {
    fn new(delta: f64) -> Self {
        Self { base: 1.0 + delta, pow: 1.0 }
    }

    fn after(&mut self, prev: u64) -> u64 {
        loop {
            let t = self.pow.ceil() as u64;
            if t > prev {
                return t;
            }
            self.pow *= self.base;
        }
    }
}

/// Count-quantile compaction: ranks `[t_j, t_{j+1})` move to the value at rank `t_j`.
pub fn compact_multiset(m: &[(f64, u64)], delta: f64) -> Multiset {
    let mut cuts = RankCuts::new(delta);
    let mut out: Multiset = Vec::new();
    let mut group_end = 0u64;
    let mut rank = 0u64;
    for &(v, c) in m {
        if c == 0 {
            continue;
        }
        let first = rank + 1;
        rank += c;
        if first > group_end {
            out.push((v, 0));
            group_end = cuts.after(first) - 1;
        }
        out.last_mut().unwrap().1 += rank.min(group_end) + 1 - first;
        if rank > group_end {
            // later groups start inside this entry, so their points stay at `v`
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += rank - group_end,
                _ => out.push((v, rank - group_end)),
            }
            group_end = cuts.after(rank) - 1;
        }
    }
    out
}

impl Semiring for DistanceMultiset {
    type Elem = Multiset;

    fn zero(&self) -> Multiset {
        Vec::new()
    }

    fn one(&self) -> Multiset {
        vec![(0.0, 1)]
    }

    fn add(&self, a: &Multiset, b: &Multiset) -> Multiset {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 < y.0 => {
                    i += 1;
                    *x
                }
                (Some(x), Some(y)) if y.0 < x.0 => {
                    j += 1;
                    *y
                }
                (Some(x), Some(y)) => {
                    i += 1;
                    j += 1;
                    (x.0, x.1 + y.1)
                }
                (Some(x), None) => {
                    i += 1;
                    *x
                }
                (None, Some(y)) => {
                    j += 1;
                    *y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        out
    }

    fn mul(&self, a: &Multiset, b: &Multiset) -> Multiset {
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        if small.len() == 1 {
            let (s, k) = small[0];
            return large.iter().map(|&(v, c)| (v + s, c * k)).filter(|&(v, _)| self.keep(v)).collect();
        }
        let mut all = Vec::with_capacity(a.len() * b.len());
        for &(x, cx) in a {
            for &(y, cy) in b {
                if self.keep(x + y) {
                    all.push((x + y, cx * cy));
                }
            }
        }
        merge_sorted(all)
    }

    fn lift(&self, feature: usize, value: f64) -> Multiset {
        let d = value - self.center[feature];
        let d = d * d;
        if self.keep(d) {
            vec![(d, 1)]
        } else {
            Vec::new()
        }
    }

    fn compact(&self, e: Multiset) -> Multiset {
        match self.delta {
            Some(delta) => compact_multiset(&e, delta),
            None => e,
        }
    }
}

/// Cumulative counts of join points by squared distance from a center.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    delta: Option<f64>,
    tables: usize,
    /// `(squared distance, points at that distance or closer)`, ascending.
    entries: Vec<(f64, u64)>,
}

impl DistanceProfile {
    pub fn from_multiset(m: &[(f64, u64)], delta: Option<f64>, tables: usize) -> Self {
        let mut acc = 0;
        let entries = m
            .iter()
            .map(|&(v, c)| {
                acc += c;
                (v, acc)
            })
            .collect();
        Self { delta, tables, entries }
    }

    pub fn entries(&self) -> &[(f64, u64)] {
        &self.entries
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn total(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.1)
    }

    /// Approximate number of points with squared distance at most `sq_radius`.
    pub fn count_within_sq(&self, sq_radius: f64) -> u64 {
        let k = self.entries.partition_point(|&(v, _)| within_sq_radius(v, sq_radius));
        if k == 0 {
            0
        } else {
            self.entries[k - 1].1
        }
    }

    pub fn count_in_ball(&self, radius: f64) -> u64 {
        self.count_within_sq(radius * radius)
    }

    /// Reported counts lie in `[true, true · error_factor]`.
    pub fn error_factor(&self) -> f64 {
        self.delta.map_or(1.0, |d| (1.0 + d).powi(self.tables as i32))
    }
}

pub fn distance_profile(tree: &JoinTree, tables: &[Table], center: &[f64], delta: Option<f64>) -> DistanceProfile {
    let s = DistanceMultiset::new(center.to_vec(), delta);
    DistanceProfile::from_multiset(&eval_sumprod(tree, tables, &s), delta, tables.len())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusChoice {
    pub sq_radius: f64,
    pub approx_count: u64,
    /// Whether the guaranteed range of the true count fits the requested window.
    pub in_window: bool,
}

impl RadiusChoice {
    pub fn radius(&self) -> f64 {
        self.sq_radius.sqrt()
    }
}

/// Smallest profile radius whose true count is guaranteed to be at least
/// `(1−window)·target`. When the profile cannot also guarantee at most
/// `(1+window)·target` (ties, or a coarse profile), `in_window` is false.
pub fn radius_for_count(profile: &DistanceProfile, target: u64, window: f64) -> Result<RadiusChoice> {
    let n = profile.total();
    if target > n {
        return Err(Error::TargetExceedsN { target, n });
    }
    let e = profile.error_factor();
    let lo = (1.0 - window) * target as f64 * e;
    let hi = (1.0 + window) * target as f64;
    let k = profile.entries.partition_point(|&(_, c)| (c as f64) < lo).min(profile.entries.len() - 1);
    let (sq_radius, approx_count) = profile.entries[k];
    Ok(RadiusChoice { sq_radius, approx_count, in_window: approx_count as f64 <= hi })
}

/// Near-uniform join points inside a closed ball, drawn table by table from
/// grouped approximate counts. Draws that land outside the ball are retried.
pub struct BallSampler<'a> {
    tables: &'a [Table],
    dim: usize,
    center: Vec<f64>,
    sq_radius: f64,
    inner: PrefixSampler<'a>,
    pub misses: u64,
}

const MAX_BALL_RETRIES: usize = 10_000;

impl<'a> BallSampler<'a> {
    pub fn new(tree: &'a JoinTree, tables: &'a [Table], center: &[f64], sq_radius: f64, delta: Option<f64>) -> Self {
        let s = DistanceMultiset::new(center.to_vec(), delta).capped(sq_radius);
        let inner = PrefixSampler::new(tables.len(), move |prefix: &[usize]| {
            let cond = condition_on_prefix(tables, prefix);
            eval_sumprod_grouped(tree, &cond, &s, prefix.len())
                .values
                .into_iter()
                .map(|m| m.iter().map(|e| e.1).sum::<u64>() as f64)
                .collect()
        });
        Self { tables, dim: tree.dim(), center: center.to_vec(), sq_radius, inner, misses: 0 }
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CandidatePoint> {
        for _ in 0..MAX_BALL_RETRIES {
            let rows = self.inner.draw(rng).ok_or(Error::EmptyBall)?;
            let coords: Point = assemble_point(self.tables, &rows, self.dim).expect("sampled rows must join");
            if within_sq_radius(squared_distance(&coords, &self.center), self.sq_radius) {
                return Ok(CandidatePoint { coords, rows });
            }
            self.misses += 1;
        }
        Err(Error::EmptyBall)
    }
}

pub fn sample_in_ball<R: Rng + ?Sized>(
    tree: &JoinTree,
    tables: &[Table],
    center: &[f64],
    radius: f64,
    delta: Option<f64>,
    rng: &mut R,
) -> Result<CandidatePoint> {
    BallSampler::new(tree, tables, center, radius * radius, delta).draw(rng)
}
