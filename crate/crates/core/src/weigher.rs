//! Alternative weights for sampled centers.
//!
//! Around every center, balls `B_j` holding roughly `2^j` join points are
//! found by radius search. Test points are drawn near-uniformly from each
//! ball; those landing in the donut `B_j − B_{j−1}` estimate the fraction
//! `f'` of the donut that is closest to the center. Fractions above a
//! threshold add `f' · |donut|` to the center's weight, with donut sizes
//! taken from the approximate ball counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{distance_profile, radius_for_count, BallSampler};
use crate::boxes::dedupe;
use crate::error::{Error, Result};
use crate::oracle::nearest;
use crate::relational::{squared_distance, within_sq_radius, JoinTree, Point, Table};
use crate::sampler::UniformSampler;
use crate::sumprod::join_size;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightConfig {
    pub epsilon: f64,
    /// Slack on ball counts; defaults to `epsilon / 2`.
    pub delta: Option<f64>,
    /// Per-compaction error of distance profiles; defaults to `epsilon / (2m)`.
    pub bucket_delta: Option<f64>,
    pub tau: u32,
    /// Upper bound on test points per ring.
    pub sample_cap: Option<u64>,
    pub seed: u64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self { epsilon: 0.1, delta: None, bucket_delta: None, tau: 30, sample_cap: None, seed: 0 }
    }
}

impl WeightConfig {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.epsilon / 2.0)
    }

    pub fn bucket_delta(&self, tables: usize) -> f64 {
        self.bucket_delta.unwrap_or(self.epsilon / (2.0 * tables.max(1) as f64))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.2) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 0.2], got {}", self.epsilon)));
        }
        let d = self.delta();
        if !(d > 0.0 && d <= self.epsilon / 2.0 + 1e-15) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0, epsilon/2], got {d}")));
        }
        if let Some(b) = self.bucket_delta {
            if !(b > 0.0 && b <= 0.5) {
                return Err(Error::InvalidConfig(format!("bucket delta must lie in (0, 1/2], got {b}")));
            }
        }
        if self.tau < 30 {
            return Err(Error::InvalidConfig(format!("tau must be at least 30, got {}", self.tau)));
        }
        if self.sample_cap == Some(0) {
            return Err(Error::InvalidConfig("sample cap must be positive".into()));
        }
        Ok(())
    }

    /// `⌈τ/ε² · k'² · log² N⌉`, capped.
    pub fn samples_per_ring(&self, k_prime: usize, n: u64) -> (u64, bool) {
        let lg = (n as f64).log2().max(1.0);
        let k = k_prime as f64;
        let want = (self.tau as f64 / (self.epsilon * self.epsilon) * k * k * lg * lg).ceil();
        match self.sample_cap {
            Some(cap) if want > cap as f64 => (cap, true),
            _ => (want as u64, false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DonutStats {
    pub center: usize,
    pub ring: u32,
    /// Squared radius of `B_j`; infinite for the whole space.
    #[serde(serialize_with = "finite_or_null")]
    pub sq_radius: f64,
    /// Approximate number of points in `B_j`.
    pub ball_count: u64,
    pub in_window: bool,
    pub draws: u64,
    /// Draws that landed in the donut.
    pub samples: u64,
    /// Donut draws whose nearest center is this one.
    pub wins: u64,
    pub ratio: f64,
    pub increment: f64,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedCoreset {
    pub centers: Vec<Point>,
    pub weights: Vec<f64>,
    /// Index of the first center at the same location, per center.
    pub alias: Vec<usize>,
    pub n: u64,
    pub samples_per_ring: u64,
    pub capped: bool,
    pub donuts: Vec<DonutStats>,
}

impl WeightedCoreset {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Index of the closest center; ties go to the lowest index.
pub fn nearest_center(p: &[f64], centers: &[Point]) -> usize {
    nearest(p, centers).0
}

struct Ring {
    sq_radius: f64,
    count: u64,
    in_window: bool,
}

pub fn compute_weights(tree: &JoinTree, tables: &[Table], centers: &[Point], cfg: &WeightConfig) -> Result<WeightedCoreset> {
    cfg.validate()?;
    if centers.is_empty() {
        return Err(Error::InvalidConfig("no centers to weigh".into()));
    }
    let n = join_size(tree, tables);
    if n == 0 {
        return Err(Error::EmptyJoin);
    }
    let (sites, site_center, alias_site) = dedupe(centers);
    let k_prime = centers.len();
    let lg = (n as f64).log2();
    let rings = lg.ceil() as u32;
    let threshold = if lg > 0.0 { 1.0 / (2.0 * (k_prime * k_prime) as f64 * lg) } else { 0.0 };
    let (samples, capped) = cfg.samples_per_ring(k_prime, n);
    if capped {
        log::warn!("test points per ring capped at {samples}");
    }
    let bucket_delta = cfg.bucket_delta(tables.len());

    let per_site: Vec<Result<(f64, Vec<DonutStats>)>> = (0..sites.len())
        .into_par_iter()
        .map(|s| {
            let center = &sites[s];
            let profile = distance_profile(tree, tables, center, Some(bucket_delta));
            let mut balls: Vec<Ring> = Vec::with_capacity(rings as usize + 1);
            for j in 0..=rings {
                let target = 1u64 << j;
                let ring = if target >= n {
                    Ring { sq_radius: f64::INFINITY, count: n, in_window: true }
                } else {
                    let c = radius_for_count(&profile, target, cfg.delta())?;
                    Ring { sq_radius: c.sq_radius, count: c.approx_count, in_window: c.in_window }
                };
                let ring = match balls.last() {
                    Some(prev) if prev.sq_radius >= ring.sq_radius => {
                        Ring { sq_radius: prev.sq_radius, count: prev.count, in_window: ring.in_window }
                    }
                    _ => ring,
                };
                balls.push(ring);
            }
            let mut weight = 0.0;
            let mut stats = Vec::with_capacity(balls.len());
            for (j, ball) in balls.iter().enumerate() {
                let (inner_sq, inner_count) = match j {
                    0 => (f64::NEG_INFINITY, 0),
                    _ => (balls[j - 1].sq_radius, balls[j - 1].count),
                };
                let mut st = DonutStats {
                    center: site_center[s],
                    ring: j as u32,
                    sq_radius: ball.sq_radius,
                    ball_count: ball.count,
                    in_window: ball.in_window,
                    draws: 0,
                    samples: 0,
                    wins: 0,
                    ratio: 0.0,
                    increment: 0.0,
                };
                if j > 0 && ball.sq_radius <= inner_sq {
                    stats.push(st);
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((s as u64) << 32) | j as u64);
                let mut draw_point = ring_sampler(tree, tables, center, ball.sq_radius, bucket_delta);
                for _ in 0..samples {
                    let p = draw_point(&mut rng)?;
                    st.draws += 1;
                    if j > 0 && within_sq_radius(squared_distance(&p, center), inner_sq) {
                        continue;
                    }
                    st.samples += 1;
                    if nearest_center(&p, &sites) == s {
                        st.wins += 1;
                    }
                }
                if st.samples > 0 {
                    st.ratio = st.wins as f64 / st.samples as f64;
                }
                if st.ratio >= threshold {
                    st.increment = st.ratio * ball.count.saturating_sub(inner_count) as f64;
                    weight += st.increment;
                }
                stats.push(st);
            }
            Ok((weight, stats))
        })
        .collect();

    let mut weights = vec![0.0; centers.len()];
    let mut donuts = Vec::new();
    for (s, r) in per_site.into_iter().enumerate() {
        let (w, stats) = r?;
        weights[site_center[s]] = w;
        donuts.extend(stats);
    }
    let alias = alias_site.iter().map(|&s| site_center[s]).collect();
    Ok(WeightedCoreset { centers: centers.to_vec(), weights, alias, n, samples_per_ring: samples, capped, donuts })
}

type PointDraw<'a> = Box<dyn FnMut(&mut ChaCha8Rng) -> Result<Point> + 'a>;

fn ring_sampler<'a>(tree: &'a JoinTree, tables: &'a [Table], center: &[f64], sq_radius: f64, delta: f64) -> PointDraw<'a> {
    if sq_radius.is_infinite() {
        let mut s = UniformSampler::new(tree, tables);
        Box::new(move |rng| Ok(s.draw(rng)?.coords))
    } else {
        let mut s = BallSampler::new(tree, tables, center, sq_radius, Some(delta));
        Box::new(move |rng| Ok(s.draw(rng)?.coords))
    }
}
