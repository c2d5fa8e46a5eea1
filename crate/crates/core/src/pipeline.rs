//! End-to-end run: sample `k'` centers, weigh them, cluster the coreset.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::cluster::{relational_cost, solve_weighted_kmeans, WeightedPointSet, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::oracle::{exact_cost, materialize, DEFAULT_GUARD};
use crate::relational::{load_database, Database, Point};
use crate::sampler::{run_kmeanspp, RejectionStats};
use crate::sumprod::join_size;
use crate::weigher::{compute_weights, WeightConfig};

pub const BASELINE_RESTARTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Stop after computing the weighted centers.
    Coreset,
    /// Cluster the coreset.
    Cluster,
    /// Lloyd on the materialized join only.
    Baseline,
    /// Cluster, then compare exact costs against the baseline.
    Verify,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub schema: PathBuf,
    pub k: usize,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub tau: u32,
    pub coreset_factor: f64,
    pub seed: u64,
    pub mode: Mode,
    pub guard: u64,
    pub sample_cap: Option<u64>,
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: PathBuf::new(),
            k: 2,
            epsilon: 0.1,
            delta: None,
            tau: 30,
            coreset_factor: 3.0,
            seed: 0,
            mode: Mode::Cluster,
            guard: DEFAULT_GUARD,
            sample_cap: Some(1000),
            timings: false,
        }
    }
}

impl RunConfig {
    fn weight_config(&self) -> WeightConfig {
        WeightConfig {
            epsilon: self.epsilon,
            delta: self.delta,
            bucket_delta: None,
            tau: self.tau,
            sample_cap: self.sample_cap,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.coreset_factor > 0.0) {
            return Err(Error::InvalidConfig("coreset factor must be positive".into()));
        }
        self.weight_config().validate()
    }

    /// `min(c · k · ⌈lg N⌉, N)`, at least `k` when the join allows it.
    pub fn k_prime(&self, n: u64) -> usize {
        let lg = (n as f64).log2().ceil().max(1.0);
        let want = (self.coreset_factor * self.k as f64 * lg).ceil() as u64;
        want.max(self.k as u64).min(n) as usize
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoresetReport {
    pub centers: Vec<Point>,
    pub weights: Vec<f64>,
    pub alias: Vec<usize>,
    pub samples_per_ring: u64,
    pub capped: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SamplingReport {
    pub proposals: u64,
    pub accepted: u64,
    pub mean_rejections: f64,
    pub max_cost_ratio: f64,
    /// Rejections before each center after the first.
    pub rejections: Vec<u64>,
}

impl SamplingReport {
    fn from_stats(stats: &[RejectionStats]) -> Self {
        let proposals = stats.iter().map(|s| s.proposals).sum();
        let accepted: u64 = stats.iter().map(|s| s.accepted).sum();
        let rejections: Vec<u64> = stats.iter().map(|s| s.rejections()).collect();
        Self {
            proposals,
            accepted,
            mean_rejections: if accepted > 0 { rejections.iter().sum::<u64>() as f64 / accepted as f64 } else { 0.0 },
            max_cost_ratio: stats.iter().map(|s| s.max_cost_ratio).fold(0.0, f64::max),
            rejections,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub load_ms: f64,
    pub sample_ms: f64,
    pub weigh_ms: f64,
    pub cluster_ms: f64,
    pub baseline_ms: f64,
}

/// The result document. Field order is the output key order.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub mode: Mode,
    pub n: u64,
    pub dim: usize,
    pub tables: usize,
    pub k: usize,
    pub k_prime: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub tau: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coreset: Option<CoresetReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Point>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coreset_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surrogate_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_centers: Option<Vec<Point>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let t = Instant::now();
    let db = load_database(&cfg.schema)?;
    let load_ms = ms(t);
    let mut report = run_on_database(&db, cfg)?;
    if let Some(tm) = report.timings.as_mut() {
        tm.load_ms = load_ms;
    }
    Ok(report)
}

/// Best-of-restarts Lloyd on the materialized join.
pub fn baseline(db: &Database, k: usize, guard: u64, seed: u64) -> Result<(Vec<Point>, f64)> {
    let j = materialize(db, guard)?;
    let ps = WeightedPointSet::unit(j.rows.clone());
    let k = k.min(ps.distinct_points());
    let best = solve_weighted_kmeans(&ps, k, BASELINE_RESTARTS, seed)?;
    let cost = exact_cost(&j, &best.centers);
    Ok((best.centers, cost))
}

pub fn run_on_database(db: &Database, cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let tree = db.join_tree()?;
    let tables = db.tables();
    let n = join_size(&tree, tables);
    if n == 0 {
        return Err(Error::EmptyJoin);
    }
    let k_prime = cfg.k_prime(n);
    let wcfg = cfg.weight_config();
    let mut timings = Timings::default();
    let mut report = Report {
        mode: cfg.mode,
        n,
        dim: db.dim(),
        tables: tables.len(),
        k: cfg.k,
        k_prime,
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        delta: wcfg.delta(),
        tau: cfg.tau,
        coreset: None,
        sampling: None,
        centers: None,
        coreset_cost: None,
        surrogate_cost: None,
        exact_cost: None,
        baseline_centers: None,
        baseline_cost: None,
        ratio: None,
        timings: None,
    };

    if cfg.mode != Mode::Baseline {
        let t = Instant::now();
        let run = run_kmeanspp(&tree, tables, k_prime, cfg.seed)?;
        timings.sample_ms = ms(t);
        log::info!("sampled {} centers in {:.1} ms", run.centers.len(), timings.sample_ms);
        report.sampling = Some(SamplingReport::from_stats(&run.stats));

        let t = Instant::now();
        let coreset = compute_weights(&tree, tables, &run.points(), &wcfg)?;
        timings.weigh_ms = ms(t);
        log::info!("weighed centers in {:.1} ms, total weight {:.1}", timings.weigh_ms, coreset.total_weight());

        if cfg.mode != Mode::Coreset {
            let t = Instant::now();
            let ps = WeightedPointSet::new(coreset.centers.clone(), coreset.weights.clone());
            let k = cfg.k.min(ps.distinct_points());
            if k < cfg.k {
                log::warn!("only {k} weighted centers are distinct; clustering with k = {k}");
            }
            let best = solve_weighted_kmeans(&ps, k, DEFAULT_RESTARTS, cfg.seed)?;
            report.surrogate_cost = Some(relational_cost(&tree, tables, &best.centers));
            report.coreset_cost = Some(best.cost);
            report.centers = Some(best.centers);
            timings.cluster_ms = ms(t);
            log::info!("clustered coreset in {:.1} ms", timings.cluster_ms);
        }
        report.coreset = Some(CoresetReport {
            centers: coreset.centers,
            weights: coreset.weights,
            alias: coreset.alias,
            samples_per_ring: coreset.samples_per_ring,
            capped: coreset.capped,
        });
    }

    if matches!(cfg.mode, Mode::Baseline | Mode::Verify) {
        let t = Instant::now();
        let (centers, cost) = baseline(db, cfg.k, cfg.guard, cfg.seed)?;
        timings.baseline_ms = ms(t);
        log::info!("baseline in {:.1} ms", timings.baseline_ms);
        if let Some(ours) = &report.centers {
            let j = materialize(db, cfg.guard)?;
            let exact = exact_cost(&j, ours);
            report.exact_cost = Some(exact);
            report.ratio = Some(if cost > 0.0 { exact / cost } else if exact == 0.0 { 1.0 } else { f64::INFINITY });
        }
        report.baseline_centers = Some(centers);
        report.baseline_cost = Some(cost);
    }

    if cfg.timings {
        report.timings = Some(timings);
    }
    Ok(report)
}
