//! End-to-end trial orchestration: single runs, Monte Carlo sweeps over the
//! density constant C, edge-count experiments, and lower-bound experiments
//! on the extremal hosts.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::classify_cells;
use crate::components::build_gamma;
use crate::construct::{construct_with_plan, ConstructionPlan, CyclicOrder, Stage};
use crate::geometry::{build_rgg, derive_params, sample_points, CellGrid, Norm, ParamSet};
use crate::graph::{Graph, UnionGraph};
use crate::hosts::{gen_extremal_factor, gen_extremal_power, gen_min_degree_random, PatternGraph};
use crate::verify::verify_kth_power;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HostSpec {
    Random,
    ExtremalPower,
    ExtremalFactor,
    File(PathBuf),
}

impl std::str::FromStr for HostSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(HostSpec::Random),
            "extremal-power" => Ok(HostSpec::ExtremalPower),
            "extremal-factor" => Ok(HostSpec::ExtremalFactor),
            other => match other.strip_prefix("file:") {
                Some(path) => Ok(HostSpec::File(PathBuf::from(path))),
                None => Err(format!(
                    "unknown host '{other}' (expected random, extremal-power, \
                     extremal-factor, or file:PATH)"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub alpha: f64,
    /// Density constant; exactly one of `c` and `r` must be set.
    pub c: Option<f64>,
    /// Radius override; translated to `C = r^d n`.
    pub r: Option<f64>,
    pub norm: Norm,
    pub host: HostSpec,
    /// Pattern name, needed by the extremal-factor host.
    pub pattern: Option<String>,
    pub seed: u64,
    pub probe_override: Option<usize>,
}

impl TrialConfig {
    pub fn params(&self) -> Result<ParamSet, ConfigError> {
        let c = match (self.c, self.r) {
            (Some(c), None) => c,
            (None, Some(r)) => {
                if !(r > 0.0) {
                    return Err(invalid("r must be positive"));
                }
                r.powi(self.d as i32) * self.n as f64
            }
            (Some(_), Some(_)) => return Err(invalid("give either C or r, not both")),
            (None, None) => return Err(invalid("one of C or r is required")),
        };
        derive_params(
            self.n,
            self.d,
            self.k,
            self.alpha,
            c,
            self.norm,
            self.probe_override,
        )
        .map_err(|e| invalid(e.to_string()))
    }

    pub fn build_host(&self, seed: u64) -> Result<Graph, ConfigError> {
        let host = match &self.host {
            HostSpec::Random => gen_min_degree_random(self.n, self.alpha, seed)
                .map_err(|e| invalid(e.to_string()))?,
            HostSpec::ExtremalPower => gen_extremal_power(self.n, self.k, self.alpha)
                .map_err(|e| invalid(e.to_string()))?
                .graph,
            HostSpec::ExtremalFactor => {
                let name = self
                    .pattern
                    .as_deref()
                    .ok_or_else(|| invalid("extremal-factor host needs --pattern"))?;
                let pattern = PatternGraph::by_name(name)
                    .ok_or_else(|| invalid(format!("unknown pattern '{name}'")))?;
                gen_extremal_factor(self.n, &pattern, self.alpha)
                    .map_err(|e| invalid(e.to_string()))?
                    .graph
            }
            HostSpec::File(path) => {
                let file = File::open(path)?;
                let g = Graph::read_edge_list(BufReader::new(file))
                    .map_err(|e| invalid(e.to_string()))?;
                if g.n() != self.n {
                    return Err(invalid(format!(
                        "host file has {} vertices, config says {}",
                        g.n(),
                        self.n
                    )));
                }
                g
            }
        };
        Ok(host)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum Outcome {
    Success,
    Failure { stage: Stage, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub params: ParamSet,
    pub seed: u64,
    pub outcome: Outcome,
    pub verify_ok: bool,
    pub sparse_cells: u64,
    pub components: usize,
    pub wall_time_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<CyclicOrder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<ConstructionPlan>,
}

/// splitmix64: decorrelates per-trial seeds derived from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// What a trial should retain beyond its summary numbers.
#[derive(Debug, Clone, Copy, Default)]
pub struct Keep {
    pub order: bool,
    pub plan: bool,
}

/// Run one full trial: sample points, build both graphs, construct, verify.
pub fn run_trial(config: &TrialConfig, keep: Keep) -> Result<TrialRecord, ConfigError> {
    let host = Arc::new(config.build_host(derive_seed(config.seed, u64::MAX))?);
    run_trial_with_host(config, host, config.seed, keep)
}

/// As `run_trial`, but with a prebuilt host so sweeps vary only the
/// geometric side.
pub fn run_trial_with_host(
    config: &TrialConfig,
    host: Arc<Graph>,
    seed: u64,
    keep: Keep,
) -> Result<TrialRecord, ConfigError> {
    let params = config.params()?;
    let start = Instant::now();
    let points = sample_points(params.n, params.d, seed).map_err(|e| invalid(e.to_string()))?;
    let g = build_rgg(&points, params.radius, params.norm).map_err(|e| invalid(e.to_string()))?;
    let grid = CellGrid::build(&points, params.cell_side).map_err(|e| invalid(e.to_string()))?;
    let cls = classify_cells(&grid, params.dense_threshold);
    let gamma = build_gamma(&cls, &grid);
    let sparse_cells = cls.sparse_count();
    let components = gamma.components.len();

    let (result, plan) = construct_with_plan(&host, &g, &grid, &params);
    let (outcome, verify_ok, order) = match result {
        Ok(order) => {
            let union = UnionGraph::new(&host, &g);
            let ok = verify_kth_power(&order, &union, params.k)
                .map(|c| c.holds())
                .unwrap_or(false);
            (Outcome::Success, ok, keep.order.then_some(order))
        }
        Err(report) => (
            Outcome::Failure {
                stage: report.stage,
                detail: report.to_string(),
            },
            true, // no order claimed, nothing to violate
            None,
        ),
    };
    Ok(TrialRecord {
        params,
        seed,
        outcome,
        verify_ok,
        sparse_cells,
        components,
        wall_time_ms: start.elapsed().as_millis(),
        order,
        plan: if keep.plan { plan } else { None },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub c: f64,
    pub r: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub mean_sparse_cells: f64,
    pub mean_components: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub trials_per_point: usize,
    /// True iff every success in the sweep verified.
    pub all_verified: bool,
}

/// Success-probability curve over C at fixed n. The host is built once and
/// shared; every trial gets an independent derived seed.
pub fn sweep_c(
    config: &TrialConfig,
    c_values: &[f64],
    trials: usize,
) -> Result<SweepResult, ConfigError> {
    if c_values.is_empty() || trials == 0 {
        return Err(invalid("sweep needs at least one C value and one trial"));
    }
    let host = Arc::new(config.build_host(derive_seed(config.seed, u64::MAX))?);
    let mut points = Vec::with_capacity(c_values.len());
    let mut all_verified = true;
    for (ci, &c) in c_values.iter().enumerate() {
        let point_config = TrialConfig {
            c: Some(c),
            r: None,
            ..config.clone()
        };
        // config errors (degenerate grids for tiny C) count as failed trials
        let records: Vec<Option<TrialRecord>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(config.seed, (ci * trials + t) as u64);
                run_trial_with_host(&point_config, Arc::clone(&host), seed, Keep::default()).ok()
            })
            .collect();
        let total = records.len();
        let done: Vec<&TrialRecord> = records.iter().flatten().collect();
        let successes = done
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::Success))
            .count();
        all_verified &= done.iter().all(|r| r.verify_ok);
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| -> f64 {
            if done.is_empty() {
                0.0
            } else {
                done.iter().map(|&r| f(r)).sum::<f64>() / done.len() as f64
            }
        };
        let r = (c / config.n as f64).powf(1.0 / config.d as f64);
        points.push(SweepPoint {
            c,
            r,
            trials: total,
            successes,
            rate: successes as f64 / total as f64,
            mean_sparse_cells: mean(&|r| r.sparse_cells as f64),
            mean_components: mean(&|r| r.components as f64),
        });
    }
    Ok(SweepResult {
        axis: c_values.to_vec(),
        points,
        trials_per_point: trials,
        all_verified,
    })
}

pub const SWEEP_CSV_HEADER: &str =
    "C,r,n,d,k,alpha,trials,successes,rate,mean_sparse_cells,mean_components";

pub fn sweep_to_csv(result: &SweepResult, config: &TrialConfig) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for p in &result.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            p.c,
            p.r,
            config.n,
            config.d,
            config.k,
            config.alpha,
            p.trials,
            p.successes,
            p.rate,
            p.mean_sparse_cells,
            p.mean_components
        ));
    }
    out
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepPoint>, ConfigError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| invalid("empty CSV"))?;
    if header != SWEEP_CSV_HEADER {
        return Err(invalid(format!("unexpected CSV header: {header}")));
    }
    let mut points = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(invalid(format!("expected 11 columns, got {}", cols.len())));
        }
        let f = |i: usize| -> Result<f64, ConfigError> {
            cols[i]
                .parse()
                .map_err(|_| invalid(format!("bad number '{}'", cols[i])))
        };
        let u = |i: usize| -> Result<usize, ConfigError> {
            cols[i]
                .parse()
                .map_err(|_| invalid(format!("bad integer '{}'", cols[i])))
        };
        points.push(SweepPoint {
            c: f(0)?,
            r: f(1)?,
            trials: u(6)?,
            successes: u(7)?,
            rate: f(8)?,
            mean_sparse_cells: f(9)?,
            mean_components: f(10)?,
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCountStats {
    pub n: usize,
    pub d: usize,
    pub r: f64,
    pub trials: usize,
    pub mean_edges: f64,
    pub std_edges: f64,
    /// `binom(n,2) * theta_d r^d / 2^d`: pessimistic expectation (every pair
    /// near the boundary).
    pub expected_low: f64,
    /// `binom(n,2) * theta_d r^d`: the unclipped expectation.
    pub expected_high: f64,
}

/// Mean edge count of the geometric graph over seeded trials, against the
/// boundary-clipping interval for the expectation.
pub fn edge_count_experiment(
    n: usize,
    d: usize,
    norm: Norm,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<EdgeCountStats, ConfigError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(invalid("r must lie in (0, 1]"));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let counts: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let points = sample_points(n, d, derive_seed(seed, t as u64)).expect("n, d checked");
            let g = build_rgg(&points, r, norm).expect("r checked");
            g.edge_count() as f64
        })
        .collect();
    let (mean, std) = crate::stats::mean_std(&counts);
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    let ball = norm.unit_ball_volume(d) * r.powi(d as i32);
    Ok(EdgeCountStats {
        n,
        d,
        r,
        trials,
        mean_edges: mean,
        std_edges: std,
        expected_low: pairs * ball / 2f64.powi(d as i32),
        expected_high: pairs * ball,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub n: usize,
    pub c_small: f64,
    pub r: f64,
    pub edges: usize,
    pub edges_per_n: f64,
    /// For n ≤ 11 with an empty geometric graph: exhaustive confirmation
    /// that the extremal host alone has no k-th power of a Hamilton cycle.
    pub host_alone_has_power: Option<bool>,
}

/// Build the k-th-power extremal host, sample a sparse geometric graph at
/// radius `(c_small/n)^(1/d)`, and report how little it adds.
pub fn lower_bound_experiment(
    n: usize,
    d: usize,
    k: usize,
    alpha: f64,
    c_small: f64,
    norm: Norm,
    seed: u64,
) -> Result<LowerBoundReport, ConfigError> {
    let host = gen_extremal_power(n, k, alpha).map_err(|e| invalid(e.to_string()))?;
    if !(c_small > 0.0) {
        return Err(invalid("C must be positive"));
    }
    let r = (c_small / n as f64).powf(1.0 / d as f64);
    let points = sample_points(n, d, seed).map_err(|e| invalid(e.to_string()))?;
    let g = build_rgg(&points, r, norm).map_err(|e| invalid(e.to_string()))?;
    let edges = g.edge_count();
    let host_alone_has_power = if n <= 11 && edges == 0 {
        Some(
            crate::verify::brute_force_kth_power_exists(&host.graph, k)
                .map_err(|e| invalid(e.to_string()))?,
        )
    } else {
        None
    };
    Ok(LowerBoundReport {
        n,
        c_small,
        r,
        edges,
        edges_per_n: edges as f64 / n as f64,
        host_alone_has_power,
    })
}
