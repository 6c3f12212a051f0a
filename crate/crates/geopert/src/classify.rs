//! Dense/sparse cell classification, the common-neighborhood k-set finder,
//! and the sampled sparse-cell statistics.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CellGrid, ParamSet};
use crate::graph::Graph;
use crate::stats::binomial_tail_below;

/// Partition of the grid's cells by the occupancy threshold `R`.
#[derive(Debug, Clone)]
pub struct CellClassification {
    pub dense: BTreeSet<usize>,
    pub threshold: usize,
    pub total_cells: u64,
}

impl CellClassification {
    pub fn is_dense(&self, cell: usize) -> bool {
        self.dense.contains(&cell)
    }

    pub fn is_sparse(&self, cell: usize) -> bool {
        !self.is_dense(cell)
    }

    /// Number of sparse cells, empty cells included.
    pub fn sparse_count(&self) -> u64 {
        self.total_cells - self.dense.len() as u64
    }

    pub fn sparse_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.total_cells as usize).filter(move |c| !self.dense.contains(c))
    }
}

/// A `t`-subset of a probe set together with its full common neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonKSet {
    pub t_set: Vec<u32>,
    pub witnesses: Vec<u32>,
    pub fraction: f64,
    pub votes: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("probe set smaller than t ({size} < {t})")]
    ProbeTooSmall { size: usize, t: usize },
    #[error("no subset of the probe set has a common neighbor (best candidate {t_set:?})")]
    NoWitnesses { t_set: Vec<u32> },
}

pub fn classify_cells(grid: &CellGrid, r_threshold: usize) -> CellClassification {
    assert!(r_threshold >= 1, "density threshold must be positive");
    let dense = grid
        .occupied_cells()
        .filter(|(_, vs)| vs.len() >= r_threshold)
        .map(|(c, _)| c)
        .collect();
    CellClassification {
        dense,
        threshold: r_threshold,
        total_cells: grid.total_cells(),
    }
}

/// Does `cell` contain at least `2k` neighbors of `v`?
pub fn is_v_dense(cell: usize, v: u32, h: &Graph, grid: &CellGrid, k: usize) -> bool {
    let members = grid.members(cell);
    let mut count = 0usize;
    for &u in members {
        if u != v && h.has_edge(u, v) {
            count += 1;
            if count >= 2 * k {
                return true;
            }
        }
    }
    false
}

/// Does `cell` contain at least `2k` witnesses of `t`?
pub fn is_s_dense(cell: usize, t: &CommonKSet, grid: &CellGrid, k: usize) -> bool {
    let members = grid.members(cell);
    let mut count = 0usize;
    let mut it = t.witnesses.iter().peekable();
    // Both lists are sorted ascending.
    for &u in members {
        while let Some(&&w) = it.peek() {
            if w < u {
                it.next();
            } else {
                break;
            }
        }
        if it.peek() == Some(&&u) {
            count += 1;
            if count >= 2 * k {
                return true;
            }
        }
    }
    false
}

/// Vote-counting core shared by the single and ranked finders. Every vertex
/// outside `probe` with at least `t` probe-neighbors votes for the `t`
/// smallest of them; candidates come back sorted by votes descending,
/// lexicographic on ties.
fn ranked_candidates(h: &Graph, probe: &[u32], t: usize) -> Vec<(Vec<u32>, usize)> {
    let probe_set: BTreeSet<u32> = probe.iter().copied().collect();
    let mut votes: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for v in 0..h.n() as u32 {
        if probe_set.contains(&v) {
            continue;
        }
        let mut hits: Vec<u32> = h
            .neighbors(v)
            .iter()
            .copied()
            .filter(|u| probe_set.contains(u))
            .collect();
        if hits.len() >= t {
            hits.truncate(t);
            *votes.entry(hits).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(Vec<u32>, usize)> = votes.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

fn with_witnesses(h: &Graph, t_set: Vec<u32>, votes: usize) -> Result<CommonKSet, ClassifyError> {
    let witnesses = h
        .common_neighborhood(&t_set)
        .expect("t_set is nonempty and in range");
    if witnesses.is_empty() {
        return Err(ClassifyError::NoWitnesses { t_set });
    }
    let fraction = witnesses.len() as f64 / h.n() as f64;
    Ok(CommonKSet {
        t_set,
        witnesses,
        fraction,
        votes,
    })
}

/// Find a `t`-subset of `probe` with a large common neighborhood by the
/// double-counting vote. Callers pass the probe set already cut down to its
/// `L` smallest ids.
pub fn find_common_kset(h: &Graph, probe: &[u32], t: usize) -> Result<CommonKSet, ClassifyError> {
    find_common_ksets_ranked(h, probe, t, 1).map(|mut v| v.pop().expect("budget 1 yields one"))
}

/// As `find_common_kset` but returns up to `budget` candidates in rank
/// order, letting the pipeline retry when the best subset's witnesses are
/// badly placed. Errors only if no candidate has a witness at all.
pub fn find_common_ksets_ranked(
    h: &Graph,
    probe: &[u32],
    t: usize,
    budget: usize,
) -> Result<Vec<CommonKSet>, ClassifyError> {
    if probe.len() < t {
        return Err(ClassifyError::ProbeTooSmall {
            size: probe.len(),
            t,
        });
    }
    let mut sorted = probe.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let ranked = ranked_candidates(h, &sorted, t);
    let mut out = Vec::new();
    let mut last_err = ClassifyError::NoWitnesses {
        t_set: sorted.iter().copied().take(t).collect(),
    };
    for (t_set, votes) in ranked.into_iter().take(budget) {
        match with_witnesses(h, t_set, votes) {
            Ok(ks) => out.push(ks),
            Err(e) => last_err = e,
        }
    }
    if out.is_empty() {
        Err(last_err)
    } else {
        Ok(out)
    }
}

/// Sampled statistics mirroring the three sparse-cell counts, each paired
/// with its theoretical bound for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseStats {
    pub sparse_count: u64,
    pub paper_bound_i: f64,
    pub v_sparse_max: usize,
    pub paper_bound_ii: f64,
    pub s_sparse_max: usize,
    pub paper_bound_iii: f64,
    pub n: usize,
    #[serde(rename = "K")]
    pub k_occupancy: f64,
    #[serde(rename = "R")]
    pub r_threshold: usize,
    #[serde(rename = "L")]
    pub probe_size: usize,
    pub gamma: f64,
}

/// Exact expected sparse-cell count under uniform placement: an oracle that
/// the empirical count is tested against.
pub fn expected_sparse_cells(grid: &CellGrid, params: &ParamSet) -> f64 {
    let p = params.cell_side.powi(params.d as i32);
    grid.total_cells() as f64
        * binomial_tail_below(params.n as u64, p, params.dense_threshold as u64)
}

pub fn sparse_stats(
    h: &Graph,
    grid: &CellGrid,
    params: &ParamSet,
    sample_vertices: usize,
    sample_sets: usize,
    rng_seed: u64,
) -> SparseStats {
    assert!(sample_vertices >= 1 && sample_sets >= 1);
    let n = params.n;
    let k = params.k;
    let cls = classify_cells(grid, params.dense_threshold);
    let nf = n as f64;
    let kf = params.mean_occupancy;

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut v_sparse_max = 0usize;
    for _ in 0..sample_vertices {
        let v = rng.gen_range(0..n as u32);
        let count = (0..grid.total_cells() as usize)
            .filter(|&c| !is_v_dense(c, v, h, grid, k))
            .count();
        v_sparse_max = v_sparse_max.max(count);
    }

    let mut ids: Vec<u32> = (0..n as u32).collect();
    let mut s_sparse_max = 0usize;
    for _ in 0..sample_sets {
        ids.shuffle(&mut rng);
        let mut probe: Vec<u32> = ids[..params.probe_size.min(n)].to_vec();
        probe.sort_unstable();
        let count = match find_common_kset(h, &probe, 2 * k) {
            Ok(ks) => (0..grid.total_cells() as usize)
                .filter(|&c| !is_s_dense(c, &ks, grid, k))
                .count(),
            Err(_) => grid.total_cells() as usize,
        };
        s_sparse_max = s_sparse_max.max(count);
    }

    SparseStats {
        sparse_count: cls.sparse_count(),
        paper_bound_i: (-kf / 2.0).exp() * nf,
        v_sparse_max,
        paper_bound_ii: (-params.alpha * kf / 2.0).exp() * nf,
        s_sparse_max,
        paper_bound_iii: (-params.witness_fraction * kf / 2.0).exp() * nf,
        n,
        k_occupancy: kf,
        r_threshold: params.dense_threshold,
        probe_size: params.probe_size,
        gamma: params.witness_fraction,
    }
}
