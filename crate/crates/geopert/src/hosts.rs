//! Host-graph generators: random graphs of prescribed minimum degree, the two
//! extremal multipartite constructions, and exact coloring parameters of small
//! pattern graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

/// A small named pattern graph (the `F` of factors and tilings).
#[derive(Debug, Clone)]
pub struct PatternGraph {
    pub name: String,
    pub graph: Graph,
}

impl PatternGraph {
    pub fn new(name: impl Into<String>, graph: Graph) -> Result<Self, HostError> {
        if graph.n() == 0 {
            return Err(HostError::BadPattern("empty vertex set".into()));
        }
        Ok(PatternGraph {
            name: name.into(),
            graph,
        })
    }

    /// Built-in patterns addressable by name.
    pub fn by_name(name: &str) -> Option<Self> {
        let (n, edges): (usize, Vec<(u32, u32)>) = match name {
            "K2" => (2, vec![(0, 1)]),
            "K3" | "triangle" => (3, vec![(0, 1), (0, 2), (1, 2)]),
            "K4" => (
                4,
                vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            ),
            "C4" => (4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]),
            "C5" => (5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
            "P3" => (3, vec![(0, 1), (1, 2)]),
            _ => return None,
        };
        Some(PatternGraph {
            name: name.to_string(),
            graph: Graph::from_edges(n, &edges).expect("builtin patterns are valid"),
        })
    }
}

/// Exact chromatic parameters of a pattern graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChromaticData {
    pub chi: usize,
    /// Smallest color-class size over all proper `chi`-colorings.
    pub sigma: usize,
    /// `(chi - 1) |V| / (|V| - sigma)`.
    pub chi_cr: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum HostError {
    #[error("invalid pattern graph: {0}")]
    BadPattern(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("graph error: {0}")]
    Graph(String),
}

fn is_colorable(g: &Graph, q: usize, order: &[u32]) -> bool {
    fn rec(g: &Graph, q: usize, order: &[u32], colors: &mut [usize], idx: usize) -> bool {
        if idx == order.len() {
            return true;
        }
        let v = order[idx];
        let used = colors[..idx].iter().copied().max().map_or(0, |m| m + 1);
        for c in 0..q.min(used + 1) {
            if order[..idx]
                .iter()
                .enumerate()
                .all(|(j, &u)| colors[j] != c || !g.has_edge(u, v))
            {
                colors[idx] = c;
                if rec(g, q, order, colors, idx + 1) {
                    return true;
                }
            }
        }
        false
    }
    let mut colors = vec![usize::MAX; order.len()];
    rec(g, q, order, &mut colors, 0)
}

/// Exact chromatic number by iterative deepening over the color budget,
/// with vertices tried in decreasing degree order.
pub fn chromatic_number(g: &Graph) -> usize {
    let n = g.n();
    if n == 0 {
        return 0;
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
    for q in 1..=n {
        if is_colorable(g, q, &order) {
            return q;
        }
    }
    n
}

/// Exact `(chi, sigma, chi_cr)` for a pattern with at most 12 vertices.
///
/// `sigma` is found by enumerating every proper coloring with exactly `chi`
/// colors in restricted-growth form (class sizes are invariant under color
/// permutation, so this loses nothing).
pub fn chromatic_data(pattern: &PatternGraph) -> Result<ChromaticData, HostError> {
    let g = &pattern.graph;
    let n = g.n();
    if n > 12 {
        return Err(HostError::BadPattern(format!(
            "exhaustive coloring search limited to 12 vertices, got {n}"
        )));
    }
    let chi = chromatic_number(g);
    if chi < 2 {
        return Err(HostError::BadPattern(
            "pattern has no edges, critical chromatic number undefined".into(),
        ));
    }
    let mut best_sigma = usize::MAX;
    let mut colors = vec![0usize; n];
    fn rec(
        g: &Graph,
        chi: usize,
        colors: &mut [usize],
        idx: usize,
        used: usize,
        best: &mut usize,
    ) {
        let n = g.n();
        if idx == n {
            if used == chi {
                let mut sizes = vec![0usize; chi];
                for &c in colors.iter() {
                    sizes[c] += 1;
                }
                let min = *sizes.iter().min().expect("chi >= 1");
                if min < *best {
                    *best = min;
                }
            }
            return;
        }
        // Remaining vertices must be able to bring the color count up to chi.
        if used + (n - idx) < chi {
            return;
        }
        let v = idx as u32;
        for c in 0..(used + 1).min(chi) {
            if (0..idx).all(|j| colors[j] != c || !g.has_edge(j as u32, v)) {
                colors[idx] = c;
                rec(g, chi, colors, idx + 1, used.max(c + 1), best);
            }
        }
    }
    rec(g, chi, &mut colors, 0, 0, &mut best_sigma);
    debug_assert!(best_sigma <= n / chi.max(1) + 1);
    let chi_cr = (chi - 1) as f64 * n as f64 / (n - best_sigma) as f64;
    Ok(ChromaticData {
        chi,
        sigma: best_sigma,
        chi_cr,
    })
}

/// A complete multipartite graph together with its part structure.
#[derive(Debug, Clone)]
pub struct MultipartiteHost {
    pub graph: Graph,
    /// Parts as vertex-id lists; consecutive id ranges.
    pub parts: Vec<Vec<u32>>,
    /// Index into `parts` of the distinguished small part `B` (possibly empty).
    pub b_part: usize,
}

fn complete_multipartite(sizes: &[usize]) -> MultipartiteHost {
    let n: usize = sizes.iter().sum();
    let mut parts = Vec::with_capacity(sizes.len());
    let mut next = 0u32;
    for &s in sizes {
        parts.push((next..next + s as u32).collect::<Vec<u32>>());
        next += s as u32;
    }
    let mut edges = Vec::new();
    for (i, pa) in parts.iter().enumerate() {
        for pb in parts.iter().skip(i + 1) {
            for &u in pa {
                for &v in pb {
                    edges.push((u, v));
                }
            }
        }
    }
    MultipartiteHost {
        graph: Graph::from_edges(n, &edges).expect("multipartite edges are valid"),
        parts,
        b_part: sizes.len() - 1,
    }
}

/// Split `total` into `parts` sizes differing by at most one, largest first.
fn even_split(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts)
        .map(|i| base + usize::from(i < extra))
        .collect()
}

/// Random graph with minimum degree at least `ceil(alpha n)`: a binomial
/// graph at edge probability `alpha + 10/sqrt(n)` followed by greedy repair
/// of low-degree vertices. Deterministic given the seed.
pub fn gen_min_degree_random(n: usize, alpha: f64, seed: u64) -> Result<Graph, HostError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HostError::OutOfRange("alpha must lie in (0,1)".into()));
    }
    let target = (alpha * n as f64).ceil() as usize;
    if target > n.saturating_sub(1) {
        return Err(HostError::OutOfRange(format!(
            "minimum degree {target} unreachable on {n} vertices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (alpha + 10.0 / (n as f64).sqrt()).min(1.0);
    let wpr = n.div_ceil(64);
    let mut bits = vec![0u64; wpr * n];
    let mut degree = vec![0usize; n];
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let add = |bits: &mut Vec<u64>, degree: &mut Vec<usize>, edges: &mut Vec<(u32, u32)>, u: usize, v: usize| {
        bits[u * wpr + v / 64] |= 1 << (v % 64);
        bits[v * wpr + u / 64] |= 1 << (u % 64);
        degree[u] += 1;
        degree[v] += 1;
        edges.push((u as u32, v as u32));
    };
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < p {
                add(&mut bits, &mut degree, &mut edges, u, v);
            }
        }
    }
    for v in 0..n {
        while degree[v] < target {
            let u = rng.gen_range(0..n);
            if u != v && bits[v * wpr + u / 64] >> (u % 64) & 1 == 0 {
                add(&mut bits, &mut degree, &mut edges, v, u);
            }
        }
    }
    Graph::from_edges(n, &edges).map_err(|e| HostError::Graph(e.to_string()))
}

/// The extremal host for k-th powers: the complete (k+1)-partite graph with
/// a deliberately small part `B` of size `max{0, (alpha-1)k + 1} n` and `k`
/// equal parts. Contains no k-th power of a Hamilton cycle.
pub fn gen_extremal_power(n: usize, k: usize, alpha: f64) -> Result<MultipartiteHost, HostError> {
    if k < 1 {
        return Err(HostError::OutOfRange("k must be >= 1".into()));
    }
    let upper = k as f64 / (k + 1) as f64;
    if !(alpha > 0.0 && alpha < upper) {
        return Err(HostError::OutOfRange(format!(
            "alpha must lie in (0, {upper}), got {alpha}"
        )));
    }
    let b = (((alpha - 1.0) * k as f64 + 1.0).max(0.0) * n as f64).round() as usize;
    if b >= n {
        return Err(HostError::OutOfRange("part B swallows every vertex".into()));
    }
    let mut sizes = even_split(n - b, k);
    sizes.push(b);
    Ok(complete_multipartite(&sizes))
}

/// The extremal host for F-factors: the complete chi(F)-partite graph with
/// `B` of size `beta n` where `beta = 1 - (chi-1) min{1/(chi-1), 1-alpha}`.
/// Its largest F-tiling leaves a constant fraction of vertices uncovered.
pub fn gen_extremal_factor(
    n: usize,
    pattern: &PatternGraph,
    alpha: f64,
) -> Result<MultipartiteHost, HostError> {
    let data = chromatic_data(pattern)?;
    let k = data.chi;
    let upper = 1.0 - 1.0 / data.chi_cr;
    if !(alpha > 0.0 && alpha < upper) {
        return Err(HostError::OutOfRange(format!(
            "alpha must lie in (0, {upper}) for {}, got {alpha}",
            pattern.name
        )));
    }
    let gamma = (1.0 / (k - 1) as f64).min(1.0 - alpha);
    let beta = 1.0 - (k - 1) as f64 * gamma;
    let b = (beta * n as f64).round() as usize;
    if b >= n {
        return Err(HostError::OutOfRange("part B swallows every vertex".into()));
    }
    let mut sizes = even_split(n - b, k - 1);
    sizes.push(b);
    Ok(complete_multipartite(&sizes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_degree_random_meets_target() {
        let g = gen_min_degree_random(100, 0.3, 1).unwrap();
        assert!(g.min_degree() >= 30);
        let again = gen_min_degree_random(100, 0.3, 1).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn min_degree_random_rejects_unreachable_target() {
        assert!(gen_min_degree_random(10, 0.99, 1).is_err());
    }

    #[test]
    fn extremal_power_part_shapes() {
        let h = gen_extremal_power(12, 2, 0.5).unwrap();
        let sizes: Vec<usize> = h.parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![6, 6, 0]);
        assert_eq!(h.graph.min_degree(), 6);

        let h = gen_extremal_power(10, 2, 0.6).unwrap();
        let sizes: Vec<usize> = h.parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        assert_eq!(h.graph.min_degree(), 6);

        assert!(gen_extremal_power(10, 2, 0.7).is_err());
    }

    #[test]
    fn extremal_power_is_complete_multipartite() {
        // Non-adjacency must be an equivalence relation (same-part).
        let h = gen_extremal_power(13, 3, 0.5).unwrap();
        let part_of = |v: u32| h.parts.iter().position(|p| p.contains(&v)).unwrap();
        for u in 0..13u32 {
            for v in (u + 1)..13 {
                assert_eq!(h.graph.has_edge(u, v), part_of(u) != part_of(v));
            }
        }
        let total: usize = h.parts.iter().map(Vec::len).sum();
        assert_eq!(total, 13);
    }

    #[test]
    fn extremal_factor_shapes() {
        let k3 = PatternGraph::by_name("K3").unwrap();
        let h = gen_extremal_factor(12, &k3, 0.5).unwrap();
        let sizes: Vec<usize> = h.parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![6, 6, 0]);

        let h = gen_extremal_factor(20, &k3, 0.6).unwrap();
        let sizes: Vec<usize> = h.parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![8, 8, 4]);

        let k2 = PatternGraph::by_name("K2").unwrap();
        assert!(gen_extremal_factor(6, &k2, 0.6).is_err());
    }

    #[test]
    fn chromatic_data_examples() {
        let k3 = PatternGraph::by_name("K3").unwrap();
        assert_eq!(
            chromatic_data(&k3).unwrap(),
            ChromaticData { chi: 3, sigma: 1, chi_cr: 3.0 }
        );
        let p3 = PatternGraph::by_name("P3").unwrap();
        assert_eq!(
            chromatic_data(&p3).unwrap(),
            ChromaticData { chi: 2, sigma: 1, chi_cr: 1.5 }
        );
        let c5 = PatternGraph::by_name("C5").unwrap();
        assert_eq!(
            chromatic_data(&c5).unwrap(),
            ChromaticData { chi: 3, sigma: 1, chi_cr: 2.5 }
        );
    }

    /// Oracle: enumerate all proper 2-colorings of P3 directly.
    #[test]
    fn p3_sigma_by_exhaustive_oracle() {
        let p3 = PatternGraph::by_name("P3").unwrap();
        let g = &p3.graph;
        let mut min_class = usize::MAX;
        for assignment in 0..(1u32 << 3) {
            let color = |v: u32| assignment >> v & 1;
            let proper = (0..3u32).all(|u| {
                (u + 1..3).all(|v| !g.has_edge(u, v) || color(u) != color(v))
            });
            if proper {
                let ones = (0..3u32).filter(|&v| color(v) == 1).count();
                if ones > 0 && ones < 3 {
                    min_class = min_class.min(ones.min(3 - ones));
                }
            }
        }
        assert_eq!(min_class, chromatic_data(&p3).unwrap().sigma);
    }

    #[test]
    fn cliques_have_chi_cr_equal_chi() {
        for r in 2..=6usize {
            let g = Graph::complete(r);
            let p = PatternGraph::new(format!("K{r}"), g).unwrap();
            let data = chromatic_data(&p).unwrap();
            assert_eq!((data.chi, data.sigma), (r, 1));
            assert!((data.chi_cr - r as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_cr_bounded_by_chi_on_small_connected_graphs() {
        // Every connected graph on 5 vertices with at least one edge.
        let pairs: Vec<(u32, u32)> = (0..5u32)
            .flat_map(|u| ((u + 1)..5).map(move |v| (u, v)))
            .collect();
        for mask in 1u32..(1 << pairs.len()) {
            let edges: Vec<(u32, u32)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let g = Graph::from_edges(5, &edges).unwrap();
            // connectivity check
            let mut seen = vec![false; 5];
            let mut stack = vec![0u32];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for &v in g.neighbors(u) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        stack.push(v);
                    }
                }
            }
            if !seen.iter().all(|&s| s) {
                continue;
            }
            let p = PatternGraph::new("mask", g).unwrap();
            let data = chromatic_data(&p).unwrap();
            assert!(data.chi_cr <= data.chi as f64 + 1e-12);
            let balanced = data.sigma as f64 == 5.0 / data.chi as f64;
            assert_eq!((data.chi_cr - data.chi as f64).abs() < 1e-12, balanced);
        }
    }
}
