//! Certificate checking for k-th powers of Hamilton cycles, a brute-force
//! existence oracle for tiny graphs, and the two corollary extractions
//! (F-factors and bandwidth embeddings).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::CyclicOrder;
use crate::graph::Adjacency;
use crate::hosts::{chromatic_data, MultipartiteHost, PatternGraph};

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("order is not a permutation of 0..{expected}")]
    NotPermutation { expected: usize },
    #[error("{0}")]
    Precondition(String),
}

/// Outcome of a k-th power check: either every cyclic pair at distance ≤ k
/// is an edge, or the first violating (position, offset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KPowerCheck {
    Holds,
    Violation { position: usize, offset: usize },
}

impl KPowerCheck {
    pub fn holds(&self) -> bool {
        matches!(self, KPowerCheck::Holds)
    }
}

/// Check that `order`, read cyclically, is the k-th power of a Hamilton
/// cycle in `graph`: every vertex must be adjacent to the next k.
///
/// Offsets that wrap all the way around (j ≡ 0 mod n, possible when n ≤ k)
/// pair a vertex with itself and are skipped.
pub fn verify_kth_power<A: Adjacency>(
    order: &CyclicOrder,
    graph: &A,
    k: usize,
) -> Result<KPowerCheck, VerifyError> {
    let n = graph.order();
    if !order.is_permutation_of(n) {
        return Err(VerifyError::NotPermutation { expected: n });
    }
    let ord = &order.order;
    for i in 0..n {
        for j in 1..=k {
            if j % n == 0 {
                continue;
            }
            let u = ord[i];
            let v = ord[(i + j) % n];
            if !graph.has_edge(u, v) {
                return Ok(KPowerCheck::Violation {
                    position: i,
                    offset: j,
                });
            }
        }
    }
    Ok(KPowerCheck::Holds)
}

/// Exhaustive search for a k-th power of a Hamilton cycle on at most 11
/// vertices. Fixes vertex 0 first and only explores orders whose second
/// element is smaller than their last (killing the reflection), then extends
/// position by position, checking each new vertex against its k predecessors.
pub fn brute_force_kth_power_exists<A: Adjacency>(
    graph: &A,
    k: usize,
) -> Result<bool, VerifyError> {
    let n = graph.order();
    if n > 11 {
        return Err(VerifyError::Precondition(format!(
            "exhaustive search limited to 11 vertices, got {n}"
        )));
    }
    if n == 0 {
        return Err(VerifyError::Precondition("empty graph".into()));
    }
    if n <= 2 {
        // A single vertex or pair is trivially a cycle order; only edges
        // matter when n = 2 and k >= 1.
        return Ok(n == 1 || graph.has_edge(0, 1) || k == 0);
    }
    fn extend<A: Adjacency>(graph: &A, k: usize, order: &mut Vec<u32>, used: &mut [bool]) -> bool {
        let n = graph.order();
        let pos = order.len();
        if pos == n {
            // close the cycle: check wrap-around offsets
            for i in 0..n {
                for j in 1..=k.min(n - 1) {
                    let t = (i + j) % n;
                    if t < i + j && !graph.has_edge(order[i], order[t]) {
                        return false;
                    }
                }
            }
            return true;
        }
        for v in 1..n as u32 {
            if used[v as usize] {
                continue;
            }
            // reflection halving: order[1] < order[n-1]
            if pos == n - 1 && v < order[1] {
                continue;
            }
            let ok = (1..=k.min(pos)).all(|j| graph.has_edge(order[pos - j], v));
            if ok {
                used[v as usize] = true;
                order.push(v);
                if extend(graph, k, order, used) {
                    return true;
                }
                order.pop();
                used[v as usize] = false;
            }
        }
        false
    }
    let mut order = vec![0u32];
    let mut used = vec![false; n];
    used[0] = true;
    Ok(extend(graph, k, &mut order, &mut used))
}

/// Cut a verified order into consecutive blocks of |V(F)| vertices; each
/// block spans a clique when k ≥ |V(F)| − 1, hence contains F. Every copy is
/// re-checked edge by edge against the graph.
pub fn extract_f_factor<A: Adjacency>(
    order: &CyclicOrder,
    pattern: &PatternGraph,
    k: usize,
    graph: &A,
) -> Result<Vec<Vec<u32>>, VerifyError> {
    let n = graph.order();
    let f = pattern.graph.n();
    if n % f != 0 {
        return Err(VerifyError::Precondition(format!(
            "|V(F)| = {f} does not divide n = {n}"
        )));
    }
    if k + 1 < f {
        return Err(VerifyError::Precondition(format!(
            "k = {k} too small: consecutive blocks of {f} span a clique only for k >= {}",
            f - 1
        )));
    }
    if !order.is_permutation_of(n) {
        return Err(VerifyError::NotPermutation { expected: n });
    }
    let mut copies = Vec::with_capacity(n / f);
    for block in order.order.chunks(f) {
        // identity mapping: pattern vertex i -> block[i]
        for u in 0..f as u32 {
            for &v in pattern.graph.neighbors(u) {
                if v > u && !graph.has_edge(block[u as usize], block[v as usize]) {
                    return Err(VerifyError::Precondition(format!(
                        "block {block:?} misses edge for pattern pair ({u},{v})"
                    )));
                }
            }
        }
        copies.push(block.to_vec());
    }
    Ok(copies)
}

/// Embed a target graph with a known bandwidth-k labelling into a verified
/// order: label i lands on order position i. Returns the position map.
///
/// The labelling is the target's own vertex numbering; an edge with
/// |i − j| > k is rejected.
pub fn embed_bandwidth<A: Adjacency>(
    order: &CyclicOrder,
    target: &crate::graph::Graph,
    k: usize,
    graph: &A,
) -> Result<Vec<u32>, VerifyError> {
    let n = graph.order();
    if target.n() != n {
        return Err(VerifyError::Precondition(format!(
            "target has {} vertices, union graph has {n}",
            target.n()
        )));
    }
    if !order.is_permutation_of(n) {
        return Err(VerifyError::NotPermutation { expected: n });
    }
    for u in 0..n as u32 {
        for &v in target.neighbors(u) {
            if v > u && (v - u) as usize > k {
                return Err(VerifyError::Precondition(format!(
                    "target edge ({u},{v}) violates the bandwidth-{k} labelling"
                )));
            }
        }
    }
    // label i -> vertex at order position i; every target edge is at cyclic
    // distance <= k, so it is covered by the verified k-th power.
    for u in 0..n as u32 {
        for &v in target.neighbors(u) {
            if v > u && !graph.has_edge(order.order[u as usize], order.order[v as usize]) {
                return Err(VerifyError::Precondition(format!(
                    "embedding misses edge for target pair ({u},{v})"
                )));
            }
        }
    }
    Ok(order.order.clone())
}

/// A cycle on `len` vertices labelled with bandwidth 2: the zigzag order
/// 0-2-4-…-5-3-1-0 realized as edges on consecutive-or-next labels.
pub fn zigzag_cycle(offset: u32, len: usize) -> Vec<(u32, u32)> {
    assert!(len >= 3);
    let mut edges = Vec::with_capacity(len);
    // labels 0..len traverse the cycle as 0,1,3,5,...,4,2,0: consecutive
    // cycle vertices differ by at most 2 in label.
    let seq: Vec<u32> = {
        let mut fwd: Vec<u32> = (0..len as u32).filter(|x| x % 2 == 1).collect();
        let mut bwd: Vec<u32> = (0..len as u32).filter(|x| x % 2 == 0).rev().collect();
        let mut s = vec![0u32];
        s.append(&mut fwd);
        s.append(&mut bwd);
        s.pop(); // the trailing 0 duplicates the head
        s
    };
    for i in 0..seq.len() {
        let a = seq[i] + offset;
        let b = seq[(i + 1) % seq.len()] + offset;
        edges.push((a.min(b), a.max(b)));
    }
    edges
}

/// Upper bound on the size of any F-tiling of an extremal host: each copy
/// needs at least sigma vertices in the small part B, so at most |B|/sigma
/// copies fit. For tiny instances the exact maximum tiling is computed and
/// checked against the bound.
pub fn max_tiling_upper_bound(
    host: &MultipartiteHost,
    pattern: &PatternGraph,
) -> Result<usize, VerifyError> {
    let data = chromatic_data(pattern).map_err(|e| VerifyError::Precondition(e.to_string()))?;
    if host.parts.len() != data.chi {
        return Err(VerifyError::Precondition(format!(
            "host has {} parts but chi(F) = {}",
            host.parts.len(),
            data.chi
        )));
    }
    let b = host.parts[host.b_part].len();
    if data.chi == 2 && b == 0 {
        return Err(VerifyError::Precondition(
            "empty part B with bipartite F: the part-counting bound is vacuous".into(),
        ));
    }
    let bound = b / data.sigma;
    let n = host.graph.n();
    let f = pattern.graph.n();
    if f <= 8 && n <= 24 {
        let exact = exact_max_tiling(&host.graph, &pattern.graph);
        assert!(
            exact <= bound,
            "exact tiling {exact} exceeds part-counting bound {bound}"
        );
    }
    Ok(bound)
}

/// Exact maximum number of vertex-disjoint copies of `f` in `g` by
/// branch-and-bound over the smallest uncovered vertex.
fn exact_max_tiling(g: &crate::graph::Graph, f: &crate::graph::Graph) -> usize {
    fn copies_through(
        g: &crate::graph::Graph,
        f: &crate::graph::Graph,
        v: u32,
        free: &[bool],
    ) -> Vec<Vec<u32>> {
        // all injective maps of V(F) into free vertices that (a) use v and
        // (b) send every F-edge to a G-edge
        let nf = f.n();
        let mut out = Vec::new();
        let mut image = vec![u32::MAX; nf];
        fn rec(
            g: &crate::graph::Graph,
            f: &crate::graph::Graph,
            v: u32,
            free: &[bool],
            image: &mut [u32],
            idx: usize,
            out: &mut Vec<Vec<u32>>,
        ) {
            let nf = image.len();
            if idx == nf {
                if image.contains(&v) {
                    let mut copy = image.to_vec();
                    copy.sort_unstable();
                    if !out.contains(&copy) {
                        out.push(copy);
                    }
                }
                return;
            }
            for cand in 0..g.n() as u32 {
                if !free[cand as usize] || image[..idx].contains(&cand) {
                    continue;
                }
                // v must appear; prune once impossible
                if !image[..idx].contains(&v) && cand != v && nf - idx == 1 {
                    continue;
                }
                let ok = (0..idx).all(|j| {
                    !f.has_edge(j as u32, idx as u32) || g.has_edge(image[j], cand)
                });
                if ok {
                    image[idx] = cand;
                    rec(g, f, v, free, image, idx + 1, out);
                }
            }
        }
        rec(g, f, v, free, &mut image, 0, &mut out);
        out
    }
    fn best(g: &crate::graph::Graph, f: &crate::graph::Graph, free: &mut Vec<bool>) -> usize {
        let v = match free.iter().position(|&x| x) {
            Some(v) => v as u32,
            None => return 0,
        };
        // Either v is uncovered...
        free[v as usize] = false;
        let mut result = best(g, f, free);
        free[v as usize] = true;
        // ...or it belongs to some copy.
        for copy in copies_through(g, f, v, free) {
            for &u in &copy {
                free[u as usize] = false;
            }
            result = result.max(1 + best(g, f, free));
            for &u in &copy {
                free[u as usize] = true;
            }
        }
        result
    }
    let mut free = vec![true; g.n()];
    best(g, f, &mut free)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, UnionGraph};
    use crate::hosts::{gen_extremal_factor, gen_extremal_power};

    fn cycle(n: usize) -> Graph {
        let edges: Vec<(u32, u32)> = (0..n as u32)
            .map(|i| (i.min((i + 1) % n as u32), i.max((i + 1) % n as u32)))
            .collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    fn order(v: Vec<u32>) -> CyclicOrder {
        CyclicOrder { order: v }
    }

    #[test]
    fn kth_power_basics() {
        let k5 = Graph::complete(5);
        let o = order(vec![0, 1, 2, 3, 4]);
        assert!(verify_kth_power(&o, &k5, 2).unwrap().holds());

        let c5 = cycle(5);
        assert!(verify_kth_power(&o, &c5, 1).unwrap().holds());
        assert_eq!(
            verify_kth_power(&o, &c5, 2).unwrap(),
            KPowerCheck::Violation {
                position: 0,
                offset: 2
            }
        );
    }

    #[test]
    fn wraparound_when_n_at_most_k() {
        let k3 = Graph::complete(3);
        let o = order(vec![0, 1, 2]);
        assert!(verify_kth_power(&o, &k3, 5).unwrap().holds());
        let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(!verify_kth_power(&o, &p3, 5).unwrap().holds());
    }

    #[test]
    fn rejects_non_permutation() {
        let k4 = Graph::complete(4);
        assert!(verify_kth_power(&order(vec![0, 1, 2, 2]), &k4, 1).is_err());
        assert!(verify_kth_power(&order(vec![0, 1, 2]), &k4, 1).is_err());
    }

    #[test]
    fn monotone_in_k() {
        let g = Graph::from_edges(
            6,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (0, 5),
                (0, 2),
                (1, 3),
                (2, 4),
                (3, 5),
                (0, 4),
                (1, 5),
            ],
        )
        .unwrap();
        let o = order(vec![0, 1, 2, 3, 4, 5]);
        assert!(verify_kth_power(&o, &g, 2).unwrap().holds());
        assert!(verify_kth_power(&o, &g, 1).unwrap().holds());
    }

    #[test]
    fn rotations_and_reflection_pass() {
        let g = Graph::complete(7);
        let base: Vec<u32> = (0..7).collect();
        for rot in 0..7usize {
            let mut o: Vec<u32> = base[rot..].to_vec();
            o.extend_from_slice(&base[..rot]);
            assert!(verify_kth_power(&order(o.clone()), &g, 3).unwrap().holds());
            o.reverse();
            assert!(verify_kth_power(&order(o), &g, 3).unwrap().holds());
        }
    }

    #[test]
    fn brute_force_on_cycles() {
        let c5 = cycle(5);
        assert!(brute_force_kth_power_exists(&c5, 1).unwrap());
        assert!(!brute_force_kth_power_exists(&c5, 2).unwrap());
        assert!(brute_force_kth_power_exists(&Graph::complete(7), 3).unwrap());
        assert!(brute_force_kth_power_exists(&Graph::complete(12), 2).is_err());
    }

    /// Independent oracle for C5, k=2: enumerate all 12 distinct cyclic
    /// orders of 5 elements directly.
    #[test]
    fn c5_square_by_full_enumeration() {
        let c5 = cycle(5);
        let mut found = false;
        let mut perm = vec![1u32, 2, 3, 4];
        // Heap's algorithm over the 4 free positions
        fn heaps(p: &mut Vec<u32>, k: usize, out: &mut Vec<Vec<u32>>) {
            if k == 1 {
                out.push(p.clone());
                return;
            }
            for i in 0..k {
                heaps(p, k - 1, out);
                if k % 2 == 0 {
                    p.swap(i, k - 1);
                } else {
                    p.swap(0, k - 1);
                }
            }
        }
        let mut perms = Vec::new();
        heaps(&mut perm, 4, &mut perms);
        for p in perms {
            let mut o = vec![0u32];
            o.extend(p);
            if verify_kth_power(&order(o), &c5, 2).unwrap().holds() {
                found = true;
            }
        }
        assert!(!found);
        assert_eq!(found, brute_force_kth_power_exists(&c5, 2).unwrap());
    }

    /// The extremal host really contains no square of a Hamilton cycle.
    #[test]
    fn extremal_power_host_has_no_square() {
        let host = gen_extremal_power(9, 2, 0.6).unwrap();
        assert!(!brute_force_kth_power_exists(&host.graph, 2).unwrap());
        // sanity: it does have a plain Hamilton cycle
        assert!(brute_force_kth_power_exists(&host.graph, 1).unwrap());
    }

    #[test]
    fn f_factor_extraction() {
        let g = Graph::complete(12);
        let empty = Graph::empty(12);
        let u = UnionGraph::new(&g, &empty);
        let o = order((0..12).collect());
        let k3 = PatternGraph::by_name("K3").unwrap();
        let copies = extract_f_factor(&o, &k3, 2, &u).unwrap();
        assert_eq!(copies.len(), 4);
        let mut all: Vec<u32> = copies.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..12).collect::<Vec<u32>>());

        // divisibility failure
        let g10 = Graph::complete(10);
        let e10 = Graph::empty(10);
        let u10 = UnionGraph::new(&g10, &e10);
        assert!(extract_f_factor(&order((0..10).collect()), &k3, 2, &u10).is_err());

        // C4 inside blocks of K4 when k = 3
        let c4 = PatternGraph::by_name("C4").unwrap();
        let copies = extract_f_factor(&o, &c4, 3, &u).unwrap();
        assert_eq!(copies.len(), 3);

        // k too small
        assert!(extract_f_factor(&o, &c4, 2, &u).is_err());
    }

    #[test]
    fn bandwidth_embedding() {
        let g = Graph::complete(8);
        let e = Graph::empty(8);
        let u = UnionGraph::new(&g, &e);
        let o = order((0..8).collect());
        // path 0-1-...-7 has bandwidth 1
        let path = Graph::from_edges(8, &(0..7u32).map(|i| (i, i + 1)).collect::<Vec<_>>())
            .unwrap();
        assert!(embed_bandwidth(&o, &path, 1, &u).is_ok());

        // an edge at label distance 2 fails for k = 1
        let bad = Graph::from_edges(8, &[(0, 2)]).unwrap();
        assert!(embed_bandwidth(&o, &bad, 1, &u).is_err());
    }

    #[test]
    fn two_cycles_embed_in_a_square() {
        // disjoint 6-cycles, each with the zigzag bandwidth-2 labelling
        let mut edges = zigzag_cycle(0, 6);
        edges.extend(zigzag_cycle(6, 6));
        let target = Graph::from_edges(12, &edges).unwrap();
        // every edge respects |i-j| <= 2
        for u in 0..12u32 {
            for &v in target.neighbors(u) {
                assert!(v.abs_diff(u) <= 2);
            }
        }
        let g = Graph::complete(12);
        let e = Graph::empty(12);
        let u = UnionGraph::new(&g, &e);
        let o = order((0..12).collect());
        assert!(verify_kth_power(&o, &u, 2).unwrap().holds());
        let map = embed_bandwidth(&o, &target, 2, &u).unwrap();
        // oracle: check every target edge lands on a union-graph edge
        for a in 0..12u32 {
            for &b in target.neighbors(a) {
                if b > a {
                    assert!(u.has_edge(map[a as usize], map[b as usize]));
                }
            }
        }
    }

    #[test]
    fn zigzag_really_is_a_cycle() {
        for len in [3usize, 4, 5, 6, 9] {
            let edges = zigzag_cycle(0, len);
            let g = Graph::from_edges(len, &edges).unwrap();
            assert_eq!(g.edge_count(), len);
            assert!((0..len as u32).all(|v| g.degree(v) == 2));
            assert!(brute_force_kth_power_exists(&g, 1).unwrap());
        }
    }

    #[test]
    fn tiling_bound_matches_part_count() {
        let k3 = PatternGraph::by_name("K3").unwrap();
        let host = gen_extremal_factor(20, &k3, 0.6).unwrap();
        let sizes: Vec<usize> = host.parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![8, 8, 4]);
        // sigma(K3) = 1, so the bound is |B| = 4; exact search confirms <=.
        assert_eq!(max_tiling_upper_bound(&host, &k3).unwrap(), 4);

        // beta = 0: complete bipartite host is triangle-free
        let host = gen_extremal_factor(12, &k3, 0.5).unwrap();
        assert_eq!(max_tiling_upper_bound(&host, &k3).unwrap(), 0);

        // bipartite F with empty B: bound is vacuous, rejected
        let k2 = PatternGraph::by_name("K2").unwrap();
        let mut edges = Vec::new();
        for a in 0..3u32 {
            for b in 3..6u32 {
                edges.push((a, b));
            }
        }
        let host = MultipartiteHost {
            graph: Graph::from_edges(6, &edges).unwrap(),
            parts: vec![(0..6).collect(), vec![]],
            b_part: 1,
        };
        assert!(max_tiling_upper_bound(&host, &k2).is_err());
    }

    #[test]
    fn exact_tiling_oracle_on_known_graphs() {
        // K6 holds two disjoint triangles
        let k3 = PatternGraph::by_name("K3").unwrap();
        assert_eq!(exact_max_tiling(&Graph::complete(6), &k3.graph), 2);
        // C6 is triangle-free
        assert_eq!(exact_max_tiling(&cycle(6), &k3.graph), 0);
        // K_{3,3} holds a perfect matching (3 disjoint K2)
        let mut edges = Vec::new();
        for a in 0..3u32 {
            for b in 3..6u32 {
                edges.push((a, b));
            }
        }
        let k33 = Graph::from_edges(6, &edges).unwrap();
        let k2 = PatternGraph::by_name("K2").unwrap();
        assert_eq!(exact_max_tiling(&k33, &k2.graph), 3);
    }
}
