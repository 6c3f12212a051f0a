//! Adjacency storage, union views, and degree / common-neighborhood queries.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this vertex count every graph also keeps a bit matrix, giving
/// `O(n/64)` adjacency rows for common-neighborhood intersections.
pub const BITSET_THRESHOLD: usize = 1 << 17;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("vertex {0} out of range (n = {1})")]
    VertexOutOfRange(u32, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge {0} {1}")]
    DuplicateEdge(u32, u32),
    #[error("empty vertex set not allowed here")]
    EmptySet,
    #[error("sets must be disjoint (both contain {0})")]
    Overlap(u32),
    #[error("malformed edge list: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BitRows {
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitRows {
    fn new(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        BitRows {
            words_per_row,
            words: vec![0; words_per_row * n],
        }
    }

    #[inline]
    fn set(&mut self, u: usize, v: usize) {
        self.words[u * self.words_per_row + v / 64] |= 1u64 << (v % 64);
    }

    #[inline]
    fn get(&self, u: usize, v: usize) -> bool {
        self.words[u * self.words_per_row + v / 64] >> (v % 64) & 1 == 1
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.words[u * self.words_per_row..(u + 1) * self.words_per_row]
    }
}

/// Simple undirected graph on vertex ids `0..n-1`.
///
/// Neighbor lists are sorted; a per-vertex bitset is kept for small `n` so
/// membership tests and intersections are cheap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>,
    bits: Option<BitRows>,
}

/// Read-only adjacency interface shared by [`Graph`] and [`UnionGraph`].
pub trait Adjacency {
    fn order(&self) -> usize;
    fn has_edge(&self, u: u32, v: u32) -> bool;
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph::from_edges(n, &[]).expect("empty edge set is always valid")
    }

    /// Build from an edge list; edges may be listed in either orientation and
    /// duplicates are merged. Self-loops and out-of-range endpoints error.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n {
                return Err(GraphError::VertexOutOfRange(u, n));
            }
            if v as usize >= n {
                return Err(GraphError::VertexOutOfRange(v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let bits = if n <= BITSET_THRESHOLD {
            let mut b = BitRows::new(n);
            for (u, list) in adj.iter().enumerate() {
                for &v in list {
                    b.set(u, v as usize);
                }
            }
            Some(b)
        } else {
            None
        };
        Ok(Graph { n, adj, bits })
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, &edges).expect("complete graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Vertices adjacent to every member of `t`; `t` must be nonempty.
    pub fn common_neighborhood(&self, t: &[u32]) -> Result<Vec<u32>, GraphError> {
        if t.is_empty() {
            return Err(GraphError::EmptySet);
        }
        if let Some(bits) = &self.bits {
            let wpr = bits.words_per_row;
            let mut acc: Vec<u64> = bits.row(t[0] as usize).to_vec();
            for &v in &t[1..] {
                for (a, w) in acc.iter_mut().zip(bits.row(v as usize)) {
                    *a &= w;
                }
            }
            let mut out = Vec::new();
            for (wi, &word) in acc.iter().enumerate().take(wpr) {
                let mut w = word;
                while w != 0 {
                    let b = w.trailing_zeros() as usize;
                    out.push((wi * 64 + b) as u32);
                    w &= w - 1;
                }
            }
            Ok(out)
        } else {
            let mut acc: Vec<u32> = self.adj[t[0] as usize].clone();
            for &v in &t[1..] {
                let other = &self.adj[v as usize];
                let mut merged = Vec::with_capacity(acc.len().min(other.len()));
                let (mut i, mut j) = (0, 0);
                while i < acc.len() && j < other.len() {
                    match acc[i].cmp(&other[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            merged.push(acc[i]);
                            i += 1;
                            j += 1;
                        }
                    }
                }
                acc = merged;
            }
            Ok(acc)
        }
    }

    /// True iff every pair across the two disjoint sets is an edge
    /// (vacuously true when either side is empty).
    pub fn is_complete_between(&self, a: &[u32], b: &[u32]) -> Result<bool, GraphError> {
        for &x in a {
            if b.contains(&x) {
                return Err(GraphError::Overlap(x));
            }
        }
        Ok(a.iter().all(|&x| b.iter().all(|&y| self.has_edge(x, y))))
    }

    /// Edge-list text format: first line `n m`, then `m` lines `u v` with
    /// `0 <= u < v < n`. Duplicates and self-loops are rejected.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, self.edge_count())?;
        for u in 0..self.n as u32 {
            for &v in self.neighbors(u) {
                if v > u {
                    writeln!(w, "{u} {v}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self, GraphError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| GraphError::Malformed("empty file".into()))?
            .map_err(|e| GraphError::Malformed(e.to_string()))?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::Malformed("bad header".into()))?;
        let m: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::Malformed("bad header".into()))?;
        let mut edges = Vec::with_capacity(m);
        let mut seen = std::collections::HashSet::with_capacity(m);
        for line in lines {
            let line = line.map_err(|e| GraphError::Malformed(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let u: u32 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| GraphError::Malformed(format!("bad line {line:?}")))?;
            let v: u32 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| GraphError::Malformed(format!("bad line {line:?}")))?;
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if u > v {
                return Err(GraphError::Malformed(format!(
                    "edges must satisfy u < v, got {u} {v}"
                )));
            }
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(GraphError::Malformed(format!(
                "header promised {m} edges, found {}",
                edges.len()
            )));
        }
        Graph::from_edges(n, &edges)
    }
}

impl Adjacency for Graph {
    fn order(&self) -> usize {
        self.n
    }

    #[inline]
    fn has_edge(&self, u: u32, v: u32) -> bool {
        if let Some(bits) = &self.bits {
            bits.get(u as usize, v as usize)
        } else {
            self.adj[u as usize].binary_search(&v).is_ok()
        }
    }
}

impl Graph {
    #[inline]
    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        Adjacency::has_edge(self, u, v)
    }
}

/// View over the union of a host graph and a geometric graph on the same
/// vertex set; never materialized.
#[derive(Debug, Clone, Copy)]
pub struct UnionGraph<'a> {
    pub h: &'a Graph,
    pub g: &'a Graph,
}

impl<'a> UnionGraph<'a> {
    pub fn new(h: &'a Graph, g: &'a Graph) -> Self {
        assert_eq!(h.n(), g.n(), "union requires equal vertex counts");
        UnionGraph { h, g }
    }
}

impl Adjacency for UnionGraph<'_> {
    fn order(&self) -> usize {
        self.h.n()
    }

    #[inline]
    fn has_edge(&self, u: u32, v: u32) -> bool {
        self.h.has_edge(u, v) || self.g.has_edge(u, v)
    }
}

impl<A: Adjacency + ?Sized> Adjacency for &A {
    fn order(&self) -> usize {
        (**self).order()
    }
    fn has_edge(&self, u: u32, v: u32) -> bool {
        (**self).has_edge(u, v)
    }
}
