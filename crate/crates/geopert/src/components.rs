//! The auxiliary graph on dense cells (friendship adjacency) and its
//! connected components.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::CellClassification;
use crate::geometry::{CellGrid, ParamSet};

/// Friendship graph restricted to dense cells, with components labelled by
/// their smallest cell index.
#[derive(Debug, Clone)]
pub struct ComponentGraph {
    /// Dense cells in increasing index order.
    pub vertices: Vec<usize>,
    /// Friendship adjacency restricted to dense cells.
    pub adjacency: BTreeMap<usize, Vec<usize>>,
    /// Cell -> component label (smallest cell index of the component).
    pub component_id: BTreeMap<usize, usize>,
    /// Component cell-lists, ordered by label; each list sorted ascending.
    pub components: Vec<Vec<usize>>,
}

impl ComponentGraph {
    pub fn component_of(&self, cell: usize) -> usize {
        self.component_id[&cell]
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.values().map(Vec::len).max().unwrap_or(0)
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root so labels fall out directly.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

pub fn build_gamma(cls: &CellClassification, grid: &CellGrid) -> ComponentGraph {
    let vertices: Vec<usize> = cls.dense.iter().copied().collect();
    let index_of: BTreeMap<usize, usize> =
        vertices.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut dsu = Dsu::new(vertices.len());
    for &c in &vertices {
        let friends: Vec<usize> = grid
            .friends(c)
            .into_iter()
            .filter(|f| cls.dense.contains(f))
            .collect();
        for &f in &friends {
            dsu.union(index_of[&c], index_of[&f]);
        }
        adjacency.insert(c, friends);
    }
    let mut component_id = BTreeMap::new();
    let mut grouped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in vertices.iter().enumerate() {
        let label = vertices[dsu.find(i)];
        component_id.insert(c, label);
        grouped.entry(label).or_default().push(c);
    }
    ComponentGraph {
        vertices,
        adjacency,
        component_id,
        components: grouped.into_values().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub component_count: usize,
    /// Components with at least `1/(6s)` cells.
    pub large_components: usize,
    pub small_components: usize,
    pub paper_bound: f64,
}

pub fn component_stats(gamma: &ComponentGraph, params: &ParamSet) -> ComponentStats {
    let cutoff = (1.0 / (6.0 * params.cell_side)).ceil() as usize;
    let large = gamma
        .components
        .iter()
        .filter(|comp| comp.len() >= cutoff)
        .count();
    ComponentStats {
        component_count: gamma.components.len(),
        large_components: large,
        small_components: gamma.components.len() - large,
        paper_bound: (-params.mean_occupancy / 3.0).exp() * params.n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify_cells;
    use crate::geometry::{derive_params, sample_points, CellGrid, Norm, PointSet};
    use std::collections::BTreeSet;

    /// Grid with prescribed per-cell populations in d=2: cell (i,j) gets
    /// `pop[i][j]` points placed at its center.
    fn grid_with_pops(pop: &[Vec<usize>]) -> CellGrid {
        let m = pop.len();
        let side = 1.0 / m as f64;
        let mut coords = Vec::new();
        let mut n = 0usize;
        for (i, row) in pop.iter().enumerate() {
            assert_eq!(row.len(), m);
            for (j, &cnt) in row.iter().enumerate() {
                for t in 0..cnt {
                    // jitter keeps points distinct but inside the cell
                    let eps = (t as f64 + 1.0) / (cnt as f64 + 2.0) * side * 0.9;
                    coords.push(i as f64 * side + eps);
                    coords.push(j as f64 * side + side * 0.5);
                    n += 1;
                }
            }
        }
        let points = PointSet::new(n, 2, coords).unwrap();
        CellGrid::build(&points, side).unwrap()
    }

    fn bfs_components(dense: &BTreeSet<usize>, grid: &CellGrid) -> Vec<Vec<usize>> {
        let mut seen = BTreeSet::new();
        let mut comps = Vec::new();
        for &start in dense {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = vec![start];
            let mut queue = vec![start];
            seen.insert(start);
            while let Some(c) = queue.pop() {
                for f in grid.friends(c) {
                    if dense.contains(&f) && seen.insert(f) {
                        comp.push(f);
                        queue.push(f);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    #[test]
    fn all_dense_is_one_component() {
        let pop = vec![vec![3usize; 4]; 4];
        let grid = grid_with_pops(&pop);
        let cls = classify_cells(&grid, 1);
        let gamma = build_gamma(&cls, &grid);
        assert_eq!(gamma.components.len(), 1);
        assert_eq!(gamma.components[0].len(), 16);
        assert!(gamma.max_degree() <= 8);
    }

    #[test]
    fn no_dense_cells_no_components() {
        let pop = vec![vec![1usize; 3]; 3];
        let grid = grid_with_pops(&pop);
        let cls = classify_cells(&grid, 5);
        let gamma = build_gamma(&cls, &grid);
        assert!(gamma.components.is_empty());
        assert!(gamma.vertices.is_empty());
    }

    #[test]
    fn stripes_give_one_component_each() {
        // 8x8 grid; rows 0-1 and 4-5 dense (pop 5), rows 2-3 and 6-7 sparse.
        let mut pop = vec![vec![1usize; 8]; 8];
        for i in [0usize, 1, 4, 5] {
            for j in 0..8 {
                pop[i][j] = 5;
            }
        }
        let grid = grid_with_pops(&pop);
        let cls = classify_cells(&grid, 5);
        let gamma = build_gamma(&cls, &grid);
        assert_eq!(gamma.components.len(), 2);
        let oracle = bfs_components(&cls.dense, &grid);
        assert_eq!(gamma.components, oracle);
        // labels are the smallest member
        for comp in &gamma.components {
            let label = gamma.component_id[&comp[0]];
            assert_eq!(label, comp[0]);
            for &c in comp {
                assert_eq!(gamma.component_id[&c], label);
            }
        }
    }

    #[test]
    fn matches_bfs_oracle_on_random_grids() {
        for seed in 0..20u64 {
            let params = derive_params(300, 2, 1, 0.5, 60.0, Norm::L2, None).unwrap();
            let points = sample_points(300, 2, seed).unwrap();
            let grid = CellGrid::build(&points, params.cell_side).unwrap();
            for r in [1usize, 3, 8] {
                let cls = classify_cells(&grid, r);
                let gamma = build_gamma(&cls, &grid);
                assert_eq!(gamma.components, bfs_components(&cls.dense, &grid));
                assert!(gamma.max_degree() <= 8);
                // partition check
                let total: usize = gamma.components.iter().map(Vec::len).sum();
                assert_eq!(total, cls.dense.len());
            }
        }
    }

    #[test]
    fn stats_shapes() {
        let params = derive_params(400, 2, 1, 0.5, 50.0, Norm::L2, None).unwrap();
        let points = sample_points(400, 2, 5).unwrap();
        let grid = CellGrid::build(&points, params.cell_side).unwrap();
        let cls = classify_cells(&grid, 1);
        let gamma = build_gamma(&cls, &grid);
        let stats = component_stats(&gamma, &params);
        assert_eq!(
            stats.component_count,
            stats.large_components + stats.small_components
        );
        assert!(stats.paper_bound > 0.0);

        let empty = build_gamma(&classify_cells(&grid, 401), &grid);
        let stats = component_stats(&empty, &params);
        assert_eq!(
            (
                stats.component_count,
                stats.large_components,
                stats.small_components
            ),
            (0, 0, 0)
        );
    }
}
