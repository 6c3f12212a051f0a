//! The absorber/connector construction: mark sparse-cell vertices for later
//! insertion (step 1), connect the dense-cell components through common-
//! neighborhood seams (step 2), lay out a k-th power of a cycle inside each
//! component by a double tree traversal (step 3), and splice everything into
//! one spanning cyclic order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::{
    classify_cells, find_common_ksets_ranked, is_s_dense, is_v_dense, CellClassification,
};
use crate::components::{build_gamma, ComponentGraph};
use crate::geometry::{CellGrid, ParamSet};
use crate::graph::{Graph, UnionGraph};
use crate::verify::verify_kth_power;

/// How many ranked common-k-set candidates a connector search tries before
/// giving up on the cell.
pub const LEMMA_RETRY_BUDGET: usize = 5;

/// A permutation of the vertex set, read cyclically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicOrder {
    pub order: Vec<u32>,
}

impl CyclicOrder {
    pub fn is_permutation_of(&self, n: usize) -> bool {
        if self.order.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &v in &self.order {
            if (v as usize) >= n || seen[v as usize] {
                return false;
            }
            seen[v as usize] = true;
        }
        true
    }

    /// One-line space-separated form.
    pub fn to_line(&self) -> String {
        self.order
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    AbsorberCell,
    ConnectorCell,
    Lemma31,
    TraversalReserve,
    Degenerate,
    /// Plan inconsistencies that should be unreachable; kept as data rather
    /// than a panic so Monte Carlo runs survive and report them.
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub stage: Stage,
    pub detail: String,
    /// Offending vertex, cell, or component, when one exists.
    pub context: Option<String>,
}

impl fmt::Display for FailureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.stage, self.detail)?;
        if let Some(ctx) = &self.context {
            write!(f, " ({ctx})")?;
        }
        Ok(())
    }
}

impl std::error::Error for FailureReport {}

fn fail(stage: Stage, detail: impl Into<String>, context: Option<String>) -> FailureReport {
    FailureReport {
        stage,
        detail: detail.into(),
        context,
    }
}

/// The two forbidden cell sets. `f` holds cells already spent (sparse cells
/// and cells whose reserve was claimed); `f_star` holds, per component of
/// the evolving connection graph, the one cell kept free for connecting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForbiddenState {
    pub f: BTreeSet<usize>,
    pub f_star: BTreeSet<usize>,
}

impl ForbiddenState {
    pub fn init(cls: &CellClassification, gamma: &ComponentGraph, grid: &CellGrid) -> Self {
        let f: BTreeSet<usize> = grid
            .occupied_cells()
            .map(|(c, _)| c)
            .filter(|c| cls.is_sparse(*c))
            .collect();
        let f_star: BTreeSet<usize> = gamma
            .components
            .iter()
            .filter(|comp| comp.len() == 1)
            .map(|comp| comp[0])
            .collect();
        debug_assert!(f.is_disjoint(&f_star));
        ForbiddenState { f, f_star }
    }

    pub fn is_eligible(&self, cell: usize) -> bool {
        !self.f.contains(&cell) && !self.f_star.contains(&cell)
    }

    fn add_f(&mut self, cell: usize) {
        self.f_star.remove(&cell);
        self.f.insert(cell);
        debug_assert!(self.f.is_disjoint(&self.f_star));
    }

    fn add_f_star(&mut self, cell: usize) {
        debug_assert!(!self.f.contains(&cell));
        self.f_star.insert(cell);
    }
}

/// A sparse-cell vertex with its reserved landing pad in a dense cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Absorber {
    pub v: u32,
    pub host_cell: usize,
    pub t_v: Vec<u32>,
    pub t1: Vec<u32>,
    pub t2: Vec<u32>,
}

/// A seam between two components: 2k vertices on each side such that the
/// union of the two sets spans a clique in H ∪ G.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connector {
    pub c: usize,
    pub c_prime: usize,
    pub t_c: Vec<u32>,
    pub t_cp: Vec<u32>,
    /// Component labels joined, `(component of c, component of c_prime)`.
    pub joins: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionPlan {
    pub absorbers: Vec<Absorber>,
    pub connectors: Vec<Connector>,
    pub forbidden: ForbiddenState,
}

impl ConstructionPlan {
    /// The reserved 2k-block of a cell, if any. Steps 1 and 2 put every
    /// chosen cell into `f` immediately, so no cell carries two blocks.
    pub fn block_of(&self, cell: usize) -> Option<(&[u32], &[u32])> {
        for a in &self.absorbers {
            if a.host_cell == cell {
                return Some((&a.t1, &a.t2));
            }
        }
        for c in &self.connectors {
            let k = c.t_c.len() / 2;
            if c.c == cell {
                return Some((&c.t_c[..k], &c.t_c[k..]));
            }
            if c.c_prime == cell {
                return Some((&c.t_cp[..k], &c.t_cp[k..]));
            }
        }
        None
    }
}

/// After adding `cell` to `f`, park the component's last free cell in
/// `f_star` so later choices cannot strand the component.
fn reserve_last_free(
    state: &mut ForbiddenState,
    component_cells: &[usize],
) {
    let free: Vec<usize> = component_cells
        .iter()
        .copied()
        .filter(|c| !state.f.contains(c))
        .collect();
    if free.len() == 1 && !state.f_star.contains(&free[0]) {
        state.add_f_star(free[0]);
    }
}

/// Step 1: for every vertex of a sparse cell, reserve 2k of its neighbors
/// inside the smallest eligible cell that holds at least 2k of them. The
/// chosen cell is spent (enters `f`).
pub fn step1_absorbers(
    h: &Graph,
    grid: &CellGrid,
    cls: &CellClassification,
    gamma: &ComponentGraph,
    params: &ParamSet,
    state: &mut ForbiddenState,
) -> Result<Vec<Absorber>, FailureReport> {
    let k = params.k;
    let mut sparse_vertices: Vec<u32> = grid
        .occupied_cells()
        .filter(|(c, _)| cls.is_sparse(*c))
        .flat_map(|(_, vs)| vs.iter().copied())
        .collect();
    sparse_vertices.sort_unstable();

    let mut absorbers = Vec::with_capacity(sparse_vertices.len());
    for v in sparse_vertices {
        let host_cell = gamma
            .vertices
            .iter()
            .copied()
            .find(|&c| state.is_eligible(c) && is_v_dense(c, v, h, grid, k));
        let host_cell = match host_cell {
            Some(c) => c,
            None => {
                return Err(fail(
                    Stage::AbsorberCell,
                    "no eligible cell holds 2k neighbors of the vertex",
                    Some(format!("vertex {v}")),
                ))
            }
        };
        let t_v: Vec<u32> = grid
            .members(host_cell)
            .iter()
            .copied()
            .filter(|&u| u != v && h.has_edge(u, v))
            .take(2 * k)
            .collect();
        debug_assert_eq!(t_v.len(), 2 * k);
        state.add_f(host_cell);
        let comp = gamma.component_of(host_cell);
        let cells = gamma
            .components
            .iter()
            .find(|cc| gamma.component_of(cc[0]) == comp)
            .expect("component exists");
        reserve_last_free(state, cells);
        absorbers.push(Absorber {
            v,
            host_cell,
            t1: t_v[..k].to_vec(),
            t2: t_v[k..].to_vec(),
            t_v,
        });
    }
    Ok(absorbers)
}

/// Step 2: repeatedly connect the smallest remaining component group to
/// some other group through a common-neighborhood seam, producing a
/// spanning tree on the original component labels.
pub fn step2_connectors(
    h: &Graph,
    grid: &CellGrid,
    gamma: &ComponentGraph,
    params: &ParamSet,
    state: &mut ForbiddenState,
) -> Result<Vec<Connector>, FailureReport> {
    let k = params.k;
    // groups of original components, merged as connectors land
    let mut groups: Vec<Option<Vec<usize>>> = gamma
        .components
        .iter()
        .map(|cells| Some(cells.clone()))
        .collect();
    let group_of_cell = |groups: &[Option<Vec<usize>>], cell: usize| -> usize {
        groups
            .iter()
            .position(|g| g.as_ref().is_some_and(|cells| cells.contains(&cell)))
            .expect("every dense cell sits in a live group")
    };

    let mut connectors = Vec::new();
    loop {
        let live: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].is_some()).collect();
        if live.len() <= 1 {
            break;
        }
        // smallest group by cell count, ties by smallest cell id
        let gi = *live
            .iter()
            .min_by_key(|&&i| {
                let cells = groups[i].as_ref().unwrap();
                (cells.len(), cells[0])
            })
            .unwrap();
        let cells = groups[gi].as_ref().unwrap().clone();
        let c = match cells.iter().copied().find(|c| !state.f.contains(c)) {
            Some(c) => c,
            None => {
                return Err(fail(
                    Stage::Internal,
                    "component group has no free cell",
                    Some(format!("group label {}", cells[0])),
                ))
            }
        };
        let probe: Vec<u32> = grid
            .members(c)
            .iter()
            .copied()
            .take(params.probe_size)
            .collect();
        let candidates = find_common_ksets_ranked(h, &probe, 2 * k, LEMMA_RETRY_BUDGET)
            .map_err(|e| fail(Stage::Lemma31, e.to_string(), Some(format!("cell {c}"))))?;

        let mut chosen = None;
        'outer: for ks in &candidates {
            for &cp in &gamma.vertices {
                if !state.is_eligible(cp) || cells.contains(&cp) {
                    continue;
                }
                if is_s_dense(cp, ks, grid, k) {
                    chosen = Some((ks, cp));
                    break 'outer;
                }
            }
        }
        let (ks, cp) = chosen.ok_or_else(|| {
            fail(
                Stage::ConnectorCell,
                format!(
                    "no eligible cell holds 2k witnesses for any of {} candidate subsets \
                     (|F ∪ F*| = {})",
                    candidates.len(),
                    state.f.len() + state.f_star.len()
                ),
                Some(format!("cell {c}")),
            )
        })?;

        let t_cp: Vec<u32> = grid
            .members(cp)
            .iter()
            .copied()
            .filter(|v| ks.witnesses.binary_search(v).is_ok())
            .take(2 * k)
            .collect();
        debug_assert_eq!(t_cp.len(), 2 * k);
        connectors.push(Connector {
            c,
            c_prime: cp,
            t_c: ks.t_set.clone(),
            t_cp,
            joins: (gamma.component_of(c), gamma.component_of(cp)),
        });

        state.add_f(c); // also drops c from f_star if it was reserved
        state.add_f(cp);
        let gj = group_of_cell(&groups, cp);
        let mut merged = groups[gi].take().unwrap();
        merged.extend(groups[gj].take().unwrap());
        merged.sort_unstable();
        reserve_last_free(state, &merged);
        groups[gi.min(gj)] = Some(merged);
    }
    Ok(connectors)
}

/// Step 3: lay out a single component's vertices as a k-th power of a cycle
/// in G, using the double traversal of a spanning tree. Reserved 2k-blocks
/// are kept contiguous (first half before second) at their cell's final
/// visit so insertions and grafts can cut between the halves.
///
/// `sole_component` permits the single-cell, no-block layout that arises
/// when the whole grid is one component and nothing needed connecting.
pub fn step3_component_cycle(
    component: &[usize],
    plan: &ConstructionPlan,
    grid: &CellGrid,
    params: &ParamSet,
    g: &Graph,
    sole_component: bool,
) -> Result<Vec<u32>, FailureReport> {
    let k = params.k;
    let n = g.n();
    let blocked: BTreeSet<u32> = component
        .iter()
        .filter_map(|&c| plan.block_of(c))
        .flat_map(|(t1, t2)| t1.iter().chain(t2).copied())
        .collect();
    let mut used = vec![false; n];

    // fresh unreserved vertices of a cell, smallest first
    let avail = |cell: usize, used: &[bool]| -> Vec<u32> {
        grid.members(cell)
            .iter()
            .copied()
            .filter(|&v| !used[v as usize] && !blocked.contains(&v))
            .collect()
    };
    // exhaust a cell: leftovers in id order, then the block halves in order
    let exhaust = |cell: usize, used: &mut [bool], out: &mut Vec<u32>| {
        for v in avail(cell, used) {
            used[v as usize] = true;
            out.push(v);
        }
        if let Some((t1, t2)) = plan.block_of(cell) {
            for &v in t1.iter().chain(t2) {
                debug_assert!(!used[v as usize]);
                used[v as usize] = true;
                out.push(v);
            }
        }
    };

    let c0 = *component.iter().min().expect("nonempty component");
    if component.len() == 1 {
        // degenerate single-cell component
        if plan.block_of(c0).is_none() && !sole_component {
            return Err(fail(
                Stage::Degenerate,
                "single-cell component carries no connector block",
                Some(format!("cell {c0}")),
            ));
        }
        let mut cycle = Vec::new();
        exhaust(c0, &mut used, &mut cycle);
        return Ok(cycle);
    }

    // BFS spanning tree rooted at the smallest cell, children in id order
    let comp_set: BTreeSet<usize> = component.iter().copied().collect();
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut seen: BTreeSet<usize> = [c0].into();
    let mut queue = std::collections::VecDeque::from([c0]);
    while let Some(u) = queue.pop_front() {
        for f in grid.friends(u) {
            if comp_set.contains(&f) && seen.insert(f) {
                children.entry(u).or_default().push(f);
                queue.push_back(f);
            }
        }
    }
    if seen.len() != component.len() {
        return Err(fail(
            Stage::Internal,
            "component is not connected under friendship",
            Some(format!("component label {c0}")),
        ));
    }

    // Euler tour: every tree edge walked down and back up
    let mut tour = vec![c0];
    fn walk(u: usize, children: &BTreeMap<usize, Vec<usize>>, tour: &mut Vec<usize>) {
        if let Some(kids) = children.get(&u) {
            for &v in kids {
                tour.push(v);
                walk(v, children, tour);
                tour.push(u);
            }
        }
    }
    walk(c0, &children, &mut tour);
    let m = tour.len() - 1;
    debug_assert_eq!(m, 2 * (component.len() - 1));
    let mut last_pos: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, &c) in tour.iter().enumerate() {
        last_pos.insert(c, i);
    }

    let reserve_err = |cell: usize| {
        fail(
            Stage::TraversalReserve,
            "cell ran out of fresh unreserved vertices mid-traversal",
            Some(format!("cell {cell}")),
        )
    };

    let mut cycle: Vec<u32> = Vec::new();
    let x0 = *avail(c0, &used).first().ok_or_else(|| reserve_err(c0))?;
    used[x0 as usize] = true;
    cycle.push(x0);

    for i in 1..=m {
        let c = tour[i - 1];
        let cp = tour[i];
        if last_pos[&c] == i - 1 {
            // final visit: lay down everything left, block halves last
            exhaust(c, &mut used, &mut cycle);
        } else {
            // intermediate visit: k−1 fresh vertices after the entry vertex
            let fresh = avail(c, &used);
            if fresh.len() < k - 1 {
                return Err(reserve_err(c));
            }
            for &v in &fresh[..k - 1] {
                used[v as usize] = true;
                cycle.push(v);
            }
        }
        // step into the next cell
        let xi = *avail(cp, &used).first().ok_or_else(|| reserve_err(cp))?;
        used[xi as usize] = true;
        cycle.push(xi);
    }
    // closing path through the root's leftovers
    exhaust(c0, &mut used, &mut cycle);

    debug_assert_eq!(
        cycle.len(),
        component.iter().map(|&c| grid.members(c).len()).sum::<usize>()
    );
    Ok(cycle)
}

fn find_block_start(cycle: &[u32], block: &[u32]) -> Option<usize> {
    let len = cycle.len();
    let first = *block.first()?;
    let p = cycle.iter().position(|&v| v == first)?;
    for (j, &b) in block.iter().enumerate() {
        if cycle[(p + j) % len] != b {
            return None;
        }
    }
    Some(p)
}

/// Final assembly: push every absorbed vertex between the halves of its
/// block, then splice the component cycles together along the connector
/// tree, child cycles rotated to start at their seam's second half.
pub fn insert_and_graft(
    cycles: &BTreeMap<usize, Vec<u32>>,
    plan: &ConstructionPlan,
) -> Result<CyclicOrder, FailureReport> {
    let internal = |msg: String| fail(Stage::Internal, msg, None);
    let mut cycles: BTreeMap<usize, Vec<u32>> = cycles.clone();

    // vertex -> owning cycle label
    let mut owner: BTreeMap<u32, usize> = BTreeMap::new();
    for (&label, cyc) in &cycles {
        for &v in cyc {
            owner.insert(v, label);
        }
    }

    for a in &plan.absorbers {
        let label = *owner
            .get(&a.t1[0])
            .ok_or_else(|| internal(format!("absorber block for vertex {} not in any cycle", a.v)))?;
        let cyc = cycles.get_mut(&label).unwrap();
        let len = cyc.len();
        let p = find_block_start(cyc, &a.t1)
            .ok_or_else(|| internal(format!("absorber T1 not contiguous for vertex {}", a.v)))?;
        let after = (p + a.t1.len()) % len;
        if cyc[after] != a.t2[0] {
            return Err(internal(format!(
                "absorber halves not adjacent for vertex {}",
                a.v
            )));
        }
        cyc.insert(after, a.v);
    }

    if cycles.len() == 1 {
        let order = cycles.into_values().next().unwrap();
        return Ok(CyclicOrder { order });
    }

    // connector tree on cycle labels
    let mut tree: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (idx, conn) in plan.connectors.iter().enumerate() {
        let (a, b) = conn.joins;
        tree.entry(a).or_default().push(idx);
        tree.entry(b).or_default().push(idx);
    }
    if plan.connectors.len() + 1 != cycles.len() {
        return Err(internal(format!(
            "{} connectors cannot join {} cycles",
            plan.connectors.len(),
            cycles.len()
        )));
    }

    let root = *cycles.keys().next().unwrap();
    let mut assembled = cycles[&root].clone();
    let mut visited: BTreeSet<usize> = [root].into();
    let mut stack = vec![root];
    while let Some(label) = stack.pop() {
        let Some(edge_ids) = tree.get(&label) else {
            continue;
        };
        for &idx in edge_ids {
            let conn = &plan.connectors[idx];
            let child = if conn.joins.0 == label {
                conn.joins.1
            } else {
                conn.joins.0
            };
            if !visited.insert(child) {
                continue;
            }
            let k = conn.t_c.len() / 2;
            // which seam half-pair lives in the child cycle?
            let (t_child, t_parent) = if owner[&conn.t_c[0]] == child {
                (&conn.t_c, &conn.t_cp)
            } else {
                (&conn.t_cp, &conn.t_c)
            };
            let child_cyc = &cycles[&child];
            let q = find_block_start(child_cyc, &t_child[k..])
                .ok_or_else(|| internal(format!("seam second half missing in cycle {child}")))?;
            let mut rotated: Vec<u32> = child_cyc[q..].to_vec();
            rotated.extend_from_slice(&child_cyc[..q]);
            if rotated[rotated.len() - k..] != t_child[..k] {
                return Err(internal(format!(
                    "seam first half does not close cycle {child}"
                )));
            }
            let len = assembled.len();
            let p = find_block_start(&assembled, &t_parent[..k])
                .ok_or_else(|| internal(format!("seam first half missing around cycle {label}")))?;
            let after = (p + k) % len;
            if assembled[after] != t_parent[k] {
                return Err(internal(format!(
                    "seam halves not adjacent around cycle {label}"
                )));
            }
            assembled.splice(after..after, rotated);
            stack.push(child);
        }
    }
    if visited.len() != cycles.len() {
        return Err(internal("connector tree does not span all cycles".into()));
    }
    Ok(CyclicOrder { order: assembled })
}

/// Run the full pipeline. A returned order is always verified against
/// H ∪ G before this function returns; failures carry the first stage that
/// could not complete.
pub fn construct(
    h: &Graph,
    g: &Graph,
    grid: &CellGrid,
    params: &ParamSet,
) -> Result<CyclicOrder, FailureReport> {
    construct_with_plan(h, g, grid, params).0
}

/// As `construct`, also handing back the plan (when steps 1–2 completed)
/// for post-mortem inspection.
pub fn construct_with_plan(
    h: &Graph,
    g: &Graph,
    grid: &CellGrid,
    params: &ParamSet,
) -> (
    Result<CyclicOrder, FailureReport>,
    Option<ConstructionPlan>,
) {
    assert_eq!(h.n(), g.n(), "host and geometric graph must share a vertex set");
    assert_eq!(grid.n(), g.n(), "grid must index the same vertices");
    let cls = classify_cells(grid, params.dense_threshold);
    let gamma = build_gamma(&cls, grid);
    if gamma.vertices.is_empty() {
        return (
            Err(fail(Stage::AbsorberCell, "no dense cells at all", None)),
            None,
        );
    }
    let mut state = ForbiddenState::init(&cls, &gamma, grid);
    let absorbers = match step1_absorbers(h, grid, &cls, &gamma, params, &mut state) {
        Ok(a) => a,
        Err(e) => return (Err(e), None),
    };
    let connectors = match step2_connectors(h, grid, &gamma, params, &mut state) {
        Ok(c) => c,
        Err(e) => return (Err(e), None),
    };
    let plan = ConstructionPlan {
        absorbers,
        connectors,
        forbidden: state,
    };
    let sole = gamma.components.len() == 1;
    let mut cycles = BTreeMap::new();
    for comp in &gamma.components {
        match step3_component_cycle(comp, &plan, grid, params, g, sole) {
            Ok(cycle) => {
                cycles.insert(comp[0], cycle);
            }
            Err(e) => return (Err(e), Some(plan)),
        }
    }
    let order = match insert_and_graft(&cycles, &plan) {
        Ok(o) => o,
        Err(e) => return (Err(e), Some(plan)),
    };
    // soundness gate: never hand out an unverified order
    let union = UnionGraph::new(h, g);
    let check = match verify_kth_power(&order, &union, params.k) {
        Ok(c) => c,
        Err(e) => return (Err(fail(Stage::Internal, e.to_string(), None)), Some(plan)),
    };
    if !check.holds() {
        return (
            Err(fail(
                Stage::Internal,
                format!("assembled order failed verification: {check:?}"),
                None,
            )),
            Some(plan),
        );
    }
    (Ok(order), Some(plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Norm, PointSet};

    /// d=1 grid with the given per-cell populations; returns vertex ranges.
    fn line_grid(pops: &[usize]) -> (CellGrid, Vec<Vec<u32>>) {
        let m = pops.len();
        let side = 1.0 / m as f64;
        let mut coords = Vec::new();
        let mut ranges = Vec::new();
        let mut next = 0u32;
        for (i, &cnt) in pops.iter().enumerate() {
            let mut range = Vec::new();
            for t in 0..cnt {
                coords.push(i as f64 * side + (t as f64 + 0.5) / cnt as f64 * side);
                range.push(next);
                next += 1;
            }
            ranges.push(range);
        }
        let n = coords.len();
        let points = PointSet::new(n, 1, coords).unwrap();
        (CellGrid::build(&points, side).unwrap(), ranges)
    }

    /// G-edges exactly within each cell and between cells at index distance 1.
    fn locality_graph(grid: &CellGrid, n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                let (a, b) = (grid.cell_of(u), grid.cell_of(v));
                if a.abs_diff(b) <= 1 {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    fn params_for(n: usize, k: usize, side: f64, probe: usize) -> ParamSet {
        ParamSet {
            n,
            d: 1,
            k,
            alpha: 0.5,
            c: 1.0,
            radius: 2.0 * side,
            cell_side: side,
            mean_occupancy: side * n as f64,
            probe_size: probe,
            dense_threshold: probe + k * 3,
            witness_fraction: 0.1,
            norm: Norm::L2,
        }
    }

    fn setup(
        grid: &CellGrid,
        params: &ParamSet,
    ) -> (CellClassification, ComponentGraph, ForbiddenState) {
        let cls = classify_cells(grid, params.dense_threshold);
        let gamma = build_gamma(&cls, grid);
        let state = ForbiddenState::init(&cls, &gamma, grid);
        (cls, gamma, state)
    }

    #[test]
    fn no_sparse_cells_no_absorbers() {
        let (grid, _) = line_grid(&[10, 10, 10]);
        let params = params_for(30, 1, 1.0 / 3.0, 2);
        let h = Graph::complete(30);
        let (cls, gamma, mut state) = setup(&grid, &params);
        let before = state.clone();
        let abs = step1_absorbers(&h, &grid, &cls, &gamma, &params, &mut state).unwrap();
        assert!(abs.is_empty());
        assert_eq!(state, before);
    }

    #[test]
    fn single_sparse_vertex_gets_smallest_cell() {
        // cell 0 holds one vertex (sparse), cells 1..4 are dense
        let (grid, ranges) = line_grid(&[1, 10, 10, 10]);
        let params = params_for(31, 1, 0.25, 2);
        let h = Graph::complete(31);
        let (cls, gamma, mut state) = setup(&grid, &params);
        let abs = step1_absorbers(&h, &grid, &cls, &gamma, &params, &mut state).unwrap();
        assert_eq!(abs.len(), 1);
        let a = &abs[0];
        assert_eq!(a.v, 0);
        assert_eq!(a.host_cell, grid.cell_of(ranges[1][0]));
        // 2k smallest neighbors of v in the cell
        assert_eq!(a.t_v, vec![ranges[1][0], ranges[1][1]]);
        assert_eq!((a.t1.as_slice(), a.t2.as_slice()), (&a.t_v[..1], &a.t_v[1..]));
        assert!(state.f.contains(&a.host_cell));
    }

    #[test]
    fn absorber_failure_when_neighbors_are_sparse() {
        // v (vertex 0) in sparse cell 0; all its H-neighbors in sparse cell 1
        let (grid, ranges) = line_grid(&[1, 3, 10, 10]);
        let params = params_for(24, 1, 0.25, 2);
        let mut edges: Vec<(u32, u32)> = ranges[1].iter().map(|&u| (0, u)).collect();
        // dense cells form a clique among themselves
        let rest: Vec<u32> = ranges[2].iter().chain(&ranges[3]).copied().collect();
        for (i, &u) in rest.iter().enumerate() {
            for &v in &rest[i + 1..] {
                edges.push((u, v));
            }
        }
        let h = Graph::from_edges(24, &edges).unwrap();
        let (cls, gamma, mut state) = setup(&grid, &params);
        let err = step1_absorbers(&h, &grid, &cls, &gamma, &params, &mut state).unwrap_err();
        assert_eq!(err.stage, Stage::AbsorberCell);
        assert_eq!(err.context.as_deref(), Some("vertex 0"));
        // oracle: no dense cell holds 2k neighbors of 0
        for &c in &gamma.vertices {
            assert!(!is_v_dense(c, 0, &h, &grid, params.k));
        }
    }

    #[test]
    fn connected_gamma_needs_no_connectors() {
        let (grid, _) = line_grid(&[10, 10, 10]);
        let params = params_for(30, 1, 1.0 / 3.0, 2);
        let h = Graph::complete(30);
        let (_, gamma, mut state) = setup(&grid, &params);
        assert_eq!(gamma.components.len(), 1);
        let conns = step2_connectors(&h, &grid, &gamma, &params, &mut state).unwrap();
        assert!(conns.is_empty());
    }

    #[test]
    fn two_components_one_connector() {
        // dense, dense, gap, dense: components {0,1} and {3}
        let (grid, _) = line_grid(&[10, 10, 1, 10]);
        let params = params_for(31, 1, 0.25, 2);
        let h = Graph::complete(31);
        let (_, gamma, mut state) = setup(&grid, &params);
        assert_eq!(gamma.components.len(), 2);
        let conns = step2_connectors(&h, &grid, &gamma, &params, &mut state).unwrap();
        assert_eq!(conns.len(), 1);
        let c = &conns[0];
        // complete H: the seam is a clique across the two sides
        assert!(h
            .is_complete_between(&c.t_c, &c.t_cp)
            .unwrap());
        assert_ne!(c.joins.0, c.joins.1);
    }

    #[test]
    fn three_components_sizes_1_1_50() {
        // 54 cells: two isolated dense singletons and one 50-cell run
        let mut pops = vec![0usize; 54];
        pops[0] = 8; // singleton component
        pops[2] = 8; // singleton component
        for p in pops.iter_mut().skip(4) {
            *p = 8;
        }
        let (grid, _) = line_grid(&pops);
        let n: usize = pops.iter().sum();
        let params = params_for(n, 1, 1.0 / 54.0, 2); // R = 5
        let h = Graph::complete(n);
        let (_, gamma, mut state) = setup(&grid, &params);
        let sizes: Vec<usize> = gamma.components.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 1, 50]);
        let conns = step2_connectors(&h, &grid, &gamma, &params, &mut state).unwrap();
        assert_eq!(conns.len(), 2);
        // singletons are consumed first (smallest component rule)
        let labels: Vec<usize> = gamma.components.iter().map(|c| c[0]).collect();
        assert_eq!(conns[0].joins.0, labels[0]);
        assert_eq!(conns[1].joins.0, labels[1]);
        // the two tree edges connect everything: union-find over labels
        let mut parent: BTreeMap<usize, usize> =
            labels.iter().map(|&l| (l, l)).collect();
        fn find(p: &mut BTreeMap<usize, usize>, x: usize) -> usize {
            let px = p[&x];
            if px == x {
                return x;
            }
            let r = find(p, px);
            p.insert(x, r);
            r
        }
        for c in &conns {
            let (a, b) = (find(&mut parent, c.joins.0), find(&mut parent, c.joins.1));
            assert_ne!(a, b, "tree edge joins two distinct groups");
            parent.insert(a, b);
        }
        let roots: BTreeSet<usize> = labels.iter().map(|&l| find(&mut parent, l)).collect();
        assert_eq!(roots.len(), 1);
    }

    #[test]
    fn degenerate_single_cell_layout() {
        let (grid, ranges) = line_grid(&[30]);
        let params = params_for(30, 2, 1.0, 4);
        let plan = ConstructionPlan {
            absorbers: vec![],
            connectors: vec![Connector {
                c: 0,
                c_prime: usize::MAX, // seam partner lives elsewhere
                t_c: vec![0, 1, 2, 3],
                t_cp: vec![],
                joins: (0, usize::MAX),
            }],
            forbidden: ForbiddenState {
                f: BTreeSet::new(),
                f_star: BTreeSet::new(),
            },
        };
        let g = Graph::complete(30);
        let cycle = step3_component_cycle(&[grid.cell_of(ranges[0][0])], &plan, &grid, &params, &g, false)
            .unwrap();
        assert_eq!(cycle.len(), 30);
        // T1 then T2 consecutive at the end of the layout
        assert_eq!(&cycle[26..], &[0, 1, 2, 3]);

        // without a block and not the sole component: degenerate failure
        let empty_plan = ConstructionPlan {
            absorbers: vec![],
            connectors: vec![],
            forbidden: plan.forbidden.clone(),
        };
        let err =
            step3_component_cycle(&[0], &empty_plan, &grid, &params, &g, false).unwrap_err();
        assert_eq!(err.stage, Stage::Degenerate);
        // as the sole component a plain cycle is fine
        let cycle =
            step3_component_cycle(&[0], &empty_plan, &grid, &params, &g, true).unwrap();
        assert_eq!(cycle, (0..30).collect::<Vec<u32>>());
    }

    #[test]
    fn two_friend_cells_yield_verified_square() {
        let (grid, _) = line_grid(&[30, 30]);
        let params = params_for(60, 2, 0.5, 4);
        let g = locality_graph(&grid, 60);
        let plan = ConstructionPlan {
            absorbers: vec![],
            connectors: vec![],
            forbidden: ForbiddenState {
                f: BTreeSet::new(),
                f_star: BTreeSet::new(),
            },
        };
        let cycle =
            step3_component_cycle(&[0, 1], &plan, &grid, &params, &g, true).unwrap();
        assert_eq!(cycle.len(), 60);
        let order = CyclicOrder { order: cycle };
        assert!(verify_kth_power(&order, &g, 2).unwrap().holds());
    }

    #[test]
    fn path_of_three_cells_intermediate_visit_consumes_k() {
        // cells 0-1-2 on a line: 0 and 2 are not friends, so the square of
        // the cycle must never pair their vertices
        let (grid, ranges) = line_grid(&[30, 30, 30]);
        let params = params_for(90, 2, 1.0 / 3.0, 4);
        let g = locality_graph(&grid, 90);
        let plan = ConstructionPlan {
            absorbers: vec![],
            connectors: vec![],
            forbidden: ForbiddenState {
                f: BTreeSet::new(),
                f_star: BTreeSet::new(),
            },
        };
        let cycle =
            step3_component_cycle(&[0, 1, 2], &plan, &grid, &params, &g, true).unwrap();
        assert_eq!(cycle.len(), 90);
        let order = CyclicOrder { order: cycle.clone() };
        assert!(verify_kth_power(&order, &g, 2).unwrap().holds());
        // the middle cell is visited twice; its intermediate visit consumes
        // exactly k vertices (entry vertex + k−1 fresh)
        let mid: BTreeSet<u32> = ranges[1].iter().copied().collect();
        let mut runs = Vec::new();
        let mut run = 0usize;
        for &v in &cycle {
            if mid.contains(&v) {
                run += 1;
            } else if run > 0 {
                runs.push(run);
                run = 0;
            }
        }
        if run > 0 {
            runs.push(run);
        }
        assert_eq!(runs.len(), 2, "middle cell visited twice");
        assert_eq!(*runs.iter().min().unwrap(), params.k);
    }

    #[test]
    fn splice_two_components_end_to_end() {
        // cells: dense(7), dense(7), empty, dense(6) -> components {0,1}, {3}
        let (grid, _) = line_grid(&[7, 7, 0, 6]);
        let params = params_for(20, 1, 0.25, 2); // R = 5
        let h = Graph::complete(20);
        let g = locality_graph(&grid, 20);
        let order = construct(&h, &g, &grid, &params).unwrap();
        assert!(order.is_permutation_of(20));
        let union = UnionGraph::new(&h, &g);
        assert!(verify_kth_power(&order, &union, 1).unwrap().holds());
        // a second run is byte-identical
        let again = construct(&h, &g, &grid, &params).unwrap();
        assert_eq!(order, again);
    }

    #[test]
    fn absorber_insertion_end_to_end() {
        // one sparse vertex, the rest dense; k = 1
        let (grid, ranges) = line_grid(&[1, 8, 8, 8]);
        let params = params_for(25, 1, 0.25, 2);
        let h = Graph::complete(25);
        // sparse vertex must reach its landing pad through H; G covers cells
        let g = locality_graph(&grid, 25);
        let order = construct(&h, &g, &grid, &params).unwrap();
        assert!(order.is_permutation_of(25));
        let union = UnionGraph::new(&h, &g);
        assert!(verify_kth_power(&order, &union, 1).unwrap().holds());
        // v sits between its two block vertices
        let v = ranges[0][0];
        let pos = order.order.iter().position(|&x| x == v).unwrap();
        let len = order.order.len();
        let prev = order.order[(pos + len - 1) % len];
        let next = order.order[(pos + 1) % len];
        assert!(h.has_edge(v, prev) && h.has_edge(v, next));
    }

    #[test]
    fn plan_serializes() {
        let plan = ConstructionPlan {
            absorbers: vec![Absorber {
                v: 5,
                host_cell: 2,
                t_v: vec![7, 9],
                t1: vec![7],
                t2: vec![9],
            }],
            connectors: vec![],
            forbidden: ForbiddenState {
                f: [0usize].into(),
                f_star: BTreeSet::new(),
            },
        };
        let json = serde_json::to_string(&plan).unwrap();
        let back: ConstructionPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(plan, back);
        let order = CyclicOrder {
            order: vec![2, 0, 1],
        };
        assert_eq!(order.to_line(), "2 0 1");
    }

    #[test]
    fn never_unverified_success_when_radius_too_small() {
        // sparse everywhere: R exceeds every population
        let (grid, _) = line_grid(&[3, 3, 3, 3]);
        let params = params_for(12, 1, 0.25, 2); // R = 5 > 3
        let h = Graph::complete(12);
        let g = locality_graph(&grid, 12);
        let err = construct(&h, &g, &grid, &params).unwrap_err();
        assert_eq!(err.stage, Stage::AbsorberCell);
    }
}
