//! Point sampling, derived construction parameters, the cell grid over
//! `[0,1]^d`, and the random geometric graph builder.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

/// Which `ℓp` norm distances are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    /// `ℓp` for a finite integer `p ≥ 1`.
    P(u32),
    /// `ℓ∞` (max-coordinate distance).
    Inf,
}

impl Norm {
    pub const L1: Norm = Norm::P(1);
    pub const L2: Norm = Norm::P(2);

    /// Distance-at-most-`r` test without tolerance ambiguity: squared
    /// comparison for `ℓ2`, `p`-th powers for other finite `p`, direct
    /// coordinate comparison for `ℓ∞`.
    pub fn within(&self, a: &[f64], b: &[f64], r: f64) -> bool {
        debug_assert_eq!(a.len(), b.len());
        match *self {
            Norm::Inf => a.iter().zip(b).all(|(x, y)| (x - y).abs() <= r),
            Norm::P(2) => {
                let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                s <= r * r
            }
            Norm::P(1) => {
                let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                s <= r
            }
            Norm::P(p) => {
                let p = p as i32;
                let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs().powi(p)).sum();
                s <= r.powi(p)
            }
        }
    }

    /// Volume of the unit ball of this norm in dimension `d`:
    /// `2^d Γ(1+1/p)^d / Γ(1+d/p)`, and `2^d` for `ℓ∞`.
    pub fn unit_ball_volume(&self, d: usize) -> f64 {
        use statrs::function::gamma::gamma;
        let d_f = d as f64;
        match *self {
            Norm::Inf => 2f64.powi(d as i32),
            Norm::P(p) => {
                let p_f = f64::from(p);
                2f64.powi(d as i32) * gamma(1.0 + 1.0 / p_f).powi(d as i32)
                    / gamma(1.0 + d_f / p_f)
            }
        }
    }

    /// Diameter of the unit hypercube `[0,1]^d` under this norm.
    pub fn cube_diameter(&self, d: usize) -> f64 {
        match *self {
            Norm::Inf => 1.0,
            Norm::P(p) => (d as f64).powf(1.0 / f64::from(p)),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Inf => write!(f, "inf"),
            Norm::P(p) => write!(f, "{p}"),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "Inf" | "INF" | "max" => Ok(Norm::Inf),
            other => other
                .parse::<u32>()
                .ok()
                .filter(|p| *p >= 1)
                .map(Norm::P)
                .ok_or_else(|| format!("invalid norm {other:?}: expected an integer >= 1 or 'inf'")),
        }
    }
}

/// `n` points in `[0,1]^d`, stored flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub n: usize,
    pub d: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(n: usize, d: usize, coords: Vec<f64>) -> Result<Self, ParamError> {
        if n == 0 || d == 0 {
            return Err(ParamError::Invalid("n and d must be >= 1".into()));
        }
        if coords.len() != n * d {
            return Err(ParamError::Invalid(format!(
                "expected {} coordinates, got {}",
                n * d,
                coords.len()
            )));
        }
        if coords.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(ParamError::Invalid("coordinate outside [0,1]".into()));
        }
        Ok(PointSet { n, d, coords })
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    /// Text format: first line `n d`, then one point per line with 12+
    /// significant digits per coordinate.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, self.d)?;
        for i in 0..self.n {
            let line: Vec<String> = self.point(i).iter().map(|x| format!("{x:.15e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self, ParamError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| ParamError::Invalid("empty point file".into()))?
            .map_err(|e| ParamError::Invalid(e.to_string()))?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ParamError::Invalid("bad point file header".into()))?;
        let d: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ParamError::Invalid("bad point file header".into()))?;
        let mut coords = Vec::with_capacity(n * d);
        for line in lines.take(n) {
            let line = line.map_err(|e| ParamError::Invalid(e.to_string()))?;
            for tok in line.split_whitespace() {
                coords.push(
                    tok.parse::<f64>()
                        .map_err(|e| ParamError::Invalid(e.to_string()))?,
                );
            }
        }
        PointSet::new(n, d, coords)
    }
}

/// All derived constants of the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub alpha: f64,
    pub c: f64,
    /// Geometric radius `r = (C/n)^(1/d)`.
    pub radius: f64,
    /// Cell side `s`; `1/s` is an integer so the grid tiles `[0,1]^d` exactly.
    pub cell_side: f64,
    /// Expected cell occupancy `K = s^d n`.
    pub mean_occupancy: f64,
    /// Size of the probe set fed to the common-k-set finder.
    pub probe_size: usize,
    /// Cells holding at least this many vertices count as dense;
    /// equals `probe_size + k * 3^d`.
    pub dense_threshold: usize,
    /// Target common-neighborhood fraction guaranteed by the probe lemma.
    pub witness_fraction: f64,
    pub norm: Norm,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
}

fn binomial_coefficient(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Derive all construction constants from `(n, d, k, alpha, C)`.
///
/// `probe_size` defaults to `ceil(8k/alpha)` and the witness fraction to
/// `alpha / (4 binom(L, 2k))`, both instantiated for probe subsets of size `2k`.
pub fn derive_params(
    n: usize,
    d: usize,
    k: usize,
    alpha: f64,
    c: f64,
    norm: Norm,
    probe_override: Option<usize>,
) -> Result<ParamSet, ParamError> {
    if n < 1 || d < 1 || k < 1 {
        return Err(ParamError::Invalid("n, d, k must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ParamError::Invalid("alpha must lie in (0,1)".into()));
    }
    if !(c > 0.0) {
        return Err(ParamError::Invalid("C must be positive".into()));
    }
    let radius = (c / n as f64).powf(1.0 / d as f64);
    if radius > norm.cube_diameter(d) {
        return Err(ParamError::Invalid(format!(
            "radius {radius} exceeds the diameter of [0,1]^{d}"
        )));
    }
    let numer = match norm {
        Norm::P(2) => 2.0 * (d as f64).sqrt(),
        _ => 2.0 * d as f64,
    };
    let cells_per_axis = (numer / radius).ceil();
    if cells_per_axis < 2.0 {
        return Err(ParamError::DegenerateGrid(format!(
            "cell side would be >= 1 (radius {radius})"
        )));
    }
    if cells_per_axis.powi(d as i32) > 2f64.powi(62) {
        return Err(ParamError::DegenerateGrid(format!(
            "grid would have {cells_per_axis}^{d} cells"
        )));
    }
    let cell_side = 1.0 / cells_per_axis;
    let mean_occupancy = cell_side.powi(d as i32) * n as f64;
    let probe_size = match probe_override {
        Some(l) => l,
        None => (8.0 * k as f64 / alpha).ceil() as usize,
    };
    if probe_size > n {
        return Err(ParamError::Invalid(format!(
            "probe set size {probe_size} exceeds n = {n}"
        )));
    }
    if probe_size < 2 * k {
        return Err(ParamError::Invalid(format!(
            "probe set size {probe_size} is below 2k = {}",
            2 * k
        )));
    }
    let dense_threshold = probe_size + k * 3usize.pow(d as u32);
    let witness_fraction = alpha / (4.0 * binomial_coefficient(probe_size, 2 * k));
    Ok(ParamSet {
        n,
        d,
        k,
        alpha,
        c,
        radius,
        cell_side,
        mean_occupancy,
        probe_size,
        dense_threshold,
        witness_fraction,
        norm,
    })
}

/// Sample `n` i.i.d. uniform points on `[0,1]^d`; deterministic given the seed.
pub fn sample_points(n: usize, d: usize, seed: u64) -> Result<PointSet, ParamError> {
    if n == 0 || d == 0 {
        return Err(ParamError::Invalid("n and d must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>()).collect();
    PointSet::new(n, d, coords)
}

/// Axis-aligned grid of cells of side `s` over `[0,1]^d`, with the
/// vertex-to-cell map and per-cell member lists.
#[derive(Debug, Clone)]
pub struct CellGrid {
    pub d: usize,
    pub cells_per_axis: usize,
    pub side: f64,
    cell_of: Vec<usize>,
    members: BTreeMap<usize, Vec<u32>>,
}

impl CellGrid {
    /// Bucket every point by coordinate-wise floor of `x/s`, clamping
    /// coordinates equal to 1 into the last cell.
    pub fn build(points: &PointSet, side: f64) -> Result<Self, ParamError> {
        let m_f = 1.0 / side;
        let m = m_f.round();
        if (m_f - m).abs() > 1e-9 || m < 1.0 {
            return Err(ParamError::Invalid(format!(
                "1/side = {m_f} is not a positive integer"
            )));
        }
        if m.powi(points.d as i32) > 2f64.powi(62) {
            return Err(ParamError::DegenerateGrid(format!(
                "grid would have {m}^{} cells",
                points.d
            )));
        }
        let m = m as usize;
        let mut cell_of = Vec::with_capacity(points.n);
        let mut members: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for i in 0..points.n {
            let mut id = 0usize;
            for &x in points.point(i) {
                let c = ((x / side).floor() as usize).min(m - 1);
                id = id * m + c;
            }
            cell_of.push(id);
            members.entry(id).or_default().push(i as u32);
        }
        Ok(CellGrid {
            d: points.d,
            cells_per_axis: m,
            side,
            cell_of,
            members,
        })
    }

    pub fn n(&self) -> usize {
        self.cell_of.len()
    }

    /// Total number of cells, `(1/s)^d`.
    pub fn total_cells(&self) -> u64 {
        (self.cells_per_axis as u64).pow(self.d as u32)
    }

    pub fn cell_of(&self, v: u32) -> usize {
        self.cell_of[v as usize]
    }

    /// Vertices in a cell, in increasing id order; empty for unoccupied cells.
    pub fn members(&self, cell: usize) -> &[u32] {
        self.members.get(&cell).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Occupied cells in increasing id order.
    pub fn occupied_cells(&self) -> impl Iterator<Item = (usize, &[u32])> {
        self.members.iter().map(|(c, v)| (*c, v.as_slice()))
    }

    pub fn cell_coords(&self, cell: usize) -> Vec<usize> {
        let mut coords = vec![0usize; self.d];
        let mut rest = cell;
        for a in (0..self.d).rev() {
            coords[a] = rest % self.cells_per_axis;
            rest /= self.cells_per_axis;
        }
        coords
    }

    pub fn flatten(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.cells_per_axis + c)
    }

    /// All cells whose index differs by at most 1 in every coordinate,
    /// excluding the cell itself; at most `3^d - 1` of them, in increasing
    /// id order.
    pub fn friends(&self, cell: usize) -> Vec<usize> {
        let base = self.cell_coords(cell);
        let mut out = Vec::new();
        let mut offset = vec![-1i64; self.d];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let mut ok = true;
                let mut coords = Vec::with_capacity(self.d);
                for (a, &o) in offset.iter().enumerate() {
                    let c = base[a] as i64 + o;
                    if c < 0 || c >= self.cells_per_axis as i64 {
                        ok = false;
                        break;
                    }
                    coords.push(c as usize);
                }
                if ok {
                    out.push(self.flatten(&coords));
                }
            }
            // odometer over {-1,0,1}^d
            let mut a = self.d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if offset[a] < 1 {
                    offset[a] += 1;
                    break;
                }
                offset[a] = -1;
            }
        }
    }
}

/// Build the random geometric graph with edges between points at `ℓp`
/// distance at most `r` (boundary inclusive).
///
/// Points are bucketed into a grid of side at least `r` and only neighboring
/// buckets are compared, so expected time is `O(n + |E|)`.
pub fn build_rgg(points: &PointSet, r: f64, norm: Norm) -> Result<Graph, ParamError> {
    if !(r > 0.0) {
        return Err(ParamError::Invalid("radius must be positive".into()));
    }
    let n = points.n;
    let d = points.d;
    // Bucket side must be >= r; cap the axis count so the bucket count stays
    // near n even for tiny radii.
    let cap = (n as f64).powf(1.0 / d as f64).ceil().max(1.0) as usize;
    let m = (((1.0 / r).floor() as usize).max(1)).min(cap);
    let side = 1.0 / m as f64;
    let mut buckets: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for i in 0..n {
        let mut id = 0usize;
        for &x in points.point(i) {
            let c = ((x / side).floor() as usize).min(m - 1);
            id = id * m + c;
        }
        buckets.entry(id).or_default().push(i as u32);
    }
    let coords_of = |cell: usize| {
        let mut coords = vec![0usize; d];
        let mut rest = cell;
        for a in (0..d).rev() {
            coords[a] = rest % m;
            rest /= m;
        }
        coords
    };
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut check_pairs = |a: &[u32], b: &[u32], same: bool| {
        if same {
            for (idx, &u) in a.iter().enumerate() {
                for &v in &a[idx + 1..] {
                    if norm.within(points.point(u as usize), points.point(v as usize), r) {
                        edges.push((u, v));
                    }
                }
            }
        } else {
            for &u in a {
                for &v in b {
                    if norm.within(points.point(u as usize), points.point(v as usize), r) {
                        edges.push((u.min(v), u.max(v)));
                    }
                }
            }
        }
    };
    for (&cell, verts) in &buckets {
        check_pairs(verts, &[], true);
        let base = coords_of(cell);
        // Each unordered bucket pair once: only neighbors with larger id.
        let mut offset = vec![-1i64; d];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let mut ok = true;
                let mut id = 0usize;
                for (a, &o) in offset.iter().enumerate() {
                    let c = base[a] as i64 + o;
                    if c < 0 || c >= m as i64 {
                        ok = false;
                        break;
                    }
                    id = id * m + c as usize;
                }
                if ok && id > cell {
                    if let Some(other) = buckets.get(&id) {
                        check_pairs(verts, other, false);
                    }
                }
            }
            let mut a = d;
            let mut done = false;
            loop {
                if a == 0 {
                    done = true;
                    break;
                }
                a -= 1;
                if offset[a] < 1 {
                    offset[a] += 1;
                    break;
                }
                offset[a] = -1;
            }
            if done {
                break;
            }
        }
    }
    Graph::from_edges(n, &edges).map_err(|e| ParamError::Invalid(e.to_string()))
}
