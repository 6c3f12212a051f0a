//! Spanning powers of Hamilton cycles in dense graphs perturbed by random
//! geometric graphs.
//!
//! The library samples a random geometric graph on the unit hypercube, unites
//! it with a dense host graph, and runs a cell-based absorber/connector
//! construction that either produces a cyclic vertex order whose k-th power
//! lies in the union, or a structured failure report. Verification, the
//! extremal lower-bound hosts, and a Monte Carlo harness round out the
//! pipeline.

pub mod classify;
pub mod components;
pub mod construct;
pub mod geometry;
pub mod graph;
pub mod harness;
pub mod hosts;
pub mod stats;
pub mod verify;

pub use construct::{construct, ConstructionPlan, CyclicOrder, FailureReport, Stage};
pub use geometry::{build_rgg, derive_params, sample_points, CellGrid, Norm, ParamSet, PointSet};
pub use graph::{Adjacency, Graph, UnionGraph};
