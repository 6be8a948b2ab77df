//! Grid maps, endpoint classification, distance tables, and the well-formedness test.

mod grid;
mod heuristic;
mod wellformed;

pub use grid::{Cell, CellKind, GridMap, MapError};
pub use heuristic::{bfs_distances, HeuristicTable, UNREACHABLE};
pub use wellformed::{
    check_well_formed, endpoints_reachable_directly, InstanceError, MapdInstance, Verdict, Violation,
};
