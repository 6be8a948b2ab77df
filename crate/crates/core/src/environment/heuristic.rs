use std::collections::VecDeque;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::grid::{Cell, GridMap};

/// Distance value for unreachable pairs.
pub const UNREACHABLE: u32 = u32::MAX;

/// Exact unconstrained distances from every cell to every endpoint.
///
/// Built once per map by one breadth-first search per endpoint; immutable afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicTable {
    num_cells: usize,
    /// cell index -> slot in `dist` for endpoints, `None` otherwise.
    slot: Vec<Option<u32>>,
    endpoints: Vec<Cell>,
    dist: Vec<Vec<u32>>,
}

/// Single-source BFS distances over the passable cells.
pub fn bfs_distances(map: &GridMap, source: Cell) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; map.num_cells()];
    if !map.is_passable(source) {
        return dist;
    }
    let mut queue = VecDeque::new();
    dist[source.index()] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let d = dist[v.index()] + 1;
        for &u in map.adjacent(v) {
            if dist[u.index()] == UNREACHABLE {
                dist[u.index()] = d;
                queue.push_back(u);
            }
        }
    }
    dist
}

impl HeuristicTable {
    pub fn build(map: &GridMap) -> Self {
        let endpoints = map.endpoints();
        #[cfg(feature = "parallel")]
        let dist: Vec<Vec<u32>> = endpoints.par_iter().map(|&e| bfs_distances(map, e)).collect();
        #[cfg(not(feature = "parallel"))]
        let dist: Vec<Vec<u32>> = endpoints.iter().map(|&e| bfs_distances(map, e)).collect();
        Self::assemble(map, endpoints, dist)
    }

    /// Sequential build, regardless of the `parallel` feature.
    pub fn build_sequential(map: &GridMap) -> Self {
        let endpoints = map.endpoints();
        let dist = endpoints.iter().map(|&e| bfs_distances(map, e)).collect();
        Self::assemble(map, endpoints, dist)
    }

    fn assemble(map: &GridMap, endpoints: Vec<Cell>, dist: Vec<Vec<u32>>) -> Self {
        let mut slot = vec![None; map.num_cells()];
        for (i, e) in endpoints.iter().enumerate() {
            slot[e.index()] = Some(i as u32);
        }
        HeuristicTable {
            num_cells: map.num_cells(),
            slot,
            endpoints,
            dist,
        }
    }

    pub fn endpoints(&self) -> &[Cell] {
        &self.endpoints
    }

    /// Distance from `from` to `endpoint`; `None` if `endpoint` is not an endpoint.
    /// Unreachable pairs yield `Some(UNREACHABLE)`.
    pub fn get(&self, from: Cell, endpoint: Cell) -> Option<u32> {
        let slot = (*self.slot.get(endpoint.index())?)? as usize;
        self.dist[slot].get(from.index()).copied()
    }

    /// Distance to an endpoint, panicking on a non-endpoint target.
    #[inline]
    pub fn h(&self, from: Cell, endpoint: Cell) -> u32 {
        let slot = self.slot[endpoint.index()].expect("heuristic target must be an endpoint");
        self.dist[slot as usize][from.index()]
    }

    pub fn is_reachable(&self, from: Cell, endpoint: Cell) -> bool {
        self.get(from, endpoint).is_some_and(|d| d != UNREACHABLE)
    }

    /// Largest finite distance between two endpoints.
    pub fn endpoint_diameter(&self) -> u32 {
        let mut best = 0;
        for row in &self.dist {
            for e in &self.endpoints {
                let d = row[e.index()];
                if d != UNREACHABLE {
                    best = best.max(d);
                }
            }
        }
        best
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }
}
