use std::collections::{HashMap, HashSet};

use super::Path;
use crate::environment::Cell;
use crate::{AgentId, Timestep};

/// Answers whether a cell or a move is blocked at a timestep.
pub trait Occupancy {
    fn vertex_blocked(&self, cell: Cell, t: Timestep) -> bool;
    /// Moving `from -> to` between `t` and `t + 1`.
    fn edge_blocked(&self, from: Cell, to: Cell, t: Timestep) -> bool;
    /// Whether resting in `cell` from `arrival` onwards is blocked.
    fn rest_blocked(&self, cell: Cell, arrival: Timestep) -> bool;
    /// Last timestep with any finite reservation.
    fn latest(&self) -> Timestep;
}

/// Vertex, edge, and terminal-rest reservations of a set of committed paths.
#[derive(Debug, Clone, Default)]
pub struct ReservationTable {
    vertex: HashMap<(Cell, Timestep), AgentId>,
    /// `(from, to, t)`: the agent moves from `from` at `t` to `to` at `t + 1`.
    edge: HashMap<(Cell, Cell, Timestep), AgentId>,
    rest: HashMap<Cell, (AgentId, Timestep)>,
    last_busy: HashMap<Cell, Timestep>,
    latest: Timestep,
}

impl ReservationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_paths<'a>(paths: impl IntoIterator<Item = (AgentId, &'a Path)>) -> Self {
        let mut rt = Self::new();
        for (agent, path) in paths {
            rt.insert(agent, path);
        }
        rt
    }

    pub fn insert(&mut self, agent: AgentId, path: &Path) {
        let end = path.end_time();
        for (i, w) in path.cells.windows(2).enumerate() {
            let t = path.start + i as Timestep;
            self.vertex.insert((w[0], t), agent);
            let busy = self.last_busy.entry(w[0]).or_insert(t);
            *busy = (*busy).max(t);
            if w[0] != w[1] {
                self.edge.insert((w[0], w[1], t), agent);
            }
        }
        // Keep the earliest rest if several paths end in the same cell.
        self.rest
            .entry(path.last())
            .and_modify(|r| {
                if end < r.1 {
                    *r = (agent, end);
                }
            })
            .or_insert((agent, end));
        self.latest = self.latest.max(end);
    }

    /// Agent occupying `cell` at `t`, including terminal rests.
    pub fn occupant(&self, cell: Cell, t: Timestep) -> Option<AgentId> {
        if let Some(&(agent, from)) = self.rest.get(&cell) {
            if t >= from {
                return Some(agent);
            }
        }
        self.vertex.get(&(cell, t)).copied()
    }

    pub fn vertex_free(&self, cell: Cell, t: Timestep) -> bool {
        self.occupant(cell, t).is_none()
    }

    /// False iff another agent traverses `to -> from` during `t`.
    pub fn edge_free(&self, from: Cell, to: Cell, t: Timestep) -> bool {
        !self.edge.contains_key(&(to, from, t))
    }

    /// Whether no reservation touches `cell` at any timestep `>= arrival`.
    pub fn rest_safe(&self, cell: Cell, arrival: Timestep) -> bool {
        !self.rest.contains_key(&cell) && self.last_busy.get(&cell).is_none_or(|&b| b < arrival)
    }

    /// Cells in which some path ends.
    pub fn rest_cells(&self) -> HashSet<Cell> {
        self.rest.keys().copied().collect()
    }
}

impl Occupancy for ReservationTable {
    fn vertex_blocked(&self, cell: Cell, t: Timestep) -> bool {
        !self.vertex_free(cell, t)
    }

    fn edge_blocked(&self, from: Cell, to: Cell, t: Timestep) -> bool {
        !self.edge_free(from, to, t)
    }

    fn rest_blocked(&self, cell: Cell, arrival: Timestep) -> bool {
        !self.rest_safe(cell, arrival)
    }

    fn latest(&self) -> Timestep {
        self.latest
    }
}

/// Per-agent prohibitions added by conflict-based search.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchConstraints {
    vertices: HashSet<(Cell, Timestep)>,
    edges: HashSet<(Cell, Cell, Timestep)>,
    last_vertex: HashMap<Cell, Timestep>,
    latest: Timestep,
}

impl SearchConstraints {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forbid_vertex(&mut self, cell: Cell, t: Timestep) {
        self.vertices.insert((cell, t));
        let last = self.last_vertex.entry(cell).or_insert(t);
        *last = (*last).max(t);
        self.latest = self.latest.max(t);
    }

    /// Forbids moving `from -> to` between `t` and `t + 1`.
    pub fn forbid_edge(&mut self, from: Cell, to: Cell, t: Timestep) {
        self.edges.insert((from, to, t));
        self.latest = self.latest.max(t + 1);
    }

    pub fn forbids_vertex(&self, cell: Cell, t: Timestep) -> bool {
        self.vertices.contains(&(cell, t))
    }

    pub fn forbids_edge(&self, from: Cell, to: Cell, t: Timestep) -> bool {
        self.edges.contains(&(from, to, t))
    }

    pub fn last_vertex_constraint(&self, cell: Cell) -> Option<Timestep> {
        self.last_vertex.get(&cell).copied()
    }

    pub fn len(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reservations plus CBS constraints, as seen by one low-level search.
pub struct Constrained<'a> {
    pub reservations: &'a ReservationTable,
    pub constraints: &'a SearchConstraints,
}

impl Occupancy for Constrained<'_> {
    fn vertex_blocked(&self, cell: Cell, t: Timestep) -> bool {
        self.constraints.forbids_vertex(cell, t) || self.reservations.vertex_blocked(cell, t)
    }

    fn edge_blocked(&self, from: Cell, to: Cell, t: Timestep) -> bool {
        self.constraints.forbids_edge(from, to, t) || self.reservations.edge_blocked(from, to, t)
    }

    fn rest_blocked(&self, cell: Cell, arrival: Timestep) -> bool {
        self.constraints
            .last_vertex_constraint(cell)
            .is_some_and(|last| last >= arrival)
            || self.reservations.rest_blocked(cell, arrival)
    }

    fn latest(&self) -> Timestep {
        self.reservations.latest.max(self.constraints.latest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_free() {
        let rt = ReservationTable::new();
        for c in 0..5 {
            for t in 0..5 {
                assert!(rt.vertex_free(Cell(c), t));
                assert!(rt.edge_free(Cell(c), Cell(c + 1), t));
            }
        }
    }

    #[test]
    fn terminal_rest_blocks_forever() {
        let rt = ReservationTable::from_paths([(0, &Path::new(1, vec![Cell(0), Cell(1), Cell(2)]))]);
        // Rests in cell 2 from t = 3.
        assert!(rt.vertex_free(Cell(2), 2));
        assert!(!rt.vertex_free(Cell(2), 3));
        assert!(!rt.vertex_free(Cell(2), 7));
        assert!(!rt.vertex_free(Cell(0), 1));
        assert!(rt.vertex_free(Cell(0), 2));
        assert!(!rt.rest_safe(Cell(2), 100));
        assert!(!rt.rest_safe(Cell(1), 2));
        assert!(rt.rest_safe(Cell(1), 3));
        assert_eq!(rt.latest(), 3);
    }

    #[test]
    fn shared_end_cell_keeps_earliest_rest() {
        let early = Path::new(0, vec![Cell(1), Cell(2)]);
        let late = Path::new(0, vec![Cell(4), Cell(3), Cell(3), Cell(2)]);
        for order in [[(0, &early), (1, &late)], [(1, &late), (0, &early)]] {
            let rt = ReservationTable::from_paths(order);
            assert_eq!(rt.occupant(Cell(2), 1), Some(0));
        }
    }

    #[test]
    fn swap_blocked_following_allowed() {
        // A: u@0 -> v@1.
        let (u, v, w) = (Cell(0), Cell(1), Cell(2));
        let rt = ReservationTable::from_paths([(0, &Path::new(0, vec![u, v, w]))]);
        assert!(!rt.edge_free(v, u, 0));
        assert!(rt.edge_free(u, v, 0));
        // Following: entering u at t = 1 right after A left it.
        assert!(rt.vertex_free(u, 1));
        assert!(rt.edge_free(w, v, 0));
        assert!(!rt.edge_free(w, v, 1));
    }

    #[test]
    fn constraints_extend_rest_check() {
        let rt = ReservationTable::new();
        let mut c = SearchConstraints::new();
        c.forbid_vertex(Cell(4), 6);
        c.forbid_edge(Cell(1), Cell(2), 3);
        let occ = Constrained {
            reservations: &rt,
            constraints: &c,
        };
        assert!(occ.vertex_blocked(Cell(4), 6));
        assert!(!occ.vertex_blocked(Cell(4), 5));
        assert!(occ.rest_blocked(Cell(4), 6));
        assert!(!occ.rest_blocked(Cell(4), 7));
        assert!(occ.edge_blocked(Cell(1), Cell(2), 3));
        assert!(!occ.edge_blocked(Cell(2), Cell(1), 3));
        assert_eq!(occ.latest(), 6);
    }
}
