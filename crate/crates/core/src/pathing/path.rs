use serde::{Deserialize, Serialize};

use crate::environment::{Cell, GridMap};
use crate::Timestep;

/// Locations for consecutive timesteps starting at `start`.
///
/// After the last entry the agent rests in the final cell forever.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub start: Timestep,
    pub cells: Vec<Cell>,
}

impl Path {
    pub fn new(start: Timestep, cells: Vec<Cell>) -> Self {
        assert!(!cells.is_empty(), "a path visits at least one cell");
        Path { start, cells }
    }

    /// The trivial path `[cell]` beginning at `t`.
    pub fn rest(cell: Cell, t: Timestep) -> Self {
        Path {
            start: t,
            cells: vec![cell],
        }
    }

    /// Location at `t`; the first cell before `start`, the last cell after the end.
    #[inline]
    pub fn at(&self, t: Timestep) -> Cell {
        if t <= self.start {
            return self.cells[0];
        }
        let i = ((t - self.start) as usize).min(self.cells.len() - 1);
        self.cells[i]
    }

    pub fn end_time(&self) -> Timestep {
        self.start + (self.cells.len() as Timestep - 1)
    }

    pub fn first(&self) -> Cell {
        self.cells[0]
    }

    pub fn last(&self) -> Cell {
        *self.cells.last().expect("nonempty path")
    }

    /// Number of timesteps until the final cell is reached.
    pub fn cost(&self) -> u32 {
        self.cells.len() as u32 - 1
    }

    /// First timestep `>= from` at which the path is in `cell`.
    pub fn first_visit(&self, cell: Cell, from: Timestep) -> Option<Timestep> {
        if from > self.end_time() {
            return (self.last() == cell).then_some(from);
        }
        (from.max(self.start)..=self.end_time()).find(|&t| self.at(t) == cell)
    }

    /// Every step stays put or crosses one edge of `map`.
    pub fn is_connected(&self, map: &GridMap) -> bool {
        self.cells.iter().all(|&c| map.is_passable(c))
            && self
                .cells
                .windows(2)
                .all(|w| w[0] == w[1] || map.are_adjacent(w[0], w[1]))
    }
}
