use serde::Serialize;

use crate::environment::{Cell, GridMap};
use crate::pathing::{all_conflicts, Conflict, Path};
use crate::{AgentId, Timestep};

/// Executed locations of every agent, one entry per timestep from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    pub locations: Vec<Vec<Cell>>,
}

/// A breach of the movement or collision rules in a [`Trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Collision(Conflict),
    /// The agent moved between two non-adjacent cells.
    Jump {
        agent: AgentId,
        from: Cell,
        to: Cell,
        t: Timestep,
    },
}

impl Trajectory {
    pub fn new(starts: &[Cell]) -> Self {
        Trajectory {
            locations: starts.iter().map(|&c| vec![c]).collect(),
        }
    }

    pub fn num_agents(&self) -> usize {
        self.locations.len()
    }

    /// Last recorded timestep.
    pub fn last_t(&self) -> Timestep {
        self.locations.first().map_or(0, |l| l.len() as Timestep - 1)
    }

    pub fn at(&self, agent: AgentId, t: Timestep) -> Cell {
        let l = &self.locations[agent];
        l[(t as usize).min(l.len() - 1)]
    }

    pub(crate) fn push(&mut self, cells: &[Cell]) {
        for (l, &c) in self.locations.iter_mut().zip(cells) {
            l.push(c);
        }
    }
}

/// Every vertex collision, swap collision, and jump in `traj`.
pub fn audit_collisions(traj: &Trajectory, map: &GridMap) -> Vec<Violation> {
    let paths: Vec<Path> = traj
        .locations
        .iter()
        .map(|l| Path::new(0, l.clone()))
        .collect();
    let mut out: Vec<Violation> = Vec::new();
    for (agent, l) in traj.locations.iter().enumerate() {
        for (t, w) in l.windows(2).enumerate() {
            if w[0] != w[1] && !map.are_adjacent(w[0], w[1]) {
                out.push(Violation::Jump {
                    agent,
                    from: w[0],
                    to: w[1],
                    t: t as Timestep,
                });
            }
        }
    }
    let refs: Vec<(AgentId, &Path)> = paths.iter().enumerate().collect();
    out.extend(all_conflicts(&refs, 0).into_iter().map(Violation::Collision));
    out
}
