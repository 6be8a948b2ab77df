//! Conflict-based search minimizing flowtime, with external obstacles.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use crate::environment::{bfs_distances, Cell, GridMap};
use crate::pathing::{all_conflicts, first_conflict, plan_constrained, Conflict, Path, ReservationTable, SearchConstraints};
use crate::{AgentId, Timestep};

pub const DEFAULT_NODE_CAP: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CbsError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("no conflict-free solution exists within the search horizon ({expanded} nodes expanded)")]
    Unsolvable { expanded: usize },
    #[error("node cap of {cap} expansions reached")]
    NodeCap { cap: usize },
}

/// Agents to route from `start` to `goal`, all departing at `start_t`.
#[derive(Debug, Clone)]
pub struct MapfQuery<'a> {
    pub map: &'a GridMap,
    /// `(agent, start, goal)`; the agent id is only used for diagnostics.
    pub agents: Vec<(AgentId, Cell, Cell)>,
    pub start_t: Timestep,
    /// Paths fixed in advance; never collided with.
    pub external: &'a ReservationTable,
}

impl MapfQuery<'_> {
    fn validate(&self) -> Result<(), CbsError> {
        let mut starts = HashSet::new();
        let mut goals = HashSet::new();
        let rests = self.external.rest_cells();
        for &(a, s, g) in &self.agents {
            if !self.map.is_passable(s) || !self.map.is_passable(g) {
                return Err(CbsError::InvalidQuery(format!("agent {a}: blocked start or goal")));
            }
            if !starts.insert(s) {
                return Err(CbsError::InvalidQuery(format!("agent {a}: duplicate start {s}")));
            }
            if !goals.insert(g) {
                return Err(CbsError::InvalidQuery(format!("agent {a}: duplicate goal {g}")));
            }
            if rests.contains(&g) {
                return Err(CbsError::InvalidQuery(format!(
                    "agent {a}: goal {g} is an external rest cell"
                )));
            }
        }
        Ok(())
    }
}

/// A node of the constraint tree.
#[derive(Debug, Clone)]
pub struct CtNode {
    pub constraints: Vec<SearchConstraints>,
    pub paths: Vec<Path>,
    /// Sum over agents of the last arrival at the goal, relative to the start time.
    pub cost: u32,
}

#[derive(Debug, Clone)]
pub struct CbsSolution {
    /// One path per query agent, in query order, starting at `start_t`.
    pub paths: Vec<Path>,
    pub flowtime: u32,
    pub expanded: usize,
}

/// Earliest conflict among `paths` (indexed by query position) from `from_t` on.
pub fn detect_first_conflict(paths: &[Path], from_t: Timestep) -> Option<Conflict> {
    let indexed: Vec<(AgentId, &Path)> = paths.iter().enumerate().collect();
    first_conflict(&indexed, from_t)
}

fn count_conflicts(paths: &[Path], from_t: Timestep) -> usize {
    let indexed: Vec<(AgentId, &Path)> = paths.iter().enumerate().collect();
    all_conflicts(&indexed, from_t).len()
}

pub fn cbs_solve(q: &MapfQuery<'_>, node_cap: usize) -> Result<CbsSolution, CbsError> {
    q.validate()?;
    let n = q.agents.len();
    let goal_dist: Vec<Vec<u32>> = q
        .agents
        .iter()
        .map(|&(_, _, g)| bfs_distances(q.map, g))
        .collect();
    // `others` are the current paths of the remaining agents, avoided where that is free.
    let low_level = |i: usize, constraints: &SearchConstraints, others: &[Path]| {
        let (agent, start, goal) = q.agents[i];
        let avoid = ReservationTable::from_paths(others.iter().enumerate().filter(|&(j, _)| j != i));
        plan_constrained(
            q.map,
            agent,
            start,
            q.start_t,
            goal,
            &goal_dist[i],
            q.external,
            constraints,
            Some(&avoid),
        )
        .ok()
        .map(|p| p.path)
    };

    let constraints = vec![SearchConstraints::new(); n];
    let mut paths = Vec::with_capacity(n);
    for (i, c) in constraints.iter().enumerate() {
        match low_level(i, c, &paths) {
            Some(p) => paths.push(p),
            None => return Err(CbsError::Unsolvable { expanded: 0 }),
        }
    }
    let root = CtNode {
        cost: paths.iter().map(Path::cost).sum(),
        constraints,
        paths,
    };

    let mut nodes = vec![root];
    // Ties on cost go to the node with fewer conflicts, then to the older node.
    let mut open = BinaryHeap::new();
    open.push(Reverse((nodes[0].cost, count_conflicts(&nodes[0].paths, q.start_t), 0usize)));
    let mut expanded = 0usize;
    while let Some(Reverse((_, parent_conflicts, id))) = open.pop() {
        let Some(conflict) = detect_first_conflict(&nodes[id].paths, q.start_t) else {
            let node = std::mem::replace(
                &mut nodes[id],
                CtNode {
                    constraints: Vec::new(),
                    paths: Vec::new(),
                    cost: 0,
                },
            );
            return Ok(CbsSolution {
                flowtime: node.cost,
                paths: node.paths,
                expanded,
            });
        };
        if expanded >= node_cap {
            return Err(CbsError::NodeCap { cap: node_cap });
        }
        expanded += 1;
        let branches = match conflict {
            Conflict::Vertex { a, b, cell, t } => [(a, cell, cell, t), (b, cell, cell, t)],
            Conflict::Edge { a, b, from, to, t } => [(a, from, to, t), (b, to, from, t)],
        };
        let mut children = Vec::with_capacity(2);
        let mut bypass = None;
        for (agent, from, to, t) in branches {
            let mut constraints = nodes[id].constraints.clone();
            if from == to {
                constraints[agent].forbid_vertex(from, t);
            } else {
                constraints[agent].forbid_edge(from, to, t);
            }
            let Some(path) = low_level(agent, &constraints[agent], &nodes[id].paths) else {
                continue;
            };
            let parent = &nodes[id];
            let cost = parent.cost - parent.paths[agent].cost() + path.cost();
            let mut paths = parent.paths.clone();
            paths[agent] = path;
            let conflicts = count_conflicts(&paths, q.start_t);
            // Bypass: an equally cheap path with fewer conflicts also satisfies the
            // parent's constraints, so it replaces the parent's path instead of splitting.
            if cost == parent.cost && conflicts < parent_conflicts {
                bypass = Some((agent, paths.swap_remove(agent), conflicts));
                break;
            }
            children.push((
                CtNode {
                    constraints,
                    paths,
                    cost,
                },
                conflicts,
            ));
        }
        if let Some((agent, path, conflicts)) = bypass {
            nodes[id].paths[agent] = path;
            open.push(Reverse((nodes[id].cost, conflicts, id)));
            continue;
        }
        for (node, conflicts) in children {
            open.push(Reverse((node.cost, conflicts, nodes.len())));
            nodes.push(node);
        }
    }
    Err(CbsError::Unsolvable { expanded })
}
