use std::collections::{HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use super::grid::{Cell, GridMap};
use crate::tasking::Task;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("agent {agent} starts on {cell}, which is blocked or outside the map")]
    StartNotPassable { agent: usize, cell: Cell },
    #[error("agents {first} and {second} share start cell {cell}")]
    DuplicateStart { first: usize, second: usize, cell: Cell },
    #[error("task {task}: {which} location {cell} is not a task endpoint")]
    TaskOffEndpoint {
        task: usize,
        which: &'static str,
        cell: Cell,
    },
    #[error("task {task} is released before its predecessor")]
    UnsortedReleases { task: usize },
}

/// A map together with the agents' start cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapdInstance {
    pub map: GridMap,
    pub agent_starts: Vec<Cell>,
}

impl MapdInstance {
    pub fn new(map: GridMap, agent_starts: Vec<Cell>) -> Result<Self, InstanceError> {
        let mut seen = std::collections::HashMap::new();
        for (agent, &cell) in agent_starts.iter().enumerate() {
            if !map.is_passable(cell) {
                return Err(InstanceError::StartNotPassable { agent, cell });
            }
            if let Some(first) = seen.insert(cell, agent) {
                return Err(InstanceError::DuplicateStart {
                    first,
                    second: agent,
                    cell,
                });
            }
        }
        Ok(MapdInstance { map, agent_starts })
    }

    /// One agent on each of the first `n` non-task endpoints (row-major order).
    pub fn with_agents_on_nontask_endpoints(map: GridMap, n: usize) -> Option<Self> {
        let starts: Vec<Cell> = map.nontask_endpoints().iter().take(n).copied().collect();
        if starts.len() < n {
            return None;
        }
        Some(MapdInstance {
            map,
            agent_starts: starts,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agent_starts.len()
    }

    /// Checks that every task's pickup and delivery is a task endpoint of the map.
    pub fn validate_tasks(&self, tasks: &[Task]) -> Result<(), InstanceError> {
        if let Some(i) = (1..tasks.len()).find(|&i| tasks[i].release < tasks[i - 1].release) {
            return Err(InstanceError::UnsortedReleases { task: i });
        }
        for t in tasks {
            for (which, cell) in [("pickup", t.pickup), ("delivery", t.delivery)] {
                if !self.map.is_task_endpoint(cell) {
                    return Err(InstanceError::TaskOffEndpoint {
                        task: t.id,
                        which,
                        cell,
                    });
                }
            }
        }
        Ok(())
    }
}

/// One failed condition of the well-formedness definition, with a witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// (a) the task source is unbounded.
    UnboundedTasks,
    /// (b) fewer non-task endpoints than agents.
    TooFewNonTaskEndpoints { agents: usize, nontask_endpoints: usize },
    /// (b) an agent does not start on a non-task endpoint.
    StartNotNonTaskEndpoint { agent: usize, cell: Cell },
    /// (c) every path between the two endpoints crosses another endpoint.
    EndpointsSeparated { from: Cell, to: Cell },
}

impl Violation {
    pub fn condition(&self) -> char {
        match self {
            Violation::UnboundedTasks => 'a',
            Violation::TooFewNonTaskEndpoints { .. } | Violation::StartNotNonTaskEndpoint { .. } => 'b',
            Violation::EndpointsSeparated { .. } => 'c',
        }
    }
}

impl Violation {
    /// Like the `Display` text, with cells written as `(row, col)`.
    pub fn describe(&self, map: &GridMap) -> String {
        let rc = |c: Cell| {
            let (r, col) = map.coords(c);
            format!("({r}, {col})")
        };
        match *self {
            Violation::StartNotNonTaskEndpoint { agent, cell } => format!(
                "condition (b): agent {agent} starts on {}, which is not a non-task endpoint",
                rc(cell)
            ),
            Violation::EndpointsSeparated { from, to } => format!(
                "condition (c): every path between endpoints {} and {} traverses another endpoint",
                rc(from),
                rc(to)
            ),
            _ => self.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnboundedTasks => write!(f, "condition (a): the task list is not finite"),
            Violation::TooFewNonTaskEndpoints {
                agents,
                nontask_endpoints,
            } => write!(
                f,
                "condition (b): {agents} agents but only {nontask_endpoints} non-task endpoints"
            ),
            Violation::StartNotNonTaskEndpoint { agent, cell } => write!(
                f,
                "condition (b): agent {agent} starts on {cell}, which is not a non-task endpoint"
            ),
            Violation::EndpointsSeparated { from, to } => write!(
                f,
                "condition (c): every path between endpoints {from} and {to} traverses another endpoint"
            ),
        }
    }
}

/// Result of [`check_well_formed`]; well-formed iff `violations` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_well_formed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, condition: char) -> bool {
        self.violations.iter().any(|v| v.condition() == condition)
    }
}

/// Endpoints reachable from `source` by paths whose interior avoids every endpoint.
pub fn endpoints_reachable_directly(map: &GridMap, source: Cell) -> HashSet<Cell> {
    let mut reached = HashSet::new();
    let mut seen = vec![false; map.num_cells()];
    let mut queue = VecDeque::new();
    seen[source.index()] = true;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &u in map.adjacent(v) {
            if seen[u.index()] {
                continue;
            }
            seen[u.index()] = true;
            if map.is_endpoint(u) {
                // May be entered as a destination but never crossed.
                reached.insert(u);
            } else {
                queue.push_back(u);
            }
        }
    }
    reached
}

/// Evaluates the three well-formedness conditions.
///
/// `tasks` is `None` for an unbounded task source.
pub fn check_well_formed(instance: &MapdInstance, tasks: Option<&[Task]>) -> Verdict {
    let map = &instance.map;
    let mut violations = Vec::new();

    if tasks.is_none() {
        violations.push(Violation::UnboundedTasks);
    }

    let agents = instance.num_agents();
    let nontask = map.nontask_endpoints().len();
    if nontask < agents {
        violations.push(Violation::TooFewNonTaskEndpoints {
            agents,
            nontask_endpoints: nontask,
        });
    }
    for (agent, &cell) in instance.agent_starts.iter().enumerate() {
        if !map.is_nontask_endpoint(cell) {
            violations.push(Violation::StartNotNonTaskEndpoint { agent, cell });
        }
    }

    let endpoints = map.endpoints();
    for (i, &u) in endpoints.iter().enumerate() {
        let reached = endpoints_reachable_directly(map, u);
        for &w in &endpoints[i + 1..] {
            if !reached.contains(&w) {
                violations.push(Violation::EndpointsSeparated { from: u, to: w });
            }
        }
    }

    Verdict { violations }
}
