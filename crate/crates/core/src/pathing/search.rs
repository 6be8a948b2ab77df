use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use super::reservation::{Constrained, Occupancy, ReservationTable, SearchConstraints};
use super::Path;
use crate::environment::{Cell, GridMap, HeuristicTable, UNREACHABLE};
use crate::{AgentId, Timestep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("agent {agent}: no collision-free path from {start} at t={start_t} ({reason})")]
    NoPath {
        agent: AgentId,
        start: Cell,
        start_t: Timestep,
        reason: &'static str,
    },
    #[error("{0} is not an endpoint")]
    NotEndpoint(Cell),
}

/// A path returned by one of the planners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedPath {
    pub path: Path,
    /// First timestep at the pickup cell (only for pickup-then-delivery searches).
    pub pickup_time: Option<Timestep>,
}

impl PlannedPath {
    pub fn cost(&self) -> u32 {
        self.path.cost()
    }
}

/// Search horizon: after every reservation expires the map is static, so any reachable
/// target is reached within `|V|` steps per leg.
pub fn horizon(map: &GridMap, start_t: Timestep, latest_reserved: Timestep) -> Timestep {
    start_t.max(latest_reserved) + 2 * map.num_vertices() as Timestep + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct OpenEntry {
    f: u32,
    /// Soft conflicts accumulated so far; only breaks ties on `f`.
    soft: u32,
    g: u32,
    cell: Cell,
    after: bool,
    node: usize,
}

impl Ord for OpenEntry {
    /// Greater = popped first: lower f, then fewer soft conflicts, then higher g, then
    /// lower cell id, then the after-pickup stage.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then(other.soft.cmp(&self.soft))
            .then(self.g.cmp(&other.g))
            .then(other.cell.cmp(&self.cell))
            .then(self.after.cmp(&other.after))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Node {
    cell: Cell,
    t: Timestep,
    after: bool,
    soft: u32,
    parent: Option<usize>,
}

/// A* over `(cell, timestep, stage)`.
///
/// With `pickup = None` the search starts in the after-pickup stage. `heuristic(cell, after)`
/// returns [`UNREACHABLE`] for dead states; `goal(cell, t)` is only asked in the after stage.
/// `soft(from, to, t)` scores a move for tie-breaking without affecting the cost.
#[allow(clippy::too_many_arguments)]
fn astar(
    map: &GridMap,
    occ: &impl Occupancy,
    start: Cell,
    start_t: Timestep,
    pickup: Option<Cell>,
    horizon: Timestep,
    heuristic: impl Fn(Cell, bool) -> u32,
    goal: impl Fn(Cell, Timestep) -> bool,
    soft: impl Fn(Cell, Cell, Timestep) -> u32,
) -> Option<PlannedPath> {
    let start_after = pickup.is_none_or(|p| p == start);
    let h0 = heuristic(start, start_after);
    if h0 == UNREACHABLE {
        return None;
    }
    let mut nodes = vec![Node {
        cell: start,
        t: start_t,
        after: start_after,
        soft: 0,
        parent: None,
    }];
    let mut seen: HashSet<(Cell, Timestep, bool)> = HashSet::new();
    seen.insert((start, start_t, start_after));
    let mut open = BinaryHeap::new();
    open.push(OpenEntry {
        f: h0,
        soft: 0,
        g: 0,
        cell: start,
        after: start_after,
        node: 0,
    });

    while let Some(entry) = open.pop() {
        let (cell, t, after, acc) = {
            let n = &nodes[entry.node];
            (n.cell, n.t, n.after, n.soft)
        };
        if after && goal(cell, t) {
            return Some(reconstruct(&nodes, entry.node));
        }
        if t >= horizon {
            continue;
        }
        let nt = t + 1;
        let stay = std::iter::once(cell);
        for next in stay.chain(map.adjacent(cell).iter().copied()) {
            if occ.vertex_blocked(next, nt) {
                continue;
            }
            if next != cell && occ.edge_blocked(cell, next, t) {
                continue;
            }
            let next_after = after || pickup == Some(next);
            if !seen.insert((next, nt, next_after)) {
                continue;
            }
            let h = heuristic(next, next_after);
            if h == UNREACHABLE {
                continue;
            }
            let g = nt - start_t;
            let acc = acc + soft(cell, next, t);
            nodes.push(Node {
                cell: next,
                t: nt,
                after: next_after,
                soft: acc,
                parent: Some(entry.node),
            });
            open.push(OpenEntry {
                f: g + h,
                soft: acc,
                g,
                cell: next,
                after: next_after,
                node: nodes.len() - 1,
            });
        }
    }
    None
}

fn reconstruct(nodes: &[Node], mut idx: usize) -> PlannedPath {
    let mut rev = Vec::new();
    loop {
        let n = &nodes[idx];
        rev.push((n.cell, n.t, n.after));
        match n.parent {
            Some(p) => idx = p,
            None => break,
        }
    }
    rev.reverse();
    let start = rev[0].1;
    let pickup_time = rev.iter().find(|s| s.2).map(|s| s.1);
    PlannedPath {
        path: Path::new(start, rev.into_iter().map(|s| s.0).collect()),
        pickup_time,
    }
}

fn require_endpoint(h: &HeuristicTable, cell: Cell) -> Result<(), PlanError> {
    h.get(cell, cell).map(|_| ()).ok_or(PlanError::NotEndpoint(cell))
}

/// Cost-minimal collision-free path `start -> pickup -> delivery` that can rest at the
/// delivery cell forever.
///
/// `rt` must not contain the planning agent's own path.
#[allow(clippy::too_many_arguments)]
pub fn plan_path1(
    map: &GridMap,
    agent: AgentId,
    start: Cell,
    start_t: Timestep,
    pickup: Cell,
    delivery: Cell,
    rt: &ReservationTable,
    h: &HeuristicTable,
) -> Result<PlannedPath, PlanError> {
    require_endpoint(h, pickup)?;
    require_endpoint(h, delivery)?;
    let leg = h.h(pickup, delivery);
    let heuristic = |c: Cell, after: bool| {
        if after {
            h.h(c, delivery)
        } else {
            let d = h.h(c, pickup);
            if d == UNREACHABLE || leg == UNREACHABLE {
                UNREACHABLE
            } else {
                d + leg
            }
        }
    };
    let goal = |c: Cell, t: Timestep| c == delivery && rt.rest_safe(c, t);
    let hz = horizon(map, start_t, rt.latest());
    let mut planned = astar(map, rt, start, start_t, Some(pickup), hz, heuristic, goal, |_, _, _| 0).ok_or(
        PlanError::NoPath {
            agent,
            start,
            start_t,
            reason: "pickup/delivery unreachable within horizon",
        },
    )?;
    if planned.pickup_time.is_none() {
        planned.pickup_time = Some(start_t);
    }
    Ok(planned)
}

/// Cost-minimal collision-free path to the cheapest candidate endpoint that can be rested
/// in forever.
pub fn plan_path2(
    map: &GridMap,
    agent: AgentId,
    start: Cell,
    start_t: Timestep,
    candidates: &[Cell],
    rt: &ReservationTable,
    h: &HeuristicTable,
) -> Result<PlannedPath, PlanError> {
    for &c in candidates {
        require_endpoint(h, c)?;
    }
    if candidates.is_empty() {
        return Err(PlanError::NoPath {
            agent,
            start,
            start_t,
            reason: "no candidate endpoint",
        });
    }
    // Nearest-candidate distance per cell.
    let mut nearest = vec![UNREACHABLE; map.num_cells()];
    for &e in candidates {
        for v in map.vertices() {
            nearest[v.index()] = nearest[v.index()].min(h.h(v, e));
        }
    }
    let is_candidate: HashSet<Cell> = candidates.iter().copied().collect();
    let heuristic = |c: Cell, _| nearest[c.index()];
    let goal = |c: Cell, t: Timestep| is_candidate.contains(&c) && rt.rest_safe(c, t);
    let hz = horizon(map, start_t, rt.latest());
    astar(map, rt, start, start_t, None, hz, heuristic, goal, |_, _, _| 0).ok_or(PlanError::NoPath {
        agent,
        start,
        start_t,
        reason: "no candidate endpoint reachable within horizon",
    })
}

/// Low-level search for conflict-based search: shortest path to `goal` honouring both
/// external reservations and per-agent constraints. `goal_dist` holds exact distances
/// to `goal` for every cell.
///
/// Among shortest paths, prefers the one that collides least often with `avoid`
/// (the other agents' current paths).
#[allow(clippy::too_many_arguments)]
pub fn plan_constrained(
    map: &GridMap,
    agent: AgentId,
    start: Cell,
    start_t: Timestep,
    goal: Cell,
    goal_dist: &[u32],
    rt: &ReservationTable,
    constraints: &SearchConstraints,
    avoid: Option<&ReservationTable>,
) -> Result<PlannedPath, PlanError> {
    let occ = Constrained {
        reservations: rt,
        constraints,
    };
    let heuristic = |c: Cell, _| goal_dist[c.index()];
    let is_goal = |c: Cell, t: Timestep| c == goal && !occ.rest_blocked(c, t);
    let hz = horizon(map, start_t, occ.latest());
    let soft = |from: Cell, to: Cell, t: Timestep| {
        avoid.map_or(0, |a| u32::from(!a.vertex_free(to, t + 1)) + u32::from(from != to && !a.edge_free(from, to, t)))
    };
    astar(map, &occ, start, start_t, None, hz, heuristic, is_goal, soft).ok_or(PlanError::NoPath {
        agent,
        start,
        start_t,
        reason: "goal unreachable under constraints",
    })
}

/// Earliest timestep-cost at which each target can be reached from `start` and rested in
/// forever, avoiding `rt`. `None` for targets that cannot be reached before the horizon.
pub fn earliest_arrivals(
    map: &GridMap,
    start: Cell,
    start_t: Timestep,
    rt: &ReservationTable,
    targets: &[Cell],
) -> Vec<Option<u32>> {
    let mut result = vec![None; targets.len()];
    let mut unresolved = targets.len();
    let hz = horizon(map, start_t, rt.latest());
    let mut frontier = vec![false; map.num_cells()];
    let mut cells = vec![start];
    frontier[start.index()] = true;
    let mut t = start_t;
    loop {
        for (slot, &target) in targets.iter().enumerate() {
            if result[slot].is_none() && frontier[target.index()] && rt.rest_safe(target, t) {
                result[slot] = Some(t - start_t);
                unresolved -= 1;
            }
        }
        if unresolved == 0 || t >= hz || cells.is_empty() {
            return result;
        }
        let mut next = vec![false; map.num_cells()];
        let mut next_cells = Vec::with_capacity(cells.len() * 2);
        for &c in &cells {
            for n in std::iter::once(c).chain(map.adjacent(c).iter().copied()) {
                if next[n.index()] || !rt.vertex_free(n, t + 1) {
                    continue;
                }
                if n != c && !rt.edge_free(c, n, t) {
                    continue;
                }
                next[n.index()] = true;
                next_cells.push(n);
            }
        }
        frontier = next;
        cells = next_cells;
        t += 1;
    }
}
