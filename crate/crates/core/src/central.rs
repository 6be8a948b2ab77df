//! The centralized baseline: Hungarian endpoint assignment plus two-stage CBS.

use std::collections::HashSet;

use thiserror::Error;

use crate::assignment::{hungarian_partial, modified_costs, AssignmentError, EndpointKind};
use crate::cbs::{cbs_solve, CbsError, MapfQuery};
use crate::environment::{Cell, GridMap, HeuristicTable};
use crate::events::{Action, EventLog};
use crate::pathing::{earliest_arrivals, Path, ReservationTable};
use crate::tasking::{Task, TaskError, TaskSet};
use crate::{AgentId, TaskId, Timestep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CentralError {
    #[error("t={t}: no parking endpoint reachable for agent {agent}")]
    NoParking { t: Timestep, agent: AgentId },
    #[error("t={t}: endpoint assignment failed: {source}")]
    Assignment { t: Timestep, source: AssignmentError },
    #[error("t={t}: {stage} planning failed: {source}")]
    Planning {
        t: Timestep,
        stage: &'static str,
        source: CbsError,
    },
    #[error(transparent)]
    Task(#[from] TaskError),
}

/// Paths, the task set, and which agents carry which task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentralState {
    paths: Vec<Path>,
    taskset: TaskSet,
    executing: Vec<Option<TaskId>>,
    assigned: Vec<Option<Cell>>,
}

impl CentralState {
    pub fn new(starts: &[Cell]) -> Self {
        CentralState {
            paths: starts.iter().map(|&c| Path::rest(c, 0)).collect(),
            taskset: TaskSet::new(),
            executing: vec![None; starts.len()],
            assigned: vec![None; starts.len()],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, agent: AgentId) -> &Path {
        &self.paths[agent]
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn taskset(&self) -> &TaskSet {
        &self.taskset
    }

    pub fn taskset_mut(&mut self) -> &mut TaskSet {
        &mut self.taskset
    }

    /// The task an occupied agent is executing.
    pub fn executing(&self, agent: AgentId) -> Option<TaskId> {
        self.executing[agent]
    }

    pub fn is_free(&self, agent: AgentId) -> bool {
        self.executing[agent].is_none()
    }

    pub fn assigned_endpoint(&self, agent: AgentId) -> Option<Cell> {
        self.assigned[agent]
    }

    /// The agent delivered its task and becomes free.
    pub fn release_agent(&mut self, agent: AgentId) {
        self.executing[agent] = None;
        self.assigned[agent] = None;
    }

    fn executing_deliveries(&self, tasks: &[Task]) -> HashSet<Cell> {
        self.executing
            .iter()
            .flatten()
            .map(|&id| tasks[id].delivery)
            .collect()
    }
}

/// Inputs of one CENTRAL timestep.
pub struct CentralContext<'a> {
    pub map: &'a GridMap,
    pub h: &'a HeuristicTable,
    pub tasks: &'a mut [Task],
    pub locations: &'a [Cell],
    pub t: Timestep,
    pub events: &'a mut EventLog,
    pub node_cap: usize,
}

/// Starts execution for free agents resting on a pending pickup, ascending id.
///
/// The first such task in release order is taken unless its delivery cell is already
/// the delivery of an executing task or the path end of another agent. Tasks whose
/// pickup equals their delivery finish at once. Returns the agents now occupied.
pub fn promote_agents(
    state: &mut CentralState,
    ctx: &mut CentralContext<'_>,
) -> Result<Vec<AgentId>, CentralError> {
    let t = ctx.t;
    let mut promoted = Vec::new();
    for agent in 0..state.num_agents() {
        let loc = ctx.locations[agent];
        if !state.is_free(agent) || state.paths[agent].end_time() > t {
            continue;
        }
        let deliveries = state.executing_deliveries(ctx.tasks);
        let found = state.taskset.iter().copied().find(|&id| {
            let task = &ctx.tasks[id];
            task.pickup == loc
                && !deliveries.contains(&task.delivery)
                && !state
                    .paths
                    .iter()
                    .enumerate()
                    .any(|(b, p)| b != agent && p.last() == task.delivery)
        });
        let Some(id) = found else { continue };
        state.taskset.remove(&id);
        let task = &mut ctx.tasks[id];
        task.start_execution(agent, t)?;
        ctx.events.record(t, agent, Action::Promote, Some(id), None);
        if task.delivery == loc {
            task.finish(t)?;
            continue;
        }
        state.executing[agent] = Some(id);
        state.assigned[agent] = Some(task.delivery);
        promoted.push(agent);
    }
    Ok(promoted)
}

/// The greedy task subset and the endpoints offered to the free agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    /// Tasks in release order; their pickups are the first columns.
    pub tasks: Vec<TaskId>,
    /// Pickup cells followed by parking cells.
    pub endpoints: Vec<Cell>,
    pub kinds: Vec<EndpointKind>,
}

/// Builds the task subset and, when there are more free agents than pickups, one parking
/// endpoint per free agent.
///
/// `cost(agent, e)` is the agent's base cost to reach endpoint `e`.
pub fn build_candidate_set(
    state: &CentralState,
    tasks: &[Task],
    endpoints: &[Cell],
    free: &[AgentId],
    t: Timestep,
    cost: impl Fn(AgentId, Cell) -> Option<u32>,
) -> Result<CandidateSet, CentralError> {
    let executing = state.executing_deliveries(tasks);
    let mut used: HashSet<Cell> = HashSet::new();
    let mut chosen = Vec::new();
    for &id in &state.taskset {
        let task = &tasks[id];
        let (s, g) = (task.pickup, task.delivery);
        if executing.contains(&s) || executing.contains(&g) || used.contains(&s) || used.contains(&g) {
            continue;
        }
        used.insert(s);
        used.insert(g);
        chosen.push(id);
    }
    let mut set = CandidateSet {
        endpoints: chosen.iter().map(|&id| tasks[id].pickup).collect(),
        kinds: vec![EndpointKind::Pickup; chosen.len()],
        tasks: chosen,
    };
    if free.len() > set.endpoints.len() {
        let mut taken: HashSet<Cell> = executing.union(&used).copied().collect();
        for &agent in free {
            let best = endpoints
                .iter()
                .filter(|e| !taken.contains(e))
                .filter_map(|&e| cost(agent, e).map(|c| (c, e)))
                .min();
            let Some((_, e)) = best else {
                return Err(CentralError::NoParking { t, agent });
            };
            taken.insert(e);
            set.endpoints.push(e);
            set.kinds.push(EndpointKind::Parking);
        }
    }
    Ok(set)
}

/// One CENTRAL timestep, up to but excluding the move.
pub fn central_step(state: &mut CentralState, ctx: &mut CentralContext<'_>) -> Result<(), CentralError> {
    let t = ctx.t;
    let promoted = promote_agents(state, ctx)?;

    // Stage one: newly occupied agents, everybody else's latest path is an obstacle.
    if !promoted.is_empty() {
        let external =
            ReservationTable::from_paths(state.paths.iter().enumerate().filter(|(a, _)| !promoted.contains(a)));
        let query = MapfQuery {
            map: ctx.map,
            agents: promoted
                .iter()
                .map(|&a| (a, ctx.locations[a], state.assigned[a].expect("promoted agents have a delivery")))
                .collect(),
            start_t: t,
            external: &external,
        };
        let solution = cbs_solve(&query, ctx.node_cap).map_err(|source| CentralError::Planning {
            t,
            stage: "occupied-agent",
            source,
        })?;
        for (&a, path) in promoted.iter().zip(solution.paths) {
            ctx.events
                .record(t, a, Action::Replan, state.executing[a], Some(path.cost()));
            state.paths[a] = path;
        }
    }

    let free: Vec<AgentId> = (0..state.num_agents()).filter(|&a| state.is_free(a)).collect();
    if free.is_empty() {
        return Ok(());
    }
    let occupied = ReservationTable::from_paths(
        state
            .paths
            .iter()
            .enumerate()
            .filter(|&(a, _)| !state.is_free(a)),
    );
    let executing = state.executing_deliveries(ctx.tasks);
    let targets: Vec<Cell> = ctx
        .h
        .endpoints()
        .iter()
        .copied()
        .filter(|e| !executing.contains(e))
        .collect();
    let slot = |e: Cell| targets.binary_search(&e).ok();
    let base: Vec<Vec<Option<u32>>> = free
        .iter()
        .map(|&a| earliest_arrivals(ctx.map, ctx.locations[a], t, &occupied, &targets))
        .collect();
    let row_of = |a: AgentId| free.binary_search(&a).expect("free agent");
    let cost = |a: AgentId, e: Cell| slot(e).and_then(|j| base[row_of(a)][j]);

    let candidates = build_candidate_set(state, ctx.tasks, &targets, &free, t, cost)?;
    let rows: Vec<Vec<Option<u32>>> = free
        .iter()
        .map(|&a| candidates.endpoints.iter().map(|&e| cost(a, e)).collect())
        .collect();
    let matrix = modified_costs(&rows, &candidates.kinds)
        .map_err(|source| CentralError::Assignment { t, source })?;
    let matching = hungarian_partial(&matrix).map_err(|source| CentralError::Assignment { t, source })?;

    for (row, &col) in matching.cols.iter().enumerate() {
        let a = free[row];
        let e = candidates.endpoints[col];
        state.assigned[a] = Some(e);
        match candidates.kinds[col] {
            EndpointKind::Pickup => {
                let task = candidates.tasks[col];
                ctx.events.record(t, a, Action::AssignPickup, Some(task), None)
            }
            EndpointKind::Parking => ctx.events.record(t, a, Action::AssignParking, None, None),
        }
    }

    // Stage two: free agents, occupied agents' paths are obstacles.
    let query = MapfQuery {
        map: ctx.map,
        agents: free
            .iter()
            .map(|&a| (a, ctx.locations[a], state.assigned[a].expect("just assigned")))
            .collect(),
        start_t: t,
        external: &occupied,
    };
    let solution = cbs_solve(&query, ctx.node_cap).map_err(|source| CentralError::Planning {
        t,
        stage: "free-agent",
        source,
    })?;
    for (&a, path) in free.iter().zip(solution.paths) {
        ctx.events.record(t, a, Action::Replan, None, Some(path.cost()));
        state.paths[a] = path;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbs::DEFAULT_NODE_CAP;
    use crate::tasking::TaskState;

    fn setup(text: &str) -> (GridMap, HeuristicTable) {
        let m = GridMap::parse(text).unwrap();
        let h = HeuristicTable::build(&m);
        (m, h)
    }

    fn pending(id: TaskId, s: Cell, g: Cell, release: Timestep) -> Task {
        let mut task = Task::new(id, s, g, release);
        task.mark_released().unwrap();
        task
    }

    #[test]
    fn promotion_rules() {
        let (map, h) = setup("1 5\ne.e.e\n");
        let mut tasks = vec![pending(0, Cell(0), Cell(4), 0), pending(1, Cell(2), Cell(4), 0)];
        let mut state = CentralState::new(&[Cell(0), Cell(2)]);
        state.taskset_mut().extend([0, 1]);
        let mut events = EventLog::new(true);
        let locations = [Cell(0), Cell(2)];
        let mut ctx = CentralContext {
            map: &map,
            h: &h,
            tasks: &mut tasks,
            locations: &locations,
            t: 3,
            events: &mut events,
            node_cap: DEFAULT_NODE_CAP,
        };
        // Both tasks deliver to cell 4, so only the lower id is promoted.
        assert_eq!(promote_agents(&mut state, &mut ctx).unwrap(), vec![0]);
        assert_eq!(tasks[0].state, TaskState::Executing);
        assert_eq!(tasks[0].pickup_time, Some(3));
        assert_eq!(tasks[1].state, TaskState::Pending);
        assert_eq!(state.assigned_endpoint(0), Some(Cell(4)));
        assert!(state.is_free(1));
    }

    #[test]
    fn candidate_set_rules() {
        let (map, _) = setup("1 7\nree.eer\n");
        let c = |r: u32| Cell(r);
        let tasks = vec![
            pending(0, c(1), c(2), 0),
            pending(1, c(1), c(4), 1),
            pending(2, c(4), c(5), 2),
        ];
        let mut state = CentralState::new(&[c(0), c(6)]);
        state.taskset_mut().extend([0, 1, 2]);
        let endpoints = map.endpoints();
        let free = [0, 1];
        let dist = |a: AgentId, e: Cell| Some((e.0 as i64 - if a == 0 { 0 } else { 6 }).unsigned_abs() as u32);
        let set = build_candidate_set(&state, &tasks, &endpoints, &free, 0, dist).unwrap();
        // Task 1 shares its pickup with task 0.
        assert_eq!(set.tasks, vec![0, 2]);
        assert_eq!(set.endpoints[..2], [c(1), c(4)]);
        assert_eq!(set.endpoints.len(), 2);

        state.taskset_mut().clear();
        let set = build_candidate_set(&state, &tasks, &endpoints, &free, 0, dist).unwrap();
        assert!(set.tasks.is_empty());
        assert_eq!(set.endpoints, vec![c(0), c(6)]);
        assert_eq!(set.kinds, vec![EndpointKind::Parking; 2]);
    }

    #[test]
    fn single_agent_single_task() {
        let (map, h) = setup("1 5\nr.e.e\n");
        let mut tasks = vec![pending(0, Cell(2), Cell(4), 0)];
        let mut state = CentralState::new(&[Cell(0)]);
        state.taskset_mut().insert(0);
        let mut events = EventLog::new(false);
        let mut locations = vec![Cell(0)];
        let mut t = 0;
        let mut finished = None;
        while finished.is_none() && t < 20 {
            if let Some(id) = state.executing(0) {
                if locations[0] == tasks[id].delivery {
                    tasks[id].finish(t).unwrap();
                    state.release_agent(0);
                    finished = Some(t);
                    break;
                }
            }
            let mut ctx = CentralContext {
                map: &map,
                h: &h,
                tasks: &mut tasks,
                locations: &locations,
                t,
                events: &mut events,
                node_cap: DEFAULT_NODE_CAP,
            };
            central_step(&mut state, &mut ctx).unwrap();
            locations[0] = state.path(0).at(t + 1);
            t += 1;
        }
        assert_eq!(finished, Some(4));
        assert_eq!(tasks[0].pickup_time, Some(2));
    }
}
