//! The shared token and the two token-passing protocols.

mod tp;
mod tpts;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

pub use tp::tp_token_turn;
pub use tpts::tpts_get_task;

use crate::environment::{Cell, GridMap, HeuristicTable};
use crate::events::{Action, EventLog};
use crate::pathing::{all_conflicts, plan_path2, Conflict, Path, PlanError, ReservationTable};
use crate::tasking::{Task, TaskSet};
use crate::{AgentId, TaskId, Timestep};

/// Which token protocol drives the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Tasks leave the task set when assigned.
    TokenPassing,
    /// Tasks leave the task set when execution starts; assignments can be stolen.
    TaskSwaps,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("t={t}: agent {agent} at endpoint {cell} failed to plan: {source}")]
    PlanningFailed {
        t: Timestep,
        agent: AgentId,
        cell: Cell,
        source: PlanError,
    },
    #[error("t={t}: task swap recursion exceeded {cap} levels")]
    RecursionCap { t: Timestep, cap: usize },
    #[error("t={t}: token paths collide: {conflict:?}")]
    Collision { t: Timestep, conflict: Conflict },
}

/// Paths of all agents, the task set, and agent/task assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// `None` only while a steal is being evaluated.
    paths: Vec<Option<Path>>,
    taskset: TaskSet,
    agent_task: Vec<Option<TaskId>>,
    task_agent: BTreeMap<TaskId, AgentId>,
    /// First planned arrival at the assigned task's pickup cell.
    pickup_eta: Vec<Option<Timestep>>,
}

/// A deep copy of a [`Token`]; restoring makes the token equal to it again.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSnapshot(Token);

impl Token {
    /// Trivial rest paths at the start cells.
    pub fn new(starts: &[Cell]) -> Self {
        Token {
            paths: starts.iter().map(|&c| Some(Path::rest(c, 0))).collect(),
            taskset: TaskSet::new(),
            agent_task: vec![None; starts.len()],
            task_agent: BTreeMap::new(),
            pickup_eta: vec![None; starts.len()],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, agent: AgentId) -> &Path {
        self.paths[agent]
            .as_ref()
            .expect("every agent has a path outside a steal")
    }

    pub fn paths(&self) -> impl Iterator<Item = (AgentId, &Path)> {
        self.paths
            .iter()
            .enumerate()
            .filter_map(|(a, p)| p.as_ref().map(|p| (a, p)))
    }

    pub fn taskset(&self) -> &TaskSet {
        &self.taskset
    }

    pub fn taskset_mut(&mut self) -> &mut TaskSet {
        &mut self.taskset
    }

    pub fn task_of(&self, agent: AgentId) -> Option<TaskId> {
        self.agent_task[agent]
    }

    pub fn agent_of(&self, task: TaskId) -> Option<AgentId> {
        self.task_agent.get(&task).copied()
    }

    pub fn pickup_eta(&self, agent: AgentId) -> Option<Timestep> {
        self.pickup_eta[agent]
    }

    pub fn snapshot(&self) -> TokenSnapshot {
        TokenSnapshot(self.clone())
    }

    pub fn restore(&mut self, snapshot: TokenSnapshot) {
        *self = snapshot.0;
    }

    pub(crate) fn set_path(&mut self, agent: AgentId, path: Path) {
        self.paths[agent] = Some(path);
    }

    pub(crate) fn drop_path(&mut self, agent: AgentId) {
        self.paths[agent] = None;
    }

    pub(crate) fn assign(&mut self, agent: AgentId, task: TaskId) {
        debug_assert!(self.agent_task[agent].is_none());
        debug_assert!(!self.task_agent.contains_key(&task));
        self.agent_task[agent] = Some(task);
        self.task_agent.insert(task, agent);
    }

    pub(crate) fn set_pickup_eta(&mut self, agent: AgentId, eta: Option<Timestep>) {
        self.pickup_eta[agent] = eta;
    }

    /// Clears the agent's assignment, returning the task it held.
    pub(crate) fn unassign(&mut self, agent: AgentId) -> Option<TaskId> {
        let task = self.agent_task[agent].take()?;
        self.task_agent.remove(&task);
        self.pickup_eta[agent] = None;
        Some(task)
    }

    /// Reservations of every stored path except those of `excluded` agents.
    pub fn reservations_excluding(&self, excluded: &[AgentId]) -> ReservationTable {
        ReservationTable::from_paths(self.paths().filter(|(a, _)| !excluded.contains(a)))
    }

    /// Path end cells of all agents except `excluded`, with the agents ending there.
    pub(crate) fn path_ends_excluding(&self, excluded: AgentId) -> HashMap<Cell, Vec<AgentId>> {
        let mut ends: HashMap<Cell, Vec<AgentId>> = HashMap::new();
        for (a, p) in self.paths() {
            if a != excluded {
                ends.entry(p.last()).or_default().push(a);
            }
        }
        ends
    }

    /// Pairwise collisions among the stored paths from `t` on.
    pub fn audit(&self, t: Timestep) -> Vec<Conflict> {
        let paths: Vec<(AgentId, &Path)> = self.paths().collect();
        all_conflicts(&paths, t)
    }

    pub fn agent_at_path_end(&self, agent: AgentId, t: Timestep) -> bool {
        self.path(agent).end_time() <= t
    }
}

/// Agents that request the token at `t`, ascending id.
///
/// An agent requests when it has reached the end of its path; with `free_request`, agents
/// without an assigned task request as well.
pub fn request_order(token: &Token, t: Timestep, free_request: bool) -> Vec<AgentId> {
    (0..token.num_agents())
        .filter(|&a| token.agent_at_path_end(a, t) || (free_request && token.task_of(a).is_none()))
        .collect()
}

/// Read-only inputs of one token round, plus the event log.
pub struct TurnContext<'a> {
    pub map: &'a GridMap,
    pub h: &'a HeuristicTable,
    pub tasks: &'a [Task],
    /// Agent locations at `t`; constant during a round.
    pub locations: &'a [Cell],
    pub t: Timestep,
    pub events: &'a mut EventLog,
}

impl TurnContext<'_> {
    pub(crate) fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id]
    }
}

/// Tasks in the task set whose pickup and delivery are not the path end of any agent
/// other than `agent`, ignoring agents in `ignore_for(task)`. Sorted by
/// `(h(loc, pickup), id)`.
pub(crate) fn candidate_tasks(
    token: &Token,
    ctx: &TurnContext<'_>,
    agent: AgentId,
    ignore_assignee: bool,
) -> Vec<TaskId> {
    let loc = ctx.locations[agent];
    let ends = token.path_ends_excluding(agent);
    let blocked = |cell: Cell, assignee: Option<AgentId>| {
        ends.get(&cell)
            .is_some_and(|owners| owners.iter().any(|&o| !(ignore_assignee && Some(o) == assignee)))
    };
    let mut out: Vec<(u32, TaskId)> = token
        .taskset
        .iter()
        .filter(|&&id| {
            let task = ctx.task(id);
            let assignee = token.agent_of(id);
            !blocked(task.pickup, assignee) && !blocked(task.delivery, assignee)
        })
        .map(|&id| (ctx.h.h(loc, ctx.task(id).pickup), id))
        .collect();
    out.sort_unstable();
    out.into_iter().map(|(_, id)| id).collect()
}

/// Endpoints that are neither a delivery cell of a task in the task set nor the path
/// end of another agent.
pub(crate) fn parking_candidates(token: &Token, ctx: &TurnContext<'_>, agent: AgentId) -> Vec<Cell> {
    let ends = token.path_ends_excluding(agent);
    let deliveries: std::collections::HashSet<Cell> =
        token.taskset.iter().map(|&id| ctx.task(id).delivery).collect();
    ctx.h
        .endpoints()
        .iter()
        .copied()
        .filter(|e| !deliveries.contains(e) && !ends.contains_key(e))
        .collect()
}

/// Whether some task in the task set is delivered to `cell`.
pub(crate) fn is_pending_delivery(token: &Token, ctx: &TurnContext<'_>, cell: Cell) -> bool {
    token.taskset.iter().any(|&id| ctx.task(id).delivery == cell)
}

/// Outcome of giving an agent a path without a task.
pub(crate) enum Idle {
    Rested,
    Parked,
    NoPath(PlanError),
}

/// Rest in place if that blocks nobody, otherwise move to a free endpoint.
pub(crate) fn idle(token: &mut Token, ctx: &mut TurnContext<'_>, agent: AgentId) -> Idle {
    let loc = ctx.locations[agent];
    let rt = token.reservations_excluding(&[agent]);
    if ctx.map.is_endpoint(loc) && !is_pending_delivery(token, ctx, loc) && rt.rest_safe(loc, ctx.t) {
        token.set_path(agent, Path::rest(loc, ctx.t));
        ctx.events.record(ctx.t, agent, Action::Rest, None, Some(0));
        return Idle::Rested;
    }
    park(token, ctx, agent, &rt)
}

/// Path2: move to a parking candidate.
pub(crate) fn park(
    token: &mut Token,
    ctx: &mut TurnContext<'_>,
    agent: AgentId,
    rt: &ReservationTable,
) -> Idle {
    let loc = ctx.locations[agent];
    let candidates = parking_candidates(token, ctx, agent);
    match plan_path2(ctx.map, agent, loc, ctx.t, &candidates, rt, ctx.h) {
        Ok(planned) => {
            ctx.events
                .record(ctx.t, agent, Action::Park, None, Some(planned.cost()));
            token.set_path(agent, planned.path);
            Idle::Parked
        }
        Err(e) => Idle::NoPath(e),
    }
}
