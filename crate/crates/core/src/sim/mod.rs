//! The discrete-time simulation loop.

mod audit;
mod metrics;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

pub use audit::{audit_collisions, Trajectory, Violation};
pub use metrics::{
    summary_csv, task_metrics_csv, window_counts, window_csv, Metrics, SummaryRow, TaskRecord,
    WindowCount, SUMMARY_HEADER, TASK_METRICS_HEADER, WINDOW_HEADER,
};

use crate::cbs::DEFAULT_NODE_CAP;
use crate::central::{central_step, CentralContext, CentralError, CentralState};
use crate::environment::{Cell, HeuristicTable, InstanceError, MapdInstance};
use crate::events::{Event, EventLog};
use crate::tasking::{release_due, Task, TaskError, TaskState};
use crate::token::{request_order, tp_token_turn, tpts_get_task, ProtocolError, Token, TurnContext};
use crate::Timestep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Tp,
    Tpts,
    Central,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Tp, Algorithm::Tpts, Algorithm::Central];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tp => "tp",
            Algorithm::Tpts => "tpts",
            Algorithm::Central => "central",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tp" => Ok(Algorithm::Tp),
            "tpts" => Ok(Algorithm::Tpts),
            "central" => Ok(Algorithm::Central),
            other => Err(format!("unknown algorithm {other:?} (expected tp, tpts, or central)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub algorithm: Algorithm,
    /// Length of the sliding window for added/executed counts.
    pub window: Timestep,
    /// Abort once this timestep is reached with tasks left; `None` uses
    /// [`default_safety_cap`].
    pub cap: Option<Timestep>,
    /// Agents without a task request the token even in the middle of their path.
    pub free_request: bool,
    /// Expansion limit of each CBS call.
    pub node_cap: usize,
    pub record_events: bool,
    /// Check the token's paths for collisions after every decision phase.
    pub audit_token: bool,
}

impl SimConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SimConfig {
            algorithm,
            window: 100,
            cap: None,
            free_request: false,
            node_cap: DEFAULT_NODE_CAP,
            record_events: false,
            audit_token: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Central(#[from] CentralError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("safety cap t={cap} reached with {unfinished} of {total} tasks unfinished")]
    SafetyCap {
        cap: Timestep,
        unfinished: usize,
        total: usize,
    },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trajectory: Trajectory,
    pub events: Vec<Event>,
    /// Last simulated timestep.
    pub end_t: Timestep,
    pub cap: Timestep,
}

/// `20 * (endpoint diameter * task count + last release)`, at least 20.
pub fn default_safety_cap(h: &HeuristicTable, tasks: &[Task]) -> Timestep {
    let last_release = tasks.iter().map(|t| t.release).max().unwrap_or(0) as u64;
    let diameter = h.endpoint_diameter().max(1) as u64;
    let cap = 20 * (diameter * tasks.len() as u64 + last_release);
    cap.clamp(20, Timestep::MAX as u64) as Timestep
}

enum Planner {
    Token(Token),
    Central(CentralState),
}

impl Planner {
    fn location(&self, agent: usize, t: Timestep) -> Cell {
        match self {
            Planner::Token(token) => token.path(agent).at(t),
            Planner::Central(state) => state.path(agent).at(t),
        }
    }
}

/// Simulates `tasks` on `instance` until every task is finished.
///
/// Releases must be nondecreasing; tasks are identified by their position.
pub fn run(
    instance: &MapdInstance,
    h: &HeuristicTable,
    tasks: &[Task],
    config: &SimConfig,
) -> Result<RunOutput, SimError> {
    instance.validate_tasks(tasks)?;
    let map = &instance.map;
    let mut tasks: Vec<Task> = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| Task::new(i, t.pickup, t.delivery, t.release))
        .collect();
    let total = tasks.len();
    let cap = config.cap.unwrap_or_else(|| default_safety_cap(h, &tasks));
    let starts = &instance.agent_starts;
    let n = starts.len();
    let mut planner = match config.algorithm {
        Algorithm::Tp | Algorithm::Tpts => Planner::Token(Token::new(starts)),
        Algorithm::Central => Planner::Central(CentralState::new(starts)),
    };
    let mut locations: Vec<Cell> = starts.clone();
    let mut trajectory = Trajectory::new(starts);
    let mut events = EventLog::new(config.record_events);
    let mut runtimes = Vec::new();
    let mut t: Timestep = 0;

    loop {
        match &mut planner {
            Planner::Token(token) => release_due(&mut tasks, t, token.taskset_mut()),
            Planner::Central(state) => release_due(&mut tasks, t, state.taskset_mut()),
        };
        settle(&mut planner, &mut tasks, &locations, t, config.algorithm)?;
        let finished = count_finished(&tasks);
        if finished == total {
            break;
        }
        if t >= cap {
            return Err(SimError::SafetyCap {
                cap,
                unfinished: total - finished,
                total,
            });
        }

        let clock = Instant::now();
        match &mut planner {
            Planner::Token(token) => {
                let order = request_order(token, t, config.free_request);
                let mut served = BTreeSet::new();
                for agent in order {
                    if served.contains(&agent) {
                        continue;
                    }
                    let mut ctx = TurnContext {
                        map,
                        h,
                        tasks: &tasks,
                        locations: &locations,
                        t,
                        events: &mut events,
                    };
                    if config.algorithm == Algorithm::Tp {
                        tp_token_turn(token, &mut ctx, agent)?;
                    } else {
                        let at_end = token.agent_at_path_end(agent, t);
                        tpts_get_task(token, &mut ctx, agent, at_end, &mut served)?;
                    }
                }
            }
            Planner::Central(state) => {
                let mut ctx = CentralContext {
                    map,
                    h,
                    tasks: &mut tasks,
                    locations: &locations,
                    t,
                    events: &mut events,
                    node_cap: config.node_cap,
                };
                central_step(state, &mut ctx)?;
            }
        }
        runtimes.push(clock.elapsed().as_secs_f64() * 1e3);
        if config.audit_token {
            if let Planner::Token(token) = &planner {
                if let Some(&conflict) = token.audit(t).first() {
                    return Err(ProtocolError::Collision { t, conflict }.into());
                }
            }
        }

        settle(&mut planner, &mut tasks, &locations, t, config.algorithm)?;
        if count_finished(&tasks) == total {
            break;
        }
        for (a, loc) in locations.iter_mut().enumerate().take(n) {
            *loc = planner.location(a, t + 1);
        }
        trajectory.push(&locations);
        t += 1;
    }

    Ok(RunOutput {
        metrics: Metrics::from_tasks(&tasks, runtimes),
        trajectory,
        events: events.into_events(),
        end_t: t,
        cap,
    })
}

fn count_finished(tasks: &[Task]) -> usize {
    tasks
        .iter()
        .filter(|task| task.state == TaskState::Finished)
        .count()
}

/// Pickups and deliveries at the current locations.
fn settle(
    planner: &mut Planner,
    tasks: &mut [Task],
    locations: &[Cell],
    t: Timestep,
    algorithm: Algorithm,
) -> Result<(), SimError> {
    match planner {
        Planner::Token(token) => {
            for (agent, &loc) in locations.iter().enumerate() {
                let Some(id) = token.task_of(agent) else {
                    continue;
                };
                let task = &mut tasks[id];
                if task.state == TaskState::Pending && loc == task.pickup {
                    task.start_execution(agent, t)?;
                    if algorithm == Algorithm::Tpts {
                        token.taskset_mut().remove(&id);
                    }
                }
                if task.state == TaskState::Executing && loc == task.delivery {
                    task.finish(t)?;
                    token.unassign(agent);
                }
            }
        }
        // Pickups happen during promotion.
        Planner::Central(state) => {
            for (agent, &loc) in locations.iter().enumerate() {
                let Some(id) = state.executing(agent) else {
                    continue;
                };
                if loc == tasks[id].delivery {
                    tasks[id].finish(t)?;
                    state.release_agent(agent);
                }
            }
        }
    }
    Ok(())
}
