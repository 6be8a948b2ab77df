//! Tasks, their lifecycle, the task set, and seeded task-stream generation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{Cell, GridMap};
use crate::{AgentId, TaskId, Timestep};

/// Name of the generator behind [`generate_stream`], recorded in scenario files.
pub const PRNG_NAME: &str = "chacha8";

pub const TASK_CSV_HEADER: &str = "release,pickup_row,pickup_col,delivery_row,delivery_col";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("task generation needs at least 2 task endpoints, map has {0}")]
    TooFewTaskEndpoints(usize),
    #[error("task frequency must be a positive number, got {0:?}")]
    InvalidFrequency(String),
    #[error("task file line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("task {task}: illegal transition {from:?} -> {to:?}")]
    IllegalTransition {
        task: TaskId,
        from: TaskState,
        to: TaskState,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskState {
    Unreleased,
    Pending,
    Executing,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub pickup: Cell,
    pub delivery: Cell,
    pub release: Timestep,
    pub state: TaskState,
    /// The executing agent; fixed once execution starts.
    pub assignee: Option<AgentId>,
    pub pickup_time: Option<Timestep>,
    pub finish_time: Option<Timestep>,
}

impl Task {
    pub fn new(id: TaskId, pickup: Cell, delivery: Cell, release: Timestep) -> Self {
        Task {
            id,
            pickup,
            delivery,
            release,
            state: TaskState::Unreleased,
            assignee: None,
            pickup_time: None,
            finish_time: None,
        }
    }

    fn transition(&mut self, to: TaskState) -> Result<(), TaskError> {
        let ok = matches!(
            (self.state, to),
            (TaskState::Unreleased, TaskState::Pending)
                | (TaskState::Pending, TaskState::Executing)
                | (TaskState::Executing, TaskState::Finished)
        );
        if !ok {
            return Err(TaskError::IllegalTransition {
                task: self.id,
                from: self.state,
                to,
            });
        }
        self.state = to;
        Ok(())
    }

    pub fn mark_released(&mut self) -> Result<(), TaskError> {
        self.transition(TaskState::Pending)
    }

    pub fn start_execution(&mut self, agent: AgentId, t: Timestep) -> Result<(), TaskError> {
        self.transition(TaskState::Executing)?;
        self.assignee = Some(agent);
        self.pickup_time = Some(t);
        Ok(())
    }

    pub fn finish(&mut self, t: Timestep) -> Result<(), TaskError> {
        self.transition(TaskState::Finished)?;
        self.finish_time = Some(t);
        Ok(())
    }

    /// `finish_time - release` for finished tasks.
    pub fn service_time(&self) -> Option<Timestep> {
        self.finish_time.map(|f| f - self.release)
    }
}

/// Ids of the tasks currently in the task set, kept in ascending id (= release) order.
pub type TaskSet = BTreeSet<TaskId>;

/// Tasks released per timestep, held as an exact fraction `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frequency {
    num: u64,
    den: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Frequency {
    const SCALE: u64 = 1_000_000;

    pub fn new(num: u64, den: u64) -> Option<Self> {
        if num == 0 || den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(Frequency {
            num: num / g,
            den: den / g,
        })
    }

    /// Rounds to a multiple of 1e-6.
    pub fn from_f64(f: f64) -> Option<Self> {
        if !f.is_finite() || f <= 0.0 || f > 1e9 {
            return None;
        }
        Frequency::new((f * Self::SCALE as f64).round() as u64, Self::SCALE)
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Release timestep of the `j`-th task (0-based): `floor(j / f)`.
    ///
    /// Equivalently the smallest `t` with `ceil((t + 1) * f) > j`, so `f = 0.2` gives
    /// 0, 5, 10, ... and `f = 10` releases ten tasks at every timestep.
    pub fn release_of(self, j: usize) -> Timestep {
        let t = (j as u128 * self.den as u128) / self.num as u128;
        Timestep::try_from(t).expect("release timestep overflows")
    }
}

impl Ord for Frequency {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Frequency {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}", self.as_f64())
        }
    }
}

impl FromStr for Frequency {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .parse::<f64>()
            .ok()
            .and_then(Frequency::from_f64)
            .ok_or_else(|| TaskError::InvalidFrequency(s.to_string()))
    }
}

/// `n` tasks with uniformly drawn distinct pickup/delivery task endpoints.
pub fn generate_stream(
    map: &GridMap,
    n: usize,
    frequency: Frequency,
    seed: u64,
) -> Result<Vec<Task>, TaskError> {
    let endpoints = map.task_endpoints();
    if endpoints.len() < 2 {
        return Err(TaskError::TooFewTaskEndpoints(endpoints.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = endpoints.len();
    Ok((0..n)
        .map(|j| {
            let p = rng.gen_range(0..k);
            let mut d = rng.gen_range(0..k - 1);
            if d >= p {
                d += 1;
            }
            Task::new(j, endpoints[p], endpoints[d], frequency.release_of(j))
        })
        .collect())
}

/// Moves every unreleased task with `release == t` into the task set.
///
/// `tasks` must be sorted by release. Returns the number released.
pub fn release_due(tasks: &mut [Task], t: Timestep, set: &mut TaskSet) -> usize {
    let lo = tasks.partition_point(|task| task.release < t);
    let hi = tasks.partition_point(|task| task.release <= t);
    let mut count = 0;
    for task in &mut tasks[lo..hi] {
        if task.state == TaskState::Unreleased {
            task.state = TaskState::Pending;
            set.insert(task.id);
            count += 1;
        }
    }
    count
}

pub fn write_tasks_csv(map: &GridMap, tasks: &[Task]) -> String {
    let mut out = String::from(TASK_CSV_HEADER);
    out.push('\n');
    for t in tasks {
        let (pr, pc) = map.coords(t.pickup);
        let (dr, dc) = map.coords(t.delivery);
        out.push_str(&format!("{},{pr},{pc},{dr},{dc}\n", t.release));
    }
    out
}

/// Reads a task file; ids follow line order and releases must be nondecreasing.
pub fn parse_tasks_csv(map: &GridMap, text: &str) -> Result<Vec<Task>, TaskError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TASK_CSV_HEADER => {}
        _ => {
            return Err(TaskError::Csv {
                line: 1,
                message: format!("expected header {TASK_CSV_HEADER:?}"),
            })
        }
    }
    let mut tasks: Vec<Task> = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TaskError::Csv {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let mut nums = [0usize; 5];
        for (slot, f) in nums.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| err(format!("not a nonnegative integer: {f:?}")))?;
        }
        let release = Timestep::try_from(nums[0]).map_err(|_| err("release too large".into()))?;
        let pickup = map.cell(nums[1], nums[2]).map_err(|e| err(e.to_string()))?;
        let delivery = map.cell(nums[3], nums[4]).map_err(|e| err(e.to_string()))?;
        if tasks.last().is_some_and(|prev| prev.release > release) {
            return Err(err("releases must be nondecreasing".into()));
        }
        tasks.push(Task::new(tasks.len(), pickup, delivery, release));
    }
    Ok(tasks)
}
