use std::fmt::Write as _;

use serde::Serialize;

use crate::tasking::Task;
use crate::{TaskId, Timestep};

pub const TASK_METRICS_HEADER: &str = "task,release,pickup_time,finish_time,service_time";
pub const SUMMARY_HEADER: &str =
    "algorithm,agents,frequency,seed,makespan,avg_service_time,avg_runtime_ms";
pub const WINDOW_HEADER: &str = "t,added,executed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TaskRecord {
    pub task: TaskId,
    pub release: Timestep,
    pub pickup_time: Timestep,
    pub finish_time: Timestep,
    pub service_time: Timestep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// One record per task, in task id order.
    pub records: Vec<TaskRecord>,
    pub makespan: Timestep,
    /// Wall-clock milliseconds of each timestep's decision phase.
    pub runtime_per_timestep: Vec<f64>,
}

impl Metrics {
    /// Records of finished tasks; panics if some task is unfinished.
    pub fn from_tasks(tasks: &[Task], runtime_per_timestep: Vec<f64>) -> Self {
        let records: Vec<TaskRecord> = tasks
            .iter()
            .map(|task| TaskRecord {
                task: task.id,
                release: task.release,
                pickup_time: task.pickup_time.expect("finished tasks were picked up"),
                finish_time: task.finish_time.expect("every task finished"),
                service_time: task.service_time().expect("every task finished"),
            })
            .collect();
        Metrics {
            makespan: records.iter().map(|r| r.finish_time).max().unwrap_or(0),
            records,
            runtime_per_timestep,
        }
    }

    /// Mean service time; 0 without tasks.
    pub fn avg_service_time(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let total: u64 = self.records.iter().map(|r| r.service_time as u64).sum();
        total as f64 / self.records.len() as f64
    }

    pub fn avg_runtime_ms(&self) -> f64 {
        if self.runtime_per_timestep.is_empty() {
            return 0.0;
        }
        self.runtime_per_timestep.iter().sum::<f64>() / self.runtime_per_timestep.len() as f64
    }

    pub fn window_counts(&self, window: Timestep) -> Vec<WindowCount> {
        window_counts(&self.records, self.makespan, window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowCount {
    pub t: Timestep,
    pub added: usize,
    pub executed: usize,
}

/// For each `t` in `0..=last`, the number of tasks released and finished in
/// `[t - window + 1, t]`.
pub fn window_counts(records: &[TaskRecord], last: Timestep, window: Timestep) -> Vec<WindowCount> {
    let len = last as usize + 1;
    let mut released = vec![0usize; len];
    let mut finished = vec![0usize; len];
    for r in records {
        if (r.release as usize) < len {
            released[r.release as usize] += 1;
        }
        if (r.finish_time as usize) < len {
            finished[r.finish_time as usize] += 1;
        }
    }
    let w = window.max(1) as usize;
    let (mut added, mut executed) = (0usize, 0usize);
    (0..len)
        .map(|t| {
            added += released[t];
            executed += finished[t];
            if t >= w {
                added -= released[t - w];
                executed -= finished[t - w];
            }
            WindowCount {
                t: t as Timestep,
                added,
                executed,
            }
        })
        .collect()
}

pub fn task_metrics_csv(metrics: &Metrics) -> String {
    let mut out = String::from(TASK_METRICS_HEADER);
    out.push('\n');
    for r in &metrics.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.task, r.release, r.pickup_time, r.finish_time, r.service_time
        );
    }
    out
}

pub fn window_csv(counts: &[WindowCount]) -> String {
    let mut out = String::from(WINDOW_HEADER);
    out.push('\n');
    for c in counts {
        let _ = writeln!(out, "{},{},{}", c.t, c.added, c.executed);
    }
    out
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub agents: usize,
    pub frequency: String,
    pub seed: u64,
    pub makespan: Timestep,
    pub avg_service_time: f64,
    pub avg_runtime_ms: f64,
}

impl SummaryRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.4},{:.4}",
            self.algorithm,
            self.agents,
            self.frequency,
            self.seed,
            self.makespan,
            self.avg_service_time,
            self.avg_runtime_ms
        )
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}
