//! Many independent simulations over a shared read-only map and heuristic table.
//!
//! Results always come back in job order, whichever [`Execution`] is used.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::environment::{GridMap, HeuristicTable, MapdInstance};
use crate::sim::{run, Algorithm, RunOutput, SimConfig, SimError, SummaryRow};
use crate::tasking::{generate_stream, Frequency, Task, TaskError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JobLabel {
    pub algorithm: Algorithm,
    pub frequency: Frequency,
    pub agents: usize,
    pub seed: u64,
}

impl JobLabel {
    /// File-name stem such as `tpts_a10_f0.5_s3`.
    pub fn stem(&self) -> String {
        format!(
            "{}_a{}_f{}_s{}",
            self.algorithm, self.agents, self.frequency, self.seed
        )
    }
}

/// One simulation; inputs are borrowed so that jobs can share them.
#[derive(Debug, Clone)]
pub struct Job<'a> {
    pub label: JobLabel,
    pub instance: &'a MapdInstance,
    pub h: &'a HeuristicTable,
    pub tasks: &'a [Task],
    pub config: SimConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// On the rayon pool; sequential when the `parallel` feature is off.
    Parallel,
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub label: JobLabel,
    pub outcome: Result<RunOutput, SimError>,
}

impl JobResult {
    pub fn summary_row(&self) -> Option<SummaryRow> {
        let out = self.outcome.as_ref().ok()?;
        Some(SummaryRow {
            algorithm: self.label.algorithm.name().to_string(),
            agents: self.label.agents,
            frequency: self.label.frequency.to_string(),
            seed: self.label.seed,
            makespan: out.metrics.makespan,
            avg_service_time: out.metrics.avg_service_time(),
            avg_runtime_ms: out.metrics.avg_runtime_ms(),
        })
    }
}

fn run_job(job: &Job<'_>) -> JobResult {
    JobResult {
        label: job.label,
        outcome: run(job.instance, job.h, job.tasks, &job.config),
    }
}

pub fn run_batch(jobs: &[Job<'_>], execution: Execution) -> Vec<JobResult> {
    match execution {
        Execution::Sequential => jobs.iter().map(run_job).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => jobs.par_iter().map(run_job).collect(),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => jobs.iter().map(run_job).collect(),
    }
}

fn sorted<T: Ord + Clone>(items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.sort();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SweepError {
    #[error("{agents} agents requested but the map has only {available} non-task endpoints")]
    TooManyAgents { agents: usize, available: usize },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("sweep has no {0}")]
    Empty(&'static str),
}

/// Cross product of algorithms, agent counts, frequencies, and seeds on one map.
///
/// Agents start on the first non-task endpoints in row-major order. Every algorithm
/// and agent count sees the same task stream for a given frequency and seed.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub map: GridMap,
    pub algorithms: Vec<Algorithm>,
    pub agent_counts: Vec<usize>,
    pub frequencies: Vec<Frequency>,
    pub seeds: Vec<u64>,
    pub tasks_per_run: usize,
    /// Settings shared by all runs; the algorithm field is overwritten per job.
    pub config: SimConfig,
}

impl Sweep {
    /// Runs every combination. Results are sorted by algorithm (tp, tpts, central),
    /// then frequency, agents, and seed.
    pub fn run(&self, execution: Execution) -> Result<Vec<JobResult>, SweepError> {
        let algorithms = sorted(&self.algorithms);
        let agent_counts = sorted(&self.agent_counts);
        let frequencies = sorted(&self.frequencies);
        let seeds = sorted(&self.seeds);
        for (name, empty) in [
            ("algorithms", algorithms.is_empty()),
            ("agent counts", agent_counts.is_empty()),
            ("frequencies", frequencies.is_empty()),
            ("seeds", seeds.is_empty()),
        ] {
            if empty {
                return Err(SweepError::Empty(name));
            }
        }

        let h = HeuristicTable::build(&self.map);
        let instances = agent_counts
            .iter()
            .map(|&n| {
                MapdInstance::with_agents_on_nontask_endpoints(self.map.clone(), n).ok_or(
                    SweepError::TooManyAgents {
                        agents: n,
                        available: self.map.nontask_endpoints().len(),
                    },
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut streams = Vec::new();
        for &f in &frequencies {
            for &seed in &seeds {
                streams.push(generate_stream(&self.map, self.tasks_per_run, f, seed)?);
            }
        }

        let mut jobs = Vec::new();
        for &algorithm in &algorithms {
            for (fi, &frequency) in frequencies.iter().enumerate() {
                for (ai, &agents) in agent_counts.iter().enumerate() {
                    for (si, &seed) in seeds.iter().enumerate() {
                        let mut config = self.config.clone();
                        config.algorithm = algorithm;
                        jobs.push(Job {
                            label: JobLabel {
                                algorithm,
                                frequency,
                                agents,
                                seed,
                            },
                            instance: &instances[ai],
                            h: &h,
                            tasks: &streams[fi * seeds.len() + si],
                            config,
                        });
                    }
                }
            }
        }
        Ok(run_batch(&jobs, execution))
    }
}
