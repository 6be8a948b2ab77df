//! Scenario files: a plain `key = value` description of one simulation.
//!
//! ```text
//! # comment
//! map = warehouse.map          # required; relative to the scenario file
//! agents = 10                  # N agents on the first N non-task endpoints, or `all`
//! starts = starts.csv          # instead of `agents`: header `row,col`, one start per line
//! tasks = tasks.csv            # task file, or
//! gen = 100,0.5,7              # n, frequency, seed
//! algo = tpts                  # tp | tpts | central (default tp)
//! window = 100
//! cap = 50000                  # safety cap; default derived from the instance
//! out = results                # output directory (used by the CLI)
//! free_request = false
//! node_cap = 50000             # CBS expansion limit per call
//! strict = true                # reject instances that are not well-formed
//! prng = chacha8               # the only generator
//! ```
//!
//! Exactly one of `agents`/`starts` and one of `tasks`/`gen` must be present. Keys may
//! appear in any order but only once; unknown keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};

use thiserror::Error;

use crate::environment::{check_well_formed, Cell, GridMap, HeuristicTable, MapdInstance, Verdict};
use crate::events::to_json_lines;
use crate::sim::{run, summary_csv, task_metrics_csv, window_csv, Algorithm, RunOutput, SimConfig, SimError, SummaryRow};
use crate::tasking::{generate_stream, parse_tasks_csv, Frequency, Task};
use crate::Timestep;

pub const PRNG_NAME: &str = "chacha8";
pub const STARTS_HEADER: &str = "row,col";

const KEYS: [&str; 13] = [
    "map",
    "agents",
    "starts",
    "tasks",
    "gen",
    "algo",
    "window",
    "cap",
    "out",
    "free_request",
    "node_cap",
    "strict",
    "prng",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key {key:?} on line {line}")]
    UnknownKey { line: usize, key: String },
    #[error("key {key:?} given twice (line {line})")]
    DuplicateKey { line: usize, key: String },
    #[error("missing key {0:?}")]
    Missing(&'static str),
    #[error("keys {0:?} and {1:?} are mutually exclusive")]
    Exclusive(&'static str, &'static str),
    #[error("invalid value for {key}: {message}")]
    Value { key: &'static str, message: String },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("instance is not well-formed: {0}")]
    NotWellFormed(String),
}

fn value_err(key: &'static str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Value {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSpec {
    /// The first `n` non-task endpoints in row-major order.
    Count(usize),
    /// One agent on every non-task endpoint.
    All,
    Starts(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskSource {
    File(PathBuf),
    Generate {
        n: usize,
        frequency: Frequency,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub map: PathBuf,
    pub agents: AgentSpec,
    pub tasks: TaskSource,
    pub algorithm: Algorithm,
    pub window: Timestep,
    pub cap: Option<Timestep>,
    pub out: Option<PathBuf>,
    pub free_request: bool,
    pub node_cap: usize,
    pub strict: bool,
}

fn parse_bool(key: &'static str, v: &str) -> Result<bool, ScenarioError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(value_err(key, format!("expected true or false, found {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T, ScenarioError> {
    v.parse()
        .map_err(|_| value_err(key, format!("expected a nonnegative integer, found {v:?}")))
}

/// `n,frequency,seed`.
pub fn parse_gen_spec(v: &str) -> Result<TaskSource, ScenarioError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let [n, f, seed] = parts[..] else {
        return Err(value_err("gen", format!("expected n,frequency,seed, found {v:?}")));
    };
    Ok(TaskSource::Generate {
        n: parse_num("gen", n)?,
        frequency: f.parse().map_err(|e| value_err("gen", format!("{e}")))?,
        seed: parse_num("gen", seed)?,
    })
}

impl ScenarioConfig {
    /// Parses scenario text; relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &FsPath) -> Result<Self, ScenarioError> {
        let mut entries: BTreeMap<&'static str, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ScenarioError::Syntax {
                    line: line_no,
                    message: format!("expected key = value, found {line:?}"),
                });
            };
            let k = k.trim();
            let Some(&key) = KEYS.iter().find(|&&known| known == k) else {
                return Err(ScenarioError::UnknownKey {
                    line: line_no,
                    key: k.to_string(),
                });
            };
            if entries.insert(key, v.trim().to_string()).is_some() {
                return Err(ScenarioError::DuplicateKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
        }
        let path = |v: &str| base_dir.join(v);
        let get = |k: &str| entries.get(k).map(String::as_str);

        let map = path(get("map").ok_or(ScenarioError::Missing("map"))?);
        let agents = match (get("agents"), get("starts")) {
            (Some(_), Some(_)) => return Err(ScenarioError::Exclusive("agents", "starts")),
            (None, None) => return Err(ScenarioError::Missing("agents")),
            (Some("all"), None) => AgentSpec::All,
            (Some(n), None) => AgentSpec::Count(parse_num("agents", n)?),
            (None, Some(p)) => AgentSpec::Starts(path(p)),
        };
        let tasks = match (get("tasks"), get("gen")) {
            (Some(_), Some(_)) => return Err(ScenarioError::Exclusive("tasks", "gen")),
            (None, None) => return Err(ScenarioError::Missing("tasks")),
            (Some(p), None) => TaskSource::File(path(p)),
            (None, Some(spec)) => parse_gen_spec(spec)?,
        };
        if let Some(prng) = get("prng") {
            if prng != PRNG_NAME {
                return Err(value_err("prng", format!("only {PRNG_NAME} is supported")));
            }
        }
        let defaults = SimConfig::new(Algorithm::Tp);
        Ok(ScenarioConfig {
            map,
            agents,
            tasks,
            algorithm: match get("algo") {
                Some(a) => a.parse().map_err(|e: String| value_err("algo", e))?,
                None => Algorithm::Tp,
            },
            window: get("window").map_or(Ok(defaults.window), |v| parse_num("window", v))?,
            cap: get("cap").map(|v| parse_num("cap", v)).transpose()?,
            out: get("out").map(path),
            free_request: get("free_request").map_or(Ok(false), |v| parse_bool("free_request", v))?,
            node_cap: get("node_cap").map_or(Ok(defaults.node_cap), |v| parse_num("node_cap", v))?,
            strict: get("strict").map_or(Ok(true), |v| parse_bool("strict", v))?,
        })
    }

    pub fn from_file(path: &FsPath) -> Result<Self, ScenarioError> {
        let text = read(path)?;
        Self::parse(&text, path.parent().unwrap_or(FsPath::new(".")))
    }

    /// Scenario text that parses back to `self` (paths are written as given).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "map = {}", self.map.display());
        match &self.agents {
            AgentSpec::Count(n) => {
                let _ = writeln!(out, "agents = {n}");
            }
            AgentSpec::All => out.push_str("agents = all\n"),
            AgentSpec::Starts(p) => {
                let _ = writeln!(out, "starts = {}", p.display());
            }
        }
        match &self.tasks {
            TaskSource::File(p) => {
                let _ = writeln!(out, "tasks = {}", p.display());
            }
            TaskSource::Generate { n, frequency, seed } => {
                let _ = writeln!(out, "gen = {n},{frequency},{seed}");
            }
        }
        let _ = writeln!(out, "algo = {}", self.algorithm);
        let _ = writeln!(out, "window = {}", self.window);
        if let Some(cap) = self.cap {
            let _ = writeln!(out, "cap = {cap}");
        }
        if let Some(p) = &self.out {
            let _ = writeln!(out, "out = {}", p.display());
        }
        let _ = writeln!(out, "free_request = {}", self.free_request);
        let _ = writeln!(out, "node_cap = {}", self.node_cap);
        let _ = writeln!(out, "strict = {}", self.strict);
        let _ = writeln!(out, "prng = {PRNG_NAME}");
        out
    }

    pub fn sim_config(&self, record_events: bool) -> SimConfig {
        SimConfig {
            algorithm: self.algorithm,
            window: self.window,
            cap: self.cap,
            free_request: self.free_request,
            node_cap: self.node_cap,
            record_events,
            audit_token: true,
        }
    }
}

fn read(path: &FsPath) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a starts file: header `row,col`, then one `row,col` per agent.
pub fn parse_starts_csv(map: &GridMap, text: &str) -> Result<Vec<Cell>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == STARTS_HEADER => {}
        _ => return Err(format!("line 1: expected header {STARTS_HEADER:?}")),
    }
    let mut starts = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let coords: Vec<&str> = line.split(',').map(str::trim).collect();
        let [r, c] = coords[..] else {
            return Err(format!("line {}: expected row,col", i + 1));
        };
        let (r, c) = match (r.parse(), c.parse()) {
            (Ok(r), Ok(c)) => (r, c),
            _ => return Err(format!("line {}: not a nonnegative integer pair", i + 1)),
        };
        starts.push(map.cell(r, c).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(starts)
}

/// Start cells for `spec` on `map`.
pub fn resolve_starts(map: &GridMap, spec: &AgentSpec) -> Result<Vec<Cell>, ScenarioError> {
    match spec {
        AgentSpec::Count(n) => {
            let available = map.nontask_endpoints();
            if *n > available.len() {
                return Err(value_err(
                    "agents",
                    format!("{n} agents but only {} non-task endpoints", available.len()),
                ));
            }
            Ok(available[..*n].to_vec())
        }
        AgentSpec::All => Ok(map.nontask_endpoints().to_vec()),
        AgentSpec::Starts(p) => parse_starts_csv(map, &read(p)?).map_err(|message| ScenarioError::File {
            path: p.clone(),
            message,
        }),
    }
}

/// Reads and parses a map file.
pub fn load_map(path: &FsPath) -> Result<GridMap, ScenarioError> {
    GridMap::parse(&read(path)?).map_err(|e| ScenarioError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a task file against `map`.
pub fn load_tasks(map: &GridMap, path: &FsPath) -> Result<Vec<Task>, ScenarioError> {
    parse_tasks_csv(map, &read(path)?).map_err(|e| ScenarioError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// A loaded scenario, ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub instance: MapdInstance,
    pub h: HeuristicTable,
    pub tasks: Vec<Task>,
    pub verdict: Verdict,
}

/// CSV and JSON-lines artifacts of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub per_task: String,
    pub summary: String,
    pub window: String,
    pub events: String,
}

impl Scenario {
    pub fn load(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        let map = load_map(&config.map)?;
        let starts = resolve_starts(&map, &config.agents)?;
        let instance = MapdInstance::new(map, starts).map_err(|e| value_err("starts", e.to_string()))?;
        let tasks = match &config.tasks {
            TaskSource::File(p) => load_tasks(&instance.map, p)?,
            TaskSource::Generate { n, frequency, seed } => {
                generate_stream(&instance.map, *n, *frequency, *seed).map_err(|e| value_err("gen", e.to_string()))?
            }
        };
        instance
            .validate_tasks(&tasks)
            .map_err(|e| value_err("tasks", e.to_string()))?;
        let verdict = check_well_formed(&instance, Some(&tasks));
        if config.strict && !verdict.is_well_formed() {
            let reasons: Vec<String> = verdict
                .violations
                .iter()
                .map(|v| v.describe(&instance.map))
                .collect();
            return Err(ScenarioError::NotWellFormed(reasons.join("; ")));
        }
        let h = HeuristicTable::build(&instance.map);
        Ok(Scenario {
            config,
            instance,
            h,
            tasks,
            verdict,
        })
    }

    pub fn run(&self, record_events: bool) -> Result<RunOutput, SimError> {
        run(&self.instance, &self.h, &self.tasks, &self.config.sim_config(record_events))
    }

    /// Frequency and seed columns of the summary row; `file` and 0 for task files.
    pub fn stream_label(&self) -> (String, u64) {
        match &self.config.tasks {
            TaskSource::Generate { frequency, seed, .. } => (frequency.to_string(), *seed),
            TaskSource::File(_) => ("file".to_string(), 0),
        }
    }

    pub fn artifacts(&self, out: &RunOutput) -> Artifacts {
        let (frequency, seed) = self.stream_label();
        let row = SummaryRow {
            algorithm: self.config.algorithm.name().to_string(),
            agents: self.instance.num_agents(),
            frequency,
            seed,
            makespan: out.metrics.makespan,
            avg_service_time: out.metrics.avg_service_time(),
            avg_runtime_ms: out.metrics.avg_runtime_ms(),
        };
        Artifacts {
            per_task: task_metrics_csv(&out.metrics),
            summary: summary_csv(&[row]),
            window: window_csv(&out.metrics.window_counts(self.config.window)),
            events: to_json_lines(&out.events),
        }
    }
}
