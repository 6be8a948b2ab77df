//! `mapd`: run, sweep, check, and generate lifelong MAPD scenarios.
//!
//! Exit status: 0 on success, 1 on configuration errors (including an instance that
//! `check` finds not well-formed), 2 when a simulation fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mapd::batch::{Execution, Sweep};
use mapd::environment::{check_well_formed, HeuristicTable, MapdInstance};
use mapd::scenario::{
    load_map, load_tasks, parse_gen_spec, resolve_starts, AgentSpec, Scenario, ScenarioConfig, TaskSource,
};
use mapd::sim::{summary_csv, window_csv, Algorithm, SimConfig, SummaryRow};
use mapd::tasking::{generate_stream, write_tasks_csv, Frequency};

#[derive(Debug, Parser)]
#[command(name = "mapd", version, about = "Lifelong multi-agent pickup and delivery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write per_task.csv, summary.csv, and window.csv.
    Run(RunArgs),
    /// Simulate every combination of algorithms, agent counts, frequencies, and seeds.
    Sweep(SweepArgs),
    /// Report which well-formedness conditions an instance violates.
    Check(CheckArgs),
    /// Write a random task file.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Scenario file; other flags override its entries.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
    /// Number of agents on the first non-task endpoints, or `all`.
    #[arg(long, conflicts_with = "starts")]
    agents: Option<String>,
    /// File with header `row,col` and one start cell per line.
    #[arg(long)]
    starts: Option<PathBuf>,
    /// Task file.
    #[arg(long)]
    tasks: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Generated task stream: `n,frequency,seed`.
    #[arg(long, conflicts_with = "tasks")]
    gen: Option<String>,
    #[arg(long)]
    algo: Option<Algorithm>,
    #[arg(long)]
    window: Option<u32>,
    #[arg(long)]
    cap: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the seed of the generated task stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Free agents request the token even before reaching the end of their path.
    #[arg(long)]
    free_request: bool,
    #[arg(long)]
    node_cap: Option<usize>,
    /// Also write events.jsonl.
    #[arg(long)]
    events: bool,
    /// Simulate instances that are not well-formed.
    #[arg(long)]
    no_strict: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "tp,tpts,central")]
    algos: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', required = true)]
    agent_counts: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    frequencies: Vec<Frequency>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Tasks per run.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    window: u32,
    #[arg(long)]
    cap: Option<u32>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    free_request: bool,
    #[arg(long)]
    node_cap: Option<usize>,
    /// Run one simulation at a time.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    frequency: Frequency,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Simulation(String),
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }
}

fn parse_agents(v: &str) -> Result<AgentSpec, Failure> {
    if v == "all" {
        return Ok(AgentSpec::All);
    }
    v.parse()
        .map(AgentSpec::Count)
        .map_err(|_| Failure::Config(format!("--agents: expected a count or `all`, found {v:?}")))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))
}

fn scenario_config(args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let inst = &args.instance;
    let mut config = match &inst.scenario {
        Some(path) => ScenarioConfig::from_file(path).map_err(Failure::config)?,
        None => {
            let map = inst.map.clone().ok_or(Failure::Config("--map or --scenario is required".into()))?;
            let agents = match (&inst.agents, &inst.starts) {
                (Some(a), _) => parse_agents(a)?,
                (None, Some(s)) => AgentSpec::Starts(s.clone()),
                (None, None) => return Err(Failure::Config("--agents or --starts is required".into())),
            };
            let tasks = match (&inst.tasks, &args.gen) {
                (Some(t), _) => TaskSource::File(t.clone()),
                (None, Some(g)) => parse_gen_spec(g).map_err(Failure::config)?,
                (None, None) => return Err(Failure::Config("--tasks or --gen is required".into())),
            };
            let defaults = SimConfig::new(Algorithm::Tp);
            ScenarioConfig {
                map,
                agents,
                tasks,
                algorithm: Algorithm::Tp,
                window: defaults.window,
                cap: None,
                out: None,
                free_request: false,
                node_cap: defaults.node_cap,
                strict: true,
            }
        }
    };
    if inst.scenario.is_some() {
        if let Some(m) = &inst.map {
            config.map = m.clone();
        }
        if let Some(a) = &inst.agents {
            config.agents = parse_agents(a)?;
        }
        if let Some(s) = &inst.starts {
            config.agents = AgentSpec::Starts(s.clone());
        }
        if let Some(t) = &inst.tasks {
            config.tasks = TaskSource::File(t.clone());
        }
        if let Some(g) = &args.gen {
            config.tasks = parse_gen_spec(g).map_err(Failure::config)?;
        }
    }
    if let Some(seed) = args.seed {
        match &mut config.tasks {
            TaskSource::Generate { seed: s, .. } => *s = seed,
            TaskSource::File(_) => return Err(Failure::Config("--seed needs a generated task stream".into())),
        }
    }
    if let Some(a) = args.algo {
        config.algorithm = a;
    }
    if let Some(w) = args.window {
        config.window = w;
    }
    if args.cap.is_some() {
        config.cap = args.cap;
    }
    if args.out.is_some() {
        config.out = args.out.clone();
    }
    if args.free_request {
        config.free_request = true;
    }
    if let Some(n) = args.node_cap {
        config.node_cap = n;
    }
    if args.no_strict {
        config.strict = false;
    }
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let config = scenario_config(&args)?;
    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let scenario = Scenario::load(config).map_err(Failure::config)?;
    let output = scenario
        .run(args.events)
        .map_err(|e| Failure::Simulation(e.to_string()))?;
    let artifacts = scenario.artifacts(&output);
    create_dir(&out_dir)?;
    write(&out_dir.join("per_task.csv"), &artifacts.per_task)?;
    write(&out_dir.join("summary.csv"), &artifacts.summary)?;
    write(&out_dir.join("window.csv"), &artifacts.window)?;
    write(&out_dir.join("scenario.scn"), &scenario.config.to_text())?;
    if args.events {
        write(&out_dir.join("events.jsonl"), &artifacts.events)?;
    }
    print!("{}", artifacts.summary);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let map = load_map(&args.map).map_err(Failure::config)?;
    let mut config = SimConfig::new(Algorithm::Tp);
    config.window = args.window;
    config.cap = args.cap;
    config.free_request = args.free_request;
    if let Some(n) = args.node_cap {
        config.node_cap = n;
    }
    let sweep = Sweep {
        map,
        algorithms: args.algos,
        agent_counts: args.agent_counts,
        frequencies: args.frequencies,
        seeds: args.seeds,
        tasks_per_run: args.n,
        config,
    };
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let results = sweep.run(execution).map_err(Failure::config)?;
    create_dir(&args.out)?;
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut failures = Vec::new();
    for r in &results {
        match &r.outcome {
            Ok(out) => {
                let name = format!("window_{}.csv", r.label.stem());
                write(&args.out.join(name), &window_csv(&out.metrics.window_counts(args.window)))?;
                rows.extend(r.summary_row());
            }
            Err(e) => failures.push(format!("{}: {e}", r.label.stem())),
        }
    }
    let summary = summary_csv(&rows);
    write(&args.out.join("summary.csv"), &summary)?;
    print!("{summary}");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Simulation(failures.join("\n")))
    }
}

fn cmd_check(args: CheckArgs) -> Result<(), Failure> {
    let inst = &args.instance;
    let (map_path, agents, tasks_path) = match &inst.scenario {
        Some(p) => {
            let c = ScenarioConfig::from_file(p).map_err(Failure::config)?;
            let tasks = match c.tasks {
                TaskSource::File(t) => Some(t),
                TaskSource::Generate { .. } => None,
            };
            (c.map, c.agents, tasks)
        }
        None => {
            let map = inst.map.clone().ok_or(Failure::Config("--map or --scenario is required".into()))?;
            let agents = match (&inst.agents, &inst.starts) {
                (Some(a), _) => parse_agents(a)?,
                (None, Some(s)) => AgentSpec::Starts(s.clone()),
                (None, None) => AgentSpec::All,
            };
            (map, agents, inst.tasks.clone())
        }
    };
    let map = load_map(&map_path).map_err(Failure::config)?;
    let starts = resolve_starts(&map, &agents).map_err(Failure::config)?;
    let tasks = match &tasks_path {
        Some(p) => load_tasks(&map, p).map_err(Failure::config)?,
        None => Vec::new(),
    };
    let instance = MapdInstance::new(map, starts).map_err(Failure::config)?;
    instance.validate_tasks(&tasks).map_err(Failure::config)?;
    let verdict = check_well_formed(&instance, Some(&tasks));
    let h = HeuristicTable::build(&instance.map);
    println!(
        "{} agents, {} task endpoints, {} non-task endpoints, endpoint diameter {}",
        instance.num_agents(),
        instance.map.task_endpoints().len(),
        instance.map.nontask_endpoints().len(),
        h.endpoint_diameter()
    );
    if verdict.is_well_formed() {
        println!("well-formed");
        return Ok(());
    }
    let reasons: Vec<String> = verdict
        .violations
        .iter()
        .map(|v| v.describe(&instance.map))
        .collect();
    Err(Failure::Config(format!("not well-formed:\n  {}", reasons.join("\n  "))))
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let map = load_map(&args.map).map_err(Failure::config)?;
    let tasks = generate_stream(&map, args.n, args.frequency, args.seed).map_err(Failure::config)?;
    let text = write_tasks_csv(&map, &tasks);
    match &args.out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Check(a) => cmd_check(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Simulation(msg)) => {
            eprintln!("simulation failed: {msg}");
            ExitCode::from(2)
        }
    }
}
