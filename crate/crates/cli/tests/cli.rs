use std::path::PathBuf;
use std::process::{Command, Output};

fn repo(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
        .display()
        .to_string()
}

fn mapd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapd")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_reports_each_condition() {
    let center = mapd(&[
        "check",
        "--map",
        &repo("maps/too-few-parking.map"),
        "--starts",
        &repo("maps/too-few-parking-starts.csv"),
    ]);
    assert_eq!(center.status.code(), Some(1));
    assert!(stderr(&center).contains("condition (b)"));
    assert!(!stderr(&center).contains("condition (c)"));

    let right = mapd(&["check", "--map", &repo("maps/separated.map")]);
    assert_eq!(right.status.code(), Some(1));
    assert!(stderr(&right).contains("endpoints (2, 0) and (2, 4)"));

    let left = mapd(&["check", "--map", &repo("maps/wellformed.map")]);
    assert_eq!(left.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&left.stdout).contains("well-formed"));
}

#[test]
fn run_corridor_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = mapd(&[
        "run",
        "--scenario",
        &repo("scenarios/corridor.scn"),
        "--out",
        out.to_str().unwrap(),
        "--events",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "algorithm,agents,frequency,seed,makespan,avg_service_time,avg_runtime_ms");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("tp,1,file,0,4,4.0000,"));
    let per_task = std::fs::read_to_string(out.join("per_task.csv")).unwrap();
    assert_eq!(per_task.lines().nth(1), Some("0,0,2,4,4"));
    assert!(out.join("window.csv").exists());
    assert!(std::fs::read_to_string(out.join("events.jsonl")).unwrap().ends_with('\n'));
    // The archived scenario reproduces the run.
    let again = dir.path().join("again");
    let o = mapd(&[
        "run",
        "--scenario",
        out.join("scenario.scn").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(again.join("per_task.csv")).unwrap(), per_task);
}

#[test]
fn flags_without_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = mapd(&[
        "run",
        "--gen",
        "20,1,4",
        "--algo",
        "tpts",
        "--out",
        out,
        "--agents",
        "5",
        "--map",
        &repo("maps/warehouse-15x21.map"),
        "--seed",
        "9",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("tpts,5,1,9,"));
}

#[test]
fn gen_is_deterministic() {
    let map = repo("maps/warehouse-15x21.map");
    let args = ["gen", "--map", &map, "--n", "3", "--frequency", "0.2", "--seed", "1"];
    let (a, b) = (mapd(&args), mapd(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let releases: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(releases, ["0", "5", "10"]);
}

#[test]
fn configuration_errors_exit_1() {
    let map = repo("maps/warehouse-15x21.map");
    for args in [
        vec!["run", "--bogus"],
        vec!["run", "--map", &map],
        vec!["run", "--map", &map, "--agents", "31", "--gen", "5,1,0"],
        vec!["run", "--map", "/nonexistent.map", "--agents", "1", "--gen", "5,1,0"],
        vec!["run", "--map", &map, "--agents", "2", "--gen", "5,1,0", "--algo", "cbs"],
        vec!["gen", "--map", &map, "--n", "3", "--frequency", "-1"],
        vec!["sweep", "--map", &map, "--agent-counts", "40"],
    ] {
        let o = mapd(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn simulation_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = mapd(&[
        "run",
        "--map",
        &repo("maps/warehouse-15x21.map"),
        "--agents",
        "3",
        "--gen",
        "10,1,0",
        "--cap",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("safety cap"));
}

#[test]
fn sweep_rows_sorted_and_windows_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = mapd(&[
        "sweep",
        "--map",
        &repo("maps/warehouse-15x21.map"),
        "--algos",
        "tpts,tp",
        "--agent-counts",
        "4,2",
        "--frequencies",
        "2,0.5",
        "--seeds",
        "1,0",
        "--n",
        "8",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let keys: Vec<(String, String, String, String)> = summary
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].into(), f[2].into(), f[1].into(), f[3].into())
        })
        .collect();
    assert_eq!(keys.len(), 16);
    assert_eq!(keys[0], ("tp".into(), "0.5".into(), "2".into(), "0".into()));
    assert_eq!(keys[1], ("tp".into(), "0.5".into(), "2".into(), "1".into()));
    assert_eq!(keys[2], ("tp".into(), "0.5".into(), "4".into(), "0".into()));
    assert_eq!(keys[4], ("tp".into(), "2".into(), "2".into(), "0".into()));
    assert_eq!(keys[8].0, "tpts");
    assert!(dir.path().join("window_tpts_a4_f0.5_s1.csv").exists());

    let seq = tempfile::tempdir().unwrap();
    let o = mapd(&[
        "sweep",
        "--map",
        &repo("maps/warehouse-15x21.map"),
        "--algos",
        "tp,tpts",
        "--agent-counts",
        "2,4",
        "--frequencies",
        "0.5,2",
        "--seeds",
        "0,1",
        "--n",
        "8",
        "--sequential",
        "--out",
        seq.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let masked = |s: &str| -> Vec<String> {
        s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    let seq_summary = std::fs::read_to_string(seq.path().join("summary.csv")).unwrap();
    assert_eq!(masked(&summary), masked(&seq_summary));
}
