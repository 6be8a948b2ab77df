mod common;

use mapd::environment::{check_well_formed, HeuristicTable};
use mapd::generate::{random_case, CaseLimits};
use mapd::sim::{audit_collisions, run, Algorithm, Metrics, SimConfig};
use mapd::token::Token;

fn service_times(m: &Metrics) -> Vec<u32> {
    m.records.iter().map(|r| r.service_time).collect()
}

#[test]
fn swap_example_distances() {
    let (inst, tasks) = common::swap_example();
    let h = HeuristicTable::build(&inst.map);
    let [a1, a2] = [inst.agent_starts[0], inst.agent_starts[1]];
    let [t1, t2] = [tasks[0].pickup, tasks[1].pickup];
    assert_eq!(
        [h.h(a1, t1), h.h(a1, t2), h.h(a2, t1), h.h(a2, t2)],
        [3, 5, 1, 1]
    );
}

#[test]
fn swap_example_first_decision() {
    let (inst, tasks) = common::swap_example();
    assert_eq!(common::first_decision_service_times(&inst, &tasks, false), vec![Some(3), Some(1)]);
    assert_eq!(common::first_decision_service_times(&inst, &tasks, true), vec![Some(1), Some(5)]);
}

#[test]
fn swap_example_lifelong() {
    let (inst, tasks) = common::swap_example();
    let h = HeuristicTable::build(&inst.map);
    let tp = run(&inst, &h, &tasks, &SimConfig::new(Algorithm::Tp)).unwrap();
    assert_eq!(service_times(&tp.metrics), vec![3, 1]);
    assert_eq!(tp.metrics.avg_service_time(), 2.0);
    // a2 is free again at t = 1 and takes t2 over from a1, which is still 4 steps away.
    let tpts = run(&inst, &h, &tasks, &SimConfig::new(Algorithm::Tpts)).unwrap();
    assert_eq!(service_times(&tpts.metrics), vec![1, 3]);
}

#[test]
fn random_cases_finish_without_collisions() {
    for seed in 0..30 {
        let case = random_case(seed, CaseLimits::default());
        assert!(check_well_formed(&case.instance, Some(&case.tasks)).is_well_formed());
        let h = HeuristicTable::build(&case.instance.map);
        for algo in Algorithm::ALL {
            let out = run(&case.instance, &h, &case.tasks, &SimConfig::new(algo))
                .unwrap_or_else(|e| panic!("seed {seed} {algo}: {e}"));
            assert_eq!(out.metrics.records.len(), case.tasks.len());
            assert!(out.end_t < out.cap);
            assert!(
                audit_collisions(&out.trajectory, &case.instance.map).is_empty(),
                "seed {seed} {algo}"
            );
        }
    }
}

#[test]
fn free_request_keeps_runs_valid() {
    for seed in 100..110 {
        let case = random_case(seed, CaseLimits::default());
        let h = HeuristicTable::build(&case.instance.map);
        for algo in [Algorithm::Tp, Algorithm::Tpts] {
            let mut config = SimConfig::new(algo);
            config.free_request = true;
            let out = run(&case.instance, &h, &case.tasks, &config).unwrap();
            assert!(audit_collisions(&out.trajectory, &case.instance.map).is_empty());
        }
    }
}

#[test]
fn token_starts_with_resting_agents() {
    let (inst, _) = common::swap_example();
    let token = Token::new(&inst.agent_starts);
    for (a, &s) in inst.agent_starts.iter().enumerate() {
        assert_eq!(token.path(a).last(), s);
        assert!(token.task_of(a).is_none());
    }
    assert!(token.audit(0).is_empty());
}
