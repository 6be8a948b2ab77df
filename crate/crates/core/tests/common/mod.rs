//! Oracles and hand-built instances shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use mapd::environment::{Cell, GridMap, MapdInstance};
use mapd::pathing::{Path, ReservationTable};
use mapd::tasking::Task;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Position of a reserved path at `t`: first cell before it starts, last cell after it ends.
fn position(path: &Path, t: u32) -> Cell {
    let i = t.saturating_sub(path.start) as usize;
    path.cells[i.min(path.cells.len() - 1)]
}

/// Fewest timesteps from `start` at `start_t` to a goal in `goals` (passing `pickup`
/// first, if given) such that no reserved path touches the goal ever after. Plain
/// breadth-first search over the time-expanded graph, layer by layer up to `horizon`.
pub fn time_expanded_cost(
    map: &GridMap,
    reserved: &[Path],
    start: Cell,
    start_t: u32,
    pickup: Option<Cell>,
    goals: &[Cell],
    horizon: u32,
) -> Option<u32> {
    let occupied = |c: Cell, t: u32| reserved.iter().any(|p| position(p, t) == c);
    let swapped = |a: Cell, b: Cell, t: u32| {
        reserved
            .iter()
            .any(|p| position(p, t) == b && position(p, t + 1) == a)
    };
    let settled = |c: Cell, t: u32| {
        reserved.iter().all(|p| {
            let end = p.start + p.cells.len() as u32 - 1;
            (t.max(p.start)..=end.max(t)).all(|u| position(p, u) != c)
        })
    };
    let mut layer: HashSet<(Cell, bool)> = HashSet::new();
    layer.insert((start, pickup.is_none_or(|p| p == start)));
    let mut t = start_t;
    loop {
        if layer
            .iter()
            .any(|&(c, done)| done && goals.contains(&c) && settled(c, t))
        {
            return Some(t - start_t);
        }
        if t >= horizon || layer.is_empty() {
            return None;
        }
        let mut next = HashSet::new();
        for &(c, done) in &layer {
            let mut moves = vec![c];
            moves.extend(map.neighbors(c).unwrap().iter().copied());
            for n in moves {
                if occupied(n, t + 1) || (n != c && swapped(c, n, t)) {
                    continue;
                }
                next.insert((n, done || pickup == Some(n)));
            }
        }
        layer = next;
        t += 1;
    }
}

/// Minimum flowtime of a collision-free joint plan, by uniform-cost search over joint
/// positions plus a "stopped for good" flag per agent. Each joint step costs the number
/// of agents not yet stopped; an agent may stop only on its goal and never moves again.
pub fn joint_flowtime(map: &GridMap, starts: &[Cell], goals: &[Cell]) -> Option<u32> {
    let n = starts.len();
    type State = (Vec<Cell>, u32);
    let all_done = (1u32 << n) - 1;
    let mut dist: HashMap<State, u32> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let start: State = (starts.to_vec(), 0);
    dist.insert(start.clone(), 0);
    heap.push(Reverse((0u32, start)));
    while let Some(Reverse((d, (pos, done)))) = heap.pop() {
        if dist.get(&(pos.clone(), done)).is_some_and(|&best| best < d) {
            continue;
        }
        if done == all_done {
            return Some(d);
        }
        let mut push = |state: State, cost: u32, heap: &mut BinaryHeap<Reverse<(u32, State)>>| {
            if dist.get(&state).is_none_or(|&best| cost < best) {
                dist.insert(state.clone(), cost);
                heap.push(Reverse((cost, state)));
            }
        };
        // Stopping is free.
        for i in 0..n {
            if done & (1 << i) == 0 && pos[i] == goals[i] {
                push((pos.clone(), done | (1 << i)), d, &mut heap);
            }
        }
        let active = (0..n).filter(|&i| done & (1 << i) == 0).count() as u32;
        if active == 0 {
            continue;
        }
        let options: Vec<Vec<Cell>> = (0..n)
            .map(|i| {
                if done & (1 << i) != 0 {
                    vec![pos[i]]
                } else {
                    let mut o = vec![pos[i]];
                    o.extend(map.neighbors(pos[i]).unwrap().iter().copied());
                    o
                }
            })
            .collect();
        let mut choice = vec![0usize; n];
        'outer: loop {
            let next: Vec<Cell> = (0..n).map(|i| options[i][choice[i]]).collect();
            let mut ok = true;
            'check: for i in 0..n {
                for j in i + 1..n {
                    if next[i] == next[j] || (next[i] == pos[j] && next[j] == pos[i]) {
                        ok = false;
                        break 'check;
                    }
                }
            }
            if ok {
                push((next, done), d + active, &mut heap);
            }
            for i in 0..n {
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    continue 'outer;
                }
                choice[i] = 0;
            }
            break;
        }
    }
    None
}

/// Minimum total over all injections of rows into columns.
pub fn brute_force_assignment(costs: &[Vec<i64>]) -> i64 {
    fn go(costs: &[Vec<i64>], row: usize, used: &mut [bool]) -> i64 {
        if row == costs.len() {
            return 0;
        }
        let mut best = i64::MAX;
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(costs[row][j] + go(costs, row + 1, used));
                used[j] = false;
            }
        }
        best
    }
    if costs.is_empty() {
        return 0;
    }
    go(costs, 0, &mut vec![false; costs[0].len()])
}

/// A random map of at most `max_cells` cells whose passable cells are connected.
pub fn random_small_map(rng: &mut ChaCha8Rng, max_rows: usize, max_cols: usize, max_cells: usize, endpoints: usize) -> GridMap {
    loop {
        let rows = rng.gen_range(1..=max_rows);
        let cols = rng.gen_range(1..=max_cols);
        if rows * cols > max_cells || rows * cols < endpoints + 1 {
            continue;
        }
        let mut chars: Vec<char> = (0..rows * cols)
            .map(|_| if rng.gen_bool(0.2) { '@' } else { '.' })
            .collect();
        let free: Vec<usize> = (0..chars.len()).filter(|&i| chars[i] == '.').collect();
        if free.len() < endpoints + 1 {
            continue;
        }
        let mut picked = HashSet::new();
        while picked.len() < endpoints {
            picked.insert(free[rng.gen_range(0..free.len())]);
        }
        for i in picked {
            chars[i] = 'e';
        }
        let mut text = format!("{rows} {cols}\n");
        for r in 0..rows {
            text.extend(&chars[r * cols..(r + 1) * cols]);
            text.push('\n');
        }
        let map = GridMap::parse(&text).unwrap();
        if is_connected(&map) {
            return map;
        }
    }
}

pub fn is_connected(map: &GridMap) -> bool {
    let cells: Vec<Cell> = map.vertices().collect();
    let Some(&first) = cells.first() else {
        return false;
    };
    let mut seen = HashSet::from([first]);
    let mut stack = vec![first];
    while let Some(c) = stack.pop() {
        for &n in map.neighbors(c).unwrap() {
            if seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == cells.len()
}

/// A random walk of up to `len` steps (waits included) starting at `t0`.
pub fn random_walk(rng: &mut ChaCha8Rng, map: &GridMap, from: Cell, t0: u32, len: usize) -> Path {
    let mut cells = vec![from];
    for _ in 0..len {
        let c = *cells.last().unwrap();
        let ns = map.neighbors(c).unwrap();
        let next = if ns.is_empty() || rng.gen_bool(0.25) {
            c
        } else {
            ns[rng.gen_range(0..ns.len())]
        };
        cells.push(next);
    }
    Path::new(t0, cells)
}

/// Well-formed: two agents on the two non-task endpoints, three task endpoints, and free
/// lanes joining every pair of endpoints.
pub fn wellformed_example() -> MapdInstance {
    let map = GridMap::parse("4 5\nr...r\n.@e@.\n.....\ne...e\n").unwrap();
    let starts = map.nontask_endpoints().to_vec();
    MapdInstance::new(map, starts).unwrap()
}

/// Two agents but only one non-task endpoint.
pub fn too_few_parking_example() -> MapdInstance {
    let map = GridMap::parse("4 5\nr...e\n.@e@.\n.....\ne...e\n").unwrap();
    let a = map.cell(0, 0).unwrap();
    let b = map.cell(2, 4).unwrap();
    MapdInstance::new(map, vec![a, b]).unwrap()
}

/// Every path between two of the task endpoints crosses a third one: the bottom corridor `e2 . e1 . e3` is entered only next to `e3`.
pub fn separated_example() -> MapdInstance {
    let map = GridMap::parse("3 5\nr...r\n@@@@.\ne.e.e\n").unwrap();
    let starts = map.nontask_endpoints().to_vec();
    MapdInstance::new(map, starts).unwrap()
}

/// Two agents and two tasks whose pickup equals their delivery.
///
/// ```text
/// . . . . . .
/// a1. . t1. .
/// . . . a2t2.
/// . . . . . .
/// ```
/// `a2` is one step from both task cells; `a1` is 3 steps from `t1` and 5 from `t2`.
pub fn swap_example() -> (MapdInstance, Vec<Task>) {
    let map = GridMap::parse("4 6\n......\nr..e..\n...re.\n......\n").unwrap();
    let a1 = map.cell(1, 0).unwrap();
    let a2 = map.cell(2, 3).unwrap();
    let t1 = map.cell(1, 3).unwrap();
    let t2 = map.cell(2, 4).unwrap();
    let tasks = vec![Task::new(0, t1, t1, 0), Task::new(1, t2, t2, 0)];
    (MapdInstance::new(map, vec![a1, a2]).unwrap(), tasks)
}

#[test]
fn oracles_agree_on_hand_examples() {
    let map = GridMap::parse("2 3\n...\n@.@\n").unwrap();
    assert_eq!(joint_flowtime(&map, &[Cell(0), Cell(2)], &[Cell(2), Cell(0)]), Some(7));
    assert_eq!(joint_flowtime(&map, &[Cell(0)], &[Cell(0)]), Some(0));
    let corridor = GridMap::parse("1 3\n...\n").unwrap();
    assert_eq!(joint_flowtime(&corridor, &[Cell(0), Cell(2)], &[Cell(2), Cell(0)]), None);
    assert_eq!(brute_force_assignment(&[vec![1, 2], vec![2, 1]]), 2);
    assert_eq!(
        time_expanded_cost(&corridor, &[], Cell(0), 0, Some(Cell(2)), &[Cell(1)], 20),
        Some(3)
    );
    // The other agent passes through the goal at t = 2, so arrival must wait until t = 3.
    let other = Path::new(0, vec![Cell(2), Cell(2), Cell(1), Cell(0)]);
    assert_eq!(time_expanded_cost(&corridor, &[other], Cell(1), 0, None, &[Cell(1)], 20), None);
}

/// Service time of every task as committed in the token after the first decision phase
/// at t = 0, with agents served in id order.
pub fn first_decision_service_times(
    instance: &MapdInstance,
    tasks: &[Task],
    swaps: bool,
) -> Vec<Option<u32>> {
    use mapd::environment::HeuristicTable;
    use mapd::events::EventLog;
    use mapd::tasking::release_due;
    use mapd::token::{request_order, tp_token_turn, tpts_get_task, Token, TurnContext};

    let h = HeuristicTable::build(&instance.map);
    let mut tasks = tasks.to_vec();
    let mut token = Token::new(&instance.agent_starts);
    release_due(&mut tasks, 0, token.taskset_mut());
    let mut events = EventLog::new(false);
    let mut served = std::collections::BTreeSet::new();
    for agent in request_order(&token, 0, false) {
        if served.contains(&agent) {
            continue;
        }
        let mut ctx = TurnContext {
            map: &instance.map,
            h: &h,
            tasks: &tasks,
            locations: &instance.agent_starts,
            t: 0,
            events: &mut events,
        };
        if swaps {
            tpts_get_task(&mut token, &mut ctx, agent, true, &mut served).unwrap();
        } else {
            tp_token_turn(&mut token, &mut ctx, agent).unwrap();
        }
    }
    tasks
        .iter()
        .map(|task| {
            let path = token.path(token.agent_of(task.id)?);
            let picked = path.first_visit(task.pickup, 0)?;
            let done = path.first_visit(task.delivery, picked)?;
            Some(done - task.release)
        })
        .collect()
}

/// A single-agent planning query against a few reserved paths.
#[derive(Debug, Clone)]
pub struct PathQuery {
    pub map: GridMap,
    pub reserved: Vec<Path>,
    pub start: Cell,
    pub start_t: u32,
    /// `Some((pickup, delivery))` for a pickup-then-delivery query, else a parking query.
    pub task: Option<(Cell, Cell)>,
    pub parking: Vec<Cell>,
}

pub fn random_path_query(rng: &mut ChaCha8Rng) -> PathQuery {
    let map = random_small_map(rng, 6, 6, 36, 4);
    let cells: Vec<Cell> = map.vertices().collect();
    let endpoints = map.endpoints();
    let others = rng.gen_range(0..=3.min(cells.len() - 1));
    let mut starts = HashSet::new();
    let reserved: Vec<Path> = (0..others)
        .filter_map(|_| {
            let from = cells[rng.gen_range(0..cells.len())];
            starts.insert(from).then(|| {
                let len = rng.gen_range(0..10);
                random_walk(rng, &map, from, 0, len)
            })
        })
        .collect();
    let start_t = rng.gen_range(0..4);
    let free_at_start: Vec<Cell> = cells
        .iter()
        .copied()
        .filter(|&c| reserved.iter().all(|p| position(p, start_t) != c))
        .collect();
    let start = free_at_start[rng.gen_range(0..free_at_start.len())];
    let task = rng.gen_bool(0.6).then(|| {
        (
            endpoints[rng.gen_range(0..endpoints.len())],
            endpoints[rng.gen_range(0..endpoints.len())],
        )
    });
    let parking: Vec<Cell> = endpoints.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
    PathQuery {
        map,
        reserved,
        start,
        start_t,
        task,
        parking,
    }
}

/// Compares the planner against [`time_expanded_cost`] and validates the returned path.
pub fn check_path_query(q: &PathQuery) -> Result<(), String> {
    use mapd::environment::HeuristicTable;
    use mapd::pathing::{horizon, plan_path1, plan_path2, Occupancy};

    let h = HeuristicTable::build(&q.map);
    let rt = ReservationTable::from_paths(q.reserved.iter().enumerate().map(|(i, p)| (i + 1, p)));
    let hz = horizon(&q.map, q.start_t, rt.latest());
    let (planned, pickup, goals) = match q.task {
        Some((s, g)) => (
            plan_path1(&q.map, 0, q.start, q.start_t, s, g, &rt, &h),
            Some(s),
            vec![g],
        ),
        None => (
            plan_path2(&q.map, 0, q.start, q.start_t, &q.parking, &rt, &h),
            None,
            q.parking.clone(),
        ),
    };
    let expected = time_expanded_cost(&q.map, &q.reserved, q.start, q.start_t, pickup, &goals, hz);
    let got = planned.as_ref().ok().map(|p| p.cost());
    if got != expected {
        return Err(format!("planner {got:?} vs oracle {expected:?} on {q:?}"));
    }
    if let Ok(p) = planned {
        let path = &p.path;
        if path.start != q.start_t || path.first() != q.start || !path.is_connected(&q.map) {
            return Err(format!("malformed path {path:?}"));
        }
        if !goals.contains(&path.last()) {
            return Err(format!("path ends off goal: {path:?}"));
        }
        if let Some(s) = pickup {
            if path.first_visit(s, q.start_t).is_none() {
                return Err(format!("path skips pickup: {path:?}"));
            }
        }
        let mut all = q.reserved.clone();
        all.push(path.clone());
        let refs: Vec<(usize, &Path)> = all.iter().enumerate().collect();
        let own = all.len() - 1;
        if mapd::pathing::all_conflicts(&refs, q.start_t)
            .iter()
            .any(|c| c.agents().0 == own || c.agents().1 == own)
        {
            return Err(format!("path collides: {path:?}"));
        }
    }
    Ok(())
}

/// A multi-agent instance with distinct starts and distinct goals.
#[derive(Debug, Clone)]
pub struct MapfCase {
    pub map: GridMap,
    pub starts: Vec<Cell>,
    pub goals: Vec<Cell>,
}

pub fn random_mapf_case(rng: &mut ChaCha8Rng, agents: usize, max_cells: usize) -> MapfCase {
    loop {
        let map = random_small_map(rng, max_cells, max_cells, max_cells, 0);
        let mut cells: Vec<Cell> = map.vertices().collect();
        if cells.len() < agents + 1 {
            continue;
        }
        use rand::seq::SliceRandom;
        cells.shuffle(rng);
        let starts = cells[..agents].to_vec();
        cells.shuffle(rng);
        let goals = cells[..agents].to_vec();
        return MapfCase { map, starts, goals };
    }
}

/// Compares conflict-based search against [`joint_flowtime`] on solvable cases.
/// Returns whether the case was solvable.
pub fn check_mapf_case(case: &MapfCase) -> Result<bool, String> {
    use mapd::cbs::{cbs_solve, MapfQuery};

    let external = ReservationTable::new();
    let query = MapfQuery {
        map: &case.map,
        agents: (0..case.starts.len())
            .map(|i| (i, case.starts[i], case.goals[i]))
            .collect(),
        start_t: 0,
        external: &external,
    };
    match joint_flowtime(&case.map, &case.starts, &case.goals) {
        Some(best) => {
            let sol = cbs_solve(&query, 200_000).map_err(|e| format!("{e} on {case:?}"))?;
            if sol.flowtime != best {
                return Err(format!("cbs {} vs oracle {best} on {case:?}", sol.flowtime));
            }
            let refs: Vec<(usize, &Path)> = sol.paths.iter().enumerate().collect();
            if !mapd::pathing::all_conflicts(&refs, 0).is_empty() {
                return Err(format!("cbs paths collide on {case:?}"));
            }
            Ok(true)
        }
        None => match cbs_solve(&query, 2_000) {
            Ok(sol) => Err(format!("cbs solved an unsolvable case: {:?}", sol.paths)),
            Err(_) => Ok(false),
        },
    }
}
