//! Seeded random well-formed instances and the warehouse layout used for benchmarks.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::environment::{check_well_formed, CellKind, GridMap, MapdInstance};
use crate::tasking::{generate_stream, Frequency, Task};

/// Frequencies used by the randomized suites.
pub const SUITE_FREQUENCIES: [(u64, u64); 3] = [(1, 2), (1, 1), (2, 1)];

/// A random well-formed instance with its task stream.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub seed: u64,
    pub instance: MapdInstance,
    pub tasks: Vec<Task>,
    pub frequency: Frequency,
}

/// Limits for [`random_case`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseLimits {
    pub min_side: usize,
    pub max_side: usize,
    pub min_agents: usize,
    pub max_agents: usize,
    pub min_tasks: usize,
    pub max_tasks: usize,
}

impl Default for CaseLimits {
    fn default() -> Self {
        CaseLimits {
            min_side: 5,
            max_side: 12,
            min_agents: 2,
            max_agents: 6,
            min_tasks: 5,
            max_tasks: 25,
        }
    }
}

/// Largest 4-connected component of the passable cells; everything else is blocked.
fn keep_largest_component(rows: usize, cols: usize, kinds: &mut [CellKind]) {
    let mut comp = vec![usize::MAX; kinds.len()];
    let mut best = (0usize, usize::MAX);
    let mut next = 0;
    for s in 0..kinds.len() {
        if !kinds[s].is_passable() || comp[s] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([s]);
        comp[s] = next;
        while let Some(v) = queue.pop_front() {
            size += 1;
            let (r, c) = (v / cols, v % cols);
            let mut visit = |u: usize| {
                if kinds[u].is_passable() && comp[u] == usize::MAX {
                    comp[u] = next;
                    queue.push_back(u);
                }
            };
            if r > 0 {
                visit(v - cols);
            }
            if c > 0 {
                visit(v - 1);
            }
            if c + 1 < cols {
                visit(v + 1);
            }
            if r + 1 < rows {
                visit(v + cols);
            }
        }
        if size > best.0 {
            best = (size, next);
        }
        next += 1;
    }
    for (k, &c) in kinds.iter_mut().zip(&comp) {
        if c != best.1 {
            *k = CellKind::Blocked;
        }
    }
}

/// Whether every pair of endpoints is joined by a path avoiding all other endpoints.
fn endpoints_pairwise_direct(map: &GridMap) -> bool {
    let instance = MapdInstance {
        map: map.clone(),
        agent_starts: Vec::new(),
    };
    check_well_formed(&instance, Some(&[])).is_well_formed()
}

/// A random map with `agents` non-task endpoints and between 2 and `max_task_endpoints`
/// task endpoints that satisfies the endpoint-connectivity condition, or `None` if the
/// drawn obstacles leave too little room.
pub fn random_well_formed_map(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    agents: usize,
    max_task_endpoints: usize,
) -> Option<GridMap> {
    let density = rng.gen_range(0.0..0.25);
    let mut kinds: Vec<CellKind> = (0..rows * cols)
        .map(|_| {
            if rng.gen_bool(density) {
                CellKind::Blocked
            } else {
                CellKind::Free
            }
        })
        .collect();
    keep_largest_component(rows, cols, &mut kinds);
    let mut free: Vec<usize> = (0..kinds.len()).filter(|&i| kinds[i].is_passable()).collect();
    free.shuffle(rng);

    let mut placed_nontask = 0;
    let mut placed_task = 0;
    for idx in free {
        let kind = if placed_nontask < agents {
            CellKind::NonTaskEndpoint
        } else if placed_task < max_task_endpoints {
            CellKind::TaskEndpoint
        } else {
            break;
        };
        kinds[idx] = kind;
        if endpoints_pairwise_direct(&GridMap::from_kinds(rows, cols, kinds.clone())) {
            match kind {
                CellKind::NonTaskEndpoint => placed_nontask += 1,
                _ => placed_task += 1,
            }
        } else {
            kinds[idx] = CellKind::Free;
        }
    }
    (placed_nontask == agents && placed_task >= 2).then(|| GridMap::from_kinds(rows, cols, kinds))
}

/// The randomized case for `seed`: map size, agent count, task count, and frequency are
/// all drawn from `seed`.
pub fn random_case(seed: u64, limits: CaseLimits) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let rows = rng.gen_range(limits.min_side..=limits.max_side);
        let cols = rng.gen_range(limits.min_side..=limits.max_side);
        let agents = rng.gen_range(limits.min_agents..=limits.max_agents);
        let n_tasks = rng.gen_range(limits.min_tasks..=limits.max_tasks);
        let (num, den) = SUITE_FREQUENCIES[rng.gen_range(0..SUITE_FREQUENCIES.len())];
        let frequency = Frequency::new(num, den).expect("positive");
        let max_task_endpoints = rng.gen_range(2..=(rows * cols / 4).max(2));
        let Some(map) = random_well_formed_map(&mut rng, rows, cols, agents, max_task_endpoints) else {
            continue;
        };
        let stream_seed = rng.gen();
        let tasks = generate_stream(&map, n_tasks, frequency, stream_seed).expect("two task endpoints");
        let instance =
            MapdInstance::with_agents_on_nontask_endpoints(map, agents).expect("enough non-task endpoints");
        return RandomCase {
            seed,
            instance,
            tasks,
            frequency,
        };
    }
}

/// A 15 x 21 warehouse: two blocks of shelves lined with task endpoints, aisles between
/// them, and a column of non-task endpoints on each side.
pub fn warehouse_map() -> GridMap {
    const ENDPOINTS: &str = "r..eeeeeee.eeeeeee..r";
    const SHELVES: &str = "r..@@@@@@@.@@@@@@@..r";
    const AISLE: &str = "r...................r";
    let rows = [
        AISLE, ENDPOINTS, SHELVES, ENDPOINTS, AISLE, ENDPOINTS, SHELVES, ENDPOINTS, AISLE,
        ENDPOINTS, SHELVES, ENDPOINTS, AISLE, ENDPOINTS, AISLE,
    ];
    let mut text = format!("{} {}\n", rows.len(), AISLE.len());
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    GridMap::parse(&text).expect("warehouse layout is valid")
}
