use serde::Serialize;

use super::Path;
use crate::environment::Cell;
use crate::{AgentId, Timestep};

/// A violation of one of the two collision rules between two agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conflict {
    /// Both agents occupy `cell` at `t`.
    Vertex {
        a: AgentId,
        b: AgentId,
        cell: Cell,
        t: Timestep,
    },
    /// `a` moves `from -> to` while `b` moves `to -> from`, between `t` and `t + 1`.
    Edge {
        a: AgentId,
        b: AgentId,
        from: Cell,
        to: Cell,
        t: Timestep,
    },
}

impl Conflict {
    pub fn time(&self) -> Timestep {
        match *self {
            Conflict::Vertex { t, .. } | Conflict::Edge { t, .. } => t,
        }
    }

    pub fn agents(&self) -> (AgentId, AgentId) {
        match *self {
            Conflict::Vertex { a, b, .. } | Conflict::Edge { a, b, .. } => (a, b),
        }
    }
}

fn horizon<'a>(paths: impl Iterator<Item = &'a Path>) -> Timestep {
    paths.map(Path::end_time).max().unwrap_or(0)
}

fn scan(paths: &[(AgentId, &Path)], from_t: Timestep, first_only: bool) -> Vec<Conflict> {
    let mut out = Vec::new();
    // Past the last end every agent rests, so one more timestep settles it.
    let last = horizon(paths.iter().map(|(_, p)| *p)).max(from_t);
    for t in from_t..=last {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                let (a, pa) = paths[i];
                let (b, pb) = paths[j];
                let cell = pa.at(t);
                if cell == pb.at(t) {
                    out.push(Conflict::Vertex { a, b, cell, t });
                    if first_only {
                        return out;
                    }
                }
            }
        }
        if t == last {
            break;
        }
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                let (a, pa) = paths[i];
                let (b, pb) = paths[j];
                let (from, to) = (pa.at(t), pa.at(t + 1));
                if from != to && pb.at(t) == to && pb.at(t + 1) == from {
                    out.push(Conflict::Edge { a, b, from, to, t });
                    if first_only {
                        return out;
                    }
                }
            }
        }
    }
    out
}

/// Earliest conflict among `paths` at or after `from_t`.
///
/// Vertex conflicts at `t` precede edge conflicts starting at `t`; ties go to the
/// lexicographically smallest agent pair (by position in `paths`).
pub fn first_conflict(paths: &[(AgentId, &Path)], from_t: Timestep) -> Option<Conflict> {
    scan(paths, from_t, true).into_iter().next()
}

/// Every `(timestep, pair)` breaking a collision rule, from `from_t` up to the latest
/// path end. Terminal rests count as occupancy.
pub fn all_conflicts(paths: &[(AgentId, &Path)], from_t: Timestep) -> Vec<Conflict> {
    scan(paths, from_t, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(start: Timestep, cells: &[u32]) -> Path {
        Path::new(start, cells.iter().map(|&c| Cell(c)).collect())
    }

    #[test]
    fn disjoint_paths() {
        let a = p(0, &[0, 1, 2]);
        let b = p(0, &[5, 6, 7]);
        assert_eq!(first_conflict(&[(0, &a), (1, &b)], 0), None);
    }

    #[test]
    fn vertex_conflict() {
        let a = p(0, &[0, 1, 2, 3, 4]);
        let b = p(0, &[8, 7, 6, 5, 4]);
        assert_eq!(
            first_conflict(&[(0, &a), (1, &b)], 0),
            Some(Conflict::Vertex {
                a: 0,
                b: 1,
                cell: Cell(4),
                t: 4
            })
        );
    }

    #[test]
    fn edge_conflict() {
        let a = p(0, &[0, 0, 1, 2]);
        let b = p(0, &[3, 2, 2, 1]);
        assert_eq!(
            first_conflict(&[(0, &a), (1, &b)], 0),
            Some(Conflict::Edge {
                a: 0,
                b: 1,
                from: Cell(1),
                to: Cell(2),
                t: 2
            })
        );
    }

    #[test]
    fn resting_agent_is_hit() {
        let a = p(0, &[3]);
        let b = p(0, &[1, 2, 3, 4]);
        assert_eq!(
            first_conflict(&[(0, &a), (1, &b)], 0),
            Some(Conflict::Vertex {
                a: 0,
                b: 1,
                cell: Cell(3),
                t: 2
            })
        );
        // Before t = 0 nothing is checked.
        assert_eq!(first_conflict(&[(0, &a), (1, &b)], 3), None);
    }

    #[test]
    fn vertex_before_edge_at_same_time() {
        let a = p(0, &[0, 1]);
        let b = p(0, &[1, 0]);
        let c = p(0, &[5, 6]);
        let d = p(0, &[5, 7]);
        let all = all_conflicts(&[(0, &a), (1, &b), (2, &c), (3, &d)], 0);
        assert_eq!(
            all[0],
            Conflict::Vertex {
                a: 2,
                b: 3,
                cell: Cell(5),
                t: 0
            }
        );
        assert_eq!(
            all[1],
            Conflict::Edge {
                a: 0,
                b: 1,
                from: Cell(0),
                to: Cell(1),
                t: 0
            }
        );
        assert_eq!(all.len(), 2);
    }
}
