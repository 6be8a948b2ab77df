//! Minimum-cost assignment and CENTRAL's modified costs.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignmentError {
    #[error("cost matrix has {rows} rows but only {cols} columns")]
    TooFewColumns { rows: usize, cols: usize },
    #[error("row {row} has {len} entries, expected {cols}")]
    Ragged { row: usize, len: usize, cols: usize },
    #[error("negative cost {value} at ({row}, {col})")]
    Negative { row: usize, col: usize, value: i64 },
    #[error("cost arithmetic overflows 64 bits")]
    Overflow,
    #[error("row {row} cannot be matched to any column with a finite cost")]
    Infeasible { row: usize },
}

/// Row `i` is matched to column `cols[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub cols: Vec<usize>,
    pub total: i64,
}

/// Minimum-cost matching of every row to a distinct column.
///
/// Costs must be nonnegative and `rows <= cols`. Among optimal matchings the one
/// minimizing `sum(row * ncols + col)` is returned.
pub fn hungarian(costs: &[Vec<i64>]) -> Result<Assignment, AssignmentError> {
    let n = costs.len();
    if n == 0 {
        return Ok(Assignment {
            cols: Vec::new(),
            total: 0,
        });
    }
    let m = costs[0].len();
    validate(costs, m)?;
    // Scale so that the perturbation total stays below one unit of real cost.
    let scale = (n as i64)
        .checked_mul(n as i64)
        .and_then(|v| v.checked_mul(m as i64))
        .and_then(|v| v.checked_add(1))
        .ok_or(AssignmentError::Overflow)?;
    let mut scaled = vec![vec![0i64; m]; n];
    for (i, row) in costs.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            scaled[i][j] = c
                .checked_mul(scale)
                .and_then(|v| v.checked_add((i * m + j) as i64))
                .ok_or(AssignmentError::Overflow)?;
        }
    }
    let cols = solve(&scaled, n, m)?;
    let total = cols
        .iter()
        .enumerate()
        .map(|(i, &j)| costs[i][j])
        .sum();
    Ok(Assignment { cols, total })
}

/// Like [`hungarian`], with `None` marking forbidden pairs.
pub fn hungarian_partial(costs: &[Vec<Option<i64>>]) -> Result<Assignment, AssignmentError> {
    let n = costs.len();
    if n == 0 {
        return hungarian(&[]);
    }
    let m = costs[0].len();
    let mut finite_sum: i64 = 0;
    for (i, row) in costs.iter().enumerate() {
        if row.len() != m {
            return Err(AssignmentError::Ragged {
                row: i,
                len: row.len(),
                cols: m,
            });
        }
        if row.iter().all(Option::is_none) {
            return Err(AssignmentError::Infeasible { row: i });
        }
        for &c in row.iter().flatten() {
            finite_sum = finite_sum.checked_add(c).ok_or(AssignmentError::Overflow)?;
        }
    }
    // Any matching using a forbidden pair costs more than every fully finite one.
    let sentinel = finite_sum.checked_add(1).ok_or(AssignmentError::Overflow)?;
    let dense: Vec<Vec<i64>> = costs
        .iter()
        .map(|row| row.iter().map(|c| c.unwrap_or(sentinel)).collect())
        .collect();
    let a = hungarian(&dense)?;
    if let Some(row) = (0..n).find(|&i| costs[i][a.cols[i]].is_none()) {
        return Err(AssignmentError::Infeasible { row });
    }
    Ok(a)
}

fn validate(costs: &[Vec<i64>], m: usize) -> Result<(), AssignmentError> {
    if costs.len() > m {
        return Err(AssignmentError::TooFewColumns {
            rows: costs.len(),
            cols: m,
        });
    }
    for (i, row) in costs.iter().enumerate() {
        if row.len() != m {
            return Err(AssignmentError::Ragged {
                row: i,
                len: row.len(),
                cols: m,
            });
        }
        if let Some((j, &value)) = row.iter().enumerate().find(|(_, &v)| v < 0) {
            return Err(AssignmentError::Negative { row: i, col: j, value });
        }
    }
    Ok(())
}

/// Shortest augmenting paths with row/column potentials; rows are added one at a time.
fn solve(a: &[Vec<i64>], n: usize, m: usize) -> Result<Vec<usize>, AssignmentError> {
    const INF: i64 = i64::MAX;
    // 1-based; index 0 is the virtual column.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a[i0 - 1][j - 1]
                    .checked_sub(u[i0])
                    .and_then(|x| x.checked_sub(v[j]))
                    .ok_or(AssignmentError::Overflow)?;
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            cols[owner[j] - 1] = j - 1;
        }
    }
    Ok(cols)
}

/// Whether a candidate endpoint is a task pickup or a parking spot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndpointKind {
    Pickup,
    Parking,
}

/// CENTRAL's modified costs.
///
/// With `c` free agents (rows) and `C` the largest finite base cost plus one, a pickup
/// costs `c * C * base` and a parking spot `c * C^2 + base`. Unreachable pairs stay `None`.
pub fn modified_costs(
    base: &[Vec<Option<u32>>],
    kinds: &[EndpointKind],
) -> Result<Vec<Vec<Option<i64>>>, AssignmentError> {
    let c = base.len() as i64;
    let big_c = base
        .iter()
        .flatten()
        .flatten()
        .map(|&b| b as i64)
        .max()
        .unwrap_or(0)
        + 1;
    let pickup_factor = c.checked_mul(big_c).ok_or(AssignmentError::Overflow)?;
    let parking_offset = pickup_factor
        .checked_mul(big_c)
        .ok_or(AssignmentError::Overflow)?;
    base.iter()
        .map(|row| {
            row.iter()
                .zip(kinds)
                .map(|(b, kind)| {
                    b.map(|b| match kind {
                        EndpointKind::Pickup => pickup_factor.checked_mul(b as i64),
                        EndpointKind::Parking => parking_offset.checked_add(b as i64),
                    })
                    .map(|v| v.ok_or(AssignmentError::Overflow))
                    .transpose()
                })
                .collect()
        })
        .collect()
}
