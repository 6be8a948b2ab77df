use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Row-major index of a grid cell (`row * cols + col`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell(pub u32);

impl Cell {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// What a single map character declares about its cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Free,
    Blocked,
    TaskEndpoint,
    NonTaskEndpoint,
}

impl CellKind {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '.' => Some(CellKind::Free),
            '@' => Some(CellKind::Blocked),
            'e' => Some(CellKind::TaskEndpoint),
            'r' => Some(CellKind::NonTaskEndpoint),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            CellKind::Free => '.',
            CellKind::Blocked => '@',
            CellKind::TaskEndpoint => 'e',
            CellKind::NonTaskEndpoint => 'r',
        }
    }

    pub fn is_passable(self) -> bool {
        self != CellKind::Blocked
    }

    pub fn is_endpoint(self) -> bool {
        matches!(self, CellKind::TaskEndpoint | CellKind::NonTaskEndpoint)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cell ({row}, {col}) is outside the {rows}x{cols} grid")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("cell {0} is blocked or out of bounds")]
    NotPassable(Cell),
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> MapError {
    MapError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// A 4-connected grid treated as an undirected graph over its passable cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    rows: usize,
    cols: usize,
    kinds: Vec<CellKind>,
    adjacency: Vec<Vec<Cell>>,
    task_endpoints: Vec<Cell>,
    nontask_endpoints: Vec<Cell>,
}

impl GridMap {
    /// Builds a map from row-major cell kinds.
    pub fn from_kinds(rows: usize, cols: usize, kinds: Vec<CellKind>) -> Self {
        assert_eq!(kinds.len(), rows * cols, "kind vector does not match grid size");
        assert!(rows * cols <= u32::MAX as usize, "grid too large");
        let mut adjacency = vec![Vec::new(); kinds.len()];
        let mut task_endpoints = Vec::new();
        let mut nontask_endpoints = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let idx = r * cols + c;
                match kinds[idx] {
                    CellKind::Blocked => continue,
                    CellKind::TaskEndpoint => task_endpoints.push(Cell(idx as u32)),
                    CellKind::NonTaskEndpoint => nontask_endpoints.push(Cell(idx as u32)),
                    CellKind::Free => {}
                }
                // Fixed order: up, left, right, down. Keeps searches deterministic.
                let mut adj = Vec::with_capacity(4);
                if r > 0 && kinds[idx - cols].is_passable() {
                    adj.push(Cell((idx - cols) as u32));
                }
                if c > 0 && kinds[idx - 1].is_passable() {
                    adj.push(Cell((idx - 1) as u32));
                }
                if c + 1 < cols && kinds[idx + 1].is_passable() {
                    adj.push(Cell((idx + 1) as u32));
                }
                if r + 1 < rows && kinds[idx + cols].is_passable() {
                    adj.push(Cell((idx + cols) as u32));
                }
                adjacency[idx] = adj;
            }
        }
        GridMap {
            rows,
            cols,
            kinds,
            adjacency,
            task_endpoints,
            nontask_endpoints,
        }
    }

    /// Parses the `rows cols` header followed by `rows` lines of `cols` legend characters.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| parse_err(1, 1, "missing header"))?;
        let mut fields = header.split_whitespace();
        let mut dim = |name: &str| -> Result<usize, MapError> {
            let tok = fields
                .next()
                .ok_or_else(|| parse_err(1, header.len() + 1, format!("header is missing {name}")))?;
            let col = tok.as_ptr() as usize - header.as_ptr() as usize + 1;
            tok.parse::<usize>()
                .map_err(|_| parse_err(1, col, format!("{name} is not a nonnegative integer: {tok:?}")))
        };
        let rows = dim("rows")?;
        let cols = dim("cols")?;
        if let Some(extra) = fields.next() {
            let col = extra.as_ptr() as usize - header.as_ptr() as usize + 1;
            return Err(parse_err(1, col, "unexpected trailing header field"));
        }
        if rows == 0 || cols == 0 {
            return Err(parse_err(1, 1, "grid must have at least one row and one column"));
        }

        let mut kinds = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line_no = r + 2;
            let line = lines
                .next()
                .ok_or_else(|| parse_err(line_no, 1, format!("expected {rows} grid rows, found {r}")))?;
            let mut n = 0;
            for (i, ch) in line.chars().enumerate() {
                if i >= cols {
                    return Err(parse_err(line_no, i + 1, format!("row longer than {cols} columns")));
                }
                let kind = CellKind::from_char(ch)
                    .ok_or_else(|| parse_err(line_no, i + 1, format!("unknown map character {ch:?}")))?;
                kinds.push(kind);
                n += 1;
            }
            if n < cols {
                return Err(parse_err(line_no, n + 1, format!("row shorter than {cols} columns")));
            }
        }
        for (i, extra) in lines.enumerate() {
            if !extra.is_empty() {
                return Err(parse_err(rows + 2 + i, 1, "unexpected content after the last grid row"));
            }
        }
        Ok(GridMap::from_kinds(rows, cols, kinds))
    }

    /// Canonical text form; `parse(to_text())` reproduces the map.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols + 1) + 16);
        out.push_str(&format!("{} {}\n", self.rows, self.cols));
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.kinds[r * self.cols + c].to_char());
            }
            out.push('\n');
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_cells(&self) -> usize {
        self.kinds.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> Result<Cell, MapError> {
        if row >= self.rows || col >= self.cols {
            return Err(MapError::OutOfBounds {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(Cell((row * self.cols + col) as u32))
    }

    pub fn coords(&self, cell: Cell) -> (usize, usize) {
        (cell.index() / self.cols, cell.index() % self.cols)
    }

    pub fn kind(&self, cell: Cell) -> Option<CellKind> {
        self.kinds.get(cell.index()).copied()
    }

    pub fn is_passable(&self, cell: Cell) -> bool {
        self.kind(cell).is_some_and(CellKind::is_passable)
    }

    pub fn is_endpoint(&self, cell: Cell) -> bool {
        self.kind(cell).is_some_and(CellKind::is_endpoint)
    }

    pub fn is_task_endpoint(&self, cell: Cell) -> bool {
        self.kind(cell) == Some(CellKind::TaskEndpoint)
    }

    pub fn is_nontask_endpoint(&self, cell: Cell) -> bool {
        self.kind(cell) == Some(CellKind::NonTaskEndpoint)
    }

    /// Passable cells in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = Cell> + '_ {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_passable())
            .map(|(i, _)| Cell(i as u32))
    }

    pub fn num_vertices(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_passable()).count()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn task_endpoints(&self) -> &[Cell] {
        &self.task_endpoints
    }

    pub fn nontask_endpoints(&self) -> &[Cell] {
        &self.nontask_endpoints
    }

    /// All endpoints (task and non-task), ascending.
    pub fn endpoints(&self) -> Vec<Cell> {
        let mut all: Vec<Cell> = self
            .task_endpoints
            .iter()
            .chain(&self.nontask_endpoints)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    /// Orthogonally adjacent passable cells of a passable cell.
    pub fn neighbors(&self, cell: Cell) -> Result<&[Cell], MapError> {
        if !self.is_passable(cell) {
            return Err(MapError::NotPassable(cell));
        }
        Ok(&self.adjacency[cell.index()])
    }

    /// Same as [`GridMap::neighbors`] without the passability check.
    #[inline]
    pub(crate) fn adjacent(&self, cell: Cell) -> &[Cell] {
        &self.adjacency[cell.index()]
    }

    pub fn are_adjacent(&self, a: Cell, b: Cell) -> bool {
        self.adjacency
            .get(a.index())
            .is_some_and(|adj| adj.contains(&b))
    }
}
