//! Grid maps, 8-neighbourhood geometry and the map text format.
//!
//! A map file is UTF-8 text: a `<rows> <cols>` header followed by one line
//! per row holding `cols` whitespace-separated tokens. A token is either `#`
//! (obstacle) or a non-negative decimal terrain cost. The file ends with a
//! newline and carries no comments.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Length of an orthogonal hop.
pub const STRAIGHT_STEP: u64 = 10;
/// Length of a diagonal hop (integer stand-in for 10·√2).
pub const DIAGONAL_STEP: u64 = 14;

/// Row-major neighbour offsets.
const OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Zero-based `(row, col)` cell address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct CellCoord {
    pub row: usize,
    pub col: usize,
}

impl CellCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl From<[usize; 2]> for CellCoord {
    fn from([row, col]: [usize; 2]) -> Self {
        Self { row, col }
    }
}

impl From<CellCoord> for [usize; 2] {
    fn from(c: CellCoord) -> Self {
        [c.row, c.col]
    }
}

impl From<(usize, usize)> for CellCoord {
    fn from((row, col): (usize, usize)) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

impl std::str::FromStr for CellCoord {
    type Err = Error;

    /// Parses `r,c`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCoord(s.to_string());
        let (r, c) = s.split_once(',').ok_or_else(bad)?;
        Ok(Self {
            row: r.trim().parse().map_err(|_| bad())?,
            col: c.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// Hop length between two 8-adjacent cells: 10 straight, 14 diagonal.
pub fn step_length(a: CellCoord, b: CellCoord) -> Result<u64> {
    let dr = a.row.abs_diff(b.row);
    let dc = a.col.abs_diff(b.col);
    match (dr, dc) {
        (0, 1) | (1, 0) => Ok(STRAIGHT_STEP),
        (1, 1) => Ok(DIAGONAL_STEP),
        _ => Err(Error::NotAdjacent(a, b)),
    }
}

/// Rectangular grid with per-cell terrain cost and obstacle mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    n_rows: usize,
    n_cols: usize,
    terrain: Vec<u64>,
    obstacle: Vec<bool>,
    allow_corner_cut: bool,
}

impl GridMap {
    /// All-free map with every terrain cost set to `cost`.
    pub fn uniform(n_rows: usize, n_cols: usize, cost: u64) -> Result<Self> {
        Self::from_cells(n_rows, n_cols, vec![Some(cost); n_rows * n_cols])
    }

    /// Builds a map from row-major cells; `None` marks an obstacle.
    pub fn from_cells(n_rows: usize, n_cols: usize, cells: Vec<Option<u64>>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Format("map dimensions must be positive".into()));
        }
        let n = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Error::Format("map dimensions too large".into()))?;
        if cells.len() != n {
            return Err(Error::Format(format!(
                "expected {n} cells, got {}",
                cells.len()
            )));
        }
        let terrain: Vec<u64> = cells.iter().map(|c| c.unwrap_or(0)).collect();
        let obstacle: Vec<bool> = cells.iter().map(Option::is_none).collect();
        let map = Self {
            n_rows,
            n_cols,
            terrain,
            obstacle,
            allow_corner_cut: true,
        };
        map.check_overflow()?;
        Ok(map)
    }

    /// Rejects maps where a simple path could overflow a `u64` objective.
    fn check_overflow(&self) -> Result<()> {
        let cells = self.len() as u64;
        let max_terrain = self.terrain.iter().copied().max().unwrap_or(0);
        if max_terrain.checked_mul(cells).is_none() || DIAGONAL_STEP.checked_mul(cells).is_none() {
            return Err(Error::Overflow);
        }
        Ok(())
    }

    pub fn with_corner_cut(mut self, allow: bool) -> Self {
        self.allow_corner_cut = allow;
        self
    }

    pub fn allow_corner_cut(&self) -> bool {
        self.allow_corner_cut
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Total number of cells, free or not.
    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, c: CellCoord) -> usize {
        c.row * self.n_cols + c.col
    }

    pub fn coord(&self, index: usize) -> CellCoord {
        CellCoord::new(index / self.n_cols, index % self.n_cols)
    }

    pub fn in_bounds(&self, c: CellCoord) -> bool {
        c.row < self.n_rows && c.col < self.n_cols
    }

    pub fn is_obstacle(&self, c: CellCoord) -> bool {
        self.obstacle[self.index(c)]
    }

    /// In bounds and not an obstacle.
    pub fn is_free(&self, c: CellCoord) -> bool {
        self.in_bounds(c) && !self.is_obstacle(c)
    }

    pub fn terrain(&self, c: CellCoord) -> u64 {
        self.terrain[self.index(c)]
    }

    pub fn set_terrain(&mut self, c: CellCoord, cost: u64) -> Result<()> {
        self.check_free(c)?;
        let i = self.index(c);
        self.terrain[i] = cost;
        self.check_overflow()
    }

    pub fn set_obstacle(&mut self, c: CellCoord, obstacle: bool) -> Result<()> {
        if !self.in_bounds(c) {
            return Err(Error::OutOfBounds(c));
        }
        let i = self.index(c);
        self.obstacle[i] = obstacle;
        if obstacle {
            self.terrain[i] = 0;
        }
        Ok(())
    }

    /// Iterates over free cells in row-major order.
    pub fn free_cells(&self) -> impl Iterator<Item = CellCoord> + '_ {
        (0..self.len())
            .filter(|&i| !self.obstacle[i])
            .map(|i| self.coord(i))
    }

    pub fn free_count(&self) -> usize {
        self.obstacle.iter().filter(|o| !**o).count()
    }

    pub(crate) fn check_free(&self, c: CellCoord) -> Result<()> {
        if !self.in_bounds(c) {
            Err(Error::OutOfBounds(c))
        } else if self.is_obstacle(c) {
            Err(Error::Obstacle(c))
        } else {
            Ok(())
        }
    }

    /// Free 8-neighbours of `cell` with their hop lengths, in row-major
    /// offset order.
    pub fn neighbors(&self, cell: CellCoord) -> Result<Vec<(CellCoord, u64)>> {
        self.check_free(cell)?;
        let mut out = Vec::with_capacity(8);
        self.for_each_neighbor(cell, |n, step| out.push((n, step)));
        Ok(out)
    }

    /// Allocation-free variant of [`GridMap::neighbors`]; `cell` must be free.
    pub(crate) fn for_each_neighbor(&self, cell: CellCoord, mut f: impl FnMut(CellCoord, u64)) {
        for (dr, dc) in OFFSETS {
            let (Some(r), Some(c)) = (
                cell.row.checked_add_signed(dr),
                cell.col.checked_add_signed(dc),
            ) else {
                continue;
            };
            let n = CellCoord::new(r, c);
            if !self.is_free(n) {
                continue;
            }
            let diagonal = dr != 0 && dc != 0;
            if diagonal
                && !self.allow_corner_cut
                && (self.is_obstacle(CellCoord::new(r, cell.col))
                    || self.is_obstacle(CellCoord::new(cell.row, c)))
            {
                continue;
            }
            f(n, if diagonal { DIAGONAL_STEP } else { STRAIGHT_STEP });
        }
    }

    /// Parses the map text format.
    pub fn parse(text: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(text).map_err(|_| Error::Format("map is not UTF-8".into()))?;
        if !text.ends_with('\n') {
            return Err(Error::Format("missing trailing newline".into()));
        }
        let mut lines = text[..text.len() - 1].split('\n');
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty map file".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(Error::Format(format!("malformed dimension line {header:?}"))),
            }
        };
        let [rows, cols] = dims[..] else {
            return Err(Error::Format(format!("malformed dimension line {header:?}")));
        };
        let (n_rows, n_cols) = (parse_dim(rows)?, parse_dim(cols)?);

        let mut cells = Vec::new();
        let mut row_count = 0;
        for (r, line) in lines.enumerate() {
            if r >= n_rows {
                return Err(Error::Format(format!(
                    "found more than the {n_rows} declared rows"
                )));
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != n_cols {
                return Err(Error::Format(format!(
                    "row {r} has {} tokens, expected {n_cols}",
                    tokens.len()
                )));
            }
            for (c, tok) in tokens.into_iter().enumerate() {
                if tok == "#" {
                    cells.push(None);
                } else if tok.bytes().all(|b| b.is_ascii_digit()) {
                    let v = tok.parse::<u64>().map_err(|_| Error::Overflow)?;
                    cells.push(Some(v));
                } else {
                    return Err(Error::Format(format!(
                        "invalid token {tok:?} at row {r}, column {c}"
                    )));
                }
            }
            row_count += 1;
        }
        if row_count != n_rows {
            return Err(Error::Format(format!(
                "found {row_count} rows, expected {n_rows}"
            )));
        }
        Self::from_cells(n_rows, n_cols, cells)
    }

    /// Canonical map text; `GridMap::parse` inverts it exactly.
    pub fn serialize(&self) -> String {
        let mut out = format!("{} {}\n", self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                if c > 0 {
                    out.push(' ');
                }
                let cell = CellCoord::new(r, c);
                if self.is_obstacle(cell) {
                    out.push('#');
                } else {
                    out.push_str(&self.terrain(cell).to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 over the canonical text plus the corner-cut flag, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.serialize().as_bytes());
        h.update(if self.allow_corner_cut {
            b"corner-cut:1".as_slice()
        } else {
            b"corner-cut:0".as_slice()
        });
        hex::encode(h.finalize())
    }

    /// Seeded random map. Each cell is an obstacle with probability
    /// `obstacle_density`, otherwise its terrain is uniform on `0..=max_cost`.
    /// At least one cell is always left free.
    pub fn random(
        seed: u64,
        n_rows: usize,
        n_cols: usize,
        obstacle_density: f64,
        max_cost: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&obstacle_density) {
            return Err(Error::InvalidParameter(format!(
                "obstacle density {obstacle_density} outside [0, 1)"
            )));
        }
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidParameter("map dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells: Vec<Option<u64>> = (0..n_rows * n_cols)
            .map(|_| {
                let blocked = rng.gen::<f64>() < obstacle_density;
                let cost = rng.gen_range(0..=max_cost);
                (!blocked).then_some(cost)
            })
            .collect();
        if cells.iter().all(Option::is_none) {
            let i = rng.gen_range(0..cells.len());
            cells[i] = Some(rng.gen_range(0..=max_cost));
        }
        Self::from_cells(n_rows, n_cols, cells)
    }
}

/// Non-empty set of free goal cells, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CellCoord>", into = "Vec<CellCoord>")]
pub struct GoalRegion {
    cells: Vec<CellCoord>,
}

impl GoalRegion {
    pub fn new(cells: impl IntoIterator<Item = CellCoord>) -> Result<Self> {
        let mut cells: Vec<CellCoord> = cells.into_iter().collect();
        cells.sort();
        cells.dedup();
        if cells.is_empty() {
            return Err(Error::EmptyGoal);
        }
        Ok(Self { cells })
    }

    pub fn single(cell: CellCoord) -> Self {
        Self { cells: vec![cell] }
    }

    /// Every cell of the inclusive rectangle spanned by `a` and `b`.
    pub fn rect(a: CellCoord, b: CellCoord) -> Self {
        let mut cells = Vec::new();
        for r in a.row.min(b.row)..=a.row.max(b.row) {
            for c in a.col.min(b.col)..=a.col.max(b.col) {
                cells.push(CellCoord::new(r, c));
            }
        }
        Self { cells }
    }

    /// Union of two regions.
    pub fn union(&self, other: &GoalRegion) -> Self {
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        cells.sort();
        cells.dedup();
        Self { cells }
    }

    pub fn cells(&self) -> &[CellCoord] {
        &self.cells
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    /// Every member must be in bounds and free.
    pub fn validate(&self, map: &GridMap) -> Result<()> {
        for &c in &self.cells {
            map.check_free(c)?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<CellCoord>> for GoalRegion {
    type Error = Error;

    fn try_from(cells: Vec<CellCoord>) -> Result<Self> {
        Self::new(cells)
    }
}

impl From<GoalRegion> for Vec<CellCoord> {
    fn from(g: GoalRegion) -> Self {
        g.cells
    }
}
