//! Queries over a built database: the Pareto front at a start cell, exact
//! path counts per front vector, the coverage area of all Pareto-optimal
//! paths, and bounded path enumeration.
//!
//! Every query walks the successor graph over (cell, vector) states. A state
//! `(c, F)` has successor `(j, F')` when `F = F' + dF(c -> j)` and `F'` is
//! stored at `j`. Successors carry strictly smaller `f1`, so the graph is
//! acyclic and every walk through it is a simple path.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::cellmap::Database;
use crate::error::{Error, Result};
use crate::grid::{step_length, CellCoord, GoalRegion, GridMap};
use crate::pareto::{LabelSet, ObjectiveVector};

/// A sequence of cells from a start cell to a goal cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<CellCoord>);

impl Path {
    pub fn cells(&self) -> &[CellCoord] {
        &self.0
    }

    /// Recomputes the objective vector: hop lengths for `f1`, terrain of
    /// every cell but the last for `f2`. Fails if the path is not a chain of
    /// free, 8-adjacent, pairwise distinct cells.
    pub fn cost(&self, map: &GridMap) -> Result<ObjectiveVector> {
        let mut seen = HashSet::new();
        let mut total = ObjectiveVector::ZERO;
        for &c in &self.0 {
            map.check_free(c)?;
            if !seen.insert(c) {
                return Err(Error::InvalidParameter(format!("path revisits {c}")));
            }
        }
        for w in self.0.windows(2) {
            if !map.neighbors(w[0])?.iter().any(|(n, _)| *n == w[1]) {
                return Err(Error::NotAdjacent(w[0], w[1]));
            }
            let hop = ObjectiveVector::new(step_length(w[0], w[1])?, map.terrain(w[0]));
            total = total.checked_add(hop)?;
        }
        Ok(total)
    }

    /// Checks the path invariants against `map` and `goal`.
    pub fn is_valid(&self, map: &GridMap, goal: &GoalRegion) -> bool {
        matches!(self.0.last(), Some(c) if goal.contains(*c)) && self.cost(map).is_ok()
    }
}

/// Front, exact counts and coverage for one start cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub start: CellCoord,
    pub front: LabelSet,
    /// One entry per front vector, in front order.
    pub counts: Vec<(ObjectiveVector, BigUint)>,
    pub total_paths: BigUint,
    /// Sorted row-major.
    pub coverage: Vec<CellCoord>,
}

impl QueryResult {
    pub fn count_of(&self, v: &ObjectiveVector) -> Option<&BigUint> {
        self.counts.iter().find(|(w, _)| w == v).map(|(_, c)| c)
    }
}

type State = (usize, usize);

/// Read-only view over a database and the map it was built from.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    db: &'a Database,
    map: &'a GridMap,
}

impl<'a> Query<'a> {
    /// Fails with [`Error::DigestMismatch`] if `db` was not built from `map`.
    pub fn new(db: &'a Database, map: &'a GridMap) -> Result<Self> {
        db.check_map(map)?;
        Ok(Self { db, map })
    }

    pub fn database(&self) -> &'a Database {
        self.db
    }

    pub fn map(&self) -> &'a GridMap {
        self.map
    }

    pub fn pareto_front_at(&self, s: CellCoord) -> Result<&'a LabelSet> {
        self.map.check_free(s)?;
        Ok(self.db.labels(s))
    }

    pub fn successors_of(
        &self,
        c: CellCoord,
        f: ObjectiveVector,
    ) -> Result<Vec<(CellCoord, ObjectiveVector)>> {
        self.map.check_free(c)?;
        let Ok(r) = self.db.labels(c).as_slice().binary_search(&f) else {
            return Err(Error::NotInLabelSet { cell: c, vector: f });
        };
        Ok(self
            .state_successors((self.map.index(c), r))
            .into_iter()
            .map(|(j, p)| (self.map.coord(j), self.db.labels(self.map.coord(j)).as_slice()[p]))
            .collect())
    }

    fn vector(&self, (i, r): State) -> ObjectiveVector {
        self.db.labels(self.map.coord(i)).as_slice()[r]
    }

    fn state_successors(&self, (i, r): State) -> Vec<State> {
        let c = self.map.coord(i);
        if self.db.goal().contains(c) {
            return Vec::new();
        }
        let f = self.db.labels(c).as_slice()[r];
        let own = self.map.terrain(c);
        let mut out = Vec::new();
        self.map.for_each_neighbor(c, |j, step| {
            let Some(rest) = f.checked_sub(ObjectiveVector::new(step, own)) else {
                return;
            };
            if let Ok(p) = self.db.labels(j).as_slice().binary_search(&rest) {
                out.push((self.map.index(j), p));
            }
        });
        out
    }

    fn start_states(&self, s: CellCoord) -> Result<Vec<State>> {
        let ls = self.pareto_front_at(s)?;
        let i = self.map.index(s);
        Ok((0..ls.len()).map(|r| (i, r)).collect())
    }

    /// All states reachable from `roots`, sorted by ascending `f1` so that
    /// successors precede their predecessors.
    fn reachable(&self, roots: &[State]) -> Vec<State> {
        let mut seen: HashSet<State> = roots.iter().copied().collect();
        let mut stack = roots.to_vec();
        let mut out = Vec::new();
        while let Some(st) = stack.pop() {
            out.push(st);
            for nx in self.state_successors(st) {
                debug_assert!(self.vector(nx).f1 < self.vector(st).f1);
                if seen.insert(nx) {
                    stack.push(nx);
                }
            }
        }
        out.sort_unstable_by_key(|&st| (self.vector(st).f1, st));
        out
    }

    /// Exact number of Pareto-optimal paths per front vector. Coverage is
    /// left empty.
    pub fn count_paths(&self, s: CellCoord) -> Result<QueryResult> {
        let roots = self.start_states(s)?;
        let mut counts: HashMap<State, BigUint> = HashMap::new();
        for st in self.reachable(&roots) {
            let n = if self.db.goal().contains(self.map.coord(st.0)) {
                BigUint::from(1u32)
            } else {
                self.state_successors(st)
                    .iter()
                    .map(|nx| &counts[nx])
                    .sum()
            };
            counts.insert(st, n);
        }
        let front = self.db.labels(s).clone();
        let per_vector: Vec<(ObjectiveVector, BigUint)> = roots
            .iter()
            .map(|st| (self.vector(*st), counts[st].clone()))
            .collect();
        let total_paths = per_vector.iter().map(|(_, c)| c).sum();
        Ok(QueryResult {
            start: s,
            front,
            counts: per_vector,
            total_paths,
            coverage: Vec::new(),
        })
    }

    /// Every cell on at least one Pareto-optimal path from `s`.
    pub fn coverage(&self, s: CellCoord) -> Result<Vec<CellCoord>> {
        let roots = self.start_states(s)?;
        if roots.is_empty() {
            return Err(Error::Unreachable(s));
        }
        let mut cells: Vec<CellCoord> = self
            .reachable(&roots)
            .into_iter()
            .map(|(i, _)| self.map.coord(i))
            .collect();
        cells.sort_unstable();
        cells.dedup();
        Ok(cells)
    }

    /// Counts plus coverage in one result; coverage is empty when `s` cannot
    /// reach the goal.
    pub fn full(&self, s: CellCoord) -> Result<QueryResult> {
        let mut res = self.count_paths(s)?;
        if !res.front.is_empty() {
            res.coverage = self.coverage(s)?;
        }
        Ok(res)
    }

    /// Depth-first enumeration of Pareto-optimal paths in deterministic order
    /// (front order, then row-major successor order). Returns at most `limit`
    /// paths and whether more exist.
    pub fn enumerate_paths(
        &self,
        s: CellCoord,
        limit: Option<usize>,
    ) -> Result<(Vec<(Path, ObjectiveVector)>, bool)> {
        if limit == Some(0) {
            return Err(Error::InvalidParameter("path limit must be positive".into()));
        }
        let roots = self.start_states(s)?;
        let want = limit.map_or(usize::MAX, |l| l.saturating_add(1));
        let mut out = Vec::new();
        'roots: for root in roots {
            let total = self.vector(root);
            // stack of (state, successors, next successor index)
            let mut trail: Vec<(State, Vec<State>, usize)> =
                vec![(root, self.state_successors(root), 0)];
            while let Some(top) = trail.last_mut() {
                let st = top.0;
                if self.db.goal().contains(self.map.coord(st.0)) {
                    let cells = trail.iter().map(|(s, _, _)| self.map.coord(s.0)).collect();
                    out.push((Path(cells), total));
                    if out.len() >= want {
                        break 'roots;
                    }
                    trail.pop();
                } else if top.2 < top.1.len() {
                    let nx = top.1[top.2];
                    top.2 += 1;
                    let nx_succ = self.state_successors(nx);
                    trail.push((nx, nx_succ, 0));
                } else {
                    trail.pop();
                }
            }
        }
        let truncated = out.len() == want && limit.is_some();
        if truncated {
            out.pop();
        }
        Ok((out, truncated))
    }
}

pub fn pareto_front_at<'a>(db: &'a Database, map: &'a GridMap, s: CellCoord) -> Result<&'a LabelSet> {
    Query::new(db, map)?.pareto_front_at(s)
}

pub fn successors_of(
    db: &Database,
    map: &GridMap,
    c: CellCoord,
    f: ObjectiveVector,
) -> Result<Vec<(CellCoord, ObjectiveVector)>> {
    Query::new(db, map)?.successors_of(c, f)
}

pub fn count_paths(db: &Database, map: &GridMap, s: CellCoord) -> Result<QueryResult> {
    Query::new(db, map)?.count_paths(s)
}

pub fn coverage(db: &Database, map: &GridMap, s: CellCoord) -> Result<Vec<CellCoord>> {
    Query::new(db, map)?.coverage(s)
}

pub fn enumerate_paths(
    db: &Database,
    map: &GridMap,
    s: CellCoord,
    limit: Option<usize>,
) -> Result<(Vec<(Path, ObjectiveVector)>, bool)> {
    Query::new(db, map)?.enumerate_paths(s, limit)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountEntry {
    pub vector: ObjectiveVector,
    /// Decimal string; counts can exceed any fixed-width integer.
    pub count: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEntry {
    pub cells: Path,
    pub vector: ObjectiveVector,
}

/// JSON query report. Sections that were not requested are `null`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryReport {
    pub start: CellCoord,
    pub front: LabelSet,
    pub counts: Option<Vec<CountEntry>>,
    pub total_paths: Option<String>,
    pub coverage: Option<Vec<CellCoord>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub paths: Option<Vec<PathEntry>>,
    pub truncated: bool,
}

impl QueryReport {
    pub fn front_only(start: CellCoord, front: LabelSet) -> Self {
        Self {
            start,
            front,
            counts: None,
            total_paths: None,
            coverage: None,
            paths: None,
            truncated: false,
        }
    }

    pub fn with_counts(mut self, res: &QueryResult) -> Self {
        self.counts = Some(
            res.counts
                .iter()
                .map(|(v, c)| CountEntry { vector: *v, count: c.to_string() })
                .collect(),
        );
        self.total_paths = Some(res.total_paths.to_string());
        self
    }

    pub fn with_coverage(mut self, cells: Vec<CellCoord>) -> Self {
        self.coverage = Some(cells);
        self
    }

    pub fn with_paths(mut self, paths: Vec<(Path, ObjectiveVector)>, truncated: bool) -> Self {
        self.paths = Some(
            paths
                .into_iter()
                .map(|(cells, vector)| PathEntry { cells, vector })
                .collect(),
        );
        self.truncated = truncated;
        self
    }

    /// Report carrying every section of `res`.
    pub fn from_result(res: &QueryResult) -> Self {
        Self::front_only(res.start, res.front.clone())
            .with_counts(res)
            .with_coverage(res.coverage.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// `f1,f2` header followed by one row per front vector.
pub fn front_csv(front: &LabelSet) -> String {
    let mut out = String::from("f1,f2\n");
    for v in front {
        out.push_str(&format!("{},{}\n", v.f1, v.f2));
    }
    out
}

/// ASCII rendering: `S` start, `G` goal, `*` covered, `#` obstacle, `.` free.
pub fn coverage_ascii(
    map: &GridMap,
    goal: &GoalRegion,
    start: CellCoord,
    coverage: &[CellCoord],
) -> String {
    let covered: HashSet<&CellCoord> = coverage.iter().collect();
    let mut out = String::with_capacity(map.len() + map.n_rows());
    for r in 0..map.n_rows() {
        for c in 0..map.n_cols() {
            let cell = CellCoord::new(r, c);
            out.push(if cell == start {
                'S'
            } else if goal.contains(cell) {
                'G'
            } else if map.is_obstacle(cell) {
                '#'
            } else if covered.contains(&cell) {
                '*'
            } else {
                '.'
            });
        }
        out.push('\n');
    }
    out
}

/// Binary PGM (P5): covered 255, free 128, obstacle 0.
pub fn coverage_pgm(map: &GridMap, coverage: &[CellCoord]) -> Vec<u8> {
    let covered: HashSet<&CellCoord> = coverage.iter().collect();
    let mut out = format!("P5\n{} {}\n255\n", map.n_cols(), map.n_rows()).into_bytes();
    for i in 0..map.len() {
        let c = map.coord(i);
        out.push(if map.is_obstacle(c) {
            0
        } else if covered.contains(&c) {
            255
        } else {
            128
        });
    }
    out
}
