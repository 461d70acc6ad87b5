//! Multi-objective A* baseline (NAMOA*-style label search) for a single
//! start cell.
//!
//! Each cell keeps the set of non-dominated cost-to-come vectors found so
//! far. Labels reaching a cell with a vector equal to a stored one are merged
//! into it as an extra parent, so every distinct optimal path survives and
//! can be recovered from the parent graph. Costs mirror the database
//! convention: a hop `c -> n` adds `[step, terrain(c)]`, so the goal cell's
//! terrain is never charged.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use num_bigint::BigUint;

use crate::error::Result;
use crate::grid::{CellCoord, GoalRegion, GridMap, DIAGONAL_STEP, STRAIGHT_STEP};
use crate::pareto::{dominates, LabelSet, ObjectiveVector};
use crate::query::{Path, QueryResult};

/// Octile lower bound on remaining length to the nearest goal cell; the
/// terrain component is bounded by zero.
pub fn heuristic(c: CellCoord, goal: &GoalRegion) -> ObjectiveVector {
    let h1 = goal
        .cells()
        .iter()
        .map(|g| octile(c, *g))
        .min()
        .unwrap_or(0);
    ObjectiveVector::new(h1, 0)
}

fn octile(a: CellCoord, b: CellCoord) -> u64 {
    let dr = a.row.abs_diff(b.row) as u64;
    let dc = a.col.abs_diff(b.col) as u64;
    STRAIGHT_STEP * dr.max(dc) + (DIAGONAL_STEP - STRAIGHT_STEP) * dr.min(dc)
}

#[derive(Debug, Clone)]
struct Label {
    cell: usize,
    g: ObjectiveVector,
    parents: Vec<usize>,
    alive: bool,
}

/// Finished search: solution labels plus the parent graph behind them.
#[derive(Debug, Clone)]
pub struct MoaSearch {
    start: CellCoord,
    n_cols: usize,
    labels: Vec<Label>,
    solutions: Vec<usize>,
    front: LabelSet,
    expanded: usize,
}

impl MoaSearch {
    pub fn run(map: &GridMap, s: CellCoord, goal: &GoalRegion) -> Result<Self> {
        map.check_free(s)?;
        goal.validate(map)?;

        let h: Vec<ObjectiveVector> = (0..map.len())
            .map(|i| heuristic(map.coord(i), goal))
            .collect();
        let mut labels: Vec<Label> = Vec::new();
        let mut at_cell: Vec<Vec<usize>> = vec![Vec::new(); map.len()];
        let mut heap = BinaryHeap::new();
        let mut solutions: Vec<usize> = Vec::new();
        let mut front = LabelSet::new();
        let mut expanded = 0;

        let si = map.index(s);
        labels.push(Label { cell: si, g: ObjectiveVector::ZERO, parents: Vec::new(), alive: true });
        at_cell[si].push(0);
        heap.push(Reverse((h[si], si, 0usize)));

        while let Some(Reverse((f, ci, id))) = heap.pop() {
            if !labels[id].alive {
                continue;
            }
            if front.iter().any(|sol| dominates(sol, &f)) {
                labels[id].alive = false;
                at_cell[ci].retain(|&k| k != id);
                continue;
            }
            let cell = map.coord(ci);
            if goal.contains(cell) {
                // h is zero on goal cells, so f == g here
                solutions.push(id);
                front.insert(f);
                continue;
            }
            expanded += 1;
            let g = labels[id].g;
            let own = map.terrain(cell);
            let mut succ = Vec::with_capacity(8);
            map.for_each_neighbor(cell, |n, step| succ.push((map.index(n), step)));
            for (ni, step) in succ {
                let gn = g.checked_add(ObjectiveVector::new(step, own))?;
                if let Some(&same) = at_cell[ni].iter().find(|&&k| labels[k].g == gn) {
                    labels[same].parents.push(id);
                    continue;
                }
                if at_cell[ni].iter().any(|&k| dominates(&labels[k].g, &gn)) {
                    continue;
                }
                let fn_ = gn.checked_add(h[ni])?;
                if front.iter().any(|sol| dominates(sol, &fn_)) {
                    continue;
                }
                let labels_ref = &mut labels;
                at_cell[ni].retain(|&k| {
                    if dominates(&gn, &labels_ref[k].g) {
                        labels_ref[k].alive = false;
                        false
                    } else {
                        true
                    }
                });
                let nid = labels.len();
                labels.push(Label { cell: ni, g: gn, parents: vec![id], alive: true });
                at_cell[ni].push(nid);
                heap.push(Reverse((fn_, ni, nid)));
            }
        }

        Ok(Self { start: s, n_cols: map.n_cols(), labels, solutions, front, expanded })
    }

    pub fn front(&self) -> &LabelSet {
        &self.front
    }

    /// Number of labels expanded during the search.
    pub fn expanded(&self) -> usize {
        self.expanded
    }

    fn coord(&self, i: usize) -> CellCoord {
        CellCoord::new(i / self.n_cols, i % self.n_cols)
    }

    /// Exact optimal path counts per front vector, by dynamic programming
    /// over the parent graph.
    pub fn count_paths(&self) -> Vec<(ObjectiveVector, BigUint)> {
        let mut memo: HashMap<usize, BigUint> = HashMap::new();
        let mut order: Vec<usize> = self.ancestors();
        // parents have strictly smaller g.f1
        order.sort_unstable_by_key(|&id| (self.labels[id].g.f1, id));
        for id in order {
            let n = if self.labels[id].parents.is_empty() {
                BigUint::from(1u32)
            } else {
                self.labels[id].parents.iter().map(|p| &memo[p]).sum()
            };
            memo.insert(id, n);
        }
        self.front
            .iter()
            .map(|v| {
                let total = self
                    .solutions
                    .iter()
                    .filter(|&&id| self.labels[id].g == *v)
                    .map(|id| &memo[id])
                    .sum();
                (*v, total)
            })
            .collect()
    }

    fn ancestors(&self) -> Vec<usize> {
        let mut seen: HashSet<usize> = self.solutions.iter().copied().collect();
        let mut stack = self.solutions.clone();
        let mut out = Vec::new();
        while let Some(id) = stack.pop() {
            out.push(id);
            for &p in &self.labels[id].parents {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        out
    }

    /// Cells on at least one optimal path, sorted.
    pub fn coverage(&self) -> Vec<CellCoord> {
        let mut cells: Vec<CellCoord> = self
            .ancestors()
            .into_iter()
            .map(|id| self.coord(self.labels[id].cell))
            .collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    /// Every optimal path, sorted by (vector, cells).
    pub fn paths(&self) -> Vec<(Path, ObjectiveVector)> {
        let mut out = Vec::new();
        for &sol in &self.solutions {
            let total = self.labels[sol].g;
            // backward DFS from the goal label through parent lists
            let mut trail: Vec<(usize, usize)> = vec![(sol, 0)];
            while let Some(top) = trail.last_mut() {
                let (id, next) = *top;
                let parents = &self.labels[id].parents;
                if parents.is_empty() {
                    let cells = trail
                        .iter()
                        .rev()
                        .map(|(k, _)| self.coord(self.labels[*k].cell))
                        .collect();
                    out.push((Path(cells), total));
                    trail.pop();
                } else if next < parents.len() {
                    top.1 += 1;
                    trail.push((parents[next], 0));
                } else {
                    trail.pop();
                }
            }
        }
        out.sort_unstable_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
        out
    }

    /// Front, counts and coverage in the same shape the database queries
    /// produce.
    pub fn to_query_result(&self) -> QueryResult {
        let counts = self.count_paths();
        let total_paths = counts.iter().map(|(_, c)| c).sum();
        QueryResult {
            start: self.start,
            front: self.front.clone(),
            counts,
            total_paths,
            coverage: if self.front.is_empty() { Vec::new() } else { self.coverage() },
        }
    }
}

/// Pareto front and all optimal paths from `s` to `goal`.
pub fn moa_star(
    map: &GridMap,
    s: CellCoord,
    goal: &GoalRegion,
) -> Result<(LabelSet, Vec<(Path, ObjectiveVector)>)> {
    let search = MoaSearch::run(map, s, goal)?;
    let paths = search.paths();
    Ok((search.front, paths))
}
