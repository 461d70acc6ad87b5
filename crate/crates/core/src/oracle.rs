//! Brute-force ground truth: enumerate every simple path from a start cell
//! to the goal region and apply the dominance definition directly.
//!
//! Only usable on tiny maps; the number of simple paths grows exponentially
//! with the number of free cells.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::grid::{step_length, CellCoord, GoalRegion, GridMap};
use crate::pareto::{dominates_components, LabelSet, ObjectiveVector};
use crate::query::{Path, QueryResult};

pub const DEFAULT_CELL_BUDGET: usize = 20;

/// Front, counts and coverage from exhaustive enumeration.
pub fn brute_force(
    map: &GridMap,
    s: CellCoord,
    goal: &GoalRegion,
    cell_budget: usize,
) -> Result<QueryResult> {
    Ok(run(map, s, goal, cell_budget, false, false)?.0)
}

/// Like [`brute_force`], also returning every Pareto-optimal path sorted by
/// (vector, cells).
pub fn brute_force_paths(
    map: &GridMap,
    s: CellCoord,
    goal: &GoalRegion,
    cell_budget: usize,
) -> Result<(QueryResult, Vec<(Path, ObjectiveVector)>)> {
    run(map, s, goal, cell_budget, false, true)
}

/// Same enumeration with neighbours visited in reverse order.
#[doc(hidden)]
pub fn brute_force_reversed(
    map: &GridMap,
    s: CellCoord,
    goal: &GoalRegion,
    cell_budget: usize,
) -> Result<(QueryResult, Vec<(Path, ObjectiveVector)>)> {
    run(map, s, goal, cell_budget, true, true)
}

fn run(
    map: &GridMap,
    s: CellCoord,
    goal: &GoalRegion,
    cell_budget: usize,
    reverse: bool,
    keep_paths: bool,
) -> Result<(QueryResult, Vec<(Path, ObjectiveVector)>)> {
    map.check_free(s)?;
    goal.validate(map)?;
    let free = map.free_count();
    if free > cell_budget {
        return Err(Error::BudgetExceeded { free, budget: cell_budget });
    }

    let adjacency: Vec<Vec<usize>> = (0..map.len())
        .map(|i| {
            let c = map.coord(i);
            if map.is_obstacle(c) {
                return Vec::new();
            }
            let mut n: Vec<usize> = map
                .neighbors(c)
                .expect("free cell")
                .into_iter()
                .map(|(n, _)| map.index(n))
                .collect();
            if reverse {
                n.reverse();
            }
            n
        })
        .collect();

    // first pass: every distinct path cost
    let mut costs: Vec<ObjectiveVector> = Vec::new();
    walk(map, goal, &adjacency, map.index(s), &mut |_, v| costs.push(v))?;
    costs.sort_unstable();
    costs.dedup();
    let front: Vec<ObjectiveVector> = costs
        .iter()
        .filter(|v| {
            !costs
                .iter()
                .any(|w| dominates_components(&w.components(), &v.components()))
        })
        .copied()
        .collect();

    // second pass: counts, coverage and paths of the non-dominated ones
    let mut counts: BTreeMap<ObjectiveVector, u64> = front.iter().map(|v| (*v, 0)).collect();
    let mut covered = vec![false; map.len()];
    let mut paths = Vec::new();
    walk(map, goal, &adjacency, map.index(s), &mut |cells, v| {
        if let Some(n) = counts.get_mut(&v) {
            *n += 1;
            for &c in cells {
                covered[c] = true;
            }
            if keep_paths {
                paths.push((Path(cells.iter().map(|&c| map.coord(c)).collect()), v));
            }
        }
    })?;
    paths.sort_unstable_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));

    let counts: Vec<(ObjectiveVector, BigUint)> =
        counts.into_iter().map(|(v, n)| (v, BigUint::from(n))).collect();
    let total_paths = counts.iter().map(|(_, n)| n).sum();
    let front = LabelSet::from_canonical(front).expect("pairwise non-dominated and sorted");
    let coverage = (0..map.len())
        .filter(|&i| covered[i])
        .map(|i| map.coord(i))
        .collect();
    Ok((
        QueryResult { start: s, front, counts, total_paths, coverage },
        paths,
    ))
}

/// Depth-first enumeration of simple paths from `start` that end at the
/// first goal cell they reach.
fn walk(
    map: &GridMap,
    goal: &GoalRegion,
    adjacency: &[Vec<usize>],
    start: usize,
    visit: &mut dyn FnMut(&[usize], ObjectiveVector),
) -> Result<()> {
    let mut on_path = vec![false; map.len()];
    let mut cells = vec![start];
    // per depth: index of the next neighbour to try
    let mut next = vec![0usize];
    let mut cost = vec![ObjectiveVector::ZERO];
    on_path[start] = true;
    if goal.contains(map.coord(start)) {
        visit(&cells, ObjectiveVector::ZERO);
        return Ok(());
    }
    while let Some(&cur) = cells.last() {
        let depth = cells.len() - 1;
        let k = next[depth];
        if k >= adjacency[cur].len() {
            on_path[cur] = false;
            cells.pop();
            next.pop();
            cost.pop();
            continue;
        }
        next[depth] += 1;
        let n = adjacency[cur][k];
        if on_path[n] {
            continue;
        }
        let (a, b) = (map.coord(cur), map.coord(n));
        let v = cost[depth].checked_add(ObjectiveVector::new(step_length(a, b)?, map.terrain(a)))?;
        cells.push(n);
        if goal.contains(b) {
            visit(&cells, v);
            cells.pop();
            continue;
        }
        on_path[n] = true;
        next.push(0);
        cost.push(v);
    }
    Ok(())
}
