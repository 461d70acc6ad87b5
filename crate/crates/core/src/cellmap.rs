//! The cell-mapping database: for every free cell, the non-dominated cost
//! vectors of all paths from that cell to the goal region.
//!
//! The database is the fixed point of
//!
//! ```text
//! labels[i] <- dom_chk( U_{j in N(i)} { F + dF(i -> j) : F in labels[j] }  U  ({[0,0]} if i in goal) )
//! ```
//!
//! starting from `{[0,0]}` at the goal cells and empty sets elsewhere. Two
//! schedules reach it: synchronous sweeps over all cells (the textbook
//! iteration, stopping once a sweep changes nothing) and a label-setting
//! worklist that settles individual vectors in lexicographic order. Both
//! produce the same database, including the recorded sweep count.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{step_length, CellCoord, GoalRegion, GridMap};
use crate::pareto::{dom_chk, LabelSet, ObjectiveVector};

/// Identifies how terrain cost is attributed along a hop: the hop `i -> j`
/// charges `terrain(i)`, so `f2` counts the start cell and every
/// intermediate cell but not the goal cell.
pub const CONVENTION_TAG: &str = "len10-14/terrain-source-cell/goal-zero";

pub const DATABASE_VERSION: u32 = 1;

/// Incremental cost of prepending `i` to a path that continues at `j`.
pub fn delta_f(map: &GridMap, i: CellCoord, j: CellCoord) -> Result<ObjectiveVector> {
    map.check_free(i)?;
    map.check_free(j)?;
    let step = step_length(i, j)?;
    Ok(ObjectiveVector::new(step, map.terrain(i)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Synchronous full sweeps; each sweep reads only the previous one.
    Sweep,
    /// Label-setting worklist ordered lexicographically by cost.
    #[default]
    Worklist,
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep" => Ok(Self::Sweep),
            "worklist" => Ok(Self::Worklist),
            other => Err(Error::InvalidParameter(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub schedule: Schedule,
    /// Worker threads for the sweep schedule; `None` uses all cores.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    n_rows: usize,
    n_cols: usize,
    labels: Vec<LabelSet>,
    goal: GoalRegion,
    map_digest: String,
    iterations: usize,
}

impl Database {
    pub fn labels(&self, c: CellCoord) -> &LabelSet {
        &self.labels[c.row * self.n_cols + c.col]
    }

    pub fn goal(&self) -> &GoalRegion {
        &self.goal
    }

    pub fn map_digest(&self) -> &str {
        &self.map_digest
    }

    /// Synchronous sweeps needed to reach the fixed point, counting the
    /// final sweep that changes nothing.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn convention_tag(&self) -> &str {
        CONVENTION_TAG
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn check_map(&self, map: &GridMap) -> Result<()> {
        let digest = map.digest();
        if digest != self.map_digest || (map.n_rows(), map.n_cols()) != self.dims() {
            return Err(Error::DigestMismatch {
                expected: self.map_digest.clone(),
                found: digest,
            });
        }
        Ok(())
    }

    /// Direct mutable access to a label set, for fault injection in tests.
    #[doc(hidden)]
    pub fn labels_mut(&mut self, c: CellCoord) -> &mut LabelSet {
        &mut self.labels[c.row * self.n_cols + c.col]
    }

    #[doc(hidden)]
    pub fn set_labels_unchecked(&mut self, c: CellCoord, vectors: Vec<ObjectiveVector>) {
        let i = c.row * self.n_cols + c.col;
        self.labels[i] = LabelSet::from_unchecked(vectors);
    }

    pub fn save(&self) -> Result<Vec<u8>> {
        let file = DatabaseFile {
            version: DATABASE_VERSION,
            map_digest: self.map_digest.clone(),
            convention_tag: CONVENTION_TAG.to_string(),
            dims: [self.n_rows, self.n_cols],
            goal: self.goal.cells().to_vec(),
            iterations: self.iterations,
            labels: LabelsOut(self),
        };
        let mut out = serde_json::to_vec(&file)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn load(bytes: &[u8]) -> Result<Self> {
        let file: DatabaseIn = serde_json::from_slice(bytes)?;
        if file.version != DATABASE_VERSION {
            return Err(Error::Database(format!(
                "unsupported version {}, expected {DATABASE_VERSION}",
                file.version
            )));
        }
        if file.convention_tag != CONVENTION_TAG {
            return Err(Error::Database(format!(
                "unknown convention tag {:?}",
                file.convention_tag
            )));
        }
        if file.map_digest.is_empty() {
            return Err(Error::Database("map digest absent".into()));
        }
        let [n_rows, n_cols] = file.dims;
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Database("dimensions must be positive".into()));
        }
        let in_bounds = |c: CellCoord| c.row < n_rows && c.col < n_cols;
        let goal = GoalRegion::new(file.goal).map_err(|e| Error::Database(e.to_string()))?;
        if let Some(c) = goal.cells().iter().find(|c| !in_bounds(**c)) {
            return Err(Error::Database(format!("goal cell {c} out of bounds")));
        }
        let mut labels = vec![LabelSet::new(); n_rows * n_cols];
        for (key, ls) in file.labels {
            let c: CellCoord = key
                .parse()
                .map_err(|_| Error::Database(format!("bad cell key {key:?}")))?;
            if !in_bounds(c) {
                return Err(Error::Database(format!("cell {c} out of bounds")));
            }
            labels[c.row * n_cols + c.col] = ls;
        }
        Ok(Self {
            n_rows,
            n_cols,
            labels,
            goal,
            map_digest: file.map_digest,
            iterations: file.iterations,
        })
    }
}

#[derive(Serialize)]
struct DatabaseFile<'a> {
    version: u32,
    map_digest: String,
    convention_tag: String,
    dims: [usize; 2],
    goal: Vec<CellCoord>,
    iterations: usize,
    labels: LabelsOut<'a>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatabaseIn {
    version: u32,
    map_digest: String,
    convention_tag: String,
    dims: [usize; 2],
    goal: Vec<CellCoord>,
    iterations: usize,
    labels: BTreeMap<String, LabelSet>,
}

/// Non-empty label sets keyed `"r,c"`, in row-major order.
struct LabelsOut<'a>(&'a Database);

impl Serialize for LabelsOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let db = self.0;
        let non_empty = db.labels.iter().filter(|l| !l.is_empty()).count();
        let mut m = s.serialize_map(Some(non_empty))?;
        for (i, ls) in db.labels.iter().enumerate() {
            if !ls.is_empty() {
                let key = format!("{},{}", i / db.n_cols, i % db.n_cols);
                m.serialize_entry(&key, ls)?;
            }
        }
        m.end()
    }
}

/// Builds the database with the default (worklist) schedule.
pub fn build_database(map: &GridMap, goal: &GoalRegion) -> Result<Database> {
    build_database_with(map, goal, &BuildOptions::default())
}

pub fn build_database_with(
    map: &GridMap,
    goal: &GoalRegion,
    opts: &BuildOptions,
) -> Result<Database> {
    goal.validate(map)?;
    let (labels, iterations) = match opts.schedule {
        Schedule::Sweep => sweep_fixed_point(map, goal, opts.threads)?,
        Schedule::Worklist => {
            let labels = label_setting(map, goal)?;
            let iterations = sweep_count(map, goal, &labels)?;
            (labels, iterations)
        }
    };
    Ok(Database {
        n_rows: map.n_rows(),
        n_cols: map.n_cols(),
        labels,
        goal: goal.clone(),
        map_digest: map.digest(),
        iterations,
    })
}

fn initial_labels(map: &GridMap, goal: &GoalRegion) -> Vec<LabelSet> {
    let mut labels = vec![LabelSet::new(); map.len()];
    for &g in goal.cells() {
        labels[map.index(g)] = LabelSet::singleton(ObjectiveVector::ZERO);
    }
    labels
}

/// One application of the update rule at cell `i`.
fn relax(map: &GridMap, goal: &GoalRegion, labels: &[LabelSet], i: CellCoord) -> Result<LabelSet> {
    if goal.contains(i) {
        return Ok(LabelSet::singleton(ObjectiveVector::ZERO));
    }
    let own = map.terrain(i);
    let mut candidates = Vec::new();
    let mut overflow = false;
    map.for_each_neighbor(i, |j, step| {
        let hop = ObjectiveVector::new(step, own);
        for f in &labels[map.index(j)] {
            match f.checked_add(hop) {
                Ok(v) => candidates.push(v),
                Err(_) => overflow = true,
            }
        }
    });
    if overflow {
        return Err(Error::Overflow);
    }
    Ok(dom_chk(candidates))
}

#[cfg(feature = "parallel")]
fn sweep_once(
    map: &GridMap,
    goal: &GoalRegion,
    prev: &[LabelSet],
    dirty: &[bool],
    threads: Option<usize>,
) -> Result<Vec<LabelSet>> {
    use rayon::prelude::*;

    let run = || {
        (0..map.len())
            .into_par_iter()
            .map(|i| sweep_cell(map, goal, prev, dirty, i))
            .collect::<Result<Vec<_>>>()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run),
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn sweep_once(
    map: &GridMap,
    goal: &GoalRegion,
    prev: &[LabelSet],
    dirty: &[bool],
    _threads: Option<usize>,
) -> Result<Vec<LabelSet>> {
    (0..map.len())
        .map(|i| sweep_cell(map, goal, prev, dirty, i))
        .collect()
}

fn sweep_cell(
    map: &GridMap,
    goal: &GoalRegion,
    prev: &[LabelSet],
    dirty: &[bool],
    i: usize,
) -> Result<LabelSet> {
    let c = map.coord(i);
    if map.is_obstacle(c) {
        return Ok(LabelSet::new());
    }
    // a cell whose neighbours did not change last sweep would recompute the
    // same set
    if !dirty[i] {
        return Ok(prev[i].clone());
    }
    relax(map, goal, prev, c)
}

/// Synchronous iteration until a sweep changes nothing.
fn sweep_fixed_point(
    map: &GridMap,
    goal: &GoalRegion,
    threads: Option<usize>,
) -> Result<(Vec<LabelSet>, usize)> {
    let mut labels = initial_labels(map, goal);
    let mut dirty = vec![true; map.len()];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let next = sweep_once(map, goal, &labels, &dirty, threads)?;
        let changed: Vec<bool> = next.iter().zip(&labels).map(|(a, b)| a != b).collect();
        labels = next;
        if !changed.iter().any(|&c| c) {
            return Ok((labels, iterations));
        }
        dirty.fill(false);
        for i in (0..map.len()).filter(|&i| changed[i]) {
            map.for_each_neighbor(map.coord(i), |n, _| dirty[map.index(n)] = true);
        }
    }
}

/// Bi-objective label setting from the goal outward. Vectors leave the heap
/// in lexicographic order, so a vector that is not covered at its cell when
/// popped is final.
fn label_setting(map: &GridMap, goal: &GoalRegion) -> Result<Vec<LabelSet>> {
    let mut labels = vec![LabelSet::new(); map.len()];
    let mut heap = BinaryHeap::new();
    for &g in goal.cells() {
        heap.push(Reverse((ObjectiveVector::ZERO, map.index(g))));
    }
    let mut overflow = false;
    while let Some(Reverse((v, i))) = heap.pop() {
        if !labels[i].push_sorted(v) {
            continue;
        }
        map.for_each_neighbor(map.coord(i), |n, step| {
            if goal.contains(n) {
                return;
            }
            let Ok(cand) = v.checked_add(ObjectiveVector::new(step, map.terrain(n))) else {
                overflow = true;
                return;
            };
            let k = map.index(n);
            if !labels[k].covers(&cand) {
                heap.push(Reverse((cand, k)));
            }
        });
        if overflow {
            return Err(Error::Overflow);
        }
    }
    Ok(labels)
}

/// Number of synchronous sweeps the textbook iteration would take to reach
/// `labels`: one more than the largest minimum hop count over all stored
/// (cell, vector) states.
fn sweep_count(map: &GridMap, goal: &GoalRegion, labels: &[LabelSet]) -> Result<usize> {
    let mut states: Vec<(ObjectiveVector, usize, usize)> = labels
        .iter()
        .enumerate()
        .flat_map(|(i, ls)| ls.iter().enumerate().map(move |(r, v)| (*v, i, r)))
        .collect();
    // successors carry strictly smaller f1
    states.sort_unstable_by_key(|&(v, i, _)| (v.f1, i));
    let mut hops: Vec<Vec<usize>> = labels.iter().map(|ls| vec![usize::MAX; ls.len()]).collect();
    let mut max_hops = 0;
    for (v, i, r) in states {
        let c = map.coord(i);
        let h = if goal.contains(c) {
            0
        } else {
            let own = map.terrain(c);
            let mut best = usize::MAX;
            map.for_each_neighbor(c, |j, step| {
                let Some(rest) = v.checked_sub(ObjectiveVector::new(step, own)) else {
                    return;
                };
                let k = map.index(j);
                if let Ok(p) = labels[k].as_slice().binary_search(&rest) {
                    best = best.min(hops[k][p]);
                }
            });
            if best == usize::MAX {
                return Err(Error::Database(format!(
                    "vector {v} at {c} has no successor decomposition"
                )));
            }
            best + 1
        };
        hops[i][r] = h;
        max_hops = max_hops.max(h);
    }
    Ok(max_hops + 1)
}

/// Checks goal initialisation, successor decomposition of every stored
/// vector, and that one more synchronous sweep changes nothing.
pub fn verify_bellman(db: &Database, map: &GridMap) -> Result<bool> {
    db.check_map(map)?;
    let goal = db.goal();
    for i in 0..map.len() {
        let c = map.coord(i);
        let ls = &db.labels[i];
        if LabelSet::from_canonical(ls.as_slice().to_vec()).is_err() {
            return Ok(false);
        }
        if map.is_obstacle(c) {
            if !ls.is_empty() {
                return Ok(false);
            }
            continue;
        }
        if goal.contains(c) {
            if ls.as_slice() != [ObjectiveVector::ZERO] {
                return Ok(false);
            }
            continue;
        }
        let own = map.terrain(c);
        for v in ls {
            let mut found = false;
            map.for_each_neighbor(c, |j, step| {
                found |= v
                    .checked_sub(ObjectiveVector::new(step, own))
                    .is_some_and(|rest| db.labels(j).contains(&rest));
            });
            if !found {
                return Ok(false);
            }
        }
    }
    for c in map.free_cells() {
        if relax(map, goal, &db.labels, c)? != db.labels[map.index(c)] {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(r: usize, c: usize) -> CellCoord {
        CellCoord::new(r, c)
    }

    fn ov(f1: u64, f2: u64) -> ObjectiveVector {
        ObjectiveVector::new(f1, f2)
    }

    fn both(map: &GridMap, goal: &GoalRegion) -> Database {
        let a = build_database_with(
            map,
            goal,
            &BuildOptions { schedule: Schedule::Sweep, threads: Some(1) },
        )
        .unwrap();
        let b = build_database(map, goal).unwrap();
        assert_eq!(a, b);
        assert!(verify_bellman(&a, map).unwrap());
        a
    }

    fn two_by_three() -> GridMap {
        GridMap::parse(b"2 3\n0 5 0\n0 0 0\n").unwrap()
    }

    #[test]
    fn delta_f_examples() {
        let mut m = GridMap::uniform(2, 2, 0).unwrap();
        m.set_terrain(cc(0, 0), 3).unwrap();
        assert_eq!(delta_f(&m, cc(0, 0), cc(0, 1)).unwrap(), ov(10, 3));
        let m = GridMap::uniform(2, 2, 0).unwrap();
        assert_eq!(delta_f(&m, cc(0, 0), cc(1, 1)).unwrap(), ov(14, 0));
        assert!(matches!(delta_f(&m, cc(0, 0), cc(0, 0)), Err(Error::NotAdjacent(..))));
    }

    #[test]
    fn single_hop() {
        let m = GridMap::uniform(1, 2, 0).unwrap();
        let db = both(&m, &GoalRegion::single(cc(0, 1)));
        assert_eq!(db.labels(cc(0, 0)).as_slice(), &[ov(10, 0)]);
        assert_eq!(db.labels(cc(0, 1)).as_slice(), &[ov(0, 0)]);
        assert_eq!(db.iterations(), 2);
    }

    #[test]
    fn one_hop_geometry() {
        let m = GridMap::uniform(3, 3, 0).unwrap();
        let db = both(&m, &GoalRegion::single(cc(1, 1)));
        for c in [cc(0, 1), cc(1, 0), cc(1, 2), cc(2, 1)] {
            assert_eq!(db.labels(c).as_slice(), &[ov(10, 0)]);
        }
        for c in [cc(0, 0), cc(0, 2), cc(2, 0), cc(2, 2)] {
            assert_eq!(db.labels(c).as_slice(), &[ov(14, 0)]);
        }
    }

    #[test]
    fn two_by_three_front() {
        let db = both(&two_by_three(), &GoalRegion::single(cc(0, 2)));
        assert_eq!(db.labels(cc(0, 0)).as_slice(), &[ov(20, 5), ov(28, 0)]);
    }

    #[test]
    fn walled_off_cell_is_empty() {
        let m = GridMap::parse(b"3 4\n# # # 0\n# 0 # 0\n# # # 0\n").unwrap();
        let db = both(&m, &GoalRegion::single(cc(0, 3)));
        assert!(db.labels(cc(1, 1)).is_empty());
        assert_eq!(db.labels(cc(2, 3)).as_slice(), &[ov(20, 0)]);
    }

    #[test]
    fn goal_validation() {
        let m = GridMap::parse(b"1 2\n0 #\n").unwrap();
        assert!(matches!(
            build_database(&m, &GoalRegion::single(cc(0, 1))),
            Err(Error::Obstacle(_))
        ));
        assert!(matches!(
            build_database(&m, &GoalRegion::single(cc(4, 4))),
            Err(Error::OutOfBounds(_))
        ));
    }

    #[test]
    fn multi_cell_goal() {
        let m = GridMap::uniform(1, 5, 1).unwrap();
        let goal = GoalRegion::new([cc(0, 0), cc(0, 4)]).unwrap();
        let db = both(&m, &goal);
        assert_eq!(db.labels(cc(0, 1)).as_slice(), &[ov(10, 1)]);
        assert_eq!(db.labels(cc(0, 2)).as_slice(), &[ov(20, 2)]);
        assert_eq!(db.labels(cc(0, 3)).as_slice(), &[ov(10, 1)]);
    }

    #[test]
    fn verify_rejects_perturbation() {
        let m = two_by_three();
        let mut db = build_database(&m, &GoalRegion::single(cc(0, 2))).unwrap();
        db.set_labels_unchecked(cc(0, 0), vec![ov(21, 5), ov(28, 0)]);
        assert!(!verify_bellman(&db, &m).unwrap());
    }

    #[test]
    fn verify_rejects_injected_dominated_vector() {
        let m = two_by_three();
        let mut db = build_database(&m, &GoalRegion::single(cc(0, 2))).unwrap();
        // [34,5] via (1,0) decomposes but is dominated by [20,5]
        db.set_labels_unchecked(cc(0, 0), vec![ov(20, 5), ov(28, 0), ov(34, 5)]);
        assert!(!verify_bellman(&db, &m).unwrap());
        // the same injection at a non-canonical position
        db.set_labels_unchecked(cc(0, 0), vec![ov(20, 5), ov(24, 5), ov(28, 0)]);
        assert!(!verify_bellman(&db, &m).unwrap());
    }

    #[test]
    fn verify_rejects_wrong_map() {
        let m = two_by_three();
        let db = build_database(&m, &GoalRegion::single(cc(0, 2))).unwrap();
        let other = GridMap::uniform(2, 3, 0).unwrap();
        assert!(matches!(verify_bellman(&db, &other), Err(Error::DigestMismatch { .. })));
        let cut = m.clone().with_corner_cut(false);
        assert!(verify_bellman(&db, &cut).is_err());
    }

    #[test]
    fn save_load_roundtrip() {
        let m = two_by_three();
        let db = build_database(&m, &GoalRegion::single(cc(0, 2))).unwrap();
        let bytes = db.save().unwrap();
        let back = Database::load(&bytes).unwrap();
        assert_eq!(back, db);
        assert_eq!(back.save().unwrap(), bytes);
        assert_eq!(build_database(&m, &GoalRegion::single(cc(0, 2))).unwrap().save().unwrap(), bytes);

        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains(r#""labels":{"0,0":[[20,5],[28,0]],"0,1":[[10,5]]"#), "{text}");
        assert!(Database::load(&bytes[..bytes.len() / 2]).is_err());
    }

    #[test]
    fn load_rejects_bad_files() {
        let m = two_by_three();
        let db = build_database(&m, &GoalRegion::single(cc(0, 2))).unwrap();
        let text = String::from_utf8(db.save().unwrap()).unwrap();
        let wrong_version = text.replace(r#""version":1"#, r#""version":2"#);
        assert!(Database::load(wrong_version.as_bytes()).is_err());
        let no_digest = text.replace(&db.map_digest, "");
        assert!(Database::load(no_digest.as_bytes()).is_err());
        let bad_order = text.replace("[[20,5],[28,0]]", "[[28,0],[20,5]]");
        assert!(Database::load(bad_order.as_bytes()).is_err());
        let oob = text.replace(r#""0,0":"#, r#""9,0":"#);
        assert!(Database::load(oob.as_bytes()).is_err());
    }
}
