//! Random-map campaigns comparing the database against MOA*, and the
//! multi-start amortization table.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cellmap::{build_database_with, BuildOptions};
use crate::error::{Error, Result};
use crate::grid::{CellCoord, GoalRegion, GridMap};
use crate::moastar::MoaSearch;
use crate::query::Query;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub n_maps: usize,
    /// Map sizes as `[rows, cols]`, cycled over the campaign.
    pub dims: Vec<[usize; 2]>,
    pub obstacle_density: f64,
    pub max_cost: u64,
    pub starts_per_map: usize,
    /// Directory for reproducer dumps of front mismatches.
    #[serde(default)]
    pub reproducer_dir: Option<PathBuf>,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_maps == 0 {
            return bad("n_maps must be positive");
        }
        if self.dims.is_empty() || self.dims.iter().any(|[r, c]| *r == 0 || *c == 0) {
            return bad("dims must be a non-empty list of positive sizes");
        }
        if self.dims.iter().any(|[r, c]| r * c < 2) {
            return bad("maps need at least two cells");
        }
        if !(0.0..1.0).contains(&self.obstacle_density) {
            return bad("obstacle_density must lie in [0, 1)");
        }
        if self.starts_per_map == 0 {
            return bad("starts_per_map must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: CellCoord,
    pub front_size: usize,
    pub fronts_equal: bool,
    pub moa_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub map_id: usize,
    pub dims: [usize; 2],
    /// Seed the map was generated from, after any regeneration.
    pub map_seed: u64,
    pub regenerations: u32,
    pub goal: CellCoord,
    pub n_free_cells: usize,
    pub iterations: usize,
    pub build_time_ms: f64,
    pub moa_time_single_start_ms: f64,
    pub fronts_equal: bool,
    /// Largest front over the sampled starts.
    pub front_size: usize,
    pub starts: Vec<StartRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub workers: usize,
    pub maps_passed: usize,
    pub total: usize,
    /// Database build time divided by mean single-start MOA* time.
    pub time_ratio_stats: RatioStats,
    pub records: Vec<MapRecord>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.maps_passed == self.total
    }

    /// Copy with every wall-clock field zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.workers = 0;
        out.time_ratio_stats = RatioStats { min: 0.0, median: 0.0, max: 0.0 };
        for r in &mut out.records {
            r.build_time_ms = 0.0;
            r.moa_time_single_start_ms = 0.0;
            for s in &mut r.starts {
                s.moa_time_ms = 0.0;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per map.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "map_id,rows,cols,map_seed,n_free_cells,iterations,front_size,fronts_equal,build_time_ms,moa_time_single_start_ms\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{:.3},{:.3}\n",
                r.map_id,
                r.dims[0],
                r.dims[1],
                r.map_seed,
                r.n_free_cells,
                r.iterations,
                r.front_size,
                r.fronts_equal,
                r.build_time_ms,
                r.moa_time_single_start_ms
            ));
        }
        out
    }
}

/// SplitMix64 finaliser, used to derive independent sub-seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn sub_seed(seed: u64, map_id: usize, attempt: u32) -> u64 {
    mix(mix(seed ^ mix(map_id as u64)) ^ attempt as u64)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// A generated campaign instance: map, goal cell and sampled starts.
#[derive(Debug, Clone)]
pub struct Instance {
    pub map: GridMap,
    pub map_seed: u64,
    pub regenerations: u32,
    pub goal: CellCoord,
    pub starts: Vec<CellCoord>,
}

/// Deterministically generates map `map_id` of a campaign, regenerating
/// with a fresh sub-seed until at least two cells are free.
pub fn campaign_instance(cfg: &BenchConfig, map_id: usize) -> Result<Instance> {
    let [rows, cols] = cfg.dims[map_id % cfg.dims.len()];
    for attempt in 0..1000u32 {
        let map_seed = sub_seed(cfg.seed, map_id, attempt);
        let map = GridMap::random(map_seed, rows, cols, cfg.obstacle_density, cfg.max_cost)?;
        let free: Vec<CellCoord> = map.free_cells().collect();
        if free.len() < 2 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(map_seed));
        let goal = free[rng.gen_range(0..free.len())];
        let others: Vec<CellCoord> = free.into_iter().filter(|&c| c != goal).collect();
        let k = cfg.starts_per_map.min(others.len());
        let mut starts: Vec<CellCoord> = others.choose_multiple(&mut rng, k).copied().collect();
        starts.sort_unstable();
        return Ok(Instance { map, map_seed, regenerations: attempt, goal, starts });
    }
    Err(Error::InvalidParameter(format!(
        "could not generate a map with two free cells for map {map_id}"
    )))
}

fn run_map(cfg: &BenchConfig, map_id: usize) -> Result<MapRecord> {
    let inst = campaign_instance(cfg, map_id)?;
    let goal = GoalRegion::single(inst.goal);
    let opts = BuildOptions { threads: Some(1), ..BuildOptions::default() };
    let t = Instant::now();
    let db = build_database_with(&inst.map, &goal, &opts)?;
    let build_time_ms = ms(t);
    let query = Query::new(&db, &inst.map)?;

    let mut starts = Vec::with_capacity(inst.starts.len());
    for &s in &inst.starts {
        let t = Instant::now();
        let search = MoaSearch::run(&inst.map, s, &goal)?;
        let moa_time_ms = ms(t);
        let db_front = query.pareto_front_at(s)?;
        let fronts_equal = search.front() == db_front;
        if !fronts_equal {
            if let Some(dir) = &cfg.reproducer_dir {
                dump_reproducer(dir, map_id, &inst, s)?;
            }
        }
        starts.push(StartRecord { start: s, front_size: db_front.len(), fronts_equal, moa_time_ms });
    }
    let moa_mean = starts.iter().map(|s| s.moa_time_ms).sum::<f64>() / starts.len() as f64;
    Ok(MapRecord {
        map_id,
        dims: [inst.map.n_rows(), inst.map.n_cols()],
        map_seed: inst.map_seed,
        regenerations: inst.regenerations,
        goal: inst.goal,
        n_free_cells: inst.map.free_count(),
        iterations: db.iterations(),
        build_time_ms,
        moa_time_single_start_ms: moa_mean,
        fronts_equal: starts.iter().all(|s| s.fronts_equal),
        front_size: starts.iter().map(|s| s.front_size).max().unwrap_or(0),
        starts,
    })
}

fn dump_reproducer(dir: &std::path::Path, map_id: usize, inst: &Instance, s: CellCoord) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let stem = format!("map{map_id}_start{}_{}", s.row, s.col);
    std::fs::write(dir.join(format!("{stem}.map")), inst.map.serialize())?;
    let sidecar = serde_json::json!({
        "start": s,
        "goal": inst.goal,
        "seed": inst.map_seed,
    });
    std::fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    Ok(())
}

fn ratio_stats(mut ratios: Vec<f64>) -> RatioStats {
    if ratios.is_empty() {
        return RatioStats { min: 0.0, median: 0.0, max: 0.0 };
    }
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let median = if n % 2 == 1 {
        ratios[n / 2]
    } else {
        (ratios[n / 2 - 1] + ratios[n / 2]) / 2.0
    };
    RatioStats { min: ratios[0], median, max: ratios[n - 1] }
}

/// Runs a campaign; maps are processed on `threads` workers (all cores when
/// `None`). Non-timing fields do not depend on the worker count.
pub fn run_campaign(cfg: &BenchConfig, threads: Option<usize>) -> Result<BenchReport> {
    cfg.validate()?;
    let (records, workers) = run_maps(cfg, threads)?;
    let maps_passed = records.iter().filter(|r| r.fronts_equal).count();
    let ratios = records
        .iter()
        .filter(|r| r.moa_time_single_start_ms > 0.0)
        .map(|r| r.build_time_ms / r.moa_time_single_start_ms)
        .collect();
    Ok(BenchReport {
        config: cfg.clone(),
        workers,
        maps_passed,
        total: records.len(),
        time_ratio_stats: ratio_stats(ratios),
        records,
    })
}

#[cfg(feature = "parallel")]
fn run_maps(cfg: &BenchConfig, threads: Option<usize>) -> Result<(Vec<MapRecord>, usize)> {
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let workers = pool.current_num_threads();
    let records = pool.install(|| {
        (0..cfg.n_maps)
            .into_par_iter()
            .map(|i| run_map(cfg, i))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((records, workers))
}

#[cfg(not(feature = "parallel"))]
fn run_maps(cfg: &BenchConfig, _threads: Option<usize>) -> Result<(Vec<MapRecord>, usize)> {
    let records = (0..cfg.n_maps).map(|i| run_map(cfg, i)).collect::<Result<Vec<_>>>()?;
    Ok((records, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmortizationRow {
    pub n_starts: usize,
    pub est_moa_total_ms: f64,
    pub db_build_plus_query_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmortizationTable {
    pub sampled_starts: usize,
    /// Set when fewer free non-goal cells existed than were requested.
    pub clamped: bool,
    pub build_ms: f64,
    pub moa_mean_ms: f64,
    pub moa_median_ms: f64,
    pub query_mean_ms: f64,
    pub rows: Vec<AmortizationRow>,
}

impl AmortizationTable {
    /// Database build time over median single-start MOA* time.
    pub fn build_to_moa_ratio(&self) -> f64 {
        self.build_ms / self.moa_median_ms
    }
}

/// Times MOA* on `sample_starts` evenly spaced free non-goal cells and
/// extrapolates linearly to 1, 10, 100 and all free non-goal starts, next to
/// one database build plus that many per-start queries.
pub fn amortization_table(
    map: &GridMap,
    goal: &GoalRegion,
    sample_starts: usize,
) -> Result<AmortizationTable> {
    if sample_starts == 0 {
        return Err(Error::InvalidParameter("sample_starts must be positive".into()));
    }
    goal.validate(map)?;
    let candidates: Vec<CellCoord> = map.free_cells().filter(|c| !goal.contains(*c)).collect();
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("map has no free non-goal cells".into()));
    }
    let clamped = sample_starts > candidates.len();
    let k = sample_starts.min(candidates.len());
    let sample: Vec<CellCoord> = (0..k).map(|i| candidates[i * candidates.len() / k]).collect();

    let t = Instant::now();
    let db = build_database_with(map, goal, &BuildOptions::default())?;
    let build_ms = ms(t);
    let query = Query::new(&db, map)?;

    let mut moa_times = Vec::with_capacity(k);
    let mut query_total = 0.0;
    for &s in &sample {
        let t = Instant::now();
        MoaSearch::run(map, s, goal)?;
        moa_times.push(ms(t));
        let t = Instant::now();
        query.full(s)?;
        query_total += ms(t);
    }
    let moa_mean_ms = moa_times.iter().sum::<f64>() / k as f64;
    moa_times.sort_unstable_by(f64::total_cmp);
    let moa_median_ms = if k % 2 == 1 {
        moa_times[k / 2]
    } else {
        (moa_times[k / 2 - 1] + moa_times[k / 2]) / 2.0
    };
    let query_mean_ms = query_total / k as f64;

    let mut sizes: Vec<usize> = [1, 10, 100]
        .into_iter()
        .filter(|&n| n < candidates.len())
        .collect();
    sizes.push(candidates.len());
    let rows = sizes
        .into_iter()
        .map(|n| AmortizationRow {
            n_starts: n,
            est_moa_total_ms: moa_mean_ms * n as f64,
            db_build_plus_query_ms: build_ms + query_mean_ms * n as f64,
        })
        .collect();
    Ok(AmortizationTable {
        sampled_starts: k,
        clamped,
        build_ms,
        moa_mean_ms,
        moa_median_ms,
        query_mean_ms,
        rows,
    })
}
