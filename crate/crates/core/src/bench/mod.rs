//! Benchmark scenarios and head-to-head runs.
//!
//! Cases are drawn with ChaCha8 seeded from the case seed, so a case is a
//! pure function of (map, scenario, parameters, seed). Starts are sampled
//! first, targets from the remaining free cells.

use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::gridmap::{
    format_instance, read_instance_file, CaseMeta, GridMap, InstanceError, TapfInstance, Vertex,
};
use crate::solver::{Outcome, RootEvent, SolverKind, Stats};

pub const GROUP_SIZE: usize = 5;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("need {needed} free cells, map has {available}")]
    NotEnoughCells { needed: usize, available: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone)]
pub struct BenchCase {
    pub id: String,
    pub meta: Option<CaseMeta>,
    pub instance: TapfInstance,
}

fn sample_cells(map: &GridMap, count: usize, seed: u64) -> Result<Vec<Vertex>, GenError> {
    let mut cells = map.passable_vertices();
    if cells.len() < count {
        return Err(GenError::NotEnoughCells {
            needed: count,
            available: cells.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (picked, _) = cells.partial_shuffle(&mut rng, count);
    Ok(picked.to_vec())
}

/// Group scenario: agents in consecutive groups of five (the last group
/// takes the remainder), each group sharing its own target set of the
/// group's size. Sets of different groups are disjoint.
pub fn gen_group(map: Arc<GridMap>, map_name: &str, num_agents: usize, seed: u64) -> Result<BenchCase, GenError> {
    if num_agents == 0 {
        return Err(GenError::Params("at least one agent".into()));
    }
    let cells = sample_cells(&map, 2 * num_agents, seed)?;
    let (starts, targets) = cells.split_at(num_agents);
    let eligible = (0..num_agents)
        .map(|i| (0..num_agents).map(|j| i / GROUP_SIZE == j / GROUP_SIZE).collect())
        .collect();
    let instance = TapfInstance::new(map, starts.to_vec(), targets.to_vec(), eligible)?;
    let id = format!("{map_name}_G_n{num_agents}_s{seed}");
    let meta = CaseMeta {
        id: id.clone(),
        map_name: map_name.to_owned(),
        scenario: "group".into(),
        agents: num_agents,
        target_set_size: None,
        shared_ratio: None,
        seed,
    };
    Ok(BenchCase {
        id,
        meta: Some(meta),
        instance,
    })
}

/// Number of pool targets in each set of `size` for a shared ratio given
/// in percent. At 100% one slot stays unique so every agent keeps a target
/// of its own.
pub fn shared_count(size: usize, ratio_percent: u32) -> usize {
    let shared = (ratio_percent as usize * size + 50) / 100;
    if shared >= size {
        size.saturating_sub(1)
    } else {
        shared
    }
}

/// Common scenario: every set of `set_size` mixes a pool shared by all
/// agents with targets unique to the agent.
pub fn gen_common(
    map: Arc<GridMap>,
    map_name: &str,
    num_agents: usize,
    set_size: usize,
    shared_ratio: f64,
    seed: u64,
) -> Result<BenchCase, GenError> {
    if num_agents == 0 || set_size == 0 {
        return Err(GenError::Params("need at least one agent and one target per set".into()));
    }
    if !(0.0..=1.0).contains(&shared_ratio) {
        return Err(GenError::Params(format!("shared ratio {shared_ratio} outside [0, 1]")));
    }
    let percent = (shared_ratio * 100.0).round() as u32;
    let shared = shared_count(set_size, percent);
    let unique = set_size - shared;
    let num_targets = shared + num_agents * unique;
    let cells = sample_cells(&map, num_agents + num_targets, seed)?;
    let (starts, targets) = cells.split_at(num_agents);
    // columns: pool first, then each agent's unique block
    let eligible = (0..num_agents)
        .map(|i| {
            (0..num_targets)
                .map(|j| j < shared || (j - shared) / unique == i)
                .collect()
        })
        .collect();
    let instance = TapfInstance::new(map, starts.to_vec(), targets.to_vec(), eligible)?;
    let id = format!("{map_name}_{percent:03}_k{set_size}_n{num_agents}_s{seed}");
    let meta = CaseMeta {
        id: id.clone(),
        map_name: map_name.to_owned(),
        scenario: "common".into(),
        agents: num_agents,
        target_set_size: Some(set_size),
        shared_ratio: Some(f64::from(percent) / 100.0),
        seed,
    };
    Ok(BenchCase {
        id,
        meta: Some(meta),
        instance,
    })
}

/// Writes `case` as `<dir>/<id>.yaml`, referring to the map relative to `dir`.
pub fn write_case(dir: &FsPath, case: &BenchCase, map_path: &FsPath) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let map_abs = fs::canonicalize(map_path)?;
    let dir_abs = fs::canonicalize(dir)?;
    let map_ref = pathdiff::diff_paths(&map_abs, &dir_abs).unwrap_or(map_abs);
    let text = format_instance(&case.instance, &map_ref.to_string_lossy(), case.meta.as_ref());
    let out = dir.join(format!("{}.yaml", case.id));
    fs::write(&out, text)?;
    Ok(out)
}

/// Loads every `*.yaml` instance in `dir`, sorted by file name. Files
/// without case metadata take their file stem as id.
pub fn load_cases(dir: &FsPath) -> Result<Vec<BenchCase>, InstanceError> {
    let entries = fs::read_dir(dir).map_err(|source| InstanceError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "yaml" || x == "yml"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|path| {
            let loaded = read_instance_file(path)?;
            let id = match &loaded.meta {
                Some(meta) => meta.id.clone(),
                None => path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
            };
            Ok(BenchCase {
                id,
                meta: loaded.meta,
                instance: loaded.instance,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Solved,
    Infeasible,
    TimedOut,
    Panicked(String),
}

/// One (case, solver) run. `status` and `root_events` are not part of the
/// CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub case_id: String,
    pub solver: SolverKind,
    pub solved: bool,
    pub runtime: Duration,
    pub flowtime: Option<u64>,
    pub expanded: u64,
    pub generated: u64,
    pub num_roots: Option<u64>,
    pub ta_calls: u64,
    pub ta_time: Duration,
    pub low_level_time: Duration,
    pub conflict_time: Duration,
    pub other_time: Duration,
    pub status: RunStatus,
    pub root_events: Vec<RootEvent>,
}

pub const CSV_HEADER: [&str; 13] = [
    "case_id",
    "solver",
    "solved",
    "runtime_ms",
    "flowtime",
    "ct_nodes_expanded",
    "ct_nodes_generated",
    "num_roots",
    "ta_calls",
    "ta_time_ms",
    "low_level_time_ms",
    "conflict_detect_time_ms",
    "other_time_ms",
];

fn record(case_id: &str, solver: SolverKind, outcome: Outcome, cap: Duration) -> BenchRecord {
    let (status, flowtime) = match &outcome {
        Outcome::Solved(s) => (RunStatus::Solved, Some(s.flowtime)),
        Outcome::Infeasible(_) => (RunStatus::Infeasible, None),
        Outcome::TimedOut(_) => (RunStatus::TimedOut, None),
    };
    let stats = outcome.stats();
    let mut runtime = stats.runtime;
    let mut parts = [stats.ta_time, stats.low_level_time, stats.conflict_time];
    if status == RunStatus::TimedOut {
        // timeouts count as exactly the cap; the breakdown is squeezed under it
        runtime = cap;
        let sum: Duration = parts.iter().sum();
        if sum > cap {
            let scale = cap.as_secs_f64() / sum.as_secs_f64();
            for p in &mut parts {
                *p = p.mul_f64(scale);
            }
        }
    }
    let other = runtime.saturating_sub(parts.iter().sum());
    BenchRecord {
        case_id: case_id.to_owned(),
        solver,
        solved: status == RunStatus::Solved,
        runtime,
        flowtime,
        expanded: stats.expanded,
        generated: stats.generated,
        num_roots: stats.num_roots,
        ta_calls: stats.ta_calls,
        ta_time: parts[0],
        low_level_time: parts[1],
        conflict_time: parts[2],
        other_time: other,
        status,
        root_events: stats.root_events.clone(),
    }
}

fn panicked(case_id: &str, solver: SolverKind, message: String, cap: Duration) -> BenchRecord {
    let mut rec = record(case_id, solver, Outcome::TimedOut(Stats::default()), cap);
    rec.status = RunStatus::Panicked(message);
    rec
}

/// Runs every solver on every case, `jobs` runs at a time (0: one per
/// core). Records come back in (case, solver) order.
pub fn run(cases: &[BenchCase], solvers: &[SolverKind], timeout: Duration, jobs: usize) -> Vec<BenchRecord> {
    // The first run on a case pays for cold caches, so odd cases run the
    // solvers in reverse; records are put back in (case, solver) order.
    let work: Vec<(&BenchCase, SolverKind)> = cases
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            let mut order = solvers.to_vec();
            if i % 2 == 1 {
                order.reverse();
            }
            order.into_iter().map(move |s| (c, s))
        })
        .collect();
    let one = |&(case, solver): &(&BenchCase, SolverKind)| {
        match catch_unwind(AssertUnwindSafe(|| solver.solve(&case.instance, timeout))) {
            Ok(outcome) => record(&case.id, solver, outcome, timeout),
            Err(payload) => {
                let message = payload
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "solver panicked".into());
                panicked(&case.id, solver, message, timeout)
            }
        }
    };
    let mut records: Vec<BenchRecord> = if jobs == 1 {
        work.iter().map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| work.par_iter().map(one).collect())
    };
    for (i, chunk) in records.chunks_mut(solvers.len().max(1)).enumerate() {
        if i % 2 == 1 {
            chunk.reverse();
        }
    }
    records
}

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1000.0)
}

pub fn write_csv<W: io::Write>(out: W, records: &[BenchRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.case_id.clone(),
            r.solver.name().to_owned(),
            r.solved.to_string(),
            ms(r.runtime),
            r.flowtime.map(|f| f.to_string()).unwrap_or_default(),
            r.expanded.to_string(),
            r.generated.to_string(),
            r.num_roots.map(|n| n.to_string()).unwrap_or_default(),
            r.ta_calls.to_string(),
            ms(r.ta_time),
            ms(r.low_level_time),
            ms(r.conflict_time),
            ms(r.other_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}
