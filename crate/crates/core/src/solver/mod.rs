//! High-level conflict-based searches and the types they share.

pub mod cbsta;
pub mod itacbs;

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::assignment::{Assignment, CostTable};
use crate::gridmap::{TapfInstance, Vertex};
use crate::lowlevel::{Constraint, ConstraintSet, CostMatrix, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConflictKind {
    Vertex { at: Vertex },
    /// The first agent moves `from -> to`, the second `to -> from`.
    Edge { from: Vertex, to: Vertex },
}

/// A collision between two agents, `first < second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Conflict {
    pub first: usize,
    pub second: usize,
    pub time: u32,
    pub kind: ConflictKind,
}

impl Conflict {
    /// The constraint that forbids `agent`'s part of this conflict.
    pub fn constraint_for(&self, agent: usize) -> Constraint {
        debug_assert!(agent == self.first || agent == self.second);
        match self.kind {
            ConflictKind::Vertex { at } => Constraint::vertex(agent, at, self.time),
            ConflictKind::Edge { from, to } if agent == self.first => {
                Constraint::edge(agent, from, to, self.time)
            }
            ConflictKind::Edge { from, to } => Constraint::edge(agent, to, from, self.time),
        }
    }
}

fn horizon<P: AsRef<Path>>(paths: &[P]) -> usize {
    paths.iter().map(|p| p.as_ref().len()).max().unwrap_or(0)
}

fn conflict_at<P: AsRef<Path>>(paths: &[P], i: usize, j: usize, t: usize) -> Option<Conflict> {
    let (a, b) = (paths[i].as_ref(), paths[j].as_ref());
    let (ai, bj) = (a.at(t), b.at(t));
    if ai == bj {
        return Some(Conflict {
            first: i,
            second: j,
            time: t as u32,
            kind: ConflictKind::Vertex { at: ai },
        });
    }
    if t > 0 {
        let (ap, bp) = (a.at(t - 1), b.at(t - 1));
        if ap == bj && bp == ai {
            return Some(Conflict {
                first: i,
                second: j,
                time: t as u32,
                kind: ConflictKind::Edge { from: ap, to: ai },
            });
        }
    }
    None
}

/// Earliest conflict; ties go to the lexicographically smallest agent pair.
/// Agents are checked while resting on their goals.
pub fn first_conflict<P: AsRef<Path>>(paths: &[P]) -> Option<Conflict> {
    let n = paths.len();
    for t in 0..horizon(paths) {
        for i in 0..n {
            for j in i + 1..n {
                if let Some(c) = conflict_at(paths, i, j, t) {
                    return Some(c);
                }
            }
        }
    }
    None
}

/// Number of conflicting (pair, timestep) events in a plan.
pub fn count_conflicts<P: AsRef<Path>>(paths: &[P]) -> usize {
    let n = paths.len();
    let mut count = 0;
    for t in 0..horizon(paths) {
        for i in 0..n {
            for j in i + 1..n {
                count += usize::from(conflict_at(paths, i, j, t).is_some());
            }
        }
    }
    count
}

/// Root-generation events of the CBS-TA forest, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootEvent {
    Generated { root: usize, cost: u64 },
    Expanded { root: usize },
}

/// Search counters and the four-way runtime breakdown.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stats {
    pub expanded: u64,
    pub generated: u64,
    pub ta_calls: u64,
    pub num_roots: Option<u64>,
    pub root_events: Vec<RootEvent>,
    pub ta_time: Duration,
    pub low_level_time: Duration,
    pub conflict_time: Duration,
    pub runtime: Duration,
}

impl Stats {
    /// Runtime not attributed to assignment, low-level search or conflict
    /// detection.
    pub fn other_time(&self) -> Duration {
        self.runtime
            .saturating_sub(self.ta_time + self.low_level_time + self.conflict_time)
    }
}

/// Accumulates time spent in the instrumented call sites.
pub(crate) struct Clock {
    started: Instant,
    timeout: Duration,
}

impl Clock {
    pub(crate) fn start(timeout: Duration) -> Self {
        Clock {
            started: Instant::now(),
            timeout,
        }
    }

    pub(crate) fn expired(&self) -> bool {
        self.started.elapsed() >= self.timeout
    }

    pub(crate) fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }
}

pub(crate) fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let t0 = Instant::now();
    let out = f();
    *slot += t0.elapsed();
    out
}

/// A conflict-free plan with its assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub paths: Vec<Path>,
    pub assignment: Assignment,
    pub flowtime: u64,
    pub stats: Stats,
}

impl Solution {
    /// The assignment's cost is restated for the final, constrained paths;
    /// a CBS-TA node carries the unconstrained cost of its root.
    pub(crate) fn from_plan(paths: &[Arc<Path>], mut assignment: Assignment, stats: Stats) -> Self {
        let flowtime = paths.iter().map(|p| u64::from(p.cost())).sum();
        assignment.total_cost = flowtime;
        Solution {
            paths: paths.iter().map(|p| Path::clone(p)).collect(),
            assignment,
            flowtime,
            stats,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Solution),
    /// The search space was exhausted: no solution exists.
    Infeasible(Stats),
    TimedOut(Stats),
}

impl Outcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Solved(s) => Some(s),
            _ => None,
        }
    }

    pub fn stats(&self) -> &Stats {
        match self {
            Outcome::Solved(s) => &s.stats,
            Outcome::Infeasible(s) | Outcome::TimedOut(s) => s,
        }
    }

    pub fn flowtime(&self) -> Option<u64> {
        self.solution().map(|s| s.flowtime)
    }
}

/// Read-only view of a CT node handed to a [`SearchObserver`].
pub struct NodeView<'a> {
    pub id: u64,
    pub parent: Option<u64>,
    pub cost: u64,
    pub omega: &'a ConstraintSet,
    pub assignment: &'a Assignment,
    pub paths: &'a [Arc<Path>],
    /// Cost matrix of the node (ITA-CBS only). Entries that are not
    /// [`CostMatrix::is_exact`] are lower bounds.
    pub matrix: Option<&'a CostMatrix>,
    /// Index of the CT the node belongs to (CBS-TA only).
    pub tree: Option<usize>,
    pub is_root: bool,
}

impl NodeView<'_> {
    pub fn costs(&self) -> Option<&CostTable> {
        self.matrix.map(CostMatrix::costs)
    }
}

/// Hooks into a search, for tracing and property checks.
pub trait SearchObserver {
    fn popped(&mut self, _node: &NodeView<'_>) {}
    fn generated(&mut self, _node: &NodeView<'_>) {}
}

/// Observer that ignores everything.
pub struct Quiet;

impl SearchObserver for Quiet {}

/// Which high-level search to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    ItaCbs,
    CbsTa,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::ItaCbs => "itacbs",
            SolverKind::CbsTa => "cbsta",
        }
    }

    pub fn solve(self, instance: &TapfInstance, timeout: Duration) -> Outcome {
        match self {
            SolverKind::ItaCbs => itacbs::solve(instance, timeout),
            SolverKind::CbsTa => cbsta::solve(instance, timeout),
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "itacbs" | "ita-cbs" => Ok(SolverKind::ItaCbs),
            "cbsta" | "cbs-ta" => Ok(SolverKind::CbsTa),
            other => Err(format!("unknown solver `{other}` (expected itacbs or cbsta)")),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Priority of a CT node in OPEN: cost, then conflict count, then FIFO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Priority {
    pub cost: u64,
    pub conflicts: usize,
    pub seq: u64,
}

pub(crate) struct Queued<T> {
    pub priority: Priority,
    pub node: T,
}

impl<T> PartialEq for Queued<T> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}

impl<T> Eq for Queued<T> {}

impl<T> PartialOrd for Queued<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Queued<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.priority.cmp(&self.priority)
    }
}
