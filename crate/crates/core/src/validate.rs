//! Solver-independent solution checking.
//!
//! Everything here works from the problem definition alone: paths are
//! replayed cell by cell with coordinate arithmetic, and collisions are
//! found with a per-timestep occupancy table rather than the pairwise scan
//! the solvers use.

use std::collections::HashMap;
use std::fmt;

use crate::gridmap::{TapfInstance, Vertex};
use crate::solver::Solution;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    AgentCount { expected: usize, found: usize },
    EmptyPath { agent: usize },
    StartMismatch { agent: usize, expected: Vertex, found: Vertex },
    TargetOutOfRange { agent: usize, target: usize },
    TargetNotEligible { agent: usize, target: usize },
    EndsOffTarget { agent: usize, target: Vertex, found: Vertex },
    BlockedCell { agent: usize, time: usize, at: Vertex },
    InvalidMove { agent: usize, time: usize, from: Vertex, to: Vertex },
    NotInjective { first: usize, second: usize, target: usize },
    VertexConflict { first: usize, second: usize, time: usize, at: Vertex },
    EdgeConflict { first: usize, second: usize, time: usize, from: Vertex, to: Vertex },
    FlowtimeMismatch { reported: u64, actual: u64 },
    AssignmentCostMismatch { reported: u64, actual: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match *self {
            AgentCount { expected, found } => {
                write!(f, "agent count: instance has {expected}, solution has {found}")
            }
            EmptyPath { agent } => write!(f, "empty path for agent {agent}"),
            StartMismatch { agent, expected, found } => {
                write!(f, "agent {agent} starts at {found}, expected {expected}")
            }
            TargetOutOfRange { agent, target } => {
                write!(f, "agent {agent} assigned to unknown target {target}")
            }
            TargetNotEligible { agent, target } => {
                write!(f, "agent {agent} assigned to ineligible target {target}")
            }
            EndsOffTarget { agent, target, found } => {
                write!(f, "agent {agent} ends at {found}, not at its target {target}")
            }
            BlockedCell { agent, time, at } => {
                write!(f, "agent {agent} on blocked or off-map cell {at} at t={time}")
            }
            InvalidMove { agent, time, from, to } => {
                write!(f, "agent {agent} jumps {from} -> {to} at t={time}")
            }
            NotInjective { first, second, target } => {
                write!(f, "assignment not injective: agents {first} and {second} share target {target}")
            }
            VertexConflict { first, second, time, at } => {
                write!(f, "vertex conflict ({first}, {second}, {time}) at {at}")
            }
            EdgeConflict { first, second, time, from, to } => {
                write!(f, "edge conflict ({first}, {second}, {time}) on {from} -> {to}")
            }
            FlowtimeMismatch { reported, actual } => {
                write!(f, "flowtime {reported} reported, paths sum to {actual}")
            }
            AssignmentCostMismatch { reported, actual } => {
                write!(f, "assignment cost {reported} reported, paths sum to {actual}")
            }
        }
    }
}

fn on_grid(instance: &TapfInstance, at: Vertex) -> bool {
    instance.map().contains(at) && instance.map().is_passable(at)
}

fn one_step(a: Vertex, b: Vertex) -> bool {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y) <= 1
}

/// All rule violations of `solution`; empty iff it is a valid TAPF plan.
pub fn validate(instance: &TapfInstance, solution: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = instance.num_agents();
    let paths = &solution.paths;
    let target_of = &solution.assignment.target_of;
    if paths.len() != n || target_of.len() != n {
        out.push(Violation::AgentCount {
            expected: n,
            found: if paths.len() != n { paths.len() } else { target_of.len() },
        });
        return out;
    }
    if let Some(agent) = paths.iter().position(|p| p.is_empty()) {
        out.push(Violation::EmptyPath { agent });
        return out;
    }

    let mut holder: HashMap<usize, usize> = HashMap::new();
    for (agent, (path, &target)) in paths.iter().zip(target_of).enumerate() {
        let cells = path.vertices();
        let start = instance.starts()[agent];
        if cells[0] != start {
            out.push(Violation::StartMismatch { agent, expected: start, found: cells[0] });
        }
        if target >= instance.num_targets() {
            out.push(Violation::TargetOutOfRange { agent, target });
        } else {
            if !instance.target_matrix()[agent][target] {
                out.push(Violation::TargetNotEligible { agent, target });
            }
            let goal = instance.targets()[target];
            let end = *cells.last().unwrap();
            if end != goal {
                out.push(Violation::EndsOffTarget { agent, target: goal, found: end });
            }
            if let Some(&first) = holder.get(&target) {
                out.push(Violation::NotInjective { first, second: agent, target });
            } else {
                holder.insert(target, agent);
            }
        }
        for (time, &at) in cells.iter().enumerate() {
            if !on_grid(instance, at) {
                out.push(Violation::BlockedCell { agent, time, at });
            }
        }
        for (time, pair) in cells.windows(2).enumerate() {
            if !one_step(pair[0], pair[1]) {
                out.push(Violation::InvalidMove { agent, time: time + 1, from: pair[0], to: pair[1] });
            }
        }
    }

    // position of each agent at t, resting on its last cell afterwards
    let horizon = paths.iter().map(|p| p.vertices().len()).max().unwrap_or(0);
    let pos = |agent: usize, t: usize| {
        let cells = paths[agent].vertices();
        cells[t.min(cells.len() - 1)]
    };
    for t in 0..horizon {
        let mut occupant: HashMap<Vertex, usize> = HashMap::new();
        for agent in 0..n {
            let at = pos(agent, t);
            match occupant.get(&at) {
                Some(&first) => out.push(Violation::VertexConflict { first, second: agent, time: t, at }),
                None => {
                    occupant.insert(at, agent);
                }
            }
        }
        if t == 0 {
            continue;
        }
        // a swap is the reverse of some other agent's move on the same step
        let mut moves: HashMap<(Vertex, Vertex), usize> = HashMap::new();
        for agent in 0..n {
            let (from, to) = (pos(agent, t - 1), pos(agent, t));
            if from == to {
                continue;
            }
            if let Some(&first) = moves.get(&(to, from)) {
                out.push(Violation::EdgeConflict { first, second: agent, time: t, from: to, to: from });
            }
            moves.insert((from, to), agent);
        }
    }

    let actual: u64 = paths.iter().map(|p| (p.vertices().len() - 1) as u64).sum();
    if solution.flowtime != actual {
        out.push(Violation::FlowtimeMismatch { reported: solution.flowtime, actual });
    }
    if solution.assignment.total_cost != actual {
        out.push(Violation::AssignmentCostMismatch {
            reported: solution.assignment.total_cost,
            actual,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::Assignment;
    use crate::gridmap::GridMap;
    use crate::lowlevel::Path;
    use crate::solver::Stats;
    use std::sync::Arc;

    fn v(x: u32) -> Vertex {
        Vertex::new(x, 0)
    }

    fn two_agent_corridor() -> TapfInstance {
        TapfInstance::from_goal_lists(
            Arc::new(GridMap::from_rows(&["....."])),
            vec![v(0), v(1)],
            &[vec![v(3), v(4)], vec![v(2), v(4)]],
        )
        .unwrap()
    }

    // targets are (d, e, c) = columns (0, 1, 2)
    fn plan(xs: &[&[u32]], target_of: Vec<usize>) -> Solution {
        let paths: Vec<Path> = xs.iter().map(|p| Path::new(p.iter().map(|&x| v(x)).collect())).collect();
        let total: u64 = paths.iter().map(|p| u64::from(p.cost())).sum();
        Solution {
            paths,
            assignment: Assignment { target_of, total_cost: total },
            flowtime: total,
            stats: Stats::default(),
        }
    }

    #[test]
    fn optimal_corridor_plan_is_valid() {
        let sol = plan(&[&[0, 1, 2, 3], &[1, 2, 3, 4]], vec![0, 1]);
        assert_eq!(validate(&two_agent_corridor(), &sol), vec![]);
        assert_eq!(sol.flowtime, 6);
    }

    #[test]
    fn shared_target() {
        let inst = TapfInstance::from_goal_lists(
            Arc::new(GridMap::from_rows(&["....."])),
            vec![v(0), v(1)],
            &[vec![v(4), v(3)], vec![v(4), v(3)]],
        )
        .unwrap();
        let sol = plan(&[&[0, 1, 2, 3, 4], &[1, 2, 3, 4]], vec![0, 0]);
        let found = validate(&inst, &sol);
        assert!(found.contains(&Violation::NotInjective { first: 0, second: 1, target: 0 }));
        assert!(found.iter().any(|x| x.to_string().starts_with("assignment not injective")));
    }

    #[test]
    fn swap_on_c_d_at_three() {
        // agent 1 heads for d (col 0), agent 2 comes back from d to c (col 2)
        let sol = plan(&[&[0, 1, 2, 3], &[1, 2, 3, 2]], vec![0, 2]);
        let found = validate(&two_agent_corridor(), &sol);
        let edge = Violation::EdgeConflict { first: 0, second: 1, time: 3, from: v(2), to: v(3) };
        assert!(found.contains(&edge), "{found:?}");
        assert!(edge.to_string().starts_with("edge conflict (0, 1, 3)"));
    }

    #[test]
    fn parked_agent_is_hit() {
        let sol = plan(&[&[0, 1, 2, 3], &[1, 2]], vec![0, 2]);
        let found = validate(&two_agent_corridor(), &sol);
        assert!(found.contains(&Violation::VertexConflict { first: 0, second: 1, time: 2, at: v(2) }));
    }

    #[test]
    fn structural_errors() {
        let inst = two_agent_corridor();
        let sol = plan(&[&[1, 2, 3], &[1, 3, 4]], vec![0, 1]);
        let found = validate(&inst, &sol);
        assert!(found.contains(&Violation::StartMismatch { agent: 0, expected: v(0), found: v(1) }));
        assert!(found.contains(&Violation::InvalidMove { agent: 1, time: 1, from: v(1), to: v(3) }));

        let sol = plan(&[&[0, 1, 2], &[1, 2, 3, 4]], vec![2, 1]);
        assert!(validate(&inst, &sol).contains(&Violation::TargetNotEligible { agent: 0, target: 2 }));

        let sol = plan(&[&[0, 1, 2], &[1, 2, 3, 4]], vec![0, 1]);
        assert!(validate(&inst, &sol)
            .contains(&Violation::EndsOffTarget { agent: 0, target: v(3), found: v(2) }));

        let sol = plan(&[&[0, 1, 2, 3], &[1, 2, 3, 4, 5]], vec![0, 1]);
        assert!(validate(&inst, &sol).iter().any(|x| matches!(x, Violation::BlockedCell { .. })));

        let mut sol = plan(&[&[0, 1, 2, 3], &[1, 2, 3, 4]], vec![0, 1]);
        sol.flowtime = 5;
        assert_eq!(
            validate(&inst, &sol),
            vec![Violation::FlowtimeMismatch { reported: 5, actual: 6 }]
        );
    }
}
