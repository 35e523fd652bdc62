//! YAML form of a solution: per-agent target and vertex-time schedule.
//!
//! ```yaml
//! statistics:
//!   solver: itacbs
//!   flowtime: 6
//!   expanded: 2
//!   generated: 5
//!   ta_calls: 5
//! schedule:
//! - agent: agent0
//!   target: [3, 0]
//!   path:
//!   - {x: 0, y: 0, t: 0}
//!   - {x: 1, y: 0, t: 1}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Assignment;
use crate::gridmap::{TapfInstance, Vertex};
use crate::lowlevel::Path;
use crate::solver::{Solution, SolverKind, Stats};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("malformed plan: {0}")]
    Syntax(#[from] serde_yaml::Error),
    #[error("plan names unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("plan lists agent `{0}` twice")]
    DuplicateAgent(String),
    #[error("plan has no schedule for agent `{0}`")]
    MissingAgent(String),
    #[error("agent `{agent}`: step {index} has t={found}, expected {index}")]
    BadTime { agent: String, index: usize, found: u32 },
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanFile {
    statistics: Statistics,
    schedule: Vec<AgentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Statistics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solver: Option<String>,
    flowtime: u64,
    #[serde(default)]
    expanded: u64,
    #[serde(default)]
    generated: u64,
    #[serde(default)]
    ta_calls: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_roots: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AgentEntry {
    agent: String,
    target: [u32; 2],
    path: Vec<Step>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Step {
    x: u32,
    y: u32,
    t: u32,
}

pub fn format_plan(instance: &TapfInstance, solution: &Solution, solver: Option<SolverKind>) -> String {
    let stats = &solution.stats;
    let file = PlanFile {
        statistics: Statistics {
            solver: solver.map(|s| s.name().to_owned()),
            flowtime: solution.flowtime,
            expanded: stats.expanded,
            generated: stats.generated,
            ta_calls: stats.ta_calls,
            num_roots: stats.num_roots,
        },
        schedule: solution
            .paths
            .iter()
            .zip(&solution.assignment.target_of)
            .enumerate()
            .map(|(i, (path, &j))| {
                let target = instance.targets()[j];
                AgentEntry {
                    agent: instance.agent_name(i).to_owned(),
                    target: [target.x, target.y],
                    path: path
                        .vertices()
                        .iter()
                        .enumerate()
                        .map(|(t, v)| Step { x: v.x, y: v.y, t: t as u32 })
                        .collect(),
                }
            })
            .collect(),
    };
    serde_yaml::to_string(&file).expect("plan serialization cannot fail")
}

/// Reads a plan back against its instance. Structural problems (unknown or
/// repeated agents, out-of-order timesteps) are errors; everything a
/// validator can judge is passed through. A target that is not one of the
/// instance's targets maps to the out-of-range index `num_targets`.
pub fn parse_plan(text: &str, instance: &TapfInstance) -> Result<Solution, PlanError> {
    let file: PlanFile = serde_yaml::from_str(text)?;
    let n = instance.num_agents();
    let mut slots: Vec<Option<(usize, Path)>> = vec![None; n];
    for entry in file.schedule {
        let agent = (0..n)
            .find(|&i| instance.agent_name(i) == entry.agent)
            .ok_or_else(|| PlanError::UnknownAgent(entry.agent.clone()))?;
        if slots[agent].is_some() {
            return Err(PlanError::DuplicateAgent(entry.agent));
        }
        for (index, step) in entry.path.iter().enumerate() {
            if step.t as usize != index {
                return Err(PlanError::BadTime {
                    agent: entry.agent,
                    index,
                    found: step.t,
                });
            }
        }
        let target = instance
            .target_index(Vertex::new(entry.target[0], entry.target[1]))
            .unwrap_or(instance.num_targets());
        let path = Path::new(entry.path.iter().map(|s| Vertex::new(s.x, s.y)).collect());
        slots[agent] = Some((target, path));
    }
    let mut target_of = Vec::with_capacity(n);
    let mut paths = Vec::with_capacity(n);
    for (i, slot) in slots.into_iter().enumerate() {
        let (target, path) = slot.ok_or_else(|| PlanError::MissingAgent(instance.agent_name(i).to_owned()))?;
        target_of.push(target);
        paths.push(path);
    }
    let total_cost = paths.iter().map(|p| p.len().saturating_sub(1) as u64).sum();
    let stats = Stats {
        expanded: file.statistics.expanded,
        generated: file.statistics.generated,
        ta_calls: file.statistics.ta_calls,
        num_roots: file.statistics.num_roots,
        ..Stats::default()
    };
    Ok(Solution {
        paths,
        assignment: Assignment { target_of, total_cost },
        flowtime: file.statistics.flowtime,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::GridMap;
    use crate::solver::itacbs;
    use crate::validate::validate;
    use std::sync::Arc;
    use std::time::Duration;

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

    #[test]
    fn round_trip() {
        let inst = two_agent_corridor();
        let sol = itacbs::solve(&inst, Duration::from_secs(1)).solution().unwrap().clone();
        let text = format_plan(&inst, &sol, Some(SolverKind::ItaCbs));
        assert!(text.contains("flowtime: 6"));
        assert!(text.contains("solver: itacbs"));
        let back = parse_plan(&text, &inst).unwrap();
        assert_eq!(back.paths, sol.paths);
        assert_eq!(back.assignment, sol.assignment);
        assert_eq!(back.flowtime, 6);
        assert_eq!(back.stats.expanded, sol.stats.expanded);
        assert!(validate(&inst, &back).is_empty());
    }

    #[test]
    fn agents_in_any_order() {
        let inst = two_agent_corridor();
        let text = "statistics: {flowtime: 6}\nschedule:\n\
            - {agent: agent1, target: [4, 0], path: [{x: 1, y: 0, t: 0}, {x: 2, y: 0, t: 1}, {x: 3, y: 0, t: 2}, {x: 4, y: 0, t: 3}]}\n\
            - {agent: agent0, target: [3, 0], path: [{x: 0, y: 0, t: 0}, {x: 1, y: 0, t: 1}, {x: 2, y: 0, t: 2}, {x: 3, y: 0, t: 3}]}\n";
        let sol = parse_plan(text, &inst).unwrap();
        assert_eq!(sol.assignment.target_of, vec![0, 1]);
        assert!(validate(&inst, &sol).is_empty());
    }

    #[test]
    fn structural_errors() {
        let inst = two_agent_corridor();
        let one = "statistics: {flowtime: 0}\nschedule:\n- {agent: agent0, target: [3, 0], path: [{x: 0, y: 0, t: 0}]}\n";
        assert!(matches!(parse_plan(one, &inst), Err(PlanError::MissingAgent(a)) if a == "agent1"));
        let ghost = "statistics: {flowtime: 0}\nschedule:\n- {agent: zed, target: [3, 0], path: []}\n";
        assert!(matches!(parse_plan(ghost, &inst), Err(PlanError::UnknownAgent(_))));
        let skip = "statistics: {flowtime: 0}\nschedule:\n- {agent: agent0, target: [3, 0], path: [{x: 0, y: 0, t: 1}]}\n";
        assert!(matches!(parse_plan(skip, &inst), Err(PlanError::BadTime { .. })));
        assert!(matches!(parse_plan("schedule: 3", &inst), Err(PlanError::Syntax(_))));
    }

    #[test]
    fn foreign_target_reaches_the_validator() {
        let inst = two_agent_corridor();
        let text = "statistics: {flowtime: 1}\nschedule:\n\
            - {agent: agent0, target: [1, 0], path: [{x: 0, y: 0, t: 0}, {x: 1, y: 0, t: 1}]}\n\
            - {agent: agent1, target: [2, 0], path: [{x: 1, y: 0, t: 0}, {x: 2, y: 0, t: 1}]}\n";
        let sol = parse_plan(text, &inst).unwrap();
        assert_eq!(sol.assignment.target_of[0], 3);
        assert!(!validate(&inst, &sol).is_empty());
    }
}
