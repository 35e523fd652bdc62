//! Exhaustive optimal flowtime for tiny instances.
//!
//! A single uniform-cost search over joint states: the cell of every agent,
//! which agents have stopped for good, and the timestep (clamped once no
//! constraint can apply any more). Stopping is a free move that is only
//! allowed on an eligible target with no later vertex constraint there; every
//! timestep costs one per agent still moving. Because stopped agents occupy
//! distinct cells, the induced assignment is injective, so the optimum over
//! joint plans equals the optimum over assignments and their plans.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use thiserror::Error;

use crate::gridmap::{TapfInstance, Vertex};
use crate::lowlevel::{ConstraintKind, ConstraintSet};

pub const MAX_CELLS: usize = 30;
pub const MAX_AGENTS: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle limited to {MAX_CELLS} free cells and {MAX_AGENTS} agents, got {cells} and {agents}")]
    TooLarge { cells: usize, agents: usize },
}

/// A bound on the makespan that is never binding for unconstrained
/// instances inside the guard: every agent can reach its target in turn.
pub fn default_horizon(instance: &TapfInstance) -> u32 {
    let map = instance.map();
    let mut longest = 0;
    for &s in instance.starts() {
        let d = map.bfs_distances(s);
        for &t in instance.targets() {
            let dt = d[map.cell(t)];
            if dt != u32::MAX {
                longest = longest.max(dt);
            }
        }
    }
    map.num_passable() as u32 + instance.num_agents() as u32 * longest
}

/// Minimum flowtime, or `None` if no plan finishes by `horizon`
/// (`None` horizon: unbounded, exact).
pub fn brute_force_optimal(instance: &TapfInstance, horizon: Option<u32>) -> Result<Option<u64>, OracleError> {
    brute_force_constrained(instance, &ConstraintSet::new(), horizon)
}

/// As [`brute_force_optimal`], restricted to plans that satisfy `omega`.
pub fn brute_force_constrained(
    instance: &TapfInstance,
    omega: &ConstraintSet,
    horizon: Option<u32>,
) -> Result<Option<u64>, OracleError> {
    let map = instance.map();
    let n = instance.num_agents();
    if map.num_passable() > MAX_CELLS || n > MAX_AGENTS {
        return Err(OracleError::TooLarge {
            cells: map.num_passable(),
            agents: n,
        });
    }

    let mut vertex_c: HashSet<(usize, Vertex, u32)> = HashSet::new();
    let mut edge_c: HashSet<(usize, Vertex, Vertex, u32)> = HashSet::new();
    for c in omega.iter() {
        match c.kind {
            ConstraintKind::Vertex { at } => {
                vertex_c.insert((c.agent, at, c.time));
            }
            ConstraintKind::Edge { from, to } => {
                edge_c.insert((c.agent, from, to, c.time));
            }
        }
    }
    let last_time = omega.iter().map(|c| c.time).max().unwrap_or(0);
    let can_stop = |agent: usize, at: Vertex, t: u32| {
        instance
            .target_index(at)
            .is_some_and(|j| instance.is_eligible(agent, j))
            && !vertex_c.iter().any(|&(i, v, tc)| i == agent && v == at && tc >= t)
    };
    let steps = |at: Vertex| {
        let mut out = vec![at];
        let (x, y) = (i64::from(at.x), i64::from(at.y));
        for (dx, dy) in [(0, -1), (0, 1), (-1, 0), (1, 0)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 {
                let v = Vertex::new(nx as u32, ny as u32);
                if map.contains(v) && map.is_passable(v) {
                    out.push(v);
                }
            }
        }
        out
    };

    type Key = (Vec<Vertex>, u32, u32);
    let start: Vec<Vertex> = instance.starts().to_vec();
    if (0..n).any(|i| vertex_c.contains(&(i, start[i], 0))) {
        return Ok(None);
    }
    let all_done = (1u32 << n) - 1;
    let mut best: HashMap<Key, u64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert((start.clone(), 0, 0), 0);
    heap.push(Reverse((0u64, 0u32, 0u32, start)));

    while let Some(Reverse((cost, t, done, pos))) = heap.pop() {
        let key = (pos.clone(), done, t.min(last_time + 1));
        if best.get(&key).is_some_and(|&b| b < cost) {
            continue;
        }
        if done == all_done {
            return Ok(Some(cost));
        }
        let mut push = |cost: u64, t: u32, done: u32, pos: Vec<Vertex>| {
            let key = (pos.clone(), done, t.min(last_time + 1));
            if best.get(&key).is_none_or(|&b| cost < b) {
                best.insert(key, cost);
                heap.push(Reverse((cost, t, done, pos)));
            }
        };

        for i in 0..n {
            if done & (1 << i) == 0 && can_stop(i, pos[i], t) {
                push(cost, t, done | (1 << i), pos.clone());
            }
        }

        if horizon.is_some_and(|h| t >= h) {
            continue;
        }
        let next_t = t + 1;
        let active = (0..n).filter(|&i| done & (1 << i) == 0).count() as u64;
        let options: Vec<Vec<Vertex>> = (0..n)
            .map(|i| {
                if done & (1 << i) != 0 {
                    return vec![pos[i]];
                }
                steps(pos[i])
                    .into_iter()
                    .filter(|&to| {
                        !vertex_c.contains(&(i, to, next_t)) && !edge_c.contains(&(i, pos[i], to, next_t))
                    })
                    .collect()
            })
            .collect();
        // odometer over the product of per-agent options
        let mut idx = vec![0usize; n];
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        'product: loop {
            let next: Vec<Vertex> = (0..n).map(|i| options[i][idx[i]]).collect();
            let clash = (0..n).any(|a| {
                (a + 1..n).any(|b| next[a] == next[b] || (next[a] == pos[b] && next[b] == pos[a]))
            });
            if !clash {
                push(cost + active, next_t, done, next);
            }
            for i in 0..n {
                idx[i] += 1;
                if idx[i] < options[i].len() {
                    continue 'product;
                }
                idx[i] = 0;
            }
            break;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::GridMap;
    use crate::lowlevel::Constraint;
    use std::sync::Arc;

    fn v(x: u32) -> Vertex {
        Vertex::new(x, 0)
    }

    fn corridor(starts: Vec<Vertex>, goals: &[Vec<Vertex>]) -> TapfInstance {
        TapfInstance::from_goal_lists(Arc::new(GridMap::from_rows(&["....."])), starts, goals).unwrap()
    }

    #[test]
    fn corridor_example_is_six() {
        let inst = corridor(vec![v(0), v(1)], &[vec![v(3), v(4)], vec![v(2), v(4)]]);
        assert_eq!(brute_force_optimal(&inst, None), Ok(Some(6)));
        let h = default_horizon(&inst);
        assert_eq!(brute_force_optimal(&inst, Some(h)), Ok(Some(6)));
    }

    #[test]
    fn already_home() {
        let inst = corridor(vec![v(2)], &[vec![v(2)]]);
        assert_eq!(brute_force_optimal(&inst, None), Ok(Some(0)));
    }

    #[test]
    fn dead_end_swap_is_infeasible() {
        let inst = corridor(vec![v(0), v(4)], &[vec![v(4)], vec![v(0)]]);
        assert_eq!(brute_force_optimal(&inst, None), Ok(None));
    }

    #[test]
    fn horizon_cuts_off() {
        let inst = corridor(vec![v(0)], &[vec![v(4)]]);
        assert_eq!(brute_force_optimal(&inst, Some(3)), Ok(None));
        assert_eq!(brute_force_optimal(&inst, Some(4)), Ok(Some(4)));
    }

    #[test]
    fn constraints_apply() {
        let inst = corridor(vec![v(0)], &[vec![v(2)]]);
        let omega: ConstraintSet = [Constraint::vertex(0, v(2), 5)].into_iter().collect();
        // must still be off the goal at t=5, so it stops at t=6
        assert_eq!(brute_force_constrained(&inst, &omega, None), Ok(Some(6)));
        let omega: ConstraintSet = [Constraint::edge(0, v(0), v(1), 1)].into_iter().collect();
        assert_eq!(brute_force_constrained(&inst, &omega, None), Ok(Some(3)));
        let omega: ConstraintSet = [Constraint::vertex(0, v(0), 0)].into_iter().collect();
        assert_eq!(brute_force_constrained(&inst, &omega, None), Ok(None));
    }

    #[test]
    fn guard() {
        let inst = TapfInstance::from_goal_lists(
            Arc::new(GridMap::from_rows(&["........", "........", "........", "........"])),
            vec![Vertex::new(0, 0)],
            &[vec![Vertex::new(1, 0)]],
        )
        .unwrap();
        assert!(matches!(brute_force_optimal(&inst, None), Err(OracleError::TooLarge { .. })));
    }
}
