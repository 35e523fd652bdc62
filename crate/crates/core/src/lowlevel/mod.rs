//! Single-agent space-time A* and the per-node cost matrix built from it.

mod constraints;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::{Arc, OnceLock};

pub use constraints::{AgentConstraints, Constraint, ConstraintKind, ConstraintSet};

use crate::assignment::CostTable;
use crate::cost::Cost;
use crate::gridmap::{GridMap, TapfInstance, Vertex};

/// A timed path: `vertices[t]` is the location at timestep `t`. The agent
/// rests on the last vertex forever after.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    vertices: Vec<Vertex>,
}

impl Path {
    pub fn new(vertices: Vec<Vertex>) -> Self {
        assert!(!vertices.is_empty(), "a path holds at least its start");
        Path { vertices }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Arrival timestep `T`.
    pub fn cost(&self) -> u32 {
        (self.vertices.len() - 1) as u32
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn goal(&self) -> Vertex {
        *self.vertices.last().unwrap()
    }

    /// Location at `t`, resting at the goal after arrival.
    #[inline]
    pub fn at(&self, t: usize) -> Vertex {
        self.vertices[t.min(self.vertices.len() - 1)]
    }
}

impl Path {
    /// Whether the path (including resting on its goal) obeys `constraints`.
    pub fn satisfies(&self, map: &GridMap, constraints: &AgentConstraints) -> bool {
        let cells: Vec<usize> = self.vertices.iter().map(|&v| map.cell(v)).collect();
        let goal = *cells.last().unwrap();
        if constraints.last_vertex_time(goal).is_some_and(|t| t as usize >= self.cost() as usize) {
            return false;
        }
        !constraints.blocks_vertex(cells[0], 0)
            && cells
                .windows(2)
                .enumerate()
                .all(|(t, w)| constraints.allows_move(w[0], w[1], t as u32 + 1))
    }
}

impl AsRef<Path> for Path {
    fn as_ref(&self) -> &Path {
        self
    }
}

/// Space-time A* from `start` to `goal` under `constraints`.
///
/// `heuristic` holds true distances to `goal` (`u32::MAX` if unreachable).
/// States beyond the agent's last constrained timestep fold into a single
/// time-invariant layer, so the search terminates even when no path exists.
pub fn space_time_astar(
    map: &GridMap,
    start: usize,
    goal: usize,
    constraints: &AgentConstraints,
    heuristic: &[u32],
) -> Option<Path> {
    if heuristic[start] == u32::MAX || constraints.blocks_vertex(start, 0) {
        return None;
    }
    let last_layer = constraints.max_time().map_or(0, |t| t + 1);
    let rest_after = constraints.last_vertex_time(goal);
    let layers = last_layer as usize + 1;
    let layer = |t: u32| t.min(last_layer) as usize;
    let estimate = |cell: usize, t: u32| {
        let wait = rest_after.map_or(0, |r| (r + 1).saturating_sub(t));
        heuristic[cell].max(wait)
    };

    struct Node {
        cell: usize,
        parent: u32,
    }
    let mut nodes = vec![Node {
        cell: start,
        parent: u32::MAX,
    }];
    let mut closed = vec![false; map.num_cells() * layers];
    // max-heap on (lower f, higher g, earlier push)
    let mut open = BinaryHeap::new();
    open.push((Reverse(estimate(start, 0)), 0u32, Reverse(0u32)));

    while let Some((_, time, Reverse(id))) = open.pop() {
        let cell = nodes[id as usize].cell;
        let key = cell * layers + layer(time);
        if closed[key] {
            continue;
        }
        closed[key] = true;

        if cell == goal && rest_after.is_none_or(|r| time > r) {
            let mut vertices = Vec::with_capacity(time as usize + 1);
            let mut cur = id;
            while cur != u32::MAX {
                let node = &nodes[cur as usize];
                vertices.push(map.vertex(node.cell));
                cur = node.parent;
            }
            vertices.reverse();
            return Some(Path::new(vertices));
        }

        let next_time = time + 1;
        for next in map.successor_cells(cell) {
            if heuristic[next] == u32::MAX
                || closed[next * layers + layer(next_time)]
                || !constraints.allows_move(cell, next, next_time)
            {
                continue;
            }
            let child = nodes.len() as u32;
            nodes.push(Node {
                cell: next,
                parent: id,
            });
            open.push((
                Reverse(next_time + estimate(next, next_time)),
                next_time,
                Reverse(child),
            ));
        }
    }
    None
}

/// Constrained shortest path for `agent`; computes its own heuristic.
pub fn shortest_path(
    map: &GridMap,
    agent: usize,
    start: Vertex,
    goal: Vertex,
    omega: &ConstraintSet,
) -> Option<Path> {
    let heuristic = map.bfs_distances(goal);
    let constraints = omega.for_agent(map, agent);
    space_time_astar(map, map.cell(start), map.cell(goal), &constraints, &heuristic)
}

type PathRow = Arc<[Option<Arc<Path>>]>;

/// N x M constrained shortest-path costs with the paths that realise them.
///
/// An entry may be stale: its path breaks a constraint added later and its
/// cost is only a lower bound on the constrained cost.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    costs: CostTable,
    paths: Vec<PathRow>,
    stale: Vec<Arc<[bool]>>,
}

impl CostMatrix {
    pub fn costs(&self) -> &CostTable {
        &self.costs
    }

    pub fn num_agents(&self) -> usize {
        self.costs.num_rows()
    }

    pub fn num_targets(&self) -> usize {
        self.costs.num_cols()
    }

    pub fn cost(&self, agent: usize, target: usize) -> Cost {
        self.costs.get(agent, target)
    }

    pub fn path(&self, agent: usize, target: usize) -> Option<&Arc<Path>> {
        self.paths[agent][target].as_ref()
    }

    pub fn row(&self, agent: usize) -> &[Cost] {
        self.costs.row(agent)
    }

    pub fn is_exact(&self, agent: usize, target: usize) -> bool {
        !self.stale[agent][target]
    }

    fn with_row(&self, agent: usize, costs: Vec<Cost>, paths: Vec<Option<Arc<Path>>>, stale: Vec<bool>) -> Self {
        let mut out = self.clone();
        out.costs = out.costs.with_row(agent, costs);
        out.paths[agent] = paths.into();
        out.stale[agent] = stale.into();
        out
    }
}

/// Low-level planner bound to one instance. Goal heuristics are computed on
/// first use and shared by every search on the instance.
pub struct LowLevel<'a> {
    instance: &'a TapfInstance,
    heuristics: Vec<OnceLock<Vec<u32>>>,
}

impl<'a> LowLevel<'a> {
    pub fn new(instance: &'a TapfInstance) -> Self {
        LowLevel {
            instance,
            heuristics: (0..instance.num_targets()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn instance(&self) -> &'a TapfInstance {
        self.instance
    }

    fn heuristic(&self, target: usize) -> &[u32] {
        self.heuristics[target]
            .get_or_init(|| self.instance.map().bfs_distances(self.instance.targets()[target]))
    }

    /// Shortest path for `agent` to target column `target` under `omega`.
    pub fn search(&self, agent: usize, target: usize, omega: &ConstraintSet) -> Option<Path> {
        let constraints = omega.for_agent(self.instance.map(), agent);
        self.search_with(agent, target, &constraints)
    }

    fn search_with(&self, agent: usize, target: usize, constraints: &AgentConstraints) -> Option<Path> {
        let map = self.instance.map();
        space_time_astar(
            map,
            map.cell(self.instance.starts()[agent]),
            map.cell(self.instance.targets()[target]),
            constraints,
            self.heuristic(target),
        )
    }

    fn plan_row(&self, agent: usize, omega: &ConstraintSet) -> (Vec<Cost>, Vec<Option<Arc<Path>>>) {
        let m = self.instance.num_targets();
        let mut costs = vec![Cost::INF; m];
        let mut paths = vec![None; m];
        let constraints = omega.for_agent(self.instance.map(), agent);
        for target in self.instance.target_set(agent) {
            if let Some(path) = self.search_with(agent, target, &constraints) {
                costs[target] = Cost::new(path.cost());
                paths[target] = Some(Arc::new(path));
            }
        }
        (costs, paths)
    }

    pub fn build_cost_matrix(&self, omega: &ConstraintSet) -> CostMatrix {
        let (costs, paths): (Vec<_>, Vec<_>) = (0..self.instance.num_agents())
            .map(|agent| self.plan_row(agent, omega))
            .unzip();
        let m = self.instance.num_targets();
        CostMatrix {
            costs: CostTable::new(costs),
            paths: paths.into_iter().map(Into::into).collect(),
            stale: (0..self.instance.num_agents()).map(|_| vec![false; m].into()).collect(),
        }
    }

    /// Recomputes row `agent` under `omega`, which must extend the
    /// constraints `matrix` was built under. Other rows are shared with
    /// `matrix` unchanged.
    pub fn update_cost_row(&self, matrix: &CostMatrix, agent: usize, omega: &ConstraintSet) -> CostMatrix {
        let mut out = self.relax_cost_row(matrix, agent, omega);
        for target in self.instance.target_set(agent) {
            if !out.is_exact(agent, target) {
                out = self.refresh_entry(&out, agent, target, omega);
            }
        }
        out
    }

    /// Row update without searching: cached paths that still obey `omega`
    /// stay optimal, the others keep their old cost as a lower bound and
    /// are marked stale. Unreachable entries stay unreachable.
    pub fn relax_cost_row(&self, matrix: &CostMatrix, agent: usize, omega: &ConstraintSet) -> CostMatrix {
        let map = self.instance.map();
        let constraints = omega.for_agent(map, agent);
        let mut stale = matrix.stale[agent].to_vec();
        for target in self.instance.target_set(agent) {
            if let (false, Some(path)) = (stale[target], &matrix.paths[agent][target]) {
                stale[target] = !path.satisfies(map, &constraints);
            }
        }
        if stale[..] == matrix.stale[agent][..] {
            return matrix.clone();
        }
        matrix.with_row(agent, matrix.row(agent).to_vec(), matrix.paths[agent].to_vec(), stale)
    }

    /// Re-plans one entry under `omega`, making it exact.
    pub fn refresh_entry(&self, matrix: &CostMatrix, agent: usize, target: usize, omega: &ConstraintSet) -> CostMatrix {
        let mut costs = matrix.row(agent).to_vec();
        let mut paths = matrix.paths[agent].to_vec();
        let mut stale = matrix.stale[agent].to_vec();
        let path = self.search(agent, target, omega);
        costs[target] = path.as_ref().map_or(Cost::INF, |p| Cost::new(p.cost()));
        paths[target] = path.map(Arc::new);
        stale[target] = false;
        matrix.with_row(agent, costs, paths, stale)
    }
}

pub fn build_cost_matrix(instance: &TapfInstance, omega: &ConstraintSet) -> CostMatrix {
    LowLevel::new(instance).build_cost_matrix(omega)
}

pub fn update_cost_row(
    matrix: &CostMatrix,
    instance: &TapfInstance,
    agent: usize,
    omega: &ConstraintSet,
) -> CostMatrix {
    LowLevel::new(instance).update_cost_row(matrix, agent, omega)
}
