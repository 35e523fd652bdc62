//! ITA-CBS: one constraint tree, incremental target assignment.
//!
//! Every CT node carries the full agent-by-target cost matrix under its
//! constraint set, together with the primal-dual assignment state. A branch
//! adds one constraint on one agent, so only that agent's row changes and
//! the assignment is repaired by dynamic Hungarian updates. Row entries are
//! re-planned lazily: one whose path breaks the new constraint keeps its old
//! cost as a lower bound until the assignment actually selects it.

use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::Duration;

use super::{
    count_conflicts, first_conflict, timed, Clock, Conflict, NodeView, Outcome, Priority, Queued,
    Quiet, SearchObserver, Solution, Stats,
};
use crate::assignment::{hungarian, Assignment, AssignmentState};
use crate::gridmap::TapfInstance;
use crate::lowlevel::{ConstraintSet, CostMatrix, LowLevel, Path};

/// A constraint-tree node.
#[derive(Debug, Clone)]
pub struct CtNode {
    id: u64,
    parent: Option<u64>,
    omega: ConstraintSet,
    matrix: CostMatrix,
    state: AssignmentState,
    assignment: Assignment,
    plan: Vec<Arc<Path>>,
}

impl CtNode {
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Flowtime of the node's plan, equal to its assignment cost.
    pub fn cost(&self) -> u64 {
        self.assignment.total_cost
    }

    pub fn omega(&self) -> &ConstraintSet {
        &self.omega
    }

    pub fn matrix(&self) -> &CostMatrix {
        &self.matrix
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn assignment_state(&self) -> &AssignmentState {
        &self.state
    }

    pub fn plan(&self) -> &[Arc<Path>] {
        &self.plan
    }

    fn view(&self) -> NodeView<'_> {
        NodeView {
            id: self.id,
            parent: self.parent,
            cost: self.cost(),
            omega: &self.omega,
            assignment: &self.assignment,
            paths: &self.plan,
            matrix: Some(&self.matrix),
            tree: None,
            is_root: self.parent.is_none(),
        }
    }
}

/// Reads the plan off the stored paths of the matrix.
fn plan_of(matrix: &CostMatrix, state: &AssignmentState) -> Vec<Arc<Path>> {
    state
        .target_of()
        .iter()
        .enumerate()
        .map(|(i, &j)| Arc::clone(matrix.path(i, j).expect("matched entries are finite")))
        .collect()
}

/// The ITA-CBS search bound to one instance.
pub struct ItaCbs<'a> {
    low: LowLevel<'a>,
    stats: Stats,
    next_id: u64,
}

impl<'a> ItaCbs<'a> {
    pub fn new(instance: &'a TapfInstance) -> Self {
        ItaCbs {
            low: LowLevel::new(instance),
            stats: Stats::default(),
            next_id: 0,
        }
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Root node: unconstrained matrix and its optimal assignment.
    pub fn root(&mut self) -> Option<CtNode> {
        let omega = ConstraintSet::new();
        let low = &self.low;
        let matrix = timed(&mut self.stats.low_level_time, || low.build_cost_matrix(&omega));
        self.stats.ta_calls += 1;
        let state = timed(&mut self.stats.ta_time, || hungarian(matrix.costs()))?;
        let plan = plan_of(&matrix, &state);
        let id = self.fresh_id();
        self.stats.generated += 1;
        Some(CtNode {
            id,
            parent: None,
            omega,
            assignment: state.assignment(),
            matrix,
            state,
            plan,
        })
    }

    /// Children of `node` resolving `conflict`, one per involved agent.
    /// Children without a complete assignment are dropped.
    pub fn branch(&mut self, node: &CtNode, conflict: &Conflict) -> Vec<CtNode> {
        let mut children = Vec::with_capacity(2);
        for agent in [conflict.first, conflict.second] {
            let constraint = conflict.constraint_for(agent);
            assert!(
                !node.omega.contains(&constraint),
                "conflict {conflict:?} repeats constraint {constraint}"
            );
            let omega = node.omega.with(constraint);
            let Some((matrix, state)) = self.replan(node, agent, &omega) else {
                continue;
            };
            let plan = plan_of(&matrix, &state);
            let id = self.fresh_id();
            self.stats.generated += 1;
            children.push(CtNode {
                id,
                parent: Some(node.id),
                omega,
                assignment: state.assignment(),
                matrix,
                state,
                plan,
            });
        }
        children
    }

    /// Matrix and optimal assignment of a child that adds a constraint on
    /// `agent`. Broken entries of the agent's row are kept as lower bounds
    /// and only re-planned once the assignment picks one; the result is
    /// optimal because every matched entry is exact and no other
    /// assignment can cost less than its lower bound.
    fn replan(
        &mut self,
        node: &CtNode,
        agent: usize,
        omega: &ConstraintSet,
    ) -> Option<(CostMatrix, AssignmentState)> {
        let low = &self.low;
        let mut matrix = timed(&mut self.stats.low_level_time, || {
            low.relax_cost_row(&node.matrix, agent, omega)
        });
        let mut state = node.state.clone();
        let mut edited = agent;
        loop {
            self.stats.ta_calls += 1;
            let row = matrix.row(edited).to_vec();
            state = timed(&mut self.stats.ta_time, || state.dynamic_update(edited, row))?;
            let stale = state
                .target_of()
                .iter()
                .enumerate()
                .find(|&(i, &j)| !matrix.is_exact(i, j));
            let Some((i, &j)) = stale else {
                return Some((matrix, state));
            };
            matrix = timed(&mut self.stats.low_level_time, || low.refresh_entry(&matrix, i, j, omega));
            edited = i;
        }
    }

    pub fn solve(mut self, timeout: Duration, observer: &mut dyn SearchObserver) -> Outcome {
        let clock = Clock::start(timeout);
        let mut seq = 0u64;
        let mut open = BinaryHeap::new();
        if let Some(root) = self.root() {
            observer.generated(&root.view());
            let conflicts = timed(&mut self.stats.conflict_time, || count_conflicts(&root.plan));
            open.push(Queued {
                priority: Priority {
                    cost: root.cost(),
                    conflicts,
                    seq,
                },
                node: root,
            });
        }

        while let Some(Queued { node, .. }) = open.pop() {
            if clock.expired() {
                self.stats.runtime = clock.elapsed();
                return Outcome::TimedOut(self.stats);
            }
            observer.popped(&node.view());
            let conflict = timed(&mut self.stats.conflict_time, || first_conflict(&node.plan));
            let Some(conflict) = conflict else {
                self.stats.runtime = clock.elapsed();
                let stats = std::mem::take(&mut self.stats);
                return Outcome::Solved(Solution::from_plan(&node.plan, node.assignment, stats));
            };
            self.stats.expanded += 1;
            for child in self.branch(&node, &conflict) {
                observer.generated(&child.view());
                let conflicts = timed(&mut self.stats.conflict_time, || count_conflicts(&child.plan));
                seq += 1;
                open.push(Queued {
                    priority: Priority {
                        cost: child.cost(),
                        conflicts,
                        seq,
                    },
                    node: child,
                });
            }
        }
        self.stats.runtime = clock.elapsed();
        Outcome::Infeasible(self.stats)
    }
}

pub fn solve(instance: &TapfInstance, timeout: Duration) -> Outcome {
    ItaCbs::new(instance).solve(timeout, &mut Quiet)
}

pub fn solve_observed(
    instance: &TapfInstance,
    timeout: Duration,
    observer: &mut dyn SearchObserver,
) -> Outcome {
    ItaCbs::new(instance).solve(timeout, observer)
}
