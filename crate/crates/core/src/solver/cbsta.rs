//! CBS-TA: a forest of constraint trees, one per target assignment.
//!
//! Roots come from a K-best assignment enumerator over the unconstrained
//! cost matrix. Only the best root exists at first; the next one is
//! generated when a root is expanded. Inside a tree the assignment is fixed
//! and the search is plain CBS.

use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::Duration;

use super::{
    count_conflicts, first_conflict, timed, Clock, Conflict, NodeView, Outcome, Priority, Queued,
    Quiet, RootEvent, SearchObserver, Solution, Stats,
};
use crate::assignment::{Assignment, KBestEnumerator};
use crate::gridmap::TapfInstance;
use crate::lowlevel::{ConstraintSet, CostMatrix, LowLevel, Path};

/// A node of one of the constraint trees.
#[derive(Debug, Clone)]
pub struct CbsTaNode {
    id: u64,
    parent: Option<u64>,
    tree: usize,
    omega: ConstraintSet,
    assignment: Assignment,
    plan: Vec<Arc<Path>>,
    cost: u64,
}

impl CbsTaNode {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn cost(&self) -> u64 {
        self.cost
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    /// Index of the tree, equal to the rank of its assignment.
    pub fn tree(&self) -> usize {
        self.tree
    }

    pub fn omega(&self) -> &ConstraintSet {
        &self.omega
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn plan(&self) -> &[Arc<Path>] {
        &self.plan
    }

    fn view(&self) -> NodeView<'_> {
        NodeView {
            id: self.id,
            parent: self.parent,
            cost: self.cost,
            omega: &self.omega,
            assignment: &self.assignment,
            paths: &self.plan,
            matrix: None,
            tree: Some(self.tree),
            is_root: self.is_root(),
        }
    }
}

/// The CBS-TA search bound to one instance.
pub struct CbsTa<'a> {
    low: LowLevel<'a>,
    root_matrix: CostMatrix,
    roots: KBestEnumerator,
    stats: Stats,
    next_id: u64,
}

impl<'a> CbsTa<'a> {
    pub fn new(instance: &'a TapfInstance) -> Self {
        let mut stats = Stats {
            num_roots: Some(0),
            ..Stats::default()
        };
        let low = LowLevel::new(instance);
        let root_matrix = timed(&mut stats.low_level_time, || {
            low.build_cost_matrix(&ConstraintSet::new())
        });
        let roots = timed(&mut stats.ta_time, || KBestEnumerator::new(root_matrix.costs()));
        CbsTa {
            low,
            root_matrix,
            roots,
            stats,
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

    /// Root of the next tree, carrying the next-best assignment.
    pub fn next_root(&mut self) -> Option<CbsTaNode> {
        self.stats.ta_calls += 1;
        let roots = &mut self.roots;
        let assignment = timed(&mut self.stats.ta_time, || roots.next_assignment())?;
        let plan = assignment
            .target_of
            .iter()
            .enumerate()
            .map(|(i, &j)| Arc::clone(self.root_matrix.path(i, j).expect("assigned entries are finite")))
            .collect();
        let tree = self.roots.emitted() - 1;
        let num_roots = self.stats.num_roots.get_or_insert(0);
        *num_roots += 1;
        self.stats.root_events.push(RootEvent::Generated {
            root: tree,
            cost: assignment.total_cost,
        });
        self.stats.generated += 1;
        let id = self.fresh_id();
        Some(CbsTaNode {
            id,
            parent: None,
            tree,
            omega: ConstraintSet::new(),
            cost: assignment.total_cost,
            assignment,
            plan,
        })
    }

    /// Plain CBS children of `node`: the constrained agent is re-planned
    /// to its fixed target. Agents that can no longer reach it are dropped.
    pub fn branch(&mut self, node: &CbsTaNode, conflict: &Conflict) -> Vec<CbsTaNode> {
        let mut children = Vec::with_capacity(2);
        for agent in [conflict.first, conflict.second] {
            let constraint = conflict.constraint_for(agent);
            assert!(
                !node.omega.contains(&constraint),
                "conflict {conflict:?} repeats constraint {constraint}"
            );
            let omega = node.omega.with(constraint);
            let target = node.assignment.target_of[agent];
            let low = &self.low;
            let path = timed(&mut self.stats.low_level_time, || low.search(agent, target, &omega));
            let Some(path) = path else {
                continue;
            };
            let cost = node.cost - u64::from(node.plan[agent].cost()) + u64::from(path.cost());
            let mut plan = node.plan.clone();
            plan[agent] = Arc::new(path);
            let id = self.fresh_id();
            self.stats.generated += 1;
            children.push(CbsTaNode {
                id,
                parent: Some(node.id),
                tree: node.tree,
                omega,
                assignment: node.assignment.clone(),
                plan,
                cost,
            });
        }
        children
    }

    fn enqueue(&mut self, open: &mut BinaryHeap<Queued<CbsTaNode>>, seq: &mut u64, node: CbsTaNode) {
        let conflicts = timed(&mut self.stats.conflict_time, || count_conflicts(&node.plan));
        *seq += 1;
        open.push(Queued {
            priority: Priority {
                cost: node.cost,
                conflicts,
                seq: *seq,
            },
            node,
        });
    }

    pub fn solve(mut self, timeout: Duration, observer: &mut dyn SearchObserver) -> Outcome {
        // construction work (root matrix, first assignment) counts as runtime
        let setup = self.stats.low_level_time + self.stats.ta_time;
        let clock = Clock::start(timeout.saturating_sub(setup));
        let runtime = |clock: &Clock| clock.elapsed() + setup;
        let mut seq = 0u64;
        let mut open = BinaryHeap::new();
        if let Some(root) = self.next_root() {
            observer.generated(&root.view());
            self.enqueue(&mut open, &mut seq, root);
        }

        while let Some(Queued { node, .. }) = open.pop() {
            if clock.expired() {
                self.stats.runtime = runtime(&clock);
                return Outcome::TimedOut(self.stats);
            }
            observer.popped(&node.view());
            let conflict = timed(&mut self.stats.conflict_time, || first_conflict(&node.plan));
            let Some(conflict) = conflict else {
                self.stats.runtime = runtime(&clock);
                let stats = std::mem::take(&mut self.stats);
                return Outcome::Solved(Solution::from_plan(&node.plan, node.assignment, stats));
            };
            self.stats.expanded += 1;
            if node.is_root() {
                self.stats.root_events.push(RootEvent::Expanded { root: node.tree });
                if let Some(root) = self.next_root() {
                    observer.generated(&root.view());
                    self.enqueue(&mut open, &mut seq, root);
                }
            }
            for child in self.branch(&node, &conflict) {
                observer.generated(&child.view());
                self.enqueue(&mut open, &mut seq, child);
            }
        }
        self.stats.runtime = runtime(&clock);
        Outcome::Infeasible(self.stats)
    }
}

pub fn solve(instance: &TapfInstance, timeout: Duration) -> Outcome {
    CbsTa::new(instance).solve(timeout, &mut Quiet)
}

pub fn solve_observed(
    instance: &TapfInstance,
    timeout: Duration,
    observer: &mut dyn SearchObserver,
) -> Outcome {
    CbsTa::new(instance).solve(timeout, observer)
}
