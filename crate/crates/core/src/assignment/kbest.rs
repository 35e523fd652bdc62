use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{hungarian, Assignment, AssignmentState, CostTable};
use crate::cost::Cost;

/// A cell of Murty's partition: assignments that keep agents `0..fixed`
/// (in `order`) on their current targets and avoid every pair removed from
/// `state.costs`. `state` holds the best member of the cell.
struct Cell {
    state: AssignmentState,
    fixed: usize,
    key: (u64, Vec<usize>),
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, target_of)
        other.key.cmp(&self.key)
    }
}

/// Lazily enumerates assignments in nondecreasing cost, ties in
/// lexicographic order of `target_of`.
///
/// Each emitted assignment splits its cell into at most N children; a
/// child's best member is found by one shortest augmenting path from the
/// parent's primal-dual state, so producing the next assignment costs
/// O(N) augmentations of O(M^2) each.
pub struct KBestEnumerator {
    frontier: BinaryHeap<Cell>,
    emitted: usize,
}

impl KBestEnumerator {
    pub fn new(costs: &CostTable) -> Self {
        let frontier = hungarian(costs)
            .map(|state| {
                let key = (state.total_cost(), state.target_of().to_vec());
                Cell {
                    state,
                    fixed: 0,
                    key,
                }
            })
            .into_iter()
            .collect();
        KBestEnumerator {
            frontier,
            emitted: 0,
        }
    }

    /// Number of assignments returned so far.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Cost of the assignment the next call would return.
    pub fn peek_cost(&self) -> Option<u64> {
        self.frontier.peek().map(|c| c.key.0)
    }

    pub fn next_assignment(&mut self) -> Option<Assignment> {
        let cell = self.frontier.pop()?;
        self.split(&cell);
        self.emitted += 1;
        Some(cell.state.assignment())
    }

    fn split(&mut self, cell: &Cell) {
        let n = cell.state.costs.num_rows();
        let best = cell.state.target_of.clone();
        // `base` accumulates the fixings of agents fixed..p; its potentials
        // stay valid because only unmatched pairs are removed from it.
        let mut base = cell.state.clone();
        for p in cell.fixed..n {
            let target = best[p];
            let mut child = base.clone();
            child.forbid(p, target);
            if child.rematch(p) {
                child.canonicalize(p);
                let key = (child.total_cost(), child.target_of.clone());
                self.frontier.push(Cell {
                    state: child,
                    fixed: p,
                    key,
                });
            }
            for j in 0..base.costs.num_cols() {
                if j != target && base.costs.get(p, j) != Cost::INF {
                    base.forbid(p, j);
                }
            }
            for i in p + 1..n {
                if base.costs.get(i, target) != Cost::INF {
                    base.forbid(i, target);
                }
            }
        }
    }
}

impl Iterator for KBestEnumerator {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        self.next_assignment()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(rows: &[&[u32]]) -> CostTable {
        CostTable::new(rows.iter().map(|r| r.iter().map(|&c| Cost::from(c)).collect()).collect())
    }

    fn all_assignments(costs: &CostTable) -> Vec<(u64, Vec<usize>)> {
        let (n, m) = (costs.num_rows(), costs.num_cols());
        let mut out = Vec::new();
        let mut stack = vec![(Vec::<usize>::new(), 0u64)];
        while let Some((partial, acc)) = stack.pop() {
            if partial.len() == n {
                out.push((acc, partial));
                continue;
            }
            let i = partial.len();
            for j in 0..m {
                if partial.contains(&j) {
                    continue;
                }
                if let Some(c) = costs.get(i, j).get() {
                    let mut next = partial.clone();
                    next.push(j);
                    stack.push((next, acc + c as u64));
                }
            }
        }
        out.sort();
        out
    }

    fn drain(costs: &CostTable) -> Vec<(u64, Vec<usize>)> {
        KBestEnumerator::new(costs)
            .map(|a| (a.total_cost, a.target_of))
            .collect()
    }

    #[test]
    fn two_by_two() {
        assert_eq!(
            drain(&table(&[&[1, 2], &[2, 1]])),
            vec![(2, vec![0, 1]), (4, vec![1, 0])]
        );
    }

    #[test]
    fn single_entry() {
        let mut e = KBestEnumerator::new(&table(&[&[5]]));
        assert_eq!(e.next_assignment().unwrap().total_cost, 5);
        assert!(e.next_assignment().is_none());
        assert_eq!(e.emitted(), 1);
    }

    #[test]
    fn all_ones_in_lexicographic_order() {
        let got = drain(&table(&[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]]));
        let expected: Vec<(u64, Vec<usize>)> = vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
        .into_iter()
        .map(|p| (3, p))
        .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn infeasible_table_yields_nothing() {
        assert!(drain(&table(&[&[1, u32::MAX], &[2, u32::MAX]])).is_empty());
    }

    #[test]
    fn drain_matches_sorted_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(n..=5);
            let t = CostTable::new(
                (0..n)
                    .map(|_| {
                        (0..m)
                            .map(|_| if rng.gen_bool(0.2) { Cost::INF } else { Cost::new(rng.gen_range(0..10)) })
                            .collect()
                    })
                    .collect(),
            );
            assert_eq!(drain(&t), all_assignments(&t), "{t:?}");
        }
    }
}
