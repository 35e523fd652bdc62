//! Min-cost agent-to-target assignment.
//!
//! Three kernels share one primal-dual representation ([`AssignmentState`]):
//! the full Hungarian method, a single-row dynamic update that reuses the
//! previous matching and potentials, and Murty-style K-best enumeration.
//!
//! The problem is rectangular (N agents, M >= N targets): every agent is
//! matched, targets may stay free. Infinite entries are missing edges.
//! Optimality is certified by potentials `u` (agents), `v` (targets) and a
//! threshold `tau` such that
//!
//! * `u[i] + v[j] <= c[i][j]` for every finite entry,
//! * equality on matched pairs,
//! * `v[j] <= tau` for matched targets and `v[j] >= tau` for free ones.
//!
//! The last condition is the slack of the implicit target-to-sink arcs in the
//! min-cost-flow view of the problem; it is what keeps the rectangular case
//! exact without padding dummy agents.

mod kbest;

use std::fmt;
use std::sync::Arc;

pub use kbest::KBestEnumerator;

use crate::cost::Cost;

const NONE: usize = usize::MAX;
const FROM_SINK: usize = usize::MAX - 1;

/// An N x M cost table with copy-on-write rows.
#[derive(Clone, PartialEq, Eq)]
pub struct CostTable {
    cols: usize,
    rows: Vec<Arc<[Cost]>>,
}

impl CostTable {
    pub fn new(rows: Vec<Vec<Cost>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost table");
        CostTable {
            cols,
            rows: rows.into_iter().map(Into::into).collect(),
        }
    }

    /// Convenience constructor; `None` is infinity.
    pub fn from_options(rows: &[Vec<Option<u32>>]) -> Self {
        CostTable::new(
            rows.iter()
                .map(|r| r.iter().map(|&c| Cost::from(c)).collect())
                .collect(),
        )
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Cost {
        self.rows[row][col]
    }

    pub fn row(&self, row: usize) -> &[Cost] {
        &self.rows[row]
    }

    pub fn with_row(&self, row: usize, costs: Vec<Cost>) -> Self {
        assert_eq!(costs.len(), self.cols);
        let mut out = self.clone();
        out.rows[row] = costs.into();
        out
    }

    fn set(&mut self, row: usize, col: usize, cost: Cost) {
        let mut owned = self.rows[row].to_vec();
        owned[col] = cost;
        self.rows[row] = owned.into();
    }
}

impl fmt::Debug for CostTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| &r[..])).finish()
    }
}

/// A complete injective matching of agents to targets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    pub target_of: Vec<usize>,
    pub total_cost: u64,
}

impl Assignment {
    /// Sums the matched entries of `costs`; `None` if any entry is infinite.
    pub fn from_targets(target_of: Vec<usize>, costs: &CostTable) -> Option<Self> {
        let mut total = 0u64;
        for (i, &j) in target_of.iter().enumerate() {
            total += u64::from(costs.get(i, j).get()?);
        }
        Some(Assignment {
            target_of,
            total_cost: total,
        })
    }
}

/// Violation of the optimality certificate; see the module docs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateError {
    Unmatched { agent: usize },
    Inconsistent { agent: usize, target: usize },
    InfiniteMatch { agent: usize, target: usize },
    Infeasible { agent: usize, target: usize },
    NotTight { agent: usize, target: usize },
    MatchedAboveThreshold { target: usize },
    FreeBelowThreshold { target: usize },
    WrongTotal { stored: u64, actual: u64 },
}

/// Matching plus dual potentials for a cost table.
#[derive(Clone)]
pub struct AssignmentState {
    costs: CostTable,
    target_of: Vec<usize>,
    agent_of: Vec<usize>,
    u: Vec<i64>,
    v: Vec<i64>,
    tau: i64,
}

impl fmt::Debug for AssignmentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AssignmentState")
            .field("target_of", &self.target_of)
            .field("total_cost", &self.total_cost())
            .finish()
    }
}

#[inline]
fn finite(c: Cost) -> Option<i64> {
    c.get().map(i64::from)
}

impl AssignmentState {
    fn empty(costs: CostTable) -> Self {
        let (n, m) = (costs.num_rows(), costs.num_cols());
        AssignmentState {
            target_of: vec![NONE; n],
            agent_of: vec![NONE; m],
            u: vec![0; n],
            v: vec![0; m],
            tau: 0,
            costs,
        }
    }

    pub fn costs(&self) -> &CostTable {
        &self.costs
    }

    pub fn target_of(&self) -> &[usize] {
        &self.target_of
    }

    pub fn total_cost(&self) -> u64 {
        self.target_of
            .iter()
            .enumerate()
            .map(|(i, &j)| self.costs.get(i, j).get().map_or(0, u64::from))
            .sum()
    }

    pub fn assignment(&self) -> Assignment {
        Assignment {
            target_of: self.target_of.clone(),
            total_cost: self.total_cost(),
        }
    }

    pub fn agent_potentials(&self) -> &[i64] {
        &self.u
    }

    pub fn target_potentials(&self) -> &[i64] {
        &self.v
    }

    #[inline]
    fn reduced(&self, i: usize, j: usize) -> Option<i64> {
        finite(self.costs.get(i, j)).map(|c| c - self.u[i] - self.v[j])
    }

    /// Matches the currently free agent `k` by one shortest augmenting path
    /// (Dijkstra on reduced costs). `released` is the target `k` held before,
    /// if any: it must be re-covered, either by a row or by the sink, so the
    /// search ends there instead of at the sink. Returns false when no
    /// augmenting path exists; the state is then unusable.
    fn augment(&mut self, k: usize, released: usize) -> bool {
        debug_assert_eq!(self.target_of[k], NONE);
        let m = self.costs.num_cols();
        let Some(uk) = (0..m)
            .filter_map(|j| finite(self.costs.get(k, j)).map(|c| c - self.v[j]))
            .min()
        else {
            return false;
        };
        self.u[k] = uk;

        // nodes: targets 0..m, then the sink
        const UNSEEN: i64 = i64::MAX;
        let sink = m;
        let terminal = if released == NONE { sink } else { released };
        let mut dist = vec![UNSEEN; m + 1];
        let mut via = vec![NONE; m + 1];
        let mut done = vec![false; m + 1];
        for j in 0..m {
            if let Some(r) = self.reduced(k, j) {
                dist[j] = r;
                via[j] = k;
            }
        }
        loop {
            let mut x = NONE;
            for c in 0..=m {
                if !done[c] && dist[c] != UNSEEN && (x == NONE || dist[c] < dist[x]) {
                    x = c;
                }
            }
            if x == NONE {
                return false;
            }
            done[x] = true;
            if x == terminal {
                break;
            }
            let d = dist[x];
            if x == sink {
                // the sink may take over any matched target, or the released one
                for c in 0..m {
                    if !done[c] && (self.agent_of[c] != NONE || c == released) {
                        let r = self.tau - self.v[c];
                        if d + r < dist[c] {
                            dist[c] = d + r;
                            via[c] = FROM_SINK;
                        }
                    }
                }
                continue;
            }
            match self.agent_of[x] {
                NONE => {
                    let r = self.v[x] - self.tau;
                    if d + r < dist[sink] {
                        dist[sink] = d + r;
                        via[sink] = x;
                    }
                }
                i => {
                    for c in 0..m {
                        if done[c] {
                            continue;
                        }
                        if let Some(r) = self.reduced(i, c) {
                            if d + r < dist[c] {
                                dist[c] = d + r;
                                via[c] = i;
                            }
                        }
                    }
                }
            }
        }

        let best = dist[terminal];
        for j in 0..m {
            if done[j] && dist[j] < best {
                let delta = best - dist[j];
                self.v[j] -= delta;
                let i = self.agent_of[j];
                if i != NONE {
                    self.u[i] += delta;
                }
            }
        }
        if done[sink] && dist[sink] < best {
            self.tau -= best - dist[sink];
        }
        self.u[k] += best;

        // Walk back to `k`. A target entered from the sink ends up free; the
        // path then continues at the free target that fed the sink.
        let mut j = if terminal == sink { via[sink] } else { terminal };
        loop {
            let i = via[j];
            if i == FROM_SINK {
                self.agent_of[j] = NONE;
                j = via[sink];
                continue;
            }
            let previous = self.target_of[i];
            self.target_of[i] = j;
            self.agent_of[j] = i;
            if i == k {
                break;
            }
            j = previous;
        }
        true
    }

    /// Checks the optimality certificate described in the module docs.
    pub fn check_certificate(&self) -> Result<(), CertificateError> {
        let (n, m) = (self.costs.num_rows(), self.costs.num_cols());
        for i in 0..n {
            let j = self.target_of[i];
            if j == NONE {
                return Err(CertificateError::Unmatched { agent: i });
            }
            if self.agent_of[j] != i {
                return Err(CertificateError::Inconsistent { agent: i, target: j });
            }
            match self.reduced(i, j) {
                None => return Err(CertificateError::InfiniteMatch { agent: i, target: j }),
                Some(0) => {}
                Some(_) => return Err(CertificateError::NotTight { agent: i, target: j }),
            }
            for c in 0..m {
                if self.reduced(i, c).is_some_and(|r| r < 0) {
                    return Err(CertificateError::Infeasible { agent: i, target: c });
                }
            }
        }
        for j in 0..m {
            let i = self.agent_of[j];
            if i != NONE && self.target_of[i] != j {
                return Err(CertificateError::Inconsistent { agent: i, target: j });
            }
            if i != NONE && self.v[j] > self.tau {
                return Err(CertificateError::MatchedAboveThreshold { target: j });
            }
            if i == NONE && self.v[j] < self.tau {
                return Err(CertificateError::FreeBelowThreshold { target: j });
            }
        }
        Ok(())
    }

    /// Replaces row `agent` and re-optimises with a single augmentation from
    /// that agent. `None` when the updated table admits no complete matching.
    pub fn dynamic_update(&self, agent: usize, new_row: Vec<Cost>) -> Option<AssignmentState> {
        let mut next = self.clone();
        next.costs = next.costs.with_row(agent, new_row);
        next.rematch(agent).then_some(next)
    }

    /// Unmatches `agent` and augments from it against the current table.
    /// Other rows may only have lost unmatched edges since the potentials
    /// were last valid.
    fn rematch(&mut self, agent: usize) -> bool {
        let old = self.target_of[agent];
        if old != NONE {
            self.agent_of[old] = NONE;
            self.target_of[agent] = NONE;
        }
        self.augment(agent, old)
    }

    /// The lexicographically smallest `target_of` among all optimal
    /// matchings of this table.
    pub fn canonicalized(&self) -> AssignmentState {
        let mut out = self.clone();
        out.canonicalize(0);
        out
    }

    /// Greedy lexicographic minimisation over the optimal face: agents
    /// `0..fixed` keep their targets, every later agent in turn takes the
    /// smallest target that still extends to an optimal matching.
    ///
    /// A matching is optimal iff it only uses tight pairs, covers every
    /// target with `v < tau` and leaves every target with `v > tau` free, so
    /// re-matching is a cycle search in the tight graph where targets with
    /// `v == tau` may enter or leave the matched set.
    fn canonicalize(&mut self, fixed: usize) {
        let n = self.costs.num_rows();
        let mut fixed_agents = vec![false; n];
        fixed_agents[..fixed].iter_mut().for_each(|f| *f = true);
        for i in fixed..n {
            let current = self.target_of[i];
            for j in 0..current {
                if self.reduced(i, j) != Some(0) {
                    continue;
                }
                if let Some(moves) = self.exchange(i, j, &fixed_agents) {
                    for (agent, target) in moves {
                        self.target_of[agent] = target;
                    }
                    self.agent_of.iter_mut().for_each(|a| *a = NONE);
                    for (a, &t) in self.target_of.iter().enumerate() {
                        self.agent_of[t] = a;
                    }
                    break;
                }
            }
            fixed_agents[i] = true;
        }
    }

    /// Moves that put agent `i` on target `j` while staying optimal and not
    /// disturbing fixed agents, or `None` if impossible.
    fn exchange(&self, i: usize, j: usize, fixed: &[bool]) -> Option<Vec<(usize, usize)>> {
        let m = self.costs.num_cols();
        let origin = self.target_of[i];
        let pool = m;
        let holder = |c: usize| self.agent_of[c];
        let usable = |c: usize| {
            let h = holder(c);
            h == NONE || !fixed[h]
        };
        if !usable(j) {
            return None;
        }
        // BFS over targets plus one pool node; an arc x -> y moves the agent
        // holding x onto y.
        let mut parent = vec![NONE; m + 1];
        let mut seen = vec![false; m + 1];
        let mut queue = std::collections::VecDeque::from([j]);
        seen[j] = true;
        let mut reached = false;
        while let Some(x) = queue.pop_front() {
            if x == origin {
                reached = true;
                break;
            }
            let mut next = Vec::new();
            if x == pool {
                for z in 0..m {
                    let h = holder(z);
                    if h != NONE && (z == origin || !fixed[h]) && self.v[z] == self.tau {
                        next.push(z);
                    }
                }
            } else {
                match holder(x) {
                    NONE => {
                        if self.v[x] == self.tau {
                            next.push(pool);
                        }
                    }
                    h => {
                        debug_assert!(h != i && !fixed[h]);
                        for y in 0..m {
                            if y != x && usable(y) && self.reduced(h, y) == Some(0) {
                                if holder(y) == NONE && self.v[y] != self.tau {
                                    continue;
                                }
                                next.push(y);
                            }
                        }
                    }
                }
            }
            for y in next {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if !reached {
            return None;
        }
        let mut chain = vec![origin];
        while *chain.last().unwrap() != j {
            chain.push(parent[*chain.last().unwrap()]);
        }
        chain.reverse();
        let mut moves = vec![(i, j)];
        for w in chain.windows(2) {
            let (x, y) = (w[0], w[1]);
            if x != pool && y != pool {
                moves.push((holder(x), y));
            }
        }
        Some(moves)
    }

    fn forbid(&mut self, agent: usize, target: usize) {
        self.costs.set(agent, target, Cost::INF);
    }
}

/// Optimal assignment of `costs` (lexicographically smallest among ties),
/// or `None` when no complete matching over finite entries exists.
pub fn hungarian(costs: &CostTable) -> Option<AssignmentState> {
    if costs.num_rows() > costs.num_cols() {
        return None;
    }
    let mut state = AssignmentState::empty(costs.clone());
    for k in 0..costs.num_rows() {
        if !state.augment(k, NONE) {
            return None;
        }
    }
    state.canonicalize(0);
    Some(state)
}

/// Free-function form of [`AssignmentState::dynamic_update`].
pub fn dynamic_update(state: &AssignmentState, agent: usize, new_row: Vec<Cost>) -> Option<AssignmentState> {
    state.dynamic_update(agent, new_row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(rows: &[&[u32]]) -> CostTable {
        CostTable::new(rows.iter().map(|r| r.iter().map(|&c| Cost::from(c)).collect()).collect())
    }

    const X: u32 = u32::MAX;

    /// Minimum over all injective agent -> target maps, with the
    /// lexicographically smallest witness.
    fn brute_force(costs: &CostTable) -> Option<(u64, Vec<usize>)> {
        fn go(
            costs: &CostTable,
            i: usize,
            used: &mut Vec<bool>,
            cur: &mut Vec<usize>,
            acc: u64,
            best: &mut Option<(u64, Vec<usize>)>,
        ) {
            if i == costs.num_rows() {
                if best.as_ref().is_none_or(|(b, w)| acc < *b || (acc == *b && *cur < *w)) {
                    *best = Some((acc, cur.clone()));
                }
                return;
            }
            for j in 0..costs.num_cols() {
                if let (false, Some(c)) = (used[j], costs.get(i, j).get()) {
                    used[j] = true;
                    cur.push(j);
                    go(costs, i + 1, used, cur, acc + c as u64, best);
                    cur.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = None;
        go(costs, 0, &mut vec![false; costs.num_cols()], &mut Vec::new(), 0, &mut best);
        best
    }

    fn random_table(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CostTable {
        CostTable::new(
            (0..n)
                .map(|_| {
                    (0..m)
                        .map(|_| if rng.gen_bool(0.2) { Cost::INF } else { Cost::new(rng.gen_range(0..10)) })
                        .collect()
                })
                .collect(),
        )
    }

    #[test]
    fn identity_matrix() {
        let s = hungarian(&table(&[&[0]])).unwrap();
        assert_eq!(s.assignment(), Assignment { target_of: vec![0], total_cost: 0 });
    }

    #[test]
    fn diagonal_dominance() {
        let s = hungarian(&table(&[&[1, 2], &[2, 1]])).unwrap();
        assert_eq!(s.target_of(), &[0, 1]);
        assert_eq!(s.total_cost(), 2);
        s.check_certificate().unwrap();
    }

    #[test]
    fn corridor_root_matrix() {
        // columns (c, d, e)
        let s = hungarian(&table(&[&[X, 3, 4], &[1, X, 3]])).unwrap();
        assert_eq!(s.total_cost(), 4);
        assert_eq!(s.target_of(), &[1, 0]);
        s.check_certificate().unwrap();
    }

    #[test]
    fn corridor_row_updates() {
        let root = hungarian(&table(&[&[X, 3, 4], &[1, X, 3]])).unwrap();
        // agent 1 forbidden from c at t=2
        let delayed = root.dynamic_update(0, vec![Cost::INF, Cost::new(4), Cost::new(5)]).unwrap();
        assert_eq!(delayed.total_cost(), 5);
        delayed.check_certificate().unwrap();
        // agent 2 forbidden from c at t=2
        let bounced = root.dynamic_update(1, vec![Cost::new(3), Cost::INF, Cost::new(3)]).unwrap();
        assert_eq!(bounced.total_cost(), 6);
        bounced.check_certificate().unwrap();
    }

    #[test]
    fn unchanged_row_is_a_no_op() {
        let t = table(&[&[4, 1, 3], &[2, 0, 5], &[3, 2, 2]]);
        let s = hungarian(&t).unwrap();
        for k in 0..3 {
            let again = s.dynamic_update(k, t.row(k).to_vec()).unwrap();
            assert_eq!(again.total_cost(), s.total_cost());
            again.check_certificate().unwrap();
        }
    }

    #[test]
    fn infeasible_tables() {
        assert!(hungarian(&table(&[&[1, X], &[2, X]])).is_none());
        assert!(hungarian(&table(&[&[1], &[1]])).is_none());
        let s = hungarian(&table(&[&[1, X], &[2, 1]])).unwrap();
        assert!(s.dynamic_update(1, vec![Cost::INF, Cost::INF]).is_none());
        assert!(s.dynamic_update(1, vec![Cost::new(1), Cost::INF]).is_none());
        let moved = s.dynamic_update(0, vec![Cost::new(1), Cost::new(2)]).unwrap();
        assert_eq!(moved.total_cost(), 2);
    }

    #[test]
    fn released_target_with_negative_potential() {
        // Agent 0 prefers column 0 strongly, agent 1 would also like it.
        // Moving agent 0 away must hand column 0 to agent 1 even though the
        // augmenting path from agent 0 ends at a different free column.
        let t = table(&[&[0, 9, 9], &[1, 5, X]]);
        let s = hungarian(&t).unwrap();
        assert_eq!(s.target_of(), &[0, 1]);
        let moved = s.dynamic_update(0, vec![Cost::INF, Cost::new(9), Cost::new(9)]).unwrap();
        moved.check_certificate().unwrap();
        assert_eq!(moved.total_cost(), 10);
        assert_eq!(moved.total_cost(), brute_force(moved.costs()).unwrap().0);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let s = hungarian(&table(&[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]])).unwrap();
        assert_eq!(s.target_of(), &[0, 1, 2]);
        let s = hungarian(&table(&[&[5, 5, 5, 5], &[5, 5, 5, 5]])).unwrap();
        assert_eq!(s.target_of(), &[0, 1]);
        let s = hungarian(&table(&[&[2, 1, 1], &[1, 2, 1]])).unwrap();
        assert_eq!(s.target_of(), &[1, 0]);
    }

    #[test]
    fn hungarian_matches_permutation_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.gen_range(1..=6);
            let m = rng.gen_range(n..=8);
            let t = random_table(&mut rng, n, m);
            let got = hungarian(&t);
            let expected = brute_force(&t);
            match (&got, &expected) {
                (Some(s), Some((cost, witness))) => {
                    assert_eq!(s.total_cost(), *cost, "{t:?}");
                    assert_eq!(s.target_of(), &witness[..], "{t:?}");
                    s.check_certificate().unwrap();
                }
                (None, None) => {}
                _ => panic!("feasibility mismatch on {t:?}"),
            }
        }
    }

    #[test]
    fn raising_a_row_costs_at_most_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 200 {
            let t = random_table(&mut rng, 6, 8);
            let Some(s) = hungarian(&t) else { continue };
            let k = rng.gen_range(0..6);
            let delta = rng.gen_range(0..5u32);
            let row: Vec<Cost> = t.row(k).iter().map(|c| c.saturating_add(Cost::new(delta))).collect();
            let updated = s.dynamic_update(k, row.clone()).unwrap();
            let full = hungarian(&t.with_row(k, row)).unwrap();
            assert_eq!(updated.total_cost(), full.total_cost());
            assert!(updated.total_cost() <= s.total_cost() + delta as u64);
            assert!(updated.total_cost() >= s.total_cost());
            checked += 1;
        }
    }

    proptest! {
        #[test]
        fn dynamic_update_equals_rebuild(
            seed in any::<u64>(),
            n in 1usize..=6,
            extra in 0usize..=2,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = n + extra;
            let t = random_table(&mut rng, n, m);
            if let Some(mut state) = hungarian(&t) {
                // a chain of edits, as down a CT branch
                for _ in 0..4 {
                    let k = rng.gen_range(0..n);
                    let row: Vec<Cost> = (0..m)
                        .map(|_| if rng.gen_bool(0.3) { Cost::INF } else { Cost::new(rng.gen_range(0..10)) })
                        .collect();
                    let edited = state.costs().with_row(k, row.clone());
                    let expected = brute_force(&edited).map(|(c, _)| c);
                    let got = state.dynamic_update(k, row);
                    prop_assert_eq!(got.as_ref().map(|s| s.total_cost()), expected);
                    match got {
                        Some(s) => {
                            prop_assert_eq!(s.check_certificate(), Ok(()));
                            let canon = s.canonicalized();
                            prop_assert_eq!(canon.check_certificate(), Ok(()));
                            prop_assert_eq!(
                                Some(canon.target_of().to_vec()),
                                brute_force(&edited).map(|(_, w)| w)
                            );
                            state = s;
                        }
                        None => break,
                    }
                }
            }
        }
    }
}
