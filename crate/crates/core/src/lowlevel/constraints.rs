use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::gridmap::{GridMap, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    /// The agent may not occupy `at` at the timestep.
    Vertex { at: Vertex },
    /// The agent may not move `from -> to` arriving at the timestep.
    Edge { from: Vertex, to: Vertex },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub agent: usize,
    pub time: u32,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn vertex(agent: usize, at: Vertex, time: u32) -> Self {
        Constraint {
            agent,
            time,
            kind: ConstraintKind::Vertex { at },
        }
    }

    /// Edge constraint on the move `from -> to` that ends at `time`.
    pub fn edge(agent: usize, from: Vertex, to: Vertex, time: u32) -> Self {
        assert!(time >= 1, "edge constraints start at timestep 1");
        Constraint {
            agent,
            time,
            kind: ConstraintKind::Edge { from, to },
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstraintKind::Vertex { at } => write!(f, "({}, {at}, {})", self.agent, self.time),
            ConstraintKind::Edge { from, to } => {
                write!(f, "({}, {from}, {to}, {})", self.agent, self.time)
            }
        }
    }
}

struct Link {
    constraint: Constraint,
    next: Option<Arc<Link>>,
}

/// Persistent constraint set. Extending a set shares the parent's storage,
/// so a CT child costs one allocation.
#[derive(Clone, Default)]
pub struct ConstraintSet {
    head: Option<Arc<Link>>,
    len: usize,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// A new set holding `self` plus `constraint`.
    pub fn with(&self, constraint: Constraint) -> Self {
        ConstraintSet {
            head: Some(Arc::new(Link {
                constraint,
                next: self.head.clone(),
            })),
            len: self.len + 1,
        }
    }

    pub fn insert(&mut self, constraint: Constraint) {
        *self = self.with(constraint);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        std::iter::successors(self.head.as_deref(), |link| link.next.as_deref())
            .map(|link| &link.constraint)
    }

    pub fn contains(&self, constraint: &Constraint) -> bool {
        self.iter().any(|c| c == constraint)
    }

    pub fn max_time(&self) -> Option<u32> {
        self.iter().map(|c| c.time).max()
    }

    /// Indexes the constraints of one agent for low-level lookups.
    pub fn for_agent(&self, map: &GridMap, agent: usize) -> AgentConstraints {
        let mut out = AgentConstraints::default();
        for c in self.iter().filter(|c| c.agent == agent) {
            out.max_time = Some(out.max_time.map_or(c.time, |t: u32| t.max(c.time)));
            match c.kind {
                ConstraintKind::Vertex { at } => {
                    out.vertex.insert((map.cell(at), c.time));
                }
                ConstraintKind::Edge { from, to } => {
                    out.edge.insert((map.cell(from), map.cell(to), c.time));
                }
            }
        }
        out
    }
}

impl fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<Constraint> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = Constraint>>(iter: I) -> Self {
        let mut set = ConstraintSet::new();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

/// Hash-indexed view of one agent's constraints, keyed by cell index.
#[derive(Debug, Default, Clone)]
pub struct AgentConstraints {
    vertex: HashSet<(usize, u32)>,
    edge: HashSet<(usize, usize, u32)>,
    max_time: Option<u32>,
}

impl AgentConstraints {
    #[inline]
    pub fn blocks_vertex(&self, cell: usize, time: u32) -> bool {
        !self.vertex.is_empty() && self.vertex.contains(&(cell, time))
    }

    #[inline]
    pub fn blocks_edge(&self, from: usize, to: usize, time: u32) -> bool {
        !self.edge.is_empty() && self.edge.contains(&(from, to, time))
    }

    /// Allowed to move `from -> to` arriving at `time`.
    #[inline]
    pub fn allows_move(&self, from: usize, to: usize, time: u32) -> bool {
        !self.blocks_vertex(to, time) && !self.blocks_edge(from, to, time)
    }

    pub fn max_time(&self) -> Option<u32> {
        self.max_time
    }

    /// Latest vertex constraint on `cell`; resting there is only legal after it.
    pub fn last_vertex_time(&self, cell: usize) -> Option<u32> {
        self.vertex
            .iter()
            .filter(|&&(c, _)| c == cell)
            .map(|&(_, t)| t)
            .max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persistent_extension_shares_parent() {
        let a = Constraint::vertex(0, Vertex::new(1, 0), 2);
        let b = Constraint::edge(1, Vertex::new(2, 0), Vertex::new(3, 0), 3);
        let root = ConstraintSet::new();
        let left = root.with(a);
        let right = left.with(b);
        assert!(root.is_empty());
        assert_eq!(left.len(), 1);
        assert!(right.contains(&a) && right.contains(&b));
        assert!(!left.contains(&b));
        assert_eq!(right.max_time(), Some(3));
    }

    #[test]
    fn membership_is_exact() {
        let set: ConstraintSet = [Constraint::vertex(0, Vertex::new(1, 0), 2)].into_iter().collect();
        assert!(!set.contains(&Constraint::vertex(1, Vertex::new(1, 0), 2)));
        assert!(!set.contains(&Constraint::vertex(0, Vertex::new(1, 0), 3)));
        assert!(!set.contains(&Constraint::vertex(0, Vertex::new(0, 0), 2)));
    }

    #[test]
    fn agent_view() {
        let map = GridMap::from_rows(&["....."]);
        let set: ConstraintSet = [
            Constraint::vertex(0, Vertex::new(2, 0), 2),
            Constraint::vertex(0, Vertex::new(2, 0), 5),
            Constraint::edge(0, Vertex::new(1, 0), Vertex::new(2, 0), 3),
            Constraint::vertex(1, Vertex::new(2, 0), 9),
        ]
        .into_iter()
        .collect();
        let view = set.for_agent(&map, 0);
        assert_eq!(view.max_time(), Some(5));
        assert!(view.blocks_vertex(2, 2));
        assert!(!view.blocks_vertex(2, 9));
        assert!(!view.allows_move(1, 2, 3));
        assert!(view.allows_move(2, 1, 3));
        assert_eq!(view.last_vertex_time(2), Some(5));
        assert_eq!(view.last_vertex_time(3), None);
    }
}
