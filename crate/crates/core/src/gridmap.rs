//! MovingAI grid maps and TAPF instances.
//!
//! A [`GridMap`] is an immutable 4-connected grid where every passable cell
//! also carries a wait self-loop. A [`TapfInstance`] binds a map to agent
//! start cells, a deduplicated target list and the binary eligibility matrix
//! that says which targets each agent may be assigned.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid cell, `(column, row)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: u32,
    pub y: u32,
}

impl Vertex {
    pub const fn new(x: u32, y: u32) -> Self {
        Vertex { x, y }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}: expected header `{expected}`, found `{found}`")]
    BadHeader {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: invalid {field} value `{value}`")]
    BadDimension {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: expected {expected} glyphs, found {found}")]
    RowLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown glyph `{glyph}`")]
    UnknownGlyph { line: usize, glyph: char },
    #[error("line {line}: map ends after {found} of {expected} rows")]
    MissingRows {
        line: usize,
        expected: usize,
        found: usize,
    },
}

/// Immutable 4-connected grid. `passable` is row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: u32,
    height: u32,
    passable: Vec<bool>,
}

impl GridMap {
    /// Builds a map from a row-major passability grid.
    ///
    /// Panics if the grid is empty or its length does not match the
    /// dimensions.
    pub fn new(width: u32, height: u32, passable: Vec<bool>) -> Self {
        assert!(width >= 1 && height >= 1, "grid must be at least 1x1");
        assert_eq!(passable.len(), width as usize * height as usize);
        GridMap {
            width,
            height,
            passable,
        }
    }

    /// Parses glyph rows; `.` passable, `@` blocked.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.chars().count()) as u32;
        let passable = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c != '@'))
            .collect();
        GridMap::new(width, height, passable)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.passable.len()
    }

    pub fn num_passable(&self) -> usize {
        self.passable.iter().filter(|&&p| p).count()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.x < self.width && v.y < self.height
    }

    pub fn is_passable(&self, v: Vertex) -> bool {
        self.contains(v) && self.passable[self.cell(v)]
    }

    /// Row-major cell index of `v`.
    #[inline]
    pub fn cell(&self, v: Vertex) -> usize {
        v.y as usize * self.width as usize + v.x as usize
    }

    #[inline]
    pub fn vertex(&self, cell: usize) -> Vertex {
        let w = self.width as usize;
        Vertex::new((cell % w) as u32, (cell / w) as u32)
    }

    #[inline]
    pub fn cell_passable(&self, cell: usize) -> bool {
        self.passable[cell]
    }

    /// All passable cells in row-major order.
    pub fn passable_vertices(&self) -> Vec<Vertex> {
        (0..self.num_cells())
            .filter(|&c| self.passable[c])
            .map(|c| self.vertex(c))
            .collect()
    }

    /// Cells reachable in one timestep from `cell`: the cell itself (wait)
    /// followed by its passable 4-neighbours.
    pub fn successor_cells(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let w = self.width as usize;
        let h = self.height as usize;
        let (x, y) = (cell % w, cell / w);
        let up = (y > 0).then(|| cell - w);
        let down = (y + 1 < h).then(|| cell + w);
        let left = (x > 0).then(|| cell - 1);
        let right = (x + 1 < w).then(|| cell + 1);
        std::iter::once(Some(cell))
            .chain([up, down, left, right])
            .flatten()
            .filter(move |&c| self.passable[c])
    }

    /// The wait self-loop plus the passable 4-neighbours of `v`.
    pub fn neighbors(&self, v: Vertex) -> Vec<Vertex> {
        debug_assert!(self.is_passable(v));
        self.successor_cells(self.cell(v))
            .map(|c| self.vertex(c))
            .collect()
    }

    /// True when `u` and `v` are identical or share an edge.
    pub fn adjacent_or_equal(&self, u: Vertex, v: Vertex) -> bool {
        u.x.abs_diff(v.x) + u.y.abs_diff(v.y) <= 1
    }

    /// Single-source BFS distances over passable cells; `u32::MAX` marks
    /// unreachable cells.
    pub fn bfs_distances(&self, source: Vertex) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.num_cells()];
        if !self.is_passable(source) {
            return dist;
        }
        let start = self.cell(source);
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            let d = dist[c] + 1;
            for n in self.successor_cells(c) {
                if dist[n] == u32::MAX {
                    dist[n] = d;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Renders the map in MovingAI `.map` layout.
    pub fn to_movingai(&self) -> String {
        let mut out = format!(
            "type octile\nheight {}\nwidth {}\nmap\n",
            self.height, self.width
        );
        for row in self.passable.chunks(self.width as usize) {
            out.extend(row.iter().map(|&p| if p { '.' } else { '@' }));
            out.push('\n');
        }
        out
    }
}

fn glyph_passable(glyph: char) -> Option<bool> {
    match glyph {
        '.' | 'G' | 'S' => Some(true),
        '@' | 'O' | 'T' | 'W' => Some(false),
        _ => None,
    }
}

/// Parses a MovingAI `.map` file.
pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let mut next_header = |expected: &'static str| -> Result<(usize, String), MapError> {
        let (line, raw) = lines.next().ok_or(MapError::BadHeader {
            line: 0,
            expected,
            found: String::new(),
        })?;
        let mut parts = raw.split_whitespace();
        match parts.next() {
            Some(key) if key == expected => {
                Ok((line, parts.collect::<Vec<_>>().join(" ")))
            }
            _ => Err(MapError::BadHeader {
                line,
                expected,
                found: raw.to_string(),
            }),
        }
    };

    next_header("type")?;
    let mut dimension = |field: &'static str| -> Result<u32, MapError> {
        let (line, value) = next_header(field)?;
        match value.parse::<u32>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(MapError::BadDimension { line, field, value }),
        }
    };
    let height = dimension("height")?;
    let width = dimension("width")?;
    next_header("map")?;

    let mut passable = Vec::with_capacity(width as usize * height as usize);
    let mut rows = 0usize;
    let mut last_line = 4;
    for (line, raw) in lines.by_ref().take(height as usize) {
        last_line = line;
        let glyphs: Vec<char> = raw.chars().collect();
        if glyphs.len() != width as usize {
            return Err(MapError::RowLength {
                line,
                expected: width as usize,
                found: glyphs.len(),
            });
        }
        for glyph in glyphs {
            passable.push(glyph_passable(glyph).ok_or(MapError::UnknownGlyph { line, glyph })?);
        }
        rows += 1;
    }
    if rows != height as usize {
        return Err(MapError::MissingRows {
            line: last_line,
            expected: height as usize,
            found: rows,
        });
    }
    Ok(GridMap::new(width, height, passable))
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance document: {0}")]
    Syntax(#[from] serde_yaml::Error),
    #[error("agent {agent}: start {at} is blocked or off the map")]
    BlockedStart { agent: usize, at: Vertex },
    #[error("agent {agent}: goal {at} is blocked or off the map")]
    BlockedGoal { agent: usize, at: Vertex },
    #[error("agents {first} and {second} share start {at}")]
    DuplicateStart {
        first: usize,
        second: usize,
        at: Vertex,
    },
    #[error("agent {agent}: goal {at} listed twice")]
    DuplicateGoal { agent: usize, at: Vertex },
    #[error("agent {agent} has an empty target set")]
    EmptyTargetSet { agent: usize },
    #[error("instance has no agents")]
    NoAgents,
    #[error("{targets} targets cannot serve {agents} agents")]
    TooFewTargets { agents: usize, targets: usize },
    #[error("target matrix must be {rows}x{cols}")]
    MatrixShape { rows: usize, cols: usize },
    #[error("targets {first} and {second} are the same cell {at}")]
    DuplicateTarget {
        first: usize,
        second: usize,
        at: Vertex,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("map {path}: {source}")]
    Map { path: PathBuf, source: MapError },
}

/// Metadata that the benchmark generator attaches to an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMeta {
    pub id: String,
    pub map_name: String,
    pub scenario: String,
    pub agents: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_set_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_ratio: Option<f64>,
    pub seed: u64,
}

/// A TAPF problem: starts, a shared target list and the eligibility matrix.
#[derive(Debug, Clone)]
pub struct TapfInstance {
    map: Arc<GridMap>,
    names: Vec<String>,
    starts: Vec<Vertex>,
    targets: Vec<Vertex>,
    eligible: Vec<Vec<bool>>,
}

impl TapfInstance {
    pub fn new(
        map: Arc<GridMap>,
        starts: Vec<Vertex>,
        targets: Vec<Vertex>,
        eligible: Vec<Vec<bool>>,
    ) -> Result<Self, InstanceError> {
        let names = (0..starts.len()).map(|i| format!("agent{i}")).collect();
        Self::with_names(map, names, starts, targets, eligible)
    }

    fn with_names(
        map: Arc<GridMap>,
        names: Vec<String>,
        starts: Vec<Vertex>,
        targets: Vec<Vertex>,
        eligible: Vec<Vec<bool>>,
    ) -> Result<Self, InstanceError> {
        let n = starts.len();
        let m = targets.len();
        if n == 0 {
            return Err(InstanceError::NoAgents);
        }
        if eligible.len() != n || eligible.iter().any(|row| row.len() != m) {
            return Err(InstanceError::MatrixShape { rows: n, cols: m });
        }
        let mut seen = HashMap::new();
        for (agent, &s) in starts.iter().enumerate() {
            if !map.is_passable(s) {
                return Err(InstanceError::BlockedStart { agent, at: s });
            }
            if let Some(first) = seen.insert(s, agent) {
                return Err(InstanceError::DuplicateStart {
                    first,
                    second: agent,
                    at: s,
                });
            }
        }
        let mut seen = HashMap::new();
        for (j, &g) in targets.iter().enumerate() {
            if !map.is_passable(g) {
                let agent = (0..n).find(|&i| eligible[i][j]).unwrap_or(0);
                return Err(InstanceError::BlockedGoal { agent, at: g });
            }
            if let Some(first) = seen.insert(g, j) {
                return Err(InstanceError::DuplicateTarget {
                    first,
                    second: j,
                    at: g,
                });
            }
        }
        if let Some(agent) = eligible.iter().position(|row| !row.contains(&true)) {
            return Err(InstanceError::EmptyTargetSet { agent });
        }
        if m < n {
            return Err(InstanceError::TooFewTargets {
                agents: n,
                targets: m,
            });
        }
        Ok(TapfInstance {
            map,
            names,
            starts,
            targets,
            eligible,
        })
    }

    /// Builds an instance from per-agent goal lists. Targets get column
    /// indices in first-appearance order across the lists.
    pub fn from_goal_lists(
        map: Arc<GridMap>,
        starts: Vec<Vertex>,
        goal_lists: &[Vec<Vertex>],
    ) -> Result<Self, InstanceError> {
        let names = (0..starts.len()).map(|i| format!("agent{i}")).collect();
        Self::from_named_goal_lists(map, names, starts, goal_lists)
    }

    fn from_named_goal_lists(
        map: Arc<GridMap>,
        names: Vec<String>,
        starts: Vec<Vertex>,
        goal_lists: &[Vec<Vertex>],
    ) -> Result<Self, InstanceError> {
        let mut targets: Vec<Vertex> = Vec::new();
        let mut column: HashMap<Vertex, usize> = HashMap::new();
        for (agent, goals) in goal_lists.iter().enumerate() {
            if goals.is_empty() {
                return Err(InstanceError::EmptyTargetSet { agent });
            }
            let mut local = std::collections::HashSet::new();
            for &g in goals {
                if !map.is_passable(g) {
                    return Err(InstanceError::BlockedGoal { agent, at: g });
                }
                if !local.insert(g) {
                    return Err(InstanceError::DuplicateGoal { agent, at: g });
                }
                column.entry(g).or_insert_with(|| {
                    targets.push(g);
                    targets.len() - 1
                });
            }
        }
        let eligible = goal_lists
            .iter()
            .map(|goals| {
                let mut row = vec![false; targets.len()];
                for g in goals {
                    row[column[g]] = true;
                }
                row
            })
            .collect();
        Self::with_names(map, names, starts, targets, eligible)
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn shared_map(&self) -> Arc<GridMap> {
        Arc::clone(&self.map)
    }

    pub fn num_agents(&self) -> usize {
        self.starts.len()
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn starts(&self) -> &[Vertex] {
        &self.starts
    }

    pub fn targets(&self) -> &[Vertex] {
        &self.targets
    }

    pub fn agent_name(&self, agent: usize) -> &str {
        &self.names[agent]
    }

    pub fn target_matrix(&self) -> &[Vec<bool>] {
        &self.eligible
    }

    pub fn is_eligible(&self, agent: usize, target: usize) -> bool {
        self.eligible[agent][target]
    }

    /// Column indices of the targets agent `agent` may take.
    pub fn target_set(&self, agent: usize) -> impl Iterator<Item = usize> + '_ {
        self.eligible[agent]
            .iter()
            .enumerate()
            .filter_map(|(j, &ok)| ok.then_some(j))
    }

    pub fn target_index(&self, v: Vertex) -> Option<usize> {
        self.targets.iter().position(|&g| g == v)
    }

    /// Per-agent goal lists in column order, the inverse of
    /// [`TapfInstance::from_goal_lists`].
    pub fn goal_lists(&self) -> Vec<Vec<Vertex>> {
        (0..self.num_agents())
            .map(|i| self.target_set(i).map(|j| self.targets[j]).collect())
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AgentEntry {
    #[serde(default)]
    name: Option<String>,
    start: [u32; 2],
    #[serde(rename = "potentialGoals")]
    potential_goals: Vec<[u32; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    #[serde(default)]
    map: Option<String>,
    #[serde(default)]
    case: Option<CaseMeta>,
    agents: Vec<AgentEntry>,
}

fn vertex_of(p: [u32; 2]) -> Vertex {
    Vertex::new(p[0], p[1])
}

/// Parses an instance document against an already loaded map.
pub fn parse_instance(text: &str, map: Arc<GridMap>) -> Result<TapfInstance, InstanceError> {
    let doc: InstanceDoc = serde_yaml::from_str(text)?;
    instance_from_doc(doc, map)
}

fn instance_from_doc(doc: InstanceDoc, map: Arc<GridMap>) -> Result<TapfInstance, InstanceError> {
    let names = doc
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| a.name.clone().unwrap_or_else(|| format!("agent{i}")))
        .collect();
    let starts = doc.agents.iter().map(|a| vertex_of(a.start)).collect();
    let goals: Vec<Vec<Vertex>> = doc
        .agents
        .iter()
        .map(|a| a.potential_goals.iter().copied().map(vertex_of).collect())
        .collect();
    TapfInstance::from_named_goal_lists(map, names, starts, &goals)
}

pub fn read_map_file(path: &FsPath) -> Result<GridMap, InstanceError> {
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_map(&text).map_err(|source| InstanceError::Map {
        path: path.to_path_buf(),
        source,
    })
}

/// An instance file together with the metadata stored next to it.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub instance: TapfInstance,
    pub map_path: PathBuf,
    pub meta: Option<CaseMeta>,
}

/// Reads an instance file; its `map:` entry is resolved relative to the
/// instance file's directory.
pub fn read_instance_file(path: &FsPath) -> Result<LoadedInstance, InstanceError> {
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: InstanceDoc = serde_yaml::from_str(&text)?;
    let map_rel = doc.map.clone().ok_or_else(|| {
        InstanceError::Syntax(serde::de::Error::custom("missing `map` entry"))
    })?;
    let base = path.parent().unwrap_or_else(|| FsPath::new("."));
    let map_path = base.join(&map_rel);
    let map = Arc::new(read_map_file(&map_path)?);
    let meta = doc.case.clone();
    Ok(LoadedInstance {
        instance: instance_from_doc(doc, map)?,
        map_path,
        meta,
    })
}

fn pair(v: Vertex) -> String {
    format!("[{}, {}]", v.x, v.y)
}

/// Serialises an instance in the document layout [`parse_instance`] reads.
pub fn format_instance(instance: &TapfInstance, map_ref: &str, meta: Option<&CaseMeta>) -> String {
    let mut out = format!("map: {map_ref}\n");
    if let Some(meta) = meta {
        out.push_str("case:\n");
        out.push_str(&format!("  id: {}\n", meta.id));
        out.push_str(&format!("  map_name: {}\n", meta.map_name));
        out.push_str(&format!("  scenario: {}\n", meta.scenario));
        out.push_str(&format!("  agents: {}\n", meta.agents));
        if let Some(k) = meta.target_set_size {
            out.push_str(&format!("  target_set_size: {k}\n"));
        }
        if let Some(r) = meta.shared_ratio {
            out.push_str(&format!("  shared_ratio: {r:?}\n"));
        }
        out.push_str(&format!("  seed: {}\n", meta.seed));
    }
    out.push_str("agents:\n");
    for (i, goals) in instance.goal_lists().iter().enumerate() {
        out.push_str(&format!("  - name: {}\n", instance.agent_name(i)));
        out.push_str(&format!("    start: {}\n", pair(instance.starts()[i])));
        let list: Vec<String> = goals.iter().map(|&g| pair(g)).collect();
        out.push_str(&format!("    potentialGoals: [{}]\n", list.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_map(cells: usize) -> Arc<GridMap> {
        Arc::new(GridMap::from_rows(&[&".".repeat(cells)]))
    }

    #[test]
    fn parses_small_map_with_one_obstacle() {
        let map = parse_map("type octile\nheight 2\nwidth 2\nmap\n.@\n..\n").unwrap();
        assert_eq!((map.width(), map.height()), (2, 2));
        assert!(!map.is_passable(Vertex::new(1, 0)));
        assert_eq!(map.num_passable(), 3);
    }

    #[test]
    fn short_row_reports_its_line() {
        let mut text = String::from("type octile\nheight 2\nwidth 32\nmap\n");
        text.push_str(&".".repeat(32));
        text.push('\n');
        text.push_str(&".".repeat(31));
        text.push('\n');
        assert_eq!(
            parse_map(&text),
            Err(MapError::RowLength {
                line: 6,
                expected: 32,
                found: 31
            })
        );
    }

    #[test]
    fn glyph_semantics() {
        let map = parse_map("type octile\nheight 1\nwidth 7\nmap\n.GS@OTW\n").unwrap();
        let open: Vec<bool> = (0..7).map(|x| map.is_passable(Vertex::new(x, 0))).collect();
        assert_eq!(open, [true, true, true, false, false, false, false]);
        assert!(matches!(
            parse_map("type octile\nheight 1\nwidth 2\nmap\n.x\n"),
            Err(MapError::UnknownGlyph { line: 5, glyph: 'x' })
        ));
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            parse_map("type octile\nwidth 2\nheight 1\nmap\n..\n"),
            Err(MapError::BadHeader { line: 2, .. })
        ));
        assert!(matches!(
            parse_map("type octile\nheight zero\nwidth 2\nmap\n"),
            Err(MapError::BadDimension { line: 2, .. })
        ));
        assert!(matches!(
            parse_map("type octile\nheight 3\nwidth 2\nmap\n..\n..\n"),
            Err(MapError::MissingRows { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn empty_32_32_benchmark_map() {
        let text = include_str!("../../../maps/empty-32-32.map");
        let map = parse_map(text).unwrap();
        assert_eq!((map.width(), map.height()), (32, 32));
        assert_eq!(map.num_passable(), 1024);
    }

    #[test]
    fn neighbor_counts() {
        let open = GridMap::from_rows(&["...", "...", "..."]);
        assert_eq!(open.neighbors(Vertex::new(1, 1)).len(), 5);
        assert_eq!(open.neighbors(Vertex::new(0, 0)).len(), 3);
        let walled = GridMap::from_rows(&[".@.", "@.@", ".@."]);
        assert_eq!(walled.neighbors(Vertex::new(1, 1)), vec![Vertex::new(1, 1)]);
    }

    #[test]
    fn degenerate_instance() {
        let map = line_map(1);
        let inst = parse_instance(
            "agents:\n  - start: [0, 0]\n    potentialGoals: [[0, 0]]\n",
            map,
        )
        .unwrap();
        assert_eq!((inst.num_agents(), inst.num_targets()), (1, 1));
        assert_eq!(inst.target_matrix(), &[vec![true]]);
    }

    #[test]
    fn shared_goal_lists_deduplicate() {
        let text = "agents:\n  - start: [0, 0]\n    potentialGoals: [[3, 0], [4, 0]]\n  - start: [1, 0]\n    potentialGoals: [[3, 0], [4, 0]]\n";
        let inst = parse_instance(text, line_map(5)).unwrap();
        assert_eq!(inst.num_targets(), 2);
        assert_eq!(inst.target_matrix(), &[vec![true, true], vec![true, true]]);
    }

    #[test]
    fn corridor_instance_matrix() {
        let text = include_str!("../../../maps/two-agent-corridor.yaml");
        let inst = parse_instance(text, line_map(5)).unwrap();
        // first-appearance order is (d, e, c)
        assert_eq!(
            inst.targets(),
            &[Vertex::new(3, 0), Vertex::new(4, 0), Vertex::new(2, 0)]
        );
        let order_cde = [2usize, 0, 1];
        let permuted: Vec<Vec<u8>> = inst
            .target_matrix()
            .iter()
            .map(|row| order_cde.iter().map(|&j| row[j] as u8).collect())
            .collect();
        assert_eq!(permuted, vec![vec![0, 1, 1], vec![1, 0, 1]]);
        assert_eq!(inst.agent_name(1), "agent2");
    }

    #[test]
    fn instance_errors() {
        let map = Arc::new(GridMap::from_rows(&["..@"]));
        let parse = |t: &str| parse_instance(t, Arc::clone(&map)).unwrap_err();
        assert!(matches!(
            parse("agents:\n  - start: [2, 0]\n    potentialGoals: [[0, 0]]\n"),
            InstanceError::BlockedStart { agent: 0, .. }
        ));
        assert!(matches!(
            parse("agents:\n  - start: [0, 0]\n    potentialGoals: [[2, 0]]\n"),
            InstanceError::BlockedGoal { agent: 0, .. }
        ));
        assert!(matches!(
            parse("agents:\n  - start: [0, 0]\n    potentialGoals: [[1, 0]]\n  - start: [0, 0]\n    potentialGoals: [[0, 0]]\n"),
            InstanceError::DuplicateStart { first: 0, second: 1, .. }
        ));
        assert!(matches!(
            parse("agents:\n  - start: [0, 0]\n    potentialGoals: [[1, 0], [1, 0]]\n"),
            InstanceError::DuplicateGoal { agent: 0, .. }
        ));
        assert!(matches!(
            parse("agents:\n  - start: [0, 0]\n    potentialGoals: []\n"),
            InstanceError::EmptyTargetSet { agent: 0 }
        ));
        assert!(matches!(parse("agents: [[["), InstanceError::Syntax(_)));
    }

    #[test]
    fn formatted_instance_reparses() {
        let text = include_str!("../../../maps/two-agent-corridor.yaml");
        let inst = parse_instance(text, line_map(5)).unwrap();
        let again = parse_instance(&format_instance(&inst, "corridor-5.map", None), line_map(5)).unwrap();
        assert_eq!(again.targets(), inst.targets());
        assert_eq!(again.target_matrix(), inst.target_matrix());
        assert_eq!(again.starts(), inst.starts());
    }

    fn arb_map() -> impl Strategy<Value = GridMap> {
        (1u32..8, 1u32..8).prop_flat_map(|(w, h)| {
            proptest::collection::vec(prop::bool::weighted(0.7), (w * h) as usize)
                .prop_map(move |cells| GridMap::new(w, h, cells))
        })
    }

    proptest! {
        #[test]
        fn movingai_round_trip(map in arb_map()) {
            prop_assert_eq!(parse_map(&map.to_movingai()).unwrap(), map);
        }

        #[test]
        fn neighbor_relation_is_symmetric(map in arb_map()) {
            for u in map.passable_vertices() {
                for v in map.neighbors(u) {
                    prop_assert!(map.neighbors(v).contains(&u));
                }
            }
        }

        #[test]
        fn goal_lists_never_yield_empty_rows(
            lists in proptest::collection::vec(proptest::collection::btree_set(0u32..6, 0..4), 1..4)
        ) {
            let map = Arc::new(GridMap::from_rows(&["......", "......"]));
            let starts: Vec<Vertex> = (0..lists.len() as u32).map(|i| Vertex::new(i, 1)).collect();
            let goals: Vec<Vec<Vertex>> = lists
                .iter()
                .map(|s| s.iter().map(|&x| Vertex::new(x, 0)).collect())
                .collect();
            if let Ok(inst) = TapfInstance::from_goal_lists(map, starts, &goals) {
                prop_assert!(inst.target_matrix().iter().all(|row| row.contains(&true)));
            }
        }
    }
}
