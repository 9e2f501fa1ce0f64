//! Metric graphs: vertices joined by edges identified with intervals
//! `(0, l)`, `l ∈ (0, +∞]`.
//!
//! Edges of infinite length (half-lines) carry a single graph vertex, their
//! origin, stored as the left endpoint; the coordinate runs from the origin
//! outward. The point at infinity is not a vertex.
//!
//! # Text format
//!
//! Graphs round-trip through a line-oriented format, one edge per line:
//!
//! ```text
//! # comments start with '#', blank lines are ignored
//! edge <left> <right> <length>
//! ```
//!
//! `<left>`/`<right>` are vertex ids (non-negative integers) and `<length>`
//! is a positive decimal number or `inf`. Half-lines write `-` for the right
//! vertex. Vertices are implied by the edges: the graph has vertices
//! `0..=max_id` and every one of them must be an endpoint of some edge.
//! Edge ids follow line order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Length of an edge: a positive real or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Length {
    Finite(f64),
    Infinite,
}

impl Length {
    pub fn is_finite(self) -> bool {
        matches!(self, Length::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Length::Finite(l) => Some(l),
            Length::Infinite => None,
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Finite(l) => write!(f, "{l}"),
            Length::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    left: VertexId,
    right: Option<VertexId>,
    length: Length,
}

impl Edge {
    pub fn finite(left: VertexId, right: VertexId, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidLength(length));
        }
        Ok(Edge {
            left,
            right: Some(right),
            length: Length::Finite(length),
        })
    }

    pub fn half_line(origin: VertexId) -> Self {
        Edge {
            left: origin,
            right: None,
            length: Length::Infinite,
        }
    }

    /// The vertex at coordinate 0.
    pub fn left(&self) -> VertexId {
        self.left
    }

    /// The vertex at coordinate `l`; `None` for a half-line.
    pub fn right(&self) -> Option<VertexId> {
        self.right
    }

    pub fn length(&self) -> Length {
        self.length
    }

    pub fn is_half_line(&self) -> bool {
        self.right.is_none()
    }

    pub fn is_self_loop(&self) -> bool {
        self.right == Some(self.left)
    }
}

/// A finite metric graph. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    num_vertices: usize,
    edges: Vec<Edge>,
}

impl MetricGraph {
    pub fn new(num_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        if edges.is_empty() {
            return Err(Error::InvalidGraph("graph needs at least one edge".into()));
        }
        let mut touched = vec![false; num_vertices];
        for (id, e) in edges.iter().enumerate() {
            for v in std::iter::once(e.left).chain(e.right) {
                if v >= num_vertices {
                    return Err(Error::InvalidGraph(format!(
                        "edge {id} references vertex {v}, but the graph has {num_vertices} vertices"
                    )));
                }
                touched[v] = true;
            }
            if e.right.is_some() != e.length.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge {id}: half-lines must have infinite length and no right vertex"
                )));
            }
        }
        if let Some(v) = touched.iter().position(|t| !t) {
            return Err(Error::InvalidGraph(format!("vertex {v} has no incident edge")));
        }
        Ok(MetricGraph { num_vertices, edges })
    }

    /// ℝ, modelled as two half-lines glued at the origin.
    pub fn line() -> Self {
        Self::star(2).expect("two-star is valid")
    }

    /// ℝ⁺: a single half-line.
    pub fn half_line() -> Self {
        MetricGraph {
            num_vertices: 1,
            edges: vec![Edge::half_line(0)],
        }
    }

    /// `n ≥ 2` half-lines sharing their origin.
    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange(format!("star needs n >= 2 half-lines, got {n}")));
        }
        Self::new(1, (0..n).map(|_| Edge::half_line(0)).collect())
    }

    /// The `n`-bridge: two half-lines whose origins (vertices 0 and 1) are
    /// joined by `n` finite edges. Edges `0..n` are the bridges, all oriented
    /// 0 → 1; edge `n` is the half-line at vertex 0 and `n + 1` the one at 1.
    pub fn bridge(n: usize, lengths: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("bridge needs n >= 1".into()));
        }
        if lengths.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: lengths.len(),
            });
        }
        let mut edges = lengths
            .iter()
            .map(|&l| Edge::finite(0, 1, l))
            .collect::<Result<Vec<_>>>()?;
        edges.push(Edge::half_line(0));
        edges.push(Edge::half_line(1));
        Self::new(2, edges)
    }

    /// Two half-lines at vertex 0 plus a pendant edge of length `l` ending
    /// at vertex 1.
    pub fn star_2plus1(l: f64) -> Result<Self> {
        Self::new(
            2,
            vec![Edge::half_line(0), Edge::half_line(0), Edge::finite(0, 1, l)?],
        )
    }

    /// The exceptional graph: a pair of parallel edges (length `lengths[0]`)
    /// from vertex 0 to 1, a pair (length `lengths[1]`) from 1 to 2, a
    /// self-loop (length `lengths[2]`) at 2, and two half-lines at 0.
    pub fn exceptional_e3(lengths: [f64; 3]) -> Result<Self> {
        let [a, b, c] = lengths;
        Self::new(
            3,
            vec![
                Edge::finite(0, 1, a)?,
                Edge::finite(0, 1, a)?,
                Edge::finite(1, 2, b)?,
                Edge::finite(1, 2, b)?,
                Edge::finite(2, 2, c)?,
                Edge::half_line(0),
                Edge::half_line(0),
            ],
        )
    }

    /// Builds a named family from a whitespace-separated description:
    /// `line`, `halfline`, `star <n>`, `bridge <n> <l_1> .. <l_n>`,
    /// `star2plus1 <l>`, `e3 <l_1> <l_2> <l_3>`.
    pub fn from_family(desc: &str) -> Result<Self> {
        let mut toks = desc.split_whitespace();
        let name = toks
            .next()
            .ok_or_else(|| Error::Scenario("empty graph family".into()))?;
        let args = toks
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Scenario(format!("bad number `{t}` in graph family")))
            })
            .collect::<Result<Vec<_>>>()?;
        let count = |want: usize| -> Result<()> {
            if args.len() == want {
                Ok(())
            } else {
                Err(Error::Scenario(format!(
                    "family `{name}` takes {want} arguments, got {}",
                    args.len()
                )))
            }
        };
        let as_count = |x: f64| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::Scenario(format!("expected an integer count, got {x}")))
            }
        };
        match name {
            "line" => count(0).map(|_| Self::line()),
            "halfline" => count(0).map(|_| Self::half_line()),
            "star" => {
                count(1)?;
                Self::star(as_count(args[0])?)
            }
            "bridge" => {
                let n = as_count(*args.first().ok_or_else(|| {
                    Error::Scenario("bridge needs a count".into())
                })?)?;
                count(n + 1)?;
                Self::bridge(n, &args[1..])
            }
            "star2plus1" => {
                count(1)?;
                Self::star_2plus1(args[0])
            }
            "e3" => {
                count(3)?;
                Self::exceptional_e3([args[0], args[1], args[2]])
            }
            other => Err(Error::Scenario(format!("unknown graph family `{other}`"))),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn half_lines(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_half_line())
            .map(|(i, _)| i)
    }

    pub fn num_half_lines(&self) -> usize {
        self.half_lines().count()
    }

    pub fn num_finite_edges(&self) -> usize {
        self.num_edges() - self.num_half_lines()
    }

    /// Number of edge ends at each vertex; a self-loop counts twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vertices];
        for e in &self.edges {
            deg[e.left] += 1;
            if let Some(r) = e.right {
                deg[r] += 1;
            }
        }
        deg
    }

    /// True iff the graph unfolds onto ℝ: it has exactly two half-lines and
    /// the finite edges admit an Euler trail between their origins.
    pub fn euler_unfoldable(&self) -> bool {
        self.find_euler_path().is_ok()
    }

    /// Euler path covering every edge once, opening with the first half-line
    /// (traversed inward) and closing with the second (traversed outward).
    /// The finite core is walked with Hierholzer's algorithm.
    pub fn find_euler_path(&self) -> Result<EulerPath> {
        let hl: Vec<EdgeId> = self.half_lines().collect();
        if hl.len() != 2 {
            return Err(Error::NotUnfoldable);
        }
        let start = self.edges[hl[0]].left;
        let end = self.edges[hl[1]].left;

        let core: Vec<EdgeId> = (0..self.num_edges())
            .filter(|&i| !self.edges[i].is_half_line())
            .collect();
        let mut core_deg = vec![0usize; self.num_vertices];
        for &i in &core {
            let e = &self.edges[i];
            core_deg[e.left] += 1;
            core_deg[e.right.expect("finite edge")] += 1;
        }
        let odd: Vec<VertexId> = (0..self.num_vertices)
            .filter(|&v| core_deg[v] % 2 == 1)
            .collect();
        let parity_ok = if start == end {
            odd.is_empty()
        } else {
            odd == [start.min(end), start.max(end)]
        };
        if !parity_ok {
            return Err(Error::NotUnfoldable);
        }

        let trail = hierholzer(self, &core, start);
        if trail.len() != core.len() {
            // Core is disconnected from the attachment vertex.
            return Err(Error::NotUnfoldable);
        }
        let mut steps = Vec::with_capacity(self.num_edges());
        steps.push(PathStep {
            edge: hl[0],
            reversed: true,
        });
        steps.extend(trail);
        steps.push(PathStep {
            edge: hl[1],
            reversed: false,
        });
        let path = EulerPath { steps };
        path.validate(self)?;
        Ok(path)
    }

    pub fn to_spec_string(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            match e.right {
                Some(r) => out.push_str(&format!("edge {} {} {}\n", e.left, r, e.length)),
                None => out.push_str(&format!("edge {} - inf\n", e.left)),
            }
        }
        out
    }
}

impl FromStr for MetricGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut raw = Vec::new();
        let mut max_vertex = 0;
        for (idx, line) in s.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: lineno, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 4 || toks[0] != "edge" {
                return Err(parse_err(format!(
                    "expected `edge <left> <right> <length>`, got `{line}`"
                )));
            }
            let vertex = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| parse_err(format!("bad vertex id `{t}`")))
            };
            let left = vertex(toks[1])?;
            max_vertex = max_vertex.max(left);
            let edge = if toks[3] == "inf" {
                if toks[2] != "-" && toks[2] != "inf" {
                    return Err(parse_err("half-lines take `-` as right vertex".into()));
                }
                Edge::half_line(left)
            } else {
                let right = vertex(toks[2])?;
                max_vertex = max_vertex.max(right);
                let length: f64 = toks[3]
                    .parse()
                    .map_err(|_| parse_err(format!("bad length `{}`", toks[3])))?;
                Edge::finite(left, right, length).map_err(|e| parse_err(e.to_string()))?
            };
            raw.push(edge);
        }
        MetricGraph::new(max_vertex + 1, raw)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub edge: EdgeId,
    /// Traversed from right to left (for a half-line: from infinity inward).
    pub reversed: bool,
}

/// An ordered traversal of every edge exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EulerPath {
    steps: Vec<PathStep>,
}

impl EulerPath {
    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks that every edge of `g` appears once and that consecutive
    /// steps meet at a common vertex.
    pub fn validate(&self, g: &MetricGraph) -> Result<()> {
        let mut seen = vec![false; g.num_edges()];
        for s in &self.steps {
            if s.edge >= g.num_edges() || std::mem::replace(&mut seen[s.edge], true) {
                return Err(Error::InvalidGraph(format!(
                    "edge {} repeated or out of range in path",
                    s.edge
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidGraph("path misses an edge".into()));
        }
        let ends = |s: &PathStep| {
            let e = g.edge(s.edge);
            if s.reversed {
                (e.right, Some(e.left))
            } else {
                (Some(e.left), e.right)
            }
        };
        for pair in self.steps.windows(2) {
            let (_, a_end) = ends(&pair[0]);
            let (b_start, _) = ends(&pair[1]);
            if a_end.is_none() || a_end != b_start {
                return Err(Error::InvalidGraph(format!(
                    "path breaks between edges {} and {}",
                    pair[0].edge, pair[1].edge
                )));
            }
        }
        Ok(())
    }
}

fn hierholzer(g: &MetricGraph, core: &[EdgeId], start: VertexId) -> Vec<PathStep> {
    // adjacency: (neighbour, edge, traversal reversed)
    let mut adj: Vec<Vec<(VertexId, EdgeId, bool)>> = vec![Vec::new(); g.num_vertices()];
    for &i in core {
        let e = g.edge(i);
        let r = e.right.expect("finite edge");
        adj[e.left].push((r, i, false));
        if r != e.left {
            adj[r].push((e.left, i, true));
        }
    }
    let mut cursor = vec![0usize; g.num_vertices()];
    let mut used = vec![false; g.num_edges()];
    let mut stack: Vec<(VertexId, Option<PathStep>)> = vec![(start, None)];
    let mut out = Vec::with_capacity(core.len());

    while let Some(&(v, _)) = stack.last() {
        let mut next = None;
        while cursor[v] < adj[v].len() {
            let (w, e, rev) = adj[v][cursor[v]];
            cursor[v] += 1;
            if !used[e] {
                used[e] = true;
                next = Some((w, PathStep { edge: e, reversed: rev }));
                break;
            }
        }
        match next {
            Some((w, step)) => stack.push((w, Some(step))),
            None => {
                if let Some((_, Some(step))) = stack.pop() {
                    out.push(step);
                }
            }
        }
    }
    out.reverse();
    out
}
