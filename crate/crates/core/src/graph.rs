//! Task DAGs: the data model, validation, shortest paths to the sink, and
//! instance generators.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::rat::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub cost: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("cycle detected through edge {from} -> {to}")]
    CycleDetected { from: String, to: String },
    #[error("missing source or sink vertex `{0}`")]
    MissingSourceOrSink(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("negative cost on edge {0} -> {1}")]
    NegativeCost(String, String),
    #[error("vertex `{0}` cannot reach the sink")]
    SinkUnreachable(String),
    #[error("unknown edge {0} -> {1}")]
    UnknownEdge(String, String),
    #[error("invalid fan spec: {0}")]
    InvalidSpec(String),
}

/// A weighted DAG with a designated source and sink.
///
/// Out-edges of every vertex are kept sorted by head id, which is the
/// lexicographic order used for tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskGraph {
    names: Vec<String>,
    index: HashMap<String, VertexId>,
    edges: Vec<Edge>,
    out: Vec<Vec<EdgeId>>,
    edge_index: HashMap<(VertexId, VertexId), EdgeId>,
    source: VertexId,
    sink: VertexId,
}

#[derive(Default, Debug, Clone)]
pub struct TaskGraphBuilder {
    names: Vec<String>,
    edges: Vec<(String, String, Rat)>,
}

impl TaskGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a vertex; later duplicates are reported by `build`.
    pub fn vertex(mut self, name: impl Into<String>) -> Self {
        self.names.push(name.into());
        self
    }

    /// Adds an edge, declaring either endpoint if it has not been seen.
    pub fn edge(mut self, from: impl Into<String>, to: impl Into<String>, cost: Rat) -> Self {
        let (from, to) = (from.into(), to.into());
        for v in [&from, &to] {
            if !self.names.iter().any(|n| n == v) {
                self.names.push(v.clone());
            }
        }
        self.edges.push((from, to, cost));
        self
    }

    pub fn build(self, source: &str, sink: &str) -> Result<TaskGraph, GraphError> {
        TaskGraph::new(self.names, self.edges, source, sink)
    }
}

impl TaskGraph {
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<(String, String, Rat)>,
        source: &str,
        sink: &str,
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, name) in vertices.iter().enumerate() {
            if index.insert(name.clone(), VertexId(i)).is_some() {
                return Err(GraphError::DuplicateVertex(name.clone()));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
        };
        let source = index
            .get(source)
            .copied()
            .ok_or_else(|| GraphError::MissingSourceOrSink(source.to_string()))?;
        let sink = index
            .get(sink)
            .copied()
            .ok_or_else(|| GraphError::MissingSourceOrSink(sink.to_string()))?;

        let mut out_edges = vec![Vec::new(); vertices.len()];
        let mut edge_index = HashMap::new();
        let mut stored = Vec::with_capacity(edges.len());
        for (from, to, cost) in edges {
            let (f, t) = (lookup(&from)?, lookup(&to)?);
            if f == t {
                return Err(GraphError::SelfLoop(from));
            }
            if cost.is_negative() {
                return Err(GraphError::NegativeCost(from, to));
            }
            let id = EdgeId(stored.len());
            if edge_index.insert((f, t), id).is_some() {
                return Err(GraphError::DuplicateEdge(from, to));
            }
            stored.push(Edge { from: f, to: t, cost });
            out_edges[f.0].push(id);
        }
        for list in &mut out_edges {
            list.sort_by(|a: &EdgeId, b: &EdgeId| {
                vertices[stored[a.0].to.0].cmp(&vertices[stored[b.0].to.0])
            });
        }
        Ok(TaskGraph {
            names: vertices,
            index,
            edges: stored,
            out: out_edges,
            edge_index,
            source,
            sink,
        })
    }

    pub fn builder() -> TaskGraphBuilder {
        TaskGraphBuilder::new()
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn sink(&self) -> VertexId {
        self.sink
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.names.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.index.get(name).copied()
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn find_edge(&self, from: VertexId, to: VertexId) -> Option<EdgeId> {
        self.edge_index.get(&(from, to)).copied()
    }

    /// Looks an edge up by endpoint names.
    pub fn edge_by_names(&self, from: &str, to: &str) -> Result<EdgeId, GraphError> {
        let unknown = || GraphError::UnknownEdge(from.to_string(), to.to_string());
        let f = self.vertex(from).ok_or_else(unknown)?;
        let t = self.vertex(to).ok_or_else(unknown)?;
        self.find_edge(f, t).ok_or_else(unknown)
    }

    /// Out-edges of `v`, sorted by head id.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out[v.0]
    }

    pub fn edge_label(&self, e: EdgeId) -> String {
        let edge = self.edge(e);
        format!("({}, {})", self.name(edge.from), self.name(edge.to))
    }

    /// Vertices that lie on no source-to-sink path.
    pub fn off_path_vertices(&self) -> Vec<VertexId> {
        let n = self.vertex_count();
        let mut fwd = vec![false; n];
        let mut stack = vec![self.source];
        fwd[self.source.0] = true;
        while let Some(v) = stack.pop() {
            for &e in self.out_edges(v) {
                let h = self.edge(e).to;
                if !fwd[h.0] {
                    fwd[h.0] = true;
                    stack.push(h);
                }
            }
        }
        let mut back = vec![false; n];
        let mut rev = vec![Vec::new(); n];
        for edge in &self.edges {
            rev[edge.to.0].push(edge.from);
        }
        let mut stack = vec![self.sink];
        back[self.sink.0] = true;
        while let Some(v) = stack.pop() {
            for &p in &rev[v.0] {
                if !back[p.0] {
                    back[p.0] = true;
                    stack.push(p);
                }
            }
        }
        self.vertices().filter(|v| !(fwd[v.0] && back[v.0])).collect()
    }

    /// Graphviz rendering; costs are printed as exact fractions.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph task {\n  rankdir=LR;\n");
        for v in self.vertices() {
            let shape = if v == self.source || v == self.sink {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(s, "  \"{}\" [shape={}];", self.name(v), shape);
        }
        for edge in &self.edges {
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                self.name(edge.from),
                self.name(edge.to),
                edge.cost
            );
        }
        s.push_str("}\n");
        s
    }
}

/// Returns a topological order (ties broken by vertex id), or the first back
/// edge found.
pub fn validate(g: &TaskGraph) -> Result<Vec<VertexId>, GraphError> {
    let n = g.vertex_count();
    let mut indeg = vec![0usize; n];
    for edge in g.edges() {
        indeg[edge.to.0] += 1;
    }
    let mut ready: BTreeSet<(&str, VertexId)> = g
        .vertices()
        .filter(|v| indeg[v.0] == 0)
        .map(|v| (g.name(v), v))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(first) = ready.pop_first() {
        let v = first.1;
        order.push(v);
        for &e in g.out_edges(v) {
            let h = g.edge(e).to;
            indeg[h.0] -= 1;
            if indeg[h.0] == 0 {
                ready.insert((g.name(h), h));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    Err(find_back_edge(g, &indeg))
}

fn find_back_edge(g: &TaskGraph, indeg: &[usize]) -> GraphError {
    // Vertices with remaining in-degree contain a cycle; walk predecessors
    // inside that set until one repeats.
    let stuck: Vec<bool> = indeg.iter().map(|&d| d > 0).collect();
    let start = stuck.iter().position(|&s| s).expect("some vertex is stuck");
    let mut seen = vec![usize::MAX; g.vertex_count()];
    let mut path = Vec::new();
    let mut v = VertexId(start);
    loop {
        if seen[v.0] != usize::MAX {
            let (from, to) = path[path.len() - 1];
            return GraphError::CycleDetected {
                from: g.name(from).to_string(),
                to: g.name(to).to_string(),
            };
        }
        seen[v.0] = path.len();
        let next = g
            .out_edges(v)
            .iter()
            .map(|&e| g.edge(e).to)
            .find(|h| stuck[h.0])
            .expect("a stuck vertex has a stuck successor");
        path.push((v, next));
        v = next;
    }
}

/// Shortest remaining cost `c(v -> t)` and a successor realizing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMap {
    dist: Vec<Option<Rat>>,
    succ: Vec<Option<VertexId>>,
}

impl DistanceMap {
    /// `c(v -> t)`. Panics if `v` cannot reach the sink; `shortest_to_sink`
    /// rejects graphs where a source-reachable vertex is in that state.
    pub fn to_sink(&self, v: VertexId) -> &Rat {
        self.dist[v.0]
            .as_ref()
            .expect("vertex has no path to the sink")
    }

    pub fn get(&self, v: VertexId) -> Option<&Rat> {
        self.dist[v.0].as_ref()
    }

    pub fn successor(&self, v: VertexId) -> Option<VertexId> {
        self.succ[v.0]
    }
}

/// Exact reverse-topological relaxation. Among minimizing out-edges the
/// lexicographically least head is recorded as successor.
pub fn shortest_to_sink(g: &TaskGraph) -> Result<DistanceMap, GraphError> {
    let order = validate(g)?;
    let n = g.vertex_count();
    let mut dist: Vec<Option<Rat>> = vec![None; n];
    let mut succ = vec![None; n];
    dist[g.sink().0] = Some(Rat::zero());
    for &v in order.iter().rev() {
        if v == g.sink() {
            continue;
        }
        let mut best: Option<(Rat, VertexId)> = None;
        for &e in g.out_edges(v) {
            let edge = g.edge(e);
            if let Some(d) = &dist[edge.to.0] {
                let cand = &edge.cost + d;
                if best.as_ref().is_none_or(|(b, _)| cand < *b) {
                    best = Some((cand, edge.to));
                }
            }
        }
        if let Some((d, s)) = best {
            dist[v.0] = Some(d);
            succ[v.0] = Some(s);
        }
    }
    let reachable = reachable_from_source(g);
    if let Some(v) = g.vertices().find(|v| reachable[v.0] && dist[v.0].is_none()) {
        return Err(GraphError::SinkUnreachable(g.name(v).to_string()));
    }
    Ok(DistanceMap { dist, succ })
}

fn reachable_from_source(g: &TaskGraph) -> Vec<bool> {
    let mut seen = vec![false; g.vertex_count()];
    let mut stack = vec![g.source()];
    seen[g.source().0] = true;
    while let Some(v) = stack.pop() {
        for &e in g.out_edges(v) {
            let h = g.edge(e).to;
            if !seen[h.0] {
                seen[h.0] = true;
                stack.push(h);
            }
        }
    }
    seen
}

/// Parameters of the n-fan: spine `v_0 .. v_n` of zero-cost edges, exits
/// `v_i -> t` of cost `c^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FanSpec {
    pub n: usize,
    pub c: Rat,
}

pub fn make_n_fan(spec: &FanSpec) -> Result<TaskGraph, GraphError> {
    if spec.n == 0 {
        return Err(GraphError::InvalidSpec("n must be at least 1".into()));
    }
    if spec.c <= Rat::one() {
        return Err(GraphError::InvalidSpec(format!("c = {} must exceed 1", spec.c)));
    }
    let name = |i: usize| format!("v{i}");
    let mut b = TaskGraph::builder();
    for i in 0..=spec.n {
        b = b.vertex(name(i));
    }
    b = b.vertex("t");
    let mut exit = Rat::one();
    for i in 0..=spec.n {
        if i < spec.n {
            b = b.edge(name(i), name(i + 1), Rat::zero());
        }
        b = b.edge(name(i), "t", exit.clone());
        exit = &exit * &spec.c;
    }
    b.build("v0", "t")
}

/// Parameters for [`random_dag`].
#[derive(Clone, Debug)]
pub struct RandomDagSpec {
    pub vertices: usize,
    /// Probability of each forward edge `i -> j` with `i < j`, in percent.
    pub density_pct: u32,
    /// Costs are drawn from `0 ..= max_cost` in steps of `1 / cost_denom`.
    pub max_cost: i64,
    pub cost_denom: i64,
}

impl Default for RandomDagSpec {
    fn default() -> Self {
        RandomDagSpec {
            vertices: 6,
            density_pct: 45,
            max_cost: 20,
            cost_denom: 1,
        }
    }
}

/// Random DAG on `v0 .. v{n-1}` (source `v0`, sink `v{n-1}`) in which every
/// vertex lies on a source-sink path.
pub fn random_dag<R: Rng>(rng: &mut R, spec: &RandomDagSpec) -> TaskGraph {
    let n = spec.vertices.max(2);
    let name = |i: usize| format!("v{i}");
    let draw = |rng: &mut R| {
        let units = rng.gen_range(0..=spec.max_cost * spec.cost_denom);
        Rat::frac(units, spec.cost_denom)
    };
    let mut present = vec![vec![false; n]; n];
    for (i, row) in present.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate().skip(i + 1) {
            let _ = j;
            *cell = rng.gen_range(0..100) < spec.density_pct;
        }
    }
    for i in 0..n - 1 {
        if !present[i].iter().any(|&p| p) {
            let j = rng.gen_range(i + 1..n);
            present[i][j] = true;
        }
    }
    for j in 1..n {
        if !(0..j).any(|i| present[i][j]) {
            let i = rng.gen_range(0..j);
            present[i][j] = true;
        }
    }
    let mut b = TaskGraph::builder();
    for i in 0..n {
        b = b.vertex(name(i));
    }
    for (i, row) in present.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p {
                let cost = draw(rng);
                b = b.edge(name(i), name(j), cost);
            }
        }
    }
    b.build(&name(0), &name(n - 1))
        .expect("generator produces a valid graph")
}
