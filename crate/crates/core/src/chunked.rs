//! Chunkings, chunk plans, and the expanded graph an agent actually walks.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{EdgeId, TaskGraph, VertexId};
use crate::rat::Rat;

/// An edge split into `k >= 1` consecutive chunks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chunking {
    pub edge: EdgeId,
    pub chunks: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("chunking of {edge} has no chunks")]
    Empty { edge: String },
    #[error("chunking of {edge} sums to {sum}, edge cost is {cost}")]
    MassMismatch { edge: String, sum: Rat, cost: Rat },
    #[error("chunking of {edge} has a negative chunk")]
    NegativeChunk { edge: String },
    #[error("edge {0} is chunked twice")]
    DuplicateEdge(String),
}

impl Chunking {
    pub fn new(edge: EdgeId, chunks: Vec<Rat>) -> Self {
        Chunking { edge, chunks }
    }

    /// The edge left whole but marked as a chunk path.
    pub fn whole(g: &TaskGraph, edge: EdgeId) -> Self {
        Chunking::new(edge, vec![g.edge(edge).cost.clone()])
    }

    pub fn k(&self) -> usize {
        self.chunks.len()
    }

    pub fn total(&self) -> Rat {
        self.chunks.iter().sum()
    }

    pub fn check(&self, g: &TaskGraph) -> Result<(), PlanError> {
        let label = || g.edge_label(self.edge);
        if self.chunks.is_empty() {
            return Err(PlanError::Empty { edge: label() });
        }
        if self.chunks.iter().any(Rat::is_negative) {
            return Err(PlanError::NegativeChunk { edge: label() });
        }
        let sum = self.total();
        let cost = &g.edge(self.edge).cost;
        if &sum != cost {
            return Err(PlanError::MassMismatch {
                edge: label(),
                sum,
                cost: cost.clone(),
            });
        }
        Ok(())
    }
}

/// A set of chunkings, at most one per edge, keyed by edge id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChunkPlan {
    entries: BTreeMap<EdgeId, Chunking>,
}

impl ChunkPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_chunkings(
        g: &TaskGraph,
        chunkings: impl IntoIterator<Item = Chunking>,
    ) -> Result<Self, PlanError> {
        let mut plan = ChunkPlan::new();
        for c in chunkings {
            c.check(g)?;
            if plan.entries.contains_key(&c.edge) {
                return Err(PlanError::DuplicateEdge(g.edge_label(c.edge)));
            }
            plan.entries.insert(c.edge, c);
        }
        Ok(plan)
    }

    /// Inserts without validation; replaces any existing entry.
    pub fn insert(&mut self, c: Chunking) {
        self.entries.insert(c.edge, c);
    }

    pub fn get(&self, e: EdgeId) -> Option<&Chunking> {
        self.entries.get(&e)
    }

    pub fn chunkings(&self) -> impl Iterator<Item = &Chunking> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of chunk counts over all entries.
    pub fn total_chunks(&self) -> usize {
        self.entries.values().map(Chunking::k).sum()
    }

    pub fn max_chunks(&self) -> usize {
        self.entries.values().map(Chunking::k).max().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &ChunkPlan) {
        for c in other.chunkings() {
            self.insert(c.clone());
        }
    }
}

/// Edge of the expanded graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XEdge {
    pub from: usize,
    pub to: usize,
    pub cost: Rat,
    /// Continues a chunk path.
    pub marked: bool,
    /// Original edge this edge stands for (a deviation edge stands for the
    /// original edge it shortcuts to).
    pub origin: EdgeId,
    /// 1-based chunk index for chunk edges.
    pub chunk: Option<usize>,
    /// Original destination vertex, the lexicographic tie-break key.
    pub key: VertexId,
}

/// `g` with every planned edge replaced by its chunk chain.
///
/// Original vertices keep their ids; chain vertex `i` of `(u, v)` is named
/// `u>v#i` for `i = 2..k`. Every chain vertex has deviation edges to u's
/// other original out-neighbours at their original costs.
#[derive(Clone, Debug)]
pub struct ChunkedGraph<'g> {
    base: &'g TaskGraph,
    names: Vec<String>,
    original: Vec<Option<VertexId>>,
    edges: Vec<XEdge>,
    out: Vec<Vec<usize>>,
    dist: Vec<Option<Rat>>,
}

impl<'g> ChunkedGraph<'g> {
    pub fn new(g: &'g TaskGraph, plan: &ChunkPlan) -> Self {
        let n = g.vertex_count();
        let mut names: Vec<String> = g.vertices().map(|v| g.name(v).to_string()).collect();
        let mut original: Vec<Option<VertexId>> = g.vertices().map(Some).collect();
        let mut edges = Vec::new();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        let push = |edges: &mut Vec<XEdge>, out: &mut Vec<Vec<usize>>, e: XEdge| {
            out[e.from].push(edges.len());
            edges.push(e);
        };
        for u in g.vertices() {
            for &eid in g.out_edges(u) {
                let edge = g.edge(eid);
                let Some(ch) = plan.get(eid) else {
                    let e = XEdge {
                        from: u.0,
                        to: edge.to.0,
                        cost: edge.cost.clone(),
                        marked: false,
                        origin: eid,
                        chunk: None,
                        key: edge.to,
                    };
                    push(&mut edges, &mut out, e);
                    continue;
                };
                let k = ch.k();
                let mut prev = u.0;
                for (i, x) in ch.chunks.iter().enumerate() {
                    let next = if i + 1 == k {
                        edge.to.0
                    } else {
                        names.push(format!("{}>{}#{}", g.name(u), g.name(edge.to), i + 2));
                        original.push(None);
                        out.push(Vec::new());
                        names.len() - 1
                    };
                    let e = XEdge {
                        from: prev,
                        to: next,
                        cost: x.clone(),
                        marked: true,
                        origin: eid,
                        chunk: Some(i + 1),
                        key: edge.to,
                    };
                    push(&mut edges, &mut out, e);
                    if i + 1 < k {
                        for &other in g.out_edges(u) {
                            if other == eid {
                                continue;
                            }
                            let o = g.edge(other);
                            let dev = XEdge {
                                from: next,
                                to: o.to.0,
                                cost: o.cost.clone(),
                                marked: false,
                                origin: other,
                                chunk: None,
                                key: o.to,
                            };
                            push(&mut edges, &mut out, dev);
                        }
                    }
                    prev = next;
                }
            }
        }
        for list in &mut out {
            list.sort_by(|&a, &b| g.name(edges[a].key).cmp(g.name(edges[b].key)));
        }
        let mut cg = ChunkedGraph {
            base: g,
            names,
            original,
            edges,
            out,
            dist: Vec::new(),
        };
        cg.dist = cg.compute_distances();
        cg
    }

    fn compute_distances(&self) -> Vec<Option<Rat>> {
        // Memoized DFS; the expansion of a DAG is a DAG.
        let n = self.names.len();
        let mut dist: Vec<Option<Option<Rat>>> = vec![None; n];
        let sink = self.base.sink().0;
        for start in 0..n {
            if dist[start].is_some() {
                continue;
            }
            let mut stack = vec![(start, false)];
            while let Some((v, expanded)) = stack.pop() {
                if dist[v].is_some() {
                    continue;
                }
                if v == sink {
                    dist[v] = Some(Some(Rat::zero()));
                    continue;
                }
                if !expanded {
                    stack.push((v, true));
                    for &e in &self.out[v] {
                        let h = self.edges[e].to;
                        if dist[h].is_none() {
                            stack.push((h, false));
                        }
                    }
                    continue;
                }
                let best = self.out[v]
                    .iter()
                    .filter_map(|&e| {
                        let edge = &self.edges[e];
                        dist[edge.to]
                            .as_ref()
                            .expect("successor resolved")
                            .as_ref()
                            .map(|d| &edge.cost + d)
                    })
                    .min();
                dist[v] = Some(best);
            }
        }
        dist.into_iter().map(|d| d.expect("all resolved")).collect()
    }

    pub fn base(&self) -> &'g TaskGraph {
        self.base
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    /// The original vertex behind `v`, if `v` is not a chain vertex.
    pub fn original(&self, v: usize) -> Option<VertexId> {
        self.original[v]
    }

    pub fn edge(&self, e: usize) -> &XEdge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[XEdge] {
        &self.edges
    }

    /// Out-edges sorted by tie-break key.
    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    /// Shortest cost to the sink in the expanded graph.
    pub fn to_sink(&self, v: usize) -> Option<&Rat> {
        self.dist[v].as_ref()
    }

    pub fn source(&self) -> usize {
        self.base.source().0
    }

    pub fn sink(&self) -> usize {
        self.base.sink().0
    }

    /// Chunk edges of `e` in order, empty if `e` is not in the plan.
    pub fn chain(&self, e: EdgeId) -> Vec<usize> {
        let mut chain: Vec<usize> = (0..self.edges.len())
            .filter(|&i| self.edges[i].origin == e && self.edges[i].marked)
            .collect();
        chain.sort_by_key(|&i| self.edges[i].chunk);
        chain
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::s32;
    use crate::graph::shortest_to_sink;

    fn r(s: &str) -> Rat {
        s.parse().unwrap()
    }

    #[test]
    fn empty_plan_is_identity() {
        let g = s32();
        let cg = ChunkedGraph::new(&g, &ChunkPlan::new());
        assert_eq!(cg.vertex_count(), g.vertex_count());
        assert_eq!(cg.edges().len(), g.edge_count());
        let d = shortest_to_sink(&g).unwrap();
        for v in g.vertices() {
            assert_eq!(cg.to_sink(v.0), d.get(v));
        }
    }

    #[test]
    fn chain_and_deviations() {
        let g = s32();
        let uv = g.edge_by_names("u", "v").unwrap();
        let plan =
            ChunkPlan::from_chunkings(&g, [Chunking::new(uv, vec![r("2"), r("4"), r("8")])])
                .unwrap();
        let cg = ChunkedGraph::new(&g, &plan);
        assert_eq!(cg.vertex_count(), 7);
        // 5 untouched edges, 3 chunks, 2 chain vertices x 2 deviations.
        assert_eq!(cg.edges().len(), 5 + 3 + 4);
        let chain = cg.chain(uv);
        let names: Vec<_> = chain.iter().map(|&e| cg.name(cg.edge(e).to)).collect();
        assert_eq!(names, ["u>v#2", "u>v#3", "v"]);
        let u3 = cg.edge(chain[1]).to;
        let heads: Vec<_> = cg.out_edges(u3).iter().map(|&e| cg.name(cg.edge(e).to)).collect();
        assert_eq!(heads, ["v", "w", "z"]);
        assert_eq!(cg.to_sink(u3), Some(&r("67")));
        let u2 = cg.edge(chain[0]).to;
        assert_eq!(cg.to_sink(u2), Some(&r("67")));
    }

    #[test]
    fn bad_chunkings_are_rejected() {
        let g = s32();
        let uv = g.edge_by_names("u", "v").unwrap();
        let bad = Chunking::new(uv, vec![r("2"), r("4")]);
        assert!(matches!(bad.check(&g), Err(PlanError::MassMismatch { .. })));
        let neg = Chunking::new(uv, vec![r("-1"), r("15")]);
        assert!(matches!(neg.check(&g), Err(PlanError::NegativeChunk { .. })));
        assert!(Chunking::new(uv, vec![]).check(&g).is_err());
    }
}
