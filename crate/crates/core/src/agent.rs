//! Present-biased agent semantics.
//!
//! At every vertex the agent picks the out-edge minimizing
//! `b * c(e) + c(head -> t)`. Exact ties go to the unique tied chunk edge if
//! there is exactly one, otherwise to the lexicographically least original
//! destination.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::chunked::{ChunkPlan, Chunking, ChunkedGraph};
use crate::graph::{DistanceMap, EdgeId, GraphError, TaskGraph, VertexId};
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("bias {0} must exceed 1")]
    InvalidBias(Rat),
    #[error("vertex `{0}` has no out-edges")]
    DeadEnd(String),
    #[error("agent is stuck at `{0}`")]
    Stuck(String),
    #[error("shortest path cost is zero; the cost ratio is undefined")]
    ZeroShortestPath,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A default bias with optional per-edge overrides.
///
/// Strict profiles require every bias to exceed 1. Diagnostic profiles also
/// admit 1, the unbiased agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiasProfile {
    default: Rat,
    overrides: BTreeMap<EdgeId, Rat>,
    diagnostic: bool,
}

impl BiasProfile {
    pub fn new(b: Rat) -> Result<Self, AgentError> {
        if b <= Rat::one() {
            return Err(AgentError::InvalidBias(b));
        }
        Ok(BiasProfile {
            default: b,
            overrides: BTreeMap::new(),
            diagnostic: false,
        })
    }

    pub fn diagnostic(b: Rat) -> Result<Self, AgentError> {
        if b < Rat::one() {
            return Err(AgentError::InvalidBias(b));
        }
        Ok(BiasProfile {
            default: b,
            overrides: BTreeMap::new(),
            diagnostic: true,
        })
    }

    pub fn with_override(mut self, e: EdgeId, b: Rat) -> Result<Self, AgentError> {
        let floor_ok = if self.diagnostic {
            b >= Rat::one()
        } else {
            b > Rat::one()
        };
        if !floor_ok {
            return Err(AgentError::InvalidBias(b));
        }
        self.overrides.insert(e, b);
        Ok(self)
    }

    pub fn default_bias(&self) -> &Rat {
        &self.default
    }

    pub fn bias(&self, e: EdgeId) -> &Rat {
        self.overrides.get(&e).unwrap_or(&self.default)
    }

    pub fn is_diagnostic(&self) -> bool {
        self.diagnostic
    }

    pub fn is_uniform(&self) -> bool {
        self.overrides.is_empty()
    }
}

/// `b_eff * c(u,v) + c(v -> t)`.
pub fn perceived_cost(g: &TaskGraph, dist: &DistanceMap, profile: &BiasProfile, e: EdgeId) -> Rat {
    let edge = g.edge(e);
    profile.bias(e) * &edge.cost + dist.to_sink(edge.to)
}

/// The edge the agent takes at `u` in the unchunked graph, and its perceived
/// cost `alpha_u`.
pub fn best_alternative(
    g: &TaskGraph,
    dist: &DistanceMap,
    profile: &BiasProfile,
    u: VertexId,
) -> Result<(VertexId, Rat), AgentError> {
    let mut best: Option<(VertexId, Rat)> = None;
    // Out-edges are sorted by head name, so the first strict minimum wins ties.
    for &e in g.out_edges(u) {
        let head = g.edge(e).to;
        if dist.get(head).is_none() {
            continue;
        }
        let p = perceived_cost(g, dist, profile, e);
        if best.as_ref().is_none_or(|(_, b)| p < *b) {
            best = Some((head, p));
        }
    }
    best.ok_or_else(|| AgentError::DeadEnd(g.name(u).to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub vertex: String,
    pub to: String,
    /// Original edge as `(tail, head)` names.
    pub edge: (String, String),
    /// 1-based chunk index for chunk edges.
    pub chunk: Option<usize>,
    pub cost: Rat,
    pub perceived: Rat,
    #[serde(skip)]
    pub origin: EdgeId,
    #[serde(skip)]
    pub from_x: usize,
    #[serde(skip)]
    pub to_x: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TieEvent {
    pub vertex: String,
    pub candidates: Vec<String>,
    pub winner: String,
    /// Resolved by the chunk marker rather than by id order.
    pub by_marker: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraversalTrace {
    pub steps: Vec<Step>,
    pub total: Rat,
    pub ties: Vec<TieEvent>,
}

impl TraversalTrace {
    /// Original vertices visited, in order.
    pub fn original_path(&self, cg: &ChunkedGraph) -> Vec<VertexId> {
        let mut path = Vec::new();
        if let Some(first) = self.steps.first() {
            path.push(cg.original(first.from_x).expect("walk starts at an original vertex"));
        }
        path.extend(self.steps.iter().filter_map(|s| cg.original(s.to_x)));
        path
    }

    /// Whether the agent went from the tail of `e` to its head, whole or
    /// through its chunks.
    pub fn crosses(&self, g: &TaskGraph, e: EdgeId) -> bool {
        let edge = g.edge(e);
        self.steps.iter().any(|s| {
            s.origin == e && s.to_x == edge.to.0 && (s.chunk.is_some() || s.from_x == edge.from.0)
        })
    }

    pub fn vertex_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.steps.first().map(|s| s.vertex.as_str()).into_iter().collect();
        names.extend(self.steps.iter().map(|s| s.to.as_str()));
        names
    }
}

/// Walks from the source; see [`traverse_from`].
pub fn traverse(cg: &ChunkedGraph, profile: &BiasProfile) -> Result<TraversalTrace, AgentError> {
    traverse_from(cg, profile, cg.source())
}

/// Greedy biased walk from expanded vertex `start` to the sink.
pub fn traverse_from(
    cg: &ChunkedGraph,
    profile: &BiasProfile,
    start: usize,
) -> Result<TraversalTrace, AgentError> {
    let mut steps = Vec::new();
    let mut ties = Vec::new();
    let mut total = Rat::zero();
    let mut cur = start;
    while cur != cg.sink() {
        let (chosen, perceived, tie) = decide(cg, profile, cur)?;
        ties.extend(tie);
        let edge = cg.edge(chosen);
        let g = cg.base();
        let orig = g.edge(edge.origin);
        steps.push(Step {
            vertex: cg.name(cur).to_string(),
            to: cg.name(edge.to).to_string(),
            edge: (g.name(orig.from).to_string(), g.name(orig.to).to_string()),
            chunk: edge.chunk,
            cost: edge.cost.clone(),
            perceived,
            origin: edge.origin,
            from_x: cur,
            to_x: edge.to,
        });
        total += &edge.cost;
        cur = edge.to;
    }
    Ok(TraversalTrace { steps, total, ties })
}

/// One decision at expanded vertex `cur`: the chosen expanded edge and its perceived cost.
fn decide(
    cg: &ChunkedGraph,
    profile: &BiasProfile,
    cur: usize,
) -> Result<(usize, Rat, Option<TieEvent>), AgentError> {
    let mut scored: Vec<(usize, Rat)> = Vec::new();
    for &e in cg.out_edges(cur) {
        let edge = cg.edge(e);
        if let Some(d) = cg.to_sink(edge.to) {
            scored.push((e, profile.bias(edge.origin) * &edge.cost + d));
        }
    }
    let Some(min) = scored.iter().map(|(_, p)| p).min().cloned() else {
        return Err(AgentError::Stuck(cg.name(cur).to_string()));
    };
    let tied: Vec<usize> = scored.iter().filter(|(_, p)| *p == min).map(|(e, _)| *e).collect();
    let marked: Vec<usize> = tied.iter().copied().filter(|&e| cg.edge(e).marked).collect();
    // `tied` inherits the key order of `out_edges`.
    let (chosen, by_marker) = if marked.len() == 1 {
        (marked[0], tied.len() > 1)
    } else {
        (tied[0], false)
    };
    let tie = (tied.len() > 1).then(|| TieEvent {
        vertex: cg.name(cur).to_string(),
        candidates: tied.iter().map(|&e| cg.name(cg.edge(e).to).to_string()).collect(),
        winner: cg.name(cg.edge(chosen).to).to_string(),
        by_marker,
    });
    Ok((chosen, min, tie))
}

/// Walks from original vertex `start` until the agent reaches the next original vertex.
/// Returns that vertex and the true cost paid on the way.
pub fn next_original(
    cg: &ChunkedGraph,
    profile: &BiasProfile,
    start: VertexId,
) -> Result<(VertexId, Rat), AgentError> {
    let mut cur = start.0;
    let mut paid = Rat::zero();
    loop {
        let (chosen, _, _) = decide(cg, profile, cur)?;
        let edge = cg.edge(chosen);
        paid += &edge.cost;
        cur = edge.to;
        if cg.original(cur).is_some() {
            break;
        }
    }
    Ok((cg.original(cur).expect("loop stops at an original vertex"), paid))
}

/// Traversal of `g` with no chunking.
pub fn traverse_plain(g: &TaskGraph, profile: &BiasProfile) -> Result<TraversalTrace, AgentError> {
    traverse(&ChunkedGraph::new(g, &ChunkPlan::new()), profile)
}

/// Simulated cost divided by the shortest-path cost.
pub fn cost_ratio(g: &TaskGraph, profile: &BiasProfile) -> Result<Rat, AgentError> {
    cost_ratio_with(g, &ChunkPlan::new(), profile)
}

pub fn cost_ratio_with(g: &TaskGraph, plan: &ChunkPlan, profile: &BiasProfile) -> Result<Rat, AgentError> {
    let dist = crate::graph::shortest_to_sink(g)?;
    let opt = dist.to_sink(g.source());
    if opt.is_zero() {
        return Err(AgentError::ZeroShortestPath);
    }
    let trace = traverse(&ChunkedGraph::new(g, plan), profile)?;
    Ok(&trace.total / opt)
}

/// Whether chunking `plan` (of `e` alone) under bias `b` makes the agent cross
/// `e` exactly when an unchunked agent with bias `b_prime` on `e` would.
pub fn selective_bias_equivalence_check(
    g: &TaskGraph,
    plan: &Chunking,
    b: &Rat,
    b_prime: &Rat,
) -> Result<bool, AgentError> {
    let chunked_profile = BiasProfile::new(b.clone())?;
    let plan_set = {
        let mut p = ChunkPlan::new();
        p.insert(plan.clone());
        p
    };
    let chunked = traverse(&ChunkedGraph::new(g, &plan_set), &chunked_profile)?;
    let override_profile = BiasProfile::diagnostic(b.clone())?.with_override(plan.edge, b_prime.clone())?;
    let plain = traverse_plain(g, &override_profile)?;
    Ok(chunked.crosses(g, plan.edge) == plain.crosses(g, plan.edge))
}
