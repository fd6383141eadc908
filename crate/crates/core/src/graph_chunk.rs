//! Whole-graph chunk planning for one agent.
//!
//! Chunking an out-edge of `u` only changes the agent's choice at `u`, and
//! the agent at `u` takes a chunked edge iff its bottleneck is at most
//! `alpha_u`, the perceived cost of its unchunked choice. Both planners reduce
//! to a shortest-path computation over persuadable edges.
//!
//! Budget accounting: the edge the agent takes unchunked costs nothing; an
//! edge rebuilt into `j` chunks costs `j`. A single marked chunk (`j = 1`) is
//! how an exactly tied edge wins the tie-break.

use serde::Serialize;
use thiserror::Error;

use crate::agent::{best_alternative, traverse, AgentError, BiasProfile, TraversalTrace};
use crate::chunked::{ChunkPlan, Chunking, ChunkedGraph};
use crate::edge_chunk::{min_chunks_in, optimal_in, EdgeContext};
use crate::graph::{shortest_to_sink, validate, DistanceMap, EdgeId, GraphError, TaskGraph, VertexId};
use crate::rat::{ExtRat, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphChunkError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("the planned path is not followed in simulation")]
    PlanNotFollowed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetMode {
    Local,
    Global,
}

/// `Local`: at most `k` chunks per edge. `Global`: at most `k` in total.
/// `k = 0` forbids chunking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BudgetSpec {
    pub mode: BudgetMode,
    pub k: usize,
}

impl BudgetSpec {
    pub fn local(k: usize) -> Self {
        BudgetSpec { mode: BudgetMode::Local, k }
    }

    pub fn global(k: usize) -> Self {
        BudgetSpec { mode: BudgetMode::Global, k }
    }

    /// Whether a plan with these per-edge chunk counts fits the budget.
    pub fn admits(&self, counts: impl IntoIterator<Item = usize>) -> bool {
        let mut counts = counts.into_iter();
        match self.mode {
            BudgetMode::Local => counts.all(|c| c <= self.k),
            BudgetMode::Global => counts.sum::<usize>() <= self.k,
        }
    }
}

/// What it takes to make the agent at the tail cross an edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Persuasion {
    /// The agent's own unchunked choice.
    Default,
    /// The cheapest chunking that works has this many chunks.
    Chunks(usize, Vec<Rat>),
    /// No chunking within the budget works.
    Impossible,
}

impl Persuasion {
    pub fn cost(&self) -> Option<usize> {
        match self {
            Persuasion::Default => Some(0),
            Persuasion::Chunks(l, _) => Some(*l),
            Persuasion::Impossible => None,
        }
    }
}

/// Per-vertex agent choice and per-edge persuasion requirements.
#[derive(Clone, Debug)]
pub struct PersuasionTable {
    pub alpha: Vec<Option<Rat>>,
    pub default_succ: Vec<Option<VertexId>>,
    pub edges: Vec<Persuasion>,
}

impl PersuasionTable {
    /// `minimal`: use the fewest chunks that persuade (global budgets);
    /// otherwise use the optimal `k`-chunking whenever that persuades.
    pub fn build(g: &TaskGraph, dist: &DistanceMap, profile: &BiasProfile, k: usize, minimal: bool) -> Self {
        let b = profile.default_bias();
        let mut alpha = vec![None; g.vertex_count()];
        let mut default_succ = vec![None; g.vertex_count()];
        for u in g.vertices() {
            if dist.get(u).is_some() && u != g.sink() {
                if let Ok((w, a)) = best_alternative(g, dist, profile, u) {
                    alpha[u.0] = Some(a);
                    default_succ[u.0] = Some(w);
                }
            }
        }
        let edges = g
            .edge_ids()
            .map(|e| {
                let edge = g.edge(e);
                let (Some(a), Some(w)) = (&alpha[edge.from.0], default_succ[edge.from.0]) else {
                    return Persuasion::Impossible;
                };
                if dist.get(edge.to).is_none() {
                    return Persuasion::Impossible;
                }
                if w == edge.to {
                    return Persuasion::Default;
                }
                if k == 0 {
                    return Persuasion::Impossible;
                }
                let ctx = EdgeContext::new(g, dist, e);
                if minimal {
                    match min_chunks_in(&ctx, b, a, k) {
                        Some(l) => Persuasion::Chunks(l, optimal_in(&ctx, b, l).0),
                        None => Persuasion::Impossible,
                    }
                } else {
                    let (chunks, rep) = optimal_in(&ctx, b, k);
                    if &rep.bottleneck <= a {
                        Persuasion::Chunks(chunks.len(), chunks)
                    } else {
                        Persuasion::Impossible
                    }
                }
            })
            .collect();
        PersuasionTable {
            alpha,
            default_succ,
            edges,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphPlan {
    pub budget: BudgetSpec,
    pub plan: ChunkPlan,
    pub path: Vec<VertexId>,
    pub predicted_cost: Rat,
    pub trace: TraversalTrace,
}

fn check_bias(b: &Rat) -> Result<BiasProfile, GraphChunkError> {
    Ok(BiasProfile::new(b.clone())?)
}

/// Plan for an agent with bias `b` and at most `k` chunks per edge.
pub fn chunk_graph_local(g: &TaskGraph, b: &Rat, k: usize) -> Result<GraphPlan, GraphChunkError> {
    let profile = check_bias(b)?;
    let order = validate(g)?;
    let dist = shortest_to_sink(g)?;
    let table = PersuasionTable::build(g, &dist, &profile, k, false);
    let usable = |e: EdgeId| table.edges[e.0].cost().map(|_| 0);
    let (path_edges, cost) = budgeted_shortest_path(g, &order, 0, &usable)
        .expect("the default path is always usable");
    finish(g, &profile, BudgetSpec::local(k), &table, path_edges, cost)
}

/// Plan for an agent with bias `b` and at most `k` chunks in total.
pub fn chunk_graph_global(g: &TaskGraph, b: &Rat, k: usize) -> Result<GraphPlan, GraphChunkError> {
    let profile = check_bias(b)?;
    let order = validate(g)?;
    let dist = shortest_to_sink(g)?;
    let table = PersuasionTable::build(g, &dist, &profile, k, true);
    let usable = |e: EdgeId| table.edges[e.0].cost();
    let (path_edges, cost) = budgeted_shortest_path(g, &order, k, &usable)
        .expect("the default path is always usable");
    finish(g, &profile, BudgetSpec::global(k), &table, path_edges, cost)
}

/// `cost[s, i]` for `i = 0..=k` under a global budget.
pub fn global_cost_curve(g: &TaskGraph, b: &Rat, k: usize) -> Result<Vec<ExtRat>, GraphChunkError> {
    let profile = check_bias(b)?;
    let order = validate(g)?;
    let dist = shortest_to_sink(g)?;
    let table = PersuasionTable::build(g, &dist, &profile, k, true);
    let usable = |e: EdgeId| table.edges[e.0].cost();
    let cost = budget_table(g, &order, k, &usable);
    Ok(cost[g.source().0].clone())
}

/// `cost[u][i]`: cheapest u-t path using persuadable edges whose budget
/// costs sum to at most `i`.
pub(crate) fn budget_table(
    g: &TaskGraph,
    order: &[VertexId],
    k: usize,
    usable: &dyn Fn(EdgeId) -> Option<usize>,
) -> Vec<Vec<ExtRat>> {
    let mut cost = vec![vec![ExtRat::Infinite; k + 1]; g.vertex_count()];
    cost[g.sink().0] = vec![ExtRat::Finite(Rat::zero()); k + 1];
    for &u in order.iter().rev() {
        if u == g.sink() {
            continue;
        }
        for i in 0..=k {
            let mut best = ExtRat::Infinite;
            for &e in g.out_edges(u) {
                let Some(l) = usable(e).filter(|&l| l <= i) else { continue };
                let edge = g.edge(e);
                let cand = cost[edge.to.0][i - l].add_rat(&edge.cost);
                if cand < best {
                    best = cand;
                }
            }
            cost[u.0][i] = best;
        }
    }
    cost
}

/// Reconstructs a cheapest path from the table; ties go to the first
/// out-edge in head order.
pub(crate) fn budgeted_shortest_path(
    g: &TaskGraph,
    order: &[VertexId],
    k: usize,
    usable: &dyn Fn(EdgeId) -> Option<usize>,
) -> Option<(Vec<EdgeId>, Rat)> {
    let cost = budget_table(g, order, k, usable);
    let total = cost[g.source().0][k].finite()?.clone();
    let (mut u, mut i) = (g.source(), k);
    let mut path = Vec::new();
    while u != g.sink() {
        let want = &cost[u.0][i];
        let e = g
            .out_edges(u)
            .iter()
            .copied()
            .find(|&e| {
                usable(e).is_some_and(|l| l <= i && cost[g.edge(e).to.0][i - l].add_rat(&g.edge(e).cost) == *want)
            })
            .expect("table entry is realized by some edge");
        path.push(e);
        i -= usable(e).expect("usable");
        u = g.edge(e).to;
    }
    Some((path, total))
}

fn finish(
    g: &TaskGraph,
    profile: &BiasProfile,
    budget: BudgetSpec,
    table: &PersuasionTable,
    path_edges: Vec<EdgeId>,
    cost: Rat,
) -> Result<GraphPlan, GraphChunkError> {
    let mut plan = ChunkPlan::new();
    for &e in &path_edges {
        if let Persuasion::Chunks(_, chunks) = &table.edges[e.0] {
            plan.insert(Chunking::new(e, chunks.clone()));
        }
    }
    let mut path = vec![g.source()];
    path.extend(path_edges.iter().map(|&e| g.edge(e).to));
    let cg = ChunkedGraph::new(g, &plan);
    let trace = traverse(&cg, profile)?;
    if trace.original_path(&cg) != path || trace.total != cost {
        return Err(GraphChunkError::PlanNotFollowed);
    }
    Ok(GraphPlan {
        budget,
        plan,
        path,
        predicted_cost: cost,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::traverse_plain;
    use crate::fixtures::s32;
    use crate::graph::{random_dag, RandomDagSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(s: &str) -> Rat {
        s.parse().unwrap()
    }

    fn names<'a>(g: &'a TaskGraph, p: &[VertexId]) -> Vec<&'a str> {
        p.iter().map(|&v| g.name(v)).collect()
    }

    #[test]
    fn s32_local() {
        let g = s32();
        let p = chunk_graph_local(&g, &r("2"), 3).unwrap();
        assert_eq!(names(&g, &p.path), ["u", "v", "t"]);
        assert_eq!(p.predicted_cost, r("74.1"));
        assert_eq!(p.plan.len(), 1);
        let c = p.plan.chunkings().next().unwrap();
        assert_eq!(c.edge, g.edge_by_names("u", "v").unwrap());
        let p2 = chunk_graph_local(&g, &r("2"), 2).unwrap();
        assert!(p2.plan.is_empty());
        assert_eq!(p2.predicted_cost, r("76"));
    }

    #[test]
    fn s32_global() {
        let g = s32();
        let p = chunk_graph_global(&g, &r("2"), 3).unwrap();
        assert_eq!(p.predicted_cost, r("74.1"));
        assert_eq!(p.plan.total_chunks(), 3);
        let p0 = chunk_graph_global(&g, &r("2"), 0).unwrap();
        assert!(p0.plan.is_empty());
        assert_eq!(p0.predicted_cost, traverse_plain(&g, &BiasProfile::new(r("2")).unwrap()).unwrap().total);
    }

    #[test]
    fn gadgets_in_series() {
        // Two copies of the fixture glued sink-to-source.
        let mut b = TaskGraph::builder();
        for (pre, src, dst) in [("a", "a_u", "b_u"), ("b", "b_u", "t")] {
            let n = |s: &str| if s == "u" { src.to_string() } else if s == "t" { dst.to_string() } else { format!("{pre}_{s}") };
            for (f, t, c) in [("u", "w", "65"), ("w", "t", "2"), ("u", "v", "14"), ("v", "t", "60.1"), ("u", "z", "0"), ("z", "t", "76")] {
                b = b.edge(n(f), n(t), r(c));
            }
        }
        let g = b.build("a_u", "t").unwrap();
        // Three chunks per gadget route both through v.
        let p = chunk_graph_local(&g, &r("2"), 3).unwrap();
        assert_eq!(p.predicted_cost, r("148.2"));
        assert_eq!(p.plan.len(), 2);
        assert!(p.plan.chunkings().all(|c| c.k() == 3));
        // Four chunks on one (u, w) beat 3 + 3: 67 + 76 < 74.1 + 74.1.
        let p = chunk_graph_global(&g, &r("2"), 6).unwrap();
        assert_eq!(p.predicted_cost, r("143"));
        assert_eq!(p.plan.total_chunks(), 4);
        assert_eq!(chunk_graph_global(&g, &r("2"), 3).unwrap().predicted_cost, r("150.1"));
        assert_eq!(chunk_graph_global(&g, &r("2"), 8).unwrap().predicted_cost, r("134"));
    }

    #[test]
    fn aligned_paths_need_no_plan() {
        let g = TaskGraph::builder()
            .edge("s", "a", r("1"))
            .edge("a", "t", r("1"))
            .edge("s", "t", r("5"))
            .build("s", "t")
            .unwrap();
        for p in [chunk_graph_local(&g, &r("2"), 3).unwrap(), chunk_graph_global(&g, &r("2"), 3).unwrap()] {
            assert!(p.plan.is_empty());
            assert_eq!(p.predicted_cost, r("2"));
        }
    }

    #[test]
    fn tied_edge_gets_a_marked_single_chunk() {
        // 2*1 + 3 = 5 = 2*0 + 5: the agent prefers `a` by id without help.
        let g = TaskGraph::builder()
            .edge("s", "a", r("0"))
            .edge("a", "t", r("5"))
            .edge("s", "b", r("1"))
            .edge("b", "t", r("3"))
            .build("s", "t")
            .unwrap();
        let p = chunk_graph_global(&g, &r("2"), 1).unwrap();
        assert_eq!(p.predicted_cost, r("4"));
        assert_eq!(p.plan.total_chunks(), 1);
        assert_eq!(p.trace.ties.len(), 1);
        assert!(p.trace.ties[0].by_marker);
        assert_eq!(chunk_graph_global(&g, &r("2"), 0).unwrap().predicted_cost, r("5"));
    }

    fn random_graph(rng: &mut ChaCha8Rng) -> TaskGraph {
        let spec = RandomDagSpec {
            vertices: rng.gen_range(2..=7),
            cost_denom: 2,
            ..Default::default()
        };
        random_dag(rng, &spec)
    }

    #[test]
    fn plans_are_valid_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..60 {
            let g = random_graph(&mut rng);
            let b = Rat::frac(rng.gen_range(11..=40), 10);
            let curve = global_cost_curve(&g, &b, 4).unwrap();
            for w in curve.windows(2) {
                assert!(w[1] <= w[0]);
            }
            let mut prev_local: Option<Rat> = None;
            for k in 0..=4 {
                let glob = chunk_graph_global(&g, &b, k).unwrap();
                assert!(glob.plan.total_chunks() <= k);
                assert_eq!(ExtRat::Finite(glob.predicted_cost.clone()), curve[k]);
                let loc = chunk_graph_local(&g, &b, k).unwrap();
                assert!(loc.plan.max_chunks() <= k);
                assert!(loc.predicted_cost <= glob.predicted_cost);
                if let Some(p) = &prev_local {
                    assert!(&loc.predicted_cost <= p);
                }
                prev_local = Some(loc.predicted_cost.clone());
                for plan in [&glob, &loc] {
                    let on_path: Vec<EdgeId> =
                        plan.path.windows(2).map(|w| g.find_edge(w[0], w[1]).unwrap()).collect();
                    assert!(plan.plan.chunkings().all(|c| on_path.contains(&c.edge)));
                }
            }
        }
    }
}
