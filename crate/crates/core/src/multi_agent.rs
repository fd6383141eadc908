//! Chunking for several bias types at once.
//!
//! Agents share one chunk plan. At a vertex visited by a single agent only that
//! agent's threshold matters. Where two agents meet, a chunking must persuade
//! one and repel the other (splitting), or persuade all of them (same path).
//!
//! `alpha_u^(j)` always means agent `j`'s perceived cost of its best
//! unchunked exit from `u` other than the edge being chunked.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::agent::{next_original, traverse, AgentError, BiasProfile, TraversalTrace};
use crate::chunked::{ChunkPlan, Chunking, ChunkedGraph};
use crate::edge_chunk::{optimal_in, EdgeContext};
use crate::graph::{shortest_to_sink, validate, DistanceMap, EdgeId, GraphError, TaskGraph, VertexId};
use crate::graph_chunk::{budgeted_shortest_path, BudgetMode, BudgetSpec};
use crate::rat::{ExtRat, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultiAgentError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("the taking agent rejects every {k}-chunking of {edge}")]
    TakerRefuses { edge: String, k: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("the planned paths are not followed in simulation")]
    PlanNotFollowed,
    #[error("no single path is taken by every agent within the budget")]
    NoSharedPath,
}

/// Biases `b_1 < .. < b_m`, all above 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentSet {
    biases: Vec<Rat>,
}

impl AgentSet {
    pub fn new(biases: Vec<Rat>) -> Result<Self, MultiAgentError> {
        if biases.is_empty() {
            return Err(MultiAgentError::InvalidParams("at least one agent is required".into()));
        }
        if let Some(b) = biases.iter().find(|b| **b <= Rat::one()) {
            return Err(MultiAgentError::InvalidParams(format!("bias {b} must exceed 1")));
        }
        if biases.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MultiAgentError::InvalidParams("biases must be strictly increasing".into()));
        }
        Ok(AgentSet { biases })
    }

    pub fn biases(&self) -> &[Rat] {
        &self.biases
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }

    pub fn profiles(&self) -> Vec<BiasProfile> {
        self.biases
            .iter()
            .map(|b| BiasProfile::new(b.clone()).expect("checked in new"))
            .collect()
    }
}

fn check_bias(b: &Rat) -> Result<(), MultiAgentError> {
    if b <= &Rat::one() {
        return Err(MultiAgentError::InvalidParams(format!("bias {b} must exceed 1")));
    }
    Ok(())
}

/// `alpha_u` for an agent with bias `b` deciding whether to take `e`:
/// `min_{w != v} b c(u,w) + c(w -> t)`. `None` when `e` is the only exit.
pub fn outside_option(g: &TaskGraph, dist: &DistanceMap, e: EdgeId, b: &Rat) -> Option<Rat> {
    let edge = g.edge(e);
    g.out_edges(edge.from)
        .iter()
        .filter(|&&o| o != e)
        .filter_map(|&o| {
            let other = g.edge(o);
            dist.get(other.to).map(|d| b * &other.cost + d)
        })
        .min()
}

// ---------------------------------------------------------------------------
// Same path for all agents.

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SamePathInfeasible {
    /// Chunk `index` (1-based) would need negative mass.
    NegativeChunk { index: usize },
    /// Every chunk was raised to its cap and `placed < x`.
    MassDeficit { placed: Rat },
}

/// Greedy from the last chunk backwards: each chunk takes the most mass every
/// agent still accepts given the mass already placed behind it. `None` caps
/// are unconstrained agents.
pub(crate) fn same_path_in(
    ctx: &EdgeContext,
    caps: &[(Rat, Option<Rat>)],
    k: usize,
) -> Result<Vec<Rat>, SamePathInfeasible> {
    let mut chunks = vec![Rat::zero(); k];
    let mut placed = Rat::zero();
    for i in (0..k).rev() {
        let tail = if i + 1 == k { ctx.cv.clone() } else { onward(ctx, &placed) };
        let room = caps
            .iter()
            .filter_map(|(b, a)| a.as_ref().map(|a| (a - &tail) / b))
            .min();
        let xi = match room {
            None => &ctx.x - &placed,
            Some(r) if r.is_negative() => return Err(SamePathInfeasible::NegativeChunk { index: i + 1 }),
            Some(r) => r,
        };
        if &placed + &xi >= ctx.x {
            chunks[i] = &ctx.x - &placed;
            return Ok(chunks);
        }
        placed += &xi;
        chunks[i] = xi;
    }
    Err(SamePathInfeasible::MassDeficit { placed })
}

fn onward(ctx: &EdgeContext, rest: &Rat) -> Rat {
    let via = rest + &ctx.cv;
    match &ctx.gamma {
        Some(g) if g < &via => g.clone(),
        _ => via,
    }
}

/// A `k`-chunking of `e` that every agent in `agents` takes, if one exists.
pub fn chunk_same_path(
    g: &TaskGraph,
    dist: &DistanceMap,
    e: EdgeId,
    agents: &AgentSet,
    k: usize,
) -> Result<Result<Chunking, SamePathInfeasible>, MultiAgentError> {
    if k == 0 {
        return Err(MultiAgentError::InvalidParams("k must be at least 1".into()));
    }
    let ctx = EdgeContext::new(g, dist, e);
    let caps: Vec<_> = agents
        .biases()
        .iter()
        .map(|b| (b.clone(), outside_option(g, dist, e, b)))
        .collect();
    Ok(same_path_in(&ctx, &caps, k).map(|chunks| Chunking::new(e, chunks)))
}

/// Least `l <= k_max` for which the same-path greedy succeeds; feasibility is
/// monotone in `l`.
pub(crate) fn min_same_path_chunks(ctx: &EdgeContext, caps: &[(Rat, Option<Rat>)], k_max: usize) -> Option<usize> {
    if k_max == 0 || same_path_in(ctx, caps, k_max).is_err() {
        return None;
    }
    let (mut lo, mut hi) = (1, k_max);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if same_path_in(ctx, caps, mid).is_ok() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

// ---------------------------------------------------------------------------
// Splitting two agents at one edge.

/// Which agent must take the chunking; the other one is repelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `A_1` (bias `b_1`) takes.
    First,
    /// `A_2` (bias `b_2`) takes.
    Second,
}

/// Best chunking for one target chunk `i`: the repelled agent's perceived cost
/// of `e_i` is as high as the taker allows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitCandidate {
    /// 1-based.
    pub target: usize,
    pub chunks: Vec<Rat>,
    pub repelled_bottleneck: Rat,
    pub taker_bottleneck: Rat,
    /// `alpha^(taker) - p(e_j; b_taker)` for every chunk.
    pub headroom: Vec<Rat>,
    /// Total headroom on the chunks before the target.
    pub lambda: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitResult {
    pub direction: Direction,
    pub chunking: Chunking,
    pub repelled_bottleneck: Rat,
    pub target: usize,
    pub candidates: Vec<SplitCandidate>,
}

/// Largest `y in [0, x - before]` that the taker accepts as the chunk after
/// `before` mass (not the last chunk). The perceived cost is increasing in `y`.
fn forward_cap(ctx: &EdgeContext, b: &Rat, alpha: &Rat, before: &Rat) -> Rat {
    let left = &ctx.x - before;
    let f = |y: &Rat| b * y + onward(ctx, &(&left - y));
    if &f(&left) <= alpha {
        return left;
    }
    // (b - 1) y + left + cv = alpha on the part where the chain is cheaper.
    let slope_root = (alpha - &left - &ctx.cv) / (b - Rat::one());
    let y = match &ctx.gamma {
        Some(gamma) => {
            let knee = &left + &ctx.cv - gamma;
            if !knee.is_negative() && &f(&knee) >= alpha {
                (alpha - gamma) / b
            } else {
                slope_root
            }
        }
        None => slope_root,
    };
    y.max(Rat::zero())
}

/// Forward greedy over the first `count` chunks, stopping at `limit` mass.
fn forward_fill(ctx: &EdgeContext, b: &Rat, alpha: &Rat, count: usize, limit: Option<&Rat>) -> Vec<Rat> {
    let mut out = Vec::with_capacity(count);
    let mut before = Rat::zero();
    for _ in 0..count {
        let mut y = forward_cap(ctx, b, alpha, &before);
        if let Some(l) = limit {
            y = y.min(l - &before);
        }
        before += &y;
        out.push(y);
    }
    out
}

/// Backward greedy over the last `count` of `k` chunks, stopping at `limit`.
/// `None` when even an empty last chunk is rejected.
fn backward_fill(
    ctx: &EdgeContext,
    b: &Rat,
    alpha: &Rat,
    count: usize,
    limit: Option<&Rat>,
) -> Option<Vec<Rat>> {
    let mut out = vec![Rat::zero(); count];
    let mut placed = Rat::zero();
    for slot in (0..count).rev() {
        let last = slot + 1 == count;
        let tail = if last { ctx.cv.clone() } else { onward(ctx, &placed) };
        let mut y = (alpha - &tail) / b;
        if y.is_negative() {
            return None;
        }
        if let Some(l) = limit {
            y = y.min(l - &placed);
        }
        placed += &y;
        out[slot] = y;
    }
    Some(out)
}

/// Per-target optimum. With `P`, `s`, `T` the mass before, at and after the
/// target, the taker constraints separate: `P <= P_max` (forward greedy),
/// `T <= T_max` (backward greedy), `b_T s + m(T) <= alpha_T` where
/// `m(T) = min(gamma, T + cv)` (`cv` for the last chunk). The repelled cost
/// `b_R s + m(T)` with `s` as large as allowed is piecewise linear in `T`, so
/// its maximum is at a breakpoint. `prefer_small_tail` breaks ties.
fn split_target(
    ctx: &EdgeContext,
    b_t: &Rat,
    alpha_t: &Rat,
    b_r: &Rat,
    k: usize,
    i: usize,
    prefer_small_tail: bool,
) -> Option<SplitCandidate> {
    let x = &ctx.x;
    let is_last = i == k;
    let p_max: Rat = forward_fill(ctx, b_t, alpha_t, i - 1, None).iter().sum();
    let t_max: Rat = if is_last {
        Rat::zero()
    } else {
        backward_fill(ctx, b_t, alpha_t, k - i, None)?.iter().sum()
    };
    let t_hi = t_max.min(x.clone());
    let m = |t: &Rat| if is_last { ctx.cv.clone() } else { onward(ctx, t) };
    let s_of = |t: &Rat| ((alpha_t - m(t)) / b_t).min(x - t);
    let need = x - &p_max;
    let feasible = |t: &Rat| {
        let s = s_of(t);
        !t.is_negative() && t <= &t_hi && !s.is_negative() && t + &s >= need
    };

    let one = Rat::one();
    let mut points = vec![Rat::zero(), t_hi.clone()];
    if !is_last {
        // m kink, s-cap meeting x - T, and the feasibility boundary, per piece of m.
        points.push((b_t * x - alpha_t + &ctx.cv) / (b_t - &one));
        points.push((b_t * &need - alpha_t + &ctx.cv) / (b_t - &one));
        if let Some(gamma) = &ctx.gamma {
            points.push(gamma - &ctx.cv);
            points.push(x - (alpha_t - gamma) / b_t);
            points.push(&need - (alpha_t - gamma) / b_t);
        }
    }
    let mut best: Option<(Rat, Rat)> = None;
    for t in points.into_iter().filter(|t| feasible(t)) {
        let val = b_r * s_of(&t) + m(&t);
        let better = match &best {
            None => true,
            Some((bt, bv)) => val > *bv || (val == *bv && (t < *bt) == prefer_small_tail && t != *bt),
        };
        if better {
            best = Some((t, val));
        }
    }
    let (t, _) = best?;
    let s = s_of(&t);
    let p = x - &t - &s;
    let mut chunks = forward_fill(ctx, b_t, alpha_t, i - 1, Some(&p));
    chunks.push(s);
    if !is_last {
        chunks.extend(backward_fill(ctx, b_t, alpha_t, k - i, Some(&t)).expect("t_max exists"));
    }
    debug_assert_eq!(&chunks.iter().sum::<Rat>(), x);

    let taker = ctx.perceived(&chunks, b_t);
    let headroom: Vec<Rat> = taker.iter().map(|p| alpha_t - p).collect();
    assert!(headroom.iter().all(|h| !h.is_negative()), "taker accepts the split");
    let lambda = headroom[..i - 1].iter().sum();
    Some(SplitCandidate {
        target: i,
        repelled_bottleneck: ctx.bottleneck(&chunks, b_r),
        taker_bottleneck: taker.into_iter().max().expect("k >= 1"),
        chunks,
        headroom,
        lambda,
    })
}

/// Whether the target chunk is saturated whenever other chunks carry mass,
/// and, for `Direction::First`, whether every chunk up to the target is
/// saturated whenever later chunks carry mass.
pub fn split_postconditions_hold(c: &SplitCandidate, direction: Direction) -> bool {
    let i = c.target - 1;
    let others: Rat = c.chunks.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()).sum();
    let a = others.is_zero() || c.headroom[i].is_zero();
    let later: Rat = c.chunks[i + 1..].iter().sum();
    let b = direction == Direction::Second || later.is_zero() || c.headroom[..=i].iter().all(Rat::is_zero);
    a && b
}

pub(crate) fn split_in(
    ctx: &EdgeContext,
    b_taker: &Rat,
    alpha_taker: Option<&Rat>,
    b_repelled: &Rat,
    k: usize,
    direction: Direction,
) -> Option<Vec<SplitCandidate>> {
    let Some(alpha) = alpha_taker else {
        // A single exit: the taker takes anything, nobody can be repelled.
        let mut chunks = vec![Rat::zero(); k];
        chunks[0] = ctx.x.clone();
        return Some(vec![SplitCandidate {
            target: 1,
            repelled_bottleneck: ctx.bottleneck(&chunks, b_repelled),
            taker_bottleneck: ctx.bottleneck(&chunks, b_taker),
            headroom: vec![Rat::zero(); k],
            lambda: Rat::zero(),
            chunks,
        }]);
    };
    let (_, rep) = optimal_in(ctx, b_taker, k);
    if &rep.bottleneck > alpha {
        return None;
    }
    let prefer_small_tail = direction == Direction::First;
    let out: Vec<SplitCandidate> = (1..=k)
        .filter_map(|i| split_target(ctx, b_taker, alpha, b_repelled, k, i, prefer_small_tail))
        .collect();
    for c in &out {
        assert!(split_postconditions_hold(c, direction), "split postconditions at target {}", c.target);
    }
    Some(out)
}

/// Chunk `e` into `k` chunks so that the taker crosses it and the repelled
/// agent's bottleneck is as large as possible.
pub fn chunk_split(
    g: &TaskGraph,
    dist: &DistanceMap,
    e: EdgeId,
    b1: &Rat,
    b2: &Rat,
    k: usize,
    direction: Direction,
) -> Result<SplitResult, MultiAgentError> {
    check_bias(b1)?;
    check_bias(b2)?;
    if k == 0 {
        return Err(MultiAgentError::InvalidParams("k must be at least 1".into()));
    }
    let (b_t, b_r) = match direction {
        Direction::First => (b1, b2),
        Direction::Second => (b2, b1),
    };
    let ctx = EdgeContext::new(g, dist, e);
    let alpha = outside_option(g, dist, e, b_t);
    let candidates = split_in(&ctx, b_t, alpha.as_ref(), b_r, k, direction)
        .ok_or_else(|| MultiAgentError::TakerRefuses { edge: g.edge_label(e), k })?;
    let best = candidates
        .iter()
        .max_by(|a, b| a.repelled_bottleneck.cmp(&b.repelled_bottleneck).then(b.target.cmp(&a.target)))
        .expect("at least one target is feasible")
        .clone();
    Ok(SplitResult {
        direction,
        chunking: Chunking::new(e, best.chunks.clone()),
        repelled_bottleneck: best.repelled_bottleneck,
        target: best.target,
        candidates,
    })
}

// ---------------------------------------------------------------------------
// Compatible successor pairs.

/// How a pair of moves is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCase {
    /// The agents stand at different vertices and are persuaded independently.
    Separate,
    /// Both agents cross the same edge.
    SamePath,
    /// The agents leave a shared vertex along different edges.
    Split,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatEntry {
    pub v: VertexId,
    pub z: VertexId,
    pub case: PairCase,
    /// Chunks spent; per-edge counts are bounded by `k` in local mode.
    pub chunks: usize,
    pub witnesses: Vec<Chunking>,
}

/// Shared data for the two-agent planners.
struct Pair<'g> {
    g: &'g TaskGraph,
    dist: DistanceMap,
    b: [Rat; 2],
    profiles: [BiasProfile; 2],
    tables: [crate::graph_chunk::PersuasionTable; 2],
    budget: BudgetSpec,
}

impl<'g> Pair<'g> {
    fn new(g: &'g TaskGraph, b1: &Rat, b2: &Rat, budget: BudgetSpec) -> Result<Self, MultiAgentError> {
        check_bias(b1)?;
        check_bias(b2)?;
        let dist = shortest_to_sink(g)?;
        let profiles = [BiasProfile::new(b1.clone())?, BiasProfile::new(b2.clone())?];
        let minimal = budget.mode == BudgetMode::Global;
        let tables = [
            crate::graph_chunk::PersuasionTable::build(g, &dist, &profiles[0], budget.k, minimal),
            crate::graph_chunk::PersuasionTable::build(g, &dist, &profiles[1], budget.k, minimal),
        ];
        Ok(Pair {
            g,
            dist,
            b: [b1.clone(), b2.clone()],
            profiles,
            tables,
            budget,
        })
    }

    /// Where each agent standing at `u` goes next under `chunkings`. An agent
    /// that starts down one chain and leaves it midway pays more than the
    /// edge it ends up on; such moves count as failures.
    fn moves(&self, u: VertexId, chunkings: &[&Chunking]) -> Option<[VertexId; 2]> {
        let mut plan = ChunkPlan::new();
        for c in chunkings {
            plan.insert((*c).clone());
        }
        let cg = ChunkedGraph::new(self.g, &plan);
        let step = |p: &BiasProfile| {
            let (to, paid) = next_original(&cg, p, u).ok()?;
            let e = self.g.find_edge(u, to)?;
            (self.g.edge(e).cost == paid).then_some(to)
        };
        Some([step(&self.profiles[0])?, step(&self.profiles[1])?])
    }

    fn live(&self, e: EdgeId) -> bool {
        self.dist.get(self.g.edge(e).to).is_some()
    }

    fn solo(&self, agent: usize, u: VertexId) -> Vec<(EdgeId, usize, Option<Chunking>)> {
        use crate::graph_chunk::Persuasion;
        self.g
            .out_edges(u)
            .iter()
            .filter_map(|&e| match &self.tables[agent].edges[e.0] {
                Persuasion::Default => Some((e, 0, None)),
                Persuasion::Chunks(l, chunks) => {
                    let l = if self.budget.mode == BudgetMode::Global { *l } else { 0 };
                    Some((e, l, Some(Chunking::new(e, chunks.clone()))))
                }
                Persuasion::Impossible => None,
            })
            .collect()
    }

    fn separate(&self, u: VertexId, y: VertexId) -> Vec<CompatEntry> {
        let mut out = Vec::new();
        for (e1, l1, c1) in self.solo(0, u) {
            for (e2, l2, c2) in self.solo(1, y) {
                out.push(CompatEntry {
                    v: self.g.edge(e1).to,
                    z: self.g.edge(e2).to,
                    case: PairCase::Separate,
                    chunks: l1 + l2,
                    witnesses: c1.iter().chain(c2.iter()).cloned().collect(),
                });
            }
        }
        out
    }

    fn caps(&self, e: EdgeId) -> Vec<(Rat, Option<Rat>)> {
        self.b.iter().map(|b| (b.clone(), outside_option(self.g, &self.dist, e, b))).collect()
    }

    fn same_path(&self, u: VertexId, e: EdgeId) -> Option<CompatEntry> {
        let v = self.g.edge(e).to;
        let entry = |chunks, witnesses| CompatEntry { v, z: v, case: PairCase::SamePath, chunks, witnesses };
        if self.moves(u, &[]) == Some([v, v]) {
            return Some(entry(0, vec![]));
        }
        let k = self.budget.k;
        let ctx = EdgeContext::new(self.g, &self.dist, e);
        let caps = self.caps(e);
        let l = match self.budget.mode {
            BudgetMode::Local => (k > 0 && same_path_in(&ctx, &caps, k).is_ok()).then_some(k)?,
            BudgetMode::Global => min_same_path_chunks(&ctx, &caps, k)?,
        };
        let c = Chunking::new(e, same_path_in(&ctx, &caps, l).ok()?);
        if self.moves(u, &[&c]) != Some([v, v]) {
            return None;
        }
        let spent = if self.budget.mode == BudgetMode::Global { l } else { 0 };
        Some(entry(spent, vec![c]))
    }

    /// Candidate chunkings of `e` with `j` chunks meant to make `agent` take it.
    fn split_options(&self, agent: usize, e: EdgeId, j: usize) -> Vec<Option<Chunking>> {
        if j == 0 {
            return vec![None];
        }
        let ctx = EdgeContext::new(self.g, &self.dist, e);
        let (b_t, b_r) = (&self.b[agent], &self.b[1 - agent]);
        let mut out = vec![Some(Chunking::new(e, optimal_in(&ctx, b_t, j).0))];
        let alpha = outside_option(self.g, &self.dist, e, b_t);
        let direction = if agent == 0 { Direction::First } else { Direction::Second };
        for c in split_in(&ctx, b_t, alpha.as_ref(), b_r, j, direction).unwrap_or_default() {
            let c = Some(Chunking::new(e, c.chunks));
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    fn split_witness(&self, u: VertexId, e1: EdgeId, e2: EdgeId, j1: usize, j2: usize) -> Option<Vec<Chunking>> {
        let want = [self.g.edge(e1).to, self.g.edge(e2).to];
        let o2 = self.split_options(1, e2, j2);
        for c1 in self.split_options(0, e1, j1) {
            for c2 in &o2 {
                let set: Vec<&Chunking> = c1.iter().chain(c2.iter()).collect();
                if self.moves(u, &set) == Some(want) {
                    return Some(set.into_iter().cloned().collect());
                }
            }
        }
        None
    }

    /// Per column `j2`, binary search for the least working `j1`, treating the
    /// count matrix as sorted along rows and columns.
    fn split(&self, u: VertexId, e1: EdgeId, e2: EdgeId) -> Option<CompatEntry> {
        let k = self.budget.k;
        let mut best: Option<(usize, usize, Vec<Chunking>)> = None;
        for j2 in 0..=k {
            let cap = match self.budget.mode {
                BudgetMode::Local => k,
                BudgetMode::Global => k - j2,
            };
            let Some(top) = self.split_witness(u, e1, e2, cap, j2) else { continue };
            let (mut lo, mut hi, mut wit) = (0, cap, top);
            while lo < hi {
                let mid = (lo + hi) / 2;
                match self.split_witness(u, e1, e2, mid, j2) {
                    Some(w) => {
                        hi = mid;
                        wit = w;
                    }
                    None => lo = mid + 1,
                }
            }
            if best.as_ref().is_none_or(|(a, b, _)| lo + j2 < a + b) {
                best = Some((lo, j2, wit));
            }
            if self.budget.mode == BudgetMode::Local {
                break;
            }
        }
        let (j1, j2, witnesses) = best?;
        let chunks = if self.budget.mode == BudgetMode::Global { j1 + j2 } else { 0 };
        Some(CompatEntry {
            v: self.g.edge(e1).to,
            z: self.g.edge(e2).to,
            case: PairCase::Split,
            chunks,
            witnesses,
        })
    }

    fn entries(&self, u: VertexId, y: VertexId) -> Vec<CompatEntry> {
        if u == self.g.sink() || y == self.g.sink() {
            return vec![];
        }
        if u != y {
            return self.separate(u, y);
        }
        let outs: Vec<EdgeId> = self.g.out_edges(u).iter().copied().filter(|&e| self.live(e)).collect();
        let mut out = Vec::new();
        for &e1 in &outs {
            for &e2 in &outs {
                let entry = if e1 == e2 { self.same_path(u, e1) } else { self.split(u, e1, e2) };
                out.extend(entry);
            }
        }
        out
    }
}

/// Successor pairs `(v, z)` reachable from `A_1` at `u` and `A_2` at `y`,
/// each with witness chunkings.
pub fn compatible_pairs(
    g: &TaskGraph,
    u: VertexId,
    y: VertexId,
    b1: &Rat,
    b2: &Rat,
    budget: BudgetSpec,
) -> Result<Vec<CompatEntry>, MultiAgentError> {
    validate(g)?;
    Ok(Pair::new(g, b1, b2, budget)?.entries(u, y))
}

// ---------------------------------------------------------------------------
// Two-agent planning.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoAgentPlan {
    pub budget: BudgetSpec,
    pub plan: ChunkPlan,
    pub paths: [Vec<VertexId>; 2],
    /// Sum of both agents' costs.
    pub predicted_cost: Rat,
    pub traces: [TraversalTrace; 2],
}

type Move = (VertexId, VertexId, usize, Rat, Vec<Chunking>);

/// The DP walks both agents in lockstep by topological position: the agent at
/// the earlier vertex moves alone. Both agents stand at a vertex together iff
/// both paths visit it, so every vertex's chunkings are chosen exactly once,
/// for exactly the agents that pass it.
struct Lockstep<'p, 'g> {
    pair: &'p Pair<'g>,
    pos: Vec<usize>,
    width: usize,
    memo: BTreeMap<(VertexId, VertexId), (Vec<ExtRat>, Vec<Move>)>,
}

impl Lockstep<'_, '_> {
    fn moves(&self, a: VertexId, b: VertexId) -> Vec<Move> {
        let g = self.pair.g;
        if a == b {
            return self
                .pair
                .entries(a, a)
                .into_iter()
                .map(|en| {
                    let step = &g.edge(g.find_edge(a, en.v).expect("edge")).cost
                        + &g.edge(g.find_edge(a, en.z).expect("edge")).cost;
                    (en.v, en.z, en.chunks, step, en.witnesses)
                })
                .collect();
        }
        let first = self.pos[a.0] < self.pos[b.0];
        let (agent, at) = if first { (0, a) } else { (1, b) };
        self.pair
            .solo(agent, at)
            .into_iter()
            .map(|(e, l, c)| {
                let to = g.edge(e).to;
                let (na, nb) = if first { (to, b) } else { (a, to) };
                (na, nb, l, g.edge(e).cost.clone(), c.into_iter().collect())
            })
            .collect()
    }

    fn cost(&mut self, a: VertexId, b: VertexId) -> Vec<ExtRat> {
        if let Some((c, _)) = self.memo.get(&(a, b)) {
            return c.clone();
        }
        let t = self.pair.g.sink();
        let mut best = vec![ExtRat::Infinite; self.width];
        let mut moves = Vec::new();
        if a == t && b == t {
            best = vec![ExtRat::Finite(Rat::zero()); self.width];
        } else {
            moves = self.moves(a, b);
            for (na, nb, l, step, _) in &moves {
                let rest = self.cost(*na, *nb);
                for i in *l..self.width {
                    let cand = rest[i - l].add_rat(step);
                    if cand < best[i] {
                        best[i] = cand;
                    }
                }
            }
        }
        self.memo.insert((a, b), (best.clone(), moves));
        best
    }
}

/// Jointly optimal plan for two agents, minimizing the sum of their costs.
pub fn two_agent_plan(g: &TaskGraph, b1: &Rat, b2: &Rat, budget: BudgetSpec) -> Result<TwoAgentPlan, MultiAgentError> {
    let order = validate(g)?;
    let pair = Pair::new(g, b1, b2, budget)?;
    let mut pos = vec![usize::MAX; g.vertex_count()];
    for (i, v) in order.iter().enumerate() {
        pos[v.0] = i;
    }
    let width = match budget.mode {
        BudgetMode::Local => 1,
        BudgetMode::Global => budget.k + 1,
    };
    let mut dp = Lockstep { pair: &pair, pos, width, memo: BTreeMap::new() };
    let s = g.source();
    let top = width - 1;
    let total = dp.cost(s, s)[top].finite().expect("the default paths are always available").clone();

    let mut plan = ChunkPlan::new();
    let mut paths = [vec![s], vec![s]];
    let (mut a, mut b, mut i) = (s, s, top);
    while (a, b) != (g.sink(), g.sink()) {
        let want = dp.memo[&(a, b)].0[i].clone();
        let moves = dp.memo[&(a, b)].1.clone();
        let (na, nb, l, _, wit) = moves
            .into_iter()
            .find(|(na, nb, l, step, _)| *l <= i && dp.memo[&(*na, *nb)].0[i - l].add_rat(step) == want)
            .expect("table entry is realized by some move");
        for c in wit {
            assert!(plan.get(c.edge).is_none(), "each vertex is decided once");
            plan.insert(c);
        }
        if na != a {
            paths[0].push(na);
        }
        if nb != b {
            paths[1].push(nb);
        }
        (a, b, i) = (na, nb, i - l);
    }

    let cg = ChunkedGraph::new(g, &plan);
    let traces = [traverse(&cg, &pair.profiles[0])?, traverse(&cg, &pair.profiles[1])?];
    let followed = (0..2).all(|j| traces[j].original_path(&cg) == paths[j]);
    if !followed || &traces[0].total + &traces[1].total != total {
        return Err(MultiAgentError::PlanNotFollowed);
    }
    Ok(TwoAgentPlan {
        budget,
        plan,
        paths,
        predicted_cost: total,
        traces,
    })
}

// ---------------------------------------------------------------------------
// One shared path for m agents.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedPathPlan {
    pub budget: BudgetSpec,
    pub plan: ChunkPlan,
    pub path: Vec<VertexId>,
    /// Cost of the path for one agent.
    pub path_cost: Rat,
    pub traces: Vec<TraversalTrace>,
}

/// Cheapest single path every agent in `agents` follows. An edge is free when
/// it is every agent's unchunked choice; otherwise it needs a same-path
/// chunking.
pub fn m_agent_single_path_plan(
    g: &TaskGraph,
    agents: &AgentSet,
    budget: BudgetSpec,
) -> Result<SharedPathPlan, MultiAgentError> {
    let order = validate(g)?;
    let dist = shortest_to_sink(g)?;
    let profiles = agents.profiles();
    let empty = ChunkedGraph::new(g, &ChunkPlan::new());
    let mut defaults = vec![Vec::new(); g.vertex_count()];
    for u in g.vertices() {
        if u != g.sink() && dist.get(u).is_some() {
            for p in &profiles {
                defaults[u.0].push(next_original(&empty, p, u)?.0);
            }
        }
    }
    let k = budget.k;
    let mut chunked: BTreeMap<EdgeId, (usize, Vec<Rat>)> = BTreeMap::new();
    for e in g.edge_ids() {
        let edge = g.edge(e);
        if dist.get(edge.to).is_none() || dist.get(edge.from).is_none() {
            continue;
        }
        if defaults[edge.from.0].iter().all(|&w| w == edge.to) || k == 0 {
            continue;
        }
        let ctx = EdgeContext::new(g, &dist, e);
        let caps: Vec<_> = agents
            .biases()
            .iter()
            .map(|b| (b.clone(), outside_option(g, &dist, e, b)))
            .collect();
        let l = match budget.mode {
            BudgetMode::Local => same_path_in(&ctx, &caps, k).is_ok().then_some(k),
            BudgetMode::Global => min_same_path_chunks(&ctx, &caps, k),
        };
        if let Some(l) = l {
            chunked.insert(e, (l, same_path_in(&ctx, &caps, l).expect("feasible")));
        }
    }
    let usable = |e: EdgeId| {
        let edge = g.edge(e);
        if dist.get(edge.to).is_none() || dist.get(edge.from).is_none() {
            return None;
        }
        if defaults[edge.from.0].iter().all(|&w| w == edge.to) {
            return Some(0);
        }
        chunked.get(&e).map(|(l, _)| if budget.mode == BudgetMode::Global { *l } else { 0 })
    };
    let width = if budget.mode == BudgetMode::Global { k } else { 0 };
    let (edges, path_cost) = budgeted_shortest_path(g, &order, width, &usable).ok_or(MultiAgentError::NoSharedPath)?;
    let mut plan = ChunkPlan::new();
    for e in &edges {
        if let Some((_, chunks)) = chunked.get(e) {
            if !defaults[g.edge(*e).from.0].iter().all(|&w| w == g.edge(*e).to) {
                plan.insert(Chunking::new(*e, chunks.clone()));
            }
        }
    }
    let mut path = vec![g.source()];
    path.extend(edges.iter().map(|&e| g.edge(e).to));
    let cg = ChunkedGraph::new(g, &plan);
    let mut traces = Vec::new();
    for p in &profiles {
        let tr = traverse(&cg, p)?;
        if tr.original_path(&cg) != path || tr.total != path_cost {
            return Err(MultiAgentError::PlanNotFollowed);
        }
        traces.push(tr);
    }
    Ok(SharedPathPlan { budget, plan, path, path_cost, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{chain_perceived, max_fill, GridSpec};
    use crate::fixtures::s32;
    use crate::graph::{random_dag, RandomDagSpec};
    use crate::graph_chunk::{chunk_graph_global, chunk_graph_local};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(s: &str) -> Rat {
        s.parse().unwrap()
    }

    fn names<'a>(g: &'a TaskGraph, p: &[VertexId]) -> Vec<&'a str> {
        p.iter().map(|&v| g.name(v)).collect()
    }

    /// Random `(graph, distances, edge)` where the edge's tail has another exit.
    fn instance(rng: &mut ChaCha8Rng) -> (TaskGraph, DistanceMap, EdgeId) {
        loop {
            let g = random_dag(rng, &RandomDagSpec::default());
            let dist = shortest_to_sink(&g).unwrap();
            let cands: Vec<EdgeId> = g
                .edge_ids()
                .filter(|&e| EdgeContext::new(&g, &dist, e).gamma.is_some())
                .collect();
            if !cands.is_empty() {
                let e = cands[rng.gen_range(0..cands.len())];
                return (g, dist, e);
            }
        }
    }

    #[test]
    fn agent_set_rejects_bad_biases() {
        assert!(AgentSet::new(vec![]).is_err());
        assert!(AgentSet::new(vec![r("1")]).is_err());
        assert!(AgentSet::new(vec![r("3"), r("2")]).is_err());
        assert!(AgentSet::new(vec![r("2"), r("2")]).is_err());
        assert_eq!(AgentSet::new(vec![r("2"), r("3")]).unwrap().len(), 2);
    }

    #[test]
    fn same_path_single_agent_matches_optimal_chunking() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let (g, dist, e) = instance(&mut rng);
            let b = Rat::frac(rng.gen_range(11..40), 10);
            let k = rng.gen_range(1..=4);
            let ctx = EdgeContext::new(&g, &dist, e);
            let alpha = outside_option(&g, &dist, e, &b).unwrap();
            let feasible = same_path_in(&ctx, &[(b.clone(), Some(alpha.clone()))], k).is_ok();
            assert_eq!(feasible, optimal_in(&ctx, &b, k).1.bottleneck <= alpha);
        }
    }

    #[test]
    fn same_path_iff_some_chunking_is_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let agents = AgentSet::new(vec![r("2"), r("3")]).unwrap();
        let mut seen = [0; 2];
        for _ in 0..200 {
            let (g, dist, e) = instance(&mut rng);
            let k = rng.gen_range(1..=3);
            let caps: Vec<(Rat, Rat)> = agents
                .biases()
                .iter()
                .map(|b| (b.clone(), outside_option(&g, &dist, e, b).unwrap()))
                .collect();
            let accepted = |c: &[Rat]| {
                caps.iter()
                    .all(|(b, a)| chain_perceived(&g, &dist, e, c, b).iter().all(|p| p <= a))
            };
            let grid_ok = GridSpec { d: 32, k }.chunkings(&g.edge(e).cost).unwrap().iter().any(|c| accepted(c));
            let greedy_ok = max_fill(&g, &dist, e, k, &caps).is_some_and(|c| accepted(&c));
            let res = chunk_same_path(&g, &dist, e, &agents, k).unwrap();
            assert_eq!(res.is_ok(), grid_ok || greedy_ok, "edge {}", g.edge_label(e));
            if let Ok(c) = &res {
                assert!(accepted(&c.chunks));
                let mut plan = ChunkPlan::new();
                plan.insert(c.clone());
                let cg = ChunkedGraph::new(&g, &plan);
                for p in agents.profiles() {
                    let (w, _) = next_original(&cg, &p, g.edge(e).from).unwrap();
                    assert_eq!(w, g.edge(e).to);
                }
            }
            seen[res.is_ok() as usize] += 1;
        }
        assert!(seen[0] > 10 && seen[1] > 10, "{seen:?}");
    }

    #[test]
    fn same_path_infeasible_reasons() {
        let g = s32();
        let dist = shortest_to_sink(&g).unwrap();
        let uw = g.edge_by_names("u", "w").unwrap();
        let agents = AgentSet::new(vec![r("2"), r("3")]).unwrap();
        // Last chunk alone: 3 * 0 + 2 <= 76, but 65 mass cannot fit into 3 chunks.
        assert!(matches!(
            chunk_same_path(&g, &dist, uw, &agents, 3).unwrap(),
            Err(SamePathInfeasible::MassDeficit { .. })
        ));
        let uv = g.edge_by_names("u", "v").unwrap();
        let c = chunk_same_path(&g, &dist, uv, &agents, 3).unwrap();
        assert!(c.is_err(), "{c:?}");
    }

    #[test]
    fn split_single_chunk() {
        let g = s32();
        let dist = shortest_to_sink(&g).unwrap();
        let uz = g.edge_by_names("u", "z").unwrap();
        let res = chunk_split(&g, &dist, uz, &r("2"), &r("3"), 1, Direction::First).unwrap();
        assert_eq!(res.chunking.chunks, vec![r("0")]);
        assert_eq!(res.repelled_bottleneck, r("76"));
        let g = TaskGraph::builder()
            .edge("s", "a", r("4"))
            .edge("a", "t", r("0"))
            .edge("s", "t", r("10"))
            .build("s", "t")
            .unwrap();
        let dist = shortest_to_sink(&g).unwrap();
        let sa = g.edge_by_names("s", "a").unwrap();
        let res = chunk_split(&g, &dist, sa, &r("2"), &r("3"), 1, Direction::First).unwrap();
        assert_eq!(res.repelled_bottleneck, r("12"));
    }

    #[test]
    fn split_taker_refuses() {
        let g = s32();
        let dist = shortest_to_sink(&g).unwrap();
        let uw = g.edge_by_names("u", "w").unwrap();
        let err = chunk_split(&g, &dist, uw, &r("2"), &r("3"), 3, Direction::First).unwrap_err();
        assert!(matches!(err, MultiAgentError::TakerRefuses { .. }));
    }

    #[test]
    fn split_on_fixture_repels_the_stronger_bias() {
        let g = s32();
        let dist = shortest_to_sink(&g).unwrap();
        let uv = g.edge_by_names("u", "v").unwrap();
        let res = chunk_split(&g, &dist, uv, &r("2"), &r("10"), 3, Direction::First).unwrap();
        assert!(res.repelled_bottleneck > r("76"));
        let ctx = EdgeContext::new(&g, &dist, uv);
        assert!(ctx.bottleneck(&res.chunking.chunks, &r("2")) <= r("76"));
        for c in &res.candidates {
            assert!(split_postconditions_hold(c, Direction::First));
            assert_eq!(c.chunks.iter().sum::<Rat>(), r("14"));
        }
    }

    fn grid_split_best(g: &TaskGraph, dist: &DistanceMap, e: EdgeId, bt: &Rat, br: &Rat, k: usize) -> Option<Rat> {
        let alpha = outside_option(g, dist, e, bt).unwrap();
        GridSpec { d: 24, k }
            .chunkings(&g.edge(e).cost)
            .unwrap()
            .into_iter()
            .filter(|c| chain_perceived(g, dist, e, c, bt).iter().all(|p| p <= &alpha))
            .map(|c| chain_perceived(g, dist, e, &c, br).into_iter().max().unwrap())
            .max()
    }

    #[test]
    fn split_dominates_grid_in_both_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (mut checked, mut refused) = (0, 0);
        for _ in 0..250 {
            let (g, dist, e) = instance(&mut rng);
            let b1 = Rat::frac(rng.gen_range(11..30), 10);
            let b2 = &b1 + Rat::frac(rng.gen_range(1..30), 10);
            let k = rng.gen_range(1..=3);
            for dir in [Direction::First, Direction::Second] {
                let (bt, br) = if dir == Direction::First { (&b1, &b2) } else { (&b2, &b1) };
                match chunk_split(&g, &dist, e, &b1, &b2, k, dir) {
                    Ok(res) => {
                        let alpha = outside_option(&g, &dist, e, bt).unwrap();
                        let ctx = EdgeContext::new(&g, &dist, e);
                        assert!(ctx.bottleneck(&res.chunking.chunks, bt) <= alpha);
                        assert_eq!(res.repelled_bottleneck, ctx.bottleneck(&res.chunking.chunks, br));
                        if let Some(grid) = grid_split_best(&g, &dist, e, bt, br, k) {
                            assert!(res.repelled_bottleneck >= grid, "{} vs grid {}", res.repelled_bottleneck, grid);
                        }
                        checked += 1;
                    }
                    Err(MultiAgentError::TakerRefuses { .. }) => {
                        assert!(grid_split_best(&g, &dist, e, bt, br, k).is_none());
                        refused += 1;
                    }
                    Err(err) => panic!("{err}"),
                }
            }
        }
        assert!(checked > 100 && refused > 10, "{checked} {refused}");
    }

    #[test]
    fn repellence_is_monotone_in_the_repelled_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..150 {
            let (g, dist, e) = instance(&mut rng);
            let b1 = Rat::frac(rng.gen_range(11..25), 10);
            let k = rng.gen_range(1..=3);
            let mut last: Option<Rat> = None;
            for step in 1..6 {
                let b2 = &b1 + Rat::frac(step * 5, 10);
                let Ok(res) = chunk_split(&g, &dist, e, &b1, &b2, k, Direction::First) else { break };
                if let Some(prev) = &last {
                    assert!(&res.repelled_bottleneck >= prev);
                }
                last = Some(res.repelled_bottleneck);
            }
        }
    }

    #[test]
    fn fixture_split_pair_is_compatible() {
        let g = s32();
        let u = g.vertex("u").unwrap();
        let entries = compatible_pairs(&g, u, u, &r("2"), &r("10"), BudgetSpec::local(3)).unwrap();
        let (v, z) = (g.vertex("v").unwrap(), g.vertex("z").unwrap());
        let e = entries.iter().find(|en| en.v == v && en.z == z).expect("(v, z) present");
        assert_eq!(e.case, PairCase::Split);
        assert!(!e.witnesses.is_empty());
        // Both agents default to z; the same pair with v for both is infeasible for b = 10.
        assert!(entries.iter().any(|en| en.v == z && en.z == z && en.chunks == 0));
        assert!(!entries.iter().any(|en| en.v == v && en.z == v));
    }

    #[test]
    fn separate_pairs_are_products() {
        let g = s32();
        let (u, v) = (g.vertex("u").unwrap(), g.vertex("v").unwrap());
        let entries = compatible_pairs(&g, u, v, &r("2"), &r("3"), BudgetSpec::local(3)).unwrap();
        assert!(entries.iter().all(|e| e.case == PairCase::Separate));
        // A_1 at u: z by default, v with 3 chunks. A_2 at v: only t.
        assert_eq!(entries.len(), 2);
    }

    #[test]
    fn equal_biases_double_the_single_agent_plan() {
        let g = s32();
        let p = two_agent_plan(&g, &r("2"), &r("2"), BudgetSpec::local(3)).unwrap();
        assert_eq!(p.predicted_cost, r("148.2"));
        assert_eq!(names(&g, &p.paths[0]), ["u", "v", "t"]);
        assert_eq!(p.paths[0], p.paths[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..25 {
            let g = random_dag(&mut rng, &RandomDagSpec::default());
            let b = Rat::frac(rng.gen_range(11..30), 10);
            let k = rng.gen_range(0..=3);
            let two = two_agent_plan(&g, &b, &b, BudgetSpec::local(k)).unwrap();
            let one = chunk_graph_local(&g, &b, k).unwrap();
            assert_eq!(two.predicted_cost, &one.predicted_cost * Rat::from(2i64));
            let two = two_agent_plan(&g, &b, &b, BudgetSpec::global(k)).unwrap();
            let one = chunk_graph_global(&g, &b, k).unwrap();
            assert_eq!(two.predicted_cost, &one.predicted_cost * Rat::from(2i64));
        }
    }

    #[test]
    fn two_agent_plans_are_followed() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..25 {
            let g = random_dag(&mut rng, &RandomDagSpec::default());
            let b1 = Rat::frac(rng.gen_range(11..25), 10);
            let b2 = &b1 + Rat::frac(rng.gen_range(1..30), 10);
            let k = rng.gen_range(0..=3);
            for budget in [BudgetSpec::local(k), BudgetSpec::global(k)] {
                let p = two_agent_plan(&g, &b1, &b2, budget).unwrap();
                assert!(budget.admits(p.plan.chunkings().map(|c| c.k())));
                let plain = [
                    crate::agent::traverse_plain(&g, &BiasProfile::new(b1.clone()).unwrap()).unwrap().total,
                    crate::agent::traverse_plain(&g, &BiasProfile::new(b2.clone()).unwrap()).unwrap().total,
                ];
                assert!(p.predicted_cost <= &plain[0] + &plain[1]);
            }
        }
    }

    #[test]
    fn shared_path_with_one_agent_is_the_single_agent_plan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let g = random_dag(&mut rng, &RandomDagSpec::default());
            let b = Rat::frac(rng.gen_range(11..30), 10);
            let k = rng.gen_range(0..=4);
            let agents = AgentSet::new(vec![b.clone()]).unwrap();
            let m = m_agent_single_path_plan(&g, &agents, BudgetSpec::local(k)).unwrap();
            let one = chunk_graph_local(&g, &b, k).unwrap();
            assert_eq!((&m.path, &m.path_cost), (&one.path, &one.predicted_cost));
            let m = m_agent_single_path_plan(&g, &agents, BudgetSpec::global(k)).unwrap();
            let one = chunk_graph_global(&g, &b, k).unwrap();
            assert_eq!((&m.path, &m.path_cost), (&one.path, &one.predicted_cost));
            assert_eq!(m.plan.total_chunks(), one.plan.total_chunks());
        }
    }

    #[test]
    fn shared_path_on_fixture() {
        let g = s32();
        let agents = AgentSet::new(vec![r("2"), r("3")]).unwrap();
        let p = m_agent_single_path_plan(&g, &agents, BudgetSpec::local(3)).unwrap();
        // (u, v) is not same-path feasible with 3 chunks, so both stay on z.
        assert_eq!(names(&g, &p.path), ["u", "z", "t"]);
        assert_eq!(p.path_cost, r("76"));
        assert_eq!(p.traces.len(), 2);
    }

    #[test]
    fn shared_path_can_be_impossible() {
        // b = 1.05 goes to w (70.25), b = 2 goes to z (76); nothing can be chunked.
        let g = s32();
        let agents = AgentSet::new(vec![r("1.05"), r("2")]).unwrap();
        let err = m_agent_single_path_plan(&g, &agents, BudgetSpec::local(0)).unwrap_err();
        assert_eq!(err, MultiAgentError::NoSharedPath);
    }

    #[test]
    fn shared_paths_are_followed_by_every_agent() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let mut found = 0;
        for _ in 0..60 {
            let g = random_dag(&mut rng, &RandomDagSpec::default());
            let agents = AgentSet::new(vec![r("1.5"), r("2"), r("3")]).unwrap();
            let k = rng.gen_range(1..=4);
            for budget in [BudgetSpec::local(k), BudgetSpec::global(k)] {
                match m_agent_single_path_plan(&g, &agents, budget) {
                    Ok(p) => {
                        assert!(p.traces.iter().all(|t| t.total == p.path_cost));
                        found += 1;
                    }
                    Err(MultiAgentError::NoSharedPath) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
        assert!(found > 30);
    }
}
