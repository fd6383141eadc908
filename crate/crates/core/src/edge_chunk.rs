//! Single-edge chunking: closed forms, the optimal k-chunking, and exact
//! evaluation of any chunking.
//!
//! For an edge `(u, v)` of cost `x` split into `x_1..x_k`, the agent at chunk
//! vertex `u_i` perceives
//!
//! ```text
//! p(e_i) = b x_i + min(gamma, x_{i+1} + .. + x_k + c(v -> t))   (i < k)
//! p(e_k) = b x_k + c(v -> t)
//! ```
//!
//! where `gamma = min_{w != v} c(u,w) + c(w -> t)` is the best way out of the
//! chain. The agent stays on the chain iff every `p(e_i)` is at most its
//! perceived cost of leaving.

use serde::Serialize;
use thiserror::Error;

use crate::chunked::{Chunking, PlanError};
use crate::graph::{DistanceMap, EdgeId, TaskGraph};
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EdgeChunkError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("edge {0} is the only way out of its tail")]
    NoAlternative(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

fn check_bias(b: &Rat) -> Result<(), EdgeChunkError> {
    if b <= &Rat::one() {
        return Err(EdgeChunkError::InvalidParams(format!("bias {b} must exceed 1")));
    }
    Ok(())
}

fn check_k(k: usize) -> Result<(), EdgeChunkError> {
    if k == 0 {
        return Err(EdgeChunkError::InvalidParams("k must be at least 1".into()));
    }
    Ok(())
}

/// The quantities of `g` that matter for chunking one edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeContext {
    pub edge: EdgeId,
    pub x: Rat,
    /// `c(v -> t)`.
    pub cv: Rat,
    /// Cheapest true cost of leaving through another out-edge of `u`.
    pub gamma: Option<Rat>,
}

impl EdgeContext {
    pub fn new(g: &TaskGraph, dist: &DistanceMap, e: EdgeId) -> Self {
        let edge = g.edge(e);
        let gamma = g
            .out_edges(edge.from)
            .iter()
            .filter(|&&o| o != e)
            .filter_map(|&o| {
                let other = g.edge(o);
                dist.get(other.to).map(|d| &other.cost + d)
            })
            .min();
        EdgeContext {
            edge: e,
            x: edge.cost.clone(),
            cv: dist.to_sink(edge.to).clone(),
            gamma,
        }
    }

    /// `x + c(v -> t) - gamma`; `None` without an alternative.
    pub fn delta(&self) -> Option<Rat> {
        self.gamma.as_ref().map(|g| &self.x + &self.cv - g)
    }

    /// True cost to the sink from chunk vertex `u_i` given the mass `rest`
    /// still ahead on the chain.
    fn onward(&self, rest: &Rat) -> Rat {
        let via_chain = rest + &self.cv;
        match &self.gamma {
            Some(g) if g < &via_chain => g.clone(),
            _ => via_chain,
        }
    }

    /// `p(e_i)` for every chunk.
    pub fn perceived(&self, chunks: &[Rat], b: &Rat) -> Vec<Rat> {
        let mut rest: Rat = chunks.iter().sum();
        let k = chunks.len();
        chunks
            .iter()
            .enumerate()
            .map(|(i, xi)| {
                rest -= xi;
                let tail = if i + 1 == k { self.cv.clone() } else { self.onward(&rest) };
                b * xi + tail
            })
            .collect()
    }

    pub fn bottleneck(&self, chunks: &[Rat], b: &Rat) -> Rat {
        self.perceived(chunks, b).into_iter().max().expect("k >= 1")
    }

    /// Leading chunk vertices whose shortest route leaves through the
    /// alternative; an exact tie counts as staying on the chain.
    pub fn tau(&self, chunks: &[Rat]) -> usize {
        let Some(delta) = self.delta() else { return 0 };
        let mut prefix = Rat::zero();
        let mut tau = 0;
        for xi in chunks {
            if prefix >= delta {
                break;
            }
            tau += 1;
            prefix += xi;
        }
        tau
    }

    pub fn report(&self, chunks: &[Rat], b: &Rat) -> ChunkingReport {
        let perceived = self.perceived(chunks, b);
        let bottleneck = perceived.iter().max().expect("k >= 1").clone();
        let selective_bias = if self.x.is_zero() {
            Rat::one()
        } else {
            (&bottleneck - &self.cv) / &self.x
        };
        ChunkingReport {
            tau: self.tau(chunks),
            delta: self.delta(),
            perceived,
            bottleneck,
            selective_bias,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChunkingReport {
    pub perceived: Vec<Rat>,
    pub tau: usize,
    pub bottleneck: Rat,
    /// `None` when the tail has no other out-edge.
    pub delta: Option<Rat>,
    pub selective_bias: Rat,
}

/// The equalizing chunking of a shortest-path edge.
pub fn chunk_shortest_edge(x: &Rat, b: &Rat, k: usize) -> Result<Vec<Rat>, EdgeChunkError> {
    check_bias(b)?;
    check_k(k)?;
    if x.is_negative() {
        return Err(EdgeChunkError::InvalidParams(format!("cost {x} is negative")));
    }
    Ok(shortest_edge_chunks(x, b, k))
}

fn shortest_edge_chunks(x: &Rat, b: &Rat, k: usize) -> Vec<Rat> {
    let bm1 = b - Rat::one();
    let k32 = k as u32;
    let denom = b.pow(k32) - bm1.pow(k32);
    // x_1 = (b-1)^(k-1) x / denom, then each chunk is b/(b-1) times the last.
    let mut chunk = bm1.pow(k32 - 1) * x / &denom;
    let mut out = Vec::with_capacity(k);
    for _ in 1..k {
        let next = &chunk * b / &bm1;
        out.push(std::mem::replace(&mut chunk, next));
    }
    out.push(chunk);
    out
}

/// `1 / (1 - ((b-1)/b)^k)`.
pub fn selective_bias_closed_form(b: &Rat, k: usize) -> Result<Rat, EdgeChunkError> {
    check_bias(b)?;
    check_k(k)?;
    Ok(b_min(b, k))
}

pub(crate) fn b_min(b: &Rat, k: usize) -> Rat {
    let ratio = (b - Rat::one()) / b;
    (Rat::one() - ratio.pow(k as u32))
        .recip()
        .expect("ratio is below 1")
}

pub fn evaluate_chunking(
    g: &TaskGraph,
    dist: &DistanceMap,
    chunking: &Chunking,
    b: &Rat,
) -> Result<ChunkingReport, EdgeChunkError> {
    chunking.check(g)?;
    Ok(EdgeContext::new(g, dist, chunking.edge).report(&chunking.chunks, b))
}

pub fn delta(g: &TaskGraph, dist: &DistanceMap, e: EdgeId) -> Result<Rat, EdgeChunkError> {
    EdgeContext::new(g, dist, e)
        .delta()
        .ok_or_else(|| EdgeChunkError::NoAlternative(g.edge_label(e)))
}

/// `k - 1` copies of `y` followed by the remainder.
fn uniform_head(x: &Rat, y: &Rat, k: usize) -> Vec<Rat> {
    let mut chunks = vec![y.clone(); k - 1];
    chunks.push(x - y * Rat::from(k - 1));
    chunks
}

/// One member of the candidate set, before its chunks are written out.
#[derive(Clone, Debug)]
enum Shape {
    /// The equalizing chunking of all of `x`.
    Equalizing,
    /// `tau` chunks of `delta / tau`, then the rest equalized.
    Split(usize),
    /// `tau - 1` chunks of `y`, then the rest equalized.
    Modified(usize, Rat),
    /// `k - 1` chunks of `y`, then the remainder.
    Head(Rat),
}

/// The candidate set with each member's bottleneck, in closed form.
///
/// Every head chunk below the transition sees `gamma` ahead, so its perceived
/// cost is `b y + gamma`. An equalized tail of mass `r` over `m` chunks peaks
/// at its last chunk, `b_min(m) r + c_v`.
fn shapes(ctx: &EdgeContext, b: &Rat, k: usize) -> Vec<(Shape, Rat)> {
    let x = &ctx.x;
    let cv = &ctx.cv;
    // bmin[m] = b_min(b, m), built incrementally.
    let ratio = (b - Rat::one()) / b;
    let mut bmin = vec![Rat::zero()];
    let mut pw = Rat::one();
    for _ in 1..=k {
        pw = &pw * &ratio;
        bmin.push((Rat::one() - &pw).recip().expect("ratio is below 1"));
    }
    let tail = |r: &Rat, m: usize| &bmin[m] * r + cv;
    let mut out = vec![(Shape::Equalizing, tail(x, k))];
    let (Some(gamma), Some(delta)) = (ctx.gamma.as_ref(), ctx.delta().filter(Rat::is_positive)) else {
        return out;
    };
    if k == 1 {
        out.push((Shape::Head(Rat::zero()), b * x + cv));
        return out;
    }
    let head = |y: &Rat| b * y + gamma;
    let bm1 = b - Rat::one();
    let kr = Rat::from(k);
    let km1 = Rat::from(k - 1);
    let balance = (&delta + &bm1 * x) / (b * &kr);
    let head_shape = |y: Rat| {
        let last = b * (x - &y * &km1) + cv;
        let cost = head(&y).max(last);
        (Shape::Head(y), cost)
    };
    if &delta > x {
        out.push(head_shape(balance.min(x / &km1)));
        return out;
    }
    for tau in 1..k {
        let t = Rat::from(tau);
        out.push((Shape::Split(tau), head(&(&delta / &t)).max(tail(&(x - &delta), k - tau))));
        if tau > 1 {
            let tm1 = Rat::from(tau - 1);
            let z = Rat::one() - (&bm1 / b).pow((k - tau + 1) as u32);
            let y_star = (&delta * &z + (Rat::one() - &z) * x) / (&tm1 + &z * b);
            let y = y_star.min(&delta / &tm1);
            let cost = head(&y).max(tail(&(x - &y * &tm1), k - tau + 1));
            out.push((Shape::Modified(tau, y), cost));
        }
    }
    out.push(head_shape(balance.min(&delta / &km1).min(x / &km1)));
    out
}

fn materialize(ctx: &EdgeContext, b: &Rat, k: usize, shape: &Shape) -> Vec<Rat> {
    let x = &ctx.x;
    match shape {
        Shape::Equalizing => shortest_edge_chunks(x, b, k),
        Shape::Split(tau) => {
            let delta = ctx.delta().expect("split shapes need an alternative");
            let mut chunks = vec![&delta / Rat::from(*tau); *tau];
            chunks.extend(shortest_edge_chunks(&(x - &delta), b, k - tau));
            chunks
        }
        Shape::Modified(tau, y) => {
            let mut chunks = vec![y.clone(); tau - 1];
            chunks.extend(shortest_edge_chunks(&(x - y * Rat::from(tau - 1)), b, k - tau + 1));
            chunks
        }
        Shape::Head(y) if k == 1 => {
            debug_assert!(y.is_zero());
            vec![x.clone()]
        }
        Shape::Head(y) => uniform_head(x, y, k),
    }
}

/// All candidate chunkings for the optimal k-chunking; each is a valid
/// chunking of `ctx.x`.
pub fn candidates(ctx: &EdgeContext, b: &Rat, k: usize) -> Vec<Vec<Rat>> {
    shapes(ctx, b, k).iter().map(|(s, _)| materialize(ctx, b, k, s)).collect()
}

/// Minimum-bottleneck k-chunking of `e`.
///
/// Ties between equally good candidates go to the smaller transition index,
/// then to the lexicographically smaller vector.
pub fn optimal_edge_chunking(
    g: &TaskGraph,
    dist: &DistanceMap,
    e: EdgeId,
    b: &Rat,
    k: usize,
) -> Result<(Chunking, ChunkingReport), EdgeChunkError> {
    check_bias(b)?;
    check_k(k)?;
    let ctx = EdgeContext::new(g, dist, e);
    let (chunks, report) = optimal_in(&ctx, b, k);
    Ok((Chunking::new(e, chunks), report))
}

pub(crate) fn optimal_in(ctx: &EdgeContext, b: &Rat, k: usize) -> (Vec<Rat>, ChunkingReport) {
    // Only the candidates attaining the least bottleneck are written out.
    let shapes = shapes(ctx, b, k);
    let least = shapes.iter().map(|(_, cost)| cost).min().expect("candidate set is never empty");
    shapes
        .iter()
        .filter(|(_, cost)| cost == least)
        .map(|(s, cost)| {
            let c = materialize(ctx, b, k, s);
            debug_assert!(c.iter().all(|xi| !xi.is_negative()));
            debug_assert_eq!(c.iter().sum::<Rat>(), ctx.x);
            let r = ctx.report(&c, b);
            debug_assert_eq!(&r.bottleneck, cost);
            (c, r)
        })
        .min_by(|(ca, ra), (cb, rb)| (ra.tau, ca).cmp(&(rb.tau, cb)))
        .expect("some candidate attains the least bottleneck")
}

/// Least `l <= k_max` whose optimal l-chunking has bottleneck at most
/// `target`, by binary search over the non-increasing optimal bottleneck.
pub fn min_chunks_to_beat(
    g: &TaskGraph,
    dist: &DistanceMap,
    e: EdgeId,
    b: &Rat,
    target: &Rat,
    k_max: usize,
) -> Result<Option<usize>, EdgeChunkError> {
    check_bias(b)?;
    check_k(k_max)?;
    let ctx = EdgeContext::new(g, dist, e);
    Ok(min_chunks_in(&ctx, b, target, k_max))
}

pub(crate) fn min_chunks_in(ctx: &EdgeContext, b: &Rat, target: &Rat, k_max: usize) -> Option<usize> {
    let beats = |l: usize| &optimal_in(ctx, b, l).1.bottleneck <= target;
    if !beats(k_max) {
        return None;
    }
    let (mut lo, mut hi) = (1, k_max);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if beats(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}
