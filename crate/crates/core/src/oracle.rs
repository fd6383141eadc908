//! Brute-force verifiers and the cost-ratio experiments.
//!
//! The enumerators here share no code with the optimizers they check: chunk
//! chains are evaluated by walking an explicit list of chunk vertices, and
//! graph plans are validated only by simulating the agent.

use std::env;

use serde::Serialize;
use thiserror::Error;

use crate::agent::{traverse, traverse_from, BiasProfile};
use crate::chunked::{ChunkPlan, Chunking, ChunkedGraph};
use crate::agent::cost_ratio_with;
use crate::edge_chunk::{b_min, chunk_shortest_edge, selective_bias_closed_form};
use crate::graph::{make_n_fan, FanSpec};
use crate::graph::{shortest_to_sink, DistanceMap, EdgeId, TaskGraph, VertexId};
use crate::graph_chunk::BudgetSpec;
use crate::rat::Rat;

pub const DEFAULT_MAX_ENUM: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("grid enumeration of {size} points exceeds the cap of {cap}")]
    GridTooLarge { size: u64, cap: u64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Cap on enumeration size, read from `CHUNKWISE_MAX_ENUM`.
pub fn max_enum() -> u64 {
    env::var("CHUNKWISE_MAX_ENUM")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_ENUM)
}

/// Chunk costs restricted to multiples of `x / d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub d: u64,
    pub k: usize,
}

impl GridSpec {
    /// Number of compositions of `d` into `k` ordered nonnegative parts.
    pub fn size(&self) -> u64 {
        binomial(self.d + self.k as u64 - 1, self.k as u64 - 1)
    }

    fn check(&self) -> Result<(), OracleError> {
        if self.d == 0 || self.k == 0 {
            return Err(OracleError::InvalidGrid(format!("d={} k={}", self.d, self.k)));
        }
        let (size, cap) = (self.size(), max_enum());
        if size > cap {
            return Err(OracleError::GridTooLarge { size, cap });
        }
        Ok(())
    }

    /// All grid chunkings of `x`, in lexicographic order of the parts.
    pub fn chunkings(&self, x: &Rat) -> Result<Vec<Vec<Rat>>, OracleError> {
        self.check()?;
        let unit = x / Rat::from(self.d as usize);
        let mut out = Vec::new();
        let mut parts = vec![0u64; self.k];
        compositions(self.d, 0, &mut parts, &mut |p| {
            out.push(p.iter().map(|&n| &unit * Rat::from(n as usize)).collect());
        });
        Ok(out)
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn compositions(left: u64, pos: usize, parts: &mut [u64], f: &mut impl FnMut(&[u64])) {
    if pos + 1 == parts.len() {
        parts[pos] = left;
        f(parts);
        return;
    }
    for n in 0..=left {
        parts[pos] = n;
        compositions(left - n, pos + 1, parts, f);
    }
}

/// Independent chain evaluator: perceived cost of each chunk edge, obtained
/// by listing every chunk vertex's exits explicitly.
pub fn chain_perceived(g: &TaskGraph, dist: &DistanceMap, e: EdgeId, chunks: &[Rat], b: &Rat) -> Vec<Rat> {
    let edge = g.edge(e);
    let exits: Vec<Rat> = g
        .out_edges(edge.from)
        .iter()
        .filter(|&&o| o != e)
        .filter_map(|&o| dist.get(g.edge(o).to).map(|d| &g.edge(o).cost + d))
        .collect();
    let k = chunks.len();
    (0..k)
        .map(|i| {
            let along: Rat = chunks[i + 1..].iter().sum::<Rat>() + dist.to_sink(edge.to);
            let mut next = along;
            if i + 1 < k {
                for ex in &exits {
                    if ex < &next {
                        next = ex.clone();
                    }
                }
            }
            b * &chunks[i] + next
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GridBest {
    pub chunks: Vec<Rat>,
    pub bottleneck: Rat,
}

/// Minimum bottleneck over all grid chunkings; first in lexicographic order
/// wins ties.
pub fn brute_force_edge_chunking(
    g: &TaskGraph,
    dist: &DistanceMap,
    e: EdgeId,
    b: &Rat,
    grid: GridSpec,
) -> Result<GridBest, OracleError> {
    let mut best: Option<GridBest> = None;
    for chunks in grid.chunkings(&g.edge(e).cost)? {
        let bottleneck = chain_perceived(g, dist, e, &chunks, b).into_iter().max().expect("k >= 1");
        if best.as_ref().is_none_or(|cur| bottleneck < cur.bottleneck) {
            best = Some(GridBest { chunks, bottleneck });
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// All source-to-sink paths as edge lists, in head-id order.
pub fn all_paths(g: &TaskGraph) -> Vec<Vec<EdgeId>> {
    fn walk(g: &TaskGraph, v: VertexId, cur: &mut Vec<EdgeId>, out: &mut Vec<Vec<EdgeId>>) {
        if v == g.sink() {
            out.push(cur.clone());
            return;
        }
        for &e in g.out_edges(v) {
            cur.push(e);
            walk(g, g.edge(e).to, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    walk(g, g.source(), &mut Vec::new(), &mut out);
    out
}

/// Chunkings tried for `e` with `j` chunks: the grid of resolution `d` plus
/// a backward max-fill against `cap`, the perceived cost of leaving.
fn witnesses(g: &TaskGraph, dist: &DistanceMap, e: EdgeId, j: usize, b: &Rat, cap: Option<&Rat>, d: u64) -> Result<Vec<Vec<Rat>>, OracleError> {
    let mut out = GridSpec { d, k: j }.chunkings(&g.edge(e).cost)?;
    if let Some(cap) = cap {
        if let Some(fill) = max_fill(g, dist, e, j, &[(b.clone(), cap.clone())]) {
            out.push(fill);
        }
    }
    Ok(out)
}

/// Fills chunks from the last one backwards, each as large as every
/// `(bias, cap)` pair allows; `None` if some chunk would have to be negative
/// or the edge's cost does not fit.
pub fn max_fill(g: &TaskGraph, dist: &DistanceMap, e: EdgeId, j: usize, caps: &[(Rat, Rat)]) -> Option<Vec<Rat>> {
    let edge = g.edge(e);
    let cv = dist.to_sink(edge.to);
    let exit = g
        .out_edges(edge.from)
        .iter()
        .filter(|&&o| o != e)
        .filter_map(|&o| dist.get(g.edge(o).to).map(|dd| &g.edge(o).cost + dd))
        .min();
    let mut chunks = vec![Rat::zero(); j];
    let mut placed = Rat::zero();
    for i in (0..j).rev() {
        let along = &placed + cv;
        let tail = match &exit {
            Some(x) if i + 1 < j && x < &along => x.clone(),
            _ => along,
        };
        let room = caps
            .iter()
            .map(|(b, cap)| (cap - &tail) / b)
            .min()
            .expect("at least one cap");
        if room.is_negative() {
            return None;
        }
        let left = &edge.cost - &placed;
        if room >= left {
            chunks[i] = left;
            return Some(chunks);
        }
        placed += &room;
        chunks[i] = room;
    }
    None
}

/// Cheapest outcome found by exhaustive search, with its plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleOutcome {
    pub cost: Rat,
    pub path: Vec<VertexId>,
    pub plan: ChunkPlan,
}

/// Fewest chunks (0 = unchunked) and a witness chunking with which an agent
/// standing at the tail of `e` crosses `e`, checked by simulation.
fn persuade_edge(
    g: &TaskGraph,
    dist: &DistanceMap,
    profile: &BiasProfile,
    e: EdgeId,
    j_max: usize,
    d: u64,
) -> Result<Option<(usize, Option<Chunking>)>, OracleError> {
    let edge = g.edge(e);
    let crosses = |plan: &ChunkPlan| {
        let cg = ChunkedGraph::new(g, plan);
        traverse_from(&cg, profile, edge.from.0)
            .map(|t| t.original_path(&cg).get(1) == Some(&edge.to))
            .unwrap_or(false)
    };
    if crosses(&ChunkPlan::new()) {
        return Ok(Some((0, None)));
    }
    let b = profile.default_bias();
    let cap = g
        .out_edges(edge.from)
        .iter()
        .filter(|&&o| o != e)
        .filter_map(|&o| dist.get(g.edge(o).to).map(|dd| b * &g.edge(o).cost + dd))
        .min();
    for j in 1..=j_max {
        for chunks in witnesses(g, dist, e, j, b, cap.as_ref(), d)? {
            let c = Chunking::new(e, chunks);
            let mut plan = ChunkPlan::new();
            plan.insert(c.clone());
            if crosses(&plan) {
                return Ok(Some((j, Some(c))));
            }
        }
    }
    Ok(None)
}

/// Exhaustive single-agent planner: every path, every per-edge chunk count
/// allowed by the budget, witnesses from a grid of resolution `d` and a
/// backward max-fill; each candidate plan is validated by simulation.
pub fn brute_force_graph_plan(
    g: &TaskGraph,
    b: &Rat,
    budget: BudgetSpec,
    d: u64,
) -> Result<OracleOutcome, OracleError> {
    let dist = shortest_to_sink(g).map_err(|e| OracleError::InvalidGrid(e.to_string()))?;
    let profile = BiasProfile::new(b.clone()).map_err(|e| OracleError::InvalidGrid(e.to_string()))?;
    let mut per_edge = Vec::with_capacity(g.edge_count());
    for e in g.edge_ids() {
        per_edge.push(persuade_edge(g, &dist, &profile, e, budget.k, d)?);
    }
    let mut best: Option<OracleOutcome> = None;
    for path in all_paths(g) {
        let Some(needs) = path.iter().map(|e| per_edge[e.0].clone()).collect::<Option<Vec<_>>>() else {
            continue;
        };
        if !budget.admits(needs.iter().map(|(j, _)| *j)) {
            continue;
        }
        let mut plan = ChunkPlan::new();
        for (_, c) in needs.into_iter() {
            if let Some(c) = c {
                plan.insert(c);
            }
        }
        let cg = ChunkedGraph::new(g, &plan);
        let Ok(trace) = traverse(&cg, &profile) else { continue };
        let mut vertices = vec![g.source()];
        vertices.extend(path.iter().map(|&e| g.edge(e).to));
        if trace.original_path(&cg) != vertices {
            continue;
        }
        if best.as_ref().is_none_or(|cur| trace.total < cur.cost) {
            best = Some(OracleOutcome {
                cost: trace.total,
                path: vertices,
                plan,
            });
        }
    }
    Ok(best.expect("the default path is always found"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoAgentOutcome {
    pub cost: Rat,
    pub paths: [Vec<VertexId>; 2],
    pub plan: ChunkPlan,
}

/// Witness chunkings of `e` with `j` chunks for the given `(bias, cap)`
/// pairs: the grid, a max-fill per agent, and a joint max-fill.
fn pair_witnesses(g: &TaskGraph, dist: &DistanceMap, e: EdgeId, j: usize, caps: &[(Rat, Rat)], d: u64) -> Result<Vec<Vec<Rat>>, OracleError> {
    let mut out = GridSpec { d, k: j }.chunkings(&g.edge(e).cost)?;
    let mut fills: Vec<Vec<(Rat, Rat)>> = caps.iter().map(|c| vec![c.clone()]).collect();
    fills.push(caps.to_vec());
    for f in fills {
        if let Some(fill) = max_fill(g, dist, e, j, &f) {
            if !out.contains(&fill) {
                out.push(fill);
            }
        }
    }
    Ok(out)
}

/// Fewest chunks spent at `u` (and the witnesses) so that each agent standing
/// at `u` leaves along its designated edge; `wants[i] = None` means agent `i`
/// never visits `u`.
fn decide_vertex(
    g: &TaskGraph,
    dist: &DistanceMap,
    profiles: &[BiasProfile; 2],
    u: VertexId,
    wants: [Option<EdgeId>; 2],
    budget: BudgetSpec,
    d: u64,
) -> Result<Option<(usize, Vec<Chunking>)>, OracleError> {
    let visitors: Vec<usize> = (0..2).filter(|&i| wants[i].is_some()).collect();
    let follows = |plan: &ChunkPlan| {
        let cg = ChunkedGraph::new(g, plan);
        visitors.iter().all(|&i| {
            let e = wants[i].expect("visitor");
            // Leaving `u` directly along `e`, not via a detour through another chain.
            traverse_from(&cg, &profiles[i], u.0)
                .map(|t| t.original_path(&cg).get(1) == Some(&g.edge(e).to) && t.steps[0].origin == e)
                .unwrap_or(false)
        })
    };
    let mut edges: Vec<EdgeId> = visitors.iter().map(|&i| wants[i].expect("visitor")).collect();
    edges.dedup();
    let caps_for = |e: EdgeId| -> Vec<(Rat, Rat)> {
        profiles
            .iter()
            .filter_map(|p| {
                let b = p.default_bias();
                g.out_edges(u)
                    .iter()
                    .filter(|&&o| o != e)
                    .filter_map(|&o| dist.get(g.edge(o).to).map(|dd| b * &g.edge(o).cost + dd))
                    .min()
                    .map(|cap| (b.clone(), cap))
            })
            .collect()
    };
    let per_edge_max = budget.k;
    let max_total = per_edge_max * edges.len();
    for total in 0..=max_total {
        if budget.mode == crate::graph_chunk::BudgetMode::Global && total > budget.k {
            break;
        }
        let splits: Vec<Vec<usize>> = if edges.len() == 1 {
            vec![vec![total]]
        } else {
            (0..=total).map(|j| vec![j, total - j]).collect()
        };
        for counts in splits {
            if counts.iter().any(|&j| j > per_edge_max) {
                continue;
            }
            let mut options: Vec<Vec<Option<Chunking>>> = Vec::new();
            for (&e, &j) in edges.iter().zip(&counts) {
                if j == 0 {
                    options.push(vec![None]);
                } else {
                    let ws = pair_witnesses(g, dist, e, j, &caps_for(e), d)?;
                    options.push(ws.into_iter().map(|c| Some(Chunking::new(e, c))).collect());
                }
            }
            let second = options.get(1).cloned().unwrap_or_else(|| vec![None]);
            for a in &options[0] {
                for b in &second {
                    let mut plan = ChunkPlan::new();
                    let chosen: Vec<Chunking> = a.iter().chain(b.iter()).cloned().collect();
                    for c in &chosen {
                        plan.insert(c.clone());
                    }
                    if follows(&plan) {
                        return Ok(Some((total, chosen)));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Exhaustive two-agent planner: every pair of paths, and at every visited
/// vertex the fewest chunks among grid and max-fill witnesses that send each
/// visiting agent along its path. Plans are validated by simulating both
/// agents from the source.
pub fn brute_force_two_agent_plan(
    g: &TaskGraph,
    b1: &Rat,
    b2: &Rat,
    budget: BudgetSpec,
    d: u64,
) -> Result<TwoAgentOutcome, OracleError> {
    let invalid = |e: String| OracleError::InvalidGrid(e);
    let dist = shortest_to_sink(g).map_err(|e| invalid(e.to_string()))?;
    let profiles = [
        BiasProfile::new(b1.clone()).map_err(|e| invalid(e.to_string()))?,
        BiasProfile::new(b2.clone()).map_err(|e| invalid(e.to_string()))?,
    ];
    let paths = all_paths(g);
    let mut memo: std::collections::BTreeMap<(VertexId, [Option<EdgeId>; 2]), Option<(usize, Vec<Chunking>)>> =
        Default::default();
    let mut best: Option<TwoAgentOutcome> = None;
    for p in &paths {
        for q in &paths {
            let mut wants: std::collections::BTreeMap<VertexId, [Option<EdgeId>; 2]> = Default::default();
            for (i, path) in [p, q].into_iter().enumerate() {
                for &e in path {
                    wants.entry(g.edge(e).from).or_default()[i] = Some(e);
                }
            }
            let mut plan = ChunkPlan::new();
            let mut spent = 0;
            let mut ok = true;
            for (u, w) in wants {
                let key = (u, w);
                if !memo.contains_key(&key) {
                    let found = decide_vertex(g, &dist, &profiles, u, w, budget, d)?;
                    memo.insert(key, found);
                }
                match &memo[&key] {
                    Some((j, cs)) => {
                        spent += j;
                        for c in cs {
                            plan.insert(c.clone());
                        }
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok || (budget.mode == crate::graph_chunk::BudgetMode::Global && spent > budget.k) {
                continue;
            }
            let cg = ChunkedGraph::new(g, &plan);
            let mut cost = Rat::zero();
            let mut got = Vec::new();
            for (i, path) in [p, q].into_iter().enumerate() {
                let Ok(trace) = traverse(&cg, &profiles[i]) else {
                    ok = false;
                    break;
                };
                let mut vertices = vec![g.source()];
                vertices.extend(path.iter().map(|&e| g.edge(e).to));
                if trace.original_path(&cg) != vertices {
                    ok = false;
                    break;
                }
                cost += &trace.total;
                got.push(vertices);
            }
            if !ok {
                continue;
            }
            if best.as_ref().is_none_or(|cur| cost < cur.cost) {
                let q_path = got.pop().expect("two paths");
                let p_path = got.pop().expect("two paths");
                best = Some(TwoAgentOutcome { cost, paths: [p_path, q_path], plan });
            }
        }
    }
    Ok(best.expect("the default paths are always found"))
}

/// Every positive-cost edge of `g` chunked with the equalizing k-chunking.
pub fn chunk_every_edge(g: &TaskGraph, b: &Rat, k: usize) -> ChunkPlan {
    let mut plan = ChunkPlan::new();
    for e in g.edge_ids() {
        let x = &g.edge(e).cost;
        if x.is_positive() {
            let chunks = chunk_shortest_edge(x, b, k).expect("valid parameters");
            plan.insert(Chunking::new(e, chunks));
        }
    }
    plan
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub b: Rat,
    pub c: Rat,
    pub k: usize,
    pub predicted: Rat,
    pub simulated: Rat,
    pub b_min: Rat,
    pub bound: Rat,
}

/// Fans of size `n` for each `n` in `ns`, every exit chunked into `k`
/// equalizing chunks. Predicted ratio: `c^n` when `c < b_min`, else 1.
pub fn cost_ratio_curve(b: &Rat, c: &Rat, ns: impl IntoIterator<Item = usize>, k: usize) -> Result<Vec<ExperimentRow>, OracleError> {
    let invalid = |e: String| OracleError::InvalidGrid(e);
    let bm = selective_bias_closed_form(b, k).map_err(|e| invalid(e.to_string()))?;
    let profile = BiasProfile::new(b.clone()).map_err(|e| invalid(e.to_string()))?;
    let mut rows = Vec::new();
    for n in ns {
        let g = make_n_fan(&FanSpec { n, c: c.clone() }).map_err(|e| invalid(e.to_string()))?;
        let plan = chunk_every_edge(&g, b, k);
        let simulated = cost_ratio_with(&g, &plan, &profile).map_err(|e| invalid(e.to_string()))?;
        let predicted = if c < &bm { c.pow(n as u32) } else { Rat::one() };
        rows.push(ExperimentRow {
            n,
            b: b.clone(),
            c: c.clone(),
            k,
            predicted,
            simulated,
            bound: bm.pow(n as u32),
            b_min: bm.clone(),
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "n,b,c,k,ratio_num,ratio_den,bound_num,bound_den";

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.b,
            r.c,
            r.k,
            r.simulated.numer(),
            r.simulated.denom(),
            r.bound.numer(),
            r.bound.denom()
        ));
    }
    out
}

/// Least `k` with `b_min(b, k)^n <= c`, decided exactly.
pub fn chunks_for_constant_ratio(b: &Rat, c: &Rat, n: usize) -> Result<usize, OracleError> {
    if b <= &Rat::one() || c <= &Rat::one() || n == 0 {
        return Err(OracleError::InvalidGrid(format!("need b > 1, c > 1, n >= 1; got b={b} c={c} n={n}")));
    }
    let ok = |k: usize| b_min(b, k).pow(n as u32) <= *c;
    // Start from the real-valued solution and correct by exact checks.
    let (bf, cf) = (b.to_f64(), c.to_f64());
    let root = cf.powf(1.0 / n as f64);
    let guess = ((root / (root - 1.0)).ln() / (bf / (bf - 1.0)).ln()).ceil();
    let mut k = if guess.is_finite() && guess >= 1.0 { guess as usize } else { 1 };
    while !ok(k) {
        k += 1;
    }
    while k > 1 && ok(k - 1) {
        k -= 1;
    }
    Ok(k)
}

/// The real-valued solution `log(r/(r-1)) / log(b/(b-1))` with `r = c^(1/n)`.
pub fn chunks_closed_form(b: f64, c: f64, n: usize) -> f64 {
    let root = c.powf(1.0 / n as f64);
    (root / (root - 1.0)).ln() / (b / (b - 1.0)).ln()
}

// ---------------------------------------------------------------------------
// Seeded verification suites, as run by the command line.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    EdgeOracle,
    GraphOracle,
    SamePath,
    Split,
    TwoAgent,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::EdgeOracle, Suite::GraphOracle, Suite::SamePath, Suite::Split, Suite::TwoAgent];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Largest chunk count tried.
    pub k: usize,
    /// Grid resolution for single-edge checks.
    pub d: u64,
    pub instances: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub instances: usize,
    pub violations: Vec<String>,
}

/// Grid resolution for whole-graph searches, which enumerate many edges.
const GRAPH_D: u64 = 6;

fn random_edge<R: rand::Rng>(rng: &mut R) -> (TaskGraph, DistanceMap, EdgeId) {
    loop {
        let g = crate::graph::random_dag(rng, &crate::graph::RandomDagSpec::default());
        let dist = shortest_to_sink(&g).expect("generated graphs reach the sink");
        let cands: Vec<EdgeId> = g
            .edge_ids()
            .filter(|&e| g.out_edges(g.edge(e).from).iter().any(|&o| o != e && dist.get(g.edge(o).to).is_some()))
            .collect();
        if !cands.is_empty() {
            let e = cands[rng.gen_range(0..cands.len())];
            return (g, dist, e);
        }
    }
}

fn random_bias<R: rand::Rng>(rng: &mut R) -> Rat {
    Rat::frac(rng.gen_range(11..40), 10)
}

pub fn run_suite(suite: Suite, cfg: SuiteConfig) -> Result<SuiteReport, OracleError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let k_max = cfg.k.max(1);
    let mut violations = Vec::new();
    for n in 0..cfg.instances {
        match suite {
            Suite::EdgeOracle => {
                let (g, dist, e) = random_edge(&mut rng);
                let b = random_bias(&mut rng);
                let k = rng.gen_range(1..=k_max);
                let (c, rep) = crate::edge_chunk::optimal_edge_chunking(&g, &dist, e, &b, k)
                    .map_err(|e| OracleError::InvalidGrid(e.to_string()))?;
                let grid = brute_force_edge_chunking(&g, &dist, e, &b, GridSpec { d: cfg.d, k })?;
                let exact = chain_perceived(&g, &dist, e, &c.chunks, &b).into_iter().max().expect("k >= 1");
                if rep.bottleneck > grid.bottleneck || exact != rep.bottleneck {
                    violations.push(format!("instance {n}: bottleneck {} vs grid {}", rep.bottleneck, grid.bottleneck));
                }
            }
            Suite::GraphOracle => {
                let g = crate::graph::random_dag(&mut rng, &crate::graph::RandomDagSpec::default());
                let b = random_bias(&mut rng);
                let k = rng.gen_range(0..=k_max);
                for budget in [BudgetSpec::local(k), BudgetSpec::global(k)] {
                    let plan = match budget.mode {
                        crate::graph_chunk::BudgetMode::Local => crate::graph_chunk::chunk_graph_local(&g, &b, k),
                        crate::graph_chunk::BudgetMode::Global => crate::graph_chunk::chunk_graph_global(&g, &b, k),
                    };
                    let oracle = brute_force_graph_plan(&g, &b, budget, GRAPH_D)?;
                    match plan {
                        Ok(p) if p.predicted_cost == oracle.cost => {}
                        Ok(p) => violations.push(format!("instance {n} {budget:?}: {} vs oracle {}", p.predicted_cost, oracle.cost)),
                        Err(e) => violations.push(format!("instance {n} {budget:?}: {e}")),
                    }
                }
            }
            Suite::SamePath => {
                let (g, dist, e) = random_edge(&mut rng);
                let b1 = random_bias(&mut rng);
                let b2 = &b1 + Rat::frac(rng.gen_range(1..20), 10);
                let k = rng.gen_range(1..=k_max.min(3));
                let agents = crate::multi_agent::AgentSet::new(vec![b1, b2]).expect("increasing");
                let caps: Vec<(Rat, Rat)> = agents
                    .biases()
                    .iter()
                    .filter_map(|b| {
                        g.out_edges(g.edge(e).from)
                            .iter()
                            .filter(|&&o| o != e)
                            .filter_map(|&o| dist.get(g.edge(o).to).map(|dd| b * &g.edge(o).cost + dd))
                            .min()
                            .map(|cap| (b.clone(), cap))
                    })
                    .collect();
                let accepted = |c: &[Rat]| caps.iter().all(|(b, a)| chain_perceived(&g, &dist, e, c, b).iter().all(|p| p <= a));
                let grid_ok = GridSpec { d: cfg.d.min(32), k }.chunkings(&g.edge(e).cost)?.iter().any(|c| accepted(c));
                let fill_ok = max_fill(&g, &dist, e, k, &caps).is_some_and(|c| accepted(&c));
                let got = crate::multi_agent::chunk_same_path(&g, &dist, e, &agents, k)
                    .map_err(|e| OracleError::InvalidGrid(e.to_string()))?;
                let ok = match &got {
                    Ok(c) => accepted(&c.chunks),
                    Err(_) => !(grid_ok || fill_ok),
                };
                if !ok || got.is_ok() != (grid_ok || fill_ok) {
                    violations.push(format!("instance {n}: same-path {} vs exhaustive {}", got.is_ok(), grid_ok || fill_ok));
                }
            }
            Suite::Split => {
                let (g, dist, e) = random_edge(&mut rng);
                let b1 = random_bias(&mut rng);
                let b2 = &b1 + Rat::frac(rng.gen_range(1..30), 10);
                let k = rng.gen_range(1..=k_max.min(3));
                for dir in [crate::multi_agent::Direction::First, crate::multi_agent::Direction::Second] {
                    let (bt, br) = if dir == crate::multi_agent::Direction::First { (&b1, &b2) } else { (&b2, &b1) };
                    let alpha = g
                        .out_edges(g.edge(e).from)
                        .iter()
                        .filter(|&&o| o != e)
                        .filter_map(|&o| dist.get(g.edge(o).to).map(|dd| bt * &g.edge(o).cost + dd))
                        .min()
                        .expect("edge has an alternative");
                    let grid_best = GridSpec { d: cfg.d.min(24), k }
                        .chunkings(&g.edge(e).cost)?
                        .into_iter()
                        .filter(|c| chain_perceived(&g, &dist, e, c, bt).iter().all(|p| p <= &alpha))
                        .map(|c| chain_perceived(&g, &dist, e, &c, br).into_iter().max().expect("k >= 1"))
                        .max();
                    match (crate::multi_agent::chunk_split(&g, &dist, e, &b1, &b2, k, dir), grid_best) {
                        (Ok(res), Some(best)) if res.repelled_bottleneck < best => {
                            violations.push(format!("instance {n} {dir:?}: {} below grid {}", res.repelled_bottleneck, best))
                        }
                        (Ok(res), _) => {
                            let taker = chain_perceived(&g, &dist, e, &res.chunking.chunks, bt);
                            if taker.iter().any(|p| p > &alpha) {
                                violations.push(format!("instance {n} {dir:?}: taker rejects the split"));
                            }
                        }
                        (Err(crate::multi_agent::MultiAgentError::TakerRefuses { .. }), None) => {}
                        (Err(err), _) => violations.push(format!("instance {n} {dir:?}: {err}")),
                    }
                }
            }
            Suite::TwoAgent => {
                let vertices = rng.gen_range(4..=6);
                let g = crate::graph::random_dag(&mut rng, &crate::graph::RandomDagSpec { vertices, ..Default::default() });
                let b1 = random_bias(&mut rng);
                let b2 = &b1 + Rat::frac(rng.gen_range(1..30), 10);
                let k = rng.gen_range(1..=k_max.min(2));
                for budget in [BudgetSpec::local(k), BudgetSpec::global(k)] {
                    let oracle = brute_force_two_agent_plan(&g, &b1, &b2, budget, GRAPH_D)?;
                    match crate::multi_agent::two_agent_plan(&g, &b1, &b2, budget) {
                        Ok(p) if p.predicted_cost == oracle.cost => {}
                        Ok(p) => violations.push(format!("instance {n} {budget:?}: {} vs oracle {}", p.predicted_cost, oracle.cost)),
                        Err(e) => violations.push(format!("instance {n} {budget:?}: {e}")),
                    }
                }
            }
        }
    }
    Ok(SuiteReport { suite, instances: cfg.instances, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge_chunk::optimal_edge_chunking;
    use crate::graph_chunk::{chunk_graph_global, chunk_graph_local};
    use crate::fixtures::s32;
    use crate::graph::{random_dag, shortest_to_sink, RandomDagSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(s: &str) -> Rat {
        s.parse().unwrap()
    }

    #[test]
    fn suites_pass_on_small_samples() {
        for suite in Suite::ALL {
            let cfg = SuiteConfig { seed: 7, k: 3, d: 24, instances: 8 };
            let rep = run_suite(suite, cfg).unwrap();
            assert!(rep.violations.is_empty(), "{suite:?}: {:?}", rep.violations);
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(GridSpec { d: 4, k: 1 }.size(), 1);
        assert_eq!(GridSpec { d: 4, k: 3 }.size(), 15);
        assert_eq!(GridSpec { d: 4, k: 3 }.chunkings(&r("4")).unwrap().len(), 15);
        assert!(GridSpec { d: 0, k: 3 }.chunkings(&r("4")).is_err());
    }

    #[test]
    fn s32_grids() {
        let g = s32();
        let d = shortest_to_sink(&g).unwrap();
        let e = g.edge_by_names("u", "v").unwrap();
        let one = brute_force_edge_chunking(&g, &d, e, &r("2"), GridSpec { d: 7, k: 1 }).unwrap();
        assert_eq!(one.bottleneck, r("2") * r("14") + r("60.1"));
        // Step 1/20 misses the optimum; step 1/40 contains it.
        let coarse = brute_force_edge_chunking(&g, &d, e, &r("2"), GridSpec { d: 280, k: 2 }).unwrap();
        assert_eq!(coarse.bottleneck, r("77.6"));
        let two = brute_force_edge_chunking(&g, &d, e, &r("2"), GridSpec { d: 560, k: 2 }).unwrap();
        assert_eq!(two.chunks, vec![r("5.275"), r("8.725")]);
        assert_eq!(two.bottleneck, r("77.55"));
    }

    #[test]
    fn optimizer_dominates_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let spec = RandomDagSpec {
                vertices: rng.gen_range(3..=6),
                cost_denom: rng.gen_range(1..=4),
                ..Default::default()
            };
            let g = random_dag(&mut rng, &spec);
            let d = shortest_to_sink(&g).unwrap();
            let e = EdgeId(rng.gen_range(0..g.edge_count()));
            let b = Rat::frac(rng.gen_range(11..=40), 10);
            let k = rng.gen_range(1..=4);
            let grid = brute_force_edge_chunking(&g, &d, e, &b, GridSpec { d: 32, k }).unwrap();
            let (c, rep) = optimal_edge_chunking(&g, &d, e, &b, k).unwrap();
            assert!(
                rep.bottleneck <= grid.bottleneck,
                "{:?} b={b} k={k} opt={:?} {} grid={:?} {}",
                g.edge(e),
                c.chunks,
                rep.bottleneck,
                grid.chunks,
                grid.bottleneck
            );
        }
    }

    #[test]
    fn s32_graph_oracle() {
        let g = s32();
        let two = r("2");
        assert_eq!(brute_force_graph_plan(&g, &two, BudgetSpec::local(3), 8).unwrap().cost, r("74.1"));
        assert_eq!(brute_force_graph_plan(&g, &two, BudgetSpec::local(2), 8).unwrap().cost, r("76"));
    }

    #[test]
    fn graph_oracle_matches_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let spec = RandomDagSpec {
                vertices: rng.gen_range(2..=6),
                cost_denom: 2,
                ..Default::default()
            };
            let g = random_dag(&mut rng, &spec);
            let b = Rat::frac(rng.gen_range(11..=30), 10);
            let k = rng.gen_range(1..=3);
            let local = chunk_graph_local(&g, &b, k).unwrap();
            let global = chunk_graph_global(&g, &b, k).unwrap();
            assert_eq!(brute_force_graph_plan(&g, &b, BudgetSpec::local(k), 6).unwrap().cost, local.predicted_cost);
            assert_eq!(brute_force_graph_plan(&g, &b, BudgetSpec::global(k), 6).unwrap().cost, global.predicted_cost);
        }
    }

    #[test]
    fn fan_curves() {
        let rows = cost_ratio_curve(&r("2"), &r("3/2"), [4], 1).unwrap();
        assert_eq!(rows[0].simulated, r("81/16"));
        assert_eq!(rows[0].bound, r("16"));
        let rows = cost_ratio_curve(&r("2"), &r("9/8"), [5], 3).unwrap();
        assert_eq!(rows[0].b_min, r("8/7"));
        assert_eq!(rows[0].simulated, r("9/8").pow(5));
        for row in cost_ratio_curve(&r("2"), &r("3/2"), 1..=6, 3).unwrap() {
            assert_eq!(row.simulated, r("1"));
        }
        for k in 1..=4 {
            for n in 1..=12 {
                for c in ["17/16", "21/20"] {
                    let row = &cost_ratio_curve(&r("2"), &r(c), [n], k).unwrap()[0];
                    assert_eq!(row.simulated, row.predicted);
                    assert!(row.simulated <= row.bound);
                }
            }
        }
        let csv = rows_to_csv(&cost_ratio_curve(&r("2"), &r("3/2"), [4], 1).unwrap());
        assert_eq!(csv, "n,b,c,k,ratio_num,ratio_den,bound_num,bound_den\n4,2/1,3/2,1,81,16,16,1\n");
    }

    #[test]
    fn constant_ratio_chunks() {
        assert_eq!(chunks_for_constant_ratio(&r("2"), &r("2"), 1).unwrap(), 1);
        assert_eq!(chunks_for_constant_ratio(&r("2"), &r("4"), 2).unwrap(), 1);
        assert_eq!(chunks_for_constant_ratio(&r("2"), &r("2"), 8).unwrap(), 4);
        for n in 1..=64 {
            let k = chunks_for_constant_ratio(&r("2"), &r("2"), n).unwrap();
            assert_eq!(k as f64, chunks_closed_form(2.0, 2.0, n).ceil(), "n={n}");
        }
    }

    #[test]
    fn chunked_ratio_bound_on_random_dags() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..80 {
            let spec = RandomDagSpec { vertices: rng.gen_range(2..=7), cost_denom: 2, ..Default::default() };
            let g = random_dag(&mut rng, &spec);
            let b = Rat::frac(rng.gen_range(11..=40), 10);
            let k = rng.gen_range(1..=4);
            let dist = shortest_to_sink(&g).unwrap();
            let opt = dist.to_sink(g.source()).clone();
            let bound = b_min(&b, k).pow(g.vertex_count() as u32 - 1) * &opt;
            let profile = BiasProfile::new(b.clone()).unwrap();
            let plan = chunk_every_edge(&g, &b, k);
            let every = traverse(&ChunkedGraph::new(&g, &plan), &profile).unwrap();
            assert!(every.total <= bound);
            assert!(chunk_graph_local(&g, &b, k).unwrap().predicted_cost <= bound);
        }
    }
}
