//! File formats. Every number is written as a lowest-terms `"p/q"` string and
//! read back exactly; decimal strings such as `"60.1"` are accepted on input.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::agent::TraversalTrace;
use crate::chunked::{ChunkPlan, Chunking, ChunkedGraph, PlanError};
use crate::edge_chunk::ChunkingReport;
use crate::graph::{validate, GraphError, TaskGraph, VertexId};
use crate::graph_chunk::GraphPlan;
use crate::multi_agent::{SharedPathPlan, SplitResult, TwoAgentPlan};
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("field {field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: Vec<String>,
    edges: Vec<EdgeFile>,
    source: String,
    sink: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    from: String,
    to: String,
    cost: Rat,
}

/// Parses and validates a graph file.
pub fn load_graph(bytes: &[u8]) -> Result<TaskGraph, IoError> {
    let file: GraphFile = serde_json::from_slice(bytes)?;
    let edges = file.edges.into_iter().map(|e| (e.from, e.to, e.cost)).collect();
    let g = TaskGraph::new(file.vertices, edges, &file.source, &file.sink)?;
    validate(&g)?;
    Ok(g)
}

/// Canonical form: vertices and edges in id order, pretty-printed.
pub fn save_graph(g: &TaskGraph) -> Vec<u8> {
    let file = GraphFile {
        vertices: g.vertices().map(|v| g.name(v).to_string()).collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeFile {
                from: g.name(e.from).to_string(),
                to: g.name(e.to).to_string(),
                cost: e.cost.clone(),
            })
            .collect(),
        source: g.name(g.source()).to_string(),
        sink: g.name(g.sink()).to_string(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("graph serializes");
    out.push(b'\n');
    out
}

pub fn chunking_json(g: &TaskGraph, c: &Chunking) -> Value {
    let e = g.edge(c.edge);
    json!({ "from": g.name(e.from), "to": g.name(e.to), "chunks": c.chunks })
}

fn field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Value, IoError> {
    v.get(key).ok_or_else(|| IoError::Field {
        field: format!("{at}.{key}"),
        message: "missing".into(),
    })
}

fn str_field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a str, IoError> {
    field(v, key, at)?.as_str().ok_or_else(|| IoError::Field {
        field: format!("{at}.{key}"),
        message: "expected a string".into(),
    })
}

pub fn chunking_from_json(g: &TaskGraph, v: &Value, at: &str) -> Result<Chunking, IoError> {
    let from = str_field(v, "from", at)?;
    let to = str_field(v, "to", at)?;
    let edge = g.edge_by_names(from, to).map_err(|e| IoError::Field {
        field: at.to_string(),
        message: e.to_string(),
    })?;
    let chunks: Vec<Rat> = serde_json::from_value(field(v, "chunks", at)?.clone()).map_err(|e| IoError::Field {
        field: format!("{at}.chunks"),
        message: e.to_string(),
    })?;
    Ok(Chunking::new(edge, chunks))
}

fn names(g: &TaskGraph, path: &[VertexId]) -> Vec<String> {
    path.iter().map(|&v| g.name(v).to_string()).collect()
}

fn plan_chunkings(g: &TaskGraph, plan: &ChunkPlan) -> Value {
    Value::Array(plan.chunkings().map(|c| chunking_json(g, c)).collect())
}

pub fn trace_json(trace: &TraversalTrace, cg: &ChunkedGraph) -> Value {
    let mut v = serde_json::to_value(trace).expect("trace serializes");
    v["path"] = json!(names(cg.base(), &trace.original_path(cg)));
    v
}

pub fn report_json(g: &TaskGraph, c: &Chunking, report: &ChunkingReport) -> Value {
    let mut v = chunking_json(g, c);
    let r = serde_json::to_value(report).expect("report serializes");
    for (k, val) in r.as_object().expect("report is an object") {
        v[k] = val.clone();
    }
    v
}

/// Plan document for one agent.
pub fn graph_plan_json(g: &TaskGraph, p: &GraphPlan) -> Value {
    let cg = ChunkedGraph::new(g, &p.plan);
    json!({
        "mode": p.budget.mode,
        "k": p.budget.k,
        "planned_path": names(g, &p.path),
        "predicted_cost": p.predicted_cost,
        "chunkings": plan_chunkings(g, &p.plan),
        "trace": trace_json(&p.trace, &cg),
    })
}

pub fn two_agent_plan_json(g: &TaskGraph, biases: [&Rat; 2], p: &TwoAgentPlan) -> Value {
    let cg = ChunkedGraph::new(g, &p.plan);
    let agents: Vec<Value> = (0..2)
        .map(|i| {
            json!({
                "bias": biases[i],
                "planned_path": names(g, &p.paths[i]),
                "cost": p.traces[i].total,
                "trace": trace_json(&p.traces[i], &cg),
            })
        })
        .collect();
    json!({
        "mode": p.budget.mode,
        "k": p.budget.k,
        "predicted_cost": p.predicted_cost,
        "chunkings": plan_chunkings(g, &p.plan),
        "agents": agents,
    })
}

pub fn shared_path_plan_json(g: &TaskGraph, biases: &[Rat], p: &SharedPathPlan) -> Value {
    let cg = ChunkedGraph::new(g, &p.plan);
    let agents: Vec<Value> = biases
        .iter()
        .zip(&p.traces)
        .map(|(b, t)| json!({ "bias": b, "cost": t.total, "trace": trace_json(t, &cg) }))
        .collect();
    json!({
        "mode": p.budget.mode,
        "k": p.budget.k,
        "planned_path": names(g, &p.path),
        "predicted_cost": p.path_cost,
        "chunkings": plan_chunkings(g, &p.plan),
        "agents": agents,
    })
}

pub fn split_json(g: &TaskGraph, s: &SplitResult) -> Value {
    let mut v = chunking_json(g, &s.chunking);
    v["direction"] = json!(s.direction);
    v["target"] = json!(s.target);
    v["repelled_bottleneck"] = json!(s.repelled_bottleneck);
    v["candidates"] = serde_json::to_value(&s.candidates).expect("candidates serialize");
    v
}

/// Reads the `chunkings` list of any plan document (or a bare list).
pub fn load_plan(g: &TaskGraph, bytes: &[u8]) -> Result<ChunkPlan, IoError> {
    let doc: Value = serde_json::from_slice(bytes)?;
    let list = match &doc {
        Value::Array(_) => &doc,
        _ => field(&doc, "chunkings", "plan")?,
    };
    let items = list.as_array().ok_or_else(|| IoError::Field {
        field: "plan.chunkings".into(),
        message: "expected a list".into(),
    })?;
    let chunkings = items
        .iter()
        .enumerate()
        .map(|(i, v)| chunking_from_json(g, v, &format!("chunkings[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChunkPlan::from_chunkings(g, chunkings)?)
}

/// Adds a `<key>_decimal` sibling next to every exact number, recursively.
/// The exact fields are left untouched.
pub fn with_decimals(v: &mut Value, digits: usize) {
    let as_rat = |s: &Value| s.as_str().filter(|s| s.contains('/')).and_then(|s| s.parse::<Rat>().ok());
    match v {
        Value::Object(map) => {
            let mut extra = Map::new();
            for (k, val) in map.iter_mut() {
                if let Some(r) = as_rat(val) {
                    extra.insert(format!("{k}_decimal"), json!(r.to_decimal_string(digits)));
                } else if let Some(items) = val.as_array().filter(|a| !a.is_empty()) {
                    let rats: Option<Vec<Rat>> = items.iter().map(as_rat).collect();
                    if let Some(rats) = rats {
                        let dec: Vec<String> = rats.iter().map(|r| r.to_decimal_string(digits)).collect();
                        extra.insert(format!("{k}_decimal"), json!(dec));
                        continue;
                    }
                    with_decimals(val, digits);
                } else {
                    with_decimals(val, digits);
                }
            }
            map.extend(extra);
        }
        Value::Array(items) => items.iter_mut().for_each(|x| with_decimals(x, digits)),
        _ => {}
    }
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value renders");
    s.push('\n');
    s
}
