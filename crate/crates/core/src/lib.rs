//! Chunking tasks for present-biased agents.

pub mod agent;
pub mod chunked;
pub mod cli;
pub mod edge_chunk;
pub mod fixtures;
pub mod graph;
pub mod graph_chunk;
pub mod io;
pub mod oracle;
pub mod multi_agent;
pub mod rat;

pub use chunked::{ChunkPlan, Chunking, ChunkedGraph};
pub use graph::{EdgeId, TaskGraph, VertexId};
pub use rat::{ExtRat, Rat};
