//! Embedding trajectories for discrete-time dynamic graphs.
//!
//! The pipeline: ingest a snapshot sequence (or discretize an event log),
//! train shallow temporal node embeddings, project a set of anchor nodes
//! from the first snapshot into 2D, place every node at every timestamp
//! into that fixed anchor frame via nearest-anchor aggregation, score the
//! structural change with neighborhood-overlap metrics, and render the
//! trajectories as SVG/HTML.
//!
//! Start with the `examples/` directory: each file is a runnable tour of
//! one capability. The `graphtrail` binary wires the same stages behind
//! `ingest`, `embed`, `trajectory`, `analyze`, `render`, and `pipeline`
//! subcommands driven by a JSON config.

pub mod analytics;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod pipeline;
pub mod projection;
pub mod render;
pub mod synthetic;
pub mod trajectory;

pub use error::{Error, Result};
