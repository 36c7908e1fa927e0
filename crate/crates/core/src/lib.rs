//! Multi-person tracking by minimum-cost multicut.
//!
//! Detections are connected into a spatio-temporal graph, every edge gets a
//! signed cost from a learned logistic model over point-correspondence or
//! geometric features, and the graph is decomposed by a Kernighan-Lin local
//! search over node partitions. Surviving clusters become tracks, which are
//! scored with the CLEAR MOT metrics.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: detections, boxes, and the windowed tracking graph
//! * [`features`]: correspondence-overlap and geometric pair features
//! * [`cost`]: per-gap logistic models and edge costs
//! * [`multicut`]: the minimum-cost multicut problem and its solvers
//! * [`tracks`]: cluster filtering and track assembly
//! * [`eval`]: pair accuracy and CLEAR MOT
//! * [`pipeline`]: file formats, synthetic data, and end-to-end orchestration

pub mod assignment;
pub mod cost;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod multicut;
pub mod pipeline;
pub mod tracks;
pub mod truth;

pub use error::{Error, Result};
