//! Vertex nomination on edge-attributed graphs.
//!
//! A small set of vertices of interest ("red") is partly known; the task is
//! to rank the remaining vertices so that the unknown red ones come first.
//! This crate provides
//!
//! - a two-block random graph model with red/green edge attributes
//!   ([`kappa`]) and the exact sampling distributions of the ranking
//!   statistics under it,
//! - the statistics themselves and their linear fusion ([`nomination`]),
//! - retrieval metrics and chance baselines ([`metrics`]),
//! - deterministic, parallel Monte Carlo sweeps ([`experiments`]),
//! - partition screening and trials on topic-attributed graphs
//!   ([`importance`]),
//! - file formats and a synthetic corpus generator ([`io`]).
//!
//! ```
//! use vnom::kappa::{sample_kappa, KappaParams, SimplexVec3};
//! use vnom::metrics::{EvalReport, TruthSet};
//! use vnom::nomination::{rank_candidates, FusionWeight};
//!
//! let p = SimplexVec3::new(0.6, 0.2, 0.2).unwrap();
//! let s = SimplexVec3::new(0.4, 0.4, 0.2).unwrap();
//! let params = KappaParams::new(60, 12, 6, p, s).unwrap();
//! let g = sample_kappa(&params, 7);
//!
//! let ranking = rank_candidates(&g, FusionWeight::new(0.5).unwrap(), 7).unwrap();
//! let report = EvalReport::evaluate(&ranking, &TruthSet::from_graph(&g)).unwrap();
//! assert!(report.ap > 0.0 && report.ap <= 1.0);
//! ```

pub mod error;
pub mod experiments;
pub mod graph;
pub mod importance;
pub mod io;
pub mod kappa;
pub mod metrics;
pub mod nomination;
pub mod seed;

pub use error::{Error, Result};
pub use graph::{AttributedGraph, EdgeAttr, Partition, SimpleGraph, VertexAttr, VertexId};
