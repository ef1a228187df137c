//! Tropical-geometric estimation of max-linear Bayesian networks.
//!
//! Everything here works in the min-plus convention: a max-times model
//! `X = C* · Z` is read after a negative log transform, so that
//! observations live in tropical affine space and the set of possible
//! observations is the weighted digraph polyhedron of the weight matrix.
//!
//! Module map:
//!
//! - [`tropical`]: min-plus arithmetic, matrices, Kleene star, membership.
//! - [`polytrope`]: minimum bounding polytrope of a sample, pseudovertices
//!   and the dual central subdivision (link of the origin).
//! - [`model`]: DAGs, max-linear models, random models and sampling.
//! - [`learning`]: gap scores and the thresholded structure estimator.
//! - [`set_cover`]: greedy and exact covers of dual triangulations, census
//!   of combinatorial types.
//! - [`metrics`]: SHD, nSHD, FDR, FPR and TPR.
//! - [`harness`]: config-driven experiments and result files.

pub mod error;
pub mod harness;
pub mod learning;
pub mod metrics;
pub mod model;
pub mod polytrope;
pub mod rng;
pub mod set_cover;
pub mod tropical;

pub use error::{Error, Result};
pub use learning::{
    estimate_with_ordering, known_dag_estimate, score_differences, EstimationResult, ScoreConfig,
    ScoreKind, ScoreMatrix,
};
pub use metrics::{evaluate, MetricReport};
pub use model::{Dag, Edge, Innovation, MlbnModel};
pub use polytrope::{Cell, PolytropeOptions, Pseudovertex, Sample, Subdivision};
pub use set_cover::{CoverResult, TypeCensus};
pub use tropical::{Tropical, TropicalMatrix, TropicalPoint, DEFAULT_TOL};

/// Crate version embedded in every result file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
