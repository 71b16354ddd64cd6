//! Chronological timelines in vector-embedding spaces.
//!
//! Given one "time anchor" embedding per year and a set of query embeddings,
//! this crate predicts the year of each query in two ways:
//!
//! * [`probing`]: pick the anchor with the largest dot product;
//! * [`timeline`]: fit a Bézier curve through the year-sorted anchors,
//!   optionally inside a cosine [`kpca`] subspace, and read the year off the
//!   curve parameter of the query's closest point.
//!
//! [`metrics`] scores predictions (MAE, TAI) and chronological orderings
//! (Spearman, Kendall, adjacent-swap distance). [`synthetic`] builds
//! embedding spaces with a known chronology for testing.

pub mod error;
pub mod kpca;
pub mod metrics;
pub mod probing;
pub mod store;
pub mod synthetic;
pub mod timeline;
pub mod vector;

pub use error::{Error, Result};
pub use kpca::Projector;
pub use metrics::{EvalReport, RankingScores, TaiConfig};
pub use probing::{probe, probe_batch, ProbeResult};
pub use store::{
    load_embeddings, load_projection_1d, to_anchor_set, EmbeddingRecord, EmbeddingSet,
    ExternalProjection1D, TimeAnchorSet,
};
pub use synthetic::{generate, CurveKind, SyntheticSpec};
pub use timeline::{
    fit_timeline, BezierCurve, InferenceMethod, TimePrediction, TimelineConfig, TimelineModel,
    TimelineSpace,
};
