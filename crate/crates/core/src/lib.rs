//! Self-tuning histograms learned from query feedback.
//!
//! A query feedback record pairs a range predicate with the number of rows it
//! selected. Two learners fit histograms to such records: [`equihist`] solves
//! a least-squares problem over fixed equi-width buckets, and [`sphist`]
//! recovers a sparse Haar-wavelet representation with orthogonal matching
//! pursuit before reducing it to the requested number of buckets.
//! [`online`] keeps the equi-width fit current as records stream in.

pub mod equihist;
pub mod error;
pub mod evalbench;
pub mod haar;
pub mod histcore;
pub mod io;
pub mod linalg;
pub mod online;
pub mod sphist;
pub mod workload;

pub use equihist::{fit_equihist, EquiLayout, LsFit, NormalEquations};
pub use error::{HistError, Result};
pub use evalbench::{avg_rel_error, emit_results, run_experiment, ExperimentConfig, Method, ResultTable, SweepVar};
pub use haar::{HaarIndex, PaddedDomain};
pub use histcore::{
    AttributeDomain, Bucket, BucketHistogram, CellLimit, FrequencyTensor, Interval, PrefixCounts,
    QueryFeedbackRecord, RangeQuery, WaveletSketch,
};
pub use online::{simulate_stream, DatabaseUpdate, FeatureMap, FrozenSupport, OnlineState, StreamScenario};
pub use sphist::{fit_sphist, SelectionRule, SpHistFit, SpHistOptions};
pub use workload::{OutOfDomain, Preset, QueryModel};
