//! Shared domain types: attribute domains, range queries and feedback records,
//! exact frequency tensors, bucket histograms and wavelet sketches.

pub mod domain;
pub mod frequency;
pub mod histogram;
pub mod sketch;

pub use domain::{
    AttributeDomain, CellLimit, Interval, QueryFeedbackRecord, RangeQuery, CELL_LIMIT_ENV,
    DEFAULT_CELL_LIMIT,
};
pub use frequency::{FrequencyTensor, PrefixCounts};
pub use histogram::{Bucket, BucketHistogram};
pub use sketch::WaveletSketch;
