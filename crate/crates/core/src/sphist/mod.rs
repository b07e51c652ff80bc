//! Sparse-recovery histograms: OMP over Haar coefficients, inverse transform,
//! then reduction to the requested number of buckets.

pub mod omp;
pub mod reduce;

pub use omp::{omp, OmpOptions, OmpResult, SelectionRule, StopReason};
pub use reduce::{dp_reduce, greedy_reduce_nd, PiecewiseSignal};

use crate::error::{HistError, Result};
use crate::haar::PaddedDomain;
use crate::histcore::{AttributeDomain, BucketHistogram, CellLimit, QueryFeedbackRecord, WaveletSketch};

/// Relative tolerance used when run-length encoding the reconstructed signal.
pub const PIECE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpHistOptions {
    /// Number of buckets in the final histogram.
    pub buckets: usize,
    /// OMP support budget; defaults to `buckets`.
    pub omp_budget: Option<usize>,
    pub selection_rule: SelectionRule,
    pub normalize_columns: bool,
    pub min_residual: f64,
    pub ridge: f64,
    pub cell_limit: CellLimit,
}

impl SpHistOptions {
    pub fn new(buckets: usize) -> Self {
        SpHistOptions {
            buckets,
            omp_budget: None,
            selection_rule: SelectionRule::default(),
            normalize_columns: false,
            min_residual: 0.0,
            ridge: 0.0,
            cell_limit: CellLimit::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpHistFit {
    pub sketch: WaveletSketch,
    pub histogram: BucketHistogram,
    pub omp: OmpResult,
    /// Number of constant pieces in the reconstruction (1-D only).
    pub pieces: Option<usize>,
}

/// OMP, reconstruction, and bucket reduction in one call.
pub fn fit_sphist(
    qfrs: &[QueryFeedbackRecord],
    domain: &AttributeDomain,
    opts: &SpHistOptions,
) -> Result<SpHistFit> {
    if opts.buckets == 0 {
        return Err(HistError::InvalidParameter("bucket count must be positive".into()));
    }
    let padded = PaddedDomain::new(domain.clone());
    let cells = opts.cell_limit.check(padded.volume())?;
    let budget = opts.omp_budget.unwrap_or(opts.buckets).min(cells);
    let omp_opts = OmpOptions {
        k: budget,
        selection_rule: opts.selection_rule,
        normalize_columns: opts.normalize_columns,
        min_residual: opts.min_residual,
        ridge: opts.ridge,
        cell_limit: opts.cell_limit,
    };
    let res = omp(qfrs, &padded, &omp_opts)?;
    let heights = res.sketch.reconstruct(opts.cell_limit)?;
    let (histogram, pieces) = if domain.dims() == 1 {
        let sig = PiecewiseSignal::from_dense(&heights, PIECE_TOLERANCE)?;
        let n = sig.len();
        (dp_reduce(&sig, opts.buckets)?.0, Some(n))
    } else {
        (greedy_reduce_nd(&heights, domain, opts.buckets)?, None)
    };
    Ok(SpHistFit {
        sketch: res.sketch.clone(),
        histogram,
        omp: res,
        pieces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histcore::{Interval, RangeQuery};

    fn qfr(lo: usize, hi: usize, s: f64) -> QueryFeedbackRecord {
        QueryFeedbackRecord::new(RangeQuery::one_dim(lo, hi).unwrap(), s).unwrap()
    }

    #[test]
    fn recovers_two_bucket_histogram() {
        let qfrs = vec![qfr(1, 2, 2.0), qfr(3, 4, 6.0), qfr(1, 4, 8.0)];
        let fit = fit_sphist(&qfrs, &AttributeDomain::one_dim(4).unwrap(), &SpHistOptions::new(2)).unwrap();
        let b = fit.histogram.buckets();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].bounds[0], Interval::new(1, 2));
        assert!((b[0].count - 2.0).abs() < 1e-9);
        assert!((b[1].count - 6.0).abs() < 1e-9);
    }

    #[test]
    fn constant_truth_single_bucket() {
        let qfrs = vec![qfr(1, 8, 80.0), qfr(2, 5, 40.0), qfr(7, 8, 20.0)];
        let fit = fit_sphist(&qfrs, &AttributeDomain::one_dim(8).unwrap(), &SpHistOptions::new(1)).unwrap();
        assert_eq!(fit.histogram.len(), 1);
        assert!((fit.histogram.buckets()[0].count - 80.0).abs() < 1e-9);
    }

    #[test]
    fn two_dim_dc_only() {
        let d = AttributeDomain::new(vec![2, 2]).unwrap();
        let q = RangeQuery::new(vec![Interval::new(1, 2), Interval::new(1, 2)]).unwrap();
        let qfrs = vec![QueryFeedbackRecord::new(q, 8.0).unwrap()];
        let fit = fit_sphist(&qfrs, &d, &SpHistOptions::new(1)).unwrap();
        assert_eq!(fit.sketch.entries().len(), 1);
        assert_eq!(fit.sketch.entries()[0].0, 1);
        assert!((fit.sketch.entries()[0].1 - 4.0).abs() < 1e-12);
        assert_eq!(fit.histogram.len(), 1);
        assert!((fit.histogram.buckets()[0].count - 8.0).abs() < 1e-9);
    }

    #[test]
    fn non_dyadic_domain_is_padded() {
        let qfrs = vec![qfr(1, 3, 9.0), qfr(4, 5, 2.0), qfr(1, 5, 11.0)];
        let fit = fit_sphist(&qfrs, &AttributeDomain::one_dim(5).unwrap(), &SpHistOptions::new(2)).unwrap();
        assert_eq!(fit.histogram.domain().ranges(), &[5]);
        assert_eq!(fit.sketch.domain().padded(), &[8]);
    }
}
