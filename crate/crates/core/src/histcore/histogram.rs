use crate::error::{HistError, Result};

use super::domain::{AttributeDomain, CellLimit, Interval, RangeQuery};

/// One hyper-rectangular bucket with a (possibly fractional) record count.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub bounds: Vec<Interval>,
    pub count: f64,
}

impl Bucket {
    pub fn new(bounds: Vec<Interval>, count: f64) -> Self {
        Bucket { bounds, count }
    }

    pub fn volume(&self) -> u128 {
        self.bounds.iter().map(|b| b.len() as u128).product()
    }

    /// Uniform per-cell density inside the bucket.
    pub fn height(&self) -> f64 {
        self.count / self.volume() as f64
    }
}

/// A partition of the domain into non-overlapping buckets.
///
/// Counts are kept as reals since they come out of unconstrained least-squares
/// fits; negative counts are allowed here and only clamped by [`estimate`].
///
/// [`estimate`]: BucketHistogram::estimate
#[derive(Debug, Clone, PartialEq)]
pub struct BucketHistogram {
    domain: AttributeDomain,
    buckets: Vec<Bucket>,
}

impl BucketHistogram {
    pub fn new(domain: AttributeDomain, buckets: Vec<Bucket>) -> Result<Self> {
        if buckets.is_empty() {
            return Err(HistError::InvalidHistogram("no buckets".into()));
        }
        let mut covered: u128 = 0;
        for (j, b) in buckets.iter().enumerate() {
            let q = RangeQuery::new(b.bounds.clone())
                .map_err(|e| HistError::InvalidHistogram(format!("bucket {j}: {e}")))?;
            q.check_within(&domain)
                .map_err(|e| HistError::InvalidHistogram(format!("bucket {j}: {e}")))?;
            if !b.count.is_finite() {
                return Err(HistError::InvalidHistogram(format!(
                    "bucket {j} has non-finite count"
                )));
            }
            covered += b.volume();
        }
        for (i, a) in buckets.iter().enumerate() {
            for (j, b) in buckets.iter().enumerate().skip(i + 1) {
                let shared: u128 = a
                    .bounds
                    .iter()
                    .zip(&b.bounds)
                    .map(|(x, y)| x.overlap(y) as u128)
                    .product();
                if shared > 0 {
                    return Err(HistError::InvalidHistogram(format!(
                        "buckets {i} and {j} overlap"
                    )));
                }
            }
        }
        if covered != domain.volume() {
            return Err(HistError::InvalidHistogram(format!(
                "buckets cover {covered} of {} cells",
                domain.volume()
            )));
        }
        Ok(BucketHistogram { domain, buckets })
    }

    /// A single bucket spanning the whole domain.
    pub fn uniform(domain: AttributeDomain, total: f64) -> Self {
        let bounds = domain.full_query().bounds().to_vec();
        BucketHistogram {
            domain,
            buckets: vec![Bucket::new(bounds, total)],
        }
    }

    pub fn domain(&self) -> &AttributeDomain {
        &self.domain
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.buckets.iter().map(|b| b.count).sum()
    }

    /// `Σ_j height_j · |bucket_j ∩ q|`, without clamping.
    pub fn estimate_raw(&self, q: &RangeQuery) -> Result<f64> {
        q.check_within(&self.domain)?;
        Ok(self
            .buckets
            .iter()
            .map(|b| {
                let ov = q.overlap_volume(&b.bounds);
                if ov == 0 {
                    0.0
                } else {
                    b.height() * ov as f64
                }
            })
            .sum())
    }

    /// Estimated cardinality, clamped at zero.
    pub fn estimate(&self, q: &RangeQuery) -> Result<f64> {
        self.estimate_raw(q).map(|s| s.max(0.0))
    }

    /// Per-cell heights in row-major order.
    pub fn to_dense(&self, limit: CellLimit) -> Result<Vec<f64>> {
        let cells = limit.check(self.domain.volume())?;
        let mut out = vec![0.0; cells];
        let strides = self.domain.strides();
        for b in &self.buckets {
            let h = b.height();
            let mut cursor: Vec<usize> = b.bounds.iter().map(|i| i.lo).collect();
            'cells: loop {
                let flat: usize = cursor
                    .iter()
                    .zip(&strides)
                    .map(|(&c, &s)| (c - 1) * s)
                    .sum();
                out[flat] = h;
                let mut dim = cursor.len();
                loop {
                    if dim == 0 {
                        break 'cells;
                    }
                    dim -= 1;
                    cursor[dim] += 1;
                    if cursor[dim] <= b.bounds[dim].hi {
                        break;
                    }
                    cursor[dim] = b.bounds[dim].lo;
                }
            }
        }
        Ok(out)
    }
}
