use std::fmt;

use crate::error::{HistError, Result};

/// Default ceiling on the number of cells any dense materialization may allocate.
pub const DEFAULT_CELL_LIMIT: usize = 1 << 24;

/// Environment variable that overrides [`DEFAULT_CELL_LIMIT`].
pub const CELL_LIMIT_ENV: &str = "HISTLEARN_CELL_LIMIT";

/// Guard for dense tensor allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellLimit(pub usize);

impl Default for CellLimit {
    fn default() -> Self {
        CellLimit(DEFAULT_CELL_LIMIT)
    }
}

impl CellLimit {
    /// Reads `HISTLEARN_CELL_LIMIT`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(CELL_LIMIT_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map(CellLimit)
                .map_err(|_| HistError::InvalidParameter(format!("{CELL_LIMIT_ENV}={v}"))),
            Err(_) => Ok(CellLimit::default()),
        }
    }

    pub fn check(&self, cells: u128) -> Result<usize> {
        if cells > self.0 as u128 {
            Err(HistError::CellLimitExceeded {
                cells,
                limit: self.0,
            })
        } else {
            Ok(cells as usize)
        }
    }
}

/// Integer attribute domain: attribute `i` takes values `1..=ranges[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeDomain {
    ranges: Vec<usize>,
}

impl AttributeDomain {
    pub fn new(ranges: Vec<usize>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(HistError::InvalidDomain("at least one dimension required".into()));
        }
        if let Some(i) = ranges.iter().position(|&r| r == 0) {
            return Err(HistError::InvalidDomain(format!("range of dimension {i} is zero")));
        }
        Ok(AttributeDomain { ranges })
    }

    pub fn one_dim(r: usize) -> Result<Self> {
        Self::new(vec![r])
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[usize] {
        &self.ranges
    }

    /// Number of cells, as a wide integer so callers can guard before allocating.
    pub fn volume(&self) -> u128 {
        self.ranges.iter().map(|&r| r as u128).product()
    }

    /// Row-major strides (last dimension fastest).
    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.ranges)
    }

    /// Flat row-major offset of a 1-based cell coordinate.
    pub fn flat_index(&self, cell: &[usize]) -> usize {
        cell.iter()
            .zip(self.strides())
            .map(|(&c, s)| (c - 1) * s)
            .sum()
    }

    /// The query covering the whole domain.
    pub fn full_query(&self) -> RangeQuery {
        RangeQuery {
            bounds: self.ranges.iter().map(|&r| Interval::new(1, r)).collect(),
        }
    }

    /// Errors unless both domains have identical ranges.
    pub fn ensure_same(&self, other: &AttributeDomain) -> Result<()> {
        if self != other {
            return Err(HistError::DomainMismatch(format!("{self} vs {other}")));
        }
        Ok(())
    }
}

impl fmt::Display for AttributeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join(&self.ranges))
    }
}

pub(crate) fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Closed integer interval `[lo, hi]`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub const fn new(lo: usize, hi: usize) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> usize {
        self.hi + 1 - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    /// Number of integers shared with `other`.
    pub fn overlap(&self, other: &Interval) -> usize {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if hi >= lo {
            hi - lo + 1
        } else {
            0
        }
    }
}

/// Axis-aligned hyper-rectangle of closed integer intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RangeQuery {
    bounds: Vec<Interval>,
}

impl RangeQuery {
    /// Builds a query without checking it against a domain. Intervals must be non-empty.
    pub fn new(bounds: Vec<Interval>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(HistError::InvalidQuery("no intervals".into()));
        }
        for (i, b) in bounds.iter().enumerate() {
            if b.lo == 0 || b.hi < b.lo {
                return Err(HistError::InvalidQuery(format!(
                    "dimension {i}: [{}, {}]",
                    b.lo, b.hi
                )));
            }
        }
        Ok(RangeQuery { bounds })
    }

    pub fn one_dim(lo: usize, hi: usize) -> Result<Self> {
        Self::new(vec![Interval::new(lo, hi)])
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn volume(&self) -> u128 {
        self.bounds.iter().map(|b| b.len() as u128).product()
    }

    /// Volume of the intersection with another box of the same dimensionality.
    pub fn overlap_volume(&self, other: &[Interval]) -> u128 {
        self.bounds
            .iter()
            .zip(other)
            .map(|(a, b)| a.overlap(b) as u128)
            .product()
    }

    /// Checks `1 <= lo <= hi <= r` in every dimension.
    pub fn check_within(&self, domain: &AttributeDomain) -> Result<()> {
        if self.dims() != domain.dims() {
            return Err(HistError::DomainMismatch(format!(
                "query has {} dimensions, domain has {}",
                self.dims(),
                domain.dims()
            )));
        }
        for (i, (b, &r)) in self.bounds.iter().zip(domain.ranges()).enumerate() {
            if b.hi > r {
                return Err(HistError::DomainMismatch(format!(
                    "dimension {i}: [{}, {}] exceeds range {r}",
                    b.lo, b.hi
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for RangeQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.bounds.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{},{}]", b.lo, b.hi)?;
        }
        Ok(())
    }
}

/// A range query paired with its observed cardinality.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryFeedbackRecord {
    pub query: RangeQuery,
    pub cardinality: f64,
}

impl QueryFeedbackRecord {
    pub fn new(query: RangeQuery, cardinality: f64) -> Result<Self> {
        if !(cardinality >= 0.0) || !cardinality.is_finite() {
            return Err(HistError::InvalidQuery(format!(
                "cardinality {cardinality} must be finite and non-negative"
            )));
        }
        Ok(QueryFeedbackRecord { query, cardinality })
    }
}
