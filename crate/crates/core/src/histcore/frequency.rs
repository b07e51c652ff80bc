use crate::error::{HistError, Result};

use super::domain::{row_major_strides, AttributeDomain, RangeQuery};

/// Exact value-frequency counts over a domain, stored densely in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTensor {
    domain: AttributeDomain,
    counts: Vec<u64>,
    total: u64,
}

impl FrequencyTensor {
    pub fn zeros(domain: AttributeDomain) -> Result<Self> {
        let cells = usize::try_from(domain.volume())
            .map_err(|_| HistError::InvalidDomain(format!("{domain} is too large")))?;
        Ok(FrequencyTensor {
            domain,
            counts: vec![0; cells],
            total: 0,
        })
    }

    pub fn from_counts(domain: AttributeDomain, counts: Vec<u64>) -> Result<Self> {
        if domain.volume() != counts.len() as u128 {
            return Err(HistError::LengthMismatch {
                expected: domain.volume() as usize,
                got: counts.len(),
            });
        }
        let total = counts.iter().sum();
        Ok(FrequencyTensor {
            domain,
            counts,
            total,
        })
    }

    pub fn domain(&self) -> &AttributeDomain {
        &self.domain
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Count at a 1-based cell coordinate.
    pub fn get(&self, cell: &[usize]) -> u64 {
        self.counts[self.domain.flat_index(cell)]
    }

    pub fn add_at_flat(&mut self, flat: usize, n: u64) {
        self.counts[flat] += n;
        self.total += n;
    }

    /// Moves `n` records from one flat cell to another. Panics if the source holds fewer.
    pub(crate) fn move_records(&mut self, from: usize, to: usize, n: u64) {
        assert!(self.counts[from] >= n);
        self.counts[from] -= n;
        self.counts[to] += n;
    }

    /// Sum of counts inside `q`, by direct enumeration of the covered cells.
    pub fn exact_cardinality(&self, q: &RangeQuery) -> Result<u64> {
        q.check_within(&self.domain)?;
        let strides = self.domain.strides();
        let bounds = q.bounds();
        let d = bounds.len();
        // odometer over all but the last dimension; the last one is a contiguous slice
        let mut cursor: Vec<usize> = bounds.iter().map(|b| b.lo).collect();
        let last = bounds[d - 1];
        let mut sum = 0u64;
        loop {
            let base: usize = cursor[..d - 1]
                .iter()
                .zip(&strides)
                .map(|(&c, &s)| (c - 1) * s)
                .sum();
            sum += self.counts[base + last.lo - 1..base + last.hi]
                .iter()
                .sum::<u64>();
            let mut dim = d - 1;
            loop {
                if dim == 0 {
                    return Ok(sum);
                }
                dim -= 1;
                cursor[dim] += 1;
                if cursor[dim] <= bounds[dim].hi {
                    break;
                }
                cursor[dim] = bounds[dim].lo;
            }
        }
    }
}

/// Summed-area table over a [`FrequencyTensor`]; answers range counts in `O(2^d)`.
#[derive(Debug, Clone)]
pub struct PrefixCounts {
    domain: AttributeDomain,
    // shape (r_i + 1) per dimension, zero-padded on the low side
    table: Vec<u64>,
    strides: Vec<usize>,
}

impl PrefixCounts {
    pub fn new(freq: &FrequencyTensor) -> Self {
        let domain = freq.domain().clone();
        let shape: Vec<usize> = domain.ranges().iter().map(|r| r + 1).collect();
        let strides = row_major_strides(&shape);
        let mut table = vec![0u64; shape.iter().product()];
        let src_strides = domain.strides();
        // scatter counts into the shifted table
        let ranges = domain.ranges();
        for (flat, &c) in freq.counts().iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut rem = flat;
            let mut dst = 0;
            for (i, s) in src_strides.iter().enumerate() {
                let idx = rem / s;
                rem %= s;
                debug_assert!(idx < ranges[i]);
                dst += (idx + 1) * strides[i];
            }
            table[dst] = c;
        }
        // running sums along each axis
        for axis in 0..shape.len() {
            let stride = strides[axis];
            for flat in 0..table.len() {
                if (flat / stride) % shape[axis] != 0 {
                    table[flat] += table[flat - stride];
                }
            }
        }
        PrefixCounts {
            domain,
            table,
            strides,
        }
    }

    pub fn domain(&self) -> &AttributeDomain {
        &self.domain
    }

    pub fn count(&self, q: &RangeQuery) -> Result<u64> {
        q.check_within(&self.domain)?;
        let bounds = q.bounds();
        let d = bounds.len();
        let mut pos: i128 = 0;
        let mut neg: i128 = 0;
        for mask in 0u32..(1 << d) {
            let mut flat = 0;
            for (i, b) in bounds.iter().enumerate() {
                let coord = if mask & (1 << i) != 0 { b.lo - 1 } else { b.hi };
                flat += coord * self.strides[i];
            }
            let v = self.table[flat] as i128;
            if mask.count_ones() % 2 == 0 {
                pos += v;
            } else {
                neg += v;
            }
        }
        Ok((pos - neg) as u64)
    }
}
