use crate::error::{HistError, Result};
use crate::haar::{self, HaarIndex, PaddedDomain};

use super::domain::{CellLimit, RangeQuery};

/// Sparse set of Haar coefficients over a padded domain.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSketch {
    domain: PaddedDomain,
    entries: Vec<(usize, f64)>,
    // per-entry decoded indices, one per dimension
    decoded: Vec<Vec<HaarIndex>>,
}

impl WaveletSketch {
    /// Entries are sorted by index; duplicates and out-of-range indices are rejected.
    pub fn new(domain: PaddedDomain, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(HistError::InvalidParameter(format!(
                "duplicate coefficient index {}",
                w[0].0
            )));
        }
        let mut decoded = Vec::with_capacity(entries.len());
        for &(idx, v) in &entries {
            if !v.is_finite() {
                return Err(HistError::InvalidParameter(format!(
                    "coefficient {idx} is not finite"
                )));
            }
            let per_dim = domain.unflatten(idx)?;
            decoded.push(
                per_dim
                    .iter()
                    .zip(domain.padded())
                    .map(|(&j, &n)| HaarIndex::from_flat(j, n))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(WaveletSketch {
            domain,
            entries,
            decoded,
        })
    }

    pub fn empty(domain: PaddedDomain) -> Self {
        WaveletSketch {
            domain,
            entries: Vec::new(),
            decoded: Vec::new(),
        }
    }

    pub fn domain(&self) -> &PaddedDomain {
        &self.domain
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Support size.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Σ_j α_j ⟨q, ψ_j⟩`, without clamping.
    pub fn estimate_raw(&self, q: &RangeQuery) -> Result<f64> {
        q.check_within(self.domain.original())?;
        let padded = self.domain.padded();
        Ok(self
            .entries
            .iter()
            .zip(&self.decoded)
            .map(|(&(_, a), js)| a * haar::range_basis_dot(q.bounds(), js, padded))
            .sum())
    }

    /// Estimated cardinality, clamped at zero.
    pub fn estimate(&self, q: &RangeQuery) -> Result<f64> {
        self.estimate_raw(q).map(|s| s.max(0.0))
    }

    /// Dense coefficient tensor over the padded domain.
    pub fn dense_coefficients(&self, limit: CellLimit) -> Result<Vec<f64>> {
        let cells = limit.check(self.domain.volume())?;
        let mut alpha = vec![0.0; cells];
        for &(idx, v) in &self.entries {
            alpha[idx - 1] = v;
        }
        Ok(alpha)
    }

    /// Reconstructed per-cell heights over the padded domain (row-major).
    pub fn reconstruct_padded(&self, limit: CellLimit) -> Result<Vec<f64>> {
        let mut x = self.dense_coefficients(limit)?;
        haar::ifwt_nd_in_place(&mut x, self.domain.padded())?;
        Ok(x)
    }

    /// Reconstructed heights restricted to the original (unpadded) domain.
    pub fn reconstruct(&self, limit: CellLimit) -> Result<Vec<f64>> {
        let padded = self.reconstruct_padded(limit)?;
        Ok(crop_padded(&padded, self.domain.padded(), self.domain.original().ranges()))
    }
}

/// Copies the leading `ranges` sub-tensor out of a row-major tensor of shape `padded`.
pub(crate) fn crop_padded(data: &[f64], padded: &[usize], ranges: &[usize]) -> Vec<f64> {
    if padded == ranges {
        return data.to_vec();
    }
    let src = crate::histcore::domain::row_major_strides(padded);
    let dst = crate::histcore::domain::row_major_strides(ranges);
    let total: usize = ranges.iter().product();
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut off = 0;
            for (s, t) in dst.iter().zip(&src) {
                off += (rem / s) * t;
                rem %= s;
            }
            data[off]
        })
        .collect()
}
