//! Orthonormal Haar wavelets.
//!
//! Coefficients are indexed 1-based. Index 1 is the DC row (constant `1/√r̃`);
//! index `j ≥ 2` decomposes as `j = 2^level + shift + 1` and is supported on the
//! block of width `r̃ / 2^level` starting at cell `shift · r̃ / 2^level + 1`, with
//! value `+√(2^level/r̃)` on the first half and `−√(2^level/r̃)` on the second.
//!
//! Multi-dimensional transforms are separable (1-D transform along each axis),
//! over tensors stored row-major with the last dimension fastest.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{HistError, Result};
use crate::histcore::domain::{row_major_strides, AttributeDomain, Interval};

/// Largest size accepted by [`haar_matrix`].
pub const MAX_DENSE_MATRIX: usize = 4096;

/// A domain whose ranges are rounded up to powers of two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedDomain {
    original: AttributeDomain,
    padded: Vec<usize>,
}

impl PaddedDomain {
    pub fn new(original: AttributeDomain) -> Self {
        let padded = original.ranges().iter().map(|r| r.next_power_of_two()).collect();
        PaddedDomain { original, padded }
    }

    /// Rebuilds a padded domain read back from a file, checking consistency.
    pub fn with_padding(original: AttributeDomain, padded: Vec<usize>) -> Result<Self> {
        let expect = PaddedDomain::new(original);
        if expect.padded != padded {
            return Err(HistError::InvalidDomain(format!(
                "padded ranges {:?} do not match {:?}",
                padded, expect.padded
            )));
        }
        Ok(expect)
    }

    pub fn original(&self) -> &AttributeDomain {
        &self.original
    }

    pub fn padded(&self) -> &[usize] {
        &self.padded
    }

    pub fn dims(&self) -> usize {
        self.padded.len()
    }

    pub fn volume(&self) -> u128 {
        self.padded.iter().map(|&r| r as u128).product()
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.padded)
    }

    /// Splits a flat 1-based coefficient index into per-dimension 1-based indices.
    pub fn unflatten(&self, flat: usize) -> Result<Vec<usize>> {
        let max = self.volume() as usize;
        if flat == 0 || flat > max {
            return Err(HistError::InvalidIndex { index: flat, max });
        }
        let mut rem = flat - 1;
        Ok(self
            .strides()
            .iter()
            .map(|s| {
                let i = rem / s;
                rem %= s;
                i + 1
            })
            .collect())
    }

    pub fn flatten(&self, per_dim: &[usize]) -> usize {
        per_dim
            .iter()
            .zip(self.strides())
            .map(|(&j, s)| (j - 1) * s)
            .sum::<usize>()
            + 1
    }
}

/// Decomposed 1-D Haar index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaarIndex {
    Dc,
    Detail { level: u32, shift: usize },
}

impl HaarIndex {
    pub fn from_flat(j: usize, padded: usize) -> Result<Self> {
        if j == 0 || j > padded {
            return Err(HistError::InvalidIndex {
                index: j,
                max: padded,
            });
        }
        if j == 1 {
            return Ok(HaarIndex::Dc);
        }
        let level = (j - 1).ilog2();
        Ok(HaarIndex::Detail {
            level,
            shift: j - 1 - (1usize << level),
        })
    }

    pub fn to_flat(self) -> usize {
        match self {
            HaarIndex::Dc => 1,
            HaarIndex::Detail { level, shift } => (1usize << level) + shift + 1,
        }
    }
}

fn check_dyadic(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        Err(HistError::NonDyadic(n))
    } else {
        Ok(())
    }
}

/// Dense `r̃ × r̃` Haar matrix; rows are basis vectors. Reference use only.
pub fn haar_matrix(padded: usize) -> Result<DMatrix<f64>> {
    check_dyadic(padded)?;
    if padded > MAX_DENSE_MATRIX {
        return Err(HistError::InvalidParameter(format!(
            "dense Haar matrix limited to {MAX_DENSE_MATRIX}, got {padded}"
        )));
    }
    let mut m = DMatrix::zeros(padded, padded);
    let dc = 1.0 / (padded as f64).sqrt();
    for c in 0..padded {
        m[(0, c)] = dc;
    }
    for j in 2..=padded {
        let HaarIndex::Detail { level, shift } = HaarIndex::from_flat(j, padded)? else {
            unreachable!()
        };
        let width = padded >> level;
        let start = shift * width;
        let v = ((1usize << level) as f64 / padded as f64).sqrt();
        for c in start..start + width / 2 {
            m[(j - 1, c)] = v;
        }
        for c in start + width / 2..start + width {
            m[(j - 1, c)] = -v;
        }
    }
    Ok(m)
}

/// In-place forward transform. `scratch` is resized as needed.
pub fn fwt_in_place(x: &mut [f64], scratch: &mut Vec<f64>) {
    debug_assert!(x.len().is_power_of_two());
    scratch.resize(x.len(), 0.0);
    let mut n = x.len();
    while n > 1 {
        let half = n / 2;
        for i in 0..half {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            scratch[i] = (a + b) * FRAC_1_SQRT_2;
            scratch[half + i] = (a - b) * FRAC_1_SQRT_2;
        }
        x[..n].copy_from_slice(&scratch[..n]);
        n = half;
    }
}

/// In-place inverse transform.
pub fn ifwt_in_place(x: &mut [f64], scratch: &mut Vec<f64>) {
    debug_assert!(x.len().is_power_of_two());
    scratch.resize(x.len(), 0.0);
    let mut n = 2;
    while n <= x.len() {
        let half = n / 2;
        for i in 0..half {
            let (a, d) = (x[i], x[half + i]);
            scratch[2 * i] = (a + d) * FRAC_1_SQRT_2;
            scratch[2 * i + 1] = (a - d) * FRAC_1_SQRT_2;
        }
        x[..n].copy_from_slice(&scratch[..n]);
        n *= 2;
    }
}

/// `α = Ψ x`, in `O(r̃)`.
pub fn fwt(x: &[f64], padded: usize) -> Result<Vec<f64>> {
    check_dyadic(padded)?;
    if x.len() != padded {
        return Err(HistError::LengthMismatch {
            expected: padded,
            got: x.len(),
        });
    }
    let mut out = x.to_vec();
    fwt_in_place(&mut out, &mut Vec::new());
    Ok(out)
}

/// `x = Ψᵀ α`, in `O(r̃)`.
pub fn ifwt(alpha: &[f64], padded: usize) -> Result<Vec<f64>> {
    check_dyadic(padded)?;
    if alpha.len() != padded {
        return Err(HistError::LengthMismatch {
            expected: padded,
            got: alpha.len(),
        });
    }
    let mut out = alpha.to_vec();
    ifwt_in_place(&mut out, &mut Vec::new());
    Ok(out)
}

fn check_shape(len: usize, shape: &[usize]) -> Result<()> {
    for &n in shape {
        check_dyadic(n)?;
    }
    let expected: usize = shape.iter().product();
    if expected != len {
        return Err(HistError::LengthMismatch { expected, got: len });
    }
    Ok(())
}

fn along_axes(data: &mut [f64], shape: &[usize], f: fn(&mut [f64], &mut Vec<f64>)) {
    let strides = row_major_strides(shape);
    let mut line = Vec::new();
    let mut scratch = Vec::new();
    for (axis, (&n, &stride)) in shape.iter().zip(&strides).enumerate() {
        if n == 1 {
            continue;
        }
        line.resize(n, 0.0);
        let outer: usize = shape[..axis].iter().product();
        for o in 0..outer {
            let block = o * n * stride;
            for inner in 0..stride {
                let base = block + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                f(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}

/// Separable forward transform of a row-major tensor, in place.
pub fn fwt_nd_in_place(data: &mut [f64], shape: &[usize]) -> Result<()> {
    check_shape(data.len(), shape)?;
    along_axes(data, shape, fwt_in_place);
    Ok(())
}

/// Separable inverse transform of a row-major tensor, in place.
pub fn ifwt_nd_in_place(data: &mut [f64], shape: &[usize]) -> Result<()> {
    check_shape(data.len(), shape)?;
    along_axes(data, shape, ifwt_in_place);
    Ok(())
}

pub fn fwt_nd(data: &[f64], shape: &[usize]) -> Result<Vec<f64>> {
    let mut out = data.to_vec();
    fwt_nd_in_place(&mut out, shape)?;
    Ok(out)
}

pub fn ifwt_nd(data: &[f64], shape: &[usize]) -> Result<Vec<f64>> {
    let mut out = data.to_vec();
    ifwt_nd_in_place(&mut out, shape)?;
    Ok(out)
}

/// `⟨1_[lo,hi], ψ_j⟩` for a 1-D basis vector of length `padded`, in O(1).
pub fn range_basis_dot_1d(iv: Interval, j: HaarIndex, padded: usize) -> f64 {
    match j {
        HaarIndex::Dc => iv.len() as f64 / (padded as f64).sqrt(),
        HaarIndex::Detail { level, shift } => {
            let width = padded >> level;
            let start = shift * width + 1;
            let mid = start + width / 2;
            let first = iv.overlap(&Interval::new(start, mid - 1)) as f64;
            let second = iv.overlap(&Interval::new(mid, start + width - 1)) as f64;
            if first == second {
                return 0.0;
            }
            ((1usize << level) as f64 / padded as f64).sqrt() * (first - second)
        }
    }
}

/// Inner product of a hyper-rectangle indicator with a separable basis tensor.
pub fn range_basis_dot(bounds: &[Interval], js: &[HaarIndex], padded: &[usize]) -> f64 {
    let mut acc = 1.0;
    for ((iv, &j), &n) in bounds.iter().zip(js).zip(padded) {
        acc *= range_basis_dot_1d(*iv, j, n);
        if acc == 0.0 {
            return 0.0;
        }
    }
    acc
}
