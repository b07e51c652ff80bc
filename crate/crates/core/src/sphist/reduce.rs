//! Bucket reduction of a reconstructed piecewise-constant signal.
//!
//! In one dimension the optimal `k`-bucket partition under weighted squared
//! error is found by dynamic programming over piece boundaries, so the cost is
//! quadratic in the number of pieces rather than in the domain size. Higher
//! dimensions use greedy binary splits of axis-aligned boxes.

use crate::error::{HistError, Result};
use crate::histcore::{AttributeDomain, Bucket, BucketHistogram, Interval};

/// Run-length encoded 1-D signal: `(run length, height)` pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSignal {
    pieces: Vec<(usize, f64)>,
}

impl PiecewiseSignal {
    pub fn new(pieces: Vec<(usize, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(HistError::InvalidParameter("empty signal".into()));
        }
        if pieces.iter().any(|&(n, h)| n == 0 || !h.is_finite()) {
            return Err(HistError::InvalidParameter(
                "pieces need positive length and finite height".into(),
            ));
        }
        Ok(PiecewiseSignal { pieces })
    }

    /// Merges runs of values equal up to `tol · (1 + max |v|)`.
    pub fn from_dense(values: &[f64], tol: f64) -> Result<Self> {
        let scale = tol * (1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let mut pieces: Vec<(usize, f64)> = Vec::new();
        // anchor: the first value of the current run, so drift cannot chain
        let mut anchor = f64::NAN;
        for &v in values {
            match pieces.last_mut() {
                Some((n, h)) if (v - anchor).abs() <= scale => {
                    *h = (*h * *n as f64 + v) / (*n + 1) as f64;
                    *n += 1;
                }
                _ => {
                    pieces.push((1, v));
                    anchor = v;
                }
            }
        }
        Self::new(pieces)
    }

    pub fn pieces(&self) -> &[(usize, f64)] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn total_length(&self) -> usize {
        self.pieces.iter().map(|p| p.0).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .flat_map(|&(n, h)| std::iter::repeat_n(h, n))
            .collect()
    }
}

/// Weighted squared error of replacing pieces `a..b` by their mean.
struct SegmentCost {
    w: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl SegmentCost {
    fn new(pieces: &[(usize, f64)]) -> Self {
        let total: f64 = pieces.iter().map(|p| p.0 as f64).sum();
        let mean = pieces.iter().map(|&(n, h)| n as f64 * h).sum::<f64>() / total;
        let mut w = vec![0.0];
        let mut s1 = vec![0.0];
        let mut s2 = vec![0.0];
        for &(n, h) in pieces {
            // centering reduces cancellation in s2 - s1²/w
            let (n, c) = (n as f64, h - mean);
            w.push(w.last().unwrap() + n);
            s1.push(s1.last().unwrap() + n * c);
            s2.push(s2.last().unwrap() + n * c * c);
        }
        SegmentCost { w, s1, s2 }
    }

    fn cost(&self, a: usize, b: usize) -> f64 {
        let w = self.w[b] - self.w[a];
        let s1 = self.s1[b] - self.s1[a];
        let s2 = self.s2[b] - self.s2[a];
        (s2 - s1 * s1 / w).max(0.0)
    }
}

/// Optimal `k`-bucket reduction of a 1-D piecewise signal.
///
/// Returns the histogram (over `[1, total length]`) and its weighted SSE. If
/// `k` is at least the number of pieces, the pieces themselves are returned.
pub fn dp_reduce(sig: &PiecewiseSignal, k: usize) -> Result<(BucketHistogram, f64)> {
    if k == 0 {
        return Err(HistError::InvalidParameter("k must be positive".into()));
    }
    let pieces = sig.pieces();
    let m = pieces.len();
    let domain = AttributeDomain::one_dim(sig.total_length())?;
    if k >= m {
        return Ok((histogram_from_cuts(&domain, pieces, &(1..m).collect::<Vec<_>>())?, 0.0));
    }
    let cost = SegmentCost::new(pieces);
    // best[j][i]: min cost of the first i pieces in j+1 buckets; arg stores the last cut
    let mut best = vec![vec![f64::INFINITY; m + 1]; k];
    let mut arg = vec![vec![0usize; m + 1]; k];
    for i in 1..=m {
        best[0][i] = cost.cost(0, i);
    }
    for j in 1..k {
        for i in (j + 1)..=m {
            let (mut b, mut a) = (f64::INFINITY, 0);
            for cut in j..i {
                let c = best[j - 1][cut] + cost.cost(cut, i);
                if c < b {
                    b = c;
                    a = cut;
                }
            }
            best[j][i] = b;
            arg[j][i] = a;
        }
    }
    let mut cuts = Vec::with_capacity(k - 1);
    let mut i = m;
    for j in (1..k).rev() {
        i = arg[j][i];
        cuts.push(i);
    }
    cuts.reverse();
    Ok((histogram_from_cuts(&domain, pieces, &cuts)?, best[k - 1][m]))
}

fn histogram_from_cuts(
    domain: &AttributeDomain,
    pieces: &[(usize, f64)],
    cuts: &[usize],
) -> Result<BucketHistogram> {
    let mut buckets = Vec::with_capacity(cuts.len() + 1);
    let mut cell = 1;
    let mut start = 0;
    for &end in cuts.iter().chain(std::iter::once(&pieces.len())) {
        let len: usize = pieces[start..end].iter().map(|p| p.0).sum();
        let count: f64 = pieces[start..end].iter().map(|&(n, h)| n as f64 * h).sum();
        buckets.push(Bucket::new(vec![Interval::new(cell, cell + len - 1)], count));
        cell += len;
        start = end;
    }
    BucketHistogram::new(domain.clone(), buckets)
}

/// Weighted SSE of a histogram against a dense 1-D signal (reference/test helper).
pub fn histogram_sse(h: &BucketHistogram, values: &[f64]) -> f64 {
    h.buckets()
        .iter()
        .map(|b| {
            let iv = b.bounds[0];
            let mean = b.height();
            values[iv.lo - 1..iv.hi]
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
        })
        .sum()
}

/// Summed-area tables of `h` and `h²` over a d-dimensional grid.
struct BoxStats {
    shape: Vec<usize>,
    strides: Vec<usize>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl BoxStats {
    fn new(values: &[f64], ranges: &[usize]) -> Self {
        let shape: Vec<usize> = ranges.iter().map(|r| r + 1).collect();
        let strides = crate::histcore::domain::row_major_strides(&shape);
        let src = crate::histcore::domain::row_major_strides(ranges);
        let n: usize = shape.iter().product();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let (mut s1, mut s2) = (vec![0.0; n], vec![0.0; n]);
        for (flat, &v) in values.iter().enumerate() {
            let mut rem = flat;
            let mut dst = 0;
            for (i, s) in src.iter().enumerate() {
                dst += (rem / s + 1) * strides[i];
                rem %= s;
            }
            let c = v - mean;
            s1[dst] = c;
            s2[dst] = c * c;
        }
        for axis in 0..shape.len() {
            let stride = strides[axis];
            for flat in 0..n {
                if (flat / stride) % shape[axis] != 0 {
                    s1[flat] += s1[flat - stride];
                    s2[flat] += s2[flat - stride];
                }
            }
        }
        BoxStats {
            shape,
            strides,
            s1,
            s2,
        }
    }

    fn sums(&self, b: &[Interval]) -> (f64, f64) {
        let d = self.shape.len();
        let (mut a1, mut a2) = (0.0, 0.0);
        for mask in 0u32..(1 << d) {
            let mut flat = 0;
            for (i, iv) in b.iter().enumerate() {
                let c = if mask & (1 << i) != 0 { iv.lo - 1 } else { iv.hi };
                flat += c * self.strides[i];
            }
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            a1 += sign * self.s1[flat];
            a2 += sign * self.s2[flat];
        }
        (a1, a2)
    }

    fn sse(&self, b: &[Interval]) -> f64 {
        let vol: f64 = b.iter().map(|iv| iv.len() as f64).product();
        let (s1, s2) = self.sums(b);
        (s2 - s1 * s1 / vol).max(0.0)
    }

    /// Best single axis-aligned cut: `(gain, axis, last cell of the low half)`.
    fn best_split(&self, b: &[Interval]) -> Option<(f64, usize, usize)> {
        let whole = self.sse(b);
        let mut best: Option<(f64, usize, usize)> = None;
        let mut lo_box = b.to_vec();
        let mut hi_box = b.to_vec();
        for axis in 0..b.len() {
            for cut in b[axis].lo..b[axis].hi {
                lo_box[axis] = Interval::new(b[axis].lo, cut);
                hi_box[axis] = Interval::new(cut + 1, b[axis].hi);
                let gain = whole - self.sse(&lo_box) - self.sse(&hi_box);
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, axis, cut));
                }
            }
            lo_box[axis] = b[axis];
            hi_box[axis] = b[axis];
        }
        best
    }
}

/// Greedy reduction of a dense d-dimensional signal to at most `k` boxes.
///
/// Starting from the whole domain, repeatedly applies the single cut with the
/// largest squared-error reduction among all current boxes. Stops early when
/// no cut reduces the error by more than `1e-12` of the initial error.
pub fn greedy_reduce_nd(values: &[f64], domain: &AttributeDomain, k: usize) -> Result<BucketHistogram> {
    if k == 0 {
        return Err(HistError::InvalidParameter("k must be positive".into()));
    }
    if values.len() as u128 != domain.volume() {
        return Err(HistError::LengthMismatch {
            expected: domain.volume() as usize,
            got: values.len(),
        });
    }
    let stats = BoxStats::new(values, domain.ranges());
    let root = domain.full_query().bounds().to_vec();
    let floor = 1e-12 * stats.sse(&root).max(f64::MIN_POSITIVE);
    let mut boxes: Vec<(Vec<Interval>, Option<(f64, usize, usize)>)> =
        vec![(root.clone(), stats.best_split(&root))];
    while boxes.len() < k {
        let pick = boxes
            .iter()
            .enumerate()
            .filter_map(|(i, (_, s))| s.map(|(g, _, _)| (i, g)))
            .fold(None::<(usize, f64)>, |acc, (i, g)| match acc {
                Some((_, bg)) if bg >= g => acc,
                _ => Some((i, g)),
            });
        let Some((i, gain)) = pick else { break };
        if gain <= floor {
            break;
        }
        let (b, split) = boxes.swap_remove(i);
        let (_, axis, cut) = split.unwrap();
        let mut lo = b.clone();
        let mut hi = b;
        hi[axis] = Interval::new(cut + 1, hi[axis].hi);
        lo[axis] = Interval::new(lo[axis].lo, cut);
        let (sl, sh) = (stats.best_split(&lo), stats.best_split(&hi));
        boxes.push((lo, sl));
        boxes.push((hi, sh));
    }
    // deterministic bucket order: lexicographic by lower corner
    boxes.sort_by(|a, b| {
        a.0.iter()
            .map(|iv| iv.lo)
            .cmp(b.0.iter().map(|iv| iv.lo))
    });
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let buckets = boxes
        .into_iter()
        .map(|(b, _)| {
            let vol: f64 = b.iter().map(|iv| iv.len() as f64).product();
            let (s1, _) = stats.sums(&b);
            Bucket::new(b, s1 + mean * vol)
        })
        .collect();
    BucketHistogram::new(domain.clone(), buckets)
}
