//! Equi-width histograms fitted by least squares on query feedback.
//!
//! Bucket heights `w` are the unknowns; a query's estimate is `xᵀw` where
//! `x_j = |q ∩ bucket_j|`. The fit minimizes `(1/N) Σ (xᵢᵀw − sᵢ)² + ε‖w‖²`
//! through accumulated normal equations `G = Σ xᵢxᵢᵀ`, `c = Σ xᵢsᵢ`.

use nalgebra::DMatrix;

use crate::error::{HistError, Result};
use crate::histcore::{AttributeDomain, Bucket, BucketHistogram, Interval, QueryFeedbackRecord, RangeQuery};
use crate::linalg::solve_ridge;

/// Equi-width grid of `b₁ × … × b_d` buckets. Widths along a dimension differ
/// by at most one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquiLayout {
    domain: AttributeDomain,
    per_dim: Vec<usize>,
    // bucket t of dimension i covers [starts[i][t], starts[i][t+1] - 1]
    starts: Vec<Vec<usize>>,
}

impl EquiLayout {
    pub fn new(domain: AttributeDomain, per_dim: Vec<usize>) -> Result<Self> {
        if per_dim.len() != domain.dims() {
            return Err(HistError::InvalidParameter(format!(
                "{} bucket counts for a {}-dimensional domain",
                per_dim.len(),
                domain.dims()
            )));
        }
        let mut starts = Vec::with_capacity(per_dim.len());
        for (i, (&b, &r)) in per_dim.iter().zip(domain.ranges()).enumerate() {
            if b == 0 || b > r {
                return Err(HistError::InvalidParameter(format!(
                    "dimension {i}: {b} buckets over range {r}"
                )));
            }
            starts.push((0..=b).map(|t| t * r / b + 1).collect());
        }
        Ok(EquiLayout {
            domain,
            per_dim,
            starts,
        })
    }

    /// Splits a total bucket budget evenly across dimensions (`b_i = round(k^{1/d})`).
    pub fn with_total(domain: AttributeDomain, total: usize) -> Result<Self> {
        if total == 0 {
            return Err(HistError::InvalidParameter("bucket budget must be positive".into()));
        }
        let d = domain.dims();
        let per = if d == 1 {
            total
        } else {
            (total as f64).powf(1.0 / d as f64).round().max(1.0) as usize
        };
        let per_dim = domain.ranges().iter().map(|&r| per.min(r)).collect();
        Self::new(domain, per_dim)
    }

    pub fn domain(&self) -> &AttributeDomain {
        &self.domain
    }

    pub fn per_dim(&self) -> &[usize] {
        &self.per_dim
    }

    pub fn bucket_count(&self) -> usize {
        self.per_dim.iter().product()
    }

    fn unflatten(&self, mut j: usize) -> Vec<usize> {
        let mut idx = vec![0; self.per_dim.len()];
        for i in (0..self.per_dim.len()).rev() {
            idx[i] = j % self.per_dim[i];
            j /= self.per_dim[i];
        }
        idx
    }

    pub fn bucket_bounds(&self, j: usize) -> Vec<Interval> {
        self.unflatten(j)
            .iter()
            .zip(&self.starts)
            .map(|(&t, s)| Interval::new(s[t], s[t + 1] - 1))
            .collect()
    }

    pub fn bucket_volume(&self, j: usize) -> f64 {
        self.bucket_bounds(j).iter().map(|b| b.len() as f64).product()
    }

    /// Non-zero entries of `Bᵀq` as `(bucket, overlap volume)`, in increasing bucket order.
    pub fn sparse_overlap(&self, q: &RangeQuery) -> Vec<(usize, f64)> {
        let per_axis: Vec<Vec<(usize, f64)>> = q
            .bounds()
            .iter()
            .zip(&self.starts)
            .map(|(iv, s)| {
                let b = s.len() - 1;
                // first bucket whose end reaches iv.lo
                let mut t = s.partition_point(|&start| start <= iv.lo) - 1;
                let mut out = Vec::new();
                while t < b && s[t] <= iv.hi {
                    let ov = iv.overlap(&Interval::new(s[t], s[t + 1] - 1));
                    out.push((t, ov as f64));
                    t += 1;
                }
                out
            })
            .collect();
        let mut acc: Vec<(usize, f64)> = vec![(0, 1.0)];
        for (axis, entries) in per_axis.iter().enumerate() {
            let b = self.per_dim[axis];
            let mut next = Vec::with_capacity(acc.len() * entries.len());
            for &(j, v) in &acc {
                for &(t, o) in entries {
                    next.push((j * b + t, v * o));
                }
            }
            acc = next;
        }
        acc
    }

    /// Dense `Bᵀq`: overlap volume of `q` with each bucket.
    pub fn bucket_overlap(&self, q: &RangeQuery) -> Result<Vec<f64>> {
        q.check_within(&self.domain)?;
        let mut x = vec![0.0; self.bucket_count()];
        for (j, v) in self.sparse_overlap(q) {
            x[j] = v;
        }
        Ok(x)
    }

    /// Histogram with bucket `j` holding `heights[j] · volume_j` records.
    pub fn histogram(&self, heights: &[f64]) -> Result<BucketHistogram> {
        if heights.len() != self.bucket_count() {
            return Err(HistError::LengthMismatch {
                expected: self.bucket_count(),
                got: heights.len(),
            });
        }
        let buckets = heights
            .iter()
            .enumerate()
            .map(|(j, &w)| Bucket::new(self.bucket_bounds(j), w * self.bucket_volume(j)))
            .collect();
        BucketHistogram::new(self.domain.clone(), buckets)
    }
}

/// Weighted sufficient statistics `G = Σ γ xxᵀ`, `c = Σ γ x s`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    pub gram: DMatrix<f64>,
    pub rhs: Vec<f64>,
    /// Total observation weight (equals the count when unweighted).
    pub weight: f64,
}

impl NormalEquations {
    pub fn new(dim: usize) -> Self {
        NormalEquations {
            gram: DMatrix::zeros(dim, dim),
            rhs: vec![0.0; dim],
            weight: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Adds one observation with sparse features `x` and target `s`.
    pub fn add(&mut self, x: &[(usize, f64)], s: f64) {
        for &(i, xi) in x {
            self.rhs[i] += xi * s;
            for &(j, xj) in x {
                self.gram[(i, j)] += xi * xj;
            }
        }
        self.weight += 1.0;
    }

    /// Multiplies all accumulated statistics by `gamma`.
    pub fn decay(&mut self, gamma: f64) {
        if gamma != 1.0 {
            self.gram *= gamma;
            self.rhs.iter_mut().for_each(|v| *v *= gamma);
            self.weight *= gamma;
        }
    }

    /// Combines statistics from a disjoint shard.
    pub fn merge(&mut self, other: &NormalEquations) {
        debug_assert_eq!(self.dim(), other.dim());
        self.gram += &other.gram;
        self.rhs.iter_mut().zip(&other.rhs).for_each(|(a, b)| *a += b);
        self.weight += other.weight;
    }

    /// Solves `(G/W + ε I) w = c/W` where `W` is the total weight.
    pub fn solve(&self, ridge: f64) -> Result<(Vec<f64>, f64, f64)> {
        if self.weight <= 0.0 {
            return Err(HistError::NoData);
        }
        let g = &self.gram / self.weight;
        let c: Vec<f64> = self.rhs.iter().map(|v| v / self.weight).collect();
        let sol = solve_ridge(&g, &c, ridge);
        Ok((sol.x, sol.ridge, sol.condition))
    }
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LsFit {
    /// Per-bucket heights.
    pub weights: Vec<f64>,
    /// Ridge actually used (differs from the request when the fallback kicked in).
    pub ridge: f64,
    /// `‖𝒬ᵀBw − s‖₂` over the training set.
    pub residual_norm: f64,
    /// Pivot ratio of the Cholesky factor.
    pub condition: f64,
}

/// Fits equi-width bucket heights to the feedback records.
pub fn fit_equihist(
    qfrs: &[QueryFeedbackRecord],
    layout: &EquiLayout,
    ridge: f64,
) -> Result<(LsFit, BucketHistogram)> {
    if qfrs.is_empty() {
        return Err(HistError::NoData);
    }
    if !(ridge >= 0.0) {
        return Err(HistError::InvalidParameter(format!("ridge {ridge} must be >= 0")));
    }
    let mut ne = NormalEquations::new(layout.bucket_count());
    let mut features = Vec::with_capacity(qfrs.len());
    for r in qfrs {
        r.query.check_within(layout.domain())?;
        let x = layout.sparse_overlap(&r.query);
        ne.add(&x, r.cardinality);
        features.push(x);
    }
    let (weights, used, condition) = ne.solve(ridge)?;
    let residual_norm = features
        .iter()
        .zip(qfrs)
        .map(|(x, r)| {
            let e: f64 = x.iter().map(|&(j, v)| v * weights[j]).sum::<f64>() - r.cardinality;
            e * e
        })
        .sum::<f64>()
        .sqrt();
    let hist = layout.histogram(&weights)?;
    Ok((
        LsFit {
            weights,
            ridge: used,
            residual_norm,
            condition,
        },
        hist,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qfr(lo: usize, hi: usize, s: f64) -> QueryFeedbackRecord {
        QueryFeedbackRecord::new(RangeQuery::one_dim(lo, hi).unwrap(), s).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let l = EquiLayout::new(AttributeDomain::one_dim(8).unwrap(), vec![2]).unwrap();
        assert_eq!(l.bucket_overlap(&RangeQuery::one_dim(3, 6).unwrap()).unwrap(), vec![2.0, 2.0]);
        assert_eq!(l.bucket_overlap(&RangeQuery::one_dim(1, 8).unwrap()).unwrap(), vec![4.0, 4.0]);

        let l2 = EquiLayout::new(AttributeDomain::new(vec![4, 4]).unwrap(), vec![2, 2]).unwrap();
        let q = RangeQuery::new(vec![Interval::new(1, 2), Interval::new(2, 3)]).unwrap();
        assert_eq!(l2.bucket_overlap(&q).unwrap(), vec![2.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn uneven_widths_differ_by_one() {
        let l = EquiLayout::new(AttributeDomain::one_dim(10).unwrap(), vec![3]).unwrap();
        let widths: Vec<usize> = (0..3).map(|j| l.bucket_bounds(j)[0].len()).collect();
        assert_eq!(widths.iter().sum::<usize>(), 10);
        assert!(widths.iter().max().unwrap() - widths.iter().min().unwrap() <= 1);
        assert!(EquiLayout::new(AttributeDomain::one_dim(3).unwrap(), vec![4]).is_err());
    }

    #[test]
    fn two_bucket_fit() {
        let l = EquiLayout::new(AttributeDomain::one_dim(4).unwrap(), vec![2]).unwrap();
        let (fit, h) = fit_equihist(&[qfr(1, 2, 2.0), qfr(3, 4, 6.0), qfr(1, 4, 8.0)], &l, 0.0).unwrap();
        assert!((fit.weights[0] - 1.0).abs() < 1e-10);
        assert!((fit.weights[1] - 3.0).abs() < 1e-10);
        assert!(fit.residual_norm < 1e-9);
        assert!((h.buckets()[0].count - 2.0).abs() < 1e-9);
        assert!((h.buckets()[1].count - 6.0).abs() < 1e-9);
    }

    #[test]
    fn single_bucket_fit() {
        let l = EquiLayout::new(AttributeDomain::one_dim(10).unwrap(), vec![1]).unwrap();
        let (fit, _) = fit_equihist(&[qfr(1, 10, 50.0)], &l, 0.0).unwrap();
        assert!((fit.weights[0] - 5.0).abs() < 1e-10);
    }

    #[test]
    fn singular_design_uses_fallback_ridge() {
        let l = EquiLayout::new(AttributeDomain::one_dim(4).unwrap(), vec![2]).unwrap();
        // bucket 2 never observed
        let (fit, _) = fit_equihist(&[qfr(1, 2, 4.0)], &l, 0.0).unwrap();
        assert!(fit.ridge > 0.0);
        assert!((fit.weights[0] - 2.0).abs() < 1e-6);
        assert!(fit.weights[1].abs() < 1e-6);
    }

    #[test]
    fn rejects_empty_and_negative_ridge() {
        let l = EquiLayout::new(AttributeDomain::one_dim(4).unwrap(), vec![2]).unwrap();
        assert!(matches!(fit_equihist(&[], &l, 0.0), Err(HistError::NoData)));
        assert!(fit_equihist(&[qfr(1, 2, 1.0)], &l, -1.0).is_err());
    }

    #[test]
    fn with_total_takes_dth_root() {
        let l = EquiLayout::with_total(AttributeDomain::new(vec![32, 32]).unwrap(), 64).unwrap();
        assert_eq!(l.per_dim(), &[8, 8]);
        let l3 = EquiLayout::with_total(AttributeDomain::new(vec![32; 3]).unwrap(), 216).unwrap();
        assert_eq!(l3.per_dim(), &[6, 6, 6]);
    }
}
