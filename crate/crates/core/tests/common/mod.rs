//! Reference oracles shared by the property tests and the acceptance suite.
//!
//! Every oracle here is built from definitions (dense matrices, cell-by-cell
//! sums, exhaustive enumeration) and never calls the fast paths it checks.

#![allow(dead_code)]

use histlearn_core::equihist::{fit_equihist, EquiLayout, NormalEquations};
use histlearn_core::haar::{fwt, fwt_nd, haar_matrix, ifwt};
use histlearn_core::sphist::omp::{column, correlations, omp, OmpOptions};
use histlearn_core::sphist::reduce::{dp_reduce, histogram_sse, PiecewiseSignal};
use histlearn_core::{
    AttributeDomain, CellLimit, Interval, OnlineState, PaddedDomain, QueryFeedbackRecord, RangeQuery,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 1.0);
        Dense { n, data }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j) * x[i]).sum())
            .collect()
    }

    pub fn kron(&self, other: &Dense) -> Dense {
        let n = self.n * other.n;
        let mut data = vec![0.0; n * n];
        for i in 0..self.n {
            for j in 0..self.n {
                let a = self.at(i, j);
                for p in 0..other.n {
                    for q in 0..other.n {
                        data[(i * other.n + p) * n + j * other.n + q] = a * other.at(p, q);
                    }
                }
            }
        }
        Dense { n, data }
    }

    /// `max |self·selfᵀ − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let dot: f64 = (0..self.n).map(|c| self.at(i, c) * self.at(j, c)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Haar matrix by the recursion `H₂ₙ = [Hₙ ⊗ (1,1)/√2 ; Iₙ ⊗ (1,−1)/√2]`.
pub fn haar_oracle(n: usize) -> Dense {
    assert!(n.is_power_of_two());
    let mut h = Dense {
        n: 1,
        data: vec![1.0],
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    while h.n < n {
        let m = h.n;
        let n2 = 2 * m;
        let mut data = vec![0.0; n2 * n2];
        for i in 0..m {
            for j in 0..m {
                data[i * n2 + 2 * j] = h.at(i, j) * s;
                data[i * n2 + 2 * j + 1] = h.at(i, j) * s;
            }
            data[(m + i) * n2 + 2 * i] = s;
            data[(m + i) * n2 + 2 * i + 1] = -s;
        }
        h = Dense { n: n2, data };
    }
    h
}

/// Separable transform matrix for a row-major tensor of `shape`.
pub fn haar_oracle_nd(shape: &[usize]) -> Dense {
    shape
        .iter()
        .fold(Dense::identity(1), |acc, &n| acc.kron(&haar_oracle(n)))
}

/// Indicator of `q` on the row-major grid `shape`.
pub fn indicator(q: &RangeQuery, shape: &[usize]) -> Vec<f64> {
    let total: usize = shape.iter().product();
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut inside = true;
            for (i, iv) in q.bounds().iter().enumerate().rev() {
                let c = rem % shape[i] + 1;
                rem /= shape[i];
                inside &= iv.lo <= c && c <= iv.hi;
            }
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Dense measurement matrix rows `Ψ·1_q` (one per record).
pub fn dense_rows(qfrs: &[QueryFeedbackRecord], shape: &[usize]) -> Vec<Vec<f64>> {
    let psi = haar_oracle_nd(shape);
    qfrs.iter()
        .map(|r| psi.mul_vec(&indicator(&r.query, shape)))
        .collect()
}

pub fn random_query(rng: &mut impl Rng, ranges: &[usize]) -> RangeQuery {
    let bounds = ranges
        .iter()
        .map(|&r| {
            let a = rng.random_range(1..=r);
            let b = rng.random_range(1..=r);
            Interval::new(a.min(b), a.max(b))
        })
        .collect();
    RangeQuery::new(bounds).unwrap()
}

pub fn random_qfrs(rng: &mut impl Rng, ranges: &[usize], n: usize, scale: f64) -> Vec<QueryFeedbackRecord> {
    (0..n)
        .map(|_| {
            let q = random_query(rng, ranges);
            QueryFeedbackRecord::new(q, rng.random_range(0.0..scale)).unwrap()
        })
        .collect()
}

/// Random piecewise-constant signal with `pieces` runs of length `1..=max_len`.
pub fn random_pieces(rng: &mut impl Rng, pieces: usize, max_len: usize) -> Vec<(usize, f64)> {
    (0..pieces)
        .map(|_| (rng.random_range(1..=max_len), rng.random_range(-50.0..50.0_f64).round()))
        .collect()
}

/// Padded signal of length `n` with `k` constant pieces.
pub fn random_k_piecewise(rng: &mut impl Rng, n: usize, k: usize) -> Vec<f64> {
    let mut cuts: Vec<usize> = (0..k - 1).map(|_| rng.random_range(1..n)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = vec![0.0; n];
    let mut level = rng.random_range(-10.0..10.0);
    let mut next = 0;
    for (i, v) in out.iter_mut().enumerate() {
        if next < cuts.len() && i == cuts[next] {
            level = rng.random_range(-10.0..10.0);
            next += 1;
        }
        *v = level;
    }
    out
}

pub fn count_runs(values: &[f64], tol: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    1 + values.windows(2).filter(|w| (w[0] - w[1]).abs() > tol).count()
}

/// Minimum SSE of any partition of `values` into at most `k` contiguous buckets,
/// by enumerating every set of cut positions.
pub fn brute_force_v_optimal(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    let sse = |a: usize, b: usize| {
        let seg = &values[a..b];
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    };
    fn rec(start: usize, left: usize, n: usize, sse: &dyn Fn(usize, usize) -> f64) -> f64 {
        if left == 1 {
            return sse(start, n);
        }
        let mut best = sse(start, n);
        for cut in start + 1..n {
            best = best.min(sse(start, cut) + rec(cut, left - 1, n, sse));
        }
        best
    }
    rec(0, k.min(n), n, &sse)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---- individual checks; each returns the worst observed defect ----

pub fn check_orthonormality() -> f64 {
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 4, 8, 16, 32, 64, 128, 256] {
        let h = haar_matrix(n).unwrap();
        let dense = Dense {
            n,
            data: (0..n * n).map(|i| h[(i / n, i % n)]).collect(),
        };
        worst = worst.max(dense.orthonormality_defect());
        let oracle = haar_oracle(n);
        worst = worst.max(max_abs_diff(&dense.data, &oracle.data));
    }
    worst
}

pub fn check_fast_vs_dense(rng: &mut impl Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 8, 64, 512] {
        let psi = haar_oracle(n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let fast = fwt(&x, n).unwrap();
        worst = worst.max(max_abs_diff(&fast, &psi.mul_vec(&x)));
        let back = ifwt(&fast, n).unwrap();
        worst = worst.max(max_abs_diff(&back, &x));
        worst = worst.max(max_abs_diff(&ifwt(&x, n).unwrap(), &psi.transpose_mul_vec(&x)));
    }
    for shape in [vec![4usize, 8], vec![2, 4, 2], vec![8, 8]] {
        let psi = haar_oracle_nd(&shape);
        let x: Vec<f64> = (0..psi.n).map(|_| rng.random_range(-100.0..100.0)).collect();
        worst = worst.max(max_abs_diff(&fwt_nd(&x, &shape).unwrap(), &psi.mul_vec(&x)));
    }
    worst
}

/// Returns `(max nnz − bound, max pieces − bound)`; both must be ≤ 0.
pub fn check_sparsity_bounds(rng: &mut impl Rng) -> (i64, i64) {
    let (mut nnz_excess, mut piece_excess) = (i64::MIN, i64::MIN);
    for _ in 0..200 {
        let log = rng.random_range(1..=9u32);
        let n = 1usize << log;
        let k = rng.random_range(1..=n.min(12));
        let h = random_k_piecewise(rng, n, k);
        let alpha = fwt(&h, n).unwrap();
        let scale = alpha.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let nnz = alpha.iter().filter(|v| v.abs() > 1e-9 * scale.max(1.0)).count() as i64;
        nnz_excess = nnz_excess.max(nnz - (k as i64 * log as i64 + 1));

        let k2 = rng.random_range(1..=n.min(12));
        let mut a = vec![0.0; n];
        for _ in 0..k2 {
            a[rng.random_range(0..n)] = rng.random_range(-10.0..10.0);
        }
        let nonzero = a.iter().filter(|v| **v != 0.0).count() as i64;
        let runs = count_runs(&ifwt(&a, n).unwrap(), 1e-9) as i64;
        piece_excess = piece_excess.max(runs - (3 * nonzero + 1));
    }
    (nnz_excess, piece_excess)
}

/// `(worst residual increase, worst normalized support correlation)`.
pub fn check_omp(rng: &mut impl Rng) -> (f64, f64) {
    let (mut mono, mut orth) = (f64::MIN, 0.0_f64);
    for case in 0..40 {
        let ranges: Vec<usize> = if case % 3 == 0 { vec![8, 4] } else { vec![rng.random_range(2..=64)] };
        let n = rng.random_range(3..40);
        let qfrs = random_qfrs(rng, &ranges, n, 1000.0);
        let domain = PaddedDomain::new(AttributeDomain::new(ranges.clone()).unwrap());
        let k = rng.random_range(1..=n.min(domain.volume() as usize));
        let res = omp(&qfrs, &domain, &OmpOptions::new(k)).unwrap();
        for w in res.residual_norms.windows(2) {
            mono = mono.max((w[1] - w[0]) / w[0].max(1e-300));
        }
        let s: Vec<f64> = qfrs.iter().map(|r| r.cardinality).collect();
        let mut resid = s.clone();
        let cols: Vec<Vec<f64>> = res
            .sketch
            .entries()
            .iter()
            .map(|&(j, _)| column(&qfrs, &domain, j).unwrap())
            .collect();
        for (col, &(_, a)) in cols.iter().zip(res.sketch.entries()) {
            resid.iter_mut().zip(col).for_each(|(r, c)| *r -= a * c);
        }
        for col in &cols {
            let denom = norm(col) * norm(&s);
            if denom > 0.0 {
                orth = orth.max(dot(col, &resid).abs() / denom);
            }
        }
    }
    (mono, orth)
}

/// Worst `(dp SSE − brute force) / max(1, brute force)` and reported-vs-actual SSE gap.
pub fn check_dp(rng: &mut impl Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..60 {
        let m = rng.random_range(1..=12);
        let pieces = random_pieces(rng, m, 3);
        let sig = PiecewiseSignal::new(pieces).unwrap();
        let dense = sig.to_dense();
        for k in 1..=6 {
            let (h, sse) = dp_reduce(&sig, k).unwrap();
            let brute = brute_force_v_optimal(&dense, k);
            let scale = brute.max(1.0);
            worst = worst.max((sse - brute).abs() / scale);
            worst = worst.max((histogram_sse(&h, &dense) - sse).abs() / scale);
            if h.len() > k {
                worst = f64::INFINITY;
            }
        }
    }
    worst
}

pub fn check_lazy_correlations(rng: &mut impl Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for ranges in [vec![16usize], vec![13], vec![8, 8], vec![5, 3], vec![4, 2, 4]] {
        let qfrs = random_qfrs(rng, &ranges, 25, 500.0);
        let domain = PaddedDomain::new(AttributeDomain::new(ranges).unwrap());
        let z: Vec<f64> = (0..qfrs.len()).map(|_| rng.random_range(-50.0..50.0)).collect();
        let lazy = correlations(&qfrs, &z, &domain, CellLimit::default()).unwrap();
        let rows = dense_rows(&qfrs, domain.padded());
        let dense: Vec<f64> = (0..lazy.len())
            .map(|j| rows.iter().zip(&z).map(|(row, zi)| row[j] * zi).sum())
            .collect();
        let scale = dense.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        worst = worst.max(max_abs_diff(&lazy, &dense) / scale);
        for j in 1..=lazy.len() {
            let col = column(&qfrs, &domain, j).unwrap();
            let expect: Vec<f64> = rows.iter().map(|row| row[j - 1]).collect();
            worst = worst.max(max_abs_diff(&col, &expect));
        }
    }
    worst
}

pub fn check_online_vs_batch(rng: &mut impl Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let ranges = if rng.random_bool(0.5) { vec![rng.random_range(8..200)] } else { vec![12, 9] };
        let domain = AttributeDomain::new(ranges.clone()).unwrap();
        let b = rng.random_range(1..=8);
        let layout = EquiLayout::with_total(domain, b * if ranges.len() == 2 { b } else { 1 }).unwrap();
        let n = rng.random_range(1..80);
        let qfrs = random_qfrs(rng, &ranges, n, 5000.0);
        let ridge = [0.0, 1e-3, 1.0][rng.random_range(0..3)];
        let mut st = OnlineState::new(layout.clone(), Some(ridge), 1.0).unwrap();
        qfrs.iter().for_each(|r| st.observe(r).unwrap());
        let online = st.weights().unwrap();
        let (fit, _) = fit_equihist(&qfrs, &layout, ridge).unwrap();
        let scale = fit.weights.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        worst = worst.max(max_abs_diff(&online, &fit.weights) / scale);
    }
    worst
}

/// Worst relative gradient `‖Gw − c‖∞ / (‖G‖·‖w‖ + ‖c‖)` of the unregularized normal equations.
pub fn check_normal_equations(rng: &mut impl Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let r = rng.random_range(16..300);
        let domain = AttributeDomain::one_dim(r).unwrap();
        let b = rng.random_range(1..=10);
        let layout = EquiLayout::new(domain, vec![b]).unwrap();
        // enough records that G is well conditioned
        let qfrs = random_qfrs(rng, &[r], 20 * b, 10_000.0);
        let mut ne = NormalEquations::new(b);
        for q in &qfrs {
            ne.add(&layout.sparse_overlap(&q.query), q.cardinality);
        }
        let (fit, _) = fit_equihist(&qfrs, &layout, 0.0).unwrap();
        if fit.ridge > 0.0 {
            continue;
        }
        let w = &fit.weights;
        let gmax = ne.gram.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let cmax = ne.rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let wmax = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..b {
            let gi: f64 = (0..b).map(|j| ne.gram[(i, j)] * w[j]).sum();
            worst = worst.max((gi - ne.rhs[i]).abs() / (b as f64 * gmax * wmax + cmax));
        }
    }
    worst
}

/// Runs every property with its tolerance; returns one message per violation.
pub fn run_property_suite(seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, tol: f64| {
        if !(value <= tol) {
            failures.push(format!("{name}: {value:e} > {tol:e}"));
        }
    };
    check("haar orthonormality", check_orthonormality(), 1e-12);
    check("fast vs dense transform", check_fast_vs_dense(&mut rng), 1e-10);
    let (nnz, pieces) = check_sparsity_bounds(&mut rng);
    check("sparsity bound excess", nnz as f64, 0.0);
    check("inverse piece bound excess", pieces as f64, 0.0);
    let (mono, orth) = check_omp(&mut rng);
    check("omp residual increase", mono, 1e-12);
    check("omp support orthogonality", orth, 1e-8);
    check("dp vs brute force", check_dp(&mut rng), 1e-9);
    check("lazy vs dense correlations", check_lazy_correlations(&mut rng), 1e-9);
    check("online vs batch", check_online_vs_batch(&mut rng), 1e-6);
    check("normal-equation optimality", check_normal_equations(&mut rng), 1e-8);
    failures
}
