//! Orthogonal matching pursuit over Haar coefficients.
//!
//! The measurement matrix `A = 𝒬ᵀΨᵀ` (one row per query, one column per
//! coefficient) is never formed. Correlations `Aᵀz` are obtained as the Haar
//! transform of the weighted query tensor `Σᵢ zᵢ·1_{qᵢ}`, which is built with
//! a difference array and prefix sums. Only the columns of selected atoms are
//! evaluated explicitly, each entry in `O(d)` via [`range_basis_dot`].

use nalgebra::DMatrix;

use crate::error::{HistError, Result};
use crate::haar::{self, range_basis_dot, HaarIndex, PaddedDomain};
use crate::histcore::{CellLimit, QueryFeedbackRecord, WaveletSketch};
use crate::linalg::solve_ridge;

/// How the next atom is chosen from the correlations `zᵀA_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// `argmax_j zᵀA_j` (only positively correlated atoms can be picked).
    Signed,
    /// `argmax_j |zᵀA_j|`.
    #[default]
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpOptions {
    /// Support budget.
    pub k: usize,
    pub selection_rule: SelectionRule,
    /// Divide correlations by `‖A_j‖₂` before selection.
    pub normalize_columns: bool,
    /// Stop once `‖z‖₂` drops to this value.
    pub min_residual: f64,
    /// Ridge on the support least squares (0 = plain, with singular fallback).
    pub ridge: f64,
    pub cell_limit: CellLimit,
}

impl OmpOptions {
    pub fn new(k: usize) -> Self {
        OmpOptions {
            k,
            selection_rule: SelectionRule::default(),
            normalize_columns: false,
            min_residual: 0.0,
            ridge: 0.0,
            cell_limit: CellLimit::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Support reached the budget.
    Budget,
    /// No remaining atom has a usable correlation with the residual.
    ZeroCorrelation,
    /// Residual fell to `min_residual`.
    ResidualThreshold,
}

#[derive(Debug, Clone)]
pub struct OmpResult {
    pub sketch: WaveletSketch,
    /// Selected flat indices in selection order.
    pub selected: Vec<usize>,
    /// `‖z_t‖₂` for `t = 0..=|S|` (entry 0 is `‖s‖₂`).
    pub residual_norms: Vec<f64>,
    pub stop: StopReason,
}

/// Accumulates `Σᵢ wᵢ·1_{qᵢ}` over the padded grid.
pub(crate) fn weighted_query_tensor(
    qfrs: &[QueryFeedbackRecord],
    weights: &[f64],
    shape: &[usize],
    strides: &[usize],
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let d = shape.len();
    for (r, &w) in qfrs.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let b = r.query.bounds();
        'corner: for mask in 0u32..(1 << d) {
            let mut flat = 0;
            for i in 0..d {
                let coord = if mask & (1 << i) != 0 { b[i].hi } else { b[i].lo - 1 };
                if coord >= shape[i] {
                    continue 'corner;
                }
                flat += coord * strides[i];
            }
            if mask.count_ones() % 2 == 0 {
                out[flat] += w;
            } else {
                out[flat] -= w;
            }
        }
    }
    for axis in 0..d {
        let stride = strides[axis];
        let n = shape[axis];
        for flat in 0..out.len() {
            if (flat / stride) % n != 0 {
                out[flat] += out[flat - stride];
            }
        }
    }
}

/// Correlations `Aᵀz` for every coefficient (flat order, 0-based).
pub fn correlations(
    qfrs: &[QueryFeedbackRecord],
    z: &[f64],
    domain: &PaddedDomain,
    limit: CellLimit,
) -> Result<Vec<f64>> {
    let cells = limit.check(domain.volume())?;
    let mut t = vec![0.0; cells];
    weighted_query_tensor(qfrs, z, domain.padded(), &domain.strides(), &mut t);
    haar::fwt_nd_in_place(&mut t, domain.padded())?;
    Ok(t)
}

fn decode(domain: &PaddedDomain, flat: usize) -> Result<Vec<HaarIndex>> {
    domain
        .unflatten(flat)?
        .iter()
        .zip(domain.padded())
        .map(|(&j, &n)| HaarIndex::from_flat(j, n))
        .collect()
}

/// Column `A_j` (one entry per query) for a 1-based flat coefficient index.
pub fn column(qfrs: &[QueryFeedbackRecord], domain: &PaddedDomain, flat: usize) -> Result<Vec<f64>> {
    let js = decode(domain, flat)?;
    Ok(qfrs
        .iter()
        .map(|r| range_basis_dot(r.query.bounds(), &js, domain.padded()))
        .collect())
}

/// `‖A_j‖₂` for every coefficient, via per-dimension factors.
fn column_norms(qfrs: &[QueryFeedbackRecord], domain: &PaddedDomain, cells: usize) -> Vec<f64> {
    let padded = domain.padded();
    let indices: Vec<Vec<HaarIndex>> = padded
        .iter()
        .map(|&n| (1..=n).map(|j| HaarIndex::from_flat(j, n).unwrap()).collect())
        .collect();
    let mut norms2 = vec![0.0; cells];
    let mut acc = Vec::with_capacity(cells);
    for r in qfrs {
        acc.clear();
        acc.push(1.0);
        for (dim, iv) in r.query.bounds().iter().enumerate() {
            let n = padded[dim];
            let factors: Vec<f64> = indices[dim]
                .iter()
                .map(|&j| haar::range_basis_dot_1d(*iv, j, n).powi(2))
                .collect();
            let mut next = Vec::with_capacity(acc.len() * n);
            for &a in &acc {
                next.extend(factors.iter().map(|f| a * f));
            }
            acc = next;
        }
        norms2.iter_mut().zip(&acc).for_each(|(s, v)| *s += v);
    }
    norms2.into_iter().map(f64::sqrt).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy sparse recovery of Haar coefficients from feedback records.
pub fn omp(qfrs: &[QueryFeedbackRecord], domain: &PaddedDomain, opts: &OmpOptions) -> Result<OmpResult> {
    if qfrs.is_empty() {
        return Err(HistError::NoData);
    }
    let cells = opts.cell_limit.check(domain.volume())?;
    if opts.k == 0 || opts.k > cells {
        return Err(HistError::InvalidParameter(format!(
            "support budget {} outside 1..={cells}",
            opts.k
        )));
    }
    for r in qfrs {
        r.query.check_within(domain.original())?;
    }
    let s: Vec<f64> = qfrs.iter().map(|r| r.cardinality).collect();
    let shape = domain.padded().to_vec();
    let strides = domain.strides();
    let norms = opts
        .normalize_columns
        .then(|| column_norms(qfrs, domain, cells));

    let mut z = s.clone();
    let mut tensor = vec![0.0; cells];
    let mut selected: Vec<usize> = Vec::new();
    let mut in_support = vec![false; cells];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut gram = DMatrix::<f64>::zeros(0, 0);
    let mut rhs: Vec<f64> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut residual_norms = vec![dot(&z, &z).sqrt()];
    let mut first_best: Option<f64> = None;
    let mut stop = StopReason::Budget;

    while selected.len() < opts.k {
        if *residual_norms.last().unwrap() <= opts.min_residual {
            stop = StopReason::ResidualThreshold;
            break;
        }
        weighted_query_tensor(qfrs, &z, &shape, &strides, &mut tensor);
        haar::fwt_nd_in_place(&mut tensor, &shape)?;

        let mut best: Option<(usize, f64)> = None;
        for (j, &c) in tensor.iter().enumerate() {
            if in_support[j] {
                continue;
            }
            let mut score = match opts.selection_rule {
                SelectionRule::Signed => c,
                SelectionRule::Absolute => c.abs(),
            };
            if let Some(n) = &norms {
                if n[j] == 0.0 {
                    continue;
                }
                score /= n[j];
            }
            // strict comparison keeps the smallest index on ties
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let Some((j, score)) = best else {
            stop = StopReason::ZeroCorrelation;
            break;
        };
        let reference = *first_best.get_or_insert(score.abs());
        if !(score > 1e-12 * reference) || reference == 0.0 {
            stop = StopReason::ZeroCorrelation;
            break;
        }

        let flat = j + 1;
        let col = column(qfrs, domain, flat)?;
        let t = columns.len();
        let mut g = DMatrix::zeros(t + 1, t + 1);
        g.view_mut((0, 0), (t, t)).copy_from(&gram);
        for (m, other) in columns.iter().enumerate() {
            let v = dot(&col, other);
            g[(t, m)] = v;
            g[(m, t)] = v;
        }
        g[(t, t)] = dot(&col, &col);
        gram = g;
        rhs.push(dot(&col, &s));
        columns.push(col);
        in_support[j] = true;
        selected.push(flat);

        alpha = solve_ridge(&gram, &rhs, opts.ridge).x;
        z.copy_from_slice(&s);
        for (a, col) in alpha.iter().zip(&columns) {
            for (zi, ci) in z.iter_mut().zip(col) {
                *zi -= a * ci;
            }
        }
        residual_norms.push(dot(&z, &z).sqrt());
    }

    let entries = selected.iter().copied().zip(alpha.iter().copied()).collect();
    Ok(OmpResult {
        sketch: WaveletSketch::new(domain.clone(), entries)?,
        selected,
        residual_norms,
        stop,
    })
}
