//! Symmetric positive (semi)definite solves for normal equations.

use nalgebra::{DMatrix, DVector};

/// Relative ridge applied when the system is singular: `1e-8 · trace / n`.
pub const FALLBACK_RIDGE_FACTOR: f64 = 1e-8;

// pivots below this fraction of the largest diagonal entry count as singular
const PIVOT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct RidgeSolution {
    pub x: Vec<f64>,
    /// Ridge actually added to the diagonal.
    pub ridge: f64,
    /// Ratio of largest to smallest Cholesky pivot (squared), a cheap conditioning proxy.
    pub condition: f64,
}

fn try_cholesky(a: &DMatrix<f64>) -> Option<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    let max_diag = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let chol = a.clone().cholesky()?;
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..a.nrows() {
        let p = l[(i, i)] * l[(i, i)];
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if a.nrows() > 0 && !(lo > PIVOT_TOLERANCE * max_diag) {
        return None;
    }
    let cond = if a.nrows() == 0 { 1.0 } else { hi / lo };
    Some((chol, cond))
}

/// Solves `(gram + ridge·I) x = rhs`.
///
/// When the system is numerically singular the ridge is raised to
/// `FALLBACK_RIDGE_FACTOR · trace(gram) / n` (and further by factors of ten if
/// that still fails). One step of iterative refinement tightens the residual.
pub fn solve_ridge(gram: &DMatrix<f64>, rhs: &[f64], ridge: f64) -> RidgeSolution {
    let n = gram.nrows();
    debug_assert_eq!(n, rhs.len());
    if n == 0 {
        return RidgeSolution {
            x: Vec::new(),
            ridge,
            condition: 1.0,
        };
    }
    let b = DVector::from_column_slice(rhs);
    let trace = gram.trace().max(0.0);
    let mut lambda = ridge;
    let mut attempt = 0;
    loop {
        let mut a = gram.clone();
        for i in 0..n {
            a[(i, i)] += lambda;
        }
        if let Some((chol, condition)) = try_cholesky(&a) {
            let mut x = chol.solve(&b);
            let r = &b - &a * &x;
            x += chol.solve(&r);
            return RidgeSolution {
                x: x.iter().copied().collect(),
                ridge: lambda,
                condition,
            };
        }
        let floor = if trace > 0.0 {
            FALLBACK_RIDGE_FACTOR * trace / n as f64
        } else {
            1.0
        };
        lambda = if attempt == 0 {
            lambda.max(floor)
        } else {
            lambda.max(floor) * 10.0
        };
        attempt += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_well_posed_system() {
        let g = DMatrix::from_row_slice(2, 2, &[8.0, 4.0, 4.0, 8.0]);
        let s = solve_ridge(&g, &[20.0, 28.0], 0.0);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.x[1] - 3.0).abs() < 1e-12);
        assert_eq!(s.ridge, 0.0);
    }

    #[test]
    fn singular_system_falls_back() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = solve_ridge(&g, &[2.0, 2.0], 0.0);
        assert!(s.ridge > 0.0);
        assert!((s.x[0] + s.x[1] - 2.0).abs() < 1e-6);
        let zero = DMatrix::zeros(3, 3);
        let s = solve_ridge(&zero, &[0.0; 3], 0.0);
        assert_eq!(s.x, vec![0.0; 3]);
    }
}
