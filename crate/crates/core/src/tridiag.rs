//! Thomas algorithm for tridiagonal systems.

/// Solves `A x = d` in place for tridiagonal `A` given by its sub-diagonal
/// `lower` (`lower[i]` multiplies `x[i-1]` in row `i`; `lower[0]` unused),
/// main diagonal `diag` and super-diagonal `upper` (`upper[n-1]` unused).
///
/// No pivoting: callers must supply a diagonally dominant matrix.
pub fn solve_in_place(lower: &[f64], diag: &[f64], upper: &[f64], d: &mut [f64]) {
    let n = d.len();
    debug_assert!(n >= 1 && lower.len() == n && diag.len() == n && upper.len() == n);
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    d[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        d[i] = (d[i] - lower[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
}
