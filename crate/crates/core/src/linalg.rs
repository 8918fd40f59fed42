use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const MAX_CONDITION: f64 = 1e12;

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when the
/// smallest eigenvalue is not positive.
pub(crate) fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    let eig = a.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `a x = b` for symmetric positive definite `a`.
///
/// Cholesky first, full-pivot LU as the fallback; an estimated condition
/// number above 1e12 is reported as singular.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let cond = condition_number(a);
    if cond > MAX_CONDITION {
        return Err(Error::Singular(format!("{what} has condition number {cond:.3e}")));
    }
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.clone().full_piv_lu().solve(b).ok_or_else(|| Error::Singular(format!("{what} could not be factorized")))
}

pub(crate) fn inverse_spd(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let cond = condition_number(a);
    if cond > MAX_CONDITION {
        return Err(Error::Singular(format!("{what} has condition number {cond:.3e}")));
    }
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.inverse());
    }
    a.clone().try_inverse().ok_or_else(|| Error::Singular(format!("{what} could not be inverted")))
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}
