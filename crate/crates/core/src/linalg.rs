use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solve `a x = b` for symmetric positive definite `a`.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("{what}: matrix is not positive definite")))?;
    let x = chol.solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("{what}: non-finite solution")));
    }
    Ok(x)
}
