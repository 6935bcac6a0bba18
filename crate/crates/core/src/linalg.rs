use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solve a tridiagonal system in place (Thomas algorithm).
///
/// `lower[i]` couples row `i` to `i-1` (`lower[0]` unused), `upper[i]`
/// couples row `i` to `i+1` (last entry unused). `rhs` is overwritten with
/// the solution.
pub fn solve_tridiagonal<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T]) -> Result<()> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::InvalidArgument("tridiagonal bands differ in length".into()));
    }
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![T::zero(); n];
    let mut beta = diag[0];
    if beta == T::zero() || !beta.is_finite() {
        return Err(Error::SingularSystem(0));
    }
    c[0] = upper[0] / beta;
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == T::zero() || !beta.is_finite() {
            return Err(Error::SingularSystem(i));
        }
        c[i] = upper[i] / beta;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - c[i] * rhs[i + 1];
    }
    Ok(())
}
