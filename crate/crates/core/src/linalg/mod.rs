//! Linear-algebra kernels: tridiagonal and dense symmetric eigensolvers, and a
//! pivoted complex tridiagonal solve for implicit time stepping.

pub mod dense;
pub mod tridiag;

use alloc::vec;
use num_complex::Complex64;

use crate::{Error, Result};

pub use dense::{symmetric_eigen, SquareMatrix, SymmetricEigen};
pub use tridiag::{fix_sign, Parity, ReflectionSplit, SymTridiag, TridiagEigen};

/// Solves a general complex tridiagonal system in place (`rhs` becomes the
/// solution) using Gaussian elimination with partial pivoting.
///
/// `sub[i]` is `A[i+1][i]`, `sup[i]` is `A[i][i+1]`.
pub fn solve_complex_tridiagonal(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut d = diag.to_vec();
    let mut dl = sub.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
    for i in 0..n - 1 {
        if d[i].norm_sqr() >= dl[i].norm_sqr() {
            if d[i].norm_sqr() == 0.0 {
                return Err(Error::SingularSystem);
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            rhs[i + 1] -= fact * rhs[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let t = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = t - fact * rhs[i];
        }
        dl[i] = Complex64::new(0.0, 0.0);
    }
    if d[n - 1].norm_sqr() == 0.0 {
        return Err(Error::SingularSystem);
    }
    rhs[n - 1] /= d[n - 1];
    if n > 1 {
        rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
    }
    Ok(())
}
