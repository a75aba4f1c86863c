//! Shared numerical kernels: central finite differences and guarded LU solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Central-difference step for one coordinate entry.
///
/// Scales with the entry magnitude but never shrinks below the absolute
/// floor, which balances truncation against roundoff at double precision.
pub(crate) fn fd_step(entry: f64) -> f64 {
    1e-6 * entry.abs().max(1.0)
}

/// Central-difference Jacobian of a vector function, per-entry step sizes.
pub(crate) fn central_jacobian<F>(f: F, at: &DVector<f64>, rows: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let cols = at.len();
    let mut jac = DMatrix::zeros(rows, cols);
    let mut shifted = at.clone();
    for j in 0..cols {
        let eps = fd_step(at[j]);
        shifted[j] = at[j] + eps;
        let plus = f(&shifted)?;
        shifted[j] = at[j] - eps;
        let minus = f(&shifted)?;
        shifted[j] = at[j];
        jac.column_mut(j).copy_from(&((plus - minus) / (2.0 * eps)));
    }
    Ok(jac)
}

/// Central-difference gradient of a scalar function.
pub(crate) fn central_gradient<F>(f: F, at: &DVector<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let n = at.len();
    let mut grad = DVector::zeros(n);
    let mut shifted = at.clone();
    for j in 0..n {
        let eps = fd_step(at[j]);
        shifted[j] = at[j] + eps;
        let plus = f(&shifted);
        shifted[j] = at[j] - eps;
        let minus = f(&shifted);
        shifted[j] = at[j];
        grad[j] = (plus - minus) / (2.0 * eps);
    }
    grad
}

/// Solves `a x = b` by dense LU with partial pivoting.
///
/// Declares the system singular when the smallest pivot falls below
/// `1e-12` times the max-magnitude entry of `a`.
pub(crate) fn lu_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    context: &'static str,
) -> Result<DVector<f64>> {
    let scale = a.amax();
    let threshold = 1e-12 * scale;
    let lu = a.clone().lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, &d| acc.min(d.abs()));
    if scale == 0.0 || min_pivot < threshold {
        return Err(Error::SingularJacobian {
            context,
            pivot: min_pivot,
            threshold,
        });
    }
    lu.solve(b).ok_or(Error::SingularJacobian {
        context,
        pivot: min_pivot,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn central_jacobian_matches_linear_map() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let mc = m.clone();
        let jac = central_jacobian(|x| Ok(&mc * x), &dvector![0.3, -1.1], 2).unwrap();
        assert!((jac - m).amax() < 1e-9);
    }

    #[test]
    fn central_gradient_of_quadratic() {
        let grad = central_gradient(|x| 0.5 * x.dot(x), &dvector![1.0, -2.0, 0.0]);
        assert!((grad - dvector![1.0, -2.0, 0.0]).amax() < 1e-9);
    }

    #[test]
    fn lu_solve_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = lu_solve(&a, &dvector![1.0, 1.0], "test").unwrap_err();
        assert!(matches!(err, Error::SingularJacobian { .. }));
    }

    #[test]
    fn lu_solve_recovers_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let x = dvector![0.7, -0.2];
        let b = &a * &x;
        let solved = lu_solve(&a, &b, "test").unwrap();
        assert!((solved - x).amax() < 1e-12);
    }
}
