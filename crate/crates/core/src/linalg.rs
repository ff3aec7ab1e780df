//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative diagonal shift applied before factorising barrier Hessians.
pub const HESSIAN_REGULARIZATION: f64 = 1e-12;

/// Smallest eigenvalue accepted after regularisation.
pub const MIN_EIGENVALUE: f64 = 1e-12;

/// Adds `HESSIAN_REGULARIZATION * trace / n` to the diagonal.
pub fn regularize(m: &Matrix) -> Matrix {
    let n = m.nrows();
    if n == 0 {
        return m.clone();
    }
    let shift = HESSIAN_REGULARIZATION * (m.trace() / n as f64).abs();
    let mut out = m.clone();
    for i in 0..n {
        out[(i, i)] += shift;
    }
    out
}

/// Symmetrises in place, removing round-off asymmetry.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Square root and inverse square root of a symmetric positive definite
/// matrix, via its eigendecomposition. Returns `(sqrt, inv_sqrt, min_eig)`.
pub fn sqrt_and_inv_sqrt(m: &Matrix) -> Option<(Matrix, Matrix, f64)> {
    let n = m.nrows();
    if n == 0 {
        return Some((Matrix::zeros(0, 0), Matrix::zeros(0, 0), f64::INFINITY));
    }
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let min_eig = eig.eigenvalues.min();
    if !(min_eig >= MIN_EIGENVALUE) {
        return None;
    }
    let q = &eig.eigenvectors;
    let s = eig.eigenvalues.map(f64::sqrt);
    let is = s.map(|v| 1.0 / v);
    let sqrt = q * Matrix::from_diagonal(&s) * q.transpose();
    let inv_sqrt = q * Matrix::from_diagonal(&is) * q.transpose();
    Some((sqrt, inv_sqrt, min_eig))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let mut sym = m.clone();
    symmetrize(&mut sym);
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Cholesky factorisation of the regularised matrix.
pub fn cholesky_regularized(m: &Matrix) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let mut r = regularize(m);
    symmetrize(&mut r);
    Cholesky::new(r)
}

/// Orthonormal basis (as columns) of the null space of `c`, which has `n`
/// columns. Fails if the rows of `c` are linearly dependent.
pub fn null_space(c: &Matrix, n: usize) -> Result<Matrix> {
    let q = c.nrows();
    if q == 0 {
        return Ok(Matrix::identity(n, n));
    }
    if c.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "equality matrix has {} columns, expected {n}",
            c.ncols()
        )));
    }
    let gram = c * c.transpose();
    let gram_eig = SymmetricEigen::new(gram.clone());
    let max = gram_eig.eigenvalues.max();
    let rank = gram_eig
        .eigenvalues
        .iter()
        .filter(|&&v| v > 1e-12 * max.max(1e-300))
        .count();
    if rank < q {
        return Err(Error::RankDeficient { rank, rows: q });
    }
    if q >= n {
        return Ok(Matrix::zeros(n, 0));
    }
    // Projector onto null(C); its unit eigenvalues pick out the basis.
    let gram_inv = gram
        .try_inverse()
        .ok_or(Error::RankDeficient { rank, rows: q })?;
    let mut proj = Matrix::identity(n, n) - c.transpose() * gram_inv * c;
    symmetrize(&mut proj);
    let eig = SymmetricEigen::new(proj);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let p = n - q;
    let mut w = Matrix::zeros(n, p);
    for (k, &j) in order.iter().take(p).enumerate() {
        w.set_column(k, &eig.eigenvectors.column(j));
    }
    // One Gram-Schmidt pass against round-off.
    for k in 0..p {
        for j in 0..k {
            let dot = w.column(k).dot(&w.column(j));
            let cj = w.column(j).clone_owned();
            let mut ck = w.column_mut(k);
            ck.axpy(-dot, &cj, 1.0);
        }
        let norm = w.column(k).norm();
        w.column_mut(k).scale_mut(1.0 / norm);
    }
    Ok(w)
}

/// Moore-Penrose right inverse `Cᵀ(CCᵀ)⁻¹` used to pull points back onto an
/// affine subspace.
pub fn right_inverse(c: &Matrix) -> Option<Matrix> {
    if c.nrows() == 0 {
        return Some(Matrix::zeros(c.ncols(), 0));
    }
    let gram = c * c.transpose();
    gram.try_inverse().map(|g| c.transpose() * g)
}

pub fn l1_norm(v: &Vector) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn null_space_of_single_row_in_plane() {
        let c = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let w = null_space(&c, 2).unwrap();
        let proj = &w * w.transpose();
        assert_relative_eq!(proj[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(proj[(0, 1)], -0.5, epsilon = 1e-12);
        assert_relative_eq!(proj[(1, 1)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn null_space_empty_constraints_is_identity() {
        let c = Matrix::zeros(0, 3);
        let w = null_space(&c, 3).unwrap();
        assert_eq!(w, Matrix::identity(3, 3));
    }

    #[test]
    fn null_space_full_rank_square_is_empty() {
        let c = Matrix::identity(3, 3);
        let w = null_space(&c, 3).unwrap();
        assert_eq!(w.ncols(), 0);
    }

    #[test]
    fn dependent_rows_are_rejected() {
        let c = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(
            null_space(&c, 3),
            Err(Error::RankDeficient { rank: 1, rows: 2 })
        ));
    }

    #[test]
    fn sqrt_roundtrip() {
        let m = Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let (s, is, _) = sqrt_and_inv_sqrt(&m).unwrap();
        assert_relative_eq!(&s * &s, m, epsilon = 1e-12);
        assert_relative_eq!(&s * &is, Matrix::identity(2, 2), epsilon = 1e-12);
    }
}
