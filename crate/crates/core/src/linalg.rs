//! Small dense kernels shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::scalar::Scalar;

/// Thin Householder QR with the diagonal of `R` made nonnegative.
pub fn qr_sign_fixed<T: Scalar>(m: DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let qr = m.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows() {
        if r[(i, i)] < T::zero() {
            q.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    (q, r)
}

/// Replaces `m` with `(m + mᵀ) / 2`.
pub fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let half = T::of(0.5);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted nonincreasing.
pub fn sym_eigen_sorted<T: Scalar>(m: DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let eig = SymmetricEigen::new(m);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(eig.eigenvectors.nrows(), n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Eigenvalues of a symmetric matrix, nonincreasing.
pub fn sym_eigenvalues<T: Scalar>(m: DMatrix<T>) -> Vec<T> {
    let mut v: Vec<T> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Spectral norm of a symmetric matrix.
pub fn sym_spectral_norm<T: Scalar>(m: DMatrix<T>) -> T {
    m.symmetric_eigenvalues()
        .iter()
        .fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// Largest column norm of `m` (zero for an empty matrix).
pub fn max_column_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    m.column_iter().fold(T::zero(), |acc, c| acc.max(c.norm()))
}
