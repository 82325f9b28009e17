//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// Relative cutoff used when deciding the numerical rank of a matrix.
pub const RANK_EPS: f64 = 1e-11;

/// Solve `a * x = rhs` by LU with partial pivoting. `None` if singular.
pub fn lu_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(rhs)
}

/// Minimum-norm least-squares solution of `a * x = rhs` via SVD.
///
/// Returns the solution and the numerical rank.
pub fn lstsq_min_norm(a: &DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, usize) {
    if a.nrows() == 0 || a.ncols() == 0 {
        return (DVector::zeros(a.ncols()), 0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = RANK_EPS * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let x = svd
        .solve(rhs, cutoff)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    (x, rank)
}

/// Orthonormal basis of the null space of `a` (columns of the result).
///
/// Computed from the spectral decomposition of `aᵀa`, which is robust for the
/// well-scaled constraint blocks this crate produces.
pub fn nullspace_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let gram = a.transpose() * a;
    let eig = gram.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = lmax.max(1.0) * 1e-12;
    let cols: Vec<usize> = (0..n).filter(|&j| eig.eigenvalues[j] <= cutoff).collect();
    let mut z = DMatrix::zeros(n, cols.len());
    for (k, &j) in cols.iter().enumerate() {
        z.set_column(k, &eig.eigenvectors.column(j));
    }
    z
}

/// Spectral decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(h: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = h.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let k = idx.len();
    let mut vals = DVector::zeros(k);
    let mut vecs = DMatrix::zeros(eig.eigenvectors.nrows(), k);
    for (out, &src) in idx.iter().enumerate() {
        vals[out] = eig.eigenvalues[src];
        vecs.set_column(out, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}
