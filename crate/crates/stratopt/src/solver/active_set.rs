//! Primal active-set method for convex QPs with possibly singular Hessian.
//!
//! Works on the same row form as the simplex: `min ½xᵀPx + qᵀx` subject to
//! `a x (≤|=) b` with free variables. A feasible start comes from a phase-1
//! simplex run; the working set then grows and shrinks one row at a time.
//! Equality-constrained subproblems are solved in the null space of the
//! working rows, so zero-curvature directions (P singular) are handled like
//! simplex rays: follow the descent direction to the nearest blocking row.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{lstsq_min_norm, nullspace_basis, sym_eigen};
use crate::problem::RowSense;
use crate::solver::simplex::{solve_lp, LpOutcome};

#[derive(Debug, Clone)]
pub enum QpOutcome {
    Optimal {
        x: DVector<f64>,
        /// Multipliers for `Px + q + Aᵀλ = 0`, nonnegative on `≤` rows.
        duals: DVector<f64>,
        objective: f64,
    },
    Infeasible,
    Unbounded,
    Failed(String),
}

const MULT_TOL: f64 = 1e-8;
const STEP_TOL: f64 = 1e-11;

pub fn solve_qp(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    senses: &[RowSense],
    p_mat: &DMatrix<f64>,
    q: &DVector<f64>,
) -> QpOutcome {
    let m = a.nrows();
    let n = a.ncols();

    // Phase 1: any feasible point will do.
    let zero_cost = DVector::zeros(n);
    let mut x = match solve_lp(a, b, senses, &zero_cost) {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => return QpOutcome::Infeasible,
        LpOutcome::Unbounded => {
            return QpOutcome::Failed("phase-1 with zero cost reported unbounded".into())
        }
        LpOutcome::Failed(e) => return QpOutcome::Failed(format!("phase-1 failed: {e}")),
    };

    // Working set starts from an independent subset of the equality rows;
    // dependent equalities stay satisfied along any null-space direction.
    let mut working: Vec<usize> = Vec::new();
    for i in 0..m {
        if senses[i] == RowSense::Eq {
            working.push(i);
        }
    }
    drop_dependent_rows(a, &mut working);

    let max_iter = 20 * (m + n) + 2_000;
    let mut degenerate_streak = 0usize;
    let mut in_working = vec![false; m];
    for &r in &working {
        in_working[r] = true;
    }

    // Null basis of the working rows, kept across iterations: shrunk in
    // place when a row is added, recomputed only after a drop.
    let mut z_cache: Option<DMatrix<f64>> = None;

    for _iter in 0..max_iter {
        let grad = p_mat * &x + q;
        let a_w = gather_rows(a, &working);
        // Working rows stay independent by construction, so a full working
        // set has an empty null space and the eigen solve can be skipped.
        let z = match z_cache.take() {
            Some(z) => z,
            None if working.len() >= n => DMatrix::zeros(n, 0),
            None => nullspace_basis(&a_w),
        };
        let k = z.ncols();

        let mut step: Option<(DVector<f64>, bool)> = None; // (direction, is_ray)
        if k > 0 {
            let h = z.transpose() * p_mat * &z;
            let gz = z.transpose() * &grad;
            let (evals, evecs) = sym_eigen(&h);
            let lmax = evals[evals.len() - 1].max(0.0);
            let cutoff = 1e-10 * lmax.max(1.0);
            // Component of the reduced gradient in the zero-curvature space.
            let mut ray = DVector::<f64>::zeros(k);
            let mut newton = DVector::<f64>::zeros(k);
            for j in 0..k {
                let coef = evecs.column(j).dot(&gz);
                if evals[j] <= cutoff {
                    ray.axpy(-coef, &evecs.column(j).into_owned(), 1.0);
                } else {
                    newton.axpy(-coef / evals[j], &evecs.column(j).into_owned(), 1.0);
                }
            }
            let grad_scale = 1.0 + grad.amax();
            if ray.amax() > 1e-9 * grad_scale {
                step = Some((&z * ray, true));
            } else {
                let p_dir = &z * newton;
                if p_dir.amax() > STEP_TOL * (1.0 + x.amax()) {
                    step = Some((p_dir, false));
                }
            }
        }

        match step {
            None => {
                // Stationary on the working set: check multipliers.
                let a_w_t = a_w.transpose();
                let (lambda, _) = lstsq_min_norm(&a_w_t, &(-&grad));
                let mut worst = -MULT_TOL * (1.0 + grad.amax());
                let mut drop_pos = usize::MAX;
                for (pos, &row) in working.iter().enumerate() {
                    if senses[row] == RowSense::Le && lambda[pos] < worst {
                        worst = lambda[pos];
                        drop_pos = pos;
                    }
                }
                if drop_pos == usize::MAX {
                    let mut duals = DVector::zeros(m);
                    for (pos, &row) in working.iter().enumerate() {
                        duals[row] = lambda[pos];
                    }
                    let objective = 0.5 * x.dot(&(p_mat * &x)) + q.dot(&x);
                    return QpOutcome::Optimal { x, duals, objective };
                }
                if degenerate_streak > 50 {
                    // Anti-cycling: drop the lowest-index violating row.
                    let tol = -MULT_TOL * (1.0 + grad.amax());
                    drop_pos = working
                        .iter()
                        .enumerate()
                        .find(|(pos, &row)| senses[row] == RowSense::Le && lambda[*pos] < tol)
                        .map(|(pos, _)| pos)
                        .unwrap_or(drop_pos);
                }
                in_working[working[drop_pos]] = false;
                working.remove(drop_pos);
                degenerate_streak += 1;
                z_cache = None;
            }
            Some((dir, is_ray)) => {
                // Ratio test against rows outside the working set.
                let a_dir = a * &dir;
                let res = a * &x - b;
                let dir_scale = a_dir.amax().max(1e-30);
                let mut alpha_max = f64::INFINITY;
                let mut blocking = usize::MAX;
                for i in 0..m {
                    if in_working[i] || senses[i] == RowSense::Eq {
                        continue;
                    }
                    if a_dir[i] > 1e-12 * dir_scale.max(1.0) {
                        // Relaxed ratio test: rows violated by accumulated
                        // roundoff (within a sliver of the feasibility
                        // tolerance) must not pin the step at zero.
                        let relax = 1e-9 * (1.0 + b[i].abs());
                        let slack = (relax - res[i]).max(0.0);
                        let ratio = slack / a_dir[i];
                        if ratio < alpha_max - 1e-15 {
                            alpha_max = ratio;
                            blocking = i;
                        }
                    }
                }
                let alpha = if is_ray {
                    if blocking == usize::MAX {
                        return QpOutcome::Unbounded;
                    }
                    alpha_max
                } else {
                    alpha_max.min(1.0)
                };
                if alpha > 0.0 {
                    x.axpy(alpha, &dir, 1.0);
                    degenerate_streak = 0;
                } else {
                    degenerate_streak += 1;
                }
                if blocking != usize::MAX && alpha >= alpha_max - 1e-15 {
                    working.push(blocking);
                    in_working[blocking] = true;
                    z_cache = shrink_null_basis(&z, &a.row(blocking).transpose());
                } else {
                    z_cache = Some(z);
                }
            }
        }
    }

    // Iteration cap: report honestly instead of returning a stale point.
    QpOutcome::Failed("active-set iteration limit".into())
}

/// Shrink an orthonormal null basis by one added row: the result spans
/// `{ z ∈ span(Z) : aᵀz = 0 }`. `None` when the projection is too small to
/// update stably (caller recomputes from scratch).
fn shrink_null_basis(z: &DMatrix<f64>, a_row: &DVector<f64>) -> Option<DMatrix<f64>> {
    let k = z.ncols();
    if k == 0 {
        return Some(z.clone());
    }
    let v = z.transpose() * a_row;
    let norm = v.norm();
    if norm < 1e-10 * (1.0 + a_row.norm()) {
        return None;
    }
    if k == 1 {
        return Some(DMatrix::zeros(z.nrows(), 0));
    }
    // Householder reflection sending v to ±‖v‖e₀; the remaining k−1 columns
    // of Z·H stay orthonormal and orthogonal to the new row.
    let mut u = v.clone();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign * norm;
    let beta = 2.0 / u.norm_squared();
    let zu = z * &u;
    let mut out = DMatrix::zeros(z.nrows(), k - 1);
    for c in 1..k {
        let mut col = z.column(c).into_owned();
        col.axpy(-beta * u[c], &zu, 1.0);
        out.set_column(c - 1, &col);
    }
    Some(out)
}

/// Keep a maximal independent subset of the given rows (first-come order).
fn drop_dependent_rows(a: &DMatrix<f64>, rows: &mut Vec<usize>) {
    let n = a.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::with_capacity(rows.len());
    for &r in rows.iter() {
        if basis.len() == n {
            break;
        }
        let mut v = a.row(r).transpose();
        let norm0 = v.norm();
        if norm0 < 1e-14 {
            continue;
        }
        for u in &basis {
            let c = u.dot(&v);
            v.axpy(-c, u, 1.0);
        }
        // Re-orthogonalize once; classical Gram-Schmidt alone drifts.
        for u in &basis {
            let c = u.dot(&v);
            v.axpy(-c, u, 1.0);
        }
        if v.norm() > 1e-10 * norm0 {
            let nv = v.norm();
            basis.push(v / nv);
            kept.push(r);
        }
    }
    *rows = kept;
}

fn gather_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len(), a.ncols());
    for (k, &r) in rows.iter().enumerate() {
        out.set_row(k, &a.row(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_strongly_convex_qp() {
        // min ½(x₀² + x₁²) − x₀  →  x = (1, 0).
        let a = DMatrix::zeros(0, 2);
        let b = DVector::zeros(0);
        let p = DMatrix::identity(2, 2);
        let q = DVector::from_vec(vec![-1.0, 0.0]);
        match solve_qp(&a, &b, &[], &p, &q) {
            QpOutcome::Optimal { x, objective, .. } => {
                assert!((x[0] - 1.0).abs() < 1e-8);
                assert!(x[1].abs() < 1e-8);
                assert!((objective + 0.5).abs() < 1e-8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn box_constrained_qp_hits_bound() {
        // min ½x² − 3x  s.t.  x ≤ 1  →  x = 1, λ = 2.
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let b = DVector::from_vec(vec![1.0]);
        let p = DMatrix::from_row_slice(1, 1, &[1.0]);
        let q = DVector::from_vec(vec![-3.0]);
        match solve_qp(&a, &b, &[RowSense::Le], &p, &q) {
            QpOutcome::Optimal { x, duals, .. } => {
                assert!((x[0] - 1.0).abs() < 1e-8);
                assert!((duals[0] - 2.0).abs() < 1e-7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn equality_constrained_qp() {
        // min ½‖x‖²  s.t.  x₀ + x₁ = 2  →  x = (1, 1), λ = −1.
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let p = DMatrix::identity(2, 2);
        let q = DVector::zeros(2);
        match solve_qp(&a, &b, &[RowSense::Eq], &p, &q) {
            QpOutcome::Optimal { x, duals, objective, .. } => {
                assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8);
                assert!((objective - 1.0).abs() < 1e-8);
                let grad = &p * &x + &q + a.transpose() * &duals;
                assert!(grad.amax() < 1e-7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn singular_hessian_linear_direction() {
        // min ½x₀² + x₁  s.t.  −x₁ ≤ 0, x₀ + x₁ ≤ 5: curvature only in x₀.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![0.0, 5.0]);
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let q = DVector::from_vec(vec![0.0, 1.0]);
        match solve_qp(&a, &b, &[RowSense::Le, RowSense::Le], &p, &q) {
            QpOutcome::Optimal { x, .. } => {
                assert!(x[0].abs() < 1e-8);
                assert!(x[1].abs() < 1e-8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unbounded_qp_detected() {
        // min x₁ (no curvature in x₁, only a one-sided row): unbounded.
        let a = DMatrix::from_row_slice(1, 2, &[0.0, -1.0]);
        let b = DVector::from_vec(vec![0.0]);
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let q = DVector::from_vec(vec![0.0, -1.0]);
        assert!(matches!(
            solve_qp(&a, &b, &[RowSense::Le], &p, &q),
            QpOutcome::Unbounded
        ));
    }

    #[test]
    fn simplex_constrained_min_variance() {
        // min xᵀx on the probability simplex → uniform point.
        let n = 4;
        let mut rows = vec![vec![1.0; n]];
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = -1.0;
            rows.push(r);
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let a = DMatrix::from_row_slice(n + 1, n, &flat);
        let mut b = DVector::zeros(n + 1);
        b[0] = 1.0;
        let mut senses = vec![RowSense::Le; n + 1];
        senses[0] = RowSense::Eq;
        let p = DMatrix::identity(n, n) * 2.0;
        let q = DVector::zeros(n);
        match solve_qp(&a, &b, &senses, &p, &q) {
            QpOutcome::Optimal { x, objective, .. } => {
                for i in 0..n {
                    assert!((x[i] - 0.25).abs() < 1e-7, "x = {x:?}");
                }
                assert!((objective - 0.25).abs() < 1e-8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
