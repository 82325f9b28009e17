//! Reference solvers for canonical instances.
//!
//! `solve_continuous` dispatches to the dense simplex when the quadratic term
//! is zero and to the primal active-set method otherwise. `solve_mio` wraps
//! both in a branch-and-bound search over the integer variables.
//! `solve_reduced` recovers a solution from a strategy by solving the
//! equality-constrained KKT system, with stabilized fallbacks for degenerate
//! tight sets. Solvers hold no global state; instances can be solved
//! concurrently on independent data.

mod active_set;
mod branch_bound;
mod simplex;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{lstsq_min_norm, lu_solve, nullspace_basis, sym_eigen};
use crate::problem::{CanonicalInstance, RowSense};
use crate::strategy::Strategy;

pub use branch_bound::MioOptions;

/// Relative tight-constraint tolerance; must stay above the solver
/// feasibility tolerance so no truly active row is missed.
pub const EPS_TIGHT: f64 = 1e-5;

/// Solver feasibility tolerance (normalized residual).
pub const FEAS_TOL: f64 = 1e-6;

/// Integrality tolerance used by branch-and-bound and encoding.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Numerical failure after restart/perturbation, or node-limit hit.
    Failed(String),
}

impl SolveStatus {
    pub fn is_optimal(&self) -> bool {
        *self == SolveStatus::Optimal
    }
}

/// Outcome of a full or reduced solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    /// Sorted ascending, duplicate-free; equality rows always included.
    pub tight_rows: Vec<usize>,
    /// Values at the instance's integer indices; empty for continuous solves.
    pub integer_values: Vec<i64>,
    /// Multipliers for `Px + q + Aᵀλ = 0`; zero on rows outside the tight set.
    pub duals: DVector<f64>,
    /// Worst violation of the full row set at `x` (reduced solves report the
    /// rows they dropped through this field rather than hiding them).
    pub max_violation: f64,
    pub solve_time: f64,
}

impl SolveResult {
    fn failed(msg: impl Into<String>, n_var: usize, n_con: usize, t0: Instant) -> Self {
        SolveResult {
            status: SolveStatus::Failed(msg.into()),
            x: DVector::zeros(n_var),
            objective: f64::NAN,
            tight_rows: Vec::new(),
            integer_values: Vec::new(),
            duals: DVector::zeros(n_con),
            max_violation: f64::INFINITY,
            solve_time: t0.elapsed().as_secs_f64(),
        }
    }

    fn verdict(status: SolveStatus, n_var: usize, n_con: usize, t0: Instant) -> Self {
        SolveResult {
            status,
            x: DVector::zeros(n_var),
            objective: f64::NAN,
            tight_rows: Vec::new(),
            integer_values: Vec::new(),
            duals: DVector::zeros(n_con),
            max_violation: f64::INFINITY,
            solve_time: t0.elapsed().as_secs_f64(),
        }
    }
}

/// Rows satisfied as equalities at `x`: every `=` row plus each `≤` row with
/// `|aᵢᵀx − bᵢ| ≤ ε_tight·(1 + |bᵢ|)`.
pub fn extract_tight(inst: &CanonicalInstance, x: &DVector<f64>) -> Vec<usize> {
    let res = inst.residuals(x);
    (0..inst.n_con)
        .filter(|&i| match inst.senses[i] {
            RowSense::Eq => true,
            RowSense::Le => res[i].abs() <= EPS_TIGHT * (1.0 + inst.b[i].abs()),
        })
        .collect()
}

/// Solve the continuous problem (integer flags must be absent; callers fix
/// integers through bound rows before invoking this).
pub fn solve_continuous(inst: &CanonicalInstance) -> SolveResult {
    let t0 = Instant::now();
    if !inst.integers.is_empty() {
        return SolveResult::failed(
            "instance has integer variables; use solve_mio",
            inst.n_var,
            inst.n_con,
            t0,
        );
    }
    let mut out = continuous_with_rhs(inst, &inst.b, t0);
    out.solve_time = t0.elapsed().as_secs_f64();
    out
}

/// Continuous solve against a (possibly tightened) right-hand side. Used by
/// branch-and-bound nodes; tight rows and violations are still measured
/// against the supplied `b`.
pub(crate) fn continuous_with_rhs(
    inst: &CanonicalInstance,
    b: &DVector<f64>,
    t0: Instant,
) -> SolveResult {
    match continuous_attempt(inst, b) {
        ContOutcome::Optimal { x, duals, objective } => {
            let tight = tight_rows_for(inst, b, &x);
            let max_violation = violation_against(inst, b, &x);
            SolveResult {
                status: SolveStatus::Optimal,
                objective: objective + inst.obj_const,
                tight_rows: tight,
                integer_values: Vec::new(),
                duals,
                max_violation,
                solve_time: t0.elapsed().as_secs_f64(),
                x,
            }
        }
        ContOutcome::Infeasible => {
            SolveResult::verdict(SolveStatus::Infeasible, inst.n_var, inst.n_con, t0)
        }
        ContOutcome::Unbounded => {
            SolveResult::verdict(SolveStatus::Unbounded, inst.n_var, inst.n_con, t0)
        }
        ContOutcome::Failed(first_err) => {
            // One deterministic restart with a tiny rhs perturbation; the
            // result is verified against the unperturbed rows.
            let mut b_pert = b.clone();
            for i in 0..b_pert.len() {
                let jitter = ((i as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0;
                b_pert[i] += 1e-9 * (1.0 + b_pert[i].abs()) * jitter;
            }
            match continuous_attempt(inst, &b_pert) {
                ContOutcome::Optimal { x, duals, objective } => {
                    let viol = violation_against(inst, b, &x);
                    if viol > FEAS_TOL * (1.0 + b.amax()) * 10.0 {
                        return SolveResult::failed(
                            format!("perturbed restart infeasible by {viol:.3e} ({first_err})"),
                            inst.n_var,
                            inst.n_con,
                            t0,
                        );
                    }
                    let tight = tight_rows_for(inst, b, &x);
                    SolveResult {
                        status: SolveStatus::Optimal,
                        objective: objective + inst.obj_const,
                        tight_rows: tight,
                        integer_values: Vec::new(),
                        duals,
                        max_violation: viol,
                        solve_time: t0.elapsed().as_secs_f64(),
                        x,
                    }
                }
                ContOutcome::Infeasible => {
                    SolveResult::verdict(SolveStatus::Infeasible, inst.n_var, inst.n_con, t0)
                }
                ContOutcome::Unbounded => {
                    SolveResult::verdict(SolveStatus::Unbounded, inst.n_var, inst.n_con, t0)
                }
                ContOutcome::Failed(e) => SolveResult::failed(
                    format!("solver failed after restart: {e} (first: {first_err})"),
                    inst.n_var,
                    inst.n_con,
                    t0,
                ),
            }
        }
    }
}

enum ContOutcome {
    Optimal { x: DVector<f64>, duals: DVector<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    Failed(String),
}

fn continuous_attempt(inst: &CanonicalInstance, b: &DVector<f64>) -> ContOutcome {
    if inst.is_quadratic() {
        match active_set::solve_qp(&inst.a, b, &inst.senses, &inst.p_mat, &inst.q) {
            active_set::QpOutcome::Optimal { x, duals, objective } => {
                ContOutcome::Optimal { x, duals, objective }
            }
            active_set::QpOutcome::Infeasible => ContOutcome::Infeasible,
            active_set::QpOutcome::Unbounded => ContOutcome::Unbounded,
            active_set::QpOutcome::Failed(e) => ContOutcome::Failed(e),
        }
    } else {
        match simplex::solve_lp(&inst.a, b, &inst.senses, &inst.q) {
            simplex::LpOutcome::Optimal { x, duals, objective } => {
                ContOutcome::Optimal { x, duals, objective }
            }
            simplex::LpOutcome::Infeasible => ContOutcome::Infeasible,
            simplex::LpOutcome::Unbounded => ContOutcome::Unbounded,
            simplex::LpOutcome::Failed(e) => ContOutcome::Failed(e),
        }
    }
}

fn tight_rows_for(inst: &CanonicalInstance, b: &DVector<f64>, x: &DVector<f64>) -> Vec<usize> {
    let res = &inst.a * x - b;
    (0..inst.n_con)
        .filter(|&i| match inst.senses[i] {
            RowSense::Eq => true,
            RowSense::Le => res[i].abs() <= EPS_TIGHT * (1.0 + b[i].abs()),
        })
        .collect()
}

fn violation_against(inst: &CanonicalInstance, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let res = &inst.a * x - b;
    let mut worst = 0.0_f64;
    for i in 0..inst.n_con {
        let v = match inst.senses[i] {
            RowSense::Le => res[i],
            RowSense::Eq => res[i].abs(),
        };
        worst = worst.max(v);
    }
    worst
}

/// Branch-and-bound global solve for instances with integer variables.
pub fn solve_mio(inst: &CanonicalInstance, opts: &MioOptions) -> SolveResult {
    branch_bound::solve_mio(inst, opts)
}

/// Which route produced a reduced solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReducedRoute {
    DirectKkt,
    RegularizedKkt,
    NullSpace,
    ActiveSet,
}

/// Solve the reduced problem for one strategy: integer variables fixed, tight
/// rows enforced as equalities, every other inequality dropped. The result's
/// `max_violation` reports how badly the dropped rows are violated.
pub fn solve_reduced(inst: &CanonicalInstance, strat: &Strategy) -> (SolveResult, ReducedRoute) {
    let t0 = Instant::now();
    let n = inst.n_var;
    if strat.integer_values.len() != inst.integers.len() {
        return (
            SolveResult::failed(
                format!(
                    "strategy fixes {} integers, instance has {}",
                    strat.integer_values.len(),
                    inst.integers.len()
                ),
                n,
                inst.n_con,
                t0,
            ),
            ReducedRoute::DirectKkt,
        );
    }
    if strat.tight_rows.iter().any(|&r| r as usize >= inst.n_con) {
        return (
            SolveResult::failed("strategy references a row outside the instance", n, inst.n_con, t0),
            ReducedRoute::DirectKkt,
        );
    }

    // Equality system: tight rows (union of declared equalities for safety)
    // plus one pinning row per integer variable.
    let mut eq_rows: Vec<usize> = strat.tight_rows.iter().map(|&r| r as usize).collect();
    for i in 0..inst.n_con {
        if inst.senses[i] == RowSense::Eq {
            eq_rows.push(i);
        }
    }
    eq_rows.sort_unstable();
    eq_rows.dedup();

    let m_t = eq_rows.len() + inst.integers.len();
    let mut a_t = DMatrix::<f64>::zeros(m_t, n);
    let mut b_t = DVector::<f64>::zeros(m_t);
    for (k, &r) in eq_rows.iter().enumerate() {
        a_t.set_row(k, &inst.a.row(r));
        b_t[k] = inst.b[r];
    }
    for (k, (&var, &val)) in inst.integers.iter().zip(&strat.integer_values).enumerate() {
        a_t[(eq_rows.len() + k, var)] = 1.0;
        b_t[eq_rows.len() + k] = val as f64;
    }

    let accept = |x: &DVector<f64>, lam: &DVector<f64>| -> bool {
        let feas = (&a_t * x - &b_t).amax();
        if feas > FEAS_TOL * (1.0 + b_t.amax()) {
            return false;
        }
        let stat = (&inst.p_mat * x + &inst.q + a_t.transpose() * lam).amax();
        stat <= FEAS_TOL * (1.0 + inst.q.amax() + inst.p_mat.amax() * (1.0 + x.amax()))
    };

    let dims = n + m_t;
    let mut kkt = DMatrix::<f64>::zeros(dims, dims);
    kkt.view_mut((0, 0), (n, n)).copy_from(&inst.p_mat);
    kkt.view_mut((0, n), (n, m_t)).copy_from(&a_t.transpose());
    kkt.view_mut((n, 0), (m_t, n)).copy_from(&a_t);
    let mut rhs = DVector::<f64>::zeros(dims);
    for i in 0..n {
        rhs[i] = -inst.q[i];
    }
    for k in 0..m_t {
        rhs[n + k] = b_t[k];
    }

    // Route 1: plain KKT factorization.
    if let Some(sol) = lu_solve(&kkt, &rhs) {
        let x = DVector::from_iterator(n, (0..n).map(|i| sol[i]));
        let lam = DVector::from_iterator(m_t, (0..m_t).map(|k| sol[n + k]));
        if accept(&x, &lam) {
            return (finish_reduced(inst, strat, &eq_rows, x, lam, t0), ReducedRoute::DirectKkt);
        }
    }

    // Route 2: least-squares-stabilized KKT (quasi-definite regularization).
    {
        let mut kkt_reg = kkt.clone();
        for i in 0..n {
            kkt_reg[(i, i)] += 1e-10;
        }
        for k in n..dims {
            kkt_reg[(k, k)] -= 1e-10;
        }
        if let Some(sol) = lu_solve(&kkt_reg, &rhs) {
            let x = DVector::from_iterator(n, (0..n).map(|i| sol[i]));
            let lam = DVector::from_iterator(m_t, (0..m_t).map(|k| sol[n + k]));
            if accept(&x, &lam) {
                return (
                    finish_reduced(inst, strat, &eq_rows, x, lam, t0),
                    ReducedRoute::RegularizedKkt,
                );
            }
        }
    }

    // Route 3: null-space solve, valid for any rank of the equality system.
    {
        let (x_p, _) = lstsq_min_norm(&a_t, &b_t);
        let feas = (&a_t * &x_p - &b_t).amax();
        if feas > FEAS_TOL * (1.0 + b_t.amax()) {
            let mut failed =
                SolveResult::failed(format!("incompatible strategy: equality system infeasible by {feas:.3e}"), n, inst.n_con, t0);
            failed.max_violation = violation_against(inst, &inst.b, &x_p);
            return (failed, ReducedRoute::NullSpace);
        }
        let z = nullspace_basis(&a_t);
        let x = if z.ncols() == 0 {
            x_p
        } else {
            let h = z.transpose() * &inst.p_mat * &z;
            let g = z.transpose() * (&inst.p_mat * &x_p + &inst.q);
            let (evals, evecs) = sym_eigen(&h);
            let lmax = evals[evals.len() - 1].max(0.0);
            let cutoff = 1e-10 * lmax.max(1.0);
            let mut u = DVector::<f64>::zeros(z.ncols());
            let mut unbounded = false;
            for j in 0..z.ncols() {
                let coef = evecs.column(j).dot(&g);
                if evals[j] <= cutoff {
                    if coef.abs() > 1e-7 * (1.0 + g.amax()) {
                        unbounded = true;
                        break;
                    }
                } else {
                    u.axpy(-coef / evals[j], &evecs.column(j).into_owned(), 1.0);
                }
            }
            if unbounded {
                return (
                    SolveResult::failed("reduced problem is unbounded for this strategy", n, inst.n_con, t0),
                    ReducedRoute::NullSpace,
                );
            }
            x_p + z * u
        };
        let grad = &inst.p_mat * &x + &inst.q;
        let (lam, _) = lstsq_min_norm(&a_t.transpose(), &(-grad));
        if accept(&x, &lam) {
            return (finish_reduced(inst, strat, &eq_rows, x, lam, t0), ReducedRoute::NullSpace);
        }
    }

    // Route 4: active-set on the reduced problem with tight rows as
    // equalities (integers pinned through additional equality rows).
    {
        let senses_t = vec![RowSense::Eq; m_t];
        match active_set::solve_qp(&a_t, &b_t, &senses_t, &inst.p_mat, &inst.q) {
            active_set::QpOutcome::Optimal { x, duals, .. } => {
                return (
                    finish_reduced(inst, strat, &eq_rows, x, duals, t0),
                    ReducedRoute::ActiveSet,
                );
            }
            active_set::QpOutcome::Infeasible => {
                return (
                    SolveResult::failed("incompatible strategy: equality system infeasible", n, inst.n_con, t0),
                    ReducedRoute::ActiveSet,
                );
            }
            active_set::QpOutcome::Unbounded => {
                return (
                    SolveResult::failed("reduced problem is unbounded for this strategy", n, inst.n_con, t0),
                    ReducedRoute::ActiveSet,
                );
            }
            active_set::QpOutcome::Failed(e) => {
                return (
                    SolveResult::failed(format!("reduced solve failed: {e}"), n, inst.n_con, t0),
                    ReducedRoute::ActiveSet,
                );
            }
        }
    }
}

fn finish_reduced(
    inst: &CanonicalInstance,
    strat: &Strategy,
    eq_rows: &[usize],
    x: DVector<f64>,
    lam: DVector<f64>,
    t0: Instant,
) -> SolveResult {
    let mut duals = DVector::zeros(inst.n_con);
    for (k, &r) in eq_rows.iter().enumerate() {
        duals[r] = lam[k];
    }
    SolveResult {
        status: SolveStatus::Optimal,
        objective: inst.objective(&x),
        tight_rows: extract_tight(inst, &x),
        integer_values: strat.integer_values.clone(),
        duals,
        max_violation: inst.max_violation(&x),
        solve_time: t0.elapsed().as_secs_f64(),
        x,
    }
}
