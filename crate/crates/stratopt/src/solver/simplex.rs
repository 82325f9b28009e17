//! Dense two-phase tableau simplex for LPs with free variables.
//!
//! Canonical instances keep every variable free (bounds live in explicit
//! rows), so each variable is split into a positive and a negative part.
//! Phase 1 minimizes artificial infeasibility; phase 2 minimizes the cost.
//! Dantzig pricing with a switch to Bland's rule after a degenerate stall
//! keeps the method finite and deterministic.

use nalgebra::{DMatrix, DVector};

use crate::problem::RowSense;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        x: DVector<f64>,
        /// Multipliers for `q + Aᵀλ = 0`, nonnegative on `≤` rows.
        duals: DVector<f64>,
        objective: f64,
    },
    Infeasible,
    Unbounded,
    Failed(String),
}

struct Tableau {
    /// Row-major `m × ncols` coefficient block.
    data: Vec<f64>,
    ncols: usize,
    rhs: Vec<f64>,
    basic: Vec<usize>,
    cost: Vec<f64>,
    scratch: Vec<f64>,
}

impl Tableau {
    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.ncols..(r + 1) * self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let m = self.rhs.len();
        let ncols = self.ncols;
        let piv = self.data[r * ncols + c];
        let inv = 1.0 / piv;
        for v in &mut self.data[r * ncols..(r + 1) * ncols] {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.data[r * ncols..(r + 1) * ncols]);
        let rhs_r = self.rhs[r];
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.data[i * ncols + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * ncols..(i + 1) * ncols];
            for (rv, pv) in row.iter_mut().zip(self.scratch.iter()) {
                *rv -= f * *pv;
            }
            self.rhs[i] -= f * rhs_r;
            self.data[i * ncols + c] = 0.0;
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (cv, pv) in self.cost.iter_mut().zip(self.scratch.iter()) {
                *cv -= f * *pv;
            }
            self.cost[c] = 0.0;
        }
        self.basic[r] = c;
    }
}

/// Solve `min costᵀx  s.t.  a x (≤|=) b` with free `x`.
pub fn solve_lp(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    senses: &[RowSense],
    cost: &DVector<f64>,
) -> LpOutcome {
    let m = a.nrows();
    let n = a.ncols();
    if m == 0 {
        // Unconstrained LP: optimal only with zero cost.
        return if cost.amax() == 0.0 {
            LpOutcome::Optimal {
                x: DVector::zeros(n),
                duals: DVector::zeros(0),
                objective: 0.0,
            }
        } else {
            LpOutcome::Unbounded
        };
    }

    let n_slack = senses.iter().filter(|s| **s == RowSense::Le).count();
    // Columns: x⁺ (n), x⁻ (n), slacks, artificials (one per row needing it).
    let slack_base = 2 * n;
    let mut slack_col = vec![usize::MAX; m];
    {
        let mut k = 0;
        for i in 0..m {
            if senses[i] == RowSense::Le {
                slack_col[i] = slack_base + k;
                k += 1;
            }
        }
    }
    let art_base = slack_base + n_slack;
    let flip: Vec<f64> = (0..m).map(|i| if b[i] < 0.0 { -1.0 } else { 1.0 }).collect();
    // A row keeps its slack as the initial basic column only when unflipped.
    let needs_art: Vec<bool> = (0..m)
        .map(|i| senses[i] == RowSense::Eq || flip[i] < 0.0)
        .collect();
    let mut art_col = vec![usize::MAX; m];
    {
        let mut k = 0;
        for i in 0..m {
            if needs_art[i] {
                art_col[i] = art_base + k;
                k += 1;
            }
        }
    }
    let n_art = art_col.iter().filter(|&&c| c != usize::MAX).count();
    let ncols = art_base + n_art;

    let mut tab = Tableau {
        data: vec![0.0; m * ncols],
        ncols,
        rhs: vec![0.0; m],
        basic: vec![0; m],
        cost: vec![0.0; ncols],
        scratch: Vec::with_capacity(ncols),
    };
    for i in 0..m {
        let base = i * ncols;
        for j in 0..n {
            let v = flip[i] * a[(i, j)];
            if v != 0.0 {
                tab.data[base + j] = v;
                tab.data[base + n + j] = -v;
            }
        }
        if slack_col[i] != usize::MAX {
            tab.data[base + slack_col[i]] = flip[i];
        }
        if art_col[i] != usize::MAX {
            tab.data[base + art_col[i]] = 1.0;
        }
        tab.rhs[i] = flip[i] * b[i];
        tab.basic[i] = if needs_art[i] { art_col[i] } else { slack_col[i] };
    }

    // Phase 1: reduced costs of `min Σ artificials` given the initial basis.
    for i in 0..m {
        if needs_art[i] {
            let base = i * ncols;
            for j in 0..ncols {
                tab.cost[j] -= tab.data[base + j];
            }
        }
    }
    for i in 0..m {
        if art_col[i] != usize::MAX {
            tab.cost[art_col[i]] += 1.0;
        }
    }

    let max_iter = 100 * (m + ncols) + 10_000;
    let phase1_obj = |tab: &Tableau| -> f64 {
        (0..m)
            .filter(|&i| tab.basic[i] >= art_base)
            .map(|i| tab.rhs[i])
            .sum()
    };
    if let Err(e) = run_phase(&mut tab, ncols, max_iter, phase1_obj) {
        return match e {
            PhaseError::Unbounded => {
                LpOutcome::Failed("phase-1 objective reported unbounded".into())
            }
            PhaseError::IterationLimit => LpOutcome::Failed("phase-1 iteration limit".into()),
        };
    }
    let feas_tol = 1e-7 * (1.0 + b.amax());
    if phase1_obj(&tab) > feas_tol {
        return LpOutcome::Infeasible;
    }

    // Drive leftover artificials out of the basis; rows that admit no pivot
    // are redundant and get dropped.
    let mut live_rows: Vec<usize> = (0..m).collect();
    let mut r = 0;
    while r < live_rows.len() {
        let tr = live_rows[r];
        if tab.basic[tr] >= art_base {
            let base = tr * ncols;
            let mut pivoted = false;
            for j in 0..art_base {
                if tab.data[base + j].abs() > 1e-7 {
                    tab.pivot(tr, j);
                    pivoted = true;
                    break;
                }
            }
            if !pivoted {
                live_rows.remove(r);
                continue;
            }
        }
        r += 1;
    }
    // Compact the tableau onto the live rows.
    if live_rows.len() < m {
        let mut data = Vec::with_capacity(live_rows.len() * ncols);
        let mut rhs = Vec::with_capacity(live_rows.len());
        let mut basic = Vec::with_capacity(live_rows.len());
        for &tr in &live_rows {
            data.extend_from_slice(tab.row(tr));
            rhs.push(tab.rhs[tr]);
            basic.push(tab.basic[tr]);
        }
        tab.data = data;
        tab.rhs = rhs;
        tab.basic = basic;
    }
    let m_live = tab.rhs.len();

    // Phase 2 reduced costs: x⁺ carries +q, x⁻ carries −q.
    let phase2_cost = |col: usize| -> f64 {
        if col < n {
            cost[col]
        } else if col < 2 * n {
            -cost[col - n]
        } else {
            0.0
        }
    };
    // Artificial columns are priced out by `col_limit` in phase 2.
    for j in 0..ncols {
        tab.cost[j] = if j >= art_base { 0.0 } else { phase2_cost(j) };
    }
    for i in 0..m_live {
        let cb = phase2_cost(tab.basic[i]);
        if cb != 0.0 {
            let base = i * ncols;
            for j in 0..art_base {
                tab.cost[j] -= cb * tab.data[base + j];
            }
        }
    }
    for i in 0..m_live {
        tab.cost[tab.basic[i]] = 0.0;
    }

    let phase2_obj = |tab: &Tableau| -> f64 {
        (0..tab.rhs.len())
            .map(|i| phase2_cost(tab.basic[i]) * tab.rhs[i])
            .sum()
    };
    match run_phase(&mut tab, art_base, max_iter, phase2_obj) {
        Ok(()) => {}
        Err(PhaseError::Unbounded) => return LpOutcome::Unbounded,
        Err(PhaseError::IterationLimit) => {
            return LpOutcome::Failed("phase-2 iteration limit".into())
        }
    }

    // Recover x from the split variables.
    let mut x = DVector::zeros(n);
    for i in 0..m_live {
        let c = tab.basic[i];
        if c < n {
            x[c] += tab.rhs[i];
        } else if c < 2 * n {
            x[c - n] -= tab.rhs[i];
        }
    }

    // Duals: solve Bᵀy = c_B over the surviving rows, then map back through
    // the row flips. Dropped redundant rows keep zero multipliers.
    let mut bmat = DMatrix::<f64>::zeros(m_live, m_live);
    let mut cb = DVector::<f64>::zeros(m_live);
    for (k, &col) in tab.basic.iter().enumerate() {
        cb[k] = phase2_cost(col);
        for (pos, &orig_row) in live_rows.iter().enumerate() {
            bmat[(pos, k)] = std_column_entry(a, &flip, &slack_col, &art_col, orig_row, col, n);
        }
    }
    let duals = match bmat.transpose().lu().solve(&cb) {
        Some(y) => {
            let mut lam = DVector::zeros(m);
            for (pos, &orig_row) in live_rows.iter().enumerate() {
                lam[orig_row] = -flip[orig_row] * y[pos];
            }
            lam
        }
        None => DVector::zeros(m),
    };

    // A basic solution must satisfy the original rows; anything else is a
    // solver defect, never a silent wrong answer.
    let res = a * &x - b;
    let mut worst = 0.0_f64;
    for i in 0..m {
        let v = match senses[i] {
            RowSense::Le => res[i],
            RowSense::Eq => res[i].abs(),
        };
        worst = worst.max(v);
    }
    if worst > 1e-6 * (1.0 + b.amax()) {
        return LpOutcome::Failed(format!("basic solution violates rows by {worst:.3e}"));
    }

    LpOutcome::Optimal { objective: cost.dot(&x), x, duals }
}

fn std_column_entry(
    a: &DMatrix<f64>,
    flip: &[f64],
    slack_col: &[usize],
    art_col: &[usize],
    row: usize,
    col: usize,
    n: usize,
) -> f64 {
    if col < n {
        flip[row] * a[(row, col)]
    } else if col < 2 * n {
        -flip[row] * a[(row, col - n)]
    } else if slack_col[row] == col {
        flip[row]
    } else if art_col[row] == col {
        1.0
    } else {
        0.0
    }
}

enum PhaseError {
    Unbounded,
    IterationLimit,
}

/// Run simplex iterations until no entering column remains. `col_limit`
/// restricts pricing (phase 2 excludes artificial columns).
fn run_phase(
    tab: &mut Tableau,
    col_limit: usize,
    max_iter: usize,
    objective: impl Fn(&Tableau) -> f64,
) -> Result<(), PhaseError> {
    let m = tab.rhs.len();
    let mut bland = false;
    let mut stall = 0usize;
    let stall_switch = 2 * m + 50;
    let mut last_obj = objective(tab);
    for _ in 0..max_iter {
        let mut entering = usize::MAX;
        if bland {
            for j in 0..col_limit {
                if tab.cost[j] < -COST_TOL {
                    entering = j;
                    break;
                }
            }
        } else {
            let mut best = -COST_TOL;
            for j in 0..col_limit {
                if tab.cost[j] < best {
                    best = tab.cost[j];
                    entering = j;
                }
            }
        }
        if entering == usize::MAX {
            return Ok(());
        }

        let mut leave = usize::MAX;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let coef = tab.data[i * tab.ncols + entering];
            if coef > PIVOT_TOL {
                let ratio = tab.rhs[i].max(0.0) / coef;
                let better = ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && (leave == usize::MAX || tab.basic[i] < tab.basic[leave]));
                if better {
                    best_ratio = ratio;
                    leave = i;
                }
            }
        }
        if leave == usize::MAX {
            return Err(PhaseError::Unbounded);
        }
        tab.pivot(leave, entering);

        let obj = objective(tab);
        if obj < last_obj - 1e-12 * (1.0 + last_obj.abs()) {
            stall = 0;
            last_obj = obj;
        } else {
            stall += 1;
            if stall > stall_switch {
                bland = true;
            }
        }
    }
    Err(PhaseError::IterationLimit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(n: usize) -> Vec<RowSense> {
        vec![RowSense::Le; n]
    }

    #[test]
    fn single_constraint_lp() {
        // min x  s.t.  −x ≤ 0  →  x* = 0.
        let a = DMatrix::from_row_slice(1, 1, &[-1.0]);
        let b = DVector::from_vec(vec![0.0]);
        let cost = DVector::from_vec(vec![1.0]);
        match solve_lp(&a, &b, &le(1), &cost) {
            LpOutcome::Optimal { x, objective, duals } => {
                assert!(x[0].abs() < 1e-9);
                assert!(objective.abs() < 1e-9);
                // Stationarity: q + Aᵀλ = 0 → 1 − λ = 0.
                assert!((duals[0] - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn infeasible_lp_detected() {
        // x ≤ −1 and −x ≤ −1 cannot both hold.
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![-1.0, -1.0]);
        let cost = DVector::from_vec(vec![0.0]);
        assert!(matches!(solve_lp(&a, &b, &le(2), &cost), LpOutcome::Infeasible));
    }

    #[test]
    fn unbounded_lp_detected() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let b = DVector::from_vec(vec![0.0]);
        let cost = DVector::from_vec(vec![1.0]); // min x with x ≤ 0 only: unbounded below
        assert!(matches!(solve_lp(&a, &b, &le(1), &cost), LpOutcome::Unbounded));
    }

    #[test]
    fn equality_rows_and_duals() {
        // min x0 + 2 x1  s.t.  x0 + x1 = 1, x ≥ 0 (as rows).
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let senses = vec![RowSense::Eq, RowSense::Le, RowSense::Le];
        let cost = DVector::from_vec(vec![1.0, 2.0]);
        match solve_lp(&a, &b, &senses, &cost) {
            LpOutcome::Optimal { x, objective, duals } => {
                assert!((x[0] - 1.0).abs() < 1e-9);
                assert!(x[1].abs() < 1e-9);
                assert!((objective - 1.0).abs() < 1e-9);
                // Stationarity q + Aᵀλ = 0 componentwise.
                let grad = &cost + a.transpose() * &duals;
                assert!(grad.amax() < 1e-8, "stationarity residual {grad:?}");
                // Inequality multipliers are nonnegative.
                assert!(duals[1] >= -1e-9 && duals[2] >= -1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn fractional_knapsack_relaxation() {
        // Greedy-verified optimum of the 10-item relaxation with unit data:
        // weights 2, bounds 2, capacity 5.
        let c = [0.42, 0.72, 0.0, 0.3, 0.15, 0.09, 0.19, 0.35, 0.4, 0.54];
        let n = 10;
        let mut rows = Vec::new();
        let mut b = Vec::new();
        let mut senses = Vec::new();
        rows.push(vec![2.0; n]);
        b.push(5.0);
        senses.push(RowSense::Le);
        for i in 0..n {
            let mut lo = vec![0.0; n];
            lo[i] = -1.0;
            rows.push(lo);
            b.push(0.0);
            senses.push(RowSense::Le);
            let mut hi = vec![0.0; n];
            hi[i] = 1.0;
            rows.push(hi);
            b.push(2.0);
            senses.push(RowSense::Le);
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let a = DMatrix::from_row_slice(1 + 2 * n, n, &flat);
        let b = DVector::from_vec(b);
        let cost = DVector::from_vec(c.iter().map(|v| -v).collect());
        match solve_lp(&a, &b, &senses, &cost) {
            LpOutcome::Optimal { x, objective, .. } => {
                assert!((objective + 1.71).abs() < 1e-9, "objective {objective}");
                assert!((x[1] - 2.0).abs() < 1e-9);
                assert!((x[9] - 0.5).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
