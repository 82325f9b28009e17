//! Best-bound branch-and-bound over integer variables.
//!
//! Nodes only tighten the right-hand sides of the existing bound rows, so a
//! node is just a pair of integer bound vectors. Selection is best-bound
//! (smallest relaxation objective, ties by node id), branching picks the most
//! fractional variable, and the final incumbent is re-solved with all
//! integers pinned to produce clean tight rows and multipliers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::problem::CanonicalInstance;
use crate::solver::{continuous_with_rhs, extract_tight, SolveResult, SolveStatus};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MioOptions {
    pub node_limit: usize,
    pub int_tol: f64,
    /// Pruning slack; kept below the advertised optimality gap of 1e-8.
    pub abs_gap: f64,
    pub rel_gap: f64,
}

impl Default for MioOptions {
    fn default() -> Self {
        MioOptions { node_limit: 1_000_000, int_tol: 1e-6, abs_gap: 1e-9, rel_gap: 1e-9 }
    }
}

struct HeapNode {
    bound: f64,
    id: u64,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    // Reversed so the max-heap pops the smallest bound first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

pub(crate) fn solve_mio(inst: &CanonicalInstance, opts: &MioOptions) -> SolveResult {
    let t0 = Instant::now();
    let ints = &inst.integers;
    if ints.is_empty() {
        return SolveResult::failed(
            "instance has no integer variables; use solve_continuous",
            inst.n_var,
            inst.n_con,
            t0,
        );
    }
    // Integer variables carry both bounds as rows (checked at model build).
    let mut lo0 = Vec::with_capacity(ints.len());
    let mut hi0 = Vec::with_capacity(ints.len());
    for &var in ints {
        let lr = match inst.lower_row[var] {
            Some(r) => r,
            None => {
                return SolveResult::failed(
                    format!("integer variable {var} lacks a lower bound row"),
                    inst.n_var,
                    inst.n_con,
                    t0,
                )
            }
        };
        let ur = match inst.upper_row[var] {
            Some(r) => r,
            None => {
                return SolveResult::failed(
                    format!("integer variable {var} lacks an upper bound row"),
                    inst.n_var,
                    inst.n_con,
                    t0,
                )
            }
        };
        let lo = (-inst.b[lr] - 1e-9).ceil() as i64;
        let hi = (inst.b[ur] + 1e-9).floor() as i64;
        if lo > hi {
            return SolveResult::verdict(SolveStatus::Infeasible, inst.n_var, inst.n_con, t0);
        }
        lo0.push(lo);
        hi0.push(hi);
    }

    let prune_slack =
        |inc: f64| -> f64 { opts.abs_gap.max(opts.rel_gap * inc.abs()) };

    let mut heap = BinaryHeap::new();
    heap.push(HeapNode { bound: f64::NEG_INFINITY, id: 0, lo: lo0, hi: hi0 });
    let mut next_id = 1u64;
    let mut incumbent: Option<(f64, Vec<i64>)> = None;
    let mut processed = 0usize;

    while let Some(node) = heap.pop() {
        if let Some((inc_obj, _)) = &incumbent {
            // Best-bound order: once the top node cannot improve, none can.
            if node.bound >= *inc_obj - prune_slack(*inc_obj) {
                break;
            }
        }
        if processed >= opts.node_limit {
            return SolveResult::failed(
                format!("node limit {} exceeded", opts.node_limit),
                inst.n_var,
                inst.n_con,
                t0,
            );
        }
        processed += 1;

        let mut b = inst.b.clone();
        for (j, &var) in ints.iter().enumerate() {
            if let Some(ur) = inst.upper_row[var] {
                b[ur] = b[ur].min(node.hi[j] as f64);
            }
            if let Some(lr) = inst.lower_row[var] {
                b[lr] = b[lr].min(-(node.lo[j] as f64));
            }
        }
        let rel = continuous_with_rhs(inst, &b, Instant::now());
        match &rel.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                if processed == 1 && incumbent.is_none() {
                    return SolveResult::verdict(
                        SolveStatus::Unbounded,
                        inst.n_var,
                        inst.n_con,
                        t0,
                    );
                }
                return SolveResult::failed(
                    "child relaxation reported unbounded",
                    inst.n_var,
                    inst.n_con,
                    t0,
                );
            }
            SolveStatus::Failed(e) => {
                return SolveResult::failed(
                    format!("relaxation failed: {e}"),
                    inst.n_var,
                    inst.n_con,
                    t0,
                );
            }
            SolveStatus::Optimal => {}
        }
        let bound = rel.objective;
        if let Some((inc_obj, _)) = &incumbent {
            if bound >= *inc_obj - prune_slack(*inc_obj) {
                continue;
            }
        }

        // Most fractional variable; ties go to the lowest index.
        let mut branch: Option<(usize, f64)> = None;
        for (j, &var) in ints.iter().enumerate() {
            let v = rel.x[var];
            let frac_dist = (v - v.round()).abs();
            if frac_dist > opts.int_tol {
                let frac = v - v.floor();
                let score = (frac - 0.5).abs();
                let better = match &branch {
                    None => true,
                    Some((_, best)) => score < *best - 1e-15,
                };
                if better {
                    branch = Some((j, score));
                    // Remember the fractional value through node bounds below.
                }
            }
        }

        match branch {
            None => {
                // Integral relaxation: candidate incumbent.
                let vals: Vec<i64> = ints.iter().map(|&v| rel.x[v].round() as i64).collect();
                let improves = match &incumbent {
                    None => true,
                    Some((inc_obj, _)) => bound < *inc_obj,
                };
                if improves {
                    incumbent = Some((bound, vals));
                }
            }
            Some((j, _)) => {
                let v = rel.x[ints[j]];
                let floor_v = v.floor() as i64;
                let mut left = HeapNode {
                    bound,
                    id: next_id,
                    lo: node.lo.clone(),
                    hi: node.hi.clone(),
                };
                next_id += 1;
                left.hi[j] = left.hi[j].min(floor_v);
                if left.lo[j] <= left.hi[j] {
                    heap.push(left);
                }
                let mut right = HeapNode { bound, id: next_id, lo: node.lo, hi: node.hi };
                next_id += 1;
                right.lo[j] = right.lo[j].max(floor_v + 1);
                if right.lo[j] <= right.hi[j] {
                    heap.push(right);
                }
            }
        }
    }

    let (_, vals) = match incumbent {
        Some(v) => v,
        None => return SolveResult::verdict(SolveStatus::Infeasible, inst.n_var, inst.n_con, t0),
    };

    // Re-solve with integers pinned: clean continuous optimum, tight rows
    // measured against the original right-hand sides.
    let mut b = inst.b.clone();
    for (j, &var) in ints.iter().enumerate() {
        if let Some(ur) = inst.upper_row[var] {
            b[ur] = b[ur].min(vals[j] as f64);
        }
        if let Some(lr) = inst.lower_row[var] {
            b[lr] = b[lr].min(-(vals[j] as f64));
        }
    }
    let fixed = continuous_with_rhs(inst, &b, Instant::now());
    if !fixed.status.is_optimal() {
        return SolveResult::failed(
            format!("integer-fixed re-solve failed: {:?}", fixed.status),
            inst.n_var,
            inst.n_con,
            t0,
        );
    }
    let tight = extract_tight(inst, &fixed.x);
    SolveResult {
        status: SolveStatus::Optimal,
        objective: fixed.objective,
        tight_rows: tight,
        integer_values: vals,
        duals: fixed.duals,
        max_violation: inst.max_violation(&fixed.x),
        solve_time: t0.elapsed().as_secs_f64(),
        x: fixed.x,
    }
}
