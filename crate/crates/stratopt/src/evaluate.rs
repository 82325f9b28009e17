//! Holdout evaluation: infeasibility, suboptimality, accuracy, and timing.
//!
//! Each test parameter is solved from scratch for ground truth, then solved
//! through the online path: top-k strategy prediction, one reduced solve per
//! candidate, and selection of the best candidate by feasibility then
//! objective. A prediction counts as accurate when its normalized constraint
//! violation and relative objective gap both stay inside the configured
//! tolerances.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{LearnError, TrainedPredictor};
use crate::problem::{CanonicalInstance, ParameterSpace, ParametricProblem, ProblemError, RowSense};
use crate::solver::{solve_continuous, solve_mio, solve_reduced, MioOptions, SolveResult, SolveStatus};
use crate::strategy::StrategyCatalog;

/// Default feasibility tolerance on the normalized violation `p`.
pub const DEFAULT_EPS_INF: f64 = 1e-3;
/// Default relative suboptimality tolerance.
pub const DEFAULT_EPS_SUB: f64 = 1e-3;
/// Denominator floor guarding `d` when `|f*| ≈ 0`.
pub const SUBOPT_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Learner(#[from] LearnError),
    #[error("ground-truth solve failed on test sample {index} (θ = {theta:?}): {status:?}")]
    GroundTruthFailed { index: usize, theta: Vec<f64>, status: SolveStatus },
    #[error("all {0} candidate strategies failed on a test sample; diagnostics: {1}")]
    AllCandidatesFailed(usize, String),
    #[error("predictor has no candidates to rank")]
    NoCandidates,
    #[error("invalid evaluation config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub eps_inf: f64,
    pub eps_sub: f64,
    pub top_k: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            eps_inf: DEFAULT_EPS_INF,
            eps_sub: DEFAULT_EPS_SUB,
            top_k: 3,
            n_test: 100,
            seed: 0,
        }
    }
}

impl EvaluationConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.eps_inf <= 0.0 || self.eps_sub <= 0.0 {
            return Err(EvalError::BadConfig("tolerances must be positive".into()));
        }
        if self.top_k == 0 {
            return Err(EvalError::BadConfig("top_k must be at least 1".into()));
        }
        if self.n_test == 0 {
            return Err(EvalError::BadConfig("n_test must be at least 1".into()));
        }
        Ok(())
    }
}

/// Normalized constraint violation
/// `p = ‖(Ax − b)₊‖₂ / max(‖Ax‖₂, ‖b‖₂, 1e-10)`,
/// equality rows contributing their absolute residual.
pub fn infeasibility(inst: &CanonicalInstance, x: &DVector<f64>) -> f64 {
    let ax = &inst.a * x;
    let mut num = 0.0_f64;
    for i in 0..inst.n_con {
        let res = ax[i] - inst.b[i];
        let v = match inst.senses[i] {
            RowSense::Le => res.max(0.0),
            RowSense::Eq => res.abs(),
        };
        num += v * v;
    }
    let r = ax.norm().max(inst.b.norm()).max(1e-10);
    num.sqrt() / r
}

/// Relative suboptimality `d = (f̂ − f*)/max(|f*|, 1e-10)`, clamped at zero.
/// The flag reports when the denominator floor was active.
pub fn suboptimality(f_hat: f64, f_star: f64) -> (f64, bool) {
    let floor_active = f_star.abs() < SUBOPT_FLOOR;
    let denom = f_star.abs().max(SUBOPT_FLOOR);
    let d = ((f_hat - f_star) / denom).max(0.0);
    (d, floor_active)
}

/// Diagnostics for one candidate strategy tried during selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateDiag {
    pub label: u32,
    pub status: String,
    pub p: f64,
    pub objective: f64,
}

/// Outcome of ranking candidates on one instance.
#[derive(Debug, Clone)]
pub struct Selection {
    pub chosen_rank: usize,
    pub chosen_label: u32,
    pub result: SolveResult,
    pub p: f64,
    pub diagnostics: Vec<CandidateDiag>,
}

/// Solve the reduced problem for each ranked candidate and pick the winner:
/// admissible candidates (`p ≤ eps_inf`) by lowest objective, otherwise the
/// lowest violation; ties keep the higher prediction rank.
pub fn select_best(
    inst: &CanonicalInstance,
    candidates: &[(u32, &crate::strategy::Strategy)],
    eps_inf: f64,
) -> Result<Selection, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::NoCandidates);
    }
    let mut diagnostics = Vec::with_capacity(candidates.len());
    let mut solved: Vec<Option<(SolveResult, f64)>> = Vec::with_capacity(candidates.len());
    for (label, strat) in candidates {
        let (result, _route) = solve_reduced(inst, strat);
        if result.status.is_optimal() {
            let p = infeasibility(inst, &result.x);
            diagnostics.push(CandidateDiag {
                label: *label,
                status: "optimal".into(),
                p,
                objective: result.objective,
            });
            solved.push(Some((result, p)));
        } else {
            diagnostics.push(CandidateDiag {
                label: *label,
                status: format!("{:?}", result.status),
                p: f64::INFINITY,
                objective: f64::NAN,
            });
            solved.push(None);
        }
    }

    let mut chosen: Option<usize> = None;
    // Admissible candidates: lowest reduced objective wins; earlier rank on
    // ties.
    for (rank, entry) in solved.iter().enumerate() {
        if let Some((result, p)) = entry {
            if *p <= eps_inf {
                let better = match chosen {
                    None => true,
                    Some(cur) => {
                        let (cur_res, _) = solved[cur].as_ref().unwrap();
                        result.objective < cur_res.objective - 1e-12
                    }
                };
                if better {
                    chosen = Some(rank);
                }
            }
        }
    }
    if chosen.is_none() {
        // No admissible candidate: lowest violation.
        for (rank, entry) in solved.iter().enumerate() {
            if let Some((_, p)) = entry {
                let better = match chosen {
                    None => true,
                    Some(cur) => *p < solved[cur].as_ref().unwrap().1 - 1e-15,
                };
                if better {
                    chosen = Some(rank);
                }
            }
        }
    }
    match chosen {
        Some(rank) => {
            let (result, p) = solved.into_iter().nth(rank).unwrap().unwrap();
            Ok(Selection {
                chosen_rank: rank,
                chosen_label: candidates[rank].0,
                result,
                p,
                diagnostics,
            })
        }
        None => Err(EvalError::AllCandidatesFailed(
            candidates.len(),
            format!("{diagnostics:?}"),
        )),
    }
}

/// Per-sample evaluation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub theta: Vec<f64>,
    pub true_objective: f64,
    pub chosen_label: u32,
    pub chosen_rank: usize,
    pub p: f64,
    pub d: f64,
    pub feasible: bool,
    pub subopt_floor_active: bool,
    pub full_time: f64,
    pub method_time: f64,
    pub candidates: Vec<CandidateDiag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Percentage of samples with `p ≤ eps_inf` and `d ≤ eps_sub`.
    pub accuracy_pct: f64,
    /// Maximum infeasibility over all records.
    pub p_bar: f64,
    /// Maximum suboptimality over feasible records (infeasible ones count
    /// zero and are excluded).
    pub d_bar: f64,
    /// Mean of per-sample (full time / method time).
    pub t_ratio: f64,
    pub n_test: usize,
}

/// Context the report carries alongside the metrics (table columns).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportContext {
    pub problem: String,
    pub learner: String,
    pub n_var: usize,
    pub n_con: usize,
    pub n_train: u64,
    pub good_turing: f64,
    pub n_strategies: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub context: ReportContext,
    pub config: EvaluationConfig,
    pub records: Vec<SampleRecord>,
    pub aggregates: Aggregates,
}

/// Deterministic reduce over the per-sample records; reused when a persisted
/// report is regenerated.
pub fn aggregate(records: &[SampleRecord], cfg: &EvaluationConfig) -> Aggregates {
    let n = records.len();
    let mut correct = 0usize;
    let mut p_bar = 0.0_f64;
    let mut d_bar = 0.0_f64;
    let mut ratio_sum = 0.0_f64;
    for r in records {
        if r.feasible && r.d <= cfg.eps_sub {
            correct += 1;
        }
        p_bar = p_bar.max(r.p);
        if r.feasible {
            d_bar = d_bar.max(r.d);
        }
        ratio_sum += r.full_time / r.method_time.max(1e-12);
    }
    Aggregates {
        accuracy_pct: 100.0 * correct as f64 / n as f64,
        p_bar,
        d_bar,
        t_ratio: ratio_sum / n as f64,
        n_test: n,
    }
}

/// Evaluate a trained predictor on fresh samples. The seed must be disjoint
/// from the exploration seed so the holdout is unseen.
pub fn evaluate(
    predictor: &TrainedPredictor,
    problem: &ParametricProblem,
    space: &ParameterSpace,
    catalog: &StrategyCatalog,
    context: ReportContext,
    cfg: &EvaluationConfig,
) -> Result<EvaluationReport, EvalError> {
    cfg.validate()?;
    let thetas = crate::problem::sample_parameters(space, cfg.seed, cfg.n_test)?;
    let mio = MioOptions::default();
    let k = cfg.top_k.min(catalog.len().max(1));

    let outcomes: Vec<Result<SampleRecord, EvalError>> = thetas
        .into_par_iter()
        .enumerate()
        .map(|(index, theta)| {
            let inst = problem.canonicalize(&theta)?;

            let t_full = Instant::now();
            let truth = if inst.integers.is_empty() {
                solve_continuous(&inst)
            } else {
                solve_mio(&inst, &mio)
            };
            let full_time = t_full.elapsed().as_secs_f64();
            if !truth.status.is_optimal() {
                return Err(EvalError::GroundTruthFailed {
                    index,
                    theta: theta.clone(),
                    status: truth.status,
                });
            }

            let t_method = Instant::now();
            let labels = predictor.predict_topk(&theta, k)?;
            let candidates: Vec<(u32, &crate::strategy::Strategy)> = labels
                .iter()
                .filter_map(|&l| catalog.get(l).map(|s| (l, s)))
                .collect();
            let selection = select_best(&inst, &candidates, cfg.eps_inf)?;
            let method_time = t_method.elapsed().as_secs_f64();

            let feasible = selection.p <= cfg.eps_inf;
            let (d, floor_active) = if feasible {
                suboptimality(selection.result.objective, truth.objective)
            } else {
                (0.0, false)
            };
            Ok(SampleRecord {
                theta,
                true_objective: truth.objective,
                chosen_label: selection.chosen_label,
                chosen_rank: selection.chosen_rank,
                p: selection.p,
                d,
                feasible,
                subopt_floor_active: floor_active,
                full_time,
                method_time,
                candidates: selection.diagnostics,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        records.push(outcome?);
    }
    let aggregates = aggregate(&records, cfg);
    Ok(EvaluationReport { context, config: cfg.clone(), records, aggregates })
}

/// Header of the plain-text results table.
pub fn table_header() -> String {
    format!(
        "{:<18} {:>6} {:>6} {:<7} {:>7} {:>10} {:>5} {:>8} {:>8} {:>10} {:>10}\n",
        "problem", "n_var", "n_con", "learner", "N", "GT", "|S|", "acc[%]", "t_ratio", "p_bar",
        "d_bar"
    )
}

/// One table row in the standard column layout.
pub fn table_row(report: &EvaluationReport) -> String {
    let c = &report.context;
    let a = &report.aggregates;
    format!(
        "{:<18} {:>6} {:>6} {:<7} {:>7} {:>10.2e} {:>5} {:>8.1} {:>8.2} {:>10.2e} {:>10.2e}\n",
        c.problem,
        c.n_var,
        c.n_con,
        c.learner,
        c.n_train,
        c.good_turing,
        c.n_strategies,
        a.accuracy_pct,
        a.t_ratio,
        a.p_bar,
        a.d_bar
    )
}
