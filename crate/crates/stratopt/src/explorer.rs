//! Batched strategy exploration with Good-Turing termination.
//!
//! Parameters are drawn in one sequential stream, solved in parallel batches,
//! and inserted into the catalog in sample order, so labeling is independent
//! of both batch size and worker scheduling. Exploration stops when the
//! Good-Turing estimate `G = N₁/N` (estimate mode) or the high-confidence
//! missing-mass bound `G + c·√(ln(3/β)/N)` (full-bound mode) drops below the
//! target, or when the sample cap is reached.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{CanonicalInstance, ParameterSpace, ParametricProblem, ProblemError};
use crate::solver::{solve_continuous, solve_mio, MioOptions, SolveStatus};
use crate::strategy::{encode, Strategy, StrategyCatalog};

/// Constant of the missing-mass confidence bound: `c = 2√2 + √3`.
pub fn missing_mass_constant() -> f64 {
    2.0 * std::f64::consts::SQRT_2 + 3.0_f64.sqrt()
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("parameter space has dimension {space}, problem expects {problem}")]
    SpaceMismatch { space: usize, problem: usize },
    #[error(
        "sample {index} could not be solved ({status:?}) at θ = {theta:?}; \
         the always-feasible assumption is violated"
    )]
    UnsolvedSample { index: usize, status: SolveStatus, theta: Vec<f64> },
    #[error("good_turing needs at least one sample")]
    NoSamples,
    #[error("good_turing counts sum to {sum}, expected {n}")]
    InconsistentCounts { sum: u64, n: u64 },
}

/// Good-Turing estimate of unseen-strategy mass: `G = N₁/N` with `N₁` the
/// number of labels observed exactly once.
pub fn good_turing(counts: &[u64], n: u64) -> Result<f64, ExploreError> {
    if n == 0 {
        return Err(ExploreError::NoSamples);
    }
    let sum: u64 = counts.iter().sum();
    if sum != n {
        return Err(ExploreError::InconsistentCounts { sum, n });
    }
    let n1 = counts.iter().filter(|&&c| c == 1).count() as f64;
    Ok(n1 / n as f64)
}

/// High-confidence upper bound on the unseen-strategy probability:
/// `G + c·√((1/N)·ln(3/β))`.
pub fn missing_mass_bound(g: f64, n: u64, beta: f64) -> f64 {
    g + missing_mass_constant() * ((3.0 / beta).ln() / n as f64).sqrt()
}

/// Smallest `N` for which the bound can reach `ε` when `G = 0`
/// (analytic inversion of the bound formula).
pub fn min_samples_for_bound(epsilon: f64, beta: f64) -> f64 {
    let c = missing_mass_constant();
    (c / epsilon).powi(2) * (3.0 / beta).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExploreMode {
    /// Stop when `G ≤ ε` (the practical protocol).
    EstimateOnly,
    /// Stop when the confidence bound itself drops below `ε`.
    FullBound,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplorationConfig {
    pub epsilon: f64,
    pub beta: f64,
    pub batch_size: usize,
    pub mode: ExploreMode,
    pub max_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub verbose: bool,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            epsilon: 0.005,
            beta: 0.05,
            batch_size: 5000,
            mode: ExploreMode::EstimateOnly,
            max_samples: 100_000,
            seed: 0,
            verbose: false,
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<(), ExploreError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ExploreError::BadConfig(format!("epsilon {} not in (0,1)", self.epsilon)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ExploreError::BadConfig(format!("beta {} not in (0,1)", self.beta)));
        }
        if self.batch_size == 0 {
            return Err(ExploreError::BadConfig("batch_size must be ≥ 1".into()));
        }
        if self.max_samples == 0 {
            return Err(ExploreError::BadConfig("max_samples must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminated {
    Bound,
    Estimate,
    Cap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplorationResult {
    pub samples: Vec<(Vec<f64>, u32)>,
    pub catalog: StrategyCatalog,
    pub n: u64,
    pub good_turing: f64,
    pub bound_value: f64,
    pub terminated_by: Terminated,
}

/// Solve one instantiated sample and encode its strategy.
fn solve_and_encode(
    inst: &CanonicalInstance,
    mio: &MioOptions,
) -> Result<Strategy, SolveStatus> {
    let result = if inst.integers.is_empty() {
        solve_continuous(inst)
    } else {
        solve_mio(inst, mio)
    };
    if !result.status.is_optimal() {
        return Err(result.status);
    }
    encode(&result).map_err(|_| result.status.clone())
}

/// Run the exploration loop until a termination condition fires.
pub fn explore(
    problem: &ParametricProblem,
    space: &ParameterSpace,
    cfg: &ExplorationConfig,
) -> Result<ExplorationResult, ExploreError> {
    cfg.validate()?;
    space.validate()?;
    if space.dim() != problem.param_dim {
        return Err(ExploreError::SpaceMismatch { space: space.dim(), problem: problem.param_dim });
    }
    let mio = MioOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut catalog = StrategyCatalog::new();
    let mut samples: Vec<(Vec<f64>, u32)> = Vec::new();

    loop {
        let take = cfg.batch_size.min(cfg.max_samples - samples.len());
        let mut batch: Vec<Vec<f64>> = Vec::with_capacity(take);
        for _ in 0..take {
            let mut theta = Vec::with_capacity(problem.param_dim);
            space.sample_into(&mut rng, &mut theta);
            batch.push(theta);
        }
        let solved: Vec<Result<Strategy, SolveStatus>> = batch
            .par_iter()
            .map(|theta| {
                let inst = problem
                    .canonicalize(theta)
                    .map_err(|e| SolveStatus::Failed(e.to_string()))?;
                solve_and_encode(&inst, &mio)
            })
            .collect();
        // Catalog insertion in sample order keeps labels deterministic.
        for (offset, outcome) in solved.into_iter().enumerate() {
            match outcome {
                Ok(strategy) => {
                    let (label, _) = catalog.insert(strategy);
                    samples.push((std::mem::take(&mut batch[offset]), label));
                }
                Err(status) => {
                    return Err(ExploreError::UnsolvedSample {
                        index: samples.len() + offset,
                        status,
                        theta: batch[offset].clone(),
                    });
                }
            }
        }

        let n = samples.len() as u64;
        let g = good_turing(catalog.counts(), n)?;
        let bound = missing_mass_bound(g, n, cfg.beta);
        if cfg.verbose {
            eprintln!(
                "[explore] N={n} M={} G={g:.6} bound={bound:.6}",
                catalog.len()
            );
        }
        let terminated = match cfg.mode {
            ExploreMode::FullBound if bound <= cfg.epsilon => Some(Terminated::Bound),
            ExploreMode::EstimateOnly if g <= cfg.epsilon => Some(Terminated::Estimate),
            _ if samples.len() >= cfg.max_samples => Some(Terminated::Cap),
            _ => None,
        };
        if let Some(terminated_by) = terminated {
            return Ok(ExplorationResult {
                samples,
                catalog,
                n,
                good_turing: g,
                bound_value: bound,
                terminated_by,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn good_turing_direct_counts() {
        // Counts (2,1,2,1) over N=6: two singletons → G = 1/3.
        assert_eq!(good_turing(&[2, 1, 2, 1], 6).unwrap(), 1.0 / 3.0);
        // One label holding all samples → G = 0.
        assert_eq!(good_turing(&[10], 10).unwrap(), 0.0);
        // All distinct → G = 1.
        assert_eq!(good_turing(&[1, 1, 1, 1], 4).unwrap(), 1.0);
    }

    #[test]
    fn good_turing_rejects_bad_input() {
        assert!(matches!(good_turing(&[], 0), Err(ExploreError::NoSamples)));
        assert!(matches!(
            good_turing(&[2, 2], 5),
            Err(ExploreError::InconsistentCounts { sum: 4, n: 5 })
        ));
    }

    #[test]
    fn missing_mass_bound_matches_oracle() {
        // Values computed independently in extended precision.
        let c = missing_mass_constant();
        assert!((c - 4.560477932315068).abs() < 1e-15);
        let b1 = missing_mass_bound(0.0, 100_000, 0.05);
        assert!((b1 - 0.02918116005555221).abs() < 1e-13, "got {b1}");
        let b2 = missing_mass_bound(0.1, 10_000, 0.05);
        assert!((b2 - 0.1922789305414706).abs() < 1e-13, "got {b2}");
        // β = 3 makes ln(3/β) = 0: bound collapses to G.
        assert_eq!(missing_mass_bound(0.25, 100, 3.0), 0.25);
    }

    #[test]
    fn bound_is_monotone_decreasing_in_n() {
        let mut prev = f64::INFINITY;
        for k in 1..200u64 {
            let n = k * 37;
            let b = missing_mass_bound(0.01, n, 0.05);
            assert!(b < prev, "bound not decreasing at n={n}");
            prev = b;
        }
    }

    #[test]
    fn analytic_inversion_of_full_bound() {
        // At ε = 0.005, β = 0.05 the bound needs N ≥ (c/ε)²·ln(60) ≈ 3.4e6.
        let n_min = min_samples_for_bound(0.005, 0.05);
        assert!((n_min - 3_406_160.408751023).abs() < 1e-3, "got {n_min}");
        let just_enough = n_min.ceil() as u64;
        assert!(missing_mass_bound(0.0, just_enough, 0.05) <= 0.005);
        assert!(missing_mass_bound(0.0, just_enough - 1, 0.05) > 0.005);
    }
}
