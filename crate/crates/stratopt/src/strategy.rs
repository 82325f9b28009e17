//! Strategy encoding and the deduplicating catalog of observed strategies.
//!
//! A strategy is the information needed to rebuild an optimal solution from a
//! small equality-constrained solve: the sorted tight-row index set and, for
//! mixed-integer problems, the optimal integer assignment. The catalog maps
//! each distinct strategy to a stable class label (first-seen order) and
//! tracks how many samples carried each label — the frequency data behind the
//! Good-Turing estimate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{SolveResult, SolveStatus};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("cannot encode a non-optimal solve result: {0:?}")]
    NotOptimal(SolveStatus),
}

/// Canonical strategy value: hashable, orderable, comparable by fields.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy {
    /// Sorted ascending, duplicate-free canonical row indices.
    pub tight_rows: Vec<u32>,
    /// One value per integer variable, empty for continuous problems.
    pub integer_values: Vec<i64>,
}

/// Extract the strategy from an optimal solve.
pub fn encode(result: &SolveResult) -> Result<Strategy, StrategyError> {
    if !result.status.is_optimal() {
        return Err(StrategyError::NotOptimal(result.status.clone()));
    }
    let mut tight_rows: Vec<u32> = result.tight_rows.iter().map(|&r| r as u32).collect();
    tight_rows.sort_unstable();
    tight_rows.dedup();
    Ok(Strategy { tight_rows, integer_values: result.integer_values.clone() })
}

/// Append-only map from strategies to labels `0..M`, with per-label counts.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StrategyCatalog {
    strategies: Vec<Strategy>,
    counts: Vec<u64>,
    #[serde(skip)]
    index: HashMap<Strategy, u32>,
}

impl StrategyCatalog {
    pub fn new() -> Self {
        StrategyCatalog::default()
    }

    /// Insert a strategy; returns its label and whether it was unseen.
    /// Labels are assigned in first-seen order and never change.
    pub fn insert(&mut self, s: Strategy) -> (u32, bool) {
        if self.index.is_empty() && !self.strategies.is_empty() {
            self.rebuild_index();
        }
        if let Some(&label) = self.index.get(&s) {
            self.counts[label as usize] += 1;
            (label, false)
        } else {
            let label = self.strategies.len() as u32;
            self.index.insert(s.clone(), label);
            self.strategies.push(s);
            self.counts.push(1);
            (label, true)
        }
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .strategies
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
    }

    /// Number of distinct strategies (M).
    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn get(&self, label: u32) -> Option<&Strategy> {
        self.strategies.get(label as usize)
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    /// Per-label occurrence counts; the sum equals the number of inserts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_samples(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn strat(rows: &[u32], ints: &[i64]) -> Strategy {
        Strategy { tight_rows: rows.to_vec(), integer_values: ints.to_vec() }
    }

    #[test]
    fn reinsert_returns_original_label() {
        let mut cat = StrategyCatalog::new();
        let s = strat(&[0, 3], &[1, 0]);
        let (l1, new1) = cat.insert(s.clone());
        let (l2, new2) = cat.insert(s);
        assert_eq!((l1, new1), (0, true));
        assert_eq!((l2, new2), (0, false));
        assert_eq!(cat.counts(), &[2]);
    }

    #[test]
    fn labels_follow_insertion_order() {
        let mut cat = StrategyCatalog::new();
        for k in 0..5 {
            let (label, is_new) = cat.insert(strat(&[k], &[]));
            assert_eq!(label, k);
            assert!(is_new);
        }
        assert_eq!(cat.len(), 5);
    }

    #[test]
    fn counting_identity_holds() {
        // Σ_r r·N_r = N where N_r is the number of labels with count r.
        let mut cat = StrategyCatalog::new();
        let inserts: &[&[u32]] = &[&[0], &[1], &[0], &[2], &[0], &[1], &[3]];
        for rows in inserts {
            cat.insert(strat(rows, &[]));
        }
        let n: u64 = inserts.len() as u64;
        let mut freq_of_freq: HashMap<u64, u64> = HashMap::new();
        for &c in cat.counts() {
            *freq_of_freq.entry(c).or_insert(0) += 1;
        }
        let total: u64 = freq_of_freq.iter().map(|(r, nr)| r * nr).sum();
        assert_eq!(total, n);
        assert_eq!(cat.total_samples(), n);
    }

    #[test]
    fn serialization_round_trip_preserves_labels() {
        let mut cat = StrategyCatalog::new();
        let stream: Vec<Strategy> =
            (0..20).map(|k| strat(&[k % 4, 10 + (k % 3)], &[(k % 2) as i64])).collect();
        for s in &stream {
            cat.insert(s.clone());
        }
        let json = serde_json::to_string(&cat).unwrap();
        let mut reloaded: StrategyCatalog = serde_json::from_str(&json).unwrap();
        // Re-inserting the same stream must reproduce identical labels.
        for s in &stream {
            let (_, is_new) = reloaded.insert(s.clone());
            assert!(!is_new);
        }
        for (a, b) in cat.strategies().iter().zip(reloaded.strategies()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn encode_rejects_non_optimal() {
        let result = SolveResult {
            status: SolveStatus::Infeasible,
            x: DVector::zeros(1),
            objective: f64::NAN,
            tight_rows: vec![],
            integer_values: vec![],
            duals: DVector::zeros(0),
            max_violation: f64::INFINITY,
            solve_time: 0.0,
        };
        assert!(encode(&result).is_err());
    }
}
