//! Multiclass learners mapping parameter vectors to strategy labels.
//!
//! Two families: classification trees trained by greedy induction plus local
//! search (parallel single-feature splits, or hyperplane splits refined by
//! coordinate descent), and a feedforward ReLU network with a softmax head
//! trained by mini-batch SGD. Both run a hyperparameter grid with a seeded
//! 90/10 train/validation split and keep the grid point with the best
//! validation accuracy.

pub mod nn;
pub mod tree;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use nn::{train_nn, NnGrid, NnModel};
pub use tree::{oct_loss, render_tree, render_tree_dot, train_oct, OctGrid, SplitMode, TreeModel, TreeNode};

/// Fraction of samples held out for validation during grid search.
pub const VALIDATION_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: u32, n_classes: u32 },
    #[error("feature row {row} has length {got}, expected {expected}")]
    RaggedFeatures { row: usize, got: usize, expected: usize },
    #[error("input has dimension {got}, model expects {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("top-k request k={k} outside 1..={m}")]
    BadTopK { k: usize, m: u32 },
    #[error("every grid point failed: {0}")]
    AllGridPointsFailed(String),
    #[error("training needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

/// Labeled samples with a deterministic train/validation split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub n_classes: u32,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub split_seed: u64,
}

impl Dataset {
    /// Build a dataset and split it 90/10 under the given seed.
    pub fn with_split(
        features: Vec<Vec<f64>>,
        labels: Vec<u32>,
        n_classes: u32,
        split_seed: u64,
    ) -> Result<Self, LearnError> {
        let n = features.len();
        if n == 0 || labels.len() != n {
            return Err(LearnError::EmptyDataset);
        }
        let p = features[0].len();
        for (row, f) in features.iter().enumerate() {
            if f.len() != p {
                return Err(LearnError::RaggedFeatures { row, got: f.len(), expected: p });
            }
        }
        for &l in &labels {
            if l >= n_classes {
                return Err(LearnError::LabelOutOfRange { label: l, n_classes });
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
        order.shuffle(&mut rng);
        let n_val = if n >= 2 {
            ((n as f64 * VALIDATION_FRACTION).round() as usize).clamp(1, n - 1)
        } else {
            0
        };
        let val_idx = order[..n_val].to_vec();
        let train_idx = order[n_val..].to_vec();
        Ok(Dataset { features, labels, n_classes, train_idx, val_idx, split_seed })
    }

    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PredictorModel {
    Tree(TreeModel),
    Network(NnModel),
}

/// A trained classifier together with its validation score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedPredictor {
    pub model: PredictorModel,
    pub val_accuracy: f64,
}

impl TrainedPredictor {
    pub fn n_classes(&self) -> u32 {
        match &self.model {
            PredictorModel::Tree(t) => t.n_classes,
            PredictorModel::Network(n) => n.n_classes,
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.model {
            PredictorModel::Tree(t) => t.input_dim,
            PredictorModel::Network(n) => n.input_dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match &self.model {
            PredictorModel::Tree(t) => match t.mode {
                SplitMode::Parallel => "oct",
                SplitMode::Hyperplane => "oct-h",
            },
            PredictorModel::Network(_) => "nn",
        }
    }

    /// Ranked top-k labels: distinct, sorted by descending score, determin-
    /// istic tie-break by ascending label. Trees rank by the reached leaf's
    /// training class frequencies, padded from global label frequencies.
    pub fn predict_topk(&self, theta: &[f64], k: usize) -> Result<Vec<u32>, LearnError> {
        let m = self.n_classes();
        if k == 0 || k as u64 > m as u64 {
            return Err(LearnError::BadTopK { k, m });
        }
        if theta.len() != self.input_dim() {
            return Err(LearnError::DimMismatch { expected: self.input_dim(), got: theta.len() });
        }
        let ranking = match &self.model {
            PredictorModel::Tree(t) => t.ranked_labels(theta),
            PredictorModel::Network(n) => n.ranked_labels(theta),
        };
        Ok(ranking.into_iter().take(k).collect())
    }

    pub fn predict(&self, theta: &[f64]) -> Result<u32, LearnError> {
        Ok(self.predict_topk(theta, 1)?[0])
    }

    /// Top-1 accuracy over a set of samples.
    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[u32]) -> f64 {
        if features.is_empty() {
            return 1.0;
        }
        let correct = features
            .iter()
            .zip(labels)
            .filter(|(f, &y)| self.predict(f).map(|p| p == y).unwrap_or(false))
            .count();
        correct as f64 / features.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_a_reproducible_partition() {
        let features: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels = vec![0u32; 100];
        let a = Dataset::with_split(features.clone(), labels.clone(), 1, 5).unwrap();
        let b = Dataset::with_split(features, labels, 1, 5).unwrap();
        assert_eq!(a.train_idx, b.train_idx);
        assert_eq!(a.val_idx, b.val_idx);
        assert_eq!(a.val_idx.len(), 10);
        let mut all: Vec<usize> = a.train_idx.iter().chain(&a.val_idx).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn bad_labels_rejected() {
        let features = vec![vec![0.0], vec![1.0]];
        assert!(Dataset::with_split(features, vec![0, 3], 2, 0).is_err());
    }
}
