//! Feedforward network with ReLU hidden layers and a softmax output,
//! trained by mini-batch SGD on the cross-entropy of one-hot labels.
//! Gradients come from plain backpropagation; `loss` and
//! `loss_and_gradients` are exposed so tests can check the analytic
//! gradient against central finite differences.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError, PredictorModel, TrainedPredictor};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NnModel {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    pub input_dim: usize,
    pub n_classes: u32,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

/// SGD hyperparameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NnGrid {
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub epochs: Vec<usize>,
    /// Hidden layer widths; `None` picks `max(32, 2·M)` twice.
    pub hidden: Option<Vec<usize>>,
}

impl Default for NnGrid {
    fn default() -> Self {
        NnGrid {
            learning_rates: vec![0.001, 0.01, 0.1],
            batch_sizes: vec![32, 128],
            epochs: vec![50, 100],
            hidden: None,
        }
    }
}

fn softmax_col(z: &mut DMatrix<f64>) {
    for mut col in z.column_iter_mut() {
        let max = col.max();
        let mut sum = 0.0;
        for v in col.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in col.iter_mut() {
            *v /= sum;
        }
    }
}

impl NnModel {
    /// Seeded scaled-normal initialization: `W ~ N(0, 2/fan_in)`, `b = 0`.
    pub fn init(dims: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 1..dims.len() {
            let (n_out, n_in) = (dims[l], dims[l - 1]);
            let scale = (2.0 / n_in as f64).sqrt();
            let w = DMatrix::from_fn(n_out, n_in, |_, _| {
                let v: f64 = rng.sample(StandardNormal);
                v * scale
            });
            weights.push(w);
            biases.push(DVector::zeros(n_out));
        }
        NnModel {
            weights,
            biases,
            input_dim: dims[0],
            n_classes: *dims.last().unwrap() as u32,
            learning_rate: 0.0,
            batch_size: 0,
            epochs: 0,
        }
    }

    /// Softmax class scores for a batch given as columns of `x`.
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x.clone();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * &y;
            for mut col in z.column_iter_mut() {
                col += b;
            }
            if l < last {
                z.apply(|v| *v = v.max(0.0));
            }
            y = z;
        }
        softmax_col(&mut y);
        y
    }

    pub fn scores(&self, theta: &[f64]) -> DVector<f64> {
        let x = DMatrix::from_column_slice(theta.len(), 1, theta);
        DVector::from_column_slice(self.forward_batch(&x).column(0).as_slice())
    }

    /// Labels ranked by descending softmax score, ties by ascending label.
    pub fn ranked_labels(&self, theta: &[f64]) -> Vec<u32> {
        let scores = self.scores(theta);
        let mut order: Vec<u32> = (0..self.n_classes).collect();
        order.sort_by(|&a, &b| {
            scores[b as usize]
                .total_cmp(&scores[a as usize])
                .then(a.cmp(&b))
        });
        order
    }

    /// Mean cross-entropy of one-hot labels over the batch columns.
    pub fn loss(&self, x: &DMatrix<f64>, labels: &[u32]) -> f64 {
        let probs = self.forward_batch(x);
        let n = labels.len();
        let mut total = 0.0;
        for (k, &y) in labels.iter().enumerate() {
            total -= probs[(y as usize, k)].max(1e-300).ln();
        }
        total / n as f64
    }

    /// Backpropagation: mean cross-entropy and its gradients.
    pub fn loss_and_gradients(
        &self,
        x: &DMatrix<f64>,
        labels: &[u32],
    ) -> (f64, Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let n_layers = self.weights.len();
        let batch = labels.len();
        // Forward pass keeping activations.
        let mut acts = vec![x.clone()];
        let mut pre = Vec::with_capacity(n_layers);
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * &acts[l];
            for mut col in z.column_iter_mut() {
                col += b;
            }
            pre.push(z.clone());
            if l < n_layers - 1 {
                z.apply(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        let mut probs = acts[n_layers].clone();
        softmax_col(&mut probs);
        let mut loss = 0.0;
        for (k, &y) in labels.iter().enumerate() {
            loss -= probs[(y as usize, k)].max(1e-300).ln();
        }
        loss /= batch as f64;

        // δ at the softmax output.
        let mut delta = probs;
        for (k, &y) in labels.iter().enumerate() {
            delta[(y as usize, k)] -= 1.0;
        }
        delta /= batch as f64;

        let mut grad_w = vec![DMatrix::zeros(0, 0); n_layers];
        let mut grad_b = vec![DVector::zeros(0); n_layers];
        for l in (0..n_layers).rev() {
            grad_w[l] = &delta * acts[l].transpose();
            grad_b[l] = DVector::from_iterator(
                delta.nrows(),
                delta.row_iter().map(|r| r.sum()),
            );
            if l > 0 {
                let mut back = self.weights[l].transpose() * &delta;
                for (v, z) in back.iter_mut().zip(pre[l - 1].iter()) {
                    if *z <= 0.0 {
                        *v = 0.0;
                    }
                }
                delta = back;
            }
        }
        (loss, grad_w, grad_b)
    }

    fn sgd_step(&mut self, x: &DMatrix<f64>, labels: &[u32], lr: f64) -> f64 {
        let (loss, gw, gb) = self.loss_and_gradients(x, labels);
        for ((w, b), (dw, db)) in
            self.weights.iter_mut().zip(&mut self.biases).zip(gw.iter().zip(&gb))
        {
            w.zip_apply(dw, |wv, dv| *wv -= lr * dv);
            b.axpy(-lr, db, 1.0);
        }
        loss
    }
}

fn batch_matrix(features: &[Vec<f64>], idx: &[usize]) -> DMatrix<f64> {
    let p = features[0].len();
    DMatrix::from_fn(p, idx.len(), |r, c| features[idx[c]][r])
}

/// Grid-search SGD training. Grid points that blow up (non-finite loss) are
/// discarded; ties on validation accuracy keep the earliest grid point in
/// (learning rate, batch size, epochs) order.
pub fn train_nn(data: &Dataset, grid: &NnGrid, seed: u64) -> Result<TrainedPredictor, LearnError> {
    if data.n() < 2 {
        return Err(LearnError::TooFewSamples { needed: 2, got: data.n() });
    }
    let p = data.dim();
    let m = data.n_classes as usize;
    if m == 1 {
        // Single class: constant predictor, no training needed.
        let model = NnModel::init(&[p, 1], seed);
        return Ok(TrainedPredictor {
            model: PredictorModel::Network(model),
            val_accuracy: 1.0,
        });
    }
    let hidden = grid
        .hidden
        .clone()
        .unwrap_or_else(|| vec![32.max(2 * m), 32.max(2 * m)]);
    let mut dims = vec![p];
    dims.extend(&hidden);
    dims.push(m);

    let val_features: Vec<Vec<f64>> =
        data.val_idx.iter().map(|&i| data.features[i].clone()).collect();
    let val_labels: Vec<u32> = data.val_idx.iter().map(|&i| data.labels[i]).collect();

    let mut points = Vec::new();
    for &lr in &grid.learning_rates {
        for &bs in &grid.batch_sizes {
            for &ep in &grid.epochs {
                points.push((lr, bs, ep));
            }
        }
    }

    let outcomes: Vec<Option<(NnModel, f64)>> = points
        .par_iter()
        .enumerate()
        .map(|(gi, &(lr, bs, ep))| {
            let mut model = NnModel::init(&dims, seed.wrapping_add(gi as u64 * 7919));
            model.learning_rate = lr;
            model.batch_size = bs;
            model.epochs = ep;
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ 0xabcd ^ (gi as u64).wrapping_mul(104729));
            let mut order = data.train_idx.to_vec();
            for _epoch in 0..ep {
                order.shuffle(&mut rng);
                for chunk in order.chunks(bs) {
                    let x = batch_matrix(&data.features, chunk);
                    let labels: Vec<u32> = chunk.iter().map(|&i| data.labels[i]).collect();
                    let loss = model.sgd_step(&x, &labels, lr);
                    if !loss.is_finite() {
                        return None;
                    }
                }
            }
            let predictor = TrainedPredictor {
                model: PredictorModel::Network(model.clone()),
                val_accuracy: 0.0,
            };
            let val_acc = if val_features.is_empty() {
                let tf: Vec<Vec<f64>> =
                    data.train_idx.iter().map(|&i| data.features[i].clone()).collect();
                let tl: Vec<u32> = data.train_idx.iter().map(|&i| data.labels[i]).collect();
                predictor.accuracy(&tf, &tl)
            } else {
                predictor.accuracy(&val_features, &val_labels)
            };
            Some((model, val_acc))
        })
        .collect();

    let mut best: Option<(f64, usize, NnModel)> = None;
    for (gi, outcome) in outcomes.into_iter().enumerate() {
        if let Some((model, acc)) = outcome {
            let better = match &best {
                None => true,
                Some((ba, _, _)) => acc > *ba + 1e-12,
            };
            if better {
                best = Some((acc, gi, model));
            }
        }
    }
    match best {
        Some((val_accuracy, _, model)) => {
            Ok(TrainedPredictor { model: PredictorModel::Network(model), val_accuracy })
        }
        None => Err(LearnError::AllGridPointsFailed(
            "non-finite loss on every learning-rate/batch/epoch combination".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n_per: usize, centers: &[(f64, f64)]) -> (Vec<Vec<f64>>, Vec<u32>) {
        // Deterministic separable blobs with margin well above the spread.
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for i in 0..n_per {
                let dx = ((i * 7919 + c * 104729) % 100) as f64 / 100.0 - 0.5;
                let dy = ((i * 6151 + c * 65537) % 100) as f64 / 100.0 - 0.5;
                features.push(vec![cx + 0.5 * dx, cy + 0.5 * dy]);
                labels.push(c as u32);
            }
        }
        (features, labels)
    }

    #[test]
    fn separable_blobs_reach_high_validation_accuracy() {
        let (features, labels) = blobs(60, &[(0.0, 0.0), (4.0, 4.0)]);
        let data = Dataset::with_split(features, labels, 2, 21).unwrap();
        let grid = NnGrid {
            learning_rates: vec![0.01, 0.1],
            batch_sizes: vec![32],
            epochs: vec![50],
            hidden: Some(vec![16]),
        };
        let t = train_nn(&data, &grid, 5).unwrap();
        assert!(t.val_accuracy >= 0.95, "validation accuracy {}", t.val_accuracy);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let model = NnModel::init(&[3, 8, 5], 11);
        for k in 0..20 {
            let theta = vec![k as f64 * 0.3 - 2.0, (k as f64).sin(), 1.0];
            let s = model.scores(&theta);
            assert!((s.sum() - 1.0).abs() < 1e-9);
            assert!(s.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        // 3-layer toy net, dense check of every parameter. Biases are set to
        // distinct nonzero values so no pre-activation sits on the ReLU kink
        // (central differences straddle the kink and disagree with any
        // subgradient there).
        let mut model = NnModel::init(&[3, 4, 4, 3], 17);
        for (l, b) in model.biases.iter_mut().enumerate() {
            for (j, v) in b.iter_mut().enumerate() {
                *v = 0.05 * ((l * 3 + j) as f64 % 7.0 - 3.0) + 0.02;
            }
        }
        let x = DMatrix::from_column_slice(
            3,
            4,
            &[0.5, -1.0, 2.0, 1.5, 0.3, -0.7, -2.0, 0.9, 0.1, 0.4, -0.2, 1.1],
        );
        let labels = vec![0u32, 2, 1, 0];
        let (_, gw, gb) = model.loss_and_gradients(&x, &labels);
        let h = 1e-5;
        let mut max_rel = 0.0_f64;
        for l in 0..model.weights.len() {
            for idx in 0..model.weights[l].len() {
                let orig = model.weights[l][idx];
                model.weights[l][idx] = orig + h;
                let up = model.loss(&x, &labels);
                model.weights[l][idx] = orig - h;
                let dn = model.loss(&x, &labels);
                model.weights[l][idx] = orig;
                let fd = (up - dn) / (2.0 * h);
                let rel = (gw[l][idx] - fd).abs() / fd.abs().max(gw[l][idx].abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
            for idx in 0..model.biases[l].len() {
                let orig = model.biases[l][idx];
                model.biases[l][idx] = orig + h;
                let up = model.loss(&x, &labels);
                model.biases[l][idx] = orig - h;
                let dn = model.loss(&x, &labels);
                model.biases[l][idx] = orig;
                let fd = (up - dn) / (2.0 * h);
                let rel = (gb[l][idx] - fd).abs() / fd.abs().max(gb[l][idx].abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel <= 1e-4, "max relative gradient error {max_rel}");
    }

    #[test]
    fn training_loss_decreases_on_blobs() {
        let (features, labels) = blobs(40, &[(0.0, 0.0), (4.0, 4.0), (0.0, 4.0)]);
        let data = Dataset::with_split(features.clone(), labels.clone(), 3, 33).unwrap();
        let mut model = NnModel::init(&[2, 16, 3], 3);
        let x = batch_matrix(&features, &data.train_idx);
        let batch_labels: Vec<u32> = data.train_idx.iter().map(|&i| labels[i]).collect();
        let initial = model.loss(&x, &batch_labels);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut order = data.train_idx.clone();
        for _ in 0..40 {
            order.shuffle(&mut rng);
            for chunk in order.chunks(32) {
                let bx = batch_matrix(&features, chunk);
                let bl: Vec<u32> = chunk.iter().map(|&i| labels[i]).collect();
                model.sgd_step(&bx, &bl, 0.05);
            }
        }
        let final_loss = model.loss(&x, &batch_labels);
        assert!(final_loss < initial, "loss {initial} → {final_loss}");
    }

    #[test]
    fn single_class_short_circuits() {
        let features = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]];
        let data = Dataset::with_split(features, vec![0, 0, 0], 1, 2).unwrap();
        let t = train_nn(&data, &NnGrid::default(), 0).unwrap();
        assert_eq!(t.val_accuracy, 1.0);
        assert_eq!(t.predict(&[9.0, -3.0]).unwrap(), 0);
    }

    #[test]
    fn topk_one_agrees_with_full_ranking_argmax() {
        let model = NnModel::init(&[2, 6, 4], 42);
        let t = TrainedPredictor { model: PredictorModel::Network(model), val_accuracy: 0.0 };
        for k in 0..25 {
            let theta = vec![(k as f64).sin() * 2.0, (k as f64 * 0.7).cos()];
            let top1 = t.predict_topk(&theta, 1).unwrap();
            let full = t.predict_topk(&theta, 4).unwrap();
            assert_eq!(top1[0], full[0]);
            let mut sorted = full.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![0, 1, 2, 3]);
        }
    }
}
