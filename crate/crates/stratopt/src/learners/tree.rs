//! Classification trees trained by greedy induction plus local search.
//!
//! Branch nodes hold a split `aᵀθ < b`. In parallel mode `a` has exactly one
//! nonzero entry (fixed to 1), in hyperplane mode `a` is dense and normalized
//! to unit max coefficient. Training minimizes
//!
//! ```text
//! L = misclassified/N + α · Σ_branches ‖a_t‖₁
//! ```
//!
//! by growing a CART-style tree on misclassification gain and then running
//! local-search passes: each visited node may be collapsed to a leaf, have
//! its split re-optimized against the existing child subtrees, or (for a
//! leaf) be expanded. Moves are accepted only if the loss strictly drops, so
//! the loss trace is non-increasing. Multiple seeded restarts keep the best
//! local minimum; a hyperparameter grid picks depth and bucket size by
//! validation accuracy.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError, PredictorModel, TrainedPredictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    Parallel,
    Hyperplane,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Branch { weights: Vec<(usize, f64)>, threshold: f64, left: usize, right: usize },
    Leaf { label: u32, class_counts: Vec<(u32, u64)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    /// Flattened nodes, root at index 0.
    pub nodes: Vec<TreeNode>,
    pub mode: SplitMode,
    pub depth: usize,
    pub min_bucket: usize,
    pub alpha: f64,
    pub input_dim: usize,
    pub n_classes: u32,
    /// All labels ranked by training frequency (desc, ties by label asc);
    /// pads leaf rankings so `predict_topk` can always return `k` labels.
    pub global_order: Vec<u32>,
}

/// Grid of (depth, min_bucket) pairs searched during training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OctGrid {
    pub depths: Vec<usize>,
    pub min_buckets: Vec<usize>,
}

impl Default for OctGrid {
    fn default() -> Self {
        OctGrid { depths: vec![5, 10, 15], min_buckets: vec![1, 5, 10] }
    }
}

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_RESTARTS: usize = 10;

impl TreeModel {
    fn leaf_at(&self, theta: &[f64]) -> &TreeNode {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { .. } => return &self.nodes[idx],
                TreeNode::Branch { weights, threshold, left, right } => {
                    let v: f64 = weights.iter().map(|&(j, w)| w * theta[j]).sum();
                    idx = if v < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, theta: &[f64]) -> u32 {
        match self.leaf_at(theta) {
            TreeNode::Leaf { label, .. } => *label,
            TreeNode::Branch { .. } => unreachable!(),
        }
    }

    /// Full label ranking at `theta`: leaf class frequencies first, then the
    /// remaining labels in global-frequency order.
    pub fn ranked_labels(&self, theta: &[f64]) -> Vec<u32> {
        let counts = match self.leaf_at(theta) {
            TreeNode::Leaf { class_counts, .. } => class_counts,
            TreeNode::Branch { .. } => unreachable!(),
        };
        let mut seen = vec![false; self.n_classes as usize];
        let mut out = Vec::with_capacity(self.n_classes as usize);
        for &(label, _) in counts {
            if !seen[label as usize] {
                seen[label as usize] = true;
                out.push(label);
            }
        }
        for &label in &self.global_order {
            if !seen[label as usize] {
                seen[label as usize] = true;
                out.push(label);
            }
        }
        out
    }

    pub fn num_branches(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Branch { .. })).count()
    }

    /// Σ ‖a_t‖₁ over branch nodes.
    pub fn complexity(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| match n {
                TreeNode::Branch { weights, .. } => {
                    weights.iter().map(|(_, w)| w.abs()).sum::<f64>()
                }
                TreeNode::Leaf { .. } => 0.0,
            })
            .sum()
    }

    /// Longest root-to-leaf path (edges).
    pub fn max_path_len(&self) -> usize {
        fn depth_of(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Branch { left, right, .. } => {
                    1 + depth_of(nodes, *left).max(depth_of(nodes, *right))
                }
            }
        }
        depth_of(&self.nodes, 0)
    }

    /// Smallest training-point count over the leaves.
    pub fn min_leaf_count(&self) -> u64 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { class_counts, .. } => {
                    Some(class_counts.iter().map(|&(_, c)| c).sum::<u64>())
                }
                TreeNode::Branch { .. } => None,
            })
            .min()
            .unwrap_or(0)
    }
}

/// Tree cost on a dataset: misclassification rate plus α-weighted split
/// complexity.
pub fn oct_loss(model: &TreeModel, data: &Dataset, alpha: f64) -> f64 {
    let errors = data
        .features
        .iter()
        .zip(&data.labels)
        .filter(|(f, &y)| model.predict(f) != y)
        .count();
    errors as f64 / data.n() as f64 + alpha * model.complexity()
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum Work {
    Leaf { label: u32 },
    Branch { weights: Vec<(usize, f64)>, threshold: f64, left: Box<Work>, right: Box<Work> },
}

struct Trainer<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [u32],
    train: &'a [usize],
    p: usize,
    n_classes: usize,
    mode: SplitMode,
    max_depth: usize,
    min_bucket: usize,
    alpha: f64,
}

fn split_goes_left(weights: &[(usize, f64)], threshold: f64, x: &[f64]) -> bool {
    let v: f64 = weights.iter().map(|&(j, w)| w * x[j]).sum();
    v < threshold
}

impl<'a> Trainer<'a> {
    fn majority(&self, points: &[usize]) -> (u32, usize) {
        let mut counts = vec![0usize; self.n_classes];
        for &i in points {
            counts[self.ys[i] as usize] += 1;
        }
        let mut best = 0usize;
        for c in 1..self.n_classes {
            if counts[c] > counts[best] {
                best = c;
            }
        }
        (best as u32, points.len() - counts[best])
    }

    fn route_label(&self, node: &Work, i: usize) -> u32 {
        match node {
            Work::Leaf { label } => *label,
            Work::Branch { weights, threshold, left, right } => {
                if split_goes_left(weights, *threshold, &self.xs[i]) {
                    self.route_label(left, i)
                } else {
                    self.route_label(right, i)
                }
            }
        }
    }

    fn misclass(&self, node: &Work, points: &[usize]) -> usize {
        points.iter().filter(|&&i| self.route_label(node, i) != self.ys[i]).count()
    }

    fn complexity(node: &Work) -> f64 {
        match node {
            Work::Leaf { .. } => 0.0,
            Work::Branch { weights, left, right, .. } => {
                weights.iter().map(|(_, w)| w.abs()).sum::<f64>()
                    + Self::complexity(left)
                    + Self::complexity(right)
            }
        }
    }

    fn loss(&self, root: &Work) -> f64 {
        self.misclass(root, self.train) as f64 / self.train.len() as f64
            + self.alpha * Self::complexity(root)
    }

    /// Best single-feature split by class-count sweep. Children are scored by
    /// their own majorities. Ties break on lower feature then lower cut.
    fn best_parallel_split(&self, points: &[usize]) -> Option<(usize, f64, usize)> {
        if points.len() < 2 * self.min_bucket {
            return None;
        }
        let mut best: Option<(usize, f64, usize)> = None;
        let mut order: Vec<usize> = points.to_vec();
        for feat in 0..self.p {
            order.sort_by(|&a, &b| self.xs[a][feat].total_cmp(&self.xs[b][feat]));
            if let Some((thr, err)) = self.sweep_class_counts(&order, feat) {
                let better = match &best {
                    None => true,
                    Some((_, _, be)) => err < *be,
                };
                if better {
                    best = Some((feat, thr, err));
                }
            }
        }
        best
    }

    /// Class-count threshold sweep along one feature for pre-sorted points.
    fn sweep_class_counts(&self, order: &[usize], feat: usize) -> Option<(f64, usize)> {
        let n = order.len();
        let mut left = vec![0usize; self.n_classes];
        let mut right = vec![0usize; self.n_classes];
        for &i in order {
            right[self.ys[i] as usize] += 1;
        }
        let mut max_left = 0usize;
        let mut max_right = *right.iter().max().unwrap();
        let mut best: Option<(f64, usize)> = None;
        for cut in 1..n {
            let moved = order[cut - 1];
            let c = self.ys[moved] as usize;
            left[c] += 1;
            max_left = max_left.max(left[c]);
            right[c] -= 1;
            if right[c] + 1 == max_right {
                max_right = *right.iter().max().unwrap();
            }
            if cut < self.min_bucket || n - cut < self.min_bucket {
                continue;
            }
            let v0 = self.xs[order[cut - 1]][feat];
            let v1 = self.xs[order[cut]][feat];
            if v1 <= v0 {
                continue;
            }
            let err = (cut - max_left) + (n - cut - max_right);
            let better = match &best {
                None => true,
                Some((_, be)) => err < *be,
            };
            if better {
                best = Some((0.5 * (v0 + v1), err));
            }
        }
        best
    }

    /// Threshold sweep with fixed per-point routing errors (used when a new
    /// split routes points through existing child subtrees). `proj` holds the
    /// split projection of each point in `points` order.
    fn sweep_fixed_errs(
        &self,
        points: &[usize],
        proj: &[f64],
        err_left: &[u8],
        err_right: &[u8],
    ) -> Option<(f64, usize)> {
        let n = points.len();
        if n < 2 * self.min_bucket {
            return None;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]));
        let total_right: usize = (0..n).map(|k| err_right[k] as usize).sum();
        let mut left_sum = 0usize;
        let mut right_sum = total_right;
        let mut best: Option<(f64, usize)> = None;
        for cut in 1..n {
            let k = order[cut - 1];
            left_sum += err_left[k] as usize;
            right_sum -= err_right[k] as usize;
            if cut < self.min_bucket || n - cut < self.min_bucket {
                continue;
            }
            let v0 = proj[order[cut - 1]];
            let v1 = proj[order[cut]];
            if v1 <= v0 {
                continue;
            }
            let err = left_sum + right_sum;
            let better = match &best {
                None => true,
                Some((_, be)) => err < *be,
            };
            if better {
                best = Some((0.5 * (v0 + v1), err));
            }
        }
        best
    }

    /// Coordinate descent over hyperplane coefficients with threshold rescans.
    fn refine_hyperplane(
        &self,
        points: &[usize],
        start_w: &[(usize, f64)],
        start_thr: f64,
        err_left: &[u8],
        err_right: &[u8],
        rng: &mut ChaCha8Rng,
    ) -> Option<(Vec<f64>, f64, usize)> {
        let n = points.len();
        let mut a = vec![0.0; self.p];
        for &(j, w) in start_w {
            a[j] = w;
        }
        let mut thr = start_thr;
        let mut proj: Vec<f64> = points
            .iter()
            .map(|&i| (0..self.p).map(|j| a[j] * self.xs[i][j]).sum())
            .collect();
        let eval = |proj: &[f64], thr: f64| -> usize {
            (0..n)
                .map(|k| if proj[k] < thr { err_left[k] as usize } else { err_right[k] as usize })
                .sum()
        };
        let mut cur_err = eval(&proj, thr);

        // Per-feature scales so candidate coefficients are unit-free.
        let scales: Vec<f64> = (0..self.p)
            .map(|j| {
                let mean: f64 = points.iter().map(|&i| self.xs[i][j]).sum::<f64>() / n as f64;
                let var: f64 =
                    points.iter().map(|&i| (self.xs[i][j] - mean).powi(2)).sum::<f64>() / n as f64;
                var.sqrt()
            })
            .collect();
        let base: f64 = (0..self.p)
            .map(|j| (a[j] * scales[j]).abs())
            .fold(0.0, f64::max)
            .max(1e-9);

        let mut coords: Vec<usize> = (0..self.p).collect();
        for _pass in 0..2 {
            let mut improved = false;
            coords.shuffle(rng);
            for &j in &coords {
                if scales[j] <= 1e-12 {
                    continue;
                }
                let unit = base / scales[j];
                let mut cand_proj = vec![0.0; n];
                for mult in [-2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0] {
                    let cand = mult * unit;
                    if (cand - a[j]).abs() <= 1e-15 {
                        continue;
                    }
                    let delta = cand - a[j];
                    for (k, &i) in points.iter().enumerate() {
                        cand_proj[k] = proj[k] + delta * self.xs[i][j];
                    }
                    if let Some((b, err)) = self.sweep_fixed_errs(points, &cand_proj, err_left, err_right) {
                        if err < cur_err {
                            a[j] = cand;
                            thr = b;
                            proj.copy_from_slice(&cand_proj);
                            cur_err = err;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }

        let max_abs = a.iter().cloned().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_abs <= 0.0 {
            return None;
        }
        let inv = 1.0 / max_abs;
        let a_norm: Vec<f64> = a.iter().map(|v| v * inv).collect();
        Some((a_norm, thr * inv, cur_err))
    }

    /// Candidate hyperplane expansions of a leaf: fix child labels to the two
    /// most frequent classes (both orders), pick the best split under those
    /// labels, refine by coordinate descent, and score with majority
    /// relabeling.
    fn expand_hyperplane(
        &self,
        points: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Vec<(Vec<(usize, f64)>, f64, usize)> {
        let mut out = Vec::new();
        if points.len() < 2 * self.min_bucket {
            return out;
        }
        let mut counts = vec![0usize; self.n_classes];
        for &i in points {
            counts[self.ys[i] as usize] += 1;
        }
        let mut by_count: Vec<usize> = (0..self.n_classes).filter(|&c| counts[c] > 0).collect();
        by_count.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        if by_count.len() < 2 {
            return out;
        }
        let (c1, c2) = (by_count[0] as u32, by_count[1] as u32);
        for (la, lb) in [(c1, c2), (c2, c1)] {
            let err_left: Vec<u8> = points.iter().map(|&i| u8::from(self.ys[i] != la)).collect();
            let err_right: Vec<u8> = points.iter().map(|&i| u8::from(self.ys[i] != lb)).collect();
            // Best parallel start under the fixed labels.
            let mut start: Option<(usize, f64, usize)> = None;
            let mut proj = vec![0.0; points.len()];
            for feat in 0..self.p {
                for (k, &i) in points.iter().enumerate() {
                    proj[k] = self.xs[i][feat];
                }
                if let Some((thr, err)) =
                    self.sweep_fixed_errs(points, &proj, &err_left, &err_right)
                {
                    let better = match &start {
                        None => true,
                        Some((_, _, be)) => err < *be,
                    };
                    if better {
                        start = Some((feat, thr, err));
                    }
                }
            }
            let Some((feat, thr0, _)) = start else { continue };
            let Some((a, thr, _)) = self.refine_hyperplane(
                points,
                &[(feat, 1.0)],
                thr0,
                &err_left,
                &err_right,
                rng,
            ) else {
                continue;
            };
            let weights: Vec<(usize, f64)> = a
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect();
            // Exact error with per-side majorities.
            let (lp, rp): (Vec<usize>, Vec<usize>) =
                points.iter().partition(|&&i| split_goes_left(&weights, thr, &self.xs[i]));
            if lp.len() < self.min_bucket || rp.len() < self.min_bucket {
                continue;
            }
            let err = self.majority(&lp).1 + self.majority(&rp).1;
            out.push((weights, thr, err));
        }
        out
    }

    /// CART-style greedy growth on misclassification gain.
    fn grow(&self, points: &[usize], depth_left: usize) -> Work {
        let (label, err0) = self.majority(points);
        if err0 == 0 || depth_left == 0 || points.len() < 2 * self.min_bucket {
            return Work::Leaf { label };
        }
        match self.best_parallel_split(points) {
            Some((feat, thr, err)) if err < err0 => {
                let weights = vec![(feat, 1.0)];
                let (lp, rp): (Vec<usize>, Vec<usize>) =
                    points.iter().partition(|&&i| self.xs[i][feat] < thr);
                Work::Branch {
                    weights,
                    threshold: thr,
                    left: Box::new(self.grow(&lp, depth_left - 1)),
                    right: Box::new(self.grow(&rp, depth_left - 1)),
                }
            }
            _ => Work::Leaf { label },
        }
    }

    /// Random initial tree used by restarts.
    fn grow_random(&self, points: &[usize], depth_left: usize, rng: &mut ChaCha8Rng) -> Work {
        let (label, err0) = self.majority(points);
        if err0 == 0
            || depth_left == 0
            || points.len() < 2 * self.min_bucket
            || rng.random::<f64>() > 0.7
        {
            return Work::Leaf { label };
        }
        let feat = rng.random_range(0..self.p);
        let mut vals: Vec<f64> = points.iter().map(|&i| self.xs[i][feat]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        if vals.len() < 2 {
            return Work::Leaf { label };
        }
        let cut = rng.random_range(0..vals.len() - 1);
        let thr = 0.5 * (vals[cut] + vals[cut + 1]);
        let (lp, rp): (Vec<usize>, Vec<usize>) =
            points.iter().partition(|&&i| self.xs[i][feat] < thr);
        if lp.len() < self.min_bucket || rp.len() < self.min_bucket {
            return Work::Leaf { label };
        }
        Work::Branch {
            weights: vec![(feat, 1.0)],
            threshold: thr,
            left: Box::new(self.grow_random(&lp, depth_left - 1, rng)),
            right: Box::new(self.grow_random(&rp, depth_left - 1, rng)),
        }
    }

    /// Rebuild a subtree on its point set: refresh leaf majorities and
    /// collapse any branch that leaves a side under the bucket minimum.
    fn repair(&self, node: &Work, points: &[usize]) -> Work {
        match node {
            Work::Leaf { label } => {
                if points.is_empty() {
                    Work::Leaf { label: *label }
                } else {
                    Work::Leaf { label: self.majority(points).0 }
                }
            }
            Work::Branch { weights, threshold, left, right } => {
                let (lp, rp): (Vec<usize>, Vec<usize>) = points
                    .iter()
                    .partition(|&&i| split_goes_left(weights, *threshold, &self.xs[i]));
                if lp.len() < self.min_bucket || rp.len() < self.min_bucket {
                    let label =
                        if points.is_empty() { 0 } else { self.majority(points).0 };
                    return Work::Leaf { label };
                }
                Work::Branch {
                    weights: weights.clone(),
                    threshold: *threshold,
                    left: Box::new(self.repair(left, &lp)),
                    right: Box::new(self.repair(right, &rp)),
                }
            }
        }
    }

    /// Collect (path, point-set) pairs for every node, root first.
    fn partition_nodes(&self, root: &Work) -> Vec<(Vec<bool>, Vec<usize>)> {
        let mut out = Vec::new();
        fn rec(
            t: &Trainer,
            node: &Work,
            points: Vec<usize>,
            path: Vec<bool>,
            out: &mut Vec<(Vec<bool>, Vec<usize>)>,
        ) {
            match node {
                Work::Leaf { .. } => out.push((path, points)),
                Work::Branch { weights, threshold, left, right } => {
                    let (lp, rp): (Vec<usize>, Vec<usize>) = points
                        .iter()
                        .partition(|&&i| split_goes_left(weights, *threshold, &t.xs[i]));
                    let mut lpath = path.clone();
                    lpath.push(true);
                    let mut rpath = path.clone();
                    rpath.push(false);
                    out.push((path, points));
                    rec(t, left, lp, lpath, out);
                    rec(t, right, rp, rpath, out);
                }
            }
        }
        rec(self, root, self.train.to_vec(), Vec::new(), &mut out);
        out
    }

    fn node_at<'t>(root: &'t Work, path: &[bool]) -> &'t Work {
        let mut cur = root;
        for &go_left in path {
            match cur {
                Work::Branch { left, right, .. } => {
                    cur = if go_left { left } else { right };
                }
                Work::Leaf { .. } => unreachable!("path descends through a leaf"),
            }
        }
        cur
    }

    fn node_at_mut<'t>(root: &'t mut Work, path: &[bool]) -> &'t mut Work {
        let mut cur = root;
        for &go_left in path {
            match cur {
                Work::Branch { left, right, .. } => {
                    cur = if go_left { left } else { right };
                }
                Work::Leaf { .. } => unreachable!("path descends through a leaf"),
            }
        }
        cur
    }

    /// Try to improve the node at `path`; returns true when a move was
    /// accepted (the caller rescans the tree).
    fn try_improve(
        &self,
        root: &mut Work,
        path: &[bool],
        points: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> bool {
        if points.is_empty() {
            return false;
        }
        let n_train = self.train.len() as f64;
        let loss_before = self.loss(root);
        let node = Self::node_at(root, path);
        let base_err = self.misclass(node, points);
        let base_cx = Self::complexity(node);

        #[derive(Clone)]
        enum Move {
            Collapse,
            Resplit { weights: Vec<(usize, f64)>, threshold: f64 },
            Expand { weights: Vec<(usize, f64)>, threshold: f64 },
        }
        let mut best: Option<(f64, Move)> = None;
        let consider = |err: usize, cx: f64, mv: Move, best: &mut Option<(f64, Move)>| {
            let delta = (err as f64 - base_err as f64) / n_train + self.alpha * (cx - base_cx);
            let better = match best {
                None => delta < -1e-12,
                Some((bd, _)) => delta < *bd - 1e-15,
            };
            if better {
                *best = Some((delta, mv));
            }
        };

        match node {
            Work::Branch { weights, threshold, left, right } => {
                // Collapse to a leaf.
                let (_, leaf_err) = self.majority(points);
                consider(leaf_err, 0.0, Move::Collapse, &mut best);

                // Re-optimize the split, routing through the existing
                // children.
                let err_left: Vec<u8> = points
                    .iter()
                    .map(|&i| u8::from(self.route_label(left, i) != self.ys[i]))
                    .collect();
                let err_right: Vec<u8> = points
                    .iter()
                    .map(|&i| u8::from(self.route_label(right, i) != self.ys[i]))
                    .collect();
                let subtree_cx = base_cx
                    - weights.iter().map(|(_, w)| w.abs()).sum::<f64>();

                let mut best_parallel: Option<(usize, f64, usize)> = None;
                let mut proj = vec![0.0; points.len()];
                for feat in 0..self.p {
                    for (k, &i) in points.iter().enumerate() {
                        proj[k] = self.xs[i][feat];
                    }
                    if let Some((thr, err)) =
                        self.sweep_fixed_errs(points, &proj, &err_left, &err_right)
                    {
                        let better = match &best_parallel {
                            None => true,
                            Some((_, _, be)) => err < *be,
                        };
                        if better {
                            best_parallel = Some((feat, thr, err));
                        }
                    }
                }
                if let Some((feat, thr, err)) = &best_parallel {
                    consider(
                        *err,
                        subtree_cx + 1.0,
                        Move::Resplit { weights: vec![(*feat, 1.0)], threshold: *thr },
                        &mut best,
                    );
                }
                if self.mode == SplitMode::Hyperplane {
                    let starts: Vec<(Vec<(usize, f64)>, f64)> = match &best_parallel {
                        Some((feat, thr, _)) => vec![
                            (weights.clone(), *threshold),
                            (vec![(*feat, 1.0)], *thr),
                        ],
                        None => vec![(weights.clone(), *threshold)],
                    };
                    for (w0, t0) in starts {
                        if let Some((a, thr, err)) =
                            self.refine_hyperplane(points, &w0, t0, &err_left, &err_right, rng)
                        {
                            let dense: Vec<(usize, f64)> = a
                                .iter()
                                .enumerate()
                                .filter(|(_, v)| **v != 0.0)
                                .map(|(j, v)| (j, *v))
                                .collect();
                            let l1: f64 = dense.iter().map(|(_, w)| w.abs()).sum();
                            consider(
                                err,
                                subtree_cx + l1,
                                Move::Resplit { weights: dense, threshold: thr },
                                &mut best,
                            );
                        }
                    }
                }
            }
            Work::Leaf { .. } => {
                if path.len() < self.max_depth {
                    if let Some((feat, thr, err)) = self.best_parallel_split(points) {
                        consider(
                            err,
                            1.0,
                            Move::Expand { weights: vec![(feat, 1.0)], threshold: thr },
                            &mut best,
                        );
                    }
                    if self.mode == SplitMode::Hyperplane {
                        for (weights, thr, err) in self.expand_hyperplane(points, rng) {
                            let l1: f64 = weights.iter().map(|(_, w)| w.abs()).sum();
                            consider(err, l1, Move::Expand { weights, threshold: thr }, &mut best);
                        }
                    }
                }
            }
        }

        let Some((_, mv)) = best else { return false };
        let original = Self::node_at(root, path).clone();
        let replacement = match mv {
            Move::Collapse => Work::Leaf { label: self.majority(points).0 },
            Move::Resplit { weights, threshold } => match &original {
                Work::Branch { left, right, .. } => Work::Branch {
                    weights,
                    threshold,
                    left: left.clone(),
                    right: right.clone(),
                },
                Work::Leaf { .. } => unreachable!(),
            },
            Move::Expand { weights, threshold } => {
                let (lp, rp): (Vec<usize>, Vec<usize>) = points
                    .iter()
                    .partition(|&&i| split_goes_left(&weights, threshold, &self.xs[i]));
                if lp.is_empty() || rp.is_empty() {
                    return false;
                }
                Work::Branch {
                    weights,
                    threshold,
                    left: Box::new(Work::Leaf { label: self.majority(&lp).0 }),
                    right: Box::new(Work::Leaf { label: self.majority(&rp).0 }),
                }
            }
        };
        // Repair refreshes leaf labels and restores the bucket minimum; keep
        // the move only if the realized loss actually drops.
        let repaired = self.repair(&replacement, points);
        *Self::node_at_mut(root, path) = repaired;
        let loss_after = self.loss(root);
        if loss_after < loss_before - 1e-12 {
            true
        } else {
            *Self::node_at_mut(root, path) = original;
            false
        }
    }

    /// One full training run: grow, then local-search until a fixed point.
    /// Returns the tree and its loss trace (one entry per accepted state).
    fn train_single(&self, restart: usize, seed: u64) -> (Work, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9e3779b9));
        let mut root = if restart == 0 {
            self.grow(self.train, self.max_depth)
        } else {
            self.grow_random(self.train, self.max_depth, &mut rng)
        };
        let mut trace = vec![self.loss(&root)];
        let move_cap = 200;
        let mut moves = 0;
        loop {
            let nodes = self.partition_nodes(&root);
            let mut order: Vec<usize> = (0..nodes.len()).collect();
            order.shuffle(&mut rng);
            let mut accepted = false;
            for &ni in &order {
                let (path, points) = &nodes[ni];
                if self.try_improve(&mut root, path, points, &mut rng) {
                    trace.push(self.loss(&root));
                    accepted = true;
                    moves += 1;
                    break;
                }
            }
            if !accepted || moves >= move_cap {
                break;
            }
        }
        (root, trace)
    }
}

fn finalize(work: &Work, data: &Dataset, trainer: &Trainer, meta: (SplitMode, usize, usize, f64)) -> TreeModel {
    let (mode, depth, min_bucket, alpha) = meta;
    let mut nodes = Vec::new();
    fn flatten(trainer: &Trainer, node: &Work, points: &[usize], nodes: &mut Vec<TreeNode>) -> usize {
        match node {
            Work::Leaf { label } => {
                let mut counts = vec![0u64; trainer.n_classes];
                for &i in points {
                    counts[trainer.ys[i] as usize] += 1;
                }
                let mut class_counts: Vec<(u32, u64)> = counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(l, &c)| (l as u32, c))
                    .collect();
                class_counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                let idx = nodes.len();
                nodes.push(TreeNode::Leaf { label: *label, class_counts });
                idx
            }
            Work::Branch { weights, threshold, left, right } => {
                let (lp, rp): (Vec<usize>, Vec<usize>) = points
                    .iter()
                    .partition(|&&i| split_goes_left(weights, *threshold, &trainer.xs[i]));
                let idx = nodes.len();
                nodes.push(TreeNode::Branch {
                    weights: weights.clone(),
                    threshold: *threshold,
                    left: 0,
                    right: 0,
                });
                let l = flatten(trainer, left, &lp, nodes);
                let r = flatten(trainer, right, &rp, nodes);
                if let TreeNode::Branch { left, right, .. } = &mut nodes[idx] {
                    *left = l;
                    *right = r;
                }
                idx
            }
        }
    }
    flatten(trainer, work, trainer.train, &mut nodes);

    let mut global = vec![0u64; data.n_classes as usize];
    for &i in trainer.train {
        global[trainer.ys[i] as usize] += 1;
    }
    let mut global_order: Vec<u32> = (0..data.n_classes).collect();
    global_order.sort_by(|&a, &b| {
        global[b as usize].cmp(&global[a as usize]).then(a.cmp(&b))
    });

    TreeModel {
        nodes,
        mode,
        depth,
        min_bucket,
        alpha,
        input_dim: data.dim(),
        n_classes: data.n_classes,
        global_order,
    }
}

/// Loss trace of a single greedy-init training run (one entry per accepted
/// local-search state). Exposes the non-increasing property for
/// verification.
pub fn training_trace(
    data: &Dataset,
    mode: SplitMode,
    depth: usize,
    min_bucket: usize,
    alpha: f64,
    seed: u64,
) -> Vec<f64> {
    let trainer = Trainer {
        xs: &data.features,
        ys: &data.labels,
        train: &data.train_idx,
        p: data.dim(),
        n_classes: data.n_classes as usize,
        mode,
        max_depth: depth,
        min_bucket,
        alpha,
    };
    trainer.train_single(0, seed).1
}

/// Train a tree over the hyperparameter grid. Grid points train their
/// restarts independently (in parallel); the winner has the highest
/// validation accuracy with ties to smaller depth, then smaller bucket.
pub fn train_oct(
    data: &Dataset,
    grid: &OctGrid,
    mode: SplitMode,
    restarts: usize,
    alpha: f64,
    seed: u64,
) -> Result<TrainedPredictor, LearnError> {
    if data.n() < 2 {
        return Err(LearnError::TooFewSamples { needed: 2, got: data.n() });
    }
    let val_features: Vec<Vec<f64>> =
        data.val_idx.iter().map(|&i| data.features[i].clone()).collect();
    let val_labels: Vec<u32> = data.val_idx.iter().map(|&i| data.labels[i]).collect();
    let train_features: Vec<Vec<f64>> =
        data.train_idx.iter().map(|&i| data.features[i].clone()).collect();
    let train_labels: Vec<u32> = data.train_idx.iter().map(|&i| data.labels[i]).collect();

    let mut grid_points = Vec::new();
    for &depth in &grid.depths {
        for &min_bucket in &grid.min_buckets {
            grid_points.push((depth, min_bucket));
        }
    }

    let jobs: Vec<(usize, usize)> = (0..grid_points.len())
        .flat_map(|g| (0..restarts.max(1)).map(move |r| (g, r)))
        .collect();
    let trained: Vec<((usize, usize), (Work, Vec<f64>))> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let (depth, min_bucket) = grid_points[g];
            let trainer = Trainer {
                xs: &data.features,
                ys: &data.labels,
                train: &data.train_idx,
                p: data.dim(),
                n_classes: data.n_classes as usize,
                mode,
                max_depth: depth,
                min_bucket,
                alpha,
            };
            ((g, r), trainer.train_single(r, seed.wrapping_add(g as u64 * 1000)))
        })
        .collect();

    // Best restart per grid point by training loss (ties: lowest restart).
    let mut best_per_grid: Vec<Option<(f64, Work)>> = vec![None; grid_points.len()];
    for ((g, _r), (work, trace)) in trained {
        let loss = *trace.last().unwrap();
        debug_assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let better = match &best_per_grid[g] {
            None => true,
            Some((bl, _)) => loss < *bl - 1e-15,
        };
        if better {
            best_per_grid[g] = Some((loss, work));
        }
    }

    let mut winner: Option<(f64, usize, TreeModel)> = None;
    for (g, entry) in best_per_grid.into_iter().enumerate() {
        let (depth, min_bucket) = grid_points[g];
        let (_, work) = entry.expect("every grid point trains");
        let trainer = Trainer {
            xs: &data.features,
            ys: &data.labels,
            train: &data.train_idx,
            p: data.dim(),
            n_classes: data.n_classes as usize,
            mode,
            max_depth: depth,
            min_bucket,
            alpha,
        };
        let model = finalize(&work, data, &trainer, (mode, depth, min_bucket, alpha));
        let predictor =
            TrainedPredictor { model: PredictorModel::Tree(model.clone()), val_accuracy: 0.0 };
        let val_acc = if val_features.is_empty() {
            predictor.accuracy(&train_features, &train_labels)
        } else {
            predictor.accuracy(&val_features, &val_labels)
        };
        let better = match &winner {
            None => true,
            Some((best_acc, best_g, _)) => {
                let (bd, bb) = grid_points[*best_g];
                val_acc > *best_acc + 1e-12
                    || ((val_acc - *best_acc).abs() <= 1e-12
                        && (depth < bd || (depth == bd && min_bucket < bb)))
            }
        };
        if better {
            winner = Some((val_acc, g, model));
        }
    }
    let (val_accuracy, _, model) = winner.expect("grid is nonempty");
    Ok(TrainedPredictor { model: PredictorModel::Tree(model), val_accuracy })
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn split_text(weights: &[(usize, f64)], threshold: f64, names: &[String]) -> String {
    if weights.len() == 1 && weights[0].1 == 1.0 {
        return format!("{} < {}", names[weights[0].0], threshold);
    }
    let mut lhs = String::new();
    for (k, (j, w)) in weights.iter().enumerate() {
        if k == 0 {
            if *w < 0.0 {
                lhs.push_str("-");
            }
        } else if *w < 0.0 {
            lhs.push_str(" - ");
        } else {
            lhs.push_str(" + ");
        }
        lhs.push_str(&format!("{} {}", w.abs(), names[*j]));
    }
    format!("{lhs} < {threshold}")
}

/// Deterministic indented rendering. Parallel splits print as
/// `name < threshold`, hyperplane splits as signed weighted sums.
pub fn render_tree(model: &TreeModel, names: &[String]) -> Result<String, LearnError> {
    if names.len() != model.input_dim {
        return Err(LearnError::DimMismatch { expected: model.input_dim, got: names.len() });
    }
    let mut out = String::new();
    fn rec(model: &TreeModel, idx: usize, names: &[String], indent: usize, prefix: &str, out: &mut String) {
        let pad = "  ".repeat(indent);
        match &model.nodes[idx] {
            TreeNode::Leaf { label, class_counts } => {
                let n: u64 = class_counts.iter().map(|&(_, c)| c).sum();
                out.push_str(&format!("{pad}{prefix}strategy {label} (n={n})\n"));
            }
            TreeNode::Branch { weights, threshold, left, right } => {
                out.push_str(&format!(
                    "{pad}{prefix}{}\n",
                    split_text(weights, *threshold, names)
                ));
                rec(model, *left, names, indent + 1, "yes: ", out);
                rec(model, *right, names, indent + 1, "no:  ", out);
            }
        }
    }
    rec(model, 0, names, 0, "", &mut out);
    Ok(out)
}

/// GraphViz DOT rendering of the same tree.
pub fn render_tree_dot(model: &TreeModel, names: &[String]) -> Result<String, LearnError> {
    if names.len() != model.input_dim {
        return Err(LearnError::DimMismatch { expected: model.input_dim, got: names.len() });
    }
    let mut out = String::from("digraph tree {\n  node [shape=box];\n");
    for (idx, node) in model.nodes.iter().enumerate() {
        match node {
            TreeNode::Leaf { label, class_counts } => {
                let n: u64 = class_counts.iter().map(|&(_, c)| c).sum();
                out.push_str(&format!(
                    "  n{idx} [label=\"strategy {label}\\nn={n}\", style=rounded];\n"
                ));
            }
            TreeNode::Branch { weights, threshold, left, right } => {
                out.push_str(&format!(
                    "  n{idx} [label=\"{}\"];\n",
                    split_text(weights, *threshold, names)
                ));
                out.push_str(&format!("  n{idx} -> n{left} [label=\"yes\"];\n"));
                out.push_str(&format!("  n{idx} -> n{right} [label=\"no\"];\n"));
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(features: Vec<Vec<f64>>, labels: Vec<u32>, m: u32) -> Dataset {
        Dataset::with_split(features, labels, m, 3).unwrap()
    }

    fn single_leaf_model(label: u32, counts: Vec<(u32, u64)>, m: u32, p: usize) -> TreeModel {
        TreeModel {
            nodes: vec![TreeNode::Leaf { label, class_counts: counts }],
            mode: SplitMode::Parallel,
            depth: 0,
            min_bucket: 1,
            alpha: 0.0,
            input_dim: p,
            n_classes: m,
            global_order: (0..m).collect(),
        }
    }

    #[test]
    fn oct_loss_single_leaf_cases() {
        // One-class data: loss 0.
        let data = dataset(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0; 4], 1);
        let model = single_leaf_model(0, vec![(0, 4)], 1, 1);
        assert_eq!(oct_loss(&model, &data, 0.1), 0.0);

        // Balanced two-class data under one leaf: misclassification 1/2.
        let data = dataset(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 0, 1, 1],
            2,
        );
        let model = single_leaf_model(0, vec![(0, 2), (1, 2)], 2, 1);
        assert_eq!(oct_loss(&model, &data, 0.5), 0.5);
    }

    #[test]
    fn oct_loss_counts_split_complexity() {
        // Perfect depth-1 parallel tree on separable data: loss = α·1.
        let data = dataset(
            vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            vec![0, 0, 1, 1],
            2,
        );
        let model = TreeModel {
            nodes: vec![
                TreeNode::Branch { weights: vec![(0, 1.0)], threshold: 0.0, left: 1, right: 2 },
                TreeNode::Leaf { label: 0, class_counts: vec![(0, 2)] },
                TreeNode::Leaf { label: 1, class_counts: vec![(1, 2)] },
            ],
            mode: SplitMode::Parallel,
            depth: 1,
            min_bucket: 1,
            alpha: 0.1,
            input_dim: 1,
            n_classes: 2,
            global_order: vec![0, 1],
        };
        let loss = oct_loss(&model, &data, 0.1);
        assert!((loss - 0.1).abs() < 1e-15);
    }

    #[test]
    fn one_class_dataset_trains_to_single_leaf() {
        let features: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, -(i as f64)]).collect();
        let data = dataset(features, vec![0; 40], 1);
        let t = train_oct(&data, &OctGrid::default(), SplitMode::Parallel, 2, 0.01, 1).unwrap();
        assert_eq!(t.val_accuracy, 1.0);
        if let PredictorModel::Tree(m) = &t.model {
            assert_eq!(m.nodes.len(), 1);
            assert_eq!(m.max_path_len(), 0);
        } else {
            panic!("expected tree");
        }
    }

    #[test]
    fn separable_2d_data_learns_threshold_split() {
        // Label = [θ₀ < 0]; p = 2, second feature is noise.
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let v = (i as f64) - 29.5; // symmetric around 0, never exactly 0
            features.push(vec![v, (i % 7) as f64]);
            labels.push(u32::from(v < 0.0));
        }
        let data = dataset(features.clone(), labels.clone(), 2);
        let grid = OctGrid { depths: vec![1, 5], min_buckets: vec![1] };
        let t = train_oct(&data, &grid, SplitMode::Parallel, 3, 0.01, 9).unwrap();
        let acc = t.accuracy(&features, &labels);
        assert_eq!(acc, 1.0, "training accuracy {acc}");
        if let PredictorModel::Tree(m) = &t.model {
            assert_eq!(m.max_path_len(), 1, "expected a single split");
            if let TreeNode::Branch { weights, .. } = &m.nodes[0] {
                assert_eq!(weights.len(), 1);
                assert_eq!(weights[0].0, 0, "split must use feature 0");
            }
        }
    }

    #[test]
    fn parallel_trees_have_single_nonzero_weights() {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut rng_state = 12345u64;
        for i in 0..200 {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let a = ((rng_state >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            let b = (i % 13) as f64 / 13.0;
            features.push(vec![a, b, a * b]);
            labels.push(u32::from(a + b > 0.5) + 2 * u32::from(a > 0.2));
        }
        let data = dataset(features, labels, 4);
        let grid = OctGrid { depths: vec![5], min_buckets: vec![1, 5] };
        let t = train_oct(&data, &grid, SplitMode::Parallel, 3, 0.01, 3).unwrap();
        if let PredictorModel::Tree(m) = &t.model {
            for node in &m.nodes {
                if let TreeNode::Branch { weights, .. } = node {
                    assert_eq!(weights.len(), 1);
                    assert_eq!(weights[0].1, 1.0);
                }
            }
            assert!(m.min_leaf_count() >= m.min_bucket as u64);
        }
    }

    #[test]
    fn hyperplane_mode_beats_axis_splits_on_diagonal_data() {
        // Label = [θ₀ + θ₁ < 1]: one hyperplane suffices, axis trees need
        // depth. Train both shallow and compare.
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                let a = i as f64 / 10.0;
                let b = j as f64 / 10.0;
                features.push(vec![a, b]);
                labels.push(u32::from(a + b < 0.95));
            }
        }
        let data = dataset(features.clone(), labels.clone(), 2);
        let grid = OctGrid { depths: vec![1], min_buckets: vec![1] };
        let para = train_oct(&data, &grid, SplitMode::Parallel, 2, 0.001, 4).unwrap();
        let hyper = train_oct(&data, &grid, SplitMode::Hyperplane, 2, 0.001, 4).unwrap();
        let acc_p = para.accuracy(&features, &labels);
        let acc_h = hyper.accuracy(&features, &labels);
        assert!(acc_h >= acc_p, "hyperplane {acc_h} vs parallel {acc_p}");
        assert!(acc_h >= 0.97, "hyperplane accuracy {acc_h}");
    }

    #[test]
    fn feature_scaling_preserves_training_accuracy() {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..120 {
            let a = (i as f64 * 0.7).sin();
            let b = (i as f64 * 1.3).cos();
            features.push(vec![a, b]);
            labels.push(u32::from(a < 0.2) + 2 * u32::from(b < -0.1));
        }
        let scaled: Vec<Vec<f64>> =
            features.iter().map(|f| vec![f[0] * 4.0, f[1]]).collect();
        let grid = OctGrid { depths: vec![5], min_buckets: vec![1] };
        let d1 = dataset(features.clone(), labels.clone(), 4);
        let d2 = dataset(scaled.clone(), labels.clone(), 4);
        let t1 = train_oct(&d1, &grid, SplitMode::Parallel, 3, 0.01, 10).unwrap();
        let t2 = train_oct(&d2, &grid, SplitMode::Parallel, 3, 0.01, 10).unwrap();
        assert_eq!(t1.accuracy(&features, &labels), t2.accuracy(&scaled, &labels));
    }

    #[test]
    fn topk_at_training_point_returns_its_label() {
        let features = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        let labels = vec![0, 0, 1, 1];
        let data = dataset(features.clone(), labels.clone(), 2);
        let grid = OctGrid { depths: vec![2], min_buckets: vec![1] };
        let t = train_oct(&data, &grid, SplitMode::Parallel, 1, 0.01, 0).unwrap();
        for (f, &y) in features.iter().zip(&labels) {
            assert_eq!(t.predict(f).unwrap(), y);
        }
        // k = M returns a permutation of all labels.
        let ranking = t.predict_topk(&features[0], 2).unwrap();
        let mut sorted = ranking.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1]);
    }

    #[test]
    fn render_layouts() {
        let leaf = single_leaf_model(0, vec![(0, 5)], 1, 2);
        let names = vec!["a".to_string(), "b".to_string()];
        let text = render_tree(&leaf, &names).unwrap();
        assert_eq!(text.lines().count(), 1);

        let model = TreeModel {
            nodes: vec![
                TreeNode::Branch { weights: vec![(1, 1.0)], threshold: 2.5, left: 1, right: 2 },
                TreeNode::Leaf { label: 0, class_counts: vec![(0, 3)] },
                TreeNode::Leaf { label: 1, class_counts: vec![(1, 4)] },
            ],
            mode: SplitMode::Parallel,
            depth: 1,
            min_bucket: 1,
            alpha: 0.0,
            input_dim: 2,
            n_classes: 2,
            global_order: vec![1, 0],
        };
        let text = render_tree(&model, &names).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("b < 2.5\n"));
        let dot = render_tree_dot(&model, &names).unwrap();
        assert!(dot.contains("digraph"));
        assert!(render_tree(&model, &names[..1].to_vec()).is_err());
    }

    #[test]
    fn hyperplane_render_is_a_signed_sum() {
        let model = TreeModel {
            nodes: vec![
                TreeNode::Branch {
                    weights: vec![(0, -1.0), (1, 0.75)],
                    threshold: 1.16,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { label: 0, class_counts: vec![(0, 1)] },
                TreeNode::Leaf { label: 1, class_counts: vec![(1, 1)] },
            ],
            mode: SplitMode::Hyperplane,
            depth: 1,
            min_bucket: 1,
            alpha: 0.0,
            input_dim: 2,
            n_classes: 2,
            global_order: vec![0, 1],
        };
        let names = vec!["d".to_string(), "tau3".to_string()];
        let text = render_tree(&model, &names).unwrap();
        assert!(text.starts_with("-1 d + 0.75 tau3 < 1.16\n"), "got: {text}");
    }

    #[test]
    fn rendering_distinguishes_random_trees() {
        // Injectivity over a corpus of distinct random depth-2 trees.
        let names: Vec<String> = (0..3).map(|j| format!("t{j}")).collect();
        let mut renders = Vec::new();
        for k in 0..20u32 {
            let thr = k as f64 * 0.37 + 0.1;
            let feat = (k % 3) as usize;
            let model = TreeModel {
                nodes: vec![
                    TreeNode::Branch {
                        weights: vec![(feat, 1.0)],
                        threshold: thr,
                        left: 1,
                        right: 2,
                    },
                    TreeNode::Leaf { label: k % 2, class_counts: vec![(k % 2, 1)] },
                    TreeNode::Leaf { label: 1 - k % 2, class_counts: vec![(1 - k % 2, 1)] },
                ],
                mode: SplitMode::Parallel,
                depth: 1,
                min_bucket: 1,
                alpha: 0.0,
                input_dim: 3,
                n_classes: 2,
                global_order: vec![0, 1],
            };
            renders.push(render_tree(&model, &names).unwrap());
        }
        for i in 0..renders.len() {
            for j in i + 1..renders.len() {
                assert_ne!(renders[i], renders[j], "trees {i} and {j} render identically");
            }
        }
    }
}
