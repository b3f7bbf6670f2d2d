//! A small trainable pairwise comparator.
//!
//! The model embeds an anchor and an item with a shared linear map, then
//! scores the pair with a bilinear head and a sigmoid. The output estimates
//! the probability that the item exceeds the anchor.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;

/// Probabilities are clipped to `[CLIP, 1 - CLIP]` inside the cross-entropy
/// loss so targets of exactly 0 or 1 cannot produce infinities.
pub const PROB_CLIP: f64 = 1e-7;

/// How the comparator is supervised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingMode {
    /// Hard 0/1 targets with cross-entropy loss; decision thresholds are
    /// tuned afterwards to maximize true-positive minus false-positive rate.
    Binary,
    /// Soft probability targets with squared-error loss; the natural
    /// decision threshold 0.5 is kept.
    Soft,
}

impl TrainingMode {
    pub fn loss(self, output: f64, target: f64) -> f64 {
        match self {
            TrainingMode::Binary => {
                let g = output.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
                -(target * g.ln() + (1.0 - target) * (1.0 - g).ln())
            }
            TrainingMode::Soft => (output - target) * (output - target),
        }
    }

    /// Derivative of the loss with respect to the pre-sigmoid activation.
    fn delta(self, output: f64, target: f64) -> f64 {
        match self {
            TrainingMode::Binary => {
                // Where the clip is active the loss is locally constant.
                if output <= PROB_CLIP || output >= 1.0 - PROB_CLIP {
                    0.0
                } else {
                    output - target
                }
            }
            TrainingMode::Soft => 2.0 * (output - target) * output * (1.0 - output),
        }
    }

    pub fn file_tag(self) -> &'static str {
        match self {
            TrainingMode::Binary => "binary",
            TrainingMode::Soft => "soft",
        }
    }

    fn from_file_tag(tag: &str) -> Result<Self> {
        match tag {
            "binary" => Ok(TrainingMode::Binary),
            "soft" => Ok(TrainingMode::Soft),
            other => Err(Error::ModelFormat(format!("unknown mode `{other}`"))),
        }
    }
}

/// One supervised comparison between an anchor near a boundary and an item.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub boundary_index: usize,
    pub anchor_features: Vec<f64>,
    pub item_features: Vec<f64>,
    pub target: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Shared linear embedding plus a bilinear scoring head.
///
/// For anchor `a` and item `x`, both in `R^d`, the embeddings are
/// `z_a = W a` and `z_x = W x` in `R^k`, and the score is
/// `sigmoid(u.z_a + v.z_x + w (z_a.z_x) + bias)` with `head = [u; v; w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseComparator {
    d: usize,
    k: usize,
    w: Vec<f64>,    // k x d, row-major
    head: Vec<f64>, // 2k + 1
    bias: f64,
}

impl PairwiseComparator {
    /// Random initialization, each tensor uniform in
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn new_random(d: usize, k: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(d, k, &mut rng)
    }

    fn init_with_rng(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "comparator dimensions must be positive, got d={d} k={k}"
            )));
        }
        let w_bound = 1.0 / (d as f64).sqrt();
        let head_bound = 1.0 / (2.0 * k as f64 + 1.0).sqrt();
        let w = (0..k * d)
            .map(|_| rng.random_range(-w_bound..=w_bound))
            .collect();
        let head = (0..2 * k + 1)
            .map(|_| rng.random_range(-head_bound..=head_bound))
            .collect();
        let bias = rng.random_range(-head_bound..=head_bound);
        Ok(Self {
            d,
            k,
            w,
            head,
            bias,
        })
    }

    pub fn from_parts(d: usize, k: usize, w: Vec<f64>, head: Vec<f64>, bias: f64) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "comparator dimensions must be positive, got d={d} k={k}"
            )));
        }
        if w.len() != k * d {
            return Err(Error::ShapeMismatch(format!(
                "embedding matrix has {} entries, expected {}",
                w.len(),
                k * d
            )));
        }
        if head.len() != 2 * k + 1 {
            return Err(Error::ShapeMismatch(format!(
                "head has {} entries, expected {}",
                head.len(),
                2 * k + 1
            )));
        }
        Ok(Self {
            d,
            k,
            w,
            head,
            bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn embed_dim(&self) -> usize {
        self.k
    }

    pub fn num_parameters(&self) -> usize {
        self.k * self.d + 2 * self.k + 2
    }

    /// All parameters flattened as `[W row-major, head, bias]`. Gradients
    /// from [`Self::loss_gradient`] use the same layout.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_parameters());
        p.extend_from_slice(&self.w);
        p.extend_from_slice(&self.head);
        p.push(self.bias);
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.num_parameters(),
                params.len()
            )));
        }
        let kd = self.k * self.d;
        self.w.copy_from_slice(&params[..kd]);
        self.head.copy_from_slice(&params[kd..kd + 2 * self.k + 1]);
        self.bias = params[kd + 2 * self.k + 1];
        Ok(())
    }

    fn embed(&self, features: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|j| {
                let row = &self.w[j * self.d..(j + 1) * self.d];
                row.iter().zip(features).map(|(w, f)| w * f).sum()
            })
            .collect()
    }

    /// The shared linear embedding of one feature vector. Precomputing
    /// embeddings lets callers score many pairs without repeating the
    /// matrix product.
    pub fn embed_features(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.d {
            return Err(Error::ShapeMismatch(format!(
                "feature vector of length {}, comparator expects {}",
                features.len(),
                self.d
            )));
        }
        Ok(self.embed(features))
    }

    /// Scores a pair from embeddings produced by [`Self::embed_features`].
    pub fn score_embedded(&self, anchor_embedding: &[f64], item_embedding: &[f64]) -> Result<f64> {
        if anchor_embedding.len() != self.k || item_embedding.len() != self.k {
            return Err(Error::ShapeMismatch(format!(
                "embeddings of length {} and {}, comparator expects {}",
                anchor_embedding.len(),
                item_embedding.len(),
                self.k
            )));
        }
        Ok(sigmoid(
            self.pre_activation(anchor_embedding, item_embedding),
        ))
    }

    fn check_features(&self, anchor: &[f64], item: &[f64]) -> Result<()> {
        if anchor.len() != self.d || item.len() != self.d {
            return Err(Error::ShapeMismatch(format!(
                "feature vectors of length {} and {}, comparator expects {}",
                anchor.len(),
                item.len(),
                self.d
            )));
        }
        Ok(())
    }

    /// Probability estimate that `item` exceeds `anchor`.
    pub fn forward(&self, anchor: &[f64], item: &[f64]) -> Result<f64> {
        self.check_features(anchor, item)?;
        let z_a = self.embed(anchor);
        let z_x = self.embed(item);
        Ok(sigmoid(self.pre_activation(&z_a, &z_x)))
    }

    fn pre_activation(&self, z_a: &[f64], z_x: &[f64]) -> f64 {
        let k = self.k;
        let u = &self.head[..k];
        let v = &self.head[k..2 * k];
        let w_prod = self.head[2 * k];
        let mut pre = self.bias;
        for j in 0..k {
            pre += u[j] * z_a[j] + v[j] * z_x[j] + w_prod * z_a[j] * z_x[j];
        }
        pre
    }

    pub fn pair_loss(&self, pair: &TrainingPair, mode: TrainingMode) -> Result<f64> {
        check_target(pair.target)?;
        let g = self.forward(&pair.anchor_features, &pair.item_features)?;
        Ok(mode.loss(g, pair.target))
    }

    /// Loss and its gradient in the [`Self::parameters`] layout for one pair.
    pub fn loss_gradient(
        &self,
        pair: &TrainingPair,
        mode: TrainingMode,
    ) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.num_parameters()];
        let loss = self.accumulate_gradient(pair, mode, &mut grad)?;
        Ok((loss, grad))
    }

    /// Mean loss and mean gradient over a batch.
    pub fn batch_loss_gradient(
        &self,
        pairs: &[TrainingPair],
        mode: TrainingMode,
    ) -> Result<(f64, Vec<f64>)> {
        if pairs.is_empty() {
            return Err(Error::DataInsufficiency("empty gradient batch".to_string()));
        }
        let mut grad = vec![0.0; self.num_parameters()];
        let mut total = 0.0;
        for pair in pairs {
            total += self.accumulate_gradient(pair, mode, &mut grad)?;
        }
        let scale = 1.0 / pairs.len() as f64;
        for g in &mut grad {
            *g *= scale;
        }
        Ok((total * scale, grad))
    }

    pub fn mean_loss(&self, pairs: &[TrainingPair], mode: TrainingMode) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::DataInsufficiency("empty evaluation set".to_string()));
        }
        let mut total = 0.0;
        for pair in pairs {
            total += self.pair_loss(pair, mode)?;
        }
        Ok(total / pairs.len() as f64)
    }

    fn accumulate_gradient(
        &self,
        pair: &TrainingPair,
        mode: TrainingMode,
        grad: &mut [f64],
    ) -> Result<f64> {
        check_target(pair.target)?;
        self.check_features(&pair.anchor_features, &pair.item_features)?;
        let a = &pair.anchor_features;
        let x = &pair.item_features;
        let z_a = self.embed(a);
        let z_x = self.embed(x);
        let g = sigmoid(self.pre_activation(&z_a, &z_x));
        let loss = mode.loss(g, pair.target);
        let delta = mode.delta(g, pair.target);

        let (d, k) = (self.d, self.k);
        let u = &self.head[..k];
        let v = &self.head[k..2 * k];
        let w_prod = self.head[2 * k];
        let kd = k * d;
        for j in 0..k {
            let coeff_a = delta * (u[j] + w_prod * z_x[j]);
            let coeff_x = delta * (v[j] + w_prod * z_a[j]);
            let row = &mut grad[j * d..(j + 1) * d];
            for i in 0..d {
                row[i] += coeff_a * a[i] + coeff_x * x[i];
            }
            grad[kd + j] += delta * z_a[j];
            grad[kd + k + j] += delta * z_x[j];
        }
        grad[kd + 2 * k] += delta * z_a.iter().zip(&z_x).map(|(p, q)| p * q).sum::<f64>();
        grad[kd + 2 * k + 1] += delta;
        Ok(loss)
    }
}

fn check_target(target: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::OutOfRange {
            value: target,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Optimizer and stopping settings for [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 256,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::InvalidArgument(
                "batch size, epochs and patience must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Losses recorded at the end of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// A trained comparator plus its per-epoch loss history.
#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub comparator: PairwiseComparator,
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Trains a fresh comparator with minibatch gradient descent plus momentum.
///
/// Training pairs are reshuffled every epoch with a seeded generator. The
/// run stops once validation loss has not improved for `patience` epochs and
/// the parameters from the best validation epoch are returned.
pub fn train(
    d: usize,
    k: usize,
    training: &[TrainingPair],
    validation: &[TrainingPair],
    mode: TrainingMode,
    config: &TrainingConfig,
) -> Result<TrainingOutcome> {
    config.validate()?;
    if training.is_empty() || validation.is_empty() {
        return Err(Error::DataInsufficiency(
            "training and validation sets must both be non-empty".to_string(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut comparator = PairwiseComparator::init_with_rng(d, k, &mut rng)?;
    let mut velocity = vec![0.0; comparator.num_parameters()];
    let mut order: Vec<usize> = (0..training.len()).collect();
    let mut batch: Vec<TrainingPair> = Vec::with_capacity(config.batch_size);

    let mut epochs = Vec::new();
    let mut best_params = comparator.parameters();
    let mut best_epoch = 0;
    let mut best_val_loss = f64::INFINITY;
    let mut stall = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| training[i].clone()));
            let (loss, grad) = comparator.batch_loss_gradient(&batch, mode)?;
            if !loss.is_finite() {
                return Err(Error::TrainingFailure {
                    epoch,
                    reason: format!("non-finite training loss {loss}"),
                });
            }
            epoch_loss += loss * chunk.len() as f64;
            let mut params = comparator.parameters();
            for ((p, vel), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *vel = config.momentum * *vel - config.learning_rate * g;
                *p += *vel;
            }
            comparator.set_parameters(&params)?;
        }
        let train_loss = epoch_loss / training.len() as f64;
        let val_loss = comparator.mean_loss(validation, mode)?;
        if !val_loss.is_finite() {
            return Err(Error::TrainingFailure {
                epoch,
                reason: format!("non-finite validation loss {val_loss}"),
            });
        }
        epochs.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });

        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_epoch = epoch;
            best_params = comparator.parameters();
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.patience {
                break;
            }
        }
    }

    comparator.set_parameters(&best_params)?;
    Ok(TrainingOutcome {
        comparator,
        epochs,
        best_epoch,
        best_val_loss,
    })
}

/// Picks the decision threshold maximizing true-positive rate minus
/// false-positive rate under the rule `score >= threshold`.
///
/// Candidates are the distinct observed scores; among ties the largest
/// threshold wins. With only one class present the threshold falls back to
/// 0.5.
pub fn youden_threshold(scores: &[f64], labels: &[bool]) -> f64 {
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return 0.5;
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut best_threshold = scores[order[0]];
    let mut best_j = f64::NEG_INFINITY;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut idx = 0;
    while idx < order.len() {
        let threshold = scores[order[idx]];
        // Consume the whole tie group so counts reflect `score >= threshold`.
        while idx < order.len() && scores[order[idx]] == threshold {
            if labels[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        let j = tp as f64 / positives as f64 - fp as f64 / negatives as f64;
        if j > best_j {
            best_j = j;
            best_threshold = threshold;
        }
    }
    best_threshold
}

/// Per-boundary quality of a trained comparator on labelled pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEvaluation {
    pub threshold: f64,
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub pairs: usize,
}

/// Scores every pair and summarizes quality per boundary.
///
/// Binary ground truth for a pair is `target >= 0.5` in both modes. The
/// threshold column is tuned per boundary in [`TrainingMode::Binary`] and
/// fixed at 0.5 in [`TrainingMode::Soft`].
pub fn evaluate_comparator(
    comparator: &PairwiseComparator,
    pairs: &[TrainingPair],
    mode: TrainingMode,
) -> Result<BTreeMap<usize, BoundaryEvaluation>> {
    if pairs.is_empty() {
        return Err(Error::DataInsufficiency("no evaluation pairs".to_string()));
    }
    let mut by_boundary: BTreeMap<usize, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for pair in pairs {
        check_target(pair.target)?;
        let score = comparator.forward(&pair.anchor_features, &pair.item_features)?;
        let entry = by_boundary.entry(pair.boundary_index).or_default();
        entry.0.push(score);
        entry.1.push(pair.target >= 0.5);
    }

    let mut report = BTreeMap::new();
    for (boundary, (scores, labels)) in by_boundary {
        let threshold = match mode {
            TrainingMode::Binary => youden_threshold(&scores, &labels),
            TrainingMode::Soft => 0.5,
        };
        let hits = scores
            .iter()
            .zip(&labels)
            .filter(|&(s, l)| (*s >= threshold) == *l)
            .count();
        let auc = match metrics::auc(&scores, &labels) {
            Ok(a) => Some(a),
            Err(Error::UndefinedAuc(_)) => None,
            Err(e) => return Err(e),
        };
        report.insert(
            boundary,
            BoundaryEvaluation {
                threshold,
                accuracy: hits as f64 / scores.len() as f64,
                auc,
                pairs: scores.len(),
            },
        );
    }
    Ok(report)
}

/// A comparator bundled with its training mode and per-boundary decision
/// thresholds, ready to answer noisy comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedComparator {
    pub comparator: PairwiseComparator,
    pub mode: TrainingMode,
    pub thresholds: BTreeMap<usize, f64>,
}

impl TrainedComparator {
    pub fn threshold_for(&self, boundary_index: usize) -> Result<f64> {
        self.thresholds
            .get(&boundary_index)
            .copied()
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no decision threshold for boundary index {boundary_index}"
                ))
            })
    }

    /// Serializes to a line-oriented text file that round-trips exactly.
    pub fn save(&self, path: &Path) -> Result<()> {
        let c = &self.comparator;
        let mut out = String::new();
        let _ = writeln!(out, "pairwise-comparator v1");
        let _ = writeln!(out, "mode {}", self.mode.file_tag());
        let _ = writeln!(out, "dims {} {}", c.d, c.k);
        for j in 0..c.k {
            let row: Vec<String> = c.w[j * c.d..(j + 1) * c.d]
                .iter()
                .map(|v| format!("{v:?}"))
                .collect();
            let _ = writeln!(out, "w {}", row.join(" "));
        }
        let head: Vec<String> = c.head.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "head {}", head.join(" "));
        let _ = writeln!(out, "bias {:?}", c.bias);
        for (index, threshold) in &self.thresholds {
            let _ = writeln!(out, "threshold {index} {threshold:?}");
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        if lines.next() != Some("pairwise-comparator v1") {
            return Err(Error::ModelFormat("missing header line".to_string()));
        }
        let mode_line = lines
            .next()
            .ok_or_else(|| Error::ModelFormat("missing mode line".to_string()))?;
        let mode = TrainingMode::from_file_tag(
            mode_line
                .strip_prefix("mode ")
                .ok_or_else(|| Error::ModelFormat("malformed mode line".to_string()))?,
        )?;
        let dims_line = lines
            .next()
            .and_then(|l| l.strip_prefix("dims "))
            .ok_or_else(|| Error::ModelFormat("malformed dims line".to_string()))?;
        let dims: Vec<usize> = dims_line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::ModelFormat(format!("bad dimension `{t}`")))
            })
            .collect::<Result<_>>()?;
        let [d, k] = dims[..] else {
            return Err(Error::ModelFormat("dims line needs two values".to_string()));
        };

        let parse_floats = |line: &str| -> Result<Vec<f64>> {
            line.split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::ModelFormat(format!("bad float `{t}`")))
                })
                .collect()
        };

        let mut w = Vec::with_capacity(k * d);
        for _ in 0..k {
            let row = lines
                .next()
                .and_then(|l| l.strip_prefix("w "))
                .ok_or_else(|| Error::ModelFormat("missing embedding row".to_string()))?;
            let row = parse_floats(row)?;
            if row.len() != d {
                return Err(Error::ModelFormat(format!(
                    "embedding row has {} entries, expected {d}",
                    row.len()
                )));
            }
            w.extend(row);
        }
        let head = parse_floats(
            lines
                .next()
                .and_then(|l| l.strip_prefix("head "))
                .ok_or_else(|| Error::ModelFormat("missing head line".to_string()))?,
        )?;
        let bias_line = lines
            .next()
            .and_then(|l| l.strip_prefix("bias "))
            .ok_or_else(|| Error::ModelFormat("missing bias line".to_string()))?;
        let bias: f64 = bias_line
            .parse()
            .map_err(|_| Error::ModelFormat(format!("bad bias `{bias_line}`")))?;

        let mut thresholds = BTreeMap::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let rest = line
                .strip_prefix("threshold ")
                .ok_or_else(|| Error::ModelFormat(format!("unexpected line `{line}`")))?;
            let mut parts = rest.split_whitespace();
            let (Some(idx), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::ModelFormat(format!("malformed threshold `{line}`")));
            };
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::ModelFormat(format!("bad threshold index `{idx}`")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| Error::ModelFormat(format!("bad threshold value `{value}`")))?;
            thresholds.insert(idx, value);
        }

        Ok(Self {
            comparator: PairwiseComparator::from_parts(d, k, w, head, bias)?,
            mode,
            thresholds,
        })
    }
}
