//! Linear reference models that see the whole feature vector at once,
//! unlike the searches, which only ever see pairwise comparison outcomes.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::comparator::TrainingConfig;
use crate::domain::{Item, OrdinalScale};
use crate::error::{Error, Result};

/// Multinomial logistic regression over categories.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxClassifier {
    // One row of `dim + 1` weights per category; the last column is a bias.
    weights: Vec<f64>,
    classes: usize,
    dim: usize,
}

impl SoftmaxClassifier {
    fn logits(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "{} features, classifier expects {}",
                features.len(),
                self.dim
            )));
        }
        Ok((0..self.classes)
            .map(|c| {
                let row = &self.weights[c * (self.dim + 1)..(c + 1) * (self.dim + 1)];
                row[self.dim]
                    + row[..self.dim]
                        .iter()
                        .zip(features)
                        .map(|(w, f)| w * f)
                        .sum::<f64>()
            })
            .collect())
    }

    pub fn probabilities(&self, features: &[f64]) -> Result<Vec<f64>> {
        let logits = self.logits(features)?;
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / total).collect())
    }

    /// Category with the highest logit; ties go to the lower index.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        let logits = self.logits(features)?;
        let mut best = 0;
        for (c, &z) in logits.iter().enumerate() {
            if z > logits[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

fn check_items(items: &[Item], what: &str) -> Result<usize> {
    if items.is_empty() {
        return Err(Error::DataInsufficiency(format!("{what} set is empty")));
    }
    let dim = items[0].features.len();
    if dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "{what} items have no features"
        )));
    }
    for item in items {
        if item.features.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "item {} has {} features, expected {dim}",
                item.id,
                item.features.len()
            )));
        }
    }
    Ok(dim)
}

/// Cross-entropy loss and gradient for one minibatch; the gradient layout
/// matches the classifier's flattened weights.
fn softmax_batch(
    classifier: &SoftmaxClassifier,
    items: &[(usize, &Item)],
) -> Result<(f64, Vec<f64>)> {
    let dim = classifier.dim;
    let mut grad = vec![0.0; classifier.weights.len()];
    let mut loss = 0.0;
    for &(label, item) in items {
        let logits = classifier.logits(&item.features)?;
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - logits[label];
        for c in 0..classifier.classes {
            let p = (logits[c] - log_sum).exp();
            let residual = p - f64::from(u8::from(c == label));
            let row = &mut grad[c * (dim + 1)..(c + 1) * (dim + 1)];
            for (g, f) in row[..dim].iter_mut().zip(&item.features) {
                *g += residual * f;
            }
            row[dim] += residual;
        }
    }
    let scale = 1.0 / items.len() as f64;
    for g in &mut grad {
        *g *= scale;
    }
    Ok((loss * scale, grad))
}

/// Fits the classifier with the same minibatch descent, momentum, and
/// patience-based early stopping the comparator uses; the returned weights
/// are the ones with the best validation loss.
pub fn train_classifier(
    training: &[Item],
    validation: &[Item],
    scale: &OrdinalScale,
    config: &TrainingConfig,
) -> Result<SoftmaxClassifier> {
    let dim = check_items(training, "training")?;
    if check_items(validation, "validation")? != dim {
        return Err(Error::ShapeMismatch(
            "validation feature width differs from training".to_string(),
        ));
    }
    let classes = scale.num_categories();
    let label = |item: &Item| scale.category_of(item.latent_value);
    let train_labeled: Vec<(usize, &Item)> = training
        .iter()
        .map(|i| Ok((label(i)?, i)))
        .collect::<Result<_>>()?;
    let val_labeled: Vec<(usize, &Item)> = validation
        .iter()
        .map(|i| Ok((label(i)?, i)))
        .collect::<Result<_>>()?;

    let mut classifier = SoftmaxClassifier {
        weights: vec![0.0; classes * (dim + 1)],
        classes,
        dim,
    };
    let mut velocity = vec![0.0; classifier.weights.len()];
    let mut order: Vec<usize> = (0..train_labeled.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut best_weights = classifier.weights.clone();
    let mut best_val_loss = f64::INFINITY;
    let mut stall = 0;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(usize, &Item)> = chunk.iter().map(|&i| train_labeled[i]).collect();
            let (loss, grad) = softmax_batch(&classifier, &batch)?;
            if !loss.is_finite() {
                return Err(Error::TrainingFailure {
                    epoch,
                    reason: format!("non-finite classifier loss {loss}"),
                });
            }
            for ((w, vel), g) in classifier.weights.iter_mut().zip(&mut velocity).zip(&grad) {
                *vel = config.momentum * *vel - config.learning_rate * g;
                *w += *vel;
            }
        }
        let (val_loss, _) = softmax_batch(&classifier, &val_labeled)?;
        if !val_loss.is_finite() {
            return Err(Error::TrainingFailure {
                epoch,
                reason: format!("non-finite classifier validation loss {val_loss}"),
            });
        }
        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_weights.copy_from_slice(&classifier.weights);
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.patience {
                break;
            }
        }
    }
    classifier.weights = best_weights;
    Ok(classifier)
}

/// Ordinary least squares from features to the latent value, solved through
/// the singular value decomposition so rank-deficient designs get the
/// minimum-norm solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegressor {
    weights: Vec<f64>,
    intercept: f64,
}

impl LinearRegressor {
    pub fn predict_value(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} features, regressor expects {}",
                features.len(),
                self.weights.len()
            )));
        }
        Ok(self.intercept
            + self
                .weights
                .iter()
                .zip(features)
                .map(|(w, f)| w * f)
                .sum::<f64>())
    }

    /// Predicted value clamped into the scale's range, then mapped to its
    /// category.
    pub fn predict_category(&self, features: &[f64], scale: &OrdinalScale) -> Result<usize> {
        let value = self.predict_value(features)?;
        if value.is_nan() {
            return Err(Error::InvalidArgument(
                "regression produced NaN".to_string(),
            ));
        }
        scale.category_of(value.clamp(scale.min(), scale.max()))
    }
}

pub fn train_regressor(training: &[Item]) -> Result<LinearRegressor> {
    let dim = check_items(training, "training")?;
    for j in 0..dim {
        let first = training[0].features[j];
        if training.iter().all(|i| i.features[j] == first) {
            return Err(Error::SingularFit(format!(
                "feature {j} is constant across the training set"
            )));
        }
    }

    let rows = training.len();
    let design = DMatrix::from_fn(rows, dim + 1, |r, c| {
        if c == dim {
            1.0
        } else {
            training[r].features[c]
        }
    });
    let targets = DVector::from_fn(rows, |r, _| training[r].latent_value);
    let svd = design.svd(true, true);
    let max_singular = svd.singular_values.max();
    if !(max_singular > 0.0 && max_singular.is_finite()) {
        return Err(Error::SingularFit(
            "design matrix has no usable singular values".to_string(),
        ));
    }
    let solution = svd
        .solve(&targets, max_singular * 1e-12)
        .map_err(|e| Error::SingularFit(e.to_string()))?;
    Ok(LinearRegressor {
        weights: solution.as_slice()[..dim].to_vec(),
        intercept: solution[dim],
    })
}
