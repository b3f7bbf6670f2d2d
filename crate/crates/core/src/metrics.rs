//! Ordinal regression metrics: accuracy, mean absolute error, Kendall rank
//! correlation, and ROC AUC for binary scores.

use crate::error::{Error, Result};

fn check_paired(len_a: usize, len_b: usize, what: &str) -> Result<()> {
    if len_a != len_b {
        return Err(Error::ShapeMismatch(format!(
            "{what}: {len_a} predictions vs {len_b} references"
        )));
    }
    if len_a == 0 {
        return Err(Error::DataInsufficiency(format!("{what}: empty input")));
    }
    Ok(())
}

/// Fraction of exact category matches.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    check_paired(predicted.len(), truth.len(), "accuracy")?;
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Mean absolute error in category units.
pub fn mean_absolute_error(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    check_paired(predicted.len(), truth.len(), "mean absolute error")?;
    let total: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (p as f64 - t as f64).abs())
        .sum();
    Ok(total / predicted.len() as f64)
}

/// Kendall rank correlation over all item pairs. A pair tied in either
/// ranking contributes zero; the denominator is always `m(m-1)/2`.
pub fn kendall_tau(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    check_paired(predicted.len(), truth.len(), "kendall tau")?;
    let m = predicted.len();
    if m < 2 {
        return Err(Error::DataInsufficiency(
            "kendall tau needs at least two items".to_string(),
        ));
    }
    let mut concordance = 0i64;
    for i in 0..m {
        for j in i + 1..m {
            let dp = predicted[i].cmp(&predicted[j]);
            let dt = truth[i].cmp(&truth[j]);
            if dp == std::cmp::Ordering::Equal || dt == std::cmp::Ordering::Equal {
                continue;
            }
            concordance += if dp == dt { 1 } else { -1 };
        }
    }
    let pairs = (m * (m - 1) / 2) as f64;
    Ok(concordance as f64 / pairs)
}

/// Area under the ROC curve via the rank-sum statistic. Tied scores receive
/// their average rank, so groups of ties contribute half-credit.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_paired(scores.len(), labels.len(), "auc")?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(
            "auc scores must be finite".to_string(),
        ));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuc(format!(
            "need both classes, got {positives} positive and {negatives} negative"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Ascending ranks starting at 1, ties averaged within each group.
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        start = end;
    }

    let p = positives as f64;
    let n = negatives as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}
