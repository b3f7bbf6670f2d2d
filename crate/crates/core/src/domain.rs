//! Core domain types: the ordinal scale, items, anchor pools, and search
//! results.
//!
//! All types here are immutable after construction and safe to share across
//! threads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ascending sequence of boundary values `s_0 < s_1 < ... < s_{n-1}`
/// inducing `n-1` half-open categories `[s_i, s_{i+1})`. The top category is
/// closed at `s_{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalScale {
    boundaries: Vec<f64>,
    category_names: Option<Vec<String>>,
}

impl OrdinalScale {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a scale needs at least 2 boundaries, got {}",
                boundaries.len()
            )));
        }
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument(
                "boundaries must be finite".to_string(),
            ));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "boundaries must be strictly ascending".to_string(),
            ));
        }
        Ok(Self {
            boundaries,
            category_names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_categories() {
            return Err(Error::InvalidArgument(format!(
                "expected {} category names, got {}",
                self.num_categories(),
                names.len()
            )));
        }
        self.category_names = Some(names);
        Ok(self)
    }

    /// Number of sequence elements `n`.
    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees n >= 2
    }

    /// Number of categories `n - 1`.
    pub fn num_categories(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn boundary(&self, index: usize) -> Result<f64> {
        self.boundaries
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.boundaries.len(),
            })
    }

    /// Interior boundary indices `1..=n-2`, the ones comparisons are budgeted
    /// for. Endpoint probabilities are pinned analytically by pre-filtering.
    pub fn interior_indices(&self) -> impl Iterator<Item = usize> {
        1..self.boundaries.len() - 1
    }

    pub fn category_name(&self, index: usize) -> Option<&str> {
        self.category_names
            .as_ref()
            .and_then(|names| names.get(index))
            .map(String::as_str)
    }

    pub fn min(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn max(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    /// Maps a value to its category index `i`, with `s_i <= value < s_{i+1}`.
    /// The top boundary maps into the last category.
    pub fn category_of(&self, value: f64) -> Result<usize> {
        if !(value >= self.min() && value <= self.max()) {
            return Err(Error::OutOfRange {
                value,
                lo: self.min(),
                hi: self.max(),
            });
        }
        // partition_point returns the count of boundaries <= value, which is
        // at least 1 (s_0 <= value) and at most n.
        let upper = self.boundaries.partition_point(|b| *b <= value);
        Ok((upper - 1).min(self.num_categories() - 1))
    }
}

/// One subject of the estimation problem: a ground-truth scalar latent value
/// and the noisy feature vector models actually observe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: u64,
    pub latent_value: f64,
    pub features: Vec<f64>,
}

/// Per-boundary pools of items whose latent value lies within `gamma` of the
/// corresponding boundary. Pools exist for interior boundaries only.
#[derive(Debug, Clone)]
pub struct AnchorPool {
    pools: BTreeMap<usize, Vec<Item>>,
    gamma: f64,
}

impl AnchorPool {
    /// Builds a pool from per-boundary anchor lists, checking that every
    /// stored item satisfies `|latent - s_i| <= gamma`.
    pub fn new(
        scale: &OrdinalScale,
        pools: BTreeMap<usize, Vec<Item>>,
        gamma: f64,
    ) -> Result<Self> {
        if gamma.is_nan() || gamma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "gamma must be non-negative, got {gamma}"
            )));
        }
        for (&index, items) in &pools {
            let boundary = scale.boundary(index)?;
            if index == 0 || index == scale.len() - 1 {
                return Err(Error::InvalidArgument(format!(
                    "anchor pool at endpoint boundary index {index}"
                )));
            }
            if items.is_empty() {
                return Err(Error::DataInsufficiency(format!(
                    "empty anchor pool for boundary {boundary} (index {index})"
                )));
            }
            for item in items {
                if (item.latent_value - boundary).abs() > gamma {
                    return Err(Error::InvalidArgument(format!(
                        "item {} with latent {} is not within {gamma} of boundary {boundary}",
                        item.id, item.latent_value
                    )));
                }
            }
        }
        Ok(Self { pools, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn anchors_for(&self, boundary_index: usize) -> Option<&[Item]> {
        self.pools.get(&boundary_index).map(Vec::as_slice)
    }

    /// Boundary indices that have a pool, in ascending order.
    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.pools.keys().copied()
    }

    pub fn total_anchors(&self) -> usize {
        self.pools.values().map(Vec::len).sum()
    }
}

/// An empirical probability `p_hat` backed by `trials` comparisons, so that
/// `p_hat * trials` is the integer count of 1-outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub p_hat: f64,
    pub trials: u32,
}

impl EmpiricalEstimate {
    pub fn from_counts(ones: u32, trials: u32) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument(
                "an empirical estimate needs at least one trial".to_string(),
            ));
        }
        if ones > trials {
            return Err(Error::InvalidArgument(format!(
                "{ones} successes out of {trials} trials"
            )));
        }
        Ok(Self {
            p_hat: f64::from(ones) / f64::from(trials),
            trials,
        })
    }
}

/// Outcome of one noisy binary search run: the predicted category and the
/// per-boundary estimates in visit order. `queries_used` always equals the
/// sum of trials over the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub category_index: usize,
    pub queries_used: u64,
    pub trajectory: Vec<(usize, EmpiricalEstimate)>,
}

impl SearchResult {
    pub(crate) fn new(category_index: usize, trajectory: Vec<(usize, EmpiricalEstimate)>) -> Self {
        let queries_used = trajectory.iter().map(|(_, e)| u64::from(e.trials)).sum();
        Self {
            category_index,
            queries_used,
            trajectory,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bmi_scale() -> OrdinalScale {
        OrdinalScale::new(vec![16.0, 18.5, 25.0, 30.0, 35.0, 40.0]).unwrap()
    }

    #[test]
    fn scale_rejects_bad_boundaries() {
        assert!(OrdinalScale::new(vec![16.0]).is_err());
        assert!(OrdinalScale::new(vec![16.0, 16.0]).is_err());
        assert!(OrdinalScale::new(vec![18.5, 16.0]).is_err());
        assert!(OrdinalScale::new(vec![16.0, f64::NAN]).is_err());
    }

    #[test]
    fn category_of_interior_value() {
        let scale = bmi_scale();
        assert_eq!(scale.category_of(27.0).unwrap(), 2);
    }

    #[test]
    fn category_of_endpoints() {
        let scale = bmi_scale();
        assert_eq!(scale.category_of(16.0).unwrap(), 0);
        // Top endpoint folds into the last category.
        assert_eq!(scale.category_of(40.0).unwrap(), 4);
    }

    #[test]
    fn category_of_boundary_values_are_half_open() {
        let scale = bmi_scale();
        assert_eq!(scale.category_of(18.5).unwrap(), 1);
        assert_eq!(scale.category_of(25.0).unwrap(), 2);
        assert_eq!(scale.category_of(24.999).unwrap(), 1);
    }

    #[test]
    fn category_of_out_of_range() {
        let scale = bmi_scale();
        assert!(matches!(
            scale.category_of(15.9),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            scale.category_of(40.1),
            Err(Error::OutOfRange { .. })
        ));
        assert!(scale.category_of(f64::NAN).is_err());
    }

    #[test]
    fn category_of_is_monotone_and_bracketing() {
        let scale = bmi_scale();
        let mut last = 0;
        let mut v = 16.0;
        while v <= 40.0 {
            let c = scale.category_of(v).unwrap();
            assert!(c >= last, "category_of must be monotone");
            assert!(scale.boundaries()[c] <= v);
            if c < scale.num_categories() - 1 {
                assert!(v < scale.boundaries()[c + 1]);
            }
            last = c;
            v += 0.01;
        }
    }

    #[test]
    fn anchor_pool_validates_membership() {
        let scale = bmi_scale();
        let item = |id, latent: f64| Item {
            id,
            latent_value: latent,
            features: vec![0.0],
        };
        let mut pools = BTreeMap::new();
        pools.insert(1usize, vec![item(0, 18.4), item(1, 18.7)]);
        let pool = AnchorPool::new(&scale, pools.clone(), 0.3).unwrap();
        assert_eq!(pool.anchors_for(1).unwrap().len(), 2);
        assert!(pool.anchors_for(2).is_none());

        pools.get_mut(&1).unwrap().push(item(2, 19.0));
        assert!(AnchorPool::new(&scale, pools, 0.3).is_err());

        let mut endpoint = BTreeMap::new();
        endpoint.insert(0usize, vec![item(0, 16.0)]);
        assert!(AnchorPool::new(&scale, endpoint, 0.3).is_err());
    }

    #[test]
    fn empirical_estimate_counts() {
        let e = EmpiricalEstimate::from_counts(3, 10).unwrap();
        assert_eq!(e.p_hat, 0.3);
        assert_eq!(e.trials, 10);
        // p_hat * trials recovers the integer count of 1-outcomes
        assert_eq!((e.p_hat * f64::from(e.trials)).round() as u32, 3);
        assert!(EmpiricalEstimate::from_counts(1, 0).is_err());
        assert!(EmpiricalEstimate::from_counts(11, 10).is_err());
    }

    #[test]
    fn search_result_accounts_queries() {
        let result = SearchResult::new(
            2,
            vec![
                (2, EmpiricalEstimate::from_counts(9, 10).unwrap()),
                (3, EmpiricalEstimate::from_counts(1, 10).unwrap()),
            ],
        );
        assert_eq!(result.queries_used, 20);
    }
}
