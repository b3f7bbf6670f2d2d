//! Noisy pairwise comparison oracles.
//!
//! An oracle answers the question "does the item exceed boundary `s_i`?"
//! with a possibly wrong boolean. Searches work only with empirical
//! probabilities obtained by repeating the question, so every oracle gets
//! [`ComparisonOracle::estimate_probability`] for free.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::comparator::TrainedComparator;
use crate::domain::{AnchorPool, EmpiricalEstimate, OrdinalScale};
use crate::error::{Error, Result};

pub trait ComparisonOracle {
    /// Length of the boundary sequence the oracle compares against.
    fn num_boundaries(&self) -> usize;

    /// One noisy comparison against boundary `boundary_index`; `true` means
    /// the item was judged to exceed it.
    fn compare(&mut self, boundary_index: usize) -> Result<bool>;

    /// Empirical exceedance probability from `trials` repeated comparisons.
    fn estimate_probability(
        &mut self,
        boundary_index: usize,
        trials: u32,
    ) -> Result<EmpiricalEstimate> {
        if trials == 0 {
            return Err(Error::InvalidArgument(
                "probability estimation needs at least one trial".to_string(),
            ));
        }
        let mut ones = 0;
        for _ in 0..trials {
            if self.compare(boundary_index)? {
                ones += 1;
            }
        }
        EmpiricalEstimate::from_counts(ones, trials)
    }
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::IndexOutOfRange { index, len });
    }
    Ok(())
}

/// Answers independently of any item, flipping a per-boundary biased coin.
/// Useful for stress-testing searches against exactly known noise.
#[derive(Debug, Clone)]
pub struct CoinFlipOracle {
    probabilities: Vec<f64>,
    rng: ChaCha8Rng,
}

impl CoinFlipOracle {
    pub fn new(probabilities: Vec<f64>, seed: u64) -> Result<Self> {
        if probabilities.len() < 2 {
            return Err(Error::InvalidArgument(
                "need a probability per boundary, at least two".to_string(),
            ));
        }
        for &p in &probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange {
                    value: p,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(Self {
            probabilities,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl ComparisonOracle for CoinFlipOracle {
    fn num_boundaries(&self) -> usize {
        self.probabilities.len()
    }

    fn compare(&mut self, boundary_index: usize) -> Result<bool> {
        check_index(boundary_index, self.probabilities.len())?;
        Ok(self.rng.random_bool(self.probabilities[boundary_index]))
    }
}

/// Knows the item's true latent value and answers the exact comparison,
/// flipping the answer with a fixed probability.
#[derive(Debug, Clone)]
pub struct ThresholdFlipOracle {
    boundaries: Vec<f64>,
    value: f64,
    flip_probability: f64,
    rng: ChaCha8Rng,
}

impl ThresholdFlipOracle {
    /// `flip_probability` must stay below 0.5 so answers remain informative.
    pub fn new(scale: &OrdinalScale, value: f64, flip_probability: f64, seed: u64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "latent value must be finite, got {value}"
            )));
        }
        if !(0.0..0.5).contains(&flip_probability) {
            return Err(Error::OutOfRange {
                value: flip_probability,
                lo: 0.0,
                hi: 0.5,
            });
        }
        Ok(Self {
            boundaries: scale.boundaries().to_vec(),
            value,
            flip_probability,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl ComparisonOracle for ThresholdFlipOracle {
    fn num_boundaries(&self) -> usize {
        self.boundaries.len()
    }

    fn compare(&mut self, boundary_index: usize) -> Result<bool> {
        check_index(boundary_index, self.boundaries.len())?;
        let truth = self.value >= self.boundaries[boundary_index];
        let flip = self.flip_probability > 0.0 && self.rng.random_bool(self.flip_probability);
        Ok(truth != flip)
    }
}

/// Win probability `x / (x + s)` of strength `x` over strength `s`.
pub fn bradley_terry_prob(x: f64, s: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "strengths must be positive and finite, got x={x}"
        )));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "strengths must be positive and finite, got s={s}"
        )));
    }
    Ok(x / (x + s))
}

/// Samples comparison outcomes from the win-probability model
/// `P(x beats s_i) = x / (x + s_i)`.
#[derive(Debug, Clone)]
pub struct BradleyTerryOracle {
    probabilities: Vec<f64>,
    rng: ChaCha8Rng,
}

impl BradleyTerryOracle {
    pub fn new(scale: &OrdinalScale, value: f64, seed: u64) -> Result<Self> {
        let probabilities = scale
            .boundaries()
            .iter()
            .map(|&s| bradley_terry_prob(value, s))
            .collect::<Result<_>>()?;
        Ok(Self {
            probabilities,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl ComparisonOracle for BradleyTerryOracle {
    fn num_boundaries(&self) -> usize {
        self.probabilities.len()
    }

    fn compare(&mut self, boundary_index: usize) -> Result<bool> {
        check_index(boundary_index, self.probabilities.len())?;
        Ok(self.rng.random_bool(self.probabilities[boundary_index]))
    }
}

/// Anchor pool embeddings computed once per trained comparator, shared by
/// every per-item oracle so the embedding matrix product is not repeated.
#[derive(Debug, Clone)]
pub struct EmbeddedAnchors {
    per_boundary: std::collections::BTreeMap<usize, Vec<Vec<f64>>>,
}

impl EmbeddedAnchors {
    pub fn new(trained: &TrainedComparator, anchors: &AnchorPool) -> Result<Self> {
        let mut per_boundary = std::collections::BTreeMap::new();
        for index in anchors.boundary_indices() {
            let pool = anchors.anchors_for(index).unwrap();
            let embeddings = pool
                .iter()
                .map(|item| trained.comparator.embed_features(&item.features))
                .collect::<Result<Vec<_>>>()?;
            per_boundary.insert(index, embeddings);
        }
        Ok(Self { per_boundary })
    }

    pub fn pool(&self, boundary_index: usize) -> Result<&[Vec<f64>]> {
        self.per_boundary
            .get(&boundary_index)
            .map(Vec::as_slice)
            .ok_or_else(|| {
                Error::DataInsufficiency(format!(
                    "no anchor pool for boundary index {boundary_index}"
                ))
            })
    }
}

/// Compares an item against a random anchor drawn from the pool of the
/// queried boundary, thresholding the trained comparator's score. All
/// randomness comes from anchor selection; the model itself is
/// deterministic.
pub struct ComparatorOracle<'a> {
    trained: &'a TrainedComparator,
    anchors: &'a EmbeddedAnchors,
    num_boundaries: usize,
    item_embedding: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'a> ComparatorOracle<'a> {
    pub fn new(
        trained: &'a TrainedComparator,
        anchors: &'a EmbeddedAnchors,
        scale: &OrdinalScale,
        item_features: &[f64],
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            trained,
            anchors,
            num_boundaries: scale.len(),
            item_embedding: trained.comparator.embed_features(item_features)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl ComparisonOracle for ComparatorOracle<'_> {
    fn num_boundaries(&self) -> usize {
        self.num_boundaries
    }

    fn compare(&mut self, boundary_index: usize) -> Result<bool> {
        check_index(boundary_index, self.num_boundaries)?;
        let pool = self.anchors.pool(boundary_index)?;
        let anchor = &pool[self.rng.random_range(0..pool.len())];
        let score = self
            .trained
            .comparator
            .score_embedded(anchor, &self.item_embedding)?;
        Ok(score >= self.trained.threshold_for(boundary_index)?)
    }
}
