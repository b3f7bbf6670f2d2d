//! Synthetic population generation.
//!
//! Items carry a scalar latent value drawn from a truncated normal and a
//! feature vector that encodes the latent linearly plus independent noise.
//! The feature noise level is the single knob controlling how separable
//! boundary comparisons are for a trained comparator.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::comparator::{TrainingMode, TrainingPair};
use crate::csvfmt;
use crate::domain::{AnchorPool, Item, OrdinalScale};
use crate::error::{Error, Result};
use crate::oracle::bradley_terry_prob;

/// Fixed per-feature mixing weights; entry `j % 8` scales the latent value
/// in feature `j`. The small magnitudes keep features of order one for
/// latents in the tens.
const FEATURE_MIXING: [f64; 8] = [0.041, -0.037, 0.044, 0.035, -0.042, 0.038, -0.036, 0.043];

const MAX_REJECTION_ATTEMPTS: u32 = 10_000;

pub fn mixing_weight(feature_index: usize) -> f64 {
    FEATURE_MIXING[feature_index % FEATURE_MIXING.len()]
}

/// Shape of the synthetic population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationSpec {
    pub count: usize,
    pub latent_mean: f64,
    pub latent_sd: f64,
    pub latent_min: f64,
    pub latent_max: f64,
    pub feature_dim: usize,
    pub feature_noise_sd: f64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            count: 12_000,
            latent_mean: 26.5,
            latent_sd: 4.5,
            latent_min: 16.0,
            latent_max: 40.0,
            feature_dim: 8,
            // Calibrated with examples/calibrate.rs so the trained
            // comparator's per-boundary validation AUC stays in 0.70..0.85.
            feature_noise_sd: 0.47,
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidArgument(
                "population count must be positive".to_string(),
            ));
        }
        if !(self.latent_sd > 0.0 && self.latent_sd.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "latent sd must be positive, got {}",
                self.latent_sd
            )));
        }
        if self.latent_min >= self.latent_max
            || !self.latent_min.is_finite()
            || !self.latent_max.is_finite()
            || !self.latent_mean.is_finite()
        {
            return Err(Error::InvalidArgument(format!(
                "bad latent range [{}, {}]",
                self.latent_min, self.latent_max
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidArgument(
                "feature dimension must be positive".to_string(),
            ));
        }
        if !(self.feature_noise_sd >= 0.0 && self.feature_noise_sd.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "feature noise sd must be non-negative, got {}",
                self.feature_noise_sd
            )));
        }
        Ok(())
    }
}

/// Draws the population. Latents come from a normal truncated to
/// `[latent_min, latent_max]` by rejection; a range that rejects
/// essentially everything is reported as an error instead of spinning.
pub fn generate_population(spec: &PopulationSpec, seed: u64) -> Result<Vec<Item>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent_dist = Normal::new(spec.latent_mean, spec.latent_sd)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let noise_dist = Normal::new(0.0, spec.feature_noise_sd)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut items = Vec::with_capacity(spec.count);
    for id in 0..spec.count {
        let mut latent = None;
        for _ in 0..MAX_REJECTION_ATTEMPTS {
            let draw = latent_dist.sample(&mut rng);
            if (spec.latent_min..=spec.latent_max).contains(&draw) {
                latent = Some(draw);
                break;
            }
        }
        let latent = latent.ok_or_else(|| {
            Error::InvalidArgument(format!(
                "latent range [{}, {}] rejects nearly all draws from mean {} sd {}",
                spec.latent_min, spec.latent_max, spec.latent_mean, spec.latent_sd
            ))
        })?;
        let features = (0..spec.feature_dim)
            .map(|j| {
                let noise = if spec.feature_noise_sd > 0.0 {
                    noise_dist.sample(&mut rng)
                } else {
                    0.0
                };
                latent * mixing_weight(j) + noise
            })
            .collect();
        items.push(Item {
            id: id as u64,
            latent_value: latent,
            features,
        });
    }
    Ok(items)
}

/// Shares of the population given to each role; the remainder is the test
/// set. Anchor items feed the per-boundary anchor pools, pair items feed
/// comparator training, validation items drive early stopping and threshold
/// tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitFractions {
    pub anchor: f64,
    pub pairs: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            anchor: 0.4,
            pairs: 0.3,
            validation: 0.15,
        }
    }
}

impl SplitFractions {
    fn validate(&self) -> Result<()> {
        let parts = [self.anchor, self.pairs, self.validation];
        if parts.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "split fractions must lie in (0, 1), got {parts:?}"
            )));
        }
        if parts.iter().sum::<f64>() >= 1.0 {
            return Err(Error::InvalidArgument(
                "split fractions must leave room for a test set".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DataSplit {
    pub anchor_items: Vec<Item>,
    pub pair_items: Vec<Item>,
    pub validation_items: Vec<Item>,
    pub test_items: Vec<Item>,
}

/// Shuffles and partitions the population into the four roles.
pub fn split_items(items: &[Item], fractions: &SplitFractions, seed: u64) -> Result<DataSplit> {
    fractions.validate()?;
    if items.len() < 4 {
        return Err(Error::DataInsufficiency(format!(
            "cannot split {} items four ways",
            items.len()
        )));
    }
    let mut shuffled: Vec<Item> = items.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let n = shuffled.len();
    let n_anchor = (fractions.anchor * n as f64).floor() as usize;
    let n_pairs = (fractions.pairs * n as f64).floor() as usize;
    let n_validation = (fractions.validation * n as f64).floor() as usize;
    let rest = shuffled.split_off(n_anchor);
    let mut rest_iter = rest.into_iter();
    let pair_items: Vec<Item> = rest_iter.by_ref().take(n_pairs).collect();
    let validation_items: Vec<Item> = rest_iter.by_ref().take(n_validation).collect();
    let test_items: Vec<Item> = rest_iter.collect();
    if test_items.is_empty() {
        return Err(Error::DataInsufficiency(
            "split left no test items".to_string(),
        ));
    }
    Ok(DataSplit {
        anchor_items: shuffled,
        pair_items,
        validation_items,
        test_items,
    })
}

/// Collects, per interior boundary, the anchor items whose latent value is
/// within `gamma` of it, sorted by id. Every interior boundary must catch
/// at least one anchor.
pub fn build_anchor_pool(items: &[Item], scale: &OrdinalScale, gamma: f64) -> Result<AnchorPool> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "anchor tolerance must be positive, got {gamma}"
        )));
    }
    let mut pools: BTreeMap<usize, Vec<Item>> = BTreeMap::new();
    for index in scale.interior_indices() {
        let boundary = scale.boundary(index)?;
        let mut pool: Vec<Item> = items
            .iter()
            .filter(|item| (item.latent_value - boundary).abs() <= gamma)
            .cloned()
            .collect();
        pool.sort_by_key(|item| item.id);
        if pool.is_empty() {
            return Err(Error::DataInsufficiency(format!(
                "no anchors within {gamma} of boundary {boundary}"
            )));
        }
        pools.insert(index, pool);
    }
    AnchorPool::new(scale, pools, gamma)
}

/// Builds `pairs_per_boundary` supervised pairs for every interior
/// boundary.
///
/// The quota is split evenly over that boundary's anchors in id order, with
/// the remainder going to the first anchor; each pair draws its item
/// uniformly from `items`. Targets compare the item to the boundary value:
/// a 0/1 exceedance indicator in [`TrainingMode::Binary`], the win
/// probability of the item's latent over the boundary in
/// [`TrainingMode::Soft`].
pub fn build_pairs(
    items: &[Item],
    anchors: &AnchorPool,
    scale: &OrdinalScale,
    pairs_per_boundary: usize,
    mode: TrainingMode,
    seed: u64,
) -> Result<Vec<TrainingPair>> {
    if items.is_empty() {
        return Err(Error::DataInsufficiency(
            "no items to pair against anchors".to_string(),
        ));
    }
    if pairs_per_boundary == 0 {
        return Err(Error::InvalidArgument(
            "pairs per boundary must be positive".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for index in anchors.boundary_indices() {
        let boundary = scale.boundary(index)?;
        let pool = anchors.anchors_for(index).unwrap();
        let base = pairs_per_boundary / pool.len();
        let remainder = pairs_per_boundary % pool.len();
        for (slot, anchor) in pool.iter().enumerate() {
            let quota = base + if slot == 0 { remainder } else { 0 };
            for _ in 0..quota {
                let item = &items[rng.random_range(0..items.len())];
                let target = match mode {
                    TrainingMode::Binary => f64::from(item.latent_value >= boundary),
                    TrainingMode::Soft => bradley_terry_prob(item.latent_value, boundary)?,
                };
                pairs.push(TrainingPair {
                    boundary_index: index,
                    anchor_features: anchor.features.clone(),
                    item_features: item.features.clone(),
                    target,
                });
            }
        }
    }
    Ok(pairs)
}

/// Writes items as CSV with columns `id, latent_value, f0..f{d-1}`.
pub fn write_items_csv(path: &Path, items: &[Item]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::DataInsufficiency("no items to write".to_string()));
    }
    let dim = items[0].features.len();
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string(), "latent_value".to_string()];
    header.extend((0..dim).map(|j| format!("f{j}")));
    writer.write_record(&header)?;
    for item in items {
        if item.features.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "item {} has {} features, expected {dim}",
                item.id,
                item.features.len()
            )));
        }
        let mut record = vec![item.id.to_string(), csvfmt::format_float(item.latent_value)];
        record.extend(item.features.iter().map(|&f| csvfmt::format_float(f)));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_items_csv(path: &Path) -> Result<Vec<Item>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "id" || &headers[1] != "latent_value" {
        return Err(Error::InvalidArgument(format!(
            "unexpected item CSV header {headers:?}"
        )));
    }
    let parse = |field: &str| -> Result<f64> {
        field
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad float field `{field}`")))
    };
    let mut items = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::ShapeMismatch(format!(
                "item row has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let id: u64 = record[0]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad item id `{}`", &record[0])))?;
        let latent_value = parse(&record[1])?;
        let features = record
            .iter()
            .skip(2)
            .map(parse)
            .collect::<Result<Vec<f64>>>()?;
        items.push(Item {
            id,
            latent_value,
            features,
        });
    }
    if items.is_empty() {
        return Err(Error::DataInsufficiency("item CSV has no rows".to_string()));
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bmi_scale() -> OrdinalScale {
        OrdinalScale::new(vec![16.0, 18.5, 25.0, 30.0, 35.0, 40.0]).unwrap()
    }

    #[test]
    fn population_respects_the_truncation_window() {
        let spec = PopulationSpec {
            count: 20_000,
            ..PopulationSpec::default()
        };
        let items = generate_population(&spec, 1).unwrap();
        assert_eq!(items.len(), 20_000);
        assert!(items
            .iter()
            .all(|i| (16.0..=40.0).contains(&i.latent_value)));
        let mean = items.iter().map(|i| i.latent_value).sum::<f64>() / items.len() as f64;
        assert!((mean - 26.5).abs() < 0.2, "mean {mean}");
        let var = items
            .iter()
            .map(|i| (i.latent_value - mean).powi(2))
            .sum::<f64>()
            / items.len() as f64;
        let sd = var.sqrt();
        assert!((4.0..=4.6).contains(&sd), "sd {sd}");
    }

    #[test]
    fn population_is_reproducible_and_seed_sensitive() {
        let spec = PopulationSpec {
            count: 100,
            ..PopulationSpec::default()
        };
        let a = generate_population(&spec, 7).unwrap();
        let b = generate_population(&spec, 7).unwrap();
        let c = generate_population(&spec, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_features_encode_the_latent_exactly() {
        let spec = PopulationSpec {
            count: 10,
            feature_noise_sd: 0.0,
            ..PopulationSpec::default()
        };
        let items = generate_population(&spec, 3).unwrap();
        for item in items {
            for (j, &f) in item.features.iter().enumerate() {
                assert_eq!(f, item.latent_value * mixing_weight(j));
            }
        }
    }

    #[test]
    fn impossible_truncation_is_an_error() {
        let spec = PopulationSpec {
            count: 1,
            latent_min: 100.0,
            latent_max: 101.0,
            ..PopulationSpec::default()
        };
        assert!(generate_population(&spec, 0).is_err());
        let bad = PopulationSpec {
            latent_min: 40.0,
            latent_max: 16.0,
            ..PopulationSpec::default()
        };
        assert!(generate_population(&bad, 0).is_err());
    }

    #[test]
    fn split_partitions_without_overlap() {
        let spec = PopulationSpec {
            count: 1000,
            ..PopulationSpec::default()
        };
        let items = generate_population(&spec, 2).unwrap();
        let split = split_items(&items, &SplitFractions::default(), 5).unwrap();
        assert_eq!(split.anchor_items.len(), 400);
        assert_eq!(split.pair_items.len(), 300);
        assert_eq!(split.validation_items.len(), 150);
        assert_eq!(split.test_items.len(), 150);
        let mut ids: Vec<u64> = split
            .anchor_items
            .iter()
            .chain(&split.pair_items)
            .chain(&split.validation_items)
            .chain(&split.test_items)
            .map(|i| i.id)
            .collect();
        ids.sort_unstable();
        let expected: Vec<u64> = (0..1000).collect();
        assert_eq!(ids, expected);

        let again = split_items(&items, &SplitFractions::default(), 5).unwrap();
        assert_eq!(split.test_items, again.test_items);

        let bad = SplitFractions {
            anchor: 0.5,
            pairs: 0.4,
            validation: 0.2,
        };
        assert!(split_items(&items, &bad, 5).is_err());
    }

    #[test]
    fn anchor_pool_collects_nearby_items_in_id_order() {
        let spec = PopulationSpec {
            count: 5000,
            ..PopulationSpec::default()
        };
        let items = generate_population(&spec, 4).unwrap();
        let scale = bmi_scale();
        let pool = build_anchor_pool(&items, &scale, 0.3).unwrap();
        for index in scale.interior_indices() {
            let boundary = scale.boundary(index).unwrap();
            let anchors = pool.anchors_for(index).unwrap();
            assert!(!anchors.is_empty(), "boundary {boundary}");
            assert!(anchors
                .iter()
                .all(|a| (a.latent_value - boundary).abs() <= 0.3));
            assert!(anchors.windows(2).all(|w| w[0].id < w[1].id));
        }
        assert!(build_anchor_pool(&items, &scale, 0.0).is_err());
    }

    #[test]
    fn pair_targets_follow_the_mode() {
        let scale = bmi_scale();
        let spec = PopulationSpec {
            count: 4000,
            ..PopulationSpec::default()
        };
        let items = generate_population(&spec, 6).unwrap();
        let split = split_items(&items, &SplitFractions::default(), 7).unwrap();
        let pool = build_anchor_pool(&split.anchor_items, &scale, 0.3).unwrap();

        let binary = build_pairs(
            &split.pair_items,
            &pool,
            &scale,
            101,
            TrainingMode::Binary,
            9,
        )
        .unwrap();
        assert_eq!(binary.len(), 101 * 4);
        for index in scale.interior_indices() {
            assert_eq!(
                binary.iter().filter(|p| p.boundary_index == index).count(),
                101
            );
        }
        let by_latent: BTreeMap<u64, f64> = split
            .pair_items
            .iter()
            .map(|i| (i.id, i.latent_value))
            .collect();
        for pair in &binary {
            assert!(pair.target == 0.0 || pair.target == 1.0);
            // The item features must belong to a pair-split item whose
            // exceedance of the boundary matches the target.
            let item = split
                .pair_items
                .iter()
                .find(|i| i.features == pair.item_features)
                .unwrap();
            let boundary = scale.boundary(pair.boundary_index).unwrap();
            assert_eq!(pair.target, f64::from(by_latent[&item.id] >= boundary));
        }

        let soft =
            build_pairs(&split.pair_items, &pool, &scale, 50, TrainingMode::Soft, 9).unwrap();
        for pair in &soft {
            let item = split
                .pair_items
                .iter()
                .find(|i| i.features == pair.item_features)
                .unwrap();
            let boundary = scale.boundary(pair.boundary_index).unwrap();
            let want = bradley_terry_prob(item.latent_value, boundary).unwrap();
            assert_eq!(pair.target, want);
        }
    }

    #[test]
    fn quota_remainder_lands_on_the_first_anchor() {
        let scale = bmi_scale();
        // Hand-built anchors: three at boundary 1, one at the others.
        let mk = |id, latent: f64| Item {
            id,
            latent_value: latent,
            features: vec![latent * 0.04],
        };
        let anchor_items = vec![
            mk(3, 18.4),
            mk(1, 18.5),
            mk(7, 18.6),
            mk(2, 25.1),
            mk(4, 30.0),
            mk(5, 34.9),
        ];
        let pool = build_anchor_pool(&anchor_items, &scale, 0.3).unwrap();
        let items = vec![mk(100, 20.0), mk(101, 33.0)];
        let pairs = build_pairs(&items, &pool, &scale, 8, TrainingMode::Binary, 1).unwrap();
        // Boundary 1 has anchors with ids 1, 3, 7: quotas 4, 2, 2.
        let b1: Vec<&TrainingPair> = pairs.iter().filter(|p| p.boundary_index == 1).collect();
        assert_eq!(b1.len(), 8);
        let first_anchor = &pool.anchors_for(1).unwrap()[0];
        assert_eq!(first_anchor.id, 1);
        let on_first = b1
            .iter()
            .filter(|p| p.anchor_features == first_anchor.features)
            .count();
        assert_eq!(on_first, 4);
    }

    #[test]
    fn items_csv_round_trips_to_formatting_precision() {
        let spec = PopulationSpec {
            count: 50,
            ..PopulationSpec::default()
        };
        let items = generate_population(&spec, 11).unwrap();
        let dir = std::env::temp_dir().join(format!("datagen-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("items.csv");
        write_items_csv(&path, &items).unwrap();
        let loaded = read_items_csv(&path).unwrap();
        assert_eq!(loaded.len(), items.len());
        for (a, b) in items.iter().zip(&loaded) {
            assert_eq!(a.id, b.id);
            assert!((a.latent_value - b.latent_value).abs() < 1e-9 * a.latent_value.abs());
            for (x, y) in a.features.iter().zip(&b.features) {
                assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
            }
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
