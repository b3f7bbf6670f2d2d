//! Noisy binary search over an ordered boundary sequence.
//!
//! Both searches consume empirical exceedance probabilities `p_hat_i` that
//! fall from 1 to 0 as the boundary index climbs past the item. The
//! endpoints are pinned analytically to 1 and 0: items are assumed to lie
//! inside the scale, so those probabilities are never bought from the
//! oracle and never appear in the trajectory.

use std::collections::BTreeMap;

use crate::domain::{OrdinalScale, SearchResult};
use crate::error::{Error, Result};
use crate::oracle::ComparisonOracle;

/// Tuning knobs shared by the searches.
///
/// `epsilon` is the half-width of the indifference zone around 1/2 in which
/// the plain search stops at the tested boundary. `k1` is the number of net
/// confirmations the interval search needs at a leaf before it commits, and
/// `k2` caps its total node visits before it falls back to a plain search
/// over the boundaries seen so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbsParams {
    pub epsilon: f64,
    pub k1: u32,
    pub k2: u32,
}

impl NbsParams {
    /// Defaults scaled to the sequence length `n`: `epsilon = 0.03`,
    /// `k1 = ceil(3 ln n)`, `k2 = ceil(12 ln n)`.
    pub fn for_scale(scale: &OrdinalScale) -> Self {
        let log_n = (scale.len() as f64).ln();
        Self {
            epsilon: 0.03,
            k1: (3.0 * log_n).ceil() as u32,
            k2: (12.0 * log_n).ceil() as u32,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::OutOfRange {
                value: self.epsilon,
                lo: 0.0,
                hi: 0.5,
            });
        }
        if self.k1 == 0 || self.k2 == 0 {
            return Err(Error::InvalidArgument(
                "confirmation and step limits must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Comparison budget per estimate, `ceil(1 / epsilon^2)`, at every boundary.
pub fn uniform_trials(scale: &OrdinalScale, epsilon: f64) -> Result<Vec<u32>> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::OutOfRange {
            value: epsilon,
            lo: 0.0,
            hi: 0.5,
        });
    }
    let h = (1.0 / (epsilon * epsilon)).ceil() as u32;
    Ok(vec![h; scale.len()])
}

fn validate_inputs(
    oracle: &dyn ComparisonOracle,
    scale: &OrdinalScale,
    trials: &[u32],
    params: &NbsParams,
) -> Result<()> {
    params.validate()?;
    if trials.len() != scale.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} trial counts for {} boundaries",
            trials.len(),
            scale.len()
        )));
    }
    if oracle.num_boundaries() != scale.len() {
        return Err(Error::ShapeMismatch(format!(
            "oracle covers {} boundaries, scale has {}",
            oracle.num_boundaries(),
            scale.len()
        )));
    }
    Ok(())
}

fn buy_estimate(
    oracle: &mut dyn ComparisonOracle,
    trials: &[u32],
    trajectory: &mut Vec<(usize, crate::domain::EmpiricalEstimate)>,
    index: usize,
) -> Result<f64> {
    if trials[index] == 0 {
        return Err(Error::InvalidArgument(format!(
            "no comparison budget at boundary index {index}"
        )));
    }
    let estimate = oracle.estimate_probability(index, trials[index])?;
    trajectory.push((index, estimate));
    Ok(estimate.p_hat)
}

/// Plain noisy binary search.
///
/// Keeps an index window `[a, b]`, repeatedly estimates the exceedance
/// probability at the midpoint, and either stops there (estimate within
/// `epsilon` of 1/2), moves `a` up (estimate above), or moves `b` down
/// (estimate below). Once the window is a single category it returns `a`.
pub fn nnbs(
    oracle: &mut dyn ComparisonOracle,
    scale: &OrdinalScale,
    trials: &[u32],
    params: &NbsParams,
) -> Result<SearchResult> {
    validate_inputs(oracle, scale, trials, params)?;
    let ids: Vec<usize> = (0..scale.len()).collect();
    let mut trajectory = Vec::new();
    let position = nnbs_over(oracle, &ids, trials, params.epsilon, &mut trajectory)?;
    Ok(SearchResult::new(ids[position], trajectory))
}

/// The same window search over an arbitrary ascending subset of boundary
/// indices, returning a position into `ids`.
fn nnbs_over(
    oracle: &mut dyn ComparisonOracle,
    ids: &[usize],
    trials: &[u32],
    epsilon: f64,
    trajectory: &mut Vec<(usize, crate::domain::EmpiricalEstimate)>,
) -> Result<usize> {
    debug_assert!(ids.len() >= 2);
    let mut a = 0;
    let mut b = ids.len() - 1;
    loop {
        if b - a == 1 {
            return Ok(a);
        }
        let c = (a + b) / 2;
        let p = buy_estimate(oracle, trials, trajectory, ids[c])?;
        if (p - 0.5).abs() <= epsilon {
            return Ok(c);
        }
        if p > 0.5 + epsilon {
            a = c;
        } else {
            b = c;
        }
    }
}

/// Noisy binary search on the interval tree.
///
/// Nodes are index intervals; `[l, r]` splits at `m = (l + r) / 2` into
/// `[l, m]` and `[m, r]`, down to single-category leaves. Every visit buys
/// fresh estimates, so evidence accumulates across visits instead of being
/// cached. A node whose own endpoints contradict containment sends the walk
/// back to its parent. At a leaf, containment grows a confirmation counter
/// and contradiction shrinks it; the counter resets whenever the walk moves.
/// `k1` net confirmations decide the category. If `k2` node visits pass
/// without a decision, the walk's trajectory seeds a plain search over the
/// boundaries it touched (endpoints always included), and that result is
/// final.
pub fn inbs(
    oracle: &mut dyn ComparisonOracle,
    scale: &OrdinalScale,
    trials: &[u32],
    params: &NbsParams,
) -> Result<SearchResult> {
    validate_inputs(oracle, scale, trials, params)?;
    let n = scale.len();
    let mut trajectory = Vec::new();
    let mut path = vec![(0usize, n - 1)];
    let mut counter: i64 = 0;

    let mut prob_at = |index: usize, trajectory: &mut Vec<_>| -> Result<f64> {
        if index == 0 {
            Ok(1.0)
        } else if index == n - 1 {
            Ok(0.0)
        } else {
            buy_estimate(oracle, trials, trajectory, index)
        }
    };

    for _ in 0..params.k2 {
        let (l, r) = *path.last().unwrap();
        if r - l == 1 {
            let p_lo = prob_at(l, &mut trajectory)?;
            let p_hi = prob_at(r, &mut trajectory)?;
            if p_hi <= 0.5 && 0.5 <= p_lo {
                counter += 1;
                if counter >= i64::from(params.k1) {
                    return Ok(SearchResult::new(l, trajectory));
                }
            } else {
                counter -= 1;
                if counter < 0 {
                    if path.len() > 1 {
                        path.pop();
                    }
                    counter = 0;
                }
            }
        } else {
            let p_l = prob_at(l, &mut trajectory)?;
            let p_r = prob_at(r, &mut trajectory)?;
            if p_l < 0.5 || p_r > 0.5 {
                if path.len() > 1 {
                    path.pop();
                }
                counter = 0;
                continue;
            }
            let m = (l + r) / 2;
            let p_m = prob_at(m, &mut trajectory)?;
            path.push(if p_m > 0.5 { (m, r) } else { (l, m) });
            counter = 0;
        }
    }

    // Out of steps: fall back to a plain search over everything seen.
    let mut seen: Vec<usize> = trajectory.iter().map(|&(i, _)| i).collect();
    seen.push(0);
    seen.push(n - 1);
    seen.sort_unstable();
    seen.dedup();
    let position = nnbs_over(oracle, &seen, trials, params.epsilon, &mut trajectory)?;
    Ok(SearchResult::new(seen[position], trajectory))
}

/// Comparison budget shares per interior boundary, each proportional to
/// `1 - auc` so that weaker comparators get more repetitions.
///
/// Keys must be exactly the interior boundary indices of the scale; values
/// must lie in `(0, 1]`. Fails if every boundary already separates
/// perfectly, since the shares are then undefined.
pub fn budget_fractions(
    scale: &OrdinalScale,
    aucs: &BTreeMap<usize, f64>,
) -> Result<BTreeMap<usize, f64>> {
    let interior: Vec<usize> = scale.interior_indices().collect();
    if aucs.len() != interior.len() || !interior.iter().all(|i| aucs.contains_key(i)) {
        return Err(Error::InvalidArgument(format!(
            "need one separability value for each interior boundary index {interior:?}"
        )));
    }
    let mut weights = BTreeMap::new();
    let mut total = 0.0;
    for (&index, &auc) in aucs {
        if !(auc > 0.0 && auc <= 1.0) {
            return Err(Error::OutOfRange {
                value: auc,
                lo: 0.0,
                hi: 1.0,
            });
        }
        let w = 1.0 - auc;
        weights.insert(index, w);
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(weights.into_iter().map(|(i, w)| (i, w / total)).collect())
}

/// Splits an integer comparison budget across boundaries by the fractions
/// from [`budget_fractions`], rounding by largest remainder so the result
/// sums to `total` exactly. Ties go to the lower boundary index. Endpoint
/// boundaries get nothing.
pub fn allocate_budget(
    scale: &OrdinalScale,
    aucs: &BTreeMap<usize, f64>,
    total: u32,
) -> Result<Vec<u32>> {
    if total == 0 {
        return Err(Error::InvalidArgument(
            "total comparison budget must be positive".to_string(),
        ));
    }
    let fractions = budget_fractions(scale, aucs)?;
    let mut shares = vec![0u32; scale.len()];
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(fractions.len());
    let mut assigned = 0u32;
    for (&index, &fraction) in &fractions {
        let exact = fraction * f64::from(total);
        let base = exact.floor() as u32;
        shares[index] = base;
        assigned += base;
        remainders.push((index, exact - exact.floor()));
    }
    let mut leftover = total - assigned;
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (index, _) in remainders {
        if leftover == 0 {
            break;
        }
        shares[index] += 1;
        leftover -= 1;
    }
    if leftover > 0 {
        return Err(Error::InvalidArgument(format!(
            "could not place {leftover} budget units"
        )));
    }
    Ok(shares)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::EmpiricalEstimate;
    use crate::oracle::{CoinFlipOracle, ThresholdFlipOracle};
    use proptest::prelude::*;

    fn bmi_scale() -> OrdinalScale {
        OrdinalScale::new(vec![16.0, 18.5, 25.0, 30.0, 35.0, 40.0]).unwrap()
    }

    fn noiseless(scale: &OrdinalScale, value: f64, seed: u64) -> ThresholdFlipOracle {
        ThresholdFlipOracle::new(scale, value, 0.0, seed).unwrap()
    }

    #[test]
    fn nnbs_is_exact_without_noise() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        let trials = vec![3; scale.len()];
        for value in [16.0, 18.5, 24.9, 25.0, 27.0, 34.0, 39.9, 40.0] {
            let mut oracle = noiseless(&scale, value, 0);
            let result = nnbs(&mut oracle, &scale, &trials, &params).unwrap();
            assert_eq!(
                result.category_index,
                scale.category_of(value).unwrap(),
                "value {value}"
            );
        }
    }

    #[test]
    fn inbs_is_exact_without_noise() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        let trials = vec![3; scale.len()];
        for value in [16.0, 18.5, 24.9, 25.0, 27.0, 34.0, 39.9, 40.0] {
            let mut oracle = noiseless(&scale, value, 0);
            let result = inbs(&mut oracle, &scale, &trials, &params).unwrap();
            assert_eq!(
                result.category_index,
                scale.category_of(value).unwrap(),
                "value {value}"
            );
        }
    }

    #[test]
    fn default_params_scale_with_sequence_length() {
        let params = NbsParams::for_scale(&bmi_scale());
        assert_eq!(params.epsilon, 0.03);
        assert_eq!(params.k1, 6);
        assert_eq!(params.k2, 22);
        let h = uniform_trials(&bmi_scale(), params.epsilon).unwrap();
        assert_eq!(h, vec![1112; 6]);
    }

    #[test]
    fn nnbs_stops_inside_the_indifference_zone() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        // The first midpoint is index 2; give it a fair coin so the
        // estimate lands in the zone and the search stops right there.
        let mut oracle = CoinFlipOracle::new(vec![1.0, 1.0, 0.5, 0.0, 0.0, 0.0], 11).unwrap();
        let result = nnbs(&mut oracle, &scale, &[10_000; 6], &params).unwrap();
        assert_eq!(result.category_index, 2);
        assert_eq!(result.trajectory.len(), 1);
        let (index, estimate) = result.trajectory[0];
        assert_eq!(index, 2);
        assert!((estimate.p_hat - 0.5).abs() <= params.epsilon);
        assert_eq!(result.queries_used, 10_000);
    }

    #[test]
    fn nnbs_never_queries_endpoints_and_spends_what_it_logs() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        let trials = vec![7; 6];
        for value in [16.0, 23.0, 31.0, 40.0] {
            let mut oracle = noiseless(&scale, value, 0);
            let result = nnbs(&mut oracle, &scale, &trials, &params).unwrap();
            assert!(result.trajectory.iter().all(|&(i, _)| i != 0 && i != 5));
            assert_eq!(result.queries_used, 7 * result.trajectory.len() as u64);
        }
    }

    #[test]
    fn accuracy_grows_with_the_per_estimate_budget() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        let probs = vec![1.0, 0.99, 0.9, 0.1, 0.05, 0.0];
        let runs = 400u32;
        let mut accuracies = Vec::new();
        for h in [1u32, 4, 16] {
            let trials = vec![h; 6];
            let mut hits = 0u32;
            for seed in 0..runs {
                let mut oracle = CoinFlipOracle::new(probs.clone(), u64::from(seed)).unwrap();
                let result = nnbs(&mut oracle, &scale, &trials, &params).unwrap();
                if result.category_index == 2 {
                    hits += 1;
                }
            }
            accuracies.push(f64::from(hits) / f64::from(runs));
        }
        assert!(
            accuracies.windows(2).all(|w| w[0] <= w[1]),
            "accuracies {accuracies:?}"
        );
        assert!(accuracies[2] >= 0.9, "accuracies {accuracies:?}");
    }

    #[test]
    fn inbs_commits_after_repeated_leaf_confirmations() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        let mut oracle = noiseless(&scale, 27.0, 0);
        let result = inbs(&mut oracle, &scale, &[5; 6], &params).unwrap();
        assert_eq!(result.category_index, 2);
        // Walk: root buys p2; [2,5] buys p2 and p3; six leaf visits buy
        // p2 and p3 each.
        assert_eq!(result.trajectory.len(), 3 + 2 * 6);
        assert_eq!(result.queries_used, 5 * 15);
    }

    #[test]
    fn inbs_with_always_true_answers_lands_in_the_top_category() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        // Every interior comparison says "item is above". The walk climbs to
        // the top leaf, where the pinned zero at the last boundary lets the
        // counter grow to a decision.
        let mut oracle = CoinFlipOracle::new(vec![1.0; 6], 0).unwrap();
        let result = inbs(&mut oracle, &scale, &[2; 6], &params).unwrap();
        assert_eq!(result.category_index, 4);
    }

    /// Replays scripted per-boundary estimate sequences instead of flipping
    /// coins, to pin down the fallback path deterministically.
    struct ScriptedOracle {
        n: usize,
        scripts: BTreeMap<usize, Vec<f64>>,
        cursors: BTreeMap<usize, usize>,
    }

    impl ScriptedOracle {
        fn new(n: usize, scripts: BTreeMap<usize, Vec<f64>>) -> Self {
            Self {
                n,
                scripts,
                cursors: BTreeMap::new(),
            }
        }
    }

    impl ComparisonOracle for ScriptedOracle {
        fn num_boundaries(&self) -> usize {
            self.n
        }

        fn compare(&mut self, _boundary_index: usize) -> crate::Result<bool> {
            unreachable!("scripted oracle serves whole estimates")
        }

        fn estimate_probability(
            &mut self,
            boundary_index: usize,
            trials: u32,
        ) -> crate::Result<EmpiricalEstimate> {
            let cursor = self.cursors.entry(boundary_index).or_insert(0);
            let script = &self.scripts[&boundary_index];
            let p = script[*cursor % script.len()];
            *cursor += 1;
            EmpiricalEstimate::from_counts((p * f64::from(trials)).round() as u32, trials)
        }
    }

    #[test]
    fn inbs_falls_back_to_a_plain_search_over_visited_boundaries() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        // Boundary 1 contradicts itself between midpoint and leaf visits,
        // so the walk ping-pongs between [0,2] and [0,1] without ever
        // collecting six confirmations; boundary 2 stays low so the walk
        // never leaves that corner. After k2 = 22 visits the fallback runs
        // over the seen boundaries {0, 1, 2, 5}.
        let mut scripts = BTreeMap::new();
        scripts.insert(1usize, vec![0.4, 0.6]);
        scripts.insert(2usize, vec![0.3]);
        let mut oracle = ScriptedOracle::new(6, scripts);
        let result = inbs(&mut oracle, &scale, &[10; 6], &params).unwrap();

        // Fallback trace: boundary 1 reads 0.6 (above the zone), then
        // boundary 2 reads 0.3 (below), leaving the window [1, 2].
        assert_eq!(result.category_index, 1);
        // Main walk: root (p2) + eleven [0,2] visits (p2, p1) + ten leaf
        // visits (p1), then the fallback buys p1 and p2 once more.
        assert_eq!(result.trajectory.len(), 35);
        assert_eq!(result.queries_used, 350);
        let bought: Vec<usize> = result.trajectory.iter().map(|&(i, _)| i).collect();
        assert!(bought.iter().all(|&i| i == 1 || i == 2));
        assert_eq!(
            result.trajectory[33],
            (1, EmpiricalEstimate::from_counts(6, 10).unwrap())
        );
        assert_eq!(
            result.trajectory[34],
            (2, EmpiricalEstimate::from_counts(3, 10).unwrap())
        );
    }

    #[test]
    fn searches_validate_their_inputs() {
        let scale = bmi_scale();
        let params = NbsParams::for_scale(&scale);
        let mut oracle = noiseless(&scale, 27.0, 0);
        assert!(nnbs(&mut oracle, &scale, &[3; 5], &params).is_err());
        let bad = NbsParams {
            epsilon: 0.6,
            ..params
        };
        assert!(nnbs(&mut oracle, &scale, &[3; 6], &bad).is_err());
        // Zero budget at a boundary the search must test.
        let mut trials = vec![3; 6];
        trials[2] = 0;
        assert!(nnbs(&mut oracle, &scale, &trials, &params).is_err());
    }

    #[test]
    fn budget_fractions_match_hand_normalization() {
        let scale = bmi_scale();
        let aucs = BTreeMap::from([(1, 0.692), (2, 0.725), (3, 0.729), (4, 0.775)]);
        let fractions = budget_fractions(&scale, &aucs).unwrap();
        let total = 0.308 + 0.275 + 0.271 + 0.225;
        for (index, weight) in [(1, 0.308), (2, 0.275), (3, 0.271), (4, 0.225)] {
            assert!((fractions[&index] - weight / total).abs() < 1e-12);
        }
        let sum: f64 = fractions.values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_fractions_reject_bad_inputs() {
        let scale = bmi_scale();
        let missing = BTreeMap::from([(1, 0.7), (2, 0.7), (3, 0.7)]);
        assert!(budget_fractions(&scale, &missing).is_err());
        let out_of_range = BTreeMap::from([(1, 0.7), (2, 1.2), (3, 0.7), (4, 0.7)]);
        assert!(budget_fractions(&scale, &out_of_range).is_err());
        let all_perfect = BTreeMap::from([(1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0)]);
        assert!(matches!(
            budget_fractions(&scale, &all_perfect),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn allocation_breaks_ties_toward_lower_boundaries() {
        let scale = bmi_scale();
        let aucs = BTreeMap::from([(1, 0.75), (2, 0.75), (3, 0.75), (4, 0.75)]);
        let shares = allocate_budget(&scale, &aucs, 10).unwrap();
        assert_eq!(shares, vec![0, 3, 3, 2, 2, 0]);
        assert!(allocate_budget(&scale, &aucs, 0).is_err());
    }

    #[test]
    fn allocation_sums_exactly_for_the_reference_weights() {
        let scale = bmi_scale();
        let aucs = BTreeMap::from([(1, 0.692), (2, 0.725), (3, 0.729), (4, 0.775)]);
        for total in [1u32, 7, 8, 97, 500, 1000] {
            let shares = allocate_budget(&scale, &aucs, total).unwrap();
            assert_eq!(shares.iter().sum::<u32>(), total);
            assert_eq!(shares[0], 0);
            assert_eq!(shares[5], 0);
        }
    }

    proptest! {
        #[test]
        fn nnbs_buys_at_most_log_many_estimates(
            probs in proptest::collection::vec(0.0f64..=1.0, 2..20),
            seed in 0u64..1000,
        ) {
            let n = probs.len();
            let boundaries: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let scale = OrdinalScale::new(boundaries).unwrap();
            let mut oracle = CoinFlipOracle::new(probs, seed).unwrap();
            let params = NbsParams { epsilon: 0.03, k1: 1, k2: 1 };
            let result = nnbs(&mut oracle, &scale, &vec![4; n], &params).unwrap();
            let log_bound = usize::BITS - (n - 1).leading_zeros();
            prop_assert!(result.trajectory.len() <= log_bound as usize);
            prop_assert!(result.category_index < scale.num_categories());
            // Every bought estimate hit an interior boundary exactly once.
            let mut seen: Vec<usize> = result.trajectory.iter().map(|&(i, _)| i).collect();
            let len_before = seen.len();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), len_before);
            prop_assert!(seen.iter().all(|&i| i > 0 && i < n - 1));
        }

        #[test]
        fn allocation_always_sums_to_total(
            aucs in proptest::collection::vec(0.55f64..0.99, 4),
            total in 1u32..2000,
        ) {
            let scale = bmi_scale();
            let map: BTreeMap<usize, f64> =
                aucs.iter().enumerate().map(|(i, &a)| (i + 1, a)).collect();
            let shares = allocate_budget(&scale, &map, total).unwrap();
            prop_assert_eq!(shares.iter().sum::<u32>(), total);
        }
    }
}
