//! Hazard-rate ordering (HRO) over a window of requests.
//!
//! At every request the virtual cache holds the objects with the largest
//! current hazard rates: whole objects until `capacity` slots are used (HR-E,
//! equal sizes) or whole objects until one does not fit plus a fraction of
//! that one (HR-FC). A request hits when its object is in that set, as if the
//! set had been prefetched. Hits are then turned into training labels by
//! marking the object's previous request as cache-friendly.

use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hazard::{HazardConfig, HazardCurve, HazardTable};
use crate::trace::Request;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HroMode {
    /// Equal sizes, whole objects only.
    HrE,
    /// Variable sizes with one fractionally cached object.
    HrFc,
}

impl HroMode {
    /// HR-E when every request in the window has the same size, HR-FC otherwise.
    pub fn for_window(window: &[Request]) -> HroMode {
        match window.first() {
            Some(first) if window.iter().all(|r| r.size == first.size) => HroMode::HrE,
            _ => HroMode::HrFc,
        }
    }
}

impl std::str::FromStr for HroMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hre" | "hr_e" | "hr-e" => Ok(HroMode::HrE),
            "hrfc" | "hr_fc" | "hr-fc" => Ok(HroMode::HrFc),
            other => Err(Error::InvalidConfig(format!("unknown HRO mode `{other}`"))),
        }
    }
}

/// Which keys of a window take part in the reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    /// Ascending.
    pub sampled_keys: Vec<u64>,
    pub sample_rate: f64,
    pub op_budget: u64,
}

impl SamplePlan {
    /// Every key of the window, no sampling.
    pub fn all(window: &[Request]) -> SamplePlan {
        let keys = unique_keys(window);
        let op_budget = (keys.len() as u64).saturating_mul(window.len() as u64);
        SamplePlan { sampled_keys: keys, sample_rate: 1.0, op_budget }
    }
}

fn unique_keys(window: &[Request]) -> Vec<u64> {
    let mut keys: Vec<u64> = window.iter().map(|r| r.key).collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// Picks a uniform random subset of the window's keys so that
/// `#keys × #requests` stays within `op_budget`.
pub fn calibrate_sampling(window: &[Request], op_budget: u64, seed: u64) -> SamplePlan {
    let keys = unique_keys(window);
    let need = keys.len() as f64 * window.len() as f64;
    let sample_rate = if need == 0.0 { 1.0 } else { (op_budget as f64 / need).min(1.0) };
    if sample_rate >= 1.0 {
        return SamplePlan { sampled_keys: keys, sample_rate: 1.0, op_budget };
    }
    let count = ((sample_rate * keys.len() as f64 + 1e-9).floor() as usize).clamp(1, keys.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled: Vec<u64> = index::sample(&mut rng, keys.len(), count).into_iter().map(|i| keys[i]).collect();
    sampled.sort_unstable();
    SamplePlan { sampled_keys: sampled, sample_rate, op_budget }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Equal hazards are ordered by ascending key.
    #[default]
    KeyAscending,
    /// Equal hazards are ordered by a seeded random permutation of the keys.
    Seeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub tie_break: TieBreak,
    /// When set, ages are rounded down to multiples of this quantum and each
    /// key's hazard is only re-evaluated when its bucket changes.
    pub age_quantum: Option<f64>,
}

/// HRO outcome of one request to a sampled key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HroMark {
    pub index: usize,
    pub hro_hit: bool,
    /// Cached fraction of the object, in `[0, 1]`.
    pub hit_fraction: f64,
}

/// Effective capacity after sampling: the full capacity scaled by the sampled
/// keys' share of the window's unique bytes.
pub fn effective_capacity(window: &[Request], sampled_keys: &[u64], capacity: u64) -> f64 {
    let mut sizes: HashMap<u64, u64> = HashMap::new();
    for r in window {
        sizes.entry(r.key).or_insert(r.size);
    }
    let total: u64 = sizes.values().sum();
    let sampled: u64 = sampled_keys.iter().filter_map(|k| sizes.get(k)).sum();
    if total == 0 {
        return 0.0;
    }
    if sampled == total {
        capacity as f64
    } else {
        capacity as f64 * (sampled as f64 / total as f64)
    }
}

/// Greedy fill of a virtual cache from `(key, hazard, size)` candidates:
/// sort by hazard descending (ties by `rank` ascending) and take whole
/// objects until one does not fit. HR-FC then stores the fitting prefix of
/// that object. Returns cached bytes per candidate, in input order.
pub fn fill_virtual_cache(candidates: &[(u64, f64, u64)], ranks: &[usize], capacity: f64, mode: HroMode) -> Vec<f64> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].1.total_cmp(&candidates[a].1).then(ranks[a].cmp(&ranks[b])));
    let mut cached = vec![0.0; candidates.len()];
    let mut used = 0.0;
    for i in order {
        let size = candidates[i].2 as f64;
        if used + size <= capacity {
            cached[i] = size;
            used += size;
        } else {
            if mode == HroMode::HrFc && capacity > used {
                cached[i] = capacity - used;
            }
            break;
        }
    }
    cached
}

/// Marks every request to a sampled key as an HRO hit or miss.
///
/// Ages are measured from each key's previous request in the window, or from
/// the window start for keys not yet requested.
pub fn reconstruct_hro(
    window: &[Request],
    plan: &SamplePlan,
    hazards: &HazardTable,
    capacity: u64,
    mode: HroMode,
    options: &ReconstructOptions,
) -> Result<Vec<HroMark>> {
    let Some(first) = window.first() else { return Ok(Vec::new()) };
    let keys = &plan.sampled_keys;
    let slot: HashMap<u64, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();

    let mut sizes = vec![0u64; keys.len()];
    for r in window {
        if let Some(&i) = slot.get(&r.key) {
            if sizes[i] == 0 {
                sizes[i] = r.size;
            }
        }
    }
    if mode == HroMode::HrE {
        if let Some(&s0) = sizes.iter().find(|s| **s > 0) {
            if let Some(&other) = sizes.iter().find(|s| **s > 0 && **s != s0) {
                return Err(Error::UnequalSizes(s0, other));
            }
        }
    }

    let curves: Vec<&HazardCurve> =
        keys.iter().map(|k| hazards.get(*k).ok_or(Error::MissingHazard(*k))).collect::<Result<_>>()?;

    let ranks: Vec<usize> = match options.tie_break {
        TieBreak::KeyAscending => (0..keys.len()).collect(),
        TieBreak::Seeded(seed) => {
            let mut perm: Vec<usize> = (0..keys.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            perm
        }
    };

    let cap = effective_capacity(window, keys, capacity);
    let mut last = vec![first.time; keys.len()];
    let mut memo: Vec<(f64, f64)> = vec![(f64::NAN, 0.0); keys.len()];
    let mut rates = vec![0.0; keys.len()];
    let mut marks = Vec::new();

    for (index, r) in window.iter().enumerate() {
        let Some(&target) = slot.get(&r.key) else { continue };
        for (j, curve) in curves.iter().enumerate() {
            let age = r.time - last[j];
            rates[j] = match options.age_quantum {
                None => curve.eval(age),
                Some(q) => {
                    let bucket = (age / q).floor() * q;
                    if memo[j].0 != bucket {
                        memo[j] = (bucket, curve.eval(bucket));
                    }
                    memo[j].1
                }
            };
        }

        // Bytes of objects ranked strictly ahead of the target.
        let (h, rank) = (rates[target], ranks[target]);
        let mut ahead = 0u64;
        let mut ahead_count = 0usize;
        for j in 0..keys.len() {
            if rates[j] > h || (rates[j] == h && ranks[j] < rank) {
                ahead += sizes[j];
                ahead_count += 1;
            }
        }
        let size = sizes[target] as f64;
        let hit_fraction = match mode {
            HroMode::HrE => {
                let slots = (cap / size + 1e-9).floor();
                if (ahead_count as f64) < slots {
                    1.0
                } else {
                    0.0
                }
            }
            HroMode::HrFc => ((cap - ahead as f64) / size).clamp(0.0, 1.0),
        };
        marks.push(HroMark { index, hro_hit: hit_fraction > 0.0, hit_fraction });
        last[target] = r.time;
    }
    Ok(marks)
}

/// Training label of one request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HroLabel {
    #[serde(rename = "index")]
    pub request_index: usize,
    pub key: u64,
    pub hro_hit: bool,
    pub hit_fraction: f64,
    pub cache_friendly: bool,
}

/// Turns HRO marks into cache-friendliness labels. With `look_back`, a hit
/// labels the same key's previous request as friendly; otherwise each
/// request's own mark is its label.
pub fn derive_labels(window: &[Request], marks: &[HroMark], look_back: bool) -> Vec<HroLabel> {
    let mut labels: Vec<HroLabel> = marks
        .iter()
        .map(|m| HroLabel {
            request_index: m.index,
            key: window[m.index].key,
            hro_hit: m.hro_hit,
            hit_fraction: m.hit_fraction,
            cache_friendly: !look_back && m.hro_hit,
        })
        .collect();
    if look_back {
        let mut previous: HashMap<u64, usize> = HashMap::new();
        for i in 0..labels.len() {
            let key = labels[i].key;
            if let Some(prev) = previous.insert(key, i) {
                if labels[i].hro_hit {
                    labels[prev].cache_friendly = true;
                }
            }
        }
    }
    labels
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HroBound {
    pub hit_probability: f64,
    pub byte_hit_probability: f64,
}

/// Aggregates marks into hit and byte-hit probabilities.
pub fn bound_from_marks(window: &[Request], marks: &[HroMark]) -> Result<HroBound> {
    if marks.is_empty() {
        return Err(Error::InsufficientData("no marked requests"));
    }
    let hits = marks.iter().filter(|m| m.hro_hit).count();
    let (mut hit_bytes, mut bytes) = (0.0, 0.0);
    for m in marks {
        let size = window[m.index].size as f64;
        hit_bytes += m.hit_fraction * size;
        bytes += size;
    }
    Ok(HroBound { hit_probability: hits as f64 / marks.len() as f64, byte_hit_probability: hit_bytes / bytes })
}

/// HRO upper bound over a whole trace without sampling.
pub fn hro_upper_bound(requests: &[Request], capacity: u64, hazards: &HazardTable, mode: HroMode) -> Result<HroBound> {
    let plan = SamplePlan::all(requests);
    let marks = reconstruct_hro(requests, &plan, hazards, capacity, mode, &ReconstructOptions::default())?;
    bound_from_marks(requests, &marks)
}

/// Settings for labeling one window end to end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingConfig {
    pub op_budget: u64,
    pub seed: u64,
    pub look_back: bool,
    pub hazard: HazardConfig,
    /// `None` picks HR-E for equal sizes and HR-FC otherwise.
    pub mode: Option<HroMode>,
    pub options: ReconstructOptions,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            op_budget: 5_000_000,
            seed: 0,
            look_back: true,
            hazard: HazardConfig::default(),
            mode: None,
            options: ReconstructOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub plan: SamplePlan,
    pub mode: HroMode,
    pub labels: Vec<HroLabel>,
}

/// Sampling, hazard estimation, reconstruction and labeling for one window.
pub fn label_window(window: &[Request], capacity: u64, config: &LabelingConfig) -> Result<LabeledWindow> {
    if window.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let plan = calibrate_sampling(window, config.op_budget, config.seed);
    let hazards = HazardTable::estimate(window, &plan.sampled_keys, &config.hazard)?;
    let mode = config.mode.unwrap_or_else(|| HroMode::for_window(window));
    let marks = reconstruct_hro(window, &plan, &hazards, capacity, mode, &config.options)?;
    let labels = derive_labels(window, &marks, config.look_back);
    Ok(LabeledWindow { plan, mode, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hazard::ClosedFormHazard;

    fn constant_table(rates: &[(u64, f64)]) -> HazardTable {
        let mut t = HazardTable::new();
        for &(k, r) in rates {
            t.insert(k, HazardCurve::ClosedForm(ClosedFormHazard::Exponential { rate: r }));
        }
        t
    }

    fn window(keys: &[u64], size: u64) -> Vec<Request> {
        keys.iter().enumerate().map(|(i, k)| Request::new(i as f64, *k, size)).collect()
    }

    #[test]
    fn sampling_keeps_everything_within_budget() {
        let w: Vec<Request> = (0..100).map(|i| Request::new(i as f64, i % 10, 1)).collect();
        let plan = calibrate_sampling(&w, 10_000, 7);
        assert_eq!(plan.sample_rate, 1.0);
        assert_eq!(plan.sampled_keys, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn sampling_rate_from_budget() {
        let w: Vec<Request> = (0..10_000).map(|i| Request::new(i as f64, i % 5000, 1)).collect();
        let plan = calibrate_sampling(&w, 5_000_000, 11);
        assert!((plan.sample_rate - 0.1).abs() < 1e-12);
        assert_eq!(plan.sampled_keys.len(), 500);
        assert!(plan.sampled_keys.len() as u64 * w.len() as u64 <= plan.op_budget);
        assert_eq!(plan, calibrate_sampling(&w, 5_000_000, 11));
        assert_ne!(plan.sampled_keys, calibrate_sampling(&w, 5_000_000, 12).sampled_keys);
    }

    #[test]
    fn hr_e_with_constant_rates() {
        let keys = [0, 1, 2, 0, 0, 1, 2, 0, 1, 0];
        let w = window(&keys, 1);
        let t = constant_table(&[(0, 3.0), (1, 2.0), (2, 1.0)]);
        let marks = reconstruct_hro(&w, &SamplePlan::all(&w), &t, 2, HroMode::HrE, &Default::default()).unwrap();
        for m in &marks {
            assert_eq!(m.hro_hit, w[m.index].key != 2);
            assert_eq!(m.hit_fraction, if m.hro_hit { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn hr_fc_fractional_object() {
        let w = vec![Request::new(0.0, 1, 60), Request::new(1.0, 2, 60)];
        let t = constant_table(&[(1, 2.0), (2, 1.0)]);
        let marks = reconstruct_hro(&w, &SamplePlan::all(&w), &t, 100, HroMode::HrFc, &Default::default()).unwrap();
        assert_eq!(marks[0].hit_fraction, 1.0);
        assert!((marks[1].hit_fraction - 40.0 / 60.0).abs() < 1e-12);
        assert!(marks[1].hro_hit);
    }

    #[test]
    fn everything_fits() {
        let w = vec![Request::new(0.0, 1, 10), Request::new(1.0, 2, 30), Request::new(2.0, 1, 10)];
        let t = constant_table(&[(1, 0.1), (2, 5.0)]);
        let b = hro_upper_bound(&w, 40, &t, HroMode::HrFc).unwrap();
        assert_eq!(b.hit_probability, 1.0);
        assert_eq!(b.byte_hit_probability, 1.0);
    }

    #[test]
    fn bound_weighted_mix() {
        // 50% A, 30% B, 20% C; two slots hold A and B.
        let mut keys = vec![0u64; 5];
        keys.extend([1, 1, 1, 2, 2]);
        let w = window(&keys, 1);
        let t = constant_table(&[(0, 3.0), (1, 2.0), (2, 1.0)]);
        let b = hro_upper_bound(&w, 2, &t, HroMode::HrE).unwrap();
        assert!((b.hit_probability - 0.8).abs() < 1e-12);
        let zero = hro_upper_bound(&w, 0, &t, HroMode::HrE).unwrap();
        assert_eq!(zero.hit_probability, 0.0);
    }

    #[test]
    fn hr_e_rejects_mixed_sizes() {
        let w = vec![Request::new(0.0, 1, 1), Request::new(1.0, 2, 2)];
        let t = constant_table(&[(1, 1.0), (2, 1.0)]);
        assert!(matches!(hro_upper_bound(&w, 2, &t, HroMode::HrE), Err(Error::UnequalSizes(..))));
    }

    #[test]
    fn missing_hazard_is_an_error() {
        let w = window(&[1, 2], 1);
        let t = constant_table(&[(1, 1.0)]);
        assert!(matches!(hro_upper_bound(&w, 1, &t, HroMode::HrE), Err(Error::MissingHazard(2))));
    }

    #[test]
    fn empty_marks_are_an_error() {
        assert!(bound_from_marks(&[], &[]).is_err());
    }

    #[test]
    fn ties_break_by_key() {
        let w = window(&[5, 3], 1);
        let t = constant_table(&[(5, 1.0), (3, 1.0)]);
        let marks = reconstruct_hro(&w, &SamplePlan::all(&w), &t, 1, HroMode::HrE, &Default::default()).unwrap();
        assert!(!marks[0].hro_hit);
        assert!(marks[1].hro_hit);
    }

    #[test]
    fn look_back_labels() {
        let w = window(&[1, 2, 1], 1);
        let marks = [
            HroMark { index: 0, hro_hit: false, hit_fraction: 0.0 },
            HroMark { index: 1, hro_hit: false, hit_fraction: 0.0 },
            HroMark { index: 2, hro_hit: true, hit_fraction: 1.0 },
        ];
        let labels = derive_labels(&w, &marks, true);
        assert_eq!(labels.iter().map(|l| l.cache_friendly).collect::<Vec<_>>(), [true, false, false]);

        let solo = window(&[1], 1);
        let l = derive_labels(&solo, &[HroMark { index: 0, hro_hit: true, hit_fraction: 1.0 }], true);
        assert!(!l[0].cache_friendly);
    }

    #[test]
    fn labels_without_look_back_pass_through() {
        let w = window(&[1, 2, 3], 1);
        let marks: Vec<HroMark> = [true, false, true]
            .iter()
            .enumerate()
            .map(|(i, h)| HroMark { index: i, hro_hit: *h, hit_fraction: if *h { 1.0 } else { 0.0 } })
            .collect();
        let labels = derive_labels(&w, &marks, false);
        assert_eq!(labels.iter().map(|l| l.cache_friendly).collect::<Vec<_>>(), [true, false, true]);
    }

    #[test]
    fn sampling_scales_capacity() {
        let w = vec![Request::new(0.0, 1, 10), Request::new(1.0, 2, 30)];
        assert_eq!(effective_capacity(&w, &[1, 2], 20), 20.0);
        assert_eq!(effective_capacity(&w, &[2], 20), 15.0);
    }

    #[test]
    fn label_json_shape() {
        let l = HroLabel { request_index: 3, key: 9, hro_hit: true, hit_fraction: 1.0, cache_friendly: false };
        let v = serde_json::to_value(l).unwrap();
        assert_eq!(v["index"], 3);
        assert_eq!(v["key"], 9);
    }
}
