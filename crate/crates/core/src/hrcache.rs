//! The learned two-queue policy.
//!
//! Objects predicted cache-averse live in a candidate queue that is always
//! evicted before the LRU-ordered main queue. Predictions come from a GBDT
//! classifier retrained at the end of every window on labels reconstructed
//! by hazard-rate ordering over that window.
//!
//! Until the first model is trained the policy is plain LRU.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, FeatureVector, ObjectState, DEFAULT_DECAY, N_FEATURES};
use crate::hazard::{BandwidthRule, HazardConfig, HazardMode};
use crate::model::{train, GbdtModel, GbdtParams, TrainingSet};
use crate::oracle::{label_window, HroLabel, LabeledWindow, LabelingConfig, ReconstructOptions};
use crate::policies::{CachePolicy, Outcome, PolicyCounters, RecencyQueue};
use crate::trace::Request;

pub const PREDICTION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    /// Window closes once its unique bytes reach `multiplier × capacity`.
    pub multiplier: f64,
    pub op_budget: u64,
    pub batch_size: usize,
    pub decay: f64,
    pub look_back: bool,
    pub hazard_mode: HazardMode,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            multiplier: 3.0,
            op_budget: 5_000_000,
            batch_size: 128,
            decay: DEFAULT_DECAY,
            look_back: true,
            hazard_mode: HazardMode::Kernel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HrCacheConfig {
    pub window: WindowConfig,
    pub gbdt: GbdtParams,
    pub bandwidth: BandwidthRule,
    pub reconstruct: ReconstructOptions,
    /// Windows with fewer labels keep the previous model.
    pub min_labels: usize,
    pub seed: u64,
}

impl Default for HrCacheConfig {
    fn default() -> Self {
        HrCacheConfig {
            window: WindowConfig::default(),
            gbdt: GbdtParams::default(),
            bandwidth: BandwidthRule::default(),
            reconstruct: ReconstructOptions::default(),
            min_labels: 200,
            seed: 0,
        }
    }
}

impl HrCacheConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window.multiplier > 0.0) {
            return Err(Error::InvalidConfig("window multiplier must be positive".into()));
        }
        if self.window.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(self.window.decay > 0.0 && self.window.decay < 1.0) {
            return Err(Error::InvalidConfig("decay must be in (0, 1)".into()));
        }
        self.gbdt.validate()
    }

    pub fn labeling(&self, window_index: u64) -> LabelingConfig {
        LabelingConfig {
            op_budget: self.window.op_budget,
            seed: self.seed ^ window_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            look_back: self.window.look_back,
            hazard: HazardConfig { mode: self.window.hazard_mode, bandwidth: self.bandwidth },
            mode: None,
            options: self.reconstruct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueId {
    Main,
    Candidate,
}

/// Main and candidate queues with the update rules of the policy.
#[derive(Debug, Clone)]
pub struct TwoQueueCache {
    capacity: u64,
    main: RecencyQueue,
    candidate: RecencyQueue,
}

impl TwoQueueCache {
    pub fn new(capacity: u64) -> Self {
        TwoQueueCache { capacity, main: RecencyQueue::new(), candidate: RecencyQueue::new() }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used_bytes(&self) -> u64 {
        self.main.bytes() + self.candidate.bytes()
    }

    pub fn locate(&self, key: u64) -> Option<QueueId> {
        if self.main.contains(key) {
            Some(QueueId::Main)
        } else if self.candidate.contains(key) {
            Some(QueueId::Candidate)
        } else {
            None
        }
    }

    pub fn main(&self) -> &RecencyQueue {
        &self.main
    }

    pub fn candidate(&self) -> &RecencyQueue {
        &self.candidate
    }

    /// Evicts from the candidate queue's LRU end, then the main queue's.
    fn make_room(&mut self, size: u64) {
        while self.used_bytes() + size > self.capacity {
            if self.candidate.pop_lru().is_none() && self.main.pop_lru().is_none() {
                break;
            }
        }
    }

    /// Applies one request. `friendly` is the classifier's decision; `None`
    /// means no model yet and the cache behaves as LRU on the main queue.
    pub fn apply(&mut self, r: &Request, friendly: Option<bool>) -> Outcome {
        match (self.locate(r.key), friendly) {
            (Some(QueueId::Main), None | Some(true)) => {
                self.main.touch(r.key);
                Outcome::Hit
            }
            (Some(QueueId::Main), Some(false)) => {
                let size = self.main.remove(r.key).expect("located in main");
                self.candidate.push_mru(r.key, size);
                Outcome::Hit
            }
            (Some(QueueId::Candidate), Some(true)) => {
                let size = self.candidate.remove(r.key).expect("located in candidate");
                self.main.push_mru(r.key, size);
                Outcome::Hit
            }
            (Some(QueueId::Candidate), None | Some(false)) => {
                self.candidate.touch(r.key);
                Outcome::Hit
            }
            (None, _) => {
                if r.size <= self.capacity {
                    self.make_room(r.size);
                    match friendly {
                        Some(false) => self.candidate.push_mru(r.key, r.size),
                        _ => self.main.push_mru(r.key, r.size),
                    }
                }
                Outcome::Miss
            }
        }
    }
}

/// What happened when a window closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    /// Trace position just after the closing request.
    pub closed_at: u64,
    pub requests: usize,
    pub sampled_keys: usize,
    pub labels: usize,
    pub positive_labels: usize,
    pub trained: bool,
}

#[derive(Debug, Default)]
struct WindowAccumulator {
    requests: Vec<Request>,
    first_seq: u64,
    sizes: HashMap<u64, u64>,
    unique_bytes: u64,
    /// Each key's feature state just before its first request in the window.
    start_states: HashMap<u64, Option<ObjectState>>,
}

impl WindowAccumulator {
    fn push(&mut self, r: &Request, seq: u64) {
        if self.requests.is_empty() {
            self.first_seq = seq;
        }
        self.requests.push(*r);
        if self.sizes.insert(r.key, r.size).is_none() {
            self.unique_bytes += r.size;
        }
    }
}

/// Rebuilds features for the labeled requests of a window by replaying it
/// from each key's pre-window state, using the same rule as serving: each
/// request's features come from strictly earlier history.
pub fn training_rows(
    window: &[Request],
    first_seq: u64,
    labels: &[HroLabel],
    start_state: impl Fn(u64) -> Option<ObjectState>,
    decay: f64,
) -> Vec<(FeatureVector, bool)> {
    let by_index: HashMap<usize, bool> = labels.iter().map(|l| (l.request_index, l.cache_friendly)).collect();
    let keys: HashSet<u64> = labels.iter().map(|l| l.key).collect();
    let mut replay = FeatureTable::new(decay);
    for &k in &keys {
        if let Some(s) = start_state(k) {
            replay.insert_state(s);
        }
    }
    let mut rows = Vec::with_capacity(labels.len());
    for (i, r) in window.iter().enumerate() {
        if !keys.contains(&r.key) {
            continue;
        }
        let seq = first_seq + i as u64;
        if let Some(&label) = by_index.get(&i) {
            rows.push((replay.features(r, seq), label));
        }
        replay.touch(r, seq);
    }
    rows
}

pub fn training_set(rows: &[(FeatureVector, bool)]) -> TrainingSet {
    let mut set = TrainingSet::new(N_FEATURES);
    for (fv, label) in rows {
        set.push(&fv.to_row(), *label);
    }
    set
}

/// A window that has just closed, with what is needed to label it.
#[derive(Debug, Clone)]
pub struct ClosedWindow {
    pub requests: Vec<Request>,
    /// Trace position of the window's first request.
    pub first_seq: u64,
    start_states: HashMap<u64, Option<ObjectState>>,
}

impl ClosedWindow {
    /// Labels the window and rebuilds the features of every labeled request.
    /// Rows come back in trace order alongside their labels.
    pub fn label(
        &self,
        capacity: u64,
        labeling: &LabelingConfig,
        decay: f64,
    ) -> Result<(LabeledWindow, Vec<(FeatureVector, bool)>)> {
        let mut labeled = label_window(&self.requests, capacity, labeling)?;
        labeled.labels.sort_by_key(|l| l.request_index);
        let rows = training_rows(
            &self.requests,
            self.first_seq,
            &labeled.labels,
            |k| self.start_states.get(&k).cloned().flatten(),
            decay,
        );
        Ok((labeled, rows))
    }
}

/// Serving-side feature state plus window segmentation.
#[derive(Debug)]
pub struct WindowTracker {
    capacity: u64,
    multiplier: f64,
    features: FeatureTable,
    window: WindowAccumulator,
    seq: u64,
}

impl WindowTracker {
    pub fn new(capacity: u64, multiplier: f64, decay: f64) -> Self {
        WindowTracker { capacity, multiplier, features: FeatureTable::new(decay), window: Default::default(), seq: 0 }
    }

    /// Requests observed so far.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn features(&self) -> &FeatureTable {
        &self.features
    }

    /// Records a request. Returns the window it closed, if any. Objects idle
    /// for the whole closed window are dropped from the feature table.
    pub fn observe(&mut self, r: &Request) -> Option<ClosedWindow> {
        if !self.window.start_states.contains_key(&r.key) {
            let state = self.features.get(r.key).cloned();
            self.window.start_states.insert(r.key, state);
        }
        self.features.touch(r, self.seq);
        self.window.push(r, self.seq);
        self.seq += 1;
        if (self.window.unique_bytes as f64) < self.multiplier * self.capacity as f64 {
            return None;
        }
        Some(self.take_window())
    }

    /// Closes the current window early; `None` if it is empty.
    pub fn flush(&mut self) -> Option<ClosedWindow> {
        (!self.window.requests.is_empty()).then(|| self.take_window())
    }

    fn take_window(&mut self) -> ClosedWindow {
        let w = std::mem::take(&mut self.window);
        self.features.prune_idle(w.requests[0].time);
        ClosedWindow { requests: w.requests, first_seq: w.first_seq, start_states: w.start_states }
    }
}

/// One labeled request with the features the policy would have seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DumpedLabel {
    /// Position in the whole trace.
    pub index: usize,
    pub label: HroLabel,
    pub features: FeatureVector,
}

/// Labels a trace window by window exactly as the policy would during
/// training. The trailing partial window is labeled too.
pub fn label_trace(requests: &[Request], capacity: u64, config: &HrCacheConfig) -> Result<Vec<DumpedLabel>> {
    config.validate()?;
    let mut tracker = WindowTracker::new(capacity, config.window.multiplier, config.window.decay);
    let mut closed = Vec::new();
    for r in requests {
        closed.extend(tracker.observe(r));
    }
    closed.extend(tracker.flush());

    let mut out = Vec::new();
    for (k, w) in closed.iter().enumerate() {
        let (labeled, rows) = match w.label(capacity, &config.labeling(k as u64), config.window.decay) {
            Ok(x) => x,
            Err(Error::InsufficientData(_)) => continue,
            Err(e) => return Err(e),
        };
        for (label, (features, _)) in labeled.labels.into_iter().zip(rows) {
            out.push(DumpedLabel { index: w.first_seq as usize + label.request_index, label, features });
        }
    }
    Ok(out)
}

/// The full learned policy.
#[derive(Debug)]
pub struct HrCache {
    config: HrCacheConfig,
    cache: TwoQueueCache,
    tracker: WindowTracker,
    model: Option<Arc<GbdtModel>>,
    training_enabled: bool,
    measure_from: u64,
    counters: PolicyCounters,
    windows: Vec<WindowSummary>,
}

impl HrCache {
    pub fn new(capacity: u64, config: HrCacheConfig) -> Result<Self> {
        config.validate()?;
        Ok(HrCache {
            config,
            cache: TwoQueueCache::new(capacity),
            tracker: WindowTracker::new(capacity, config.window.multiplier, config.window.decay),
            model: None,
            training_enabled: true,
            measure_from: 0,
            counters: PolicyCounters::default(),
            windows: Vec::new(),
        })
    }

    /// A policy that uses `model` from the first request and never retrains.
    pub fn with_fixed_model(capacity: u64, config: HrCacheConfig, model: GbdtModel) -> Result<Self> {
        let mut c = Self::new(capacity, config)?;
        c.model = Some(Arc::new(model));
        c.training_enabled = false;
        Ok(c)
    }

    pub fn config(&self) -> &HrCacheConfig {
        &self.config
    }

    pub fn is_warmup(&self) -> bool {
        self.model.is_none()
    }

    pub fn model(&self) -> Option<&GbdtModel> {
        self.model.as_deref()
    }

    pub fn queues(&self) -> &TwoQueueCache {
        &self.cache
    }

    pub fn window_log(&self) -> &[WindowSummary] {
        &self.windows
    }

    fn predict_batch(&mut self, batch: &[Request]) -> Option<Vec<bool>> {
        let model = Arc::clone(self.model.as_ref()?);
        let seq = self.tracker.seq();
        let table = self.tracker.features();
        let rows: Vec<[f64; N_FEATURES]> =
            batch.iter().enumerate().map(|(j, r)| table.features(r, seq + j as u64).to_row()).collect();
        let probs = model.predict_batch(&rows);

        let measured = (0..batch.len() as u64).filter(|j| seq + j >= self.measure_from).count() as u64;
        self.counters.features_built += measured;
        self.counters.predictions_made += measured;
        if measured > 0 {
            self.counters.prediction_calls += 1;
        }
        Some(probs.into_iter().map(|p| p > PREDICTION_THRESHOLD).collect())
    }

    fn close_window(&mut self, window: ClosedWindow) {
        let mut summary = WindowSummary {
            closed_at: self.tracker.seq(),
            requests: window.requests.len(),
            sampled_keys: 0,
            labels: 0,
            positive_labels: 0,
            trained: false,
        };
        if self.training_enabled {
            let labeling = self.config.labeling(self.windows.len() as u64);
            // Too little data to estimate hazards simply skips this window.
            if let Ok((labeled, rows)) = window.label(self.cache.capacity(), &labeling, self.config.window.decay) {
                summary.sampled_keys = labeled.plan.sampled_keys.len();
                summary.labels = rows.len();
                summary.positive_labels = rows.iter().filter(|r| r.1).count();
                if rows.len() >= self.config.min_labels {
                    if let Ok(model) = train(&training_set(&rows), &self.config.gbdt) {
                        self.model = Some(Arc::new(model));
                        self.counters.models_trained += 1;
                        summary.trained = true;
                    }
                }
            }
        }
        self.windows.push(summary);
    }

    fn run_batch(&mut self, batch: &[Request], outcomes: &mut Vec<Outcome>) {
        let predictions = self.predict_batch(batch);
        for (j, r) in batch.iter().enumerate() {
            let friendly = predictions.as_ref().map(|p| p[j]);
            outcomes.push(self.cache.apply(r, friendly));
            if let Some(w) = self.tracker.observe(r) {
                self.close_window(w);
            }
        }
    }
}

impl CachePolicy for HrCache {
    fn name(&self) -> &'static str {
        "hrcache"
    }

    fn capacity(&self) -> u64 {
        self.cache.capacity()
    }

    fn used_bytes(&self) -> u64 {
        self.cache.used_bytes()
    }

    fn contains(&self, key: u64) -> bool {
        self.cache.locate(key).is_some()
    }

    fn on_request(&mut self, request: &Request) -> Outcome {
        let mut out = Vec::with_capacity(1);
        self.run_batch(std::slice::from_ref(request), &mut out);
        out[0]
    }

    /// Splits the stream into batches aligned to multiples of the batch size
    /// in trace position. Features for a batch are built before any of its
    /// requests is applied.
    fn replay(&mut self, requests: &[Request], outcomes: &mut Vec<Outcome>) {
        let b = self.config.window.batch_size as u64;
        let mut i = 0;
        while i < requests.len() {
            let len = ((b - self.tracker.seq() % b) as usize).min(requests.len() - i);
            self.run_batch(&requests[i..i + len], outcomes);
            i += len;
        }
    }

    fn measure_from(&mut self, index: usize) {
        self.measure_from = index as u64;
    }

    fn counters(&self) -> PolicyCounters {
        self.counters
    }
}

/// Position just after the request that closes the first window, if any.
pub fn first_window_boundary(requests: &[Request], capacity: u64, multiplier: f64) -> Option<usize> {
    let mut seen = HashSet::new();
    let mut unique = 0u64;
    for (i, r) in requests.iter().enumerate() {
        if seen.insert(r.key) {
            unique += r.size;
        }
        if unique as f64 >= multiplier * capacity as f64 {
            return Some(i + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::Lru;

    fn unit(keys: &[u64]) -> Vec<Request> {
        keys.iter().enumerate().map(|(i, k)| Request::new(i as f64, *k, 1)).collect()
    }

    #[test]
    fn averse_miss_goes_to_candidate() {
        let mut c = TwoQueueCache::new(4);
        c.apply(&Request::new(0.0, 1, 1), Some(false));
        assert_eq!(c.locate(1), Some(QueueId::Candidate));
        c.apply(&Request::new(1.0, 2, 1), Some(true));
        assert_eq!(c.locate(2), Some(QueueId::Main));
    }

    #[test]
    fn friendly_hit_promotes_candidate() {
        let mut c = TwoQueueCache::new(4);
        c.apply(&Request::new(0.0, 1, 1), Some(false));
        assert_eq!(c.apply(&Request::new(1.0, 1, 1), Some(true)), Outcome::Hit);
        assert_eq!(c.locate(1), Some(QueueId::Main));
    }

    #[test]
    fn averse_hit_demotes_main() {
        let mut c = TwoQueueCache::new(4);
        c.apply(&Request::new(0.0, 1, 1), Some(true));
        c.apply(&Request::new(1.0, 1, 1), Some(false));
        assert_eq!(c.locate(1), Some(QueueId::Candidate));
        c.apply(&Request::new(2.0, 1, 1), Some(false));
        assert_eq!(c.locate(1), Some(QueueId::Candidate));
    }

    #[test]
    fn candidate_is_evicted_first() {
        let mut c = TwoQueueCache::new(3);
        c.apply(&Request::new(0.0, 1, 1), Some(true));
        c.apply(&Request::new(1.0, 2, 1), Some(false));
        c.apply(&Request::new(2.0, 3, 1), Some(true));
        c.apply(&Request::new(3.0, 4, 1), Some(true));
        assert_eq!(c.locate(2), None);
        assert_eq!(c.locate(1), Some(QueueId::Main));
        c.apply(&Request::new(4.0, 5, 1), Some(true));
        assert_eq!(c.locate(1), None);
    }

    #[test]
    fn oversized_objects_are_not_admitted() {
        let mut c = TwoQueueCache::new(3);
        c.apply(&Request::new(0.0, 1, 2), Some(true));
        assert_eq!(c.apply(&Request::new(1.0, 2, 4), Some(false)), Outcome::Miss);
        assert_eq!(c.locate(1), Some(QueueId::Main));
        assert_eq!(c.used_bytes(), 2);
    }

    #[test]
    fn window_closes_at_three_times_capacity() {
        let reqs: Vec<Request> = (0..10).map(|i| Request::new(i as f64, i, 50)).collect();
        assert_eq!(first_window_boundary(&reqs, 100, 3.0), Some(6));
        let mut hr = HrCache::new(100, HrCacheConfig::default()).unwrap();
        let mut out = Vec::new();
        hr.replay(&reqs[..5], &mut out);
        assert!(hr.window_log().is_empty());
        hr.replay(&reqs[5..6], &mut out);
        assert_eq!(hr.window_log().len(), 1);
        assert_eq!(hr.window_log()[0].closed_at, 6);
    }

    #[test]
    fn warmup_matches_lru() {
        let keys: Vec<u64> = (0..400u64).map(|i| (i * 7 + i / 50) % 37).collect();
        let reqs = unit(&keys);
        let mut hr = HrCache::new(8, HrCacheConfig::default()).unwrap();
        let mut lru = Lru::new(8);
        let boundary = first_window_boundary(&reqs, 8, 3.0).unwrap();
        let mut out = Vec::new();
        hr.replay(&reqs, &mut out);
        for (i, r) in reqs[..boundary].iter().enumerate() {
            assert_eq!(out[i], lru.on_request(r), "request {i}");
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = HrCacheConfig::default();
        cfg.window.batch_size = 0;
        assert!(HrCache::new(10, cfg).is_err());
        let mut cfg = HrCacheConfig::default();
        cfg.window.multiplier = 0.0;
        assert!(HrCache::new(10, cfg).is_err());
    }

    #[test]
    fn label_trace_indexes_whole_trace() {
        let keys: Vec<u64> = (0..600u64).map(|i| if i % 3 == 0 { i % 4 } else { 4 + i % 40 }).collect();
        let reqs = unit(&keys);
        let cfg = HrCacheConfig::default();
        let dumped = label_trace(&reqs, 5, &cfg).unwrap();
        assert!(!dumped.is_empty());
        assert!(dumped.windows(2).all(|w| w[0].index < w[1].index));
        for d in &dumped {
            assert_eq!(reqs[d.index].key, d.label.key);
            assert_eq!(d.features.size, 1.0);
        }
    }

    #[test]
    fn replay_rows_use_prior_history_only() {
        let w = vec![Request::new(10.0, 1, 5), Request::new(17.0, 1, 5), Request::new(30.0, 1, 5)];
        let labels: Vec<HroLabel> = (0..3)
            .map(|i| HroLabel { request_index: i, key: 1, hro_hit: true, hit_fraction: 1.0, cache_friendly: i < 2 })
            .collect();
        let rows = training_rows(&w, 0, &labels, |_| None, 0.9);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].0, FeatureVector::unseen(5));
        assert_eq!(rows[2].0.deltas[..2], [13.0, 7.0]);
        assert_eq!(rows.iter().map(|r| r.1).collect::<Vec<_>>(), [true, true, false]);
    }
}
