//! Online per-object history and classifier feature vectors.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::trace::Request;

pub const N_DELTAS: usize = 32;
pub const N_FEATURES: usize = N_DELTAS + 2;
/// Value of a delta with no history behind it.
pub const MISSING_DELTA: f64 = 2_147_483_647.0;
pub const DEFAULT_DECAY: f64 = 0.9;

const HISTORY: usize = N_DELTAS + 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub key: u64,
    /// Up to 33 most recent request times, oldest first.
    pub last_times: VecDeque<f64>,
    pub decayed_count: f64,
    pub last_update_seq: u64,
    pub size: u64,
}

impl ObjectState {
    fn new(key: u64, size: u64) -> Self {
        ObjectState { key, last_times: VecDeque::with_capacity(HISTORY), decayed_count: 0.0, last_update_seq: 0, size }
    }

    fn decayed_at(&self, seq: u64, decay: f64) -> f64 {
        if self.decayed_count == 0.0 {
            return 0.0;
        }
        self.decayed_count * decay.powf(seq.saturating_sub(self.last_update_seq) as f64)
    }

    /// Records a request at `time` with global sequence number `seq`.
    pub fn touch(&mut self, time: f64, seq: u64, decay: f64) {
        self.decayed_count = self.decayed_at(seq, decay) + 1.0;
        self.last_update_seq = seq;
        if self.last_times.len() == HISTORY {
            self.last_times.pop_front();
        }
        self.last_times.push_back(time);
    }

    pub fn last_time(&self) -> Option<f64> {
        self.last_times.back().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub deltas: [f64; N_DELTAS],
    pub decayed_frequency: f64,
    pub size: f64,
}

impl FeatureVector {
    pub fn unseen(size: u64) -> Self {
        FeatureVector { deltas: [MISSING_DELTA; N_DELTAS], decayed_frequency: 0.0, size: size as f64 }
    }

    /// `[d1..d32, decayed_freq, size]`.
    pub fn to_row(&self) -> [f64; N_FEATURES] {
        let mut row = [0.0; N_FEATURES];
        row[..N_DELTAS].copy_from_slice(&self.deltas);
        row[N_DELTAS] = self.decayed_frequency;
        row[N_DELTAS + 1] = self.size;
        row
    }
}

/// Features of a request at `now` (sequence `seq`) from the history strictly
/// before it. Pure read.
pub fn build_features(state: Option<&ObjectState>, size: u64, now: f64, seq: u64, decay: f64) -> FeatureVector {
    let Some(state) = state else { return FeatureVector::unseen(size) };
    let mut deltas = [MISSING_DELTA; N_DELTAS];
    let mut newer = now;
    for (slot, t) in deltas.iter_mut().zip(state.last_times.iter().rev()) {
        *slot = newer - t;
        newer = *t;
    }
    FeatureVector { deltas, decayed_frequency: state.decayed_at(seq, decay), size: state.size as f64 }
}

/// All tracked objects, updated in request order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    decay: f64,
    states: HashMap<u64, ObjectState>,
}

impl Default for FeatureTable {
    fn default() -> Self {
        FeatureTable::new(DEFAULT_DECAY)
    }
}

impl FeatureTable {
    pub fn new(decay: f64) -> Self {
        FeatureTable { decay, states: HashMap::new() }
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn get(&self, key: u64) -> Option<&ObjectState> {
        self.states.get(&key)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn features(&self, request: &Request, seq: u64) -> FeatureVector {
        build_features(self.states.get(&request.key), request.size, request.time, seq, self.decay)
    }

    pub fn touch(&mut self, request: &Request, seq: u64) -> &ObjectState {
        let decay = self.decay;
        let state = self.states.entry(request.key).or_insert_with(|| ObjectState::new(request.key, request.size));
        state.touch(request.time, seq, decay);
        state
    }

    pub fn insert_state(&mut self, state: ObjectState) {
        self.states.insert(state.key, state);
    }

    /// Drops objects whose last request is older than `cutoff`.
    pub fn prune_idle(&mut self, cutoff: f64) {
        self.states.retain(|_, s| s.last_time().is_some_and(|t| t >= cutoff));
    }
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = (1..=N_DELTAS).map(|i| format!("d{i}")).collect();
    h.push("decayed_freq".into());
    h.push("size".into());
    h.push("label".into());
    h
}

/// Writes `d1..d32,decayed_freq,size,label` rows.
pub fn write_training_csv<W: Write>(rows: &[(FeatureVector, bool)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header())?;
    for (fv, label) in rows {
        let mut rec: Vec<String> = fv.to_row().iter().map(|v| v.to_string()).collect();
        rec.push(if *label { "1".into() } else { "0".into() });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
