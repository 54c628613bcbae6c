//! Baseline replacement policies behind one interface.
//!
//! Every policy keeps `used_bytes() <= capacity()` after each request and
//! never admits an object larger than the whole cache.

mod belady;
mod lfuda;
mod lru;
mod lruk;
mod queue;
mod s4lru;

pub use belady::{next_use_table, Belady, NEVER};
pub use lfuda::Lfuda;
pub use lru::Lru;
pub use lruk::LruK;
pub use queue::RecencyQueue;
pub use s4lru::S4Lru;

use serde::{Deserialize, Serialize};

use crate::trace::Request;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Hit,
    Miss,
}

impl Outcome {
    pub fn is_hit(self) -> bool {
        self == Outcome::Hit
    }

    pub fn from_hit(hit: bool) -> Self {
        if hit {
            Outcome::Hit
        } else {
            Outcome::Miss
        }
    }
}

/// Learning-policy work counters. Baselines report zeros.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyCounters {
    /// Per-request predictions.
    pub predictions_made: u64,
    /// Calls into the model (one per batch).
    pub prediction_calls: u64,
    pub features_built: u64,
    pub models_trained: u64,
}

pub trait CachePolicy: Send {
    fn name(&self) -> &'static str;

    fn capacity(&self) -> u64;

    fn used_bytes(&self) -> u64;

    fn contains(&self, key: u64) -> bool;

    fn on_request(&mut self, request: &Request) -> Outcome;

    /// Replays consecutive requests. Policies that batch work override this.
    fn replay(&mut self, requests: &[Request], outcomes: &mut Vec<Outcome>) {
        outcomes.extend(requests.iter().map(|r| self.on_request(r)));
    }

    /// Only count work for requests at or after this trace position.
    fn measure_from(&mut self, _index: usize) {}

    fn counters(&self) -> PolicyCounters {
        PolicyCounters::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit(keys: &[u64]) -> Vec<Request> {
        keys.iter().enumerate().map(|(i, k)| Request::new(i as f64, *k, 1)).collect()
    }

    pub(crate) fn run(policy: &mut dyn CachePolicy, reqs: &[Request]) -> Vec<bool> {
        reqs.iter().map(|r| policy.on_request(r).is_hit()).collect()
    }

    #[test]
    fn outcome_helpers() {
        assert!(Outcome::from_hit(true).is_hit());
        assert!(!Outcome::Miss.is_hit());
    }
}
