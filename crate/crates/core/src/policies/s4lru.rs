use std::collections::HashMap;

use super::{CachePolicy, Outcome, RecencyQueue};
use crate::trace::Request;

const SEGMENTS: usize = 4;

/// Segmented LRU with four equal-byte segments. Misses enter segment 0, hits
/// promote one segment up, and overflow cascades down until segment 0 evicts.
#[derive(Debug, Clone)]
pub struct S4Lru {
    capacity: u64,
    limits: [u64; SEGMENTS],
    segments: [RecencyQueue; SEGMENTS],
    location: HashMap<u64, usize>,
}

impl S4Lru {
    pub fn new(capacity: u64) -> Self {
        let cut = |i: u64| capacity * i / SEGMENTS as u64;
        let limits = std::array::from_fn(|i| cut(i as u64 + 1) - cut(i as u64));
        S4Lru { capacity, limits, segments: Default::default(), location: HashMap::new() }
    }

    /// Segment index (0 = probationary, 3 = most protected) of a resident key.
    pub fn segment_of(&self, key: u64) -> Option<usize> {
        self.location.get(&key).copied()
    }

    pub fn segment_bytes(&self, segment: usize) -> u64 {
        self.segments[segment].bytes()
    }

    fn settle(&mut self, from: usize) {
        for level in (0..=from).rev() {
            while self.segments[level].bytes() > self.limits[level] {
                let (key, size) = self.segments[level].pop_lru().expect("over-limit segment is non-empty");
                if level == 0 {
                    self.location.remove(&key);
                } else {
                    self.segments[level - 1].push_mru(key, size);
                    self.location.insert(key, level - 1);
                }
            }
        }
    }
}

impl CachePolicy for S4Lru {
    fn name(&self) -> &'static str {
        "s4lru"
    }

    fn capacity(&self) -> u64 {
        self.capacity
    }

    fn used_bytes(&self) -> u64 {
        self.segments.iter().map(RecencyQueue::bytes).sum()
    }

    fn contains(&self, key: u64) -> bool {
        self.location.contains_key(&key)
    }

    fn on_request(&mut self, r: &Request) -> Outcome {
        if let Some(level) = self.segment_of(r.key) {
            let target = (level + 1).min(SEGMENTS - 1);
            if target == level {
                self.segments[level].touch(r.key);
            } else {
                let size = self.segments[level].remove(r.key).expect("location is accurate");
                self.segments[target].push_mru(r.key, size);
                self.location.insert(r.key, target);
                self.settle(target);
            }
            return Outcome::Hit;
        }
        // An object must fit in a single segment to be admitted.
        if r.size > *self.limits.iter().min().expect("four segments") {
            return Outcome::Miss;
        }
        self.segments[0].push_mru(r.key, r.size);
        self.location.insert(r.key, 0);
        self.settle(0);
        Outcome::Miss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::tests::unit;

    #[test]
    fn hits_promote_to_top_segment() {
        let mut c = S4Lru::new(40);
        for (i, expected) in [(0, 0), (1, 1), (2, 2), (3, 3), (4, 3)] {
            c.on_request(&Request::new(i as f64, 7, 1));
            assert_eq!(c.segment_of(7), Some(expected));
        }
    }

    #[test]
    fn one_hit_objects_stay_probationary() {
        let mut c = S4Lru::new(8);
        for r in unit(&[1, 2, 3, 4, 5, 6]) {
            c.on_request(&r);
            for k in 1..=6 {
                assert!(c.segment_of(k).is_none_or(|s| s == 0));
            }
        }
        assert_eq!(c.segment_bytes(0), 2);
    }

    #[test]
    fn overflow_demotes_instead_of_evicting() {
        let mut c = S4Lru::new(4);
        // Two objects promoted into segment 1 (limit 1) force a demotion.
        for r in unit(&[1, 1, 2, 2]) {
            c.on_request(&r);
        }
        assert_eq!(c.segment_of(2), Some(1));
        assert_eq!(c.segment_of(1), Some(0));
        assert!(c.used_bytes() <= 4);
    }

    #[test]
    fn objects_larger_than_a_segment_bypass() {
        let mut c = S4Lru::new(40);
        assert_eq!(c.on_request(&Request::new(0.0, 1, 11)), Outcome::Miss);
        assert!(!c.contains(1));
        assert_eq!(c.on_request(&Request::new(1.0, 2, 10)), Outcome::Miss);
        assert!(c.contains(2));
    }
}
