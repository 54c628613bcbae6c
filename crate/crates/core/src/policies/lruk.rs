use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{CachePolicy, Outcome};
use crate::trace::Request;

#[derive(Debug, Clone)]
struct Entry {
    size: u64,
    /// Most recent reference sequence numbers, oldest first, at most `k`.
    history: VecDeque<u64>,
}

/// LRU-K: evicts the resident object whose k-th most recent reference is
/// oldest. Objects with fewer than k references go first, least recently
/// used first.
#[derive(Debug, Clone)]
pub struct LruK {
    capacity: u64,
    k: usize,
    used: u64,
    seq: u64,
    entries: HashMap<u64, Entry>,
    // (has k refs, k-th ref or 0, last ref, key)
    order: BTreeSet<(bool, u64, u64, u64)>,
}

impl LruK {
    pub fn new(capacity: u64, k: usize) -> Self {
        assert!(k >= 1, "k must be at least 1");
        LruK { capacity, k, used: 0, seq: 0, entries: HashMap::new(), order: BTreeSet::new() }
    }

    fn rank(&self, key: u64, e: &Entry) -> (bool, u64, u64, u64) {
        let last = *e.history.back().expect("history is never empty");
        if e.history.len() >= self.k {
            (true, e.history[e.history.len() - self.k], last, key)
        } else {
            (false, 0, last, key)
        }
    }
}

impl CachePolicy for LruK {
    fn name(&self) -> &'static str {
        "lruk"
    }

    fn capacity(&self) -> u64 {
        self.capacity
    }

    fn used_bytes(&self) -> u64 {
        self.used
    }

    fn contains(&self, key: u64) -> bool {
        self.entries.contains_key(&key)
    }

    fn on_request(&mut self, r: &Request) -> Outcome {
        self.seq += 1;
        if let Some(mut e) = self.entries.remove(&r.key) {
            self.order.remove(&self.rank(r.key, &e));
            if e.history.len() == self.k {
                e.history.pop_front();
            }
            e.history.push_back(self.seq);
            self.order.insert(self.rank(r.key, &e));
            self.entries.insert(r.key, e);
            return Outcome::Hit;
        }
        if r.size > self.capacity {
            return Outcome::Miss;
        }
        while self.used + r.size > self.capacity {
            let victim = self.order.pop_first().expect("cache is non-empty while over capacity");
            let e = self.entries.remove(&victim.3).expect("order and entries agree");
            self.used -= e.size;
        }
        let e = Entry { size: r.size, history: VecDeque::from([self.seq]) };
        self.order.insert(self.rank(r.key, &e));
        self.entries.insert(r.key, e);
        self.used += r.size;
        Outcome::Miss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::tests::{run, unit};
    use crate::policies::Lru;

    #[test]
    fn single_references_evict_oldest_insert() {
        let mut c = LruK::new(3, 4);
        run(&mut c, &unit(&[1, 2, 3, 4]));
        assert!(!c.contains(1));
        assert!(c.contains(2) && c.contains(3) && c.contains(4));
    }

    #[test]
    fn well_referenced_entry_survives() {
        let mut c = LruK::new(2, 4);
        // Key 1 gets four references, key 2 one (more recent), then 3 arrives.
        run(&mut c, &unit(&[1, 1, 1, 1, 2, 3]));
        assert!(c.contains(1));
        assert!(!c.contains(2));
    }

    #[test]
    fn k1_matches_lru() {
        let keys: Vec<u64> = (0..300u64).map(|i| (i * 7 + i / 5) % 9).collect();
        let reqs = unit(&keys);
        let mut a = LruK::new(4, 1);
        let mut b = Lru::new(4);
        assert_eq!(run(&mut a, &reqs), run(&mut b, &reqs));
    }
}
