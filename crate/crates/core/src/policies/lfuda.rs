use std::collections::{BTreeSet, HashMap};

use super::{CachePolicy, Outcome};
use crate::trace::Request;

#[derive(Debug, Clone, Copy)]
struct Entry {
    size: u64,
    frequency: u64,
    priority: u64,
    inserted: u64,
}

/// LFU with dynamic aging: priority is `frequency + L`, and evicting an
/// object raises the cache age `L` to that object's priority.
#[derive(Debug, Clone)]
pub struct Lfuda {
    capacity: u64,
    used: u64,
    age: u64,
    seq: u64,
    entries: HashMap<u64, Entry>,
    // (priority, insertion seq, key)
    order: BTreeSet<(u64, u64, u64)>,
}

impl Lfuda {
    pub fn new(capacity: u64) -> Self {
        Lfuda { capacity, used: 0, age: 0, seq: 0, entries: HashMap::new(), order: BTreeSet::new() }
    }

    pub fn age(&self) -> u64 {
        self.age
    }

    pub fn frequency(&self, key: u64) -> Option<u64> {
        self.entries.get(&key).map(|e| e.frequency)
    }
}

impl CachePolicy for Lfuda {
    fn name(&self) -> &'static str {
        "lfuda"
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
        if let Some(e) = self.entries.get_mut(&r.key) {
            self.order.remove(&(e.priority, e.inserted, r.key));
            e.frequency += 1;
            e.priority = e.frequency + self.age;
            self.order.insert((e.priority, e.inserted, r.key));
            return Outcome::Hit;
        }
        if r.size > self.capacity {
            return Outcome::Miss;
        }
        while self.used + r.size > self.capacity {
            let (priority, _, key) = self.order.pop_first().expect("cache is non-empty while over capacity");
            let e = self.entries.remove(&key).expect("order and entries agree");
            self.used -= e.size;
            self.age = priority;
        }
        let e = Entry { size: r.size, frequency: 1, priority: 1 + self.age, inserted: self.seq };
        self.order.insert((e.priority, e.inserted, r.key));
        self.entries.insert(r.key, e);
        self.used += r.size;
        Outcome::Miss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::tests::unit;

    #[test]
    fn equal_frequencies_evict_in_insertion_order() {
        let mut c = Lfuda::new(2);
        for r in unit(&[1, 2, 3]) {
            c.on_request(&r);
        }
        assert!(!c.contains(1));
        assert!(c.contains(2) && c.contains(3));
    }

    #[test]
    fn hot_object_survives_scan() {
        let mut c = Lfuda::new(10);
        let mut keys = vec![0u64; 100];
        keys.extend(1..=500);
        let mut last_age = 0;
        for r in unit(&keys) {
            c.on_request(&r);
            assert!(c.age() >= last_age);
            last_age = c.age();
        }
        assert!(c.contains(0));
        assert_eq!(c.frequency(0), Some(100));
    }
}
