use super::{CachePolicy, Outcome, RecencyQueue};
use crate::trace::Request;

#[derive(Debug, Clone)]
pub struct Lru {
    capacity: u64,
    queue: RecencyQueue,
}

impl Lru {
    pub fn new(capacity: u64) -> Self {
        Lru { capacity, queue: RecencyQueue::new() }
    }

    /// Resident keys, least recently used first.
    pub fn keys_lru_first(&self) -> Vec<u64> {
        self.queue.keys_lru_first().collect()
    }
}

impl CachePolicy for Lru {
    fn name(&self) -> &'static str {
        "lru"
    }

    fn capacity(&self) -> u64 {
        self.capacity
    }

    fn used_bytes(&self) -> u64 {
        self.queue.bytes()
    }

    fn contains(&self, key: u64) -> bool {
        self.queue.contains(key)
    }

    fn on_request(&mut self, r: &Request) -> Outcome {
        if self.queue.touch(r.key) {
            return Outcome::Hit;
        }
        if r.size > self.capacity {
            return Outcome::Miss;
        }
        while self.queue.bytes() + r.size > self.capacity {
            self.queue.pop_lru();
        }
        self.queue.push_mru(r.key, r.size);
        Outcome::Miss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::tests::{run, unit};

    #[test]
    fn hand_trace() {
        // A B A C B with two slots.
        let mut lru = Lru::new(2);
        assert_eq!(run(&mut lru, &unit(&[0, 1, 0, 2, 1])), [false, false, true, false, false]);
        assert_eq!(lru.keys_lru_first(), [2, 1]);
    }

    #[test]
    fn large_working_capacity_hits_every_rereference() {
        let reqs = unit(&[1, 2, 3, 1, 2, 3, 3, 1]);
        let mut lru = Lru::new(10);
        assert_eq!(run(&mut lru, &reqs), [false, false, false, true, true, true, true, true]);
    }

    #[test]
    fn oversized_object_is_not_admitted() {
        let mut lru = Lru::new(10);
        lru.on_request(&Request::new(0.0, 1, 5));
        assert_eq!(lru.on_request(&Request::new(1.0, 2, 11)), Outcome::Miss);
        assert!(lru.contains(1));
        assert!(!lru.contains(2));
        assert_eq!(lru.used_bytes(), 5);
    }
}
