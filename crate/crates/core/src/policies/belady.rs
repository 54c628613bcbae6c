use std::collections::{BTreeSet, HashMap};

use super::{CachePolicy, Outcome};
use crate::error::{Error, Result};
use crate::trace::Request;

/// Next-use index of a request whose key is never requested again.
pub const NEVER: usize = usize::MAX;

/// For each request, the index of the next request to the same key.
pub fn next_use_table(requests: &[Request]) -> Vec<usize> {
    let mut next = vec![NEVER; requests.len()];
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for (i, r) in requests.iter().enumerate().rev() {
        if let Some(j) = seen.insert(r.key, i) {
            next[i] = j;
        }
    }
    next
}

/// Offline furthest-in-future replacement. On a miss the incoming object
/// competes with the residents: whichever is needed furthest in the future
/// leaves first, and if that is the incoming object it is not admitted.
#[derive(Debug, Clone)]
pub struct Belady {
    capacity: u64,
    used: u64,
    cursor: usize,
    future: Vec<usize>,
    entries: HashMap<u64, (u64, usize)>,
    // (next use, key)
    order: BTreeSet<(usize, u64)>,
}

impl Belady {
    pub fn for_trace(capacity: u64, requests: &[Request]) -> Self {
        Self::with_future(capacity, next_use_table(requests), requests.len()).expect("table built from the trace")
    }

    pub fn with_future(capacity: u64, future: Vec<usize>, trace_len: usize) -> Result<Self> {
        if future.len() != trace_len {
            return Err(Error::FutureLengthMismatch { table: future.len(), trace: trace_len });
        }
        Ok(Belady { capacity, used: 0, cursor: 0, future, entries: HashMap::new(), order: BTreeSet::new() })
    }
}

impl CachePolicy for Belady {
    fn name(&self) -> &'static str {
        "belady"
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
        let next = self.future.get(self.cursor).copied().unwrap_or(NEVER);
        self.cursor += 1;

        if let Some(entry) = self.entries.get_mut(&r.key) {
            self.order.remove(&(entry.1, r.key));
            entry.1 = next;
            self.order.insert((next, r.key));
            return Outcome::Hit;
        }
        if r.size > self.capacity {
            return Outcome::Miss;
        }
        while self.used + r.size > self.capacity {
            let &(victim_next, victim) = self.order.last().expect("cache is non-empty while over capacity");
            if next >= victim_next {
                return Outcome::Miss;
            }
            self.order.pop_last();
            let (size, _) = self.entries.remove(&victim).expect("order and entries agree");
            self.used -= size;
        }
        self.entries.insert(r.key, (r.size, next));
        self.order.insert((next, r.key));
        self.used += r.size;
        Outcome::Miss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::tests::{run, unit};

    #[test]
    fn next_use() {
        assert_eq!(next_use_table(&unit(&[1, 2, 1, 1])), [2, NEVER, 3, NEVER]);
    }

    #[test]
    fn bypasses_when_incoming_is_needed_later() {
        let reqs = unit(&[0, 1, 0, 1]);
        let mut b = Belady::for_trace(1, &reqs);
        assert_eq!(run(&mut b, &reqs), [false, false, true, false]);
    }

    #[test]
    fn maximal_hits_with_room() {
        let reqs = unit(&[1, 2, 3, 1, 2, 3]);
        let mut b = Belady::for_trace(3, &reqs);
        assert_eq!(run(&mut b, &reqs).iter().filter(|h| **h).count(), 3);
    }

    #[test]
    fn future_length_mismatch() {
        assert!(matches!(
            Belady::with_future(1, vec![NEVER; 2], 3),
            Err(Error::FutureLengthMismatch { table: 2, trace: 3 })
        ));
    }
}
