use std::collections::{BTreeMap, HashMap};

/// Byte-accounted recency list: O(log n) touch, insert and LRU pop.
#[derive(Debug, Clone, Default)]
pub struct RecencyQueue {
    order: BTreeMap<u64, u64>,
    entries: HashMap<u64, (u64, u64)>,
    bytes: u64,
    tick: u64,
}

impl RecencyQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: u64) -> bool {
        self.entries.contains_key(&key)
    }

    pub fn size_of(&self, key: u64) -> Option<u64> {
        self.entries.get(&key).map(|e| e.1)
    }

    fn next_tick(&mut self) -> u64 {
        self.tick += 1;
        self.tick
    }

    /// Inserts `key` at the MRU end. The key must not already be present.
    pub fn push_mru(&mut self, key: u64, size: u64) {
        let tick = self.next_tick();
        let prev = self.entries.insert(key, (tick, size));
        debug_assert!(prev.is_none(), "key {key} already queued");
        self.order.insert(tick, key);
        self.bytes += size;
    }

    /// Moves `key` to the MRU end; false if absent.
    pub fn touch(&mut self, key: u64) -> bool {
        let tick = self.next_tick();
        match self.entries.get_mut(&key) {
            Some(entry) => {
                self.order.remove(&entry.0);
                entry.0 = tick;
                self.order.insert(tick, key);
                true
            }
            None => false,
        }
    }

    pub fn remove(&mut self, key: u64) -> Option<u64> {
        let (tick, size) = self.entries.remove(&key)?;
        self.order.remove(&tick);
        self.bytes -= size;
        Some(size)
    }

    pub fn peek_lru(&self) -> Option<u64> {
        self.order.values().next().copied()
    }

    pub fn pop_lru(&mut self) -> Option<(u64, u64)> {
        let (_, key) = self.order.pop_first()?;
        let (_, size) = self.entries.remove(&key).expect("order and entries agree");
        self.bytes -= size;
        Some((key, size))
    }

    /// Keys from LRU to MRU.
    pub fn keys_lru_first(&self) -> impl Iterator<Item = u64> + '_ {
        self.order.values().copied()
    }
}
