use std::collections::VecDeque;

use rustc_hash::FxHashMap;

/// Fixed-capacity set of recently seen message ids with least-recently-used
/// eviction. Every lookup refreshes recency.
///
/// Recency is kept as an access log with lazy deletion: a log entry is live
/// only while its stamp matches the id's current stamp.
#[derive(Debug, Clone)]
pub struct LruSet {
    capacity: usize,
    clock: u64,
    stamps: FxHashMap<u64, u64>,
    log: VecDeque<(u64, u64)>,
}

impl LruSet {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "cache capacity must be positive");
        let mut stamps = FxHashMap::default();
        stamps.reserve(capacity.min(1 << 12));
        Self {
            capacity,
            clock: 0,
            stamps,
            log: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.stamps.contains_key(&id)
    }

    /// Marks `id` as most recently used. Returns `true` if it was absent.
    pub fn touch(&mut self, id: u64) -> bool {
        self.clock += 1;
        let stamp = self.clock;
        let fresh = self.stamps.insert(id, stamp).is_none();
        self.log.push_back((id, stamp));
        if fresh && self.stamps.len() > self.capacity {
            while let Some((old, s)) = self.log.pop_front() {
                if self.stamps.get(&old) == Some(&s) {
                    self.stamps.remove(&old);
                    break;
                }
            }
        }
        if self.log.len() > 2 * self.stamps.len() + 64 {
            let stamps = &self.stamps;
            self.log.retain(|(id, s)| stamps.get(id) == Some(s));
        }
        fresh
    }

    /// Ids from least to most recently used.
    pub fn iter_lru(&self) -> impl Iterator<Item = u64> + '_ {
        self.log
            .iter()
            .filter(|(id, s)| self.stamps.get(id) == Some(s))
            .map(|&(id, _)| id)
    }
}
