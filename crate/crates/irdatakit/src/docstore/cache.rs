//! Bounded LRU of recently fetched records (the "warm" path).

use std::collections::{BTreeMap, HashMap};

use crate::record::Record;

pub(crate) struct LruCache {
    capacity: usize,
    entries: HashMap<String, (Record, u64)>,
    by_age: BTreeMap<u64, String>,
    tick: u64,
}

impl LruCache {
    pub fn new(capacity: usize) -> LruCache {
        LruCache {
            capacity,
            entries: HashMap::new(),
            by_age: BTreeMap::new(),
            tick: 0,
        }
    }

    pub fn get(&mut self, id: &str) -> Option<Record> {
        self.tick += 1;
        let tick = self.tick;
        let (record, age) = self.entries.get_mut(id)?;
        self.by_age.remove(&std::mem::replace(age, tick));
        self.by_age.insert(tick, id.to_string());
        Some(record.clone())
    }

    pub fn insert(&mut self, id: String, record: Record) {
        if self.capacity == 0 {
            return;
        }
        self.tick += 1;
        if let Some((_, age)) = self.entries.remove(&id) {
            self.by_age.remove(&age);
        }
        while self.entries.len() >= self.capacity {
            let Some((&oldest, _)) = self.by_age.iter().next() else {
                break;
            };
            let evicted = self.by_age.remove(&oldest).unwrap();
            self.entries.remove(&evicted);
        }
        self.entries.insert(id.clone(), (record, self.tick));
        self.by_age.insert(self.tick, id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{Schema, Value};
    use std::sync::Arc;

    fn rec(id: &str) -> Record {
        Record::new(
            Arc::new(Schema::generic_docs()),
            vec![Value::Id(id.into()), Value::Text("x".into())],
        )
        .unwrap()
    }

    #[test]
    fn evicts_least_recently_used() {
        let mut cache = LruCache::new(2);
        cache.insert("a".into(), rec("a"));
        cache.insert("b".into(), rec("b"));
        assert!(cache.get("a").is_some()); // refresh a
        cache.insert("c".into(), rec("c")); // evicts b
        assert!(cache.get("b").is_none());
        assert!(cache.get("a").is_some());
        assert!(cache.get("c").is_some());
    }

    #[test]
    fn zero_capacity_disables_caching() {
        let mut cache = LruCache::new(0);
        cache.insert("a".into(), rec("a"));
        assert!(cache.get("a").is_none());
    }
}
