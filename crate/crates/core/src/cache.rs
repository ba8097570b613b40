//! Per-resource cache of end-to-end resolutions, expired by validity.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::Mutex;

use crate::clock::Timestamp;
use crate::name::{serialize_name, Name};
use crate::resolver::{resolve, Resolution, ResolveContext, ResolveError};

/// Bounded map from canonical name text to a resolution.
///
/// An entry is served only while `now < expires_at`. When full, the entry
/// that expires first is evicted (ties broken by smallest key).
#[derive(Debug)]
pub struct NameCache {
    entries: Mutex<HashMap<String, Resolution>>,
    capacity: usize,
}

impl NameCache {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "cache capacity must be positive");
        NameCache {
            entries: Mutex::new(HashMap::new()),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, name: &Name, now: Timestamp) -> Option<Resolution> {
        self.get_key(&serialize_name(name), now)
    }

    pub fn get_key(&self, key: &str, now: Timestamp) -> Option<Resolution> {
        let mut entries = self.entries.lock();
        match entries.get(key) {
            Some(r) if r.validity.is_live(now) => Some(r.clone()),
            Some(_) => {
                entries.remove(key);
                None
            }
            None => None,
        }
    }

    pub fn put(&self, name: &Name, resolution: Resolution, now: Timestamp) {
        self.put_key(serialize_name(name), resolution, now)
    }

    pub fn put_key(&self, key: String, resolution: Resolution, now: Timestamp) {
        if !resolution.validity.is_live(now) {
            return;
        }
        let mut entries = self.entries.lock();
        if !entries.contains_key(&key) && entries.len() >= self.capacity {
            let victim = entries
                .iter()
                .min_by(|(ka, a), (kb, b)| a.validity.cmp(&b.validity).then_with(|| ka.cmp(kb)))
                .map(|(k, _)| k.clone());
            if let Some(victim) = victim {
                entries.remove(&victim);
            }
        }
        entries.insert(key, resolution);
    }

    pub fn clear(&self) {
        self.entries.lock().clear();
    }
}

/// Resolves through `cache`, keyed by the name exactly as the consumer gave it.
pub fn resolve_cached(ctx: &ResolveContext, cache: &NameCache, name: &Name) -> Result<Resolution, ResolveError> {
    let key = serialize_name(name);
    if let Some(hit) = cache.get_key(&key, ctx.clock.now()) {
        return Ok(hit);
    }
    let r = resolve(ctx, name)?;
    cache.put_key(key, r.clone(), ctx.clock.now());
    Ok(r)
}

/// A resolution context bundled with its own cache.
#[derive(Clone)]
pub struct CachingResolver {
    ctx: ResolveContext,
    cache: Arc<NameCache>,
}

impl CachingResolver {
    pub fn new(ctx: ResolveContext, capacity: usize) -> Self {
        CachingResolver {
            ctx,
            cache: Arc::new(NameCache::new(capacity)),
        }
    }

    pub fn resolve(&self, name: &Name) -> Result<Resolution, ResolveError> {
        resolve_cached(&self.ctx, &self.cache, name)
    }

    pub fn cache(&self) -> &NameCache {
        &self.cache
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolver::Validity;
    use crate::resource::{ResourceDescription, TypeId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn res(tag: u8, expires: i64) -> Resolution {
        Resolution::new(
            ResourceDescription::new(TypeId::from_bytes([tag; 32]), vec![tag]),
            Validity::until(Timestamp(expires)),
        )
    }

    #[test]
    fn hit_before_expiry_miss_at_boundary() {
        let c = NameCache::new(4);
        let n = Name::of(&["a"]);
        c.put(&n, res(1, 100), Timestamp(0));
        assert_eq!(c.get(&n, Timestamp(99)), Some(res(1, 100)));
        assert_eq!(c.get(&n, Timestamp(100)), None);
        assert!(c.is_empty(), "expired entry removed on access");
    }

    #[test]
    fn expired_put_is_noop() {
        let c = NameCache::new(4);
        c.put(&Name::of(&["a"]), res(1, 10), Timestamp(10));
        assert!(c.is_empty());
    }

    #[test]
    fn evicts_earliest_expiry() {
        let c = NameCache::new(2);
        c.put(&Name::of(&["a"]), res(1, 300), Timestamp(0));
        c.put(&Name::of(&["b"]), res(2, 100), Timestamp(0));
        c.put(&Name::of(&["c"]), res(3, 200), Timestamp(0));
        assert_eq!(c.len(), 2);
        assert!(c.get(&Name::of(&["b"]), Timestamp(0)).is_none());
        assert!(c.get(&Name::of(&["a"]), Timestamp(0)).is_some());
        assert!(c.get(&Name::of(&["c"]), Timestamp(0)).is_some());
    }

    #[test]
    fn reput_replaces_without_evicting() {
        let c = NameCache::new(2);
        c.put(&Name::of(&["a"]), res(1, 300), Timestamp(0));
        c.put(&Name::of(&["b"]), res(2, 100), Timestamp(0));
        c.put(&Name::of(&["b"]), res(9, 500), Timestamp(0));
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(&Name::of(&["b"]), Timestamp(0)), Some(res(9, 500)));
    }

    /// Reference: unbounded-then-trimmed list, scanned linearly.
    #[derive(Default)]
    struct Model {
        entries: Vec<(String, Resolution)>,
    }

    impl Model {
        fn get(&mut self, key: &str, now: Timestamp) -> Option<Resolution> {
            let pos = self.entries.iter().position(|(k, _)| k == key)?;
            if now < self.entries[pos].1.validity.expires_at {
                Some(self.entries[pos].1.clone())
            } else {
                self.entries.remove(pos);
                None
            }
        }

        fn put(&mut self, key: &str, r: Resolution, now: Timestamp, cap: usize) {
            if now >= r.validity.expires_at {
                return;
            }
            if let Some(slot) = self.entries.iter_mut().find(|(k, _)| k == key) {
                slot.1 = r;
                return;
            }
            if self.entries.len() >= cap {
                let mut victim = 0;
                for (i, (k, v)) in self.entries.iter().enumerate() {
                    let (vk, vv) = &self.entries[victim];
                    if v.validity.expires_at < vv.validity.expires_at
                        || (v.validity.expires_at == vv.validity.expires_at && k < vk)
                    {
                        victim = i;
                    }
                }
                self.entries.remove(victim);
            }
            self.entries.push((key.to_owned(), r));
        }
    }

    #[test]
    fn matches_reference_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let keys: Vec<Name> = (0..12).map(|i| Name::of(&[&format!("k{i}")])).collect();
        let cap = 5;
        let cache = NameCache::new(cap);
        let mut model = Model::default();
        let mut now = Timestamp(0);
        for _ in 0..1000 {
            let k = &keys[rng.random_range(0..keys.len())];
            match rng.random_range(0..3) {
                0 => {
                    let r = res(rng.random(), now.0 + rng.random_range(-5..60));
                    cache.put(k, r.clone(), now);
                    model.put(&k.to_string(), r, now, cap);
                }
                1 => {
                    let got = cache.get(k, now);
                    if let Some(g) = &got {
                        assert!(g.validity.expires_at > now);
                    }
                    assert_eq!(got, model.get(&k.to_string(), now));
                }
                _ => now = now.plus(rng.random_range(0..10)),
            }
            assert!(cache.len() <= cap);
            assert_eq!(cache.len(), model.entries.len());
        }
    }
}
