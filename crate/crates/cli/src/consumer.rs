//! The consumer element: resolves names against remote handles.

use std::sync::Arc;

use nun_core::kit::{Address, KitType};
use nun_core::name::resource_literal;
use nun_core::{resolve, Clock, Name, NameCache, Resolution, ResolveContext, ResolveError, ResourceDescription, TypeRegistry};
use nun_netd::{consumer_registry, ClientPool};

pub const CACHE_CAPACITY: usize = 1024;

pub struct Consumer {
    pub registry: Arc<TypeRegistry>,
    pub clock: Arc<dyn Clock>,
    pub pool: Arc<ClientPool>,
    pub cache: Option<NameCache>,
}

impl Consumer {
    pub fn new(user_db: &Address, clock: Arc<dyn Clock>, types: &[KitType], cache: bool) -> Self {
        let pool = Arc::new(ClientPool::default());
        Consumer {
            registry: Arc::new(consumer_registry(pool.clone(), user_db, types)),
            clock,
            pool,
            cache: cache.then(|| NameCache::new(CACHE_CAPACITY)),
        }
    }

    /// Resolves `name` relative to `initial`, consulting the cache if enabled.
    pub fn resolve(&self, initial: &ResourceDescription, name: &Name) -> Result<Resolution, ResolveError> {
        let key = self.cache.as_ref().map(|_| format!("{} {name}", resource_literal(initial)));
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            if let Some(hit) = cache.get_key(key, self.clock.now()) {
                return Ok(hit);
            }
        }
        let start = self.registry.instantiate(initial)?;
        let ctx = ResolveContext::new(self.registry.clone(), self.clock.clone(), start);
        let r = resolve(&ctx, name)?;
        if let (Some(cache), Some(key)) = (&self.cache, key) {
            cache.put_key(key, r.clone(), self.clock.now());
        }
        Ok(r)
    }
}
