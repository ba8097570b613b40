//! The remote resource type and wire-backed service routing.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock};

use nun_core::kit::memory::{EventTable, OccupancyTable, UserTable};
use nun_core::kit::{
    decode_id_address, encode_id_address, Address, CalendarSource, EntityId, LocationAccess, Services, UserDirectory,
};
use nun_core::{derive_type_id, Clock, LocalName, Name, RegistryError, Resolution, ResolveError, Resolver, ResourceDescription, TypeId, TypeRegistry};

use crate::client::{ClientPool, Endpoint};

pub const REMOTE_DESCRIPTOR: &str = "nun.type.remote.v1";

static REMOTE_TYPE: LazyLock<TypeId> = LazyLock::new(|| derive_type_id(REMOTE_DESCRIPTOR.as_bytes()));

pub fn remote_type() -> TypeId {
    *REMOTE_TYPE
}

/// A resource hosted by another server: 16-byte id followed by `host:port`.
pub fn remote(server: &Address, id: &EntityId) -> ResourceDescription {
    ResourceDescription::new(remote_type(), encode_id_address(id, server))
}

/// Hands whole names to the hosting server.
pub struct RemoteResolver {
    pub id: EntityId,
    pub endpoint: Endpoint,
}

impl Resolver for RemoteResolver {
    fn resolve_local(&self, local: &LocalName, _: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        self.endpoint.resolve(&self.id, &Name::single(local.clone())).map(Some)
    }

    fn resolve_remote(&self, name: &Name, _: &dyn Clock) -> Option<Result<Resolution, ResolveError>> {
        Some(self.endpoint.resolve(&self.id, name))
    }
}

pub fn register_remote(registry: &mut TypeRegistry, pool: Arc<ClientPool>) -> Result<(), RegistryError> {
    registry.register_fn(remote_type(), move |spec: &[u8]| {
        let (id, server) = decode_id_address(spec)?;
        Ok(Arc::new(RemoteResolver {
            id,
            endpoint: Endpoint::new(pool.clone(), server),
        }) as Arc<dyn Resolver>)
    })
}

/// Routes addresses served by this process to in-memory tables and every
/// other address over the wire.
#[derive(Default)]
pub struct NetServices {
    pub pool: Arc<ClientPool>,
    pub users: HashMap<Address, Arc<UserTable>>,
    pub locations: HashMap<Address, Arc<OccupancyTable>>,
    pub calendars: HashMap<Address, Arc<EventTable>>,
}

impl NetServices {
    pub fn new(pool: Arc<ClientPool>) -> Self {
        NetServices {
            pool,
            ..Default::default()
        }
    }

    fn endpoint(&self, addr: &Address) -> Endpoint {
        Endpoint::new(self.pool.clone(), addr.clone())
    }
}

impl Services for NetServices {
    fn calendar(&self, server: &Address) -> Arc<dyn CalendarSource> {
        match self.calendars.get(server) {
            Some(t) => t.clone(),
            None => Arc::new(self.endpoint(server)),
        }
    }

    fn users(&self, db: &Address) -> Arc<dyn UserDirectory> {
        match self.users.get(db) {
            Some(t) => t.clone(),
            None => Arc::new(self.endpoint(db)),
        }
    }

    fn location(&self, manager: &Address) -> LocationAccess {
        match self.locations.get(manager) {
            Some(t) => LocationAccess::Local(t.clone()),
            None => LocationAccess::Remote(Arc::new(self.endpoint(manager))),
        }
    }
}
