//! In-memory server state, usable directly in-process or behind the wire protocol.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::clock::Timestamp;
use crate::kit::{
    Address, CalendarSource, EntityId, EventSpec, LocationAccess, OccupancySource, Services, UserDirectory, UserRecord,
};
use crate::resolver::ResolveError;

#[derive(Debug, Default)]
pub struct UserTable {
    users: RwLock<HashMap<EntityId, UserRecord>>,
}

impl UserTable {
    pub fn new(users: impl IntoIterator<Item = (EntityId, UserRecord)>) -> Self {
        UserTable {
            users: RwLock::new(users.into_iter().collect()),
        }
    }

    pub fn insert(&self, id: EntityId, record: UserRecord) {
        self.users.write().insert(id, record);
    }

    pub fn get(&self, id: &EntityId) -> Option<UserRecord> {
        self.users.read().get(id).cloned()
    }
}

impl UserDirectory for UserTable {
    fn user(&self, id: &EntityId) -> Result<Option<UserRecord>, ResolveError> {
        Ok(self.get(id))
    }
}

/// Occupants per location, in arrival order.
#[derive(Debug, Default)]
pub struct OccupancyTable {
    locations: RwLock<HashMap<EntityId, Vec<EntityId>>>,
}

impl OccupancyTable {
    pub fn new(locations: impl IntoIterator<Item = (EntityId, Vec<EntityId>)>) -> Self {
        OccupancyTable {
            locations: RwLock::new(locations.into_iter().collect()),
        }
    }

    pub fn get(&self, location: &EntityId) -> Option<Vec<EntityId>> {
        self.locations.read().get(location).cloned()
    }

    /// Replaces the occupant list; returns false if the location is unknown.
    pub fn set(&self, location: &EntityId, occupants: Vec<EntityId>) -> bool {
        match self.locations.write().get_mut(location) {
            Some(slot) => {
                *slot = occupants;
                true
            }
            None => false,
        }
    }

    pub fn ids(&self) -> Vec<EntityId> {
        let mut ids: Vec<_> = self.locations.read().keys().copied().collect();
        ids.sort();
        ids
    }
}

impl OccupancySource for OccupancyTable {
    fn occupants(&self, location: &EntityId) -> Result<Option<Vec<EntityId>>, ResolveError> {
        Ok(self.get(location))
    }
}

/// Events keyed by id.
#[derive(Debug, Default)]
pub struct EventTable {
    events: RwLock<Vec<(EntityId, EventSpec)>>,
}

impl EventTable {
    pub fn new(events: impl IntoIterator<Item = (EntityId, EventSpec)>) -> Self {
        let mut events: Vec<_> = events.into_iter().collect();
        events.sort_by(|(ia, a), (ib, b)| a.start.cmp(&b.start).then(ia.cmp(ib)));
        EventTable {
            events: RwLock::new(events),
        }
    }

    pub fn query(&self, start: Timestamp, end: Timestamp, tag: &str) -> Vec<EventSpec> {
        self.events
            .read()
            .iter()
            .filter(|(_, e)| e.start >= start && e.start < end && e.has_tag(tag))
            .map(|(_, e)| e.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.events.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl CalendarSource for EventTable {
    fn events(&self, start: Timestamp, end: Timestamp, tag: &str) -> Result<Vec<EventSpec>, ResolveError> {
        Ok(self.query(start, end, tag))
    }
}

struct Unreachable(Address);

impl Unreachable {
    fn err(&self) -> ResolveError {
        ResolveError::transport(format!("no server at {}", self.0))
    }
}

impl CalendarSource for Unreachable {
    fn events(&self, _: Timestamp, _: Timestamp, _: &str) -> Result<Vec<EventSpec>, ResolveError> {
        Err(self.err())
    }
}

impl UserDirectory for Unreachable {
    fn user(&self, _: &EntityId) -> Result<Option<UserRecord>, ResolveError> {
        Err(self.err())
    }
}

impl OccupancySource for Unreachable {
    fn occupants(&self, _: &EntityId) -> Result<Option<Vec<EntityId>>, ResolveError> {
        Err(self.err())
    }
}

/// Every server lives in this process; addresses just pick the table.
#[derive(Default, Clone)]
pub struct LocalServices {
    pub calendars: HashMap<Address, Arc<EventTable>>,
    pub users: HashMap<Address, Arc<UserTable>>,
    pub locations: HashMap<Address, Arc<OccupancyTable>>,
}

impl Services for LocalServices {
    fn calendar(&self, server: &Address) -> Arc<dyn CalendarSource> {
        match self.calendars.get(server) {
            Some(t) => t.clone(),
            None => Arc::new(Unreachable(server.clone())),
        }
    }

    fn users(&self, db: &Address) -> Arc<dyn UserDirectory> {
        match self.users.get(db) {
            Some(t) => t.clone(),
            None => Arc::new(Unreachable(db.clone())),
        }
    }

    fn location(&self, manager: &Address) -> LocationAccess {
        match self.locations.get(manager) {
            Some(t) => LocationAccess::Local(t.clone()),
            None => LocationAccess::Local(Arc::new(Unreachable(manager.clone()))),
        }
    }
}
