//! The demo deployment: a user database, a location manager and a calendar
//! server populated with a handful of users, rooms and events.

use std::sync::Arc;

use crate::clock::{Clock, Timestamp, DAY_MS, HOUR_MS};
use crate::kit::memory::{EventTable, LocalServices, OccupancyTable, UserTable};
use crate::kit::{self, Address, EntityId, EventSpec, KitEnv, UserRecord};
use crate::name::{parse_name, Name};
use crate::resource::{ResourceDescription, TypeRegistry};

/// 2007-05-03T00:00:00Z.
pub const FIXTURE_DAY: Timestamp = Timestamp(1_178_150_400_000);
/// 08:00 on the fixture day, before the first meeting.
pub const FIXTURE_NOW: Timestamp = Timestamp(FIXTURE_DAY.0 + 8 * HOUR_MS);

/// One of the three discovery scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    ModeratorEmail,
    MeetingOccupant,
    OccupantFile,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::ModeratorEmail, Scenario::MeetingOccupant, Scenario::OccupantFile];

    pub fn from_number(n: u8) -> Option<Scenario> {
        Scenario::ALL.get((n as usize).checked_sub(1)?).copied()
    }

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn name_text(self) -> &'static str {
        match self {
            Scenario::ModeratorEmail => "(today meeting moderator email)",
            Scenario::MeetingOccupant => "(today meeting location occupant)",
            Scenario::OccupantFile => "(occupant files naming.ppt)",
        }
    }

    pub fn name(self) -> Name {
        parse_name(self.name_text()).expect("scenario names parse")
    }

    /// Alias of the initial resource the scenario is resolved from.
    pub fn initial_alias(self) -> &'static str {
        match self {
            Scenario::ModeratorEmail | Scenario::MeetingOccupant => "calendar",
            Scenario::OccupantFile => "location",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Addresses {
    pub user_db: Address,
    pub location: Address,
    pub calendar: Address,
}

impl Addresses {
    pub fn loopback(user_db: u16, location: u16, calendar: u16) -> Self {
        let a = |p: u16| Address::new(format!("127.0.0.1:{p}")).expect("valid");
        Addresses {
            user_db: a(user_db),
            location: a(location),
            calendar: a(calendar),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixtureUser {
    pub handle: &'static str,
    pub id: EntityId,
    pub record: UserRecord,
}

#[derive(Debug, Clone)]
pub struct FixtureLocation {
    pub handle: &'static str,
    pub id: EntityId,
    pub occupants: Vec<EntityId>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub addrs: Addresses,
    pub users: Vec<FixtureUser>,
    pub locations: Vec<FixtureLocation>,
    pub events: Vec<(EntityId, EventSpec)>,
    /// Id under which the calendar server hosts its calendar.
    pub calendar_id: EntityId,
}

pub fn user_id(handle: &str) -> EntityId {
    EntityId::derive(&format!("fixture.user.{handle}"))
}

pub fn location_id(handle: &str) -> EntityId {
    EntityId::derive(&format!("fixture.location.{handle}"))
}

impl Fixture {
    /// Builds the deployment with events placed on the UTC day containing `day`.
    pub fn new(addrs: Addresses, day: Timestamp) -> Self {
        let day = day.start_of_day();
        let users = ["alice", "bob", "carol", "dave"]
            .into_iter()
            .map(|h| FixtureUser {
                handle: h,
                id: user_id(h),
                record: UserRecord {
                    email: format!("{h}@example.org"),
                    file_prefix: format!("http://files.example.org/~{h}/"),
                },
            })
            .collect();
        let locations = vec![
            FixtureLocation {
                handle: "room-101",
                id: location_id("room-101"),
                occupants: vec![user_id("bob"), user_id("carol")],
            },
            FixtureLocation {
                handle: "lab-2",
                id: location_id("lab-2"),
                occupants: vec![],
            },
        ];
        let room = kit::location(&addrs.location, &location_id("room-101"));
        let lab = kit::location(&addrs.location, &location_id("lab-2"));
        let events = vec![
            (
                EntityId::derive("fixture.event.review"),
                EventSpec {
                    tags: vec!["meeting".into(), "research".into()],
                    moderator: user_id("alice"),
                    location: room,
                    files: vec![
                        ("naming.ppt".into(), "http://files.example.org/events/review/naming.ppt".into()),
                        ("agenda.txt".into(), "http://files.example.org/events/review/agenda.txt".into()),
                    ],
                    start: day.plus(9 * HOUR_MS),
                    end: day.plus(10 * HOUR_MS),
                },
            ),
            (
                EntityId::derive("fixture.event.standup"),
                EventSpec {
                    tags: vec!["meeting".into(), "playtime".into()],
                    moderator: user_id("carol"),
                    location: lab.clone(),
                    files: vec![
                        ("board.png".into(), "http://a.example.org/board.png".into()),
                        ("log.txt".into(), "http://b.example.org/x/log.txt".into()),
                    ],
                    start: day.plus(14 * HOUR_MS),
                    end: day.plus(15 * HOUR_MS),
                },
            ),
            (
                EntityId::derive("fixture.event.lunch"),
                EventSpec {
                    tags: vec!["playtime".into()],
                    moderator: user_id("dave"),
                    location: lab,
                    files: vec![],
                    start: day.plus(DAY_MS + 12 * HOUR_MS),
                    end: day.plus(DAY_MS + 13 * HOUR_MS),
                },
            ),
        ];
        Fixture {
            addrs,
            users,
            locations,
            events,
            calendar_id: EntityId::derive("fixture.calendar"),
        }
    }

    pub fn user(&self, handle: &str) -> &FixtureUser {
        self.users.iter().find(|u| u.handle == handle).expect("fixture user")
    }

    pub fn location(&self, handle: &str) -> &FixtureLocation {
        self.locations.iter().find(|l| l.handle == handle).expect("fixture location")
    }

    pub fn user_table(&self) -> UserTable {
        UserTable::new(self.users.iter().map(|u| (u.id, u.record.clone())))
    }

    pub fn occupancy_table(&self) -> OccupancyTable {
        OccupancyTable::new(self.locations.iter().map(|l| (l.id, l.occupants.clone())))
    }

    pub fn event_table(&self) -> EventTable {
        EventTable::new(self.events.iter().cloned())
    }

    /// The description a consumer starts from for a scenario.
    pub fn initial_description(&self, scenario: Scenario) -> ResourceDescription {
        match scenario.initial_alias() {
            "calendar" => kit::calendar(&self.addrs.calendar),
            _ => kit::location(&self.addrs.location, &self.location("room-101").id),
        }
    }

    /// Every server in one process, sharing the returned tables.
    pub fn in_process(&self) -> InProcess {
        let users = Arc::new(self.user_table());
        let occupancy = Arc::new(self.occupancy_table());
        let events = Arc::new(self.event_table());
        let mut services = LocalServices::default();
        services.users.insert(self.addrs.user_db.clone(), users.clone());
        services.locations.insert(self.addrs.location.clone(), occupancy.clone());
        services.calendars.insert(self.addrs.calendar.clone(), events.clone());
        let env = KitEnv {
            services: Arc::new(services),
            user_db: self.addrs.user_db.clone(),
        };
        InProcess {
            users,
            occupancy,
            events,
            env,
        }
    }
}

pub struct InProcess {
    pub users: Arc<UserTable>,
    pub occupancy: Arc<OccupancyTable>,
    pub events: Arc<EventTable>,
    pub env: KitEnv,
}

impl InProcess {
    pub fn registry(&self) -> TypeRegistry {
        let mut reg = TypeRegistry::new();
        kit::register_all(&mut reg, &self.env).expect("fresh registry");
        reg
    }

    pub fn context(
        &self,
        registry: Arc<TypeRegistry>,
        clock: Arc<dyn Clock>,
        initial: &ResourceDescription,
    ) -> Result<crate::resolver::ResolveContext, crate::resolver::ResolveError> {
        let start = registry.instantiate(initial)?;
        Ok(crate::resolver::ResolveContext::new(registry, clock, start))
    }
}
