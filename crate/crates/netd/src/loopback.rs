//! The demo deployment with all three servers on loopback ephemeral ports.

use std::io;
use std::net::TcpListener;
use std::sync::Arc;

use nun_core::fixture::{Addresses, Fixture, Scenario};
use nun_core::kit::memory::{EventTable, OccupancyTable, UserTable};
use nun_core::kit::{self, Address, KitEnv, KitType};
use nun_core::{Clock, ResourceDescription, Timestamp, TypeRegistry};

use crate::client::ClientPool;
use crate::remote::{register_remote, remote, NetServices};
use crate::server::{serve, MessageCounts, RoleState, Server, ServerConfig};

pub struct Loopback {
    pub fixture: Fixture,
    pub users: Arc<UserTable>,
    pub occupancy: Arc<OccupancyTable>,
    pub events: Arc<EventTable>,
    pub user_db: Server,
    pub location: Server,
    pub calendar: Server,
}

fn bind() -> io::Result<(TcpListener, u16)> {
    let l = TcpListener::bind("127.0.0.1:0")?;
    let port = l.local_addr()?.port();
    Ok((l, port))
}

impl Loopback {
    /// Starts the fixture deployment with events on the day containing `day`.
    pub fn start(clock: Arc<dyn Clock>, day: Timestamp) -> io::Result<Loopback> {
        let (ul, up) = bind()?;
        let (ll, lp) = bind()?;
        let (cl, cp) = bind()?;
        let fixture = Fixture::new(Addresses::loopback(up, lp, cp), day);
        let users = Arc::new(fixture.user_table());
        let occupancy = Arc::new(fixture.occupancy_table());
        let events = Arc::new(fixture.event_table());
        let a = fixture.addrs.clone();
        let user_db = serve(
            ServerConfig::new(a.user_db.clone(), a.user_db.clone(), RoleState::UserDb { users: users.clone() }),
            clock.clone(),
            ul,
        )?;
        let location = serve(
            ServerConfig::new(
                a.location.clone(),
                a.user_db.clone(),
                RoleState::Location {
                    occupancy: occupancy.clone(),
                },
            ),
            clock.clone(),
            ll,
        )?;
        let calendar = serve(
            ServerConfig::new(
                a.calendar.clone(),
                a.user_db.clone(),
                RoleState::Calendar {
                    events: events.clone(),
                    calendar_id: fixture.calendar_id,
                },
            ),
            clock,
            cl,
        )?;
        Ok(Loopback {
            fixture,
            users,
            occupancy,
            events,
            user_db,
            location,
            calendar,
        })
    }

    pub fn counts(&self) -> [MessageCounts; 3] {
        [self.user_db.counts(), self.location.counts(), self.calendar.counts()]
    }

    /// What a consumer starts from: the hosting server's remote handle.
    pub fn initial(&self, scenario: Scenario) -> ResourceDescription {
        initial_remote(&self.fixture, scenario)
    }
}

/// Remote handle for a scenario's initial resource.
pub fn initial_remote(fixture: &Fixture, scenario: Scenario) -> ResourceDescription {
    match scenario.initial_alias() {
        "calendar" => remote(&fixture.addrs.calendar, &fixture.calendar_id),
        _ => remote(&fixture.addrs.location, &fixture.location("room-101").id),
    }
}

/// A consumer registry: the remote type plus the given sample types, with
/// every address reached over the wire.
pub fn consumer_registry(pool: Arc<ClientPool>, user_db: &Address, types: &[KitType]) -> TypeRegistry {
    let env = KitEnv {
        services: Arc::new(NetServices::new(pool.clone())),
        user_db: user_db.clone(),
    };
    let mut reg = TypeRegistry::new();
    register_remote(&mut reg, pool).expect("fresh registry");
    kit::register(&mut reg, &env, types).expect("fresh registry");
    reg
}
