//! Hand-coded discovery: the consumer queries each server directly and
//! assembles the final description itself.

use nun_core::fixture::Scenario;
use nun_core::kit::{self, decode_id_address, Address, EntityId};
use nun_core::{Clock, ResolveError, ResourceDescription};
use nun_core::clock::DAY_MS;
use nun_netd::Endpoint;
use std::sync::Arc;

use nun_netd::ClientPool;

/// Where the manual queries go.
#[derive(Debug, Clone)]
pub struct ManualTargets {
    pub calendar: Address,
    pub user_db: Address,
    pub location: Address,
    pub room: EntityId,
}

impl ManualTargets {
    /// From the remote handles of the calendar and the room.
    pub fn from_handles(calendar: &ResourceDescription, room: &ResourceDescription, user_db: &Address) -> Result<Self, String> {
        let (_, calendar) = decode_id_address(calendar.spec())?;
        let (room, location) = decode_id_address(room.spec())?;
        Ok(ManualTargets {
            calendar,
            user_db: user_db.clone(),
            location,
            room,
        })
    }
}

fn not_found(what: impl Into<String>) -> ResolveError {
    ResolveError::NotFound { detail: what.into() }
}

/// Runs the query sequence for `scenario`.
pub fn discover(
    scenario: Scenario,
    pool: &Arc<ClientPool>,
    targets: &ManualTargets,
    clock: &dyn Clock,
) -> Result<ResourceDescription, ResolveError> {
    let at = |addr: &Address| Endpoint::new(pool.clone(), addr.clone());
    let first_meeting = || {
        let day = clock.now().start_of_day();
        at(&targets.calendar)
            .events(day, day.plus(DAY_MS), "meeting")?
            .into_iter()
            .next()
            .ok_or_else(|| not_found("no meeting today"))
    };
    match scenario {
        Scenario::ModeratorEmail => {
            // query the calendar for today's meetings, take the moderator, look them up
            let meeting = first_meeting()?;
            let user = at(&targets.user_db)
                .get_user(&meeting.moderator)?
                .ok_or_else(|| not_found(format!("user {}", meeting.moderator)))?;
            Ok(kit::string(&user.email))
        }
        Scenario::MeetingOccupant => {
            // query the calendar, then the location manager of the meeting's room
            let meeting = first_meeting()?;
            let (room, manager) = decode_id_address(meeting.location.spec()).map_err(|reason| {
                ResolveError::MalformedSpec {
                    type_id: meeting.location.type_id(),
                    reason,
                }
            })?;
            let occupant = at(&manager)
                .occupancy(&room)?
                .ok_or_else(|| not_found(format!("location {room}")))?
                .into_iter()
                .next()
                .ok_or_else(|| not_found("meeting room is empty"))?;
            Ok(kit::user(&targets.user_db, &occupant))
        }
        Scenario::OccupantFile => {
            // ask the location manager who is here, then the user database for their files
            let occupant = at(&targets.location)
                .occupancy(&targets.room)?
                .ok_or_else(|| not_found(format!("location {}", targets.room)))?
                .into_iter()
                .next()
                .ok_or_else(|| not_found("room is empty"))?;
            let user = at(&targets.user_db)
                .get_user(&occupant)?
                .ok_or_else(|| not_found(format!("user {occupant}")))?;
            Ok(kit::file(&format!("{}naming.ppt", user.file_prefix)))
        }
    }
}
