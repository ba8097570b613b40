use std::sync::Arc;

use crate::clock::{Clock, Timestamp, DAY_MS, HOUR_MS, MINUTE_MS, SECOND_MS};
use crate::kit::{
    self, decode_file_set, decode_id_address, decode_time_period, utf8, Address, CalendarSource, EntityId, EventSpec,
    KitEnv, KitType, LocationAccess, UserDirectory,
};
use crate::name::{LocalName, Name};
use crate::resolver::{Resolution, ResolveError, Resolver, Validity};

/// Static data: file collections, events, file sets.
pub const STATIC_TTL_MS: i64 = DAY_MS;
/// Floor for time period tag lookups.
pub const TAG_LOOKUP_MIN_MS: i64 = 10 * MINUTE_MS;
pub const OCCUPANT_TTL_MS: i64 = 30 * SECOND_MS;
pub const USER_TTL_MS: i64 = HOUR_MS;

pub(super) fn build(t: KitType, spec: &[u8], env: &KitEnv) -> Result<Arc<dyn Resolver>, String> {
    Ok(match t {
        KitType::String | KitType::File => {
            utf8(spec)?;
            Arc::new(StaticResolver(t))
        }
        KitType::FileCollection => Arc::new(FileCollectionResolver {
            prefix: utf8(spec)?.to_owned(),
        }),
        KitType::FileSet => Arc::new(FileSetResolver {
            files: decode_file_set(spec)?,
        }),
        KitType::Location => {
            let (id, manager) = decode_id_address(spec)?;
            Arc::new(LocationResolver {
                id,
                access: env.services.location(&manager),
                user_db: env.user_db.clone(),
            })
        }
        KitType::Calendar => Arc::new(CalendarResolver {
            server: Address::new(utf8(spec)?)?,
        }),
        KitType::TimePeriod => {
            let (server, start, end) = decode_time_period(spec)?;
            Arc::new(TimePeriodResolver {
                source: env.services.calendar(&server),
                start,
                end,
            })
        }
        KitType::Event => Arc::new(EventResolver {
            event: EventSpec::decode(utf8(spec)?)?,
            user_db: env.user_db.clone(),
        }),
        KitType::User => {
            let (id, db) = decode_id_address(spec)?;
            Arc::new(UserResolver {
                id,
                directory: env.services.users(&db),
            })
        }
    })
}

/// Strings and files: nothing is bound.
pub struct StaticResolver(pub KitType);

impl Resolver for StaticResolver {
    fn resolve_local(&self, _: &LocalName, _: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        Ok(None)
    }
}

/// Maps any local name to the file at prefix + name.
pub struct FileCollectionResolver {
    pub prefix: String,
}

impl Resolver for FileCollectionResolver {
    fn resolve_local(&self, local: &LocalName, clock: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        let url = format!("{}{}", self.prefix, local.primary());
        Ok(Some(Resolution::for_duration(kit::file(&url), clock, STATIC_TTL_MS)))
    }
}

pub struct FileSetResolver {
    pub files: Vec<(String, String)>,
}

impl Resolver for FileSetResolver {
    fn resolve_local(&self, local: &LocalName, clock: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        Ok(self
            .files
            .iter()
            .find(|(n, _)| n == local.primary())
            .map(|(_, url)| Resolution::for_duration(kit::file(url), clock, STATIC_TTL_MS)))
    }
}

/// `occupant` binds to the earliest-arrived occupant. Away from the
/// location's own manager, whole names are handed to the manager instead.
pub struct LocationResolver {
    pub id: EntityId,
    pub access: LocationAccess,
    pub user_db: Address,
}

impl Resolver for LocationResolver {
    fn resolve_local(&self, local: &LocalName, clock: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        match &self.access {
            LocationAccess::Remote(naming) => naming.resolve(&self.id, &Name::single(local.clone())).map(Some),
            LocationAccess::Local(source) => {
                if local.primary() != "occupant" {
                    return Ok(None);
                }
                let occupants = source.occupants(&self.id)?.ok_or_else(|| ResolveError::NotFound {
                    detail: format!("location {}", self.id),
                })?;
                Ok(occupants
                    .first()
                    .map(|u| Resolution::for_duration(kit::user(&self.user_db, u), clock, OCCUPANT_TTL_MS)))
            }
        }
    }

    fn resolve_remote(&self, name: &Name, _: &dyn Clock) -> Option<Result<Resolution, ResolveError>> {
        match &self.access {
            LocationAccess::Remote(naming) => Some(naming.resolve(&self.id, name)),
            LocationAccess::Local(_) => None,
        }
    }

    fn identity(&self) -> Option<String> {
        Some(format!("location {}", self.id))
    }
}

/// Maps period names to time periods of the same calendar, in UTC.
pub struct CalendarResolver {
    pub server: Address,
}

impl CalendarResolver {
    /// `(start, end, expires_at)` of a named period at `now`.
    pub fn period(name: &str, now: Timestamp) -> Option<(Timestamp, Timestamp, Timestamp)> {
        let today = now.start_of_day();
        let tomorrow = today.plus(DAY_MS);
        let week = now.start_of_week();
        match name {
            "today" => Some((today, tomorrow, tomorrow)),
            "tomorrow" => Some((tomorrow, tomorrow.plus(DAY_MS), tomorrow)),
            "thisweek" => Some((week, week.plus(7 * DAY_MS), week.plus(7 * DAY_MS))),
            _ => None,
        }
    }
}

impl Resolver for CalendarResolver {
    fn resolve_local(&self, local: &LocalName, clock: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        Ok(Self::period(local.primary(), clock.now()).map(|(start, end, expires)| {
            Resolution::new(kit::time_period(&self.server, start, end), Validity::until(expires))
        }))
    }
}

/// Maps a tag to the first event in the period carrying it.
pub struct TimePeriodResolver {
    pub source: Arc<dyn CalendarSource>,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Resolver for TimePeriodResolver {
    fn resolve_local(&self, local: &LocalName, clock: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        let events = self.source.events(self.start, self.end, local.primary())?;
        // sources return (start, id) order; min_by_key keeps the first of equals
        let first = events
            .into_iter()
            .filter(|e| e.start >= self.start && e.start < self.end && e.has_tag(local.primary()))
            .min_by_key(|e| e.start);
        Ok(first.map(|e| {
            let floor = clock.now().plus(TAG_LOOKUP_MIN_MS);
            Resolution::new(kit::event(&e), Validity::until(e.start.max(floor)))
        }))
    }
}

/// Interprets the static event text.
pub struct EventResolver {
    pub event: EventSpec,
    pub user_db: Address,
}

impl Resolver for EventResolver {
    fn resolve_local(&self, local: &LocalName, clock: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        let desc = match local.primary() {
            "moderator" => kit::user(&self.user_db, &self.event.moderator),
            "location" => self.event.location.clone(),
            "files" if self.event.files.is_empty() => return Ok(None),
            "files" => match self.event.common_file_prefix() {
                Some(prefix) => kit::file_collection(prefix),
                None => kit::file_set(&self.event.files),
            },
            _ => return Ok(None),
        };
        Ok(Some(Resolution::for_duration(desc, clock, STATIC_TTL_MS)))
    }
}

/// Separate resolution code for users: fetches the raw record and interprets it.
pub struct UserResolver {
    pub id: EntityId,
    pub directory: Arc<dyn UserDirectory>,
}

impl Resolver for UserResolver {
    fn resolve_local(&self, local: &LocalName, clock: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
        let fetch = || {
            self.directory.user(&self.id)?.ok_or_else(|| ResolveError::NotFound {
                detail: format!("user {}", self.id),
            })
        };
        let desc = match local.primary() {
            "email" => kit::string(&fetch()?.email),
            "files" => kit::file_collection(&fetch()?.file_prefix),
            _ => return Ok(None),
        };
        Ok(Some(Resolution::for_duration(desc, clock, USER_TTL_MS)))
    }

    fn identity(&self) -> Option<String> {
        Some(format!("user {}", self.id))
    }
}
