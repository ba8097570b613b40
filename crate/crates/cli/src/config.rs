//! Deployment configuration file.
//!
//! TOML with these sections; every id is 32 lowercase hex digits.
//!
//! ```toml
//! [servers]
//! userdb = "127.0.0.1:7401"
//! location = "127.0.0.1:7402"
//! calendar = "127.0.0.1:7403"
//!
//! [calendar]
//! id = "<id>"                        # hosted by the calendar server
//!
//! [[users]]
//! id = "<id>"
//! email = "alice@example.org"
//! file_prefix = "http://files.example.org/~alice/"
//!
//! [[locations]]
//! id = "<id>"
//! occupants = ["<user id>", ...]     # arrival order
//!
//! [[events]]
//! id = "<id>"
//! tags = ["meeting"]
//! moderator = "<user id>"
//! location = "<location id>"
//! start = "2007-05-03T09:00:00Z"     # RFC 3339
//! end = "2007-05-03T10:00:00Z"
//! files = [["naming.ppt", "http://..."]]
//!
//! [initial.calendar]                 # alias usable with --initial
//! role = "calendar"                  # or "location"
//! id = "<id>"
//! ```

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use nun_core::fixture::{Addresses, Fixture};
use nun_core::kit::memory::{EventTable, OccupancyTable, UserTable};
use nun_core::kit::{self, Address, EntityId, EventSpec, UserRecord};
use nun_core::name::is_token;
use nun_core::{ResourceDescription, Timestamp};
use nun_netd::{remote, Role};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    At { line: usize, message: String },
    #[error("{0}")]
    General(String),
    #[error("cannot read {path}: {detail}")]
    Io { path: String, detail: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentConfig {
    pub servers: Servers,
    pub calendar: CalendarSection,
    #[serde(default)]
    pub users: Vec<UserEntry>,
    #[serde(default)]
    pub locations: Vec<LocationEntry>,
    #[serde(default)]
    pub events: Vec<EventEntry>,
    #[serde(default)]
    pub initial: BTreeMap<String, InitialEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Servers {
    pub userdb: Spanned<String>,
    pub location: Spanned<String>,
    pub calendar: Spanned<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarSection {
    pub id: Spanned<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub id: Spanned<String>,
    pub email: Spanned<String>,
    pub file_prefix: Spanned<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationEntry {
    pub id: Spanned<String>,
    #[serde(default)]
    pub occupants: Vec<Spanned<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventEntry {
    pub id: Spanned<String>,
    #[serde(default)]
    pub tags: Vec<Spanned<String>>,
    pub moderator: Spanned<String>,
    pub location: Spanned<String>,
    pub start: Spanned<String>,
    pub end: Spanned<String>,
    #[serde(default)]
    pub files: Vec<Spanned<(String, String)>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialEntry {
    pub role: Spanned<String>,
    pub id: Spanned<String>,
}

/// A validated deployment.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub addrs: Addresses,
    pub users: Vec<(EntityId, UserRecord)>,
    pub locations: Vec<(EntityId, Vec<EntityId>)>,
    pub events: Vec<(EntityId, EventSpec)>,
    pub calendar_id: EntityId,
    /// Alias to the remote handle of a hosted resource.
    pub initial: BTreeMap<String, ResourceDescription>,
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn line_of(&self, offset: usize) -> usize {
        let end = offset.min(self.text.len());
        self.text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
    }

    fn err(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError::At {
            line: self.line_of(span.start),
            message: message.into(),
        }
    }

    fn id(&self, s: &Spanned<String>) -> Result<EntityId, ConfigError> {
        EntityId::from_hex(s.get_ref()).map_err(|e| self.err(s.span(), e))
    }

    fn address(&self, s: &Spanned<String>) -> Result<Address, ConfigError> {
        Address::new(s.get_ref().as_str()).map_err(|e| self.err(s.span(), e))
    }

    fn time(&self, s: &Spanned<String>) -> Result<Timestamp, ConfigError> {
        DateTime::parse_from_rfc3339(s.get_ref())
            .map(|t| Timestamp(t.timestamp_millis()))
            .map_err(|e| self.err(s.span(), format!("bad RFC 3339 time {:?}: {e}", s.get_ref())))
    }

    fn word(&self, s: &Spanned<String>, what: &str) -> Result<String, ConfigError> {
        let v = s.get_ref();
        if v.is_empty() || v.contains(char::is_whitespace) {
            return Err(self.err(s.span(), format!("{what} must be non-empty without whitespace")));
        }
        Ok(v.clone())
    }
}

fn unique(seen: &mut HashSet<EntityId>, id: EntityId, c: &Checker, span: Range<usize>, what: &str) -> Result<(), ConfigError> {
    if !seen.insert(id) {
        return Err(c.err(span, format!("duplicate {what} id {id}")));
    }
    Ok(())
}

impl Deployment {
    pub fn load(path: &Path) -> Result<Deployment, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        Deployment::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Deployment, ConfigError> {
        let c = Checker { text };
        let raw: DeploymentConfig = toml::from_str(text).map_err(|e| match e.span() {
            Some(span) => c.err(span, e.message().to_owned()),
            None => ConfigError::General(e.message().to_owned()),
        })?;

        let addrs = Addresses {
            user_db: c.address(&raw.servers.userdb)?,
            location: c.address(&raw.servers.location)?,
            calendar: c.address(&raw.servers.calendar)?,
        };

        let mut user_ids = HashSet::new();
        let mut users = Vec::new();
        for u in &raw.users {
            let id = c.id(&u.id)?;
            unique(&mut user_ids, id, &c, u.id.span(), "user")?;
            users.push((
                id,
                UserRecord {
                    email: c.word(&u.email, "email")?,
                    file_prefix: c.word(&u.file_prefix, "file_prefix")?,
                },
            ));
        }
        let known_user = |s: &Spanned<String>| -> Result<EntityId, ConfigError> {
            let id = c.id(s)?;
            if !user_ids.contains(&id) {
                return Err(c.err(s.span(), format!("undefined user {id}")));
            }
            Ok(id)
        };

        let mut location_ids = HashSet::new();
        let mut locations = Vec::new();
        for l in &raw.locations {
            let id = c.id(&l.id)?;
            unique(&mut location_ids, id, &c, l.id.span(), "location")?;
            let occupants = l.occupants.iter().map(&known_user).collect::<Result<Vec<_>, _>>()?;
            locations.push((id, occupants));
        }
        let known_location = |s: &Spanned<String>| -> Result<EntityId, ConfigError> {
            let id = c.id(s)?;
            if !location_ids.contains(&id) {
                return Err(c.err(s.span(), format!("undefined location {id}")));
            }
            Ok(id)
        };

        let mut event_ids = HashSet::new();
        let mut events = Vec::new();
        for e in &raw.events {
            let id = c.id(&e.id)?;
            unique(&mut event_ids, id, &c, e.id.span(), "event")?;
            let mut tags = Vec::new();
            for t in &e.tags {
                if !is_token(t.get_ref()) {
                    return Err(c.err(t.span(), format!("tag {:?} is not a token", t.get_ref())));
                }
                tags.push(t.get_ref().clone());
            }
            let mut files: Vec<(String, String)> = Vec::new();
            for f in &e.files {
                let (name, url) = f.get_ref();
                if !is_token(name) {
                    return Err(c.err(f.span(), format!("file name {name:?} is not a token")));
                }
                if url.is_empty() || url.contains(char::is_whitespace) {
                    return Err(c.err(f.span(), format!("bad URL for file {name}")));
                }
                if files.iter().any(|(n, _)| n == name) {
                    return Err(c.err(f.span(), format!("duplicate file {name}")));
                }
                files.push((name.clone(), url.clone()));
            }
            let start = c.time(&e.start)?;
            let end = c.time(&e.end)?;
            if start >= end {
                return Err(c.err(e.end.span(), "event end must be after its start"));
            }
            let spec = EventSpec {
                tags,
                moderator: known_user(&e.moderator)?,
                location: kit::location(&addrs.location, &known_location(&e.location)?),
                files,
                start,
                end,
            };
            events.push((id, spec));
        }

        let calendar_id = c.id(&raw.calendar.id)?;
        let mut initial = BTreeMap::new();
        for (alias, entry) in &raw.initial {
            let role: Role = entry
                .role
                .get_ref()
                .parse()
                .map_err(|e: String| c.err(entry.role.span(), e))?;
            let desc = match role {
                Role::Calendar => {
                    let id = c.id(&entry.id)?;
                    if id != calendar_id {
                        return Err(c.err(entry.id.span(), format!("undefined calendar {id}")));
                    }
                    remote(&addrs.calendar, &id)
                }
                Role::Location => remote(&addrs.location, &known_location(&entry.id)?),
                Role::UserDb => {
                    return Err(c.err(entry.role.span(), "the user database hosts no named resources"));
                }
            };
            initial.insert(alias.clone(), desc);
        }

        Ok(Deployment {
            addrs,
            users,
            locations,
            events,
            calendar_id,
            initial,
        })
    }

    pub fn address(&self, role: Role) -> &Address {
        match role {
            Role::UserDb => &self.addrs.user_db,
            Role::Location => &self.addrs.location,
            Role::Calendar => &self.addrs.calendar,
        }
    }

    pub fn user_table(&self) -> UserTable {
        UserTable::new(self.users.iter().cloned())
    }

    pub fn occupancy_table(&self) -> OccupancyTable {
        OccupancyTable::new(self.locations.iter().cloned())
    }

    pub fn event_table(&self) -> EventTable {
        EventTable::new(self.events.iter().cloned())
    }

    pub fn alias(&self, name: &str) -> Option<&ResourceDescription> {
        self.initial.get(name)
    }
}

fn plain<T>(v: T) -> Spanned<T> {
    Spanned::new(0..0, v)
}

fn rfc3339(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp_millis(t.0)
        .expect("in range")
        .to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

impl DeploymentConfig {
    /// The demo deployment as a config file.
    pub fn from_fixture(f: &Fixture) -> DeploymentConfig {
        let location_id = |desc: &ResourceDescription| {
            kit::decode_id_address(desc.spec()).expect("fixture locations are well formed").0
        };
        let mut initial = BTreeMap::new();
        initial.insert(
            "calendar".to_owned(),
            InitialEntry {
                role: plain("calendar".into()),
                id: plain(f.calendar_id.to_hex()),
            },
        );
        initial.insert(
            "location".to_owned(),
            InitialEntry {
                role: plain("location".into()),
                id: plain(f.location("room-101").id.to_hex()),
            },
        );
        DeploymentConfig {
            servers: Servers {
                userdb: plain(f.addrs.user_db.to_string()),
                location: plain(f.addrs.location.to_string()),
                calendar: plain(f.addrs.calendar.to_string()),
            },
            calendar: CalendarSection {
                id: plain(f.calendar_id.to_hex()),
            },
            users: f
                .users
                .iter()
                .map(|u| UserEntry {
                    id: plain(u.id.to_hex()),
                    email: plain(u.record.email.clone()),
                    file_prefix: plain(u.record.file_prefix.clone()),
                })
                .collect(),
            locations: f
                .locations
                .iter()
                .map(|l| LocationEntry {
                    id: plain(l.id.to_hex()),
                    occupants: l.occupants.iter().map(|o| plain(o.to_hex())).collect(),
                })
                .collect(),
            events: f
                .events
                .iter()
                .map(|(id, e)| EventEntry {
                    id: plain(id.to_hex()),
                    tags: e.tags.iter().cloned().map(plain).collect(),
                    moderator: plain(e.moderator.to_hex()),
                    location: plain(location_id(&e.location).to_hex()),
                    start: plain(rfc3339(e.start)),
                    end: plain(rfc3339(e.end)),
                    files: e.files.iter().cloned().map(plain).collect(),
                })
                .collect(),
            initial,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
