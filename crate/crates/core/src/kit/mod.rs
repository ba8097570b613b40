//! Sample resource types: strings, files, file collections, locations,
//! calendars, time periods, events and users.
//!
//! Specification byte layouts (all addresses are UTF-8 `host:port`, all
//! integers big-endian):
//!
//! | type            | spec bytes                                        |
//! |-----------------|---------------------------------------------------|
//! | string          | UTF-8 text                                        |
//! | file            | UTF-8 URL                                         |
//! | file collection | UTF-8 URL prefix                                  |
//! | file set        | UTF-8 lines `name=url`                            |
//! | location        | 16-byte location id, then manager address         |
//! | calendar        | calendar server address                           |
//! | time period     | start i64 ms, end i64 ms, then server address     |
//! | event           | static text, see [`event`]                        |
//! | user            | 16-byte user id, then user database address       |

pub mod event;
pub mod memory;
mod resolvers;

use std::fmt;
use std::sync::{Arc, LazyLock};

use crate::clock::Timestamp;
use crate::name::Name;
use crate::resolver::{Resolution, ResolveError};
use crate::resource::{derive_type_id, ResourceDescription, TypeId, TypeRegistry};

pub use event::EventSpec;
pub use resolvers::{
    CalendarResolver, EventResolver, FileCollectionResolver, FileSetResolver, LocationResolver, StaticResolver,
    TimePeriodResolver, UserResolver, OCCUPANT_TTL_MS, STATIC_TTL_MS, TAG_LOOKUP_MIN_MS, USER_TTL_MS,
};

/// The sample types, plus the auxiliary file set used for events whose files
/// share no URL prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KitType {
    String,
    File,
    FileCollection,
    Location,
    Calendar,
    TimePeriod,
    Event,
    User,
    FileSet,
}

impl KitType {
    /// The eight primary sample types.
    pub const SAMPLE: [KitType; 8] = [
        KitType::String,
        KitType::File,
        KitType::FileCollection,
        KitType::Location,
        KitType::Calendar,
        KitType::TimePeriod,
        KitType::Event,
        KitType::User,
    ];

    pub const ALL: [KitType; 9] = [
        KitType::String,
        KitType::File,
        KitType::FileCollection,
        KitType::Location,
        KitType::Calendar,
        KitType::TimePeriod,
        KitType::Event,
        KitType::User,
        KitType::FileSet,
    ];

    pub fn descriptor(self) -> &'static str {
        match self {
            KitType::String => "nun.type.string.v1",
            KitType::File => "nun.type.file.v1",
            KitType::FileCollection => "nun.type.filecollection.v1",
            KitType::Location => "nun.type.location.v1",
            KitType::Calendar => "nun.type.calendar.v1",
            KitType::TimePeriod => "nun.type.timeperiod.v1",
            KitType::Event => "nun.type.event.v1",
            KitType::User => "nun.type.user.v1",
            KitType::FileSet => "nun.type.fileset.v1",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KitType::String => "string",
            KitType::File => "file",
            KitType::FileCollection => "file collection",
            KitType::Location => "location",
            KitType::Calendar => "calendar",
            KitType::TimePeriod => "time period",
            KitType::Event => "event",
            KitType::User => "user",
            KitType::FileSet => "file set",
        }
    }

    pub fn type_id(self) -> TypeId {
        static IDS: LazyLock<[TypeId; 9]> =
            LazyLock::new(|| KitType::ALL.map(|t| derive_type_id(t.descriptor().as_bytes())));
        IDS[self as usize]
    }

    pub fn from_type_id(id: TypeId) -> Option<KitType> {
        KitType::ALL.into_iter().find(|t| t.type_id() == id)
    }
}

/// 16-byte identifier for users and locations.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub [u8; 16]);

impl EntityId {
    pub const LEN: usize = 16;

    pub fn from_hex(s: &str) -> Result<Self, String> {
        let mut out = [0u8; 16];
        hex::decode_to_slice(s, &mut out).map_err(|e| format!("bad id {s:?}: {e}"))?;
        Ok(EntityId(out))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Deterministic id from a seed string, for fixtures.
    pub fn derive(seed: &str) -> Self {
        let full = derive_type_id(seed.as_bytes());
        let mut out = [0u8; 16];
        out.copy_from_slice(&full.as_bytes()[..16]);
        EntityId(out)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EntityId({})", self.to_hex())
    }
}

/// A `host:port` server address as it appears inside specifications.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(String);

impl Address {
    pub fn new(s: impl Into<String>) -> Result<Self, String> {
        let s = s.into();
        let (host, port) = s.rsplit_once(':').ok_or_else(|| format!("address {s:?} lacks a port"))?;
        if host.is_empty() || host.contains(char::is_whitespace) {
            return Err(format!("address {s:?} has a bad host"));
        }
        port.parse::<u16>().map_err(|_| format!("address {s:?} has a bad port"))?;
        Ok(Address(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn utf8(spec: &[u8]) -> Result<&str, String> {
    std::str::from_utf8(spec).map_err(|e| format!("spec is not UTF-8: {e}"))
}

fn address(bytes: &[u8]) -> Result<Address, String> {
    Address::new(utf8(bytes)?)
}

/// Splits a `16-byte id ‖ address` spec.
pub fn decode_id_address(spec: &[u8]) -> Result<(EntityId, Address), String> {
    if spec.len() < EntityId::LEN {
        return Err(format!("spec is {} bytes, shorter than the {}-byte identifier", spec.len(), EntityId::LEN));
    }
    let (id, rest) = spec.split_at(EntityId::LEN);
    let mut out = [0u8; 16];
    out.copy_from_slice(id);
    Ok((EntityId(out), address(rest)?))
}

pub fn encode_id_address(id: &EntityId, addr: &Address) -> Vec<u8> {
    let mut out = id.0.to_vec();
    out.extend_from_slice(addr.as_str().as_bytes());
    out
}

pub fn string(text: &str) -> ResourceDescription {
    ResourceDescription::new(KitType::String.type_id(), text.as_bytes().to_vec())
}

pub fn file(url: &str) -> ResourceDescription {
    ResourceDescription::new(KitType::File.type_id(), url.as_bytes().to_vec())
}

pub fn file_collection(prefix: &str) -> ResourceDescription {
    ResourceDescription::new(KitType::FileCollection.type_id(), prefix.as_bytes().to_vec())
}

pub fn file_set(files: &[(String, String)]) -> ResourceDescription {
    let text: Vec<String> = files.iter().map(|(n, u)| format!("{n}={u}")).collect();
    ResourceDescription::new(KitType::FileSet.type_id(), text.join("\n").into_bytes())
}

pub fn location(manager: &Address, id: &EntityId) -> ResourceDescription {
    ResourceDescription::new(KitType::Location.type_id(), encode_id_address(id, manager))
}

pub fn user(db: &Address, id: &EntityId) -> ResourceDescription {
    ResourceDescription::new(KitType::User.type_id(), encode_id_address(id, db))
}

pub fn calendar(server: &Address) -> ResourceDescription {
    ResourceDescription::new(KitType::Calendar.type_id(), server.as_str().as_bytes().to_vec())
}

pub fn time_period(server: &Address, start: Timestamp, end: Timestamp) -> ResourceDescription {
    let mut spec = Vec::with_capacity(16 + server.as_str().len());
    spec.extend_from_slice(&start.0.to_be_bytes());
    spec.extend_from_slice(&end.0.to_be_bytes());
    spec.extend_from_slice(server.as_str().as_bytes());
    ResourceDescription::new(KitType::TimePeriod.type_id(), spec)
}

pub fn event(spec: &EventSpec) -> ResourceDescription {
    ResourceDescription::new(KitType::Event.type_id(), spec.encode().into_bytes())
}

/// Decodes a time period spec into `(server, start, end)`.
pub fn decode_time_period(spec: &[u8]) -> Result<(Address, Timestamp, Timestamp), String> {
    if spec.len() < 16 {
        return Err(format!("time period spec is {} bytes, need at least 16", spec.len()));
    }
    let start = i64::from_be_bytes(spec[..8].try_into().expect("8 bytes"));
    let end = i64::from_be_bytes(spec[8..16].try_into().expect("8 bytes"));
    if start >= end {
        return Err("time period start must precede end".into());
    }
    Ok((address(&spec[16..])?, Timestamp(start), Timestamp(end)))
}

pub fn decode_file_set(spec: &[u8]) -> Result<Vec<(String, String)>, String> {
    utf8(spec)?
        .split('\n')
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(n, u)| (n.to_owned(), u.to_owned()))
                .ok_or_else(|| format!("bad file set line {l:?}"))
        })
        .collect()
}

/// What a user database returns for one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub email: String,
    pub file_prefix: String,
}

pub trait CalendarSource: Send + Sync {
    /// Events starting in `[start, end)` tagged `tag`, ordered by start then event id.
    fn events(&self, start: Timestamp, end: Timestamp, tag: &str) -> Result<Vec<EventSpec>, ResolveError>;
}

pub trait UserDirectory: Send + Sync {
    fn user(&self, id: &EntityId) -> Result<Option<UserRecord>, ResolveError>;
}

pub trait OccupancySource: Send + Sync {
    /// Occupants in arrival order, or `None` for an unknown location.
    fn occupants(&self, location: &EntityId) -> Result<Option<Vec<EntityId>>, ResolveError>;
}

/// A server that resolves whole names for the resources it hosts.
pub trait RemoteNaming: Send + Sync {
    fn resolve(&self, resource: &EntityId, name: &Name) -> Result<Resolution, ResolveError>;
}

/// How a location is reached: its manager's state directly, or by asking the
/// manager to resolve names.
#[derive(Clone)]
pub enum LocationAccess {
    Local(Arc<dyn OccupancySource>),
    Remote(Arc<dyn RemoteNaming>),
}

/// Routes a server address to whatever serves it in this process.
pub trait Services: Send + Sync {
    fn calendar(&self, server: &Address) -> Arc<dyn CalendarSource>;
    fn users(&self, db: &Address) -> Arc<dyn UserDirectory>;
    fn location(&self, manager: &Address) -> LocationAccess;
}

/// What the sample types need from the element they run in.
#[derive(Clone)]
pub struct KitEnv {
    pub services: Arc<dyn Services>,
    /// User database that user ids (occupants, moderators) refer to.
    pub user_db: Address,
}

/// Registers the given sample types. String and file are also marked usable.
pub fn register(registry: &mut TypeRegistry, env: &KitEnv, types: &[KitType]) -> Result<(), crate::resource::RegistryError> {
    for &t in types {
        let env = env.clone();
        registry.register_fn(t.type_id(), move |spec| resolvers::build(t, spec, &env))?;
        if matches!(t, KitType::String | KitType::File) {
            registry.mark_usable(t.type_id());
        }
    }
    Ok(())
}

pub fn register_all(registry: &mut TypeRegistry, env: &KitEnv) -> Result<(), crate::resource::RegistryError> {
    register(registry, env, &KitType::ALL)
}

/// What an element can do with a usable description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Usage {
    Print(String),
    Fetch(String),
}

pub fn use_resource(registry: &TypeRegistry, desc: &ResourceDescription) -> Option<Usage> {
    if !registry.can_use(desc.type_id()) {
        return None;
    }
    let text = std::str::from_utf8(desc.spec()).ok()?.to_owned();
    match KitType::from_type_id(desc.type_id())? {
        KitType::String => Some(Usage::Print(text)),
        KitType::File => Some(Usage::Fetch(text)),
        _ => None,
    }
}

/// Human-readable rendering of a sample-type description.
pub fn pretty(desc: &ResourceDescription) -> Option<String> {
    let t = KitType::from_type_id(desc.type_id())?;
    let spec = desc.spec();
    let body = match t {
        KitType::String | KitType::File | KitType::FileCollection | KitType::Calendar => utf8(spec).ok()?.to_owned(),
        KitType::FileSet => decode_file_set(spec)
            .ok()?
            .into_iter()
            .map(|(n, u)| format!("{n}={u}"))
            .collect::<Vec<_>>()
            .join(", "),
        KitType::Location | KitType::User => {
            let (id, addr) = decode_id_address(spec).ok()?;
            format!("{id}@{addr}")
        }
        KitType::TimePeriod => {
            let (addr, s, e) = decode_time_period(spec).ok()?;
            format!("[{s}, {e})@{addr}")
        }
        KitType::Event => {
            let e = EventSpec::decode(utf8(spec).ok()?).ok()?;
            format!("tags={} start={} moderator={}", e.tags.join(","), e.start, e.moderator)
        }
    };
    Some(format!("{}: {}", t.label(), body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn sample_ids_are_distinct_digests() {
        let ids: HashSet<TypeId> = KitType::ALL.iter().map(|t| t.type_id()).collect();
        assert_eq!(ids.len(), KitType::ALL.len());
        for t in KitType::ALL {
            assert_eq!(t.type_id(), derive_type_id(t.descriptor().as_bytes()));
            assert_eq!(KitType::from_type_id(t.type_id()), Some(t));
        }
    }

    #[test]
    fn string_type_digest() {
        // sha256("nun.type.string.v1"), computed with coreutils sha256sum
        assert_eq!(
            KitType::String.type_id().to_hex(),
            "4558a733b6bfe1b22e7b6975fd6b435cad31e1d6901702f630b5a4ac9c8ba480"
        );
    }

    #[test]
    fn address_validation() {
        assert!(Address::new("127.0.0.1:80").is_ok());
        assert!(Address::new("host.example:65535").is_ok());
        assert!(Address::new("nohost").is_err());
        assert!(Address::new(":80").is_err());
        assert!(Address::new("h:99999").is_err());
    }

    #[test]
    fn id_address_layout() {
        let a = Address::new("h:1").unwrap();
        let id = EntityId([0xaa; 16]);
        let d = location(&a, &id);
        assert_eq!(&d.spec()[..16], &[0xaa; 16]);
        assert_eq!(&d.spec()[16..], b"h:1");
        assert_eq!(decode_id_address(d.spec()).unwrap(), (id, a));
        assert!(decode_id_address(&[0; 15]).is_err());
    }

    #[test]
    fn time_period_layout() {
        let a = Address::new("h:1").unwrap();
        let d = time_period(&a, Timestamp(1), Timestamp(2));
        assert_eq!(d.spec().len(), 19);
        assert_eq!(decode_time_period(d.spec()).unwrap(), (a.clone(), Timestamp(1), Timestamp(2)));
        assert!(decode_time_period(time_period(&a, Timestamp(2), Timestamp(2)).spec()).is_err());
    }

    #[test]
    fn pretty_forms() {
        assert_eq!(pretty(&string("a@b")).unwrap(), "string: a@b");
        assert_eq!(pretty(&file("http://x/y")).unwrap(), "file: http://x/y");
        assert!(pretty(&ResourceDescription::new(TypeId::from_bytes([0; 32]), vec![])).is_none());
    }
}
