//! The three networked servers.
//!
//! Each accepted connection gets its own thread and is served sequentially;
//! the tables behind a server are shared and individually locked, so
//! concurrent requests interleave at whole-operation granularity.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use log::{debug, warn};
use nun_core::kit::memory::{EventTable, OccupancyTable, UserTable};
use nun_core::kit::{self, Address, EntityId, KitEnv};
use nun_core::resolver::DEFAULT_MAX_DEPTH;
use nun_core::{resolve, Clock, Name, ResolveContext, ResourceDescription, TypeRegistry};
use parking_lot::Mutex;

use crate::client::{read_line, ClientPool};
use crate::remote::{register_remote, NetServices};
use crate::wire::{error_response, ErrorCode, Request, Response};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    UserDb,
    Location,
    Calendar,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::UserDb, Role::Location, Role::Calendar];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::UserDb => "userdb",
            Role::Location => "location",
            Role::Calendar => "calendar",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role {s:?} (expected userdb, location or calendar)"))
    }
}

/// The state a server role owns.
#[derive(Clone)]
pub enum RoleState {
    UserDb { users: Arc<UserTable> },
    Location { occupancy: Arc<OccupancyTable> },
    Calendar { events: Arc<EventTable>, calendar_id: EntityId },
}

impl RoleState {
    pub fn role(&self) -> Role {
        match self {
            RoleState::UserDb { .. } => Role::UserDb,
            RoleState::Location { .. } => Role::Location,
            RoleState::Calendar { .. } => Role::Calendar,
        }
    }
}

pub struct ServerConfig {
    /// Address other elements use to reach this server; it is embedded in
    /// the descriptions the server hands out.
    pub advertise: Address,
    /// User database that user ids refer to.
    pub user_db: Address,
    pub state: RoleState,
    pub max_depth: usize,
}

impl ServerConfig {
    pub fn new(advertise: Address, user_db: Address, state: RoleState) -> Self {
        ServerConfig {
            advertise,
            user_db,
            state,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// Requests received, per verb. Undecodable lines count as `invalid`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageCounts {
    pub resolve: u64,
    pub get_user: u64,
    pub occupancy: u64,
    pub set_occupancy: u64,
    pub events: u64,
    pub invalid: u64,
}

impl MessageCounts {
    pub fn total(&self) -> u64 {
        self.resolve + self.get_user + self.occupancy + self.set_occupancy + self.events + self.invalid
    }

    /// Counts received since `earlier`.
    pub fn since(&self, earlier: &MessageCounts) -> MessageCounts {
        MessageCounts {
            resolve: self.resolve - earlier.resolve,
            get_user: self.get_user - earlier.get_user,
            occupancy: self.occupancy - earlier.occupancy,
            set_occupancy: self.set_occupancy - earlier.set_occupancy,
            events: self.events - earlier.events,
            invalid: self.invalid - earlier.invalid,
        }
    }
}

#[derive(Default)]
struct Counters {
    resolve: AtomicU64,
    get_user: AtomicU64,
    occupancy: AtomicU64,
    set_occupancy: AtomicU64,
    events: AtomicU64,
    invalid: AtomicU64,
}

impl Counters {
    fn bump(&self, req: Option<&Request>) {
        let c = match req {
            Some(Request::Resolve { .. }) => &self.resolve,
            Some(Request::GetUser { .. }) => &self.get_user,
            Some(Request::Occupancy { .. }) => &self.occupancy,
            Some(Request::SetOccupancy { .. }) => &self.set_occupancy,
            Some(Request::Events { .. }) => &self.events,
            None => &self.invalid,
        };
        c.fetch_add(1, Ordering::Relaxed);
    }

    fn snapshot(&self) -> MessageCounts {
        MessageCounts {
            resolve: self.resolve.load(Ordering::Relaxed),
            get_user: self.get_user.load(Ordering::Relaxed),
            occupancy: self.occupancy.load(Ordering::Relaxed),
            set_occupancy: self.set_occupancy.load(Ordering::Relaxed),
            events: self.events.load(Ordering::Relaxed),
            invalid: self.invalid.load(Ordering::Relaxed),
        }
    }
}

struct Handler {
    config: ServerConfig,
    registry: Arc<TypeRegistry>,
    clock: Arc<dyn Clock>,
    counters: Counters,
}

impl Handler {
    fn new(config: ServerConfig, clock: Arc<dyn Clock>) -> Handler {
        let pool = Arc::new(ClientPool::default());
        let mut services = NetServices::new(pool.clone());
        let own = config.advertise.clone();
        match &config.state {
            RoleState::UserDb { users } => {
                services.users.insert(own, users.clone());
            }
            RoleState::Location { occupancy } => {
                services.locations.insert(own, occupancy.clone());
            }
            RoleState::Calendar { events, .. } => {
                services.calendars.insert(own, events.clone());
            }
        }
        let env = KitEnv {
            services: Arc::new(services),
            user_db: config.user_db.clone(),
        };
        let mut registry = TypeRegistry::new();
        kit::register_all(&mut registry, &env).expect("fresh registry");
        register_remote(&mut registry, pool).expect("fresh registry");
        Handler {
            config,
            registry: Arc::new(registry),
            clock,
            counters: Counters::default(),
        }
    }

    fn handle_line(&self, line: &str) -> Response {
        let req = match Request::decode(line) {
            Ok(r) => r,
            Err(e) => {
                self.counters.bump(None);
                return Response::error(ErrorCode::BadRequest, e.0);
            }
        };
        self.counters.bump(Some(&req));
        self.handle(req)
    }

    fn handle(&self, req: Request) -> Response {
        let not_served = |verb: &str| {
            Response::error(
                ErrorCode::BadRequest,
                format!("{verb} is not served by the {} role", self.config.state.role()),
            )
        };
        match (&self.config.state, req) {
            (RoleState::UserDb { users }, Request::GetUser { user }) => match users.get(&user) {
                Some(rec) => Response::User(rec),
                None => Response::error(ErrorCode::NotFound, ""),
            },
            (RoleState::Location { occupancy }, Request::Occupancy { location }) => match occupancy.get(&location) {
                Some(ids) => Response::Occupants(ids),
                None => Response::error(ErrorCode::NotFound, format!("location {location}")),
            },
            (RoleState::Location { occupancy }, Request::SetOccupancy { location, occupants }) => {
                if occupancy.set(&location, occupants) {
                    Response::Ack
                } else {
                    Response::error(ErrorCode::NotFound, format!("location {location}"))
                }
            }
            (RoleState::Location { occupancy }, Request::Resolve { resource, name }) => {
                if occupancy.get(&resource).is_none() {
                    return Response::error(ErrorCode::NotFound, format!("location {resource}"));
                }
                self.resolve_hosted(kit::location(&self.config.advertise, &resource), &name)
            }
            (RoleState::Calendar { events, .. }, Request::Events { start, end, tag }) => {
                if start >= end {
                    return Response::error(ErrorCode::BadRequest, "start must precede end");
                }
                Response::Events(events.query(start, end, &tag))
            }
            (RoleState::Calendar { calendar_id, .. }, Request::Resolve { resource, name }) => {
                if resource != *calendar_id {
                    return Response::error(ErrorCode::NotFound, format!("calendar {resource}"));
                }
                self.resolve_hosted(kit::calendar(&self.config.advertise), &name)
            }
            (_, other) => not_served(other.verb()),
        }
    }

    fn resolve_hosted(&self, initial: ResourceDescription, name: &Name) -> Response {
        let start = match self.registry.instantiate(&initial) {
            Ok(r) => r,
            Err(e) => return error_response(&e),
        };
        let ctx = ResolveContext::new(self.registry.clone(), self.clock.clone(), start)
            .with_max_depth(self.config.max_depth);
        match resolve(&ctx, name) {
            Ok(r) => Response::Resolved(r),
            Err(e) => {
                debug!("resolve {name} failed: {e}");
                error_response(&e)
            }
        }
    }
}

/// A running server. Dropping it shuts it down.
pub struct Server {
    role: Role,
    local_addr: SocketAddr,
    handler: Arc<Handler>,
    stop: Arc<AtomicBool>,
    conns: Arc<Mutex<HashMap<u64, TcpStream>>>,
    accept: Option<JoinHandle<()>>,
}

/// Starts serving on an already bound listener.
pub fn serve(config: ServerConfig, clock: Arc<dyn Clock>, listener: TcpListener) -> io::Result<Server> {
    let local_addr = listener.local_addr()?;
    let role = config.state.role();
    let handler = Arc::new(Handler::new(config, clock));
    let stop = Arc::new(AtomicBool::new(false));
    let conns: Arc<Mutex<HashMap<u64, TcpStream>>> = Arc::default();
    let accept = {
        let (handler, stop, conns) = (handler.clone(), stop.clone(), conns.clone());
        thread::Builder::new()
            .name(format!("nun-{role}-accept"))
            .spawn(move || accept_loop(listener, handler, stop, conns))?
    };
    debug!("{role} server listening on {local_addr}");
    Ok(Server {
        role,
        local_addr,
        handler,
        stop,
        conns,
        accept: Some(accept),
    })
}

fn accept_loop(
    listener: TcpListener,
    handler: Arc<Handler>,
    stop: Arc<AtomicBool>,
    conns: Arc<Mutex<HashMap<u64, TcpStream>>>,
) {
    let mut next_id = 0u64;
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let id = next_id;
        next_id += 1;
        let Ok(clone) = stream.try_clone() else { continue };
        conns.lock().insert(id, clone);
        let (handler, conns) = (handler.clone(), conns.clone());
        let spawned = thread::Builder::new().name(format!("nun-conn-{id}")).spawn(move || {
            if let Err(e) = serve_connection(stream, &handler) {
                debug!("connection {id} ended: {e}");
            }
            conns.lock().remove(&id);
        });
        if let Err(e) = spawned {
            warn!("could not spawn connection thread: {e}");
        }
    }
}

fn serve_connection(stream: TcpStream, handler: &Handler) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    loop {
        let line = match read_line(&mut reader) {
            Ok(Some(l)) => l,
            Ok(None) => return Ok(()),
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                handler.counters.bump(None);
                let resp = Response::error(ErrorCode::BadRequest, "line too long or not UTF-8");
                write_response(&mut writer, &resp)?;
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        let resp = handler.handle_line(&line);
        write_response(&mut writer, &resp)?;
    }
}

fn write_response(w: &mut TcpStream, resp: &Response) -> io::Result<()> {
    let mut out = String::new();
    for line in resp.encode() {
        out.push_str(&line);
        out.push('\n');
    }
    w.write_all(out.as_bytes())
}

impl Server {
    pub fn role(&self) -> Role {
        self.role
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn advertised(&self) -> &Address {
        &self.handler.config.advertise
    }

    pub fn counts(&self) -> MessageCounts {
        self.handler.counters.snapshot()
    }

    /// Blocks until the accept loop ends.
    pub fn wait(mut self) {
        if let Some(accept) = self.accept.take() {
            let _ = accept.join();
        }
    }

    /// Stops accepting, closes open connections and joins the accept thread.
    pub fn shutdown(&mut self) {
        let Some(accept) = self.accept.take() else { return };
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.local_addr);
        let _ = accept.join();
        for (_, c) in self.conns.lock().drain() {
            let _ = c.shutdown(Shutdown::Both);
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.shutdown();
    }
}
