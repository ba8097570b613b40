//! Pooled client connections and the kit service views they back.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::time::Duration;

use nun_core::kit::{Address, CalendarSource, EntityId, EventSpec, OccupancySource, RemoteNaming, UserDirectory, UserRecord};
use nun_core::{Name, Resolution, ResolveError, Timestamp};
use parking_lot::Mutex;

use crate::wire::{resolve_error, ErrorCode, FrameError, Request, Response, MAX_LINE};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

struct Conn {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Conn {
    fn open(addr: &Address, timeout: Duration) -> io::Result<Conn> {
        let sock = addr
            .as_str()
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, "address did not resolve"))?;
        let stream = TcpStream::connect_timeout(&sock, timeout)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        Ok(Conn {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
        })
    }

    fn send(&mut self, line: &str) -> io::Result<()> {
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
        self.writer.write_all(&buf)
    }

    fn recv(&mut self) -> io::Result<String> {
        read_line(&mut self.reader)?.ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "connection closed"))
    }
}

/// Reads one LF-terminated line of at most [`MAX_LINE`] bytes.
///
/// `Ok(None)` on a clean end of stream before any byte.
pub fn read_line(reader: &mut impl BufRead) -> io::Result<Option<String>> {
    let mut buf = Vec::new();
    let n = reader.by_ref().take(MAX_LINE as u64 + 1).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() != Some(&b'\n') {
        let kind = if buf.len() > MAX_LINE {
            io::ErrorKind::InvalidData
        } else {
            io::ErrorKind::UnexpectedEof
        };
        return Err(io::Error::new(kind, "unterminated or oversized line"));
    }
    buf.pop();
    String::from_utf8(buf)
        .map(Some)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Shared pool of persistent connections, keyed by server address.
pub struct ClientPool {
    idle: Mutex<HashMap<Address, Vec<Conn>>>,
    timeout: Duration,
}

impl Default for ClientPool {
    fn default() -> Self {
        ClientPool::new(DEFAULT_TIMEOUT)
    }
}

#[derive(Debug)]
enum CallError {
    Io(io::Error),
    Frame(FrameError),
}

impl From<io::Error> for CallError {
    fn from(e: io::Error) -> Self {
        CallError::Io(e)
    }
}

impl From<FrameError> for CallError {
    fn from(e: FrameError) -> Self {
        CallError::Frame(e)
    }
}

impl ClientPool {
    pub fn new(timeout: Duration) -> Self {
        ClientPool {
            idle: Mutex::new(HashMap::new()),
            timeout,
        }
    }

    /// Drops every idle connection.
    pub fn clear(&self) {
        self.idle.lock().clear();
    }

    /// Sends one request and reads its complete response.
    ///
    /// A reused connection that fails before any reply byte is retried once on
    /// a fresh connection. Failures surface as `Transport` at step 0.
    pub fn call(&self, addr: &Address, req: &Request) -> Result<Response, ResolveError> {
        let line = req.encode();
        let pooled = self.idle.lock().get_mut(addr).and_then(Vec::pop);
        let reused = pooled.is_some();
        let mut conn = match pooled {
            Some(c) => c,
            None => Conn::open(addr, self.timeout).map_err(|e| transport(addr, &e.to_string()))?,
        };
        let result = match exchange(&mut conn, &line, req) {
            Err(CallError::Io(_)) if reused => {
                conn = Conn::open(addr, self.timeout).map_err(|e| transport(addr, &e.to_string()))?;
                exchange(&mut conn, &line, req)
            }
            other => other,
        };
        match result {
            Ok(resp) => {
                self.idle.lock().entry(addr.clone()).or_default().push(conn);
                Ok(resp)
            }
            Err(CallError::Io(e)) => Err(transport(addr, &e.to_string())),
            Err(CallError::Frame(e)) => Err(transport(addr, &e.to_string())),
        }
    }
}

fn transport(addr: &Address, detail: &str) -> ResolveError {
    ResolveError::transport(format!("{addr}: {detail}"))
}

fn exchange(conn: &mut Conn, line: &str, req: &Request) -> Result<Response, CallError> {
    conn.send(line)?;
    let first = conn.recv()?;
    Ok(match req {
        Request::Resolve { .. } => Response::decode_resolved(&first)?,
        Request::GetUser { .. } => Response::decode_user(&first)?,
        Request::Occupancy { .. } => Response::decode_occupants(&first)?,
        Request::SetOccupancy { .. } => Response::decode_ack(&first)?,
        Request::Events { .. } => match Response::decode_event_count(&first)? {
            Err(e) => e,
            Ok(n) => {
                let mut events = Vec::with_capacity(n.min(1024));
                for _ in 0..n {
                    events.push(Response::decode_event_line(&conn.recv()?)?);
                }
                Response::Events(events)
            }
        },
    })
}

fn unexpected(resp: Response) -> ResolveError {
    match resp {
        Response::Error { code, detail } => resolve_error(code, &detail),
        other => ResolveError::Internal {
            detail: format!("unexpected reply {other:?}"),
        },
    }
}

/// One server, seen through the pool.
#[derive(Clone)]
pub struct Endpoint {
    pub pool: Arc<ClientPool>,
    pub addr: Address,
}

impl Endpoint {
    pub fn new(pool: Arc<ClientPool>, addr: Address) -> Self {
        Endpoint { pool, addr }
    }

    pub fn resolve(&self, resource: &EntityId, name: &Name) -> Result<Resolution, ResolveError> {
        let req = Request::Resolve {
            resource: *resource,
            name: name.clone(),
        };
        match self.pool.call(&self.addr, &req)? {
            Response::Resolved(r) => Ok(r),
            other => Err(unexpected(other)),
        }
    }

    pub fn get_user(&self, user: &EntityId) -> Result<Option<UserRecord>, ResolveError> {
        match self.pool.call(&self.addr, &Request::GetUser { user: *user })? {
            Response::User(u) => Ok(Some(u)),
            Response::Error {
                code: ErrorCode::NotFound,
                ..
            } => Ok(None),
            other => Err(unexpected(other)),
        }
    }

    pub fn occupancy(&self, location: &EntityId) -> Result<Option<Vec<EntityId>>, ResolveError> {
        match self.pool.call(&self.addr, &Request::Occupancy { location: *location })? {
            Response::Occupants(ids) => Ok(Some(ids)),
            Response::Error {
                code: ErrorCode::NotFound,
                ..
            } => Ok(None),
            other => Err(unexpected(other)),
        }
    }

    pub fn set_occupancy(&self, location: &EntityId, occupants: Vec<EntityId>) -> Result<(), ResolveError> {
        let req = Request::SetOccupancy {
            location: *location,
            occupants,
        };
        match self.pool.call(&self.addr, &req)? {
            Response::Ack => Ok(()),
            other => Err(unexpected(other)),
        }
    }

    pub fn events(&self, start: Timestamp, end: Timestamp, tag: &str) -> Result<Vec<EventSpec>, ResolveError> {
        let req = Request::Events {
            start,
            end,
            tag: tag.to_owned(),
        };
        match self.pool.call(&self.addr, &req)? {
            Response::Events(events) => Ok(events),
            other => Err(unexpected(other)),
        }
    }
}

impl RemoteNaming for Endpoint {
    fn resolve(&self, resource: &EntityId, name: &Name) -> Result<Resolution, ResolveError> {
        Endpoint::resolve(self, resource, name)
    }
}

impl UserDirectory for Endpoint {
    fn user(&self, id: &EntityId) -> Result<Option<UserRecord>, ResolveError> {
        self.get_user(id)
    }
}

impl OccupancySource for Endpoint {
    fn occupants(&self, location: &EntityId) -> Result<Option<Vec<EntityId>>, ResolveError> {
        self.occupancy(location)
    }
}

impl CalendarSource for Endpoint {
    fn events(&self, start: Timestamp, end: Timestamp, tag: &str) -> Result<Vec<EventSpec>, ResolveError> {
        Endpoint::events(self, start, end, tag)
    }
}
