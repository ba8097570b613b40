//! Line-oriented request/response frames.
//!
//! Every frame is one UTF-8 line of at most [`MAX_LINE`] bytes terminated by
//! a single LF. Fields are separated by single spaces and binary payloads are
//! lowercase hex; an empty hex payload is written as `-`.
//!
//! ```text
//! RESOLVE <resource-id> <name>          OK <expires-ms> <type-id> <spec>
//! GETUSER <user-id>                     OK <email> <file-prefix>
//! OCCUPANCY <location-id>               OK <n> <user-id>*
//! SETOCC <location-id> <n> <user-id>*   OK
//! EVENTS <start-ms> <end-ms> <tag>      OK <n>, then n lines of <event-spec>
//! any                                   ERR <code> <detail>
//! ```

use std::fmt;

use nun_core::kit::{EntityId, EventSpec, UserRecord};
use nun_core::name::is_token;
use nun_core::{parse_name, Name, Resolution, ResolveError, ResourceDescription, Timestamp, TypeId, Validity};
use thiserror::Error;

pub const MAX_LINE: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    NotBound,
    UnknownType,
    Depth,
    NotFound,
    BadRequest,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::NotBound => "NOTBOUND",
            ErrorCode::UnknownType => "UNKNOWNTYPE",
            ErrorCode::Depth => "DEPTH",
            ErrorCode::NotFound => "NOTFOUND",
            ErrorCode::BadRequest => "BADREQ",
            ErrorCode::Internal => "INTERNAL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "NOTBOUND" => ErrorCode::NotBound,
            "UNKNOWNTYPE" => ErrorCode::UnknownType,
            "DEPTH" => ErrorCode::Depth,
            "NOTFOUND" => ErrorCode::NotFound,
            "BADREQ" => ErrorCode::BadRequest,
            "INTERNAL" => ErrorCode::Internal,
            _ => return None,
        })
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A frame that could not be decoded.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed frame: {0}")]
pub struct FrameError(pub String);

fn bad(msg: impl Into<String>) -> FrameError {
    FrameError(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Resolve { resource: EntityId, name: Name },
    GetUser { user: EntityId },
    Occupancy { location: EntityId },
    SetOccupancy { location: EntityId, occupants: Vec<EntityId> },
    Events { start: Timestamp, end: Timestamp, tag: String },
}

impl Request {
    pub fn verb(&self) -> &'static str {
        match self {
            Request::Resolve { .. } => "RESOLVE",
            Request::GetUser { .. } => "GETUSER",
            Request::Occupancy { .. } => "OCCUPANCY",
            Request::SetOccupancy { .. } => "SETOCC",
            Request::Events { .. } => "EVENTS",
        }
    }

    /// The request line without its terminating LF.
    pub fn encode(&self) -> String {
        match self {
            Request::Resolve { resource, name } => format!("RESOLVE {resource} {name}"),
            Request::GetUser { user } => format!("GETUSER {user}"),
            Request::Occupancy { location } => format!("OCCUPANCY {location}"),
            Request::SetOccupancy { location, occupants } => {
                let mut s = format!("SETOCC {location} {}", occupants.len());
                for o in occupants {
                    s.push(' ');
                    s.push_str(&o.to_hex());
                }
                s
            }
            Request::Events { start, end, tag } => format!("EVENTS {} {} {tag}", start.0, end.0),
        }
    }

    pub fn decode(line: &str) -> Result<Request, FrameError> {
        let (verb, rest) = line.split_once(' ').unwrap_or((line, ""));
        match verb {
            "RESOLVE" => {
                let (id, name) = rest.split_once(' ').ok_or_else(|| bad("RESOLVE needs an id and a name"))?;
                Ok(Request::Resolve {
                    resource: entity(id)?,
                    name: parse_name(name).map_err(|e| bad(e.to_string()))?,
                })
            }
            "GETUSER" => Ok(Request::GetUser { user: only_id(rest)? }),
            "OCCUPANCY" => Ok(Request::Occupancy { location: only_id(rest)? }),
            "SETOCC" => {
                let mut fields = rest.split(' ');
                let location = entity(fields.next().unwrap_or(""))?;
                let occupants = counted_ids(&mut fields)?;
                Ok(Request::SetOccupancy { location, occupants })
            }
            "EVENTS" => {
                let fields: Vec<&str> = rest.split(' ').collect();
                let [start, end, tag] = fields[..] else {
                    return Err(bad("EVENTS needs start, end and tag"));
                };
                if !is_token(tag) {
                    return Err(bad(format!("tag {tag:?} is not a token")));
                }
                Ok(Request::Events {
                    start: millis(start)?,
                    end: millis(end)?,
                    tag: tag.to_owned(),
                })
            }
            other => Err(bad(format!("unknown verb {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Resolved(Resolution),
    User(UserRecord),
    Occupants(Vec<EntityId>),
    Ack,
    Events(Vec<EventSpec>),
    Error { code: ErrorCode, detail: String },
}

impl Response {
    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        Response::Error {
            code,
            detail: detail.into(),
        }
    }

    /// All lines of the response, each without its LF.
    pub fn encode(&self) -> Vec<String> {
        match self {
            Response::Resolved(r) => vec![format!(
                "OK {} {} {}",
                r.validity.expires_at.0,
                r.description.type_id().to_hex(),
                hex_or_dash(r.description.spec())
            )],
            Response::User(u) => vec![format!("OK {} {}", u.email, u.file_prefix)],
            Response::Occupants(ids) => {
                let mut s = format!("OK {}", ids.len());
                for id in ids {
                    s.push(' ');
                    s.push_str(&id.to_hex());
                }
                vec![s]
            }
            Response::Ack => vec!["OK".into()],
            Response::Events(events) => std::iter::once(format!("OK {}", events.len()))
                .chain(events.iter().map(|e| hex_or_dash(e.encode().as_bytes())))
                .collect(),
            Response::Error { code, detail } => {
                let detail = if detail.is_empty() { "-" } else { detail.as_str() };
                vec![format!("ERR {code} {}", detail.replace('\n', " "))]
            }
        }
    }

    /// Splits an `ERR` line; `None` for anything else.
    pub fn decode_error(line: &str) -> Option<Result<Response, FrameError>> {
        let rest = line.strip_prefix("ERR ")?;
        let (code, detail) = rest.split_once(' ').unwrap_or((rest, "-"));
        Some(
            ErrorCode::parse(code)
                .map(|code| Response::error(code, detail))
                .ok_or_else(|| bad(format!("unknown error code {code:?}"))),
        )
    }

    pub fn decode_resolved(line: &str) -> Result<Response, FrameError> {
        if let Some(e) = Self::decode_error(line) {
            return e;
        }
        let fields: Vec<&str> = ok_fields(line)?.split(' ').collect();
        let [expires, type_id, spec] = fields[..] else {
            return Err(bad("RESOLVE reply needs expiry, type and spec"));
        };
        let type_id = TypeId::from_hex(type_id).map_err(|e| bad(format!("type id: {e}")))?;
        Ok(Response::Resolved(Resolution::new(
            ResourceDescription::new(type_id, dash_or_hex(spec)?),
            Validity::until(millis(expires)?),
        )))
    }

    pub fn decode_user(line: &str) -> Result<Response, FrameError> {
        if let Some(e) = Self::decode_error(line) {
            return e;
        }
        let fields: Vec<&str> = ok_fields(line)?.split(' ').collect();
        let [email, prefix] = fields[..] else {
            return Err(bad("GETUSER reply needs email and file prefix"));
        };
        Ok(Response::User(UserRecord {
            email: email.to_owned(),
            file_prefix: prefix.to_owned(),
        }))
    }

    pub fn decode_occupants(line: &str) -> Result<Response, FrameError> {
        if let Some(e) = Self::decode_error(line) {
            return e;
        }
        let mut fields = ok_fields(line)?.split(' ');
        Ok(Response::Occupants(counted_ids(&mut fields)?))
    }

    pub fn decode_ack(line: &str) -> Result<Response, FrameError> {
        if let Some(e) = Self::decode_error(line) {
            return e;
        }
        if line == "OK" {
            Ok(Response::Ack)
        } else {
            Err(bad(format!("expected OK, got {line:?}")))
        }
    }

    /// Event count from the first line of an EVENTS reply.
    pub fn decode_event_count(line: &str) -> Result<Result<usize, Response>, FrameError> {
        if let Some(e) = Self::decode_error(line) {
            return e.map(Err);
        }
        ok_fields(line)?
            .parse::<usize>()
            .map(Ok)
            .map_err(|e| bad(format!("event count: {e}")))
    }

    pub fn decode_event_line(line: &str) -> Result<EventSpec, FrameError> {
        let bytes = dash_or_hex(line)?;
        let text = String::from_utf8(bytes).map_err(|e| bad(e.to_string()))?;
        EventSpec::decode(&text).map_err(bad)
    }
}

fn ok_fields(line: &str) -> Result<&str, FrameError> {
    line.strip_prefix("OK ").ok_or_else(|| bad(format!("expected OK reply, got {line:?}")))
}

fn hex_or_dash(bytes: &[u8]) -> String {
    if bytes.is_empty() {
        "-".into()
    } else {
        hex::encode(bytes)
    }
}

fn dash_or_hex(s: &str) -> Result<Vec<u8>, FrameError> {
    if s == "-" {
        Ok(Vec::new())
    } else {
        hex::decode(s).map_err(|e| bad(format!("hex payload: {e}")))
    }
}

fn entity(s: &str) -> Result<EntityId, FrameError> {
    EntityId::from_hex(s).map_err(bad)
}

fn only_id(rest: &str) -> Result<EntityId, FrameError> {
    if rest.contains(' ') {
        return Err(bad("expected a single id"));
    }
    entity(rest)
}

fn millis(s: &str) -> Result<Timestamp, FrameError> {
    s.parse::<i64>()
        .map(Timestamp)
        .map_err(|e| bad(format!("bad instant {s:?}: {e}")))
}

fn counted_ids<'a>(fields: &mut impl Iterator<Item = &'a str>) -> Result<Vec<EntityId>, FrameError> {
    let n: usize = fields
        .next()
        .ok_or_else(|| bad("missing count"))?
        .parse()
        .map_err(|e| bad(format!("count: {e}")))?;
    let ids = fields.map(entity).collect::<Result<Vec<_>, _>>()?;
    if ids.len() != n {
        return Err(bad(format!("count says {n}, found {} ids", ids.len())));
    }
    Ok(ids)
}

/// Server side: a resolution failure as an error reply.
pub fn error_response(err: &ResolveError) -> Response {
    match err {
        ResolveError::NotBound { step, local } => Response::error(ErrorCode::NotBound, format!("{step} {local}")),
        ResolveError::UnknownType { step, type_id } => {
            Response::error(ErrorCode::UnknownType, format!("{step} {type_id}"))
        }
        ResolveError::DepthExceeded { max_depth } => Response::error(ErrorCode::Depth, max_depth.to_string()),
        ResolveError::NotFound { detail } => Response::error(ErrorCode::NotFound, detail.clone()),
        ResolveError::BadRequest { detail } => Response::error(ErrorCode::BadRequest, detail.clone()),
        ResolveError::Internal { detail } => Response::error(ErrorCode::Internal, detail.clone()),
        ResolveError::Transport { step, detail } => {
            Response::error(ErrorCode::Internal, format!("step {step}: transport: {detail}"))
        }
        ResolveError::MalformedSpec { type_id, reason } => {
            Response::error(ErrorCode::Internal, format!("malformed spec for {type_id}: {reason}"))
        }
    }
}

/// Client side: an error reply back into a resolution failure.
pub fn resolve_error(code: ErrorCode, detail: &str) -> ResolveError {
    let step_and = |detail: &str| -> Option<(usize, String)> {
        let (s, rest) = detail.split_once(' ')?;
        Some((s.parse().ok()?, rest.to_owned()))
    };
    match code {
        ErrorCode::NotBound => match step_and(detail) {
            Some((step, local)) => ResolveError::NotBound { step, local },
            None => ResolveError::NotBound {
                step: 0,
                local: detail.to_owned(),
            },
        },
        ErrorCode::UnknownType => match step_and(detail).and_then(|(s, t)| Some((s, TypeId::from_hex(&t).ok()?))) {
            Some((step, type_id)) => ResolveError::UnknownType { step, type_id },
            None => ResolveError::Internal {
                detail: format!("undecodable UNKNOWNTYPE detail {detail:?}"),
            },
        },
        ErrorCode::Depth => ResolveError::DepthExceeded {
            max_depth: detail.parse().unwrap_or(0),
        },
        ErrorCode::NotFound => ResolveError::NotFound {
            detail: detail.to_owned(),
        },
        ErrorCode::BadRequest => ResolveError::BadRequest {
            detail: detail.to_owned(),
        },
        ErrorCode::Internal => ResolveError::Internal {
            detail: detail.to_owned(),
        },
    }
}
