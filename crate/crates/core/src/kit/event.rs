//! Static text format for events.
//!
//! One `key=value` per line, LF-separated, in this order when encoded:
//!
//! ```text
//! tag=<token>                 (zero or more)
//! moderator=<32 hex>          (user id)
//! location=[<64 hex> <hex>]   (location resource literal)
//! file.<token>=<url>          (zero or more)
//! start=<epoch ms>
//! end=<epoch ms>
//! ```
//!
//! Decoding accepts the keys in any order.

use std::fmt::Write as _;

use crate::clock::Timestamp;
use crate::kit::EntityId;
use crate::name::{is_token, parse_resource_literal, resource_literal};
use crate::resource::ResourceDescription;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    pub tags: Vec<String>,
    pub moderator: EntityId,
    pub location: ResourceDescription,
    pub files: Vec<(String, String)>,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl EventSpec {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    pub fn encode(&self) -> String {
        let mut out = String::new();
        for tag in &self.tags {
            let _ = writeln!(out, "tag={tag}");
        }
        let _ = writeln!(out, "moderator={}", self.moderator);
        let _ = writeln!(out, "location={}", resource_literal(&self.location));
        for (name, url) in &self.files {
            let _ = writeln!(out, "file.{name}={url}");
        }
        let _ = writeln!(out, "start={}", self.start.0);
        let _ = write!(out, "end={}", self.end.0);
        out
    }

    pub fn decode(text: &str) -> Result<EventSpec, String> {
        let mut tags = Vec::new();
        let mut files = Vec::new();
        let mut moderator = None;
        let mut location = None;
        let mut start = None;
        let mut end = None;
        for (n, line) in text.split('\n').enumerate() {
            let lineno = n + 1;
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {lineno}: expected key=value"))?;
            match key {
                "tag" => {
                    if !is_token(value) {
                        return Err(format!("line {lineno}: tag {value:?} is not a token"));
                    }
                    tags.push(value.to_owned());
                }
                "moderator" => {
                    let id = EntityId::from_hex(value).map_err(|e| format!("line {lineno}: moderator: {e}"))?;
                    set_once(&mut moderator, id, "moderator", lineno)?;
                }
                "location" => {
                    let desc = parse_resource_literal(value).map_err(|e| format!("line {lineno}: location: {e}"))?;
                    set_once(&mut location, desc, "location", lineno)?;
                }
                "start" => set_once(&mut start, parse_ms(value, lineno)?, "start", lineno)?,
                "end" => set_once(&mut end, parse_ms(value, lineno)?, "end", lineno)?,
                _ => match key.strip_prefix("file.") {
                    Some(name) if is_token(name) => {
                        if value.is_empty() || value.contains(char::is_whitespace) {
                            return Err(format!("line {lineno}: bad URL for file {name}"));
                        }
                        if files.iter().any(|(n, _)| n == name) {
                            return Err(format!("line {lineno}: duplicate file {name}"));
                        }
                        files.push((name.to_owned(), value.to_owned()));
                    }
                    _ => return Err(format!("line {lineno}: unknown key {key:?}")),
                },
            }
        }
        let start = start.ok_or("missing start")?;
        let end = end.ok_or("missing end")?;
        if start >= end {
            return Err("event start must precede end".into());
        }
        Ok(EventSpec {
            tags,
            moderator: moderator.ok_or("missing moderator")?,
            location: location.ok_or("missing location")?,
            files,
            start,
            end,
        })
    }

    /// URL prefix shared by every file entry, where each URL is that prefix
    /// followed by the entry's own name.
    pub fn common_file_prefix(&self) -> Option<&str> {
        let mut prefix: Option<&str> = None;
        for (name, url) in &self.files {
            let p = url.strip_suffix(name.as_str())?;
            if p.is_empty() {
                return None;
            }
            match prefix {
                None => prefix = Some(p),
                Some(q) if q == p => {}
                Some(_) => return None,
            }
        }
        prefix
    }
}

fn set_once<T>(slot: &mut Option<T>, value: T, key: &str, lineno: usize) -> Result<(), String> {
    if slot.is_some() {
        return Err(format!("line {lineno}: duplicate {key}"));
    }
    *slot = Some(value);
    Ok(())
}

fn parse_ms(value: &str, lineno: usize) -> Result<Timestamp, String> {
    value
        .parse::<i64>()
        .map(Timestamp)
        .map_err(|e| format!("line {lineno}: {e}"))
}
