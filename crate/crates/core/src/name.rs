//! Names and local names in their canonical textual syntax.
//!
//! ```text
//! name       ::= "(" local-name ( " "+ local-name )* ")"
//! local-name ::= token | token "[" pair ( "," pair )* "]"
//! pair       ::= token "=" value
//! value      ::= token | name | resource
//! resource   ::= "[" hex{64} " " hex* "]"
//! token      ::= [A-Za-z0-9._-]+
//! ```
//!
//! Serialization always emits a single space between local names and
//! lowercase hex inside resource literals.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::resource::{ResourceDescription, TypeId};

/// Errors produced while parsing or constructing names.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {reason}")]
    Syntax { position: usize, reason: String },
    #[error("a name must contain at least one local name")]
    EmptyName,
}

impl ParseError {
    fn syntax(position: usize, reason: impl Into<String>) -> Self {
        ParseError::Syntax {
            position,
            reason: reason.into(),
        }
    }
}

pub fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-')
}

pub fn is_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_token_char)
}

/// The value half of an attribute-value pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AttrValue {
    String(String),
    Name(Name),
    Resource(ResourceDescription),
}

/// A primary name with an ordered, possibly empty, set of attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalName {
    primary: String,
    attributes: Vec<(String, AttrValue)>,
}

impl LocalName {
    pub fn new(primary: impl Into<String>) -> Result<Self, ParseError> {
        let primary = primary.into();
        if !is_token(&primary) {
            return Err(ParseError::syntax(0, format!("invalid primary name {primary:?}")));
        }
        Ok(LocalName {
            primary,
            attributes: Vec::new(),
        })
    }

    /// Appends an attribute. Labels must be tokens and unique within the local name,
    /// and string values must be tokens.
    pub fn with_attr(mut self, label: impl Into<String>, value: AttrValue) -> Result<Self, ParseError> {
        self.push_attr(label.into(), value)?;
        Ok(self)
    }

    fn push_attr(&mut self, label: String, value: AttrValue) -> Result<(), ParseError> {
        if !is_token(&label) {
            return Err(ParseError::syntax(0, format!("invalid attribute label {label:?}")));
        }
        if let AttrValue::String(s) = &value {
            if !is_token(s) {
                return Err(ParseError::syntax(0, format!("invalid string value {s:?}")));
            }
        }
        if self.attributes.iter().any(|(l, _)| *l == label) {
            return Err(ParseError::syntax(0, format!("duplicate attribute label {label:?}")));
        }
        self.attributes.push((label, value));
        Ok(())
    }

    pub fn primary(&self) -> &str {
        &self.primary
    }

    pub fn attributes(&self) -> &[(String, AttrValue)] {
        &self.attributes
    }

    pub fn attr(&self, label: &str) -> Option<&AttrValue> {
        self.attributes.iter().find(|(l, _)| l == label).map(|(_, v)| v)
    }

    /// True if any attribute still holds a name value.
    pub fn has_name_values(&self) -> bool {
        self.attributes
            .iter()
            .any(|(_, v)| matches!(v, AttrValue::Name(_)))
    }

    /// Rebuilds the local name with each attribute value passed through `f`,
    /// preserving labels and order.
    pub fn try_map_values<E>(
        &self,
        mut f: impl FnMut(&AttrValue) -> Result<AttrValue, E>,
    ) -> Result<LocalName, E> {
        let attributes = self
            .attributes
            .iter()
            .map(|(l, v)| Ok((l.clone(), f(v)?)))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(LocalName {
            primary: self.primary.clone(),
            attributes,
        })
    }
}

impl From<&str> for LocalName {
    /// Panics if `s` is not a token; intended for literals in code and tests.
    fn from(s: &str) -> Self {
        LocalName::new(s).expect("local name literal must be a token")
    }
}

/// A non-empty chain of local names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Name(Vec<LocalName>);

impl Name {
    pub fn new(locals: Vec<LocalName>) -> Result<Self, ParseError> {
        if locals.is_empty() {
            return Err(ParseError::EmptyName);
        }
        Ok(Name(locals))
    }

    pub fn single(local: LocalName) -> Self {
        Name(vec![local])
    }

    /// Builds a name of plain local names. Panics on non-token input.
    pub fn of(primaries: &[&str]) -> Self {
        Name::new(primaries.iter().map(|p| LocalName::from(*p)).collect())
            .expect("name literal must be non-empty")
    }

    pub fn locals(&self) -> &[LocalName] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn head(&self) -> &LocalName {
        &self.0[0]
    }

    /// The name with the first local name removed, or `None` for a single local name.
    pub fn tail(&self) -> Option<Name> {
        if self.0.len() > 1 {
            Some(Name(self.0[1..].to_vec()))
        } else {
            None
        }
    }

    /// The suffix starting at local name `index`.
    pub fn suffix(&self, index: usize) -> Option<Name> {
        (index < self.0.len()).then(|| Name(self.0[index..].to_vec()))
    }

    /// True if any local name at any depth carries a name value.
    pub fn has_name_values(&self) -> bool {
        self.0.iter().any(LocalName::has_name_values)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, local) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{local}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for LocalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.primary)?;
        if self.attributes.is_empty() {
            return Ok(());
        }
        f.write_str("[")?;
        for (i, (label, value)) in self.attributes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{label}={value}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::String(s) => f.write_str(s),
            AttrValue::Name(n) => write!(f, "{n}"),
            AttrValue::Resource(r) => f.write_str(&resource_literal(r)),
        }
    }
}

impl FromStr for Name {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_name(s)
    }
}

pub fn serialize_name(name: &Name) -> String {
    name.to_string()
}

/// Textual literal for a resource description: `[<64 hex> <hex>]`.
pub fn resource_literal(desc: &ResourceDescription) -> String {
    format!("[{} {}]", hex::encode(desc.type_id().as_bytes()), hex::encode(desc.spec()))
}

pub fn parse_name(text: &str) -> Result<Name, ParseError> {
    let mut p = Parser::new(text);
    let name = p.name()?;
    p.expect_end()?;
    Ok(name)
}

pub fn parse_resource_literal(text: &str) -> Result<ResourceDescription, ParseError> {
    let mut p = Parser::new(text);
    let desc = p.resource()?;
    p.expect_end()?;
    Ok(desc)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected {want:?}, found {c:?}"))),
            None => Err(self.err(format!("expected {want:?}, found end of input"))),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => Err(self.err(format!("unexpected trailing {c:?}"))),
        }
    }

    fn err(&self, reason: impl Into<String>) -> ParseError {
        ParseError::syntax(self.pos, reason)
    }

    fn name(&mut self) -> Result<Name, ParseError> {
        self.expect('(')?;
        if self.peek() == Some(')') {
            return Err(ParseError::EmptyName);
        }
        let mut locals = vec![self.local_name()?];
        loop {
            match self.peek() {
                Some(')') => {
                    self.pos += 1;
                    return Ok(Name(locals));
                }
                Some(' ') => {
                    while self.peek() == Some(' ') {
                        self.pos += 1;
                    }
                    locals.push(self.local_name()?);
                }
                Some(c) => return Err(self.err(format!("expected ' ' or ')', found {c:?}"))),
                None => return Err(self.err("unbalanced parenthesis")),
            }
        }
    }

    fn local_name(&mut self) -> Result<LocalName, ParseError> {
        let primary = self.token("primary name")?;
        let mut local = LocalName {
            primary,
            attributes: Vec::new(),
        };
        if self.peek() == Some('[') {
            self.pos += 1;
            loop {
                let at = self.pos;
                let label = self.token("attribute label")?;
                self.expect('=')?;
                let value = self.value()?;
                if local.attr(&label).is_some() {
                    return Err(ParseError::syntax(at, format!("duplicate attribute label {label:?}")));
                }
                local.attributes.push((label, value));
                match self.bump() {
                    Some(',') => continue,
                    Some(']') => break,
                    Some(c) => {
                        self.pos -= c.len_utf8();
                        return Err(self.err(format!("expected ',' or ']', found {c:?}")));
                    }
                    None => return Err(self.err("unterminated attribute list")),
                }
            }
        }
        Ok(local)
    }

    fn value(&mut self) -> Result<AttrValue, ParseError> {
        match self.peek() {
            Some('(') => Ok(AttrValue::Name(self.name()?)),
            Some('[') => Ok(AttrValue::Resource(self.resource()?)),
            _ => Ok(AttrValue::String(self.token("string value")?)),
        }
    }

    fn token(&mut self, what: &str) -> Result<String, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_token_char(c)) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.peek() {
                Some(c) => self.err(format!("expected {what}, found {c:?}")),
                None => self.err(format!("expected {what}, found end of input")),
            });
        }
        Ok(self.src[start..self.pos].to_owned())
    }

    fn hex_run(&mut self) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit()) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn resource(&mut self) -> Result<ResourceDescription, ParseError> {
        self.expect('[')?;
        let id_at = self.pos;
        let id_hex = self.hex_run();
        if id_hex.len() != 64 {
            return Err(ParseError::syntax(
                id_at,
                format!("type identifier must be 64 hex characters, found {}", id_hex.len()),
            ));
        }
        self.expect(' ')?;
        let spec_at = self.pos;
        let spec_hex = self.hex_run();
        if !spec_hex.len().is_multiple_of(2) {
            return Err(ParseError::syntax(spec_at, "odd number of hex characters in description"));
        }
        self.expect(']')?;
        let mut id = [0u8; 32];
        hex::decode_to_slice(id_hex, &mut id).map_err(|e| ParseError::syntax(id_at, e.to_string()))?;
        let spec = hex::decode(spec_hex).map_err(|e| ParseError::syntax(spec_at, e.to_string()))?;
        Ok(ResourceDescription::new(TypeId::from_bytes(id), spec))
    }
}
