//! The generic recursive resolution engine.
//!
//! A compound name is resolved against an initial resource in three phases:
//!
//! 1. every name value appearing in an attribute, at any position, is resolved
//!    against the initial resource and replaced by the resulting description;
//! 2. the initial resource resolves the head local name to an intermediate
//!    resource;
//! 3. the intermediate resource's type is looked up in the registry and the
//!    tail is handed to it, which repeats the procedure as if it were the
//!    initial resource.
//!
//! The returned description is the last resolver's answer, untouched. Its
//! validity is the intersection (earliest expiry) of every step that went into
//! it, including the attribute resolutions.

use std::borrow::Cow;
use std::sync::Arc;

use thiserror::Error;

use crate::clock::{Clock, Timestamp};
use crate::name::{AttrValue, LocalName, Name};
use crate::resource::{ResourceDescription, TypeId, TypeRegistry};

pub const DEFAULT_MAX_DEPTH: usize = 32;

/// The instant after which a mapping is no longer believed valid.
///
/// A mapping is live while `now < expires_at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Validity {
    pub expires_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("validity duration must be non-negative, got {0} ms")]
pub struct NegativeDuration(pub i64);

impl Validity {
    pub fn until(expires_at: Timestamp) -> Self {
        Validity { expires_at }
    }

    pub fn is_live(&self, now: Timestamp) -> bool {
        now < self.expires_at
    }

    /// Milliseconds left at `now`; zero once expired.
    pub fn remaining(&self, now: Timestamp) -> i64 {
        (self.expires_at.0 - now.0).max(0)
    }
}

pub fn intersect(a: Validity, b: Validity) -> Validity {
    a.min(b)
}

pub fn validity_from_duration(now: Timestamp, duration_ms: i64) -> Result<Validity, NegativeDuration> {
    if duration_ms < 0 {
        return Err(NegativeDuration(duration_ms));
    }
    Ok(Validity::until(now.plus(duration_ms)))
}

/// A description together with how long the mapping that produced it holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Resolution {
    pub description: ResourceDescription,
    pub validity: Validity,
}

impl Resolution {
    pub fn new(description: ResourceDescription, validity: Validity) -> Self {
        Resolution { description, validity }
    }

    /// A resolution valid for `duration_ms` from the clock's current instant.
    pub fn for_duration(description: ResourceDescription, clock: &dyn Clock, duration_ms: i64) -> Self {
        let validity = validity_from_duration(clock.now(), duration_ms.max(0)).expect("clamped");
        Resolution { description, validity }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("step {step}: no binding for {local}")]
    NotBound { step: usize, local: String },
    #[error("step {step}: cannot resolve names from resource type {type_id}")]
    UnknownType { step: usize, type_id: TypeId },
    #[error("resolution exceeded {max_depth} steps")]
    DepthExceeded { max_depth: usize },
    #[error("step {step}: transport failure: {detail}")]
    Transport { step: usize, detail: String },
    #[error("malformed specification for type {type_id}: {reason}")]
    MalformedSpec { type_id: TypeId, reason: String },
    #[error("not found: {detail}")]
    NotFound { detail: String },
    #[error("bad request: {detail}")]
    BadRequest { detail: String },
    #[error("internal error: {detail}")]
    Internal { detail: String },
}

impl ResolveError {
    pub fn transport(detail: impl Into<String>) -> Self {
        ResolveError::Transport {
            step: 0,
            detail: detail.into(),
        }
    }

    /// Shifts step indices by `by`, for errors reported relative to a suffix.
    pub fn offset(self, by: usize) -> Self {
        match self {
            ResolveError::NotBound { step, local } => ResolveError::NotBound { step: step + by, local },
            ResolveError::UnknownType { step, type_id } => ResolveError::UnknownType {
                step: step + by,
                type_id,
            },
            ResolveError::Transport { step, detail } => ResolveError::Transport {
                step: step + by,
                detail,
            },
            other => other,
        }
    }

    pub fn step(&self) -> Option<usize> {
        match self {
            ResolveError::NotBound { step, .. }
            | ResolveError::UnknownType { step, .. }
            | ResolveError::Transport { step, .. } => Some(*step),
            _ => None,
        }
    }
}

/// Something that resolves local names: a resource itself, or resolution code
/// acting on its behalf.
pub trait Resolver: Send + Sync {
    /// Resolves one local name. Attribute values are never name values here.
    /// `Ok(None)` means the local name is not bound.
    fn resolve_local(&self, local: &LocalName, clock: &dyn Clock) -> Result<Option<Resolution>, ResolveError>;

    /// Resources that resolve compound names themselves (over the network,
    /// typically) take the whole remaining name here instead of being walked
    /// one local name at a time.
    fn resolve_remote(&self, _name: &Name, _clock: &dyn Clock) -> Option<Result<Resolution, ResolveError>> {
        None
    }

    fn identity(&self) -> Option<String> {
        None
    }
}

/// Everything one resolution needs besides the name.
#[derive(Clone)]
pub struct ResolveContext {
    pub registry: Arc<TypeRegistry>,
    pub clock: Arc<dyn Clock>,
    pub max_depth: usize,
    pub initial: Arc<dyn Resolver>,
}

impl ResolveContext {
    pub fn new(registry: Arc<TypeRegistry>, clock: Arc<dyn Clock>, initial: Arc<dyn Resolver>) -> Self {
        ResolveContext {
            registry,
            clock,
            max_depth: DEFAULT_MAX_DEPTH,
            initial,
        }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        assert!(max_depth > 0, "max_depth must be positive");
        self.max_depth = max_depth;
        self
    }

    pub fn with_initial(&self, initial: Arc<dyn Resolver>) -> Self {
        ResolveContext {
            initial,
            ..self.clone()
        }
    }
}

struct Budget {
    used: usize,
    max: usize,
}

impl Budget {
    fn spend(&mut self) -> Result<(), ResolveError> {
        if self.used >= self.max {
            return Err(ResolveError::DepthExceeded { max_depth: self.max });
        }
        self.used += 1;
        Ok(())
    }
}

/// Resolves `name` from `ctx.initial`.
pub fn resolve(ctx: &ResolveContext, name: &Name) -> Result<Resolution, ResolveError> {
    let mut budget = Budget {
        used: 0,
        max: ctx.max_depth,
    };
    resolve_in(ctx, name, &mut budget)
}

fn resolve_in(ctx: &ResolveContext, name: &Name, budget: &mut Budget) -> Result<Resolution, ResolveError> {
    let (literal, attr_validity) = substitute(ctx, name, budget)?;
    let result = walk(ctx, &literal, budget)?;
    Ok(match attr_validity {
        Some(v) => Resolution::new(result.description, intersect(result.validity, v)),
        None => result,
    })
}

/// Replaces every name value with the description it resolves to from the
/// initial resource. Returns the rewritten name and the intersected validity of
/// the attribute resolutions, if there were any.
fn substitute(ctx: &ResolveContext, name: &Name, budget: &mut Budget) -> Result<(Name, Option<Validity>), ResolveError> {
    if !name.has_name_values() {
        return Ok((name.clone(), None));
    }
    let mut validity: Option<Validity> = None;
    let locals = name
        .locals()
        .iter()
        .map(|local| {
            local.try_map_values(|value| match value {
                AttrValue::Name(nested) => {
                    let r = resolve_in(ctx, nested, budget)?;
                    validity = Some(validity.map_or(r.validity, |v| intersect(v, r.validity)));
                    Ok(AttrValue::Resource(r.description))
                }
                other => Ok(other.clone()),
            })
        })
        .collect::<Result<Vec<_>, ResolveError>>()?;
    let literal = Name::new(locals).expect("same length as a valid name");
    Ok((literal, validity))
}

fn walk(ctx: &ResolveContext, name: &Name, budget: &mut Budget) -> Result<Resolution, ResolveError> {
    let clock = ctx.clock.as_ref();
    let mut current = Arc::clone(&ctx.initial);
    let mut validity: Option<Validity> = None;
    let mut index = 0;
    loop {
        budget.spend()?;
        let rest: Cow<'_, Name> = if index == 0 {
            Cow::Borrowed(name)
        } else {
            Cow::Owned(name.suffix(index).expect("index within name"))
        };
        if let Some(delegated) = current.resolve_remote(&rest, clock) {
            let r = delegated.map_err(|e| e.offset(index))?;
            let v = validity.map_or(r.validity, |v| intersect(v, r.validity));
            return Ok(Resolution::new(r.description, v));
        }
        let local = &name.locals()[index];
        let step = current
            .resolve_local(local, clock)
            .map_err(|e| e.offset(index))?
            .ok_or_else(|| ResolveError::NotBound {
                step: index,
                local: local.to_string(),
            })?;
        let v = validity.map_or(step.validity, |v| intersect(v, step.validity));
        validity = Some(v);
        index += 1;
        if index == name.len() {
            return Ok(Resolution::new(step.description, v));
        }
        current = ctx.registry.instantiate(&step.description).map_err(|e| e.offset(index))?;
    }
}
