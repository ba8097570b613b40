//! Relative naming: resources name each other by local names, and compound
//! names are resolved recursively by dispatching on resource type.
//!
//! - [`name`]: the canonical name syntax
//! - [`resource`]: resource descriptions and the type registry
//! - [`resolver`]: the generic recursive resolver and validity periods
//! - [`cache`]: validity-expiring name cache
//! - [`kit`]: sample resource types
//! - [`fixture`]: the in-process demo deployment

pub mod cache;
pub mod clock;
pub mod fixture;
pub mod kit;
pub mod name;
pub mod resolver;
pub mod resource;

pub use cache::{resolve_cached, CachingResolver, NameCache};
pub use clock::{Clock, ManualClock, SystemClock, Timestamp};
pub use name::{parse_name, parse_resource_literal, serialize_name, AttrValue, LocalName, Name, ParseError};
pub use resolver::{
    intersect, resolve, validity_from_duration, Resolution, ResolveContext, ResolveError, Resolver, Validity,
};
pub use resource::{derive_type_id, RegistryError, ResolverFactory, ResourceDescription, TypeId, TypeRegistry};
