//! Resource descriptions and the type registry that turns a description into
//! something that can resolve names.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::resolver::{ResolveError, Resolver};

/// A 256-bit resource type identifier.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId([u8; 32]);

impl TypeId {
    pub const LEN: usize = 32;

    pub const fn from_bytes(bytes: [u8; 32]) -> Self {
        TypeId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(TypeId(out))
    }
}

impl fmt::Debug for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TypeId({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Derives a type identifier as the SHA-256 digest of a descriptor string.
pub fn derive_type_id(descriptor: &[u8]) -> TypeId {
    let digest = Sha256::digest(descriptor);
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    TypeId(out)
}

/// A type identifier plus an opaque specification interpreted per type.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ResourceDescription {
    type_id: TypeId,
    spec: Vec<u8>,
}

impl ResourceDescription {
    pub fn new(type_id: TypeId, spec: impl Into<Vec<u8>>) -> Self {
        ResourceDescription {
            type_id,
            spec: spec.into(),
        }
    }

    pub fn type_id(&self) -> TypeId {
        self.type_id
    }

    pub fn spec(&self) -> &[u8] {
        &self.spec
    }

    /// Binary form: 32 identifier bytes followed by the specification bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TypeId::LEN + self.spec.len());
        out.extend_from_slice(&self.type_id.0);
        out.extend_from_slice(&self.spec);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() < TypeId::LEN {
            return None;
        }
        let (id, spec) = bytes.split_at(TypeId::LEN);
        let mut type_id = [0u8; 32];
        type_id.copy_from_slice(id);
        Some(ResourceDescription::new(TypeId(type_id), spec))
    }
}

impl fmt::Debug for ResourceDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResourceDescription")
            .field("type_id", &self.type_id)
            .field("spec", &String::from_utf8_lossy(&self.spec))
            .finish()
    }
}

/// Builds a resolver from the specification bytes of one resource type.
pub trait ResolverFactory: Send + Sync {
    fn build(&self, spec: &[u8]) -> Result<Arc<dyn Resolver>, String>;
}

impl<F> ResolverFactory for F
where
    F: Fn(&[u8]) -> Result<Arc<dyn Resolver>, String> + Send + Sync,
{
    fn build(&self, spec: &[u8]) -> Result<Arc<dyn Resolver>, String> {
        self(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("resource type {0} is already registered")]
    DuplicateType(TypeId),
}

/// Maps type identifiers to resolver factories.
///
/// Whether an element can resolve names from a resource and whether it can
/// use that resource are tracked independently.
#[derive(Default, Clone)]
pub struct TypeRegistry {
    factories: HashMap<TypeId, Arc<dyn ResolverFactory>>,
    usable: HashSet<TypeId>,
}

impl TypeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, type_id: TypeId, factory: Arc<dyn ResolverFactory>) -> Result<(), RegistryError> {
        if self.factories.contains_key(&type_id) {
            return Err(RegistryError::DuplicateType(type_id));
        }
        self.factories.insert(type_id, factory);
        Ok(())
    }

    pub fn register_fn<F>(&mut self, type_id: TypeId, f: F) -> Result<(), RegistryError>
    where
        F: Fn(&[u8]) -> Result<Arc<dyn Resolver>, String> + Send + Sync + 'static,
    {
        self.register(type_id, Arc::new(f))
    }

    /// Drops a type; returns whether it was present.
    pub fn unregister(&mut self, type_id: TypeId) -> bool {
        self.usable.remove(&type_id);
        self.factories.remove(&type_id).is_some()
    }

    pub fn lookup(&self, type_id: TypeId) -> Option<&Arc<dyn ResolverFactory>> {
        self.factories.get(&type_id)
    }

    pub fn can_resolve(&self, type_id: TypeId) -> bool {
        self.factories.contains_key(&type_id)
    }

    pub fn mark_usable(&mut self, type_id: TypeId) {
        self.usable.insert(type_id);
    }

    pub fn can_use(&self, type_id: TypeId) -> bool {
        self.usable.contains(&type_id)
    }

    pub fn len(&self) -> usize {
        self.factories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factories.is_empty()
    }

    /// Builds a resolver for `desc`, or reports that its type is unknown here.
    ///
    /// Errors carry step 0; the engine restamps them with the real step.
    pub fn instantiate(&self, desc: &ResourceDescription) -> Result<Arc<dyn Resolver>, ResolveError> {
        let factory = self.lookup(desc.type_id()).ok_or(ResolveError::UnknownType {
            step: 0,
            type_id: desc.type_id(),
        })?;
        factory.build(desc.spec()).map_err(|reason| ResolveError::MalformedSpec {
            type_id: desc.type_id(),
            reason,
        })
    }
}

impl fmt::Debug for TypeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut ids: Vec<_> = self.factories.keys().collect();
        ids.sort();
        f.debug_struct("TypeRegistry")
            .field("types", &ids)
            .field("usable", &self.usable.len())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::LocalName;
    use crate::clock::Clock;
    use crate::resolver::Resolution;

    struct Nothing;
    impl Resolver for Nothing {
        fn resolve_local(&self, _: &LocalName, _: &dyn Clock) -> Result<Option<Resolution>, ResolveError> {
            Ok(None)
        }
    }

    #[test]
    fn empty_descriptor_digest() {
        assert_eq!(
            derive_type_id(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn abc_digest() {
        // FIPS 180-2 test vector
        assert_eq!(
            derive_type_id(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn register_lookup_and_duplicate() {
        let mut reg = TypeRegistry::new();
        let id = derive_type_id(b"test.nothing");
        assert!(reg.lookup(id).is_none());
        reg.register_fn(id, |_| Ok(Arc::new(Nothing) as Arc<dyn Resolver>)).unwrap();
        assert!(reg.lookup(id).is_some());
        assert_eq!(
            reg.register_fn(id, |_| Ok(Arc::new(Nothing) as Arc<dyn Resolver>)),
            Err(RegistryError::DuplicateType(id))
        );
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn instantiate_miss_and_malformed() {
        let mut reg = TypeRegistry::new();
        let picky = derive_type_id(b"test.picky");
        reg.register_fn(picky, |spec| {
            if spec.is_empty() {
                Err("empty".into())
            } else {
                Ok(Arc::new(Nothing) as Arc<dyn Resolver>)
            }
        })
        .unwrap();
        let unknown = ResourceDescription::new(TypeId::from_bytes([7; 32]), vec![]);
        assert!(matches!(reg.instantiate(&unknown), Err(ResolveError::UnknownType { .. })));
        let bad = ResourceDescription::new(picky, vec![]);
        assert!(matches!(reg.instantiate(&bad), Err(ResolveError::MalformedSpec { .. })));
        assert!(reg.instantiate(&ResourceDescription::new(picky, b"x".to_vec())).is_ok());
    }

    #[test]
    fn usability_is_independent() {
        let mut reg = TypeRegistry::new();
        let id = derive_type_id(b"test.usable");
        reg.mark_usable(id);
        assert!(reg.can_use(id));
        assert!(!reg.can_resolve(id));
    }

    #[test]
    fn binary_encoding() {
        let d = ResourceDescription::new(TypeId::from_bytes([1; 32]), b"spec".to_vec());
        let bytes = d.to_bytes();
        assert_eq!(bytes.len(), 36);
        assert_eq!(ResourceDescription::from_bytes(&bytes), Some(d));
        assert_eq!(ResourceDescription::from_bytes(&[0; 31]), None);
    }
}
