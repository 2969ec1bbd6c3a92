//! Entity/domain partition and theodolite designations.
//!
//! The registry holds two relations: which monitoring domain each edge
//! entity belongs to, and which theodolite pair measures each ordered
//! domain pair. Domains are created implicitly the first time an entity
//! is registered into them; they have no lifecycle of their own.
//!
//! Designations are directed. A lookup for `(a, b)` that misses falls
//! back to the designation stored for `(b, a)`, flagged `reversed`, so
//! callers can decide whether an asymmetric metric read backwards is
//! acceptable.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Errors raised by registry operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("invalid identifier {0:?}: must be non-empty with no whitespace")]
    InvalidId(String),
    #[error("entity {0} is already registered")]
    DuplicateEntity(EntityId),
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("entity {0} is not a theodolite")]
    NotATheodolite(EntityId),
    #[error("theodolite {theodolite} belongs to domain {actual}, not {stated}")]
    WrongDomain {
        theodolite: EntityId,
        stated: DomainId,
        actual: DomainId,
    },
    #[error("cannot designate domain {0} against itself")]
    SelfPair(DomainId),
    #[error("ordered domain pair ({0}, {1}) already has a designation")]
    AlreadyDesignated(DomainId, DomainId),
    #[error("no designation for ordered domain pair ({0}, {1})")]
    UnknownDesignation(DomainId, DomainId),
    #[error("entity {0} is referenced by the designation for ({1}, {2})")]
    EntityInUse(EntityId, DomainId, DomainId),
}

impl RegistryError {
    /// Canonical error name, used verbatim on the wire.
    pub fn name(&self) -> &'static str {
        match self {
            RegistryError::InvalidId(_) => "InvalidId",
            RegistryError::DuplicateEntity(_) => "DuplicateEntity",
            RegistryError::UnknownEntity(_) => "UnknownEntity",
            RegistryError::NotATheodolite(_) => "NotATheodolite",
            RegistryError::WrongDomain { .. } => "WrongDomain",
            RegistryError::SelfPair(_) => "SelfPair",
            RegistryError::AlreadyDesignated(_, _) => "AlreadyDesignated",
            RegistryError::UnknownDesignation(_, _) => "UnknownDesignation",
            RegistryError::EntityInUse(_, _, _) => "EntityInUse",
        }
    }
}

/// Identifier of an edge entity (an IP address or mnemonic name).
///
/// Non-empty, no whitespace, compared by exact byte equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String")]
pub struct EntityId(String);

impl EntityId {
    pub fn new(value: impl Into<String>) -> Result<Self, RegistryError> {
        let value = value.into();
        if value.is_empty() || value.chars().any(char::is_whitespace) {
            return Err(RegistryError::InvalidId(value));
        }
        Ok(EntityId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EntityId {
    type Error = RegistryError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        EntityId::new(value)
    }
}

impl Borrow<str> for EntityId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Identifier of a monitoring domain (an arbitrary non-empty string,
/// typically not an IP address).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String")]
pub struct DomainId(String);

impl DomainId {
    pub fn new(value: impl Into<String>) -> Result<Self, RegistryError> {
        let value = value.into();
        if value.is_empty() {
            return Err(RegistryError::InvalidId(value));
        }
        Ok(DomainId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for DomainId {
    type Error = RegistryError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        DomainId::new(value)
    }
}

impl Borrow<str> for DomainId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// What an edge entity does: computation, storage, or network measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Computing,
    Storage,
    Theodolite,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityKind::Computing => f.write_str("computing"),
            EntityKind::Storage => f.write_str("storage"),
            EntityKind::Theodolite => f.write_str("theodolite"),
        }
    }
}

/// An entity together with its kind and the one domain it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeEntity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub domain: DomainId,
}

/// Binding of one ordered theodolite pair to one ordered domain pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheodoliteDesignation {
    pub domain_a: DomainId,
    pub domain_b: DomainId,
    pub theodolite_a: EntityId,
    pub theodolite_b: EntityId,
}

/// A designation lookup result; `reversed` is set when only the opposite
/// orientation was stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignationLookup<'a> {
    pub designation: &'a TheodoliteDesignation,
    pub reversed: bool,
}

/// Line-oriented snapshot record for one entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityRecord {
    pub entity: EntityId,
    pub kind: EntityKind,
    pub domain: DomainId,
}

/// Line-oriented snapshot record for one designation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignationRecord {
    pub domain_a: DomainId,
    pub domain_b: DomainId,
    pub theodolite_a: EntityId,
    pub theodolite_b: EntityId,
}

impl From<&TheodoliteDesignation> for DesignationRecord {
    fn from(d: &TheodoliteDesignation) -> Self {
        DesignationRecord {
            domain_a: d.domain_a.clone(),
            domain_b: d.domain_b.clone(),
            theodolite_a: d.theodolite_a.clone(),
            theodolite_b: d.theodolite_b.clone(),
        }
    }
}

/// The entity/domain partition plus the designation table.
///
/// Mutations must be externally serialized (single writer); all read
/// accessors take `&self` and may run concurrently.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    entities: BTreeMap<EntityId, EdgeEntity>,
    domain_members: BTreeMap<DomainId, BTreeSet<EntityId>>,
    designations: BTreeMap<DomainId, BTreeMap<DomainId, TheodoliteDesignation>>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    /// Registers an entity into a domain, creating the domain on first
    /// reference. Fails without side effects if the id is taken.
    pub fn register_entity(
        &mut self,
        id: EntityId,
        kind: EntityKind,
        domain: DomainId,
    ) -> Result<EdgeEntity, RegistryError> {
        if self.entities.contains_key(&id) {
            return Err(RegistryError::DuplicateEntity(id));
        }
        let entity = EdgeEntity {
            id: id.clone(),
            kind,
            domain: domain.clone(),
        };
        self.domain_members
            .entry(domain)
            .or_default()
            .insert(id.clone());
        self.entities.insert(id, entity.clone());
        Ok(entity)
    }

    /// Removes an entity, rejecting the removal while any designation
    /// still references it.
    pub fn remove_entity(&mut self, id: &str) -> Result<EdgeEntity, RegistryError> {
        let entity = self
            .entities
            .get(id)
            .cloned()
            .ok_or_else(|| RegistryError::UnknownEntity(id.to_string()))?;
        if let Some(d) = self
            .designations()
            .find(|d| d.theodolite_a.as_str() == id || d.theodolite_b.as_str() == id)
        {
            return Err(RegistryError::EntityInUse(
                entity.id,
                d.domain_a.clone(),
                d.domain_b.clone(),
            ));
        }
        self.entities.remove(id);
        if let Some(members) = self.domain_members.get_mut(entity.domain.as_str()) {
            members.remove(id);
            if members.is_empty() {
                self.domain_members.remove(entity.domain.as_str());
            }
        }
        Ok(entity)
    }

    /// Designates the theodolite pair that measures the ordered domain
    /// pair `(domain_a, domain_b)`.
    pub fn designate_theodolites(
        &mut self,
        domain_a: DomainId,
        domain_b: DomainId,
        theodolite_a: EntityId,
        theodolite_b: EntityId,
    ) -> Result<TheodoliteDesignation, RegistryError> {
        if domain_a == domain_b {
            return Err(RegistryError::SelfPair(domain_a));
        }
        self.check_theodolite(&theodolite_a, &domain_a)?;
        self.check_theodolite(&theodolite_b, &domain_b)?;
        if self
            .designation_exact(domain_a.as_str(), domain_b.as_str())
            .is_some()
        {
            return Err(RegistryError::AlreadyDesignated(domain_a, domain_b));
        }
        let designation = TheodoliteDesignation {
            domain_a: domain_a.clone(),
            domain_b: domain_b.clone(),
            theodolite_a,
            theodolite_b,
        };
        self.designations
            .entry(domain_a)
            .or_default()
            .insert(domain_b, designation.clone());
        Ok(designation)
    }

    fn check_theodolite(&self, id: &EntityId, stated: &DomainId) -> Result<(), RegistryError> {
        let entity = self
            .entities
            .get(id)
            .ok_or_else(|| RegistryError::UnknownEntity(id.as_str().to_string()))?;
        if entity.kind != EntityKind::Theodolite {
            return Err(RegistryError::NotATheodolite(id.clone()));
        }
        if &entity.domain != stated {
            return Err(RegistryError::WrongDomain {
                theodolite: id.clone(),
                stated: stated.clone(),
                actual: entity.domain.clone(),
            });
        }
        Ok(())
    }

    /// Removes the designation for the exact ordered pair `(a, b)`.
    pub fn remove_designation(
        &mut self,
        a: &str,
        b: &str,
    ) -> Result<TheodoliteDesignation, RegistryError> {
        let unknown =
            || RegistryError::UnknownDesignation(DomainId(a.to_string()), DomainId(b.to_string()));
        let inner = self.designations.get_mut(a).ok_or_else(unknown)?;
        let removed = inner.remove(b).ok_or_else(unknown)?;
        if inner.is_empty() {
            self.designations.remove(a);
        }
        Ok(removed)
    }

    fn designation_exact(&self, a: &str, b: &str) -> Option<&TheodoliteDesignation> {
        self.designations.get(a)?.get(b)
    }

    /// Resolves the designation for `(a, b)`, falling back to the stored
    /// `(b, a)` designation flagged as reversed.
    pub fn lookup_designation(&self, a: &str, b: &str) -> Option<DesignationLookup<'_>> {
        if let Some(designation) = self.designation_exact(a, b) {
            return Some(DesignationLookup {
                designation,
                reversed: false,
            });
        }
        self.designation_exact(b, a)
            .map(|designation| DesignationLookup {
                designation,
                reversed: true,
            })
    }

    /// The domain the entity was registered into.
    pub fn domain_of(&self, entity: &str) -> Result<&DomainId, RegistryError> {
        self.entities
            .get(entity)
            .map(|e| &e.domain)
            .ok_or_else(|| RegistryError::UnknownEntity(entity.to_string()))
    }

    /// Partner discovery for a producer theodolite: every theodolite that
    /// appears as the B side of a designation whose A side is `theodolite`.
    /// Sorted by id, duplicates removed.
    pub fn partner_theodolites(&self, theodolite: &str) -> Result<Vec<EntityId>, RegistryError> {
        let entity = self
            .entities
            .get(theodolite)
            .ok_or_else(|| RegistryError::UnknownEntity(theodolite.to_string()))?;
        if entity.kind != EntityKind::Theodolite {
            return Err(RegistryError::NotATheodolite(entity.id.clone()));
        }
        let partners: BTreeSet<EntityId> = self
            .designations()
            .filter(|d| d.theodolite_a.as_str() == theodolite)
            .map(|d| d.theodolite_b.clone())
            .collect();
        Ok(partners.into_iter().collect())
    }

    /// True if some designation carries `(a, b)` as its theodolite pair,
    /// in exactly that orientation.
    pub fn is_designated_theodolite_pair(&self, a: &str, b: &str) -> bool {
        self.designations()
            .any(|d| d.theodolite_a.as_str() == a && d.theodolite_b.as_str() == b)
    }

    pub fn entity(&self, id: &str) -> Option<&EdgeEntity> {
        self.entities.get(id)
    }

    /// All entities, ordered by id.
    pub fn entities(&self) -> impl Iterator<Item = &EdgeEntity> {
        self.entities.values()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    /// All designations, ordered by (domain_a, domain_b).
    pub fn designations(&self) -> impl Iterator<Item = &TheodoliteDesignation> {
        self.designations.values().flat_map(|inner| inner.values())
    }

    pub fn designation_count(&self) -> usize {
        self.designations.values().map(BTreeMap::len).sum()
    }

    /// All domains that currently have at least one member, sorted.
    pub fn domains(&self) -> impl Iterator<Item = &DomainId> {
        self.domain_members.keys()
    }

    pub fn domain_count(&self) -> usize {
        self.domain_members.len()
    }

    /// Members of one domain, ordered by id; empty if the domain is unknown.
    pub fn members(&self, domain: &str) -> impl Iterator<Item = &EdgeEntity> {
        self.domain_members
            .get(domain)
            .into_iter()
            .flat_map(|ids| ids.iter())
            .filter_map(|id| self.entities.get(id))
    }

    /// Snapshot rows for every entity, ordered by id.
    pub fn entity_records(&self) -> impl Iterator<Item = EntityRecord> + '_ {
        self.entities.values().map(|e| EntityRecord {
            entity: e.id.clone(),
            kind: e.kind,
            domain: e.domain.clone(),
        })
    }

    /// Snapshot rows for every designation, ordered by (domain_a, domain_b).
    pub fn designation_records(&self) -> impl Iterator<Item = DesignationRecord> + '_ {
        self.designations().map(DesignationRecord::from)
    }
}
