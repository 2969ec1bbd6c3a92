//! Consumer access patterns over the registry and measurement store.
//!
//! Three queries at entity granularity: the metric between two entities,
//! the metric from one entity to every entity of a kind, and the best
//! partner of a kind. Each resolves entities to their domains, the domain
//! pair to its designated theodolites (reversed fallback allowed and
//! flagged), and the theodolite pair to its latest stored value. Partner
//! discovery for producers lives on the registry itself.
//!
//! All results are ordered by entity id so runs are reproducible.

use serde::Serialize;

use crate::metrics::{Comparison, ConnectivityValue, MeasurementStore};
use crate::registry::{DomainId, EntityId, EntityKind, Registry, TheodoliteDesignation};

/// Errors raised by query evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("entities share domain {0}; connectivity is defined between distinct domains only")]
    SameDomain(DomainId),
}

impl QueryError {
    /// Canonical error name, used verbatim on the wire.
    pub fn name(&self) -> &'static str {
        match self {
            QueryError::UnknownEntity(_) => "UnknownEntity",
            QueryError::UnknownMetric(_) => "UnknownMetric",
            QueryError::SameDomain(_) => "SameDomain",
        }
    }
}

/// One query answer: the far-end entity, the value, and the designation
/// that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityMetricResult {
    pub entity: EntityId,
    pub value: ConnectivityValue,
    pub via: TheodoliteDesignationOut,
    pub reversed: bool,
}

/// Serializable designation row embedded in query results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheodoliteDesignationOut {
    pub domain_a: DomainId,
    pub domain_b: DomainId,
    pub theodolite_a: EntityId,
    pub theodolite_b: EntityId,
}

impl From<&TheodoliteDesignation> for TheodoliteDesignationOut {
    fn from(d: &TheodoliteDesignation) -> Self {
        TheodoliteDesignationOut {
            domain_a: d.domain_a.clone(),
            domain_b: d.domain_b.clone(),
            theodolite_a: d.theodolite_a.clone(),
            theodolite_b: d.theodolite_b.clone(),
        }
    }
}

/// The metric between two entities in distinct domains: latest value of
/// the designated theodolite stream for their domain pair, or `None` when
/// no designation or no measurement exists.
pub fn metric_between(
    registry: &Registry,
    store: &MeasurementStore,
    metric: &str,
    from: &str,
    to: &str,
) -> Result<Option<EntityMetricResult>, QueryError> {
    if store.metric(metric).is_none() {
        return Err(QueryError::UnknownMetric(metric.to_string()));
    }
    let from_entity = registry
        .entity(from)
        .ok_or_else(|| QueryError::UnknownEntity(from.to_string()))?;
    let to_entity = registry
        .entity(to)
        .ok_or_else(|| QueryError::UnknownEntity(to.to_string()))?;
    if from_entity.domain == to_entity.domain {
        return Err(QueryError::SameDomain(from_entity.domain.clone()));
    }
    let Some(lookup) =
        registry.lookup_designation(from_entity.domain.as_str(), to_entity.domain.as_str())
    else {
        return Ok(None);
    };
    let d = lookup.designation;
    let value = store
        .latest(metric, d.theodolite_a.as_str(), d.theodolite_b.as_str())
        .expect("metric checked above");
    Ok(value.map(|value| EntityMetricResult {
        entity: to_entity.id.clone(),
        value,
        via: d.into(),
        reversed: lookup.reversed,
    }))
}

/// The metric from one entity to every entity of the given kind in other
/// domains. Entities sharing a domain report the same value because they
/// resolve to the same theodolite stream. Sorted by entity id.
pub fn metric_to_kind(
    registry: &Registry,
    store: &MeasurementStore,
    metric: &str,
    from: &str,
    kind: EntityKind,
) -> Result<Vec<EntityMetricResult>, QueryError> {
    if store.metric(metric).is_none() {
        return Err(QueryError::UnknownMetric(metric.to_string()));
    }
    let from_entity = registry
        .entity(from)
        .ok_or_else(|| QueryError::UnknownEntity(from.to_string()))?;

    let mut results = Vec::new();
    // Registry iteration is id-ordered, so results come out sorted.
    for target in registry.entities() {
        if target.kind != kind || target.domain == from_entity.domain {
            continue;
        }
        let Some(lookup) =
            registry.lookup_designation(from_entity.domain.as_str(), target.domain.as_str())
        else {
            continue;
        };
        let d = lookup.designation;
        let value = store
            .latest(metric, d.theodolite_a.as_str(), d.theodolite_b.as_str())
            .expect("metric checked above");
        if let Some(value) = value {
            results.push(EntityMetricResult {
                entity: target.id.clone(),
                value,
                via: d.into(),
                reversed: lookup.reversed,
            });
        }
    }
    Ok(results)
}

/// The entity of the given kind with the best value under the metric's
/// polarity; ties broken by smallest entity id.
pub fn best_partner(
    registry: &Registry,
    store: &MeasurementStore,
    metric: &str,
    from: &str,
    kind: EntityKind,
) -> Result<Option<EntityMetricResult>, QueryError> {
    let candidates = metric_to_kind(registry, store, metric, from, kind)?;
    let mut best: Option<EntityMetricResult> = None;
    for candidate in candidates {
        match &best {
            None => best = Some(candidate),
            Some(current) => {
                // Candidates arrive in id order, so replacing only on a
                // strictly better value keeps the smallest id among ties.
                let cmp = candidate
                    .value
                    .compare(&current.value)
                    .expect("single metric per query");
                if cmp == Comparison::Better {
                    best = Some(candidate);
                }
            }
        }
    }
    Ok(best)
}
