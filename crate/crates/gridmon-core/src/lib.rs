//! Domain-based grid network monitoring.
//!
//! A grid is partitioned into monitoring domains of computing, storage,
//! and theodolite entities. Theodolites are the hosts that measure
//! network performance; one designated theodolite pair stands in for each
//! ordered domain pair, and its measurements answer connectivity queries
//! between any two entities of those domains. This crate provides:
//!
//! - [`registry`]: the entity/domain partition and the designation table;
//! - [`metrics`]: the metric catalog and measurement store, with totally
//!   ordered polarity-aware values;
//! - [`query`]: the consumer access patterns at entity granularity;
//! - [`validator`]: the domain properties that make theodolite
//!   measurements representative, plus mesh cost and coverage accounting;
//! - [`simulator`]: synthetic topologies with ground-truth costs for
//!   evaluating the whole pipeline;
//! - [`service`]: persistence, configuration, and a JSON-over-HTTP shell.

pub mod metrics;
pub mod query;
pub mod registry;
pub mod service;
pub mod simulator;
pub mod validator;

pub use metrics::{
    Comparison, ConnectivityValue, Measurement, MeasurementRecord, MeasurementStore,
    MetricDefinition, MetricsError, Polarity, ValueRange,
};
pub use query::{EntityMetricResult, QueryError};
pub use registry::{
    DesignationLookup, DesignationRecord, DomainId, EdgeEntity, EntityId, EntityKind, EntityRecord,
    Registry, RegistryError, TheodoliteDesignation,
};
pub use service::{Monitor, Service, ServiceConfig, ServiceError, ServiceHandle, StatePaths};
pub use simulator::{
    GroundTruth, RepresentativenessReport, SimulatorError, TopologySpec, SIM_METRIC,
};
pub use validator::{
    CoverageGap, CoverageReason, IntraDomainView, ValidationReport, ValidatorError,
    DEFAULT_EPSILON, DEFAULT_RHO,
};
