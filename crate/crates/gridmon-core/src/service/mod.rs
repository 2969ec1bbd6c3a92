//! Network- and file-facing shell: configuration, shared state, the
//! JSON-over-HTTP endpoints, and snapshot persistence.
//!
//! The service publishes the registry and measurement store to producers
//! and consumers. Registry mutations serialize behind a write lock while
//! queries share read locks; each query sees a consistent snapshot of the
//! state it reads. Snapshotting clones the state under read locks and
//! writes files with no locks held.

pub mod http;
pub mod persist;

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::metrics::{
    Measurement, MeasurementRecord, MeasurementStore, MetricDefinition, MetricsError, Polarity,
};
use crate::query::{self, EntityMetricResult, QueryError};
use crate::registry::{
    DesignationRecord, DomainId, EntityId, EntityKind, EntityRecord, Registry, RegistryError,
};
use crate::validator::{self, CoverageGap, DEFAULT_EPSILON, DEFAULT_RHO};

pub use persist::StatePaths;

/// Errors raised by the service shell.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("failed to bind {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt snapshot {path}:{line}: {detail}")]
    CorruptSnapshot {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("io failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("designation ({0}, {1}) still has stored measurements; retry with cascade")]
    DesignationInUse(DomainId, DomainId),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl ServiceError {
    /// Canonical error name, used verbatim on the wire.
    pub fn name(&self) -> &'static str {
        match self {
            ServiceError::BindFailure { .. } => "BindFailure",
            ServiceError::CorruptSnapshot { .. } => "CorruptSnapshot",
            ServiceError::IoFailure(_) => "IoFailure",
            ServiceError::InvalidConfig(_) => "InvalidConfig",
            ServiceError::DesignationInUse(_, _) => "DesignationInUse",
            ServiceError::Registry(e) => e.name(),
        }
    }
}

/// Environment variable overriding the listen address.
pub const ENV_LISTEN: &str = "GRIDMON_LISTEN";
/// Environment variable overriding the registry snapshot path.
pub const ENV_SNAPSHOT: &str = "GRIDMON_SNAPSHOT_PATH";
/// Environment variable overriding the measurement log path.
pub const ENV_MEASUREMENT_LOG: &str = "GRIDMON_MEASUREMENT_LOG_PATH";
/// Environment variable overriding the metric catalog path.
pub const ENV_CATALOG: &str = "GRIDMON_CATALOG_PATH";

/// Service configuration; a JSON file with the same field names, every
/// field optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub snapshot_path: PathBuf,
    pub measurement_log_path: PathBuf,
    pub catalog_path: PathBuf,
    pub rho: f64,
    pub epsilon: f64,
    pub snapshot_interval_secs: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:7070".to_string(),
            snapshot_path: PathBuf::from("gridmon.snapshot"),
            measurement_log_path: PathBuf::from("gridmon.measurements"),
            catalog_path: PathBuf::from("gridmon.metrics.json"),
            rho: DEFAULT_RHO,
            epsilon: DEFAULT_EPSILON,
            snapshot_interval_secs: 60,
        }
    }
}

impl ServiceConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| ServiceError::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Applies `GRIDMON_*` environment overrides for the listen address
    /// and the three state paths.
    pub fn apply_env_overrides(&mut self) {
        if let Ok(v) = std::env::var(ENV_LISTEN) {
            self.listen = v;
        }
        if let Ok(v) = std::env::var(ENV_SNAPSHOT) {
            self.snapshot_path = PathBuf::from(v);
        }
        if let Ok(v) = std::env::var(ENV_MEASUREMENT_LOG) {
            self.measurement_log_path = PathBuf::from(v);
        }
        if let Ok(v) = std::env::var(ENV_CATALOG) {
            self.catalog_path = PathBuf::from(v);
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        let fail = |msg: String| Err(ServiceError::InvalidConfig(msg));
        if self.listen.is_empty() {
            return fail("listen address is empty".into());
        }
        let paths = [
            &self.snapshot_path,
            &self.measurement_log_path,
            &self.catalog_path,
        ];
        for i in 0..paths.len() {
            for j in (i + 1)..paths.len() {
                if paths[i] == paths[j] {
                    return fail(format!(
                        "state paths must be distinct; {} appears twice",
                        paths[i].display()
                    ));
                }
            }
        }
        if !(self.rho.is_finite() && self.rho > 1.0) {
            return fail(format!("rho must be > 1, got {}", self.rho));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon must be in (0, 1), got {}", self.epsilon));
        }
        if self.snapshot_interval_secs == 0 {
            return fail("snapshot interval must be positive".into());
        }
        Ok(())
    }

    pub fn state_paths(&self) -> StatePaths {
        StatePaths {
            registry: self.snapshot_path.clone(),
            measurements: self.measurement_log_path.clone(),
            catalog: self.catalog_path.clone(),
        }
    }
}

/// Shared monitoring state: the registry and the measurement store behind
/// reader/writer locks. One `Monitor` backs the HTTP endpoints and the
/// CLI alike.
#[derive(Debug, Default)]
pub struct Monitor {
    registry: RwLock<Registry>,
    store: RwLock<MeasurementStore>,
}

impl Monitor {
    pub fn new() -> Self {
        Monitor::default()
    }

    pub fn from_parts(registry: Registry, store: MeasurementStore) -> Self {
        Monitor {
            registry: RwLock::new(registry),
            store: RwLock::new(store),
        }
    }

    /// Loads state from the snapshot files; missing files start empty.
    pub fn load(paths: &StatePaths) -> Result<Self, ServiceError> {
        let (registry, store) = persist::load_state(paths)?;
        Ok(Monitor::from_parts(registry, store))
    }

    /// Clones the current state under read locks and persists it with no
    /// locks held, so readers are blocked only for the copy.
    pub fn snapshot(&self, paths: &StatePaths) -> Result<(), ServiceError> {
        let (registry, store) = {
            let registry = self.registry.read().unwrap().clone();
            let store = self.store.read().unwrap().clone();
            (registry, store)
        };
        persist::save_state(&registry, &store, paths)
    }

    pub fn register_entity(
        &self,
        id: &str,
        kind: EntityKind,
        domain: &str,
    ) -> Result<EntityRecord, RegistryError> {
        let id = EntityId::new(id)?;
        let domain = DomainId::new(domain)?;
        let entity = self
            .registry
            .write()
            .unwrap()
            .register_entity(id, kind, domain)?;
        Ok(EntityRecord {
            entity: entity.id,
            kind: entity.kind,
            domain: entity.domain,
        })
    }

    pub fn designate(
        &self,
        domain_a: &str,
        domain_b: &str,
        theodolite_a: &str,
        theodolite_b: &str,
    ) -> Result<DesignationRecord, RegistryError> {
        let designation = self.registry.write().unwrap().designate_theodolites(
            DomainId::new(domain_a)?,
            DomainId::new(domain_b)?,
            EntityId::new(theodolite_a)?,
            EntityId::new(theodolite_b)?,
        )?;
        Ok(DesignationRecord::from(&designation))
    }

    pub fn define_metric(
        &self,
        name: &str,
        polarity: Polarity,
        unit: Option<String>,
        range: Option<(f64, f64)>,
    ) -> Result<MetricDefinition, MetricsError> {
        self.store
            .write()
            .unwrap()
            .define_metric(name, polarity, unit, range)
            .cloned()
    }

    pub fn ingest_record(&self, record: &MeasurementRecord) -> Result<Measurement, MetricsError> {
        let registry = self.registry.read().unwrap();
        self.store.write().unwrap().ingest_record(&registry, record)
    }

    pub fn metric_between(
        &self,
        metric: &str,
        from: &str,
        to: &str,
    ) -> Result<Option<EntityMetricResult>, QueryError> {
        let registry = self.registry.read().unwrap();
        let store = self.store.read().unwrap();
        query::metric_between(&registry, &store, metric, from, to)
    }

    pub fn metric_to_kind(
        &self,
        metric: &str,
        from: &str,
        kind: EntityKind,
    ) -> Result<Vec<EntityMetricResult>, QueryError> {
        let registry = self.registry.read().unwrap();
        let store = self.store.read().unwrap();
        query::metric_to_kind(&registry, &store, metric, from, kind)
    }

    pub fn best_partner(
        &self,
        metric: &str,
        from: &str,
        kind: EntityKind,
    ) -> Result<Option<EntityMetricResult>, QueryError> {
        let registry = self.registry.read().unwrap();
        let store = self.store.read().unwrap();
        query::best_partner(&registry, &store, metric, from, kind)
    }

    pub fn partner_theodolites(&self, theodolite: &str) -> Result<Vec<EntityId>, RegistryError> {
        self.registry
            .read()
            .unwrap()
            .partner_theodolites(theodolite)
    }

    pub fn coverage_gaps(&self) -> Vec<CoverageGap> {
        let registry = self.registry.read().unwrap();
        let store = self.store.read().unwrap();
        validator::coverage_gaps(&registry, &store)
    }

    pub fn remove_entity(&self, id: &str) -> Result<(), RegistryError> {
        self.registry.write().unwrap().remove_entity(id)?;
        Ok(())
    }

    /// Removes a designation. Without `cascade` the removal is rejected
    /// while measurements reference the designated stream; with it, those
    /// measurements are dropped first. Returns the measurements removed.
    pub fn remove_designation(
        &self,
        domain_a: &str,
        domain_b: &str,
        cascade: bool,
    ) -> Result<usize, ServiceError> {
        let mut registry = self.registry.write().unwrap();
        let mut store = self.store.write().unwrap();
        let designation = {
            let found = registry
                .lookup_designation(domain_a, domain_b)
                .filter(|l| !l.reversed)
                .map(|l| l.designation.clone());
            found.ok_or_else(|| {
                RegistryError::UnknownDesignation(
                    DomainId::new(domain_a).unwrap_or_else(|_| DomainId::new("?").unwrap()),
                    DomainId::new(domain_b).unwrap_or_else(|_| DomainId::new("?").unwrap()),
                )
            })?
        };
        let ta = designation.theodolite_a.as_str();
        let tb = designation.theodolite_b.as_str();
        let mut removed = 0;
        if store.has_measurement_for_pair(ta, tb) {
            if !cascade {
                return Err(ServiceError::DesignationInUse(
                    designation.domain_a.clone(),
                    designation.domain_b.clone(),
                ));
            }
            removed = store.remove_pair_measurements(ta, tb);
        }
        registry.remove_designation(domain_a, domain_b)?;
        Ok(removed)
    }

    /// Runs a closure with read access to the underlying state.
    pub fn with_state<T>(&self, f: impl FnOnce(&Registry, &MeasurementStore) -> T) -> T {
        let registry = self.registry.read().unwrap();
        let store = self.store.read().unwrap();
        f(&registry, &store)
    }
}

/// A bound, not-yet-running service.
pub struct Service {
    listener: std::net::TcpListener,
    monitor: Arc<Monitor>,
    config: Arc<ServiceConfig>,
    stop: Arc<AtomicBool>,
}

impl Service {
    /// Binds the configured listen address.
    pub fn bind(config: ServiceConfig, monitor: Arc<Monitor>) -> Result<Service, ServiceError> {
        config.validate()?;
        let listener =
            std::net::TcpListener::bind(&config.listen).map_err(|e| ServiceError::BindFailure {
                addr: config.listen.clone(),
                source: e,
            })?;
        Ok(Service {
            listener,
            monitor,
            config: Arc::new(config),
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> std::net::SocketAddr {
        self.listener.local_addr().expect("bound listener")
    }

    /// Accept loop; returns when a shutdown is requested. Spawns one
    /// thread per connection and a periodic snapshot thread.
    pub fn run(self) -> Result<(), ServiceError> {
        let snapshot_stop = self.stop.clone();
        let snapshot_monitor = self.monitor.clone();
        let snapshot_config = self.config.clone();
        let snapshotter = thread::spawn(move || {
            let interval = snapshot_config.snapshot_interval_secs;
            loop {
                for _ in 0..interval {
                    if snapshot_stop.load(Ordering::SeqCst) {
                        return;
                    }
                    thread::sleep(Duration::from_secs(1));
                }
                // Best effort: a failed periodic snapshot leaves the
                // previous files untouched and is retried next interval.
                let _ = snapshot_monitor.snapshot(&snapshot_config.state_paths());
            }
        });

        for stream in self.listener.incoming() {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let monitor = self.monitor.clone();
            let config = self.config.clone();
            thread::spawn(move || http::handle_connection(stream, &monitor, &config));
        }
        let _ = snapshotter.join();
        Ok(())
    }

    /// Runs the accept loop on a background thread; the handle shuts it
    /// down cleanly.
    pub fn spawn(self) -> ServiceHandle {
        let addr = self.local_addr();
        let stop = self.stop.clone();
        let join = thread::spawn(move || self.run());
        ServiceHandle { addr, stop, join }
    }
}

/// Handle to a background service, used by tests and embedders.
pub struct ServiceHandle {
    addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    join: thread::JoinHandle<Result<(), ServiceError>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = std::net::TcpStream::connect(self.addr);
        let _ = self.join.join();
    }
}

/// Loads state per the config, binds, and serves until shutdown. Refuses
/// to start on a corrupt snapshot, naming the offending line.
pub fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    config.validate()?;
    let monitor = Arc::new(Monitor::load(&config.state_paths())?);
    Service::bind(config, monitor)?.run()
}
