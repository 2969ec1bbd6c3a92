//! Connectivity metric catalog and theodolite-to-theodolite measurement store.
//!
//! A metric is a named, totally ordered quantity with a polarity: either
//! a higher value means better network performance or a lower one does.
//! Values of the same metric compare under that polarity; values of
//! different metrics never compare. No operation aggregates values across
//! theodolite pairs: each (metric, theodolite_a, theodolite_b) stream is
//! an independent time series exposing its latest value.
//!
//! Measurements with a timestamp older than the newest one already stored
//! for their stream are accepted but flagged stale; they never displace
//! the latest value. Clock skew between producers makes outright rejection
//! impractical.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::registry::{EntityId, EntityKind, Registry};

/// Errors raised by catalog and store operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("metric {0:?} is already defined")]
    DuplicateMetric(String),
    #[error("invalid range for metric {metric:?}: {detail}")]
    InvalidRange { metric: String, detail: String },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("unknown theodolite {0:?}")]
    UnknownTheodolite(String),
    #[error("theodolite pair ({0}, {1}) has no designation in that orientation")]
    UndesignatedPair(EntityId, EntityId),
    #[error("value {value} outside the declared range [{lo}, {hi}] of metric {metric:?}")]
    OutOfRange {
        metric: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("value {0} is not finite")]
    NonFinite(f64),
    #[error("cannot compare metric {left:?} with metric {right:?}")]
    MetricMismatch { left: String, right: String },
}

impl MetricsError {
    /// Canonical error name, used verbatim on the wire.
    pub fn name(&self) -> &'static str {
        match self {
            MetricsError::DuplicateMetric(_) => "DuplicateMetric",
            MetricsError::InvalidRange { .. } => "InvalidRange",
            MetricsError::UnknownMetric(_) => "UnknownMetric",
            MetricsError::UnknownTheodolite(_) => "UnknownTheodolite",
            MetricsError::UndesignatedPair(_, _) => "UndesignatedPair",
            MetricsError::OutOfRange { .. } => "OutOfRange",
            MetricsError::NonFinite(_) => "NonFinite",
            MetricsError::MetricMismatch { .. } => "MetricMismatch",
        }
    }
}

/// Whether larger or smaller values of a metric mean better connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    HigherIsBetter,
    LowerIsBetter,
}

/// Closed interval of admissible measurement values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    lo: f64,
    hi: f64,
}

impl ValueRange {
    pub fn new(lo: f64, hi: f64) -> Option<ValueRange> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Some(ValueRange { lo, hi })
        } else {
            None
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

/// A metric in the catalog: name, polarity, optional unit, optional
/// admissible range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDefinition {
    pub name: String,
    pub polarity: Polarity,
    pub unit: Option<String>,
    pub range: Option<ValueRange>,
}

impl MetricDefinition {
    /// Wraps a raw value in this metric's comparison semantics.
    pub fn value(&self, value: f64) -> Result<ConnectivityValue, MetricsError> {
        if !value.is_finite() {
            return Err(MetricsError::NonFinite(value));
        }
        Ok(ConnectivityValue {
            metric: self.name.clone(),
            polarity: self.polarity,
            value,
        })
    }
}

/// One observed metric value between two theodolites.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub metric: String,
    pub theodolite_a: EntityId,
    pub theodolite_b: EntityId,
    pub value: f64,
    pub timestamp: u64,
    /// Set when the timestamp was older than one already stored for the
    /// same stream at ingestion time.
    pub stale: bool,
}

/// Wire/log format for one measurement: one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementRecord {
    pub metric: String,
    pub ta: EntityId,
    pub tb: EntityId,
    pub value: f64,
    pub ts: u64,
}

impl From<&Measurement> for MeasurementRecord {
    fn from(m: &Measurement) -> Self {
        MeasurementRecord {
            metric: m.metric.clone(),
            ta: m.theodolite_a.clone(),
            tb: m.theodolite_b.clone(),
            value: m.value,
            ts: m.timestamp,
        }
    }
}

/// Outcome of comparing two values of the same metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Better,
    Equal,
    Worse,
}

/// A metric value that knows how to compare itself under its metric's
/// polarity. Comparison across metrics is an error, never a coercion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityValue {
    metric: String,
    polarity: Polarity,
    value: f64,
}

impl ConnectivityValue {
    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Total order among values of one metric: for `HigherIsBetter` the
    /// larger value wins, for `LowerIsBetter` the smaller one does.
    pub fn compare(&self, other: &ConnectivityValue) -> Result<Comparison, MetricsError> {
        if self.metric != other.metric {
            return Err(MetricsError::MetricMismatch {
                left: self.metric.clone(),
                right: other.metric.clone(),
            });
        }
        // Values are finite by construction, so partial_cmp always holds.
        let raw = self.value.partial_cmp(&other.value).expect("finite values");
        let cmp = match (self.polarity, raw) {
            (_, std::cmp::Ordering::Equal) => Comparison::Equal,
            (Polarity::HigherIsBetter, std::cmp::Ordering::Greater) => Comparison::Better,
            (Polarity::HigherIsBetter, std::cmp::Ordering::Less) => Comparison::Worse,
            (Polarity::LowerIsBetter, std::cmp::Ordering::Less) => Comparison::Better,
            (Polarity::LowerIsBetter, std::cmp::Ordering::Greater) => Comparison::Worse,
        };
        Ok(cmp)
    }

    pub fn better_than(&self, other: &ConnectivityValue) -> Result<bool, MetricsError> {
        Ok(self.compare(other)? == Comparison::Better)
    }
}

impl fmt::Display for ConnectivityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.metric, self.value)
    }
}

type StreamKey = (String, EntityId, EntityId);

/// Metric catalog plus the append-only measurement log.
///
/// The full log is retained; `latest` answers per-stream queries from an
/// index that is updated on ingestion, and equals a brute-force scan of
/// the log at all times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementStore {
    catalog: BTreeMap<String, MetricDefinition>,
    log: Vec<Measurement>,
    latest: BTreeMap<StreamKey, usize>,
}

impl MeasurementStore {
    pub fn new() -> Self {
        MeasurementStore::default()
    }

    /// Adds a metric to the catalog. Polarity and range are fixed for the
    /// lifetime of the definition.
    pub fn define_metric(
        &mut self,
        name: impl Into<String>,
        polarity: Polarity,
        unit: Option<String>,
        range: Option<(f64, f64)>,
    ) -> Result<&MetricDefinition, MetricsError> {
        let name = name.into();
        if name.is_empty() {
            return Err(MetricsError::UnknownMetric(name));
        }
        if self.catalog.contains_key(&name) {
            return Err(MetricsError::DuplicateMetric(name));
        }
        let range = match range {
            None => None,
            Some((lo, hi)) => {
                Some(
                    ValueRange::new(lo, hi).ok_or_else(|| MetricsError::InvalidRange {
                        metric: name.clone(),
                        detail: format!("[{lo}, {hi}] is not a finite non-empty interval"),
                    })?,
                )
            }
        };
        let def = MetricDefinition {
            name: name.clone(),
            polarity,
            unit,
            range,
        };
        Ok(self.catalog.entry(name).or_insert(def))
    }

    /// Re-inserts a definition parsed from a catalog file.
    pub fn restore_metric(&mut self, def: MetricDefinition) -> Result<(), MetricsError> {
        if self.catalog.contains_key(&def.name) {
            return Err(MetricsError::DuplicateMetric(def.name));
        }
        self.catalog.insert(def.name.clone(), def);
        Ok(())
    }

    pub fn metric(&self, name: &str) -> Option<&MetricDefinition> {
        self.catalog.get(name)
    }

    /// All definitions, ordered by name.
    pub fn metrics(&self) -> impl Iterator<Item = &MetricDefinition> {
        self.catalog.values()
    }

    /// Appends one measurement after checking it against the catalog and
    /// the registry's designation table. The returned measurement carries
    /// the stale flag.
    pub fn ingest(
        &mut self,
        registry: &Registry,
        metric: &str,
        theodolite_a: &str,
        theodolite_b: &str,
        value: f64,
        timestamp: u64,
    ) -> Result<Measurement, MetricsError> {
        let def = self
            .catalog
            .get(metric)
            .ok_or_else(|| MetricsError::UnknownMetric(metric.to_string()))?;
        let ta = check_theodolite(registry, theodolite_a)?;
        let tb = check_theodolite(registry, theodolite_b)?;
        if !registry.is_designated_theodolite_pair(theodolite_a, theodolite_b) {
            return Err(MetricsError::UndesignatedPair(ta, tb));
        }
        if !value.is_finite() {
            return Err(MetricsError::NonFinite(value));
        }
        if let Some(range) = &def.range {
            if !range.contains(value) {
                return Err(MetricsError::OutOfRange {
                    metric: metric.to_string(),
                    value,
                    lo: range.lo,
                    hi: range.hi,
                });
            }
        }

        let key = (metric.to_string(), ta.clone(), tb.clone());
        let stale = match self.latest.get(&key) {
            Some(&idx) => timestamp < self.log[idx].timestamp,
            None => false,
        };
        let measurement = Measurement {
            metric: metric.to_string(),
            theodolite_a: ta,
            theodolite_b: tb,
            value,
            timestamp,
            stale,
        };
        self.log.push(measurement.clone());
        if !stale {
            // Equal timestamps follow arrival order: the newest append wins.
            self.latest.insert(key, self.log.len() - 1);
        }
        Ok(measurement)
    }

    /// Convenience for the line-JSON wire format.
    pub fn ingest_record(
        &mut self,
        registry: &Registry,
        record: &MeasurementRecord,
    ) -> Result<Measurement, MetricsError> {
        self.ingest(
            registry,
            &record.metric,
            record.ta.as_str(),
            record.tb.as_str(),
            record.value,
            record.ts,
        )
    }

    /// The value with the greatest timestamp for the stream, or `None` if
    /// the stream has never been measured.
    pub fn latest(
        &self,
        metric: &str,
        theodolite_a: &str,
        theodolite_b: &str,
    ) -> Result<Option<ConnectivityValue>, MetricsError> {
        let def = self
            .catalog
            .get(metric)
            .ok_or_else(|| MetricsError::UnknownMetric(metric.to_string()))?;
        Ok(self
            .latest_measurement(metric, theodolite_a, theodolite_b)
            .map(|m| ConnectivityValue {
                metric: def.name.clone(),
                polarity: def.polarity,
                value: m.value,
            }))
    }

    /// Raw latest measurement for a stream; no catalog check.
    pub fn latest_measurement(
        &self,
        metric: &str,
        theodolite_a: &str,
        theodolite_b: &str,
    ) -> Option<&Measurement> {
        let key = (
            metric.to_string(),
            EntityId::new(theodolite_a).ok()?,
            EntityId::new(theodolite_b).ok()?,
        );
        self.latest.get(&key).map(|&idx| &self.log[idx])
    }

    /// True if any metric has ever been measured on the pair, in exactly
    /// that orientation.
    pub fn has_measurement_for_pair(&self, theodolite_a: &str, theodolite_b: &str) -> bool {
        self.latest
            .keys()
            .any(|(_, ta, tb)| ta.as_str() == theodolite_a && tb.as_str() == theodolite_b)
    }

    /// The full measurement log in arrival order.
    pub fn measurements(&self) -> &[Measurement] {
        &self.log
    }

    pub fn measurement_count(&self) -> usize {
        self.log.len()
    }

    /// Drops every measurement on the pair (all metrics, that exact
    /// orientation). Used when a designation is removed with cascade.
    pub fn remove_pair_measurements(&mut self, theodolite_a: &str, theodolite_b: &str) -> usize {
        let before = self.log.len();
        let retained: Vec<Measurement> = self
            .log
            .drain(..)
            .filter(|m| {
                !(m.theodolite_a.as_str() == theodolite_a
                    && m.theodolite_b.as_str() == theodolite_b)
            })
            .collect();
        self.latest.clear();
        for (idx, m) in retained.iter().enumerate() {
            let key = (
                m.metric.clone(),
                m.theodolite_a.clone(),
                m.theodolite_b.clone(),
            );
            if !m.stale {
                self.latest.insert(key, idx);
            }
        }
        self.log = retained;
        before - self.log.len()
    }
}

fn check_theodolite(registry: &Registry, id: &str) -> Result<EntityId, MetricsError> {
    match registry.entity(id) {
        Some(e) if e.kind == EntityKind::Theodolite => Ok(e.id.clone()),
        _ => Err(MetricsError::UnknownTheodolite(id.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{DomainId, EntityKind};

    fn id(s: &str) -> EntityId {
        EntityId::new(s).unwrap()
    }

    fn fixture() -> (Registry, MeasurementStore) {
        let mut reg = Registry::new();
        let dom = |s: &str| DomainId::new(s).unwrap();
        reg.register_entity(id("T1"), EntityKind::Theodolite, dom("D1"))
            .unwrap();
        reg.register_entity(id("T4"), EntityKind::Theodolite, dom("D2"))
            .unwrap();
        reg.register_entity(id("T9"), EntityKind::Theodolite, dom("D3"))
            .unwrap();
        reg.register_entity(id("C2"), EntityKind::Computing, dom("D1"))
            .unwrap();
        reg.designate_theodolites(dom("D1"), dom("D2"), id("T1"), id("T4"))
            .unwrap();

        let mut store = MeasurementStore::new();
        store
            .define_metric(
                "NetworkPacketLoss",
                Polarity::LowerIsBetter,
                None,
                Some((0.0, 1.0)),
            )
            .unwrap();
        store
            .define_metric(
                "Throughput",
                Polarity::HigherIsBetter,
                Some("kbytes/sec".to_string()),
                None,
            )
            .unwrap();
        (reg, store)
    }

    #[test]
    fn define_metric_examples() {
        let mut store = MeasurementStore::new();
        let def = store
            .define_metric(
                "NetworkPacketLoss",
                Polarity::LowerIsBetter,
                None,
                Some((0.0, 1.0)),
            )
            .unwrap();
        assert_eq!(def.polarity, Polarity::LowerIsBetter);
        store
            .define_metric(
                "Throughput",
                Polarity::HigherIsBetter,
                Some("kbytes/sec".to_string()),
                None,
            )
            .unwrap();
        let err = store
            .define_metric("NetworkPacketLoss", Polarity::LowerIsBetter, None, None)
            .unwrap_err();
        assert_eq!(
            err,
            MetricsError::DuplicateMetric("NetworkPacketLoss".into())
        );
    }

    #[test]
    fn define_metric_rejects_empty_interval() {
        let mut store = MeasurementStore::new();
        let err = store
            .define_metric("X", Polarity::LowerIsBetter, None, Some((1.0, 0.0)))
            .unwrap_err();
        assert!(matches!(err, MetricsError::InvalidRange { .. }));
        let err = store
            .define_metric(
                "X",
                Polarity::LowerIsBetter,
                None,
                Some((0.0, f64::INFINITY)),
            )
            .unwrap_err();
        assert!(matches!(err, MetricsError::InvalidRange { .. }));
        // A single-point interval is not empty.
        assert!(store
            .define_metric("X", Polarity::LowerIsBetter, None, Some((0.5, 0.5)))
            .is_ok());
    }

    #[test]
    fn ingest_examples() {
        let (reg, mut store) = fixture();
        let m = store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.02, 1000)
            .unwrap();
        assert!(!m.stale);

        let err = store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 1.5, 1001)
            .unwrap_err();
        assert!(matches!(err, MetricsError::OutOfRange { .. }));

        // (T1, T9) was never designated in any orientation.
        let err = store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T9", 0.01, 1002)
            .unwrap_err();
        assert_eq!(err, MetricsError::UndesignatedPair(id("T1"), id("T9")));
    }

    #[test]
    fn ingest_rejects_unknown_inputs() {
        let (reg, mut store) = fixture();
        assert_eq!(
            store
                .ingest(&reg, "Latency", "T1", "T4", 1.0, 0)
                .unwrap_err(),
            MetricsError::UnknownMetric("Latency".into())
        );
        assert_eq!(
            store
                .ingest(&reg, "Throughput", "Tx", "T4", 1.0, 0)
                .unwrap_err(),
            MetricsError::UnknownTheodolite("Tx".into())
        );
        // A registered entity of the wrong kind is not a theodolite.
        assert_eq!(
            store
                .ingest(&reg, "Throughput", "C2", "T4", 1.0, 0)
                .unwrap_err(),
            MetricsError::UnknownTheodolite("C2".into())
        );
        assert_eq!(
            store
                .ingest(&reg, "Throughput", "T1", "T4", f64::NAN, 0)
                .unwrap_err()
                .name(),
            "NonFinite"
        );
    }

    #[test]
    fn ingest_orientation_is_exact() {
        let (reg, mut store) = fixture();
        // Only (T1, T4) is designated; the reverse stream is not ingestible.
        let err = store
            .ingest(&reg, "NetworkPacketLoss", "T4", "T1", 0.02, 1000)
            .unwrap_err();
        assert_eq!(err, MetricsError::UndesignatedPair(id("T4"), id("T1")));
    }

    #[test]
    fn latest_follows_max_timestamp() {
        let (reg, mut store) = fixture();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.02, 1000)
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.03, 2000)
            .unwrap();
        let v = store
            .latest("NetworkPacketLoss", "T1", "T4")
            .unwrap()
            .unwrap();
        assert_eq!(v.value(), 0.03);

        // A stale arrival is stored and flagged but does not displace.
        let m = store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.05, 500)
            .unwrap();
        assert!(m.stale);
        let v = store
            .latest("NetworkPacketLoss", "T1", "T4")
            .unwrap()
            .unwrap();
        assert_eq!(v.value(), 0.03);
        assert_eq!(store.measurement_count(), 3);

        assert!(store
            .latest("NetworkPacketLoss", "T4", "T1")
            .unwrap()
            .is_none());
        assert!(store.latest("Nope", "T1", "T4").is_err());
    }

    #[test]
    fn equal_timestamps_follow_arrival_order() {
        let (reg, mut store) = fixture();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.02, 1000)
            .unwrap();
        let m = store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.04, 1000)
            .unwrap();
        assert!(!m.stale);
        let v = store
            .latest("NetworkPacketLoss", "T1", "T4")
            .unwrap()
            .unwrap();
        assert_eq!(v.value(), 0.04);
    }

    #[test]
    fn compare_examples() {
        let (_, store) = fixture();
        let loss = store.metric("NetworkPacketLoss").unwrap().clone();
        let thr = store.metric("Throughput").unwrap().clone();

        let a = loss.value(0.01).unwrap();
        let b = loss.value(0.05).unwrap();
        assert_eq!(a.compare(&b).unwrap(), Comparison::Better);
        assert_eq!(b.compare(&a).unwrap(), Comparison::Worse);

        let x = thr.value(100.0).unwrap();
        let y = thr.value(100.0).unwrap();
        assert_eq!(x.compare(&y).unwrap(), Comparison::Equal);
        let z = thr.value(200.0).unwrap();
        assert_eq!(z.compare(&x).unwrap(), Comparison::Better);

        let err = a.compare(&x).unwrap_err();
        assert!(matches!(err, MetricsError::MetricMismatch { .. }));
    }

    #[test]
    fn streams_are_independent() {
        let (mut reg, mut store) = fixture();
        let dom = |s: &str| DomainId::new(s).unwrap();
        reg.designate_theodolites(dom("D1"), dom("D3"), id("T1"), id("T9"))
            .unwrap();

        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.02, 1000)
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T9", 0.50, 2000)
            .unwrap();
        store
            .ingest(&reg, "Throughput", "T1", "T4", 900.0, 3000)
            .unwrap();

        let v = store
            .latest("NetworkPacketLoss", "T1", "T4")
            .unwrap()
            .unwrap();
        assert_eq!(v.value(), 0.02);
        let v = store
            .latest("NetworkPacketLoss", "T1", "T9")
            .unwrap()
            .unwrap();
        assert_eq!(v.value(), 0.50);
        let v = store.latest("Throughput", "T1", "T4").unwrap().unwrap();
        assert_eq!(v.value(), 900.0);
    }

    #[test]
    fn remove_pair_measurements_rebuilds_latest() {
        let (mut reg, mut store) = fixture();
        let dom = |s: &str| DomainId::new(s).unwrap();
        reg.designate_theodolites(dom("D1"), dom("D3"), id("T1"), id("T9"))
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.02, 1000)
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T9", 0.10, 1500)
            .unwrap();
        store
            .ingest(&reg, "Throughput", "T1", "T4", 900.0, 2000)
            .unwrap();

        let removed = store.remove_pair_measurements("T1", "T4");
        assert_eq!(removed, 2);
        assert!(store
            .latest("NetworkPacketLoss", "T1", "T4")
            .unwrap()
            .is_none());
        assert!(store.latest("Throughput", "T1", "T4").unwrap().is_none());
        let v = store
            .latest("NetworkPacketLoss", "T1", "T9")
            .unwrap()
            .unwrap();
        assert_eq!(v.value(), 0.10);
    }

    #[test]
    fn measurement_record_wire_format() {
        let rec = MeasurementRecord {
            metric: "NetworkPacketLoss".into(),
            ta: id("T1"),
            tb: id("T4"),
            value: 0.02,
            ts: 1000,
        };
        assert_eq!(
            serde_json::to_string(&rec).unwrap(),
            r#"{"metric":"NetworkPacketLoss","ta":"T1","tb":"T4","value":0.02,"ts":1000}"#
        );
        let parsed: MeasurementRecord = serde_json::from_str(
            r#"{"metric":"NetworkPacketLoss","ta":"T1","tb":"T4","value":0.02,"ts":1000}"#,
        )
        .unwrap();
        assert_eq!(parsed, rec);
    }
}
