//! Snapshot persistence: line-oriented JSON with atomic replacement.
//!
//! Three files make up a state snapshot:
//!
//! - the registry snapshot: one JSON object per line, entity records
//!   (`entity`, `kind`, `domain`) followed by designation records
//!   (`domain_a`, `domain_b`, `theodolite_a`, `theodolite_b`);
//! - the measurement log: one JSON object per line in the ingestion wire
//!   format (`metric`, `ta`, `tb`, `value`, `ts`), in arrival order;
//! - the metric catalog: a JSON array of metric definitions.
//!
//! Loading replays the records through the ordinary constructors, so a
//! file that violates any invariant is rejected with the offending line
//! number. Files are replaced by writing a temp file, syncing, and
//! renaming over the target; an interrupted write never clobbers the
//! previous snapshot.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::metrics::{MeasurementRecord, MeasurementStore, MetricDefinition};
use crate::registry::{DesignationRecord, EntityRecord, Registry};

use super::ServiceError;

/// Filesystem locations of the three snapshot files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatePaths {
    pub registry: PathBuf,
    pub measurements: PathBuf,
    pub catalog: PathBuf,
}

fn corrupt(path: &Path, line: usize, detail: impl Into<String>) -> ServiceError {
    ServiceError::CorruptSnapshot {
        path: path.display().to_string(),
        line,
        detail: detail.into(),
    }
}

/// Serializes the registry: entities ordered by id, then designations
/// ordered by domain pair. Loading and re-saving is byte-identical.
pub fn registry_to_lines(registry: &Registry) -> String {
    let mut out = String::new();
    for record in registry.entity_records() {
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    for record in registry.designation_records() {
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Rebuilds a registry from snapshot lines, replaying each record through
/// the registering operations. Entity records may appear in any order
/// relative to designation records; all entities are applied first.
pub fn registry_from_lines(text: &str, path: &Path) -> Result<Registry, ServiceError> {
    let mut entities: Vec<(usize, EntityRecord)> = Vec::new();
    let mut designations: Vec<(usize, DesignationRecord)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Ok(record) = serde_json::from_str::<EntityRecord>(raw) {
            entities.push((line, record));
            continue;
        }
        match serde_json::from_str::<DesignationRecord>(raw) {
            Ok(record) => designations.push((line, record)),
            Err(e) => {
                return Err(corrupt(
                    path,
                    line,
                    format!("not a valid entity or designation record: {e}"),
                ))
            }
        }
    }

    let mut registry = Registry::new();
    for (line, record) in entities {
        registry
            .register_entity(record.entity, record.kind, record.domain)
            .map_err(|e| corrupt(path, line, e.to_string()))?;
    }
    for (line, record) in designations {
        registry
            .designate_theodolites(
                record.domain_a,
                record.domain_b,
                record.theodolite_a,
                record.theodolite_b,
            )
            .map_err(|e| corrupt(path, line, e.to_string()))?;
    }
    Ok(registry)
}

/// Serializes the metric catalog as a JSON array, ordered by name.
pub fn catalog_to_json(store: &MeasurementStore) -> String {
    let defs: Vec<&MetricDefinition> = store.metrics().collect();
    let mut out = serde_json::to_string_pretty(&defs).expect("catalog serializes");
    out.push('\n');
    out
}

/// Restores metric definitions into a store.
pub fn apply_catalog_json(
    store: &mut MeasurementStore,
    text: &str,
    path: &Path,
) -> Result<(), ServiceError> {
    let defs: Vec<MetricDefinition> = serde_json::from_str(text)
        .map_err(|e| corrupt(path, e.line(), format!("invalid metric catalog: {e}")))?;
    for def in defs {
        store
            .restore_metric(def)
            .map_err(|e| corrupt(path, 1, e.to_string()))?;
    }
    Ok(())
}

/// Serializes the measurement log in arrival order, wire format.
pub fn log_to_lines(store: &MeasurementStore) -> String {
    let mut out = String::new();
    for m in store.measurements() {
        let record = MeasurementRecord::from(m);
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Replays measurement log lines through ingestion, which re-derives the
/// stale flags and re-checks every invariant. Returns the count applied.
pub fn apply_log_lines(
    store: &mut MeasurementStore,
    registry: &Registry,
    text: &str,
    path: &Path,
) -> Result<usize, ServiceError> {
    let mut applied = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let record: MeasurementRecord = serde_json::from_str(raw)
            .map_err(|e| corrupt(path, line, format!("not a valid measurement record: {e}")))?;
        store
            .ingest_record(registry, &record)
            .map_err(|e| corrupt(path, line, e.to_string()))?;
        applied += 1;
    }
    Ok(applied)
}

/// Writes a file atomically: temp file in the same directory, flush,
/// fsync, rename over the target.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), ServiceError> {
    let file_name = path.file_name().ok_or_else(|| {
        ServiceError::InvalidConfig(format!("{} has no file name", path.display()))
    })?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!("{}.tmp", file_name.to_string_lossy()));

    let mut file = fs::File::create(&tmp)?;
    file.write_all(contents.as_bytes())?;
    file.flush()?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Persists registry, catalog, and measurement log. Each file is replaced
/// atomically; on failure the previous consistent file stays in place.
pub fn save_state(
    registry: &Registry,
    store: &MeasurementStore,
    paths: &StatePaths,
) -> Result<(), ServiceError> {
    atomic_write(&paths.registry, &registry_to_lines(registry))?;
    atomic_write(&paths.catalog, &catalog_to_json(store))?;
    atomic_write(&paths.measurements, &log_to_lines(store))?;
    Ok(())
}

/// Loads a full state; missing files load as empty parts.
pub fn load_state(paths: &StatePaths) -> Result<(Registry, MeasurementStore), ServiceError> {
    let registry = match read_optional(&paths.registry)? {
        Some(text) => registry_from_lines(&text, &paths.registry)?,
        None => Registry::new(),
    };
    let mut store = MeasurementStore::new();
    if let Some(text) = read_optional(&paths.catalog)? {
        apply_catalog_json(&mut store, &text, &paths.catalog)?;
    }
    if let Some(text) = read_optional(&paths.measurements)? {
        apply_log_lines(&mut store, &registry, &text, &paths.measurements)?;
    }
    Ok((registry, store))
}

fn read_optional(path: &Path) -> Result<Option<String>, ServiceError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(ServiceError::IoFailure(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Polarity;
    use crate::registry::{DomainId, EntityId, EntityKind};

    fn id(s: &str) -> EntityId {
        EntityId::new(s).unwrap()
    }

    fn dom(s: &str) -> DomainId {
        DomainId::new(s).unwrap()
    }

    fn sample_state() -> (Registry, MeasurementStore) {
        let mut reg = Registry::new();
        reg.register_entity(id("C2"), EntityKind::Computing, dom("D1"))
            .unwrap();
        reg.register_entity(id("S3"), EntityKind::Storage, dom("D2"))
            .unwrap();
        reg.register_entity(id("T1"), EntityKind::Theodolite, dom("D1"))
            .unwrap();
        reg.register_entity(id("T4"), EntityKind::Theodolite, dom("D2"))
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
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.02, 1000)
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T4", 0.05, 500)
            .unwrap();
        (reg, store)
    }

    #[test]
    fn registry_round_trip_is_byte_identical() {
        let (reg, _) = sample_state();
        let text = registry_to_lines(&reg);
        let loaded = registry_from_lines(&text, Path::new("test")).unwrap();
        assert_eq!(loaded, reg);
        assert_eq!(registry_to_lines(&loaded), text);
    }

    #[test]
    fn log_round_trip_preserves_stale_flags() {
        let (reg, store) = sample_state();
        let text = log_to_lines(&store);
        let mut loaded = MeasurementStore::new();
        loaded
            .define_metric(
                "NetworkPacketLoss",
                Polarity::LowerIsBetter,
                None,
                Some((0.0, 1.0)),
            )
            .unwrap();
        apply_log_lines(&mut loaded, &reg, &text, Path::new("test")).unwrap();
        assert_eq!(loaded.measurements(), store.measurements());
        assert!(loaded.measurements()[1].stale);
        assert_eq!(log_to_lines(&loaded), text);
    }

    #[test]
    fn catalog_round_trip() {
        let (_, store) = sample_state();
        let text = catalog_to_json(&store);
        let mut loaded = MeasurementStore::new();
        apply_catalog_json(&mut loaded, &text, Path::new("test")).unwrap();
        let defs: Vec<_> = loaded.metrics().cloned().collect();
        let orig: Vec<_> = store.metrics().cloned().collect();
        assert_eq!(defs, orig);
        assert_eq!(catalog_to_json(&loaded), text);
    }

    #[test]
    fn registry_load_rejects_duplicate_entity_with_line_number() {
        let text = concat!(
            r#"{"entity":"C2","kind":"computing","domain":"D1"}"#,
            "\n",
            r#"{"entity":"C2","kind":"computing","domain":"D9"}"#,
            "\n",
        );
        let err = registry_from_lines(text, Path::new("reg")).unwrap_err();
        match err {
            ServiceError::CorruptSnapshot { line, .. } => assert_eq!(line, 2),
            other => panic!("expected CorruptSnapshot, got {other:?}"),
        }
    }

    #[test]
    fn registry_load_rejects_dangling_designation() {
        let text = concat!(
            r#"{"entity":"T1","kind":"theodolite","domain":"D1"}"#,
            "\n",
            r#"{"domain_a":"D1","domain_b":"D2","theodolite_a":"T1","theodolite_b":"T4"}"#,
            "\n",
        );
        let err = registry_from_lines(text, Path::new("reg")).unwrap_err();
        match err {
            ServiceError::CorruptSnapshot { line, detail, .. } => {
                assert_eq!(line, 2);
                assert!(detail.contains("T4"));
            }
            other => panic!("expected CorruptSnapshot, got {other:?}"),
        }
    }

    #[test]
    fn registry_load_rejects_wrong_kind_theodolite() {
        let text = concat!(
            r#"{"entity":"S1","kind":"storage","domain":"D1"}"#,
            "\n",
            r#"{"entity":"T4","kind":"theodolite","domain":"D2"}"#,
            "\n",
            r#"{"domain_a":"D1","domain_b":"D2","theodolite_a":"S1","theodolite_b":"T4"}"#,
            "\n",
        );
        let err = registry_from_lines(text, Path::new("reg")).unwrap_err();
        match err {
            ServiceError::CorruptSnapshot { line, detail, .. } => {
                assert_eq!(line, 3);
                assert!(detail.contains("not a theodolite"));
            }
            other => panic!("expected CorruptSnapshot, got {other:?}"),
        }
    }

    #[test]
    fn registry_load_rejects_garbage_lines() {
        let err = registry_from_lines("not json\n", Path::new("reg")).unwrap_err();
        match err {
            ServiceError::CorruptSnapshot { line, .. } => assert_eq!(line, 1),
            other => panic!("expected CorruptSnapshot, got {other:?}"),
        }
    }

    #[test]
    fn log_load_rejects_out_of_range_with_line_number() {
        let (reg, _) = sample_state();
        let mut store = MeasurementStore::new();
        store
            .define_metric(
                "NetworkPacketLoss",
                Polarity::LowerIsBetter,
                None,
                Some((0.0, 1.0)),
            )
            .unwrap();
        let text = concat!(
            r#"{"metric":"NetworkPacketLoss","ta":"T1","tb":"T4","value":0.02,"ts":1}"#,
            "\n",
            r#"{"metric":"NetworkPacketLoss","ta":"T1","tb":"T4","value":7.0,"ts":2}"#,
            "\n",
        );
        let err = apply_log_lines(&mut store, &reg, text, Path::new("log")).unwrap_err();
        match err {
            ServiceError::CorruptSnapshot { line, .. } => assert_eq!(line, 2),
            other => panic!("expected CorruptSnapshot, got {other:?}"),
        }
    }

    #[test]
    fn save_and_load_state_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let paths = StatePaths {
            registry: dir.path().join("registry.snapshot"),
            measurements: dir.path().join("measurements.log"),
            catalog: dir.path().join("metrics.json"),
        };
        let (reg, store) = sample_state();
        save_state(&reg, &store, &paths).unwrap();
        let (reg2, store2) = load_state(&paths).unwrap();
        assert_eq!(reg2, reg);
        assert_eq!(store2, store);

        // Saving the loaded state reproduces the files byte for byte.
        let first = fs::read_to_string(&paths.registry).unwrap();
        save_state(&reg2, &store2, &paths).unwrap();
        assert_eq!(fs::read_to_string(&paths.registry).unwrap(), first);
    }

    #[test]
    fn load_state_with_missing_files_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let paths = StatePaths {
            registry: dir.path().join("registry.snapshot"),
            measurements: dir.path().join("measurements.log"),
            catalog: dir.path().join("metrics.json"),
        };
        let (reg, store) = load_state(&paths).unwrap();
        assert_eq!(reg.entity_count(), 0);
        assert_eq!(store.measurement_count(), 0);
    }

    #[test]
    fn failed_write_leaves_previous_snapshot_intact() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("registry.snapshot");
        atomic_write(&target, "original\n").unwrap();

        // Point the temp file into a directory that cannot be created.
        let bogus = dir.path().join("missing-dir").join("registry.snapshot");
        let err = atomic_write(&bogus, "next\n").unwrap_err();
        assert_eq!(err.name(), "IoFailure");
        assert_eq!(fs::read_to_string(&target).unwrap(), "original\n");
    }

    #[test]
    fn atomic_write_leaves_no_temp_residue() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("state.json");
        atomic_write(&target, "data\n").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["state.json".to_string()]);
    }
}
