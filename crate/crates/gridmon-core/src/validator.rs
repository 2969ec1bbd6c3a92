//! Domain property validation and mesh cost accounting.
//!
//! A domain partition earns its keep when theodolite measurements stand in
//! for entity-pair connectivity. Two properties make that true, checked
//! here in cost space (lower cost is better):
//!
//! - comparability: all intra-domain paths, entity-to-gateway and
//!   entity-to-theodolite, carry similar cost, so theodolites pay the same
//!   price to reach an exit point as any entity;
//! - negligibility: intra-domain cost is negligible against the cost of
//!   the paths leaving the domain.
//!
//! Metrics where higher values are better are mapped to costs by taking
//! reciprocals, which requires strictly positive values. Validation is
//! report-only; it never mutates the registry.

use serde::{Deserialize, Serialize};

use crate::metrics::{MeasurementStore, Polarity};
use crate::registry::{DomainId, Registry};

/// Default comparability threshold: worst/best internal cost ratio.
pub const DEFAULT_RHO: f64 = 3.0;

/// Default negligibility threshold: worst internal / best external cost ratio.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Errors raised by domain validation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidatorError {
    #[error("view for domain {0} has an empty internal or external path list")]
    EmptyView(DomainId),
    #[error("path {path:?} carries metric {found:?}, expected {expected:?}")]
    MixedMetrics {
        path: String,
        expected: String,
        found: String,
    },
    #[error("path {0:?} has zero cost, which makes the ratios undefined")]
    ZeroCost(String),
    #[error("path {path:?} has cost {value}, which is not a positive finite number")]
    InvalidCost { path: String, value: f64 },
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
}

impl ValidatorError {
    /// Canonical error name, used verbatim on the wire.
    pub fn name(&self) -> &'static str {
        match self {
            ValidatorError::EmptyView(_) => "EmptyView",
            ValidatorError::MixedMetrics { .. } => "MixedMetrics",
            ValidatorError::ZeroCost(_) => "ZeroCost",
            ValidatorError::InvalidCost { .. } => "InvalidCost",
            ValidatorError::InvalidThreshold(_) => "InvalidThreshold",
        }
    }
}

/// An intra-domain path observation: an entity to a gateway or theodolite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalPath {
    pub from: String,
    pub to: String,
    pub value: f64,
    /// Per-path metric override; must match the view metric when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
}

/// A path from a theodolite to a point outside the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalPath {
    pub theodolite: String,
    pub outside: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
}

/// Everything the validator needs to judge one domain. Gateways appear
/// only as opaque endpoint labels; they are not registered entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntraDomainView {
    pub domain: DomainId,
    pub metric: String,
    pub polarity: Polarity,
    pub internal_paths: Vec<InternalPath>,
    pub external_paths: Vec<ExternalPath>,
}

/// Validation verdict for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub domain: DomainId,
    /// Worst/best internal path cost ratio, always >= 1.
    pub comparability_ratio: f64,
    /// Worst internal / best external cost ratio.
    pub negligibility_ratio: f64,
    pub passes: bool,
    pub violations: Vec<String>,
}

struct Costed {
    label: String,
    cost: f64,
}

fn to_cost(polarity: Polarity, label: String, value: f64) -> Result<Costed, ValidatorError> {
    if !value.is_finite() || value < 0.0 {
        return Err(ValidatorError::InvalidCost { path: label, value });
    }
    let cost = match polarity {
        Polarity::LowerIsBetter => value,
        Polarity::HigherIsBetter => {
            if value == 0.0 {
                return Err(ValidatorError::ZeroCost(label));
            }
            1.0 / value
        }
    };
    Ok(Costed { label, cost })
}

fn check_metric(
    expected: &str,
    path_metric: Option<&String>,
    label: &str,
) -> Result<(), ValidatorError> {
    if let Some(found) = path_metric {
        if found != expected {
            return Err(ValidatorError::MixedMetrics {
                path: label.to_string(),
                expected: expected.to_string(),
                found: found.clone(),
            });
        }
    }
    Ok(())
}

/// Checks the comparability and negligibility properties for one domain
/// against the thresholds `rho` (> 1) and `epsilon` (in (0, 1)).
///
/// Every violated inequality contributes one violation entry naming the
/// offending path.
pub fn validate_domain(
    view: &IntraDomainView,
    rho: f64,
    epsilon: f64,
) -> Result<ValidationReport, ValidatorError> {
    if !(rho.is_finite() && rho > 1.0) {
        return Err(ValidatorError::InvalidThreshold(format!(
            "rho must be a finite number > 1, got {rho}"
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0) {
        return Err(ValidatorError::InvalidThreshold(format!(
            "epsilon must be in (0, 1), got {epsilon}"
        )));
    }
    if view.internal_paths.is_empty() || view.external_paths.is_empty() {
        return Err(ValidatorError::EmptyView(view.domain.clone()));
    }

    let mut internal = Vec::with_capacity(view.internal_paths.len());
    for p in &view.internal_paths {
        let label = format!("internal {}<->{}", p.from, p.to);
        check_metric(&view.metric, p.metric.as_ref(), &label)?;
        internal.push(to_cost(view.polarity, label, p.value)?);
    }
    let mut external = Vec::with_capacity(view.external_paths.len());
    for p in &view.external_paths {
        let label = format!("external {}->{}", p.theodolite, p.outside);
        check_metric(&view.metric, p.metric.as_ref(), &label)?;
        external.push(to_cost(view.polarity, label, p.value)?);
    }

    // A zero-cost internal path drives the comparability denominator to
    // zero; a zero-cost external path does the same for negligibility.
    if let Some(zero) = internal
        .iter()
        .chain(external.iter())
        .find(|c| c.cost == 0.0)
    {
        return Err(ValidatorError::ZeroCost(zero.label.clone()));
    }

    let min_internal = internal
        .iter()
        .map(|c| c.cost)
        .fold(f64::INFINITY, f64::min);
    let max_internal = internal.iter().map(|c| c.cost).fold(0.0, f64::max);
    let min_external = external
        .iter()
        .map(|c| c.cost)
        .fold(f64::INFINITY, f64::min);

    let comparability_ratio = max_internal / min_internal;
    let negligibility_ratio = max_internal / min_external;

    let mut violations = Vec::new();
    for c in &internal {
        if c.cost > rho * min_internal {
            violations.push(format!(
                "comparability: {} cost {} exceeds {rho} x best internal cost {}",
                c.label, c.cost, min_internal
            ));
        }
        if c.cost > epsilon * min_external {
            violations.push(format!(
                "negligibility: {} cost {} exceeds {epsilon} x best external cost {}",
                c.label, c.cost, min_external
            ));
        }
    }

    let passes = comparability_ratio <= rho && negligibility_ratio <= epsilon;
    Ok(ValidationReport {
        domain: view.domain.clone(),
        comparability_ratio,
        negligibility_ratio,
        passes,
        violations,
    })
}

/// Number of communication entities to monitor under a full mesh:
/// D(D-1)/2 unordered pairs, D(D-1) ordered ones.
pub fn mesh_cost(num_domains: u64, directed: bool) -> u64 {
    let ordered = num_domains.saturating_mul(num_domains.saturating_sub(1));
    if directed {
        ordered
    } else {
        ordered / 2
    }
}

/// Why a domain pair is not covered by the monitoring mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverageReason {
    NoDesignation,
    NoMeasurement,
}

/// A domain pair missing from the mesh, in lexicographic orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageGap {
    pub domain_a: DomainId,
    pub domain_b: DomainId,
    pub reason: CoverageReason,
}

/// Lists every domain pair that lacks a designation, or has one (in either
/// orientation) but was never measured. One row per unordered pair, sorted.
pub fn coverage_gaps(registry: &Registry, store: &MeasurementStore) -> Vec<CoverageGap> {
    let domains: Vec<&DomainId> = registry.domains().collect();
    let mut gaps = Vec::new();
    for i in 0..domains.len() {
        for j in (i + 1)..domains.len() {
            let (a, b) = (domains[i], domains[j]);
            let forward = registry.lookup_designation(a.as_str(), b.as_str());
            let Some(lookup) = forward else {
                gaps.push(CoverageGap {
                    domain_a: a.clone(),
                    domain_b: b.clone(),
                    reason: CoverageReason::NoDesignation,
                });
                continue;
            };
            // Covered if any orientation's designated stream was measured.
            let mut measured = stream_measured(store, lookup.designation);
            if !measured {
                if let Some(other) = registry.lookup_designation(b.as_str(), a.as_str()) {
                    if !std::ptr::eq(other.designation, lookup.designation) {
                        measured = stream_measured(store, other.designation);
                    }
                }
            }
            if !measured {
                gaps.push(CoverageGap {
                    domain_a: a.clone(),
                    domain_b: b.clone(),
                    reason: CoverageReason::NoMeasurement,
                });
            }
        }
    }
    gaps
}

fn stream_measured(store: &MeasurementStore, d: &crate::registry::TheodoliteDesignation) -> bool {
    store.has_measurement_for_pair(d.theodolite_a.as_str(), d.theodolite_b.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Polarity;
    use crate::registry::{EntityId, EntityKind};

    fn dom(s: &str) -> DomainId {
        DomainId::new(s).unwrap()
    }

    fn delay_view(internal: &[f64], external: &[f64]) -> IntraDomainView {
        IntraDomainView {
            domain: dom("D1"),
            metric: "PathDelay".into(),
            polarity: Polarity::LowerIsBetter,
            internal_paths: internal
                .iter()
                .enumerate()
                .map(|(i, &value)| InternalPath {
                    from: format!("C{i}"),
                    to: "gateway".into(),
                    value,
                    metric: None,
                })
                .collect(),
            external_paths: external
                .iter()
                .enumerate()
                .map(|(i, &value)| ExternalPath {
                    theodolite: "T1".into(),
                    outside: format!("out{i}"),
                    value,
                    metric: None,
                })
                .collect(),
        }
    }

    #[test]
    fn validate_passing_view() {
        let view = delay_view(&[1.0, 1.2, 0.9], &[50.0, 80.0]);
        let report = validate_domain(&view, 2.0, 0.1).unwrap();
        assert!((report.comparability_ratio - 1.2 / 0.9).abs() < 1e-12);
        assert!((report.negligibility_ratio - 1.2 / 50.0).abs() < 1e-12);
        assert!(report.passes);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn validate_comparability_failure_names_path() {
        let view = delay_view(&[1.0, 10.0], &[50.0, 80.0]);
        let report = validate_domain(&view, 2.0, 0.3).unwrap();
        assert!(!report.passes);
        assert!((report.comparability_ratio - 10.0).abs() < 1e-12);
        assert!(report
            .violations
            .iter()
            .any(|v| v.starts_with("comparability") && v.contains("C1") && v.contains("10")));
    }

    #[test]
    fn validate_negligibility_failure() {
        let view = delay_view(&[1.0], &[5.0]);
        let report = validate_domain(&view, 2.0, 0.1).unwrap();
        assert!(!report.passes);
        assert!((report.negligibility_ratio - 0.2).abs() < 1e-12);
        assert!(report
            .violations
            .iter()
            .any(|v| v.starts_with("negligibility")));
    }

    #[test]
    fn validate_guards_inputs() {
        let view = delay_view(&[], &[50.0]);
        assert_eq!(
            validate_domain(&view, 2.0, 0.1).unwrap_err(),
            ValidatorError::EmptyView(dom("D1"))
        );

        let view = delay_view(&[1.0], &[]);
        assert!(matches!(
            validate_domain(&view, 2.0, 0.1),
            Err(ValidatorError::EmptyView(_))
        ));

        let view = delay_view(&[1.0], &[0.0]);
        assert!(matches!(
            validate_domain(&view, 2.0, 0.1),
            Err(ValidatorError::ZeroCost(_))
        ));

        let view = delay_view(&[1.0], &[-3.0]);
        assert!(matches!(
            validate_domain(&view, 2.0, 0.1),
            Err(ValidatorError::InvalidCost { .. })
        ));

        let view = delay_view(&[1.0], &[50.0]);
        assert!(matches!(
            validate_domain(&view, 1.0, 0.1),
            Err(ValidatorError::InvalidThreshold(_))
        ));
        assert!(matches!(
            validate_domain(&view, 2.0, 1.5),
            Err(ValidatorError::InvalidThreshold(_))
        ));
    }

    #[test]
    fn validate_rejects_mixed_metrics() {
        let mut view = delay_view(&[1.0, 1.1], &[50.0]);
        view.internal_paths[1].metric = Some("Throughput".into());
        assert!(matches!(
            validate_domain(&view, 2.0, 0.1),
            Err(ValidatorError::MixedMetrics { .. })
        ));
    }

    #[test]
    fn validate_higher_is_better_inverts_to_costs() {
        // Throughput 100 inside, 2 outside: costs 0.01 and 0.5.
        let view = IntraDomainView {
            domain: dom("D1"),
            metric: "Throughput".into(),
            polarity: Polarity::HigherIsBetter,
            internal_paths: vec![
                InternalPath {
                    from: "C1".into(),
                    to: "gw".into(),
                    value: 100.0,
                    metric: None,
                },
                InternalPath {
                    from: "C2".into(),
                    to: "gw".into(),
                    value: 80.0,
                    metric: None,
                },
            ],
            external_paths: vec![ExternalPath {
                theodolite: "T1".into(),
                outside: "out".into(),
                value: 2.0,
                metric: None,
            }],
        };
        let report = validate_domain(&view, 2.0, 0.1).unwrap();
        // max internal cost 1/80, min internal 1/100, min external 1/2.
        assert!((report.comparability_ratio - 1.25).abs() < 1e-12);
        assert!((report.negligibility_ratio - (1.0 / 80.0) / 0.5).abs() < 1e-12);
        assert!(report.passes);

        // Zero throughput has no reciprocal cost.
        let mut bad = view.clone();
        bad.internal_paths[0].value = 0.0;
        assert!(matches!(
            validate_domain(&bad, 2.0, 0.1),
            Err(ValidatorError::ZeroCost(_))
        ));
    }

    #[test]
    fn validate_scale_invariance() {
        let base = delay_view(&[1.0, 1.2, 0.9], &[50.0, 80.0]);
        let r1 = validate_domain(&base, 2.0, 0.1).unwrap();
        let scaled = delay_view(&[7.0, 8.4, 6.3], &[350.0, 560.0]);
        let r2 = validate_domain(&scaled, 2.0, 0.1).unwrap();
        assert!((r1.comparability_ratio - r2.comparability_ratio).abs() < 1e-9);
        assert!((r1.negligibility_ratio - r2.negligibility_ratio).abs() < 1e-9);
        assert_eq!(r1.passes, r2.passes);
    }

    #[test]
    fn mesh_cost_examples() {
        assert_eq!(mesh_cost(4, false), 6);
        assert_eq!(mesh_cost(1, false), 0);
        assert_eq!(mesh_cost(1, true), 0);
        assert_eq!(mesh_cost(20, true), 380);
    }

    fn coverage_fixture() -> (Registry, MeasurementStore) {
        let mut reg = Registry::new();
        let id = |s: &str| EntityId::new(s).unwrap();
        for (t, d) in [("T1", "D1"), ("T2", "D2"), ("T3", "D3")] {
            reg.register_entity(id(t), EntityKind::Theodolite, dom(d))
                .unwrap();
        }
        reg.designate_theodolites(dom("D1"), dom("D2"), id("T1"), id("T2"))
            .unwrap();
        reg.designate_theodolites(dom("D1"), dom("D3"), id("T1"), id("T3"))
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
        (reg, store)
    }

    #[test]
    fn coverage_gaps_reports_missing_designation() {
        let (reg, mut store) = coverage_fixture();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T2", 0.1, 1)
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T3", 0.1, 2)
            .unwrap();
        let gaps = coverage_gaps(&reg, &store);
        assert_eq!(
            gaps,
            vec![CoverageGap {
                domain_a: dom("D2"),
                domain_b: dom("D3"),
                reason: CoverageReason::NoDesignation,
            }]
        );
    }

    #[test]
    fn coverage_gaps_empty_on_full_measured_mesh() {
        let (mut reg, mut store) = coverage_fixture();
        let id = |s: &str| EntityId::new(s).unwrap();
        reg.designate_theodolites(dom("D2"), dom("D3"), id("T2"), id("T3"))
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T2", 0.1, 1)
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T3", 0.1, 2)
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T2", "T3", 0.1, 3)
            .unwrap();
        assert!(coverage_gaps(&reg, &store).is_empty());
    }

    #[test]
    fn coverage_gaps_reports_unmeasured_designations() {
        let (reg, store) = coverage_fixture();
        let gaps = coverage_gaps(&reg, &store);
        assert_eq!(
            gaps,
            vec![
                CoverageGap {
                    domain_a: dom("D1"),
                    domain_b: dom("D2"),
                    reason: CoverageReason::NoMeasurement,
                },
                CoverageGap {
                    domain_a: dom("D1"),
                    domain_b: dom("D3"),
                    reason: CoverageReason::NoMeasurement,
                },
                CoverageGap {
                    domain_a: dom("D2"),
                    domain_b: dom("D3"),
                    reason: CoverageReason::NoDesignation,
                },
            ]
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn costs(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(0.01f64..1000.0, n)
        }

        proptest! {
            /// Scaling every cost by a positive constant leaves the ratios
            /// and the verdict unchanged.
            #[test]
            fn scale_invariance(
                internal in costs(1..8),
                external in costs(1..5),
                scale in 0.001f64..1000.0,
            ) {
                let base = delay_view(&internal, &external);
                let scaled_internal: Vec<f64> = internal.iter().map(|v| v * scale).collect();
                let scaled_external: Vec<f64> = external.iter().map(|v| v * scale).collect();
                let scaled = delay_view(&scaled_internal, &scaled_external);

                let r1 = validate_domain(&base, 3.0, 0.1).unwrap();
                let r2 = validate_domain(&scaled, 3.0, 0.1).unwrap();
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
                prop_assert!(close(r1.comparability_ratio, r2.comparability_ratio));
                prop_assert!(close(r1.negligibility_ratio, r2.negligibility_ratio));
                // The verdict itself can only flip within float noise of the
                // threshold, which the cost ranges above keep away from.
                prop_assert_eq!(r1.passes, r2.passes);
            }

            /// Raising one internal cost never lowers the negligibility
            /// ratio; it never lowers the comparability ratio either,
            /// unless the raised path was the sole cheapest one (raising
            /// the minimum genuinely narrows the worst/best spread).
            /// Improving an external path never lowers negligibility.
            #[test]
            fn monotonicity(
                internal in costs(1..8),
                external in costs(1..5),
                pick in any::<prop::sample::Index>(),
                bump in 1.0f64..10.0,
            ) {
                let base = validate_domain(&delay_view(&internal, &external), 3.0, 0.1).unwrap();

                let mut worse_internal = internal.clone();
                let i = pick.index(worse_internal.len());
                let was_unique_min = internal
                    .iter()
                    .enumerate()
                    .all(|(n, &v)| n == i || v > internal[i]);
                worse_internal[i] *= bump;
                let worsened =
                    validate_domain(&delay_view(&worse_internal, &external), 3.0, 0.1).unwrap();
                prop_assert!(worsened.negligibility_ratio >= base.negligibility_ratio - 1e-12);
                if !was_unique_min {
                    prop_assert!(
                        worsened.comparability_ratio >= base.comparability_ratio - 1e-12
                    );
                }

                let mut better_external = external.clone();
                let j = pick.index(better_external.len());
                better_external[j] /= bump;
                let improved =
                    validate_domain(&delay_view(&internal, &better_external), 3.0, 0.1).unwrap();
                prop_assert!(improved.negligibility_ratio >= base.negligibility_ratio - 1e-12);
            }

            /// Coverage gaps equal a brute-force enumeration over all domain
            /// pairs minus the covered ones.
            #[test]
            fn coverage_matches_enumeration(
                designated in prop::collection::vec((0usize..5, 0usize..5), 0..12),
                measured in prop::collection::vec(any::<bool>(), 12),
            ) {
                let mut reg = Registry::new();
                let id = |s: String| EntityId::new(s).unwrap();
                for d in 0..5 {
                    reg.register_entity(
                        id(format!("T{d}")),
                        EntityKind::Theodolite,
                        dom(&format!("D{d}")),
                    )
                    .unwrap();
                }
                let mut store = MeasurementStore::new();
                store
                    .define_metric("NetworkPacketLoss", Polarity::LowerIsBetter, None, None)
                    .unwrap();
                let mut ts = 0;
                for (n, (a, b)) in designated.iter().enumerate() {
                    if a == b {
                        continue;
                    }
                    let ok = reg
                        .designate_theodolites(
                            dom(&format!("D{a}")),
                            dom(&format!("D{b}")),
                            id(format!("T{a}")),
                            id(format!("T{b}")),
                        )
                        .is_ok();
                    if ok && measured[n] {
                        ts += 1;
                        store
                            .ingest(
                                &reg,
                                "NetworkPacketLoss",
                                &format!("T{a}"),
                                &format!("T{b}"),
                                0.1,
                                ts,
                            )
                            .unwrap();
                    }
                }

                // Independent enumeration over all unordered domain pairs.
                let mut expected = Vec::new();
                for a in 0..5 {
                    for b in (a + 1)..5 {
                        let rows: Vec<_> = reg
                            .designations()
                            .filter(|d| {
                                (d.domain_a.as_str() == format!("D{a}")
                                    && d.domain_b.as_str() == format!("D{b}"))
                                    || (d.domain_a.as_str() == format!("D{b}")
                                        && d.domain_b.as_str() == format!("D{a}"))
                            })
                            .collect();
                        if rows.is_empty() {
                            expected.push((format!("D{a}"), format!("D{b}"), CoverageReason::NoDesignation));
                        } else if !rows.iter().any(|d| {
                            store.has_measurement_for_pair(
                                d.theodolite_a.as_str(),
                                d.theodolite_b.as_str(),
                            )
                        }) {
                            expected.push((format!("D{a}"), format!("D{b}"), CoverageReason::NoMeasurement));
                        }
                    }
                }
                let got: Vec<_> = coverage_gaps(&reg, &store)
                    .into_iter()
                    .map(|g| (g.domain_a.to_string(), g.domain_b.to_string(), g.reason))
                    .collect();
                prop_assert_eq!(got, expected);
            }
        }
    }

    #[test]
    fn coverage_counts_reverse_orientation_measurements() {
        let (mut reg, mut store) = coverage_fixture();
        let id = |s: &str| EntityId::new(s).unwrap();
        // Forward designation unmeasured, reverse designated and measured.
        reg.designate_theodolites(dom("D2"), dom("D1"), id("T2"), id("T1"))
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T2", "T1", 0.1, 1)
            .unwrap();
        store
            .ingest(&reg, "NetworkPacketLoss", "T1", "T3", 0.1, 2)
            .unwrap();
        let gaps = coverage_gaps(&reg, &store);
        assert!(gaps
            .iter()
            .all(|g| !(g.domain_a == dom("D1") && g.domain_b == dom("D2"))));
    }
}
