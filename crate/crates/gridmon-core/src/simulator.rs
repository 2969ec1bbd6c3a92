//! Synthetic grid topologies with known ground-truth connectivity.
//!
//! The generator builds domains, entities, and a full mesh of theodolite
//! designations, with per-link costs drawn from configured ranges: every
//! entity has a cost to its domain gateway, every domain pair has an
//! inter-gateway cost, and the cost between two entities in different
//! domains is the sum internal(from) + inter-domain + internal(to). That
//! additive model is the harness's private oracle; nothing in the public
//! API composes costs across links.
//!
//! Probing emits one measurement per designated theodolite pair through
//! the ordinary ingestion format, optionally with bounded multiplicative
//! noise, so the whole pipeline can be scored against the truth: how well
//! do theodolite streams estimate entity-pair connectivity?
//!
//! Everything is deterministic for a given seed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::{MeasurementRecord, MeasurementStore, Polarity};
use crate::registry::{DomainId, EntityId, EntityKind, Registry};
use crate::validator::{ExternalPath, InternalPath, IntraDomainView};

/// Metric name used for simulated probes.
pub const SIM_METRIC: &str = "PathDelay";

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulatorError {
    #[error("invalid topology spec: {0}")]
    InvalidSpec(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("incomplete mesh: domain pair ({0}, {1}) has no measured designation")]
    IncompleteMesh(DomainId, DomainId),
}

impl SimulatorError {
    /// Canonical error name, used verbatim on the wire.
    pub fn name(&self) -> &'static str {
        match self {
            SimulatorError::InvalidSpec(_) => "InvalidSpec",
            SimulatorError::UnknownMetric(_) => "UnknownMetric",
            SimulatorError::IncompleteMesh(_, _) => "IncompleteMesh",
        }
    }
}

/// Parameters of a synthetic topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub num_domains: usize,
    pub computing_per_domain: usize,
    pub storage_per_domain: usize,
    pub theodolites_per_domain: usize,
    /// Entity-to-gateway cost range, inclusive. The lower bound may be
    /// zero for degenerate topologies where theodolites sit on gateways.
    pub internal_cost_range: (f64, f64),
    /// Inter-gateway cost range, inclusive; strictly positive.
    pub external_cost_range: (f64, f64),
    /// Multiplicative probe noise: values are scaled by (1 + u) with u
    /// uniform in [-noise_fraction, +noise_fraction].
    pub noise_fraction: f64,
    pub seed: u64,
}

impl TopologySpec {
    pub fn validate(&self) -> Result<(), SimulatorError> {
        let fail = |msg: String| Err(SimulatorError::InvalidSpec(msg));
        if self.num_domains < 1 {
            return fail("num_domains must be at least 1".into());
        }
        if self.theodolites_per_domain < 1 {
            return fail("every domain needs at least one theodolite".into());
        }
        let (ilo, ihi) = self.internal_cost_range;
        if !(ilo.is_finite() && ihi.is_finite() && 0.0 <= ilo && ilo <= ihi) {
            return fail(format!(
                "internal cost range [{ilo}, {ihi}] is not a valid interval"
            ));
        }
        let (elo, ehi) = self.external_cost_range;
        if !(elo.is_finite() && ehi.is_finite() && 0.0 < elo && elo <= ehi) {
            return fail(format!(
                "external cost range [{elo}, {ehi}] must be a positive interval"
            ));
        }
        if !(self.noise_fraction.is_finite() && (0.0..1.0).contains(&self.noise_fraction)) {
            return fail(format!(
                "noise fraction {} must lie in [0, 1)",
                self.noise_fraction
            ));
        }
        Ok(())
    }

    /// True when internal costs sit strictly below external ones, the
    /// regime that makes theodolite measurements representative.
    pub fn is_compliant_regime(&self) -> bool {
        self.external_cost_range.0 > self.internal_cost_range.1
    }

    pub fn entities_per_domain(&self) -> usize {
        self.computing_per_domain + self.storage_per_domain + self.theodolites_per_domain
    }
}

/// Hidden per-link costs of a generated topology.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    seed: u64,
    /// Entity-to-own-gateway cost.
    internal: BTreeMap<EntityId, f64>,
    /// Gateway-to-gateway cost, keyed by the lexicographically smaller
    /// domain first (symmetric).
    inter: BTreeMap<DomainId, BTreeMap<DomainId, f64>>,
    membership: BTreeMap<EntityId, DomainId>,
}

impl GroundTruth {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn internal_cost(&self, entity: &str) -> Option<f64> {
        self.internal.get(entity).copied()
    }

    pub fn inter_domain_cost(&self, a: &str, b: &str) -> Option<f64> {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        self.inter.get(x)?.get(y).copied()
    }

    /// Cost between two entities in different domains under the additive
    /// path model; `None` for unknown entities or intra-domain pairs.
    pub fn entity_pair_cost(&self, from: &str, to: &str) -> Option<f64> {
        let da = self.membership.get(from)?;
        let db = self.membership.get(to)?;
        if da == db {
            return None;
        }
        let inter = self.inter_domain_cost(da.as_str(), db.as_str())?;
        Some(self.internal[from] + inter + self.internal[to])
    }
}

fn sample(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..=range.1)
    }
}

/// Generates a registry fixture plus its ground truth: `num_domains`
/// domains named `D1..`, entities named `C{d}-{k}` / `S{d}-{k}` /
/// `T{d}-{k}`, and one designation per ordered domain pair.
pub fn generate(spec: &TopologySpec) -> Result<(Registry, GroundTruth), SimulatorError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut registry = Registry::new();
    let mut truth = GroundTruth {
        seed: spec.seed,
        internal: BTreeMap::new(),
        inter: BTreeMap::new(),
        membership: BTreeMap::new(),
    };

    let domain_ids: Vec<DomainId> = (1..=spec.num_domains)
        .map(|d| DomainId::new(format!("D{d}")).expect("generated id"))
        .collect();
    let mut theodolites: Vec<Vec<EntityId>> = Vec::with_capacity(spec.num_domains);

    for (di, domain) in domain_ids.iter().enumerate() {
        let d = di + 1;
        let register = |name: String,
                        kind: EntityKind,
                        rng: &mut ChaCha8Rng,
                        registry: &mut Registry,
                        truth: &mut GroundTruth| {
            let id = EntityId::new(name).expect("generated id");
            registry
                .register_entity(id.clone(), kind, domain.clone())
                .expect("generated ids are unique");
            truth
                .internal
                .insert(id.clone(), sample(rng, spec.internal_cost_range));
            truth.membership.insert(id.clone(), domain.clone());
            id
        };
        for k in 1..=spec.computing_per_domain {
            register(
                format!("C{d}-{k}"),
                EntityKind::Computing,
                &mut rng,
                &mut registry,
                &mut truth,
            );
        }
        for k in 1..=spec.storage_per_domain {
            register(
                format!("S{d}-{k}"),
                EntityKind::Storage,
                &mut rng,
                &mut registry,
                &mut truth,
            );
        }
        let mut ts = Vec::with_capacity(spec.theodolites_per_domain);
        for k in 1..=spec.theodolites_per_domain {
            ts.push(register(
                format!("T{d}-{k}"),
                EntityKind::Theodolite,
                &mut rng,
                &mut registry,
                &mut truth,
            ));
        }
        theodolites.push(ts);
    }

    for i in 0..spec.num_domains {
        for j in (i + 1)..spec.num_domains {
            let cost = sample(&mut rng, spec.external_cost_range);
            let (a, b) = (&domain_ids[i], &domain_ids[j]);
            let (x, y) = if a.as_str() <= b.as_str() {
                (a, b)
            } else {
                (b, a)
            };
            truth
                .inter
                .entry(x.clone())
                .or_default()
                .insert(y.clone(), cost);
        }
    }

    // Full directed mesh: one designated theodolite pair per ordered pair.
    for i in 0..spec.num_domains {
        for j in 0..spec.num_domains {
            if i == j {
                continue;
            }
            let ta = theodolites[i][rng.gen_range(0..theodolites[i].len())].clone();
            let tb = theodolites[j][rng.gen_range(0..theodolites[j].len())].clone();
            registry
                .designate_theodolites(domain_ids[i].clone(), domain_ids[j].clone(), ta, tb)
                .expect("mesh designations are well formed");
        }
    }

    Ok((registry, truth))
}

/// One probe round: a measurement for every designation, in designation
/// order, with strictly increasing timestamps. Round `r` over `n`
/// designations covers timestamps `r*n + 1 ..= (r+1)*n`, so consecutive
/// rounds keep the whole stream strictly increasing.
pub fn probe_all(
    truth: &GroundTruth,
    registry: &Registry,
    noise_fraction: f64,
    round: u64,
) -> Vec<MeasurementRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);
    rng.set_stream(round.wrapping_add(1));
    let base = round * registry.designation_count() as u64;
    registry
        .designations()
        .enumerate()
        .map(|(i, d)| {
            let cost = truth
                .entity_pair_cost(d.theodolite_a.as_str(), d.theodolite_b.as_str())
                .expect("designated theodolites are cross-domain");
            let noise = sample(&mut rng, (-noise_fraction, noise_fraction));
            MeasurementRecord {
                metric: SIM_METRIC.to_string(),
                ta: d.theodolite_a.clone(),
                tb: d.theodolite_b.clone(),
                value: cost * (1.0 + noise),
                ts: base + i as u64 + 1,
            }
        })
        .collect()
}

/// A store with the simulation metric already defined.
pub fn sim_store() -> MeasurementStore {
    let mut store = MeasurementStore::new();
    store
        .define_metric(
            SIM_METRIC,
            Polarity::LowerIsBetter,
            Some("ms".to_string()),
            None,
        )
        .expect("fresh store");
    store
}

/// How well the theodolite streams estimate entity-pair connectivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativenessReport {
    /// Largest relative error over all cross-domain computing/storage pairs.
    pub worst: f64,
    /// Mean relative error over the same pairs.
    pub mean: f64,
    /// Number of ordered entity pairs evaluated.
    pub pairs: usize,
}

/// Scores every ordered cross-domain computing/storage entity pair: the
/// relative error between the latest designated theodolite value for the
/// pair's domains and the ground-truth entity-pair cost.
pub fn representativeness_error(
    truth: &GroundTruth,
    registry: &Registry,
    store: &MeasurementStore,
    metric: &str,
) -> Result<RepresentativenessReport, SimulatorError> {
    if store.metric(metric).is_none() {
        return Err(SimulatorError::UnknownMetric(metric.to_string()));
    }

    // Internal costs of the computing/storage members, grouped by domain.
    let domains: Vec<&DomainId> = registry.domains().collect();
    let mut internal_costs: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in registry.entities() {
        if matches!(e.kind, EntityKind::Computing | EntityKind::Storage) {
            let cost = truth
                .internal_cost(e.id.as_str())
                .expect("registry entities have ground truth");
            internal_costs
                .entry(e.domain.as_str())
                .or_default()
                .push(cost);
        }
    }

    let mut worst = 0.0_f64;
    let mut sum = 0.0_f64;
    let mut pairs = 0_usize;
    for from in &domains {
        for to in &domains {
            if from == to {
                continue;
            }
            let (Some(from_costs), Some(to_costs)) = (
                internal_costs.get(from.as_str()),
                internal_costs.get(to.as_str()),
            ) else {
                continue;
            };
            let lookup = registry
                .lookup_designation(from.as_str(), to.as_str())
                .ok_or_else(|| SimulatorError::IncompleteMesh((*from).clone(), (*to).clone()))?;
            let d = lookup.designation;
            let observed = store
                .latest_measurement(metric, d.theodolite_a.as_str(), d.theodolite_b.as_str())
                .ok_or_else(|| SimulatorError::IncompleteMesh((*from).clone(), (*to).clone()))?
                .value;
            let inter = truth
                .inter_domain_cost(from.as_str(), to.as_str())
                .expect("generated domains have inter costs");
            for &a in from_costs {
                for &b in to_costs {
                    let true_cost = a + inter + b;
                    let rel = (observed - true_cost).abs() / true_cost;
                    worst = worst.max(rel);
                    sum += rel;
                    pairs += 1;
                }
            }
        }
    }

    let mean = if pairs == 0 { 0.0 } else { sum / pairs as f64 };
    Ok(RepresentativenessReport { worst, mean, pairs })
}

/// Builds the validator's view of one generated domain: internal paths
/// entity-to-gateway and entity-to-theodolite, external paths theodolite
/// to every other domain's gateway.
pub fn domain_view(truth: &GroundTruth, registry: &Registry, domain: &str) -> IntraDomainView {
    let mut internal = Vec::new();
    let mut external = Vec::new();
    let members: Vec<_> = registry.members(domain).collect();
    let theodolites: Vec<_> = members
        .iter()
        .filter(|e| e.kind == EntityKind::Theodolite)
        .collect();

    for e in &members {
        if e.kind == EntityKind::Theodolite {
            continue;
        }
        let own = truth
            .internal_cost(e.id.as_str())
            .expect("member has truth");
        internal.push(InternalPath {
            from: e.id.to_string(),
            to: "gateway".to_string(),
            value: own,
            metric: None,
        });
        for t in &theodolites {
            let t_cost = truth
                .internal_cost(t.id.as_str())
                .expect("member has truth");
            internal.push(InternalPath {
                from: e.id.to_string(),
                to: t.id.to_string(),
                value: own + t_cost,
                metric: None,
            });
        }
    }
    for t in &theodolites {
        let t_cost = truth
            .internal_cost(t.id.as_str())
            .expect("member has truth");
        for other in registry.domains() {
            if other.as_str() == domain {
                continue;
            }
            if let Some(inter) = truth.inter_domain_cost(domain, other.as_str()) {
                external.push(ExternalPath {
                    theodolite: t.id.to_string(),
                    outside: format!("{other}/gateway"),
                    value: t_cost + inter,
                    metric: None,
                });
            }
        }
    }

    IntraDomainView {
        domain: DomainId::new(domain).expect("valid domain id"),
        metric: SIM_METRIC.to_string(),
        polarity: Polarity::LowerIsBetter,
        internal_paths: internal,
        external_paths: external,
    }
}

/// Views for every generated domain, in domain order.
pub fn domain_views(truth: &GroundTruth, registry: &Registry) -> Vec<IntraDomainView> {
    registry
        .domains()
        .map(|d| domain_view(truth, registry, d.as_str()))
        .collect()
}
