//! Benchmark fixtures shared by the criterion targets.

use gridmon_core::simulator::{generate, probe_all, sim_store, TopologySpec};
use gridmon_core::{MeasurementStore, Registry};

/// A probed mesh fixture of the given size.
pub fn probed_mesh(num_domains: usize, seed: u64) -> (Registry, MeasurementStore) {
    let spec = TopologySpec {
        num_domains,
        computing_per_domain: 4,
        storage_per_domain: 4,
        theodolites_per_domain: 2,
        internal_cost_range: (1.0, 1.3),
        external_cost_range: (50.0, 100.0),
        noise_fraction: 0.02,
        seed,
    };
    let (registry, truth) = generate(&spec).expect("valid spec");
    let mut store = sim_store();
    for record in probe_all(&truth, &registry, spec.noise_fraction, 0) {
        store
            .ingest_record(&registry, &record)
            .expect("valid probe");
    }
    (registry, store)
}
