//! Hazard-rate-ordering upper bounds against online policies, with the true
//! hazards of the generator and with hazards estimated from the trace.

use edgecache::engine::{run_sim, PolicySpec, SimOptions, Warmup};
use edgecache::hazard::{HazardConfig, HazardMode, HazardTable};
use edgecache::oracle::{hro_upper_bound, HroMode};
use edgecache::trace::{generate_synthetic, trace_stats, Interarrival, SizeModel, SyntheticConfig, WorkloadConfig};

fn main() -> edgecache::Result<()> {
    let cfg = SyntheticConfig {
        n_objects: 100,
        n_requests: 10_000,
        popularity_alpha: 0.8,
        interarrival: Interarrival::GeneralizedPareto { sigma: 1.0, xi: 0.4 },
        size_model: SizeModel::Constant { bytes: 1 },
        seed: 3,
    };
    let trace = generate_synthetic(&cfg)?;
    let capacity = 10;

    let truth = HazardTable::from_closed_forms(&WorkloadConfig::from(&cfg).true_hazards());
    let keys: Vec<u64> = (0..trace_stats(&trace)?.unique_objects).collect();
    let estimated = HazardTable::estimate(&trace.requests, &keys, &HazardConfig::default())?;
    let poisson = HazardTable::estimate(&trace.requests, &keys, &HazardConfig { mode: HazardMode::Poisson, ..Default::default() })?;

    for (name, table) in [("true", &truth), ("kernel", &estimated), ("poisson", &poisson)] {
        let b = hro_upper_bound(&trace.requests, capacity, table, HroMode::HrE)?;
        println!("HR-E bound ({name:>7} hazards): {:.4}", b.hit_probability);
    }
    let opts = SimOptions { warmup: Warmup::None, ..Default::default() };
    for p in ["lru", "lru4", "s4lru", "lfuda", "belady"] {
        let r = run_sim(&trace, &p.parse::<PolicySpec>()?, capacity, &opts)?;
        println!("{p:>26}: {:.4}", r.object_hit_ratio);
    }
    Ok(())
}
