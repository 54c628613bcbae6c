//! The mixed workload with the full learned policy and its two ablations:
//! labels without look-back, and constant-rate hazards.
//!
//! ```text
//! cargo run --release --example ablation [seed]
//! ```

use edgecache::engine::{run_sim, traffic_reduction, PolicySpec, SimOptions, Warmup};
use edgecache::hazard::HazardMode;
use edgecache::hrcache::HrCacheConfig;
use edgecache::trace::{generate_workload, trace_stats, WorkloadConfig};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");

fn main() -> edgecache::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut workload: WorkloadConfig = serde_json::from_str(&std::fs::read_to_string(format!("{DATA}/mixed_workload.json"))?)?;
    workload.seed = seed;
    let full: HrCacheConfig = serde_json::from_str(&std::fs::read_to_string(format!("{DATA}/hrcache.json"))?)?;

    let trace = generate_workload(&workload)?;
    let capacity = trace_stats(&trace)?.unique_bytes / 20;
    let opts = SimOptions { warmup: Warmup::FirstWindow { multiplier: full.window.multiplier }, seed: Some(seed), ..Default::default() };
    let lru = run_sim(&trace, &PolicySpec::Lru, capacity, &opts)?;

    let mut no_look_back = full;
    no_look_back.window.look_back = false;
    let mut poisson = full;
    poisson.window.hazard_mode = HazardMode::Poisson;
    for spec in [PolicySpec::S4Lru, PolicySpec::hrcache(full), PolicySpec::hrcache(no_look_back), PolicySpec::hrcache(poisson)] {
        let label = match &spec {
            PolicySpec::HrCache(c) if !c.window.look_back => "hrcache, no look-back".to_string(),
            PolicySpec::HrCache(c) if c.window.hazard_mode == HazardMode::Poisson => "hrcache, poisson".to_string(),
            s => s.name().to_string(),
        };
        let r = run_sim(&trace, &spec, capacity, &opts)?;
        println!("{label:>22}: {:>7.2}% vs LRU ({} models)", traffic_reduction(lru.miss_bytes, r.miss_bytes).0, r.models_trained);
    }
    Ok(())
}
