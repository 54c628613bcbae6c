//! Compare every policy at several cache sizes and report byte-miss savings
//! over LRU, as JSON and CSV.

use edgecache::engine::{compare, PolicySpec, SimOptions, Warmup};
use edgecache::hrcache::HrCacheConfig;
use edgecache::trace::{generate_workload, trace_stats, GeneratorConfig};

fn main() -> edgecache::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/small_workload.json");
    let config: GeneratorConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let trace = generate_workload(&config.to_workload())?;
    let unique = trace_stats(&trace)?.unique_bytes;
    let capacities = [unique / 50, unique / 20, unique / 10];

    let hr = HrCacheConfig { min_labels: 50, ..Default::default() };
    let specs: Vec<PolicySpec> = ["lru", "lru4", "s4lru", "lfuda", "belady", "hrcache"]
        .iter()
        .map(|p| p.parse::<PolicySpec>().map(|s| s.with_hrcache_config(hr)))
        .collect::<edgecache::Result<_>>()?;
    let opts = SimOptions { warmup: Warmup::FirstWindow { multiplier: hr.window.multiplier }, ..Default::default() };
    let report = compare(&trace, &specs, &capacities, &opts)?;

    for t in &report.traffic_reduction_vs_lru {
        println!("{:>8} @ {:>9}: {:>7.2}% fewer miss bytes than LRU", t.policy, t.capacity, t.percent);
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    println!("\n{}", String::from_utf8_lossy(&csv));
    Ok(())
}
