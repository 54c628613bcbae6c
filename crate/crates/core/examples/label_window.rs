//! Label one window: sample keys within an operation budget, estimate
//! hazards, reconstruct the ordering and derive look-back labels.

use edgecache::oracle::{label_window, LabelingConfig};
use edgecache::trace::{generate_workload, trace_stats, GeneratorConfig};

fn main() -> edgecache::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/small_workload.json");
    let config: GeneratorConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let trace = generate_workload(&config.to_workload())?;
    let capacity = trace_stats(&trace)?.unique_bytes / 20;
    let window = &trace.requests[..2000];

    for look_back in [true, false] {
        let cfg = LabelingConfig { op_budget: 1_000_000, look_back, ..Default::default() };
        let w = label_window(window, capacity, &cfg)?;
        let hits = w.labels.iter().filter(|l| l.hro_hit).count();
        let friendly = w.labels.iter().filter(|l| l.cache_friendly).count();
        println!(
            "look_back={look_back:<5} mode={:?} sampled {} keys (rate {:.3}), {} labels, {hits} HRO hits, {friendly} friendly",
            w.mode,
            w.plan.sampled_keys.len(),
            w.plan.sample_rate,
            w.labels.len()
        );
    }
    Ok(())
}
