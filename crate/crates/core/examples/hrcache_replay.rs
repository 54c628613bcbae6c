//! Replay a workload through the learned policy and inspect its windows,
//! queues and prediction counters.
//!
//! ```text
//! cargo run --release --example hrcache_replay [workload.json]
//! ```

use edgecache::hrcache::{first_window_boundary, HrCache, HrCacheConfig};
use edgecache::policies::CachePolicy;
use edgecache::trace::{generate_workload, trace_stats, GeneratorConfig};

fn main() -> edgecache::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/small_workload.json").into());
    let config: GeneratorConfig = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let trace = generate_workload(&config.to_workload())?;
    let capacity = trace_stats(&trace)?.unique_bytes / 20;

    let cfg = HrCacheConfig { min_labels: 50, ..Default::default() };
    let warmup = first_window_boundary(&trace.requests, capacity, cfg.window.multiplier).unwrap_or(trace.len());
    let mut policy = HrCache::new(capacity, cfg)?;
    policy.measure_from(warmup);
    let mut outcomes = Vec::new();
    policy.replay(&trace.requests, &mut outcomes);

    for (i, w) in policy.window_log().iter().enumerate() {
        println!(
            "window {i}: closed at {}, {} requests, {} sampled keys, {}/{} friendly labels, trained {}",
            w.closed_at, w.requests, w.sampled_keys, w.positive_labels, w.labels, w.trained
        );
    }
    let q = policy.queues();
    println!("main {} objects / {} bytes, candidate {} objects / {} bytes", q.main().len(), q.main().bytes(), q.candidate().len(), q.candidate().bytes());
    let hits = outcomes[warmup..].iter().filter(|o| o.is_hit()).count();
    println!("measured hit ratio {:.4} after {warmup} warmup requests", hits as f64 / (trace.len() - warmup) as f64);
    println!("{:?}", policy.counters());
    Ok(())
}
