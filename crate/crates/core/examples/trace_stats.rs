//! Generate a synthetic mixed workload, write it in the plain text format and
//! read it back.
//!
//! ```text
//! cargo run --release --example trace_stats [workload.json]
//! ```

use edgecache::trace::{generate_workload, parse_trace, trace_stats, write_trace, GeneratorConfig, ParseOptions};

fn main() -> edgecache::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/small_workload.json").into());
    let config: GeneratorConfig = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let trace = generate_workload(&config.to_workload())?;

    let mut text = Vec::new();
    write_trace(&trace, &mut text)?;
    let back = parse_trace(&text[..], ParseOptions::default())?;
    assert_eq!(back.requests, trace.requests);

    println!("{}", String::from_utf8_lossy(&text).lines().take(5).collect::<Vec<_>>().join("\n"));
    println!("...");
    println!("{}", serde_json::to_string_pretty(&trace_stats(&trace)?)?);
    Ok(())
}
