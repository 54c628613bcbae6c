//! Train the boosted-tree classifier on labels from the oracle, save it as
//! JSON and score held-out rows.

use edgecache::hrcache::{label_trace, training_set, HrCacheConfig};
use edgecache::model::{train_with_loss, GbdtModel, GbdtParams};
use edgecache::trace::{generate_workload, trace_stats, GeneratorConfig};

fn main() -> edgecache::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/small_workload.json");
    let config: GeneratorConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let trace = generate_workload(&config.to_workload())?;
    let capacity = trace_stats(&trace)?.unique_bytes / 20;

    let dumped = label_trace(&trace.requests, capacity, &HrCacheConfig::default())?;
    let rows: Vec<_> = dumped.iter().map(|d| (d.features, d.label.cache_friendly)).collect();
    let (fit, held_out) = rows.split_at(rows.len() * 4 / 5);

    let params = GbdtParams { n_trees: 30, ..Default::default() };
    let (model, losses) = train_with_loss(&training_set(fit), &params)?;
    println!("{} training rows, log-loss {:.4} -> {:.4}", fit.len(), losses[0], losses[losses.len() - 1]);

    let json = model.to_json()?;
    let model = GbdtModel::from_json(&json)?;
    let x: Vec<_> = held_out.iter().map(|(f, _)| f.to_row()).collect();
    let p = model.predict_batch(&x);
    let correct = p.iter().zip(held_out).filter(|(p, (_, y))| (**p > 0.5) == *y).count();
    println!("held-out accuracy {:.3} on {} rows, model is {} bytes of JSON", correct as f64 / x.len() as f64, x.len(), json.len());
    Ok(())
}
