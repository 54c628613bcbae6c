//! Trace-driven simulation and policy comparison.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hrcache::{first_window_boundary, HrCache, HrCacheConfig};
use crate::policies::{Belady, CachePolicy, Lfuda, Lru, LruK, Outcome, PolicyCounters, S4Lru};
use crate::trace::Trace;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LRU_K: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Lru,
    LruK { k: usize },
    S4Lru,
    Lfuda,
    Belady,
    HrCache(Box<HrCacheConfig>),
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Lru => "lru",
            PolicySpec::LruK { .. } => "lruk",
            PolicySpec::S4Lru => "s4lru",
            PolicySpec::Lfuda => "lfuda",
            PolicySpec::Belady => "belady",
            PolicySpec::HrCache(_) => "hrcache",
        }
    }

    pub fn hrcache(config: HrCacheConfig) -> Self {
        PolicySpec::HrCache(Box::new(config))
    }

    /// Replaces the HR-Cache configuration; other policies are unchanged.
    pub fn with_hrcache_config(self, config: HrCacheConfig) -> Self {
        match self {
            PolicySpec::HrCache(_) => PolicySpec::hrcache(config),
            other => other,
        }
    }

    pub fn build(&self, capacity: u64, trace: &Trace) -> Result<Box<dyn CachePolicy>> {
        Ok(match self {
            PolicySpec::Lru => Box::new(Lru::new(capacity)),
            PolicySpec::LruK { k } => {
                if *k == 0 {
                    return Err(Error::InvalidConfig("LRU-K needs k >= 1".into()));
                }
                Box::new(LruK::new(capacity, *k))
            }
            PolicySpec::S4Lru => Box::new(S4Lru::new(capacity)),
            PolicySpec::Lfuda => Box::new(Lfuda::new(capacity)),
            PolicySpec::Belady => Box::new(Belady::for_trace(capacity, &trace.requests)),
            PolicySpec::HrCache(config) => Box::new(HrCache::new(capacity, **config)?),
        })
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lru" => Ok(PolicySpec::Lru),
            "lruk" | "lru-k" | "lru4" => Ok(PolicySpec::LruK { k: DEFAULT_LRU_K }),
            "s4lru" => Ok(PolicySpec::S4Lru),
            "lfuda" | "lfu-da" => Ok(PolicySpec::Lfuda),
            "belady" => Ok(PolicySpec::Belady),
            "hrcache" | "hr-cache" => Ok(PolicySpec::hrcache(HrCacheConfig::default())),
            _ => Err(Error::UnknownPolicy(s.to_string())),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Requests before the warmup boundary update cache state but are not scored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Warmup {
    #[default]
    None,
    Requests(usize),
    /// Up to the close of HR-Cache's first window.
    FirstWindow { multiplier: f64 },
}

impl Warmup {
    pub fn resolve(&self, trace: &Trace, capacity: u64) -> usize {
        match *self {
            Warmup::None => 0,
            Warmup::Requests(n) => n.min(trace.len()),
            Warmup::FirstWindow { multiplier } => {
                first_window_boundary(&trace.requests, capacity, multiplier).unwrap_or(trace.len())
            }
        }
    }
}

fn six_sig<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x, 6))
}

fn six_sig_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_sig(*v, 6)),
        None => s.serialize_none(),
    }
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - magnitude);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: String,
    pub capacity: u64,
    pub warmup_requests: usize,
    pub measured_requests: usize,
    pub hits: u64,
    #[serde(serialize_with = "six_sig")]
    pub object_hit_ratio: f64,
    #[serde(serialize_with = "six_sig")]
    pub byte_hit_ratio: f64,
    #[serde(serialize_with = "six_sig")]
    pub byte_miss_ratio: f64,
    pub hit_bytes: u64,
    pub miss_bytes: u64,
    pub predictions_made: u64,
    pub prediction_calls: u64,
    pub features_built: u64,
    pub models_trained: u64,
    /// Seconds spent in the replay. Omitted from canonical output because it
    /// is not reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "six_sig_opt")]
    pub wall_time: Option<f64>,
}

impl SimReport {
    pub fn from_outcomes(
        policy: &str,
        capacity: u64,
        trace: &Trace,
        outcomes: &[Outcome],
        warmup: usize,
        counters: PolicyCounters,
    ) -> Self {
        let mut hits = 0u64;
        let mut hit_bytes = 0u64;
        let mut miss_bytes = 0u64;
        for (r, o) in trace.requests[warmup..].iter().zip(&outcomes[warmup..]) {
            if o.is_hit() {
                hits += 1;
                hit_bytes += r.size;
            } else {
                miss_bytes += r.size;
            }
        }
        let measured = trace.len() - warmup;
        let total_bytes = hit_bytes + miss_bytes;
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        SimReport {
            policy: policy.to_string(),
            capacity,
            warmup_requests: warmup,
            measured_requests: measured,
            hits,
            object_hit_ratio: ratio(hits, measured as u64),
            byte_hit_ratio: ratio(hit_bytes, total_bytes),
            byte_miss_ratio: ratio(miss_bytes, total_bytes),
            hit_bytes,
            miss_bytes,
            predictions_made: counters.predictions_made,
            prediction_calls: counters.prediction_calls,
            features_built: counters.features_built,
            models_trained: counters.models_trained,
            wall_time: None,
        }
    }

    pub fn counters(&self) -> PolicyCounters {
        PolicyCounters {
            predictions_made: self.predictions_made,
            prediction_calls: self.prediction_calls,
            features_built: self.features_built,
            models_trained: self.models_trained,
        }
    }
}

/// Per-request work done by the learned components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    pub pred_per_request: f64,
    pub calls_per_request: f64,
    pub features_per_request: f64,
}

pub fn overhead_counters(report: &SimReport) -> Overhead {
    let n = report.measured_requests.max(1) as f64;
    Overhead {
        pred_per_request: report.predictions_made as f64 / n,
        calls_per_request: report.prediction_calls as f64 / n,
        features_per_request: report.features_built as f64 / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    pub warmup: Warmup,
    /// Overrides the seed of an HR-Cache spec.
    pub seed: Option<u64>,
    pub record_wall_time: bool,
}

/// Replays the trace through one policy.
pub fn run_sim(trace: &Trace, spec: &PolicySpec, capacity: u64, options: &SimOptions) -> Result<SimReport> {
    let spec = match (spec, options.seed) {
        (PolicySpec::HrCache(c), Some(seed)) => PolicySpec::hrcache(HrCacheConfig { seed, ..**c }),
        _ => spec.clone(),
    };
    let warmup = options.warmup.resolve(trace, capacity);
    let mut policy = spec.build(capacity, trace)?;
    policy.measure_from(warmup);

    let start = Instant::now();
    let mut outcomes = Vec::with_capacity(trace.len());
    policy.replay(&trace.requests, &mut outcomes);
    let elapsed = start.elapsed().as_secs_f64();

    let mut report = SimReport::from_outcomes(spec.name(), capacity, trace, &outcomes, warmup, policy.counters());
    if options.record_wall_time {
        report.wall_time = Some(elapsed);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficReduction {
    pub policy: String,
    pub capacity: u64,
    /// `(M_LRU - M_P) / M_LRU × 100` over byte misses.
    #[serde(serialize_with = "six_sig")]
    pub percent: f64,
    /// Set when LRU had no byte misses and the reduction is reported as zero.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lru_zero_misses: bool,
}

pub fn traffic_reduction(lru_miss_bytes: u64, policy_miss_bytes: u64) -> (f64, bool) {
    if lru_miss_bytes == 0 {
        return (0.0, true);
    }
    let m = lru_miss_bytes as f64;
    ((m - policy_miss_bytes as f64) / m * 100.0, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub trace: String,
    pub reports: Vec<SimReport>,
    pub traffic_reduction_vs_lru: Vec<TrafficReduction>,
}

impl ComparisonReport {
    pub fn report(&self, policy: &str, capacity: u64) -> Option<&SimReport> {
        self.reports.iter().find(|r| r.policy == policy && r.capacity == capacity)
    }

    pub fn reduction(&self, policy: &str, capacity: u64) -> Option<f64> {
        self.traffic_reduction_vs_lru
            .iter()
            .find(|t| t.policy == policy && t.capacity == capacity)
            .map(|t| t.percent)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_reports_csv(&self.reports, out)
    }

    /// Writes JSON, or CSV when the path ends in `.csv`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        if has_csv_extension(path) {
            self.write_csv(file)
        } else {
            let mut file = file;
            writeln!(file, "{}", self.to_json()?)?;
            Ok(())
        }
    }
}

pub fn has_csv_extension(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write_reports_csv<W: Write>(reports: &[SimReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every policy at every capacity. LRU must be among the policies and
/// all runs at one capacity share the same warmup boundary. Results come back
/// in capacity-major, policy-minor order regardless of scheduling.
pub fn compare(trace: &Trace, specs: &[PolicySpec], capacities: &[u64], options: &SimOptions) -> Result<ComparisonReport> {
    if !specs.iter().any(|s| matches!(s, PolicySpec::Lru)) {
        return Err(Error::InvalidConfig("comparison needs lru as the reference policy".into()));
    }
    if capacities.is_empty() {
        return Err(Error::InvalidConfig("no capacities given".into()));
    }
    let jobs: Vec<(u64, &PolicySpec)> = capacities.iter().flat_map(|&c| specs.iter().map(move |s| (c, s))).collect();
    let reports = jobs
        .par_iter()
        .map(|&(capacity, spec)| {
            let warmup = Warmup::Requests(options.warmup.resolve(trace, capacity));
            run_sim(trace, spec, capacity, &SimOptions { warmup, ..*options })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reductions = Vec::new();
    for &capacity in capacities {
        let lru = reports
            .iter()
            .find(|r| r.policy == "lru" && r.capacity == capacity)
            .expect("lru ran at every capacity");
        for r in reports.iter().filter(|r| r.capacity == capacity) {
            let (percent, lru_zero_misses) = traffic_reduction(lru.miss_bytes, r.miss_bytes);
            reductions.push(TrafficReduction { policy: r.policy.clone(), capacity, percent, lru_zero_misses });
        }
    }
    Ok(ComparisonReport {
        schema_version: REPORT_SCHEMA_VERSION,
        trace: trace.source.clone(),
        reports,
        traffic_reduction_vs_lru: reductions,
    })
}
