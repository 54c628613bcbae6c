//! Request traces: parsing, serialization, synthetic workloads and summary
//! statistics.
//!
//! The on-disk format is one request per line, `time key size`, separated by
//! whitespace. Files may be gzip-compressed; compression is detected from the
//! magic bytes, not the file name.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hazard::ClosedFormHazard;

/// One trace record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    /// Time since trace start, in the trace's own (opaque) unit.
    pub time: f64,
    pub key: u64,
    /// Object size in bytes, always at least 1.
    pub size: u64,
}

impl Request {
    pub fn new(time: f64, key: u64, size: u64) -> Self {
        Request { time, key, size }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub requests: Vec<Request>,
    pub source: String,
}

impl Trace {
    /// Builds a trace, checking the size and time-ordering invariants.
    pub fn new(requests: Vec<Request>, source: impl Into<String>) -> Result<Self> {
        let mut prev = 0.0_f64;
        for (i, r) in requests.iter().enumerate() {
            if r.size == 0 {
                return Err(Error::Parse { line: i + 1, message: "size must be positive".into() });
            }
            if !(r.time.is_finite() && r.time >= 0.0) {
                return Err(Error::Parse { line: i + 1, message: "time must be a non-negative number".into() });
            }
            if i > 0 && r.time < prev {
                return Err(Error::Parse { line: i + 1, message: "timestamps must be non-decreasing".into() });
            }
            prev = r.time;
        }
        Ok(Trace { requests, source: source.into() })
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Request> {
        self.requests.iter()
    }

    /// Smallest positive duration the trace can express: 1 for integral
    /// timestamps, otherwise the smallest positive gap between consecutive
    /// requests.
    pub fn time_granularity(&self) -> f64 {
        time_granularity(&self.requests)
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a Request;
    type IntoIter = std::slice::Iter<'a, Request>;

    fn into_iter(self) -> Self::IntoIter {
        self.requests.iter()
    }
}

pub(crate) fn time_granularity(requests: &[Request]) -> f64 {
    if requests.iter().all(|r| r.time.fract() == 0.0) {
        return 1.0;
    }
    requests
        .windows(2)
        .map(|w| w[1].time - w[0].time)
        .filter(|gap| *gap > 0.0)
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    /// Whitespace-separated `time key size` lines.
    #[default]
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub format: TraceFormat,
    /// Reject a key whose size changes within the trace. When false the
    /// first-seen size wins.
    pub strict_sizes: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { format: TraceFormat::Plain, strict_sizes: true }
    }
}

/// Parses a trace from a byte stream, transparently gunzipping it when the
/// stream starts with the gzip magic bytes.
pub fn parse_trace<R: Read>(input: R, options: ParseOptions) -> Result<Trace> {
    let mut reader = BufReader::new(input);
    let is_gzip = reader.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        parse_lines(BufReader::new(MultiGzDecoder::new(reader)), options)
    } else {
        parse_lines(reader, options)
    }
}

pub fn read_trace_file(path: impl AsRef<Path>, options: ParseOptions) -> Result<Trace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut trace = parse_trace(file, options)?;
    trace.source = path.display().to_string();
    Ok(trace)
}

fn parse_lines<R: BufRead>(reader: R, options: ParseOptions) -> Result<Trace> {
    let TraceFormat::Plain = options.format;
    let mut requests = Vec::new();
    let mut sizes: HashMap<u64, u64> = HashMap::new();
    let mut prev_time = 0.0_f64;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields `time key size`, found {}", fields.len())));
        }
        let time: f64 = fields[0].parse().map_err(|_| err(format!("invalid time `{}`", fields[0])))?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(err(format!("time must be a non-negative number, got `{}`", fields[0])));
        }
        let key: u64 = fields[1].parse().map_err(|_| err(format!("invalid key `{}`", fields[1])))?;
        let size: i128 = fields[2].parse().map_err(|_| err(format!("invalid size `{}`", fields[2])))?;
        if size <= 0 {
            return Err(err("size must be positive".into()));
        }
        let mut size = u64::try_from(size).map_err(|_| err("size out of range".into()))?;
        if time < prev_time {
            return Err(err(format!("timestamp {time} precedes previous timestamp {prev_time}")));
        }
        prev_time = time;

        match sizes.entry(key) {
            Entry::Vacant(v) => {
                v.insert(size);
            }
            Entry::Occupied(o) => {
                if *o.get() != size {
                    if options.strict_sizes {
                        return Err(err(format!("key {key} changed size from {} to {size}", o.get())));
                    }
                    size = *o.get();
                }
            }
        }
        requests.push(Request { time, key, size });
    }

    Ok(Trace { requests, source: String::from("<stream>") })
}

/// Writes the plain text form. `parse_trace` reads it back exactly.
pub fn write_trace<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    for r in &trace.requests {
        writeln!(out, "{} {} {}", r.time, r.key, r.size)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub total_requests: u64,
    pub unique_objects: u64,
    pub total_bytes: u64,
    pub unique_bytes: u64,
    pub mean_size: f64,
    pub max_size: u64,
}

pub fn trace_stats(trace: &Trace) -> Result<TraceStats> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut seen: HashMap<u64, u64> = HashMap::new();
    let mut total_bytes = 0u64;
    let mut max_size = 0u64;
    for r in trace {
        total_bytes += r.size;
        max_size = max_size.max(r.size);
        seen.entry(r.key).or_insert(r.size);
    }
    let total_requests = trace.len() as u64;
    Ok(TraceStats {
        total_requests,
        unique_objects: seen.len() as u64,
        total_bytes,
        unique_bytes: seen.values().sum(),
        mean_size: total_bytes as f64 / total_requests as f64,
        max_size,
    })
}

/// Inter-request time model for every object of a traffic class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interarrival {
    /// Exponential gaps. `rate` is the class-wide request rate, split across
    /// objects in proportion to their popularity.
    Poisson { rate: f64 },
    /// Generalized Pareto gaps. An object with popularity share `p` uses
    /// scale `sigma / p`, so `xi = 0` matches `Poisson { rate: 1 / sigma }`.
    GeneralizedPareto { sigma: f64, xi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeModel {
    Constant { bytes: u64 },
    /// Sizes are `round(exp(N(mu, sigma_ln)))`, at least 1 byte.
    Lognormal { mu: f64, sigma_ln: f64 },
}

/// A single-class synthetic workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_objects: u64,
    pub n_requests: u64,
    pub popularity_alpha: f64,
    pub interarrival: Interarrival,
    pub size_model: SizeModel,
    pub seed: u64,
}

/// One traffic class inside a mixed workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficClass {
    pub n_objects: u64,
    pub popularity_alpha: f64,
    pub interarrival: Interarrival,
    pub size_model: SizeModel,
}

/// A workload made of one or more traffic classes sharing a timeline. Keys of
/// class `c` occupy a contiguous range starting after the keys of classes
/// `0..c`; within a class, key order is popularity rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub n_requests: u64,
    pub seed: u64,
    pub classes: Vec<TrafficClass>,
}

/// Anything `gen` accepts: a single-class config or a mixed workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorConfig {
    Single(SyntheticConfig),
    Mixed(WorkloadConfig),
}

impl GeneratorConfig {
    pub fn to_workload(&self) -> WorkloadConfig {
        match self {
            GeneratorConfig::Single(c) => c.into(),
            GeneratorConfig::Mixed(w) => w.clone(),
        }
    }
}

impl From<&SyntheticConfig> for WorkloadConfig {
    fn from(c: &SyntheticConfig) -> Self {
        WorkloadConfig {
            n_requests: c.n_requests,
            seed: c.seed,
            classes: vec![TrafficClass {
                n_objects: c.n_objects,
                popularity_alpha: c.popularity_alpha,
                interarrival: c.interarrival,
                size_model: c.size_model,
            }],
        }
    }
}

impl TrafficClass {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_objects == 0 {
            return bad("n_objects must be at least 1");
        }
        if !(self.popularity_alpha >= 0.0 && self.popularity_alpha.is_finite()) {
            return bad("popularity_alpha must be a non-negative number");
        }
        match self.interarrival {
            Interarrival::Poisson { rate } if !(rate > 0.0 && rate.is_finite()) => return bad("rate must be positive"),
            Interarrival::GeneralizedPareto { sigma, xi } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return bad("sigma must be positive");
                }
                if !(xi >= 0.0 && xi.is_finite()) {
                    return bad("xi must be non-negative");
                }
            }
            _ => {}
        }
        match self.size_model {
            SizeModel::Constant { bytes: 0 } => return bad("constant size must be at least 1 byte"),
            SizeModel::Lognormal { mu, sigma_ln } if !(mu.is_finite() && sigma_ln >= 0.0 && sigma_ln.is_finite()) => {
                return bad("lognormal parameters must be finite with sigma_ln >= 0")
            }
            _ => {}
        }
        Ok(())
    }

    /// Normalized Zipf popularity shares, rank 1 first.
    pub fn popularity(&self) -> Vec<f64> {
        let weights: Vec<f64> = (1..=self.n_objects).map(|r| (r as f64).powf(-self.popularity_alpha)).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    fn gap_hazard(&self, share: f64) -> ClosedFormHazard {
        match self.interarrival {
            Interarrival::Poisson { rate } => ClosedFormHazard::Exponential { rate: rate * share },
            Interarrival::GeneralizedPareto { sigma, xi } => ClosedFormHazard::GeneralizedPareto { sigma: sigma / share, xi },
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_requests == 0 {
            return Err(Error::InvalidConfig("n_requests must be at least 1".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidConfig("at least one traffic class is required".into()));
        }
        self.classes.iter().try_for_each(TrafficClass::validate)
    }

    /// The exact hazard function of every key's inter-request process.
    pub fn true_hazards(&self) -> HashMap<u64, ClosedFormHazard> {
        let mut out = HashMap::new();
        let mut offset = 0u64;
        for class in &self.classes {
            for (i, share) in class.popularity().into_iter().enumerate() {
                out.insert(offset + i as u64, class.gap_hazard(share));
            }
            offset += class.n_objects;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Arrival {
    time: f64,
    key: u64,
}

impl Eq for Arrival {}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Arrival {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time.total_cmp(&other.time).then(self.key.cmp(&other.key))
    }
}

fn sample_gap(hazard: &ClosedFormHazard, rng: &mut impl Rng) -> f64 {
    // Inverse-CDF sampling; u is in [0, 1).
    let u: f64 = rng.random();
    match *hazard {
        ClosedFormHazard::Exponential { rate } => -(1.0 - u).ln() / rate,
        ClosedFormHazard::GeneralizedPareto { sigma, xi } => {
            if xi == 0.0 {
                -sigma * (1.0 - u).ln()
            } else {
                sigma / xi * ((1.0 - u).powf(-xi) - 1.0)
            }
        }
    }
}

fn sample_sizes(model: SizeModel, n: u64, rng: &mut impl Rng) -> Result<Vec<u64>> {
    match model {
        SizeModel::Constant { bytes } => Ok(vec![bytes; n as usize]),
        SizeModel::Lognormal { mu, sigma_ln } => {
            let dist = LogNormal::new(mu, sigma_ln).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok((0..n).map(|_| (dist.sample(rng).round() as u64).max(1)).collect())
        }
    }
}

/// Generates a single-class synthetic trace.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Trace> {
    generate_workload(&config.into())
}

/// Generates a (possibly mixed) workload. Every object runs an independent
/// renewal process; the merged stream is cut after `n_requests` arrivals.
/// Equal timestamps are ordered by key.
pub fn generate_workload(config: &WorkloadConfig) -> Result<Trace> {
    config.validate()?;
    let mut arrival_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut size_rng = ChaCha8Rng::seed_from_u64(config.seed);
    size_rng.set_stream(1);

    let mut hazards = Vec::new();
    let mut sizes = Vec::new();
    for class in &config.classes {
        for share in class.popularity() {
            hazards.push(class.gap_hazard(share));
        }
        sizes.extend(sample_sizes(class.size_model, class.n_objects, &mut size_rng)?);
    }

    let mut heap = BinaryHeap::with_capacity(hazards.len());
    for (key, h) in hazards.iter().enumerate() {
        heap.push(Reverse(Arrival { time: sample_gap(h, &mut arrival_rng), key: key as u64 }));
    }

    let mut requests = Vec::with_capacity(config.n_requests as usize);
    while (requests.len() as u64) < config.n_requests {
        let Some(Reverse(next)) = heap.pop() else { break };
        let idx = next.key as usize;
        requests.push(Request { time: next.time, key: next.key, size: sizes[idx] });
        let gap = sample_gap(&hazards[idx], &mut arrival_rng);
        heap.push(Reverse(Arrival { time: next.time + gap, key: next.key }));
    }

    let source = format!("synthetic(seed={}, classes={})", config.seed, config.classes.len());
    Ok(Trace { requests, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<Trace> {
        parse_trace(s.as_bytes(), ParseOptions::default())
    }

    #[test]
    fn parses_plain_lines() {
        let t = parse_str("0 1 100\n2 2 50\n3 1 100\n").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.requests.iter().map(|r| r.key).collect::<Vec<_>>(), vec![1, 2, 1]);
        assert_eq!(t.requests[1], Request::new(2.0, 2, 50));
    }

    #[test]
    fn skips_blank_lines_and_accepts_decimals() {
        let t = parse_str("\n0.5 1 10\n\n  \n1.25\t2  7\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.requests[1].time, 1.25);
    }

    #[test]
    fn strict_mode_rejects_size_change() {
        let err = parse_str("0 1 100\n1 1 200\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn lenient_mode_keeps_first_size() {
        let opts = ParseOptions { strict_sizes: false, ..Default::default() };
        let t = parse_trace("0 1 100\n1 1 200\n".as_bytes(), opts).unwrap();
        assert_eq!(t.requests[1].size, 100);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse_str("5 7 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_str("5 7 -3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_str("0 1 1\n1 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_str("0 x 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_str("0 1 1\n1 1 1 9\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_str("3 1 1\n2 2 1\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn reads_gzip_by_magic_bytes() {
        use flate2::write::GzEncoder;
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"0 1 100\n2 2 50\n").unwrap();
        let bytes = enc.finish().unwrap();
        let t = parse_trace(bytes.as_slice(), ParseOptions::default()).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn stats_hand_example() {
        let t = Trace::new(
            vec![Request::new(0.0, 1, 100), Request::new(1.0, 2, 50), Request::new(2.0, 1, 100)],
            "t",
        )
        .unwrap();
        let s = trace_stats(&t).unwrap();
        assert_eq!((s.total_requests, s.unique_objects, s.total_bytes, s.unique_bytes, s.max_size), (3, 2, 250, 150, 100));
        assert!((s.mean_size - 250.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn stats_singleton_and_empty() {
        let t = Trace::new(vec![Request::new(0.0, 1, 7)], "t").unwrap();
        let s = trace_stats(&t).unwrap();
        assert_eq!((s.total_requests, s.unique_objects, s.total_bytes, s.unique_bytes, s.max_size), (1, 1, 7, 7, 7));
        assert_eq!(s.mean_size, 7.0);
        assert!(matches!(trace_stats(&Trace::new(vec![], "e").unwrap()), Err(Error::EmptyTrace)));
    }

    #[test]
    fn stats_json_field_names() {
        let t = Trace::new(vec![Request::new(0.0, 1, 7)], "t").unwrap();
        let v: serde_json::Value = serde_json::to_value(trace_stats(&t).unwrap()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["max_size", "mean_size", "total_bytes", "total_requests", "unique_bytes", "unique_objects"]);
    }

    fn single(n_objects: u64, n_requests: u64, alpha: f64, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n_objects,
            n_requests,
            popularity_alpha: alpha,
            interarrival: Interarrival::Poisson { rate: 1.0 },
            size_model: SizeModel::Constant { bytes: 1 },
            seed,
        }
    }

    #[test]
    fn single_object_degenerate() {
        let t = generate_synthetic(&single(1, 5, 1.0, 42)).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.iter().all(|r| r.key == 0 && r.size == 1));
        assert!(t.requests.windows(2).all(|w| w[1].time >= w[0].time));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = single(100, 2000, 0.8, 9);
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        let (mut wa, mut wb) = (Vec::new(), Vec::new());
        write_trace(&a, &mut wa).unwrap();
        write_trace(&b, &mut wb).unwrap();
        assert_eq!(wa, wb);
        let c = generate_synthetic(&single(100, 2000, 0.8, 10)).unwrap();
        assert_ne!(a.requests, c.requests);
    }

    #[test]
    fn rank_one_is_most_popular() {
        let t = generate_synthetic(&single(100, 10_000, 0.8, 3)).unwrap();
        let mut counts = vec![0u32; 100];
        for r in &t {
            counts[r.key as usize] += 1;
        }
        let max = *counts.iter().max().unwrap();
        assert_eq!(counts[0], max);
    }

    #[test]
    fn mixed_classes_use_disjoint_keys() {
        let cfg = WorkloadConfig {
            n_requests: 5000,
            seed: 1,
            classes: vec![
                TrafficClass {
                    n_objects: 10,
                    popularity_alpha: 1.0,
                    interarrival: Interarrival::Poisson { rate: 1.0 },
                    size_model: SizeModel::Constant { bytes: 5 },
                },
                TrafficClass {
                    n_objects: 50,
                    popularity_alpha: 0.2,
                    interarrival: Interarrival::GeneralizedPareto { sigma: 1.0, xi: 0.3 },
                    size_model: SizeModel::Lognormal { mu: 3.0, sigma_ln: 1.0 },
                },
            ],
        };
        let t = generate_workload(&cfg).unwrap();
        assert_eq!(t.len(), 5000);
        assert!(t.iter().all(|r| r.key < 60));
        assert!(t.iter().filter(|r| r.key < 10).all(|r| r.size == 5));
        assert!(t.iter().any(|r| r.key >= 10));
        assert_eq!(cfg.true_hazards().len(), 60);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = single(0, 10, 1.0, 1);
        assert!(generate_synthetic(&c).is_err());
        c.n_objects = 1;
        c.interarrival = Interarrival::Poisson { rate: 0.0 };
        assert!(generate_synthetic(&c).is_err());
        c.interarrival = Interarrival::GeneralizedPareto { sigma: 1.0, xi: -0.1 };
        assert!(generate_synthetic(&c).is_err());
    }

    #[test]
    fn generator_config_accepts_both_shapes() {
        let single: GeneratorConfig = serde_json::from_str(
            r#"{"n_objects":3,"n_requests":4,"popularity_alpha":1.0,
                "interarrival":{"poisson":{"rate":2.0}},"size_model":{"constant":{"bytes":8}},"seed":5}"#,
        )
        .unwrap();
        assert!(matches!(single, GeneratorConfig::Single(_)));
        let mixed: GeneratorConfig = serde_json::from_str(
            r#"{"n_requests":4,"seed":5,"classes":[{"n_objects":3,"popularity_alpha":1.0,
                "interarrival":{"generalized_pareto":{"sigma":1.0,"xi":0.5}},
                "size_model":{"lognormal":{"mu":1.0,"sigma_ln":0.5}}}]}"#,
        )
        .unwrap();
        assert!(matches!(mixed, GeneratorConfig::Mixed(_)));
    }

    #[test]
    fn granularity() {
        let ints = Trace::new(vec![Request::new(0.0, 1, 1), Request::new(4.0, 1, 1)], "t").unwrap();
        assert_eq!(ints.time_granularity(), 1.0);
        let dec = Trace::new(vec![Request::new(0.0, 1, 1), Request::new(0.25, 1, 1), Request::new(1.0, 1, 1)], "t").unwrap();
        assert_eq!(dec.time_granularity(), 0.25);
    }
}
