use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use edgecache::engine::{self, round_sig, PolicySpec, SimOptions, Warmup};
use edgecache::features::{write_training_csv, FeatureVector};
use edgecache::hazard::{collect_durations, BandwidthRule, HazardConfig, HazardCurve, HazardMode, HazardTable};
use edgecache::hrcache::{label_trace, HrCacheConfig};
use edgecache::model::{train, GbdtModel, GbdtParams, TrainingSet};
use edgecache::oracle::{hro_upper_bound, HroMode};
use edgecache::trace::{self, GeneratorConfig, ParseOptions, Trace};
use edgecache::{Error, Result};

#[derive(Parser)]
#[command(name = "edgecache", version, about = "Cache policy simulation with hazard-rate learned eviction")]
struct Cli {
    /// Accept a key whose size changes by keeping its first size.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics of a trace.
    Stats {
        trace: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic trace from a JSON workload config.
    Gen {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Replay a trace through one policy.
    Simulate {
        #[arg(long)]
        policy: String,
        #[arg(long)]
        capacity: u64,
        #[command(flatten)]
        run: RunArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay a trace through several policies and report savings over LRU.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        capacities: Vec<u64>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Hazard-rate-ordered upper bound on hit probability.
    Bound {
        #[arg(long)]
        mode: HroMode,
        #[arg(long)]
        capacity: u64,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        hazard: HazardArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the labels (and optionally features) of every training window.
    LabelDump {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        capacity: u64,
        #[command(flatten)]
        window: WindowArgs,
        /// JSON lines output; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the training set as CSV.
        #[arg(long)]
        features_csv: Option<PathBuf>,
    },
    /// Train a classifier on a feature CSV.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        gbdt: GbdtArgs,
    },
    /// Score the rows of a feature CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit and dump the hazard estimator of one key.
    EstimateHazard {
        #[arg(long)]
        key: u64,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        hazard: HazardArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct HazardArgs {
    #[arg(long, default_value = "kernel")]
    hazard_mode: HazardMode,
    #[arg(long, default_value_t = 1.0)]
    bandwidth_scale: f64,
}

impl HazardArgs {
    fn config(&self) -> HazardConfig {
        HazardConfig {
            mode: self.hazard_mode,
            bandwidth: BandwidthRule { scale: self.bandwidth_scale, ..Default::default() },
        }
    }
}

#[derive(Args)]
struct WindowArgs {
    /// JSON file with HR-Cache settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    window_multiplier: Option<f64>,
    #[arg(long)]
    op_budget: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    no_look_back: bool,
    #[arg(long)]
    hazard_mode: Option<HazardMode>,
    #[arg(long)]
    bandwidth_scale: Option<f64>,
    #[arg(long)]
    min_labels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl WindowArgs {
    fn hrcache_config(&self) -> Result<HrCacheConfig> {
        let mut c = match &self.config {
            Some(path) => serde_json::from_reader(BufReader::new(File::open(path)?))?,
            None => HrCacheConfig::default(),
        };
        let w = &mut c.window;
        w.multiplier = self.window_multiplier.unwrap_or(w.multiplier);
        w.op_budget = self.op_budget.unwrap_or(w.op_budget);
        w.batch_size = self.batch_size.unwrap_or(w.batch_size);
        w.decay = self.decay.unwrap_or(w.decay);
        w.hazard_mode = self.hazard_mode.unwrap_or(w.hazard_mode);
        if self.no_look_back {
            w.look_back = false;
        }
        c.bandwidth.scale = self.bandwidth_scale.unwrap_or(c.bandwidth.scale);
        c.min_labels = self.min_labels.unwrap_or(c.min_labels);
        c.seed = self.seed.unwrap_or(c.seed);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Unscored leading requests; defaults to HR-Cache's first window.
    #[arg(long, conflicts_with = "no_warmup")]
    warmup: Option<usize>,
    #[arg(long)]
    no_warmup: bool,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    window: WindowArgs,
}

impl RunArgs {
    fn options(&self, config: &HrCacheConfig) -> SimOptions {
        let warmup = match (self.warmup, self.no_warmup) {
            (Some(n), _) => Warmup::Requests(n),
            (None, true) => Warmup::None,
            (None, false) => Warmup::FirstWindow { multiplier: config.window.multiplier },
        };
        SimOptions { warmup, seed: Some(config.seed), record_wall_time: self.timing }
    }
}

#[derive(Args)]
struct GbdtArgs {
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    max_bins: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    #[arg(long)]
    l2_leaf_reg: Option<f64>,
}

impl GbdtArgs {
    fn params(&self) -> GbdtParams {
        let d = GbdtParams::default();
        GbdtParams {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            n_trees: self.n_trees.unwrap_or(d.n_trees),
            max_bins: self.max_bins.unwrap_or(d.max_bins),
            min_samples_leaf: self.min_samples_leaf.unwrap_or(d.min_samples_leaf),
            l2_leaf_reg: self.l2_leaf_reg.unwrap_or(d.l2_leaf_reg),
            ..d
        }
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn load_trace(path: &Path, lenient: bool) -> Result<Trace> {
    trace::read_trace_file(path, ParseOptions { strict_sizes: !lenient, ..Default::default() })
}

#[derive(Serialize)]
struct BoundReport {
    mode: &'static str,
    capacity: u64,
    hit_probability: f64,
    byte_hit_probability: f64,
}

#[derive(Serialize)]
struct HazardDump {
    key: u64,
    samples: usize,
    estimator: HazardCurve,
}

fn run(cli: Cli) -> Result<()> {
    let lenient = cli.lenient;
    match cli.command {
        Command::Stats { trace, output } => {
            let t = load_trace(&trace, lenient)?;
            write_json(&trace::trace_stats(&t)?, output.as_deref())
        }
        Command::Gen { config, output } => {
            let cfg: GeneratorConfig = serde_json::from_reader(BufReader::new(File::open(config)?))?;
            let t = trace::generate_workload(&cfg.to_workload())?;
            let mut out = BufWriter::new(File::create(output)?);
            trace::write_trace(&t, &mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Simulate { policy, capacity, run, output } => {
            let config = run.window.hrcache_config()?;
            let spec = policy.parse::<PolicySpec>()?.with_hrcache_config(config);
            let t = load_trace(&run.trace, lenient)?;
            let report = engine::run_sim(&t, &spec, capacity, &run.options(&config))?;
            match output.as_deref() {
                Some(p) if engine::has_csv_extension(p) => engine::write_reports_csv(&[report], File::create(p)?),
                p => write_json(&report, p),
            }
        }
        Command::Compare { policies, capacities, run, output } => {
            let config = run.window.hrcache_config()?;
            let specs = policies
                .iter()
                .map(|p| Ok(p.parse::<PolicySpec>()?.with_hrcache_config(config)))
                .collect::<Result<Vec<_>>>()?;
            let t = load_trace(&run.trace, lenient)?;
            let report = engine::compare(&t, &specs, &capacities, &run.options(&config))?;
            match output.as_deref() {
                Some(p) => report.save(p),
                None => write_json(&report, None),
            }
        }
        Command::Bound { mode, capacity, trace, hazard, output } => {
            let t = load_trace(&trace, lenient)?;
            let mut keys: Vec<u64> = t.iter().map(|r| r.key).collect();
            keys.sort_unstable();
            keys.dedup();
            let table = HazardTable::estimate(&t.requests, &keys, &hazard.config())?;
            let b = hro_upper_bound(&t.requests, capacity, &table, mode)?;
            let report = BoundReport {
                mode: match mode {
                    HroMode::HrE => "hre",
                    HroMode::HrFc => "hrfc",
                },
                capacity,
                hit_probability: round_sig(b.hit_probability, 6),
                byte_hit_probability: round_sig(b.byte_hit_probability, 6),
            };
            write_json(&report, output.as_deref())
        }
        Command::LabelDump { trace, capacity, window, output, features_csv } => {
            let config = window.hrcache_config()?;
            let t = load_trace(&trace, lenient)?;
            let dumped = label_trace(&t.requests, capacity, &config)?;
            let mut out = sink(output.as_deref())?;
            for d in &dumped {
                let line = serde_json::json!({
                    "index": d.index,
                    "key": d.label.key,
                    "hro_hit": d.label.hro_hit,
                    "hit_fraction": d.label.hit_fraction,
                    "cache_friendly": d.label.cache_friendly,
                });
                writeln!(out, "{line}")?;
            }
            out.flush()?;
            if let Some(path) = features_csv {
                let rows: Vec<(FeatureVector, bool)> = dumped.iter().map(|d| (d.features, d.label.cache_friendly)).collect();
                write_training_csv(&rows, BufWriter::new(File::create(path)?))?;
            }
            Ok(())
        }
        Command::Train { data, output, gbdt } => {
            let set = TrainingSet::from_csv(BufReader::new(File::open(data)?))?;
            let model = train(&set, &gbdt.params())?;
            model.save(BufWriter::new(File::create(output)?))
        }
        Command::Predict { model, data, output } => {
            let model = GbdtModel::load(BufReader::new(File::open(model)?))?;
            let n = model.bin_map.thresholds.len();
            let mut reader = csv::Reader::from_reader(BufReader::new(File::open(data)?));
            let mut rows = Vec::new();
            for (i, rec) in reader.records().enumerate() {
                let rec = rec?;
                if rec.len() != n && rec.len() != n + 1 {
                    return Err(Error::Parse { line: i + 2, message: format!("expected {n} features, found {}", rec.len()) });
                }
                let row = rec
                    .iter()
                    .take(n)
                    .map(|f| f.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse { line: i + 2, message: e.to_string() })?;
                rows.push(row);
            }
            let mut out = sink(output.as_deref())?;
            writeln!(out, "probability")?;
            for p in model.predict_batch(&rows) {
                writeln!(out, "{p}")?;
            }
            out.flush()?;
            Ok(())
        }
        Command::EstimateHazard { key, trace, hazard, output } => {
            let t = load_trace(&trace, lenient)?;
            let sample = collect_durations(&t.requests, key);
            let estimator = hazard.config().fit(&sample.durations)?;
            write_json(&HazardDump { key, samples: sample.durations.len(), estimator }, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::UnknownPolicy(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
