//! Hazard-rate estimation for object inter-request times.
//!
//! The non-parametric path groups observed gaps into Nelson-Aalen increments
//! `d_j / n_j` and smooths them with an Epanechnikov kernel:
//!
//! ```text
//! λ(t) = (1/h) Σ_j K((t - t_j) / h) · ΔH(t_j)
//! ```
//!
//! Closed forms (exponential, generalized Pareto) are used for validation
//! against synthetic generators, and a constant-rate estimate backs the
//! Poisson mode.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{time_granularity, Request};

/// One distinct event time of the Nelson-Aalen estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardEvent {
    pub time: f64,
    /// Number of gaps equal to `time`.
    pub events: u64,
    /// Number of gaps `>= time`.
    pub at_risk: u64,
    pub delta_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardIncrements {
    pub events: Vec<HazardEvent>,
}

impl HazardIncrements {
    /// Cumulative hazard `H(t)`, a right-continuous step function.
    pub fn cumulative(&self, t: f64) -> f64 {
        self.events.iter().take_while(|e| e.time <= t).map(|e| e.delta_h).sum()
    }

    pub fn max_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.time)
    }
}

/// Groups the sample by distinct duration and computes `ΔH = d_j / n_j`.
pub fn nelson_aalen(durations: &[f64]) -> Result<HazardIncrements> {
    if durations.is_empty() {
        return Err(Error::InsufficientData("Nelson-Aalen needs at least one duration"));
    }
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut events = Vec::new();
    let mut i = 0;
    while i < n {
        let t = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == t {
            j += 1;
        }
        let d = (j - i) as u64;
        let at_risk = (n - i) as u64;
        events.push(HazardEvent { time: t, events: d, at_risk, delta_h: d as f64 / at_risk as f64 });
        i = j;
    }
    Ok(HazardIncrements { events })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Epanechnikov,
}

impl Kernel {
    pub fn weight(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Kernel-smoothed hazard built from Nelson-Aalen increments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelHazardEstimator {
    pub increments: HazardIncrements,
    pub bandwidth: f64,
    pub kernel: Kernel,
    /// Prefix sums of `ΔH`, `t·ΔH` and `t²·ΔH`, one entry per event plus a
    /// leading zero.
    #[serde(skip)]
    moments: Vec<[f64; 3]>,
}

impl PartialEq for KernelHazardEstimator {
    fn eq(&self, other: &Self) -> bool {
        self.increments == other.increments && self.bandwidth == other.bandwidth && self.kernel == other.kernel
    }
}

/// Windows with more events than this are summed through prefix moments.
const DIRECT_SUM_LIMIT: usize = 32;

impl KernelHazardEstimator {
    pub fn new(increments: HazardIncrements, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let mut moments = Vec::with_capacity(increments.events.len() + 1);
        let mut acc = [0.0; 3];
        moments.push(acc);
        for e in &increments.events {
            acc[0] += e.delta_h;
            acc[1] += e.time * e.delta_h;
            acc[2] += e.time * e.time * e.delta_h;
            moments.push(acc);
        }
        Ok(KernelHazardEstimator { increments, bandwidth, kernel: Kernel::Epanechnikov, moments })
    }

    /// Fits increments and bandwidth from a duration sample.
    pub fn fit(durations: &[f64], rule: BandwidthRule) -> Result<Self> {
        let bandwidth = select_bandwidth(durations, rule)?;
        Self::new(nelson_aalen(durations)?, bandwidth)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let h = self.bandwidth;
        let events = &self.increments.events;
        let start = events.partition_point(|e| e.time < t - h);
        let end = start + events[start..].partition_point(|e| e.time <= t + h);
        if end - start > DIRECT_SUM_LIMIT && self.moments.len() == events.len() + 1 {
            // Σ 0.75·(1 − (t − tⱼ)²/h²)·ΔHⱼ expanded in powers of tⱼ.
            let (a, b) = (self.moments[start], self.moments[end]);
            let (s0, s1, s2) = (b[0] - a[0], b[1] - a[1], b[2] - a[2]);
            let quad = (t * t * s0 - 2.0 * t * s1 + s2) / (h * h);
            return (0.75 * (s0 - quad) / h).max(0.0);
        }
        let acc: f64 = events[start..end].iter().map(|e| self.kernel.weight((t - e.time) / h) * e.delta_h).sum();
        acc / h
    }
}

/// Bandwidth as `max(floor, scale · median(durations))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRule {
    pub scale: f64,
    pub floor: f64,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule { scale: 1.0, floor: 1e-9 }
    }
}

pub fn select_bandwidth(durations: &[f64], rule: BandwidthRule) -> Result<f64> {
    if durations.is_empty() {
        return Err(Error::InsufficientData("bandwidth selection needs at least one duration"));
    }
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    Ok((rule.scale * median).max(rule.floor))
}

/// Maximum-likelihood constant rate of a renewal sample, `count / sum`.
pub fn poisson_rate_estimate(durations: &[f64]) -> Result<f64> {
    if durations.is_empty() {
        return Err(Error::InsufficientData("rate estimate needs at least one duration"));
    }
    Ok(durations.len() as f64 / durations.iter().sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormHazard {
    Exponential { rate: f64 },
    GeneralizedPareto { sigma: f64, xi: f64 },
}

impl ClosedFormHazard {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ClosedFormHazard::Exponential { rate } => rate,
            ClosedFormHazard::GeneralizedPareto { sigma, xi } => 1.0 / (sigma + xi * t),
        }
    }
}

/// Any hazard function the ordering oracle can evaluate at a given age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardCurve {
    Kernel(KernelHazardEstimator),
    Constant { rate: f64 },
    ClosedForm(ClosedFormHazard),
}

impl HazardCurve {
    pub fn eval(&self, age: f64) -> f64 {
        match self {
            HazardCurve::Kernel(k) => k.eval(age),
            HazardCurve::Constant { rate } => *rate,
            HazardCurve::ClosedForm(c) => c.eval(age),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardMode {
    /// Nelson-Aalen increments smoothed by a kernel.
    #[default]
    Kernel,
    /// Constant rate per object (memoryless request process).
    Poisson,
}

impl std::str::FromStr for HazardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(HazardMode::Kernel),
            "poisson" => Ok(HazardMode::Poisson),
            other => Err(Error::InvalidConfig(format!("unknown hazard mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HazardConfig {
    pub mode: HazardMode,
    pub bandwidth: BandwidthRule,
}

impl HazardConfig {
    pub fn fit(&self, durations: &[f64]) -> Result<HazardCurve> {
        Ok(match self.mode {
            HazardMode::Kernel => HazardCurve::Kernel(KernelHazardEstimator::fit(durations, self.bandwidth)?),
            HazardMode::Poisson => HazardCurve::Constant { rate: poisson_rate_estimate(durations)? },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterRequestSample {
    pub key: u64,
    pub durations: Vec<f64>,
}

/// Consecutive gaps between `key`'s requests in the window. Zero gaps are
/// clamped to the window's time granularity.
pub fn collect_durations(window: &[Request], key: u64) -> InterRequestSample {
    let min_gap = time_granularity(window);
    let mut durations = Vec::new();
    let mut last: Option<f64> = None;
    for r in window.iter().filter(|r| r.key == key) {
        if let Some(prev) = last {
            durations.push((r.time - prev).max(min_gap));
        }
        last = Some(r.time);
    }
    InterRequestSample { key, durations }
}

/// Gap samples for every key of the window in one pass. Keys with a single
/// request map to an empty sample.
pub fn collect_all_durations(window: &[Request]) -> HashMap<u64, Vec<f64>> {
    let min_gap = time_granularity(window);
    let mut last: HashMap<u64, f64> = HashMap::new();
    let mut out: HashMap<u64, Vec<f64>> = HashMap::new();
    for r in window {
        let sample = out.entry(r.key).or_default();
        if let Some(prev) = last.insert(r.key, r.time) {
            sample.push((r.time - prev).max(min_gap));
        }
    }
    out
}

/// Per-key hazard functions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HazardTable {
    curves: HashMap<u64, HazardCurve>,
}

impl HazardTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: u64, curve: HazardCurve) {
        self.curves.insert(key, curve);
    }

    pub fn get(&self, key: u64) -> Option<&HazardCurve> {
        self.curves.get(&key)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn from_closed_forms(forms: &HashMap<u64, ClosedFormHazard>) -> Self {
        let curves = forms.iter().map(|(k, f)| (*k, HazardCurve::ClosedForm(*f))).collect();
        HazardTable { curves }
    }

    /// Fits a hazard for each of `keys` from its own gaps in the window. Keys
    /// without gaps share a pooled estimate built from all of `keys`' gaps.
    pub fn estimate(window: &[Request], keys: &[u64], config: &HazardConfig) -> Result<Self> {
        let all = collect_all_durations(window);
        // BTreeMap keeps pooled sample order independent of hash iteration.
        let samples: BTreeMap<u64, &[f64]> =
            keys.iter().map(|k| (*k, all.get(k).map_or(&[][..], Vec::as_slice))).collect();

        let mut table = HazardTable::new();
        let mut pooled = Vec::new();
        let mut missing = Vec::new();
        for (&key, &sample) in &samples {
            pooled.extend_from_slice(sample);
            if sample.is_empty() {
                missing.push(key);
            } else {
                table.insert(key, config.fit(sample)?);
            }
        }
        if !missing.is_empty() {
            if pooled.is_empty() {
                return Err(Error::InsufficientData("no inter-request gaps in the window to pool"));
            }
            let fallback = config.fit(&pooled)?;
            for key in missing {
                table.insert(key, fallback.clone());
            }
        }
        Ok(table)
    }
}
