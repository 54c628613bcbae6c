//! Histogram-based gradient-boosted decision trees for binary classification.
//!
//! Features are quantized into at most `max_bins` bins per column using
//! training-set quantiles. Trees are grown depth-wise on second-order
//! (gradient/hessian) histogram statistics of the logistic loss.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Scores are clamped so that probabilities stay strictly inside (0, 1).
const MAX_RAW_SCORE: f64 = 30.0;
const MIN_SPLIT_GAIN: f64 = 1e-10;
const PREVALENCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_trees: usize,
    pub max_bins: usize,
    pub objective: Objective,
    pub min_samples_leaf: usize,
    pub l2_leaf_reg: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            learning_rate: 0.1,
            max_depth: 50,
            n_trees: 100,
            max_bins: 255,
            objective: Objective::Logistic,
            min_samples_leaf: 20,
            l2_leaf_reg: 1.0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1");
        }
        if !(2..=255).contains(&self.max_bins) {
            return bad("max_bins must be in [2, 255]");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if !(self.l2_leaf_reg >= 0.0) {
            return bad("l2_leaf_reg must be non-negative");
        }
        Ok(())
    }
}

/// Row-major feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    n_features: usize,
    values: Vec<f64>,
    labels: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(n_features: usize) -> Self {
        TrainingSet { n_features, ..Default::default() }
    }

    pub fn push(&mut self, row: &[f64], label: bool) {
        assert_eq!(row.len(), self.n_features, "row width mismatch");
        self.values.extend_from_slice(row);
        self.labels.push(if label { 1.0 } else { 0.0 });
        if let Some(w) = &mut self.weights {
            w.push(1.0);
        }
    }

    pub fn push_weighted(&mut self, row: &[f64], label: bool, weight: f64) {
        let n = self.labels.len();
        self.weights.get_or_insert_with(|| vec![1.0; n]);
        self.push(row, label);
        if let Some(w) = &mut self.weights {
            *w.last_mut().unwrap() = weight;
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> bool {
        self.labels[i] > 0.5
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    fn column(&self, f: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(f).step_by(self.n_features).copied()
    }

    /// Reads a CSV whose last column is the 0/1 label and whose other columns
    /// are features. The first row is a header.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let width = reader.headers()?.len();
        if width < 2 {
            return Err(Error::InvalidConfig("training CSV needs at least one feature and a label".into()));
        }
        let mut set = TrainingSet::new(width - 1);
        let mut row = vec![0.0; width - 1];
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse().map_err(|_| Error::Parse { line: i + 2, message: format!("not a number: `{s}`") })
            };
            for (slot, field) in row.iter_mut().zip(rec.iter()) {
                *slot = parse(field)?;
            }
            let label = parse(&rec[width - 1])?;
            set.push(&row, label > 0.5);
        }
        Ok(set)
    }
}

/// Per-feature ascending thresholds; value `x` falls in bin
/// `#{thresholds < x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMap {
    pub thresholds: Vec<Vec<f64>>,
}

impl BinMap {
    pub fn n_bins(&self, feature: usize) -> usize {
        self.thresholds[feature].len() + 1
    }

    pub fn bin(&self, feature: usize, x: f64) -> u8 {
        self.thresholds[feature].partition_point(|t| *t < x) as u8
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // Guard against rounding up to `b` for adjacent floats.
    if m >= b {
        a
    } else {
        m
    }
}

fn feature_thresholds(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in values.iter().copied() {
        match distinct.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let m = distinct.len();
    if m <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0].0, w[1].0)).collect();
    }

    let mut thresholds = Vec::with_capacity(max_bins - 1);
    let mut remaining = values.len() as f64;
    let mut current = 0usize;
    for i in 0..m - 1 {
        current += distinct[i].1;
        let bins_left = max_bins - thresholds.len();
        let target = remaining / bins_left as f64;
        let values_after = m - 1 - i;
        if current as f64 >= target || values_after < bins_left {
            thresholds.push(midpoint(distinct[i].0, distinct[i + 1].0));
            remaining -= current as f64;
            current = 0;
            if thresholds.len() == max_bins - 1 {
                break;
            }
        }
    }
    thresholds
}

/// Quantile bin boundaries over each feature's distinct training values.
pub fn fit_bins(data: &TrainingSet, max_bins: usize) -> BinMap {
    let thresholds = (0..data.n_features())
        .into_par_iter()
        .map(|f| feature_thresholds(data.column(f).collect(), max_bins))
        .collect();
    BinMap { thresholds }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` (equivalently bin `<= bin`) go left.
    Split { feature: usize, bin: u8, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub version: u32,
    pub params: GbdtParams,
    pub bin_map: BinMap,
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

fn sigmoid(raw: f64) -> f64 {
    1.0 / (1.0 + (-raw.clamp(-MAX_RAW_SCORE, MAX_RAW_SCORE)).exp())
}

fn logistic_loss(p: f64, y: f64) -> f64 {
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

impl GbdtModel {
    /// A model with no trees.
    pub fn constant(base_score: f64, params: GbdtParams, n_features: usize) -> Self {
        GbdtModel {
            version: MODEL_FORMAT_VERSION,
            params,
            bin_map: BinMap { thresholds: vec![Vec::new(); n_features] },
            base_score,
            trees: Vec::new(),
        }
    }

    pub fn raw_score(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        self.base_score + self.params.learning_rate * sum
    }

    /// Probability of the positive class, strictly inside (0, 1).
    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }

    /// Same values as mapping [`predict`](Self::predict), order preserved.
    pub fn predict_batch<R: AsRef<[f64]> + Sync>(&self, rows: &[R]) -> Vec<f64> {
        if rows.len() < 64 {
            rows.iter().map(|r| self.predict(r.as_ref())).collect()
        } else {
            rows.par_iter().map(|r| self.predict(r.as_ref())).collect()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: GbdtModel = serde_json::from_str(s)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion(model.version));
        }
        Ok(model)
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut s = String::new();
        input.read_to_string(&mut s)?;
        Self::from_json(&s)
    }
}

/// Trains a model; see [`train_with_loss`] for the per-round loss curve.
pub fn train(data: &TrainingSet, params: &GbdtParams) -> Result<GbdtModel> {
    Ok(train_with_loss(data, params)?.0)
}

/// Trains a model and returns the mean training log-loss after each round
/// (entry 0 is the loss of the base score alone).
pub fn train_with_loss(data: &TrainingSet, params: &GbdtParams) -> Result<(GbdtModel, Vec<f64>)> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("training set is empty"));
    }
    let n = data.len();
    let total_w: f64 = (0..n).map(|i| data.weight(i)).sum();
    let positive_w: f64 = (0..n).map(|i| data.weight(i) * data.labels[i]).sum();
    let prevalence = (positive_w / total_w).clamp(PREVALENCE_EPS, 1.0 - PREVALENCE_EPS);
    let base_score = (prevalence / (1.0 - prevalence)).ln();

    let mut raw = vec![base_score; n];
    let loss = |raw: &[f64]| -> f64 {
        (0..n).map(|i| data.weight(i) * logistic_loss(sigmoid(raw[i]), data.labels[i])).sum::<f64>() / total_w
    };
    let mut losses = vec![loss(&raw)];

    if positive_w == 0.0 || positive_w == total_w {
        return Ok((GbdtModel::constant(base_score, *params, data.n_features()), losses));
    }

    let bin_map = fit_bins(data, params.max_bins);
    let binned: Vec<Vec<u8>> = (0..data.n_features())
        .into_par_iter()
        .map(|f| data.column(f).map(|x| bin_map.bin(f, x)).collect())
        .collect();

    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            let w = data.weight(i);
            grad[i] = w * (p - data.labels[i]);
            hess[i] = w * p * (1.0 - p);
        }
        let tree = TreeGrower { binned: &binned, bin_map: &bin_map, grad: &grad, hess: &hess, params }.grow();
        for (i, r) in raw.iter_mut().enumerate() {
            *r += params.learning_rate * tree.predict(data.row(i));
        }
        trees.push(tree);
        losses.push(loss(&raw));
    }

    let model = GbdtModel { version: MODEL_FORMAT_VERSION, params: *params, bin_map, base_score, trees };
    Ok((model, losses))
}

struct SplitCandidate {
    gain: f64,
    feature: usize,
    bin: u8,
}

struct TreeGrower<'a> {
    binned: &'a [Vec<u8>],
    bin_map: &'a BinMap,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbdtParams,
}

impl TreeGrower<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.l2_leaf_reg)
    }

    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.l2_leaf_reg)
    }

    fn best_split_for_feature(&self, f: usize, rows: &[u32], g_total: f64, h_total: f64) -> Option<SplitCandidate> {
        let n_bins = self.bin_map.n_bins(f);
        if n_bins < 2 {
            return None;
        }
        let col = &self.binned[f];
        let mut hg = vec![0.0; n_bins];
        let mut hh = vec![0.0; n_bins];
        let mut hc = vec![0usize; n_bins];
        for &r in rows {
            let b = col[r as usize] as usize;
            hg[b] += self.grad[r as usize];
            hh[b] += self.hess[r as usize];
            hc[b] += 1;
        }
        let msl = self.params.min_samples_leaf;
        let parent = self.score(g_total, h_total);
        let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
        let mut best: Option<SplitCandidate> = None;
        for b in 0..n_bins - 1 {
            gl += hg[b];
            hl += hh[b];
            cl += hc[b];
            let cr = rows.len() - cl;
            if cl < msl {
                continue;
            }
            if cr < msl {
                break;
            }
            if hc[b] == 0 {
                continue;
            }
            let gain = self.score(gl, hl) + self.score(g_total - gl, h_total - hl) - parent;
            if gain > MIN_SPLIT_GAIN && best.as_ref().is_none_or(|c| gain > c.gain) {
                best = Some(SplitCandidate { gain, feature: f, bin: b as u8 });
            }
        }
        best
    }

    fn grow(&self) -> Tree {
        struct Pending {
            id: usize,
            rows: Vec<u32>,
            depth: usize,
        }
        let n = self.grad.len();
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(Pending { id: 0, rows: (0..n as u32).collect(), depth: 0 });

        while let Some(Pending { id, rows, depth }) = queue.pop_front() {
            let g: f64 = rows.iter().map(|&r| self.grad[r as usize]).sum();
            let h: f64 = rows.iter().map(|&r| self.hess[r as usize]).sum();
            let can_split = depth < self.params.max_depth && rows.len() >= 2 * self.params.min_samples_leaf;
            let best = if can_split {
                (0..self.binned.len())
                    .into_par_iter()
                    .filter_map(|f| self.best_split_for_feature(f, &rows, g, h))
                    .collect::<Vec<_>>()
                    .into_iter()
                    // Highest gain; the lowest feature index wins ties.
                    .fold(None, |acc: Option<SplitCandidate>, c| match acc {
                        Some(a) if a.gain >= c.gain => Some(a),
                        _ => Some(c),
                    })
            } else {
                None
            };

            match best {
                None => nodes[id] = Node::Leaf { value: self.leaf_value(g, h) },
                Some(split) => {
                    let col = &self.binned[split.feature];
                    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                        rows.iter().partition(|&&r| col[r as usize] <= split.bin);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[id] = Node::Split {
                        feature: split.feature,
                        bin: split.bin,
                        threshold: self.bin_map.thresholds[split.feature][split.bin as usize],
                        left,
                        right: left + 1,
                    };
                    queue.push_back(Pending { id: left, rows: left_rows, depth: depth + 1 });
                    queue.push_back(Pending { id: left + 1, rows: right_rows, depth: depth + 1 });
                }
            }
        }
        Tree { nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_feature(values: &[f64]) -> TrainingSet {
        let mut s = TrainingSet::new(1);
        for v in values {
            s.push(&[*v], false);
        }
        s
    }

    #[test]
    fn bins_for_thousand_distinct_values() {
        let data = single_feature(&(1..=1000).map(|v| v as f64).collect::<Vec<_>>());
        let bins = fit_bins(&data, 255);
        assert_eq!(bins.n_bins(0), 255);
        assert!(bins.thresholds[0].windows(2).all(|w| w[0] < w[1]));
        let mut pop = vec![0usize; 255];
        for v in 1..=1000 {
            pop[bins.bin(0, v as f64) as usize] += 1;
        }
        assert!(pop.iter().all(|&c| (3..=5).contains(&c)), "{pop:?}");
    }

    #[test]
    fn bins_for_few_values() {
        assert_eq!(fit_bins(&single_feature(&[7.0; 50]), 255).n_bins(0), 1);
        let three = fit_bins(&single_feature(&[1.0, 2.0, 3.0, 2.0]), 255);
        assert_eq!(three.n_bins(0), 3);
        assert_eq!([1.0, 2.0, 3.0].map(|v| three.bin(0, v)), [0, 1, 2]);
    }

    #[test]
    fn single_class_gives_constant_model() {
        let mut s = TrainingSet::new(2);
        for i in 0..100 {
            s.push(&[i as f64, 1.0], false);
        }
        let m = train(&s, &GbdtParams::default()).unwrap();
        assert!(m.trees.is_empty());
        assert!(m.predict(&[5.0, 1.0]) < 0.5);
        assert!(m.predict(&[5.0, 1.0]) > 0.0);
    }

    #[test]
    fn constant_zero_model_predicts_half() {
        let m = GbdtModel::constant(0.0, GbdtParams::default(), 3);
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]), 0.5);
    }

    #[test]
    fn learns_a_threshold() {
        let mut s = TrainingSet::new(2);
        for i in 0..2000 {
            let x = (i * 7919 % 2000) as f64;
            s.push(&[x, (i % 13) as f64], x < 500.0);
        }
        let m = train(&s, &GbdtParams { n_trees: 20, ..Default::default() }).unwrap();
        assert!(m.predict(&[10.0, 3.0]) > 0.9);
        assert!(m.predict(&[1500.0, 3.0]) < 0.1);
        assert!(m.trees.iter().all(|t| t.n_leaves() >= 2));
    }

    #[test]
    fn weights_shift_prevalence() {
        let mut s = TrainingSet::new(1);
        s.push_weighted(&[0.0], true, 3.0);
        s.push_weighted(&[0.0], false, 1.0);
        let m = train(&s, &GbdtParams { n_trees: 1, ..Default::default() }).unwrap();
        assert!((m.base_score - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        let s = single_feature(&[1.0]);
        for p in [
            GbdtParams { learning_rate: 0.0, ..Default::default() },
            GbdtParams { n_trees: 0, ..Default::default() },
            GbdtParams { max_bins: 1, ..Default::default() },
            GbdtParams { max_bins: 256, ..Default::default() },
            GbdtParams { max_depth: 0, ..Default::default() },
        ] {
            assert!(train(&s, &p).is_err());
        }
        assert!(train(&TrainingSet::new(1), &GbdtParams::default()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let csv = "a,b,label\n1,2,1\n3,4,0\n";
        let s = TrainingSet::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert!(s.label(0) && !s.label(1));
        assert!(TrainingSet::from_csv("a,label\nx,1\n".as_bytes()).is_err());
    }

    #[test]
    fn json_version_is_checked() {
        let m = GbdtModel::constant(0.3, GbdtParams::default(), 2);
        let back = GbdtModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = m.to_json().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(matches!(GbdtModel::from_json(&bad), Err(Error::ModelVersion(9))));
    }
}
