//! Desk-scale evaluation harness: weighted regressors, MSE/PCC metrics,
//! distribution-correlation and region analysis, and an experiment runner
//! comparing Baseline vs CWL vs TNS+CWL on synthetic corpora.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cwl::{compute_cwl_weights, WeightTable};
use crate::dataset::Sequence;
use crate::error::{Result, UldaError};
use crate::label_dist::{
    bin_labels, convolve, make_plan, DiscreteKernel, LabelBinning, LabelHistogram,
};
use crate::rng::StreamPurpose;
use crate::sim::{SimConfig, SyntheticCorpus};
use crate::tns::{augment_sequence, TnsParams};

/// Prediction quality on one evaluation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    /// `None` when either vector has zero variance.
    pub pcc: Option<f64>,
}

/// Mean squared error.
pub fn mse(labels: &[f64], predictions: &[f64]) -> Result<f64> {
    check_pair(labels, predictions)?;
    let n = labels.len() as f64;
    Ok(labels
        .iter()
        .zip(predictions)
        .map(|(&y, &p)| (y - p) * (y - p))
        .sum::<f64>()
        / n)
}

/// Pearson's correlation coefficient.
pub fn pcc(labels: &[f64], predictions: &[f64]) -> Result<f64> {
    check_pair(labels, predictions)?;
    let n = labels.len() as f64;
    let mean_y = labels.iter().sum::<f64>() / n;
    let mean_p = predictions.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_y = 0.0;
    let mut var_p = 0.0;
    for (&y, &p) in labels.iter().zip(predictions) {
        cov += (y - mean_y) * (p - mean_p);
        var_y += (y - mean_y) * (y - mean_y);
        var_p += (p - mean_p) * (p - mean_p);
    }
    if var_y <= 0.0 || var_p <= 0.0 {
        return Err(UldaError::DegenerateCorrelation);
    }
    Ok(cov / (var_y.sqrt() * var_p.sqrt()))
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(UldaError::LengthMismatch {
            context: "metric input vectors",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(UldaError::InvalidParameter(
            "metric inputs need at least 2 elements".into(),
        ));
    }
    Ok(())
}

/// Pearson correlation of two histograms' count vectors.
pub fn distribution_pcc(h1: &LabelHistogram, h2: &LabelHistogram) -> Result<f64> {
    if h1.binning() != h2.binning() {
        return Err(UldaError::BinningMismatch);
    }
    pcc(h1.counts(), h2.counts())
}

/// Linear model fit by weighted ridge regression.
///
/// Minimizes the weighted squared error plus `penalty * ||coefficients||^2`,
/// with the weights scaled to mean 1 first so that rescaling all weights
/// leaves the minimizer unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub coefficients: Vec<f64>,
}

impl RidgeModel {
    pub fn predict(&self, features: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(features)
            .map(|(&c, &f)| c * f)
            .sum()
    }
}

pub fn fit_weighted_ridge(
    features: &[Vec<f64>],
    labels: &[f64],
    weights: &[f64],
    penalty: f64,
) -> Result<RidgeModel> {
    if features.is_empty() {
        return Err(UldaError::EmptySequence);
    }
    if features.len() != labels.len() || features.len() != weights.len() {
        return Err(UldaError::LengthMismatch {
            context: "ridge features vs labels vs weights",
            expected: features.len(),
            actual: labels.len().min(weights.len()),
        });
    }
    if !(penalty >= 0.0) {
        return Err(UldaError::InvalidParameter("penalty must be >= 0".into()));
    }
    let dim = features[0].len();
    let mean_weight = weights.iter().sum::<f64>() / weights.len() as f64;
    if !(mean_weight > 0.0) {
        return Err(UldaError::DegenerateWeights("all ridge weights are zero".into()));
    }

    let mut gram = DMatrix::zeros(dim, dim);
    let mut moment = DVector::zeros(dim);
    for ((f, &y), &w) in features.iter().zip(labels).zip(weights) {
        if f.len() != dim {
            return Err(UldaError::DimensionMismatch {
                expected: dim,
                actual: f.len(),
            });
        }
        let w = w / mean_weight;
        for r in 0..dim {
            moment[r] += w * y * f[r];
            for c in 0..dim {
                gram[(r, c)] += w * f[r] * f[c];
            }
        }
    }
    for k in 0..dim {
        gram[(k, k)] += penalty;
    }
    let solution = if penalty > 0.0 {
        gram.cholesky()
            .map(|ch| ch.solve(&moment))
            .ok_or(UldaError::SingularSystem)?
    } else {
        let lu = gram.full_piv_lu();
        if !lu.is_invertible() {
            return Err(UldaError::SingularSystem);
        }
        lu.solve(&moment).ok_or(UldaError::SingularSystem)?
    };
    Ok(RidgeModel {
        coefficients: solution.iter().cloned().collect(),
    })
}

/// Weighted k-nearest-neighbour regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    weights: Vec<f64>,
    k: usize,
}

pub fn fit_weighted_knn(
    features: &[Vec<f64>],
    labels: &[f64],
    weights: &[f64],
    k: usize,
) -> Result<KnnModel> {
    if features.is_empty() {
        return Err(UldaError::EmptySequence);
    }
    if features.len() != labels.len() || features.len() != weights.len() {
        return Err(UldaError::LengthMismatch {
            context: "knn features vs labels vs weights",
            expected: features.len(),
            actual: labels.len().min(weights.len()),
        });
    }
    if k == 0 || k > features.len() {
        return Err(UldaError::InvalidParameter(format!(
            "k = {k} must be in 1..={}",
            features.len()
        )));
    }
    Ok(KnnModel {
        features: features.to_vec(),
        labels: labels.to_vec(),
        weights: weights.to_vec(),
        k,
    })
}

impl KnnModel {
    /// Weight-weighted mean of the k nearest training labels; distance ties
    /// break to the lower training index.
    pub fn predict(&self, query: &[f64]) -> f64 {
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        order.sort_by(|&a, &b| {
            let da = squared_distance(query, &self.features[a]);
            let db = squared_distance(query, &self.features[b]);
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        let chosen = &order[..self.k];
        let weight_sum: f64 = chosen.iter().map(|&i| self.weights[i]).sum();
        if weight_sum > 0.0 {
            chosen.iter().map(|&i| self.weights[i] * self.labels[i]).sum::<f64>() / weight_sum
        } else {
            chosen.iter().map(|&i| self.labels[i]).sum::<f64>() / self.k as f64
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// How the region-II count threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionThreshold {
    Absolute(f64),
    /// Threshold = fraction * max bin count, for corpora far smaller than the
    /// benchmark datasets the absolute default was chosen for.
    FractionOfMax(f64),
}

impl RegionThreshold {
    pub fn resolve(&self, counts: &[f64]) -> f64 {
        match *self {
            RegionThreshold::Absolute(v) => v,
            RegionThreshold::FractionOfMax(f) => {
                f * counts.iter().cloned().fold(0.0f64, f64::max)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub name: String,
    /// Bin range `[start, end)`.
    pub start: usize,
    pub end: usize,
    pub bin_count: usize,
    pub mean_mse: Option<f64>,
    pub mse_range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAnalysis {
    pub threshold: f64,
    /// No bin met the threshold; everything was assigned to region I.
    pub all_below_threshold: bool,
    pub regions: Vec<RegionSummary>,
}

/// Splits the bins into a central high-count region II (the longest run of
/// bins meeting the threshold, ties to the most central run) and flanking
/// regions I and III, then summarizes the per-bin MSE in each.
pub fn region_analysis(
    counts: &[f64],
    per_bin_mse: &[Option<f64>],
    threshold: f64,
) -> Result<RegionAnalysis> {
    if !(threshold > 0.0) {
        return Err(UldaError::InvalidParameter("region threshold must be > 0".into()));
    }
    if counts.len() != per_bin_mse.len() {
        return Err(UldaError::LengthMismatch {
            context: "region counts vs per-bin mse",
            expected: counts.len(),
            actual: per_bin_mse.len(),
        });
    }
    let bins = counts.len();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, &c) in counts.iter().enumerate() {
        if c >= threshold {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            runs.push((s, i));
        }
    }
    if let Some(s) = start {
        runs.push((s, bins));
    }

    let center = (bins as f64 - 1.0) / 2.0;
    let best = runs.iter().cloned().max_by(|a, b| {
        let len_a = a.1 - a.0;
        let len_b = b.1 - b.0;
        let dist = |r: &(usize, usize)| ((r.0 + r.1) as f64 / 2.0 - center).abs();
        len_a
            .cmp(&len_b)
            .then(dist(b).partial_cmp(&dist(a)).unwrap_or(std::cmp::Ordering::Equal))
            .then(b.0.cmp(&a.0))
    });

    let (all_below, (ii_start, ii_end)) = match best {
        Some(run) => (false, run),
        None => (true, (bins, bins)),
    };
    let summarize = |name: &str, start: usize, end: usize| {
        let values: Vec<f64> = per_bin_mse[start..end].iter().flatten().cloned().collect();
        RegionSummary {
            name: name.to_string(),
            start,
            end,
            bin_count: end - start,
            mean_mse: if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            },
            mse_range: if values.is_empty() {
                None
            } else {
                let max = values.iter().cloned().fold(f64::MIN, f64::max);
                let min = values.iter().cloned().fold(f64::MAX, f64::min);
                Some(max - min)
            },
        }
    };
    Ok(RegionAnalysis {
        threshold,
        all_below_threshold: all_below,
        regions: vec![
            summarize("I", 0, ii_start),
            summarize("II", ii_start, ii_end),
            summarize("III", ii_end, bins),
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Baseline,
    Cwl,
    TnsCwl,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Baseline, Strategy::Cwl, Strategy::TnsCwl];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::Cwl => "cwl",
            Strategy::TnsCwl => "tns+cwl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegressorKind {
    Ridge { penalty: f64 },
    Knn { k: usize },
}

/// The four pipeline hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UldaParams {
    pub bins: usize,
    pub kernel_size: f64,
    pub kernel_sigma: f64,
    pub slice_threshold: usize,
}

impl Default for UldaParams {
    fn default() -> Self {
        UldaParams {
            bins: 100,
            kernel_size: 0.06,
            kernel_sigma: 0.02,
            slice_threshold: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub ulda: UldaParams,
    pub regressor: RegressorKind,
    pub repeats: usize,
    /// Fraction of sequences assigned to the training split.
    pub train_fraction: f64,
    pub region_threshold: RegionThreshold,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sim: SimConfig::default(),
            ulda: UldaParams::default(),
            regressor: RegressorKind::Ridge { penalty: 1e-3 },
            repeats: 3,
            train_fraction: 2.0 / 3.0,
            region_threshold: RegionThreshold::FractionOfMax(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionPccs {
    pub raw_train_vs_test: f64,
    pub convolved_train_vs_test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub metrics: Metrics,
    pub per_bin_mse: Vec<Option<f64>>,
    pub per_bin_mse_min: Vec<Option<f64>>,
    pub per_bin_mse_max: Vec<Option<f64>>,
    /// Mean over occupied bins of (max - min) squared error within the bin.
    pub mean_bin_mse_range: Option<f64>,
    pub regions: RegionAnalysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub seed: u64,
    pub train_sequences: usize,
    pub test_sequences: usize,
    pub distribution: DistributionPccs,
    /// Aggregate per-bin counts over the whole split.
    pub train_counts: Vec<f64>,
    pub convolved_train_counts: Vec<f64>,
    pub test_utopia_counts: Vec<f64>,
    pub strategies: Vec<StrategyResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub mean_pcc: Option<f64>,
    pub mean_bin_mse_range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub mean_raw_train_vs_test_pcc: f64,
    pub mean_convolved_train_vs_test_pcc: f64,
    pub strategies: Vec<StrategySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatReport>,
    pub summary: ExperimentSummary,
}

/// Runs the full comparison: generate a corpus, split by sequence, train each
/// strategy, evaluate on the utopia labels of the held-out split, repeat with
/// derived seeds, and average.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.sim.validate()?;
    if config.repeats == 0 {
        return Err(UldaError::InvalidParameter("repeats must be >= 1".into()));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(UldaError::InvalidParameter(
            "train_fraction must be in (0, 1)".into(),
        ));
    }
    if config.sim.sequence_count < 2 {
        return Err(UldaError::InvalidParameter(
            "need at least 2 sequences to split train/test".into(),
        ));
    }

    let mut repeats = Vec::with_capacity(config.repeats);
    for r in 0..config.repeats {
        let seed = config.sim.seed.wrapping_add(r as u64);
        repeats.push(run_single(config, seed)?);
    }

    let summary = summarize(&repeats);
    Ok(ExperimentReport {
        config: config.clone(),
        repeats,
        summary,
    })
}

fn run_single(config: &ExperimentConfig, seed: u64) -> Result<RepeatReport> {
    let sim = SimConfig { seed, ..config.sim.clone() };
    let corpus = SyntheticCorpus::generate(&sim)?;
    let binning = LabelBinning::new(sim.label_min, sim.label_max, config.ulda.bins)?;
    let kernel = DiscreteKernel::build(
        config.ulda.kernel_size,
        config.ulda.kernel_sigma,
        binning.bin_width(),
    )?;

    let total = sim.sequence_count;
    let train_count = ((config.train_fraction * total as f64).round() as usize).clamp(1, total - 1);
    let train = &corpus.observed.sequences[..train_count];
    let test = &corpus.observed.sequences[train_count..];

    // per-sequence histograms and their convolutions
    let mut hists = Vec::with_capacity(train.len());
    let mut convs = Vec::with_capacity(train.len());
    for seq in train {
        let hist = bin_labels(&seq.labels(), &binning, true)?;
        let conv = convolve(&hist, &kernel)?;
        hists.push(hist);
        convs.push(conv);
    }

    let train_hist = sum_histograms(&binning, &hists)?;
    let conv_hist = sum_histograms(&binning, &convs)?;
    let test_hist = sum_histograms(
        &binning,
        &test
            .iter()
            .map(|seq| crate::sim::utopia_distribution(seq, &binning))
            .collect::<Result<Vec<_>>>()?,
    )?;

    let distribution = DistributionPccs {
        raw_train_vs_test: distribution_pcc(&train_hist, &test_hist)?,
        convolved_train_vs_test: distribution_pcc(&conv_hist, &test_hist)?,
    };

    // evaluation targets: utopia labels of the test split
    let mut test_features = Vec::new();
    let mut test_labels = Vec::new();
    for seq in test {
        for frame in &seq.frames {
            test_features.push(frame.features.clone());
            test_labels.push(frame.utopia_label.unwrap_or(frame.label));
        }
    }

    let mut strategies = Vec::with_capacity(Strategy::ALL.len());
    for strategy in Strategy::ALL {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        match strategy {
            Strategy::Baseline => {
                for seq in train {
                    push_rows(seq, &WeightTable::uniform(seq), &mut features, &mut labels, &mut weights);
                }
            }
            Strategy::Cwl => {
                for (i, seq) in train.iter().enumerate() {
                    let table = compute_cwl_weights(&hists[i], &convs[i], seq, true)?;
                    push_rows(seq, &table, &mut features, &mut labels, &mut weights);
                }
            }
            Strategy::TnsCwl => {
                for (i, seq) in train.iter().enumerate() {
                    let plan = make_plan(&hists[i], &convs[i])?.restricted_to_support();
                    let params = TnsParams {
                        slice_threshold: config.ulda.slice_threshold,
                        clamp_labels: true,
                        seed,
                        stream: ((StreamPurpose::Augment as u64) << 56) | i as u64,
                    };
                    let (augmented, _) = augment_sequence(seq, &plan, &params)?;
                    let hist_after = bin_labels(&augmented.labels(), &binning, true)?;
                    let table = compute_cwl_weights(&hist_after, &convs[i], &augmented, true)?;
                    push_rows(&augmented, &table, &mut features, &mut labels, &mut weights);
                }
            }
        }

        let predictions = match config.regressor {
            RegressorKind::Ridge { penalty } => {
                let design: Vec<Vec<f64>> = features.iter().map(|f| with_bias(f)).collect();
                let model = fit_weighted_ridge(&design, &labels, &weights, penalty)?;
                test_features
                    .iter()
                    .map(|f| model.predict(&with_bias(f)))
                    .collect::<Vec<f64>>()
            }
            RegressorKind::Knn { k } => {
                let model = fit_weighted_knn(&features, &labels, &weights, k)?;
                test_features.iter().map(|f| model.predict(f)).collect()
            }
        };

        let metrics = Metrics {
            mse: mse(&test_labels, &predictions)?,
            pcc: pcc(&test_labels, &predictions).ok(),
        };
        let per_bin = per_bin_squared_errors(&binning, &test_labels, &predictions);
        let regions = region_analysis(
            train_hist.counts(),
            &per_bin.mean,
            config.region_threshold.resolve(train_hist.counts()),
        )?;
        strategies.push(StrategyResult {
            strategy,
            metrics,
            mean_bin_mse_range: per_bin.mean_range(),
            per_bin_mse: per_bin.mean,
            per_bin_mse_min: per_bin.min,
            per_bin_mse_max: per_bin.max,
            regions,
        });
    }

    Ok(RepeatReport {
        seed,
        train_sequences: train.len(),
        test_sequences: test.len(),
        distribution,
        train_counts: train_hist.counts().to_vec(),
        convolved_train_counts: conv_hist.counts().to_vec(),
        test_utopia_counts: test_hist.counts().to_vec(),
        strategies,
    })
}

fn with_bias(features: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(features.len() + 1);
    row.push(1.0);
    row.extend_from_slice(features);
    row
}

fn push_rows(
    seq: &Sequence,
    table: &WeightTable,
    features: &mut Vec<Vec<f64>>,
    labels: &mut Vec<f64>,
    weights: &mut Vec<f64>,
) {
    for (frame, &w) in seq.frames.iter().zip(&table.weights) {
        features.push(frame.features.clone());
        labels.push(frame.label);
        weights.push(w);
    }
}

fn sum_histograms(binning: &LabelBinning, hists: &[LabelHistogram]) -> Result<LabelHistogram> {
    let mut counts = vec![0.0; binning.bin_count()];
    for hist in hists {
        for (total, &c) in counts.iter_mut().zip(hist.counts()) {
            *total += c;
        }
    }
    LabelHistogram::new(*binning, counts)
}

struct PerBinErrors {
    mean: Vec<Option<f64>>,
    min: Vec<Option<f64>>,
    max: Vec<Option<f64>>,
}

impl PerBinErrors {
    fn mean_range(&self) -> Option<f64> {
        let ranges: Vec<f64> = self
            .min
            .iter()
            .zip(&self.max)
            .filter_map(|(&lo, &hi)| Some(hi? - lo?))
            .collect();
        if ranges.is_empty() {
            None
        } else {
            Some(ranges.iter().sum::<f64>() / ranges.len() as f64)
        }
    }
}

fn per_bin_squared_errors(
    binning: &LabelBinning,
    labels: &[f64],
    predictions: &[f64],
) -> PerBinErrors {
    let bins = binning.bin_count();
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    let mut mins = vec![f64::INFINITY; bins];
    let mut maxs = vec![f64::NEG_INFINITY; bins];
    for (&y, &p) in labels.iter().zip(predictions) {
        let bin = binning.bin_of_clamped(y);
        let se = (y - p) * (y - p);
        sums[bin] += se;
        counts[bin] += 1;
        mins[bin] = mins[bin].min(se);
        maxs[bin] = maxs[bin].max(se);
    }
    PerBinErrors {
        mean: (0..bins)
            .map(|b| (counts[b] > 0).then(|| sums[b] / counts[b] as f64))
            .collect(),
        min: (0..bins).map(|b| (counts[b] > 0).then(|| mins[b])).collect(),
        max: (0..bins).map(|b| (counts[b] > 0).then(|| maxs[b])).collect(),
    }
}

fn summarize(repeats: &[RepeatReport]) -> ExperimentSummary {
    let n = repeats.len() as f64;
    let strategies = Strategy::ALL
        .iter()
        .map(|&strategy| {
            let mses: Vec<f64> = repeats
                .iter()
                .map(|r| result_of(r, strategy).metrics.mse)
                .collect();
            let mean_mse = mses.iter().sum::<f64>() / n;
            let std_mse =
                (mses.iter().map(|&m| (m - mean_mse) * (m - mean_mse)).sum::<f64>() / n).sqrt();
            let pccs: Vec<f64> = repeats
                .iter()
                .filter_map(|r| result_of(r, strategy).metrics.pcc)
                .collect();
            let ranges: Vec<f64> = repeats
                .iter()
                .filter_map(|r| result_of(r, strategy).mean_bin_mse_range)
                .collect();
            StrategySummary {
                strategy,
                mean_mse,
                std_mse,
                mean_pcc: mean_of(&pccs),
                mean_bin_mse_range: mean_of(&ranges),
            }
        })
        .collect();
    ExperimentSummary {
        mean_raw_train_vs_test_pcc: repeats
            .iter()
            .map(|r| r.distribution.raw_train_vs_test)
            .sum::<f64>()
            / n,
        mean_convolved_train_vs_test_pcc: repeats
            .iter()
            .map(|r| r.distribution.convolved_train_vs_test)
            .sum::<f64>()
            / n,
        strategies,
    }
}

fn result_of(repeat: &RepeatReport, strategy: Strategy) -> &StrategyResult {
    repeat
        .strategies
        .iter()
        .find(|s| s.strategy == strategy)
        .expect("every repeat carries every strategy")
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
