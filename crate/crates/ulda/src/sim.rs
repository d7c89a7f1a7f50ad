//! Synthetic-annotator corpus generator.
//!
//! Produces corpora with known ground truth: smooth utopia label curves,
//! features statistically coupled to the labels, and observed labels formed
//! as the mean of a finite number of Gaussian annotator votes. This is the
//! only way to check the convolution pipeline against a utopia distribution
//! that is actually known.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Frame, Sequence, SequenceDataset};
use crate::error::{Result, UldaError};
use crate::label_dist::{bin_labels, LabelBinning, LabelHistogram};
use crate::rng::{stream_rng, StreamPurpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub sequence_count: usize,
    pub frames_per_sequence: usize,
    pub feature_dim: usize,
    /// Number of annotators whose votes are averaged into each observed label.
    pub annotator_count: usize,
    /// Standard deviation of one annotator's vote around the true label.
    pub vote_std: f64,
    pub label_min: f64,
    pub label_max: f64,
    /// Correlation length of the utopia label curve, in frames.
    pub smoothness: f64,
    /// Isotropic noise added to the label embedding in feature space.
    pub feature_noise: f64,
    /// Clamp observed labels back into the label range (finite-annotator
    /// averages can overshoot it).
    pub clamp_votes: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            sequence_count: 12,
            frames_per_sequence: 240,
            feature_dim: 6,
            annotator_count: 3,
            vote_std: 0.1,
            label_min: -1.0,
            label_max: 1.0,
            smoothness: 24.0,
            feature_noise: 0.05,
            clamp_votes: true,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sequence_count == 0 {
            return Err(UldaError::InvalidParameter("sequence_count must be >= 1".into()));
        }
        if self.frames_per_sequence < 2 {
            return Err(UldaError::InvalidParameter(
                "frames_per_sequence must be >= 2".into(),
            ));
        }
        if self.feature_dim == 0 {
            return Err(UldaError::InvalidParameter("feature_dim must be >= 1".into()));
        }
        if self.annotator_count == 0 {
            return Err(UldaError::InvalidParameter("annotator_count must be >= 1".into()));
        }
        if !(self.vote_std >= 0.0) {
            return Err(UldaError::InvalidParameter("vote_std must be >= 0".into()));
        }
        if !(self.smoothness > 0.0) {
            return Err(UldaError::InvalidParameter("smoothness must be > 0".into()));
        }
        if !(self.feature_noise >= 0.0) {
            return Err(UldaError::InvalidParameter("feature_noise must be >= 0".into()));
        }
        if !(self.label_min < self.label_max) {
            return Err(UldaError::InvalidParameter(
                "label_min must be < label_max".into(),
            ));
        }
        Ok(())
    }

    fn center(&self) -> f64 {
        (self.label_min + self.label_max) / 2.0
    }

    fn half_range(&self) -> f64 {
        (self.label_max - self.label_min) / 2.0
    }
}

/// A generated corpus: the same features with utopia labels (`truth`) and
/// with finite-annotator labels (`observed`).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub truth: SequenceDataset,
    pub observed: SequenceDataset,
}

impl SyntheticCorpus {
    pub fn generate(config: &SimConfig) -> Result<SyntheticCorpus> {
        let truth = generate_truth(config)?;
        let observed = annotate(
            &truth,
            config.annotator_count,
            config.vote_std,
            config.clamp_votes,
            config.seed,
        )?;
        Ok(SyntheticCorpus { truth, observed })
    }

    /// Per-sequence utopia label histograms of the truth labels.
    pub fn utopia_histograms(&self, binning: &LabelBinning) -> Result<Vec<LabelHistogram>> {
        self.truth
            .sequences
            .iter()
            .map(|seq| utopia_distribution(seq, binning))
            .collect()
    }
}

/// Fixed nonlinear embedding of a label into feature space: one sinusoid per
/// coordinate, with frequencies and phases drawn once per corpus.
#[derive(Debug, Clone)]
struct LabelEmbedding {
    frequencies: Vec<f64>,
    phases: Vec<f64>,
}

impl LabelEmbedding {
    /// The embedding is a fixed property of the simulator, not of one corpus:
    /// every corpus shares the same label-to-feature map so that experiment
    /// seeds vary the data, never the regression problem itself. Frequencies
    /// ladder from slow (globally informative) to fast (locally flexible).
    const EMBEDDING_SEED: u64 = 0x1abe1;
    const FREQ_LOW: f64 = 1.2;
    const FREQ_HIGH: f64 = 7.0;

    fn new(dim: usize) -> LabelEmbedding {
        let mut rng = stream_rng(Self::EMBEDDING_SEED, StreamPurpose::Embedding, 0);
        let frequencies = (0..dim)
            .map(|k| {
                let t = if dim > 1 { k as f64 / (dim - 1) as f64 } else { 0.0 };
                Self::FREQ_LOW + t * t * (Self::FREQ_HIGH - Self::FREQ_LOW)
            })
            .collect();
        let phases = (0..dim)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        LabelEmbedding { frequencies, phases }
    }

    /// `unit_label` is the label mapped to [-1, 1].
    fn embed(&self, unit_label: f64) -> impl Iterator<Item = f64> + '_ {
        self.frequencies
            .iter()
            .zip(&self.phases)
            .map(move |(&freq, &phase)| (freq * unit_label + phase).sin())
    }
}

/// Generates the utopia corpus: per sequence, a Gaussian-filtered noise curve
/// squashed into the label range, plus features embedded from the labels.
pub fn generate_truth(config: &SimConfig) -> Result<SequenceDataset> {
    config.validate()?;
    let embedding = LabelEmbedding::new(config.feature_dim);
    let m = config.frames_per_sequence;
    let center = config.center();
    let half = config.half_range();

    // Gaussian filter taps and the variance they leave in filtered white noise
    let pad = (4.0 * config.smoothness).ceil() as usize;
    let taps: Vec<f64> = (-(pad as i64)..=pad as i64)
        .map(|j| (-((j * j) as f64) / (2.0 * config.smoothness * config.smoothness)).exp())
        .collect();
    let tap_sum: f64 = taps.iter().sum();
    let norm: f64 = taps.iter().map(|t| (t / tap_sum) * (t / tap_sum)).sum::<f64>().sqrt();

    let mut sequences = Vec::with_capacity(config.sequence_count);
    for s in 0..config.sequence_count {
        let mut label_rng = stream_rng(config.seed, StreamPurpose::TruthLabels, s as u64);
        let white: Vec<f64> = (0..m + 2 * pad)
            .map(|_| label_rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let mut labels = Vec::with_capacity(m);
        for i in 0..m {
            let filtered: f64 = taps
                .iter()
                .enumerate()
                .map(|(j, &t)| t / tap_sum * white[i + j])
                .sum();
            // unit-variance smooth process, squashed to stay inside the range
            let x = filtered / norm;
            let gain: f64 = std::env::var("ULDA_CALIB_GAIN")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(0.95);
            labels.push(center + half * (gain * x).tanh());
        }

        let mut noise_rng = stream_rng(config.seed, StreamPurpose::FeatureNoise, s as u64);
        let frames = labels
            .iter()
            .enumerate()
            .map(|(t, &label)| {
                let unit = (label - center) / half;
                let features = embedding
                    .embed(unit)
                    .map(|v| {
                        v + config.feature_noise
                            * noise_rng.sample::<f64, _>(rand_distr::StandardNormal)
                    })
                    .collect();
                Frame {
                    time: t as i64,
                    label,
                    utopia_label: Some(label),
                    features,
                }
            })
            .collect();
        sequences.push(Sequence::new(format!("seq_{s:03}"), frames));
    }

    Ok(SequenceDataset {
        feature_dim: config.feature_dim,
        label_min: config.label_min,
        label_max: config.label_max,
        sequences,
    })
}

/// Replaces every label with the mean of `annotator_count` independent
/// Gaussian votes around it. Features and utopia labels are unchanged.
pub fn annotate(
    truth: &SequenceDataset,
    annotator_count: usize,
    vote_std: f64,
    clamp_votes: bool,
    seed: u64,
) -> Result<SequenceDataset> {
    if annotator_count == 0 {
        return Err(UldaError::InvalidParameter("annotator_count must be >= 1".into()));
    }
    if !(vote_std >= 0.0) {
        return Err(UldaError::InvalidParameter("vote_std must be >= 0".into()));
    }
    let mut observed = truth.clone();
    for (s, seq) in observed.sequences.iter_mut().enumerate() {
        let mut rng = stream_rng(seed, StreamPurpose::Votes, s as u64);
        for frame in &mut seq.frames {
            let truth_label = frame.label;
            let mut label = if vote_std == 0.0 {
                truth_label
            } else {
                let vote_sum: f64 = (0..annotator_count)
                    .map(|_| {
                        truth_label
                            + vote_std * rng.sample::<f64, _>(rand_distr::StandardNormal)
                    })
                    .sum();
                vote_sum / annotator_count as f64
            };
            if clamp_votes {
                label = label.clamp(truth.label_min, truth.label_max);
            }
            frame.utopia_label = Some(truth_label);
            frame.label = label;
        }
    }
    Ok(observed)
}

/// The reference distribution the convolution is supposed to approach: the
/// histogram of a sequence's utopia labels (falling back to the plain label
/// for frames without one).
pub fn utopia_distribution(sequence: &Sequence, binning: &LabelBinning) -> Result<LabelHistogram> {
    let labels: Vec<f64> = sequence
        .frames
        .iter()
        .map(|f| f.utopia_label.unwrap_or(f.label))
        .collect();
    bin_labels(&labels, binning, true)
}
