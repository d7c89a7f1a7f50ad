//! Time-slice normal sampling: feature-space oversampling that preserves
//! temporal continuity.
//!
//! For every bin that needs new samples, the sequence is segmented into
//! maximal runs of frames whose labels share that bin. New samples pick a
//! slice with probability proportional to slice length, a contribution-
//! weighted feature normal is estimated over the (possibly extended) slice
//! window, features are drawn from it, and each draw is inserted next to the
//! Euclidean-nearest original frame with that frame's label.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Frame, Sequence};
use crate::error::{Result, UldaError};
use crate::label_dist::{AugmentationPlan, LabelBinning};

/// Maximal run of consecutive frames whose labels map to one bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSlice {
    /// First frame index (inclusive).
    pub start: usize,
    /// One past the last frame index (exclusive).
    pub end: usize,
    pub bin: usize,
}

impl TimeSlice {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

/// All slices of one bin within a sequence, in timeline order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceSet {
    pub bin: usize,
    pub slices: Vec<TimeSlice>,
}

impl SliceSet {
    pub fn total_len(&self) -> usize {
        self.slices.iter().map(TimeSlice::len).sum()
    }
}

/// Contribution-weighted feature normal of a slice window. The covariance
/// already carries the diagonal regularization recorded in `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNormal {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub lambda: f64,
}

impl FeatureNormal {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// A generated frame before insertion into the timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub features: Vec<f64>,
    /// Copied from the matched original frame.
    pub label: f64,
    /// Index of the nearest original frame within the slice.
    pub matched_frame: usize,
    /// Frames are always inserted after their match.
    pub insert_position: usize,
    pub slice: TimeSlice,
}

/// One line of the augmentation provenance log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub sequence_id: String,
    pub bin: usize,
    pub slice_start: usize,
    pub slice_end: usize,
    pub matched_frame: usize,
    pub insert_position: usize,
    pub seed: u64,
}

/// Parameters of one augmentation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TnsParams {
    /// Minimum window length for normal estimation (slices shorter than this
    /// are extended in both directions).
    pub slice_threshold: usize,
    /// Clamp out-of-range labels into the binning range instead of erroring.
    pub clamp_labels: bool,
    pub seed: u64,
    /// Generator stream, normally the sequence index within the dataset.
    pub stream: u64,
}

/// Segments a sequence's labels into the maximal runs mapping to `bin`.
pub fn segment_slices(
    labels: &[f64],
    bin: usize,
    binning: &LabelBinning,
    clamp: bool,
) -> Result<SliceSet> {
    let mut slices = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, &label) in labels.iter().enumerate() {
        if binning.frame_bin(i, label, clamp)? == bin {
            run_start.get_or_insert(i);
        } else if let Some(start) = run_start.take() {
            slices.push(TimeSlice { start, end: i, bin });
        }
    }
    if let Some(start) = run_start {
        slices.push(TimeSlice {
            start,
            end: labels.len(),
            bin,
        });
    }
    if slices.is_empty() {
        return Err(UldaError::NoFramesAtLabel { bin });
    }
    Ok(SliceSet { bin, slices })
}

/// Length-proportional slice selection probabilities.
pub fn slice_probabilities(slice_set: &SliceSet) -> Result<Vec<f64>> {
    let total = slice_set.total_len();
    if total == 0 {
        return Err(UldaError::NoFramesAtLabel { bin: slice_set.bin });
    }
    Ok(slice_set
        .slices
        .iter()
        .map(|s| s.len() as f64 / total as f64)
        .collect())
}

/// Extends a slice alternately left then right until it reaches
/// `min(threshold, sequence length)` frames, compensating on the open side at
/// sequence boundaries. Slices already at least `threshold` long are returned
/// unchanged.
pub fn extend_slice(seq_len: usize, slice: &TimeSlice, threshold: usize) -> (usize, usize) {
    let target = threshold.min(seq_len);
    let (mut start, mut end) = (slice.start, slice.end);
    let mut want_left = true;
    while end - start < target {
        if want_left && start > 0 {
            start -= 1;
        } else if end < seq_len {
            end += 1;
        } else if start > 0 {
            start -= 1;
        }
        want_left = !want_left;
    }
    (start, end)
}

/// Normalized per-frame contribution weights over a window: Gaussian density
/// of each frame's label around the slice's label mean, with the density
/// scale taken from the window's label spread.
///
/// `sigma_floor` replaces a zero window standard deviation (all labels equal),
/// which makes the weights uniform in that degenerate case.
pub fn contribution_weights(
    window_labels: &[f64],
    slice_labels: &[f64],
    sigma_floor: f64,
) -> Vec<f64> {
    assert!(!window_labels.is_empty() && !slice_labels.is_empty());
    let mu = mean(slice_labels);
    let sigma = {
        let s = population_std(window_labels);
        if s > 0.0 {
            s
        } else {
            sigma_floor
        }
    };
    // shift by the smallest squared z so the largest term is exp(0); the
    // shift and the density prefactor both cancel in the normalization
    let sq: Vec<f64> = window_labels
        .iter()
        .map(|&y| {
            let z = (y - mu) / sigma;
            z * z
        })
        .collect();
    let min_sq = sq.iter().cloned().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = sq.iter().map(|&s| (-0.5 * (s - min_sq)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Weighted mean and weighted covariance of a feature window, followed by
/// diagonal regularization. Windows shorter than the feature dimension keep
/// only the covariance diagonal.
pub fn estimate_normal(features: &[&[f64]], weights: &[f64]) -> Result<FeatureNormal> {
    if features.is_empty() {
        return Err(UldaError::EmptySequence);
    }
    if features.len() != weights.len() {
        return Err(UldaError::LengthMismatch {
            context: "features vs contribution weights",
            expected: features.len(),
            actual: weights.len(),
        });
    }
    let dim = features[0].len();
    for f in features {
        if f.len() != dim {
            return Err(UldaError::DimensionMismatch {
                expected: dim,
                actual: f.len(),
            });
        }
    }
    let weight_sum: f64 = weights.iter().sum();
    if (weight_sum - 1.0).abs() > 1e-9 {
        return Err(UldaError::InvalidParameter(format!(
            "contribution weights must sum to 1, got {weight_sum}"
        )));
    }

    let mut mean = DVector::zeros(dim);
    for (f, &c) in features.iter().zip(weights) {
        for k in 0..dim {
            mean[k] += c * f[k];
        }
    }
    let mut covariance = DMatrix::zeros(dim, dim);
    for (f, &c) in features.iter().zip(weights) {
        for row in 0..dim {
            let dr = f[row] - mean[row];
            for col in 0..dim {
                covariance[(row, col)] += c * dr * (f[col] - mean[col]);
            }
        }
    }
    if features.len() < dim {
        // too few samples for a full-rank estimate; keep the diagonal only
        for row in 0..dim {
            for col in 0..dim {
                if row != col {
                    covariance[(row, col)] = 0.0;
                }
            }
        }
    }
    let lambda = (1e-6 * covariance.trace() / dim as f64).max(1e-8);
    for k in 0..dim {
        covariance[(k, k)] += lambda;
    }
    Ok(FeatureNormal {
        mean,
        covariance,
        lambda,
    })
}

/// Draws `count` feature vectors from the normal. Deterministic given the
/// generator state.
pub fn sample_features(
    normal: &FeatureNormal,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>> {
    let factor = Cholesky::new(normal.covariance.clone()).ok_or(UldaError::DegenerateCovariance {
        lambda: normal.lambda,
    })?;
    let lower = factor.l();
    let dim = normal.dim();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &normal.mean + &lower * z;
        out.push(x.iter().cloned().collect());
    }
    Ok(out)
}

/// Matches each new feature to the Euclidean-nearest original frame within
/// the unextended slice (ties to the lower frame index), copies that frame's
/// label, and schedules insertion directly after it.
pub fn assign_and_insert(
    sequence: &Sequence,
    new_features: Vec<Vec<f64>>,
    slice: &TimeSlice,
) -> Vec<SyntheticFrame> {
    assert!(!slice.is_empty() && slice.end <= sequence.len());
    new_features
        .into_iter()
        .map(|features| {
            let mut best = slice.start;
            let mut best_dist = f64::INFINITY;
            for idx in slice.start..slice.end {
                let dist = squared_distance(&features, &sequence.frames[idx].features);
                if dist < best_dist {
                    best_dist = dist;
                    best = idx;
                }
            }
            SyntheticFrame {
                features,
                label: sequence.frames[best].label,
                matched_frame: best,
                insert_position: best + 1,
                slice: *slice,
            }
        })
        .collect()
}

/// Runs the full oversampling pipeline for one sequence and one plan.
///
/// Returns the augmented sequence (original frames unchanged and in order,
/// synthetic frames inserted after their matches, frame times renumbered
/// sequentially) and one provenance record per synthetic frame.
pub fn augment_sequence(
    sequence: &Sequence,
    plan: &AugmentationPlan,
    params: &TnsParams,
) -> Result<(Sequence, Vec<ProvenanceRecord>)> {
    if sequence.is_empty() {
        return Err(UldaError::EmptySequence);
    }
    let labels = sequence.labels();
    let binning = plan.binning();
    let sigma_floor = binning.bin_width() / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(params.stream);

    let mut synthetic: Vec<SyntheticFrame> = Vec::new();
    for record in plan.records() {
        if record.oversample_count == 0 {
            continue;
        }
        let slice_set = match segment_slices(&labels, record.bin, binning, params.clamp_labels) {
            Ok(set) => set,
            Err(UldaError::NoFramesAtLabel { bin }) => {
                return Err(UldaError::PlanMismatch { bin })
            }
            Err(other) => return Err(other),
        };
        let probs = slice_probabilities(&slice_set)?;
        let mut per_slice = vec![0usize; slice_set.slices.len()];
        for _ in 0..record.oversample_count {
            per_slice[sample_categorical(&probs, &mut rng)] += 1;
        }
        for (slice, &count) in slice_set.slices.iter().zip(&per_slice) {
            if count == 0 {
                continue;
            }
            let (w_start, w_end) = extend_slice(sequence.len(), slice, params.slice_threshold);
            let weights =
                contribution_weights(&labels[w_start..w_end], &labels[slice.start..slice.end], sigma_floor);
            let window: Vec<&[f64]> = sequence.frames[w_start..w_end]
                .iter()
                .map(|f| f.features.as_slice())
                .collect();
            let normal = estimate_normal(&window, &weights)?;
            let drawn = sample_features(&normal, count, &mut rng)?;
            synthetic.extend(assign_and_insert(sequence, drawn, slice));
        }
    }

    let provenance = synthetic
        .iter()
        .map(|s| ProvenanceRecord {
            sequence_id: sequence.id.clone(),
            bin: s.slice.bin,
            slice_start: s.slice.start,
            slice_end: s.slice.end,
            matched_frame: s.matched_frame,
            insert_position: s.insert_position,
            seed: params.seed,
        })
        .collect();

    // bucket synthetic frames by match so insertion preserves original order
    let mut buckets: Vec<Vec<SyntheticFrame>> = vec![Vec::new(); sequence.len()];
    for frame in synthetic {
        buckets[frame.matched_frame].push(frame);
    }
    let mut frames = Vec::with_capacity(sequence.len() + buckets.iter().map(Vec::len).sum::<usize>());
    for (idx, original) in sequence.frames.iter().enumerate() {
        frames.push(original.clone());
        for s in buckets[idx].drain(..) {
            frames.push(Frame {
                time: 0,
                label: s.label,
                utopia_label: None,
                features: s.features,
            });
        }
    }
    for (t, frame) in frames.iter_mut().enumerate() {
        frame.time = t as i64;
    }

    Ok((Sequence::new(sequence.id.clone(), frames), provenance))
}

fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    probs.len() - 1
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64]) -> f64 {
    let mu = mean(values);
    (values.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label_dist::{bin_labels, convolve, make_plan, DiscreteKernel};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn binning(min: f64, max: f64, b: usize) -> LabelBinning {
        LabelBinning::new(min, max, b).unwrap()
    }

    fn seq_from(labels: &[f64], features: Vec<Vec<f64>>) -> Sequence {
        let frames = labels
            .iter()
            .zip(features)
            .enumerate()
            .map(|(t, (&label, features))| Frame {
                time: t as i64,
                label,
                utopia_label: None,
                features,
            })
            .collect();
        Sequence::new("seq", frames)
    }

    #[test]
    fn segments_runs_of_matching_bins() {
        let b = binning(0.0, 10.0, 2);
        // bins: [0,5) and [5,10]; mask 1,1,0,1 against bin 0
        let set = segment_slices(&[1.0, 2.0, 9.0, 1.0], 0, &b, false).unwrap();
        assert_eq!(
            set.slices,
            vec![
                TimeSlice { start: 0, end: 2, bin: 0 },
                TimeSlice { start: 3, end: 4, bin: 0 }
            ]
        );
    }

    #[test]
    fn whole_sequence_is_one_slice() {
        let b = binning(0.0, 10.0, 2);
        let set = segment_slices(&[1.0, 2.0, 3.0], 0, &b, false).unwrap();
        assert_eq!(set.slices.len(), 1);
        assert_eq!(set.slices[0], TimeSlice { start: 0, end: 3, bin: 0 });
    }

    #[test]
    fn alternating_labels_give_unit_slices() {
        let b = binning(0.0, 10.0, 2);
        let labels = [1.0, 9.0, 1.0, 9.0, 1.0, 9.0];
        let set = segment_slices(&labels, 0, &b, false).unwrap();
        assert_eq!(set.slices.len(), 3);
        assert!(set.slices.iter().all(|s| s.len() == 1));
        // brute-force run scan agrees
        let mask: Vec<bool> = labels.iter().map(|&y| y < 5.0).collect();
        let mut runs = 0;
        for i in 0..mask.len() {
            if mask[i] && (i == 0 || !mask[i - 1]) {
                runs += 1;
            }
        }
        assert_eq!(runs, 3);
    }

    #[test]
    fn empty_bin_errors() {
        let b = binning(0.0, 10.0, 2);
        assert!(matches!(
            segment_slices(&[1.0, 2.0], 1, &b, false),
            Err(UldaError::NoFramesAtLabel { bin: 1 })
        ));
    }

    #[test]
    fn probabilities_are_length_proportional() {
        let set = SliceSet {
            bin: 0,
            slices: vec![
                TimeSlice { start: 0, end: 2, bin: 0 },
                TimeSlice { start: 5, end: 8, bin: 0 },
                TimeSlice { start: 10, end: 15, bin: 0 },
            ],
        };
        let probs = slice_probabilities(&set).unwrap();
        assert_eq!(probs, vec![2.0 / 10.0, 3.0 / 10.0, 5.0 / 10.0]);
        assert_relative_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-15);

        let single = SliceSet {
            bin: 0,
            slices: vec![TimeSlice { start: 0, end: 4, bin: 0 }],
        };
        assert_eq!(slice_probabilities(&single).unwrap(), vec![1.0]);
    }

    #[test]
    fn long_slice_is_not_extended() {
        let slice = TimeSlice { start: 4, end: 14, bin: 0 };
        assert_eq!(extend_slice(100, &slice, 10), (4, 14));
    }

    #[test]
    fn short_slice_extends_alternately() {
        let slice = TimeSlice { start: 5, end: 7, bin: 0 };
        assert_eq!(extend_slice(100, &slice, 6), (3, 9));
    }

    #[test]
    fn extension_compensates_at_boundaries() {
        let slice = TimeSlice { start: 0, end: 2, bin: 0 };
        assert_eq!(extend_slice(100, &slice, 6), (0, 6));
        let tail = TimeSlice { start: 98, end: 100, bin: 0 };
        assert_eq!(extend_slice(100, &tail, 6), (94, 100));
        // threshold larger than the sequence covers the whole sequence
        let slice = TimeSlice { start: 1, end: 2, bin: 0 };
        assert_eq!(extend_slice(4, &slice, 10), (0, 4));
    }

    #[test]
    fn equal_window_labels_weight_uniformly() {
        let c = contribution_weights(&[0.5, 0.5, 0.5, 0.5], &[0.5, 0.5], 0.01);
        for &w in &c {
            assert_relative_eq!(w, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn off_label_frames_contribute_less() {
        // direct density evaluation as an oracle
        let window = [0.0, 0.0, 1.0];
        let slice = [0.0, 0.0];
        let c = contribution_weights(&window, &slice, 0.01);
        let mu = 0.0;
        let sigma = population_std(&window);
        let dens: Vec<f64> = window
            .iter()
            .map(|&y| {
                (-0.5 * ((y - mu) / sigma).powi(2)).exp()
                    / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
            })
            .collect();
        let total: f64 = dens.iter().sum();
        for (got, want) in c.iter().zip(dens.iter().map(|d| d / total)) {
            assert_relative_eq!(got, &want, epsilon = 1e-12);
        }
        assert!(c[0] == c[1] && c[0] > c[2]);
        assert_relative_eq!(c.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_effective_sample_collapses_to_point() {
        let features: Vec<&[f64]> = vec![&[2.0, 3.0], &[9.0, 9.0], &[0.0, 0.0]];
        let normal = estimate_normal(&features, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(normal.mean.as_slice(), &[2.0, 3.0]);
        for row in 0..2 {
            for col in 0..2 {
                let expected = if row == col { normal.lambda } else { 0.0 };
                assert_relative_eq!(normal.covariance[(row, col)], expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn two_point_normal_matches_hand_evaluation() {
        let features: Vec<&[f64]> = vec![&[0.0], &[2.0]];
        let normal = estimate_normal(&features, &[0.5, 0.5]).unwrap();
        assert_relative_eq!(normal.mean[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(normal.covariance[(0, 0)], 1.0 + normal.lambda, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let features: Vec<&[f64]> = vec![&[0.0, 1.0], &[2.0]];
        assert!(matches!(
            estimate_normal(&features, &[0.5, 0.5]),
            Err(UldaError::DimensionMismatch { .. })
        ));
    }

    /// Brute-force weighted mean/covariance, written as plain double loops.
    fn normal_oracle(features: &[Vec<f64>], weights: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = features[0].len();
        let mut mean = vec![0.0; d];
        for k in 0..d {
            for (f, &c) in features.iter().zip(weights) {
                mean[k] += c * f[k];
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for r in 0..d {
            for s in 0..d {
                for (f, &c) in features.iter().zip(weights) {
                    cov[r][s] += c * (f[r] - mean[r]) * (f[s] - mean[s]);
                }
            }
        }
        (mean, cov)
    }

    #[test]
    fn estimate_normal_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let d = rng.random_range(1..=3);
            let n = rng.random_range(d.max(2)..=10);
            let features: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.into_iter().map(|w| w / total).collect();
            let refs: Vec<&[f64]> = features.iter().map(|f| f.as_slice()).collect();
            let normal = estimate_normal(&refs, &weights).unwrap();
            let (mean, cov) = normal_oracle(&features, &weights);
            for k in 0..d {
                assert_relative_eq!(normal.mean[k], mean[k], epsilon = 1e-10);
            }
            for r in 0..d {
                for s in 0..d {
                    let got = normal.covariance[(r, s)] - if r == s { normal.lambda } else { 0.0 };
                    assert_relative_eq!(got, cov[r][s], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn sampling_zero_count_is_empty() {
        let features: Vec<&[f64]> = vec![&[0.0], &[2.0]];
        let normal = estimate_normal(&features, &[0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_features(&normal, 0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn degenerate_covariance_draws_stay_at_mean() {
        let features: Vec<&[f64]> = vec![&[3.0, -1.0]; 4];
        let weights = [0.25; 4];
        let normal = estimate_normal(&features, &weights).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for draw in sample_features(&normal, 100, &mut rng).unwrap() {
            assert!((draw[0] - 3.0).abs() < 3.0 * normal.lambda.sqrt() * 2.0);
            assert!((draw[1] + 1.0).abs() < 3.0 * normal.lambda.sqrt() * 2.0);
        }
    }

    #[test]
    fn nearest_original_is_matched() {
        let seq = seq_from(
            &[0.1, 0.9],
            vec![vec![0.0], vec![10.0]],
        );
        let slice = TimeSlice { start: 0, end: 2, bin: 0 };
        let frames = assign_and_insert(&seq, vec![vec![1.0]], &slice);
        assert_eq!(frames[0].matched_frame, 0);
        assert_eq!(frames[0].label, 0.1);
        assert_eq!(frames[0].insert_position, 1);
    }

    #[test]
    fn exact_feature_match_copies_label() {
        let seq = seq_from(&[0.3, 0.7], vec![vec![1.0, 2.0], vec![5.0, 5.0]]);
        let slice = TimeSlice { start: 0, end: 2, bin: 0 };
        let frames = assign_and_insert(&seq, vec![vec![5.0, 5.0]], &slice);
        assert_eq!(frames[0].matched_frame, 1);
        assert_eq!(frames[0].label, 0.7);
    }

    #[test]
    fn ties_break_to_earlier_frame() {
        let seq = seq_from(&[0.2, 0.8], vec![vec![0.0], vec![2.0]]);
        let slice = TimeSlice { start: 0, end: 2, bin: 0 };
        let frames = assign_and_insert(&seq, vec![vec![1.0]], &slice);
        assert_eq!(frames[0].matched_frame, 0);
    }

    fn demo_sequence(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Sequence {
        let labels: Vec<f64> = (0..len).map(|_| rng.random_range(0.0f64..1.0)).collect();
        let features = (0..len)
            .map(|i| (0..dim).map(|k| labels[i] + 0.1 * k as f64 + rng.random_range(-0.05..0.05)).collect())
            .collect();
        seq_from(&labels, features)
    }

    #[test]
    fn plan_without_oversampling_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq = demo_sequence(&mut rng, 30, 2);
        let b = binning(0.0, 1.0, 5);
        let hist = bin_labels(&seq.labels(), &b, false).unwrap();
        let plan = make_plan(&hist, &hist).unwrap();
        let params = TnsParams { slice_threshold: 10, clamp_labels: false, seed: 9, stream: 0 };
        let (augmented, provenance) = augment_sequence(&seq, &plan, &params).unwrap();
        assert_eq!(augmented, seq);
        assert!(provenance.is_empty());
    }

    #[test]
    fn forced_allocation_lands_in_the_single_slice() {
        // all labels share one bin: one slice spans the sequence
        let labels = vec![0.1; 8];
        let features: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let seq = seq_from(&labels, features);
        let b = binning(0.0, 1.0, 5);
        let before = bin_labels(&seq.labels(), &b, false).unwrap();
        let mut counts = before.counts().to_vec();
        counts[0] += 2.0;
        let after = crate::label_dist::LabelHistogram::new(b, counts).unwrap();
        let plan = make_plan(&before, &after).unwrap();
        let params = TnsParams { slice_threshold: 4, clamp_labels: false, seed: 5, stream: 0 };
        let (augmented, provenance) = augment_sequence(&seq, &plan, &params).unwrap();
        assert_eq!(augmented.len(), 10);
        assert_eq!(provenance.len(), 2);
        assert!(provenance.iter().all(|p| p.bin == 0 && p.insert_position <= 8));
        // times renumbered sequentially
        assert!(augmented.frames.iter().enumerate().all(|(t, f)| f.time == t as i64));
    }

    #[test]
    fn same_seed_reproduces_augmentation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let seq = demo_sequence(&mut rng, 60, 3);
        let b = binning(0.0, 1.0, 10);
        let hist = bin_labels(&seq.labels(), &b, false).unwrap();
        let kernel = DiscreteKernel::build(0.3, 0.1, b.bin_width()).unwrap();
        let conv = convolve(&hist, &kernel).unwrap();
        let plan = make_plan(&hist, &conv).unwrap().restricted_to_support();
        let params = TnsParams { slice_threshold: 10, clamp_labels: false, seed: 77, stream: 3 };
        let (a1, p1) = augment_sequence(&seq, &plan, &params).unwrap();
        let (a2, p2) = augment_sequence(&seq, &plan, &params).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(p1, p2);
        assert_eq!(a1.len(), seq.len() + plan.total_oversample());
    }

    #[test]
    fn oversampling_an_empty_bin_is_a_plan_mismatch() {
        let labels = vec![0.1; 6];
        let features: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let seq = seq_from(&labels, features);
        let b = binning(0.0, 1.0, 5);
        let before = bin_labels(&seq.labels(), &b, false).unwrap();
        let mut counts = before.counts().to_vec();
        counts[4] += 1.0; // demand a sample where the sequence has no frames
        let after = crate::label_dist::LabelHistogram::new(b, counts).unwrap();
        let plan = make_plan(&before, &after).unwrap();
        let params = TnsParams { slice_threshold: 4, clamp_labels: false, seed: 5, stream: 0 };
        assert!(matches!(
            augment_sequence(&seq, &plan, &params),
            Err(UldaError::PlanMismatch { bin: 4 })
        ));
    }

    proptest! {
        #[test]
        fn contribution_weights_sum_to_one_and_peak_at_mean(
            window in proptest::collection::vec(-1.0f64..1.0, 2..12),
            take in 1usize..4,
        ) {
            let slice: Vec<f64> = window.iter().take(take.min(window.len())).cloned().collect();
            let c = contribution_weights(&window, &slice, 0.01);
            prop_assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mu = mean(&slice);
            // weights non-increasing in |y - mu|
            let mut order: Vec<usize> = (0..window.len()).collect();
            order.sort_by(|&a, &b| {
                (window[a] - mu).abs().partial_cmp(&(window[b] - mu).abs()).unwrap()
            });
            for pair in order.windows(2) {
                prop_assert!(c[pair[0]] >= c[pair[1]] - 1e-12);
            }
        }

        #[test]
        fn covariance_is_symmetric_and_factorable(
            n in 2usize..8,
            d in 1usize..4,
            seed in 0u64..500,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let features: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.into_iter().map(|w| w / total).collect();
            let refs: Vec<&[f64]> = features.iter().map(|f| f.as_slice()).collect();
            let normal = estimate_normal(&refs, &weights).unwrap();
            for r in 0..d {
                for s in 0..d {
                    prop_assert!((normal.covariance[(r, s)] - normal.covariance[(s, r)]).abs() < 1e-12);
                }
            }
            prop_assert!(Cholesky::new(normal.covariance.clone()).is_some());
        }
    }
}
