//! Convolution-weighted loss tables and the ablation weighting schemes.
//!
//! Every scheme produces one weight per frame, normalized so the weights of a
//! sequence sum to its frame count. With that normalization a table of all
//! ones is the uniform (unweighted) baseline.

use serde::{Deserialize, Serialize};

use crate::dataset::Sequence;
use crate::error::{Result, UldaError};
use crate::label_dist::{convolve, DiscreteKernel, LabelHistogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Cwl,
    Inv,
    Lds,
    Dense,
    Uniform,
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Cwl => "cwl",
            WeightScheme::Inv => "inv",
            WeightScheme::Lds => "lds",
            WeightScheme::Dense => "dense",
            WeightScheme::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = UldaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cwl" => Ok(WeightScheme::Cwl),
            "inv" => Ok(WeightScheme::Inv),
            "lds" => Ok(WeightScheme::Lds),
            "dense" => Ok(WeightScheme::Dense),
            "uniform" => Ok(WeightScheme::Uniform),
            other => Err(UldaError::InvalidParameter(format!(
                "unknown weighting scheme '{other}'"
            ))),
        }
    }
}

/// Per-frame loss weights for one sequence, summing to the frame count.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub sequence_id: String,
    pub scheme: WeightScheme,
    pub weights: Vec<f64>,
}

impl WeightTable {
    pub fn uniform(sequence: &Sequence) -> WeightTable {
        WeightTable {
            sequence_id: sequence.id.clone(),
            scheme: WeightScheme::Uniform,
            weights: vec![1.0; sequence.len()],
        }
    }
}

/// Scales raw weights so they sum to the frame count.
fn normalize(
    sequence: &Sequence,
    scheme: WeightScheme,
    raw: Vec<f64>,
) -> Result<WeightTable> {
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(UldaError::DegenerateWeights(format!(
            "{} weights sum to {total}; nothing to normalize",
            scheme.name()
        )));
    }
    let m = raw.len() as f64;
    Ok(WeightTable {
        sequence_id: sequence.id.clone(),
        scheme,
        weights: raw.into_iter().map(|w| w * m / total).collect(),
    })
}

fn frame_bins(sequence: &Sequence, hist: &LabelHistogram, clamp: bool) -> Result<Vec<usize>> {
    sequence
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| hist.binning().frame_bin(i, f.label, clamp))
        .collect()
}

/// Eq.-7 weights: the post/pre-convolution count ratio at each frame's label,
/// normalized over the sequence.
pub fn compute_cwl_weights(
    before: &LabelHistogram,
    after: &LabelHistogram,
    sequence: &Sequence,
    clamp: bool,
) -> Result<WeightTable> {
    if before.binning() != after.binning() {
        return Err(UldaError::BinningMismatch);
    }
    let raw = frame_bins(sequence, before, clamp)?
        .into_iter()
        .map(|bin| {
            let n = before.counts()[bin];
            if n <= 0.0 {
                return Err(UldaError::DegenerateWeights(format!(
                    "histogram/sequence mismatch: frame label lands in empty bin {bin}"
                )));
            }
            Ok(after.counts()[bin] / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    normalize(sequence, WeightScheme::Cwl, raw)
}

/// Inverse-frequency weights: 1 / n at each frame's label bin.
pub fn compute_inv_weights(
    before: &LabelHistogram,
    sequence: &Sequence,
    clamp: bool,
) -> Result<WeightTable> {
    let raw = frame_bins(sequence, before, clamp)?
        .into_iter()
        .map(|bin| {
            let n = before.counts()[bin];
            if n <= 0.0 {
                return Err(UldaError::DegenerateWeights(format!(
                    "histogram/sequence mismatch: frame label lands in empty bin {bin}"
                )));
            }
            Ok(1.0 / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    normalize(sequence, WeightScheme::Inv, raw)
}

/// Label-distribution-smoothing weights: inverse frequency over the
/// kernel-smoothed histogram.
pub fn compute_lds_weights(
    before: &LabelHistogram,
    kernel: &DiscreteKernel,
    sequence: &Sequence,
    clamp: bool,
) -> Result<WeightTable> {
    let smoothed = convolve(before, kernel)?;
    let table = compute_inv_weights(&smoothed, sequence, clamp)?;
    Ok(WeightTable {
        scheme: WeightScheme::Lds,
        ..table
    })
}

/// Dense weights: additive inverse of the smoothed label density, floored at
/// zero.
pub fn compute_dense_weights(
    before: &LabelHistogram,
    kernel: &DiscreteKernel,
    sequence: &Sequence,
    clamp: bool,
) -> Result<WeightTable> {
    let smoothed = convolve(before, kernel)?;
    let total = smoothed.total_mass();
    if !(total > 0.0) {
        return Err(UldaError::DegenerateWeights(
            "smoothed histogram carries no mass".into(),
        ));
    }
    let raw = frame_bins(sequence, &smoothed, clamp)?
        .into_iter()
        .map(|bin| (1.0 - smoothed.counts()[bin] / total).max(0.0))
        .collect();
    normalize(sequence, WeightScheme::Dense, raw)
}

/// Eq.-8 loss: mean of weighted squared errors.
pub fn weighted_loss(predictions: &[f64], labels: &[f64], table: &WeightTable) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(UldaError::LengthMismatch {
            context: "predictions vs labels",
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    if table.weights.len() != labels.len() {
        return Err(UldaError::LengthMismatch {
            context: "weights vs labels",
            expected: labels.len(),
            actual: table.weights.len(),
        });
    }
    if labels.is_empty() {
        return Err(UldaError::EmptySequence);
    }
    let m = labels.len() as f64;
    Ok(labels
        .iter()
        .zip(predictions)
        .zip(&table.weights)
        .map(|((&y, &y_hat), &w)| w * (y - y_hat) * (y - y_hat))
        .sum::<f64>()
        / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Frame;
    use crate::label_dist::{bin_labels, LabelBinning};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn seq_with_labels(labels: &[f64]) -> Sequence {
        let frames = labels
            .iter()
            .enumerate()
            .map(|(t, &label)| Frame {
                time: t as i64,
                label,
                utopia_label: None,
                features: vec![label],
            })
            .collect();
        Sequence::new("seq", frames)
    }

    fn binning(min: f64, max: f64, b: usize) -> LabelBinning {
        LabelBinning::new(min, max, b).unwrap()
    }

    #[test]
    fn identity_convolution_gives_unit_weights() {
        let seq = seq_with_labels(&[0.1, 0.4, 0.4, 0.9]);
        let b = binning(0.0, 1.0, 4);
        let hist = bin_labels(&seq.labels(), &b, false).unwrap();
        let table = compute_cwl_weights(&hist, &hist, &seq, false).unwrap();
        for &w in &table.weights {
            assert_eq!(w, 1.0);
        }
    }

    #[test]
    fn ratio_weights_match_hand_evaluation() {
        // two frames in distinct bins with ratios [2, 0.5] -> weights [1.6, 0.4]
        let seq = seq_with_labels(&[0.1, 0.9]);
        let b = binning(0.0, 1.0, 2);
        let before = bin_labels(&seq.labels(), &b, false).unwrap();
        let after =
            LabelHistogram::new(b, vec![2.0, 0.5]).unwrap();
        let table = compute_cwl_weights(&before, &after, &seq, false).unwrap();
        assert_relative_eq!(table.weights[0], 1.6, epsilon = 1e-12);
        assert_relative_eq!(table.weights[1], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn weighted_loss_reduces_to_mse_with_unit_weights() {
        let seq = seq_with_labels(&[0.0, 1.0]);
        let table = WeightTable::uniform(&seq);
        let loss = weighted_loss(&[0.0, 0.0], &[0.0, 1.0], &table).unwrap();
        assert_relative_eq!(loss, 0.5, epsilon = 1e-15);
        let zero = weighted_loss(&[0.0, 1.0], &[0.0, 1.0], &table).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn weighted_loss_matches_hand_evaluation() {
        let table = WeightTable {
            sequence_id: "seq".into(),
            scheme: WeightScheme::Cwl,
            weights: vec![1.6, 0.4],
        };
        let loss = weighted_loss(&[0.0, 0.0], &[0.0, 1.0], &table).unwrap();
        assert_relative_eq!(loss, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn weighted_loss_rejects_length_mismatch() {
        let seq = seq_with_labels(&[0.0, 1.0]);
        let table = WeightTable::uniform(&seq);
        assert!(weighted_loss(&[0.0], &[0.0, 1.0], &table).is_err());
    }

    #[test]
    fn inv_weights_are_unit_on_uniform_histogram() {
        let seq = seq_with_labels(&[0.1, 0.6]);
        let b = binning(0.0, 1.0, 2);
        let hist = bin_labels(&seq.labels(), &b, false).unwrap();
        let table = compute_inv_weights(&hist, &seq, false).unwrap();
        assert_eq!(table.weights, vec![1.0, 1.0]);
    }

    #[test]
    fn inv_weights_favor_rare_bins() {
        // counts [1, 3]: the rare-bin frame gets 3x the common-bin frame
        let seq = seq_with_labels(&[0.1, 0.6, 0.7, 0.8]);
        let b = binning(0.0, 1.0, 2);
        let hist = bin_labels(&seq.labels(), &b, false).unwrap();
        let table = compute_inv_weights(&hist, &seq, false).unwrap();
        assert_relative_eq!(table.weights[0] / table.weights[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(table.weights.iter().sum::<f64>(), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn lds_with_identity_kernel_equals_inv() {
        let seq = seq_with_labels(&[0.1, 0.6, 0.7]);
        let b = binning(0.0, 1.0, 2);
        let hist = bin_labels(&seq.labels(), &b, false).unwrap();
        let identity = DiscreteKernel::build(b.bin_width(), 0.1, b.bin_width()).unwrap();
        let lds = compute_lds_weights(&hist, &identity, &seq, false).unwrap();
        let inv = compute_inv_weights(&hist, &seq, false).unwrap();
        assert_eq!(lds.weights, inv.weights);
        assert_eq!(lds.scheme, WeightScheme::Lds);
    }

    #[test]
    fn lds_smoothing_shifts_weight_toward_the_spike() {
        // counts [0,4,0] smoothed by [0.25,0.5,0.25] -> [1,2,1]; spike frames
        // weigh 1/2 instead of 1/4, i.e. more than plain INV gives them
        let labels = [0.5, 0.5, 0.5, 0.5];
        let seq = seq_with_labels(&labels);
        let b = binning(0.0, 1.0, 3);
        let hist = bin_labels(&seq.labels(), &b, false).unwrap();
        assert_eq!(hist.counts(), &[0.0, 4.0, 0.0]);
        let kernel = DiscreteKernel::build(
            2.2 * b.bin_width(),
            0.8493218002880191 * b.bin_width(),
            b.bin_width(),
        )
        .unwrap();
        let lds = compute_lds_weights(&hist, &kernel, &seq, false).unwrap();
        let inv = compute_inv_weights(&hist, &seq, false).unwrap();
        // all frames share one bin so both normalize to 1, but the raw ratio
        // differs: check against the smoothed count directly
        let smoothed = convolve(&hist, &kernel).unwrap();
        assert_relative_eq!(smoothed.counts()[1], 2.0, epsilon = 1e-12);
        assert_eq!(lds.weights, inv.weights);
        assert_relative_eq!(lds.weights.iter().sum::<f64>(), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn dense_weights_match_hand_normalization() {
        // densities [0.8, 0.2] with one frame each -> weights [0.4, 1.6]
        let seq = seq_with_labels(&[0.1, 0.9]);
        let b = binning(0.0, 1.0, 2);
        let before = LabelHistogram::new(b, vec![8.0, 2.0]).unwrap();
        let identity = DiscreteKernel::build(b.bin_width(), 0.1, b.bin_width()).unwrap();
        let table = compute_dense_weights(&before, &identity, &seq, false).unwrap();
        assert_relative_eq!(table.weights[0], 0.4, epsilon = 1e-12);
        assert_relative_eq!(table.weights[1], 1.6, epsilon = 1e-12);
    }

    #[test]
    fn dense_weights_are_unit_on_uniform_density() {
        let seq = seq_with_labels(&[0.1, 0.9]);
        let b = binning(0.0, 1.0, 2);
        let before = LabelHistogram::new(b, vec![5.0, 5.0]).unwrap();
        let identity = DiscreteKernel::build(b.bin_width(), 0.1, b.bin_width()).unwrap();
        let table = compute_dense_weights(&before, &identity, &seq, false).unwrap();
        assert_eq!(table.weights, vec![1.0, 1.0]);
    }

    #[test]
    fn all_mass_in_one_bin_degenerates_dense_weights() {
        let seq = seq_with_labels(&[0.5, 0.5]);
        let b = binning(0.0, 1.0, 3);
        let hist = bin_labels(&seq.labels(), &b, false).unwrap();
        let identity = DiscreteKernel::build(b.bin_width(), 0.1, b.bin_width()).unwrap();
        assert!(matches!(
            compute_dense_weights(&hist, &identity, &seq, false),
            Err(UldaError::DegenerateWeights(_))
        ));
    }

    proptest! {
        #[test]
        fn every_scheme_normalizes_to_frame_count(
            labels in proptest::collection::vec(0.0f64..1.0, 2..40),
            bins in 2usize..12,
        ) {
            let seq = seq_with_labels(&labels);
            let b = binning(0.0, 1.0, bins);
            let hist = bin_labels(&seq.labels(), &b, false).unwrap();
            let kernel = DiscreteKernel::build(3.0 * b.bin_width(), b.bin_width(), b.bin_width()).unwrap();
            prop_assume!(2 * kernel.radius() + 1 <= bins as i64);
            let conv = convolve(&hist, &kernel).unwrap();
            let m = labels.len() as f64;
            let tables = [
                compute_cwl_weights(&hist, &conv, &seq, false).unwrap(),
                compute_inv_weights(&hist, &seq, false).unwrap(),
                compute_lds_weights(&hist, &kernel, &seq, false).unwrap(),
            ];
            for table in tables {
                prop_assert!((table.weights.iter().sum::<f64>() - m).abs() < 1e-9);
                prop_assert!(table.weights.iter().all(|&w| w >= 0.0 && w.is_finite()));
            }
        }

        #[test]
        fn cwl_weights_are_scale_invariant(
            labels in proptest::collection::vec(0.0f64..1.0, 2..30),
            scale in 0.5f64..20.0,
        ) {
            let seq = seq_with_labels(&labels);
            let b = binning(0.0, 1.0, 5);
            let hist = bin_labels(&seq.labels(), &b, false).unwrap();
            let kernel = DiscreteKernel::build(3.0 * b.bin_width(), b.bin_width(), b.bin_width()).unwrap();
            let conv = convolve(&hist, &kernel).unwrap();
            let base = compute_cwl_weights(&hist, &conv, &seq, false).unwrap();
            let scaled_before = LabelHistogram::new(*hist.binning(),
                hist.counts().iter().map(|&c| c * scale).collect()).unwrap();
            let scaled_after = LabelHistogram::new(*conv.binning(),
                conv.counts().iter().map(|&c| c * scale).collect()).unwrap();
            let scaled = compute_cwl_weights(&scaled_before, &scaled_after, &seq, false).unwrap();
            for (a, b) in base.weights.iter().zip(&scaled.weights) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn uniform_weighted_loss_is_mse(
            pairs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..50),
        ) {
            let labels: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let preds: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let seq = seq_with_labels(&labels);
            let table = WeightTable::uniform(&seq);
            let loss = weighted_loss(&preds, &labels, &table).unwrap();
            let mse = labels.iter().zip(&preds).map(|(y, p)| (y - p) * (y - p)).sum::<f64>()
                / labels.len() as f64;
            prop_assert!((loss - mse).abs() < 1e-12);
        }
    }

    #[test]
    fn higher_target_count_gives_higher_weight() {
        // two frames with equal before-counts; the one whose bin gained mass
        // must weigh more
        let seq = seq_with_labels(&[0.1, 0.9]);
        let b = binning(0.0, 1.0, 2);
        let before = LabelHistogram::new(b, vec![3.0, 3.0]).unwrap();
        let after = LabelHistogram::new(b, vec![4.0, 2.0]).unwrap();
        let table = compute_cwl_weights(&before, &after, &seq, false).unwrap();
        assert!(table.weights[0] > table.weights[1]);
    }
}
