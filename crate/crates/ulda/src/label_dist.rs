//! Label histograms, discretized Gaussian kernels, and the convolution that
//! approximates the utopia label distribution.
//!
//! Labels are discretized into `bin_count` equal-width, left-closed bins over
//! a declared range; the top edge folds into the last bin. Convolution
//! distributes each bin's mass over its neighbours with a symmetric Gaussian
//! kernel, renormalizing the kernel mass that falls inside the histogram at
//! the boundaries so the total mass is conserved.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UldaError};

/// Equal-width discretization of a continuous label range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBinning {
    label_min: f64,
    label_max: f64,
    bin_count: usize,
}

impl LabelBinning {
    pub fn new(label_min: f64, label_max: f64, bin_count: usize) -> Result<Self> {
        if !(label_min < label_max) {
            return Err(UldaError::InvalidBinning(format!(
                "label_min {label_min} must be < label_max {label_max}"
            )));
        }
        if bin_count < 2 {
            return Err(UldaError::InvalidBinning(format!(
                "bin_count {bin_count} must be >= 2"
            )));
        }
        Ok(LabelBinning {
            label_min,
            label_max,
            bin_count,
        })
    }

    pub fn label_min(&self) -> f64 {
        self.label_min
    }

    pub fn label_max(&self) -> f64 {
        self.label_max
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn bin_width(&self) -> f64 {
        (self.label_max - self.label_min) / self.bin_count as f64
    }

    /// Bin index of an in-range label; `None` if the label lies outside the range.
    pub fn bin_of(&self, label: f64) -> Option<usize> {
        if !label.is_finite() || label < self.label_min || label > self.label_max {
            return None;
        }
        let raw = ((label - self.label_min) / self.bin_width()).floor() as i64;
        // label == label_max (and any fp overshoot of it) folds into the last bin
        Some((raw.max(0) as usize).min(self.bin_count - 1))
    }

    /// Bin index after clamping the label into the declared range.
    pub fn bin_of_clamped(&self, label: f64) -> usize {
        self.bin_of(label.clamp(self.label_min, self.label_max))
            .expect("clamped label is in range")
    }

    /// Center of a bin, in label units.
    pub fn bin_center(&self, bin: usize) -> f64 {
        self.label_min + (bin as f64 + 0.5) * self.bin_width()
    }

    /// Bin index of a frame's label, honoring the clamp flag. With clamping
    /// disabled, an out-of-range label is an error identifying the frame.
    pub fn frame_bin(&self, frame: usize, label: f64, clamp: bool) -> Result<usize> {
        if clamp {
            return Ok(self.bin_of_clamped(label));
        }
        self.bin_of(label).ok_or(UldaError::LabelOutOfRange {
            frame,
            label,
            min: self.label_min,
            max: self.label_max,
        })
    }
}

/// Per-sequence binned label counts. Counts are real-valued so the same type
/// holds both raw tallies and convolved (fractional) masses.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelHistogram {
    binning: LabelBinning,
    counts: Vec<f64>,
}

impl LabelHistogram {
    pub fn new(binning: LabelBinning, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != binning.bin_count() {
            return Err(UldaError::LengthMismatch {
                context: "histogram counts vs bin count",
                expected: binning.bin_count(),
                actual: counts.len(),
            });
        }
        if counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(UldaError::InvalidParameter(
                "histogram counts must be finite and non-negative".into(),
            ));
        }
        Ok(LabelHistogram { binning, counts })
    }

    pub fn binning(&self) -> &LabelBinning {
        &self.binning
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total_mass(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Symmetric discretized Gaussian kernel over bin offsets.
///
/// The support covers every offset `j` with `|j * bin_width| <= kernel_size/2`;
/// weights are proportional to the Gaussian density at the offset and
/// normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    kernel_size: f64,
    sigma: f64,
    offsets: Vec<i64>,
    weights: Vec<f64>,
}

impl DiscreteKernel {
    pub fn build(kernel_size: f64, sigma: f64, bin_width: f64) -> Result<Self> {
        if !(kernel_size > 0.0) || !(sigma > 0.0) || !(bin_width > 0.0) {
            return Err(UldaError::InvalidParameter(format!(
                "kernel_size {kernel_size}, sigma {sigma}, and bin_width {bin_width} must all be > 0"
            )));
        }
        if kernel_size < bin_width {
            return Err(UldaError::KernelNarrowerThanBin {
                kernel_size,
                bin_width,
            });
        }
        // small epsilon keeps offsets at exactly kernel_size/2 inside the support
        let radius = (kernel_size / (2.0 * bin_width) + 1e-9).floor() as i64;
        let offsets: Vec<i64> = (-radius..=radius).collect();
        let mut weights: Vec<f64> = offsets
            .iter()
            .map(|&j| {
                let x = j as f64 * bin_width;
                (-x * x / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(DiscreteKernel {
            kernel_size,
            sigma,
            offsets,
            weights,
        })
    }

    pub fn kernel_size(&self) -> f64 {
        self.kernel_size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Half-width of the support, in bins.
    pub fn radius(&self) -> i64 {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_identity(&self) -> bool {
        self.offsets.len() == 1
    }
}

/// Bins a sequence's labels into a per-sequence histogram.
pub fn bin_labels(labels: &[f64], binning: &LabelBinning, clamp: bool) -> Result<LabelHistogram> {
    if labels.is_empty() {
        return Err(UldaError::EmptySequence);
    }
    let mut counts = vec![0.0; binning.bin_count()];
    for (i, &label) in labels.iter().enumerate() {
        counts[binning.frame_bin(i, label, clamp)?] += 1.0;
    }
    LabelHistogram::new(*binning, counts)
}

/// Convolves a histogram with a kernel, distributing each bin's mass over its
/// neighbours. Kernel mass that would fall outside the histogram is folded
/// back by renormalizing over the in-range offsets, so total mass is conserved.
pub fn convolve(hist: &LabelHistogram, kernel: &DiscreteKernel) -> Result<LabelHistogram> {
    let bins = hist.binning().bin_count() as i64;
    if kernel.offsets().len() as i64 > bins {
        return Err(UldaError::InvalidParameter(format!(
            "kernel support ({} offsets) exceeds histogram length ({bins})",
            kernel.offsets().len()
        )));
    }
    let radius = kernel.radius();
    let mut out = vec![0.0; bins as usize];
    for (src, &mass) in hist.counts().iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let src = src as i64;
        let interior = src - radius >= 0 && src + radius < bins;
        let inside_mass = if interior {
            1.0
        } else {
            kernel
                .offsets()
                .iter()
                .zip(kernel.weights())
                .filter(|(&j, _)| (0..bins).contains(&(src + j)))
                .map(|(_, &w)| w)
                .sum()
        };
        for (&j, &w) in kernel.offsets().iter().zip(kernel.weights()) {
            let dst = src + j;
            if (0..bins).contains(&dst) {
                out[dst as usize] += mass * w / inside_mass;
            }
        }
    }
    LabelHistogram::new(*hist.binning(), out)
}

/// One bin of an augmentation plan: how the convolution changed its mass and
/// what that implies for sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub bin: usize,
    pub n_before: f64,
    pub n_after: f64,
    pub delta: f64,
    /// Whole new samples demanded at this bin: round-half-up of a positive delta.
    pub oversample_count: usize,
    pub undersample: bool,
}

/// Per-bin oversample/undersample plan derived from a pre/post-convolution
/// histogram pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationPlan {
    binning: LabelBinning,
    records: Vec<PlanRecord>,
}

impl AugmentationPlan {
    pub fn binning(&self) -> &LabelBinning {
        &self.binning
    }

    pub fn records(&self) -> &[PlanRecord] {
        &self.records
    }

    /// Total number of new samples the plan demands.
    pub fn total_oversample(&self) -> usize {
        self.records.iter().map(|r| r.oversample_count).sum()
    }

    /// Copy of the plan with oversampling cleared at bins that held no
    /// original mass. Convolution spills mass into empty neighbour bins, but
    /// slice sampling can only draw new samples where original frames exist;
    /// pipelines apply this before augmenting.
    pub fn restricted_to_support(&self) -> AugmentationPlan {
        let records = self
            .records
            .iter()
            .map(|r| PlanRecord {
                oversample_count: if r.n_before > 0.0 {
                    r.oversample_count
                } else {
                    0
                },
                ..r.clone()
            })
            .collect();
        AugmentationPlan {
            binning: self.binning,
            records,
        }
    }
}

/// Diffs a pre/post-convolution histogram pair into a per-bin plan.
pub fn make_plan(before: &LabelHistogram, after: &LabelHistogram) -> Result<AugmentationPlan> {
    if before.binning() != after.binning() {
        return Err(UldaError::BinningMismatch);
    }
    let records = before
        .counts()
        .iter()
        .zip(after.counts())
        .enumerate()
        .map(|(bin, (&n_before, &n_after))| {
            let delta = n_after - n_before;
            PlanRecord {
                bin,
                n_before,
                n_after,
                delta,
                oversample_count: if delta > 0.0 { delta.round() as usize } else { 0 },
                undersample: delta < 0.0,
            }
        })
        .collect();
    Ok(AugmentationPlan {
        binning: *before.binning(),
        records,
    })
}
