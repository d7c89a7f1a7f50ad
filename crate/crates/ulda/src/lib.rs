//! Utopia label distribution approximation for subjective time-series
//! regression datasets.
//!
//! Subjectively annotated time-series corpora carry labels averaged over a
//! handful of annotators, which biases the label distribution relative to the
//! real-world one. This crate approximates the unbiased ("utopia")
//! distribution by convolving per-sequence label histograms with a Gaussian
//! kernel, then reconciles the data to it two ways: time-slice normal
//! sampling (`tns`) draws new feature-space samples where the convolved
//! distribution demands more mass, and convolution-weighted loss tables
//! (`cwl`) down-weight frames where it demands less. A synthetic-annotator
//! simulator (`sim`) and an experiment harness (`harness`) verify the
//! mechanism end to end, and `io`/`svg` provide the CSV/JSON/SVG surface used
//! by the `ulda` binary.

pub mod cwl;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod io;
pub mod label_dist;
pub mod rng;
pub mod sim;
pub mod svg;
pub mod tns;

pub use dataset::{Frame, Sequence, SequenceDataset};
pub use error::{Result, UldaError};
pub use label_dist::{
    bin_labels, convolve, make_plan, AugmentationPlan, DiscreteKernel, LabelBinning,
    LabelHistogram,
};
