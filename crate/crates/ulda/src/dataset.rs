//! Core data model: frames, sequences, and datasets.
//!
//! A dataset is a collection of sequences; every operation in this crate that
//! touches labels or features works on one sequence at a time.

use crate::error::{Result, UldaError};

/// One timestep of a sequence: a time index, a continuous label, an optional
/// utopia (ground-truth) label, and a feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub time: i64,
    pub label: f64,
    pub utopia_label: Option<f64>,
    pub features: Vec<f64>,
}

/// An ordered run of frames sharing one timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub id: String,
    pub frames: Vec<Frame>,
}

impl Sequence {
    pub fn new(id: impl Into<String>, frames: Vec<Frame>) -> Self {
        Sequence {
            id: id.into(),
            frames,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.label).collect()
    }

    pub fn utopia_labels(&self) -> Option<Vec<f64>> {
        self.frames.iter().map(|f| f.utopia_label).collect()
    }

    /// Feature dimension of the first frame, or 0 for an empty sequence.
    pub fn feature_dim(&self) -> usize {
        self.frames.first().map_or(0, |f| f.features.len())
    }

    /// Checks that every frame has `dim` features.
    pub fn check_feature_dim(&self, dim: usize) -> Result<()> {
        for frame in &self.frames {
            if frame.features.len() != dim {
                return Err(UldaError::DimensionMismatch {
                    expected: dim,
                    actual: frame.features.len(),
                });
            }
        }
        Ok(())
    }
}

/// A corpus of sequences with a declared feature dimension and label range.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub feature_dim: usize,
    pub label_min: f64,
    pub label_max: f64,
    pub sequences: Vec<Sequence>,
}

impl SequenceDataset {
    pub fn frame_count(&self) -> usize {
        self.sequences.iter().map(Sequence::len).sum()
    }
}
