//! Dataset file formats, run configuration, and report emission.
//!
//! A corpus on disk is a `manifest.json` declaring the feature dimension and
//! label range plus one header-bearing CSV per sequence with columns
//! `t,label[,utopia_label],f0..f{d-1}`. All writes go through a
//! write-temp-then-rename helper so partially written files never appear
//! under the final name.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cwl::WeightScheme;
use crate::dataset::{Frame, Sequence, SequenceDataset};
use crate::error::{Result, UldaError};
use crate::harness::RegressorKind;
use crate::label_dist::{AugmentationPlan, LabelHistogram};
use crate::tns::ProvenanceRecord;

/// Corpus manifest: feature dimension, label range, and sequence files
/// (paths relative to the manifest's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub feature_dim: usize,
    pub label_min: f64,
    pub label_max: f64,
    pub sequences: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
}

/// CLI-facing pipeline configuration. Defaults follow the continuous
/// [-1, 1] label setup: 100 bins, kernel size 0.06, kernel sigma 0.02,
/// slice threshold 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub bins: usize,
    pub kernel_size: f64,
    pub kernel_sigma: f64,
    pub slice_threshold: usize,
    pub seed: u64,
    /// Clamp out-of-range labels instead of rejecting them.
    pub clamp: bool,
    pub regressor: RegressorKind,
    pub weighting: WeightScheme,
    pub region_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bins: 100,
            kernel_size: 0.06,
            kernel_sigma: 0.02,
            slice_threshold: 10,
            seed: 0,
            clamp: false,
            regressor: RegressorKind::Ridge { penalty: 1e-3 },
            weighting: WeightScheme::Cwl,
            region_threshold: 500.0,
        }
    }
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| UldaError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| UldaError::Manifest {
        path: path.to_path_buf(),
        message: format!("invalid config: {e}"),
    })
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| UldaError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| UldaError::Manifest {
        path: path.to_path_buf(),
        message: format!("invalid manifest: {e}"),
    })?;
    if manifest.feature_dim == 0 {
        return Err(UldaError::Manifest {
            path: path.to_path_buf(),
            message: "feature_dim must be >= 1".into(),
        });
    }
    if !(manifest.label_min < manifest.label_max) {
        return Err(UldaError::Manifest {
            path: path.to_path_buf(),
            message: "label_min must be < label_max".into(),
        });
    }
    Ok(manifest)
}

/// Loads a corpus from its manifest.
pub fn read_dataset(manifest_path: &Path) -> Result<SequenceDataset> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let sequences = manifest
        .sequences
        .iter()
        .map(|entry| read_sequence_file(&base.join(&entry.path), &entry.id, manifest.feature_dim))
        .collect::<Result<Vec<Sequence>>>()?;
    Ok(SequenceDataset {
        feature_dim: manifest.feature_dim,
        label_min: manifest.label_min,
        label_max: manifest.label_max,
        sequences,
    })
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> UldaError {
    UldaError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_sequence_file(path: &Path, id: &str, feature_dim: usize) -> Result<Sequence> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let mut columns = headers.iter();
    if columns.next() != Some("t") {
        return Err(parse_err(path, 1, "first column must be 't'"));
    }
    if columns.next() != Some("label") {
        return Err(parse_err(path, 1, "second column must be 'label'"));
    }
    let remaining: Vec<&str> = columns.collect();
    let has_utopia = remaining.first() == Some(&"utopia_label");
    let feature_names = if has_utopia { &remaining[1..] } else { &remaining[..] };
    if feature_names.len() != feature_dim {
        return Err(parse_err(
            path,
            1,
            format!(
                "manifest declares {feature_dim} feature columns but file has {}",
                feature_names.len()
            ),
        ));
    }
    for (i, name) in feature_names.iter().enumerate() {
        if *name != format!("f{i}") {
            return Err(parse_err(path, 1, format!("expected column 'f{i}', found '{name}'")));
        }
    }

    let mut frames = Vec::new();
    let mut last_time: Option<i64> = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize| -> &str { record.get(idx).unwrap_or("") };
        let time: i64 = field(0)
            .parse()
            .map_err(|_| parse_err(path, line, format!("invalid frame index '{}'", field(0))))?;
        if let Some(prev) = last_time {
            if time <= prev {
                return Err(parse_err(
                    path,
                    line,
                    format!("frame index {time} does not increase past {prev}"),
                ));
            }
        }
        last_time = Some(time);
        let label: f64 = parse_real(field(1), path, line, "label")?;
        let utopia_label = if has_utopia {
            let raw = field(2);
            if raw.is_empty() {
                None
            } else {
                Some(parse_real(raw, path, line, "utopia_label")?)
            }
        } else {
            None
        };
        let offset = if has_utopia { 3 } else { 2 };
        let features = (0..feature_dim)
            .map(|k| parse_real(field(offset + k), path, line, &format!("f{k}")))
            .collect::<Result<Vec<f64>>>()?;
        frames.push(Frame {
            time,
            label,
            utopia_label,
            features,
        });
    }
    if frames.is_empty() {
        return Err(parse_err(path, 1, "sequence file has no data rows"));
    }
    Ok(Sequence::new(id, frames))
}

fn parse_real(raw: &str, path: &Path, line: u64, column: &str) -> Result<f64> {
    let value: f64 = raw
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {column} value '{raw}'")))?;
    if !value.is_finite() {
        return Err(parse_err(path, line, format!("{column} value '{raw}' is not finite")));
    }
    Ok(value)
}

fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

fn render_sequence_csv(sequence: &Sequence, feature_dim: usize, include_utopia: bool) -> String {
    let mut out = String::from("t,label");
    if include_utopia {
        out.push_str(",utopia_label");
    }
    for k in 0..feature_dim {
        out.push_str(&format!(",f{k}"));
    }
    out.push('\n');
    for frame in &sequence.frames {
        out.push_str(&format!("{},{}", frame.time, frame.label));
        if include_utopia {
            out.push(',');
            if let Some(u) = frame.utopia_label {
                out.push_str(&u.to_string());
            }
        }
        for value in &frame.features {
            out.push_str(&format!(",{value}"));
        }
        out.push('\n');
    }
    out
}

/// Writes a corpus into `dir` as `manifest.json` plus one CSV per sequence.
/// The `utopia_label` column is included when any frame carries one.
pub fn write_dataset(dir: &Path, dataset: &SequenceDataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let include_utopia = dataset
        .sequences
        .iter()
        .any(|s| s.frames.iter().any(|f| f.utopia_label.is_some()));
    let mut entries = Vec::with_capacity(dataset.sequences.len());
    for sequence in &dataset.sequences {
        sequence.check_feature_dim(dataset.feature_dim)?;
        let file_name = format!("{}.csv", sanitize_id(&sequence.id));
        let csv = render_sequence_csv(sequence, dataset.feature_dim, include_utopia);
        write_atomic(&dir.join(&file_name), csv.as_bytes())?;
        entries.push(ManifestEntry {
            id: sequence.id.clone(),
            path: file_name,
        });
    }
    let manifest = Manifest {
        feature_dim: dataset.feature_dim,
        label_min: dataset.label_min,
        label_max: dataset.label_max,
        sequences: entries,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

/// Writes a dataset with extra per-frame weight columns (`w_<scheme>`), one
/// per table set, aligned with the plain dataset layout.
pub fn write_dataset_with_weights(
    dir: &Path,
    dataset: &SequenceDataset,
    tables: &[(WeightScheme, Vec<Vec<f64>>)],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let include_utopia = dataset
        .sequences
        .iter()
        .any(|s| s.frames.iter().any(|f| f.utopia_label.is_some()));
    let mut entries = Vec::with_capacity(dataset.sequences.len());
    for (s, sequence) in dataset.sequences.iter().enumerate() {
        let mut csv = render_sequence_csv(sequence, dataset.feature_dim, include_utopia);
        let mut lines: Vec<String> = csv.lines().map(str::to_owned).collect();
        for (scheme, per_sequence) in tables {
            let weights = &per_sequence[s];
            if weights.len() != sequence.len() {
                return Err(UldaError::LengthMismatch {
                    context: "weight column vs sequence frames",
                    expected: sequence.len(),
                    actual: weights.len(),
                });
            }
            lines[0].push_str(&format!(",w_{}", scheme.name()));
            for (row, &w) in weights.iter().enumerate() {
                lines[row + 1].push_str(&format!(",{w}"));
            }
        }
        csv = lines.join("\n");
        csv.push('\n');
        let file_name = format!("{}.csv", sanitize_id(&sequence.id));
        write_atomic(&dir.join(&file_name), csv.as_bytes())?;
        entries.push(ManifestEntry {
            id: sequence.id.clone(),
            path: file_name,
        });
    }
    let manifest = Manifest {
        feature_dim: dataset.feature_dim,
        label_min: dataset.label_min,
        label_max: dataset.label_max,
        sequences: entries,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

pub fn write_histogram_csv(path: &Path, hist: &LabelHistogram) -> Result<()> {
    let mut out = String::from("bin,label_center,count\n");
    for (bin, &count) in hist.counts().iter().enumerate() {
        out.push_str(&format!("{bin},{},{count}\n", hist.binning().bin_center(bin)));
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_histogram_pair_csv(
    path: &Path,
    before: &LabelHistogram,
    after: &LabelHistogram,
) -> Result<()> {
    if before.binning() != after.binning() {
        return Err(UldaError::BinningMismatch);
    }
    let mut out = String::from("bin,label_center,count_before,count_after\n");
    for (bin, (&b, &a)) in before.counts().iter().zip(after.counts()).enumerate() {
        out.push_str(&format!(
            "{bin},{},{b},{a}\n",
            before.binning().bin_center(bin)
        ));
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_plan_csv(path: &Path, plan: &AugmentationPlan) -> Result<()> {
    let mut out = String::from("bin,label_center,n_before,n_after,delta,oversample_count,undersample\n");
    for record in plan.records() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            record.bin,
            plan.binning().bin_center(record.bin),
            record.n_before,
            record.n_after,
            record.delta,
            record.oversample_count,
            record.undersample,
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Line-delimited provenance log, one JSON record per synthetic frame.
pub fn write_provenance(path: &Path, records: &[ProvenanceRecord]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    fn demo_dataset(utopia: bool) -> SequenceDataset {
        let frames = |offset: f64| {
            (0..4)
                .map(|t| Frame {
                    time: t,
                    label: offset + 0.1 * t as f64,
                    utopia_label: utopia.then_some(offset + 0.09 * t as f64),
                    features: vec![t as f64, -t as f64 / 3.0],
                })
                .collect()
        };
        SequenceDataset {
            feature_dim: 2,
            label_min: -1.0,
            label_max: 1.0,
            sequences: vec![
                Sequence::new("alpha", frames(0.0)),
                Sequence::new("beta", frames(0.25)),
            ],
        }
    }

    #[test]
    fn dataset_round_trips_through_disk() {
        let dir = tempdir().unwrap();
        for utopia in [false, true] {
            let dataset = demo_dataset(utopia);
            let sub = dir.path().join(format!("u{utopia}"));
            write_dataset(&sub, &dataset).unwrap();
            let loaded = read_dataset(&sub.join("manifest.json")).unwrap();
            assert_eq!(loaded, dataset);
        }
    }

    #[test]
    fn manifest_dimension_mismatch_fails_parsing() {
        let dir = tempdir().unwrap();
        let dataset = demo_dataset(false);
        write_dataset(dir.path(), &dataset).unwrap();
        // rewrite the manifest with a wrong feature_dim
        let manifest_path = dir.path().join("manifest.json");
        let mut manifest = read_manifest(&manifest_path).unwrap();
        manifest.feature_dim = 3;
        write_json(&manifest_path, &manifest).unwrap();
        let err = read_dataset(&manifest_path).unwrap_err();
        assert!(matches!(err, UldaError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn corrupt_rows_report_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,label,f0\n0,0.5,1.0\n1,not_a_number,2.0\n").unwrap();
        let err = read_sequence_file(&path, "bad", 1).unwrap_err();
        match err {
            UldaError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("label"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_increasing_frame_index_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,label,f0\n0,0.5,1.0\n0,0.6,2.0\n").unwrap();
        let err = read_sequence_file(&path, "bad", 1).unwrap_err();
        assert!(matches!(err, UldaError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn missing_feature_column_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,label,f0\n0,0.5,1.0\n").unwrap();
        assert!(read_sequence_file(&path, "bad", 2).is_err());
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .ends_with(".tmp")
            })
            .collect();
        assert!(leftovers.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn parse_inverts_serialize(
            labels in proptest::collection::vec(-1.0f64..1.0, 1..20),
            dim in 1usize..4,
            with_utopia in proptest::bool::ANY,
        ) {
            let frames: Vec<Frame> = labels
                .iter()
                .enumerate()
                .map(|(t, &label)| Frame {
                    time: t as i64,
                    label,
                    utopia_label: with_utopia.then_some(label * 0.5),
                    features: (0..dim).map(|k| label * (k as f64 + 1.0)).collect(),
                })
                .collect();
            let dataset = SequenceDataset {
                feature_dim: dim,
                label_min: -1.0,
                label_max: 1.0,
                sequences: vec![Sequence::new("prop", frames)],
            };
            let dir = tempdir().unwrap();
            write_dataset(dir.path(), &dataset).unwrap();
            let loaded = read_dataset(&dir.path().join("manifest.json")).unwrap();
            prop_assert_eq!(loaded, dataset);
        }
    }
}
