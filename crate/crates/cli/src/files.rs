//! File plumbing shared by the subcommands: dataset JSON, prediction and
//! event JSONL, histogram JSON, and text-label directories. Every reader
//! reports the offending file (and line, for line formats); every writer
//! is deterministic.

use std::fs;
use std::path::Path;

use serde::Serialize;
use shelfgen::coco::{parse_coco, write_coco};
use shelfgen::dataset::Dataset;
use shelfgen::metrics::{Prediction, PredictionRecord};
use shelfgen::occlusion::{EventRecord, OcclusionEvent, OcclusionHistogram};
use shelfgen::yolo::{import_yolo, LabelExport, LabelFile};

use crate::error::{CliError, CliResult};

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_coco(&bytes).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> CliResult<()> {
    let bytes = write_coco(ds)?;
    fs::write(path, bytes)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

/// One JSON document per line; empty lines are skipped.
fn read_jsonl<T, F, U>(path: &Path, convert: F) -> CliResult<Vec<U>>
where
    T: serde::de::DeserializeOwned,
    F: Fn(T) -> shelfgen::Result<U>,
{
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(line).map_err(|e| {
            CliError::runtime(format!("{} line {}: {e}", path.display(), index + 1))
        })?;
        let value = convert(record).map_err(|e| {
            CliError::runtime(format!("{} line {}: {e}", path.display(), index + 1))
        })?;
        out.push(value);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> CliResult<()> {
    let mut out = String::new();
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| CliError::runtime(format!("serialization: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn read_predictions(path: &Path) -> CliResult<Vec<Prediction>> {
    read_jsonl(path, PredictionRecord::into_prediction)
}

pub fn read_events(path: &Path) -> CliResult<Vec<OcclusionEvent>> {
    read_jsonl(path, EventRecord::into_event)
}

pub fn write_events(path: &Path, records: &[EventRecord]) -> CliResult<()> {
    write_jsonl(path, records)
}

pub fn write_samples(path: &Path, samples: &[shelfgen::occlusion::OcclusionSample]) -> CliResult<()> {
    write_jsonl(path, samples)
}

pub fn write_paste_manifest(
    path: &Path,
    records: &[shelfgen::augment::ManifestRecord],
) -> CliResult<()> {
    write_jsonl(path, records)
}

pub fn read_histogram(path: &Path) -> CliResult<OcclusionHistogram> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::runtime(format!("serialization: {e}")))?;
    bytes.push(b'\n');
    fs::write(path, bytes)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

/// Label file name for an image file name: the stem with a `.txt` suffix.
fn label_name(image_file_name: &str) -> String {
    let stem = Path::new(image_file_name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(image_file_name);
    format!("{stem}.txt")
}

/// Writes a text-label directory: one `.txt` per image, `classes.txt`, and
/// `images.json` (a dataset document without annotations) so the directory
/// is self-describing and convertible back without the original JSON.
pub fn write_label_dir(dir: &Path, export: &LabelExport, ds: &Dataset) -> CliResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    for file in &export.files {
        let name = label_name(&file.image_file_name);
        if !seen.insert(name.clone()) {
            return Err(CliError::runtime(format!(
                "two images share the label file name {name}"
            )));
        }
        let mut text = file.lines.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        let path = dir.join(&name);
        fs::write(&path, text)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut classes = export.classes.join("\n");
    classes.push('\n');
    fs::write(dir.join("classes.txt"), classes)
        .map_err(|e| CliError::runtime(format!("cannot write classes.txt: {e}")))?;
    let skeleton = Dataset {
        images: ds.images.clone(),
        annotations: Vec::new(),
        categories: ds.categories.clone(),
    };
    write_dataset(&dir.join("images.json"), &skeleton)
}

/// Reads a label directory produced by `write_label_dir` (or laid out the
/// same way) back into a dataset. Images without a label file come back
/// with zero annotations.
pub fn read_label_dir(dir: &Path) -> CliResult<Dataset> {
    let skeleton = read_dataset(&dir.join("images.json"))?;
    let mut records = Vec::new();
    for image in &skeleton.images {
        let path = dir.join(label_name(&image.file_name));
        let lines = match fs::read_to_string(&path) {
            Ok(text) => text.lines().map(str::to_string).collect(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => {
                return Err(CliError::runtime(format!(
                    "cannot read {}: {e}",
                    path.display()
                )))
            }
        };
        records.push(LabelFile {
            image_file_name: image.file_name.clone(),
            lines,
        });
    }
    import_yolo(&records, &skeleton.images, &skeleton.categories)
        .map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))
}
