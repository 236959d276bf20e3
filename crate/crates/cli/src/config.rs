//! Run configuration: one JSON document covering every subcommand, with
//! strict schema validation. Flags override individual fields; the fully
//! resolved document is recorded in the run manifest, and a manifest can be
//! passed back as `--config` to reproduce a run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shelfgen::augment::Constraints;
use shelfgen::occlusion::{InferParams, RatioBins};
use shelfgen::scene::SceneConfig;

use crate::error::{CliError, CliResult};

/// Input locations. Every path a subcommand reads can be set here instead
/// of (or as the default for) the corresponding flag, which is what lets a
/// manifest reproduce a run without repeating flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Dataset JSON consumed by `convert`, `stats`, and `augment`.
    pub input: Option<PathBuf>,
    /// Text-label directory consumed by `convert`.
    pub labels: Option<PathBuf>,
    /// Image directory backing the dataset, for `augment`.
    pub images: Option<PathBuf>,
    /// Ground-truth dataset JSON for `eval`.
    pub gt: Option<PathBuf>,
    /// Prediction JSONL for `eval` and `report`.
    pub predictions: Option<PathBuf>,
    /// Histogram JSON for `sample` and `augment`.
    pub histogram: Option<PathBuf>,
    /// Occlusion-event JSONL for `stats`.
    pub events: Option<PathBuf>,
}

/// Scoring thresholds for `eval` and `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub iou_min: f64,
    pub conf_min: f64,
    /// Confidence thresholds at which threshold-indexed rates are reported.
    pub taus: Vec<f64>,
    /// Confidence histogram bin width for `report`.
    pub bin_width: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_min: 0.5,
            conf_min: 0.25,
            taus: vec![0.9, 0.95],
            bin_width: 0.05,
        }
    }
}

impl EvalConfig {
    fn validate(&self) -> CliResult<()> {
        if !(self.iou_min > 0.0 && self.iou_min <= 1.0) {
            return Err(CliError::usage(format!(
                "eval.iou_min must be in (0, 1], got {}",
                self.iou_min
            )));
        }
        if !(0.0..=1.0).contains(&self.conf_min) {
            return Err(CliError::usage(format!(
                "eval.conf_min must be in [0, 1], got {}",
                self.conf_min
            )));
        }
        if self.taus.is_empty() {
            return Err(CliError::usage("eval.taus must not be empty"));
        }
        for tau in &self.taus {
            if !(0.0..=1.0).contains(tau) {
                return Err(CliError::usage(format!(
                    "eval.taus entries must be in [0, 1], got {tau}"
                )));
            }
        }
        if !(self.bin_width > 0.0 && self.bin_width <= 1.0) {
            return Err(CliError::usage(format!(
                "eval.bin_width must be in (0, 1], got {}",
                self.bin_width
            )));
        }
        Ok(())
    }
}

/// The complete run configuration. Every field has a default, so an empty
/// document `{}` is valid; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    /// Ratio-bin edges shared by `stats`, `sample`, and `augment`.
    pub bins: RatioBins,
    pub infer: InferParams,
    pub constraints: Constraints,
    pub scene: SceneConfig,
    pub eval: EvalConfig,
    /// Target category for `stats`, `augment`, and `report`.
    pub category: Option<i64>,
    /// Output count for `augment` (images) and `sample` (draws).
    pub count: Option<usize>,
    pub seed: Option<u64>,
    /// Worker threads; 0 means the library default.
    pub workers: usize,
    /// `synth` only: skip rendering and emit annotations plus events.
    pub annotations_only: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: PathsConfig::default(),
            bins: RatioBins::default(),
            infer: InferParams::default(),
            constraints: Constraints::default(),
            scene: SceneConfig::default(),
            eval: EvalConfig::default(),
            category: None,
            count: None,
            seed: None,
            workers: 0,
            annotations_only: false,
        }
    }
}

impl RunConfig {
    /// Semantic checks beyond the serde schema. Every section is validated
    /// regardless of subcommand: a config document is either sound or not.
    pub fn validate(&self) -> CliResult<()> {
        self.constraints
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        self.scene
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        self.eval.validate()?;
        if !(self.infer.r_min >= 0.0 && self.infer.r_min < 1.0) {
            return Err(CliError::usage(format!(
                "infer.r_min must be in [0, 1), got {}",
                self.infer.r_min
            )));
        }
        if !(self.infer.adjacency_gap >= 0.0 && self.infer.adjacency_gap.is_finite()) {
            return Err(CliError::usage(format!(
                "infer.adjacency_gap must be non-negative, got {}",
                self.infer.adjacency_gap
            )));
        }
        Ok(())
    }
}

/// Everything needed to audit or byte-identically reproduce a run: rerun
/// the same subcommand with this file as `--config` and a fresh `--out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: RunConfig,
}

/// Loads a config document, accepting either a bare `RunConfig` or a full
/// run manifest (whose embedded config is extracted). `None` yields the
/// defaults. All failures are usage errors.
pub fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let bytes = fs::read(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::usage(format!("config {} is not JSON: {e}", path.display())))?;
    let document = match value.as_object() {
        Some(map) if map.contains_key("tool") && map.contains_key("config") => {
            map["config"].clone()
        }
        _ => value,
    };
    let config: RunConfig = serde_json::from_value(document)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

/// Writes `<out_dir>/manifest.json` for the run. Output is deterministic,
/// so identical configurations produce identical manifests.
pub fn write_manifest(out_dir: &Path, subcommand: &str, config: &RunConfig) -> CliResult<()> {
    let manifest = RunManifest {
        tool: "shelfgen".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        config: config.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CliError::runtime(format!("manifest serialization: {e}")))?;
    bytes.push(b'\n');
    let path = out_dir.join("manifest.json");
    fs::write(&path, bytes)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Creates the output directory for a run, required by every subcommand.
/// `flag` names the flag in the usage message (`--out` or `--out-yolo`).
pub fn prepare_out_dir(out: Option<&Path>, flag: &str) -> CliResult<PathBuf> {
    let out = out.ok_or_else(|| CliError::usage(format!("{flag} <DIR> is required")))?;
    fs::create_dir_all(out)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out.display())))?;
    Ok(out.to_path_buf())
}

/// Runs `f` on a dedicated thread pool of `workers` threads, or inline on
/// the library default when `workers` is 0. Outputs must not depend on the
/// choice; seeding is per work unit, not per thread.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    if workers == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::runtime(format!("cannot build thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}
