//! `eval`: score detector output against a ground-truth dataset and write the
//! per-category report (JSON and CSV). The CSV is also printed to stdout.

use std::fs;

use shelfgen::metrics::metrics_report;

use crate::config::{load_config, prepare_out_dir, write_manifest};
use crate::error::{CliError, CliResult};
use crate::files;
use crate::EvalArgs;

pub fn run(args: EvalArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.gt {
        cfg.paths.gt = Some(p);
    }
    if let Some(p) = args.pred {
        cfg.paths.predictions = Some(p);
    }
    if !args.taus.is_empty() {
        cfg.eval.taus = args.taus.clone();
    }
    if let Some(v) = args.iou_min {
        cfg.eval.iou_min = v;
    }
    if let Some(v) = args.conf_min {
        cfg.eval.conf_min = v;
    }
    if let Some(c) = args.category {
        cfg.category = Some(c);
    }
    cfg.validate()?;

    let gt = cfg
        .paths
        .gt
        .clone()
        .ok_or_else(|| CliError::usage("--gt <dataset.json> is required (or `paths.gt` in config)"))?;
    let pred = cfg.paths.predictions.clone().ok_or_else(|| {
        CliError::usage("--pred <predictions.jsonl> is required (or `paths.predictions` in config)")
    })?;
    let out = prepare_out_dir(args.out.as_deref(), "--out")?;

    let ds = files::read_dataset(&gt)?;
    let preds = files::read_predictions(&pred)?;
    let mut report = metrics_report(&ds, &preds, &cfg.eval.taus, cfg.eval.iou_min, cfg.eval.conf_min);
    if let Some(category) = cfg.category {
        report.categories.retain(|c| c.category_id == category);
        if report.categories.is_empty() {
            return Err(CliError::runtime(format!(
                "category {category} is not in the ground truth"
            )));
        }
    }

    files::write_json_pretty(&out.join("report.json"), &report)?;
    let csv = report.to_csv();
    fs::write(out.join("report.csv"), &csv)
        .map_err(|e| CliError::runtime(format!("cannot write report.csv: {e}")))?;
    print!("{csv}");
    write_manifest(&out, "eval", &cfg)?;
    println!(
        "report over {} categories written to {}",
        report.categories.len(),
        out.display()
    );
    Ok(())
}
