//! `report`: histogram a prediction file's confidence scores for one
//! category, as a quick view of how a detector's confidence mass is
//! distributed.

use std::fs;

use shelfgen::metrics::confidence_report;

use crate::config::{load_config, prepare_out_dir, write_manifest};
use crate::error::{CliError, CliResult};
use crate::files;
use crate::ReportArgs;

pub fn run(args: ReportArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.pred {
        cfg.paths.predictions = Some(p);
    }
    if let Some(c) = args.category {
        cfg.category = Some(c);
    }
    if let Some(w) = args.bin_width {
        cfg.eval.bin_width = w;
    }
    cfg.validate()?;

    let pred = cfg.paths.predictions.clone().ok_or_else(|| {
        CliError::usage("--pred <predictions.jsonl> is required (or `paths.predictions` in config)")
    })?;
    let category = cfg
        .category
        .ok_or_else(|| CliError::usage("--category <ID> is required (or `category` in config)"))?;
    let out = prepare_out_dir(args.out.as_deref(), "--out")?;

    let preds = files::read_predictions(&pred)?;
    let hist = confidence_report(&preds, category, cfg.eval.bin_width)?;
    let csv = hist.to_csv();
    fs::write(out.join("confidence.csv"), &csv)
        .map_err(|e| CliError::runtime(format!("cannot write confidence.csv: {e}")))?;
    write_manifest(&out, "report", &cfg)?;
    println!(
        "confidence histogram for category {category} written to {}",
        out.display()
    );
    Ok(())
}
