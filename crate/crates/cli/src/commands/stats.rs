//! `stats`: estimate a category's occlusion histogram, either by inferring
//! events from visible-box overlaps in a dataset or from a recorded event
//! file (such as the one `synth` writes).

use shelfgen::occlusion::{estimate_histogram, infer_events_dataset};

use crate::config::{load_config, prepare_out_dir, write_manifest};
use crate::error::{CliError, CliResult};
use crate::files;
use crate::StatsArgs;

pub fn run(args: StatsArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.input {
        cfg.paths.input = Some(p);
    }
    if let Some(p) = args.events {
        cfg.paths.events = Some(p);
    }
    if let Some(c) = args.category {
        cfg.category = Some(c);
    }
    cfg.validate()?;

    let category = cfg
        .category
        .ok_or_else(|| CliError::usage("--category <ID> is required (or `category` in config)"))?;
    let out = prepare_out_dir(args.out.as_deref(), "--out")?;

    let events = match (&cfg.paths.input, &cfg.paths.events) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "give either --in (infer from a dataset) or --events (recorded events), not both",
            ))
        }
        (None, None) => {
            return Err(CliError::usage(
                "an input is required: --in <dataset.json> or --events <events.jsonl>",
            ))
        }
        (Some(path), None) => {
            let ds = files::read_dataset(path)?;
            infer_events_dataset(&ds, &cfg.infer)
        }
        (None, Some(path)) => files::read_events(path)?,
    };

    let hist = estimate_histogram(&events, category, &cfg.bins);
    if hist.is_empty() {
        eprintln!("warning: no events observed for category {category}");
    }
    files::write_json_pretty(&out.join("histogram.json"), &hist)?;
    write_manifest(&out, "stats", &cfg)?;
    println!(
        "category {category}: {} events binned; histogram.json written to {}",
        hist.total(),
        out.display()
    );
    Ok(())
}
