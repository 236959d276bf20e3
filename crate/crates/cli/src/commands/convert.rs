//! `convert`: dataset JSON to a text-label directory, or back. The label
//! directory is self-describing (labels, classes.txt, images.json), so the
//! reverse direction needs no extra inputs.

use shelfgen::yolo::export_yolo;

use crate::config::{load_config, prepare_out_dir, write_manifest};
use crate::error::{CliError, CliResult};
use crate::files;
use crate::ConvertArgs;

pub fn run(args: ConvertArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.input {
        cfg.paths.input = Some(p);
    }
    if let Some(p) = args.in_yolo {
        cfg.paths.labels = Some(p);
    }
    cfg.validate()?;

    match (cfg.paths.input.clone(), cfg.paths.labels.clone()) {
        (Some(_), Some(_)) => Err(CliError::usage(
            "give either --in (JSON to labels) or --in-yolo (labels to JSON), not both",
        )),
        (None, None) => Err(CliError::usage(
            "an input is required: --in <dataset.json> or --in-yolo <label dir>",
        )),
        (Some(input), None) => {
            let out = prepare_out_dir(args.out_yolo.as_deref(), "--out-yolo")?;
            let ds = files::read_dataset(&input)?;
            let export = export_yolo(&ds)?;
            for warning in &export.warnings {
                eprintln!("warning: {warning}");
            }
            files::write_label_dir(&out, &export, &ds)?;
            write_manifest(&out, "convert", &cfg)?;
            println!(
                "wrote {} label files and classes.txt to {}",
                export.files.len(),
                out.display()
            );
            Ok(())
        }
        (None, Some(labels)) => {
            let out = prepare_out_dir(args.out.as_deref(), "--out")?;
            let ds = files::read_label_dir(&labels)?;
            files::write_dataset(&out.join("dataset.json"), &ds)?;
            write_manifest(&out, "convert", &cfg)?;
            println!(
                "wrote dataset.json ({} images, {} annotations) to {}",
                ds.images.len(),
                ds.annotations.len(),
                out.display()
            );
            Ok(())
        }
    }
}
