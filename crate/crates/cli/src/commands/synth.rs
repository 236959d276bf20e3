//! `synth`: generate shelf scenes through the fisheye camera model and write
//! the dataset, the exact per-pair occlusion events the layout produced, and
//! (unless suppressed) the rendered frames.

use std::fs;

use shelfgen::scene::{synth_annotations, synth_dataset};

use crate::config::{load_config, prepare_out_dir, with_workers, write_manifest};
use crate::error::{CliError, CliResult};
use crate::files;
use crate::SynthArgs;

pub fn run(args: SynthArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(n) = args.scenes {
        cfg.scene.n_scenes = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if args.annotations_only {
        cfg.annotations_only = true;
    }
    cfg.validate()?;

    let seed = cfg.seed.ok_or_else(|| {
        CliError::usage("synth requires --seed (or `seed` in config); runs must be reproducible")
    })?;
    let out = prepare_out_dir(args.out.as_deref(), "--out")?;

    let annotations_only = cfg.annotations_only;
    let outcome = with_workers(cfg.workers, || {
        if annotations_only {
            synth_annotations(&cfg.scene, seed)
        } else {
            synth_dataset(&cfg.scene, seed)
        }
    })??;

    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }

    if !annotations_only {
        let images_dir = out.join("images");
        fs::create_dir_all(&images_dir)
            .map_err(|e| CliError::runtime(format!("create {}: {e}", images_dir.display())))?;
        for im in &outcome.images {
            let path = images_dir.join(&im.file_name);
            im.pixels
                .save(&path)
                .map_err(|e| CliError::runtime(format!("write {}: {e}", path.display())))?;
        }
    }

    files::write_dataset(&out.join("dataset.json"), &outcome.dataset)?;
    files::write_events(&out.join("events.jsonl"), &outcome.events)?;
    write_manifest(&out, "synth", &cfg)?;
    println!(
        "{} scenes synthesized (seed {seed}): {} boxes, {} occlusion events; written to {}",
        cfg.scene.n_scenes,
        outcome.dataset.annotations.len(),
        outcome.events.len(),
        out.display()
    );
    Ok(())
}
