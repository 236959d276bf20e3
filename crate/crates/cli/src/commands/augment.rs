//! `augment`: paste donor crops into images so that each paste lands in an
//! occlusion cell (ratio bin + direction) drawn from a histogram, then write
//! the augmented dataset, the rendered images, and a per-paste manifest.

use std::fs;

use shelfgen::augment::augment_dataset;
use shelfgen::store::ImageStore;
use shelfgen::occlusion::{estimate_histogram, infer_events_dataset, EventRecord};

use crate::config::{load_config, prepare_out_dir, with_workers, write_manifest};
use crate::error::{CliError, CliResult};
use crate::files;
use crate::AugmentArgs;

pub fn run(args: AugmentArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.input {
        cfg.paths.input = Some(p);
    }
    if let Some(p) = args.images {
        cfg.paths.images = Some(p);
    }
    if let Some(p) = args.hist {
        cfg.paths.histogram = Some(p);
    }
    if let Some(c) = args.category {
        cfg.category = Some(c);
    }
    if let Some(n) = args.count {
        cfg.count = Some(n);
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate()?;

    let input = cfg
        .paths
        .input
        .clone()
        .ok_or_else(|| CliError::usage("--in <dataset.json> is required (or `paths.input` in config)"))?;
    let images = cfg
        .paths
        .images
        .clone()
        .ok_or_else(|| CliError::usage("--images <dir> is required (or `paths.images` in config)"))?;
    let category = cfg
        .category
        .ok_or_else(|| CliError::usage("--category <ID> is required (or `category` in config)"))?;
    let count = cfg
        .count
        .ok_or_else(|| CliError::usage("--count <N> is required (or `count` in config)"))?;
    let seed = cfg.seed.ok_or_else(|| {
        CliError::usage("augment requires --seed (or `seed` in config); runs must be reproducible")
    })?;
    let out = prepare_out_dir(args.out.as_deref(), "--out")?;

    let ds = files::read_dataset(&input)?;
    let store = ImageStore::dir(&images);

    let hist = match &cfg.paths.histogram {
        Some(path) => {
            let h = files::read_histogram(path)?;
            if h.category() != category {
                return Err(CliError::runtime(format!(
                    "histogram {} describes category {}, but --category is {category}",
                    path.display(),
                    h.category()
                )));
            }
            h
        }
        None => {
            let events = infer_events_dataset(&ds, &cfg.infer);
            estimate_histogram(&events, category, &cfg.bins)
        }
    };

    let outcome = with_workers(cfg.workers, || {
        augment_dataset(&ds, &store, category, count, &hist, &cfg.constraints, seed)
    })??;

    let images_dir = out.join("images");
    fs::create_dir_all(&images_dir)
        .map_err(|e| CliError::runtime(format!("create {}: {e}", images_dir.display())))?;
    for im in &outcome.images {
        let path = images_dir.join(&im.file_name);
        im.pixels
            .save(&path)
            .map_err(|e| CliError::runtime(format!("write {}: {e}", path.display())))?;
    }

    files::write_dataset(&out.join("dataset.json"), &outcome.dataset)?;
    files::write_paste_manifest(&out.join("paste_manifest.jsonl"), &outcome.manifest)?;

    // Events come out of the augmenter in manifest paste order; tag each with
    // the output image it belongs to.
    let mut event_records = Vec::with_capacity(outcome.events.len());
    let mut events_iter = outcome.events.iter();
    for rec in &outcome.manifest {
        for _ in &rec.pastes {
            let event = events_iter.next().ok_or_else(|| {
                CliError::runtime("augment produced fewer events than pastes".to_string())
            })?;
            event_records.push(EventRecord::new(rec.output_image_id as u64, event));
        }
    }
    files::write_events(&out.join("events.jsonl"), &event_records)?;

    write_manifest(&out, "augment", &cfg)?;
    let n_pastes: usize = outcome.manifest.iter().map(|r| r.pastes.len()).sum();
    println!(
        "{} augmented images written ({} pastes, category {category}, seed {seed}) to {}",
        outcome.images.len(),
        n_pastes,
        out.display()
    );
    Ok(())
}
