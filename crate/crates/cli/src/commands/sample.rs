//! `sample`: draw occlusion targets (ratio bin + direction) from a stored
//! histogram. Each draw uses its own RNG substream so the output for a given
//! seed does not depend on how the draws are batched.

use shelfgen::occlusion::sample_point;
use shelfgen::rng::substream;

use crate::config::{load_config, prepare_out_dir, write_manifest};
use crate::error::{CliError, CliResult};
use crate::files;
use crate::SampleArgs;

pub fn run(args: SampleArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.hist {
        cfg.paths.histogram = Some(p);
    }
    if let Some(n) = args.count {
        cfg.count = Some(n);
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    cfg.validate()?;

    let hist_path = cfg.paths.histogram.clone().ok_or_else(|| {
        CliError::usage("a histogram is required: --hist <histogram.json> (or `paths.histogram` in config)")
    })?;
    let count = cfg
        .count
        .ok_or_else(|| CliError::usage("--count <N> is required (or `count` in config)"))?;
    // Sampling is cheap to re-run, so unlike augment/synth the seed may be
    // omitted; it defaults to 0 and is recorded in the manifest either way.
    let seed = cfg.seed.unwrap_or(0);
    cfg.seed = Some(seed);
    let out = prepare_out_dir(args.out.as_deref(), "--out")?;

    let hist = files::read_histogram(&hist_path)?;
    let samples = (0..count)
        .map(|k| sample_point(&hist, &mut substream(seed, k as u64)))
        .collect::<Result<Vec<_>, _>>()?;

    files::write_samples(&out.join("samples.jsonl"), &samples)?;
    write_manifest(&out, "sample", &cfg)?;
    println!(
        "{count} samples drawn from category {} histogram (seed {seed}); samples.jsonl written to {}",
        hist.category(),
        out.display()
    );
    Ok(())
}
