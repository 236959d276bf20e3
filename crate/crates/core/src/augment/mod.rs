//! Occlusion-guided copy-paste augmentation.
//!
//! Donor crops are pasted onto images containing a chosen category so that
//! each paste realizes an occlusion cell (ratio bin and direction) drawn
//! from a measured histogram. Every accepted paste is re-verified with the
//! same measurement operations the rest of the crate exposes, and every
//! output image carries rewritten annotations whose boxes cover only the
//! still-visible remainder of each object.

mod compose;
mod plan;

pub use compose::{apply_plan, geometric_photometric, TransformParams};
pub use plan::{clip_visible_bbox, plan_paste, PasteOp};

use std::collections::{BTreeMap, BTreeSet};

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Annotation, Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::geom::{uncovered_region, Rect};
use crate::occlusion::{
    Direction, EventSource, OcclusionEvent, OcclusionHistogram, Occluder,
};
use crate::rng::substream;
pub use crate::store::OutputImage;
use crate::store::ImageStore;

/// Placement acceptance knobs. A candidate paste must keep every other
/// existing box covered at most `theta_overlap`, leave the target at least
/// `v_min` visible, use a donor scale inside `scale_range`, and is retried
/// at most `max_attempts` times per sampled cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constraints {
    pub theta_overlap: f64,
    pub v_min: f64,
    pub scale_range: (f64, f64),
    pub max_attempts: u32,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints {
            theta_overlap: 0.3,
            v_min: 0.1,
            scale_range: (0.5, 2.0),
            max_attempts: 50,
        }
    }
}

impl Constraints {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.theta_overlap) {
            return Err(Error::Config {
                message: format!("theta_overlap must be in [0, 1), got {}", self.theta_overlap),
            });
        }
        if !(self.v_min > 0.0 && self.v_min < 1.0) {
            return Err(Error::Config {
                message: format!("v_min must be in (0, 1), got {}", self.v_min),
            });
        }
        let (lo, hi) = self.scale_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::Config {
                message: format!("scale_range must satisfy 0 < lo <= hi, got ({lo}, {hi})"),
            });
        }
        if self.max_attempts == 0 {
            return Err(Error::Config {
                message: "max_attempts must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One annotated crop cut from a source image, available for pasting.
#[derive(Debug, Clone, PartialEq)]
pub struct DonorCrop {
    pub source_image_id: i64,
    pub annotation_id: i64,
    pub category_id: i64,
    /// Integer-aligned region actually cut from the source image.
    pub source_rect: Rect,
    pub pixels: RgbImage,
}

/// Donor crops in a fixed order: ascending source image id, then
/// annotation id. The order is part of the determinism contract, since
/// planning draws donors by index.
#[derive(Debug, Clone)]
pub struct DonorPool {
    crops: Vec<DonorCrop>,
}

impl DonorPool {
    /// Cuts one crop per annotation from `ds`, restricted to `categories`
    /// when given. Boxes are snapped outward to whole pixels and clipped
    /// to their image.
    pub fn build(
        ds: &Dataset,
        categories: Option<&BTreeSet<i64>>,
        store: &ImageStore,
    ) -> Result<DonorPool> {
        let report = ds.validate();
        if !report.errors.is_empty() {
            return Err(Error::Integrity { report });
        }
        let by_image = ds.annotations_by_image();
        let mut crops = Vec::new();
        for image in &ds.images {
            let Some(anns) = by_image.get(&image.id) else {
                continue;
            };
            let wanted: Vec<&Annotation> = anns
                .iter()
                .copied()
                .filter(|a| categories.map_or(true, |set| set.contains(&a.category_id)))
                .collect();
            if wanted.is_empty() {
                continue;
            }
            let pixels = store.load(image)?;
            for ann in wanted {
                let x0 = ann.bbox.x.floor().max(0.0) as u32;
                let y0 = ann.bbox.y.floor().max(0.0) as u32;
                let x1 = (ann.bbox.right().ceil().min(image.width as f64)) as u32;
                let y1 = (ann.bbox.bottom().ceil().min(image.height as f64)) as u32;
                if x1 <= x0 || y1 <= y0 {
                    continue;
                }
                let crop =
                    image::imageops::crop_imm(&pixels, x0, y0, x1 - x0, y1 - y0).to_image();
                crops.push(DonorCrop {
                    source_image_id: image.id,
                    annotation_id: ann.id,
                    category_id: ann.category_id,
                    source_rect: Rect::new(
                        x0 as f64,
                        y0 as f64,
                        (x1 - x0) as f64,
                        (y1 - y0) as f64,
                    )?,
                    pixels: crop,
                });
            }
        }
        if crops.is_empty() {
            return Err(Error::EmptyDonorPool);
        }
        Ok(DonorPool { crops })
    }

    /// Wraps prebuilt crops; callers own the ordering.
    pub fn from_crops(crops: Vec<DonorCrop>) -> DonorPool {
        DonorPool { crops }
    }

    pub fn len(&self) -> usize {
        self.crops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crops.is_empty()
    }

    pub fn get(&self, index: usize) -> &DonorCrop {
        &self.crops[index]
    }

    pub fn crops(&self) -> &[DonorCrop] {
        &self.crops
    }
}

/// Fully planned output image: which pastes to composite and the final
/// annotation set (rewritten originals plus one box per paste).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentPlan {
    pub base_image_id: i64,
    pub output_image_id: i64,
    pub pastes: Vec<PasteOp>,
    pub annotations: Vec<Annotation>,
}

/// Replayable description of one paste within a manifest record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPaste {
    pub donor_annotation_id: i64,
    pub donor_category_id: i64,
    pub target_annotation_id: i64,
    pub placement: Rect,
    pub z: u32,
    pub sampled_ratio_lo: f64,
    pub sampled_ratio_hi: f64,
    pub sampled_direction: Direction,
    pub achieved_ratio: f64,
    pub achieved_direction: Direction,
}

/// One line of the augmentation manifest: everything needed to audit or
/// reproduce one output image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub output_image_id: i64,
    pub output_file: String,
    pub base_image_id: i64,
    pub seed: u64,
    pub stream: u64,
    pub pastes: Vec<ManifestPaste>,
}

/// Everything `augment_dataset` produces: the extended dataset, one
/// manifest record and one rendered image per output, and the occlusion
/// events the pastes realized (occluder marked synthetic).
#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub dataset: Dataset,
    pub manifest: Vec<ManifestRecord>,
    pub images: Vec<OutputImage>,
    pub events: Vec<OcclusionEvent>,
}

/// Distinct cells drawn per target before giving up on it.
const SAMPLES_PER_TARGET: u32 = 8;
/// Whole-image replans before the output slot is declared infeasible.
const IMAGE_RETRIES: u32 = 16;

struct PlannedImage {
    base_image_id: i64,
    output_image_id: i64,
    width: u32,
    height: u32,
    pastes: Vec<PasteOp>,
    rewritten: Vec<Annotation>,
    pixels: RgbImage,
}

/// Produces `count` augmented images for `new_category`.
///
/// Base images cycle over the images containing that category, in
/// ascending id order. Each annotation of the category on a base image
/// receives at most one paste; an output with zero accepted pastes is
/// replanned and, if that keeps failing, reported as infeasible rather
/// than silently emitted. Draws for output `k` come from an independent
/// stream of `seed`, so results are identical for any worker count.
pub fn augment_dataset(
    ds: &Dataset,
    store: &ImageStore,
    new_category: i64,
    count: usize,
    hist: &OcclusionHistogram,
    constraints: &Constraints,
    seed: u64,
) -> Result<AugmentOutcome> {
    constraints.validate()?;
    let report = ds.validate();
    if !report.errors.is_empty() {
        return Err(Error::Integrity { report });
    }
    if ds.categories.get(new_category).is_none() {
        return Err(Error::Config {
            message: format!("category {new_category} does not exist in the dataset"),
        });
    }
    if count == 0 {
        return Ok(AugmentOutcome {
            dataset: ds.clone(),
            manifest: Vec::new(),
            images: Vec::new(),
            events: Vec::new(),
        });
    }
    if hist.total() == 0 {
        return Err(Error::EmptyHistogram {
            category: hist.category(),
        });
    }

    let by_image = ds.annotations_by_image();
    let bases: Vec<i64> = by_image
        .iter()
        .filter(|(_, anns)| anns.iter().any(|a| a.category_id == new_category))
        .map(|(&id, _)| id)
        .collect();
    if bases.is_empty() {
        return Err(Error::Config {
            message: format!("no image contains an annotation of category {new_category}"),
        });
    }

    let pool = DonorPool::build(ds, None, store)?;
    let mut base_pixels: BTreeMap<i64, RgbImage> = BTreeMap::new();
    for &id in &bases {
        let record = ds.image(id).expect("base id comes from the dataset");
        base_pixels.insert(id, store.load(record)?);
    }

    let first_image_id = ds.max_image_id() + 1;
    let planned: Vec<Result<PlannedImage>> = (0..count)
        .into_par_iter()
        .map(|k| {
            plan_one(
                k,
                ds,
                &by_image,
                &bases,
                &pool,
                &base_pixels,
                new_category,
                hist,
                constraints,
                seed,
                first_image_id,
            )
        })
        .collect();

    let mut outcome = AugmentOutcome {
        dataset: ds.clone(),
        manifest: Vec::new(),
        images: Vec::new(),
        events: Vec::new(),
    };
    let mut next_annotation_id = ds.max_annotation_id() + 1;
    for (k, planned) in planned.into_iter().enumerate() {
        let mut planned = planned?;
        let file_name = format!("aug_{k:05}.png");
        outcome.dataset.images.push(ImageRecord {
            id: planned.output_image_id,
            file_name: file_name.clone(),
            width: planned.width,
            height: planned.height,
        });
        for mut ann in planned.rewritten.drain(..) {
            ann.id = next_annotation_id;
            ann.image_id = planned.output_image_id;
            next_annotation_id += 1;
            outcome.dataset.annotations.push(ann);
        }
        for op in &planned.pastes {
            outcome.dataset.annotations.push(Annotation {
                id: next_annotation_id,
                image_id: planned.output_image_id,
                category_id: op.donor_category_id,
                bbox: op.placement,
                score: None,
            });
            next_annotation_id += 1;
            outcome.events.push(OcclusionEvent {
                target_category: new_category,
                occluder: Occluder::Synthetic,
                ratio: op.achieved_ratio,
                direction: op.achieved_direction,
                source: EventSource::Oracle,
            });
        }
        outcome.manifest.push(ManifestRecord {
            output_image_id: planned.output_image_id,
            output_file: file_name.clone(),
            base_image_id: planned.base_image_id,
            seed,
            stream: k as u64,
            pastes: planned
                .pastes
                .iter()
                .map(|op| ManifestPaste {
                    donor_annotation_id: op.donor_annotation_id,
                    donor_category_id: op.donor_category_id,
                    target_annotation_id: op.target_annotation_id,
                    placement: op.placement,
                    z: op.z,
                    sampled_ratio_lo: op.sampled.ratio_lo,
                    sampled_ratio_hi: op.sampled.ratio_hi,
                    sampled_direction: op.sampled.direction,
                    achieved_ratio: op.achieved_ratio,
                    achieved_direction: op.achieved_direction,
                })
                .collect(),
        });
        outcome.images.push(OutputImage {
            image_id: planned.output_image_id,
            file_name,
            pixels: planned.pixels,
        });
    }

    let report = outcome.dataset.validate();
    if !report.errors.is_empty() {
        return Err(Error::Integrity { report });
    }
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn plan_one(
    k: usize,
    ds: &Dataset,
    by_image: &BTreeMap<i64, Vec<&Annotation>>,
    bases: &[i64],
    pool: &DonorPool,
    base_pixels: &BTreeMap<i64, RgbImage>,
    new_category: i64,
    hist: &OcclusionHistogram,
    constraints: &Constraints,
    seed: u64,
    first_image_id: i64,
) -> Result<PlannedImage> {
    let mut rng = substream(seed, k as u64);
    let base_id = bases[k % bases.len()];
    let record = ds.image(base_id).expect("base id comes from the dataset");
    let pre_existing: Vec<Annotation> = by_image[&base_id].iter().map(|&a| a.clone()).collect();
    let targets: Vec<&Annotation> = pre_existing
        .iter()
        .filter(|a| a.category_id == new_category)
        .collect();

    for _retry in 0..IMAGE_RETRIES {
        let mut working = pre_existing.clone();
        let mut placements: Vec<Rect> = Vec::new();
        let mut pastes: Vec<PasteOp> = Vec::new();
        let mut synth_id = -1i64;

        for target in &targets {
            for _ in 0..SAMPLES_PER_TARGET {
                let sample = crate::occlusion::sample_point(hist, &mut rng)?;
                let Some(mut op) = plan_paste(
                    &working,
                    target,
                    &sample,
                    pool,
                    constraints,
                    record,
                    &mut rng,
                ) else {
                    continue;
                };
                // Joint visibility floor: every original box must stay at
                // least v_min visible under all accepted pastes combined,
                // not only under each paste alone.
                let mut stack = placements.clone();
                stack.push(op.placement);
                let survives = pre_existing.iter().all(|a| {
                    let (bbox, area) = uncovered_region(&a.bbox, &stack);
                    bbox.is_some() && area / a.bbox.area() >= constraints.v_min
                });
                if !survives {
                    continue;
                }
                op.z = pastes.len() as u32;
                placements.push(op.placement);
                working.push(Annotation {
                    id: synth_id,
                    image_id: base_id,
                    category_id: op.donor_category_id,
                    bbox: op.placement,
                    score: None,
                });
                synth_id -= 1;
                pastes.push(op);
                break;
            }
        }

        if pastes.is_empty() {
            continue;
        }

        let rewritten: Vec<Annotation> = pre_existing
            .iter()
            .map(|a| {
                let (bbox, _) = uncovered_region(&a.bbox, &placements);
                Annotation {
                    bbox: bbox.expect("joint visibility floor kept this box alive"),
                    ..a.clone()
                }
            })
            .collect();

        let output_image_id = first_image_id + k as i64;
        let plan = AugmentPlan {
            base_image_id: base_id,
            output_image_id,
            pastes,
            annotations: Vec::new(),
        };
        let pixels = apply_plan(&base_pixels[&base_id], &plan, pool);
        return Ok(PlannedImage {
            base_image_id: base_id,
            output_image_id,
            width: record.width,
            height: record.height,
            pastes: plan.pastes,
            rewritten,
            pixels,
        });
    }

    Err(Error::Infeasible {
        slot: k,
        detail: format!(
            "no constraint-satisfying paste for base image {base_id} after {IMAGE_RETRIES} \
             replans of {} target(s)",
            targets.len()
        ),
    })
}
