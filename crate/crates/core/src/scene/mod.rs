//! Synthetic fisheye shelf layers with exact ground truth.
//!
//! A scene is a single shelf layer filled with catalog items under
//! size-aware placement rules, viewed by a fisheye camera mounted at the
//! top center of the layer's open front edge. The simulator produces
//! visible-region annotations, per-pair occlusion events measured by
//! surface sampling (the oracle other modules are checked against), and
//! optional flat-color renderings.

mod camera;
mod place;
mod render;
mod visibility;

pub use camera::{project_fisheye, FisheyeCamera, Projection, SceneCamera};
pub use place::place_layer;
pub use render::{category_color, render, BACKGROUND};
pub use visibility::{
    segment_blocked, visible_annotations, Cuboid, DroppedObject, OracleAnnotation,
    OracleAnnotationSet,
};

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Annotation, Category, Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::occlusion::EventRecord;
use crate::rng::substream;
use crate::store::OutputImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cuboid,
    Cylinder,
}

/// Catalog-relative size family, derived from the catalog's medians:
/// `Tall` above 1.5x the median height, then `Small` below half the
/// median footprint area, everything else `Large`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Tall,
    Small,
    Large,
}

/// One product type as written in a scene config, dimensions in cm.
/// Repeat an entry to put several instances on the layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub category_id: i64,
    pub name: String,
    /// Footprint (width along x, depth along y).
    pub footprint: (f64, f64),
    pub height: f64,
    pub shape: Shape,
}

/// A catalog entry with its derived size class.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogItem {
    pub category_id: i64,
    pub name: String,
    pub footprint: (f64, f64),
    pub height: f64,
    pub shape: Shape,
    pub size_class: SizeClass,
}

const TALL_HEIGHT_FACTOR: f64 = 1.5;
const SMALL_AREA_FACTOR: f64 = 0.5;

/// Assigns size classes from the catalog's own medians, so the split is
/// scale free. Tall wins over small when both thresholds fire.
pub fn classify_catalog(entries: &[CatalogEntry]) -> Result<Vec<CatalogItem>> {
    for e in entries {
        let ok = e.footprint.0.is_finite()
            && e.footprint.1.is_finite()
            && e.height.is_finite()
            && e.footprint.0 > 0.0
            && e.footprint.1 > 0.0
            && e.height > 0.0;
        if !ok {
            return Err(Error::Config {
                message: format!(
                    "catalog entry for category {} has non-positive dimensions",
                    e.category_id
                ),
            });
        }
    }
    if entries.is_empty() {
        return Ok(Vec::new());
    }
    let median_height = median(entries.iter().map(|e| e.height));
    let median_area = median(entries.iter().map(|e| e.footprint.0 * e.footprint.1));
    Ok(entries
        .iter()
        .map(|e| {
            let area = e.footprint.0 * e.footprint.1;
            let size_class = if e.height > TALL_HEIGHT_FACTOR * median_height {
                SizeClass::Tall
            } else if area < SMALL_AREA_FACTOR * median_area {
                SizeClass::Small
            } else {
                SizeClass::Large
            };
            CatalogItem {
                category_id: e.category_id,
                name: e.name.clone(),
                footprint: e.footprint,
                height: e.height,
                shape: e.shape,
                size_class,
            }
        })
        .collect())
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One shelf layer, cm. The camera mounts at the top center of the open
/// front edge (x = width/2, y = 0); the left, right, and back sides have
/// walls that tall items stand against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerSpec {
    pub width: f64,
    pub depth: f64,
    /// How far from a wall a tall item's footprint may stand.
    pub wall_margin: f64,
}

impl Default for LayerSpec {
    fn default() -> Self {
        LayerSpec {
            width: 95.0,
            depth: 70.0,
            wall_margin: 6.0,
        }
    }
}

/// Footprint orientation: as cataloged, or turned a quarter turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    R0,
    R90,
}

/// An item standing on the layer at a footprint center position.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedObject {
    pub item: CatalogItem,
    pub position: (f64, f64),
    pub rotation: Rotation,
}

impl PlacedObject {
    pub fn footprint(&self) -> Rect {
        let (fw, fd) = match self.rotation {
            Rotation::R0 => self.item.footprint,
            Rotation::R90 => (self.item.footprint.1, self.item.footprint.0),
        };
        Rect {
            x: self.position.0 - fw / 2.0,
            y: self.position.1 - fd / 2.0,
            w: fw,
            h: fd,
        }
    }

    /// The occupied solid. Cylinders use their bounding cuboid.
    pub fn solid(&self) -> Cuboid {
        let fp = self.footprint();
        Cuboid {
            min: [fp.x, fp.y, 0.0],
            max: [fp.right(), fp.bottom(), self.item.height],
        }
    }
}

/// A fully placed layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub layer: LayerSpec,
    pub objects: Vec<PlacedObject>,
}

/// Complete synthesis settings. All defaults are stand-ins for the
/// unspecified real shelf and are meant to be overridden from config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub catalog: Vec<CatalogEntry>,
    pub layer: LayerSpec,
    pub camera: FisheyeCamera,
    /// Uniform half-range, cm, of the per-scene mount jitter around the
    /// front-top-center point.
    pub mount_jitter: f64,
    /// Surface sampling lattice side per face.
    pub grid: usize,
    /// Minimum visible fraction for an object to stay annotated.
    pub drop_threshold: f64,
    pub n_scenes: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            catalog: default_catalog(),
            layer: LayerSpec::default(),
            camera: FisheyeCamera::default(),
            mount_jitter: 2.0,
            grid: 24,
            drop_threshold: 0.05,
            n_scenes: 1,
        }
    }
}

fn entry(
    category_id: i64,
    name: &str,
    footprint: (f64, f64),
    height: f64,
    shape: Shape,
) -> CatalogEntry {
    CatalogEntry {
        category_id,
        name: name.into(),
        footprint,
        height,
        shape,
    }
}

/// A small mixed assortment: two tall bottles for the walls, cans and
/// snack boxes for the center, boxes, a jar, and bags for the periphery.
pub fn default_catalog() -> Vec<CatalogEntry> {
    vec![
        entry(1, "bottle", (6.0, 6.0), 24.0, Shape::Cylinder),
        entry(1, "bottle", (6.0, 6.0), 24.0, Shape::Cylinder),
        entry(2, "jar", (8.0, 8.0), 11.0, Shape::Cylinder),
        entry(3, "can", (4.5, 4.5), 10.0, Shape::Cylinder),
        entry(3, "can", (4.5, 4.5), 10.0, Shape::Cylinder),
        entry(4, "snack_box", (6.0, 4.0), 9.0, Shape::Cuboid),
        entry(4, "snack_box", (6.0, 4.0), 9.0, Shape::Cuboid),
        entry(5, "cereal_box", (10.0, 7.0), 12.0, Shape::Cuboid),
        entry(5, "cereal_box", (10.0, 7.0), 12.0, Shape::Cuboid),
        entry(5, "cereal_box", (10.0, 7.0), 12.0, Shape::Cuboid),
        entry(6, "bag", (16.0, 10.0), 13.0, Shape::Cuboid),
        entry(6, "bag", (16.0, 10.0), 13.0, Shape::Cuboid),
    ]
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        if !(self.layer.width > 0.0 && self.layer.depth > 0.0) {
            return Err(Error::Config {
                message: "layer extents must be positive".into(),
            });
        }
        if self.layer.wall_margin < 0.0 {
            return Err(Error::Config {
                message: "wall_margin must be non-negative".into(),
            });
        }
        if self.grid < 2 {
            return Err(Error::Config {
                message: format!("sampling grid must be at least 2, got {}", self.grid),
            });
        }
        if !(0.0..1.0).contains(&self.drop_threshold) {
            return Err(Error::Config {
                message: format!("drop_threshold must be in [0, 1), got {}", self.drop_threshold),
            });
        }
        if !(self.mount_jitter >= 0.0 && self.mount_jitter.is_finite()) {
            return Err(Error::Config {
                message: format!("mount_jitter must be non-negative, got {}", self.mount_jitter),
            });
        }
        let mut names: BTreeMap<i64, &str> = BTreeMap::new();
        for e in &self.catalog {
            if let Some(prev) = names.insert(e.category_id, e.name.as_str()) {
                if prev != e.name {
                    return Err(Error::Config {
                        message: format!(
                            "category {} is named both '{prev}' and '{}'",
                            e.category_id, e.name
                        ),
                    });
                }
            }
            if e.height >= self.camera.height {
                return Err(Error::Config {
                    message: format!(
                        "catalog item of category {} (height {}) reaches the camera mounted \
                         at {} above the floor",
                        e.category_id, e.height, self.camera.height
                    ),
                });
            }
        }
        classify_catalog(&self.catalog).map(|_| ())
    }
}

/// Product of a synthesis run. `images` is empty when rendering was
/// skipped (`synth_annotations`).
#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub dataset: Dataset,
    pub events: Vec<EventRecord>,
    pub images: Vec<OutputImage>,
    pub warnings: Vec<String>,
}

/// Scenes, annotations, and oracle events, without rendering rasters.
/// Suited to statistical runs over thousands of scenes.
pub fn synth_annotations(config: &SceneConfig, seed: u64) -> Result<SynthOutcome> {
    synth(config, seed, false)
}

/// Full synthesis: everything from `synth_annotations` plus one rendered
/// frame per scene.
pub fn synth_dataset(config: &SceneConfig, seed: u64) -> Result<SynthOutcome> {
    synth(config, seed, true)
}

struct SceneBuild {
    set: OracleAnnotationSet,
    object_categories: Vec<i64>,
    raster: Option<image::RgbImage>,
    warnings: Vec<String>,
}

fn synth(config: &SceneConfig, seed: u64, render_images: bool) -> Result<SynthOutcome> {
    config.validate()?;
    if config.n_scenes == 0 {
        return Err(Error::Config {
            message: "n_scenes must be at least 1".into(),
        });
    }
    let items = classify_catalog(&config.catalog)?;

    let builds: Vec<SceneBuild> = (0..config.n_scenes)
        .into_par_iter()
        .map(|index| build_scene(config, &items, seed, index, render_images))
        .collect();

    let mut categories: BTreeMap<i64, String> = BTreeMap::new();
    for e in &config.catalog {
        categories.entry(e.category_id).or_insert_with(|| e.name.clone());
    }
    let (width, height) = config.camera.image_size;

    let mut outcome = SynthOutcome {
        dataset: Dataset {
            images: Vec::new(),
            annotations: Vec::new(),
            categories: crate::dataset::CategoryTable::new(
                categories
                    .into_iter()
                    .map(|(id, name)| Category { id, name })
                    .collect(),
            ),
        },
        events: Vec::new(),
        images: Vec::new(),
        warnings: Vec::new(),
    };

    let mut next_annotation = 1i64;
    for (index, build) in builds.into_iter().enumerate() {
        let image_id = index as i64 + 1;
        let file_name = format!("scene_{index:05}.png");
        outcome.dataset.images.push(ImageRecord {
            id: image_id,
            file_name: file_name.clone(),
            width,
            height,
        });
        for ann in &build.set.annotations {
            outcome.dataset.annotations.push(Annotation {
                id: next_annotation,
                image_id,
                category_id: ann.category_id,
                bbox: ann.visible_bbox,
                score: None,
            });
            next_annotation += 1;
        }
        for event in &build.set.events {
            outcome.events.push(EventRecord::new(index as u64, event));
        }
        for dropped in &build.set.dropped {
            outcome.warnings.push(format!(
                "scene {index}: object {} (category {}) dropped: {}",
                dropped.object_index, dropped.category_id, dropped.reason
            ));
        }
        for w in build.warnings {
            outcome.warnings.push(format!("scene {index}: {w}"));
        }
        drop(build.object_categories);
        if let Some(raster) = build.raster {
            outcome.images.push(OutputImage {
                image_id,
                file_name,
                pixels: raster,
            });
        }
    }

    let report = outcome.dataset.validate();
    if !report.errors.is_empty() {
        return Err(Error::Integrity { report });
    }
    Ok(outcome)
}

fn build_scene(
    config: &SceneConfig,
    items: &[CatalogItem],
    seed: u64,
    index: usize,
    render_images: bool,
) -> SceneBuild {
    let mut rng = substream(seed, index as u64);
    let j = config.mount_jitter;
    let (jx, jy) = (rng.gen_range(-j..=j), rng.gen_range(-j..=j));
    let mount = [config.layer.width / 2.0 + jx, jy, config.camera.height];
    let (spec, warnings) = place_layer(items, &config.layer, &mut rng);
    let cam = SceneCamera::new(config.camera, mount);
    let set = visible_annotations(&spec, &cam, config.grid, config.drop_threshold);
    let raster = render_images.then(|| render(&spec, &cam));
    SceneBuild {
        set,
        object_categories: spec.objects.iter().map(|o| o.item.category_id).collect(),
        raster,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occlusion::{estimate_histogram, Direction, RatioBins};

    #[test]
    fn default_config_is_valid() {
        SceneConfig::default().validate().unwrap();
    }

    #[test]
    fn default_catalog_classifies_as_designed() {
        let items = classify_catalog(&default_catalog()).unwrap();
        let class_of = |id: i64| {
            items
                .iter()
                .find(|i| i.category_id == id)
                .map(|i| i.size_class)
                .unwrap()
        };
        assert_eq!(class_of(1), SizeClass::Tall);
        assert_eq!(class_of(3), SizeClass::Small);
        assert_eq!(class_of(4), SizeClass::Small);
        assert_eq!(class_of(2), SizeClass::Large);
        assert_eq!(class_of(5), SizeClass::Large);
        assert_eq!(class_of(6), SizeClass::Large);
    }

    #[test]
    fn classify_rejects_bad_dimensions() {
        let bad = vec![entry(1, "x", (0.0, 5.0), 10.0, Shape::Cuboid)];
        assert!(classify_catalog(&bad).is_err());
        assert!(classify_catalog(&[]).unwrap().is_empty());
    }

    #[test]
    fn single_object_scene_counts() {
        let config = SceneConfig {
            catalog: vec![entry(3, "can", (4.5, 4.5), 10.0, Shape::Cylinder)],
            n_scenes: 1,
            ..SceneConfig::default()
        };
        let out = synth_dataset(&config, 5).unwrap();
        assert_eq!(out.dataset.images.len(), 1);
        assert_eq!(out.dataset.annotations.len(), 1);
        assert!(out.events.is_empty());
        assert_eq!(out.images.len(), 1);
        assert_eq!(out.dataset.images[0].file_name, "scene_00000.png");
        assert!(out.dataset.validate().is_clean());
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let config = SceneConfig {
            n_scenes: 3,
            ..SceneConfig::default()
        };
        let a = synth_dataset(&config, 9).unwrap();
        let b = synth_dataset(&config, 9).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.events, b.events);
        for (x, y) in a.images.iter().zip(&b.images) {
            assert_eq!(x.pixels.as_raw(), y.pixels.as_raw());
        }
    }

    #[test]
    fn zero_scenes_is_a_config_error() {
        let config = SceneConfig {
            n_scenes: 0,
            ..SceneConfig::default()
        };
        assert!(matches!(
            synth_dataset(&config, 1),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn annotation_only_path_matches_full_synthesis() {
        let config = SceneConfig {
            n_scenes: 2,
            ..SceneConfig::default()
        };
        let fast = synth_annotations(&config, 21).unwrap();
        let full = synth_dataset(&config, 21).unwrap();
        assert_eq!(fast.dataset, full.dataset);
        assert_eq!(fast.events, full.events);
        assert!(fast.images.is_empty());
        assert_eq!(full.images.len(), 2);
    }

    #[test]
    fn occlusions_concentrate_below_targets() {
        let config = SceneConfig {
            n_scenes: 60,
            ..SceneConfig::default()
        };
        let out = synth_annotations(&config, 17).unwrap();
        let mut south = 0usize;
        let mut north = 0usize;
        for e in &out.events {
            match e.direction {
                Direction::S | Direction::SE | Direction::SW => south += 1,
                Direction::N | Direction::NE | Direction::NW => north += 1,
                _ => {}
            }
        }
        assert!(
            south > north,
            "{south} south-family vs {north} north-family events over {} total",
            out.events.len()
        );
        assert!(out.events.len() > 100, "too few events to judge");
    }

    #[test]
    fn oracle_events_feed_the_estimator_losslessly() {
        let config = SceneConfig {
            n_scenes: 10,
            ..SceneConfig::default()
        };
        let out = synth_annotations(&config, 3).unwrap();
        let events: Vec<_> = out
            .events
            .iter()
            .cloned()
            .map(|r| r.into_event().unwrap())
            .collect();
        let of_bottle = events.iter().filter(|e| e.target_category == 1).count();
        let hist = estimate_histogram(&events, 1, &RatioBins::default());
        assert_eq!(hist.total(), of_bottle as u64);
        assert!(of_bottle > 0);
    }

    #[test]
    fn tall_reaching_camera_height_is_rejected() {
        let mut config = SceneConfig::default();
        config.catalog.push(entry(9, "pillar", (6.0, 6.0), 42.0, Shape::Cuboid));
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("camera"), "{err}");
    }
}
