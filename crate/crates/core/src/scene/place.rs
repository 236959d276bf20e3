//! Size-aware greedy placement of catalog items on a shelf layer.

use rand::Rng;

use crate::geom::Rect;
use crate::scene::{CatalogItem, LayerSpec, PlacedObject, Rotation, SceneSpec, SizeClass};

/// Position draws per item before it is skipped.
const PLACE_ATTEMPTS: u32 = 40;

/// Half-width of the central region on each axis, as a fraction of the
/// axis: small items center there, large items keep their centroid
/// outside it.
const CENTRAL_FRACTION: f64 = 0.4;

/// Places items greedily in catalog order, rejecting positions whose
/// footprint would overlap an already placed one. Placement regions by
/// size class: tall items stand with their footprint within the wall
/// margin of the back wall, where they cannot shadow shorter goods (the
/// front edge is open for the camera); small items center in the middle
/// region of the layer; large items keep their centroid in the
/// peripheral band. Items that find no position after a fixed number of
/// draws are skipped and reported in the warnings.
pub fn place_layer<R: Rng + ?Sized>(
    catalog: &[CatalogItem],
    layer: &LayerSpec,
    rng: &mut R,
) -> (SceneSpec, Vec<String>) {
    let mut objects: Vec<PlacedObject> = Vec::new();
    let mut warnings = Vec::new();

    for (index, item) in catalog.iter().enumerate() {
        let mut placed = false;
        for _ in 0..PLACE_ATTEMPTS {
            let rotation = if rng.gen_bool(0.5) {
                Rotation::R0
            } else {
                Rotation::R90
            };
            let (fw, fd) = rotated_footprint(item, rotation);
            let Some(center) = draw_center(item.size_class, fw, fd, layer, rng) else {
                continue;
            };
            let candidate = footprint_rect(center, fw, fd);
            let overlaps = objects
                .iter()
                .any(|o| o.footprint().intersection_area(&candidate) > 0.0);
            if overlaps {
                continue;
            }
            objects.push(PlacedObject {
                item: item.clone(),
                position: center,
                rotation,
            });
            placed = true;
            break;
        }
        if !placed {
            warnings.push(format!(
                "catalog item {index} (category {}, {:?}) skipped: no free position after \
                 {PLACE_ATTEMPTS} draws",
                item.category_id, item.size_class
            ));
        }
    }

    (
        SceneSpec {
            layer: *layer,
            objects,
        },
        warnings,
    )
}

fn rotated_footprint(item: &CatalogItem, rotation: Rotation) -> (f64, f64) {
    match rotation {
        Rotation::R0 => (item.footprint.0, item.footprint.1),
        Rotation::R90 => (item.footprint.1, item.footprint.0),
    }
}

fn footprint_rect(center: (f64, f64), fw: f64, fd: f64) -> Rect {
    Rect {
        x: center.0 - fw / 2.0,
        y: center.1 - fd / 2.0,
        w: fw,
        h: fd,
    }
}

/// Draws one candidate footprint center for the size class, or `None`
/// when the class region cannot hold this footprint at all.
fn draw_center<R: Rng + ?Sized>(
    class: SizeClass,
    fw: f64,
    fd: f64,
    layer: &LayerSpec,
    rng: &mut R,
) -> Option<(f64, f64)> {
    let (hw, hd) = (fw / 2.0, fd / 2.0);
    let (lw, ld) = (layer.width, layer.depth);
    if fw > lw || fd > ld {
        return None;
    }
    match class {
        SizeClass::Tall => {
            // Against the back wall, footprint within wall_margin of it,
            // so tall items never stand in front of shorter ones.
            let m = layer.wall_margin;
            let cx = draw_in(rng, hw, lw - hw)?;
            let cy = draw_in(rng, (ld - hd - m).max(hd), ld - hd)?;
            Some((cx, cy))
        }
        SizeClass::Small => {
            let central = 0.5 - CENTRAL_FRACTION / 2.0;
            let cx = draw_in(rng, (central * lw).max(hw), ((1.0 - central) * lw).min(lw - hw))?;
            let cy = draw_in(rng, (central * ld).max(hd), ((1.0 - central) * ld).min(ld - hd))?;
            Some((cx, cy))
        }
        SizeClass::Large => {
            let cx = draw_in(rng, hw, lw - hw)?;
            let cy = draw_in(rng, hd, ld - hd)?;
            let central = 0.5 - CENTRAL_FRACTION / 2.0;
            let in_central = cx > central * lw
                && cx < (1.0 - central) * lw
                && cy > central * ld
                && cy < (1.0 - central) * ld;
            if in_central {
                None
            } else {
                Some((cx, cy))
            }
        }
    }
}

fn draw_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Option<f64> {
    if lo > hi {
        return None;
    }
    Some(rng.gen_range(lo..=hi))
}
