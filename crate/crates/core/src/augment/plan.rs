//! Placement planning: find a donor placement that realizes a sampled
//! occlusion cell against a chosen target while respecting the scene's
//! other boxes.

use rand::Rng;

use crate::augment::{Constraints, DonorPool};
use crate::dataset::{Annotation, ImageRecord};
use crate::geom::{uncovered_region, Rect};
use crate::occlusion::{occlusion_direction, overlap_ratio, Direction, OcclusionSample};

/// One accepted paste: which donor goes where, what occlusion it realizes,
/// and which sample requested it. `z` is the composite order within the
/// output image, assigned by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct PasteOp {
    pub donor_index: usize,
    pub donor_annotation_id: i64,
    pub donor_category_id: i64,
    pub target_annotation_id: i64,
    pub placement: Rect,
    pub z: u32,
    pub achieved_ratio: f64,
    pub achieved_direction: Direction,
    pub sampled: OcclusionSample,
}

/// Visible remainder of `target` after subtracting `occluder`: the tight
/// bounding box of the remaining region (`None` when fully covered) and the
/// exact remaining area fraction. The remainder is generally not a
/// rectangle; the fraction reflects its true area, not the returned box.
pub fn clip_visible_bbox(target: &Rect, occluder: &Rect) -> (Option<Rect>, f64) {
    let (bbox, area) = uncovered_region(target, std::slice::from_ref(occluder));
    (bbox, area / target.area())
}

/// Ratio goals steer clear of exact bin edges and of configured caps by
/// this margin.
const GOAL_MARGIN: f64 = 0.002;
/// Fallback widening applied when a bin conflicts with the visibility cap;
/// kept under the downstream acceptance tolerance of 0.05.
const GOAL_SLACK: f64 = 0.04;
/// Angular jitter around the sampled octant's bisector, degrees. Stays well
/// inside the 22.5 degree octant half-width.
const ANGLE_JITTER_DEG: f64 = 15.0;
const BISECT_ITERS: u32 = 64;

/// Plans one paste realizing `sample` against `target`. Attempts up to
/// `constraints.max_attempts` donor/scale/goal draws; every candidate is
/// re-measured with the same operations used for reporting, and `None`
/// means no candidate satisfied all constraints:
///
/// - achieved overlap ratio inside the sampled bin (within slack),
/// - achieved direction equal to the sampled direction,
/// - target still at least `v_min` visible after this paste,
/// - placement fully inside the image,
/// - every other existing box covered at most `theta_overlap`.
pub fn plan_paste<R: Rng + ?Sized>(
    existing: &[Annotation],
    target: &Annotation,
    sample: &OcclusionSample,
    pool: &DonorPool,
    constraints: &Constraints,
    image: &ImageRecord,
    rng: &mut R,
) -> Option<PasteOp> {
    if pool.is_empty() {
        return None;
    }
    let goal_range = goal_interval(sample, constraints)?;
    let target_box = target.bbox;
    let (tcx, tcy) = target_box.center();

    for _ in 0..constraints.max_attempts {
        let donor_index = rng.gen_range(0..pool.len());
        let donor = pool.get(donor_index);
        let scale = rng.gen_range(constraints.scale_range.0..=constraints.scale_range.1);
        let r_goal = rng.gen_range(goal_range.0..=goal_range.1);

        let base_w = donor.source_rect.w;
        let base_h = donor.source_rect.h;

        let placement = if sample.direction == Direction::Center {
            // Near-concentric placement: the centroid offset is a small
            // jitter inside the CENTER radius and the ratio is reached by
            // solving for the donor scale.
            let epsilon = 0.1 * target_box.w.min(target_box.h);
            let magnitude = rng.gen_range(0.0..=0.3 * epsilon);
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let (cx, cy) = (tcx + magnitude * angle.cos(), tcy + magnitude * angle.sin());
            let ratio_at = |s: f64| {
                let rect = centered_rect(cx, cy, base_w * s, base_h * s);
                overlap_ratio(&target_box, &rect).expect("valid target box")
            };
            let (s_lo, s_hi) = constraints.scale_range;
            if ratio_at(s_lo) > r_goal || ratio_at(s_hi) < r_goal {
                continue;
            }
            // Overlap grows with scale, so feed the bisection the
            // complementary predicate (true below the crossing).
            let s = bisect(s_lo, s_hi, |s| ratio_at(s) <= r_goal);
            centered_rect(cx, cy, base_w * s, base_h * s)
        } else {
            // Slide the donor outward along the jittered octant bisector;
            // overlap shrinks monotonically with distance, so bisect on it.
            let (dw, dh) = (base_w * scale, base_h * scale);
            if dw < 1.0 || dh < 1.0 {
                continue;
            }
            let jitter = rng.gen_range(-ANGLE_JITTER_DEG..=ANGLE_JITTER_DEG);
            let angle = (bisector_degrees(sample.direction) + jitter).to_radians();
            let (dir_x, dir_y) = (angle.cos(), angle.sin());
            let ratio_at = |t: f64| {
                let rect = centered_rect(tcx + t * dir_x, tcy + t * dir_y, dw, dh);
                overlap_ratio(&target_box, &rect).expect("valid target box")
            };
            if ratio_at(0.0) < r_goal {
                continue;
            }
            let t_max = target_box.w + target_box.h + dw + dh;
            let t = bisect(0.0, t_max, |t| ratio_at(t) >= r_goal);
            centered_rect(tcx + t * dir_x, tcy + t * dir_y, dw, dh)
        };

        if let Some(op) = verify(
            existing,
            target,
            sample,
            constraints,
            image,
            donor_index,
            pool,
            &placement,
        ) {
            return Some(op);
        }
    }
    None
}

/// Interval to draw ratio goals from: the sampled bin shrunk by a margin,
/// capped by the visibility floor; when bin and cap conflict the interval
/// widens below the bin by bounded slack. `None` when even the widened
/// interval is empty, meaning the cell is structurally unreachable.
fn goal_interval(sample: &OcclusionSample, constraints: &Constraints) -> Option<(f64, f64)> {
    let cap = 1.0 - constraints.v_min - GOAL_MARGIN;
    let lo = sample.ratio_lo.max(GOAL_MARGIN);
    let hi = (sample.ratio_hi - GOAL_MARGIN).min(cap);
    if lo <= hi {
        return Some((lo, hi));
    }
    let lo = (sample.ratio_lo - GOAL_SLACK).max(GOAL_MARGIN);
    let hi = (sample.ratio_hi + GOAL_SLACK).min(cap);
    if lo <= hi {
        Some((lo, hi))
    } else {
        None
    }
}

fn centered_rect(cx: f64, cy: f64, w: f64, h: f64) -> Rect {
    Rect {
        x: cx - w / 2.0,
        y: cy - h / 2.0,
        w,
        h,
    }
}

/// Center angle of each octant in y-down image degrees (E = 0, S = 90).
fn bisector_degrees(direction: Direction) -> f64 {
    match direction {
        Direction::E => 0.0,
        Direction::SE => 45.0,
        Direction::S => 90.0,
        Direction::SW => 135.0,
        Direction::W => 180.0,
        Direction::NW => 225.0,
        Direction::N => 270.0,
        Direction::NE => 315.0,
        Direction::Center => unreachable!("CENTER has no bisector"),
    }
}

/// Largest `x` in `[lo, hi]` with `above(x)` true, to bisection precision.
/// `above` must be monotone (true then false).
fn bisect(mut lo: f64, mut hi: f64, above: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[allow(clippy::too_many_arguments)]
fn verify(
    existing: &[Annotation],
    target: &Annotation,
    sample: &OcclusionSample,
    constraints: &Constraints,
    image: &ImageRecord,
    donor_index: usize,
    pool: &DonorPool,
    placement: &Rect,
) -> Option<PasteOp> {
    if placement.is_degenerate() {
        return None;
    }
    let extent = image.extent();
    if !extent.contains_rect(placement) {
        return None;
    }

    let achieved_ratio = overlap_ratio(&target.bbox, placement).ok()?;
    let tolerance_lo = (sample.ratio_lo - GOAL_SLACK - GOAL_MARGIN).max(0.0);
    let tolerance_hi = sample.ratio_hi + GOAL_SLACK + GOAL_MARGIN;
    if !(tolerance_lo..=tolerance_hi).contains(&achieved_ratio) {
        return None;
    }

    let achieved_direction = occlusion_direction(&target.bbox, placement);
    if achieved_direction != sample.direction {
        return None;
    }

    let (visible_box, visible_fraction) = clip_visible_bbox(&target.bbox, placement);
    if visible_box.is_none() || visible_fraction < constraints.v_min {
        return None;
    }

    for other in existing {
        if other.id == target.id {
            continue;
        }
        let covered = overlap_ratio(&other.bbox, placement).ok()?;
        if covered > constraints.theta_overlap {
            return None;
        }
    }

    let donor = pool.get(donor_index);
    Some(PasteOp {
        donor_index,
        donor_annotation_id: donor.annotation_id,
        donor_category_id: donor.category_id,
        target_annotation_id: target.id,
        placement: *placement,
        z: 0,
        achieved_ratio,
        achieved_direction,
        sampled: *sample,
    })
}
