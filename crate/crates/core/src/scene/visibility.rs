//! Exact ground-truth visibility: surface sampling plus segment-solid
//! occlusion tests, yielding visible boxes, visible fractions, and true
//! occlusion events.

use crate::geom::Rect;
use crate::occlusion::{occlusion_direction, Direction, EventSource, OcclusionEvent, Occluder};
use crate::scene::{SceneCamera, SceneSpec};

/// Axis-aligned solid in world cm. Cylinders are represented by their
/// bounding cuboid throughout the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// True when the open segment between `from` and `to` passes through the
/// solid's interior. Touching a face or a corner without entering does
/// not block, and neither endpoint's own surface counts.
pub fn segment_blocked(from: [f64; 3], to: [f64; 3], solid: &Cuboid) -> bool {
    let mut t_enter: f64 = 1e-9;
    let mut t_exit: f64 = 1.0 - 1e-9;
    for axis in 0..3 {
        let d = to[axis] - from[axis];
        let (lo, hi) = (solid.min[axis], solid.max[axis]);
        if d.abs() < 1e-12 {
            if from[axis] <= lo || from[axis] >= hi {
                return false;
            }
            continue;
        }
        let mut t0 = (lo - from[axis]) / d;
        let mut t1 = (hi - from[axis]) / d;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter >= t_exit {
            return false;
        }
    }
    t_exit - t_enter > 1e-9
}

/// One object that stays in the output annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleAnnotation {
    pub object_index: usize,
    pub category_id: i64,
    pub visible_bbox: Rect,
    pub visible_fraction: f64,
}

/// One object excluded from the annotations, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedObject {
    pub object_index: usize,
    pub category_id: i64,
    pub reason: String,
}

/// Everything the oracle knows about one scene's visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleAnnotationSet {
    pub annotations: Vec<OracleAnnotation>,
    pub events: Vec<OcclusionEvent>,
    pub dropped: Vec<DroppedObject>,
}

/// Running bounds of projected points.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
    count: usize,
}

impl Bounds {
    fn new() -> Bounds {
        Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
            count: 0,
        }
    }

    fn add(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
        self.count += 1;
    }

    /// Tight box of the collected points, widened to a tiny positive
    /// extent when they are collinear.
    fn to_rect(self) -> Option<Rect> {
        if self.count == 0 {
            return None;
        }
        const MIN_EXTENT: f64 = 1e-3;
        Some(Rect {
            x: self.min_x,
            y: self.min_y,
            w: (self.max_x - self.min_x).max(MIN_EXTENT),
            h: (self.max_y - self.min_y).max(MIN_EXTENT),
        })
    }
}

/// Samples each object's top and four lateral faces on a `grid` x `grid`
/// lattice and tests every camera-to-sample segment against all other
/// solids. Produces, per object: the tight box of its visible samples'
/// projections, its visible fraction (visible samples over all samples),
/// and one event per occluder that blocks at least one of its samples,
/// with ratio = blocked samples / all samples and direction taken from
/// the two full projected boxes. Objects with no visible samples, or a
/// fraction under `drop_threshold`, move to the dropped list; their
/// events are still reported.
pub fn visible_annotations(
    scene: &SceneSpec,
    cam: &SceneCamera,
    grid: usize,
    drop_threshold: f64,
) -> OracleAnnotationSet {
    let grid = grid.max(1);
    let solids: Vec<Cuboid> = scene.objects.iter().map(|o| o.solid()).collect();
    let n = scene.objects.len();

    let mut visible_bounds: Vec<Bounds> = vec![Bounds::new(); n];
    let mut full_bounds: Vec<Bounds> = vec![Bounds::new(); n];
    let mut visible_count: Vec<usize> = vec![0; n];
    let mut total_count: Vec<usize> = vec![0; n];
    let mut blocked_pairs: Vec<Vec<usize>> = vec![vec![0; n]; n];

    for (i, solid) in solids.iter().enumerate() {
        for sample in face_samples(solid, grid) {
            total_count[i] += 1;
            let projected = cam.project(sample).in_view();
            if let Some((x, y)) = projected {
                full_bounds[i].add(x, y);
            }
            let mut blocked = false;
            for (j, other) in solids.iter().enumerate() {
                if j == i {
                    continue;
                }
                if segment_blocked(cam.mount, sample, other) {
                    blocked_pairs[i][j] += 1;
                    blocked = true;
                }
            }
            if !blocked {
                if let Some((x, y)) = projected {
                    visible_count[i] += 1;
                    visible_bounds[i].add(x, y);
                }
            }
        }
    }

    let mut set = OracleAnnotationSet {
        annotations: Vec::new(),
        events: Vec::new(),
        dropped: Vec::new(),
    };

    for (i, object) in scene.objects.iter().enumerate() {
        let fraction = visible_count[i] as f64 / total_count[i].max(1) as f64;
        match visible_bounds[i].to_rect() {
            Some(bbox) if fraction >= drop_threshold => {
                set.annotations.push(OracleAnnotation {
                    object_index: i,
                    category_id: object.item.category_id,
                    visible_bbox: bbox,
                    visible_fraction: fraction,
                });
            }
            Some(_) => set.dropped.push(DroppedObject {
                object_index: i,
                category_id: object.item.category_id,
                reason: format!(
                    "visible fraction {fraction:.4} below threshold {drop_threshold}"
                ),
            }),
            None => set.dropped.push(DroppedObject {
                object_index: i,
                category_id: object.item.category_id,
                reason: "no visible surface sample".into(),
            }),
        }
    }

    for i in 0..n {
        let Some(target_box) = full_bounds[i].to_rect() else {
            continue;
        };
        for j in 0..n {
            if i == j || blocked_pairs[i][j] == 0 {
                continue;
            }
            let Some(occluder_box) = full_bounds[j].to_rect() else {
                continue;
            };
            set.events.push(OcclusionEvent {
                target_category: scene.objects[i].item.category_id,
                occluder: Occluder::Category(scene.objects[j].item.category_id),
                ratio: blocked_pairs[i][j] as f64 / total_count[i] as f64,
                direction: direction_between(&target_box, &occluder_box),
                source: EventSource::Oracle,
            });
        }
    }

    set
}

fn direction_between(target: &Rect, occluder: &Rect) -> Direction {
    occlusion_direction(target, occluder)
}

/// Cell-center samples over the top face and the four lateral faces.
fn face_samples(solid: &Cuboid, grid: usize) -> Vec<[f64; 3]> {
    let mut points = Vec::with_capacity(5 * grid * grid);
    let steps: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect();
    let lerp = |lo: f64, hi: f64, t: f64| lo + (hi - lo) * t;
    for &u in &steps {
        for &v in &steps {
            let x = lerp(solid.min[0], solid.max[0], u);
            let y = lerp(solid.min[1], solid.max[1], v);
            let z = lerp(solid.min[2], solid.max[2], v);
            // Top, then the two x-normal and two y-normal faces.
            points.push([x, y, solid.max[2]]);
            points.push([solid.min[0], lerp(solid.min[1], solid.max[1], u), z]);
            points.push([solid.max[0], lerp(solid.min[1], solid.max[1], u), z]);
            points.push([x, solid.min[1], z]);
            points.push([x, solid.max[1], z]);
        }
    }
    points
}
