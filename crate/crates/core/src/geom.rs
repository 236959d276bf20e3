//! Axis-aligned rectangle primitives shared by every pipeline stage.
//!
//! Coordinates follow image convention: x grows rightward, y grows downward,
//! boxes are `[x, y, w, h]` with the origin at the top-left corner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box. Extents are kept positive and finite by `new`; code
/// paths that assemble rects arithmetically must uphold the same invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if ![x, y, w, h].iter().all(|v| v.is_finite()) || w <= 0.0 || h <= 0.0 {
            return Err(Error::DegenerateRect { w, h });
        }
        Ok(Rect { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.w > 0.0 && self.h > 0.0)
            || ![self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite())
    }

    /// Intersection with positive area, if any. Shared edges yield `None`.
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 > x0 && y1 > y0 {
            Some(Rect {
                x: x0,
                y: y0,
                w: x1 - x0,
                h: y1 - y0,
            })
        } else {
            None
        }
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        self.intersection(other).map_or(0.0, |r| r.area())
    }

    /// True when `other` lies entirely within `self` (closed comparison).
    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }

    /// Smallest rect covering both operands.
    pub fn hull(&self, other: &Rect) -> Rect {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        Rect {
            x: x0,
            y: y0,
            w: self.right().max(other.right()) - x0,
            h: self.bottom().max(other.bottom()) - y0,
        }
    }
}

/// Region of `target` left uncovered by `occluders`: exact area plus the
/// tight bounding box, computed on a compressed coordinate grid. `None` bbox
/// means the target is fully covered. Exact for any real-valued inputs; in
/// particular it reproduces pixel-level enumeration on integer rects.
pub fn uncovered_region(target: &Rect, occluders: &[Rect]) -> (Option<Rect>, f64) {
    let clipped: Vec<Rect> = occluders
        .iter()
        .filter_map(|o| target.intersection(o))
        .collect();
    if clipped.is_empty() {
        return (Some(*target), target.area());
    }

    let mut xs = vec![target.x, target.right()];
    let mut ys = vec![target.y, target.bottom()];
    for o in &clipped {
        xs.extend([o.x, o.right()]);
        ys.extend([o.y, o.bottom()]);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();

    let mut area = 0.0;
    let mut bbox: Option<(f64, f64, f64, f64)> = None;
    for ix in 0..xs.len() - 1 {
        let (x0, x1) = (xs[ix], xs[ix + 1]);
        let cx = (x0 + x1) / 2.0;
        for iy in 0..ys.len() - 1 {
            let (y0, y1) = (ys[iy], ys[iy + 1]);
            let cy = (y0 + y1) / 2.0;
            if clipped.iter().any(|o| o.contains_point(cx, cy)) {
                continue;
            }
            area += (x1 - x0) * (y1 - y0);
            bbox = Some(match bbox {
                None => (x0, y0, x1, y1),
                Some((bx0, by0, bx1, by1)) => (bx0.min(x0), by0.min(y0), bx1.max(x1), by1.max(y1)),
            });
        }
    }

    let rect = bbox.map(|(x0, y0, x1, y1)| Rect {
        x: x0,
        y: y0,
        w: x1 - x0,
        h: y1 - y0,
    });
    (rect, area)
}
