//! Flat-color ray-cast rendering of shelf scenes: one color per category,
//! uniform background, no lighting. The output exists for geometric
//! ground truth, not realism.

use image::{Rgb, RgbImage};

use crate::scene::visibility::Cuboid;
use crate::scene::{SceneCamera, SceneSpec};

pub const BACKGROUND: Rgb<u8> = Rgb([28, 28, 30]);

/// Deterministic per-category color: hues walk the golden-ratio sequence,
/// so nearby ids get far-apart hues.
pub fn category_color(category_id: i64) -> Rgb<u8> {
    let hue = (category_id as f64 * 0.618_033_988_749_895).rem_euclid(1.0) * 360.0;
    hsv(hue, 0.6, 0.85)
}

fn hsv(h: f64, s: f64, v: f64) -> Rgb<u8> {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0).rem_euclid(2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h {
        h if h < 60.0 => (c, x, 0.0),
        h if h < 120.0 => (x, c, 0.0),
        h if h < 180.0 => (0.0, c, x),
        h if h < 240.0 => (0.0, x, c),
        h if h < 300.0 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let byte = |f: f64| ((f + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Rgb([byte(r), byte(g), byte(b)])
}

/// First intersection parameter of the ray `origin + t * dir` with the
/// solid, for t > 0.
fn ray_entry(origin: [f64; 3], dir: [f64; 3], solid: &Cuboid) -> Option<f64> {
    let mut t_enter: f64 = 1e-9;
    let mut t_exit: f64 = f64::INFINITY;
    for axis in 0..3 {
        if dir[axis].abs() < 1e-12 {
            if origin[axis] <= solid.min[axis] || origin[axis] >= solid.max[axis] {
                return None;
            }
            continue;
        }
        let mut t0 = (solid.min[axis] - origin[axis]) / dir[axis];
        let mut t1 = (solid.max[axis] - origin[axis]) / dir[axis];
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter >= t_exit {
            return None;
        }
    }
    Some(t_enter)
}

/// Casts one ray per pixel center and paints the nearest solid's category
/// color, or the background where no solid (or no valid fisheye ray)
/// exists.
pub fn render(scene: &SceneSpec, cam: &SceneCamera) -> RgbImage {
    let (w, h) = cam.intrinsics.image_size;
    let solids: Vec<(Cuboid, Rgb<u8>)> = scene
        .objects
        .iter()
        .map(|o| (o.solid(), category_color(o.item.category_id)))
        .collect();
    let mut out = RgbImage::from_pixel(w, h, BACKGROUND);
    for py in 0..h {
        for px in 0..w {
            let Some(dir) = cam.ray_through(px as f64 + 0.5, py as f64 + 0.5) else {
                continue;
            };
            let mut best: Option<(f64, Rgb<u8>)> = None;
            for (solid, color) in &solids {
                if let Some(t) = ray_entry(cam.mount, dir, solid) {
                    if best.map_or(true, |(bt, _)| t < bt) {
                        best = Some((t, *color));
                    }
                }
            }
            if let Some((_, color)) = best {
                out.put_pixel(px, py, color);
            }
        }
    }
    out
}
