//! Pixel composition for planned pastes, plus conventional whole-image
//! transforms (flip, scale, translate, hue shift) with box bookkeeping.

use image::{Rgb, RgbImage};

use crate::augment::{AugmentPlan, DonorPool};
use crate::dataset::Annotation;
use crate::geom::Rect;

/// Composites every paste of `plan` onto a copy of `base`, in ascending
/// z order, resampling each donor crop to its placement with
/// nearest-neighbor lookups at pixel centers. Pixels outside all
/// placements are untouched.
pub fn apply_plan(base: &RgbImage, plan: &AugmentPlan, pool: &DonorPool) -> RgbImage {
    let mut out = base.clone();
    let mut order: Vec<usize> = (0..plan.pastes.len()).collect();
    order.sort_by_key(|&i| plan.pastes[i].z);
    for i in order {
        let op = &plan.pastes[i];
        let donor = pool.get(op.donor_index);
        blit_scaled(&mut out, &donor.pixels, &op.placement);
    }
    out
}

fn blit_scaled(out: &mut RgbImage, donor: &RgbImage, placement: &Rect) {
    let (w, h) = (out.width() as i64, out.height() as i64);
    let x0 = placement.x.floor().max(0.0) as i64;
    let y0 = placement.y.floor().max(0.0) as i64;
    let x1 = (placement.right().ceil() as i64).min(w);
    let y1 = (placement.bottom().ceil() as i64).min(h);
    let (dw, dh) = (donor.width() as f64, donor.height() as f64);
    for py in y0..y1 {
        let cy = py as f64 + 0.5;
        if cy < placement.y || cy >= placement.bottom() {
            continue;
        }
        let sy = ((cy - placement.y) / placement.h * dh).floor() as i64;
        let sy = sy.clamp(0, donor.height() as i64 - 1) as u32;
        for px in x0..x1 {
            let cx = px as f64 + 0.5;
            if cx < placement.x || cx >= placement.right() {
                continue;
            }
            let sx = ((cx - placement.x) / placement.w * dw).floor() as i64;
            let sx = sx.clamp(0, donor.width() as i64 - 1) as u32;
            out.put_pixel(px as u32, py as u32, *donor.get_pixel(sx, sy));
        }
    }
}

/// Conventional transform settings. Defaults are all no-ops.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformParams {
    /// Mirror left-right before anything else.
    pub hflip: bool,
    /// Uniform resize factor applied to pixels and boxes.
    pub scale: f64,
    /// Shift in pixels, applied after scaling; vacated pixels are black.
    pub translate: (f64, f64),
    /// Hue rotation in degrees, applied last; geometry is unaffected.
    pub hue_shift: f64,
}

impl Default for TransformParams {
    fn default() -> Self {
        TransformParams {
            hflip: false,
            scale: 1.0,
            translate: (0.0, 0.0),
            hue_shift: 0.0,
        }
    }
}

/// Applies `params` to an image and its annotations in a fixed order:
/// flip, scale, translate, hue shift. Boxes are remapped alongside the
/// pixels; boxes pushed fully outside the frame are dropped with a
/// warning, and partially outside boxes are clipped to the frame.
pub fn geometric_photometric(
    image: &RgbImage,
    annotations: &[Annotation],
    params: &TransformParams,
) -> (RgbImage, Vec<Annotation>, Vec<String>) {
    let mut pixels = image.clone();
    let mut boxes: Vec<Annotation> = annotations.to_vec();
    let mut warnings = Vec::new();

    if params.hflip {
        let w = pixels.width() as f64;
        pixels = image::imageops::flip_horizontal(&pixels);
        for ann in &mut boxes {
            ann.bbox.x = w - ann.bbox.x - ann.bbox.w;
        }
    }

    if params.scale != 1.0 {
        let s = params.scale;
        let nw = ((pixels.width() as f64 * s).round() as u32).max(1);
        let nh = ((pixels.height() as f64 * s).round() as u32).max(1);
        pixels = image::imageops::resize(&pixels, nw, nh, image::imageops::FilterType::Nearest);
        for ann in &mut boxes {
            ann.bbox = Rect {
                x: ann.bbox.x * s,
                y: ann.bbox.y * s,
                w: ann.bbox.w * s,
                h: ann.bbox.h * s,
            };
        }
    }

    let (dx, dy) = (params.translate.0.round(), params.translate.1.round());
    if dx != 0.0 || dy != 0.0 {
        let (w, h) = (pixels.width(), pixels.height());
        let mut shifted = RgbImage::from_pixel(w, h, Rgb([0, 0, 0]));
        for py in 0..h {
            let sy = py as i64 - dy as i64;
            if sy < 0 || sy >= h as i64 {
                continue;
            }
            for px in 0..w {
                let sx = px as i64 - dx as i64;
                if sx < 0 || sx >= w as i64 {
                    continue;
                }
                shifted.put_pixel(px, py, *pixels.get_pixel(sx as u32, sy as u32));
            }
        }
        pixels = shifted;
        for ann in &mut boxes {
            ann.bbox.x += dx;
            ann.bbox.y += dy;
        }
    }

    // Clip boxes to the (possibly resized) frame and drop strays.
    let frame = Rect {
        x: 0.0,
        y: 0.0,
        w: pixels.width() as f64,
        h: pixels.height() as f64,
    };
    let mut kept = Vec::with_capacity(boxes.len());
    for ann in boxes {
        match frame.intersection(&ann.bbox) {
            Some(clipped) => {
                let mut ann = ann;
                ann.bbox = clipped;
                kept.push(ann);
            }
            None => warnings.push(format!(
                "annotation {} transformed out of frame and dropped",
                ann.id
            )),
        }
    }

    if params.hue_shift != 0.0 {
        for pixel in pixels.pixels_mut() {
            *pixel = shift_hue(*pixel, params.hue_shift);
        }
    }

    (pixels, kept, warnings)
}

/// Rotates a pixel's hue by `degrees` through HSV space, preserving
/// saturation and value.
fn shift_hue(rgb: Rgb<u8>, degrees: f64) -> Rgb<u8> {
    let (h, s, v) = rgb_to_hsv(rgb);
    let h = (h + degrees).rem_euclid(360.0);
    hsv_to_rgb(h, s, v)
}

fn rgb_to_hsv(Rgb([r, g, b]): Rgb<u8>) -> (f64, f64, f64) {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> Rgb<u8> {
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
    let to_byte = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Rgb([to_byte(r), to_byte(g), to_byte(b)])
}
