//! Equidistant fisheye projection and the rig that mounts it over a shelf
//! layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equidistant fisheye intrinsics: a ray at angle theta from the optical
/// axis lands `focal * theta` pixels from the principal point, so the
/// whole half-space in front of the camera (theta up to 90 degrees) maps
/// into a disc of radius `focal * pi/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisheyeCamera {
    /// Mount height above the layer floor, cm.
    pub height: f64,
    /// Principal point in pixels.
    pub principal_point: (f64, f64),
    /// Pixels per radian of angle from the optical axis.
    pub focal: f64,
    /// Output raster size in pixels.
    pub image_size: (u32, u32),
}

impl Default for FisheyeCamera {
    fn default() -> Self {
        let side = 640.0;
        FisheyeCamera {
            height: 42.0,
            principal_point: (side / 2.0, side / 2.0),
            // The full 90 degree field reaches exactly the nearest border.
            focal: side / std::f64::consts::PI,
            image_size: (640, 640),
        }
    }
}

impl FisheyeCamera {
    /// Checks that the disc covered by view angles up to 90 degrees fits
    /// inside the image.
    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.image_size.0 as f64, self.image_size.1 as f64);
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(Error::Config {
                message: "camera image_size must be positive".into(),
            });
        }
        if !(self.focal.is_finite() && self.focal > 0.0) {
            return Err(Error::Config {
                message: format!("camera focal must be positive, got {}", self.focal),
            });
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(Error::Config {
                message: format!("camera height must be positive, got {}", self.height),
            });
        }
        let (px, py) = self.principal_point;
        if !(0.0..=w).contains(&px) || !(0.0..=h).contains(&py) {
            return Err(Error::Config {
                message: format!("principal point ({px}, {py}) outside the {w}x{h} image"),
            });
        }
        let border = px.min(w - px).min(py).min(h - py);
        let rim = self.focal * std::f64::consts::FRAC_PI_2;
        if rim > border + 1e-9 {
            return Err(Error::Config {
                message: format!(
                    "focal {} maps the 90 degree rim to radius {rim:.3}, beyond the nearest \
                     border distance {border:.3}",
                    self.focal
                ),
            });
        }
        Ok(())
    }
}

/// Result of projecting one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    InView { x: f64, y: f64 },
    OutOfView,
}

impl Projection {
    pub fn in_view(&self) -> Option<(f64, f64)> {
        match *self {
            Projection::InView { x, y } => Some((x, y)),
            Projection::OutOfView => None,
        }
    }
}

/// Projects a camera-frame point (x right, y image-down, z along the
/// optical axis) through the equidistant model. Points more than 90
/// degrees off axis, and the degenerate point at the optical center, are
/// out of view. The image azimuth equals the camera-frame azimuth
/// exactly: only the radius is remapped.
pub fn project_fisheye(point: [f64; 3], cam: &FisheyeCamera) -> Projection {
    let [x, y, z] = point;
    let radial = x.hypot(y);
    if radial == 0.0 {
        if z <= 0.0 {
            return Projection::OutOfView;
        }
        return Projection::InView {
            x: cam.principal_point.0,
            y: cam.principal_point.1,
        };
    }
    let theta = radial.atan2(z);
    if theta > std::f64::consts::FRAC_PI_2 {
        return Projection::OutOfView;
    }
    let scale = cam.focal * theta / radial;
    Projection::InView {
        x: cam.principal_point.0 + x * scale,
        y: cam.principal_point.1 + y * scale,
    }
}

/// A fisheye camera mounted over a layer, looking straight down.
///
/// The mount sits at the top center of the layer's open front edge
/// (world x = width/2, y = 0), which is how a shelf camera sees a loaded
/// layer: goods deeper in the layer appear toward the image top, goods
/// near the open edge toward the image bottom, so an object standing in
/// front of another covers its lower image region. World axes: x runs
/// along the layer width, y into the layer depth, z up from the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneCamera {
    pub intrinsics: FisheyeCamera,
    /// World position of the lens, cm.
    pub mount: [f64; 3],
}

impl SceneCamera {
    pub fn new(intrinsics: FisheyeCamera, mount: [f64; 3]) -> SceneCamera {
        SceneCamera { intrinsics, mount }
    }

    /// World to camera frame: image right = world +x, image down = world
    /// -y (toward the open front edge), optical axis = world -z.
    pub fn to_camera_frame(&self, p: [f64; 3]) -> [f64; 3] {
        [
            p[0] - self.mount[0],
            self.mount[1] - p[1],
            self.mount[2] - p[2],
        ]
    }

    pub fn project(&self, p: [f64; 3]) -> Projection {
        project_fisheye(self.to_camera_frame(p), &self.intrinsics)
    }

    /// World-frame direction of the viewing ray through an image point;
    /// `None` outside the fisheye disc. Inverse of `project` up to ray
    /// length.
    pub fn ray_through(&self, image_x: f64, image_y: f64) -> Option<[f64; 3]> {
        let dx = image_x - self.intrinsics.principal_point.0;
        let dy = image_y - self.intrinsics.principal_point.1;
        let r = dx.hypot(dy);
        let theta = r / self.intrinsics.focal;
        if theta > std::f64::consts::FRAC_PI_2 {
            return None;
        }
        if r == 0.0 {
            return Some([0.0, 0.0, -1.0]);
        }
        let (sin_t, cos_t) = theta.sin_cos();
        let (cx, cy, cz) = (sin_t * dx / r, sin_t * dy / r, cos_t);
        // Camera frame back to world: x stays, image-down is world -y,
        // optical axis is world -z.
        Some([cx, -cy, -cz])
    }
}
