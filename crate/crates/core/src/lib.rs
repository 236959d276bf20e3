//! Dataset tooling for boxed object detection under heavy occlusion:
//! load and convert annotation formats, measure how objects cover each
//! other, synthesize shelf-like scenes with exact ground truth, paste
//! donor crops under occlusion constraints, and score detections.

pub mod augment;
pub mod coco;
pub mod dataset;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod occlusion;
pub mod rng;
pub mod scene;
pub mod store;
pub mod yolo;

pub use error::{Error, Result};
