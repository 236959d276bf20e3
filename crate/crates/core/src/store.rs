//! Pixel access for dataset images: either a directory of files resolved by
//! `file_name`, or an in-memory map (used by tests and the synthesis
//! pipeline, which holds freshly rendered frames).

use std::collections::BTreeMap;
use std::path::PathBuf;

use image::RgbImage;

use crate::dataset::ImageRecord;
use crate::error::{Error, Result};

/// Freshly rendered raster awaiting a write to disk, keyed to its dataset
/// image record.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputImage {
    pub image_id: i64,
    pub file_name: String,
    pub pixels: RgbImage,
}

#[derive(Debug, Clone)]
pub enum ImageStore {
    Dir(PathBuf),
    Memory(BTreeMap<i64, RgbImage>),
}

impl ImageStore {
    pub fn dir(path: impl Into<PathBuf>) -> Self {
        ImageStore::Dir(path.into())
    }

    pub fn memory(images: BTreeMap<i64, RgbImage>) -> Self {
        ImageStore::Memory(images)
    }

    /// Loads the pixels for one image record, verifying dimensions against
    /// the record.
    pub fn load(&self, record: &ImageRecord) -> Result<RgbImage> {
        let pixels = match self {
            ImageStore::Dir(root) => {
                let path = root.join(&record.file_name);
                let raw = image::open(&path)
                    .map_err(|e| match e {
                        image::ImageError::IoError(io) => Error::io(path.clone(), io),
                        other => Error::ImageDecode {
                            path: path.clone(),
                            message: other.to_string(),
                        },
                    })?
                    .to_rgb8();
                raw
            }
            ImageStore::Memory(map) => map
                .get(&record.id)
                .cloned()
                .ok_or_else(|| Error::ImageDecode {
                    path: PathBuf::from(&record.file_name),
                    message: format!("image id {} not present in memory store", record.id),
                })?,
        };
        if pixels.width() != record.width || pixels.height() != record.height {
            return Err(Error::ImageDecode {
                path: PathBuf::from(&record.file_name),
                message: format!(
                    "pixel size {}x{} does not match record {}x{}",
                    pixels.width(),
                    pixels.height(),
                    record.width,
                    record.height
                ),
            });
        }
        Ok(pixels)
    }
}
