//! JSON dataset interchange: a strict subset of the common detection layout
//! with top-level `images`, `annotations`, and `categories` arrays.
//!
//! Parsing ignores unknown keys, enforces referential integrity, and reports
//! precise failure locations. Writing is deterministic: records sorted by id,
//! fixed key order, so equal datasets always serialize to equal bytes.

use serde::{Deserialize, Serialize};

use crate::dataset::{Annotation, Category, CategoryTable, Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::geom::Rect;

#[derive(Serialize, Deserialize)]
struct JsonRoot {
    images: Vec<JsonImage>,
    annotations: Vec<JsonAnnotation>,
    categories: Vec<JsonCategory>,
}

#[derive(Serialize, Deserialize)]
struct JsonImage {
    id: i64,
    file_name: String,
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
struct JsonAnnotation {
    id: i64,
    image_id: i64,
    category_id: i64,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonCategory {
    id: i64,
    name: String,
}

/// Parses a JSON dataset document. Fails on syntax errors (with byte
/// offset), schema mismatches (naming the field), and integrity violations
/// such as annotations referencing absent ids.
pub fn parse_coco(input: &[u8]) -> Result<Dataset> {
    let root: JsonRoot =
        serde_json::from_slice(input).map_err(|e| Error::from_json(e, input))?;

    let ds = Dataset {
        images: root
            .images
            .into_iter()
            .map(|im| ImageRecord {
                id: im.id,
                file_name: im.file_name,
                width: im.width,
                height: im.height,
            })
            .collect(),
        annotations: root
            .annotations
            .into_iter()
            .map(|a| Annotation {
                id: a.id,
                image_id: a.image_id,
                category_id: a.category_id,
                bbox: Rect {
                    x: a.bbox[0],
                    y: a.bbox[1],
                    w: a.bbox[2],
                    h: a.bbox[3],
                },
                score: a.score,
            })
            .collect(),
        categories: CategoryTable::new(
            root.categories
                .into_iter()
                .map(|c| Category {
                    id: c.id,
                    name: c.name,
                })
                .collect(),
        ),
    };

    let report = ds.validate();
    if !report.is_clean() {
        return Err(Error::Integrity { report });
    }
    Ok(ds)
}

/// Serializes a dataset to JSON bytes. Refuses datasets whose validation
/// report carries errors. Output is byte-identical for equal datasets
/// regardless of record order in memory.
pub fn write_coco(ds: &Dataset) -> Result<Vec<u8>> {
    let report = ds.validate();
    if !report.is_clean() {
        return Err(Error::Integrity { report });
    }

    let mut images: Vec<&ImageRecord> = ds.images.iter().collect();
    images.sort_by_key(|im| im.id);
    let mut annotations: Vec<&Annotation> = ds.annotations.iter().collect();
    annotations.sort_by_key(|a| a.id);

    let root = JsonRoot {
        images: images
            .into_iter()
            .map(|im| JsonImage {
                id: im.id,
                file_name: im.file_name.clone(),
                width: im.width,
                height: im.height,
            })
            .collect(),
        annotations: annotations
            .into_iter()
            .map(|a| JsonAnnotation {
                id: a.id,
                image_id: a.image_id,
                category_id: a.category_id,
                bbox: [a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h],
                score: a.score,
            })
            .collect(),
        categories: ds
            .categories
            .entries()
            .iter()
            .map(|c| JsonCategory {
                id: c.id,
                name: c.name.clone(),
            })
            .collect(),
    };

    let mut out = serde_json::to_vec_pretty(&root).map_err(|e| Error::Schema {
        message: e.to_string(),
    })?;
    out.push(b'\n');
    Ok(out)
}
