//! Plain-text label interchange: one text file per image, one line per box,
//! `class_index cx cy w h` with center/size normalized to the image extent
//! and printed with six decimal places.

use std::collections::BTreeMap;

use crate::dataset::{Annotation, CategoryTable, Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::geom::Rect;

/// One label file: the image it belongs to plus its text lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelFile {
    pub image_file_name: String,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelExport {
    /// One entry per image in ascending image-id order; images without
    /// annotations yield an entry with zero lines.
    pub files: Vec<LabelFile>,
    /// Category names in class-index order, for the companion classes file.
    pub classes: Vec<String>,
    /// Boxes clipped to their image during export are reported here.
    pub warnings: Vec<String>,
}

/// Converts a dataset to text labels. Boxes reaching outside their image are
/// clipped to it and recorded as warnings. The class index of a box is the
/// rank of its category id in ascending order.
pub fn export_yolo(ds: &Dataset) -> Result<LabelExport> {
    let report = ds.validate();
    if !report.is_clean() {
        return Err(Error::Integrity { report });
    }

    let by_image = ds.annotations_by_image();
    let mut images: Vec<&ImageRecord> = ds.images.iter().collect();
    images.sort_by_key(|im| im.id);

    let mut files = Vec::with_capacity(images.len());
    let mut warnings = Vec::new();
    for im in images {
        let extent = im.extent();
        let mut lines = Vec::new();
        for ann in by_image.get(&im.id).map(Vec::as_slice).unwrap_or(&[]) {
            // Clip only boxes that actually poke outside the image; deciding
            // by bound comparison (rather than comparing a reconstructed
            // rect) keeps in-bounds boxes bit-for-bit untouched.
            let out_of_bounds = ann.bbox.x < 0.0
                || ann.bbox.y < 0.0
                || ann.bbox.right() > extent.w
                || ann.bbox.bottom() > extent.h;
            let bbox = if !out_of_bounds {
                ann.bbox
            } else {
                match ann.bbox.intersection(&extent) {
                    Some(clipped) => {
                        warnings.push(format!(
                            "annotation {} clipped to image {} bounds",
                            ann.id, im.id
                        ));
                        clipped
                    }
                    None => {
                        // validate() rejects boxes fully outside their image,
                        // so this only guards rects degenerated by clipping.
                        warnings.push(format!(
                            "annotation {} dropped: no overlap with image {}",
                            ann.id, im.id
                        ));
                        continue;
                    }
                }
            };
            let class = ds
                .categories
                .class_index(ann.category_id)
                .expect("validated category id");
            let (cx, cy) = bbox.center();
            lines.push(format!(
                "{} {:.6} {:.6} {:.6} {:.6}",
                class,
                cx / im.width as f64,
                cy / im.height as f64,
                bbox.w / im.width as f64,
                bbox.h / im.height as f64,
            ));
        }
        files.push(LabelFile {
            image_file_name: im.file_name.clone(),
            lines,
        });
    }

    Ok(LabelExport {
        files,
        classes: ds.categories.names(),
        warnings,
    })
}

/// Rebuilds a dataset from text labels. `images` supplies pixel dimensions
/// (keyed by file name) and is retained in full, so images without label
/// lines come back with zero annotations. Annotation ids are assigned
/// sequentially from 1 in input order.
pub fn import_yolo(
    records: &[LabelFile],
    images: &[ImageRecord],
    categories: &CategoryTable,
) -> Result<Dataset> {
    let by_name: BTreeMap<&str, &ImageRecord> = images
        .iter()
        .map(|im| (im.file_name.as_str(), im))
        .collect();

    let mut annotations = Vec::new();
    let mut next_id = 1i64;
    for record in records {
        let im = by_name.get(record.image_file_name.as_str()).ok_or_else(|| {
            Error::LabelFormat {
                file: record.image_file_name.clone(),
                line: 0,
                message: "no matching image record".into(),
            }
        })?;
        for (line_index, line) in record.lines.iter().enumerate() {
            let line_no = line_index + 1;
            if line.trim().is_empty() {
                continue;
            }
            let ann = parse_line(line, line_no, im, categories)?;
            annotations.push(Annotation {
                id: next_id,
                ..ann
            });
            next_id += 1;
        }
    }

    Ok(Dataset {
        images: images.to_vec(),
        annotations,
        categories: categories.clone(),
    })
}

fn parse_line(
    line: &str,
    line_no: usize,
    im: &ImageRecord,
    categories: &CategoryTable,
) -> Result<Annotation> {
    let fail = |message: String| Error::LabelFormat {
        file: im.file_name.clone(),
        line: line_no,
        message,
    };

    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 5 {
        return Err(fail(format!("expected 5 fields, found {}", tokens.len())));
    }
    let class: usize = tokens[0]
        .parse()
        .map_err(|_| fail(format!("bad class index {:?}", tokens[0])))?;
    let category_id = categories
        .id_at(class)
        .ok_or_else(|| fail(format!("class index {class} out of range")))?;

    let mut values = [0.0f64; 4];
    for (slot, token) in values.iter_mut().zip(&tokens[1..]) {
        let v: f64 = token
            .parse()
            .map_err(|_| fail(format!("bad number {token:?}")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(fail(format!("value {v} outside [0, 1]")));
        }
        *slot = v;
    }
    let [cx, cy, w, h] = values;
    let bbox = Rect::new(
        (cx - w / 2.0) * im.width as f64,
        (cy - h / 2.0) * im.height as f64,
        w * im.width as f64,
        h * im.height as f64,
    )
    .map_err(|_| fail("non-positive box extent".into()))?;

    Ok(Annotation {
        id: 0, // reassigned by the caller
        image_id: im.id,
        category_id,
        bbox,
        score: None,
    })
}
