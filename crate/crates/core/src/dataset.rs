//! In-memory dataset model: images, box annotations, and a category table,
//! with structural validation used by both loaders and writers.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::Rect;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: i64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

impl ImageRecord {
    /// Full image extent as a rect anchored at the origin.
    pub fn extent(&self) -> Rect {
        Rect {
            x: 0.0,
            y: 0.0,
            w: self.width as f64,
            h: self.height as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: i64,
    pub image_id: i64,
    pub category_id: i64,
    pub bbox: Rect,
    /// Optional detector confidence; ground-truth boxes leave it unset.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: i64,
    pub name: String,
}

/// Category list kept sorted by id. The rank of a category in this order is
/// its class index in text label formats.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryTable {
    entries: Vec<Category>,
}

impl CategoryTable {
    pub fn new(mut entries: Vec<Category>) -> Self {
        entries.sort_by_key(|c| c.id);
        CategoryTable { entries }
    }

    pub fn entries(&self) -> &[Category] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: i64) -> Option<&Category> {
        self.entries
            .binary_search_by_key(&id, |c| c.id)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Rank of `id` in ascending id order, used as the class index.
    pub fn class_index(&self, id: i64) -> Option<usize> {
        self.entries.binary_search_by_key(&id, |c| c.id).ok()
    }

    /// Category id at a given class index.
    pub fn id_at(&self, index: usize) -> Option<i64> {
        self.entries.get(index).map(|c| c.id)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|c| c.name.clone()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub images: Vec<ImageRecord>,
    pub annotations: Vec<Annotation>,
    pub categories: CategoryTable,
}

impl Dataset {
    pub fn image(&self, id: i64) -> Option<&ImageRecord> {
        self.images.iter().find(|im| im.id == id)
    }

    /// Annotations grouped per image id, each group in annotation-id order.
    pub fn annotations_by_image(&self) -> BTreeMap<i64, Vec<&Annotation>> {
        let mut map: BTreeMap<i64, Vec<&Annotation>> = BTreeMap::new();
        for ann in &self.annotations {
            map.entry(ann.image_id).or_default().push(ann);
        }
        for group in map.values_mut() {
            group.sort_by_key(|a| a.id);
        }
        map
    }

    pub fn max_image_id(&self) -> i64 {
        self.images.iter().map(|im| im.id).max().unwrap_or(0)
    }

    pub fn max_annotation_id(&self) -> i64 {
        self.annotations.iter().map(|a| a.id).max().unwrap_or(0)
    }

    /// Structural check. Errors break referential integrity or geometry;
    /// warnings flag suspicious but loadable records.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        let mut image_ids = BTreeMap::new();
        for im in &self.images {
            if image_ids.insert(im.id, ()).is_some() {
                report.error(format!("duplicate image id {}", im.id));
            }
            if im.width == 0 || im.height == 0 {
                report.error(format!(
                    "image {} has non-positive extent {}x{}",
                    im.id, im.width, im.height
                ));
            }
        }

        let mut category_ids = BTreeMap::new();
        let mut category_names = BTreeMap::new();
        for cat in self.categories.entries() {
            if category_ids.insert(cat.id, ()).is_some() {
                report.error(format!("duplicate category id {}", cat.id));
            }
            if category_names.insert(cat.name.clone(), ()).is_some() {
                report.error(format!("duplicate category name {:?}", cat.name));
            }
        }

        let mut annotation_ids = BTreeMap::new();
        let mut annotated = BTreeMap::new();
        for ann in &self.annotations {
            if annotation_ids.insert(ann.id, ()).is_some() {
                report.error(format!("duplicate annotation id {}", ann.id));
            }
            if ann.bbox.is_degenerate() {
                report.error(format!(
                    "annotation {} has degenerate bbox {:?}",
                    ann.id, ann.bbox
                ));
                continue;
            }
            if let Some(score) = ann.score {
                if !(0.0..=1.0).contains(&score) {
                    report.error(format!(
                        "annotation {} score {} outside [0, 1]",
                        ann.id, score
                    ));
                }
            }
            if !image_ids.contains_key(&ann.image_id) {
                report.error(format!(
                    "annotation {} references missing image id {}",
                    ann.id, ann.image_id
                ));
            } else {
                annotated.insert(ann.image_id, ());
                let extent = self.image(ann.image_id).unwrap().extent();
                if ann.bbox.intersection(&extent).is_none() {
                    report.error(format!(
                        "annotation {} bbox lies entirely outside image {}",
                        ann.id, ann.image_id
                    ));
                } else if !extent.contains_rect(&ann.bbox) {
                    report.warn(format!(
                        "annotation {} bbox extends outside image {}",
                        ann.id, ann.image_id
                    ));
                }
            }
            if !category_ids.contains_key(&ann.category_id) {
                report.error(format!(
                    "annotation {} references missing category id {}",
                    ann.id, ann.category_id
                ));
            }
        }

        for im in &self.images {
            if !annotated.contains_key(&im.id) {
                report.warn(format!("image {} has no annotations", im.id));
            }
        }

        report
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, message: String) {
        self.errors.push(message);
    }

    fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} error(s), {} warning(s)",
            self.errors.len(),
            self.warnings.len()
        )?;
        for e in &self.errors {
            write!(f, "; error: {e}")?;
        }
        for w in &self.warnings {
            write!(f, "; warning: {w}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_dataset() -> Dataset {
        Dataset {
            images: vec![ImageRecord {
                id: 1,
                file_name: "a.png".into(),
                width: 100,
                height: 200,
            }],
            annotations: vec![Annotation {
                id: 1,
                image_id: 1,
                category_id: 7,
                bbox: Rect::new(10.0, 20.0, 30.0, 40.0).unwrap(),
                score: None,
            }],
            categories: CategoryTable::new(vec![Category {
                id: 7,
                name: "box".into(),
            }]),
        }
    }

    #[test]
    fn valid_dataset_has_clean_report() {
        let report = sample_dataset().validate();
        assert!(report.is_clean());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn duplicate_annotation_id_is_single_error() {
        let mut ds = sample_dataset();
        let mut dup = ds.annotations[0].clone();
        dup.bbox = Rect::new(1.0, 1.0, 5.0, 5.0).unwrap();
        ds.annotations.push(dup);
        let report = ds.validate();
        assert_eq!(report.errors.len(), 1);
        assert!(report.errors[0].contains("duplicate annotation id 1"));
    }

    #[test]
    fn bbox_past_image_edge_is_warning_only() {
        let mut ds = sample_dataset();
        ds.annotations[0].bbox = Rect::new(75.0, 20.0, 30.0, 40.0).unwrap();
        let report = ds.validate();
        assert!(report.is_clean());
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("outside image"));
    }

    #[test]
    fn broken_reference_is_error_naming_id() {
        let mut ds = sample_dataset();
        ds.annotations[0].image_id = 99;
        let report = ds.validate();
        assert!(!report.is_clean());
        assert!(report.errors.iter().any(|e| e.contains("99")));
    }

    #[test]
    fn class_index_is_rank_in_ascending_id_order() {
        let table = CategoryTable::new(vec![
            Category {
                id: 30,
                name: "c".into(),
            },
            Category {
                id: 5,
                name: "a".into(),
            },
            Category {
                id: 12,
                name: "b".into(),
            },
        ]);
        assert_eq!(table.class_index(5), Some(0));
        assert_eq!(table.class_index(12), Some(1));
        assert_eq!(table.class_index(30), Some(2));
        assert_eq!(table.class_index(99), None);
    }
}
