//! Detection scoring: IoU, confidence-ordered greedy matching, 101-point
//! interpolated average precision, and per-category rates that track how
//! often a category is missed outright or fired on with the wrong label.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Annotation, Dataset};
use crate::error::{Error, Result};
use crate::geom::Rect;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub image_id: i64,
    pub category_id: i64,
    pub bbox: Rect,
    pub confidence: f64,
}

/// Prediction interchange line: `{image_id, category_id, bbox, score}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: i64,
    pub category_id: i64,
    pub bbox: [f64; 4],
    pub score: f64,
}

impl PredictionRecord {
    pub fn new(pred: &Prediction) -> Self {
        PredictionRecord {
            image_id: pred.image_id,
            category_id: pred.category_id,
            bbox: [pred.bbox.x, pred.bbox.y, pred.bbox.w, pred.bbox.h],
            score: pred.confidence,
        }
    }

    pub fn into_prediction(self) -> Result<Prediction> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::Config {
                message: format!("prediction score {} outside [0, 1]", self.score),
            });
        }
        Ok(Prediction {
            image_id: self.image_id,
            category_id: self.category_id,
            bbox: Rect::new(self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3])?,
            confidence: self.score,
        })
    }
}

/// Intersection over union. Errors on boxes without area.
pub fn iou(a: &Rect, b: &Rect) -> Result<f64> {
    if a.is_degenerate() {
        return Err(Error::DegenerateRect { w: a.w, h: a.h });
    }
    if b.is_degenerate() {
        return Err(Error::DegenerateRect { w: b.w, h: b.h });
    }
    let inter = a.intersection_area(b);
    Ok(inter / (a.area() + b.area() - inter))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPred {
    /// Index into the predictions slice passed to `match_greedy`.
    pub prediction_index: usize,
    pub iou: f64,
    pub same_category: bool,
    pub confidence: f64,
}

/// Per ground-truth match outcomes, aligned with the input gt slice.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub per_gt: Vec<Option<MatchedPred>>,
}

/// Greedy one-to-one matching for a single image: predictions in descending
/// confidence order (ties by input order) each claim the still-unmatched
/// ground-truth box with the highest IoU at or above `iou_min`. With
/// `cross_category` set, label mismatches are allowed and recorded;
/// otherwise only same-category pairs are eligible.
pub fn match_greedy(
    gt: &[&Annotation],
    preds: &[&Prediction],
    iou_min: f64,
    cross_category: bool,
) -> MatchResult {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .partial_cmp(&preds[a].confidence)
            .expect("finite confidence")
            .then(a.cmp(&b))
    });

    let mut per_gt: Vec<Option<MatchedPred>> = vec![None; gt.len()];
    for pred_index in order {
        let pred = preds[pred_index];
        let mut best: Option<(usize, f64)> = None;
        for (gt_index, ann) in gt.iter().enumerate() {
            if per_gt[gt_index].is_some() {
                continue;
            }
            if !cross_category && ann.category_id != pred.category_id {
                continue;
            }
            let value = iou(&ann.bbox, &pred.bbox).expect("validated boxes");
            if value < iou_min {
                continue;
            }
            if best.map_or(true, |(_, best_value)| value > best_value) {
                best = Some((gt_index, value));
            }
        }
        if let Some((gt_index, value)) = best {
            per_gt[gt_index] = Some(MatchedPred {
                prediction_index: pred_index,
                iou: value,
                same_category: gt[gt_index].category_id == pred.category_id,
                confidence: pred.confidence,
            });
        }
    }
    MatchResult { per_gt }
}

/// Groups dataset ground truth and predictions per image in image-id order.
fn group_by_image<'a>(
    ds: &'a Dataset,
    preds: &'a [Prediction],
) -> Vec<(Vec<&'a Annotation>, Vec<&'a Prediction>)> {
    let gt_by_image = ds.annotations_by_image();
    let mut pred_by_image: BTreeMap<i64, Vec<&Prediction>> = BTreeMap::new();
    for p in preds {
        pred_by_image.entry(p.image_id).or_default().push(p);
    }
    let mut image_ids: Vec<i64> = ds.images.iter().map(|im| im.id).collect();
    image_ids.sort_unstable();
    image_ids
        .into_iter()
        .map(|id| {
            (
                gt_by_image.get(&id).cloned().unwrap_or_default(),
                pred_by_image.get(&id).cloned().unwrap_or_default(),
            )
        })
        .collect()
}

/// 101-point interpolated average precision for one category at one IoU
/// threshold. `None` when the dataset holds no ground truth of the category.
pub fn average_precision(
    ds: &Dataset,
    preds: &[Prediction],
    category: i64,
    iou_min: f64,
) -> Option<f64> {
    let groups = group_by_image(ds, preds);
    let gt_total: usize = groups
        .iter()
        .map(|(gt, _)| gt.iter().filter(|a| a.category_id == category).count())
        .sum();
    if gt_total == 0 {
        return None;
    }

    // Matching is confidence-greedy per image; running it once per image and
    // then reading true/false positives in global confidence order gives the
    // same labels as threshold-by-threshold evaluation because each
    // prediction's claim never depends on lower-confidence predictions.
    let mut flagged: Vec<(f64, usize, bool)> = Vec::new(); // (conf, global order, is_tp)
    let mut global_order = 0usize;
    for (gt, image_preds) in &groups {
        let gt_cat: Vec<&Annotation> = gt
            .iter()
            .copied()
            .filter(|a| a.category_id == category)
            .collect();
        let preds_cat: Vec<&Prediction> = image_preds
            .iter()
            .copied()
            .filter(|p| p.category_id == category)
            .collect();
        let result = match_greedy(&gt_cat, &preds_cat, iou_min, false);
        let mut tp = vec![false; preds_cat.len()];
        for matched in result.per_gt.iter().flatten() {
            tp[matched.prediction_index] = true;
        }
        for (pred, is_tp) in preds_cat.iter().zip(tp) {
            flagged.push((pred.confidence, global_order, is_tp));
            global_order += 1;
        }
    }
    flagged.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite confidence").then(a.1.cmp(&b.1)));

    let mut recalls = Vec::with_capacity(flagged.len());
    let mut precisions = Vec::with_capacity(flagged.len());
    let mut tp_count = 0usize;
    for (rank, (_, _, is_tp)) in flagged.iter().enumerate() {
        if *is_tp {
            tp_count += 1;
        }
        recalls.push(tp_count as f64 / gt_total as f64);
        precisions.push(tp_count as f64 / (rank + 1) as f64);
    }

    // Suffix max of precision: envelope[i] = best precision at recall >=
    // recalls[i].
    let mut envelope = precisions.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }

    let mut sum = 0.0;
    for i in 0..=100 {
        let anchor = i as f64 / 100.0;
        let pos = recalls.partition_point(|r| *r < anchor);
        if pos < envelope.len() {
            sum += envelope[pos];
        }
    }
    Some(sum / 101.0)
}

/// Mean AP over IoU thresholds 0.50 to 0.95 in steps of 0.05.
pub fn ap_coco(ds: &Dataset, preds: &[Prediction], category: i64) -> Option<f64> {
    let mut sum = 0.0;
    for step in 0..10 {
        let threshold = 0.5 + step as f64 * 0.05;
        sum += average_precision(ds, preds, category, threshold)?;
    }
    Some(sum / 10.0)
}

/// Fraction of images containing the category in which every one of its
/// boxes is matched by a same-category prediction with confidence at or
/// above `conf_min`. `None` when no image contains the category.
pub fn pass_rate(
    ds: &Dataset,
    preds: &[Prediction],
    category: i64,
    iou_min: f64,
    conf_min: f64,
) -> Option<f64> {
    let mut qualifying = 0usize;
    let mut passing = 0usize;
    for (gt, image_preds) in group_by_image(ds, preds) {
        let gt_cat: Vec<&Annotation> = gt
            .into_iter()
            .filter(|a| a.category_id == category)
            .collect();
        if gt_cat.is_empty() {
            continue;
        }
        qualifying += 1;
        let preds_eligible: Vec<&Prediction> = image_preds
            .into_iter()
            .filter(|p| p.category_id == category && p.confidence >= conf_min)
            .collect();
        let result = match_greedy(&gt_cat, &preds_eligible, iou_min, false);
        if result.per_gt.iter().all(Option::is_some) {
            passing += 1;
        }
    }
    if qualifying == 0 {
        None
    } else {
        Some(passing as f64 / qualifying as f64)
    }
}

/// Outcome of cross-category matching for one ground-truth box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GtOutcome {
    /// No prediction of any category reached `iou_min`.
    Unmatched,
    Matched {
        same_category: bool,
        confidence: f64,
    },
}

/// Cross-category match outcomes for every ground-truth box of `category`.
/// Matching runs over all boxes and all predictions of each image, so
/// predictions commit to their best target before outcomes are read off.
pub fn cross_outcomes(
    ds: &Dataset,
    preds: &[Prediction],
    category: i64,
    iou_min: f64,
) -> Vec<GtOutcome> {
    let mut outcomes = Vec::new();
    for (gt, image_preds) in group_by_image(ds, preds) {
        let result = match_greedy(&gt, &image_preds, iou_min, true);
        for (ann, matched) in gt.iter().zip(result.per_gt) {
            if ann.category_id != category {
                continue;
            }
            outcomes.push(match matched {
                None => GtOutcome::Unmatched,
                Some(m) => GtOutcome::Matched {
                    same_category: m.same_category,
                    confidence: m.confidence,
                },
            });
        }
    }
    outcomes
}

fn misdetected(outcome: &GtOutcome, tau: f64) -> bool {
    matches!(
        outcome,
        GtOutcome::Matched {
            same_category: false,
            confidence,
        } if *confidence >= tau
    )
}

/// `1 - MISDETECTED@tau / GT`: a box is misdetected when its best
/// cross-category match carries the wrong label with confidence >= tau.
/// Non-decreasing in tau. `None` when the category has no ground truth.
pub fn misdetect_rate(
    ds: &Dataset,
    preds: &[Prediction],
    category: i64,
    iou_min: f64,
    tau: f64,
) -> Option<f64> {
    let outcomes = cross_outcomes(ds, preds, category, iou_min);
    if outcomes.is_empty() {
        return None;
    }
    let mis = outcomes.iter().filter(|o| misdetected(o, tau)).count();
    Some(1.0 - mis as f64 / outcomes.len() as f64)
}

/// `(MISDETECTED@tau + unmatched) / GT`: boxes either confidently mislabeled
/// or missed by every prediction. Non-increasing in tau. `None` when the
/// category has no ground truth.
pub fn final_undistinguishable_rate(
    ds: &Dataset,
    preds: &[Prediction],
    category: i64,
    iou_min: f64,
    tau: f64,
) -> Option<f64> {
    let outcomes = cross_outcomes(ds, preds, category, iou_min);
    if outcomes.is_empty() {
        return None;
    }
    let mis = outcomes.iter().filter(|o| misdetected(o, tau)).count();
    let unmatched = outcomes
        .iter()
        .filter(|o| matches!(o, GtOutcome::Unmatched))
        .count();
    Some((mis + unmatched) as f64 / outcomes.len() as f64)
}

/// Histogram of prediction confidences for one category over fixed-width
/// bins spanning [0, 1]; a confidence of exactly 1.0 lands in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceHistogram {
    pub category: i64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

pub fn confidence_report(
    preds: &[Prediction],
    category: i64,
    bin_width: f64,
) -> Result<ConfidenceHistogram> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::Config {
            message: format!("bin width {bin_width} outside (0, 1]"),
        });
    }
    let bins = (1.0 / bin_width).ceil() as usize;
    let mut counts = vec![0u64; bins];
    for pred in preds.iter().filter(|p| p.category_id == category) {
        let bin = ((pred.confidence / bin_width) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    Ok(ConfidenceHistogram {
        category,
        bin_width,
        counts,
    })
}

impl ConfidenceHistogram {
    /// CSV rows `bin_lo,bin_hi,count` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, count) in self.counts.iter().enumerate() {
            let lo = i as f64 * self.bin_width;
            let hi = ((i + 1) as f64 * self.bin_width).min(1.0);
            out.push_str(&format!("{lo:.4},{hi:.4},{count}\n"));
        }
        out
    }
}

/// Full per-category scoring table. Optional values are `None` where the
/// metric is undefined (no qualifying ground truth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iou_min: f64,
    pub conf_min: f64,
    pub taus: Vec<f64>,
    pub images: usize,
    pub categories: Vec<CategoryMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category_id: i64,
    pub name: String,
    pub gt_boxes: usize,
    pub ap50: Option<f64>,
    pub ap_coco: Option<f64>,
    pub pass_rate: Option<f64>,
    /// Parallel to `taus` in the report.
    pub misdetect_rate: Vec<Option<f64>>,
    pub final_undistinguishable_rate: Vec<Option<f64>>,
}

pub fn metrics_report(
    ds: &Dataset,
    preds: &[Prediction],
    taus: &[f64],
    iou_min: f64,
    conf_min: f64,
) -> MetricsReport {
    let mut categories = Vec::new();
    for cat in ds.categories.entries() {
        let gt_boxes = ds
            .annotations
            .iter()
            .filter(|a| a.category_id == cat.id)
            .count();
        categories.push(CategoryMetrics {
            category_id: cat.id,
            name: cat.name.clone(),
            gt_boxes,
            ap50: average_precision(ds, preds, cat.id, iou_min),
            ap_coco: ap_coco(ds, preds, cat.id),
            pass_rate: pass_rate(ds, preds, cat.id, iou_min, conf_min),
            misdetect_rate: taus
                .iter()
                .map(|&tau| misdetect_rate(ds, preds, cat.id, iou_min, tau))
                .collect(),
            final_undistinguishable_rate: taus
                .iter()
                .map(|&tau| final_undistinguishable_rate(ds, preds, cat.id, iou_min, tau))
                .collect(),
        });
    }
    MetricsReport {
        iou_min,
        conf_min,
        taus: taus.to_vec(),
        images: ds.images.len(),
        categories,
    }
}

impl MetricsReport {
    /// CSV table, one row per category; undefined metrics print UNDEFINED.
    pub fn to_csv(&self) -> String {
        fn cell(v: &Option<f64>) -> String {
            v.map_or_else(|| "UNDEFINED".into(), |x| format!("{x:.6}"))
        }
        let mut header = String::from("category_id,name,gt_boxes,ap50,ap_coco,pass_rate");
        for tau in &self.taus {
            header.push_str(&format!(",misdetect@{tau:.2}"));
        }
        for tau in &self.taus {
            header.push_str(&format!(",final_undistinguishable@{tau:.2}"));
        }
        let mut out = header + "\n";
        for c in &self.categories {
            let mut row = format!(
                "{},{},{},{},{},{}",
                c.category_id,
                c.name,
                c.gt_boxes,
                cell(&c.ap50),
                cell(&c.ap_coco),
                cell(&c.pass_rate)
            );
            for v in &c.misdetect_rate {
                row.push(',');
                row.push_str(&cell(v));
            }
            for v in &c.final_undistinguishable_rate {
                row.push(',');
                row.push_str(&cell(v));
            }
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}
