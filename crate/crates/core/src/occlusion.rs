//! Occlusion statistics over box annotations: how much of each object is
//! covered and from which side. Events are binned into a per-category
//! (ratio bin x direction) histogram that downstream stages sample from.

use std::fmt;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{Annotation, Dataset};
use crate::error::{Error, Result};
use crate::geom::Rect;

/// Compass octant of the occluder relative to the target, plus CENTER for
/// near-concentric pairs. Image convention: N means the occluder centroid is
/// offset toward negative y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
    #[serde(rename = "CENTER")]
    Center,
}

impl Direction {
    /// Canonical axis order for histogram columns and serialized matrices.
    pub const ALL: [Direction; 9] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
        Direction::Center,
    ];

    pub fn index(self) -> usize {
        Direction::ALL.iter().position(|d| *d == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::NE => "NE",
            Direction::E => "E",
            Direction::SE => "SE",
            Direction::S => "S",
            Direction::SW => "SW",
            Direction::W => "W",
            Direction::NW => "NW",
            Direction::Center => "CENTER",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Occluding entity: a real category or a synthetic paste.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occluder {
    Category(i64),
    Synthetic,
}

impl Serialize for Occluder {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Occluder::Category(id) => serializer.serialize_i64(*id),
            Occluder::Synthetic => serializer.serialize_str("synthetic"),
        }
    }
}

impl<'de> Deserialize<'de> for Occluder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Id(i64),
            Tag(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Id(id) => Ok(Occluder::Category(id)),
            Repr::Tag(tag) if tag == "synthetic" => Ok(Occluder::Synthetic),
            Repr::Tag(tag) => Err(D::Error::custom(format!(
                "occluder must be a category id or \"synthetic\", got {tag:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventSource {
    /// Reconstructed from visible-box overlaps; depth order unknown.
    Inferred,
    /// Emitted by the scene simulator with exact knowledge.
    Oracle,
}

/// One observation: `occluder` covers `ratio` of the target from `direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionEvent {
    pub target_category: i64,
    pub occluder: Occluder,
    pub ratio: f64,
    pub direction: Direction,
    pub source: EventSource,
}

/// Serialized event line: `{scene, target_category, occluder_category,
/// ratio, direction}`, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub scene: u64,
    pub target_category: i64,
    pub occluder_category: Occluder,
    pub ratio: f64,
    pub direction: Direction,
}

impl EventRecord {
    pub fn new(scene: u64, event: &OcclusionEvent) -> Self {
        EventRecord {
            scene,
            target_category: event.target_category,
            occluder_category: event.occluder,
            ratio: event.ratio,
            direction: event.direction,
        }
    }

    /// Event files are produced by the simulator, so records load as oracle
    /// events.
    pub fn into_event(self) -> Result<OcclusionEvent> {
        if !(0.0..=1.0).contains(&self.ratio) {
            return Err(Error::Config {
                message: format!("event ratio {} outside [0, 1]", self.ratio),
            });
        }
        Ok(OcclusionEvent {
            target_category: self.target_category,
            occluder: self.occluder_category,
            ratio: self.ratio,
            direction: self.direction,
            source: EventSource::Oracle,
        })
    }
}

/// Fraction of `a`'s area covered by `b`. Not symmetric.
pub fn overlap_ratio(a: &Rect, b: &Rect) -> Result<f64> {
    if a.is_degenerate() {
        return Err(Error::DegenerateRect { w: a.w, h: a.h });
    }
    Ok(a.intersection_area(b) / a.area())
}

/// Radius below which an occluder centroid counts as CENTER, relative to the
/// target's shorter side.
const CENTER_EPSILON_FACTOR: f64 = 0.1;

/// Direction of `occluder` relative to `target` by centroid offset. Within
/// `0.1 * min(target.w, target.h)` of the target centroid the result is
/// CENTER; otherwise the offset's octant, with ties on an octant boundary
/// resolved clockwise.
pub fn occlusion_direction(target: &Rect, occluder: &Rect) -> Direction {
    let (tx, ty) = target.center();
    let (ox, oy) = occluder.center();
    let (dx, dy) = (ox - tx, oy - ty);
    let epsilon = CENTER_EPSILON_FACTOR * target.w.min(target.h);
    if dx.hypot(dy) <= epsilon {
        return Direction::Center;
    }
    // atan2 in y-down coordinates: 0 deg = E, 90 deg = S. Adding half an
    // octant and flooring sends boundary angles to the next octant clockwise.
    let angle = dy.atan2(dx).to_degrees();
    let index = ((angle + 22.5).rem_euclid(360.0) / 45.0).floor() as usize % 8;
    const OCTANTS: [Direction; 8] = [
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
        Direction::N,
        Direction::NE,
    ];
    OCTANTS[index]
}

/// Knobs for event inference from co-visible boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferParams {
    /// Overlap ratios below this threshold are treated as noise.
    pub r_min: f64,
    /// Disjoint boxes separated by at most this many pixels along one axis
    /// (while overlapping on the other) yield ratio-zero adjacency events.
    pub adjacency_gap: f64,
}

impl Default for InferParams {
    fn default() -> Self {
        InferParams {
            r_min: 0.05,
            adjacency_gap: 2.0,
        }
    }
}

/// Derives occlusion events from the annotations of one image. Visible-box
/// overlap cannot reveal which box is in front, so both ordered pairs are
/// emitted for every qualifying overlap.
pub fn infer_events(annotations: &[&Annotation], params: &InferParams) -> Vec<OcclusionEvent> {
    debug_assert!(
        annotations.windows(2).all(|w| w[0].image_id == w[1].image_id),
        "infer_events expects annotations of a single image"
    );
    let mut events = Vec::new();
    for target in annotations {
        for occluder in annotations {
            if std::ptr::eq(*target, *occluder) || target.id == occluder.id {
                continue;
            }
            let ratio = overlap_ratio(&target.bbox, &occluder.bbox)
                .expect("validated annotation bbox");
            if ratio >= params.r_min {
                events.push(OcclusionEvent {
                    target_category: target.category_id,
                    occluder: Occluder::Category(occluder.category_id),
                    ratio,
                    direction: occlusion_direction(&target.bbox, &occluder.bbox),
                    source: EventSource::Inferred,
                });
            } else if ratio == 0.0 && adjacent(&target.bbox, &occluder.bbox, params.adjacency_gap)
            {
                events.push(OcclusionEvent {
                    target_category: target.category_id,
                    occluder: Occluder::Category(occluder.category_id),
                    ratio: 0.0,
                    direction: occlusion_direction(&target.bbox, &occluder.bbox),
                    source: EventSource::Inferred,
                });
            }
        }
    }
    events
}

/// Runs `infer_events` over every image of a dataset; per-image groups are
/// independent and results are concatenated in image-id order.
pub fn infer_events_dataset(ds: &Dataset, params: &InferParams) -> Vec<OcclusionEvent> {
    ds.annotations_by_image()
        .values()
        .flat_map(|group| infer_events(group, params))
        .collect()
}

/// Disjoint boxes within `gap` of each other along one axis while sharing
/// extent on the other axis.
fn adjacent(a: &Rect, b: &Rect, gap: f64) -> bool {
    let gap_x = (b.x - a.right()).max(a.x - b.right());
    let gap_y = (b.y - a.bottom()).max(a.y - b.bottom());
    let overlap_x = a.right().min(b.right()) - a.x.max(b.x);
    let overlap_y = a.bottom().min(b.bottom()) - a.y.max(b.y);
    (gap_x >= 0.0 && gap_x <= gap && overlap_y > 0.0)
        || (gap_y >= 0.0 && gap_y <= gap && overlap_x > 0.0)
}

/// Ascending ratio-bin edges spanning [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RatioBins {
    edges: Vec<f64>,
}

impl RatioBins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        let ascending = edges.windows(2).all(|w| w[0] < w[1]);
        if edges.len() < 2
            || !ascending
            || edges.first() != Some(&0.0)
            || edges.last() != Some(&1.0)
            || !edges.iter().all(|e| e.is_finite())
        {
            return Err(Error::Config {
                message: format!("ratio bin edges must ascend from 0.0 to 1.0, got {edges:?}"),
            });
        }
        Ok(RatioBins { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    /// Bin of a ratio in [0, 1]. Bins are half-open `[lo, hi)`; the final
    /// bin also includes 1.0.
    pub fn bin_of(&self, ratio: f64) -> usize {
        debug_assert!((0.0..=1.0).contains(&ratio));
        let raw = self.edges.partition_point(|e| *e <= ratio);
        raw.saturating_sub(1).min(self.count() - 1)
    }

    pub fn bounds(&self, bin: usize) -> (f64, f64) {
        (self.edges[bin], self.edges[bin + 1])
    }
}

impl Default for RatioBins {
    fn default() -> Self {
        RatioBins::new(vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]).unwrap()
    }
}

impl TryFrom<Vec<f64>> for RatioBins {
    type Error = Error;
    fn try_from(edges: Vec<f64>) -> Result<Self> {
        RatioBins::new(edges)
    }
}

impl From<RatioBins> for Vec<f64> {
    fn from(bins: RatioBins) -> Vec<f64> {
        bins.edges
    }
}

/// Event counts for one target category over (ratio bin x direction) cells.
/// A histogram with zero total is a valid "empty" value: it serializes and
/// reports, but cannot be sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionHistogram {
    category: i64,
    bins: RatioBins,
    counts: Vec<[u64; 9]>,
    total: u64,
}

impl OcclusionHistogram {
    pub fn category(&self) -> i64 {
        self.category
    }

    pub fn bins(&self) -> &RatioBins {
        &self.bins
    }

    pub fn counts(&self) -> &[[u64; 9]] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, bin: usize, direction: Direction) -> u64 {
        self.counts[bin][direction.index()]
    }

    /// Cell probabilities, summing to 1. None for an empty histogram.
    pub fn probabilities(&self) -> Option<Vec<[f64; 9]>> {
        if self.is_empty() {
            return None;
        }
        let total = self.total as f64;
        Some(
            self.counts
                .iter()
                .map(|row| {
                    let mut out = [0.0; 9];
                    for (slot, &count) in out.iter_mut().zip(row.iter()) {
                        *slot = count as f64 / total;
                    }
                    out
                })
                .collect(),
        )
    }

    pub fn from_counts(category: i64, bins: RatioBins, counts: Vec<[u64; 9]>) -> Result<Self> {
        if counts.len() != bins.count() {
            return Err(Error::Config {
                message: format!(
                    "histogram has {} rows for {} bins",
                    counts.len(),
                    bins.count()
                ),
            });
        }
        let total = counts.iter().flatten().sum();
        Ok(OcclusionHistogram {
            category,
            bins,
            counts,
            total,
        })
    }
}

/// Histogram interchange schema: `{category, bin_edges, directions, counts}`.
#[derive(Serialize, Deserialize)]
struct HistogramRepr {
    category: i64,
    bin_edges: Vec<f64>,
    directions: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl Serialize for OcclusionHistogram {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        HistogramRepr {
            category: self.category,
            bin_edges: self.bins.edges.clone(),
            directions: Direction::ALL.iter().map(|d| d.name().to_string()).collect(),
            counts: self.counts.iter().map(|row| row.to_vec()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OcclusionHistogram {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = HistogramRepr::deserialize(deserializer)?;
        let expected: Vec<&str> = Direction::ALL.iter().map(|d| d.name()).collect();
        if repr.directions != expected {
            return Err(D::Error::custom(format!(
                "direction axis must be {expected:?}, got {:?}",
                repr.directions
            )));
        }
        let bins = RatioBins::new(repr.bin_edges).map_err(D::Error::custom)?;
        let counts: Vec<[u64; 9]> = repr
            .counts
            .iter()
            .map(|row| {
                <[u64; 9]>::try_from(row.as_slice())
                    .map_err(|_| D::Error::custom(format!("count row has {} columns", row.len())))
            })
            .collect::<std::result::Result<_, _>>()?;
        OcclusionHistogram::from_counts(repr.category, bins, counts).map_err(D::Error::custom)
    }
}

/// Bins all events whose target matches `category`.
pub fn estimate_histogram(
    events: &[OcclusionEvent],
    category: i64,
    bins: &RatioBins,
) -> OcclusionHistogram {
    let mut counts = vec![[0u64; 9]; bins.count()];
    let mut total = 0u64;
    for event in events.iter().filter(|e| e.target_category == category) {
        counts[bins.bin_of(event.ratio)][event.direction.index()] += 1;
        total += 1;
    }
    OcclusionHistogram {
        category,
        bins: bins.clone(),
        counts,
        total,
    }
}

/// One draw from a histogram: the sampled cell's ratio interval and
/// direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionSample {
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub direction: Direction,
}

/// Multinomial draw over histogram cells proportional to counts. Cells are
/// scanned in canonical (bin-major, direction order) order, so a given rng
/// state always yields the same cell.
pub fn sample_point<R: Rng + ?Sized>(
    hist: &OcclusionHistogram,
    rng: &mut R,
) -> Result<OcclusionSample> {
    if hist.is_empty() {
        return Err(Error::EmptyHistogram {
            category: hist.category,
        });
    }
    let mut remaining = rng.gen_range(0..hist.total);
    for (bin, row) in hist.counts.iter().enumerate() {
        for (direction, &count) in Direction::ALL.iter().zip(row.iter()) {
            if remaining < count {
                let (ratio_lo, ratio_hi) = hist.bins.bounds(bin);
                return Ok(OcclusionSample {
                    ratio_lo,
                    ratio_hi,
                    direction: *direction,
                });
            }
            remaining -= count;
        }
    }
    unreachable!("cumulative counts cover the sampled range");
}

/// Total-variation distance between two histograms over identical bins:
/// half the L1 distance between their cell probability vectors.
pub fn total_variation(a: &OcclusionHistogram, b: &OcclusionHistogram) -> Result<f64> {
    if a.bins != b.bins {
        return Err(Error::Config {
            message: "total variation requires identical bin edges".into(),
        });
    }
    let pa = a.probabilities().ok_or(Error::EmptyHistogram {
        category: a.category,
    })?;
    let pb = b.probabilities().ok_or(Error::EmptyHistogram {
        category: b.category,
    })?;
    let mut sum = 0.0;
    for (row_a, row_b) in pa.iter().zip(pb.iter()) {
        for (va, vb) in row_a.iter().zip(row_b.iter()) {
            sum += (va - vb).abs();
        }
    }
    Ok(sum / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(x: f64, y: f64, w: f64, h: f64) -> Rect {
        Rect::new(x, y, w, h).unwrap()
    }

    fn ann(id: i64, category: i64, bbox: Rect) -> Annotation {
        Annotation {
            id,
            image_id: 1,
            category_id: category,
            bbox,
            score: None,
        }
    }

    #[test]
    fn overlap_ratio_identical_is_one() {
        let a = r(0.0, 0.0, 10.0, 10.0);
        assert_eq!(overlap_ratio(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn overlap_ratio_disjoint_is_zero() {
        let a = r(0.0, 0.0, 10.0, 10.0);
        let b = r(20.0, 0.0, 10.0, 10.0);
        assert_eq!(overlap_ratio(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn overlap_ratio_half() {
        let a = r(0.0, 0.0, 10.0, 10.0);
        let b = r(5.0, 0.0, 10.0, 10.0);
        assert_eq!(overlap_ratio(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn overlap_ratio_is_asymmetric() {
        let a = r(0.0, 0.0, 10.0, 10.0);
        let b = r(5.0, 0.0, 20.0, 10.0);
        assert_eq!(overlap_ratio(&a, &b).unwrap(), 0.5);
        assert_eq!(overlap_ratio(&b, &a).unwrap(), 0.25);
    }

    #[test]
    fn overlap_ratio_rejects_degenerate_target() {
        let a = Rect {
            x: 0.0,
            y: 0.0,
            w: 0.0,
            h: 10.0,
        };
        let b = r(0.0, 0.0, 10.0, 10.0);
        assert!(overlap_ratio(&a, &b).is_err());
    }

    #[test]
    fn direction_octants() {
        let target = r(0.0, 0.0, 100.0, 100.0);
        let below = r(30.0, 120.0, 40.0, 40.0); // centroid (50, 140): straight down
        assert_eq!(occlusion_direction(&target, &below), Direction::S);
        let right = r(120.0, 30.0, 40.0, 40.0);
        assert_eq!(occlusion_direction(&target, &right), Direction::E);
        let up_left = r(-60.0, -60.0, 40.0, 40.0);
        assert_eq!(occlusion_direction(&target, &up_left), Direction::NW);
    }

    #[test]
    fn direction_center_within_epsilon() {
        let target = r(0.0, 0.0, 100.0, 100.0);
        // epsilon = 10; offset (2, 3) is well inside.
        let occluder = r(32.0, 33.0, 40.0, 40.0);
        assert_eq!(occlusion_direction(&target, &occluder), Direction::Center);
        // Exact centroid tie.
        assert_eq!(
            occlusion_direction(&target, &r(25.0, 25.0, 50.0, 50.0)),
            Direction::Center
        );
    }

    #[test]
    fn direction_boundary_ties_go_clockwise() {
        let target = r(-50.0, -50.0, 100.0, 100.0); // centroid at origin
        // Offset at exactly 22.5 degrees (E/SE boundary): tan(22.5) = sqrt(2)-1.
        let t = std::f64::consts::SQRT_2 - 1.0;
        let occluder = r(100.0 - 5.0, 100.0 * t - 5.0, 10.0, 10.0);
        assert_eq!(occlusion_direction(&target, &occluder), Direction::SE);
        // N/NE boundary (-67.5 degrees) resolves clockwise to NE.
        let occluder = r(100.0 * t - 5.0, -100.0 - 5.0, 10.0, 10.0);
        assert_eq!(occlusion_direction(&target, &occluder), Direction::NE);
    }

    #[test]
    fn infer_events_emits_both_ordered_pairs() {
        let a = ann(1, 10, r(0.0, 0.0, 10.0, 10.0));
        let b = ann(2, 20, r(5.0, 0.0, 10.0, 10.0));
        let events = infer_events(&[&a, &b], &InferParams::default());
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].target_category, 10);
        assert_eq!(events[0].occluder, Occluder::Category(20));
        assert_eq!(events[0].ratio, 0.5);
        assert_eq!(events[0].direction, Direction::E);
        assert_eq!(events[0].source, EventSource::Inferred);
        assert_eq!(events[1].target_category, 20);
        assert_eq!(events[1].direction, Direction::W);
    }

    #[test]
    fn infer_events_adjacency_within_gap() {
        let a = ann(1, 10, r(0.0, 0.0, 10.0, 10.0));
        let b = ann(2, 20, r(11.0, 0.0, 10.0, 10.0)); // 1px gap along x
        let events = infer_events(&[&a, &b], &InferParams::default());
        assert_eq!(events.len(), 2);
        assert!(events.iter().all(|e| e.ratio == 0.0));
        assert_eq!(events[0].direction, Direction::E);
    }

    #[test]
    fn infer_events_ignores_distant_and_subthreshold_pairs() {
        let a = ann(1, 10, r(0.0, 0.0, 10.0, 10.0));
        let far = ann(2, 20, r(50.0, 50.0, 10.0, 10.0));
        assert!(infer_events(&[&a, &far], &InferParams::default()).is_empty());
        // 2% overlap sits below r_min and is not disjoint: no event.
        let graze = ann(3, 20, r(9.8, 9.0, 10.0, 10.0));
        assert!(infer_events(&[&a, &graze], &InferParams::default()).is_empty());
        // Diagonal neighbors have gaps on both axes but overlap on neither.
        let corner = ann(4, 20, r(11.0, 11.0, 10.0, 10.0));
        assert!(infer_events(&[&a, &corner], &InferParams::default()).is_empty());
    }

    #[test]
    fn bin_of_respects_half_open_edges() {
        let bins = RatioBins::default();
        assert_eq!(bins.bin_of(0.0), 0);
        assert_eq!(bins.bin_of(0.05), 0);
        assert_eq!(bins.bin_of(0.1), 1);
        assert_eq!(bins.bin_of(0.25), 2);
        assert_eq!(bins.bin_of(0.9), 5);
        assert_eq!(bins.bin_of(1.0), 5);
    }

    #[test]
    fn bins_reject_bad_edges() {
        assert!(RatioBins::new(vec![0.0, 1.0]).is_ok());
        assert!(RatioBins::new(vec![0.0]).is_err());
        assert!(RatioBins::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(RatioBins::new(vec![0.1, 0.5, 1.0]).is_err());
        assert!(RatioBins::new(vec![0.0, 0.5, 0.9]).is_err());
    }

    fn event(category: i64, ratio: f64, direction: Direction) -> OcclusionEvent {
        OcclusionEvent {
            target_category: category,
            occluder: Occluder::Category(99),
            ratio,
            direction,
            source: EventSource::Oracle,
        }
    }

    #[test]
    fn estimate_histogram_counts_and_probabilities() {
        let events = vec![
            event(5, 0.1, Direction::N),
            event(5, 0.6, Direction::S),
            event(5, 0.6, Direction::S),
            event(6, 0.3, Direction::E), // other category: excluded
        ];
        let hist = estimate_histogram(&events, 5, &RatioBins::default());
        assert_eq!(hist.total(), 3);
        assert_eq!(hist.count(1, Direction::N), 1);
        assert_eq!(hist.count(3, Direction::S), 2);
        let probs = hist.probabilities().unwrap();
        assert!((probs[1][Direction::N.index()] - 1.0 / 3.0).abs() < 1e-12);
        assert!((probs[3][Direction::S.index()] - 2.0 / 3.0).abs() < 1e-12);
        let sum: f64 = probs.iter().flatten().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_histogram_reports_and_refuses_sampling() {
        let hist = estimate_histogram(&[], 5, &RatioBins::default());
        assert!(hist.is_empty());
        assert!(hist.probabilities().is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_point(&hist, &mut rng),
            Err(Error::EmptyHistogram { category: 5 })
        ));
    }

    #[test]
    fn sample_point_single_cell_is_deterministic() {
        let events = vec![event(5, 0.6, Direction::S)];
        let hist = estimate_histogram(&events, 5, &RatioBins::default());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let sample = sample_point(&hist, &mut rng).unwrap();
            assert_eq!(sample.ratio_lo, 0.5);
            assert_eq!(sample.ratio_hi, 0.75);
            assert_eq!(sample.direction, Direction::S);
        }
    }

    #[test]
    fn sample_point_equal_cells_split_evenly() {
        let mut events = Vec::new();
        for _ in 0..50 {
            events.push(event(5, 0.05, Direction::N));
            events.push(event(5, 0.6, Direction::S));
        }
        let hist = estimate_histogram(&events, 5, &RatioBins::default());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000;
        let mut south = 0usize;
        for _ in 0..draws {
            if sample_point(&hist, &mut rng).unwrap().direction == Direction::S {
                south += 1;
            }
        }
        let freq = south as f64 / draws as f64;
        assert!((0.485..=0.515).contains(&freq), "freq {freq}");
    }

    #[test]
    fn sample_point_tracks_dominant_cell() {
        // 70% of mass in the ([0.5, 0.75), S) cell, echoing a shelf where
        // roughly two thirds of a box is covered from below.
        let mut events = Vec::new();
        for _ in 0..70 {
            events.push(event(5, 0.66, Direction::S));
        }
        for _ in 0..30 {
            events.push(event(5, 0.2, Direction::E));
        }
        let hist = estimate_histogram(&events, 5, &RatioBins::default());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mut dominant = 0usize;
        for _ in 0..draws {
            let s = sample_point(&hist, &mut rng).unwrap();
            if s.direction == Direction::S && s.ratio_lo == 0.5 {
                dominant += 1;
            }
        }
        let freq = dominant as f64 / draws as f64;
        assert!((0.67..=0.73).contains(&freq), "freq {freq}");
    }

    #[test]
    fn histogram_json_round_trip() {
        let events = vec![event(5, 0.1, Direction::N), event(5, 0.95, Direction::Center)];
        let hist = estimate_histogram(&events, 5, &RatioBins::default());
        let json = serde_json::to_string(&hist).unwrap();
        assert!(json.contains("\"bin_edges\""));
        assert!(json.contains("\"CENTER\""));
        let back: OcclusionHistogram = serde_json::from_str(&json).unwrap();
        assert_eq!(back, hist);
    }

    #[test]
    fn event_record_round_trip_with_synthetic_occluder() {
        let record = EventRecord {
            scene: 3,
            target_category: 5,
            occluder_category: Occluder::Synthetic,
            ratio: 0.25,
            direction: Direction::SW,
        };
        let json = serde_json::to_string(&record).unwrap();
        assert!(json.contains("\"synthetic\""));
        let back: EventRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
        let plain = EventRecord {
            occluder_category: Occluder::Category(8),
            ..record
        };
        let json = serde_json::to_string(&plain).unwrap();
        assert!(json.contains("\"occluder_category\":8"));
    }

    proptest! {
        #[test]
        fn overlap_ratio_is_scale_invariant(
            ax in -50.0..50.0f64, ay in -50.0..50.0f64,
            aw in 1.0..40.0f64, ah in 1.0..40.0f64,
            bx in -50.0..50.0f64, by in -50.0..50.0f64,
            bw in 1.0..40.0f64, bh in 1.0..40.0f64,
            scale in 0.1..8.0f64,
        ) {
            let a = r(ax, ay, aw, ah);
            let b = r(bx, by, bw, bh);
            let a2 = r(ax * scale, ay * scale, aw * scale, ah * scale);
            let b2 = r(bx * scale, by * scale, bw * scale, bh * scale);
            let r1 = overlap_ratio(&a, &b).unwrap();
            let r2 = overlap_ratio(&a2, &b2).unwrap();
            prop_assert!((r1 - r2).abs() < 1e-9, "{r1} vs {r2}");
        }

        #[test]
        fn direction_rotates_with_quarter_turns(
            dx in -100.0..100.0f64, dy in -100.0..100.0f64,
        ) {
            // Quarter turn clockwise on screen: (x, y) -> (-y, x).
            let target = r(-10.0, -10.0, 20.0, 20.0);
            prop_assume!(dx.hypot(dy) > 2.0 * 2.0); // clear of the CENTER radius
            let occ = |ox: f64, oy: f64| r(ox - 1.0, oy - 1.0, 2.0, 2.0);
            let d0 = occlusion_direction(&target, &occ(dx, dy));
            let d1 = occlusion_direction(&target, &occ(-dy, dx));
            let rotated = match d0 {
                Direction::N => Direction::E,
                Direction::NE => Direction::SE,
                Direction::E => Direction::S,
                Direction::SE => Direction::SW,
                Direction::S => Direction::W,
                Direction::SW => Direction::NW,
                Direction::W => Direction::N,
                Direction::NW => Direction::NE,
                Direction::Center => Direction::Center,
            };
            prop_assert_eq!(d1, rotated);
        }

        #[test]
        fn histogram_total_matches_event_count(ratios in proptest::collection::vec(0.0..=1.0f64, 0..64)) {
            let events: Vec<OcclusionEvent> = ratios
                .iter()
                .map(|&ratio| event(5, ratio, Direction::ALL[(ratio * 8.0) as usize % 9]))
                .collect();
            let hist = estimate_histogram(&events, 5, &RatioBins::default());
            prop_assert_eq!(hist.total(), events.len() as u64);
            if let Some(probs) = hist.probabilities() {
                let sum: f64 = probs.iter().flatten().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }
}
