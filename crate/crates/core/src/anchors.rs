//! Box geometry statistics and anchor fitting.
//!
//! Two questions are answered here. [`match_rate`] asks how many ground-truth
//! boxes a grid-placed anchor pyramid can encode at an IoU threshold (the
//! label-encoding view). [`kmeans_anchors`] fits anchor shapes to the boxes
//! with a `1 - IoU` distance on co-centered boxes and reports best possible
//! recall under the width/height ratio test.

use std::fmt::Write as _;

use rand::Rng;

use crate::dataset::BoundingBox;
use crate::rng;
use crate::{Error, Result, IMAGE_SIZE};

pub const RATIO_BINS: usize = 64;
pub const RATIO_RANGE_LOG2: (f64, f64) = (-6.0, 6.0);
pub const SIDE_BINS: usize = 64;
/// Ratio-test threshold used for best possible recall.
pub const BPR_THRESHOLD: f64 = 4.0;
pub const DEFAULT_K: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Values outside the edges land in the first or last bin.
    fn build(edges: Vec<f64>, values: impl Iterator<Item = f64>, log: bool) -> Self {
        let bins = edges.len() - 1;
        let mut counts = vec![0; bins];
        let (lo, hi) = (edges[0], edges[bins]);
        let map = |v: f64| if log { v.log2() } else { v };
        let (mlo, mhi) = (map(lo), map(hi));
        for v in values {
            let t = (map(v) - mlo) / (mhi - mlo) * bins as f64;
            let i = if t.is_nan() {
                0
            } else {
                (t.floor().max(0.0) as usize).min(bins - 1)
            };
            counts[i] += 1;
        }
        Self { edges, counts }
    }

    pub fn log_spaced(
        lo_log2: f64,
        hi_log2: f64,
        bins: usize,
        values: impl Iterator<Item = f64>,
    ) -> Self {
        let edges = (0..=bins)
            .map(|i| (lo_log2 + (hi_log2 - lo_log2) * i as f64 / bins as f64).exp2())
            .collect();
        Self::build(edges, values, true)
    }

    pub fn linear(lo: f64, hi: f64, bins: usize, values: impl Iterator<Item = f64>) -> Self {
        let edges = (0..=bins)
            .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
            .collect();
        Self::build(edges, values, false)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `bin_lo,bin_hi,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(s, "{},{},{c}", self.edges[i], self.edges[i + 1]).unwrap();
        }
        s
    }

    /// Minimal bar chart.
    pub fn to_svg(&self, title: &str) -> String {
        let (w, h, pad) = (640.0, 320.0, 30.0);
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bw = (w - 2.0 * pad) / self.counts.len() as f64;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n<text x=\"{pad}\" y=\"20\">{title}</text>\n"
        );
        for (i, &c) in self.counts.iter().enumerate() {
            let bh = (h - 2.0 * pad) * c as f64 / max;
            writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{bh:.2}\" fill=\"steelblue\"/>",
                pad + i as f64 * bw,
                h - pad - bh,
                bw * 0.9
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Aspect-ratio and side-length distribution of a set of boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    /// width / height
    pub aspect_ratios: Vec<f64>,
    pub widths: Vec<f64>,
    pub heights: Vec<f64>,
    pub ratio_hist: Histogram,
    /// Histogram of `sqrt(w * h)`.
    pub side_hist: Histogram,
    pub width_hist: Histogram,
    pub height_hist: Histogram,
}

impl BoxStats {
    pub fn min_ratio(&self) -> f64 {
        self.aspect_ratios
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_ratio(&self) -> f64 {
        self.aspect_ratios
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn geomean_ratio(&self) -> f64 {
        let n = self.aspect_ratios.len() as f64;
        (self.aspect_ratios.iter().map(|r| r.ln()).sum::<f64>() / n).exp()
    }

    pub fn summary(&self) -> String {
        format!(
            "boxes={} min_ratio={:.6} max_ratio={:.6} geomean_ratio={:.6} spread={:.3}",
            self.aspect_ratios.len(),
            self.min_ratio(),
            self.max_ratio(),
            self.geomean_ratio(),
            self.max_ratio() / self.min_ratio()
        )
    }
}

pub fn box_stats(boxes: &[BoundingBox]) -> Result<BoxStats> {
    if boxes.is_empty() {
        return Err(Error::NoAnnotations);
    }
    let widths: Vec<f64> = boxes.iter().map(BoundingBox::width).collect();
    let heights: Vec<f64> = boxes.iter().map(BoundingBox::height).collect();
    let aspect_ratios: Vec<f64> = widths.iter().zip(&heights).map(|(w, h)| w / h).collect();
    let side = IMAGE_SIZE as f64;
    Ok(BoxStats {
        ratio_hist: Histogram::log_spaced(
            RATIO_RANGE_LOG2.0,
            RATIO_RANGE_LOG2.1,
            RATIO_BINS,
            aspect_ratios.iter().copied(),
        ),
        side_hist: Histogram::linear(
            0.0,
            side,
            SIDE_BINS,
            widths.iter().zip(&heights).map(|(w, h)| (w * h).sqrt()),
        ),
        width_hist: Histogram::linear(0.0, side, SIDE_BINS, widths.iter().copied()),
        height_hist: Histogram::linear(0.0, side, SIDE_BINS, heights.iter().copied()),
        aspect_ratios,
        widths,
        heights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub width: f64,
    pub height: f64,
    /// Grid spacing of the level this anchor is tiled on.
    pub stride: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorProvenance {
    DefaultPyramid,
    KMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub anchors: Vec<Anchor>,
    pub provenance: AnchorProvenance,
}

impl AnchorSet {
    /// Anchors tiled over an `image_size` square: one per shape per grid
    /// cell of its level.
    pub fn placed_count(&self, image_size: f64) -> usize {
        self.anchors
            .iter()
            .map(|a| {
                let n = (image_size / a.stride).ceil() as usize;
                n * n
            })
            .sum()
    }

    /// `w h` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for a in &self.anchors {
            writeln!(s, "{:.6} {:.6}", a.width, a.height).unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyramidConfig {
    pub strides: Vec<f64>,
    /// Base anchor size per level.
    pub sizes: Vec<f64>,
    pub scales: Vec<f64>,
    /// Aspect ratios as width / height.
    pub ratios: Vec<f64>,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self {
            strides: vec![8.0, 16.0, 32.0, 64.0, 128.0],
            sizes: vec![32.0, 64.0, 128.0, 256.0, 512.0],
            scales: vec![1.0, 2f64.powf(1.0 / 3.0), 2f64.powf(2.0 / 3.0)],
            ratios: vec![0.5, 1.0, 2.0],
        }
    }
}

/// Shapes `size * scale * (sqrt(r), 1 / sqrt(r))` for every level, scale
/// and ratio.
pub fn default_anchor_pyramid(cfg: &PyramidConfig) -> Result<AnchorSet> {
    if cfg.strides.is_empty() || cfg.scales.is_empty() || cfg.ratios.is_empty() {
        return Err(Error::InvalidArgument(
            "empty pyramid parameter list".into(),
        ));
    }
    if cfg.strides.len() != cfg.sizes.len() {
        return Err(Error::InvalidArgument("one base size per level".into()));
    }
    let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0 && x.is_finite());
    if !(positive(&cfg.strides)
        && positive(&cfg.sizes)
        && positive(&cfg.scales)
        && positive(&cfg.ratios))
    {
        return Err(Error::InvalidArgument(
            "pyramid parameters must be positive".into(),
        ));
    }
    let mut anchors = Vec::new();
    for (&stride, &size) in cfg.strides.iter().zip(&cfg.sizes) {
        for &scale in &cfg.scales {
            for &r in &cfg.ratios {
                let s = size * scale;
                anchors.push(Anchor {
                    width: s * r.sqrt(),
                    height: s / r.sqrt(),
                    stride,
                });
            }
        }
    }
    Ok(AnchorSet {
        anchors,
        provenance: AnchorProvenance::DefaultPyramid,
    })
}

/// IoU of two boxes sharing a center.
pub fn centered_iou(w1: f64, h1: f64, w2: f64, h2: f64) -> f64 {
    let inter = w1.min(w2) * h1.min(h2);
    inter / (w1 * h1 + w2 * h2 - inter)
}

fn overlap_1d(c1: f64, half1: f64, c2: f64, half2: f64) -> f64 {
    ((c1 + half1).min(c2 + half2) - (c1 - half1).max(c2 - half2)).max(0.0)
}

/// Grid center nearest to `c` on a level with `cells` cells of `stride`.
fn nearest_center(c: f64, stride: f64, cells: usize) -> f64 {
    let i = (c / stride - 0.5).round().clamp(0.0, cells as f64 - 1.0);
    (i + 0.5) * stride
}

/// Best IoU of `b` against `anchor` tiled at every cell center of its level.
///
/// Overlap along each axis only shrinks as the centers move apart, so the
/// best placement is the cell center nearest to the box center on each axis.
pub fn best_placed_iou(b: &BoundingBox, anchor: &Anchor, image_size: f64) -> f64 {
    let cells = (image_size / anchor.stride).ceil() as usize;
    let (cx, cy) = ((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0);
    let ax = nearest_center(cx, anchor.stride, cells);
    let ay = nearest_center(cy, anchor.stride, cells);
    let iw = overlap_1d(cx, b.width() / 2.0, ax, anchor.width / 2.0);
    let ih = overlap_1d(cy, b.height() / 2.0, ay, anchor.height / 2.0);
    let inter = iw * ih;
    inter / (b.area() + anchor.width * anchor.height - inter)
}

/// `max(w/wa, wa/w, h/ha, ha/h)`; lower is better.
pub fn ratio_metric(w: f64, h: f64, a: &Anchor) -> f64 {
    let rw = w / a.width;
    let rh = h / a.height;
    rw.max(1.0 / rw).max(rh).max(1.0 / rh)
}

/// Fraction of boxes whose best anchor passes the ratio test.
pub fn best_possible_recall(boxes: &[BoundingBox], anchors: &AnchorSet, threshold: f64) -> f64 {
    if boxes.is_empty() {
        return 0.0;
    }
    let hits = boxes
        .iter()
        .filter(|b| {
            anchors
                .anchors
                .iter()
                .map(|a| ratio_metric(b.width(), b.height(), a))
                .fold(f64::INFINITY, f64::min)
                <= threshold
        })
        .count();
    hits as f64 / boxes.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub iou_threshold: f64,
    pub matched_fraction: f64,
    pub max_ious: Vec<f64>,
    pub best_possible_recall: f64,
}

pub fn match_rate(gt: &[BoundingBox], anchors: &AnchorSet, tau: f64) -> Result<MatchReport> {
    if gt.is_empty() || anchors.anchors.is_empty() {
        return Err(Error::InvalidArgument(
            "match rate needs boxes and anchors".into(),
        ));
    }
    let side = IMAGE_SIZE as f64;
    let max_ious: Vec<f64> = gt
        .iter()
        .map(|b| {
            anchors
                .anchors
                .iter()
                .map(|a| best_placed_iou(b, a, side))
                .fold(0.0, f64::max)
        })
        .collect();
    let matched = max_ious.iter().filter(|&&v| v >= tau).count();
    Ok(MatchReport {
        iou_threshold: tau,
        matched_fraction: matched as f64 / gt.len() as f64,
        best_possible_recall: best_possible_recall(gt, anchors, BPR_THRESHOLD),
        max_ious,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub anchors: AnchorSet,
    pub best_possible_recall: f64,
    /// Mean `1 - IoU` to the assigned centroid after initialization and
    /// after each iteration.
    pub objective: Vec<f64>,
}

fn assign(shapes: &[(f64, f64)], centroids: &[(f64, f64)]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let labels = shapes
        .iter()
        .map(|&(w, h)| {
            let (best, d) = centroids
                .iter()
                .enumerate()
                .map(|(i, &(cw, ch))| (i, 1.0 - centered_iou(w, h, cw, ch)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
            total += d;
            best
        })
        .collect();
    (labels, total / shapes.len() as f64)
}

fn cluster_cost(members: &[(f64, f64)], c: (f64, f64)) -> f64 {
    members
        .iter()
        .map(|&(w, h)| 1.0 - centered_iou(w, h, c.0, c.1))
        .sum()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// IoU k-means over box shapes.
///
/// Seeding is k-means++ with `1 - IoU` as the distance. The update step
/// moves a centroid to the mean (or, failing that, the median) of its
/// members only when that lowers the cluster's cost, so the objective never
/// increases. Anchors are returned sorted by area and spread over strides
/// 8, 16, 32 in thirds.
pub fn kmeans_anchors(boxes: &[BoundingBox], k: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if boxes.len() < k {
        return Err(Error::InvalidArgument(format!(
            "k-means with k = {k} needs at least {k} boxes, got {}",
            boxes.len()
        )));
    }
    let shapes: Vec<(f64, f64)> = boxes.iter().map(|b| (b.width(), b.height())).collect();
    let mut rng = rng::stream(seed);

    let mut centroids = vec![shapes[rng.random_range(0..shapes.len())]];
    while centroids.len() < k {
        let d2: Vec<f64> = shapes
            .iter()
            .map(|&(w, h)| {
                centroids
                    .iter()
                    .map(|&(cw, ch)| 1.0 - centered_iou(w, h, cw, ch))
                    .fold(f64::INFINITY, f64::min)
                    .powi(2)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or(shapes.len() - 1)
        } else {
            rng.random_range(0..shapes.len())
        };
        centroids.push(shapes[pick]);
    }

    let (mut labels, obj) = assign(&shapes, &centroids);
    let mut objective = vec![obj];
    for _ in 0..300 {
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<(f64, f64)> = shapes
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(s, _)| *s)
                .collect();
            if members.is_empty() {
                continue;
            }
            let n = members.len() as f64;
            let mean = (
                members.iter().map(|m| m.0).sum::<f64>() / n,
                members.iter().map(|m| m.1).sum::<f64>() / n,
            );
            let med = (
                median(members.iter().map(|m| m.0).collect()),
                median(members.iter().map(|m| m.1).collect()),
            );
            let current = cluster_cost(&members, *centroid);
            for candidate in [mean, med] {
                if cluster_cost(&members, candidate) < current {
                    *centroid = candidate;
                    break;
                }
            }
        }
        let (next, next_obj) = assign(&shapes, &centroids);
        objective.push(next_obj);
        let done = next == labels;
        labels = next;
        if done {
            break;
        }
    }

    centroids.sort_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)));
    let strides = [8.0, 16.0, 32.0];
    let anchors = AnchorSet {
        anchors: centroids
            .iter()
            .enumerate()
            .map(|(i, &(w, h))| Anchor {
                width: w,
                height: h,
                stride: strides[(i * strides.len() / k).min(strides.len() - 1)],
            })
            .collect(),
        provenance: AnchorProvenance::KMeans,
    };
    Ok(KMeansResult {
        best_possible_recall: best_possible_recall(boxes, &anchors, BPR_THRESHOLD),
        anchors,
        objective,
    })
}
