//! COCO-style detection metrics.
//!
//! mAP is the mean over IoU thresholds 0.50, 0.55, ..., 0.95 of the mean over
//! classes of 101-point interpolated average precision; AR@100 is the mean
//! over the same thresholds and classes of the fraction of ground truth
//! matched when each image keeps its 100 highest-scored detections. Classes
//! without ground truth are left out of every mean.
//!
//! Detections with equal scores keep their input order (image order first,
//! then file order), so results never depend on sort stability.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::dataset::{Annotation, BoundingBox, Detection};
use crate::{Error, Result};

pub const IOU_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];
pub const RECALL_POINTS: usize = 101;
pub const DEFAULT_MAX_DETS: usize = 100;

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let h = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let inter = w * h;
    inter / (a.area() + b.area() - inter)
}

/// Indices of `dets` by descending score, ties in input order.
pub fn score_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order
}

/// Greedy one-to-one assignment at one IoU threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// For each detection (in the order given), the ground truth it claimed.
    pub det_to_gt: Vec<Option<usize>>,
    /// For each ground truth, the detection that claimed it.
    pub gt_to_det: Vec<Option<usize>>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.det_to_gt.iter().filter(|m| m.is_some()).count()
    }
}

/// Walks `dets` in the given order (callers sort by score first); each takes
/// the still-unmatched ground truth of its class with the highest IoU, if
/// that IoU is at least `tau`. Equal IoUs go to the later ground truth.
pub fn match_detections(
    dets: &[Detection],
    gts: &[Annotation],
    tau: f64,
    class_agnostic: bool,
) -> MatchResult {
    let mut gt_to_det = vec![None; gts.len()];
    let mut det_to_gt = vec![None; dets.len()];
    for (d, det) in dets.iter().enumerate() {
        let mut best = tau.min(1.0 - 1e-10);
        let mut chosen = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_to_det[g].is_some() || (!class_agnostic && gt.class_id != det.class_id) {
                continue;
            }
            let v = iou(&det.bbox, &gt.bbox);
            if v < best {
                continue;
            }
            best = v;
            chosen = Some(g);
        }
        if let Some(g) = chosen {
            gt_to_det[g] = Some(d);
            det_to_gt[d] = Some(g);
        }
    }
    MatchResult {
        det_to_gt,
        gt_to_det,
    }
}

/// 101-point interpolated AP from `(score, is_tp)` pairs already in
/// descending score order. `None` when there is no ground truth.
pub fn average_precision(ranked: &[(f64, bool)], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut precision = Vec::with_capacity(ranked.len());
    let mut recall = Vec::with_capacity(ranked.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &(_, hit) in ranked {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / n_gt as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }
    let mut sum = 0.0;
    for k in 0..RECALL_POINTS {
        let r = k as f64 / (RECALL_POINTS - 1) as f64;
        let idx = recall.partition_point(|&v| v < r);
        if idx < precision.len() {
            sum += precision[idx];
        }
    }
    Some(sum / RECALL_POINTS as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Ignore class ids when matching (for detectors that cannot classify).
    pub class_agnostic: bool,
    pub max_dets: usize,
    /// Restrict scoring to these scene ids.
    pub image_ids: Option<Vec<String>>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            class_agnostic: false,
            max_dets: DEFAULT_MAX_DETS,
            image_ids: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub map_50_95: f64,
    pub ap_50: f64,
    pub ap_75: f64,
    pub ar_100: f64,
    /// Mean AP over thresholds for each class with ground truth.
    pub per_class_ap: BTreeMap<u32, f64>,
    pub per_threshold_ap: Vec<f64>,
    pub per_threshold_recall: Vec<f64>,
    pub images: usize,
    pub ground_truths: usize,
    pub detections: usize,
}

impl EvalSummary {
    /// `metric,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (k, v) in self.rows() {
            writeln!(s, "{k},{v}").unwrap();
        }
        s
    }

    /// `key = value` lines.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.rows() {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    fn rows(&self) -> Vec<(String, String)> {
        let mut rows = vec![
            ("map_50_95".to_string(), format!("{:.6}", self.map_50_95)),
            ("ap_50".into(), format!("{:.6}", self.ap_50)),
            ("ap_75".into(), format!("{:.6}", self.ap_75)),
            ("ar_100".into(), format!("{:.6}", self.ar_100)),
            ("images".into(), self.images.to_string()),
            ("ground_truths".into(), self.ground_truths.to_string()),
            ("detections".into(), self.detections.to_string()),
        ];
        for (tau, (ap, ar)) in IOU_THRESHOLDS
            .iter()
            .zip(self.per_threshold_ap.iter().zip(&self.per_threshold_recall))
        {
            rows.push((format!("ap@{tau:.2}"), format!("{ap:.6}")));
            rows.push((format!("recall@{tau:.2}"), format!("{ar:.6}")));
        }
        for (c, ap) in &self.per_class_ap {
            rows.push((format!("ap_class_{c}"), format!("{ap:.6}")));
        }
        rows
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Scores `predictions` against `ground_truth` (scene id, boxes). Scenes
/// without a prediction entry count as having no detections.
pub fn evaluate(
    ground_truth: &[(String, Vec<Annotation>)],
    predictions: &BTreeMap<String, Vec<Detection>>,
    opts: &EvalOptions,
) -> Result<EvalSummary> {
    let known: BTreeSet<&str> = ground_truth.iter().map(|(id, _)| id.as_str()).collect();
    if let Some(bad) = predictions.keys().find(|id| !known.contains(id.as_str())) {
        return Err(Error::UnknownScene(bad.clone()));
    }
    let selected: Option<BTreeSet<&str>> = match &opts.image_ids {
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|id| !known.contains(id.as_str())) {
                return Err(Error::UnknownScene(bad.clone()));
            }
            Some(ids.iter().map(String::as_str).collect())
        }
        None => None,
    };

    let class_of = |id: u32| if opts.class_agnostic { 0 } else { id };
    struct Image {
        gts: Vec<Annotation>,
        dets: Vec<Detection>,
    }
    let empty = Vec::new();
    let images: Vec<Image> = ground_truth
        .iter()
        .filter(|(id, _)| selected.as_ref().is_none_or(|s| s.contains(id.as_str())))
        .map(|(id, gts)| {
            let dets = predictions.get(id).unwrap_or(&empty);
            let kept: Vec<Detection> = score_order(dets)
                .into_iter()
                .take(opts.max_dets)
                .map(|i| dets[i])
                .collect();
            Image {
                gts: gts.clone(),
                dets: kept,
            }
        })
        .collect();

    let classes: BTreeSet<u32> = images
        .iter()
        .flat_map(|im| im.gts.iter().map(|g| class_of(g.class_id)))
        .collect();

    let mut per_threshold_ap = Vec::with_capacity(IOU_THRESHOLDS.len());
    let mut per_threshold_recall = Vec::with_capacity(IOU_THRESHOLDS.len());
    let mut class_aps: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for &tau in &IOU_THRESHOLDS {
        let mut aps = Vec::new();
        let mut recalls = Vec::new();
        for &class in &classes {
            let mut ranked = Vec::new();
            let mut n_gt = 0;
            let mut tp = 0;
            for im in &images {
                let gts: Vec<Annotation> = im
                    .gts
                    .iter()
                    .filter(|g| class_of(g.class_id) == class)
                    .copied()
                    .collect();
                let dets: Vec<Detection> = im
                    .dets
                    .iter()
                    .filter(|d| class_of(d.class_id) == class)
                    .copied()
                    .collect();
                let m = match_detections(&dets, &gts, tau, opts.class_agnostic);
                n_gt += gts.len();
                tp += m.true_positives();
                ranked.extend(
                    dets.iter()
                        .zip(&m.det_to_gt)
                        .map(|(d, g)| (d.score, g.is_some())),
                );
            }
            let order: Vec<(f64, bool)> = {
                let mut idx: Vec<usize> = (0..ranked.len()).collect();
                idx.sort_by(|&a, &b| ranked[b].0.total_cmp(&ranked[a].0));
                idx.into_iter().map(|i| ranked[i]).collect()
            };
            let ap = average_precision(&order, n_gt).expect("class has ground truth");
            aps.push(ap);
            class_aps.entry(class).or_default().push(ap);
            recalls.push(tp as f64 / n_gt as f64);
        }
        per_threshold_ap.push(mean(&aps));
        per_threshold_recall.push(mean(&recalls));
    }

    Ok(EvalSummary {
        map_50_95: mean(&per_threshold_ap),
        ap_50: per_threshold_ap[0],
        ap_75: per_threshold_ap[5],
        ar_100: mean(&per_threshold_recall),
        per_class_ap: class_aps.into_iter().map(|(c, v)| (c, mean(&v))).collect(),
        per_threshold_ap,
        per_threshold_recall,
        images: images.len(),
        ground_truths: images.iter().map(|im| im.gts.len()).sum(),
        detections: images.iter().map(|im| im.dets.len()).sum(),
    })
}
