//! Independent metric oracle and random fixtures shared by test targets.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specdet::dataset::{Annotation, BoundingBox, Detection};
use specdet::eval::IOU_THRESHOLDS;

pub type Fixture = (
    Vec<(String, Vec<Annotation>)>,
    BTreeMap<String, Vec<Detection>>,
);

fn oracle_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = ix * iy;
    let union = (a.x_max - a.x_min) * (a.y_max - a.y_min)
        + (b.x_max - b.x_min) * (b.y_max - b.y_min)
        - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// AP as the mean over r = 0, 0.01, ..., 1 of the best precision at any
/// cut-off reaching recall r.
fn oracle_ap(flags: &[bool], n_gt: usize) -> f64 {
    let mut points = Vec::new();
    for cut in 1..=flags.len() {
        let tp = flags[..cut].iter().filter(|&&f| f).count() as f64;
        points.push((tp / n_gt as f64, tp / cut as f64));
    }
    (0..=100)
        .map(|k| {
            let r = k as f64 / 100.0;
            points
                .iter()
                .filter(|(rec, _)| *rec >= r - 1e-12)
                .map(|(_, p)| *p)
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / 101.0
}

pub struct OracleResult {
    pub map: f64,
    pub ar: f64,
}

pub fn oracle(
    gt: &[(String, Vec<Annotation>)],
    preds: &BTreeMap<String, Vec<Detection>>,
    agnostic: bool,
) -> OracleResult {
    let cls = |c: u32| if agnostic { 0 } else { c };
    let mut classes: Vec<u32> = gt
        .iter()
        .flat_map(|(_, a)| a.iter().map(|g| cls(g.class_id)))
        .collect();
    classes.sort();
    classes.dedup();
    let (mut map, mut ar) = (0.0, 0.0);
    for &tau in &IOU_THRESHOLDS {
        let (mut ap_sum, mut rec_sum) = (0.0, 0.0);
        for &c in &classes {
            let mut scored: Vec<(f64, bool)> = Vec::new();
            let mut n_gt = 0;
            let mut matched_total = 0;
            for (id, gts) in gt {
                let g: Vec<&Annotation> = gts.iter().filter(|a| cls(a.class_id) == c).collect();
                n_gt += g.len();
                let mut d: Vec<Detection> = preds.get(id).cloned().unwrap_or_default();
                d.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
                d.truncate(100);
                d.retain(|x| cls(x.class_id) == c);
                let mut taken = vec![false; g.len()];
                for det in &d {
                    let mut best: Option<(usize, f64)> = None;
                    for (j, a) in g.iter().enumerate() {
                        let v = oracle_iou(&det.bbox, &a.bbox);
                        if !taken[j] && v >= tau && best.is_none_or(|(_, b)| v > b) {
                            best = Some((j, v));
                        }
                    }
                    if let Some((j, _)) = best {
                        taken[j] = true;
                        matched_total += 1;
                    }
                    scored.push((det.score, best.is_some()));
                }
            }
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let flags: Vec<bool> = scored.iter().map(|s| s.1).collect();
            ap_sum += oracle_ap(&flags, n_gt);
            rec_sum += matched_total as f64 / n_gt as f64;
        }
        map += ap_sum / classes.len() as f64;
        ar += rec_sum / classes.len() as f64;
    }
    OracleResult {
        map: map / 10.0,
        ar: ar / 10.0,
    }
}

fn random_box(rng: &mut ChaCha8Rng) -> BoundingBox {
    let x = rng.random_range(0.0..80.0);
    let y = rng.random_range(0.0..80.0);
    let w = rng.random_range(4.0..40.0);
    let h = rng.random_range(4.0..40.0);
    BoundingBox::new(x, y, x + w, y + h).unwrap()
}

fn jitter(b: &BoundingBox, rng: &mut ChaCha8Rng, amount: f64) -> BoundingBox {
    let mut j = || rng.random_range(-amount..amount);
    let (x0, y0) = (b.x_min + j(), b.y_min + j());
    let (x1, y1) = ((b.x_max + j()).max(x0 + 1.0), (b.y_max + j()).max(y0 + 1.0));
    BoundingBox::new(x0, y0, x1, y1).unwrap()
}

pub fn fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_images = rng.random_range(1..=3);
    let mut gt = Vec::new();
    let mut preds = BTreeMap::new();
    for i in 0..n_images {
        let id = format!("img{i}");
        let n_gt = rng.random_range(0..=5);
        let anns: Vec<Annotation> = (0..n_gt)
            .map(|_| Annotation {
                class_id: rng.random_range(0..3),
                bbox: random_box(&mut rng),
            })
            .collect();
        let mut dets = Vec::new();
        for a in &anns {
            for _ in 0..rng.random_range(0..=2) {
                let class_id = if rng.random_bool(0.8) {
                    a.class_id
                } else {
                    rng.random_range(0..3)
                };
                let amount = rng.random_range(0.5..8.0);
                dets.push(Detection {
                    class_id,
                    bbox: jitter(&a.bbox, &mut rng, amount),
                    score: rng.random_range(0.0..1.0),
                });
            }
        }
        for _ in 0..rng.random_range(0..=3) {
            dets.push(Detection {
                class_id: rng.random_range(0..3),
                bbox: random_box(&mut rng),
                score: rng.random_range(0.0..1.0),
            });
        }
        gt.push((id.clone(), anns));
        if !dets.is_empty() {
            preds.insert(id, dets);
        }
    }
    (gt, preds)
}
