use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specdet::anchors::*;
use specdet::dataset::BoundingBox;
use specdet::eval::iou;

fn random_boxes(n: usize, seed: u64) -> Vec<BoundingBox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let w = rng.random_range(2.0..300.0);
            let h = rng.random_range(2.0..300.0);
            let x = rng.random_range(0.0..512.0 - w);
            let y = rng.random_range(0.0..512.0 - h);
            BoundingBox::new(x, y, x + w, y + h).unwrap()
        })
        .collect()
}

/// Max IoU over every grid placement of every anchor.
fn brute_max_iou(b: &BoundingBox, set: &AnchorSet) -> f64 {
    let mut best = 0.0f64;
    for a in &set.anchors {
        let cells = (512.0 / a.stride).ceil() as usize;
        for i in 0..cells {
            for j in 0..cells {
                let (cx, cy) = ((i as f64 + 0.5) * a.stride, (j as f64 + 0.5) * a.stride);
                let placed = BoundingBox {
                    x_min: cx - a.width / 2.0,
                    x_max: cx + a.width / 2.0,
                    y_min: cy - a.height / 2.0,
                    y_max: cy + a.height / 2.0,
                };
                best = best.max(iou(b, &placed));
            }
        }
    }
    best
}

#[test]
fn match_rate_equals_exhaustive_search() {
    let set = default_anchor_pyramid(&PyramidConfig::default()).unwrap();
    let boxes = random_boxes(40, 1);
    let report = match_rate(&boxes, &set, 0.5).unwrap();
    for (b, &m) in boxes.iter().zip(&report.max_ious) {
        assert!((brute_max_iou(b, &set) - m).abs() < 1e-12);
    }
    let matched = report.max_ious.iter().filter(|&&v| v >= 0.5).count();
    assert_eq!(report.matched_fraction, matched as f64 / boxes.len() as f64);
}

#[test]
fn anchor_at_grid_point_and_thin_strip() {
    let set = default_anchor_pyramid(&PyramidConfig::default()).unwrap();
    // The 32x32 anchor on the cell centered at (36, 36).
    let on_grid = BoundingBox::new(20.0, 20.0, 52.0, 52.0).unwrap();
    let strip = BoundingBox::new(0.0, 200.0, 512.0, 204.0).unwrap();
    let r = match_rate(&[on_grid, strip], &set, 0.5).unwrap();
    assert_eq!(r.max_ious[0], 1.0);
    assert!(r.max_ious[1] < 0.5);
    assert_eq!(r.matched_fraction, 0.5);
}

#[test]
fn match_rate_monotone_in_threshold_and_anchor_set() {
    let boxes = random_boxes(60, 2);
    let full = default_anchor_pyramid(&PyramidConfig::default()).unwrap();
    let mut prev = 1.0;
    for tau in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let m = match_rate(&boxes, &full, tau).unwrap().matched_fraction;
        assert!(m <= prev);
        prev = m;
    }
    let subset = AnchorSet {
        anchors: full.anchors[..20].to_vec(),
        provenance: AnchorProvenance::DefaultPyramid,
    };
    let small = match_rate(&boxes, &subset, 0.5).unwrap();
    let big = match_rate(&boxes, &full, 0.5).unwrap();
    for (s, b) in small.max_ious.iter().zip(&big.max_ious) {
        assert!(b >= s);
    }
}

#[test]
fn kmeans_is_deterministic_and_objective_never_rises() {
    let boxes = random_boxes(300, 3);
    let a = kmeans_anchors(&boxes, 9, 1).unwrap();
    let b = kmeans_anchors(&boxes, 9, 1).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.anchors.anchors.len(), 9);
    for w in a.objective.windows(2) {
        assert!(w[1] <= w[0] + 1e-15, "{:?}", a.objective);
    }
    let areas: Vec<f64> = a
        .anchors
        .anchors
        .iter()
        .map(|x| x.width * x.height)
        .collect();
    assert!(areas.windows(2).all(|w| w[0] <= w[1]));
    assert!(a
        .anchors
        .anchors
        .iter()
        .all(|x| x.width > 0.0 && x.height > 0.0));
}

#[test]
fn two_tight_clusters_are_separated() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut boxes = Vec::new();
    for _ in 0..30 {
        let (w, h) = (rng.random_range(190.0..210.0), rng.random_range(8.0..12.0));
        boxes.push(BoundingBox::new(0.0, 0.0, w, h).unwrap());
        let (w, h) = (rng.random_range(8.0..12.0), rng.random_range(290.0..310.0));
        boxes.push(BoundingBox::new(0.0, 0.0, w, h).unwrap());
    }
    let r = kmeans_anchors(&boxes, 2, 7).unwrap();
    let mut found = r
        .anchors
        .anchors
        .iter()
        .map(|a| (a.width, a.height))
        .collect::<Vec<_>>();
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (narrow, wide) = (found[0], found[1]);
    assert!((8.0..=12.0).contains(&narrow.0) && (290.0..=310.0).contains(&narrow.1));
    assert!((190.0..=210.0).contains(&wide.0) && (8.0..=12.0).contains(&wide.1));
    assert_eq!(r.best_possible_recall, 1.0);
}

#[test]
fn stats_are_permutation_invariant() {
    let boxes = random_boxes(100, 5);
    let mut rev = boxes.clone();
    rev.reverse();
    let (a, b) = (box_stats(&boxes).unwrap(), box_stats(&rev).unwrap());
    assert_eq!(a.ratio_hist, b.ratio_hist);
    assert_eq!(a.side_hist, b.side_hist);
    assert_eq!(a.ratio_hist.total(), 100);
    assert_eq!(a.side_hist.total(), 100);
}
