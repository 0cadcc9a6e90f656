use std::path::Path;

use proptest::prelude::*;
use specdet::dataset::*;
use specdet::scene::{plan_dataset, split_train_test, DatasetPlan};
use specdet::spectrogram::SpectrogramImage;

const QUANT: f64 = 5e-7;

fn norm_box() -> impl Strategy<Value = BoundingBox> {
    (0.0..0.9f64, 0.0..0.9f64, 0.001..0.1f64, 0.001..0.1f64).prop_map(|(x, y, w, h)| {
        BoundingBox::new(x * 512.0, y * 512.0, (x + w) * 512.0, (y + h) * 512.0).unwrap()
    })
}

fn close(a: &BoundingBox, b: &BoundingBox) -> bool {
    a.to_normalized()
        .iter()
        .zip(b.to_normalized())
        .all(|(x, y)| (x - y).abs() <= QUANT + 1e-12)
}

proptest! {
    #[test]
    fn labels_round_trip(boxes in prop::collection::vec((0u32..6, norm_box()), 0..12)) {
        let anns: Vec<Annotation> = boxes.iter().map(|&(c, b)| Annotation { class_id: c, bbox: b }).collect();
        let back = parse_labels(&labels_to_text(&anns), Path::new("l.txt")).unwrap();
        prop_assert_eq!(back.len(), anns.len());
        for (a, b) in anns.iter().zip(&back) {
            prop_assert_eq!(a.class_id, b.class_id);
            prop_assert!(close(&a.bbox, &b.bbox));
        }
        // Re-serializing parsed labels is a fixed point.
        prop_assert_eq!(labels_to_text(&back), labels_to_text(&anns));
    }

    #[test]
    fn predictions_round_trip(dets in prop::collection::vec((0u32..6, norm_box(), 0.0..=1.0f64), 0..12)) {
        let dets: Vec<Detection> = dets.iter().map(|&(c, b, s)| Detection { class_id: c, bbox: b, score: s }).collect();
        let back = parse_predictions(&predictions_to_text(&dets), Path::new("p.txt")).unwrap();
        prop_assert_eq!(back.len(), dets.len());
        for (a, b) in dets.iter().zip(&back) {
            prop_assert_eq!(a.class_id, b.class_id);
            prop_assert!((a.score - b.score).abs() <= QUANT + 1e-12);
            prop_assert!(close(&a.bbox, &b.bbox));
        }
    }

    #[test]
    fn png_round_trip_is_exact(levels in prop::collection::vec(0u8..=255, 64)) {
        let pixels: Vec<f64> = (0..512 * 512).map(|i| levels[i % 64] as f64 / 255.0).collect();
        let img = SpectrogramImage::new(pixels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        write_png(&img, &path).unwrap();
        let bytes = read_png_gray(&path).unwrap();
        for (i, b) in bytes.iter().enumerate() {
            prop_assert_eq!(*b, levels[i % 64]);
        }
        prop_assert_eq!(read_png(&path).unwrap(), img);
    }
}

#[test]
fn quantization_rounds_half_up() {
    assert_eq!(quantize(0.0), 0);
    assert_eq!(quantize(1.0), 255);
    assert_eq!(quantize(0.5), 128);
    assert_eq!(quantize(127.4 / 255.0), 127);
}

#[test]
fn malformed_prediction_lines_name_the_line() {
    let err = parse_predictions(
        "0 0.5 0.5 0.1 0.1 0.9\n1 0.5 0.5 0.1 0.1\n",
        Path::new("p.txt"),
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(
        msg.contains("p.txt:2") && msg.contains("missing score column"),
        "{msg}"
    );
    let err = parse_predictions("0 0.5 0.5 0.1 0.1 1.5\n", Path::new("p.txt")).unwrap_err();
    assert!(err.to_string().contains("outside [0, 1]"), "{err}");
}

#[test]
fn scene_files_round_trip() {
    let plan = DatasetPlan::protocol(3).limit_combos_per_size(1);
    let scenes = plan_dataset(&DatasetPlan {
        configs_per_combo: 1,
        realizations_per_config: 2,
        ..plan
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let layout = DatasetLayout::new(dir.path());
    let image = SpectrogramImage::zeros();
    let ids: Vec<String> = scenes
        .iter()
        .map(|s| layout.write_scene(s, &image).unwrap().scene_id)
        .collect();
    layout.write_manifest(&ids).unwrap();
    assert_eq!(layout.read_manifest().unwrap(), ids);
    for s in &scenes {
        let rec = layout.read_record(&s.scene_id()).unwrap();
        assert_eq!(&rec.provenance, s);
        for (a, b) in rec.annotations.iter().zip(annotations_for(s)) {
            assert_eq!(a.class_id, b.class_id);
            assert!(close(&a.bbox, &b.bbox));
        }
    }
    let split = split_train_test(&ids, 0.25, 11).unwrap();
    layout.write_split(&split).unwrap();
    let back = layout.read_split().unwrap();
    assert_eq!((back.train, back.test), (split.train, split.test));

    std::fs::remove_file(layout.label_path(&ids[0])).unwrap();
    let err = layout.load_ground_truth().unwrap_err();
    assert!(err.to_string().contains(&ids[0]), "{err}");
}

#[test]
fn missing_predictions_dir_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    assert!(read_predictions(dir.path().join("none"))
        .unwrap()
        .is_empty());
}
