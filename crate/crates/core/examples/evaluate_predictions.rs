//! Score hand-written predictions with the COCO-style evaluator.
//!
//! cargo run --release --example evaluate_predictions

use std::collections::BTreeMap;

use specdet::dataset::{Annotation, BoundingBox, Detection};
use specdet::eval::{evaluate, EvalOptions};

fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
    BoundingBox::new(x0, y0, x1, y1).expect("valid box")
}

fn main() -> specdet::Result<()> {
    let gt = vec![
        (
            "scene_a".to_string(),
            vec![
                Annotation {
                    class_id: 2,
                    bbox: bx(100.0, 0.0, 140.0, 512.0),
                },
                Annotation {
                    class_id: 1,
                    bbox: bx(300.0, 50.0, 305.0, 90.0),
                },
            ],
        ),
        (
            "scene_b".to_string(),
            vec![Annotation {
                class_id: 5,
                bbox: bx(200.0, 100.0, 300.0, 400.0),
            }],
        ),
    ];
    let mut preds = BTreeMap::new();
    preds.insert(
        "scene_a".to_string(),
        vec![
            Detection {
                class_id: 2,
                bbox: bx(102.0, 0.0, 141.0, 500.0),
                score: 0.9,
            },
            Detection {
                class_id: 1,
                bbox: bx(299.0, 55.0, 306.0, 95.0),
                score: 0.6,
            },
            Detection {
                class_id: 1,
                bbox: bx(10.0, 10.0, 20.0, 20.0),
                score: 0.7,
            },
        ],
    );
    preds.insert(
        "scene_b".to_string(),
        vec![Detection {
            class_id: 0,
            bbox: bx(200.0, 100.0, 300.0, 400.0),
            score: 0.8,
        }],
    );
    let strict = evaluate(&gt, &preds, &EvalOptions::default())?;
    println!("per-class matching:\n{}", strict.to_report());
    let agnostic = evaluate(
        &gt,
        &preds,
        &EvalOptions {
            class_agnostic: true,
            ..Default::default()
        },
    )?;
    println!("class-agnostic:\n{}", agnostic.to_csv());
    Ok(())
}
