//! Box geometry of the default dataset and how well anchors cover it.
//! Labels come from scene metadata, so nothing is rendered.
//!
//! cargo run --release --example anchor_diagnosis

use specdet::anchors::{
    box_stats, default_anchor_pyramid, kmeans_anchors, match_rate, PyramidConfig,
};
use specdet::config::RunConfig;
use specdet::pipeline::plan_annotations;

fn main() -> specdet::Result<()> {
    let cfg = RunConfig::default();
    let boxes: Vec<_> = plan_annotations(&cfg)?
        .into_iter()
        .flat_map(|(_, a)| a.into_iter().map(|a| a.bbox))
        .collect();
    let stats = box_stats(&boxes)?;
    println!("{}", stats.summary());

    let pyramid = default_anchor_pyramid(&PyramidConfig::default())?;
    let report = match_rate(&boxes, &pyramid, 0.5)?;
    println!(
        "default pyramid: {} shapes, {} placed anchors, matched {:.3} at IoU 0.5",
        pyramid.anchors.len(),
        pyramid.placed_count(512.0),
        report.matched_fraction
    );

    let km = kmeans_anchors(&boxes, 9, cfg.seed)?;
    println!(
        "k-means: BPR {:.3} after {} iterations (objective {:.4} -> {:.4})",
        km.best_possible_recall,
        km.objective.len() - 1,
        km.objective[0],
        km.objective.last().unwrap()
    );
    for a in &km.anchors.anchors {
        println!("  {:7.1} x {:6.1}  stride {}", a.width, a.height, a.stride);
    }
    Ok(())
}
