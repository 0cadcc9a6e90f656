//! generate -> stats -> anchors -> detect-baseline -> evaluate on a small
//! plan, through the same functions the CLI calls.
//!
//! cargo run --release --example end_to_end [-- out_dir]

use specdet::config::{AnchorMode, RunConfig};
use specdet::pipeline;

fn main() -> specdet::Result<()> {
    let mut cfg = RunConfig {
        out: std::env::args()
            .nth(1)
            .unwrap_or_else(|| "end_to_end_out".into())
            .into(),
        combos_per_k: Some(1),
        configs: 1,
        realizations: 2,
        ..Default::default()
    };

    let generated = pipeline::cmd_generate(&cfg)?;
    println!(
        "generated {} scenes under {}",
        generated.scene_ids.len(),
        cfg.out.display()
    );
    println!("{}", pipeline::cmd_stats(&cfg)?.summary());

    for mode in [AnchorMode::DefaultReport, AnchorMode::KMeans] {
        cfg.anchor_mode = mode;
        cfg.anchor_k = 3;
        print!("{}", pipeline::cmd_anchors(&cfg)?.to_text(cfg.anchor_tau));
    }

    let n = pipeline::cmd_detect_baseline(&cfg)?;
    println!("baseline wrote {n} detections");
    cfg.class_agnostic = true;
    print!("{}", pipeline::cmd_evaluate(&cfg)?.to_report());
    Ok(())
}
