//! Expand the default protocol into scenes without synthesizing anything.
//!
//! cargo run --release --example plan_dataset

use std::collections::BTreeMap;

use specdet::scene::{plan_dataset, split_train_test, DatasetPlan};

fn main() -> specdet::Result<()> {
    let plan = DatasetPlan::protocol(7);
    let scenes = plan_dataset(&plan)?;
    println!(
        "{} combinations x {} configurations x {} realizations = {} scenes",
        plan.combos.len(),
        plan.configs_per_combo,
        plan.realizations_per_config,
        scenes.len()
    );
    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    for s in &scenes {
        *by_size.entry(s.combo.len()).or_default() += 1;
    }
    for (k, n) in by_size {
        println!("  {k} classes: {n} scenes");
    }
    let first = &scenes[0];
    println!("first scene {}:", first.scene_id());
    for s in &first.specs {
        println!(
            "  {} fc {:+.2} MHz bw {:.2} MHz snr {:.1} dB arrival {:.2} ms duration {:.2} ms",
            s.class,
            s.center_freq_hz / 1e6,
            s.bandwidth_hz / 1e6,
            s.snr_db,
            s.arrival_s * 1e3,
            s.duration_s * 1e3
        );
    }
    let ids: Vec<String> = scenes.iter().map(|s| s.scene_id()).collect();
    let split = split_train_test(&ids, 0.2, 1)?;
    println!(
        "split: {} train, {} test",
        split.train.len(),
        split.test.len()
    );
    Ok(())
}
