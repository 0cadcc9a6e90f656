//! Render one planned scene to a 512x512 PNG with its label file.
//!
//! cargo run --release --example render_spectrogram [-- out_dir]

use specdet::dataset::{annotations_for, labels_to_text, write_png};
use specdet::iq::NoiseModel;
use specdet::pipeline::render_scene;
use specdet::scene::{plan_dataset, DatasetPlan};
use specdet::spectrogram::StftConfig;

fn main() -> specdet::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "spectrogram_out".into());
    let plan = DatasetPlan {
        configs_per_combo: 1,
        realizations_per_config: 1,
        ..DatasetPlan::protocol(5)
    };
    // Last combination: four classes in one capture.
    let scene = plan_dataset(&plan)?.pop().expect("non-empty plan");
    let image = render_scene(&scene, &NoiseModel::default(), &StftConfig::default())?;
    let png = format!("{out}/{}.png", scene.scene_id());
    write_png(&image, &png)?;
    println!("scene {} ({:?}) -> {png}", scene.scene_id(), scene.combo);
    print!("{}", labels_to_text(&annotations_for(&scene)));
    Ok(())
}
