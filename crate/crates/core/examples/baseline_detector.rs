//! The energy detector on three scenes: a strong isolated signal, a weak
//! one, and two signals sharing a band back to back in time.
//!
//! cargo run --release --example baseline_detector

use specdet::baseline::{detect, EnergyDetectorConfig};
use specdet::dataset::bbox_from_spec;
use specdet::eval::iou;
use specdet::iq::{compose_signals, NoiseModel, SignalClass, SignalSpec};
use specdet::spectrogram::{render, StftConfig};

fn run(name: &str, specs: &[SignalSpec]) -> specdet::Result<()> {
    let image = render(
        &compose_signals(specs, &NoiseModel::default(), 1)?,
        &StftConfig::default(),
    )?;
    let dets = detect(&image, &EnergyDetectorConfig::default())?;
    println!(
        "{name}: {} ground truth, {} detections",
        specs.len(),
        dets.len()
    );
    for d in &dets {
        let best = specs
            .iter()
            .map(|s| iou(&d.bbox, &bbox_from_spec(s)))
            .fold(0.0, f64::max);
        println!(
            "  box x {:.0}..{:.0} y {:.0}..{:.0} score {:.3} best IoU {best:.3}",
            d.bbox.x_min, d.bbox.x_max, d.bbox.y_min, d.bbox.y_max, d.score
        );
    }
    Ok(())
}

fn main() -> specdet::Result<()> {
    run(
        "strong",
        &[SignalSpec::new(
            SignalClass::Qam,
            -20e6,
            8e6,
            20.0,
            0.01,
            0.03,
        )],
    )?;
    run(
        "weak",
        &[SignalSpec::new(
            SignalClass::Qam,
            10e6,
            10e6,
            -5.0,
            0.01,
            0.03,
        )],
    )?;
    run(
        "shared band",
        &[
            SignalSpec::new(SignalClass::Qam, 0.0, 10e6, 20.0, 0.005, 0.02),
            SignalSpec::new(SignalClass::Dsss, 3e6, 10e6, 20.0, 0.025, 0.02).with_instance(1),
        ],
    )
}
