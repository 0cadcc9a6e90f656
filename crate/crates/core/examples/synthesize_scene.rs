//! Synthesize a capture holding one signal of every class and report the
//! power of each signal's band.
//!
//! cargo run --release --example synthesize_scene [-- out.iq]

use specdet::iq::{compose_signals, NoiseModel, SignalClass, SignalSpec};

fn main() -> specdet::Result<()> {
    let noise = NoiseModel::default();
    let specs: Vec<SignalSpec> = SignalClass::ALL
        .iter()
        .enumerate()
        .map(|(i, &class)| {
            let bw = match class {
                SignalClass::Ble => 2e6,
                SignalClass::Wifi => 20e6,
                _ => 8e6,
            };
            let fc = -40e6 + 16e6 * i as f64;
            SignalSpec::new(class, fc, bw, 15.0, 0.002 + 0.006 * i as f64, 0.012)
                .with_instance(i as u32)
        })
        .collect();
    let capture = compose_signals(&specs, &noise, 42)?;
    println!(
        "{} samples at {} MS/s, mean power {:.3}",
        capture.len(),
        capture.sample_rate_hz() / 1e6,
        capture.mean_power()
    );
    for s in &specs {
        let range = s.sample_range();
        let p: f64 = capture.samples()[range.clone()]
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            / range.len() as f64;
        println!(
            "{:>5} fc {:+6.1} MHz bw {:5.1} MHz snr {:4.1} dB  samples {:>9}..{:<9} total power {p:.3}",
            s.class.name(),
            s.center_freq_hz / 1e6,
            s.bandwidth_hz / 1e6,
            s.snr_db,
            range.start,
            range.end
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        capture.write_iq(&path)?;
        println!("wrote interleaved little-endian f32 I/Q to {path}");
    }
    Ok(())
}
