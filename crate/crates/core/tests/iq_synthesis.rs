//! Spectral and power checks on synthesized waveforms, measured with a
//! periodogram written here independently of the crate's STFT.

use num_complex::Complex64;
use rustfft::FftPlanner;
use specdet::iq::{
    compose_signals, noise_capture, place_in_capture, scale_to_snr, signal_stream,
    synthesize_baseband, IqBuffer, NoiseModel, SignalClass, SignalSpec,
};
use specdet::SAMPLE_RATE_HZ;

/// Welch PSD estimate (Hann, 50% overlap); returns (frequency, power)
/// with frequencies in ascending order and powers summing to mean power.
fn welch(x: &[Complex64], nfft: usize) -> Vec<(f64, f64)> {
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let win: Vec<f64> = (0..nfft)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / nfft as f64).cos())
        .collect();
    let wpow: f64 = win.iter().map(|w| w * w).sum();
    let mut acc = vec![0.0; nfft];
    let mut segs = 0;
    let mut start = 0;
    while start + nfft <= x.len() {
        let mut buf: Vec<Complex64> = x[start..start + nfft]
            .iter()
            .zip(&win)
            .map(|(v, w)| v * w)
            .collect();
        fft.process(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
        segs += 1;
        start += nfft / 2;
    }
    let norm = 1.0 / (segs as f64 * wpow * nfft as f64);
    let mut out: Vec<(f64, f64)> = (0..nfft)
        .map(|k| {
            let kk = if k >= nfft / 2 {
                k as isize - nfft as isize
            } else {
                k as isize
            };
            (kk as f64 * SAMPLE_RATE_HZ / nfft as f64, acc[k] * norm)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Width of the band holding 99% of the power, trimming 0.5% from each end.
fn occupied_99(psd: &[(f64, f64)]) -> f64 {
    let total: f64 = psd.iter().map(|p| p.1).sum();
    let mut cum = 0.0;
    let (mut lo, mut hi) = (None, None);
    for &(f, p) in psd {
        cum += p;
        if lo.is_none() && cum >= 0.005 * total {
            lo = Some(f);
        }
        if hi.is_none() && cum >= 0.995 * total {
            hi = Some(f);
        }
    }
    hi.unwrap() - lo.unwrap()
}

fn fraction_within(psd: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let total: f64 = psd.iter().map(|p| p.1).sum();
    psd.iter()
        .filter(|p| (lo..=hi).contains(&p.0))
        .map(|p| p.1)
        .sum::<f64>()
        / total
}

fn class_bw(class: SignalClass) -> Vec<f64> {
    match class {
        SignalClass::Ble => vec![1e6, 2e6],
        SignalClass::Wifi => vec![10e6, 20e6],
        _ => vec![1e6, 5e6, 20e6],
    }
}

#[test]
fn occupied_bandwidth_and_containment_per_class() {
    for class in SignalClass::ALL {
        for bw in class_bw(class) {
            let spec = SignalSpec::new(class, 0.0, bw, 0.0, 0.0, 0.004);
            let x = synthesize_baseband(&spec, &mut signal_stream(21, 0)).unwrap();
            let psd = welch(x.samples(), 8192);
            let occ = occupied_99(&psd) / bw;
            let inside = fraction_within(&psd, -0.75 * bw, 0.75 * bw);
            println!(
                "{class:>5} bw {:>5.1} MHz: 99% bw ratio {occ:.3}, containment {inside:.4}",
                bw / 1e6
            );
            assert!(inside >= 0.95, "{class} containment {inside}");
            assert!(
                (0.75..=1.25).contains(&occ),
                "{class} at {bw}: occupied ratio {occ}"
            );
        }
    }
}

#[test]
fn qam_occupied_bandwidth_matches_spec() {
    let spec = SignalSpec::new(SignalClass::Qam, 0.0, 8e6, 0.0, 0.0, 0.01);
    let x = synthesize_baseband(&spec, &mut signal_stream(1, 0)).unwrap();
    let ratio = occupied_99(&welch(x.samples(), 8192)) / 8e6;
    assert!((0.75..=1.25).contains(&ratio), "{ratio}");
}

#[test]
fn shifted_tone_peaks_at_its_frequency() {
    let tone = IqBuffer::new(vec![Complex64::new(1.0, 0.0); 65536], SAMPLE_RATE_HZ).unwrap();
    let spec = SignalSpec::new(
        SignalClass::Am,
        25e6,
        1e6,
        0.0,
        0.0,
        65536.0 / SAMPLE_RATE_HZ,
    );
    let cap = place_in_capture(IqBuffer::zeros(65536, SAMPLE_RATE_HZ), &tone, &spec).unwrap();
    let mut buf = cap.into_samples();
    FftPlanner::new().plan_fft_forward(65536).process(&mut buf);
    let peak = (0..buf.len())
        .max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm()))
        .unwrap();
    assert_eq!(peak, 16384); // 25 MHz / 100 MHz * 65536
}

#[test]
fn place_then_remove_restores_capture() {
    let noise = NoiseModel::default();
    let base = noise_capture(&noise, 4);
    let spec = SignalSpec::new(SignalClass::Wifi, -12e6, 15e6, 10.0, 0.011, 0.003);
    let sig = scale_to_snr(
        synthesize_baseband(&spec, &mut signal_stream(4, 0)).unwrap(),
        &spec,
        &noise,
    );
    let neg = IqBuffer::new(sig.samples().iter().map(|v| -v).collect(), SAMPLE_RATE_HZ).unwrap();
    let placed = place_in_capture(base.clone(), &sig, &spec).unwrap();
    let range = spec.sample_range();
    assert!(placed.samples()[..range.start] == base.samples()[..range.start]);
    assert!(placed.samples()[range.end..] == base.samples()[range.end..]);
    let back = place_in_capture(placed, &neg, &spec).unwrap();
    let err = back
        .samples()
        .iter()
        .zip(base.samples())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn noise_only_capture_has_configured_power() {
    let noise = NoiseModel::default();
    let cap = compose_signals(&[], &noise, 77).unwrap();
    assert_eq!(cap.len(), 5_000_000);
    let p = cap.mean_power();
    assert!((p - 1.0).abs() < 0.01, "{p}");
    assert_eq!(cap, compose_signals(&[], &noise, 77).unwrap());
}

/// In-band SNR of one signal measured from the composed capture: band
/// power over the signal's lifetime minus the known noise share.
fn measured_snr_db(spec: &SignalSpec, noise: &NoiseModel, seed: u64) -> f64 {
    let cap = compose_signals(&[*spec], noise, seed).unwrap();
    let r = spec.sample_range();
    let mut seg: Vec<Complex64> = cap.samples()[r.clone()].to_vec();
    let n = seg.len();
    FftPlanner::new().plan_fft_forward(n).process(&mut seg);
    let (lo, hi) = (
        spec.center_freq_hz - spec.bandwidth_hz / 2.0,
        spec.center_freq_hz + spec.bandwidth_hz / 2.0,
    );
    let band: f64 = seg
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let kk = if *k >= n / 2 {
                *k as f64 - n as f64
            } else {
                *k as f64
            };
            (lo..=hi).contains(&(kk * SAMPLE_RATE_HZ / n as f64))
        })
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        / (n as f64 * n as f64);
    let noise_band = noise.band_power(spec.bandwidth_hz);
    10.0 * ((band - noise_band) / noise_band).log10()
}

#[test]
fn in_band_snr_is_calibrated() {
    let noise = NoiseModel::default();
    for (i, class) in SignalClass::ALL.into_iter().enumerate() {
        for snr in [0.0, 10.0, 20.0] {
            let bw = if class == SignalClass::Ble {
                1.5e6
            } else {
                12e6
            };
            let spec = SignalSpec::new(class, 7e6, bw, snr, 0.01, 0.005);
            let got = measured_snr_db(&spec, &noise, 100 + i as u64);
            assert!(
                (got - snr).abs() <= 1.0,
                "{class} snr {snr}: measured {got:.2}"
            );
        }
    }
}

#[test]
fn composition_is_linear() {
    let noise = NoiseModel::default();
    let specs = [
        SignalSpec::new(SignalClass::Qam, -20e6, 6e6, 15.0, 0.0, 0.01).with_instance(0),
        SignalSpec::new(SignalClass::Fm, 5e6, 3e6, 5.0, 0.02, 0.01).with_instance(1),
        SignalSpec::new(SignalClass::Dsss, 30e6, 10e6, 20.0, 0.005, 0.02).with_instance(2),
    ];
    let seed = 5;
    let all = compose_signals(&specs, &noise, seed).unwrap();
    let a = compose_signals(&specs[..1], &noise, seed).unwrap();
    let b = compose_signals(&specs[1..], &noise, seed).unwrap();
    let n = noise_capture(&noise, seed);
    let err = all
        .samples()
        .iter()
        .zip(a.samples().iter().zip(b.samples()).zip(n.samples()))
        .map(|(x, ((a, b), n))| (x - (a + b - n)).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}
