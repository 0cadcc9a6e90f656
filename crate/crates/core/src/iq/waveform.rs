//! Per-class baseband waveform generators.
//!
//! Each generator runs at its own internal rate (a small multiple of its
//! symbol or message rate) and the result is polyphase-resampled to the
//! capture rate. Occupied bandwidth tracks the requested bandwidth.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use super::resample::{PolyphaseResampler, HALF_TAPS};
use super::{IqBuffer, SignalClass, SignalSpec};
use crate::rng::Stream;
use crate::{Error, Result, SAMPLE_RATE_HZ};

/// Root-raised-cosine roll-off shared by QAM and DSSS.
pub const RRC_ROLLOFF: f64 = 0.35;
/// RRC span in symbols on each side of the peak.
const RRC_SPAN: usize = 8;
/// 16-QAM symbol rate is `bandwidth / (1 + RRC_ROLLOFF)`; DSSS chips likewise.
const SHAPED_SPS: usize = 4;

/// Gaussian filter bandwidth-time product for BLE.
pub const GFSK_BT: f64 = 0.5;
/// GFSK modulation index.
pub const GFSK_INDEX: f64 = 0.5;
/// BLE symbol rate is `bandwidth / GFSK_BW_PER_RATE`.
const GFSK_BW_PER_RATE: f64 = 1.0;
const GFSK_SPS: usize = 8;

pub const OFDM_SUBCARRIERS: usize = 64;
pub const OFDM_ACTIVE_HALF: usize = 26;
pub const OFDM_CYCLIC_PREFIX: usize = 16;
const OFDM_OVERSAMPLE: usize = 4;

pub const AM_INDEX: f64 = 0.5;
/// FM message bandwidth as a fraction of the signal bandwidth.
const FM_MESSAGE_FRACTION: f64 = 1.0 / 40.0;
/// Analog classes are generated at this multiple of their bandwidth.
const ANALOG_OVERSAMPLE: f64 = 4.0;

pub const MSEQ_LEN: usize = 127;

/// Rate bookkeeping for one class at one bandwidth.
#[derive(Debug, Clone, Copy)]
struct Timing {
    internal_rate: f64,
    /// Symbols (or chips, OFDM symbols, message samples) per second.
    symbol_rate: f64,
    min_symbols: f64,
}

fn timing(class: SignalClass, bw: f64) -> Timing {
    match class {
        SignalClass::Qam => {
            let rs = bw / (1.0 + RRC_ROLLOFF);
            Timing {
                internal_rate: rs * SHAPED_SPS as f64,
                symbol_rate: rs,
                min_symbols: 16.0,
            }
        }
        SignalClass::Dsss => {
            let rc = bw / (1.0 + RRC_ROLLOFF);
            Timing {
                internal_rate: rc * SHAPED_SPS as f64,
                symbol_rate: rc,
                min_symbols: MSEQ_LEN as f64,
            }
        }
        SignalClass::Ble => {
            let rs = bw / GFSK_BW_PER_RATE;
            Timing {
                internal_rate: rs * GFSK_SPS as f64,
                symbol_rate: rs,
                min_symbols: 16.0,
            }
        }
        SignalClass::Wifi => {
            let nominal = (OFDM_SUBCARRIERS + OFDM_CYCLIC_PREFIX) as f64;
            Timing {
                internal_rate: bw * OFDM_OVERSAMPLE as f64,
                symbol_rate: bw / nominal,
                min_symbols: 1.0,
            }
        }
        SignalClass::Am | SignalClass::Fm => Timing {
            internal_rate: bw * ANALOG_OVERSAMPLE,
            symbol_rate: bw,
            min_symbols: 16.0,
        },
    }
}

pub(super) fn synthesize(spec: &SignalSpec, rng: &mut Stream) -> Result<IqBuffer> {
    spec.validate()?;
    let bw = spec.bandwidth_hz;
    let t = timing(spec.class, bw);
    if spec.duration_s * t.symbol_rate < t.min_symbols {
        return Err(Error::DegenerateBandwidth {
            class: spec.class,
            bandwidth_hz: bw,
            duration_s: spec.duration_s,
            min_symbols: t.min_symbols,
        });
    }
    let n_out = (spec.duration_s * SAMPLE_RATE_HZ).round() as usize;
    let resampler = PolyphaseResampler::new(t.internal_rate, SAMPLE_RATE_HZ);
    let pad = resampler.half_width().max(HALF_TAPS) + 2;
    let n_int = (n_out as f64 * t.internal_rate / SAMPLE_RATE_HZ).ceil() as usize + 2 * pad + 1;

    let internal = match spec.class {
        SignalClass::Qam => qam16(n_int, rng),
        SignalClass::Dsss => dsss(n_int, rng),
        SignalClass::Ble => gfsk(n_int, rng),
        SignalClass::Wifi => ofdm(n_int, rng),
        SignalClass::Am => am(n_int, t.internal_rate, bw, rng),
        SignalClass::Fm => fm(n_int, t.internal_rate, bw, rng),
    };
    let mut out = resampler.process(&internal, n_out, pad as f64);
    normalize_power(&mut out);
    IqBuffer::new(out, SAMPLE_RATE_HZ)
}

pub(crate) fn normalize_power(x: &mut [Complex64]) {
    let p = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    if p > 0.0 {
        let g = 1.0 / p.sqrt();
        x.iter_mut().for_each(|v| *v *= g);
    }
}

/// Root-raised-cosine impulse response at `t` symbol periods.
pub fn rrc(t: f64, beta: f64) -> f64 {
    if t == 0.0 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let edge = 1.0 / (4.0 * beta);
    if (t.abs() - edge).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

fn rrc_taps(sps: usize) -> Vec<f64> {
    let n = 2 * RRC_SPAN * sps + 1;
    let mid = (n / 2) as f64;
    let taps: Vec<f64> = (0..n)
        .map(|i| rrc((i as f64 - mid) / sps as f64, RRC_ROLLOFF))
        .collect();
    let energy = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.into_iter().map(|t| t / energy).collect()
}

/// Upsamples `symbols` by `sps` through `taps`, discarding the filter
/// warm-up, and returns exactly `n` samples.
fn pulse_shape(symbols: &[Complex64], sps: usize, taps: &[f64], n: usize) -> Vec<Complex64> {
    let full = symbols.len() * sps + taps.len();
    let mut y = vec![Complex64::new(0.0, 0.0); full];
    for (k, &a) in symbols.iter().enumerate() {
        let base = k * sps;
        for (j, &h) in taps.iter().enumerate() {
            y[base + j] += a * h;
        }
    }
    let skip = taps.len();
    assert!(full >= skip + n, "not enough symbols for requested length");
    y.drain(..skip);
    y.truncate(n);
    y
}

fn symbols_for(n: usize, sps: usize) -> usize {
    n / sps + 2 * (2 * RRC_SPAN + 1) + 2
}

fn qam16(n: usize, rng: &mut Stream) -> Vec<Complex64> {
    const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
    let scale = 1.0 / 10f64.sqrt();
    let symbols: Vec<Complex64> = (0..symbols_for(n, SHAPED_SPS))
        .map(|_| {
            let s: u8 = rng.random_range(0..16);
            Complex64::new(LEVELS[(s & 3) as usize], LEVELS[(s >> 2) as usize]) * scale
        })
        .collect();
    pulse_shape(&symbols, SHAPED_SPS, &rrc_taps(SHAPED_SPS), n)
}

/// One period of the length-127 maximal-length sequence from the
/// recurrence s[n+7] = s[n+1] ^ s[n] (primitive x^7 + x + 1), as +-1 chips.
pub fn m_sequence() -> [f64; MSEQ_LEN] {
    let mut state: u8 = 0x7f;
    let mut out = [0.0; MSEQ_LEN];
    for chip in out.iter_mut() {
        let bit = state & 1;
        *chip = if bit == 1 { -1.0 } else { 1.0 };
        let fb = (state ^ (state >> 1)) & 1;
        state = (state >> 1) | (fb << 6);
    }
    out
}

fn dsss(n: usize, rng: &mut Stream) -> Vec<Complex64> {
    let code = m_sequence();
    let n_chips = symbols_for(n, SHAPED_SPS);
    let phase = rng.random_range(0..MSEQ_LEN);
    let mut bit = 1.0;
    let chips: Vec<Complex64> = (0..n_chips)
        .map(|i| {
            let c = (i + phase) % MSEQ_LEN;
            if c == 0 || i == 0 {
                bit = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
            Complex64::new(bit * code[c], 0.0)
        })
        .collect();
    pulse_shape(&chips, SHAPED_SPS, &rrc_taps(SHAPED_SPS), n)
}

fn gaussian_taps(sps: usize) -> Vec<f64> {
    // Gaussian with bandwidth B = BT / T; span +-2 symbols.
    let span = 2 * sps;
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * GFSK_BT) * sps as f64;
    let taps: Vec<f64> = (0..=2 * span)
        .map(|i| {
            let t = i as f64 - span as f64;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

fn gfsk(n: usize, rng: &mut Stream) -> Vec<Complex64> {
    let taps = gaussian_taps(GFSK_SPS);
    let n_sym = n / GFSK_SPS + taps.len() / GFSK_SPS + 4;
    let mut nrz = Vec::with_capacity(n_sym * GFSK_SPS);
    for _ in 0..n_sym {
        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        nrz.extend(std::iter::repeat_n(s, GFSK_SPS));
    }
    // Peak deviation h/2 cycles per symbol; phase advance per sample follows.
    let dphi = PI * GFSK_INDEX / GFSK_SPS as f64;
    let mut phase = rng.random::<f64>() * 2.0 * PI;
    let skip = taps.len();
    let mut out = Vec::with_capacity(n);
    for m in 0..n + skip {
        if m + taps.len() > nrz.len() {
            break;
        }
        let g: f64 = nrz[m..m + taps.len()]
            .iter()
            .zip(&taps)
            .map(|(a, b)| a * b)
            .sum();
        phase += dphi * g;
        if m >= skip {
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    out.truncate(n);
    out
}

fn ofdm(n: usize, rng: &mut Stream) -> Vec<Complex64> {
    let size = OFDM_SUBCARRIERS * OFDM_OVERSAMPLE;
    let cp = OFDM_CYCLIC_PREFIX * OFDM_OVERSAMPLE;
    let ifft = FftPlanner::new().plan_fft_inverse(size);
    let qpsk = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n + size + cp);
    let mut bins = vec![Complex64::new(0.0, 0.0); size];
    while out.len() < n {
        bins.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for k in 1..=OFDM_ACTIVE_HALF {
            for idx in [k, size - k] {
                let (re, im): (bool, bool) = (rng.random(), rng.random());
                bins[idx] =
                    Complex64::new(if re { qpsk } else { -qpsk }, if im { qpsk } else { -qpsk });
            }
        }
        ifft.process(&mut bins);
        out.extend_from_slice(&bins[size - cp..]);
        out.extend_from_slice(&bins);
    }
    out.truncate(n);
    out
}

/// Real Gaussian noise band-limited to `|f| <= cutoff`, unit variance.
fn bandlimited_noise(n: usize, rate: f64, cutoff: f64, rng: &mut Stream) -> Vec<f64> {
    let size = n.next_power_of_two();
    let mut buf: Vec<Complex64> = (0..size)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    let keep = ((cutoff / rate) * size as f64).floor() as usize;
    for (k, b) in buf.iter_mut().enumerate() {
        let f = k.min(size - k);
        if f > keep {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let mut out: Vec<f64> = buf[..n].iter().map(|v| v.re).collect();
    let mean = out.iter().sum::<f64>() / n as f64;
    let var = out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let g = 1.0 / var.sqrt();
    out.iter_mut().for_each(|v| *v = (*v - mean) * g);
    out
}

fn am(n: usize, rate: f64, bw: f64, rng: &mut Stream) -> Vec<Complex64> {
    bandlimited_noise(n, rate, bw / 2.0, rng)
        .into_iter()
        .map(|m| Complex64::new(1.0 + AM_INDEX * m, 0.0))
        .collect()
}

fn fm(n: usize, rate: f64, bw: f64, rng: &mut Stream) -> Vec<Complex64> {
    // The Gaussian message is mapped through its CDF, giving a uniform
    // instantaneous frequency over +-bw/2.
    let msg = bandlimited_noise(n, rate, bw * FM_MESSAGE_FRACTION, rng);
    let deviation = bw / 2.0;
    let mut phase = rng.random::<f64>() * 2.0 * PI;
    msg.into_iter()
        .map(|g| {
            let u = libm::erf(g / 2f64.sqrt());
            phase += 2.0 * PI * deviation * u / rate;
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_sequence_is_maximal() {
        let s = m_sequence();
        let ones = s.iter().filter(|&&c| c < 0.0).count();
        assert_eq!(ones, 64);
        // Two-valued periodic autocorrelation: 127 at lag 0, -1 elsewhere.
        for lag in 0..MSEQ_LEN {
            let r: f64 = (0..MSEQ_LEN).map(|i| s[i] * s[(i + lag) % MSEQ_LEN]).sum();
            let want = if lag == 0 { 127.0 } else { -1.0 };
            assert_eq!(r, want, "lag {lag}");
        }
    }

    #[test]
    fn rrc_is_continuous_at_singularity() {
        let beta = RRC_ROLLOFF;
        let edge = 1.0 / (4.0 * beta);
        let at = rrc(edge, beta);
        let near = rrc(edge + 1e-6, beta);
        assert!((at - near).abs() < 1e-4);
    }

    #[test]
    fn gaussian_taps_have_unit_dc_gain() {
        let s: f64 = gaussian_taps(GFSK_SPS).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
