//! Complex baseband synthesis and scene composition.
//!
//! A capture is 5,000,000 complex samples at 100 MS/s (50 ms). Each signal
//! is synthesized at unit mean power, scaled so that its power over its own
//! band sits `snr_db` above the noise, shifted to its center frequency and
//! added at its arrival time. White Gaussian noise of fixed PSD is added once
//! per capture.

mod resample;
mod waveform;

use std::fmt;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

pub use resample::PolyphaseResampler;
pub use waveform::{m_sequence, rrc};

use crate::rng::{self, Stream};
use crate::scene::SceneConfig;
use crate::{Error, Result, BAND_EDGE_HZ, CAPTURE_DURATION_S, CAPTURE_LEN, SAMPLE_RATE_HZ};

/// Slack for floating-point round-off in the capture-window checks.
const TIME_EPS: f64 = 1e-12;
const FREQ_EPS: f64 = 1e-6;

/// Stream index reserved for the capture noise; signal streams are offset
/// past it.
const NOISE_STREAM: u64 = 0;
const SIGNAL_STREAM_BASE: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::InvalidArgument(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); len],
            sample_rate_hz,
        }
    }

    /// An empty full-length capture.
    pub fn empty_capture() -> Self {
        Self::zeros(CAPTURE_LEN, SAMPLE_RATE_HZ)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Writes interleaved little-endian `f32` I/Q pairs with no header.
    pub fn write_iq(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for v in &self.samples {
            w.write_all(&(v.re as f32).to_le_bytes())
                .and_then(|_| w.write_all(&(v.im as f32).to_le_bytes()))
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a header-less `.iq` file written by [`IqBuffer::write_iq`].
    pub fn read_iq(path: impl AsRef<Path>, sample_rate_hz: f64) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::parse(path, 0, "length is not a multiple of 8 bytes"));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        Self::new(samples, sample_rate_hz)
    }
}

/// Signal families present in the dataset. The declaration order is the
/// label class order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignalClass {
    Dsss,
    Ble,
    Qam,
    Am,
    Fm,
    Wifi,
}

impl SignalClass {
    pub const ALL: [SignalClass; 6] = [
        SignalClass::Dsss,
        SignalClass::Ble,
        SignalClass::Qam,
        SignalClass::Am,
        SignalClass::Fm,
        SignalClass::Wifi,
    ];

    pub fn class_id(self) -> u32 {
        self as u32
    }

    pub fn from_class_id(id: u32) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SignalClass::Dsss => "DSSS",
            SignalClass::Ble => "BLE",
            SignalClass::Qam => "QAM",
            SignalClass::Am => "AM",
            SignalClass::Fm => "FM",
            SignalClass::Wifi => "WIFI",
        }
    }
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignalClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown signal class `{s}`")))
    }
}

/// Metadata of one signal instance in a capture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub class: SignalClass,
    pub center_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub snr_db: f64,
    pub arrival_s: f64,
    pub duration_s: f64,
    /// Instance index inside the scene; selects the waveform's random
    /// stream so that subsets of a scene reproduce the same waveforms.
    pub instance: u32,
}

impl SignalSpec {
    pub fn new(
        class: SignalClass,
        center_freq_hz: f64,
        bandwidth_hz: f64,
        snr_db: f64,
        arrival_s: f64,
        duration_s: f64,
    ) -> Self {
        Self {
            class,
            center_freq_hz,
            bandwidth_hz,
            snr_db,
            arrival_s,
            duration_s,
            instance: 0,
        }
    }

    pub fn with_instance(mut self, instance: u32) -> Self {
        self.instance = instance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        let all_finite = [
            self.center_freq_hz,
            self.bandwidth_hz,
            self.snr_db,
            self.arrival_s,
            self.duration_s,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return bad("non-finite field".into());
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz <= 2.0 * BAND_EDGE_HZ) {
            return bad(format!(
                "bandwidth {} Hz outside (0, 1e8]",
                self.bandwidth_hz
            ));
        }
        let half = self.bandwidth_hz / 2.0;
        if self.center_freq_hz - half < -BAND_EDGE_HZ - FREQ_EPS
            || self.center_freq_hz + half > BAND_EDGE_HZ + FREQ_EPS
        {
            return bad(format!(
                "band {} +- {} Hz leaves the +-50 MHz capture",
                self.center_freq_hz, half
            ));
        }
        if self.arrival_s < 0.0 {
            return bad(format!("negative arrival {}", self.arrival_s));
        }
        if self.duration_s <= 0.0 {
            return bad(format!("non-positive duration {}", self.duration_s));
        }
        if self.arrival_s + self.duration_s > CAPTURE_DURATION_S + TIME_EPS {
            return bad(format!(
                "arrival {} + duration {} exceeds the 50 ms capture",
                self.arrival_s, self.duration_s
            ));
        }
        Ok(())
    }

    /// Capture sample range `[start, end)` occupied by this signal.
    pub fn sample_range(&self) -> std::ops::Range<usize> {
        let start = (self.arrival_s * SAMPLE_RATE_HZ).round() as usize;
        let len = (self.duration_s * SAMPLE_RATE_HZ).round() as usize;
        start.min(CAPTURE_LEN)..(start + len).min(CAPTURE_LEN)
    }
}

/// Capture noise floor. Total noise power is `psd * sample_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub psd: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            psd: 1.0 / SAMPLE_RATE_HZ,
        }
    }
}

impl NoiseModel {
    pub fn new(psd: f64) -> Result<Self> {
        if !(psd > 0.0 && psd.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise psd must be positive, got {psd}"
            )));
        }
        Ok(Self { psd })
    }

    /// Noise power inside a band of `bandwidth_hz`.
    pub fn band_power(&self, bandwidth_hz: f64) -> f64 {
        self.psd * bandwidth_hz
    }
}

/// Unit-power baseband waveform for `spec`, `duration_s` long at 100 MS/s.
pub fn synthesize_baseband(spec: &SignalSpec, rng: &mut Stream) -> Result<IqBuffer> {
    waveform::synthesize(spec, rng)
}

/// Scales a unit-power signal so that `P = 10^(snr/10) * psd * bandwidth`.
pub fn scale_to_snr(mut signal: IqBuffer, spec: &SignalSpec, noise: &NoiseModel) -> IqBuffer {
    let power = 10f64.powf(spec.snr_db / 10.0) * noise.band_power(spec.bandwidth_hz);
    let gain = power.sqrt();
    signal.samples.iter_mut().for_each(|v| *v *= gain);
    signal
}

/// Adds `signal`, shifted to `spec.center_freq_hz`, into `capture` starting
/// at `spec.arrival_s`. Samples outside the signal's window are untouched.
pub fn place_in_capture(
    mut capture: IqBuffer,
    signal: &IqBuffer,
    spec: &SignalSpec,
) -> Result<IqBuffer> {
    spec.validate()?;
    let fs = capture.sample_rate_hz;
    let start = (spec.arrival_s * fs).round() as usize;
    if start > capture.len() {
        return Err(Error::InvalidSpec(format!(
            "arrival {} s is past the end of the capture",
            spec.arrival_s
        )));
    }
    let n = signal.len().min(capture.len() - start);
    let cycles_per_sample = spec.center_freq_hz / fs;
    let dst = &mut capture.samples[start..start + n];
    if cycles_per_sample == 0.0 {
        for (d, s) in dst.iter_mut().zip(&signal.samples) {
            *d += s;
        }
    } else {
        for (k, (d, s)) in dst.iter_mut().zip(&signal.samples).enumerate() {
            let cycles = (cycles_per_sample * (start + k) as f64).fract();
            let (sin, cos) = (2.0 * std::f64::consts::PI * cycles).sin_cos();
            *d += s * Complex64::new(cos, sin);
        }
    }
    Ok(capture)
}

/// Complex AWGN capture with per-sample variance `psd * sample_rate`.
pub fn noise_capture(noise: &NoiseModel, seed: u64) -> IqBuffer {
    let mut rng = rng::stream(rng::derive(seed, NOISE_STREAM));
    let sigma = (noise.psd * SAMPLE_RATE_HZ / 2.0).sqrt();
    let samples = (0..CAPTURE_LEN)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * sigma, im * sigma)
        })
        .collect();
    IqBuffer {
        samples,
        sample_rate_hz: SAMPLE_RATE_HZ,
    }
}

/// Random stream for the waveform of signal `instance` in scene `seed`.
pub fn signal_stream(seed: u64, instance: u32) -> Stream {
    rng::stream(rng::derive(seed, SIGNAL_STREAM_BASE + instance as u64))
}

/// Synthesizes, scales and places every signal of `specs` into `capture`.
pub fn add_signals(
    mut capture: IqBuffer,
    specs: &[SignalSpec],
    noise: &NoiseModel,
    seed: u64,
) -> Result<IqBuffer> {
    for spec in specs {
        spec.validate()?;
        let mut rng = signal_stream(seed, spec.instance);
        let unit = synthesize_baseband(spec, &mut rng)?;
        let scaled = scale_to_snr(unit, spec, noise);
        capture = place_in_capture(capture, &scaled, spec)?;
    }
    Ok(capture)
}

/// Full capture for `specs` under scene seed `seed`: noise plus every signal.
pub fn compose_signals(specs: &[SignalSpec], noise: &NoiseModel, seed: u64) -> Result<IqBuffer> {
    for spec in specs {
        spec.validate()?;
    }
    add_signals(noise_capture(noise, seed), specs, noise, seed)
}

pub fn compose_scene(config: &SceneConfig, noise: &NoiseModel) -> Result<IqBuffer> {
    compose_signals(&config.specs, noise, config.seed)
}
