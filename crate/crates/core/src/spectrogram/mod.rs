//! Capture to 512x512 spectrogram image.
//!
//! Frames of 256 samples, Hann-windowed and zero-padded to a 1024-point DFT,
//! hop 128 samples. Columns are fftshifted so DC sits at column `nfft / 2`;
//! rows run forward in time. Power is rendered in dB, resized with bicubic
//! interpolation and min-max normalized per image.
//!
//! [`render`] streams frames straight into the resized image and never holds
//! the full 39,061 x 1024 STFT; [`stft`], [`power_db`], [`resize_bicubic`] and
//! [`normalize01`] are the same steps as standalone transforms.

mod resize;

use num_complex::Complex64;
use rustfft::FftPlanner;

pub use resize::{cubic_kernel, resize_bicubic, CUBIC_A};

use crate::iq::IqBuffer;
use crate::{Error, Result, IMAGE_SIZE};
use resize::AxisWeights;

/// Floor added to `|X|^2` before taking the logarithm.
pub const POWER_EPS: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub nfft: usize,
    /// Periodic Hann window length.
    pub window_len: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            nfft: 1024,
            window_len: 256,
            hop: 128,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.hop > self.window_len || self.window_len > self.nfft {
            return Err(Error::InvalidArgument(format!(
                "need 0 < hop <= window <= nfft, got hop {} window {} nfft {}",
                self.hop, self.window_len, self.nfft
            )));
        }
        Ok(())
    }

    /// `floor((n - window) / hop) + 1`, or 0 when `n < window`.
    pub fn frame_count(&self, n: usize) -> usize {
        if n < self.window_len {
            0
        } else {
            (n - self.window_len) / self.hop + 1
        }
    }

    pub fn window(&self) -> Vec<f64> {
        hann_periodic(self.window_len)
    }
}

pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
        .collect()
}

/// Computes frames in order and hands each fftshifted spectrum to `sink`.
struct FrameEngine {
    cfg: StftConfig,
    window: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FrameEngine {
    fn new(cfg: StftConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(cfg.nfft);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Self {
            window: cfg.window(),
            buf: vec![Complex64::new(0.0, 0.0); cfg.nfft],
            cfg,
            fft,
            scratch,
        }
    }

    /// Raw (unshifted) spectrum of frame `f`.
    fn spectrum(&mut self, samples: &[Complex64], f: usize) -> &[Complex64] {
        let start = f * self.cfg.hop;
        let seg = &samples[start..start + self.cfg.window_len];
        for ((b, x), w) in self.buf.iter_mut().zip(seg).zip(&self.window) {
            *b = x * w;
        }
        self.buf[self.cfg.window_len..].fill(Complex64::new(0.0, 0.0));
        self.fft
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        &self.buf
    }
}

fn check_input(iq: &IqBuffer, cfg: &StftConfig) -> Result<usize> {
    cfg.validate()?;
    let frames = cfg.frame_count(iq.len());
    if frames == 0 {
        return Err(Error::InvalidArgument(format!(
            "buffer of {} samples is shorter than one {}-sample window",
            iq.len(),
            cfg.window_len
        )));
    }
    Ok(frames)
}

/// Full STFT, `frames x nfft`, each row fftshifted.
pub fn stft(iq: &IqBuffer, cfg: &StftConfig) -> Result<Grid<Complex64>> {
    let frames = check_input(iq, cfg)?;
    let n = cfg.nfft;
    let mut engine = FrameEngine::new(*cfg);
    let mut data = Vec::with_capacity(frames * n);
    for f in 0..frames {
        let spec = engine.spectrum(iq.samples(), f);
        data.extend_from_slice(&spec[n / 2..]);
        data.extend_from_slice(&spec[..n / 2]);
    }
    Grid::new(frames, n, data)
}

/// `10 log10(|X|^2 + 1e-12)`.
pub fn power_db(matrix: &Grid<Complex64>) -> Grid<f64> {
    Grid {
        rows: matrix.rows,
        cols: matrix.cols,
        data: matrix.data.iter().map(|v| db(v.norm_sqr())).collect(),
    }
}

#[inline]
fn db(power: f64) -> f64 {
    10.0 * (power + POWER_EPS).log10()
}

/// Normalized grayscale spectrogram, row 0 = start of capture, column 0 =
/// -50 MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramImage {
    pixels: Vec<f64>,
}

impl SpectrogramImage {
    pub const SIZE: usize = IMAGE_SIZE;

    pub fn new(pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != Self::SIZE * Self::SIZE {
            return Err(Error::InvalidArgument(format!(
                "expected {} pixels, got {}",
                Self::SIZE * Self::SIZE,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(format!(
                "pixel {i} = {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self { pixels })
    }

    pub fn zeros() -> Self {
        Self {
            pixels: vec![0.0; Self::SIZE * Self::SIZE],
        }
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * Self::SIZE + col]
    }

    /// Hz covered by one pixel column.
    pub fn hz_per_px() -> f64 {
        crate::SAMPLE_RATE_HZ / Self::SIZE as f64
    }

    /// Seconds covered by one pixel row.
    pub fn s_per_px() -> f64 {
        crate::CAPTURE_DURATION_S / Self::SIZE as f64
    }
}

/// Min-max normalization to `[0, 1]`; a constant input maps to zeros.
pub fn normalize01(matrix: &Grid<f64>) -> Result<SpectrogramImage> {
    if matrix.rows != IMAGE_SIZE || matrix.cols != IMAGE_SIZE {
        return Err(Error::InvalidArgument(format!(
            "spectrogram images are {IMAGE_SIZE}x{IMAGE_SIZE}, got {}x{}",
            matrix.rows, matrix.cols
        )));
    }
    Ok(SpectrogramImage {
        pixels: normalize_values(&matrix.data),
    })
}

pub(crate) fn normalize_values(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![0.0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / span).clamp(0.0, 1.0))
        .collect()
}

/// dB spectrogram resized to `rows x cols`, computed frame by frame.
/// Equal to `resize_bicubic(&power_db(&stft(iq)), rows, cols)`.
pub fn render_db(iq: &IqBuffer, cfg: &StftConfig, rows: usize, cols: usize) -> Result<Grid<f64>> {
    let frames = check_input(iq, cfg)?;
    if frames < 4 || cfg.nfft < 4 {
        return Err(Error::InvalidArgument(format!(
            "bicubic resize needs at least 4 frames, got {frames}"
        )));
    }
    let n = cfg.nfft;
    let horizontal = AxisWeights::new(n, cols);
    let vertical = AxisWeights::new(frames, rows).transpose(frames);
    let mut engine = FrameEngine::new(*cfg);
    let mut line_db = vec![0.0; n];
    let mut line = vec![0.0; cols];
    let mut out = vec![0.0; rows * cols];
    for (f, targets) in vertical.iter().enumerate() {
        let spec = engine.spectrum(iq.samples(), f);
        let (neg, pos) = spec.split_at(n / 2);
        for (d, v) in line_db.iter_mut().zip(pos.iter().chain(neg)) {
            *d = db(v.norm_sqr());
        }
        horizontal.apply(&line_db, &mut line);
        for &(r, w) in targets {
            for (y, x) in out[r * cols..(r + 1) * cols].iter_mut().zip(&line) {
                *y += w * x;
            }
        }
    }
    Grid::new(rows, cols, out)
}

/// The 512x512 normalized spectrogram of a capture.
pub fn render(iq: &IqBuffer, cfg: &StftConfig) -> Result<SpectrogramImage> {
    normalize01(&render_db(iq, cfg, IMAGE_SIZE, IMAGE_SIZE)?)
}
