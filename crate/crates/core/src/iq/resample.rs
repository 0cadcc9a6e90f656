//! Arbitrary-ratio polyphase resampling.
//!
//! A windowed-sinc prototype is tabulated at `PHASES` fractional offsets.
//! Each output sample picks the nearest phase and runs one short FIR over
//! the surrounding input samples, so the cost is independent of how
//! irrational the rate ratio is.

use num_complex::Complex64;

/// Taps on each side of the interpolation point, in input samples, when
/// interpolating. Decimation widens this by the rate ratio.
pub const HALF_TAPS: usize = 12;
const PHASES: usize = 512;

#[derive(Debug, Clone)]
pub struct PolyphaseResampler {
    step: f64,
    half: usize,
    bank: Vec<f64>,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// 4-term Blackman-Harris window over `x` in `[-1, 1]`.
fn blackman_harris(x: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    let px = std::f64::consts::PI * x;
    0.35875 + 0.48829 * px.cos() + 0.14128 * (2.0 * px).cos() + 0.01168 * (3.0 * px).cos()
}

impl PolyphaseResampler {
    pub fn new(rate_in: f64, rate_out: f64) -> Self {
        assert!(rate_in > 0.0 && rate_out > 0.0);
        let scale = (rate_out / rate_in).min(1.0);
        let half = (HALF_TAPS as f64 / scale).ceil() as usize;
        let width = 2 * half;
        let mut bank = vec![0.0; (PHASES + 1) * width];
        for p in 0..=PHASES {
            let frac = p as f64 / PHASES as f64;
            let row = &mut bank[p * width..(p + 1) * width];
            for (j, tap) in row.iter_mut().enumerate() {
                let t = (j as f64 - (half as f64 - 1.0)) - frac;
                *tap = scale * sinc(scale * t) * blackman_harris(t / half as f64);
            }
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|t| *t /= sum);
        }
        Self {
            step: rate_in / rate_out,
            half,
            bank,
        }
    }

    /// Input samples consumed on each side of an output position.
    pub fn half_width(&self) -> usize {
        self.half
    }

    /// Produces `n_out` samples; output `n` sits at input position
    /// `offset + n * rate_in / rate_out`. Input outside the slice is zero.
    pub fn process(&self, input: &[Complex64], n_out: usize, offset: f64) -> Vec<Complex64> {
        let width = 2 * self.half;
        let len = input.len() as isize;
        let mut out = Vec::with_capacity(n_out);
        for n in 0..n_out {
            let u = offset + n as f64 * self.step;
            let i = u.floor();
            let mut p = ((u - i) * PHASES as f64).round() as usize;
            let mut base = i as isize - (self.half as isize - 1);
            if p == PHASES {
                p = 0;
                base += 1;
            }
            let row = &self.bank[p * width..(p + 1) * width];
            let mut acc = Complex64::new(0.0, 0.0);
            if base >= 0 && base + width as isize <= len {
                let seg = &input[base as usize..base as usize + width];
                for (x, &h) in seg.iter().zip(row) {
                    acc += x * h;
                }
            } else {
                for (j, &h) in row.iter().enumerate() {
                    let k = base + j as isize;
                    if (0..len).contains(&k) {
                        acc += input[k as usize] * h;
                    }
                }
            }
            out.push(acc);
        }
        out
    }
}
