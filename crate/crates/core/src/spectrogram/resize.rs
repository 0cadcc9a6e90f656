//! Separable Catmull-Rom resizing.
//!
//! Output sample `o` sits at input coordinate `(o + 0.5) / scale - 0.5`.
//! When shrinking, the kernel is stretched by `1 / scale` so that every input
//! sample contributes (the usual antialiased bicubic); weights are
//! normalized to sum to one and out-of-range taps clamp to the edge sample.

use super::Grid;
use crate::{Error, Result};

/// Catmull-Rom cubic convolution parameter.
pub const CUBIC_A: f64 = -0.5;

pub fn cubic_kernel(x: f64) -> f64 {
    let a = CUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Sparse resampling matrix for one axis, stored row by row.
#[derive(Debug, Clone)]
pub(crate) struct AxisWeights {
    offsets: Vec<usize>,
    index: Vec<usize>,
    weight: Vec<f64>,
}

impl AxisWeights {
    pub(crate) fn new(n_in: usize, n_out: usize) -> Self {
        let scale = n_out as f64 / n_in as f64;
        let kscale = scale.min(1.0);
        let support = 2.0 / kscale;
        let mut offsets = Vec::with_capacity(n_out + 1);
        let mut index = Vec::new();
        let mut weight = Vec::new();
        offsets.push(0);
        for o in 0..n_out {
            let u = (o as f64 + 0.5) / scale - 0.5;
            let first = (u - support).floor() as isize;
            let last = (u + support).ceil() as isize;
            let start = index.len();
            for i in first..=last {
                let w = cubic_kernel((u - i as f64) * kscale);
                if w == 0.0 {
                    continue;
                }
                let clamped = i.clamp(0, n_in as isize - 1) as usize;
                if index.len() > start && index[index.len() - 1] == clamped {
                    *weight.last_mut().unwrap() += w;
                } else {
                    index.push(clamped);
                    weight.push(w);
                }
            }
            let sum: f64 = weight[start..].iter().sum();
            weight[start..].iter_mut().for_each(|w| *w /= sum);
            offsets.push(index.len());
        }
        Self {
            offsets,
            index,
            weight,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub(crate) fn taps(&self, o: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[o]..self.offsets[o + 1];
        self.index[r.clone()]
            .iter()
            .copied()
            .zip(self.weight[r].iter().copied())
    }

    /// Resamples one line.
    pub(crate) fn apply(&self, input: &[f64], out: &mut [f64]) {
        for (o, y) in out.iter_mut().enumerate() {
            *y = self.taps(o).map(|(i, w)| input[i] * w).sum();
        }
    }

    /// The transpose: for each input index, the `(output, weight)` pairs
    /// that read it, in ascending output order.
    pub(crate) fn transpose(&self, n_in: usize) -> Vec<Vec<(usize, f64)>> {
        let mut t = vec![Vec::new(); n_in];
        for o in 0..self.len() {
            for (i, w) in self.taps(o) {
                t[i].push((o, w));
            }
        }
        t
    }
}

/// Bicubic resize of `input` to `rows x cols`.
pub fn resize_bicubic(input: &Grid<f64>, rows: usize, cols: usize) -> Result<Grid<f64>> {
    if input.rows() < 4 || input.cols() < 4 {
        return Err(Error::InvalidArgument(format!(
            "bicubic resize needs at least 4x4 input, got {}x{}",
            input.rows(),
            input.cols()
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("empty output size".into()));
    }
    let h = AxisWeights::new(input.cols(), cols);
    let v = AxisWeights::new(input.rows(), rows);
    let mut wide = vec![0.0; input.rows() * cols];
    for (r, line) in wide.chunks_exact_mut(cols).enumerate() {
        h.apply(input.row(r), line);
    }
    let mut out = vec![0.0; rows * cols];
    for (o, line) in out.chunks_exact_mut(cols).enumerate() {
        for (i, w) in v.taps(o) {
            let src = &wide[i * cols..(i + 1) * cols];
            for (y, x) in line.iter_mut().zip(src) {
                *y += w * x;
            }
        }
    }
    Grid::new(rows, cols, out)
}
