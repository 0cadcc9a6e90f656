//! Energy-threshold detector used as the traditional baseline.
//!
//! The image is box-smoothed and binarized at `floor + k * spread`, where
//! the floor and spread are a median / MAD estimate over the raw pixels, and
//! every 4- or 8-connected foreground component at least `min_area` pixels
//! large becomes one class-agnostic detection. This is a representative of
//! the genre, not a reconstruction of any particular published detector.

use crate::dataset::{BoundingBox, Detection};
use crate::spectrogram::SpectrogramImage;
use crate::{Error, Result};

/// Consistency constant turning a MAD into a Gaussian standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "4" => Ok(Self::Four),
            "8" => Ok(Self::Eight),
            other => Err(Error::InvalidArgument(format!(
                "connectivity must be 4 or 8, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Connectivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Four => "4",
            Self::Eight => "8",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDetectorConfig {
    /// Smoothing half-width along rows (time).
    pub smooth_time: usize,
    /// Smoothing half-width along columns (frequency).
    pub smooth_freq: usize,
    pub k: f64,
    pub connectivity: Connectivity,
    pub min_area: usize,
}

impl Default for EnergyDetectorConfig {
    fn default() -> Self {
        Self {
            smooth_time: 1,
            smooth_freq: 4,
            k: 4.0,
            connectivity: Connectivity::Eight,
            min_area: 16,
        }
    }
}

impl EnergyDetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "threshold k must be positive, got {}",
                self.k
            )));
        }
        if self.min_area == 0 {
            return Err(Error::InvalidArgument("min_area must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lower median of the values (the `(n-1)/2`-th order statistic).
fn lower_median(values: &mut [f64]) -> f64 {
    let mid = (values.len() - 1) / 2;
    *values.select_nth_unstable_by(mid, f64::total_cmp).1
}

/// `(median, 1.4826 * median |p - median|)` using the lower median for even
/// counts.
pub fn estimate_noise_floor(pixels: &[f64]) -> Result<(f64, f64)> {
    if pixels.is_empty() {
        return Err(Error::InvalidArgument(
            "noise floor of an empty image".into(),
        ));
    }
    let mut v = pixels.to_vec();
    let floor = lower_median(&mut v);
    for p in v.iter_mut() {
        *p = (*p - floor).abs();
    }
    Ok((floor, MAD_SCALE * lower_median(&mut v)))
}

/// Mean over a `(2*ht+1) x (2*hf+1)` window, truncated at the edges.
pub fn box_smooth(pixels: &[f64], rows: usize, cols: usize, ht: usize, hf: usize) -> Vec<f64> {
    let w = cols + 1;
    let mut sat = vec![0.0; (rows + 1) * w];
    for r in 0..rows {
        let mut run = 0.0;
        for c in 0..cols {
            run += pixels[r * cols + c];
            sat[(r + 1) * w + c + 1] = sat[r * w + c + 1] + run;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let (r0, r1) = (r.saturating_sub(ht), (r + ht + 1).min(rows));
        for c in 0..cols {
            let (c0, c1) = (c.saturating_sub(hf), (c + hf + 1).min(cols));
            let sum = sat[r1 * w + c1] - sat[r0 * w + c1] - sat[r1 * w + c0] + sat[r0 * w + c0];
            out[r * cols + c] = sum / ((r1 - r0) * (c1 - c0)) as f64;
        }
    }
    out
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi] = lo;
        }
    }
}

/// Pixel set of one connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub pixels: Vec<(usize, usize)>,
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

/// Connected components of `mask`, ordered by their first pixel in raster
/// order.
pub fn connected_components(
    mask: &[bool],
    rows: usize,
    cols: usize,
    conn: Connectivity,
) -> Vec<Component> {
    let mut ds = DisjointSet::new(mask.len());
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if !mask[i] {
                continue;
            }
            if c > 0 && mask[i - 1] {
                ds.union(i, i - 1);
            }
            if r > 0 {
                let up = i - cols;
                if mask[up] {
                    ds.union(i, up);
                }
                if conn == Connectivity::Eight {
                    if c > 0 && mask[up - 1] {
                        ds.union(i, up - 1);
                    }
                    if c + 1 < cols && mask[up + 1] {
                        ds.union(i, up + 1);
                    }
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; mask.len()];
    let mut comps: Vec<Component> = Vec::new();
    for i in (0..mask.len()).filter(|&i| mask[i]) {
        let root = ds.find(i);
        let (r, c) = (i / cols, i % cols);
        if slot[root] == usize::MAX {
            slot[root] = comps.len();
            comps.push(Component {
                pixels: Vec::new(),
                row_min: r,
                row_max: r,
                col_min: c,
                col_max: c,
            });
        }
        let comp = &mut comps[slot[root]];
        comp.pixels.push((r, c));
        comp.row_min = comp.row_min.min(r);
        comp.row_max = comp.row_max.max(r);
        comp.col_min = comp.col_min.min(c);
        comp.col_max = comp.col_max.max(c);
    }
    comps
}

/// Foreground mask: the smoothed image compared against a floor and spread
/// estimated on the unsmoothed pixels.
pub fn foreground_mask(image: &SpectrogramImage, cfg: &EnergyDetectorConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    let n = SpectrogramImage::SIZE;
    let (floor, spread) = estimate_noise_floor(image.pixels())?;
    let smooth = box_smooth(image.pixels(), n, n, cfg.smooth_time, cfg.smooth_freq);
    let threshold = floor + cfg.k * spread;
    Ok(smooth.iter().map(|&v| v > threshold).collect())
}

/// Runs the detector. Boxes cover whole pixels: a component spanning
/// columns `c0..=c1` gives `x_min = c0`, `x_max = c1 + 1`.
pub fn detect(image: &SpectrogramImage, cfg: &EnergyDetectorConfig) -> Result<Vec<Detection>> {
    let n = SpectrogramImage::SIZE;
    let mask = foreground_mask(image, cfg)?;
    let mut out = Vec::new();
    for comp in connected_components(&mask, n, n, cfg.connectivity) {
        if comp.pixels.len() < cfg.min_area {
            continue;
        }
        let mean = comp
            .pixels
            .iter()
            .map(|&(r, c)| image.get(r, c))
            .sum::<f64>()
            / comp.pixels.len() as f64;
        out.push(Detection {
            class_id: 0,
            bbox: BoundingBox::new(
                comp.col_min as f64,
                comp.row_min as f64,
                (comp.col_max + 1) as f64,
                (comp.row_max + 1) as f64,
            )?,
            score: mean.clamp(0.0, 1.0),
        });
    }
    Ok(out)
}
