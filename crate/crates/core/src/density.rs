//! Gaussian kernel density of localizations and dense/sparse region masks.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dataset::{Dataset, Point};
use crate::error::{Error, Result};
use crate::render::GridGeometry;

/// Kernel support radius in bandwidths; contributions beyond it are dropped.
pub const TRUNCATION_BANDWIDTHS: f64 = 6.0;

/// Default bandwidth in wavelengths.
pub const DEFAULT_BANDWIDTH_WAVELENGTHS: f64 = 2.0;
/// Default density quantile separating sparse (below) from dense (at or above).
pub const DEFAULT_QUANTILE: f64 = 0.75;

/// Probability density per m² evaluated at pixel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityMap {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Peak value of a normalized isotropic 2-D Gaussian kernel.
#[inline]
pub fn kernel_peak(bandwidth: f64) -> f64 {
    1.0 / (2.0 * PI * bandwidth * bandwidth)
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if bandwidth > 0.0 && bandwidth.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "bandwidth must be positive, got {bandwidth}"
        )))
    }
}

/// Truncated Gaussian KDE over every localization of every frame.
pub fn kde_density(dataset: &Dataset, bandwidth: f64) -> Result<DensityMap> {
    check_bandwidth(bandwidth)?;
    let n = dataset.total_points();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let geometry = GridGeometry::from_config(dataset.config());
    let points: Vec<Point> = dataset.points().copied().collect();
    let mut values = vec![0.0; geometry.len()];
    kde_rows(&points, &geometry, bandwidth, 0, &mut values);
    Ok(DensityMap {
        geometry,
        values,
        bandwidth,
    })
}

/// Evaluates the KDE for rows `row_start .. row_start + out.len() / width`
/// into `out`.
///
/// Each pixel accumulates contributions in point order, so splitting the
/// rows across workers reproduces [`kde_density`] bit for bit.
pub fn kde_rows(points: &[Point], geometry: &GridGeometry, bandwidth: f64, row_start: usize, out: &mut [f64]) {
    let width = geometry.width;
    debug_assert_eq!(out.len() % width, 0);
    let row_end = row_start + out.len() / width;
    if points.is_empty() || row_start == row_end {
        return;
    }
    let scale = kernel_peak(bandwidth) / points.len() as f64;
    let inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    let radius = TRUNCATION_BANDWIDTHS * bandwidth;
    let radius2 = radius * radius;
    let p = geometry.pixel_size;

    let mut col_weights: Vec<f64> = Vec::new();
    let mut col_dx2: Vec<f64> = Vec::new();
    for point in points {
        // pixel centers within `radius` along each axis
        let (c0, c1) = center_range(point.x - geometry.x_min, radius, p, width);
        let (r0, r1) = center_range(point.z - geometry.z_min, radius, p, geometry.height);
        let r0 = r0.max(row_start);
        let r1 = r1.min(row_end);
        if c0 >= c1 || r0 >= r1 {
            continue;
        }
        col_weights.clear();
        col_dx2.clear();
        for col in c0..c1 {
            let dx = geometry.x_min + (col as f64 + 0.5) * p - point.x;
            let dx2 = dx * dx;
            col_dx2.push(dx2);
            col_weights.push(libm::exp(-dx2 * inv_two_h2));
        }
        // dx² falls then rises along the row, so the in-disc columns of any
        // row form one contiguous run around the nearest column
        let nearest = col_dx2
            .iter()
            .enumerate()
            .fold(0, |best, (k, &d)| if d < col_dx2[best] { k } else { best });
        for row in r0..r1 {
            let dz = geometry.z_min + (row as f64 + 0.5) * p - point.z;
            let dz2 = dz * dz;
            if col_dx2[nearest] + dz2 > radius2 {
                continue;
            }
            let lo = col_dx2[..nearest].partition_point(|&d| d + dz2 > radius2);
            let hi = nearest + col_dx2[nearest..].partition_point(|&d| d + dz2 <= radius2);
            let row_weight = scale * libm::exp(-dz2 * inv_two_h2);
            let offset = (row - row_start) * width + c0;
            let line = &mut out[offset + lo..offset + hi];
            for (o, w) in line.iter_mut().zip(&col_weights[lo..hi]) {
                *o += row_weight * w;
            }
        }
    }
}

/// Half-open index range of pixel centers `(i + 0.5) * p` within `radius` of
/// `offset`, widened by one pixel on each side and clipped to `[0, len)`.
/// The exact distance test happens at the call site.
fn center_range(offset: f64, radius: f64, p: f64, len: usize) -> (usize, usize) {
    let lo = libm::floor((offset - radius) / p - 0.5) - 1.0;
    let hi = libm::ceil((offset + radius) / p - 0.5) + 2.0;
    let clip = |v: f64| -> usize {
        if v <= 0.0 {
            0
        } else if v >= len as f64 {
            len
        } else {
            v as usize
        }
    };
    (clip(lo), clip(hi))
}

/// Pixel-wise region labels; `true` is dense.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    pub width: usize,
    pub height: usize,
    pub dense: Vec<bool>,
}

impl RegionMask {
    pub fn new(width: usize, height: usize, dense: Vec<bool>) -> Self {
        assert_eq!(dense.len(), width * height, "label count does not match dimensions");
        Self { width, height, dense }
    }

    /// Every pixel labeled dense, i.e. the whole image.
    pub fn all(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![true; width * height])
    }

    /// Swaps dense and sparse.
    pub fn complement(&self) -> Self {
        Self::new(self.width, self.height, self.dense.iter().map(|d| !d).collect())
    }

    pub fn dense_count(&self) -> usize {
        self.dense.iter().filter(|&&d| d).count()
    }

    pub fn len(&self) -> usize {
        self.dense.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense.is_empty()
    }
}

/// Quantile of `values` with linear interpolation between order statistics
/// (position `q * (n - 1)`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty set");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Marks pixels whose density reaches the `quantile`-th quantile as dense.
pub fn threshold_mask(density: &DensityMap, quantile_level: f64) -> Result<RegionMask> {
    if !(0.0..=1.0).contains(&quantile_level) {
        return Err(Error::InvalidParameter(alloc::format!(
            "quantile must lie in [0, 1], got {quantile_level}"
        )));
    }
    let t = quantile(&density.values, quantile_level);
    let dense = density.values.iter().map(|&v| v >= t).collect();
    Ok(RegionMask::new(density.geometry.width, density.geometry.height, dense))
}

/// Fraction of pixels labeled dense.
pub fn mask_coverage(mask: &RegionMask) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    mask.dense_count() as f64 / mask.len() as f64
}
