//! Windowed SSIM and PSNR, globally or restricted to a pixel mask.
//!
//! SSIM uses Gaussian-weighted local statistics (weights summing to one,
//! population variances) with half-sample symmetric padding at the borders,
//! so the SSIM map has the geometry of its inputs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::density::RegionMask;
use crate::error::{Error, Result};
use crate::render::SrMap;

/// PSNR reported for identical images.
pub const DEFAULT_PSNR_CAP_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    /// Window half-width in pixels; the window is `2r + 1` square.
    pub window_radius: usize,
    pub gaussian_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window_radius: 5,
            gaussian_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidParameter(format!(
                "SSIM {what} must be positive, got {v}"
            )))
        };
        if self.window_radius == 0 {
            return Err(Error::InvalidParameter("SSIM window_radius must be >= 1".into()));
        }
        if !(self.gaussian_sigma > 0.0 && self.gaussian_sigma.is_finite()) {
            return bad("gaussian_sigma", self.gaussian_sigma);
        }
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return bad("k1", self.k1);
        }
        if !(self.k2 > 0.0 && self.k2.is_finite()) {
            return bad("k2", self.k2);
        }
        if !(self.dynamic_range > 0.0 && self.dynamic_range.is_finite()) {
            return bad("dynamic_range", self.dynamic_range);
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        let v = self.k1 * self.dynamic_range;
        v * v
    }

    pub fn c2(&self) -> f64 {
        let v = self.k2 * self.dynamic_range;
        v * v
    }

    /// Normalized 1-D Gaussian taps; their outer product is the 2-D window.
    pub fn kernel(&self) -> Vec<f64> {
        let r = self.window_radius as isize;
        let two_s2 = 2.0 * self.gaussian_sigma * self.gaussian_sigma;
        let taps: Vec<f64> = (-r..=r).map(|i| libm::exp(-((i * i) as f64) / two_s2)).collect();
        let total: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / total).collect()
    }
}

/// Half-sample symmetric reflection (`dcba|abcd|dcba`) of index `i` into `[0, n)`.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Which pixels a metric is evaluated over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    All,
    Dense,
    Sparse,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::All, Region::Dense, Region::Sparse];

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::All => "all",
            Region::Dense => "dense",
            Region::Sparse => "sparse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(Region::All),
            "dense" => Some(Region::Dense),
            "sparse" => Some(Region::Sparse),
            _ => None,
        }
    }

    /// Selection mask for this region given dense/sparse labels.
    pub fn selection(&self, labels: &RegionMask) -> RegionMask {
        match self {
            Region::All => RegionMask::all(labels.width, labels.height),
            Region::Dense => labels.clone(),
            Region::Sparse => labels.complement(),
        }
    }
}

/// One SSIM/PSNR pair over a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub ssim: f64,
    pub psnr: f64,
    pub region: Region,
}

/// Per-pixel SSIM with the same dimensions as the inputs (row-major).
pub fn ssim_map(reference: &SrMap, test: &SrMap, params: &SsimParams) -> Result<Vec<f64>> {
    params.validate()?;
    reference.geometry.check_same(&test.geometry)?;
    let (w, h) = (reference.width(), reference.height());
    let kernel = params.kernel();
    let x = &reference.values;
    let y = &test.values;
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mu_x = gaussian_filter(x, w, h, &kernel);
    let mu_y = gaussian_filter(y, w, h, &kernel);
    let e_xx = gaussian_filter(&xx, w, h, &kernel);
    let e_yy = gaussian_filter(&yy, w, h, &kernel);
    let e_xy = gaussian_filter(&xy, w, h, &kernel);

    let c1 = params.c1();
    let c2 = params.c2();
    let map = (0..w * h)
        .map(|i| ssim_from_moments(mu_x[i], mu_y[i], e_xx[i], e_yy[i], e_xy[i], c1, c2))
        .collect();
    Ok(map)
}

#[inline]
fn ssim_from_moments(mx: f64, my: f64, exx: f64, eyy: f64, exy: f64, c1: f64, c2: f64) -> f64 {
    let vx = exx - mx * mx;
    let vy = eyy - my * my;
    let cov = exy - mx * my;
    let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
    let den = (mx * mx + my * my + c1) * (vx + vy + c2);
    num / den
}

/// Separable Gaussian filtering with half-sample symmetric padding.
fn gaussian_filter(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut horizontal = vec![0.0; w * h];
    for row in 0..h {
        let line = &src[row * w..(row + 1) * w];
        for col in 0..w {
            let mut acc = 0.0;
            for (k, tap) in kernel.iter().enumerate() {
                let c = reflect_index(col as isize + k as isize - r, w);
                acc += tap * line[c];
            }
            horizontal[row * w + col] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for row in 0..h {
        for (k, tap) in kernel.iter().enumerate() {
            let src_row = reflect_index(row as isize + k as isize - r, h);
            let from = &horizontal[src_row * w..(src_row + 1) * w];
            let to = &mut out[row * w..(row + 1) * w];
            for (o, v) in to.iter_mut().zip(from) {
                *o += tap * v;
            }
        }
    }
    out
}

/// Mean of `values` over pixels selected by `mask`.
pub fn masked_mean(values: &[f64], mask: &RegionMask) -> Result<f64> {
    if values.len() != mask.len() {
        return Err(Error::InvalidParameter(format!(
            "{} values for a mask of {} pixels",
            values.len(),
            mask.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (v, &selected) in values.iter().zip(&mask.dense) {
        if selected {
            sum += v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / count as f64)
}

fn check_mask(reference: &SrMap, mask: &RegionMask) -> Result<()> {
    if mask.width == reference.width() && mask.height == reference.height() {
        Ok(())
    } else {
        Err(Error::GeometryMismatch {
            left_width: reference.width(),
            left_height: reference.height(),
            right_width: mask.width,
            right_height: mask.height,
        })
    }
}

/// Mean SSIM over the pixels `mask` selects.
pub fn ssim_masked(reference: &SrMap, test: &SrMap, params: &SsimParams, mask: &RegionMask) -> Result<f64> {
    check_mask(reference, mask)?;
    if mask.dense_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let map = ssim_map(reference, test, params)?;
    masked_mean(&map, mask)
}

/// Mean squared error over the selected pixels.
pub fn mse_masked(reference: &SrMap, test: &SrMap, mask: &RegionMask) -> Result<f64> {
    reference.geometry.check_same(&test.geometry)?;
    check_mask(reference, mask)?;
    let sq: Vec<f64> = reference
        .values
        .iter()
        .zip(&test.values)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    masked_mean(&sq, mask)
}

/// `10 log10(peak²) - 10 log10(MSE)` over the selected pixels; zero MSE, and
/// anything above the cap, reports `cap_db`.
pub fn psnr_masked(reference: &SrMap, test: &SrMap, mask: &RegionMask, peak: f64, cap_db: f64) -> Result<f64> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "PSNR peak must be positive, got {peak}"
        )));
    }
    let mse = mse_masked(reference, test, mask)?;
    Ok(psnr_from_mse(mse, peak, cap_db))
}

#[inline]
pub fn psnr_from_mse(mse: f64, peak: f64, cap_db: f64) -> f64 {
    if mse <= 0.0 {
        return cap_db;
    }
    (10.0 * libm::log10(peak * peak) - 10.0 * libm::log10(mse)).min(cap_db)
}
