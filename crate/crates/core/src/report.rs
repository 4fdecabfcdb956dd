//! 8-bit gray rasters: sweep heatmaps and snapshots of maps and masks.

use alloc::vec;
use alloc::vec::Vec;

use crate::density::{DensityMap, RegionMask};
use crate::error::{Error, Result};
use crate::metrics::Region;
use crate::render::SrMap;
use crate::sweep::AggregateTable;

/// Edge length in pixels of one heatmap cell.
pub const BLOCK: usize = 32;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ssim,
    Psnr,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Ssim => "ssim",
            Metric::Psnr => "psnr",
        }
    }
}

/// Gray-level scaling of heatmap values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    /// SSIM over `[0, 1]`, PSNR over `[0, cap_db]`.
    Fixed { psnr_cap_db: f64 },
    /// Min and max of the plotted values.
    DataRange,
}

/// Metric means on the sweep grid: rows are FN rates, columns FP rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub fp_rates: Vec<f64>,
    pub fn_rates: Vec<f64>,
    /// `values[fn_index * fp_rates.len() + fp_index]`
    pub values: Vec<f64>,
    pub vmin: f64,
    pub vmax: f64,
}

impl Heatmap {
    pub fn from_aggregate(table: &AggregateTable, metric: Metric, region: Region, scale: Scale) -> Result<Self> {
        let mut fp_rates: Vec<f64> = table.rows.iter().map(|r| r.fp_rate).collect();
        let mut fn_rates: Vec<f64> = table.rows.iter().map(|r| r.fn_rate).collect();
        for axis in [&mut fp_rates, &mut fn_rates] {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let mut values = Vec::with_capacity(fp_rates.len() * fn_rates.len());
        for &fn_rate in &fn_rates {
            for &fp_rate in &fp_rates {
                let row = table
                    .rows
                    .iter()
                    .find(|r| r.region == region && r.fp_rate == fp_rate && r.fn_rate == fn_rate)
                    .ok_or(Error::MissingCell { fp_rate, fn_rate })?;
                let v = match metric {
                    Metric::Ssim => row.ssim_mean,
                    Metric::Psnr => row.psnr_mean,
                };
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "non-finite {} at (fp = {fp_rate}, fn = {fn_rate})",
                        metric.as_str()
                    )));
                }
                values.push(v);
            }
        }
        let (vmin, vmax) = match scale {
            Scale::Fixed { psnr_cap_db } => match metric {
                Metric::Ssim => (0.0, 1.0),
                Metric::Psnr => (0.0, psnr_cap_db),
            },
            Scale::DataRange => values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            }),
        };
        Ok(Self {
            fp_rates,
            fn_rates,
            values,
            vmin,
            vmax,
        })
    }

    /// `round(255 (v - vmin) / (vmax - vmin))`, clamped; a flat range gives 128.
    pub fn gray(&self, v: f64) -> u8 {
        if !(self.vmax > self.vmin) {
            return 128;
        }
        let g = libm::round(255.0 * (v - self.vmin) / (self.vmax - self.vmin));
        g.clamp(0.0, 255.0) as u8
    }

    pub fn to_image(&self) -> GrayImage {
        let cols = self.fp_rates.len();
        let rows = self.fn_rates.len();
        let width = cols * BLOCK;
        let mut pixels = vec![0u8; width * rows * BLOCK];
        for (cell, &v) in self.values.iter().enumerate() {
            let (r, c) = (cell / cols, cell % cols);
            let g = self.gray(v);
            for y in r * BLOCK..(r + 1) * BLOCK {
                pixels[y * width + c * BLOCK..y * width + (c + 1) * BLOCK].fill(g);
            }
        }
        GrayImage {
            width,
            height: rows * BLOCK,
            pixels,
        }
    }
}

pub fn render_heatmap(table: &AggregateTable, metric: Metric, region: Region, scale: Scale) -> Result<GrayImage> {
    Ok(Heatmap::from_aggregate(table, metric, region, scale)?.to_image())
}

fn scaled_by_max(width: usize, height: usize, values: &[f64]) -> GrayImage {
    let max = values.iter().copied().fold(0.0, f64::max);
    let pixels = if max > 0.0 {
        values
            .iter()
            .map(|&v| libm::round(255.0 * (v / max)).clamp(0.0, 255.0) as u8)
            .collect()
    } else {
        vec![0; values.len()]
    };
    GrayImage { width, height, pixels }
}

/// SR map scaled by its own maximum.
pub fn snapshot_srmap(map: &SrMap) -> GrayImage {
    scaled_by_max(map.width(), map.height(), &map.values)
}

/// Density scaled by its own maximum.
pub fn snapshot_density(density: &DensityMap) -> GrayImage {
    scaled_by_max(density.geometry.width, density.geometry.height, &density.values)
}

/// Dense pixels white, sparse black.
pub fn snapshot_mask(mask: &RegionMask) -> GrayImage {
    GrayImage {
        width: mask.width,
        height: mask.height,
        pixels: mask.dense.iter().map(|&d| if d { 255 } else { 0 }).collect(),
    }
}

/// Normalized map as `round(255 v)`, clamped to `[0, 255]`.
pub fn export_normalized(map: &SrMap) -> GrayImage {
    GrayImage {
        width: map.width(),
        height: map.height(),
        pixels: map
            .values
            .iter()
            .map(|&v| libm::round(255.0 * v).clamp(0.0, 255.0) as u8)
            .collect(),
    }
}
