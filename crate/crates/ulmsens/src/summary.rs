//! Headline trend figures of a sweep, written to `summary.txt`.

use std::fmt::Write as _;

use ulmsens_core::sweep::{AggregateRow, AggregateTable};
use ulmsens_core::{Dataset, Region, RegionMask, SrMap};

use crate::formats::{format_rate, format_significant};

/// Trend checks read off the aggregate table: single-axis drops at the
/// largest rate of each axis, and region ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Trends {
    pub fp_max: f64,
    pub fn_max: f64,
    /// `SSIM(0, 0) - SSIM(fp_max, 0)`, all pixels.
    pub ssim_drop_fp: f64,
    /// `SSIM(0, 0) - SSIM(0, fn_max)`, all pixels.
    pub ssim_drop_fn: f64,
    pub psnr_drop_fp: f64,
    pub psnr_drop_fn: f64,
    /// Every cell has mean dense SSIM at least the mean sparse SSIM.
    pub dense_at_least_sparse: bool,
    /// Cell with the lowest mean all-pixel SSIM, as `(fp_rate, fn_rate)`.
    pub worst_cell: (f64, f64),
    pub worst_dense_ssim: f64,
    pub worst_sparse_ssim: f64,
}

impl Trends {
    /// `None` unless both axes contain a zero rate and a positive one.
    pub fn from_table(table: &AggregateTable) -> Option<Self> {
        let all: Vec<&AggregateRow> = table.region_rows(Region::All).collect();
        let find = |fp: f64, fn_: f64, region: Region| {
            table
                .rows
                .iter()
                .find(|r| r.fp_rate == fp && r.fn_rate == fn_ && r.region == region)
        };
        let fp_max = all.iter().map(|r| r.fp_rate).fold(0.0, f64::max);
        let fn_max = all.iter().map(|r| r.fn_rate).fold(0.0, f64::max);
        if fp_max == 0.0 || fn_max == 0.0 {
            return None;
        }
        let origin = find(0.0, 0.0, Region::All)?;
        let fp_end = find(fp_max, 0.0, Region::All)?;
        let fn_end = find(0.0, fn_max, Region::All)?;
        let dense_at_least_sparse = table
            .region_rows(Region::Dense)
            .all(|d| find(d.fp_rate, d.fn_rate, Region::Sparse).is_some_and(|s| d.ssim_mean >= s.ssim_mean));
        let worst = all.iter().min_by(|a, b| a.ssim_mean.total_cmp(&b.ssim_mean))?;
        let worst_dense = find(worst.fp_rate, worst.fn_rate, Region::Dense)?;
        let worst_sparse = find(worst.fp_rate, worst.fn_rate, Region::Sparse)?;
        Some(Self {
            fp_max,
            fn_max,
            ssim_drop_fp: origin.ssim_mean - fp_end.ssim_mean,
            ssim_drop_fn: origin.ssim_mean - fn_end.ssim_mean,
            psnr_drop_fp: origin.psnr_mean - fp_end.psnr_mean,
            psnr_drop_fn: origin.psnr_mean - fn_end.psnr_mean,
            dense_at_least_sparse,
            worst_cell: (worst.fp_rate, worst.fn_rate),
            worst_dense_ssim: worst_dense.ssim_mean,
            worst_sparse_ssim: worst_sparse.ssim_mean,
        })
    }

    /// FN drop over FP drop; infinite when FP errors cost nothing.
    pub fn fn_fp_ssim_ratio(&self) -> f64 {
        self.ssim_drop_fn / self.ssim_drop_fp
    }

    pub fn worst_dense_sparse_ratio(&self) -> f64 {
        self.worst_dense_ssim / self.worst_sparse_ssim
    }

    /// `|dPSNR_fp - dPSNR_fn| / max(dPSNR_fp, dPSNR_fn)`.
    pub fn psnr_asymmetry(&self) -> f64 {
        (self.psnr_drop_fp - self.psnr_drop_fn).abs() / self.psnr_drop_fp.max(self.psnr_drop_fn)
    }
}

/// Mean reference count inside the dense mask over the mean outside it.
pub fn density_contrast(reference: &SrMap, mask: &RegionMask) -> f64 {
    let (mut dense, mut nd, mut sparse, mut ns) = (0.0, 0usize, 0.0, 0usize);
    for (v, &d) in reference.values.iter().zip(&mask.dense) {
        if d {
            dense += v;
            nd += 1;
        } else {
            sparse += v;
            ns += 1;
        }
    }
    (dense / nd as f64) / (sparse / ns as f64)
}

pub fn render_summary(dataset: &Dataset, reference: &SrMap, mask: &RegionMask, table: &AggregateTable) -> String {
    let sig = |v: f64| format_significant(v, 9);
    let mut out = String::new();
    let _ = writeln!(out, "frames: {}", dataset.frames().len());
    let _ = writeln!(out, "localizations: {}", dataset.total_points());
    let _ = writeln!(out, "grid: {}x{}", reference.width(), reference.height());
    let _ = writeln!(out, "reference_max_count: {}", reference.max());
    let _ = writeln!(out, "mask_coverage: {}", sig(ulmsens_core::mask_coverage(mask)));
    let _ = writeln!(out, "density_contrast: {}", sig(density_contrast(reference, mask)));
    match Trends::from_table(table) {
        Some(t) => {
            let _ = writeln!(out, "fp_rate_max: {}", format_rate(t.fp_max));
            let _ = writeln!(out, "fn_rate_max: {}", format_rate(t.fn_max));
            let _ = writeln!(out, "ssim_drop_fp: {}", sig(t.ssim_drop_fp));
            let _ = writeln!(out, "ssim_drop_fn: {}", sig(t.ssim_drop_fn));
            let _ = writeln!(out, "fn_fp_ssim_drop_ratio: {}", sig(t.fn_fp_ssim_ratio()));
            let _ = writeln!(out, "psnr_drop_fp: {}", sig(t.psnr_drop_fp));
            let _ = writeln!(out, "psnr_drop_fn: {}", sig(t.psnr_drop_fn));
            let _ = writeln!(out, "psnr_drop_asymmetry: {}", sig(t.psnr_asymmetry()));
            let _ = writeln!(
                out,
                "dense_ssim_at_least_sparse_everywhere: {}",
                t.dense_at_least_sparse
            );
            let _ = writeln!(
                out,
                "worst_cell: fp={} fn={}",
                format_rate(t.worst_cell.0),
                format_rate(t.worst_cell.1)
            );
            let _ = writeln!(
                out,
                "worst_cell_dense_sparse_ssim_ratio: {}",
                sig(t.worst_dense_sparse_ratio())
            );
        }
        None => {
            let _ = writeln!(
                out,
                "fn_fp_ssim_drop_ratio: n/a (grid lacks a zero and a positive rate on each axis)"
            );
        }
    }
    out
}
