//! FP/FN grid experiment: per cell, degrade the ground truth, render it,
//! normalize against the ground-truth map and score all/dense/sparse regions.
//!
//! Cells are pure functions of their indices and the shared read-only
//! inputs, so any executor that collects [`run_cell`] outputs and hands them
//! to [`assemble`] reproduces [`run_sweep`] exactly.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::density::{RegionMask, DEFAULT_BANDWIDTH_WAVELENGTHS, DEFAULT_QUANTILE};
use crate::error::{Error, Result};
use crate::inject::{apply_error_profile, check_rate, ErrorProfile};
use crate::metrics::{masked_mean, psnr_from_mse, ssim_map, Region, SsimParams, DEFAULT_PSNR_CAP_DB};
use crate::render::{log_compress, normalize_pair, rasterize, SrMap};
use crate::rng::splitmix64;

const FP_INDEX_STRIDE: u64 = 0x0000_0100_0000_01B3;
const FN_INDEX_STRIDE: u64 = 0x0100_0193;

/// Rate axes, repetition count and master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    fp_rates: Vec<f64>,
    fn_rates: Vec<f64>,
    repetitions: u32,
    master_seed: u64,
}

impl SweepSpec {
    pub fn new(fp_rates: Vec<f64>, fn_rates: Vec<f64>, repetitions: u32, master_seed: u64) -> Result<Self> {
        check_axis("fp_rates", &fp_rates)?;
        check_axis("fn_rates", &fn_rates)?;
        if repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        Ok(Self {
            fp_rates,
            fn_rates,
            repetitions,
            master_seed,
        })
    }

    pub fn fp_rates(&self) -> &[f64] {
        &self.fp_rates
    }

    pub fn fn_rates(&self) -> &[f64] {
        &self.fn_rates
    }

    pub fn repetitions(&self) -> u32 {
        self.repetitions
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Every `(fp_index, fn_index, rep)` in canonical order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        let reps = self.repetitions;
        (0..self.fp_rates.len())
            .flat_map(move |i| (0..self.fn_rates.len()).flat_map(move |j| (0..reps).map(move |r| (i, j, r))))
    }

    pub fn cell_count(&self) -> usize {
        self.fp_rates.len() * self.fn_rates.len() * self.repetitions as usize
    }
}

/// 0 to 20 % in 5 % steps on both axes, three repetitions.
impl Default for SweepSpec {
    fn default() -> Self {
        let grid = alloc::vec![0.0, 0.05, 0.1, 0.15, 0.2];
        Self::new(grid.clone(), grid, 3, 0).expect("default grid is valid")
    }
}

fn check_axis(name: &str, rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} must not be empty")));
    }
    for r in rates {
        check_rate(name, *r)?;
    }
    if rates.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(format!("{name} must be strictly ascending")));
    }
    Ok(())
}

/// Profile seed of cell `(i, j, r)`; depends on indices only, so extending
/// an axis leaves existing cells' draws untouched.
pub fn cell_seed(master_seed: u64, fp_index: usize, fn_index: usize, rep: u32) -> u64 {
    let mix = (fp_index as u64)
        .wrapping_mul(FP_INDEX_STRIDE)
        .wrapping_add((fn_index as u64).wrapping_mul(FN_INDEX_STRIDE))
        .wrapping_add(rep as u64)
        .wrapping_add(1);
    splitmix64(master_seed ^ mix)
}

/// Everything besides the grid that shapes the numbers; echoed with results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub ssim: SsimParams,
    pub psnr_cap_db: f64,
    pub log_compress: bool,
    /// KDE bandwidth in wavelengths (recorded for output; the mask is an input).
    pub bandwidth_wavelengths: f64,
    /// Mask quantile (recorded for output).
    pub quantile: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            ssim: SsimParams::default(),
            psnr_cap_db: DEFAULT_PSNR_CAP_DB,
            log_compress: false,
            bandwidth_wavelengths: DEFAULT_BANDWIDTH_WAVELENGTHS,
            quantile: DEFAULT_QUANTILE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub fp_index: usize,
    pub fn_index: usize,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub rep: u32,
    pub region: Region,
    pub ssim: f64,
    pub psnr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub settings: SweepSettings,
    pub rows: Vec<ResultRow>,
}

impl SweepResult {
    pub fn row(&self, fp_index: usize, fn_index: usize, rep: u32, region: Region) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.fp_index == fp_index && r.fn_index == fn_index && r.rep == rep && r.region == region)
    }
}

/// Shared read-only inputs of every cell.
#[derive(Debug, Clone)]
pub struct SweepContext<'a> {
    dataset: &'a Dataset,
    reference: &'a SrMap,
    spec: &'a SweepSpec,
    settings: SweepSettings,
    selections: [RegionMask; 3],
}

impl<'a> SweepContext<'a> {
    /// `mask` and `reference` (raw counts) must come from the unmodified dataset.
    pub fn new(
        dataset: &'a Dataset,
        spec: &'a SweepSpec,
        mask: &RegionMask,
        reference: &'a SrMap,
        settings: SweepSettings,
    ) -> Result<Self> {
        settings.ssim.validate()?;
        if mask.width != reference.width() || mask.height != reference.height() {
            return Err(Error::GeometryMismatch {
                left_width: reference.width(),
                left_height: reference.height(),
                right_width: mask.width,
                right_height: mask.height,
            });
        }
        let selections = Region::ALL.map(|r| r.selection(mask));
        for s in &selections {
            if s.dense_count() == 0 {
                return Err(Error::EmptyMask);
            }
        }
        Ok(Self {
            dataset,
            reference,
            spec,
            settings,
            selections,
        })
    }

    pub fn spec(&self) -> &SweepSpec {
        self.spec
    }

    /// Scores one cell; rows come back in region order all, dense, sparse.
    pub fn run_cell(&self, fp_index: usize, fn_index: usize, rep: u32) -> Result<[ResultRow; 3]> {
        self.score_cell(fp_index, fn_index, rep).map_err(|e| Error::Cell {
            fp_index,
            fn_index,
            rep,
            source: Box::new(e),
        })
    }

    fn score_cell(&self, fp_index: usize, fn_index: usize, rep: u32) -> Result<[ResultRow; 3]> {
        let fp_rate = *self
            .spec
            .fp_rates
            .get(fp_index)
            .ok_or_else(|| Error::InvalidParameter(format!("fp index {fp_index} out of range")))?;
        let fn_rate = *self
            .spec
            .fn_rates
            .get(fn_index)
            .ok_or_else(|| Error::InvalidParameter(format!("fn index {fn_index} out of range")))?;
        let seed = cell_seed(self.spec.master_seed, fp_index, fn_index, rep);
        let profile = ErrorProfile::new(fp_rate, fn_rate, seed)?;
        let degraded = apply_error_profile(self.dataset, &profile);
        let test = rasterize(&degraded);
        let (mut reference, mut test) = normalize_pair(self.reference, &test)?;
        if self.settings.log_compress {
            reference = log_compress(&reference);
            test = log_compress(&test);
        }
        let ssim = ssim_map(&reference, &test, &self.settings.ssim)?;
        let sq_err: Vec<f64> = reference
            .values
            .iter()
            .zip(&test.values)
            .map(|(a, b)| (a - b) * (a - b))
            .collect();
        let peak = self.settings.ssim.dynamic_range;
        let mut rows = [ResultRow {
            fp_index,
            fn_index,
            fp_rate,
            fn_rate,
            rep,
            region: Region::All,
            ssim: 0.0,
            psnr: 0.0,
        }; 3];
        for (row, (region, selection)) in rows.iter_mut().zip(Region::ALL.iter().zip(&self.selections)) {
            row.region = *region;
            row.ssim = masked_mean(&ssim, selection)?;
            row.psnr = psnr_from_mse(masked_mean(&sq_err, selection)?, peak, self.settings.psnr_cap_db);
        }
        Ok(rows)
    }

    pub fn settings(&self) -> &SweepSettings {
        &self.settings
    }
}

/// Sorts cell outputs canonically by `(fp, fn, rep, region)`.
pub fn assemble(spec: &SweepSpec, settings: SweepSettings, mut rows: Vec<ResultRow>) -> SweepResult {
    rows.sort_by_key(|r| (r.fp_index, r.fn_index, r.rep, r.region));
    SweepResult {
        spec: spec.clone(),
        settings,
        rows,
    }
}

/// Sequential sweep over every cell.
pub fn run_sweep(
    dataset: &Dataset,
    spec: &SweepSpec,
    mask: &RegionMask,
    reference: &SrMap,
    settings: SweepSettings,
) -> Result<SweepResult> {
    let ctx = SweepContext::new(dataset, spec, mask, reference, settings)?;
    let mut rows = Vec::with_capacity(spec.cell_count() * 3);
    for (i, j, r) in spec.cells() {
        rows.extend(ctx.run_cell(i, j, r)?);
    }
    Ok(assemble(spec, settings, rows))
}

/// Per-cell, per-region statistics over repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub fp_index: usize,
    pub fn_index: usize,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub region: Region,
    pub ssim_mean: f64,
    pub ssim_std: f64,
    pub psnr_mean: f64,
    pub psnr_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTable {
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    pub fn get(&self, fp_index: usize, fn_index: usize, region: Region) -> Option<&AggregateRow> {
        self.rows
            .iter()
            .find(|r| r.fp_index == fp_index && r.fn_index == fn_index && r.region == region)
    }

    pub fn region_rows(&self, region: Region) -> impl Iterator<Item = &AggregateRow> + '_ {
        self.rows.iter().filter(move |r| r.region == region)
    }
}

/// Mean and sample (n - 1) standard deviation; std is 0 for a single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, libm::sqrt(ss / (n - 1) as f64))
}

/// One row per `(fp, fn, region)`, in that order.
pub fn aggregate(result: &SweepResult) -> AggregateTable {
    let mut rows: Vec<AggregateRow> = Vec::new();
    let mut sorted: Vec<&ResultRow> = result.rows.iter().collect();
    sorted.sort_by_key(|r| (r.fp_index, r.fn_index, r.region, r.rep));
    let mut start = 0;
    while start < sorted.len() {
        let head = sorted[start];
        let mut end = start;
        while end < sorted.len()
            && (sorted[end].fp_index, sorted[end].fn_index, sorted[end].region)
                == (head.fp_index, head.fn_index, head.region)
        {
            end += 1;
        }
        let group = &sorted[start..end];
        let ssim: Vec<f64> = group.iter().map(|r| r.ssim).collect();
        let psnr: Vec<f64> = group.iter().map(|r| r.psnr).collect();
        let (ssim_mean, ssim_std) = mean_std(&ssim);
        let (psnr_mean, psnr_std) = mean_std(&psnr);
        rows.push(AggregateRow {
            fp_index: head.fp_index,
            fn_index: head.fn_index,
            fp_rate: head.fp_rate,
            fn_rate: head.fn_rate,
            region: head.region,
            ssim_mean,
            ssim_std,
            psnr_mean,
            psnr_std,
        });
        start = end;
    }
    AggregateTable { rows }
}
