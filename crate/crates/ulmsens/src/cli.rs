//! Subcommands and their wiring.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ulmsens_core::density::threshold_mask;
use ulmsens_core::metrics::{masked_mean, psnr_from_mse};
use ulmsens_core::render::log_compress;
use ulmsens_core::report::{snapshot_density, snapshot_mask, snapshot_srmap};
use ulmsens_core::{
    aggregate, generate_vessels_with, normalize_pair, rasterize, render_heatmap, ssim_map, Dataset, ErrorProfile,
    Metric, MetricRecord, Region, RegionMask,
};

use crate::config::{HeatmapScale, RunConfig};
use crate::error::{CliError, CliResult};
use crate::formats;
use crate::parallel;
use crate::summary::render_summary;

#[derive(Debug, Parser)]
#[command(
    name = "ulmsens",
    version,
    about = "Sensitivity of ULM super-resolution maps to detection errors"
)]
pub struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads (falls back to ULMSENS_THREADS, then the machine's parallelism).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic ground-truth localization dataset.
    Generate(GenerateArgs),
    /// Inject false positives and false negatives into a dataset.
    Inject(InjectArgs),
    /// Rasterize a dataset into a raw-count SR map.
    Render(RenderArgs),
    /// Estimate density and write dense/sparse region masks.
    Regions(RegionsArgs),
    /// Compare two raw-count maps with SSIM and PSNR.
    Metrics(MetricsArgs),
    /// Run the FP x FN sweep and write tables, heatmaps and snapshots.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator seed (overrides synth.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    /// Input localization CSV.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// False positives per frame, as a fraction of its count.
    #[arg(long = "fp", value_name = "RATE", default_value_t = 0.0)]
    pub fp_rate: f64,
    /// False negatives per frame, as a fraction of its count.
    #[arg(long = "fn", value_name = "RATE", default_value_t = 0.0)]
    pub fn_rate: f64,
    /// Injection seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Input localization CSV.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Flat binary map of raw counts.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Optional PGM snapshot scaled by the map maximum.
    #[arg(long, value_name = "PATH")]
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionsArgs {
    /// Input localization CSV.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output directory for density.pgm, density.bin, mask.pgm and config.echo.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference raw-count map (flat binary).
    #[arg(long, value_name = "PATH")]
    pub reference: PathBuf,
    /// Test raw-count map (flat binary).
    #[arg(long, value_name = "PATH")]
    pub test: PathBuf,
    /// Region mask PGM; adds dense and sparse records.
    #[arg(long, value_name = "PATH")]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Ground-truth CSV; generated from the synth section when omitted.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Sweep master seed (overrides sweep.master_seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Heatmaps over fixed ranges: SSIM [0, 1], PSNR [0, cap].
    #[arg(long, conflicts_with = "data_scale")]
    pub fixed_scale: bool,
    /// Heatmaps over the data range.
    #[arg(long)]
    pub data_scale: bool,
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Generate(a) => {
            if let Some(seed) = a.seed {
                config.synth.seed = seed;
            }
        }
        Command::Sweep(a) => {
            if let Some(seed) = a.seed {
                config.sweep.master_seed = seed;
            }
            if a.fixed_scale {
                config.output.heatmap_scale = HeatmapScale::Fixed;
            }
            if a.data_scale {
                config.output.heatmap_scale = HeatmapScale::Data;
            }
        }
        _ => {}
    }
    config.validate()?;
    let threads = parallel::resolve_threads(cli.threads)?;
    let pool = parallel::build_pool(threads)?;
    pool.install(|| match &cli.command {
        Command::Generate(a) => cmd_generate(&config, &a.out),
        Command::Inject(a) => cmd_inject(&config, a),
        Command::Render(a) => cmd_render(&config, a),
        Command::Regions(a) => cmd_regions(&config, a),
        Command::Metrics(a) => cmd_metrics(&config, a),
        Command::Sweep(a) => cmd_sweep(&config, a.input.as_deref(), &a.out),
    })
}

/// Samples the synthetic dataset described by the config.
pub fn generate_dataset(config: &RunConfig) -> CliResult<Dataset> {
    let imaging = config.imaging()?;
    let tree = generate_vessels_with(&imaging, config.synth.seed, &config.synth_params()?)?;
    Ok(parallel::sample_frames(
        &tree,
        config.synth.n_frames,
        config.synth.seed,
    )?)
}

fn cmd_generate(config: &RunConfig, out: &Path) -> CliResult<()> {
    let dataset = generate_dataset(config)?;
    formats::save_dataset(&dataset, out)?;
    eprintln!(
        "generated {} frames, {} localizations (seed {}) -> {}",
        dataset.frames().len(),
        dataset.total_points(),
        config.synth.seed,
        out.display()
    );
    Ok(())
}

fn cmd_inject(config: &RunConfig, a: &InjectArgs) -> CliResult<()> {
    let profile = ErrorProfile::new(a.fp_rate, a.fn_rate, a.seed)?;
    let dataset = formats::load_dataset(&a.input, config.imaging()?)?;
    let degraded = parallel::apply_error_profile(&dataset, &profile)?;
    formats::save_dataset(&degraded, &a.out)?;
    eprintln!(
        "{} -> {} localizations (fp {}, fn {}, seed {})",
        dataset.total_points(),
        degraded.total_points(),
        a.fp_rate,
        a.fn_rate,
        a.seed
    );
    Ok(())
}

fn cmd_render(config: &RunConfig, a: &RenderArgs) -> CliResult<()> {
    let dataset = formats::load_dataset(&a.input, config.imaging()?)?;
    let map = rasterize(&dataset);
    formats::save_map(&map, &a.out)?;
    if let Some(pgm) = &a.pgm {
        formats::save_pgm(&snapshot_srmap(&map), pgm)?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// KDE density of the dataset and the dense/sparse mask thresholded from it.
pub fn region_mask(config: &RunConfig, dataset: &Dataset) -> CliResult<(ulmsens_core::DensityMap, RegionMask)> {
    let bandwidth = config.kde.bandwidth_wavelengths * dataset.config().wavelength();
    let density = parallel::kde_density(dataset, bandwidth)?;
    let mask = threshold_mask(&density, config.kde.quantile)?;
    Ok((density, mask))
}

fn cmd_regions(config: &RunConfig, a: &RegionsArgs) -> CliResult<()> {
    let dataset = formats::load_dataset(&a.input, config.imaging()?)?;
    let (density, mask) = region_mask(config, &dataset)?;
    create_dir(&a.out)?;
    let g = density.geometry;
    formats::write_file(
        &a.out.join("density.bin"),
        &formats::encode_map(g.width, g.height, &density.values),
    )?;
    formats::save_pgm(&snapshot_density(&density), &a.out.join("density.pgm"))?;
    formats::save_pgm(&snapshot_mask(&mask), &a.out.join("mask.pgm"))?;
    formats::write_file(&a.out.join("config.echo.json"), config.to_json().as_bytes())?;
    println!("coverage {}", ulmsens_core::mask_coverage(&mask));
    Ok(())
}

/// SSIM and PSNR records of two raw-count maps after joint normalization.
pub fn compare_maps(
    config: &RunConfig,
    reference: &ulmsens_core::SrMap,
    test: &ulmsens_core::SrMap,
    mask: Option<&RegionMask>,
) -> CliResult<Vec<MetricRecord>> {
    let (mut r, mut t) = normalize_pair(reference, test)?;
    if config.output.log_compress {
        r = log_compress(&r);
        t = log_compress(&t);
    }
    let params = config.ssim_params();
    let ssim = ssim_map(&r, &t, &params)?;
    let sq_err: Vec<f64> = r.values.iter().zip(&t.values).map(|(a, b)| (a - b) * (a - b)).collect();
    let regions: &[Region] = if mask.is_some() { &Region::ALL } else { &[Region::All] };
    let labels = match mask {
        Some(m) => {
            if (m.width, m.height) != (r.width(), r.height()) {
                return Err(CliError::Invalid(format!(
                    "mask is {}x{} but maps are {}x{}",
                    m.width,
                    m.height,
                    r.width(),
                    r.height()
                )));
            }
            m.clone()
        }
        None => RegionMask::all(r.width(), r.height()),
    };
    regions
        .iter()
        .map(|&region| {
            let sel = region.selection(&labels);
            Ok(MetricRecord {
                ssim: masked_mean(&ssim, &sel)?,
                psnr: psnr_from_mse(
                    masked_mean(&sq_err, &sel)?,
                    params.dynamic_range,
                    config.sweep.psnr_cap_db,
                ),
                region,
            })
        })
        .collect()
}

fn cmd_metrics(config: &RunConfig, a: &MetricsArgs) -> CliResult<()> {
    let reference = formats::load_map(&a.reference)?;
    let test = formats::load_map(&a.test)?;
    let mask = a.mask.as_deref().map(formats::load_mask).transpose()?;
    for record in compare_maps(config, &reference, &test, mask.as_ref())? {
        println!(
            "{} ssim={:?} psnr={:?}",
            record.region.as_str(),
            record.ssim,
            record.psnr
        );
    }
    Ok(())
}

/// Files `cmd_sweep` writes besides the heatmaps.
pub const SWEEP_FILES: [&str; 7] = [
    "results.csv",
    "aggregate.csv",
    "srmap.pgm",
    "density.pgm",
    "mask.pgm",
    "config.echo.json",
    "summary.txt",
];

pub fn cmd_sweep(config: &RunConfig, input: Option<&Path>, out: &Path) -> CliResult<()> {
    let dataset = match input {
        Some(path) => formats::load_dataset(path, config.imaging()?)?,
        None => generate_dataset(config)?,
    };
    let spec = config.sweep_spec()?;
    let (density, mask) = region_mask(config, &dataset)?;
    let reference = rasterize(&dataset);
    let result = parallel::run_sweep(&dataset, &spec, &mask, &reference, config.sweep_settings())?;
    let table = aggregate(&result);

    create_dir(out)?;
    formats::write_file(&out.join("results.csv"), formats::results_csv(&result).as_bytes())?;
    formats::write_file(&out.join("aggregate.csv"), formats::aggregate_csv(&table).as_bytes())?;
    let scale = config.heatmap_scale();
    for metric in [Metric::Ssim, Metric::Psnr] {
        for region in Region::ALL {
            let image = render_heatmap(&table, metric, region, scale)?;
            let name = format!("{}_{}.pgm", metric.as_str(), region.as_str());
            formats::save_pgm(&image, &out.join(name))?;
        }
    }
    formats::save_pgm(&snapshot_srmap(&reference), &out.join("srmap.pgm"))?;
    formats::save_pgm(&snapshot_density(&density), &out.join("density.pgm"))?;
    formats::save_pgm(&snapshot_mask(&mask), &out.join("mask.pgm"))?;
    formats::write_file(&out.join("config.echo.json"), config.to_json().as_bytes())?;
    let summary = render_summary(&dataset, &reference, &mask, &table);
    formats::write_file(&out.join("summary.txt"), summary.as_bytes())?;
    eprint!("{summary}");
    Ok(())
}
