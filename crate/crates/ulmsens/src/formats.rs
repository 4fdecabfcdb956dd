//! File formats: localization CSV, PGM rasters, flat binary maps and the
//! sweep result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ulmsens_core::sweep::{AggregateTable, SweepResult};
use ulmsens_core::{Dataset, GrayImage, GridGeometry, ImagingConfig, LocalizationFrame, Point, RegionMask, SrMap};

use crate::error::{CliError, CliResult};

pub const DATASET_HEADER: &str = "frame,x,z";
pub const RESULTS_HEADER: &str = "fp_rate,fn_rate,rep,region,ssim,psnr";
pub const AGGREGATE_HEADER: &str = "fp_rate,fn_rate,region,ssim_mean,ssim_std,psnr_mean,psnr_std";

/// Coordinates with 17 significant digits, enough to round-trip any `f64`.
pub fn format_coordinate(v: f64) -> String {
    format!("{v:.16e}")
}

/// Decimal notation with `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.*}", digits.saturating_sub(1), v);
    }
    // scientific formatting settles the rounded exponent first
    let sci = format!("{:.*e}", digits - 1, v);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn format_rate(v: f64) -> String {
    format!("{v:.4}")
}

pub fn dataset_to_csv(dataset: &Dataset) -> String {
    let mut out = String::with_capacity(48 * dataset.total_points() + 16);
    out.push_str(DATASET_HEADER);
    out.push('\n');
    for frame in dataset.frames() {
        for p in &frame.points {
            let _ = writeln!(
                out,
                "{},{},{}",
                frame.frame_index,
                format_coordinate(p.x),
                format_coordinate(p.z)
            );
        }
    }
    out
}

/// Parses the `frame,x,z` schema. Rows are grouped by frame index (frames
/// come out sorted), keeping file order within a frame.
pub fn dataset_from_csv(text: &str, config: ImagingConfig) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut frames: BTreeMap<u64, Vec<Point>> = BTreeMap::new();
    let mut records = reader.records();
    match records.next() {
        Some(Ok(header)) if header.iter().map(str::trim).eq(DATASET_HEADER.split(',')) => {}
        Some(Ok(_)) => {
            return Err(CliError::Invalid(format!("line 1: expected header `{DATASET_HEADER}`")));
        }
        Some(Err(e)) => return Err(CliError::Invalid(format!("line 1: {e}"))),
        None => {
            return Err(CliError::Invalid(format!(
                "empty file, expected header `{DATASET_HEADER}`"
            )))
        }
    }
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Invalid(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| CliError::Invalid(format!("line {line}: {what}"));
        if record.len() != 3 {
            return Err(bad(&format!("expected 3 fields, found {}", record.len())));
        }
        let frame: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| bad(&format!("invalid frame index `{}`", &record[0])))?;
        let coord = |i: usize, name: &str| -> CliResult<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(&format!("invalid {name} coordinate `{}`", &record[i])))
        };
        let (x, z) = (coord(1, "x")?, coord(2, "z")?);
        frames.entry(frame).or_default().push(Point::new(x, z));
    }
    let frames = frames
        .into_iter()
        .map(|(i, pts)| LocalizationFrame::new(i, pts))
        .collect();
    Ok(Dataset::new(config, frames)?)
}

pub fn load_dataset(path: &Path, config: ImagingConfig) -> CliResult<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    dataset_from_csv(&text, config).map_err(|e| match e {
        CliError::Invalid(msg) => CliError::Invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> CliResult<()> {
    write_file(path, dataset_to_csv(dataset).as_bytes())
}

/// Binary PGM (P5, maxval 255).
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> CliResult<GrayImage> {
    let bad = |what: &str| CliError::Invalid(format!("invalid PGM: {what}"));
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("expected magic P5"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width.checked_mul(height).ok_or_else(|| bad("dimensions overflow"))?;
    if bytes.len() < pos || bytes.len() - pos != n {
        return Err(bad("raster size does not match dimensions"));
    }
    Ok(GrayImage {
        width,
        height,
        pixels: bytes[pos..].to_vec(),
    })
}

pub fn save_pgm(image: &GrayImage, path: &Path) -> CliResult<()> {
    write_file(path, &encode_pgm(image))
}

/// Reads a mask PGM; nonzero pixels are dense.
pub fn load_mask(path: &Path) -> CliResult<RegionMask> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let image = decode_pgm(&bytes).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(RegionMask::new(
        image.width,
        image.height,
        image.pixels.iter().map(|&p| p != 0).collect(),
    ))
}

/// Little-endian `u32` width, `u32` height, then `f64` values row-major.
pub fn encode_map(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * values.len());
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_map`]: `(width, height, values)`.
pub fn decode_map(bytes: &[u8]) -> CliResult<(usize, usize, Vec<f64>)> {
    let bad = |what: &str| CliError::Invalid(format!("invalid map file: {what}"));
    if bytes.len() < 8 {
        return Err(bad("shorter than its 8-byte header"));
    }
    let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if Some(body.len()) != width.checked_mul(height).and_then(|n| n.checked_mul(8)) {
        return Err(bad("payload size does not match dimensions"));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((width, height, values))
}

pub fn save_map(map: &SrMap, path: &Path) -> CliResult<()> {
    write_file(path, &encode_map(map.width(), map.height(), &map.values))
}

/// Loads a map onto a unit-pixel lattice; only the dimensions survive the
/// file format.
pub fn load_map(path: &Path) -> CliResult<SrMap> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::io(path, e))?;
    let (width, height, values) =
        decode_map(&bytes).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let geometry = GridGeometry {
        width,
        height,
        pixel_size: 1.0,
        x_min: 0.0,
        z_min: 0.0,
    };
    Ok(SrMap::from_values(geometry, values))
}

pub fn results_csv(result: &SweepResult) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            format_rate(r.fp_rate),
            format_rate(r.fn_rate),
            r.rep,
            r.region.as_str(),
            format_significant(r.ssim, 9),
            format_significant(r.psnr, 9)
        );
    }
    out
}

pub fn aggregate_csv(table: &AggregateTable) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_rate(r.fp_rate),
            format_rate(r.fn_rate),
            r.region.as_str(),
            format_significant(r.ssim_mean, 9),
            format_significant(r.ssim_std, 9),
            format_significant(r.psnr_mean, 9),
            format_significant(r.psnr_std, 9)
        );
    }
    out
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| CliError::io(path, e))
}
