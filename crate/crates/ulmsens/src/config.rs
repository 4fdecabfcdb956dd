//! JSON run configuration.
//!
//! Every section and key is optional and falls back to the defaults of the
//! core crate; unknown keys are rejected. [`RunConfig::validate`] checks all
//! values before any work starts.

use std::path::Path;

use serde::{Deserialize, Serialize};
use ulmsens_core::density::{DEFAULT_BANDWIDTH_WAVELENGTHS, DEFAULT_QUANTILE};
use ulmsens_core::metrics::DEFAULT_PSNR_CAP_DB;
use ulmsens_core::{Fov, ImagingConfig, Scale, SsimParams, SweepSettings, SweepSpec, SynthParams};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub imaging: ImagingSection,
    pub synth: SynthSection,
    pub kde: KdeSection,
    pub ssim: SsimSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FovSection {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagingSection {
    pub center_frequency_hz: f64,
    pub sound_speed_m_s: f64,
    pub fov_m: FovSection,
    pub sr_pixels_per_wavelength: u32,
}

impl Default for ImagingSection {
    fn default() -> Self {
        let c = ImagingConfig::default();
        let fov = c.fov();
        Self {
            center_frequency_hz: c.center_frequency(),
            sound_speed_m_s: c.sound_speed(),
            fov_m: FovSection {
                x_min: fov.x_min,
                x_max: fov.x_max,
                z_min: fov.z_min,
                z_max: fov.z_max,
            },
            sr_pixels_per_wavelength: c.pixels_per_wavelength(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub seed: u64,
    pub n_frames: u64,
    pub n_trunk: u32,
    pub branching_depth: u32,
    pub trunk_rate: f64,
    pub rate_decay: f64,
    pub branch_length_ratio: f64,
    pub jitter_wavelengths: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let p = SynthParams::default();
        Self {
            seed: 1,
            n_frames: 500,
            n_trunk: p.n_trunk,
            branching_depth: p.branching_depth,
            trunk_rate: p.trunk_rate,
            rate_decay: p.rate_decay,
            branch_length_ratio: p.branch_length_ratio,
            jitter_wavelengths: p.jitter_wavelengths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KdeSection {
    pub bandwidth_wavelengths: f64,
    pub quantile: f64,
}

impl Default for KdeSection {
    fn default() -> Self {
        Self {
            bandwidth_wavelengths: DEFAULT_BANDWIDTH_WAVELENGTHS,
            quantile: DEFAULT_QUANTILE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsimSection {
    pub window_radius: usize,
    pub gaussian_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimSection {
    fn default() -> Self {
        let p = SsimParams::default();
        Self {
            window_radius: p.window_radius,
            gaussian_sigma: p.gaussian_sigma,
            k1: p.k1,
            k2: p.k2,
            dynamic_range: p.dynamic_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub fp_rates: Vec<f64>,
    pub fn_rates: Vec<f64>,
    pub repetitions: u32,
    pub master_seed: u64,
    pub psnr_cap_db: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        let s = SweepSpec::default();
        Self {
            fp_rates: s.fp_rates().to_vec(),
            fn_rates: s.fn_rates().to_vec(),
            repetitions: s.repetitions(),
            master_seed: s.master_seed(),
            psnr_cap_db: DEFAULT_PSNR_CAP_DB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapScale {
    #[default]
    Fixed,
    Data,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// dB-compress normalized maps before scoring.
    pub log_compress: bool,
    pub heatmap_scale: HeatmapScale,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Invalid(msg) => CliError::Invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every section; the first problem found is reported.
    pub fn validate(&self) -> CliResult<()> {
        self.imaging()?;
        self.synth_params()?.validate()?;
        if self.synth.n_frames == 0 {
            return Err(CliError::Invalid("synth.n_frames must be >= 1".into()));
        }
        let k = &self.kde;
        if !(k.bandwidth_wavelengths > 0.0 && k.bandwidth_wavelengths.is_finite()) {
            return Err(CliError::Invalid(format!(
                "kde.bandwidth_wavelengths must be positive, got {}",
                k.bandwidth_wavelengths
            )));
        }
        if !(0.0..=1.0).contains(&k.quantile) {
            return Err(CliError::Invalid(format!(
                "kde.quantile must lie in [0, 1], got {}",
                k.quantile
            )));
        }
        self.ssim_params().validate()?;
        self.sweep_spec()?;
        let cap = self.sweep.psnr_cap_db;
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(CliError::Invalid(format!(
                "sweep.psnr_cap_db must be positive, got {cap}"
            )));
        }
        Ok(())
    }

    pub fn imaging(&self) -> CliResult<ImagingConfig> {
        let i = &self.imaging;
        let fov = Fov {
            x_min: i.fov_m.x_min,
            x_max: i.fov_m.x_max,
            z_min: i.fov_m.z_min,
            z_max: i.fov_m.z_max,
        };
        Ok(ImagingConfig::new(
            i.center_frequency_hz,
            i.sound_speed_m_s,
            fov,
            i.sr_pixels_per_wavelength,
        )?)
    }

    pub fn synth_params(&self) -> CliResult<SynthParams> {
        let s = &self.synth;
        Ok(SynthParams {
            n_trunk: s.n_trunk,
            branching_depth: s.branching_depth,
            trunk_rate: s.trunk_rate,
            rate_decay: s.rate_decay,
            branch_length_ratio: s.branch_length_ratio,
            jitter_wavelengths: s.jitter_wavelengths,
        })
    }

    pub fn ssim_params(&self) -> SsimParams {
        let s = &self.ssim;
        SsimParams {
            window_radius: s.window_radius,
            gaussian_sigma: s.gaussian_sigma,
            k1: s.k1,
            k2: s.k2,
            dynamic_range: s.dynamic_range,
        }
    }

    pub fn sweep_spec(&self) -> CliResult<SweepSpec> {
        let s = &self.sweep;
        Ok(SweepSpec::new(
            s.fp_rates.clone(),
            s.fn_rates.clone(),
            s.repetitions,
            s.master_seed,
        )?)
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            ssim: self.ssim_params(),
            psnr_cap_db: self.sweep.psnr_cap_db,
            log_compress: self.output.log_compress,
            bandwidth_wavelengths: self.kde.bandwidth_wavelengths,
            quantile: self.kde.quantile,
        }
    }

    pub fn heatmap_scale(&self) -> Scale {
        match self.output.heatmap_scale {
            HeatmapScale::Fixed => Scale::Fixed {
                psnr_cap_db: self.sweep.psnr_cap_db,
            },
            HeatmapScale::Data => Scale::DataRange,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
