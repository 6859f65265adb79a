//! Configuration resolution: a TOML file provides per-module sections,
//! command-line flags mirror the keys one-to-one, and flags win.

use serde::Deserialize;
use std::path::PathBuf;
use uqr_core::automorphic::SineProfile;
use uqr_core::dynamics::{DwParams, Thresholds};
use uqr_core::scene::{MapChoice, SceneConfig};
use uqr_core::schroeder::QcDeformation;

use crate::CliError;

/// The on-disk configuration: one section per module.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub scene: Option<SceneConfig>,
    pub output: OutputSection,
    pub render: RenderSection,
    pub denjoy_wolff: DwSection,
    pub distortion: DistortionSection,
    pub preimages: PreimagesSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSection {
    pub resolution: usize,
    pub extent: f64,
    pub axis_u: usize,
    pub axis_v: usize,
    pub origin: Option<Vec<f64>>,
}

impl Default for RenderSection {
    fn default() -> Self {
        RenderSection { resolution: 256, extent: 2.0, axis_u: 0, axis_v: 1, origin: None }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwSection {
    pub sample_radius: Option<f64>,
    pub tol: Option<f64>,
    pub probe_iter: Option<usize>,
    pub recurrence_window: Option<usize>,
    pub probe_samples: Option<usize>,
    /// When set, probe a ball rotation by this angle instead of the scene map.
    pub mobius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistortionSection {
    pub point: Option<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub series: Option<usize>,
    pub base_radius: f64,
}

impl Default for DistortionSection {
    fn default() -> Self {
        DistortionSection { point: None, radii: None, series: None, base_radius: 1e-2 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreimagesSection {
    pub target: Option<Vec<f64>>,
}

pub fn load_file(path: Option<&PathBuf>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

/// Scene-level flag overrides (mirroring the `[scene]` section keys).
#[derive(Debug, Default, clap::Args)]
pub struct SceneFlags {
    /// Ambient dimension (2 or 3)
    #[arg(long, global = true)]
    pub dimension: Option<usize>,
    /// Group name (zorich2, sine2, p2, p2-sine)
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Map kind: power, chebyshev, joukowsky, h-d, lifted
    #[arg(long, global = true)]
    pub map: Option<String>,
    /// Degree parameter d
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Conformal scale override (admissibility is enforced)
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    /// Quarter turns composed into the conformal factor (0-3)
    #[arg(long, global = true)]
    pub quarter_turns: Option<u8>,
    /// Spatial sine profile: cell or averaged
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Deformation, e.g. shear:0.5, twist:0.7, radial-power:1.3, none
    #[arg(long, global = true)]
    pub deformation: Option<String>,
    /// Inner escape radius
    #[arg(long, global = true)]
    pub r_small: Option<f64>,
    /// Outer escape radius
    #[arg(long, global = true)]
    pub r_large: Option<f64>,
    /// Orbit iteration budget
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
}

pub fn parse_map_choice(name: &str) -> Result<MapChoice, CliError> {
    MapChoice::parse(name).map_err(|e| CliError::Config(e.to_string()))
}

pub fn parse_profile(name: &str) -> Result<SineProfile, CliError> {
    match name.to_ascii_lowercase().as_str() {
        "cell" => Ok(SineProfile::Cell),
        "averaged" => Ok(SineProfile::Averaged),
        other => Err(CliError::Config(format!(
            "unknown profile {other:?}; expected cell or averaged"
        ))),
    }
}

pub fn parse_deformation(text: &str) -> Result<Option<QcDeformation>, CliError> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let (kind, value) = t.split_once(':').ok_or_else(|| {
        CliError::Config(format!("deformation {t:?} must look like kind:value, e.g. shear:0.5"))
    })?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("deformation parameter {value:?} is not a number")))?;
    let def = match kind.trim().to_ascii_lowercase().as_str() {
        "shear" => QcDeformation::Shear { strength: v },
        "twist" => QcDeformation::Twist { angle: v },
        "radial-power" | "radial_power" => QcDeformation::RadialPower { exponent: v },
        other => {
            return Err(CliError::Config(format!(
                "unknown deformation kind {other:?}; expected shear, twist, or radial-power"
            )))
        }
    };
    Ok(Some(def))
}

/// Comma-separated float list, e.g. "0.1,0.2,0.3".
pub fn parse_floats(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{p:?} is not a number")))
        })
        .collect()
}

/// Merge the `[scene]` section with scene flags and the global seed flag.
pub fn effective_scene(
    file: &FileConfig,
    flags: &SceneFlags,
    seed: Option<u64>,
) -> Result<SceneConfig, CliError> {
    let mut cfg = file.scene.clone().unwrap_or_default();
    if let Some(v) = flags.dimension {
        cfg.dimension = v;
    }
    if let Some(v) = &flags.group {
        cfg.group = Some(v.clone());
    }
    if let Some(v) = &flags.map {
        cfg.map = parse_map_choice(v)?;
    }
    if let Some(v) = flags.d {
        cfg.degree = Some(v);
    }
    if let Some(v) = flags.scale {
        cfg.scale = Some(v);
    }
    if let Some(v) = flags.quarter_turns {
        cfg.quarter_turns = v;
    }
    if let Some(v) = &flags.profile {
        cfg.profile = parse_profile(v)?;
    }
    if let Some(v) = &flags.deformation {
        cfg.deformation = parse_deformation(v)?;
    }
    let th = Thresholds {
        r_small: flags.r_small.unwrap_or(cfg.thresholds.r_small),
        r_large: flags.r_large.unwrap_or(cfg.thresholds.r_large),
        max_iter: flags.max_iter.unwrap_or(cfg.thresholds.max_iter),
    };
    th.validate().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.thresholds = th;
    if let Some(v) = seed {
        cfg.seed = v;
    }
    Ok(cfg)
}

/// Fold the `[denjoy_wolff]` section and its flags into probe parameters.
pub fn effective_dw(
    file: &DwSection,
    sample_radius: Option<f64>,
    tol: Option<f64>,
    probe_iter: Option<usize>,
    recurrence_window: Option<usize>,
    probe_samples: Option<usize>,
    seed: u64,
) -> DwParams {
    let d = DwParams::default();
    DwParams {
        sample_radius: sample_radius.or(file.sample_radius).unwrap_or(d.sample_radius),
        tol: tol.or(file.tol).unwrap_or(d.tol),
        max_iter: probe_iter.or(file.probe_iter).unwrap_or(d.max_iter),
        recurrence_window: recurrence_window
            .or(file.recurrence_window)
            .unwrap_or(d.recurrence_window),
        samples: probe_samples.or(file.probe_samples).unwrap_or(d.samples),
        seed,
    }
}
