//! TOML configuration files: station metadata, pipeline settings and the
//! synthetic scenario.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use heliocast::hybrid::{HybridMode, SeasonScheme};
use heliocast::solar::{SolisParams, StationMeta, SOLAR_CONSTANT};
use heliocast::stationarize::Method;

/// One station record, with optional Solis overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationFile {
    pub id: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    #[serde(default)]
    pub solar_constant: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
}

impl StationFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading station file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing station file {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, toml::to_string_pretty(self)?)
            .with_context(|| format!("writing station file {}", path.display()))?;
        Ok(())
    }

    pub fn to_meta(&self) -> Result<StationMeta> {
        let mut meta = StationMeta::new(
            self.id.clone(),
            self.latitude_deg.to_radians(),
            self.longitude_deg.to_radians(),
            self.altitude_m,
        )?
        .with_solar_constant(self.solar_constant.unwrap_or(SOLAR_CONSTANT))?;
        if let (Some(tau), Some(b)) = (self.tau, self.b) {
            meta = meta.with_solis(SolisParams { tau, b })?;
        }
        Ok(meta)
    }

    pub fn from_meta(meta: &StationMeta) -> Self {
        Self {
            id: meta.id.clone(),
            latitude_deg: meta.latitude.to_degrees(),
            longitude_deg: meta.longitude.to_degrees(),
            altitude_m: meta.altitude,
            solar_constant: Some(meta.solar_constant),
            tau: meta.solis.map(|s| s.tau),
            b: meta.solis.map(|s| s.b),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmaSection {
    /// Fixed order; when absent, a grid search runs up to the bounds below.
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub p_max: usize,
    pub q_max: usize,
}

impl Default for ArmaSection {
    fn default() -> Self {
        Self { p: None, q: None, p_max: 5, q_max: 2 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSection {
    pub hidden: usize,
    /// Cap on the endogenous lag count taken from the correlogram.
    pub endo_cap: usize,
    pub cloud_threshold: f64,
    pub other_threshold: f64,
    /// Override for the endogenous significance bound (default 1.96/sqrt n).
    pub significance_bound: Option<f64>,
    /// Longest exogenous lag prefix scanned per channel.
    pub exo_scan_cap: usize,
    pub max_epochs: usize,
    pub max_fail: usize,
    pub goal: f64,
    pub seeds: Vec<u64>,
    /// Explicit canonical form, overriding lag selection.
    pub architecture: Option<String>,
    /// Which pressure channel feeds the P input group: "mean" or "gradient".
    pub pressure_channel: String,
}

impl Default for MlpSection {
    fn default() -> Self {
        Self {
            hidden: 8,
            endo_cap: 10,
            cloud_threshold: 0.50,
            other_threshold: 0.15,
            significance_bound: None,
            exo_scan_cap: 5,
            max_epochs: 200,
            max_fail: 5,
            goal: 0.0,
            seeds: vec![1],
            architecture: None,
            pressure_channel: "mean".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSection {
    pub modes: Vec<String>,
    pub season_scheme: String,
}

impl Default for HybridSection {
    fn default() -> Self {
        Self {
            modes: vec!["A".into(), "B".into(), "C".into()],
            season_scheme: "meteorological".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub hidden_grid: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            hidden_grid: vec![3, 5, 8, 12, 15],
            seeds: (1..=8).collect(),
        }
    }
}

/// Full pipeline configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub station_file: PathBuf,
    pub data_file: PathBuf,
    /// Stationarization method: none | ci | csi | csipc.
    pub method: String,
    pub max_missing_frac: f64,
    /// Ceiling on stationarized index values. Gap repair works on raw
    /// radiation, so a repaired sample at a low-sun hour can land far above
    /// the physical clear-sky ceiling once divided by a near-zero
    /// denominator; values above the cap are treated as non-typical points
    /// and clamped. Ignored for the untransformed method.
    pub index_cap: f64,
    /// Chronological [train, validation, test] fractions.
    pub split: [f64; 3],
    pub arma: ArmaSection,
    pub mlp: MlpSection,
    pub hybrid: HybridSection,
    pub sweep: SweepSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            station_file: PathBuf::from("station.toml"),
            data_file: PathBuf::from("hours.csv"),
            method: "csi".into(),
            max_missing_frac: 0.04,
            index_cap: 2.0,
            split: [0.72, 0.08, 0.20],
            arma: ArmaSection::default(),
            mlp: MlpSection::default(),
            hybrid: HybridSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        // Paths are relative to the config file's directory.
        if let Some(dir) = path.parent() {
            if cfg.station_file.is_relative() {
                cfg.station_file = dir.join(&cfg.station_file);
            }
            if cfg.data_file.is_relative() {
                cfg.data_file = dir.join(&cfg.data_file);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.parse_method()?;
        self.parse_modes()?;
        self.parse_scheme()?;
        if self.mlp.seeds.is_empty() {
            bail!("mlp.seeds must not be empty");
        }
        if !matches!(self.mlp.pressure_channel.as_str(), "mean" | "gradient") {
            bail!(
                "mlp.pressure_channel must be 'mean' or 'gradient', got '{}'",
                self.mlp.pressure_channel
            );
        }
        Ok(())
    }

    pub fn parse_method(&self) -> Result<Method> {
        match self.method.to_ascii_lowercase().as_str() {
            "none" => Ok(Method::None),
            "ci" => Ok(Method::Ci),
            "csi" => Ok(Method::Csi),
            "csipc" | "csi+pc" | "csi_pc" => Ok(Method::CsiPc),
            other => bail!("unknown stationarization method '{other}'"),
        }
    }

    pub fn parse_modes(&self) -> Result<Vec<HybridMode>> {
        self.hybrid
            .modes
            .iter()
            .map(|m| match m.to_ascii_uppercase().as_str() {
                "A" => Ok(HybridMode::A),
                "B" => Ok(HybridMode::B),
                "C" => Ok(HybridMode::C),
                other => bail!("unknown hybrid mode '{other}'"),
            })
            .collect()
    }

    pub fn parse_scheme(&self) -> Result<SeasonScheme> {
        match self.hybrid.season_scheme.to_ascii_lowercase().as_str() {
            "meteorological" => Ok(SeasonScheme::Meteorological),
            "astronomical" => Ok(SeasonScheme::Astronomical),
            other => bail!("unknown season scheme '{other}'"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_pipeline_config_parses_with_defaults() {
        let cfg: PipelineConfig =
            toml::from_str("station_file = \"s.toml\"\ndata_file = \"d.csv\"\n").unwrap();
        assert_eq!(cfg.method, "csi");
        assert_eq!(cfg.split, [0.72, 0.08, 0.20]);
        assert_eq!(cfg.mlp.hidden, 8);
        assert_eq!(cfg.arma.p_max, 5);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<PipelineConfig>("stattion_file = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("stattion_file"));
    }

    #[test]
    fn station_round_trip() {
        let file = StationFile {
            id: "aj".into(),
            latitude_deg: 41.9,
            longitude_deg: 8.8,
            altitude_m: 4.0,
            solar_constant: None,
            tau: Some(0.3),
            b: Some(0.9),
        };
        let meta = file.to_meta().unwrap();
        assert!((meta.latitude - 41.9f64.to_radians()).abs() < 1e-12);
        assert_eq!(meta.solis.unwrap().tau, 0.3);
        let back = StationFile::from_meta(&meta);
        assert_eq!(back.id, "aj");
        assert!((back.latitude_deg - 41.9).abs() < 1e-9);
    }

    #[test]
    fn method_and_mode_parsing() {
        let mut cfg = PipelineConfig::default();
        cfg.method = "CSIPC".into();
        assert_eq!(cfg.parse_method().unwrap(), Method::CsiPc);
        cfg.method = "bogus".into();
        assert!(cfg.parse_method().is_err());
        cfg.hybrid.modes = vec!["a".into(), "C".into()];
        assert_eq!(cfg.parse_modes().unwrap(), vec![HybridMode::A, HybridMode::C]);
    }
}
