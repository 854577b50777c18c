//! Scenario configuration files (JSON). Angles in degrees, heights and
//! distances in metres, speeds in m/s, frequencies in Hz.

use std::path::{Path, PathBuf};

use fdoa_locus::cone::{Refraction, RefractionConvention};
use fdoa_locus::error_analysis::AtmosphereModel;
use fdoa_locus::geodesy::{orthometric_to_ellipsoid_height, Attitude, GeodeticCoord};
use fdoa_locus::intersect::DEFAULT_SAMPLES;
use fdoa_locus::terrain::SearchStrategy;
use fdoa_locus::{DopplerMeasurement, Vec3, VehicleState};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Output file stem; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub vehicle: VehicleConfig,
    #[serde(default)]
    pub measurement: Option<MeasurementConfig>,
    /// Forces the semi-angle instead of deriving it from a measurement.
    #[serde(default)]
    pub semi_angle_deg: Option<f64>,
    #[serde(default)]
    pub atmosphere: AtmosphereModel,
    #[serde(default)]
    pub refraction_convention: RefractionConvention,
    #[serde(default)]
    pub terrain: Option<TerrainConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub lat: f64,
    pub lon: f64,
    /// Ellipsoid height, or orthometric height when `undulation` is given.
    pub h: f64,
    #[serde(default)]
    pub undulation: Option<f64>,
    #[serde(default)]
    pub speed: Option<f64>,
    #[serde(default)]
    pub attitude: Option<AttitudeConfig>,
    /// Explicit ECEF velocity; replaces `speed` and `attitude`.
    #[serde(default)]
    pub velocity_ecef: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeConfig {
    #[serde(default)]
    pub roll: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub f_received: f64,
    pub f_reference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainFormat {
    Dted,
    Portable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainConfig {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    /// Inferred from the extension (`.dt0/.dt1/.dt2` → DTED) when absent.
    #[serde(default)]
    pub format: Option<TerrainFormat>,
    /// Constant geoid undulation; overrides whatever the file carries.
    #[serde(default)]
    pub geoid_n: Option<f64>,
    #[serde(default)]
    pub threshold_m: Option<f64>,
    #[serde(default)]
    pub strategy: SearchStrategy,
}

impl TerrainConfig {
    pub fn resolved_format(&self) -> TerrainFormat {
        self.format.unwrap_or_else(|| {
            let ext = self.path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if matches!(ext.to_ascii_lowercase().as_str(), "dt0" | "dt1" | "dt2" | "dted") {
                TerrainFormat::Dted
            } else {
                TerrainFormat::Portable
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Kml,
    Geojson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub formats: Vec<OutputFormat>,
    /// Also write the occluded (far-side) intersection components.
    #[serde(default = "yes")]
    pub include_occluded: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            formats: vec![OutputFormat::Kml, OutputFormat::Geojson],
            include_occluded: true,
        }
    }
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub path: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let config: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let loaded = Self {
            config,
            path: path.to_path_buf(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn stem(&self) -> String {
        self.config.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("scenario")
                .to_string()
        })
    }

    pub fn terrain_path(&self) -> Option<PathBuf> {
        let t = self.config.terrain.as_ref()?;
        Some(if t.path.is_absolute() {
            t.path.clone()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(&t.path)
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let bad = |m: &str| Err(CliError::Config(format!("{}: {m}", self.path.display())));
        let v = &c.vehicle;
        match (v.velocity_ecef.is_some(), v.speed.is_some() || v.attitude.is_some()) {
            (true, true) => return bad("give either velocity_ecef or speed + attitude, not both"),
            (false, false) => return bad("vehicle needs velocity_ecef or speed + attitude"),
            (false, true) if v.speed.is_none() || v.attitude.is_none() => {
                return bad("speed and attitude must be given together")
            }
            _ => {}
        }
        if c.measurement.is_none() && c.semi_angle_deg.is_none() {
            return bad("need a measurement or semi_angle_deg");
        }
        if c.sweep.n_samples < fdoa_locus::intersect::MIN_SAMPLES {
            return bad(&format!("sweep.n_samples must be at least {}", fdoa_locus::intersect::MIN_SAMPLES));
        }
        if let Err(e) = c.atmosphere.validate() {
            return bad(&e.to_string());
        }
        Ok(())
    }
}

impl ScenarioConfig {
    pub fn position(&self) -> Result<GeodeticCoord<f64>, CliError> {
        let v = &self.vehicle;
        let h = match v.undulation {
            Some(n) => orthometric_to_ellipsoid_height(v.h, n),
            None => v.h,
        };
        GeodeticCoord::new(v.lat, v.lon, h).map_err(|e| CliError::Config(format!("vehicle position: {e}")))
    }

    pub fn vehicle_state(&self) -> Result<VehicleState<f64>, CliError> {
        let pos = self.position()?;
        let v = &self.vehicle;
        let vs = match (v.velocity_ecef, v.speed, v.attitude) {
            (Some(vel), _, _) => VehicleState::from_ecef_velocity(pos, Vec3::from_array(vel)),
            (None, Some(speed), Some(a)) => VehicleState::from_attitude(pos, speed, Attitude::new(a.roll, a.pitch, a.yaw)),
            _ => return Err(CliError::Config("incomplete vehicle velocity".into())),
        };
        vs.map_err(|e| CliError::Config(format!("vehicle: {e}")))
    }

    pub fn measurement(&self) -> Result<Option<DopplerMeasurement<f64>>, CliError> {
        self.measurement
            .map(|m| DopplerMeasurement::new(m.f_received, m.f_reference))
            .transpose()
            .map_err(|e| CliError::Config(format!("measurement: {e}")))
    }

    /// Refraction at the receiver's altitude, with the configured convention.
    pub fn refraction(&self) -> Result<Option<Refraction<f64>>, CliError> {
        Ok(self.atmosphere.refraction_at(self.position()?.h).map(|r| Refraction {
            convention: self.refraction_convention,
            ..r
        }))
    }
}
