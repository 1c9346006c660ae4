//! Scenario configuration.
//!
//! The file is TOML. Every physical key carries its unit in the name
//! (`_m`, `_hz`, `_w`, `_dbw`, ...); where two units are accepted exactly one
//! may be given. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use nalgebra::{Point2, Point3, Vector2};
use serde::{Deserialize, Serialize};

use crate::channel::{PathLossParams, SPEED_OF_LIGHT};
use crate::energy::WecParams;
use crate::error::{Error, Result};
use crate::optimizer::{OptimizerConfig, SdpSettings};
use crate::ris_system::RisConfig;
use crate::sea_surface::{wave_from_sea_state, FloatingNode, SeaStateLevel, SeaStateTable, DEFAULT_WAVE_SOURCE};

/// Site layout. The turbine sits at `turbine`; the RIS hangs on its
/// surface facing the center buoy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub turbine: Point2<f64>,
    pub turbine_diameter: f64,
    pub ris_height: f64,
    /// Center buoy position relative to the turbine, meters.
    pub center_buoy_offset: Vector2<f64>,
    pub deployment_radius: f64,
    pub mean_iots: f64,
    pub iot_mast_height: f64,
    pub rx_mast_height: f64,
    /// Far-field origin of the swell.
    pub wave_source: Point2<f64>,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            turbine: Point2::origin(),
            turbine_diameter: 6.0,
            ris_height: 35.0,
            center_buoy_offset: Vector2::new(200.0, 0.0),
            deployment_radius: 200.0,
            mean_iots: 4.0,
            iot_mast_height: 2.0,
            rx_mast_height: 5.0,
            wave_source: DEFAULT_WAVE_SOURCE,
        }
    }
}

impl Geometry {
    pub fn center_buoy(&self) -> Point2<f64> {
        self.turbine + self.center_buoy_offset
    }

    pub fn receiver(&self) -> Result<FloatingNode> {
        FloatingNode::new(self.center_buoy(), self.rx_mast_height)
    }

    pub fn ris(&self, n: usize, wavelength: f64) -> Result<RisConfig> {
        let facing = self.center_buoy_offset.normalize();
        let foot = self.turbine + facing * (self.turbine_diameter / 2.0);
        RisConfig::planar(n, Point3::new(foot.x, foot.y, self.ris_height), facing, wavelength)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radio {
    pub antennas: usize,
    pub ris_elements: usize,
    /// Noise power, watts.
    pub sigma2: f64,
    /// Bandwidth, Hz; also the symbol rate.
    pub beta: f64,
    pub path_loss: PathLossParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationSettings {
    /// Scheduled reflection sub-frames `B`; `None` means `B = N`.
    pub subframes: Option<usize>,
    /// Pilot length `T`; `None` means the number of active IoTs.
    pub pilot_length: Option<usize>,
    /// Estimate from noise-free pilots (exact CSI).
    pub noiseless: bool,
}

/// Fully resolved scenario, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Sea states to simulate; sweeps produce one cell per state and value.
    pub sea_states: Vec<SeaStateLevel>,
    pub sea_state_table: SeaStateTable,
    pub geometry: Geometry,
    pub radio: Radio,
    pub energy: WecParams,
    pub estimation: EstimationSettings,
    pub optimizer: OptimizerConfig,
    /// Coherence interval, seconds.
    pub interval: f64,
    /// Worker threads for sweeps; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            sea_states: vec![SeaStateLevel::Level(4)],
            sea_state_table: SeaStateTable::default(),
            geometry: Geometry::default(),
            radio: Radio {
                antennas: 8,
                ris_elements: 360,
                sigma2: dbw_to_w(-131.0),
                beta: 5e6,
                path_loss: PathLossParams::default(),
            },
            energy: WecParams::default(),
            estimation: EstimationSettings { subframes: None, pilot_length: None, noiseless: false },
            optimizer: OptimizerConfig::default(),
            interval: 0.1,
            threads: None,
        }
    }
}

pub fn dbw_to_w(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_base(text, None)
    }

    /// Loads a config file; a relative `sea_state_table` path is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_with_base(&text, path.parent()).map_err(|e| match e {
            Error::Config(message) => Error::Format { path: path.to_path_buf(), message },
            other => other,
        })
    }

    fn from_toml_with_base(text: &str, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = raw.resolve(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Subframes actually used: `B` if set, else `N`.
    pub fn subframes(&self) -> usize {
        self.estimation.subframes.unwrap_or(self.radio.ris_elements)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let positive = [
            ("turbine_diameter_m", g.turbine_diameter),
            ("ris_height_m", g.ris_height),
            ("deployment_radius_m", g.deployment_radius),
            ("mean_iots", g.mean_iots),
            ("iot_mast_height_m", g.iot_mast_height),
            ("rx_mast_height_m", g.rx_mast_height),
            ("noise power", self.radio.sigma2),
            ("bandwidth_hz", self.radio.beta),
            ("interval_s", self.interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(g.center_buoy_offset.norm() > g.turbine_diameter / 2.0) {
            return Err(Error::Config("center buoy must lie outside the turbine".into()));
        }
        if self.radio.antennas == 0 || self.radio.ris_elements == 0 {
            return Err(Error::Config("antennas and ris_elements must be at least 1".into()));
        }
        if self.subframes() < self.radio.ris_elements {
            return Err(Error::TooFewSubframes { subframes: self.subframes(), elements: self.radio.ris_elements });
        }
        if self.estimation.pilot_length == Some(0) {
            return Err(Error::Config("pilot_length must be at least 1".into()));
        }
        if self.sea_states.is_empty() {
            return Err(Error::Config("at least one sea state is required".into()));
        }
        for level in &self.sea_states {
            wave_from_sea_state(self.sea_state_table.lookup(*level)?, g.wave_source)?;
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.radio.path_loss.validate().map_err(to_config)?;
        self.energy.validate().map_err(to_config)?;
        self.optimizer.validate().map_err(to_config)?;
        Ok(())
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(SeaStateLevel),
    Many(Vec<SeaStateLevel>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    sea_state: Option<OneOrMany>,
    sea_state_table: Option<PathBuf>,
    interval_s: Option<f64>,
    threads: Option<usize>,
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    radio: RawRadio,
    #[serde(default)]
    energy: RawEnergy,
    #[serde(default)]
    estimation: RawEstimation,
    #[serde(default)]
    optimizer: RawOptimizer,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    turbine_x_m: Option<f64>,
    turbine_y_m: Option<f64>,
    turbine_diameter_m: Option<f64>,
    ris_height_m: Option<f64>,
    center_buoy_distance_m: Option<f64>,
    /// Bearing of the center buoy seen from the turbine, degrees from +x.
    center_buoy_bearing_deg: Option<f64>,
    deployment_radius_m: Option<f64>,
    mean_iots: Option<f64>,
    iot_mast_height_m: Option<f64>,
    rx_mast_height_m: Option<f64>,
    wave_source_x_m: Option<f64>,
    wave_source_y_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    antennas: Option<usize>,
    ris_elements: Option<usize>,
    carrier_hz: Option<f64>,
    bandwidth_hz: Option<f64>,
    noise_w: Option<f64>,
    noise_dbw: Option<f64>,
    duct_height_m: Option<f64>,
    nlos_intercept_db: Option<f64>,
    nlos_exponent: Option<f64>,
    reference_distance_m: Option<f64>,
    sigma_los_db: Option<f64>,
    sigma_nlos_db: Option<f64>,
    tx_gain_db: Option<f64>,
    rx_gain_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnergy {
    eta_pto: Option<f64>,
    eta_conv: Option<f64>,
    gamma_cwr: Option<f64>,
    width_m: Option<f64>,
    rho_kg_m3: Option<f64>,
    g_m_s2: Option<f64>,
    p0_w: Option<f64>,
    p0_dbw: Option<f64>,
    p_max_w: Option<f64>,
    p_max_dbw: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimation {
    subframes: Option<usize>,
    pilot_length: Option<usize>,
    noiseless: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    sdp_tol: Option<f64>,
    sdp_max_iter: Option<usize>,
    sdp_rho: Option<f64>,
    randomization_draws: Option<usize>,
    debug_dump: Option<PathBuf>,
}

fn either(name: &str, linear: Option<f64>, db: Option<f64>, default: f64) -> Result<f64> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(Error::Config(format!("give {name}_w or {name}_dbw, not both"))),
        (Some(w), None) => Ok(w),
        (None, Some(d)) => Ok(dbw_to_w(d)),
        (None, None) => Ok(default),
    }
}

impl RawConfig {
    fn resolve(self, base: Option<&Path>) -> Result<ScenarioConfig> {
        let d = ScenarioConfig::default();
        let sea_state_table = match self.sea_state_table {
            Some(p) => {
                let p = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                };
                SeaStateTable::load(&p)?
            }
            None => d.sea_state_table,
        };
        let sea_states = match self.sea_state {
            None => d.sea_states,
            Some(OneOrMany::One(l)) => vec![l],
            Some(OneOrMany::Many(v)) => v,
        };

        let g = self.geometry;
        let dg = d.geometry;
        let dist = g.center_buoy_distance_m.unwrap_or(dg.center_buoy_offset.norm());
        let bearing = g.center_buoy_bearing_deg.unwrap_or(0.0).to_radians();
        let geometry = Geometry {
            turbine: Point2::new(g.turbine_x_m.unwrap_or(dg.turbine.x), g.turbine_y_m.unwrap_or(dg.turbine.y)),
            turbine_diameter: g.turbine_diameter_m.unwrap_or(dg.turbine_diameter),
            ris_height: g.ris_height_m.unwrap_or(dg.ris_height),
            center_buoy_offset: Vector2::new(bearing.cos(), bearing.sin()) * dist,
            deployment_radius: g.deployment_radius_m.unwrap_or(dg.deployment_radius),
            mean_iots: g.mean_iots.unwrap_or(dg.mean_iots),
            iot_mast_height: g.iot_mast_height_m.unwrap_or(dg.iot_mast_height),
            rx_mast_height: g.rx_mast_height_m.unwrap_or(dg.rx_mast_height),
            wave_source: Point2::new(
                g.wave_source_x_m.unwrap_or(dg.wave_source.x),
                g.wave_source_y_m.unwrap_or(dg.wave_source.y),
            ),
        };

        let r = self.radio;
        let dp = d.radio.path_loss;
        let carrier = r.carrier_hz.unwrap_or(dp.carrier_hz);
        let path_loss = PathLossParams {
            carrier_hz: carrier,
            wavelength: SPEED_OF_LIGHT / carrier,
            duct_height: r.duct_height_m.unwrap_or(dp.duct_height),
            nlos_intercept_db: r.nlos_intercept_db.unwrap_or(dp.nlos_intercept_db),
            nlos_exponent: r.nlos_exponent.unwrap_or(dp.nlos_exponent),
            reference_distance: r.reference_distance_m.unwrap_or(dp.reference_distance),
            sigma_los_db: r.sigma_los_db.unwrap_or(dp.sigma_los_db),
            sigma_nlos_db: r.sigma_nlos_db.unwrap_or(dp.sigma_nlos_db),
            tx_gain_db: r.tx_gain_db.unwrap_or(dp.tx_gain_db),
            rx_gain_db: r.rx_gain_db.unwrap_or(dp.rx_gain_db),
        };
        let radio = Radio {
            antennas: r.antennas.unwrap_or(d.radio.antennas),
            ris_elements: r.ris_elements.unwrap_or(d.radio.ris_elements),
            sigma2: either("noise", r.noise_w, r.noise_dbw, d.radio.sigma2)?,
            beta: r.bandwidth_hz.unwrap_or(d.radio.beta),
            path_loss,
        };

        let e = self.energy;
        let de = d.energy;
        let energy = WecParams {
            eta_pto: e.eta_pto.unwrap_or(de.eta_pto),
            eta_conv: e.eta_conv.unwrap_or(de.eta_conv),
            gamma_cwr: e.gamma_cwr.unwrap_or(de.gamma_cwr),
            width: e.width_m.unwrap_or(de.width),
            rho: e.rho_kg_m3.unwrap_or(de.rho),
            g: e.g_m_s2.unwrap_or(de.g),
            p0: either("p0", e.p0_w, e.p0_dbw, de.p0)?,
            p_max: either("p_max", e.p_max_w, e.p_max_dbw, de.p_max)?,
        };

        let o = self.optimizer;
        let dso = SdpSettings::default();
        let optimizer = OptimizerConfig {
            sdp: SdpSettings {
                tol: o.sdp_tol.unwrap_or(dso.tol),
                max_iter: o.sdp_max_iter.unwrap_or(dso.max_iter),
                rho: o.sdp_rho.unwrap_or(dso.rho),
            },
            randomization_draws: o.randomization_draws.unwrap_or(d.optimizer.randomization_draws),
            debug_dump: o.debug_dump,
        };

        Ok(ScenarioConfig {
            seed: self.seed.unwrap_or(d.seed),
            sea_states,
            sea_state_table,
            geometry,
            radio,
            energy,
            estimation: EstimationSettings {
                subframes: self.estimation.subframes,
                pilot_length: self.estimation.pilot_length,
                noiseless: self.estimation.noiseless.unwrap_or(false),
            },
            optimizer,
            interval: self.interval_s.unwrap_or(d.interval),
            threads: self.threads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.radio.ris_elements, 360);
        assert_eq!(cfg.radio.antennas, 8);
        assert_eq!(cfg.energy.p_max, 100.0);
        assert_eq!(cfg.geometry.center_buoy(), Point2::new(200.0, 0.0));
        assert_eq!(cfg.subframes(), 360);
    }

    #[test]
    fn unit_tagged_alternatives() {
        let cfg = ScenarioConfig::from_toml_str(
            "sea_state = \">8\"\n[energy]\np_max_dbw = 10.0\np0_w = 2.5\n[radio]\nnoise_w = 1e-12\n",
        )
        .unwrap();
        assert!((cfg.energy.p_max - 10.0).abs() < 1e-12);
        assert_eq!(cfg.energy.p0, 2.5);
        assert_eq!(cfg.radio.sigma2, 1e-12);
        assert_eq!(cfg.sea_states, vec![SeaStateLevel::AboveEight]);

        let err = ScenarioConfig::from_toml_str("[energy]\np_max_w = 1.0\np_max_dbw = 0.0\n").unwrap_err();
        assert!(err.is_config_error());
    }

    #[test]
    fn sea_state_list() {
        let cfg = ScenarioConfig::from_toml_str("sea_state = [2, 4, \"6\"]").unwrap();
        assert_eq!(cfg.sea_states.len(), 3);
        assert!(ScenarioConfig::from_toml_str("sea_state = 12").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["bogus = 1", "[radio]\npower = 3", "[geometry]\nris_height = 30", "[extra]\n"] {
            let err = ScenarioConfig::from_toml_str(text).unwrap_err();
            assert!(err.is_config_error(), "{text}: {err}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "[geometry]\nmean_iots = 0.0",
            "[radio]\nris_elements = 0",
            "[estimation]\nsubframes = 3\n[radio]\nris_elements = 4",
            "[energy]\neta_pto = 1.5",
            "interval_s = -1.0",
            "[optimizer]\nrandomization_draws = 0",
            "sea_state = 1",
        ] {
            let err = ScenarioConfig::from_toml_str(text).unwrap_err();
            assert!(err.is_config_error(), "{text}: {err}");
        }
    }

    #[test]
    fn ris_faces_the_center_buoy() {
        let cfg = ScenarioConfig::from_toml_str("[geometry]\ncenter_buoy_bearing_deg = 90.0").unwrap();
        let ris = cfg.geometry.ris(4, cfg.radio.path_loss.wavelength).unwrap();
        assert!((ris.center().y - 3.0).abs() < 1e-12);
        assert!((ris.center().z - 35.0).abs() < 1e-12);
    }

    #[test]
    fn table_path_is_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let table = "[[state]]\nlevel = 4\nheight_m = [1.0, 2.0]\nheight_mean_m = 1.5\nperiod_s = [5.0, 9.0]\nperiod_mean_s = 7.0\n";
        std::fs::write(dir.path().join("table.toml"), table).unwrap();
        std::fs::write(dir.path().join("cfg.toml"), "sea_state_table = \"table.toml\"\n").unwrap();
        let cfg = ScenarioConfig::load(&dir.path().join("cfg.toml")).unwrap();
        assert_eq!(cfg.sea_state_table.states().len(), 1);
        let err = ScenarioConfig::load(&dir.path().join("missing.toml")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
