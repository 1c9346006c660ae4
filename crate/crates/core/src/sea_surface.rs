//! Deterministic sine-wave sea surface.
//!
//! Each buoy rides a travelling sine wave; its antenna height above mean sea
//! level is `a sin(2 pi (d mod l)/l + 2 pi (t mod T)/T) + h0`, where `d` is the
//! buoy's distance to the wave source. A direct buoy-to-buoy link is LoS only
//! when the wave crest closest to *each* end stays below the line joining the
//! two antennas.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Point2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Standard gravity used by the deep-water dispersion relation.
pub const GRAVITY: f64 = 9.81;

/// A far-away source so wave fronts are locally planar over the deployment.
pub const DEFAULT_WAVE_SOURCE: Point2<f64> = Point2::new(-10_000.0, 0.0);

/// Sea-state index: 0 through 8 plus the open-ended ">8" class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeaStateLevel {
    Level(u8),
    AboveEight,
}

impl SeaStateLevel {
    pub fn new(level: u8) -> Result<Self> {
        if level <= 8 {
            Ok(SeaStateLevel::Level(level))
        } else {
            Err(Error::UnknownSeaState(level.to_string()))
        }
    }

    /// Stable small integer used when deriving per-trial RNG streams.
    pub fn code(self) -> u64 {
        match self {
            SeaStateLevel::Level(l) => l as u64,
            SeaStateLevel::AboveEight => 9,
        }
    }
}

impl fmt::Display for SeaStateLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeaStateLevel::Level(l) => write!(f, "{l}"),
            SeaStateLevel::AboveEight => f.write_str(">8"),
        }
    }
}

impl FromStr for SeaStateLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == ">8" {
            return Ok(SeaStateLevel::AboveEight);
        }
        s.parse::<u8>()
            .map_err(|_| Error::UnknownSeaState(s.to_string()))
            .and_then(SeaStateLevel::new)
    }
}

impl Serialize for SeaStateLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeaStateLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Int(i) => u8::try_from(i)
                .map_err(|_| Error::UnknownSeaState(i.to_string()))
                .and_then(SeaStateLevel::new),
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// One row of the sea-state table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeaState {
    pub level: SeaStateLevel,
    /// Crest-to-trough wave height range, meters.
    #[serde(rename = "height_m")]
    pub height_range: (f64, f64),
    #[serde(rename = "height_mean_m")]
    pub height_mean: f64,
    /// Wave period range, seconds; not tabulated for the calmest states.
    #[serde(rename = "period_s", default)]
    pub period_range: Option<(f64, f64)>,
    #[serde(rename = "period_mean_s", default)]
    pub period_mean: Option<f64>,
}

impl SeaState {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.height_range;
        if !(lo < hi) || lo < 0.0 {
            return Err(Error::Config(format!("sea state {}: bad height range", self.level)));
        }
        if !(lo..=hi).contains(&self.height_mean) {
            return Err(Error::Config(format!(
                "sea state {}: mean height outside its range",
                self.level
            )));
        }
        match (self.period_range, self.period_mean) {
            (Some((plo, phi)), Some(mean)) => {
                if !(plo < phi) || plo <= 0.0 || !(plo..=phi).contains(&mean) {
                    return Err(Error::Config(format!(
                        "sea state {}: inconsistent period range/mean",
                        self.level
                    )));
                }
            }
            (None, None) => {}
            (None, Some(mean)) if mean > 0.0 => {}
            _ => {
                return Err(Error::Config(format!(
                    "sea state {}: period range given without a positive mean",
                    self.level
                )))
            }
        }
        Ok(())
    }
}

/// Wave height and period per sea state, North-Atlantic open ocean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeaStateTable {
    #[serde(rename = "state")]
    states: Vec<SeaState>,
}

impl Default for SeaStateTable {
    fn default() -> Self {
        use SeaStateLevel::*;
        let row = |level, h: (f64, f64), hm, p: Option<(f64, f64)>, pm: Option<f64>| SeaState {
            level,
            height_range: h,
            height_mean: hm,
            period_range: p,
            period_mean: pm,
        };
        let states = vec![
            row(Level(0), (0.0, 0.1), 0.05, None, None),
            row(Level(1), (0.0, 0.1), 0.05, None, None),
            row(Level(2), (0.1, 0.5), 0.3, Some((3.0, 15.0)), Some(7.0)),
            row(Level(3), (0.5, 1.25), 0.875, Some((5.0, 15.5)), Some(8.0)),
            row(Level(4), (1.25, 2.5), 1.875, Some((6.0, 16.0)), Some(9.0)),
            row(Level(5), (2.5, 4.0), 3.25, Some((7.0, 16.5)), Some(10.0)),
            row(Level(6), (4.0, 6.0), 5.0, Some((9.0, 17.0)), Some(12.0)),
            row(Level(7), (6.0, 9.0), 7.5, Some((10.0, 18.0)), Some(14.0)),
            row(Level(8), (9.0, 14.0), 11.5, Some((13.0, 19.0)), Some(17.0)),
            row(AboveEight, (14.0, f64::INFINITY), 14.0, Some((18.0, 24.0)), Some(20.0)),
        ];
        SeaStateTable { states }
    }
}

impl SeaStateTable {
    pub fn new(states: Vec<SeaState>) -> Result<Self> {
        for (i, s) in states.iter().enumerate() {
            s.validate()?;
            if states[..i].iter().any(|o| o.level == s.level) {
                return Err(Error::Config(format!("sea state {} listed twice", s.level)));
            }
        }
        Ok(SeaStateTable { states })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: SeaStateTable =
            toml::from_str(text).map_err(|e| Error::Config(format!("sea-state table: {e}")))?;
        SeaStateTable::new(raw.states)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        SeaStateTable::from_toml_str(&text).map_err(|e| match e {
            Error::Config(message) => Error::Format { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn lookup(&self, level: SeaStateLevel) -> Result<&SeaState> {
        self.states
            .iter()
            .find(|s| s.level == level)
            .ok_or_else(|| Error::UnknownSeaState(level.to_string()))
    }

    pub fn states(&self) -> &[SeaState] {
        &self.states
    }
}

/// Deterministic sine-wave sea surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveField {
    /// Crest elevation above mean sea level, meters.
    pub amplitude: f64,
    pub wavelength: f64,
    pub period: f64,
    pub source: Point2<f64>,
}

impl WaveField {
    pub fn new(amplitude: f64, wavelength: f64, period: f64, source: Point2<f64>) -> Result<Self> {
        if !(amplitude >= 0.0) || !(wavelength > 0.0) || !(period > 0.0) {
            return Err(Error::invalid(format!(
                "wave needs a >= 0, l > 0, T > 0 (got a={amplitude}, l={wavelength}, T={period})"
            )));
        }
        Ok(WaveField { amplitude, wavelength, period, source })
    }

    pub fn is_flat(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// Deep-water dispersion: `l = g T^2 / (2 pi)`.
pub fn deep_water_wavelength(period: f64) -> f64 {
    GRAVITY * period * period / TAU
}

/// Wave parameters for a table entry: `a` is half the mean crest-to-trough
/// height, `T` the mean period, `l` from deep-water dispersion.
pub fn wave_from_sea_state(state: &SeaState, source: Point2<f64>) -> Result<WaveField> {
    let period = state
        .period_mean
        .ok_or_else(|| Error::MissingWavePeriod(state.level.to_string()))?;
    WaveField::new(state.height_mean / 2.0, deep_water_wavelength(period), period, source)
}

/// A buoy carrying an antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloatingNode {
    pub position: Point2<f64>,
    /// Antenna height above the buoy's waterline, meters.
    pub mast_height: f64,
    /// Extra wave phase seen by this buoy, radians. Zero places the buoy
    /// exactly on the sine pattern; the LoS sampler randomizes it.
    #[serde(default)]
    pub phase_offset: f64,
}

impl FloatingNode {
    pub fn new(position: Point2<f64>, mast_height: f64) -> Result<Self> {
        if !(mast_height > 0.0) {
            return Err(Error::invalid(format!("mast height must be positive, got {mast_height}")));
        }
        Ok(FloatingNode { position, mast_height, phase_offset: 0.0 })
    }

    pub fn at(x: f64, y: f64, mast_height: f64) -> Result<Self> {
        FloatingNode::new(Point2::new(x, y), mast_height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeaveDirection {
    Upwards,
    Downwards,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkState {
    #[serde(rename = "LoS")]
    Los,
    #[serde(rename = "NLoS")]
    Nlos,
}

impl LinkState {
    pub fn is_los(self) -> bool {
        self == LinkState::Los
    }
}

fn wave_phase(node: &FloatingNode, wave: &WaveField, t: f64) -> f64 {
    let d = (node.position - wave.source).norm();
    TAU * d.rem_euclid(wave.wavelength) / wave.wavelength
        + TAU * t.rem_euclid(wave.period) / wave.period
        + node.phase_offset
}

/// Antenna height above mean sea level at time `t`.
pub fn antenna_height(node: &FloatingNode, wave: &WaveField, t: f64) -> f64 {
    wave.amplitude * wave_phase(node, wave, t).sin() + node.mast_height
}

/// Vertical wave displacement of the buoy, `antenna_height - mast_height`.
pub fn heave_displacement(node: &FloatingNode, wave: &WaveField, t: f64) -> f64 {
    wave.amplitude * wave_phase(node, wave, t).sin()
}

/// Direction of vertical motion; a stationary instant counts as upwards.
pub fn heave_direction(node: &FloatingNode, wave: &WaveField, t: f64) -> HeaveDirection {
    if wave_phase(node, wave, t).cos() >= 0.0 {
        HeaveDirection::Upwards
    } else {
        HeaveDirection::Downwards
    }
}

/// Distance from the buoy to its closest wave crest, measured along the
/// source-to-buoy ray. Always in `[0, l]`.
pub fn peak_offset(node: &FloatingNode, wave: &WaveField, t: f64) -> Result<f64> {
    if wave.is_flat() {
        return Err(Error::FlatSea);
    }
    let a = wave.amplitude;
    let delta = heave_displacement(node, wave, t);
    let frac = ((a - delta) / (4.0 * a)).clamp(0.0, 0.5);
    let shift = match heave_direction(node, wave, t) {
        HeaveDirection::Downwards => wave.wavelength * (1.0 - frac),
        HeaveDirection::Upwards => wave.wavelength * frac,
    };
    Ok(shift)
}

/// Location of the wave crest closest to the buoy.
pub fn nearest_peak(node: &FloatingNode, wave: &WaveField, t: f64) -> Result<Point2<f64>> {
    let shift = peak_offset(node, wave, t)?;
    let ray = node.position - wave.source;
    let norm = ray.norm();
    let dir = if norm > 0.0 { ray / norm } else { Vector2::x() };
    Ok(node.position + dir * shift)
}

/// Elevation angle from Tx to Rx; the reverse direction is its negative.
pub fn elevation_angle(tx_h: f64, rx_h: f64, horizontal_dist: f64) -> Result<f64> {
    if !(horizontal_dist > 0.0) {
        return Err(Error::CoLocated);
    }
    Ok(((rx_h - tx_h) / horizontal_dist).atan())
}

/// Angle above horizontal of the line from a crest of height `a` to the peer
/// antenna. Negative when the peer sits below the crest.
pub fn blocking_angle(peer_h: f64, a: f64, dist_peer_to_peak: f64) -> Result<f64> {
    if !(dist_peer_to_peak > 0.0) {
        return Err(Error::CoLocated);
    }
    Ok(((peer_h - a) / dist_peer_to_peak).atan())
}

/// LoS iff neither end's closest crest rises above the Tx-Rx line.
///
/// A crest only counts when it lies between the buoys: its projection onto
/// the link falls strictly inside the segment and it is closer to the far
/// end than the near end is. A crest behind a buoy cannot cut the path, and
/// testing it anyway makes LoS less likely as a mast grows taller.
pub fn los_state(
    tx: &FloatingNode,
    rx: &FloatingNode,
    wave: &WaveField,
    t: f64,
) -> Result<LinkState> {
    let link = rx.position - tx.position;
    let d = link.norm();
    if !(d > 0.0) {
        return Err(Error::CoLocated);
    }
    if wave.is_flat() {
        return Ok(LinkState::Los);
    }
    let a = wave.amplitude;
    let h_t = antenna_height(tx, wave, t);
    let h_r = antenna_height(rx, wave, t);
    let w_t = nearest_peak(tx, wave, t)?;
    let w_r = nearest_peak(rx, wave, t)?;
    let between = |w: Point2<f64>, far: Point2<f64>| {
        let s = (w - tx.position).dot(&link) / (d * d);
        s > 0.0 && s < 1.0 && (far - w).norm() < d
    };

    let phi_t = elevation_angle(h_t, h_r, d)?;
    let phi_r = -phi_t;
    let tx_clear = !between(w_t, rx.position) || phi_t <= blocking_angle(h_r, a, (rx.position - w_t).norm())?;
    let rx_clear = !between(w_r, tx.position) || phi_r <= blocking_angle(h_t, a, (tx.position - w_r).norm())?;

    if tx_clear && rx_clear {
        Ok(LinkState::Los)
    } else {
        Ok(LinkState::Nlos)
    }
}

/// Fraction of sampled instants with a LoS direct link. Each sample draws a
/// time uniformly over one wave period and an independent uniform wave phase
/// for each buoy. The same seed yields the same sample set for any mast
/// heights, so sweeps over `rx.mast_height` are paired.
pub fn los_probability_in(
    wave: &WaveField,
    tx: &FloatingNode,
    rx: &FloatingNode,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::invalid("los_probability needs at least one sample"));
    }
    if wave.is_flat() {
        return Ok(1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let t = rng.random::<f64>() * wave.period;
        let mut tx_s = *tx;
        let mut rx_s = *rx;
        tx_s.phase_offset = tx.phase_offset + rng.random::<f64>() * TAU;
        rx_s.phase_offset = rx.phase_offset + rng.random::<f64>() * TAU;
        if los_state(&tx_s, &rx_s, wave, t)?.is_los() {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

/// [`los_probability_in`] for a table sea state with the default wave source.
pub fn los_probability(
    state: &SeaState,
    tx: &FloatingNode,
    rx: &FloatingNode,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let wave = wave_from_sea_state(state, DEFAULT_WAVE_SOURCE)?;
    los_probability_in(&wave, tx, rx, samples, seed)
}
