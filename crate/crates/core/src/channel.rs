//! Maritime path loss and complex channel synthesis.
//!
//! LoS links follow the two-ray model up to the break distance `4 h_t h_r / λ`
//! and the three-ray (evaporation duct) model beyond it. NLoS links use the
//! empirical log-distance model. Shadowing is Gaussian in dB.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector, C64};
use crate::ris_system::RisConfig;
use crate::sea_surface::{antenna_height, los_state, FloatingNode, LinkState, WaveField};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Floor applied to the magnitude inside the LoS log (about 240 dB of loss).
pub const NULL_FLOOR: f64 = 1e-12;

/// Smallest antenna height fed to the LoS formulas. A buoy antenna dipping
/// below mean sea level would otherwise make the two-ray geometry undefined.
pub const MIN_PATH_HEIGHT: f64 = 0.1;

/// Receive arrays are uniform linear arrays laid out along this axis.
pub const RX_ARRAY_AXIS: Vector2<f64> = Vector2::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub carrier_hz: f64,
    pub wavelength: f64,
    /// Effective evaporation-duct height, meters.
    pub duct_height: f64,
    /// NLoS intercept `K`, dB.
    pub nlos_intercept_db: f64,
    /// NLoS path-loss exponent `alpha`.
    pub nlos_exponent: f64,
    /// NLoS reference distance `d_0`, meters.
    pub reference_distance: f64,
    pub sigma_los_db: f64,
    pub sigma_nlos_db: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        PathLossParams::new(5.8e9, 50.0, 130.6, 2.1, 1.0, 3.5, 5.1, 0.0, 5.0)
            .expect("default path-loss parameters are valid")
    }
}

impl PathLossParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        carrier_hz: f64,
        duct_height: f64,
        nlos_intercept_db: f64,
        nlos_exponent: f64,
        reference_distance: f64,
        sigma_los_db: f64,
        sigma_nlos_db: f64,
        tx_gain_db: f64,
        rx_gain_db: f64,
    ) -> Result<Self> {
        let p = PathLossParams {
            carrier_hz,
            wavelength: SPEED_OF_LIGHT / carrier_hz,
            duct_height,
            nlos_intercept_db,
            nlos_exponent,
            reference_distance,
            sigma_los_db,
            sigma_nlos_db,
            tx_gain_db,
            rx_gain_db,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        let expected = SPEED_OF_LIGHT / self.carrier_hz;
        if ((self.wavelength - expected) / expected).abs() > 1e-9 {
            return Err(Error::invalid("wavelength does not match c / f_c"));
        }
        if !(self.duct_height > 0.0) || !(self.reference_distance > 0.0) {
            return Err(Error::invalid("duct height and reference distance must be positive"));
        }
        if !(self.sigma_los_db >= 0.0) || !(self.sigma_nlos_db >= 0.0) {
            return Err(Error::invalid("shadowing standard deviations must be non-negative"));
        }
        Ok(())
    }

    /// Distance at which the LoS model switches from two to three rays.
    pub fn break_distance(&self, h_t: f64, h_r: f64) -> f64 {
        4.0 * h_t * h_r / self.wavelength
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub h_t: f64,
    pub h_r: f64,
    /// Horizontal Tx-Rx distance, meters.
    pub d: f64,
    pub los: LinkState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexGain {
    pub amplitude: f64,
    /// Radians in `[0, 2 pi)`.
    pub phase: f64,
}

impl ComplexGain {
    pub fn to_complex(self) -> C64 {
        C64::from_polar(self.amplitude, self.phase)
    }
}

/// A path-loss value in dB; `clamped` marks an evaluation that hit a
/// multipath null and was floored at [`NULL_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub db: f64,
    pub clamped: bool,
}

pub fn path_loss_los(geom: &LinkGeometry, p: &PathLossParams, xi: f64) -> Result<PathLoss> {
    let LinkGeometry { h_t, h_r, d, .. } = *geom;
    if !(d > 0.0) || !(h_t > 0.0) || !(h_r > 0.0) {
        return Err(Error::invalid(format!(
            "LoS path loss needs d, h_t, h_r > 0 (got d={d}, h_t={h_t}, h_r={h_r})"
        )));
    }
    let lambda = p.wavelength;
    let spread = lambda / (TAU * d);
    let two_ray = (TAU * h_t * h_r / (lambda * d)).sin();
    let factor = if d <= p.break_distance(h_t, h_r) {
        two_ray
    } else {
        let duct = (TAU * (p.duct_height - h_t) * (p.duct_height - h_r) / (lambda * d)).sin();
        1.0 + 2.0 * two_ray * duct
    };
    let magnitude = (spread * factor).abs();
    let clamped = !(magnitude >= NULL_FLOOR);
    let magnitude = if clamped { NULL_FLOOR } else { magnitude };
    Ok(PathLoss { db: -20.0 * magnitude.log10() + xi, clamped })
}

pub fn path_loss_nlos(d: f64, p: &PathLossParams, xi: f64) -> Result<f64> {
    if !(d >= p.reference_distance) {
        return Err(Error::BelowReferenceDistance { distance: d, reference: p.reference_distance });
    }
    Ok(p.nlos_intercept_db + 10.0 * p.nlos_exponent * (d / p.reference_distance).log10() + xi)
}

/// Free-space loss in dB for `d > 0` meters at `f_c > 0` Hz.
pub fn path_loss_free_space(d: f64, f_c: f64) -> f64 {
    -147.55 + 20.0 * f_c.log10() + 20.0 * d.log10()
}

pub fn received_power(p_t_db: f64, loss_db: f64, p: &PathLossParams) -> f64 {
    p_t_db + p.tx_gain_db - loss_db + p.rx_gain_db
}

pub fn draw_shadowing<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("sigma is finite and non-negative").sample(rng)
}

fn amplitude_from_db(gain_db: f64) -> f64 {
    10f64.powf(gain_db / 20.0)
}

/// [`link_gain`] that also reports the loss it drew.
pub fn link_gain_with_loss<R: Rng + ?Sized>(
    geom: &LinkGeometry,
    p: &PathLossParams,
    rng: &mut R,
) -> Result<(ComplexGain, PathLoss)> {
    let (loss, phase) = match geom.los {
        LinkState::Los => {
            let xi = draw_shadowing(p.sigma_los_db, rng);
            let loss = path_loss_los(geom, p, xi)?;
            (loss, (-TAU * geom.d / p.wavelength).rem_euclid(TAU))
        }
        LinkState::Nlos => {
            let xi = draw_shadowing(p.sigma_nlos_db, rng);
            let db = path_loss_nlos(geom.d, p, xi)?;
            (PathLoss { db, clamped: false }, rng.random::<f64>() * TAU)
        }
    };
    let amplitude = amplitude_from_db(p.tx_gain_db - loss.db + p.rx_gain_db);
    Ok((ComplexGain { amplitude, phase }, loss))
}

/// Complex field coefficient of one link with a fresh shadowing draw. LoS
/// phase is the propagation delay; NLoS phase is uniform.
pub fn link_gain<R: Rng + ?Sized>(
    geom: &LinkGeometry,
    p: &PathLossParams,
    rng: &mut R,
) -> Result<ComplexGain> {
    link_gain_with_loss(geom, p, rng).map(|(g, _)| g)
}

/// Half-wavelength ULA response towards horizontal unit direction `u`.
fn ula_steering(m: usize, u: &Vector2<f64>) -> CVector {
    let cos_angle = u.dot(&RX_ARRAY_AXIS);
    CVector::from_fn(m, |k, _| cis(PI * k as f64 * cos_angle))
}

fn horizontal_unit(from: &nalgebra::Point2<f64>, to: &nalgebra::Point2<f64>) -> Vector2<f64> {
    let v = to - from;
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        Vector2::x()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectChannel {
    /// `h^d`, one entry per receive antenna.
    pub h: CVector,
    pub state: LinkState,
    pub loss: PathLoss,
}

/// Direct IoT-to-center-buoy channel at time `t`. All antennas share one
/// amplitude; the per-antenna phase is the ULA steering towards the IoT.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_direct_channel<R: Rng + ?Sized>(
    iot: &FloatingNode,
    rx: &FloatingNode,
    wave: &WaveField,
    t: f64,
    m: usize,
    p: &PathLossParams,
    rng: &mut R,
) -> Result<DirectChannel> {
    if m == 0 {
        return Err(Error::invalid("receiver needs at least one antenna"));
    }
    let state = los_state(iot, rx, wave, t)?;
    let d = (rx.position - iot.position).norm();
    let geom = match state {
        LinkState::Los => LinkGeometry {
            h_t: antenna_height(iot, wave, t).max(MIN_PATH_HEIGHT),
            h_r: antenna_height(rx, wave, t).max(MIN_PATH_HEIGHT),
            d,
            los: state,
        },
        LinkState::Nlos => LinkGeometry {
            h_t: antenna_height(iot, wave, t),
            h_r: antenna_height(rx, wave, t),
            d: d.max(p.reference_distance),
            los: state,
        },
    };
    let (gain, loss) = link_gain_with_loss(&geom, p, rng)?;
    let steer = ula_steering(m, &horizontal_unit(&rx.position, &iot.position));
    Ok(DirectChannel { h: steer * gain.to_complex(), state, loss })
}

fn plane_wave_phases(ris: &RisConfig, far_end: &Point3<f64>, wavelength: f64) -> (f64, Vec<f64>) {
    let c = ris.center();
    let r = far_end - c;
    let dist = r.norm();
    let u: Vector3<f64> = if dist > 0.0 { r / dist } else { Vector3::zeros() };
    let k = TAU / wavelength;
    let phases = ris
        .element_positions
        .iter()
        .map(|e| -k * (dist - u.dot(&(e - c))))
        .collect();
    (dist, phases)
}

/// IoT-to-RIS vector `h^r` (length N). Always LoS; the Tx antenna gain is
/// booked on this segment.
pub fn ris_incident_channel<R: Rng + ?Sized>(
    iot: &FloatingNode,
    ris: &RisConfig,
    wave: &WaveField,
    t: f64,
    p: &PathLossParams,
    rng: &mut R,
) -> Result<(CVector, PathLoss)> {
    let c = ris.center();
    let h_t = antenna_height(iot, wave, t).max(MIN_PATH_HEIGHT);
    let d = (iot.position - nalgebra::Point2::new(c.x, c.y)).norm();
    let geom = LinkGeometry { h_t, h_r: c.z, d, los: LinkState::Los };
    let loss = path_loss_los(&geom, p, draw_shadowing(p.sigma_los_db, rng))?;
    let amp = amplitude_from_db(p.tx_gain_db - loss.db);
    let antenna = Point3::new(iot.position.x, iot.position.y, h_t);
    let (_, phases) = plane_wave_phases(ris, &antenna, p.wavelength);
    Ok((CVector::from_iterator(phases.len(), phases.iter().map(|&ph| C64::from_polar(amp, ph))), loss))
}

/// RIS-to-receiver matrix `F` (N x M). Always LoS; carries the Rx antenna gain
/// and the receive-array steering towards the RIS.
pub fn ris_reflected_channel<R: Rng + ?Sized>(
    ris: &RisConfig,
    rx: &FloatingNode,
    wave: &WaveField,
    t: f64,
    m: usize,
    p: &PathLossParams,
    rng: &mut R,
) -> Result<(CMatrix, PathLoss)> {
    if m == 0 {
        return Err(Error::invalid("receiver needs at least one antenna"));
    }
    let c = ris.center();
    let c2 = nalgebra::Point2::new(c.x, c.y);
    let h_r = antenna_height(rx, wave, t).max(MIN_PATH_HEIGHT);
    let d = (rx.position - c2).norm();
    let geom = LinkGeometry { h_t: c.z, h_r, d, los: LinkState::Los };
    let loss = path_loss_los(&geom, p, draw_shadowing(p.sigma_los_db, rng))?;
    let amp = amplitude_from_db(p.rx_gain_db - loss.db);
    let antenna = Point3::new(rx.position.x, rx.position.y, h_r);
    let (_, phases) = plane_wave_phases(ris, &antenna, p.wavelength);
    let steer = ula_steering(m, &horizontal_unit(&rx.position, &c2));
    let f = CMatrix::from_fn(phases.len(), m, |n, k| C64::from_polar(amp, phases[n]) * steer[k]);
    Ok((f, loss))
}

/// Both RIS segments for one IoT: `(h^r, F)`.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_ris_channels<R: Rng + ?Sized>(
    iot: &FloatingNode,
    ris: &RisConfig,
    rx: &FloatingNode,
    wave: &WaveField,
    t: f64,
    m: usize,
    p: &PathLossParams,
    rng: &mut R,
) -> Result<(CVector, CMatrix)> {
    if ris.n() == 0 {
        return Err(Error::invalid("RIS needs at least one element"));
    }
    let (h_r, _) = ris_incident_channel(iot, ris, wave, t, p, rng)?;
    let (f, _) = ris_reflected_channel(ris, rx, wave, t, m, p, rng)?;
    Ok((h_r, f))
}

/// Cascaded channel `G = diag(h_r) F`.
pub fn cascade(h_r: &CVector, f: &CMatrix) -> Result<CMatrix> {
    if h_r.len() != f.nrows() {
        return Err(Error::dims(format!(
            "h_r has {} entries but F has {} rows",
            h_r.len(),
            f.nrows()
        )));
    }
    let mut g = f.clone();
    for (n, mut row) in g.row_iter_mut().enumerate() {
        row *= h_r[n];
    }
    Ok(g)
}
