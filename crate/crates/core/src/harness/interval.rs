//! One coherence interval of the uplink, end to end.

use std::f64::consts::TAU;

use nalgebra::Point2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::{cascade, ris_incident_channel, ris_reflected_channel, synthesize_direct_channel};
use crate::energy::{available_tx_power, harvested_power};
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_channels, make_orthogonal_pilots, make_reflection_schedule, pilot_overhead_slots, ChannelEstimate,
};
use crate::linalg::{relative_error, CMatrix, CVector, C64};
use crate::optimizer::optimize_phases;
use crate::ris_system::{capacity_without_ris, sum_capacity, NetworkSnapshot};
use crate::sea_surface::{wave_from_sea_state, FloatingNode, SeaStateLevel};

use super::config::ScenarioConfig;

/// Independent random streams of a trial. Streams are keyed by trial index
/// and purpose only, so every swept value sees the same sea, deployment and
/// fading for a given trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
enum Purpose {
    Deployment = 1,
    Channel = 2,
    Pilot = 3,
    Schedule = 4,
    Randomization = 5,
}

const MAX_IOTS: usize = 0xffff;

fn stream(seed: u64, trial: u64, purpose: Purpose, sub: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 24) | ((purpose as u64) << 16) | sub as u64);
    rng
}

/// Poisson number of buoys, uniform on the disk of `radius` around `center`,
/// each with a 2 m mast.
pub fn deploy_iots<R: Rng + ?Sized>(
    mean_count: f64,
    radius: f64,
    center: Point2<f64>,
    rng: &mut R,
) -> Result<Vec<FloatingNode>> {
    const IOT_MAST_HEIGHT: f64 = 2.0;
    deploy_iots_with_mast(mean_count, radius, center, IOT_MAST_HEIGHT, rng)
}

pub fn deploy_iots_with_mast<R: Rng + ?Sized>(
    mean_count: f64,
    radius: f64,
    center: Point2<f64>,
    mast_height: f64,
    rng: &mut R,
) -> Result<Vec<FloatingNode>> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("deployment radius must be positive, got {radius}")));
    }
    let poisson = Poisson::new(mean_count)
        .map_err(|_| Error::invalid(format!("mean IoT count must be positive, got {mean_count}")))?;
    let count = poisson.sample(rng) as usize;
    (0..count)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = rng.random::<f64>() * TAU;
            FloatingNode::new(center + nalgebra::Vector2::new(r * theta.cos(), r * theta.sin()), mast_height)
        })
        .collect()
}

/// Everything recorded about one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub interval: u64,
    pub sea_state: SeaStateLevel,
    pub iot_positions: Vec<[f64; 2]>,
    pub tx_powers: Vec<f64>,
    /// Direct-link LoS flag per IoT.
    pub los: Vec<bool>,
    pub harvested_power: f64,
    /// Relative Frobenius error of the direct-channel estimate.
    pub hd_error: Option<f64>,
    /// Relative Frobenius error of the stacked cascaded estimates.
    pub g_error: Option<f64>,
    pub capacity_with_ris: f64,
    pub capacity_without_ris: f64,
    pub overhead_factor: f64,
    pub rate_with_ris: f64,
    pub rate_without_ris: f64,
    pub sdp_iterations: usize,
    pub sdp_converged: bool,
    pub fallback: bool,
    /// Set when a step failed and the record holds degraded values.
    pub flag: Option<String>,
}

impl TrialRecord {
    /// Fraction of IoTs with a LoS direct link; `None` without IoTs.
    pub fn los_fraction(&self) -> Option<f64> {
        if self.los.is_empty() {
            None
        } else {
            Some(self.los.iter().filter(|&&l| l).count() as f64 / self.los.len() as f64)
        }
    }

    pub fn mean_tx_power(&self) -> Option<f64> {
        if self.tx_powers.is_empty() {
            None
        } else {
            Some(self.tx_powers.iter().sum::<f64>() / self.tx_powers.len() as f64)
        }
    }
}

fn stacked_error(est: &ChannelEstimate, truth: &NetworkSnapshot) -> f64 {
    let (num, den) = est.g.iter().zip(&truth.g).fold((0.0, 0.0), |(n, d), (a, b)| {
        (n + (a - b).norm_squared(), d + b.norm_squared())
    });
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Simulates interval `interval_idx` at sea state `level`: draws the sea
/// and the deployment, synthesizes the true channels, runs the pilot phase,
/// optimizes on the estimates and scores the result on the true channels.
pub fn run_coherence_interval(cfg: &ScenarioConfig, level: SeaStateLevel, interval_idx: u64) -> Result<TrialRecord> {
    let geo = &cfg.geometry;
    let radio = &cfg.radio;
    let p = &radio.path_loss;
    let wave = wave_from_sea_state(cfg.sea_state_table.lookup(level)?, geo.wave_source)?;

    let mut dep = stream(cfg.seed, interval_idx, Purpose::Deployment, 0);
    let mut iots = deploy_iots_with_mast(geo.mean_iots, geo.deployment_radius, geo.turbine, geo.iot_mast_height, &mut dep)?;
    if iots.len() > MAX_IOTS {
        return Err(Error::invalid(format!("{} IoTs exceed the supported {MAX_IOTS}", iots.len())));
    }
    let t = dep.random::<f64>() * wave.period;
    let mut rx = geo.receiver()?;
    rx.phase_offset = dep.random::<f64>() * TAU;
    for iot in &mut iots {
        iot.phase_offset = dep.random::<f64>() * TAU;
    }

    let p_e = harvested_power(wave.amplitude, wave.period, &cfg.energy);
    let p_t = available_tx_power(p_e, &cfg.energy);
    let mut record = TrialRecord {
        interval: interval_idx,
        sea_state: level,
        iot_positions: iots.iter().map(|n| [n.position.x, n.position.y]).collect(),
        tx_powers: vec![p_t; iots.len()],
        los: Vec::with_capacity(iots.len()),
        harvested_power: p_e,
        hd_error: None,
        g_error: None,
        capacity_with_ris: 0.0,
        capacity_without_ris: 0.0,
        overhead_factor: 1.0,
        rate_with_ris: 0.0,
        rate_without_ris: 0.0,
        sdp_iterations: 0,
        sdp_converged: true,
        fallback: false,
        flag: None,
    };
    // LoS flags are recorded even for silent buoys
    let m = radio.antennas;
    let n = radio.ris_elements;
    let ris = geo.ris(n, p.wavelength)?;
    let (f, _) = ris_reflected_channel(&ris, &rx, &wave, t, m, p, &mut stream(cfg.seed, interval_idx, Purpose::Channel, 0))?;
    let mut hd = CMatrix::zeros(m, iots.len());
    let mut g = Vec::with_capacity(iots.len());
    for (i, iot) in iots.iter().enumerate() {
        let mut rng = stream(cfg.seed, interval_idx, Purpose::Channel, i + 1);
        let direct = synthesize_direct_channel(iot, &rx, &wave, t, m, p, &mut rng)?;
        record.los.push(direct.state.is_los());
        hd.set_column(i, &direct.h.map(|z| z.conj()));
        let (h_r, _) = ris_incident_channel(iot, &ris, &wave, t, p, &mut rng)?;
        g.push(cascade(&h_r, &f)?);
    }
    if iots.is_empty() || p_t <= 0.0 {
        return Ok(record);
    }

    let truth = NetworkSnapshot::new(hd, g, record.tx_powers.clone(), radio.sigma2, radio.beta)?;
    let active = truth.iots();
    // T >= I is required for orthogonal pilots; a configured T below the
    // active count is raised to it
    let pilot_length = cfg.estimation.pilot_length.unwrap_or(active).max(active);
    let subframes = cfg.subframes();
    let slots = pilot_overhead_slots(subframes, pilot_length) as f64;
    record.overhead_factor = (1.0 - slots / (radio.beta * cfg.interval)).max(0.0);

    let pilots = make_orthogonal_pilots(active, pilot_length, &truth.p_t)?;
    let sched_seed = stream(cfg.seed, interval_idx, Purpose::Schedule, 0).next_u64();
    let sched = make_reflection_schedule(n, subframes, sched_seed)?;
    let noise = if cfg.estimation.noiseless { 0.0 } else { radio.sigma2 };
    let mut pilot_rng = stream(cfg.seed, interval_idx, Purpose::Pilot, 0);

    let ones = CVector::from_element(n, C64::new(1.0, 0.0));
    let q = match estimate_channels(&truth, &pilots, &sched, noise, &mut pilot_rng) {
        Ok(est) => {
            record.hd_error = Some(relative_error(&est.hd, &truth.hd));
            record.g_error = Some(stacked_error(&est, &truth));
            let est_snap = est.to_snapshot(&truth)?;
            let mut rng = stream(cfg.seed, interval_idx, Purpose::Randomization, 0);
            let sol = optimize_phases(&est_snap, &cfg.optimizer, &mut rng)?;
            if let Some(sdp) = &sol.sdp {
                record.sdp_iterations = sdp.iterations;
                record.sdp_converged = sdp.converged;
            }
            record.fallback = sol.fallback;
            sol.q
        }
        Err(e @ Error::RankDeficient(_)) => {
            record.flag = Some(format!("estimation failed, all-ones reflection used: {e}"));
            ones
        }
        Err(e) => return Err(e),
    };

    record.capacity_with_ris = sum_capacity(&truth, &q)?;
    record.capacity_without_ris = capacity_without_ris(&truth);
    record.rate_with_ris = record.capacity_with_ris * record.overhead_factor;
    record.rate_without_ris = record.capacity_without_ris * record.overhead_factor;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.radio.ris_elements = 16;
        cfg.radio.antennas = 2;
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn deployment_count_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let total: usize = (0..100_000)
            .map(|_| deploy_iots(4.0, 200.0, Point2::origin(), &mut rng).unwrap().len())
            .sum();
        let mean = total as f64 / 1e5;
        assert!((mean - 4.0).abs() / 4.0 < 0.02, "{mean}");
    }

    #[test]
    fn deployment_is_uniform_on_the_disk() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let center = Point2::new(10.0, -5.0);
        let mut radii = Vec::new();
        while radii.len() < 4000 {
            for node in deploy_iots(4.0, 200.0, center, &mut rng).unwrap() {
                let r = (node.position - center).norm();
                assert!(r <= 200.0);
                assert_eq!(node.mast_height, 2.0);
                radii.push(r / 200.0);
            }
        }
        // KS statistic against F(x) = x^2; 1% critical value 1.63 / sqrt(n)
        radii.sort_by(f64::total_cmp);
        let n = radii.len() as f64;
        let ks = radii
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let f = x * x;
                (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / n.sqrt(), "KS {ks}");
    }

    #[test]
    fn deployment_rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(deploy_iots(0.0, 200.0, Point2::origin(), &mut rng).is_err());
        assert!(deploy_iots(4.0, 0.0, Point2::origin(), &mut rng).is_err());
    }

    #[test]
    fn exact_csi_never_loses_to_no_ris() {
        let mut cfg = small_config();
        cfg.estimation.noiseless = true;
        for level in [4u8, 6] {
            for idx in 0..10 {
                let rec = run_coherence_interval(&cfg, SeaStateLevel::Level(level), idx).unwrap();
                assert!(rec.rate_with_ris >= rec.rate_without_ris * (1.0 - 1e-12), "{rec:?}");
                assert!(rec.rate_with_ris <= rec.capacity_with_ris);
            }
        }
    }

    #[test]
    fn calm_sea_is_power_pinned() {
        let cfg = small_config();
        let rec = (0..20)
            .map(|k| run_coherence_interval(&cfg, SeaStateLevel::Level(2), k).unwrap())
            .find(|r| !r.tx_powers.is_empty())
            .unwrap();
        assert!((rec.harvested_power - 0.0369 * 2.0 * 1025.0 * 9.81 * 9.81 / (64.0 * std::f64::consts::PI) * 0.0225 * 7.0).abs() < 1e-9);
        assert!(rec.tx_powers.iter().all(|&p| p < 1.0));
    }

    #[test]
    fn overhead_factor_arithmetic() {
        let mut cfg = ScenarioConfig::default();
        cfg.estimation.pilot_length = Some(4);
        let slots = pilot_overhead_slots(cfg.subframes(), 4) as f64;
        let factor = 1.0 - slots / (cfg.radio.beta * cfg.interval);
        assert!((factor - 0.997104).abs() < 1e-12);
    }

    #[test]
    fn same_interval_is_reproducible() {
        let cfg = small_config();
        let a = run_coherence_interval(&cfg, SeaStateLevel::Level(5), 3).unwrap();
        let b = run_coherence_interval(&cfg, SeaStateLevel::Level(5), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn swept_value_keeps_the_deployment() {
        let cfg = small_config();
        let mut taller = cfg.clone();
        taller.geometry.rx_mast_height = 20.0;
        for idx in 0..5 {
            let a = run_coherence_interval(&cfg, SeaStateLevel::Level(6), idx).unwrap();
            let b = run_coherence_interval(&taller, SeaStateLevel::Level(6), idx).unwrap();
            assert_eq!(a.iot_positions, b.iot_positions);
        }
    }
}
