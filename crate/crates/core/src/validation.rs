//! Fast self-checks of model invariants, run by `tidelink validate`.
//!
//! Each check is a small randomized or closed-form experiment. A check that
//! errors counts as failed and carries the error text.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{path_loss_free_space, path_loss_nlos, PathLossParams};
use crate::energy::{available_tx_power, harvested_power, WecParams};
use crate::error::Result;
use crate::estimation::{estimate_channels, make_orthogonal_pilots, make_reflection_schedule};
use crate::harness::{run_coherence_interval, ScenarioConfig};
use crate::linalg::{cis, complex_gaussian, relative_error, CMatrix, CVector, C64};
use crate::optimizer::{brute_force_phases, optimize_phases, snapshot_objective, solve_sdp, OptimizerConfig};
use crate::ris_system::{capacity_from_power, capacity_without_ris, sum_capacity, NetworkSnapshot};
use crate::sea_surface::{antenna_height, los_probability_in, los_state, FloatingNode, WaveField};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Snapshot with i.i.d. unit complex Gaussian channels, unit powers and
/// unit noise.
pub fn random_snapshot<R: Rng + ?Sized>(n: usize, m: usize, iots: usize, rng: &mut R) -> Result<NetworkSnapshot> {
    let hd = CMatrix::from_fn(m, iots, |_, _| complex_gaussian(rng, 1.0));
    let g = (0..iots).map(|_| CMatrix::from_fn(n, m, |_, _| complex_gaussian(rng, 1.0))).collect();
    NetworkSnapshot::new(hd, g, vec![1.0; iots], 1.0, 1.0)
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult { name, passed: false, detail: format!("error: {e}") },
    }
}

fn flat_sea_is_los(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let wave = WaveField::new(0.0, 100.0, 8.0, crate::sea_surface::DEFAULT_WAVE_SOURCE)?;
    let mut ok = true;
    for _ in 0..200 {
        let tx = FloatingNode::at(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), 2.0)?;
        let rx = FloatingNode::at(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), 5.0)?;
        ok &= los_state(&tx, &rx, &wave, rng.random_range(0.0..8.0))?.is_los();
    }
    Ok((ok, "200 random links on a flat sea".into()))
}

fn heave_bounded(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let a = rng.random_range(0.0..10.0);
        let wave = WaveField::new(a, rng.random_range(10.0..500.0), rng.random_range(2.0..20.0), Default::default())?;
        let node = FloatingNode::at(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3), 5.0)?;
        let h = antenna_height(&node, &wave, rng.random_range(0.0..100.0));
        worst = worst.max((h - 5.0).abs() - a);
    }
    Ok((worst <= 1e-12, format!("max excursion beyond amplitude {worst:.3e} m")))
}

fn los_monotone_in_mast() -> Result<(bool, String)> {
    let wave = WaveField::new(2.5, crate::sea_surface::deep_water_wavelength(12.0), 12.0, Default::default())?;
    let tx = FloatingNode::at(0.0, 0.0, 2.0)?;
    let probs = [2.0, 5.0, 10.0, 20.0, 30.0]
        .iter()
        .map(|&h| los_probability_in(&wave, &tx, &FloatingNode::at(300.0, 0.0, h)?, 2000, 3))
        .collect::<Result<Vec<_>>>()?;
    Ok((probs.windows(2).all(|w| w[0] <= w[1]), format!("{probs:?}")))
}

fn nlos_above_free_space() -> Result<(bool, String)> {
    let p = PathLossParams::default();
    let mut min_gap = f64::INFINITY;
    for k in 0..=900 {
        let d = 100.0 + k as f64;
        min_gap = min_gap.min(path_loss_nlos(d, &p, 0.0)? - path_loss_free_space(d, p.carrier_hz));
    }
    Ok((min_gap > 0.0, format!("min NLoS - free-space gap {min_gap:.2} dB over [100, 1000] m")))
}

fn power_budget_capped(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let p = WecParams::default();
    let mut ok = true;
    let mut last = 0.0;
    for k in 0..200 {
        let a = k as f64 * 0.05;
        let pt = available_tx_power(harvested_power(a, rng.random_range(5.0..20.0), &p), &p);
        ok &= (0.0..=p.p_max).contains(&pt);
        let mono = available_tx_power(k as f64, &p);
        ok &= mono >= last;
        last = mono;
    }
    Ok((ok, "0 <= P_t <= P_max and monotone in harvested power".into()))
}

fn noiseless_estimation(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let (n, m, i) = (rng.random_range(1..=16), rng.random_range(1..=4), rng.random_range(1..=4));
        let snap = random_snapshot(n, m, i, rng)?;
        let pilots = make_orthogonal_pilots(i, i, &snap.p_t)?;
        let sched = make_reflection_schedule(n, n, k)?;
        let est = estimate_channels(&snap, &pilots, &sched, 0.0, rng)?;
        worst = worst.max(relative_error(&est.hd, &snap.hd));
        for (a, b) in est.g.iter().zip(&snap.g) {
            worst = worst.max(relative_error(a, b));
        }
    }
    Ok((worst < 1e-9, format!("worst relative error {worst:.2e}")))
}

fn capacity_identity(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let snap = random_snapshot(rng.random_range(1..=8), rng.random_range(1..=4), rng.random_range(1..=4), rng)?;
        let q = CVector::from_fn(snap.n(), |_, _| cis(rng.random_range(0.0..TAU)));
        let direct = sum_capacity(&snap, &q)?;
        let homog = capacity_from_power(&snap, snapshot_objective(&snap)?.evaluate(&q));
        worst = worst.max((direct - homog).abs() / direct.max(1e-300));
    }
    Ok((worst < 1e-9, format!("worst relative mismatch {worst:.2e}")))
}

fn relaxation_bounds_search(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let cfg = OptimizerConfig::default();
    let (mut min_ratio, mut min_slack) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..10 {
        let snap = random_snapshot(rng.random_range(1..=4), rng.random_range(1..=2), rng.random_range(1..=2), rng)?;
        let (_, bf) = brute_force_phases(&snap, 16)?;
        let obj = snapshot_objective(&snap)?;
        let sdp = solve_sdp(&obj, &cfg.sdp)?;
        let bf_obj = (2f64.powf(bf / snap.beta) - 1.0) * snap.sigma2;
        min_slack = min_slack.min(sdp.objective - bf_obj);
        let sol = optimize_phases(&snap, &cfg, rng)?;
        min_ratio = min_ratio.min(sol.capacity / bf);
    }
    Ok((
        min_ratio >= 0.95 && min_slack >= -1e-6,
        format!("min capacity / search {min_ratio:.4}, min Tr(DV) - search objective {min_slack:.2e}"),
    ))
}

fn never_below_baseline(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let cfg = OptimizerConfig::default();
    let mut ok = true;
    for _ in 0..20 {
        let snap = random_snapshot(rng.random_range(1..=12), rng.random_range(1..=4), rng.random_range(1..=4), rng)?;
        let sol = optimize_phases(&snap, &cfg, rng)?;
        let ones = sum_capacity(&snap, &CVector::from_element(snap.n(), C64::new(1.0, 0.0)))?;
        ok &= sol.capacity >= ones * (1.0 - 1e-12);
        // averaging over uniform phases already gives sum ||h||^2 + E||qG||^2
        ok &= sol.capacity >= capacity_without_ris(&snap) * (1.0 - 1e-12);
    }
    Ok((ok, "optimized capacity >= all-ones and >= direct-only on 20 instances".into()))
}

fn interval_reproducible(seed: u64) -> Result<(bool, String)> {
    let mut cfg = ScenarioConfig { seed, ..ScenarioConfig::default() };
    cfg.radio.ris_elements = 16;
    cfg.radio.antennas = 2;
    let level = cfg.sea_states[0];
    let same = (0..3).all(|t| {
        matches!((run_coherence_interval(&cfg, level, t), run_coherence_interval(&cfg, level, t)),
            (Ok(a), Ok(b)) if a == b)
    });
    Ok((same, "3 intervals replayed bit-identically".into()))
}

/// Runs every check with randomness derived from `seed`.
pub fn run_invariant_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check("flat sea never blocks", || flat_sea_is_los(&mut rng)),
        check("antenna height stays within one amplitude of the mast", || heave_bounded(&mut rng)),
        check("LoS probability non-decreasing in Rx mast height", los_monotone_in_mast),
        check("NLoS loss exceeds free-space loss", nlos_above_free_space),
        check("transmit power within budget", || power_budget_capped(&mut rng)),
        check("noiseless estimation is exact", || noiseless_estimation(&mut rng)),
        check("sum capacity matches the homogenized objective", || capacity_identity(&mut rng)),
        check("relaxation dominates 16-level search", || relaxation_bounds_search(&mut rng)),
        check("optimized reflection beats fixed baselines", || never_below_baseline(&mut rng)),
        check("coherence intervals are reproducible", || interval_reproducible(seed)),
    ]
}
