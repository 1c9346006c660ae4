//! Two-stage least-squares channel estimation.
//!
//! Stage one transmits pilots under reflections `q0` and `q1 = -q0`; summing
//! the two receptions cancels every RIS path and leaves the direct channels.
//! Stage two sweeps `B` further reflections and solves for the cascaded
//! channels after subtracting the direct-path estimate.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, complex_gaussian, solve_hpd, CMatrix, CVector, C64};
use crate::ris_system::NetworkSnapshot;

/// Orthogonal pilot sequences, one column per IoT.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    /// `T x I`; column `i` is `s_i^H`.
    pub s: CMatrix,
    pub powers: Vec<f64>,
}

impl PilotBook {
    pub fn len(&self) -> usize {
        self.s.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.s.nrows() == 0
    }

    pub fn iots(&self) -> usize {
        self.s.ncols()
    }
}

/// Reflections used during the pilot phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSchedule {
    pub q0: CVector,
    pub q1: CVector,
    /// `N x B`; column `b` is `q_b^H` for sub-frame `b`.
    pub qtilde: CMatrix,
}

impl ReflectionSchedule {
    pub fn subframes(&self) -> usize {
        self.qtilde.ncols()
    }

    /// Reflection applied in scheduled sub-frame `b`.
    pub fn reflection(&self, b: usize) -> CVector {
        self.qtilde.column(b).map(|z| z.conj())
    }
}

/// Estimated channels in the same layout as [`NetworkSnapshot`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub hd: CMatrix,
    pub g: Vec<CMatrix>,
}

impl ChannelEstimate {
    /// Snapshot that carries the estimates in place of the true channels.
    pub fn to_snapshot(&self, truth: &NetworkSnapshot) -> Result<NetworkSnapshot> {
        NetworkSnapshot::new(self.hd.clone(), self.g.clone(), truth.p_t.clone(), truth.sigma2, truth.beta)
    }
}

/// Pilot symbol slots consumed by one estimation round.
pub fn pilot_overhead_slots(subframes: usize, pilot_length: usize) -> usize {
    (subframes + 2) * pilot_length
}

/// Columns of the `T x T` DFT basis scaled so `s_i s_i^H = P_i T`.
pub fn make_orthogonal_pilots(iots: usize, pilot_length: usize, powers: &[f64]) -> Result<PilotBook> {
    if powers.len() != iots {
        return Err(Error::dims(format!("{} powers for {iots} IoTs", powers.len())));
    }
    if pilot_length < iots {
        return Err(Error::PilotTooShort { pilot_length, iots });
    }
    if let Some(p) = powers.iter().find(|&&p| !(p > 0.0)) {
        return Err(Error::invalid(format!("pilot power must be positive, got {p}")));
    }
    let t = pilot_length as f64;
    let s = CMatrix::from_fn(pilot_length, iots, |k, i| {
        cis(-TAU * (k * i % pilot_length) as f64 / t) * powers[i].sqrt()
    });
    Ok(PilotBook { s, powers: powers.to_vec() })
}

/// `q0` is all ones. The `B` scheduled reflections are the first `N` rows of
/// the `B x B` DFT matrix, so `Q Q^H = B I`; `seed` shuffles their order.
pub fn make_reflection_schedule(n: usize, subframes: usize, seed: u64) -> Result<ReflectionSchedule> {
    if n == 0 {
        return Err(Error::invalid("RIS needs at least one element"));
    }
    if subframes < n {
        return Err(Error::TooFewSubframes { subframes, elements: n });
    }
    let q0 = CVector::from_element(n, C64::new(1.0, 0.0));
    let q1 = -&q0;
    let mut order: Vec<usize> = (0..subframes).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let b = subframes as f64;
    let qtilde = CMatrix::from_fn(n, subframes, |row, col| cis(TAU * (row * order[col] % subframes) as f64 / b));
    Ok(ReflectionSchedule { q0, q1, qtilde })
}

fn check_pilots(snap: &NetworkSnapshot, pilots: &PilotBook) -> Result<()> {
    if pilots.iots() != snap.iots() {
        return Err(Error::dims(format!("{} pilots for {} IoTs", pilots.iots(), snap.iots())));
    }
    Ok(())
}

/// Pilot reception with the snapshot's own noise power.
pub fn simulate_pilot_rx<R: Rng + ?Sized>(
    snap: &NetworkSnapshot,
    q: &CVector,
    pilots: &PilotBook,
    rng: &mut R,
) -> Result<CMatrix> {
    simulate_pilot_rx_with_noise(snap, q, pilots, snap.sigma2, rng)
}

/// `Y = sum_i s_i^H (h_i^d + q G_i) + Z` with noise variance `sigma2`
/// (zero gives a noiseless reception and draws nothing from `rng`).
pub fn simulate_pilot_rx_with_noise<R: Rng + ?Sized>(
    snap: &NetworkSnapshot,
    q: &CVector,
    pilots: &PilotBook,
    sigma2: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    check_pilots(snap, pilots)?;
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    let m = snap.m();
    // I x M matrix whose row i is the combined channel of IoT i
    let mut c = CMatrix::zeros(snap.iots(), m);
    for i in 0..snap.iots() {
        let row = crate::ris_system::combined_channel(&snap.direct(i), q, &snap.g[i])?;
        c.set_row(i, &row.transpose());
    }
    let mut y = &pilots.s * c;
    if sigma2 > 0.0 {
        for z in y.iter_mut() {
            *z += complex_gaussian(rng, sigma2);
        }
    }
    Ok(y)
}

/// `H_d^H = (S^H S)^{-1} S^H (Y0 + Y1) / 2`, returned as the `M x I` matrix.
pub fn estimate_direct(y0: &CMatrix, y1: &CMatrix, pilots: &PilotBook) -> Result<CMatrix> {
    if y0.shape() != y1.shape() || y0.nrows() != pilots.len() {
        return Err(Error::dims(format!(
            "receptions {:?} and {:?} for pilot length {}",
            y0.shape(),
            y1.shape(),
            pilots.len()
        )));
    }
    let gram = pilots.s.adjoint() * &pilots.s;
    let rhs = pilots.s.adjoint() * (y0 + y1) * C64::new(0.5, 0.0);
    Ok(solve_hpd(&gram, &rhs, "pilot Gram matrix")?.adjoint())
}

/// Cascaded LS: per IoT, project each scheduled reception onto the pilot,
/// normalize by `s_i s_i^H`, stack the `B` results into `U_i` (M x B) and
/// solve `G_i^H = U_i Q^H (Q Q^H)^{-1}`.
pub fn estimate_cascaded(
    yb: &[CMatrix],
    pilots: &PilotBook,
    hd_hat: &CMatrix,
    sched: &ReflectionSchedule,
) -> Result<Vec<CMatrix>> {
    let b = sched.subframes();
    if yb.len() != b {
        return Err(Error::dims(format!("{} receptions for {b} sub-frames", yb.len())));
    }
    if hd_hat.ncols() != pilots.iots() {
        return Err(Error::dims("direct estimate and pilot book disagree on IoT count"));
    }
    let m = hd_hat.nrows();
    let direct_part = &pilots.s * hd_hat.adjoint();
    let residuals = yb
        .iter()
        .map(|y| {
            if y.shape() != (pilots.len(), m) {
                return Err(Error::dims(format!("reception {:?}, expected ({}, {m})", y.shape(), pilots.len())));
            }
            Ok(y - &direct_part)
        })
        .collect::<Result<Vec<_>>>()?;
    let q = &sched.qtilde;
    let qqh = q * q.adjoint();
    // (Q Q^H)^{-1} Q, so that G_i = ((Q Q^H)^{-1} Q) U_i^H
    let projector = solve_hpd(&qqh, q, "reflection schedule")?;
    (0..pilots.iots())
        .map(|i| {
            let s_i = pilots.s.column(i);
            let energy = s_i.norm_squared();
            let mut u = CMatrix::zeros(m, b);
            for (col, r) in residuals.iter().enumerate() {
                // u_{i,b} = s_i R / (s_i s_i^H), a 1 x M row; column of U_i is its adjoint
                let row = s_i.adjoint() * r / C64::new(energy, 0.0);
                u.set_column(col, &row.adjoint());
            }
            Ok(&projector * u.adjoint())
        })
        .collect()
}

/// Runs the whole pilot phase (`B + 2` sub-frames) against the true
/// snapshot and returns the LS estimates. `sigma2` of zero makes it
/// noiseless.
pub fn estimate_channels<R: Rng + ?Sized>(
    snap: &NetworkSnapshot,
    pilots: &PilotBook,
    sched: &ReflectionSchedule,
    sigma2: f64,
    rng: &mut R,
) -> Result<ChannelEstimate> {
    if sched.q0.len() != snap.n() {
        return Err(Error::dims(format!("schedule for {} elements, snapshot has {}", sched.q0.len(), snap.n())));
    }
    let y0 = simulate_pilot_rx_with_noise(snap, &sched.q0, pilots, sigma2, rng)?;
    let y1 = simulate_pilot_rx_with_noise(snap, &sched.q1, pilots, sigma2, rng)?;
    let hd = estimate_direct(&y0, &y1, pilots)?;
    let yb = (0..sched.subframes())
        .map(|b| simulate_pilot_rx_with_noise(snap, &sched.reflection(b), pilots, sigma2, rng))
        .collect::<Result<Vec<_>>>()?;
    let g = estimate_cascaded(&yb, pilots, &hd, sched)?;
    Ok(ChannelEstimate { hd, g })
}
