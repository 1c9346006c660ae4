//! RIS phase optimization by semidefinite relaxation.
//!
//! The received power `sum_i P_i ||h_i^d + q G_i||^2` is homogenized into
//! `v D v^H` with `v = [q, 1]`, relaxed to an SDP over `V = v^H v`, solved with
//! ADMM, and mapped back to unit-modulus phases by Gaussian randomization.

mod randomize;
mod sdp;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use randomize::randomize;
pub use sdp::{solve_sdp, SdpSettings, SdpSolution};

use crate::error::{Error, Result};
use crate::linalg::{cis, quadratic_form, CMatrix, CVector, C64};
use crate::ris_system::{capacity_from_power, matrix_rows, NetworkSnapshot};

/// Upper limit on `levels^N` for [`brute_force_phases`].
pub const BRUTE_FORCE_GUARD: f64 = 1e8;

/// `D` of the homogenized quadratic form, `(N+1) x (N+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedObjective {
    pub d: CMatrix,
}

impl HomogenizedObjective {
    pub fn n(&self) -> usize {
        self.d.nrows().saturating_sub(1)
    }

    /// `v D v^H` at `v = [q, 1]`.
    pub fn evaluate(&self, q: &CVector) -> f64 {
        let n = self.n();
        let mut y = CVector::from_element(n + 1, C64::new(1.0, 0.0));
        for k in 0..n {
            y[k] = q[k].conj();
        }
        quadratic_form(&self.d, &y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub sdp: SdpSettings,
    pub randomization_draws: usize,
    /// When set, every SDP solve writes `D`, `V` and its residuals here.
    pub debug_dump: Option<PathBuf>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { sdp: SdpSettings::default(), randomization_draws: 100, debug_dump: None }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.sdp.validate()?;
        if self.randomization_draws == 0 {
            return Err(Error::invalid("randomization needs at least one draw"));
        }
        Ok(())
    }
}

/// Optimized reflection with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub q: CVector,
    /// Received power `v D v^H` at `q`.
    pub objective: f64,
    /// Sum capacity at `q`, bits/s.
    pub capacity: f64,
    pub sdp: Option<SdpSolution>,
    /// The all-ones reflection beat every randomized candidate.
    pub fallback: bool,
}

/// Assembles `D = [[Σ P G G^H, Σ P G h^H], [Σ P h G^H, Σ P ||h||^2]]`.
#[allow(non_snake_case)]
pub fn build_D(hd: &CMatrix, g: &[CMatrix], p_t: &[f64]) -> Result<HomogenizedObjective> {
    let (m, iots) = hd.shape();
    if g.len() != iots || p_t.len() != iots {
        return Err(Error::dims(format!("{iots} IoTs, {} cascaded channels, {} powers", g.len(), p_t.len())));
    }
    if p_t.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::invalid("transmit powers must be non-negative"));
    }
    let n = g.first().map_or(0, |g| g.nrows());
    let mut d = CMatrix::zeros(n + 1, n + 1);
    for (i, gi) in g.iter().enumerate() {
        if gi.shape() != (n, m) {
            return Err(Error::dims(format!("G_{i} is {:?}, expected ({n}, {m})", gi.shape())));
        }
        let p = C64::new(p_t[i], 0.0);
        // column i of H_d already is h_i^H
        let h_h = hd.column(i);
        let mut tl = d.view_mut((0, 0), (n, n));
        tl.gemm(p, gi, &gi.adjoint(), C64::new(1.0, 0.0));
        let cross = gi * h_h * p;
        for k in 0..n {
            d[(k, n)] += cross[k];
            d[(n, k)] += cross[k].conj();
        }
        d[(n, n)] += p * h_h.norm_squared();
    }
    crate::linalg::hermitize(&mut d);
    Ok(HomogenizedObjective { d })
}

/// Builds `D` for a snapshot.
pub fn snapshot_objective(snap: &NetworkSnapshot) -> Result<HomogenizedObjective> {
    build_D(&snap.hd, &snap.g, &snap.p_t)
}

#[derive(Serialize)]
struct SdpDump {
    d: Vec<Vec<[f64; 2]>>,
    v: Vec<Vec<[f64; 2]>>,
    objective: f64,
    upper_bound: f64,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
    converged: bool,
}

/// Writes `D`, `V` and the solver residuals as JSON.
pub fn dump_sdp(path: &Path, obj: &HomogenizedObjective, sol: &SdpSolution) -> Result<()> {
    let dump = SdpDump {
        d: matrix_rows(&obj.d),
        v: matrix_rows(&sol.v),
        objective: sol.objective,
        upper_bound: sol.upper_bound,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        converged: sol.converged,
    };
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    serde_json::to_writer_pretty(BufWriter::new(file), &dump)
        .map_err(|e| Error::Format { path: path.to_path_buf(), message: e.to_string() })
}

/// Relax, solve, randomize. Never returns less than the all-ones reflection.
pub fn optimize_phases<R: Rng + ?Sized>(
    snap: &NetworkSnapshot,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<PhaseSolution> {
    cfg.validate()?;
    let obj = snapshot_objective(snap)?;
    let n = obj.n();
    let ones = CVector::from_element(n, C64::new(1.0, 0.0));
    let trivial = obj.evaluate(&ones);
    if n == 0 {
        return Ok(PhaseSolution {
            q: ones,
            objective: trivial,
            capacity: capacity_from_power(snap, trivial),
            sdp: None,
            fallback: false,
        });
    }
    let sol = solve_sdp(&obj, &cfg.sdp)?;
    if let Some(path) = &cfg.debug_dump {
        dump_sdp(path, &obj, &sol)?;
    }
    let (q, value, fallback) = match randomize(&sol, cfg.randomization_draws, &obj, rng) {
        Ok((q, value)) if value >= trivial => (q, value, false),
        Ok(_) | Err(Error::DegenerateRandomization(_)) => (ones, trivial, true),
        Err(e) => return Err(e),
    };
    Ok(PhaseSolution { q, objective: value, capacity: capacity_from_power(snap, value), sdp: Some(sol), fallback })
}

/// Exhaustive search over phases `2 pi k / levels`. Returns the best
/// reflection and its capacity; ties keep the first in lexicographic order.
pub fn brute_force_phases(snap: &NetworkSnapshot, levels: usize) -> Result<(CVector, f64)> {
    if levels == 0 {
        return Err(Error::invalid("need at least one phase level"));
    }
    let n = snap.n();
    if (levels as f64).powi(n as i32) > BRUTE_FORCE_GUARD {
        return Err(Error::SearchTooLarge { levels, elements: n });
    }
    let obj = snapshot_objective(snap)?;
    let alphabet: Vec<C64> = (0..levels)
        .map(|k| cis(std::f64::consts::TAU * k as f64 / levels as f64))
        .collect();
    let mut digits = vec![0usize; n];
    let mut q = CVector::from_element(n, alphabet[0]);
    let mut best = (q.clone(), obj.evaluate(&q));
    'search: loop {
        // odometer step; the least significant digit is the last element
        let mut k = n;
        loop {
            if k == 0 {
                break 'search;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < levels {
                q[k] = alphabet[digits[k]];
                break;
            }
            digits[k] = 0;
            q[k] = alphabet[0];
        }
        let value = obj.evaluate(&q);
        if value > best.1 {
            best = (q.clone(), value);
        }
    }
    let capacity = capacity_from_power(snap, best.1);
    Ok((best.0, capacity))
}
