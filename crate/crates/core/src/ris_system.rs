//! The frozen per-interval multi-user uplink: combined channels, received
//! signal and sum capacity.
//!
//! Row vectors of the model (`h_i^d`, `q`, the combined channel) are stored as
//! column [`CVector`]s holding the same entries. `H_d` keeps the column
//! convention of the model, so column `i` is `(h_i^d)^H`.

use std::f64::consts::TAU;

use nalgebra::{Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_unit_modulus, cis, CMatrix, CVector, C64};

/// Planar reflecting surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisConfig {
    pub element_positions: Vec<Point3<f64>>,
    /// Phase shift per element, radians in `[0, 2pi)`.
    pub phases: Vec<f64>,
    center: Point3<f64>,
}

impl RisConfig {
    /// Uniform planar array in the vertical plane through `center`, facing the
    /// horizontal direction `normal`, with half-wavelength spacing. Elements
    /// fill a `ceil(sqrt(n))`-column grid row by row.
    pub fn planar(n: usize, center: Point3<f64>, normal: Vector2<f64>, wavelength: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("RIS needs at least one element"));
        }
        if !(wavelength > 0.0) || !(normal.norm() > 0.0) {
            return Err(Error::invalid("RIS needs a positive wavelength and a non-zero facing direction"));
        }
        let nrm = normal.normalize();
        let across = Vector3::new(-nrm.y, nrm.x, 0.0);
        let up = Vector3::z();
        let cols = (n as f64).sqrt().ceil() as usize;
        let rows = n.div_ceil(cols);
        let spacing = wavelength / 2.0;
        let element_positions = (0..n)
            .map(|k| {
                let (r, c) = (k / cols, k % cols);
                let x = (c as f64 - (cols - 1) as f64 / 2.0) * spacing;
                let z = (r as f64 - (rows - 1) as f64 / 2.0) * spacing;
                center + across * x + up * z
            })
            .collect();
        Ok(RisConfig { element_positions, phases: vec![0.0; n], center })
    }

    pub fn n(&self) -> usize {
        self.element_positions.len()
    }

    /// Geometric reference point of the array.
    pub fn center(&self) -> Point3<f64> {
        self.center
    }

    /// `q = [e^{j theta_1}, ..., e^{j theta_N}]`.
    pub fn reflection(&self) -> CVector {
        CVector::from_iterator(self.n(), self.phases.iter().map(|&t| cis(t)))
    }

    /// Stores the phases of a unit-modulus reflection vector, wrapped to `[0, 2pi)`.
    pub fn set_reflection(&mut self, q: &CVector) -> Result<()> {
        if q.len() != self.n() {
            return Err(Error::dims(format!("reflection of length {} for {} elements", q.len(), self.n())));
        }
        check_unit_modulus(q)?;
        self.phases = q.iter().map(|z| wrap_phase(z.arg())).collect();
        Ok(())
    }
}

pub(crate) fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Channel state of one coherence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SnapshotFile", try_from = "SnapshotFile")]
pub struct NetworkSnapshot {
    /// `M x I`; column `i` is `(h_i^d)^H`.
    pub hd: CMatrix,
    /// Cascaded channels, one `N x M` matrix per IoT.
    pub g: Vec<CMatrix>,
    /// Transmit power per IoT, watts.
    pub p_t: Vec<f64>,
    /// Noise power, watts.
    pub sigma2: f64,
    /// Bandwidth, Hz.
    pub beta: f64,
}

impl NetworkSnapshot {
    pub fn new(hd: CMatrix, g: Vec<CMatrix>, p_t: Vec<f64>, sigma2: f64, beta: f64) -> Result<Self> {
        let snap = NetworkSnapshot { hd, g, p_t, sigma2, beta };
        snap.validate()?;
        Ok(snap)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, i) = self.hd.shape();
        if self.g.len() != i || self.p_t.len() != i {
            return Err(Error::dims(format!(
                "H_d has {i} columns, {} cascaded channels and {} powers",
                self.g.len(),
                self.p_t.len()
            )));
        }
        let n = self.g.first().map_or(0, |g| g.nrows());
        for (k, g) in self.g.iter().enumerate() {
            if g.shape() != (n, m) {
                return Err(Error::dims(format!("G_{k} is {:?}, expected ({n}, {m})", g.shape())));
            }
        }
        if self.p_t.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("transmit powers must be non-negative"));
        }
        if !(self.sigma2 > 0.0) || !(self.beta > 0.0) {
            return Err(Error::invalid("noise power and bandwidth must be positive"));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.hd.nrows()
    }

    pub fn iots(&self) -> usize {
        self.hd.ncols()
    }

    /// RIS element count (0 when there are no IoTs).
    pub fn n(&self) -> usize {
        self.g.first().map_or(0, |g| g.nrows())
    }

    /// `h_i^d` as a length-M vector.
    pub fn direct(&self, i: usize) -> CVector {
        self.hd.column(i).map(|z| z.conj())
    }

    /// Same snapshot with every cascaded channel zeroed (no RIS).
    pub fn without_ris(&self) -> NetworkSnapshot {
        NetworkSnapshot {
            g: self.g.iter().map(|g| CMatrix::zeros(g.nrows(), g.ncols())).collect(),
            ..self.clone()
        }
    }

    fn check_reflection(&self, q: &CVector) -> Result<()> {
        if q.len() != self.n() {
            return Err(Error::dims(format!("reflection of length {} for {} elements", q.len(), self.n())));
        }
        check_unit_modulus(q)
    }

    /// `sum_i P_i ||h_i^d + q G_i||^2`, the received signal power.
    pub fn objective(&self, q: &CVector) -> Result<f64> {
        self.check_reflection(q)?;
        Ok((0..self.iots())
            .map(|i| self.p_t[i] * combined_unchecked(&self.direct(i), q, &self.g[i]).norm_squared())
            .sum())
    }
}

fn combined_unchecked(h_d: &CVector, q: &CVector, g: &CMatrix) -> CVector {
    h_d + g.transpose() * q
}

/// `h^d + q G`.
pub fn combined_channel(h_d: &CVector, q: &CVector, g: &CMatrix) -> Result<CVector> {
    if g.nrows() != q.len() || g.ncols() != h_d.len() {
        return Err(Error::dims(format!(
            "G is {}x{}, q has {} entries, h_d has {}",
            g.nrows(),
            g.ncols(),
            q.len(),
            h_d.len()
        )));
    }
    check_unit_modulus(q)?;
    Ok(combined_unchecked(h_d, q, g))
}

/// Received row `sum_i (h_i^d + q G_i) s_i + z`.
pub fn received_signal(snap: &NetworkSnapshot, q: &CVector, s: &[C64], z: &CVector) -> Result<CVector> {
    const POWER_SLACK: f64 = 1e-9;
    if s.len() != snap.iots() || z.len() != snap.m() {
        return Err(Error::dims(format!(
            "{} symbols for {} IoTs, noise of length {} for {} antennas",
            s.len(),
            snap.iots(),
            z.len(),
            snap.m()
        )));
    }
    snap.check_reflection(q)?;
    let mut y = z.clone();
    for (i, &si) in s.iter().enumerate() {
        let power = si.norm_sqr();
        let budget = snap.p_t[i];
        if power > budget + POWER_SLACK * (1.0 + budget) {
            return Err(Error::PowerExceeded { index: i, power, budget });
        }
        y += combined_unchecked(&snap.direct(i), q, &snap.g[i]) * si;
    }
    Ok(y)
}

/// Capacity from a received signal power, `beta log2(1 + power / sigma2)`.
pub fn capacity_from_power(snap: &NetworkSnapshot, power: f64) -> f64 {
    snap.beta * (1.0 + power / snap.sigma2).log2()
}

/// Sum capacity in bits/s under reflection `q`.
pub fn sum_capacity(snap: &NetworkSnapshot, q: &CVector) -> Result<f64> {
    Ok(capacity_from_power(snap, snap.objective(q)?))
}

/// Capacity over the direct channels alone.
pub fn capacity_without_ris(snap: &NetworkSnapshot) -> f64 {
    let power: f64 = (0..snap.iots()).map(|i| snap.p_t[i] * snap.hd.column(i).norm_squared()).sum();
    capacity_from_power(snap, power)
}

/// Capacity with every path phase-aligned, a ceiling for single-antenna
/// receivers.
pub fn aligned_capacity_bound(snap: &NetworkSnapshot) -> Result<f64> {
    if snap.m() != 1 {
        return Err(Error::MultiAntennaBound(snap.m()));
    }
    let power: f64 = (0..snap.iots())
        .map(|i| {
            let amp = snap.hd[(0, i)].norm() + snap.g[i].iter().map(|z| z.norm()).sum::<f64>();
            snap.p_t[i] * amp * amp
        })
        .sum();
    Ok(capacity_from_power(snap, power))
}

/// On-disk form of a snapshot: matrices as row lists of `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotFile {
    hd: Vec<Vec<[f64; 2]>>,
    g: Vec<Vec<Vec<[f64; 2]>>>,
    p_t: Vec<f64>,
    sigma2: f64,
    beta: f64,
}

pub fn matrix_rows(a: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    a.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn from_rows(rows: &[Vec<[f64; 2]>], cols_hint: usize) -> Result<CMatrix> {
    let ncols = rows.first().map_or(cols_hint, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::dims("ragged matrix rows"));
    }
    Ok(CMatrix::from_fn(rows.len(), ncols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

impl From<NetworkSnapshot> for SnapshotFile {
    fn from(s: NetworkSnapshot) -> Self {
        SnapshotFile {
            hd: matrix_rows(&s.hd),
            g: s.g.iter().map(matrix_rows).collect(),
            p_t: s.p_t,
            sigma2: s.sigma2,
            beta: s.beta,
        }
    }
}

impl TryFrom<SnapshotFile> for NetworkSnapshot {
    type Error = Error;

    fn try_from(f: SnapshotFile) -> Result<Self> {
        let hd = from_rows(&f.hd, f.p_t.len())?;
        let g = f.g.iter().map(|g| from_rows(g, hd.nrows())).collect::<Result<Vec<_>>>()?;
        NetworkSnapshot::new(hd, g, f.p_t, f.sigma2, f.beta)
    }
}
