//! ADMM for `max Tr(D V)` subject to `diag(V) = 1` and `V ⪰ 0`.
//!
//! The iteration alternates a PSD-cone projection with pinning the diagonal,
//! in scaled form:
//!
//! ```text
//! V <- Π_psd(Z - U + D / rho)
//! Z <- V + U with unit diagonal
//! U <- U + V - Z
//! ```
//!
//! The diagonal of `D` is dropped (it adds a constant on the feasible set)
//! and the rest is divided by the Frobenius norm of the full `D`. `rho` is adapted by
//! residual balancing, and the `(Z, U)` map is sped up by safeguarded
//! Anderson mixing. At exit the PSD iterate is rescaled to an exactly
//! feasible point and a dual certificate is read off `rho U`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_defect, hermitian_eigen, hermitize, project_psd, CMatrix, C64};

use super::HomogenizedObjective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial penalty on the normalized problem.
    pub rho: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings { tol: 1e-6, max_iter: 5000, rho: 1.0 }
    }
}

impl SdpSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.rho > 0.0) {
            return Err(Error::invalid("SDP tolerance, iteration cap and rho must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Unit-diagonal PSD matrix.
    pub v: CMatrix,
    /// `Tr(D V)`.
    pub objective: f64,
    /// Dual bound: no feasible point of the relaxation exceeds it.
    pub upper_bound: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

fn trace_product(d: &CMatrix, v: &CMatrix) -> f64 {
    // Tr(D V) = sum_ij D_ij V_ji
    d.iter().zip(v.transpose().iter()).map(|(a, b)| (a * b).re).sum()
}

fn pin_diagonal(a: &mut CMatrix) {
    for k in 0..a.nrows() {
        a[(k, k)] = C64::new(1.0, 0.0);
    }
}

/// Scales `v` to unit diagonal; entries with a vanishing diagonal are
/// replaced by the identity row and column, which keeps the result PSD.
fn rescale_to_unit_diagonal(v: &CMatrix) -> CMatrix {
    let n = v.nrows();
    let s: Vec<f64> = (0..n)
        .map(|k| {
            let d = v[(k, k)].re;
            if d > 1e-300 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut out = CMatrix::from_fn(n, n, |i, j| v[(i, j)] * (s[i] * s[j]));
    hermitize(&mut out);
    pin_diagonal(&mut out);
    out
}

/// `sum(y) + n * max(0, lambda_max(D - Diag(y)))`, valid for any real `y`.
fn dual_bound(d: &CMatrix, y: &[f64]) -> Result<f64> {
    let n = d.nrows();
    let mut slack = d.clone();
    for (k, yk) in y.iter().enumerate() {
        slack[(k, k)] -= C64::new(*yk, 0.0);
    }
    hermitize(&mut slack);
    let lam = hermitian_eigen(&slack)?.values.last().copied().unwrap_or(0.0);
    Ok(y.iter().sum::<f64>() + n as f64 * lam.max(0.0))
}

/// Anderson mixing depth for the `(Z, U)` fixed-point map.
const ANDERSON_MEMORY: usize = 5;

/// One ADMM sweep from `(z, u)`: returns `(V, Z', U')`.
fn admm_step(dn: &CMatrix, z: &CMatrix, u: &CMatrix, rho: f64) -> Result<(CMatrix, CMatrix, CMatrix)> {
    let mut target = z - u + dn.unscale(rho);
    hermitize(&mut target);
    let v = project_psd(&target)?;
    let mut z_next = &v + u;
    hermitize(&mut z_next);
    pin_diagonal(&mut z_next);
    let u_next = u + &v - &z_next;
    Ok((v, z_next, u_next))
}

type Pair = (CMatrix, CMatrix);

/// Type-II Anderson acceleration over stacked `(Z, U)` iterates. Mixing
/// coefficients are real, so a mixed `Z` stays Hermitian with unit diagonal.
struct Anderson {
    last: Option<(Pair, Pair)>,
    dx: VecDeque<Pair>,
    dg: VecDeque<Pair>,
    /// `gram[i][j] = <dg_i, dg_j>`, kept in step with `dg`.
    gram: VecDeque<VecDeque<f64>>,
}

fn re_dot(a: &Pair, b: &Pair) -> f64 {
    a.0.dotc(&b.0).re + a.1.dotc(&b.1).re
}

impl Anderson {
    fn new() -> Self {
        Anderson { last: None, dx: VecDeque::new(), dg: VecDeque::new(), gram: VecDeque::new() }
    }

    fn clear(&mut self) {
        *self = Anderson::new();
    }

    /// Records `x` with residual `g = F(x) - x` and returns the mixed next
    /// point, or `None` while the history is too short or ill-conditioned.
    fn push(&mut self, x: Pair, g: Pair) -> Option<Pair> {
        if let Some((px, pg)) = self.last.take() {
            let dg = (&g.0 - &pg.0, &g.1 - &pg.1);
            if self.dg.len() == ANDERSON_MEMORY {
                self.dx.pop_front();
                self.dg.pop_front();
                self.gram.pop_front();
                for row in &mut self.gram {
                    row.pop_front();
                }
            }
            let row: VecDeque<f64> = self.dg.iter().map(|old| re_dot(old, &dg)).collect();
            for (r, &v) in self.gram.iter_mut().zip(&row) {
                r.push_back(v);
            }
            let mut row = row;
            row.push_back(re_dot(&dg, &dg));
            self.gram.push_back(row);
            self.dx.push_back((&x.0 - &px.0, &x.1 - &px.1));
            self.dg.push_back(dg);
        }
        let m = self.dg.len();
        let out = if m == 0 { None } else { self.mix(&x, &g) };
        self.last = Some((x, g));
        out
    }

    fn mix(&self, x: &Pair, g: &Pair) -> Option<Pair> {
        let m = self.dg.len();
        // real least squares  min_gamma || g - dG gamma ||
        let gram = DMatrix::<f64>::from_fn(m, m, |i, j| self.gram[i][j]);
        let rhs = DVector::<f64>::from_fn(m, |i, _| re_dot(&self.dg[i], g));
        let ridge = 1e-12 * gram.trace().max(f64::MIN_POSITIVE);
        let gamma = (gram + DMatrix::identity(m, m) * ridge).cholesky()?.solve(&rhs);
        if gamma.iter().any(|c| !c.is_finite()) {
            return None;
        }
        let (mut z, mut u) = (&x.0 + &g.0, &x.1 + &g.1);
        for ((dx, dg), &c) in self.dx.iter().zip(&self.dg).zip(gamma.iter()) {
            z.zip_zip_apply(&dx.0, &dg.0, |t, a, b| *t -= (a + b) * c);
            u.zip_zip_apply(&dx.1, &dg.1, |t, a, b| *t -= (a + b) * c);
        }
        Some((z, u))
    }
}

pub fn solve_sdp(obj: &HomogenizedObjective, settings: &SdpSettings) -> Result<SdpSolution> {
    settings.validate()?;
    let d = &obj.d;
    let n = d.nrows();
    if n == 0 || d.ncols() != n {
        return Err(Error::dims(format!("objective matrix is {}x{}", d.nrows(), d.ncols())));
    }
    if hermitian_defect(d) > 1e-10 * (1.0 + frobenius(d)) {
        return Err(Error::invalid("objective matrix is not Hermitian"));
    }
    // the diagonal only adds the constant Tr(D) on the feasible set
    let diag: Vec<f64> = (0..n).map(|k| d[(k, k)].re).collect();
    let mut off = d.clone();
    for k in 0..n {
        off[(k, k)] = C64::new(0.0, 0.0);
    }
    // tolerances stay relative to the full objective
    let scale = frobenius(d);
    if n == 1 || frobenius(&off) == 0.0 {
        // fully pinned, or every feasible point is optimal
        let v = CMatrix::identity(n, n);
        let objective = trace_product(d, &v);
        return Ok(SdpSolution {
            v,
            objective,
            upper_bound: objective,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: true,
        });
    }
    let dn = off.unscale(scale);

    let mut rho = settings.rho;
    let mut z = CMatrix::identity(n, n);
    let mut u = CMatrix::zeros(n, n);
    let mut v = z.clone();
    let mut anderson = Anderson::new();
    // plain successor of the last accepted point and its residual norm
    let mut fallback: Option<((CMatrix, CMatrix), f64)> = None;
    let mut best: Option<(f64, CMatrix, CMatrix, f64, f64)> = None;
    let mut iterations = 0;
    let mut converged = false;
    let (mut r_p, mut r_d) = (f64::INFINITY, f64::INFINITY);
    let sqrt_n = (n as f64).sqrt();

    for it in 1..=settings.max_iter {
        iterations = it;
        let (v_next, z_next, u_next) = admm_step(&dn, &z, &u, rho)?;
        let g = (&z_next - &z, &u_next - &u);
        let g_norm = re_dot(&g, &g).sqrt();
        if let Some((plain, prev_norm)) = fallback.take() {
            if g_norm > prev_norm {
                // the mixed point did worse than a plain step would have
                anderson.clear();
                (z, u) = plain;
                continue;
            }
        }
        v = v_next;

        r_p = frobenius(&(&v - &z_next));
        r_d = rho * frobenius(&g.0);
        let eps_p = settings.tol * sqrt_n.max(frobenius(&v));
        let eps_d = settings.tol * sqrt_n.max(rho * frobenius(&u_next));
        let score = (r_p / eps_p).max(r_d / eps_d);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, v.clone(), u_next.clone() * C64::new(rho, 0.0), r_p, r_d));
        }
        if r_p <= eps_p && r_d <= eps_d {
            converged = true;
            u = u_next;
            break;
        }

        let x = (std::mem::replace(&mut z, CMatrix::zeros(0, 0)), std::mem::replace(&mut u, CMatrix::zeros(0, 0)));
        match anderson.push(x, g) {
            Some(mixed) => {
                fallback = Some(((z_next, u_next), g_norm));
                (z, u) = mixed;
            }
            None => (z, u) = (z_next, u_next),
        }

        // residual balancing on the normalized residuals; U is the scaled
        // dual, so it rescales with rho
        if it % 10 == 0 {
            let (a, b) = (r_p / eps_p, r_d / eps_d);
            let new_rho = if a > 10.0 * b {
                rho * 2.0
            } else if b > 10.0 * a {
                rho / 2.0
            } else {
                rho
            };
            if new_rho != rho {
                let c = C64::new(rho / new_rho, 0.0);
                u *= c;
                if let Some(((_, pu), _)) = fallback.as_mut() {
                    *pu *= c;
                }
                anderson.clear();
                rho = new_rho;
            }
        }
    }

    let (v_out, dual, r_p, r_d) = if converged {
        (v, u * C64::new(rho, 0.0), r_p, r_d)
    } else {
        let (_, bv, bu, bp, bd) = best.expect("at least one iteration ran");
        (bv, bu, bp, bd)
    };
    let v_feasible = rescale_to_unit_diagonal(&v_out);
    let objective = trace_product(d, &v_feasible);
    let y: Vec<f64> = (0..n).map(|k| dual[(k, k)].re * scale + diag[k]).collect();
    let upper_bound = dual_bound(d, &y)?.max(objective);
    Ok(SdpSolution {
        v: v_feasible,
        objective,
        upper_bound,
        iterations,
        primal_residual: r_p,
        dual_residual: r_d,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cis, complex_gaussian, hermitian_eigen, CVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn objective(d: CMatrix) -> HomogenizedObjective {
        HomogenizedObjective { d }
    }

    fn random_psd(n: usize, rank: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(n, rank, |_, _| complex_gaussian(&mut rng, 1.0));
        &a * a.adjoint()
    }

    #[test]
    fn scalar_problem_is_pinned() {
        let sol = solve_sdp(&objective(CMatrix::from_element(1, 1, C64::new(2.5, 0.0))), &SdpSettings::default())
            .unwrap();
        assert_eq!(sol.v, CMatrix::from_element(1, 1, C64::new(1.0, 0.0)));
        assert_eq!(sol.objective, 2.5);
    }

    #[test]
    fn two_by_two_hand_instance() {
        let i = C64::new(0.0, 1.0);
        let d = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), i, -i, C64::new(1.0, 0.0)]);
        let sol = solve_sdp(&objective(d.clone()), &SdpSettings::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.objective - 4.0).abs() < 1e-6, "{}", sol.objective);
        assert!(sol.upper_bound >= sol.objective && sol.upper_bound - 4.0 < 1e-5);
        // grid over the single free phase: |e^{j th} i + 1|^2 + ... = 2 + 2 Re(...)
        let grid = (0..4096)
            .map(|k| {
                let v = CVector::from_vec(vec![cis(TAU * k as f64 / 4096.0), C64::new(1.0, 0.0)]);
                crate::linalg::quadratic_form(&d, &v.conjugate())
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((grid - 4.0).abs() < 1e-6);
    }

    #[test]
    fn zero_objective_returns_identity() {
        let sol = solve_sdp(&objective(CMatrix::zeros(3, 3)), &SdpSettings::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.converged);
    }

    #[test]
    fn solution_is_feasible_and_certified() {
        for seed in 0..10 {
            let d = random_psd(6, 3, seed);
            let settings = SdpSettings::default();
            let sol = solve_sdp(&objective(d.clone()), &settings).unwrap();
            for k in 0..6 {
                assert!((sol.v[(k, k)].re - 1.0).abs() < 10.0 * settings.tol);
            }
            let eig = hermitian_eigen(&sol.v).unwrap();
            assert!(eig.values[0] > -10.0 * settings.tol);
            assert!(sol.upper_bound >= sol.objective);
            assert!(
                (sol.upper_bound - sol.objective) / sol.objective < 1e-4,
                "gap {} vs {}",
                sol.upper_bound,
                sol.objective
            );
        }
    }

    #[test]
    fn diagonal_shift_only_moves_the_objective() {
        let d = random_psd(12, 2, 3);
        let mut shifted = d.clone();
        for k in 0..12 {
            shifted[(k, k)] += C64::new(0.5 * k as f64, 0.0);
        }
        let settings = SdpSettings { tol: 1e-8, ..SdpSettings::default() };
        let a = solve_sdp(&objective(d.clone()), &settings).unwrap();
        let b = solve_sdp(&objective(shifted), &settings).unwrap();
        assert!(a.converged && b.converged);
        assert!((b.objective - a.objective - 33.0).abs() < 1e-5 * b.objective);
        assert!(b.upper_bound - b.objective < 1e-5 * b.objective);
    }

    #[test]
    fn converges_when_one_diagonal_entry_dominates() {
        // a strong direct path swamps the reflection terms
        let mut d = random_psd(40, 3, 11).unscale(1e4);
        d[(39, 39)] += C64::new(1e3, 0.0);
        let sol = solve_sdp(&objective(d), &SdpSettings::default()).unwrap();
        assert!(sol.converged, "{} iterations", sol.iterations);
        let gap = (sol.upper_bound - sol.objective) / sol.objective;
        assert!(gap < 1e-4, "relative gap {gap:e} after {} iterations", sol.iterations);
    }

    #[test]
    fn dominates_rank_one_points() {
        let d = random_psd(4, 2, 77);
        let sol = solve_sdp(&objective(d.clone()), &SdpSettings::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x = CVector::from_fn(4, |_, _| cis(rand::Rng::random_range(&mut rng, 0.0..TAU)));
            assert!(crate::linalg::quadratic_form(&d, &x) <= sol.objective + 1e-6);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut d = CMatrix::identity(2, 2);
        d[(0, 1)] = C64::new(1.0, 0.0);
        assert!(solve_sdp(&objective(d), &SdpSettings::default()).is_err());
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let d = random_psd(8, 4, 5);
        let settings = SdpSettings { max_iter: 3, ..SdpSettings::default() };
        let sol = solve_sdp(&objective(d), &settings).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
        assert!(sol.v.diagonal().iter().all(|z| (z.re - 1.0).abs() < 1e-12));
    }
}
