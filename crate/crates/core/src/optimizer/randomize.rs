//! Gaussian randomization: turn a relaxed solution into unit-modulus phases.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, hermitian_eigen, CVector, C64};

use super::sdp::SdpSolution;
use super::HomogenizedObjective;

/// Draws below this modulus in the homogenizing coordinate are discarded.
const DEGENERATE_ANCHOR: f64 = 1e-12;

/// Best of `draws` candidates `x = U Σ^{1/2} e`. The relaxed matrix stands for
/// `v^H v`, so `x` estimates `v^H` and the phases are read off
/// `conj(x_n / x_{N+1})`. Ties keep the earliest draw.
pub fn randomize<R: Rng + ?Sized>(
    sol: &SdpSolution,
    draws: usize,
    obj: &HomogenizedObjective,
    rng: &mut R,
) -> Result<(CVector, f64)> {
    if draws == 0 {
        return Err(Error::invalid("randomization needs at least one draw"));
    }
    let dim = sol.v.nrows();
    if dim != obj.d.nrows() || dim == 0 {
        return Err(Error::dims(format!("relaxed matrix {dim}, objective {}", obj.d.nrows())));
    }
    let n = dim - 1;
    let eig = hermitian_eigen(&sol.v)?;
    // keep only the components that carry weight
    let top = eig.values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<(usize, f64)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 1e-12 * top.max(1e-300))
        .map(|(k, &l)| (k, l.sqrt()))
        .collect();

    let mut best: Option<(CVector, f64)> = None;
    for _ in 0..draws {
        let mut x = CVector::zeros(dim);
        for &(k, s) in &keep {
            let e = complex_gaussian(rng, 1.0) * s;
            x.axpy(e, &eig.vectors.column(k), C64::new(1.0, 0.0));
        }
        let anchor = x[n];
        if !(anchor.norm() > DEGENERATE_ANCHOR) {
            continue;
        }
        let q = CVector::from_fn(n, |i, _| {
            let r = (x[i] / anchor).conj();
            let m = r.norm();
            if m > 0.0 {
                r / m
            } else {
                C64::new(1.0, 0.0)
            }
        });
        let value = obj.evaluate(&q);
        if best.as_ref().is_none_or(|b| value > b.1) {
            best = Some((q, value));
        }
    }
    best.ok_or(Error::DegenerateRandomization(draws))
}
