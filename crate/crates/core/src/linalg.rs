//! Complex linear-algebra helpers shared by the estimation and optimization
//! code. Matrices are `nalgebra` dense matrices; the Hermitian eigensolver is
//! delegated to `faer`, which is markedly faster at the sizes the SDP solver
//! works with.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const UNIT_MODULUS_TOL: f64 = 1e-9;

#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues are returned in
/// ascending order with the matching unit-norm eigenvectors as columns.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dims(format!("eigen of {}x{} matrix", n, a.ncols())));
    }
    if n == 0 {
        return Ok(HermitianEigen { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let m = Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]);
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigendecomposition failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let values = (0..n).map(|k| s[k].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok(HermitianEigen { values, vectors })
}

/// Projects a Hermitian matrix onto the PSD cone by truncating negative
/// eigenvalues.
pub fn project_psd(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dims(format!("PSD projection of {}x{} matrix", n, a.ncols())));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let m = Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]);
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigendecomposition failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let pos: Vec<usize> = (0..n).filter(|&k| s[k].re > 0.0).collect();
    let neg: Vec<usize> = (0..n).filter(|&k| s[k].re < 0.0).collect();
    // rebuild from whichever side of the spectrum is smaller: A_+ = A - A_-
    let (idx, keep) = if pos.len() <= neg.len() { (pos, false) } else { (neg, true) };
    let basis = Mat::<C64>::from_fn(n, idx.len(), |i, j| u[(i, idx[j])]);
    let weighted = Mat::<C64>::from_fn(n, idx.len(), |i, j| u[(i, idx[j])] * s[idx[j]].re);
    let part = &weighted * basis.adjoint();
    let mut out = CMatrix::from_fn(n, n, |i, j| if keep { m[(i, j)] - part[(i, j)] } else { part[(i, j)] });
    hermitize(&mut out);
    Ok(out)
}

/// Replaces `a` by `(a + a^H) / 2`.
pub fn hermitize(a: &mut CMatrix) {
    let n = a.nrows();
    for j in 0..n {
        a[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
}

pub fn hermitian_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Fails with [`Error::NotUnitModulus`] on the first entry whose modulus is
/// off by more than [`UNIT_MODULUS_TOL`].
pub fn check_unit_modulus(q: &CVector) -> Result<()> {
    for (index, z) in q.iter().enumerate() {
        let modulus = z.norm();
        if (modulus - 1.0).abs() > UNIT_MODULUS_TOL {
            return Err(Error::NotUnitModulus { index, modulus });
        }
    }
    Ok(())
}

/// Standard circularly-symmetric complex Gaussian, `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// `x^H A x` for Hermitian `A`; the imaginary part is rounding noise.
pub fn quadratic_form(a: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(a * x)).re
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix, what: &str) -> Result<CMatrix> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient(format!("{what} is not positive definite")))?;
    Ok(chol.solve(b))
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `||a - b||_F / ||b||_F`, or the absolute error when `b` is zero.
pub fn relative_error(a: &CMatrix, b: &CMatrix) -> f64 {
    let err = frobenius(&(a - b));
    let scale = frobenius(b);
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}
