use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{eigenvalues, PerturbationProblem};
use crate::error::{Error, Result};
use crate::poly::{char_poly, minimal_poly, RealPolynomial};

/// `wᵀAʲv` for `j = 0..count`.
pub fn krylov_moments(prob: &PerturbationProblem, count: usize) -> Vec<f64> {
    let mut x: DVector<f64> = prob.v().clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(prob.w().dot(&x));
        x = prob.a() * x;
    }
    out
}

/// `p_vw(λ) = m_A(λ)·wᵀ(λI − A)⁻¹v` from the coefficients of the minimal
/// polynomial: the coefficient of `λⁱ` is `Σ_{k−j=i+1} m_k·wᵀAʲv`.
pub fn p_vw_lemma16(prob: &PerturbationProblem) -> Result<RealPolynomial> {
    let m = minimal_poly(prob.a())?;
    let l = m.degree();
    let moments = krylov_moments(prob, l);
    let coeffs: Vec<f64> = (0..l)
        .map(|i| (i + 1..=l).map(|k| m.coeff(k) * moments[k - i - 1]).sum())
        .collect();
    Ok(RealPolynomial::new(coeffs).trimmed())
}

/// `det(λI − A) − det(λI − (A + v·wᵀ))`, which equals `p_vw` when `A` is
/// nonderogatory.
pub fn p_vw_det_oracle(prob: &PerturbationProblem) -> Result<RealPolynomial> {
    let n = prob.dim();
    let pa = char_poly(prob.a());
    let m = minimal_poly(prob.a())?;
    let scale = pa.coeffs().iter().fold(1.0_f64, |s, c| s.max(c.abs()));
    let matches =
        m.degree() == n && (0..=n).all(|k| (m.coeff(k) - pa.coeff(k)).abs() <= 1e-8 * scale);
    if !matches {
        return Err(Error::NotNonderogatory);
    }
    let pb = char_poly(&prob.b_of_t(1.0));
    Ok(pa.sub(&pb).trimmed())
}

/// Eight points on `|λ| = 1 + ρ(H)`, rotated off the real axis.
pub fn default_sample_points(prob: &PerturbationProblem) -> Vec<Complex64> {
    let radius = 1.0 + prob.rho();
    let offset = std::f64::consts::SQRT_2 - 1.0;
    (0..8)
        .map(|k| Complex64::from_polar(radius, offset + std::f64::consts::TAU * k as f64 / 8.0))
        .collect()
}

/// Largest relative mismatch, over the sample points, between
/// `det(λI − B(t))` and `det(λI − A)/m_A(λ) · (m_A(λ) − t·p_vw(λ))`.
pub fn factorization_residual(
    prob: &PerturbationProblem,
    t: f64,
    sample_points: &[Complex64],
) -> Result<f64> {
    let spectrum = eigenvalues(prob.a())?.values();
    if let Some(bad) = sample_points
        .iter()
        .find(|z| spectrum.iter().any(|e| (*z - e).norm() < 1e-6))
    {
        return Err(Error::InvalidInput(format!(
            "sample point {bad} lies on the spectrum of A"
        )));
    }
    let n = prob.dim();
    let pa = char_poly(prob.a());
    let m = minimal_poly(prob.a())?;
    let pvw = p_vw_lemma16(prob)?;
    let (cofactor, _) = pa.div_rem(&m)?;
    // determinant through LU of the matrix itself: the characteristic
    // polynomial of B(t) loses accuracy once ‖B(t)‖ is large
    let b = prob.b_of_t(t).map(|x| Complex64::new(x, 0.0));
    let identity = DMatrix::<Complex64>::identity(n, n);
    let reduced = m.sub(&pvw.scale(t));
    Ok(sample_points
        .iter()
        .map(|&z| {
            let lhs = (&identity * z - &b).determinant();
            let rhs = cofactor.eval_complex(z) * reduced.eval_complex(z);
            (lhs - rhs).norm() / (1.0 + lhs.norm())
        })
        .fold(0.0, f64::max))
}
