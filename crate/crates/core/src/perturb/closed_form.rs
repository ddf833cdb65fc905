//! Explicit formulas for dimensions two and three.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::PerturbationProblem;
use crate::error::{Error, Result};
use crate::matcore::{adjugate, TOL_NZP};
use crate::poly::{char_poly, roots, RealPolynomial, RootSet};

/// Two-dimensional case. The eigenvalues of `B(t)` solve
/// `λ² − λ(μ + t·wᵀv) + t·wᵀadj(A)v = 0`, stored as
/// `base(λ) + t·slope(λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct N2ClosedForm {
    /// Nonzero eigenvalue of `A`, equal to `trace A`.
    pub mu: f64,
    pub wv: f64,
    /// `wᵀ·adj(A)·v`
    pub w_adj_v: f64,
    /// `λ² − μλ`
    pub base: RealPolynomial,
    /// `−wᵀv·λ + wᵀadj(A)v`
    pub slope: RealPolynomial,
    /// Finite large-`t` limit `wᵀadj(A)v / wᵀv`, when `wᵀv ≠ 0`.
    pub zeta: Option<f64>,
    /// `wᵀ(ζI − A)⁻²v`.
    pub resolvent_square: Option<f64>,
    /// First-order coefficient in `λ₂(t) = ζ + r/t + O(t⁻²)`, equal to
    /// `−1 / wᵀ(ζI − A)⁻²v`.
    pub r: Option<f64>,
    /// Vertical line `Re λ = μ/2` approached by both eigenvalues when
    /// `wᵀv = 0`.
    pub asymptote_re: Option<f64>,
}

impl N2ClosedForm {
    pub fn quadratic_at(&self, t: f64) -> RealPolynomial {
        self.base.add(&self.slope.scale(t))
    }

    pub fn roots_at(&self, t: f64) -> Result<RootSet> {
        roots(&self.quadratic_at(t))
    }
}

pub fn closed_form_n2(prob: &PerturbationProblem) -> Result<N2ClosedForm> {
    if prob.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: prob.dim(),
        });
    }
    if !prob.irreducible() {
        return Err(Error::InvalidInput(
            "closed form requires irreducible H".into(),
        ));
    }
    let a = prob.a();
    let mu = a.trace();
    let wv = prob.wv();
    let w_adj_v = prob.w().dot(&(adjugate(a) * prob.v()));

    let (zeta, resolvent_square, r, asymptote_re) = if wv.abs() > TOL_NZP {
        let zeta = w_adj_v / wv;
        let shifted = DMatrix::identity(2, 2) * zeta - a;
        let lu = shifted.lu();
        let rs = lu
            .solve(prob.v())
            .and_then(|x| lu.solve(&x))
            .map(|x| prob.w().dot(&x));
        let r = rs.filter(|s| *s != 0.0).map(|s| -1.0 / s);
        (Some(zeta), rs, r, None)
    } else {
        (None, None, None, Some(0.5 * mu))
    };

    Ok(N2ClosedForm {
        mu,
        wv,
        w_adj_v,
        base: RealPolynomial::new(vec![0.0, -mu, 1.0]),
        slope: RealPolynomial::new(vec![w_adj_v, -wv]),
        zeta,
        resolvent_square,
        r,
        asymptote_re,
    })
}

/// Three-dimensional case with `det(λI − A) = λ³ + p₂λ² + p₁λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct N3ClosedForm {
    pub p1: f64,
    pub p2: f64,
    /// `λ²·wᵀv + λ(p₂wᵀv + wᵀAv) + (p₁wᵀv + p₂wᵀAv + wᵀA²v)`, degree-trimmed.
    pub pvw_quadratic: RealPolynomial,
    /// `−wᵀ(p₂I + A)v`; its sign is the sign of the real part of complex
    /// roots of the quadratic when `wᵀv > 0`.
    pub re_sign_value: f64,
    pub discriminant: f64,
}

pub fn closed_form_n3(prob: &PerturbationProblem) -> Result<N3ClosedForm> {
    if prob.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: prob.dim(),
        });
    }
    if !prob.irreducible() {
        return Err(Error::InvalidInput(
            "closed form requires irreducible H".into(),
        ));
    }
    let a = prob.a();
    let pa = char_poly(a);
    let scale = pa.coeffs().iter().fold(1.0_f64, |s, c| s.max(c.abs()));
    if pa.coeff(0).abs() > 1e-10 * scale {
        return Err(Error::NonsingularConstantTerm(pa.coeff(0)));
    }
    let (p1, p2) = (pa.coeff(1), pa.coeff(2));
    let v = prob.v();
    let w = prob.w();
    let av = a * v;
    let wv = w.dot(v);
    let wav = w.dot(&av);
    let wa2v = w.dot(&(a * &av));

    let c2 = wv;
    let c1 = p2 * wv + wav;
    let c0 = p1 * wv + p2 * wav + wa2v;
    let shifted = a + DMatrix::identity(3, 3) * p2;
    Ok(N3ClosedForm {
        p1,
        p2,
        pvw_quadratic: RealPolynomial::new(vec![c0, c1, c2]).trimmed(),
        re_sign_value: -w.dot(&(shifted * v)),
        discriminant: c1 * c1 - 4.0 * c2 * c0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::{eigenvalues, p_vw_lemma16};
    use crate::search::{circulant_3, transient_3};
    use nalgebra::DVector;

    fn swap_problem(v: [f64; 2], w: [f64; 2]) -> PerturbationProblem {
        PerturbationProblem::from_slices(2, &[0.0, 1.0, 1.0, 0.0], &v, &w).unwrap()
    }

    #[test]
    fn n2_symmetric_example() {
        let cf = closed_form_n2(&swap_problem([1.0, 0.0], [1.0, 0.0])).unwrap();
        assert!((cf.mu - 2.0).abs() < 1e-12);
        assert!((cf.zeta.unwrap() - 1.0).abs() < 1e-12);
        // λ² − (2 + t)λ + t
        let q = cf.quadratic_at(3.0);
        assert!((q.coeff(0) - 3.0).abs() < 1e-12);
        assert!((q.coeff(1) + 5.0).abs() < 1e-12);
        assert!((q.coeff(2) - 1.0).abs() < 1e-12);
        // exact expansion: λ₂ = (2 + t − √(t² + 4))/2 = 1 − 1/t + O(t⁻³)
        assert!((cf.r.unwrap() + 1.0).abs() < 1e-12);
        assert!((cf.resolvent_square.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_coefficient_needs_the_sign() {
        // λ₂(t) = (2 + t − √(t² + 4))/2 in closed form
        let prob = swap_problem([1.0, 0.0], [1.0, 0.0]);
        let cf = closed_form_n2(&prob).unwrap();
        let exact = |t: f64| 2.0 / (2.0 + t + (t * t + 4.0).sqrt()) * t;
        let err = |t: f64, r: f64| (exact(t) - cf.zeta.unwrap() - r / t).abs();
        let signed = cf.r.unwrap();
        let magnitude = cf.resolvent_square.unwrap().abs();
        assert!(err(1e3, signed) / err(1e4, signed) > 500.0);
        // with |wᵀ(ζI − A)⁻²v| the error is only first order
        let ratio = err(1e3, magnitude) / err(1e4, magnitude);
        assert!((ratio - 10.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn n2_quadratic_matches_direct_eigenvalues() {
        let prob = swap_problem([1.0, 0.0], [1.0, 0.0]);
        let cf = closed_form_n2(&prob).unwrap();
        for t in [0.5, 2.0, 40.0] {
            // direct solve of the 2×2 characteristic equation
            let b = prob.b_of_t(t);
            let tr = b.trace();
            let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
            let disc = (tr * tr - 4.0 * det).sqrt();
            let mut want = [(tr - disc) / 2.0, (tr + disc) / 2.0];
            want.sort_by(f64::total_cmp);
            let got = cf.roots_at(t).unwrap().values();
            let mut got: Vec<f64> = got.iter().map(|z| z.re).collect();
            got.sort_by(f64::total_cmp);
            assert!((got[0] - want[0]).abs() < 1e-10 && (got[1] - want[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn n2_orthogonal_vectors_follow_vertical_asymptote() {
        let prob = swap_problem([1.0, 0.0], [0.0, 1.0]);
        let cf = closed_form_n2(&prob).unwrap();
        assert_eq!(cf.zeta, None);
        assert_eq!(cf.asymptote_re, Some(1.0));
        // explicit: λ² − 2λ + t, roots 1 ± i√(t − 1)
        let eig = eigenvalues(&prob.b_of_t(1e6)).unwrap();
        for z in eig.values() {
            assert!((z.re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn n2_zero_time_recovers_spectrum_of_a() {
        let prob =
            PerturbationProblem::from_slices(2, &[0.3, 2.0, 0.5, 0.1], &[0.2, 1.0], &[0.7, 0.4])
                .unwrap();
        let cf = closed_form_n2(&prob).unwrap();
        let mut got: Vec<f64> = cf
            .roots_at(0.0)
            .unwrap()
            .values()
            .iter()
            .map(|z| z.re)
            .collect();
        got.sort_by(f64::total_cmp);
        assert!(got[0].abs() < 1e-12);
        assert!((got[1] - cf.mu).abs() < 1e-12);
    }

    #[test]
    fn n2_rejects_other_dimensions() {
        assert!(matches!(
            closed_form_n2(&circulant_3()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn n3_degenerate_and_stable_examples() {
        let cf = closed_form_n3(&circulant_3()).unwrap();
        assert_eq!(cf.pvw_quadratic.degree(), 1);
        assert!((cf.pvw_quadratic.coeff(0) - 7.0).abs() < 1e-12);
        assert!((cf.pvw_quadratic.coeff(1) + 1.0).abs() < 1e-12);

        let prob = transient_3();
        let cf = closed_form_n3(&prob).unwrap();
        let general = p_vw_lemma16(&prob).unwrap();
        for k in 0..3 {
            assert!((cf.pvw_quadratic.coeff(k) - general.coeff(k)).abs() < 1e-10);
        }
        let r = roots(&cf.pvw_quadratic).unwrap();
        assert!(r.min_re().unwrap() > 0.0);
        assert!(cf.re_sign_value > 0.0);
    }

    #[test]
    fn n3_shared_support_gives_positive_sign_value() {
        let prob = transient_3();
        let v = DVector::from_vec(vec![0.0, 0.4, 0.0]);
        let p = PerturbationProblem::new(prob.h().clone(), v.clone(), v).unwrap();
        assert!(closed_form_n3(&p).unwrap().re_sign_value > 0.0);
    }
}
