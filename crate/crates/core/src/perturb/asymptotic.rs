use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{krylov_moments, p_vw_lemma16, PerturbationProblem};
use crate::error::Result;
use crate::matcore::{inf_norm, TOL_NZP};
use crate::poly::{char_poly, minimal_poly, roots, RootSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticCase {
    WvPositive,
    WvZeroWAvNonzero,
    WvZeroWAvZero,
}

/// One eigenvalue branch of `B(t)` escaping to infinity, approximately
/// `leading·t^exponent + constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergentBranch {
    pub exponent: f64,
    pub leading: Complex64,
    /// Next-order constant, when known.
    pub constant: Option<Complex64>,
}

impl DivergentBranch {
    pub fn at(&self, t: f64) -> Complex64 {
        self.leading * t.powf(self.exponent) + self.constant.unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub case: AsymptoticCase,
    pub divergent_branches: Vec<DivergentBranch>,
    /// Roots of `p_vw`.
    pub finite_limits: RootSet,
    /// Eigenvalues of `A` that stay eigenvalues of `B(t)` for every `t`
    /// (roots of `det(λI − A)/m_A(λ)`; empty for nonderogatory `A`).
    pub persistent: RootSet,
    /// `wᵀv, wᵀAv, wᵀA²v, …` up to the degree of `m_A`.
    pub moments: Vec<f64>,
}

pub(crate) fn moment_tol(a_norm: f64, j: usize) -> f64 {
    TOL_NZP * a_norm.max(1.0).powi(j as i32)
}

/// Large-`t` behaviour of the spectrum of `B(t)`.
pub fn asymptotics(prob: &PerturbationProblem) -> Result<AsymptoticReport> {
    let a = prob.a();
    let m = minimal_poly(a)?;
    let l = m.degree();
    let moments = krylov_moments(prob, l.max(3));
    let a_norm = inf_norm(a);
    let pvw = p_vw_lemma16(prob)?;
    let finite_limits = if pvw.is_zero() {
        RootSet::default()
    } else {
        roots(&pvw)?
    };
    let (cofactor, _) = char_poly(a).div_rem(&m)?;
    let persistent = roots(&cofactor)?;

    let wv = prob.wv();
    let first_nonzero = (0..l).find(|&j| moments[j].abs() > moment_tol(a_norm, j));

    let (case, divergent_branches) = if wv > TOL_NZP {
        (
            AsymptoticCase::WvPositive,
            vec![DivergentBranch {
                exponent: 1.0,
                leading: Complex64::new(wv, 0.0),
                constant: None,
            }],
        )
    } else if moments[1].abs() > moment_tol(a_norm, 1) {
        let wav = moments[1];
        let root = Complex64::new(wav, 0.0).sqrt();
        let constant = Complex64::new(0.5 * moments[2] / wav, 0.0);
        let branches = [root, -root]
            .into_iter()
            .map(|leading| DivergentBranch {
                exponent: 0.5,
                leading,
                constant: Some(constant),
            })
            .collect();
        (AsymptoticCase::WvZeroWAvNonzero, branches)
    } else {
        // λ^(j+1) ≈ t·wᵀAʲv for the first nonvanishing moment
        let branches = match first_nonzero {
            Some(j) => {
                let k = j + 1;
                let base = Complex64::new(moments[j], 0.0).powf(1.0 / k as f64);
                (0..k)
                    .map(|s| DivergentBranch {
                        exponent: 1.0 / k as f64,
                        leading: base
                            * Complex64::from_polar(
                                1.0,
                                std::f64::consts::TAU * s as f64 / k as f64,
                            ),
                        constant: None,
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        (AsymptoticCase::WvZeroWAvZero, branches)
    };

    Ok(AsymptoticReport {
        case,
        divergent_branches,
        finite_limits,
        persistent,
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{circulant_3, circulant_3_variant, counterexample_4};

    #[test]
    fn counterexample_has_one_linear_branch() {
        let rep = asymptotics(&counterexample_4()).unwrap();
        assert_eq!(rep.case, AsymptoticCase::WvPositive);
        assert_eq!(rep.divergent_branches.len(), 1);
        assert!((rep.divergent_branches[0].leading.re - 4.41).abs() < 1e-12);
        let vals = rep.finite_limits.values();
        assert_eq!(vals.len(), 3);
        assert!(vals
            .iter()
            .any(|z| (z - Complex64::new(-0.1082, 0.7863)).norm() < 5e-4));
        assert!(rep.persistent.is_empty());
    }

    #[test]
    fn circulant_has_square_root_branches() {
        let rep = asymptotics(&circulant_3()).unwrap();
        assert_eq!(rep.case, AsymptoticCase::WvZeroWAvNonzero);
        assert_eq!(rep.divergent_branches.len(), 2);
        for b in &rep.divergent_branches {
            assert!(b.leading.re.abs() < 1e-12);
            assert!((b.leading.im.abs() - 1.0).abs() < 1e-12);
            assert_eq!(b.constant, Some(Complex64::new(-2.0, 0.0)));
        }
        let vals = rep.finite_limits.values();
        assert_eq!(vals.len(), 1);
        assert!((vals[0] - Complex64::new(7.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn variant_has_three_cube_root_branches() {
        let rep = asymptotics(&circulant_3_variant()).unwrap();
        assert_eq!(rep.case, AsymptoticCase::WvZeroWAvZero);
        assert_eq!(&rep.moments[..3], &[0.0, 0.0, 1.0]);
        assert_eq!(rep.divergent_branches.len(), 3);
        assert!(rep.finite_limits.is_empty());
        // 1 + (t − 1)^(1/3)·e^(2πij/3): leading terms are the cube roots of unity
        assert!(rep
            .divergent_branches
            .iter()
            .all(|b| (b.leading.norm() - 1.0).abs() < 1e-12
                && (b.exponent - 1.0 / 3.0).abs() < 1e-15));
    }
}
