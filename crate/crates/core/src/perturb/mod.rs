//! Rank-one perturbations `B(t) = A + t·v·wᵀ` of a singular M-matrix.

mod asymptotic;
mod closed_form;
mod curves;
mod pvw;
mod verdict;

pub use asymptotic::{asymptotics, AsymptoticCase, AsymptoticReport, DivergentBranch};
pub use closed_form::{closed_form_n2, closed_form_n3, N2ClosedForm, N3ClosedForm};
pub use curves::{log_grid, trace_eigenvalues, trace_eigenvalues_on_grid, EigenCurveSet};
pub use pvw::{
    default_sample_points, factorization_residual, krylov_moments, p_vw_det_oracle, p_vw_lemma16,
};
pub use verdict::{
    classify, classify_with, estimate_threshold, estimate_threshold_on, min_real_part,
    ClassifyOptions, StabilityStatus, StabilityVerdict,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matcore::{
    check_vectors, is_irreducible, perron_pair_at, spectral_radius, NonnegativeMatrix, NzpReport,
    SingularMMatrix,
};
use crate::poly::{char_poly, roots, RootSet};

/// Largest matrix dimension accepted by [`eigenvalues`].
pub const MAX_N: usize = 16;

/// `H`, `A = ρ(H)·I − H`, the perturbation vectors and the structural
/// flags derived from them.
#[derive(Clone, Debug)]
pub struct PerturbationProblem {
    h: NonnegativeMatrix,
    a: SingularMMatrix,
    v: DVector<f64>,
    w: DVector<f64>,
    irreducible: bool,
    nzp: NzpReport,
    wv: f64,
}

impl PerturbationProblem {
    /// Fails with [`Error::NotSimple`] when `ρ(H)` is not a simple
    /// eigenvalue, since the Perron vectors are then undefined.
    pub fn new(h: NonnegativeMatrix, v: DVector<f64>, w: DVector<f64>) -> Result<Self> {
        check_vectors(h.dim(), &v, &w)?;
        let sr = spectral_radius(&h)?;
        let pair = perron_pair_at(&h, sr)?;
        let nzp = NzpReport::from_pair(&pair, &v, &w);
        let a = SingularMMatrix::from_rho(&h, sr.rho);
        Ok(Self {
            irreducible: is_irreducible(&h),
            wv: w.dot(&v),
            h,
            a,
            v,
            w,
            nzp,
        })
    }

    pub fn from_slices(n: usize, h_row_major: &[f64], v: &[f64], w: &[f64]) -> Result<Self> {
        if h_row_major.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: h_row_major.len(),
            });
        }
        let h = NonnegativeMatrix::new(DMatrix::from_row_slice(n, n, h_row_major))?;
        Self::new(
            h,
            DVector::from_column_slice(v),
            DVector::from_column_slice(w),
        )
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn h(&self) -> &NonnegativeMatrix {
        &self.h
    }

    pub fn m_matrix(&self) -> &SingularMMatrix {
        &self.a
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a.entries
    }

    pub fn rho(&self) -> f64 {
        self.a.rho
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn nzp(&self) -> NzpReport {
        self.nzp
    }

    /// `wᵀv`
    pub fn wv(&self) -> f64 {
        self.wv
    }

    /// `B(t) = A + t·v·wᵀ`.
    pub fn b_of_t(&self, t: f64) -> DMatrix<f64> {
        &self.a.entries + (&self.v * self.w.transpose()) * t
    }
}

/// Serialized with the input keys `H`, `v`, `w` plus the derived fields,
/// so records can be read back as problem files.
impl Serialize for PerturbationProblem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PerturbationProblem", 7)?;
        st.serialize_field("H", &self.h.to_rows())?;
        st.serialize_field("v", self.v.as_slice())?;
        st.serialize_field("w", self.w.as_slice())?;
        st.serialize_field("rho", &self.a.rho)?;
        st.serialize_field("irreducible", &self.irreducible)?;
        st.serialize_field("nzp", &self.nzp)?;
        st.serialize_field("wv", &self.wv)?;
        st.end()
    }
}

/// `B(t)` for a problem; see [`PerturbationProblem::b_of_t`].
pub fn b_of_t(prob: &PerturbationProblem, t: f64) -> DMatrix<f64> {
    prob.b_of_t(t)
}

/// Full spectrum of a real square matrix.
///
/// Roots of the characteristic polynomial are polished by Newton's method
/// on `det(λI − M)` evaluated through an LU factorization of the matrix
/// itself, which removes most of the coefficient error the characteristic
/// polynomial picks up when eigenvalue magnitudes are far apart. The
/// returned residual is the largest relative smallest singular value of
/// `M − λI`, i.e. the eigenvector residual of the best eigenvector. If some
/// root is still off, the spectrum comes from the real Schur form instead
/// (all roots then reported simple).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<RootSet> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if n > MAX_N {
        return Err(Error::InvalidInput(format!(
            "eigenvalues limited to n ≤ {MAX_N}, got {n}"
        )));
    }
    let mut set = roots(&char_poly(m))?;
    let mc = m.map(|x| Complex64::new(x, 0.0));
    let distinct: Vec<Complex64> = set.roots.iter().map(|r| r.value).collect();

    let mut polished = distinct.clone();
    for (k, root) in set.roots.iter().enumerate() {
        if root.multiplicity != 1 || root.value.im < 0.0 {
            continue;
        }
        let gap = distinct
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, z)| (z - root.value).norm())
            .fold(f64::INFINITY, f64::min);
        polished[k] = polish(&mc, root.value, 0.5 * gap);
    }
    for (k, root) in set.roots.iter().enumerate() {
        if root.multiplicity == 1 && root.value.im < 0.0 {
            if let Some(j) = distinct.iter().position(|z| *z == root.value.conj()) {
                polished[k] = polished[j].conj();
            }
        }
    }
    for (root, p) in set.roots.iter_mut().zip(polished) {
        root.value = p;
    }
    set.residual = eigen_residual(&mc, &set);
    if set.residual > TOL_FALLBACK {
        // a small eigenvalue next to a huge one can be lost entirely in the
        // coefficients; the Schur form is backward stable
        let mut schur = RootSet::from_values(m.clone().complex_eigenvalues().as_slice());
        schur.roots.sort_by(|a, b| {
            (a.value.re, a.value.im)
                .partial_cmp(&(b.value.re, b.value.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        schur.residual = eigen_residual(&mc, &schur);
        if schur.residual < set.residual {
            log::debug!(
                "eigenvalues: Schur fallback, residual {:e} → {:e}",
                set.residual,
                schur.residual
            );
            return Ok(schur);
        }
    }
    Ok(set)
}

/// Relative residual above which the characteristic-polynomial spectrum is
/// replaced by the Schur one.
const TOL_FALLBACK: f64 = 1e-10;

fn eigen_residual(mc: &DMatrix<Complex64>, set: &RootSet) -> f64 {
    let n = mc.nrows();
    let scale = mc.norm().max(f64::MIN_POSITIVE);
    set.roots
        .iter()
        .map(|r| {
            let shifted = mc - DMatrix::<Complex64>::identity(n, n) * r.value;
            shifted.singular_values().min() / (scale + r.value.norm())
        })
        .fold(0.0, f64::max)
}

fn polish(m: &DMatrix<Complex64>, start: Complex64, max_move: f64) -> Complex64 {
    let n = m.nrows();
    let identity = DMatrix::<Complex64>::identity(n, n);
    let mut z = start;
    for _ in 0..4 {
        let shifted = &identity * z - m;
        let Some(inv) = shifted.try_inverse() else {
            return z;
        };
        let tr = inv.trace();
        if tr.norm() == 0.0 || !tr.is_finite() {
            break;
        }
        let step = tr.inv();
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    if z.is_finite() && (z - start).norm() <= max_move {
        if start.im == 0.0 {
            Complex64::new(z.re, 0.0)
        } else {
            z
        }
    } else {
        start
    }
}
