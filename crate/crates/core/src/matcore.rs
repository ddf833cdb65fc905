//! Nonnegative matrices and the singular M-matrices `ρ(H)·I − H` they
//! generate: spectral radius, Perron vectors, irreducibility, the non-zero
//! projection (NZP) condition and the adjugate.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{char_poly, faddeev_leverrier, roots};

/// Threshold on `|z_lᵀv|` and `|wᵀz_r|` below which NZP is considered violated.
pub const TOL_NZP: f64 = 1e-10;

/// Residual tolerance for eigenpairs of `H`.
pub fn tol_eig(h: &DMatrix<f64>) -> f64 {
    1e-9 * inf_norm(h).max(1.0)
}

/// Clustering radius used to decide whether `ρ(H)` is a simple eigenvalue.
pub fn tol_cluster(rho: f64) -> f64 {
    1e-8 * rho.max(1.0)
}

pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Square matrix with entrywise nonnegative, finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct NonnegativeMatrix(DMatrix<f64>);

impl NonnegativeMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("matrix must be at least 1×1".into()));
        }
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if let Some(bad) = m.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidInput(format!(
                "entries must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// `A = ρ(H)·I − H`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularMMatrix {
    pub entries: DMatrix<f64>,
    pub rho: f64,
}

impl SingularMMatrix {
    pub fn from_rho(h: &NonnegativeMatrix, rho: f64) -> Self {
        let n = h.dim();
        Self {
            entries: DMatrix::identity(n, n) * rho - h.matrix(),
            rho,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRadius {
    pub rho: f64,
    /// Whether `ρ` is an algebraically simple eigenvalue.
    pub simple: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerronPair {
    pub right: DVector<f64>,
    pub left: DVector<f64>,
    pub simple: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NzpReport {
    /// `z_lᵀv`
    pub lv: f64,
    /// `wᵀz_r`
    pub wr: f64,
    pub holds: bool,
}

impl NzpReport {
    pub fn from_pair(pair: &PerronPair, v: &DVector<f64>, w: &DVector<f64>) -> Self {
        let lv = pair.left.dot(v);
        let wr = w.dot(&pair.right);
        Self {
            lv,
            wr,
            holds: lv.abs() > TOL_NZP && wr.abs() > TOL_NZP,
        }
    }
}

/// Strong connectivity of the digraph with an edge `i → j` iff `H[i][j] > 0`.
pub fn is_irreducible(h: &NonnegativeMatrix) -> bool {
    let m = h.matrix();
    let n = h.dim();
    let reaches_all = |edge: &dyn Fn(usize, usize) -> bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s && edge(i, j) {
                    *s = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reaches_all(&|i, j| m[(i, j)] > 0.0) && reaches_all(&|i, j| m[(j, i)] > 0.0)
}

/// Spectral radius of `H` and whether it is an algebraically simple
/// eigenvalue.
///
/// For a nonnegative matrix `ρ` is itself an eigenvalue, so it is read off
/// the largest real root of the characteristic polynomial. Other roots of
/// the same modulus (periodic matrices) do not affect simplicity.
pub fn spectral_radius(h: &NonnegativeMatrix) -> Result<SpectralRadius> {
    let eig = roots(&char_poly(h.matrix()))?;
    let max_modulus = eig.max_abs().unwrap_or(0.0);
    let largest_real = eig
        .roots
        .iter()
        .filter(|r| r.value.im == 0.0)
        .map(|r| r.value.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let rho = if (largest_real - max_modulus).abs() <= tol_cluster(max_modulus) {
        largest_real
    } else {
        max_modulus
    };
    let tol = tol_cluster(rho);
    let multiplicity: usize = eig
        .roots
        .iter()
        .filter(|r| (r.value - Complex64::new(rho, 0.0)).norm() <= tol)
        .map(|r| r.multiplicity)
        .sum();
    Ok(SpectralRadius {
        rho,
        simple: multiplicity == 1,
    })
}

/// Null vector of a square matrix with a one-dimensional kernel, by
/// complete-pivoting elimination with the last (smallest) pivot dropped.
fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut u = m.clone();
    let mut cols: Vec<usize> = (0..n).collect();
    for k in 0..n.saturating_sub(1) {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                let a = u[(i, j)].abs();
                if a > best {
                    best = a;
                    pr = i;
                    pc = j;
                }
            }
        }
        u.swap_rows(k, pr);
        u.swap_columns(k, pc);
        cols.swap(k, pc);
        if u[(k, k)] == 0.0 {
            continue;
        }
        for i in k + 1..n {
            let f = u[(i, k)] / u[(k, k)];
            if f != 0.0 {
                for j in k..n {
                    u[(i, j)] -= f * u[(k, j)];
                }
            }
        }
    }
    let mut y = DVector::zeros(n);
    y[n - 1] = 1.0;
    for i in (0..n - 1).rev() {
        let s: f64 = (i + 1..n).map(|j| u[(i, j)] * y[j]).sum();
        y[i] = if u[(i, i)] == 0.0 {
            0.0
        } else {
            -s / u[(i, i)]
        };
    }
    let mut x = DVector::zeros(n);
    for (k, &c) in cols.iter().enumerate() {
        x[c] = y[k];
    }
    x
}

fn normalize_sign(mut x: DVector<f64>) -> DVector<f64> {
    let nrm = x.norm();
    if nrm > 0.0 {
        x /= nrm;
    }
    let pivot = x
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if pivot < 0.0 {
        x = -x;
    }
    x
}

/// Unit right and left Perron vectors of `H`, sign-normalized so that the
/// largest-magnitude entry of each is positive.
pub fn perron_pair(h: &NonnegativeMatrix) -> Result<PerronPair> {
    let sr = spectral_radius(h)?;
    perron_pair_at(h, sr)
}

pub(crate) fn perron_pair_at(h: &NonnegativeMatrix, sr: SpectralRadius) -> Result<PerronPair> {
    if !sr.simple {
        return Err(Error::NotSimple);
    }
    let n = h.dim();
    let shifted = DMatrix::identity(n, n) * sr.rho - h.matrix();
    Ok(PerronPair {
        right: normalize_sign(null_vector(&shifted)),
        left: normalize_sign(null_vector(&shifted.transpose())),
        simple: true,
    })
}

pub(crate) fn check_vectors(n: usize, v: &DVector<f64>, w: &DVector<f64>) -> Result<()> {
    for x in [v, w] {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        if x.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::InvalidInput(
                "perturbation vectors must be finite and nonnegative".into(),
            ));
        }
    }
    Ok(())
}

pub fn check_nzp(h: &NonnegativeMatrix, v: &DVector<f64>, w: &DVector<f64>) -> Result<NzpReport> {
    check_vectors(h.dim(), v, w)?;
    let pair = perron_pair(h)?;
    Ok(NzpReport::from_pair(&pair, v, w))
}

pub fn to_m_matrix(h: &NonnegativeMatrix) -> Result<SingularMMatrix> {
    let sr = spectral_radius(h)?;
    Ok(SingularMMatrix::from_rho(h, sr.rho))
}

/// `adj(A)`, taken from the final Faddeev–LeVerrier auxiliary matrix so that
/// it is consistent with [`char_poly`].
pub fn adjugate(a: &DMatrix<f64>) -> DMatrix<f64> {
    faddeev_leverrier(a).adjugate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonneg(n: usize, vals: &[f64]) -> NonnegativeMatrix {
        NonnegativeMatrix::new(DMatrix::from_row_slice(n, n, vals)).unwrap()
    }

    fn circulant() -> NonnegativeMatrix {
        nonneg(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
    }

    fn counterexample_h() -> NonnegativeMatrix {
        nonneg(
            4,
            &[
                0.1, 1.0, 0.0, 0.0, //
                0.0, 0.1, 1.0, 0.0, //
                0.0, 0.0, 0.1, 1.0, //
                1e-4, 0.0, 0.0, 0.1,
            ],
        )
    }

    #[test]
    fn rejects_negative_and_non_square() {
        assert!(NonnegativeMatrix::new(DMatrix::from_row_slice(1, 1, &[-1.0])).is_err());
        assert!(NonnegativeMatrix::new(DMatrix::zeros(2, 3)).is_err());
        assert!(NonnegativeMatrix::new(DMatrix::zeros(0, 0)).is_err());
        assert!(NonnegativeMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&counterexample_h()));
        assert!(is_irreducible(&circulant()));
        assert!(!is_irreducible(&nonneg(2, &[1.0, 0.0, 0.0, 0.0])));
        // one-way chain
        assert!(!is_irreducible(&nonneg(2, &[0.0, 1.0, 0.0, 0.0])));
        assert!(is_irreducible(&nonneg(1, &[0.0])));
    }

    #[test]
    fn spectral_radius_examples() {
        let sr = spectral_radius(&counterexample_h()).unwrap();
        assert!((sr.rho - 0.2).abs() < 1e-12 && sr.simple);

        let h3 = nonneg(3, &[0.1, 1.0, 0.0, 0.0, 0.1, 1.0, 1e-4, 0.0, 0.1]);
        let sr = spectral_radius(&h3).unwrap();
        assert!((sr.rho - 0.1464).abs() < 5e-5 && sr.simple);

        let sr = spectral_radius(&circulant()).unwrap();
        assert!((sr.rho - 1.0).abs() < 1e-12 && sr.simple);
    }

    #[test]
    fn repeated_perron_root_is_not_simple() {
        let h = nonneg(2, &[1.0, 0.0, 0.0, 1.0]);
        let sr = spectral_radius(&h).unwrap();
        assert!((sr.rho - 1.0).abs() < 1e-12);
        assert!(!sr.simple);
        assert!(matches!(perron_pair(&h), Err(Error::NotSimple)));
    }

    #[test]
    fn perron_vectors() {
        let s = 1.0 / 2f64.sqrt();
        let pair = perron_pair(&nonneg(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        for x in pair.right.iter().chain(pair.left.iter()) {
            assert!((x - s).abs() < 1e-12);
        }

        let s = 1.0 / 3f64.sqrt();
        let pair = perron_pair(&circulant()).unwrap();
        for x in pair.right.iter().chain(pair.left.iter()) {
            assert!((x - s).abs() < 1e-12);
        }

        let h = counterexample_h();
        let pair = perron_pair(&h).unwrap();
        assert!(pair.right.iter().chain(pair.left.iter()).all(|x| *x > 0.0));
        let res = h.matrix() * &pair.right - &pair.right * 0.2;
        assert!(res.norm() <= tol_eig(h.matrix()));
        let res = h.matrix().transpose() * &pair.left - &pair.left * 0.2;
        assert!(res.norm() <= tol_eig(h.matrix()));
    }

    #[test]
    fn nzp_examples() {
        let h = nonneg(2, &[1.0, 0.0, 0.0, 0.0]);
        let r = check_nzp(
            &h,
            &DVector::from_vec(vec![1.0, 0.0]),
            &DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        assert!(!r.holds);
        assert_eq!(r.wr, 0.0);

        let r = check_nzp(
            &circulant(),
            &DVector::from_vec(vec![1.0, 0.0, 0.0]),
            &DVector::from_vec(vec![0.0, 6.0, 1.0]),
        )
        .unwrap();
        let s = 3f64.sqrt();
        assert!(r.holds);
        assert!((r.lv - 1.0 / s).abs() < 1e-12);
        assert!((r.wr - 7.0 / s).abs() < 1e-12);

        let bad = check_nzp(
            &circulant(),
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![1.0]),
        );
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn m_matrix_examples() {
        let a = to_m_matrix(&circulant()).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0, 1.0]);
        assert!((a.entries - want).abs().max() < 1e-12);

        let a = to_m_matrix(&nonneg(1, &[0.0])).unwrap();
        assert_eq!(a.entries[(0, 0)], 0.0);

        let a = to_m_matrix(&counterexample_h()).unwrap();
        for i in 0..4 {
            assert!((a.entries[(i, i)] - 0.1).abs() < 1e-12);
        }
        for i in 0..3 {
            assert_eq!(a.entries[(i, i + 1)], -1.0);
        }
        assert_eq!(a.entries[(3, 0)], -1e-4);
    }

    #[test]
    fn adjugate_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(adjugate(&a), DMatrix::from_element(2, 2, 1.0));
        assert_eq!(adjugate(&DMatrix::identity(3, 3)), DMatrix::identity(3, 3));
    }

    #[test]
    fn adjugate_matches_scaled_inverse() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -0.5, 0.3, 1.0, //
                0.7, 1.5, -1.2, 0.0, //
                -0.4, 0.9, 3.0, 0.6, //
                1.1, 0.0, -0.8, 2.2,
            ],
        );
        let inv = gauss_jordan_inverse(&a);
        let det = a.clone().determinant();
        let want = inv * det;
        let got = adjugate(&a);
        let scale = want.abs().max();
        assert!((got - want).abs().max() <= 1e-8 * scale);
    }

    // independent oracle: Gauss–Jordan with partial pivoting
    fn gauss_jordan_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let mut aug = DMatrix::zeros(n, 2 * n);
        aug.view_mut((0, 0), (n, n)).copy_from(a);
        aug.view_mut((0, n), (n, n)).fill_with_identity();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| aug[(i, k)].abs().total_cmp(&aug[(j, k)].abs()))
                .unwrap();
            aug.swap_rows(k, p);
            let piv = aug[(k, k)];
            for j in 0..2 * n {
                aug[(k, j)] /= piv;
            }
            for i in 0..n {
                if i != k {
                    let f = aug[(i, k)];
                    for j in 0..2 * n {
                        aug[(i, j)] -= f * aug[(k, j)];
                    }
                }
            }
        }
        aug.view((0, n), (n, n)).into_owned()
    }
}
