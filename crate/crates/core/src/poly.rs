//! Real-coefficient polynomials: characteristic and minimal polynomials,
//! simultaneous root finding and the Routh–Hurwitz test for the open right
//! half plane.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which a leading coefficient is treated as zero.
pub const EPS_LEAD: f64 = 1e-12;
/// Maximum number of simultaneous-iteration sweeps.
pub const MAX_ITER: usize = 200;
/// Relative step size at which a root estimate is considered converged.
pub const ROOT_STEP_TOL: f64 = 1e-13;
/// Upper bound on the scaled backward residual of an accepted root set.
pub const TOL_ROOT: f64 = 1e-9;
/// Conjugate-pairing tolerance for roots of real polynomials.
pub const TOL_CONJ: f64 = 1e-9;
/// Relative cutoff on singular values for Krylov rank decisions.
pub const TOL_RANK: f64 = 1e-9;
/// Relative annihilation tolerance for the minimal polynomial.
pub const TOL_MINPOLY: f64 = 1e-8;
/// Relative cancellation threshold for Routh array pivots.
pub const TOL_PIVOT: f64 = 1e-10;

const TOL_SNAP_REAL: f64 = 1e-10;
const CLUSTER_CANDIDATE: f64 = 1e-3;

/// Polynomial with real coefficients stored in ascending degree order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            return Self::zero();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// Monic polynomial with the given roots. Complex roots should come in
    /// conjugate pairs; imaginary residue of the product is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, &c) in acc.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `λ^k`, zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    fn trimmed_len(&self) -> usize {
        let cutoff = EPS_LEAD * self.max_abs_coeff();
        self.coeffs
            .iter()
            .rposition(|c| c.abs() > cutoff)
            .map_or(0, |i| i + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.trimmed_len() == 0
    }

    /// Index of the last coefficient above the relative lead threshold; the
    /// zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        self.trimmed_len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeff(self.degree())
    }

    /// Drops coefficients above [`degree`](Self::degree).
    pub fn trimmed(&self) -> Self {
        let len = self.trimmed_len().max(1);
        let mut coeffs = self.coeffs[..len].to_vec();
        if self.is_zero() {
            coeffs = vec![0.0];
        }
        Self { coeffs }
    }

    pub fn monic(&self) -> Self {
        let t = self.trimmed();
        let lead = t.leading();
        Self::new(t.coeffs.iter().map(|c| c / lead).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `p(-λ)`.
    pub fn reflect(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 0 { *c } else { -*c })
                .collect(),
        )
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Evaluates the polynomial with absolute coefficients at `x ≥ 0`; the
    /// natural scale for backward-error estimates.
    fn eval_abs(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.abs())
    }

    /// Euclidean division by `divisor` (whose degree is taken after
    /// trimming). Returns `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let d = divisor.trimmed();
        if d.is_zero() {
            return Err(Error::InvalidInput(
                "division by the zero polynomial".into(),
            ));
        }
        let dd = d.degree();
        let lead = d.leading();
        let mut rem = self.trimmed().coeffs;
        if rem.len() <= dd {
            return Ok((Self::zero(), Self::new(rem)));
        }
        let mut quot = vec![0.0; rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, c) in d.coeffs.iter().enumerate() {
                rem[k + j] -= q * c;
            }
        }
        rem.truncate(dd.max(1));
        if dd == 0 {
            rem = vec![0.0];
        }
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Coefficients of `p(c + x)`, i.e. the scaled derivatives `p⁽ʲ⁾(c)/j!`.
    fn taylor_at(&self, c: Complex64) -> Vec<Complex64> {
        let mut a: Vec<Complex64> = self
            .coeffs
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let n = a.len();
        for j in 0..n {
            for k in (j..n - 1).rev() {
                let next = a[k + 1];
                a[k] += c * next;
            }
        }
        a
    }

    fn taylor_abs_at(&self, x: f64) -> Vec<f64> {
        let mut a: Vec<f64> = self.coeffs.iter().map(|c| c.abs()).collect();
        let n = a.len();
        for j in 0..n {
            for k in (j..n - 1).rev() {
                a[k] += x * a[k + 1];
            }
        }
        a
    }
}

/// A root together with its detected multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    /// Largest scaled residual over the roots.
    pub residual: f64,
}

impl RootSet {
    pub fn from_values(values: &[Complex64]) -> Self {
        Self {
            roots: values
                .iter()
                .map(|&value| Root {
                    value,
                    multiplicity: 1,
                })
                .collect(),
            residual: 0.0,
        }
    }

    /// Roots expanded by multiplicity.
    pub fn values(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
            .collect()
    }

    /// Number of roots counted with multiplicity.
    pub fn count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn min_re(&self) -> Option<f64> {
        self.roots.iter().map(|r| r.value.re).reduce(f64::min)
    }

    pub fn max_abs(&self) -> Option<f64> {
        self.roots.iter().map(|r| r.value.norm()).reduce(f64::max)
    }
}

/// Characteristic polynomial together with the final Faddeev–LeVerrier
/// auxiliary matrix, from which the adjugate follows.
#[derive(Clone, Debug)]
pub struct FaddeevLeverrier {
    pub poly: RealPolynomial,
    /// `M_n` with `A·M_n = −c₀·I`.
    pub last_auxiliary: DMatrix<f64>,
}

impl FaddeevLeverrier {
    /// `adj(A) = (−1)^(n+1)·M_n`.
    pub fn adjugate(&self) -> DMatrix<f64> {
        let n = self.last_auxiliary.nrows();
        if n % 2 == 1 {
            self.last_auxiliary.clone()
        } else {
            -&self.last_auxiliary
        }
    }
}

pub fn faddeev_leverrier(a: &DMatrix<f64>) -> FaddeevLeverrier {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let identity = DMatrix::<f64>::identity(n, n);
    let mut m = identity.clone();
    for k in 1..=n {
        if k > 1 {
            m = a * &m + &identity * coeffs[n - k + 1];
        }
        let am = a * &m;
        coeffs[n - k] = -am.trace() / k as f64;
    }
    FaddeevLeverrier {
        poly: RealPolynomial::new(coeffs),
        last_auxiliary: m,
    }
}

/// Monic `det(λI − A)`.
pub fn char_poly(a: &DMatrix<f64>) -> RealPolynomial {
    faddeev_leverrier(a).poly
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Minimal polynomial of `A` from the rank of the Krylov sequence
/// `vec(I), vec(A), vec(A²), …`.
///
/// The sequence is orthonormalized as it is built (Arnoldi in the Frobenius
/// inner product), since the raw powers all drift towards the dominant
/// eigendirection and look dependent long before they are. Step `k` is
/// dependent when the new direction retains at most `TOL_RANK/10` of its
/// norm, ambiguous below `10·TOL_RANK`. With `l` independent terms,
/// `Â·Q = Q·T` for an `l × l` Hessenberg `T`, and `m_Â` is the
/// characteristic polynomial of `T`.
///
/// Matrices whose eigenvalues all have geometric multiplicity one are
/// nonderogatory and get `char_poly` directly; this keeps distinct but
/// close eigenvalues, which make the Krylov basis nearly singular, out of
/// the rank decision.
pub fn minimal_poly(a: &DMatrix<f64>) -> Result<RealPolynomial> {
    let n = a.nrows();
    let scale = frobenius(a);
    if scale == 0.0 {
        return Ok(RealPolynomial::new(vec![0.0, 1.0]));
    }
    if clearly_nonderogatory(a, scale) {
        return Ok(char_poly(a));
    }
    let a_hat = a / scale;
    let identity = DMatrix::<f64>::identity(n, n);
    let mut basis: Vec<DMatrix<f64>> = vec![&identity / frobenius(&identity)];
    let mut hess = DMatrix::<f64>::zeros(n + 1, n);

    let mut degree = n;
    for k in 1..=n {
        let mut next = &a_hat * &basis[k - 1];
        let before = frobenius(&next);
        // two passes of Gram–Schmidt
        for _ in 0..2 {
            for (j, q) in basis.iter().enumerate() {
                let c = next.dot(q);
                hess[(j, k - 1)] += c;
                next -= q * c;
            }
        }
        let after = frobenius(&next);
        let ratio = if before > 0.0 { after / before } else { 0.0 };
        if ratio <= TOL_RANK / 10.0 {
            degree = k;
            break;
        }
        if ratio < TOL_RANK * 10.0 {
            return Err(Error::IllConditioned(format!(
                "Krylov rank at step {k} undecided: relative residual {ratio:e}"
            )));
        }
        if k < n {
            hess[(k, k - 1)] = after;
            basis.push(next / after);
        }
    }

    let poly = if degree == n {
        char_poly(a)
    } else {
        let t = hess.view((0, 0), (degree, degree)).into_owned();
        let monic_hat = char_poly(&t);
        let coeffs: Vec<f64> = (0..=degree)
            .map(|k| monic_hat.coeff(k) * scale.powi((degree - k) as i32))
            .collect();
        RealPolynomial::new(coeffs)
    };

    // annihilation check: ‖m(A)‖ relative to ‖A‖^deg
    let annihilated = eval_matrix(&poly, a);
    let bound = TOL_MINPOLY * scale.max(1.0).powi(degree as i32);
    if frobenius(&annihilated) > bound * (n as f64) {
        return Err(Error::IllConditioned(format!(
            "minimal polynomial residual {:e} exceeds {:e}",
            frobenius(&annihilated),
            bound
        )));
    }
    Ok(poly)
}

/// Relative second-smallest singular value of `A − λI` below which an
/// eigenvalue `λ` may have a second eigenvector.
const TOL_GEOMETRIC: f64 = 1e-5;

fn clearly_nonderogatory(a: &DMatrix<f64>, scale: f64) -> bool {
    let n = a.nrows();
    if n == 1 {
        return true;
    }
    let Ok(eig) = roots(&char_poly(a)) else {
        return false;
    };
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let identity = DMatrix::<Complex64>::identity(n, n);
    eig.roots.iter().all(|r| {
        let mut sv: Vec<f64> = (&ac - &identity * r.value)
            .singular_values()
            .iter()
            .copied()
            .collect();
        sv.sort_by(f64::total_cmp);
        sv[1] > TOL_GEOMETRIC * scale
    })
}

/// Horner evaluation of `p(A)`.
pub fn eval_matrix(p: &RealPolynomial, a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let identity = DMatrix::<f64>::identity(n, n);
    p.coeffs()
        .iter()
        .rev()
        .fold(DMatrix::zeros(n, n), |acc, &c| a * acc + &identity * c)
}

/// All complex roots of `p` by Aberth–Ehrlich simultaneous iteration.
///
/// Roots of real polynomials are returned conjugate-symmetric; clusters
/// that numerically behave like a multiple root are merged and reported
/// with their multiplicity. A nonzero constant has no roots.
pub fn roots(p: &RealPolynomial) -> Result<RootSet> {
    let p = p.trimmed();
    if p.is_zero() {
        return Err(Error::InvalidInput("roots of the zero polynomial".into()));
    }
    let deg = p.degree();
    if deg == 0 {
        return Ok(RootSet::default());
    }

    // exact zero roots
    let zeros = p.coeffs().iter().take_while(|c| **c == 0.0).count();
    let reduced = RealPolynomial::new(p.coeffs()[zeros..].to_vec());
    let mut values = vec![Complex64::new(0.0, 0.0); zeros];
    values.extend(match reduced.degree() {
        0 => Vec::new(),
        1 => vec![Complex64::new(-reduced.coeff(0) / reduced.coeff(1), 0.0)],
        2 => quadratic_roots(reduced.coeff(2), reduced.coeff(1), reduced.coeff(0)),
        _ => aberth(&reduced)?,
    });

    let values = merge_clusters(&p, values);
    let values = pair_conjugates(values);
    let mut roots = greedy_multiplicity(values);
    roots.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });

    let residual = roots
        .iter()
        .map(|r| scaled_residual(&p, r.value))
        .fold(0.0, f64::max);
    if residual > TOL_ROOT {
        return Err(Error::ConvergenceFailure {
            iterations: MAX_ITER,
        });
    }
    Ok(RootSet { roots, residual })
}

fn scaled_residual(p: &RealPolynomial, z: Complex64) -> f64 {
    let scale = p.eval_abs(z.norm());
    if scale == 0.0 {
        0.0
    } else {
        p.eval_complex(z).norm() / scale
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let q = -0.5 * (b + b.signum() * s);
        if q == 0.0 {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        vec![Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn aberth(p: &RealPolynomial) -> Result<Vec<Complex64>> {
    let deg = p.degree();
    let lead = p.leading();
    let monic: Vec<f64> = p.coeffs()[..=deg].iter().map(|c| c / lead).collect();
    let monic = RealPolynomial::new(monic);
    let dp = monic.derivative();

    let radius = 1.0
        + monic.coeffs()[..deg]
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()));
    let offset = 0.4;
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + offset;
            Complex64::from_polar(radius, theta)
        })
        .collect();
    let mut done = vec![false; deg];

    for _ in 0..MAX_ITER {
        for i in 0..deg {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let pz = monic.eval_complex(zi);
            let backward = 8.0 * deg as f64 * f64::EPSILON * monic.eval_abs(zi.norm());
            if pz.norm() <= backward {
                done[i] = true;
                continue;
            }
            let ratio = pz / dp.eval_complex(zi);
            let repulsion: Complex64 = z
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &zj)| {
                    let d = zi - zj;
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                continue;
            }
            z[i] = zi - step;
            if step.norm() <= ROOT_STEP_TOL * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            }
        }
        if done.iter().all(|d| *d) {
            return Ok(z);
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: MAX_ITER,
    })
}

/// Replaces groups of nearby roots by their centroid when the polynomial
/// behaves like it has a root of that multiplicity there.
fn merge_clusters(p: &RealPolynomial, values: Vec<Complex64>) -> Vec<Complex64> {
    let n = values.len();
    let mut group = (0..n).collect::<Vec<_>>();
    fn find(g: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while g[r] != r {
            r = g[r];
        }
        g[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = values[i].norm().max(values[j].norm()).max(1.0);
            if (values[i] - values[j]).norm() <= CLUSTER_CANDIDATE * scale {
                let (a, b) = (find(&mut group, i), find(&mut group, j));
                group[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for i in 0..n {
        let root = find(&mut group, i);
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let members: Vec<Complex64> = (0..n)
            .filter(|&j| find(&mut group, j) == root)
            .map(|j| values[j])
            .collect();
        if members.len() == 1 {
            out.push(members[0]);
            continue;
        }
        let m = members.len();
        let centroid = members.iter().sum::<Complex64>() / m as f64;
        let centroid = refine_multiple_root(p, centroid, m);
        if behaves_like_multiple_root(p, centroid, m) {
            out.extend(std::iter::repeat_n(centroid, m));
        } else {
            out.extend(members);
        }
    }
    out
}

/// Newton on `p⁽ᵐ⁻¹⁾`, for which a root of multiplicity `m` is simple.
fn refine_multiple_root(p: &RealPolynomial, start: Complex64, m: usize) -> Complex64 {
    let mut d = p.clone();
    for _ in 1..m {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut z = start;
    for _ in 0..8 {
        let step = d.eval_complex(z) / dd.eval_complex(z);
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= f64::EPSILON * z.norm() {
            break;
        }
    }
    if (z - start).norm() <= CLUSTER_CANDIDATE * start.norm().max(1.0) {
        z
    } else {
        start
    }
}

fn behaves_like_multiple_root(p: &RealPolynomial, c: Complex64, m: usize) -> bool {
    let taylor = p.taylor_at(c);
    let bound = p.taylor_abs_at(c.norm());
    let factor = 64.0 * p.coeffs().len() as f64 * f64::EPSILON;
    (0..m).all(|j| taylor[j].norm() <= factor * bound[j])
}

/// Pairs each upper-half-plane value with a lower one, closest pairs first,
/// and replaces both by the symmetrized pair. A pair is only accepted when
/// the partners are closer to each other than to the real axis; leftovers
/// are near-real roots and are snapped onto the axis.
fn pair_conjugates(values: Vec<Complex64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(values.len());
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in values {
        if z.im.abs() <= TOL_SNAP_REAL * z.norm().max(1.0) {
            out.push(Complex64::new(z.re, 0.0));
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(upper.len() * lower.len());
    for (i, u) in upper.iter().enumerate() {
        for (j, l) in lower.iter().enumerate() {
            pairs.push(((u - l.conj()).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_u = vec![false; upper.len()];
    let mut used_l = vec![false; lower.len()];
    for (d, i, j) in pairs {
        if used_u[i] || used_l[j] {
            continue;
        }
        let (u, l) = (upper[i], lower[j]);
        if d >= u.im.min(-l.im) {
            continue;
        }
        used_u[i] = true;
        used_l[j] = true;
        let avg = (u + l.conj()) / 2.0;
        out.push(avg);
        out.push(avg.conj());
    }
    let leftovers = upper
        .iter()
        .zip(&used_u)
        .chain(lower.iter().zip(&used_l))
        .filter(|(_, used)| !**used);
    out.extend(leftovers.map(|(z, _)| Complex64::new(z.re, 0.0)));
    out
}

fn greedy_multiplicity(values: Vec<Complex64>) -> Vec<Root> {
    let mut roots: Vec<Root> = Vec::new();
    for z in values {
        let tol = 1e-8 * z.norm().max(1.0);
        match roots.iter_mut().find(|r| (r.value - z).norm() <= tol) {
            Some(r) => {
                let m = r.multiplicity as f64;
                r.value = (r.value * m + z) / (m + 1.0);
                r.multiplicity += 1;
            }
            None => roots.push(Root {
                value: z,
                multiplicity: 1,
            }),
        }
    }
    roots
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HurwitzStatus {
    AllOpenRight,
    NotAllOpenRight,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HurwitzVerdict {
    pub status: HurwitzStatus,
    /// Row of the Routh array where the test first failed.
    pub first_failure: Option<usize>,
}

/// Decides whether every root of `p` lies in the open right half plane by
/// running the Routh array on `p(−λ)`.
///
/// A constant polynomial has no roots and passes vacuously.
pub fn routh_hurwitz(p: &RealPolynomial) -> HurwitzVerdict {
    let q = p.trimmed().reflect();
    let deg = q.degree();
    let pass = HurwitzVerdict {
        status: HurwitzStatus::AllOpenRight,
        first_failure: None,
    };
    if deg == 0 {
        return pass;
    }
    let lead = q.leading();
    let desc: Vec<f64> = (0..=deg).rev().map(|k| q.coeff(k) / lead).collect();
    let width = deg / 2 + 1;
    let row = |start: usize| -> Vec<f64> {
        (0..width)
            .map(|j| desc.get(start + 2 * j).copied().unwrap_or(0.0))
            .collect()
    };
    let mut prev = row(0);
    let mut cur = row(1);
    let coeff_scale = desc.iter().fold(0.0_f64, |m, c| m.max(c.abs()));

    if cur[0].abs() <= TOL_PIVOT * coeff_scale {
        return HurwitzVerdict {
            status: HurwitzStatus::Marginal,
            first_failure: Some(1),
        };
    }
    if cur[0] < 0.0 {
        return HurwitzVerdict {
            status: HurwitzStatus::NotAllOpenRight,
            first_failure: Some(1),
        };
    }
    for r in 2..=deg {
        let mut next = vec![0.0; width];
        let mut magnitude = 0.0_f64;
        for (j, slot) in next.iter_mut().take(width - 1).enumerate() {
            let a = prev.get(j + 1).copied().unwrap_or(0.0);
            let b = prev[0] * cur.get(j + 1).copied().unwrap_or(0.0) / cur[0];
            *slot = a - b;
            if j == 0 {
                magnitude = a.abs() + b.abs();
            }
        }
        if next[0].abs() <= TOL_PIVOT * magnitude || next[0] == 0.0 {
            return HurwitzVerdict {
                status: HurwitzStatus::Marginal,
                first_failure: Some(r),
            };
        }
        if next[0] < 0.0 {
            return HurwitzVerdict {
                status: HurwitzStatus::NotAllOpenRight,
                first_failure: Some(r),
            };
        }
        prev = cur;
        cur = next;
    }
    pass
}
