use num_complex::Complex64;
use rayon::prelude::*;

use super::{eigenvalues, p_vw_lemma16, PerturbationProblem};
use crate::error::{Error, Result};
use crate::poly::{roots, RootSet};

/// Eigenvalues of `B(t)` along a grid, matched into continuous paths.
#[derive(Clone, Debug)]
pub struct EigenCurveSet {
    pub t_grid: Vec<f64>,
    /// `paths[i][j]` is the i-th tracked eigenvalue at `t_grid[j]`.
    pub paths: Vec<Vec<Complex64>>,
    /// Spectrum of `A`, where the curves start as `t → 0`.
    pub a_eigs: RootSet,
    /// Roots of `p_vw`, the finite large-`t` limits.
    pub pvw_roots: RootSet,
}

impl EigenCurveSet {
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.paths.iter().map(|p| p[j]).collect()
    }

    pub fn last_column(&self) -> Vec<Complex64> {
        self.column(self.t_grid.len() - 1)
    }
}

/// `points` logarithmically spaced values from `t_min` to `t_max`
/// inclusive; a single point when the bounds coincide.
pub fn log_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    if points <= 1 || t_min == t_max {
        return vec![t_min];
    }
    let (a, b) = (t_min.log10(), t_max.log10());
    (0..points)
        .map(|k| {
            if k == 0 {
                t_min
            } else if k == points - 1 {
                t_max
            } else {
                10f64.powf(a + (b - a) * k as f64 / (points - 1) as f64)
            }
        })
        .collect()
}

pub fn trace_eigenvalues(
    prob: &PerturbationProblem,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<EigenCurveSet> {
    if !(t_min > 0.0 && t_min < t_max) {
        return Err(Error::InvalidInput(format!(
            "need 0 < t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidInput("need at least two grid points".into()));
    }
    trace_eigenvalues_on_grid(prob, &log_grid(t_min, t_max, points))
}

/// Traces eigenvalues over an arbitrary increasing grid of positive values.
/// Columns are evaluated in parallel; the result does not depend on
/// scheduling.
pub fn trace_eigenvalues_on_grid(
    prob: &PerturbationProblem,
    grid: &[f64],
) -> Result<EigenCurveSet> {
    if grid.is_empty()
        || grid
            .iter()
            .any(|t| !t.is_finite() || *t <= 0.0)
    {
        return Err(Error::InvalidInput(
            "grid must be nonempty and positive".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("grid must be increasing".into()));
    }
    let columns: Vec<Vec<Complex64>> = grid
        .par_iter()
        .map(|&t| {
            eigenvalues(&prob.b_of_t(t))
                .map(|e| e.values())
                .map_err(|source| Error::AtParameter {
                    t,
                    source: Box::new(source),
                })
        })
        .collect::<Result<_>>()?;

    let n = prob.dim();
    let mut paths: Vec<Vec<Complex64>> = columns[0].iter().map(|&z| vec![z]).collect();
    for col in &columns[1..] {
        let tails: Vec<Complex64> = paths.iter().map(|p| *p.last().unwrap()).collect();
        let assignment = greedy_match(&tails, col);
        for (i, j) in assignment.into_iter().enumerate() {
            paths[i].push(col[j]);
        }
    }
    debug_assert!(paths.len() == n);

    let pvw = p_vw_lemma16(prob)?;
    let pvw_roots = if pvw.is_zero() {
        RootSet::default()
    } else {
        roots(&pvw)?
    };
    Ok(EigenCurveSet {
        t_grid: grid.to_vec(),
        paths,
        a_eigs: eigenvalues(prob.a())?,
        pvw_roots,
    })
}

/// Repeatedly pairs the closest unassigned (previous, next) points; ties go
/// to the lower index pair. Returns `next` index for each previous point.
fn greedy_match(prev: &[Complex64], next: &[Complex64]) -> Vec<usize> {
    let n = prev.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            pairs.push(((p - q).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![usize::MAX; n];
    let mut taken = vec![false; next.len()];
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !taken[j] {
            out[i] = j;
            taken[j] = true;
        }
    }
    out
}
