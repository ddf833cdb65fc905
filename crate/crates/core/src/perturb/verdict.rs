use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    asymptotics, eigenvalues, log_grid, p_vw_lemma16, AsymptoticCase, PerturbationProblem,
};
use crate::poly::{routh_hurwitz, HurwitzStatus, HurwitzVerdict, Root, RootSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityStatus {
    /// Every eigenvalue of `B(t)` lies in the open right half plane for all
    /// large enough `t`.
    EventuallyStable,
    EventuallyUnstable,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub status: StabilityStatus,
    /// Roots of `p_vw`, or the limiting points of divergent branches, that
    /// establish the status.
    pub witness_roots: RootSet,
    pub hurwitz: Option<HurwitzVerdict>,
    /// Limiting real part of the `√t` branches when `wᵀv = 0`.
    pub branch_limit_re: Option<f64>,
    pub t1_estimate: Option<f64>,
    pub reason: Option<String>,
}

impl StabilityVerdict {
    fn indeterminate(reason: impl Into<String>) -> Self {
        Self {
            status: StabilityStatus::Indeterminate,
            witness_roots: RootSet::default(),
            hurwitz: None,
            branch_limit_re: None,
            t1_estimate: None,
            reason: Some(reason.into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    /// Run [`estimate_threshold`] for stable problems.
    pub estimate_threshold: bool,
    pub t_max: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            estimate_threshold: true,
            t_max: 1e6,
        }
    }
}

pub fn classify(prob: &PerturbationProblem) -> StabilityVerdict {
    classify_with(prob, &ClassifyOptions::default())
}

/// Decides eventual stability of `B(t)`.
///
/// With `wᵀv > 0` the answer is the Routh–Hurwitz verdict on `p_vw`. With
/// `wᵀv = 0 ≠ wᵀAv` two branches behave like `±√(t·wᵀAv) + ½·wᵀA²v/wᵀAv`;
/// a nonpositive constant makes the problem unstable, a positive one is left
/// indeterminate. When `wᵀv = wᵀAv = 0` at least three branches diverge
/// like `(t·wᵀAʲv)^(1/(j+1))` along rays spaced at most 120° apart, so one
/// of them ends in the open left half plane.
pub fn classify_with(prob: &PerturbationProblem, opts: &ClassifyOptions) -> StabilityVerdict {
    if !prob.nzp().holds {
        return StabilityVerdict::indeterminate("NZP condition fails");
    }
    let report = match asymptotics(prob) {
        Ok(r) => r,
        Err(e) => return StabilityVerdict::indeterminate(format!("asymptotics failed: {e}")),
    };

    let mut verdict = match report.case {
        AsymptoticCase::WvPositive => {
            let pvw = match p_vw_lemma16(prob) {
                Ok(p) => p,
                Err(e) => return StabilityVerdict::indeterminate(format!("p_vw failed: {e}")),
            };
            let hv = routh_hurwitz(&pvw);
            let status = match hv.status {
                HurwitzStatus::AllOpenRight => StabilityStatus::EventuallyStable,
                HurwitzStatus::NotAllOpenRight => StabilityStatus::EventuallyUnstable,
                HurwitzStatus::Marginal => StabilityStatus::Indeterminate,
            };
            StabilityVerdict {
                status,
                witness_roots: report.finite_limits.clone(),
                hurwitz: Some(hv),
                branch_limit_re: None,
                t1_estimate: None,
                reason: (hv.status == HurwitzStatus::Marginal)
                    .then(|| "p_vw has a root on or near the imaginary axis".to_string()),
            }
        }
        AsymptoticCase::WvZeroWAvNonzero => {
            let wav = report.moments[1];
            let constant = 0.5 * report.moments[2] / wav;
            let finite_bad = report.finite_limits.roots.iter().any(|r| r.value.re <= 0.0);
            let mut witness = report.finite_limits.clone();
            witness.roots.push(Root {
                value: Complex64::new(constant, 0.0),
                multiplicity: 2,
            });
            let (status, reason) = if wav > 0.0 {
                (
                    StabilityStatus::EventuallyUnstable,
                    Some("a real branch escapes to −∞".to_string()),
                )
            } else if constant <= 0.0 || finite_bad {
                (StabilityStatus::EventuallyUnstable, None)
            } else {
                (
                    StabilityStatus::Indeterminate,
                    Some(
                        "√t branches approach a line in the right half plane; no criterion".into(),
                    ),
                )
            };
            StabilityVerdict {
                status,
                witness_roots: witness,
                hurwitz: None,
                branch_limit_re: Some(constant),
                t1_estimate: None,
                reason,
            }
        }
        AsymptoticCase::WvZeroWAvZero => {
            if report.divergent_branches.len() < 3 {
                return StabilityVerdict::indeterminate("no divergent branches");
            }
            let directions: Vec<Complex64> = report
                .divergent_branches
                .iter()
                .map(|b| b.leading)
                .collect();
            StabilityVerdict {
                status: StabilityStatus::EventuallyUnstable,
                witness_roots: RootSet::from_values(&directions),
                hurwitz: None,
                branch_limit_re: None,
                t1_estimate: None,
                reason: Some(format!(
                    "{} branches diverge along evenly spaced rays",
                    directions.len()
                )),
            }
        }
    };

    if verdict.status == StabilityStatus::EventuallyStable && opts.estimate_threshold {
        verdict.t1_estimate = estimate_threshold(prob, opts.t_max);
    }
    verdict
}

/// Smallest real part over the spectrum of `B(t)`.
pub fn min_real_part(prob: &PerturbationProblem, t: f64) -> Option<f64> {
    eigenvalues(&prob.b_of_t(t)).ok().and_then(|e| e.min_re())
}

/// Default search range lower bound for [`estimate_threshold`].
const THRESHOLD_T_MIN: f64 = 1e-3;
const THRESHOLD_POINTS: usize = 200;

/// Estimates `t₁` such that `B(t)` is stable on every sampled `t ∈ [t₁, t_max]`.
pub fn estimate_threshold(prob: &PerturbationProblem, t_max: f64) -> Option<f64> {
    estimate_threshold_on(prob, THRESHOLD_T_MIN, t_max, THRESHOLD_POINTS)
}

/// Scans a log grid on `[t_min, t_max]` for the last point where some
/// eigenvalue has `Re ≤ 0`, then bisects to the following stable grid
/// point. Returns `t_min` when every sample is stable and `None` when the
/// last sample is not.
pub fn estimate_threshold_on(
    prob: &PerturbationProblem,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Option<f64> {
    if !(t_min > 0.0 && t_max >= t_min) {
        return None;
    }
    let grid = log_grid(t_min, t_max, points);
    let stable = |t: f64| min_real_part(prob, t).map(|m| m > 0.0);
    let mut flags = Vec::with_capacity(grid.len());
    for &t in &grid {
        flags.push(stable(t)?);
    }
    let Some(last_bad) = flags.iter().rposition(|s| !s) else {
        return Some(grid[0]);
    };
    if last_bad + 1 == grid.len() {
        return None;
    }
    let (mut lo, mut hi) = (grid[last_bad], grid[last_bad + 1]);
    for _ in 0..60 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = (lo * hi).sqrt();
        if stable(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}
