//! Reference instances and a randomized search for problems whose
//! perturbed spectrum does not end up in the open right half plane.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{inf_norm, NonnegativeMatrix, TOL_NZP};
use crate::perturb::{
    classify_with, min_real_part, p_vw_lemma16, ClassifyOptions, PerturbationProblem,
    StabilityStatus, StabilityVerdict,
};
use crate::poly::RealPolynomial;

/// Environment variable capping the number of search threads.
pub const THREADS_ENV: &str = "PERRON_PERTURB_THREADS";

const MAX_ATTEMPTS: usize = 1000;

fn problem(h: DMatrix<f64>, v: &[f64], w: &[f64]) -> PerturbationProblem {
    let h = NonnegativeMatrix::new(h).expect("reference matrix is nonnegative");
    PerturbationProblem::new(
        h,
        DVector::from_column_slice(v),
        DVector::from_column_slice(w),
    )
    .expect("reference instance is valid")
}

/// `0.1·I + J + 10⁻ⁿ·e_n e_1ᵀ`, where `J` is the upper shift. Its
/// eigenvalues are `0.1 + 0.1·ω` for the n-th roots of unity `ω`, so
/// `ρ = 0.2` for every `n`.
pub fn cycle_family(n: usize) -> Result<NonnegativeMatrix> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("family needs n ≥ 4, got {n}")));
    }
    let mut h = DMatrix::identity(n, n) * 0.1;
    for i in 0..n - 1 {
        h[(i, i + 1)] = 1.0;
    }
    h[(n - 1, 0)] = 10f64.powi(-(n as i32));
    NonnegativeMatrix::new(h)
}

/// [`cycle_family`] with `v = (2, 0.1, …, 0.1, 2)` and `w = (2, 0.1, 2, 0.1, …)`.
/// For `n = 4` this is [`counterexample_4`].
pub fn family_problem(n: usize) -> Result<PerturbationProblem> {
    let h = cycle_family(n)?;
    let mut v = DVector::from_element(n, 0.1);
    v[0] = 2.0;
    v[n - 1] = 2.0;
    let w = DVector::from_fn(n, |i, _| if i % 2 == 0 { 2.0 } else { 0.1 });
    PerturbationProblem::new(h, v, w)
}

/// Four-dimensional problem with `wᵀv > 0` whose perturbation polynomial has
/// two roots in the left half plane.
pub fn counterexample_4() -> PerturbationProblem {
    let h = cycle_family(4).expect("n = 4").matrix().clone();
    problem(h, &[2.0, 0.1, 0.1, 2.0], &[2.0, 0.1, 2.0, 0.1])
}

/// Eventually stable three-dimensional problem whose eigenvalues leave the
/// right half plane for intermediate `t`.
pub fn transient_3() -> PerturbationProblem {
    let h = DMatrix::from_row_slice(3, 3, &[0.1, 1.0, 0.0, 0.0, 0.1, 1.0, 1e-4, 0.0, 0.1]);
    problem(h, &[0.6, 0.1, 0.3], &[0.5, 1.0, 1.0])
}

fn cyclic_shift_3() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
}

/// Cyclic permutation `H` with `v = e₁`, `w = (0, 6, 1)`: `wᵀv = 0` and
/// `char_poly(B(t)) = λ³ − 3λ² + 3λ + t(λ − 7)`.
pub fn circulant_3() -> PerturbationProblem {
    problem(cyclic_shift_3(), &[1.0, 0.0, 0.0], &[0.0, 6.0, 1.0])
}

/// [`circulant_3`] with `w = e₂`, where `wᵀv = wᵀAv = 0`.
pub fn circulant_3_variant() -> PerturbationProblem {
    problem(cyclic_shift_3(), &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0])
}

/// Constraint on `wᵀv` for sampled problems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum WvConstraint {
    #[default]
    Any,
    /// `wᵀv > TOL_NZP`.
    Positive,
    /// `v` and `w` get disjoint supports.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Off-cycle entries of `H` and entries of `v`, `w` are uniform on
    /// `[0, entry_scale]`.
    pub entry_scale: f64,
    /// Forced cycle entries of `H` are uniform on `(0, cycle_scale]`.
    pub cycle_scale: f64,
    /// Probability that an individual entry is zero.
    pub sparsity: f64,
    /// Force `H[i][i+1] > 0` and `H[n−1][0] > 0`, making `H` irreducible.
    pub force_cycle: bool,
    pub wv: WvConstraint,
    pub allow_reducible: bool,
    /// Evaluate a known unstable instance (and jittered copies) in place of
    /// some samples; see [`injected_problem`].
    pub inject_paper: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n: 4,
            samples: 1000,
            seed: 0,
            entry_scale: 1.0,
            cycle_scale: 1.0,
            sparsity: 0.3,
            force_cycle: false,
            wv: WvConstraint::Any,
            allow_reducible: false,
            inject_paper: false,
        }
    }
}

impl SearchConfig {
    pub fn new(n: usize, samples: usize, seed: u64) -> Self {
        Self {
            n,
            samples,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!(
                "search needs n ≥ 2, got {}",
                self.n
            )));
        }
        if !(self.entry_scale > 0.0 && self.cycle_scale > 0.0) {
            return Err(Error::InvalidInput("entry scales must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::InvalidInput("sparsity must lie in [0, 1]".into()));
        }
        if self.inject_paper && self.n < 3 {
            return Err(Error::InvalidInput(
                "no known unstable instance for n = 2".into(),
            ));
        }
        Ok(())
    }
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn sparse_entry(rng: &mut ChaCha8Rng, scale: f64, sparsity: f64) -> f64 {
    let keep = rng.random::<f64>() >= sparsity;
    let x = rng.random::<f64>() * scale;
    if keep {
        x
    } else {
        0.0
    }
}

fn draw(config: &SearchConfig, rng: &mut ChaCha8Rng) -> Option<PerturbationProblem> {
    let n = config.n;
    let mut h = DMatrix::from_fn(n, n, |_, _| 0.0);
    for x in h.iter_mut() {
        *x = sparse_entry(rng, config.entry_scale, config.sparsity);
    }
    if config.force_cycle {
        for i in 0..n {
            // (0, 1] rather than [0, 1)
            h[(i, (i + 1) % n)] = (1.0 - rng.random::<f64>()) * config.cycle_scale;
        }
    }
    let mut v = DVector::from_fn(n, |_, _| {
        sparse_entry(rng, config.entry_scale, config.sparsity)
    });
    let mut w = DVector::from_fn(n, |_, _| {
        sparse_entry(rng, config.entry_scale, config.sparsity)
    });
    if config.wv == WvConstraint::Zero {
        for i in 0..n {
            if rng.random::<bool>() {
                v[i] = 0.0;
            } else {
                w[i] = 0.0;
            }
        }
    }
    if v.iter().all(|x| *x <= 0.0) || w.iter().all(|x| *x <= 0.0) {
        return None;
    }
    let wv = w.dot(&v);
    if config.wv == WvConstraint::Positive && wv <= TOL_NZP {
        return None;
    }
    let prob = PerturbationProblem::new(NonnegativeMatrix::new(h).ok()?, v, w).ok()?;
    if !config.allow_reducible && !prob.irreducible() {
        return None;
    }
    prob.nzp().holds.then_some(prob)
}

/// Deterministic in `(config, index)`: each index owns its own ChaCha
/// stream. Candidates are rejected until they satisfy the configured
/// constraints, irreducibility (unless allowed otherwise), simplicity of
/// `ρ(H)` and NZP.
pub fn random_problem(config: &SearchConfig, index: usize) -> Result<PerturbationProblem> {
    config.validate()?;
    let mut rng = rng_for(config.seed, index);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(p) = draw(config, &mut rng) {
            return Ok(p);
        }
    }
    Err(Error::GenerationFailure {
        attempts: MAX_ATTEMPTS,
    })
}

/// Every 16th sample is replaced when injection is on: index 0 by the exact
/// reference instance of dimension `n` ([`circulant_3`] for `n = 3`,
/// [`family_problem`] otherwise), later ones by copies whose nonzero entries
/// are scaled by independent factors in `[0.99, 1.01]`.
pub fn injected_problem(config: &SearchConfig, index: usize) -> Option<PerturbationProblem> {
    if !config.inject_paper || !index.is_multiple_of(16) {
        return None;
    }
    let base = match config.n {
        3 => circulant_3(),
        n => family_problem(n).ok()?,
    };
    if index == 0 {
        return Some(base);
    }
    let mut rng = rng_for(config.seed ^ 0x9e37_79b9_7f4a_7c15, index);
    let mut jitter = |x: f64| x * (0.99 + 0.02 * rng.random::<f64>());
    let h = base.h().matrix().map(&mut jitter);
    let v = base.v().map(&mut jitter);
    let w = base.w().map(&mut jitter);
    PerturbationProblem::new(NonnegativeMatrix::new(h).ok()?, v, w).ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub index: usize,
    pub injected: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleRecord {
    pub prob: PerturbationProblem,
    pub verdict: StabilityVerdict,
    pub pvw: RealPolynomial,
    pub provenance: Provenance,
    /// Parameter of the confirming eigenvalue check and the smallest real
    /// part found there.
    pub check_t: f64,
    pub check_min_re: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchSummary {
    pub samples: usize,
    pub generation_failures: usize,
    pub stable: usize,
    pub unstable: usize,
    pub indeterminate: usize,
    /// Unstable verdicts that the eigenvalue check did not confirm.
    pub dropped: usize,
    pub records: usize,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub records: Vec<CounterexampleRecord>,
    pub summary: SearchSummary,
}

/// Parameter at which an unstable verdict is checked against the actual
/// spectrum: large compared with the scale of `A` relative to the
/// perturbation.
pub fn check_parameter(prob: &PerturbationProblem) -> f64 {
    let coupling = (prob.v().norm() * prob.w().norm()).max(1e-12);
    (1e4 * (1.0 + inf_norm(prob.a())) / coupling).clamp(1e2, 1e10)
}

enum Outcome {
    Failed,
    Status(StabilityStatus),
    Dropped,
    Record(Box<CounterexampleRecord>),
}

fn evaluate(config: &SearchConfig, index: usize) -> Outcome {
    let (prob, injected) = match injected_problem(config, index) {
        Some(p) => (p, true),
        None => match random_problem(config, index) {
            Ok(p) => (p, false),
            Err(e) => {
                warn!("sample {index}: {e}");
                return Outcome::Failed;
            }
        },
    };
    let opts = ClassifyOptions {
        estimate_threshold: false,
        ..ClassifyOptions::default()
    };
    let verdict = classify_with(&prob, &opts);
    if verdict.status != StabilityStatus::EventuallyUnstable || !prob.nzp().holds {
        return Outcome::Status(verdict.status);
    }
    let check_t = check_parameter(&prob);
    let check_min_re = match min_real_part(&prob, check_t) {
        Some(m) if m <= 0.0 => m,
        other => {
            warn!("sample {index}: unstable verdict not confirmed at t = {check_t:e} (min Re = {other:?}); dropped");
            return Outcome::Dropped;
        }
    };
    let Ok(pvw) = p_vw_lemma16(&prob) else {
        return Outcome::Dropped;
    };
    debug!("sample {index}: counterexample, min Re = {check_min_re:e} at t = {check_t:e}");
    Outcome::Record(Box::new(CounterexampleRecord {
        prob,
        verdict,
        pvw,
        provenance: Provenance {
            seed: config.seed,
            index,
            injected,
        },
        check_t,
        check_min_re,
    }))
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
}

/// Samples `config.samples` problems, classifies each and keeps the
/// confirmed unstable ones in index order. Samples are evaluated in
/// parallel; the result does not depend on the thread count.
pub fn run_search(config: &SearchConfig) -> Result<SearchOutcome> {
    config.validate()?;
    let work = || -> Vec<Outcome> {
        (0..config.samples)
            .into_par_iter()
            .map(|i| evaluate(config, i))
            .collect()
    };
    let outcomes = match thread_cap() {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut summary = SearchSummary {
        samples: config.samples,
        ..SearchSummary::default()
    };
    let mut records = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Failed => summary.generation_failures += 1,
            Outcome::Status(StabilityStatus::EventuallyStable) => summary.stable += 1,
            Outcome::Status(StabilityStatus::EventuallyUnstable) => summary.unstable += 1,
            Outcome::Status(StabilityStatus::Indeterminate) => summary.indeterminate += 1,
            Outcome::Dropped => {
                summary.unstable += 1;
                summary.dropped += 1;
            }
            Outcome::Record(r) => {
                summary.unstable += 1;
                records.push(*r);
            }
        }
    }
    summary.records = records.len();
    Ok(SearchOutcome { records, summary })
}

/// Confirmed counterexamples of [`run_search`].
pub fn falsify(config: &SearchConfig) -> Result<Vec<CounterexampleRecord>> {
    run_search(config).map(|o| o.records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::spectral_radius;
    use crate::perturb::{classify, eigenvalues};
    use num_complex::Complex64;

    #[test]
    fn family_has_radius_two_tenths() {
        for n in 4..=8 {
            let h = cycle_family(n).unwrap();
            assert_eq!(h.matrix()[(n - 1, 0)], 10f64.powi(-(n as i32)));
            let sr = spectral_radius(&h).unwrap();
            assert!((sr.rho - 0.2).abs() < 1e-12, "n = {n}: {}", sr.rho);
        }
        assert!(cycle_family(3).is_err());
    }

    #[test]
    fn family_spectrum_is_shifted_roots_of_unity() {
        let h = cycle_family(5).unwrap();
        let eig = eigenvalues(h.matrix()).unwrap().values();
        for k in 0..5 {
            let want = Complex64::new(0.1, 0.0)
                + Complex64::from_polar(0.1, std::f64::consts::TAU * k as f64 / 5.0);
            assert!(eig.iter().any(|z| (z - want).norm() < 1e-10), "{want}");
        }
    }

    #[test]
    fn family_extends_the_counterexample() {
        let p4 = family_problem(4).unwrap();
        let c4 = counterexample_4();
        assert_eq!(p4.h(), c4.h());
        assert_eq!(p4.v(), c4.v());
        assert_eq!(p4.w(), c4.w());
        for n in 4..=8 {
            let prob = family_problem(n).unwrap();
            assert!(prob.irreducible() && prob.nzp().holds);
            assert_eq!(
                classify(&prob).status,
                StabilityStatus::EventuallyUnstable,
                "n = {n}"
            );
        }
    }

    #[test]
    fn reference_flags() {
        let c = counterexample_4();
        assert!(c.irreducible() && c.nzp().holds);
        assert!((c.rho() - 0.2).abs() < 1e-12);
        assert!((transient_3().rho() - 0.146_415_888_3).abs() < 1e-9);
        assert_eq!(circulant_3().wv(), 0.0);
        assert!((circulant_3().rho() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let cfg = SearchConfig::new(4, 10, 42);
        let a = random_problem(&cfg, 0).unwrap();
        let b = random_problem(&cfg, 0).unwrap();
        assert_eq!(a.h(), b.h());
        assert_eq!(a.v(), b.v());
        assert_eq!(a.w(), b.w());
        assert_ne!(random_problem(&cfg, 1).unwrap().h(), a.h());
        for i in 0..10 {
            let p = random_problem(&cfg, i).unwrap();
            assert!(p.irreducible() && p.nzp().holds);
        }
    }

    #[test]
    fn wv_constraints_are_honoured() {
        let mut cfg = SearchConfig::new(3, 20, 7);
        cfg.wv = WvConstraint::Zero;
        for i in 0..20 {
            assert_eq!(random_problem(&cfg, i).unwrap().wv(), 0.0);
        }
        cfg.wv = WvConstraint::Positive;
        for i in 0..20 {
            assert!(random_problem(&cfg, i).unwrap().wv() > TOL_NZP);
        }
    }

    #[test]
    fn impossible_constraints_fail_generation() {
        let mut cfg = SearchConfig::new(3, 1, 0);
        cfg.sparsity = 1.0;
        assert!(matches!(
            random_problem(&cfg, 0),
            Err(Error::GenerationFailure {
                attempts: MAX_ATTEMPTS
            })
        ));
        assert!(random_problem(&SearchConfig::new(1, 1, 0), 0).is_err());
    }

    #[test]
    fn injection_finds_the_counterexample() {
        let mut cfg = SearchConfig::new(4, 40, 3);
        cfg.inject_paper = true;
        let out = run_search(&cfg).unwrap();
        assert!(out
            .records
            .iter()
            .any(|r| r.provenance.index == 0 && r.provenance.injected));
        for r in &out.records {
            assert_eq!(r.verdict.status, StabilityStatus::EventuallyUnstable);
            assert!(r.prob.nzp().holds && r.check_min_re <= 0.0);
        }
        assert_eq!(out.summary.samples, 40);
        assert_eq!(out.summary.records, out.records.len());

        cfg.n = 3;
        let recs = falsify(&cfg).unwrap();
        assert!(recs.iter().any(|r| r.provenance.index == 0));
    }

    #[test]
    fn zero_samples_give_empty_output() {
        let out = run_search(&SearchConfig::new(3, 0, 1)).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.summary, SearchSummary::default());
    }
}
