//! Statistical checks of the privacy guarantee and of the distributional
//! inequalities the estimators rely on.
//!
//! Monte Carlo checks compare against oracle quantities from
//! [`crate::distributions`] with explicit statistical slack. Quadrature checks
//! need no slack beyond the oracle error. A check whose preconditions do not
//! hold reports [`Verdict::NotApplicable`] instead of passing or failing.

use std::collections::BTreeMap;
use std::io::Write;

use privmed_core::{ConstantsProfile, PreparedDataset, PrivacyBudget};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{DistributionSpec, QUAD_TOL};
use crate::experiment::{trial_seed, Algorithm, Prepared};
use crate::stats::clopper_pearson;

/// Confidence level of every Clopper-Pearson interval used by the audits.
pub const AUDIT_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub test: String,
    pub subject: String,
    pub samples: u64,
    /// The measured quantity.
    pub estimate: f64,
    /// The bound it is compared against.
    pub bound: f64,
    /// Statistical or numerical slack granted in the comparison.
    pub slack: f64,
    pub verdict: Verdict,
    /// How far past the bound (slack included) a failing check landed.
    pub violation: Option<f64>,
    pub note: String,
}

impl AuditReport {
    fn new(test: &str, subject: &DistributionSpec) -> Self {
        Self {
            test: test.into(),
            subject: subject.to_string(),
            samples: 0,
            estimate: f64::NAN,
            bound: f64::NAN,
            slack: 0.0,
            verdict: Verdict::NotApplicable,
            violation: None,
            note: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Pass when `estimate <= bound + slack`.
    fn upper(mut self, estimate: f64, bound: f64, slack: f64) -> Self {
        self.estimate = estimate;
        self.bound = bound;
        self.slack = slack;
        let excess = estimate - (bound + slack);
        self.verdict = if excess <= 0.0 { Verdict::Pass } else { Verdict::Fail };
        self.violation = (excess > 0.0).then_some(excess);
        self
    }

    /// Pass when `estimate >= bound - slack`.
    fn lower(mut self, estimate: f64, bound: f64, slack: f64) -> Self {
        self.estimate = estimate;
        self.bound = bound;
        self.slack = slack;
        let deficit = (bound - slack) - estimate;
        self.verdict = if deficit <= 0.0 { Verdict::Pass } else { Verdict::Fail };
        self.violation = (deficit > 0.0).then_some(deficit);
        self
    }

    fn na(mut self, note: impl Into<String>) -> Self {
        self.verdict = Verdict::NotApplicable;
        self.note = note.into();
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("datasets differ in {0} positions; neighbors differ in at most one")]
    NotNeighbors(usize),
    #[error("datasets have different sizes {0} and {1}")]
    SizeMismatch(usize, usize),
}

fn hamming(x: &[f64], y: &[f64]) -> Result<usize, AuditError> {
    if x.len() != y.len() {
        return Err(AuditError::SizeMismatch(x.len(), y.len()));
    }
    Ok(x.iter().zip(y).filter(|(a, b)| a.to_bits() != b.to_bits()).count())
}

/// Empirical test of `P[A(x) in E] <= e^eps P[A(x') in E] + delta` over the
/// cells `E` of `partition`, in both directions.
///
/// Each side runs `trials` times. A cell fails when the lower 99%
/// Clopper-Pearson bound of one side exceeds `e^eps` times the upper bound
/// of the other plus `delta`. The report carries the worst cell. This can
/// falsify a privacy claim but never prove one.
#[allow(clippy::too_many_arguments)]
pub fn empirical_dp_check<O, K: Ord + std::fmt::Debug>(
    name: &str,
    x: &[f64],
    x_neighbor: &[f64],
    mut mechanism: impl FnMut(&[f64], &mut ChaCha8Rng) -> O,
    partition: impl Fn(&O) -> K,
    trials: u64,
    budget: PrivacyBudget,
    seed: u64,
) -> Result<AuditReport, AuditError> {
    let d = hamming(x, x_neighbor)?;
    if d > 1 {
        return Err(AuditError::NotNeighbors(d));
    }
    let mut tally = |data: &[f64], stream: u64| {
        let mut counts: BTreeMap<K, u64> = BTreeMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, stream));
        for _ in 0..trials {
            *counts.entry(partition(&mechanism(data, &mut rng))).or_default() += 1;
        }
        counts
    };
    let a = tally(x, 0);
    let b = tally(x_neighbor, 1);
    let e = budget.epsilon().exp();
    let delta = budget.delta();
    let mut report = AuditReport {
        test: "empirical_dp".into(),
        subject: name.into(),
        samples: 2 * trials,
        estimate: 0.0,
        bound: 0.0,
        slack: 0.0,
        verdict: Verdict::Pass,
        violation: None,
        note: String::new(),
    };
    let mut worst = f64::NEG_INFINITY;
    let keys: std::collections::BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    for key in &keys {
        for (p, q) in [(&a, &b), (&b, &a)] {
            let cp = clopper_pearson(p.get(*key).copied().unwrap_or(0), trials, AUDIT_CONFIDENCE).expect("trials > 0");
            let cq = clopper_pearson(q.get(*key).copied().unwrap_or(0), trials, AUDIT_CONFIDENCE).expect("trials > 0");
            let bound = e * cq.upper + delta;
            let excess = cp.lower - bound;
            if excess > worst {
                worst = excess;
                report.estimate = cp.estimate;
                report.bound = e * cq.estimate + delta;
                report.slack = (cp.estimate - cp.lower) + e * (cq.upper - cq.estimate);
                report.note = format!("worst cell {key:?} over {} cells", keys.len());
            }
        }
    }
    if worst > 0.0 {
        report.verdict = Verdict::Fail;
        report.violation = Some(worst);
    }
    Ok(report)
}

/// A pair of neighboring datasets built to make the moment stage undecided:
/// `n_pairs` consecutive pairs, about as many of them with difference 6 as
/// the moment threshold (the rest with difference 3/4). The neighbor turns
/// one difference of 6 into 3/4, moving one count between dyadic bins.
pub fn crafted_neighbors(n_pairs: usize, c: f64, profile: &ConstantsProfile) -> (Vec<f64>, Vec<f64>) {
    let threshold = privmed_core::moment::moment_threshold(n_pairs, 2 * n_pairs, c, profile);
    let wide = (threshold.round() as usize).clamp(1, n_pairs);
    let mut x = Vec::with_capacity(2 * n_pairs);
    for i in 0..n_pairs {
        x.push(0.0);
        x.push(if i < wide { 6.0 } else { 0.75 });
    }
    let mut y = x.clone();
    y[1] = 0.75;
    (x, y)
}

/// DP audit of the interior-point pipeline on [`crafted_neighbors`].
/// Outcomes are partitioned by their exact value plus a bottom cell.
pub fn audit_interior_point(
    n_pairs: usize,
    c: f64,
    profile: &ConstantsProfile,
    budget: PrivacyBudget,
    trials: u64,
    seed: u64,
) -> Result<AuditReport, AuditError> {
    let (x, y) = crafted_neighbors(n_pairs, c, profile);
    let mut px = PreparedDataset::new(&x).expect("finite data");
    let mut py = PreparedDataset::new(&y).expect("finite data");
    let mechanism = |data: &[f64], rng: &mut ChaCha8Rng| {
        let prepared = if std::ptr::eq(data, px.data()) { &mut px } else { &mut py };
        prepared.interior_point_main(budget, c, profile, rng).map(|r| r.point).map_err(|e| e.kind())
    };
    let partition = |o: &Result<Option<f64>, &'static str>| match o {
        Ok(Some(v)) => format!("{:016x}", v.to_bits()),
        Ok(None) => "bottom".to_string(),
        Err(kind) => format!("error:{kind}"),
    };
    let mut r = empirical_dp_check("interior_point_main", &x, &y, mechanism, partition, trials, budget, seed)?;
    r.note = format!("{} pairs; {}", n_pairs, r.note);
    Ok(r)
}

/// A mechanism with no noise: the index of the fullest unit bin.
pub fn noiseless_argmax(x: &[f64]) -> i64 {
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &v in x {
        *counts.entry(v.floor() as i64).or_default() += 1;
    }
    counts.into_iter().max_by_key(|&(bin, c)| (c, std::cmp::Reverse(bin))).map(|(b, _)| b).unwrap_or(0)
}

/// Power check: [`noiseless_argmax`] on bin counts 5 vs 4, where moving one
/// point flips the winner. A sound auditor must fail this.
pub fn audit_noiseless_argmax(trials: u64, budget: PrivacyBudget, seed: u64) -> AuditReport {
    let x = [0.5, 0.5, 0.5, 0.5, 0.5, 1.5, 1.5, 1.5, 1.5];
    let mut y = x;
    y[0] = 1.5;
    empirical_dp_check("noiseless_argmax", &x, &y, |d, _| noiseless_argmax(d), |o| *o, trials, budget, seed)
        .expect("neighbors by construction")
}

/// Monte Carlo moments of `Q = |X - X'|` over `pairs` independent pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments {
    pub pairs: u64,
    pub mean_q: f64,
    pub se_q: f64,
    pub mean_q2: f64,
    pub se_q2: f64,
}

const CHUNK: u64 = 1 << 16;

/// Pair sampling in fixed chunks, each with its own stream, reduced in chunk
/// order so the result does not depend on the thread count.
pub fn pair_moments(spec: &DistributionSpec, pairs: u64, seed: u64) -> PairMoments {
    let chunks = pairs.div_ceil(CHUNK);
    let parts: Vec<(f64, f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(pairs - c * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, c));
            let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
            for _ in 0..len {
                let q = (spec.sample_one(&mut rng) - spec.sample_one(&mut rng)).abs();
                let q2 = q * q;
                s1 += q;
                s2 += q2;
                s4 += q2 * q2;
            }
            (len as f64, s1, s2, s4)
        })
        .collect();
    let (mut n, mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0, 0.0);
    for (len, a, b, d) in parts {
        n += len;
        s1 += a;
        s2 += b;
        s4 += d;
    }
    let mean_q = s1 / n;
    let mean_q2 = s2 / n;
    let var_q = (s2 / n - mean_q * mean_q).max(0.0) * n / (n - 1.0);
    let var_q2 = (s4 / n - mean_q2 * mean_q2).max(0.0) * n / (n - 1.0);
    PairMoments { pairs, mean_q, se_q: (var_q / n).sqrt(), mean_q2, se_q2: (var_q2 / n).sqrt() }
}

/// `E|X - mu| <= E[Q] <= 2 E|X - mu|` with the Monte Carlo mean of `Q`,
/// allowing 5 standard errors.
pub fn check_q_sandwich(spec: &DistributionSpec, m: &PairMoments) -> AuditReport {
    let z = spec.mean_abs_dev();
    let slack = 5.0 * m.se_q;
    let mut r = AuditReport::new("q_sandwich", spec);
    r.samples = m.pairs;
    r.estimate = m.mean_q;
    r.slack = slack;
    let below = z - slack - m.mean_q;
    let above = m.mean_q - (2.0 * z + slack);
    r.bound = if below > above { z } else { 2.0 * z };
    let excess = below.max(above);
    r.verdict = if excess <= 0.0 { Verdict::Pass } else { Verdict::Fail };
    r.violation = (excess > 0.0).then_some(excess);
    r.note = format!("E|X-mu| = {z}; interval [{z}, {}]", 2.0 * z);
    r
}

/// `E[Q^2] = 2 Var(X)` within 5 standard errors.
pub fn check_q_second_moment(spec: &DistributionSpec, m: &PairMoments) -> AuditReport {
    let target = 2.0 * spec.variance();
    let mut r = AuditReport::new("q_second_moment", spec);
    r.samples = m.pairs;
    let slack = 5.0 * m.se_q2;
    r = r.upper((m.mean_q2 - target).abs(), 0.0, slack);
    r.bound = target;
    r.estimate = m.mean_q2;
    r
}

/// `P[Q - E[Q] >= t C E[Q]] <= 4 / (t^2 C)` with oracle `C` and `E[Q]`.
/// Passes when the lower 99% bound of the empirical tail is below the bound;
/// a bound of at least one is a vacuous pass and flagged as such.
pub fn check_tail_bound(spec: &DistributionSpec, t: f64, pairs: u64, seed: u64) -> AuditReport {
    let mut r = AuditReport::new("tail_bound", spec);
    let report = match spec.normalized_variance() {
        Ok(rep) => rep,
        Err(e) => return r.na(e.to_string()),
    };
    let eq = spec.mean_pair_diff();
    if report.first_moment == 0.0 || eq == 0.0 {
        return r.na("no deviation from the mean");
    }
    let c = report.c_value;
    let cut = eq + t * c * eq;
    let chunks = pairs.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let len = CHUNK.min(pairs - ch * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, ch));
            (0..len).filter(|_| (spec.sample_one(&mut rng) - spec.sample_one(&mut rng)).abs() >= cut).count() as u64
        })
        .sum();
    let ci = clopper_pearson(hits, pairs, AUDIT_CONFIDENCE).expect("pairs > 0");
    let bound = 4.0 / (t * t * c);
    r.samples = pairs;
    r = r.upper(ci.estimate, bound, ci.estimate - ci.lower);
    let vacuous = if bound >= 1.0 { "; vacuous (bound >= 1)" } else { "" };
    r.note(format!("t = {t}, C = {c}{vacuous}"))
}

/// Heaviest dyadic bin `(2^l, 2^{l+1}]` inside
/// `[E[Q]/2, k' C sqrt(log C) E[Q]]` must carry at least `1/(k' C log C)` of
/// the mass of `Q`. `C` is the oracle value raised to `c_floor` (the bound
/// needs `C > 2`). Masses come from quadrature.
pub fn check_interval_mass(spec: &DistributionSpec, profile: &ConstantsProfile, c_floor: f64) -> AuditReport {
    let mut r = AuditReport::new("interval_mass", spec);
    let report = match spec.normalized_variance() {
        Ok(rep) => rep,
        Err(e) => return r.na(e.to_string()),
    };
    let eq = spec.mean_pair_diff();
    if report.first_moment == 0.0 || eq == 0.0 {
        return r.na("Q is identically zero");
    }
    let c = report.c_value.max(c_floor);
    let lo = 0.5 * eq;
    let hi = profile.k_prime * c * profile.log_c(c).sqrt() * eq;
    let first = lo.log2().ceil() as i64;
    let last = hi.log2().floor() as i64 - 1;
    let mut best = (f64::NEG_INFINITY, 0i64);
    for l in first..=last {
        let a = (l as f64).exp2();
        let mass = spec.pair_diff_cdf(2.0 * a) - spec.pair_diff_cdf(a);
        if mass > best.0 {
            best = (mass, l);
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return r.na("no dyadic bin fits in the interval");
    }
    let bound = 1.0 / (profile.k_prime * c * profile.log_c(c));
    r = r.lower(best.0, bound, 1e3 * QUAD_TOL);
    r.note(format!("k' = {}, C = {c}, best bin l = {}", profile.k_prime, best.1))
}

/// Both `P[X in (mu + E[Z]/(2 k1), mu + 16 C E[Z])]` and its mirror image
/// must be at least `1/(128 C)`, with `Z = |X - mu|` and oracle `C`.
pub fn check_two_sided_mass(spec: &DistributionSpec, k1: f64) -> AuditReport {
    let mut r = AuditReport::new("two_sided_mass", spec);
    let report = match spec.normalized_variance() {
        Ok(rep) => rep,
        Err(e) => return r.na(e.to_string()),
    };
    if report.first_moment == 0.0 {
        return r.na("no deviation from the mean");
    }
    if k1 < 2.0 {
        return r.na(format!("k1 = {k1} < 2"));
    }
    let c = report.c_value;
    let mu = spec.mean();
    let ez = report.first_moment;
    let right = spec.open_interval_mass(mu + ez / (2.0 * k1), mu + 16.0 * c * ez);
    let left = spec.open_interval_mass(mu - 16.0 * c * ez, mu - ez / (2.0 * k1));
    r = r.lower(right.min(left), 1.0 / (128.0 * c), 1e-12);
    r.note(format!("k1 = {k1}, C = {c}, masses left {left} right {right}"))
}

/// Normalized variance of `spec` trimmed to quantile levels
/// `[1/k1, 1 - 1/k2]` (or `[0, 1 - 1/k2]` when `k1` is `None`). One-sided:
/// `k2 >= 128 C` implies at most `8 C`. Two-sided: `k1, k2 >= 2048 C` implies
/// at most `64 C`. Below those thresholds the check is not applicable.
pub fn check_conditional_boundedness(spec: &DistributionSpec, k1: Option<f64>, k2: f64) -> AuditReport {
    let mut r = AuditReport::new("conditional_boundedness", spec);
    let c = match spec.normalized_variance() {
        Ok(rep) => rep.c_value,
        Err(e) => return r.na(e.to_string()),
    };
    let (need, factor, lo) = match k1 {
        None => (128.0 * c, 8.0, 0.0),
        Some(k1) => (2048.0 * c, 64.0, 1.0 / k1),
    };
    if k2 < need || k1.is_some_and(|k| k < need) {
        return r.na(format!("k below {need}"));
    }
    let trimmed = DistributionSpec::conditioned(spec.clone(), lo, 1.0 - 1.0 / k2);
    let rep = match trimmed.normalized_variance() {
        Ok(rep) => rep,
        Err(e) => return r.na(e.to_string()),
    };
    r = r.upper(rep.c_value, factor * c, rep.error_bound);
    let sides = if k1.is_some() { "two-sided" } else { "one-sided" };
    r.note(format!("{sides}, k1 = {k1:?}, k2 = {k2}, C = {c}"))
}

/// With `mu'`, `mu''` the means of `spec` below and above its `1 - 1/k`
/// quantile: `|mu - mu'| = (mu'' - mu) / (k - 1)` exactly, and
/// `E|X'' - mu| = mu'' - mu` when the cut lies above `mu`.
pub fn check_mean_shift_identity(spec: &DistributionSpec, k: f64) -> AuditReport {
    let mut r = AuditReport::new("mean_shift_identity", spec);
    if k <= 1.0 {
        return r.na("k must exceed 1");
    }
    if !spec.is_continuous() {
        return r.na("atoms can straddle the cut");
    }
    let cut = 1.0 - 1.0 / k;
    let mu = spec.mean();
    let lower = DistributionSpec::conditioned(spec.clone(), 0.0, cut);
    let upper = DistributionSpec::conditioned(spec.clone(), cut, 1.0);
    let (mu1, mu2) = (lower.mean(), upper.mean());
    let lhs = (mu - mu1).abs();
    let rhs = (mu2 - mu) / (k - 1.0);
    let scale = spec.mean_abs_dev().max(f64::MIN_POSITIVE);
    let tol = 1e-6 * scale;
    let mut worst = (lhs - rhs).abs();
    let mut note = format!("k = {k}, |mu - mu'| = {lhs}, (mu'' - mu)/(k - 1) = {rhs}");
    if spec.quantile(cut) >= mu {
        let d = (upper.abs_dev_about(mu) - (mu2 - mu)).abs();
        worst = worst.max(d);
        note.push_str(&format!(", E|X'' - mu| - (mu'' - mu) = {d}"));
    }
    r = r.upper(worst, 0.0, tol);
    r.note(note)
}

/// Sandwich of the two empirical quantiles that bound the
/// median slice: with `n >= 108 k^2 ln(4/beta)`,
/// `Q_x(1/2 - alpha + 1/(2k))` must land in `(Q_P(1/2 - alpha), Q_P(1/2 - alpha + 1/k))`
/// and symmetrically above, except with probability `beta`. Passes when the
/// failure rate is at most `beta + 3 sigma`.
pub fn check_quantile_sandwich(
    spec: &DistributionSpec,
    alpha: f64,
    k: f64,
    beta: f64,
    n: usize,
    trials: u64,
    seed: u64,
) -> AuditReport {
    let mut r = AuditReport::new("quantile_sandwich", spec);
    let need = 108.0 * k * k * (4.0 / beta).ln();
    if (n as f64) < need {
        return r.na(format!("n = {n} below {}", need.ceil()));
    }
    let lo_band = (spec.quantile(0.5 - alpha), spec.quantile(0.5 - alpha + 1.0 / k));
    let hi_band = (spec.quantile(0.5 + alpha - 1.0 / k), spec.quantile(0.5 + alpha));
    let failures: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, i));
            let x = spec.sample(n, &mut rng);
            let s = privmed_core::middle_slice(&x, alpha, k);
            let ok = match s {
                Ok(s) => lo_band.0 < s.lower && s.lower < lo_band.1 && hi_band.0 < s.upper && s.upper < hi_band.1,
                Err(_) => false,
            };
            u64::from(!ok)
        })
        .sum();
    let rate = failures as f64 / trials as f64;
    let sigma = (beta * (1.0 - beta) / trials as f64).sqrt();
    r.samples = trials;
    r = r.upper(rate, beta, 3.0 * sigma);
    r.note(format!("alpha = {alpha}, k = {k}, n = {n}"))
}

/// Reports produced by the `audit` verb and whether they amount to a pass.
#[derive(Debug, Clone)]
pub struct AuditRun {
    pub reports: Vec<AuditReport>,
    pub passed: bool,
}

/// Runs the audit named by `p.config.algorithm` on the configured
/// distribution. `n` is the number of pairs or the dataset size, `trials`
/// the number of repetitions where the audit has any.
pub fn run_configured(p: &Prepared) -> AuditRun {
    let cfg = &p.config;
    let spec = &p.spec;
    let params = &cfg.audit;
    let pairs = cfg.n as u64;
    let c_oracle = p.c_oracle;
    let reports = match cfg.algorithm {
        Algorithm::AuditDp => {
            let ip = audit_interior_point(cfg.n / 2, p.c_declared, &p.profile, p.budget, cfg.trials, cfg.seed)
                .expect("crafted datasets are neighbors");
            let mut power = audit_noiseless_argmax(cfg.trials, p.budget, cfg.seed);
            power.test = "empirical_dp_power".into();
            power.note = format!("expected to fail; {}", power.note);
            let passed = ip.passed() && power.verdict == Verdict::Fail;
            return AuditRun { reports: vec![ip, power], passed };
        }
        Algorithm::AuditQSandwich => vec![check_q_sandwich(spec, &pair_moments(spec, pairs, cfg.seed))],
        Algorithm::AuditQSecondMoment => vec![check_q_second_moment(spec, &pair_moments(spec, pairs, cfg.seed))],
        Algorithm::AuditTailBound => params
            .t
            .iter()
            .enumerate()
            .map(|(i, &t)| check_tail_bound(spec, t, pairs, trial_seed(cfg.seed, i as u64)))
            .collect(),
        Algorithm::AuditIntervalMass => vec![check_interval_mass(spec, &p.profile, cfg.c_floor)],
        Algorithm::AuditTwoSidedMass => vec![check_two_sided_mass(spec, params.k1.unwrap_or(2.0))],
        Algorithm::AuditConditionalBoundedness => match (params.k1, params.k2) {
            (None, None) => vec![
                check_conditional_boundedness(spec, None, 128.0 * c_oracle),
                check_conditional_boundedness(spec, Some(2048.0 * c_oracle), 2048.0 * c_oracle),
            ],
            (k1, k2) => vec![check_conditional_boundedness(spec, k1, k2.unwrap_or(128.0 * c_oracle))],
        },
        Algorithm::AuditMeanShiftIdentity => {
            vec![check_mean_shift_identity(spec, params.k.unwrap_or(128.0 * c_oracle))]
        }
        Algorithm::AuditQuantileSandwich => vec![check_quantile_sandwich(
            spec,
            cfg.alpha.unwrap_or(0.1),
            params.k.unwrap_or(20.0),
            params.beta,
            cfg.n,
            cfg.trials,
            cfg.seed,
        )],
        other => panic!("{} is not an audit", other.name()),
    };
    let passed = reports.iter().all(|r| r.verdict != Verdict::Fail);
    AuditRun { reports, passed }
}

/// Column order of the audit CSV.
pub const AUDIT_CSV_HEADER: [&str; 10] =
    ["experiment_id", "test", "subject", "samples", "estimate", "bound", "slack", "verdict", "violation", "note"];

pub fn write_audit_csv<W: Write>(experiment_id: &str, reports: &[AuditReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AUDIT_CSV_HEADER)?;
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "n/a",
        };
        w.write_record([
            experiment_id.to_string(),
            r.test.clone(),
            r.subject.clone(),
            r.samples.to_string(),
            r.estimate.to_string(),
            r.bound.to_string(),
            r.slack.to_string(),
            verdict.to_string(),
            r.violation.map(|v| v.to_string()).unwrap_or_default(),
            r.note.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget() -> PrivacyBudget {
        PrivacyBudget::new(1.0, 1e-6).unwrap()
    }

    #[test]
    fn identical_inputs_pass() {
        let x = [0.1, 0.2, 0.3];
        let r = empirical_dp_check(
            "coin",
            &x,
            &x,
            |_, rng: &mut ChaCha8Rng| rand::Rng::random_bool(rng, 0.3),
            |o| *o,
            20_000,
            budget(),
            1,
        )
        .unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn non_neighbors_rejected() {
        let e = empirical_dp_check("m", &[1.0, 2.0], &[3.0, 4.0], |_, _| 0u8, |o| *o, 10, budget(), 1).unwrap_err();
        assert_eq!(e, AuditError::NotNeighbors(2));
    }

    #[test]
    fn noiseless_argmax_fails() {
        let r = audit_noiseless_argmax(1000, budget(), 2);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.violation.unwrap() > 0.9);
    }

    #[test]
    fn randomized_response_passes_at_its_epsilon() {
        // Report the true bit with probability e/(1+e): exactly 1-DP.
        let keep = 1f64.exp() / (1.0 + 1f64.exp());
        let mech = |d: &[f64], rng: &mut ChaCha8Rng| {
            let bit = d[0] > 0.0;
            if rand::Rng::random_bool(rng, keep) {
                bit
            } else {
                !bit
            }
        };
        let r = empirical_dp_check("rr", &[1.0], &[0.0], mech, |o| *o, 50_000, budget(), 3).unwrap();
        assert!(r.passed(), "{r:?}");
        let tight = PrivacyBudget::new(0.5, 1e-6).unwrap();
        let r = empirical_dp_check("rr", &[1.0], &[0.0], mech, |o| *o, 50_000, tight, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn q_checks_two_point_by_enumeration() {
        let d = DistributionSpec::two_point(0.0, 1.0, 0.5);
        // Pairs (0,0),(0,1),(1,0),(1,1) equally likely: E[Q] = 1/2, E[Q^2] = 1/2.
        assert_eq!(d.mean_pair_diff(), 0.5);
        assert_eq!(2.0 * d.variance(), 0.5);
        let m = pair_moments(&d, 200_000, 4);
        assert!(check_q_sandwich(&d, &m).passed());
        assert!(check_q_second_moment(&d, &m).passed());
    }

    #[test]
    fn q_checks_degenerate_point() {
        let d = DistributionSpec::point(3.0);
        let m = pair_moments(&d, 1000, 5);
        assert_eq!(m.mean_q, 0.0);
        assert!(check_q_sandwich(&d, &m).passed());
        assert!(check_q_second_moment(&d, &m).passed());
        assert_eq!(check_tail_bound(&d, 5.0, 1000, 5).verdict, Verdict::NotApplicable);
        assert_eq!(check_interval_mass(&d, &ConstantsProfile::paper(), 2.5).verdict, Verdict::NotApplicable);
    }

    #[test]
    fn pair_moments_independent_of_thread_count() {
        let d = DistributionSpec::gaussian(0.0, 1.0);
        let a = pair_moments(&d, 300_000, 6);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| pair_moments(&d, 300_000, 6));
        assert_eq!(a, b);
    }

    #[test]
    fn tail_bound_examples() {
        let g = DistributionSpec::gaussian(0.0, 1.0);
        let r = check_tail_bound(&g, 10.0, 100_000, 7);
        assert!((r.bound - 4.0 / (100.0 * std::f64::consts::FRAC_PI_2)).abs() < 1e-12);
        assert!(r.passed());
        assert_eq!(r.estimate, 0.0);
        let t = DistributionSpec::two_point(0.0, 1.0, 0.5);
        let r = check_tail_bound(&t, 1.0, 10_000, 8);
        assert!(r.passed() && r.note.contains("vacuous"));
        assert_eq!(r.bound, 4.0);
    }

    #[test]
    fn two_sided_mass_examples() {
        let t = DistributionSpec::two_point(-1.0, 1.0, 0.5);
        let r = check_two_sided_mass(&t, 2.0);
        assert!(r.passed());
        assert!((r.estimate - 0.5).abs() < 1e-15);
        assert!(check_two_sided_mass(&DistributionSpec::gaussian(0.0, 1.0), 2.0).passed());
        assert!(check_two_sided_mass(&DistributionSpec::exponential(1.0), 2.0).passed());
    }

    #[test]
    fn conditional_boundedness_examples() {
        let u = DistributionSpec::uniform(0.0, 1.0);
        let c = 4.0 / 3.0;
        let r = check_conditional_boundedness(&u, None, 128.0 * c);
        assert!(r.passed(), "{r:?}");
        assert!((r.bound - 8.0 * c).abs() < 1e-12);
        let g = DistributionSpec::gaussian(0.0, 1.0);
        let cg = std::f64::consts::FRAC_PI_2;
        let r = check_conditional_boundedness(&g, Some(2048.0 * cg), 2048.0 * cg);
        assert!(r.passed(), "{r:?}");
        let r = check_conditional_boundedness(&u, None, 10.0);
        assert_eq!(r.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn mean_shift_identity_holds() {
        for d in [
            DistributionSpec::gaussian(0.0, 1.0),
            DistributionSpec::exponential(2.0),
            DistributionSpec::uniform(0.0, 1.0),
        ] {
            let r = check_mean_shift_identity(&d, 300.0);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn quantile_sandwich_gates_small_n() {
        let u = DistributionSpec::uniform(0.0, 1.0);
        let r = check_quantile_sandwich(&u, 0.1, 20.0, 0.1, 1000, 10, 9);
        assert_eq!(r.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn crafted_neighbors_differ_in_one_place() {
        let p = ConstantsProfile::relaxed();
        let (x, y) = crafted_neighbors(80_000, 2.5, &p);
        assert_eq!(hamming(&x, &y).unwrap(), 1);
        let q = privmed_core::pair_differences(&x).unwrap();
        let wide = q.iter().filter(|&&v| v == 6.0).count() as f64;
        let t = privmed_core::moment::moment_threshold(80_000, 160_000, 2.5, &p);
        assert!((wide - t).abs() <= 1.0);
    }
}
