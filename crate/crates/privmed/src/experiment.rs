//! Seeded batch experiments: configuration, trial execution, CSV and summary
//! output.

use std::io::Write;
use std::time::Instant;

use privmed_core::{
    interior_point_main, private_median, ConstantsProfile, Error as CoreError, MomentEstimate, PrivacyBudget,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{named, DistError, DistributionSpec};
use crate::stats::{clopper_pearson, Interval};

/// Per-trial seed: SplitMix64 finalizer over `(base, index)`.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Default lower bound applied to an oracle-declared `C`.
pub const DEFAULT_C_FLOOR: f64 = 2.5;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

/// A distribution given by name (see [`crate::distributions::NAMES`]) or spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionRef {
    Named(String),
    Spec(DistributionSpec),
}

impl DistributionRef {
    pub fn resolve(&self) -> Result<DistributionSpec, ConfigError> {
        let spec = match self {
            Self::Named(name) => named(name).ok_or_else(|| field("distribution", format!("unknown name `{name}`")))?,
            Self::Spec(spec) => spec.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Named(name) => name.clone(),
            Self::Spec(spec) => spec.to_string(),
        }
    }
}

/// `"oracle"` or an explicit value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeclaredC {
    Value(f64),
    Keyword(String),
}

impl Default for DeclaredC {
    fn default() -> Self {
        Self::Keyword("oracle".into())
    }
}

impl DeclaredC {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        if s == "oracle" {
            return Ok(Self::Keyword(s.into()));
        }
        s.parse().map(Self::Value).map_err(|_| field("c_declared", format!("expected a number or `oracle`, got `{s}`")))
    }

    fn label(&self) -> String {
        match self {
            Self::Value(v) => v.to_string(),
            Self::Keyword(k) => k.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileChoice {
    Named(String),
    Custom { custom: ConstantsProfile },
}

impl Default for ProfileChoice {
    fn default() -> Self {
        Self::Named("relaxed".into())
    }
}

impl ProfileChoice {
    pub fn resolve(&self) -> Result<ConstantsProfile, ConfigError> {
        let p = match self {
            Self::Named(n) if n == "paper" => ConstantsProfile::paper(),
            Self::Named(n) if n == "relaxed" => ConstantsProfile::relaxed(),
            Self::Named(n) => return Err(field("profile", format!("unknown profile `{n}`"))),
            Self::Custom { custom } => custom.clone(),
        };
        p.validate().map_err(|e| field("profile", e.to_string()))?;
        Ok(p)
    }

    pub fn label(&self) -> &str {
        match self {
            Self::Named(n) => n,
            Self::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "interior_point")]
    InteriorPoint,
    #[serde(rename = "median")]
    Median,
    #[serde(rename = "moment")]
    Moment,
    #[serde(rename = "audit:dp")]
    AuditDp,
    #[serde(rename = "audit:q_sandwich")]
    AuditQSandwich,
    #[serde(rename = "audit:q_second_moment")]
    AuditQSecondMoment,
    #[serde(rename = "audit:tail_bound")]
    AuditTailBound,
    #[serde(rename = "audit:interval_mass")]
    AuditIntervalMass,
    #[serde(rename = "audit:two_sided_mass")]
    AuditTwoSidedMass,
    #[serde(rename = "audit:conditional_boundedness")]
    AuditConditionalBoundedness,
    #[serde(rename = "audit:mean_shift_identity")]
    AuditMeanShiftIdentity,
    #[serde(rename = "audit:quantile_sandwich")]
    AuditQuantileSandwich,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::InteriorPoint => "interior_point",
            Self::Median => "median",
            Self::Moment => "moment",
            Self::AuditDp => "audit:dp",
            Self::AuditQSandwich => "audit:q_sandwich",
            Self::AuditQSecondMoment => "audit:q_second_moment",
            Self::AuditTailBound => "audit:tail_bound",
            Self::AuditIntervalMass => "audit:interval_mass",
            Self::AuditTwoSidedMass => "audit:two_sided_mass",
            Self::AuditConditionalBoundedness => "audit:conditional_boundedness",
            Self::AuditMeanShiftIdentity => "audit:mean_shift_identity",
            Self::AuditQuantileSandwich => "audit:quantile_sandwich",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| field("algorithm", format!("unknown algorithm `{s}`")))
    }

    pub fn is_audit(self) -> bool {
        self.name().starts_with("audit:")
    }
}

/// Extra parameters of the audit algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditParams {
    /// Tail multipliers for `audit:tail_bound`.
    pub t: Vec<f64>,
    /// Lower trimming parameter; `None` makes `audit:conditional_boundedness` one-sided.
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    /// `k` of `audit:quantile_sandwich` and `audit:mean_shift_identity`.
    pub k: Option<f64>,
    pub beta: f64,
}

impl Default for AuditParams {
    fn default() -> Self {
        Self { t: vec![2.0, 5.0, 10.0, 20.0], k1: None, k2: None, k: None, beta: 0.1 }
    }
}

/// One JSON document describing a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment_id: Option<String>,
    pub distribution: DistributionRef,
    pub algorithm: Algorithm,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub c_declared: DeclaredC,
    /// Floor applied when `c_declared` is `"oracle"`.
    #[serde(default = "default_c_floor")]
    pub c_floor: f64,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub profile: ProfileChoice,
    /// Failure probability targeted by the sample-size bounds and the
    /// moment-estimator sandwich.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Minimum success rate; below it the CLI exits with code 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_target: Option<f64>,
    #[serde(default)]
    pub audit: AuditParams,
}

fn default_epsilon() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    1e-6
}
fn default_c_floor() -> f64 {
    DEFAULT_C_FLOOR
}
fn default_beta() -> f64 {
    0.05
}

/// A validated configuration with its derived quantities.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub experiment_id: String,
    pub spec: DistributionSpec,
    pub budget: PrivacyBudget,
    pub profile: ConstantsProfile,
    /// Oracle normalized variance of the distribution the declared bound
    /// refers to (the middle `2 alpha` mass for the median).
    pub c_oracle: f64,
    pub c_declared: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Hex SHA-256 prefix of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        let mut copy = self.clone();
        copy.experiment_id = None;
        let bytes = serde_json::to_vec(&copy).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn prepare(&self) -> Result<Prepared, ConfigError> {
        let spec = self.distribution.resolve()?;
        let budget = PrivacyBudget::new(self.epsilon, self.delta).map_err(|e| field("epsilon/delta", e.to_string()))?;
        let profile = self.profile.resolve()?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(field("beta", "must lie in (0, 1)"));
        }
        if let Some(t) = self.success_target {
            if !(0.0..=1.0).contains(&t) {
                return Err(field("success_target", "must lie in [0, 1]"));
            }
        }
        let alpha = match (self.algorithm, self.alpha) {
            (Algorithm::Median, None) => return Err(field("alpha", "required for the median")),
            (_, Some(a)) if !(a > 0.0 && a < 0.25) => return Err(field("alpha", "must lie in (0, 1/4)")),
            (_, a) => a,
        };
        if !(self.c_floor.is_finite() && self.c_floor > 2.0) {
            return Err(field("c_floor", "must be finite and > 2"));
        }
        let target = match (self.algorithm, alpha) {
            (Algorithm::Median, Some(a)) => DistributionSpec::conditioned(spec.clone(), 0.5 - a, 0.5 + a),
            _ => spec.clone(),
        };
        let c_oracle = target.normalized_variance()?.c_value;
        let c_declared = match &self.c_declared {
            DeclaredC::Value(v) => *v,
            DeclaredC::Keyword(k) if k == "oracle" => c_oracle.max(self.c_floor),
            DeclaredC::Keyword(k) => {
                return Err(field("c_declared", format!("expected a number or `oracle`, got `{k}`")))
            }
        };
        if !self.algorithm.is_audit() && !(c_declared > 2.0 && c_declared.is_finite()) {
            return Err(field("c_declared", "the estimators need C > 2"));
        }
        if self.n < 2 && self.trials > 0 {
            return Err(field("n", "need at least two samples"));
        }
        let experiment_id = self.experiment_id.clone().unwrap_or_else(|| self.content_hash());
        Ok(Prepared { config: self.clone(), experiment_id, spec, budget, profile, c_oracle, c_declared })
    }
}

/// What a single trial produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Point(f64),
    Bottom,
    Error(&'static str),
}

impl Outcome {
    fn label(&self) -> String {
        match self {
            Self::Point(_) => "point".into(),
            Self::Bottom => "bottom".into(),
            Self::Error(kind) => format!("error:{kind}"),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Point(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub success: bool,
    /// Every selected bin had a positive true count.
    pub selected_bins_occupied: bool,
    pub wall_ms: Option<f64>,
}

fn error_outcome(e: &CoreError) -> Outcome {
    Outcome::Error(e.kind())
}

impl Prepared {
    /// Runs trial `index` with its own RNG stream. Sampling comes first, then
    /// the mechanism; the ground truth used for `success` is computed from
    /// the sample outside the mechanism.
    pub fn run_trial(&self, index: u64, timing: bool) -> TrialReport {
        let start = Instant::now();
        let seed = trial_seed(self.config.seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = self.spec.sample(self.config.n, &mut rng);
        let c = self.c_declared;
        let (outcome, occupied, success) = match self.config.algorithm {
            Algorithm::InteriorPoint => match interior_point_main(&x, self.budget, c, &self.profile, &mut rng) {
                Ok(r) => {
                    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                    let ok = r.point.is_some_and(|p| lo <= p && p <= hi);
                    (point_or_bottom(r.point), r.trace.selected_bins_occupied(), ok)
                }
                Err(e) => (error_outcome(&e), true, false),
            },
            Algorithm::Median => {
                let alpha = self.config.alpha.expect("validated");
                match private_median(&x, self.budget, alpha, c, &self.profile, &mut rng) {
                    Ok(r) => {
                        let lo = self.spec.quantile(0.5 - alpha);
                        let hi = self.spec.quantile(0.5 + alpha);
                        let ok = r.value.is_some_and(|v| lo <= v && v <= hi);
                        (point_or_bottom(r.value), r.interior.trace.selected_bins_occupied(), ok)
                    }
                    Err(e) => (error_outcome(&e), true, false),
                }
            }
            Algorithm::Moment => {
                match privmed_core::moment::estimate_with_trace(&x, self.budget, c, &self.profile, &mut rng) {
                    Ok((est, trace)) => {
                        let (lo, hi) = moment_band(&self.spec, c, &self.profile);
                        let m = est.m_hat();
                        let ok = m.is_some_and(|m| lo <= m && m <= hi);
                        let outcome = match est {
                            MomentEstimate::Scale { m_hat, .. } => Outcome::Point(m_hat),
                            MomentEstimate::Bottom => Outcome::Bottom,
                        };
                        (outcome, trace.selected.iter().all(|b| b.true_count > 0), ok)
                    }
                    Err(e) => (error_outcome(&e), true, false),
                }
            }
            other => unreachable!("{} is not a trial algorithm", other.name()),
        };
        TrialReport {
            trial: index,
            seed,
            outcome,
            success,
            selected_bins_occupied: occupied,
            wall_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
        }
    }
}

/// `[E|X - mu|, 2 k' C sqrt(log C) E|X - mu|]`.
pub fn moment_band(spec: &DistributionSpec, c: f64, profile: &ConstantsProfile) -> (f64, f64) {
    let m = spec.mean_abs_dev();
    (m, 2.0 * profile.k_prime * c * profile.log_c(c).sqrt() * m)
}

fn point_or_bottom(v: Option<f64>) -> Outcome {
    v.map_or(Outcome::Bottom, Outcome::Point)
}

/// Success, bottom and error tallies with 95% intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment_id: String,
    pub algorithm: String,
    pub distribution: String,
    pub trials: u64,
    pub successes: u64,
    pub bottoms: u64,
    pub errors: u64,
    pub selected_bin_violations: u64,
    pub success_rate: Option<Interval>,
    pub bottom_rate: Option<Interval>,
    pub error_rate: Option<Interval>,
    pub success_target: Option<f64>,
    /// `None` when there is no target or no trials.
    pub meets_target: Option<bool>,
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub prepared: Prepared,
    pub trials: Vec<TrialReport>,
    pub summary: Summary,
}

/// Runs every trial on the rayon pool; reports come back in trial order.
pub fn run_experiment(config: &ExperimentConfig, timing: bool) -> Result<ExperimentRun, ConfigError> {
    let prepared = config.prepare()?;
    if config.algorithm.is_audit() {
        return Err(field("algorithm", "audit algorithms run through the `audit` verb"));
    }
    let trials: Vec<TrialReport> = (0..config.trials).into_par_iter().map(|i| prepared.run_trial(i, timing)).collect();
    let summary = summarize(&prepared, &trials);
    Ok(ExperimentRun { prepared, trials, summary })
}

fn summarize(p: &Prepared, trials: &[TrialReport]) -> Summary {
    let n = trials.len() as u64;
    let count = |f: &dyn Fn(&TrialReport) -> bool| trials.iter().filter(|t| f(t)).count() as u64;
    let successes = count(&|t| t.success);
    let bottoms = count(&|t| t.outcome == Outcome::Bottom);
    let errors = count(&|t| matches!(t.outcome, Outcome::Error(_)));
    let success_rate = clopper_pearson(successes, n, 0.95);
    let meets_target = match (p.config.success_target, success_rate) {
        (Some(t), Some(r)) => Some(r.estimate >= t),
        _ => None,
    };
    Summary {
        experiment_id: p.experiment_id.clone(),
        algorithm: p.config.algorithm.name().into(),
        distribution: p.config.distribution.label(),
        trials: n,
        successes,
        bottoms,
        errors,
        selected_bin_violations: count(&|t| !t.selected_bins_occupied),
        success_rate,
        bottom_rate: clopper_pearson(bottoms, n, 0.95),
        error_rate: clopper_pearson(errors, n, 0.95),
        success_target: p.config.success_target,
        meets_target,
    }
}

/// Column order of the trial CSV.
pub const CSV_HEADER: [&str; 16] = [
    "experiment_id",
    "trial",
    "algorithm",
    "distribution",
    "n",
    "epsilon",
    "delta",
    "alpha",
    "C_declared",
    "C_oracle",
    "profile",
    "seed",
    "outcome",
    "output_value",
    "success",
    "wall_ms",
];

impl ExperimentRun {
    /// Writes the header and one row per trial.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let p = &self.prepared;
        let cfg = &p.config;
        let c_declared = match cfg.c_declared {
            DeclaredC::Value(v) => v.to_string(),
            _ => format!("{}={}", cfg.c_declared.label(), p.c_declared),
        };
        for t in &self.trials {
            w.write_record([
                p.experiment_id.clone(),
                t.trial.to_string(),
                cfg.algorithm.name().to_string(),
                cfg.distribution.label(),
                cfg.n.to_string(),
                cfg.epsilon.to_string(),
                cfg.delta.to_string(),
                cfg.alpha.map(|a| a.to_string()).unwrap_or_default(),
                c_declared.clone(),
                p.c_oracle.to_string(),
                cfg.profile.label().to_string(),
                t.seed.to_string(),
                t.outcome.label(),
                t.outcome.value().map(|v| v.to_string()).unwrap_or_default(),
                t.success.to_string(),
                t.wall_ms.map(|v| format!("{v:.3}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(algorithm: &str, n: usize, trials: u64) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"distribution":"uniform","algorithm":"{algorithm}","n":{n},"trials":{trials},"seed":7,"alpha":0.1}}"#
        ))
        .unwrap()
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let s: Vec<u64> = (0..1000).map(|i| trial_seed(42, i)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), s.len());
        assert_eq!(trial_seed(42, 3), s[3]);
        assert_ne!(trial_seed(43, 3), s[3]);
    }

    #[test]
    fn zero_trials_gives_empty_report() {
        let run = run_experiment(&config("interior_point", 1000, 0), false).unwrap();
        assert!(run.trials.is_empty());
        assert_eq!(run.summary.success_rate, None);
        assert_eq!(run.summary.meets_target, None);
        let csv = String::from_utf8(run.csv_bytes()).unwrap();
        assert_eq!(csv.trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn small_n_reports_soundness_errors() {
        let run = run_experiment(&config("interior_point", 1000, 3), false).unwrap();
        assert_eq!(run.summary.errors, 3);
        assert!(run.trials.iter().all(|t| t.outcome == Outcome::Error("soundness_violation")));
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = r#"{"distribution":"nope","algorithm":"median","n":10,"trials":1,"seed":1,"alpha":0.1}"#;
        let e = ExperimentConfig::from_json(bad).unwrap().prepare().unwrap_err();
        assert!(e.to_string().contains("distribution"), "{e}");
        let bad = r#"{"distribution":"uniform","algorithm":"median","n":10,"trials":1,"seed":1}"#;
        let e = ExperimentConfig::from_json(bad).unwrap().prepare().unwrap_err();
        assert!(e.to_string().contains("alpha"));
        let bad = r#"{"distribution":"uniform","algorithm":"moment","n":10,"trials":1,"seed":1,"c_declared":1.5}"#;
        assert!(ExperimentConfig::from_json(bad).unwrap().prepare().is_err());
        assert!(ExperimentConfig::from_json(r#"{"distribution":"uniform"}"#).is_err());
    }

    #[test]
    fn oracle_c_uses_floor_and_median_slice() {
        let p = config("interior_point", 10, 1).prepare().unwrap();
        assert!((p.c_oracle - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.c_declared, DEFAULT_C_FLOOR);
        let m = config("median", 10, 1).prepare().unwrap();
        // The middle of a uniform is uniform.
        assert!((m.c_oracle - 4.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn hash_ignores_explicit_id() {
        let mut a = config("interior_point", 10, 1);
        let h = a.content_hash();
        a.experiment_id = Some("x".into());
        assert_eq!(a.content_hash(), h);
        assert_eq!(h.len(), 12);
    }
}
