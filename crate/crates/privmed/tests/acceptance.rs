//! Acceptance suite. Runs every criterion in order, prints one
//! `PASS`/`FAIL` line per criterion and exits non-zero if any failed.
//!
//! `cargo test --release -p privmed --test acceptance -- 5 9` runs a subset.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use privmed::audit::{
    audit_interior_point, audit_noiseless_argmax, check_conditional_boundedness, check_interval_mass, check_q_sandwich,
    check_q_second_moment, check_tail_bound, check_two_sided_mass, pair_moments, AuditReport, Verdict,
};
use privmed::distributions::{suite, DistributionSpec};
use privmed::experiment::{run_experiment, ExperimentConfig, ExperimentRun};
use privmed::numeric::integrate_split;
use privmed::stats::ks_statistic;
use privmed_core::histogram::{BinCounts, BinIndex, Binning};
use privmed_core::{middle_slice, pair_differences, ConstantsProfile, PrivacyBudget, TLapParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const KS_MAX: f64 = 0.005;
const DENSITY_TOL: f64 = 1e-9;
const SUCCESS_MIN: f64 = 0.95;
const MOMENT_BETA: f64 = 0.1;
/// Allowed excess over `MOMENT_BETA`, in binomial standard deviations.
const MOMENT_SIGMAS: f64 = 3.0;
const MEDIAN_C_FLOOR: f64 = 2.05;
const SEED: u64 = 20_240_917;

fn budget() -> PrivacyBudget {
    PrivacyBudget::new(1.0, 1e-6).expect("valid budget")
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Trial counts from criteria 5 to 7, consumed by criterion 8.
#[derive(Default)]
struct BinLedger {
    trials: u64,
    violations: u64,
    runs: u32,
}

impl BinLedger {
    fn record(&mut self, run: &ExperimentRun) {
        self.trials += run.summary.trials;
        self.violations += run.summary.selected_bin_violations;
        self.runs += 1;
    }
}

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).expect("valid config")
}

fn within(limit_s: u64, elapsed: Duration) -> (bool, String) {
    let ok = elapsed <= Duration::from_secs(limit_s);
    (ok, format!("{:.1}s of {limit_s}s", elapsed.as_secs_f64()))
}

fn worst(reports: &[AuditReport]) -> String {
    reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} {} est {} bound {} ({})", r.test, r.subject, r.estimate, r.bound, r.note))
        .collect::<Vec<_>>()
        .join("; ")
}

fn tlap_fidelity() -> Outcome {
    let start = Instant::now();
    let noise = TLapParams::for_histogram(budget());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut z: Vec<f64> = (0..1_000_000).map(|_| noise.sample(&mut rng)).collect();
    let outside = z.iter().filter(|v| v.abs() > noise.z_max()).count();
    let ks = ks_statistic(&mut z, |v| noise.cdf(v));
    let zm = noise.z_max();
    let mass = integrate_split(|v| noise.pdf(v), -zm, zm, &[0.0], 1e-13).value;
    let (fast, time) = within(10, start.elapsed());
    let pass = ks < KS_MAX && outside == 0 && (mass - 1.0).abs() <= DENSITY_TOL && fast;
    Outcome::new(pass, format!("KS {ks:.5}, {outside} outside support, density mass {mass:.12}, {time}"))
}

fn pair_moment_checks() -> Outcome {
    let start = Instant::now();
    let specs = [
        DistributionSpec::gaussian(0.0, 1.0),
        DistributionSpec::uniform(0.0, 1.0),
        DistributionSpec::two_point(0.0, 1.0, 0.5),
        DistributionSpec::exponential(1.0),
    ];
    let mut reports = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let m = pair_moments(spec, 10_000_000, SEED + i as u64);
        reports.push(check_q_sandwich(spec, &m));
        reports.push(check_q_second_moment(spec, &m));
    }
    let (fast, time) = within(60, start.elapsed());
    let bad = worst(&reports);
    let pass = bad.is_empty() && fast;
    Outcome::new(pass, format!("{} checks at 1e7 pairs, {time}{}", reports.len(), sep(&bad)))
}

fn sep(s: &str) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("; {s}")
    }
}

fn tail_bound() -> Outcome {
    let start = Instant::now();
    let mut reports = Vec::new();
    for (i, (_, spec)) in suite().iter().enumerate() {
        for (j, t) in [2.0, 5.0, 10.0, 20.0].into_iter().enumerate() {
            reports.push(check_tail_bound(spec, t, 10_000_000, SEED + 16 * i as u64 + j as u64));
        }
    }
    let na = reports.iter().filter(|r| r.verdict == Verdict::NotApplicable).count();
    let (fast, time) = within(120, start.elapsed());
    let bad = worst(&reports);
    let pass = bad.is_empty() && na == 0 && fast;
    Outcome::new(pass, format!("{} (distribution, t) cells at 1e7 pairs, {na} n/a, {time}{}", reports.len(), sep(&bad)))
}

fn quadrature_checks() -> Outcome {
    let start = Instant::now();
    let mut reports = Vec::new();
    for (_, spec) in suite() {
        let c = spec.normalized_variance().expect("finite moments").c_value;
        reports.push(check_interval_mass(&spec, &ConstantsProfile::relaxed(), 2.5));
        reports.push(check_interval_mass(&spec, &ConstantsProfile::paper(), 2.5));
        reports.push(check_two_sided_mass(&spec, 2.0));
        reports.push(check_conditional_boundedness(&spec, None, 128.0 * c));
        reports.push(check_conditional_boundedness(&spec, Some(2048.0 * c), 2048.0 * c));
    }
    let na = reports.iter().filter(|r| r.verdict == Verdict::NotApplicable).count();
    let (fast, time) = within(60, start.elapsed());
    let bad = worst(&reports);
    let pass = bad.is_empty() && na == 0 && fast;
    Outcome::new(pass, format!("{} checks, {na} n/a, {time}{}", reports.len(), sep(&bad)))
}

fn success_runs(algorithm: &str, extra: &str, ledger: &mut BinLedger) -> (Vec<String>, bool) {
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, (name, _)) in suite().iter().enumerate() {
        let cfg = config(&format!(
            r#"{{"distribution":"{name}","algorithm":"{algorithm}","n":1000000,"trials":200,"seed":{}{extra}}}"#,
            SEED + i as u64
        ));
        let run = run_experiment(&cfg, false).expect("runs");
        ledger.record(&run);
        let rate = run.summary.success_rate.expect("trials > 0").estimate;
        ok &= rate >= SUCCESS_MIN;
        lines.push(format!("{name} {rate:.3}"));
    }
    (lines, ok)
}

fn interior_point_success(ledger: &mut BinLedger) -> Outcome {
    let start = Instant::now();
    let (lines, ok) = success_runs("interior_point", "", ledger);
    let (fast, time) = within(900, start.elapsed());
    Outcome::new(ok && fast, format!("success rates {}, {time}", lines.join(", ")))
}

fn median_success(ledger: &mut BinLedger) -> Outcome {
    let start = Instant::now();
    let mut all = Vec::new();
    let mut ok = true;
    for alpha in [0.05, 0.1] {
        let extra = format!(r#","alpha":{alpha},"c_floor":{MEDIAN_C_FLOOR}"#);
        let (lines, pass) = success_runs("median", &extra, ledger);
        ok &= pass;
        all.push(format!("alpha {alpha}: {}", lines.join(", ")));
    }
    let (fast, time) = within(900, start.elapsed());
    Outcome::new(ok && fast, format!("{}; {time}", all.join("; ")))
}

fn moment_band(ledger: &mut BinLedger) -> Outcome {
    let start = Instant::now();
    let trials = 200.0;
    let limit = MOMENT_BETA + MOMENT_SIGMAS * (MOMENT_BETA * (1.0 - MOMENT_BETA) / trials).sqrt();
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, (name, _)) in suite().iter().enumerate() {
        let cfg = config(&format!(
            r#"{{"distribution":"{name}","algorithm":"moment","n":1000000,"trials":200,"beta":{MOMENT_BETA},"seed":{}}}"#,
            SEED + 100 + i as u64
        ));
        let run = run_experiment(&cfg, false).expect("runs");
        ledger.record(&run);
        let outside = 1.0 - run.summary.success_rate.expect("trials > 0").estimate;
        ok &= outside <= limit;
        lines.push(format!("{name} {outside:.3}"));
    }
    let (fast, time) = within(600, start.elapsed());
    Outcome::new(ok && fast, format!("outside-band rates {} (limit {limit:.4}), {time}", lines.join(", ")))
}

fn selected_bins(ledger: &BinLedger) -> Outcome {
    let expected_runs = 5 + 10 + 5;
    let pass = ledger.runs == expected_runs && ledger.violations == 0 && ledger.trials > 0;
    Outcome::new(
        pass,
        format!("{} violations over {} trials in {} runs", ledger.violations, ledger.trials, ledger.runs),
    )
}

fn dp_audit() -> Outcome {
    let start = Instant::now();
    let trials = 100_000;
    let ip = audit_interior_point(75_000, 2.5, &ConstantsProfile::relaxed(), budget(), trials, SEED)
        .expect("crafted neighbors");
    let power = audit_noiseless_argmax(trials, budget(), SEED);
    let (fast, time) = within(600, start.elapsed());
    let pass = ip.verdict == Verdict::Pass && power.verdict == Verdict::Fail && fast;
    Outcome::new(
        pass,
        format!(
            "interior_point_main {:?} (p {:.4} vs bound {:.4}, {}), noiseless argmax {:?} (violation {:.3}), {time}",
            ip.verdict,
            ip.estimate,
            ip.bound,
            ip.note,
            power.verdict,
            power.violation.unwrap_or(0.0)
        ),
    )
}

fn count_changes(a: &BinCounts, b: &BinCounts) -> (usize, u64) {
    let bins: BTreeSet<BinIndex> = a.iter().chain(b.iter()).map(|(l, _)| l).collect();
    let diffs: Vec<u64> = bins.iter().map(|&l| a.get(l).abs_diff(b.get(l))).filter(|&d| d > 0).collect();
    (diffs.len(), diffs.into_iter().max().unwrap_or(0))
}

fn multiset_diff(a: &[f64], b: &[f64]) -> usize {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].total_cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    a.len().max(b.len()) - common
}

/// Every single-point substitution on datasets of size 2..=50. Data are
/// distinct even integers scaled by 1/4; replacements are all odd integers
/// scaled the same way, covering every gap, both ends and the uniform and
/// dyadic bin edges.
fn sensitivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let uniform = Binning::Uniform { width: 1.0 };
    let (mut hist_cases, mut slice_cases) = (0u64, 0u64);
    let mut failures = Vec::new();
    for n in 2..=50usize {
        let mut x: Vec<f64> = (0..n).map(|i| 0.5 * i as f64).collect();
        for i in (1..n).rev() {
            x.swap(i, rng.random_range(0..=i));
        }
        let candidates: Vec<f64> = (-1..=2 * n as i64 + 1).filter(|v| v % 2 != 0).map(|v| 0.25 * v as f64).collect();
        let base_u = BinCounts::from_values(&x, uniform).expect("finite");
        let base_d = BinCounts::from_values(&pair_differences(&x).expect("n >= 2"), Binning::Dyadic).expect("finite");
        let slices: Vec<_> = [(0.2, 10.0), (0.1, 40.0), (0.24, 1000.0)]
            .into_iter()
            .filter_map(|(a, k)| middle_slice(&x, a, k).ok().map(|s| (a, k, s.values)))
            .collect();
        for i in 0..n {
            for &c in &candidates {
                let mut y = x.clone();
                y[i] = c;
                let u = count_changes(&base_u, &BinCounts::from_values(&y, uniform).expect("finite"));
                let q = pair_differences(&y).expect("n >= 2");
                let d = count_changes(&base_d, &BinCounts::from_values(&q, Binning::Dyadic).expect("finite"));
                hist_cases += 2;
                for (kind, (bins, size)) in [("uniform", u), ("dyadic", d)] {
                    if bins > 2 || size > 1 {
                        failures.push(format!("{kind} n={n} i={i} c={c}: {bins} bins, max change {size}"));
                    }
                }
                for (a, k, base) in &slices {
                    let other = middle_slice(&y, *a, *k).map(|s| s.values).unwrap_or_default();
                    slice_cases += 1;
                    if multiset_diff(base, &other) > 1 {
                        failures.push(format!("slice n={n} alpha={a} k={k} i={i} c={c}"));
                    }
                }
            }
        }
    }
    let detail = format!(
        "{hist_cases} histogram and {slice_cases} slice substitutions, {} violations{}",
        failures.len(),
        sep(&failures.iter().take(3).cloned().collect::<Vec<_>>().join("; "))
    );
    Outcome::new(failures.is_empty(), detail)
}

/// Random small instances inside a window; empty bins of the window get
/// their own noise under the eager variant. Thresholds sit above `z_max`.
fn lazy_eager() -> Outcome {
    let noise = TLapParams::for_histogram(budget());
    let zm = noise.z_max();
    let mut mismatches = 0;
    let mut nonempty = 0;
    for seed in 0..1000u64 {
        let mut gen = ChaCha8Rng::seed_from_u64(SEED ^ seed);
        let bins = gen.random_range(1..8);
        let mut values = Vec::new();
        for _ in 0..bins {
            let bin = gen.random_range(-20..20) as f64;
            let count = gen.random_range(1..(3.0 * zm) as usize);
            values.extend((0..count).map(|_| bin + gen.random::<f64>()));
        }
        let counts = BinCounts::from_values(&values, Binning::Uniform { width: 1.0 }).expect("finite");
        let mut lazy_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut eager_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut empty_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1 << 32));
        let lazy = counts.add_noise(noise, &mut lazy_rng);
        let eager = counts.add_noise_eager(-25..=25, noise, &mut eager_rng, &mut empty_rng);
        for t in [zm * 1.0001, zm * 1.5, zm * 2.5] {
            let a = lazy.thresholded_bins(t).expect("threshold above z_max");
            let b = eager.thresholded_bins(t).expect("threshold above z_max");
            nonempty += usize::from(!a.is_empty());
            mismatches += usize::from(a != b);
        }
    }
    Outcome::new(
        mismatches == 0,
        format!("3000 comparisons over 1000 seeds, {nonempty} non-empty, {mismatches} mismatches"),
    )
}

fn determinism() -> Outcome {
    let configs = [
        r#"{"distribution":"gaussian","algorithm":"interior_point","n":300000,"trials":24,"seed":7}"#,
        r#"{"distribution":"mixture","algorithm":"median","alpha":0.1,"c_floor":2.05,"n":600000,"trials":12,"seed":8}"#,
        r#"{"distribution":"pareto","algorithm":"moment","n":200000,"trials":24,"seed":9}"#,
    ];
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).max(16);
    let mut identical = 0;
    for json in configs {
        let cfg = config(json);
        let bytes = |workers: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("pool");
            pool.install(|| run_experiment(&cfg, false).expect("runs").csv_bytes())
        };
        let a = bytes(1);
        let b = bytes(1);
        let c = bytes(threads);
        identical += usize::from(a == b && a == c && !a.is_empty());
    }
    Outcome::new(
        identical == configs.len(),
        format!("{identical}/{} configs byte-identical across repeat and 1 vs {threads} workers", configs.len()),
    )
}

fn main() -> ExitCode {
    let filters: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |i: usize| filters.is_empty() || filters.contains(&i);
    let mut ledger = BinLedger::default();
    let mut failed = 0;
    let mut report = |i: usize, name: &str, f: &mut dyn FnMut(&mut BinLedger) -> Outcome| {
        if !wanted(i) {
            return;
        }
        let o = f(&mut ledger);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {i:>2} {verdict} {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    };
    report(1, "truncated Laplace fidelity", &mut |_| tlap_fidelity());
    report(2, "pair difference moments", &mut |_| pair_moment_checks());
    report(3, "pair difference tail bound", &mut |_| tail_bound());
    report(4, "quadrature mass and boundedness checks", &mut |_| quadrature_checks());
    report(5, "interior-point success", &mut interior_point_success);
    report(6, "median success", &mut median_success);
    report(7, "moment estimate band", &mut moment_band);
    if filters.is_empty() || [5, 6, 7, 8].iter().all(|i| filters.contains(i)) {
        report(8, "selected bins are occupied", &mut |l| selected_bins(l));
    }
    report(9, "empirical DP audit", &mut |_| dp_audit());
    report(10, "one-point sensitivity", &mut |_| sensitivity());
    report(11, "lazy and eager histograms agree", &mut |_| lazy_eager());
    report(12, "deterministic CSV output", &mut |_| determinism());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
