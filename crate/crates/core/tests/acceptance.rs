//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --release --test acceptance -- 1 8`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fdsec::channel::{sample_channels, SystemConfig};
use fdsec::design::{robust_design, BcdOptions};
use fdsec::experiment::{run_experiment, ExperimentConfig, ExperimentResult, Method, RunOptions, TrialRow};
use fdsec::oracle::{
    check_barrier_gradient, check_grid_oracle, check_lambda_max_sdp, check_lmi_soundness, check_logdet_trace,
    check_worst_case_soundness, OracleReport,
};
use fdsec::secrecy::worst_case_rate;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }

    fn from_reports(reports: &[OracleReport]) -> Self {
        Self::new(
            reports.iter().all(OracleReport::passed),
            reports.iter().map(OracleReport::summary).collect::<Vec<_>>().join("; "),
        )
    }

    fn within(self, elapsed: Duration, limit: Duration) -> Self {
        let ok = elapsed <= limit;
        Self::new(
            self.passed && ok,
            format!("{}; runtime {:.1}s (limit {}s)", self.detail, elapsed.as_secs_f64(), limit.as_secs()),
        )
    }
}

fn config_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_config(name: &str, dir: &tempfile::TempDir) -> ExperimentResult {
    let mut c = ExperimentConfig::load(&config_file(name)).expect("shipped config parses");
    c.output_path = dir.path().to_path_buf();
    run_experiment(&c, &RunOptions::default()).expect("experiment runs")
}

/// Mean clamped rate per sweep value over successful trials below `trials`.
fn means(rows: &[TrialRow], method: Method, trials: usize) -> Vec<(f64, f64)> {
    let mut values: Vec<f64> = rows.iter().map(|r| r.sweep_value).collect();
    values.dedup();
    values
        .into_iter()
        .map(|v| {
            let ok: Vec<f64> = rows
                .iter()
                .filter(|r| r.sweep_value == v && r.method == method && r.trial < trials && r.status.is_ok())
                .map(|r| r.r_w)
                .collect();
            (v, ok.iter().sum::<f64>() / ok.len() as f64)
        })
        .collect()
}

fn fmt_curve(c: &[(f64, f64)]) -> String {
    c.iter().map(|(v, m)| format!("{v}:{m:.4}")).collect::<Vec<_>>().join(" ")
}

fn monotone(c: &[(f64, f64)], increasing: bool) -> bool {
    c.windows(2).all(|w| if increasing { w[1].1 >= w[0].1 } else { w[1].1 <= w[0].1 })
}

fn dominates(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.1 >= y.1)
}

/// Fraction of grid points where dominance holds and both curves keep
/// their direction on the step into the point.
fn ordering_fraction(a: &[(f64, f64)], b: &[(f64, f64)], increasing: bool) -> f64 {
    let step_ok = |c: &[(f64, f64)], k: usize| {
        k == 0 || if increasing { c[k].1 >= c[k - 1].1 } else { c[k].1 <= c[k - 1].1 }
    };
    let good = (0..a.len()).filter(|&k| a[k].1 >= b[k].1 && step_ok(a, k) && step_ok(b, k)).count();
    good as f64 / a.len() as f64
}

struct Shared {
    fig2_eps005: Option<ExperimentResult>,
}

/// Criteria 1 and 2 share the same 50 trials.
fn criterion_1_2(out: &mut Vec<(usize, &'static str, Outcome)>) {
    let config = SystemConfig::default().with_epsilon(0.05);
    let opts = BcdOptions::default();
    let start = Instant::now();
    let mut worst_decrease: f64 = 0.0;
    let mut converged = 0;
    let mut worst_gap = f64::INFINITY;
    let mut errors = Vec::new();
    let trials = 50;
    for seed in 1..=trials as u64 {
        let ch = sample_channels(&config, seed).expect("channels");
        let r = match robust_design(&ch, &config, &opts) {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        worst_decrease = worst_decrease.max(r.bcd.trace.max_decrease());
        if r.bcd.converged() && r.bcd.trace.iterations() <= 50 {
            converged += 1;
        }
        let relaxed = worst_case_rate(&r.bcd.design, &ch, &config).expect("rate");
        let extracted = worst_case_rate(&r.design, &ch, &config).expect("rate");
        worst_gap = worst_gap.min(extracted.r_w_raw - relaxed.r_w_raw);
    }
    let elapsed = start.elapsed();
    let c1 = Outcome::new(
        errors.is_empty() && worst_decrease <= 1e-6 && converged as f64 >= 0.95 * trials as f64,
        format!(
            "{trials} trials, largest F decrease {worst_decrease:.2e} (limit 1e-6), converged {converged}/{trials} (need 95%){}",
            if errors.is_empty() { String::new() } else { format!(", errors: {}", errors.join("; ")) }
        ),
    )
    .within(elapsed, Duration::from_secs(300));
    let c2 = Outcome::new(
        errors.is_empty() && worst_gap >= -1e-8,
        format!("min R_w(extracted) - R_w(relaxed) = {worst_gap:.3e} (limit -1e-8)"),
    );
    out.push((1, "BCD monotonicity", c1));
    out.push((2, "rank-one extraction dominance", c2));
}

fn criterion_3() -> Outcome {
    let (a, b) = check_worst_case_soundness(&SystemConfig::default(), 1..21, 1000, &BcdOptions::default())
        .expect("soundness check runs");
    Outcome::from_reports(&[a, b])
}

fn criterion_4() -> Outcome {
    let r = check_lmi_soundness(&SystemConfig::default(), 1..21, 1000, &BcdOptions::default()).expect("check runs");
    Outcome::from_reports(&[r])
}

fn criterion_5(shared: &mut Shared) -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let a = run_config("fig2_eps005.cfg", &dir);
    let b = run_config("fig2_eps010.cfg", &dir);
    let elapsed = start.elapsed();
    let full_a = means(&a.rows, Method::Robust, usize::MAX);
    let full_b = means(&b.rows, Method::Robust, usize::MAX);
    let quick = ordering_fraction(
        &means(&a.rows, Method::Robust, 20),
        &means(&b.rows, Method::Robust, 20),
        true,
    );
    let ok = monotone(&full_a, true) && monotone(&full_b, true) && dominates(&full_a, &full_b) && quick >= 0.8;
    shared.fig2_eps005 = Some(a);
    Outcome::new(
        ok,
        format!(
            "eps=0.05 [{}]; eps=0.1 [{}]; 20-trial ordering holds on {:.0}% of points",
            fmt_curve(&full_a),
            fmt_curve(&full_b),
            100.0 * quick
        ),
    )
    .within(elapsed, Duration::from_secs(3600))
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let a = means(&run_config("fig3_ne2.cfg", &dir).rows, Method::Robust, usize::MAX);
    let b = means(&run_config("fig3_ne3.cfg", &dir).rows, Method::Robust, usize::MAX);
    let elapsed = start.elapsed();
    Outcome::new(
        monotone(&a, false) && monotone(&b, false) && dominates(&a, &b),
        format!("N_E=2 [{}]; N_E=3 [{}]; runtime {:.1}s", fmt_curve(&a), fmt_curve(&b), elapsed.as_secs_f64()),
    )
}

fn criterion_7(shared: &mut Shared) -> Outcome {
    if shared.fig2_eps005.is_none() {
        let dir = tempfile::tempdir().expect("tempdir");
        shared.fig2_eps005 = Some(run_config("fig2_eps005.cfg", &dir));
    }
    let rows = &shared.fig2_eps005.as_ref().expect("set above").rows;
    let robust = means(rows, Method::Robust, usize::MAX);
    let proj = means(rows, Method::Projection, usize::MAX);
    let gaps: Vec<f64> = robust.iter().zip(&proj).map(|(a, b)| a.1 - b.1).collect();
    let pairs = gaps.len().saturating_sub(1);
    let growing = gaps.windows(2).filter(|w| w[1] >= w[0]).count();
    Outcome::new(
        dominates(&robust, &proj) && growing as f64 >= 0.8 * pairs as f64,
        format!(
            "gaps [{}]; gap grows on {growing}/{pairs} consecutive pairs",
            gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let r = check_grid_oracle(1..21, &BcdOptions::default()).expect("grid oracle runs");
    Outcome::from_reports(&[r]).within(start.elapsed(), Duration::from_secs(120))
}

fn criterion_9() -> Outcome {
    Outcome::from_reports(&[
        check_lambda_max_sdp(100, 7).expect("lambda_max runs"),
        check_logdet_trace(&[1, 2, 3, 4, 5, 6]).expect("logdet-trace runs"),
        check_barrier_gradient(20, 7),
    ])
}

fn criterion_10() -> Outcome {
    let base = ExperimentConfig {
        id: "determinism".into(),
        values: vec![0.0, 10.0],
        trials: 2,
        base_seed: 42,
        methods: vec![Method::Robust, Method::Projection],
        ..ExperimentConfig::default()
    };
    let opts = RunOptions { jobs: 1, timing: false };
    let mut files = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().expect("tempdir");
        let c = ExperimentConfig { output_path: dir.path().to_path_buf(), ..base.clone() };
        run_experiment(&c, &opts).expect("run");
        files.push((
            std::fs::read(c.trials_path()).expect("trials csv"),
            std::fs::read(c.aggregate_path()).expect("aggregate csv"),
        ));
    }
    Outcome::new(
        files[0] == files[1],
        format!("per-trial CSV {} bytes, aggregate CSV {} bytes", files[0].0.len(), files[0].1.len()),
    )
}

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let mut shared = Shared { fig2_eps005: None };
    let mut results: Vec<(usize, &'static str, Outcome)> = Vec::new();
    let suite_start = Instant::now();
    if want(1) || want(2) {
        criterion_1_2(&mut results);
        results.retain(|(k, _, _)| want(*k));
    }
    let single: [(usize, &'static str); 8] = [
        (3, "worst-case soundness"),
        (4, "S-procedure soundness"),
        (8, "tiny-instance grid oracle"),
        (9, "solver unit suite"),
        (10, "determinism"),
        (5, "rate versus total power"),
        (7, "robust versus projection baseline"),
        (6, "rate versus uncertainty radius"),
    ];
    for (k, name) in single {
        if !want(k) {
            continue;
        }
        let start = Instant::now();
        let o = match k {
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(&mut shared),
            6 => criterion_6(),
            7 => criterion_7(&mut shared),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        eprintln!("criterion {k} done in {:.1}s", start.elapsed().as_secs_f64());
        results.push((k, name, o));
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (k, name, o) in &results {
        println!("{} criterion {k} ({name}): {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        suite_start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
