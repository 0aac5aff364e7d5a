use super::*;

fn tiny(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        id: "t".into(),
        values: vec![0.0, 6.0],
        trials: 2,
        output_path: dir.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn parses_key_value_files() {
    let c = ExperimentConfig::parse(
        "# comment\nexperiment_id = fig3\nn_t=4\nsweep=epsilon\nsweep_value=0.01\nsweep_value=0.02 # inline\n\
         trials=7\nbase_seed=9\nmethods=robust\np_tot_dbm=10\noutput_path=out\n",
    )
    .unwrap();
    assert_eq!(c.id, "fig3");
    assert_eq!(c.system.n_t, 4);
    assert_eq!(c.sweep, SweepParam::Epsilon);
    assert_eq!(c.values, vec![0.01, 0.02]);
    assert_eq!((c.trials, c.base_seed), (7, 9));
    assert_eq!(c.methods, vec![Method::Robust]);
    assert_eq!(c.output_path, PathBuf::from("out"));
}

#[test]
fn rejects_bad_configs() {
    for text in [
        "trials=0",
        "sweep_value=2\nsweep_value=1",
        "sweep_value=1\nsweep_value=1",
        "unknown=3",
        "n_t",
        "n_t=x",
        "methods=fast",
        "sweep=n_t",
        "sweep=n_e\nsweep_value=3",
        "sweep=n_e\nn_t=5\nsweep_value=1.5",
        "methods=",
    ] {
        assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
    }
}

#[test]
fn epsilon_sweep_sets_all_radii() {
    let c = SweepParam::Epsilon.apply(&SystemConfig::default(), 0.07).unwrap();
    assert_eq!((c.delta_hl, c.delta_he, c.delta_ge), (0.07, 0.07, 0.07));
    let c = SweepParam::NE.apply(&SystemConfig { n_t: 4, ..SystemConfig::default() }, 3.0).unwrap();
    assert_eq!(c.n_e, 3);
}

#[test]
fn compensated_sum_recovers_small_terms() {
    let mut s = CompensatedSum::default();
    for x in [1e16, 1.0, -1e16, 1.0] {
        s.add(x);
    }
    assert_eq!(s.value(), 2.0);
}

#[test]
fn failed_trials_are_excluded_from_means() {
    let row = |r_w: f64, status| TrialRow {
        sweep_value: 1.0,
        trial: 0,
        seed: 0,
        method: Method::Robust,
        r_w,
        r_w_raw: r_w,
        eta1: 0.0,
        eta2_min: 0.0,
        theta1: 0.0,
        theta2: 0.0,
        bcd_iters: 4,
        status,
        wall_ms: 0.0,
    };
    let rows = [
        row(1.0, TrialStatus::Ok),
        row(3.0, TrialStatus::IterationLimit),
        row(f64::NAN, TrialStatus::Failed("x, y".into())),
    ];
    let a = aggregate(&rows, &[1.0], &[Method::Robust]);
    assert_eq!(a.len(), 1);
    assert_eq!((a[0].mean_r_w, a[0].n_ok, a[0].n_fail), (2.0, 2, 1));
    assert!((a[0].std_r_w - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(rows[2].status.to_string(), "failed: x; y");
}

#[test]
fn run_writes_both_csvs_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    let res = run_experiment(&c, &RunOptions { jobs: 2, timing: false }).unwrap();
    assert_eq!(res.rows.len(), 8);
    let keys: Vec<_> = res.rows.iter().map(|r| (r.sweep_value.to_bits(), r.trial, r.method.name())).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| f64::from_bits(a.0).total_cmp(&f64::from_bits(b.0)).then(a.1.cmp(&b.1)));
    assert_eq!(keys.iter().map(|k| (k.0, k.1)).collect::<Vec<_>>(), sorted.iter().map(|k| (k.0, k.1)).collect::<Vec<_>>());
    let trials = fs::read_to_string(c.trials_path()).unwrap();
    assert_eq!(trials.lines().count(), 9);
    assert!(trials.starts_with("experiment_id,sweep_name,sweep_value,trial,seed,method,r_w,"));
    assert!(!trials.contains('\r'));
    let agg = fs::read_to_string(c.aggregate_path()).unwrap();
    assert_eq!(agg.lines().count(), 5);
    for r in &res.rows {
        assert!(r.status.is_ok(), "{:?}", r.status);
        assert!(r.r_w >= 0.0 && r.r_w >= r.r_w_raw);
        assert_eq!(r.seed, c.base_seed + r.trial as u64);
        assert_eq!(r.wall_ms, 0.0);
        if r.method == Method::Projection {
            assert_eq!(r.bcd_iters, 0);
        }
    }
}

#[test]
fn parallel_and_serial_runs_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&tiny(a.path()), &RunOptions { jobs: 1, timing: false }).unwrap();
    run_experiment(&tiny(b.path()), &RunOptions { jobs: 3, timing: false }).unwrap();
    for name in ["t_trials.csv", "t_aggregate.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn traces_are_monotone_and_start_at_the_initial_point() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig { methods: vec![Method::Robust], ..tiny(dir.path()) };
    let rows = emit_convergence_trace(&c, &RunOptions::default()).unwrap();
    assert!(rows.iter().all(|r| r.f.is_finite()));
    for w in rows.windows(2) {
        if w[0].trial == w[1].trial && w[0].sweep_value == w[1].sweep_value {
            assert_eq!(w[1].iteration, w[0].iteration + 1);
            assert!(w[1].f >= w[0].f - 1e-6);
        }
    }
    let text = fs::read_to_string(c.trace_path()).unwrap();
    assert_eq!(text.lines().count(), rows.len() + 1);
    let only_projection = ExperimentConfig { methods: vec![Method::Projection], ..tiny(dir.path()) };
    assert!(emit_convergence_trace(&only_projection, &RunOptions::default()).is_err());
}
