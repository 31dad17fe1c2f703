use stochtop::experiments::{
    render_svg, run_cell, run_sweep, wilson_interval, write_csv, ExperimentConfig, ExperimentKind, ManifoldEntry,
    Schedule, SweepRow, Threshold,
};

fn entries() -> Vec<ManifoldEntry> {
    vec![
        ManifoldEntry::new("torus", "torus:1,1").unwrap(),
        ManifoldEntry::new("cylinder", "cylinder:1,1").unwrap(),
    ]
}

fn csv_bytes(cfg: &ExperimentConfig) -> (Vec<u8>, String) {
    let table = run_sweep(cfg).unwrap();
    let mut buf = Vec::new();
    write_csv(&table, &mut buf).unwrap();
    (buf, render_svg(&table))
}

fn connectivity() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        ExperimentKind::Connectivity,
        entries(),
        vec![300.0],
        Schedule::Offsets {
            threshold: Threshold::ClosedUpper,
            offsets: vec![-2.0, 2.0],
        },
    );
    cfg.degrees = vec![0, 1];
    cfg.trials = 6;
    cfg.seed = 99;
    cfg
}

#[test]
fn output_is_independent_of_thread_count() {
    let mut one = connectivity();
    one.threads = Some(1);
    let mut three = connectivity();
    three.threads = Some(3);
    assert_eq!(csv_bytes(&one), csv_bytes(&three));
    assert_eq!(csv_bytes(&three), csv_bytes(&three));
}

#[test]
fn row_count_is_the_cell_product() {
    let table = run_sweep(&connectivity()).unwrap();
    assert_eq!(table.rows.len(), 2 * 1 * 2 * 2);
    for r in &table.rows {
        let (lo, hi) = wilson_interval(r.successes.unwrap(), r.trials, 1.96).unwrap();
        assert_eq!((r.ci_lo, r.ci_hi), (Some(lo), Some(hi)));
    }
}

#[test]
fn trial_order_does_not_change_aggregates() {
    let cfg = connectivity();
    let trials = run_cell(&cfg, 0, 300.0, Some(1), 1).unwrap();
    let mut reversed = trials.clone();
    reversed.reverse();
    let succ = |t: &[stochtop::experiments::TrialResult]| t.iter().filter(|x| x.matched == Some(true)).count();
    let total = |t: &[stochtop::experiments::TrialResult]| {
        t.iter().map(|x| x.betti.as_ref().unwrap()[1]).sum::<usize>()
    };
    assert_eq!(succ(&trials), succ(&reversed));
    assert_eq!(total(&trials), total(&reversed));
    // each trial depends only on its own index
    let mut fewer = cfg.clone();
    fewer.trials = 3;
    let prefix = run_cell(&fewer, 0, 300.0, Some(1), 1).unwrap();
    for (a, b) in prefix.iter().zip(&trials) {
        assert_eq!((a.seed, a.point_count, &a.betti), (b.seed, b.point_count, &b.betti));
    }
}

#[test]
fn infeasible_cells_do_not_disturb_feasible_ones() {
    let mut cfg = connectivity();
    cfg.schedule = Schedule::Lambdas(vec![6.0]);
    let alone = run_sweep(&cfg).unwrap();
    cfg.schedule = Schedule::Lambdas(vec![6.0, -1.0, 400.0]);
    let mixed = run_sweep(&cfg).unwrap();
    let feasible: Vec<&SweepRow> = mixed.rows.iter().filter(|r| !r.infeasible).collect();
    assert_eq!(feasible.len(), alone.rows.len());
    for (a, b) in alone.rows.iter().zip(feasible) {
        assert_eq!(a, b);
    }
    let bad: Vec<&SweepRow> = mixed.rows.iter().filter(|r| r.infeasible).collect();
    assert_eq!(bad.len(), 2 * 2 * 2);
    assert!(bad.iter().all(|r| r.p_hat.is_none() && r.successes.is_none()));
}

#[test]
fn region_split_counts_sum_to_total() {
    let mut cfg = ExperimentConfig::new(
        ExperimentKind::Critical,
        entries(),
        vec![2000.0],
        Schedule::Lambdas(vec![10.0]),
    );
    cfg.degrees = vec![0, 1, 2];
    cfg.trials = 4;
    cfg.kappa = Some(2.0);
    let table = run_sweep(&cfg).unwrap();
    assert_eq!(table.rows.len(), 2 * 3 * 3);
    for cell in table.rows.chunks(3) {
        let [inner, collar, total] = cell else { unreachable!() };
        assert_eq!(
            (inner.experiment.as_str(), collar.experiment.as_str(), total.experiment.as_str()),
            ("critical_interior", "critical_collar", "critical_total")
        );
        if total.infeasible {
            continue;
        }
        let sum = inner.mean_count.unwrap() + collar.mean_count.unwrap();
        assert!((sum - total.mean_count.unwrap()).abs() < 1e-9);
    }
    for (i, k) in [(0usize, Some(1usize)), (1, Some(2))] {
        for t in run_cell(&cfg, i, 2000.0, k, 0).unwrap() {
            assert!(t.critical_interior.is_some() && t.critical_collar.is_some());
        }
    }
    // the torus has no collar
    assert!(table.rows[1].mean_count == Some(0.0));
}

#[test]
fn coverage_rows_have_no_degree() {
    let mut cfg = ExperimentConfig::new(
        ExperimentKind::Coverage,
        entries(),
        vec![400.0, 800.0],
        Schedule::Offsets {
            threshold: Threshold::Coverage,
            offsets: vec![-3.0, 0.0, 3.0],
        },
    );
    cfg.trials = 3;
    let table = run_sweep(&cfg).unwrap();
    assert_eq!(table.rows.len(), 2 * 2 * 3);
    assert!(table.rows.iter().all(|r| r.k.is_none()));
}
