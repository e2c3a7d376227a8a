//! End-to-end checks of the experimental protocol.

use std::collections::BTreeMap;

use marker_forecast::harness::{
    aggregate, evaluate, grid_search, grid_search_horizon, read_cells, run_experiment, Algorithm, ExperimentConfig,
    GridOverride,
};
use marker_forecast::metrics::Metric;
use marker_forecast::signal::{synthetic_record, write_record, MarkerRecord, SyntheticSpec};

fn small_uoro_config() -> ExperimentConfig {
    ExperimentConfig {
        algorithms: vec![Algorithm::Uoro],
        horizons: vec![0.2, 0.5],
        grids: [(
            Algorithm::Uoro,
            GridOverride {
                hidden: Some(vec![4, 8]),
                shl: Some(vec![3]),
                eta: Some(vec![0.05, 0.1]),
                sigma_init: Some(vec![0.02]),
            },
        )]
        .into(),
        n_cv: 3,
        n_test: 4,
        master_seed: 42,
        ..Default::default()
    }
}

fn synthetic(seconds: f64, seed: u64) -> MarkerRecord {
    synthetic_record(&SyntheticSpec {
        seconds,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let rec = synthetic(70.0, 1);
    let config = small_uoro_config();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let cv = grid_search(Algorithm::Uoro, &rec, 3, &config).unwrap();
            let eval = evaluate(Algorithm::Uoro, &rec, 3, cv[1].chosen_hyper(), cv[1].horizon, &config).unwrap();
            (cv, eval)
        })
    };
    let (cv1, eval1) = run(1);
    let (cv4, eval4) = run(4);
    assert_eq!(cv1, cv4);
    assert_eq!(eval1, eval4);
    assert_eq!(cv1.len(), 2);
    assert_eq!(cv1[0].entries.len(), 4);

    let other = ExperimentConfig {
        master_seed: 43,
        ..config.clone()
    };
    let cv_other = grid_search(Algorithm::Uoro, &rec, 3, &other).unwrap();
    assert_ne!(cv1[0].entries[0].mean_rmse, cv_other[0].entries[0].mean_rmse);
}

/// A scalar sum of three sinusoids obeys an exact order-6 linear recursion,
/// so regression on at least six past steps predicts it without error.
#[test]
fn linreg_grid_search_finds_the_planted_history_length() {
    let n = 800;
    let pos: Vec<f64> = (0..n)
        .flat_map(|k| {
            let t = k as f64 * 0.1;
            let s = 8.0 * (1.3 * t).sin() + 5.0 * (2.9 * t + 0.4).sin() + 3.0 * (0.55 * t + 1.0).sin();
            [s + 10.0, -0.5 * s, 2.0 * s - 4.0]
        })
        .collect();
    let rec = MarkerRecord::new(0.1, 1, pos).unwrap();
    let config = ExperimentConfig {
        algorithms: vec![Algorithm::Linreg],
        grids: [(
            Algorithm::Linreg,
            GridOverride {
                shl: Some(vec![2, 4, 6, 8, 10]),
                ..Default::default()
            },
        )]
        .into(),
        ..Default::default()
    };
    for h in [1, 3, 7] {
        let cv = grid_search_horizon(Algorithm::Linreg, &rec, 0, h, &config).unwrap();
        let chosen = cv.chosen_entry();
        assert!(chosen.hyper.shl >= 6, "h={h}: chose {}", chosen.hyper);
        assert!(chosen.mean_rmse.unwrap() < 1e-6, "h={h}: {:?}", chosen.mean_rmse);
        assert!(cv.entries[0].mean_rmse.unwrap() > 1e-2);
    }
}

#[test]
fn stochastic_evaluation_spreads_and_matches_recomputed_ci() {
    let rec = synthetic(75.0, 2);
    let config = small_uoro_config();
    let hyper = grid_search_horizon(Algorithm::Uoro, &rec, 0, 2, &config).unwrap().chosen_hyper();
    let eval = evaluate(Algorithm::Uoro, &rec, 0, hyper, 2, &config).unwrap();
    for metric in Metric::ALL {
        let v: Vec<f64> = eval.runs.iter().map(|r| r.metrics.unwrap().get(metric)).collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let s = eval.summary_of(metric);
        assert!(sd > 0.0, "{metric:?}");
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.half_range.unwrap() - 1.96 * sd / n.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn full_experiment_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    write_record(&synthetic(72.0, 5), data.join("a.csv")).unwrap();
    write_record(&synthetic(80.0, 6), data.join("b.csv")).unwrap();
    std::fs::write(
        data.join("manifest.toml"),
        "[[sequence]]\nlabel = \"a\"\npath = \"a.csv\"\nbreathing_class = \"regular\"\n\n\
         [[sequence]]\nlabel = \"b\"\npath = \"b.csv\"\nbreathing_class = \"irregular\"\n",
    )
    .unwrap();
    let config_text = r#"
algorithms = ["uoro", "lms", "linreg", "none"]
horizons = [0.1, 0.5]
n_cv = 2
n_test = 3
master_seed = 9
manifest = "data/manifest.toml"
output_dir = "out"
loss_traces = true

[grids.uoro]
hidden = [5]
shl = [2, 4]
eta = [0.1]
sigma_init = [0.02]

[grids.lms]
shl = [2, 4]
eta = [0.01, 0.05]

[grids.linreg]
shl = [2, 5]
"#;
    let config_path = dir.path().join("experiment.toml");
    std::fs::write(&config_path, config_text).unwrap();
    let config = ExperimentConfig::load(&config_path).unwrap();
    let outcome = run_experiment(&config).unwrap();
    let out = dir.path().join("out");

    assert_eq!(outcome.cells.len(), 4 * 2 * 2);
    for a in ["uoro", "lms", "linreg", "none"] {
        assert!(out.join(format!("summary_{a}.csv")).exists());
        assert!(out.join(format!("curves_{a}.csv")).exists());
        assert!(out.join(format!("runs/{a}_a_h100ms.csv")).exists());
        assert!(out.join(format!("cv/{a}_b_h500ms.csv")).exists());
        assert!(out.join(format!("loss/{a}_b_h500ms.csv")).exists());
    }
    assert!(out.join("run_manifest.toml").exists());

    let runs = std::fs::read_to_string(out.join("runs/uoro_a_h100ms.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 3);
    let runs = std::fs::read_to_string(out.join("runs/lms_a_h100ms.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 1);

    let cohorts: Vec<_> = outcome
        .report
        .summary
        .iter()
        .filter(|r| r.algorithm == Algorithm::Uoro && r.metric == Metric::Rmse)
        .map(|r| (r.cohort.as_str(), r.n_sequences))
        .collect();
    assert_eq!(cohorts, vec![("all", 2), ("regular", 1), ("irregular", 1)]);

    let cells = read_cells(out.join("cells.csv")).unwrap();
    assert_eq!(cells, outcome.cells);
    assert_eq!(aggregate(&cells, &BTreeMap::new()).unwrap(), outcome.report);

    let again = run_experiment(&config).unwrap();
    assert_eq!(again.cells, outcome.cells);
}
