use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use marker_forecast::harness::{
    self, bench_step_time, evaluate, grid_search_horizon, read_cells, run_experiment, write_cv_surface,
    write_eval_runs, write_report, Algorithm, ExperimentConfig, Report,
};
use marker_forecast::metrics::Metric;
use marker_forecast::signal::{load_record, synthetic_record, write_record, SyntheticSpec};
use marker_forecast::Result;

#[derive(Parser)]
#[command(name = "forecast", version, about = "Online forecasting of 3D marker trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate, evaluate and aggregate a full experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Grid search on one sequence and horizon, optionally followed by evaluation.
    Cv {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        seq: PathBuf,
        /// Horizon in seconds.
        #[arg(long)]
        horizon: f64,
        /// Config file supplying grids, seeds and run counts.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_cv: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate the chosen tuple on the test range.
        #[arg(long)]
        evaluate: bool,
        /// Directory for the grid surface and per-run CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median wall-clock time of one learning-and-prediction step.
    Bench {
        #[arg(long)]
        algo: Algorithm,
        /// Hidden units (RNN methods).
        #[arg(long, default_value_t = 90)]
        q: usize,
        /// Signal history length in seconds.
        #[arg(long)]
        shl: f64,
        #[arg(long, default_value_t = 0.1)]
        period: f64,
        #[arg(long, default_value_t = 3)]
        markers: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-aggregate the cells of a finished experiment.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write a synthetic breathing-like recording.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200.0)]
        seconds: f64,
        #[arg(long, default_value_t = 3)]
        markers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_report(report: &Report) {
    println!("{:<8} {:<10} {:<10} {:>12} {:>12}", "algo", "cohort", "metric", "mean", "ci95");
    for r in &report.summary {
        let hr = r.half_range.map_or("-".to_string(), |d| format!("{d:.4}"));
        println!(
            "{:<8} {:<10} {:<10} {:>12.4} {:>12}",
            r.algorithm.name(),
            r.cohort,
            r.metric.name(),
            r.mean,
            hr
        );
    }
}

fn exclusions_from(dir: &std::path::Path) -> Result<BTreeMap<String, Vec<String>>> {
    let path = dir.join("run_manifest.toml");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    #[derive(serde::Deserialize)]
    struct Inner {
        #[serde(default)]
        exclusions: BTreeMap<String, Vec<String>>,
    }
    #[derive(serde::Deserialize)]
    struct Outer {
        manifest: Inner,
    }
    let outer: Outer = toml::from_str(&std::fs::read_to_string(path)?)?;
    Ok(outer.manifest.exclusions)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = run_experiment(&config)?;
            print_report(&outcome.report);
            println!("results written to {}", config.output_dir.display());
        }
        Command::Cv {
            algo,
            seq,
            horizon,
            config,
            n_cv,
            n_test,
            seed,
            evaluate: do_eval,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            cfg.algorithms = vec![algo];
            cfg.horizons = vec![horizon];
            cfg.n_cv = n_cv.unwrap_or(cfg.n_cv);
            cfg.n_test = n_test.unwrap_or(cfg.n_test);
            cfg.master_seed = seed.unwrap_or(cfg.master_seed);
            cfg.validate()?;
            let record = load_record(&seq)?;
            let h = record.steps(horizon).max(1);
            let cv = grid_search_horizon(algo, &record, 0, h, &cfg)?;
            println!("{:>6} {:<36} {:>12} {:>10}", "tuple", "hyper", "cv_rmse", "diverged");
            for e in &cv.entries {
                let rmse = e.mean_rmse.map_or("-".to_string(), |v| format!("{v:.4}"));
                let mark = if e.tuple == cv.chosen { " *" } else { "" };
                println!("{:>6} {:<36} {:>12} {:>10}{mark}", e.tuple, e.hyper.to_string(), rmse, e.n_diverged);
            }
            println!("chosen: {}", cv.chosen_hyper());
            if let Some(dir) = &out {
                write_cv_surface(dir.join("cv_surface.csv"), &cv)?;
            }
            if do_eval {
                let eval = evaluate(algo, &record, 0, cv.chosen_hyper(), h, &cfg)?;
                for m in Metric::ALL {
                    let s = eval.summary_of(m);
                    let hr = s.half_range.map_or(String::new(), |d| format!(" +/- {d:.4}"));
                    println!("{:<10} {:.4}{hr}", m.name(), s.mean);
                }
                if eval.n_diverged > 0 {
                    println!("diverged runs: {}", eval.n_diverged);
                }
                if let Some(dir) = &out {
                    write_eval_runs(dir.join("runs.csv"), &eval)?;
                }
            }
        }
        Command::Bench {
            algo,
            q,
            shl,
            period,
            markers,
            steps,
            seed,
        } => {
            let shl_steps = ((shl / period).round() as usize).max(1);
            let r = bench_step_time(algo, q, shl_steps, markers, steps, seed)?;
            println!(
                "{algo} q={q} L={shl_steps}: median {:.4} ms, mean {:.4} ms, cv {:.3} over {} steps",
                r.median_ms, r.mean_ms, r.cv, r.steps
            );
        }
        Command::Report { input } => {
            let cells = read_cells(input.join("cells.csv"))?;
            let report = harness::aggregate(&cells, &exclusions_from(&input)?)?;
            write_report(&input, &report)?;
            print_report(&report);
        }
        Command::Synth {
            out,
            seconds,
            markers,
            seed,
        } => {
            let record = synthetic_record(&SyntheticSpec {
                seconds,
                n_markers: markers,
                seed,
                ..Default::default()
            })?;
            write_record(&record, &out)?;
            println!("wrote {} steps to {}", record.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
