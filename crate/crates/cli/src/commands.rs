use std::path::PathBuf;

use tramor::analysis::{format_number, Table};
use tramor::experiments::pipeline::{build_model, generate_truth, run_offline, run_rom};
use tramor::experiments::{ade_config, run_steps, run_sweep, steps_config, ExperimentConfig, RecipeOutput};
use tramor::fom::SnapshotSet;
use tramor::offline::Decomposition;

use crate::output::{config_digest, OutputDir};
use crate::{load_config, Cli, Command, Failure};

const DEFAULT_OUT: &str = "tramor-out";

fn effective_config(cli: &Cli, default: impl FnOnce() -> ExperimentConfig) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => default(),
    };
    if cli.gnuplot {
        cfg.io.gnuplot = true;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn output_dir(cli: &Cli, cfg: &ExperimentConfig) -> Result<OutputDir, Failure> {
    let root = cli.out.clone().or_else(|| cfg.io.out_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    OutputDir::create(root, cfg.io.gnuplot)
}

/// Prints the effective configuration and returns its hash.
fn announce(configs: &[(String, ExperimentConfig)]) -> String {
    let (pretty, hash) = config_digest(configs);
    println!("effective config (sha256 {hash}):\n{pretty}");
    hash
}

fn write_snapshots(out: &mut OutputDir, stem: &str, s: &SnapshotSet<f64>) -> Result<(), Failure> {
    out.write_with(&format!("{stem}.bin"), |p| s.write_binary(p))?;
    out.write_with(&format!("{stem}.csv"), |p| s.write_csv(p))
}

fn write_decomposition(out: &mut OutputDir, dec: &Decomposition<f64>) -> Result<(), Failure> {
    out.write_with("decomposition.bin", |p| dec.write_binary(p))?;
    out.write_with("singular_values.csv", |p| dec.write_singular_values_csv(p, ","))?;
    if out.gnuplot() {
        out.write_with("singular_values.dat", |p| dec.write_singular_values_csv(p, " "))?;
    }
    Ok(())
}

fn snapshots_or_simulate(cfg: &ExperimentConfig, file: Option<&PathBuf>) -> Result<SnapshotSet<f64>, Failure> {
    let model = build_model(&cfg.model)?;
    match file {
        Some(p) => {
            let s = SnapshotSet::read_binary(p)?;
            if !s.grid().same_as(model.grid()) || s.components() != model.components() {
                return Err(Failure::Config(format!("{}: snapshots do not match model.grid", p.display())));
            }
            Ok(s)
        }
        None => Ok(generate_truth(&cfg.model, &model)?),
    }
}

fn write_outputs(out: &mut OutputDir, result: &RecipeOutput) -> Result<(), Failure> {
    out.table("metrics", &result.metrics_table())?;
    for (stem, table) in &result.tables {
        out.table(stem, table)?;
    }
    for (stem, traj) in &result.trajectories {
        out.trajectory(&format!("trajectory_{stem}"), traj)?;
    }
    Ok(())
}

fn print_metrics(result: &RecipeOutput) {
    for (k, v) in &result.metrics {
        println!("{:<36} {}", k, format_number(*v));
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Fom => {
            let cfg = effective_config(cli, ade_config)?;
            let configs = vec![("fom".to_string(), cfg.clone())];
            let hash = announce(&configs);
            let mut out = output_dir(cli, &cfg)?;
            out.write_text("config.json", &config_digest(&configs).0)?;
            let model = build_model(&cfg.model)?;
            let s = generate_truth(&cfg.model, &model)?;
            write_snapshots(&mut out, "snapshots", &s)?;
            println!("{} snapshots of dimension {}", s.len(), s.data().nrows());
            out.finish("fom", hash, cli.seed, cli.jobs)?;
        }
        Command::Offline { snapshots } => {
            let cfg = effective_config(cli, ade_config)?;
            let configs = vec![("offline".to_string(), cfg.clone())];
            let hash = announce(&configs);
            let mut out = output_dir(cli, &cfg)?;
            out.write_text("config.json", &config_digest(&configs).0)?;
            let s = snapshots_or_simulate(&cfg, snapshots.as_ref())?;
            let dec = run_offline(&cfg, &s)?;
            write_decomposition(&mut out, &dec)?;
            let mut t = Table::new(["rank", "offline_error"]);
            t.push(vec![dec.total_rank().to_string(), format_number(dec.offline_error())]).expect("two columns");
            out.table("offline_summary", &t)?;
            println!("rank {} offline error {}", dec.total_rank(), format_number(dec.offline_error()));
            out.finish("offline", hash, cli.seed, cli.jobs)?;
        }
        Command::Rom { snapshots, decomposition } => {
            let cfg = effective_config(cli, ade_config)?;
            let configs = vec![("rom".to_string(), cfg.clone())];
            let hash = announce(&configs);
            let mut out = output_dir(cli, &cfg)?;
            out.write_text("config.json", &config_digest(&configs).0)?;
            let model = build_model(&cfg.model)?;
            let truth = snapshots_or_simulate(&cfg, snapshots.as_ref())?;
            let dec = match decomposition {
                Some(p) => Decomposition::read_binary(p)?,
                None => run_offline(&cfg, &truth)?,
            };
            let run = run_rom(&cfg, &model, &dec, &truth)?;
            let r = &run.report;
            let mut summary = Table::new(["offline_error", "online_error", "residual_sup", "j_iv", "bound_holds"]);
            summary
                .push(vec![
                    format_number(r.offline_error),
                    format_number(r.online_error),
                    format_number(r.residual_sup),
                    format_number(r.j_iv),
                    r.bound_holds().to_string(),
                ])
                .expect("five columns");
            out.table("report", &summary)?;
            let mut curve = Table::new(["t", "error", "bound", "residual_norm"]);
            for (k, t) in truth.times().iter().enumerate() {
                let res = run.trajectory.residual_norms.get(k).copied().unwrap_or(f64::NAN);
                curve.push(vec![format_number(*t), format_number(r.error_curve[k]), format_number(r.bound_curve.get(k).copied().unwrap_or(f64::NAN)), format_number(res)]).expect("four columns");
            }
            out.table("error_curve", &curve)?;
            out.trajectory("trajectory", &run.trajectory)?;
            if cfg.io.snapshots {
                write_snapshots(&mut out, "reconstruction", &run.reconstruction)?;
            }
            if let Some(pointwise) = &r.pointwise_error {
                let e = truth.with_data(pointwise.clone(), "pointwise_error")?;
                write_snapshots(&mut out, "pointwise_error", &e)?;
            }
            println!("offline error {}  online error {}", format_number(r.offline_error), format_number(r.online_error));
            out.finish("rom", hash, cli.seed, cli.jobs)?;
        }
        Command::Sweep => {
            let cfg = effective_config(cli, ade_config)?;
            let configs = vec![("sweep".to_string(), cfg.clone())];
            let hash = announce(&configs);
            let mut out = output_dir(cli, &cfg)?;
            out.write_text("config.json", &config_digest(&configs).0)?;
            let result = run_sweep(&cfg, cli.jobs)?;
            // Wall times vary between runs, so they stay out of the CSV outputs.
            let (timing, tables): (Vec<_>, Vec<_>) = result.tables.iter().cloned().partition(|(stem, _)| stem == "sweep_times");
            let deterministic = RecipeOutput { tables, ..result.clone() };
            write_outputs(&mut out, &deterministic)?;
            for (_, t) in timing {
                out.write_text("timings.txt", &t.render(" "))?;
            }
            print_metrics(&result);
            out.finish("sweep", hash, cli.seed, cli.jobs)?;
        }
        Command::Steps => {
            let cfg = effective_config(cli, steps_config)?;
            let configs = vec![("steps".to_string(), cfg.clone())];
            let hash = announce(&configs);
            let mut out = output_dir(cli, &cfg)?;
            out.write_text("config.json", &config_digest(&configs).0)?;
            let result = run_steps(&cfg)?;
            write_outputs(&mut out, &result)?;
            print_metrics(&result);
            out.finish("steps", hash, cli.seed, cli.jobs)?;
        }
        Command::Repro { recipe } => {
            let cfg = effective_config(cli, || recipe.preset())?;
            if cli.config.is_some() {
                log::info!("recipe {} runs with the supplied config", recipe.name());
            }
            announce(&[(recipe.name().to_string(), cfg.clone())]);
            let result = recipe.run(&cfg)?;
            // Stage configs derived from the base, e.g. one per resolution.
            let (_, hash) = config_digest(&result.configs);
            let mut out = output_dir(cli, &cfg)?;
            out.write_text("config.json", &config_digest(&result.configs).0)?;
            write_outputs(&mut out, &result)?;
            print_metrics(&result);
            let command = format!("repro {}", recipe.name());
            out.finish(&command, hash, cli.seed, cli.jobs)?;
        }
    }
    Ok(())
}
