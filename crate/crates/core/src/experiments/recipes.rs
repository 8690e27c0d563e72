use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FrameConfig, OfflineMethod, PathGrouping, PathSource, TransformChoice, TruthSource};
use super::pipeline::{build_model, build_rom, generate_truth, initial_path, run_offline, run_rom, RomRun};
use crate::analysis::{evaluate_rom, format_number, interpolate_state, parameter_sweep, step_count_study, step_table, SweepRom, Table};
use crate::fom::{FomModel, InflowPulse, IntegratorSpec, ModelKind};
use crate::offline::Decomposition;
use crate::rom::{RomSystem, RomTrajectory};
use crate::{Error, Result};

/// Named end-to-end experiments with their parameters baked in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Ade,
    AdeNonperiodic,
    Wave,
    Burgers,
}

impl Recipe {
    pub const ALL: [Recipe; 4] = [Recipe::Ade, Recipe::AdeNonperiodic, Recipe::Wave, Recipe::Burgers];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Ade => "ade",
            Recipe::AdeNonperiodic => "ade-nonperiodic",
            Recipe::Wave => "wave",
            Recipe::Burgers => "burgers",
        }
    }

    pub fn preset(self) -> ExperimentConfig {
        match self {
            Recipe::Ade => ade_config(),
            Recipe::AdeNonperiodic => nonperiodic_config(NONPERIODIC_SPACINGS[2]),
            Recipe::Wave => wave_config(),
            Recipe::Burgers => burgers_config(),
        }
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Result<RecipeOutput> {
        match self {
            Recipe::Ade => run_ade(cfg),
            Recipe::AdeNonperiodic => run_ade_nonperiodic(cfg, &NONPERIODIC_SPACINGS),
            Recipe::Wave => run_wave(cfg),
            Recipe::Burgers => run_burgers(cfg),
        }
    }
}

impl std::str::FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown recipe {s:?}; expected ade, ade-nonperiodic, wave or burgers")))
    }
}

/// Everything a recipe produced, in a fixed order.
#[derive(Clone, Debug, Default)]
pub struct RecipeOutput {
    pub name: String,
    /// Effective configuration of every stage that ran.
    pub configs: Vec<(String, ExperimentConfig)>,
    pub metrics: Vec<(String, f64)>,
    /// Tables keyed by file stem.
    pub tables: Vec<(String, Table)>,
    pub trajectories: Vec<(String, RomTrajectory<f64>)>,
}

impl RecipeOutput {
    fn new(name: &str) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    fn push_metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.push((key.into(), v));
    }

    pub fn metrics_table(&self) -> Table {
        let mut t = Table::new(["metric", "value"]);
        for (k, v) in &self.metrics {
            t.push(vec![k.clone(), format_number(*v)]).expect("two columns");
        }
        t
    }
}

/// Periodic advection-diffusion with a two-mode shifted basis.
pub fn ade_config() -> ExperimentConfig {
    ExperimentConfig::default()
}

pub const NONPERIODIC_SPACINGS: [f64; 4] = [5e-3, 2.5e-3, 1.25e-3, 6.25e-4];

/// Dirichlet inflow / Neumann outflow problem with equal space and time
/// steps `h` and a four-mode virtual-domain frame.
pub fn nonperiodic_config(h: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    let m = &mut cfg.model;
    m.kind = ModelKind::AdvectionDiffusionDirichletNeumann;
    m.c = 1.0;
    m.mu = 1e-3;
    m.grid.n = (m.grid.length / h).round() as usize + 1;
    m.initial_condition.amplitude = 0.5;
    m.initial_condition.width = 0.02;
    m.inflow = Some(InflowPulse { amplitude: 0.5, center: 0.2, width: 0.03 });
    m.integrator = IntegratorSpec::trapezoid(h);
    cfg.offline.frames = vec![FrameConfig { transform: TransformChoice::VirtualShift, rank: 4, ..FrameConfig::default() }];
    cfg.offline.refinement_passes = 3;
    cfg.rom.integrator = IntegratorSpec::trapezoid(h);
    cfg
}

/// Acoustic system sampled from its closed-form solution at `t_k = k Δξ`,
/// two counter-propagating frames of one mode each.
pub fn wave_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.model.kind = ModelKind::LinearWave;
    cfg.model.mu = 0.0;
    cfg.model.truth = TruthSource::Analytic;
    cfg.model.integrator = IntegratorSpec::trapezoid(1.0 / cfg.model.grid.n as f64);
    cfg.offline.frames = vec![
        FrameConfig { rank: 1, path: PathSource::Analytic { offset: 0.0, speed: 1.0 }, ..FrameConfig::default() },
        FrameConfig { rank: 1, path: PathSource::Analytic { offset: 0.0, speed: -1.0 }, ..FrameConfig::default() },
    ];
    cfg.offline.sweeps = 50;
    cfg.rom.integrator = IntegratorSpec::trapezoid(cfg.model.integrator.tau);
    cfg
}

/// Viscous Burgers with a tracked path and a seven-mode shifted basis.
pub fn burgers_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.model.kind = ModelKind::Burgers;
    cfg.model.c = 0.0;
    cfg.model.mu = 2e-3;
    cfg.model.grid.n = 400;
    cfg.offline.frames = vec![FrameConfig { rank: 7, path: PathSource::Estimated, ..FrameConfig::default() }];
    cfg
}

/// POD ranks compared against the shifted basis in the Burgers recipe.
pub const BURGERS_POD_RANKS: [usize; 2] = [7, 32];

fn pod_variant(cfg: &ExperimentConfig, rank: usize) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.offline.method = OfflineMethod::Pod;
    c.offline.rank = rank;
    c.rom.shortcuts = false;
    c
}

struct Stage {
    model: FomModel<f64>,
    truth: crate::fom::SnapshotSet<f64>,
    dec: Decomposition<f64>,
}

fn offline_stage(cfg: &ExperimentConfig) -> Result<Stage> {
    cfg.validate()?;
    let model = build_model(&cfg.model)?;
    let truth = generate_truth(&cfg.model, &model)?;
    let dec = run_offline(cfg, &truth)?;
    Ok(Stage { model, truth, dec })
}

/// Coefficient, path and error of a run at each of `times`.
fn run_table(prefix: &str, run: &RomRun, times: &[f64]) -> Result<Vec<(String, Vec<f64>)>> {
    let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
    let states = times.iter().map(|&t| interpolate_state(&run.trajectory, t)).collect::<Result<Vec<_>>>()?;
    cols.push((format!("error_{prefix}"), run.report.error_curve.clone()));
    cols.push((format!("bound_{prefix}"), run.report.bound_curve.clone()));
    for i in 0..run.system.rank() {
        cols.push((format!("alpha{}_{prefix}", i + 1), states.iter().map(|s| s.alpha[i]).collect()));
    }
    for k in 0..run.system.path_dim() {
        cols.push((format!("p{}_{prefix}", k + 1), states.iter().map(|s| s.p[k]).collect()));
    }
    Ok(cols)
}

fn columns_table(times: &[f64], cols: &[(String, Vec<f64>)]) -> Table {
    let mut t = Table::new(std::iter::once("t".to_string()).chain(cols.iter().map(|(n, _)| n.clone())));
    for (k, &time) in times.iter().enumerate() {
        let row = std::iter::once(time).chain(cols.iter().map(|(_, v)| v.get(k).copied().unwrap_or(f64::NAN))).map(format_number).collect();
        t.push(row).expect("column count matches");
    }
    t
}

fn singular_value_table(dec: &Decomposition<f64>) -> Table {
    let mut t = Table::new(["frame", "index", "singular_value"]);
    for (f, frame) in dec.frames().iter().enumerate() {
        for (i, s) in frame.singular_values().iter().enumerate() {
            t.push(vec![f.to_string(), (i + 1).to_string(), format_number(*s)]).expect("three columns");
        }
    }
    t
}

/// Shared-path and per-mode-path reduced models side by side.
pub fn run_ade(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let mut out = RecipeOutput::new("ade");
    let stage = offline_stage(cfg)?;
    let mut shared_cfg = cfg.clone();
    shared_cfg.rom.grouping = PathGrouping::Shared;
    let mut per_mode_cfg = cfg.clone();
    per_mode_cfg.rom.grouping = PathGrouping::PerMode;
    let shared = run_rom(&shared_cfg, &stage.model, &stage.dec, &stage.truth)?;
    let per_mode = run_rom(&per_mode_cfg, &stage.model, &stage.dec, &stage.truth)?;

    out.push_metric("offline_error", stage.dec.offline_error());
    out.push_metric("online_error_shared", shared.report.online_error);
    out.push_metric("online_error_per_mode", per_mode.report.online_error);
    out.push_metric("error_ratio_per_mode_to_shared", per_mode.report.online_error / shared.report.online_error);
    out.push_metric("bound_holds_shared", f64::from(u8::from(shared.report.bound_holds())));
    out.push_metric("residual_sup_shared", shared.report.residual_sup);
    out.push_metric("degenerate_samples_per_mode", per_mode.trajectory.degenerate_samples as f64);

    let times = stage.truth.times();
    let mut cols = run_table("shared", &shared, times)?;
    cols.extend(run_table("per_mode", &per_mode, times)?);
    out.tables.push(("ade_evolution".into(), columns_table(times, &cols)));
    out.tables.push(("ade_singular_values".into(), singular_value_table(&stage.dec)));
    out.configs.push(("shared".into(), shared_cfg));
    out.configs.push(("per_mode".into(), per_mode_cfg));
    out.trajectories.push(("ade_shared".into(), shared.trajectory));
    out.trajectories.push(("ade_per_mode".into(), per_mode.trajectory));
    Ok(out)
}

/// Grid refinement with `Δξ = Δt = h`. The base config supplies everything
/// except the grid size and step sizes.
pub fn run_ade_nonperiodic(base: &ExperimentConfig, spacings: &[f64]) -> Result<RecipeOutput> {
    let mut out = RecipeOutput::new("ade-nonperiodic");
    let mut table = Table::new(["h", "n", "offline_error", "online_error"]);
    for &h in spacings {
        let mut cfg = base.clone();
        cfg.model.grid.n = (cfg.model.grid.length / h).round() as usize + 1;
        cfg.model.integrator.tau = h;
        cfg.rom.integrator.tau = h;
        let stage = offline_stage(&cfg)?;
        let run = run_rom(&cfg, &stage.model, &stage.dec, &stage.truth)?;
        log::info!("h = {h}: offline {:.3e}, online {:.3e}", stage.dec.offline_error(), run.report.online_error);
        table
            .push(vec![
                format_number(h),
                cfg.model.grid.n.to_string(),
                format_number(stage.dec.offline_error()),
                format_number(run.report.online_error),
            ])
            .expect("four columns");
        out.push_metric(format!("online_error_h{h:e}"), run.report.online_error);
        out.push_metric(format!("offline_error_h{h:e}"), stage.dec.offline_error());
        out.trajectories.push((format!("nonperiodic_h{h:e}"), run.trajectory));
        out.configs.push((format!("h{h:e}"), cfg));
    }
    out.tables.push(("nonperiodic_refinement".into(), table));
    Ok(out)
}

pub fn run_wave(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let mut out = RecipeOutput::new("wave");
    let stage = offline_stage(cfg)?;
    let run = run_rom(cfg, &stage.model, &stage.dec, &stage.truth)?;
    out.push_metric("offline_error", stage.dec.offline_error());
    out.push_metric("online_error", run.report.online_error);
    out.push_metric("bound_holds", f64::from(u8::from(run.report.bound_holds())));
    let times = stage.truth.times();
    out.tables.push(("wave_evolution".into(), columns_table(times, &run_table("spod", &run, times)?)));
    out.tables.push(("wave_singular_values".into(), singular_value_table(&stage.dec)));
    out.configs.push(("wave".into(), cfg.clone()));
    out.trajectories.push(("wave".into(), run.trajectory));
    Ok(out)
}

/// Largest deviation of `path` from the straight line through its end points.
pub fn path_nonlinearity(times: &[f64], path: &[f64]) -> f64 {
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let (p0, p1) = (path[0], path[path.len() - 1]);
    times.iter().zip(path).map(|(t, p)| (p - (p0 + (p1 - p0) * (t - t0) / (t1 - t0))).abs()).fold(0.0, f64::max)
}

pub fn run_burgers(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let mut out = RecipeOutput::new("burgers");
    let stage = offline_stage(cfg)?;
    let spod = run_rom(cfg, &stage.model, &stage.dec, &stage.truth)?;
    let times = stage.truth.times();
    let mut table = Table::new(["model", "rank", "offline_error", "online_error"]);
    table
        .push(vec!["spod".into(), stage.dec.total_rank().to_string(), format_number(stage.dec.offline_error()), format_number(spod.report.online_error)])
        .expect("four columns");
    out.push_metric("spod_offline_error", stage.dec.offline_error());
    out.push_metric("spod_online_error", spod.report.online_error);
    out.configs.push(("spod".into(), cfg.clone()));

    for rank in BURGERS_POD_RANKS {
        let pcfg = pod_variant(cfg, rank);
        let dec = run_offline(&pcfg, &stage.truth)?;
        let run = run_rom(&pcfg, &stage.model, &dec, &stage.truth)?;
        table
            .push(vec!["pod".into(), rank.to_string(), format_number(dec.offline_error()), format_number(run.report.online_error)])
            .expect("four columns");
        out.push_metric(format!("pod{rank}_offline_error"), dec.offline_error());
        out.push_metric(format!("pod{rank}_online_error"), run.report.online_error);
        out.trajectories.push((format!("burgers_pod{rank}"), run.trajectory));
        out.configs.push((format!("pod{rank}"), pcfg));
    }

    let offline_path = stage.dec.frames()[0].path().to_vec();
    let rom_path: Vec<f64> = times.iter().map(|&t| interpolate_state(&spod.trajectory, t).map(|s| s.p[0])).collect::<Result<_>>()?;
    out.push_metric("offline_path_nonlinearity", path_nonlinearity(times, &offline_path));
    out.push_metric("rom_path_nonlinearity", path_nonlinearity(times, &rom_path));
    let cols = vec![("p_offline".to_string(), offline_path), ("p_rom".to_string(), rom_path)];
    out.tables.push(("burgers_errors".into(), table));
    out.tables.push(("burgers_path".into(), columns_table(times, &cols)));
    out.trajectories.insert(0, ("burgers_spod".into(), spod.trajectory));
    Ok(out)
}

/// Accepted adaptive steps of the full model and of POD and shifted-POD
/// reduced models of the wave system.
pub fn run_steps(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let mut out = RecipeOutput::new("steps");
    let stage = offline_stage(cfg)?;
    let steps = &cfg.analysis.steps;
    let pcfg = pod_variant(cfg, steps.pod_rank);
    let pod_dec = run_offline(&pcfg, &stage.truth)?;
    let pod = build_rom(&pcfg.rom, stage.model.clone(), &pod_dec)?;
    let spod = build_rom(&cfg.rom, stage.model.clone(), &stage.dec)?;
    let z0 = stage.model.initial_condition();
    let pod_state = pod.project_initial_condition(z0, &[])?.state;
    let spod_state = spod.project_initial_condition(z0, &initial_path(cfg.rom.grouping, &stage.dec))?.state;
    let rows = step_count_study(&stage.model, (&pod, &pod_state), (&spod, &spod_state), &steps.schemes, steps.rel_tol, steps.abs_tol, cfg.model.t_end)?;
    for r in &rows {
        let tag = format!("{:?}", r.scheme).to_lowercase().replace("adaptive", "");
        out.push_metric(format!("{tag}_fom_steps"), r.fom as f64);
        out.push_metric(format!("{tag}_pod_steps"), r.pod as f64);
        out.push_metric(format!("{tag}_spod_steps"), r.spod as f64);
        out.push_metric(format!("{tag}_pod_ratio"), r.pod_ratio());
        out.push_metric(format!("{tag}_spod_ratio"), r.spod_ratio());
    }
    out.tables.push(("step_counts".into(), step_table(&rows)));
    out.configs.push(("steps".into(), cfg.clone()));
    Ok(out)
}

/// Reduced models built once at the configured `c` and evaluated across the
/// sweep range with the parameter entering online only.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<RecipeOutput> {
    let mut out = RecipeOutput::new("sweep");
    let stage = offline_stage(cfg)?;
    let mut roms = Vec::new();
    let mut spod_cfg = cfg.clone();
    spod_cfg.rom.shortcuts = true;
    let spod = build_rom(&spod_cfg.rom, stage.model.clone(), &stage.dec).or_else(|_| build_rom(&cfg.rom, stage.model.clone(), &stage.dec))?;
    let p0 = initial_path(spod_cfg.rom.grouping, &stage.dec);
    roms.push(SweepRom { label: format!("spod{}", stage.dec.total_rank()), system: spod, p0 });
    for &rank in &cfg.analysis.sweep.pod_ranks {
        let pcfg = pod_variant(cfg, rank);
        let dec = run_offline(&pcfg, &stage.truth)?;
        let system: RomSystem<f64> = build_rom(&pcfg.rom, stage.model.clone(), &dec)?;
        roms.push(SweepRom { label: format!("pod{rank}"), system, p0: vec![] });
    }
    let s = &cfg.analysis.sweep;
    let cs = s.c_values();
    let result = parameter_sweep(&stage.model, &roms, &cs, &cfg.rom.integrator, &s.truth_integrator, cfg.model.t_end, jobs)?;

    let spod_errors: Vec<f64> = result.entries.iter().map(|e| e.errors[0]).collect();
    let max = spod_errors.iter().copied().fold(0.0, f64::max);
    let min = spod_errors.iter().copied().fold(f64::INFINITY, f64::min);
    out.push_metric("spod_error_max", max);
    out.push_metric("spod_error_min", min);
    out.push_metric("spod_error_spread", max / min);
    for (j, rom) in roms.iter().enumerate().skip(1) {
        let ratio = result.entries.iter().map(|e| e.errors[j] / e.errors[0]).fold(f64::INFINITY, f64::min);
        out.push_metric(format!("{}_over_spod_min", rom.label), ratio);
    }
    // The entry at the construction velocity against a standalone run.
    if let Some(k) = cs.iter().position(|c| (c - cfg.model.c).abs() < 1e-12) {
        let model = stage.model.with_params(cs[k], stage.model.mu())?;
        let truth = crate::fom::integrate_fom(&model, &s.truth_integrator, cfg.model.t_end)?;
        let single = evaluate_rom(&model, &roms[0], &truth, &cfg.rom.integrator, cfg.model.t_end)?;
        out.push_metric("construction_entry_gap", (single - result.entries[k].errors[0]).abs());
    }
    out.tables.push(("sweep_errors".into(), result.error_table()));
    out.tables.push(("sweep_times".into(), result.timing_table()));
    out.configs.push(("sweep".into(), spod_cfg));
    Ok(out)
}

/// Step-count study defaults: the wave recipe integrated as a full model.
pub fn steps_config() -> ExperimentConfig {
    wave_config()
}
