use std::fs;
use std::path::Path;

use super::config::{ExperimentConfig, FrameConfig, ModelConfig, OfflineMethod, PathGrouping, PathSource, RomConfig, TransformChoice, TruthSource};
use crate::analysis::{reconstruct_trajectory, ErrorReport};
use crate::fom::{analytic_wave_snapshots, integrate_fom, step_count, FomModel, ModelKind, SnapshotSet};
use crate::numerics::{Grid, GridFunction, TransformFamily};
use crate::offline::{compute_pod, compute_spod_multi_frame, compute_spod_single_frame, compute_spod_virtual, estimate_path, Decomposition, FrameSpec};
use crate::rom::{integrate_rom, RomSystem, RomTrajectory};
use crate::{Error, Result};

pub fn build_grid(cfg: &ModelConfig) -> Result<Grid<f64>> {
    let g = &cfg.grid;
    match cfg.kind {
        ModelKind::AdvectionDiffusionDirichletNeumann => Grid::bounded(g.n, g.xi0, g.length),
        _ => Grid::periodic(g.n, g.xi0, g.length),
    }
}

pub fn build_model(cfg: &ModelConfig) -> Result<FomModel<f64>> {
    let grid = build_grid(cfg)?;
    let ic = cfg.initial_condition;
    let scalar = GridFunction::from_fn(grid, |x: f64| ic.eval(x));
    let z0 = match cfg.kind {
        ModelKind::LinearWave => GridFunction::stack(&[scalar, GridFunction::zeros(grid, 1)])?,
        _ => scalar,
    };
    let inflow = match cfg.kind {
        ModelKind::AdvectionDiffusionDirichletNeumann => cfg.inflow,
        _ => None,
    };
    FomModel::new(cfg.kind, cfg.c, cfg.mu, grid, z0, inflow)
}

/// Uniform sample times `0, tau, ..., t_end`.
pub fn sample_times(tau: f64, t_end: f64) -> Vec<f64> {
    (0..=step_count(t_end, tau)).map(|k| (k as f64 * tau).min(t_end)).collect()
}

/// Reference trajectory sampled every `integrator.tau`.
pub fn generate_truth(cfg: &ModelConfig, model: &FomModel<f64>) -> Result<SnapshotSet<f64>> {
    match cfg.truth {
        TruthSource::Simulate => integrate_fom(model, &cfg.integrator, cfg.t_end),
        TruthSource::Analytic => {
            let rho0 = GridFunction::new(*model.grid(), 1, model.initial_condition().component(0).to_vec().into())?;
            analytic_wave_snapshots(&rho0, &sample_times(cfg.integrator.tau, cfg.t_end))
        }
    }
}

fn read_path_file(file: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(file)?;
    let values = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|e| Error::Format(format!("{}: {l:?}: {e}", file.display()))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(Error::Format(format!("{}: {} path values for {expected} snapshots", file.display(), values.len())));
    }
    Ok(values)
}

pub fn resolve_path(source: &PathSource, snapshots: &SnapshotSet<f64>) -> Result<Vec<f64>> {
    match source {
        PathSource::Analytic { offset, speed } => Ok(snapshots.times().iter().map(|t| offset + speed * t).collect()),
        PathSource::Estimated => {
            let est = estimate_path(snapshots)?;
            if !est.flat_steps.is_empty() {
                log::warn!("path estimation found {} flat steps", est.flat_steps.len());
            }
            Ok(est.path)
        }
        PathSource::File { file } => read_path_file(file, snapshots.len()),
    }
}

/// Fraction of the offline path range added on both sides of a virtual domain.
pub const VIRTUAL_MARGIN: f64 = 0.1;

fn frame_transform(frame: &FrameConfig, grid: Grid<f64>, path: &[f64]) -> Result<TransformFamily<f64>> {
    match frame.transform {
        TransformChoice::Identity => Ok(TransformFamily::identity(grid)),
        TransformChoice::PeriodicShift => TransformFamily::periodic_shift(grid),
        TransformChoice::VirtualShift => {
            let lo = path.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = path.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // The online path may leave the offline range slightly.
            let margin = VIRTUAL_MARGIN * (hi - lo).max(grid.dxi());
            TransformFamily::virtual_shift(grid, lo - margin, hi + margin)
        }
    }
}

pub fn run_offline(cfg: &ExperimentConfig, snapshots: &SnapshotSet<f64>) -> Result<Decomposition<f64>> {
    let o = &cfg.offline;
    let dec = match o.method {
        OfflineMethod::Pod => compute_pod(snapshots, o.rank)?,
        OfflineMethod::Spod => {
            let mut specs = Vec::with_capacity(o.frames.len());
            for f in &o.frames {
                let path = resolve_path(&f.path, snapshots)?;
                let transform = frame_transform(f, *snapshots.grid(), &path)?;
                specs.push(FrameSpec { transform, path, rank: f.rank });
            }
            if specs.len() == 1 {
                let s = specs.pop().expect("one frame");
                if o.frames[0].transform == TransformChoice::VirtualShift {
                    compute_spod_virtual(snapshots, &s.path, &s.transform, s.rank, o.refinement_passes)?
                } else {
                    compute_spod_single_frame(snapshots, &s.path, &s.transform, s.rank)?
                }
            } else {
                compute_spod_multi_frame(snapshots, &specs, o.sweeps)?
            }
        }
    };
    log::info!("offline: rank {} with relative error {:.3e}", dec.total_rank(), dec.offline_error());
    Ok(dec)
}

/// Reduced model from a decomposition. `PerMode` splits every shifted frame
/// into one frame per mode, each with its own path variable.
pub fn build_rom(cfg: &RomConfig, model: FomModel<f64>, dec: &Decomposition<f64>) -> Result<RomSystem<f64>> {
    let sys = match cfg.grouping {
        PathGrouping::Shared => RomSystem::from_decomposition(model, dec, cfg.phase)?,
        PathGrouping::PerMode => {
            let mut frames = Vec::new();
            for f in dec.frames() {
                if f.transform().kind() == crate::numerics::TransformKind::Identity {
                    frames.push((f.transform().clone(), f.modes().clone()));
                } else {
                    for i in 0..f.rank() {
                        frames.push((f.transform().clone(), f.modes().columns(i, 1).into_owned()));
                    }
                }
            }
            RomSystem::new(model, frames, cfg.phase)?
        }
    };
    let sys = sys.with_regularization(cfg.regularization)?;
    if cfg.shortcuts {
        sys.with_shortcuts()
    } else {
        Ok(sys)
    }
}

/// Offline path values at the first snapshot, one per path variable of the
/// system [`build_rom`] makes with the same grouping.
pub fn initial_path(grouping: PathGrouping, dec: &Decomposition<f64>) -> Vec<f64> {
    let mut p0 = Vec::new();
    for f in dec.frames() {
        if f.transform().kind() == crate::numerics::TransformKind::Identity {
            continue;
        }
        let copies = match grouping {
            PathGrouping::Shared => 1,
            PathGrouping::PerMode => f.rank(),
        };
        p0.extend(std::iter::repeat(f.path()[0]).take(copies));
    }
    p0
}

#[derive(Clone, Debug)]
pub struct RomRun {
    pub system: RomSystem<f64>,
    pub trajectory: RomTrajectory<f64>,
    pub reconstruction: SnapshotSet<f64>,
    pub report: ErrorReport<f64>,
}

/// Projects the initial condition, integrates the reduced model and compares
/// the reconstruction with `truth` at the truth's sample times.
pub fn run_rom(cfg: &ExperimentConfig, model: &FomModel<f64>, dec: &Decomposition<f64>, truth: &SnapshotSet<f64>) -> Result<RomRun> {
    let system = build_rom(&cfg.rom, model.clone(), dec)?;
    let p0 = initial_path(cfg.rom.grouping, dec);
    let proj = if cfg.rom.refine_initial > 0 {
        system.project_initial_condition_refined(model.initial_condition(), &p0, cfg.rom.refine_initial)?
    } else {
        system.project_initial_condition(model.initial_condition(), &p0)?
    };
    let trajectory = integrate_rom(&system, &proj.state, &cfg.rom.integrator, cfg.model.t_end)?;
    let reconstruction = reconstruct_trajectory(&system, &trajectory, truth.times())?;
    let report = ErrorReport::build(
        truth,
        &reconstruction,
        dec.offline_error(),
        &trajectory,
        proj.j_iv,
        cfg.analysis.bound,
        cfg.analysis.keep_pointwise,
    )?;
    log::info!("online: relative error {:.3e}, J_IV {:.3e}", report.online_error, report.j_iv);
    Ok(RomRun { system, trajectory, reconstruction, report })
}
