use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::reconstruct::reconstruct_trajectory;
use super::table::{format_number, Table};
use crate::fom::{integrate, integrate_fom, relative_error, FomModel, IntegratorSpec, Sampling, Scheme, SnapshotSet};
use crate::rom::{count_rom_steps, integrate_rom, RomState, RomSystem};
use crate::{Error, Real, Result};

/// Accepted adaptive steps of the full and the two reduced models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepCountRow {
    pub scheme: Scheme,
    pub fom: usize,
    pub pod: usize,
    pub spod: usize,
}

impl StepCountRow {
    pub fn pod_ratio(&self) -> f64 {
        self.pod as f64 / self.fom as f64
    }

    pub fn spod_ratio(&self) -> f64 {
        self.spod as f64 / self.fom as f64
    }
}

/// Runs the full model and both reduced models with the same adaptive
/// settings for each scheme.
pub fn step_count_study<T: Real>(
    fom: &FomModel<T>,
    pod: (&RomSystem<T>, &RomState<T>),
    spod: (&RomSystem<T>, &RomState<T>),
    schemes: &[Scheme],
    rel_tol: f64,
    abs_tol: f64,
    t_end: T,
) -> Result<Vec<StepCountRow>> {
    let mut rows = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        if scheme == Scheme::ImplicitTrapezoid {
            return Err(Error::InvalidArgument("the step-count study needs an adaptive scheme".into()));
        }
        let spec = IntegratorSpec::adaptive(scheme, t_end.as_f64(), rel_tol, abs_tol);
        let y0: Vec<T> = fom.initial_condition().values().iter().copied().collect();
        let fom_steps = integrate(fom, &y0, &spec, t_end, Sampling::EndOnly)?.accepted_steps;
        let row = StepCountRow {
            scheme,
            fom: fom_steps,
            pod: count_rom_steps(pod.0, pod.1, &spec, t_end)?,
            spod: count_rom_steps(spod.0, spod.1, &spec, t_end)?,
        };
        log::info!("{scheme:?}: FOM {} / POD {} / sPOD {}", row.fom, row.pod, row.spod);
        rows.push(row);
    }
    Ok(rows)
}

pub fn step_table(rows: &[StepCountRow]) -> Table {
    let mut t = Table::new(["scheme", "fom_steps", "pod_steps", "spod_steps", "pod_ratio", "spod_ratio"]);
    for r in rows {
        let scheme = match r.scheme {
            Scheme::ImplicitTrapezoid => "trapezoid",
            Scheme::AdaptiveRk45 => "rk45",
            Scheme::AdaptiveRk23 => "rk23",
        };
        t.push(vec![
            scheme.into(),
            r.fom.to_string(),
            r.pod.to_string(),
            r.spod.to_string(),
            format_number(r.pod_ratio()),
            format_number(r.spod_ratio()),
        ])
        .expect("row width matches header");
    }
    t
}

/// A reduced model built once and re-evaluated at other parameters.
#[derive(Clone, Debug)]
pub struct SweepRom {
    pub label: String,
    pub system: RomSystem<f64>,
    /// Path value used for the initial projection.
    pub p0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub c: f64,
    /// Relative online error per reduced model, in input order.
    pub errors: Vec<f64>,
    /// Seconds per reduced run, in input order.
    pub wall_times: Vec<f64>,
    pub truth_wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub labels: Vec<String>,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// Error columns are deterministic; the wall-time columns are not.
    pub fn error_table(&self) -> Table {
        let mut t = Table::new(std::iter::once("c".to_string()).chain(self.labels.iter().map(|l| format!("error_{l}"))));
        for e in &self.entries {
            t.push(std::iter::once(format_number(e.c)).chain(e.errors.iter().map(|v| format_number(*v))).collect())
                .expect("row width matches header");
        }
        t
    }

    pub fn timing_table(&self) -> Table {
        let header = std::iter::once("c".to_string())
            .chain(std::iter::once("seconds_truth".to_string()))
            .chain(self.labels.iter().map(|l| format!("seconds_{l}")));
        let mut t = Table::new(header);
        for e in &self.entries {
            let row = [e.c, e.truth_wall_time].into_iter().chain(e.wall_times.iter().copied()).map(format_number).collect();
            t.push(row).expect("row width matches header");
        }
        t
    }
}

/// Relative online error of one reduced model against `truth`; the model
/// parameters are taken from `model`.
pub fn evaluate_rom(model: &FomModel<f64>, rom: &SweepRom, truth: &SnapshotSet<f64>, spec: &IntegratorSpec, t_end: f64) -> Result<f64> {
    let sys = rom.system.clone().with_model(model.clone())?;
    let st = sys.project_initial_condition(model.initial_condition(), &rom.p0)?.state;
    let traj = integrate_rom(&sys, &st, spec, t_end)?;
    let rec = reconstruct_trajectory(&sys, &traj, truth.times())?;
    relative_error(truth, &rec)
}

/// Evaluates every reduced model at each transport velocity `c`; entries run
/// on a pool of `jobs` workers and come back in input order.
pub fn parameter_sweep(
    base: &FomModel<f64>,
    roms: &[SweepRom],
    c_values: &[f64],
    rom_spec: &IntegratorSpec,
    truth_spec: &IntegratorSpec,
    t_end: f64,
    jobs: usize,
) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let entries = pool.install(|| {
        c_values
            .par_iter()
            .map(|&c| {
                let model = base.with_params(c, base.mu())?;
                let clock = Instant::now();
                let truth = integrate_fom(&model, truth_spec, t_end)?;
                let truth_wall_time = clock.elapsed().as_secs_f64();
                let mut errors = Vec::with_capacity(roms.len());
                let mut wall_times = Vec::with_capacity(roms.len());
                for rom in roms {
                    let clock = Instant::now();
                    errors.push(evaluate_rom(&model, rom, &truth, rom_spec, t_end)?);
                    wall_times.push(clock.elapsed().as_secs_f64());
                }
                log::info!("c = {c}: errors {errors:?}");
                Ok(SweepEntry { c, errors, wall_times, truth_wall_time })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepResult { labels: roms.iter().map(|r| r.label.clone()).collect(), entries })
}
