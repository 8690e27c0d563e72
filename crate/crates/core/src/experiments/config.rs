use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::BoundParams;
use crate::fom::{InflowPulse, IntegratorSpec, ModelKind, Scheme};
use crate::rom::{PhaseCondition, Regularization};
use crate::{Error, Result};

/// Complete description of one experiment. Every block has defaults, so a
/// config file only lists what differs from the periodic advection-diffusion
/// setup.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub offline: OfflineConfig,
    pub rom: RomConfig,
    pub analysis: AnalysisConfig,
    pub io: IoConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub c: f64,
    pub mu: f64,
    pub grid: GridConfig,
    pub initial_condition: InitialCondition,
    /// Dirichlet inflow; only read by the non-periodic model.
    pub inflow: Option<InflowPulse>,
    pub t_end: f64,
    /// Full-order integrator. Its `tau` is also the snapshot spacing.
    pub integrator: IntegratorSpec,
    pub truth: TruthSource,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::AdvectionDiffusionPeriodic,
            c: 1.0,
            mu: 2e-3,
            grid: GridConfig::default(),
            initial_condition: InitialCondition::default(),
            inflow: None,
            t_end: 1.0,
            integrator: IntegratorSpec::trapezoid(5e-3),
            truth: TruthSource::Simulate,
        }
    }
}

/// Grid topology follows the model kind: periodic grids have spacing
/// `length / n`, bounded grids `length / (n - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub xi0: f64,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 200, xi0: 0.0, length: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentSign {
    #[default]
    Negative,
    Positive,
}

/// `amplitude * exp(±((ξ − center) / width)²)`. For the wave system this is
/// the density; the velocity starts at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialCondition {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub exponent: ExponentSign,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self { amplitude: 1.0, center: 0.5, width: 0.1, exponent: ExponentSign::Negative }
    }
}

impl InitialCondition {
    pub fn eval(&self, x: f64) -> f64 {
        let s = ((x - self.center) / self.width).powi(2);
        match self.exponent {
            ExponentSign::Negative => self.amplitude * (-s).exp(),
            ExponentSign::Positive => self.amplitude * s.exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    /// Integrate the full-order model.
    #[default]
    Simulate,
    /// Closed-form solution (linear wave only).
    Analytic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OfflineMethod {
    Pod,
    #[default]
    Spod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfflineConfig {
    pub method: OfflineMethod,
    /// Rank of a plain POD basis.
    pub rank: usize,
    /// Frames of a shifted POD.
    pub frames: Vec<FrameConfig>,
    /// Block-descent sweeps for more than one frame.
    pub sweeps: usize,
    /// Alternating least-squares passes for a virtual-domain frame.
    pub refinement_passes: usize,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self {
            method: OfflineMethod::Spod,
            rank: 2,
            frames: vec![FrameConfig::default()],
            sweeps: crate::offline::DEFAULT_SWEEPS,
            refinement_passes: crate::offline::DEFAULT_REFINEMENT_PASSES,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformChoice {
    Identity,
    #[default]
    PeriodicShift,
    VirtualShift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", deny_unknown_fields)]
pub enum PathSource {
    /// `offset + speed * t`.
    Analytic { offset: f64, speed: f64 },
    /// Tracked from the snapshots by cross-correlation.
    Estimated,
    /// One value per snapshot, one per line; `#` starts a comment.
    File { file: PathBuf },
}

impl Default for PathSource {
    fn default() -> Self {
        PathSource::Analytic { offset: 0.0, speed: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub transform: TransformChoice,
    pub path: PathSource,
    pub rank: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { transform: TransformChoice::PeriodicShift, path: PathSource::default(), rank: 2 }
    }
}

/// How the modes of a single shifted frame are handed to the reduced model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathGrouping {
    /// All modes of a frame follow one path.
    #[default]
    Shared,
    /// Every mode gets its own path variable.
    PerMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RomConfig {
    pub phase: PhaseCondition,
    pub regularization: Regularization,
    pub integrator: IntegratorSpec,
    pub grouping: PathGrouping,
    /// Use precomputed reduced operators when the setup allows it.
    pub shortcuts: bool,
    /// Gauss-Newton iterations refining the initial path value.
    pub refine_initial: usize,
}

impl Default for RomConfig {
    fn default() -> Self {
        Self {
            phase: PhaseCondition::Residual,
            regularization: Regularization::Off,
            integrator: IntegratorSpec::trapezoid(5e-3),
            grouping: PathGrouping::Shared,
            shortcuts: false,
            refine_initial: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub c_min: f64,
    pub c_max: f64,
    pub c_step: f64,
    pub pod_ranks: Vec<usize>,
    /// Reference solutions at every swept velocity.
    pub truth_integrator: IntegratorSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            c_min: -5.0,
            c_max: 5.0,
            c_step: 0.2,
            pod_ranks: vec![3, 11],
            truth_integrator: IntegratorSpec::adaptive(Scheme::AdaptiveRk45, 5e-3, 1e-9, 1e-12),
        }
    }
}

impl SweepConfig {
    /// `c_min, c_min + c_step, ...` up to `c_max`, computed from integer
    /// multiples so the grid has no accumulated rounding.
    pub fn c_values(&self) -> Vec<f64> {
        let count = ((self.c_max - self.c_min) / self.c_step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.c_min + k as f64 * self.c_step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepsConfig {
    pub schemes: Vec<Scheme>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub pod_rank: usize,
}

impl Default for StepsConfig {
    fn default() -> Self {
        Self { schemes: vec![Scheme::AdaptiveRk45, Scheme::AdaptiveRk23], rel_tol: 1e-3, abs_tol: 1e-6, pod_rank: 20 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub bound: BoundParams,
    /// Keep the full space-time error field in the report.
    pub keep_pointwise: bool,
    pub sweep: SweepConfig,
    pub steps: StepsConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// Output directory; the command line `--out` takes precedence.
    pub out_dir: Option<PathBuf>,
    /// Also write whitespace-separated tables.
    pub gnuplot: bool,
    /// Write full snapshot and reconstruction files.
    pub snapshots: bool,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn check_integrator(field: &str, spec: &IntegratorSpec) -> Result<()> {
    positive(&format!("{field}.tau"), spec.tau)?;
    positive(&format!("{field}.rel_tol"), spec.rel_tol)?;
    positive(&format!("{field}.abs_tol"), spec.abs_tol)?;
    spec.validate().map_err(|e| invalid(field, e))
}

impl ExperimentConfig {
    /// Checks the constraints serde cannot express. Messages start with the
    /// offending field path.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !m.c.is_finite() {
            return Err(invalid("model.c", "must be finite"));
        }
        if !(m.mu.is_finite() && m.mu >= 0.0) {
            return Err(invalid("model.mu", format!("must be non-negative, got {}", m.mu)));
        }
        if m.grid.n < crate::numerics::MIN_NODES {
            return Err(invalid("model.grid.n", format!("needs at least {} nodes", crate::numerics::MIN_NODES)));
        }
        positive("model.grid.length", m.grid.length)?;
        positive("model.initial_condition.width", m.initial_condition.width)?;
        positive("model.t_end", m.t_end)?;
        check_integrator("model.integrator", &m.integrator)?;
        if m.truth == TruthSource::Analytic && m.kind != ModelKind::LinearWave {
            return Err(invalid("model.truth", "the analytic solution exists for linear_wave only"));
        }
        if m.kind == ModelKind::AdvectionDiffusionDirichletNeumann && m.inflow.is_none() {
            return Err(invalid("model.inflow", "required by the non-periodic model"));
        }
        if let Some(p) = &m.inflow {
            positive("model.inflow.width", p.width)?;
        }

        let o = &self.offline;
        match o.method {
            OfflineMethod::Pod => {
                if o.rank == 0 {
                    return Err(invalid("offline.rank", "must be positive"));
                }
            }
            OfflineMethod::Spod => {
                if o.frames.is_empty() {
                    return Err(invalid("offline.frames", "at least one frame is required"));
                }
                for (k, f) in o.frames.iter().enumerate() {
                    let field = format!("offline.frames[{k}]");
                    if f.rank == 0 {
                        return Err(invalid(&format!("{field}.rank"), "must be positive"));
                    }
                    if let PathSource::File { file } = &f.path {
                        if !file.is_file() {
                            return Err(invalid(&format!("{field}.path.file"), format!("{} does not exist", file.display())));
                        }
                    }
                    let bounded = m.kind == ModelKind::AdvectionDiffusionDirichletNeumann;
                    match (f.transform, bounded) {
                        (TransformChoice::PeriodicShift, true) => {
                            return Err(invalid(&format!("{field}.transform"), "a periodic shift needs a periodic model; use virtual_shift"))
                        }
                        (TransformChoice::VirtualShift, false) => {
                            return Err(invalid(&format!("{field}.transform"), "virtual_shift needs the non-periodic model"))
                        }
                        _ => {}
                    }
                }
                if o.frames.len() > 1 && o.sweeps == 0 {
                    return Err(invalid("offline.sweeps", "must be positive"));
                }
            }
        }

        check_integrator("rom.integrator", &self.rom.integrator)?;
        match self.rom.regularization {
            Regularization::Fixed(l) => positive("rom.regularization.fixed", l)?,
            Regularization::Off | Regularization::Auto => {}
        }

        let a = &self.analysis;
        if !(a.bound.c_tilde >= 1.0) {
            return Err(invalid("analysis.bound.c_tilde", "must be at least 1"));
        }
        if !(a.bound.omega >= 0.0) {
            return Err(invalid("analysis.bound.omega", "must be non-negative"));
        }
        positive("analysis.sweep.c_step", a.sweep.c_step)?;
        if !(a.sweep.c_min <= a.sweep.c_max) {
            return Err(invalid("analysis.sweep.c_max", "must not be below c_min"));
        }
        if a.sweep.pod_ranks.contains(&0) {
            return Err(invalid("analysis.sweep.pod_ranks", "ranks must be positive"));
        }
        check_integrator("analysis.sweep.truth_integrator", &a.sweep.truth_integrator)?;
        positive("analysis.steps.rel_tol", a.steps.rel_tol)?;
        positive("analysis.steps.abs_tol", a.steps.abs_tol)?;
        if a.steps.pod_rank == 0 {
            return Err(invalid("analysis.steps.pod_rank", "must be positive"));
        }
        if a.steps.schemes.contains(&Scheme::ImplicitTrapezoid) {
            return Err(invalid("analysis.steps.schemes", "only adaptive schemes can be compared"));
        }
        Ok(())
    }
}
