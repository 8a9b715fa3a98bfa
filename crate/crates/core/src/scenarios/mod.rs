//! Preset experiments, the end-to-end run pipeline and its convergence gate.

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::dressed::{tune_resonance, DressedSystem, Scan};
use crate::error::{invalid, Error, Result};
use crate::fockspace::ModeLabel;
use crate::hamiltonian::{Cutoffs, SystemParams};
use crate::lindblad::{integrate, BathParams, DensityMatrix, DriveParams, IntegrationOptions, MasterEquation};
use crate::observables::{self, Observable, Recorder, Trajectory};

pub use config::{parse_config, KEYS};
pub use output::{emit_csv, write_csv, CSV_HEADER};

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 6] = [
    "fig2_equilibrium",
    "fig2_gradient",
    "fig3_strong_laser",
    "fig5_gradient_coherence",
    "fig6_high_kappa",
    "fig9_high_epsilon",
];

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "OPTOMECH_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    /// `system.omega1` is replaced by the tuned value at run time.
    pub system: SystemParams,
    pub baths: BathParams,
    /// `drive.frequency` is replaced by the tuned value at run time.
    pub drive: DriveParams,
    /// Mode-1 and drive frequency ω̃₁; `None` runs the resonance tuner.
    pub tuned_omega1: Option<f64>,
    pub t_max_kappa_units: f64,
    /// κ used as the time unit of `t_max_kappa_units` and of the kappa_t column.
    pub kappa_ref: f64,
    pub dt: f64,
    pub record_every: usize,
    pub dressed_m: usize,
    pub output_path: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    /// Shared parameters of every preset, with a cold cavity bath and a
    /// warm wall bath.
    fn default() -> Self {
        let gamma = 0.009;
        ScenarioConfig {
            preset: None,
            system: SystemParams {
                omega1: 0.502,
                omega2: 1.0,
                omega_wall: 1.0,
                epsilon: 0.05,
                cutoffs: Cutoffs::default(),
            },
            baths: BathParams { t_cavity: 1e-6, t_wall: 0.3, kappa: 0.003, gamma },
            drive: DriveParams { amplitude: 0.02 * gamma, frequency: 0.502 },
            tuned_omega1: Some(0.502),
            t_max_kappa_units: 15.0,
            kappa_ref: 0.003,
            dt: 0.02,
            record_every: 25,
            dressed_m: 60,
            output_path: None,
        }
    }
}

impl ScenarioConfig {
    pub fn t_max(&self) -> f64 {
        self.t_max_kappa_units / self.kappa_ref
    }

    pub fn validate(&self) -> Result<()> {
        let mut system = self.system;
        if let Some(w) = self.tuned_omega1 {
            system.omega1 = w;
        }
        system.validate()?;
        self.baths.validate()?;
        self.drive.validate()?;
        if !(self.kappa_ref.is_finite() && self.kappa_ref > 0.0) {
            return invalid(format!("kappa_ref must be positive, got {}", self.kappa_ref));
        }
        if !(self.t_max_kappa_units.is_finite() && self.t_max_kappa_units > 0.0) {
            return invalid(format!("t_max_kappa_units must be positive, got {}", self.t_max_kappa_units));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if self.record_every == 0 {
            return invalid("record_every must be at least 1");
        }
        if self.dressed_m < 2 {
            return invalid("dressed_m must be at least 2");
        }
        Ok(())
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        config::apply(self, key, value)
    }

    /// Output file: the configured path, else `<dir>/<preset>.csv` with
    /// `<dir>` from [`OUTPUT_DIR_ENV`] or the working directory.
    pub fn resolved_output_path(&self) -> PathBuf {
        if let Some(p) = &self.output_path {
            return p.clone();
        }
        let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        dir.join(format!("{}.csv", self.preset.as_deref().unwrap_or("scenario")))
    }
}

/// Parameter set of a named experiment.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig { preset: Some(name.to_string()), ..ScenarioConfig::default() };
    match name {
        "fig2_equilibrium" => c.baths.t_cavity = 0.3,
        "fig2_gradient" => {}
        "fig3_strong_laser" => {
            c.baths.t_cavity = 0.3;
            c.drive.amplitude = 0.1 * c.baths.gamma;
        }
        "fig5_gradient_coherence" => c.record_every = 1,
        "fig6_high_kappa" => c.baths.kappa = 0.03,
        "fig9_high_epsilon" => {
            c.system.epsilon = 0.1;
            c.system.cutoffs = Cutoffs { mode1: 8, mode2: 6, wall: 6 };
        }
        _ => {
            return Err(Error::NotFound(format!(
                "unknown preset '{name}'; valid presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub converge_check: bool,
    /// Relative tolerance for the steady-state time.
    pub steady_rel_tol: f64,
    /// Relative drift allowed by the convergence gate.
    pub converge_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { converge_check: true, steady_rel_tol: 1e-3, converge_tol: 0.01 }
    }
}

/// Late-time averages over a trailing window of 2/κ_ref.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyObservables {
    pub from: f64,
    pub to: f64,
    pub means: BTreeMap<Observable, f64>,
    /// Oscillation amplitude √2·σ of each quadrature.
    pub amplitudes: BTreeMap<ModeLabel, f64>,
}

impl SteadyObservables {
    pub fn from_trajectory(traj: &Trajectory, window: f64) -> Result<Self> {
        let last = traj.records.last().ok_or_else(|| Error::Numerical("empty trajectory".into()))?;
        let from = last.t - window;
        let tail = traj.since(from);
        let means = Observable::ALL.iter().map(|&o| (o, observables::mean(tail, o))).collect();
        let amplitudes = ModeLabel::ALL
            .iter()
            .map(|&l| (l, observables::amplitude(tail, Observable::quadrature(l))))
            .collect();
        Ok(SteadyObservables { from: tail[0].t, to: last.t, means, amplitudes })
    }

    pub fn mean(&self, obs: Observable) -> f64 {
        self.means[&obs]
    }

    pub fn amplitude(&self, label: ModeLabel) -> f64 {
        self.amplitudes[&label]
    }

    /// Named scalars compared by the convergence gate.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = [Observable::N1, Observable::N2, Observable::Nw, Observable::Jc, Observable::Jw, Observable::P]
            .iter()
            .map(|&o| (o.name().to_string(), self.mean(o)))
            .collect();
        for l in ModeLabel::ALL {
            v.push((format!("amp_{}", Observable::quadrature(l)), self.amplitude(l)));
        }
        v
    }
}

/// |a − b| / max(|a|, |b|), zero when both vanish.
pub fn relative_drift(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub cutoffs: Cutoffs,
    pub dressed_m: usize,
    pub tolerance: f64,
    pub drifts: Vec<(String, f64)>,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn compare(reference: &SteadyObservables, refined: &SteadyObservables, cutoffs: Cutoffs, dressed_m: usize, tolerance: f64) -> Self {
        let drifts: Vec<(String, f64)> = reference
            .entries()
            .into_iter()
            .zip(refined.entries())
            .map(|((name, a), (_, b))| (name, relative_drift(a, b)))
            .collect();
        let converged = drifts.iter().all(|(_, d)| *d < tolerance);
        ConvergenceReport { cutoffs, dressed_m, tolerance, drifts, converged }
    }

    pub fn max_drift(&self) -> f64 {
        self.drifts.iter().fold(0.0, |m, (_, d)| m.max(*d))
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    /// Configuration with ω̃₁ resolved.
    pub config: ScenarioConfig,
    pub omega1: f64,
    pub trajectory: Trajectory,
    /// Steady-state time; `None` when the tolerance is never met.
    pub t_f: Option<f64>,
    pub steady: SteadyObservables,
    pub convergence: Option<ConvergenceReport>,
    pub dropped_degenerate: usize,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub final_state: DensityMatrix,
    pub warnings: Vec<String>,
}

impl ScenarioResult {
    /// True unless the convergence gate ran and failed.
    pub fn converged(&self) -> bool {
        self.convergence.as_ref().is_none_or(|c| c.converged)
    }
}

/// Observables whose stationarity defines the steady-state time.
pub const STEADY_TRACKED: [Observable; 6] =
    [Observable::N1, Observable::N2, Observable::Nw, Observable::Jc, Observable::Jw, Observable::P];

/// Latest steady-state time over [`STEADY_TRACKED`]; the moving average
/// spans two drive periods.
pub fn steady_state_time(traj: &Trajectory, window: f64, drive_frequency: f64, rel_tol: f64) -> Result<f64> {
    let times = traj.times();
    let smoothing = 4.0 * std::f64::consts::PI / drive_frequency;
    let mut latest = f64::NEG_INFINITY;
    for obs in STEADY_TRACKED {
        let tf = observables::steady_state_time(&times, &traj.column(obs), window, smoothing, rel_tol)
            .map_err(|e| match e {
                Error::NotFound(msg) => Error::NotFound(format!("{obs}: {msg}")),
                other => other,
            })?;
        latest = latest.max(tf);
    }
    Ok(latest)
}

struct Simulation {
    trajectory: Trajectory,
    dropped_degenerate: usize,
    max_trace_drift: f64,
    min_eigenvalue: f64,
    final_state: DensityMatrix,
}

fn simulate(config: &ScenarioConfig, omega1: f64, cutoffs: Cutoffs, levels: usize) -> Result<Simulation> {
    let system = SystemParams { omega1, cutoffs, ..config.system };
    let drive = DriveParams { frequency: omega1, ..config.drive };
    let dressed = DressedSystem::new(&system, levels)?;
    let eq = MasterEquation::new(&dressed.table, &dressed.ops, &config.baths, &drive)?;
    let recorder = Recorder::new(&dressed.ops);
    let opts = IntegrationOptions::new(config.t_max(), config.dt, config.record_every);
    let mut trajectory = Trajectory { records: Vec::with_capacity(opts.steps() / opts.record_every + 2) };
    let report = integrate(&eq, &DensityMatrix::ground(levels), &opts, |t, rho| {
        trajectory.records.push(recorder.record(&eq, t, rho));
        Ok(())
    })?;
    Ok(Simulation {
        trajectory,
        dropped_degenerate: eq.dropped_degenerate(),
        max_trace_drift: report.max_trace_drift,
        min_eigenvalue: report.min_eigenvalue,
        final_state: report.final_state,
    })
}

/// Resolve ω̃₁: the configured value, or the tuner's result on the
/// configured system.
pub fn resolve_omega1(config: &ScenarioConfig) -> Result<f64> {
    match config.tuned_omega1 {
        Some(w) => Ok(w),
        None => tune_resonance(&config.system, Scan::default()),
    }
}

/// Full pipeline: tune, diagonalize, integrate from the dressed ground
/// state, analyse, and optionally rerun with larger truncations.
pub fn run(config: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioResult> {
    config.validate()?;
    let omega1 = resolve_omega1(config)?;
    let mut resolved = config.clone();
    resolved.tuned_omega1 = Some(omega1);
    resolved.system.omega1 = omega1;
    resolved.drive.frequency = omega1;

    let sim = simulate(&resolved, omega1, config.system.cutoffs, config.dressed_m)?;
    let window = 2.0 / config.kappa_ref;
    let steady = SteadyObservables::from_trajectory(&sim.trajectory, window)?;
    let mut warnings = Vec::new();

    let t_f = match steady_state_time(&sim.trajectory, window, omega1, opts.steady_rel_tol) {
        Ok(t) => Some(t),
        Err(Error::NotFound(msg)) => {
            warnings.push(format!("steady state not reached at tolerance {:e} ({msg}); reporting final values", opts.steady_rel_tol));
            None
        }
        Err(e) => return Err(e),
    };
    if sim.dropped_degenerate > 0 {
        warnings.push(format!("{} degenerate level pairs carry no thermal channel", sim.dropped_degenerate));
    }

    let convergence = if opts.converge_check {
        let cutoffs = config.system.cutoffs.incremented(2);
        let levels = config.dressed_m + 20;
        let refined = simulate(&resolved, omega1, cutoffs, levels)?;
        let refined_steady = SteadyObservables::from_trajectory(&refined.trajectory, window)?;
        let report = ConvergenceReport::compare(&steady, &refined_steady, cutoffs, levels, opts.converge_tol);
        if !report.converged {
            let worst = report.drifts.iter().filter(|(_, d)| *d >= opts.converge_tol);
            let list: Vec<String> = worst.map(|(n, d)| format!("{n} {:.2}%", 100.0 * d)).collect();
            warnings.push(format!("unconverged against cutoffs+2 and M+20: {}", list.join(", ")));
        }
        Some(report)
    } else {
        None
    };

    Ok(ScenarioResult {
        config: resolved,
        omega1,
        trajectory: sim.trajectory,
        t_f,
        steady,
        convergence,
        dropped_degenerate: sim.dropped_degenerate,
        max_trace_drift: sim.max_trace_drift,
        min_eigenvalue: sim.min_eigenvalue,
        final_state: sim.final_state,
        warnings,
    })
}
