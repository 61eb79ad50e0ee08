//! End-to-end experiments: effective-vs-driven fidelity scans, the
//! CNOT-equivalent two-qubit gate, cat-state preparation with measurement,
//! and GHZ-state preparation, each under up to three dynamics modes
//! (effective / driven unitary / driven dissipative).

mod cat;
mod gate;
mod ghz;
mod scan;

pub use cat::run_cat_protocol;
pub use gate::run_gate_protocol;
pub(crate) use gate::twist_gate;
pub use ghz::run_ghz_protocol;
pub use scan::run_fidelity_scan;

use crate::dynamics::StepPlan;
use crate::hilbert::{default_fock_dim, build_layout, HilbertLayout, StateVector};
use crate::model::{check_regime, effective_params, EffectiveParams, SystemParams};
use crate::{C64, Error, Result};

/// Which experiment a config drives.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Protocol {
    FidelityScan,
    Gate,
    Cat,
    Ghz,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::FidelityScan => "scan",
            Protocol::Gate => "gate",
            Protocol::Cat => "cat",
            Protocol::Ghz => "ghz",
        }
    }
}

/// Dynamics layer a series is computed under.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DynamicsMode {
    Effective,
    FullUnitary,
    FullDissipative,
}

/// Engine for the dissipative mode.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum DissipativeEngine {
    Dense,
    Mcwf { trajectories: usize, seed: u64 },
}

/// Declarative description of one protocol run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    /// Boson truncation; `None` takes the default sized from the coupling
    /// ratio.
    pub fock_dim: Option<usize>,
    pub protocol: Protocol,
    /// Time span in units of the effective resonator period.
    pub horizon_periods: f64,
    /// Number of grid samples (including both endpoints).
    pub samples: usize,
    pub modes: Vec<DynamicsMode>,
    pub engine: DissipativeEngine,
    /// Re-run the headline figure at doubled fock_dim and fail if it moves
    /// by 1e-4 or more.
    pub convergence_check: bool,
}

impl ExperimentConfig {
    pub fn new(params: SystemParams, protocol: Protocol) -> Self {
        ExperimentConfig {
            params,
            fock_dim: None,
            protocol,
            horizon_periods: 1.0,
            samples: 201,
            modes: match protocol {
                Protocol::FidelityScan => {
                    vec![DynamicsMode::FullUnitary]
                }
                _ => vec![
                    DynamicsMode::Effective,
                    DynamicsMode::FullUnitary,
                    DynamicsMode::FullDissipative,
                ],
            },
            engine: DissipativeEngine::Dense,
            convergence_check: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.horizon_periods > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.samples < 2 {
            return Err(Error::Config("need at least 2 samples".into()));
        }
        if matches!(self.engine, DissipativeEngine::Mcwf { .. })
            && !self.modes.contains(&DynamicsMode::FullDissipative)
        {
            return Err(Error::Config(
                "the mcwf engine requires the dissipative mode".into(),
            ));
        }
        if let DissipativeEngine::Mcwf { trajectories, .. } = self.engine {
            if trajectories < 1 {
                return Err(Error::Config("mcwf needs at least one trajectory".into()));
            }
        }
        Ok(())
    }

    pub fn has_mode(&self, m: DynamicsMode) -> bool {
        self.modes.contains(&m)
    }
}

/// Time series and scalar outcomes of one run.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub protocol: Protocol,
    pub times: Vec<f64>,
    /// Named fidelity columns aligned with `times`.
    pub series: Vec<(String, Vec<f64>)>,
    /// Scalar summary rows.
    pub summary: Vec<(String, f64)>,
    /// Settings, seeds, truncation, convergence deltas.
    pub meta: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl ExperimentResult {
    pub(crate) fn validate(&self) -> Result<()> {
        for (name, col) in &self.series {
            if col.len() != self.times.len() {
                return Err(Error::InvalidArgument(format!(
                    "series {name} length mismatch"
                )));
            }
            for v in col {
                if !(-1e-8..=1.0 + 1e-8).contains(v) {
                    return Err(Error::InvalidArgument(format!(
                        "series {name} has out-of-range fidelity {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
    }
}

/// Run the protocol selected by the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match cfg.protocol {
        Protocol::FidelityScan => run_fidelity_scan(cfg),
        Protocol::Gate => run_gate_protocol(cfg),
        Protocol::Cat => run_cat_protocol(cfg),
        Protocol::Ghz => run_ghz_protocol(cfg),
    }
}

/// Shared per-run context resolved from a config.
pub(crate) struct RunContext {
    pub layout: HilbertLayout,
    pub eff: EffectiveParams,
    pub period: f64,
    pub grid: Vec<f64>,
    pub warnings: Vec<String>,
}

pub(crate) fn resolve(cfg: &ExperimentConfig) -> Result<RunContext> {
    cfg.validate()?;
    let eff = effective_params(&cfg.params)?;
    let report = check_regime(&cfg.params);
    if report.hard_failure() {
        return Err(Error::Regime(report.summary()));
    }
    let mut warnings = Vec::new();
    if !report.all_pass() {
        warnings.push(format!("drive regime marginal: {}", report.summary()));
    }
    let fock = cfg
        .fock_dim
        .unwrap_or_else(|| default_fock_dim(cfg.params.n_qubits, eff.ratio));
    let layout = build_layout(cfg.params.n_qubits, fock)?;
    let period = eff.period();
    let horizon = cfg.horizon_periods * period;
    let grid: Vec<f64> = (0..cfg.samples)
        .map(|k| horizon * k as f64 / (cfg.samples - 1) as f64)
        .collect();
    Ok(RunContext {
        layout,
        eff,
        period,
        grid,
        warnings,
    })
}

/// Step plans used by the protocol layer: a tight one for pure states (the
/// norm-drift budget) and a looser one for density matrices.
pub(crate) fn pure_plan(
    h: &dyn crate::dynamics::HamiltonianProvider,
    horizon: f64,
) -> Result<StepPlan> {
    crate::dynamics::plan_step(
        h.fastest_drive_frequency(),
        h.populated_scale(),
        horizon,
        1e-8,
    )
}

/// Step plan for trajectory unravelings: state-phase errors far below the
/// Monte-Carlo sampling error are wasted effort.
pub(crate) fn mcwf_plan(
    h: &dyn crate::dynamics::HamiltonianProvider,
    horizon: f64,
) -> Result<StepPlan> {
    crate::dynamics::plan_step(
        h.fastest_drive_frequency(),
        h.populated_scale(),
        horizon,
        1e-6,
    )
}

pub(crate) fn density_plan(
    h: &dyn crate::dynamics::HamiltonianProvider,
    horizon: f64,
) -> Result<StepPlan> {
    crate::dynamics::plan_step(
        h.fastest_drive_frequency(),
        h.populated_scale(),
        horizon,
        1e-7,
    )
}

/// Inner product of raw amplitude slices, <a|b>.
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

pub(crate) fn to_state(layout: HilbertLayout, amps: Vec<C64>) -> StateVector {
    StateVector::from_amplitudes(layout, nalgebra::DVector::from_vec(amps))
        .expect("protocol states are normalized")
}

/// Format a float for metadata (12 significant digits, scientific).
pub(crate) fn fmt_meta(v: f64) -> String {
    format!("{v:.11e}")
}
