//! Time evolution: fixed-step RK4 propagation of pure states and density
//! matrices, the closed-form displacement propagator, a brute-force
//! time-ordered oracle, the two-channel master equation, and a Monte-Carlo
//! wave-function unraveling.

mod integrator;
mod lindblad;
mod magnus;
mod mcwf;
mod oracle;
mod schrodinger;

pub use integrator::{plan_step, StepPlan};
pub use lindblad::{lindblad_evolve, lindblad_evolve_with, DampingChannels};
pub use magnus::{displacement_phase, magnus_propagator, DisplacementPhase};
pub use mcwf::{mcwf_evolve, mcwf_observable_series, McwfSeries};
pub use oracle::{time_ordered_block, time_ordered_oracle};
pub use schrodinger::{propagate_schrodinger, propagate_to};

use crate::hilbert::{DensityMatrix, HilbertLayout, Operator, StateVector};
use crate::C64;

/// A (possibly time-dependent) Hamiltonian. The dense matrix is the
/// contract; `apply_into` is the structured fast path and must agree with
/// the matrix to near machine precision (the integrators only ever use
/// `apply_into`).
pub trait HamiltonianProvider {
    fn layout(&self) -> HilbertLayout;

    /// Dense Hermitian matrix at time t.
    fn matrix_at(&self, t: f64) -> Operator;

    /// out = H(t) * psi over raw amplitude slices. Default falls back to the
    /// dense matrix.
    fn apply_into(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let m = self.matrix_at(t);
        let mat = m.matrix();
        let d = mat.nrows();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = C64::from(0.0);
            for j in 0..d {
                acc += mat[(i, j)] * psi[j];
            }
            *o = acc;
        }
    }

    /// Largest drive frequency appearing explicitly in H(t); 0 when static.
    fn fastest_drive_frequency(&self) -> f64 {
        0.0
    }

    /// Spectral scale of the populated sector, used to pick integration
    /// steps that hold the accuracy budget.
    fn populated_scale(&self) -> f64;
}

/// Provider wrapping a closure that yields the dense matrix.
pub struct FnProvider<F: Fn(f64) -> Operator> {
    layout: HilbertLayout,
    f: F,
    fastest: f64,
    scale: f64,
}

impl<F: Fn(f64) -> Operator> FnProvider<F> {
    pub fn new(layout: HilbertLayout, f: F) -> Self {
        FnProvider {
            layout,
            f,
            fastest: 0.0,
            scale: 1.0,
        }
    }

    pub fn with_scales(layout: HilbertLayout, f: F, fastest: f64, scale: f64) -> Self {
        FnProvider {
            layout,
            f,
            fastest,
            scale,
        }
    }
}

impl<F: Fn(f64) -> Operator> HamiltonianProvider for FnProvider<F> {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn matrix_at(&self, t: f64) -> Operator {
        (self.f)(t)
    }

    fn fastest_drive_frequency(&self) -> f64 {
        self.fastest
    }

    fn populated_scale(&self) -> f64 {
        self.scale
    }
}

/// Time-stamped sequence of states with the integrator settings that
/// produced it.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub meta: TrajectoryMeta,
}

/// Reproducibility metadata carried by every trajectory.
#[derive(Clone, Debug, Default)]
pub struct TrajectoryMeta {
    /// Integration step actually used (ns).
    pub dt: f64,
    /// Total RK4 steps taken.
    pub total_steps: usize,
    /// Accumulated |1 - norm| over all renormalizations (pure states only).
    pub norm_drift: f64,
    /// Master seed (stochastic engines only).
    pub seed: Option<u64>,
    /// Trajectory count (stochastic engines only).
    pub n_trajectories: Option<usize>,
}

/// Trajectory of pure states.
pub type PureTrajectory = Trajectory<StateVector>;
/// Trajectory of density matrices.
pub type MixedTrajectory = Trajectory<DensityMatrix>;

pub(crate) fn check_grid(grid: &[f64]) -> crate::Result<()> {
    if grid.is_empty() {
        return Err(crate::Error::InvalidArgument("empty time grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::Error::InvalidArgument(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}
