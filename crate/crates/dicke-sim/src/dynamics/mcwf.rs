//! Monte-Carlo wave-function unraveling of the two-channel master equation.
//!
//! Norm-threshold jump detection: each trajectory integrates the
//! non-Hermitian drift `H - (i/2)(gamma sum_k sigma_k^+ sigma_k^- +
//! kappa a^dag a)` without renormalizing, draws a uniform target r, and
//! collapses through a channel chosen by its instantaneous weight when the
//! squared norm crosses r.
//!
//! The deterministic no-jump segment is shared by every trajectory, so it is
//! integrated once, its per-step norms and periodic checkpoints stored;
//! each trajectory then binary-searches its jump step on the stored norm
//! curve and re-integrates only from the nearest checkpoint. This
//! reproduces the naive per-trajectory loop step for step (the unit tests
//! compare the two), while making thousands of trajectories tractable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::integrator::{norm_slice, plan_step, rk4_step_vec, StepPlan, VecButchers};
use super::lindblad::DampingChannels;
use super::{check_grid, HamiltonianProvider, MixedTrajectory, TrajectoryMeta};
use crate::hilbert::{DensityMatrix, HilbertLayout, StateVector};
use crate::linalg::pairwise_sum;
use crate::model::SystemParams;
use crate::{C64, Error, Result};

use nalgebra::DMatrix;

const DENSITY_TOL: f64 = 1e-7;
/// Refinement bound on the first-order jump probability per step.
const MAX_JUMP_PROB_PER_STEP: f64 = 0.1;

/// Averaged scalar observable over trajectories, with per-point standard
/// errors.
#[derive(Clone, Debug)]
pub struct McwfSeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_trajectories: usize,
    pub seed: u64,
    pub dt: f64,
    /// Fraction of trajectories that underwent at least one jump.
    pub jump_fraction: f64,
}

/// The exact step sequence shared by every trajectory: `march` semantics
/// (per grid interval, ceil(span/dt) equal steps).
struct StepSequence {
    /// (start time, step size) per flat step.
    steps: Vec<(f64, f64)>,
    /// grid point g is reached after `grid_marks[g]` flat steps.
    grid_marks: Vec<usize>,
}

fn build_sequence(grid: &[f64], dt: f64) -> StepSequence {
    let mut steps = Vec::new();
    let mut grid_marks = Vec::with_capacity(grid.len());
    grid_marks.push(0);
    for w in grid.windows(2) {
        let span = w[1] - w[0];
        let n = (span / dt).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for k in 0..n {
            steps.push((w[0] + h * k as f64, h));
        }
        grid_marks.push(steps.len());
    }
    StepSequence { steps, grid_marks }
}

/// No-jump reference data.
struct Backbone {
    /// Squared norm after each flat step (non-increasing).
    norms2: Vec<f64>,
    /// (steps completed, unnormalized amplitudes) at periodic checkpoints;
    /// always contains the initial state at index 0.
    checkpoints: Vec<(usize, Vec<C64>)>,
    /// Normalized states at the grid points.
    grid_states: Vec<Vec<C64>>,
}

struct Engine<'a> {
    h: &'a dyn HamiltonianProvider,
    weights: Vec<f64>,
    ch: DampingChannels,
    layout: HilbertLayout,
    seq: StepSequence,
}

impl Engine<'_> {
    fn rhs(&self, t: f64, y: &[C64], out: &mut [C64]) {
        self.h.apply_into(t, y, out);
        for (o, (z, w)) in out.iter_mut().zip(y.iter().zip(&self.weights)) {
            *o = C64::new(o.im, -o.re) - z * (0.5 * w);
        }
    }

    fn step(&self, idx: usize, y: &mut [C64], bufs: &mut VecButchers) {
        let (t, h) = self.seq.steps[idx];
        let mut rhs = |t: f64, y: &[C64], out: &mut [C64]| self.rhs(t, y, out);
        rk4_step_vec(&mut rhs, t, h, y, bufs);
    }

    fn build_backbone(&self, psi0: &[C64], ckpt_stride: usize) -> Result<Backbone> {
        let mut y = psi0.to_vec();
        let mut bufs = VecButchers::new(y.len());
        let mut norms2 = Vec::with_capacity(self.seq.steps.len());
        let mut checkpoints = vec![(0usize, y.clone())];
        let mut grid_states = Vec::with_capacity(self.seq.grid_marks.len());
        let mut mark_iter = self.seq.grid_marks.iter().peekable();
        let mut record_if_marked = |done: usize, y: &[C64], out: &mut Vec<Vec<C64>>| {
            // grid marks are non-decreasing; zero-length intervals cannot
            // occur on a strictly increasing grid
            if let Some(&&m) = mark_iter.peek() {
                if m == done {
                    let n = norm_slice(y);
                    out.push(y.iter().map(|z| z / n).collect());
                    mark_iter.next();
                }
            }
        };
        record_if_marked(0, &y, &mut grid_states);
        let mut prev_n2 = 1.0f64;
        for idx in 0..self.seq.steps.len() {
            self.step(idx, &mut y, &mut bufs);
            let n2 = norm_slice(&y).powi(2);
            if prev_n2 > 0.0 && 1.0 - n2 / prev_n2 > MAX_JUMP_PROB_PER_STEP {
                return Err(Error::AccuracyBudget(format!(
                    "jump probability per step exceeded {MAX_JUMP_PROB_PER_STEP}; refine dt"
                )));
            }
            prev_n2 = n2;
            norms2.push(n2);
            let done = idx + 1;
            if done % ckpt_stride == 0 {
                checkpoints.push((done, y.clone()));
            }
            record_if_marked(done, &y, &mut grid_states);
        }
        Ok(Backbone {
            norms2,
            checkpoints,
            grid_states,
        })
    }

    /// Channel weights for a collapse: per-qubit gamma <sigma+sigma-> and
    /// the boson kappa <a^dag a>, on unnormalized amplitudes.
    fn jump_weights(&self, y: &[C64]) -> Vec<f64> {
        let f = self.layout.fock_dim();
        let nq = self.layout.n_qubits();
        let mut w = vec![0.0; nq + 1];
        for (i, z) in y.iter().enumerate() {
            let p = z.norm_sqr();
            let s = i / f;
            let n = i % f;
            for (k, wk) in w.iter_mut().enumerate().take(nq) {
                if s & (1usize << (nq - 1 - k)) != 0 {
                    *wk += self.ch.gamma * p;
                }
            }
            w[nq] += self.ch.kappa * n as f64 * p;
        }
        w
    }

    /// Collapse `y` through a channel drawn by weight; renormalizes.
    fn apply_jump(&self, rng: &mut ChaCha8Rng, y: &mut [C64]) {
        let weights = self.jump_weights(y);
        let total: f64 = weights.iter().sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut channel = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if pick < *w {
                channel = k;
                break;
            }
            pick -= w;
        }
        let f = self.layout.fock_dim();
        let nq = self.layout.n_qubits();
        if channel < nq {
            // sigma_k^-: move e -> g amplitudes
            let bit = 1usize << (nq - 1 - channel);
            let off = bit * f;
            for i in 0..y.len() {
                let s = i / f;
                y[i] = if s & bit == 0 { y[i + off] } else { C64::from(0.0) };
            }
        } else {
            // a: shift one photon down
            for i in 0..y.len() {
                let n = i % f;
                y[i] = if n + 1 < f {
                    y[i + 1] * C64::from(((n + 1) as f64).sqrt())
                } else {
                    C64::from(0.0)
                };
            }
        }
        let norm = norm_slice(y);
        let inv = 1.0 / norm;
        for z in y.iter_mut() {
            *z *= inv;
        }
    }
}

/// Run the unraveling and average a scalar observable (evaluated on
/// normalized amplitudes at each grid point). Deterministic for a given
/// (seed, n_traj, grid): trajectory i uses the ChaCha stream i+1 of the
/// master seed, and the average is a fixed-shape pairwise reduction.
#[allow(clippy::too_many_arguments)]
pub fn mcwf_observable_series(
    h: &dyn HamiltonianProvider,
    ch: &DampingChannels,
    psi0: &StateVector,
    grid: &[f64],
    n_traj: usize,
    seed: u64,
    observable: &dyn Fn(usize, &[C64]) -> f64,
    plan: Option<StepPlan>,
) -> Result<McwfSeries> {
    check_grid(grid)?;
    if n_traj < 1 {
        return Err(Error::InvalidArgument("n_traj must be >= 1".into()));
    }
    if psi0.layout() != h.layout() {
        return Err(Error::LayoutMismatch {
            expected: h.layout(),
            found: psi0.layout(),
        });
    }
    let horizon = grid[grid.len() - 1] - grid[0];
    let plan = match plan {
        Some(p) => p,
        None => plan_step(
            h.fastest_drive_frequency(),
            h.populated_scale(),
            horizon.max(f64::MIN_POSITIVE),
            DENSITY_TOL,
        )?,
    };
    let layout = h.layout();
    let engine = Engine {
        h,
        weights: ch.weight_vector(layout),
        ch: *ch,
        layout,
        seq: build_sequence(grid, plan.dt),
    };
    let psi0_amps: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let ckpt_stride = (engine.seq.steps.len() / 96).max(1);
    let backbone = engine.build_backbone(&psi0_amps, ckpt_stride)?;

    let no_jump_values: Vec<f64> = backbone
        .grid_states
        .iter()
        .enumerate()
        .map(|(g, y)| observable(g, y))
        .collect();

    let ng = grid.len();
    let mut per_traj: Vec<Vec<f64>> = Vec::with_capacity(n_traj);
    let mut jumps = 0usize;
    for traj in 0..n_traj {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(traj as u64 + 1);
        let values = run_trajectory(&engine, &backbone, &no_jump_values, observable, &mut rng, ng);
        if values.1 {
            jumps += 1;
        }
        per_traj.push(values.0);
    }

    let mut mean = Vec::with_capacity(ng);
    let mut std_error = Vec::with_capacity(ng);
    let mut column = vec![0.0; n_traj];
    for g in 0..ng {
        for (i, tv) in per_traj.iter().enumerate() {
            column[i] = tv[g];
        }
        let m = pairwise_sum(&column) / n_traj as f64;
        mean.push(m);
        if n_traj > 1 {
            let sq: Vec<f64> = column.iter().map(|v| (v - m) * (v - m)).collect();
            let var = pairwise_sum(&sq) / (n_traj as f64 - 1.0);
            std_error.push((var / n_traj as f64).sqrt());
        } else {
            std_error.push(0.0);
        }
    }

    Ok(McwfSeries {
        times: grid.to_vec(),
        mean,
        std_error,
        n_trajectories: n_traj,
        seed,
        dt: plan.dt,
        jump_fraction: jumps as f64 / n_traj as f64,
    })
}

/// One trajectory's observable values over the grid (and whether it jumped).
fn run_trajectory(
    engine: &Engine<'_>,
    backbone: &Backbone,
    no_jump_values: &[f64],
    observable: &dyn Fn(usize, &[C64]) -> f64,
    rng: &mut ChaCha8Rng,
    n_grid: usize,
) -> (Vec<f64>, bool) {
    let r: f64 = rng.gen();
    let total_steps = engine.seq.steps.len();
    // first flat step k with norm2[k] <= r
    let k_star = backbone.norms2.partition_point(|&v| v > r);
    if k_star == total_steps {
        return (no_jump_values.to_vec(), false);
    }

    // grid points with grid_marks[g] <= k_star predate the jump
    let mut values = Vec::with_capacity(n_grid);
    for g in 0..n_grid {
        if engine.seq.grid_marks[g] <= k_star {
            values.push(no_jump_values[g]);
        }
    }

    // reconstruct the unnormalized state after k_star + 1 steps
    let cp_idx = backbone
        .checkpoints
        .partition_point(|(done, _)| *done <= k_star + 1)
        - 1;
    let (cp_done, cp_state) = &backbone.checkpoints[cp_idx];
    let mut y = cp_state.clone();
    let mut bufs = VecButchers::new(y.len());
    for idx in *cp_done..=k_star {
        engine.step(idx, &mut y, &mut bufs);
    }

    engine.apply_jump(rng, &mut y);
    let mut r = rng.gen::<f64>();

    // continue stepping live
    let record = |done: usize, y: &[C64], values: &mut Vec<f64>| {
        for g in 0..n_grid {
            if engine.seq.grid_marks[g] == done {
                let n = norm_slice(y);
                let normalized: Vec<C64> = y.iter().map(|z| z / n).collect();
                values.push(observable(g, &normalized));
            }
        }
    };
    record(k_star + 1, &y, &mut values);
    for idx in (k_star + 1)..total_steps {
        engine.step(idx, &mut y, &mut bufs);
        let n2 = norm_slice(&y).powi(2);
        if n2 <= r {
            engine.apply_jump(rng, &mut y);
            r = rng.gen();
        }
        record(idx + 1, &y, &mut values);
    }
    debug_assert_eq!(values.len(), n_grid);
    (values, true)
}

/// Trajectory-averaged density matrices on the grid; intended for small
/// dimensions (the density matrices are dense).
pub fn mcwf_evolve(
    p: &SystemParams,
    layout: HilbertLayout,
    psi0: &StateVector,
    grid: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<MixedTrajectory> {
    check_grid(grid)?;
    if n_traj < 1 {
        return Err(Error::InvalidArgument("n_traj must be >= 1".into()));
    }
    let h = crate::model::DriveFrameHamiltonian::new(*p, layout)?;
    let ch = DampingChannels::from_params(p);
    if psi0.layout() != layout {
        return Err(Error::LayoutMismatch {
            expected: layout,
            found: psi0.layout(),
        });
    }
    let horizon = grid[grid.len() - 1] - grid[0];
    let plan = plan_step(
        h.fastest_drive_frequency(),
        h.populated_scale(),
        horizon.max(f64::MIN_POSITIVE),
        DENSITY_TOL,
    )?;
    let engine = Engine {
        h: &h,
        weights: ch.weight_vector(layout),
        ch,
        layout,
        seq: build_sequence(grid, plan.dt),
    };
    let psi0_amps: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let ckpt_stride = (engine.seq.steps.len() / 96).max(1);
    let backbone = engine.build_backbone(&psi0_amps, ckpt_stride)?;

    let d = layout.total_dim();
    let ng = grid.len();
    // fixed-shape reduction: per-chunk sequential sums, then a pairwise fold
    let chunk = 64usize;
    let n_chunks = n_traj.div_ceil(chunk);
    let mut chunk_sums: Vec<Vec<DMatrix<C64>>> = Vec::with_capacity(n_chunks);
    let dummy: Vec<f64> = vec![0.0; ng];
    for c in 0..n_chunks {
        let mut acc: Vec<DMatrix<C64>> = (0..ng).map(|_| DMatrix::zeros(d, d)).collect();
        for traj in (c * chunk)..((c + 1) * chunk).min(n_traj) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(traj as u64 + 1);
            let states =
                trajectory_states(&engine, &backbone, &mut rng, ng).unwrap_or_default();
            if states.is_empty() {
                // no-jump fast path: add the shared backbone projectors
                for (g, acc_g) in acc.iter_mut().enumerate() {
                    add_projector(acc_g, &backbone.grid_states[g]);
                }
            } else {
                for (g, acc_g) in acc.iter_mut().enumerate() {
                    add_projector(acc_g, &states[g]);
                }
            }
        }
        chunk_sums.push(acc);
    }
    let _ = dummy;

    let mut states = Vec::with_capacity(ng);
    for g in 0..ng {
        let parts: Vec<&DMatrix<C64>> = chunk_sums.iter().map(|c| &c[g]).collect();
        let total = pairwise_fold(&parts);
        let rho = total / C64::from(n_traj as f64);
        states.push(DensityMatrix::from_matrix(layout, rho)?);
    }

    Ok(MixedTrajectory {
        times: grid.to_vec(),
        states,
        meta: TrajectoryMeta {
            dt: plan.dt,
            total_steps: engine.seq.steps.len(),
            norm_drift: 0.0,
            seed: Some(seed),
            n_trajectories: Some(n_traj),
        },
    })
}

fn add_projector(acc: &mut DMatrix<C64>, y: &[C64]) {
    let d = y.len();
    for j in 0..d {
        let cj = y[j].conj();
        if cj.norm_sqr() == 0.0 {
            continue;
        }
        let col = &mut acc.as_mut_slice()[j * d..(j + 1) * d];
        for (o, z) in col.iter_mut().zip(y.iter()) {
            *o += z * cj;
        }
    }
}

fn pairwise_fold(parts: &[&DMatrix<C64>]) -> DMatrix<C64> {
    match parts.len() {
        0 => unreachable!("at least one chunk"),
        1 => parts[0].clone(),
        n => {
            let mid = n / 2;
            pairwise_fold(&parts[..mid]) + pairwise_fold(&parts[mid..])
        }
    }
}

/// Normalized per-grid-point states for a jumping trajectory, or None when
/// it never jumps (callers then reuse the backbone states).
fn trajectory_states(
    engine: &Engine<'_>,
    backbone: &Backbone,
    rng: &mut ChaCha8Rng,
    n_grid: usize,
) -> Option<Vec<Vec<C64>>> {
    let r: f64 = rng.gen();
    let total_steps = engine.seq.steps.len();
    let k_star = backbone.norms2.partition_point(|&v| v > r);
    if k_star == total_steps {
        return None;
    }
    let mut states: Vec<Vec<C64>> = Vec::with_capacity(n_grid);
    for g in 0..n_grid {
        if engine.seq.grid_marks[g] <= k_star {
            states.push(backbone.grid_states[g].clone());
        }
    }
    let cp_idx = backbone
        .checkpoints
        .partition_point(|(done, _)| *done <= k_star + 1)
        - 1;
    let (cp_done, cp_state) = &backbone.checkpoints[cp_idx];
    let mut y = cp_state.clone();
    let mut bufs = VecButchers::new(y.len());
    for idx in *cp_done..=k_star {
        engine.step(idx, &mut y, &mut bufs);
    }
    engine.apply_jump(rng, &mut y);
    let mut r = rng.gen::<f64>();
    let record = |done: usize, y: &[C64], states: &mut Vec<Vec<C64>>| {
        for g in 0..n_grid {
            if engine.seq.grid_marks[g] == done {
                let n = norm_slice(y);
                states.push(y.iter().map(|z| z / n).collect());
            }
        }
    };
    record(k_star + 1, &y, &mut states);
    for idx in (k_star + 1)..total_steps {
        engine.step(idx, &mut y, &mut bufs);
        let n2 = norm_slice(&y).powi(2);
        if n2 <= r {
            engine.apply_jump(rng, &mut y);
            r = rng.gen();
        }
        record(idx + 1, &y, &mut states);
    }
    Some(states)
}
