//! Closed-system propagation of pure states.

use super::integrator::{march, norm_slice, plan_step, StepPlan, VecButchers};
use super::{check_grid, HamiltonianProvider, PureTrajectory, TrajectoryMeta};
use crate::hilbert::StateVector;
use crate::{C64, Result};

use nalgebra::DVector;

/// Per-step renormalization tolerance target for the cumulative drift.
const DRIFT_BUDGET: f64 = 1e-8;

/// Propagate `psi0` through the time grid under `h`. Fixed-step RK4; the
/// state is renormalized after every step and the accumulated |1 - norm| is
/// reported in the metadata.
pub fn propagate_schrodinger(
    h: &dyn HamiltonianProvider,
    psi0: &StateVector,
    grid: &[f64],
    plan: Option<StepPlan>,
) -> Result<PureTrajectory> {
    check_grid(grid)?;
    if psi0.layout() != h.layout() {
        return Err(crate::Error::LayoutMismatch {
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
            DRIFT_BUDGET,
        )?,
    };

    let dim = h.layout().total_dim();
    let mut y: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let mut bufs = VecButchers::new(dim);
    let mut rhs = |t: f64, y: &[C64], out: &mut [C64]| {
        h.apply_into(t, y, out);
        for z in out.iter_mut() {
            *z *= C64::new(0.0, -1.0);
        }
    };

    let mut drift = 0.0;
    let mut total_steps = 0usize;
    let mut states = Vec::with_capacity(grid.len());
    let mut record = |y: &[C64]| {
        let v = DVector::from_iterator(dim, y.iter().copied());
        states.push(StateVector::from_amplitudes(h.layout(), v).expect("normalized state"));
    };

    let mut renorm = |_t: f64, y: &mut [C64]| {
        let n = norm_slice(y);
        drift += (1.0 - n).abs();
        let inv = 1.0 / n;
        for z in y.iter_mut() {
            *z *= inv;
        }
    };

    record(&y);
    for w in grid.windows(2) {
        total_steps += march(&mut rhs, &mut y, &mut bufs, w[0], w[1], plan.dt, &mut renorm);
        record(&y);
    }

    Ok(PureTrajectory {
        times: grid.to_vec(),
        states,
        meta: TrajectoryMeta {
            dt: plan.dt,
            total_steps,
            norm_drift: drift,
            seed: None,
            n_trajectories: None,
        },
    })
}

/// Single-endpoint convenience: the state at `t_final`.
pub fn propagate_to(
    h: &dyn HamiltonianProvider,
    psi0: &StateVector,
    t_final: f64,
    plan: Option<StepPlan>,
) -> Result<StateVector> {
    let traj = propagate_schrodinger(h, psi0, &[0.0, t_final], plan)?;
    Ok(traj.states.into_iter().next_back().expect("endpoint state"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FnProvider;
    use crate::hilbert::{build_layout, Operator};
    use crate::linalg::expm;
    use nalgebra::DMatrix;

    #[test]
    fn constant_hamiltonian_matches_expm() {
        let layout = build_layout(1, 3).unwrap();
        let d = layout.total_dim();
        let mut m = DMatrix::<C64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let v = C64::new(0.13 * (i + j) as f64, 0.21 * (i as f64 - j as f64));
                m[(i, j)] = v;
            }
        }
        let herm = (&m + m.adjoint()) * C64::from(0.5);
        let op = Operator::from_matrix(layout, herm.clone()).unwrap();
        let provider = FnProvider::with_scales(layout, move |_| op.clone(), 0.0, 2.0);
        let psi0 = StateVector::basis_state(layout, 1, 1);
        let t = 2.0;
        let traj =
            propagate_schrodinger(&provider, &psi0, &[0.0, t], Some(StepPlan { dt: 1e-3 }))
                .unwrap();
        let exact = expm(&(herm * C64::new(0.0, -t))) * psi0.amplitudes();
        let got = traj.states[1].amplitudes();
        assert!((got - exact).norm() < 1e-8);
        assert!(traj.meta.norm_drift < 1e-7);
    }

    #[test]
    fn free_phases_are_exact() {
        // g = 0, drives off: each basis amplitude acquires phase e^{-i E t}
        let layout = build_layout(1, 4).unwrap();
        let p = crate::model::tests::baseline(1);
        let mut free = p;
        free.g = 0.0;
        free.amp_x = 0.0;
        free.amp_z = 0.0;
        let h = crate::model::DriveFrameHamiltonian::new(free, layout).unwrap();
        let mut amps = nalgebra::DVector::from_element(layout.total_dim(), C64::from(0.5));
        amps[0] = C64::from(0.5);
        let psi0 = StateVector::from_amplitudes(layout, amps).unwrap();
        let t = 7.0;
        let out = propagate_to(&h, &psi0, t, Some(StepPlan { dt: 5e-3 })).unwrap();
        // energies in the drive frame: detuning_r * n + detuning_q * mz
        let wr = free.omega_r - free.omega_x;
        let wq = free.epsilon - free.omega_x;
        for s in 0..2 {
            for n in 0..4 {
                let idx = layout.index(s, n);
                let e = wr * n as f64 + wq * (s as f64 - 0.5);
                let expect = psi0.amplitudes()[idx] * C64::new(0.0, -e * t).exp();
                assert!((out.amplitudes()[idx] - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_must_increase() {
        let layout = build_layout(1, 2).unwrap();
        let p = crate::model::tests::baseline(1);
        let h = crate::model::DriveFrameHamiltonian::new(p, layout).unwrap();
        let psi0 = StateVector::ground(layout);
        assert!(propagate_schrodinger(&h, &psi0, &[0.0, 1.0, 0.5], None).is_err());
        assert!(propagate_schrodinger(&h, &psi0, &[], None).is_err());
    }
}
