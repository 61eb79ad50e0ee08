//! Two-channel master equation: qubit decay through each sigma_k^- at rate
//! gamma and resonator loss through a at rate kappa,
//!
//! ```text
//! d rho/dt = -i [H(t), rho] + gamma sum_k L[sigma_k^-] rho + kappa L[a] rho,
//! L[A] rho = (1/2)(2 A rho A^dag - A^dag A rho - rho A^dag A).
//! ```
//!
//! Both jump operators only pick up scalar phases under the diagonal carrier
//! rotation, so the dissipators are identical in the lab and drive frames
//! and the equation is integrated in whatever frame `H` provides.

use super::integrator::{march, plan_step, StepPlan, VecButchers};
use super::{check_grid, HamiltonianProvider, MixedTrajectory, TrajectoryMeta};
use crate::hilbert::{DensityMatrix, HilbertLayout};
use crate::model::{DriveFrameHamiltonian, SystemParams};
use crate::{C64, Result};

use nalgebra::DMatrix;

/// Accuracy target for the density-matrix step choice (trace drift and
/// fidelity errors stay well under the 1e-6 trace budget).
const DENSITY_TOL: f64 = 1e-7;

/// The two dissipation channels of the model.
#[derive(Clone, Copy, Debug)]
pub struct DampingChannels {
    pub gamma: f64,
    pub kappa: f64,
}

impl DampingChannels {
    pub fn from_params(p: &SystemParams) -> Self {
        DampingChannels {
            gamma: p.gamma,
            kappa: p.kappa,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.gamma == 0.0 && self.kappa == 0.0
    }

    /// Diagonal of sum_k gamma sigma_k^+ sigma_k^- + kappa a^dag a.
    pub(crate) fn weight_vector(&self, layout: HilbertLayout) -> Vec<f64> {
        let f = layout.fock_dim();
        let mut w = vec![0.0; layout.total_dim()];
        for s in 0..layout.spin_dim() {
            let excited = s.count_ones() as f64;
            for n in 0..f {
                w[s * f + n] = self.gamma * excited + self.kappa * n as f64;
            }
        }
        w
    }
}

/// rho <- rho + weights-applied dissipator terms; `rho` and `out` are d x d
/// column-major slices.
pub(crate) fn add_dissipators(
    layout: HilbertLayout,
    ch: &DampingChannels,
    weights: &[f64],
    rho: &[C64],
    out: &mut [C64],
) {
    let d = layout.total_dim();
    let f = layout.fock_dim();
    // anticommutator part: out_ij -= (w_i + w_j)/2 rho_ij
    for j in 0..d {
        let col = j * d;
        let wj = weights[j];
        for i in 0..d {
            out[col + i] -= rho[col + i] * (0.5 * (weights[i] + wj));
        }
    }
    // kappa a rho a^dag: out_ij += kappa sqrt((n_i+1)(n_j+1)) rho_{i+1, j+1}
    if ch.kappa > 0.0 {
        for j in 0..d {
            let nj = j % f;
            if nj + 1 >= f {
                continue;
            }
            let col = j * d;
            let col_src = (j + 1) * d;
            let sj = ((nj + 1) as f64).sqrt();
            for i in 0..d {
                let ni = i % f;
                if ni + 1 >= f {
                    continue;
                }
                let amp = ch.kappa * sj * ((ni + 1) as f64).sqrt();
                out[col + i] += rho[col_src + i + 1] * amp;
            }
        }
    }
    // gamma sigma_k^- rho sigma_k^+ for each qubit
    if ch.gamma > 0.0 {
        for k in 1..=layout.n_qubits() {
            let off = layout.qubit_bit(k) * f;
            let bit = layout.qubit_bit(k);
            for j in 0..d {
                if (j / f) & bit != 0 {
                    continue;
                }
                let col = j * d;
                let col_src = (j + off) * d;
                for i in 0..d {
                    if (i / f) & bit != 0 {
                        continue;
                    }
                    out[col + i] += rho[col_src + i + off] * ch.gamma;
                }
            }
        }
    }
}

/// Lindblad RHS on column-major d x d slices. Forces the output Hermitian,
/// which is exact on Hermitian input (every RK4 stage input stays Hermitian
/// by induction).
pub(crate) fn lindblad_rhs(
    h: &dyn HamiltonianProvider,
    ch: &DampingChannels,
    weights: &[f64],
    t: f64,
    rho: &[C64],
    out: &mut [C64],
    scratch: &mut [C64],
) {
    let layout = h.layout();
    let d = layout.total_dim();
    // scratch = H rho, column by column
    for j in 0..d {
        h.apply_into(t, &rho[j * d..(j + 1) * d], &mut scratch[j * d..(j + 1) * d]);
    }
    // out = -i (scratch - scratch^dag)
    for j in 0..d {
        for i in 0..d {
            let v = scratch[j * d + i] - scratch[i * d + j].conj();
            out[j * d + i] = C64::new(v.im, -v.re);
        }
    }
    add_dissipators(layout, ch, weights, rho, out);
}

/// Integrate the master equation for an arbitrary Hamiltonian provider and
/// channel rates.
pub fn lindblad_evolve_with(
    h: &dyn HamiltonianProvider,
    ch: &DampingChannels,
    rho0: &DensityMatrix,
    grid: &[f64],
    plan: Option<StepPlan>,
) -> Result<MixedTrajectory> {
    check_grid(grid)?;
    let layout = h.layout();
    if rho0.layout() != layout {
        return Err(crate::Error::LayoutMismatch {
            expected: layout,
            found: rho0.layout(),
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

    let d = layout.total_dim();
    let weights = ch.weight_vector(layout);
    let mut y: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let mut bufs = VecButchers::new(d * d);
    let mut scratch = vec![C64::from(0.0); d * d];
    let mut rhs = |t: f64, y: &[C64], out: &mut [C64]| {
        lindblad_rhs(h, ch, &weights, t, y, out, &mut scratch);
    };

    let mut states = Vec::with_capacity(grid.len());
    let mut trace_drift: f64 = 0.0;
    let mut record = |y: &[C64], trace_drift: &mut f64| {
        let m = DMatrix::from_column_slice(d, d, y);
        let tr: C64 = m.diagonal().sum();
        *trace_drift = trace_drift.max((tr.re - 1.0).abs() + tr.im.abs());
        // renormalize the recorded copy so it satisfies the type contract
        let m = m / C64::from(tr.re);
        states.push(DensityMatrix::from_matrix(layout, m).expect("CPTP flow output"));
    };

    let mut total_steps = 0usize;
    record(&y, &mut trace_drift);
    for w in grid.windows(2) {
        total_steps += march(
            &mut rhs,
            &mut y,
            &mut bufs,
            w[0],
            w[1],
            plan.dt,
            &mut |_, _| {},
        );
        record(&y, &mut trace_drift);
    }

    Ok(MixedTrajectory {
        times: grid.to_vec(),
        states,
        meta: TrajectoryMeta {
            dt: plan.dt,
            total_steps,
            norm_drift: trace_drift,
            seed: None,
            n_trajectories: None,
        },
    })
}

/// Integrate the master equation with the model's drive-frame Hamiltonian
/// and the sigma_k^- / a channels at the rates in `p`.
pub fn lindblad_evolve(
    p: &SystemParams,
    layout: HilbertLayout,
    rho0: &DensityMatrix,
    grid: &[f64],
) -> Result<MixedTrajectory> {
    let h = DriveFrameHamiltonian::new(*p, layout)?;
    let ch = DampingChannels::from_params(p);
    lindblad_evolve_with(&h, &ch, rho0, grid, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::propagate_schrodinger;
    use crate::hilbert::{build_layout, StateVector};
    use crate::model::tests::baseline;
    use std::f64::consts::TAU;

    #[test]
    fn free_qubit_decays_exponentially() {
        // drives and coupling off; excited population = e^{-gamma t}
        let mut p = baseline(1);
        p.g = 0.0;
        p.amp_x = 0.0;
        p.amp_z = 0.0;
        p.kappa = 0.0;
        p.gamma = TAU * 0.05e-3;
        let layout = build_layout(1, 2).unwrap();
        let excited = StateVector::basis_state(layout, 1, 0);
        let rho0 = excited.to_density_matrix();
        let horizon = 3.0 / p.gamma;
        let grid: Vec<f64> = (0..=6).map(|k| horizon * k as f64 / 6.0).collect();
        let traj = lindblad_evolve(&p, layout, &rho0, &grid).unwrap();
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            let pop = rho.matrix()[(layout.index(1, 0), layout.index(1, 0))].re;
            assert!(
                (pop - (-p.gamma * t).exp()).abs() < 1e-6,
                "t={t} pop={pop}"
            );
        }
        assert!(traj.meta.norm_drift < 1e-6);
    }

    #[test]
    fn closed_limit_matches_schrodinger() {
        let mut p = baseline(2);
        p.gamma = 0.0;
        p.kappa = 0.0;
        let layout = build_layout(2, 6).unwrap();
        let h = DriveFrameHamiltonian::new(p, layout).unwrap();
        let psi0 = StateVector::ground(layout);
        let grid = [0.0, 4.0];
        let plan = crate::dynamics::StepPlan { dt: 2.5e-3 };
        let pure = propagate_schrodinger(&h, &psi0, &grid, Some(plan)).unwrap();
        let ch = DampingChannels::from_params(&p);
        let mixed =
            lindblad_evolve_with(&h, &ch, &psi0.to_density_matrix(), &grid, Some(plan)).unwrap();
        let target = &pure.states[1];
        let fid = crate::metrics::state_fidelity_mixed(&mixed.states[1], target).unwrap();
        assert!(fid > 1.0 - 1e-8, "fidelity {fid}");
    }

    #[test]
    fn positivity_and_trace_hold() {
        let mut p = baseline(1);
        p.gamma = TAU * 2e-3;
        p.kappa = TAU * 1e-3;
        let layout = build_layout(1, 4).unwrap();
        let mut amps = nalgebra::DVector::from_element(layout.total_dim(), C64::from(0.0));
        amps[layout.index(1, 1)] = C64::from(1.0);
        amps[layout.index(0, 0)] = C64::from(1.0);
        let psi0 = StateVector::from_amplitudes(layout, amps).unwrap();
        let grid: Vec<f64> = (0..=8).map(|k| 40.0 * k as f64 / 8.0).collect();
        let traj = lindblad_evolve(&p, layout, &psi0.to_density_matrix(), &grid).unwrap();
        for rho in &traj.states {
            assert!((rho.trace().re - 1.0).abs() < 1e-8);
            assert!(rho.min_eigenvalue() >= -1e-8);
        }
    }
}
