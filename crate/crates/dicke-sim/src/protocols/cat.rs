//! Cat-state preparation: starting from the equal superposition of the
//! extremal J_x eigenstates with the mode in vacuum, the conditional
//! displacement splits the mode into two coherent branches of amplitude
//! ±(N/2)β(t); at t0 = π/w_eff the separation peaks at N g_eff / w_eff.
//! Measuring the spins in the |±> basis leaves the mode in an even or odd
//! cat state.

use super::{
    density_plan, fmt_meta, inner, pure_plan, resolve, to_state, DissipativeEngine, DynamicsMode,
    ExperimentConfig, ExperimentResult, Protocol,
};
use crate::dynamics::{
    displacement_phase, lindblad_evolve_with, mcwf_observable_series, propagate_schrodinger,
    DampingChannels, StepPlan,
};
use crate::hilbert::{
    coherent_amplitudes, x_ladder, HilbertLayout,
};
use crate::metrics::state_fidelity_mixed;
use crate::model::{
    DriveFrameHamiltonian, EffectiveHamiltonian, EffectiveInteractionFrame, EffectiveParams,
};
use crate::{C64, Error, Result};

use std::f64::consts::PI;

/// Initial spin superposition (|j, j>_x + |j, -j>_x)/√2 ⊗ |0>, and the two
/// extremal x states for branch analysis.
struct CatFrames {
    initial: Vec<C64>,
    x_top: Vec<C64>,
    x_bot: Vec<C64>,
}

fn cat_frames(layout: HilbertLayout) -> CatFrames {
    let ladder = x_ladder(layout.n_qubits());
    let top = &ladder[0];
    let bot = &ladder[layout.n_qubits()];
    let d = layout.total_dim();
    let f = layout.fock_dim();
    let mut initial = vec![C64::from(0.0); d];
    let mut x_top = vec![C64::from(0.0); d];
    let mut x_bot = vec![C64::from(0.0); d];
    let rt = C64::from(1.0 / 2f64.sqrt());
    for s in 0..layout.spin_dim() {
        initial[s * f] = (top[s] + bot[s]) * rt;
        x_top[s * f] = top[s];
        x_bot[s * f] = bot[s];
    }
    CatFrames {
        initial,
        x_top,
        x_bot,
    }
}

/// Closed-form branch state at time t:
/// (e^{i N^2 φ/4}/√2)(|j,j>_x ⊗ |γ> + |j,-j>_x ⊗ |-γ>), γ = (N/2)β(t).
fn cat_target(layout: HilbertLayout, eff: &EffectiveParams, t: f64) -> Result<Vec<C64>> {
    let dp = displacement_phase(eff, t)?;
    let n = layout.n_qubits() as f64;
    let gamma = dp.beta * C64::from(n / 2.0);
    if gamma.norm_sqr() > layout.fock_dim() as f64 / 4.0 {
        return Err(Error::Truncation(format!(
            "branch displacement |γ|^2 = {:.2} needs fock_dim >= {}; increase the truncation",
            gamma.norm_sqr(),
            (4.0 * gamma.norm_sqr()).ceil() as usize
        )));
    }
    let ladder = x_ladder(layout.n_qubits());
    let top = &ladder[0];
    let bot = &ladder[layout.n_qubits()];
    let coh_plus = coherent_amplitudes(layout.fock_dim(), gamma);
    let coh_minus = coherent_amplitudes(layout.fock_dim(), -gamma);
    let pref = C64::new(0.0, n * n * dp.phase / 4.0).exp() / C64::from(2f64.sqrt());
    let f = layout.fock_dim();
    let mut out = vec![C64::from(0.0); layout.total_dim()];
    for s in 0..layout.spin_dim() {
        for nn in 0..f {
            out[s * f + nn] = pref * (top[s] * coh_plus[nn] + bot[s] * coh_minus[nn]);
        }
    }
    Ok(out)
}

/// Branch probabilities and branch displacement from a state in the
/// interaction-picture comparison frame: project the spins onto
/// |±> = (|j,j>_x ± |j,-j>_x)/√2.
fn branch_analysis(layout: HilbertLayout, frames: &CatFrames, amps: &[C64]) -> (f64, f64, f64) {
    let f = layout.fock_dim();
    let mut plus = vec![C64::from(0.0); f];
    let mut minus = vec![C64::from(0.0); f];
    let rt = 1.0 / 2f64.sqrt();
    for s in 0..layout.spin_dim() {
        let ct = frames.x_top[s * f].conj();
        let cb = frames.x_bot[s * f].conj();
        for n in 0..f {
            let z = amps[s * f + n];
            plus[n] += (ct + cb) * z * rt;
            minus[n] += (ct - cb) * z * rt;
        }
    }
    let p_plus: f64 = plus.iter().map(|z| z.norm_sqr()).sum();
    let p_minus: f64 = minus.iter().map(|z| z.norm_sqr()).sum();
    // branch displacement from the |j,j>_x-conditioned mode state
    let mut branch = vec![C64::from(0.0); f];
    for s in 0..layout.spin_dim() {
        let ct = frames.x_top[s * f].conj();
        for n in 0..f {
            branch[n] += ct * amps[s * f + n];
        }
    }
    let bn: f64 = branch.iter().map(|z| z.norm_sqr()).sum();
    let mut mean_a = C64::from(0.0);
    for n in 1..f {
        mean_a += branch[n - 1].conj() * branch[n] * C64::from((n as f64).sqrt());
    }
    let displacement = if bn > 0.0 { (mean_a / C64::from(bn)).norm() } else { 0.0 };
    (p_plus, p_minus, displacement)
}

pub fn run_cat_protocol(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.protocol != Protocol::Cat {
        return Err(Error::Config("config does not select cat".into()));
    }
    let ctx = resolve(cfg)?;
    if ctx.eff.epsilon.abs() > 1e-12 * ctx.eff.omega_r.abs() {
        return Err(Error::InvalidArgument(
            "cat preparation requires zero effective splitting (amp_z = 0)".into(),
        ));
    }
    let layout = ctx.layout;
    let horizon = *ctx.grid.last().unwrap();
    let t0 = PI / ctx.eff.omega_r;
    if t0 > horizon + 1e-12 {
        return Err(Error::Config(
            "horizon shorter than the peak-separation time t0 = half a period".into(),
        ));
    }
    let frames = cat_frames(layout);
    let target = cat_target(layout, &ctx.eff, t0)?;
    let interaction = EffectiveInteractionFrame::new(&ctx.eff, layout);
    let psi0 = to_state(layout, frames.initial.clone());
    let h_drive = DriveFrameHamiltonian::new(cfg.params, layout)?;

    // grid index closest to t0 (with an odd sample count over a full
    // period the half-period point is on the grid)
    let g0 = ctx
        .grid
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - t0)
                .abs()
                .partial_cmp(&(b.1 - t0).abs())
                .unwrap()
        })
        .map(|(g, _)| g)
        .unwrap();

    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    let mut summary: Vec<(String, f64)> = Vec::new();
    let mut meta: Vec<(String, String)> = vec![
        ("protocol".into(), "cat".into()),
        ("n_qubits".into(), cfg.params.n_qubits.to_string()),
        ("fock_dim".into(), layout.fock_dim().to_string()),
        ("period".into(), fmt_meta(ctx.period)),
        ("t0".into(), fmt_meta(t0)),
        ("grid_index_t0".into(), g0.to_string()),
    ];

    // comparison map: undo the drive-frame x rotation, then the effective
    // interaction frame, landing in the picture where the closed form lives
    let compare_full = |t: f64, amps: &mut Vec<C64>| {
        h_drive.comparison_rotation(t, false, amps);
        interaction.apply_phases(t, false, amps);
    };

    if cfg.has_mode(DynamicsMode::Effective) {
        let h_eff = EffectiveHamiltonian::new(ctx.eff, layout);
        let traj =
            propagate_schrodinger(&h_eff, &psi0, &ctx.grid, Some(pure_plan(&h_eff, horizon)?))?;
        let mut col = Vec::with_capacity(ctx.grid.len());
        let mut peak = (0.0f64, 0.0f64, 0.0f64);
        for (g, t) in ctx.grid.iter().enumerate() {
            let mut amps: Vec<C64> = traj.states[g].amplitudes().iter().copied().collect();
            interaction.apply_phases(*t, false, &mut amps);
            col.push(inner(&target, &amps).norm_sqr());
            if g == g0 {
                peak = branch_analysis(layout, &frames, &amps);
            }
        }
        summary.push(("F_ideal_t0".into(), col[g0]));
        summary.push(("branch_prob_even".into(), peak.0));
        summary.push(("branch_prob_odd".into(), peak.1));
        summary.push(("peak_displacement".into(), peak.2));
        let dp = displacement_phase(&ctx.eff, ctx.grid[g0])?;
        let nn = cfg.params.n_qubits as f64;
        let exp_term = (-0.5 * nn * nn * dp.beta.norm_sqr()).exp();
        summary.push(("branch_prob_even_analytic".into(), 0.5 * (1.0 + exp_term)));
        summary.push(("branch_prob_odd_analytic".into(), 0.5 * (1.0 - exp_term)));
        summary.push((
            "peak_displacement_analytic".into(),
            nn * ctx.eff.ratio.abs(),
        ));
        meta.push(("dt_ideal".into(), fmt_meta(traj.meta.dt)));
        series.push(("F_ideal".into(), col));
    }

    if cfg.has_mode(DynamicsMode::FullUnitary) {
        let plan = pure_plan(&h_drive, horizon)?;
        let traj = propagate_schrodinger(&h_drive, &psi0, &ctx.grid, Some(plan))?;
        let mut col = Vec::with_capacity(ctx.grid.len());
        for (g, t) in ctx.grid.iter().enumerate() {
            let mut amps: Vec<C64> = traj.states[g].amplitudes().iter().copied().collect();
            compare_full(*t, &mut amps);
            col.push(inner(&target, &amps).norm_sqr());
        }
        summary.push(("F_full_t0".into(), col[g0]));
        meta.push(("dt_full".into(), fmt_meta(traj.meta.dt)));
        series.push(("F_full".into(), col));

        if cfg.convergence_check {
            // halved-step agreement at t0
            let t_peak = ctx.grid[g0];
            let halved = StepPlan { dt: plan.dt / 2.0 };
            let end = crate::dynamics::propagate_to(&h_drive, &psi0, t_peak, Some(halved))?;
            let mut amps: Vec<C64> = end.amplitudes().iter().copied().collect();
            compare_full(t_peak, &mut amps);
            let f_half = inner(&target, &amps).norm_sqr();
            let delta = (f_half - summary.iter().find(|(k, _)| k == "F_full_t0").unwrap().1).abs();
            meta.push(("convergence_delta_step".into(), fmt_meta(delta)));
            if delta >= 1e-3 {
                return Err(Error::AccuracyBudget(format!(
                    "F_full(t0) moved by {delta:.3e} under step halving"
                )));
            }

            // doubled-truncation agreement at t0
            let doubled = layout.with_fock_dim(layout.fock_dim() * 2)?;
            let frames2 = cat_frames(doubled);
            let target2 = cat_target(doubled, &ctx.eff, t0)?;
            let h2 = DriveFrameHamiltonian::new(cfg.params, doubled)?;
            let interaction2 = EffectiveInteractionFrame::new(&ctx.eff, doubled);
            let psi02 = to_state(doubled, frames2.initial.clone());
            let end2 = crate::dynamics::propagate_to(
                &h2,
                &psi02,
                t_peak,
                Some(pure_plan(&h2, horizon)?),
            )?;
            let mut amps2: Vec<C64> = end2.amplitudes().iter().copied().collect();
            h2.comparison_rotation(t_peak, false, &mut amps2);
            interaction2.apply_phases(t_peak, false, &mut amps2);
            let f2 = inner(&target2, &amps2).norm_sqr();
            let delta2 = (f2 - summary.iter().find(|(k, _)| k == "F_full_t0").unwrap().1).abs();
            meta.push(("convergence_delta_fock".into(), fmt_meta(delta2)));
            if delta2 >= 1e-4 {
                return Err(Error::Truncation(format!(
                    "F_full(t0) moved by {delta2:.3e} under fock doubling"
                )));
            }
        }
    }

    if cfg.has_mode(DynamicsMode::FullDissipative) {
        let ch = DampingChannels::from_params(&cfg.params);
        let rotated_targets: Vec<Vec<C64>> = ctx
            .grid
            .iter()
            .map(|t| {
                let mut v = target.clone();
                interaction.apply_phases(*t, true, &mut v);
                h_drive.comparison_rotation(*t, true, &mut v);
                v
            })
            .collect();
        match cfg.engine {
            DissipativeEngine::Dense => {
                let traj = lindblad_evolve_with(
                    &h_drive,
                    &ch,
                    &psi0.to_density_matrix(),
                    &ctx.grid,
                    Some(density_plan(&h_drive, horizon)?),
                )?;
                let mut col = Vec::with_capacity(ctx.grid.len());
                for (g, rho) in traj.states.iter().enumerate() {
                    let tgt = to_state(layout, rotated_targets[g].clone());
                    col.push(state_fidelity_mixed(rho, &tgt)?.clamp(0.0, 1.0 + 1e-9));
                }
                summary.push(("F_diss_t0".into(), col[g0]));
                meta.push(("engine".into(), "dense".into()));
                meta.push(("dt_diss".into(), fmt_meta(traj.meta.dt)));
                series.push(("F_diss".into(), col));
            }
            DissipativeEngine::Mcwf { trajectories, seed } => {
                let obs = |g: usize, y: &[C64]| inner(&rotated_targets[g], y).norm_sqr();
                let s = mcwf_observable_series(
                    &h_drive,
                    &ch,
                    &psi0,
                    &ctx.grid,
                    trajectories,
                    seed,
                    &obs,
                    Some(super::mcwf_plan(&h_drive, horizon)?),
                )?;
                summary.push(("F_diss_t0".into(), s.mean[g0]));
                summary.push(("F_diss_t0_stderr".into(), s.std_error[g0]));
                meta.push(("engine".into(), format!("mcwf({trajectories})")));
                meta.push(("seed".into(), seed.to_string()));
                meta.push(("dt_diss".into(), fmt_meta(s.dt)));
                series.push(("F_diss".into(), s.mean));
            }
        }
    }

    let result = ExperimentResult {
        protocol: Protocol::Cat,
        times: ctx.grid,
        series,
        summary,
        meta,
        warnings: ctx.warnings,
    };
    result.validate()?;
    Ok(result)
}
