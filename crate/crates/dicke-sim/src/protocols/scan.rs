//! Effective-vs-driven fidelity scan: evolve |gg...g> ⊗ |0> under both the
//! effective Dicke model and the driven model, compare in the rotating
//! frame, and report F(t) over the horizon.
//!
//! Both sides integrate in interaction pictures chosen so the stiff static
//! terms drop out of the spectrum: the driven side in the toggling frame
//! (which already includes the comparison rotation) and the ideal side in
//! the interaction picture of the effective diagonal part.

use super::{
    fmt_meta, inner, pure_plan, resolve, DynamicsMode, ExperimentConfig, ExperimentResult,
    Protocol,
};
use crate::dynamics::propagate_schrodinger;
use crate::hilbert::StateVector;
use crate::model::{EffectiveInteractionFrame, InteractionPictureHamiltonian, TogglingFrameHamiltonian};
use crate::{C64, Error, Result};

pub fn run_fidelity_scan(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.protocol != Protocol::FidelityScan {
        return Err(Error::Config("config does not select the scan".into()));
    }
    if !cfg.has_mode(DynamicsMode::FullUnitary) {
        return Err(Error::Config(
            "the scan compares against the driven unitary mode".into(),
        ));
    }
    let ctx = resolve(cfg)?;
    let layout = ctx.layout;
    let horizon = *ctx.grid.last().unwrap();
    let psi0 = StateVector::ground(layout);

    let h_eff = InteractionPictureHamiltonian::new(ctx.eff, layout);
    let frame = EffectiveInteractionFrame::new(&ctx.eff, layout);
    let ideal = propagate_schrodinger(&h_eff, &psi0, &ctx.grid, Some(pure_plan(&h_eff, horizon)?))?;

    let h_full = TogglingFrameHamiltonian::new(cfg.params, layout)?;
    let full = propagate_schrodinger(&h_full, &psi0, &ctx.grid, Some(pure_plan(&h_full, horizon)?))?;

    // the toggling frame equals the comparison frame; undo the ideal side's
    // interaction picture and overlap
    let mut f_series = Vec::with_capacity(ctx.grid.len());
    for (g, t) in ctx.grid.iter().enumerate() {
        let mut ideal_amps: Vec<C64> = ideal.states[g].amplitudes().iter().copied().collect();
        frame.apply_phases(*t, true, &mut ideal_amps);
        let overlap = inner(&ideal_amps, full.states[g].amplitudes().as_slice());
        f_series.push(overlap.norm_sqr());
    }

    let min_f = f_series.iter().copied().fold(f64::INFINITY, f64::min);
    let end_f = *f_series.last().unwrap();

    let result = ExperimentResult {
        protocol: Protocol::FidelityScan,
        times: ctx.grid.clone(),
        series: vec![("F_full".into(), f_series)],
        summary: vec![
            ("F_full_end".into(), end_f),
            ("F_full_min".into(), min_f),
            ("coupling_ratio".into(), ctx.eff.ratio),
        ],
        meta: vec![
            ("protocol".into(), "scan".into()),
            ("n_qubits".into(), cfg.params.n_qubits.to_string()),
            ("fock_dim".into(), layout.fock_dim().to_string()),
            ("dt_full".into(), fmt_meta(full.meta.dt)),
            ("dt_ideal".into(), fmt_meta(ideal.meta.dt)),
            ("norm_drift_full".into(), fmt_meta(full.meta.norm_drift)),
            ("norm_drift_ideal".into(), fmt_meta(ideal.meta.norm_drift)),
            ("period".into(), fmt_meta(ctx.period)),
            ("convergence_check".into(), "not run (scan)".into()),
        ],
        warnings: ctx.warnings,
    };
    result.validate()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::baseline;

    pub(crate) fn panel_params(n: usize, omega_x_frac: f64) -> crate::model::SystemParams {
        let mut p = baseline(n);
        p.amp_z = 0.004 * p.omega_r;
        p.amp_x = 0.2 * p.omega_r;
        p.omega_z = 0.1 * p.omega_r;
        p.g = 0.002 * p.omega_r;
        p.omega_x = omega_x_frac * p.omega_r;
        p
    }

    #[test]
    fn scan_starts_at_unit_fidelity() {
        let mut cfg = ExperimentConfig::new(panel_params(2, 0.996), Protocol::FidelityScan);
        cfg.samples = 21;
        cfg.horizon_periods = 0.1;
        let res = run_fidelity_scan(&cfg).unwrap();
        assert_eq!(res.series[0].1[0], 1.0, "F(0) is exactly 1");
        assert!(res.summary_value("F_full_min").unwrap() > 0.8);
    }

    #[test]
    fn matches_drive_frame_reference_path() {
        // the toggling-frame scan must agree with a direct drive-frame
        // computation of the same fidelity
        use crate::dynamics::{propagate_schrodinger, StepPlan};
        use crate::model::{effective_params, DriveFrameHamiltonian, EffectiveHamiltonian};

        let p = panel_params(2, 0.996);
        let mut cfg = ExperimentConfig::new(p, Protocol::FidelityScan);
        cfg.samples = 5;
        cfg.horizon_periods = 0.05;
        let res = run_fidelity_scan(&cfg).unwrap();

        let eff = effective_params(&p).unwrap();
        let layout = crate::hilbert::build_layout(
            2,
            crate::hilbert::default_fock_dim(2, eff.ratio),
        )
        .unwrap();
        let psi0 = StateVector::ground(layout);
        let horizon = 0.05 * eff.period();
        let grid: Vec<f64> = (0..5).map(|k| horizon * k as f64 / 4.0).collect();
        let plan = Some(StepPlan { dt: 2.5e-4 });
        let h_eff = EffectiveHamiltonian::new(eff, layout);
        let ideal = propagate_schrodinger(&h_eff, &psi0, &grid, plan).unwrap();
        let h_drive = DriveFrameHamiltonian::new(p, layout).unwrap();
        let full = propagate_schrodinger(&h_drive, &psi0, &grid, plan).unwrap();
        for g in 0..grid.len() {
            let mut amps: Vec<C64> = full.states[g].amplitudes().iter().copied().collect();
            h_drive.comparison_rotation(grid[g], false, &mut amps);
            let f_ref = inner(ideal.states[g].amplitudes().as_slice(), &amps).norm_sqr();
            assert!(
                (f_ref - res.series[0].1[g]).abs() < 1e-7,
                "g={g}: {f_ref} vs {}",
                res.series[0].1[g]
            );
        }
    }

    #[test]
    fn regime_hard_failure_aborts() {
        let mut p = panel_params(2, 0.996);
        p.g = 2.0 * p.amp_x;
        let cfg = ExperimentConfig::new(p, Protocol::FidelityScan);
        assert!(matches!(run_fidelity_scan(&cfg), Err(Error::Regime(_))));
    }
}
