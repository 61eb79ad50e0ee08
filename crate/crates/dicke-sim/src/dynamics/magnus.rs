//! Closed-form propagator of the zero-splitting interaction-picture model:
//! the second-order expansion of the time-ordered exponential terminates,
//! giving a spin-conditioned displacement times a one-axis-twisting phase,
//!
//! ```text
//! U(t) = D(beta(t) J_x) exp(i phi(t) J_x^2),
//! beta(t) = (g/w)(1 - e^{i w t}),  phi(t) = (g/w)^2 (w t - sin w t),
//! ```
//!
//! with w the effective resonator frequency and g the effective coupling.

use crate::hilbert::{spin_jx, HilbertLayout, Operator};
use crate::linalg::expm;
use crate::model::EffectiveParams;
use crate::{C64, Error, Result};

use nalgebra::DMatrix;

/// Conditional displacement amplitude and twisting phase at time t.
#[derive(Clone, Copy, Debug)]
pub struct DisplacementPhase {
    pub beta: C64,
    pub phase: f64,
}

/// Closed-form beta(t), phi(t). Requires a nonzero effective resonator
/// frequency.
pub fn displacement_phase(e: &EffectiveParams, t: f64) -> Result<DisplacementPhase> {
    if e.omega_r == 0.0 {
        return Err(Error::DegenerateFrame);
    }
    let ratio = e.g / e.omega_r;
    let wt = e.omega_r * t;
    let beta = C64::from(ratio) * (C64::from(1.0) - C64::new(0.0, wt).exp());
    let phase = ratio * ratio * (wt - wt.sin());
    Ok(DisplacementPhase { beta, phase })
}

/// The propagator `D(beta J_x) exp(i phi J_x^2)` on the given layout.
/// Rejects nonzero effective splitting (the expansion no longer terminates).
pub fn magnus_propagator(e: &EffectiveParams, layout: HilbertLayout, t: f64) -> Result<Operator> {
    if e.epsilon.abs() > 1e-12 * e.omega_r.abs().max(1e-300) {
        return Err(Error::NonzeroSplitting(e.epsilon));
    }
    let dp = displacement_phase(e, t)?;
    let f = layout.fock_dim();
    let sd = layout.spin_dim();
    let jx = spin_jx(layout.n_qubits());

    // exp(beta a^dag J_x - beta* a J_x): build the full generator and
    // exponentiate (dimensions stay small wherever this is used)
    let mut boson_gen = DMatrix::<C64>::zeros(f, f);
    for n in 1..f {
        let s = (n as f64).sqrt();
        boson_gen[(n, n - 1)] = dp.beta * s;
        boson_gen[(n - 1, n)] = -dp.beta.conj() * s;
    }
    let displacement = expm(&jx.kronecker(&boson_gen));

    let twist = expm(&((&jx * &jx) * C64::new(0.0, dp.phase)));
    let eye_f = DMatrix::<C64>::identity(f, f);
    let twist_full = twist.kronecker(&eye_f);

    debug_assert_eq!(displacement.nrows(), sd * f);
    Operator::from_matrix(layout, displacement * twist_full)
}
