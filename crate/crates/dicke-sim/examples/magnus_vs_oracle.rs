//! Check the closed-form propagator (spin-conditioned displacement times a
//! twisting phase) against a brute-force time-ordered product, on the bulk
//! of an internally padded Fock space.
//!
//! ```bash
//! cargo run --example magnus_vs_oracle
//! ```

use std::f64::consts::TAU;

use dicke_sim::dynamics::{
    displacement_phase, magnus_propagator, time_ordered_block, FnProvider,
};
use dicke_sim::hilbert::build_layout;
use dicke_sim::linalg::spectral_norm;
use dicke_sim::model::{interaction_picture_hamiltonian, EffectiveParams};
use dicke_sim::C64;
use nalgebra::DMatrix;

fn main() {
    let eff = EffectiveParams {
        omega_r: TAU * 0.02,
        epsilon: 0.0,
        g: TAU * 0.01,
        ratio: 0.5,
    };
    let period = eff.period();
    println!("coupling ratio 1/2, period T = {period:.1} ns");
    for frac in [0.25, 0.5, 1.0] {
        let dp = displacement_phase(&eff, frac * period).unwrap();
        println!(
            "t = {:>5.2} T: displacement beta = {:+.4}{:+.4}i, twist phase = {:.4} rad",
            frac, dp.beta.re, dp.beta.im, dp.phase
        );
    }
    println!();

    // two qubits, 10 declared Fock levels inside a 30-level internal pad
    let declared = 10;
    let layout = build_layout(2, 30).unwrap();
    let provider = FnProvider::with_scales(
        layout,
        move |t| interaction_picture_hamiltonian(&eff, layout, t),
        eff.omega_r.abs(),
        eff.g.abs() * 2.0 * (layout.fock_dim() as f64).sqrt() * 2.0,
    );
    let d = layout.total_dim();
    let mut cols = Vec::new();
    for s in 0..layout.spin_dim() {
        for n in 0..declared {
            cols.push(layout.index(s, n));
        }
    }
    let block = DMatrix::<C64>::from_fn(d, cols.len(), |i, j| {
        if i == cols[j] {
            C64::from(1.0)
        } else {
            C64::from(0.0)
        }
    });

    for (frac, steps) in [(0.25, 4000), (0.5, 5000), (1.0, 10000)] {
        let t = frac * period;
        let oracle = time_ordered_block(&provider, t, steps, &block).unwrap();
        let closed = magnus_propagator(&eff, layout, t).unwrap();
        let dev = spectral_norm(&(closed.matrix() * &block - oracle));
        println!(
            "t = {frac:>5.2} T, {steps:>6} oracle steps: max singular value of the difference = {dev:.3e}"
        );
    }
}
