//! Open-system machinery: exponential free decay against the analytic law,
//! and the Monte-Carlo unraveling against the dense master equation.
//!
//! ```bash
//! cargo run --example open_system
//! ```

use std::f64::consts::TAU;

use dicke_sim::dynamics::{lindblad_evolve, mcwf_evolve};
use dicke_sim::hilbert::{build_layout, StateVector};
use dicke_sim::model::SystemParams;

fn main() {
    // free qubit: no drives, no coupling, pure decay
    let p = SystemParams {
        n_qubits: 1,
        omega_r: TAU * 10.0,
        epsilon: TAU * 10.0,
        g: 0.0,
        amp_x: 0.0,
        amp_z: 0.0,
        omega_x: TAU * 9.98,
        omega_z: TAU * 1.0,
        gamma: TAU * 0.05e-3,
        kappa: 0.0,
    };
    let layout = build_layout(1, 2).unwrap();
    let excited = StateVector::basis_state(layout, 1, 0);
    let horizon = 3.0 / p.gamma;
    let grid: Vec<f64> = (0..=6).map(|k| horizon * k as f64 / 6.0).collect();

    println!("free-qubit decay vs e^(-gamma t):");
    let dense = lindblad_evolve(&p, layout, &excited.to_density_matrix(), &grid).unwrap();
    for (t, rho) in dense.times.iter().zip(&dense.states) {
        let pop = rho.matrix()[(layout.index(1, 0), layout.index(1, 0))].re;
        let exact = (-p.gamma * t).exp();
        println!(
            "  t = {:>8.1} ns   population {:.8}   analytic {:.8}   |diff| {:.1e}",
            t,
            pop,
            exact,
            (pop - exact).abs()
        );
    }
    println!();

    // trajectory unraveling vs dense master equation at elevated rates
    let mut q = p;
    q.gamma = TAU * 8e-3;
    let grid2: Vec<f64> = (0..=4).map(|k| 25.0 * k as f64 / 4.0).collect();
    let dense2 = lindblad_evolve(&q, layout, &excited.to_density_matrix(), &grid2).unwrap();
    let avg = mcwf_evolve(&q, layout, &excited, &grid2, 800, 7).unwrap();
    println!("monte-carlo unraveling (800 trajectories) vs dense:");
    for g in 0..grid2.len() {
        let pd = dense2.states[g].matrix()[(layout.index(1, 0), layout.index(1, 0))].re;
        let pm = avg.states[g].matrix()[(layout.index(1, 0), layout.index(1, 0))].re;
        println!(
            "  t = {:>5.1} ns   dense {:.5}   mcwf {:.5}   |diff| {:.1e}",
            grid2[g],
            pd,
            pm,
            (pd - pm).abs()
        );
    }
}
