//! Generate the two-qubit entangling gate and score it: entangling power,
//! local equivalence to CNOT, and process fidelity under the driven unitary
//! dynamics. (The dissipative channel takes a few minutes; enable it with
//! `--features`-free arg `diss`.)
//!
//! ```bash
//! cargo run --example gate
//! cargo run --example gate -- diss
//! ```

use std::f64::consts::TAU;

use dicke_sim::model::SystemParams;
use dicke_sim::protocols::{
    run_gate_protocol, DynamicsMode, ExperimentConfig, Protocol,
};

fn main() {
    let with_diss = std::env::args().any(|a| a == "diss");
    let p = SystemParams {
        n_qubits: 2,
        omega_r: TAU * 10.0,
        epsilon: TAU * 10.0,
        g: TAU * 0.02,
        amp_x: TAU * 2.0,
        amp_z: 0.0,
        omega_x: TAU * 9.98,
        omega_z: TAU * 1.0,
        gamma: TAU * 0.05e-3,
        kappa: TAU * 0.012e-3,
    };
    let mut cfg = ExperimentConfig::new(p, Protocol::Gate);
    cfg.modes = vec![DynamicsMode::Effective, DynamicsMode::FullUnitary];
    if with_diss {
        cfg.modes.push(DynamicsMode::FullDissipative);
    }
    cfg.convergence_check = false;
    cfg.samples = 101;

    let res = run_gate_protocol(&cfg).expect("gate protocol");
    for (k, v) in &res.summary {
        println!("{k:<26} = {v:.8}");
    }
    if !with_diss {
        println!("(run with `diss` for the dissipative channel — a few minutes)");
    }
}
