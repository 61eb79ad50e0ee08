//! How well does the effective Dicke model track the driven system?
//! Evolve both from |gg...g> ⊗ |0> and compare in the rotating frame.
//!
//! ```bash
//! cargo run --example fidelity_scan
//! ```

use std::f64::consts::TAU;

use dicke_sim::model::SystemParams;
use dicke_sim::protocols::{run_fidelity_scan, ExperimentConfig, Protocol};

fn main() {
    // ratio-1/2 operating point; sweeping omega_x tunes the ratio
    let omega_r = TAU * 10.0;
    for (n, frac) in [(2usize, 0.998), (3, 0.998), (2, 0.999)] {
        let p = SystemParams {
            n_qubits: n,
            omega_r,
            epsilon: omega_r,
            g: 0.002 * omega_r,
            amp_x: 0.2 * omega_r,
            amp_z: 0.004 * omega_r,
            omega_x: frac * omega_r,
            omega_z: 0.1 * omega_r,
            gamma: TAU * 0.05e-3,
            kappa: TAU * 0.012e-3,
        };
        let mut cfg = ExperimentConfig::new(p, Protocol::FidelityScan);
        cfg.samples = 41;
        let res = run_fidelity_scan(&cfg).expect("scan");
        println!(
            "N = {n}, ratio {:.2}: F(0) = {}, min F = {:.4}, F(T) = {:.4}",
            res.summary_value("coupling_ratio").unwrap(),
            res.series[0].1[0],
            res.summary_value("F_full_min").unwrap(),
            res.summary_value("F_full_end").unwrap(),
        );
    }
    println!();
    println!("larger ratios and more qubits stress the effective model harder");
}
