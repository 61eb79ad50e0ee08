//! Fixed-step classical RK4 kernels and the step-size policy.

use crate::{C64, Error, Result};

/// Hard cap on total steps per run; beyond this the accuracy budget is
/// declared unsatisfiable rather than silently burning hours.
const MAX_TOTAL_STEPS: usize = 1 << 31;

/// Integration plan: one fixed step size for the whole run.
#[derive(Clone, Copy, Debug)]
pub struct StepPlan {
    pub dt: f64,
}

/// Choose a fixed RK4 step.
///
/// Two constraints combine:
/// - the drive-sampling cap `(2π/omega_drive)/40` for the fastest explicit
///   drive frequency (when present), and
/// - the accumulated-phase accuracy budget: the per-step RK4 error for a
///   populated eigenvalue λ is ~(λh)^5/120, so holding the total below
///   `tol` over `horizon` requires h ≤ (120 tol / (λ^5 T))^{1/4}.
pub fn plan_step(
    fastest_drive: f64,
    populated_scale: f64,
    horizon: f64,
    tol: f64,
) -> Result<StepPlan> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let mut dt = horizon / 16.0;
    if fastest_drive > 0.0 {
        dt = dt.min(std::f64::consts::TAU / fastest_drive / 40.0);
    }
    if populated_scale > 0.0 {
        let acc = (120.0 * tol / (populated_scale.powi(5) * horizon)).powf(0.25);
        dt = dt.min(acc);
    }
    let steps = (horizon / dt).ceil() as usize;
    if steps > MAX_TOTAL_STEPS {
        return Err(Error::AccuracyBudget(format!(
            "step {dt:.3e} ns over horizon {horizon:.3} ns needs {steps} steps"
        )));
    }
    Ok(StepPlan { dt })
}

/// Scratch buffers for the vector RK4 kernel.
pub(crate) struct VecButchers {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl VecButchers {
    pub fn new(dim: usize) -> Self {
        let z = vec![C64::from(0.0); dim];
        VecButchers {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

/// One RK4 step for y' = f(t, y) on complex amplitude vectors.
pub(crate) fn rk4_step_vec<F>(rhs: &mut F, t: f64, h: f64, y: &mut [C64], bufs: &mut VecButchers)
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len();
    rhs(t, y, &mut bufs.k1);
    for i in 0..n {
        bufs.tmp[i] = y[i] + bufs.k1[i] * (h / 2.0);
    }
    rhs(t + h / 2.0, &bufs.tmp, &mut bufs.k2);
    for i in 0..n {
        bufs.tmp[i] = y[i] + bufs.k2[i] * (h / 2.0);
    }
    rhs(t + h / 2.0, &bufs.tmp, &mut bufs.k3);
    for i in 0..n {
        bufs.tmp[i] = y[i] + bufs.k3[i] * h;
    }
    rhs(t + h, &bufs.tmp, &mut bufs.k4);
    let w = h / 6.0;
    for i in 0..n {
        y[i] += (bufs.k1[i] + (bufs.k2[i] + bufs.k3[i]) * 2.0 + bufs.k4[i]) * w;
    }
}

/// Walk from `t0` to `t1` in RK4 steps of at most `dt`, calling `after_step`
/// with the exact time reached after each step. Returns the number of steps.
pub(crate) fn march<F, G>(
    rhs: &mut F,
    y: &mut [C64],
    bufs: &mut VecButchers,
    t0: f64,
    t1: f64,
    dt: f64,
    after_step: &mut G,
) -> usize
where
    F: FnMut(f64, &[C64], &mut [C64]),
    G: FnMut(f64, &mut [C64]),
{
    let span = t1 - t0;
    if span <= 0.0 {
        return 0;
    }
    let n = (span / dt).ceil().max(1.0) as usize;
    let h = span / n as f64;
    for k in 0..n {
        let t = t0 + h * k as f64;
        rk4_step_vec(rhs, t, h, y, bufs);
        after_step(t0 + h * (k + 1) as f64, y);
    }
    n
}

pub(crate) fn norm_slice(y: &[C64]) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_matches_exponential_decay() {
        // y' = -y, y(0) = 1
        let mut y = vec![C64::from(1.0)];
        let mut bufs = VecButchers::new(1);
        let mut rhs = |_t: f64, y: &[C64], out: &mut [C64]| {
            out[0] = -y[0];
        };
        march(&mut rhs, &mut y, &mut bufs, 0.0, 2.0, 1e-3, &mut |_, _| {});
        assert!((y[0].re - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        // error against a fine reference shrinks ~16x per step halving
        let run = |dt: f64| {
            let mut y = vec![C64::new(1.0, 0.0)];
            let mut bufs = VecButchers::new(1);
            let mut rhs = |t: f64, y: &[C64], out: &mut [C64]| {
                out[0] = y[0] * C64::new(0.0, -(1.0 + 0.5 * t));
            };
            march(&mut rhs, &mut y, &mut bufs, 0.0, 3.0, dt, &mut |_, _| {});
            y[0]
        };
        // exact: phase = -(t + 0.25 t^2) at t = 3
        let exact = C64::new(0.0, -(3.0 + 0.25 * 9.0)).exp();
        let e1 = (run(0.02) - exact).norm();
        let e2 = (run(0.01) - exact).norm();
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 4.0, "ratio {ratio}");
    }

    #[test]
    fn plan_step_respects_cap_and_budget() {
        let plan = plan_step(std::f64::consts::TAU * 9.98, 0.0, 50.0, 1e-7).unwrap();
        assert!(plan.dt <= (1.0 / 9.98) / 40.0 + 1e-12);
        // a huge populated scale forces a smaller step
        let plan2 = plan_step(std::f64::consts::TAU * 9.98, 1e3, 50.0, 1e-7).unwrap();
        assert!(plan2.dt < plan.dt);
        assert!(plan_step(0.0, 1e12, 1e6, 1e-12).is_err());
    }
}
