//! Physical parameters and Hamiltonians of the driven qubits-resonator
//! system, the rotating frames connecting them, and the drive-regime
//! validator.
//!
//! Angular frequencies are in rad/ns throughout (2π × value in GHz); time is
//! in ns. The lab-frame Hamiltonian is
//!
//! ```text
//! H(t) = omega_r a^dag a + epsilon J_z + g (a^dag + a) J_x
//!        + amp_z cos(omega_z t) J_z + amp_x cos(omega_x t) J_x
//! ```
//!
//! with collective operators J_alpha = (1/2) sum_k sigma_alpha^k. In the
//! frame co-rotating with the transversal drive carrier, after dropping the
//! 2 omega_x sidebands, this becomes the slow Hamiltonian
//!
//! ```text
//! H'(t) = (omega_r - omega_x) a^dag a
//!         + (epsilon - omega_x + amp_z cos(omega_z t)) J_z
//!         + (amp_x / 2) J_x + (g / 2)(a^dag J_- + a J_+)
//! ```
//!
//! which drives all quantitative protocol runs ([`DriveFrameHamiltonian`]);
//! a second rotation at amp_x/2 about x averages it to the tunable Dicke
//! model [`effective_hamiltonian`].

use nalgebra::{DMatrix, DVector};

use crate::dynamics::HamiltonianProvider;
use crate::hilbert::{
    collective_operator, number_operator, spin_jx, Axis, HilbertLayout, Operator, StateVector,
};
use crate::linalg::expm;
use crate::{C64, Error, Result};

/// Margin ratio treated as "much greater than" (5 with a 1% rounding
/// allowance so a ratio of 4.99 passes).
pub const REGIME_MARGIN: f64 = 4.95;

/// Physical drive, coupling, and dissipation rates. All angular (rad/ns).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub n_qubits: usize,
    /// Resonator frequency omega_r.
    pub omega_r: f64,
    /// Qubit splitting epsilon (uniform across qubits).
    pub epsilon: f64,
    /// Qubit-resonator coupling g (uniform across qubits).
    pub g: f64,
    /// Transversal drive amplitude Omega_x.
    pub amp_x: f64,
    /// Longitudinal drive amplitude Omega_z.
    pub amp_z: f64,
    /// Transversal drive frequency omega_x.
    pub omega_x: f64,
    /// Longitudinal drive frequency omega_z.
    pub omega_z: f64,
    /// Qubit decay rate gamma.
    pub gamma: f64,
    /// Resonator loss rate kappa.
    pub kappa: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 1 {
            return Err(Error::InvalidArgument("n_qubits must be >= 1".into()));
        }
        for (name, v) in [
            ("omega_r", self.omega_r),
            ("epsilon", self.epsilon),
            ("omega_x", self.omega_x),
            ("omega_z", self.omega_z),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("g", self.g),
            ("amp_x", self.amp_x),
            ("amp_z", self.amp_z),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be non-negative"
                )));
            }
        }
        Ok(())
    }

    /// Scale the drive hierarchy (omega_x, omega_z, amp_x) by `factor`,
    /// co-moving omega_r = epsilon so that omega_r - omega_x (and with it
    /// the coupling ratio and the effective model) stay fixed. Probes how
    /// the residual approximation error shrinks with the scale separation.
    pub fn with_margins_scaled(&self, factor: f64) -> SystemParams {
        let detuning = self.omega_r - self.omega_x;
        let omega_x = self.omega_x * factor;
        SystemParams {
            omega_x,
            omega_z: self.omega_z * factor,
            amp_x: self.amp_x * factor,
            omega_r: omega_x + detuning,
            epsilon: omega_x + detuning,
            ..*self
        }
    }
}

/// Derived parameters of the effective Dicke model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveParams {
    /// Effective resonator frequency omega_r - omega_x.
    pub omega_r: f64,
    /// Effective qubit splitting amp_z / 2.
    pub epsilon: f64,
    /// Effective coupling g / 2.
    pub g: f64,
    /// Relative coupling strength g_eff / omega_r_eff.
    pub ratio: f64,
}

impl EffectiveParams {
    /// Period of the effective resonator, 2π/|omega_r_eff|.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_r.abs()
    }
}

/// Effective Dicke-model parameters; fails when the drive is resonant with
/// the resonator (the frame is degenerate and the ratio undefined).
pub fn effective_params(p: &SystemParams) -> Result<EffectiveParams> {
    let detuning = p.omega_r - p.omega_x;
    if detuning == 0.0 {
        return Err(Error::DegenerateFrame);
    }
    let g_eff = p.g / 2.0;
    Ok(EffectiveParams {
        omega_r: detuning,
        epsilon: p.amp_z / 2.0,
        g: g_eff,
        ratio: g_eff / detuning,
    })
}

/// One validated drive-regime condition.
#[derive(Clone, Debug)]
pub struct RegimeCondition {
    pub name: &'static str,
    /// Margin ratio for ">>" conditions; relative deviation for the exact
    /// resonance condition.
    pub margin: f64,
    pub pass: bool,
    /// Hard failures invalidate the effective model outright (protocols
    /// abort); soft failures are warnings.
    pub hard: bool,
}

/// Pass/fail report for the conditions backing the effective model.
#[derive(Clone, Debug)]
pub struct RegimeReport {
    pub conditions: Vec<RegimeCondition>,
}

impl RegimeReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn hard_failure(&self) -> bool {
        self.conditions.iter().any(|c| c.hard && !c.pass)
    }

    pub fn summary(&self) -> String {
        self.conditions
            .iter()
            .map(|c| {
                format!(
                    "{}: margin {:.3} [{}]",
                    c.name,
                    c.margin,
                    if c.pass { "pass" } else { "FAIL" }
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Check the drive hierarchy: Omega_x = 2 omega_z exactly, and
/// omega_x >> Omega_x >> g, omega_z >> Omega_z, omega_z >> |epsilon -
/// omega_x|, with ">>" scored as margin >= [`REGIME_MARGIN`].
pub fn check_regime(p: &SystemParams) -> RegimeReport {
    let mut conditions = Vec::new();

    let scale = p.amp_x.max(2.0 * p.omega_z).max(1e-300);
    let resonance_dev = (p.amp_x - 2.0 * p.omega_z).abs() / scale;
    conditions.push(RegimeCondition {
        name: "amp_x = 2 omega_z",
        margin: resonance_dev,
        pass: resonance_dev <= 1e-9,
        hard: true,
    });

    let ratio = |num: f64, den: f64| if den == 0.0 { f64::INFINITY } else { num / den };
    for (name, margin) in [
        ("omega_x >> amp_x", ratio(p.omega_x, p.amp_x)),
        ("amp_x >> g", ratio(p.amp_x, p.g)),
        ("omega_z >> amp_z", ratio(p.omega_z, p.amp_z)),
        (
            "omega_z >> |epsilon - omega_x|",
            ratio(p.omega_z, (p.epsilon - p.omega_x).abs()),
        ),
    ] {
        conditions.push(RegimeCondition {
            name,
            margin,
            pass: margin >= REGIME_MARGIN,
            hard: margin < 1.0,
        });
    }

    RegimeReport { conditions }
}

/// Lab-frame driven Hamiltonian at time t (dense).
pub fn full_hamiltonian(p: &SystemParams, layout: HilbertLayout, t: f64) -> Result<Operator> {
    if layout.n_qubits() != p.n_qubits {
        return Err(Error::InvalidArgument(format!(
            "layout has {} qubits, params have {}",
            layout.n_qubits(),
            p.n_qubits
        )));
    }
    let jx = collective_operator(layout, Axis::X);
    let jz = collective_operator(layout, Axis::Z);
    let n_op = number_operator(layout);
    let a = crate::hilbert::annihilation(layout);
    let x_quad = &a + &a.dagger();

    let h = n_op.scale(C64::from(p.omega_r))
        + jz.scale(C64::from(p.epsilon + p.amp_z * (p.omega_z * t).cos()))
        + (&x_quad * &jx).scale(C64::from(p.g))
        + jx.scale(C64::from(p.amp_x * (p.omega_x * t).cos()));
    Ok(h)
}

/// Effective Dicke Hamiltonian
/// `omega_r_eff a^dag a + epsilon_eff J_z + g_eff (a + a^dag) J_x` (dense).
pub fn effective_hamiltonian(e: &EffectiveParams, layout: HilbertLayout) -> Operator {
    let jx = collective_operator(layout, Axis::X);
    let jz = collective_operator(layout, Axis::Z);
    let n_op = number_operator(layout);
    let a = crate::hilbert::annihilation(layout);
    let x_quad = &a + &a.dagger();
    n_op.scale(C64::from(e.omega_r))
        + jz.scale(C64::from(e.epsilon))
        + (&x_quad * &jx).scale(C64::from(e.g))
}

/// Effective Hamiltonian in the interaction picture of
/// `epsilon_eff J_z + omega_r_eff a^dag a`:
/// `(g_eff/2)(J_+ e^{i eps t} + J_- e^{-i eps t})(a e^{-i w t} + a^dag e^{i w t})`.
pub fn interaction_picture_hamiltonian(
    e: &EffectiveParams,
    layout: HilbertLayout,
    t: f64,
) -> Operator {
    let jp = collective_operator(layout, Axis::Plus);
    let a = crate::hilbert::annihilation(layout);
    let ad = a.dagger();
    let phase_eps = C64::new(0.0, e.epsilon * t).exp();
    let phase_w = C64::new(0.0, e.omega_r * t).exp();
    let spin = jp.scale(phase_eps * C64::from(0.5));
    let spin = &spin + &spin.dagger();
    let mode = a.scale(phase_w.conj()) + ad.scale(phase_w);
    (&mode * &spin).scale(C64::from(e.g))
}

/// Rotating-frame unitary
/// `U(t) = exp(-i (amp_x/2) J_x t) · exp(-i omega_x (J_z + a^dag a) t)`.
pub fn rotating_frame_unitary(p: &SystemParams, layout: HilbertLayout, t: f64) -> Result<Operator> {
    if layout.n_qubits() != p.n_qubits {
        return Err(Error::InvalidArgument(format!(
            "layout has {} qubits, params have {}",
            layout.n_qubits(),
            p.n_qubits
        )));
    }
    let frame = DriveCarrierFrame::new(*p, layout);
    Ok(frame.unitary_at(t))
}

/// A time-dependent frame U(t) built from exponentials of static
/// generators, providing both the unitary and the analytic drift term K(t)
/// such that the transformed Hamiltonian is `U^dag (H - K) U` (no finite
/// differencing of U).
pub trait FrameProvider {
    fn layout(&self) -> HilbertLayout;
    fn unitary_at(&self, t: f64) -> Operator;
    /// K(t) = i (dU/dt) U^dag, evaluated analytically.
    fn drift_at(&self, t: f64) -> Operator;
}

/// H in the frame of `frame`: `U^dag (H(t) - K(t)) U`.
pub fn transform_frame(
    h: &dyn HamiltonianProvider,
    frame: &dyn FrameProvider,
    t: f64,
) -> Result<Operator> {
    if h.layout() != frame.layout() {
        return Err(Error::LayoutMismatch {
            expected: h.layout(),
            found: frame.layout(),
        });
    }
    let u = frame.unitary_at(t);
    let shifted = h.matrix_at(t) - frame.drift_at(t);
    Ok(&u.dagger() * &(&shifted * &u))
}

/// The trivial frame; `transform_frame` with it returns H unchanged.
pub struct IdentityFrame(pub HilbertLayout);

impl FrameProvider for IdentityFrame {
    fn layout(&self) -> HilbertLayout {
        self.0
    }

    fn unitary_at(&self, _t: f64) -> Operator {
        Operator::identity(self.0)
    }

    fn drift_at(&self, _t: f64) -> Operator {
        Operator::zeros(self.0)
    }
}

/// The adjoint of a frame: transforming by a frame and then by its adjoint
/// recovers the original Hamiltonian.
pub struct AdjointFrame<'a>(pub &'a dyn FrameProvider);

impl FrameProvider for AdjointFrame<'_> {
    fn layout(&self) -> HilbertLayout {
        self.0.layout()
    }

    fn unitary_at(&self, t: f64) -> Operator {
        self.0.unitary_at(t).dagger()
    }

    fn drift_at(&self, t: f64) -> Operator {
        // K' = -U^dag K U
        let u = self.0.unitary_at(t);
        (&u.dagger() * &(&self.0.drift_at(t) * &u)).scale(C64::from(-1.0))
    }
}

/// The two-factor rotating frame
/// `U(t) = exp(-i (amp_x/2) J_x t) · exp(-i omega_x (J_z + a^dag a) t)`,
/// with drift `K = G_A + A G_B A^dag` for the static generators of the two
/// factors.
pub struct DriveCarrierFrame {
    layout: HilbertLayout,
    amp_x: f64,
    omega_x: f64,
    jx: Operator,
    carrier_gen: Operator,
}

impl DriveCarrierFrame {
    pub fn new(p: SystemParams, layout: HilbertLayout) -> Self {
        let jx = collective_operator(layout, Axis::X);
        let carrier_gen = collective_operator(layout, Axis::Z) + number_operator(layout);
        DriveCarrierFrame {
            layout,
            amp_x: p.amp_x,
            omega_x: p.omega_x,
            jx,
            carrier_gen,
        }
    }

    fn x_factor(&self, t: f64) -> Operator {
        self.jx.scale(C64::new(0.0, -0.5 * self.amp_x * t)).expm()
    }

    fn carrier_factor(&self, t: f64) -> Operator {
        // diagonal generator: exponentiate entrywise
        let d = self.layout.total_dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            let gen = self.carrier_gen.matrix()[(i, i)];
            m[(i, i)] = (C64::new(0.0, -self.omega_x * t) * gen).exp();
        }
        Operator::from_matrix(self.layout, m).expect("square by construction")
    }
}

impl FrameProvider for DriveCarrierFrame {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn unitary_at(&self, t: f64) -> Operator {
        &self.x_factor(t) * &self.carrier_factor(t)
    }

    fn drift_at(&self, t: f64) -> Operator {
        let a = self.x_factor(t);
        let rotated = &a * &(&self.carrier_gen * &a.dagger());
        self.jx.scale(C64::from(0.5 * self.amp_x)) + rotated.scale(C64::from(self.omega_x))
    }
}

/// Single-factor interaction frame
/// `U(t) = exp(-i epsilon_eff J_z t - i omega_r_eff a^dag a t)` of the
/// effective model (diagonal).
pub struct EffectiveInteractionFrame {
    layout: HilbertLayout,
    diag: DVector<f64>,
}

impl EffectiveInteractionFrame {
    pub fn new(e: &EffectiveParams, layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        let mut diag = DVector::zeros(d);
        for s in 0..layout.spin_dim() {
            let mz = s.count_ones() as f64 - layout.n_qubits() as f64 / 2.0;
            for n in 0..layout.fock_dim() {
                diag[layout.index(s, n)] = e.epsilon * mz + e.omega_r * n as f64;
            }
        }
        EffectiveInteractionFrame { layout, diag }
    }

    /// Apply U(t) (`forward`) or U(t)^dag to raw amplitudes in place.
    pub fn apply_phases(&self, t: f64, forward: bool, amps: &mut [C64]) {
        let sign = if forward { -1.0 } else { 1.0 };
        for (z, d) in amps.iter_mut().zip(self.diag.iter()) {
            *z *= C64::new(0.0, sign * d * t).exp();
        }
    }
}

impl FrameProvider for EffectiveInteractionFrame {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn unitary_at(&self, t: f64) -> Operator {
        let d = self.layout.total_dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = C64::new(0.0, -self.diag[i] * t).exp();
        }
        Operator::from_matrix(self.layout, m).expect("square by construction")
    }

    fn drift_at(&self, _t: f64) -> Operator {
        let d = self.layout.total_dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = C64::from(self.diag[i]);
        }
        Operator::from_matrix(self.layout, m).expect("square by construction")
    }
}

/// Exact product rotation `exp(-i theta J_x)` applied qubit-by-qubit
/// (the single-qubit factors commute), O(dim) per qubit.
pub fn apply_x_rotation(layout: HilbertLayout, theta: f64, amps: &mut [C64]) {
    let half = theta / 2.0;
    let (c, s) = (half.cos(), half.sin());
    let f = layout.fock_dim();
    for k in 1..=layout.n_qubits() {
        let bit = layout.qubit_bit(k);
        let offset = bit * f;
        for s_idx in 0..layout.spin_dim() {
            if s_idx & bit != 0 {
                continue;
            }
            let base = s_idx * f;
            for n in 0..f {
                let i = base + n;
                let j = i + offset;
                let (lo, hi) = (amps[i], amps[j]);
                amps[i] = lo * c - hi * C64::new(0.0, s);
                amps[j] = hi * c - lo * C64::new(0.0, s);
            }
        }
    }
}

/// Driven Hamiltonian in the transversal-carrier rotating frame with the
/// 2 omega_x sidebands dropped:
///
/// ```text
/// H'(t) = detuning_r a^dag a + (detuning_q + amp_z cos(omega_z t)) J_z
///         + (amp_x/2) J_x + (g/2)(a^dag J_- + a J_+)
/// ```
///
/// This is the frame all quantitative protocol dynamics run in (the carrier
/// at omega_x is orders of magnitude faster than every retained scale, and
/// the dissipators of the master equation are exactly invariant under the
/// carrier rotation). Applies itself to state slices in O(dim · n_qubits)
/// without materializing the matrix.
pub struct DriveFrameHamiltonian {
    layout: HilbertLayout,
    params: SystemParams,
    detuning_r: f64,
    detuning_q: f64,
    mz: Vec<f64>,
    sqrt_n: Vec<f64>,
}

impl DriveFrameHamiltonian {
    pub fn new(p: SystemParams, layout: HilbertLayout) -> Result<Self> {
        if layout.n_qubits() != p.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "layout has {} qubits, params have {}",
                layout.n_qubits(),
                p.n_qubits
            )));
        }
        p.validate()?;
        let mz = (0..layout.spin_dim())
            .map(|s| s.count_ones() as f64 - p.n_qubits as f64 / 2.0)
            .collect();
        let sqrt_n = (0..layout.fock_dim()).map(|n| (n as f64).sqrt()).collect();
        Ok(DriveFrameHamiltonian {
            layout,
            params: p,
            detuning_r: p.omega_r - p.omega_x,
            detuning_q: p.epsilon - p.omega_x,
            mz,
            sqrt_n,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// The residual comparison rotation `exp(-i (amp_x/2) J_x t)` applied to
    /// raw amplitudes (`forward = false` applies the adjoint); composing it
    /// after this frame completes the rotating frame of the driven model.
    pub fn comparison_rotation(&self, t: f64, forward: bool, amps: &mut [C64]) {
        let theta = 0.5 * self.params.amp_x * t * if forward { 1.0 } else { -1.0 };
        apply_x_rotation(self.layout, theta, amps);
    }
}

impl HamiltonianProvider for DriveFrameHamiltonian {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn matrix_at(&self, t: f64) -> Operator {
        let jz_coeff = self.detuning_q + self.params.amp_z * (self.params.omega_z * t).cos();
        let jm = collective_operator(self.layout, Axis::Minus);
        let ad = crate::hilbert::creation(self.layout);
        let jc = &ad * &jm;
        let jc = &jc + &jc.dagger();
        number_operator(self.layout).scale(C64::from(self.detuning_r))
            + collective_operator(self.layout, Axis::Z).scale(C64::from(jz_coeff))
            + collective_operator(self.layout, Axis::X).scale(C64::from(0.5 * self.params.amp_x))
            + jc.scale(C64::from(0.5 * self.params.g))
    }

    fn apply_into(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let f = self.layout.fock_dim();
        let nq = self.layout.n_qubits();
        let jz_coeff = self.detuning_q + self.params.amp_z * (self.params.omega_z * t).cos();
        let cx = 0.25 * self.params.amp_x;
        let half_g = 0.5 * self.params.g;
        for s in 0..self.layout.spin_dim() {
            let diag_spin = jz_coeff * self.mz[s];
            let base = s * f;
            for n in 0..f {
                let i = base + n;
                let mut acc = psi[i] * (self.detuning_r * n as f64 + diag_spin);
                for k in 0..nq {
                    let bit = 1usize << k;
                    let partner = (s ^ bit) * f + n;
                    acc += psi[partner] * cx;
                    if s & bit == 0 {
                        // row has |g> at k: coupled to (|e>, n-1) via a^dag J_-
                        if n > 0 {
                            acc += psi[partner - 1] * (half_g * self.sqrt_n[n]);
                        }
                    } else if n + 1 < f {
                        // row has |e> at k: coupled to (|g>, n+1) via a J_+
                        acc += psi[partner + 1] * (half_g * self.sqrt_n[n + 1]);
                    }
                }
                out[i] = acc;
            }
        }
    }

    fn fastest_drive_frequency(&self) -> f64 {
        if self.params.amp_z > 0.0 {
            self.params.omega_z
        } else {
            0.0
        }
    }

    fn populated_scale(&self) -> f64 {
        let n = self.params.n_qubits as f64;
        let nbar = match effective_params(&self.params) {
            Ok(e) => (n * e.ratio.abs()).powi(2).min(self.layout.fock_dim() as f64),
            Err(_) => self.layout.fock_dim() as f64,
        };
        self.detuning_r.abs() * (nbar + 1.0)
            + (self.detuning_q.abs() + self.params.amp_z) * n / 2.0
            + 0.25 * self.params.amp_x * n
            + 0.5 * self.params.g * (nbar + 1.0).sqrt() * n
    }
}

/// Static effective Dicke Hamiltonian as a structured provider.
pub struct EffectiveHamiltonian {
    layout: HilbertLayout,
    eff: EffectiveParams,
    mz: Vec<f64>,
    sqrt_n: Vec<f64>,
}

impl EffectiveHamiltonian {
    pub fn new(e: EffectiveParams, layout: HilbertLayout) -> Self {
        let mz = (0..layout.spin_dim())
            .map(|s| s.count_ones() as f64 - layout.n_qubits() as f64 / 2.0)
            .collect();
        let sqrt_n = (0..layout.fock_dim()).map(|n| (n as f64).sqrt()).collect();
        EffectiveHamiltonian {
            layout,
            eff: e,
            mz,
            sqrt_n,
        }
    }

    pub fn effective(&self) -> &EffectiveParams {
        &self.eff
    }
}

impl HamiltonianProvider for EffectiveHamiltonian {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn matrix_at(&self, _t: f64) -> Operator {
        effective_hamiltonian(&self.eff, self.layout)
    }

    fn apply_into(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        // g_eff (a + a^dag) J_x couples (s, n) to (s ^ bit, n ± 1) with
        // weight (g_eff / 2) sqrt(n or n+1) per qubit.
        let f = self.layout.fock_dim();
        let nq = self.layout.n_qubits();
        let half_g = 0.5 * self.eff.g;
        for s in 0..self.layout.spin_dim() {
            let diag_spin = self.eff.epsilon * self.mz[s];
            let base = s * f;
            for n in 0..f {
                let i = base + n;
                let mut acc = psi[i] * (self.eff.omega_r * n as f64 + diag_spin);
                for k in 0..nq {
                    let partner = (s ^ (1usize << k)) * f + n;
                    if n > 0 {
                        acc += psi[partner - 1] * (half_g * self.sqrt_n[n]);
                    }
                    if n + 1 < f {
                        acc += psi[partner + 1] * (half_g * self.sqrt_n[n + 1]);
                    }
                }
                out[i] = acc;
            }
        }
    }

    fn populated_scale(&self) -> f64 {
        let n = self.layout.n_qubits() as f64;
        let nbar = (n * self.eff.ratio.abs())
            .powi(2)
            .min(self.layout.fock_dim() as f64);
        self.eff.omega_r.abs() * (nbar + 1.0)
            + self.eff.epsilon.abs() * n / 2.0
            + self.eff.g.abs() * (nbar + 1.0).sqrt() * n
    }
}

/// Lab-frame Hamiltonian as a (dense) provider, for frame tests and small
/// oracles. Not suitable for long propagation at realistic carrier
/// frequencies.
pub struct LabFrameHamiltonian {
    layout: HilbertLayout,
    params: SystemParams,
}

impl LabFrameHamiltonian {
    pub fn new(p: SystemParams, layout: HilbertLayout) -> Result<Self> {
        p.validate()?;
        if layout.n_qubits() != p.n_qubits {
            return Err(Error::InvalidArgument(
                "layout / params qubit count mismatch".into(),
            ));
        }
        Ok(LabFrameHamiltonian { layout, params: p })
    }
}

impl HamiltonianProvider for LabFrameHamiltonian {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn matrix_at(&self, t: f64) -> Operator {
        full_hamiltonian(&self.params, self.layout, t).expect("layout checked at construction")
    }

    fn fastest_drive_frequency(&self) -> f64 {
        self.params.omega_x.max(self.params.omega_z)
    }

    fn populated_scale(&self) -> f64 {
        self.params.omega_r * self.layout.fock_dim() as f64
            + self.params.epsilon * self.params.n_qubits as f64 / 2.0
    }
}

/// Parity operator exp(i pi (a^dag a + J_z + N/2)); commutes with the
/// effective Hamiltonian.
pub fn parity_operator(layout: HilbertLayout) -> Operator {
    let d = layout.total_dim();
    let mut m = DMatrix::zeros(d, d);
    for s in 0..layout.spin_dim() {
        let excitations = s.count_ones() as usize;
        for n in 0..layout.fock_dim() {
            let sign = if (n + excitations) % 2 == 0 { 1.0 } else { -1.0 };
            m[(layout.index(s, n), layout.index(s, n))] = C64::from(sign);
        }
    }
    Operator::from_matrix(layout, m).expect("square by construction")
}

/// Dense `exp(-i theta J_x)` (identity on the boson factor); used where a
/// matrix rather than an in-place application is needed.
pub fn x_rotation_operator(layout: HilbertLayout, theta: f64) -> Operator {
    let spin = spin_jx(layout.n_qubits());
    let rot = expm(&(spin * C64::new(0.0, -theta)));
    let eye = DMatrix::<C64>::identity(layout.fock_dim(), layout.fock_dim());
    Operator::from_matrix(layout, rot.kronecker(&eye)).expect("square by construction")
}

/// Effective Hamiltonian in the interaction picture of its own diagonal
/// part (the time-dependent form behind [`interaction_picture_hamiltonian`])
/// as a structured provider, O(dim · n_qubits) per application.
pub struct InteractionPictureHamiltonian {
    layout: HilbertLayout,
    eff: EffectiveParams,
    sqrt_n: Vec<f64>,
}

impl InteractionPictureHamiltonian {
    pub fn new(e: EffectiveParams, layout: HilbertLayout) -> Self {
        let sqrt_n = (0..layout.fock_dim()).map(|n| (n as f64).sqrt()).collect();
        InteractionPictureHamiltonian {
            layout,
            eff: e,
            sqrt_n,
        }
    }
}

impl HamiltonianProvider for InteractionPictureHamiltonian {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn matrix_at(&self, t: f64) -> Operator {
        interaction_picture_hamiltonian(&self.eff, self.layout, t)
    }

    fn apply_into(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        // (g/2)(J+ e^{i eps t} + J- e^{-i eps t})(a e^{-i w t} + a^dag e^{i w t}):
        // row (s, n) receives from (s ^ bit, n ± 1); the spin-raising branch
        // (row excited at k) carries e^{i eps t}, the lowering branch its
        // conjugate; a^dag carries e^{i w t}.
        let f = self.layout.fock_dim();
        let nq = self.layout.n_qubits();
        let half_g = 0.5 * self.eff.g;
        let c_eps = C64::new(0.0, self.eff.epsilon * t).exp();
        let c_w = C64::new(0.0, self.eff.omega_r * t).exp();
        // row excited at k: J+ branch with e^{+i eps t}; ground: J- with the
        // conjugate. The boson parts carry e^{+i w t} (from a^dag, partner
        // n-1) and e^{-i w t} (from a, partner n+1) in both branches.
        let exc = (c_eps * c_w, c_eps * c_w.conj());
        let gnd = (c_eps.conj() * c_w, c_eps.conj() * c_w.conj());
        for s in 0..self.layout.spin_dim() {
            let base = s * f;
            for n in 0..f {
                let i = base + n;
                let mut acc = C64::from(0.0);
                for k in 0..nq {
                    let bit = 1usize << k;
                    let partner = (s ^ bit) * f + n;
                    let (phase_minus, phase_plus) = if s & bit != 0 { exc } else { gnd };
                    // a^dag: from (.., n-1) with sqrt(n) e^{i w t}
                    if n > 0 {
                        acc += psi[partner - 1] * (phase_minus * (half_g * self.sqrt_n[n]));
                    }
                    // a: from (.., n+1) with sqrt(n+1) e^{-i w t}
                    if n + 1 < f {
                        acc += psi[partner + 1] * (phase_plus * (half_g * self.sqrt_n[n + 1]));
                    }
                }
                out[i] = acc;
            }
        }
    }

    fn fastest_drive_frequency(&self) -> f64 {
        self.eff.omega_r.abs() + self.eff.epsilon.abs()
    }

    fn populated_scale(&self) -> f64 {
        let n = self.layout.n_qubits() as f64;
        let nbar = (n * self.eff.ratio.abs())
            .powi(2)
            .min(self.layout.fock_dim() as f64);
        self.eff.g.abs() * (nbar + 1.0).sqrt() * n + self.eff.epsilon.abs() * n / 2.0
    }
}

/// Driven Hamiltonian in the toggling frame that additionally co-rotates
/// with the resonant (amp_x/2) J_x term of the drive frame:
///
/// ```text
/// H''(t) = detuning_r a^dag a
///          + (detuning_q + amp_z cos(omega_z t))(cos(theta) J_z + sin(theta) J_y)
///          + (g/2)[a^dag (J_x - i cos(theta) J_y + i sin(theta) J_z) + h.c.],
/// theta = (amp_x / 2) t.
/// ```
///
/// Identical physics to [`DriveFrameHamiltonian`] (related by the exact
/// rotation exp(-i (amp_x/2) J_x t)), but with the large static J_x term
/// removed from the spectrum, which lets closed-system runs take much
/// larger steps. States in this frame compare directly against effective
/// dynamics (no residual rotation). Dissipators are *not* invariant here,
/// so this frame is for unitary propagation only.
pub struct TogglingFrameHamiltonian {
    layout: HilbertLayout,
    params: SystemParams,
    detuning_r: f64,
    detuning_q: f64,
    mz: Vec<f64>,
    sqrt_n: Vec<f64>,
}

impl TogglingFrameHamiltonian {
    pub fn new(p: SystemParams, layout: HilbertLayout) -> Result<Self> {
        if layout.n_qubits() != p.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "layout has {} qubits, params have {}",
                layout.n_qubits(),
                p.n_qubits
            )));
        }
        p.validate()?;
        let mz = (0..layout.spin_dim())
            .map(|s| s.count_ones() as f64 - p.n_qubits as f64 / 2.0)
            .collect();
        let sqrt_n = (0..layout.fock_dim()).map(|n| (n as f64).sqrt()).collect();
        Ok(TogglingFrameHamiltonian {
            layout,
            params: p,
            detuning_r: p.omega_r - p.omega_x,
            detuning_q: p.epsilon - p.omega_x,
            mz,
            sqrt_n,
        })
    }
}

impl HamiltonianProvider for TogglingFrameHamiltonian {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn matrix_at(&self, t: f64) -> Operator {
        // U2^dag(t) H'(t) U2(t) - (amp_x/2) J_x via the dense rotation
        let drive = DriveFrameHamiltonian::new(self.params, self.layout)
            .expect("validated at construction");
        let u2 = x_rotation_operator(self.layout, 0.5 * self.params.amp_x * t);
        let jx = collective_operator(self.layout, Axis::X);
        let rotated = &u2.dagger() * &(&drive.matrix_at(t) * &u2);
        rotated - jx.scale(C64::from(0.5 * self.params.amp_x))
    }

    fn apply_into(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let f = self.layout.fock_dim();
        let nq = self.layout.n_qubits();
        let cz = self.detuning_q + self.params.amp_z * (self.params.omega_z * t).cos();
        let theta = 0.5 * self.params.amp_x * t;
        let (sin_t, cos_t) = theta.sin_cos();
        let half = 0.5 * theta;
        let sin2h = half.sin().powi(2);
        let cos2h = half.cos().powi(2);
        let half_g = 0.5 * self.params.g;
        let jy_up = C64::new(0.0, -0.5 * cz * sin_t); // row excited at k
        let jy_dn = C64::new(0.0, 0.5 * cz * sin_t);
        for s in 0..self.layout.spin_dim() {
            let mzs = self.mz[s];
            let diag = cz * cos_t * mzs;
            // spin-diagonal boson shifts: (g/2) i sin(theta) m_z (a^dag - a)
            let shift = C64::new(0.0, half_g * sin_t * mzs);
            let base = s * f;
            for n in 0..f {
                let i = base + n;
                let mut acc = psi[i] * (self.detuning_r * n as f64 + diag);
                if n > 0 {
                    acc += psi[i - 1] * (shift * self.sqrt_n[n]);
                }
                if n + 1 < f {
                    acc -= psi[i + 1] * (shift * self.sqrt_n[n + 1]);
                }
                for k in 0..nq {
                    let bit = 1usize << k;
                    let partner = (s ^ bit) * f + n;
                    let excited = s & bit != 0;
                    acc += psi[partner] * if excited { jy_up } else { jy_dn };
                    let (w_minus, w_plus) = if excited {
                        (sin2h, cos2h)
                    } else {
                        (cos2h, sin2h)
                    };
                    if n > 0 {
                        acc += psi[partner - 1] * (half_g * w_minus * self.sqrt_n[n]);
                    }
                    if n + 1 < f {
                        acc += psi[partner + 1] * (half_g * w_plus * self.sqrt_n[n + 1]);
                    }
                }
                out[i] = acc;
            }
        }
    }

    fn fastest_drive_frequency(&self) -> f64 {
        // coefficients oscillate at amp_x (through sin^2(theta/2)) and at
        // omega_z when the longitudinal drive is on
        self.params.amp_x.max(if self.params.amp_z > 0.0 {
            self.params.omega_z
        } else {
            0.0
        })
    }

    fn populated_scale(&self) -> f64 {
        let n = self.params.n_qubits as f64;
        let nbar = match effective_params(&self.params) {
            Ok(e) => (n * e.ratio.abs()).powi(2).min(self.layout.fock_dim() as f64),
            Err(_) => self.layout.fock_dim() as f64,
        };
        self.detuning_r.abs() * (nbar + 1.0)
            + (self.detuning_q.abs() + self.params.amp_z) * n / 2.0
            + 0.5 * self.params.g * (nbar + 1.0).sqrt() * n
    }
}

/// Initial product state |gg...g> ⊗ |0>.
pub fn ground_state(layout: HilbertLayout) -> StateVector {
    StateVector::ground(layout)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dynamics::FnProvider;
    use crate::hilbert::build_layout;
    use std::f64::consts::TAU;

    pub(crate) fn baseline(n: usize) -> SystemParams {
        SystemParams {
            n_qubits: n,
            omega_r: TAU * 10.0,
            epsilon: TAU * 10.0,
            g: TAU * 0.02,
            amp_x: TAU * 2.0,
            amp_z: 0.0,
            omega_x: TAU * 9.98,
            omega_z: TAU * 1.0,
            gamma: TAU * 0.05e-3,
            kappa: TAU * 0.012e-3,
        }
    }

    #[test]
    fn effective_params_values() {
        let p = baseline(2);
        let e = effective_params(&p).unwrap();
        assert!((e.ratio - 0.5).abs() < 1e-12);
        assert!((e.epsilon - 0.0).abs() < 1e-15);
        assert!((e.omega_r - TAU * 0.02).abs() < 1e-10);
        assert!((e.g - TAU * 0.01).abs() < 1e-12);

        // omega_x = 0.999 omega_r, g = 0.002 omega_r -> ratio 1
        let mut p2 = baseline(2);
        p2.omega_x = 0.999 * p2.omega_r;
        p2.g = 0.002 * p2.omega_r;
        assert!((effective_params(&p2).unwrap().ratio - 1.0).abs() < 1e-9);

        let mut p3 = baseline(2);
        p3.g = 0.0;
        let e3 = effective_params(&p3).unwrap();
        assert_eq!(e3.g, 0.0);
        assert_eq!(e3.ratio, 0.0);

        let mut p4 = baseline(2);
        p4.omega_x = p4.omega_r;
        assert!(matches!(effective_params(&p4), Err(Error::DegenerateFrame)));
    }

    #[test]
    fn regime_report_baseline_passes() {
        let report = check_regime(&baseline(2));
        assert!(report.all_pass(), "{}", report.summary());
        assert!((report.conditions[1].margin - 4.99).abs() < 1e-9);
        assert!((report.conditions[4].margin - 50.0).abs() < 1e-6);
    }

    #[test]
    fn regime_report_failures() {
        let mut p = baseline(2);
        p.omega_z = p.amp_x; // breaks amp_x = 2 omega_z
        let report = check_regime(&p);
        assert!(!report.conditions[0].pass);
        assert!(report.hard_failure());

        let mut p = baseline(2);
        p.g = 2.0 * p.amp_x; // g > amp_x
        let report = check_regime(&p);
        assert!(!report.conditions[2].pass);
        assert!(report.hard_failure());
    }

    #[test]
    fn full_hamiltonian_structure() {
        let p = baseline(1);
        let layout = build_layout(1, 6).unwrap();
        let h = full_hamiltonian(&p, layout, 0.37).unwrap();
        assert!(h.hermiticity_deviation() < 1e-12);

        // free case: diagonal with omega_r n + epsilon m_z
        let mut free = p;
        free.g = 0.0;
        free.amp_x = 0.0;
        free.amp_z = 0.0;
        let hf = full_hamiltonian(&free, layout, 1.23).unwrap();
        for s in 0..2 {
            for n in 0..6 {
                let idx = layout.index(s, n);
                let expect = free.omega_r * n as f64 + free.epsilon * (s as f64 - 0.5);
                assert!((hf.matrix()[(idx, idx)] - C64::from(expect)).norm() < 1e-9);
            }
        }

        // <e,0| H_int |g,1> = g/2 for N = 1
        let h0 = full_hamiltonian(&p, layout, 0.0).unwrap();
        let hint = h0.matrix()[(layout.index(1, 0), layout.index(0, 1))];
        assert!((hint - C64::from(p.g / 2.0)).norm() < 1e-12);

        // periodicity: amp_z = 0 means H(t) = H(t + 2 pi / omega_x)
        let t = 0.7311;
        let h1 = full_hamiltonian(&p, layout, t).unwrap();
        let h2 = full_hamiltonian(&p, layout, t + TAU / p.omega_x).unwrap();
        assert!((h1.matrix() - h2.matrix()).norm() < 1e-9 * h1.matrix().norm());
    }

    #[test]
    fn full_hamiltonian_matches_hand_built_rabi() {
        // amp_x = amp_z = 0, N = 1: the single-qubit Rabi Hamiltonian
        let mut p = baseline(1);
        p.amp_x = 0.0;
        p.amp_z = 0.0;
        let f = 5;
        let layout = build_layout(1, f).unwrap();
        let h = full_hamiltonian(&p, layout, 2.2).unwrap();
        let d = layout.total_dim();
        let mut expect = DMatrix::<C64>::zeros(d, d);
        for s in 0..2usize {
            let mz = s as f64 - 0.5;
            for n in 0..f {
                let i = layout.index(s, n);
                expect[(i, i)] = C64::from(p.omega_r * n as f64 + p.epsilon * mz);
                // g (a + a^dag) J_x with J_x = sigma_x / 2
                if n + 1 < f {
                    let v = C64::from(p.g * 0.5 * ((n + 1) as f64).sqrt());
                    expect[(layout.index(1 - s, n + 1), i)] = v;
                    expect[(layout.index(1 - s, n), layout.index(s, n + 1))] = v;
                }
            }
        }
        assert!((h.matrix() - &expect).norm() < 1e-12);
    }

    #[test]
    fn effective_hamiltonian_properties() {
        let layout = build_layout(2, 8).unwrap();
        let e = EffectiveParams {
            omega_r: TAU * 0.02,
            epsilon: 0.0,
            g: TAU * 0.01,
            ratio: 0.5,
        };
        let h = effective_hamiltonian(&e, layout);
        assert!(h.hermiticity_deviation() < 1e-13);
        // epsilon_eff = 0: commutes with J_x
        let jx = collective_operator(layout, Axis::X);
        assert!((&h * &jx - &jx * &h).frobenius_norm() < 1e-12);
        // commutes with the parity operator
        let par = parity_operator(layout);
        assert!((&h * &par - &par * &h).frobenius_norm() < 1e-10);

        // g = 0, eps = 0: eigenvalues are omega_r_eff * n with spin degeneracy
        let e0 = EffectiveParams {
            omega_r: TAU * 0.02,
            epsilon: 0.0,
            g: 0.0,
            ratio: 0.0,
        };
        let h0 = effective_hamiltonian(&e0, layout);
        let evals = crate::linalg::hermitian_eigenvalues(h0.matrix());
        for (i, v) in evals.iter().enumerate() {
            let n = i / layout.spin_dim();
            assert!((v - e0.omega_r * n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn interaction_picture_matches_frame_transform() {
        let layout = build_layout(2, 6).unwrap();
        let e = EffectiveParams {
            omega_r: TAU * 0.02,
            epsilon: TAU * 0.002,
            g: TAU * 0.01,
            ratio: 0.5,
        };
        // t = 0, eps = 0 reduces to g (a + a^dag) J_x
        let e0 = EffectiveParams { epsilon: 0.0, ..e };
        let h0 = interaction_picture_hamiltonian(&e0, layout, 0.0);
        let jx = collective_operator(layout, Axis::X);
        let a = crate::hilbert::annihilation(layout);
        let quad = &a + &a.dagger();
        let expect = (&quad * &jx).scale(C64::from(e0.g));
        assert!((h0.matrix() - expect.matrix()).norm() < 1e-12);

        // periodic when eps = 0
        let t = 0.917;
        let period = TAU / e0.omega_r.abs();
        let h1 = interaction_picture_hamiltonian(&e0, layout, t);
        let h2 = interaction_picture_hamiltonian(&e0, layout, t + period);
        assert!((h1.matrix() - h2.matrix()).norm() < 1e-12 * h1.matrix().norm());

        // cross-check against transform_frame with the analytic frame
        let frame = EffectiveInteractionFrame::new(&e, layout);
        let static_h = effective_hamiltonian(&e, layout);
        let provider = FnProvider::new(layout, move |_t| static_h.clone());
        for t in [0.0, 3.3, 41.7] {
            let via_frame = transform_frame(&provider, &frame, t).unwrap();
            let direct = interaction_picture_hamiltonian(&e, layout, t);
            assert!(
                (via_frame.matrix() - direct.matrix()).norm() < 1e-10,
                "t = {t}"
            );
            assert!(direct.hermiticity_deviation() < 1e-10);
        }
    }

    #[test]
    fn rotating_frame_unitary_properties() {
        let p = baseline(2);
        let layout = build_layout(2, 5).unwrap();
        let u0 = rotating_frame_unitary(&p, layout, 0.0).unwrap();
        assert!((u0.matrix() - Operator::identity(layout).matrix()).norm() < 1e-12);
        for t in [0.013, 0.47, 3.9] {
            let u = rotating_frame_unitary(&p, layout, t).unwrap();
            assert!(u.unitarity_deviation() < 1e-10, "t = {t}");
            // order check against a two-factor oracle product
            let jx = collective_operator(layout, Axis::X);
            let gen_b = collective_operator(layout, Axis::Z) + number_operator(layout);
            let f1 = jx.scale(C64::new(0.0, -0.5 * p.amp_x * t)).expm();
            let f2 = gen_b.scale(C64::new(0.0, -p.omega_x * t)).expm();
            let oracle = &f1 * &f2;
            assert!((u.matrix() - oracle.matrix()).norm() < 1e-9, "t = {t}");
            let reversed = &f2 * &f1;
            assert!(
                (u.matrix() - reversed.matrix()).norm() > 1e-6,
                "factors should not commute at t = {t}"
            );
        }
    }

    #[test]
    fn frame_round_trip() {
        let p = baseline(2);
        let layout = build_layout(2, 4).unwrap();
        let lab = LabFrameHamiltonian::new(p, layout).unwrap();
        let frame = DriveCarrierFrame::new(p, layout);
        for t in [0.0, 0.21, 1.83] {
            let transformed = transform_frame(&lab, &frame, t).unwrap();
            assert!(transformed.hermiticity_deviation() < 1e-10);
            let back_provider = FnProvider::new(layout, {
                let lab = LabFrameHamiltonian::new(p, layout).unwrap();
                let frame = DriveCarrierFrame::new(p, layout);
                move |tt| transform_frame(&lab, &frame, tt).unwrap()
            });
            let adjoint = AdjointFrame(&frame);
            let recovered = transform_frame(&back_provider, &adjoint, t).unwrap();
            let original = lab.matrix_at(t);
            assert!(
                (recovered.matrix() - original.matrix()).norm()
                    < 1e-10 * original.matrix().norm().max(1.0),
                "t = {t}"
            );
        }
        // identity frame leaves H unchanged
        let id = IdentityFrame(layout);
        let h = transform_frame(&lab, &id, 0.4).unwrap();
        assert!((h.matrix() - lab.matrix_at(0.4).matrix()).norm() < 1e-13);
    }

    #[test]
    fn drive_frame_apply_matches_matrix() {
        for (n, f) in [(1usize, 5usize), (2, 7), (3, 4)] {
            let mut p = baseline(n);
            p.amp_z = TAU * 0.04; // exercise the time-dependent term
            let layout = build_layout(n, f).unwrap();
            let h = DriveFrameHamiltonian::new(p, layout).unwrap();
            let t = 0.83;
            let dense = h.matrix_at(t);
            assert!(dense.hermiticity_deviation() < 1e-12);
            let d = layout.total_dim();
            let mut rng_state = 42u64;
            let mut next = || {
                rng_state = rng_state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((rng_state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            };
            let psi: Vec<C64> = (0..d).map(|_| C64::new(next(), next())).collect();
            let mut out = vec![C64::from(0.0); d];
            h.apply_into(t, &psi, &mut out);
            let psi_v = DVector::from_vec(psi);
            let expect = dense.matrix() * &psi_v;
            let dev: f64 = out
                .iter()
                .zip(expect.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(dev < 1e-12 * expect.norm().max(1.0), "N={n} F={f}");
        }
    }

    #[test]
    fn effective_apply_matches_matrix() {
        let layout = build_layout(2, 9).unwrap();
        let e = EffectiveParams {
            omega_r: TAU * 0.02,
            epsilon: TAU * 0.003,
            g: TAU * 0.01,
            ratio: 0.5,
        };
        let h = EffectiveHamiltonian::new(e, layout);
        let dense = h.matrix_at(0.0);
        let d = layout.total_dim();
        let psi: Vec<C64> = (0..d)
            .map(|i| C64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let mut out = vec![C64::from(0.0); d];
        h.apply_into(0.0, &psi, &mut out);
        let expect = dense.matrix() * &DVector::from_vec(psi);
        let dev: f64 = out
            .iter()
            .zip(expect.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(dev < 1e-12 * expect.norm());
    }

    #[test]
    fn margin_scaling_preserves_effective_model() {
        let p = baseline(2);
        let scaled = p.with_margins_scaled(5.0);
        let e0 = effective_params(&p).unwrap();
        let e1 = effective_params(&scaled).unwrap();
        assert!((e0.omega_r - e1.omega_r).abs() < 1e-9);
        assert!((e0.ratio - e1.ratio).abs() < 1e-12);
        assert!((e0.epsilon - e1.epsilon).abs() < 1e-15);
        let r0 = check_regime(&p);
        let r1 = check_regime(&scaled);
        assert!(r1.conditions[0].pass);
        assert!(r1.conditions[2].margin > 4.0 * r0.conditions[2].margin);
        assert!(r1.conditions[4].margin > 4.0 * r0.conditions[4].margin);
    }

    #[test]
    fn interaction_picture_apply_matches_matrix() {
        let layout = build_layout(2, 7).unwrap();
        let e = EffectiveParams {
            omega_r: TAU * 0.02,
            epsilon: TAU * 0.002,
            g: TAU * 0.01,
            ratio: 0.5,
        };
        let h = InteractionPictureHamiltonian::new(e, layout);
        for t in [0.0, 3.7, 26.1] {
            let dense = h.matrix_at(t);
            assert!(dense.hermiticity_deviation() < 1e-12);
            let d = layout.total_dim();
            let psi: Vec<C64> = (0..d)
                .map(|i| C64::new((0.31 * i as f64).sin(), (0.77 * i as f64).cos()))
                .collect();
            let mut out = vec![C64::from(0.0); d];
            h.apply_into(t, &psi, &mut out);
            let expect = dense.matrix() * &DVector::from_vec(psi);
            let dev: f64 = out
                .iter()
                .zip(expect.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(dev < 1e-12 * expect.norm().max(1e-12), "t={t} dev={dev}");
        }
    }

    #[test]
    fn toggling_frame_apply_matches_matrix() {
        for n in [1usize, 2, 3] {
            let mut p = baseline(n);
            p.amp_z = TAU * 0.03;
            let layout = build_layout(n, 5).unwrap();
            let h = TogglingFrameHamiltonian::new(p, layout).unwrap();
            for t in [0.0, 0.13, 0.81] {
                let dense = h.matrix_at(t);
                assert!(dense.hermiticity_deviation() < 1e-10, "t={t}");
                let d = layout.total_dim();
                let psi: Vec<C64> = (0..d)
                    .map(|i| C64::new((0.5 * i as f64).cos(), (1.1 * i as f64).sin()))
                    .collect();
                let mut out = vec![C64::from(0.0); d];
                h.apply_into(t, &psi, &mut out);
                let expect = dense.matrix() * &DVector::from_vec(psi);
                let dev: f64 = out
                    .iter()
                    .zip(expect.iter())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(dev < 1e-10 * expect.norm().max(1e-12), "N={n} t={t} dev={dev}");
            }
        }
    }

    #[test]
    fn toggling_frame_agrees_with_drive_frame_evolution() {
        // same physics in two frames: U2^dag(t) psi_drive(t) = psi_toggling(t)
        use crate::dynamics::{propagate_to, StepPlan};
        let p = baseline(2);
        let layout = build_layout(2, 8).unwrap();
        let drive = DriveFrameHamiltonian::new(p, layout).unwrap();
        let toggling = TogglingFrameHamiltonian::new(p, layout).unwrap();
        let psi0 = StateVector::ground(layout);
        let t = 2.0;
        let plan = Some(StepPlan { dt: 2.5e-4 });
        let a = propagate_to(&drive, &psi0, t, plan).unwrap();
        let b = propagate_to(&toggling, &psi0, t, plan).unwrap();
        let mut amps: Vec<C64> = a.amplitudes().iter().copied().collect();
        drive.comparison_rotation(t, false, &mut amps);
        let overlap: C64 = amps
            .iter()
            .zip(b.amplitudes().iter())
            .map(|(x, y)| x.conj() * y)
            .sum();
        assert!(overlap.norm() > 1.0 - 1e-9, "overlap {}", overlap.norm());
    }

    #[test]
    fn x_rotation_matches_dense() {
        let layout = build_layout(3, 3).unwrap();
        let theta = 0.77;
        let dense = x_rotation_operator(layout, theta);
        let d = layout.total_dim();
        let mut amps: Vec<C64> = (0..d)
            .map(|i| C64::new((0.3 * i as f64).cos(), (0.9 * i as f64).sin()))
            .collect();
        let expect = dense.matrix() * &DVector::from_vec(amps.clone());
        apply_x_rotation(layout, theta, &mut amps);
        let dev: f64 = amps
            .iter()
            .zip(expect.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(dev < 1e-12 * expect.norm());
    }
}
