//! Composite Hilbert spaces for N qubits coupled to one truncated boson mode,
//! collective spin operators, and the special states used by the protocols.
//!
//! Tensor ordering: qubit 1 is the most significant factor, the boson mode is
//! last. A basis index decomposes as `idx = s * fock_dim + n`, where bit
//! `(n_qubits - k)` of the spin index `s` is qubit k (0 = |g>, 1 = |e>) and
//! `n` is the Fock level. With this ordering sigma_z = |e><e| - |g><g| is
//! diag(-1, +1) on each local factor.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{expm, one_norm};
use crate::{C64, Error, Result};

/// Tensor-product structure: N qubits and one boson mode truncated to
/// `fock_dim` levels.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct HilbertLayout {
    n_qubits: usize,
    fock_dim: usize,
}

/// Construct a layout, rejecting non-positive sizes.
pub fn build_layout(n_qubits: usize, fock_dim: usize) -> Result<HilbertLayout> {
    if n_qubits < 1 {
        return Err(Error::InvalidArgument("n_qubits must be >= 1".into()));
    }
    if fock_dim < 2 {
        return Err(Error::InvalidArgument("fock_dim must be >= 2".into()));
    }
    Ok(HilbertLayout { n_qubits, fock_dim })
}

impl HilbertLayout {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn total_dim(&self) -> usize {
        self.spin_dim() * self.fock_dim
    }

    /// Basis index of spin configuration `s` with `n` photons.
    pub fn index(&self, s: usize, n: usize) -> usize {
        debug_assert!(s < self.spin_dim() && n < self.fock_dim);
        s * self.fock_dim + n
    }

    /// Bit mask selecting qubit k (1-based; qubit 1 most significant).
    pub fn qubit_bit(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.n_qubits);
        1 << (self.n_qubits - k)
    }

    /// Same layout with the boson truncation replaced.
    pub fn with_fock_dim(&self, fock_dim: usize) -> Result<HilbertLayout> {
        build_layout(self.n_qubits, fock_dim)
    }
}

/// Default boson truncation for a protocol exploring coherent amplitudes up
/// to `n_qubits * |coupling ratio|`; re-running with double the value and
/// comparing results is the convergence certificate.
pub fn default_fock_dim(n_qubits: usize, coupling_ratio: f64) -> usize {
    let reach = n_qubits as f64 * coupling_ratio.abs();
    16usize.max((4.0 * reach * reach + 10.0).ceil() as usize)
}

/// Dense operator tagged with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: HilbertLayout,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(layout: HilbertLayout, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != layout.total_dim() || matrix.ncols() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                found: matrix.nrows(),
            });
        }
        Ok(Operator { layout, matrix })
    }

    pub fn identity(layout: HilbertLayout) -> Self {
        Operator {
            layout,
            matrix: DMatrix::identity(layout.total_dim(), layout.total_dim()),
        }
    }

    pub fn zeros(layout: HilbertLayout) -> Self {
        Operator {
            layout,
            matrix: DMatrix::zeros(layout.total_dim(), layout.total_dim()),
        }
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            layout: self.layout,
            matrix: self.matrix.adjoint(),
        }
    }

    /// ||A - A^dag|| / max(||A||, 1) in the Frobenius norm.
    pub fn hermiticity_deviation(&self) -> f64 {
        let dev = (&self.matrix - self.matrix.adjoint()).norm();
        dev / self.matrix.norm().max(1.0)
    }

    /// ||A^dag A - 1|| in the Frobenius norm.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.matrix.nrows();
        (self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(n, n)).norm()
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        check_layout(self.layout, state.layout)?;
        Ok(StateVector {
            layout: self.layout,
            amplitudes: &self.matrix * &state.amplitudes,
        })
    }

    /// U rho U^dag.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_layout(self.layout, rho.layout)?;
        Ok(DensityMatrix {
            layout: self.layout,
            matrix: &self.matrix * &rho.matrix * self.matrix.adjoint(),
        })
    }

    /// exp(self), via scaling-and-squaring.
    pub fn expm(&self) -> Operator {
        Operator {
            layout: self.layout,
            matrix: expm(&self.matrix),
        }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator {
            layout: self.layout,
            matrix: &self.matrix * c,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn one_norm(&self) -> f64 {
        one_norm(&self.matrix)
    }
}

fn check_layout(expected: HilbertLayout, found: HilbertLayout) -> Result<()> {
    if expected != found {
        return Err(Error::LayoutMismatch { expected, found });
    }
    Ok(())
}

macro_rules! op_binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                assert_eq!(self.layout, rhs.layout, "operator layout mismatch");
                Operator {
                    layout: self.layout,
                    matrix: (&self.matrix).$method(&rhs.matrix),
                }
            }
        }
        impl std::ops::$trait for Operator {
            type Output = Operator;
            fn $method(self, rhs: Operator) -> Operator {
                (&self).$method(&rhs)
            }
        }
    };
}

op_binop!(Add, add);
op_binop!(Sub, sub);
op_binop!(Mul, mul);

/// Pure state tagged with its layout; unit norm after construction.
#[derive(Clone, Debug)]
pub struct StateVector {
    layout: HilbertLayout,
    amplitudes: DVector<C64>,
}

impl StateVector {
    /// Normalizes the given amplitudes; rejects the zero vector.
    pub fn from_amplitudes(layout: HilbertLayout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if norm < 1e-14 {
            return Err(Error::InvalidArgument(
                "cannot normalize a (near-)zero state vector".into(),
            ));
        }
        Ok(StateVector {
            layout,
            amplitudes: amplitudes / C64::from(norm),
        })
    }

    /// Product basis state |s> ⊗ |n>.
    pub fn basis_state(layout: HilbertLayout, s: usize, n: usize) -> Self {
        let mut v = DVector::zeros(layout.total_dim());
        v[layout.index(s, n)] = C64::from(1.0);
        StateVector {
            layout,
            amplitudes: v,
        }
    }

    /// |gg...g> ⊗ |0>.
    pub fn ground(layout: HilbertLayout) -> Self {
        Self::basis_state(layout, 0, 0)
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// <self|other>.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_layout(self.layout, other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            layout: self.layout,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Mixed state tagged with its layout.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    layout: HilbertLayout,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10) and unit trace (1e-8). Positivity is an
    /// O(d^3) eigenvalue check left to [`DensityMatrix::min_eigenvalue`].
    pub fn from_matrix(layout: HilbertLayout, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != layout.total_dim() || matrix.ncols() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                found: matrix.nrows(),
            });
        }
        let herm = (&matrix - matrix.adjoint()).norm() / matrix.norm().max(1.0);
        if herm > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "density matrix not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.diagonal().sum();
        if (tr - C64::from(1.0)).norm() > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace {tr} is not 1"
            )));
        }
        Ok(DensityMatrix { layout, matrix })
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diagonal().sum()
    }

    /// Tr[rho^2].
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Smallest eigenvalue (O(d^3); used by validation paths and tests).
    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        crate::linalg::hermitian_eigenvalues(&sym)[0]
    }
}

/// Collective-spin component selector.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
    Squared,
}

/// Spin-factor matrices (dimension 2^N); tensored with the boson identity by
/// the public builders.
pub(crate) fn spin_jx(n_qubits: usize) -> DMatrix<C64> {
    let dim = 1 << n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        for k in 0..n_qubits {
            m[(s ^ (1 << k), s)] += C64::from(0.5);
        }
    }
    m
}

pub(crate) fn spin_jy(n_qubits: usize) -> DMatrix<C64> {
    // sigma_y = [[0, i], [-i, 0]] in (g, e) ordering
    let dim = 1 << n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        for k in 0..n_qubits {
            let bit = 1 << k;
            let coeff = if s & bit == 0 {
                // column has g at k: sigma_y |g> = -i |e>
                C64::new(0.0, -0.5)
            } else {
                C64::new(0.0, 0.5)
            };
            m[(s ^ bit, s)] += coeff;
        }
    }
    m
}

pub(crate) fn spin_jz(n_qubits: usize) -> DMatrix<C64> {
    let dim = 1 << n_qubits;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::from((i.count_ones() as f64) - n_qubits as f64 / 2.0)
        } else {
            C64::from(0.0)
        }
    })
}

fn embed_spin(layout: HilbertLayout, spin: &DMatrix<C64>) -> Operator {
    let eye = DMatrix::<C64>::identity(layout.fock_dim(), layout.fock_dim());
    Operator {
        layout,
        matrix: spin.kronecker(&eye),
    }
}

fn embed_boson(layout: HilbertLayout, boson: &DMatrix<C64>) -> Operator {
    let eye = DMatrix::<C64>::identity(layout.spin_dim(), layout.spin_dim());
    Operator {
        layout,
        matrix: eye.kronecker(boson),
    }
}

/// Collective operator J_alpha = (1/2) sum_k sigma_alpha^k (identity on the
/// boson factor); `Axis::Squared` returns J^2.
pub fn collective_operator(layout: HilbertLayout, axis: Axis) -> Operator {
    let n = layout.n_qubits();
    let spin = match axis {
        Axis::X => spin_jx(n),
        Axis::Y => spin_jy(n),
        Axis::Z => spin_jz(n),
        Axis::Plus => spin_jx(n) + spin_jy(n) * C64::new(0.0, 1.0),
        Axis::Minus => spin_jx(n) - spin_jy(n) * C64::new(0.0, 1.0),
        Axis::Squared => {
            let (jx, jy, jz) = (spin_jx(n), spin_jy(n), spin_jz(n));
            &jx * &jx + &jy * &jy + &jz * &jz
        }
    };
    embed_spin(layout, &spin)
}

/// Annihilation operator on the boson factor (identity on the spins).
pub fn annihilation(layout: HilbertLayout) -> Operator {
    let f = layout.fock_dim();
    let mut a = DMatrix::zeros(f, f);
    for n in 1..f {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    embed_boson(layout, &a)
}

pub fn creation(layout: HilbertLayout) -> Operator {
    annihilation(layout).dagger()
}

/// Photon-number operator a^dag a.
pub fn number_operator(layout: HilbertLayout) -> Operator {
    let f = layout.fock_dim();
    let nmat = DMatrix::from_fn(f, f, |i, j| {
        if i == j {
            C64::from(i as f64)
        } else {
            C64::from(0.0)
        }
    });
    embed_boson(layout, &nmat)
}

/// Lowering operator sigma_k^- = |g><e| on qubit k (1-based).
pub fn qubit_lowering(layout: HilbertLayout, k: usize) -> Operator {
    assert!(k >= 1 && k <= layout.n_qubits(), "qubit index out of range");
    let dim = layout.spin_dim();
    let bit = layout.qubit_bit(k);
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        if s & bit != 0 {
            m[(s ^ bit, s)] = C64::from(1.0);
        }
    }
    embed_spin(layout, &m)
}

/// Spin-factor x-basis ladder |j=N/2, M>_x for M = N/2, N/2-1, ..., -N/2
/// (descending), built by exact lowering from ((|g>+|e>)/sqrt2)^(⊗N) with
/// K- = J_z + i J_y. This fixes every phase: each state has real positive
/// overlap with the ladder by construction, and the resulting expansion
/// coefficients of |N/2, -N/2>_z are real.
pub(crate) fn x_ladder(n_qubits: usize) -> Vec<DVector<C64>> {
    let dim = 1 << n_qubits;
    let j = n_qubits as f64 / 2.0;
    let km = spin_jz(n_qubits) + spin_jy(n_qubits) * C64::new(0.0, 1.0);
    let mut states = Vec::with_capacity(n_qubits + 1);
    let top = DVector::from_element(dim, C64::from(1.0 / (dim as f64).sqrt()));
    states.push(top);
    let mut m = j;
    while m > -j + 0.5 {
        let prev = states.last().unwrap();
        let coeff = (j * (j + 1.0) - m * (m - 1.0)).sqrt();
        states.push(&km * prev / C64::from(coeff));
        m -= 1.0;
    }
    states
}

/// Spin-factor z-basis Dicke state |j=N/2, m>_z: the symmetric superposition
/// of all configurations with m + N/2 excited qubits.
pub(crate) fn z_dicke(n_qubits: usize, m_index: usize) -> DVector<C64> {
    // m_index = number of excitations = m + N/2
    let dim = 1 << n_qubits;
    let mut count = 0usize;
    let mut v = DVector::zeros(dim);
    for s in 0..dim {
        if s.count_ones() as usize == m_index {
            v[s] = C64::from(1.0);
            count += 1;
        }
    }
    v / C64::from((count as f64).sqrt())
}

/// Collective eigenstate |j, m>_axis ⊗ |0> for the maximal multiplet
/// j = N/2 and axis in {x, z}.
pub fn collective_state(layout: HilbertLayout, j: f64, m: f64, axis: Axis) -> Result<StateVector> {
    let n = layout.n_qubits();
    let jmax = n as f64 / 2.0;
    if (j - jmax).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "only the maximal multiplet j = N/2 = {jmax} is supported, got j = {j}"
        )));
    }
    let steps = j - m;
    if m < -j - 1e-12 || m > j + 1e-12 || (steps - steps.round()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "m = {m} is not in the ladder -j..=j for j = {j}"
        )));
    }
    let spin = match axis {
        Axis::Z => z_dicke(n, (m + jmax).round() as usize),
        Axis::X => x_ladder(n)[(jmax - m).round() as usize].clone(),
        _ => {
            return Err(Error::InvalidArgument(
                "collective_state supports axis x or z".into(),
            ))
        }
    };
    let mut v = DVector::zeros(layout.total_dim());
    for s in 0..layout.spin_dim() {
        v[layout.index(s, 0)] = spin[s];
    }
    StateVector::from_amplitudes(layout, v)
}

/// Expansion coefficients C_M of |N/2, -N/2>_z over the x basis,
/// indexed ascending in M = -N/2 ... N/2.
pub fn zbasis_to_xbasis_coefficients(n_qubits: usize) -> Vec<C64> {
    let ladder = x_ladder(n_qubits);
    let gg = z_dicke(n_qubits, 0);
    // ladder index i corresponds to M = N/2 - i; reverse for ascending M
    ladder.iter().rev().map(|xm| xm.dotc(&gg)).collect()
}

/// Whether the truncation comfortably holds a coherent amplitude beta
/// (|beta|^2 <= fock_dim / 4).
pub fn displacement_is_adequate(layout: HilbertLayout, beta: C64) -> bool {
    beta.norm_sqr() <= layout.fock_dim() as f64 / 4.0
}

/// Displacement operator D(beta) = exp(beta a^dag - beta* a), identity on
/// the spin factor. Truncation adequacy is the caller's concern; see
/// [`displacement_is_adequate`].
pub fn displacement_operator(layout: HilbertLayout, beta: C64) -> Operator {
    let f = layout.fock_dim();
    let mut gen = DMatrix::zeros(f, f);
    for n in 1..f {
        let s = (n as f64).sqrt();
        gen[(n, n - 1)] = beta * s;
        gen[(n - 1, n)] = -beta.conj() * s;
    }
    embed_boson(layout, &expm(&gen))
}

/// Coherent amplitudes <n|alpha> on the truncated mode, unnormalized tail
/// ignored (callers renormalize).
pub(crate) fn coherent_amplitudes(fock_dim: usize, alpha: C64) -> DVector<C64> {
    let mut v = DVector::zeros(fock_dim);
    let pref = (-0.5 * alpha.norm_sqr()).exp();
    let mut term = C64::from(pref);
    v[0] = term;
    for n in 1..fock_dim {
        term *= alpha / C64::from((n as f64).sqrt());
        v[n] = term;
    }
    v
}

/// Coherent state |alpha> on the boson factor, spins left in |gg...g>.
pub fn coherent_state(layout: HilbertLayout, alpha: C64) -> StateVector {
    let amps = coherent_amplitudes(layout.fock_dim(), alpha);
    let mut v = DVector::zeros(layout.total_dim());
    for n in 0..layout.fock_dim() {
        v[layout.index(0, n)] = amps[n];
    }
    StateVector::from_amplitudes(layout, v).expect("coherent state is nonzero")
}

/// Even/odd superposition parity for [`cat_state`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CatParity {
    Even,
    Odd,
}

/// Normalized cat state N±(|alpha> ± |-alpha>) on the boson factor, spins
/// left in |gg...g>. The odd cat at alpha = 0 is the zero vector and is
/// rejected.
pub fn cat_state(layout: HilbertLayout, alpha: C64, parity: CatParity) -> Result<StateVector> {
    let plus = coherent_amplitudes(layout.fock_dim(), alpha);
    let minus = coherent_amplitudes(layout.fock_dim(), -alpha);
    let combined = match parity {
        CatParity::Even => plus + minus,
        CatParity::Odd => plus - minus,
    };
    let mut v = DVector::zeros(layout.total_dim());
    for n in 0..layout.fock_dim() {
        v[layout.index(0, n)] = combined[n];
    }
    StateVector::from_amplitudes(layout, v).map_err(|_| {
        Error::InvalidArgument("odd cat state at alpha = 0 is the zero vector".into())
    })
}
