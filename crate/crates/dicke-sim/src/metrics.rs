//! Quality metrics: state fidelities, two-qubit entangling power via
//! operator rearrangement, process fidelity over the Pauli-string basis, and
//! local equivalence to CNOT.

use nalgebra::DMatrix;

use crate::hilbert::{DensityMatrix, StateVector};
use crate::{C64, Error, Result};

/// |<target|psi>|^2.
pub fn state_fidelity(state: &StateVector, target: &StateVector) -> Result<f64> {
    Ok(target.inner(state)?.norm_sqr())
}

/// <target|rho|target>.
pub fn state_fidelity_mixed(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    if rho.layout() != target.layout() {
        return Err(Error::LayoutMismatch {
            expected: rho.layout(),
            found: target.layout(),
        });
    }
    let v = target.amplitudes();
    Ok((v.adjoint() * rho.matrix() * v)[(0, 0)].re)
}

/// Index reshuffle `R(U)_{(i,j),(k,l)} = U_{(i,k),(j,l)}` of an operator on
/// a bipartite space with equal local dimensions. An involution.
pub fn rearrange(u: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let dim = u.nrows();
    if u.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.ncols(),
        });
    }
    let d = (dim as f64).sqrt().round() as usize;
    if d * d != dim {
        return Err(Error::InvalidArgument(format!(
            "rearrange needs a d^2 x d^2 matrix, got {dim} x {dim}"
        )));
    }
    let mut r = DMatrix::zeros(dim, dim);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    r[(i * d + j, k * d + l)] = u[(i * d + k, j * d + l)];
                }
            }
        }
    }
    Ok(r)
}

/// Operator linear entropy `E(U) = 1 - Tr[(R R^dag)^2] / d^4` with R the
/// rearrangement of U.
pub fn operator_linear_entropy(u: &DMatrix<C64>) -> Result<f64> {
    let d4 = (u.nrows() * u.nrows()) as f64;
    let r = rearrange(u)?;
    let m = &r * r.adjoint();
    let tr = (&m * &m).diagonal().sum();
    Ok(1.0 - tr.re / d4)
}

/// The swap operator on two qudits of local dimension d.
pub fn swap_operator(d: usize) -> DMatrix<C64> {
    let mut s = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(i * d + j, j * d + i)] = C64::from(1.0);
        }
    }
    s
}

/// Entangling power
/// `e_p(U) = (d/(d+1))^2 [E(U) + E(U S) - E(S)]` of a two-qubit unitary;
/// 0 for local gates and SWAP, 2/9 at the CNOT class maximum.
pub fn entangling_power(u: &DMatrix<C64>) -> Result<f64> {
    let dim = u.nrows();
    let d = (dim as f64).sqrt().round() as usize;
    if d * d != dim {
        return Err(Error::InvalidArgument(
            "entangling power needs a bipartite operator".into(),
        ));
    }
    let unitary_dev = (u.adjoint() * u - DMatrix::<C64>::identity(dim, dim)).norm();
    if unitary_dev > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "entangling power needs a unitary input (deviation {unitary_dev:.3e})"
        )));
    }
    let s = swap_operator(d);
    let pref = (d as f64 / (d as f64 + 1.0)).powi(2);
    Ok(pref
        * (operator_linear_entropy(u)? + operator_linear_entropy(&(u * &s))?
            - operator_linear_entropy(&s)?))
}

/// Phase-align A against B: the phase theta maximizing Re[e^{-i theta}
/// Tr(B^dag A)], the relative residual ||A - e^{i theta} B|| / ||B||, and
/// whether it is below 1e-8.
pub fn equal_up_to_global_phase(a: &DMatrix<C64>, b: &DMatrix<C64>) -> (bool, f64, f64) {
    let overlap = (b.adjoint() * a).diagonal().sum();
    let theta = overlap.arg();
    let residual = (a - b * C64::new(0.0, theta).exp()).norm() / b.norm().max(1e-300);
    (residual < 1e-8, theta, residual)
}

/// The 16 two-qubit Pauli strings in (I, X, Y, Z) ⊗ (I, X, Y, Z) order,
/// matching the crate's (g, e) local basis ordering.
pub fn pauli_strings() -> Vec<DMatrix<C64>> {
    let id = DMatrix::<C64>::identity(2, 2);
    let sx = DMatrix::from_row_slice(2, 2, &[C64::from(0.0), C64::from(1.0), C64::from(1.0), C64::from(0.0)]);
    let sy = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from(0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
            C64::from(0.0),
        ],
    );
    let sz = DMatrix::from_row_slice(
        2,
        2,
        &[C64::from(-1.0), C64::from(0.0), C64::from(0.0), C64::from(1.0)],
    );
    let singles = [id, sx, sy, sz];
    let mut out = Vec::with_capacity(16);
    for p in &singles {
        for q in &singles {
            out.push(p.kronecker(q));
        }
    }
    out
}

/// Process fidelity `F = (1/d^3) sum_j Tr[U W_j^dag U^dag E(W_j)]` of a
/// channel against the ideal unitary, summed over the unnormalized Pauli
/// strings. The channel is whatever map the caller realizes operationally
/// (simulated conjugation, a master-equation run per basis element, ...).
pub fn process_fidelity(
    channel: &mut dyn FnMut(&DMatrix<C64>) -> Result<DMatrix<C64>>,
    ideal: &DMatrix<C64>,
) -> Result<f64> {
    let d = ideal.nrows();
    let unitary_dev = (ideal.adjoint() * ideal - DMatrix::<C64>::identity(d, d)).norm();
    if unitary_dev > 1e-8 {
        return Err(Error::InvalidArgument(
            "process fidelity needs a unitary ideal".into(),
        ));
    }
    if d != 4 {
        return Err(Error::InvalidArgument(
            "the Pauli-string basis here is two-qubit (d = 4)".into(),
        ));
    }
    let mut total = C64::from(0.0);
    for w in pauli_strings() {
        let ew = channel(&w)?;
        if ew.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: ew.nrows(),
            });
        }
        total += (ideal * w.adjoint() * ideal.adjoint() * ew).diagonal().sum();
    }
    Ok(total.re / (d as f64).powi(3))
}

/// Gate-level analysis reported by the gate protocol.
#[derive(Clone, Debug)]
pub struct GateAnalysis {
    pub entangling_power: f64,
    pub process_fidelity: f64,
    pub cnot_equivalent: bool,
    /// Operator distance to CNOT after the local correction and global-phase
    /// alignment.
    pub residual: f64,
}

/// CNOT (control = qubit 1 active on |e>) in the (g, e) product ordering.
pub fn cnot_matrix() -> DMatrix<C64> {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = C64::from(1.0);
    m[(1, 1)] = C64::from(1.0);
    m[(2, 3)] = C64::from(1.0);
    m[(3, 2)] = C64::from(1.0);
    m
}

/// The fixed local unitaries (u1, u2, u3, u4) for which
/// `CNOT = (u1 ⊗ u2) U (u3 ⊗ u4)` holds (up to a global phase) at the
/// maximally entangling twisting angle.
pub fn cnot_local_unitaries() -> [DMatrix<C64>; 4] {
    let rt = 1.0 / 2f64.sqrt();
    let u1 = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from(rt),
            C64::from(-rt),
            C64::from(-rt),
            C64::from(-rt),
        ],
    );
    let u2 = DMatrix::identity(2, 2);
    let u3 = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from(rt),
            C64::new(0.0, rt),
            C64::from(-rt),
            C64::new(0.0, rt),
        ],
    );
    let u4 = DMatrix::from_row_slice(
        2,
        2,
        &[C64::from(rt), C64::new(0.0, rt), C64::new(0.0, rt), C64::from(rt)],
    );
    [u1, u2, u3, u4]
}

/// Apply the local correction and test equivalence to CNOT.
pub fn cnot_equivalence(gate: &DMatrix<C64>) -> (bool, f64) {
    let [u1, u2, u3, u4] = cnot_local_unitaries();
    let corrected = u1.kronecker(&u2) * gate * u3.kronecker(&u4);
    let (ok, _theta, residual) = equal_up_to_global_phase(&corrected, &cnot_matrix());
    (ok, residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::spin_jx;
    use crate::linalg::expm;

    fn twist_gate(phi: f64) -> DMatrix<C64> {
        let jx = spin_jx(2);
        expm(&((&jx * &jx) * C64::new(0.0, phi)))
    }

    #[test]
    fn fidelity_basics() {
        let layout = crate::hilbert::build_layout(1, 2).unwrap();
        let a = StateVector::basis_state(layout, 0, 0);
        let b = StateVector::basis_state(layout, 1, 0);
        assert!((state_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(state_fidelity(&a, &b).unwrap() < 1e-15);
        // maximally mixed rho against any pure target: 1/D
        let d = layout.total_dim();
        let mixed = DensityMatrix::from_matrix(
            layout,
            DMatrix::identity(d, d) * C64::from(1.0 / d as f64),
        )
        .unwrap();
        assert!((state_fidelity_mixed(&mixed, &a).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rearrange_involution_and_product_rank() {
        let u = twist_gate(0.7);
        let r = rearrange(&u).unwrap();
        let rr = rearrange(&r).unwrap();
        assert!((&rr - &u).norm() < 1e-15);

        // rearranged product operator A ⊗ B has one nonzero singular value
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.3, 0.1),
                C64::new(-0.2, 0.4),
                C64::new(0.9, 0.0),
                C64::new(0.0, -0.5),
            ],
        );
        let b = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.2, 0.2),
                C64::new(0.0, 0.7),
                C64::new(-0.3, 0.0),
            ],
        );
        let prod = a.kronecker(&b);
        let svals = rearrange(&prod).unwrap().singular_values();
        let mut sorted: Vec<f64> = svals.iter().copied().collect();
        sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
        assert!(sorted[0] > 1e-3);
        for s in &sorted[1..] {
            assert!(*s < 1e-12);
        }

        // identity reshuffles to the vectorization outer product; verify
        // against a four-index brute-force loop
        let id = DMatrix::<C64>::identity(4, 4);
        let rid = rearrange(&id).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let direct = id[(i * 2 + k, j * 2 + l)];
                        assert_eq!(rid[(i * 2 + j, k * 2 + l)], direct);
                    }
                }
            }
        }
    }

    #[test]
    fn linear_entropy_paths_agree() {
        // matrix-product path vs an explicit index-loop evaluation of
        // Tr[(R R^dag)^2], on the swap operator
        let s = swap_operator(2);
        let via_matrix = operator_linear_entropy(&s).unwrap();
        let r = rearrange(&s).unwrap();
        let mut tr = C64::from(0.0);
        let n = 4;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        tr += r[(i, j)] * r[(k, j)].conj() * r[(k, l)] * r[(i, l)].conj();
                    }
                }
            }
        }
        let via_loop = 1.0 - tr.re / 16.0;
        assert!((via_matrix - via_loop).abs() < 1e-12);
    }

    #[test]
    fn entangling_power_reference_points() {
        let id = DMatrix::<C64>::identity(4, 4);
        assert!(entangling_power(&id).unwrap().abs() < 1e-14);
        assert!(entangling_power(&swap_operator(2)).unwrap().abs() < 1e-14);
        let cnot = cnot_matrix();
        assert!((entangling_power(&cnot).unwrap() - 2.0 / 9.0).abs() < 1e-12);
        // non-unitary input rejected
        let bad = &id * C64::from(0.9);
        assert!(entangling_power(&bad).is_err());
    }

    #[test]
    fn entangling_power_closed_form_family() {
        for k in 0..=20 {
            let phi = std::f64::consts::PI * k as f64 / 20.0;
            let ep = entangling_power(&twist_gate(phi)).unwrap();
            let expect = 2.0 / 9.0 * phi.sin().powi(2);
            assert!((ep - expect).abs() < 1e-10, "phi={phi}");
        }
    }

    #[test]
    fn entangling_power_local_invariance() {
        // e_p((a ⊗ b) U (c ⊗ d)) = e_p(U) for random local unitaries
        let u = twist_gate(0.9);
        let base = entangling_power(&u).unwrap();
        let mut state = 5u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * std::f64::consts::TAU
        };
        for _ in 0..4 {
            let local = |a: f64, b: f64, c: f64| {
                let (ca, sa) = ((a / 2.0).cos(), (a / 2.0).sin());
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        C64::new(0.0, b).exp() * ca,
                        C64::new(0.0, c).exp() * sa,
                        -C64::new(0.0, -c).exp() * sa,
                        C64::new(0.0, -b).exp() * ca,
                    ],
                )
            };
            let l1 = local(next(), next(), next()).kronecker(&local(next(), next(), next()));
            let l2 = local(next(), next(), next()).kronecker(&local(next(), next(), next()));
            let dressed = &l1 * &u * &l2;
            let ep = entangling_power(&dressed).unwrap();
            assert!((ep - base).abs() < 1e-10);
        }
    }

    #[test]
    fn process_fidelity_reference_channels() {
        let ideal = twist_gate(std::f64::consts::FRAC_PI_2);
        // perfect conjugation channel
        let u = ideal.clone();
        let mut perfect = move |w: &DMatrix<C64>| Ok(&u * w * u.adjoint());
        assert!((process_fidelity(&mut perfect, &ideal).unwrap() - 1.0).abs() < 1e-10);

        // fully depolarizing channel: only the identity element survives
        let mut depol = |w: &DMatrix<C64>| {
            let tr = w.diagonal().sum();
            Ok(DMatrix::identity(4, 4) * (tr / C64::from(4.0)))
        };
        assert!((process_fidelity(&mut depol, &ideal).unwrap() - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn process_fidelity_is_linear_in_the_channel() {
        let ideal = twist_gate(std::f64::consts::FRAC_PI_2);
        let u = ideal.clone();
        let p = 0.3;
        let f_perfect = {
            let u = u.clone();
            process_fidelity(&mut move |w: &DMatrix<C64>| Ok(&u * w * u.adjoint()), &ideal)
                .unwrap()
        };
        let f_depol = process_fidelity(
            &mut |w: &DMatrix<C64>| {
                let tr = w.diagonal().sum();
                Ok(DMatrix::identity(4, 4) * (tr / C64::from(4.0)))
            },
            &ideal,
        )
        .unwrap();
        let f_mix = process_fidelity(
            &mut |w: &DMatrix<C64>| {
                let tr = w.diagonal().sum();
                let depol = DMatrix::identity(4, 4) * (tr / C64::from(4.0));
                Ok(&u * w * u.adjoint() * C64::from(1.0 - p) + depol * C64::from(p))
            },
            &ideal,
        )
        .unwrap();
        assert!((f_mix - ((1.0 - p) * f_perfect + p * f_depol)).abs() < 1e-10);
    }

    #[test]
    fn global_phase_alignment() {
        let u = twist_gate(1.1);
        let shifted = &u * C64::new(0.0, 0.7).exp();
        let (ok, theta, residual) = equal_up_to_global_phase(&shifted, &u);
        assert!(ok);
        assert!((theta - 0.7).abs() < 1e-12);
        assert!(residual < 1e-13);

        let id = DMatrix::<C64>::identity(2, 2);
        let sx = DMatrix::from_row_slice(
            2,
            2,
            &[C64::from(0.0), C64::from(1.0), C64::from(1.0), C64::from(0.0)],
        );
        let (ok, _, _) = equal_up_to_global_phase(&id, &sx);
        assert!(!ok);
    }

    #[test]
    fn cnot_local_equivalence_of_the_twist_gate() {
        let gate = twist_gate(std::f64::consts::FRAC_PI_2);
        let (ok, residual) = cnot_equivalence(&gate);
        assert!(ok, "residual {residual}");
        assert!(residual < 1e-12);
        // entangling power of CNOT and the twist gate agree at 2/9
        assert!((entangling_power(&gate).unwrap() - 2.0 / 9.0).abs() < 1e-12);
    }
}
